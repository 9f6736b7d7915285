//! Property tests: randomized operation sequences against the from-scratch
//! checkers, and round-trip invariants for the persistence formats.

use latininf::group::{GroupElement, GroupKernel};
use latininf::index::{IndexKind, IndexPoint, IndexSet};
use latininf::scheduler::{fair_pair, fair_unpair, run};
use latininf::square::{parse_csv, render, LatinRegion, RenderFormat, SymbolUniverse};
use latininf::terrace::{PartialTerrace, TerraceKind};
use num::BigInt;
use proptest::prelude::*;

proptest! {
    /// Any sequence of assignment attempts (legal or not) leaves a terrace
    /// whose incremental bookkeeping matches the from-scratch recomputation.
    #[test]
    fn terrace_assign_sequences_stay_consistent(
        ops in prop::collection::vec((-12i64..12, -20i64..20), 1..40),
        kind_pick in 0..3usize,
    ) {
        let (kind, group_spec) = match kind_pick {
            0 => (TerraceKind::T, "Z"),
            1 => (TerraceKind::R, "Z"),
            _ => (TerraceKind::S, "Q"),
        };
        let mut t = PartialTerrace::new(
            kind,
            GroupKernel::parse(group_spec).unwrap(),
            IndexSet::new(IndexKind::Z),
        )
        .unwrap();
        let mut successes = 0;
        for (i, v) in ops {
            let point = IndexPoint::from_integer(i);
            let value = match group_spec {
                "Q" => t.group().parse_element(&v.to_string()).unwrap(),
                _ => GroupElement::Int(BigInt::from(v)),
            };
            if t.assign(point, value).is_ok() {
                successes += 1;
            }
            let report = t.check();
            prop_assert!(report.pass, "after op ({i}, {v}): {report}");
        }
        prop_assert_eq!(t.len(), successes);
    }

    /// Scheduler runs satisfy every requirement up to the cursor, states
    /// grow monotonically (no assignment is ever retracted), and the state
    /// always passes the full checker.
    #[test]
    fn scheduled_terraces_verify(steps in 1u64..60) {
        let mut t = PartialTerrace::new(
            TerraceKind::T,
            GroupKernel::parse("Z").unwrap(),
            IndexSet::new(IndexKind::Z),
        )
        .unwrap();
        let mut previous: Vec<(IndexPoint, GroupElement)> = Vec::new();
        for step in 0..steps {
            let log = run(&mut t, step, 1, false).unwrap();
            prop_assert!(log.max_growth() <= 2);
            for (i, g) in &previous {
                prop_assert_eq!(t.value_at(i), Some(g), "assignment retracted");
            }
            previous = t.assignments().map(|(i, g)| (i.clone(), g.clone())).collect();
        }
        prop_assert!(t.check().pass);
    }

    /// CSV and JSON renderings of random Latin regions parse back to
    /// byte-identical renderings.
    #[test]
    fn region_render_round_trips(cells in prop::collection::vec((0u64..8, 0u64..8, 0u64..16), 0..40)) {
        let mut region = LatinRegion::new(SymbolUniverse::Naturals);
        for (r, c, s) in cells {
            // Keep only inserts that respect Latin safety.
            let _ = region.insert(
                IndexPoint::from_integer(r as i64),
                IndexPoint::from_integer(c as i64),
                GroupElement::Nat(s),
            );
        }
        let csv_text = render(&region, RenderFormat::Csv);
        let back = parse_csv(&csv_text, SymbolUniverse::Naturals).unwrap();
        prop_assert_eq!(render(&back, RenderFormat::Csv), csv_text);

        let json_text = render(&region, RenderFormat::Json);
        let back = latininf::persist::region_from_json(&json_text).unwrap();
        prop_assert_eq!(render(&back, RenderFormat::Json), json_text);
    }

    /// The fair interleave is a bijection between merged positions and
    /// (stream, element) pairs, within the documented fairness bound.
    #[test]
    fn fair_interleave_bijection(m in 1usize..9, pos in 0u64..5000) {
        let (j, k) = fair_unpair(pos, m);
        prop_assert!(j < m);
        prop_assert_eq!(fair_pair(j, k, m), pos);
        prop_assert!(pos <= (j as u64 + k + 1).pow(2));
    }

    /// Group element text codecs round-trip on enumerated elements.
    #[test]
    fn element_codec_round_trips(spec_pick in 0..5usize, k in 0u64..3000) {
        let spec = ["Z", "Q", "E2", "sum(Z,E2)", "prod(Zn:3,Q)"][spec_pick];
        let kernel = GroupKernel::parse(spec).unwrap();
        let e = kernel.enumerate(k).unwrap();
        let text = kernel.render_element(&e);
        let back = kernel.parse_element(&text).unwrap();
        prop_assert_eq!(back, e);
    }
}
