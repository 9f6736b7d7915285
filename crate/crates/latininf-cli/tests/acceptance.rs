//! Acceptance suite: one test per criterion, exercising the CLI binary
//! where a command line is part of the criterion and the library elsewhere.
//! Each test prints a single PASS line on success; the test name carries the
//! criterion number.

use latininf::construct::{
    seed_rowcomplete, seed_vatican, verify_immune, BalanceMode, ImmuneReq,
};
use latininf::group::{GroupElement, GroupKernel};
use latininf::index::{IndexKind, IndexSet};
use latininf::ortho::{
    brute_force_scm_search, canonical_transversal, knut_vic_square, scm_cyclic,
    scm_direct_product, scm_elementary_2group, scm_exists_finite_abelian, scm_quotient,
    table_window, theta_from_r_terrace, verify_mutually_orthogonal, verify_scm, MooFamily,
    TableStyle,
};
use latininf::persist;
use latininf::realline;
use latininf::scheduler::{run, GreedyConstruction};
use latininf::square::{
    cayley_window, find_quadrangle_violation, verify_knutvic, verify_latin, verify_orthogonal,
    verify_semivatican_safety, verify_vatican_safety, window_of_first, LatinRegion,
};
use latininf::terrace::{PartialTerrace, TerraceKind};
use num::rational::BigRational;
use num::BigInt;
use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latininf"))
}

fn run_ok(cmd: &mut Command) {
    let output = cmd.output().expect("binary runs");
    assert!(
        output.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn znz_terrace(kind: TerraceKind, group: &str, index: IndexKind) -> PartialTerrace {
    PartialTerrace::new(
        kind,
        GroupKernel::parse(group).unwrap(),
        IndexSet::new(index),
    )
    .unwrap()
}

fn cyclic_cayley(n: u64) -> LatinRegion {
    let kernel = GroupKernel::parse(&format!("Zn:{n}")).unwrap();
    let elems = kernel.elements().unwrap();
    table_window(&kernel, TableStyle::Cayley, None, &elems, &elems).unwrap()
}

#[test]
fn c01_terrace_engine_builds_vatican_safe_window() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t1000.json");
    let start = Instant::now();
    run_ok(bin().args([
        "build-terrace",
        "--group",
        "Z",
        "--index",
        "Z",
        "--kind",
        "T",
        "--steps",
        "1000",
        "--out",
        out.to_str().unwrap(),
    ]));
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(60),
        "build took {elapsed:?}, budget is 60 s"
    );

    let (terrace, cursor) =
        persist::terrace_from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(cursor, 1000);
    let check = terrace.check();
    assert!(check.pass, "from-scratch check: {check}");

    assert!(terrace.len() >= 100);
    let region = cayley_window(&terrace, &window_of_first(&terrace, 100)).unwrap();
    assert_eq!(region.len(), 10_000);
    let latin = verify_latin(&region);
    assert!(latin.pass && latin.witnesses.is_empty(), "{latin}");
    let vatican = verify_vatican_safety(&region);
    assert!(vatican.pass && vatican.witnesses.is_empty(), "{vatican}");
    println!("ACCEPTANCE c01 terrace engine (Z, 1000 steps, 100x100 window): PASS in {elapsed:?}");
}

#[test]
fn c02_all_involution_path_never_binds_square_clash() {
    let mut t = znz_terrace(TerraceKind::T, "E2", IndexKind::Z);
    let log = run(&mut t, 0, 500, false).unwrap();
    assert_eq!(log.records.len(), 500);
    let check = t.check();
    assert!(check.pass, "{check}");
    assert_eq!(
        t.stats().square_clash,
        0,
        "square clash should never bind over E2"
    );
    println!("ACCEPTANCE c02 all-involution path (E2, 500 steps): PASS");
}

#[test]
fn c03_s_terrace_over_q_with_involution_obstruction() {
    let mut t = znz_terrace(TerraceKind::S, "Q", IndexKind::Q);
    run(&mut t, 0, 500, false).unwrap();
    let check = t.check();
    assert!(check.pass, "{check}");
    let region = cayley_window(&t, &window_of_first(&t, 50)).unwrap();
    let semi = verify_semivatican_safety(&region);
    assert!(semi.pass, "{semi}");

    // The involution obstruction: the Z2 Cayley table fails.
    let z2 = cyclic_cayley(2);
    let counterexample = verify_semivatican_safety(&z2);
    assert!(!counterexample.pass, "Z2 Cayley table must fail");
    assert!(!counterexample.witnesses.is_empty());
    println!("ACCEPTANCE c03 S-terrace (Q, 500 steps) + Z2 counterexample: PASS");
}

/// The worked immunization example, frozen from the displayed grid
/// (top row first; row indices run bottom-up).
const IMMUNIZED_GRID: [&str; 15] = [
    ". 15 13 14",
    ". 14 15 13",
    ". 13 14 15",
    "12 . 10 11",
    "11 . 12 10",
    "10 . 11 12",
    "9 7 . 8",
    "8 9 . 7",
    "7 8 . 9",
    "6 4 5 .",
    "5 6 4 .",
    "4 5 6 .",
    "2 0 1 .",
    "1 2 0 .",
    "0 1 2 3",
];

#[test]
fn c04_immunization_matches_worked_example() {
    // Seed: 6-permutation brute force.
    let seed = seed_rowcomplete();
    let seed_report = verify_immune(seed.region(), 3).unwrap();
    assert!(seed_report.pass, "{seed_report}");
    assert_eq!(seed_report.stats["permutations"], 6);

    // Add symbol 3 to row 0: exactly 12 new rows on symbols 4..=15.
    let mut state = seed_rowcomplete();
    let rows_before = state.region().rows().count();
    state.meet(&ImmuneReq::SymbolInRow(3, 0)).unwrap();
    assert_eq!(state.region().rows().count() - rows_before, 12);
    assert_eq!(state.ledger().len(), 4);

    // Cell-exact comparison with the displayed grid.
    let mut expected: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    for (display_row, line) in IMMUNIZED_GRID.iter().enumerate() {
        let row = (14 - display_row) as u64;
        for (col, token) in line.split_whitespace().enumerate() {
            if token != "." {
                expected.insert((row, col as u64), token.parse().unwrap());
            }
        }
    }
    let actual: BTreeMap<(u64, u64), u64> = state
        .region()
        .cells()
        .map(|((r, c), s)| {
            let r = r.rational().numer().to_string().parse().unwrap();
            let c = c.rational().numer().to_string().parse().unwrap();
            let v = match s {
                GroupElement::Nat(v) => *v,
                _ => unreachable!(),
            };
            ((r, c), v)
        })
        .collect();
    assert_eq!(actual, expected, "grid shape must match the worked example");

    // 24-permutation brute force on the immunized region.
    let report = verify_immune(state.region(), 4).unwrap();
    assert!(report.pass, "{report}");
    assert_eq!(report.stats["permutations"], 24);
    println!("ACCEPTANCE c04 immunization worked example (12 rows, symbols 4-15): PASS");
}

#[test]
fn c05_nongroup_vatican_stays_safe_and_nongroup() {
    let mut state = seed_vatican(BalanceMode::Vatican);
    let log = run(&mut state, 0, 200, false).unwrap();
    assert_eq!(log.records.len(), 200);
    let check = state.check();
    assert!(check.pass, "{check}");
    let safety = verify_vatican_safety(state.region());
    assert!(safety.pass, "{safety}");
    let witness = find_quadrangle_violation(state.region(), None).unwrap();
    assert!(
        witness.is_some(),
        "the seed's quadrangle violation must survive 200 steps"
    );
    println!(
        "ACCEPTANCE c05 non-group Vatican (200 steps, {} cells): PASS",
        state.region().len()
    );
}

#[test]
fn c06_scm_criterion_agrees_with_brute_force() {
    let start = Instant::now();
    let cases: Vec<(&str, Vec<u64>)> = vec![
        ("Zn:2", vec![2]),
        ("Zn:3", vec![3]),
        ("Zn:4", vec![4]),
        ("Zn:5", vec![5]),
        ("Zn:6", vec![6]),
        ("Zn:7", vec![7]),
        ("Zn:8", vec![8]),
        ("Zn:9", vec![9]),
        ("prod(Zn:2,Zn:2)", vec![2, 2]),
        ("prod(Zn:2,Zn:4)", vec![2, 4]),
        ("sum(Zn:2,Zn:2,Zn:2)", vec![2, 2, 2]),
        ("prod(Zn:3,Zn:3)", vec![3, 3]),
    ];
    for (spec, factors) in cases {
        let kernel = GroupKernel::parse(spec).unwrap();
        let found = brute_force_scm_search(&kernel, 9).unwrap();
        let claimed = scm_exists_finite_abelian(&factors);
        assert_eq!(
            found.is_some(),
            claimed,
            "criterion vs brute force disagree on {spec}"
        );
        if let Some(mapping) = found {
            assert!(verify_scm(&mapping).pass, "oracle SCM invalid on {spec}");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    println!("ACCEPTANCE c06 SCM criterion vs oracle (12 groups <= order 9): PASS in {elapsed:?}");
}

#[test]
fn c07_scm_compositions() {
    // Direct product Z5 × Z7, exhaustive over 35 elements.
    let five = scm_cyclic(5).unwrap();
    let seven = scm_cyclic(7).unwrap();
    let product = scm_direct_product(&[&five, &seven]).unwrap();
    assert_eq!(product.mapping.len(), 35);
    assert!(verify_scm(&product.mapping).pass);

    // Quotient construction on Z35 with H = <7> ≅ Z5.
    let kernel = GroupKernel::parse("Zn:35").unwrap();
    let subgroup: Vec<GroupElement> = (0..5u64)
        .map(|k| kernel.parse_element(&(7 * k).to_string()).unwrap())
        .collect();
    let reps = canonical_transversal(&kernel, &subgroup).unwrap();
    let theta_h: BTreeMap<GroupElement, GroupElement> = (0..5u64)
        .map(|k| {
            (
                kernel.parse_element(&(7 * k).to_string()).unwrap(),
                kernel.parse_element(&(7 * ((2 * k) % 5)).to_string()).unwrap(),
            )
        })
        .collect();
    let phi: BTreeMap<GroupElement, GroupElement> = (0..7u64)
        .map(|r| {
            (
                kernel.parse_element(&r.to_string()).unwrap(),
                kernel.parse_element(&((2 * r) % 7).to_string()).unwrap(),
            )
        })
        .collect();
    let quotient = scm_quotient(&kernel, &subgroup, &theta_h, &phi, &reps).unwrap();
    assert_eq!(quotient.mapping.len(), 35);
    assert!(verify_scm(&quotient.mapping).pass);

    // Nim-field block of order 16.
    let e2 = scm_elementary_2group(2).unwrap();
    assert_eq!(e2.mapping.len(), 16);
    assert!(verify_scm(&e2.mapping).pass);
    assert_eq!(
        e2.transcript
            .iter()
            .filter(|l| l.contains("bijection verified exhaustively over 16"))
            .count(),
        3
    );
    println!("ACCEPTANCE c07 compositions (product, quotient over Z35; nim block 16): PASS");
}

#[test]
fn c08_moo_family_and_r_terrace_orthomorphisms() {
    // k = 5 family over Z, 500 steps.
    let mut fam = MooFamily::new(GroupKernel::parse("Z").unwrap(), 5).unwrap();
    run(&mut fam, 0, 500, false).unwrap();
    let check = fam.check();
    assert!(check.pass, "η_i / η_ij recomputation: {check}");

    // Pairwise window orthogonality over shared domains.
    let kernel = fam.group().clone();
    let rows: Vec<GroupElement> = (0..6).map(|k| kernel.enumerate(k).unwrap()).collect();
    for i in 0..5 {
        for j in (i + 1)..5 {
            let shared: Vec<GroupElement> = fam
                .theta(i)
                .keys()
                .filter(|g| fam.theta(j).contains_key(*g))
                .take(8)
                .cloned()
                .collect();
            assert!(shared.len() >= 4, "members {i},{j} share too little domain");
            let mi = fam.member(i);
            let mj = fam.member(j);
            let wi = table_window(&kernel, TableStyle::Theta, Some(&mi), &rows, &shared).unwrap();
            let wj = table_window(&kernel, TableStyle::Theta, Some(&mj), &rows, &shared).unwrap();
            let orth = verify_orthogonal(&wi, &wj).unwrap();
            assert!(orth.pass, "windows of members {i},{j}: {orth}");
        }
    }

    // θ_d from a 300-step R-terrace, pairwise orthogonal for d = 1, 2, 3.
    let mut t = znz_terrace(TerraceKind::R, "Z", IndexKind::Z);
    run(&mut t, 0, 300, false).unwrap();
    assert!(t.check().pass);
    let thetas: Vec<_> = (1..=3)
        .map(|d| theta_from_r_terrace(&t, &BigRational::from(BigInt::from(d))).unwrap())
        .collect();
    for i in 0..3 {
        for j in (i + 1)..3 {
            let report = verify_mutually_orthogonal(&thetas[i], &thetas[j]);
            assert!(report.pass, "θ_{} vs θ_{}: {report}", i + 1, j + 1);
            assert!(report.stats["shared_domain"] > 10);
        }
    }
    println!("ACCEPTANCE c08 MOO family (k=5) and R-terrace orthomorphisms: PASS");
}

#[test]
fn c09_knut_vic_iff_coprime_to_six() {
    for n in 1..=49u64 {
        if n % 2 != 0 && n % 3 != 0 {
            let cert = scm_cyclic(n).unwrap();
            let square = knut_vic_square(&cert).unwrap();
            let report = verify_knutvic(&square, Some(n));
            assert!(report.pass, "order {n}: {report}");
        }
    }
    for n in [2u64, 3, 4, 6, 8, 9] {
        let report = verify_knutvic(&cyclic_cayley(n), Some(n));
        assert!(!report.pass, "cyclic table of order {n} should fail");
    }

    // L_θ orthogonal to both the Cayley table and the normal
    // multiplication table of Z7.
    let kernel = GroupKernel::parse("Zn:7").unwrap();
    let elems = kernel.elements().unwrap();
    let cert = scm_cyclic(7).unwrap();
    let ltheta =
        table_window(&kernel, TableStyle::Theta, Some(&cert.mapping), &elems, &elems).unwrap();
    let cayley = table_window(&kernel, TableStyle::Cayley, None, &elems, &elems).unwrap();
    let normal = table_window(&kernel, TableStyle::NormalMult, None, &elems, &elems).unwrap();
    assert!(verify_orthogonal(&ltheta, &cayley).unwrap().pass);
    assert!(verify_orthogonal(&ltheta, &normal).unwrap().pass);
    println!("ACCEPTANCE c09 Knut Vic (n <= 49 coprime to 6; failures at 2,3,4,6,8,9): PASS");
}

/// Deterministic pseudo-random stream for the probe sweep.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let unit = (self.next() >> 11) as f64 / (1u64 << 53) as f64;
        lo + unit * (hi - lo)
    }
}

#[test]
fn c10_real_line_semivatican() {
    let e = std::f64::consts::E;
    assert!((realline::a(1.0) - (e - 1.0)).abs() <= 1e-12);
    assert!((realline::a(-1.0) + std::f64::consts::LN_2).abs() <= 1e-12);

    let mut rng = SplitMix64(0x1a71_1f5e_0001);
    for probe in 0..100 {
        let x = rng.uniform(-3.0, 3.0);
        let y = x + rng.uniform(0.05, 2.5);
        let d = rng.uniform(0.1, 3.0);
        let result = realline::locate_pair(x, y, d, 1e-10, realline::ProbeAxis::Row).unwrap();
        assert!(result.in_order, "probe {probe}: y > x must be in order");
        assert!(
            result.residuals.iter().all(|r| *r <= 1e-10),
            "probe {probe}: residuals {:?}",
            result.residuals
        );
        // Uniqueness: a rerun at tighter tolerance converges to the same
        // cell within 10x the tolerance.
        let again = realline::locate_pair(x, y, d, 1e-12, realline::ProbeAxis::Row).unwrap();
        assert!((result.row.unwrap() - again.row.unwrap()).abs() <= 1e-9);
        assert!((result.col.unwrap() - again.col.unwrap()).abs() <= 1e-9);
    }

    let (pass, violations, _) = realline::sampled_window_semivatican(50, -1.5, 0.0625, 1e-10);
    assert!(pass, "sampled 50x50 window: {violations} violations");
    println!("ACCEPTANCE c10 real line (fixed values, 100 probes, 50x50 window): PASS");
}

fn files_equal(a: &Path, b: &Path) -> bool {
    std::fs::read(a).unwrap() == std::fs::read(b).unwrap()
}

#[test]
fn c11_determinism_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let s = |path: &Path| path.to_str().unwrap().to_string();

    // Rerunning every builder is byte-identical.
    let builders: Vec<Vec<String>> = vec![
        vec![
            "build-terrace".into(),
            "--group".into(),
            "Z".into(),
            "--index".into(),
            "Z".into(),
            "--kind".into(),
            "T".into(),
            "--steps".into(),
            "120".into(),
        ],
        vec!["build-nonrowcomplete".into(), "--steps".into(), "40".into()],
        vec!["build-nongroup-vatican".into(), "--steps".into(), "60".into()],
        vec![
            "scm".into(),
            "greedy".into(),
            "--group".into(),
            "Z".into(),
            "--steps".into(),
            "80".into(),
        ],
        vec![
            "moo".into(),
            "--group".into(),
            "Z".into(),
            "--k".into(),
            "3".into(),
            "--steps".into(),
            "80".into(),
        ],
    ];
    for (idx, args) in builders.iter().enumerate() {
        let out1 = p(&format!("rerun_{idx}_a.json"));
        let out2 = p(&format!("rerun_{idx}_b.json"));
        for out in [&out1, &out2] {
            let mut full = args.clone();
            full.push("--out".into());
            full.push(s(out));
            run_ok(bin().args(&full));
        }
        assert!(files_equal(&out1, &out2), "builder rerun differs: {args:?}");
    }

    // Resume-after-N equals straight-through N+M for (100,100) and (1,499).
    for (n, m) in [(100u64, 100u64), (1, 499)] {
        let straight = p(&format!("straight_{n}_{m}.json"));
        run_ok(bin().args([
            "build-terrace",
            "--group",
            "Z",
            "--index",
            "Z",
            "--kind",
            "T",
            "--steps",
            &(n + m).to_string(),
            "--out",
            straight.to_str().unwrap(),
        ]));
        let first = p(&format!("first_{n}.json"));
        run_ok(bin().args([
            "build-terrace",
            "--group",
            "Z",
            "--index",
            "Z",
            "--kind",
            "T",
            "--steps",
            &n.to_string(),
            "--out",
            first.to_str().unwrap(),
        ]));
        let resumed = p(&format!("resumed_{n}_{m}.json"));
        run_ok(bin().args([
            "build-terrace",
            "--resume",
            first.to_str().unwrap(),
            "--steps",
            &m.to_string(),
            "--out",
            resumed.to_str().unwrap(),
        ]));
        assert!(
            files_equal(&straight, &resumed),
            "resume ({n}, {m}) differs from straight-through"
        );
    }

    // Every artifact reloads to a state whose checker passes and whose
    // re-serialization is byte-identical.
    let terrace_text = std::fs::read_to_string(p("straight_100_100.json")).unwrap();
    let (terrace, cursor) = persist::terrace_from_json(&terrace_text).unwrap();
    assert!(terrace.check().pass);
    assert_eq!(persist::terrace_to_json(&terrace, cursor), terrace_text);

    let immune_text = std::fs::read_to_string(p("rerun_1_a.json")).unwrap();
    let (immune, cursor) = persist::immune_from_json(&immune_text).unwrap();
    assert!(immune.check().pass);
    assert_eq!(persist::immune_to_json(&immune, cursor), immune_text);

    let vat_text = std::fs::read_to_string(p("rerun_2_a.json")).unwrap();
    let (vat, cursor) = persist::vatican_from_json(&vat_text).unwrap();
    assert!(vat.check().pass);
    assert_eq!(persist::vatican_to_json(&vat, cursor), vat_text);

    let scm_text = std::fs::read_to_string(p("rerun_3_a.json")).unwrap();
    let (scm, cursor) = persist::mapping_from_json(&scm_text).unwrap();
    assert!(scm.check_bookkeeping().is_ok());
    assert_eq!(persist::mapping_to_json(&scm, cursor), scm_text);

    let moo_text = std::fs::read_to_string(p("rerun_4_a.json")).unwrap();
    let (moo, cursor) = persist::moo_from_json(&moo_text).unwrap();
    assert!(moo.check().pass);
    assert_eq!(persist::moo_to_json(&moo, cursor), moo_text);

    println!("ACCEPTANCE c11 determinism, resume equivalence, persistence round-trips: PASS");
}

#[test]
fn window_csv_survives_a_verify_round_trip() {
    // Supporting check for the window/verify surface used by criterion 1.
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    let w = dir.path().join("w.csv");
    run_ok(bin().args([
        "build-terrace",
        "--group",
        "Z",
        "--index",
        "Z",
        "--kind",
        "T",
        "--steps",
        "150",
        "--out",
        t.to_str().unwrap(),
    ]));
    run_ok(bin().args([
        "window",
        "--terrace",
        t.to_str().unwrap(),
        "--size",
        "25",
        "--out",
        w.to_str().unwrap(),
    ]));
    for property in ["latin", "vatican"] {
        run_ok(bin().args([
            "verify",
            property,
            "--region",
            w.to_str().unwrap(),
            "--universe",
            "Z",
        ]));
    }
}
