//! Orthomorphisms, complete mappings, strong complete mappings, mutually
//! orthogonal families, their compositions, and Knut Vic designs.
//!
//! For a bijection θ of a group, η: g ↦ g⁻¹θ(g) bijective makes θ an
//! orthomorphism, ζ: g ↦ gθ(g) bijective makes it a complete mapping, and
//! both together a strong complete mapping (SCM). Partial mappings enforce
//! the injectivity half of whichever companions their kind tracks; finite
//! total mappings are verified exhaustively.

use crate::group::{nim_mul, GroupElement, GroupError, GroupKernel};
use crate::index::IndexPoint;
use crate::report::{VerificationReport, Witness};
use crate::scheduler::{fair_unpair, GreedyConstruction};
use crate::square::{LatinRegion, SymbolUniverse};
use crate::terrace::{PartialTerrace, TerraceKind};
use num::bigint::BigInt;
use num::rational::BigRational;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use thiserror::Error;

/// Candidates tried per first-fit search before giving up loudly.
const SEARCH_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum OrthoError {
    #[error("group {0} is not squareful")]
    NotSquareful(String),
    #[error("order {0} is not coprime to 6")]
    BadOrder(u64),
    #[error("group order {order} exceeds the brute-force cap {cap}")]
    CapExceeded { order: u128, cap: u64 },
    #[error("no parts given")]
    EmptyParts,
    #[error("bad transversal: {0}")]
    BadTransversal(String),
    #[error("block parameter m={0} too large (max 4)")]
    BlockTooLarge(u32),
    #[error("operation needs a finite group, got {0}")]
    NotFinite(String),
    #[error("greedy builder needs an infinite group, got {0}")]
    InfiniteRequired(String),
    #[error("mapping is not total over its group")]
    NotTotal,
    #[error("point {0} is already in the domain")]
    DomainOccupied(String),
    #[error("{companion} value {value} would repeat")]
    CompanionClash { companion: &'static str, value: String },
    #[error("extension failed: {0}")]
    ExtensionFailed(String),
    #[error("expected integer-valued elements for grid coordinates, got {0}")]
    NonIntegerCoordinate(String),
    #[error("part is not a verified strong complete mapping: {0}")]
    BadPart(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Region(#[from] crate::square::RegionError),
}

/// Which companion bijections a partial mapping enforces on insertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingKind {
    Orthomorphism,
    CompleteMapping,
    StrongComplete,
}

impl MappingKind {
    fn tracks_eta(&self) -> bool {
        matches!(self, MappingKind::Orthomorphism | MappingKind::StrongComplete)
    }

    fn tracks_zeta(&self) -> bool {
        matches!(self, MappingKind::CompleteMapping | MappingKind::StrongComplete)
    }

    pub fn render(&self) -> &'static str {
        match self {
            MappingKind::Orthomorphism => "orthomorphism",
            MappingKind::CompleteMapping => "complete-mapping",
            MappingKind::StrongComplete => "scm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "orthomorphism" => Some(MappingKind::Orthomorphism),
            "complete-mapping" => Some(MappingKind::CompleteMapping),
            "scm" => Some(MappingKind::StrongComplete),
            _ => None,
        }
    }
}

/// A partial injective mapping θ: G ⇀ G with tracked companion ranges.
#[derive(Debug, Clone)]
pub struct PartialMapping {
    group: GroupKernel,
    kind: MappingKind,
    theta: BTreeMap<GroupElement, GroupElement>,
    ran_theta: BTreeSet<GroupElement>,
    ran_eta: BTreeSet<GroupElement>,
    ran_zeta: BTreeSet<GroupElement>,
}

impl PartialMapping {
    pub fn new(group: GroupKernel, kind: MappingKind) -> Self {
        PartialMapping {
            group,
            kind,
            theta: BTreeMap::new(),
            ran_theta: BTreeSet::new(),
            ran_eta: BTreeSet::new(),
            ran_zeta: BTreeSet::new(),
        }
    }

    pub fn group(&self) -> &GroupKernel {
        &self.group
    }

    pub fn kind(&self) -> MappingKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&GroupElement, &GroupElement)> {
        self.theta.iter()
    }

    pub fn image_of(&self, g: &GroupElement) -> Option<&GroupElement> {
        self.theta.get(g)
    }

    pub fn domain_contains(&self, g: &GroupElement) -> bool {
        self.theta.contains_key(g)
    }

    pub fn range_contains(&self, h: &GroupElement) -> bool {
        self.ran_theta.contains(h)
    }

    pub fn eta_contains(&self, h: &GroupElement) -> bool {
        self.ran_eta.contains(h)
    }

    pub fn zeta_contains(&self, h: &GroupElement) -> bool {
        self.ran_zeta.contains(h)
    }

    /// Set θ(g) = h, enforcing injectivity of θ and of the tracked
    /// companions; fails without mutating.
    pub fn insert(&mut self, g: GroupElement, h: GroupElement) -> Result<(), OrthoError> {
        self.group.validate(&g)?;
        self.group.validate(&h)?;
        if self.theta.contains_key(&g) {
            return Err(OrthoError::DomainOccupied(g.to_string()));
        }
        if self.ran_theta.contains(&h) {
            return Err(OrthoError::CompanionClash {
                companion: "theta",
                value: h.to_string(),
            });
        }
        let eta = self.group.diff(&g, &h)?;
        if self.kind.tracks_eta() && self.ran_eta.contains(&eta) {
            return Err(OrthoError::CompanionClash {
                companion: "eta",
                value: eta.to_string(),
            });
        }
        let zeta = self.group.op(&g, &h)?;
        if self.kind.tracks_zeta() && self.ran_zeta.contains(&zeta) {
            return Err(OrthoError::CompanionClash {
                companion: "zeta",
                value: zeta.to_string(),
            });
        }
        self.ran_theta.insert(h.clone());
        if self.kind.tracks_eta() {
            self.ran_eta.insert(eta);
        }
        if self.kind.tracks_zeta() {
            self.ran_zeta.insert(zeta);
        }
        self.theta.insert(g, h);
        Ok(())
    }

    pub fn is_total(&self) -> bool {
        match self.group.order() {
            Some(order) => self.theta.len() as u128 == order,
            None => false,
        }
    }

    /// Differential check of the tracked ranges against recomputation.
    pub fn check_bookkeeping(&self) -> Result<(), Vec<String>> {
        let mut problems = Vec::new();
        let mut theta_set = BTreeSet::new();
        let mut eta_set = BTreeSet::new();
        let mut zeta_set = BTreeSet::new();
        for (g, h) in &self.theta {
            theta_set.insert(h.clone());
            eta_set.insert(self.group.diff(g, h).expect("validated"));
            zeta_set.insert(self.group.op(g, h).expect("validated"));
        }
        if theta_set != self.ran_theta {
            problems.push("tracked ran θ differs from recomputation".into());
        }
        if self.kind.tracks_eta() && eta_set != self.ran_eta {
            problems.push("tracked ran η differs from recomputation".into());
        }
        if self.kind.tracks_zeta() && zeta_set != self.ran_zeta {
            problems.push("tracked ran ζ differs from recomputation".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }
}

/// Shared engine for the three verification flavors: recomputes injectivity
/// of θ and the requested companions from scratch; for total mappings over
/// finite groups the checks are exhaustive bijectivity.
fn verify_mapping(m: &PartialMapping, property: &str, eta: bool, zeta: bool) -> VerificationReport {
    let mut report = VerificationReport::new(property);
    let mut theta_seen: BTreeMap<GroupElement, &GroupElement> = BTreeMap::new();
    let mut eta_seen: BTreeMap<GroupElement, &GroupElement> = BTreeMap::new();
    let mut zeta_seen: BTreeMap<GroupElement, &GroupElement> = BTreeMap::new();
    for (g, h) in &m.theta {
        if let Some(prev) = theta_seen.insert(h.clone(), g) {
            report.fail(Witness::new(
                "theta-repeat",
                format!("θ({prev}) = θ({g}) = {h}"),
            ));
        }
        if eta {
            let v = m.group.diff(g, h).expect("validated");
            if let Some(prev) = eta_seen.insert(v.clone(), g) {
                report.fail(Witness::new(
                    "eta-repeat",
                    format!("η({prev}) = η({g}) = {v}"),
                ));
            }
        }
        if zeta {
            let v = m.group.op(g, h).expect("validated");
            if let Some(prev) = zeta_seen.insert(v.clone(), g) {
                report.fail(Witness::new(
                    "zeta-repeat",
                    format!("ζ({prev}) = ζ({g}) = {v}"),
                ));
            }
        }
    }
    report.stat("domain", m.theta.len() as u64);
    if let Some(order) = m.group.order() {
        if m.theta.len() as u128 == order {
            // Total over a finite group: injective maps are bijections, so
            // exhaustiveness reduces to totality, which we record.
            report.stat("exhaustive_over", order as u64);
        } else {
            report.stat("partial_of", order as u64);
        }
    }
    report
}

pub fn verify_orthomorphism(m: &PartialMapping) -> VerificationReport {
    verify_mapping(m, "orthomorphism", true, false)
}

pub fn verify_complete_mapping(m: &PartialMapping) -> VerificationReport {
    verify_mapping(m, "complete-mapping", false, true)
}

pub fn verify_scm(m: &PartialMapping) -> VerificationReport {
    verify_mapping(m, "scm", true, true)
}

/// Orthogonality of two partial mappings over the same group: injectivity
/// of g ↦ θ(g)⁻¹φ(g) on the shared domain.
pub fn verify_mutually_orthogonal(a: &PartialMapping, b: &PartialMapping) -> VerificationReport {
    let mut report = VerificationReport::new("mutually-orthogonal");
    let mut seen: BTreeMap<GroupElement, &GroupElement> = BTreeMap::new();
    let mut shared = 0u64;
    for (g, ha) in &a.theta {
        if let Some(hb) = b.theta.get(g) {
            shared += 1;
            let v = a.group.diff(ha, hb).expect("validated");
            if let Some(prev) = seen.insert(v.clone(), g) {
                report.fail(Witness::new(
                    "orthogonality-repeat",
                    format!("θ⁻¹φ takes {v} at both {prev} and {g}"),
                ));
            }
        }
    }
    report.stat("shared_domain", shared);
    report
}

/// Exhaustive certificate for a total SCM over a finite group (or an
/// explicitly given finite closed domain such as a nim-field block).
#[derive(Debug, Clone)]
pub struct ScmCertificate {
    pub group: String,
    pub mapping: PartialMapping,
    pub transcript: Vec<String>,
}

/// Certify a total SCM over a finite group by exhaustive check.
pub fn certify_scm(mapping: PartialMapping) -> Result<ScmCertificate, OrthoError> {
    let order = mapping
        .group
        .order()
        .ok_or_else(|| OrthoError::NotFinite(mapping.group.render()))?;
    if mapping.theta.len() as u128 != order {
        return Err(OrthoError::NotTotal);
    }
    certify_on_domain(mapping, None)
}

/// Certify an SCM on an explicit finite domain that must be closed under
/// θ, η and ζ (all three must be bijections of the domain).
pub fn certify_on_domain(
    mapping: PartialMapping,
    domain: Option<Vec<GroupElement>>,
) -> Result<ScmCertificate, OrthoError> {
    let domain: BTreeSet<GroupElement> = match domain {
        Some(d) => d.into_iter().collect(),
        None => mapping.theta.keys().cloned().collect(),
    };
    if domain.len() != mapping.theta.len()
        || !mapping.theta.keys().all(|g| domain.contains(g))
    {
        return Err(OrthoError::BadPart(
            "domain does not match the mapping".into(),
        ));
    }
    let mut transcript = Vec::new();
    let images: [(&str, BTreeSet<GroupElement>); 3] = [
        ("theta", mapping.theta.values().cloned().collect()),
        (
            "eta",
            mapping
                .theta
                .iter()
                .map(|(g, h)| mapping.group.diff(g, h).expect("validated"))
                .collect(),
        ),
        (
            "zeta",
            mapping
                .theta
                .iter()
                .map(|(g, h)| mapping.group.op(g, h).expect("validated"))
                .collect(),
        ),
    ];
    for (name, image) in images {
        if image != domain {
            return Err(OrthoError::BadPart(format!(
                "{name} is not a bijection of the {}-element domain",
                domain.len()
            )));
        }
        transcript.push(format!(
            "{name}: bijection verified exhaustively over {} elements",
            domain.len()
        ));
    }
    Ok(ScmCertificate {
        group: mapping.group.render(),
        mapping,
        transcript,
    })
}

/// θ(x) = 2x on Z_n, an SCM exactly when gcd(n, 6) = 1.
pub fn scm_cyclic(n: u64) -> Result<ScmCertificate, OrthoError> {
    if gcd(n, 6) != 1 {
        return Err(OrthoError::BadOrder(n));
    }
    let kernel = GroupKernel::parse(&format!("Zn:{n}"))?;
    let mut mapping = PartialMapping::new(kernel.clone(), MappingKind::StrongComplete);
    for x in kernel.elements()? {
        let dbl = kernel.op(&x, &x)?;
        mapping.insert(x, dbl)?;
    }
    certify_scm(mapping)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Structural criterion for finite abelian groups given by invariant
/// factors: an SCM exists iff the Sylow 2-subgroup is trivial or non-cyclic
/// and the Sylow 3-subgroup is trivial or non-cyclic.
pub fn scm_exists_finite_abelian(invariant_factors: &[u64]) -> bool {
    let count_div = |p: u64| invariant_factors.iter().filter(|n| *n % p == 0).count();
    count_div(2) != 1 && count_div(3) != 1
}

/// Independent oracle: exhaustive backtracking search over all candidate
/// bijections of a finite group, returning the first SCM in enumeration
/// order, or `None` when the group has no SCM.
pub fn brute_force_scm_search(
    kernel: &GroupKernel,
    cap: u64,
) -> Result<Option<PartialMapping>, OrthoError> {
    let order = kernel
        .order()
        .ok_or_else(|| OrthoError::NotFinite(kernel.render()))?;
    if order > cap as u128 {
        return Err(OrthoError::CapExceeded { order, cap });
    }
    let elems = kernel.elements()?;

    struct Search<'a> {
        kernel: &'a GroupKernel,
        elems: &'a [GroupElement],
        used_theta: BTreeSet<GroupElement>,
        used_eta: BTreeSet<GroupElement>,
        used_zeta: BTreeSet<GroupElement>,
        assignment: Vec<GroupElement>,
    }

    impl Search<'_> {
        fn go(&mut self, depth: usize) -> bool {
            if depth == self.elems.len() {
                return true;
            }
            let g = &self.elems[depth];
            for h in self.elems {
                if self.used_theta.contains(h) {
                    continue;
                }
                let eta = self.kernel.diff(g, h).expect("validated");
                if self.used_eta.contains(&eta) {
                    continue;
                }
                let zeta = self.kernel.op(g, h).expect("validated");
                if self.used_zeta.contains(&zeta) {
                    continue;
                }
                self.used_theta.insert(h.clone());
                self.used_eta.insert(eta.clone());
                self.used_zeta.insert(zeta.clone());
                self.assignment.push(h.clone());
                if self.go(depth + 1) {
                    return true;
                }
                self.assignment.pop();
                self.used_theta.remove(h);
                self.used_eta.remove(&eta);
                self.used_zeta.remove(&zeta);
            }
            false
        }
    }

    let mut search = Search {
        kernel,
        elems: &elems,
        used_theta: BTreeSet::new(),
        used_eta: BTreeSet::new(),
        used_zeta: BTreeSet::new(),
        assignment: Vec::new(),
    };
    if search.go(0) {
        let mut mapping = PartialMapping::new(kernel.clone(), MappingKind::StrongComplete);
        for (g, h) in elems.iter().zip(search.assignment) {
            mapping.insert(g.clone(), h)?;
        }
        Ok(Some(mapping))
    } else {
        Ok(None)
    }
}

/// Componentwise SCM of a direct product: φ(∏ g_i) = ∏ φ_i(g_i).
/// One part passes through unchanged; more parts fold into nested binary
/// products matching the `prod(a,b)` descriptor.
pub fn scm_direct_product(parts: &[&ScmCertificate]) -> Result<ScmCertificate, OrthoError> {
    compose_parts(parts, false)
}

/// SCM of a direct sum: each part is first normalized to fix the identity
/// (φ'_i(x) = φ_i(x)·φ_i(1)⁻¹), then applied componentwise over the n-ary
/// `sum(...)` group.
pub fn scm_direct_sum(parts: &[&ScmCertificate]) -> Result<ScmCertificate, OrthoError> {
    compose_parts(parts, true)
}

fn normalize_fix_identity(part: &PartialMapping) -> Result<PartialMapping, OrthoError> {
    let kernel = part.group.clone();
    let id = kernel.identity();
    let at_id = part
        .theta
        .get(&id)
        .ok_or(OrthoError::NotTotal)?
        .clone();
    let shift = kernel.inv(&at_id)?;
    let mut out = PartialMapping::new(kernel.clone(), MappingKind::StrongComplete);
    for (g, h) in &part.theta {
        out.insert(g.clone(), kernel.op(h, &shift)?)?;
    }
    Ok(out)
}

fn compose_parts(parts: &[&ScmCertificate], sum: bool) -> Result<ScmCertificate, OrthoError> {
    if parts.is_empty() {
        return Err(OrthoError::EmptyParts);
    }
    let normalized: Vec<PartialMapping> = if sum {
        parts
            .iter()
            .map(|p| normalize_fix_identity(&p.mapping))
            .collect::<Result<_, _>>()?
    } else {
        parts.iter().map(|p| p.mapping.clone()).collect()
    };
    if normalized.len() == 1 {
        let single = normalized.into_iter().next().unwrap();
        let domain: Vec<GroupElement> = single.theta.keys().cloned().collect();
        return certify_on_domain(single, Some(domain));
    }
    let spec = if sum {
        format!(
            "sum({})",
            normalized
                .iter()
                .map(|m| m.group.render())
                .collect::<Vec<_>>()
                .join(",")
        )
    } else {
        normalized
            .iter()
            .map(|m| m.group.render())
            .rev()
            .reduce(|acc, d| format!("prod({d},{acc})"))
            .unwrap()
    };
    let kernel = GroupKernel::parse(&spec)?;
    let mut mapping = PartialMapping::new(kernel.clone(), MappingKind::StrongComplete);
    // The composite domain is the cartesian product of the part domains
    // (the whole group when every part is total over a finite group).
    let mut domain: Vec<GroupElement> = vec![];
    build_product_domain(&normalized, sum, &mut vec![], &mut domain);
    for g in &domain {
        let h = apply_componentwise(g, &normalized, sum, &kernel)?;
        mapping.insert(g.clone(), h)?;
    }
    // Parts on closed domains (finite groups, field blocks) stay closed
    // componentwise, so the composite certifies exhaustively on its domain.
    certify_on_domain(mapping, Some(domain))
}

/// All tuples over the part domains, in part-major enumeration order;
/// `flat_sum` yields flat tuples, otherwise right-nested pairs.
fn build_product_domain(
    parts: &[PartialMapping],
    flat_sum: bool,
    prefix: &mut Vec<GroupElement>,
    out: &mut Vec<GroupElement>,
) {
    if parts.is_empty() {
        unreachable!("compose_parts handles the empty case");
    }
    if parts.len() == 1 {
        for g in parts[0].theta.keys() {
            if flat_sum {
                let mut tuple = prefix.clone();
                tuple.push(g.clone());
                out.push(GroupElement::Tuple(tuple));
            } else {
                let mut elem = g.clone();
                for p in prefix.iter().rev() {
                    elem = GroupElement::Tuple(vec![p.clone(), elem]);
                }
                out.push(elem);
            }
        }
        return;
    }
    for g in parts[0].theta.keys() {
        prefix.push(g.clone());
        build_product_domain(&parts[1..], flat_sum, prefix, out);
        prefix.pop();
    }
}

/// Map a (possibly nested) tuple element through the per-part mappings.
fn apply_componentwise(
    g: &GroupElement,
    parts: &[PartialMapping],
    flat_sum: bool,
    _kernel: &GroupKernel,
) -> Result<GroupElement, OrthoError> {
    fn image(part: &PartialMapping, x: &GroupElement) -> Result<GroupElement, OrthoError> {
        part.theta
            .get(x)
            .cloned()
            .ok_or_else(|| OrthoError::BadPart(format!("{x} missing from part domain")))
    }
    if flat_sum {
        // sum(...) elements are flat tuples aligned with the parts.
        match g {
            GroupElement::Tuple(xs) if xs.len() == parts.len() => Ok(GroupElement::Tuple(
                parts
                    .iter()
                    .zip(xs)
                    .map(|(p, x)| image(p, x))
                    .collect::<Result<_, _>>()?,
            )),
            _ => Err(OrthoError::BadPart("element shape mismatch".into())),
        }
    } else {
        // prod(a, prod(b, ...)) elements are right-nested pairs.
        fn walk(g: &GroupElement, parts: &[PartialMapping]) -> Result<GroupElement, OrthoError> {
            if parts.len() == 1 {
                return image(&parts[0], g);
            }
            match g {
                GroupElement::Tuple(xs) if xs.len() == 2 => Ok(GroupElement::Tuple(vec![
                    image(&parts[0], &xs[0])?,
                    walk(&xs[1], &parts[1..])?,
                ])),
                _ => Err(OrthoError::BadPart("element shape mismatch".into())),
            }
        }
        walk(g, parts)
    }
}

/// Quotient-group SCM: given an SCM θ of a subgroup H of finite abelian G,
/// an SCM φ of G/H presented on a transversal (reps → reps), build
/// β(g_i + h) = φ(g_i + H) + θ(h) and certify it exhaustively.
pub fn scm_quotient(
    kernel: &GroupKernel,
    subgroup: &[GroupElement],
    theta_h: &BTreeMap<GroupElement, GroupElement>,
    phi_reps: &BTreeMap<GroupElement, GroupElement>,
    reps: &[GroupElement],
) -> Result<ScmCertificate, OrthoError> {
    let order = kernel
        .order()
        .ok_or_else(|| OrthoError::NotFinite(kernel.render()))? as u64;
    let h_set: BTreeSet<&GroupElement> = subgroup.iter().collect();
    // Subgroup sanity.
    if !h_set.contains(&kernel.identity()) {
        return Err(OrthoError::BadPart("subgroup lacks the identity".into()));
    }
    for a in subgroup {
        for b in subgroup {
            if !h_set.contains(&kernel.op(a, b)?) {
                return Err(OrthoError::BadPart(format!(
                    "subgroup not closed: {a} + {b} escapes"
                )));
            }
        }
    }
    // The transversal must decompose G uniquely as rep + h.
    if reps.len() * subgroup.len() != order as usize {
        return Err(OrthoError::BadTransversal(format!(
            "{} reps × {} subgroup elements ≠ order {order}",
            reps.len(),
            subgroup.len()
        )));
    }
    let mut decompose: HashMap<GroupElement, (GroupElement, GroupElement)> = HashMap::new();
    for r in reps {
        for h in subgroup {
            let g = kernel.op(r, h)?;
            if decompose.insert(g, (r.clone(), h.clone())).is_some() {
                return Err(OrthoError::BadTransversal(
                    "two rep + subgroup decompositions collide".into(),
                ));
            }
        }
    }
    if decompose.len() != order as usize {
        return Err(OrthoError::BadTransversal(
            "transversal does not cover the group".into(),
        ));
    }
    // θ must be an SCM of H, φ an SCM of G/H (computed through reps).
    let rep_set: BTreeSet<&GroupElement> = reps.iter().collect();
    if theta_h.len() != subgroup.len() || !theta_h.keys().all(|k| h_set.contains(k)) {
        return Err(OrthoError::BadPart("θ is not total over H".into()));
    }
    if phi_reps.len() != reps.len()
        || !phi_reps.keys().all(|k| rep_set.contains(k))
        || !phi_reps.values().all(|v| rep_set.contains(v))
    {
        return Err(OrthoError::BadPart("φ is not reps → reps".into()));
    }
    let rep_of = |g: &GroupElement| -> (GroupElement, GroupElement) {
        decompose.get(g).expect("decomposition covers G").clone()
    };
    // Quotient-level bijectivity of φ, η_φ, ζ_φ through the rep arithmetic.
    for name in ["theta", "eta", "zeta"] {
        let image: BTreeSet<GroupElement> = reps
            .iter()
            .map(|r| {
                let fr = &phi_reps[r];
                let val = match name {
                    "theta" => fr.clone(),
                    "eta" => kernel.diff(r, fr).expect("validated"),
                    _ => kernel.op(r, fr).expect("validated"),
                };
                rep_of(&val).0
            })
            .collect();
        if image.len() != reps.len() {
            return Err(OrthoError::BadPart(format!(
                "φ fails {name}-bijectivity on the quotient"
            )));
        }
    }

    let mut beta = PartialMapping::new(kernel.clone(), MappingKind::StrongComplete);
    for k in 0..order {
        let g = kernel.enumerate(k)?;
        let (r, h) = rep_of(&g);
        let val = kernel.op(&phi_reps[&r], &theta_h[&h])?;
        beta.insert(g, val)?;
    }
    certify_scm(beta)
}

/// Canonical transversal: the least enumerated element of each coset.
pub fn canonical_transversal(
    kernel: &GroupKernel,
    subgroup: &[GroupElement],
) -> Result<Vec<GroupElement>, OrthoError> {
    let order = kernel
        .order()
        .ok_or_else(|| OrthoError::NotFinite(kernel.render()))? as u64;
    let h_set: BTreeSet<&GroupElement> = subgroup.iter().collect();
    let mut reps: Vec<GroupElement> = Vec::new();
    for k in 0..order {
        let g = kernel.enumerate(k)?;
        let mut covered = false;
        for r in &reps {
            let diff = kernel.diff(r, &g)?;
            if h_set.contains(&diff) {
                covered = true;
                break;
            }
        }
        if !covered {
            reps.push(g);
        }
    }
    Ok(reps)
}

/// The nim-field trick: on the block {0, …, 2^(2^m) − 1} of E2, the map
/// x ↦ 2 ⊗ x (nim multiplication) is a strong complete mapping, since
/// η(x) = ζ(x) = x ⊕ 2⊗x = 3 ⊗ x and 2, 3 ≠ 0 in the field.
pub fn scm_elementary_2group(m: u32) -> Result<ScmCertificate, OrthoError> {
    if m > 4 {
        return Err(OrthoError::BlockTooLarge(m));
    }
    if m == 0 {
        // The 2-element field has no a outside {0, 1} (and Z_2 has no SCM).
        return Err(OrthoError::BadOrder(2));
    }
    let block = 1u64 << (1u32 << m);
    let kernel = GroupKernel::parse("E2")?;
    let mut mapping = PartialMapping::new(kernel, MappingKind::StrongComplete);
    for x in 0..block {
        mapping.insert(GroupElement::Nat(x), GroupElement::Nat(nim_mul(2, x)))?;
    }
    let domain: Vec<GroupElement> = (0..block).map(GroupElement::Nat).collect();
    let mut cert = certify_on_domain(mapping, Some(domain))?;
    cert.transcript
        .push(format!("nim-field block of order {block} (m = {m})"));
    Ok(cert)
}

/// θ_d from a directed R-terrace: θ_d(e) = e and θ_d(a(i)) = a(i+d)
/// wherever both are assigned. An orthomorphism-kind partial mapping.
pub fn theta_from_r_terrace(
    t: &PartialTerrace,
    d: &BigRational,
) -> Result<PartialMapping, OrthoError> {
    assert_eq!(t.kind(), TerraceKind::R, "θ_d comes from R-terraces");
    let kernel = t.group().clone();
    let mut mapping = PartialMapping::new(kernel.clone(), MappingKind::Orthomorphism);
    mapping.insert(kernel.identity(), kernel.identity())?;
    for (i, g) in t.assignments() {
        let shifted = i + d;
        if let Some(h) = t.value_at(&shifted) {
            mapping.insert(g.clone(), h.clone())?;
        }
    }
    Ok(mapping)
}

/// Requirements of the four dense families of the greedy SCM build.
#[derive(Debug, Clone, PartialEq)]
pub enum ScmReq {
    Dom(GroupElement),
    Ran(GroupElement),
    Eta(GroupElement),
    Zeta(GroupElement),
}

impl fmt::Display for ScmReq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScmReq::Dom(g) => write!(f, "dom θ ∋ {g}"),
            ScmReq::Ran(h) => write!(f, "ran θ ∋ {h}"),
            ScmReq::Eta(h) => write!(f, "ran η ∋ {h}"),
            ScmReq::Zeta(h) => write!(f, "ran ζ ∋ {h}"),
        }
    }
}

/// Greedy strong-complete-mapping builder for squareful groups.
#[derive(Debug, Clone)]
pub struct ScmBuilder {
    mapping: PartialMapping,
}

impl ScmBuilder {
    pub fn new(group: GroupKernel) -> Result<Self, OrthoError> {
        if group.classification() != crate::group::Classification::Squareful {
            return Err(OrthoError::NotSquareful(group.render()));
        }
        if group.is_finite() {
            // Finite groups have their own constructors (cyclic, product,
            // quotient, brute force); the greedy engine needs an infinite
            // enumeration.
            return Err(OrthoError::InfiniteRequired(group.render()));
        }
        Ok(ScmBuilder {
            mapping: PartialMapping::new(group, MappingKind::StrongComplete),
        })
    }

    pub fn mapping(&self) -> &PartialMapping {
        &self.mapping
    }

    pub fn into_mapping(self) -> PartialMapping {
        self.mapping
    }

    pub fn from_mapping(mapping: PartialMapping) -> Self {
        ScmBuilder { mapping }
    }

    fn first_fit<F>(&mut self, describe: &str, mut attempt: F) -> Result<u64, OrthoError>
    where
        F: FnMut(&mut PartialMapping, GroupElement) -> Result<bool, OrthoError>,
    {
        for k in 0..SEARCH_BUDGET {
            let candidate = self
                .mapping
                .group
                .enumerate(k)
                .map_err(|_| OrthoError::ExtensionFailed(format!("enumeration exhausted: {describe}")))?;
            if attempt(&mut self.mapping, candidate)? {
                return Ok(1);
            }
        }
        Err(OrthoError::ExtensionFailed(format!(
            "search budget exhausted: {describe}"
        )))
    }
}

impl GreedyConstruction for ScmBuilder {
    type Req = ScmReq;

    fn requirement_at(&self, pos: u64) -> ScmReq {
        let (family, k) = fair_unpair(pos, 4);
        let g = self
            .mapping
            .group
            .enumerate(k)
            .expect("infinite group enumeration");
        match family {
            0 => ScmReq::Dom(g),
            1 => ScmReq::Ran(g),
            2 => ScmReq::Eta(g),
            _ => ScmReq::Zeta(g),
        }
    }

    fn is_satisfied(&self, req: &ScmReq) -> bool {
        match req {
            ScmReq::Dom(g) => self.mapping.domain_contains(g),
            ScmReq::Ran(h) => self.mapping.range_contains(h),
            ScmReq::Eta(h) => self.mapping.eta_contains(h),
            ScmReq::Zeta(h) => self.mapping.zeta_contains(h),
        }
    }

    fn meet(&mut self, req: &ScmReq) -> Result<u64, String> {
        if self.is_satisfied(req) {
            return Ok(0);
        }
        let result = match req {
            ScmReq::Dom(g) => {
                let g = g.clone();
                self.first_fit(&format!("dom {g}"), move |m, h| {
                    match m.insert(g.clone(), h) {
                        Ok(()) => Ok(true),
                        Err(OrthoError::CompanionClash { .. }) => Ok(false),
                        Err(e) => Err(e),
                    }
                })
            }
            ScmReq::Ran(h) => {
                let h = h.clone();
                self.first_fit(&format!("ran {h}"), move |m, g| {
                    if m.domain_contains(&g) {
                        return Ok(false);
                    }
                    match m.insert(g, h.clone()) {
                        Ok(()) => Ok(true),
                        Err(OrthoError::CompanionClash { .. }) => Ok(false),
                        Err(e) => Err(e),
                    }
                })
            }
            ScmReq::Eta(h) => {
                let h = h.clone();
                self.first_fit(&format!("eta {h}"), move |m, g| {
                    if m.domain_contains(&g) {
                        return Ok(false);
                    }
                    let gh = m.group.op(&g, &h).expect("validated");
                    match m.insert(g, gh) {
                        Ok(()) => Ok(true),
                        Err(OrthoError::CompanionClash { .. }) => Ok(false),
                        Err(e) => Err(e),
                    }
                })
            }
            ScmReq::Zeta(h) => {
                let h = h.clone();
                self.first_fit(&format!("zeta {h}"), move |m, g| {
                    if m.domain_contains(&g) {
                        return Ok(false);
                    }
                    let val = {
                        let gi = m.group.inv(&g).expect("validated");
                        m.group.op(&gi, &h).expect("validated")
                    };
                    match m.insert(g, val) {
                        Ok(()) => Ok(true),
                        Err(OrthoError::CompanionClash { .. }) => Ok(false),
                        Err(e) => Err(e),
                    }
                })
            }
        };
        result.map_err(|e| e.to_string())
    }

    fn full_check(&self) -> Result<(), Vec<String>> {
        self.mapping.check_bookkeeping()?;
        let report = verify_scm(&self.mapping);
        if report.pass {
            Ok(())
        } else {
            Err(report
                .witnesses
                .iter()
                .map(|w| format!("{}: {}", w.kind, w.note))
                .collect())
        }
    }
}

/// Requirements of the four dense families of the mutually-orthogonal
/// orthomorphism family build.
#[derive(Debug, Clone, PartialEq)]
pub enum MooReq {
    Dom(usize, GroupElement),
    Ran(usize, GroupElement),
    Eta(usize, GroupElement),
    Pair(usize, usize, GroupElement),
}

impl fmt::Display for MooReq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MooReq::Dom(i, g) => write!(f, "dom θ_{i} ∋ {g}"),
            MooReq::Ran(i, h) => write!(f, "ran θ_{i} ∋ {h}"),
            MooReq::Eta(i, h) => write!(f, "ran η_{i} ∋ {h}"),
            MooReq::Pair(i, j, h) => write!(f, "ran η_{i}{j} ∋ {h}"),
        }
    }
}

/// A finite indexed family {θ_i} of partial mappings kept mutually
/// orthogonal: all θ_i and η_i injective, and every η_ij (on shared domain
/// points) injective. η_ij values are tracked once per unordered pair,
/// oriented from the lower index.
#[derive(Debug, Clone)]
pub struct MooFamily {
    group: GroupKernel,
    thetas: Vec<BTreeMap<GroupElement, GroupElement>>,
    ran_theta: Vec<BTreeSet<GroupElement>>,
    ran_eta: Vec<BTreeSet<GroupElement>>,
    ran_pair: BTreeMap<(usize, usize), BTreeSet<GroupElement>>,
}

impl MooFamily {
    pub fn new(group: GroupKernel, k: usize) -> Result<Self, OrthoError> {
        if k == 0 {
            return Err(OrthoError::EmptyParts);
        }
        if group.is_finite() {
            return Err(OrthoError::InfiniteRequired(group.render()));
        }
        Ok(MooFamily {
            group,
            thetas: vec![BTreeMap::new(); k],
            ran_theta: vec![BTreeSet::new(); k],
            ran_eta: vec![BTreeSet::new(); k],
            ran_pair: BTreeMap::new(),
        })
    }

    pub fn group(&self) -> &GroupKernel {
        &self.group
    }

    pub fn size(&self) -> usize {
        self.thetas.len()
    }

    pub fn theta(&self, i: usize) -> &BTreeMap<GroupElement, GroupElement> {
        &self.thetas[i]
    }

    /// View one member as a standalone orthomorphism-kind partial mapping.
    pub fn member(&self, i: usize) -> PartialMapping {
        let mut m = PartialMapping::new(self.group.clone(), MappingKind::Orthomorphism);
        for (g, h) in &self.thetas[i] {
            m.insert(g.clone(), h.clone()).expect("family is consistent");
        }
        m
    }

    /// Set θ_i(g) = h with every family invariant enforced atomically.
    pub fn insert(&mut self, i: usize, g: GroupElement, h: GroupElement) -> Result<(), OrthoError> {
        self.group.validate(&g)?;
        self.group.validate(&h)?;
        if self.thetas[i].contains_key(&g) {
            return Err(OrthoError::DomainOccupied(format!("θ_{i}({g})")));
        }
        if self.ran_theta[i].contains(&h) {
            return Err(OrthoError::CompanionClash {
                companion: "theta",
                value: h.to_string(),
            });
        }
        let eta = self.group.diff(&g, &h)?;
        if self.ran_eta[i].contains(&eta) {
            return Err(OrthoError::CompanionClash {
                companion: "eta",
                value: eta.to_string(),
            });
        }
        // Pair values for every other mapping that already covers g.
        let mut pair_updates: Vec<((usize, usize), GroupElement)> = Vec::new();
        for (j, theta_j) in self.thetas.iter().enumerate() {
            if j == i {
                continue;
            }
            if let Some(hj) = theta_j.get(&g) {
                let (key, value) = if i < j {
                    ((i, j), self.group.diff(&h, hj)?)
                } else {
                    ((j, i), self.group.diff(hj, &h)?)
                };
                if self
                    .ran_pair
                    .get(&key)
                    .map(|set| set.contains(&value))
                    .unwrap_or(false)
                {
                    return Err(OrthoError::CompanionClash {
                        companion: "eta_ij",
                        value: value.to_string(),
                    });
                }
                pair_updates.push((key, value));
            }
        }
        self.ran_theta[i].insert(h.clone());
        self.ran_eta[i].insert(eta);
        for (key, value) in pair_updates {
            self.ran_pair.entry(key).or_default().insert(value);
        }
        self.thetas[i].insert(g, h);
        Ok(())
    }

    fn pair_realized(&self, i: usize, j: usize, h: &GroupElement) -> bool {
        let (key, value) = if i < j {
            ((i, j), h.clone())
        } else {
            ((j, i), self.group.inv(h).expect("validated"))
        };
        self.ran_pair
            .get(&key)
            .map(|set| set.contains(&value))
            .unwrap_or(false)
    }

    fn fresh_everywhere(&self, g: &GroupElement) -> bool {
        self.thetas.iter().all(|t| !t.contains_key(g))
    }

    fn meet_dom(&mut self, i: usize, g: &GroupElement) -> Result<u64, OrthoError> {
        if self.thetas[i].contains_key(g) {
            return Ok(0);
        }
        for k in 0..SEARCH_BUDGET {
            let h = self
                .group
                .enumerate(k)
                .map_err(|e| OrthoError::ExtensionFailed(e.to_string()))?;
            match self.insert(i, g.clone(), h) {
                Ok(()) => return Ok(1),
                Err(OrthoError::CompanionClash { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(OrthoError::ExtensionFailed(format!("dom θ_{i} ∋ {g}")))
    }

    fn meet_ran(&mut self, i: usize, h: &GroupElement) -> Result<u64, OrthoError> {
        if self.ran_theta[i].contains(h) {
            return Ok(0);
        }
        // A point fresh for every member creates no η_ij entries at all.
        for k in 0..SEARCH_BUDGET {
            let g = self
                .group
                .enumerate(k)
                .map_err(|e| OrthoError::ExtensionFailed(e.to_string()))?;
            if !self.fresh_everywhere(&g) {
                continue;
            }
            match self.insert(i, g, h.clone()) {
                Ok(()) => return Ok(1),
                Err(OrthoError::CompanionClash { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(OrthoError::ExtensionFailed(format!("ran θ_{i} ∋ {h}")))
    }

    fn meet_eta(&mut self, i: usize, h: &GroupElement) -> Result<u64, OrthoError> {
        if self.ran_eta[i].contains(h) {
            return Ok(0);
        }
        for k in 0..SEARCH_BUDGET {
            let g = self
                .group
                .enumerate(k)
                .map_err(|e| OrthoError::ExtensionFailed(e.to_string()))?;
            if !self.fresh_everywhere(&g) {
                continue;
            }
            let gh = self.group.op(&g, h)?;
            match self.insert(i, g, gh) {
                Ok(()) => return Ok(1),
                Err(OrthoError::CompanionClash { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(OrthoError::ExtensionFailed(format!("ran η_{i} ∋ {h}")))
    }

    /// Meet h ∈ ran η_ij: one fresh point g and a value pair (h_i, h_j)
    /// with h_i⁻¹ h_j = h extends both members at once.
    fn meet_pair(&mut self, i: usize, j: usize, h: &GroupElement) -> Result<u64, OrthoError> {
        if self.pair_realized(i, j, h) {
            return Ok(0);
        }
        let g = (0..SEARCH_BUDGET)
            .map(|k| self.group.enumerate(k).expect("infinite enumeration"))
            .find(|g| self.fresh_everywhere(g))
            .ok_or_else(|| OrthoError::ExtensionFailed("no fresh point".into()))?;
        for k in 0..SEARCH_BUDGET {
            let hi = self
                .group
                .enumerate(k)
                .map_err(|e| OrthoError::ExtensionFailed(e.to_string()))?;
            let hj = self.group.op(&hi, h)?;
            if self.ran_theta[i].contains(&hi) || self.ran_theta[j].contains(&hj) {
                continue;
            }
            let eta_i = self.group.diff(&g, &hi)?;
            let eta_j = self.group.diff(&g, &hj)?;
            if self.ran_eta[i].contains(&eta_i) || self.ran_eta[j].contains(&eta_j) {
                continue;
            }
            self.insert(i, g.clone(), hi)?;
            self.insert(j, g, hj)?;
            return Ok(2);
        }
        Err(OrthoError::ExtensionFailed(format!("ran η_{i}{j} ∋ {h}")))
    }

    /// From-scratch verification of every family invariant plus the
    /// differential against the tracked ranges.
    pub fn check(&self) -> VerificationReport {
        let mut report = VerificationReport::new("moo-family");
        for i in 0..self.size() {
            let member = self.member(i);
            let sub = verify_orthomorphism(&member);
            for w in sub.witnesses {
                report.fail(w);
            }
            // Differential on tracked sets.
            let theta_set: BTreeSet<GroupElement> = self.thetas[i].values().cloned().collect();
            if theta_set != self.ran_theta[i] {
                report.fail(Witness::new("drift", format!("ran θ_{i} drifted")));
            }
            let eta_set: BTreeSet<GroupElement> = self.thetas[i]
                .iter()
                .map(|(g, h)| self.group.diff(g, h).expect("validated"))
                .collect();
            if eta_set != self.ran_eta[i] {
                report.fail(Witness::new("drift", format!("ran η_{i} drifted")));
            }
        }
        for i in 0..self.size() {
            for j in (i + 1)..self.size() {
                let mut recomputed: BTreeSet<GroupElement> = BTreeSet::new();
                for (g, hi) in &self.thetas[i] {
                    if let Some(hj) = self.thetas[j].get(g) {
                        let v = self.group.diff(hi, hj).expect("validated");
                        if !recomputed.insert(v.clone()) {
                            report.fail(Witness::new(
                                "eta-ij-repeat",
                                format!("η_{i}{j} repeats {v}"),
                            ));
                        }
                    }
                }
                let tracked = self.ran_pair.get(&(i, j)).cloned().unwrap_or_default();
                if recomputed != tracked {
                    report.fail(Witness::new("drift", format!("ran η_{i}{j} drifted")));
                }
            }
        }
        report.stat(
            "points",
            self.thetas.iter().map(|t| t.len() as u64).sum::<u64>(),
        );
        report
    }
}

impl GreedyConstruction for MooFamily {
    type Req = MooReq;

    fn requirement_at(&self, pos: u64) -> MooReq {
        let kk = self.size() as u64;
        let families = if self.size() > 1 { 4 } else { 3 };
        let (family, k) = fair_unpair(pos, families);
        let elem = |idx: u64| {
            self.group
                .enumerate(idx)
                .expect("infinite group enumeration")
        };
        match family {
            0 => MooReq::Dom((k % kk) as usize, elem(k / kk)),
            1 => MooReq::Ran((k % kk) as usize, elem(k / kk)),
            2 => MooReq::Eta((k % kk) as usize, elem(k / kk)),
            _ => {
                let pairs = kk * (kk - 1);
                let pair_idx = k % pairs;
                let i = (pair_idx / (kk - 1)) as usize;
                let rem = (pair_idx % (kk - 1)) as usize;
                let j = if rem < i { rem } else { rem + 1 };
                MooReq::Pair(i, j, elem(k / pairs))
            }
        }
    }

    fn is_satisfied(&self, req: &MooReq) -> bool {
        match req {
            MooReq::Dom(i, g) => self.thetas[*i].contains_key(g),
            MooReq::Ran(i, h) => self.ran_theta[*i].contains(h),
            MooReq::Eta(i, h) => self.ran_eta[*i].contains(h),
            MooReq::Pair(i, j, h) => self.pair_realized(*i, *j, h),
        }
    }

    fn meet(&mut self, req: &MooReq) -> Result<u64, String> {
        let result = match req {
            MooReq::Dom(i, g) => self.meet_dom(*i, g),
            MooReq::Ran(i, h) => self.meet_ran(*i, h),
            MooReq::Eta(i, h) => self.meet_eta(*i, h),
            MooReq::Pair(i, j, h) => self.meet_pair(*i, *j, h),
        };
        result.map_err(|e| e.to_string())
    }

    fn full_check(&self) -> Result<(), Vec<String>> {
        let report = self.check();
        if report.pass {
            Ok(())
        } else {
            Err(report
                .witnesses
                .iter()
                .map(|w| format!("{}: {}", w.kind, w.note))
                .collect())
        }
    }
}

fn element_coordinate(e: &GroupElement) -> Result<IndexPoint, OrthoError> {
    match e {
        GroupElement::Int(v) => Ok(IndexPoint::from_rational(BigRational::from(v.clone()))),
        GroupElement::Nat(v) => Ok(IndexPoint::from_rational(BigRational::from(BigInt::from(
            *v,
        )))),
        other => Err(OrthoError::NonIntegerCoordinate(other.to_string())),
    }
}

/// Grid styles derived from a group and an optional mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableStyle {
    /// Cayley table: entry g_i · g_j.
    Cayley,
    /// Normal multiplication table: entry g_i · g_j⁻¹.
    NormalMult,
    /// L_θ: entry g_i · θ(g_j).
    Theta,
}

/// Build a window of one of the three table styles on explicit row/column
/// elements. Coordinates are the integer values of the elements, so the
/// diagonal structure of Knut Vic checks is geometrically meaningful.
pub fn table_window(
    kernel: &GroupKernel,
    style: TableStyle,
    theta: Option<&PartialMapping>,
    rows: &[GroupElement],
    cols: &[GroupElement],
) -> Result<LatinRegion, OrthoError> {
    let mut region = LatinRegion::new(SymbolUniverse::Group(kernel.descriptor().clone()));
    for gi in rows {
        for gj in cols {
            let sym = match style {
                TableStyle::Cayley => kernel.op(gi, gj)?,
                TableStyle::NormalMult => {
                    let inv = kernel.inv(gj)?;
                    kernel.op(gi, &inv)?
                }
                TableStyle::Theta => {
                    let theta = theta.expect("theta style needs a mapping");
                    let img = theta
                        .image_of(gj)
                        .ok_or_else(|| OrthoError::ExtensionFailed(format!(
                            "{gj} not in mapping domain"
                        )))?;
                    kernel.op(gi, img)?
                }
            };
            region.insert(element_coordinate(gi)?, element_coordinate(gj)?, sym)?;
        }
    }
    Ok(region)
}

/// The Knut Vic square of a strong complete mapping over Z_n: full n×n grid
/// with entry i + θ(j). Use [`crate::square::verify_knutvic`] with
/// `modulus = n` for the full diagonal check.
pub fn knut_vic_square(cert: &ScmCertificate) -> Result<LatinRegion, OrthoError> {
    let kernel = cert.mapping.group();
    if !kernel.is_finite() {
        return Err(OrthoError::NotFinite(kernel.render()));
    }
    let elems = kernel.elements()?;
    table_window(kernel, TableStyle::Theta, Some(&cert.mapping), &elems, &elems)
}

/// A finite Knut Vic style window of a partial mapping over Z: rows are the
/// first `rows` enumerated elements, columns the mapping's domain.
pub fn knut_vic_window(theta: &PartialMapping, rows: usize) -> Result<LatinRegion, OrthoError> {
    let kernel = theta.group();
    let row_elems: Vec<GroupElement> = (0..rows as u64)
        .map(|k| kernel.enumerate(k).expect("infinite enumeration"))
        .collect();
    let col_elems: Vec<GroupElement> = theta.pairs().map(|(g, _)| g.clone()).collect();
    table_window(kernel, TableStyle::Theta, Some(theta), &row_elems, &col_elems)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{IndexKind, IndexSet};
    use crate::scheduler::run;
    use crate::square::{verify_knutvic, verify_orthogonal};

    fn z7() -> GroupKernel {
        GroupKernel::parse("Zn:7").unwrap()
    }

    #[test]
    fn scm_cyclic_z7_passes_exhaustively() {
        let cert = scm_cyclic(7).unwrap();
        assert_eq!(cert.mapping.len(), 7);
        assert!(verify_scm(&cert.mapping).pass);
        assert_eq!(cert.transcript.len(), 3);
        assert!(matches!(scm_cyclic(6), Err(OrthoError::BadOrder(6))));
        assert!(scm_cyclic(25).is_ok());
    }

    #[test]
    fn identity_mapping_is_not_an_orthomorphism() {
        let kernel = GroupKernel::parse("Zn:5").unwrap();
        let mut m = PartialMapping::new(kernel.clone(), MappingKind::CompleteMapping);
        for x in kernel.elements().unwrap() {
            m.insert(x.clone(), x).unwrap();
        }
        // η(x) = x⁻¹x = e constantly.
        assert!(!verify_orthomorphism(&m).pass);
        // ...but ζ(x) = 2x is fine for odd order.
        assert!(verify_complete_mapping(&m).pass);
    }

    #[test]
    fn z2_has_no_scm() {
        let kernel = GroupKernel::parse("Zn:2").unwrap();
        let found = brute_force_scm_search(&kernel, 9).unwrap();
        assert!(found.is_none());
    }

    #[test]
    fn criterion_matches_oracle_on_small_groups() {
        let cases: Vec<(&str, Vec<u64>)> = vec![
            ("Zn:2", vec![2]),
            ("Zn:3", vec![3]),
            ("Zn:4", vec![4]),
            ("Zn:5", vec![5]),
            ("prod(Zn:2,Zn:2)", vec![2, 2]),
        ];
        for (spec, factors) in cases {
            let kernel = GroupKernel::parse(spec).unwrap();
            let found = brute_force_scm_search(&kernel, 9).unwrap().is_some();
            assert_eq!(
                found,
                scm_exists_finite_abelian(&factors),
                "criterion vs oracle on {spec}"
            );
        }
    }

    #[test]
    fn cap_exceeded() {
        let kernel = GroupKernel::parse("Zn:12").unwrap();
        assert!(matches!(
            brute_force_scm_search(&kernel, 9),
            Err(OrthoError::CapExceeded { .. })
        ));
    }

    #[test]
    fn direct_product_and_sum() {
        let a = scm_cyclic(5).unwrap();
        let b = scm_cyclic(7).unwrap();
        let prod = scm_direct_product(&[&a, &b]).unwrap();
        assert_eq!(prod.mapping.len(), 35);
        assert!(verify_scm(&prod.mapping).pass);
        // Single part: unchanged for product.
        let single = scm_direct_product(&[&a]).unwrap();
        assert_eq!(single.mapping.theta, a.mapping.theta);
        // Sum normalizes parts to fix the identity.
        let sum = scm_direct_sum(&[&a, &b]).unwrap();
        let id = sum.mapping.group().identity();
        assert_eq!(sum.mapping.image_of(&id), Some(&id));
        assert!(verify_scm(&sum.mapping).pass);
        assert!(matches!(
            scm_direct_product(&[]),
            Err(OrthoError::EmptyParts)
        ));
    }

    #[test]
    fn direct_sum_of_e2_blocks_fixes_identity() {
        let block = scm_elementary_2group(1).unwrap();
        let sum = scm_direct_sum(&[&block, &block]).unwrap();
        assert_eq!(sum.mapping.group().render(), "sum(E2,E2)");
        assert_eq!(sum.mapping.len(), 16); // 4 × 4 block product
        let id = sum.mapping.group().identity();
        assert_eq!(sum.mapping.image_of(&id), Some(&id));
        // Closed under all three companions, so certified exhaustively.
        assert_eq!(sum.transcript.len(), 3);
    }

    #[test]
    fn quotient_z35() {
        let kernel = GroupKernel::parse("Zn:35").unwrap();
        // H = ⟨7⟩ ≅ Z5, G/H ≅ Z7 with canonical reps 0..6.
        let subgroup: Vec<GroupElement> = (0..5u64)
            .map(|k| kernel.parse_element(&format!("{}", 7 * k)).unwrap())
            .collect();
        let reps = canonical_transversal(&kernel, &subgroup).unwrap();
        assert_eq!(reps.len(), 7);
        // θ on H: 7k ↦ 7·(2k mod 5); φ on reps: r ↦ 2r mod 7.
        let theta_h: BTreeMap<GroupElement, GroupElement> = (0..5u64)
            .map(|k| {
                (
                    kernel.parse_element(&format!("{}", 7 * k)).unwrap(),
                    kernel.parse_element(&format!("{}", 7 * ((2 * k) % 5))).unwrap(),
                )
            })
            .collect();
        let phi: BTreeMap<GroupElement, GroupElement> = (0..7u64)
            .map(|r| {
                (
                    kernel.parse_element(&format!("{r}")).unwrap(),
                    kernel.parse_element(&format!("{}", (2 * r) % 7)).unwrap(),
                )
            })
            .collect();
        let cert = scm_quotient(&kernel, &subgroup, &theta_h, &phi, &reps).unwrap();
        assert_eq!(cert.mapping.len(), 35);
        assert!(verify_scm(&cert.mapping).pass);

        // Trivial subgroup: β is φ up to relabeling.
        let trivial = vec![kernel.identity()];
        let all: Vec<GroupElement> = kernel.elements().unwrap();
        let theta_triv: BTreeMap<GroupElement, GroupElement> =
            [(kernel.identity(), kernel.identity())].into();
        let phi_all: BTreeMap<GroupElement, GroupElement> = all
            .iter()
            .map(|g| (g.clone(), kernel.op(g, g).unwrap()))
            .collect();
        // 2x is an SCM of Z35 (gcd(35,6)=1).
        let cert2 = scm_quotient(&kernel, &trivial, &theta_triv, &phi_all, &all).unwrap();
        assert!(verify_scm(&cert2.mapping).pass);

        // A non-transversal is rejected.
        let bad_reps: Vec<GroupElement> = (0..7u64)
            .map(|r| kernel.parse_element(&format!("{}", 7 * (r % 5))).unwrap())
            .collect();
        assert!(matches!(
            scm_quotient(&kernel, &subgroup, &theta_h, &phi, &bad_reps),
            Err(OrthoError::BadTransversal(_))
        ));
    }

    #[test]
    fn e2_block_scm() {
        for m in 1..=2u32 {
            let cert = scm_elementary_2group(m).unwrap();
            let block = 1u64 << (1u32 << m);
            assert_eq!(cert.mapping.len(), block as usize);
        }
        assert!(matches!(
            scm_elementary_2group(5),
            Err(OrthoError::BlockTooLarge(5))
        ));
        assert!(scm_elementary_2group(0).is_err());
        // a = 1 is no SCM: ζ(x) = x ⊕ x = 0 constantly, so the second
        // identity-map insertion already clashes.
        let kernel = GroupKernel::parse("E2").unwrap();
        let mut bad = PartialMapping::new(kernel, MappingKind::CompleteMapping);
        bad.insert(GroupElement::Nat(0), GroupElement::Nat(0)).unwrap();
        assert!(matches!(
            bad.insert(GroupElement::Nat(1), GroupElement::Nat(1)),
            Err(OrthoError::CompanionClash { companion: "zeta", .. })
        ));
    }

    #[test]
    fn scm_builder_rejects_non_squareful() {
        let e2 = GroupKernel::parse("E2").unwrap();
        assert!(matches!(
            ScmBuilder::new(e2),
            Err(OrthoError::NotSquareful(_))
        ));
    }

    #[test]
    fn scm_builder_greedy_over_z() {
        let mut b = ScmBuilder::new(GroupKernel::parse("Z").unwrap()).unwrap();
        let log = run(&mut b, 0, 120, false).unwrap();
        assert!(log.max_growth() <= 1);
        b.full_check().unwrap();
        for pos in 0..120 {
            let req = b.requirement_at(pos);
            assert!(b.is_satisfied(&req), "unsatisfied {req}");
        }
        assert!(verify_scm(b.mapping()).pass);
    }

    #[test]
    fn moo_family_build_and_check() {
        let mut fam = MooFamily::new(GroupKernel::parse("Z").unwrap(), 3).unwrap();
        let log = run(&mut fam, 0, 150, false).unwrap();
        assert!(log.max_growth() <= 2);
        assert!(fam.check().pass);
        for pos in 0..150 {
            let req = fam.requirement_at(pos);
            assert!(fam.is_satisfied(&req), "unsatisfied {req}");
        }
        // Pairwise orthogonality of the members on shared domains.
        for i in 0..3 {
            for j in (i + 1)..3 {
                let r = verify_mutually_orthogonal(&fam.member(i), &fam.member(j));
                assert!(r.pass, "members {i},{j}: {r}");
            }
        }
    }

    #[test]
    fn moo_k1_reduces_to_orthomorphism_builder() {
        let mut fam = MooFamily::new(GroupKernel::parse("Z").unwrap(), 1).unwrap();
        run(&mut fam, 0, 60, false).unwrap();
        assert!(fam.check().pass);
        assert!(verify_orthomorphism(&fam.member(0)).pass);
    }

    #[test]
    fn r_terrace_thetas_are_orthomorphisms_and_orthogonal() {
        let mut t = PartialTerrace::new(
            TerraceKind::R,
            GroupKernel::parse("Z").unwrap(),
            IndexSet::new(IndexKind::Z),
        )
        .unwrap();
        run(&mut t, 0, 150, false).unwrap();
        let d1 = BigRational::from(BigInt::from(1));
        let d2 = BigRational::from(BigInt::from(2));
        let m1 = theta_from_r_terrace(&t, &d1).unwrap();
        let m2 = theta_from_r_terrace(&t, &d2).unwrap();
        assert!(verify_orthomorphism(&m1).pass);
        assert!(verify_orthomorphism(&m2).pass);
        let orth = verify_mutually_orthogonal(&m1, &m2);
        assert!(orth.pass, "{orth}");
        assert!(orth.stats["shared_domain"] > 10);
        // Pointwise identity: θ_{d1}(g)⁻¹ θ_{d2}(g) = a_(d2−d1)(i + d1).
        let kernel = t.group().clone();
        for (i, g) in t.assignments() {
            let (Some(h1), Some(h2)) = (m1.image_of(g), m2.image_of(g)) else {
                continue;
            };
            let lhs = kernel.diff(h1, h2).unwrap();
            let shifted = i + &d1;
            let a1 = t.value_at(&shifted).unwrap();
            let shifted2 = i + &d2;
            let a2 = t.value_at(&shifted2).unwrap();
            assert_eq!(lhs, kernel.diff(a1, a2).unwrap());
        }
        // θ_d fixes the identity.
        let id = kernel.identity();
        assert_eq!(m1.image_of(&id), Some(&id));
    }

    #[test]
    fn empty_r_terrace_theta_is_identity_on_e() {
        let t = PartialTerrace::new(
            TerraceKind::R,
            GroupKernel::parse("Z").unwrap(),
            IndexSet::new(IndexKind::Z),
        )
        .unwrap();
        let m = theta_from_r_terrace(&t, &BigRational::from(BigInt::from(1))).unwrap();
        assert_eq!(m.len(), 1);
        let id = m.group().identity();
        assert_eq!(m.image_of(&id), Some(&id));
    }

    #[test]
    fn knut_vic_z7_and_orthogonality_to_tables() {
        let cert = scm_cyclic(7).unwrap();
        let kv = knut_vic_square(&cert).unwrap();
        assert!(verify_knutvic(&kv, Some(7)).pass);

        let kernel = z7();
        let elems = kernel.elements().unwrap();
        let cayley = table_window(&kernel, TableStyle::Cayley, None, &elems, &elems).unwrap();
        let normal = table_window(&kernel, TableStyle::NormalMult, None, &elems, &elems).unwrap();
        let ltheta =
            table_window(&kernel, TableStyle::Theta, Some(&cert.mapping), &elems, &elems).unwrap();
        assert!(verify_orthogonal(&ltheta, &cayley).unwrap().pass);
        assert!(verify_orthogonal(&ltheta, &normal).unwrap().pass);
        // θ = identity is not orthogonal to the Cayley table.
        let mut id_map = PartialMapping::new(kernel.clone(), MappingKind::CompleteMapping);
        for x in &elems {
            id_map.insert(x.clone(), x.clone()).unwrap();
        }
        let lid = table_window(&kernel, TableStyle::Theta, Some(&id_map), &elems, &elems).unwrap();
        assert!(!verify_orthogonal(&lid, &cayley).unwrap().pass);
    }

    #[test]
    fn knut_vic_window_over_z_diagonal_safety() {
        let mut b = ScmBuilder::new(GroupKernel::parse("Z").unwrap()).unwrap();
        run(&mut b, 0, 80, false).unwrap();
        let window = knut_vic_window(b.mapping(), 6).unwrap();
        let report = verify_knutvic(&window, None);
        assert!(report.pass, "{report}");
    }
}
