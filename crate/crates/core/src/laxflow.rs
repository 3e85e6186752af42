//! Lax flows: families of weighted endomorphisms indexed by a monoid,
//! subject to the laws `id <= pi(unit)` and `pi(m) . pi(n) <= pi(m * n)`.
//! A single system generates a flow through its powers; conversely a flow
//! truncates to its degree-one component. Diagrams of weighted morphisms
//! over a free shape category are the many-object generalization.

use crate::kleisli::{KleisliEndo, KleisliError, KleisliMorphism, StateSpace};
use crate::quantale::{LabelSet, LabelSetQ, Monoid, ProductMonoid, Quantale, TrivialMonoid};
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum LaxflowError {
    /// A tabulated flow has no entry at the requested index.
    MissingEntry { index: usize },
    DuplicateKey { key: String },
    /// All components of a flow must share one carrier.
    Mismatch(KleisliError),
}

impl fmt::Display for LaxflowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LaxflowError::MissingEntry { index } => {
                write!(f, "flow has no component at index {index}")
            }
            LaxflowError::DuplicateKey { key } => {
                write!(f, "flow table lists key {key} twice")
            }
            LaxflowError::Mismatch(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for LaxflowError {}

impl From<KleisliError> for LaxflowError {
    fn from(e: KleisliError) -> Self {
        LaxflowError::Mismatch(e)
    }
}

/// A flow sampled on finitely many monoid elements: a table `m -> endo`
/// over a shared carrier, sorted by key.
#[derive(Clone, PartialEq)]
pub struct MFlow<Q: Quantale, K: Monoid> {
    quantale: Q,
    monoid: K,
    carrier: StateSpace,
    table: Vec<(K::Elem, KleisliEndo<Q>)>,
}

impl<Q: Quantale, K: Monoid> MFlow<Q, K> {
    pub fn new(
        quantale: Q,
        monoid: K,
        carrier: StateSpace,
        mut table: Vec<(K::Elem, KleisliEndo<Q>)>,
    ) -> Result<Self, LaxflowError> {
        for (_, endo) in &table {
            if endo.space() != &carrier {
                return Err(KleisliError::SpaceMismatch {
                    expected: format!("{:?}", carrier),
                    found: format!("{:?}", endo.space()),
                }
                .into());
            }
        }
        table.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in table.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(LaxflowError::DuplicateKey {
                    key: format!("{:?}", pair[0].0),
                });
            }
        }
        Ok(MFlow {
            quantale,
            monoid,
            carrier,
            table,
        })
    }

    pub fn quantale(&self) -> &Q {
        &self.quantale
    }

    pub fn monoid(&self) -> &K {
        &self.monoid
    }

    pub fn carrier(&self) -> &StateSpace {
        &self.carrier
    }

    pub fn keys(&self) -> impl Iterator<Item = &K::Elem> {
        self.table.iter().map(|(k, _)| k)
    }

    pub fn component(&self, key: &K::Elem) -> Option<&KleisliEndo<Q>> {
        self.table
            .binary_search_by(|(k, _)| k.cmp(key))
            .ok()
            .map(|i| &self.table[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(K::Elem, KleisliEndo<Q>)> {
        self.table.iter()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl<Q: Quantale, K: Monoid> fmt::Debug for MFlow<Q, K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "flow on {:?}", self.carrier)?;
        for (k, endo) in &self.table {
            writeln!(f, " {k:?}:")?;
            write!(f, "{endo:?}")?;
        }
        Ok(())
    }
}

/// A flow over the additive naturals: either generated by one system
/// (component `n` is its `n`-th power) or tabulated explicitly on
/// `0..=depth`.
#[derive(Clone, PartialEq, Debug)]
pub enum NFlow<Q: Quantale> {
    Generated {
        alpha: KleisliEndo<Q>,
        /// Powers `0..=depth`, precomputed so lookups are pure reads.
        powers: Vec<KleisliEndo<Q>>,
    },
    Tabulated {
        entries: Vec<KleisliEndo<Q>>,
    },
}

impl<Q: Quantale> NFlow<Q> {
    pub fn tabulated(entries: Vec<KleisliEndo<Q>>) -> Result<Self, LaxflowError> {
        if entries.is_empty() {
            return Err(LaxflowError::MissingEntry { index: 0 });
        }
        let space = entries[0].space().clone();
        for e in &entries {
            if e.space() != &space {
                return Err(KleisliError::SpaceMismatch {
                    expected: format!("{:?}", space),
                    found: format!("{:?}", e.space()),
                }
                .into());
            }
        }
        Ok(NFlow::Tabulated { entries })
    }

    pub fn carrier(&self) -> &StateSpace {
        match self {
            NFlow::Generated { alpha, .. } => alpha.space(),
            NFlow::Tabulated { entries } => entries[0].space(),
        }
    }

    /// Largest index with a stored component.
    pub fn depth(&self) -> usize {
        match self {
            NFlow::Generated { powers, .. } => powers.len() - 1,
            NFlow::Tabulated { entries } => entries.len() - 1,
        }
    }

    /// The component at index `n`. Generated flows compute powers beyond
    /// the stored depth on demand; tabulated flows report a missing entry.
    pub fn component(&self, n: usize) -> Result<KleisliEndo<Q>, LaxflowError> {
        match self {
            NFlow::Generated { alpha, powers } => {
                if n < powers.len() {
                    Ok(powers[n].clone())
                } else {
                    let mut acc = powers[powers.len() - 1].clone();
                    for _ in powers.len() - 1..n {
                        acc = acc.compose(alpha).expect("shared carrier");
                    }
                    Ok(acc)
                }
            }
            NFlow::Tabulated { entries } => entries
                .get(n)
                .cloned()
                .ok_or(LaxflowError::MissingEntry { index: n }),
        }
    }
}

/// The flow generated by a single system: component `n` is the `n`-th
/// composition power of `alpha`, with the identity at index zero.
pub fn underline<Q: Quantale>(alpha: &KleisliEndo<Q>, depth: usize) -> NFlow<Q> {
    let id = KleisliEndo::identity(alpha.quantale().clone(), alpha.space().clone());
    let mut powers = Vec::with_capacity(depth + 1);
    powers.push(id);
    for n in 1..=depth {
        let next = powers[n - 1].compose(alpha).expect("shared carrier");
        powers.push(next);
    }
    NFlow::Generated {
        alpha: alpha.clone(),
        powers,
    }
}

/// The degree-one component of a flow; inverse to [`underline`] on
/// generated flows.
pub fn truncate_at_one<Q: Quantale>(flow: &NFlow<Q>) -> Result<KleisliEndo<Q>, LaxflowError> {
    flow.component(1)
}

/// An `MFlow` over the additive naturals holding the powers `0..=depth`
/// of a system.
pub fn mflow_from_powers<Q: Quantale>(
    alpha: &KleisliEndo<Q>,
    depth: usize,
) -> MFlow<Q, crate::quantale::NatAdd> {
    let nf = underline(alpha, depth);
    let table = (0..=depth)
        .map(|n| (n as u64, nf.component(n).expect("generated")))
        .collect();
    MFlow::new(
        alpha.quantale().clone(),
        crate::quantale::NatAdd,
        alpha.space().clone(),
        table,
    )
    .expect("powers share the carrier and indices are distinct")
}

/// The two flow laws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowLaw {
    /// `id <= pi(unit)`.
    UnitBelowComponent,
    /// `pi(m) . pi(n) <= pi(m * n)`.
    LaxComposition,
}

impl fmt::Display for FlowLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowLaw::UnitBelowComponent => f.write_str("unit-below-component"),
            FlowLaw::LaxComposition => f.write_str("lax-composition"),
        }
    }
}

/// One law violation, with the indices involved and the offending matrix
/// entry rendered as text.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowViolation {
    pub law: FlowLaw,
    /// The index (for the unit law) or pair of indices (for composition).
    pub keys: (String, Option<String>),
    pub from_state: String,
    pub to_state: String,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowLawReport {
    pub checked: usize,
    pub violations: Vec<FlowViolation>,
}

impl FlowLawReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn first_violation<Q: Quantale>(
    lhs: &KleisliEndo<Q>,
    rhs: &KleisliEndo<Q>,
) -> Option<(usize, usize, String, String)> {
    let q = lhs.quantale();
    for (x, y, e) in lhs.entries() {
        let r = rhs.get(x, y);
        if !q.leq(e, r) {
            return Some((x, y, format!("{e:?}"), format!("{r:?}")));
        }
    }
    None
}

/// Checks the flow laws on every component pair a tabulated range can
/// reach: `id <= pi(0)` and `pi(m) . pi(n) <= pi(m+n)` for `m + n` within
/// depth.
pub fn validate_nflow<Q: Quantale>(flow: &NFlow<Q>) -> FlowLawReport {
    let mut violations = Vec::new();
    let mut checked = 0usize;
    let depth = flow.depth();
    let id = KleisliEndo::identity(
        flow.component(0).expect("index 0 in range").quantale().clone(),
        flow.carrier().clone(),
    );
    let zero = flow.component(0).expect("index 0 in range");
    checked += 1;
    if let Some((x, y, lhs, rhs)) = first_violation(&id, &zero) {
        violations.push(FlowViolation {
            law: FlowLaw::UnitBelowComponent,
            keys: (String::from("0"), None),
            from_state: flow.carrier().name(x).into(),
            to_state: flow.carrier().name(y).into(),
            lhs,
            rhs,
        });
    }
    for m in 0..=depth {
        for n in 0..=depth - m {
            let pm = flow.component(m).expect("within depth");
            let pn = flow.component(n).expect("within depth");
            let comp = pm.compose(&pn).expect("shared carrier");
            let target = flow.component(m + n).expect("within depth");
            checked += 1;
            if let Some((x, y, lhs, rhs)) = first_violation(&comp, &target) {
                violations.push(FlowViolation {
                    law: FlowLaw::LaxComposition,
                    keys: (format!("{m}"), Some(format!("{n}"))),
                    from_state: flow.carrier().name(x).into(),
                    to_state: flow.carrier().name(y).into(),
                    lhs,
                    rhs,
                });
            }
        }
    }
    FlowLawReport { checked, violations }
}

/// Checks the flow laws on the sampled keys: the unit law when the monoid
/// unit is sampled, and `pi(m) . pi(n) <= pi(m * n)` whenever all three
/// keys are sampled.
pub fn validate_mflow<Q: Quantale, K: Monoid>(flow: &MFlow<Q, K>) -> FlowLawReport {
    let mut violations = Vec::new();
    let mut checked = 0usize;
    let unit = flow.monoid().unit();
    if let Some(component) = flow.component(&unit) {
        let id = KleisliEndo::identity(flow.quantale().clone(), flow.carrier().clone());
        checked += 1;
        if let Some((x, y, lhs, rhs)) = first_violation(&id, component) {
            violations.push(FlowViolation {
                law: FlowLaw::UnitBelowComponent,
                keys: (format!("{unit:?}"), None),
                from_state: flow.carrier().name(x).into(),
                to_state: flow.carrier().name(y).into(),
                lhs,
                rhs,
            });
        }
    }
    for (m, pm) in flow.iter() {
        for (n, pn) in flow.iter() {
            let mn = flow.monoid().op(m, n);
            if let Some(target) = flow.component(&mn) {
                let comp = pm.compose(pn).expect("shared carrier");
                checked += 1;
                if let Some((x, y, lhs, rhs)) = first_violation(&comp, target) {
                    violations.push(FlowViolation {
                        law: FlowLaw::LaxComposition,
                        keys: (format!("{m:?}"), Some(format!("{n:?}"))),
                        from_state: flow.carrier().name(x).into(),
                        to_state: flow.carrier().name(y).into(),
                        lhs,
                        rhs,
                    });
                }
            }
        }
    }
    FlowLawReport { checked, violations }
}

/// Does `f` carry one flow into another degreewise, i.e. is
/// `f . pi(n) <= pi'(n) . f` for every `n` up to the common depth?
pub fn nflow_morphism_holds<Q: Quantale>(
    f: &KleisliMorphism<Q>,
    source: &NFlow<Q>,
    target: &NFlow<Q>,
    depth: usize,
) -> Result<bool, LaxflowError> {
    for n in 0..=depth {
        let pn = source.component(n)?;
        let qn = target.component(n)?;
        let lhs = f.compose(pn.as_morphism())?;
        let rhs = qn.as_morphism().compose(f)?;
        if !lhs.leq(&rhs)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Splits each sampled component of a flow over label sets with monoid
/// values into plain label-set components indexed by (key, monoid value):
/// the `(k, m)` component relates `x` to `(label, y)` exactly when
/// `(label, m, y)` occurred in the `k` component.
///
/// The monoid-value axis is the set of occurring values together with the
/// unit, closed under one round of pairwise products, so that validity of
/// the flow laws transfers both ways; components not hit by any
/// observation are bottom.
pub fn curry_monoid<K: Monoid, M: Monoid>(
    flow: &MFlow<LabelSetQ<M>, K>,
) -> MFlow<LabelSetQ<TrivialMonoid>, ProductMonoid<K, M>> {
    let m_monoid = flow.quantale().monoid.clone();
    let mut values: BTreeSet<M::Elem> = BTreeSet::new();
    values.insert(m_monoid.unit());
    for (_, endo) in flow.iter() {
        for (_, _, weight) in endo.entries() {
            for (_, m) in weight.iter() {
                values.insert(m.clone());
            }
        }
    }
    let occurring: Vec<M::Elem> = values.iter().cloned().collect();
    for a in &occurring {
        for b in &occurring {
            values.insert(m_monoid.op(a, b));
        }
    }

    let q1 = LabelSetQ::new(TrivialMonoid);
    let mut table: Vec<((K::Elem, M::Elem), KleisliEndo<LabelSetQ<TrivialMonoid>>)> = Vec::new();
    for (k, endo) in flow.iter() {
        for m in &values {
            let mut component = KleisliEndo::bottom(q1.clone(), flow.carrier().clone());
            for (x, y, weight) in endo.entries() {
                for (label, mv) in weight.iter() {
                    if mv == m {
                        component.add(x, y, &LabelSet::singleton(label.clone(), ()));
                    }
                }
            }
            table.push(((k.clone(), m.clone()), component));
        }
    }
    MFlow::new(
        q1,
        ProductMonoid(flow.monoid().clone(), m_monoid),
        flow.carrier().clone(),
        table,
    )
    .expect("grid keys are distinct and components share the carrier")
}

/// Rebuilds a monoid-weighted flow from its label-set components: the `k`
/// component collects `(label, m)` for every `(k, m)` component relating
/// `x` to `(label, y)`.
pub fn uncurry_monoid<K: Monoid, M: Monoid>(
    flow: &MFlow<LabelSetQ<TrivialMonoid>, ProductMonoid<K, M>>,
) -> MFlow<LabelSetQ<M>, K> {
    let k_monoid = flow.monoid().0.clone();
    let m_monoid = flow.monoid().1.clone();
    let q = LabelSetQ::new(m_monoid);
    let mut keys: Vec<K::Elem> = Vec::new();
    for ((k, _), _) in flow.iter() {
        if !keys.contains(k) {
            keys.push(k.clone());
        }
    }
    let mut table: Vec<(K::Elem, KleisliEndo<LabelSetQ<M>>)> = Vec::new();
    for k in keys {
        let mut endo = KleisliEndo::bottom(q.clone(), flow.carrier().clone());
        for ((k2, m), component) in flow.iter() {
            if *k2 != k {
                continue;
            }
            for (x, y, weight) in component.entries() {
                for (label, ()) in weight.iter() {
                    endo.add(x, y, &LabelSet::singleton(label.clone(), m.clone()));
                }
            }
        }
        table.push((k, endo));
    }
    MFlow::new(q, k_monoid, flow.carrier().clone(), table)
        .expect("one component per distinct key over the shared carrier")
}

/// One object of a [`Diagram`]: a named carrier.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagramObject {
    pub name: String,
    pub space: StateSpace,
}

/// One arrow of a [`Diagram`]: a weighted morphism between two object
/// carriers.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagramArrow<Q: Quantale> {
    pub name: String,
    pub src: usize,
    pub dst: usize,
    pub image: KleisliMorphism<Q>,
}

/// A finite diagram of weighted morphisms: the image of a free shape
/// category on the listed arrows.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagram<Q: Quantale> {
    quantale: Q,
    objects: Vec<DiagramObject>,
    arrows: Vec<DiagramArrow<Q>>,
}

impl<Q: Quantale> Diagram<Q> {
    pub fn new(
        quantale: Q,
        objects: Vec<DiagramObject>,
        arrows: Vec<DiagramArrow<Q>>,
    ) -> Result<Self, LaxflowError> {
        for (i, o) in objects.iter().enumerate() {
            if objects[..i].iter().any(|p| p.name == o.name) {
                return Err(LaxflowError::DuplicateKey {
                    key: o.name.clone(),
                });
            }
        }
        for a in &arrows {
            let src = objects.get(a.src).ok_or(KleisliError::StateOutOfRange {
                index: a.src,
                size: objects.len(),
            })?;
            let dst = objects.get(a.dst).ok_or(KleisliError::StateOutOfRange {
                index: a.dst,
                size: objects.len(),
            })?;
            if a.image.src() != &src.space || a.image.dst() != &dst.space {
                return Err(KleisliError::SpaceMismatch {
                    expected: format!("{:?} -> {:?}", src.space, dst.space),
                    found: format!("{:?} -> {:?}", a.image.src(), a.image.dst()),
                }
                .into());
            }
        }
        Ok(Diagram {
            quantale,
            objects,
            arrows,
        })
    }

    /// A one-object diagram with one arrow per sampled key of the flow.
    pub fn from_mflow<K: Monoid>(flow: &MFlow<Q, K>) -> Diagram<Q> {
        let object = DiagramObject {
            name: String::from("carrier"),
            space: flow.carrier().clone(),
        };
        let arrows = flow
            .iter()
            .map(|(k, endo)| DiagramArrow {
                name: format!("{k:?}"),
                src: 0,
                dst: 0,
                image: endo.as_morphism().clone(),
            })
            .collect();
        Diagram::new(flow.quantale().clone(), alloc::vec![object], arrows)
            .expect("single object, arrows on its carrier")
    }

    pub fn quantale(&self) -> &Q {
        &self.quantale
    }

    pub fn objects(&self) -> &[DiagramObject] {
        &self.objects
    }

    pub fn arrows(&self) -> &[DiagramArrow<Q>] {
        &self.arrows
    }

    /// Offsets of each object's block inside the coproduct carrier.
    pub fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.objects.len());
        let mut total = 0;
        for o in &self.objects {
            offsets.push(total);
            total += o.space.len();
        }
        offsets
    }

    /// The disjoint union of the object carriers, states named
    /// `object.state`.
    pub fn coproduct_space(&self) -> Result<StateSpace, KleisliError> {
        let mut names = Vec::new();
        for o in &self.objects {
            for s in o.space.names() {
                names.push(format!("{}.{}", o.name, s));
            }
        }
        StateSpace::new(names)
    }

    /// Total number of states across all objects.
    pub fn total_states(&self) -> usize {
        self.objects.iter().map(|o| o.space.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantale::{BoolQ, Label, NatAdd, RealAdd, Time};
    use alloc::string::ToString;
    use alloc::vec;

    fn space(names: &[&str]) -> StateSpace {
        StateSpace::new(names.iter().copied()).unwrap()
    }

    fn chain3() -> KleisliEndo<BoolQ> {
        // x -> y -> z
        let sp = space(&["x", "y", "z"]);
        let mut a = KleisliEndo::bottom(BoolQ, sp);
        a.set(0, 1, true);
        a.set(1, 2, true);
        a
    }

    #[test]
    fn underline_components_are_composition_powers() {
        let alpha = chain3();
        let flow = underline(&alpha, 3);
        let id = KleisliEndo::identity(BoolQ, alpha.space().clone());
        assert_eq!(flow.component(0).unwrap(), id);
        assert_eq!(flow.component(1).unwrap(), alpha);
        let sq = alpha.compose(&alpha).unwrap();
        assert_eq!(flow.component(2).unwrap(), sq);
        // Beyond the stored depth the power is computed on demand.
        let cube = sq.compose(&alpha).unwrap();
        assert_eq!(flow.component(4).unwrap().space(), alpha.space());
        assert_eq!(flow.component(3).unwrap(), cube);
    }

    #[test]
    fn truncation_undoes_underline() {
        let alpha = chain3();
        assert_eq!(truncate_at_one(&underline(&alpha, 2)).unwrap(), alpha);
    }

    #[test]
    fn tabulated_flow_reports_missing_entries() {
        let alpha = chain3();
        let flow = NFlow::tabulated(vec![
            KleisliEndo::identity(BoolQ, alpha.space().clone()),
            alpha.clone(),
        ])
        .unwrap();
        assert_eq!(truncate_at_one(&flow).unwrap(), alpha);
        assert_eq!(
            flow.component(2),
            Err(LaxflowError::MissingEntry { index: 2 })
        );
    }

    #[test]
    fn generated_flows_satisfy_the_laws() {
        let flow = underline(&chain3(), 4);
        let report = validate_nflow(&flow);
        assert!(report.passed(), "{:?}", report.violations);
    }

    #[test]
    fn missing_identity_in_degree_zero_is_reported() {
        let alpha = chain3();
        let mut zero = KleisliEndo::identity(BoolQ, alpha.space().clone());
        zero.set(1, 1, false);
        let flow = NFlow::tabulated(vec![zero, alpha]).unwrap();
        let report = validate_nflow(&flow);
        let v = report
            .violations
            .iter()
            .find(|v| v.law == FlowLaw::UnitBelowComponent)
            .expect("unit law must fail");
        assert_eq!(v.from_state, "y");
        assert_eq!(v.to_state, "y");
    }

    #[test]
    fn under_approximating_degree_two_is_reported() {
        let alpha = chain3();
        let id = KleisliEndo::identity(BoolQ, alpha.space().clone());
        // Degree two omits the x -> z step that alpha . alpha reaches.
        let hollow = KleisliEndo::bottom(BoolQ, alpha.space().clone());
        let flow = NFlow::tabulated(vec![id, alpha, hollow]).unwrap();
        let report = validate_nflow(&flow);
        let v = report
            .violations
            .iter()
            .find(|v| v.law == FlowLaw::LaxComposition)
            .expect("composition law must fail");
        assert_eq!(v.keys, ("1".to_string(), Some("1".to_string())));
        assert_eq!((v.from_state.as_str(), v.to_state.as_str()), ("x", "z"));
    }

    #[test]
    fn mflow_validation_uses_sampled_products_only() {
        let alpha = chain3();
        let id = KleisliEndo::identity(BoolQ, alpha.space().clone());
        let sq = alpha.compose(&alpha).unwrap();
        // Keys 0, 1, 2 with honest powers pass.
        let flow = MFlow::new(
            BoolQ,
            NatAdd,
            alpha.space().clone(),
            vec![(0, id.clone()), (1, alpha.clone()), (2, sq)],
        )
        .unwrap();
        assert!(validate_mflow(&flow).passed());
        // Keys 0 and 1 alone: the product 1 + 1 = 2 is unsampled, so the
        // composite is never compared against anything and the check still
        // passes.
        let partial = MFlow::new(
            BoolQ,
            NatAdd,
            alpha.space().clone(),
            vec![(0, id.clone()), (1, alpha.clone())],
        )
        .unwrap();
        assert!(validate_mflow(&partial).passed());
        // A bottom at key 2 under-approximates alpha . alpha.
        let broken = MFlow::new(
            BoolQ,
            NatAdd,
            alpha.space().clone(),
            vec![
                (0, id),
                (1, alpha.clone()),
                (2, KleisliEndo::bottom(BoolQ, alpha.space().clone())),
            ],
        )
        .unwrap();
        let report = validate_mflow(&broken);
        assert!(!report.passed());
        assert!(report
            .violations
            .iter()
            .all(|v| v.law == FlowLaw::LaxComposition));
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let alpha = chain3();
        let err = MFlow::new(
            BoolQ,
            NatAdd,
            alpha.space().clone(),
            vec![(1, alpha.clone()), (1, alpha.clone())],
        )
        .unwrap_err();
        assert_eq!(
            err,
            LaxflowError::DuplicateKey {
                key: "1".to_string()
            }
        );
    }

    #[test]
    fn mflow_component_lookup_is_by_key() {
        let alpha = chain3();
        let flow = mflow_from_powers(&alpha, 2);
        assert_eq!(flow.component(&1), Some(&alpha));
        assert_eq!(flow.component(&7), None);
        assert_eq!(flow.keys().copied().collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    fn timed_flow() -> MFlow<LabelSetQ<RealAdd>, NatAdd> {
        // Two states; one observation "a" taking 1.5 time units, one
        // silent step taking 0.5.
        let sp = space(&["p", "q"]);
        let q = LabelSetQ::new(RealAdd);
        let mut alpha = KleisliEndo::bottom(q.clone(), sp.clone());
        alpha.add(
            0,
            1,
            &LabelSet::singleton(Label::vis("a"), Time::new(1.5)),
        );
        alpha.add(1, 1, &LabelSet::singleton(Label::Tau, Time::new(0.5)));
        let id = KleisliEndo::identity(q.clone(), sp.clone());
        let sq = alpha.compose(&alpha).unwrap();
        MFlow::new(q, NatAdd, sp, vec![(0, id), (1, alpha), (2, sq)]).unwrap()
    }

    #[test]
    fn curry_splits_by_duration() {
        let flow = timed_flow();
        let curried = curry_monoid(&flow);
        // The (1, 1.5) component holds the "a" observation stripped of its
        // duration.
        let c = curried.component(&(1, Time::new(1.5))).expect("on grid");
        assert_eq!(
            c.get(0, 1),
            &LabelSet::singleton(Label::vis("a"), ())
        );
        assert!(c.get(1, 1).is_empty());
        // The (1, 0.5) component holds the silent step.
        let c = curried.component(&(1, Time::new(0.5))).expect("on grid");
        assert_eq!(c.get(1, 1), &LabelSet::singleton(Label::Tau, ()));
        assert!(c.get(0, 1).is_empty());
        // alpha . alpha observes "a" after the silent step: total 2.0.
        let c = curried.component(&(2, Time::new(2.0))).expect("on grid");
        assert_eq!(
            c.get(0, 1),
            &LabelSet::singleton(Label::vis("a"), ())
        );
    }

    #[test]
    fn uncurry_inverts_curry() {
        let flow = timed_flow();
        assert_eq!(uncurry_monoid(&curry_monoid(&flow)), flow);
    }

    #[test]
    fn currying_preserves_law_verdicts() {
        let valid = timed_flow();
        assert!(validate_mflow(&valid).passed());
        assert!(validate_mflow(&curry_monoid(&valid)).passed());

        // Corrupt degree two: drop the composite observation entirely.
        let sp = valid.carrier().clone();
        let q = valid.quantale().clone();
        let table: Vec<_> = valid
            .iter()
            .map(|(k, endo)| {
                if *k == 2 {
                    (2, KleisliEndo::bottom(q.clone(), sp.clone()))
                } else {
                    (*k, endo.clone())
                }
            })
            .collect();
        let broken = MFlow::new(q, NatAdd, sp, table).unwrap();
        assert!(!validate_mflow(&broken).passed());
        assert!(!validate_mflow(&curry_monoid(&broken)).passed());
    }

    #[test]
    fn oplax_squares_lift_to_flow_morphisms() {
        // Exhaustive over single-step relations on two states against a
        // fixed target: the degreewise condition on generated flows holds
        // exactly when the one-step condition does.
        let sp = space(&["0", "1"]);
        let collapse = space(&["c"]);
        let f = {
            let mut m = KleisliMorphism::bottom(BoolQ, sp.clone(), collapse.clone());
            m.set(0, 0, true);
            m.set(1, 0, true);
            m
        };
        for bits_a in 0u32..16 {
            for bits_b in 0u32..2 {
                let mut alpha = KleisliEndo::bottom(BoolQ, sp.clone());
                for i in 0..2 {
                    for j in 0..2 {
                        if bits_a >> (2 * i + j) & 1 == 1 {
                            alpha.set(i, j, true);
                        }
                    }
                }
                let mut beta = KleisliEndo::bottom(BoolQ, collapse.clone());
                if bits_b == 1 {
                    beta.set(0, 0, true);
                }
                let one_step = crate::kleisli::oplax_square_holds(&f, &alpha, &beta).unwrap();
                let degreewise = nflow_morphism_holds(
                    &f,
                    &underline(&alpha, 4),
                    &underline(&beta, 4),
                    4,
                )
                .unwrap();
                assert_eq!(one_step, degreewise, "alpha bits {bits_a}, beta {bits_b}");
            }
        }
    }

    #[test]
    fn diagrams_validate_arrow_endpoints() {
        let sp1 = space(&["u", "v"]);
        let sp2 = space(&["w"]);
        let ok = Diagram::new(
            BoolQ,
            vec![
                DiagramObject {
                    name: "left".to_string(),
                    space: sp1.clone(),
                },
                DiagramObject {
                    name: "right".to_string(),
                    space: sp2.clone(),
                },
            ],
            vec![DiagramArrow {
                name: "step".to_string(),
                src: 0,
                dst: 1,
                image: KleisliMorphism::bottom(BoolQ, sp1.clone(), sp2.clone()),
            }],
        )
        .unwrap();
        assert_eq!(ok.coproduct_space().unwrap().names().to_vec(), vec![
            "left.u".to_string(),
            "left.v".to_string(),
            "right.w".to_string()
        ]);
        assert_eq!(ok.offsets(), vec![0, 2]);

        let bad = Diagram::new(
            BoolQ,
            vec![DiagramObject {
                name: "only".to_string(),
                space: sp1.clone(),
            }],
            vec![DiagramArrow {
                name: "loop".to_string(),
                src: 0,
                dst: 0,
                image: KleisliMorphism::bottom(BoolQ, sp1, sp2),
            }],
        );
        assert!(matches!(bad, Err(LaxflowError::Mismatch(_))));
    }

    #[test]
    fn one_object_diagram_mirrors_the_flow() {
        let alpha = chain3();
        let flow = mflow_from_powers(&alpha, 2);
        let d = Diagram::from_mflow(&flow);
        assert_eq!(d.objects().len(), 1);
        assert_eq!(d.arrows().len(), 3);
        assert_eq!(d.arrows()[1].image, *alpha.as_morphism());
        assert_eq!(d.total_states(), 3);
    }
}
