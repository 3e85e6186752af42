//! Least-fixed-point engines. Saturation closes a system under its own
//! silent steps, yielding the smallest reflexive, transitive system above
//! it; variants compute the closure through a map, the numeric analogue
//! for probabilistic kernels, the collapse of a whole flow or diagram to a
//! single saturated endomorphism, and the silent-letter erasure of a
//! relational presheaf.

use crate::kleisli::{
    KleisliEndo, KleisliError, KleisliMorphism, ProbKernel, ProbTable, QuotientMap, StateSpace,
    TAU,
};
use crate::laxflow::{Diagram, MFlow};
use crate::num::mul_ext;
use crate::quantale::{BoolQ, Monoid, Quantale};
use crate::{CONV_TOL, INF_CAP};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// How a fixed-point run decides it is done.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FixpointMode {
    /// Stop when two consecutive iterates are equal.
    #[default]
    Exact,
    /// Stop when the sup-norm change drops below the tolerance.
    Numeric,
}

/// Iteration budget and convergence thresholds shared by every
/// fixed-point engine.
///
/// The lattice engines ([`saturate`], [`saturate_through`],
/// [`sigma_bang_flow`], [`sigma_bang_diagram`], [`sobocinski_saturate`])
/// always compare iterates exactly and read only `max_iterations`; the
/// numeric engine ([`saturate_prob_through`]) reads `tolerance` in
/// numeric mode and demands an exactly stationary table in exact mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixpointConfig {
    pub mode: FixpointMode,
    pub max_iterations: u64,
    pub tolerance: f64,
}

impl Default for FixpointConfig {
    fn default() -> Self {
        FixpointConfig {
            mode: FixpointMode::Exact,
            max_iterations: 1_000_000,
            tolerance: CONV_TOL,
        }
    }
}

impl FixpointConfig {
    /// Panics unless `max_iterations >= 1` and `tolerance > 0`.
    pub fn new(mode: FixpointMode, max_iterations: u64, tolerance: f64) -> FixpointConfig {
        assert!(max_iterations >= 1, "need at least one iteration");
        assert!(tolerance > 0.0, "tolerance must be positive");
        FixpointConfig {
            mode,
            max_iterations,
            tolerance,
        }
    }

    pub fn exact() -> FixpointConfig {
        FixpointConfig::default()
    }

    pub fn numeric() -> FixpointConfig {
        FixpointConfig {
            mode: FixpointMode::Numeric,
            ..FixpointConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SatError {
    /// The iterate sequence never repeated within the budget; over weight
    /// algebras with infinite ascending chains this signals genuine
    /// divergence (e.g. a cycle that keeps accumulating weight).
    NonStabilizing { iterations: u64 },
    /// A numeric run whose residual never dropped below the tolerance.
    MaxIterations { residual: f64 },
    Mismatch(KleisliError),
}

impl fmt::Display for SatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SatError::NonStabilizing { iterations } => {
                write!(f, "no stationary iterate within {iterations} steps")
            }
            SatError::MaxIterations { residual } => {
                write!(f, "residual {residual} above tolerance at iteration cap")
            }
            SatError::Mismatch(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SatError {}

impl From<KleisliError> for SatError {
    fn from(e: KleisliError) -> Self {
        SatError::Mismatch(e)
    }
}

/// The saturation `alpha*`: the least endomorphism above both the
/// identity and `alpha` that absorbs its own composition. Computed by
/// repeatedly squaring `id v alpha`; the result is identical to the naive
/// iteration `x <- (id v alpha) . x`.
pub fn saturate<Q: Quantale>(
    alpha: &KleisliEndo<Q>,
    cfg: &FixpointConfig,
) -> Result<KleisliEndo<Q>, SatError> {
    let id = KleisliEndo::identity(alpha.quantale().clone(), alpha.space().clone());
    let step = id.join(alpha)?;
    let mut y = step;
    let mut depth: u64 = 1;
    loop {
        let next = y.compose(&y).expect("shared carrier");
        if next == y {
            return Ok(y);
        }
        depth = depth.saturating_mul(2);
        if depth > cfg.max_iterations {
            return Err(SatError::NonStabilizing { iterations: depth });
        }
        y = next;
    }
}

/// The naive twin of [`saturate`]: one step of `id v alpha` at a time.
/// Kept private as the reference the accelerated version is tested
/// against.
#[cfg(test)]
fn saturate_naive<Q: Quantale>(
    alpha: &KleisliEndo<Q>,
    cfg: &FixpointConfig,
) -> Result<KleisliEndo<Q>, SatError> {
    let id = KleisliEndo::identity(alpha.quantale().clone(), alpha.space().clone());
    let step = id.join(alpha)?;
    let mut x = id;
    let mut n: u64 = 0;
    loop {
        let next = step.compose(&x).expect("shared carrier");
        if next == x {
            return Ok(x);
        }
        n += 1;
        if n > cfg.max_iterations {
            return Err(SatError::NonStabilizing { iterations: n });
        }
        x = next;
    }
}

/// The least fixed point of `x |-> f v x . alpha`, iterated from `f`:
/// the saturation of `alpha` as seen through the morphism `f`.
pub fn saturate_through<Q: Quantale>(
    alpha: &KleisliEndo<Q>,
    f: &KleisliMorphism<Q>,
    cfg: &FixpointConfig,
) -> Result<KleisliMorphism<Q>, SatError> {
    let mut x = f.clone();
    let mut n: u64 = 0;
    loop {
        let next = f.join(&x.compose(alpha.as_morphism())?)?;
        if next == x {
            return Ok(x);
        }
        n += 1;
        if n > cfg.max_iterations {
            return Err(SatError::NonStabilizing { iterations: n });
        }
        x = next;
    }
}

/// Output of [`saturate_prob_through`]: the least-solution table together
/// with how the run ended. Values above the overflow cap are reported as
/// infinity.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbSatTable {
    pub table: ProbTable,
    pub converged: bool,
    pub residual: f64,
    pub iterations: u64,
}

impl ProbSatTable {
    /// The table, or the divergence as an error.
    pub fn require_converged(&self) -> Result<&ProbTable, SatError> {
        if self.converged {
            Ok(&self.table)
        } else {
            Err(SatError::MaxIterations {
                residual: self.residual,
            })
        }
    }
}

/// Weak reachability values of a probabilistic kernel against a quotient:
/// the least `(x, sigma, C)`-table solving
///
/// ```text
/// v(x, tau, C) = [f(x) in C]  v  sum_z alpha(x)(tau, z) * v(z, tau, C)
/// v(x, a,   C) = sum_z alpha(x)(tau, z) * v(z, a, C)
///                      + alpha(x)(a, z) * v(z, tau, C)
/// ```
///
/// by monotone value iteration from the all-zero table, with `v` read as
/// binary max in `[0, inf]` and the convention `0 * inf = 0`. A
/// non-converged run is reported through the flags rather than an error
/// so the partial values stay observable; see
/// [`ProbSatTable::require_converged`].
pub fn saturate_prob_through(
    alpha: &ProbKernel,
    f: &QuotientMap,
    cfg: &FixpointConfig,
) -> Result<ProbSatTable, SatError> {
    if f.src() != alpha.space() {
        return Err(KleisliError::SpaceMismatch {
            expected: alloc::format!("{:?}", alpha.space()),
            found: alloc::format!("{:?}", f.src()),
        }
        .into());
    }
    let n = alpha.space().len();
    let sigmas = alpha.sigma_count();
    let classes = f.classes();
    let mut cur = ProbTable::zeros(alpha.space().clone(), alpha.labels().to_vec(), classes);
    let mut residual = f64::INFINITY;
    let mut iterations = 0u64;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        let mut next = ProbTable::zeros(alpha.space().clone(), alpha.labels().to_vec(), classes);
        for x in 0..n {
            for c in 0..classes {
                let base = if f.class_of(x) == c { 1.0 } else { 0.0 };
                let mut acc = 0.0;
                for z in 0..n {
                    acc += mul_ext(alpha.weight(x, TAU, z), cur.get(z, TAU, c));
                }
                let v = if base > acc { base } else { acc };
                next.set(x, TAU, c, cap_inf(v));
                for sigma in 1..sigmas {
                    let mut acc = 0.0;
                    for z in 0..n {
                        acc += mul_ext(alpha.weight(x, TAU, z), cur.get(z, sigma, c));
                        acc += mul_ext(alpha.weight(x, sigma, z), cur.get(z, TAU, c));
                    }
                    next.set(x, sigma, c, cap_inf(acc));
                }
            }
        }
        iterations += 1;
        residual = table_residual(&cur, &next);
        cur = next;
        let done = match cfg.mode {
            FixpointMode::Exact => residual == 0.0,
            FixpointMode::Numeric => residual < cfg.tolerance,
        };
        if done {
            converged = true;
            break;
        }
    }
    Ok(ProbSatTable {
        table: cur,
        converged,
        residual,
        iterations,
    })
}

fn cap_inf(v: f64) -> f64 {
    if v > INF_CAP {
        f64::INFINITY
    } else {
        v
    }
}

/// Sup-norm distance between two tables of the same shape; a pair of
/// infinities counts as distance zero.
fn table_residual(a: &ProbTable, b: &ProbTable) -> f64 {
    let mut worst = 0.0_f64;
    for x in 0..a.space().len() {
        let ra = a.row(x);
        let rb = b.row(x);
        for (va, vb) in ra.iter().zip(rb) {
            let d = if va == vb { 0.0 } else { crate::num::fabs(va - vb) };
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Collapses a sampled flow to one endomorphism: the least fixed point of
/// `x |-> id v (join over m of x . pi(m))`, iterated from the identity.
/// Applied to the power flow of a single system this recovers its
/// saturation.
pub fn sigma_bang_flow<Q: Quantale, K: Monoid>(
    flow: &MFlow<Q, K>,
    cfg: &FixpointConfig,
) -> Result<KleisliEndo<Q>, SatError> {
    let id = KleisliEndo::identity(flow.quantale().clone(), flow.carrier().clone());
    let mut x = id.clone();
    let mut n: u64 = 0;
    loop {
        let mut next = id.clone();
        for (_, pm) in flow.iter() {
            next = next.join(&x.compose(pm)?)?;
        }
        if next == x {
            return Ok(x);
        }
        n += 1;
        if n > cfg.max_iterations {
            return Err(SatError::NonStabilizing { iterations: n });
        }
        x = next;
    }
}

/// One arrow of a diagram lifted to the coproduct carrier: it acts by the
/// arrow's image from the source summand into the destination summand and
/// embeds every other summand unchanged.
fn lift_arrow<Q: Quantale>(
    diagram: &Diagram<Q>,
    coproduct: &StateSpace,
    arrow: usize,
) -> KleisliEndo<Q> {
    let offsets = diagram.offsets();
    let a = &diagram.arrows()[arrow];
    let mut endo = KleisliEndo::bottom(diagram.quantale().clone(), coproduct.clone());
    for (o, obj) in diagram.objects().iter().enumerate() {
        if o == a.src {
            continue;
        }
        for s in 0..obj.space.len() {
            let u = diagram.quantale().unit();
            endo.set(offsets[o] + s, offsets[o] + s, u);
        }
    }
    for (x, y, e) in a.image.entries() {
        endo.set(offsets[a.src] + x, offsets[a.dst] + y, e.clone());
    }
    endo
}

/// Collapses a diagram to one endomorphism on the disjoint union of its
/// object carriers: the least fixed point of
/// `x |-> id v (join over arrows d of x . lift(d))`.
pub fn sigma_bang_diagram<Q: Quantale>(
    diagram: &Diagram<Q>,
    cfg: &FixpointConfig,
) -> Result<KleisliEndo<Q>, SatError> {
    let coproduct = diagram.coproduct_space()?;
    let lifted: Vec<KleisliEndo<Q>> = (0..diagram.arrows().len())
        .map(|i| lift_arrow(diagram, &coproduct, i))
        .collect();
    let id = KleisliEndo::identity(diagram.quantale().clone(), coproduct);
    let mut x = id.clone();
    let mut n: u64 = 0;
    loop {
        let mut next = id.clone();
        for d in &lifted {
            next = next.join(&x.compose(d).expect("shared coproduct carrier"))?;
        }
        if next == x {
            return Ok(x);
        }
        n += 1;
        if n > cfg.max_iterations {
            return Err(SatError::NonStabilizing { iterations: n });
        }
        x = next;
    }
}

/// A relational system presented by one relation per letter, silent
/// letter included: the generators of a presheaf over words.
#[derive(Clone, Debug, PartialEq)]
pub struct RelPresheaf {
    space: StateSpace,
    labels: Vec<String>,
    tau: KleisliEndo<BoolQ>,
    vis: Vec<KleisliEndo<BoolQ>>,
}

impl RelPresheaf {
    pub fn new(
        space: StateSpace,
        labels: Vec<String>,
        tau: KleisliEndo<BoolQ>,
        vis: Vec<KleisliEndo<BoolQ>>,
    ) -> Result<RelPresheaf, KleisliError> {
        if vis.len() != labels.len() {
            return Err(KleisliError::AssignmentLength {
                expected: labels.len(),
                found: vis.len(),
            });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(KleisliError::DuplicateState(l.clone()));
            }
        }
        for r in core::iter::once(&tau).chain(&vis) {
            if r.space() != &space {
                return Err(KleisliError::SpaceMismatch {
                    expected: alloc::format!("{:?}", space),
                    found: alloc::format!("{:?}", r.space()),
                });
            }
        }
        Ok(RelPresheaf {
            space,
            labels,
            tau,
            vis,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn tau(&self) -> &KleisliEndo<BoolQ> {
        &self.tau
    }

    pub fn vis(&self, i: usize) -> &KleisliEndo<BoolQ> {
        &self.vis[i]
    }
}

/// Generator images of the silent-letter erasure of a relational
/// presheaf: `epsilon` is the image of the empty word, `vis[i]` the image
/// of the single letter `labels[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SaturatedPresheaf {
    pub epsilon: KleisliEndo<BoolQ>,
    pub labels: Vec<String>,
    pub vis: Vec<KleisliEndo<BoolQ>>,
}

/// Erases the silent letter from a generated relational presheaf: the
/// empty word maps to the reflexive-transitive closure of the silent
/// relation, and each visible letter is padded by that closure on both
/// sides. These generator images equal the join over all words that erase
/// to the given word.
pub fn sobocinski_saturate(
    presheaf: &RelPresheaf,
    cfg: &FixpointConfig,
) -> Result<SaturatedPresheaf, SatError> {
    let epsilon = saturate(presheaf.tau(), cfg)?;
    let mut vis = Vec::with_capacity(presheaf.labels().len());
    for i in 0..presheaf.labels().len() {
        let padded = epsilon
            .compose(presheaf.vis(i))
            .expect("shared carrier")
            .compose(&epsilon)
            .expect("shared carrier");
        vis.push(padded);
    }
    Ok(SaturatedPresheaf {
        epsilon,
        labels: presheaf.labels().to_vec(),
        vis,
    })
}
