//! Strong and weak bisimulation at desk scale: partition refinement over
//! signatures, closure-based weak equivalence, a brute-force oracle over
//! all partitions, and an exhaustive checker for the correspondence
//! between oplax morphism families and the collapsed-system inequality.

use crate::kleisli::{KleisliEndo, KleisliError, KleisliMorphism, ProbKernel, QuotientMap, StateSpace};
use crate::laxflow::{Diagram, MFlow};
use crate::quantale::{BoolQ, Monoid, Quantale};
use crate::saturation::{saturate, saturate_through, sigma_bang_diagram, FixpointConfig, SatError};
use crate::EPS;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum BisimError {
    /// The instance exceeds the exhaustive-search budget.
    TooLarge { size: usize, limit: usize },
    /// The comparison target must be reflexive and transitive.
    NotReflexiveTransitive,
    Sat(SatError),
}

impl fmt::Display for BisimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BisimError::TooLarge { size, limit } => {
                write!(f, "instance size {size} exceeds the exhaustive limit {limit}")
            }
            BisimError::NotReflexiveTransitive => {
                f.write_str("comparison target must contain the identity and absorb composition")
            }
            BisimError::Sat(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for BisimError {}

impl From<SatError> for BisimError {
    fn from(e: SatError) -> Self {
        BisimError::Sat(e)
    }
}

impl From<KleisliError> for BisimError {
    fn from(e: KleisliError) -> Self {
        BisimError::Sat(SatError::Mismatch(e))
    }
}

/// A partition of a state space into disjoint covering blocks, in
/// canonical form: blocks ordered by least member, members ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    space: StateSpace,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    /// Canonicalizes an arbitrary block assignment. Panics if the
    /// assignment length differs from the space size.
    pub fn from_block_of(space: StateSpace, assign: &[usize]) -> Partition {
        assert_eq!(assign.len(), space.len(), "one block per state");
        let mut relabel: Vec<Option<usize>> = vec![None; assign.len()];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = vec![0usize; assign.len()];
        for (x, &raw) in assign.iter().enumerate() {
            let b = match relabel.get(raw).copied().flatten() {
                Some(b) => b,
                None => {
                    let b = blocks.len();
                    if raw >= relabel.len() {
                        relabel.resize(raw + 1, None);
                    }
                    relabel[raw] = Some(b);
                    blocks.push(Vec::new());
                    b
                }
            };
            blocks[b].push(x);
            block_of[x] = b;
        }
        Partition {
            space,
            blocks,
            block_of,
        }
    }

    pub fn single_block(space: StateSpace) -> Partition {
        let assign = vec![0usize; space.len()];
        Partition::from_block_of(space, &assign)
    }

    pub fn discrete(space: StateSpace) -> Partition {
        let assign: Vec<usize> = (0..space.len()).collect();
        Partition::from_block_of(space, &assign)
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_of(&self, x: usize) -> usize {
        self.block_of[x]
    }

    pub fn same_block(&self, x: usize, y: usize) -> bool {
        self.block_of[x] == self.block_of[y]
    }

    /// The canonical surjection onto the blocks; each class is named
    /// after its least member.
    pub fn quotient_map(&self) -> QuotientMap {
        let names: Vec<&str> = self.blocks.iter().map(|b| self.space.name(b[0])).collect();
        let dst = StateSpace::new(names).expect("least members have distinct names");
        QuotientMap::new(self.space.clone(), dst, self.block_of.clone())
            .expect("a partition induces a surjection")
    }

    /// Is every block of `self` contained in one block of `other`?
    pub fn refines(&self, other: &Partition) -> bool {
        self.space == other.space
            && self
                .blocks
                .iter()
                .all(|b| b.iter().all(|&x| other.block_of[x] == other.block_of[b[0]]))
    }

    /// Finest common coarsening: the equivalence generated by relating
    /// states that share a block on either side.
    pub fn join(&self, other: &Partition) -> Partition {
        assert_eq!(self.space, other.space, "partitions of the same space");
        let n = self.space.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn root(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for part in [self, other] {
            for b in &part.blocks {
                for &x in &b[1..] {
                    let (rx, rb) = (root(&mut parent, x), root(&mut parent, b[0]));
                    parent[rx.max(rb)] = rx.min(rb);
                }
            }
        }
        let assign: Vec<usize> = (0..n).map(|x| root(&mut parent, x)).collect();
        Partition::from_block_of(self.space.clone(), &assign)
    }

    /// Block contents as state names.
    pub fn named_blocks(&self) -> Vec<Vec<&str>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&x| self.space.name(x)).collect())
            .collect()
    }
}

/// Splits the blocks of `part` by a per-state signature, keeping the
/// canonical order. `same` decides signature equality.
pub(crate) fn split_by<S, F>(part: &Partition, sigs: &[S], same: F) -> Partition
where
    F: Fn(&S, &S) -> bool,
{
    let n = part.space.len();
    let mut assign = vec![0usize; n];
    let mut next = 0usize;
    for block in part.blocks() {
        let mut reps: Vec<(usize, usize)> = Vec::new();
        for &x in block {
            match reps.iter().find(|(r, _)| same(&sigs[*r], &sigs[x])) {
                Some(&(_, idx)) => assign[x] = idx,
                None => {
                    reps.push((x, next));
                    assign[x] = next;
                    next += 1;
                }
            }
        }
    }
    Partition::from_block_of(part.space.clone(), &assign)
}

/// The coarsest partition whose quotient map is a homomorphism of the
/// system: states are separated exactly when their block-summed outgoing
/// weights differ. Splits by full-signature equality from the one-block
/// partition until stable; ties break by state index.
pub fn strong_minimize<Q: Quantale>(alpha: &KleisliEndo<Q>) -> Partition {
    let n = alpha.space().len();
    if n == 0 {
        return Partition::from_block_of(alpha.space().clone(), &[]);
    }
    let q = alpha.quantale().clone();
    let mut part = Partition::single_block(alpha.space().clone());
    loop {
        let sigs: Vec<Vec<Q::Elem>> = (0..n)
            .map(|x| {
                part.blocks()
                    .iter()
                    .map(|b| q.join_many(b.iter().map(|&y| alpha.get(x, y))))
                    .collect()
            })
            .collect();
        let refined = split_by(&part, &sigs, |a, b| a == b);
        if refined.num_blocks() == part.num_blocks() {
            return part;
        }
        part = refined;
    }
}

/// As [`strong_minimize`], for probabilistic kernels: signatures are
/// per-label block masses, compared entrywise within `EPS` (two
/// infinities count as equal).
pub fn strong_minimize_prob(alpha: &ProbKernel) -> Partition {
    let n = alpha.space().len();
    if n == 0 {
        return Partition::from_block_of(alpha.space().clone(), &[]);
    }
    let sigmas = alpha.sigma_count();
    let mut part = Partition::single_block(alpha.space().clone());
    loop {
        let sigs: Vec<Vec<f64>> = (0..n)
            .map(|x| {
                let mut row = Vec::with_capacity(sigmas * part.num_blocks());
                for sigma in 0..sigmas {
                    for b in part.blocks() {
                        row.push(b.iter().map(|&y| alpha.weight(x, sigma, y)).sum());
                    }
                }
                row
            })
            .collect();
        let refined = split_by(&part, &sigs, |a: &Vec<f64>, b: &Vec<f64>| {
            a.iter()
                .zip(b.iter())
                .all(|(va, vb)| crate::num::approx_eq(*va, *vb, EPS))
        });
        if refined.num_blocks() == part.num_blocks() {
            return part;
        }
        part = refined;
    }
}

/// The coarsest weak bisimulation: strong minimization of the saturated
/// system.
pub fn weak_minimize<Q: Quantale>(
    alpha: &KleisliEndo<Q>,
    cfg: &FixpointConfig,
) -> Result<Partition, SatError> {
    Ok(strong_minimize(&saturate(alpha, cfg)?))
}

/// Why a candidate quotient fails to be a weak bisimulation: two states
/// it merges whose saturated images into some class differ.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakWitness<Q: Quantale> {
    pub left: usize,
    pub right: usize,
    pub target: usize,
    pub left_weight: Q::Elem,
    pub right_weight: Q::Elem,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakVerdict<Q: Quantale> {
    pub witness: Option<WeakWitness<Q>>,
}

impl<Q: Quantale> WeakVerdict<Q> {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }
}

/// Does the quotient `f` induce a weak bisimulation on `alpha`? Computes
/// the saturation of `alpha` through the lifted quotient and asks whether
/// the result factors through `f`: rows of merged states must be
/// identical. The first offending pair, in index order, becomes the
/// witness.
pub fn weak_check<Q: Quantale>(
    alpha: &KleisliEndo<Q>,
    f: &QuotientMap,
    cfg: &FixpointConfig,
) -> Result<WeakVerdict<Q>, SatError> {
    let lifted = f.lift(alpha.quantale().clone());
    let through = saturate_through(alpha, &lifted, cfg)?;
    let n = alpha.space().len();
    for x in 0..n {
        for y in x + 1..n {
            if f.class_of(x) != f.class_of(y) {
                continue;
            }
            for c in 0..f.classes() {
                let (l, r) = (through.get(x, c), through.get(y, c));
                if l != r {
                    return Ok(WeakVerdict {
                        witness: Some(WeakWitness {
                            left: x,
                            right: y,
                            target: c,
                            left_weight: l.clone(),
                            right_weight: r.clone(),
                        }),
                    });
                }
            }
        }
    }
    Ok(WeakVerdict { witness: None })
}

/// Every partition of `0..n`, produced as restricted-growth strings in
/// lexicographic order.
pub(crate) fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        out.push(rgs.clone());
        // Advance to the next restricted growth string.
        let mut i = match n {
            0 => return out,
            _ => n - 1,
        };
        loop {
            if i == 0 {
                return out;
            }
            let cap = 1 + rgs[..i].iter().copied().max().unwrap_or(0);
            if rgs[i] < cap {
                rgs[i] += 1;
                for v in rgs[i + 1..].iter_mut() {
                    *v = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

pub const BRUTE_FORCE_MAX_STATES: usize = 7;

/// Independent oracle: enumerates every partition of the carrier, keeps
/// those that pass [`weak_check`], and returns their join. The join must
/// itself pass — this is asserted, not assumed.
pub fn brute_force_weak<Q: Quantale>(
    alpha: &KleisliEndo<Q>,
    cfg: &FixpointConfig,
) -> Result<Partition, BisimError> {
    let n = alpha.space().len();
    if n > BRUTE_FORCE_MAX_STATES {
        return Err(BisimError::TooLarge {
            size: n,
            limit: BRUTE_FORCE_MAX_STATES,
        });
    }
    let mut coarsest = Partition::discrete(alpha.space().clone());
    for assign in all_partitions(n) {
        let part = Partition::from_block_of(alpha.space().clone(), &assign);
        if weak_check(alpha, &part.quotient_map(), cfg)?.holds() {
            coarsest = coarsest.join(&part);
        }
    }
    let closed = weak_check(alpha, &coarsest.quotient_map(), cfg)?;
    assert!(
        closed.holds(),
        "join of passing partitions failed the check: {:?}",
        closed.witness
    );
    Ok(coarsest)
}

/// One candidate morphism family on which the two sides of the
/// correspondence disagreed. Expected never to occur.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjointDisagreement {
    pub family: Vec<KleisliMorphism<BoolQ>>,
    pub componentwise_holds: bool,
    pub collapsed_holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdjointReport {
    pub candidates: u64,
    pub disagreements: Vec<AdjointDisagreement>,
}

impl AdjointReport {
    pub fn passed(&self) -> bool {
        self.disagreements.is_empty()
    }
}

const ADJOINT_MAX_BITS: usize = 18;

/// Exhaustively verifies, for one diagram and one reflexive-transitive
/// target, that a family `{f_D}` satisfies the componentwise squares
/// `f_dst . pi(d) <= target . f_src` for every arrow exactly when its
/// cotuple `[f]` satisfies `[f] . collapse(pi) <= target . [f]` on the
/// coproduct carrier. Every boolean matrix family is enumerated.
pub fn adjoint_check(
    diagram: &Diagram<BoolQ>,
    target: &KleisliEndo<BoolQ>,
    cfg: &FixpointConfig,
) -> Result<AdjointReport, BisimError> {
    let id = KleisliEndo::identity(BoolQ, target.space().clone());
    let reflexive = id.leq(target)?;
    let transitive = target.compose(target)?.leq(target)?;
    if !reflexive || !transitive {
        return Err(BisimError::NotReflexiveTransitive);
    }
    let y_len = target.space().len();
    let total = diagram.total_states();
    let bits = total * y_len;
    if bits > ADJOINT_MAX_BITS {
        return Err(BisimError::TooLarge {
            size: bits,
            limit: ADJOINT_MAX_BITS,
        });
    }
    let collapsed = sigma_bang_diagram(diagram, cfg)?;
    let coproduct = diagram.coproduct_space()?;
    let offsets = diagram.offsets();
    let mut disagreements = Vec::new();
    let candidates = 1u64 << bits;
    for mask in 0..candidates {
        let mut family = Vec::with_capacity(diagram.objects().len());
        let mut cotuple =
            KleisliMorphism::bottom(BoolQ, coproduct.clone(), target.space().clone());
        let mut bit = 0;
        for (o, obj) in diagram.objects().iter().enumerate() {
            let mut f =
                KleisliMorphism::bottom(BoolQ, obj.space.clone(), target.space().clone());
            for x in 0..obj.space.len() {
                for y in 0..y_len {
                    if mask >> bit & 1 == 1 {
                        f.set(x, y, true);
                        cotuple.set(offsets[o] + x, y, true);
                    }
                    bit += 1;
                }
            }
            family.push(f);
        }
        let componentwise = diagram.arrows().iter().all(|a| {
            let lhs = family[a.dst].compose(&a.image).expect("endpoints match");
            let rhs = target
                .as_morphism()
                .compose(&family[a.src])
                .expect("shared target");
            lhs.leq(&rhs).expect("same shape")
        });
        let lhs = cotuple
            .compose(collapsed.as_morphism())
            .expect("coproduct carrier");
        let rhs = target
            .as_morphism()
            .compose(&cotuple)
            .expect("shared target");
        let collapsed_holds = lhs.leq(&rhs).expect("same shape");
        if componentwise != collapsed_holds {
            disagreements.push(AdjointDisagreement {
                family,
                componentwise_holds: componentwise,
                collapsed_holds,
            });
        }
    }
    Ok(AdjointReport {
        candidates,
        disagreements,
    })
}

/// [`adjoint_check`] for a one-object flow, via its diagram of sampled
/// components.
pub fn adjoint_check_mflow<K: Monoid>(
    flow: &MFlow<BoolQ, K>,
    target: &KleisliEndo<BoolQ>,
    cfg: &FixpointConfig,
) -> Result<AdjointReport, BisimError> {
    adjoint_check(&Diagram::from_mflow(flow), target, cfg)
}
