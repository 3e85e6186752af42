//! Weak bisimulation for fully probabilistic systems. Equivalence is
//! partition-relative here: merged states must assign the same weak
//! reachability value to every label and every class, where the values
//! come from the least-solution table of the saturation recurrences.
//! Because those values depend on the candidate partition itself, the
//! minimizer recomputes them each round instead of saturating once.

use crate::bisim::{all_partitions, split_by, BisimError, Partition, BRUTE_FORCE_MAX_STATES};
use crate::kleisli::ProbKernel;
use crate::num::approx_eq;
use crate::saturation::{saturate_prob_through, FixpointConfig, SatError};
use crate::EPS;
use alloc::vec::Vec;

/// Two merged states disagreeing on the weak reachability of a class.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbWeakWitness {
    pub left: usize,
    pub right: usize,
    pub sigma: usize,
    pub class: usize,
    pub left_value: f64,
    pub right_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbWeakVerdict {
    pub witness: Option<ProbWeakWitness>,
}

impl ProbWeakVerdict {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }
}

/// Is the partition a weak bisimulation on `alpha`? Solves the
/// reachability recurrences against the partition's quotient and compares
/// merged states entrywise within `EPS`; a pair of infinities counts as
/// equal. The first violating pair in index order becomes the witness.
pub fn prob_weak_check(
    alpha: &ProbKernel,
    part: &Partition,
    cfg: &FixpointConfig,
) -> Result<ProbWeakVerdict, SatError> {
    let sat = saturate_prob_through(alpha, &part.quotient_map(), cfg)?;
    let table = sat.require_converged()?;
    for block in part.blocks() {
        for (i, &x) in block.iter().enumerate() {
            for &y in &block[i + 1..] {
                for sigma in 0..alpha.sigma_count() {
                    for c in 0..part.num_blocks() {
                        let (l, r) = (table.get(x, sigma, c), table.get(y, sigma, c));
                        if !approx_eq(l, r, EPS) {
                            return Ok(ProbWeakVerdict {
                                witness: Some(ProbWeakWitness {
                                    left: x,
                                    right: y,
                                    sigma,
                                    class: c,
                                    left_value: l,
                                    right_value: r,
                                }),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(ProbWeakVerdict { witness: None })
}

/// The coarsest weak bisimulation of a probabilistic kernel: refine from
/// the one-block partition, splitting blocks by the reachability table
/// recomputed against the current partition, until stable. Ties break by
/// state index.
pub fn prob_weak_minimize(
    alpha: &ProbKernel,
    cfg: &FixpointConfig,
) -> Result<Partition, SatError> {
    let n = alpha.space().len();
    let mut part = Partition::single_block(alpha.space().clone());
    if n == 0 {
        return Ok(part);
    }
    loop {
        let sat = saturate_prob_through(alpha, &part.quotient_map(), cfg)?;
        let table = sat.require_converged()?;
        let sigs: Vec<Vec<f64>> = (0..n).map(|x| table.row(x).to_vec()).collect();
        let refined = split_by(&part, &sigs, |a: &Vec<f64>, b: &Vec<f64>| {
            a.iter().zip(b.iter()).all(|(va, vb)| approx_eq(*va, *vb, EPS))
        });
        if refined.num_blocks() == part.num_blocks() {
            return Ok(part);
        }
        part = refined;
    }
}

/// Independent oracle: enumerates every partition of the carrier, keeps
/// those that pass [`prob_weak_check`], and returns their join. The join
/// must itself pass — asserted, not assumed.
pub fn brute_force_prob_weak(
    alpha: &ProbKernel,
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
        if prob_weak_check(alpha, &part, cfg)?.holds() {
            coarsest = coarsest.join(&part);
        }
    }
    let closed = prob_weak_check(alpha, &coarsest, cfg)?;
    assert!(
        closed.holds(),
        "join of passing partitions failed the check: {:?}",
        closed.witness
    );
    Ok(coarsest)
}
