//! Continuous-time Markov chains presented by rate matrices. The chain's
//! time-indexed transition matrices form a one-parameter family closed
//! under composition; uniformization evaluates it, and the induced weak
//! equivalence compares states by the probability of ever reaching each
//! class.

use crate::bisim::{split_by, Partition};
use crate::kleisli::StateSpace;
use crate::num::{approx_eq, exp, fabs};
use crate::EPS;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Truncation point for Poisson series tails and linear-solve residuals.
const SERIES_TOL: f64 = 1e-12;
/// Above this value of λt the series is split by halving t and squaring.
const SERIES_MAX_LAMBDA_T: f64 = 200.0;

#[derive(Clone, Debug, PartialEq)]
pub enum CtmcError {
    NegativeRate { from: usize, to: usize, rate: f64 },
    SelfLoopRate { state: usize },
    StateOutOfRange { index: usize, size: usize },
    EmptyTarget,
}

impl fmt::Display for CtmcError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CtmcError::NegativeRate { from, to, rate } => {
                write!(f, "rate {rate} from state {from} to {to} is negative")
            }
            CtmcError::SelfLoopRate { state } => {
                write!(f, "state {state} may not carry a self-loop rate")
            }
            CtmcError::StateOutOfRange { index, size } => {
                write!(f, "state index {index} out of range for {size} states")
            }
            CtmcError::EmptyTarget => write!(f, "target state set is empty"),
        }
    }
}

impl core::error::Error for CtmcError {}

/// A finite chain given by nonnegative jump rates between distinct
/// states; `exit(i)` is the total rate out of `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct CtmcSpec {
    space: StateSpace,
    rates: Vec<f64>,
}

impl CtmcSpec {
    pub fn new(space: StateSpace) -> CtmcSpec {
        let n = space.len();
        CtmcSpec {
            space,
            rates: vec![0.0; n * n],
        }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[from * self.space.len() + to]
    }

    pub fn set_rate(&mut self, from: usize, to: usize, rate: f64) -> Result<(), CtmcError> {
        let n = self.space.len();
        for idx in [from, to] {
            if idx >= n {
                return Err(CtmcError::StateOutOfRange { index: idx, size: n });
            }
        }
        if from == to {
            return Err(CtmcError::SelfLoopRate { state: from });
        }
        if rate.is_nan() || rate < 0.0 {
            return Err(CtmcError::NegativeRate { from, to, rate });
        }
        self.rates[from * n + to] = rate;
        Ok(())
    }

    pub fn exit(&self, state: usize) -> f64 {
        let n = self.space.len();
        (0..n).map(|j| self.rates[state * n + j]).sum()
    }

    fn len(&self) -> usize {
        self.space.len()
    }
}

fn identity_matrix(n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// Row-sum norm of the difference of two square matrices.
fn inf_norm_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        let row: f64 = ra.iter().zip(rb).map(|(x, y)| fabs(x - y)).sum();
        if row > worst {
            worst = row;
        }
    }
    worst
}

/// The chain's transition matrix at time `t`, by uniformization: with
/// λ the largest exit rate and U the one-jump matrix of the λ-clocked
/// chain, P(t) is the Poisson(λt) mixture of powers of U, truncated
/// once the remaining tail mass drops below 1e-12. Large λt is halved
/// and squared first.
pub fn uniformize(spec: &CtmcSpec, t: f64) -> Vec<Vec<f64>> {
    assert!(t >= 0.0, "time must be nonnegative");
    let n = spec.len();
    let lambda = (0..n).map(|i| spec.exit(i)).fold(0.0f64, f64::max);
    if lambda == 0.0 || t == 0.0 {
        return identity_matrix(n);
    }
    if lambda * t > SERIES_MAX_LAMBDA_T {
        let half = uniformize(spec, t / 2.0);
        return mat_mul(&half, &half);
    }
    let mut u = identity_matrix(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                u[i][j] = 1.0 - spec.exit(i) / lambda;
            } else {
                u[i][j] = spec.rate(i, j) / lambda;
            }
        }
    }
    let mut term = exp(-lambda * t);
    let mut covered = term;
    let mut power = identity_matrix(n);
    let mut p: Vec<Vec<f64>> = power.iter().map(|row| row.iter().map(|x| x * term).collect()).collect();
    let mut k = 1.0;
    while 1.0 - covered > SERIES_TOL {
        power = mat_mul(&power, &u);
        term *= lambda * t / k;
        covered += term;
        for i in 0..n {
            for j in 0..n {
                p[i][j] += term * power[i][j];
            }
        }
        k += 1.0;
    }
    p
}

/// The time-indexed family of transition matrices of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionFunctor {
    spec: CtmcSpec,
}

impl TransitionFunctor {
    pub fn new(spec: CtmcSpec) -> TransitionFunctor {
        TransitionFunctor { spec }
    }

    pub fn spec(&self) -> &CtmcSpec {
        &self.spec
    }

    pub fn eval(&self, t: f64) -> Vec<Vec<f64>> {
        uniformize(&self.spec, t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctorViolation {
    pub t: f64,
    pub s: f64,
    pub deviation: f64,
}

/// Identity and composition checks on a matrix-valued evaluator:
/// the zero-time matrix must be the identity within 1e-12, and each
/// sampled pair must satisfy composition-over-addition of times within
/// 1e-9.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctorLawReport {
    pub identity_deviation: f64,
    pub checked: usize,
    pub violations: Vec<FunctorViolation>,
}

impl FunctorLawReport {
    pub fn passed(&self) -> bool {
        self.identity_deviation < 1e-12 && self.violations.is_empty()
    }
}

pub fn validate_evaluator<F>(eval: F, samples: &[(f64, f64)]) -> FunctorLawReport
where
    F: Fn(f64) -> Vec<Vec<f64>>,
{
    let at_zero = eval(0.0);
    let identity_deviation = inf_norm_diff(&at_zero, &identity_matrix(at_zero.len()));
    let mut violations = Vec::new();
    for &(t, s) in samples {
        let combined = eval(t + s);
        let composed = mat_mul(&eval(t), &eval(s));
        let deviation = inf_norm_diff(&combined, &composed);
        if deviation >= 1e-9 {
            violations.push(FunctorViolation { t, s, deviation });
        }
    }
    FunctorLawReport {
        identity_deviation,
        checked: samples.len(),
        violations,
    }
}

pub fn validate_transition_functor(spec: &CtmcSpec, samples: &[(f64, f64)]) -> FunctorLawReport {
    validate_evaluator(|t| uniformize(spec, t), samples)
}

/// States from which some target state is reachable through positive
/// rates.
fn can_reach(spec: &CtmcSpec, targets: &[bool]) -> Vec<bool> {
    let n = spec.len();
    let mut reach = targets.to_vec();
    let mut queue: Vec<usize> = (0..n).filter(|&i| reach[i]).collect();
    let mut head = 0;
    while head < queue.len() {
        let j = queue[head];
        head += 1;
        for i in 0..n {
            if !reach[i] && spec.rate(i, j) > 0.0 {
                reach[i] = true;
                queue.push(i);
            }
        }
    }
    reach
}

/// Gaussian elimination with partial pivoting; `None` when a pivot
/// degenerates.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r1, &r2| fabs(a[r1][col]).total_cmp(&fabs(a[r2][col])))?;
        if fabs(a[pivot][col]) < SERIES_TOL {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Probability of ever visiting the target set, per start state: 1 on
/// the targets, 0 where they are unreachable, and elsewhere the least
/// solution of the one-jump equations of the embedded chain — solved
/// directly, with monotone value iteration from zero as fallback.
pub fn hitting(spec: &CtmcSpec, targets: &[usize]) -> Result<Vec<f64>, CtmcError> {
    let n = spec.len();
    if targets.is_empty() {
        return Err(CtmcError::EmptyTarget);
    }
    let mut in_target = vec![false; n];
    for &c in targets {
        if c >= n {
            return Err(CtmcError::StateOutOfRange { index: c, size: n });
        }
        in_target[c] = true;
    }
    let reach = can_reach(spec, &in_target);
    let unknown: Vec<usize> = (0..n).filter(|&i| reach[i] && !in_target[i]).collect();
    let mut h = vec![0.0; n];
    for i in 0..n {
        if in_target[i] {
            h[i] = 1.0;
        }
    }
    if unknown.is_empty() {
        return Ok(h);
    }
    // h_i = Σ_j (rate(i,j)/exit(i)) h_j over the unknown block, with the
    // known values folded into the right-hand side.
    let m = unknown.len();
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for (r, &i) in unknown.iter().enumerate() {
        let exit = spec.exit(i);
        a[r][r] = 1.0;
        for j in 0..n {
            let p = spec.rate(i, j) / exit;
            if p == 0.0 {
                continue;
            }
            if let Some(c) = unknown.iter().position(|&u| u == j) {
                a[r][c] -= p;
            } else {
                b[r] += p * h[j];
            }
        }
    }
    match solve_dense(a, b) {
        Some(x) => {
            for (r, &i) in unknown.iter().enumerate() {
                h[i] = x[r].clamp(0.0, 1.0);
            }
        }
        None => {
            // Value iteration: h ← jump(h), monotone from 0.
            let mut cur = vec![0.0; m];
            loop {
                let mut next = vec![0.0; m];
                let mut residual: f64 = 0.0;
                for (r, &i) in unknown.iter().enumerate() {
                    let exit = spec.exit(i);
                    let mut acc = 0.0;
                    for j in 0..n {
                        let p = spec.rate(i, j) / exit;
                        if p == 0.0 {
                            continue;
                        }
                        acc += p * match unknown.iter().position(|&u| u == j) {
                            Some(c) => cur[c],
                            None => h[j],
                        };
                    }
                    next[r] = acc;
                    residual = residual.max(fabs(acc - cur[r]));
                }
                cur = next;
                if residual < SERIES_TOL {
                    break;
                }
            }
            for (r, &i) in unknown.iter().enumerate() {
                h[i] = cur[r];
            }
        }
    }
    Ok(h)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CtmcWeakWitness {
    pub left: usize,
    pub right: usize,
    /// Least member of the class the two states disagree on.
    pub class: usize,
    pub left_value: f64,
    pub right_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CtmcWeakVerdict {
    pub witness: Option<CtmcWeakWitness>,
}

impl CtmcWeakVerdict {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }
}

/// Do all same-block pairs reach every class with equal probability
/// (within `EPS`)?
pub fn ctmc_weak_check(spec: &CtmcSpec, part: &Partition) -> Result<CtmcWeakVerdict, CtmcError> {
    for class in part.blocks() {
        let h = hitting(spec, class)?;
        for block in part.blocks() {
            for w in 1..block.len() {
                let (x, y) = (block[0], block[w]);
                if !approx_eq(h[x], h[y], EPS) {
                    return Ok(CtmcWeakVerdict {
                        witness: Some(CtmcWeakWitness {
                            left: x,
                            right: y,
                            class: class[0],
                            left_value: h[x],
                            right_value: h[y],
                        }),
                    });
                }
            }
        }
    }
    Ok(CtmcWeakVerdict { witness: None })
}

/// Strongly connected components of the positive-rate digraph that no
/// positive rate leaves, in ascending order of least member.
fn bottom_components(spec: &CtmcSpec) -> Vec<Vec<usize>> {
    let n = spec.len();
    // Kosaraju: forward finish order, then reverse-graph sweeps.
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        // Iterative DFS recording exit order.
        let mut stack = vec![(start, 0usize)];
        seen[start] = true;
        while let Some(top) = stack.last_mut() {
            let (u, v) = (top.0, top.1);
            if v < n {
                top.1 += 1;
                if spec.rate(u, v) > 0.0 && !seen[v] {
                    seen[v] = true;
                    stack.push((v, 0));
                }
            } else {
                order.push(u);
                stack.pop();
            }
        }
    }
    let mut component = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for &root in order.iter().rev() {
        if component[root] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = vec![root];
        component[root] = id;
        let mut head = 0;
        while head < members.len() {
            let u = members[head];
            head += 1;
            for v in 0..n {
                if spec.rate(v, u) > 0.0 && component[v] == usize::MAX {
                    component[v] = id;
                    members.push(v);
                }
            }
        }
        comps.push(members);
    }
    let mut bottoms: Vec<Vec<usize>> = comps
        .into_iter()
        .filter(|members| {
            members.iter().all(|&u| {
                (0..n).all(|v| spec.rate(u, v) == 0.0 || members.contains(&v))
            })
        })
        .map(|mut members| {
            members.sort_unstable();
            members
        })
        .collect();
    bottoms.sort();
    bottoms
}

/// The coarsest partition whose same-block states reach every class
/// with equal probability. Seeded by the reach probabilities toward
/// each bottom component — the sinks that decide where mass eventually
/// settles — then refined against its own classes until stable.
pub fn ctmc_weak_minimize(spec: &CtmcSpec) -> Partition {
    let n = spec.len();
    let space = spec.space().clone();
    let bottoms = bottom_components(spec);
    let mut seed_sigs: Vec<Vec<f64>> = vec![Vec::new(); n];
    for bottom in &bottoms {
        let h = hitting(spec, bottom).expect("bottom components are nonempty");
        for i in 0..n {
            seed_sigs[i].push(h[i]);
        }
    }
    let same = |a: &Vec<f64>, b: &Vec<f64>| {
        a.iter().zip(b).all(|(x, y)| approx_eq(*x, *y, EPS))
    };
    let mut part = split_by(&Partition::single_block(space), &seed_sigs, same);
    loop {
        let mut sigs: Vec<Vec<f64>> = vec![Vec::new(); n];
        for class in part.blocks() {
            let h = hitting(spec, class).expect("classes are nonempty");
            for i in 0..n {
                sigs[i].push(h[i]);
            }
        }
        let refined = split_by(&part, &sigs, same);
        if refined.num_blocks() == part.num_blocks() {
            return part;
        }
        part = refined;
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Estimates the hitting probabilities by simulating the embedded jump
/// chain `runs` times per start state with a deterministic seeded
/// stream. The jump chain alone decides whether a trajectory ever
/// enters the target; holding times only schedule when. A walk stops as
/// soon as the target can no longer be reached.
pub fn monte_carlo_hitting(
    spec: &CtmcSpec,
    targets: &[usize],
    runs: u32,
    seed: u64,
) -> Result<Vec<f64>, CtmcError> {
    let n = spec.len();
    if targets.is_empty() {
        return Err(CtmcError::EmptyTarget);
    }
    let mut in_target = vec![false; n];
    for &c in targets {
        if c >= n {
            return Err(CtmcError::StateOutOfRange { index: c, size: n });
        }
        in_target[c] = true;
    }
    let reach = can_reach(spec, &in_target);
    let mut state = seed;
    let mut out = vec![0.0; n];
    for (start, slot) in out.iter_mut().enumerate() {
        let mut hits = 0u32;
        for _ in 0..runs {
            let mut cur = start;
            loop {
                if in_target[cur] {
                    hits += 1;
                    break;
                }
                if !reach[cur] {
                    break;
                }
                let exit = spec.exit(cur);
                let roll = (splitmix64(&mut state) >> 11) as f64 / (1u64 << 53) as f64;
                let mut acc = 0.0;
                let mut next = cur;
                for j in 0..n {
                    acc += spec.rate(cur, j) / exit;
                    if roll < acc {
                        next = j;
                        break;
                    }
                }
                cur = next;
            }
        }
        *slot = f64::from(hits) / f64::from(runs);
    }
    Ok(out)
}
