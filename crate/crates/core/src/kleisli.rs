//! Finite state spaces and the two kinds of arrows between them that the
//! rest of the crate manipulates: quantale-weighted matrices (relations,
//! weighted relations, label-set systems) and probabilistic kernels with an
//! explicit silent label.
//!
//! Weighted matrices compose like matrices over the quantale: the weight
//! from `x` to `z` is the join over mid-points `y` of `mul(first leg,
//! second leg)`. Probabilistic kernels compose by summing over mid-points,
//! with the silent label threading through visible steps.

use crate::num::mul_ext;
use crate::quantale::Quantale;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Index of the silent label in a [`ProbKernel`]'s label dimension.
pub const TAU: usize = 0;

/// Errors from assembling or combining arrows.
#[derive(Clone, Debug, PartialEq)]
pub enum KleisliError {
    /// Two arrows were combined along spaces that do not match.
    SpaceMismatch {
        expected: String,
        found: String,
    },
    DuplicateState(String),
    /// A quotient map misses some class or points outside its codomain.
    NotSurjective {
        class: usize,
    },
    AssignmentLength {
        expected: usize,
        found: usize,
    },
    /// A probability or rate was negative or NaN.
    InvalidWeight(f64),
    StateOutOfRange {
        index: usize,
        size: usize,
    },
}

impl fmt::Display for KleisliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KleisliError::SpaceMismatch { expected, found } => {
                write!(f, "state space mismatch: expected {expected}, found {found}")
            }
            KleisliError::DuplicateState(name) => write!(f, "duplicate state name {name:?}"),
            KleisliError::NotSurjective { class } => {
                write!(f, "quotient map misses class {class}")
            }
            KleisliError::AssignmentLength { expected, found } => {
                write!(f, "assignment has length {found}, space has {expected} states")
            }
            KleisliError::InvalidWeight(w) => write!(f, "invalid weight {w}"),
            KleisliError::StateOutOfRange { index, size } => {
                write!(f, "state index {index} out of range for {size} states")
            }
        }
    }
}

impl core::error::Error for KleisliError {}

/// A finite ordered set of named states.
#[derive(Clone, PartialEq, Eq)]
pub struct StateSpace {
    names: Vec<String>,
}

impl StateSpace {
    pub fn new<I, S>(names: I) -> Result<StateSpace, KleisliError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(KleisliError::DuplicateState(n.clone()));
            }
        }
        Ok(StateSpace { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn describe(&self) -> String {
        let mut s = String::new();
        s.push('[');
        for (i, n) in self.names.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            s.push_str(n);
        }
        s.push(']');
        s
    }
}

impl fmt::Debug for StateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

fn check_same_space(expected: &StateSpace, found: &StateSpace) -> Result<(), KleisliError> {
    if expected == found {
        Ok(())
    } else {
        Err(KleisliError::SpaceMismatch {
            expected: expected.describe(),
            found: found.describe(),
        })
    }
}

/// A quantale-weighted matrix between two state spaces, stored densely in
/// row-major order (source rows, destination columns).
#[derive(Clone, PartialEq, Eq)]
pub struct KleisliMorphism<Q: Quantale> {
    quantale: Q,
    src: StateSpace,
    dst: StateSpace,
    w: Vec<Q::Elem>,
}

impl<Q: Quantale> KleisliMorphism<Q> {
    /// The everywhere-bottom arrow.
    pub fn bottom(quantale: Q, src: StateSpace, dst: StateSpace) -> Self {
        let w = vec![quantale.bottom(); src.len() * dst.len()];
        KleisliMorphism {
            quantale,
            src,
            dst,
            w,
        }
    }

    /// The graph of a state function: unit weight from each `x` to
    /// `assign[x]`, bottom elsewhere.
    pub fn from_function(
        quantale: Q,
        src: StateSpace,
        dst: StateSpace,
        assign: &[usize],
    ) -> Result<Self, KleisliError> {
        if assign.len() != src.len() {
            return Err(KleisliError::AssignmentLength {
                expected: src.len(),
                found: assign.len(),
            });
        }
        let mut m = Self::bottom(quantale, src, dst);
        for (x, &c) in assign.iter().enumerate() {
            if c >= m.dst.len() {
                return Err(KleisliError::StateOutOfRange {
                    index: c,
                    size: m.dst.len(),
                });
            }
            let u = m.quantale.unit();
            m.set(x, c, u);
        }
        Ok(m)
    }

    pub fn quantale(&self) -> &Q {
        &self.quantale
    }

    pub fn src(&self) -> &StateSpace {
        &self.src
    }

    pub fn dst(&self) -> &StateSpace {
        &self.dst
    }

    pub fn get(&self, x: usize, y: usize) -> &Q::Elem {
        &self.w[x * self.dst.len() + y]
    }

    pub fn set(&mut self, x: usize, y: usize, e: Q::Elem) {
        self.w[x * self.dst.len() + y] = e;
    }

    /// Joins `e` into the current weight at `(x, y)`.
    pub fn add(&mut self, x: usize, y: usize, e: &Q::Elem) {
        let cur = self.get(x, y);
        let joined = self.quantale.join(cur, e);
        self.set(x, y, joined);
    }

    /// `self` after `other`: for `other: X -> Y` and `self: Y -> Z` the
    /// result maps `X -> Z` with weight the join over mid-points of the
    /// two legs multiplied in diagram order.
    pub fn compose(&self, other: &Self) -> Result<Self, KleisliError> {
        check_same_space(&other.dst, &self.src)?;
        let q = self.quantale.clone();
        let mut out = Self::bottom(q, other.src.clone(), self.dst.clone());
        for x in 0..other.src.len() {
            for z in 0..self.dst.len() {
                let mut acc = self.quantale.bottom();
                for y in 0..other.dst.len() {
                    let term = self.quantale.mul(other.get(x, y), self.get(y, z));
                    acc = self.quantale.join(&acc, &term);
                }
                out.set(x, z, acc);
            }
        }
        Ok(out)
    }

    /// Entrywise join; both arrows must share source and destination.
    pub fn join(&self, other: &Self) -> Result<Self, KleisliError> {
        check_same_space(&self.src, &other.src)?;
        check_same_space(&self.dst, &other.dst)?;
        let mut out = self.clone();
        for i in 0..out.w.len() {
            out.w[i] = self.quantale.join(&self.w[i], &other.w[i]);
        }
        Ok(out)
    }

    /// Entrywise order.
    pub fn leq(&self, other: &Self) -> Result<bool, KleisliError> {
        check_same_space(&self.src, &other.src)?;
        check_same_space(&self.dst, &other.dst)?;
        Ok(self
            .w
            .iter()
            .zip(other.w.iter())
            .all(|(a, b)| self.quantale.leq(a, b)))
    }

    /// All entries with their indices, row by row.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Q::Elem)> {
        let cols = self.dst.len();
        self.w
            .iter()
            .enumerate()
            .map(move |(i, e)| (i / cols, i % cols, e))
    }
}

impl<Q: Quantale> fmt::Debug for KleisliMorphism<Q> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:?} -> {:?}", self.src, self.dst)?;
        for x in 0..self.src.len() {
            write!(f, "  {}:", self.src.name(x))?;
            for y in 0..self.dst.len() {
                let e = self.get(x, y);
                if !self.quantale.is_bottom(e) {
                    write!(f, " {}={:?}", self.dst.name(y), e)?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// A weighted matrix whose source and destination coincide: one step of a
/// transition system.
#[derive(Clone, PartialEq, Eq)]
pub struct KleisliEndo<Q: Quantale>(KleisliMorphism<Q>);

impl<Q: Quantale> KleisliEndo<Q> {
    pub fn bottom(quantale: Q, space: StateSpace) -> Self {
        KleisliEndo(KleisliMorphism::bottom(quantale, space.clone(), space))
    }

    /// The identity arrow: unit weight on the diagonal, bottom elsewhere.
    pub fn identity(quantale: Q, space: StateSpace) -> Self {
        let mut m = KleisliMorphism::bottom(quantale, space.clone(), space);
        for x in 0..m.src.len() {
            let u = m.quantale.unit();
            m.set(x, x, u);
        }
        KleisliEndo(m)
    }

    pub fn from_morphism(m: KleisliMorphism<Q>) -> Result<Self, KleisliError> {
        check_same_space(&m.src, &m.dst)?;
        Ok(KleisliEndo(m))
    }

    pub fn as_morphism(&self) -> &KleisliMorphism<Q> {
        &self.0
    }

    pub fn into_morphism(self) -> KleisliMorphism<Q> {
        self.0
    }

    pub fn quantale(&self) -> &Q {
        &self.0.quantale
    }

    pub fn space(&self) -> &StateSpace {
        &self.0.src
    }

    pub fn get(&self, x: usize, y: usize) -> &Q::Elem {
        self.0.get(x, y)
    }

    pub fn set(&mut self, x: usize, y: usize, e: Q::Elem) {
        self.0.set(x, y, e)
    }

    pub fn add(&mut self, x: usize, y: usize, e: &Q::Elem) {
        self.0.add(x, y, e)
    }

    /// `self` after `other`, both on the same space.
    pub fn compose(&self, other: &Self) -> Result<Self, KleisliError> {
        Ok(KleisliEndo(self.0.compose(&other.0)?))
    }

    pub fn join(&self, other: &Self) -> Result<Self, KleisliError> {
        Ok(KleisliEndo(self.0.join(&other.0)?))
    }

    pub fn leq(&self, other: &Self) -> Result<bool, KleisliError> {
        self.0.leq(&other.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Q::Elem)> {
        self.0.entries()
    }
}

impl<Q: Quantale> fmt::Debug for KleisliEndo<Q> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Does the square `f . alpha <= beta . f` hold? This is the defining
/// inequality of an oplax morphism from `alpha` to `beta` along `f`.
pub fn oplax_square_holds<Q: Quantale>(
    f: &KleisliMorphism<Q>,
    alpha: &KleisliEndo<Q>,
    beta: &KleisliEndo<Q>,
) -> Result<bool, KleisliError> {
    let lhs = f.compose(alpha.as_morphism())?;
    let rhs = beta.as_morphism().compose(f)?;
    lhs.leq(&rhs)
}

/// A surjective map onto a space of equivalence classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientMap {
    src: StateSpace,
    dst: StateSpace,
    assign: Vec<usize>,
}

impl QuotientMap {
    pub fn new(
        src: StateSpace,
        dst: StateSpace,
        assign: Vec<usize>,
    ) -> Result<QuotientMap, KleisliError> {
        if assign.len() != src.len() {
            return Err(KleisliError::AssignmentLength {
                expected: src.len(),
                found: assign.len(),
            });
        }
        for &c in &assign {
            if c >= dst.len() {
                return Err(KleisliError::StateOutOfRange {
                    index: c,
                    size: dst.len(),
                });
            }
        }
        for c in 0..dst.len() {
            if !assign.contains(&c) {
                return Err(KleisliError::NotSurjective { class: c });
            }
        }
        Ok(QuotientMap { src, dst, assign })
    }

    pub fn identity(space: StateSpace) -> QuotientMap {
        let assign = (0..space.len()).collect();
        QuotientMap {
            src: space.clone(),
            dst: space,
            assign,
        }
    }

    pub fn src(&self) -> &StateSpace {
        &self.src
    }

    pub fn dst(&self) -> &StateSpace {
        &self.dst
    }

    pub fn class_of(&self, x: usize) -> usize {
        self.assign[x]
    }

    pub fn classes(&self) -> usize {
        self.dst.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assign
    }

    /// The graph of the map as a weighted matrix over `quantale`.
    pub fn lift<Q: Quantale>(&self, quantale: Q) -> KleisliMorphism<Q> {
        KleisliMorphism::from_function(quantale, self.src.clone(), self.dst.clone(), &self.assign)
            .expect("a quotient map is a well-formed function")
    }
}

/// A probabilistic transition kernel on one space: weight of moving from
/// `x` to `y` while emitting `sigma`, where label index [`TAU`] is the
/// silent label and index `i + 1` is `labels[i]`. Weights live in
/// `[0, inf]`.
#[derive(Clone, PartialEq)]
pub struct ProbKernel {
    space: StateSpace,
    labels: Vec<String>,
    w: Vec<f64>,
}

impl ProbKernel {
    pub fn new(space: StateSpace, labels: Vec<String>) -> ProbKernel {
        let w = vec![0.0; space.len() * (labels.len() + 1) * space.len()];
        ProbKernel { space, labels, w }
    }

    /// The identity kernel: silent weight 1 on the diagonal.
    pub fn identity(space: StateSpace, labels: Vec<String>) -> ProbKernel {
        let mut k = ProbKernel::new(space, labels);
        for x in 0..k.space.len() {
            k.set_weight(x, TAU, x, 1.0).expect("1 is a valid weight");
        }
        k
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Number of label indices including the silent one.
    pub fn sigma_count(&self) -> usize {
        self.labels.len() + 1
    }

    pub fn sigma_name(&self, sigma: usize) -> &str {
        if sigma == TAU {
            "tau"
        } else {
            &self.labels[sigma - 1]
        }
    }

    pub fn sigma_index(&self, name: &str) -> Option<usize> {
        if name == "tau" {
            Some(TAU)
        } else {
            self.labels.iter().position(|l| l == name).map(|i| i + 1)
        }
    }

    fn idx(&self, x: usize, sigma: usize, y: usize) -> usize {
        let n = self.space.len();
        (x * self.sigma_count() + sigma) * n + y
    }

    pub fn weight(&self, x: usize, sigma: usize, y: usize) -> f64 {
        self.w[self.idx(x, sigma, y)]
    }

    pub fn set_weight(
        &mut self,
        x: usize,
        sigma: usize,
        y: usize,
        p: f64,
    ) -> Result<(), KleisliError> {
        if p.is_nan() || p < 0.0 {
            return Err(KleisliError::InvalidWeight(p));
        }
        let i = self.idx(x, sigma, y);
        self.w[i] = p;
        Ok(())
    }

    /// Total outgoing mass of `x` over all labels and targets.
    pub fn row_mass(&self, x: usize) -> f64 {
        let mut total = 0.0;
        for sigma in 0..self.sigma_count() {
            for y in 0..self.space.len() {
                total += self.weight(x, sigma, y);
            }
        }
        total
    }

    /// A kernel is stochastic when every row has total mass 1 within
    /// `tol`.
    pub fn is_stochastic(&self, tol: f64) -> bool {
        (0..self.space.len()).all(|x| crate::num::approx_eq(self.row_mass(x), 1.0, tol))
    }

    /// `self` after `other`. Silent steps of the first leg thread through
    /// the second leg; a visible step may happen on either leg but not
    /// both:
    ///
    /// ```text
    /// (g . f)(x)(tau, z) = sum_y g(y)(tau, z) * f(x)(tau, y)
    /// (g . f)(x)(a,   z) = sum_y g(y)(a, z) * f(x)(tau, y)
    ///                           + g(y)(tau, z) * f(x)(a, y)
    /// ```
    ///
    /// with the convention `0 * inf = 0`.
    pub fn compose(&self, other: &ProbKernel) -> Result<ProbKernel, KleisliError> {
        check_same_space(&other.space, &self.space)?;
        if self.labels != other.labels {
            return Err(KleisliError::SpaceMismatch {
                expected: alloc::format!("labels {:?}", self.labels),
                found: alloc::format!("labels {:?}", other.labels),
            });
        }
        let n = self.space.len();
        let mut out = ProbKernel::new(self.space.clone(), self.labels.clone());
        for x in 0..n {
            for z in 0..n {
                let mut tau_acc = 0.0;
                for y in 0..n {
                    tau_acc += mul_ext(self.weight(y, TAU, z), other.weight(x, TAU, y));
                }
                let i = out.idx(x, TAU, z);
                out.w[i] = tau_acc;
                for sigma in 1..self.sigma_count() {
                    let mut acc = 0.0;
                    for y in 0..n {
                        acc += mul_ext(self.weight(y, sigma, z), other.weight(x, TAU, y));
                        acc += mul_ext(self.weight(y, TAU, z), other.weight(x, sigma, y));
                    }
                    let i = out.idx(x, sigma, z);
                    out.w[i] = acc;
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for ProbKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kernel on {:?}", self.space)?;
        for x in 0..self.space.len() {
            write!(f, "  {}:", self.space.name(x))?;
            for sigma in 0..self.sigma_count() {
                for y in 0..self.space.len() {
                    let p = self.weight(x, sigma, y);
                    if p != 0.0 {
                        write!(f, " {}:{}={}", self.sigma_name(sigma), self.space.name(y), p)?;
                    }
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// A table of numeric weights indexed by (state, label, class): the shape
/// of a probabilistic signature against a partition.
#[derive(Clone, PartialEq, Debug)]
pub struct ProbTable {
    space: StateSpace,
    labels: Vec<String>,
    classes: usize,
    v: Vec<f64>,
}

impl ProbTable {
    pub fn zeros(space: StateSpace, labels: Vec<String>, classes: usize) -> ProbTable {
        let v = vec![0.0; space.len() * (labels.len() + 1) * classes];
        ProbTable {
            space,
            labels,
            classes,
            v,
        }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn sigma_count(&self) -> usize {
        self.labels.len() + 1
    }

    fn idx(&self, x: usize, sigma: usize, c: usize) -> usize {
        (x * self.sigma_count() + sigma) * self.classes + c
    }

    pub fn get(&self, x: usize, sigma: usize, c: usize) -> f64 {
        self.v[self.idx(x, sigma, c)]
    }

    pub fn set(&mut self, x: usize, sigma: usize, c: usize, p: f64) {
        let i = self.idx(x, sigma, c);
        self.v[i] = p;
    }

    /// The signature row of one state, labels varying slower than classes.
    pub fn row(&self, x: usize) -> &[f64] {
        let w = self.sigma_count() * self.classes;
        &self.v[x * w..(x + 1) * w]
    }
}

/// Signature of a weighted system against a quotient: the weight from each
/// state into each class, joined over the class members.
pub fn pushforward_q<Q: Quantale>(
    f: &QuotientMap,
    alpha: &KleisliEndo<Q>,
) -> Result<KleisliMorphism<Q>, KleisliError> {
    check_same_space(f.src(), alpha.space())?;
    f.lift(alpha.quantale().clone()).compose(alpha.as_morphism())
}

/// Signature of a probabilistic kernel against a quotient: the mass from
/// each state into each class under each label, summed over the class
/// members.
pub fn pushforward_prob(f: &QuotientMap, k: &ProbKernel) -> Result<ProbTable, KleisliError> {
    check_same_space(f.src(), k.space())?;
    let mut table = ProbTable::zeros(k.space().clone(), k.labels().to_vec(), f.classes());
    for x in 0..k.space().len() {
        for sigma in 0..k.sigma_count() {
            for y in 0..k.space().len() {
                let c = f.class_of(y);
                let cur = table.get(x, sigma, c);
                table.set(x, sigma, c, cur + k.weight(x, sigma, y));
            }
        }
    }
    Ok(table)
}
