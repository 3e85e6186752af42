//! Unital quantales: complete-lattice-ordered monoids whose multiplication
//! preserves joins. Weights of transition systems live in a quantale; the
//! two instances provided here are the booleans and finite sets of
//! (label, monoid value) pairs.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// A monoid whose elements carry equality and a total order.
///
/// The order is not assumed compatible with the operation; it only fixes a
/// canonical ordering of elements inside weight sets so that results print
/// and compare deterministically.
pub trait Monoid: Clone + PartialEq + fmt::Debug {
    type Elem: Clone + Eq + Ord + fmt::Debug;

    fn unit(&self) -> Self::Elem;
    fn op(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
}

/// One-element monoid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct TrivialMonoid;

impl Monoid for TrivialMonoid {
    type Elem = ();

    fn unit(&self) {}
    fn op(&self, _: &(), _: &()) {}
}

/// Natural numbers under addition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct NatAdd;

impl Monoid for NatAdd {
    type Elem = u64;

    fn unit(&self) -> u64 {
        0
    }

    fn op(&self, a: &u64, b: &u64) -> u64 {
        a + b
    }
}

/// Non-negative reals under addition, used for durations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct RealAdd;

impl Monoid for RealAdd {
    type Elem = Time;

    fn unit(&self) -> Time {
        Time::ZERO
    }

    fn op(&self, a: &Time, b: &Time) -> Time {
        Time::new(a.get() + b.get())
    }
}

/// Product of two monoids with the componentwise operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct ProductMonoid<A, B>(pub A, pub B);

impl<A: Monoid, B: Monoid> Monoid for ProductMonoid<A, B> {
    type Elem = (A::Elem, B::Elem);

    fn unit(&self) -> Self::Elem {
        (self.0.unit(), self.1.unit())
    }

    fn op(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        (self.0.op(&a.0, &b.0), self.1.op(&a.1, &b.1))
    }
}

/// A finite non-negative duration. Wraps an `f64` so durations can sit in
/// ordered sets; the order is the usual one on reals.
#[derive(Clone, Copy, PartialEq)]
pub struct Time(f64);

impl Time {
    pub const ZERO: Time = Time(0.0);

    /// Panics on NaN or negative input; durations are finite non-negative.
    pub fn new(t: f64) -> Time {
        assert!(t >= 0.0, "durations must be non-negative, got {t:?}");
        Time(t)
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Eq for Time {}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A transition label: either the silent label or a visible name.
///
/// `Tau` sorts before every visible label, and visible labels sort
/// lexicographically, which fixes the canonical order of weight sets.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Label {
    Tau,
    Vis(String),
}

impl Label {
    pub fn vis(name: impl Into<String>) -> Label {
        Label::Vis(name.into())
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Label::Tau)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tau => write!(f, "tau"),
            Label::Vis(s) => write!(f, "{s}"),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A finite set of (label, monoid value) pairs; the element type of
/// [`LabelSetQ`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LabelSet<M: Clone + Eq + Ord>(BTreeSet<(Label, M)>);

impl<M: Clone + Eq + Ord> LabelSet<M> {
    pub fn empty() -> Self {
        LabelSet(BTreeSet::new())
    }

    pub fn singleton(label: Label, m: M) -> Self {
        let mut s = BTreeSet::new();
        s.insert((label, m));
        LabelSet(s)
    }

    pub fn insert(&mut self, label: Label, m: M) {
        self.0.insert((label, m));
    }

    pub fn contains(&self, label: &Label, m: &M) -> bool {
        self.0.contains(&(label.clone(), m.clone()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Label, M)> {
        self.0.iter()
    }
}

impl<M: Clone + Eq + Ord> FromIterator<(Label, M)> for LabelSet<M> {
    fn from_iter<I: IntoIterator<Item = (Label, M)>>(iter: I) -> Self {
        LabelSet(iter.into_iter().collect())
    }
}

impl<M: Clone + Eq + Ord + fmt::Debug> fmt::Debug for LabelSet<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (l, m)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({l:?}, {m:?})")?;
        }
        write!(f, "}}")
    }
}

/// A unital quantale: a monoid on a complete lattice whose multiplication
/// distributes over arbitrary joins on both sides.
///
/// Only finitely many elements ever arise in a finite system, so joins are
/// exposed binarily with `bottom` as the empty join.
pub trait Quantale: Clone + PartialEq + fmt::Debug {
    type Elem: Clone + Eq + Ord + fmt::Debug;

    fn bottom(&self) -> Self::Elem;
    fn unit(&self) -> Self::Elem;
    fn join(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;

    /// The lattice order: `a <= b` iff `a v b = b`.
    fn leq(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        self.join(a, b) == *b
    }

    fn is_bottom(&self, a: &Self::Elem) -> bool {
        *a == self.bottom()
    }

    fn join_many<'a, I>(&self, elems: I) -> Self::Elem
    where
        Self::Elem: 'a,
        I: IntoIterator<Item = &'a Self::Elem>,
    {
        let mut acc = self.bottom();
        for e in elems {
            acc = self.join(&acc, e);
        }
        acc
    }
}

/// The two-element quantale: conjunction as multiplication, disjunction as
/// join. Weighting a system over it yields a plain relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct BoolQ;

impl Quantale for BoolQ {
    type Elem = bool;

    fn bottom(&self) -> bool {
        false
    }

    fn unit(&self) -> bool {
        true
    }

    fn join(&self, a: &bool, b: &bool) -> bool {
        *a || *b
    }

    fn mul(&self, a: &bool, b: &bool) -> bool {
        *a && *b
    }
}

/// Finite sets of (label, monoid value) pairs under union.
///
/// Multiplication composes two observation sets under the rule that at most
/// one visible label survives: a silent pair passes the other set's label
/// through while monoid values accumulate, so
/// `A * B = { (s, m*n) | (tau,m) in A, (s,n) in B } u { (s, m*n) | (s,m) in A, (tau,n) in B }`.
/// The unit is the singleton silent observation with the monoid unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct LabelSetQ<M: Monoid> {
    pub monoid: M,
}

impl<M: Monoid> LabelSetQ<M> {
    pub fn new(monoid: M) -> Self {
        LabelSetQ { monoid }
    }
}

impl<M: Monoid> Quantale for LabelSetQ<M> {
    type Elem = LabelSet<M::Elem>;

    fn bottom(&self) -> Self::Elem {
        LabelSet::empty()
    }

    fn unit(&self) -> Self::Elem {
        LabelSet::singleton(Label::Tau, self.monoid.unit())
    }

    fn join(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        let mut out = a.0.clone();
        out.extend(b.0.iter().cloned());
        LabelSet(out)
    }

    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        let mut out = BTreeSet::new();
        for (la, ma) in a.iter() {
            for (lb, mb) in b.iter() {
                match (la, lb) {
                    (Label::Tau, l) | (l, Label::Tau) => {
                        out.insert((l.clone(), self.monoid.op(ma, mb)));
                    }
                    _ => {}
                }
            }
        }
        LabelSet(out)
    }
}

/// Names of the quantale laws exercised by [`check_quantale_laws`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuantaleLaw {
    MulAssociative,
    UnitLeft,
    UnitRight,
    JoinAssociative,
    JoinCommutative,
    JoinIdempotent,
    BottomUnit,
    BottomAnnihilatesLeft,
    BottomAnnihilatesRight,
    DistributesLeft,
    DistributesRight,
}

impl fmt::Display for QuantaleLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            QuantaleLaw::MulAssociative => "mul-associative",
            QuantaleLaw::UnitLeft => "unit-left",
            QuantaleLaw::UnitRight => "unit-right",
            QuantaleLaw::JoinAssociative => "join-associative",
            QuantaleLaw::JoinCommutative => "join-commutative",
            QuantaleLaw::JoinIdempotent => "join-idempotent",
            QuantaleLaw::BottomUnit => "bottom-unit",
            QuantaleLaw::BottomAnnihilatesLeft => "bottom-annihilates-left",
            QuantaleLaw::BottomAnnihilatesRight => "bottom-annihilates-right",
            QuantaleLaw::DistributesLeft => "distributes-left",
            QuantaleLaw::DistributesRight => "distributes-right",
        };
        f.write_str(name)
    }
}

/// A law violation found on a concrete sample triple.
#[derive(Clone, Debug)]
pub struct QuantaleViolation<E> {
    pub law: QuantaleLaw,
    pub witness: (E, E, E),
}

/// Outcome of checking the quantale laws over a finite sample of elements.
#[derive(Clone, Debug)]
pub struct QuantaleLawReport<E> {
    pub triples_checked: usize,
    pub violations: Vec<QuantaleViolation<E>>,
}

impl<E> QuantaleLawReport<E> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the monoid, lattice, and distributivity laws on every triple drawn
/// from `samples`. Each law is reported at most once, with the first
/// violating triple as witness.
pub fn check_quantale_laws<Q: Quantale>(q: &Q, samples: &[Q::Elem]) -> QuantaleLawReport<Q::Elem> {
    let mut violations: Vec<QuantaleViolation<Q::Elem>> = Vec::new();
    let mut triples = 0usize;
    let record = |law: QuantaleLaw,
                      a: &Q::Elem,
                      b: &Q::Elem,
                      c: &Q::Elem,
                      violations: &mut Vec<QuantaleViolation<Q::Elem>>| {
        if violations.iter().all(|v| v.law != law) {
            violations.push(QuantaleViolation {
                law,
                witness: (a.clone(), b.clone(), c.clone()),
            });
        }
    };

    let bot = q.bottom();
    let one = q.unit();
    for a in samples {
        for b in samples {
            for c in samples {
                triples += 1;
                if q.mul(&q.mul(a, b), c) != q.mul(a, &q.mul(b, c)) {
                    record(QuantaleLaw::MulAssociative, a, b, c, &mut violations);
                }
                if q.mul(&one, a) != *a {
                    record(QuantaleLaw::UnitLeft, a, b, c, &mut violations);
                }
                if q.mul(a, &one) != *a {
                    record(QuantaleLaw::UnitRight, a, b, c, &mut violations);
                }
                if q.join(&q.join(a, b), c) != q.join(a, &q.join(b, c)) {
                    record(QuantaleLaw::JoinAssociative, a, b, c, &mut violations);
                }
                if q.join(a, b) != q.join(b, a) {
                    record(QuantaleLaw::JoinCommutative, a, b, c, &mut violations);
                }
                if q.join(a, a) != *a {
                    record(QuantaleLaw::JoinIdempotent, a, b, c, &mut violations);
                }
                if q.join(a, &bot) != *a {
                    record(QuantaleLaw::BottomUnit, a, b, c, &mut violations);
                }
                if !q.is_bottom(&q.mul(&bot, a)) {
                    record(QuantaleLaw::BottomAnnihilatesLeft, a, b, c, &mut violations);
                }
                if !q.is_bottom(&q.mul(a, &bot)) {
                    record(QuantaleLaw::BottomAnnihilatesRight, a, b, c, &mut violations);
                }
                if q.mul(a, &q.join(b, c)) != q.join(&q.mul(a, b), &q.mul(a, c)) {
                    record(QuantaleLaw::DistributesLeft, a, b, c, &mut violations);
                }
                if q.mul(&q.join(a, b), c) != q.join(&q.mul(a, c), &q.mul(b, c)) {
                    record(QuantaleLaw::DistributesRight, a, b, c, &mut violations);
                }
            }
        }
    }

    QuantaleLawReport {
        triples_checked: triples,
        violations,
    }
}
