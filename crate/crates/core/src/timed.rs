//! Timed processes: transition systems whose edges are visible actions,
//! silent steps, or strictly positive delays. Encoding durations into the
//! weight monoid gives two equivalences: a timed one, where states must
//! offer the same actions after the same accumulated delays, and a
//! time-abstract one that forgets durations entirely.

use crate::bisim::{strong_minimize, Partition};
use crate::kleisli::{KleisliEndo, StateSpace};
use crate::quantale::{Label, LabelSet, LabelSetQ, RealAdd, Time, TrivialMonoid};
use crate::saturation::{saturate, FixpointConfig, SatError};
use crate::EPS;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// One edge label of a timed system.
#[derive(Clone, Debug, PartialEq)]
pub enum TimedLabel {
    Silent,
    /// A strictly positive duration.
    Delay(Time),
    Vis(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimedTransition {
    pub src: usize,
    pub label: TimedLabel,
    pub dst: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TimedError {
    /// Delays must be strictly positive.
    NonPositiveDelay(f64),
    StateOutOfRange { index: usize, size: usize },
    UnknownLabel(String),
    /// A cycle through silent/delay edges that accumulates positive
    /// delay; the timed equivalence would need infinite weight sets.
    DelayCycle { cycle: Vec<String> },
    Sat(SatError),
}

impl fmt::Display for TimedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimedError::NonPositiveDelay(t) => {
                write!(f, "delays must be strictly positive, got {t}")
            }
            TimedError::StateOutOfRange { index, size } => {
                write!(f, "state index {index} out of range for {size} states")
            }
            TimedError::UnknownLabel(l) => write!(f, "label {l} is not in the alphabet"),
            TimedError::DelayCycle { cycle } => {
                write!(f, "positive-delay cycle: {}", cycle.join(" -> "))
            }
            TimedError::Sat(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for TimedError {}

impl From<SatError> for TimedError {
    fn from(e: SatError) -> Self {
        TimedError::Sat(e)
    }
}

/// A finite timed transition system.
#[derive(Clone, Debug, PartialEq)]
pub struct TimedSystem {
    space: StateSpace,
    alphabet: Vec<String>,
    transitions: Vec<TimedTransition>,
}

impl TimedSystem {
    pub fn new(
        space: StateSpace,
        alphabet: Vec<String>,
        transitions: Vec<TimedTransition>,
    ) -> Result<TimedSystem, TimedError> {
        for t in &transitions {
            for idx in [t.src, t.dst] {
                if idx >= space.len() {
                    return Err(TimedError::StateOutOfRange {
                        index: idx,
                        size: space.len(),
                    });
                }
            }
            match &t.label {
                TimedLabel::Delay(d) if d.get() <= 0.0 => {
                    return Err(TimedError::NonPositiveDelay(d.get()));
                }
                TimedLabel::Vis(a) if !alphabet.contains(a) => {
                    return Err(TimedError::UnknownLabel(a.clone()));
                }
                _ => {}
            }
        }
        Ok(TimedSystem {
            space,
            alphabet,
            transitions,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn transitions(&self) -> &[TimedTransition] {
        &self.transitions
    }
}

/// Verdict of the positive-delay cycle search; when a cycle exists the
/// witness lists its states, first repeated at the end.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayAcyclicity {
    pub acyclic: bool,
    pub witness: Option<Vec<usize>>,
}

/// Searches the silent/delay sub-graph for a cycle through at least one
/// positive-delay edge: for every delay edge, can its target reach its
/// source again through silent or delay edges?
pub fn delay_acyclicity(ts: &TimedSystem) -> DelayAcyclicity {
    let n = ts.space.len();
    let mut quiet: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in &ts.transitions {
        match t.label {
            TimedLabel::Silent | TimedLabel::Delay(_) => quiet[t.src].push(t.dst),
            TimedLabel::Vis(_) => {}
        }
    }
    for t in &ts.transitions {
        let TimedLabel::Delay(_) = t.label else {
            continue;
        };
        // BFS from the delay edge's target back to its source.
        let mut pred: Vec<Option<usize>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = vec![t.dst];
        seen[t.dst] = true;
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            if u == t.src {
                let mut path = vec![u];
                let mut cur = u;
                while cur != t.dst {
                    let p = pred[cur].expect("BFS predecessors reach the start");
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                // path: t.dst .. t.src; prepend the delay edge's source to
                // close the cycle.
                let mut cycle = vec![t.src];
                cycle.extend(path);
                return DelayAcyclicity {
                    acyclic: false,
                    witness: Some(cycle),
                };
            }
            for &v in &quiet[u] {
                if !seen[v] {
                    seen[v] = true;
                    pred[v] = Some(u);
                    queue.push(v);
                }
            }
        }
    }
    DelayAcyclicity {
        acyclic: true,
        witness: None,
    }
}

/// The timed system as a duration-weighted matrix: visible actions at
/// duration zero, silent steps at duration zero, delays as silent steps
/// carrying their duration.
pub fn encode(ts: &TimedSystem) -> KleisliEndo<LabelSetQ<RealAdd>> {
    let q = LabelSetQ::new(RealAdd);
    let mut alpha = KleisliEndo::bottom(q, ts.space.clone());
    for t in &ts.transitions {
        let pair = match &t.label {
            TimedLabel::Silent => (Label::Tau, Time::ZERO),
            TimedLabel::Delay(d) => (Label::Tau, *d),
            TimedLabel::Vis(a) => (Label::vis(a.clone()), Time::ZERO),
        };
        alpha.add(t.src, t.dst, &LabelSet::singleton(pair.0, pair.1));
    }
    alpha
}

/// The duration-forgetting system: delays become plain silent steps, and
/// the result is saturated. A state reaches another under a label exactly
/// when some timed path realizes that label.
pub fn time_abstract(
    ts: &TimedSystem,
    cfg: &FixpointConfig,
) -> Result<KleisliEndo<LabelSetQ<TrivialMonoid>>, SatError> {
    let q = LabelSetQ::new(TrivialMonoid);
    let mut erased = KleisliEndo::bottom(q, ts.space.clone());
    for t in &ts.transitions {
        let label = match &t.label {
            TimedLabel::Silent | TimedLabel::Delay(_) => Label::Tau,
            TimedLabel::Vis(a) => Label::vis(a.clone()),
        };
        erased.add(t.src, t.dst, &LabelSet::singleton(label, ()));
    }
    saturate(&erased, cfg)
}

/// The coarsest weak time-abstract bisimulation: strong minimization of
/// the duration-forgetting saturation.
pub fn time_abstract_minimize(ts: &TimedSystem) -> Partition {
    let abstracted = time_abstract(ts, &FixpointConfig::default())
        .expect("erased weights live in a finite lattice; the default budget suffices");
    strong_minimize(&abstracted)
}

/// Keeps visible observations and zero-duration silent pairs; discards
/// silent pairs with positive accumulated delay. What remains is each
/// state's offer of actions-after-accumulated-time plus its silent
/// zero-time reachability.
fn drop_positive_silent(
    sat: &KleisliEndo<LabelSetQ<RealAdd>>,
) -> KleisliEndo<LabelSetQ<RealAdd>> {
    let mut out = KleisliEndo::bottom(sat.quantale().clone(), sat.space().clone());
    for (x, y, weight) in sat.entries() {
        let kept: LabelSet<Time> = weight
            .iter()
            .filter(|(l, t)| !l.is_tau() || *t == Time::ZERO)
            .cloned()
            .collect();
        if !kept.is_empty() {
            out.add(x, y, &kept);
        }
    }
    out
}

/// Rewrites every duration to the representative of its cluster: sorted
/// durations chain into one cluster while consecutive gaps stay within
/// `EPS`, and each cluster is named by its smallest member. Makes
/// float-accumulated sums (e.g. two halves of a delay) compare equal.
fn canonicalize_durations(
    alpha: &KleisliEndo<LabelSetQ<RealAdd>>,
) -> KleisliEndo<LabelSetQ<RealAdd>> {
    let mut values: BTreeSet<Time> = BTreeSet::new();
    for (_, _, weight) in alpha.entries() {
        for (_, t) in weight.iter() {
            values.insert(*t);
        }
    }
    let mut rep: BTreeMap<Time, Time> = BTreeMap::new();
    let mut cluster_rep: Option<Time> = None;
    let mut prev: Option<Time> = None;
    for &v in &values {
        let start_new = match prev {
            Some(p) => v.get() - p.get() > EPS,
            None => true,
        };
        if start_new {
            cluster_rep = Some(v);
        }
        rep.insert(v, cluster_rep.expect("set just above"));
        prev = Some(v);
    }
    let mut out = KleisliEndo::bottom(alpha.quantale().clone(), alpha.space().clone());
    for (x, y, weight) in alpha.entries() {
        if weight.is_empty() {
            continue;
        }
        let mapped: LabelSet<Time> = weight
            .iter()
            .map(|(l, t)| (l.clone(), rep[t]))
            .collect();
        out.add(x, y, &mapped);
    }
    out
}

/// The coarsest weak timed bisimulation of a delay-acyclic system.
/// States end in the same block exactly when, into every block, they
/// offer the same visible actions at the same accumulated delays and the
/// same zero-time silent reachability. Durations compare within `EPS`.
pub fn timed_weak_minimize(
    ts: &TimedSystem,
    cfg: &FixpointConfig,
) -> Result<Partition, TimedError> {
    let check = delay_acyclicity(ts);
    if let Some(cycle) = check.witness {
        return Err(TimedError::DelayCycle {
            cycle: cycle.iter().map(|&x| ts.space.name(x).into()).collect(),
        });
    }
    let sat = saturate(&encode(ts), cfg)?;
    let canon = canonicalize_durations(&drop_positive_silent(&sat));
    Ok(strong_minimize(&canon))
}
