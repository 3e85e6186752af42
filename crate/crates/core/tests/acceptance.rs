//! End-to-end acceptance checks: every algorithm is compared against an
//! independently coded oracle (graph search, word enumeration, exhaustive
//! partition search, closed-form solutions, simulation) on deterministic
//! random corpora. Each test prints one verdict line.

use satflow_core::bisim::{
    adjoint_check, brute_force_weak, strong_minimize, weak_minimize, Partition,
};
use satflow_core::ctmc::{hitting, monte_carlo_hitting, uniformize, CtmcSpec};
use satflow_core::kleisli::{
    KleisliEndo, KleisliMorphism, ProbKernel, ProbTable, StateSpace, TAU,
};
use satflow_core::laxflow::{
    underline, validate_nflow, Diagram, DiagramArrow, DiagramObject, FlowLaw, NFlow,
};
use satflow_core::probweak::{brute_force_prob_weak, prob_weak_minimize};
use satflow_core::quantale::{BoolQ, Label, LabelSet, LabelSetQ, Time, TrivialMonoid};
use satflow_core::saturation::{
    saturate, saturate_prob_through, sobocinski_saturate, FixpointConfig, RelPresheaf,
};
use satflow_core::timed::{
    time_abstract, time_abstract_minimize, timed_weak_minimize, TimedLabel, TimedSystem,
    TimedTransition,
};
use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

fn verdict(number: u32, what: &str, body: impl FnOnce()) {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(()) => println!("acceptance {number} ({what}): PASS"),
        Err(cause) => {
            println!("acceptance {number} ({what}): FAIL");
            std::panic::resume_unwind(cause);
        }
    }
}

struct Rng(u64);

impl Rng {
    fn new(seed: u64) -> Rng {
        Rng(seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493))
    }

    fn next(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0 >> 33
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next() as usize) % n
    }

    fn unit(&mut self) -> f64 {
        self.next() as f64 / (1u64 << 31) as f64
    }
}

// ---------------------------------------------------------------- LTS corpus

const VIS_LABELS: [&str; 3] = ["a", "b", "c"];

/// A plain labelled transition system kept as an edge list so the oracles
/// never touch the library's matrix machinery.
struct RawLts {
    states: usize,
    labels: usize,
    edges: Vec<(usize, Option<usize>, usize)>,
}

fn lts_space(n: usize) -> StateSpace {
    StateSpace::new((0..n).map(|i| format!("q{i}"))).unwrap()
}

/// 200 systems with 2–8 states, 1–3 visible labels, densities 0.1–0.5.
fn lts_corpus() -> Vec<RawLts> {
    let mut rng = Rng::new(0xC0FFEE);
    let mut out = Vec::new();
    for _ in 0..200 {
        let states = 2 + rng.below(7);
        let labels = 1 + rng.below(3);
        let density = 0.1 + 0.4 * rng.unit();
        let mut edges = Vec::new();
        for x in 0..states {
            for y in 0..states {
                for sigma in 0..=labels {
                    if rng.unit() < density {
                        let label = if sigma == 0 { None } else { Some(sigma - 1) };
                        edges.push((x, label, y));
                    }
                }
            }
        }
        out.push(RawLts {
            states,
            labels,
            edges,
        });
    }
    out
}

fn to_endo(raw: &RawLts) -> KleisliEndo<LabelSetQ<TrivialMonoid>> {
    let mut alpha = KleisliEndo::bottom(LabelSetQ::new(TrivialMonoid), lts_space(raw.states));
    for &(x, label, y) in &raw.edges {
        let l = match label {
            None => Label::Tau,
            Some(a) => Label::vis(VIS_LABELS[a]),
        };
        alpha.add(x, y, &LabelSet::singleton(l, ()));
    }
    alpha
}

/// Silent reflexive-transitive closure and weak visible reachability by
/// matrix-free graph search (Warshall on adjacency bits).
fn double_arrows(raw: &RawLts) -> (Vec<Vec<bool>>, Vec<Vec<Vec<bool>>>) {
    let n = raw.states;
    let mut quiet = vec![vec![false; n]; n];
    for (i, row) in quiet.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(x, label, y) in &raw.edges {
        if label.is_none() {
            quiet[x][y] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if quiet[i][k] && quiet[k][j] {
                    quiet[i][j] = true;
                }
            }
        }
    }
    let mut vis = vec![vec![vec![false; n]; n]; raw.labels];
    for &(x, label, y) in &raw.edges {
        if let Some(a) = label {
            for i in 0..n {
                for j in 0..n {
                    if quiet[i][x] && quiet[y][j] {
                        vis[a][i][j] = true;
                    }
                }
            }
        }
    }
    (quiet, vis)
}

/// Coarsest partition matching the given weak moves: refine by the set of
/// (move, class) pairs each state offers, recomputed until stable.
fn refine_by_arrows(space: StateSpace, quiet: &[Vec<bool>], vis: &[Vec<Vec<bool>>]) -> Partition {
    let n = space.len();
    let mut assign = vec![0usize; n];
    let mut count = 1usize;
    loop {
        let sigs: Vec<BTreeSet<(usize, usize)>> = (0..n)
            .map(|x| {
                let mut s = BTreeSet::new();
                for y in 0..n {
                    if quiet[x][y] {
                        s.insert((0, assign[y]));
                    }
                    for (a, m) in vis.iter().enumerate() {
                        if m[x][y] {
                            s.insert((a + 1, assign[y]));
                        }
                    }
                }
                s
            })
            .collect();
        let mut table: HashMap<(usize, BTreeSet<(usize, usize)>), usize> = HashMap::new();
        let mut next = vec![0usize; n];
        for x in 0..n {
            let key = (assign[x], sigs[x].clone());
            let fresh = table.len();
            next[x] = *table.entry(key).or_insert(fresh);
        }
        let grown = table.len();
        assign = next;
        if grown == count {
            break;
        }
        count = grown;
    }
    Partition::from_block_of(space, &assign)
}

#[test]
fn acceptance_1_saturation_matches_the_closure_oracle() {
    verdict(1, "saturation vs closure oracle", || {
        let start = Instant::now();
        let cfg = FixpointConfig::default();
        for (idx, raw) in lts_corpus().iter().enumerate() {
            let alpha = to_endo(raw);
            let sat = saturate(&alpha, &cfg).unwrap();
            let (quiet, vis) = double_arrows(raw);
            for x in 0..raw.states {
                for y in 0..raw.states {
                    let mut expected = LabelSet::empty();
                    if quiet[x][y] {
                        expected.insert(Label::Tau, ());
                    }
                    for a in 0..raw.labels {
                        if vis[a][x][y] {
                            expected.insert(Label::vis(VIS_LABELS[a]), ());
                        }
                    }
                    assert_eq!(sat.get(x, y), &expected, "system {idx}, cell ({x},{y})");
                }
            }
            let id = KleisliEndo::identity(LabelSetQ::new(TrivialMonoid), lts_space(raw.states));
            assert!(id.leq(&sat).unwrap(), "system {idx}: reflexivity");
            assert!(alpha.leq(&sat).unwrap(), "system {idx}: extensivity");
            assert!(
                sat.compose(&sat).unwrap().leq(&sat).unwrap(),
                "system {idx}: transitivity"
            );
            assert_eq!(saturate(&sat, &cfg).unwrap(), sat, "system {idx}: idempotence");
        }
        assert!(
            start.elapsed() < Duration::from_secs(5),
            "took {:?}",
            start.elapsed()
        );
    });
}

#[test]
fn acceptance_2_weak_minimization_matches_the_double_arrow_oracle() {
    verdict(2, "weak minimization vs double-arrow refinement", || {
        let cfg = FixpointConfig::default();
        for (idx, raw) in lts_corpus().iter().enumerate() {
            let mine = weak_minimize(&to_endo(raw), &cfg).unwrap();
            let (quiet, vis) = double_arrows(raw);
            let oracle = refine_by_arrows(lts_space(raw.states), &quiet, &vis);
            assert_eq!(mine, oracle, "system {idx}");
        }
    });
}

#[test]
fn acceptance_3_weak_minimization_matches_exhaustive_search() {
    verdict(3, "weak minimization vs partition enumeration", || {
        let cfg = FixpointConfig::default();
        let mut covered = 0usize;
        for (idx, raw) in lts_corpus().iter().enumerate() {
            if raw.states > 6 {
                continue;
            }
            covered += 1;
            let alpha = to_endo(raw);
            assert_eq!(
                weak_minimize(&alpha, &cfg).unwrap(),
                brute_force_weak(&alpha, &cfg).unwrap(),
                "system {idx}"
            );
        }
        assert!(covered >= 50, "only {covered} small systems in the corpus");
    });
}

// ------------------------------------------------------------- adjunction

fn bool_morphism(src: &StateSpace, dst: &StateSpace, mask: u32) -> KleisliMorphism<BoolQ> {
    let mut m = KleisliMorphism::bottom(BoolQ, src.clone(), dst.clone());
    let mut bit = 0;
    for x in 0..src.len() {
        for y in 0..dst.len() {
            if mask >> bit & 1 == 1 {
                m.set(x, y, true);
            }
            bit += 1;
        }
    }
    m
}

#[test]
fn acceptance_4_collapse_is_adjoint_to_component_checking() {
    verdict(4, "oplax families vs collapsed inequality", || {
        let start = Instant::now();
        let cfg = FixpointConfig::default();
        // Every reflexive-transitive relation on one or two points.
        let mut targets = vec![KleisliEndo::identity(
            BoolQ,
            StateSpace::new(["y0"]).unwrap(),
        )];
        let y2 = StateSpace::new(["y0", "y1"]).unwrap();
        for extra in 0..4u32 {
            let mut t = KleisliEndo::identity(BoolQ, y2.clone());
            if extra & 1 != 0 {
                t.set(0, 1, true);
            }
            if extra & 2 != 0 {
                t.set(1, 0, true);
            }
            targets.push(t);
        }
        let carrier_shapes: [&[usize]; 5] = [&[1], &[2], &[1, 1], &[1, 2], &[2, 2]];
        let mut candidates = 0u64;
        for sizes in carrier_shapes {
            let objects: Vec<DiagramObject> = sizes
                .iter()
                .enumerate()
                .map(|(i, &len)| DiagramObject {
                    name: format!("d{i}"),
                    space: StateSpace::new((0..len).map(|s| format!("d{i}s{s}"))).unwrap(),
                })
                .collect();
            let mut pool: Vec<DiagramArrow<BoolQ>> = Vec::new();
            for src in 0..objects.len() {
                for dst in 0..objects.len() {
                    let bits = objects[src].space.len() * objects[dst].space.len();
                    for mask in 0..1u32 << bits {
                        pool.push(DiagramArrow {
                            name: String::new(),
                            src,
                            dst,
                            image: bool_morphism(&objects[src].space, &objects[dst].space, mask),
                        });
                    }
                }
            }
            // The empty diagram, every single-arrow diagram, and a strided
            // sample of two-arrow diagrams.
            let mut selections: Vec<Vec<usize>> = vec![Vec::new()];
            selections.extend((0..pool.len()).map(|i| vec![i]));
            let mut stride = 0usize;
            for i in 0..pool.len() {
                for j in i..pool.len() {
                    stride += 1;
                    if stride % 17 == 0 && selections.len() < pool.len() + 61 {
                        selections.push(vec![i, j]);
                    }
                }
            }
            for selection in &selections {
                let arrows: Vec<DiagramArrow<BoolQ>> = selection
                    .iter()
                    .enumerate()
                    .map(|(ord, &i)| {
                        let mut a = pool[i].clone();
                        a.name = format!("f{ord}");
                        a
                    })
                    .collect();
                let diagram = Diagram::new(BoolQ, objects.clone(), arrows).unwrap();
                for target in &targets {
                    let report = adjoint_check(&diagram, target, &cfg).unwrap();
                    assert!(
                        report.passed(),
                        "carriers {sizes:?}, arrows {selection:?}: {:?}",
                        report.disagreements
                    );
                    candidates += report.candidates;
                }
            }
        }
        assert!(candidates >= 1000, "only {candidates} families enumerated");
        assert!(
            start.elapsed() < Duration::from_secs(10),
            "took {:?}",
            start.elapsed()
        );
    });
}

// -------------------------------------------------------------- presheaves

fn bool_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    let mut out = vec![vec![false; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] {
                for j in 0..n {
                    if b[k][j] {
                        out[i][j] = true;
                    }
                }
            }
        }
    }
    out
}

fn bool_identity(n: usize) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = true;
    }
    m
}

fn or_into(acc: &mut [Vec<bool>], m: &[Vec<bool>]) {
    for (ra, rm) in acc.iter_mut().zip(m) {
        for (a, &b) in ra.iter_mut().zip(rm) {
            *a |= b;
        }
    }
}

#[test]
fn acceptance_5_silent_erasure_matches_word_enumeration() {
    verdict(5, "silent-letter erasure vs bounded words", || {
        let cfg = FixpointConfig::default();
        let mut rng = Rng::new(0x50B0);
        for sys in 0..100 {
            let n = 2 + rng.below(4);
            let labels = 1 + rng.below(2);
            let density = 0.15 + 0.25 * rng.unit();
            let mut tau_m = vec![vec![false; n]; n];
            let mut vis_m = vec![vec![vec![false; n]; n]; labels];
            for x in 0..n {
                for y in 0..n {
                    if rng.unit() < density {
                        tau_m[x][y] = true;
                    }
                    for m in vis_m.iter_mut() {
                        if rng.unit() < density {
                            m[x][y] = true;
                        }
                    }
                }
            }
            let space = lts_space(n);
            let to_rel = |m: &Vec<Vec<bool>>| {
                let mut r = KleisliEndo::bottom(BoolQ, space.clone());
                for (x, row) in m.iter().enumerate() {
                    for (y, &set) in row.iter().enumerate() {
                        if set {
                            r.set(x, y, true);
                        }
                    }
                }
                r
            };
            let presheaf = RelPresheaf::new(
                space.clone(),
                (0..labels).map(|a| VIS_LABELS[a].to_string()).collect(),
                to_rel(&tau_m),
                vis_m.iter().map(to_rel).collect(),
            )
            .unwrap();
            let erased = sobocinski_saturate(&presheaf, &cfg).unwrap();

            // Words of length at most 2n+1: silent powers, and silent
            // powers around a single visible letter.
            let limit = 2 * n + 1;
            let mut tau_powers = vec![bool_identity(n)];
            for k in 1..=limit {
                tau_powers.push(bool_mul(&tau_powers[k - 1], &tau_m));
            }
            let mut eps = bool_identity(n);
            for p in &tau_powers[1..] {
                or_into(&mut eps, p);
            }
            for x in 0..n {
                for y in 0..n {
                    assert_eq!(
                        *erased.epsilon.get(x, y),
                        eps[x][y],
                        "system {sys}, silent cell ({x},{y})"
                    );
                }
            }
            for (a, m) in vis_m.iter().enumerate() {
                let mut reach = vec![vec![false; n]; n];
                for i in 0..limit {
                    for j in 0..limit - i {
                        let word = bool_mul(&bool_mul(&tau_powers[i], m), &tau_powers[j]);
                        or_into(&mut reach, &word);
                    }
                }
                for x in 0..n {
                    for y in 0..n {
                        assert_eq!(
                            *erased.vis[a].get(x, y),
                            reach[x][y],
                            "system {sys}, label {a}, cell ({x},{y})"
                        );
                    }
                }
            }
        }
    });
}

// ------------------------------------------------------------ probabilistic

fn ext_mul(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// Largest defect when the table is plugged back into its defining
/// one-step equations; equal values (infinities included) count as zero.
fn recurrence_residual(k: &ProbKernel, part: &Partition, table: &ProbTable) -> f64 {
    let n = k.space().len();
    let mut worst = 0.0f64;
    let defect = |lhs: f64, rhs: f64| if lhs == rhs { 0.0 } else { (lhs - rhs).abs() };
    for x in 0..n {
        for c in 0..part.num_blocks() {
            let base = if part.block_of(x) == c { 1.0 } else { 0.0 };
            let mut silent = 0.0;
            for z in 0..n {
                silent += ext_mul(k.weight(x, TAU, z), table.get(z, TAU, c));
            }
            worst = worst.max(defect(base.max(silent), table.get(x, TAU, c)));
            for sigma in 1..k.sigma_count() {
                let mut acc = 0.0;
                for z in 0..n {
                    acc += ext_mul(k.weight(x, TAU, z), table.get(z, sigma, c))
                        + ext_mul(k.weight(x, sigma, z), table.get(z, TAU, c));
                }
                worst = worst.max(defect(acc, table.get(x, sigma, c)));
            }
        }
    }
    worst
}

fn prob_corpus() -> Vec<ProbKernel> {
    let mut rng = Rng::new(0xFB0B);
    let mut out = Vec::new();
    for _ in 0..24 {
        let n = 2 + rng.below(4);
        let labels = 1 + rng.below(2);
        let mut k = ProbKernel::new(
            lts_space(n),
            (0..labels).map(|a| VIS_LABELS[a].to_string()).collect(),
        );
        for x in 0..n {
            for sigma in 0..=labels {
                for y in 0..n {
                    match rng.below(8) {
                        0 => k.set_weight(x, sigma, y, 0.25).unwrap(),
                        1 => k.set_weight(x, sigma, y, 0.5).unwrap(),
                        _ => {}
                    }
                }
            }
        }
        out.push(k);
    }
    out
}

#[test]
fn acceptance_6_probabilistic_minimization_matches_exhaustive_search() {
    verdict(6, "probabilistic weak equivalence vs enumeration", || {
        let cfg = FixpointConfig::numeric();
        // The silent split of a certain step: s halves into u before the
        // same certain a-step.
        let mut su = ProbKernel::new(
            StateSpace::new(["s", "u", "t"]).unwrap(),
            vec!["a".to_string()],
        );
        su.set_weight(0, TAU, 1, 0.5).unwrap();
        su.set_weight(0, 1, 2, 0.5).unwrap();
        su.set_weight(1, 1, 2, 1.0).unwrap();
        let part = prob_weak_minimize(&su, &cfg).unwrap();
        assert_eq!(part.named_blocks(), vec![vec!["s", "u"], vec!["t"]]);

        for (idx, k) in prob_corpus().iter().enumerate() {
            let mine = prob_weak_minimize(k, &cfg).unwrap();
            assert_eq!(
                mine,
                brute_force_prob_weak(k, &cfg).unwrap(),
                "system {idx}"
            );
            let sat = saturate_prob_through(k, &mine.quotient_map(), &cfg).unwrap();
            let table = sat.require_converged().unwrap();
            let residual = recurrence_residual(k, &mine, table);
            assert!(residual < 1e-9, "system {idx}: residual {residual}");
        }
    });
}

// ------------------------------------------------------------------- timed

fn timed_arrows(ts: &TimedSystem) -> (Vec<Vec<bool>>, Vec<Vec<Vec<bool>>>) {
    let n = ts.space().len();
    let mut quiet = vec![vec![false; n]; n];
    for (i, row) in quiet.iter_mut().enumerate() {
        row[i] = true;
    }
    for t in ts.transitions() {
        if !matches!(t.label, TimedLabel::Vis(_)) {
            quiet[t.src][t.dst] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if quiet[i][k] && quiet[k][j] {
                    quiet[i][j] = true;
                }
            }
        }
    }
    let mut vis = vec![vec![vec![false; n]; n]; ts.alphabet().len()];
    for t in ts.transitions() {
        if let TimedLabel::Vis(a) = &t.label {
            let slot = ts.alphabet().iter().position(|l| l == a).unwrap();
            for i in 0..n {
                for j in 0..n {
                    if quiet[i][t.src] && quiet[t.dst][j] {
                        vis[slot][i][j] = true;
                    }
                }
            }
        }
    }
    (quiet, vis)
}

/// Two branches performing `a` after the given delay sequences.
fn two_branch_delays(first: &[f64], second: &[f64]) -> TimedSystem {
    let mut names = Vec::new();
    let mut transitions = Vec::new();
    let mut build = |branch: usize, delays: &[f64], names: &mut Vec<String>| {
        let base = names.len();
        for i in 0..=delays.len() + 1 {
            names.push(format!("b{branch}n{i}"));
        }
        for (i, &d) in delays.iter().enumerate() {
            transitions.push(TimedTransition {
                src: base + i,
                label: TimedLabel::Delay(Time::new(d)),
                dst: base + i + 1,
            });
        }
        transitions.push(TimedTransition {
            src: base + delays.len(),
            label: TimedLabel::Vis("a".to_string()),
            dst: base + delays.len() + 1,
        });
        base
    };
    let head_a = build(0, first, &mut names);
    let head_b = build(1, second, &mut names);
    assert_eq!((head_a, head_b), (0, first.len() + 2));
    TimedSystem::new(
        StateSpace::new(names).unwrap(),
        vec!["a".to_string()],
        transitions,
    )
    .unwrap()
}

#[test]
fn acceptance_7_timed_equivalences_behave_as_specified() {
    verdict(7, "timed equivalences vs reachability oracle", || {
        let cfg = FixpointConfig::default();
        let mut rng = Rng::new(0x71AED);
        for sys in 0..100 {
            let n = 2 + rng.below(5);
            let mut transitions = Vec::new();
            for x in 0..n {
                for y in 0..n {
                    match rng.below(10) {
                        0 => transitions.push(TimedTransition {
                            src: x,
                            label: TimedLabel::Delay(Time::new([0.5, 1.0, 1.5][rng.below(3)])),
                            dst: y,
                        }),
                        1 => transitions.push(TimedTransition {
                            src: x,
                            label: TimedLabel::Silent,
                            dst: y,
                        }),
                        2 | 3 => transitions.push(TimedTransition {
                            src: x,
                            label: TimedLabel::Vis(VIS_LABELS[rng.below(2)].to_string()),
                            dst: y,
                        }),
                        _ => {}
                    }
                }
            }
            let ts = TimedSystem::new(
                lts_space(n),
                vec!["a".to_string(), "b".to_string()],
                transitions,
            )
            .unwrap();
            let mine = time_abstract_minimize(&ts);
            assert_eq!(
                mine,
                strong_minimize(&time_abstract(&ts, &cfg).unwrap()),
                "system {sys}"
            );
            let (quiet, vis) = timed_arrows(&ts);
            assert_eq!(
                mine,
                refine_by_arrows(ts.space().clone(), &quiet, &vis),
                "system {sys}"
            );
        }

        // Same total delay, differently split: both equivalences accept.
        let same_total = two_branch_delays(&[1.5], &[0.7, 0.8]);
        let timed = timed_weak_minimize(&same_total, &cfg).unwrap();
        assert!(timed.same_block(0, 3), "{:?}", timed.named_blocks());
        assert!(time_abstract_minimize(&same_total).same_block(0, 3));

        // Different totals: only the duration-forgetting one accepts.
        let different_total = two_branch_delays(&[1.5], &[2.0]);
        let timed = timed_weak_minimize(&different_total, &cfg).unwrap();
        assert!(!timed.same_block(0, 3), "{:?}", timed.named_blocks());
        assert!(time_abstract_minimize(&different_total).same_block(0, 3));
    });
}

// -------------------------------------------------------------------- ctmc

fn random_ctmc(rng: &mut Rng, n: usize) -> CtmcSpec {
    let mut spec = CtmcSpec::new(lts_space(n));
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.unit() < 0.5 {
                spec.set_rate(i, j, [0.5, 1.0, 2.0][rng.below(3)]).unwrap();
            }
        }
    }
    spec
}

/// Random chain whose last state is absorbing and fed by at least one
/// positive rate.
fn random_absorbing_ctmc(rng: &mut Rng, n: usize) -> CtmcSpec {
    let mut spec = CtmcSpec::new(lts_space(n));
    for i in 0..n - 1 {
        for j in 0..n {
            if i != j && rng.unit() < 0.6 {
                spec.set_rate(i, j, [0.5, 1.0, 2.0][rng.below(3)]).unwrap();
            }
        }
    }
    spec.set_rate(n - 2, n - 1, 1.0).unwrap();
    spec
}

fn mat_mul_f(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn inf_norm_diff_f(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).abs()).sum())
        .fold(0.0, f64::max)
}

#[test]
fn acceptance_8_chain_evaluator_and_hitting_probabilities() {
    verdict(8, "chain evaluation, hitting, simulation", || {
        let start = Instant::now();
        let mut rng = Rng::new(0xC73C);

        // Identity at zero and composition over time addition.
        for _ in 0..20 {
            let spec = random_ctmc(&mut rng, 4);
            let p0 = uniformize(&spec, 0.0);
            for (i, row) in p0.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expected).abs() <= 1e-12);
                }
            }
            for _ in 0..5 {
                let t = 0.2 + 2.8 * rng.unit();
                let s = 0.2 + 2.8 * rng.unit();
                let combined = uniformize(&spec, t + s);
                let composed = mat_mul_f(&uniformize(&spec, t), &uniformize(&spec, s));
                let gap = inf_norm_diff_f(&combined, &composed);
                assert!(gap < 1e-9, "t={t}, s={s}: {gap}");
            }
        }

        // Worked example: two transient states share hitting value 1/2.
        let mut spec4 = CtmcSpec::new(lts_space(4));
        spec4.set_rate(0, 1, 1.0).unwrap();
        spec4.set_rate(1, 2, 2.0).unwrap();
        spec4.set_rate(1, 0, 1.0).unwrap();
        spec4.set_rate(1, 3, 2.0).unwrap();
        let h4 = hitting(&spec4, &[2]).unwrap();
        assert!((h4[0] - 0.5).abs() <= 1e-12);
        assert!((h4[1] - 0.5).abs() <= 1e-12);
        assert_eq!(h4[2], 1.0);
        assert_eq!(h4[3], 0.0);

        // The supremum over a time grid of target mass weighted by onward
        // hitting stays below the hitting value and reaches it.
        let grid = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 200.0, 1000.0];
        for _ in 0..10 {
            let spec = random_absorbing_ctmc(&mut rng, 4);
            let h = hitting(&spec, &[3]).unwrap();
            let mut sup = vec![0.0f64; 4];
            for &t in &grid {
                let p = uniformize(&spec, t);
                for i in 0..4 {
                    let bound: f64 = (0..4).map(|j| h[j] * p[i][j]).sum();
                    sup[i] = sup[i].max(bound);
                }
            }
            for i in 0..4 {
                assert!(sup[i] <= h[i] + 1e-6, "state {i}: {} vs {}", sup[i], h[i]);
                assert!(h[i] - sup[i] <= 1e-6, "state {i}: {} vs {}", sup[i], h[i]);
            }
        }

        // Seeded simulation within three standard errors.
        let runs = 100_000u32;
        let mut checked_states = 0;
        for (spec, targets, seed) in [
            (spec4.clone(), vec![2usize], 0x5EED_0001u64),
            (random_absorbing_ctmc(&mut rng, 4), vec![3], 0x5EED_0002),
            (random_absorbing_ctmc(&mut rng, 4), vec![3], 0x5EED_0003),
        ] {
            let analytic = hitting(&spec, &targets).unwrap();
            let estimate = monte_carlo_hitting(&spec, &targets, runs, seed).unwrap();
            for i in 0..4 {
                let sigma = (analytic[i] * (1.0 - analytic[i]) / f64::from(runs)).sqrt();
                assert!(
                    (estimate[i] - analytic[i]).abs() <= 3.0 * sigma + 1e-12,
                    "state {i}: {} vs {} (sigma {sigma})",
                    estimate[i],
                    analytic[i]
                );
                checked_states += 1;
            }
        }
        assert_eq!(checked_states, 12);
        assert!(
            start.elapsed() < Duration::from_secs(30),
            "took {:?}",
            start.elapsed()
        );
    });
}

// -------------------------------------------------------------------- flows

fn random_bool_endo(rng: &mut Rng, n: usize, density: f64) -> KleisliEndo<BoolQ> {
    let mut alpha = KleisliEndo::bottom(BoolQ, lts_space(n));
    for x in 0..n {
        for y in 0..n {
            if rng.unit() < density {
                alpha.set(x, y, true);
            }
        }
    }
    alpha
}

#[test]
fn acceptance_9_power_flows_validate_and_corruptions_are_witnessed() {
    verdict(9, "flow laws on powers and corrupted tables", || {
        let mut rng = Rng::new(0x9F10);
        for sys in 0..100 {
            let n = 2 + rng.below(5);
            let alpha = random_bool_endo(&mut rng, n, 0.3);
            let report = validate_nflow(&underline(&alpha, 4));
            assert!(report.passed(), "system {sys}: {:?}", report.violations);
            assert_eq!(report.checked, 16);
        }
        for case in 0..20 {
            let n = 3 + case % 3;
            let mut alpha = random_bool_endo(&mut rng, n, 0.25);
            alpha.set(0, 1, true);
            alpha.set(1, 2, true);
            let flow = underline(&alpha, 4);
            let mut tables: Vec<KleisliEndo<BoolQ>> =
                (0..=4).map(|i| flow.component(i).unwrap()).collect();
            if case % 2 == 0 {
                // Break reflexivity at one diagonal cell of the zeroth
                // table.
                let d = (case / 2) % n;
                tables[0].set(d, d, false);
                let report = validate_nflow(&NFlow::tabulated(tables).unwrap());
                assert_eq!(report.violations.len(), 1, "case {case}");
                let v = &report.violations[0];
                assert_eq!(v.law, FlowLaw::UnitBelowComponent);
                assert_eq!(v.keys, ("0".to_string(), None));
                assert_eq!(v.from_state, format!("q{d}"));
                assert_eq!(v.to_state, format!("q{d}"));
            } else {
                // Remove one reachable cell from the second table so the
                // two single-step tables no longer compose below it.
                let squared = alpha.compose(&alpha).unwrap();
                let (x, y) = squared
                    .entries()
                    .find(|&(_, _, &set)| set)
                    .map(|(x, y, _)| (x, y))
                    .unwrap();
                tables[2].set(x, y, false);
                let report = validate_nflow(&NFlow::tabulated(tables).unwrap());
                assert_eq!(report.violations.len(), 1, "case {case}");
                let v = &report.violations[0];
                assert_eq!(v.law, FlowLaw::LaxComposition);
                assert_eq!(v.keys, ("1".to_string(), Some("1".to_string())));
                assert_eq!(v.from_state, format!("q{x}"));
                assert_eq!(v.to_state, format!("q{y}"));
            }
        }
    });
}
