//! Graphical construction of the two-type Moran model with directional
//! selection, forward type propagation and the backward ancestral selection
//! graph (ASG).
//!
//! Individuals are labelled `1..=N`. Every individual carries a neutral
//! Poisson clock of rate `gamma / 2` and a selective clock of rate `s`; at
//! each ring it picks a uniform target (itself included) and an arrow is
//! drawn from it to the target.

use std::io::{Read, Write};

use rand::Rng;

use crate::ctmc::{sample_exponential, Path, State};
use crate::error::{domain, invalid, Result};

pub type Label = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArrowKind {
    Neutral,
    Selective,
}

impl ArrowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArrowKind::Neutral => "neutral",
            ArrowKind::Selective => "selective",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrowEvent {
    pub time: f64,
    pub source: Label,
    pub target: Label,
    pub kind: ArrowKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphicalRepresentation {
    n: u32,
    gamma: f64,
    s: f64,
    horizon: f64,
    events: Vec<ArrowEvent>,
}

fn check_rates(n: u32, gamma: f64, s: f64, horizon: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("population size must be at least 1"));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("gamma must be positive, got {gamma}")));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid(format!("s must be positive, got {s}")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(invalid(format!(
            "horizon must be nonnegative, got {horizon}"
        )));
    }
    Ok(())
}

impl GraphicalRepresentation {
    /// Wraps an explicit event list, e.g. a hand-built scenario or a parsed dump.
    pub fn from_events(
        n: u32,
        gamma: f64,
        s: f64,
        horizon: f64,
        events: Vec<ArrowEvent>,
    ) -> Result<Self> {
        check_rates(n, gamma, s, horizon)?;
        for e in &events {
            if e.source == 0 || e.source > n || e.target == 0 || e.target > n {
                return Err(domain(format!(
                    "arrow {} -> {} outside [1, {n}]",
                    e.source, e.target
                )));
            }
            if !(e.time > 0.0 && e.time <= horizon) {
                return Err(domain(format!(
                    "arrow time {} outside (0, {horizon}]",
                    e.time
                )));
            }
        }
        if events.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(domain("arrow times must be strictly increasing"));
        }
        Ok(Self {
            n,
            gamma,
            s,
            horizon,
            events,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn events(&self) -> &[ArrowEvent] {
        &self.events
    }

    /// Dumps the events as CSV with columns `time,source,target,kind`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time", "source", "target", "kind"])?;
        for e in &self.events {
            w.write_record([
                format!("{:.16e}", e.time),
                e.source.to_string(),
                e.target.to_string(),
                e.kind.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a dump produced by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: Read>(n: u32, gamma: f64, s: f64, horizon: f64, reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut events = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).ok_or_else(|| domain("short CSV record"));
            let time: f64 = field(0)?.parse().map_err(|_| domain("bad time field"))?;
            let source: Label = field(1)?.parse().map_err(|_| domain("bad source field"))?;
            let target: Label = field(2)?.parse().map_err(|_| domain("bad target field"))?;
            let kind = match field(3)? {
                "neutral" => ArrowKind::Neutral,
                "selective" => ArrowKind::Selective,
                other => return Err(domain(format!("unknown arrow kind {other:?}"))),
            };
            events.push(ArrowEvent {
                time,
                source,
                target,
                kind,
            });
        }
        Self::from_events(n, gamma, s, horizon, events)
    }
}

/// Samples the arrow processes on `(0, horizon]`.
///
/// The superposition of all `2N` clocks is a Poisson process of rate
/// `N (gamma/2 + s)`; each point is assigned a uniform source, a kind with
/// probability proportional to its clock rate, and a uniform target.
pub fn build_graphical<R: Rng + ?Sized>(
    n: u32,
    gamma: f64,
    s: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<GraphicalRepresentation> {
    check_rates(n, gamma, s, horizon)?;
    let per_individual = gamma / 2.0 + s;
    let total = n as f64 * per_individual;
    let p_selective = s / per_individual;
    let mut events = Vec::new();
    let mut t = 0.0f64;
    loop {
        let mut next = t + sample_exponential(rng, total);
        // Measure-zero tie in floating point: redraw the later time.
        while next <= t {
            next = t + sample_exponential(rng, total);
        }
        if next > horizon {
            break;
        }
        t = next;
        let source = rng.random_range(1..=n);
        let kind = if rng.random::<f64>() < p_selective {
            ArrowKind::Selective
        } else {
            ArrowKind::Neutral
        };
        let target = rng.random_range(1..=n);
        events.push(ArrowEvent {
            time: t,
            source,
            target,
            kind,
        });
    }
    Ok(GraphicalRepresentation {
        n,
        gamma,
        s,
        horizon,
        events,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlleleType {
    Beneficial,
    Wild,
}

/// Type of every individual; index `i` holds label `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeConfiguration(Vec<AlleleType>);

impl TypeConfiguration {
    pub fn new(types: Vec<AlleleType>) -> Self {
        Self(types)
    }

    pub fn all(n: u32, ty: AlleleType) -> Self {
        Self(vec![ty; n as usize])
    }

    /// Labels `1..=wild` are wild type, the rest beneficial.
    pub fn with_wild_count(n: u32, wild: u32) -> Result<Self> {
        if wild > n {
            return Err(domain(format!("wild count {wild} exceeds N = {n}")));
        }
        Ok(Self(
            (0..n)
                .map(|i| {
                    if i < wild {
                        AlleleType::Wild
                    } else {
                        AlleleType::Beneficial
                    }
                })
                .collect(),
        ))
    }

    /// Only the listed labels are beneficial.
    pub fn with_beneficial(n: u32, beneficial: &[Label]) -> Result<Self> {
        let mut types = vec![AlleleType::Wild; n as usize];
        for &l in beneficial {
            if l == 0 || l > n {
                return Err(domain(format!("label {l} outside [1, {n}]")));
            }
            types[l as usize - 1] = AlleleType::Beneficial;
        }
        Ok(Self(types))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, label: Label) -> AlleleType {
        self.0[label as usize - 1]
    }

    pub fn wild_count(&self) -> usize {
        self.0.iter().filter(|&&t| t == AlleleType::Wild).count()
    }

    pub fn beneficial_labels(&self) -> Vec<Label> {
        (1..=self.0.len() as Label)
            .filter(|&l| self.get(l) == AlleleType::Beneficial)
            .collect()
    }
}

/// Applies the arrows up to the horizon. See [`propagate_until`].
pub fn propagate_forward(
    graph: &GraphicalRepresentation,
    init: &TypeConfiguration,
) -> Result<(TypeConfiguration, Path)> {
    propagate_until(graph, init, graph.horizon)
}

/// Applies arrows with time `<= t` to `init`: a neutral arrow copies the
/// source type onto the target, a selective arrow does so only from a
/// beneficial source. Returns the types at `t` and the wild-type count path
/// on `[0, t]`.
pub fn propagate_until(
    graph: &GraphicalRepresentation,
    init: &TypeConfiguration,
    t: f64,
) -> Result<(TypeConfiguration, Path)> {
    if init.len() != graph.n as usize {
        return Err(domain(format!(
            "configuration has {} individuals, graph has {}",
            init.len(),
            graph.n
        )));
    }
    if !(0.0..=graph.horizon).contains(&t) {
        return Err(domain(format!("time {t} outside [0, {}]", graph.horizon)));
    }
    let mut types = init.0.clone();
    let mut wild = init.wild_count() as State;
    let mut times = vec![0.0];
    let mut counts = vec![wild];
    for e in graph.events.iter().take_while(|e| e.time <= t) {
        let src = types[e.source as usize - 1];
        if e.kind == ArrowKind::Selective && src != AlleleType::Beneficial {
            continue;
        }
        let dst = &mut types[e.target as usize - 1];
        if *dst != src {
            *dst = src;
            if src == AlleleType::Wild {
                wild += 1;
            } else {
                wild -= 1;
            }
            times.push(e.time);
            counts.push(wild);
        }
    }
    let path = Path::new(times, counts, t.max(0.0))?;
    Ok((TypeConfiguration(types), path))
}

/// Potential ancestors at a point of the backward traversal.
#[derive(Debug, Clone, PartialEq)]
pub struct AncestrySnapshot {
    /// Forward time of the snapshot.
    pub time: f64,
    /// Sorted labels.
    pub ancestors: Vec<Label>,
}

impl AncestrySnapshot {
    pub fn line_count(&self) -> usize {
        self.ancestors.len()
    }
}

struct AncestorSet {
    member: Vec<bool>,
    count: usize,
}

impl AncestorSet {
    fn new(n: u32, sample: &[Label]) -> Result<Self> {
        if sample.is_empty() {
            return Err(domain("sample must be nonempty"));
        }
        let mut member = vec![false; n as usize];
        let mut count = 0;
        for &l in sample {
            if l == 0 || l > n {
                return Err(domain(format!("label {l} outside [1, {n}]")));
            }
            let m = &mut member[l as usize - 1];
            if !*m {
                *m = true;
                count += 1;
            }
        }
        Ok(Self { member, count })
    }

    fn contains(&self, l: Label) -> bool {
        self.member[l as usize - 1]
    }

    fn insert(&mut self, l: Label) {
        let m = &mut self.member[l as usize - 1];
        if !*m {
            *m = true;
            self.count += 1;
        }
    }

    fn remove(&mut self, l: Label) {
        let m = &mut self.member[l as usize - 1];
        if *m {
            *m = false;
            self.count -= 1;
        }
    }

    /// Applies one arrow backwards; returns whether the set changed.
    fn apply(&mut self, e: &ArrowEvent) -> bool {
        if e.source == e.target || !self.contains(e.target) {
            return false;
        }
        match e.kind {
            ArrowKind::Selective => {
                let changed = !self.contains(e.source);
                self.insert(e.source);
                changed
            }
            ArrowKind::Neutral => {
                self.remove(e.target);
                self.insert(e.source);
                true
            }
        }
    }

    fn labels(&self) -> Vec<Label> {
        self.member
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i as Label + 1)
            .collect()
    }
}

fn backward_events(
    graph: &GraphicalRepresentation,
    from_time: f64,
) -> Result<impl Iterator<Item = &ArrowEvent>> {
    if !(0.0..=graph.horizon).contains(&from_time) {
        return Err(domain(format!(
            "from_time {from_time} outside [0, {}]",
            graph.horizon
        )));
    }
    let end = graph.events.partition_point(|e| e.time <= from_time);
    Ok(graph.events[..end].iter().rev())
}

/// Traces the potential ancestry of `sample` from `from_time` back to 0.
///
/// The first snapshot is the sample at `from_time`; one snapshot follows
/// each change of the set; the last is always the ancestry at time 0.
pub fn trace_asg(
    graph: &GraphicalRepresentation,
    sample: &[Label],
    from_time: f64,
) -> Result<Vec<AncestrySnapshot>> {
    let mut set = AncestorSet::new(graph.n, sample)?;
    let mut snapshots = vec![AncestrySnapshot {
        time: from_time,
        ancestors: set.labels(),
    }];
    for e in backward_events(graph, from_time)? {
        if set.apply(e) {
            snapshots.push(AncestrySnapshot {
                time: e.time,
                ancestors: set.labels(),
            });
        }
    }
    if snapshots.last().unwrap().time != 0.0 {
        snapshots.push(AncestrySnapshot {
            time: 0.0,
            ancestors: set.labels(),
        });
    }
    Ok(snapshots)
}

/// Line count of the ASG as a path in backward time `from_time - t`.
pub fn trace_line_count(
    graph: &GraphicalRepresentation,
    sample: &[Label],
    from_time: f64,
) -> Result<Path> {
    let mut set = AncestorSet::new(graph.n, sample)?;
    let mut times = vec![0.0];
    let mut counts = vec![set.count as State];
    for e in backward_events(graph, from_time)? {
        if set.apply(e) && set.count as State != *counts.last().unwrap() {
            let back = from_time - e.time;
            if back == 0.0 {
                // arrow exactly at the sampling time
                counts[0] = set.count as State;
            } else {
                times.push(back);
                counts.push(set.count as State);
            }
        }
    }
    Path::new(times, counts, from_time)
}

/// Checks that the sampled individual is beneficial at `t` exactly when
/// one of its potential ancestors at time 0 was beneficial initially.
pub fn check_pathwise_duality(
    graph: &GraphicalRepresentation,
    sample: Label,
    init: &TypeConfiguration,
    t: f64,
) -> Result<bool> {
    let (types, _) = propagate_until(graph, init, t)?;
    let forward = types.get(sample) == AlleleType::Beneficial;
    let ancestry = trace_asg(graph, &[sample], t)?;
    let backward = ancestry
        .last()
        .unwrap()
        .ancestors
        .iter()
        .any(|&l| init.get(l) == AlleleType::Beneficial);
    Ok(forward == backward)
}
