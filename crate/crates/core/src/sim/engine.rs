//! The event loop.
//!
//! Every frame is encoded, carried over one link with a random per-hop delay,
//! and decoded at the receiver. Nodes react to what they decode; the root
//! additionally runs the probe sessions and issues quarantines.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::attacker::{step_attacker, AttackerAction, AttackerEvent, AttackerProfile};
use super::config::{ConfigError, DefenseMode, ScenarioConfig};
use super::topology::{generate_topology, Topology, TopologyError};
use super::trace::{
    Conservation, DetectionRecord, DetectionStage, DetectionVerdict, EventTrace, QuarantineRecord,
};
use crate::detect::{
    classify_dio, confirm_sinkhole, is_abnormal, update_threshold, Confirmation, DioVerdict,
    PdrProbeRecord, PdrThresholdState, RankObservation,
};
use crate::dodag::{compute_rank, select_parents, ParentCandidate};
use crate::graph::DodagGraph;
use crate::he::{self, Ciphertext, HeError, PublicKey, SecretKey};
use crate::metrics::{ConfusionCounts, DeliveryTallies};
use crate::quarantine::{QuarantineList, WarningMessage};
use crate::trust::{to_fixed, MonitoringEntry, ReqpOutcome, TrustEngine};
use crate::types::{EnergyLevel, NodeId, Rank, SimTime};
use crate::wire::{
    decode_packet, encode_packet, Ack, AckKind, Data, DataTag, Dio, Packet, ProbeOption, ReqpR,
    RplMc, Warning, WarningKind, FIXED_POINT_ONE, TYPE_DATA, TYPE_RPL_MC,
};

/// Frames still queued this long after the end of traffic count as in flight.
const DRAIN: SimTime = SimTime(120_000_000);
/// Follow-up probes after a session that never reached its suspect.
const MAX_RETRIES: u32 = 5;
const RETRY_GAP: SimTime = SimTime(2_000_000);
/// Data packets a parentless node holds on to.
const BUFFER_CAP: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
    #[error("key generation: {0}")]
    He(#[from] HeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbePurpose {
    /// Clean route sampled to build the threshold.
    Threshold,
    /// Route through a reported suspect.
    Suspect,
}

/// One finished probe session.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeLog {
    pub time: SimTime,
    pub target: NodeId,
    pub purpose: ProbePurpose,
    pub record: PdrProbeRecord,
    pub verdict: Option<DetectionVerdict>,
    pub abnormal: bool,
}

/// Everything a run produces.
#[derive(Debug)]
pub struct RunOutput {
    pub topology: Topology,
    pub attackers: Vec<NodeId>,
    /// Attackers the root never probed.
    pub unprobed_attackers: Vec<NodeId>,
    pub quarantined: BTreeSet<NodeId>,
    pub confusion: ConfusionCounts,
    pub delivery: DeliveryTallies,
    pub trace: EventTrace,
    pub detections: Vec<DetectionRecord>,
    pub quarantines: Vec<QuarantineRecord>,
    pub probes: Vec<ProbeLog>,
    pub threshold: PdrThresholdState,
    /// Links the root learned from reliability ACKs, low id first.
    pub learned_links: BTreeSet<(NodeId, NodeId)>,
    /// Final parent relation; quarantined nodes are left out.
    pub graph: DodagGraph,
    pub conservation: Conservation,
    /// Monitoring tables at the end of the run, by node.
    pub tables: Vec<Vec<MonitoringEntry>>,
    pub energy: Vec<EnergyLevel>,
    pub he_checked: u64,
    pub he_mismatches: u64,
    pub end_time: SimTime,
}

enum Ev {
    Frame {
        to: NodeId,
        from: NodeId,
        kind: &'static str,
        bytes: Vec<u8>,
    },
    ReqpRound {
        round: u32,
    },
    ReliabilityUpdate,
    ReliabilityAck {
        node: NodeId,
        sequence: u32,
        return_route: Vec<NodeId>,
    },
    DioTimer {
        node: NodeId,
    },
    AttachTimer {
        node: NodeId,
    },
    ThresholdProbes,
    ProbeSend {
        session: u32,
        index: u32,
    },
    ProbeTimeout {
        session: u32,
    },
    Reprobe {
        target: NodeId,
        attempt: u32,
    },
    DataGen {
        node: NodeId,
    },
    AggFlush {
        node: NodeId,
    },
    AttackToggle {
        node: NodeId,
    },
}

struct Scheduled {
    time: SimTime,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Scheduled {
    fn eq(&self, o: &Self) -> bool {
        self.time == o.time && self.seq == o.seq
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Scheduled {
    // Reversed: the heap pops the earliest event, FIFO among equal times.
    fn cmp(&self, o: &Self) -> Ordering {
        o.time.cmp(&self.time).then(o.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy)]
struct DioInfo {
    rank: Rank,
    version: u16,
    grounded: bool,
    suspicious: bool,
}

struct Node {
    id: NodeId,
    energy: EnergyLevel,
    trust: TrustEngine,
    attacker: Option<AttackerProfile>,
    parent: Option<NodeId>,
    rank: Rank,
    /// Own and parent rank as of the last routing-table update.
    obs_rank: Option<Rank>,
    obs_parent_rank: Option<Rank>,
    version: u16,
    grounded: bool,
    dios: BTreeMap<NodeId, DioInfo>,
    attach_pending: bool,
    quarantine: QuarantineList,
    last_report: BTreeMap<NodeId, SimTime>,
    /// Reports already passed on, by origin, suspect and issue time.
    relayed: BTreeSet<(NodeId, NodeId, u64)>,
    data_seq: u32,
    buffer: VecDeque<Data>,
    agg: Option<Data>,
}

impl Node {
    fn is_root(&self) -> bool {
        self.id.is_border_router()
    }
}

struct Session {
    purpose: ProbePurpose,
    target: NodeId,
    route: Vec<NodeId>,
    /// Route indices of the suspect's predecessor and of the destination.
    pred: usize,
    dest: usize,
    pred_acks: BTreeSet<u32>,
    dest_acks: BTreeSet<u32>,
}

#[derive(Default)]
struct RootState {
    /// Links learned from reliability ACKs, stored low id first.
    links: BTreeSet<(NodeId, NodeId)>,
    threshold: PdrThresholdState,
    sessions: BTreeMap<u32, Session>,
    next_session: u32,
    holdoff: BTreeMap<NodeId, SimTime>,
    in_progress: BTreeSet<NodeId>,
    suspects: BTreeSet<NodeId>,
    quarantined: BTreeSet<NodeId>,
    probed: BTreeSet<NodeId>,
    /// Interior hops of probe routes that never reached the suspect.
    failed_hops: BTreeMap<NodeId, BTreeSet<NodeId>>,
    retries: BTreeMap<NodeId, u32>,
    epoch: u16,
}

impl RootState {
    fn learn(&mut self, a: NodeId, b: NodeId) {
        if a != b {
            self.links.insert((a.min(b), a.max(b)));
        }
    }

    fn adjacent(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.links.iter().filter_map(move |&(a, b)| {
            if a == n {
                Some(b)
            } else if b == n {
                Some(a)
            } else {
                None
            }
        })
    }

    fn knows_link(&self, a: NodeId, b: NodeId) -> bool {
        self.links.contains(&(a.min(b), a.max(b)))
    }

    /// Shortest learned path from the root to `target` avoiding `avoid`.
    fn path_to(&self, target: NodeId, avoid: &BTreeSet<NodeId>) -> Option<Vec<NodeId>> {
        let root = NodeId::BORDER_ROUTER;
        let mut prev: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut q = VecDeque::from([root]);
        let mut seen = BTreeSet::from([root]);
        while let Some(n) = q.pop_front() {
            if n == target {
                let mut path = vec![n];
                let mut cur = n;
                while let Some(&p) = prev.get(&cur) {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            for m in self.adjacent(n) {
                if (m == target || !avoid.contains(&m)) && seen.insert(m) {
                    prev.insert(m, n);
                    q.push_back(m);
                }
            }
        }
        None
    }
}

struct Describe<'a>(&'a Packet);

impl fmt::Display for Describe<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Packet::Dio(d) => write!(
                f,
                "dio rank={} v={} g={}",
                d.rank,
                d.version,
                u8::from(d.grounded)
            ),
            Packet::ReqpR(r) => write!(f, "reqp_r seq={}", r.sequence),
            Packet::Ack(a) => write!(f, "ack k={} n={} seq={}", a.kind as u8, a.node, a.sequence),
            Packet::RplMc(m) => write!(f, "rpl_mc len={}", m.options.len()),
            Packet::Warning(w) => write!(
                f,
                "warning k={} m={} o={}",
                w.kind as u8, w.malicious, w.origin
            ),
            Packet::Data(d) => write!(f, "data c={} h={}", d.contributors.len(), d.hops),
        }
    }
}

struct To(Option<NodeId>);

impl fmt::Display for To {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(n) => write!(f, "{n}"),
            None => f.write_str("*"),
        }
    }
}

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

struct Sim {
    cfg: ScenarioConfig,
    guarded: bool,
    topo: Topology,
    nodes: Vec<Node>,
    root: RootState,
    queue: BinaryHeap<Scheduled>,
    next_seq: u64,
    now: SimTime,
    end: SimTime,
    trace: EventTrace,
    counters: Conservation,
    link_clock: BTreeMap<(NodeId, NodeId), SimTime>,
    rng_link: ChaCha8Rng,
    rng_attack: ChaCha8Rng,
    rng_data: ChaCha8Rng,
    rng_ctrl: ChaCha8Rng,
    pk: PublicKey,
    sk: SecretKey,
    truth: BTreeMap<DataTag, BigUint>,
    delivered_tags: BTreeSet<DataTag>,
    delivery: DeliveryTallies,
    detections: Vec<DetectionRecord>,
    quarantines: Vec<QuarantineRecord>,
    probes: Vec<ProbeLog>,
    he_checked: u64,
    he_mismatches: u64,
    attackers: Vec<NodeId>,
}

/// Runs one scenario to completion.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    let topo = generate_topology(cfg)?;
    let (pk, sk) = he::keygen(cfg.he_prime_bits, cfg.seed ^ 0x4845_0000)?;
    let mut sim = Sim::new(cfg.clone(), topo, pk, sk);
    sim.schedule_initial();
    Ok(sim.run())
}

impl Sim {
    fn new(cfg: ScenarioConfig, topo: Topology, pk: PublicKey, sk: SecretKey) -> Self {
        let mut rng_ctrl = rng_stream(cfg.seed, 5);
        let attackers: Vec<NodeId> = match &cfg.attackers {
            Some(a) => {
                let mut a = a.clone();
                a.sort();
                a.dedup();
                a
            }
            None => {
                let mut ids: Vec<NodeId> = (1..cfg.num_nodes).map(NodeId).collect();
                ids.shuffle(&mut rng_ctrl);
                let mut a: Vec<NodeId> = ids
                    .into_iter()
                    .take(cfg.attacker_count() as usize)
                    .collect();
                a.sort();
                a
            }
        };
        let tcfg = cfg.trust_config();
        let full = EnergyLevel::full(cfg.initial_energy).expect("validated");
        let warm = cfg.warmup_end();
        let mut nodes = Vec::with_capacity(cfg.num_nodes as usize);
        for i in 0..cfg.num_nodes {
            let id = NodeId(i);
            let attacker = attackers.binary_search(&id).ok().map(|_| {
                let base = AttackerProfile::persistent(id, warm, cfg.drop_probability);
                if cfg.attack_interval > 0.0 {
                    let burst = SimTime::from_secs_f64(cfg.attack_interval);
                    let rest = SimTime::from_secs_f64(cfg.attack_rest);
                    let phase = rng_ctrl.gen_range(0..(burst.0 + rest.0).max(1));
                    AttackerProfile {
                        activation_time: warm + SimTime(phase),
                        burst: Some(burst),
                        rest,
                        ..base
                    }
                } else {
                    base
                }
            });
            let is_root = id.is_border_router();
            nodes.push(Node {
                id,
                energy: full,
                trust: TrustEngine::new(id, tcfg),
                attacker,
                parent: None,
                rank: if is_root {
                    Rank(cfg.rank_params.root_base)
                } else {
                    Rank::INFINITE
                },
                obs_rank: is_root.then_some(Rank(cfg.rank_params.root_base)),
                obs_parent_rank: None,
                version: 0,
                grounded: is_root,
                dios: BTreeMap::new(),
                attach_pending: false,
                quarantine: QuarantineList::default(),
                last_report: BTreeMap::new(),
                relayed: BTreeSet::new(),
                data_seq: 0,
                buffer: VecDeque::new(),
                agg: None,
            });
        }
        Sim {
            guarded: cfg.defense == DefenseMode::Guarded,
            end: cfg.end(),
            trace: EventTrace::new(cfg.keep_trace),
            rng_link: rng_stream(cfg.seed, 1),
            rng_attack: rng_stream(cfg.seed, 2),
            rng_data: rng_stream(cfg.seed, 3),
            rng_ctrl,
            cfg,
            topo,
            nodes,
            root: RootState::default(),
            queue: BinaryHeap::new(),
            next_seq: 0,
            now: SimTime::ZERO,
            counters: Conservation::new(),
            link_clock: BTreeMap::new(),
            pk,
            sk,
            truth: BTreeMap::new(),
            delivered_tags: BTreeSet::new(),
            delivery: DeliveryTallies::default(),
            detections: Vec::new(),
            quarantines: Vec::new(),
            probes: Vec::new(),
            he_checked: 0,
            he_mismatches: 0,
            attackers,
        }
    }

    fn schedule(&mut self, time: SimTime, ev: Ev) {
        self.next_seq += 1;
        self.queue.push(Scheduled {
            time,
            seq: self.next_seq,
            ev,
        });
    }

    fn schedule_initial(&mut self) {
        let dt = self.cfg.weights.delta_t;
        if self.guarded {
            for k in 0..self.cfg.reqp_rounds {
                let start = self.cfg.reqp_start(k);
                self.schedule(start, Ev::ReqpRound { round: k });
                self.schedule(start + SimTime(dt.0 / 10 * 9), Ev::ReliabilityUpdate);
            }
            self.schedule(self.cfg.threshold_start(), Ev::ThresholdProbes);
        }
        let start = self.cfg.dodag_start();
        let period = SimTime::from_secs_f64(self.cfg.dio_period).0.max(1);
        self.schedule(
            start,
            Ev::DioTimer {
                node: NodeId::BORDER_ROUTER,
            },
        );
        let data_period = self.data_period();
        for i in 1..self.cfg.num_nodes {
            let phase = self.rng_ctrl.gen_range(0..period);
            self.schedule(start + SimTime(phase), Ev::DioTimer { node: NodeId(i) });
        }
        for i in 1..self.cfg.num_nodes {
            let id = NodeId(i);
            if let Some(p) = self.nodes[i as usize].attacker {
                self.schedule(p.activation_time, Ev::AttackToggle { node: id });
            } else if let Some(dp) = data_period {
                let phase = self.rng_ctrl.gen_range(0..dp.0.max(1));
                self.schedule(
                    self.cfg.warmup_end() + SimTime(phase),
                    Ev::DataGen { node: id },
                );
            }
        }
    }

    fn data_period(&self) -> Option<SimTime> {
        (self.cfg.data_rate > 0.0).then(|| SimTime::from_secs_f64(1.0 / self.cfg.data_rate))
    }

    fn run(mut self) -> RunOutput {
        let stop = self.end + DRAIN;
        while let Some(s) = self.queue.pop() {
            if s.time > stop {
                self.queue.push(s);
                break;
            }
            self.now = s.time;
            self.dispatch(s.ev);
        }
        for s in self.queue.iter() {
            if let Ev::Frame { kind, .. } = &s.ev {
                self.counters.entry(kind).or_default().in_flight += 1;
            }
        }
        self.finish()
    }

    fn dispatch(&mut self, ev: Ev) {
        match ev {
            Ev::Frame {
                to,
                from,
                kind,
                bytes,
            } => self.on_frame(to, from, kind, &bytes),
            Ev::ReqpRound { round } => self.reqp_round(round),
            Ev::ReliabilityUpdate => {
                let now = self.now;
                for n in &mut self.nodes {
                    n.trust.update_reliability(now);
                }
                self.trace.record(
                    now,
                    "reliability",
                    NodeId::BORDER_ROUTER,
                    format_args!("update"),
                );
            }
            Ev::ReliabilityAck {
                node,
                sequence,
                return_route,
            } => {
                let table = self.nodes[node.0 as usize].trust.table_claims();
                let ack = Ack {
                    kind: AckKind::Reliability,
                    node,
                    sequence,
                    return_route,
                    table,
                };
                self.transmit(node, None, &Packet::Ack(ack));
            }
            Ev::DioTimer { node } => self.dio_timer(node),
            Ev::AttachTimer { node } => self.attach(node),
            Ev::ThresholdProbes => self.threshold_probes(),
            Ev::ProbeSend { session, index } => self.probe_send(session, index),
            Ev::ProbeTimeout { session } => self.probe_timeout(session),
            Ev::Reprobe { target, attempt } => self.reprobe(target, attempt),
            Ev::DataGen { node } => self.data_gen(node),
            Ev::AggFlush { node } => {
                if let Some(d) = self.nodes[node.0 as usize].agg.take() {
                    self.send_up(node, d);
                }
            }
            Ev::AttackToggle { node } => self.attack_toggle(node),
        }
    }

    fn n(&self, id: NodeId) -> &Node {
        &self.nodes[id.0 as usize]
    }

    fn nm(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id.0 as usize]
    }

    fn is_attacker(&self, id: NodeId) -> bool {
        self.n(id).attacker.is_some()
    }

    fn attack_active(&self, id: NodeId) -> bool {
        self.n(id).attacker.is_some_and(|p| p.is_active(self.now))
    }

    fn detection_on(&self) -> bool {
        self.guarded && self.now >= self.cfg.warmup_end() && self.now <= self.end
    }

    fn hop_delay(&mut self) -> SimTime {
        let base = SimTime::from_secs_f64(self.cfg.tx_time);
        let wake = SimTime::from_secs_f64(self.cfg.wakeup_interval).0;
        let jitter = if wake > 0 {
            self.rng_link.gen_range(0..wake)
        } else {
            0
        };
        base + SimTime(jitter)
    }

    fn debit(&mut self, id: NodeId, base: u32, bytes: u32) {
        let cost = base.saturating_add(self.cfg.per_byte_cost.saturating_mul(bytes));
        self.nm(id).energy.debit(cost);
    }

    /// Puts one frame on the air: to a single neighbor, or to all of them.
    fn transmit(&mut self, from: NodeId, to: Option<NodeId>, pkt: &Packet) {
        let bytes = match encode_packet(pkt) {
            Ok(b) => b,
            Err(e) => {
                self.trace
                    .record(self.now, "encode_error", from, format_args!("{e}"));
                return;
            }
        };
        let kind = pkt.kind_name();
        let billed = if matches!(pkt, Packet::Data(_)) {
            self.cfg.transaction_size
        } else {
            bytes.len() as u32
        };
        self.debit(from, self.cfg.tx_cost, billed);
        self.trace.record(
            self.now,
            "tx",
            from,
            format_args!("{} ->{}", Describe(pkt), To(to)),
        );
        let receivers: Vec<NodeId> = match to {
            Some(t) if self.topo.linked(from, t) => vec![t],
            Some(_) => Vec::new(),
            None => self.topo.neighbors(from).to_vec(),
        };
        for r in receivers {
            self.counters.entry(kind).or_default().sent += 1;
            if self.cfg.ambient_loss > 0.0 && self.rng_link.gen_bool(self.cfg.ambient_loss) {
                self.counters.entry(kind).or_default().lost += 1;
                self.trace
                    .record(self.now, "lost", r, format_args!("{kind}<-{from}"));
                continue;
            }
            // Links are FIFO: a frame never overtakes an earlier one.
            let last = self
                .link_clock
                .get(&(from, r))
                .copied()
                .unwrap_or(SimTime::ZERO);
            let at = (self.now + self.hop_delay()).max(last);
            self.link_clock.insert((from, r), at);
            self.schedule(
                at,
                Ev::Frame {
                    to: r,
                    from,
                    kind,
                    bytes: bytes.clone(),
                },
            );
        }
    }

    fn discard(&mut self, kind: &'static str, at: NodeId, why: &str) {
        self.counters.entry(kind).or_default().discarded += 1;
        self.trace
            .record(self.now, "discard", at, format_args!("{kind} {why}"));
    }

    fn on_frame(&mut self, to: NodeId, from: NodeId, kind: &'static str, bytes: &[u8]) {
        self.counters.entry(kind).or_default().delivered += 1;
        let billed = if kind == "data" {
            self.cfg.transaction_size
        } else {
            bytes.len() as u32
        };
        self.debit(to, self.cfg.rx_cost, billed);
        let pkt = match decode_packet(bytes) {
            Ok(p) => p,
            Err(e) => {
                self.trace
                    .record(self.now, "decode_error", to, format_args!("{e}"));
                self.discard(kind, to, "undecodable");
                return;
            }
        };
        if self.guarded && !self.is_attacker(to) && self.n(to).quarantine.contains(from) {
            self.discard(kind, to, "quarantined sender");
            return;
        }
        match pkt {
            Packet::Dio(d) => self.on_dio(to, from, d),
            Packet::ReqpR(r) => self.on_reqp(to, r),
            Packet::Ack(a) => self.on_ack(to, from, a),
            Packet::RplMc(m) => self.on_probe(to, from, m),
            Packet::Warning(w) => self.on_warning(to, from, w),
            Packet::Data(d) => self.on_data(to, from, d),
        }
    }

    // Reliability rounds.

    fn reqp_round(&mut self, round: u32) {
        let root = NodeId::BORDER_ROUTER;
        let pkt = ReqpR {
            node: root,
            energy: self.n(root).energy.residual(),
            source: root.ipv6(),
            sequence: round + 1,
            route: vec![root],
        };
        self.transmit(root, None, &Packet::ReqpR(pkt));
    }

    fn on_reqp(&mut self, at: NodeId, pkt: ReqpR) {
        let now = self.now;
        let energy = self.n(at).energy;
        match self.nm(at).trust.handle_reqp_r(&pkt, energy, now) {
            Ok(ReqpOutcome::Forward { forward, ack }) => {
                self.transmit(at, None, &Packet::ReqpR(forward));
                let half = SimTime(self.cfg.weights.delta_t.0 / 2);
                self.schedule(
                    now + half,
                    Ev::ReliabilityAck {
                        node: at,
                        sequence: ack.sequence,
                        return_route: ack.return_route,
                    },
                );
            }
            Ok(ReqpOutcome::Dropped { .. }) => {}
            Err(_) => self.discard("reqp_r", at, "malformed route"),
        }
    }

    fn on_ack(&mut self, at: NodeId, from: NodeId, ack: Ack) {
        if ack.kind == AckKind::Reliability && from == ack.node {
            self.nm(at).trust.handle_claims(from, &ack.table);
        }
        // Relay along the return route; overhearing neighbors stop here.
        // Routes may visit a node twice, so match on the previous hop too.
        let rr = &ack.return_route;
        let hop = (0..rr.len())
            .find(|&k| rr[k] == at && from == if k == 0 { ack.node } else { rr[k - 1] });
        let Some(k) = hop else { return };
        if k + 1 < ack.return_route.len() {
            let next = ack.return_route[k + 1];
            self.transmit(at, Some(next), &Packet::Ack(ack));
            return;
        }
        if !at.is_border_router() {
            return;
        }
        match ack.kind {
            AckKind::Reliability => {
                let mut hops: Vec<NodeId> = vec![ack.node];
                hops.extend(ack.return_route.iter().copied());
                for w in hops.windows(2) {
                    self.root.learn(w[0], w[1]);
                }
                for c in &ack.table {
                    self.root.learn(ack.node, c.neighbor);
                }
            }
            AckKind::Probe => self.on_probe_ack(ack.return_route.len(), ack.sequence),
        }
    }

    // DODAG construction and maintenance.

    fn own_dio(&self, id: NodeId) -> Dio {
        let n = self.n(id);
        let reliability = if id.is_border_router() {
            FIXED_POINT_ONE
        } else if self.guarded {
            n.trust.self_reliability().map(to_fixed).unwrap_or(0)
        } else {
            0
        };
        Dio {
            sender: id,
            rank: n.rank,
            reliability,
            version: n.version,
            grounded: n.grounded,
        }
    }

    /// Broadcasts the node's DIO, or what an attacker makes of it.
    fn emit_dio(&mut self, id: NodeId) {
        let mut dio = self.own_dio(id);
        if let Some(p) = self.n(id).attacker {
            let ev = AttackerEvent::EmitDio {
                honest_rank: dio.rank,
                honest_reliability: dio.reliability,
            };
            match step_attacker(&p, self.now, ev, &mut self.rng_attack) {
                AttackerAction::Advertise { rank, reliability } => {
                    if rank != dio.rank {
                        dio.rank = rank;
                        dio.reliability = reliability;
                        dio.grounded = true;
                    }
                }
                _ => return,
            }
        } else if id.is_border_router() {
            dio.version = self.root.epoch;
        } else if dio.rank.is_infinite() && dio.grounded {
            return;
        }
        self.transmit(id, None, &Packet::Dio(dio));
    }

    fn dio_timer(&mut self, id: NodeId) {
        if self.now > self.end {
            return;
        }
        let attached = id.is_border_router() || self.n(id).parent.is_some();
        if attached || self.attack_active(id) {
            self.emit_dio(id);
        }
        let period = SimTime::from_secs_f64(self.cfg.dio_period);
        self.schedule(self.now + period, Ev::DioTimer { node: id });
    }

    fn on_dio(&mut self, at: NodeId, from: NodeId, d: Dio) {
        if at.is_border_router() || from == at {
            return;
        }
        // Without the defense an activated attacker freezes its routing state,
        // which would otherwise chase its own fake rank into a loop.
        if !self.guarded && self.n(at).attacker.is_some_and(|p| p.activated(self.now)) {
            return;
        }
        if self.guarded {
            self.guarded_dio(at, from, d);
        } else {
            self.plain_dio(at, from, d);
        }
    }

    fn guarded_dio(&mut self, at: NodeId, from: NodeId, d: Dio) {
        let now = self.now;
        let mut suspicious = false;
        if self.detection_on() && !self.is_attacker(at) && !d.rank.is_infinite() {
            if let Some(node_rank) = self.n(at).obs_rank {
                let obs = RankObservation {
                    node_rank,
                    parent_rank: self.n(at).obs_parent_rank,
                    sender_rank: d.rank,
                    sender: from,
                };
                suspicious = classify_dio(&obs) == DioVerdict::Suspicious;
            }
        }
        self.nm(at).dios.insert(
            from,
            DioInfo {
                rank: d.rank,
                version: d.version,
                grounded: d.grounded,
                suspicious,
            },
        );
        if suspicious {
            self.detections.push(DetectionRecord {
                time: now,
                observer: at,
                suspect: from,
                stage: DetectionStage::Rank,
                verdict: DetectionVerdict::Suspicious,
                pdr: None,
            });
            self.trace
                .record(now, "suspect", at, format_args!("{from} rank={}", d.rank));
            self.report(at, from, d.rank);
        }

        if self.n(at).parent == Some(from) {
            if d.rank.is_infinite() {
                let v = self.n(at).version.max(d.version);
                self.nm(at).version = v;
                self.detach(at, "poison");
                return;
            }
            let node = self.n(at);
            let newer = d.version > node.version;
            if newer || (d.version == node.version && d.grounded != node.grounded) {
                let node = self.nm(at);
                node.version = d.version;
                node.grounded = d.grounded;
                self.trace.record(
                    now,
                    "ground",
                    at,
                    format_args!("v={} g={}", d.version, u8::from(d.grounded)),
                );
                self.emit_dio(at);
            }
            let r = self.parent_reliability(at, from);
            if let Ok(rank) = compute_rank(d.rank, r, &self.cfg.rank_params) {
                if rank > self.n(at).rank {
                    let node = self.nm(at);
                    node.rank = rank;
                    node.obs_rank = Some(rank);
                    node.obs_parent_rank = Some(d.rank);
                    self.emit_dio(at);
                }
            }
            return;
        }
        if self.n(at).parent.is_none() {
            self.maybe_schedule_attach(at);
        }
    }

    fn plain_dio(&mut self, at: NodeId, from: NodeId, d: Dio) {
        let now = self.now;
        self.nm(at).dios.insert(
            from,
            DioInfo {
                rank: d.rank,
                version: d.version,
                grounded: d.grounded,
                suspicious: false,
            },
        );
        if d.rank.is_infinite() {
            return;
        }
        let Some(cand) = d.rank.0.checked_add(self.cfg.rank_params.min_h).map(Rank) else {
            return;
        };
        if cand.is_infinite() {
            return;
        }
        let node = self.n(at);
        match node.parent {
            None => self.maybe_schedule_attach(at),
            Some(p) if p == from => {
                if cand != node.rank {
                    self.nm(at).rank = cand;
                    self.emit_dio(at);
                }
            }
            Some(_) => {
                if cand < node.rank {
                    let node = self.nm(at);
                    node.parent = Some(from);
                    node.rank = cand;
                    self.trace
                        .record(now, "switch", at, format_args!("parent={from} rank={cand}"));
                    self.emit_dio(at);
                }
            }
        }
    }

    fn maybe_schedule_attach(&mut self, at: NodeId) {
        if self.n(at).attach_pending || self.now > self.end + DRAIN {
            return;
        }
        self.nm(at).attach_pending = true;
        let wait = SimTime::from_secs_f64(self.cfg.attach_wait);
        self.schedule(self.now + wait, Ev::AttachTimer { node: at });
    }

    fn parent_reliability(&self, at: NodeId, p: NodeId) -> f64 {
        if p.is_border_router() && self.n(at).trust.entry(p).is_none() {
            return 1.0;
        }
        self.n(at).trust.final_reliability_of(p).unwrap_or(0.0)
    }

    fn candidates(&self, at: NodeId) -> Vec<(ParentCandidate, Rank)> {
        let node = self.n(at);
        let mut out = Vec::new();
        for (&j, info) in &node.dios {
            if info.rank.is_infinite() || (self.guarded && node.quarantine.contains(j)) {
                continue;
            }
            if !self.guarded {
                let Some(r) = info.rank.0.checked_add(self.cfg.rank_params.min_h) else {
                    continue;
                };
                if r == Rank::INFINITE.0 {
                    continue;
                }
                let c = ParentCandidate {
                    neighbor: j,
                    final_reliability: 1.0,
                    advertised_rank: info.rank,
                };
                out.push((c, Rank(r)));
                continue;
            }
            if !info.grounded || info.version < node.version {
                continue;
            }
            // An attacker knows who routes through it and keeps out of its
            // own subtree.
            if node.attacker.is_some() && self.routes_through(j, at) {
                continue;
            }
            let r = self.parent_reliability(at, j);
            let Ok(rank) = compute_rank(info.rank, r, &self.cfg.rank_params) else {
                continue;
            };
            if info.suspicious && node.obs_rank.is_some_and(|o| rank < o) {
                continue;
            }
            out.push((
                ParentCandidate {
                    neighbor: j,
                    final_reliability: r,
                    advertised_rank: info.rank,
                },
                rank,
            ));
        }
        out
    }

    fn routes_through(&self, from: NodeId, via: NodeId) -> bool {
        let mut cur = from;
        for _ in 0..self.nodes.len() {
            match self.n(cur).parent {
                Some(p) if p == via => return true,
                Some(p) => cur = p,
                None => return false,
            }
        }
        true
    }

    fn attach(&mut self, at: NodeId) {
        self.nm(at).attach_pending = false;
        if self.n(at).parent.is_some() {
            return;
        }
        let cands = self.candidates(at);
        let chosen = if self.guarded {
            let list: Vec<ParentCandidate> = cands.iter().map(|c| c.0).collect();
            match select_parents(&list, &self.cfg.rank_params) {
                Ok(sel) => cands.iter().find(|c| c.0.neighbor == sel.chosen).copied(),
                Err(_) => None,
            }
        } else {
            cands.iter().min_by_key(|c| (c.1, c.0.neighbor)).copied()
        };
        let Some((c, rank)) = chosen else {
            self.trace.record(
                self.now,
                "attach_fail",
                at,
                format_args!("candidates={}", cands.len()),
            );
            return;
        };
        let version = self.n(at).dios.get(&c.neighbor).map_or(0, |i| i.version);
        let node = self.nm(at);
        node.parent = Some(c.neighbor);
        node.rank = rank;
        node.obs_rank = Some(rank);
        node.obs_parent_rank = Some(c.advertised_rank);
        node.version = node.version.max(version);
        node.grounded = true;
        self.trace.record(
            self.now,
            "attach",
            at,
            format_args!("parent={} rank={}", c.neighbor, rank),
        );
        self.emit_dio(at);
        while let Some(d) = self.nm(at).buffer.pop_front() {
            self.send_up(at, d);
            if self.n(at).parent.is_none() {
                break;
            }
        }
    }

    /// Drops the parent, poisons the subtree and looks for a new parent.
    fn detach(&mut self, at: NodeId, why: &str) {
        let Some(old) = self.n(at).parent else { return };
        let node = self.nm(at);
        node.parent = None;
        node.rank = Rank::INFINITE;
        node.grounded = false;
        self.trace
            .record(self.now, "detach", at, format_args!("parent={old} {why}"));
        if let Some(q) = self.quarantines.last_mut() {
            if why == "quarantine" || why == "poison" {
                q.detached.push(at);
            }
        }
        self.emit_dio(at);
        self.maybe_schedule_attach(at);
    }

    // Detection.

    /// Sends a suspicion report toward the root, at most once per
    /// `report_interval` per suspect.
    fn report(&mut self, at: NodeId, suspect: NodeId, rank: Rank) {
        let now = self.now;
        let gap = SimTime::from_secs_f64(self.cfg.report_interval);
        let node = self.n(at);
        if node
            .last_report
            .get(&suspect)
            .is_some_and(|&t| now < t + gap)
        {
            return;
        }
        let Some(parent) = self.report_hop(at, suspect) else {
            return;
        };
        let version = node.version;
        self.nm(at).last_report.insert(suspect, now);
        let w = Warning {
            kind: WarningKind::Suspicion,
            malicious: suspect,
            malicious_rank: rank,
            issue_time: now.as_micros(),
            origin: at,
            version,
        };
        self.transmit(at, Some(parent), &Packet::Warning(w));
    }

    /// Next hop for a report about `suspect`: the parent, unless it is the
    /// suspect or itself looks suspicious, else the lowest-ranked grounded
    /// neighbor closer to the root.
    fn report_hop(&self, at: NodeId, suspect: NodeId) -> Option<NodeId> {
        let node = self.n(at);
        if let Some(p) = node.parent {
            if p != suspect && !node.dios.get(&p).is_some_and(|i| i.suspicious) {
                return Some(p);
            }
        }
        if node.attacker.is_some() {
            return node.parent;
        }
        let limit = node.obs_rank.unwrap_or(Rank::INFINITE);
        // Nothing but the root can sit at or below the root's rank.
        let floor = Rank(self.cfg.rank_params.root_base);
        node.dios
            .iter()
            .filter(|(&j, i)| {
                j != suspect
                    && i.grounded
                    && i.rank < limit
                    && (i.rank > floor || j.is_border_router())
                    && !node.quarantine.contains(j)
            })
            .min_by_key(|(&j, i)| (i.rank, j))
            .map(|(&j, _)| j)
            .or(node.parent)
    }

    fn on_warning(&mut self, at: NodeId, _from: NodeId, w: Warning) {
        match w.kind {
            WarningKind::Suspicion => {
                if at.is_border_router() {
                    self.on_suspicion(w.malicious, w.origin);
                } else if self
                    .nm(at)
                    .relayed
                    .insert((w.origin, w.malicious, w.issue_time))
                {
                    if let Some(p) = self.report_hop(at, w.malicious) {
                        self.transmit(at, Some(p), &Packet::Warning(w));
                    }
                }
            }
            WarningKind::Quarantine => self.on_quarantine_notice(at, w),
        }
    }

    fn on_suspicion(&mut self, suspect: NodeId, reporter: NodeId) {
        let now = self.now;
        if !self.guarded || now > self.end || suspect.is_border_router() {
            return;
        }
        let held = self.root.holdoff.get(&suspect).is_some_and(|&t| now < t);
        if self.root.quarantined.contains(&suspect)
            || self.root.in_progress.contains(&suspect)
            || held
        {
            return;
        }
        self.root.suspects.insert(suspect);
        self.start_session(ProbePurpose::Suspect, suspect, Some(reporter));
    }

    fn start_session(
        &mut self,
        purpose: ProbePurpose,
        target: NodeId,
        reporter: Option<NodeId>,
    ) -> bool {
        let root = &self.root;
        let mut avoid: BTreeSet<NodeId> = root.quarantined.clone();
        avoid.extend(root.suspects.iter().copied().filter(|&s| s != target));
        let mut strict = avoid.clone();
        strict.extend(root.failed_hops.get(&target).into_iter().flatten().copied());
        let path = root
            .path_to(target, &strict)
            .or_else(|| root.path_to(target, &avoid))
            .or_else(|| root.path_to(target, &root.quarantined));
        let Some(path) = path else {
            self.trace
                .record(self.now, "probe_unroutable", target, format_args!(""));
            return false;
        };
        let usable = |n: NodeId| !path.contains(&n) && !root.quarantined.contains(&n);
        let pred = path.len() - 2;
        // With no neighbor beyond the suspect, the probe bounces back to its
        // predecessor.
        let dest = reporter
            .filter(|&r| usable(r) && root.knows_link(r, target))
            .or_else(|| {
                root.adjacent(target)
                    .find(|&n| usable(n) && !root.suspects.contains(&n))
            })
            .or_else(|| root.adjacent(target).find(|&n| usable(n)))
            .or_else(|| (pred > 0).then(|| path[pred]));
        let Some(dest) = dest else {
            self.trace
                .record(self.now, "probe_no_dest", target, format_args!(""));
            return false;
        };
        let mut route = path;
        route.push(dest);
        let dest_idx = route.len() - 1;
        let id = self.root.next_session;
        self.root.next_session += 1;
        self.root.in_progress.insert(target);
        if purpose == ProbePurpose::Suspect {
            self.root.probed.insert(target);
        }
        self.trace.record(
            self.now,
            "probe_start",
            NodeId::BORDER_ROUTER,
            format_args!("session={id} target={target} hops={}", route.len() - 1),
        );
        let hops = route.len() as u64 - 1;
        self.root.sessions.insert(
            id,
            Session {
                purpose,
                target,
                route,
                pred,
                dest: dest_idx,
                pred_acks: BTreeSet::new(),
                dest_acks: BTreeSet::new(),
            },
        );
        let gap = SimTime::from_secs_f64(self.cfg.probe_gap);
        for i in 0..self.cfg.n_probes {
            self.schedule(
                self.now + SimTime(gap.0 * u64::from(i)),
                Ev::ProbeSend {
                    session: id,
                    index: i,
                },
            );
        }
        let rtt = SimTime(2 * hops * self.cfg.max_hop_delay().0);
        let last = SimTime(gap.0 * u64::from(self.cfg.n_probes - 1));
        self.schedule(
            self.now + last + SimTime(4 * rtt.0),
            Ev::ProbeTimeout { session: id },
        );
        true
    }

    fn threshold_probes(&mut self) {
        let mut targets: Vec<NodeId> = self
            .root
            .links
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .filter(|n| !n.is_border_router())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        targets.shuffle(&mut self.rng_ctrl);
        let mut started = 0;
        for t in targets {
            if started >= self.cfg.threshold_routes {
                break;
            }
            if self.start_session(ProbePurpose::Threshold, t, None) {
                started += 1;
            }
        }
    }

    fn probe_send(&mut self, session: u32, index: u32) {
        let Some(s) = self.root.sessions.get_mut(&session) else {
            return;
        };
        if s.pred == 0 {
            s.pred_acks.insert(index);
        }
        let opt = ProbeOption {
            sequence: (session << 8) | index,
            route: s.route.clone(),
        };
        let dest = s.route[s.dest];
        let first = s.route[1];
        let Ok(options) = opt.to_bytes() else { return };
        let pkt = Packet::RplMc(RplMc {
            base: dest.ipv6(),
            options,
        });
        self.transmit(NodeId::BORDER_ROUTER, Some(first), &pkt);
    }

    fn probe_ack(&mut self, at: NodeId, route: &[NodeId], i: usize, sequence: u32) {
        let ack = Ack {
            kind: AckKind::Probe,
            node: at,
            sequence,
            return_route: route[..i].iter().rev().copied().collect(),
            table: Vec::new(),
        };
        self.transmit(at, Some(route[i - 1]), &Packet::Ack(ack));
    }

    fn on_probe(&mut self, at: NodeId, from: NodeId, m: RplMc) {
        let Ok(opt) = ProbeOption::from_bytes(&m.options) else {
            self.discard("rpl_mc", at, "bad option");
            return;
        };
        let route = &opt.route;
        let Some(i) = (1..route.len()).find(|&i| route[i] == at && route[i - 1] == from) else {
            return;
        };
        if i + 1 == route.len() {
            self.probe_ack(at, route, i, opt.sequence);
            return;
        }
        if let Some(p) = self.n(at).attacker {
            let ev = AttackerEvent::Transit {
                packet_type: TYPE_RPL_MC,
            };
            if step_attacker(&p, self.now, ev, &mut self.rng_attack) == AttackerAction::Drop {
                self.trace.record(
                    self.now,
                    "sinkhole_drop",
                    at,
                    format_args!("rpl_mc seq={}", opt.sequence),
                );
                self.counters.entry("rpl_mc").or_default().discarded += 1;
                return;
            }
        }
        let next = route[i + 1];
        if self.guarded && self.n(at).quarantine.contains(next) {
            self.discard("rpl_mc", at, "quarantined next hop");
            return;
        }
        self.probe_ack(at, route, i, opt.sequence);
        self.transmit(at, Some(next), &Packet::RplMc(m));
    }

    /// `hop` is the route index of the acknowledging node.
    fn on_probe_ack(&mut self, hop: usize, sequence: u32) {
        let Some(s) = self.root.sessions.get_mut(&(sequence >> 8)) else {
            return;
        };
        let i = sequence & 0xff;
        if hop == s.pred {
            s.pred_acks.insert(i);
        }
        if hop == s.dest {
            s.dest_acks.insert(i);
        }
    }

    fn probe_timeout(&mut self, session: u32) {
        let Some(s) = self.root.sessions.remove(&session) else {
            return;
        };
        let now = self.now;
        self.root.in_progress.remove(&s.target);
        let record =
            PdrProbeRecord::new(s.route, s.pred_acks.len() as u32, s.dest_acks.len() as u32);
        let abnormal = is_abnormal(record.pdr, &self.root.threshold);
        let root = NodeId::BORDER_ROUTER;
        let verdict = match s.purpose {
            ProbePurpose::Threshold => {
                if record.mc_sent > 0 {
                    let st = core::mem::take(&mut self.root.threshold);
                    self.root.threshold = update_threshold(st, record.pdr);
                }
                self.trace.record(
                    now,
                    "threshold",
                    root,
                    format_args!(
                        "target={} pdr={:.4} pdr_t={:.4}",
                        s.target, record.pdr, self.root.threshold.pdr_t
                    ),
                );
                None
            }
            ProbePurpose::Suspect => {
                // A helper quarantined mid-session invalidates the sample.
                let tainted = record
                    .route
                    .iter()
                    .any(|n| *n != s.target && self.root.quarantined.contains(n));
                let v = match confirm_sinkhole(&record, &self.root.threshold) {
                    _ if tainted => DetectionVerdict::Indeterminate,
                    Ok(Confirmation::Confirmed) => DetectionVerdict::Confirmed,
                    Ok(Confirmation::Cleared) => DetectionVerdict::Cleared,
                    Err(_) => DetectionVerdict::Indeterminate,
                };
                self.trace.record(
                    now,
                    "verdict",
                    root,
                    format_args!(
                        "target={} sent={} acks={} pdr={:.4} {}",
                        s.target,
                        record.mc_sent,
                        record.acks_received,
                        record.pdr,
                        v.as_str()
                    ),
                );
                self.detections.push(DetectionRecord {
                    time: now,
                    observer: root,
                    suspect: s.target,
                    stage: DetectionStage::Pdr,
                    verdict: v,
                    pdr: (record.mc_sent > 0).then_some(record.pdr),
                });
                match v {
                    DetectionVerdict::Confirmed => self.quarantine(s.target),
                    DetectionVerdict::Cleared => {
                        let hold = SimTime::from_secs_f64(self.cfg.clear_holdoff);
                        self.root.holdoff.insert(s.target, now + hold);
                        self.root.suspects.remove(&s.target);
                        self.root.retries.remove(&s.target);
                    }
                    _ => {
                        // Nothing reached the suspect: try again around the
                        // hops that swallowed the probes.
                        let interior = &record.route[1..s.pred + 1];
                        self.root
                            .failed_hops
                            .entry(s.target)
                            .or_default()
                            .extend(interior.iter().copied());
                        let attempt = self.root.retries.get(&s.target).copied().unwrap_or(0) + 1;
                        self.root.retries.insert(s.target, attempt);
                        if attempt <= MAX_RETRIES {
                            self.schedule(
                                now + RETRY_GAP,
                                Ev::Reprobe {
                                    target: s.target,
                                    attempt,
                                },
                            );
                        }
                    }
                }
                Some(v)
            }
        };
        self.probes.push(ProbeLog {
            time: now,
            target: s.target,
            purpose: s.purpose,
            record,
            verdict,
            abnormal,
        });
    }

    fn reprobe(&mut self, target: NodeId, attempt: u32) {
        if self.root.retries.get(&target) != Some(&attempt) || self.now > self.end {
            return;
        }
        let r = &self.root;
        if r.quarantined.contains(&target) || r.in_progress.contains(&target) {
            return;
        }
        self.start_session(ProbePurpose::Suspect, target, None);
    }

    // Quarantine.

    fn quarantine(&mut self, target: NodeId) {
        let now = self.now;
        let root = NodeId::BORDER_ROUTER;
        self.root.quarantined.insert(target);
        self.root.suspects.remove(&target);
        self.root.epoch = self.root.epoch.wrapping_add(1);
        let rank = self.n(root).dios.get(&target).map_or(Rank(0), |i| i.rank);
        self.quarantines.push(QuarantineRecord {
            time: now,
            malicious: target,
            detached: Vec::new(),
            reattached: 0,
            unattached: 0,
        });
        self.trace.record(
            now,
            "quarantine",
            root,
            format_args!("node={target} epoch={}", self.root.epoch),
        );
        let w = Warning {
            kind: WarningKind::Quarantine,
            malicious: target,
            malicious_rank: rank,
            issue_time: now.as_micros(),
            origin: root,
            version: self.root.epoch,
        };
        let msg = WarningMessage {
            malicious: target,
            malicious_rank: rank,
            issue_time: now,
        };
        let epoch = self.root.epoch;
        let r = self.nm(root);
        r.quarantine.apply(&msg);
        r.version = epoch;
        self.transmit(root, None, &Packet::Warning(w));
        self.emit_dio(root);
    }

    fn on_quarantine_notice(&mut self, at: NodeId, w: Warning) {
        let msg = WarningMessage {
            malicious: w.malicious,
            malicious_rank: w.malicious_rank,
            issue_time: SimTime(w.issue_time),
        };
        if !self.nm(at).quarantine.apply(&msg) {
            return;
        }
        self.transmit(at, None, &Packet::Warning(w.clone()));
        if at.is_border_router() || at == w.malicious {
            return;
        }
        let node = self.nm(at);
        node.dios.remove(&w.malicious);
        if w.version > node.version {
            node.version = w.version;
            node.grounded = false;
        }
        if self.n(at).parent == Some(w.malicious) {
            self.detach(at, "quarantine");
        }
    }

    // Data.

    fn data_gen(&mut self, id: NodeId) {
        if self.now > self.end {
            return;
        }
        if let Some(p) = self.data_period() {
            self.schedule(self.now + p, Ev::DataGen { node: id });
        }
        let seq = self.n(id).data_seq;
        self.nm(id).data_seq += 1;
        let reading = BigUint::from(self.rng_data.gen::<u32>()) % &self.pk.n;
        let Ok(c) = he::encrypt(&self.pk, &reading, &mut self.rng_data) else {
            return;
        };
        let tag = DataTag {
            source: id,
            sequence: seq,
        };
        self.truth.insert(tag, reading);
        self.delivery.record_sent(id);
        self.trace
            .record(self.now, "data_gen", id, format_args!("seq={seq}"));
        let d = Data {
            hops: 0,
            contributors: vec![tag],
            key_id: c.key_id,
            ciphertext: c.to_bytes(),
        };
        self.route_data(id, d);
    }

    fn route_data(&mut self, at: NodeId, d: Data) {
        let window = self.cfg.aggregation_window;
        if window > 0.0 && !self.is_attacker(at) {
            let pending = self.nm(at).agg.take();
            let merged = match pending {
                None => {
                    let flush = self.now + SimTime::from_secs_f64(window);
                    self.schedule(flush, Ev::AggFlush { node: at });
                    d
                }
                Some(p) => self.merge(p, d),
            };
            self.nm(at).agg = Some(merged);
            return;
        }
        self.send_up(at, d);
    }

    fn merge(&self, a: Data, b: Data) -> Data {
        let ca = Ciphertext::from_bytes(&a.ciphertext, a.key_id);
        let cb = Ciphertext::from_bytes(&b.ciphertext, b.key_id);
        let sum = he::eval_add(&self.pk, &ca, &cb).expect("same key");
        let mut contributors = a.contributors;
        contributors.extend(b.contributors);
        Data {
            hops: a.hops.max(b.hops),
            contributors,
            key_id: sum.key_id,
            ciphertext: sum.to_bytes(),
        }
    }

    fn send_up(&mut self, at: NodeId, d: Data) {
        match self.n(at).parent {
            Some(p) => self.transmit(at, Some(p), &Packet::Data(d)),
            None => {
                let buf = &mut self.nm(at).buffer;
                if buf.len() < BUFFER_CAP {
                    buf.push_back(d);
                } else {
                    self.trace
                        .record(self.now, "buffer_drop", at, format_args!(""));
                }
            }
        }
    }

    fn on_data(&mut self, at: NodeId, from: NodeId, mut d: Data) {
        if at.is_border_router() {
            self.deliver(from, d);
            return;
        }
        if let Some(p) = self.n(at).attacker {
            let ev = AttackerEvent::Transit {
                packet_type: TYPE_DATA,
            };
            if step_attacker(&p, self.now, ev, &mut self.rng_attack) == AttackerAction::Drop {
                self.trace.record(
                    self.now,
                    "sinkhole_drop",
                    at,
                    format_args!("data c={}", d.contributors.len()),
                );
                self.counters.entry("data").or_default().discarded += 1;
                return;
            }
        }
        if d.hops >= self.cfg.data_ttl {
            self.discard("data", at, "ttl");
            return;
        }
        d.hops += 1;
        self.route_data(at, d);
    }

    fn deliver(&mut self, from: NodeId, d: Data) {
        let c = Ciphertext::from_bytes(&d.ciphertext, d.key_id);
        let expected = d
            .contributors
            .iter()
            .filter_map(|t| self.truth.get(t))
            .fold(BigUint::from(0u8), |acc, v| (acc + v) % &self.pk.n);
        self.he_checked += 1;
        match he::decrypt(&self.sk, &c) {
            Ok(v) if v == expected => {}
            _ => self.he_mismatches += 1,
        }
        for t in &d.contributors {
            if self.delivered_tags.insert(*t) {
                self.delivery.record_delivered(t.source);
            }
        }
        self.trace.record(
            self.now,
            "data_rx",
            NodeId::BORDER_ROUTER,
            format_args!("from={from} c={}", d.contributors.len()),
        );
    }

    fn attack_toggle(&mut self, id: NodeId) {
        let Some(p) = self.n(id).attacker else { return };
        if self.now > self.end {
            return;
        }
        let active = p.is_active(self.now);
        self.trace.record(
            self.now,
            if active { "attack_on" } else { "attack_off" },
            id,
            format_args!(""),
        );
        if active {
            self.emit_dio(id);
        }
        if let Some((t, _)) = p.next_toggle(self.now + SimTime(1)) {
            self.schedule(t, Ev::AttackToggle { node: id });
        }
    }

    fn finish(mut self) -> RunOutput {
        let root_rank = Rank(self.cfg.rank_params.root_base);
        let mut graph = DodagGraph::with_root(root_rank);
        let quarantined = self.root.quarantined.clone();
        graph.quarantined = quarantined.clone();
        for n in &self.nodes {
            graph.nodes.insert(n.id);
            if n.is_root() || quarantined.contains(&n.id) {
                continue;
            }
            match n.parent {
                Some(p) if !quarantined.contains(&p) => graph.set_parent(n.id, p, n.rank),
                _ => graph.detach(n.id),
            }
        }
        for q in &mut self.quarantines {
            q.detached.sort();
            q.detached.dedup();
            q.reattached = q.detached.iter().filter(|&&d| graph.is_attached(d)).count();
            q.unattached = q.detached.len() - q.reattached;
        }
        let honest = self.cfg.num_nodes.saturating_sub(1) - self.attackers.len() as u32;
        let tp = self
            .attackers
            .iter()
            .filter(|a| quarantined.contains(a))
            .count() as u32;
        let fp = quarantined
            .iter()
            .filter(|q| self.attackers.binary_search(q).is_err())
            .count() as u32;
        let confusion = ConfusionCounts {
            tp,
            fn_: self.attackers.len() as u32 - tp,
            fp,
            tn: honest - fp,
        };
        let unprobed_attackers = self
            .attackers
            .iter()
            .copied()
            .filter(|a| !self.root.probed.contains(a))
            .collect();
        RunOutput {
            topology: self.topo,
            unprobed_attackers,
            attackers: self.attackers,
            quarantined,
            confusion,
            delivery: self.delivery,
            trace: self.trace,
            detections: self.detections,
            quarantines: self.quarantines,
            probes: self.probes,
            threshold: self.root.threshold,
            learned_links: self.root.links,
            graph,
            conservation: self.counters,
            tables: self
                .nodes
                .iter()
                .map(|n| n.trust.entries().cloned().collect())
                .collect(),
            energy: self.nodes.iter().map(|n| n.energy).collect(),
            he_checked: self.he_checked,
            he_mismatches: self.he_mismatches,
            end_time: self.now,
        }
    }
}

impl RunOutput {
    /// Monitoring table of one node as `neighbor trust energy veracity` lines.
    pub fn table_dump(&self, n: NodeId) -> String {
        use core::fmt::Write;
        let mut out = String::new();
        for e in self.tables.get(n.0 as usize).into_iter().flatten() {
            let _ = writeln!(
                out,
                "{} {} {} {:.4}",
                e.neighbor,
                e.trust_count,
                e.observed_energy.residual(),
                e.veracity
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(seed: u64, rate: f64) -> RunOutput {
        run_scenario(&ScenarioConfig {
            seed,
            sinkhole_rate: rate,
            ..ScenarioConfig::desk()
        })
        .unwrap()
    }

    #[test]
    fn frames_are_accounted_for() {
        let out = run(3, 0.2);
        assert!(out.conservation.len() >= 5);
        for (kind, c) in &out.conservation {
            assert!(c.balanced(), "{kind}: {c:?}");
            assert!(c.discarded <= c.delivered);
        }
    }

    #[test]
    fn trust_counts_are_bounded_by_rounds() {
        let cfg = ScenarioConfig::desk();
        let out = run(1, 0.0);
        for (i, table) in out.tables.iter().enumerate() {
            for e in table {
                assert!(e.trust_count <= cfg.reqp_rounds, "{i} -> {}", e.neighbor);
                assert!(out.topology.linked(NodeId(i as u32), e.neighbor));
            }
        }
    }

    #[test]
    fn energy_only_drains() {
        let cfg = ScenarioConfig::desk();
        let out = run(2, 0.1);
        assert!(out
            .energy
            .iter()
            .all(|e| e.residual() <= cfg.initial_energy));
        assert!(out.energy.iter().any(|e| e.residual() < cfg.initial_energy));
    }

    #[test]
    fn root_learns_only_real_links() {
        let out = run(6, 0.1);
        assert!(!out.learned_links.is_empty());
        for &(a, b) in &out.learned_links {
            assert!(out.topology.linked(a, b));
        }
    }

    #[test]
    fn suspect_probes_cross_the_suspect() {
        let out = run(7, 0.3);
        for p in out
            .probes
            .iter()
            .filter(|p| p.purpose == ProbePurpose::Suspect)
        {
            assert_eq!(p.record.route[0], NodeId::BORDER_ROUTER);
            assert!(p.record.route.contains(&p.target));
            for w in p.record.route.windows(2) {
                assert!(out.topology.linked(w[0], w[1]));
            }
        }
    }
}
