//! Scenario parameters.

use alloc::vec::Vec;

use crate::dodag::RankParams;
use crate::trust::{ReliabilityWeights, TrustConfig};
use crate::types::{NodeId, SimTime};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid value for `{field}`: {reason}")]
    Invalid {
        field: &'static str,
        reason: &'static str,
    },
    #[error(transparent)]
    Weights(#[from] crate::trust::TrustError),
    #[error(transparent)]
    Rank(#[from] crate::dodag::DodagError),
}

fn invalid(field: &'static str, reason: &'static str) -> ConfigError {
    ConfigError::Invalid { field, reason }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DefenseMode {
    /// Trust-weighted DODAG, detection, quarantine.
    Guarded,
    /// Plain lowest-rank RPL with no detection.
    Off,
}

impl DefenseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DefenseMode::Guarded => "guarded",
            DefenseMode::Off => "off",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "guarded" | "on" => Some(DefenseMode::Guarded),
            "off" => Some(DefenseMode::Off),
            _ => None,
        }
    }
}

/// Where the nodes and links come from.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologySpec {
    /// Uniform placement in the area, unit-disk links.
    Random,
    /// Fixed undirected links between ids `0..num_nodes`.
    Explicit(Vec<(NodeId, NodeId)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Including the border router.
    pub num_nodes: u32,
    /// Width and height in meters.
    pub area: (f64, f64),
    pub radio_range: f64,
    /// Seconds. No traffic is generated after this.
    pub duration: f64,
    pub sinkhole_rate: f64,
    /// Length of each attack burst in seconds; `0` keeps attackers active.
    pub attack_interval: f64,
    /// Dormant gap between bursts, seconds.
    pub attack_rest: f64,
    pub seed: u64,
    pub weights: ReliabilityWeights,
    pub trust_cap: u32,
    pub rank_params: RankParams,
    pub n_probes: u32,
    /// Seconds between consecutive probes of one round.
    pub probe_gap: f64,
    /// Probability that an active attacker drops a transit data or probe packet.
    pub drop_probability: f64,
    /// Data packets per second per honest node.
    pub data_rate: f64,
    pub he_prime_bits: u32,
    pub defense: DefenseMode,
    /// Independent per-frame loss on every link.
    pub ambient_loss: f64,
    /// Per-hop transmission time, seconds.
    pub tx_time: f64,
    /// Receivers wake up at most this long after a frame is sent, seconds.
    pub wakeup_interval: f64,
    pub dio_period: f64,
    pub reqp_rounds: u32,
    /// End of warm-up: attackers activate, detection and data start.
    pub warmup: f64,
    /// Time a detached node collects DIOs before choosing a parent.
    pub attach_wait: f64,
    /// Minimum gap between two reports of the same suspect by one observer.
    pub report_interval: f64,
    /// A suspect cleared by probing is not probed again for this long.
    pub clear_holdoff: f64,
    /// Clean routes probed during warm-up to seed the PDR threshold.
    pub threshold_routes: u32,
    /// Hold time for in-network aggregation of data; `0` disables it.
    pub aggregation_window: f64,
    pub initial_energy: u32,
    pub tx_cost: u32,
    pub rx_cost: u32,
    pub per_byte_cost: u32,
    /// Bytes charged for every data frame.
    pub transaction_size: u32,
    pub data_ttl: u8,
    pub keep_trace: bool,
    pub topology: TopologySpec,
    /// Fixed attacker set instead of a seeded draw.
    pub attackers: Option<Vec<NodeId>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            num_nodes: 500,
            area: (300.0, 300.0),
            radio_range: 50.0,
            duration: 1000.0,
            sinkhole_rate: 0.0,
            attack_interval: 0.0,
            attack_rest: 4.0,
            seed: 1,
            weights: ReliabilityWeights::default(),
            trust_cap: 20,
            rank_params: RankParams::default(),
            n_probes: 10,
            probe_gap: 0.1,
            drop_probability: 1.0,
            data_rate: 0.2,
            he_prime_bits: 128,
            defense: DefenseMode::Guarded,
            ambient_loss: 0.0,
            tx_time: 0.01,
            wakeup_interval: 0.25,
            dio_period: 5.0,
            reqp_rounds: 3,
            warmup: 60.0,
            attach_wait: 2.0,
            report_interval: 10.0,
            clear_holdoff: 30.0,
            threshold_routes: 5,
            aggregation_window: 0.0,
            initial_energy: 2_000_000,
            tx_cost: 10,
            rx_cost: 5,
            per_byte_cost: 1,
            transaction_size: 77,
            data_ttl: 64,
            keep_trace: false,
            topology: TopologySpec::Random,
            attackers: None,
        }
    }
}

impl ScenarioConfig {
    /// 50 nodes in 200 m x 200 m for 200 s with 64-bit key primes.
    pub fn desk() -> Self {
        ScenarioConfig {
            num_nodes: 50,
            area: (200.0, 200.0),
            duration: 200.0,
            he_prime_bits: 64,
            ..ScenarioConfig::default()
        }
    }

    pub fn trust_config(&self) -> TrustConfig {
        TrustConfig {
            weights: self.weights,
            trust_cap: self.trust_cap,
            initial_energy: self.initial_energy,
        }
    }

    pub fn reqp_start(&self, round: u32) -> SimTime {
        SimTime(self.weights.delta_t.0 * u64::from(round))
    }

    pub fn dodag_start(&self) -> SimTime {
        self.reqp_start(self.reqp_rounds)
    }

    pub fn threshold_start(&self) -> SimTime {
        let d = self.dodag_start();
        d + SimTime((self.warmup_end().0 - d.0) / 2)
    }

    pub fn warmup_end(&self) -> SimTime {
        SimTime::from_secs_f64(self.warmup)
    }

    pub fn end(&self) -> SimTime {
        SimTime::from_secs_f64(self.duration)
    }

    /// Upper bound on one hop's delay.
    pub fn max_hop_delay(&self) -> SimTime {
        SimTime::from_secs_f64(self.tx_time + self.wakeup_interval)
    }

    /// Number of attackers drawn for this scenario.
    pub fn attacker_count(&self) -> u32 {
        if let Some(a) = &self.attackers {
            return a.len() as u32;
        }
        let n = libm::round(self.sinkhole_rate * f64::from(self.num_nodes)) as u32;
        n.min(self.num_nodes.saturating_sub(1))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let pos = |x: f64| x.is_finite() && x > 0.0;
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if self.num_nodes == 0 {
            return Err(invalid(
                "num_nodes",
                "must be at least 1 (the border router)",
            ));
        }
        if !pos(self.area.0) || !pos(self.area.1) {
            return Err(invalid("area", "must be positive"));
        }
        if !pos(self.radio_range) {
            return Err(invalid("radio_range", "must be positive"));
        }
        if !pos(self.duration) {
            return Err(invalid("duration", "must be positive"));
        }
        if !unit(self.sinkhole_rate) {
            return Err(invalid("sinkhole_rate", "must lie in [0, 1]"));
        }
        if !nonneg(self.attack_interval) {
            return Err(invalid("attack_interval", "must be non-negative"));
        }
        if self.attack_interval > 0.0 && !pos(self.attack_rest) {
            return Err(invalid(
                "attack_rest",
                "must be positive for bursty attacks",
            ));
        }
        self.weights.validate()?;
        if self.weights.delta_t == SimTime::ZERO {
            return Err(invalid("delta_t", "must be positive"));
        }
        self.rank_params.validate()?;
        if self.n_probes == 0 || self.n_probes > 255 {
            return Err(invalid("n_probes", "must lie in 1..=255"));
        }
        if !pos(self.probe_gap) {
            return Err(invalid("probe_gap", "must be positive"));
        }
        if !unit(self.drop_probability) {
            return Err(invalid("drop_probability", "must lie in [0, 1]"));
        }
        if !unit(self.ambient_loss) || self.ambient_loss >= 1.0 {
            return Err(invalid("ambient_loss", "must lie in [0, 1)"));
        }
        if !nonneg(self.data_rate) {
            return Err(invalid("data_rate", "must be non-negative"));
        }
        if self.he_prime_bits < 16 {
            return Err(invalid("he_prime_bits", "must be at least 16"));
        }
        if !pos(self.tx_time) || !nonneg(self.wakeup_interval) {
            return Err(invalid("tx_time", "link timing must be positive"));
        }
        if !pos(self.dio_period) {
            return Err(invalid("dio_period", "must be positive"));
        }
        if self.reqp_rounds == 0 {
            return Err(invalid("reqp_rounds", "at least one round is needed"));
        }
        if !pos(self.warmup) || self.warmup >= self.duration {
            return Err(invalid(
                "warmup",
                "must be positive and shorter than duration",
            ));
        }
        if self.dodag_start().0 + 2 * SimTime::from_secs_f64(self.attach_wait).0
            >= self.warmup_end().0
        {
            return Err(invalid(
                "warmup",
                "too short for the reliability rounds and DODAG build",
            ));
        }
        for (v, f) in [
            (self.attach_wait, "attach_wait"),
            (self.report_interval, "report_interval"),
            (self.clear_holdoff, "clear_holdoff"),
            (self.aggregation_window, "aggregation_window"),
        ] {
            if !nonneg(v) {
                return Err(invalid(f, "must be non-negative"));
            }
        }
        if self.initial_energy == 0 {
            return Err(invalid("initial_energy", "must be positive"));
        }
        if self.data_ttl == 0 {
            return Err(invalid("data_ttl", "must be positive"));
        }
        match &self.topology {
            TopologySpec::Random => {}
            TopologySpec::Explicit(links) => {
                if links
                    .iter()
                    .any(|(a, b)| a.0 >= self.num_nodes || b.0 >= self.num_nodes || a == b)
                {
                    return Err(invalid(
                        "topology",
                        "link endpoint out of range or self-loop",
                    ));
                }
            }
        }
        if let Some(a) = &self.attackers {
            if a.iter()
                .any(|n| n.is_border_router() || n.0 >= self.num_nodes)
            {
                return Err(invalid("attackers", "must be existing non-root nodes"));
            }
        }
        Ok(())
    }
}
