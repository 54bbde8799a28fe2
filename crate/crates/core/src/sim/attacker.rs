//! Sinkhole behavior.

use rand::Rng;

use crate::types::{NodeId, Rank, SimTime};
use crate::wire::{FIXED_POINT_ONE, TYPE_DATA, TYPE_RPL_MC};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackerProfile {
    pub node: NodeId,
    pub advertise_rank: Rank,
    pub drop_probability: f64,
    pub activation_time: SimTime,
    /// Length of each active burst; `None` stays active once activated.
    pub burst: Option<SimTime>,
    /// Dormant gap between bursts.
    pub rest: SimTime,
}

impl AttackerProfile {
    pub fn persistent(node: NodeId, activation_time: SimTime, drop_probability: f64) -> Self {
        AttackerProfile {
            node,
            advertise_rank: Rank(0),
            drop_probability,
            activation_time,
            burst: None,
            rest: SimTime::ZERO,
        }
    }

    /// True once the first activation has happened.
    pub fn activated(&self, now: SimTime) -> bool {
        now >= self.activation_time
    }

    /// Inside an attack burst.
    pub fn is_active(&self, now: SimTime) -> bool {
        if !self.activated(now) {
            return false;
        }
        match self.burst {
            None => true,
            Some(b) => {
                let cycle = b.0 + self.rest.0;
                cycle == 0 || (now.0 - self.activation_time.0) % cycle < b.0
            }
        }
    }

    /// Next time at or after `now` the attacker switches state, and whether it
    /// switches on.
    pub fn next_toggle(&self, now: SimTime) -> Option<(SimTime, bool)> {
        if now <= self.activation_time {
            return Some((self.activation_time, true));
        }
        let b = self.burst?.0;
        let cycle = b + self.rest.0;
        if cycle == 0 {
            return None;
        }
        let since = now.0 - self.activation_time.0;
        let start = self.activation_time.0 + since / cycle * cycle;
        let off = start + b;
        Some(if now.0 < off {
            (SimTime(off), false)
        } else {
            (SimTime(start + cycle), true)
        })
    }
}

/// What an attacker is asked to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackerEvent {
    /// A DIO is due; the honest values are what a normal node would send.
    EmitDio {
        honest_rank: Rank,
        honest_reliability: u16,
    },
    /// A packet of the given type is passing through on its way elsewhere.
    Transit { packet_type: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackerAction {
    Advertise { rank: Rank, reliability: u16 },
    Silent,
    Forward,
    Drop,
}

/// Honest before activation. During a burst it advertises the fake rank with
/// maximal reliability and drops transit data and probes; between bursts it
/// stays silent but forwards.
pub fn step_attacker<R: Rng>(
    profile: &AttackerProfile,
    now: SimTime,
    event: AttackerEvent,
    rng: &mut R,
) -> AttackerAction {
    let activated = profile.activated(now);
    let active = profile.is_active(now);
    match event {
        AttackerEvent::EmitDio {
            honest_rank,
            honest_reliability,
        } => {
            if active {
                AttackerAction::Advertise {
                    rank: profile.advertise_rank,
                    reliability: FIXED_POINT_ONE,
                }
            } else if activated {
                AttackerAction::Silent
            } else {
                AttackerAction::Advertise {
                    rank: honest_rank,
                    reliability: honest_reliability,
                }
            }
        }
        AttackerEvent::Transit { packet_type } => {
            let droppable = packet_type == TYPE_DATA || packet_type == TYPE_RPL_MC;
            if active && droppable && rng.gen_bool(profile.drop_probability) {
                AttackerAction::Drop
            } else {
                AttackerAction::Forward
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn advertises_rank_zero_once_active() {
        let p = AttackerProfile::persistent(NodeId(3), SimTime::from_secs(60), 1.0);
        let ev = AttackerEvent::EmitDio {
            honest_rank: Rank(400),
            honest_reliability: 7000,
        };
        assert_eq!(
            step_attacker(&p, SimTime::from_secs(61), ev, &mut rng()),
            AttackerAction::Advertise {
                rank: Rank(0),
                reliability: 10_000
            }
        );
        assert_eq!(
            step_attacker(&p, SimTime::from_secs(59), ev, &mut rng()),
            AttackerAction::Advertise {
                rank: Rank(400),
                reliability: 7000
            }
        );
    }

    #[test]
    fn drops_transit_data_when_certain() {
        let p = AttackerProfile::persistent(NodeId(3), SimTime::ZERO, 1.0);
        let data = AttackerEvent::Transit {
            packet_type: TYPE_DATA,
        };
        assert_eq!(
            step_attacker(&p, SimTime(5), data, &mut rng()),
            AttackerAction::Drop
        );
        let dio = AttackerEvent::Transit {
            packet_type: crate::wire::TYPE_WARNING,
        };
        assert_eq!(
            step_attacker(&p, SimTime(5), dio, &mut rng()),
            AttackerAction::Forward
        );
        let dormant = AttackerProfile::persistent(NodeId(3), SimTime(10), 1.0);
        assert_eq!(
            step_attacker(&dormant, SimTime(5), data, &mut rng()),
            AttackerAction::Forward
        );
    }

    #[test]
    fn bursts_alternate() {
        let p = AttackerProfile {
            burst: Some(SimTime::from_secs(2)),
            rest: SimTime::from_secs(4),
            ..AttackerProfile::persistent(NodeId(1), SimTime::from_secs(10), 1.0)
        };
        assert!(!p.is_active(SimTime::from_secs(9)));
        assert!(p.is_active(SimTime::from_secs(10)));
        assert!(p.is_active(SimTime::from_millis(11_999)));
        assert!(!p.is_active(SimTime::from_secs(12)));
        assert!(p.is_active(SimTime::from_secs(16)));
        assert_eq!(
            p.next_toggle(SimTime::from_secs(3)),
            Some((SimTime::from_secs(10), true))
        );
        assert_eq!(
            p.next_toggle(SimTime::from_secs(11)),
            Some((SimTime::from_secs(12), false))
        );
        assert_eq!(
            p.next_toggle(SimTime::from_secs(12)),
            Some((SimTime::from_secs(16), true))
        );
        let silent = step_attacker(
            &p,
            SimTime::from_secs(13),
            AttackerEvent::EmitDio {
                honest_rank: Rank(300),
                honest_reliability: 1,
            },
            &mut rng(),
        );
        assert_eq!(silent, AttackerAction::Silent);
    }

    #[test]
    fn partial_drop_replays_seeded_draws() {
        let p = AttackerProfile::persistent(NodeId(1), SimTime::ZERO, 0.6);
        let ev = AttackerEvent::Transit {
            packet_type: TYPE_RPL_MC,
        };
        let mut a = rng();
        let got: alloc::vec::Vec<bool> = (0..10)
            .map(|_| step_attacker(&p, SimTime(1), ev, &mut a) == AttackerAction::Drop)
            .collect();
        let mut b = rng();
        let expect: alloc::vec::Vec<bool> = (0..10).map(|_| b.gen_bool(0.6)).collect();
        assert_eq!(got, expect);
    }
}
