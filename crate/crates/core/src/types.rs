//! Identifiers, ranks, energy levels and the simulation clock.

use core::fmt;
use core::ops::{Add, Sub};

/// Node identifier. `0` is the border router.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub u32);

/// Unique-local prefix used to derive node addresses (`fd00::<id>`).
const ULA_PREFIX: u8 = 0xfd;

impl NodeId {
    pub const BORDER_ROUTER: NodeId = NodeId(0);

    pub fn is_border_router(self) -> bool {
        self == Self::BORDER_ROUTER
    }

    /// The node's IPv6 address: `fd00::` with the id in the low 32 bits.
    pub fn ipv6(self) -> [u8; 16] {
        let mut addr = [0u8; 16];
        addr[0] = ULA_PREFIX;
        addr[12..].copy_from_slice(&self.0.to_be_bytes());
        addr
    }

    /// Inverse of [`NodeId::ipv6`]; `None` for addresses outside the prefix.
    pub fn from_ipv6(addr: &[u8; 16]) -> Option<NodeId> {
        if addr[0] != ULA_PREFIX || addr[1..12].iter().any(|&b| b != 0) {
            return None;
        }
        Some(NodeId(u32::from_be_bytes([
            addr[12], addr[13], addr[14], addr[15],
        ])))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Position in the DODAG; smaller is closer to the border router.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rank(pub u16);

impl Rank {
    /// Advertised by detached nodes (poisoning).
    pub const INFINITE: Rank = Rank(u16::MAX);

    pub fn is_infinite(self) -> bool {
        self == Self::INFINITE
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Battery state in milli-units. The residual only ever goes down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnergyLevel {
    residual: u32,
    initial: u32,
}

impl EnergyLevel {
    /// A full battery. `None` when `initial` is zero.
    pub fn full(initial: u32) -> Option<Self> {
        (initial > 0).then_some(EnergyLevel {
            residual: initial,
            initial,
        })
    }

    /// A partially drained battery; the residual is clamped to `initial`.
    pub fn with_residual(residual: u32, initial: u32) -> Option<Self> {
        (initial > 0).then_some(EnergyLevel {
            residual: residual.min(initial),
            initial,
        })
    }

    pub fn residual(&self) -> u32 {
        self.residual
    }

    pub fn initial(&self) -> u32 {
        self.initial
    }

    /// Saturating debit.
    pub fn debit(&mut self, amount: u32) {
        self.residual = self.residual.saturating_sub(amount);
    }

    /// Residual over initial, in `[0, 1]`.
    pub fn ratio(&self) -> f64 {
        f64::from(self.residual) / f64::from(self.initial)
    }
}

/// Simulation time in integer microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub fn from_micros(us: u64) -> Self {
        SimTime(us)
    }

    pub fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000)
    }

    pub fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000)
    }

    /// Rounds to the nearest microsecond; negative and NaN inputs map to zero.
    pub fn from_secs_f64(s: f64) -> Self {
        if s.is_nan() || s <= 0.0 {
            return SimTime::ZERO;
        }
        SimTime(libm::round(s * 1e6) as u64)
    }

    pub fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

/// `seconds.micros`, integer formatting only so traces never depend on float printing.
impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / 1_000_000, self.0 % 1_000_000)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ipv6_roundtrip() {
        for id in [0u32, 1, 499, u32::MAX] {
            let n = NodeId(id);
            assert_eq!(NodeId::from_ipv6(&n.ipv6()), Some(n));
        }
        assert_eq!(NodeId::from_ipv6(&[0u8; 16]), None);
    }

    #[test]
    fn energy_never_increases() {
        let mut e = EnergyLevel::full(100).unwrap();
        e.debit(30);
        assert_eq!(e.residual(), 70);
        e.debit(500);
        assert_eq!(e.residual(), 0);
        assert!(EnergyLevel::full(0).is_none());
        assert_eq!(
            EnergyLevel::with_residual(200, 100).unwrap().residual(),
            100
        );
    }

    #[test]
    fn time_display_is_integer_based() {
        extern crate alloc;
        use alloc::string::ToString;
        assert_eq!(SimTime::from_micros(12_000_345).to_string(), "12.000345");
        assert_eq!(SimTime::from_secs_f64(0.5), SimTime(500_000));
        assert_eq!(SimTime::from_secs_f64(-1.0), SimTime::ZERO);
    }
}
