//! Plain-text `key = value` scenario files.
//!
//! Blank lines and `#` comments are ignored. A line `[name]` opens a section;
//! keys before the first section belong to the unnamed top-level section.

use std::path::Path;
use std::str::FromStr;

use rplguard_core::sim::{DefenseMode, ScenarioConfig, TopologySpec};
use rplguard_core::{NodeId, SimTime};

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {msg}")]
    BadValue {
        line: usize,
        key: String,
        msg: String,
    },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("{0}")]
    Invalid(#[from] rplguard_core::sim::ConfigError),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Section {
    /// `None` for the top-level section.
    pub name: Option<String>,
    pub line: usize,
    pub entries: Vec<Entry>,
}

/// Splits a file into sections of raw entries.
pub fn parse_sections(text: &str) -> Result<Vec<Section>, ParseError> {
    let mut sections = vec![Section::default()];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| ParseError::Syntax {
                    line,
                    msg: format!("bad section header `{s}`"),
                })?;
            if sections.iter().any(|x| x.name.as_deref() == Some(name)) {
                return Err(ParseError::Syntax {
                    line,
                    msg: format!("section `{name}` repeated"),
                });
            }
            sections.push(Section {
                name: Some(name.to_string()),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (k, v) = s.split_once('=').ok_or_else(|| ParseError::Syntax {
            line,
            msg: format!("expected `key = value`, got `{s}`"),
        })?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(ParseError::Syntax {
                line,
                msg: "empty key".into(),
            });
        }
        let sec = sections.last_mut().expect("top-level section");
        if sec.entries.iter().any(|e| e.key == key) {
            return Err(ParseError::Duplicate { line, key });
        }
        sec.entries.push(Entry {
            line,
            key,
            value: v.trim().to_string(),
        });
    }
    Ok(sections)
}

fn bad(e: &Entry, msg: impl Into<String>) -> ParseError {
    ParseError::BadValue {
        line: e.line,
        key: e.key.clone(),
        msg: msg.into(),
    }
}

fn num<T: FromStr>(e: &Entry) -> Result<T, ParseError>
where
    T::Err: std::fmt::Display,
{
    e.value
        .parse()
        .map_err(|err: T::Err| bad(e, err.to_string()))
}

fn pair(e: &Entry) -> Result<(f64, f64), ParseError> {
    let (a, b) = e
        .value
        .split_once(['x', '*', ','])
        .ok_or_else(|| bad(e, "expected `width x height`"))?;
    let p = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|err| bad(e, err.to_string()))
    };
    Ok((p(a)?, p(b)?))
}

fn node_list(e: &Entry) -> Result<Vec<NodeId>, ParseError> {
    e.value
        .split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map(NodeId)
                .map_err(|err: std::num::ParseIntError| bad(e, err.to_string()))
        })
        .collect()
}

fn links(e: &Entry) -> Result<Vec<(NodeId, NodeId)>, ParseError> {
    e.value
        .split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (a, b) = s
                .split_once('-')
                .ok_or_else(|| bad(e, format!("link `{s}` is not `a-b`")))?;
            let id = |x: &str| {
                x.parse()
                    .map(NodeId)
                    .map_err(|err: std::num::ParseIntError| bad(e, err.to_string()))
            };
            Ok((id(a)?, id(b)?))
        })
        .collect()
}

pub fn parse_defense(s: &str) -> Option<DefenseMode> {
    DefenseMode::parse(s.trim())
}

/// Sets one field of `cfg`. Returns `Ok(false)` if the key is not a scenario key.
pub fn apply_entry(cfg: &mut ScenarioConfig, e: &Entry) -> Result<bool, ParseError> {
    let w = &mut cfg.weights;
    let r = &mut cfg.rank_params;
    match e.key.as_str() {
        "num_nodes" => cfg.num_nodes = num(e)?,
        "area" => cfg.area = pair(e)?,
        "radio_range" => cfg.radio_range = num(e)?,
        "duration" => cfg.duration = num(e)?,
        "sinkhole_rate" => cfg.sinkhole_rate = num(e)?,
        "attack_interval" => cfg.attack_interval = num(e)?,
        "attack_rest" => cfg.attack_rest = num(e)?,
        "seed" => cfg.seed = num(e)?,
        "w1" => w.w1 = num(e)?,
        "w2" => w.w2 = num(e)?,
        "w3" => w.w3 = num(e)?,
        "alpha" => w.alpha = num(e)?,
        "delta_t" => w.delta_t = SimTime::from_secs_f64(num(e)?),
        "trust_cap" => cfg.trust_cap = num(e)?,
        "min_h" => r.min_h = num(e)?,
        "max_h" => r.max_h = num(e)?,
        "root_base" => r.root_base = num(e)?,
        "reliability_threshold" => r.reliability_threshold = num(e)?,
        "reliability_scale" => r.reliability_scale = num(e)?,
        "n_probes" => cfg.n_probes = num(e)?,
        "probe_gap" => cfg.probe_gap = num(e)?,
        "drop_probability" => cfg.drop_probability = num(e)?,
        "data_rate" => cfg.data_rate = num(e)?,
        "he_prime_bits" => cfg.he_prime_bits = num(e)?,
        "defense" | "defense_mode" => {
            cfg.defense =
                parse_defense(&e.value).ok_or_else(|| bad(e, "expected guarded, on or off"))?
        }
        "ambient_loss" => cfg.ambient_loss = num(e)?,
        "tx_time" => cfg.tx_time = num(e)?,
        "wakeup_interval" => cfg.wakeup_interval = num(e)?,
        "dio_period" => cfg.dio_period = num(e)?,
        "reqp_rounds" => cfg.reqp_rounds = num(e)?,
        "warmup" => cfg.warmup = num(e)?,
        "attach_wait" => cfg.attach_wait = num(e)?,
        "report_interval" => cfg.report_interval = num(e)?,
        "clear_holdoff" => cfg.clear_holdoff = num(e)?,
        "threshold_routes" => cfg.threshold_routes = num(e)?,
        "aggregation_window" => cfg.aggregation_window = num(e)?,
        "initial_energy" => cfg.initial_energy = num(e)?,
        "tx_cost" => cfg.tx_cost = num(e)?,
        "rx_cost" => cfg.rx_cost = num(e)?,
        "per_byte_cost" => cfg.per_byte_cost = num(e)?,
        "transaction_size" => cfg.transaction_size = num(e)?,
        "data_ttl" => cfg.data_ttl = num(e)?,
        "keep_trace" => cfg.keep_trace = num(e)?,
        "links" => cfg.topology = TopologySpec::Explicit(links(e)?),
        "attackers" => cfg.attackers = Some(node_list(e)?),
        "preset" => match e.value.as_str() {
            "desk" => *cfg = ScenarioConfig::desk(),
            "full" => *cfg = ScenarioConfig::default(),
            _ => return Err(bad(e, "expected desk or full")),
        },
        _ => return Ok(false),
    }
    Ok(true)
}

/// Builds a scenario from a single-section file, starting from `base`.
pub fn parse_scenario(text: &str, base: ScenarioConfig) -> Result<ScenarioConfig, ParseError> {
    let sections = parse_sections(text)?;
    if let Some(s) = sections.iter().find(|s| s.name.is_some()) {
        return Err(ParseError::Syntax {
            line: s.line,
            msg: "scenario files take no sections".into(),
        });
    }
    let mut cfg = base;
    // A preset replaces everything, so it goes first wherever it is written.
    let entries = &sections[0].entries;
    for e in entries
        .iter()
        .filter(|e| e.key == "preset")
        .chain(entries.iter().filter(|e| e.key != "preset"))
    {
        if !apply_entry(&mut cfg, e)? {
            return Err(ParseError::UnknownKey {
                line: e.line,
                key: e.key.clone(),
            });
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ParseError> {
    let text = read(path)?;
    parse_scenario(&text, ScenarioConfig::default())
}

pub(crate) fn read(path: &Path) -> Result<String, ParseError> {
    std::fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let s = parse_sections("a = 1 # one\n\n[x]\nb=2\n[ y ]\n").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(
            s[0].entries[0],
            Entry {
                line: 1,
                key: "a".into(),
                value: "1".into()
            }
        );
        assert_eq!(s[1].name.as_deref(), Some("x"));
        assert_eq!(s[2].name.as_deref(), Some("y"));
        assert!(s[2].entries.is_empty());
    }

    #[test]
    fn syntax_errors_carry_lines() {
        assert!(matches!(
            parse_sections("a = 1\nnope"),
            Err(ParseError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_sections("a=1\na=2"),
            Err(ParseError::Duplicate { line: 2, .. })
        ));
        assert!(matches!(
            parse_sections("[x]\n[x]"),
            Err(ParseError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_sections("[]"),
            Err(ParseError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn scenario_keys() {
        let text = "num_nodes = 6\narea = 100 x 80\nlinks = 0-1 1-2, 2-3 3-4 4-5\nattackers = 3\n\
                    min_h = 1\nroot_base = 1\nreliability_scale = 0\ndefense = off\ndelta_t = 5\nseed = 9\n";
        let c = parse_scenario(text, ScenarioConfig::default()).unwrap();
        assert_eq!(c.num_nodes, 6);
        assert_eq!(c.area, (100.0, 80.0));
        assert_eq!(c.attackers, Some(vec![NodeId(3)]));
        assert_eq!(c.defense, DefenseMode::Off);
        assert_eq!(c.weights.delta_t, SimTime::from_secs(5));
        assert_eq!(c.seed, 9);
        match &c.topology {
            TopologySpec::Explicit(l) => assert_eq!(l.len(), 5),
            t => panic!("{t:?}"),
        }
    }

    #[test]
    fn preset_applies_first() {
        let c = parse_scenario("seed = 4\npreset = desk", ScenarioConfig::default()).unwrap();
        assert_eq!((c.num_nodes, c.seed), (50, 4));
    }

    #[test]
    fn rejects_bad_input() {
        let d = ScenarioConfig::default;
        assert!(matches!(
            parse_scenario("nodes = 3", d()),
            Err(ParseError::UnknownKey { .. })
        ));
        assert!(matches!(
            parse_scenario("num_nodes = x", d()),
            Err(ParseError::BadValue { .. })
        ));
        assert!(matches!(
            parse_scenario("sinkhole_rate = 2", d()),
            Err(ParseError::Invalid(_))
        ));
        assert!(matches!(
            parse_scenario("[s]\nseed=1", d()),
            Err(ParseError::Syntax { .. })
        ));
    }
}
