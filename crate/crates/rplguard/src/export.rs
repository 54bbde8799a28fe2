//! Artifacts of a single run.

use std::fmt::Write as _;
use std::path::Path;

use rplguard_core::sim::RunOutput;
use rplguard_core::NodeId;

/// `time observer suspect stage verdict pdr`, tab-separated with a header.
pub fn detections_tsv(out: &RunOutput) -> String {
    let mut s = String::from("time\tobserver\tsuspect\tstage\tverdict\tpdr\n");
    for d in &out.detections {
        let pdr = d.pdr.map_or_else(|| "-".to_string(), |p| format!("{p:.4}"));
        let _ = writeln!(s, "{d}\t{pdr}");
    }
    s
}

/// `time malicious reattached unattached detached`, one line per quarantine.
pub fn quarantine_tsv(out: &RunOutput) -> String {
    let mut s = String::from("time\tmalicious\treattached\tunattached\tdetached\n");
    for q in &out.quarantines {
        let det: Vec<String> = q.detached.iter().map(NodeId::to_string).collect();
        let _ = writeln!(s, "{q}\t{}", det.join(","));
    }
    s
}

pub fn probes_tsv(out: &RunOutput) -> String {
    let mut s = String::from("time\ttarget\tpurpose\troute\tsent\tacks\tpdr\tverdict\tabnormal\n");
    for p in &out.probes {
        let route: Vec<String> = p.record.route.iter().map(NodeId::to_string).collect();
        let verdict = p.verdict.map_or("-", |v| v.as_str());
        let purpose = match p.purpose {
            rplguard_core::sim::ProbePurpose::Threshold => "threshold",
            rplguard_core::sim::ProbePurpose::Suspect => "suspect",
        };
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{}\t{}",
            p.time,
            p.target,
            purpose,
            route.join(","),
            p.record.mc_sent,
            p.record.acks_received,
            p.record.pdr,
            verdict,
            p.abnormal
        );
    }
    s
}

/// Every node's monitoring table under a `[node]` header.
pub fn tables_txt(out: &RunOutput) -> String {
    let mut s = String::new();
    for i in 0..out.tables.len() {
        let _ = writeln!(s, "[{i}]");
        s.push_str(&out.table_dump(NodeId(i as u32)));
    }
    s
}

/// Writes `trace.tsv` (when the trace was kept), `edges.txt`, `tables.txt`,
/// `detections.tsv`, `quarantine.tsv`, `probes.tsv` and `digest.txt`.
pub fn write_run_artifacts(dir: &Path, out: &RunOutput) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    if let Some(t) = out.trace.to_tsv() {
        std::fs::write(dir.join("trace.tsv"), t)?;
    }
    std::fs::write(dir.join("edges.txt"), out.graph.edge_list())?;
    std::fs::write(dir.join("tables.txt"), tables_txt(out))?;
    std::fs::write(dir.join("detections.tsv"), detections_tsv(out))?;
    std::fs::write(dir.join("quarantine.tsv"), quarantine_tsv(out))?;
    std::fs::write(dir.join("probes.tsv"), probes_tsv(out))?;
    std::fs::write(
        dir.join("digest.txt"),
        format!("{:016x}\n", out.trace.digest()),
    )?;
    Ok(())
}
