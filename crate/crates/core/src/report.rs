//! JSON form of an [`EstimateReport`].

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::error::Result;
use crate::estimator::{EstimateConfig, EstimateReport, IntervalPolicy};
use crate::measures::{total_variation, Approximation};

fn approximation(a: &Approximation) -> Value {
    match a {
        Approximation::Discrete(d) => json!({
            "nodes": d.nodes(),
            "weights": d.weights(),
            "d_tv": total_variation(d),
        }),
        Approximation::Series(s) => json!({
            "measure": s.measure().to_string(),
            "coeffs": s.coeffs(),
        }),
    }
}

fn config(cfg: &EstimateConfig) -> Value {
    let interval = match &cfg.interval {
        IntervalPolicy::Fixed(a, b) => json!({ "fixed": [a, b] }),
        IntervalPolicy::Auto {
            probe_k,
            margin,
            include,
        } => json!({
            "auto": { "probe_k": probe_k, "margin": margin, "include": include.map(|(a, b)| [a, b]) }
        }),
    };
    json!({
        "method": cfg.method.to_string(),
        "damping": if cfg.damping { "jackson" } else { "none" },
        "k": cfg.k,
        "s": cfg.degree(),
        "n_v": cfg.n_v,
        "measure": cfg.measure.as_ref().map(|m| m.to_string()),
        "interval": interval,
        "seed": cfg.seed,
        "reorth": cfg.reorth,
        "moment_path": cfg.moment_path.to_string(),
        "aaq_nodes": cfg.nodes(),
        "functions": cfg.functions.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
    })
}

/// The report as JSON. `timing_ms` is null unless `with_timing`, so that fixed-seed runs
/// serialize identically.
pub fn to_json(report: &EstimateReport, with_timing: bool) -> Value {
    let mut sums = Map::new();
    let mut sample_sums = Map::new();
    for s in &report.sums {
        sums.insert(s.function.to_string(), json!(s.trace));
        sample_sums.insert(s.function.to_string(), json!(s.samples));
    }
    json!({
        "config": config(&report.config),
        "dim": report.dim,
        "interval": report.interval.map(|(a, b)| [a, b]),
        "measure": report.measure.as_ref().map(|m| m.to_string()),
        "samples": report.samples.iter().map(approximation).collect::<Vec<_>>(),
        "breakdowns": report.breakdowns,
        "average": approximation(&report.average),
        "aaq_truncated": report.aaq_truncated,
        "sums": sums,
        "sample_sums": sample_sums,
        "timing_ms": if with_timing { json!(report.timing_ms) } else { Value::Null },
    })
}

pub fn write_json<W: Write>(out: W, report: &EstimateReport, with_timing: bool) -> Result<()> {
    serde_json::to_writer_pretty(out, &to_json(report, with_timing))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{estimate_spectrum, FunctionSpec, Method};
    use crate::operators::diagonal_operator;

    #[test]
    fn schema_and_round_trip() {
        let a = diagonal_operator((0..30).map(|i| 0.1 * i as f64 + 0.05).collect()).unwrap();
        for method in [Method::Slq, Method::Aq] {
            let cfg = crate::estimator::EstimateConfig {
                method,
                k: 4,
                n_v: 2,
                functions: vec![FunctionSpec::Log, FunctionSpec::Identity],
                ..Default::default()
            };
            let rep = estimate_spectrum(&a, &cfg).unwrap();
            let v = to_json(&rep, false);
            for key in [
                "config",
                "interval",
                "samples",
                "average",
                "sums",
                "timing_ms",
            ] {
                assert!(v.get(key).is_some(), "{key}");
            }
            assert!(v["timing_ms"].is_null());
            assert_eq!(v["samples"].as_array().unwrap().len(), 2);
            assert_eq!(v["sums"]["log"].as_f64().unwrap(), rep.sums[0].trace);
            let mut buf = Vec::new();
            write_json(&mut buf, &rep, false).unwrap();
            let back: Value = serde_json::from_slice(&buf).unwrap();
            assert_eq!(back, v);
            assert!(to_json(&rep, true)["timing_ms"].as_f64().is_some());
            if method == Method::Slq {
                let w = v["average"]["weights"].as_array().unwrap();
                let d = rep.average.as_series();
                assert!(d.is_none());
                assert_eq!(w.len(), 8);
                assert!(v["interval"].is_null());
            } else {
                assert_eq!(v["average"]["coeffs"].as_array().unwrap().len(), 9);
            }
        }
    }
}
