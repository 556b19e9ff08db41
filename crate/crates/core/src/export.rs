//! CSV serialization of experiment results, traces, strategies and
//! assignments. All writers are deterministic: identical inputs produce
//! byte-identical output.

use std::fmt::Write as _;

use crate::engine::{FrameRecord, TrafficFrame};
use crate::harness::{ExperimentResult, GainCurve};
use crate::strategy::StrategyMatrix;

fn num(v: f64) -> String {
    format!("{v:.9}")
}

/// Long-format metrics table: one row per (replication, metric) plus
/// aggregate rows (`replication` column holds `mean`, `ci95`, `count`).
pub fn metrics_csv<'a>(
    entries: impl IntoIterator<Item = (&'a str, f64, &'a ExperimentResult)>,
) -> String {
    let mut out = String::from("param,value,scheme,replication,metric,metric_value\n");
    for (param, value, result) in entries {
        let scheme = result.config.scheme.to_string();
        let prefix = |rep: &str| format!("{param},{},{scheme},{rep}", num(value));
        for outcome in &result.outcomes {
            let rep = outcome.replication.to_string();
            match &outcome.report {
                Ok(report) => {
                    writeln!(out, "{},defined,1", prefix(&rep)).unwrap();
                    writeln!(out, "{},l,{}", prefix(&rep), num(report.l)).unwrap();
                    writeln!(out, "{},t,{}", prefix(&rep), num(report.t)).unwrap();
                    writeln!(
                        out,
                        "{},excluded_devices,{}",
                        prefix(&rep),
                        report.excluded_devices
                    )
                    .unwrap();
                }
                Err(_) => {
                    writeln!(out, "{},defined,0", prefix(&rep)).unwrap();
                }
            }
        }
        let agg = &result.aggregate;
        writeln!(out, "{},l,{}", prefix("mean"), num(agg.mean_l)).unwrap();
        writeln!(out, "{},l,{}", prefix("ci95"), num(agg.ci95_l)).unwrap();
        writeln!(out, "{},t,{}", prefix("mean"), num(agg.mean_t)).unwrap();
        writeln!(out, "{},t,{}", prefix("ci95"), num(agg.ci95_t)).unwrap();
        writeln!(
            out,
            "{},defined_replications,{}",
            prefix("count"),
            agg.defined_replications
        )
        .unwrap();
    }
    out
}

/// Learning-curve export: one row per snapshot of each sweep point.
/// `time` counts frames of learning (episodes when μ = 0).
pub fn gain_csv<'a>(entries: impl IntoIterator<Item = (&'a str, f64, &'a GainCurve)>) -> String {
    let mut out = String::from("param,value,time,throughput,gain\n");
    for (param, value, curve) in entries {
        for i in 0..curve.times.len() {
            writeln!(
                out,
                "{param},{},{},{},{}",
                num(value),
                curve.times[i],
                num(curve.throughput[i]),
                num(curve.gain[i])
            )
            .unwrap();
        }
    }
    out
}

/// One row per (frame, device): frame,device,x,a,z.
pub fn trace_csv(records: &[FrameRecord]) -> String {
    let mut out = String::from("frame,device,x,a,z\n");
    for rec in records {
        for dev in 0..rec.states.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                rec.frame,
                dev,
                rec.states[dev],
                rec.actions[dev],
                u8::from(rec.rewards[dev])
            )
            .unwrap();
        }
    }
    out
}

/// Per-frame traffic trace: frame_index,active_flag,event_count,y_1..y_N.
pub fn traffic_csv(records: &[FrameRecord], traffic: &[TrafficFrame]) -> String {
    assert_eq!(records.len(), traffic.len());
    let n = records.first().map_or(0, |r| r.activations.len());
    let mut out = String::from("frame_index,active_flag,event_count");
    for dev in 1..=n {
        write!(out, ",y_{dev}").unwrap();
    }
    out.push('\n');
    for (rec, tf) in records.iter().zip(traffic) {
        write!(
            out,
            "{},{},{}",
            rec.frame,
            u8::from(tf.active),
            tf.event_count
        )
        .unwrap();
        for &y in &rec.activations {
            write!(out, ",{}", u8::from(y)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Strategy snapshot: one row per (device, attempt) with the full PDF.
pub fn strategies_csv(strategies: &[StrategyMatrix]) -> String {
    let k = strategies.first().map_or(0, |s| s.n_slots());
    let mut out = String::from("device_id,attempt");
    for slot in 1..=k {
        write!(out, ",p_{slot}").unwrap();
    }
    out.push('\n');
    for (dev, strategy) in strategies.iter().enumerate() {
        for attempt in 1..=strategy.n_attempts() {
            write!(out, "{dev},{attempt}").unwrap();
            for &p in strategy.row(attempt) {
                write!(out, ",{}", format!("{p:.12}")).unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// MMPC-style assignment export: device_id,slot.
pub fn assignment_csv(assignment: &[usize]) -> String {
    let mut out = String::from("device_id,slot\n");
    for (dev, &slot) in assignment.iter().enumerate() {
        writeln!(out, "{dev},{slot}").unwrap();
    }
    out
}
