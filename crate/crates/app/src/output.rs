//! Time series, snapshot and event writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use arrestflow_core::diagnostics::{k_distortion, self_intersections, DistortionKernel};
use arrestflow_core::geometry::{gromov_distortion, Curve};
use arrestflow_core::solver::{min_pair_distance, Evaluation, Event, Observer, TangentAngleState};
use serde::Serialize;

use crate::config::{DiagnosticsConfig, DistortionChoice};

pub const TIMESERIES_HEADER: &str =
    "t,i,length,eps,mu_a,maxF,closure_defect,delta_K,delta_inf,min_pair_dist";
pub const SNAPSHOT_HEADER: &str = "x,y";

/// 17 significant digits; `nan` and `inf` spelled out.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    fmt_f64(v.unwrap_or(f64::NAN))
}

pub fn snapshot_name(t: f64, i: usize) -> String {
    format!("snap_{t:.6}_{i}.csv")
}

pub fn write_curve_csv(path: &Path, curve: &Curve) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{SNAPSHOT_HEADER}")?;
    for p in curve.points() {
        writeln!(w, "{},{}", fmt_f64(p.x), fmt_f64(p.y))?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeseriesRow {
    pub t: f64,
    pub i: usize,
    pub length: f64,
    pub eps: f64,
    pub mu_a: f64,
    pub max_force: f64,
    pub closure_defect: f64,
    pub delta_k: Option<f64>,
    pub delta_inf: Option<f64>,
    pub min_pair_dist: f64,
}

impl TimeseriesRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(self.t),
            self.i,
            fmt_f64(self.length),
            fmt_f64(self.eps),
            fmt_f64(self.mu_a),
            fmt_f64(self.max_force),
            fmt_f64(self.closure_defect),
            fmt_opt(self.delta_k),
            fmt_opt(self.delta_inf),
            fmt_f64(self.min_pair_dist),
        )
    }
}

/// Time-series rows for every interface at one time level.
pub fn timeseries_rows(
    state: &TangentAngleState,
    eval: &Evaluation,
    diagnostics: &DiagnosticsConfig,
) -> Vec<TimeseriesRow> {
    let kernel = match diagnostics.distortion_kernel {
        DistortionChoice::Pseudo => Some(DistortionKernel::Pseudo),
        DistortionChoice::Mobius => Some(DistortionKernel::Mobius),
        DistortionChoice::Kl => Some(DistortionKernel::Kl),
        DistortionChoice::None => None,
    };
    state
        .interfaces
        .iter()
        .zip(&eval.interfaces)
        .enumerate()
        .map(|(i, (s, e))| {
            let embedded = self_intersections(&e.curve).is_empty();
            let delta_k = kernel
                .filter(|_| embedded)
                .and_then(|k| k_distortion(&e.curve, k).ok())
                .map(|r| r.value);
            let delta_inf = if diagnostics.track_gromov && embedded {
                gromov_distortion(&e.curve).ok()
            } else {
                None
            };
            TimeseriesRow {
                t: state.t,
                i,
                length: s.length(),
                eps: s.epsilon,
                mu_a: e.mu_a,
                max_force: e.force.max_abs(),
                closure_defect: s.closure_defect(),
                delta_k,
                delta_inf,
                min_pair_dist: min_pair_distance(eval, i),
            }
        })
        .collect()
}

#[derive(Serialize)]
struct EventPayload<'a> {
    interface: Option<usize>,
    detail: &'a str,
    points: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct EventLine<'a> {
    t: f64,
    #[serde(rename = "type")]
    kind: &'static str,
    payload: EventPayload<'a>,
}

pub fn event_json(e: &Event) -> String {
    serde_json::to_string(&EventLine {
        t: e.t,
        kind: e.kind.name(),
        payload: EventPayload {
            interface: e.interface,
            detail: &e.detail,
            points: e.points.iter().map(|p| [p.x, p.y]).collect(),
        },
    })
    .expect("event serializes")
}

/// Observer that streams `timeseries.csv`, `events.jsonl` and snapshots.
pub struct SimulationWriter {
    dir: PathBuf,
    diagnostics: DiagnosticsConfig,
    interval: f64,
    next_snapshot: u64,
    timeseries: BufWriter<File>,
    events: BufWriter<File>,
    pending: Option<(TangentAngleState, Evaluation)>,
    error: Option<io::Error>,
    pub rows: Vec<TimeseriesRow>,
    pub snapshots: Vec<PathBuf>,
}

impl SimulationWriter {
    pub fn create(dir: &Path, diagnostics: DiagnosticsConfig, interval: f64) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut timeseries = BufWriter::new(File::create(dir.join("timeseries.csv"))?);
        writeln!(timeseries, "{TIMESERIES_HEADER}")?;
        let events = BufWriter::new(File::create(dir.join("events.jsonl"))?);
        Ok(Self {
            dir: dir.to_path_buf(),
            diagnostics,
            interval,
            next_snapshot: 0,
            timeseries,
            events,
            pending: None,
            error: None,
            rows: Vec::new(),
            snapshots: Vec::new(),
        })
    }

    fn record(&mut self, state: &TangentAngleState, eval: &Evaluation) -> io::Result<()> {
        for row in timeseries_rows(state, eval, &self.diagnostics) {
            writeln!(self.timeseries, "{}", row.to_csv())?;
            self.rows.push(row);
        }
        for (i, e) in eval.interfaces.iter().enumerate() {
            let path = self.dir.join(snapshot_name(state.t, i));
            write_curve_csv(&path, &e.curve)?;
            self.snapshots.push(path);
        }
        self.timeseries.flush()?;
        self.events.flush()
    }

    fn due(&self, t: f64) -> bool {
        t >= self.next_snapshot as f64 * self.interval - 1e-9 * self.interval
    }

    fn keep(&mut self, r: io::Result<()>) {
        if let Err(e) = r {
            self.error.get_or_insert(e);
        }
    }

    /// Flushes everything and reports the first write error.
    pub fn finish(mut self) -> io::Result<(Vec<TimeseriesRow>, Vec<PathBuf>)> {
        if let Some((s, e)) = self.pending.take() {
            let r = self.record(&s, &e);
            self.keep(r);
        }
        let r = self.timeseries.flush().and_then(|_| self.events.flush());
        self.keep(r);
        match self.error {
            Some(e) => Err(e),
            None => Ok((self.rows, self.snapshots)),
        }
    }
}

impl Observer for SimulationWriter {
    fn sample(&mut self, state: &TangentAngleState, eval: &Evaluation) {
        if self.error.is_some() {
            return;
        }
        if self.due(state.t) {
            let r = self.record(state, eval);
            self.keep(r);
            self.next_snapshot = ((state.t / self.interval + 1e-9).floor() as u64) + 1;
            self.pending = None;
        } else {
            self.pending = Some((state.clone(), eval.clone()));
        }
    }

    fn event(&mut self, event: &Event) {
        if self.error.is_some() {
            return;
        }
        // the final level is always recorded
        if event.kind.is_terminal() {
            if let Some((s, e)) = self.pending.take() {
                let r = self.record(&s, &e);
                self.keep(r);
            }
        }
        let r = writeln!(self.events, "{}", event_json(event));
        self.keep(r);
    }
}
