//! Result files: trajectory CSV, metrics JSON and SVG snapshots.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::mission::{AssignerKind, EventKind, MissionEvent, MissionLog, MissionMetrics, Side};
use crate::num::Real;

/// Writes to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// `%g`-style rendering with six significant digits.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..6).contains(&exp) {
        format!("{}e{exp}", trim(mant))
    } else {
        let decimals = (5 - exp) as usize;
        trim(&format!("{x:.decimals$}"))
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub time_s: f64,
    pub side: String,
    pub id: usize,
    pub px_km: f64,
    pub py_km: f64,
    pub pz_km: f64,
    pub vx_km_s: f64,
    pub vy_km_s: f64,
    pub vz_km_s: f64,
    pub assigned_target: Option<usize>,
}

const CSV_HEADER: [&str; 10] = [
    "time_s",
    "side",
    "id",
    "px_km",
    "py_km",
    "pz_km",
    "vx_km_s",
    "vy_km_s",
    "vz_km_s",
    "assigned_target",
];

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Interceptor => "interceptor",
        Side::Target => "target",
    }
}

/// CSV text of every sample, sorted by time, side and id. Assets appear
/// once at `t = 0`.
pub fn trajectory_csv<T: Real>(log: &MissionLog<T>) -> Result<Vec<u8>, csv::Error> {
    struct Row {
        step: usize,
        side: &'static str,
        id: usize,
        pos: [f64; 3],
        vel: [f64; 3],
        assigned: Option<usize>,
    }
    let f3 = |v: crate::vector::Vec3<T>| [v.x.as_f64(), v.y.as_f64(), v.z.as_f64()];
    let mut rows = Vec::new();
    for tr in &log.trajectories {
        for (j, s) in tr.states.iter().enumerate() {
            rows.push(Row {
                step: tr.start_step + j,
                side: side_name(tr.side),
                id: tr.id,
                pos: f3(s.position),
                vel: f3(s.velocity),
                assigned: tr.assigned[j],
            });
        }
    }
    for a in &log.assets {
        rows.push(Row {
            step: 0,
            side: "asset",
            id: a.id,
            pos: f3(a.position),
            vel: [0.0; 3],
            assigned: None,
        });
    }
    rows.sort_by(|a, b| (a.step, a.side, a.id).cmp(&(b.step, b.side, b.id)));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let mut rec = vec![
            format_sig(log.time_of(r.step).as_f64()),
            r.side.to_string(),
            r.id.to_string(),
        ];
        rec.extend(r.pos.iter().chain(&r.vel).map(|&x| format_sig(x)));
        rec.push(r.assigned.map(|k| k.to_string()).unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

pub fn write_trajectory_csv<T: Real>(log: &MissionLog<T>, path: &Path) -> io::Result<()> {
    let bytes = trajectory_csv(log).map_err(io::Error::other)?;
    write_atomic(path, &bytes)
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryRow>, csv::Error> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub scenario: String,
    pub assigner: AssignerKind,
    pub metrics: MissionMetrics,
    pub events: Vec<MissionEvent>,
}

pub fn metrics_json<T: Real>(log: &MissionLog<T>) -> String {
    let file = MetricsFile {
        scenario: log.scenario_name.clone(),
        assigner: log.assigner,
        metrics: log.metrics.clone(),
        events: log.events.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("metrics serialize");
    s.push('\n');
    s
}

pub fn write_metrics<T: Real>(log: &MissionLog<T>, path: &Path) -> io::Result<()> {
    write_atomic(path, metrics_json(log).as_bytes())
}

const CANVAS: f64 = 800.0;
const MARGIN: f64 = 60.0;

struct Frame {
    x0: f64,
    y0: f64,
    scale: f64,
}

impl Frame {
    fn fit(points: &[[f64; 2]]) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        if !lo[0].is_finite() {
            lo = [-1.0; 2];
            hi = [1.0; 2];
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9) * 1.05;
        let cx = (lo[0] + hi[0]) / 2.0;
        let cy = (lo[1] + hi[1]) / 2.0;
        Self {
            x0: cx - span / 2.0,
            y0: cy - span / 2.0,
            scale: (CANVAS - 2.0 * MARGIN) / span,
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (
            MARGIN + (x - self.x0) * self.scale,
            CANVAS - MARGIN - (y - self.y0) * self.scale,
        )
    }
}

/// SVG of the engagement at `time`, clamped to the logged span.
///
/// Protection zones are dashed circles, intended target paths gray dashed
/// lines, current assignments dotted lines, and intercepts green markers
/// labelled with their time.
pub fn render_plot<T: Real>(log: &MissionLog<T>, time: f64) -> String {
    let dt = log.sim_dt.as_f64();
    let last = log.final_step();
    let step = if dt > 0.0 {
        ((time / dt).round().max(0.0) as usize).min(last)
    } else {
        0
    };
    let shown = step as f64 * dt;
    let xy = |tr: &crate::mission::Trajectory<T>, j: usize| {
        let p = tr.states[j].position;
        [p.x.as_f64(), p.y.as_f64()]
    };

    let mut pts: Vec<[f64; 2]> = Vec::new();
    for tr in &log.trajectories {
        pts.extend((0..tr.states.len()).map(|j| xy(tr, j)));
    }
    for a in &log.assets {
        let (x, y, r) = (a.position.x.as_f64(), a.position.y.as_f64(), a.protection_radius.as_f64());
        pts.push([x - r, y - r]);
        pts.push([x + r, y + r]);
    }
    let frame = Frame::fit(&pts);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="white"/>"#);
    let inner = CANVAS - 2.0 * MARGIN;
    let _ = writeln!(
        s,
        r#"<rect class="axes" x="{MARGIN}" y="{MARGIN}" width="{inner}" height="{inner}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">x [km]</text>"#,
        CANVAS / 2.0,
        CANVAS - 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" font-size="14" transform="rotate(-90 20 {})">y [km]</text>"#,
        CANVAS / 2.0,
        CANVAS / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text class="title" x="{}" y="30" text-anchor="middle" font-size="16">t = {} s</text>"#,
        CANVAS / 2.0,
        format_sig(shown)
    );

    for a in &log.assets {
        let (x, y) = frame.map(a.position.x.as_f64(), a.position.y.as_f64());
        let r = a.protection_radius.as_f64() * frame.scale;
        let _ = writeln!(
            s,
            r#"<circle class="zone" cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="none" stroke="black" stroke-dasharray="6 4"/>"#
        );
        let _ = writeln!(s, r#"<rect class="asset" x="{:.2}" y="{:.2}" width="6" height="6" fill="black"/>"#, x - 3.0, y - 3.0);
    }

    for &(tid, aid) in &log.intended_assets {
        let (Some(tr), Some(a)) = (log.trajectory(Side::Target, tid), log.assets.iter().find(|a| a.id == aid)) else {
            continue;
        };
        let [x0, y0] = xy(tr, 0);
        let (x1, y1) = frame.map(x0, y0);
        let (x2, y2) = frame.map(a.position.x.as_f64(), a.position.y.as_f64());
        let _ = writeln!(
            s,
            r#"<line class="intended" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="gray" stroke-dasharray="8 6"/>"#
        );
    }

    let mut heads = Vec::new();
    for tr in &log.trajectories {
        let Some(j) = tr.sample_at(step) else { continue };
        let coords: Vec<String> = (0..=j)
            .map(|k| {
                let [x, y] = xy(tr, k);
                let (u, v) = frame.map(x, y);
                format!("{u:.2},{v:.2}")
            })
            .collect();
        let (class, color) = match tr.side {
            Side::Interceptor => ("track interceptor", "blue"),
            Side::Target => ("track target", "red"),
        };
        let _ = writeln!(
            s,
            r#"<polyline class="{class}" points="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
            coords.join(" ")
        );
        if tr.last_step() >= step {
            let [x, y] = xy(tr, j);
            heads.push((frame.map(x, y), color));
        }
    }

    if let Some(rec) = log
        .assignment_history
        .iter()
        .rev()
        .find(|r| r.time.as_f64() <= shown + dt * 0.5)
    {
        for (&mid, &tid) in rec.interceptor_ids.iter().zip(&rec.assigned) {
            let (Some(m), Some(t)) = (log.trajectory(Side::Interceptor, mid), log.trajectory(Side::Target, tid)) else {
                continue;
            };
            if m.last_step() < step || t.last_step() < step {
                continue;
            }
            let (Some(i), Some(k)) = (m.sample_at(step), t.sample_at(step)) else { continue };
            let [ax, ay] = xy(m, i);
            let [bx, by] = xy(t, k);
            let (x1, y1) = frame.map(ax, ay);
            let (x2, y2) = frame.map(bx, by);
            let _ = writeln!(
                s,
                r#"<line class="assignment" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="red" stroke-dasharray="2 3"/>"#
            );
        }
    }

    for ((x, y), color) in heads {
        let _ = writeln!(s, r#"<circle class="agent" cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
    }

    for e in log.events.iter().filter(|e| e.kind == EventKind::Intercept && e.time <= shown + 1e-9) {
        let Some(tr) = e.interceptor.and_then(|id| log.trajectory(Side::Interceptor, id)) else {
            continue;
        };
        let [x, y] = xy(tr, tr.states.len() - 1);
        let (u, v) = frame.map(x, y);
        let _ = writeln!(
            s,
            r#"<circle class="intercept" cx="{u:.2}" cy="{v:.2}" r="5" fill="none" stroke="green" stroke-width="2"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text class="intercept-label" x="{:.2}" y="{:.2}" font-size="11" fill="green">T = {:.0} s</text>"#,
            u + 7.0,
            v - 7.0,
            e.time
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_plot<T: Real>(log: &MissionLog<T>, time: f64, path: &Path) -> io::Result<()> {
    write_atomic(path, render_plot(log, time).as_bytes())
}
