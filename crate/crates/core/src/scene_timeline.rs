//! Recorded transform trees and their replay.
//!
//! The pose log is JSON Lines, one transform sample per line:
//!
//! ```text
//! {"t": 0.0, "parent": "world", "child": "obj1", "tx": 0, "ty": 0, "tz": 0, "qx": 0, "qy": 0, "qz": 0, "qw": 1}
//! {"t": null, "static": true, "parent": "world", "child": "cam", ...}
//! ```
//!
//! A sample is the pose of `child` in `parent`. Lines with `t: null` (or
//! `"static": true`) are static edges. Unknown fields are ignored, blank
//! lines are skipped, and samples may appear in any time order.
//!
//! Between recorded samples, translation is interpolated linearly and
//! rotation by shortest-arc slerp.

use crate::geometry::{Quat, Transform, Vec3};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TimelineError {
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: quaternion norm {norm} is not within 1e-3 of 1")]
    NonUnitQuaternion { line: usize, norm: f64 },
    #[error("line {line}: duplicate sample for {parent}->{child} at t={t}")]
    DuplicateTimestamp {
        line: usize,
        parent: String,
        child: String,
        t: f64,
    },
    #[error("frame `{child}` has two parents: `{first}` and `{second}`")]
    MultipleParents {
        child: String,
        first: String,
        second: String,
    },
    #[error("transform tree contains a cycle through `{0}`")]
    CyclicTree(String),
    #[error("unknown frame `{0}`")]
    UnknownFrame(String),
    #[error("no path between `{target}` and `{source_frame}`")]
    NoPath {
        target: String,
        source_frame: String,
    },
    #[error("t={t} is outside [{start}, {end}] for edge {parent}->{child}")]
    ExtrapolationRequired {
        parent: String,
        child: String,
        t: f64,
        start: f64,
        end: f64,
    },
    #[error("required frames have no common time span (start {start} > end {end})")]
    EmptyOverlap { start: f64, end: f64 },
    #[error("reading pose log: {0}")]
    Io(#[from] std::io::Error),
}

/// Maximum deviation of a logged quaternion's norm from 1.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-3;

/// One line of the pose log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseLogLine {
    pub t: Option<f64>,
    #[serde(default, rename = "static", skip_serializing_if = "std::ops::Not::not")]
    pub is_static: bool,
    pub parent: String,
    pub child: String,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
    pub qw: f64,
}

impl PoseLogLine {
    pub fn new(t: Option<f64>, parent: &str, child: &str, transform: &Transform) -> Self {
        let Transform {
            translation: p,
            rotation: q,
        } = *transform;
        Self {
            t,
            is_static: t.is_none(),
            parent: parent.into(),
            child: child.into(),
            tx: p.x,
            ty: p.y,
            tz: p.z,
            qx: q.x,
            qy: q.y,
            qz: q.z,
            qw: q.w,
        }
    }

    pub fn transform(&self) -> Transform {
        Transform::new(
            Vec3::new(self.tx, self.ty, self.tz),
            Quat::new(self.qx, self.qy, self.qz, self.qw),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pose log line serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EdgeData {
    Static(Transform),
    /// Strictly increasing timestamps.
    Dynamic(Vec<(f64, Transform)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub parent: String,
    pub data: EdgeData,
}

impl Edge {
    /// Time span of a dynamic edge.
    pub fn span(&self) -> Option<(f64, f64)> {
        match &self.data {
            EdgeData::Static(_) => None,
            EdgeData::Dynamic(s) => Some((s[0].0, s[s.len() - 1].0)),
        }
    }

    fn value_at(&self, child: &str, t: f64) -> Result<Transform, TimelineError> {
        let samples = match &self.data {
            EdgeData::Static(tf) => return Ok(*tf),
            EdgeData::Dynamic(s) => s,
        };
        let (start, end) = (samples[0].0, samples[samples.len() - 1].0);
        if !(t >= start && t <= end) {
            return Err(TimelineError::ExtrapolationRequired {
                parent: self.parent.clone(),
                child: child.into(),
                t,
                start,
                end,
            });
        }
        // first sample with time >= t
        let hi = samples.partition_point(|(ts, _)| *ts < t);
        let (t1, tf1) = samples[hi];
        if t1 == t {
            return Ok(tf1);
        }
        let (t0, tf0) = samples[hi - 1];
        Ok(tf0.interpolate(&tf1, (t - t0) / (t1 - t0)))
    }
}

/// Forest of named frames keyed by child frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransformTree {
    edges: BTreeMap<String, Edge>,
}

/// Validity window of a replay. When no required edge is time-varying the
/// window is the single-frame sentinel `[0, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeRange {
    pub start: f64,
    pub end: f64,
    pub is_static: bool,
}

impl TransformTree {
    pub fn frames(&self) -> BTreeSet<&str> {
        let mut f = BTreeSet::new();
        for (child, edge) in &self.edges {
            f.insert(child.as_str());
            f.insert(edge.parent.as_str());
        }
        f
    }

    pub fn edge(&self, child: &str) -> Option<&Edge> {
        self.edges.get(child)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &Edge)> {
        self.edges.iter().map(|(c, e)| (c.as_str(), e))
    }

    pub fn has_frame(&self, frame: &str) -> bool {
        self.edges.contains_key(frame) || self.edges.values().any(|e| e.parent == frame)
    }

    /// `frame` followed by its ancestors up to the root.
    fn chain<'a>(&'a self, frame: &'a str) -> Vec<&'a str> {
        let mut out = vec![frame];
        let mut cur = frame;
        while let Some(edge) = self.edges.get(cur) {
            cur = edge.parent.as_str();
            out.push(cur);
        }
        out
    }

    /// Builds a tree from log lines, sorting samples per edge.
    pub fn from_lines(lines: Vec<(usize, PoseLogLine)>) -> Result<Self, TimelineError> {
        struct Pending {
            parent: String,
            first_line: usize,
            statics: Vec<(usize, Transform)>,
            timed: Vec<(usize, f64, Transform)>,
        }
        let mut pending: BTreeMap<String, Pending> = BTreeMap::new();
        for (line, rec) in lines {
            if rec.parent.is_empty() || rec.child.is_empty() {
                return Err(TimelineError::MalformedLine {
                    line,
                    message: "frame names must be nonempty".into(),
                });
            }
            if rec.parent == rec.child {
                return Err(TimelineError::MalformedLine {
                    line,
                    message: format!("frame `{}` is its own parent", rec.child),
                });
            }
            let raw = rec.transform();
            let values = [
                raw.translation.x,
                raw.translation.y,
                raw.translation.z,
                raw.rotation.x,
                raw.rotation.y,
                raw.rotation.z,
                raw.rotation.w,
            ];
            if values.iter().any(|v| !v.is_finite()) {
                return Err(TimelineError::MalformedLine {
                    line,
                    message: "non-finite transform component".into(),
                });
            }
            let norm = raw.rotation.norm();
            if (norm - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
                return Err(TimelineError::NonUnitQuaternion { line, norm });
            }
            let tf = Transform::new(raw.translation, raw.rotation.normalized());
            let entry = pending.entry(rec.child.clone()).or_insert_with(|| Pending {
                parent: rec.parent.clone(),
                first_line: line,
                statics: Vec::new(),
                timed: Vec::new(),
            });
            if entry.parent != rec.parent {
                return Err(TimelineError::MultipleParents {
                    child: rec.child,
                    first: entry.parent.clone(),
                    second: rec.parent,
                });
            }
            match (rec.is_static, rec.t) {
                (true, _) | (false, None) => entry.statics.push((line, tf)),
                (false, Some(t)) => {
                    if !(t.is_finite() && t >= 0.0) {
                        return Err(TimelineError::MalformedLine {
                            line,
                            message: format!("timestamp must be finite and >= 0, got {t}"),
                        });
                    }
                    entry.timed.push((line, t, tf));
                }
            }
        }

        let mut edges = BTreeMap::new();
        for (child, mut p) in pending {
            let data = match (p.statics.len(), p.timed.is_empty()) {
                (1, true) => EdgeData::Static(p.statics[0].1),
                (0, false) => {
                    p.timed
                        .sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                    for w in p.timed.windows(2) {
                        if w[0].1 == w[1].1 {
                            return Err(TimelineError::DuplicateTimestamp {
                                line: w[1].0,
                                parent: p.parent.clone(),
                                child: child.clone(),
                                t: w[1].1,
                            });
                        }
                    }
                    EdgeData::Dynamic(p.timed.into_iter().map(|(_, t, tf)| (t, tf)).collect())
                }
                (n, _) if n > 1 && p.timed.is_empty() => {
                    return Err(TimelineError::MalformedLine {
                        line: p.statics[1].0,
                        message: format!(
                            "static edge {}->{} given more than once",
                            p.parent, child
                        ),
                    })
                }
                _ => {
                    return Err(TimelineError::MalformedLine {
                        line: p.first_line,
                        message: format!(
                            "edge {}->{} mixes static and timed samples",
                            p.parent, child
                        ),
                    })
                }
            };
            edges.insert(
                child,
                Edge {
                    parent: p.parent,
                    data,
                },
            );
        }

        let tree = TransformTree { edges };
        tree.check_acyclic()?;
        Ok(tree)
    }

    fn check_acyclic(&self) -> Result<(), TimelineError> {
        for start in self.edges.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = start.as_str();
            while let Some(edge) = self.edges.get(cur) {
                if !seen.insert(cur) {
                    return Err(TimelineError::CyclicTree(cur.into()));
                }
                cur = edge.parent.as_str();
            }
        }
        Ok(())
    }

    /// Window in which every edge above `required_frames` can be evaluated
    /// without extrapolation.
    pub fn valid_time_range(&self, required_frames: &[&str]) -> Result<TimeRange, TimelineError> {
        let mut start = f64::NEG_INFINITY;
        let mut end = f64::INFINITY;
        let mut any_dynamic = false;
        let mut visited = BTreeSet::new();
        for &frame in required_frames {
            if !self.has_frame(frame) {
                return Err(TimelineError::UnknownFrame(frame.into()));
            }
            for f in self.chain(frame) {
                if !visited.insert(f) {
                    continue;
                }
                if let Some((s, e)) = self.edges.get(f).and_then(Edge::span) {
                    any_dynamic = true;
                    start = start.max(s);
                    end = end.min(e);
                }
            }
        }
        if !any_dynamic {
            return Ok(TimeRange {
                start: 0.0,
                end: 0.0,
                is_static: true,
            });
        }
        if start > end {
            return Err(TimelineError::EmptyOverlap { start, end });
        }
        Ok(TimeRange {
            start,
            end,
            is_static: false,
        })
    }

    /// `T_target_source` at time `t`: maps source-frame coordinates into the
    /// target frame. Composes through the lowest common ancestor.
    pub fn lookup_transform(
        &self,
        target: &str,
        source: &str,
        t: f64,
    ) -> Result<Transform, TimelineError> {
        if target == source {
            return Ok(Transform::IDENTITY);
        }
        for f in [target, source] {
            if !self.has_frame(f) {
                return Err(TimelineError::UnknownFrame(f.into()));
            }
        }
        let up_source = self.chain(source);
        let up_target = self.chain(target);
        let common = up_source
            .iter()
            .position(|f| up_target.contains(f))
            .ok_or_else(|| TimelineError::NoPath {
                target: target.into(),
                source_frame: source.into(),
            })?;
        let ancestor = up_source[common];
        let lca_from_source = self.compose_up(&up_source[..common], t)?;
        let target_len = up_target
            .iter()
            .position(|f| *f == ancestor)
            .expect("common ancestor is on target chain");
        let lca_from_target = self.compose_up(&up_target[..target_len], t)?;
        Ok(match (lca_from_target, lca_from_source) {
            (None, Some(s)) => s,
            (Some(tg), None) => tg.inverse(),
            (Some(tg), Some(s)) => tg.inverse().compose(&s),
            (None, None) => Transform::IDENTITY,
        })
    }

    /// `T_ancestor_frame` for a chain segment `[frame, parent, ...]` whose
    /// last element's parent is the ancestor.
    fn compose_up(&self, chain: &[&str], t: f64) -> Result<Option<Transform>, TimelineError> {
        let mut acc: Option<Transform> = None;
        for &child in chain {
            let edge = &self.edges[child];
            let value = edge.value_at(child, t)?;
            acc = Some(match acc {
                None => value,
                Some(below) => value.compose(&below),
            });
        }
        Ok(acc)
    }
}

/// Parses a pose log; see the module documentation for the line format.
pub fn parse_pose_log<R: BufRead>(reader: R) -> Result<TransformTree, TimelineError> {
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let rec: PoseLogLine =
            serde_json::from_str(trimmed).map_err(|e| TimelineError::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })?;
        lines.push((line_no, rec));
    }
    TransformTree::from_lines(lines)
}

pub fn parse_pose_log_str(text: &str) -> Result<TransformTree, TimelineError> {
    parse_pose_log(text.as_bytes())
}

/// Fixed-rate replay window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayClock {
    pub start_time: f64,
    pub end_time: f64,
    pub frame_rate: f64,
}

impl ReplayClock {
    pub fn frame_count(&self) -> usize {
        assert!(self.frame_rate > 0.0, "frame rate must be positive");
        let span = (self.end_time - self.start_time).max(0.0);
        // tolerate representation error in spans that are whole multiples of 1/f
        (span * self.frame_rate + 1e-9).floor() as usize + 1
    }
}

/// `start + k/f` for k = 0.. while the time stays within `end`.
pub fn sample_times(clock: &ReplayClock) -> Vec<f64> {
    (0..clock.frame_count())
        .map(|k| (clock.start_time + k as f64 / clock.frame_rate).min(clock.end_time))
        .collect()
}
