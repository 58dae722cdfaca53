//! Primal gap, primal gap function and primal integral.

use crate::error::{Error, Result};

/// Relative tolerance for the `|c x| = |c x*|` branch of the primal gap.
pub const MAGNITUDE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

impl std::str::FromStr for Sense {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "min" | "minimize" => Ok(Sense::Min),
            "max" | "maximize" => Ok(Sense::Max),
            other => Err(Error::Invalid(format!("unknown sense `{other}`, expected min or max"))),
        }
    }
}

/// Normalized distance between an objective value and the best known one, in `[0, 1]`.
///
/// Opposite signs give 1 even when the magnitudes agree.
pub fn primal_gap(cx: f64, cxstar: f64) -> f64 {
    let (a, b) = (cx.abs(), cxstar.abs());
    if cx * cxstar < 0.0 {
        1.0
    } else if (a - b).abs() <= MAGNITUDE_TOLERANCE * a.max(b) {
        0.0
    } else {
        (cx - cxstar).abs() / a.max(b)
    }
}

/// Incumbent values over time for one solve.
#[derive(Clone, Debug, PartialEq)]
pub struct IncumbentTimeline {
    events: Vec<(f64, f64)>,
    best_known: f64,
    sense: Sense,
}

impl IncumbentTimeline {
    /// Events must have strictly increasing nonnegative times and strictly
    /// improving objective values.
    pub fn new(events: Vec<(f64, f64)>, best_known: f64, sense: Sense) -> Result<Self> {
        if !best_known.is_finite() {
            return Err(Error::InvalidTimeline("best known value must be finite".into()));
        }
        for (i, &(t, v)) in events.iter().enumerate() {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::InvalidTimeline(format!("event {} has invalid time {t}", i + 1)));
            }
            if !v.is_finite() {
                return Err(Error::InvalidTimeline(format!("event {} has invalid value {v}", i + 1)));
            }
            if i > 0 {
                let (pt, pv) = events[i - 1];
                if t <= pt {
                    return Err(Error::InvalidTimeline(format!(
                        "event {} at time {t} does not follow time {pt}",
                        i + 1
                    )));
                }
                let improves = match sense {
                    Sense::Min => v < pv,
                    Sense::Max => v > pv,
                };
                if !improves {
                    return Err(Error::InvalidTimeline(format!(
                        "event {} value {v} does not improve on {pv}",
                        i + 1
                    )));
                }
            }
        }
        Ok(Self {
            events,
            best_known,
            sense,
        })
    }

    pub fn empty(best_known: f64, sense: Sense) -> Self {
        Self {
            events: Vec::new(),
            best_known,
            sense,
        }
    }

    pub fn events(&self) -> &[(f64, f64)] {
        &self.events
    }

    pub fn best_known(&self) -> f64 {
        self.best_known
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Gap of an objective value, after mapping maximization to minimization.
    pub fn gap_of(&self, value: f64) -> f64 {
        match self.sense {
            Sense::Min => primal_gap(value, self.best_known),
            Sense::Max => primal_gap(-value, -self.best_known),
        }
    }

    /// Reads `time_seconds,objective_value` rows.
    pub fn from_csv(source: &str, best_known: f64, sense: Sense) -> Result<Self> {
        const HEADER: &str = "time_seconds,objective_value";
        let mut header_seen = false;
        let mut events = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let row = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                let header: Vec<&str> = line.split(',').map(str::trim).collect();
                if header.join(",") != HEADER {
                    return Err(Error::Parse {
                        row,
                        message: format!("expected header `{HEADER}`"),
                    });
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::Parse {
                    row,
                    message: format!("expected 2 fields, found {}", fields.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    row,
                    message: format!("`{s}` is not a number"),
                })
            };
            events.push((parse(fields[0])?, parse(fields[1])?));
        }
        if !header_seen {
            return Err(Error::Parse {
                row: 0,
                message: format!("missing header `{HEADER}`"),
            });
        }
        Self::new(events, best_known, sense)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_seconds,objective_value\n");
        for (t, v) in &self.events {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }
}

/// Piecewise-constant gap over time; each segment starts at its time and
/// runs until the next one (right-continuous).
#[derive(Clone, Debug, PartialEq)]
pub struct GapFunction {
    pub segments: Vec<(f64, f64)>,
}

impl GapFunction {
    /// Gap value at time `t >= 0`.
    pub fn at(&self, t: f64) -> f64 {
        let k = self.segments.partition_point(|&(start, _)| start <= t);
        self.segments[k.max(1) - 1].1
    }

    /// Area under the function on `[0, horizon]`, segment by segment.
    pub fn area(&self, horizon: f64) -> f64 {
        let mut area = 0.0;
        for (i, &(start, gap)) in self.segments.iter().enumerate() {
            if start >= horizon {
                break;
            }
            let end = self
                .segments
                .get(i + 1)
                .map_or(horizon, |&(next, _)| next.min(horizon));
            area += gap * (end - start);
        }
        area
    }
}

pub fn gap_function(tl: &IncumbentTimeline) -> GapFunction {
    let mut segments = Vec::with_capacity(tl.events.len() + 1);
    if tl.events.first().is_none_or(|&(t, _)| t > 0.0) {
        segments.push((0.0, 1.0));
    }
    segments.extend(tl.events.iter().map(|&(t, v)| (t, tl.gap_of(v))));
    GapFunction { segments }
}

/// Area under the primal gap function up to `horizon`, as a step sum over
/// incumbent times. Events after the horizon are ignored.
pub fn primal_integral(tl: &IncumbentTimeline, horizon: f64) -> Result<f64> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidTimeLimit(horizon));
    }
    let mut total = 0.0;
    let mut prev_time = 0.0;
    let mut prev_gap = 1.0;
    for &(t, v) in tl.events.iter().take_while(|&&(t, _)| t <= horizon) {
        total += prev_gap * (t - prev_time);
        prev_time = t;
        prev_gap = tl.gap_of(v);
    }
    total += prev_gap * (horizon - prev_time);
    // gaps never exceed 1; drop rounding that would push the sum past the horizon
    Ok(total.min(horizon))
}
