//! One-axis parameter sweeps over a base scenario.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::sig9;
use crate::qos::CoherenceReport;
use crate::scalar::Real;

use super::{run_scenario, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    ThPos,
    BaseDelay,
    Loss,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::ThPos => "th_pos",
            SweepAxis::BaseDelay => "base_delay",
            SweepAxis::Loss => "loss",
        }
    }

    /// Copy of `base` with this axis set to `value`, validated.
    pub fn apply<T: Real>(self, base: &Scenario<T>, value: T) -> Result<Scenario<T>> {
        let mut sc = base.clone();
        match self {
            SweepAxis::ThPos => sc.dr.th_pos = value,
            SweepAxis::BaseDelay => sc.channel.base_delay = value,
            SweepAxis::Loss => sc.channel.loss = value,
        }
        sc.validate()?;
        Ok(sc)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "th_pos" => Ok(SweepAxis::ThPos),
            "base_delay" => Ok(SweepAxis::BaseDelay),
            "loss" => Ok(SweepAxis::Loss),
            other => Err(Error::validation(format!("unknown sweep axis {other:?} (th_pos, base_delay, loss)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow<T> {
    pub value: T,
    pub outcome: std::result::Result<CoherenceReport<T>, String>,
}

#[derive(Clone, Debug)]
pub struct SweepResult<T> {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow<T>>,
}

impl<T: Real> SweepResult<T> {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Columns: value, messages_sent, messages_dropped, max_error,
    /// total_violation_time, verdict, error. Failed rows leave the metrics empty.
    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "{},messages_sent,messages_dropped,max_error,total_violation_time,verdict,error\n",
            self.axis.name()
        );
        for row in &self.rows {
            let v = sig9(row.value.as_f64());
            match &row.outcome {
                Ok(r) => {
                    let _ = writeln!(
                        s,
                        "{v},{},{},{},{},{},",
                        r.messages_sent,
                        r.messages_dropped,
                        sig9(r.max_error.as_f64()),
                        sig9(r.total_violation_time.as_f64()),
                        if r.verdict.pass { "pass" } else { "fail" }
                    );
                }
                Err(e) => {
                    let _ = writeln!(s, "{v},,,,,,\"{}\"", e.replace('"', "'"));
                }
            }
        }
        s
    }
}

/// Runs `base` once per value, sharing the seed. A failing row records its
/// error and the sweep carries on; rows keep input order.
pub fn sweep<T: Real>(base: &Scenario<T>, axis: SweepAxis, values: &[T]) -> Result<SweepResult<T>> {
    if values.is_empty() {
        return Err(Error::validation("sweep needs at least one value"));
    }
    let rows = values
        .par_iter()
        .map(|&value| {
            let outcome = axis
                .apply(base, value)
                .and_then(|sc| run_scenario(&sc))
                .map(|out| out.report)
                .map_err(|e| e.to_string());
            SweepRow { value, outcome }
        })
        .collect();
    Ok(SweepResult { axis, rows })
}
