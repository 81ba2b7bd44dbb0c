use std::fmt::Write as _;

use super::{best_action, LogicTable};
use crate::airspace::Advisory;
use crate::{Error, Result};

/// Greedy policy over `(τ, h)` with the rates and previous advisory fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySlice {
    pub hdot0: f64,
    pub hdot1: f64,
    pub a_prev: Advisory,
    pub h: Vec<f64>,
    /// `actions[τ][h index]`.
    pub actions: Vec<Vec<Advisory>>,
}

/// Cell labels for CSV export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceLabels {
    /// Advisory names (`COC`, `DES1500`, ...).
    Advisory,
    /// `COC`, `up` or `down`.
    Sense,
}

/// Argmax advisory at every `(τ, h)` vertex for fixed on-grid rates and
/// previous advisory.
pub fn policy_slice(table: &LogicTable, hdot0: f64, hdot1: f64, a_prev: Advisory) -> Result<PolicySlice> {
    let g = table.grid();
    let (i0, i1) = match g.find_rates(hdot0, hdot1) {
        Some(r) => r,
        None if g.find_rates(hdot0, g.hdot1()[0]).is_none() => {
            return Err(Error::OffGrid { axis: "hdot0", value: hdot0 })
        }
        None => return Err(Error::OffGrid { axis: "hdot1", value: hdot1 }),
    };
    let ia =
        g.advisory_index(a_prev).ok_or_else(|| Error::Contract(format!("advisory {a_prev} is not on the table")))?;
    let actions = (0..=g.tau_max())
        .map(|tau| {
            (0..g.h().len())
                .map(|ih| {
                    let s = g.state_index(tau, ia, g.kinematic_index(ih, i0, i1));
                    best_action(g.advisories(), table.action_values(s))
                })
                .collect()
        })
        .collect();
    Ok(PolicySlice { hdot0, hdot1, a_prev, h: g.h().to_vec(), actions })
}

impl PolicySlice {
    /// One row per τ, one column per altitude cut point:
    ///
    /// ```text
    /// tau,-4000,...,4000
    /// 0,COC,...,COC
    /// ```
    pub fn to_csv(&self, labels: SliceLabels) -> String {
        let mut out = String::from("tau");
        for h in &self.h {
            write!(out, ",{h}").unwrap();
        }
        out.push('\n');
        for (tau, row) in self.actions.iter().enumerate() {
            write!(out, "{tau}").unwrap();
            for a in row {
                let cell = match (labels, a.sense()) {
                    (SliceLabels::Advisory, _) => a.name(),
                    (SliceLabels::Sense, None) => "COC",
                    (SliceLabels::Sense, Some(s)) => s.label(),
                };
                write!(out, ",{cell}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses a CSV written by [`PolicySlice::to_csv`] back into
    /// `(h cut points, label rows)`.
    pub fn parse_csv(text: &str) -> Result<(Vec<f64>, Vec<Vec<String>>)> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(Error::Empty("policy slice CSV"))?;
        let h = header
            .split(',')
            .skip(1)
            .map(|f| f.parse::<f64>().map_err(|e| Error::TraceFormat { line: 1, msg: format!("bad h `{f}`: {e}") }))
            .collect::<Result<Vec<_>>>()?;
        let rows = lines.map(|l| l.split(',').skip(1).map(str::to_owned).collect::<Vec<_>>()).collect::<Vec<_>>();
        if let Some(i) = rows.iter().position(|r| r.len() != h.len()) {
            return Err(Error::TraceFormat { line: i + 2, msg: "row width differs from header".into() });
        }
        Ok((h, rows))
    }
}
