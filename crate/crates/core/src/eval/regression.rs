//! Least-squares fits of compositional against atomic adaptability.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Fits with fewer points are flagged as not significant.
pub const MIN_SIGNIFICANT_POINTS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Squared Pearson correlation.
    pub r2: f64,
    pub points: usize,
    /// False when `points < 20`.
    pub significant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paradigm: Option<String>,
}

/// Ordinary least squares of `y` on `x`.
///
/// Fewer than 20 points are refused unless `force` is set, in which case
/// the fit is returned with `significant == false`. Constant `y` gives
/// slope 0 and r² 0; constant `x` has no fit.
pub fn composition_regression(points: &[(f64, f64)], force: bool) -> Result<RegressionFit, EvalError> {
    let n = points.len();
    if n < 2 {
        return Err(EvalError::Regression(format!("{n} points; at least 2 are needed")));
    }
    if n < MIN_SIGNIFICANT_POINTS && !force {
        return Err(EvalError::Regression(format!("{n} points is below {MIN_SIGNIFICANT_POINTS}; pass force to fit anyway")));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(EvalError::Regression("non-finite coordinate".into()));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(EvalError::Regression("x has zero variance; the fit is undefined".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 0.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(RegressionFit {
        slope,
        intercept: my - slope * mx,
        r2,
        points: n,
        significant: n >= MIN_SIGNIFICANT_POINTS,
        function: None,
        paradigm: None,
    })
}

/// One compositional task with the adaptabilities of its constituents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionRow {
    pub task: String,
    pub function: String,
    pub paradigm: String,
    pub atomic: Vec<f64>,
    pub compositional: f64,
}

impl CompositionRow {
    /// Mean atomic adaptability.
    pub fn x(&self) -> f64 {
        self.atomic.iter().sum::<f64>() / self.atomic.len() as f64
    }
}

/// Parses `task<TAB>function<TAB>paradigm<TAB>a1,a2,...<TAB>compositional`
/// lines. Blank lines, `#` comments and a leading `task` header are skipped.
pub fn parse_composition_table(text: &str, path: &str) -> Result<Vec<CompositionRow>, EvalError> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let bad = |message: String| EvalError::Malformed { path: path.to_string(), line: idx + 1, message };
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || (rows.is_empty() && trimmed.starts_with("task\t")) {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [task, function, paradigm, atomic, comp] = cols[..] else {
            return Err(bad("expected five tab-separated columns".into()));
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("`{s}` is not a number")));
        let atomic = atomic.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
        if atomic.is_empty() {
            return Err(bad("no atomic adaptabilities".into()));
        }
        rows.push(CompositionRow {
            task: task.to_string(),
            function: function.to_string(),
            paradigm: paradigm.to_string(),
            atomic,
            compositional: num(comp)?,
        });
    }
    Ok(rows)
}

/// Outcome of fitting one (function, paradigm) group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupFit {
    pub function: String,
    pub paradigm: String,
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<RegressionFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Fits every (composition function, paradigm) group, in key order.
pub fn fit_groups(rows: &[CompositionRow], force: bool) -> Vec<GroupFit> {
    let mut groups: BTreeMap<(&str, &str), Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        groups.entry((&r.function, &r.paradigm)).or_default().push((r.x(), r.compositional));
    }
    groups
        .into_iter()
        .map(|((function, paradigm), pts)| {
            let (fit, error) = match composition_regression(&pts, force) {
                Ok(mut f) => {
                    f.function = Some(function.to_string());
                    f.paradigm = Some(paradigm.to_string());
                    (Some(f), None)
                }
                Err(e) => (None, Some(e.to_string())),
            };
            GroupFit { function: function.to_string(), paradigm: paradigm.to_string(), points: pts.len(), fit, error }
        })
        .collect()
}
