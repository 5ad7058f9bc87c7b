//! Log–log and log-linear fitting shared by every asymptotic check.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Converges,
    Diverges,
    /// Reported value only, no assertion attached.
    Info,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_success(self) -> bool {
        !matches!(self, Verdict::Fail)
    }
}

/// Ordinary least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    /// Standard error of the slope (zero when fewer than three samples).
    pub slope_stderr: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len(), "fit_line: length mismatch");
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return LineFit {
            slope: f64::NAN,
            intercept: ys.first().copied().unwrap_or(f64::NAN),
            residual: 0.0,
            slope_stderr: 0.0,
        };
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let residual = (ss / n).sqrt();
    let slope_stderr = if xs.len() > 2 && sxx > 0.0 {
        (ss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        residual,
        slope_stderr,
    }
}

/// Fit `log y` against `log x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> LineFit {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().max(1e-300).ln()).collect();
    fit_line(&lx, &ly)
}

/// Samples, fitted exponent and verdict for one asymptotic claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub name: String,
    /// `(x, y)` samples, in the units named by `x_label` / `y_label`.
    pub samples: Vec<(f64, f64)>,
    pub x_label: String,
    pub y_label: String,
    /// Fitted exponent (slope of the chosen model).
    pub exponent: f64,
    pub intercept: f64,
    pub residual: f64,
    /// Two-standard-error band on the exponent.
    pub band: (f64, f64),
    pub model: String,
    pub verdict: Verdict,
    /// Free-form scalar diagnostics (constants, ratios, ...).
    pub extras: Vec<(String, f64)>,
    pub note: String,
}

impl FitReport {
    pub fn from_line(name: &str, samples: Vec<(f64, f64)>, fit: LineFit, model: &str) -> Self {
        FitReport {
            name: name.to_string(),
            samples,
            x_label: "x".into(),
            y_label: "y".into(),
            exponent: fit.slope,
            intercept: fit.intercept,
            residual: fit.residual,
            band: (
                fit.slope - 2.0 * fit.slope_stderr,
                fit.slope + 2.0 * fit.slope_stderr,
            ),
            model: model.to_string(),
            verdict: Verdict::Info,
            extras: Vec::new(),
            note: String::new(),
        }
    }

    /// Log–log fit of the samples.
    pub fn loglog(name: &str, samples: Vec<(f64, f64)>) -> Self {
        let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let fit = fit_loglog(&xs, &ys);
        Self::from_line(name, samples, fit, "power")
    }

    pub fn labels(mut self, x: &str, y: &str) -> Self {
        self.x_label = x.to_string();
        self.y_label = y.to_string();
        self
    }

    pub fn with_verdict(mut self, verdict: Verdict) -> Self {
        self.verdict = verdict;
        self
    }

    pub fn extra(mut self, key: &str, value: f64) -> Self {
        self.extras.push((key.to_string(), value));
        self
    }

    pub fn get_extra(&self, key: &str) -> Option<f64> {
        self.extras.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn note(mut self, note: &str) -> Self {
        self.note = note.to_string();
        self
    }
}
