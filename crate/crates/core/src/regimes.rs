//! The expansion factor `Φ = ⌈ln n / ln np⌉`, finite-`n` margin diagnostics
//! and the classification of `(Δ_u, Δ_ℓ, Φ)` into the three diameter regimes.

use serde::{Deserialize, Serialize};

use crate::distance::Distance;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::partition::{
    check_diff2, delta_bounds_with, walk_condition, DeltaBounds, DeltaOptions, WalkCondition,
};
use crate::sampler::default_omega;

/// Relative distance to an integer below which `ln n / ln np` is snapped.
pub const SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phi {
    pub value: u32,
    /// `ln n / ln np` before rounding.
    pub ratio: f64,
    /// Whether the ratio was snapped to a nearby integer.
    pub snapped: bool,
}

fn log_ratio(n: usize, p: f64) -> Result<f64> {
    let np = n as f64 * p;
    if !(np > 1.0) || !np.is_finite() {
        return Err(Error::Domain(format!("np = {np} must exceed 1")));
    }
    Ok((n as f64).ln() / np.ln())
}

pub fn phi(n: usize, p: f64) -> Result<Phi> {
    let ratio = log_ratio(n, p)?;
    let nearest = ratio.round();
    let snapped = ratio != nearest && (ratio - nearest).abs() <= SNAP_TOL * ratio.abs().max(1.0);
    let value = if snapped { nearest } else { ratio.ceil() };
    Ok(Phi {
        value: value as u32,
        ratio,
        snapped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeMargin {
    /// Distance from `ln n / ln np` to the nearest integer.
    pub margin: f64,
    /// `2 ln ln n / ln np`.
    pub threshold: f64,
    pub ok: bool,
}

pub fn lattice_margin(n: usize, p: f64) -> Result<LatticeMargin> {
    let ratio = log_ratio(n, p)?;
    let margin = (ratio - ratio.round()).abs();
    let threshold = 2.0 * (n as f64).ln().ln() / (n as f64 * p).ln();
    Ok(LatticeMargin {
        margin,
        threshold,
        ok: margin >= threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiamMargins {
    /// `(np)^Φ / n − ω ln n`; should be large and positive.
    pub upper: f64,
    /// `(np)^{Φ−1} / n − ln n / ω`; should be large and negative.
    pub lower: f64,
}

pub fn diam_margins(n: usize, p: f64, omega: f64) -> Result<DiamMargins> {
    let phi = phi(n, p)?.value as f64;
    let ln_n = (n as f64).ln();
    let ln_np = (n as f64 * p).ln();
    Ok(DiamMargins {
        upper: (phi * ln_np - ln_n).exp() - omega * ln_n,
        lower: ((phi - 1.0) * ln_np - ln_n).exp() - ln_n / omega,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `Φ < Δ_u`: the partition structure dominates.
    I,
    /// `Δ_u ≤ Φ < Δ_ℓ`.
    Ii,
    /// `Δ_ℓ ≤ Φ`: Erdős–Rényi-like, `Φ` or `Φ + 1`.
    Iii,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub regime: Regime,
    /// Inclusive `[lo, hi]` range predicted for the diameter.
    pub interval: [u32; 2],
}

/// Regime and predicted diameter range. `delta_l` must be finite and
/// `Δ_u ≤ Δ_ℓ ≤ Δ_u + 2`.
pub fn classify(
    delta_u: Distance,
    delta_l: Distance,
    phi: u32,
    walk: WalkCondition,
) -> Result<Classification> {
    let consistent = crate::partition::check_diff2_values(delta_u, delta_l)
        .map_err(|_| Error::Precondition("Δ_ℓ is infinite; no regime applies".into()))?;
    if !consistent {
        return Err(Error::Precondition(format!(
            "inconsistent bounds Δ_u = {delta_u}, Δ_ℓ = {delta_l}"
        )));
    }
    let du = delta_u.finite().expect("Δ_u ≤ Δ_ℓ < ∞");
    let dl = delta_l.finite().expect("checked");
    Ok(if phi < du {
        Classification {
            regime: Regime::I,
            interval: [du, dl],
        }
    } else if phi < dl {
        let lo = if walk == WalkCondition::Holds { phi + 1 } else { phi };
        Classification {
            regime: Regime::Ii,
            interval: [lo, dl],
        }
    } else {
        let interval = match walk {
            WalkCondition::Holds => [phi + 1, phi + 1],
            WalkCondition::Fails => [phi, phi],
            WalkCondition::Unknown => [phi, phi + 1],
        };
        Classification {
            regime: Regime::Iii,
            interval,
        }
    })
}

#[derive(Debug, Clone, Default)]
pub struct PredictOptions {
    pub omega: Option<f64>,
    pub delta: DeltaOptions,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub n: usize,
    pub p: f64,
    pub phi: u32,
    pub ratio: f64,
    pub phi_snapped: bool,
    pub lattice_margin: f64,
    pub lattice_threshold: f64,
    pub margin_ok: bool,
    pub omega: f64,
    pub diam_margin_upper: f64,
    pub diam_margin_lower: f64,
    pub delta: DeltaBounds,
    pub isolation: f64,
    pub isolation_exact: bool,
    pub walk_condition: WalkCondition,
    /// `None` when the kernel is outside the hypotheses of the prediction.
    pub regime: Option<Regime>,
    pub predicted_interval: Option<[u32; 2]>,
    /// Conditions that undermine the prediction at this `n`.
    pub diagnostics: Vec<String>,
    /// Remarks that do not affect the verdict.
    pub notes: Vec<String>,
}

impl RegimeReport {
    pub fn flagged(&self) -> bool {
        !self.diagnostics.is_empty()
    }

    pub fn predicts(&self, d: Distance) -> Option<bool> {
        let [lo, hi] = self.predicted_interval?;
        Some(matches!(d, Distance::Finite(x) if lo <= x && x <= hi))
    }
}

pub fn predict(kernel: &Kernel, n: usize, p: f64) -> Result<RegimeReport> {
    predict_with(kernel, n, p, &PredictOptions::default())
}

pub fn predict_with(kernel: &Kernel, n: usize, p: f64, options: &PredictOptions) -> Result<RegimeReport> {
    let ph = phi(n, p)?;
    let lm = lattice_margin(n, p)?;
    let omega = options.omega.unwrap_or_else(|| default_omega(n));
    let dm = diam_margins(n, p, omega)?;
    let delta = delta_bounds_with(kernel, &options.delta)?;
    let iso = kernel.isolation();
    let walk = walk_condition(kernel, ph.value)?;
    let mut diagnostics = Vec::new();
    let mut notes = Vec::new();
    if !lm.ok {
        diagnostics.push(format!(
            "concentration not guaranteed: ln n/ln np = {:.4} is {:.4} from an integer, below 2 ln ln n/ln np = {:.4}",
            ph.ratio, lm.margin, lm.threshold
        ));
    }
    if dm.upper <= 0.0 {
        diagnostics.push(format!("(np)^Φ/n − ω ln n = {:.4} is not positive", dm.upper));
    }
    if dm.lower >= 0.0 {
        diagnostics.push(format!("(np)^(Φ−1)/n − ln n/ω = {:.4} is not negative", dm.lower));
    }
    if ph.snapped {
        notes.push(format!("ln n/ln np = {} snapped to {}", ph.ratio, ph.value));
    }
    if !delta.exact {
        notes.push(format!(
            "Δ values are grid estimates (resolution {})",
            delta.resolution.unwrap_or(0)
        ));
    }
    if !iso.exact {
        notes.push("λ_ is a lattice estimate".into());
    }
    let mut out_of_scope = Vec::new();
    if !delta.irreducible {
        out_of_scope.push("the kernel is reducible".to_string());
    } else if !delta.delta_l.is_finite() {
        out_of_scope.push("Δ_ℓ is infinite".to_string());
    }
    if iso.value <= 0.0 {
        out_of_scope.push("λ_ = 0".to_string());
    }
    let classification = if out_of_scope.is_empty() {
        if !check_diff2(&delta)? {
            return Err(Error::Invariant(format!(
                "estimated Δ_u = {}, Δ_ℓ = {} violate Δ_u ≤ Δ_ℓ ≤ Δ_u + 2",
                delta.delta_u, delta.delta_l
            )));
        }
        Some(classify(delta.delta_u, delta.delta_l, ph.value, walk)?)
    } else {
        for r in out_of_scope {
            diagnostics.push(format!("outside the hypotheses: {r}"));
        }
        None
    };
    Ok(RegimeReport {
        n,
        p,
        phi: ph.value,
        ratio: ph.ratio,
        phi_snapped: ph.snapped,
        lattice_margin: lm.margin,
        lattice_threshold: lm.threshold,
        margin_ok: lm.ok,
        omega,
        diam_margin_upper: dm.upper,
        diam_margin_lower: dm.lower,
        delta,
        isolation: iso.value,
        isolation_exact: iso.exact,
        walk_condition: walk,
        regime: classification.map(|c| c.regime),
        predicted_interval: classification.map(|c| c.interval),
        diagnostics,
        notes,
    })
}
