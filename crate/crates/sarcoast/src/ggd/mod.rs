//! Generalised gamma amplitude model.
//!
//! Single-channel SAR amplitude inside one superpixel is modelled by the
//! three-parameter generalised gamma density
//!
//! ```text
//! p(a) = |v| κ^κ / (σ Γ(κ)) · (a/σ)^(κv−1) · exp{ −κ (a/σ)^v },   a > 0
//! ```
//!
//! with `power` v ≠ 0, `shape` κ > 0 and `scale` σ > 0. The family covers
//! gamma (v = 1), Weibull (κ = 1), and inverse variants (v < 0), which is
//! what makes it a usable catch-all for sea clutter and land textures alike.
//!
//! Parameters are estimated by the method of log-cumulants: the first three
//! cumulants of `ln a` have closed forms in (v, κ, σ), and the ratio
//! c₃²/c₂³ = ψ₂(κ)²/ψ₁(κ)³ depends on κ alone and decreases monotonically
//! from 4 to 0, so κ is recovered by a bracketed root solve and v, σ follow
//! directly.

pub mod special;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use special::{digamma, ln_gamma, tetragamma, trigamma};

/// Minimum sample count for [`estimate_ggd`]; below this the moment-matching
/// noise makes the root solve meaningless.
pub const MIN_SAMPLES: usize = 30;

/// κ search bracket for the log-cumulant root solve.
const KAPPA_LO: f64 = 0.05;
const KAPPA_HI: f64 = 500.0;
/// Accepted residual on the cumulant ratio at the root.
const RATIO_TOL: f64 = 1e-10;
/// Log-variance below this is treated as a degenerate (near-constant) sample.
const MIN_LOG_VARIANCE: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum GgdError {
    #[error("invalid {name} = {value}: must be {requirement}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("amplitude samples must be positive and finite, found {0}")]
    NonPositiveSample(f64),
    #[error("estimation failed: {0}")]
    EstimationFailed(String),
}

/// Parameters of the generalised gamma density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GgdParams {
    /// Power v; any nonzero finite value, negative selects the inverse family.
    pub power: f64,
    /// Shape κ > 0.
    pub shape: f64,
    /// Scale σ > 0, in amplitude units.
    pub scale: f64,
}

impl GgdParams {
    pub fn new(power: f64, shape: f64, scale: f64) -> Result<Self, GgdError> {
        if !(power.is_finite() && power != 0.0) {
            return Err(GgdError::InvalidParam {
                name: "power",
                value: power,
                requirement: "finite and nonzero",
            });
        }
        if !(shape.is_finite() && shape > 0.0) {
            return Err(GgdError::InvalidParam {
                name: "shape",
                value: shape,
                requirement: "finite and > 0",
            });
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(GgdError::InvalidParam {
                name: "scale",
                value: scale,
                requirement: "finite and > 0",
            });
        }
        Ok(GgdParams {
            power,
            shape,
            scale,
        })
    }

    /// Natural log of the density at amplitude `a`; −∞ off the support.
    ///
    /// Evaluated fully in log space so large shapes (κ^κ would overflow
    /// directly for κ ≳ 143) stay finite.
    pub fn log_pdf(&self, a: f64) -> f64 {
        if !(a > 0.0) || !a.is_finite() {
            return f64::NEG_INFINITY;
        }
        let (v, k, s) = (self.power, self.shape, self.scale);
        let t = (a / s).ln();
        v.abs().ln() + k * k.ln() - s.ln() - ln_gamma(k) + (k * v - 1.0) * t
            - k * (v * t).exp()
    }

    /// Density at amplitude `a`; 0 off the support.
    pub fn pdf(&self, a: f64) -> f64 {
        self.log_pdf(a).exp()
    }

    /// The first three cumulants of `ln a` implied by these parameters.
    pub fn log_cumulants(&self) -> LogCumulants {
        let (v, k, s) = (self.power, self.shape, self.scale);
        LogCumulants {
            mean: s.ln() + (digamma(k) - k.ln()) / v,
            variance: trigamma(k) / (v * v),
            third_central: tetragamma(k) / (v * v * v),
        }
    }

    /// Draw `n` amplitudes using the supplied generator.
    ///
    /// Uses the gamma representation: X ~ Gamma(κ, 1) gives
    /// a = σ (X/κ)^(1/v). Draws whose transform degenerates to 0 or ∞ in
    /// f64 (possible for tiny κ with extreme v) are rejected and redrawn.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let gamma = Gamma::new(self.shape, 1.0).expect("shape > 0 by construction");
        let inv_v = 1.0 / self.power;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut a = self.scale;
            for _attempt in 0..1024 {
                let x: f64 = gamma.sample(rng);
                let cand = self.scale * (x / self.shape).powf(inv_v);
                if cand > 0.0 && cand.is_finite() {
                    a = cand;
                    break;
                }
            }
            out.push(a);
        }
        out
    }

    /// Draw `n` amplitudes from a fresh stream seeded with `seed`.
    pub fn sample_with_seed(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample(n, &mut rng)
    }
}

/// First three cumulants of the log-amplitude: mean, variance (n−1
/// denominator), and third central moment (n denominator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogCumulants {
    pub mean: f64,
    pub variance: f64,
    pub third_central: f64,
}

impl LogCumulants {
    /// Empirical log-cumulants of a positive sample. Needs at least 3 values.
    pub fn from_samples(samples: &[f64]) -> Result<Self, GgdError> {
        if samples.len() < 3 {
            return Err(GgdError::TooFewSamples {
                needed: 3,
                got: samples.len(),
            });
        }
        for &a in samples {
            if !(a > 0.0) || !a.is_finite() {
                return Err(GgdError::NonPositiveSample(a));
            }
        }
        let n = samples.len() as f64;
        let logs: Vec<f64> = samples.iter().map(|a| a.ln()).collect();
        let mean = logs.iter().sum::<f64>() / n;
        let mut m2 = 0.0;
        let mut m3 = 0.0;
        for &l in &logs {
            let d = l - mean;
            m2 += d * d;
            m3 += d * d * d;
        }
        Ok(LogCumulants {
            mean,
            variance: m2 / (n - 1.0),
            third_central: m3 / n,
        })
    }
}

/// Cumulant ratio c₃²/c₂³ as a function of κ alone.
fn kappa_ratio(k: f64) -> f64 {
    let t = tetragamma(k);
    let g = trigamma(k);
    (t * t) / (g * g * g)
}

impl GgdParams {
    /// Invert log-cumulants to parameters.
    ///
    /// κ solves ψ₂(κ)²/ψ₁(κ)³ = c₃²/c₂³ by a log-spaced bracket scan over
    /// [0.05, 500] followed by bisection (the ratio is monotone decreasing,
    /// 4 → 0). Then |v| = √(ψ₁(κ)/c₂) with sign(v) = −sign(c₃), and σ falls
    /// out of the mean.
    pub fn from_log_cumulants(lc: &LogCumulants) -> Result<Self, GgdError> {
        let (c1, c2, c3) = (lc.mean, lc.variance, lc.third_central);
        if !(c2.is_finite() && c3.is_finite() && c1.is_finite()) {
            return Err(GgdError::EstimationFailed(
                "non-finite log-cumulants".into(),
            ));
        }
        if c2 < MIN_LOG_VARIANCE {
            return Err(GgdError::EstimationFailed(format!(
                "log-variance {c2:.3e} is below {MIN_LOG_VARIANCE:.0e}; sample is (near-)constant"
            )));
        }
        if c3 == 0.0 {
            return Err(GgdError::EstimationFailed(
                "third log-cumulant is exactly zero; no finite shape matches".into(),
            ));
        }
        let target = (c3 * c3) / (c2 * c2 * c2);
        let kappa = solve_kappa(target)?;
        let v_abs = (trigamma(kappa) / c2).sqrt();
        let v = if c3 < 0.0 { v_abs } else { -v_abs };
        let sigma = (c1 - (digamma(kappa) - kappa.ln()) / v).exp();
        GgdParams::new(v, kappa, sigma).map_err(|e| {
            GgdError::EstimationFailed(format!("recovered parameters out of range: {e}"))
        })
    }
}

/// Root of `kappa_ratio(κ) = target` on [KAPPA_LO, KAPPA_HI].
fn solve_kappa(target: f64) -> Result<f64, GgdError> {
    let g = |k: f64| kappa_ratio(k) - target;
    let g_lo = g(KAPPA_LO);
    let g_hi = g(KAPPA_HI);
    if g_lo < 0.0 || g_hi > 0.0 {
        return Err(GgdError::EstimationFailed(format!(
            "cumulant ratio {target:.6e} has no shape root in [{KAPPA_LO}, {KAPPA_HI}]"
        )));
    }
    // Walk the bracket in multiplicative steps until the residual changes
    // sign, then bisect that cell.
    const STEPS: usize = 128;
    let factor = (KAPPA_HI / KAPPA_LO).powf(1.0 / STEPS as f64);
    let mut lo = KAPPA_LO;
    let mut hi = KAPPA_HI;
    let mut prev = g_lo;
    let mut x = KAPPA_LO;
    for _ in 0..STEPS {
        let next = (x * factor).min(KAPPA_HI);
        let cur = g(next);
        if prev >= 0.0 && cur <= 0.0 {
            lo = x;
            hi = next;
            break;
        }
        prev = cur;
        x = next;
    }
    let mut best = 0.5 * (lo + hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        best = mid;
        if gm.abs() <= RATIO_TOL || (hi - lo) <= mid * 1e-14 {
            return Ok(mid);
        }
        if gm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if g(best).abs() <= 1e-8 {
        Ok(best)
    } else {
        Err(GgdError::EstimationFailed(format!(
            "shape bisection stalled at κ = {best:.6}"
        )))
    }
}

/// Fit parameters to a sample, requiring at least [`MIN_SAMPLES`] values.
///
/// Two stages: the closed-form log-cumulant inversion supplies a starting
/// point, then a profile-likelihood search over the power refines it. The
/// third sample log-cumulant the inversion leans on is noisy — its
/// standard error grows like √κ, which at κ ≈ 20 leaves the shape several
/// percent uncertain even at 10⁵ samples — while the likelihood stage
/// recovers most of that efficiency. See [`estimate_ggd_with_min`] for the
/// inversion alone.
pub fn estimate_ggd(samples: &[f64]) -> Result<GgdParams, GgdError> {
    let molc = estimate_ggd_with_min(samples, MIN_SAMPLES)?;
    Ok(refine_ml(samples, molc))
}

/// Closed-form log-cumulant fit with a caller-chosen minimum sample count
/// (never below 3). No likelihood refinement — this is the cheap fit the
/// segmentation engine runs once per superpixel per sweep.
pub fn estimate_ggd_with_min(samples: &[f64], min_samples: usize) -> Result<GgdParams, GgdError> {
    let needed = min_samples.max(3);
    if samples.len() < needed {
        return Err(GgdError::TooFewSamples {
            needed,
            got: samples.len(),
        });
    }
    let lc = LogCumulants::from_samples(samples)?;
    GgdParams::from_log_cumulants(&lc)
}

/// Gamma maximum-likelihood shape: the root of ln κ − ψ(κ) = s, which is
/// strictly decreasing from +∞ to 0, so any s > 0 has exactly one root.
fn solve_ml_shape(s: f64) -> Option<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return None;
    }
    let mut k = (3.0 - s + ((s - 3.0) * (s - 3.0) + 24.0 * s).sqrt()) / (12.0 * s);
    if !(k.is_finite() && k > 0.0) {
        k = 1.0;
    }
    for _ in 0..80 {
        let f = k.ln() - digamma(k) - s;
        let fp = 1.0 / k - trigamma(k);
        let next = (k - f / fp).clamp(k / 8.0, k * 8.0);
        if !(next.is_finite() && next > 0.0) {
            return None;
        }
        if (next - k).abs() <= 1e-13 * k {
            return Some(next);
        }
        k = next;
    }
    Some(k)
}

/// Per-sample profile log-likelihood at power `v`, maximized in closed form
/// over shape and scale: y = aᵛ is gamma-distributed, so for fixed v the
/// inner problem is an exact gamma MLE on y.
fn profile_ll(samples: &[f64], mean_ln: f64, v: f64) -> Option<(f64, f64, f64)> {
    let m_v = samples.iter().map(|&a| a.powf(v)).sum::<f64>() / samples.len() as f64;
    if !(m_v > 0.0 && m_v.is_finite()) {
        return None;
    }
    let s = m_v.ln() - v * mean_ln;
    let kappa = solve_ml_shape(s)?;
    let ln_sigma = m_v.ln() / v;
    let ll = v.abs().ln() + kappa * kappa.ln() - ln_gamma(kappa) - ln_sigma
        + (kappa * v - 1.0) * (mean_ln - ln_sigma)
        - kappa;
    if !ll.is_finite() {
        return None;
    }
    Some((ll, kappa, ln_sigma))
}

/// Likelihood polish of a closed-form fit: golden-section maximization of
/// the power's profile likelihood on [v₀/2, 2v₀] (same sign branch as the
/// starting point). Falls back to the starting parameters whenever the
/// search fails to do at least as well.
fn refine_ml(samples: &[f64], init: GgdParams) -> GgdParams {
    let n = samples.len() as f64;
    let mean_ln = samples.iter().map(|&a| a.ln()).sum::<f64>() / n;
    let eval = |v: f64| profile_ll(samples, mean_ln, v);
    let Some((mut best_ll, _, _)) = eval(init.power) else {
        return init;
    };
    let mut best = init;

    let (mut lo, mut hi) = (init.power / 2.0, init.power * 2.0);
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi); // negative-power branch
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = hi - (hi - lo) * INV_PHI;
    let mut b = lo + (hi - lo) * INV_PHI;
    let (mut fa, mut fb) = (eval(a), eval(b));
    for _ in 0..70 {
        let keep_left = match (&fa, &fb) {
            (Some((la, ..)), Some((lb, ..))) => la > lb,
            (Some(_), None) => true,
            _ => false,
        };
        if keep_left {
            hi = b;
            b = a;
            fb = fa;
            a = hi - (hi - lo) * INV_PHI;
            fa = eval(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + (hi - lo) * INV_PHI;
            fb = eval(b);
        }
        if (hi - lo).abs() <= 1e-12 * init.power.abs() {
            break;
        }
    }
    for (v, f) in [(a, fa), (b, fb)] {
        if let Some((ll, kappa, ln_sigma)) = f {
            if ll > best_ll {
                if let Ok(p) = GgdParams::new(v, kappa, ln_sigma.exp()) {
                    best_ll = ll;
                    best = p;
                }
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
