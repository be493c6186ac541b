//! Operator profiles `φ` and their weak p-coercivity certificate.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{log_grid, slope_fit};
use crate::scalar::Real;

pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileDescriptor {
    PLaplacian { p: f64 },
    MeanCurvature {
        k: f64,
        /// (WpC) exponent; defaults to the largest admissible one.
        #[serde(default)]
        p: Option<f64>,
    },
    Custom { name: String },
}

/// `φ` with the certificate `φ(t) ≤ C t^{p−1}`.
#[derive(Clone)]
pub struct PhiProfile<T> {
    name: String,
    phi: ScalarFn<T>,
    phi_prime: Option<ScalarFn<T>>,
    wpc_p: T,
    wpc_c: T,
    p_interval: Option<(T, T)>,
    descriptor: ProfileDescriptor,
}

impl<T: Real> fmt::Debug for PhiProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiProfile")
            .field("name", &self.name)
            .field("p", &self.wpc_p)
            .field("C", &self.wpc_c)
            .field("p_interval", &self.p_interval)
            .finish()
    }
}

impl<T: Real> PhiProfile<T> {
    /// `φ(t) = t^{p−1}`, certified with `(p, 1)`.
    pub fn p_laplacian(p: T) -> Result<Self> {
        if !(p >= T::one()) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p.as_f64(),
                reason: "p-Laplacian needs p >= 1".into(),
            });
        }
        let pm1 = p - T::one();
        let phi: ScalarFn<T> = Arc::new(move |t: T| if t > T::zero() { t.powf(pm1) } else { T::zero() });
        let dphi: ScalarFn<T> = Arc::new(move |t: T| pm1 * t.powf(pm1 - T::one()));
        Ok(PhiProfile {
            name: format!("p_laplacian(p={p})"),
            phi,
            phi_prime: Some(dphi),
            wpc_p: p,
            wpc_c: T::one(),
            p_interval: Some((p, p)),
            descriptor: ProfileDescriptor::PLaplacian { p: p.as_f64() },
        })
    }

    /// `φ(t) = t^{k−1}(1+t^k)^{−1/2}`, weakly p-coercive with `C = 1` for
    /// every `p ∈ [k/2, k]`; certified with `p = k`.
    pub fn mean_curvature(k: T) -> Result<Self> {
        if !(k >= T::one()) {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k.as_f64(),
                reason: "mean curvature profile needs k >= 1".into(),
            });
        }
        let one = T::one();
        let half = T::lit(0.5);
        let phi: ScalarFn<T> = Arc::new(move |t: T| {
            if t > T::zero() {
                t.powf(k - one) / (one + t.powf(k)).sqrt()
            } else {
                T::zero()
            }
        });
        let dphi: ScalarFn<T> = Arc::new(move |t: T| {
            let tk = t.powf(k);
            let w = one + tk;
            (k - one) * t.powf(k - T::lit(2.0)) / w.sqrt() - half * k * t.powf(k + k - T::lit(2.0)) / (w * w.sqrt())
        });
        Ok(PhiProfile {
            name: format!("mean_curvature(k={k})"),
            phi,
            phi_prime: Some(dphi),
            wpc_p: k,
            wpc_c: T::one(),
            p_interval: Some((half * k, k)),
            descriptor: ProfileDescriptor::MeanCurvature { k: k.as_f64(), p: None },
        })
    }

    /// A user profile. The certificate `(p, C)` is checked by sampling on
    /// `[1e-6, 1e6]`.
    pub fn custom(
        name: impl Into<String>,
        phi: ScalarFn<T>,
        phi_prime: Option<ScalarFn<T>>,
        p: T,
        c: T,
        p_interval: Option<(T, T)>,
    ) -> Result<Self> {
        let name = name.into();
        let prof = PhiProfile {
            descriptor: ProfileDescriptor::Custom { name: name.clone() },
            name,
            phi,
            phi_prime,
            wpc_p: p,
            wpc_c: c,
            p_interval,
        };
        if !(p >= T::one()) || !(c > T::zero()) {
            return Err(Error::NotCoercive {
                p: p.as_f64(),
                reason: "need p >= 1 and C > 0".into(),
            });
        }
        let cert = prof.wpc_check(p, &SampleRange::default())?;
        if cert.c_est > c.as_f64() * (1.0 + 1e-9) {
            return Err(Error::NotCoercive {
                p: p.as_f64(),
                reason: format!("sampled sup φ/t^(p-1) = {} exceeds declared C = {}", cert.c_est, c),
            });
        }
        Ok(prof)
    }

    pub fn from_descriptor(desc: &ProfileDescriptor) -> Result<Self> {
        match desc {
            ProfileDescriptor::PLaplacian { p } => Self::p_laplacian(T::lit(*p)),
            ProfileDescriptor::MeanCurvature { k, p } => {
                let prof = Self::mean_curvature(T::lit(*k))?;
                match p {
                    Some(p) => prof.with_exponent(T::lit(*p)),
                    None => Ok(prof),
                }
            }
            ProfileDescriptor::Custom { name } => Err(Error::Format(format!(
                "custom profile {name:?} can only be built programmatically"
            ))),
        }
    }

    pub fn descriptor(&self) -> &ProfileDescriptor {
        &self.descriptor
    }

    /// Re-certifies the profile with another exponent from its interval.
    pub fn with_exponent(mut self, p: T) -> Result<Self> {
        let cert = self.wpc_check(p, &SampleRange::default())?;
        self.wpc_p = p;
        self.wpc_c = T::lit(cert.c_est).max(self.wpc_c);
        if let ProfileDescriptor::MeanCurvature { p: q, .. } = &mut self.descriptor {
            *q = Some(p.as_f64());
        }
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn phi(&self, t: T) -> T {
        (self.phi)(t)
    }

    pub fn phi_prime(&self, t: T) -> Result<T> {
        self.phi_prime
            .as_ref()
            .map(|d| d(t))
            .ok_or(Error::MissingDerivative("phi_prime"))
    }

    pub fn has_phi_prime(&self) -> bool {
        self.phi_prime.is_some()
    }

    /// `φ′` from the closure or, failing that, a central difference.
    pub fn phi_prime_or_fd(&self, t: T) -> T {
        match &self.phi_prime {
            Some(d) => d(t),
            None => {
                let h = t.abs().max(T::lit(1e-4)) * T::lit(1e-5);
                let lo = (t - h).max(T::zero());
                (self.phi(t + h) - self.phi(lo)) / (t + h - lo)
            }
        }
    }

    pub fn wpc_p(&self) -> T {
        self.wpc_p
    }

    pub fn wpc_c(&self) -> T {
        self.wpc_c
    }

    pub fn p_interval(&self) -> Option<(T, T)> {
        self.p_interval
    }

    /// Largest admissible (WpC) exponent.
    pub fn best_p(&self) -> Result<T> {
        self.p_interval.map(|(_, hi)| hi).ok_or(Error::NoInterval)
    }

    /// `S(t) = t^{p−1}/φ(t)`.
    pub fn s(&self, t: T) -> T {
        t.powf(self.wpc_p - T::one()) / self.phi(t)
    }

    /// Sampled infimum of `S` and the analytic lower bound `1/C`.
    pub fn s_star(&self, range: &SampleRange) -> (f64, f64) {
        let inf = log_grid(range.t_min, range.t_max, range.n)
            .into_iter()
            .map(|t| self.s(T::lit(t)).as_f64())
            .fold(f64::INFINITY, f64::min);
        (inf, 1.0 / self.wpc_c.as_f64())
    }

    /// Sampled certificate of `φ(t) ≤ C t^{p−1}`.
    ///
    /// Besides the sampled supremum, the log-log slope of `φ` over the last
    /// decade must not exceed `p−1` and over the first decade must not fall
    /// below it, otherwise the ratio is unbounded beyond the sampled range.
    pub fn wpc_check(&self, p: T, range: &SampleRange) -> Result<WpcCertificate> {
        let pf = p.as_f64();
        let fail = |reason: String| Error::NotCoercive { p: pf, reason };
        if !(pf >= 1.0) {
            return Err(fail("p must be >= 1".into()));
        }
        if !(range.t_min > 0.0) || range.t_max / range.t_min < 1e6 || range.n < 20 {
            return Err(Error::InvalidParameter {
                name: "t_range",
                value: range.t_max / range.t_min,
                reason: "samples must cover at least 6 decades with >= 20 points".into(),
            });
        }
        let phi0 = self.phi(T::zero()).as_f64();
        if phi0 != 0.0 {
            return Err(fail(format!("φ(0) = {phi0} is not zero")));
        }
        let ts = log_grid(range.t_min, range.t_max, range.n);
        let mut c_est = 0.0_f64;
        let mut logs = Vec::with_capacity(ts.len());
        for &t in &ts {
            let v = self.phi(T::lit(t)).as_f64();
            if !(v > 0.0) || !v.is_finite() {
                return Err(fail(format!("φ({t}) = {v} is not positive and finite")));
            }
            c_est = c_est.max(v / t.powf(pf - 1.0));
            logs.push((t.ln(), v.ln()));
        }
        let per_decade = (range.n as f64 / (range.t_max / range.t_min).log10()).ceil() as usize;
        let w = per_decade.clamp(4, logs.len() / 2);
        let head_slope = slope_fit(&logs[..w]);
        let tail_slope = slope_fit(&logs[logs.len() - w..]);
        let tol = 0.02;
        if tail_slope > pf - 1.0 + tol {
            return Err(fail(format!(
                "tail slope {tail_slope:.4} exceeds p-1 = {}",
                pf - 1.0
            )));
        }
        if head_slope < pf - 1.0 - tol {
            return Err(fail(format!(
                "head slope {head_slope:.4} is below p-1 = {}",
                pf - 1.0
            )));
        }
        Ok(WpcCertificate {
            p: pf,
            c_est,
            t_min: range.t_min,
            t_max: range.t_max,
            head_slope,
            tail_slope,
            extrapolated: true,
        })
    }
}

/// Log-spaced sampling range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRange {
    pub t_min: f64,
    pub t_max: f64,
    pub n: usize,
}

impl Default for SampleRange {
    fn default() -> Self {
        SampleRange {
            t_min: 1e-6,
            t_max: 1e6,
            n: 1000,
        }
    }
}

/// Outcome of [`PhiProfile::wpc_check`]. `extrapolated` records that the
/// bound beyond `[t_min, t_max]` rests on the slope fits only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WpcCertificate {
    pub p: f64,
    pub c_est: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub head_slope: f64,
    pub tail_slope: f64,
    pub extrapolated: bool,
}
