//! Parameter bundle for the trace and interpolation statements.

use crate::dyadic::muckenhoupt_range;
use crate::error::{Error, Result};
use crate::norms::{check_exponent, check_p};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub alpha: f64,
    pub n: usize,
    pub k: usize,
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// Smallest integer strictly greater than `x` (and at least zero).
fn int_above(x: f64) -> u32 {
    if x < 0.0 {
        0
    } else {
        x.floor() as u32 + 1
    }
}

impl SpaceParams {
    pub fn new(s: f64, p: f64, q: f64, alpha: f64, n: usize, k: usize) -> Self {
        SpaceParams {
            s,
            p,
            q,
            r: p,
            alpha,
            n,
            k,
        }
    }

    /// Exponents, weight and codimension `1 <= k <= n - 1`.
    pub fn validate(&self) -> Result<()> {
        check_p(self.p)?;
        check_exponent("q", self.q)?;
        check_exponent("r", self.r)?;
        muckenhoupt_range(self.alpha)?;
        if !self.s.is_finite() {
            return Err(Error::InvalidExponent { name: "s", value: self.s });
        }
        if self.k < 1 || self.k + 1 > self.n {
            return Err(Error::Inadmissible(format!(
                "codimension must satisfy 1 <= k <= n - 1, got k = {}, n = {}",
                self.k, self.n
            )));
        }
        Ok(())
    }

    /// `r_0(w_alpha) = max(alpha + 1, 1)`.
    pub fn r0(&self) -> f64 {
        (self.alpha + 1.0).max(1.0)
    }

    /// Boundary smoothness `s - (alpha + k)/p`.
    pub fn trace_smoothness(&self) -> f64 {
        self.s - (self.alpha + self.k as f64) / self.p
    }

    /// `(n - k)(1/p - 1)_+`.
    pub fn trace_threshold(&self) -> f64 {
        (self.n - self.k) as f64 * pos(1.0 / self.p - 1.0)
    }

    pub fn is_trace_admissible(&self) -> bool {
        self.trace_smoothness() > self.trace_threshold()
    }

    /// Validation plus the trace inequality, echoed on failure.
    pub fn check_trace_admissible(&self) -> Result<()> {
        self.validate()?;
        if !self.is_trace_admissible() {
            return Err(Error::Inadmissible(format!(
                "s - (alpha + k)/p > (n - k)(1/p - 1)_+ fails: {} - ({} + {})/{} = {} <= {}",
                self.s,
                self.alpha,
                self.k,
                self.p,
                self.trace_smoothness(),
                self.trace_threshold()
            )));
        }
        Ok(())
    }

    /// `n (1/min(p/r_0, q) - 1)_+`.
    pub fn moment_threshold(&self) -> f64 {
        self.n as f64 * pos(1.0 / (self.p / self.r0()).min(self.q) - 1.0)
    }

    /// Atom smoothness order `K_min = floor(s) + 1`.
    pub fn k_min(&self) -> u32 {
        int_above(self.s)
    }

    /// Atom moment order, the smallest integer above the moment threshold.
    pub fn l_min(&self) -> u32 {
        int_above(self.moment_threshold())
    }

    /// Wavelet order: smallest integer above
    /// `max{s, (n-k)(1/p-1)_+ - s + (alpha+k)/p, n(1/min(p/r_0,q)-1)_+ - s}`.
    pub fn u_min(&self) -> u32 {
        let a = self.s;
        let b = self.trace_threshold() - self.s + (self.alpha + self.k as f64) / self.p;
        let c = self.moment_threshold() - self.s;
        int_above(a.max(b).max(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        let sp = SpaceParams::new(3.0, 2.0, 2.0, 0.0, 2, 1);
        assert!(sp.is_trace_admissible());
        assert_eq!(sp.k_min(), 4);
        assert_eq!(sp.l_min(), 1);
        assert_eq!(sp.u_min(), 4);
        let sp = SpaceParams::new(2.5, 1.5, 1.0, 0.5, 2, 1);
        // p / r0 = 1, so the moment threshold vanishes
        assert_eq!(sp.moment_threshold(), 0.0);
        assert_eq!(sp.k_min(), 3);
        assert_eq!(sp.u_min(), 3);
        let sp = SpaceParams::new(0.5, 0.5, 1.0, 0.0, 2, 1);
        assert_eq!(sp.trace_threshold(), 1.0);
        assert!(!sp.is_trace_admissible());
        let err = sp.check_trace_admissible().unwrap_err().to_string();
        assert!(err.contains("s - (alpha + k)/p"));
        assert_eq!(sp.l_min(), 3);
    }

    #[test]
    fn codimension_range() {
        assert!(SpaceParams::new(3.0, 2.0, 2.0, 0.0, 2, 2).validate().is_err());
        assert!(SpaceParams::new(3.0, 2.0, 2.0, 0.0, 2, 0).validate().is_err());
        assert!(SpaceParams::new(3.0, 2.0, 2.0, 0.0, 3, 2).validate().is_ok());
        assert!(SpaceParams::new(3.0, 2.0, 2.0, -1.0, 3, 2).validate().is_err());
    }
}
