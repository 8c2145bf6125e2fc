//! Lag-window kernels (smoothing across autocovariance lags) and
//! time-direction kernels (smoothing across rescaled time).
//!
//! Lag kernels satisfy `K(0) = 1`, `K(x) = K(-x)` and `|K| <= 1`. The
//! time kernel lives on `[0, 1]`, integrates to one and is symmetric about
//! `1/2`. Only the parabolic time kernel `6x(1-x)` is provided.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LrvError, Result};

/// Below this `|x|` the quadratic-spectral kernel is evaluated by its Taylor
/// series; the closed form loses ~1e-9 to cancellation near `1e-4`.
const QS_SERIES_CUTOFF: f64 = 2e-2;

/// Kernel applied to lagged autocovariances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LagKernel {
    QuadraticSpectral,
    Bartlett,
    Parzen,
    TukeyHanning,
    Truncated,
}

/// Kernel applied across time within a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TimeKernel {
    /// `6x(1-x)` on `[0, 1]`.
    #[default]
    Parabolic,
}

/// Smoothness constants of a lag kernel used by plug-in bandwidth rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagKernelConstants {
    /// Characteristic exponent `q`.
    pub q: u32,
    /// `lim_{x -> 0} (1 - K(x)) / |x|^q`.
    pub k1q: f64,
    /// `∫ K(x)^2 dx` over the real line.
    pub l2norm: f64,
}

impl LagKernel {
    pub const ALL: [LagKernel; 5] = [
        LagKernel::QuadraticSpectral,
        LagKernel::Bartlett,
        LagKernel::Parzen,
        LagKernel::TukeyHanning,
        LagKernel::Truncated,
    ];

    /// Kernel weight at `x`.
    pub fn eval(self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            LagKernel::QuadraticSpectral => quadratic_spectral(a),
            LagKernel::Bartlett => {
                if a <= 1.0 {
                    1.0 - a
                } else {
                    0.0
                }
            }
            LagKernel::Parzen => {
                if a <= 0.5 {
                    1.0 - 6.0 * a * a + 6.0 * a * a * a
                } else if a <= 1.0 {
                    2.0 * (1.0 - a).powi(3)
                } else {
                    0.0
                }
            }
            LagKernel::TukeyHanning => {
                if a <= 1.0 {
                    0.5 * (1.0 + (PI * a).cos())
                } else {
                    0.0
                }
            }
            LagKernel::Truncated => {
                if a <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// True when the kernel vanishes for `|x| > 1`.
    pub fn has_compact_support(self) -> bool {
        !matches!(self, LagKernel::QuadraticSpectral)
    }

    /// `(q, K_q, ∫K²)`. The truncated kernel has no finite `K_q` for `q > 0`.
    pub fn constants(self) -> Result<LagKernelConstants> {
        let c = match self {
            LagKernel::QuadraticSpectral => LagKernelConstants {
                q: 2,
                k1q: 18.0 * PI * PI / 125.0,
                l2norm: 1.0,
            },
            LagKernel::Bartlett => LagKernelConstants {
                q: 1,
                k1q: 1.0,
                l2norm: 2.0 / 3.0,
            },
            LagKernel::Parzen => LagKernelConstants {
                q: 2,
                k1q: 6.0,
                l2norm: 151.0 / 280.0,
            },
            LagKernel::TukeyHanning => LagKernelConstants {
                q: 2,
                k1q: PI * PI / 4.0,
                l2norm: 0.75,
            },
            LagKernel::Truncated => {
                return Err(LrvError::Config(
                    "truncated kernel has no finite smoothness index".into(),
                ))
            }
        };
        Ok(c)
    }

    pub fn name(self) -> &'static str {
        match self {
            LagKernel::QuadraticSpectral => "qs",
            LagKernel::Bartlett => "bartlett",
            LagKernel::Parzen => "parzen",
            LagKernel::TukeyHanning => "tukey-hanning",
            LagKernel::Truncated => "truncated",
        }
    }
}

fn quadratic_spectral(a: f64) -> f64 {
    let z = 6.0 * PI * a / 5.0;
    if a < QS_SERIES_CUTOFF {
        // K(x) = sum_m (-1)^m 6(m+1) z^{2m} / (2m+3)!
        let z2 = z * z;
        let mut term_fact = 6.0; // (2m+3)! at m = 0
        let mut zpow = 1.0;
        let mut sum = 0.0;
        for m in 0..7u32 {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * 6.0 * f64::from(m + 1) * zpow / term_fact;
            zpow *= z2;
            let n = f64::from(2 * m + 4);
            term_fact *= n * (n + 1.0);
        }
        sum
    } else {
        25.0 / (12.0 * PI * PI * a * a) * (z.sin() / z - z.cos())
    }
}

impl TimeKernel {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            TimeKernel::Parabolic => {
                if (0.0..=1.0).contains(&x) {
                    6.0 * x * (1.0 - x)
                } else {
                    0.0
                }
            }
        }
    }

    /// `∫₀¹ K(x) dx` over `[0, u]`, used to size boundary windows.
    pub fn cdf(self, u: f64) -> f64 {
        match self {
            TimeKernel::Parabolic => {
                let u = u.clamp(0.0, 1.0);
                3.0 * u * u - 2.0 * u * u * u
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TimeKernel::Parabolic => "parabolic",
        }
    }
}

impl fmt::Display for LagKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for TimeKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LagKernel {
    type Err = LrvError;

    fn from_str(s: &str) -> Result<Self> {
        LagKernel::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| LrvError::Config(format!("unknown lag kernel '{s}'")))
    }
}

impl FromStr for TimeKernel {
    type Err = LrvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parabolic" => Ok(TimeKernel::Parabolic),
            other => Err(LrvError::Config(format!("unknown time kernel '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Composite Simpson rule; exact for the cubic pieces used below.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = if n % 2 == 1 { n + 1 } else { n };
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn point_values() {
        assert_eq!(LagKernel::QuadraticSpectral.eval(0.0), 1.0);
        assert_eq!(LagKernel::Bartlett.eval(0.5), 0.5);
        // mpmath, 30 digits
        let v1 = 0.137_860_581_674_593_55;
        assert!((LagKernel::QuadraticSpectral.eval(1.0) - v1).abs() < 1e-14);
        assert!((LagKernel::QuadraticSpectral.eval(0.5) - 0.686_930_730_064_059_4).abs() < 1e-14);
        assert!((LagKernel::QuadraticSpectral.eval(2.5) - 0.033_773_727_880_779_26).abs() < 1e-14);
        assert_eq!(TimeKernel::Parabolic.eval(0.5), 1.5);
        assert_eq!(TimeKernel::Parabolic.eval(0.0), 0.0);
        assert_eq!(TimeKernel::Parabolic.eval(1.2), 0.0);
    }

    #[test]
    fn qs_is_continuous_at_zero() {
        let k = LagKernel::QuadraticSpectral;
        assert!((k.eval(1e-5) - 1.0).abs() < 1e-8);
        let x = QS_SERIES_CUTOFF;
        let z = 6.0 * PI * x / 5.0;
        let closed = 25.0 / (12.0 * PI * PI * x * x) * (z.sin() / z - z.cos());
        let below = k.eval(x * (1.0 - 1e-12));
        assert!((closed - below).abs() < 1e-10, "{closed} vs {below}");
    }

    #[test]
    fn time_kernel_moments() {
        let k = TimeKernel::Parabolic;
        let m0 = simpson(|x| k.eval(x), 0.0, 1.0, 2000);
        let m2 = simpson(|x| x * x * k.eval(x), 0.0, 1.0, 2000);
        let l2 = simpson(|x| k.eval(x).powi(2), 0.0, 1.0, 2000);
        assert!((m0 - 1.0).abs() < 1e-10);
        assert!((m2 - 0.3).abs() < 1e-10);
        assert!((l2 - 1.2).abs() < 1e-10);
        assert!((k.cdf(0.5) - 0.5).abs() < 1e-15);
        for x in [0.1, 0.33, 0.72] {
            assert!((k.eval(x) - k.eval(1.0 - x)).abs() < 1e-15);
        }
    }

    #[test]
    fn lag_kernel_constants() {
        let b = LagKernel::Bartlett.constants().unwrap();
        assert_eq!((b.q, b.k1q, b.l2norm), (1, 1.0, 2.0 / 3.0));
        let p = LagKernel::Parzen.constants().unwrap();
        assert_eq!((p.q, p.k1q), (2, 6.0));
        assert!((p.l2norm - 0.539_285).abs() < 1e-6);
        assert!(LagKernel::Truncated.constants().is_err());

        for kind in [LagKernel::QuadraticSpectral, LagKernel::Parzen, LagKernel::TukeyHanning] {
            let c = kind.constants().unwrap();
            // (1 - K(x)) / x^2 at small x
            let x = 1e-5;
            let lim = (1.0 - kind.eval(x)) / (x * x);
            assert!((lim - c.k1q).abs() / c.k1q < 1e-4, "{kind}: {lim} vs {}", c.k1q);
            let upper = if kind.has_compact_support() { 1.0 } else { 4000.0 };
            let mut l2 = 2.0 * simpson(|x| kind.eval(x).powi(2), 0.0, upper, 400_000);
            if !kind.has_compact_support() {
                // QS^2 tail ~ (25/(12π²))² / (2 x⁴) beyond the cut
                let a = 25.0 / (12.0 * PI * PI);
                l2 += 2.0 * a * a / (2.0 * 3.0 * upper.powi(3));
            }
            assert!((l2 - c.l2norm).abs() < 1e-8, "{kind}: {l2} vs {}", c.l2norm);
        }
        let bl2 = 2.0 * simpson(|x| LagKernel::Bartlett.eval(x).powi(2), 0.0, 1.0, 100);
        assert!((bl2 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn parse_names() {
        for k in LagKernel::ALL {
            assert_eq!(k.name().parse::<LagKernel>().unwrap(), k);
        }
        assert_eq!("parabolic".parse::<TimeKernel>().unwrap(), TimeKernel::Parabolic);
        assert!("gaussian".parse::<LagKernel>().is_err());
    }

    #[test]
    fn bounded_on_dense_grid() {
        for k in LagKernel::ALL {
            for i in 0..=20_000 {
                let x = -10.0 + i as f64 * 1e-3;
                assert!(k.eval(x).abs() <= 1.0, "{k} at {x}");
            }
        }
    }

    proptest! {
        #[test]
        fn lag_kernels_are_even(x in -5.0f64..5.0) {
            for k in LagKernel::ALL {
                prop_assert_eq!(k.eval(x), k.eval(-x));
            }
        }
    }
}
