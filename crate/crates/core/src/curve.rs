//! Serializable real functions on [0,1] used for `η₀`, `b₀` and hazards.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::basis::Sieve;
use crate::quad;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Curve {
    Constant {
        value: f64,
    },
    /// `Σ c_i z^i`.
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// `offset + amplitude · sin(2π · frequency · z + phase)`.
    Sine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `scale · exp(rate · z)`.
    Exponential {
        scale: f64,
        rate: f64,
    },
    /// Level `levels[j]` on the j-th of `levels.len()` equal cells.
    Steps {
        levels: Vec<f64>,
    },
    /// `β(z)ᵗc` for a sieve.
    Expansion {
        sieve: Box<Sieve>,
        coefficients: Vec<f64>,
    },
}

impl Curve {
    pub fn constant(value: f64) -> Self {
        Curve::Constant { value }
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        Curve::Polynomial { coefficients }
    }

    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        Curve::Sine {
            amplitude,
            frequency,
            phase: 0.0,
            offset: 0.0,
        }
    }

    fn step_index(n: usize, z: f64) -> usize {
        ((z * n as f64).floor().max(0.0) as usize).min(n - 1)
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self {
            Curve::Constant { value } => *value,
            Curve::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * z + c)
            }
            Curve::Sine {
                amplitude,
                frequency,
                phase,
                offset,
            } => offset + amplitude * (TAU * frequency * z + phase).sin(),
            Curve::Exponential { scale, rate } => scale * (rate * z).exp(),
            Curve::Steps { levels } => levels[Self::step_index(levels.len(), z)],
            Curve::Expansion {
                sieve,
                coefficients,
            } => {
                let mut row = vec![0.0; sieve.dim()];
                sieve.eval_into(z, &mut row);
                row.iter().zip(coefficients).map(|(a, b)| a * b).sum()
            }
        }
    }

    /// Derivative where it exists; steps report 0 away from their jumps and
    /// expansions use a central difference.
    pub fn derivative(&self, z: f64) -> f64 {
        match self {
            Curve::Constant { .. } | Curve::Steps { .. } => 0.0,
            Curve::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, c)| acc * z + i as f64 * c),
            Curve::Sine {
                amplitude,
                frequency,
                phase,
                ..
            } => amplitude * TAU * frequency * (TAU * frequency * z + phase).cos(),
            Curve::Exponential { scale, rate } => scale * rate * (rate * z).exp(),
            Curve::Expansion { .. } => {
                let h = 1e-6;
                let (a, b) = ((z - h).max(0.0), (z + h).min(1.0));
                (self.eval(b) - self.eval(a)) / (b - a)
            }
        }
    }

    /// Points in (0,1) where the curve or its derivative may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Curve::Steps { levels } => {
                let n = levels.len();
                (1..n).map(|j| j as f64 / n as f64).collect()
            }
            Curve::Expansion { sieve, .. } => sieve.spec().interior_knots(),
            _ => Vec::new(),
        }
    }

    /// `∫_a^b`, in closed form where available.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b == a {
            return 0.0;
        }
        if b < a {
            return -self.integral(b, a);
        }
        match self {
            Curve::Constant { value } => value * (b - a),
            Curve::Polynomial { coefficients } => {
                let anti = |x: f64| {
                    coefficients
                        .iter()
                        .enumerate()
                        .rev()
                        .fold(0.0, |acc, (i, c)| acc * x + c / (i + 1) as f64)
                        * x
                };
                anti(b) - anti(a)
            }
            Curve::Sine {
                amplitude,
                frequency,
                phase,
                offset,
            } => {
                let lin = offset * (b - a);
                if *frequency == 0.0 {
                    lin + amplitude * phase.sin() * (b - a)
                } else {
                    let w = TAU * frequency;
                    lin - amplitude / w * ((w * b + phase).cos() - (w * a + phase).cos())
                }
            }
            Curve::Exponential { scale, rate } => {
                if *rate == 0.0 {
                    scale * (b - a)
                } else {
                    scale / rate * ((rate * b).exp() - (rate * a).exp())
                }
            }
            Curve::Steps { levels } => {
                let n = levels.len() as f64;
                let mut acc = 0.0;
                let mut lo = a;
                while lo < b {
                    let j = Self::step_index(levels.len(), lo);
                    let hi = ((j + 1) as f64 / n).min(b);
                    let hi = if hi <= lo { b.min(lo + 1.0 / n) } else { hi };
                    acc += levels[j] * (hi - lo);
                    lo = hi;
                }
                acc
            }
            Curve::Expansion { .. } => quad::integrate_piecewise(
                &|z| self.eval(z),
                a,
                b,
                &self.breakpoints(),
                quad::DEFAULT_PANELS,
            ),
        }
    }

    /// Minimum over [0,1]: exact for steps, otherwise over a 10⁴-point grid
    /// plus the breakpoints.
    pub fn min_on_unit(&self) -> f64 {
        match self {
            Curve::Constant { value } => *value,
            Curve::Steps { levels } => levels.iter().copied().fold(f64::INFINITY, f64::min),
            _ => {
                let grid = (0..=10_000).map(|i| i as f64 / 10_000.0);
                grid.chain(self.breakpoints())
                    .map(|z| self.eval(z))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn sup_abs_on_unit(&self) -> f64 {
        (0..=10_000)
            .map(|i| self.eval(i as f64 / 10_000.0).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_integrals_match_quadrature() {
        let curves = [
            Curve::constant(1.5),
            Curve::polynomial(vec![1.0, 1.0]),
            Curve::polynomial(vec![0.0, 0.0, 1.0]),
            Curve::sine(1.0, 1.0),
            Curve::Sine {
                amplitude: 0.3,
                frequency: 0.5,
                phase: 0.2,
                offset: 1.0,
            },
            Curve::Exponential {
                scale: 0.5,
                rate: 1.2,
            },
            Curve::Steps {
                levels: vec![1.0, 2.0, 0.5],
            },
        ];
        for c in &curves {
            for &(a, b) in &[(0.0, 1.0), (0.1, 0.7), (0.3, 0.35)] {
                let oracle = quad::integrate_piecewise(&|z| c.eval(z), a, b, &c.breakpoints(), 4096);
                assert!(
                    (c.integral(a, b) - oracle).abs() < 1e-12,
                    "{c:?} on [{a},{b}]"
                );
            }
        }
    }

    #[test]
    fn polynomial_derivative() {
        let c = Curve::polynomial(vec![1.0, 2.0, 3.0]);
        assert!((c.derivative(0.5) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn steps_cover_right_endpoint() {
        let c = Curve::Steps {
            levels: vec![1.0, 2.0],
        };
        assert_eq!(c.eval(1.0), 2.0);
        assert_eq!(c.eval(0.5), 2.0);
        assert_eq!(c.eval(0.49), 1.0);
    }

    #[test]
    fn json_round_trip() {
        let c = Curve::sine(1.0, 1.0);
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"kind\":\"sine\""));
        let back: Curve = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
