//! Composite Simpson quadrature on [0,1] and cumulative integral tables.
//!
//! Integrands in this crate are smooth between known breakpoints (knots,
//! cell boundaries, kinks of a censoring survival function), so every rule
//! here splits at breakpoints first and applies composite Simpson inside each
//! piece.

/// Default total panel budget for analytic integrals on [0,1].
pub const DEFAULT_PANELS: usize = 1 << 12;

const REFINE_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 1 << 18;

/// Composite Simpson over `[a, b]` with `panels` panels (each panel uses the
/// midpoint, so `2 * panels + 1` evaluations). The two outer endpoints are
/// sampled one ulp inside, so a jump exactly at `a` or `b` contributes its
/// one-sided limit.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut acc = f(a.next_up()) + f(b.next_down());
    for i in 1..panels {
        acc += 2.0 * f(a + i as f64 * h);
    }
    for i in 0..panels {
        acc += 4.0 * f(a + (i as f64 + 0.5) * h);
    }
    acc * h / 6.0
}

/// Composite Simpson starting at [`DEFAULT_PANELS`] and doubling until two
/// successive estimates agree to 1e-10 (absolute, or relative for large values).
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    integrate_with(f, a, b, DEFAULT_PANELS)
}

pub fn integrate_with<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let mut n = panels.max(2);
    let mut prev = simpson(f, a, b, n);
    while n < MAX_PANELS {
        n *= 2;
        let next = simpson(f, a, b, n);
        if (next - prev).abs() <= REFINE_TOL * next.abs().max(1.0) {
            return next;
        }
        prev = next;
    }
    prev
}

/// Sorted, deduplicated breakpoints in `[a, b]`, including both ends.
pub fn pieces(a: f64, b: f64, interior: &[f64]) -> Vec<f64> {
    let mut pts = vec![a, b];
    pts.extend(interior.iter().copied().filter(|&x| x > a && x < b));
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    pts
}

/// Integrate over `[a, b]`, splitting at `breaks`, spreading a budget of
/// `panels` panels proportionally to piece length (at least 8 per piece),
/// with doubling refinement per piece.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    panels: usize,
) -> f64 {
    let pts = pieces(a, b, breaks);
    let len = b - a;
    pts.windows(2)
        .map(|w| {
            let p = ((panels as f64) * (w[1] - w[0]) / len).ceil() as usize;
            integrate_with(f, w[0], w[1], p.max(8))
        })
        .sum()
}

/// Running integral `t ↦ ∫_a^t f` tabulated on a grid aligned with the
/// breakpoints of `f`. Values between nodes use one Simpson panel on the
/// partial interval, which stays inside a smooth piece.
#[derive(Clone)]
pub struct CumulativeIntegral<F> {
    f: F,
    nodes: Vec<f64>,
    cum: Vec<f64>,
}

impl<F: Fn(f64) -> f64> CumulativeIntegral<F> {
    pub fn new(f: F, a: f64, b: f64, breaks: &[f64], panels: usize) -> Self {
        let pts = pieces(a, b, breaks);
        let len = b - a;
        let mut nodes = vec![a];
        for w in pts.windows(2) {
            let p = (((panels as f64) * (w[1] - w[0]) / len).ceil() as usize).max(2);
            let h = (w[1] - w[0]) / p as f64;
            for i in 1..p {
                nodes.push(w[0] + i as f64 * h);
            }
            nodes.push(w[1]);
        }
        let mut cum = Vec::with_capacity(nodes.len());
        cum.push(0.0);
        for w in nodes.windows(2) {
            let last = *cum.last().unwrap();
            cum.push(last + simpson(&f, w[0], w[1], 4));
        }
        Self { f, nodes, cum }
    }

    pub fn lower(&self) -> f64 {
        self.nodes[0]
    }

    pub fn upper(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn integrand(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    fn locate(&self, t: f64) -> usize {
        match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(self.nodes.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.nodes.len() - 2),
        }
    }

    /// `∫_a^t f`, clamped to the tabulated range.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(self.lower(), self.upper());
        let i = self.locate(t);
        self.cum[i] + simpson(&self.f, self.nodes[i], t, 2)
    }

    /// Solve `∫_a^t f = target` for a nonnegative integrand; `None` when the
    /// target exceeds the total mass.
    pub fn invert(&self, target: f64) -> Option<f64> {
        if target <= 0.0 {
            return Some(self.lower());
        }
        if target > self.total() {
            return None;
        }
        let i = match self
            .cum
            .binary_search_by(|x| x.partial_cmp(&target).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => return Some(self.nodes[i]),
            Err(i) => i - 1,
        };
        let (mut lo, mut hi) = (self.nodes[i], self.nodes[i + 1]);
        let seg = self.cum[i + 1] - self.cum[i];
        let mut t = if seg > 0.0 {
            lo + (hi - lo) * (target - self.cum[i]) / seg
        } else {
            0.5 * (lo + hi)
        };
        for _ in 0..60 {
            let g = self.cum[i] + simpson(&self.f, self.nodes[i], t, 2) - target;
            if g > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = (self.f)(t);
            let newton = t - g / d;
            t = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if g.abs() < 1e-15 || hi - lo < 1e-15 {
                break;
            }
        }
        Some(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_exact_for_cubics() {
        let f = |x: f64| 1.0 + x - 3.0 * x * x + x * x * x;
        let exact = 1.0 + 0.5 - 1.0 + 0.25;
        assert!((simpson(&f, 0.0, 1.0, 1) - exact).abs() < 1e-15);
    }

    #[test]
    fn piecewise_handles_jumps() {
        let f = |x: f64| if x < 1.0 / 3.0 { 1.0 } else { 2.0 };
        let v = integrate_piecewise(&f, 0.0, 1.0, &[1.0 / 3.0], 64);
        assert!((v - (1.0 / 3.0 + 4.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn cumulative_and_inverse() {
        let c = CumulativeIntegral::new(|t: f64| 1.0 + t, 0.0, 1.0, &[], 256);
        assert!((c.eval(0.5) - 0.625).abs() < 1e-14);
        assert!((c.total() - 1.5).abs() < 1e-14);
        let t = c.invert(0.625).unwrap();
        assert!((t - 0.5).abs() < 1e-12);
        assert!(c.invert(1.6).is_none());
    }
}
