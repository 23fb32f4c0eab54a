//! Sieve bases on [0,1]: piecewise-constant cells and clamped B-splines on
//! equally spaced knots, with Gram matrices and Cholesky orthonormalisation.
//!
//! A [`BasisSpec`] fixes the family, the number of functions `k`, the spline
//! degree and a scaling convention. Evaluating a spec gives the *raw*
//! functions (indicators, `k`-scaled indicators, or B-splines). A [`Sieve`]
//! additionally carries the Gram matrix of the raw functions under some
//! measure and, for [`Scaling::ProbabilityOrthonormal`], the inverse Cholesky
//! factor `T` so that `T · gram · Tᵗ = I`. The sieve functions are then
//! `β(z) = T · raw(z)`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Eigenvalue ratio below which a Gram matrix is treated as singular.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    PiecewiseConstant,
    Bspline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    /// `k · 1{z ∈ V_j}`; piecewise-constant only.
    CoxScale,
    /// Orthonormal in `L2(ν)` after the inverse-Cholesky transform.
    ProbabilityOrthonormal,
    Raw,
}

/// One sieve level: `{family, k, degree, scaling}` on [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub family: Family,
    pub k: usize,
    #[serde(default)]
    pub degree: usize,
    pub scaling: Scaling,
}

/// Measure used for Gram matrices and `L2` projections.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Lebesgue,
    /// Law of `Z ~ U(0,1)`; numerically identical to Lebesgue on [0,1].
    UniformZ,
    Empirical(Vec<f64>),
}

impl BasisSpec {
    pub fn piecewise_constant(k: usize, scaling: Scaling) -> Self {
        Self {
            family: Family::PiecewiseConstant,
            k,
            degree: 0,
            scaling,
        }
    }

    pub fn bspline(k: usize, degree: usize, scaling: Scaling) -> Self {
        Self {
            family: Family::Bspline,
            k,
            degree,
            scaling,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidSpec("k must be at least 1".into()));
        }
        match self.family {
            Family::PiecewiseConstant => {
                if self.degree != 0 {
                    return Err(Error::InvalidSpec(
                        "piecewise-constant basis has degree 0".into(),
                    ));
                }
            }
            Family::Bspline => {
                if self.k < self.degree + 1 {
                    return Err(Error::InvalidSpec(format!(
                        "B-spline of degree {} needs k >= {}",
                        self.degree,
                        self.degree + 1
                    )));
                }
                if self.scaling == Scaling::CoxScale {
                    return Err(Error::InvalidSpec(
                        "cox-scale is only defined for piecewise-constant bases".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Number of knot intervals (cells) partitioning [0,1].
    pub fn intervals(&self) -> usize {
        match self.family {
            Family::PiecewiseConstant => self.k,
            Family::Bspline => self.k - self.degree,
        }
    }

    /// Interior knots (cell boundaries strictly inside (0,1)).
    pub fn interior_knots(&self) -> Vec<f64> {
        let l = self.intervals();
        (1..l).map(|r| r as f64 / l as f64).collect()
    }

    /// Index of the knot interval containing `z`; `z = 1` belongs to the last.
    pub fn interval_of(&self, z: f64) -> usize {
        let l = self.intervals();
        ((z * l as f64).floor() as usize).min(l - 1)
    }

    /// Writes the possibly nonzero raw values at `z` into `buf` (resized to
    /// `degree + 1`) and returns the index of the first one. `z` must lie in
    /// [0,1].
    pub fn eval_nonzero(&self, z: f64, buf: &mut Vec<f64>) -> usize {
        match self.family {
            Family::PiecewiseConstant => {
                buf.clear();
                buf.push(match self.scaling {
                    Scaling::CoxScale => self.k as f64,
                    _ => 1.0,
                });
                self.interval_of(z)
            }
            Family::Bspline => bspline_nonzero(self.k, self.degree, z, buf),
        }
    }

    pub fn evaluate(&self, z: f64) -> Result<Vec<f64>> {
        evaluate_basis(self, z)
    }
}

/// Values `(β_1(z), …, β_k(z))` of the raw functions of `spec`.
pub fn evaluate_basis(spec: &BasisSpec, z: f64) -> Result<Vec<f64>> {
    spec.validate()?;
    check_unit(z)?;
    let mut buf = Vec::with_capacity(spec.degree + 1);
    let first = spec.eval_nonzero(z, &mut buf);
    let mut out = vec![0.0; spec.k];
    out[first..first + buf.len()].copy_from_slice(&buf);
    Ok(out)
}

fn check_unit(z: f64) -> Result<()> {
    if (0.0..=1.0).contains(&z) {
        Ok(())
    } else {
        Err(Error::Domain { z })
    }
}

/// Clamped uniform knot vector value `t_i` for `k` functions of degree `p`.
fn knot(i: usize, k: usize, p: usize) -> f64 {
    let l = k - p;
    if i <= p {
        0.0
    } else if i >= k {
        1.0
    } else {
        (i - p) as f64 / l as f64
    }
}

// Nonzero B-splines at z via the triangular recurrence on the knot span.
fn bspline_nonzero(k: usize, p: usize, z: f64, buf: &mut Vec<f64>) -> usize {
    let l = k - p;
    let span = p + ((z * l as f64).floor() as usize).min(l - 1);
    buf.clear();
    buf.resize(p + 1, 0.0);
    buf[0] = 1.0;
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    for j in 1..=p {
        left[j] = z - knot(span + 1 - j, k, p);
        right[j] = knot(span + j, k, p) - z;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = buf[r] / (right[r + 1] + left[j - r]);
            buf[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        buf[j] = saved;
    }
    span - p
}

/// Simpson nodes and weights on [0,1], aligned with the knot intervals of
/// `spec`, using `panels_per_piece` panels inside each interval.
fn simpson_rule(spec: &BasisSpec, panels_per_piece: usize) -> Vec<(f64, f64)> {
    let pts = quad::pieces(0.0, 1.0, &spec.interior_knots());
    let mut rule = Vec::new();
    for w in pts.windows(2) {
        let h = (w[1] - w[0]) / panels_per_piece as f64;
        for i in 0..panels_per_piece {
            let a = w[0] + i as f64 * h;
            let lo = if i == 0 { a.next_up() } else { a };
            let hi = if i + 1 == panels_per_piece { w[1].next_down() } else { a + h };
            rule.push((lo, h / 6.0));
            rule.push((a + 0.5 * h, 4.0 * h / 6.0));
            rule.push((hi, h / 6.0));
        }
    }
    rule
}

/// `Σ w · raw(z) raw(z)ᵗ` and `Σ w · raw(z) f(z)` over a node set.
fn accumulate<F: Fn(f64) -> f64>(
    spec: &BasisSpec,
    nodes: impl Iterator<Item = (f64, f64)>,
    f: Option<&F>,
) -> (DMatrix<f64>, DVector<f64>) {
    let k = spec.k;
    let mut g = DMatrix::zeros(k, k);
    let mut r = DVector::zeros(k);
    let mut buf = Vec::with_capacity(spec.degree + 1);
    for (z, w) in nodes {
        let first = spec.eval_nonzero(z, &mut buf);
        for (a, &va) in buf.iter().enumerate() {
            for (b, &vb) in buf.iter().enumerate() {
                g[(first + a, first + b)] += w * va * vb;
            }
        }
        if let Some(f) = f {
            let fz = f(z);
            for (a, &va) in buf.iter().enumerate() {
                r[first + a] += w * va * fz;
            }
        }
    }
    (g, r)
}

fn moments<F: Fn(f64) -> f64>(
    spec: &BasisSpec,
    measure: &Measure,
    f: Option<&F>,
) -> (DMatrix<f64>, DVector<f64>) {
    match measure {
        Measure::Lebesgue | Measure::UniformZ if f.is_none() && spec.family == Family::PiecewiseConstant => {
            let v = match spec.scaling {
                Scaling::CoxScale => spec.k as f64,
                _ => 1.0 / spec.k as f64,
            };
            (DMatrix::from_diagonal_element(spec.k, spec.k, v), DVector::zeros(spec.k))
        }
        Measure::Lebesgue | Measure::UniformZ => {
            let per_piece = (quad::DEFAULT_PANELS / spec.intervals()).max(8);
            let mut prev = accumulate(spec, simpson_rule(spec, per_piece).into_iter(), f);
            let mut panels = per_piece;
            // Doubling refinement, capped at 16x the base budget.
            for _ in 0..4 {
                panels *= 2;
                let next = accumulate(spec, simpson_rule(spec, panels).into_iter(), f);
                let dg = (&next.0 - &prev.0).amax();
                let dr = (&next.1 - &prev.1).amax();
                prev = next;
                if dg <= 1e-10 && dr <= 1e-10 {
                    break;
                }
            }
            prev
        }
        Measure::Empirical(z) => {
            let w = 1.0 / z.len() as f64;
            accumulate(spec, z.iter().map(|&zi| (zi, w)), f)
        }
    }
}

/// Rejects a numerically singular symmetric matrix, naming the first pivot
/// at which elimination breaks down.
pub(crate) fn check_rank(g: &DMatrix<f64>) -> Result<()> {
    let eig = SymmetricEigen::new(g.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if max > 0.0 && min >= RANK_TOL * max {
        return Ok(());
    }
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    // Locate the offending index by unpivoted Cholesky elimination.
    let n = g.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let floor = RANK_TOL * max.max(f64::MIN_POSITIVE);
    for j in 0..n {
        let mut d = g[(j, j)];
        for p in 0..j {
            d -= l[(j, p)] * l[(j, p)];
        }
        if d < floor {
            return Err(Error::RankDeficient { index: j, ratio });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = g[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)];
            }
            l[(i, j)] = s / d;
        }
    }
    Err(Error::RankDeficient {
        index: n.saturating_sub(1),
        ratio,
    })
}

/// A basis spec together with its Gram matrix under a measure and the
/// orthonormalising transform (identity unless the scaling asks for it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sieve {
    spec: BasisSpec,
    gram: DMatrix<f64>,
    transform: Option<DMatrix<f64>>,
}

impl Sieve {
    pub fn new(spec: BasisSpec, measure: &Measure) -> Result<Self> {
        spec.validate()?;
        if let Measure::Empirical(z) = measure {
            if z.is_empty() {
                return Err(Error::Empty("empirical measure needs points".into()));
            }
            for &zi in z {
                check_unit(zi)?;
            }
        }
        let (gram, _) = moments::<fn(f64) -> f64>(&spec, measure, None);
        check_rank(&gram)?;
        let transform = match spec.scaling {
            Scaling::ProbabilityOrthonormal => {
                let chol = Cholesky::new(gram.clone()).ok_or(Error::RankDeficient {
                    index: 0,
                    ratio: 0.0,
                })?;
                let l = chol.l();
                let id = DMatrix::identity(spec.k, spec.k);
                let inv = l
                    .solve_lower_triangular(&id)
                    .ok_or(Error::RankDeficient {
                        index: 0,
                        ratio: 0.0,
                    })?;
                Some(inv)
            }
            _ => None,
        };
        Ok(Self {
            spec,
            gram,
            transform,
        })
    }

    /// Uniform-law sieve, the usual choice when `Z ~ U(0,1)`.
    pub fn uniform(spec: BasisSpec) -> Result<Self> {
        Self::new(spec, &Measure::UniformZ)
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.k
    }

    /// Gram matrix of the raw functions.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn orthonormal_transform(&self) -> DMatrix<f64> {
        self.transform
            .clone()
            .unwrap_or_else(|| DMatrix::identity(self.spec.k, self.spec.k))
    }

    /// Gram matrix of the sieve functions `β = T · raw`.
    pub fn effective_gram(&self) -> DMatrix<f64> {
        match &self.transform {
            Some(t) => t * &self.gram * t.transpose(),
            None => self.gram.clone(),
        }
    }

    /// Writes `β(z)` into `out` (length `k`); `z` is clamped to [0,1].
    pub fn eval_into(&self, z: f64, out: &mut [f64]) {
        let z = z.clamp(0.0, 1.0);
        let mut buf = Vec::with_capacity(self.spec.degree + 1);
        let first = self.spec.eval_nonzero(z, &mut buf);
        out.iter_mut().for_each(|x| *x = 0.0);
        match &self.transform {
            None => out[first..first + buf.len()].copy_from_slice(&buf),
            Some(t) => {
                // T is lower triangular: rows before `first` see zeros.
                for (i, o) in out.iter_mut().enumerate().skip(first) {
                    let mut s = 0.0;
                    for (a, &v) in buf.iter().enumerate() {
                        let j = first + a;
                        if j > i {
                            break;
                        }
                        s += t[(i, j)] * v;
                    }
                    *o = s;
                }
            }
        }
    }

    pub fn eval(&self, z: f64) -> Result<DVector<f64>> {
        check_unit(z)?;
        let mut out = vec![0.0; self.spec.k];
        self.eval_into(z, &mut out);
        Ok(DVector::from_vec(out))
    }

    /// `β(z)ᵗ c`.
    pub fn combine(&self, z: f64, coef: &DVector<f64>) -> f64 {
        let mut out = vec![0.0; self.spec.k];
        self.eval_into(z, &mut out);
        out.iter().zip(coef.iter()).map(|(a, b)| a * b).sum()
    }

    /// Evaluates the sieve at every point, giving an `n × k` design.
    pub fn design(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        let k = self.spec.k;
        let mut m = DMatrix::zeros(z.len(), k);
        let mut row = vec![0.0; k];
        for (i, &zi) in z.iter().enumerate() {
            check_unit(zi)?;
            self.eval_into(zi, &mut row);
            for j in 0..k {
                m[(i, j)] = row[j];
            }
        }
        Ok(m)
    }

    pub fn basis_matrix(&self, z: &[f64]) -> Result<BasisMatrix> {
        Ok(BasisMatrix {
            values: self.design(z)?,
            sieve: self.clone(),
        })
    }

    /// `∫ β f dν` under `measure`.
    pub fn inner_products<F: Fn(f64) -> f64>(&self, f: &F, measure: &Measure) -> DVector<f64> {
        let (_, r) = moments(&self.spec, measure, Some(f));
        match &self.transform {
            Some(t) => t * r,
            None => r,
        }
    }

    /// `sup_z ‖β(z)‖`: closed form for cells, a 10⁴-point grid for splines.
    pub fn sup_norm(&self) -> f64 {
        match self.spec.family {
            Family::PiecewiseConstant => {
                let scale = match self.spec.scaling {
                    Scaling::CoxScale => self.spec.k as f64,
                    _ => 1.0,
                };
                match &self.transform {
                    Some(t) => (0..self.spec.k).map(|j| t[(j, j)].abs()).fold(0.0, f64::max),
                    None => scale,
                }
            }
            Family::Bspline => {
                let mut out = vec![0.0; self.spec.k];
                (0..=10_000)
                    .map(|i| {
                        self.eval_into(i as f64 / 10_000.0, &mut out);
                        out.iter().map(|v| v * v).sum::<f64>().sqrt()
                    })
                    .fold(0.0, f64::max)
            }
        }
    }
}

/// Sieve values on a set of points together with the Gram matrix and
/// orthonormalising transform.
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    pub sieve: Sieve,
    /// `n × k` matrix of `β(z_i)`.
    pub values: DMatrix<f64>,
}

impl BasisMatrix {
    pub fn gram(&self) -> &DMatrix<f64> {
        self.sieve.gram()
    }

    pub fn orthonormal_transform(&self) -> DMatrix<f64> {
        self.sieve.orthonormal_transform()
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn k(&self) -> usize {
        self.values.ncols()
    }
}

/// Builds the Gram matrix of `spec` under `measure`, orthonormalises when the
/// scaling asks for it, and evaluates the result at `z_points`.
pub fn gram_and_orthonormalize(
    spec: BasisSpec,
    measure: &Measure,
    z_points: &[f64],
) -> Result<BasisMatrix> {
    Sieve::new(spec, measure)?.basis_matrix(z_points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientRule {
    /// `γ_j = η((j-1)/k) / k`, for cox-scale cells.
    CoxLeftEndpoint,
    /// `argmin_γ ∫ (βᵗγ - η)² dν`.
    L2Projection,
}

/// Coefficients `γ₀` whose sieve combination approximates `eta0`.
pub fn coefficients_for_target<F: Fn(f64) -> f64>(
    sieve: &Sieve,
    eta0: &F,
    rule: CoefficientRule,
    measure: &Measure,
) -> Result<DVector<f64>> {
    let spec = sieve.spec();
    match rule {
        CoefficientRule::CoxLeftEndpoint => {
            if spec.family != Family::PiecewiseConstant || spec.scaling != Scaling::CoxScale {
                return Err(Error::InvalidSpec(
                    "left-endpoint rule needs a cox-scale piecewise-constant basis".into(),
                ));
            }
            let k = spec.k as f64;
            Ok(DVector::from_fn(spec.k, |j, _| eta0(j as f64 / k) / k))
        }
        CoefficientRule::L2Projection => {
            let g = match measure {
                Measure::Empirical(_) => {
                    let s = Sieve::new(*spec, measure)?;
                    let t = sieve.orthonormal_transform();
                    &t * s.gram() * t.transpose()
                }
                _ => sieve.effective_gram(),
            };
            check_rank(&g)?;
            let rhs = sieve.inner_products(eta0, measure);
            let chol = Cholesky::new(g).ok_or(Error::RankDeficient {
                index: 0,
                ratio: 0.0,
            })?;
            Ok(chol.solve(&rhs))
        }
    }
}
