//! Complete lifts, Lie derivatives of `a` and `b`, the Killing residual of an
//! (α,β)-metric, and the symmetry-generated family of `Ψ`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{coord_names, LocalFrame, MetricField, OneFormField};
use crate::linalg::{dot, Matrix};
use crate::psi::PsiSpec;
use crate::scalar::Real;
use crate::verifier::stream_rng;

type FieldFn<T> = dyn Fn(&[T]) -> Result<Vec<T>> + Send + Sync;
type JacobianFn<T> = dyn Fn(&[T]) -> Result<Matrix<T>> + Send + Sync;

fn fd_step<T: Real>(x: T) -> T {
    T::epsilon().cbrt() * T::one().max(x.abs())
}

/// A vector field `ξ = ξ^i ∂_i`, optionally with an analytic Jacobian `ξ^i_{,j}`.
#[derive(Clone)]
pub struct VectorField<T> {
    n: usize,
    label: String,
    eval: Arc<FieldFn<T>>,
    jacobian: Option<Arc<JacobianFn<T>>>,
}

impl<T> fmt::Debug for VectorField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField").field("n", &self.n).field("label", &self.label).finish()
    }
}

/// Splits on commas outside parentheses.
fn split_top_level(src: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in src.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&src[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&src[start..]);
    out
}

impl<T: Real + 'static> VectorField<T> {
    pub fn from_fn(n: usize, f: impl Fn(&[T]) -> Result<Vec<T>> + Send + Sync + 'static) -> Self {
        Self { n, label: "closure".into(), eval: Arc::new(f), jacobian: None }
    }

    pub fn with_jacobian(mut self, j: impl Fn(&[T]) -> Result<Matrix<T>> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Components as expressions in `x0, x1, …`; the Jacobian is differentiated symbolically.
    pub fn from_exprs(comps: Vec<Expr>) -> Result<Self> {
        let n = comps.len();
        if n < 2 {
            return Err(Error::ValidationError("a vector field needs at least 2 components".into()));
        }
        let names = coord_names(n);
        for e in &comps {
            if let Some(v) = e.variables().into_iter().find(|v| !names.contains(v)) {
                return Err(Error::UnboundVariable(v));
            }
        }
        let jac: Vec<Vec<Expr>> = comps.iter().map(|e| names.iter().map(|k| e.diff(k)).collect()).collect();
        let label = comps.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ");
        let (n1, n2) = (names.clone(), names);
        let env = move |names: &[String], x: &[T]| -> Vec<(String, T)> { names.iter().cloned().zip(x.iter().copied()).collect() };
        let eval = move |x: &[T]| -> Result<Vec<T>> {
            check_len(n, x)?;
            let env = env(&n1, x);
            let env: Vec<(&str, T)> = env.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            comps.iter().map(|e| e.eval(&env)).collect()
        };
        let jacobian = move |x: &[T]| -> Result<Matrix<T>> {
            check_len(n, x)?;
            let env: Vec<(&str, T)> = n2.iter().map(String::as_str).zip(x.iter().copied()).collect();
            let mut m = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = jac[i][j].eval(&env)?;
                }
            }
            Ok(m)
        };
        Ok(Self { n, label, eval: Arc::new(eval), jacobian: Some(Arc::new(jacobian)) })
    }

    /// Parses `"expr, expr, …"`.
    pub fn parse(src: &str) -> Result<Self> {
        let comps = split_top_level(src).into_iter().map(|s| Expr::parse(s.trim())).collect::<Result<Vec<_>>>()?;
        Self::from_exprs(comps)
    }

    /// The coordinate field `∂_k`.
    pub fn coordinate(n: usize, k: usize) -> Self {
        let comps = (0..n).map(|i| Expr::num(if i == k { 1.0 } else { 0.0 })).collect();
        Self::from_exprs(comps).expect("constant components").with_label(format!("∂{k}"))
    }
}

fn check_len<T>(n: usize, x: &[T]) -> Result<()> {
    if x.len() == n {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: n, got: x.len() })
    }
}

impl<T: Real> VectorField<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        let xi = (self.eval)(x)?;
        if xi.len() != self.n || xi.iter().any(|c| !c.is_finite()) {
            return Err(Error::ValidationError(format!("vector field {} is not finite at the queried point", self.label)));
        }
        Ok(xi)
    }

    /// `J[(i, j)] = ξ^i_{,j}`, analytic when available, central differences otherwise.
    pub fn jacobian(&self, x: &[T]) -> Result<Matrix<T>> {
        let j = match &self.jacobian {
            Some(j) => j(x)?,
            None => {
                let mut m = Matrix::zeros(self.n, self.n);
                let mut xp = x.to_vec();
                for j in 0..self.n {
                    let h = fd_step(x[j]);
                    xp[j] = x[j] + h;
                    let hi = self.eval(&xp).map_err(stencil)?;
                    xp[j] = x[j] - h;
                    let lo = self.eval(&xp).map_err(stencil)?;
                    xp[j] = x[j];
                    for i in 0..self.n {
                        m[(i, j)] = (hi[i] - lo[i]) / (T::two() * h);
                    }
                }
                m
            }
        };
        if (0..self.n).any(|i| (0..self.n).any(|k| !j[(i, k)].is_finite())) {
            return Err(Error::ValidationError(format!("Jacobian of {} is not finite", self.label)));
        }
        Ok(j)
    }
}

fn stencil(e: Error) -> Error {
    Error::StencilOutOfDomain(e.to_string())
}

/// A function of position and velocity.
pub type PhaseFn<'a, T> = dyn Fn(&[T], &[T]) -> Result<T> + 'a;

/// `ξ^C(f) = ξ^i ∂f/∂x^i + ξ^i_{,j} ẋ^j ∂f/∂ẋ^i` with central-difference partials of `f`.
pub fn complete_lift_apply<T: Real>(xi: &VectorField<T>, f: &PhaseFn<T>, x: &[T], v: &[T]) -> Result<T> {
    let n = x.len();
    check_len(xi.dim(), x)?;
    check_len(n, v)?;
    let xv = xi.eval(x)?;
    let jac = xi.jacobian(x)?;
    let lifted = jac.mul_vec(v);
    let mut acc = T::zero();
    let (mut xp, mut vp) = (x.to_vec(), v.to_vec());
    for i in 0..n {
        if xv[i] != T::zero() {
            let h = fd_step(x[i]);
            xp[i] = x[i] + h;
            let hi = f(&xp, v).map_err(stencil)?;
            xp[i] = x[i] - h;
            let lo = f(&xp, v).map_err(stencil)?;
            xp[i] = x[i];
            acc = acc + xv[i] * (hi - lo) / (T::two() * h);
        }
        if lifted[i] != T::zero() {
            let h = fd_step(v[i]);
            vp[i] = v[i] + h;
            let hi = f(x, &vp).map_err(stencil)?;
            vp[i] = v[i] - h;
            let lo = f(x, &vp).map_err(stencil)?;
            vp[i] = v[i];
            acc = acc + lifted[i] * (hi - lo) / (T::two() * h);
        }
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LieDerivatives<T> {
    pub lie_a: Matrix<T>,
    pub lie_b: Vec<T>,
}

impl<T: Real> LieDerivatives<T> {
    /// `ξ^C(A) = (𝔏_ξ a)_{ij} ẋ^i ẋ^j`.
    pub fn xi_c_a(&self, v: &[T]) -> T {
        self.lie_a.quadratic(v)
    }

    /// `ξ^C(B) = (𝔏_ξ b)_i ẋ^i`.
    pub fn xi_c_b(&self, v: &[T]) -> T {
        dot(&self.lie_b, v)
    }
}

pub fn lie_derivatives<T, M, F>(metric: &M, oneform: &F, xi: &VectorField<T>, x: &[T]) -> Result<LieDerivatives<T>>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    let n = metric.dim();
    check_len(n, x)?;
    let a = metric.eval(x)?;
    let da = metric.partials(x).map_err(stencil)?;
    let b = oneform.eval(x)?;
    let db = oneform.partials(x).map_err(stencil)?;
    let xv = xi.eval(x)?;
    let j = xi.jacobian(x)?;
    let lie_a = Matrix::from_fn(n, n, |i, jj| {
        let mut acc = T::zero();
        for k in 0..n {
            acc = acc + xv[k] * da[k][(i, jj)] + a[(k, jj)] * j[(k, i)] + a[(i, k)] * j[(k, jj)];
        }
        acc
    });
    let lie_b = (0..n)
        .map(|i| (0..n).fold(T::zero(), |acc, k| acc + xv[k] * db[(k, i)] + b[k] * j[(k, i)]))
        .collect();
    Ok(LieDerivatives { lie_a, lie_b })
}

/// Agreement between the Lie-derivative contractions and finite-difference complete lifts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LiftConsistency {
    pub max_rel_a: f64,
    pub max_rel_b: f64,
}

pub fn lift_consistency<T, M, F>(metric: &M, oneform: &F, xi: &VectorField<T>, x: &[T], vs: &[Vec<T>]) -> Result<LiftConsistency>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    let lie = lie_derivatives(metric, oneform, xi, x)?;
    let fa = |x: &[T], v: &[T]| -> Result<T> { Ok(metric.eval(x)?.quadratic(v)) };
    let fb = |x: &[T], v: &[T]| -> Result<T> { Ok(dot(&oneform.eval(x)?, v)) };
    let mut out = LiftConsistency { max_rel_a: 0.0, max_rel_b: 0.0 };
    for v in vs {
        let (ca, cb) = (lie.xi_c_a(v), lie.xi_c_b(v));
        let (la, lb) = (complete_lift_apply(xi, &fa, x, v)?, complete_lift_apply(xi, &fb, x, v)?);
        let sa = metric.eval(x)?.quadratic(v).abs().max(ca.abs()).max(T::one());
        let sb = fb(x, v)?.abs().max(cb.abs()).max(T::one());
        out.max_rel_a = out.max_rel_a.max(((ca - la).abs() / sa).re());
        out.max_rel_b = out.max_rel_b.max(((cb - lb).abs() / sb).re());
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KillingResidual {
    /// `ξ^C(A)(Ψ − sΨ′) + 2Ψ′Bξ^C(B)`.
    pub raw: f64,
    pub normalized: f64,
    pub scale: f64,
    pub xi_c_a: f64,
    pub xi_c_b: f64,
    /// `ξ^C(L)` by finite differences of `L(x, ẋ)`.
    pub xi_c_l: f64,
    /// `|raw − ξ^C(L)| / scale`.
    pub cross_check: f64,
}

pub fn killing_residual<T, M, F>(metric: &M, oneform: &F, spec: &PsiSpec<T>, xi: &VectorField<T>, x: &[T], v: &[T]) -> Result<KillingResidual>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    let frame = LocalFrame::at(metric, oneform, x)?;
    let sp = spec.with_bnorm(frame.bnorm);
    let sc = frame.scalars(v)?;
    let s = sc.s()?;
    let e = sp.eval(s)?;
    let lie = lie_derivatives(metric, oneform, xi, x)?;
    let (ca, cb) = (lie.xi_c_a(v), lie.xi_c_b(v));
    let t1 = ca * e.first(s);
    let t2 = T::two() * e.dpsi * sc.b * cb;
    let l = sc.a * e.psi;
    let raw = t1 + t2;
    let scale = t1.abs().max(t2.abs()).max(l.abs());
    let lag = |x: &[T], v: &[T]| -> Result<T> {
        let fr = LocalFrame::at(metric, oneform, x)?;
        let sc = fr.scalars(v)?;
        Ok(sc.a * spec.with_bnorm(fr.bnorm).psi(sc.s()?)?)
    };
    let xi_c_l = complete_lift_apply(xi, &lag, x, v)?;
    let normalized = if scale > T::zero() { raw / scale } else { T::zero() };
    let cross = if scale > T::zero() { (raw - xi_c_l).abs() / scale } else { (raw - xi_c_l).abs() };
    Ok(KillingResidual {
        raw: raw.re(),
        normalized: normalized.re(),
        scale: scale.re(),
        xi_c_a: ca.re(),
        xi_c_b: cb.re(),
        xi_c_l: xi_c_l.re(),
        cross_check: cross.re(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrivialityReport {
    pub trivial: bool,
    pub max_lie_a: f64,
    pub max_lie_b: f64,
    pub lie_a_vanishes: bool,
    pub lie_b_vanishes: bool,
    /// Exactly one of `𝔏_ξ a`, `𝔏_ξ b` vanishes.
    pub equivalence_violation: bool,
}

/// Both Lie derivatives vanish (relative to the field scale) at every point.
pub fn triviality<T, M, F>(metric: &M, oneform: &F, xi: &VectorField<T>, points: &[Vec<T>], tol: f64) -> Result<TrivialityReport>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    if points.is_empty() {
        return Err(Error::ValidationError("at least one point is required".into()));
    }
    let (mut ra, mut rb) = (0.0f64, 0.0f64);
    for x in points {
        let lie = lie_derivatives(metric, oneform, xi, x)?;
        let sa = metric.eval(x)?.max_abs().re().max(1.0);
        let sb = oneform.eval(x)?.iter().fold(1.0f64, |m, c| m.max(c.re().abs()));
        ra = ra.max(lie.lie_a.max_abs().re() / sa);
        rb = rb.max(lie.lie_b.iter().fold(0.0f64, |m, c| m.max(c.re().abs())) / sb);
    }
    let (va, vb) = (ra <= tol, rb <= tol);
    Ok(TrivialityReport {
        trivial: va && vb,
        max_lie_a: ra,
        max_lie_b: rb,
        lie_a_vanishes: va,
        lie_b_vanishes: vb,
        equivalence_violation: va != vb,
    })
}

pub fn is_trivial_symmetry<T, M, F>(metric: &M, oneform: &F, xi: &VectorField<T>, points: &[Vec<T>], tol: f64) -> bool
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    triviality(metric, oneform, xi, points, tol).map(|r| r.trivial).unwrap_or(false)
}

/// `κ`, `λ₂`, `μ₁`, `μ₂` as constants or fields of `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryParams {
    /// `None` asks for a pointwise least-squares fit.
    pub kappa: Option<Expr>,
    pub lambda2: Expr,
    pub mu1: Expr,
    pub mu2: Expr,
}

impl SymmetryParams {
    pub fn constant(kappa: Option<f64>, lambda2: f64, mu1: f64, mu2: f64) -> Self {
        Self { kappa: kappa.map(Expr::num), lambda2: Expr::num(lambda2), mu1: Expr::num(mu1), mu2: Expr::num(mu2) }
    }

    fn at<T: Real>(&self, x: &[T]) -> Result<(Option<T>, T, T, T)> {
        let names = coord_names(x.len());
        let env: Vec<(&str, T)> = names.iter().map(String::as_str).zip(x.iter().copied()).collect();
        let kappa = self.kappa.as_ref().map(|k| k.eval(&env)).transpose()?;
        Ok((kappa, self.lambda2.eval(&env)?, self.mu1.eval(&env)?, self.mu2.eval(&env)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryBranch {
    /// `μ₁ − 2λ₂ ≠ 0`.
    Power,
    /// `μ₁ = 2λ₂`, `μ₂ ≠ 0`.
    Exponential,
}

pub fn symmetry_branch(lambda2: f64, mu1: f64, mu2: f64) -> Result<SymmetryBranch> {
    if mu1 - 2.0 * lambda2 != 0.0 {
        Ok(SymmetryBranch::Power)
    } else if mu2 != 0.0 {
        Ok(SymmetryBranch::Exponential)
    } else {
        Err(Error::InvalidParams("μ1 − 2λ2 = 0 and μ2 = 0 cannot both hold".into()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointIdentityReport {
    pub x: Vec<f64>,
    pub kappa: f64,
    pub kappa_fitted: bool,
    pub branch: SymmetryBranch,
    /// Worst relative error of `ξ^C(B) = κλ₂B`.
    pub max_rel_b: f64,
    /// Worst relative error of `ξ^C(A) = κ(μ₁A + μ₂B²)`.
    pub max_rel_a: f64,
    pub samples_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NontrivialReport {
    pub identities_hold: bool,
    pub tolerance: f64,
    pub max_rel_b: f64,
    pub max_rel_a: f64,
    pub max_abs_kappa: f64,
    pub kappa_nonzero: bool,
    /// `κ ≡ 0` on every probed point.
    pub trivial: bool,
    pub mixed_branch: bool,
    pub points: Vec<PointIdentityReport>,
    pub assumptions: Vec<String>,
}

pub const IDENTITY_TOL: f64 = 1e-6;
const KAPPA_ZERO_TOL: f64 = 1e-8;

#[allow(clippy::too_many_arguments)]
fn check_point<T, M, F>(
    metric: &M,
    oneform: &F,
    xi: &VectorField<T>,
    params: &SymmetryParams,
    x: &[T],
    samples: usize,
    seed: u64,
    stream: u64,
) -> Result<PointIdentityReport>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    let n = x.len();
    let (kappa, l2, m1, m2) = params.at(x)?;
    let branch = symmetry_branch(l2.re(), m1.re(), m2.re())?;
    let lie = lie_derivatives(metric, oneform, xi, x)?;
    let a = metric.eval(x)?;
    let b = oneform.eval(x)?;
    let mut rng = stream_rng(seed, stream);
    let vs: Vec<Vec<T>> = (0..samples.max(1))
        .map(|_| (0..n).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect())
        .collect();

    struct Row<T> {
        a: T,
        a_abs: T,
        b: T,
        b_abs: T,
        ca: T,
        cb: T,
    }
    let rows: Vec<Row<T>> = vs
        .iter()
        .map(|v| {
            let mut a_abs = T::zero();
            for i in 0..n {
                for j in 0..n {
                    a_abs = a_abs + (a[(i, j)] * v[i] * v[j]).abs();
                }
            }
            Row {
                a: a.quadratic(v),
                a_abs,
                b: dot(&b, v),
                b_abs: b.iter().zip(v).fold(T::zero(), |s, (&bi, &vi)| s + (bi * vi).abs()),
                ca: lie.xi_c_a(v),
                cb: lie.xi_c_b(v),
            }
        })
        .collect();
    let informative: Vec<&Row<T>> = rows.iter().filter(|r| r.b.abs() > T::lit(1e-6) * r.b_abs.max(T::one())).collect();
    if informative.is_empty() {
        return Err(Error::DegenerateFit("B vanishes on every sample at this point".into()));
    }

    let (kappa, fitted) = match kappa {
        Some(k) => (k, false),
        None if l2 != T::zero() => {
            let num = informative.iter().fold(T::zero(), |s, r| s + r.cb * r.b);
            let den = informative.iter().fold(T::zero(), |s, r| s + r.b * r.b);
            (num / (den * l2), true)
        }
        None => {
            // λ₂ = 0 leaves the first identity free of κ; fit from the second
            let w = |r: &Row<T>| m1 * r.a + m2 * r.b * r.b;
            let den = rows.iter().fold(T::zero(), |s, r| s + w(r) * w(r));
            if !(den > T::zero()) {
                return Err(Error::DegenerateFit("μ1 A + μ2 B² vanishes on every sample".into()));
            }
            (rows.iter().fold(T::zero(), |s, r| s + r.ca * w(r)) / den, true)
        }
    };

    let (mut eb, mut ea) = (T::zero(), T::zero());
    for r in &rows {
        let pb = kappa * l2 * r.b;
        let pa = kappa * (m1 * r.a + m2 * r.b * r.b);
        let db = r.cb.abs().max(pb.abs()).max(r.b_abs).max(T::min_positive_value());
        let da = r.ca.abs().max(pa.abs()).max(r.a_abs).max(T::min_positive_value());
        eb = eb.max((r.cb - pb).abs() / db);
        ea = ea.max((r.ca - pa).abs() / da);
    }
    Ok(PointIdentityReport {
        x: x.iter().map(|c| c.re()).collect(),
        kappa: kappa.re(),
        kappa_fitted: fitted,
        branch,
        max_rel_b: eb.re(),
        max_rel_a: ea.re(),
        samples_used: rows.len(),
    })
}

/// Checks `ξ^C(B) = κλ₂B` and `ξ^C(A) = κ(μ₁A + μ₂B²)` on random `ẋ` at each point.
#[allow(clippy::too_many_arguments)]
pub fn nontrivial_condition_check<T, M, F>(
    metric: &M,
    oneform: &F,
    xi: &VectorField<T>,
    params: &SymmetryParams,
    points: &[Vec<T>],
    samples: usize,
    seed: u64,
) -> Result<NontrivialReport>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    if points.is_empty() {
        return Err(Error::ValidationError("at least one point is required".into()));
    }
    let pts: Vec<PointIdentityReport> = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| check_point(metric, oneform, xi, params, x, samples, seed, i as u64))
        .collect::<Result<_>>()?;
    let max_rel_b = pts.iter().fold(0.0f64, |m, p| m.max(p.max_rel_b));
    let max_rel_a = pts.iter().fold(0.0f64, |m, p| m.max(p.max_rel_a));
    let max_abs_kappa = pts.iter().fold(0.0f64, |m, p| m.max(p.kappa.abs()));
    let mixed_branch = pts.windows(2).any(|w| w[0].branch != w[1].branch);
    let kappa_nonzero = max_abs_kappa > KAPPA_ZERO_TOL;
    Ok(NontrivialReport {
        identities_hold: max_rel_b <= IDENTITY_TOL && max_rel_a <= IDENTITY_TOL,
        tolerance: IDENTITY_TOL,
        max_rel_b,
        max_rel_a,
        max_abs_kappa,
        kappa_nonzero,
        trivial: !kappa_nonzero,
        mixed_branch,
        points: pts,
        assumptions: vec!["κ is checked only at the probed points; non-vanishing elsewhere is not certified".into()],
    })
}

/// The `Ψ` generated by the symmetry parameters, normalized so `(1, q−1, 2q, 0)` gives `s^q`.
pub fn build_symmetry_psi<T: Real>(c: T, lambda2: T, mu1: T, mu2: T) -> Result<PsiSpec<T>> {
    symmetry_branch(lambda2.re(), mu1.re(), mu2.re())?;
    PsiSpec::symmetry(c, lambda2, mu1, mu2)
}

/// Worst relative deviation of `s − Ψ/Ψ′` from `2λ₂s/(μ₁ + μ₂s)` over `grid`.
pub fn symmetry_ode_residual<T: Real>(spec: &PsiSpec<T>, grid: &[T]) -> Result<f64> {
    let PsiSpec::SymmetryFamily { lambda2, mu1, mu2, .. } = spec else {
        return Err(Error::UnsupportedFamily(spec.family().into()));
    };
    let mut worst = 0.0f64;
    for &s in grid {
        let e = spec.eval(s)?;
        let lhs = s - e.psi / e.dpsi;
        let rhs = T::two() * *lambda2 * s / (*mu1 + *mu2 * s);
        let d = (lhs - rhs).abs() / T::one().max(lhs.abs()).max(rhs.abs());
        worst = worst.max(d.re());
    }
    Ok(worst)
}

/// Shape agreement `Ψ(s)/Ψ(s_ref)` of the power branch with `μ₁ − 2λ₂ = d` against the
/// exponential branch, as `d → 0`.
pub fn branch_limit_deviation(lambda2: f64, mu2: f64, d: f64, grid: &[f64], s_ref: f64) -> Result<f64> {
    if d == 0.0 || mu2 == 0.0 {
        return Err(Error::InvalidParams("need d ≠ 0 and μ2 ≠ 0".into()));
    }
    // log-ratios; the power branch is written to stay finite as d → 0
    let log_power = |s: f64| {
        (s / s_ref).ln() + 2.0 * lambda2 / d * ((d / (mu2 * s_ref)).ln_1p() - (d / (mu2 * s)).ln_1p())
    };
    let log_exp = |s: f64| (s / s_ref).ln() - 2.0 * lambda2 / (mu2 * s) + 2.0 * lambda2 / (mu2 * s_ref);
    Ok(grid.iter().fold(0.0f64, |m, &s| m.max((log_power(s) - log_exp(s)).exp_m1().abs())))
}
