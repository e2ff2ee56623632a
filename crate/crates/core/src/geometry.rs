//! Points, tangent vectors, the Lorentzian metric field `a`, the 1-form field `b`
//! and the scalar invariants `A`, `B`, `s`, `⟨b,b⟩`, `ρ` built from them.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::{dot, dot_compensated, minkowski, norm, Matrix};
use crate::scalar::Real;

/// Relative tolerance for the critical-point flags of `s(ẋ)`.
pub const CRITICAL_TOL: f64 = 1e-9;

/// Chart coordinates `x^i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint<T> {
    pub coords: Vec<T>,
}

impl<T: Real> SpacetimePoint<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidParams(format!("dimension must be at least 2, got {}", coords.len())));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParams("non-finite coordinate".into()));
        }
        Ok(Self { coords })
    }

    pub fn origin(n: usize) -> Self {
        Self { coords: vec![T::zero(); n] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl<T> Deref for SpacetimePoint<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.coords
    }
}

/// Components `ẋ^i` of a tangent vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector<T> {
    pub comps: Vec<T>,
}

impl<T: Real> TangentVector<T> {
    pub fn new(comps: Vec<T>) -> Self {
        Self { comps }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    pub fn scaled(&self, k: T) -> Self {
        Self { comps: self.comps.iter().map(|&c| c * k).collect() }
    }
}

impl<T> Deref for TangentVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.comps
    }
}

fn fd_step<T: Real>(x: T) -> T {
    T::epsilon().cbrt() * T::one().max(x.abs())
}

/// A position-dependent symmetric bilinear form `a_ij(x)`.
pub trait MetricField<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[T]) -> Result<Matrix<T>>;

    /// `∂_k a_ij` for `k = 0..n`. The default uses central differences.
    fn partials(&self, x: &[T]) -> Result<Vec<Matrix<T>>> {
        let mut xp = x.to_vec();
        (0..x.len())
            .map(|k| {
                let h = fd_step(x[k]);
                xp[k] = x[k] + h;
                let hi = self.eval(&xp)?;
                xp[k] = x[k] - h;
                let lo = self.eval(&xp)?;
                xp[k] = x[k];
                Ok((&hi - &lo).scale((T::two() * h).recip()))
            })
            .collect()
    }
}

/// A position-dependent covector `b_i(x)`.
pub trait OneFormField<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[T]) -> Result<Vec<T>>;

    /// `∂_k b_i` as rows `k`, columns `i`.
    fn partials(&self, x: &[T]) -> Result<Matrix<T>> {
        let n = x.len();
        let mut out = Matrix::zeros(n, n);
        let mut xp = x.to_vec();
        for k in 0..n {
            let h = fd_step(x[k]);
            xp[k] = x[k] + h;
            let hi = self.eval(&xp)?;
            xp[k] = x[k] - h;
            let lo = self.eval(&xp)?;
            xp[k] = x[k];
            for i in 0..n {
                out[(k, i)] = (hi[i] - lo[i]) / (T::two() * h);
            }
        }
        Ok(out)
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// The flat metric `diag(1, −1, …, −1)`.
#[derive(Clone, Debug)]
pub struct Minkowski {
    pub n: usize,
}

impl<T: Real> MetricField<T> for Minkowski {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &[T]) -> Result<Matrix<T>> {
        check_dim(self.n, x.len())?;
        Ok(minkowski(self.n))
    }
    fn partials(&self, x: &[T]) -> Result<Vec<Matrix<T>>> {
        check_dim(self.n, x.len())?;
        Ok(vec![Matrix::zeros(self.n, self.n); self.n])
    }
}

/// `a = e^{2 q x⁰} η`.
#[derive(Clone, Debug)]
pub struct ConformalMinkowski<T> {
    pub n: usize,
    pub q: T,
}

impl<T: Real> MetricField<T> for ConformalMinkowski<T> {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &[T]) -> Result<Matrix<T>> {
        check_dim(self.n, x.len())?;
        Ok(minkowski::<T>(self.n).scale((T::two() * self.q * x[0]).exp()))
    }
    fn partials(&self, x: &[T]) -> Result<Vec<Matrix<T>>> {
        let a = self.eval(x)?;
        let mut out = vec![Matrix::zeros(self.n, self.n); self.n];
        out[0] = a.scale(T::two() * self.q);
        Ok(out)
    }
}

/// A position-independent metric.
#[derive(Clone, Debug)]
pub struct ConstantMetric<T> {
    pub a: Matrix<T>,
}

impl<T: Real> MetricField<T> for ConstantMetric<T> {
    fn dim(&self) -> usize {
        self.a.rows()
    }
    fn eval(&self, x: &[T]) -> Result<Matrix<T>> {
        check_dim(self.a.rows(), x.len())?;
        Ok(self.a.clone())
    }
    fn partials(&self, x: &[T]) -> Result<Vec<Matrix<T>>> {
        let n = self.a.rows();
        check_dim(n, x.len())?;
        Ok(vec![Matrix::zeros(n, n); n])
    }
}

/// A constant covector.
#[derive(Clone, Debug)]
pub struct ConstantOneForm<T> {
    pub b: Vec<T>,
}

impl<T: Real> OneFormField<T> for ConstantOneForm<T> {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.b.len(), x.len())?;
        Ok(self.b.clone())
    }
    fn partials(&self, x: &[T]) -> Result<Matrix<T>> {
        let n = self.b.len();
        check_dim(n, x.len())?;
        Ok(Matrix::zeros(n, n))
    }
}

/// Variable names `x0, x1, …` used by coordinate expressions.
pub fn coord_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

fn coord_env<'a, T: Real>(names: &'a [String], x: &[T]) -> Vec<(&'a str, T)> {
    names.iter().map(String::as_str).zip(x.iter().copied()).collect()
}

/// Metric given componentwise by coordinate expressions, with symbolic partials.
#[derive(Clone, Debug)]
pub struct ExprMetric {
    names: Vec<String>,
    comps: Vec<Vec<Expr>>,
    partials: Vec<Vec<Vec<Expr>>>,
}

impl ExprMetric {
    /// Builds from an `n×n` table; the upper triangle must mirror the lower one.
    pub fn new(comps: Vec<Vec<Expr>>) -> Result<Self> {
        let n = comps.len();
        if n < 2 || comps.iter().any(|r| r.len() != n) {
            return Err(Error::ValidationError("metric components must form a square table of size ≥ 2".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if comps[i][j] != comps[j][i] {
                    return Err(Error::ValidationError(format!("metric component ({i},{j}) differs from ({j},{i})")));
                }
            }
        }
        let names = coord_names(n);
        for e in comps.iter().flatten() {
            if let Some(v) = e.variables().into_iter().find(|v| !names.contains(v)) {
                return Err(Error::UnboundVariable(v));
            }
        }
        let partials = names
            .iter()
            .map(|k| comps.iter().map(|row| row.iter().map(|e| e.diff(k)).collect()).collect())
            .collect();
        Ok(Self { names, comps, partials })
    }

    pub fn components(&self) -> &[Vec<Expr>] {
        &self.comps
    }

    fn table<T: Real>(&self, t: &[Vec<Expr>], x: &[T]) -> Result<Matrix<T>> {
        check_dim(self.names.len(), x.len())?;
        let env = coord_env(&self.names, x);
        let n = self.names.len();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = t[i][j].eval(&env)?;
            }
        }
        Ok(m)
    }
}

impl<T: Real> MetricField<T> for ExprMetric {
    fn dim(&self) -> usize {
        self.names.len()
    }
    fn eval(&self, x: &[T]) -> Result<Matrix<T>> {
        self.table(&self.comps, x)
    }
    fn partials(&self, x: &[T]) -> Result<Vec<Matrix<T>>> {
        self.partials.iter().map(|t| self.table(t, x)).collect()
    }
}

/// Covector given componentwise by coordinate expressions.
#[derive(Clone, Debug)]
pub struct ExprOneForm {
    names: Vec<String>,
    comps: Vec<Expr>,
    partials: Vec<Vec<Expr>>,
}

impl ExprOneForm {
    pub fn new(comps: Vec<Expr>) -> Result<Self> {
        let n = comps.len();
        if n < 2 {
            return Err(Error::ValidationError("one-form needs at least 2 components".into()));
        }
        let names = coord_names(n);
        for e in &comps {
            if let Some(v) = e.variables().into_iter().find(|v| !names.contains(v)) {
                return Err(Error::UnboundVariable(v));
            }
        }
        let partials = names.iter().map(|k| comps.iter().map(|e| e.diff(k)).collect()).collect();
        Ok(Self { names, comps, partials })
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }
}

impl<T: Real> OneFormField<T> for ExprOneForm {
    fn dim(&self) -> usize {
        self.names.len()
    }
    fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.names.len(), x.len())?;
        let env = coord_env(&self.names, x);
        self.comps.iter().map(|e| e.eval(&env)).collect()
    }
    fn partials(&self, x: &[T]) -> Result<Matrix<T>> {
        check_dim(self.names.len(), x.len())?;
        let env = coord_env(&self.names, x);
        let n = self.names.len();
        let mut out = Matrix::zeros(n, n);
        for k in 0..n {
            for i in 0..n {
                out[(k, i)] = self.partials[k][i].eval(&env)?;
            }
        }
        Ok(out)
    }
}

type MetricFn<T> = dyn Fn(&[T]) -> Result<Matrix<T>> + Send + Sync;
type OneFormFn<T> = dyn Fn(&[T]) -> Result<Vec<T>> + Send + Sync;

/// Metric backed by a closure; partials fall back to central differences.
#[derive(Clone)]
pub struct FnMetric<T> {
    n: usize,
    f: Arc<MetricFn<T>>,
}

impl<T: Real> FnMetric<T> {
    pub fn new(n: usize, f: impl Fn(&[T]) -> Result<Matrix<T>> + Send + Sync + 'static) -> Self {
        Self { n, f: Arc::new(f) }
    }
}

impl<T> fmt::Debug for FnMetric<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnMetric(n = {})", self.n)
    }
}

impl<T: Real> MetricField<T> for FnMetric<T> {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &[T]) -> Result<Matrix<T>> {
        check_dim(self.n, x.len())?;
        (self.f)(x)
    }
}

/// One-form backed by a closure.
#[derive(Clone)]
pub struct FnOneForm<T> {
    n: usize,
    f: Arc<OneFormFn<T>>,
}

impl<T: Real> FnOneForm<T> {
    pub fn new(n: usize, f: impl Fn(&[T]) -> Result<Vec<T>> + Send + Sync + 'static) -> Self {
        Self { n, f: Arc::new(f) }
    }
}

impl<T> fmt::Debug for FnOneForm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnOneForm(n = {})", self.n)
    }
}

impl<T: Real> OneFormField<T> for FnOneForm<T> {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.n, x.len())?;
        (self.f)(x)
    }
}

/// Everything at a fixed point `x` that does not depend on the direction `ẋ`.
#[derive(Clone, Debug)]
pub struct LocalFrame<T> {
    pub a: Matrix<T>,
    pub a_inv: Matrix<T>,
    pub det_a: T,
    pub b: Vec<T>,
    /// `b̃^i = a^{ij} b_j`.
    pub b_up: Vec<T>,
    pub bnorm: T,
}

impl<T: Real> LocalFrame<T> {
    pub fn new(a: Matrix<T>, b: Vec<T>) -> Result<Self> {
        let n = a.rows();
        check_dim(n, b.len())?;
        if b.iter().any(|c| !c.is_finite()) {
            return Err(Error::ValidationError("non-finite one-form component".into()));
        }
        let asym = a.asymmetry();
        if asym > T::lit(1e-10) * T::one().max(a.max_abs()) {
            return Err(Error::ValidationError(format!("metric is not symmetric (defect {})", asym.re())));
        }
        let det_a = a.det();
        let scale = a.max_abs().powi(n as i32);
        if !(det_a.abs() > T::epsilon() * T::lit(16.0) * scale) {
            return Err(Error::DegenerateMetric { det: det_a.re() });
        }
        let a_inv = a.inverse().map_err(|_| Error::DegenerateMetric { det: det_a.re() })?;
        let b_up = a_inv.mul_vec(&b);
        let bnorm = dot(&b_up, &b);
        Ok(Self { a, a_inv, det_a, b, b_up, bnorm })
    }

    pub fn at<M, F>(metric: &M, oneform: &F, x: &[T]) -> Result<Self>
    where
        M: MetricField<T> + ?Sized,
        F: OneFormField<T> + ?Sized,
    {
        check_dim(metric.dim(), x.len())?;
        check_dim(metric.dim(), oneform.dim())?;
        Self::new(metric.eval(x)?, oneform.eval(x)?)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn scalars(&self, v: &[T]) -> Result<AlphaBetaScalars<T>> {
        check_dim(self.dim(), v.len())?;
        if v.iter().all(|c| c.is_zero()) {
            return Err(Error::ZeroVector);
        }
        let a = self.a.quadratic(v);
        let b = dot_compensated(&self.b, v);
        let mut abs_scale = T::zero();
        for i in 0..v.len() {
            for j in 0..v.len() {
                abs_scale = abs_scale + (self.a[(i, j)] * v[i] * v[j]).abs();
            }
        }
        let on_light_cone = a.abs() <= T::lit(64.0) * T::epsilon() * abs_scale;
        let (s, rho) = if on_light_cone {
            (None, None)
        } else {
            let s = b * b / a;
            (Some(s), Some(s - self.bnorm))
        };
        Ok(AlphaBetaScalars { a, b, s, bnorm: self.bnorm, rho })
    }

    /// `a_ij v^j`.
    pub fn lower(&self, v: &[T]) -> Vec<T> {
        self.a.mul_vec(v)
    }
}

/// `A`, `B`, `s = B²/A`, `⟨b,b⟩`, `ρ = s − ⟨b,b⟩` at one `(x, ẋ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaBetaScalars<T> {
    #[serde(rename = "A")]
    pub a: T,
    #[serde(rename = "B")]
    pub b: T,
    /// `None` when `ẋ` is null for `a`.
    pub s: Option<T>,
    pub bnorm: T,
    pub rho: Option<T>,
}

impl<T: Real> AlphaBetaScalars<T> {
    pub fn on_light_cone(&self) -> bool {
        self.s.is_none()
    }

    pub fn s(&self) -> Result<T> {
        self.s.ok_or(Error::SOnLightCone { a: self.a.re() })
    }
}

pub fn eval_scalars<T, M, F>(metric: &M, oneform: &F, x: &[T], v: &[T]) -> Result<AlphaBetaScalars<T>>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    LocalFrame::at(metric, oneform, x)?.scalars(v)
}

/// `⟨b,b⟩` computed both as `a^{ij}b_i b_j` and `a_ij b̃^i b̃^j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BNorm<T> {
    pub value: T,
    pub via_raised: T,
}

pub fn b_norm<T, M, F>(metric: &M, oneform: &F, x: &[T]) -> Result<BNorm<T>>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    let fr = LocalFrame::at(metric, oneform, x)?;
    Ok(BNorm { value: fr.a_inv.quadratic(&fr.b), via_raised: fr.a.quadratic(&fr.b_up) })
}

pub fn raise_index<T, M, F>(metric: &M, oneform: &F, x: &[T]) -> Result<TangentVector<T>>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    Ok(TangentVector::new(LocalFrame::at(metric, oneform, x)?.b_up))
}

pub fn lower_index<T, M>(metric: &M, x: &[T], v: &[T]) -> Result<Vec<T>>
where
    T: Real,
    M: MetricField<T> + ?Sized,
{
    check_dim(metric.dim(), v.len())?;
    Ok(metric.eval(x)?.mul_vec(v))
}

pub fn s_lower_bound<T: Real>(bnorm: T) -> T {
    bnorm.max(T::zero())
}

/// Which critical set of `s(ẋ)` a vector sits on, with the gradient identity check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalPointFlags<T> {
    pub b_zero: bool,
    pub proportional_to_b_tilde: bool,
    pub s: T,
    /// `max_i |B(b_i A − B a_ij ẋ^j)|`, relative to `|B|(|b||A| + |B||a ẋ|)`.
    pub gradient_residual: T,
    pub gradient_identity_holds: bool,
}

pub fn s_critical_points<T, M, F>(metric: &M, oneform: &F, x: &[T], v: &[T]) -> Result<CriticalPointFlags<T>>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    let fr = LocalFrame::at(metric, oneform, x)?;
    let sc = fr.scalars(v)?;
    let s = sc.s()?;
    let tol = T::lit(CRITICAL_TOL);
    let (bn, vn) = (norm(&fr.b), norm(v));
    let b_zero = sc.b.abs() <= tol * bn * vn;

    let bt2 = dot(&fr.b_up, &fr.b_up);
    let proportional = if bt2.is_zero() {
        false
    } else {
        let k = dot(v, &fr.b_up) / bt2;
        let perp: Vec<T> = v.iter().zip(&fr.b_up).map(|(&vi, &bi)| vi - k * bi).collect();
        norm(&perp) <= tol * vn
    };

    let av = fr.lower(v);
    let mut resid = T::zero();
    for i in 0..v.len() {
        resid = resid.max((sc.b * (fr.b[i] * sc.a - sc.b * av[i])).abs());
    }
    let scale = sc.b.abs() * (bn * sc.a.abs() + sc.b.abs() * norm(&av));
    let rel = if scale.is_zero() { T::zero() } else { resid / scale };
    Ok(CriticalPointFlags {
        b_zero,
        proportional_to_b_tilde: proportional,
        s,
        gradient_residual: rel,
        gradient_identity_holds: !(b_zero || proportional) || rel <= T::lit(1e-8),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eta() -> Minkowski {
        Minkowski { n: 4 }
    }

    fn cb(b: [f64; 4]) -> ConstantOneForm<f64> {
        ConstantOneForm { b: b.to_vec() }
    }

    #[test]
    fn scalars_for_lightlike_b() {
        let sc = eval_scalars(&eta(), &cb([1.0, 1.0, 0.0, 0.0]), &[0.0; 4], &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!((sc.a, sc.b, sc.s, sc.bnorm, sc.rho), (1.0, 1.0, Some(1.0), 0.0, Some(1.0)));
    }

    #[test]
    fn scalars_for_zero_form() {
        let sc = eval_scalars(&eta(), &cb([0.0; 4]), &[0.0; 4], &[2.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!((sc.a, sc.b, sc.s), (3.0, 0.0, Some(0.0)));
    }

    #[test]
    fn light_cone_is_a_flag_and_zero_vector_an_error() {
        let sc = eval_scalars(&eta(), &cb([1.0, 0.0, 0.0, 0.0]), &[0.0; 4], &[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(sc.on_light_cone());
        assert!(matches!(sc.s(), Err(Error::SOnLightCone { .. })));
        let e = eval_scalars(&eta(), &cb([1.0, 0.0, 0.0, 0.0]), &[0.0; 4], &[0.0; 4]);
        assert_eq!(e, Err(Error::ZeroVector));
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let m = ConstantMetric { a: Matrix::from_diag(&[1.0, -1.0, 0.0, -1.0]) };
        let e = b_norm(&m, &cb([1.0, 0.0, 0.0, 0.0]), &[0.0; 4]);
        assert!(matches!(e, Err(Error::DegenerateMetric { .. })));
    }

    #[test]
    fn b_norm_examples() {
        for (b, want) in [([1.0, 0.0, 0.0, 0.0], 1.0), ([1.0, 1.0, 0.0, 0.0], 0.0), ([0.0, 1.0, 0.0, 0.0], -1.0)] {
            let r = b_norm(&eta(), &cb(b), &[0.0; 4]).unwrap();
            assert_eq!(r.value, want);
            assert_eq!(r.via_raised, want);
        }
    }

    #[test]
    fn raise_index_examples() {
        let r = raise_index(&eta(), &cb([0.0, 1.0, 0.0, 0.0]), &[0.0; 4]).unwrap();
        assert_eq!(r.comps, vec![0.0, -1.0, 0.0, 0.0]);
        let m = ConstantMetric { a: Matrix::from_diag(&[4.0, -1.0, -1.0, -1.0]) };
        let r = raise_index(&m, &cb([2.0, 0.0, 0.0, 0.0]), &[0.0; 4]).unwrap();
        assert!((r.comps[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn s_lower_bound_examples() {
        assert_eq!(s_lower_bound(0.5), 0.5);
        assert_eq!(s_lower_bound(-0.5), 0.0);
        assert_eq!(s_lower_bound(0.0), 0.0);
    }

    #[test]
    fn critical_point_examples() {
        let x = [0.0; 4];
        let f = s_critical_points(&eta(), &cb([1.0, 0.0, 0.0, 0.0]), &x, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(f.proportional_to_b_tilde && !f.b_zero && f.s == 1.0 && f.gradient_identity_holds);
        let f = s_critical_points(&eta(), &cb([0.0, 1.0, 0.0, 0.0]), &x, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(f.b_zero && !f.proportional_to_b_tilde && f.s == 0.0 && f.gradient_identity_holds);
        let f = s_critical_points(&eta(), &cb([1.0, 0.0, 0.0, 0.0]), &x, &[1.0, 0.5, 0.0, 0.0]).unwrap();
        assert!(!f.b_zero && !f.proportional_to_b_tilde);
    }

    #[test]
    fn expression_fields_have_symbolic_partials() {
        let one = |s: &str| Expr::parse(s).unwrap();
        let g = |d: &str| {
            let z = one("0");
            vec![
                vec![one(&format!("{d}exp(x0)")), z.clone(), z.clone()],
                vec![z.clone(), one("-1"), z.clone()],
                vec![z.clone(), z.clone(), one("-x1^2 - 1")],
            ]
        };
        let m = ExprMetric::new(g("")).unwrap();
        let x = [0.3, 0.7, -0.2];
        let p = MetricField::<f64>::partials(&m, &x).unwrap();
        assert!((p[0][(0, 0)] - 0.3f64.exp()).abs() < 1e-15);
        assert!((p[1][(2, 2)] + 1.4).abs() < 1e-15);
        let fd = FnMetric::new(3, move |x: &[f64]| MetricField::eval(&m, x));
        let q = fd.partials(&x).unwrap();
        for k in 0..3 {
            assert!((&p[k] - &q[k]).max_abs() < 1e-9);
        }
        assert!(matches!(ExprMetric::new(vec![vec![one("y")]]), Err(Error::ValidationError(_))));
    }

    #[test]
    fn conformal_example_scalars() {
        let q = 0.5;
        let a = ConformalMinkowski { n: 4, q };
        let b = ExprOneForm::new(
            ["exp((0.5-1)*x0)", "exp((0.5-1)*x0)", "0", "0"].iter().map(|s| Expr::parse(s).unwrap()).collect(),
        )
        .unwrap();
        let sc = eval_scalars(&a, &b, &[0.0; 4], &[1.0, 0.5, 0.0, 0.0]).unwrap();
        // independent product: a = η at x⁰ = 0
        let v = [1.0, 0.5, 0.0, 0.0];
        let av = minkowski::<f64>(4).mul_vec(&v);
        assert_eq!(sc.a, dot(&av, &v));
        assert_eq!((sc.a, sc.b, sc.s), (0.75, 1.5, Some(3.0)));
    }
}
