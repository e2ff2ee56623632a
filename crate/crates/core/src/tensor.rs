//! The fundamental tensor `g_ij = ½ ∂²L/∂ẋ^i∂ẋ^j` of `L = A·Ψ(s)`: closed form,
//! an independent Hessian oracle, determinant and inverse formulas, signature,
//! and the rank-one / rank-two update identities behind them.

use serde::Serialize;

use crate::dual::{hessian, HyperDual};
use crate::error::{Error, Result};
use crate::geometry::{AlphaBetaScalars, LocalFrame, MetricField, OneFormField};
use crate::linalg::{dot, Matrix};
use crate::psi::{PsiEval, PsiSpec};
use crate::scalar::Real;

/// Default zero band for eigenvalues, relative to the largest `|λ|`.
pub const SIGNATURE_TOL: f64 = 1e-9;
/// The closed-form inverse is refused when `|ν| ≤ NU_TOL·Ψ²`.
pub const NU_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    /// Hyper-dual forward-mode Hessian.
    NumericHessian,
    /// Fourth-order central differences (callback-based Ψ).
    FiniteDifference,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FundamentalTensor<T> {
    pub g: Matrix<T>,
    pub provenance: Provenance,
    pub v: Vec<T>,
}

/// Scalars plus `Ψ, Ψ′, Ψ″` at one direction; shared by the closed forms.
#[derive(Clone, Debug)]
pub struct DirectionData<T> {
    pub scalars: AlphaBetaScalars<T>,
    pub s: T,
    pub psi: PsiEval<T>,
    /// `a_ij ẋ^j`.
    pub av: Vec<T>,
    /// `s_{·i} = (2B b_i − 2s a_ij ẋ^j)/A`.
    pub sdot: Vec<T>,
}

impl<T: Real> DirectionData<T> {
    pub fn new(frame: &LocalFrame<T>, spec: &PsiSpec<T>, v: &[T]) -> Result<Self> {
        let scalars = frame.scalars(v)?;
        let s = scalars.s()?;
        let psi = spec.eval(s)?;
        let av = frame.lower(v);
        let two = T::two();
        let sdot = frame
            .b
            .iter()
            .zip(&av)
            .map(|(&bi, &avi)| (two * scalars.b * bi - s * two * avi) / scalars.a)
            .collect();
        Ok(Self { scalars, s, psi, av, sdot })
    }

    /// `g = f·a + U C Uᵀ` with `U = [b | a·ẋ]`: returns `f = Ψ − sΨ′` and
    /// `C = [Ψ′ + 2sΨ″, −2sBΨ″/A, 2s²Ψ″/A]` (entries 11, 12, 22).
    pub fn update_coefficients(&self) -> (T, [T; 3]) {
        let PsiEval { psi, dpsi, d2psi } = self.psi;
        let (s, a, b) = (self.s, self.scalars.a, self.scalars.b);
        let two = T::two();
        let k = two * s * d2psi;
        (psi - s * dpsi, [dpsi + k, -k * b / a, k * s / a])
    }

    pub fn lagrangian(&self) -> T {
        self.scalars.a * self.psi.psi
    }

    pub fn nu(&self) -> T {
        self.psi.nu(self.s, self.scalars.bnorm)
    }

    /// `σ + ρσ′`, i.e. `d/ds(ρσ)`.
    pub fn second_condition(&self) -> T {
        self.psi.sigma(self.s) + (self.s - self.scalars.bnorm) * self.psi.dsigma(self.s)
    }
}

pub fn lagrangian_at<T: Real>(frame: &LocalFrame<T>, spec: &PsiSpec<T>, v: &[T]) -> Result<T> {
    let sc = frame.scalars(v)?;
    Ok(sc.a * spec.psi(sc.s()?)?)
}

pub fn fundamental_tensor_closed_at<T: Real>(
    frame: &LocalFrame<T>,
    spec: &PsiSpec<T>,
    v: &[T],
) -> Result<FundamentalTensor<T>> {
    let d = DirectionData::new(frame, spec, v)?;
    let (f, c) = d.update_coefficients();
    let (b, av) = (&frame.b, &d.av);
    let n = frame.dim();
    let g = Matrix::from_fn(n, n, |i, j| {
        frame.a[(i, j)] * f + c[0] * b[i] * b[j] + c[1] * (b[i] * av[j] + av[i] * b[j]) + c[2] * av[i] * av[j]
    });
    Ok(FundamentalTensor { g, provenance: Provenance::ClosedForm, v: v.to_vec() })
}

/// `½ ∂²L/∂ẋ^i∂ẋ^j` computed without the closed form.
pub fn fundamental_tensor_numeric_at<T: Real>(
    frame: &LocalFrame<T>,
    spec: &PsiSpec<T>,
    v: &[T],
) -> Result<FundamentalTensor<T>> {
    // validates direction and domain up front
    lagrangian_at(frame, spec, v)?;
    match spec.lift() {
        Some(lifted) => {
            let a = frame.a.map(HyperDual::constant);
            let b: Vec<HyperDual<T>> = frame.b.iter().map(|&x| HyperDual::constant(x)).collect();
            let failure = std::cell::Cell::new(None);
            let f = |w: &[HyperDual<T>]| {
                let aa = a.quadratic(w);
                let bb = dot(&b, w);
                match lifted.eval(bb * bb / aa) {
                    Ok(e) => aa * e.psi,
                    Err(err) => {
                        failure.set(Some(err));
                        HyperDual::constant(T::nan())
                    }
                }
            };
            let h = hessian(f, v);
            if let Some(err) = failure.take() {
                return Err(err);
            }
            let n = v.len();
            let g = Matrix::from_fn(n, n, |i, j| T::half() * h[i][j]);
            Ok(FundamentalTensor { g, provenance: Provenance::NumericHessian, v: v.to_vec() })
        }
        None => fd_hessian(frame, spec, v),
    }
}

fn fd_hessian<T: Real>(frame: &LocalFrame<T>, spec: &PsiSpec<T>, v: &[T]) -> Result<FundamentalTensor<T>> {
    let n = v.len();
    let scale = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let h = T::epsilon().powf(T::lit(1.0 / 6.0)) * scale;
    let l = |di: usize, ki: i32, dj: usize, kj: i32| -> Result<T> {
        let mut w = v.to_vec();
        w[di] = w[di] + T::lit(ki as f64) * h;
        w[dj] = w[dj] + T::lit(kj as f64) * h;
        lagrangian_at(frame, spec, &w).map_err(|e| Error::StencilOutOfDomain(e.to_string()))
    };
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        let c = |k: i32| l(i, k, i, 0);
        let d2 = (-c(2)? + T::lit(16.0) * c(1)? - T::lit(30.0) * c(0)? + T::lit(16.0) * c(-1)? - c(-2)?) / (T::lit(12.0) * h * h);
        g[(i, i)] = T::half() * d2;
        for j in 0..i {
            let f = |a: i32, b: i32| l(i, a, j, b);
            let t8 = f(1, -2)? + f(2, -1)? + f(-2, 1)? + f(-1, 2)? - f(-1, -2)? - f(-2, -1)? - f(1, 2)? - f(2, 1)?;
            let t1 = f(2, -2)? + f(-2, 2)? - f(-2, -2)? - f(2, 2)?;
            let t64 = f(-1, -1)? + f(1, 1)? - f(1, -1)? - f(-1, 1)?;
            let d2 = (T::lit(8.0) * t8 - t1 + T::lit(64.0) * t64) / (T::lit(144.0) * h * h);
            g[(i, j)] = T::half() * d2;
            g[(j, i)] = T::half() * d2;
        }
    }
    Ok(FundamentalTensor { g, provenance: Provenance::FiniteDifference, v: v.to_vec() })
}

/// `det g = Ψ²(Ψ−sΨ′)^{n−3} det(a) (σ + ρσ′)` for any dimension `n`.
pub fn det_g_closed_at<T: Real>(frame: &LocalFrame<T>, spec: &PsiSpec<T>, v: &[T]) -> Result<T> {
    let d = DirectionData::new(frame, spec, v)?;
    let n = frame.dim() as i32;
    if d.psi.psi.is_zero() {
        return Err(Error::domain(d.s.re(), "Ψ = 0"));
    }
    let f = d.psi.first(d.s);
    if f.is_zero() && n < 3 {
        return Err(Error::domain(d.s.re(), "Ψ − sΨ′ = 0"));
    }
    Ok(d.psi.psi * d.psi.psi * f.powi(n - 3) * frame.det_a * d.second_condition())
}

/// Closed-form `g^{ij}`.
pub fn inverse_g_closed_at<T: Real>(frame: &LocalFrame<T>, spec: &PsiSpec<T>, v: &[T]) -> Result<Matrix<T>> {
    let d = DirectionData::new(frame, spec, v)?;
    let PsiEval { psi, dpsi, d2psi } = d.psi;
    let (s, a, b, bn) = (d.s, d.scalars.a, d.scalars.b, d.scalars.bnorm);
    let f = psi - s * dpsi;
    let nu = d.nu();
    let two = T::two();
    if !(f.abs() > T::lit(NU_TOL) * psi.abs().max(T::min_positive_value())) {
        return Err(Error::SingularTensor(format!("Ψ − sΨ′ = {:e}", f.re())));
    }
    if !(nu.abs() > T::lit(NU_TOL) * psi * psi) {
        return Err(Error::SingularTensor(format!("ν = {:e} below tolerance", nu.re())));
    }
    let c_vv = two * s * s * d2psi * (dpsi * (s - bn) - psi) / (nu * a);
    let c_bv = two * b * s * psi * d2psi / (nu * a);
    let c_bb = -(dpsi * f + two * s * psi * d2psi) / nu;
    let bt = &frame.b_up;
    let n = frame.dim();
    Ok(Matrix::from_fn(n, n, |i, j| {
        frame.a_inv[(i, j)] / f + c_vv * v[i] * v[j] + c_bv * (bt[i] * v[j] + v[i] * bt[j]) + c_bb * bt[i] * bt[j]
    }))
}

pub fn fundamental_tensor_closed<T, M, F>(metric: &M, oneform: &F, spec: &PsiSpec<T>, x: &[T], v: &[T]) -> Result<FundamentalTensor<T>>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    let frame = LocalFrame::at(metric, oneform, x)?;
    fundamental_tensor_closed_at(&frame, &spec.with_bnorm(frame.bnorm), v)
}

pub fn fundamental_tensor_numeric<T, M, F>(metric: &M, oneform: &F, spec: &PsiSpec<T>, x: &[T], v: &[T]) -> Result<FundamentalTensor<T>>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    let frame = LocalFrame::at(metric, oneform, x)?;
    fundamental_tensor_numeric_at(&frame, &spec.with_bnorm(frame.bnorm), v)
}

pub fn det_g_closed<T, M, F>(metric: &M, oneform: &F, spec: &PsiSpec<T>, x: &[T], v: &[T]) -> Result<T>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    let frame = LocalFrame::at(metric, oneform, x)?;
    det_g_closed_at(&frame, &spec.with_bnorm(frame.bnorm), v)
}

pub fn inverse_g_closed<T, M, F>(metric: &M, oneform: &F, spec: &PsiSpec<T>, x: &[T], v: &[T]) -> Result<Matrix<T>>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    let frame = LocalFrame::at(metric, oneform, x)?;
    inverse_g_closed_at(&frame, &spec.with_bnorm(frame.bnorm), v)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignatureResult<T> {
    pub n_pos: usize,
    pub n_neg: usize,
    pub n_zero: usize,
    pub min_abs_eigen: T,
    pub tolerance: T,
    pub eigenvalues: Vec<T>,
}

impl<T: Real> SignatureResult<T> {
    /// One positive and `n − 1` negative eigenvalues.
    pub fn is_lorentzian(&self) -> bool {
        self.n_pos == 1 && self.n_zero == 0 && self.n_neg + 1 == self.eigenvalues.len()
    }

    pub fn triple(&self) -> (usize, usize, usize) {
        (self.n_pos, self.n_neg, self.n_zero)
    }
}

/// Eigenvalue sign counts; `|λ| < tol·max|λ|` counts as zero.
pub fn signature<T: Real>(m: &Matrix<T>, tol: T) -> SignatureResult<T> {
    let ev = m.symmetric_eigenvalues();
    let top = ev.iter().fold(T::zero(), |acc, x| acc.max(x.abs()));
    let band = tol * top;
    let mut r = SignatureResult {
        n_pos: 0,
        n_neg: 0,
        n_zero: 0,
        min_abs_eigen: ev.iter().fold(T::infinity(), |acc, x| acc.min(x.abs())),
        tolerance: band,
        eigenvalues: ev.clone(),
    };
    for &l in &ev {
        if l.abs() < band || top.is_zero() {
            r.n_zero += 1;
        } else if l > T::zero() {
            r.n_pos += 1;
        } else {
            r.n_neg += 1;
        }
    }
    r
}

fn base_inverse<T: Real>(q: &Matrix<T>) -> Result<(Matrix<T>, T)> {
    let det = q.det();
    let n = q.rows() as i32;
    if !(det.abs() > T::epsilon() * q.max_abs().powi(n)) {
        return Err(Error::SingularBase);
    }
    Ok((q.inverse().map_err(|_| Error::SingularBase)?, det))
}

fn nonzero<T: Real>(x: T, scale: T, what: &str) -> Result<()> {
    if x.abs() > T::lit(64.0) * T::epsilon() * T::one().max(scale.abs()) {
        Ok(())
    } else {
        Err(Error::SingularUpdate(format!("{what} = {:e}", x.re())))
    }
}

/// `det(Q + δCCᵀ) = det Q (1 + δ C^kC_k)`.
pub fn rank_one_update_det<T: Real>(q: &Matrix<T>, delta: T, c: &[T]) -> Result<T> {
    let (qi, det) = base_inverse(q)?;
    Ok(det * (T::one() + delta * qi.quadratic(c)))
}

/// `(Q + δCCᵀ)⁻¹ = Q⁻¹ − δ ĉĉᵀ/(1 + δ C^kC_k)` with `ĉ = Q⁻¹C`.
pub fn rank_one_update_inv<T: Real>(q: &Matrix<T>, delta: T, c: &[T]) -> Result<Matrix<T>> {
    let (qi, _) = base_inverse(q)?;
    let ch = qi.mul_vec(c);
    let den = T::one() + delta * dot(c, &ch);
    nonzero(den, delta * dot(c, &ch), "1 + δC^kC_k")?;
    Ok(&qi - &Matrix::outer(&ch, &ch).scale(delta / den))
}

struct TwoUpdate<T> {
    qi: Matrix<T>,
    det: T,
    bh: Vec<T>,
    ch: Vec<T>,
    beta: T,
    gamma: T,
    eps: T,
}

fn two_update<T: Real>(q: &Matrix<T>, b: &[T], c: &[T]) -> Result<TwoUpdate<T>> {
    let (qi, det) = base_inverse(q)?;
    let bh = qi.mul_vec(b);
    let ch = qi.mul_vec(c);
    let (beta, gamma, eps) = (dot(b, &bh), dot(c, &ch), dot(b, &ch));
    Ok(TwoUpdate { qi, det, bh, ch, beta, gamma, eps })
}

/// `det(Q + δBBᵀ + μCCᵀ) = det Q [(1+δB^kB_k)(1+μC^kC_k) − δμ(B^kC_k)²]`.
pub fn rank_two_update_det<T: Real>(q: &Matrix<T>, delta: T, b: &[T], mu: T, c: &[T]) -> Result<T> {
    let t = two_update(q, b, c)?;
    let one = T::one();
    Ok(t.det * ((one + delta * t.beta) * (one + mu * t.gamma) - delta * mu * t.eps * t.eps))
}

pub fn rank_two_update_inv<T: Real>(q: &Matrix<T>, delta: T, b: &[T], mu: T, c: &[T]) -> Result<Matrix<T>> {
    let t = two_update(q, b, c)?;
    let one = T::one();
    let p1 = (one + delta * t.beta) * (one + mu * t.gamma);
    let p2 = delta * mu * t.eps * t.eps;
    let den = p1 - p2;
    nonzero(den, p1.abs().max(p2.abs()), "(1+δB^kB_k)(1+μC^kC_k) − δμ(B^kC_k)²")?;
    let n = q.rows();
    let corr = Matrix::from_fn(n, n, |i, j| {
        mu * (one + delta * t.beta) * t.ch[i] * t.ch[j] - mu * delta * t.eps * (t.bh[i] * t.ch[j] + t.ch[i] * t.bh[j])
            + delta * (one + mu * t.gamma) * t.bh[i] * t.bh[j]
    });
    Ok(&t.qi - &corr.scale(den.recip()))
}

/// `g = (Ψ−sΨ′)(a + δbbᵀ + μ s_· s_·ᵀ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankTwoUpdateParams<T> {
    pub factor: T,
    pub delta: T,
    pub mu: T,
    pub bvec: Vec<T>,
    pub cvec: Vec<T>,
    pub base: Matrix<T>,
}

impl<T: Real> RankTwoUpdateParams<T> {
    pub fn new(frame: &LocalFrame<T>, spec: &PsiSpec<T>, v: &[T]) -> Result<Self> {
        let d = DirectionData::new(frame, spec, v)?;
        let f = d.psi.first(d.s);
        if f.is_zero() {
            return Err(Error::domain(d.s.re(), "Ψ − sΨ′ = 0"));
        }
        Ok(Self {
            factor: f,
            delta: d.psi.dpsi / f,
            mu: T::half() * d.scalars.a * d.psi.d2psi / f,
            bvec: frame.b.clone(),
            cvec: d.sdot,
            base: frame.a.clone(),
        })
    }

    pub fn reconstruct(&self) -> Matrix<T> {
        let n = self.base.rows();
        Matrix::from_fn(n, n, |i, j| {
            self.factor
                * (self.base[(i, j)] + self.delta * self.bvec[i] * self.bvec[j] + self.mu * self.cvec[i] * self.cvec[j])
        })
    }

    pub fn det(&self) -> Result<T> {
        let n = self.base.rows() as i32;
        Ok(self.factor.powi(n) * rank_two_update_det(&self.base, self.delta, &self.bvec, self.mu, &self.cvec)?)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        Ok(rank_two_update_inv(&self.base, self.delta, &self.bvec, self.mu, &self.cvec)?.scale(self.factor.recip()))
    }
}

/// The contractions `B^kB_k`, `C^kC_k`, `B^kC_k` with `C = s_·`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UpdateBlocks<T> {
    pub bb: T,
    pub cc: T,
    pub bc: T,
}

impl<T: Real> UpdateBlocks<T> {
    /// Contractions evaluated directly with `a^{ij}`.
    pub fn direct(frame: &LocalFrame<T>, sdot: &[T]) -> Self {
        Self { bb: frame.a_inv.quadratic(&frame.b), cc: frame.a_inv.quadratic(sdot), bc: frame.a_inv.bilinear(&frame.b, sdot) }
    }

    /// `⟨b,b⟩`, `(4s/A)(⟨b,b⟩−s)`, `(2B/A)(⟨b,b⟩−s)`.
    pub fn closed(sc: &AlphaBetaScalars<T>) -> Result<Self> {
        let s = sc.s()?;
        let r = sc.bnorm - s;
        Ok(Self { bb: sc.bnorm, cc: T::lit(4.0) * s / sc.a * r, bc: T::two() * sc.b / sc.a * r })
    }
}

/// Everything the `tensor` subcommand reports at one `(x, v)`.
#[derive(Clone, Debug, Serialize)]
pub struct TensorDump {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub scalars: AlphaBetaScalars<f64>,
    pub psi: PsiEval<f64>,
    pub lagrangian: f64,
    pub g_closed: Vec<Vec<f64>>,
    pub g_oracle: Vec<Vec<f64>>,
    pub oracle_provenance: Provenance,
    pub g_rel_frobenius_error: f64,
    pub det_closed: f64,
    pub det_oracle: f64,
    pub nu: f64,
    pub g_inv_closed: Option<Vec<Vec<f64>>>,
    pub g_inv_closed_error: Option<String>,
    pub g_inv_oracle: Option<Vec<Vec<f64>>>,
    pub signature: SignatureResult<f64>,
}

pub fn tensor_dump<M, F>(metric: &M, oneform: &F, spec: &PsiSpec<f64>, x: &[f64], v: &[f64]) -> Result<TensorDump>
where
    M: MetricField<f64> + ?Sized,
    F: OneFormField<f64> + ?Sized,
{
    let frame = LocalFrame::at(metric, oneform, x)?;
    let spec = spec.with_bnorm(frame.bnorm);
    let d = DirectionData::new(&frame, &spec, v)?;
    let gc = fundamental_tensor_closed_at(&frame, &spec, v)?;
    let go = fundamental_tensor_numeric_at(&frame, &spec, v)?;
    let err = (&gc.g - &go.g).frobenius() / go.g.frobenius().max(f64::MIN_POSITIVE);
    let (inv_c, inv_err) = match inverse_g_closed_at(&frame, &spec, v) {
        Ok(m) => (Some(m.to_rows()), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(TensorDump {
        x: x.to_vec(),
        v: v.to_vec(),
        scalars: d.scalars,
        psi: d.psi,
        lagrangian: d.lagrangian(),
        g_closed: gc.g.to_rows(),
        g_oracle: go.g.to_rows(),
        oracle_provenance: go.provenance,
        g_rel_frobenius_error: err,
        det_closed: det_g_closed_at(&frame, &spec, v)?,
        det_oracle: go.g.det(),
        nu: d.nu(),
        g_inv_closed: inv_c,
        g_inv_closed_error: inv_err,
        g_inv_oracle: go.g.inverse().ok().map(|m| m.to_rows()),
        signature: signature(&gc.g, SIGNATURE_TOL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConstantOneForm, Minkowski};
    use crate::linalg::minkowski;
    use crate::psi::CustomPsi;

    fn frame(b: [f64; 4]) -> LocalFrame<f64> {
        LocalFrame::new(minkowski(4), b.to_vec()).unwrap()
    }

    fn rel(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
        (a - b).frobenius() / b.frobenius()
    }

    #[test]
    fn lorentzian_tensor_is_scaled_metric() {
        let fr = frame([0.3, 0.1, 0.0, 0.2]);
        let spec = PsiSpec::lorentzian(3.0).unwrap();
        let v = [1.0, 0.2, -0.1, 0.3];
        let g = fundamental_tensor_closed_at(&fr, &spec, &v).unwrap().g;
        assert!((&g - &fr.a.scale(3.0)).max_abs() < 1e-15);
        let gn = fundamental_tensor_numeric_at(&fr, &spec, &v).unwrap().g;
        assert!((&gn - &fr.a.scale(3.0)).max_abs() < 1e-8);
        assert!((det_g_closed_at(&fr, &spec, &v).unwrap() - 81.0 * fr.det_a).abs() < 1e-12);
        let gi = inverse_g_closed_at(&fr, &spec, &v).unwrap();
        assert!((&gi - &fr.a_inv.scale(1.0 / 3.0)).max_abs() < 1e-15);
    }

    #[test]
    fn randers_closed_matches_oracle() {
        let fr = frame([0.5, 0.0, 0.0, 0.0]);
        let v = [1.0, 0.1, 0.05, 0.0];
        let gc = fundamental_tensor_closed_at(&fr, &PsiSpec::Randers, &v).unwrap();
        let go = fundamental_tensor_numeric_at(&fr, &PsiSpec::Randers, &v).unwrap();
        assert_eq!(go.provenance, Provenance::NumericHessian);
        assert!(rel(&gc.g, &go.g) < 1e-10);
        let det = det_g_closed_at(&fr, &PsiSpec::Randers, &v).unwrap();
        assert!((det - go.g.det()).abs() < 1e-10 * det.abs());
        let gi = inverse_g_closed_at(&fr, &PsiSpec::Randers, &v).unwrap();
        assert!((&(&gc.g * &gi) - &Matrix::identity(4)).max_abs() < 1e-12);
    }

    #[test]
    fn finite_difference_oracle_for_callbacks() {
        let fr = frame([0.2, 0.1, -0.3, 0.0]);
        let q = 0.5;
        let spec = PsiSpec::Custom(CustomPsi::new(
            "sqrt",
            move |s: f64| Ok(s.powf(q)),
            move |s: f64| Ok(q * s.powf(q - 1.0)),
            move |s: f64| Ok(q * (q - 1.0) * s.powf(q - 2.0)),
        ));
        let v = [1.0, 0.3, 0.2, -0.1];
        let gc = fundamental_tensor_closed_at(&fr, &spec, &v).unwrap();
        let go = fundamental_tensor_numeric_at(&fr, &spec, &v).unwrap();
        assert_eq!(go.provenance, Provenance::FiniteDifference);
        assert!(rel(&gc.g, &go.g) < 1e-7, "{}", rel(&gc.g, &go.g));
    }

    #[test]
    fn stencil_out_of_domain() {
        let fr = frame([0.0, 0.0, 0.0, 0.0]);
        let spec = PsiSpec::Custom(CustomPsi::new(
            "guarded",
            |s: f64| if s > 1e-3 { Ok(s) } else { Err(Error::domain(s, "s > 1e-3")) },
            |_| Ok(1.0),
            |_| Ok(0.0),
        ));
        // s = 1.003e-3 sits inside; the stencil in v¹ drops below 1e-3
        let fr2 = frame([(0.75 * 1.003e-3f64).sqrt(), 0.0, 0.0, 0.0]);
        let v = [1.0, 0.5, 0.0, 0.0];
        assert!(matches!(fundamental_tensor_numeric_at(&fr, &spec, &[1.0, 0.0, 0.0, 0.0]), Err(Error::DomainError { .. })));
        assert!(matches!(fundamental_tensor_numeric_at(&fr2, &spec, &v), Err(Error::StencilOutOfDomain(_))));
    }

    #[test]
    fn signature_examples() {
        let s = signature(&Matrix::from_diag(&[1.0, -1.0, -1.0, -1.0]), 1e-9);
        assert_eq!(s.triple(), (1, 3, 0));
        assert!(s.is_lorentzian());
        let s = signature(&Matrix::from_diag(&[2.0, 3.0, -1.0, -1.0]), 1e-9);
        assert_eq!(s.triple(), (2, 2, 0));
        let s = signature(&Matrix::from_diag(&[2.0, 0.0, -1.0, -1.0]), 1e-9);
        assert_eq!(s.triple(), (1, 2, 1));
    }

    #[test]
    fn rank_one_examples() {
        let id = Matrix::<f64>::identity(4);
        assert_eq!(rank_one_update_det(&id, 1.0, &[1.0, 0.0, 0.0, 0.0]).unwrap(), 2.0);
        let eta = minkowski::<f64>(4);
        assert_eq!(rank_one_update_det(&eta, 1.0, &[0.0, 1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(rank_one_update_inv(&eta, 1.0, &[0.0, 1.0, 0.0, 0.0]), Err(Error::SingularUpdate(_))));
        let sing = Matrix::from_diag(&[1.0, 0.0, 1.0, 1.0]);
        assert_eq!(rank_one_update_det(&sing, 1.0, &[1.0; 4]), Err(Error::SingularBase));
    }

    #[test]
    fn rank_two_with_zero_mu_is_rank_one() {
        let q: Matrix<f64> = Matrix::from_rows(&[
            vec![2.0, 0.3, 0.1, 0.0],
            vec![0.3, -1.0, 0.2, 0.1],
            vec![0.1, 0.2, -1.5, 0.4],
            vec![0.0, 0.1, 0.4, -0.7],
        ]);
        let b = [0.4, -0.2, 0.7, 0.1];
        let c = [0.9, 0.3, -0.5, 0.2];
        let one = rank_one_update_det(&q, 0.7, &b).unwrap();
        let two = rank_two_update_det(&q, 0.7, &b, 0.0, &c).unwrap();
        assert!((one - two).abs() < 1e-14);
        let direct = &(&q + &Matrix::outer(&b, &b).scale(0.7)) + &Matrix::outer(&c, &c).scale(-0.3);
        let inv = rank_two_update_inv(&q, 0.7, &b, -0.3, &c).unwrap();
        assert!((&(&direct * &inv) - &Matrix::identity(4)).max_abs() < 1e-12);
        assert!((rank_two_update_det(&q, 0.7, &b, -0.3, &c).unwrap() - direct.det()).abs() < 1e-12);
    }

    #[test]
    fn decomposition_and_blocks() {
        let fr = frame([0.6, 0.1, 0.0, -0.2]);
        let spec = PsiSpec::BogoslovskyKropina { q: 0.5 };
        let v = [1.0, -0.2, 0.3, 0.1];
        let p = RankTwoUpdateParams::new(&fr, &spec, &v).unwrap();
        let g = fundamental_tensor_closed_at(&fr, &spec, &v).unwrap().g;
        assert!((&p.reconstruct() - &g).max_abs() < 1e-14);
        assert!((p.det().unwrap() - det_g_closed_at(&fr, &spec, &v).unwrap()).abs() < 1e-12);
        let d = DirectionData::new(&fr, &spec, &v).unwrap();
        let direct = UpdateBlocks::direct(&fr, &d.sdot);
        let closed = UpdateBlocks::closed(&d.scalars).unwrap();
        assert!((direct.bb - closed.bb).abs() < 1e-14);
        assert!((direct.cc - closed.cc).abs() < 1e-12);
        assert!((direct.bc - closed.bc).abs() < 1e-12);
    }

    #[test]
    fn light_cone_vector_is_rejected() {
        let e = fundamental_tensor_closed(
            &Minkowski { n: 4 },
            &ConstantOneForm { b: vec![0.5, 0.0, 0.0, 0.0] },
            &PsiSpec::Randers,
            &[0.0; 4],
            &[1.0, 1.0, 0.0, 0.0],
        );
        assert!(matches!(e, Err(Error::SOnLightCone { .. })));
    }
}
