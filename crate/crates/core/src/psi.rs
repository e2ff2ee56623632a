//! Ψ(s) profiles of (α,β)-metrics `L = A·Ψ(B²/A)` with analytic first and
//! second derivatives, the auxiliary `σ = (Ψ − sΨ′)²/Ψ`, and per-family
//! spacetime s-domains.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::dual::HyperDual;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::s_lower_bound;
use crate::scalar::Real;

type ScalarFn<T> = dyn Fn(T) -> Result<T> + Send + Sync;

/// User-supplied Ψ with its two derivatives.
#[derive(Clone)]
pub struct CustomPsi<T> {
    pub name: String,
    pub psi: Arc<ScalarFn<T>>,
    pub dpsi: Arc<ScalarFn<T>>,
    pub d2psi: Arc<ScalarFn<T>>,
}

impl<T: Real> CustomPsi<T> {
    pub fn new(
        name: impl Into<String>,
        psi: impl Fn(T) -> Result<T> + Send + Sync + 'static,
        dpsi: impl Fn(T) -> Result<T> + Send + Sync + 'static,
        d2psi: impl Fn(T) -> Result<T> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), psi: Arc::new(psi), dpsi: Arc::new(dpsi), d2psi: Arc::new(d2psi) }
    }

    /// Custom Ψ from three expressions in `s`.
    pub fn from_exprs(psi: Expr, dpsi: Expr, d2psi: Expr) -> Self {
        let wrap = |e: Expr| move |s: T| e.eval(&[("s", s)]);
        Self::new(format!("{psi}"), wrap(psi), wrap(dpsi), wrap(d2psi))
    }
}

impl<T> fmt::Debug for CustomPsi<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomPsi({})", self.name)
    }
}

/// `Ψ = e^{P(s)}` with symbolic `P′`, `P″`. `P` may use `bnorm`, bound per point.
#[derive(Clone, Debug)]
pub struct ExpProfile<T> {
    pub p: Expr,
    pub dp: Expr,
    pub d2p: Expr,
    pub bnorm: Option<T>,
}

impl<T: Real> ExpProfile<T> {
    pub fn new(p: Expr) -> Result<Self> {
        if let Some(v) = p.variables().into_iter().find(|v| v != "s" && v != "bnorm") {
            return Err(Error::UnboundVariable(v));
        }
        let dp = p.diff("s");
        let d2p = dp.diff("s");
        Ok(Self { p, dp, d2p, bnorm: None })
    }

    /// `P, P′, P″` at `s`.
    pub fn eval(&self, s: T) -> Result<[T; 3]> {
        let mut env = vec![("s", s)];
        if let Some(b) = self.bnorm {
            env.push(("bnorm", b));
        }
        Ok([self.p.eval(&env)?, self.dp.eval(&env)?, self.d2p.eval(&env)?])
    }
}

/// Family tag plus parameters.
#[derive(Clone, Debug)]
pub enum PsiSpec<T> {
    Lorentzian { kappa: T },
    Randers,
    BogoslovskyKropina { q: T },
    Kundt { k: T, m: T, p: T },
    Exponential(ExpProfile<T>),
    SymmetryFamily { c: T, lambda2: T, mu1: T, mu2: T },
    Custom(CustomPsi<T>),
}

/// `Ψ`, `Ψ′`, `Ψ″` at one `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PsiEval<T> {
    pub psi: T,
    pub dpsi: T,
    pub d2psi: T,
}

impl<T: Real> PsiEval<T> {
    /// `Ψ − sΨ′`.
    pub fn first(&self, s: T) -> T {
        self.psi - s * self.dpsi
    }

    /// `σ = (Ψ − sΨ′)²/Ψ`.
    pub fn sigma(&self, s: T) -> T {
        let f = self.first(s);
        f * f / self.psi
    }

    /// `dσ/ds = −(Ψ − sΨ′)(2sΨΨ″ + (Ψ − sΨ′)Ψ′)/Ψ²`.
    pub fn dsigma(&self, s: T) -> T {
        let f = self.first(s);
        -f * (T::two() * s * self.psi * self.d2psi + f * self.dpsi) / (self.psi * self.psi)
    }

    /// `ν = (Ψ−sΨ′)[Ψ(Ψ−sΨ′) + (⟨b,b⟩−s)(ΨΨ′ + 2sΨΨ″ − sΨ′²)]`.
    pub fn nu(&self, s: T, bnorm: T) -> T {
        let f = self.first(s);
        let (p, d1, d2) = (self.psi, self.dpsi, self.d2psi);
        f * (p * f + (bnorm - s) * (p * d1 + T::two() * s * p * d2 - s * d1 * d1))
    }
}

/// Real power with an integer fast path so negative bases stay legal for integer exponents.
fn rpow<T: Real>(x: T, e: T, what: &str) -> Result<T> {
    if e.fract().is_zero() && e.abs() < T::lit(1024.0) {
        Ok(x.powi(e.to_i32().unwrap_or(0)))
    } else if x > T::zero() {
        Ok(x.powf(e))
    } else if x.is_zero() && e > T::zero() {
        Ok(T::zero())
    } else {
        Err(Error::domain(x.re(), format!("{what} must be positive for a non-integer exponent")))
    }
}

fn finite<T: Real>(e: PsiEval<T>, s: T, family: &str) -> Result<PsiEval<T>> {
    if e.psi.is_finite() && e.dpsi.is_finite() && e.d2psi.is_finite() {
        Ok(e)
    } else {
        Err(Error::domain(s.re(), format!("{family}: Ψ or a derivative is not finite")))
    }
}

impl<T: Real> PsiSpec<T> {
    pub fn lorentzian(kappa: T) -> Result<Self> {
        if !(kappa > T::zero()) {
            return Err(Error::InvalidParams("kappa must be positive".into()));
        }
        Ok(Self::Lorentzian { kappa })
    }

    pub fn kundt(k: T, m: T, p: T) -> Result<Self> {
        if k.is_zero() {
            return Err(Error::InvalidParams("k must be nonzero".into()));
        }
        if m.is_zero() {
            return Err(Error::InvalidParams("m must be nonzero".into()));
        }
        Ok(Self::Kundt { k, m, p })
    }

    pub fn exponential(p: Expr) -> Result<Self> {
        Ok(Self::Exponential(ExpProfile::new(p)?))
    }

    /// The profile solving the nontrivial-symmetry ODE; see [`crate::isometry::build_symmetry_psi`].
    pub fn symmetry(c: T, lambda2: T, mu1: T, mu2: T) -> Result<Self> {
        if (mu1 - T::two() * lambda2).is_zero() && mu2.is_zero() {
            return Err(Error::InvalidParams("mu1 = 2*lambda2 together with mu2 = 0 admits no solution".into()));
        }
        if c.is_zero() {
            return Err(Error::InvalidParams("c must be nonzero".into()));
        }
        Ok(Self::SymmetryFamily { c, lambda2, mu1, mu2 })
    }

    pub fn family(&self) -> &'static str {
        match self {
            PsiSpec::Lorentzian { .. } => "lorentzian",
            PsiSpec::Randers => "randers",
            PsiSpec::BogoslovskyKropina { .. } => "bogoslovsky",
            PsiSpec::Kundt { .. } => "kundt",
            PsiSpec::Exponential(_) => "exponential",
            PsiSpec::SymmetryFamily { .. } => "symmetry",
            PsiSpec::Custom(_) => "custom",
        }
    }

    /// Binds `bnorm` inside an exponential profile; other families are unchanged.
    pub fn with_bnorm(&self, bnorm: T) -> Self {
        match self {
            PsiSpec::Exponential(p) => PsiSpec::Exponential(ExpProfile { bnorm: Some(bnorm), ..p.clone() }),
            other => other.clone(),
        }
    }

    pub fn eval(&self, s: T) -> Result<PsiEval<T>> {
        if !s.is_finite() {
            return Err(Error::domain(s.re(), "s must be finite"));
        }
        let zero = T::zero();
        let one = T::one();
        let two = T::two();
        match self {
            PsiSpec::Lorentzian { kappa } => Ok(PsiEval { psi: *kappa, dpsi: zero, d2psi: zero }),
            PsiSpec::Randers => {
                if !(s > zero) {
                    return Err(Error::domain(s.re(), "randers: s > 0"));
                }
                let r = s.sqrt();
                let psi = (one - r) * (one - r);
                finite(PsiEval { psi, dpsi: one - r.recip(), d2psi: T::half() / (s * r) }, s, "randers")
            }
            PsiSpec::BogoslovskyKropina { q } => {
                let q = *q;
                if !(s > zero) {
                    return Err(Error::domain(s.re(), "bogoslovsky: s > 0"));
                }
                let psi = s.powf(q);
                let dpsi = q * psi / s;
                let d2psi = q * (q - one) * psi / (s * s);
                finite(PsiEval { psi, dpsi, d2psi }, s, "bogoslovsky")
            }
            PsiSpec::Kundt { k, m, p } => {
                let (k, m, p) = (*k, *m, *p);
                if !(s > zero) {
                    return Err(Error::domain(s.re(), "kundt: s > 0"));
                }
                let u = k + m * s;
                let integer = p.fract().is_zero();
                if !integer && !(u > zero) {
                    return Err(Error::domain(s.re(), "kundt: k + m s > 0 for non-integer p"));
                }
                let up1 = rpow(u, p + one, "k + m s")?;
                let up = rpow(u, p, "k + m s")?;
                let upm = if integer || u > zero { rpow(u, p - one, "k + m s")? } else { zero };
                let sp = s.powf(-p);
                let psi = up1 * sp;
                let dpsi = (p + one) * m * up * sp - p * up1 * sp / s;
                let d2psi = (p + one) * p * (m * m * upm * sp - two * m * up * sp / s + up1 * sp / (s * s));
                finite(PsiEval { psi, dpsi, d2psi }, s, "kundt")
            }
            PsiSpec::Exponential(prof) => {
                let [p, dp, d2p] = prof.eval(s)?;
                let e = p.exp();
                finite(PsiEval { psi: e, dpsi: dp * e, d2psi: (d2p + dp * dp) * e }, s, "exponential")
            }
            PsiSpec::SymmetryFamily { c, lambda2, mu1, mu2 } => {
                let (c, l2, m1, m2) = (*c, *lambda2, *mu1, *mu2);
                if !(s > zero) {
                    return Err(Error::domain(s.re(), "symmetry: s > 0"));
                }
                let d = m1 - two * l2;
                let (psi, h, dh) = if !d.is_zero() {
                    let w = d + m2 * s;
                    if w.is_zero() {
                        return Err(Error::domain(s.re(), "symmetry: mu2 s + mu1 − 2 lambda2 ≠ 0"));
                    }
                    let base = (w / d).abs();
                    let psi = c * s.powf(m1 / d) * base.powf(-two * l2 / d);
                    let h = m1 / (d * s) - two * l2 * m2 / (d * w);
                    let dh = -m1 / (d * s * s) + two * l2 * m2 * m2 / (d * w * w);
                    (psi, h, dh)
                } else {
                    let psi = c * s * (-two * l2 / (m2 * s)).exp();
                    let h = s.recip() + two * l2 / (m2 * s * s);
                    let dh = -(s * s).recip() - T::lit(4.0) * l2 / (m2 * s * s * s);
                    (psi, h, dh)
                };
                finite(PsiEval { psi, dpsi: psi * h, d2psi: psi * (h * h + dh) }, s, "symmetry")
            }
            PsiSpec::Custom(c) => {
                let e = PsiEval { psi: (c.psi)(s)?, dpsi: (c.dpsi)(s)?, d2psi: (c.d2psi)(s)? };
                finite(e, s, "custom")
            }
        }
    }

    pub fn psi(&self, s: T) -> Result<T> {
        Ok(self.eval(s)?.psi)
    }

    pub fn sigma(&self, s: T) -> Result<T> {
        let e = self.eval(s)?;
        if e.psi.is_zero() {
            return Err(Error::domain(s.re(), "σ is singular where Ψ = 0"));
        }
        Ok(e.sigma(s))
    }

    pub fn dsigma(&self, s: T) -> Result<T> {
        let e = self.eval(s)?;
        if e.psi.is_zero() {
            return Err(Error::domain(s.re(), "σ is singular where Ψ = 0"));
        }
        Ok(e.dsigma(s))
    }

    pub fn psi_minus_s_dpsi(&self, s: T) -> Result<T> {
        Ok(self.eval(s)?.first(s))
    }

    /// Copy of the spec over hyper-dual scalars; `None` for callback-based Ψ.
    pub fn lift(&self) -> Option<PsiSpec<HyperDual<T>>> {
        let c = HyperDual::constant;
        Some(match self {
            PsiSpec::Lorentzian { kappa } => PsiSpec::Lorentzian { kappa: c(*kappa) },
            PsiSpec::Randers => PsiSpec::Randers,
            PsiSpec::BogoslovskyKropina { q } => PsiSpec::BogoslovskyKropina { q: c(*q) },
            PsiSpec::Kundt { k, m, p } => PsiSpec::Kundt { k: c(*k), m: c(*m), p: c(*p) },
            PsiSpec::Exponential(e) => PsiSpec::Exponential(ExpProfile {
                p: e.p.clone(),
                dp: e.dp.clone(),
                d2p: e.d2p.clone(),
                bnorm: e.bnorm.map(c),
            }),
            PsiSpec::SymmetryFamily { c: cc, lambda2, mu1, mu2 } => PsiSpec::SymmetryFamily {
                c: c(*cc),
                lambda2: c(*lambda2),
                mu1: c(*mu1),
                mu2: c(*mu2),
            },
            PsiSpec::Custom(_) => return None,
        })
    }

    /// Interval of `s` on which the family's spacetime cone lives.
    pub fn spacetime_s_domain(&self, bnorm: T) -> Result<SDomain> {
        let s0 = s_lower_bound(bnorm).re();
        let open = |hi: f64, notes: &str| SDomain { lo: s0, hi, lo_open: true, hi_open: true, notes: notes.to_string() };
        Ok(match self {
            PsiSpec::Lorentzian { .. } => open(f64::INFINITY, "cones of A"),
            PsiSpec::BogoslovskyKropina { .. } => open(f64::INFINITY, "s ∈ (s0, ∞)"),
            PsiSpec::Exponential(_) => open(f64::INFINITY, "cones of A; upper end probed numerically"),
            PsiSpec::Randers => open(1.0, "s < 1 from A − B² > 0"),
            PsiSpec::Kundt { k, m, .. } => {
                let (k, m) = (k.re(), m.re());
                if k > 0.0 && m < 0.0 {
                    open(-k / m, "sharp upper bound −k/m")
                } else {
                    open(f64::INFINITY, "no spacetime cone unless k > 0 and m < 0")
                }
            }
            PsiSpec::SymmetryFamily { .. } => open(f64::INFINITY, "branch domain s > 0; spacetime conditions not analysed"),
            PsiSpec::Custom(_) => return Err(Error::UnsupportedFamily("custom".into())),
        })
    }

    /// Compares analytic `Ψ′` with central differences of `Ψ` and `Ψ″` with
    /// central differences of `Ψ′`, step `max(1e−6, 1e−6|s|)`.
    pub fn derivative_selfcheck(&self, s_grid: &[T]) -> DerivativeSelfcheck {
        let mut out = DerivativeSelfcheck { max_dev_d1: 0.0, max_dev_d2: 0.0, worst_s: f64::NAN, errors: vec![], pass: true };
        let mut worst = 0.0;
        for &s in s_grid {
            let h = T::lit(1e-6).max(T::lit(1e-6) * s.abs());
            let res = (|| -> Result<(f64, f64)> {
                let c = self.eval(s)?;
                let hi = self.eval(s + h)?;
                let lo = self.eval(s - h)?;
                let two_h = T::two() * h;
                let n1 = (hi.psi - lo.psi) / two_h;
                let n2 = (hi.dpsi - lo.dpsi) / two_h;
                let floor = T::one().max(c.psi.abs());
                let d1 = (c.dpsi - n1).abs() / c.dpsi.abs().max(n1.abs()).max(floor);
                let d2 = (c.d2psi - n2).abs() / c.d2psi.abs().max(n2.abs()).max(floor);
                Ok((d1.re(), d2.re()))
            })();
            match res {
                Ok((d1, d2)) => {
                    out.max_dev_d1 = out.max_dev_d1.max(d1);
                    out.max_dev_d2 = out.max_dev_d2.max(d2);
                    if d1.max(d2) > worst || out.worst_s.is_nan() {
                        worst = d1.max(d2);
                        out.worst_s = s.re();
                    }
                }
                Err(e) => out.errors.push(format!("s = {}: {e}", s.re())),
            }
        }
        out.pass = out.errors.is_empty() && out.max_dev_d1 <= 1e-6 && out.max_dev_d2 <= 1e-6;
        out
    }
}

/// Result of [`PsiSpec::derivative_selfcheck`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivativeSelfcheck {
    pub max_dev_d1: f64,
    pub max_dev_d2: f64,
    pub worst_s: f64,
    pub errors: Vec<String>,
    pub pass: bool,
}

/// An interval of `s` values; infinite ends are `±∞`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SDomain {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
    pub notes: String,
}

impl SDomain {
    pub fn contains(&self, s: f64, tol: f64) -> bool {
        let lo_ok = if self.lo_open { s > self.lo - tol } else { s >= self.lo - tol };
        let hi_ok = if self.hi_open { s < self.hi + tol } else { s <= self.hi + tol };
        lo_ok && hi_ok
    }
}

pub fn psi_eval<T: Real>(spec: &PsiSpec<T>, s: T) -> Result<PsiEval<T>> {
    spec.eval(s)
}

pub fn sigma_eval<T: Real>(spec: &PsiSpec<T>, s: T) -> Result<T> {
    spec.sigma(s)
}

pub fn psi_minus_s_dpsi<T: Real>(spec: &PsiSpec<T>, s: T) -> Result<T> {
    spec.psi_minus_s_dpsi(s)
}

pub fn spacetime_s_domain<T: Real>(spec: &PsiSpec<T>, bnorm: T) -> Result<SDomain> {
    spec.spacetime_s_domain(bnorm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn lorentzian_is_constant() {
        let e = PsiSpec::lorentzian(2.0).unwrap().eval(0.7).unwrap();
        assert_eq!(e, PsiEval { psi: 2.0, dpsi: 0.0, d2psi: 0.0 });
        assert_eq!(PsiSpec::lorentzian(3.0).unwrap().sigma(0.3).unwrap(), 3.0);
        assert!(PsiSpec::lorentzian(0.0).is_err());
    }

    #[test]
    fn randers_values() {
        let e = PsiSpec::<f64>::Randers.eval(0.25).unwrap();
        assert_eq!(e, PsiEval { psi: 0.25, dpsi: -1.0, d2psi: 4.0 });
        assert_eq!(PsiSpec::Randers.psi_minus_s_dpsi(0.25).unwrap(), 0.5);
        for s in grid(0.01, 0.99, 50) {
            assert!((PsiSpec::Randers.sigma(s).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bogoslovsky_values() {
        let spec = PsiSpec::BogoslovskyKropina { q: 0.5 };
        let e = spec.eval(4.0).unwrap();
        assert_eq!((e.psi, e.dpsi, e.d2psi), (2.0, 0.25, -1.0 / 32.0));
        assert_eq!(spec.psi_minus_s_dpsi(4.0).unwrap(), 1.0);
        for q in [-1.0, -0.5, 0.5, 0.9] {
            let spec = PsiSpec::BogoslovskyKropina { q };
            for s in grid(0.1, 5.0, 20) {
                let want = s.powf(q) * (q - 1.0) * (q - 1.0);
                assert!((spec.sigma(s).unwrap() - want).abs() <= 1e-12 * want);
            }
        }
    }

    #[test]
    fn kundt_first_inequality_value() {
        let spec: PsiSpec<f64> = PsiSpec::kundt(1.0, -1.0, 0.5).unwrap();
        assert!((spec.psi_minus_s_dpsi(0.5).unwrap() - 1.5).abs() < 1e-14);
        assert!(matches!(spec.eval(1.5), Err(Error::DomainError { .. })));
        assert!(matches!(spec.eval(-0.1), Err(Error::DomainError { .. })));
        assert!(PsiSpec::kundt(1.0, 0.0, 0.5).is_err());
        assert!(PsiSpec::kundt(0.0, 1.0, 0.5).is_err());
        // integer p evaluates past −k/m
        assert!(PsiSpec::kundt(1.0, -1.0, 1.0).unwrap().eval(1.5).is_ok());
    }

    #[test]
    fn selfcheck_examples() {
        assert!(PsiSpec::Randers.derivative_selfcheck(&grid(0.05, 0.95, 100)).pass);
        assert!(PsiSpec::kundt(1.0, -1.0, 0.5).unwrap().derivative_selfcheck(&grid(0.05, 0.95, 100)).pass);
        let bad = PsiSpec::Custom(CustomPsi::new("s^2", |s: f64| Ok(s * s), |s| Ok(3.0 * s), |_| Ok(2.0)));
        let r = bad.derivative_selfcheck(&grid(0.5, 2.0, 16));
        assert!(!r.pass);
        assert!(r.max_dev_d1 > 0.3 && r.worst_s >= 0.5 && r.worst_s <= 2.0);
    }

    #[test]
    fn exponential_needs_bound_bnorm() {
        let spec: PsiSpec<f64> = PsiSpec::exponential(Expr::parse("1 - bnorm^2/(2*s^2)").unwrap()).unwrap();
        assert!(matches!(spec.eval(1.0), Err(Error::UnboundVariable(_))));
        let bound = spec.with_bnorm(0.5);
        let e = bound.eval(1.0).unwrap();
        let p: f64 = 1.0 - 0.125;
        assert!((e.psi - p.exp()).abs() < 1e-14);
        assert!((e.dpsi - 0.25 * p.exp()).abs() < 1e-14);
        assert!(PsiSpec::<f64>::exponential(Expr::parse("y*s").unwrap()).is_err());
    }

    #[test]
    fn symmetry_family_reduces_to_power() {
        for q in [0.25, 0.5, 0.75] {
            let spec = PsiSpec::symmetry(1.0, q - 1.0, 2.0 * q, 0.0).unwrap();
            for s in grid(0.1, 10.0, 50) {
                let want: f64 = s.powf(q);
                assert!((spec.psi(s).unwrap() - want).abs() <= 1e-10 * want);
            }
        }
        let b2 = PsiSpec::symmetry(1.0, 1.0, 2.0, 1.0).unwrap();
        assert!((b2.psi(2.0).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-14);
        assert!(PsiSpec::symmetry(1.0, 1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn domains() {
        let d = PsiSpec::BogoslovskyKropina { q: 0.5 }.spacetime_s_domain(0.5).unwrap();
        assert_eq!((d.lo, d.hi), (0.5, f64::INFINITY));
        let d = PsiSpec::kundt(1.0, -2.0, 0.5).unwrap().spacetime_s_domain(-0.1).unwrap();
        assert_eq!((d.lo, d.hi), (0.0, 0.5));
        let d = PsiSpec::<f64>::Randers.spacetime_s_domain(0.0).unwrap();
        assert_eq!((d.lo, d.hi), (0.0, 1.0));
        let c = PsiSpec::Custom(CustomPsi::new("one", |_: f64| Ok(1.0), |_| Ok(0.0), |_| Ok(0.0)));
        assert!(matches!(c.spacetime_s_domain(0.0), Err(Error::UnsupportedFamily(_))));
    }

    #[test]
    fn lifted_spec_differentiates_itself() {
        let specs: [PsiSpec<f64>; 5] = [
            PsiSpec::Randers,
            PsiSpec::BogoslovskyKropina { q: -0.5 },
            PsiSpec::kundt(1.0, -1.0, 0.5).unwrap(),
            PsiSpec::symmetry(1.3, 0.4, 0.5, 0.7).unwrap(),
            PsiSpec::symmetry(1.0, 1.0, 2.0, 1.0).unwrap(),
        ];
        for spec in specs {
            let lifted = spec.lift().unwrap();
            for s in [0.2, 0.45, 0.8] {
                let h = lifted.eval(HyperDual::new(s, 1.0, 1.0, 0.0)).unwrap().psi;
                let e = spec.eval(s).unwrap();
                assert!((h.e1 - e.dpsi).abs() < 1e-12 * e.dpsi.abs().max(1.0), "{} at {s}", spec.family());
                assert!((h.e12 - e.d2psi).abs() < 1e-11 * e.d2psi.abs().max(1.0), "{} at {s}", spec.family());
            }
        }
    }
}
