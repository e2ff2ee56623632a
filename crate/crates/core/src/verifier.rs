//! Pointwise spacetime conditions, cone sampling with a boundary probe, and the
//! analytic classifiers for the Randers, Bogoslovsky–Kropina, Kundt and
//! exponential families.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{s_lower_bound, LocalFrame, MetricField, OneFormField};
use crate::linalg::dot;
use crate::psi::{ExpProfile, PsiSpec, SDomain};
use crate::scalar::{band, Real};
use crate::tensor::{det_g_closed_at, fundamental_tensor_closed_at, signature, DirectionData, SignatureResult, SIGNATURE_TOL};

/// Draw cap before a cone is declared empty.
pub const MAX_DRAWS: u64 = 1_000_000;
/// Minimum log-log slope of `|L|` against distance to the cone boundary.
pub const BOUNDARY_SLOPE_MIN: f64 = 1e-3;
const MAX_COUNTEREXAMPLES: usize = 10;

/// Which set directions are drawn from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleRegion {
    /// The family's own cone description.
    #[default]
    FamilyCone,
    /// Future-pointing timelike cone of `a`, regardless of family (counterexample hunting).
    AFuture,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConeSampleConfig {
    pub n_samples: usize,
    pub rng_seed: u64,
    pub s_grid_size: usize,
    pub s_probe_max: f64,
    pub strict_eps: f64,
    pub max_draws: u64,
    /// Boundary probes per point (each one bisects to the cone boundary).
    pub boundary_probes: usize,
    /// Reference timelike vector fixing the time orientation; `None` means `∂₀`.
    pub time_reference: Option<Vec<f64>>,
    pub region: SampleRegion,
    /// Keep one row per sample for tabular output.
    pub keep_rows: bool,
}

impl Default for ConeSampleConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            rng_seed: 0,
            s_grid_size: 2000,
            s_probe_max: 1e6,
            strict_eps: 1e-9,
            max_draws: MAX_DRAWS,
            boundary_probes: 32,
            time_reference: None,
            region: SampleRegion::FamilyCone,
            keep_rows: false,
        }
    }
}

impl ConeSampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(Error::ValidationError("n_samples must be at least 1".into()));
        }
        if !(self.s_probe_max > 1.0) {
            return Err(Error::ValidationError("s_probe_max must exceed 1".into()));
        }
        if !(self.strict_eps >= 0.0) {
            return Err(Error::ValidationError("strict_eps must be non-negative".into()));
        }
        if self.s_grid_size < 2 {
            return Err(Error::ValidationError("s_grid_size must be at least 2".into()));
        }
        Ok(())
    }
}

/// Outcome of one strict inequality under the tolerance band.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Marginal,
    Fail,
}

impl Status {
    /// `value > eps·max(1, scale)` passes, `|value|` inside the band is marginal.
    pub fn of<T: Real>(value: T, scale: T, eps: T) -> Self {
        let b = band(eps, scale);
        if !value.is_finite() {
            Status::Fail
        } else if value > b {
            Status::Pass
        } else if value.abs() <= b {
            Status::Marginal
        } else {
            Status::Fail
        }
    }

    fn ok(self) -> bool {
        self == Status::Pass
    }
}

/// Left-hand sides of the four pointwise conditions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionValues {
    #[serde(rename = "A")]
    pub a: f64,
    pub psi: f64,
    /// `Ψ − sΨ′`.
    pub first: f64,
    /// `σ + ρσ′`, equivalent to `ρ·(ln σ)′ > −1` where `σ > 0`.
    pub second: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub positivity_a: bool,
    pub positivity_psi: bool,
    pub first_ineq: bool,
    pub second_ineq: bool,
    /// Filled only for samples used as boundary-probe anchors.
    pub boundary_l_to_zero: Option<bool>,
    pub values: ConditionValues,
    pub statuses: [Status; 4],
    pub error: Option<String>,
}

impl ConditionCheck {
    pub fn status(&self) -> Status {
        if self.error.is_some() {
            return Status::Fail;
        }
        let worst = self.statuses.iter().copied().max().unwrap_or(Status::Pass);
        match self.boundary_l_to_zero {
            Some(false) => Status::Fail,
            _ => worst,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.status() == Status::Pass
    }
}

fn check_from_data<T: Real>(d: &DirectionData<T>, abs_a: T, eps: T) -> ConditionCheck {
    let s = d.s;
    let e = d.psi;
    let first = e.first(s);
    let sigma = e.sigma(s);
    let rho_dsigma = (s - d.scalars.bnorm) * e.dsigma(s);
    let second = sigma + rho_dsigma;
    let st = [
        Status::of(d.scalars.a, abs_a, eps),
        Status::of(e.psi, e.psi.abs().max((s * e.dpsi).abs()), eps),
        Status::of(first, e.psi.abs().max((s * e.dpsi).abs()), eps),
        Status::of(second, sigma.abs().max(rho_dsigma.abs()), eps),
    ];
    ConditionCheck {
        positivity_a: st[0].ok(),
        positivity_psi: st[1].ok(),
        first_ineq: st[2].ok(),
        second_ineq: st[3].ok(),
        boundary_l_to_zero: None,
        values: ConditionValues { a: d.scalars.a.re(), psi: e.psi.re(), first: first.re(), second: second.re() },
        statuses: st,
        error: None,
    }
}

fn abs_quadratic<T: Real>(frame: &LocalFrame<T>, v: &[T]) -> T {
    let mut acc = T::zero();
    for i in 0..v.len() {
        for j in 0..v.len() {
            acc = acc + (frame.a[(i, j)] * v[i] * v[j]).abs();
        }
    }
    acc
}

/// Evaluates the four conditions at one direction; Ψ-domain errors become failures.
pub fn check_conditions_at_frame<T: Real>(frame: &LocalFrame<T>, spec: &PsiSpec<T>, v: &[T], strict_eps: T) -> Result<ConditionCheck> {
    let sc = frame.scalars(v)?;
    let abs_a = abs_quadratic(frame, v);
    match DirectionData::new(frame, spec, v) {
        Ok(d) => Ok(check_from_data(&d, abs_a, strict_eps)),
        Err(err @ (Error::DomainError { .. } | Error::SOnLightCone { .. } | Error::UnboundVariable(_))) => {
            let a_status = Status::of(sc.a, abs_a, strict_eps);
            Ok(ConditionCheck {
                positivity_a: a_status.ok(),
                positivity_psi: false,
                first_ineq: false,
                second_ineq: false,
                boundary_l_to_zero: None,
                values: ConditionValues { a: sc.a.re(), psi: f64::NAN, first: f64::NAN, second: f64::NAN },
                statuses: [a_status, Status::Fail, Status::Fail, Status::Fail],
                error: Some(err.to_string()),
            })
        }
        Err(e) => Err(e),
    }
}

pub fn check_conditions_at<T, M, F>(metric: &M, oneform: &F, spec: &PsiSpec<T>, x: &[T], v: &[T], strict_eps: T) -> Result<ConditionCheck>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    let frame = LocalFrame::at(metric, oneform, x)?;
    check_conditions_at_frame(&frame, &spec.with_bnorm(frame.bnorm), v, strict_eps)
}

fn time_ref<T: Real>(n: usize, t: Option<&[f64]>) -> Vec<T> {
    match t {
        Some(t) => t.iter().map(|&x| T::lit(x)).collect(),
        None => (0..n).map(|i| if i == 0 { T::one() } else { T::zero() }).collect(),
    }
}

/// `a(v, t) > 0` for the reference vector `t`.
pub fn is_future<T: Real>(frame: &LocalFrame<T>, v: &[T], t: &[T]) -> bool {
    frame.a.bilinear(v, t) > T::zero()
}

/// Membership in the cone described for each family (future orientation via `t`).
pub fn cone_membership_frame<T: Real>(spec: &PsiSpec<T>, frame: &LocalFrame<T>, v: &[T], t: &[T]) -> Result<bool> {
    let a = frame.a.quadratic(v);
    let b = dot(&frame.b, v);
    let future = is_future(frame, v, t);
    let zero = T::zero();
    Ok(future
        && match spec {
            PsiSpec::Lorentzian { .. } | PsiSpec::Exponential(_) => a > zero,
            PsiSpec::Randers => a - b * b > zero,
            PsiSpec::BogoslovskyKropina { .. } => {
                if frame.bnorm < zero {
                    a > zero && b > zero
                } else {
                    a > zero && b != zero
                }
            }
            PsiSpec::Kundt { k, m, .. } => {
                // s = 0 is outside the admissible range when ⟨b,b⟩ < 0, so the cone keeps one side of B = 0
                a > zero && *k * a + *m * b * b > zero && (frame.bnorm >= zero || b > zero)
            }
            PsiSpec::SymmetryFamily { .. } => a > zero && b != zero,
            PsiSpec::Custom(_) => return Err(Error::UnsupportedFamily("custom".into())),
        })
}

pub fn cone_membership<T, M, F>(spec: &PsiSpec<T>, metric: &M, oneform: &F, x: &[T], v: &[T], t: Option<&[f64]>) -> Result<bool>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    let frame = LocalFrame::at(metric, oneform, x)?;
    cone_membership_frame(spec, &frame, v, &time_ref::<T>(frame.dim(), t))
}

fn in_region<T: Real>(region: SampleRegion, spec: &PsiSpec<T>, frame: &LocalFrame<T>, v: &[T], t: &[T]) -> Result<bool> {
    match region {
        SampleRegion::FamilyCone => cone_membership_frame(spec, frame, v, t),
        SampleRegion::AFuture => Ok(is_future(frame, v, t) && frame.a.quadratic(v) > T::zero()),
    }
}

fn draw_direction<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let r = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-12 {
            return g.iter().map(|&x| T::lit(x / r)).collect();
        }
    }
}

/// Accepted directions plus bookkeeping.
#[derive(Clone, Debug)]
pub struct SampleSet<T> {
    pub vectors: Vec<Vec<T>>,
    pub draws: u64,
}

impl<T> SampleSet<T> {
    pub fn acceptance_ratio(&self) -> f64 {
        if self.draws == 0 {
            0.0
        } else {
            self.vectors.len() as f64 / self.draws as f64
        }
    }
}

/// Stream-addressed RNG: same `(seed, stream)` gives the same draws on any thread.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sample_with<T: Real>(
    spec: &PsiSpec<T>,
    frame: &LocalFrame<T>,
    config: &ConeSampleConfig,
    t: &[T],
    rng: &mut ChaCha8Rng,
) -> Result<SampleSet<T>> {
    let n = frame.dim();
    let mut out = SampleSet { vectors: Vec::with_capacity(config.n_samples), draws: 0 };
    while out.vectors.len() < config.n_samples && out.draws < config.max_draws {
        out.draws += 1;
        let mut v = draw_direction::<T>(rng, n);
        if frame.a.bilinear(&v, t) < T::zero() {
            v.iter_mut().for_each(|c| *c = -*c);
        }
        if in_region(config.region, spec, frame, &v, t)? {
            let a = frame.a.quadratic(&v);
            let k = a.sqrt().recip();
            out.vectors.push(v.into_iter().map(|c| c * k).collect());
        }
    }
    if out.vectors.is_empty() {
        return Err(Error::EmptyCone { draws: out.draws });
    }
    Ok(out)
}

/// Rejection-samples future-oriented directions in the cone, normalized to `A = 1`.
pub fn sample_cone<T: Real>(spec: &PsiSpec<T>, frame: &LocalFrame<T>, config: &ConeSampleConfig, stream: u64) -> Result<SampleSet<T>> {
    let t = time_ref::<T>(frame.dim(), config.time_reference.as_deref());
    let mut rng = stream_rng(config.rng_seed, stream);
    sample_with(spec, frame, config, &t, &mut rng)
}

/// Result of bisecting from an inside direction towards an outside one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryProbe {
    /// Fitted slope of `ln|L|` against `ln(distance)`.
    pub slope: f64,
    pub l_values: Vec<f64>,
    pub passes: bool,
}

fn probe_boundary<T: Real>(
    spec: &PsiSpec<T>,
    frame: &LocalFrame<T>,
    config: &ConeSampleConfig,
    t: &[T],
    inside: &[T],
    outside: &[T],
) -> Result<BoundaryProbe> {
    let at = |u: T| -> Vec<T> { inside.iter().zip(outside).map(|(&p, &q)| p + (q - p) * u).collect() };
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..80 {
        let mid = (lo + hi) * T::half();
        if in_region(config.region, spec, frame, &at(mid), t)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut l_values = Vec::new();
    for k in 2..=6 {
        let dist = lo * T::lit(10f64.powi(-k));
        let w = at(lo - dist);
        let sc = frame.scalars(&w)?;
        let l = match sc.s {
            Some(s) => spec.psi(s).map(|p| sc.a * p).unwrap_or(T::nan()),
            None => T::zero(),
        };
        l_values.push(l.re());
        xs.push(dist.re().ln());
        ys.push(l.re().abs().ln());
    }
    let slope = fit_slope(&xs, &ys);
    let passes = slope.is_finite() && slope > BOUNDARY_SLOPE_MIN && l_values.iter().all(|l| l.is_finite());
    Ok(BoundaryProbe { slope, l_values, passes })
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if ys.contains(&f64::NEG_INFINITY) {
        // exact zeros inside: L already vanishes
        return f64::INFINITY;
    }
    sxy / sxx
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Corroborated,
    Falsified,
    /// No counterexample, but some samples sat inside the tolerance band.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub point_index: usize,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub s: Option<f64>,
    pub bnorm: f64,
    pub check: Option<ConditionCheck>,
    pub det_g: Option<f64>,
    pub signature: Option<(usize, usize, usize)>,
    pub reasons: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleRow {
    pub point_index: usize,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub s: f64,
    pub det_g: f64,
    pub eigenvalues: Vec<f64>,
    pub positivity_a: bool,
    pub positivity_psi: bool,
    pub first_ineq: bool,
    pub second_ineq: bool,
    pub lorentzian: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSummary {
    pub index: usize,
    pub x: Vec<f64>,
    pub bnorm: f64,
    pub s0: f64,
    pub analytic: Option<ClassificationVerdict>,
    pub s_domain: Option<SDomain>,
    pub samples: usize,
    pub draws: u64,
    pub acceptance_ratio: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub failures: usize,
    pub marginal: usize,
    pub boundary_probes: usize,
    pub boundary_failures: usize,
    pub min_boundary_slope: f64,
    /// Samples whose single in-band eigenvalue took its sign from the closed-form `det g`.
    pub signature_resolved: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub family: String,
    pub region: SampleRegion,
    pub n_samples: usize,
    pub n_failed: usize,
    pub n_marginal: usize,
    pub signature_tallies: BTreeMap<String, usize>,
    pub s_range: [f64; 2],
    pub points: Vec<PointSummary>,
    pub counterexamples: Vec<Counterexample>,
    pub verdict: Verdict,
    pub assumptions: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<SampleRow>,
}

struct PointOutcome {
    summary: PointSummary,
    tallies: BTreeMap<String, usize>,
    counterexamples: Vec<Counterexample>,
    rows: Vec<SampleRow>,
}

fn sig_key((p, n, z): (usize, usize, usize)) -> String {
    format!("({p},{n},{z})")
}

fn verify_point<T: Real>(
    metric: &(impl MetricField<T> + ?Sized),
    oneform: &(impl OneFormField<T> + ?Sized),
    spec: &PsiSpec<T>,
    index: usize,
    x: &[T],
    config: &ConeSampleConfig,
) -> Result<PointOutcome> {
    let frame = LocalFrame::at(metric, oneform, x)?;
    let spec = spec.with_bnorm(frame.bnorm);
    let n = frame.dim();
    let t = time_ref::<T>(n, config.time_reference.as_deref());
    let eps = T::lit(config.strict_eps);
    let bnorm = frame.bnorm.re();
    let s0 = s_lower_bound(bnorm);
    let xf: Vec<f64> = x.iter().map(|c| c.re()).collect();

    let mut rng = stream_rng(config.rng_seed, index as u64);
    let set = sample_with(&spec, &frame, config, &t, &mut rng)?;

    let mut out = PointOutcome {
        summary: PointSummary {
            index,
            x: xf.clone(),
            bnorm,
            s0,
            analytic: classify_spec(&spec, bnorm, config).ok(),
            s_domain: spec.spacetime_s_domain(frame.bnorm).ok(),
            samples: set.vectors.len(),
            draws: set.draws,
            acceptance_ratio: set.acceptance_ratio(),
            s_min: f64::INFINITY,
            s_max: f64::NEG_INFINITY,
            failures: 0,
            marginal: 0,
            boundary_probes: 0,
            boundary_failures: 0,
            min_boundary_slope: f64::INFINITY,
            signature_resolved: 0,
        },
        tallies: BTreeMap::new(),
        counterexamples: Vec::new(),
        rows: Vec::new(),
    };

    for (k, v) in set.vectors.iter().enumerate() {
        let sc = frame.scalars(v)?;
        let mut check = check_conditions_at_frame(&frame, &spec, v, eps)?;
        let mut reasons = Vec::new();
        let mut definite = false;

        if k < config.boundary_probes {
            // an outside direction from the same stream
            let mut outside = None;
            for _ in 0..10_000 {
                let w = draw_direction::<T>(&mut rng, n);
                if !in_region(config.region, &spec, &frame, &w, &t)? {
                    outside = Some(w);
                    break;
                }
            }
            if let Some(w) = outside {
                let probe = probe_boundary(&spec, &frame, config, &t, v, &w)?;
                out.summary.boundary_probes += 1;
                out.summary.min_boundary_slope = out.summary.min_boundary_slope.min(probe.slope);
                check.boundary_l_to_zero = Some(probe.passes);
                if !probe.passes {
                    out.summary.boundary_failures += 1;
                    definite = true;
                    reasons.push(format!("L does not tend to 0 at the cone boundary (log-log slope {:.3e})", probe.slope));
                }
            }
        }

        let names = ["A > 0", "Ψ > 0", "Ψ − sΨ′ > 0", "σ + ρσ′ > 0"];
        for (st, name) in check.statuses.iter().zip(names) {
            match st {
                Status::Fail => {
                    definite = true;
                    reasons.push(format!("{name} fails"));
                }
                Status::Marginal => reasons.push(format!("{name} marginal")),
                Status::Pass => {}
            }
        }
        if let Some(e) = &check.error {
            reasons.push(e.clone());
        }

        let (mut det_g, mut sig, mut eig) = (None, None, Vec::new());
        if let Some(s) = sc.s {
            let s = s.re();
            out.summary.s_min = out.summary.s_min.min(s);
            out.summary.s_max = out.summary.s_max.max(s);
            if s < s0 - band(config.strict_eps, s0) {
                definite = true;
                reasons.push(format!("s = {s} below s0 = {s0}"));
            }
        }
        // A condition inside its band leaves the sign of det g and of the smallest eigenvalue open.
        let any_marginal = check.statuses.contains(&Status::Marginal);
        if check.error.is_none() {
            let det = det_g_closed_at(&frame, &spec, v).ok();
            if let Some(d) = det {
                det_g = Some(d.re());
                if !(d < T::zero()) {
                    definite |= !any_marginal;
                    reasons.push(format!("det g = {:e} is not negative", d.re()));
                }
            }
            if let Ok(g) = fundamental_tensor_closed_at(&frame, &spec, v) {
                let sr = signature(&g.g, T::lit(SIGNATURE_TOL));
                eig = sr.eigenvalues.iter().map(|e| e.re()).collect();
                let (triple, resolved) = resolve_signature(&sr, det, check.all_pass());
                if resolved {
                    out.summary.signature_resolved += 1;
                }
                *out.tallies.entry(sig_key(triple)).or_default() += 1;
                sig = Some(triple);
                if triple != (1, n - 1, 0) {
                    definite |= !(any_marginal && triple.2 > 0);
                    reasons.push(format!("signature {} is not Lorentzian", sig_key(triple)));
                }
            }
        }
        if matches!(spec, PsiSpec::Randers) {
            let scale = frame.b.iter().zip(v).fold(T::zero(), |acc, (&bi, &vi)| acc + (bi * vi).abs());
            if sc.b > band(eps, scale) {
                definite = true;
                reasons.push(format!("B = {:e} > 0 on a Randers sample", sc.b.re()));
            }
        }

        let status = if definite { Status::Fail } else { check.status() };
        match status {
            Status::Fail => out.summary.failures += 1,
            Status::Marginal => out.summary.marginal += 1,
            Status::Pass => {}
        }
        if config.keep_rows {
            out.rows.push(SampleRow {
                point_index: index,
                x: xf.clone(),
                v: v.iter().map(|c| c.re()).collect(),
                a: sc.a.re(),
                b: sc.b.re(),
                s: sc.s.map(|s| s.re()).unwrap_or(f64::NAN),
                det_g: det_g.unwrap_or(f64::NAN),
                eigenvalues: eig,
                positivity_a: check.positivity_a,
                positivity_psi: check.positivity_psi,
                first_ineq: check.first_ineq,
                second_ineq: check.second_ineq,
                lorentzian: sig.map(|s| s == (1, n - 1, 0)).unwrap_or(false),
                pass: status == Status::Pass,
            });
        }
        if definite && out.counterexamples.len() < MAX_COUNTEREXAMPLES {
            out.counterexamples.push(Counterexample {
                point_index: index,
                x: xf.clone(),
                v: v.iter().map(|c| c.re()).collect(),
                a: sc.a.re(),
                b: sc.b.re(),
                s: sc.s.map(|s| s.re()),
                bnorm,
                check: Some(check),
                det_g,
                signature: sig,
                reasons,
            });
        }
    }
    Ok(out)
}

/// Samples every point's cone and checks the spacetime conditions on each direction.
pub fn verify_by_sampling<T, M, F>(metric: &M, oneform: &F, spec: &PsiSpec<T>, points: &[Vec<T>], config: &ConeSampleConfig) -> Result<VerificationReport>
where
    T: Real,
    M: MetricField<T> + ?Sized,
    F: OneFormField<T> + ?Sized,
{
    config.validate()?;
    if points.is_empty() {
        return Err(Error::ValidationError("at least one point is required".into()));
    }
    let outcomes: Vec<PointOutcome> = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| verify_point(metric, oneform, spec, i, x, config))
        .collect::<Result<_>>()?;

    let mut report = VerificationReport {
        family: spec.family().to_string(),
        region: config.region,
        n_samples: 0,
        n_failed: 0,
        n_marginal: 0,
        signature_tallies: BTreeMap::new(),
        s_range: [f64::INFINITY, f64::NEG_INFINITY],
        points: Vec::new(),
        counterexamples: Vec::new(),
        verdict: Verdict::Corroborated,
        assumptions: vec![
            "fibres of the sampled cone are assumed connected; connectedness is not checked".into(),
            "finite sampling corroborates or falsifies; it does not prove the conditions on the whole cone".into(),
        ],
        rows: Vec::new(),
    };
    for o in outcomes {
        report.n_samples += o.summary.samples;
        report.n_failed += o.summary.failures;
        report.n_marginal += o.summary.marginal;
        report.s_range[0] = report.s_range[0].min(o.summary.s_min);
        report.s_range[1] = report.s_range[1].max(o.summary.s_max);
        for (k, c) in o.tallies {
            *report.signature_tallies.entry(k).or_default() += c;
        }
        for c in o.counterexamples {
            if report.counterexamples.len() < MAX_COUNTEREXAMPLES {
                report.counterexamples.push(c);
            }
        }
        report.rows.extend(o.rows);
        report.points.push(o.summary);
    }
    report.verdict = if !report.counterexamples.is_empty() {
        Verdict::Falsified
    } else if report.n_marginal > 0 || report.n_failed > 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Corroborated
    };
    Ok(report)
}

/// Signature triple, resolving one eigenvalue inside the zero band by the sign of the
/// closed-form determinant. Only applied when every pointwise condition passes outside its
/// band, since the determinant's sign is then certain.
pub fn resolve_signature<T: Real>(sr: &SignatureResult<T>, det: Option<T>, conditions_pass: bool) -> ((usize, usize, usize), bool) {
    let (p, n, z) = sr.triple();
    let Some(det) = det else { return ((p, n, z), false) };
    if z != 1 || !conditions_pass || det == T::zero() || !det.is_finite() {
        return ((p, n, z), false);
    }
    let others_negative = n % 2 == 1;
    // sign(det) = sign(tiny) · (−1)^n
    let tiny_positive = (det > T::zero()) != others_negative;
    if tiny_positive {
        ((p + 1, n, 0), true)
    } else {
        ((p, n + 1, 0), true)
    }
}

/// Outcome of an analytic classifier.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationVerdict {
    pub family: String,
    pub is_spacetime: bool,
    pub reason: String,
    pub cone_description: String,
    /// Set when the verdict rests on a finite grid rather than a closed-form test.
    pub grid_corroborated: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn verdict(family: &str, yes: bool, reason: impl Into<String>, cone: &str) -> ClassificationVerdict {
    ClassificationVerdict {
        family: family.into(),
        is_spacetime: yes,
        reason: reason.into(),
        cone_description: cone.into(),
        grid_corroborated: false,
        notes: Vec::new(),
    }
}

pub fn classify_lorentzian(kappa: f64) -> ClassificationVerdict {
    let yes = kappa > 0.0;
    let reason = if yes { "Ψ = κ > 0: all conditions hold trivially" } else { "κ must be positive" };
    verdict("lorentzian", yes, reason, "future cone of a")
}

/// Relative tolerance for treating a computed `⟨b,b⟩` as equal to an interval endpoint.
pub const BNORM_TOL: f64 = 1e-9;

/// Rounds `bnorm` onto any of `endpoints` within [`BNORM_TOL`].
pub fn snap_bnorm(bnorm: f64, endpoints: &[f64]) -> f64 {
    endpoints.iter().copied().find(|e| (bnorm - e).abs() <= BNORM_TOL * e.abs().max(1.0)).unwrap_or(bnorm)
}

pub fn classify_randers(bnorm: f64) -> ClassificationVerdict {
    let bnorm = snap_bnorm(bnorm, &[0.0, 1.0]);
    let cone = "A − B² > 0 ∩ future cone of a";
    if bnorm < 0.0 {
        verdict("randers", false, format!("⟨b,b⟩ = {bnorm} < 0: spacelike b excluded (requires 0 ≤ ⟨b,b⟩ < 1)"), cone)
    } else if bnorm >= 1.0 {
        verdict("randers", false, format!("⟨b,b⟩ = {bnorm} ≥ 1: requires 0 ≤ ⟨b,b⟩ < 1"), cone)
    } else {
        verdict("randers", true, format!("0 ≤ ⟨b,b⟩ = {bnorm} < 1"), cone)
    }
}

pub fn classify_bogoslovsky(bnorm: f64, q: f64) -> ClassificationVerdict {
    if q == 0.0 {
        let mut v = classify_lorentzian(1.0);
        v.family = "bogoslovsky".into();
        v.notes.push("q = 0 gives Ψ = 1, the Lorentzian case".into());
        return v;
    }
    let bnorm = snap_bnorm(bnorm, &[0.0]);
    if bnorm >= 0.0 {
        let yes = (-1.0..1.0).contains(&q);
        let reason = if yes {
            format!("clause (i): ⟨b,b⟩ = {bnorm} ≥ 0 and q = {q} ∈ [−1, 1)")
        } else {
            format!("clause (i): ⟨b,b⟩ = {bnorm} ≥ 0 requires q ∈ [−1, 1), got q = {q}")
        };
        verdict("bogoslovsky", yes, reason, "future cone of A")
    } else {
        let yes = q > 0.0 && q < 1.0;
        let reason = if yes {
            format!("clause (ii): ⟨b,b⟩ = {bnorm} < 0 and q = {q} ∈ (0, 1)")
        } else {
            format!("clause (ii): ⟨b,b⟩ = {bnorm} < 0 requires q ∈ (0, 1), got q = {q}")
        };
        verdict("bogoslovsky", yes, reason, "future cone of A ∩ {B > 0}")
    }
}

pub fn classify_kundt(bnorm: f64, k: f64, m: f64, p: f64) -> Result<ClassificationVerdict> {
    if k == 0.0 {
        return Err(Error::InvalidParams("k must be nonzero (k = 0 gives a degenerate metric)".into()));
    }
    if m == 0.0 {
        return Err(Error::InvalidParams("m must be nonzero".into()));
    }
    let bnorm = snap_bnorm(bnorm, &[0.0, -k / m]);
    let cone = if bnorm < 0.0 { "future component of k A + m B² > 0 ∩ {B > 0}" } else { "future component of k A + m B² > 0" };
    if !(k > 0.0 && m < 0.0) {
        return Ok(verdict("kundt", false, format!("requires k > 0 and m < 0, got k = {k}, m = {m}"), cone));
    }
    let kmb = k + m * bnorm;
    if !(kmb > 0.0) {
        return Ok(verdict(
            "kundt",
            false,
            format!("k + m⟨b,b⟩ = {kmb} ≤ 0: the interval (max(⟨b,b⟩,0), −k/m) is empty"),
            cone,
        ));
    }
    let sign_gate = format!("k = {k} > 0, m = {m} < 0, k + m⟨b,b⟩ = {kmb} > 0");
    let v = if bnorm >= 0.0 {
        let yes = p > -1.0 && p <= 1.0;
        let reason = if yes {
            format!("{sign_gate}; clause (i): ⟨b,b⟩ ≥ 0 and p = {p} ∈ (−1, 1]")
        } else {
            format!("{sign_gate}; clause (i): ⟨b,b⟩ ≥ 0 requires p ∈ (−1, 1], got p = {p}")
        };
        verdict("kundt", yes, reason, cone)
    } else {
        let yes = p > -1.0 && p < 0.0;
        let reason = if yes {
            format!("{sign_gate}; clause (ii): ⟨b,b⟩ < 0 and p = {p} ∈ (−1, 0)")
        } else {
            format!("{sign_gate}; clause (ii): ⟨b,b⟩ < 0 requires p ∈ (−1, 0), got p = {p}")
        };
        verdict("kundt", yes, reason, cone)
    };
    Ok(v)
}

/// Detail of the grid test behind [`classify_exponential`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentialProbe {
    pub grid_points: usize,
    pub s_lo: f64,
    pub s_hi: f64,
    /// `e^P/s` at the last grid point.
    pub final_ratio: f64,
    /// `d ln(e^P/s)/d ln s = sP′ − 1` at the last grid point.
    pub tail_log_slope: f64,
    pub tail_monotone: bool,
    pub limit_ok: bool,
    pub min_first: f64,
    pub min_third: f64,
    pub first_ok: bool,
    pub third_ok: bool,
    pub first_violation: Option<f64>,
    pub third_violation: Option<f64>,
}

fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// `1 − sP′` and `(1 − sP′) − (s − ⟨b,b⟩)(sP′² + 2sP″ + P′)` with their scales.
fn exp_conditions(prof: &ExpProfile<f64>, s: f64, bnorm: f64) -> Result<(f64, f64, f64, f64)> {
    let [_, dp, d2p] = prof.eval(s)?;
    let first = 1.0 - s * dp;
    let rhs = (s - bnorm) * (s * dp * dp + 2.0 * s * d2p + dp);
    Ok((first, 1.0f64.max((s * dp).abs()), first - rhs, first.abs().max(rhs.abs())))
}

/// Grid test of the three exponential-family conditions on `(s0, s_probe_max]`.
pub fn exponential_probe(p_expr: &Expr, bnorm: f64, config: &ConeSampleConfig) -> Result<ExponentialProbe> {
    let mut prof = ExpProfile::<f64>::new(p_expr.clone())?;
    prof.bnorm = Some(bnorm);
    let s0 = s_lower_bound(bnorm);
    let lo = if s0 > 0.0 { s0 * (1.0 + 1e-6) } else { 1e-6 };
    let hi = config.s_probe_max;
    let grid = geometric_grid(lo, hi, config.s_grid_size.max(2));
    let eps = config.strict_eps;

    let mut pr = ExponentialProbe {
        grid_points: grid.len(),
        s_lo: lo,
        s_hi: hi,
        final_ratio: f64::NAN,
        tail_log_slope: f64::NAN,
        tail_monotone: true,
        limit_ok: false,
        min_first: f64::INFINITY,
        min_third: f64::INFINITY,
        first_ok: true,
        third_ok: true,
        first_violation: None,
        third_violation: None,
    };
    let mut prev_ratio = f64::INFINITY;
    for &s in &grid {
        let (first, fs, third, ts) = exp_conditions(&prof, s, bnorm)?;
        pr.min_first = pr.min_first.min(first);
        pr.min_third = pr.min_third.min(third);
        if Status::of(first, fs, eps) != Status::Pass && pr.first_ok {
            pr.first_ok = false;
            pr.first_violation = Some(s);
        }
        if Status::of(third, ts, eps) != Status::Pass && pr.third_ok {
            pr.third_ok = false;
            pr.third_violation = Some(s);
        }
        let [p, dp, _] = prof.eval(s)?;
        let ratio = p.exp() / s;
        if s >= hi / 10.0 {
            if !(ratio < prev_ratio) {
                pr.tail_monotone = false;
            }
            prev_ratio = ratio;
        }
        pr.final_ratio = ratio;
        pr.tail_log_slope = s * dp - 1.0;
    }
    pr.limit_ok = pr.tail_monotone && pr.final_ratio.is_finite() && pr.tail_log_slope <= -BOUNDARY_SLOPE_MIN;
    Ok(pr)
}

pub fn classify_exponential(p_expr: &Expr, bnorm: f64, config: &ConeSampleConfig) -> Result<(ClassificationVerdict, ExponentialProbe)> {
    let pr = exponential_probe(p_expr, bnorm, config)?;
    let yes = pr.limit_ok && pr.first_ok && pr.third_ok;
    let mut failed = Vec::new();
    if !pr.limit_ok {
        failed.push(format!(
            "e^P/s does not decay on the probe tail (slope sP′ − 1 = {:.3e}, final value {:.3e})",
            pr.tail_log_slope, pr.final_ratio
        ));
    }
    if !pr.first_ok {
        failed.push(format!("1 − sP′ > 0 fails at s = {:?}", pr.first_violation.unwrap_or(f64::NAN)));
    }
    if !pr.third_ok {
        failed.push(format!(
            "1 − sP′ > (s − ⟨b,b⟩)(sP′² + 2sP″ + P′) fails at s = {:?}",
            pr.third_violation.unwrap_or(f64::NAN)
        ));
    }
    let reason = if yes {
        format!(
            "all three conditions hold on {} grid points over ({:.3e}, {:.1e}]",
            pr.grid_points, pr.s_lo, pr.s_hi
        )
    } else {
        failed.join("; ")
    };
    let mut v = verdict("exponential", yes, reason, "future cone of A");
    v.grid_corroborated = true;
    Ok((v, pr))
}

/// Dispatches to the family classifier using the pointwise `⟨b,b⟩`.
pub fn classify_spec<T: Real>(spec: &PsiSpec<T>, bnorm: f64, config: &ConeSampleConfig) -> Result<ClassificationVerdict> {
    match spec {
        PsiSpec::Lorentzian { kappa } => Ok(classify_lorentzian(kappa.re())),
        PsiSpec::Randers => Ok(classify_randers(bnorm)),
        PsiSpec::BogoslovskyKropina { q } => Ok(classify_bogoslovsky(bnorm, q.re())),
        PsiSpec::Kundt { k, m, p } => classify_kundt(bnorm, k.re(), m.re(), p.re()),
        PsiSpec::Exponential(prof) => Ok(classify_exponential(&prof.p, bnorm, config)?.0),
        other => Err(Error::UnsupportedFamily(other.family().into())),
    }
}

/// Maxwell–Boltzmann `P = k − ⟨b,b⟩²/(2s²)`.
pub fn maxwell_boltzmann(k: f64) -> Expr {
    Expr::parse(&format!("{k:?} - bnorm^2/(2*s^2)")).expect("static expression")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MbCheck {
    pub bnorm: f64,
    pub grid_points: usize,
    pub min_quartic: f64,
    pub quartic_positive: bool,
    pub signs_agree: bool,
    pub disagreements: Vec<f64>,
}

/// The quartic `s⁴ + ⟨b,b⟩s³ + 5⟨b,b⟩²s² − ⟨b,b⟩⁴` against the third exponential condition.
pub fn mb_polynomial_check(bnorm: f64, s_grid: &[f64]) -> Result<MbCheck> {
    if !(bnorm > 0.0) {
        return Err(Error::InvalidParams("bnorm must be positive".into()));
    }
    let mut prof = ExpProfile::<f64>::new(maxwell_boltzmann(1.0))?;
    prof.bnorm = Some(bnorm);
    let b = bnorm;
    let mut out = MbCheck { bnorm, grid_points: 0, min_quartic: f64::INFINITY, quartic_positive: true, signs_agree: true, disagreements: vec![] };
    for &s in s_grid.iter().filter(|&&s| s >= b) {
        out.grid_points += 1;
        let quartic = s.powi(4) + b * s.powi(3) + 5.0 * b * b * s * s - b.powi(4);
        out.min_quartic = out.min_quartic.min(quartic);
        if !(quartic > 0.0) {
            out.quartic_positive = false;
        }
        let (_, _, third, scale) = exp_conditions(&prof, s, b)?;
        let tol = 1e-9 * scale.max(1.0);
        let agree = if s <= b * (1.0 + 1e-9) {
            // both sides vanish at s = ⟨b,b⟩
            third >= -tol
        } else {
            (third > 0.0) == (quartic > 0.0)
        };
        if !agree {
            out.signs_agree = false;
            out.disagreements.push(s);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::minkowski;

    fn frame(b: [f64; 4]) -> LocalFrame<f64> {
        LocalFrame::new(minkowski(4), b.to_vec()).unwrap()
    }

    #[test]
    fn lorentzian_all_pass() {
        let c = check_conditions_at_frame(&frame([0.0; 4]), &PsiSpec::lorentzian(1.0).unwrap(), &[1.0, 0.0, 0.0, 0.0], 1e-9).unwrap();
        assert!(c.all_pass());
    }

    #[test]
    fn randers_first_inequality() {
        // ⟨b,b⟩ = 0.5 with past-pointing b̃; v picks s = 0.81 and s = 1.21
        let b0 = -(0.5f64).sqrt();
        let fr = frame([b0, 0.0, 0.0, 0.0]);
        for (s, ok) in [(0.81, true), (1.21, false)] {
            let v0 = (s / 0.5f64).sqrt();
            let v1 = (v0 * v0 - 1.0).sqrt();
            let c = check_conditions_at_frame(&fr, &PsiSpec::Randers, &[v0, v1, 0.0, 0.0], 1e-9).unwrap();
            assert!((c.values.first - (1.0 - s.sqrt())).abs() < 1e-12);
            assert_eq!(c.first_ineq, ok);
        }
    }

    #[test]
    fn domain_errors_become_failures() {
        let c = check_conditions_at_frame(&frame([0.0, 1.0, 0.0, 0.0]), &PsiSpec::Randers, &[1.0, 0.0, 0.0, 0.0], 1e-9).unwrap();
        assert!(!c.positivity_psi && c.error.is_some() && c.status() == Status::Fail);
    }

    #[test]
    fn membership_examples() {
        let t = [1.0, 0.0, 0.0, 0.0];
        let s = 0.5f64.sqrt();
        let fr = frame([-s, s, 0.0, 0.0]);
        assert!(cone_membership_frame(&PsiSpec::Randers, &fr, &[1.0, 0.0, 0.0, 0.0], &t).unwrap());
        assert!(!cone_membership_frame(&PsiSpec::Randers, &fr, &[-1.0, 0.0, 0.0, 0.0], &t).unwrap());
        let fr = frame([0.0, 0.5f64.sqrt(), 0.0, 0.0]);
        let bog = PsiSpec::BogoslovskyKropina { q: 0.5 };
        assert!(!cone_membership_frame(&bog, &fr, &[1.0, -0.5, 0.0, 0.0], &t).unwrap());
        assert!(cone_membership_frame(&bog, &fr, &[1.0, 0.5, 0.0, 0.0], &t).unwrap());
        let ex = PsiSpec::exponential(maxwell_boltzmann(1.0)).unwrap();
        assert!(cone_membership_frame(&ex, &fr, &[1.0, 0.3, 0.2, 0.1], &t).unwrap());
    }

    #[test]
    fn classifier_examples() {
        assert!(classify_randers(0.5).is_spacetime);
        assert!(!classify_randers(1.0).is_spacetime);
        assert!(!classify_randers(-0.25).is_spacetime);
        assert!(classify_bogoslovsky(0.0, -1.0).is_spacetime);
        assert!(classify_bogoslovsky(-0.5, 0.5).is_spacetime);
        assert!(!classify_bogoslovsky(-0.5, -0.5).is_spacetime);
        assert!(classify_bogoslovsky(0.3, 0.0).notes.len() == 1);
        assert!(classify_kundt(0.25, 1.0, -1.0, 1.0).unwrap().is_spacetime);
        assert!(!classify_kundt(0.25, -1.0, 1.0, 0.5).unwrap().is_spacetime);
        assert!(!classify_kundt(-0.2, 1.0, -1.0, 0.5).unwrap().is_spacetime);
        assert!(matches!(classify_kundt(0.2, 0.0, -1.0, 0.5), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn exponential_examples() {
        let cfg = ConeSampleConfig::default();
        let (v, _) = classify_exponential(&maxwell_boltzmann(1.0), 0.5, &cfg).unwrap();
        assert!(v.is_spacetime && v.grid_corroborated, "{}", v.reason);
        let (v, pr) = classify_exponential(&Expr::parse("s").unwrap(), 0.5, &cfg).unwrap();
        assert!(!v.is_spacetime && !pr.limit_ok);
        let (v, _) = classify_exponential(&Expr::parse("0").unwrap(), 0.5, &cfg).unwrap();
        assert!(v.is_spacetime);
    }

    #[test]
    fn mb_quartic_examples() {
        let r = mb_polynomial_check(1.0, &[1.0]).unwrap();
        assert_eq!(r.min_quartic, 6.0);
        let r = mb_polynomial_check(2.0, &[2.0]).unwrap();
        assert_eq!(r.min_quartic, 96.0);
        let grid: Vec<f64> = (0..500).map(|i| 0.5 + 99.5 * i as f64 / 499.0).collect();
        let r = mb_polynomial_check(0.5, &grid).unwrap();
        assert!(r.quartic_positive && r.signs_agree);
    }

    #[test]
    fn minkowski_acceptance_ratio() {
        let cfg = ConeSampleConfig { n_samples: 20_000, ..Default::default() };
        let set = sample_cone(&PsiSpec::lorentzian(1.0).unwrap(), &frame([0.0; 4]), &cfg, 0).unwrap();
        // fraction of S³ with v0² > |v⃗|²
        let want = 0.5 - std::f64::consts::FRAC_1_PI;
        let r = set.acceptance_ratio();
        assert!((r - want).abs() < 0.01, "{r} vs {want}");
        let fr = frame([0.0; 4]);
        assert!(set.vectors.iter().all(|v| (fr.a.quadratic(v) - 1.0).abs() < 1e-9 && v[0] > 0.0));
    }

    #[test]
    fn empty_cone_is_reported() {
        let cfg = ConeSampleConfig { n_samples: 10, max_draws: 20_000, ..Default::default() };
        let e = sample_cone(&PsiSpec::Randers, &frame([-1.2f64.sqrt(), 0.0, 0.0, 0.0]), &cfg, 0);
        assert_eq!(e.err(), Some(Error::EmptyCone { draws: 20_000 }));
    }
}
