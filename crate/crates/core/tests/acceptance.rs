//! Acceptance suite: one PASS/FAIL line per criterion. Reference values are computed here,
//! independently of the library (num-dual Hessians of a hand-written `L`, nalgebra for
//! determinants, inverses and eigenvalues, the classification table written out literally).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::process::ExitCode;
use std::time::Instant;

use alphabeta::config::{PointsConfig, PsiConfig, RandomPoints, RunConfig};
use alphabeta::fixtures::{beta, conformal_metric, conformal_oneform, killing_example, PHI};
use alphabeta::isometry::{build_symmetry_psi, is_trivial_symmetry, killing_residual, nontrivial_condition_check, symmetry_ode_residual, SymmetryParams};
use alphabeta::run::{run, Overrides, Payload, Subcommand};
use alphabeta::tensor::{det_g_closed_at, fundamental_tensor_closed_at, inverse_g_closed_at, rank_one_update_det, rank_one_update_inv, rank_two_update_det, rank_two_update_inv, DirectionData, UpdateBlocks};
use alphabeta::verifier::{maxwell_boltzmann, mb_polynomial_check, ConeSampleConfig};
use alphabeta::{psi_eval, Error, LocalFrame, Matrix, PsiSpec, VectorField};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_dual::{hessian, Dual2DVec64, DualNum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Overridable with `ACCEPTANCE_SEED`.
const DEFAULT_SEED: u64 = 20_240_601;
const PER_FAMILY: usize = 1000;
/// Samples with a worse-conditioned `g` are redrawn for the tensor criteria.
const COND_MAX: f64 = 1e6;

static SEED_CELL: std::sync::OnceLock<u64> = std::sync::OnceLock::new();

fn seed() -> u64 {
    *SEED_CELL.get_or_init(|| std::env::var("ACCEPTANCE_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(DEFAULT_SEED))
}

struct Outcome {
    pass: bool,
    summary: String,
    /// Failure explained by a documented inconsistency in the reference results.
    known_conflict: bool,
}

fn outcome(pass: bool, summary: String) -> Outcome {
    Outcome { pass, summary, known_conflict: false }
}

#[derive(Clone, Copy, Debug)]
enum Fam {
    Lorentzian,
    Randers,
    Bog(f64),
    Kundt(f64),
    Mb,
}

const KUNDT_K: f64 = 1.0;
const KUNDT_M: f64 = -1.0;

impl Fam {
    fn all() -> Vec<Fam> {
        let mut v = vec![Fam::Lorentzian, Fam::Randers];
        v.extend([-1.0, -0.5, 0.5, 0.9].map(Fam::Bog));
        v.extend([-0.5, 0.5, 1.0].map(Fam::Kundt));
        v.push(Fam::Mb);
        v
    }

    fn spec(self) -> PsiSpec {
        match self {
            Fam::Lorentzian => PsiSpec::Lorentzian { kappa: 1.0 },
            Fam::Randers => PsiSpec::Randers,
            Fam::Bog(q) => PsiSpec::BogoslovskyKropina { q },
            Fam::Kundt(p) => PsiSpec::Kundt { k: KUNDT_K, m: KUNDT_M, p },
            Fam::Mb => PsiSpec::exponential(maxwell_boltzmann(1.0)).unwrap(),
        }
    }

    /// `⟨b,b⟩` range drawn from.
    fn range(self) -> (f64, f64) {
        match self {
            Fam::Lorentzian => (-0.5, 2.0),
            Fam::Randers => (0.05, 0.9),
            Fam::Bog(q) if q > 0.0 => (-0.5, 0.9),
            Fam::Bog(_) => (0.05, 0.9),
            Fam::Kundt(p) if p < 0.0 => (-0.5, 0.8),
            Fam::Kundt(_) => (0.05, 0.8),
            Fam::Mb => (0.1, 2.0),
        }
    }

    fn psi(self, s: f64, b: f64) -> f64 {
        match self {
            Fam::Lorentzian => 1.0,
            Fam::Randers => (1.0 - s.sqrt()).powi(2),
            Fam::Bog(q) => s.powf(q),
            Fam::Kundt(p) => s.powf(-p) * (KUNDT_K + KUNDT_M * s).powf(p + 1.0),
            Fam::Mb => (1.0 - b * b / (2.0 * s * s)).exp(),
        }
    }

    fn dpsi(self, s: f64, b: f64) -> f64 {
        match self {
            Fam::Lorentzian => 0.0,
            Fam::Randers => -(1.0 - s.sqrt()) / s.sqrt(),
            Fam::Bog(q) => q * s.powf(q - 1.0),
            Fam::Kundt(p) => self.psi(s, b) * (-p / s + KUNDT_M * (p + 1.0) / (KUNDT_K + KUNDT_M * s)),
            Fam::Mb => self.psi(s, b) * b * b / s.powi(3),
        }
    }

    /// Finite upper end of the `s` range, where `Ψ` vanishes.
    fn s_max(self) -> f64 {
        match self {
            Fam::Randers => 1.0,
            Fam::Kundt(_) => -KUNDT_K / KUNDT_M,
            _ => f64::INFINITY,
        }
    }

    fn admissible(self, s: f64, bb: f64) -> bool {
        let in_range = s > 0.0 && s < self.s_max();
        match self {
            Fam::Randers => in_range && bb < 0.0,
            _ => in_range,
        }
    }
}

fn eta(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i != j { 0.0 } else if i == 0 { 1.0 } else { -1.0 })
}

fn to_lib(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_rows(&(0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect::<Vec<_>>())
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    let r = m.to_rows();
    DMatrix::from_fn(r.len(), r.len(), |i, j| r[i][j])
}

fn cond(m: &DMatrix<f64>) -> f64 {
    let ev = SymmetricEigen::new(m.clone()).eigenvalues;
    ev.amax() / ev.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()))
}

/// Positive and negative eigenvalue counts, no zero band.
fn sign_counts(m: &DMatrix<f64>) -> (usize, usize) {
    let ev = SymmetricEigen::new(m.clone()).eigenvalues;
    (ev.iter().filter(|&&x| x > 0.0).count(), ev.iter().filter(|&&x| x < 0.0).count())
}

/// Covector with `η⁻¹(β,β) = bnorm` and past-pointing `η⁻¹β`.
fn random_beta(rng: &mut ChaCha8Rng, n: usize, bnorm: f64) -> DVector<f64> {
    let u: DVector<f64> = DVector::from_fn(n - 1, |_, _| rng.sample(StandardNormal)).normalize();
    let chi: f64 = rng.random_range(-0.8..0.8);
    let (t, r) = if bnorm > 0.0 {
        (-bnorm.sqrt() * chi.cosh(), bnorm.sqrt() * chi.sinh())
    } else if bnorm < 0.0 {
        (-(-bnorm).sqrt() * chi.sinh(), (-bnorm).sqrt() * chi.cosh())
    } else {
        let c = rng.random_range(0.3..1.5);
        (-c, c)
    };
    DVector::from_fn(n, |i, _| if i == 0 { t } else { r * u[i - 1] })
}

struct Sample {
    fam: Fam,
    a: DMatrix<f64>,
    b: DVector<f64>,
    v: DVector<f64>,
    bnorm: f64,
    g_ref: DMatrix<f64>,
}

impl Sample {
    fn frame(&self) -> LocalFrame {
        LocalFrame::new(to_lib(&self.a), self.b.iter().copied().collect()).unwrap()
    }

    fn spec(&self) -> PsiSpec {
        self.fam.spec().with_bnorm(self.bnorm)
    }

    fn v(&self) -> Vec<f64> {
        self.v.iter().copied().collect()
    }
}

fn psi_d<D: DualNum<f64>>(fam: Fam, s: D, b: f64) -> D {
    match fam {
        Fam::Lorentzian => D::one(),
        Fam::Randers => (D::one() - s.sqrt()).powi(2),
        Fam::Bog(q) => s.powf(q),
        Fam::Kundt(p) => s.powf(-p) * (s * KUNDT_M + KUNDT_K).powf(p + 1.0),
        Fam::Mb => (D::one() - s.powi(-2) * (b * b / 2.0)).exp(),
    }
}

/// `½ ∂²L/∂v∂v` of `L = A·Ψ(B²/A)` by forward-mode second-order duals.
fn hessian_ad(fam: Fam, a: &DMatrix<f64>, b: &DVector<f64>, bnorm: f64, v: &DVector<f64>) -> DMatrix<f64> {
    let (_, _, h) = hessian(
        |w: DVector<Dual2DVec64>| {
            let n = w.len();
            let mut aa = Dual2DVec64::from_re(0.0);
            let mut bb = Dual2DVec64::from_re(0.0);
            for i in 0..n {
                bb += w[i].clone() * b[i];
                for j in 0..n {
                    aa += w[i].clone() * w[j].clone() * a[(i, j)];
                }
            }
            let s = bb.clone() * bb / aa.clone();
            aa * psi_d(fam, s, bnorm)
        },
        v.clone(),
    );
    h * 0.5
}

fn draw_sample(fam: Fam, n: usize, rng: &mut ChaCha8Rng) -> Sample {
    let (lo, hi) = fam.range();
    loop {
        let bnorm = rng.random_range(lo..hi);
        let m = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } + 0.25 * rng.sample::<f64, _>(StandardNormal));
        if m.determinant().abs() < 0.2 {
            continue;
        }
        let mi = m.clone().try_inverse().unwrap();
        let a = m.transpose() * eta(n) * &m;
        let beta = random_beta(rng, n, bnorm);
        let b = m.transpose() * &beta;
        let bnorm = (b.transpose() * a.clone().try_inverse().unwrap() * &b)[(0, 0)];
        for _ in 0..64 {
            let mut u: DVector<f64> = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
            u[0] = u[0].abs();
            let q = (u.transpose() * eta(n) * &u)[(0, 0)];
            if !(q > 0.0) {
                continue;
            }
            u /= q.sqrt();
            let v = &mi * &u;
            let bb = beta.dot(&u);
            let s = bb * bb;
            if !fam.admissible(s, bb) {
                continue;
            }
            let g_ref = hessian_ad(fam, &a, &b, bnorm, &v);
            if g_ref.iter().any(|x| !x.is_finite()) || cond(&g_ref) > COND_MAX {
                continue;
            }
            return Sample { fam, a, b, v, bnorm, g_ref };
        }
    }
}

fn samples(n: usize, stream: u64) -> Vec<Sample> {
    Fam::all()
        .into_par_iter()
        .enumerate()
        .flat_map_iter(|(k, fam)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed());
            rng.set_stream(stream * 100 + k as u64);
            (0..PER_FAMILY).map(move |_| draw_sample(fam, n, &mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

fn worst(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x) })
}

fn c1_tensor(s4: &[Sample]) -> Outcome {
    let t = Instant::now();
    let e = worst(s4.par_iter().map(|s| {
        let g = to_na(&fundamental_tensor_closed_at(&s.frame(), &s.spec(), &s.v()).unwrap().g);
        (g - &s.g_ref).norm() / s.g_ref.norm()
    }).collect::<Vec<_>>().into_iter());
    let dt = t.elapsed().as_secs_f64();
    outcome(e <= 1e-6 && dt < 60.0, format!("{} samples, max relative Frobenius error {e:.2e} (≤ 1e-6), {dt:.2} s", s4.len()))
}

fn c2_det(s3: &[Sample], s4: &[Sample]) -> Outcome {
    let err = |ss: &[Sample]| {
        worst(ss.par_iter().map(|s| {
            let d = det_g_closed_at(&s.frame(), &s.spec(), &s.v()).unwrap();
            let o = s.g_ref.determinant();
            (d - o).abs() / o.abs()
        }).collect::<Vec<_>>().into_iter())
    };
    let (e3, e4) = (err(s3), err(s4));
    outcome(e3 <= 1e-6 && e4 <= 1e-6, format!("n=3: {e3:.2e}, n=4: {e4:.2e} (≤ 1e-6) over {} samples", s3.len() + s4.len()))
}

/// `Ψ²·d/ds(ρσ)` with a five-point stencil.
fn nu_oracle(fam: Fam, s: f64, bnorm: f64) -> f64 {
    let room = s.min((fam.s_max() - s).abs());
    let h = 1e-3 * room;
    let rs = |s: f64| {
        let (p, dp) = (fam.psi(s, bnorm), fam.dpsi(s, bnorm));
        (s - bnorm) * (p - s * dp).powi(2) / p
    };
    let d = (8.0 * (rs(s + h) - rs(s - h)) - (rs(s + 2.0 * h) - rs(s - 2.0 * h))) / (12.0 * h);
    fam.psi(s, bnorm).powi(2) * d
}

fn c3_inverse(s4: &[Sample]) -> Outcome {
    let rows: Vec<(f64, f64, bool)> = s4
        .par_iter()
        .map(|s| {
            let (fr, sp, v) = (s.frame(), s.spec(), s.v());
            let d = DirectionData::new(&fr, &sp, &v).unwrap();
            let bb = s.b.dot(&s.v);
            let s_val = bb * bb;
            let nu = psi_eval(&sp, d.s).unwrap().nu(d.s, s.bnorm);
            let o = nu_oracle(s.fam, s_val, s.bnorm);
            let nu_err = (nu - o).abs() / o.abs().max(f64::MIN_POSITIVE);
            match inverse_g_closed_at(&fr, &sp, &v) {
                Ok(gi) => {
                    let g = to_na(&fundamental_tensor_closed_at(&fr, &sp, &v).unwrap().g);
                    let r = (g * to_na(&gi) - DMatrix::identity(4, 4)).amax();
                    (r, nu_err, false)
                }
                Err(Error::SingularTensor(_)) => (0.0, nu_err, true),
                Err(e) => panic!("{e}"),
            }
        })
        .collect();
    let r = worst(rows.iter().map(|x| x.0));
    let nu = worst(rows.iter().map(|x| x.1));
    let skipped = rows.iter().filter(|x| x.2).count();
    outcome(
        r <= 1e-8 && nu <= 1e-6,
        format!("max |g·g⁻¹ − I| {r:.2e} (≤ 1e-8, {skipped} below the ν threshold), ν vs Ψ²·d(ρσ)/ds {nu:.2e} (≤ 1e-6)"),
    )
}

/// The classification table, one `(label, psi, ⟨b,b⟩, spacetime)` per row.
fn golden() -> Vec<(String, PsiConfig, f64, bool)> {
    let mut t = Vec::new();
    for (b, y) in [(-0.25, false), (0.0, true), (0.5, true), (1.0, false), (1.2, false)] {
        t.push((format!("randers ⟨b,b⟩={b}"), PsiConfig::Randers, b, y));
    }
    for (b, q, y) in [(0.0, -1.0, true), (0.0, -1.01, false), (0.0, 0.99, true), (0.0, 1.0, false), (-0.5, 0.5, true), (-0.5, -0.5, false)] {
        t.push((format!("bogoslovsky ⟨b,b⟩={b} q={q}"), PsiConfig::Bogoslovsky { q }, b, y));
    }
    for (b, k, m, p, y) in [(0.25, 1.0, -1.0, 0.5, true), (0.25, -1.0, 1.0, 0.5, false), (0.25, 1.0, -1.0, 1.0, true), (-0.25, 1.0, -1.0, 1.0, false), (-0.25, 1.0, -1.0, -0.5, true)] {
        t.push((format!("kundt ⟨b,b⟩={b} k={k} m={m} p={p}"), PsiConfig::Kundt { k, m, p }, b, y));
    }
    for b in [0.25, 0.5, 1.0] {
        t.push((format!("maxwell-boltzmann ⟨b,b⟩={b}"), PsiConfig::Exponential { p: "1 - bnorm^2/(2*s^2)".into() }, b, true));
    }
    t
}

fn golden_run(psi: &PsiConfig, bnorm: f64, n_samples: usize) -> RunConfig {
    RunConfig {
        metric: conformal_metric(4),
        oneform: conformal_oneform(4, bnorm),
        psi: psi.clone(),
        points: PointsConfig::Random { random: RandomPoints { lo: vec![-1.0; 4], hi: vec![1.0; 4], count: 5 } },
        sampling: ConeSampleConfig { n_samples, rng_seed: seed(), ..Default::default() },
        vector: None,
        killing: None,
        output: Default::default(),
        verbosity: 0,
    }
}

fn c4_golden() -> Outcome {
    let bad: Vec<String> = golden()
        .into_iter()
        .filter_map(|(label, psi, b, yes)| {
            let rep = run(Subcommand::Classify, Some(&golden_run(&psi, b, 1)), &Overrides::default()).unwrap();
            (rep.exit_code != if yes { 0 } else { 1 }).then(|| format!("{label} (exit {})", rep.exit_code))
        })
        .collect();
    let n = golden().len();
    outcome(bad.is_empty(), format!("{}/{n} rows reproduced{}", n - bad.len(), if bad.is_empty() { String::new() } else { format!("; mismatches: {}", bad.join(", ")) }))
}

fn conformal_frame(x: &[f64], bnorm: f64) -> LocalFrame {
    let phi = 0.2 * x[0] - 0.1 * x[1] + 0.05 * x[2];
    assert_eq!(PHI, "0.2*x0 - 0.1*x1 + 0.05*x2");
    let a = eta(4) * (2.0 * phi).exp();
    let b: Vec<f64> = beta(4, bnorm).into_iter().map(|c| c * phi.exp()).collect();
    LocalFrame::new(to_lib(&a), b).unwrap()
}

fn c5_sampling() -> Outcome {
    let conflict = "bogoslovsky ⟨b,b⟩=0 q=-1";
    let results: Vec<(String, Result<(), String>)> = golden()
        .into_par_iter()
        .filter(|r| r.3)
        .map(|(label, psi, b, _)| {
            let cfg = golden_run(&psi, b, 1000);
            let rep = run(Subcommand::Check, Some(&cfg), &Overrides { keep_rows: true, ..Default::default() }).unwrap();
            let Payload::Check(c) = rep.payload else { unreachable!() };
            let r = &c.report;
            let spec = cfg.psi.build().unwrap();
            let mut issues = Vec::new();
            if !r.counterexamples.is_empty() {
                issues.push(format!("{} counterexamples, first: {}", r.n_failed, r.counterexamples[0].reasons.join("; ")));
            }
            if r.n_marginal * 1000 > r.n_samples {
                issues.push(format!("{} of {} samples inside the tolerance band", r.n_marginal, r.n_samples));
            }
            let s0 = b.max(0.0);
            let mut bad_rows = 0;
            for row in r.rows.iter().filter(|row| row.pass) {
                let fr = conformal_frame(&row.x, b);
                let sp = spec.with_bnorm(fr.bnorm);
                let g = to_na(&fundamental_tensor_closed_at(&fr, &sp, &row.v).unwrap().g);
                let bad = sign_counts(&g) != (1, 3)
                    || !(det_g_closed_at(&fr, &sp, &row.v).unwrap() < 0.0)
                    || !(row.first_ineq && row.second_ineq)
                    || row.s < s0 - 1e-9
                    || (matches!(psi, PsiConfig::Randers) && row.b > 0.0);
                bad_rows += bad as usize;
            }
            if bad_rows > 0 {
                issues.push(format!("{bad_rows} passing samples contradict the reference signature/determinant"));
            }
            if r.rows.len() != 5000 {
                issues.push(format!("{} samples instead of 5000", r.rows.len()));
            }
            (label, if issues.is_empty() { Ok(()) } else { Err(issues.join("; ")) })
        })
        .collect();
    let failed: Vec<&(String, Result<(), String>)> = results.iter().filter(|r| r.1.is_err()).collect();
    let only_conflict = failed.len() == 1 && failed[0].0 == conflict;
    let detail = failed.iter().map(|(l, e)| format!("{l}: {}", e.as_ref().unwrap_err())).collect::<Vec<_>>().join(" | ");
    Outcome {
        pass: failed.is_empty(),
        summary: format!("{}/{} yes rows corroborated over 5×1000 samples{}", results.len() - failed.len(), results.len(), if detail.is_empty() { String::new() } else { format!("; {detail}") }),
        known_conflict: only_conflict,
    }
}

fn c6_mb() -> Outcome {
    let mut ok = true;
    let mut disagreements = 0;
    for b in [0.25, 1.0, 4.0] {
        let grid: Vec<f64> = (0..1000).map(|i| b + 99.0 * b * i as f64 / 999.0).collect();
        for &s in &grid {
            let quartic = s.powi(4) + b * s.powi(3) + 5.0 * b * b * s * s - b.powi(4);
            let (dp, d2p) = (b * b / s.powi(3), -3.0 * b * b / s.powi(4));
            let third = 1.0 - s * dp - (s - b) * (s * dp * dp + 2.0 * s * d2p + dp);
            ok &= quartic > 0.0;
            if s > b * (1.0 + 1e-9) && (third > 0.0) != (quartic > 0.0) {
                disagreements += 1;
            }
        }
        let lib = mb_polynomial_check(b, &grid).unwrap();
        ok &= lib.quartic_positive && lib.signs_agree;
    }
    outcome(ok && disagreements == 0, format!("quartic > 0 on 3×10³ points, {disagreements} sign disagreements with the direct third condition"))
}

fn c7_killing() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (k, q) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let (mc, oc) = killing_example(q);
        let (metric, oneform) = (mc.build().unwrap(), oc.build().unwrap());
        let spec = PsiSpec::BogoslovskyKropina { q };
        let mut rng = ChaCha8Rng::seed_from_u64(seed());
        rng.set_stream(7_000 + k as u64);
        let mut pairs = Vec::new();
        while pairs.len() < 1000 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut v: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
            v[0] = v[0].abs();
            let aa = v[0] * v[0] - v[1..].iter().map(|c| c * c).sum::<f64>();
            if aa > 1e-3 && (v[0] + v[1]).abs() > 1e-3 {
                pairs.push((x, v));
            }
        }
        // ξ^C(L) = ∂L/∂x⁰ for L = A^{1−q}B^{2q} on these fields
        let l = |x: &[f64], v: &[f64]| {
            let aa = (2.0 * q * x[0]).exp() * (v[0] * v[0] - v[1] * v[1] - v[2] * v[2] - v[3] * v[3]);
            let bb = ((q - 1.0) * x[0]).exp() * (v[0] + v[1]);
            aa * (bb * bb / aa).powf(q)
        };
        let oracle = worst(pairs.iter().map(|(x, v)| {
            let h = 1e-4;
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[0] += h;
            xm[0] -= h;
            ((l(&xp, v) - l(&xm, v)) / (2.0 * h)).abs() / l(x, v).abs()
        }));
        let lib = worst(pairs.par_iter().map(|(x, v)| killing_residual(metric.as_ref(), oneform.as_ref(), &spec, &VectorField::coordinate(4, 0), x, v).unwrap().normalized.abs()).collect::<Vec<_>>().into_iter());
        let points: Vec<Vec<f64>> = pairs.iter().take(20).map(|p| p.0.clone()).collect();
        let nontrivial = !is_trivial_symmetry(metric.as_ref(), oneform.as_ref(), &VectorField::coordinate(4, 0), &points, 1e-8);
        let trivial2 = is_trivial_symmetry(metric.as_ref(), oneform.as_ref(), &VectorField::coordinate(4, 2), &points, 1e-8);
        let params = SymmetryParams::constant(Some(1.0), q - 1.0, 2.0 * q, 0.0);
        let nc = nontrivial_condition_check(metric.as_ref(), oneform.as_ref(), &VectorField::coordinate(4, 0), &params, &points[..5], 100, seed()).unwrap();
        let pass = oracle < 1e-6 && lib <= 1e-8 && nontrivial && trivial2 && nc.identities_hold && nc.kappa_nonzero;
        ok &= pass;
        notes.push(format!("q={q}: residual {lib:.1e}"));
    }
    outcome(ok, format!("{}; ∂0 nontrivial, ∂2 trivial, identities with (1, q−1, 2q, 0)", notes.join(", ")))
}

fn c8_symmetry() -> Outcome {
    let grid: Vec<f64> = (0..200).map(|i| 0.1 * 100f64.powf(i as f64 / 199.0)).collect();
    let mut dev = 0.0f64;
    for q in [0.25, 0.5, 0.75] {
        let sp = build_symmetry_psi(1.0, q - 1.0, 2.0 * q, 0.0).unwrap();
        dev = dev.max(worst(grid.iter().map(|&s| (sp.psi(s).unwrap() - s.powf(q)).abs())));
    }
    // power branch with μ₂ ≠ 0 and the exponential branch μ₁ = 2λ₂
    let mut ode = 0.0f64;
    for (l2, m1, m2) in [(-0.25, 0.5, 0.0), (-0.3, 0.5, 0.7), (0.4, 0.8, 1.0)] {
        let sp = build_symmetry_psi(1.0, l2, m1, m2).unwrap();
        let f = |s: f64| sp.psi(s).unwrap();
        let o = worst(grid.iter().map(|&s| {
            let h = 1e-3 * s;
            let d = (8.0 * (f(s + h) - f(s - h)) - (f(s + 2.0 * h) - f(s - 2.0 * h))) / (12.0 * h);
            let lhs = s - f(s) / d;
            let rhs = 2.0 * l2 * s / (m1 + m2 * s);
            (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
        }));
        ode = ode.max(o).max(symmetry_ode_residual(&sp, &grid).unwrap());
    }
    outcome(dev <= 1e-10 && ode <= 1e-8, format!("max |Ψ − s^q| {dev:.1e} (≤ 1e-10), ODE residual {ode:.1e} (≤ 1e-8)"))
}

fn c9_lemmas(s4: &[Sample]) -> Outcome {
    let errs: Vec<[f64; 4]> = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed());
            rng.set_stream(9_000_000 + i);
            let sym = |rng: &mut ChaCha8Rng| {
                let m = DMatrix::from_fn(4, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
                (&m + m.transpose()) * 0.5
            };
            let vec = |rng: &mut ChaCha8Rng| DVector::from_fn(4, |_, _| rng.sample::<f64, _>(StandardNormal));
            let q = loop {
                let q = sym(&mut rng);
                if cond(&q) <= 1e3 {
                    break q;
                }
            };
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
            let relm = |a: &Matrix, b: &DMatrix<f64>| (to_na(a) - b).amax() / b.amax();
            let ql = to_lib(&q);
            let r1 = loop {
                let (d, c): (f64, _) = (rng.sample(StandardNormal), vec(&mut rng));
                let full = &q + &c * c.transpose() * d;
                if cond(&full) > 1e3 {
                    continue;
                }
                let cv: Vec<f64> = c.iter().copied().collect();
                let inv = full.clone().try_inverse().unwrap();
                break (rel(rank_one_update_det(&ql, d, &cv).unwrap(), full.determinant()), relm(&rank_one_update_inv(&ql, d, &cv).unwrap(), &inv));
            };
            let r2 = loop {
                let (d, mu): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                let (b, c) = (vec(&mut rng), vec(&mut rng));
                let full = &q + &b * b.transpose() * d + &c * c.transpose() * mu;
                if cond(&full) > 1e3 {
                    continue;
                }
                let (bv, cv): (Vec<f64>, Vec<f64>) = (b.iter().copied().collect(), c.iter().copied().collect());
                let inv = full.clone().try_inverse().unwrap();
                break (
                    rel(rank_two_update_det(&ql, d, &bv, mu, &cv).unwrap(), full.determinant()),
                    relm(&rank_two_update_inv(&ql, d, &bv, mu, &cv).unwrap(), &inv),
                );
            };
            [r1.0, r1.1, r2.0, r2.1]
        })
        .collect();
    let w: Vec<f64> = (0..4).map(|k| worst(errs.iter().map(|e| e[k]))).collect();
    // B^kB_k, C^kC_k, B^kC_k with C = ∂s/∂v, contracted with nalgebra's a⁻¹
    let blocks = worst(s4.iter().step_by(s4.len() / 100).take(100).map(|s| {
        let ai = s.a.clone().try_inverse().unwrap();
        let av = &s.a * &s.v;
        let (aa, bb) = (s.v.dot(&av), s.b.dot(&s.v));
        let c = &s.b * (2.0 * bb / aa) - av * (2.0 * bb * bb / (aa * aa));
        let direct = [s.b.dot(&(&ai * &s.b)), c.dot(&(&ai * &c)), s.b.dot(&(&ai * &c))];
        let closed = UpdateBlocks::closed(&s.frame().scalars(&s.v()).unwrap()).unwrap();
        let r = |x: f64, y: f64| (x - y).abs() / y.abs().max(1.0);
        r(closed.bb, direct[0]).max(r(closed.cc, direct[1])).max(r(closed.bc, direct[2]))
    }));
    let all = w.iter().copied().fold(blocks, f64::max);
    outcome(
        all <= 1e-10,
        format!("10⁴ matrices: rank-1 det {:.1e} inv {:.1e}, rank-2 det {:.1e} inv {:.1e}; blocks {blocks:.1e} (≤ 1e-10)", w[0], w[1], w[2], w[3]),
    )
}

fn c10_determinism() -> Outcome {
    let st = |seed| run(Subcommand::Selftest, None, &Overrides { seed: Some(seed), ..Default::default() }).unwrap().deterministic_json();
    let (a, b) = (st(3), st(3));
    let cfg = golden_run(&PsiConfig::Randers, 0.5, 500);
    let ck = || run(Subcommand::Check, Some(&cfg), &Overrides::default()).unwrap().deterministic_json();
    let same = a == b && ck() == ck();
    outcome(same, format!("selftest (seed 3) and check reports byte-identical across runs: {same} ({} bytes)", a.len()))
}

fn main() -> ExitCode {
    let start = Instant::now();
    println!("seed {}", seed());
    let s4 = samples(4, 1);
    let s3 = samples(3, 2);
    let checks: Vec<(u8, &str, Outcome)> = vec![
        (1, "closed-form vs numeric fundamental tensor", c1_tensor(&s4)),
        (2, "determinant formula, n = 3 and 4", c2_det(&s3, &s4)),
        (3, "inverse formula and ν", c3_inverse(&s4)),
        (4, "classification golden table", c4_golden()),
        (5, "sampling corroboration of yes rows", c5_sampling()),
        (6, "Maxwell–Boltzmann quartic", c6_mb()),
        (7, "Killing example", c7_killing()),
        (8, "symmetry Ψ reconstruction", c8_symmetry()),
        (9, "matrix determinant lemmas", c9_lemmas(&s4)),
        (10, "determinism", c10_determinism()),
    ];
    let mut unexpected = 0;
    for (id, name, o) in &checks {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && o.known_conflict { " [known conflict: q = −1 with lightlike b gives det g ≡ 0]" } else { "" };
        println!("criterion {id:>2} {tag}  {name}: {}{note}", o.summary);
        unexpected += (!o.pass && !o.known_conflict) as usize;
    }
    let passed = checks.iter().filter(|c| c.2.pass).count();
    println!("{passed}/{} criteria pass in {:.1} s", checks.len(), start.elapsed().as_secs_f64());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
