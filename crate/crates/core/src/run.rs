//! Subcommand dispatch and the JSON report envelope.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Resolved, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::{b_norm, LocalFrame};
use crate::isometry::{killing_residual, nontrivial_condition_check, triviality, KillingResidual, NontrivialReport, TrivialityReport, VectorField};
use crate::selftest::{run_selftest, SelftestReport};
use crate::tensor::{tensor_dump, TensorDump};
use crate::verifier::{classify_spec, sample_cone, verify_by_sampling, ClassificationVerdict, ConeSampleConfig, SampleRegion, Verdict, VerificationReport};

pub const TOOL: &str = "alphabeta";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_SELFTEST_SEED: u64 = 0;

/// Relative spread of `⟨b,b⟩` across points above which a note is added.
const BNORM_SPREAD_TOL: f64 = 1e-9;
/// Triviality tolerance on relative Lie-derivative norms.
const TRIVIALITY_TOL: f64 = 1e-8;
/// Random `ẋ` per point in the nontrivial identity check.
const IDENTITY_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Tensor,
    Check,
    Classify,
    Killing,
    Selftest,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Tensor => "tensor",
            Subcommand::Check => "check",
            Subcommand::Classify => "classify",
            Subcommand::Killing => "killing",
            Subcommand::Selftest => "selftest",
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub xi: Option<String>,
    pub keep_rows: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &RunConfig) -> Result<RunConfig> {
        let mut cfg = cfg.clone();
        if let Some(s) = self.seed {
            cfg.sampling.rng_seed = s;
        }
        if let Some(n) = self.samples {
            cfg.sampling.n_samples = n;
        }
        if let Some(xi) = &self.xi {
            match &mut cfg.killing {
                Some(k) => k.xi = xi.clone(),
                None => cfg.killing = Some(crate::config::KillingConfig { xi: xi.clone(), symmetry: None, tolerance: 1e-8 }),
            }
        }
        cfg.sampling.keep_rows |= self.keep_rows;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TensorPayload {
    pub points: Vec<TensorDump>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckPayload {
    pub report: VerificationReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointClassification {
    pub x: Vec<f64>,
    pub bnorm: f64,
    pub verdict: ClassificationVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassifyPayload {
    pub family: String,
    /// Every probed point classified as a spacetime.
    pub is_spacetime: bool,
    pub bnorm_range: [f64; 2],
    pub points: Vec<PointClassification>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct KillingRow {
    pub point_index: usize,
    pub v: Vec<f64>,
    #[serde(flatten)]
    pub residual: KillingResidual,
}

#[derive(Clone, Debug, Serialize)]
pub struct KillingPayload {
    pub xi: String,
    pub tolerance: f64,
    pub region: SampleRegion,
    pub samples: usize,
    pub max_normalized_residual: f64,
    pub max_cross_check: f64,
    pub is_killing: bool,
    pub triviality: TrivialityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nontrivial: Option<NontrivialReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<KillingRow>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Payload {
    Tensor(TensorPayload),
    Check(CheckPayload),
    Classify(ClassifyPayload),
    Killing(KillingPayload),
    Selftest(SelftestReport),
}

impl Payload {
    /// 0 for yes / corroborated, 1 for no / falsified / inconclusive.
    pub fn exit_code(&self) -> i32 {
        let ok = match self {
            Payload::Tensor(_) => true,
            Payload::Check(c) => c.report.verdict == Verdict::Corroborated,
            Payload::Classify(c) => c.is_spacetime,
            Payload::Killing(k) => k.is_killing && k.nontrivial.as_ref().is_none_or(|n| n.identities_hold),
            Payload::Selftest(s) => s.all_pass,
        };
        if ok {
            0
        } else {
            1
        }
    }
}

/// Wall-clock data, kept apart from the deterministic part of the report.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Timing {
    pub wall_clock_s: f64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub per_criterion_s: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: Subcommand,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    pub payload: Payload,
    pub exit_code: i32,
    pub timing: Timing,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without its `timing` field.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }
}

/// Structured error object emitted in place of a report.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: Subcommand,
    pub error: ErrorBody,
    pub exit_code: i32,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
}

impl ErrorReport {
    pub fn new(subcommand: Subcommand, e: &Error) -> Self {
        Self { tool: TOOL, version: VERSION, subcommand, error: ErrorBody { kind: e.kind(), message: e.to_string() }, exit_code: 2 }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("error serializes")
    }
}

/// Runs `sub`; every subcommand except `selftest` needs a config.
pub fn run(sub: Subcommand, config: Option<&RunConfig>, overrides: &Overrides) -> Result<RunReport> {
    let start = Instant::now();
    if sub == Subcommand::Selftest {
        let seed = overrides.seed.unwrap_or(DEFAULT_SELFTEST_SEED);
        let (rep, t) = run_selftest(seed);
        let payload = Payload::Selftest(rep);
        return Ok(RunReport {
            tool: TOOL,
            version: VERSION,
            subcommand: sub,
            seed,
            config: None,
            exit_code: payload.exit_code(),
            payload,
            timing: Timing { wall_clock_s: start.elapsed().as_secs_f64(), per_criterion_s: t.per_criterion_s },
        });
    }
    let cfg = overrides.apply(config.ok_or_else(|| Error::ConfigError { key: "--config".into(), message: format!("`{}` needs a config file", sub.name()) })?)?;
    let r = cfg.resolve()?;
    let payload = match sub {
        Subcommand::Tensor => Payload::Tensor(run_tensor(&cfg, &r)?),
        Subcommand::Check => Payload::Check(run_check(&cfg, &r)?),
        Subcommand::Classify => Payload::Classify(run_classify(&cfg, &r)?),
        Subcommand::Killing => Payload::Killing(run_killing(&cfg, &r)?),
        Subcommand::Selftest => unreachable!(),
    };
    Ok(RunReport {
        tool: TOOL,
        version: VERSION,
        subcommand: sub,
        seed: cfg.sampling.rng_seed,
        exit_code: payload.exit_code(),
        config: Some(cfg),
        payload,
        timing: Timing { wall_clock_s: start.elapsed().as_secs_f64(), ..Default::default() },
    })
}

fn run_tensor(cfg: &RunConfig, r: &Resolved) -> Result<TensorPayload> {
    let v = cfg.vector.as_ref().ok_or_else(|| Error::ConfigError { key: "vector".into(), message: "`tensor` needs a tangent vector".into() })?;
    let points = r.points.iter().map(|x| tensor_dump(r.metric.as_ref(), r.oneform.as_ref(), &r.psi, x, v)).collect::<Result<_>>()?;
    Ok(TensorPayload { points })
}

fn run_check(cfg: &RunConfig, r: &Resolved) -> Result<CheckPayload> {
    let mut notes = Vec::new();
    let report = match verify_by_sampling(r.metric.as_ref(), r.oneform.as_ref(), &r.psi, &r.points, &cfg.sampling) {
        Err(Error::EmptyCone { draws }) if cfg.sampling.region == SampleRegion::FamilyCone => {
            notes.push(format!("family cone empty after {draws} draws; sampled the future cone of a instead"));
            let sc = ConeSampleConfig { region: SampleRegion::AFuture, ..cfg.sampling.clone() };
            verify_by_sampling(r.metric.as_ref(), r.oneform.as_ref(), &r.psi, &r.points, &sc)?
        }
        other => other?,
    };
    Ok(CheckPayload { report, notes })
}

fn run_classify(cfg: &RunConfig, r: &Resolved) -> Result<ClassifyPayload> {
    let points: Vec<PointClassification> = r
        .points
        .iter()
        .map(|x| {
            let bnorm = b_norm(r.metric.as_ref(), r.oneform.as_ref(), x)?.value;
            let verdict = classify_spec(&r.psi, bnorm, &cfg.sampling)?;
            Ok(PointClassification { x: x.clone(), bnorm, verdict })
        })
        .collect::<Result<_>>()?;
    let lo = points.iter().map(|p| p.bnorm).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.bnorm).fold(f64::NEG_INFINITY, f64::max);
    let mut notes = Vec::new();
    if hi - lo > BNORM_SPREAD_TOL * lo.abs().max(hi.abs()).max(1.0) {
        notes.push(format!("⟨b,b⟩ varies over the points ({lo} to {hi}); each point is classified separately"));
    }
    let yes = points.iter().filter(|p| p.verdict.is_spacetime).count();
    if yes > 0 && yes < points.len() {
        notes.push(format!("{yes} of {} points classify as spacetime", points.len()));
    }
    Ok(ClassifyPayload {
        family: points[0].verdict.family.clone(),
        is_spacetime: yes == points.len(),
        bnorm_range: [lo, hi],
        points,
        notes,
    })
}

fn run_killing(cfg: &RunConfig, r: &Resolved) -> Result<KillingPayload> {
    let kc = cfg.killing.as_ref().ok_or_else(|| Error::ConfigError { key: "killing".into(), message: "`killing` needs a vector field (killing.xi or --xi)".into() })?;
    let xi = VectorField::<f64>::parse(&kc.xi)?;
    let n = r.metric.dim();
    if xi.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: xi.dim() });
    }
    let mut notes = Vec::new();
    let mut region = cfg.sampling.region;
    let draw = |region: SampleRegion| -> Result<Vec<(usize, Vec<f64>)>> {
        let sc = ConeSampleConfig { region, ..cfg.sampling.clone() };
        let sets: Vec<Vec<(usize, Vec<f64>)>> = r
            .points
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let frame = LocalFrame::at(r.metric.as_ref(), r.oneform.as_ref(), x)?;
                let set = sample_cone(&r.psi.with_bnorm(frame.bnorm), &frame, &sc, i as u64)?;
                Ok(set.vectors.into_iter().map(|v| (i, v)).collect())
            })
            .collect::<Result<_>>()?;
        Ok(sets.into_iter().flatten().collect())
    };
    let samples = match draw(region) {
        Err(Error::EmptyCone { draws }) if region == SampleRegion::FamilyCone => {
            notes.push(format!("family cone empty after {draws} draws; sampled the future cone of a instead"));
            region = SampleRegion::AFuture;
            draw(region)?
        }
        other => other?,
    };
    let rows: Vec<KillingRow> = samples
        .par_iter()
        .map(|(i, v)| {
            let residual = killing_residual(r.metric.as_ref(), r.oneform.as_ref(), &r.psi, &xi, &r.points[*i], v)?;
            Ok(KillingRow { point_index: *i, v: v.clone(), residual })
        })
        .collect::<Result<_>>()?;
    let max_res = rows.iter().fold(0.0f64, |m, k| if k.residual.normalized.is_nan() { f64::INFINITY } else { m.max(k.residual.normalized.abs()) });
    let max_cross = rows.iter().fold(0.0f64, |m, k| m.max(k.residual.cross_check));
    let triv = triviality(r.metric.as_ref(), r.oneform.as_ref(), &xi, &r.points, TRIVIALITY_TOL)?;
    if triv.equivalence_violation {
        notes.push("exactly one of 𝔏ξ a, 𝔏ξ b vanishes: a Killing field of L should preserve both or neither".into());
    }
    let nontrivial = match &kc.symmetry {
        Some(s) => Some(nontrivial_condition_check(
            r.metric.as_ref(),
            r.oneform.as_ref(),
            &xi,
            &s.build()?,
            &r.points,
            IDENTITY_SAMPLES,
            cfg.sampling.rng_seed,
        )?),
        None => None,
    };
    Ok(KillingPayload {
        xi: kc.xi.clone(),
        tolerance: kc.tolerance,
        region,
        samples: rows.len(),
        max_normalized_residual: max_res,
        max_cross_check: max_cross,
        is_killing: max_res <= kc.tolerance,
        triviality: triv,
        nontrivial,
        notes,
        rows: if cfg.sampling.keep_rows { rows } else { Vec::new() },
    })
}

fn push_vec(rec: &mut Vec<String>, v: &[f64]) {
    rec.extend(v.iter().map(|c| format!("{c:?}")));
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

/// Per-sample rows of a `check` or `killing` report as CSV; `None` for other payloads.
pub fn rows_csv(report: &RunReport) -> Option<Result<String>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let res = match &report.payload {
        Payload::Check(c) => {
            let rows = &c.report.rows;
            let n = rows.first().map_or(0, |r| r.v.len());
            let mut head: Vec<String> = vec!["point_index".into()];
            head.extend(indexed("x", n));
            head.extend(indexed("v", n));
            head.extend(["A", "B", "s", "det_g"].map(String::from));
            head.extend(indexed("eig", n));
            head.extend(["positivity_a", "positivity_psi", "first_ineq", "second_ineq", "lorentzian", "pass"].map(String::from));
            w.write_record(&head).and_then(|_| {
                rows.iter().try_for_each(|r| {
                    let mut rec = vec![r.point_index.to_string()];
                    push_vec(&mut rec, &r.x);
                    push_vec(&mut rec, &r.v);
                    push_vec(&mut rec, &[r.a, r.b, r.s, r.det_g]);
                    let mut eig = r.eigenvalues.clone();
                    eig.resize(n, f64::NAN);
                    push_vec(&mut rec, &eig);
                    rec.extend([r.positivity_a, r.positivity_psi, r.first_ineq, r.second_ineq, r.lorentzian, r.pass].map(|b| b.to_string()));
                    w.write_record(&rec)
                })
            })
        }
        Payload::Killing(k) => {
            let n = k.rows.first().map_or(0, |r| r.v.len());
            let mut head: Vec<String> = vec!["point_index".into()];
            head.extend(indexed("v", n));
            head.extend(["raw", "normalized", "scale", "xi_c_a", "xi_c_b", "xi_c_l", "cross_check"].map(String::from));
            w.write_record(&head).and_then(|_| {
                k.rows.iter().try_for_each(|r| {
                    let mut rec = vec![r.point_index.to_string()];
                    push_vec(&mut rec, &r.v);
                    let q = &r.residual;
                    push_vec(&mut rec, &[q.raw, q.normalized, q.scale, q.xi_c_a, q.xi_c_b, q.xi_c_l, q.cross_check]);
                    w.write_record(&rec)
                })
            })
        }
        _ => return None,
    };
    Some(
        res.map_err(|e| Error::Io(e.to_string()))
            .and_then(|_| w.into_inner().map_err(|e| Error::Io(e.to_string())))
            .map(|b| String::from_utf8(b).expect("csv is utf-8")),
    )
}
