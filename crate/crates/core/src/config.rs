//! JSON run configuration: field, profile and point specifications.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{ConformalMinkowski, ConstantMetric, ConstantOneForm, ExprMetric, ExprOneForm, MetricField, Minkowski, OneFormField};
use crate::isometry::SymmetryParams;
use crate::linalg::Matrix;
use crate::psi::PsiSpec;
use crate::verifier::{stream_rng, ConeSampleConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricConfig {
    Minkowski { n: usize },
    /// `e^{2 q x⁰} η`.
    Conformal { n: usize, q: f64 },
    Constant { a: Vec<Vec<f64>> },
    /// Components as expressions in `x0, x1, …`.
    Expr { components: Vec<Vec<String>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OneFormConfig {
    Constant { b: Vec<f64> },
    Expr { components: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiConfig {
    Lorentzian {
        #[serde(default = "one")]
        kappa: f64,
    },
    Randers,
    Bogoslovsky { q: f64 },
    Kundt { k: f64, m: f64, p: f64 },
    /// `Ψ = e^{P(s)}`; `p` may use `s` and `bnorm`.
    Exponential { p: String },
    Symmetry {
        #[serde(default = "one")]
        c: f64,
        lambda2: f64,
        mu1: f64,
        mu2: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPoints {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointsConfig {
    List(Vec<Vec<f64>>),
    Random { random: RandomPoints },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryConfig {
    /// Omitted: fitted pointwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<String>,
    pub lambda2: String,
    pub mu1: String,
    pub mu2: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KillingConfig {
    /// Comma-separated components of `ξ`.
    pub xi: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetryConfig>,
    #[serde(default = "default_killing_tol")]
    pub tolerance: f64,
}

fn default_killing_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub metric: MetricConfig,
    pub oneform: OneFormConfig,
    pub psi: PsiConfig,
    pub points: PointsConfig,
    #[serde(default)]
    pub sampling: ConeSampleConfig,
    /// Tangent vector for the `tensor` subcommand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub killing: Option<KillingConfig>,
    #[serde(default)]
    pub output: OutputFormat,
    #[serde(default)]
    pub verbosity: u8,
}

fn parse_at(key: &str, src: &str) -> Result<Expr> {
    Expr::parse(src).map_err(|e| match e {
        Error::ParseError { position, message } => Error::ParseError { position, message: format!("{key}: {message}") },
        other => other,
    })
}

impl MetricConfig {
    pub fn dim(&self) -> usize {
        match self {
            MetricConfig::Minkowski { n } | MetricConfig::Conformal { n, .. } => *n,
            MetricConfig::Constant { a } => a.len(),
            MetricConfig::Expr { components } => components.len(),
        }
    }

    pub fn build(&self) -> Result<Box<dyn MetricField<f64>>> {
        let n = self.dim();
        if n < 2 {
            return Err(Error::ValidationError("metric dimension must be at least 2".into()));
        }
        Ok(match self {
            MetricConfig::Minkowski { n } => Box::new(Minkowski { n: *n }),
            MetricConfig::Conformal { n, q } => Box::new(ConformalMinkowski { n: *n, q: *q }),
            MetricConfig::Constant { a } => {
                if a.iter().any(|r| r.len() != n) {
                    return Err(Error::ValidationError("metric.a must be square".into()));
                }
                let m = Matrix::from_rows(a);
                if m.asymmetry() > 0.0 {
                    return Err(Error::ValidationError("metric.a must be symmetric".into()));
                }
                Box::new(ConstantMetric { a: m })
            }
            MetricConfig::Expr { components } => {
                let comps = components
                    .iter()
                    .enumerate()
                    .map(|(i, row)| row.iter().enumerate().map(|(j, s)| parse_at(&format!("metric.components[{i}][{j}]"), s)).collect())
                    .collect::<Result<Vec<Vec<_>>>>()?;
                Box::new(ExprMetric::new(comps)?)
            }
        })
    }
}

impl OneFormConfig {
    pub fn dim(&self) -> usize {
        match self {
            OneFormConfig::Constant { b } => b.len(),
            OneFormConfig::Expr { components } => components.len(),
        }
    }

    pub fn build(&self) -> Result<Box<dyn OneFormField<f64>>> {
        Ok(match self {
            OneFormConfig::Constant { b } => Box::new(ConstantOneForm { b: b.clone() }),
            OneFormConfig::Expr { components } => {
                let comps = components
                    .iter()
                    .enumerate()
                    .map(|(i, s)| parse_at(&format!("oneform.components[{i}]"), s))
                    .collect::<Result<Vec<_>>>()?;
                Box::new(ExprOneForm::new(comps)?)
            }
        })
    }
}

impl PsiConfig {
    pub fn build(&self) -> Result<PsiSpec<f64>> {
        let invalid = |e: Error| match e {
            Error::InvalidParams(m) => Error::ValidationError(m),
            other => other,
        };
        match self {
            PsiConfig::Lorentzian { kappa } => PsiSpec::lorentzian(*kappa).map_err(invalid),
            PsiConfig::Randers => Ok(PsiSpec::Randers),
            PsiConfig::Bogoslovsky { q } => Ok(PsiSpec::BogoslovskyKropina { q: *q }),
            PsiConfig::Kundt { k, m, p } => PsiSpec::kundt(*k, *m, *p).map_err(invalid),
            PsiConfig::Exponential { p } => PsiSpec::exponential(parse_at("psi.p", p)?),
            PsiConfig::Symmetry { c, lambda2, mu1, mu2 } => PsiSpec::symmetry(*c, *lambda2, *mu1, *mu2).map_err(invalid),
        }
    }
}

impl SymmetryConfig {
    pub fn build(&self) -> Result<SymmetryParams> {
        Ok(SymmetryParams {
            kappa: self.kappa.as_deref().map(|k| parse_at("killing.symmetry.kappa", k)).transpose()?,
            lambda2: parse_at("killing.symmetry.lambda2", &self.lambda2)?,
            mu1: parse_at("killing.symmetry.mu1", &self.mu1)?,
            mu2: parse_at("killing.symmetry.mu2", &self.mu2)?,
        })
    }
}

impl PointsConfig {
    /// Explicit points, or a box sampled from a dedicated RNG stream of `seed`.
    pub fn resolve(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let pts = match self {
            PointsConfig::List(p) => p.clone(),
            PointsConfig::Random { random } => {
                if random.lo.len() != n || random.hi.len() != n {
                    return Err(Error::ValidationError(format!("points.random bounds must have {n} entries")));
                }
                if random.lo.iter().zip(&random.hi).any(|(l, h)| !(l <= h)) {
                    return Err(Error::ValidationError("points.random requires lo ≤ hi".into()));
                }
                let mut rng = stream_rng(seed, u64::MAX);
                (0..random.count)
                    .map(|_| random.lo.iter().zip(&random.hi).map(|(&l, &h)| if l == h { l } else { rng.random_range(l..h) }).collect())
                    .collect()
            }
        };
        if pts.is_empty() {
            return Err(Error::ValidationError("at least one point is required".into()));
        }
        if let Some(p) = pts.iter().find(|p| p.len() != n || p.iter().any(|c| !c.is_finite())) {
            return Err(Error::ValidationError(format!("point {p:?} must have {n} finite coordinates")));
        }
        Ok(pts)
    }
}

/// Everything a run needs, built once from a validated config.
pub struct Resolved {
    pub metric: Box<dyn MetricField<f64>>,
    pub oneform: Box<dyn OneFormField<f64>>,
    pub psi: PsiSpec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl RunConfig {
    pub fn from_json(src: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(src).map_err(|e| {
            let message = format!("line {} column {}: {e}", e.line(), e.column());
            if e.is_syntax() || e.is_eof() {
                Error::ParseError { position: line_col_offset(src, e.line(), e.column()), message }
            } else {
                Error::ConfigError { key: "<root>".into(), message }
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Eagerly builds every referenced object so invalid parameters fail here.
    pub fn validate(&self) -> Result<()> {
        self.resolve().map(|_| ())
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let metric = self.metric.build()?;
        let oneform = self.oneform.build()?;
        let n = metric.dim();
        if oneform.dim() != n {
            return Err(Error::ValidationError(format!("oneform has {} components, metric dimension is {n}", oneform.dim())));
        }
        let psi = self.psi.build()?;
        self.sampling.validate()?;
        if let Some(t) = &self.sampling.time_reference {
            if t.len() != n {
                return Err(Error::ValidationError(format!("sampling.time_reference must have {n} components")));
            }
        }
        if let Some(v) = &self.vector {
            if v.len() != n {
                return Err(Error::ValidationError(format!("vector must have {n} components")));
            }
        }
        if let Some(k) = &self.killing {
            crate::isometry::VectorField::<f64>::parse(&k.xi)?;
            if let Some(s) = &k.symmetry {
                s.build()?;
            }
        }
        let points = self.points.resolve(n, self.sampling.rng_seed)?;
        Ok(Resolved { metric, oneform, psi, points })
    }
}

fn line_col_offset(src: &str, line: usize, col: usize) -> usize {
    let before: usize = src.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    before + col.saturating_sub(1)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let src = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    RunConfig::from_json(&src)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "metric": {"kind": "minkowski", "n": 4},
        "oneform": {"kind": "constant", "b": [-0.5, 0.2, 0, 0]},
        "psi": {"family": "randers"},
        "points": [[0, 0, 0, 0]]
    }"#;

    #[test]
    fn minimal_config_round_trips() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
        assert_eq!(c.sampling, ConeSampleConfig::default());
    }

    #[test]
    fn kundt_m_zero_rejected() {
        let src = MINIMAL.replace(r#"{"family": "randers"}"#, r#"{"family": "kundt", "k": 1, "m": 0, "p": 0.5}"#);
        assert_eq!(RunConfig::from_json(&src).unwrap_err(), Error::ValidationError("m must be nonzero".into()));
    }

    #[test]
    fn malformed_expression_reports_position() {
        let src = MINIMAL.replace(r#"{"family": "randers"}"#, r#"{"family": "exponential", "p": "exp("}"#);
        match RunConfig::from_json(&src).unwrap_err() {
            Error::ParseError { position, message } => {
                assert_eq!(position, 4);
                assert!(message.starts_with("psi.p"));
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_line() {
        let e = RunConfig::from_json("{\n  \"metric\": ,\n}").unwrap_err();
        assert!(matches!(e, Error::ParseError { ref message, .. } if message.starts_with("line 2")), "{e:?}");
    }

    #[test]
    fn random_points_are_seeded() {
        let p = PointsConfig::Random { random: RandomPoints { lo: vec![-1.0; 4], hi: vec![1.0; 4], count: 3 } };
        assert_eq!(p.resolve(4, 7).unwrap(), p.resolve(4, 7).unwrap());
        assert_ne!(p.resolve(4, 7).unwrap(), p.resolve(4, 8).unwrap());
    }
}
