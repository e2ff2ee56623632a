//! Reference fields and the classification golden table.

use serde::Serialize;

use crate::config::{MetricConfig, OneFormConfig, PointsConfig, PsiConfig, RandomPoints, RunConfig};
use crate::verifier::ConeSampleConfig;

/// Conformal exponent `φ(x)` of the reference metric `a = e^{2φ} η`.
pub const PHI: &str = "0.2*x0 - 0.1*x1 + 0.05*x2";

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

/// `a = e^{2φ} η` in `n` dimensions.
pub fn conformal_metric(n: usize) -> MetricConfig {
    let components = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match (i == j, i) {
                    (true, 0) => format!("exp(2*({PHI}))"),
                    (true, _) => format!("-exp(2*({PHI}))"),
                    _ => "0".into(),
                })
                .collect()
        })
        .collect();
    MetricConfig::Expr { components }
}

/// Constant covector `β` with `η⁻¹(β, β) = bnorm` and past-pointing `η⁻¹β`.
pub fn beta(n: usize, bnorm: f64) -> Vec<f64> {
    let chi: f64 = 0.3;
    let mut b = vec![0.0; n];
    if bnorm > 0.0 {
        b[0] = -bnorm.sqrt() * chi.cosh();
        b[1] = bnorm.sqrt() * chi.sinh();
    } else if bnorm == 0.0 {
        b[0] = -0.7;
        b[1] = 0.7;
    } else {
        b[0] = -(-bnorm).sqrt() * chi.sinh();
        b[1] = (-bnorm).sqrt() * chi.cosh();
    }
    b
}

/// `b = e^{φ} β`, so `⟨b,b⟩ = bnorm` at every point of the conformal metric.
pub fn conformal_oneform(n: usize, bnorm: f64) -> OneFormConfig {
    let components = beta(n, bnorm)
        .into_iter()
        .map(|c| if c == 0.0 { "0".into() } else { format!("{}*exp({PHI})", fmt(c)) })
        .collect();
    OneFormConfig::Expr { components }
}

/// `a = e^{2q x⁰} η`, `b = e^{(q−1)x⁰}(dx⁰ + dx¹)` in four dimensions.
pub fn killing_example(q: f64) -> (MetricConfig, OneFormConfig) {
    let oneform = OneFormConfig::Expr {
        components: vec![
            format!("exp({}*x0)", fmt(q - 1.0)),
            format!("exp({}*x0)", fmt(q - 1.0)),
            "0".into(),
            "0".into(),
        ],
    };
    (MetricConfig::Conformal { n: 4, q }, oneform)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoldenRow {
    pub label: String,
    pub psi: PsiConfig,
    pub bnorm: f64,
    pub expected: bool,
}

fn row(label: &str, psi: PsiConfig, bnorm: f64, expected: bool) -> GoldenRow {
    GoldenRow { label: label.into(), psi, bnorm, expected }
}

/// Expected analytic verdicts for the four families.
pub fn golden_table() -> Vec<GoldenRow> {
    let mut t = Vec::new();
    for (b, e) in [(-0.25, false), (0.0, true), (0.5, true), (1.0, false), (1.2, false)] {
        t.push(row(&format!("randers bnorm={b}"), PsiConfig::Randers, b, e));
    }
    for (b, q, e) in [(0.0, -1.0, true), (0.0, -1.01, false), (0.0, 0.99, true), (0.0, 1.0, false), (-0.5, 0.5, true), (-0.5, -0.5, false)] {
        t.push(row(&format!("bogoslovsky bnorm={b} q={q}"), PsiConfig::Bogoslovsky { q }, b, e));
    }
    for (b, k, m, p, e) in [
        (0.25, 1.0, -1.0, 0.5, true),
        (0.25, -1.0, 1.0, 0.5, false),
        (0.25, 1.0, -1.0, 1.0, true),
        (-0.25, 1.0, -1.0, 1.0, false),
        (-0.25, 1.0, -1.0, -0.5, true),
    ] {
        t.push(row(&format!("kundt bnorm={b} k={k} m={m} p={p}"), PsiConfig::Kundt { k, m, p }, b, e));
    }
    for b in [0.25, 0.5, 1.0] {
        t.push(row(&format!("maxwell-boltzmann bnorm={b}"), PsiConfig::Exponential { p: "1 - bnorm^2/(2*s^2)".into() }, b, true));
    }
    t
}

/// A run over the conformal reference fields with `⟨b,b⟩ = row.bnorm`.
pub fn golden_config(row: &GoldenRow, seed: u64, n_samples: usize) -> RunConfig {
    RunConfig {
        metric: conformal_metric(4),
        oneform: conformal_oneform(4, row.bnorm),
        psi: row.psi.clone(),
        points: PointsConfig::Random { random: RandomPoints { lo: vec![-1.0; 4], hi: vec![1.0; 4], count: 5 } },
        sampling: ConeSampleConfig { n_samples, rng_seed: seed, ..Default::default() },
        vector: None,
        killing: None,
        output: Default::default(),
        verbosity: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{b_norm, raise_index};

    #[test]
    fn conformal_bnorm_is_constant_and_past() {
        for b in [-0.5, -0.25, 0.0, 0.25, 1.2] {
            let m = conformal_metric(4).build().unwrap();
            let f = conformal_oneform(4, b).build().unwrap();
            for x in [[0.0; 4], [0.7, -0.3, 0.9, 0.1]] {
                let bn = b_norm(m.as_ref(), f.as_ref(), &x).unwrap();
                assert!((bn.value - b).abs() < 1e-12, "{b} {bn:?}");
                if b >= 0.0 {
                    assert!(raise_index(m.as_ref(), f.as_ref(), &x).unwrap()[0] < 0.0);
                }
            }
        }
    }

    #[test]
    fn golden_table_size() {
        assert_eq!(golden_table().len(), 19);
    }
}
