//! Flat key=value experiment configs and dispatch.
//!
//! The format is one `key=value` per line, `#` comments allowed. `seed` is
//! mandatory: a run must be a pure function of its config file. `n` may be
//! a comma-separated list to sweep an experiment across sample sizes.

use crate::error::{Error, Result};
use crate::experiments::{
    exp_coupon, exp_erm_upper_bound, exp_majority_lower_bound, exp_oblivious_oig_upper_bound,
    exp_oig_lower_bound, exp_oig_lower_bound_general, ErmUbClass, ErmUbMode, ErmUbParams,
    MajorityLbParams, Report, SchemeId,
};
use crate::learners::ErmRule;
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    OigLb,
    OigLbGeneral,
    MajorityLb,
    ErmUb,
    ObliviousUb,
    Coupon,
}

impl ExperimentId {
    pub fn parse(s: &str) -> Option<ExperimentId> {
        match s {
            "oig_lb" => Some(ExperimentId::OigLb),
            "oig_lb_general" => Some(ExperimentId::OigLbGeneral),
            "majority_lb" => Some(ExperimentId::MajorityLb),
            "erm_ub" => Some(ExperimentId::ErmUb),
            "oblivious_ub" => Some(ExperimentId::ObliviousUb),
            "coupon" => Some(ExperimentId::Coupon),
        _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentId::OigLb => "oig_lb",
            ExperimentId::OigLbGeneral => "oig_lb_general",
            ExperimentId::MajorityLb => "majority_lb",
            ExperimentId::ErmUb => "erm_ub",
            ExperimentId::ObliviousUb => "oblivious_ub",
            ExperimentId::Coupon => "coupon",
        }
    }
}

/// A fully resolved config: every default is materialized, so the manifest
/// can record the exact run parameters.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub trials: u64,
    pub ns: Vec<usize>,
    pub d: usize,
    pub c: f64,
    pub delta: f64,
    /// Corruption budget override where the experiment allows one.
    pub m: Option<usize>,
    /// Missing-set size for the generalized lower bound; defaults to
    /// ceil(sqrt(n)) per n.
    pub k: Option<usize>,
    pub copies: Option<usize>,
    pub scheme: SchemeId,
    pub erm: ErmRule,
    pub class: ErmUbClass,
    pub mode: ErmUbMode,
    pub min_mean: Option<f64>,
    pub max_mean: Option<f64>,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "seed",
    "trials",
    "n",
    "d",
    "c",
    "delta",
    "m",
    "k",
    "copies",
    "scheme",
    "erm",
    "class",
    "mode",
    "min_mean",
    "max_mean",
];

pub fn parse_config(text: &str) -> Result<ResolvedConfig> {
    let mut kv: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Malformed(format!("config line {}: expected key=value", lineno + 1))
        })?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Malformed(format!(
                "config line {}: unknown key `{key}`",
                lineno + 1
            )));
        }
        if kv.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::Malformed(format!(
                "config line {}: duplicate key `{key}`",
                lineno + 1
            )));
        }
    }
    let get = |k: &str| kv.get(k).map(String::as_str);
    let experiment = get("experiment")
        .ok_or_else(|| Error::Malformed("missing `experiment`".into()))
        .and_then(|s| {
            ExperimentId::parse(s)
                .ok_or_else(|| Error::Malformed(format!("unknown experiment `{s}`")))
        })?;
    let seed = parse_val::<u64>(get("seed"), "seed")?
        .ok_or_else(|| Error::Malformed("missing `seed` (seeds are mandatory)".into()))?;
    let ns: Vec<usize> = match get("n") {
        None => return Err(Error::Malformed("missing `n`".into())),
        Some(s) => s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Malformed(format!("bad n value `{p}`")))
            })
            .collect::<Result<_>>()?,
    };
    if ns.is_empty() {
        return Err(Error::Malformed("empty n list".into()));
    }
    let cfg = ResolvedConfig {
        experiment,
        seed,
        trials: parse_val(get("trials"), "trials")?.unwrap_or(1000),
        ns,
        d: parse_val(get("d"), "d")?.unwrap_or(1),
        c: parse_val(get("c"), "c")?.unwrap_or(4.0),
        delta: parse_val(get("delta"), "delta")?.unwrap_or(0.01),
        m: parse_val(get("m"), "m")?,
        k: parse_val(get("k"), "k")?,
        copies: parse_val(get("copies"), "copies")?,
        scheme: match get("scheme") {
            None => SchemeId::MajorityOfThree,
            Some(s) => SchemeId::parse(s)
                .ok_or_else(|| Error::Malformed(format!("unknown scheme `{s}`")))?,
        },
        erm: match get("erm") {
            None => ErmRule::Adversarial,
            Some("adversarial") => ErmRule::Adversarial,
            Some("first_consistent") => ErmRule::FirstConsistent,
            Some("random_consistent") => ErmRule::RandomConsistent,
            Some(s) => return Err(Error::Malformed(format!("unknown erm `{s}`"))),
        },
        class: match get("class") {
            None | Some("majority_lb") => ErmUbClass::Majority,
            Some("oig_lb") => ErmUbClass::Pairs,
            Some(s) => return Err(Error::Malformed(format!("unknown class `{s}`"))),
        },
        mode: match get("mode") {
            None | Some("worst_consistent") => ErmUbMode::WorstConsistent,
            Some("first") => ErmUbMode::First,
            Some("random") => ErmUbMode::Random,
            Some(s) => return Err(Error::Malformed(format!("unknown mode `{s}`"))),
        },
        min_mean: parse_val(get("min_mean"), "min_mean")?,
        max_mean: parse_val(get("max_mean"), "max_mean")?,
    };
    if cfg.trials < 1 {
        return Err(Error::InvalidParameters("trials must be >= 1".into()));
    }
    Ok(cfg)
}

fn parse_val<T: std::str::FromStr>(v: Option<&str>, key: &str) -> Result<Option<T>> {
    match v {
        None => Ok(None),
        Some(s) => s
            .parse::<T>()
            .map(Some)
            .map_err(|_| Error::Malformed(format!("bad value for `{key}`: `{s}`"))),
    }
}

impl ResolvedConfig {
    /// Fully explicit key=value rendering for the run manifest.
    pub fn resolved_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| writeln!(out, "{k}={v}").unwrap();
        put("experiment", self.experiment.name().into());
        put("seed", self.seed.to_string());
        put("trials", self.trials.to_string());
        put(
            "n",
            self.ns
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        put("d", self.d.to_string());
        put("c", self.c.to_string());
        put("delta", self.delta.to_string());
        put("m", opt_str(&self.m));
        put("k", opt_str(&self.k));
        put("copies", opt_str(&self.copies));
        put(
            "scheme",
            match self.scheme {
                SchemeId::MajorityOfThree => "majority_of_three",
                SchemeId::Bagging => "bagging",
                SchemeId::Hanneke => "hanneke",
            }
            .into(),
        );
        put("erm", self.erm.id().into());
        put(
            "class",
            match self.class {
                ErmUbClass::Majority => "majority_lb",
                ErmUbClass::Pairs => "oig_lb",
            }
            .into(),
        );
        put(
            "mode",
            match self.mode {
                ErmUbMode::WorstConsistent => "worst_consistent",
                ErmUbMode::First => "first",
                ErmUbMode::Random => "random",
            }
            .into(),
        );
        put("min_mean", opt_str(&self.min_mean));
        put("max_mean", opt_str(&self.max_mean));
        out
    }

    /// Runs the configured experiment at one sample size.
    pub fn run_at(&self, n: usize) -> Result<Report> {
        match self.experiment {
            ExperimentId::OigLb => exp_oig_lower_bound(n, self.trials, self.seed),
            ExperimentId::OigLbGeneral => {
                let k = self.k.unwrap_or((n as f64).sqrt().ceil() as usize);
                exp_oig_lower_bound_general(n, k, self.c, self.trials, self.seed)
            }
            ExperimentId::MajorityLb => exp_majority_lower_bound(&MajorityLbParams {
                n,
                d: self.d,
                c: self.c,
                copies: self.copies,
                scheme: self.scheme,
                erm: self.erm,
                delta: self.delta,
                trials: self.trials,
                seed: self.seed,
                m_override: self.m,
            }),
            ExperimentId::ErmUb => exp_erm_upper_bound(&ErmUbParams {
                n,
                d: self.d,
                c: self.c,
                class: self.class,
                mode: self.mode,
                delta: self.delta,
                trials: self.trials,
                seed: self.seed,
                m_override: self.m,
            }),
            ExperimentId::ObliviousUb => {
                let m = self.m.unwrap_or(n / 2);
                exp_oblivious_oig_upper_bound(n, m, self.trials, self.seed)
            }
            ExperimentId::Coupon => exp_coupon(n, self.d, self.c, self.trials, self.seed),
        }
    }

    /// Whether a report's mean satisfies the configured thresholds.
    pub fn thresholds_pass(&self, report: &Report) -> bool {
        let mean = report.estimate.mean;
        self.min_mean.is_none_or(|lo| mean >= lo) && self.max_mean.is_none_or(|hi| mean <= hi)
    }
}

fn opt_str<T: std::fmt::Display>(v: &Option<T>) -> String {
    match v {
        None => "none".to_string(),
        Some(x) => x.to_string(),
    }
}

/// Plain-text run manifest, written before any experiment executes.
pub struct RunManifest<'a> {
    pub config_path: &'a str,
    pub config: &'a ResolvedConfig,
    pub out_dir: &'a str,
    pub outputs: Vec<String>,
}

impl RunManifest<'_> {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "artifact_version {}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(out, "config_path {}", self.config_path).unwrap();
        writeln!(out, "out_dir {}", self.out_dir).unwrap();
        writeln!(out, "master_seed {}", self.config.seed).unwrap();
        for line in self.config.resolved_text().lines() {
            writeln!(out, "resolved {line}").unwrap();
        }
        for f in &self.outputs {
            writeln!(out, "output {f}").unwrap();
        }
        out
    }
}

/// Minimal line chart of mean error (with 99% CI whiskers) against n.
pub fn svg_error_vs_n(experiment: &str, points: &[(usize, f64, f64, f64)]) -> String {
    let (w, h, ml, mb) = (640.0, 400.0, 70.0, 50.0);
    let (pw, ph) = (w - ml - 30.0, h - mb - 30.0);
    let xmax = points.iter().map(|p| p.0).max().unwrap_or(1) as f64;
    let ymax = points
        .iter()
        .map(|p| p.3)
        .fold(f64::MIN, f64::max)
        .max(1e-9)
        * 1.1;
    let sx = |n: f64| ml + n / xmax * pw;
    let sy = |e: f64| 30.0 + ph - e / ymax * ph;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<rect width="{w}" height="{h}" fill="white"/><g stroke="black" fill="none">"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<line x1="{ml}" y1="30" x2="{ml}" y2="{}"/><line x1="{ml}" y1="{}" x2="{}" y2="{}"/>"#,
        30.0 + ph,
        30.0 + ph,
        ml + pw,
        30.0 + ph
    )
    .unwrap();
    let path: Vec<String> = points
        .iter()
        .map(|&(n, mean, _, _)| format!("{:.2},{:.2}", sx(n as f64), sy(mean)))
        .collect();
    writeln!(out, r#"<polyline stroke="blue" points="{}"/>"#, path.join(" ")).unwrap();
    for &(n, mean, lo, hi) in points {
        let x = sx(n as f64);
        writeln!(
            out,
            r#"<line stroke="blue" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/><circle cx="{x:.2}" cy="{:.2}" r="3" fill="blue"/>"#,
            sy(lo),
            sy(hi),
            sy(mean)
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();
    for &(n, mean, _, _) in points {
        writeln!(
            out,
            r#"<text x="{:.2}" y="{}" font-size="12" text-anchor="middle">{n}</text>"#,
            sx(n as f64),
            30.0 + ph + 18.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{mean:.4}</text>"#,
            sx(n as f64),
            sy(mean) - 8.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{experiment}: mean error vs n</text></svg>"#,
        ml + pw / 2.0
    )
    .unwrap();
    out
}
