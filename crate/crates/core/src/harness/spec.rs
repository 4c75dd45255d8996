use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ddcp::{DensityLaw, InitialLaw};
use crate::error::{Error, Result};
use crate::lattice::{Geometry, Model, QParameterization, RateSet};
use crate::oracle::MAX_SITES;

pub const SPEC_SCHEMA_VERSION: u32 = 1;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Stationary,
    Tails,
    Crossings,
    Scan,
    DdcpTrajectory,
    DdcpStationary,
    CoupleCheck,
    OracleCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Stationary => "stationary",
            Experiment::Tails => "tails",
            Experiment::Crossings => "crossings",
            Experiment::Scan => "scan",
            Experiment::DdcpTrajectory => "ddcp_trajectory",
            Experiment::DdcpStationary => "ddcp_stationary",
            Experiment::CoupleCheck => "couple_check",
            Experiment::OracleCheck => "oracle_check",
        }
    }
}

/// Reference rates and the `q` values to visit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QSpec {
    pub base: RateSet,
    pub q_grid: Vec<f64>,
}

impl QSpec {
    pub fn parameterization(&self) -> Result<QParameterization> {
        QParameterization::new(&self.base)
    }
}

/// Experiment-specific settings; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub batches: usize,
    pub n_grid: Vec<usize>,
    pub all_origins: bool,
    pub n_list: Vec<usize>,
    pub eps_hat: f64,
    pub lambda_grid: Vec<f64>,
    pub h_max: f64,
    pub bisection_tol: f64,
    pub dt_grid: f64,
    pub tol: f64,
    pub max_sweeps: usize,
    pub initial_window: usize,
    pub initial: InitialLaw,
    pub starts: Vec<(f64, f64)>,
    pub damping: f64,
    pub max_iters: usize,
    pub q_pairs: Vec<(f64, f64)>,
    pub oracle_times: Vec<f64>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            batches: 50,
            n_grid: vec![1, 2, 4, 8, 16, 32, 64],
            all_origins: false,
            n_list: vec![4, 8],
            eps_hat: 0.05,
            lambda_grid: Vec::new(),
            h_max: 4.0,
            bisection_tol: 0.05,
            dt_grid: 1.0,
            tol: 1e-3,
            max_sweeps: 20,
            initial_window: 8,
            initial: InitialLaw::all_occupied(),
            starts: Vec::new(),
            damping: 0.5,
            max_iters: 100,
            q_pairs: Vec::new(),
            oracle_times: vec![0.5, 1.0, 2.0, 4.0, 8.0],
        }
    }
}

/// Output directory and file names relative to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub dir: PathBuf,
    pub csv: Option<String>,
    pub json: Option<String>,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            dir: PathBuf::from("out"),
            csv: None,
            json: None,
        }
    }
}

/// One experiment, read from a single JSON document.
///
/// `horizon` is the model time of each replica including `burn_in`;
/// snapshots are taken every `sample_dt` after burn-in. Replica `i` draws
/// from `rng::derive(master_seed, i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "spec_schema")]
    pub schema_version: u32,
    pub model: Model,
    pub experiment: Experiment,
    #[serde(default)]
    pub rates: Option<RateSet>,
    #[serde(default)]
    pub q_parameterization: Option<QSpec>,
    #[serde(default)]
    pub law: Option<DensityLaw>,
    pub geometry: Geometry,
    #[serde(default = "one")]
    pub replicas: usize,
    #[serde(default)]
    pub burn_in: f64,
    pub horizon: f64,
    #[serde(default = "unit")]
    pub sample_dt: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub options: Options,
    #[serde(default)]
    pub outputs: Outputs,
}

fn spec_schema() -> u32 {
    SPEC_SCHEMA_VERSION
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

/// Problems found by [`ExperimentSpec::validate`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn into_result(self) -> Result<Vec<String>> {
        if self.is_valid() {
            Ok(self.warnings)
        } else {
            Err(Error::InvalidSpec(self.errors.join("; ")))
        }
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The spec with output locations reset, which is what outputs embed
    /// and hash.
    pub fn provenance(&self) -> ExperimentSpec {
        ExperimentSpec {
            outputs: Outputs::default(),
            ..self.clone()
        }
    }

    /// SHA-256 of the compact JSON serialization of [`Self::provenance`],
    /// hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.provenance()).expect("spec serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_output_dir(mut self, dir: PathBuf) -> Self {
        self.outputs.dir = dir;
        self
    }

    pub fn csv_name(&self) -> String {
        self.outputs
            .csv
            .clone()
            .unwrap_or_else(|| format!("{}.csv", self.experiment.name()))
    }

    pub fn json_name(&self) -> String {
        self.outputs
            .json
            .clone()
            .unwrap_or_else(|| format!("{}.json", self.experiment.name()))
    }

    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        let mut err = |m: String| r.errors.push(m);
        if self.schema_version != SPEC_SCHEMA_VERSION {
            err(format!("schema_version {} is not supported", self.schema_version));
        }
        if self.replicas == 0 {
            err("replicas must be >= 1".into());
        }
        if !(self.burn_in >= 0.0 && self.burn_in.is_finite()) {
            err(format!("burn_in = {} must be finite and >= 0", self.burn_in));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            err(format!("horizon = {} must be finite and > 0", self.horizon));
        }
        if !(self.sample_dt > 0.0) {
            err(format!("sample_dt = {} must be > 0", self.sample_dt));
        }
        for name in [self.csv_name(), self.json_name()] {
            if name.is_empty() || name.contains(['/', '\\']) {
                err(format!("output name {name:?} must be a plain file name"));
            }
        }
        let mut warnings = Vec::new();
        self.check_sources(&mut r.errors, &mut warnings);
        self.check_experiment(&mut r.errors, &mut warnings);
        r.warnings.extend(warnings);
        r
    }

    fn check_rates(&self, rates: &RateSet, what: &str, errors: &mut Vec<String>, warnings: &mut Vec<String>) {
        if rates.model != self.model {
            errors.push(format!("{what} are for model {:?}, spec says {:?}", rates.model, self.model));
        }
        if let Err(e) = rates.validate() {
            errors.push(format!("{what}: {e}"));
        } else if !rates.all_positive() {
            warnings.push(format!("{what} are not all positive; irreducibility and convergence are not guaranteed"));
        }
    }

    fn check_sources(&self, errors: &mut Vec<String>, warnings: &mut Vec<String>) {
        if let Some(rates) = &self.rates {
            self.check_rates(rates, "rates", errors, warnings);
        }
        if let Some(q) = &self.q_parameterization {
            if q.base.model != self.model {
                errors.push(format!("q base is for model {:?}, spec says {:?}", q.base.model, self.model));
            }
            if let Err(e) = q.parameterization() {
                errors.push(format!("q_parameterization: {e}"));
            }
            if q.q_grid.is_empty() {
                errors.push("q_grid is empty".into());
            }
            if q.q_grid.iter().any(|v| !(0.0..=1.0).contains(v)) {
                errors.push("q_grid values must lie in [0, 1]".into());
            }
            if q.q_grid.windows(2).any(|w| w[0] >= w[1]) {
                errors.push("q_grid must be increasing".into());
            }
        }
        if let Some(law) = &self.law {
            if let Err(e) = law.validate() {
                errors.push(format!("law: {e}"));
            }
        }
    }

    fn need_rates(&self, errors: &mut Vec<String>) {
        if self.rates.is_none() {
            errors.push(format!("{} needs rates", self.experiment.name()));
        }
    }

    fn check_experiment(&self, errors: &mut Vec<String>, warnings: &mut Vec<String>) {
        let o = &self.options;
        let sampled_after = self.horizon - self.burn_in;
        match self.experiment {
            Experiment::Stationary => {
                self.need_rates(errors);
                if !(self.burn_in > 0.0 && sampled_after > 0.0) {
                    errors.push("stationary needs 0 < burn_in < horizon".into());
                }
                if o.batches < 2 {
                    errors.push("batches must be >= 2".into());
                }
            }
            Experiment::Tails | Experiment::Crossings => {
                self.need_rates(errors);
                if sampled_after < 0.0 {
                    errors.push("burn_in exceeds horizon".into());
                }
                if self.experiment == Experiment::Tails
                    && (o.n_grid.is_empty() || o.n_grid.windows(2).any(|w| w[0] >= w[1]))
                {
                    errors.push("n_grid must be nonempty and increasing".into());
                }
                if self.experiment == Experiment::Crossings {
                    self.check_n_list(errors);
                }
            }
            Experiment::Scan => {
                if sampled_after < 0.0 {
                    errors.push("burn_in exceeds horizon".into());
                }
                self.check_n_list(errors);
                if self.q_parameterization.is_none() {
                    self.need_rates(errors);
                    if o.lambda_grid.len() < 2 || o.lambda_grid.windows(2).any(|w| w[0] >= w[1]) {
                        errors.push("an h_perc scan needs an increasing lambda_grid of length >= 2".into());
                    }
                    if !(o.h_max > 0.0 && o.bisection_tol > 0.0) {
                        errors.push("h_max and bisection_tol must be > 0".into());
                    }
                    if o.n_list.len() > 1 {
                        warnings.push("an h_perc scan uses only the first entry of n_list".into());
                    }
                }
            }
            Experiment::DdcpTrajectory | Experiment::DdcpStationary => {
                self.need_rates(errors);
                if self.law.is_none() {
                    errors.push(format!("{} needs a law", self.experiment.name()));
                }
                if !(o.tol > 0.0) {
                    errors.push("tol must be > 0".into());
                }
                if self.experiment == Experiment::DdcpTrajectory {
                    if !(o.dt_grid > 0.0) || o.initial_window == 0 || o.max_sweeps == 0 {
                        errors.push("dt_grid, initial_window and max_sweeps must be positive".into());
                    }
                    if let Err(e) = o.initial.validate() {
                        errors.push(e.to_string());
                    }
                } else {
                    if !(self.burn_in > 0.0 && sampled_after > 0.0) {
                        errors.push("ddcp_stationary needs 0 < burn_in < horizon".into());
                    }
                    if !(o.damping > 0.0 && o.damping <= 1.0) {
                        errors.push("damping must lie in (0, 1]".into());
                    }
                }
            }
            Experiment::CoupleCheck => match &self.q_parameterization {
                None => errors.push("couple_check needs q_parameterization".into()),
                Some(q) => {
                    let pairs = self.q_pairs();
                    if pairs.is_empty() && q.q_grid.len() < 2 {
                        errors.push("couple_check needs q_pairs or a q_grid with 2 values".into());
                    }
                    if pairs.iter().any(|&(a, b)| !(0.0 <= a && a <= b && b <= 1.0)) {
                        errors.push("q_pairs need 0 <= q_low <= q_high <= 1".into());
                    }
                }
            },
            Experiment::OracleCheck => {
                self.need_rates(errors);
                if self.geometry.site_count() > MAX_SITES {
                    errors.push(format!(
                        "oracle_check is limited to {MAX_SITES} sites, geometry has {}",
                        self.geometry.site_count()
                    ));
                }
                if o.oracle_times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                    errors.push("oracle_times must be finite and >= 0".into());
                }
            }
        }
    }

    fn check_n_list(&self, errors: &mut Vec<String>) {
        let o = &self.options;
        if o.n_list.is_empty() || o.n_list.contains(&0) {
            errors.push("n_list must be nonempty with n >= 1".into());
        }
        if !(o.eps_hat > 0.0 && o.eps_hat < 1.0) {
            errors.push("eps_hat must lie in (0, 1)".into());
        }
        let (w, h) = (self.geometry.width(), self.geometry.height());
        if let Some(&n) = o.n_list.iter().max() {
            if 3 * n + 1 > w || n + 1 > h {
                errors.push(format!("a 3n x n window with n = {n} does not fit a {w}x{h} lattice"));
            }
        }
    }

    /// Pairs to couple: `options.q_pairs`, or consecutive `q_grid` values.
    pub fn q_pairs(&self) -> Vec<(f64, f64)> {
        if !self.options.q_pairs.is_empty() {
            return self.options.q_pairs.clone();
        }
        self.q_parameterization
            .as_ref()
            .map(|q| q.q_grid.windows(2).map(|w| (w[0], w[1])).collect())
            .unwrap_or_default()
    }

    /// Snapshot times `burn_in, burn_in + sample_dt, ...` up to `horizon`.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0u64;
        loop {
            let t = self.burn_in + k as f64 * self.sample_dt;
            if t > self.horizon * (1.0 + 1e-12) {
                break;
            }
            out.push(t);
            k += 1;
        }
        out
    }
}
