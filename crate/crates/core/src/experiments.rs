//! Monte Carlo sweeps over SNR and their CSV output.
//!
//! Every trial draws a fresh Swerling-I RCS and fresh noise from its own
//! generator stream, derived from the seed and the trial index only. The same
//! streams are reused at every SNR (common random numbers), trials run in
//! parallel, and results are reduced in trial order, so tables are identical
//! for any thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::decomposition::{AlsOptions, Init};
use crate::error::{Error, Result};
use crate::estimator::{baseline_esprit, baseline_parafac_small, estimate_proposed, EstimationResult, Method};
use crate::frontend::{decimated_synthesis, direct_synthesis};
use crate::matching::min_cost_assignment;
use crate::scene::{build_mask, sample_scene, trial_rng, RadarConfig, SceneSpec, TargetScene};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    /// RMSE of DOD, DOA and combined versus SNR.
    Rmse,
    /// Probability of resolving two close targets versus SNR.
    Resolution,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Rmse => "rmse",
            ExperimentKind::Resolution => "resolution",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "rmse" => Ok(ExperimentKind::Rmse),
            "resolution" => Ok(ExperimentKind::Resolution),
            other => Err(Error::Config(format!("unknown experiment '{other}' (rmse or resolution)"))),
        }
    }
}

/// Scale preset for the radar and trial count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// 8×10 array, 80 pulses, 200 trials, SNR −20..20 dB in 5 dB steps.
    Paper,
    /// 4×4 array, 32 pulses, 50 trials, SNR −10..20 dB in 10 dB steps.
    Desk,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Paper => "paper",
            Preset::Desk => "desk",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::Config(format!("unknown preset '{other}' (paper or desk)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub preset: Preset,
    pub radar: RadarConfig<f64>,
    pub scene: SceneSpec<f64>,
    pub snr_grid: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub als: AlsOptions,
    pub output: Option<PathBuf>,
    /// Replace the SNR grid with a single noiseless point.
    pub noiseless: bool,
}

/// Keys accepted in a config file, in the order they are written back out.
pub const CONFIG_KEYS: &[&str] = &[
    "experiment",
    "preset",
    "m",
    "n",
    "q",
    "prf",
    "pulse_duration",
    "bandwidth",
    "dod_deg",
    "doa_deg",
    "doppler",
    "snr_db",
    "trials",
    "methods",
    "seed",
    "als_max_iters",
    "als_rel_tol",
    "als_restarts",
    "als_init",
    "output",
    "noiseless",
];

impl ExperimentConfig {
    /// Defaults for an experiment kind at a preset scale.
    pub fn preset(kind: ExperimentKind, preset: Preset) -> Self {
        let (radar, trials, snr_grid) = match preset {
            Preset::Paper => (
                RadarConfig::paper(),
                200,
                (0..9).map(|i| -20.0 + 5.0 * i as f64).collect(),
            ),
            Preset::Desk => (RadarConfig::desk(), 50, vec![-10.0, 0.0, 10.0, 20.0]),
        };
        let scene = match kind {
            ExperimentKind::Rmse => SceneSpec::separated(),
            ExperimentKind::Resolution => SceneSpec::closely_spaced(),
        };
        Self {
            kind,
            preset,
            radar,
            scene,
            snr_grid,
            trials,
            methods: Method::ALL.to_vec(),
            seed: 0,
            als: AlsOptions::default(),
            output: None,
            noiseless: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        self.scene.validate()?;
        self.als.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.snr_grid.is_empty() || self.snr_grid.iter().any(|s| s.is_nan()) {
            return Err(Error::Config("snr_db must be a non-empty list of numbers".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        if self.kind == ExperimentKind::Resolution && self.scene.k() != 2 {
            return Err(Error::Config(format!(
                "resolution experiments need exactly 2 targets, got {}",
                self.scene.k()
            )));
        }
        if let SceneSpec::Fixed { doppler, .. } = &self.scene {
            let limit = self.radar.max_normalized_doppler();
            if let Some(v) = doppler.iter().find(|v| !(v.abs() < limit)) {
                return Err(Error::Config(format!(
                    "normalized Doppler {v} is ambiguous for M = {} (limit ±{limit})",
                    self.radar.m
                )));
            }
        }
        Ok(())
    }

    /// SNR points actually simulated.
    pub fn effective_snr_grid(&self) -> Vec<f64> {
        if self.noiseless {
            vec![f64::INFINITY]
        } else {
            self.snr_grid.clone()
        }
    }

    /// Parses flat `key = value` lines. `#` starts a comment; lists are
    /// comma-separated. `experiment` and `preset` pick the defaults that the
    /// remaining keys override, wherever they appear in the file.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let key = key.trim().to_string();
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            if kv.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        let kind = kv
            .get("experiment")
            .map_or(Ok(ExperimentKind::Rmse), |s| ExperimentKind::parse(s))?;
        let preset = kv.get("preset").map_or(Ok(Preset::Paper), |s| Preset::parse(s))?;
        let mut cfg = Self::preset(kind, preset);
        cfg.apply(&kv)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_kv_str(&text)
    }

    fn apply(&mut self, kv: &BTreeMap<String, String>) -> Result<()> {
        let get = |k: &str| kv.get(k).map(String::as_str);
        let mut radar = (
            self.radar.m,
            self.radar.n,
            self.radar.q,
            self.radar.prf,
            self.radar.pulse_duration,
            self.radar.bandwidth,
        );
        if let Some(v) = get("m") {
            radar.0 = parse_num("m", v)?;
        }
        if let Some(v) = get("n") {
            radar.1 = parse_num("n", v)?;
        }
        if let Some(v) = get("q") {
            radar.2 = parse_num("q", v)?;
        }
        if let Some(v) = get("prf") {
            radar.3 = parse_num("prf", v)?;
        }
        if let Some(v) = get("pulse_duration") {
            radar.4 = parse_num("pulse_duration", v)?;
        }
        if let Some(v) = get("bandwidth") {
            radar.5 = parse_num("bandwidth", v)?;
        }
        self.radar = RadarConfig::new(radar.0, radar.1, radar.2, radar.3, radar.4, radar.5)?;

        let scene_keys = ["dod_deg", "doa_deg", "doppler"];
        if scene_keys.iter().any(|k| kv.contains_key(*k)) {
            let (dod, doa, doppler) = match &self.scene {
                SceneSpec::Fixed { dod, doa, doppler } => (
                    dod.iter().map(|x| x.to_degrees()).collect(),
                    doa.iter().map(|x| x.to_degrees()).collect(),
                    doppler.clone(),
                ),
                SceneSpec::Uniform { .. } => (Vec::new(), Vec::new(), Vec::new()),
            };
            let list = |k: &str, default: Vec<f64>| get(k).map_or(Ok(default), |v| parse_list::<f64>(k, v));
            let dod = list("dod_deg", dod)?;
            let doa = list("doa_deg", doa)?;
            let doppler = list("doppler", doppler)?;
            if dod.len() != doa.len() || dod.len() != doppler.len() {
                return Err(Error::Config(format!(
                    "dod_deg, doa_deg and doppler need equal lengths ({}, {}, {})",
                    dod.len(),
                    doa.len(),
                    doppler.len()
                )));
            }
            self.scene = SceneSpec::fixed_degrees(&dod, &doa, &doppler);
        }
        if let Some(v) = get("snr_db") {
            self.snr_grid = parse_list("snr_db", v)?;
        }
        if let Some(v) = get("trials") {
            self.trials = parse_num("trials", v)?;
        }
        if let Some(v) = get("methods") {
            self.methods = parse_methods(v)?;
        }
        if let Some(v) = get("seed") {
            self.seed = parse_num("seed", v)?;
        }
        if let Some(v) = get("als_max_iters") {
            self.als.max_iters = parse_num("als_max_iters", v)?;
        }
        if let Some(v) = get("als_rel_tol") {
            self.als.rel_tol = parse_num("als_rel_tol", v)?;
        }
        if let Some(v) = get("als_restarts") {
            self.als.restarts = parse_num("als_restarts", v)?;
        }
        if let Some(v) = get("als_init") {
            self.als.init = match v {
                "random" => Init::Random,
                "svd" => Init::Svd,
                other => return Err(Error::Config(format!("als_init '{other}' (random or svd)"))),
            };
        }
        if let Some(v) = get("output") {
            self.output = Some(PathBuf::from(v));
        }
        if let Some(v) = get("noiseless") {
            self.noiseless = parse_num("noiseless", v)?;
        }
        Ok(())
    }

    /// The resolved config as `key = value` lines, re-parseable by
    /// [`ExperimentConfig::from_kv_str`].
    pub fn to_kv_string(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("experiment", self.kind.name().into());
        put("preset", self.preset.name().into());
        put("m", self.radar.m.to_string());
        put("n", self.radar.n.to_string());
        put("q", self.radar.q.to_string());
        put("prf", self.radar.prf.to_string());
        put("pulse_duration", self.radar.pulse_duration.to_string());
        put("bandwidth", self.radar.bandwidth.to_string());
        if let SceneSpec::Fixed { dod, doa, doppler } = &self.scene {
            let deg = |v: &[f64]| v.iter().map(|x| x.to_degrees()).collect::<Vec<_>>();
            put("dod_deg", join(&deg(dod)));
            put("doa_deg", join(&deg(doa)));
            put("doppler", join(doppler));
        }
        put("snr_db", join(&self.snr_grid));
        put("trials", self.trials.to_string());
        put(
            "methods",
            self.methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(", "),
        );
        put("seed", self.seed.to_string());
        put("als_max_iters", self.als.max_iters.to_string());
        put("als_rel_tol", self.als.rel_tol.to_string());
        put("als_restarts", self.als.restarts.to_string());
        put(
            "als_init",
            match self.als.init {
                Init::Random => "random".into(),
                Init::Svd => "svd".into(),
            },
        );
        if let Some(p) = &self.output {
            put("output", p.display().to_string());
        }
        put("noiseless", self.noiseless.to_string());
        out
    }
}

fn parse_num<V: std::str::FromStr>(key: &str, v: &str) -> Result<V> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn parse_list<V: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<V>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

/// Comma-separated method names, deduplicated in first-seen order.
pub fn parse_methods(v: &str) -> Result<Vec<Method>> {
    let mut out: Vec<Method> = Vec::new();
    for name in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m: Method = name.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

/// One `(method, snr, metric)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub snr_db: f64,
    pub metric: &'static str,
    pub value: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    /// Resolved configuration, written next to the CSV.
    pub metadata: String,
}

impl ResultTable {
    /// Sorts rows by method, then SNR; metric order within a cell is kept.
    pub fn sort(&mut self) {
        self.rows
            .sort_by(|a, b| a.method.cmp(&b.method).then(a.snr_db.total_cmp(&b.snr_db)));
    }

    pub fn value(&self, method: Method, snr_db: f64, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.snr_db == snr_db && r.metric == metric)
            .map(|r| r.value)
    }

    /// The table as CSV text.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,snr_db,metric,value,trials,seed\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.method,
                format_g9(r.snr_db),
                r.metric,
                format_g9(r.value),
                r.trials,
                r.seed
            );
        }
        out
    }
}

/// `printf("%.9g")`: 9 significant digits, trailing zeros dropped, exponent
/// form below 1e−4 or from 1e9.
pub fn format_g9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..9).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        let decimals = (8 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    }
}

/// Writes the CSV to `path` and the resolved config to `path` + `.meta`.
pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    let io = |p: &Path, e: std::io::Error| Error::Io {
        path: p.display().to_string(),
        detail: e.to_string(),
    };
    fs::write(path, table.to_csv()).map_err(|e| io(path, e))?;
    let meta = metadata_path(path);
    fs::write(&meta, &table.metadata).map_err(|e| io(&meta, e))?;
    Ok(())
}

pub fn metadata_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Per-trial outcome of one method at one SNR.
#[derive(Clone, Debug, PartialEq)]
enum Outcome {
    /// Matched squared errors (deg²) per target: `(dod, doa)`.
    Errors(Vec<(f64, f64)>),
    Failed,
}

/// Generator streams per trial: scene, full-tensor noise, decimated-tensor noise.
const STREAMS_PER_TRIAL: u64 = 3;

/// Runs `method` on one trial's data.
pub fn run_method(
    method: Method,
    scene: &TargetScene<f64>,
    cfg: &ExperimentConfig,
    snr_db: f64,
    trial: u64,
) -> Result<EstimationResult<f64>> {
    let k = scene.k();
    let als = AlsOptions {
        seed: cfg.als.seed ^ cfg.seed.rotate_left(17) ^ trial,
        ..cfg.als.clone()
    };
    let base = trial * STREAMS_PER_TRIAL;
    match method {
        Method::Proposed => {
            let y = direct_synthesis(scene, &cfg.radar, snr_db, &mut trial_rng(cfg.seed, base + 1))?;
            estimate_proposed(&y, &build_mask(&cfg.radar), k, &als)
        }
        Method::ParafacSmall | Method::Esprit => {
            let y = decimated_synthesis(scene, &cfg.radar, snr_db, &mut trial_rng(cfg.seed, base + 2))?;
            if method == Method::Esprit {
                baseline_esprit(&y, k)
            } else {
                baseline_parafac_small(&y, k, &als)
            }
        }
    }
}

/// Squared errors after the minimum-total-squared-error assignment of
/// estimates to truth, in degrees².
pub fn matched_squared_errors(truth: &[(f64, f64)], estimate: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let cost: Vec<Vec<f64>> = truth
        .iter()
        .map(|t| {
            estimate
                .iter()
                .map(|e| (e.0 - t.0).powi(2) + (e.1 - t.1).powi(2))
                .collect()
        })
        .collect();
    let perm = min_cost_assignment(&cost);
    truth
        .iter()
        .zip(perm)
        .map(|(t, p)| ((estimate[p].0 - t.0).powi(2), (estimate[p].1 - t.1).powi(2)))
        .collect()
}

fn truth_deg(scene: &TargetScene<f64>) -> Vec<(f64, f64)> {
    scene
        .targets
        .iter()
        .map(|t| (t.dod.to_degrees(), t.doa.to_degrees()))
        .collect()
}

/// One trial's outcomes `[snr][method]` and its true pairs in degrees.
type TrialOutcome = (Vec<Vec<Outcome>>, Vec<(f64, f64)>);

/// Outcomes indexed `[trial][snr][method]` and the true pairs per trial.
type Sweep = (Vec<Vec<Vec<Outcome>>>, Vec<Vec<(f64, f64)>>);

fn simulate(cfg: &ExperimentConfig) -> Result<Sweep> {
    cfg.validate()?;
    let grid = cfg.effective_snr_grid();
    let per_trial: Vec<Result<TrialOutcome>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let scene = sample_scene(&cfg.scene, &mut trial_rng(cfg.seed, trial * STREAMS_PER_TRIAL))?;
            let truth = truth_deg(&scene);
            let cells = grid
                .iter()
                .map(|&snr| {
                    cfg.methods
                        .iter()
                        .map(|&m| match run_method(m, &scene, cfg, snr, trial) {
                            Ok(res) if res.k() == truth.len() => {
                                Outcome::Errors(matched_squared_errors(&truth, &res.pairs_deg()))
                            }
                            _ => Outcome::Failed,
                        })
                        .collect()
                })
                .collect();
            Ok((cells, truth))
        })
        .collect();
    let mut outcomes = Vec::with_capacity(cfg.trials);
    let mut truths = Vec::with_capacity(cfg.trials);
    for r in per_trial {
        let (o, t) = r?;
        outcomes.push(o);
        truths.push(t);
    }
    Ok((outcomes, truths))
}

fn row(cfg: &ExperimentConfig, method: Method, snr_db: f64, metric: &'static str, value: f64) -> ResultRow {
    ResultRow {
        method,
        snr_db,
        metric,
        value,
        trials: cfg.trials,
        seed: cfg.seed,
    }
}

/// RMSE of DOD and DOA (degrees) per method and SNR, plus their combination
/// `sqrt((RMSE_φ² + RMSE_θ²)/2)` and the failed-trial count.
pub fn run_rmse_sweep(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let (outcomes, _) = simulate(cfg)?;
    let grid = cfg.effective_snr_grid();
    let mut table = ResultTable {
        rows: Vec::new(),
        metadata: cfg.to_kv_string(),
    };
    for (s, &snr) in grid.iter().enumerate() {
        for (mi, &method) in cfg.methods.iter().enumerate() {
            let (mut sum_dod, mut sum_doa, mut count, mut failures) = (0.0, 0.0, 0usize, 0usize);
            for trial in &outcomes {
                match &trial[s][mi] {
                    Outcome::Errors(errs) => {
                        for &(e_dod, e_doa) in errs {
                            sum_dod += e_dod;
                            sum_doa += e_doa;
                            count += 1;
                        }
                    }
                    Outcome::Failed => failures += 1,
                }
            }
            let (rmse_dod, rmse_doa) = if count > 0 {
                ((sum_dod / count as f64).sqrt(), (sum_doa / count as f64).sqrt())
            } else {
                (f64::NAN, f64::NAN)
            };
            let combined = ((rmse_dod * rmse_dod + rmse_doa * rmse_doa) / 2.0).sqrt();
            table.rows.push(row(cfg, method, snr, "rmse_dod_deg", rmse_dod));
            table.rows.push(row(cfg, method, snr, "rmse_doa_deg", rmse_doa));
            table.rows.push(row(cfg, method, snr, "rmse_deg", combined));
            table.rows.push(row(cfg, method, snr, "failures", failures as f64));
        }
    }
    table.sort();
    Ok(table)
}

/// Fraction of trials in which both targets are resolved: after matching,
/// every DOD error is at most half the DOD separation and every DOA error at
/// most half the DOA separation. Failed trials count as unresolved.
pub fn run_resolution_sweep(cfg: &ExperimentConfig) -> Result<ResultTable> {
    if cfg.scene.k() != 2 {
        return Err(Error::Config("resolution needs a two-target scene".into()));
    }
    let (outcomes, truths) = simulate(cfg)?;
    let grid = cfg.effective_snr_grid();
    let mut table = ResultTable {
        rows: Vec::new(),
        metadata: cfg.to_kv_string(),
    };
    for (s, &snr) in grid.iter().enumerate() {
        for (mi, &method) in cfg.methods.iter().enumerate() {
            let (mut resolved, mut failures) = (0usize, 0usize);
            for (trial, truth) in outcomes.iter().zip(&truths) {
                match &trial[s][mi] {
                    Outcome::Errors(errs) => {
                        let half_dod = (truth[0].0 - truth[1].0).abs() / 2.0;
                        let half_doa = (truth[0].1 - truth[1].1).abs() / 2.0;
                        if errs
                            .iter()
                            .all(|&(e_dod, e_doa)| e_dod.sqrt() <= half_dod && e_doa.sqrt() <= half_doa)
                        {
                            resolved += 1;
                        }
                    }
                    Outcome::Failed => failures += 1,
                }
            }
            table
                .rows
                .push(row(cfg, method, snr, "prob_resolution", resolved as f64 / cfg.trials as f64));
            table.rows.push(row(cfg, method, snr, "failures", failures as f64));
        }
    }
    table.sort();
    Ok(table)
}

/// Runs the sweep selected by `cfg.kind`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    match cfg.kind {
        ExperimentKind::Rmse => run_rmse_sweep(cfg),
        ExperimentKind::Resolution => run_resolution_sweep(cfg),
    }
}

/// Worker count: the explicit request, else `STMIMO_THREADS`, else rayon's default.
pub fn resolve_threads(requested: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = requested {
        return if n == 0 {
            Err(Error::Config("threads must be at least 1".into()))
        } else {
            Ok(Some(n))
        };
    }
    match std::env::var("STMIMO_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            let n: usize = parse_num("STMIMO_THREADS", &v)?;
            if n == 0 {
                Err(Error::Config("STMIMO_THREADS must be at least 1".into()))
            } else {
                Ok(Some(n))
            }
        }
        _ => Ok(None),
    }
}

/// Runs `f` on a pool of `threads` workers (rayon's global pool for `None`).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            trials: 3,
            snr_grid: vec![10.0, 30.0],
            ..ExperimentConfig::preset(kind, Preset::Desk)
        }
    }

    #[test]
    fn g9_formatting() {
        assert_eq!(format_g9(0.0), "0");
        assert_eq!(format_g9(1.0), "1");
        assert_eq!(format_g9(-10.0), "-10");
        assert_eq!(format_g9(0.1), "0.1");
        assert_eq!(format_g9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_g9(123456789.0), "123456789");
        assert_eq!(format_g9(1234567890.0), "1.23456789e+09");
        assert_eq!(format_g9(0.0001), "0.0001");
        assert_eq!(format_g9(0.00001234), "1.234e-05");
        assert_eq!(format_g9(2.5e-300), "2.5e-300");
        assert_eq!(format_g9(f64::INFINITY), "inf");
        assert_eq!(format_g9(f64::NAN), "nan");
        assert_eq!(format_g9(99999999.95), "100000000");
    }

    #[test]
    fn kv_round_trip() {
        let text = "experiment = resolution\npreset = desk\nseed = 7\nsnr_db = -5, 5 # comment\nmethods = esprit, proposed\nals_init = svd\n";
        let cfg = ExperimentConfig::from_kv_str(text).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Resolution);
        assert_eq!(cfg.radar.m, 4);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.snr_grid, vec![-5.0, 5.0]);
        assert_eq!(cfg.methods, vec![Method::Esprit, Method::Proposed]);
        assert_eq!(cfg.als.init, Init::Svd);
        let again = ExperimentConfig::from_kv_str(&cfg.to_kv_string()).unwrap();
        assert_eq!(again.to_kv_string(), cfg.to_kv_string());
        assert_eq!(again.kind, cfg.kind);
        assert_eq!(again.snr_grid, cfg.snr_grid);
    }

    #[test]
    fn kv_errors() {
        for bad in [
            "colour = blue",
            "trials = many",
            "trials = 0",
            "seed = 1\nseed = 2",
            "methods = music",
            "experiment = resolution\ndod_deg = 1, 2, 3\ndoa_deg = 1, 2, 3\ndoppler = 0, 0, 0",
            "dod_deg = 1\ndoa_deg = 1, 2",
            "preset = desk\ndoppler = 0.2, 0.0",
            "no equals sign",
        ] {
            assert!(
                matches!(ExperimentConfig::from_kv_str(bad), Err(Error::Config(_)) | Err(Error::Scene(_))),
                "{bad:?} accepted"
            );
        }
    }

    #[test]
    fn noiseless_proposed_is_exact() {
        let cfg = ExperimentConfig {
            noiseless: true,
            methods: vec![Method::Proposed],
            ..tiny(ExperimentKind::Rmse)
        };
        let t = run_rmse_sweep(&cfg).unwrap();
        assert!(t.value(Method::Proposed, f64::INFINITY, "rmse_deg").unwrap() <= 1e-3);
        assert_eq!(t.value(Method::Proposed, f64::INFINITY, "failures"), Some(0.0));
    }

    #[test]
    fn noiseless_resolution_is_certain() {
        let cfg = ExperimentConfig {
            noiseless: true,
            ..tiny(ExperimentKind::Resolution)
        };
        let t = run_resolution_sweep(&cfg).unwrap();
        for m in Method::ALL {
            assert_eq!(t.value(m, f64::INFINITY, "prob_resolution"), Some(1.0), "{m}");
        }
    }

    #[test]
    fn sweep_is_deterministic_and_thread_independent() {
        let cfg = tiny(ExperimentKind::Rmse);
        let a = with_threads(Some(1), || run_rmse_sweep(&cfg)).unwrap().unwrap();
        let b = with_threads(Some(3), || run_rmse_sweep(&cfg)).unwrap().unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.rows.len(), 3 * 2 * 4);
        let methods: Vec<Method> = a.rows.iter().map(|r| r.method).collect();
        let mut sorted = methods.clone();
        sorted.sort();
        assert_eq!(methods, sorted);
    }

    #[test]
    fn csv_shapes() {
        let empty = ResultTable::default();
        assert_eq!(empty.to_csv(), "method,snr_db,metric,value,trials,seed\n");
        let mut t = ResultTable::default();
        for m in [Method::Esprit, Method::Proposed] {
            for snr in [10.0, -10.0, 0.0] {
                t.rows.push(ResultRow {
                    method: m,
                    snr_db: snr,
                    metric: "rmse_deg",
                    value: 0.5,
                    trials: 5,
                    seed: 1,
                });
            }
        }
        t.sort();
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 7);
        assert_eq!(csv.lines().nth(1), Some("proposed,-10,rmse_deg,0.5,5,1"));
    }

    #[test]
    fn matching_fixes_permutation() {
        let truth = [(20.0, 15.0), (21.0, 16.0)];
        let est = [(21.1, 16.0), (20.0, 14.9)];
        let e = matched_squared_errors(&truth, &est);
        assert!((e[0].0 - 0.0).abs() < 1e-12 && (e[0].1 - 0.01).abs() < 1e-9);
        assert!((e[1].0 - 0.01).abs() < 1e-9);
    }

    #[test]
    fn thread_resolution() {
        assert_eq!(resolve_threads(Some(2)).unwrap(), Some(2));
        assert!(resolve_threads(Some(0)).is_err());
    }
}
