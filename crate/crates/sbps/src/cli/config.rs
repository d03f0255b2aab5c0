use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Bps,
    Sbps,
    Psbps,
    Lipsbps,
    Sgld,
    Msgnht,
}

impl SamplerKind {
    pub fn label(self) -> &'static str {
        match self {
            SamplerKind::Bps => "bps",
            SamplerKind::Sbps => "sbps",
            SamplerKind::Psbps => "psbps",
            SamplerKind::Lipsbps => "lipsbps",
            SamplerKind::Sgld => "sgld",
            SamplerKind::Msgnht => "msgnht",
        }
    }

    fn parse(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "bps" => SamplerKind::Bps,
            "sbps" => SamplerKind::Sbps,
            "psbps" => SamplerKind::Psbps,
            "lipsbps" => SamplerKind::Lipsbps,
            "sgld" => SamplerKind::Sgld,
            "msgnht" => SamplerKind::Msgnht,
            other => {
                return Err(CliError::Validation(format!(
                    "unknown sampler '{other}' (expected bps|sbps|psbps|lipsbps|sgld|msgnht)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Gaussian,
    Logistic,
    Hyperboloid,
    Multimodal,
}

impl TargetKind {
    pub fn label(self) -> &'static str {
        match self {
            TargetKind::Gaussian => "gaussian",
            TargetKind::Logistic => "logistic",
            TargetKind::Hyperboloid => "hyperboloid",
            TargetKind::Multimodal => "multimodal",
        }
    }

    fn parse(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "gaussian" => TargetKind::Gaussian,
            "logistic" => TargetKind::Logistic,
            "hyperboloid" => TargetKind::Hyperboloid,
            "multimodal" => TargetKind::Multimodal,
            other => {
                return Err(CliError::Validation(format!(
                    "unknown target '{other}' (expected gaussian|logistic|hyperboloid|multimodal)"
                )))
            }
        })
    }
}

/// Full description of one run; the summary JSON echoes it so any run can be
/// reproduced bit-exactly from its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub sampler: SamplerKind,
    pub target: TargetKind,
    /// Sampler seed (velocity, batch and event streams derive from it).
    pub seed: u64,
    /// Dataset generation seed, separate so the same data can be sampled
    /// with many chains.
    pub data_seed: u64,
    pub out_dir: PathBuf,

    // target shape
    pub dim: usize,
    pub n_data: usize,
    /// Logistic prior variance per component.
    pub prior_var: f64,
    /// Gaussian target: per-coordinate variances (comma list; broadcast to
    /// `dim` ones when empty).
    pub variances: Vec<f64>,
    /// Gaussian target: injected gradient noise standard deviation.
    pub noise_sd: f64,
    /// Multimodal target: mixture component scale and center jitter.
    pub sigma_l: f64,
    pub sigma_mu: f64,

    // sampler knobs
    pub batch_size: usize,
    pub band_multiple: f64,
    pub refresh_rate: f64,
    pub grid_dt: f64,
    pub aux_p_max: usize,
    pub epochs: f64,
    pub hyper_lr: f64,
    /// Event budget for the exact sampler.
    pub max_events: u64,
    /// Dominator pad (noise standard deviations) for injected-noise runs.
    pub noise_pad_z: f64,
    /// Step size and step count for the discrete baselines.
    pub step_size: f64,
    pub steps: usize,
    /// Start at the MAP instead of the origin (logistic targets).
    pub init_at_map: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sampler: SamplerKind::Sbps,
            target: TargetKind::Logistic,
            seed: 0,
            data_seed: 0,
            out_dir: super::default_out_dir(),
            dim: 20,
            n_data: 1000,
            prior_var: 1e4,
            variances: Vec::new(),
            noise_sd: 0.0,
            sigma_l: 0.25,
            sigma_mu: 0.01,
            batch_size: 100,
            band_multiple: 3.0,
            refresh_rate: 0.0,
            grid_dt: 0.01,
            aux_p_max: 1,
            epochs: 100.0,
            hyper_lr: 1e-3,
            max_events: 100_000,
            noise_pad_z: 8.0,
            step_size: 0.1,
            steps: 10_000,
            init_at_map: false,
        }
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_f64_list(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Serializes to the key-value text format (one `key = value` per line).
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("sampler", self.sampler.label().into());
        put("target", self.target.label().into());
        put("seed", self.seed.to_string());
        put("data_seed", self.data_seed.to_string());
        put("out_dir", self.out_dir.display().to_string());
        put("dim", self.dim.to_string());
        put("n_data", self.n_data.to_string());
        put("prior_var", fmt_f64(self.prior_var));
        put("variances", fmt_f64_list(&self.variances));
        put("noise_sd", fmt_f64(self.noise_sd));
        put("sigma_l", fmt_f64(self.sigma_l));
        put("sigma_mu", fmt_f64(self.sigma_mu));
        put("batch_size", self.batch_size.to_string());
        put("band_multiple", fmt_f64(self.band_multiple));
        put("refresh_rate", fmt_f64(self.refresh_rate));
        put("grid_dt", fmt_f64(self.grid_dt));
        put("aux_p_max", self.aux_p_max.to_string());
        put("epochs", fmt_f64(self.epochs));
        put("hyper_lr", fmt_f64(self.hyper_lr));
        put("max_events", self.max_events.to_string());
        put("noise_pad_z", fmt_f64(self.noise_pad_z));
        put("step_size", fmt_f64(self.step_size));
        put("steps", self.steps.to_string());
        put("init_at_map", self.init_at_map.to_string());
        s
    }

    /// Parses the key-value text format on top of defaults. Unknown keys are
    /// rejected.
    pub fn from_kv(text: &str) -> Result<Self, CliError> {
        let mut config = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Validation(format!(
                    "line {}: expected 'key = value', found '{raw}'",
                    lineno + 1
                ))
            })?;
            config.apply(key.trim(), value.trim()).map_err(|e| {
                CliError::Validation(format!("line {}: {e}", lineno + 1))
            })?;
        }
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        RunConfig::from_kv(&text)
    }

    /// Applies one `key=value` override.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| CliError::Validation(format!("{key}: {e}")))
        }
        match key {
            "sampler" => self.sampler = SamplerKind::parse(value)?,
            "target" => self.target = TargetKind::parse(value)?,
            "seed" => self.seed = num(key, value)?,
            "data_seed" => self.data_seed = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "dim" => self.dim = num(key, value)?,
            "n_data" => self.n_data = num(key, value)?,
            "prior_var" => self.prior_var = num(key, value)?,
            "variances" => {
                self.variances = if value.is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|v| num("variances", v.trim()))
                        .collect::<Result<_, _>>()?
                };
            }
            "noise_sd" => self.noise_sd = num(key, value)?,
            "sigma_l" => self.sigma_l = num(key, value)?,
            "sigma_mu" => self.sigma_mu = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "band_multiple" => self.band_multiple = num(key, value)?,
            "refresh_rate" => self.refresh_rate = num(key, value)?,
            "grid_dt" => self.grid_dt = num(key, value)?,
            "aux_p_max" => self.aux_p_max = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "hyper_lr" => self.hyper_lr = num(key, value)?,
            "max_events" => self.max_events = num(key, value)?,
            "noise_pad_z" => self.noise_pad_z = num(key, value)?,
            "step_size" => self.step_size = num(key, value)?,
            "steps" => self.steps = num(key, value)?,
            "init_at_map" => self.init_at_map = num(key, value)?,
            other => {
                return Err(CliError::Validation(format!("unknown key '{other}'")));
            }
        }
        Ok(())
    }

    /// Structural checks before any work happens.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.dim == 0 || self.n_data == 0 {
            return Err(CliError::Validation(
                "dim and n_data must be positive".into(),
            ));
        }
        if self.target == TargetKind::Hyperboloid && self.dim != 2 {
            return Err(CliError::Validation(
                "the hyperboloid target is two-dimensional; set dim = 2".into(),
            ));
        }
        if !self.variances.is_empty() && self.variances.len() != self.dim {
            return Err(CliError::Validation(format!(
                "variances list has {} entries, dim is {}",
                self.variances.len(),
                self.dim
            )));
        }
        if self.variances.iter().any(|v| *v <= 0.0) {
            return Err(CliError::Validation("variances must be positive".into()));
        }
        let needs_batches = matches!(
            self.sampler,
            SamplerKind::Sbps | SamplerKind::Psbps | SamplerKind::Sgld | SamplerKind::Msgnht
        );
        if needs_batches && self.target != TargetKind::Gaussian && self.batch_size > self.n_data {
            return Err(CliError::Validation(format!(
                "batch_size {} exceeds n_data {}",
                self.batch_size, self.n_data
            )));
        }
        if self.sampler == SamplerKind::Lipsbps && self.target != TargetKind::Logistic {
            return Err(CliError::Validation(
                "lipsbps requires the logistic target (its exact bound holds nowhere else)"
                    .into(),
            ));
        }
        if self.sampler == SamplerKind::Bps
            && matches!(self.target, TargetKind::Hyperboloid | TargetKind::Multimodal)
        {
            return Err(CliError::Validation(
                "bps requires an exactly simulable or exactly bounded target (gaussian or logistic)"
                    .into(),
            ));
        }
        if self.init_at_map && self.target != TargetKind::Logistic {
            return Err(CliError::Validation(
                "init_at_map requires the logistic target".into(),
            ));
        }
        Ok(())
    }
}
