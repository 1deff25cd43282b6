//! JSON experiment configurations.
//!
//! Every file carries `schema_version` and is parsed with unknown keys
//! rejected, so a stored bundle either replays exactly or refuses to load.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use kpz_core::dynamics::Equation;
use kpz_core::noise::Mollifier;
use kpz_core::scheme::{Scheme, SymbolTable};

pub const SCHEMA_VERSION: u32 = 1;

pub fn check_schema(version: u32) -> Result<()> {
    if version != SCHEMA_VERSION {
        bail!("unsupported schema_version {version}, expected {SCHEMA_VERSION}");
    }
    Ok(())
}

/// Scheme selection: a named preset, the Sasamoto-Spohn family, the exact
/// continuum symbols, or an inline measure triple in the wire format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub inline: Option<serde_json::Value>,
}

pub struct ResolvedScheme {
    pub symbols: SymbolTable,
    /// Present unless the continuum symbols were requested.
    pub scheme: Option<Scheme>,
    pub label: String,
}

impl SchemeConfig {
    pub fn resolve(&self) -> Result<ResolvedScheme> {
        if let Some(inline) = &self.inline {
            let scheme = Scheme::from_json(&inline.to_string())?;
            let report = scheme.validate();
            if !report.all_pass() {
                bail!("inline scheme fails validation:\n{}", report.summary());
            }
            return Ok(ResolvedScheme {
                symbols: scheme.symbols(),
                label: scheme.name.clone(),
                scheme: Some(scheme),
            });
        }
        match self.name.as_deref() {
            Some("standard") | None => {
                let scheme = Scheme::preset_standard();
                Ok(ResolvedScheme {
                    symbols: scheme.symbols(),
                    label: scheme.name.clone(),
                    scheme: Some(scheme),
                })
            }
            Some("sasamoto_spohn") => {
                let kappa = self.kappa.unwrap_or(1.0);
                let lambda = self.lambda.unwrap_or(0.5);
                let scheme = Scheme::preset_sasamoto_spohn(kappa, lambda)?;
                Ok(ResolvedScheme {
                    symbols: scheme.symbols(),
                    label: scheme.name.clone(),
                    scheme: Some(scheme),
                })
            }
            Some("continuum") => Ok(ResolvedScheme {
                symbols: SymbolTable::Continuum,
                scheme: None,
                label: "continuum".into(),
            }),
            Some(other) => bail!("unknown scheme name '{other}'"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierConfig {
    pub name: String,
    pub eps_reg: f64,
}

impl MollifierConfig {
    pub fn resolve(&self) -> Result<(Mollifier, f64)> {
        Ok((Mollifier::from_name(&self.name)?, self.eps_reg))
    }
}

fn default_true() -> bool {
    true
}

fn default_level() -> f64 {
    0.01
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema_version: u32,
    pub grid_n: usize,
    pub scheme: SchemeConfig,
    pub equation: Equation,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
    #[serde(default)]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub blowup_threshold: Option<f64>,
    #[serde(default)]
    pub mollifier: Option<MollifierConfig>,
    /// Number, or the string "auto" to use the lattice renormalization sum
    /// of the configured mollifier.
    #[serde(default)]
    pub renorm: Option<serde_json::Value>,
    #[serde(default = "default_true")]
    pub noise: bool,
    #[serde(default = "default_true")]
    pub nonlinearity: bool,
    pub initial: InitialConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialConfig {
    Zero,
    StationaryOu,
    WhiteInvariant { mean: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceConfig {
    pub schema_version: u32,
    pub grid_n: usize,
    #[serde(default)]
    pub scheme: Option<SchemeConfig>,
    #[serde(default)]
    pub mean: f64,
    pub replicas: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_level")]
    pub level: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub scheme: Option<SchemeConfig>,
    #[serde(default)]
    pub quad_abs_tol: Option<f64>,
    #[serde(default)]
    pub k_trunc: Option<i64>,
    #[serde(default)]
    pub t_trunc: Option<f64>,
    #[serde(default)]
    pub mollifier: Option<MollifierConfig>,
    #[serde(default)]
    pub zero_chaos_n: Option<Vec<usize>>,
    #[serde(default)]
    pub zero_chaos_t: Option<f64>,
    #[serde(default)]
    pub vertex_ks: Option<Vec<i64>>,
    #[serde(default)]
    pub cancellation_k_trunc: Option<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityConfig {
    pub schema_version: u32,
    pub grid_n: usize,
    #[serde(default)]
    pub scheme: Option<SchemeConfig>,
    pub replicas: usize,
    /// "stationary_ou" or "white".
    #[serde(default)]
    pub source: Option<String>,
    /// Block-norm exponent; the string "inf" or a number.
    #[serde(default)]
    pub p: Option<serde_json::Value>,
    #[serde(default)]
    pub fit_range: Option<(i32, i32)>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColeHopfConfig {
    pub schema_version: u32,
    pub grid_n: usize,
    #[serde(default)]
    pub mollifier_name: Option<String>,
    pub eps_reg: f64,
    pub t_end: f64,
    pub dts: Vec<f64>,
    #[serde(default)]
    pub h0_amplitude: Option<f64>,
    #[serde(default = "default_true")]
    pub noise: bool,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldChoice {
    Zero,
    Const { value: f64 },
    Cos,
    Sin,
}

impl FieldChoice {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            FieldChoice::Zero => 0.0,
            FieldChoice::Const { value } => *value,
            FieldChoice::Cos => y.cos(),
            FieldChoice::Sin => y.sin(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeynmanKacConfig {
    pub schema_version: u32,
    pub theta: FieldChoice,
    pub h_bar: FieldChoice,
    pub t_end: f64,
    pub x: f64,
    pub n_paths: usize,
    #[serde(default)]
    pub dt_path: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Compare against the deterministic spectral solve.
    #[serde(default = "default_true")]
    pub spectral_check: bool,
    #[serde(default)]
    pub spectral_grid_n: Option<usize>,
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let value: T = serde_json::from_str(&text)
        .with_context(|| format!("config {} rejected", path.display()))?;
    Ok(value)
}
