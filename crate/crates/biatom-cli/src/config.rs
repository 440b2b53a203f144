use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Fully-resolved run configuration. Serialized alongside every output so a
/// run can be reproduced with `--config`; command-line flags override file
/// values field by field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    /// coupling rate g² (inverse time)
    pub g2: f64,
    /// carrier-atom detuning δ
    pub delta: f64,
    /// exchange interaction Δ
    #[serde(rename = "Delta")]
    pub exchange: f64,
    /// doubly-excited-state shift β
    pub beta: f64,
    /// separation phase φ = k_F a (radians)
    pub phi: f64,
    /// propagation delay a/c (0 = Markov limit)
    pub delay: f64,
    /// pulse shape: square | gaussian
    pub pulse: String,
    /// pulse duration T (time)
    #[serde(rename = "T")]
    pub duration: f64,
    /// samples on the default time grid
    pub grid_n: usize,
    /// sweep axes, as "param:lo:hi:n"
    pub sweep: Vec<String>,
    /// keep the ω-dependence of the separation phase (linear module only)
    pub non_markov: bool,
    /// command-specific options
    #[serde(default)]
    pub options: serde_json::Map<String, serde_json::Value>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            g2: 1.0,
            delta: 0.0,
            exchange: 0.0,
            beta: 0.0,
            phi: 0.0,
            delay: 0.0,
            pulse: "square".into(),
            duration: 1.0,
            grid_n: 2048,
            sweep: Vec::new(),
            non_markov: false,
            options: serde_json::Map::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepAxis {
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

pub fn parse_sweep(spec: &str) -> Result<SweepAxis> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        bail!("sweep must be param:lo:hi:n, got {spec:?}");
    }
    let axis = SweepAxis {
        param: parts[0].to_string(),
        lo: parts[1].parse().with_context(|| format!("bad sweep lo in {spec:?}"))?,
        hi: parts[2].parse().with_context(|| format!("bad sweep hi in {spec:?}"))?,
        n: parts[3].parse().with_context(|| format!("bad sweep count in {spec:?}"))?,
    };
    if axis.n < 1 {
        bail!("sweep count must be >= 1 in {spec:?}");
    }
    if axis.n > 1 && !(axis.hi > axis.lo) {
        bail!("sweep range is degenerate in {spec:?}");
    }
    Ok(axis)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse config {}", path.display()))
}
