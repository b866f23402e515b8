//! Experiment configuration: the config-file format, its defaults, and the
//! small string grammars used by the CLI (design lists, bench grids).
//!
//! The file is TOML with one flat section per concern; every CLI flag
//! overrides its config key. Unknown keys are rejected so typos fail loudly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{EpidemicParams, LinearGaussianParams, ModelSpec, SpatialPoissonParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum ModelName {
    LinearGaussian,
    Epidemic,
    SpatialPoisson,
}

impl std::fmt::Display for ModelName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelName::LinearGaussian => "linear_gaussian",
            ModelName::Epidemic => "epidemic",
            ModelName::SpatialPoisson => "spatial_poisson",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum SelectorName {
    Lsig,
    Gauss,
    Nmc,
    Random,
    Exhaustive,
}

impl std::fmt::Display for SelectorName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SelectorName::Lsig => "lsig",
            SelectorName::Gauss => "gauss",
            SelectorName::Nmc => "nmc",
            SelectorName::Random => "random",
            SelectorName::Exhaustive => "exhaustive",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub name: ModelName,
    /// Candidate count (linear-Gaussian, epidemic). The spatial model takes
    /// its candidate count from `grid`.
    pub n: usize,
    /// Parameter dimension (linear-Gaussian only).
    pub d: usize,
    /// Epidemic population size.
    pub population: u64,
    /// Epidemic observation horizon.
    pub t_end: f64,
    /// Epidemic log-normal prior location.
    pub mu_x: f64,
    /// Epidemic log-normal prior scale.
    pub sigma_x: f64,
    /// Spatial grid cells per axis.
    pub grid: usize,
    /// Spatial region side length.
    pub region: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            name: ModelName::LinearGaussian,
            n: 50,
            d: 50,
            population: 100,
            t_end: 5.0,
            mu_x: 0.0,
            sigma_x: 0.25,
            grid: 5,
            region: 5.0,
        }
    }
}

impl ModelSection {
    pub fn build(&self) -> Result<ModelSpec> {
        match self.name {
            ModelName::LinearGaussian => Ok(ModelSpec::LinearGaussian(
                LinearGaussianParams::with_kernel_defaults(self.n, self.d)?,
            )),
            ModelName::Epidemic => Ok(ModelSpec::Epidemic(EpidemicParams::new(
                self.population,
                self.t_end,
                self.n,
                self.mu_x,
                self.sigma_x,
            )?)),
            ModelName::SpatialPoisson => Ok(ModelSpec::SpatialPoisson(SpatialPoissonParams::new(
                self.grid,
                self.region,
            )?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectorsSection {
    pub list: Vec<SelectorName>,
}

impl Default for SelectorsSection {
    fn default() -> Self {
        Self {
            list: vec![
                SelectorName::Lsig,
                SelectorName::Gauss,
                SelectorName::Random,
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetsSection {
    /// Joint samples M for score estimation.
    pub joint_samples: usize,
    /// Recycled prior-bank size m.
    pub prior_bank: usize,
    /// Inner loops of the NMC-greedy selector.
    pub nmc_inner: usize,
    /// Outer loops of the NMC-greedy selector.
    pub nmc_outer: usize,
    /// Inner loops of the common evaluation estimator.
    pub eval_inner: usize,
    /// Outer loops of the common evaluation estimator.
    pub eval_outer: usize,
}

impl Default for BudgetsSection {
    fn default() -> Self {
        Self {
            joint_samples: 1000,
            prior_bank: 1000,
            nmc_inner: 10_000,
            nmc_outer: 1000,
            eval_inner: 10_000,
            eval_outer: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub k_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub out: String,
    /// Desk preset: scale evaluation NMC to (2000, 200) and selection NMC to
    /// (500, 100) for short runs.
    pub desk: bool,
    /// Record measured wall times. Off by default so identical configs
    /// produce byte-identical output files.
    pub timing: bool,
    /// Run the linear-Gaussian selectors from the closed-form matrices
    /// instead of sample estimates.
    pub exact_linear_gaussian: bool,
    /// Share one inner prior bank across NMC outer samples.
    pub recycle_inner: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            k_max: 10,
            trials: 10,
            seed: 42,
            out: "results.csv".into(),
            desk: false,
            timing: false,
            exact_linear_gaussian: true,
            recycle_inner: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub selectors: SelectorsSection,
    pub budgets: BudgetsSection,
    pub run: RunSection,
}

impl ExperimentConfig {
    /// Apply the desk preset to the sampling budgets.
    pub fn apply_desk(&mut self) {
        self.run.desk = true;
        self.budgets.eval_inner = 2000;
        self.budgets.eval_outer = 200;
        self.budgets.nmc_inner = 500;
        self.budgets.nmc_outer = 100;
    }

    /// Validate cross-field constraints and build the model.
    pub fn validate(&self) -> Result<ModelSpec> {
        let spec = self.model.build()?;
        if self.run.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.run.k_max == 0 || self.run.k_max > spec.n() {
            return Err(Error::Config(format!(
                "k_max = {} must satisfy 1 <= k_max <= n = {}",
                self.run.k_max,
                spec.n()
            )));
        }
        if self.selectors.list.is_empty() {
            return Err(Error::Config("selector list is empty".into()));
        }
        let mut seen = Vec::new();
        for s in &self.selectors.list {
            if seen.contains(s) {
                return Err(Error::Config(format!("selector {s} listed twice")));
            }
            seen.push(*s);
        }
        if self.budgets.joint_samples < 2 {
            return Err(Error::Config("joint_samples must be at least 2".into()));
        }
        if self.budgets.prior_bank < 1 {
            return Err(Error::Config("prior_bank must be at least 1".into()));
        }
        for (name, v) in [
            ("nmc_inner", self.budgets.nmc_inner),
            ("nmc_outer", self.budgets.nmc_outer),
            ("eval_inner", self.budgets.eval_inner),
            ("eval_outer", self.budgets.eval_outer),
        ] {
            if v < 2 {
                return Err(Error::Config(format!("{name} must be at least 2")));
            }
        }
        Ok(spec)
    }
}

/// Parse a config file. Errors carry the TOML diagnostic.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
}

/// Parse a semicolon-joined design string such as `"3;7;12"`.
pub fn parse_design(text: &str) -> Result<Vec<usize>> {
    let mut indices = Vec::new();
    for part in text.split(';') {
        let part = part.trim();
        if part.is_empty() {
            return Err(Error::Config(format!(
                "empty entry in design string {text:?}"
            )));
        }
        let idx: usize = part
            .parse()
            .map_err(|_| Error::Config(format!("invalid design index {part:?}")))?;
        if indices.contains(&idx) {
            return Err(Error::Config(format!("duplicate design index {idx}")));
        }
        indices.push(idx);
    }
    if indices.is_empty() {
        return Err(Error::Config("design string is empty".into()));
    }
    Ok(indices)
}

/// One axis of the bench grid: `n` or `k` with its values.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchGrid {
    pub n: Vec<usize>,
    pub k: Vec<usize>,
}

impl Default for BenchGrid {
    fn default() -> Self {
        Self {
            n: vec![20, 40, 80],
            k: vec![2, 4, 8],
        }
    }
}

/// Parse one grid token such as `"n=20,40,80"` or `"k=2,4,8"`.
pub fn parse_grid_token(token: &str) -> Result<(char, Vec<usize>)> {
    let (key, rest) = token
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("grid token {token:?} is missing '='")))?;
    let axis = match key.trim() {
        "n" => 'n',
        "k" => 'k',
        other => {
            return Err(Error::Config(format!(
                "grid axis must be 'n' or 'k', got {other:?}"
            )))
        }
    };
    let mut values = Vec::new();
    for part in rest.split(',') {
        let part = part.trim();
        let v: usize = part
            .parse()
            .map_err(|_| Error::Config(format!("invalid grid value {part:?}")))?;
        if v == 0 {
            return Err(Error::Config("grid values must be positive".into()));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::Config(format!("grid token {token:?} has no values")));
    }
    Ok((axis, values))
}

/// Parse the full `--grid` argument list, falling back to the default grid
/// for any axis not mentioned.
pub fn parse_grid(tokens: &[String]) -> Result<BenchGrid> {
    let mut grid = BenchGrid::default();
    for token in tokens {
        let (axis, values) = parse_grid_token(token)?;
        match axis {
            'n' => grid.n = values,
            'k' => grid.k = values,
            _ => unreachable!(),
        }
    }
    for &k in &grid.k {
        if grid.n.iter().any(|&n| k > n) {
            return Err(Error::Config(format!(
                "grid cardinality {k} exceeds some grid size in {:?}",
                grid.n
            )));
        }
    }
    Ok(grid)
}
