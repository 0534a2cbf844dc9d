//! Flat `key = value` scenario files.
//!
//! One entry per line; `#` starts a comment; blank lines are ignored.
//! Lists are comma separated. Every key in the file must be consumed by the
//! scenario it declares, so typos surface as validation errors.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{GeoflowError, Result};
use crate::flow::{FlowConfig, Integrator};
use crate::model::{Activation, Dataset, Model, Params};

/// Raw parsed entries, with access tracking.
#[derive(Debug)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
    used: RefCell<BTreeSet<String>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(GeoflowError::Config(format!("line {lineno}: expected `key = value`")));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(GeoflowError::Config(format!("line {lineno}: invalid key `{k}`")));
            }
            if let Some((first, _)) = entries.insert(k.to_string(), (lineno, v.to_string())) {
                return Err(GeoflowError::Config(format!(
                    "line {lineno}: duplicate key `{k}` (first set on line {first})"
                )));
            }
        }
        Ok(RawConfig {
            entries,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, (_, v))| (k.as_str(), v.as_str()))
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T> {
        v.parse()
            .map_err(|_| GeoflowError::Config(format!("`{key}`: cannot parse `{v}`")))
    }

    pub fn string(&self, key: &str) -> Option<String> {
        self.raw(key).map(str::to_string)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key).map(|v| Self::parse_one(key, v)).transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| Self::parse_one(key, s))
                    .collect()
            })
            .transpose()
    }

    pub fn list_or<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        Ok(self.list(key)?.unwrap_or(default))
    }

    /// Errors on any entry nobody asked for.
    pub fn check_all_used(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<String> = self
            .entries
            .iter()
            .filter(|(k, _)| !used.contains(*k))
            .map(|(k, (line, _))| format!("`{k}` (line {line})"))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(GeoflowError::Config(format!("unknown keys: {}", unknown.join(", "))))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Figure2,
    AssumptionSweep,
    Sandwich,
    VanishingLimit,
    Gibbs,
    TransferToy,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Figure2,
        Scenario::AssumptionSweep,
        Scenario::Sandwich,
        Scenario::VanishingLimit,
        Scenario::Gibbs,
        Scenario::TransferToy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Figure2 => "figure2",
            Scenario::AssumptionSweep => "assumption_sweep",
            Scenario::Sandwich => "sandwich",
            Scenario::VanishingLimit => "vanishing_limit",
            Scenario::Gibbs => "gibbs",
            Scenario::TransferToy => "transfer_toy",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Scenario::Figure2 => "toy-model trajectories under each regulariser, over a loss heatmap",
            Scenario::AssumptionSweep => "NTK extreme eigenvalues and loss during ridgeless MLP training across widths",
            Scenario::Sandwich => "anchored lower bound, energy and squared arc length along a ridgeless run",
            Scenario::VanishingLimit => "regularised equilibria as lambda shrinks, against the ridgeless limit",
            Scenario::Gibbs => "partition function of the energy prior against its Gaussian bound",
            Scenario::TransferToy => "fine-tuning a pretrained MLP on noisy targets under each regulariser",
        }
    }
}

impl FromStr for Scenario {
    type Err = GeoflowError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| GeoflowError::Config(format!("unknown scenario `{s}`")))
    }
}

/// Regulariser names accepted in `regularisers = ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RegName {
    None,
    Standard,
    Anchored,
    Arc,
    Geodesic,
    QuadraticAb,
}

impl RegName {
    pub fn name(self) -> &'static str {
        match self {
            RegName::None => "none",
            RegName::Standard => "standard",
            RegName::Anchored => "anchored",
            RegName::Arc => "arc",
            RegName::Geodesic => "geodesic",
            RegName::QuadraticAb => "quadratic_ab",
        }
    }
}

impl FromStr for RegName {
    type Err = GeoflowError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" | "ridgeless" => RegName::None,
            "standard" => RegName::Standard,
            "anchored" => RegName::Anchored,
            "arc" => RegName::Arc,
            "geodesic" => RegName::Geodesic,
            "quadratic_ab" => RegName::QuadraticAb,
            _ => return Err(GeoflowError::Config(format!("unknown regulariser `{s}`"))),
        })
    }
}

/// A toy model with its initial point.
#[derive(Debug, Clone)]
pub struct ToySetup {
    pub model: Model,
    pub theta0: Params,
}

impl ToySetup {
    pub fn label(&self) -> &'static str {
        match self.model {
            Model::BilinearToy => "bilinear",
            Model::LinearToy => "linear",
            Model::Mlp(_) => "mlp",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Figure2Params {
    pub toys: Vec<ToySetup>,
    pub data: Dataset,
    pub regularisers: Vec<RegName>,
    pub lambda: f64,
    /// Geodesic runs stop at this total-gradient norm.
    pub geodesic_equilibrium_tol: f64,
    pub segments: usize,
    pub heatmap_resolution: usize,
}

#[derive(Debug, Clone)]
pub struct SweepParams {
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub points: usize,
    pub noise: f64,
}

#[derive(Debug, Clone)]
pub struct SandwichParams {
    pub toy: ToySetup,
    pub data: Dataset,
    pub every: usize,
    pub segments: usize,
}

#[derive(Debug, Clone)]
pub struct LimitParams {
    pub toys: Vec<ToySetup>,
    pub data: Dataset,
    pub regularisers: Vec<RegName>,
    pub lambdas: Vec<f64>,
    pub ab_samples: usize,
    pub ab_a_range: (f64, f64),
    pub ab_b_range: (f64, f64),
    pub horizon_cap: f64,
}

#[derive(Debug, Clone)]
pub struct GibbsParams {
    pub toys: Vec<ToySetup>,
    pub data: Dataset,
    pub betas: Vec<f64>,
    pub quad_points: usize,
    pub grid_points: usize,
    pub domain: Option<(f64, f64)>,
    pub segments: usize,
}

#[derive(Debug, Clone)]
pub struct TransferParams {
    pub width: usize,
    pub activation: Activation,
    /// Targets are `sin(π·frequency·x)`.
    pub frequency: f64,
    pub pretrain_points: usize,
    pub pretrain: FlowConfig,
    pub finetune_points: usize,
    pub noise: f64,
    /// Every `validation_every`-th fine-tune point is held out.
    pub validation_every: usize,
    pub test_points: usize,
    pub regularisers: Vec<RegName>,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum ScenarioParams {
    Figure2(Figure2Params),
    AssumptionSweep(SweepParams),
    Sandwich(SandwichParams),
    VanishingLimit(LimitParams),
    Gibbs(GibbsParams),
    TransferToy(TransferParams),
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub workers: Option<usize>,
    pub flow: FlowConfig,
    pub params: ScenarioParams,
    /// Original file text, echoed into the manifest and hashed.
    pub source: String,
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GeoflowError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        if cfg.output_dir.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output_dir = dir.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw = RawConfig::parse(text)?;
        let scenario: Scenario = raw
            .string("scenario")
            .ok_or_else(|| GeoflowError::Config("missing `scenario`".into()))?
            .parse()?;
        let output_dir = PathBuf::from(raw.string("output_dir").unwrap_or_else(|| format!("out/{}", scenario.name())));
        let seeds: Vec<u64> = raw.list_or("seeds", vec![0])?;
        if seeds.is_empty() {
            return Err(GeoflowError::Config("`seeds` must not be empty".into()));
        }
        let workers = raw.get("workers")?;
        let flow = flow_config(&raw, "flow", FlowConfig::default())?;
        let params = match scenario {
            Scenario::Figure2 => ScenarioParams::Figure2(figure2(&raw)?),
            Scenario::AssumptionSweep => ScenarioParams::AssumptionSweep(sweep(&raw)?),
            Scenario::Sandwich => ScenarioParams::Sandwich(sandwich(&raw)?),
            Scenario::VanishingLimit => ScenarioParams::VanishingLimit(limits(&raw)?),
            Scenario::Gibbs => ScenarioParams::Gibbs(gibbs(&raw)?),
            Scenario::TransferToy => ScenarioParams::TransferToy(transfer(&raw)?),
        };
        raw.check_all_used()?;
        Ok(ScenarioConfig {
            scenario,
            output_dir,
            seeds,
            workers,
            flow,
            params,
            source: text.to_string(),
        })
    }
}

fn flow_config(raw: &RawConfig, prefix: &str, base: FlowConfig) -> Result<FlowConfig> {
    let key = |k: &str| format!("{prefix}.{k}");
    let integrator = match raw.string(&key("integrator")).as_deref() {
        None => base.integrator,
        Some("rk4") => Integrator::Rk4,
        Some("euler") => Integrator::Euler,
        Some(other) => return Err(GeoflowError::Config(format!("unknown integrator `{other}`"))),
    };
    let cfg = FlowConfig {
        step_size: raw.get_or(&key("step_size"), base.step_size)?,
        max_time: raw.get_or(&key("max_time"), base.max_time)?,
        integrator,
        residual_tol: raw.get_or(&key("residual_tol"), base.residual_tol)?,
        equilibrium_tol: raw.get_or(&key("equilibrium_tol"), base.equilibrium_tol)?,
        record_every: raw.get_or(&key("record_every"), base.record_every)?,
        spectral_every: raw.get_or(&key("spectral_every"), base.spectral_every)?,
        store_params: base.store_params,
        max_halvings: raw.get_or(&key("max_halvings"), base.max_halvings)?,
    };
    if !(cfg.step_size > 0.0) || !(cfg.max_time > 0.0) || cfg.record_every == 0 || cfg.spectral_every == 0 {
        return Err(GeoflowError::Config(format!(
            "`{prefix}`: step_size and max_time must be positive, cadences >= 1"
        )));
    }
    Ok(cfg)
}

fn toy(name: &str) -> Result<Model> {
    match name {
        "bilinear" => Ok(Model::BilinearToy),
        "linear" => Ok(Model::LinearToy),
        _ => Err(GeoflowError::Config(format!(
            "unknown toy model `{name}` (bilinear | linear)"
        ))),
    }
}

fn default_theta0(model: &Model) -> Vec<f64> {
    match model {
        Model::BilinearToy => vec![2.0, 0.1],
        _ => vec![0.0, 0.0],
    }
}

fn toy_setup(raw: &RawConfig, name: &str) -> Result<ToySetup> {
    let model = toy(name)?;
    let theta0: Vec<f64> = raw.list_or(&format!("theta0.{name}"), default_theta0(&model))?;
    if theta0.len() != 2 || theta0.iter().any(|v| !v.is_finite()) {
        return Err(GeoflowError::Config(format!("`theta0.{name}` needs two finite values")));
    }
    Ok(ToySetup {
        model,
        theta0: Params::from_vec(theta0),
    })
}

fn toys(raw: &RawConfig) -> Result<Vec<ToySetup>> {
    let names: Vec<String> = raw.list_or("models", vec!["bilinear".to_string(), "linear".to_string()])?;
    if names.is_empty() {
        return Err(GeoflowError::Config("`models` must not be empty".into()));
    }
    names.iter().map(|n| toy_setup(raw, n)).collect()
}

fn toy_data(raw: &RawConfig) -> Result<Dataset> {
    let xs: Vec<f64> = raw.list_or("data.x", vec![1.0])?;
    let ys: Vec<f64> = raw.list_or("data.y", vec![1.0])?;
    Dataset::scalar(&xs, &ys)
}

fn regulariser_list(raw: &RawConfig, default: Vec<RegName>) -> Result<Vec<RegName>> {
    let regs: Vec<RegName> = raw.list_or("regularisers", default)?;
    if regs.is_empty() {
        return Err(GeoflowError::Config("`regularisers` must not be empty".into()));
    }
    let mut seen = BTreeSet::new();
    for r in &regs {
        if !seen.insert(*r) {
            return Err(GeoflowError::Config(format!("regulariser `{}` listed twice", r.name())));
        }
    }
    Ok(regs)
}

fn lambda_grid(raw: &RawConfig, default: Vec<f64>) -> Result<Vec<f64>> {
    let lambdas: Vec<f64> = raw.list_or("lambdas", default)?;
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(GeoflowError::Config(
            "`lambdas` must be a non-empty list of finite values >= 0".into(),
        ));
    }
    Ok(lambdas)
}

fn activation(raw: &RawConfig) -> Result<Activation> {
    match raw.string("mlp.activation").as_deref() {
        None | Some("gelu") => Ok(Activation::Gelu),
        Some("tanh") => Ok(Activation::Tanh),
        Some(other) => Err(GeoflowError::Config(format!("unknown activation `{other}`"))),
    }
}

fn range(raw: &RawConfig, key: &str, default: (f64, f64)) -> Result<(f64, f64)> {
    match raw.list::<f64>(key)? {
        None => Ok(default),
        Some(v) if v.len() == 2 && v[0] <= v[1] => Ok((v[0], v[1])),
        Some(_) => Err(GeoflowError::Config(format!("`{key}` needs `lo, hi` with lo <= hi"))),
    }
}

fn figure2(raw: &RawConfig) -> Result<Figure2Params> {
    let regularisers = regulariser_list(
        raw,
        vec![
            RegName::None,
            RegName::Standard,
            RegName::Anchored,
            RegName::Arc,
            RegName::Geodesic,
        ],
    )?;
    if regularisers.contains(&RegName::QuadraticAb) {
        return Err(GeoflowError::Config("figure2 does not take quadratic_ab".into()));
    }
    let lambda: f64 = raw.get_or("lambda", 1e-2)?;
    if !(lambda >= 0.0) {
        return Err(GeoflowError::Config("`lambda` must be >= 0".into()));
    }
    Ok(Figure2Params {
        toys: toys(raw)?,
        data: toy_data(raw)?,
        regularisers,
        lambda,
        geodesic_equilibrium_tol: raw.get_or("geodesic.equilibrium_tol", 1e-7)?,
        segments: raw.get_or("energy.segments", 64)?,
        heatmap_resolution: raw.get_or("svg.heatmap_resolution", 200)?,
    })
}

fn sweep(raw: &RawConfig) -> Result<SweepParams> {
    let widths: Vec<usize> = raw.list_or("widths", vec![64, 256, 1024])?;
    if widths.is_empty() || widths.contains(&0) {
        return Err(GeoflowError::Config("`widths` must be non-empty and positive".into()));
    }
    let points = raw.get_or("data.points", 16)?;
    if points < 2 {
        return Err(GeoflowError::Config("`data.points` must be >= 2".into()));
    }
    Ok(SweepParams {
        widths,
        activation: activation(raw)?,
        points,
        noise: raw.get_or("data.noise", 0.05)?,
    })
}

fn sandwich(raw: &RawConfig) -> Result<SandwichParams> {
    let name = raw.string("model").unwrap_or_else(|| "bilinear".into());
    let every = raw.get_or("sandwich.every", 10)?;
    if every == 0 {
        return Err(GeoflowError::Config("`sandwich.every` must be >= 1".into()));
    }
    Ok(SandwichParams {
        toy: toy_setup(raw, &name)?,
        data: toy_data(raw)?,
        every,
        segments: raw.get_or("energy.segments", 64)?,
    })
}

fn limits(raw: &RawConfig) -> Result<LimitParams> {
    let regularisers = regulariser_list(raw, vec![RegName::Anchored, RegName::Standard, RegName::QuadraticAb])?;
    if regularisers
        .iter()
        .any(|r| matches!(r, RegName::None | RegName::Arc | RegName::Geodesic))
    {
        return Err(GeoflowError::Config(
            "vanishing_limit takes standard, anchored and quadratic_ab".into(),
        ));
    }
    let lambdas = lambda_grid(raw, vec![1e-1, 3e-2, 1e-2])?;
    if lambdas.len() < 2 || lambdas.contains(&0.0) {
        return Err(GeoflowError::Config(
            "vanishing_limit needs at least two positive lambdas".into(),
        ));
    }
    let ab_a_range = range(raw, "quadratic_ab.a_range", (0.2, 2.0))?;
    if !(ab_a_range.0 > 0.0) {
        return Err(GeoflowError::Config("`quadratic_ab.a_range` must be positive".into()));
    }
    Ok(LimitParams {
        toys: toys(raw)?,
        data: toy_data(raw)?,
        regularisers,
        lambdas,
        ab_samples: raw.get_or("quadratic_ab.samples", 5)?,
        ab_a_range,
        ab_b_range: range(raw, "quadratic_ab.b_range", (0.0, 1.5))?,
        horizon_cap: raw.get_or("horizon_cap", 1e5)?,
    })
}

fn gibbs(raw: &RawConfig) -> Result<GibbsParams> {
    let betas: Vec<f64> = raw.list_or("betas", vec![1.0])?;
    if betas.is_empty() || betas.iter().any(|b| !(*b > 0.0)) {
        return Err(GeoflowError::Config(
            "`betas` must be a non-empty list of positive values".into(),
        ));
    }
    let domain = match raw.list::<f64>("gibbs.domain")? {
        None => None,
        Some(v) if v.len() == 2 && v[0] < v[1] => Some((v[0], v[1])),
        Some(_) => return Err(GeoflowError::Config("`gibbs.domain` needs `lo, hi` with lo < hi".into())),
    };
    Ok(GibbsParams {
        toys: toys(raw)?,
        data: toy_data(raw)?,
        betas,
        quad_points: raw.get_or("gibbs.quad_points", 256)?,
        grid_points: raw.get_or("gibbs.grid_points", 41)?,
        domain,
        segments: raw.get_or("energy.segments", 64)?,
    })
}

fn transfer(raw: &RawConfig) -> Result<TransferParams> {
    let regularisers = regulariser_list(raw, vec![RegName::Standard, RegName::Anchored, RegName::Arc])?;
    if regularisers
        .iter()
        .any(|r| matches!(r, RegName::Geodesic | RegName::QuadraticAb))
    {
        return Err(GeoflowError::Config(
            "transfer_toy takes none, standard, anchored and arc".into(),
        ));
    }
    let pretrain_base = FlowConfig {
        step_size: 1.0,
        max_time: 1000.0,
        integrator: Integrator::Euler,
        residual_tol: 1e-6,
        record_every: usize::MAX,
        spectral_every: usize::MAX,
        store_params: false,
        max_halvings: 12,
        ..FlowConfig::default()
    };
    let p = TransferParams {
        width: raw.get_or("mlp.width", 64)?,
        activation: activation(raw)?,
        frequency: raw.get_or("transfer.frequency", 1.0)?,
        pretrain_points: raw.get_or("pretrain.points", 6)?,
        pretrain: flow_config(raw, "pretrain", pretrain_base)?,
        finetune_points: raw.get_or("finetune.points", 40)?,
        noise: raw.get_or("data.noise", 0.1)?,
        validation_every: raw.get_or("finetune.validation_every", 5)?,
        test_points: raw.get_or("test.points", 200)?,
        regularisers,
        lambdas: lambda_grid(raw, vec![1e-4, 1e-3, 1e-2, 1e-1, 1e0])?,
    };
    if p.width == 0 || p.pretrain_points < 2 || p.test_points == 0 {
        return Err(GeoflowError::Config(
            "transfer_toy needs width >= 1, pretrain.points >= 2, test.points >= 1".into(),
        ));
    }
    if p.validation_every < 2 || p.finetune_points < 2 * p.validation_every {
        return Err(GeoflowError::Config(
            "`finetune.validation_every` must be >= 2 and leave at least two validation points".into(),
        ));
    }
    if !(p.noise >= 0.0) {
        return Err(GeoflowError::Config("`data.noise` must be >= 0".into()));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_lists_and_defaults() {
        let cfg = ScenarioConfig::parse(
            "# trajectories\nscenario = figure2   # inline\n\nregularisers = none, arc\nlambda = 0.02\nseeds = 3, 4\n",
        )
        .unwrap();
        assert_eq!(cfg.seeds, vec![3, 4]);
        let ScenarioParams::Figure2(p) = cfg.params else { panic!() };
        assert_eq!(p.regularisers, vec![RegName::None, RegName::Arc]);
        assert_eq!(p.lambda, 0.02);
        assert_eq!(p.toys.len(), 2);
        assert_eq!(cfg.output_dir, PathBuf::from("out/figure2"));
    }

    #[test]
    fn empty_regulariser_list_is_rejected() {
        let err = ScenarioConfig::parse("scenario = figure2\nregularisers =\n").unwrap_err();
        assert!(err.to_string().contains("regularisers"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys_duplicates_and_bad_lines() {
        assert!(ScenarioConfig::parse("scenario = figure2\nlamda = 1\n")
            .unwrap_err()
            .to_string()
            .contains("lamda"));
        assert!(ScenarioConfig::parse("scenario = gibbs\nbetas = 1\nbetas = 2\n")
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
        assert!(ScenarioConfig::parse("scenario = gibbs\nbetas 1\n")
            .unwrap_err()
            .to_string()
            .contains("line 2"));
        assert!(ScenarioConfig::parse("lambda = 1\n").is_err());
        assert!(ScenarioConfig::parse("scenario = nope\n").is_err());
    }

    #[test]
    fn rejects_negative_lambdas_and_empty_seeds() {
        assert!(ScenarioConfig::parse("scenario = vanishing_limit\nlambdas = 0.1, -0.01\n").is_err());
        assert!(ScenarioConfig::parse("scenario = figure2\nseeds =\n").is_err());
        assert!(ScenarioConfig::parse("scenario = figure2\nlambda = -1\n").is_err());
    }

    #[test]
    fn flow_overrides() {
        let cfg = ScenarioConfig::parse("scenario = sandwich\nflow.step_size = 0.05\nflow.integrator = euler\n").unwrap();
        assert_eq!(cfg.flow.step_size, 0.05);
        assert_eq!(cfg.flow.integrator, Integrator::Euler);
        assert!(ScenarioConfig::parse("scenario = sandwich\nflow.integrator = leapfrog\n").is_err());
    }
}
