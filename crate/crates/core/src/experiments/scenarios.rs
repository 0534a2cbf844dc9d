//! Scenario runners. Each writes its artifacts, evaluates its gates and
//! returns the manifest; independent cells run on the current rayon pool.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::config::{
    Figure2Params, GibbsParams, LimitParams, RegName, SandwichParams, ScenarioConfig, SweepParams, ToySetup, TransferParams,
};
use super::output::{config_hash, emit_csv, emit_svg, Gate, Heatmap, Panel, RunManifest, Series, Table, PALETTE};
use crate::energy::{constant_speed_check, solve_horizontal_energy, EnergyMode, EnergyProblem, EnergyTable, GeodesicRidge};
use crate::error::{GeoflowError, Result};
use crate::flow::{
    extrapolate_to_zero, fibre_drift, integrate, vanishing_lambda_limit, FlowConfig, StopReason, TrajectoryRecord,
};
use crate::gibbs::{composite_gauss_legendre, partition_function, GibbsConfig};
use crate::model::{mup_init, Dataset, MlpSpec, Model, Params};
use crate::regularisers::RegulariserSpec;
use crate::row;

/// Collects artifacts and gate outcomes for one scenario.
struct Run<'a> {
    cfg: &'a ScenarioConfig,
    files: Vec<String>,
    gates: Vec<Gate>,
    failed_cells: Vec<String>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Self {
        Run {
            cfg,
            files: Vec::new(),
            gates: Vec::new(),
            failed_cells: Vec::new(),
        }
    }

    fn dir(&self) -> &Path {
        &self.cfg.output_dir
    }

    fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        emit_csv(table, &self.dir().join(name))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn svg(&mut self, name: &str, panel: &Panel) -> Result<()> {
        emit_svg(panel, &self.dir().join(name))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn gate(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.gates.push(Gate::new(name, passed, detail));
    }

    fn finish(self) -> Result<RunManifest> {
        let echo = super::config::RawConfig::parse(&self.cfg.source)?
            .entries()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let manifest = RunManifest {
            scenario: self.cfg.scenario.name().to_string(),
            config_hash: config_hash(&self.cfg.source),
            version: format!("geoflow {}", env!("CARGO_PKG_VERSION")),
            output_dir: self.cfg.output_dir.clone(),
            files: self.files,
            gates: self.gates,
            failed_cells: self.failed_cells,
            config_echo: echo,
        };
        manifest.write()?;
        Ok(manifest)
    }
}

fn dist(a: &Params, b: &Params) -> f64 {
    (a - b).norm()
}

/// Distance from `p` to the polyline through `path`.
fn distance_to_path(p: &Params, path: &[Params]) -> f64 {
    if path.len() == 1 {
        return dist(p, &path[0]);
    }
    path.windows(2)
        .map(|w| {
            let d = &w[1] - &w[0];
            let len2 = d.norm_squared();
            let u = if len2 > 0.0 {
                ((p - &w[0]).dot(&d) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            dist(p, &(&w[0] + d * u))
        })
        .fold(f64::INFINITY, f64::min)
}

fn fmt_point(p: &Params) -> String {
    let parts: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn stop_name(r: StopReason) -> &'static str {
    match r {
        StopReason::ResidualTol => "residual_tol",
        StopReason::ArcStop => "arc_stop",
        StopReason::Equilibrium => "equilibrium",
        StopReason::MaxTime => "max_time",
    }
}

fn thetas(traj: &TrajectoryRecord) -> Vec<Params> {
    traj.steps.iter().filter_map(|s| s.theta.clone()).collect()
}

/// Ridgeless reference run, recorded with parameters and spectra.
fn reference_run(model: &Model, data: &Dataset, theta0: &Params, flow: &FlowConfig) -> Result<TrajectoryRecord> {
    let cfg = FlowConfig {
        store_params: true,
        ..flow.clone()
    };
    integrate(model, data, theta0, &RegulariserSpec::none(theta0.clone()), 0.0, &cfg)
}

/// Energy table over the outputs the reference run sweeps, padded by half
/// the span on each side.
fn reference_table(
    model: &Model,
    data: &Dataset,
    theta0: &Params,
    reference: &TrajectoryRecord,
    segments: usize,
) -> Result<EnergyTable> {
    let c0 = reference.steps[0].outputs[0];
    let c1 = reference.last().outputs[0];
    let span = (c1 - c0).abs().max(1e-3);
    let (lo, hi) = (c0.min(c1) - 0.5 * span, c0.max(c1) + 0.5 * span);
    let grid: Vec<f64> = (0..=20).map(|i| lo + (hi - lo) * i as f64 / 20.0).collect();
    Ok(EnergyTable::build(model, data, theta0, &grid, segments)?.0)
}

pub fn run_figure2(cfg: &ScenarioConfig, p: &Figure2Params) -> Result<RunManifest> {
    let mut run = Run::new(cfg);
    for toy in &p.toys {
        let label = toy.label();
        let reference = reference_run(&toy.model, &p.data, &toy.theta0, &cfg.flow)?;
        let theta_star = reference.theta_final.clone();
        let ref_path = thetas(&reference);
        let geodesic = if p.regularisers.contains(&RegName::Geodesic) {
            let mode = if p.data.len() == 1 {
                EnergyMode::Table(reference_table(&toy.model, &p.data, &toy.theta0, &reference, p.segments)?)
            } else {
                EnergyMode::Direct { segments: p.segments }
            };
            Some(Arc::new(GeodesicRidge::new(
                toy.model.clone(),
                p.data.clone(),
                toy.theta0.clone(),
                reference.clone(),
                mode,
            )?))
        } else {
            None
        };
        let runs: Vec<(RegName, Result<TrajectoryRecord>)> = p
            .regularisers
            .par_iter()
            .map(|&reg| {
                let anchor = toy.theta0.clone();
                let regularised = FlowConfig {
                    residual_tol: 0.0,
                    store_params: true,
                    ..cfg.flow.clone()
                };
                let out = match reg {
                    RegName::None => Ok(reference.clone()),
                    RegName::Standard => integrate(
                        &toy.model,
                        &p.data,
                        &toy.theta0,
                        &RegulariserSpec::standard(anchor),
                        p.lambda,
                        &regularised,
                    ),
                    RegName::Anchored => integrate(
                        &toy.model,
                        &p.data,
                        &toy.theta0,
                        &RegulariserSpec::anchored(anchor),
                        p.lambda,
                        &regularised,
                    ),
                    RegName::Arc => integrate(
                        &toy.model,
                        &p.data,
                        &toy.theta0,
                        &RegulariserSpec::arc(anchor),
                        p.lambda,
                        &regularised,
                    ),
                    RegName::Geodesic => {
                        let spec = RegulariserSpec::geodesic(geodesic.clone().expect("built above"));
                        let geo_cfg = FlowConfig {
                            equilibrium_tol: p.geodesic_equilibrium_tol,
                            ..regularised.clone()
                        };
                        integrate(&toy.model, &p.data, &toy.theta0, &spec, p.lambda, &geo_cfg)
                    }
                    RegName::QuadraticAb => Err(GeoflowError::Config("figure2 does not take quadratic_ab".into())),
                };
                (reg, out)
            })
            .collect();

        let mut endpoints = Table::new(&[
            "regulariser",
            "lambda",
            "theta1",
            "theta2",
            "distance_to_ridgeless",
            "distance_to_ridgeless_path",
            "stop_reason",
            "t_end",
        ]);
        let mut panel = Panel::new(&format!("{label} toy, lambda = {}", p.lambda), "theta1", "theta2");
        let mut finals: Vec<(RegName, Params)> = Vec::new();
        let mut all_points: Vec<Params> = vec![toy.theta0.clone(), theta_star.clone()];
        for (i, (reg, traj)) in runs.into_iter().enumerate() {
            let traj = match traj {
                Ok(t) => t,
                Err(e) => {
                    run.failed_cells.push(format!("{label}/{}: {e}", reg.name()));
                    continue;
                }
            };
            let drift = fibre_drift(&toy.model, &p.data, &traj, f64::INFINITY)?;
            let mut table = Table::new(&["t", "theta1", "theta2", "loss", "s", "fibre_drift"]);
            for (step, (_, d)) in traj.steps.iter().zip(&drift.points) {
                let th = step.theta.as_ref().expect("stored");
                table.push(row![step.t, th[0], th[1], step.loss, step.arc_length, *d]);
            }
            run.csv(&format!("figure2_{label}_{}.csv", reg.name()), &table)?;
            let end = traj.theta_final.clone();
            endpoints.push(row![
                reg.name(),
                if reg == RegName::None { 0.0 } else { p.lambda },
                end[0],
                end[1],
                dist(&end, &theta_star),
                distance_to_path(&end, &ref_path),
                stop_name(traj.stop_reason),
                traj.last().t
            ]);
            let pts = thetas(&traj);
            all_points.extend(pts.iter().cloned());
            panel.series.push(Series::line(
                reg.name(),
                pts.iter().map(|t| (t[0], t[1])).collect(),
                PALETTE[i % PALETTE.len()],
            ));
            finals.push((reg, end));
        }
        run.csv(&format!("figure2_{label}_endpoints.csv"), &endpoints)?;

        // loss heatmap over the padded bounding box of all trajectories
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for q in &all_points {
            x0 = x0.min(q[0]);
            x1 = x1.max(q[0]);
            y0 = y0.min(q[1]);
            y1 = y1.max(q[1]);
        }
        let pad = 0.1 * (x1 - x0).max(y1 - y0).max(1e-3);
        let (x0, x1, y0, y1) = (x0 - pad, x1 + pad, y0 - pad, y1 + pad);
        let n = p.heatmap_resolution.max(2);
        let values: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|r| {
                let y = y0 + (y1 - y0) * (r as f64 + 0.5) / n as f64;
                (0..n)
                    .map(|c| {
                        let x = x0 + (x1 - x0) * (c as f64 + 0.5) / n as f64;
                        let loss = toy.model.loss(&Params::from_vec(vec![x, y]), &p.data).unwrap_or(f64::NAN);
                        (loss + 1e-6).log10()
                    })
                    .collect()
            })
            .collect();
        panel.heatmap = Some(Heatmap { values });
        panel.x_range = Some((x0, x1));
        panel.y_range = Some((y0, y1));
        run.svg(&format!("figure2_{label}.svg"), &panel)?;

        let end_of = |r: RegName| finals.iter().find(|(q, _)| *q == r).map(|(_, e)| e.clone());
        if toy.model.is_kernel_regime() {
            if let (Some(a), Some(g)) = (end_of(RegName::Anchored), end_of(RegName::Geodesic)) {
                let d = dist(&a, &g);
                run.gate(
                    format!("{label}.anchored_matches_geodesic"),
                    d < 1e-4,
                    format!("distance {d:.3e} (limit 1e-4)"),
                );
                if let Some(s) = end_of(RegName::Standard) {
                    let ds = dist(&s, &g);
                    run.gate(
                        format!("{label}.standard_differs"),
                        ds > 1e-3,
                        format!("distance {ds:.3e} (needs > 1e-3)"),
                    );
                }
            }
        } else {
            for r in [RegName::Standard, RegName::Anchored] {
                if let Some(e) = end_of(r) {
                    let d = dist(&e, &theta_star);
                    run.gate(
                        format!("{label}.{}_biased", r.name()),
                        d > 0.01,
                        format!(
                            "endpoint {} is {d:.3e} from ridgeless {} (needs > 0.01)",
                            fmt_point(&e),
                            fmt_point(&theta_star)
                        ),
                    );
                }
            }
            for r in [RegName::Arc, RegName::Geodesic] {
                if let Some(e) = end_of(r) {
                    let d = dist(&e, &theta_star);
                    let dp = distance_to_path(&e, &ref_path);
                    run.gate(
                        format!("{label}.{}_unbiased", r.name()),
                        d < 1e-3 || dp < 1e-3,
                        format!("distance to ridgeless limit {d:.3e}, to its path {dp:.3e} (limit 1e-3)"),
                    );
                }
            }
        }
    }
    run.finish()
}

/// Mean and standard error.
fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// The 16-point regression set `y = sin(πx/2) + σε` on a uniform grid.
pub fn sweep_dataset(points: usize, noise: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5eed));
    let xs: Vec<f64> = (0..points).map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let e: f64 = StandardNormal.sample(&mut rng);
            (std::f64::consts::FRAC_PI_2 * x).sin() + noise * e
        })
        .collect();
    Dataset::scalar(&xs, &ys)
}

/// Per-run summary of the assumption sweep.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub width: usize,
    pub seed: u64,
    pub lambda_min: Vec<f64>,
    pub lambda_max: Vec<f64>,
    pub loss: Vec<f64>,
    pub residual: Vec<f64>,
}

impl SweepRun {
    pub fn min_lambda_min(&self) -> f64 {
        self.lambda_min.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn early_lambda_min(&self) -> f64 {
        self.lambda_min[0]
    }

    pub fn max_lambda_max(&self) -> f64 {
        self.lambda_max.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Epoch-over-epoch strict decrease while the residual exceeds `tol`.
    pub fn loss_monotone(&self, tol: f64) -> bool {
        (1..self.loss.len()).all(|i| self.residual[i - 1] < tol || self.loss[i] < self.loss[i - 1])
    }
}

pub fn sweep_cell(width: usize, seed: u64, p: &SweepParams, flow: &FlowConfig) -> Result<SweepRun> {
    let model = Model::Mlp(MlpSpec::new(1, width, p.activation));
    let data = sweep_dataset(p.points, p.noise, seed)?;
    let theta0 = mup_init(&model, seed)?;
    let cfg = FlowConfig {
        record_every: 1,
        spectral_every: 1,
        store_params: false,
        ..flow.clone()
    };
    let traj = integrate(&model, &data, &theta0, &RegulariserSpec::none(theta0.clone()), 0.0, &cfg)?;
    let pick = |f: fn(&crate::flow::StepRecord) -> Option<f64>| traj.steps.iter().map(|s| f(s).unwrap_or(f64::NAN)).collect();
    Ok(SweepRun {
        width,
        seed,
        lambda_min: pick(|s| s.lambda_min),
        lambda_max: pick(|s| s.lambda_max),
        loss: traj.steps.iter().map(|s| s.loss).collect(),
        residual: traj.steps.iter().map(|s| s.residual_norm).collect(),
    })
}

pub fn run_assumption_sweep(cfg: &ScenarioConfig, p: &SweepParams) -> Result<RunManifest> {
    let mut run = Run::new(cfg);
    let cells: Vec<(usize, u64)> = p
        .widths
        .iter()
        .flat_map(|&w| cfg.seeds.iter().map(move |&s| (w, s)))
        .collect();
    let results: Vec<Result<SweepRun>> = cells.par_iter().map(|&(w, s)| sweep_cell(w, s, p, &cfg.flow)).collect();

    let mut runs_table = Table::new(&[
        "width",
        "seed",
        "epochs",
        "early_lambda_min",
        "min_lambda_min",
        "max_lambda_max",
        "final_loss",
        "loss_monotone",
        "status",
    ]);
    let mut ok: Vec<SweepRun> = Vec::new();
    for ((w, s), r) in cells.iter().zip(results) {
        match r {
            Ok(r) => {
                runs_table.push(row![
                    *w,
                    *s,
                    r.loss.len() - 1,
                    r.early_lambda_min(),
                    r.min_lambda_min(),
                    r.max_lambda_max(),
                    *r.loss.last().expect("non-empty"),
                    r.loss_monotone(cfg.flow.residual_tol),
                    "ok"
                ]);
                ok.push(r);
            }
            Err(e) => {
                let nan = f64::NAN;
                runs_table.push(row![*w, *s, 0usize, nan, nan, nan, nan, false, format!("failed: {e}")]);
                run.failed_cells.push(format!("width {w} seed {s}: {e}"));
            }
        }
    }
    run.csv("sweep_runs.csv", &runs_table)?;

    let mut panels = [
        Panel::new("lambda_min(K)", "epoch", "lambda_min"),
        Panel::new("lambda_max(K)", "epoch", "lambda_max"),
        Panel::new("training loss", "epoch", "loss"),
    ];
    for panel in &mut panels {
        panel.y_log = true;
    }
    for (wi, &w) in p.widths.iter().enumerate() {
        let runs: Vec<&SweepRun> = ok.iter().filter(|r| r.width == w).collect();
        let epochs = runs.iter().map(|r| r.loss.len()).max().unwrap_or(0);
        let mut table = Table::new(&[
            "epoch",
            "runs",
            "lambda_min_mean",
            "lambda_min_se",
            "lambda_max_mean",
            "lambda_max_se",
            "loss_mean",
            "loss_se",
        ]);
        let mut series: [Vec<(f64, f64, f64)>; 3] = Default::default();
        for e in 0..epochs {
            let live: Vec<&&SweepRun> = runs.iter().filter(|r| r.loss.len() > e).collect();
            let stats = [
                mean_se(&live.iter().map(|r| r.lambda_min[e]).collect::<Vec<_>>()),
                mean_se(&live.iter().map(|r| r.lambda_max[e]).collect::<Vec<_>>()),
                mean_se(&live.iter().map(|r| r.loss[e]).collect::<Vec<_>>()),
            ];
            table.push(row![
                e,
                live.len(),
                stats[0].0,
                stats[0].1,
                stats[1].0,
                stats[1].1,
                stats[2].0,
                stats[2].1
            ]);
            for (k, (m, se)) in stats.iter().enumerate() {
                series[k].push((e as f64, *m, *se));
            }
        }
        run.csv(&format!("sweep_width_{w}.csv"), &table)?;
        for (panel, pts) in panels.iter_mut().zip(&series) {
            let mut s = Series::line(
                &format!("width {w}"),
                pts.iter().map(|&(e, m, _)| (e, m)).collect(),
                PALETTE[wi % PALETTE.len()],
            );
            s.band = pts.iter().map(|&(e, m, se)| (e, m - se, m + se)).collect();
            panel.series.push(s);
        }
    }
    for (panel, name) in panels.iter().zip(["lambda_min", "lambda_max", "loss"]) {
        run.svg(&format!("sweep_{name}.svg"), panel)?;
    }

    for r in &ok {
        let tag = format!("width{}_seed{}", r.width, r.seed);
        let (lo, early) = (r.min_lambda_min(), r.early_lambda_min());
        run.gate(
            format!("{tag}.lambda_min_bounded_away"),
            lo > 0.0 && lo >= 0.5 * early,
            format!("min lambda_min {lo:.4e}, early level {early:.4e} (needs > 0 and >= half)"),
        );
        run.gate(
            format!("{tag}.loss_monotone"),
            r.loss_monotone(cfg.flow.residual_tol),
            format!(
                "final loss {:.4e} after {} epochs",
                r.loss.last().expect("non-empty"),
                r.loss.len() - 1
            ),
        );
        if r.width <= 256 {
            let hi = r.max_lambda_max();
            run.gate(
                format!("{tag}.lambda_max_finite"),
                hi.is_finite(),
                format!("max lambda_max {hi:.4e}"),
            );
        }
    }
    run.finish()
}

/// One sandwich row: the bounds and the energy at a recorded step.
#[derive(Debug, Clone)]
pub struct SandwichRow {
    pub index: usize,
    pub t: f64,
    pub c: f64,
    pub lower: f64,
    pub energy: f64,
    pub upper: f64,
    pub residual: f64,
    pub constant_speed: f64,
}

impl SandwichRow {
    /// `lower ≤ E ≤ upper` with relative slack `rel`.
    pub fn holds(&self, rel: f64) -> bool {
        let slack = |v: f64| rel * v.abs() + 1e-12;
        self.lower <= self.energy + slack(self.energy) && self.energy <= self.upper + slack(self.upper)
    }
}

pub fn sandwich_rows(
    model: &Model,
    data: &Dataset,
    theta0: &Params,
    flow: &FlowConfig,
    every: usize,
    segments: usize,
) -> Result<Vec<SandwichRow>> {
    let reference = reference_run(model, data, theta0, flow)?;
    let indices: Vec<usize> = (0..reference.steps.len()).step_by(every).collect();
    indices
        .par_iter()
        .map(|&i| {
            let step = &reference.steps[i];
            let theta = step.theta.as_ref().expect("stored");
            let mut prob = EnergyProblem::new(model, data, theta0.clone(), step.outputs.clone());
            prob.segments = segments;
            let res = solve_horizontal_energy(&prob)?;
            Ok(SandwichRow {
                index: i,
                t: step.t,
                c: step.outputs[0],
                lower: (theta - theta0).norm_squared(),
                energy: res.energy,
                upper: step.arc_length.powi(2),
                residual: res.endpoint_residual,
                constant_speed: constant_speed_check(&res.path),
            })
        })
        .collect()
}

pub fn run_sandwich(cfg: &ScenarioConfig, p: &SandwichParams) -> Result<RunManifest> {
    let mut run = Run::new(cfg);
    let rows = sandwich_rows(&p.toy.model, &p.data, &p.toy.theta0, &cfg.flow, p.every, p.segments)?;
    let mut table = Table::new(&[
        "index",
        "t",
        "c",
        "anchored_lower",
        "energy",
        "arc_upper",
        "endpoint_residual",
        "constant_speed_ratio",
    ]);
    for r in &rows {
        table.push(row![
            r.index,
            r.t,
            r.c,
            r.lower,
            r.energy,
            r.upper,
            r.residual,
            r.constant_speed
        ]);
    }
    run.csv("sandwich.csv", &table)?;
    let mut panel = Panel::new(&format!("{} toy: sandwich", p.toy.label()), "t", "value");
    for (i, (name, f)) in [
        ("|theta - theta0|^2", (|r: &SandwichRow| r.lower) as fn(&SandwichRow) -> f64),
        ("energy", |r| r.energy),
        ("s^2", |r| r.upper),
    ]
    .into_iter()
    .enumerate()
    {
        panel
            .series
            .push(Series::line(name, rows.iter().map(|r| (r.t, f(r))).collect(), PALETTE[i]));
    }
    run.svg("sandwich.svg", &panel)?;
    let bad: Vec<usize> = rows.iter().filter(|r| !r.holds(1e-4)).map(|r| r.index).collect();
    run.gate(
        "bounds_hold",
        bad.is_empty(),
        format!("{} rows checked, violations at {bad:?}", rows.len()),
    );
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    run.gate(
        "solves_converged",
        worst < 1e-6,
        format!("worst endpoint residual {worst:.3e} (limit 1e-6)"),
    );
    run.finish()
}

/// Closest point to `p` on the zero set of the toy's single-output
/// residual: the line `θ₁ + θ₂ = y/x` or the hyperbola branch
/// `θ₁θ₂ = y/x` through `p`'s quadrant.
pub fn closest_interpolator(model: &Model, data: &Dataset, p: &Params) -> Option<Params> {
    if data.len() != 1 || data.inputs()[0][0] == 0.0 {
        return None;
    }
    let k = data.targets()[0] / data.inputs()[0][0];
    match model {
        Model::LinearToy => {
            let shift = (k - p[0] - p[1]) / 2.0;
            Some(Params::from_vec(vec![p[0] + shift, p[1] + shift]))
        }
        Model::BilinearToy => {
            // stationarity of (a − p₁)² + (k/a − p₂)² in a
            let sign = if p[0] != 0.0 { p[0].signum() } else { 1.0 };
            let f = |a: f64| (a - p[0]) - (k / a - p[1]) * k / (a * a);
            let df = |a: f64| 1.0 + k * k / a.powi(4) + 2.0 * k * (k / a - p[1]) / a.powi(3);
            let mut a = sign * k.abs().sqrt().max(p[0].abs());
            for _ in 0..100 {
                let step = f(a) / df(a);
                let next = a - step;
                a = if next.signum() == sign { next } else { 0.5 * a };
                if step.abs() < 1e-15 * a.abs() {
                    break;
                }
            }
            Some(Params::from_vec(vec![a, k / a]))
        }
        Model::Mlp(_) => None,
    }
}

/// One regulariser instance of the vanishing-limit study.
#[derive(Debug, Clone)]
struct LimitCell {
    toy: usize,
    reg: RegName,
    a: f64,
    b: f64,
}

pub fn run_vanishing_limit(cfg: &ScenarioConfig, p: &LimitParams) -> Result<RunManifest> {
    let mut run = Run::new(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seeds[0]);
    let samples: Vec<(f64, f64)> = (0..p.ab_samples)
        .map(|_| {
            let a = rng.random_range(p.ab_a_range.0..=p.ab_a_range.1);
            let b = rng.random_range(p.ab_b_range.0..=p.ab_b_range.1);
            (a, b)
        })
        .collect();
    let mut cells = Vec::new();
    for t in 0..p.toys.len() {
        for &reg in &p.regularisers {
            if reg == RegName::QuadraticAb {
                cells.extend(samples.iter().map(|&(a, b)| LimitCell { toy: t, reg, a, b }));
            } else {
                cells.push(LimitCell {
                    toy: t,
                    reg,
                    a: 1.0,
                    b: 0.0,
                });
            }
        }
    }
    let flow_limits: Vec<Params> = p
        .toys
        .par_iter()
        .map(|toy| Ok(reference_run(&toy.model, &p.data, &toy.theta0, &cfg.flow)?.theta_final))
        .collect::<Result<_>>()?;
    let results: Vec<Result<Vec<crate::flow::LimitPoint>>> = cells
        .par_iter()
        .map(|c| {
            let toy = &p.toys[c.toy];
            let anchor = toy.theta0.clone();
            let spec = match c.reg {
                RegName::Standard => RegulariserSpec::standard(anchor),
                RegName::Anchored => RegulariserSpec::anchored(anchor),
                RegName::QuadraticAb => {
                    let n = p.data.len();
                    RegulariserSpec::quadratic_ab(&toy.model, &p.data, anchor, c.a, DMatrix::identity(n, n) * c.b)?
                }
                other => return Err(GeoflowError::Config(format!("unsupported regulariser {}", other.name()))),
            };
            vanishing_lambda_limit(&toy.model, &p.data, &toy.theta0, &spec, &p.lambdas, &cfg.flow, p.horizon_cap)
        })
        .collect();

    let mut summary = Table::new(&[
        "model",
        "regulariser",
        "a",
        "b",
        "limit_theta1",
        "limit_theta2",
        "distance_to_flow_limit",
        "oracle_theta1",
        "oracle_theta2",
        "distance_to_oracle",
    ]);
    let mut per_toy: Vec<Table> = p
        .toys
        .iter()
        .map(|_| Table::new(&["regulariser", "a", "b", "lambda", "theta1", "theta2", "equilibrium", "time"]))
        .collect();
    let mut panels: Vec<Panel> = p
        .toys
        .iter()
        .map(|t| Panel::new(&format!("{} toy: regularised equilibria", t.label()), "theta1", "theta2"))
        .collect();
    // (toy, reg, b, distance to flow limit, distance to oracle)
    let mut outcomes: Vec<(usize, RegName, f64, f64, Option<f64>, Params)> = Vec::new();
    for (i, (c, r)) in cells.iter().zip(results).enumerate() {
        let toy = &p.toys[c.toy];
        let points = match r {
            Ok(pts) => pts,
            Err(e) => {
                run.failed_cells
                    .push(format!("{}/{} a={} b={}: {e}", toy.label(), c.reg.name(), c.a, c.b));
                continue;
            }
        };
        for pt in &points {
            per_toy[c.toy].push(row![
                c.reg.name(),
                c.a,
                c.b,
                pt.lambda,
                pt.theta[0],
                pt.theta[1],
                pt.equilibrium,
                pt.time
            ]);
        }
        let Some(limit) = extrapolate_to_zero(&points) else { continue };
        let d_flow = dist(&limit, &flow_limits[c.toy]);
        let oracle = match c.reg {
            RegName::Anchored => closest_interpolator(&toy.model, &p.data, &toy.theta0),
            RegName::Standard => closest_interpolator(&toy.model, &p.data, &Params::zeros(2)),
            _ => None,
        };
        let d_oracle = oracle.as_ref().map(|o| dist(&limit, o));
        summary.push(row![
            toy.label(),
            c.reg.name(),
            c.a,
            c.b,
            limit[0],
            limit[1],
            d_flow,
            oracle.as_ref().map(|o| o[0]),
            oracle.as_ref().map(|o| o[1]),
            d_oracle
        ]);
        let mut sorted = points.clone();
        sorted.sort_by(|x, y| y.lambda.total_cmp(&x.lambda));
        let mut line: Vec<(f64, f64)> = sorted.iter().map(|pt| (pt.theta[0], pt.theta[1])).collect();
        line.push((limit[0], limit[1]));
        let name = if c.reg == RegName::QuadraticAb {
            format!("a={:.2} b={:.2}", c.a, c.b)
        } else {
            c.reg.name().to_string()
        };
        panels[c.toy]
            .series
            .push(Series::line(&name, line, PALETTE[i % PALETTE.len()]));
        outcomes.push((c.toy, c.reg, c.b, d_flow, d_oracle, limit));
    }
    for (t, toy) in p.toys.iter().enumerate() {
        run.csv(&format!("limits_{}.csv", toy.label()), &per_toy[t])?;
        let fl = &flow_limits[t];
        let mut s = Series::line("ridgeless limit", vec![(fl[0], fl[1]), (fl[0], fl[1])], "#000000");
        s.dashed = true;
        panels[t].series.push(s);
        run.svg(&format!("limits_{}.svg", toy.label()), &panels[t])?;
    }
    run.csv("limits_summary.csv", &summary)?;

    for (t, toy) in p.toys.iter().enumerate() {
        let label = toy.label();
        let mine: Vec<_> = outcomes.iter().filter(|o| o.0 == t).collect();
        if toy.model.is_kernel_regime() {
            let worst = mine.iter().map(|o| o.3).fold(0.0, f64::max);
            run.gate(
                format!("{label}.limits_shared"),
                !mine.is_empty() && worst < 1e-4,
                format!(
                    "{} regularisers, largest distance to the ridgeless limit {worst:.3e} (limit 1e-4)",
                    mine.len()
                ),
            );
            continue;
        }
        for reg in [RegName::Anchored, RegName::Standard] {
            if let Some(o) = mine.iter().find(|o| o.1 == reg) {
                run.gate(
                    format!("{label}.{}_biased", reg.name()),
                    o.3 > 0.01,
                    format!(
                        "limit {} is {:.3e} from the ridgeless limit (needs > 0.01)",
                        fmt_point(&o.5),
                        o.3
                    ),
                );
                if let Some(d) = o.4 {
                    run.gate(
                        format!("{label}.{}_matches_oracle", reg.name()),
                        d < 1e-3,
                        format!("distance {d:.3e} to the closest interpolator (limit 1e-3)"),
                    );
                }
            }
        }
        if let (Some(a), Some(s)) = (
            mine.iter().find(|o| o.1 == RegName::Anchored),
            mine.iter().find(|o| o.1 == RegName::Standard),
        ) {
            let d = dist(&a.5, &s.5);
            run.gate(
                format!("{label}.standard_distinct"),
                d > 0.01,
                format!("standard vs anchored limits {d:.3e} apart"),
            );
        }
        let ab: Vec<_> = mine.iter().filter(|o| o.1 == RegName::QuadraticAb && o.2 != 0.0).collect();
        if !ab.is_empty() {
            let best = ab.iter().map(|o| o.3).fold(0.0, f64::max);
            run.gate(
                format!("{label}.quadratic_ab_biased"),
                best > 1e-3,
                format!(
                    "largest distance {best:.3e} over {} samples with b != 0 (needs > 1e-3)",
                    ab.len()
                ),
            );
        }
    }
    run.finish()
}

pub fn run_gibbs(cfg: &ScenarioConfig, p: &GibbsParams) -> Result<RunManifest> {
    let mut run = Run::new(cfg);
    let mut summary = Table::new(&[
        "model",
        "beta",
        "z",
        "z_refined",
        "bound",
        "c_squared",
        "tail_mass_estimate",
        "lower_bound_margin",
        "z_gaussian",
    ]);
    for toy in &p.toys {
        let label = toy.label();
        let reference = reference_run(&toy.model, &p.data, &toy.theta0, &cfg.flow)?;
        let results: Vec<Result<crate::gibbs::PartitionResult>> = p
            .betas
            .par_iter()
            .map(|&beta| {
                let gc = GibbsConfig {
                    beta,
                    domain: p.domain,
                    quad_points: p.quad_points,
                    grid_points: p.grid_points,
                    segments: p.segments,
                };
                partition_function(&toy.model, &p.data, &toy.theta0, &gc, &reference)
            })
            .collect();
        let mut panel = Panel::new(&format!("{label} toy: exp(-beta E(c))"), "c", "density");
        for (i, (&beta, res)) in p.betas.iter().zip(results).enumerate() {
            let res = match res {
                Ok(r) => r,
                Err(e) => {
                    run.failed_cells.push(format!("{label} beta={beta}: {e}"));
                    continue;
                }
            };
            let mut table = Table::new(&["c", "energy", "density"]);
            for (c, e) in res.table.cs.iter().zip(&res.table.energies) {
                table.push(row![*c, *e, (-beta * e).exp()]);
            }
            run.csv(&format!("gibbs_{label}_beta{i}.csv"), &table)?;
            let (lo, hi) = res.domain;
            let z_refined = composite_gauss_legendre(lo, hi, 2 * p.quad_points, |c| Ok((-beta * res.table.value(c)?).exp()))?;
            // in the kernel regime E is the NTK quadratic form, so Z is Gaussian
            let z_gaussian = toy
                .model
                .is_kernel_regime()
                .then(|| (std::f64::consts::PI * res.c_squared / beta).sqrt());
            summary.push(row![
                label,
                beta,
                res.z,
                z_refined,
                res.bound,
                res.c_squared,
                res.tail_mass_estimate,
                res.lower_bound_margin,
                z_gaussian
            ]);
            let tag = format!("{label}.beta{i}");
            run.gate(
                format!("{tag}.below_bound"),
                res.z <= res.bound * (1.0 + 1e-3),
                format!("Z {:.6e}, bound {:.6e}", res.z, res.bound),
            );
            run.gate(
                format!("{tag}.energy_above_quadratic"),
                res.lower_bound_margin >= -1e-6,
                format!("min E(c) - (c - g0)^2/C^2 = {:.3e}", res.lower_bound_margin),
            );
            if let Some(zg) = z_gaussian {
                run.gate(
                    format!("{tag}.gaussian_oracle"),
                    (res.z - zg).abs() < 1e-3,
                    format!("Z {:.6e} vs Gaussian integral {zg:.6e}", res.z),
                );
            }
            let n = 400;
            let pts = (0..=n)
                .map(|k| {
                    let c = lo + (hi - lo) * k as f64 / n as f64;
                    res.table.value(c).map(|e| (c, (-beta * e).exp()))
                })
                .collect::<Result<Vec<_>>>()?;
            panel
                .series
                .push(Series::line(&format!("beta {beta}"), pts, PALETTE[i % PALETTE.len()]));
        }
        run.svg(&format!("gibbs_{label}.svg"), &panel)?;
    }
    run.csv("gibbs_summary.csv", &summary)?;
    run.finish()
}

/// Datasets of the transfer scenario for one seed.
#[derive(Debug, Clone)]
pub struct TransferData {
    pub pretrain: Dataset,
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

pub fn transfer_data(p: &TransferParams, seed: u64) -> Result<TransferData> {
    let f = |x: f64| (std::f64::consts::PI * p.frequency * x).sin();
    let grid = |n: usize| -> Vec<f64> { (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect() };
    let xa = grid(p.pretrain_points);
    let pretrain = Dataset::scalar(&xa, &xa.iter().map(|&x| f(x)).collect::<Vec<_>>())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1));
    let xb: Vec<f64> = (0..p.finetune_points).map(|_| rng.random_range(-1.0..1.0)).collect();
    let yb: Vec<f64> = xb
        .iter()
        .map(|&x| {
            let e: f64 = StandardNormal.sample(&mut rng);
            f(x) + p.noise * e
        })
        .collect();
    let (train, validation) = Dataset::scalar(&xb, &yb)?.split_every(p.validation_every)?;
    let xt: Vec<f64> = (0..p.test_points)
        .map(|i| -1.0 + (2 * i + 1) as f64 / p.test_points as f64)
        .collect();
    let test = Dataset::scalar(&xt, &xt.iter().map(|&x| f(x)).collect::<Vec<_>>())?;
    Ok(TransferData {
        pretrain,
        train,
        validation,
        test,
    })
}

fn mse(model: &Model, theta: &Params, data: &Dataset) -> Result<f64> {
    let out = model.eval_outputs(theta, data)?;
    Ok((out - data.targets()).norm_squared() / data.len() as f64)
}

/// Fine-tuning outcome of one (seed, regulariser, λ) cell.
#[derive(Debug, Clone)]
pub struct TransferCell {
    pub seed: u64,
    pub regulariser: RegName,
    pub lambda: f64,
    /// Test MSE at the checkpoint with the lowest validation MSE.
    pub test_mse_early_stopped: f64,
    pub test_mse_final: f64,
    pub early_stop_t: f64,
    pub t_end: f64,
}

/// Pretrains on the clean task; returns the model, the pretrained
/// parameters and the data.
pub fn transfer_pretrain(p: &TransferParams, seed: u64) -> Result<(Model, Params, TransferData)> {
    let model = Model::Mlp(MlpSpec::new(1, p.width, p.activation));
    let data = transfer_data(p, seed)?;
    let theta0 = mup_init(&model, seed)?;
    let pre = integrate(
        &model,
        &data.pretrain,
        &theta0,
        &RegulariserSpec::none(theta0.clone()),
        0.0,
        &p.pretrain,
    )?;
    Ok((model, pre.theta_final, data))
}

/// Fine-tunes from `theta_pre`. Checkpoints are the flow records after the
/// initial one; `early_stop` picks the lowest validation MSE among them.
pub fn transfer_finetune(
    model: &Model,
    theta_pre: &Params,
    data: &TransferData,
    reg: RegName,
    lambda: f64,
    flow: &FlowConfig,
    seed: u64,
) -> Result<TransferCell> {
    let anchor = theta_pre.clone();
    let spec = match reg {
        RegName::None => RegulariserSpec::none(anchor),
        RegName::Standard => RegulariserSpec::standard(anchor),
        RegName::Anchored => RegulariserSpec::anchored(anchor),
        RegName::Arc => RegulariserSpec::arc(anchor),
        other => return Err(GeoflowError::Config(format!("transfer_toy does not take {}", other.name()))),
    };
    let cfg = FlowConfig {
        residual_tol: 0.0,
        spectral_every: usize::MAX,
        store_params: true,
        ..flow.clone()
    };
    let traj = integrate(model, &data.train, theta_pre, &spec, lambda, &cfg)?;
    let mut best = (f64::INFINITY, traj.steps.len() - 1);
    for (i, s) in traj.steps.iter().enumerate().skip(1) {
        let v = mse(model, s.theta.as_ref().expect("stored"), &data.validation)?;
        if v < best.0 {
            best = (v, i);
        }
    }
    let chosen = traj.steps[best.1].theta.as_ref().expect("stored");
    Ok(TransferCell {
        seed,
        regulariser: reg,
        lambda,
        test_mse_early_stopped: mse(model, chosen, &data.test)?,
        test_mse_final: mse(model, &traj.theta_final, &data.test)?,
        early_stop_t: traj.steps[best.1].t,
        t_end: traj.last().t,
    })
}

pub fn run_transfer_toy(cfg: &ScenarioConfig, p: &TransferParams) -> Result<RunManifest> {
    let mut run = Run::new(cfg);
    let pretrained: Vec<(Model, Params, TransferData)> = cfg
        .seeds
        .par_iter()
        .map(|&s| transfer_pretrain(p, s))
        .collect::<Result<_>>()?;
    let pretrained_mse: Vec<f64> = pretrained
        .iter()
        .map(|(m, th, d)| mse(m, th, &d.test))
        .collect::<Result<_>>()?;

    let mut cells: Vec<(usize, RegName, f64)> = Vec::new();
    for si in 0..cfg.seeds.len() {
        cells.push((si, RegName::None, 0.0));
        for &r in &p.regularisers {
            for &l in &p.lambdas {
                cells.push((si, r, l));
            }
        }
    }
    let results: Vec<Result<TransferCell>> = cells
        .par_iter()
        .map(|&(si, reg, lambda)| {
            let (model, theta, data) = &pretrained[si];
            transfer_finetune(model, theta, data, reg, lambda, &cfg.flow, cfg.seeds[si])
        })
        .collect();
    let mut runs = Table::new(&[
        "seed",
        "regulariser",
        "lambda",
        "test_mse_early_stopped",
        "test_mse_final",
        "early_stop_t",
        "t_end",
    ]);
    let mut ok: Vec<TransferCell> = Vec::new();
    for (cell, r) in cells.iter().zip(results) {
        match r {
            Ok(c) => {
                runs.push(row![
                    c.seed,
                    c.regulariser.name(),
                    c.lambda,
                    c.test_mse_early_stopped,
                    c.test_mse_final,
                    c.early_stop_t,
                    c.t_end
                ]);
                ok.push(c);
            }
            Err(e) => run
                .failed_cells
                .push(format!("seed {} {} lambda={}: {e}", cfg.seeds[cell.0], cell.1.name(), cell.2)),
        }
    }
    run.csv("transfer_runs.csv", &runs)?;

    let stats = |reg: RegName, lambda: f64| -> Option<((f64, f64), f64)> {
        let v: Vec<&TransferCell> = ok.iter().filter(|c| c.regulariser == reg && c.lambda == lambda).collect();
        (v.len() == cfg.seeds.len()).then(|| {
            let es = mean_se(&v.iter().map(|c| c.test_mse_early_stopped).collect::<Vec<_>>());
            let fin = mean_se(&v.iter().map(|c| c.test_mse_final).collect::<Vec<_>>()).0;
            (es, fin)
        })
    };
    let mut table = Table::new(&["regulariser", "lambda", "test_mse_mean", "test_mse_se", "test_mse_final_mean"]);
    let (pre_mean, pre_se) = mean_se(&pretrained_mse);
    table.push(row!["pretrained", 0.0, pre_mean, pre_se, pre_mean]);
    // ridgeless baseline: no early stopping
    let baseline: Vec<f64> = ok
        .iter()
        .filter(|c| c.regulariser == RegName::None)
        .map(|c| c.test_mse_final)
        .collect();
    let baseline = (baseline.len() == cfg.seeds.len()).then(|| mean_se(&baseline));
    if let Some((m, se)) = baseline {
        table.push(row!["ridgeless", 0.0, m, se, m]);
    }
    let mut lambdas = p.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    let mut panel = Panel::new("fine-tuned test MSE (early stopped)", "lambda", "test MSE");
    panel.x_log = true;
    panel.y_log = true;
    for (i, &reg) in p.regularisers.iter().enumerate() {
        let mut pts = Vec::new();
        for &l in &lambdas {
            if let Some(((m, se), fin)) = stats(reg, l) {
                table.push(row![reg.name(), l, m, se, fin]);
                if l > 0.0 {
                    pts.push((l, m));
                }
            }
        }
        panel.series.push(Series::line(reg.name(), pts, PALETTE[i % PALETTE.len()]));
    }
    run.csv("transfer_mse.csv", &table)?;
    let positive: Vec<f64> = lambdas.iter().cloned().filter(|l| *l > 0.0).collect();
    if let (Some((m, _)), Some(&l0), Some(&l1)) = (baseline, positive.first(), positive.last()) {
        let mut s = Series::line("ridgeless", vec![(l0, m), (l1, m)], "#000000");
        s.dashed = true;
        panel.series.push(s);
    }
    run.svg("transfer_mse.svg", &panel)?;

    let mean_at = |reg: RegName, l: f64| stats(reg, l).map(|((m, _), _)| m);
    if let (Some(&largest), Some(&smallest)) = (lambdas.last(), lambdas.first()) {
        if p.regularisers.contains(&RegName::Arc) {
            if let Some(arc) = mean_at(RegName::Arc, largest) {
                for other in [RegName::Standard, RegName::Anchored] {
                    if let Some(m) = mean_at(other, largest) {
                        run.gate(
                            format!("largest_lambda.arc_below_{}", other.name()),
                            arc < m,
                            format!("lambda {largest}: arc {arc:.5e} vs {} {m:.5e}", other.name()),
                        );
                    }
                }
            }
        }
        let at_small: Vec<(RegName, f64)> = p
            .regularisers
            .iter()
            .filter(|r| **r != RegName::None)
            .filter_map(|&r| mean_at(r, smallest).map(|m| (r, m)))
            .collect();
        if at_small.len() >= 2 {
            let lo = at_small.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
            let hi = at_small.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
            let detail: Vec<String> = at_small.iter().map(|(r, m)| format!("{} {m:.5e}", r.name())).collect();
            run.gate(
                "smallest_lambda.regularisers_agree",
                hi - lo < 0.25 * lo,
                format!("lambda {smallest}: {} (spread must be < 25%)", detail.join(", ")),
            );
        }
    }
    run.finish()
}

/// Builds the toy setup used in examples and tests.
pub fn toy(model: Model, theta0: &[f64]) -> ToySetup {
    ToySetup {
        model,
        theta0: DVector::from_vec(theta0.to_vec()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closest_point_on_hyperbola() {
        let p = Params::from_vec(vec![2.0, 0.1]);
        let q = closest_interpolator(&Model::BilinearToy, &Dataset::unit(), &p).unwrap();
        assert!((q[0] * q[1] - 1.0).abs() < 1e-14);
        // stationarity: p − q is normal to the curve, i.e. parallel to (q₂, q₁)
        let d = &p - &q;
        assert!((d[0] * q[0] - d[1] * q[1]).abs() < 1e-12);
        assert!((q[0] - 2.087_044_89).abs() < 1e-6 && (q[1] - 0.479_146_38).abs() < 1e-6);
        let o = closest_interpolator(&Model::BilinearToy, &Dataset::unit(), &Params::zeros(2)).unwrap();
        assert!((o[0] - 1.0).abs() < 1e-12 && (o[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closest_point_on_line() {
        let q = closest_interpolator(&Model::LinearToy, &Dataset::unit(), &Params::from_vec(vec![0.2, -0.4])).unwrap();
        assert!((q[0] - 0.8).abs() < 1e-15 && (q[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn polyline_distance() {
        let path = vec![Params::from_vec(vec![0.0, 0.0]), Params::from_vec(vec![1.0, 0.0])];
        assert!((distance_to_path(&Params::from_vec(vec![0.5, 0.3]), &path) - 0.3).abs() < 1e-15);
        assert!((distance_to_path(&Params::from_vec(vec![2.0, 0.0]), &path) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mean_and_standard_error() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_se(&[4.0]), (4.0, 0.0));
    }

    #[test]
    fn sweep_dataset_is_seeded() {
        let a = sweep_dataset(16, 0.1, 3).unwrap();
        let b = sweep_dataset(16, 0.1, 3).unwrap();
        let c = sweep_dataset(16, 0.1, 4).unwrap();
        assert_eq!(a.targets(), b.targets());
        assert_ne!(a.targets(), c.targets());
        assert_eq!(a.len(), 16);
    }
}
