//! Runs configured experiments and writes their artifacts.

use std::collections::BTreeMap;
use std::sync::mpsc;
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use stackelberg_core::fisher::{
    distance_trace, equal_split, myopic_br, tatonnement, FisherMarket, FisherTrace, MarketOutcome, MarketSequence,
    MyopicOptions, OnlineFisherSequence, StaticMarket,
};
use stackelberg_core::game::{self, saddle_residual, Profile, StackelbergGame};
use stackelberg_core::losses::{omd_regret, LossSequence};
use stackelberg_core::online::{run_asym_tracking, run_sym_tracking, QuadraticSaddleSequence};
use stackelberg_core::rng::Stream;
use stackelberg_core::solvers::{asymmetric_regret, lmda, max_oracle_md, nested_mda, vanilla_gda, IterateTrace};
use stackelberg_core::Regularizer;

use crate::config::{
    Algorithm, Dynamics, DynamicsSpec, ExperimentConfig, ExperimentKind, ExperimentSpec, FisherOnlineSpec, MarketSource,
    RegretSpec, ScheduleSpec, StackelbergSpec, TrackingSpec,
};
use crate::market_io::read_market;
use crate::output::{emit_csv, ExperimentSummary, RunSummary, Table};
use crate::plot;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub plot: bool,
}

/// One (horizon, seed, sweep value) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub label: String,
    pub seed: u64,
    pub horizon: usize,
    pub drift: f64,
    pub step_scale: f64,
}

pub struct RunOutput {
    pub plan: RunPlan,
    pub table: Table,
    pub metrics: BTreeMap<String, f64>,
    pub violations: usize,
    pub error: Option<String>,
    pub secs: f64,
}

type Metrics = BTreeMap<String, f64>;

fn num(v: f64) -> String {
    let s = format!("{v}");
    s.replace('-', "m")
}

pub fn plans(config: &ExperimentConfig) -> Vec<RunPlan> {
    let (drifts, scales) = match &config.spec {
        ExperimentSpec::Tracking(t) => (t.drifts.clone(), t.step_scales.clone()),
        _ => (vec![f64::NAN], vec![f64::NAN]),
    };
    let mut out = Vec::new();
    for &horizon in &config.horizons {
        for &drift in &drifts {
            for &step_scale in &scales {
                for &seed in &config.seeds {
                    let mut label = format!("T{horizon}");
                    if !drift.is_nan() {
                        label.push_str(&format!("_d{}_s{}", num(drift), num(step_scale)));
                    }
                    label.push_str(&format!("_seed{seed}"));
                    out.push(RunPlan {
                        label,
                        seed,
                        horizon,
                        drift,
                        step_scale,
                    });
                }
            }
        }
    }
    out
}

/// Resolves file references so runs need no IO.
fn resolve(config: &ExperimentConfig) -> Result<Option<FisherMarket>> {
    match &config.spec {
        ExperimentSpec::FisherStatic(s) => Ok(Some(match &s.market {
            MarketSource::Inline(m) => m.clone(),
            MarketSource::File(p) => {
                let path = if p.is_absolute() { p.clone() } else { config.base_dir.join(p) };
                read_market(&path)?
            }
        })),
        _ => Ok(None),
    }
}

/// Runs every plan on a worker pool; this thread alone writes files.
pub fn run_experiment(config: &ExperimentConfig, options: RunOptions) -> Result<ExperimentSummary> {
    let start = Instant::now();
    let market = resolve(config)?;
    std::fs::create_dir_all(&config.out_dir)
        .with_context(|| format!("cannot create output directory {}", config.out_dir.display()))?;
    let plans = plans(config);
    let mut runs: Vec<Option<RunSummary>> = vec![None; plans.len()];
    let (tx, rx) = mpsc::channel::<(usize, RunOutput)>();
    let mut io_error = None;
    std::thread::scope(|s| {
        let plans = &plans;
        let market = market.as_ref();
        s.spawn(move || {
            plans.par_iter().enumerate().for_each_with(tx, |tx, (k, plan)| {
                let _ = tx.send((k, execute(config, market, plan)));
            });
        });
        for (k, out) in rx {
            match write_run(config, &out, options) {
                Ok(csv) => {
                    runs[k] = Some(RunSummary {
                        label: out.plan.label.clone(),
                        seed: out.plan.seed,
                        horizon: out.plan.horizon,
                        metrics: out.metrics,
                        violations: out.violations,
                        error: out.error,
                        wall_clock_secs: out.secs,
                        csv,
                    })
                }
                Err(e) => {
                    io_error.get_or_insert(e);
                }
            }
        }
    });
    if let Some(e) = io_error {
        return Err(e);
    }
    let summary = ExperimentSummary::new(config.kind, runs.into_iter().flatten().collect(), start.elapsed().as_secs_f64());
    let path = config.out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary)?;
    std::fs::write(&path, json + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    Ok(summary)
}

fn write_run(config: &ExperimentConfig, out: &RunOutput, options: RunOptions) -> Result<String> {
    let name = format!("{}.csv", out.plan.label);
    emit_csv(&out.table, &config.out_dir.join(&name))?;
    if options.plot && !out.table.rows.is_empty() {
        let series = plot::series_for(config.kind);
        let title = format!("{} {}", config.kind, out.plan.label);
        plot::render(&out.table, series, &title, &config.out_dir.join(format!("{}.svg", out.plan.label)))?;
    }
    Ok(name)
}

/// Runs one plan. Solver failures become the run's error, prefixed with its
/// label; steps computed before the failure are not kept.
pub fn execute(config: &ExperimentConfig, market: Option<&FisherMarket>, plan: &RunPlan) -> RunOutput {
    let start = Instant::now();
    let result = match &config.spec {
        ExperimentSpec::Stackelberg(s) => stackelberg(s, plan, config.tol),
        ExperimentSpec::FisherStatic(s) => {
            let market = market.expect("fisher-static markets are resolved before running");
            let p0 = initial_prices(&s.dynamics, market.goods(), plan.seed);
            let x0 = equal_split(market);
            fisher(&StaticMarket(market.clone()), &s.dynamics, p0, x0, plan, config.tol)
        }
        ExperimentSpec::FisherOnline(s) => fisher_online(s, plan, config.tol),
        ExperimentSpec::Tracking(s) => tracking(s, config.kind, plan),
        ExperimentSpec::Regret(s) => regret(s, plan, config.tol),
    };
    let secs = start.elapsed().as_secs_f64();
    match result {
        Ok((table, metrics, violations)) => RunOutput {
            plan: plan.clone(),
            table,
            metrics,
            violations,
            error: None,
            secs,
        },
        Err((columns, e)) => RunOutput {
            plan: plan.clone(),
            table: Table::new(columns),
            metrics: Metrics::new(),
            violations: 0,
            error: Some(format!("{}: {e}", plan.label)),
            secs,
        },
    }
}

type Outcome = std::result::Result<(Table, Metrics, usize), (Vec<String>, String)>;

fn exceeds(value: f64, bound: f64, tol: f64) -> bool {
    !(value <= bound + tol * (1.0 + bound.abs()))
}

fn stackelberg_columns(dim_x: usize, dim_y: usize) -> Vec<String> {
    let mut c: Vec<String> = (1..=dim_x).map(|k| format!("x{k}")).collect();
    c.extend((1..=dim_y).map(|k| format!("y{k}")));
    c.extend(["f", "V", "eps", "delta"].map(String::from));
    c
}

fn stackelberg(spec: &StackelbergSpec, plan: &RunPlan, tol: f64) -> Outcome {
    let g = spec.game.game();
    let columns = stackelberg_columns(g.outer_set().dim(), g.inner_set().dim());
    let fail = |e: stackelberg_core::Error| (columns.clone(), e.to_string());
    let t_max = plan.horizon;
    let reg = Regularizer::Euclidean;
    let sched = spec.schedule.at(t_max);
    let inner = spec.inner_schedule.at(t_max);
    let v_star = g.optimal_value();
    let (trace, profile, degenerate): (IterateTrace, Option<Profile>, Option<bool>) = match spec.algorithm {
        Algorithm::MaxOracleMd => {
            let out = max_oracle_md(&g, reg, sched, t_max, &spec.x0).map_err(fail)?;
            (out.trace, Some(out.profile), None)
        }
        Algorithm::NestedMda => {
            let out = nested_mda(&g, reg, reg, sched, inner, t_max, spec.inner_horizon, &spec.x0, &spec.y0).map_err(fail)?;
            (out.trace, Some(out.profile), None)
        }
        Algorithm::Lmda => {
            let out = lmda(&g, &spec.lambda, reg, sched, inner, t_max, &spec.x0, &spec.y0).map_err(fail)?;
            (out.trace, None, Some(out.degenerate))
        }
        Algorithm::VanillaGda => {
            let out = vanilla_gda(&g, reg, sched, inner, t_max, &spec.x0, &spec.y0).map_err(fail)?;
            (out.trace, None, Some(out.degenerate))
        }
    };

    let mut table = Table::new(columns.clone());
    for r in trace.records() {
        let v = game::value_function(&g, &r.x).map_err(fail)?;
        let mut row = r.x.clone();
        row.extend(&r.y);
        row.extend([r.objective, v, v - v_star, v - r.objective]);
        table.push(r.t, row);
    }

    let mut metrics = Metrics::new();
    let mut violations = 0;
    if let Some(avg) = trace.average() {
        metrics.insert("x_bar".into(), avg.x[0]);
        metrics.insert("y_bar".into(), avg.y[0]);
        metrics.insert("x_bar_error".into(), (avg.x[0] - g.outer_solution()).abs());
        let v_bar = game::value_function(&g, &avg.x).map_err(fail)?;
        metrics.insert("eps_bar".into(), v_bar - v_star);
    }
    if let Some(d) = degenerate {
        metrics.insert("degenerate".into(), if d { 1.0 } else { 0.0 });
    }
    let fixed = match spec.schedule {
        ScheduleSpec::FixedHorizon { c, lipschitz } => Some((c, lipschitz)),
        _ => None,
    };
    let sqrt_t = (t_max as f64).sqrt();
    match spec.algorithm {
        Algorithm::MaxOracleMd => {
            let profile = profile.expect("max-oracle returns a profile");
            let regret = asymmetric_regret(&trace, &g, |_| Ok(vec![g.outer_solution()])).map_err(fail)?.average();
            let eps = game::stackelberg_residual(&g, &profile, Some(v_star)).map_err(fail)?;
            let eps = eps.outer_eps.unwrap_or(f64::NAN);
            metrics.insert("asymmetric_regret".into(), regret);
            metrics.insert("eps".into(), eps);
            if let Some((c, l)) = fixed {
                let bound = c * l * 2f64.sqrt() / sqrt_t;
                metrics.insert("bound".into(), bound);
                violations += exceeds(regret, bound, tol) as usize + exceeds(eps, bound, tol) as usize;
            }
        }
        Algorithm::Lmda if spec.lambda[0] == g.lambda_star() => {
            let avg = trace.average().expect("a nonempty trace");
            let res = saddle_residual(
                &g,
                &avg,
                &spec.lambda,
                |x| Ok(g.lagrangian_inner_max(x[0])),
                |y| Ok(g.lagrangian_outer_min(y[0])),
            )
            .map_err(fail)?;
            metrics.insert("saddle_residual".into(), res);
            if let Some((c, l)) = fixed {
                let bound = 2.0 * 2f64.sqrt() * l * c / sqrt_t;
                metrics.insert("bound".into(), bound);
                violations += exceeds(res, bound, tol) as usize;
            }
        }
        _ => {}
    }
    Ok((table, metrics, violations))
}

fn initial_prices(d: &DynamicsSpec, goods: usize, seed: u64) -> Vec<f64> {
    match &d.initial_prices {
        Some(p) => p.clone(),
        None => {
            let mut rng = Stream::derive(seed, u64::MAX);
            (0..goods).map(|_| rng.uniform(d.price_range.0, d.price_range.1)).collect()
        }
    }
}

fn fisher_columns(goods: usize) -> Vec<String> {
    let mut c = vec!["distance".to_string(), "clearing_residual".to_string()];
    c.extend((1..=goods).map(|k| format!("p{k}")));
    c
}

/// `max_j |sum_i x_ij - s_j|` over priced goods, excess demand for free ones.
fn clearing_residual(market: &FisherMarket, outcome: &MarketOutcome) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, s) in market.supplies().iter().enumerate() {
        let used: f64 = outcome.allocation.iter().map(|row| row[j]).sum();
        let gap = if outcome.prices[j] > 0.0 { (used - s).abs() } else { (used - s).max(0.0) };
        worst = worst.max(gap);
    }
    worst
}

fn window_mean(d: &[f64], lo: usize, hi: usize) -> f64 {
    let hi = hi.min(d.len());
    let lo = lo.clamp(1, hi.max(1));
    d[lo - 1..hi].iter().sum::<f64>() / (hi + 1 - lo) as f64
}

fn fisher<S: MarketSequence + ?Sized>(
    seq: &S,
    d: &DynamicsSpec,
    p0: Vec<f64>,
    x0: Vec<Vec<f64>>,
    plan: &RunPlan,
    tol: f64,
) -> Outcome {
    let columns = fisher_columns(seq.goods());
    let fail = |e: stackelberg_core::Error| (columns.clone(), e.to_string());
    let t_max = plan.horizon;
    let trace: FisherTrace = match d.dynamics {
        Dynamics::Tatonnement => tatonnement(seq, d.price_schedule.at(t_max), &p0, t_max),
        Dynamics::Myopic => myopic_br(
            seq,
            d.price_schedule.at(t_max),
            d.allocation_schedule.at(t_max),
            &p0,
            &x0,
            t_max,
            MyopicOptions {
                budget_projection: d.budget_projection,
            },
        ),
    }
    .map_err(fail)?;
    let dist = distance_trace(seq, &trace, tol).map_err(fail)?;
    let mut table = Table::new(columns.clone());
    let mut residual = 0.0;
    for (k, (outcome, dk)) in trace.steps.iter().zip(&dist).enumerate() {
        let t = k + 1;
        residual = clearing_residual(&seq.market(t).map_err(fail)?, outcome);
        let mut row = vec![*dk, residual];
        row.extend(&outcome.prices);
        table.push(t, row);
    }
    let n = dist.len();
    let mut metrics = Metrics::new();
    metrics.insert("final_distance".into(), dist[n - 1]);
    metrics.insert("final_clearing_residual".into(), residual);
    metrics.insert("mean_distance".into(), window_mean(&dist, 1, n));
    metrics.insert("mean_distance_early".into(), window_mean(&dist, 1, 100));
    metrics.insert("mean_distance_late".into(), window_mean(&dist, n.div_ceil(2), n));
    metrics.insert("min_distance".into(), dist.iter().copied().fold(f64::INFINITY, f64::min));
    Ok((table, metrics, 0))
}

fn fisher_online(s: &FisherOnlineSpec, plan: &RunPlan, tol: f64) -> Outcome {
    let seq = OnlineFisherSequence {
        kind: s.utility,
        buyers: s.buyers,
        goods: s.goods,
        ranges: s.ranges,
        seed: plan.seed,
    };
    let p0 = match &s.dynamics.initial_prices {
        Some(p) => p.clone(),
        None => seq.initial_prices(s.dynamics.price_range),
    };
    let first = seq.market(1).map_err(|e| (fisher_columns(s.goods), e.to_string()))?;
    fisher(&seq, &s.dynamics, p0, equal_split(&first), plan, tol)
}

fn tracking(s: &TrackingSpec, kind: ExperimentKind, plan: &RunPlan) -> Outcome {
    let columns: Vec<String> = ["dist_x", "dist_y", "bound_sum", "bound_simple"].map(String::from).to_vec();
    let fail = |e: stackelberg_core::Error| (columns.clone(), e.to_string());
    let seq = QuadraticSaddleSequence::generate(
        s.mu_x,
        s.mu_y,
        s.coupling.clone(),
        s.dim_x,
        s.dim_y,
        plan.drift,
        plan.horizon,
        plan.seed,
    )
    .map_err(fail)?;
    let report = if kind == ExperimentKind::RobustnessAsym {
        let l = seq.lipschitz().max(seq.value_smoothness());
        run_asym_tracking(&seq, plan.step_scale * 2.0 / (s.mu_x + l), &s.x0)
    } else {
        let l = seq.lipschitz();
        let (ex, ey) = (2.0 / (s.mu_x + l), 2.0 / (s.mu_y + l));
        run_sym_tracking(&seq, plan.step_scale * ex, plan.step_scale * ey, &s.x0, &s.y0)
    }
    .map_err(fail)?;
    let mut table = Table::new(columns.clone());
    for r in &report.rows {
        table.push(r.t, vec![r.dist_x, r.dist_y, r.bound_sum, r.bound_simple]);
    }
    let last = report.rows.last().expect("tracking reports start at t = 0");
    let mut metrics = Metrics::new();
    metrics.insert("delta".into(), report.delta);
    metrics.insert("lipschitz".into(), report.lipschitz);
    metrics.insert("final_dist_x".into(), last.dist_x);
    metrics.insert("final_dist_y".into(), last.dist_y);
    metrics.insert("final_bound_sum".into(), last.bound_sum);
    metrics.insert("final_bound_simple".into(), last.bound_simple);
    let worst = report
        .rows
        .iter()
        .map(|r| (r.dist_x + r.dist_y) / r.bound_simple)
        .fold(0.0, f64::max);
    metrics.insert("max_distance_to_bound".into(), worst);
    Ok((table, metrics, report.violations))
}

fn regret(s: &RegretSpec, plan: &RunPlan, tol: f64) -> Outcome {
    let columns: Vec<String> = ["loss", "comparator_loss", "avg_regret", "bound"].map(String::from).to_vec();
    let fail = |e: stackelberg_core::Error| (columns.clone(), e.to_string());
    let seq = LossSequence::new(s.family, s.dim, plan.seed).map_err(fail)?;
    let (run, ledger) = omd_regret(&seq, plan.horizon).map_err(fail)?;
    let best = seq.comparator(plan.horizon);
    let bound = seq.regret_bound(plan.horizon);
    let mut table = Table::new(columns.clone());
    let (mut realized, mut comparator) = (0.0, 0.0);
    for r in run.trace.records() {
        use stackelberg_core::solvers::OnlineLoss;
        let c = seq.loss(r.t, &best);
        realized += r.objective;
        comparator += c;
        table.push(r.t, vec![r.objective, c, (realized - comparator) / r.t as f64, bound]);
    }
    let avg = ledger.average();
    let mut metrics = Metrics::new();
    metrics.insert("avg_regret".into(), avg);
    metrics.insert("bound".into(), bound);
    metrics.insert("regret_to_bound".into(), avg / bound);
    Ok((table, metrics, exceeds(avg, bound, tol) as usize))
}
