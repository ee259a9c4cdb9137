//! One benchmark run: reference data, sampling, training, prediction,
//! metrics and output files.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pinn_core::ct::{self, CtProblem};
use pinn_core::dt::{self, DtProblem, DtSnapshot};
use pinn_core::metrics::{append_summary, rel_l2, RunSummary};
use pinn_core::network::{write_checkpoint, MlpConfig};
use pinn_core::optimizer::{IterationEvent, IterationLog};
use pinn_core::sampler::{derive_seed, rng};
use pinn_core::{Report, SolutionGrid};
use pinn_tableau::TableauCache;

use crate::config::{ProblemKind, RunPlan};
use crate::error::CliError;
use crate::reference::{load_or_generate, time_index};

/// Name of the results ledger inside an output directory.
pub const LEDGER: &str = "ledger.jsonl";

/// Stream offsets for the seeds derived from a run seed.
const SAMPLING_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

#[derive(Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    /// Prediction with the reference attached.
    pub grid: SolutionGrid,
    pub grid_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Training result before files are written.
struct Trained {
    grid: SolutionGrid,
    rel_l2: f64,
    secondary: Option<f64>,
    report: Report,
    network: MlpConfig,
    params: pinn_core::Parameters,
}

/// Execute a run and write its grid, summary, checkpoint and iteration
/// log under the plan's output directory. The summary is also appended to
/// the directory's ledger.
pub fn run(plan: &RunPlan) -> Result<RunOutcome, CliError> {
    run_into(plan, &plan.out_dir.join(LEDGER))
}

/// [`run`] appending to an explicit ledger file.
pub fn run_into(plan: &RunPlan, ledger: &Path) -> Result<RunOutcome, CliError> {
    plan.validate()?;
    std::fs::create_dir_all(&plan.out_dir)?;
    let name = plan.run_name();
    let log_path = plan.out_dir.join(format!("{name}.iterations.csv"));
    let mut iteration_log = IterationLog::new(BufWriter::new(File::create(&log_path)?));

    let started = Instant::now();
    let (reference, _, _) = load_or_generate(&plan.cache_dir, plan.problem, plan.reference.as_ref())?;
    let observer = |e: &IterationEvent<f64>| {
        iteration_log.record(e);
        if e.iteration % 100 == 0 {
            log::info!(
                "{name}: iteration {} loss {:.6e} |grad| {:.3e}",
                e.iteration,
                e.objective,
                e.grad_norm
            );
        }
    };
    let trained = match plan.problem {
        ProblemKind::BurgersCt | ProblemKind::NlsCt => continuous(plan, &reference, observer)?,
        ProblemKind::BurgersDt | ProblemKind::AllenCahnDt => discrete(plan, &reference, observer)?,
    };
    let wall = started.elapsed().as_secs_f64();
    iteration_log.finish()?;

    let summary = summarize(plan, &trained, wall);
    let grid_path = plan.out_dir.join(format!("{name}.csv"));
    trained.grid.write_file(&grid_path)?;
    let checkpoint = plan.out_dir.join(format!("{name}.params"));
    write_checkpoint(
        BufWriter::new(File::create(&checkpoint)?),
        &trained.network,
        &trained.params,
    )?;
    let summary_path = plan.out_dir.join(format!("{name}.summary.json"));
    std::fs::write(&summary_path, summary.to_json_line()? + "\n")?;
    append_summary(ledger, &summary)?;
    log::info!(
        "{name}: rel_l2 {:.4e} after {} iterations ({}), {wall:.1}s",
        summary.rel_l2,
        summary.iterations,
        summary.termination
    );
    Ok(RunOutcome {
        summary,
        grid: trained.grid,
        grid_path,
        summary_path,
    })
}

fn summarize(plan: &RunPlan, trained: &Trained, wall: f64) -> RunSummary {
    let discrete = plan.problem.is_discrete();
    let used = |n: usize, relevant: bool| if relevant { n } else { 0 };
    RunSummary {
        problem: plan.problem.id().to_string(),
        seed: plan.seed,
        architecture: plan.architecture(),
        n_u: used(plan.n_u, plan.problem == ProblemKind::BurgersCt),
        n_f: used(plan.n_f, !discrete),
        n_0: used(plan.n_0, plan.problem == ProblemKind::NlsCt),
        n_b: used(plan.n_b, plan.problem == ProblemKind::NlsCt),
        n_n: used(plan.n_n, discrete),
        q: used(plan.q, discrete),
        dt: if discrete { plan.dt } else { 0.0 },
        rel_l2: trained.rel_l2,
        rel_l2_secondary: trained.secondary,
        iterations: trained.report.iterations,
        final_loss: trained.report.objective,
        wall_time_seconds: wall,
        termination: trained.report.termination.to_string(),
        error: None,
    }
}

/// Summary row for a run that failed before producing a result.
pub fn failed_summary(plan: &RunPlan, error: &CliError) -> RunSummary {
    let discrete = plan.problem.is_discrete();
    RunSummary {
        problem: plan.problem.id().to_string(),
        seed: plan.seed,
        architecture: plan.architecture(),
        n_u: plan.n_u,
        n_f: if discrete { 0 } else { plan.n_f },
        n_0: plan.n_0,
        n_b: plan.n_b,
        n_n: plan.n_n,
        q: plan.q,
        dt: plan.dt,
        rel_l2: f64::MAX,
        rel_l2_secondary: None,
        iterations: 0,
        final_loss: f64::MAX,
        wall_time_seconds: 0.0,
        termination: "failed".into(),
        error: Some(error.to_string()),
    }
}

fn continuous(
    plan: &RunPlan,
    reference: &SolutionGrid,
    observer: impl FnMut(&IterationEvent<f64>),
) -> Result<Trained, CliError> {
    let nls = plan.problem == ProblemKind::NlsCt;
    let mut problem = if nls {
        CtProblem::schrodinger()
    } else {
        CtProblem::burgers()
    };
    problem.network = MlpConfig::new(2, plan.layers, plan.neurons, problem.pde.outputs());
    let mut sampling = rng(derive_seed(plan.seed, SAMPLING_STREAM));
    let mut set = if nls {
        ct::schrodinger_training_set(&problem, reference, plan.n_0, plan.n_b, plan.n_f, &mut sampling)?
    } else {
        ct::burgers_training_set(&problem, reference, plan.n_u, plan.n_f, &mut sampling)?
    };
    set.add_noise(plan.noise_std, &mut rng(derive_seed(plan.seed, NOISE_STREAM)))?;
    log::info!(
        "{}: {} data points, {} boundary times, {} collocation points, {} parameters",
        plan.problem,
        set.data.len(),
        set.boundary_times.len(),
        set.collocation.len(),
        problem.network.parameter_count()
    );
    let (params, report) = ct::train_ct_observed(&problem, &set, plan.seed, &plan.optimizer, plan.workers, observer)?;

    let mut grid = ct::predict_grid(&problem, params.as_slice(), reference.t(), reference.x())?;
    let exact = |label: &str| -> Result<Vec<f64>, CliError> {
        let c = reference
            .component(label)
            .ok_or_else(|| CliError::Other(format!("reference has no component {label}")))?;
        Ok(c.exact.clone().unwrap_or_else(|| c.values.clone()))
    };
    for label in problem.pde.labels() {
        grid.set_exact(label, exact(label)?)?;
    }
    let (rel, secondary) = if nls {
        // |h| is the headline number; (u, v) jointly is reported alongside.
        let joint_pred: Vec<f64> = ["u", "v"]
            .iter()
            .flat_map(|l| grid.component(l).map(|c| c.values.clone()).unwrap_or_default())
            .collect();
        let joint_exact: Vec<f64> = [exact("u")?, exact("v")?].concat();
        (grid.rel_l2("h_abs")?, Some(rel_l2(&joint_pred, &joint_exact)?))
    } else {
        (grid.rel_l2("u")?, None)
    };
    Ok(Trained {
        grid,
        rel_l2: rel,
        secondary,
        report,
        network: problem.network,
        params,
    })
}

fn discrete(
    plan: &RunPlan,
    reference: &SolutionGrid,
    mut observer: impl FnMut(&IterationEvent<f64>),
) -> Result<Trained, CliError> {
    let i0 = time_index(reference, plan.t_start)?;
    let i1 = time_index(reference, plan.t_end())?;
    let cache = TableauCache::new(plan.cache_dir.join("tableaux"));
    let (tableau, _) = cache.get_or_generate(plan.q, plan.precision_bits)?;
    let mut problem = match plan.problem {
        ProblemKind::BurgersDt => DtProblem::burgers(tableau, plan.dt),
        _ => DtProblem::allen_cahn(tableau, plan.dt),
    };
    problem.network = MlpConfig::new(1, plan.layers, plan.neurons, plan.q + 1);
    let mut snapshot = DtSnapshot::sample(
        reference,
        "u",
        i0,
        plan.n_n,
        &mut rng(derive_seed(plan.seed, SAMPLING_STREAM)),
    )?;
    snapshot.add_noise(plan.noise_std, &mut rng(derive_seed(plan.seed, NOISE_STREAM)))?;
    log::info!(
        "{}: q={} dt={} steps={} snapshot t={} with {} points, {} parameters",
        plan.problem,
        plan.q,
        plan.dt,
        plan.steps,
        snapshot.t,
        snapshot.x.len(),
        problem.network.parameter_count()
    );
    // Later steps train on the previous step's prediction at the same points.
    let mut trained = None;
    let mut iterations = 0;
    for step in 0..plan.steps {
        if let Some((params, _)) = &trained {
            let params: &pinn_core::Parameters = params;
            snapshot.u = dt::predict_dt(&problem, params.as_slice(), &snapshot.x)?;
            snapshot.t += plan.dt;
        }
        let seed = derive_seed(plan.seed, step as u64);
        let (params, report) =
            dt::train_dt_observed(&problem, &snapshot, seed, &plan.optimizer, plan.workers, &mut observer)?;
        iterations += report.iterations;
        trained = Some((params, report));
    }
    let (params, mut report) = trained.expect("at least one step");
    report.iterations = iterations;

    let x = reference.x().to_vec();
    let pred = dt::predict_dt(&problem, params.as_slice(), &x)?;
    let exact = reference
        .row("u", i1)
        .ok_or_else(|| CliError::Other("reference has no component u".into()))?
        .to_vec();
    let mut grid = SolutionGrid::new(vec![reference.t()[i1]], x)?;
    grid.push("u", pred, Some(exact))?;
    let rel = grid.rel_l2("u")?;
    Ok(Trained {
        grid,
        rel_l2: rel,
        secondary: None,
        report,
        network: problem.network,
        params,
    })
}
