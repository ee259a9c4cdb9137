//! Parameter sweeps: the Cartesian product of a few config axes, one run
//! per cell, results collected in a shared ledger and a summary table.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use pinn_core::metrics::{append_summary, RunSummary};
use pinn_core::sampler::derive_seed;
use pinn_tableau::TableauCache;

use crate::config::{RunConfig, RunPlan};
use crate::error::CliError;
use crate::pipeline::{failed_summary, run_into, LEDGER};
use crate::reference::load_or_generate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Number of cells run at the same time.
    #[serde(default = "one")]
    pub parallel: usize,
    pub base: RunConfig,
    #[serde(default)]
    pub axes: SweepAxes,
}

fn one() -> usize {
    1
}

/// Values to sweep; absent axes keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    pub n_u: Option<Vec<usize>>,
    pub n_f: Option<Vec<usize>>,
    pub layers: Option<Vec<usize>>,
    pub neurons: Option<Vec<usize>>,
    pub q: Option<Vec<usize>>,
    pub dt: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisValue {
    Count(usize),
    Real(f64),
}

impl std::fmt::Display for AxisValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisValue::Count(n) => write!(f, "{n}"),
            AxisValue::Real(v) => write!(f, "{v}"),
        }
    }
}

impl SweepAxes {
    /// Active axes in fixed order with their values.
    pub fn active(&self) -> Vec<(&'static str, Vec<AxisValue>)> {
        let counts = |v: &Option<Vec<usize>>| v.as_ref().map(|v| v.iter().map(|&n| AxisValue::Count(n)).collect());
        let axes: [(&'static str, Option<Vec<AxisValue>>); 6] = [
            ("n_u", counts(&self.n_u)),
            ("n_f", counts(&self.n_f)),
            ("layers", counts(&self.layers)),
            ("neurons", counts(&self.neurons)),
            ("q", counts(&self.q)),
            (
                "dt",
                self.dt
                    .as_ref()
                    .map(|v| v.iter().map(|&x| AxisValue::Real(x)).collect()),
            ),
        ];
        axes.into_iter().filter_map(|(n, v)| v.map(|v| (n, v))).collect()
    }
}

/// One cell of the product.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub values: Vec<(&'static str, AxisValue)>,
    pub config: RunConfig,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Cells in row-major order over the active axes, each with its own
    /// seed derived from the base seed and the cell index.
    pub fn cells(&self) -> Result<Vec<Cell>, CliError> {
        let axes = self.axes.active();
        if axes.iter().any(|(_, v)| v.is_empty()) {
            return Err(CliError::Config("sweep axes must not be empty".into()));
        }
        if self.parallel == 0 {
            return Err(CliError::Config("parallel must be at least 1".into()));
        }
        let total: usize = axes.iter().map(|(_, v)| v.len()).product();
        let base_seed = self.base.seed.unwrap_or(1);
        let mut cells = Vec::with_capacity(total);
        for index in 0..total {
            let mut rest = index;
            let mut values = vec![("", AxisValue::Count(0)); axes.len()];
            for (k, (name, vals)) in axes.iter().enumerate().rev() {
                values[k] = (*name, vals[rest % vals.len()]);
                rest /= vals.len();
            }
            let mut config = self.base.clone();
            config.seed = Some(derive_seed(base_seed, index as u64));
            for &(name, v) in &values {
                match (name, v) {
                    ("n_u", AxisValue::Count(n)) => config.n_u = Some(n),
                    ("n_f", AxisValue::Count(n)) => config.n_f = Some(n),
                    ("layers", AxisValue::Count(n)) => config.layers = Some(n),
                    ("neurons", AxisValue::Count(n)) => config.neurons = Some(n),
                    ("q", AxisValue::Count(n)) => config.q = Some(n),
                    ("dt", AxisValue::Real(x)) => config.dt = Some(x),
                    _ => unreachable!("axis {name} with value {v}"),
                }
            }
            cells.push(Cell { index, values, config });
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: Cell,
    pub summary: RunSummary,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub ledger: PathBuf,
    pub markdown: String,
    pub csv: String,
}

/// Run every cell. Cell failures are recorded in the ledger and do not
/// stop the sweep; only configuration errors in the sweep itself do.
pub fn sweep(config: &SweepConfig, out_dir: &Path) -> Result<SweepOutcome, CliError> {
    let cells = config.cells()?;
    std::fs::create_dir_all(out_dir)?;
    let ledger = out_dir.join(LEDGER);
    let cache_dir = config.base.cache_dir.clone().unwrap_or_else(|| out_dir.join("cache"));

    let plans: Vec<Result<RunPlan, CliError>> = cells
        .iter()
        .map(|c| {
            let mut rc = c.config.clone();
            rc.out_dir = Some(out_dir.join(format!("cell-{:03}", c.index)));
            rc.cache_dir = Some(cache_dir.clone());
            rc.resolve()
        })
        .collect();
    prefetch(&plans, &cache_dir);

    let results: Mutex<Vec<Option<RunSummary>>> = Mutex::new(vec![None; cells.len()]);
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        if i >= cells.len() {
            break;
        }
        let summary = match &plans[i] {
            Ok(plan) => match run_into(plan, &ledger) {
                Ok(outcome) => outcome.summary,
                Err(e) => record_failure(plan, &e, &ledger),
            },
            Err(e) => {
                let mut fallback = cells[i].config.clone();
                fallback.optimizer = None;
                fallback.reference = None;
                match fallback.resolve() {
                    Ok(plan) => record_failure(&plan, e, &ledger),
                    Err(_) => record_failure(&rough_plan(&cells[i]), e, &ledger),
                }
            }
        };
        results.lock().expect("sweep result lock")[i] = Some(summary);
    };
    std::thread::scope(|s| {
        for _ in 0..config.parallel.min(cells.len()).max(1) {
            s.spawn(worker);
        }
    });

    let rows: Vec<SweepRow> = cells
        .into_iter()
        .zip(results.into_inner().expect("sweep result lock"))
        .map(|(cell, summary)| SweepRow {
            cell,
            summary: summary.expect("every cell ran"),
        })
        .collect();
    let markdown = markdown_table(&config.axes, &rows);
    let csv = csv_table(&config.axes, &rows);
    std::fs::write(out_dir.join("sweep.md"), &markdown)?;
    std::fs::write(out_dir.join("sweep.csv"), &csv)?;
    Ok(SweepOutcome {
        rows,
        ledger,
        markdown,
        csv,
    })
}

fn record_failure(plan: &RunPlan, error: &CliError, ledger: &Path) -> RunSummary {
    log::warn!("sweep cell {} failed: {error}", plan.run_name());
    let summary = failed_summary(plan, error);
    if let Err(e) = append_summary(ledger, &summary) {
        log::error!("cannot append to {}: {e}", ledger.display());
    }
    summary
}

/// Plan used only to label a cell whose config did not resolve.
fn rough_plan(cell: &Cell) -> RunPlan {
    let c = &cell.config;
    let mut plan = RunConfig::new(c.problem).resolve().expect("profiles resolve");
    plan.seed = c.seed.unwrap_or(plan.seed);
    plan.n_u = c.n_u.unwrap_or(plan.n_u);
    plan.n_f = c.n_f.unwrap_or(plan.n_f);
    plan.layers = c.layers.unwrap_or(plan.layers);
    plan.neurons = c.neurons.unwrap_or(plan.neurons);
    plan.q = c.q.unwrap_or(plan.q);
    plan.dt = c.dt.unwrap_or(plan.dt);
    plan
}

/// Generate shared reference data and tableaux up front so that
/// concurrent cells only ever read the caches.
fn prefetch(plans: &[Result<RunPlan, CliError>], cache_dir: &Path) {
    let mut references = BTreeSet::new();
    let mut tableaux = BTreeSet::new();
    for plan in plans.iter().flatten() {
        let key = crate::reference::reference_key(plan.problem, plan.reference.as_ref()).unwrap_or_default();
        if references.insert(key) {
            if let Err(e) = load_or_generate(cache_dir, plan.problem, plan.reference.as_ref()) {
                log::warn!("reference prefetch failed: {e}");
            }
        }
        if plan.problem.is_discrete() && tableaux.insert((plan.q, plan.precision_bits)) {
            let cache = TableauCache::new(cache_dir.join("tableaux"));
            if let Err(e) = cache.get_or_generate(plan.q, plan.precision_bits) {
                log::warn!("tableau prefetch failed: {e}");
            }
        }
    }
}

fn format_error(s: &RunSummary) -> String {
    if s.error.is_some() {
        "failed".into()
    } else {
        format!("{:.1e}", s.rel_l2)
    }
}

/// Pivot table for two axes (first axis down, second across), otherwise
/// one row per cell.
pub fn markdown_table(axes: &SweepAxes, rows: &[SweepRow]) -> String {
    let active = axes.active();
    let mut out = String::new();
    if active.len() == 2 {
        let (ra, rv) = &active[0];
        let (ca, cv) = &active[1];
        let _ = write!(out, "| {ra} \\ {ca} |");
        for v in cv {
            let _ = write!(out, " {v} |");
        }
        out.push('\n');
        out.push_str(&"|---".repeat(cv.len() + 1));
        out.push_str("|\n");
        for (i, r) in rv.iter().enumerate() {
            let _ = write!(out, "| {r} |");
            for j in 0..cv.len() {
                let row = &rows[i * cv.len() + j];
                let _ = write!(out, " {} |", format_error(&row.summary));
            }
            out.push('\n');
        }
        return out;
    }
    let names: Vec<&str> = active.iter().map(|(n, _)| *n).collect();
    let header: Vec<&str> = names
        .iter()
        .copied()
        .chain(["rel_l2", "iterations", "termination"])
        .collect();
    let _ = writeln!(out, "| {} |", header.join(" | "));
    out.push_str(&"|---".repeat(header.len()));
    out.push_str("|\n");
    for row in rows {
        let mut fields: Vec<String> = row.cell.values.iter().map(|(_, v)| v.to_string()).collect();
        fields.push(format_error(&row.summary));
        fields.push(row.summary.iterations.to_string());
        fields.push(row.summary.termination.clone());
        let _ = writeln!(out, "| {} |", fields.join(" | "));
    }
    out
}

/// Flat CSV, one line per cell.
pub fn csv_table(axes: &SweepAxes, rows: &[SweepRow]) -> String {
    let names: Vec<&str> = axes.active().iter().map(|(n, _)| *n).collect();
    let mut out = String::from("cell,seed");
    for n in &names {
        let _ = write!(out, ",{n}");
    }
    out.push_str(",rel_l2,iterations,final_loss,wall_time_seconds,termination,error\n");
    for row in rows {
        let s = &row.summary;
        let _ = write!(out, "{},{}", row.cell.index, s.seed);
        for (_, v) in &row.cell.values {
            let _ = write!(out, ",{v}");
        }
        let error = s.error.as_deref().unwrap_or("").replace(['"', '\n'], " ");
        let _ = writeln!(
            out,
            ",{:e},{},{:e},{:.3},{},\"{error}\"",
            s.rel_l2, s.iterations, s.final_loss, s.wall_time_seconds, s.termination
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ProblemKind;

    fn two_by_two() -> SweepConfig {
        SweepConfig::from_toml(
            "[base]\nproblem = \"burgers-ct\"\nseed = 10\n[axes]\nlayers = [2, 4]\nneurons = [5, 10]\n",
        )
        .unwrap()
    }

    #[test]
    fn cells_are_the_product() {
        let cells = two_by_two().cells().unwrap();
        assert_eq!(cells.len(), 4);
        let shapes: Vec<(Option<usize>, Option<usize>)> =
            cells.iter().map(|c| (c.config.layers, c.config.neurons)).collect();
        assert_eq!(
            shapes,
            vec![
                (Some(2), Some(5)),
                (Some(2), Some(10)),
                (Some(4), Some(5)),
                (Some(4), Some(10))
            ]
        );
        let seeds: BTreeSet<u64> = cells.iter().map(|c| c.config.seed.unwrap()).collect();
        assert_eq!(seeds.len(), 4);
        assert!(cells.iter().all(|c| c.config.problem == ProblemKind::BurgersCt));
    }

    #[test]
    fn no_axes_is_a_single_cell() {
        let c = SweepConfig::from_toml("[base]\nproblem = \"burgers-dt\"\n").unwrap();
        assert_eq!(c.cells().unwrap().len(), 1);
    }

    #[test]
    fn unknown_axes_are_rejected() {
        assert!(SweepConfig::from_toml("[base]\nproblem = \"burgers-ct\"\n[axes]\nwidth = [1]\n").is_err());
        let empty = SweepConfig::from_toml("[base]\nproblem = \"burgers-ct\"\n[axes]\nq = []\n").unwrap();
        assert!(empty.cells().is_err());
    }

    #[test]
    fn pivot_table_layout() {
        let cfg = two_by_two();
        let rows: Vec<SweepRow> = cfg
            .cells()
            .unwrap()
            .into_iter()
            .map(|cell| {
                let plan = cell.config.resolve().unwrap();
                let mut summary = failed_summary(&plan, &CliError::Numerical("x".into()));
                if cell.index != 3 {
                    summary.error = None;
                    summary.rel_l2 = 0.01 * (cell.index + 1) as f64;
                }
                SweepRow { cell, summary }
            })
            .collect();
        let md = markdown_table(&cfg.axes, &rows);
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines[0], "| layers \\ neurons | 5 | 10 |");
        assert_eq!(lines[2], "| 2 | 1.0e-2 | 2.0e-2 |");
        assert_eq!(lines[3], "| 4 | 3.0e-2 | failed |");
        let csv = csv_table(&cfg.axes, &rows);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("cell,seed,layers,neurons,rel_l2"));
    }
}
