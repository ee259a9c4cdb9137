//! Error metrics, solution grids on disk, and run summaries.
//!
//! Grid files are CSV with a header `t,x,<c1>[,<c1>_exact],<c2>...`, one
//! row per `(t, x)` pair in t-major order and every number written with 17
//! significant digits (`{:.16e}`), so `f64` values round-trip exactly.
//!
//! Run summaries are JSON objects, one per line, so a results ledger is
//! a plain append-only file.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{argument, structural, Error, Result};
use crate::scalar::Real;

/// `‖pred − exact‖₂ / ‖exact‖₂` over all entries.
pub fn rel_l2<T: Real>(pred: &[T], exact: &[T]) -> Result<T> {
    if pred.len() != exact.len() {
        return Err(structural(format!(
            "relative error needs equal lengths, got {} and {}",
            pred.len(),
            exact.len()
        )));
    }
    let den = exact.iter().fold(T::zero(), |a, &e| a + e * e);
    if !(den > T::zero()) {
        return Err(argument("relative error against a zero reference"));
    }
    let num = pred
        .iter()
        .zip(exact)
        .fold(T::zero(), |a, (&p, &e)| a + (p - e) * (p - e));
    Ok((num / den).sqrt())
}

/// One field sampled on the grid, optionally with its reference values.
#[derive(Debug, Clone, PartialEq)]
pub struct Component<T> {
    pub label: String,
    pub values: Vec<T>,
    pub exact: Option<Vec<T>>,
}

/// Fields on a tensor grid; `values[i * x.len() + j]` is at `(t[i], x[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionGrid<T> {
    t: Vec<T>,
    x: Vec<T>,
    components: Vec<Component<T>>,
}

impl<T: Real> SolutionGrid<T> {
    pub fn new(t: Vec<T>, x: Vec<T>) -> Result<Self> {
        for (name, g) in [("t", &t), ("x", &x)] {
            if g.is_empty() {
                return Err(argument(format!("{name}-grid is empty")));
            }
            if g.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(argument(format!("{name}-grid is not strictly ascending")));
            }
        }
        Ok(Self {
            t,
            x,
            components: Vec::new(),
        })
    }

    pub fn t(&self) -> &[T] {
        &self.t
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.t.len(), self.x.len())
    }

    pub fn components(&self) -> &[Component<T>] {
        &self.components
    }

    pub fn component(&self, label: &str) -> Option<&Component<T>> {
        self.components.iter().find(|c| c.label == label)
    }

    pub fn component_mut(&mut self, label: &str) -> Option<&mut Component<T>> {
        self.components.iter_mut().find(|c| c.label == label)
    }

    pub fn push(&mut self, label: impl Into<String>, values: Vec<T>, exact: Option<Vec<T>>) -> Result<()> {
        let label = label.into();
        let size = self.t.len() * self.x.len();
        if values.len() != size || exact.as_ref().is_some_and(|e| e.len() != size) {
            return Err(structural(format!(
                "component {label} does not match the {}x{} grid",
                self.t.len(),
                self.x.len()
            )));
        }
        if label.is_empty() || label.contains(',') || label.ends_with("_exact") || self.component(&label).is_some() {
            return Err(argument(format!("invalid or duplicate component label {label:?}")));
        }
        self.components.push(Component { label, values, exact });
        Ok(())
    }

    /// Attach reference values to an existing component.
    pub fn set_exact(&mut self, label: &str, exact: Vec<T>) -> Result<()> {
        let size = self.t.len() * self.x.len();
        let c = self
            .component_mut(label)
            .ok_or_else(|| argument(format!("no component {label}")))?;
        if exact.len() != size {
            return Err(structural("reference does not match the grid"));
        }
        c.exact = Some(exact);
        Ok(())
    }

    /// Value of component `c` at time index `i`, space index `j`.
    pub fn at(&self, c: usize, i: usize, j: usize) -> T {
        self.components[c].values[i * self.x.len() + j]
    }

    /// Row of component `label` at time index `i`.
    pub fn row(&self, label: &str, i: usize) -> Option<&[T]> {
        let nx = self.x.len();
        self.component(label).map(|c| &c.values[i * nx..(i + 1) * nx])
    }

    /// Relative L2 error of a component against its attached reference.
    pub fn rel_l2(&self, label: &str) -> Result<T> {
        let c = self
            .component(label)
            .ok_or_else(|| argument(format!("no component {label}")))?;
        let exact = c
            .exact
            .as_ref()
            .ok_or_else(|| argument(format!("component {label} has no reference")))?;
        rel_l2(&c.values, exact)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        write!(out, "t,x")?;
        for c in &self.components {
            write!(out, ",{}", c.label)?;
            if c.exact.is_some() {
                write!(out, ",{}_exact", c.label)?;
            }
        }
        writeln!(out)?;
        let nx = self.x.len();
        for (i, &t) in self.t.iter().enumerate() {
            for (j, &x) in self.x.iter().enumerate() {
                write!(out, "{},{}", num(t), num(x))?;
                for c in &self.components {
                    write!(out, ",{}", num(c.values[i * nx + j]))?;
                    if let Some(e) = &c.exact {
                        write!(out, ",{}", num(e[i * nx + j]))?;
                    }
                }
                writeln!(out)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut lines = BufReader::new(input).lines();
        let header = lines.next().ok_or_else(|| parse(1, "empty file"))??;
        let names: Vec<&str> = header.split(',').collect();
        if names.len() < 2 || names[0] != "t" || names[1] != "x" {
            return Err(parse(1, "header must start with t,x"));
        }
        // (label, has_exact) in column order.
        let mut layout: Vec<(String, bool)> = Vec::new();
        for name in &names[2..] {
            if let Some(base) = name.strip_suffix("_exact") {
                match layout.last_mut() {
                    Some((label, exact)) if label == base && !*exact => *exact = true,
                    _ => return Err(parse(1, format!("column {name} does not follow {base}"))),
                }
            } else {
                layout.push((name.to_string(), false));
            }
        }

        let width = names.len();
        let mut rows: Vec<Vec<T>> = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            let lineno = k + 2;
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map(T::lit)
                        .map_err(|e| parse(lineno, format!("{f:?}: {e}")))
                })
                .collect::<Result<Vec<T>>>()?;
            if row.len() != width {
                return Err(parse(lineno, format!("expected {width} fields, got {}", row.len())));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(parse(2, "no data rows"));
        }

        let nx = rows.iter().take_while(|r| r[0] == rows[0][0]).count();
        if rows.len() % nx != 0 {
            return Err(parse(rows.len() + 1, "row count is not a multiple of the x-grid size"));
        }
        let nt = rows.len() / nx;
        let x: Vec<T> = rows[..nx].iter().map(|r| r[1]).collect();
        let t: Vec<T> = (0..nt).map(|i| rows[i * nx][0]).collect();
        for (k, r) in rows.iter().enumerate() {
            if r[0] != t[k / nx] || r[1] != x[k % nx] {
                return Err(parse(k + 2, "rows are not a t-major tensor grid"));
            }
        }
        let mut grid = Self::new(t, x).map_err(|e| parse(2, e.to_string()))?;
        let mut col = 2;
        for (label, has_exact) in layout {
            let values = rows.iter().map(|r| r[col]).collect();
            let exact = has_exact.then(|| rows.iter().map(|r| r[col + 1]).collect());
            col += 1 + usize::from(has_exact);
            grid.push(label, values, exact).map_err(|e| parse(1, e.to_string()))?;
        }
        Ok(grid)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("csv.tmp");
        self.write_csv(File::create(&tmp)?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(File::open(path)?)
    }
}

fn num<T: Real>(v: T) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

fn parse(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Record of one run. Serialized as a single JSON object per line with
/// exactly these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub problem: String,
    pub seed: u64,
    /// Network shape as `inputs-layersxwidth-outputs`.
    pub architecture: String,
    pub n_u: usize,
    pub n_f: usize,
    pub n_0: usize,
    pub n_b: usize,
    pub n_n: usize,
    pub q: usize,
    pub dt: f64,
    pub rel_l2: f64,
    /// Secondary error measure, e.g. joint `(u, v)` error for Schrödinger.
    pub rel_l2_secondary: Option<f64>,
    pub iterations: usize,
    pub final_loss: f64,
    pub wall_time_seconds: f64,
    pub termination: String,
    /// Free-form failure description for sweep cells that did not finish.
    pub error: Option<String>,
}

impl RunSummary {
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line)?)
    }
}

/// Append one summary line to a ledger file under an exclusive lock.
pub fn append_summary(path: impl AsRef<Path>, summary: &RunSummary) -> Result<()> {
    let line = summary.to_json_line()? + "\n";
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    file.lock()?;
    let result = (&file).write_all(line.as_bytes()).and_then(|_| (&file).flush());
    file.unlock()?;
    result?;
    Ok(())
}

/// Read every complete line of a ledger. A trailing partial line (from a
/// concurrent writer) is ignored.
pub fn read_summaries(path: impl AsRef<Path>) -> Result<Vec<RunSummary>> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let complete = match text.rfind('\n') {
        Some(end) => &text[..end],
        None => "",
    };
    complete
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| RunSummary::from_json_line(l).map_err(|e| parse(k + 1, e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rel_l2_examples() {
        let e = [1.0, -2.0, 3.0, 0.5];
        assert_eq!(rel_l2(&e, &e).unwrap(), 0.0);
        let twice: Vec<f64> = e.iter().map(|v| 2.0 * v).collect();
        assert_abs_diff_eq!(rel_l2(&twice, &e).unwrap(), 1.0, epsilon = 1e-15);
        let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut p = e;
        p[0] += norm * 1e-3;
        assert_abs_diff_eq!(rel_l2(&p, &e).unwrap(), 1e-3, epsilon = 1e-15);
        assert!(matches!(rel_l2(&e, &[0.0; 4]), Err(Error::Argument(_))));
        assert!(rel_l2(&e[..3], &e).is_err());
    }

    #[test]
    fn rel_l2_is_scale_covariant() {
        let p = [0.3, -1.2, 2.2];
        let e = [0.25, -1.0, 2.5];
        let base = rel_l2(&p, &e).unwrap();
        for a in [-3.0, 1e-4, 7.5e3] {
            let pa: Vec<f64> = p.iter().map(|v| a * v).collect();
            let ea: Vec<f64> = e.iter().map(|v| a * v).collect();
            assert_abs_diff_eq!(rel_l2(&pa, &ea).unwrap(), base, epsilon = 1e-14);
        }
    }

    fn sample_grid(nt: usize, nx: usize) -> SolutionGrid<f64> {
        let t = (0..nt).map(|i| i as f64 / 7.0).collect();
        let x = (0..nx).map(|j| -1.0 + j as f64 / 3.0).collect();
        let mut g = SolutionGrid::new(t, x).unwrap();
        let u: Vec<f64> = (0..nt * nx).map(|k| (k as f64 * 0.37).sin() / 3.0).collect();
        let e: Vec<f64> = u.iter().map(|v| v + 1e-17).collect();
        g.push("u", u, Some(e)).unwrap();
        g
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = sample_grid(4, 5);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert_eq!(SolutionGrid::<f64>::read_csv(&buf[..]).unwrap(), g);
    }

    #[test]
    fn line_counts() {
        let mut buf = Vec::new();
        sample_grid(1, 1).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("t,x,u,u_exact\n"));

        let mut buf = Vec::new();
        sample_grid(100, 256).write_csv(&mut buf).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 25_601);
    }

    #[test]
    fn malformed_files_report_line_numbers() {
        let bad = "t,x,u\n0,0,1\n0,1,oops\n";
        match SolutionGrid::<f64>::read_csv(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let short = "t,x,u\n0,0,1\n0,1\n";
        assert!(matches!(
            SolutionGrid::<f64>::read_csv(short.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            SolutionGrid::<f64>::read_csv("a,b\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn grids_must_ascend() {
        assert!(SolutionGrid::<f64>::new(vec![0.0, 0.0], vec![1.0]).is_err());
        let mut g = SolutionGrid::<f64>::new(vec![0.0], vec![1.0, 2.0]).unwrap();
        assert!(g.push("u", vec![1.0], None).is_err());
    }

    fn summary(seed: u64) -> RunSummary {
        RunSummary {
            problem: "burgers-ct".into(),
            seed,
            architecture: "2-8x20-1".into(),
            n_u: 100,
            n_f: 10_000,
            n_0: 0,
            n_b: 0,
            n_n: 0,
            q: 0,
            dt: 0.0,
            rel_l2: 1.234_567_890_123_456_7e-3,
            rel_l2_secondary: None,
            iterations: 4321,
            final_loss: 3.3e-7,
            wall_time_seconds: 12.5,
            termination: "max_iter".into(),
            error: None,
        }
    }

    #[test]
    fn summary_round_trips() {
        let mut other = summary(2);
        other.problem = "nls-ct".into();
        other.rel_l2_secondary = Some(0.02);
        let mut failed = summary(3);
        failed.error = Some("numerical error: nan".into());
        for s in [summary(1), other, failed] {
            let line = s.to_json_line().unwrap();
            assert!(!line.contains('\n'));
            assert_eq!(RunSummary::from_json_line(&line).unwrap(), s);
        }
    }

    #[test]
    fn ledger_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        for seed in 0..3 {
            append_summary(&path, &summary(seed)).unwrap();
        }
        let rows = read_summaries(&path).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].seed, 2);
    }
}
