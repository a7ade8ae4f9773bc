//! Free-energy model selection over a `(P, Q)` grid.
//!
//! Every cell is fitted `repeats` times: the first restart uses the spec's
//! initialization, later ones use seeded random starts. The cell keeps the
//! lowest free energy among its converged restarts.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{LrmarError, Result};
use crate::series::{center, fmt_f64, TimeSeries};
use crate::spec::{InitMethod, ModelSpec};
use crate::vb::fit;

/// Outcome of one restart of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartResult {
    pub repeat: usize,
    pub seed: u64,
    /// `None` when the fit failed.
    pub free_energy: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub p: usize,
    pub q: usize,
    /// Lowest free energy over converged restarts (over successful restarts
    /// when none converged, infinite when all failed).
    pub free_energy: f64,
    pub converged: bool,
    pub iterations: usize,
    pub seconds: f64,
    pub restarts: Vec<RestartResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionGrid {
    pub p_values: Vec<usize>,
    pub q_values: Vec<usize>,
    /// Row-major over `p_values` then `q_values`.
    pub cells: Vec<GridCell>,
    /// `None` when no cell converged.
    pub best: Option<(usize, usize)>,
}

impl SelectionGrid {
    pub fn cell(&self, p: usize, q: usize) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.p == p && c.q == q)
    }

    /// The best pair, or a selection error when no cell converged.
    pub fn best(&self) -> Result<(usize, usize)> {
        self.best
            .ok_or_else(|| LrmarError::Selection("no grid cell produced a converged fit".into()))
    }

    /// Writes one row per restart: `P,Q,free_energy,converged,iterations,seconds`,
    /// followed by a `# best P=.. Q=..` comment line.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        {
            let mut w = csv::Writer::from_writer(&mut writer);
            w.write_record(["P", "Q", "free_energy", "converged", "iterations", "seconds"])?;
            for cell in &self.cells {
                for r in &cell.restarts {
                    w.write_record([
                        cell.p.to_string(),
                        cell.q.to_string(),
                        r.free_energy.map(fmt_f64).unwrap_or_else(|| "nan".into()),
                        r.converged.to_string(),
                        r.iterations.to_string(),
                        format!("{:.6}", r.seconds),
                    ])?;
                }
            }
            w.flush()?;
        }
        match self.best {
            Some((p, q)) => writeln!(writer, "# best P={p} Q={q}")?,
            None => writeln!(writer, "# best none (no converged cell)")?,
        }
        Ok(())
    }
}

/// Grid search options.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectOptions {
    pub repeats: usize,
    /// Worker threads; `0` means one per logical core.
    pub workers: usize,
}

impl Default for SelectOptions {
    fn default() -> Self {
        SelectOptions { repeats: 3, workers: 0 }
    }
}

/// Fits every `(P, Q)` cell and returns the completed grid with the best
/// pair (if any cell converged).
///
/// Results do not depend on the number of workers: each restart's spec and
/// seed are fixed by its grid position.
pub fn grid_select(
    series: &TimeSeries,
    p_values: &[usize],
    q_values: &[usize],
    template: &ModelSpec,
    options: SelectOptions,
) -> Result<SelectionGrid> {
    if p_values.is_empty() || q_values.is_empty() {
        return Err(LrmarError::Validation("selection grid is empty".into()));
    }
    if options.repeats == 0 {
        return Err(LrmarError::Validation("repeats must be at least 1".into()));
    }
    let centered = center(series)?;
    let jobs: Vec<(usize, usize, usize)> = p_values
        .iter()
        .flat_map(|&p| q_values.iter().flat_map(move |&q| (0..options.repeats).map(move |r| (p, q, r))))
        .collect();

    let run = |&(p, q, r): &(usize, usize, usize)| -> RestartResult {
        let mut spec = template.clone();
        spec.p = p;
        spec.q = q;
        spec.seed = template.seed.wrapping_add(r as u64);
        if r > 0 {
            spec.init = InitMethod::Random;
        }
        let start = Instant::now();
        let out = fit(&centered, &spec);
        let seconds = start.elapsed().as_secs_f64();
        match out {
            Ok(m) => RestartResult {
                repeat: r,
                seed: spec.seed,
                free_energy: Some(m.free_energy()),
                converged: m.converged,
                iterations: m.iterations,
                seconds,
                error: None,
            },
            Err(e) => RestartResult {
                repeat: r,
                seed: spec.seed,
                free_energy: None,
                converged: false,
                iterations: 0,
                seconds,
                error: Some(e.to_string()),
            },
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| LrmarError::Selection(format!("cannot start worker pool: {e}")))?;
    let results: Vec<RestartResult> = pool.install(|| jobs.par_iter().map(run).collect());

    let cells: Vec<GridCell> = results
        .chunks(options.repeats)
        .zip(jobs.chunks(options.repeats))
        .map(|(restarts, js)| summarize(js[0].0, js[0].1, restarts.to_vec()))
        .collect();
    let best = pick_best(&cells).ok();
    Ok(SelectionGrid {
        p_values: p_values.to_vec(),
        q_values: q_values.to_vec(),
        cells,
        best,
    })
}

fn summarize(p: usize, q: usize, restarts: Vec<RestartResult>) -> GridCell {
    let converged = restarts.iter().any(|r| r.converged);
    let pool: Vec<&RestartResult> = restarts
        .iter()
        .filter(|r| r.free_energy.is_some() && (r.converged || !converged))
        .collect();
    let chosen = pool
        .iter()
        .min_by(|a, b| a.free_energy.partial_cmp(&b.free_energy).unwrap());
    GridCell {
        p,
        q,
        free_energy: chosen.and_then(|r| r.free_energy).unwrap_or(f64::INFINITY),
        converged,
        iterations: chosen.map(|r| r.iterations).unwrap_or(0),
        seconds: restarts.iter().map(|r| r.seconds).sum(),
        restarts,
    }
}

/// Argmin of the free energy over converged cells; ties go to the smaller
/// `Q`, then the smaller `P`.
pub fn pick_best(cells: &[GridCell]) -> Result<(usize, usize)> {
    cells
        .iter()
        .filter(|c| c.converged && c.free_energy.is_finite())
        .min_by(|a, b| {
            a.free_energy
                .partial_cmp(&b.free_energy)
                .unwrap()
                .then(a.q.cmp(&b.q))
                .then(a.p.cmp(&b.p))
        })
        .map(|c| (c.p, c.q))
        .ok_or_else(|| LrmarError::Selection("no grid cell produced a converged fit".into()))
}

/// Parses `a..b` (inclusive), `a,b,c` or a single integer.
pub fn parse_range(s: &str) -> Result<Vec<usize>> {
    let bad = || LrmarError::Validation(format!("cannot parse range {s:?}; use a..b, a,b,c or a"));
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|_| bad());
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (parse(a)?, parse(b.trim_start_matches('='))?);
        if a > b {
            return Err(bad());
        }
        Ok((a..=b).collect())
    } else {
        s.split(',').map(parse).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(p: usize, q: usize, fe: f64, converged: bool) -> GridCell {
        GridCell { p, q, free_energy: fe, converged, iterations: 1, seconds: 0.0, restarts: vec![] }
    }

    #[test]
    fn best_skips_unconverged_and_breaks_ties() {
        let cells = vec![
            cell(1, 1, 10.0, true),
            cell(1, 2, 5.0, false),
            cell(2, 1, 7.0, true),
            cell(2, 2, 7.0, true),
            cell(3, 1, 7.0, true),
        ];
        assert_eq!(pick_best(&cells).unwrap(), (2, 1));
        assert!(pick_best(&[cell(1, 1, 1.0, false)]).is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_range("3").unwrap(), vec![3]);
        assert_eq!(parse_range("1,4,6").unwrap(), vec![1, 4, 6]);
        assert!(parse_range("5..2").is_err());
        assert!(parse_range("x").is_err());
    }

    #[test]
    fn summary_prefers_converged_restarts() {
        let r = |fe: Option<f64>, conv| RestartResult {
            repeat: 0,
            seed: 0,
            free_energy: fe,
            converged: conv,
            iterations: 3,
            seconds: 0.5,
            error: None,
        };
        let c = summarize(1, 1, vec![r(Some(1.0), false), r(Some(2.0), true), r(None, false)]);
        assert!(c.converged);
        assert_eq!(c.free_energy, 2.0);
        assert_eq!(c.seconds, 1.5);
        let c = summarize(1, 1, vec![r(None, false)]);
        assert!(!c.converged);
        assert!(c.free_energy.is_infinite());
    }
}
