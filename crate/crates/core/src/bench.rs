//! Paired old/new benchmark runs.
//!
//! Each grid point runs the full and the incremental engine from the same
//! seed. The two runs must agree generation by generation, otherwise the
//! incremental engine lost information and the benchmark aborts.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::data::Dataset;
use crate::evolve::{evolve, AccuracyUnit, Engine, EvolutionConfig, EvolveError, RunReport};
use crate::inherit::{savings, InheritError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("benchmark grid is empty")]
    EmptyGrid,
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("lossless failure at grid point {point}, seed {seed}: {detail}")]
    Lossless { point: usize, seed: u64, detail: String },
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Inherit(#[from] InheritError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// A benchmark over grid points where generations = population.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkSpec {
    pub dataset: String,
    pub grid: Vec<usize>,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub x_start: f64,
    pub x_end: f64,
    pub seed: u64,
    pub repetitions: usize,
    pub elitism: usize,
    pub accuracy_unit: AccuracyUnit,
}

impl BenchmarkSpec {
    pub fn new(dataset: impl Into<String>, grid: Vec<usize>) -> Self {
        let base = EvolutionConfig::default();
        Self {
            dataset: dataset.into(),
            grid,
            mutation_rate: base.mutation_rate,
            crossover_rate: base.crossover_rate,
            x_start: base.x_start,
            x_end: base.x_end,
            seed: base.seed,
            repetitions: 1,
            elitism: base.elitism,
            accuracy_unit: base.accuracy_unit,
        }
    }

    pub fn config(&self, point: usize, repetition: usize, engine: Engine) -> EvolutionConfig {
        EvolutionConfig {
            population_size: point,
            generations: point,
            mutation_rate: self.mutation_rate,
            crossover_rate: self.crossover_rate,
            x_start: self.x_start,
            x_end: self.x_end,
            seed: self.seed.wrapping_add(repetition as u64),
            engine,
            elitism: self.elitism,
            accuracy_unit: self.accuracy_unit,
        }
    }

    pub fn label(&self, point: usize) -> String {
        let x = if self.x_start == self.x_end {
            format!("{}", self.x_start)
        } else {
            format!("{}-{}", self.x_start, self.x_end)
        };
        format!("{point}/{point} mut={} x={x}", self.mutation_rate)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub dataset: String,
    pub config_label: String,
    pub point: usize,
    pub old_ms: f64,
    pub new_ms: f64,
    /// Percent of instance classifications the incremental engine avoided.
    pub instance_savings_pct: f64,
    pub check_savings_pct: f64,
}

/// Checks that two runs from the same seed went through identical
/// populations.
pub fn check_equivalence(old: &RunReport<f64>, new: &RunReport<f64>) -> Result<(), String> {
    if old.generations.len() != new.generations.len() {
        return Err("different number of generations".into());
    }
    for (a, b) in old.generations.iter().zip(&new.generations) {
        if a.payoffs != b.payoffs {
            return Err(format!("payoffs diverge at generation {}", a.generation));
        }
        if a.full_equivalent != b.full_equivalent {
            return Err(format!("leaf contents diverge at generation {}", a.generation));
        }
        if a.counters != b.full_equivalent {
            return Err(format!("full engine cost differs from its estimate at generation {}", a.generation));
        }
    }
    if !old.best.tree.same_evaluation(&new.best.tree) || !old.best.tree.same_structure(&new.best.tree) {
        return Err("final best trees differ".into());
    }
    Ok(())
}

/// Runs every grid point, averaging over repetitions. Savings are measured
/// over the generations only; the initial population costs the same in
/// both engines.
pub fn run_bench(spec: &BenchmarkSpec, dataset: &Dataset) -> Result<Vec<BenchRow>, BenchError> {
    if spec.grid.is_empty() {
        return Err(BenchError::EmptyGrid);
    }
    if spec.repetitions == 0 {
        return Err(BenchError::NoRepetitions);
    }
    let mut rows = Vec::with_capacity(spec.grid.len());
    for &point in &spec.grid {
        let (mut old_ms, mut new_ms, mut inst, mut checks) = (0.0, 0.0, 0.0, 0.0);
        for rep in 0..spec.repetitions {
            let old: RunReport<f64> = evolve(&spec.config(point, rep, Engine::Full), dataset)?;
            let new: RunReport<f64> = evolve(&spec.config(point, rep, Engine::Incremental), dataset)?;
            check_equivalence(&old, &new).map_err(|detail| BenchError::Lossless {
                point,
                seed: spec.seed.wrapping_add(rep as u64),
                detail,
            })?;
            let actual = new.generations.iter().map(|g| g.counters).sum();
            let full = old.generations.iter().map(|g| g.counters).sum();
            let s = savings(actual, full)?;
            old_ms += old.total_ms;
            new_ms += new.total_ms;
            inst += s.instance_savings;
            checks += s.check_savings;
        }
        let reps = spec.repetitions as f64;
        rows.push(BenchRow {
            dataset: spec.dataset.clone(),
            config_label: spec.label(point),
            point,
            old_ms: old_ms / reps,
            new_ms: new_ms / reps,
            instance_savings_pct: 100.0 * inst / reps,
            check_savings_pct: 100.0 * checks / reps,
        });
    }
    Ok(rows)
}

/// CSV: dataset, config_label, old_ms, new_ms, instance_savings_pct,
/// check_savings_pct.
pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dataset", "config_label", "old_ms", "new_ms", "instance_savings_pct", "check_savings_pct"])?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.config_label.clone(),
            format!("{:.3}", r.old_ms),
            format!("{:.3}", r.new_ms),
            format!("{:.4}", r.instance_savings_pct),
            format!("{:.4}", r.check_savings_pct),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_multiplexor;

    #[test]
    fn grid_rows_and_band() {
        let ds = generate_multiplexor(1).unwrap();
        let mut spec = BenchmarkSpec::new("multiplexor", vec![10, 20]);
        spec.seed = 3;
        let rows = run_bench(&spec, &ds).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].config_label, "10/10 mut=0.5 x=10000");
        for r in &rows {
            assert!((0.0..=100.0).contains(&r.instance_savings_pct));
            assert!((0.0..=100.0).contains(&r.check_savings_pct));
        }
        let mut buf = Vec::new();
        write_bench_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("dataset,config_label,old_ms,new_ms,instance_savings_pct,check_savings_pct\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn empty_grid_rejected() {
        let ds = generate_multiplexor(1).unwrap();
        assert!(matches!(run_bench(&BenchmarkSpec::new("m", vec![]), &ds), Err(BenchError::EmptyGrid)));
    }

    #[test]
    fn divergence_is_detected() {
        let ds = generate_multiplexor(1).unwrap();
        let spec = BenchmarkSpec::new("m", vec![10]);
        let a: RunReport<f64> = evolve(&spec.config(10, 0, Engine::Full), &ds).unwrap();
        let mut b: RunReport<f64> = evolve(&spec.config(10, 0, Engine::Incremental), &ds).unwrap();
        assert!(check_equivalence(&a, &b).is_ok());
        b.generations[4].payoffs[0] += 1.0;
        assert!(check_equivalence(&a, &b).is_err());
    }
}
