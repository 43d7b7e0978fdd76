//! Repeated trajectories over a parameter axis and their trapping-time statistics.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forces::ForceModel;
use crate::langevin::{simulate_trajectory, trajectory_rng, trapping_time, AtomInField, IntegratorConfig};
use crate::output::{fmt_f64, Csv};
use crate::response::Drive;

/// Columns of the summary CSV, in order.
pub const SUMMARY_COLUMNS: [&str; 5] = ["param_value", "n", "mean_trap_time", "std_trap_time", "censored_n"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    /// Drive detuning Δ.
    Detuning,
    /// Drive amplitude α.
    Amplitude,
    /// Coupling g.
    Coupling,
}

impl std::fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepParameter::Detuning => "detuning",
            SweepParameter::Amplitude => "amplitude",
            SweepParameter::Coupling => "coupling",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub repetitions: usize,
    pub base_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidInput("sweep needs at least one value".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidInput("sweep repetitions must be at least 1".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("sweep value {v} is not finite")));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Substream of one repetition. Keyed by the parameter value itself, so a
/// value listed twice reproduces the same trajectories.
pub fn substream(base_seed: u64, value: f64, repetition: usize) -> u64 {
    let h = splitmix64(base_seed);
    let h = splitmix64(h ^ value.to_bits());
    splitmix64(h ^ repetition as u64)
}

/// Outcome of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub repetition: usize,
    pub stream: u64,
    pub trap_time: f64,
    pub censored: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueStats {
    pub value: f64,
    /// Successful repetitions.
    pub n: usize,
    pub mean_trap_time: f64,
    pub std_trap_time: f64,
    pub stderr_trap_time: f64,
    pub censored_n: usize,
    pub censored_fraction: f64,
    pub all_censored: bool,
    pub failures: usize,
    pub runs: Vec<RunOutcome>,
}

impl ValueStats {
    /// Trapping times of the successful runs.
    pub fn trap_times(&self) -> Vec<f64> {
        self.runs.iter().filter(|r| r.failure.is_none()).map(|r| r.trap_time).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub base_seed: u64,
    pub t_max: f64,
    pub core_exit_radius: f64,
    pub values: Vec<ValueStats>,
}

impl SweepResult {
    pub fn total_runs(&self) -> usize {
        self.values.iter().map(|v| v.n).sum()
    }
}

/// Mean and sample standard deviation; a single value has zero spread.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn value_stats(value: f64, runs: Vec<RunOutcome>) -> ValueStats {
    let ok: Vec<&RunOutcome> = runs.iter().filter(|r| r.failure.is_none()).collect();
    let times: Vec<f64> = ok.iter().map(|r| r.trap_time).collect();
    let censored_n = ok.iter().filter(|r| r.censored).count();
    let (mean, std) = mean_std(&times);
    let n = times.len();
    ValueStats {
        value,
        n,
        mean_trap_time: mean,
        std_trap_time: std,
        stderr_trap_time: if n > 0 { std / (n as f64).sqrt() } else { f64::NAN },
        censored_n,
        censored_fraction: if n > 0 { censored_n as f64 / n as f64 } else { f64::NAN },
        all_censored: n > 0 && censored_n == n,
        failures: runs.len() - n,
        runs,
    }
}

/// Copy of `model` with the swept drive parameter replaced.
pub fn model_for_value(model: &ForceModel, parameter: SweepParameter, value: f64) -> Result<ForceModel> {
    let mut spec = model.drive.spec().clone();
    match parameter {
        SweepParameter::Detuning => spec.detuning = value,
        SweepParameter::Amplitude => spec.amplitude = value,
        SweepParameter::Coupling => spec.coupling = value,
    }
    let mut out = model.clone();
    out.drive = Drive::new(spec)?;
    Ok(out)
}

/// Run every `(value, repetition)` pair in parallel on the current rayon pool.
/// Results are ordered by value and repetition regardless of scheduling.
pub fn run_sweep(model: &ForceModel, mass: f64, sweep: &SweepSpec, config: &IntegratorConfig) -> Result<SweepResult> {
    sweep.validate()?;
    config.validate()?;
    let models = sweep
        .values
        .iter()
        .map(|&v| model_for_value(model, sweep.parameter, v))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..sweep.values.len()).flat_map(|i| (0..sweep.repetitions).map(move |r| (i, r))).collect();
    let outcomes: Vec<RunOutcome> = jobs
        .par_iter()
        .map(|&(i, rep)| {
            let stream = substream(sweep.base_seed, sweep.values[i], rep);
            let field = AtomInField { model: &models[i], mass };
            let mut rng = trajectory_rng(sweep.base_seed, stream);
            let mut cfg = config.clone();
            cfg.seed = sweep.base_seed;
            // Only the exit time matters here.
            cfg.decimation = cfg.steps().max(1);
            match simulate_trajectory(&field, &cfg, &mut rng) {
                Ok(traj) => {
                    let (t, censored) = trapping_time(&traj);
                    RunOutcome {
                        repetition: rep,
                        stream,
                        trap_time: t,
                        censored,
                        failure: traj.failure,
                    }
                }
                Err(e) => RunOutcome {
                    repetition: rep,
                    stream,
                    trap_time: f64::NAN,
                    censored: false,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut per_value: Vec<Vec<RunOutcome>> = vec![Vec::with_capacity(sweep.repetitions); sweep.values.len()];
    for (&(i, _), o) in jobs.iter().zip(outcomes) {
        per_value[i].push(o);
    }
    let failures: usize = per_value.iter().flatten().filter(|o| o.failure.is_some()).count();
    if failures > 0 {
        log::warn!("{failures} sweep trajectories failed and were excluded");
    }
    Ok(SweepResult {
        parameter: sweep.parameter,
        base_seed: sweep.base_seed,
        t_max: config.t_max,
        core_exit_radius: config.core_exit_radius,
        values: sweep.values.iter().zip(per_value).map(|(&v, runs)| value_stats(v, runs)).collect(),
    })
}

/// Summary CSV with the columns of [`SUMMARY_COLUMNS`].
pub fn summary_csv(result: &SweepResult) -> String {
    let mut csv = Csv::new(&SUMMARY_COLUMNS);
    for v in &result.values {
        csv.raw_row(&[
            fmt_f64(v.value),
            v.n.to_string(),
            fmt_f64(v.mean_trap_time),
            fmt_f64(v.std_trap_time),
            v.censored_n.to_string(),
        ]);
    }
    csv.into_string()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueSummary {
    pub param_value: f64,
    pub n: usize,
    pub mean_trap_time: f64,
    pub std_trap_time: f64,
    pub stderr_trap_time: f64,
    pub censored_n: usize,
    pub censored_fraction: f64,
    pub all_censored: bool,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub parameter: SweepParameter,
    pub base_seed: u64,
    pub t_max: f64,
    pub core_exit_radius: f64,
    pub total_runs: usize,
    /// Raised when any value had every repetition censored.
    pub censoring_flag: bool,
    pub rows: Vec<ValueSummary>,
    pub spearman: Option<SpearmanBootstrap>,
}

/// Summary table; `spearman` attaches a bootstrap rank correlation when requested.
pub fn summarize(result: &SweepResult, spearman: Option<SpearmanBootstrap>) -> SweepSummary {
    SweepSummary {
        parameter: result.parameter,
        base_seed: result.base_seed,
        t_max: result.t_max,
        core_exit_radius: result.core_exit_radius,
        total_runs: result.total_runs(),
        censoring_flag: result.values.iter().any(|v| v.all_censored),
        rows: result
            .values
            .iter()
            .map(|v| ValueSummary {
                param_value: v.value,
                n: v.n,
                mean_trap_time: v.mean_trap_time,
                std_trap_time: v.std_trap_time,
                stderr_trap_time: v.stderr_trap_time,
                censored_n: v.censored_n,
                censored_fraction: v.censored_fraction,
                all_censored: v.all_censored,
                failures: v.failures,
            })
            .collect(),
        spearman,
    }
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation: Pearson correlation of the ranks.
/// Zero when either side has no spread.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidInput("spearman needs two equal-length samples of size ≥ 2".into()));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpearmanBootstrap {
    pub rho: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub resamples: usize,
}

/// Spearman correlation between the parameter values and the mean trapping
/// time, with a percentile interval from resampling repetitions within each value.
pub fn bootstrap_spearman(result: &SweepResult, resamples: usize, level: f64, seed: u64) -> Result<SpearmanBootstrap> {
    if !(level > 0.0 && level < 1.0) || resamples == 0 {
        return Err(Error::InvalidInput("bootstrap needs 0 < level < 1 and at least one resample".into()));
    }
    let xs: Vec<f64> = result.values.iter().map(|v| v.value).collect();
    let samples: Vec<Vec<f64>> = result.values.iter().map(|v| v.trap_times()).collect();
    if samples.iter().any(|s| s.is_empty()) {
        return Err(Error::InvalidInput("every sweep value needs at least one successful run".into()));
    }
    let means: Vec<f64> = samples.iter().map(|s| mean_std(s).0).collect();
    let rho = spearman(&xs, &means)?;
    let mut rng = trajectory_rng(seed, u64::MAX);
    let mut stats = Vec::with_capacity(resamples);
    let mut boot = vec![0.0; samples.len()];
    for _ in 0..resamples {
        for (b, s) in boot.iter_mut().zip(&samples) {
            let mut sum = 0.0;
            for _ in 0..s.len() {
                sum += s[rng.random_range(0..s.len())];
            }
            *b = sum / s.len() as f64;
        }
        stats.push(spearman(&xs, &boot)?);
    }
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let pick = |q: f64| stats[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    Ok(SpearmanBootstrap {
        rho,
        lower: pick(alpha),
        upper: pick(1.0 - alpha),
        level,
        resamples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn stats(times: &[f64], censored: &[bool]) -> ValueStats {
        let runs = times
            .iter()
            .zip(censored)
            .enumerate()
            .map(|(i, (&t, &c))| RunOutcome {
                repetition: i,
                stream: i as u64,
                trap_time: t,
                censored: c,
                failure: None,
            })
            .collect();
        value_stats(1.0, runs)
    }

    #[test]
    fn single_run_has_no_spread() {
        let s = stats(&[42.0], &[false]);
        assert_eq!((s.n, s.mean_trap_time, s.std_trap_time), (1, 42.0, 0.0));
    }

    #[test]
    fn all_censored_raises_flag() {
        let s = stats(&[10.0, 10.0], &[true, true]);
        assert!(s.all_censored);
        let result = SweepResult {
            parameter: SweepParameter::Detuning,
            base_seed: 0,
            t_max: 10.0,
            core_exit_radius: 1.0,
            values: vec![s],
        };
        assert!(summarize(&result, None).censoring_flag);
        let csv = summary_csv(&result);
        assert_eq!(csv.lines().next().unwrap(), "param_value,n,mean_trap_time,std_trap_time,censored_n");
        assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 5));
    }

    #[test]
    fn sample_standard_deviation() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert_relative_eq!(s, (5.0f64 / 3.0).sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn failures_are_excluded() {
        let mut s = stats(&[1.0, 3.0], &[false, false]);
        s.runs.push(RunOutcome {
            repetition: 2,
            stream: 2,
            trap_time: f64::NAN,
            censored: false,
            failure: Some("boom".into()),
        });
        let s = value_stats(1.0, s.runs);
        assert_eq!((s.n, s.failures, s.mean_trap_time), (2, 1, 2.0));
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_relative_eq!(spearman(&x, &[1.0, 4.0, 9.0, 16.0, 25.0]).unwrap(), 1.0);
        assert_relative_eq!(spearman(&x, &[5.0, 3.0, 2.0, 1.0, 0.0]).unwrap(), -1.0);
        assert_eq!(spearman(&x, &[7.0; 5]).unwrap(), 0.0);
        // Textbook value: d² sum 2 for one swapped pair, ρ = 1 − 6·2/(5·24).
        assert_relative_eq!(spearman(&x, &[1.0, 2.0, 4.0, 3.0, 5.0]).unwrap(), 0.9, max_relative = 1e-12);
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn substreams_depend_on_value_not_position() {
        assert_eq!(substream(7, 2.5, 3), substream(7, 2.5, 3));
        assert_ne!(substream(7, 2.5, 3), substream(7, 2.5, 4));
        assert_ne!(substream(7, 2.5, 3), substream(8, 2.5, 3));
        assert_ne!(substream(7, 2.5, 3), substream(7, 3.5, 3));
    }

    #[test]
    fn bootstrap_brackets_a_clear_trend() {
        let values = (0..5)
            .map(|i| {
                let base = 100.0 * (i + 1) as f64;
                let times: Vec<f64> = (0..20).map(|r| base + (r % 5) as f64).collect();
                let mut s = stats(&times, &[false; 20]);
                s.value = i as f64;
                s
            })
            .collect();
        let result = SweepResult {
            parameter: SweepParameter::Detuning,
            base_seed: 1,
            t_max: 1e3,
            core_exit_radius: 1.0,
            values,
        };
        let b = bootstrap_spearman(&result, 500, 0.95, 3).unwrap();
        assert_eq!((b.rho, b.lower, b.upper), (1.0, 1.0, 1.0));
    }

    proptest! {
        #[test]
        fn spearman_is_bounded_and_rank_invariant(xs in proptest::collection::vec(-1e3f64..1e3, 3..20), shift in -10.0f64..10.0) {
            let ys: Vec<f64> = xs.iter().map(|x| (x * 0.37).sin()).collect();
            let rho = spearman(&xs, &ys).unwrap();
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&rho));
            let monotone: Vec<f64> = xs.iter().map(|x| x.powi(3) + shift).collect();
            let again = spearman(&monotone, &ys).unwrap();
            prop_assert!((rho - again).abs() < 1e-12);
        }
    }
}
