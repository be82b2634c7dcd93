use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use canon::schedule::ScheduleKind;
use canon::sim::{train, StepRecord, TrainLog, CSV_HEADER};
use canon::theory::{
    amplification_ratios, amplification_region, amplification_universal, analytic_advantages,
    mc_oracle, ConditionModel,
};

use crate::config::RunConfig;
use crate::manifest::{Artifacts, RunManifest};
use crate::svg;
use crate::CliError;

/// Largest acceptable 4-standard-error radius in the verification table;
/// wider estimates cannot distinguish the analytic values and abort with
/// guidance to raise the sample count.
const SE_BUDGET: f64 = 0.02;

const SERIES: [&str; 7] = [
    "mu_used",
    "mean_reward",
    "mean_entropy_metric",
    "mean_length_metric",
    "policy_entropy",
    "reward_gap",
    "clip_fraction",
];

fn series_value(record: &StepRecord, name: &str) -> f64 {
    match name {
        "mu_used" => record.mu_used,
        "mean_reward" => record.mean_reward,
        "mean_entropy_metric" => record.mean_entropy_metric,
        "mean_length_metric" => record.mean_length_metric,
        "policy_entropy" => record.policy_entropy,
        "reward_gap" => record.reward_gap,
        "clip_fraction" => record.clip_fraction,
        other => unreachable!("unknown series {other}"),
    }
}

/// Execute one training run and write run.csv, per-series SVG charts, and
/// manifest.json into `out_dir`.
pub fn run_one(
    config: &RunConfig,
    config_path: &Path,
    out_dir: &Path,
) -> Result<TrainLog, CliError> {
    let train_config = config.to_train_config(config_path)?;
    let started = Instant::now();
    let log =
        train(&train_config).map_err(|e| CliError::Runtime(format!("training failed: {e}")))?;
    let duration = started.elapsed().as_secs_f64();

    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;

    let csv_path = out_dir.join("run.csv");
    let mut csv = Vec::new();
    log.write_csv(&mut csv)
        .map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
    write_file(&csv_path, &csv)?;

    let steps: Vec<f64> = log.records.iter().map(|r| r.step as f64).collect();
    let mut svg_names = Vec::new();
    for name in SERIES {
        let values: Vec<f64> = log.records.iter().map(|r| series_value(r, name)).collect();
        let chart = svg::line_chart("step", &steps, &[(name.to_string(), values)]);
        let file = format!("{name}.svg");
        write_file(&out_dir.join(&file), chart.as_bytes())?;
        svg_names.push(file);
    }

    let dir_name = out_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    let manifest = RunManifest {
        run_id: format!("{dir_name}-seed{}", config.seed),
        seed: config.seed,
        config: config.clone(),
        artifacts: Artifacts {
            csv: "run.csv".to_string(),
            svg: svg_names,
        },
        duration_seconds: duration,
    };
    write_file(
        &out_dir.join("manifest.json"),
        manifest.to_json().as_bytes(),
    )?;
    Ok(log)
}

pub fn cmd_run(config_path: &Path, out_dir: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let config = RunConfig::load(config_path, seed)?;
    let log = run_one(&config, config_path, out_dir)?;
    let last = log.final_record().expect("steps >= 1");
    println!(
        "run complete: {} steps, final mean_reward {:.4}, artifacts in {}",
        log.records.len(),
        last.mean_reward,
        out_dir.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Mu,
    Alpha,
}

impl SweepAxis {
    fn name(self) -> &'static str {
        match self {
            SweepAxis::Mu => "mu",
            SweepAxis::Alpha => "alpha",
        }
    }
}

fn parse_axis_values(axis: SweepAxis, tokens: &[String]) -> Result<Vec<f64>, CliError> {
    if tokens.is_empty() {
        return Err(CliError::Validation("values: at least one required".into()));
    }
    let mut values = Vec::with_capacity(tokens.len());
    for t in tokens {
        let v: f64 = t
            .parse()
            .map_err(|_| CliError::Validation(format!("values: \"{t}\" is not a number")))?;
        let ok = match axis {
            SweepAxis::Mu => (0.0..=1.0).contains(&v),
            SweepAxis::Alpha => v > 0.0 && v <= 1.0,
        };
        if !ok {
            return Err(CliError::Validation(format!(
                "values: {t} outside the legal range for axis {}",
                axis.name()
            )));
        }
        values.push(v);
    }
    for i in 1..values.len() {
        if values[..i].contains(&values[i]) {
            return Err(CliError::Validation(format!(
                "values: duplicate value {}",
                tokens[i]
            )));
        }
    }
    Ok(values)
}

/// Run the cross product of axis values and seeds, one subdirectory per
/// cell, then write a summary CSV. Cells run concurrently up to `jobs`.
pub fn cmd_sweep(
    config_path: &Path,
    axis: SweepAxis,
    value_tokens: &[String],
    seeds: &[u64],
    out_dir: &Path,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let base = RunConfig::load(config_path, None)?;
    if base.advantage.estimator != canon::advantage::Estimator::Canon {
        return Err(CliError::Validation(format!(
            "advantage.estimator: sweeping {} requires the canon estimator",
            axis.name()
        )));
    }
    let values = parse_axis_values(axis, value_tokens)?;
    if seeds.is_empty() {
        return Err(CliError::Validation("seeds: at least one required".into()));
    }
    for i in 1..seeds.len() {
        if seeds[..i].contains(&seeds[i]) {
            return Err(CliError::Validation(format!(
                "seeds: duplicate seed {}",
                seeds[i]
            )));
        }
    }

    struct Cell {
        token: String,
        value: f64,
        seed: u64,
        dir: PathBuf,
        config: RunConfig,
    }

    let mut cells = Vec::new();
    for (token, &value) in value_tokens.iter().zip(&values) {
        for &seed in seeds {
            let mut config = base.clone();
            config.seed = seed;
            match axis {
                SweepAxis::Mu => {
                    // pin the mixture weight for the whole run
                    config.advantage.mu = value;
                    config.schedule.kind = ScheduleKind::Constant;
                    config.schedule.mu = value;
                }
                SweepAxis::Alpha => config.advantage.alpha = value,
            }
            config.validate()?;
            let dir = out_dir.join(format!("{}-{token}-seed-{seed}", axis.name()));
            cells.push(Cell {
                token: token.clone(),
                value,
                seed,
                dir,
                config,
            });
        }
    }

    let execute = |cell: &Cell| -> Result<StepRecord, CliError> {
        let log = run_one(&cell.config, config_path, &cell.dir).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!(
                "cell {}={} seed={}: {m}",
                cell.token, cell.value, cell.seed
            )),
            CliError::Runtime(m) => CliError::Runtime(format!(
                "cell {}={} seed={}: {m}",
                cell.token, cell.value, cell.seed
            )),
        })?;
        Ok(*log.final_record().expect("steps >= 1"))
    };

    #[cfg(feature = "parallel")]
    let results: Vec<Result<StepRecord, CliError>> = {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
        pool.install(|| cells.par_iter().map(execute).collect())
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<StepRecord, CliError>> = {
        let _ = jobs;
        cells.iter().map(execute).collect()
    };

    let mut summary = String::from(
        "axis_value,seed,final_mean_reward,final_mean_entropy_metric,final_mean_length_metric\n",
    );
    for (cell, result) in cells.iter().zip(results) {
        let last = result?;
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            cell.token,
            cell.seed,
            last.mean_reward,
            last.mean_entropy_metric,
            last.mean_length_metric
        ));
    }
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    write_file(&out_dir.join("summary.csv"), summary.as_bytes())?;
    println!(
        "sweep complete: {} cells, summary in {}",
        cells.len(),
        out_dir.join("summary.csv").display()
    );
    Ok(())
}

pub struct VerifyArgs {
    pub p_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub a_plus: f64,
    pub a_minus: f64,
    pub group_size: usize,
    pub n_groups: usize,
    pub seed: u64,
}

impl Default for VerifyArgs {
    fn default() -> Self {
        Self {
            p_grid: (1..=9).map(|i| i as f64 / 10.0).collect(),
            lambda_grid: vec![0.25, 0.5, 0.75],
            a_plus: 0.8,
            a_minus: 0.2,
            group_size: 16,
            n_groups: 200_000,
            seed: 0,
        }
    }
}

/// Print the analytic/empirical verification table and check the equal-split
/// amplification claim: at lambda = 1/2 both ratios exceed 1 for every p,
/// and the Monte-Carlo estimates agree with the closed forms within 4
/// standard errors.
pub fn cmd_verify_theorem(args: &VerifyArgs) -> Result<(), CliError> {
    for (name, grid) in [("p-grid", &args.p_grid), ("lambda-grid", &args.lambda_grid)] {
        if grid.is_empty() {
            return Err(CliError::Validation(format!("{name}: must be non-empty")));
        }
        if grid.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
            return Err(CliError::Validation(format!(
                "{name}: all values must lie strictly inside (0, 1)"
            )));
        }
    }
    for (name, a) in [("a-plus", args.a_plus), ("a-minus", args.a_minus)] {
        if !(0.0..=1.0).contains(&a) {
            return Err(CliError::Validation(format!(
                "{name}: must be within [0, 1]"
            )));
        }
    }
    if args.a_plus == args.a_minus {
        return Err(CliError::Validation(
            "a-plus/a-minus: accuracies must differ for the ratios to be defined".into(),
        ));
    }
    if args.lambda_grid.contains(&0.5) && !args.group_size.is_multiple_of(2) {
        return Err(CliError::Validation(
            "groups: must be even for the lambda = 0.5 split".into(),
        ));
    }
    if args.n_groups == 0 {
        return Err(CliError::Validation("samples: must be at least 1".into()));
    }

    println!(
        "{:>5} {:>6} | {:>8} {:>8} {:>8} {:>8} | {:>7} {:>7} {:>6} | monte-carlo (lambda = 0.5 rows)",
        "p", "lambda", "dr_sat", "dr_non", "in_sat", "in_non", "r_sat", "r_non", "amp>1"
    );
    let mut mc_failures = Vec::new();
    for &lambda in &args.lambda_grid {
        for &p in &args.p_grid {
            let model = ConditionModel::new(p, args.a_plus, args.a_minus, lambda)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let adv = analytic_advantages(&model);
            let ratios = amplification_ratios(p, lambda);
            let region = amplification_region(p, lambda);
            let mut line = format!(
                "{:>5.2} {:>6.2} | {:>8.4} {:>8.4} {:>8.4} {:>8.4} | {:>7.4} {:>7.4} {:>6} |",
                p,
                lambda,
                adv.dr_sat,
                adv.dr_nonsat,
                adv.inter_sat,
                adv.inter_nonsat,
                ratios.sat,
                ratios.nonsat,
                region
            );
            if lambda == 0.5 {
                let est = mc_oracle(&model, args.group_size, args.n_groups, args.seed)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                let worst_radius = 4.0
                    * [
                        est.std_errors.dr_sat,
                        est.std_errors.dr_nonsat,
                        est.std_errors.inter_sat,
                        est.std_errors.inter_nonsat,
                    ]
                    .into_iter()
                    .fold(0.0f64, f64::max);
                if worst_radius > SE_BUDGET {
                    return Err(CliError::Validation(format!(
                        "insufficient samples: 4*SE = {worst_radius:.4} exceeds the {SE_BUDGET} budget \
                         at p={p}; increase --samples"
                    )));
                }
                let z = est.max_abs_z(&adv);
                let ratio = (est.means.inter_sat / est.means.dr_sat).abs();
                line.push_str(&format!(
                    " emp: dr=({:.4},{:.4}) inter=({:.4},{:.4}) |z|max={:.2} ratio={:.4}",
                    est.means.dr_sat,
                    est.means.dr_nonsat,
                    est.means.inter_sat,
                    est.means.inter_nonsat,
                    z,
                    ratio
                ));
                if z > 4.0 {
                    mc_failures.push(format!("p={p}: max |z| = {z:.2} exceeds 4"));
                }
            }
            println!("{line}");
        }
    }

    let universal = amplification_universal(0.5, &args.p_grid)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    println!("equal-split amplification holds for every p in the grid: {universal}");
    if !mc_failures.is_empty() {
        return Err(CliError::Runtime(format!(
            "monte-carlo disagreement:\n{}",
            mc_failures.join("\n")
        )));
    }
    if !universal {
        return Err(CliError::Runtime(
            "equal-split amplification check failed on the p grid".into(),
        ));
    }
    println!("verification passed");
    Ok(())
}

/// Plot selected CSV columns as one SVG line chart.
pub fn cmd_plot(csv_path: &Path, series: &[String], out_path: &Path) -> Result<(), CliError> {
    if series.is_empty() {
        return Err(CliError::Validation("series: at least one required".into()));
    }
    let text = fs::read_to_string(csv_path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", csv_path.display())))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| CliError::Validation("csv: empty file".into()))?
        .split(',')
        .collect();

    let mut columns = Vec::with_capacity(series.len());
    for name in series {
        let idx = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Validation(format!("csv: column \"{name}\" not found")))?;
        columns.push(idx);
    }
    let x_idx = header.iter().position(|h| *h == "step");

    let mut x = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); series.len()];
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let parse = |idx: usize| -> Result<f64, CliError> {
            cells.get(idx).and_then(|c| c.parse().ok()).ok_or_else(|| {
                CliError::Validation(format!(
                    "csv: row {} column {} is not numeric",
                    row + 2,
                    header.get(idx).unwrap_or(&"?")
                ))
            })
        };
        x.push(match x_idx {
            Some(idx) => parse(idx)?,
            None => row as f64,
        });
        for (slot, &idx) in values.iter_mut().zip(&columns) {
            slot.push(parse(idx)?);
        }
    }
    if x.is_empty() {
        return Err(CliError::Validation("csv: no data rows".into()));
    }

    let named: Vec<(String, Vec<f64>)> = series.iter().cloned().zip(values).collect();
    let chart = svg::line_chart(if x_idx.is_some() { "step" } else { "index" }, &x, &named);
    write_file(out_path, chart.as_bytes())?;
    println!("wrote {}", out_path.display());
    Ok(())
}

/// Column order sanity shared with the library: keep SERIES in sync with the
/// CSV header.
pub fn series_columns_match_csv_header() -> bool {
    CSV_HEADER == format!("step,{}", SERIES.join(","))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}
