//! Subcommand implementations.

use std::env;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};

use gridtrade_core::{
    evolve, exhaustive_best, generate, settle, EvolveResult, GaConfig, OracleSpec, Scenario,
};

use crate::io::{
    self, gen_spec_sidecar, matrix_csv, read_scenario_file, settlement_csv, sig9, stats_csv,
    write_scenario_file, RunManifest, ScenarioFile,
};
use crate::{GenerateArgs, OracleArgs, RunArgs, SweepArgs};

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let spec = args.to_spec();
    let scenario = generate(&spec)?;
    let file = ScenarioFile::from_scenario(&scenario);
    write_scenario_file(&args.out, &file)?;
    io::write_json_pretty(&gen_spec_sidecar(&args.out), &spec)?;
    let buyers = file.microgrids.iter().filter(|m| m.role.is_some()).count();
    println!(
        "wrote {} ({} microgrids, {} buyers) and {}",
        args.out.display(),
        scenario.n(),
        buyers,
        gen_spec_sidecar(&args.out).display()
    );
    Ok(())
}

fn load_scenario(path: &std::path::Path) -> Result<(Scenario, String)> {
    let (file, digest) = read_scenario_file(path)?;
    let scenario = file.into_scenario();
    scenario.validate().context("scenario failed validation")?;
    Ok((scenario, digest))
}

fn output_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| env::var_os("GRIDTRADE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let (scenario, digest) = load_scenario(&args.scenario)?;
    let config = args.ga.to_config(scenario.thv, args.weights.to_weights());
    let started = Instant::now();
    let result = evolve(&scenario, &config)?;
    let duration_secs = started.elapsed().as_secs_f64();
    let out = output_dir(&args.out);
    write_run_outputs(&out, &result)?;

    let gen_spec = std::fs::read(gen_spec_sidecar(&args.scenario))
        .ok()
        .and_then(|bytes| serde_json::from_slice(&bytes).ok());
    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        scenario_digest: digest,
        config,
        gen_spec,
        duration_secs,
        final_stable_count: result.best_breakdown.stable_count,
        final_best_fitness: result.best_breakdown.score,
    };
    io::write_json_pretty(&out.join("manifest.json"), &manifest)?;

    println!("best_fitness: {}", sig9(result.best_breakdown.score));
    println!("stable_count: {}", result.best_breakdown.stable_count);
    println!("duration_secs: {duration_secs:.2}");
    println!("out_dir: {}", out.display());
    Ok(())
}

fn write_run_outputs(out: &std::path::Path, result: &EvolveResult) -> Result<()> {
    io::atomic_write(&out.join("stats.csv"), &stats_csv(&result.stats))?;
    io::atomic_write(&out.join("best_trades.csv"), &matrix_csv(&result.best))?;
    let finals = settle(&result.scenario, &result.best)?;
    io::atomic_write(
        &out.join("settlement.csv"),
        &settlement_csv(&result.scenario, &finals, &result.best),
    )?;
    Ok(())
}

/// One point of a sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub generations: usize,
    pub pop: usize,
    pub elite: usize,
    pub pmin: f64,
}

impl SweepPoint {
    pub fn config_id(&self) -> String {
        format!(
            "G{}_P{}_E{}_M{}",
            self.generations, self.pop, self.elite, self.pmin
        )
    }
}

fn parse_config_tuple(raw: &str) -> Result<SweepPoint> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 4 {
        bail!("config '{raw}' must have the form generations:pop:elite:pmin");
    }
    Ok(SweepPoint {
        generations: parts[0]
            .parse()
            .with_context(|| format!("bad generations in '{raw}'"))?,
        pop: parts[1]
            .parse()
            .with_context(|| format!("bad pop in '{raw}'"))?,
        elite: parts[2]
            .parse()
            .with_context(|| format!("bad elite in '{raw}'"))?,
        pmin: parts[3]
            .parse()
            .with_context(|| format!("bad pmin in '{raw}'"))?,
    })
}

pub fn sweep_points(args: &SweepArgs) -> Result<Vec<SweepPoint>> {
    if !args.configs.is_empty() {
        return args.configs.iter().map(|s| parse_config_tuple(s)).collect();
    }
    if args.generations.is_empty()
        || args.pop.is_empty()
        || args.elite.is_empty()
        || args.pmin.is_empty()
    {
        bail!(
            "empty sweep grid: pass --configs or all of --generations, --pop, --elite and --pmin"
        );
    }
    let mut points = Vec::new();
    for &generations in &args.generations {
        for &pop in &args.pop {
            for &elite in &args.elite {
                for &pmin in &args.pmin {
                    points.push(SweepPoint {
                        generations,
                        pop,
                        elite,
                        pmin,
                    });
                }
            }
        }
    }
    Ok(points)
}

pub const SWEEP_HEADER: &str =
    "config_id,generations,pop_size,elite_size,p_min,fitness,stable_count,seconds";

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let points = sweep_points(args)?;
    if points.len() > args.max_runs {
        bail!(
            "sweep grid has {} configurations, above the budget of {} (raise --max-runs)",
            points.len(),
            args.max_runs
        );
    }
    let (scenario, _) = load_scenario(&args.scenario)?;
    let weights = args.weights.to_weights();

    let mut table = String::from(SWEEP_HEADER);
    table.push('\n');
    println!("{SWEEP_HEADER}");
    for point in &points {
        let config = GaConfig {
            pop_size: point.pop,
            generations: point.generations,
            elite_size: point.elite,
            mating_pool_size: args.mating_pool.unwrap_or_else(|| (point.pop / 4).max(2)),
            p_min: point.pmin,
            sigma: args.sigma.unwrap_or(0.1 * scenario.thv),
            seed: args.seed,
            weights: weights.clone(),
            policy: args.policy.into(),
        };
        let started = Instant::now();
        let result = evolve(&scenario, &config)?;
        let seconds = started.elapsed().as_secs_f64();
        let row = format!(
            "{},{},{},{},{},{},{},{:.2}",
            point.config_id(),
            point.generations,
            point.pop,
            point.elite,
            point.pmin,
            sig9(result.best_breakdown.score),
            result.best_breakdown.stable_count,
            seconds,
        );
        println!("{row}");
        table.push_str(&row);
        table.push('\n');
    }
    io::atomic_write(&args.out, &table)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let (scenario, _) = load_scenario(&args.scenario)?;
    let weights = args.weights.to_weights();
    let policy = args.policy.into();

    // Resolve roles exactly as the optimizer will (same seed, same coin
    // order) so both searches see one scenario.
    let mut roled = scenario.clone();
    {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
        roled.assign_roles(&mut rng)?;
    }
    let spec = OracleSpec {
        grid_step: args.step.unwrap_or(scenario.thv / 8.0),
        max_cells: args.max_cells,
    };
    let (_, oracle_fit) = exhaustive_best(&roled, &spec, &weights, policy)?;

    let config = GaConfig {
        pop_size: args.pop,
        generations: args.generations,
        elite_size: args.elite,
        mating_pool_size: args.mating_pool.unwrap_or_else(|| (args.pop / 4).max(2)),
        p_min: args.pmin,
        sigma: args.sigma.unwrap_or(0.1 * scenario.thv),
        seed: args.seed,
        weights,
        policy,
    };
    let ga = evolve(&scenario, &config)?;

    let ratio = fitness_ratio(ga.best_breakdown.score, oracle_fit.score);
    println!("oracle_fitness: {}", sig9(oracle_fit.score));
    println!("ga_fitness: {}", sig9(ga.best_breakdown.score));
    println!("ratio: {ratio:.4}");
    Ok(())
}

/// GA-to-oracle score ratio; equal scores (including the trivial all-zero
/// optimum) count as parity.
pub fn fitness_ratio(ga: f64, oracle: f64) -> f64 {
    if (ga - oracle).abs() <= 1e-12 {
        1.0
    } else {
        ga / oracle
    }
}
