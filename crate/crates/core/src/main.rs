use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use deeprc::experiment::{emit_plots, export_csv, run_experiment, Arm, ExperimentConfig};
use deeprc::lemma::{lifted_deficiency, run_all};
use deeprc::lifting::lifting_deviation;
use deeprc::{Policy, Result};

#[derive(Parser)]
#[command(name = "deeprc", version, about = "Data-driven repetitive control on a periodic plant")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the closed-loop comparison and write CSV logs and plots.
    Run(RunArgs),
    /// Check the rank conditions on randomly drawn systems.
    VerifyLemma {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-8)]
        rel_tol: f64,
    },
    /// Compare sample-wise and lifted simulation of the configured plant.
    LiftCheck {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        periods: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with [plant], [controller] and [experiment] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Disable the measurement noise.
    #[arg(long)]
    no_noise: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// full-period or first-sample.
    #[arg(long)]
    policy: Option<Policy>,
    #[arg(long)]
    init_periods: Option<usize>,
    #[arg(long)]
    run_periods: Option<usize>,
    /// Skip the SVG figures.
    #[arg(long)]
    no_plots: bool,
}

fn load(path: &Option<PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::case_study()),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.experiment.seed = seed;
    }
    if args.no_noise {
        cfg.experiment.noise = false;
    }
    if let Some(policy) = args.policy {
        cfg.controller.policy = policy;
    }
    if let Some(n) = args.init_periods {
        cfg.experiment.init_periods = n;
    }
    if let Some(n) = args.run_periods {
        cfg.experiment.run_periods = n;
    }
    let report = run_experiment(&cfg)?;
    let mut files = export_csv(&report, &args.out)?;
    if !args.no_plots {
        files.extend(emit_plots(&report, &cfg.controller, &args.out)?);
    }
    println!(
        "seed {} policy {} noise {} ({:.1} s)",
        report.metadata.seed, report.metadata.policy, report.metadata.noise, report.metadata.wall_seconds
    );
    for arm in Arm::ALL {
        let costs = report.post_enable_costs(arm);
        let tail = &costs[costs.len().saturating_sub(20)..];
        println!("{:>10}: mean cost {:.6e}, last 20 {:.6e}", arm.label(), mean(costs), mean(tail));
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn verify_lemma(seed: u64, trials: usize, rel_tol: f64) -> Result<bool> {
    let mut ok = true;
    for suite in run_all(seed, trials, rel_tol)? {
        println!(
            "{:<12} {}/{} {} max residual {} ({:.2} s)",
            suite.name,
            suite.pass_count(),
            suite.rows.len(),
            if suite.passed() { "PASS" } else { "FAIL" },
            suite.max_residual().map_or("-".into(), |r| format!("{r:.2e}")),
            suite.seconds
        );
        ok &= suite.passed();
    }
    let plant = ExperimentConfig::case_study().plant.build()?;
    let lifted = deeprc::lift_system(&plant, 0);
    let d = DVector::from_fn(plant.period() * plant.disturbances(), |i, _| {
        deeprc::experiment::periodic_disturbance(i as i64, plant.period(), 1.0)
    });
    let def = lifted_deficiency(&lifted, &d, 2, seed, rel_tol)?;
    let pass = def.report.deficiency() == def.expected_deficiency;
    println!(
        "lifted plant rank {} of {} deficiency {} expected {} {}",
        def.report.rank.rank,
        def.report.full_rank,
        def.report.deficiency(),
        def.expected_deficiency,
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(ok && pass)
}

fn lift_check(config: &Option<PathBuf>, seed: u64, periods: usize) -> Result<bool> {
    let cfg = load(config)?;
    let plant = cfg.plant.build()?;
    let n = periods * plant.period();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |dim: usize| -> Vec<DVector<f64>> {
        (0..n)
            .map(|_| DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng)))
            .collect()
    };
    let u = draw(plant.inputs());
    let d = draw(plant.disturbances());
    let e = draw(plant.outputs());
    let x0 = DVector::from_fn(plant.states(), |_, _| StandardNormal.sample(&mut rng));
    let dev = lifting_deviation(&plant, &x0, 0, &u, &d, &e)?;
    let pass = dev <= 1e-10;
    println!("max deviation {dev:.3e} over {periods} periods {}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args).map(|_| true),
        Command::VerifyLemma { seed, trials, rel_tol } => verify_lemma(seed, trials, rel_tol),
        Command::LiftCheck { config, seed, periods } => lift_check(&config, seed, periods),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
