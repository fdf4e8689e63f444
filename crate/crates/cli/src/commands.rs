use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use quantbid_core::adversaries::verify_swap_trajectory;
use quantbid_core::analysis::hindsight::AGREEMENT_TOL;
use quantbid_core::analysis::myerson::{myerson_revenue, MyersonMethod};
use quantbid_core::engine::game::IDENTITY_TOL;
use quantbid_core::engine::report::recompute;
use quantbid_core::engine::{
    formats_to_validate, identity_suite, read_rounds_csv, run_game, run_replicas, summarize, write_rounds_csv, write_summary,
    GameConfig, SummaryReport, Trajectory,
};
use quantbid_core::Error;

/// Exit status 1 or 2.
#[derive(Debug)]
pub enum Failure {
    Assertion(anyhow::Error),
    Config(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Checkpoint { .. } | Error::FormatRejected { .. } | Error::RewardOutOfRange { .. } | Error::NonFinite { .. } => {
                Failure::Assertion(e.into())
            }
            other => Failure::Config(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

type Outcome = Result<(), Failure>;

fn assertion(msg: String) -> Failure {
    Failure::Assertion(anyhow!(msg))
}

fn output_path(configured: Option<&str>, default: &str, out_dir: Option<&Path>, replica: Option<u64>) -> PathBuf {
    let base = PathBuf::from(configured.unwrap_or(default));
    let mut path = match out_dir {
        Some(dir) => dir.join(base.file_name().unwrap_or(default.as_ref())),
        None => base,
    };
    if let Some(i) = replica {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out").to_string();
        let name = match path.extension().and_then(|e| e.to_str()) {
            Some(ext) => format!("{stem}_r{i}.{ext}"),
            None => format!("{stem}_r{i}"),
        };
        path.set_file_name(name);
    }
    path
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn print_summary(s: &SummaryReport) {
    let nan = |v: Option<f64>| v.map_or_else(|| "nan (irregular prior)".to_string(), |x| format!("{x:.6}"));
    println!("rounds {}  mode {}  seed {}", s.rounds, s.mode.name(), s.seed);
    println!("total revenue {:.6}  Mye*T {}  slack {}", s.total_revenue, nan(s.mye_total()), nan(s.slack()));
    for (i, (r, w)) in s.regret.iter().zip(&s.swap).enumerate() {
        println!(
            "bidder {}: regret {:.6}  swap regret {:.6}  hindsight gap {:.2e}",
            i + 1,
            r.regret,
            w.swap_regret,
            r.agreement_gap
        );
    }
    println!("max identity diff {:.3e}", s.max_identity_diff);
}

fn write_outputs(traj: &Trajectory, out_dir: Option<&Path>, replica: Option<u64>) -> Result<SummaryReport, Failure> {
    let c = &traj.config;
    let summary = summarize(traj, &c.distributions()?)?;
    let csv_path = output_path(c.output.rounds_csv.as_deref(), "rounds.csv", out_dir, replica);
    let mut w = create(&csv_path)?;
    write_rounds_csv(traj, &mut w)?;
    w.flush().context("flushing rounds CSV")?;
    let summary_path = output_path(c.output.summary.as_deref(), "summary.toml", out_dir, replica);
    let mut w = create(&summary_path)?;
    write_summary(&summary, &mut w)?;
    w.flush().context("flushing summary")?;
    println!("wrote {} and {}", csv_path.display(), summary_path.display());
    Ok(summary)
}

pub fn simulate(config: &Path, out_dir: Option<&Path>, replicas: u64) -> Outcome {
    let config = GameConfig::from_path(config)?;
    let trajectories: Vec<Trajectory> = if replicas == 1 {
        vec![run_game(&config)?]
    } else {
        run_replicas(&config, replicas).into_iter().collect::<Result<_, _>>()?
    };
    let mut worst = 0.0f64;
    for (i, traj) in trajectories.iter().enumerate() {
        let summary = write_outputs(traj, out_dir, (replicas > 1).then_some(i as u64))?;
        print_summary(&summary);
        for (b, r) in summary.regret.iter().enumerate() {
            if !r.agrees() {
                eprintln!("warning: bidder {} hindsight optima differ by {:.3e} per round (> {AGREEMENT_TOL:e})", b + 1, r.agreement_gap);
            }
        }
        worst = worst.max(summary.max_identity_diff);
    }
    if worst > IDENTITY_TOL {
        return Err(assertion(format!("identity gap {worst:.3e} exceeds {IDENTITY_TOL:e}")));
    }
    Ok(())
}

pub fn verify_identity(trials: u64, max_n: usize, max_k: usize, seed: u64) -> Outcome {
    if max_n == 0 || max_k == 0 {
        return Err(Failure::Config(anyhow!("--max-n and --max-k must be at least 1")));
    }
    let results = identity_suite(trials, max_n, max_k, seed)?;
    println!("{:>6} {:>2} {:>2} {:>22} {:>22} {:>10}", "trial", "n", "K", "lhs", "rhs", "|diff|");
    for t in &results {
        println!("{:>6} {:>2} {:>2} {:>22.15e} {:>22.15e} {:>10.3e}", t.id, t.n, t.k, t.lhs, t.rhs, t.diff);
    }
    let max = results.iter().map(|t| t.diff).fold(0.0, f64::max);
    let failures = results.iter().filter(|t| t.diff > IDENTITY_TOL).count();
    println!("max |diff| = {max:.3e} over {trials} trials ({failures} above {IDENTITY_TOL:e})");
    if failures > 0 {
        return Err(assertion(format!("{failures} trials exceed the identity tolerance")));
    }
    Ok(())
}

pub fn swap_demo(eta: f64, batches: u64) -> Outcome {
    let r = verify_swap_trajectory(eta, batches)?;
    let inst = r.instance;
    println!("eta {eta}  alpha {}  batches {}  T {}", inst.alpha, inst.beta, inst.horizon());
    println!("checkpoints passed {}", r.checkpoints_passed);
    println!("phase-2 mass per batch {:.12} (predicted {:.12})", r.phase2_mass[0], inst.phase2_mass());
    println!(
        "swap regret {:.6}  mapping {:?}  fixed mapping [1, 1, 2] gains {:.6}",
        r.swap.swap_regret, r.swap.mapping, r.proof_mapping_value
    );
    println!("external regret {:.6}  bound T/1200 = {:.3}", r.swap.external_regret, r.bound);
    if r.swap.swap_regret < r.bound {
        return Err(assertion(format!("swap regret {:.6} is below T/1200 = {:.3}", r.swap.swap_regret, r.bound)));
    }
    Ok(())
}

pub fn myerson(config: &Path) -> Outcome {
    let config = GameConfig::from_path(config)?;
    let r = myerson_revenue(&config.distributions()?)?;
    let method = match r.method {
        MyersonMethod::ClosedForm => "closed form",
        MyersonMethod::Quadrature => "quadrature",
    };
    println!("mye_per_round = {}", r.revenue);
    println!("mye_total = {}", r.revenue * config.horizon as f64);
    println!("method = {method}, error bound {:.1e}", r.error_bound);
    Ok(())
}

pub fn validate_format(path: &Path) -> Outcome {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let targets = formats_to_validate(&text).map_err(|e| Failure::from(e).context(path))?;
    let mut failed = 0;
    for (label, format) in &targets {
        let report = format.validate()?;
        if !report.passed() {
            failed += 1;
        }
        println!("{label}: {}", report.summary());
    }
    if failed > 0 {
        return Err(assertion(format!("{failed} of {} formats failed validation", targets.len())));
    }
    Ok(())
}

pub fn regret_report(rounds_csv: &Path, config: Option<&Path>) -> Outcome {
    let file = File::open(rounds_csv).with_context(|| format!("opening {}", rounds_csv.display()))?;
    let table = read_rounds_csv(file).map_err(|e| Failure::from(e).context(rounds_csv))?;
    let config = config.map(GameConfig::from_path).transpose()?;
    let r = recompute(&table, config.as_ref())?;
    println!("rounds = {}", r.rounds);
    println!("total_conditional_revenue = {}", r.total_conditional_revenue);
    if let Some(v) = r.total_realized_revenue {
        println!("total_realized_revenue = {v}");
    }
    println!("max_identity_diff = {:e}", r.max_identity_diff);
    match &r.regrets {
        Some(list) => {
            for (i, (reg, swap)) in list.iter().enumerate() {
                println!("regret_bidder_{} = {reg}", i + 1);
                println!("swap_regret_bidder_{} = {swap}", i + 1);
            }
        }
        None => println!("(pass --config to recompute regrets)"),
    }
    Ok(())
}

trait FailureContext {
    fn context(self, path: &Path) -> Failure;
}

impl FailureContext for Failure {
    fn context(self, path: &Path) -> Failure {
        let ctx = path.display().to_string();
        match self {
            Failure::Assertion(e) => Failure::Assertion(e.context(ctx)),
            Failure::Config(e) => Failure::Config(e.context(ctx)),
        }
    }
}
