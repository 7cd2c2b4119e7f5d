use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use relclust_core::clustering::{
    kcenter_constant, kcenter_refined, kmeans_constant, ClusterSolution, KMeansConfig, Objective,
};
use relclust_core::gonzalez::{diversity_solve, DiversityObjective};
use relclust_core::oracles::{count_rect, parse_box_literal, report_rect, repr_rect, sample_rect};
use relclust_core::relational::{count_join, load_instance_from_path, semi_join_reduce};
use relclust_core::verify::checks::{run_on_instance, time_oracles};
use relclust_core::verify::synth::scaling_chain;
use relclust_core::verify::{brute_cost, cost_bounds, FLOAT_SLACK};
use relclust_core::{Error, Instance};

/// Largest join `--verify full-brute` will materialize.
const FULL_BRUTE_LIMIT: u64 = 100_000;
/// Largest join the `verify` command checks exhaustively.
const VERIFY_LIMIT: u64 = 10_000;

#[derive(Parser)]
#[command(
    name = "relclust",
    version,
    about = "Clustering over acyclic join results without materializing the join"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an instance, reduce it and report the join size.
    Ingest {
        #[arg(short, long)]
        instance: PathBuf,
    },
    /// Compute k centers.
    Cluster {
        #[arg(short, long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        objective: ClusterObjective,
        #[arg(short)]
        k: usize,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = VerifyLevel::Off)]
        verify: VerifyLevel,
        /// Write the JSON solution here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run one oracle over a closed box such as "A:0..4,B:1..2".
    Query {
        #[arg(short, long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        kind: QueryKindArg,
        #[arg(long = "box", default_value = "")]
        rect: String,
        /// Number of draws for `--kind sample`.
        #[arg(short, long, default_value_t = 10)]
        z: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Select k diverse join results.
    Diversity {
        #[arg(short, long)]
        instance: PathBuf,
        #[arg(long)]
        objective: DiversityObjective,
        #[arg(short)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the acceptance checks that apply to one instance.
    Verify {
        #[arg(short, long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time the box count and one ball inactivation at growing input sizes.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [10_000usize, 20_000])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ClusterObjective {
    Kcenter,
    KcenterRefined,
    Kmedian,
    Kmeans,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifyLevel {
    Off,
    Sandwich,
    FullBrute,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryKindArg {
    Count,
    Sample,
    Report,
    Repr,
}

enum Failure {
    Config(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(3)
        }
    }
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let inst = load_instance_from_path(path)?;
    log::info!(
        "loaded {} relations, {} attributes",
        inst.relation_count(),
        inst.schema().len()
    );
    Ok(inst)
}

fn check_epsilon(epsilon: f64) -> Outcome {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Failure::Config(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}

fn emit(text: &str, output: Option<&Path>) -> Outcome {
    match output {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| Failure::Config(format!("{}: {e}", p.display()))),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Config(e.to_string())),
            _ => Ok(()),
        },
    }
}

fn points_json(points: &[Vec<f64>]) -> String {
    serde_json::to_string(points).expect("finite coordinates serialize")
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Ingest { instance } => {
            let inst = load(&instance)?;
            let reduced = semi_join_reduce(&inst)?;
            println!("relations: {}", inst.relation_count());
            for (before, after) in inst.relations().iter().zip(reduced.relations()) {
                println!(
                    "  {}: {} rows, {} after reduction",
                    before.name(),
                    before.len(),
                    after.len()
                );
            }
            println!("dimensions: {}", inst.dim_names().join(","));
            println!("join size: {}", count_join(&reduced)?);
            Ok(())
        }
        Command::Cluster {
            instance,
            objective,
            k,
            epsilon,
            seed,
            verify,
            output,
        } => {
            check_epsilon(epsilon)?;
            let inst = load(&instance)?;
            if verify == VerifyLevel::FullBrute {
                let n = count_join(&inst)?;
                if n > FULL_BRUTE_LIMIT {
                    return Err(Failure::Config(format!(
                        "full-brute verification refused: {n} join results exceed {FULL_BRUTE_LIMIT}"
                    )));
                }
            }
            eprintln!("seed: {seed}");
            let sol = match objective {
                ClusterObjective::Kcenter => kcenter_constant(&inst, k, epsilon, seed)?,
                ClusterObjective::KcenterRefined => kcenter_refined(&inst, k, epsilon, seed)?,
                ClusterObjective::Kmedian => {
                    kmeans_constant(&inst, k, epsilon, Objective::KMedian, seed, &KMeansConfig::default())?
                }
                ClusterObjective::Kmeans => {
                    kmeans_constant(&inst, k, epsilon, Objective::KMeans, seed, &KMeansConfig::default())?
                }
            };
            emit(&sol.to_json(), output.as_deref())?;
            check_solution(&inst, &sol, verify, seed)
        }
        Command::Query {
            instance,
            kind,
            rect,
            z,
            seed,
        } => {
            let inst = load(&instance)?;
            let rect = parse_box_literal(&inst, &rect)?;
            match kind {
                QueryKindArg::Count => println!("{}", count_rect(&inst, &rect)?),
                QueryKindArg::Sample => {
                    eprintln!("seed: {seed}");
                    println!("{}", points_json(&sample_rect(&inst, &rect, z, seed)?));
                }
                QueryKindArg::Report => println!("{}", points_json(&report_rect(&inst, &rect)?)),
                QueryKindArg::Repr => match repr_rect(&inst, &rect)? {
                    Some(p) => println!("{}", points_json(&[p])),
                    None => println!("[]"),
                },
            }
            Ok(())
        }
        Command::Diversity {
            instance,
            objective,
            k,
            epsilon,
            seed,
            output,
        } => {
            check_epsilon(epsilon)?;
            let inst = load(&instance)?;
            eprintln!("seed: {seed}");
            let sol = diversity_solve(&inst, k, objective, epsilon, seed)?;
            emit(&sol.to_json(), output.as_deref())
        }
        Command::Verify { instance, seed } => {
            let inst = load(&instance)?;
            let n = count_join(&inst)?;
            if n > VERIFY_LIMIT {
                return Err(Failure::Config(format!(
                    "verify needs at most {VERIFY_LIMIT} join results, got {n}"
                )));
            }
            eprintln!("seed: {seed}");
            let reports = run_on_instance(&inst, seed)?;
            let mut out = std::io::stdout().lock();
            for r in &reports {
                writeln!(out, "{r}").map_err(|e| Failure::Config(e.to_string()))?;
            }
            let failed: Vec<String> = reports
                .iter()
                .filter(|r| !r.passed())
                .map(|r| format!("criterion {} ({})", r.id, r.name))
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Verification(failed.join(", ")))
            }
        }
        Command::Bench { sizes, seed } => {
            if sizes.is_empty() {
                return Err(Failure::Config("no sizes given".into()));
            }
            eprintln!("seed: {seed}");
            println!(
                "{:>10} {:>12} {:>14} {:>14}",
                "rows", "join size", "count_rect ms", "inactive ms"
            );
            for &rows in &sizes {
                let inst = scaling_chain(rows, seed);
                let (c, i) = time_oracles(&inst, seed)?;
                println!(
                    "{rows:>10} {:>12} {:>14.3} {:>14.3}",
                    count_join(&inst)?,
                    c * 1e3,
                    i * 1e3
                );
            }
            Ok(())
        }
    }
}

fn check_solution(inst: &Instance, sol: &ClusterSolution, level: VerifyLevel, seed: u64) -> Outcome {
    let claimed = sol.cost_estimate;
    match level {
        VerifyLevel::Off => Ok(()),
        VerifyLevel::Sandwich => {
            let b = cost_bounds(inst, &sol.centers, sol.objective, seed)?;
            eprintln!(
                "cost in [{:.12e}, {:.12e}], claimed bound {claimed:.12e}",
                b.lower, b.upper
            );
            if b.lower > claimed * (1.0 + FLOAT_SLACK) {
                Err(Failure::Verification(format!(
                    "cost certificate: cost is at least {} but the solution claims at most {claimed}",
                    b.lower
                )))
            } else {
                Ok(())
            }
        }
        VerifyLevel::FullBrute => {
            let all = relclust_core::relational::enumerate_join(inst, None)?;
            let exact = brute_cost(&all, &sol.centers, sol.objective)?;
            eprintln!("exact cost {exact:.12e}, claimed bound {claimed:.12e}");
            if exact > claimed * (1.0 + FLOAT_SLACK) {
                Err(Failure::Verification(format!(
                    "cost certificate: exact cost {exact} exceeds the claimed bound {claimed}"
                )))
            } else {
                Ok(())
            }
        }
    }
}
