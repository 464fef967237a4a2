//! Command line for the freeze-tree toolkit: simulate trees by either
//! construction, enumerate exact distributions, exercise the binary-tree
//! bijection, print asymptotic constants, run SIR experiments, and verify
//! the statistical suites.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use freeze_tree::asymptotics::linear_constants;
use freeze_tree::attach::{build_attach, enumerate_trees, DEFAULT_ENUMERATION_CAP};
use freeze_tree::bijection;
use freeze_tree::coalescent::build_coalescent;
use freeze_tree::export::{tree_to_dot, tree_to_json_string, tree_to_tsv};
use freeze_tree::harness::{
    canonical_json_string, csv_escape, default_out_dir, run_experiment, RunManifest,
};
use freeze_tree::rng::stream_rng;
use freeze_tree::seq::SignSequence;
use freeze_tree::seqgen::{
    gen_constant_plus, gen_iid, gen_iid_conditioned, read_sequence_file, write_sequence,
    DEFAULT_REJECTION_CAP,
};
use freeze_tree::sir::{
    default_survival_threshold, fluid_comparison, fluid_solve, gen_sir, geometric_offspring_check,
    survival_filter,
};
use freeze_tree::stats::summarize;
use freeze_tree::tree::FreezeTree;
use freeze_tree::verify::{run_suite, Suite, VerifyConfig, DEFAULT_MASTER_SEED};
use rand::Rng;

#[derive(Parser)]
#[command(
    name = "freeze-tree",
    about = "Uniform attachment trees with freezing",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BuilderArg {
    Attach,
    Coalescent,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    ConstantPlus,
    Iid,
    Sir,
    Explicit,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Tsv,
    Dot,
}

#[derive(Args)]
struct SequenceArgs {
    /// Sequence family to draw from.
    #[arg(long, value_enum, default_value = "constant-plus")]
    kind: KindArg,
    /// Probability of +1 for the i.i.d. kind.
    #[arg(long, default_value_t = 0.75)]
    p: f64,
    /// Per-step SIR rate (lambda_n).
    #[arg(long)]
    lambda: Option<f64>,
    /// Total SIR rate; lambda_n = lambda / n.
    #[arg(long)]
    lambda_total: Option<f64>,
    /// Horizon n (for SIR: the initial susceptible count).
    #[arg(long)]
    n: Option<usize>,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Condition i.i.d. sequences on tau > n by rejection.
    #[arg(long)]
    condition_survival: bool,
    /// File with one ±1 per line, for the explicit kind.
    #[arg(long)]
    x: Option<PathBuf>,
}

impl SequenceArgs {
    fn n(&self) -> Result<usize, String> {
        self.n
            .ok_or_else(|| "this sequence kind needs --n".to_string())
    }

    fn lambda_n(&self) -> Result<f64, String> {
        match (self.lambda, self.lambda_total) {
            (Some(l), None) => Ok(l),
            (None, Some(total)) => Ok(total / self.n()? as f64),
            (None, None) => Err("SIR needs --lambda or --lambda-total".into()),
            (Some(_), Some(_)) => Err("give exactly one of --lambda, --lambda-total".into()),
        }
    }

    fn generate(&self) -> Result<SignSequence, String> {
        let mut rng = stream_rng(self.seed, 0);
        match self.kind {
            KindArg::ConstantPlus => Ok(gen_constant_plus(self.n()?)),
            KindArg::Iid => {
                if self.condition_survival {
                    gen_iid_conditioned(self.p, self.n()?, &mut rng, DEFAULT_REJECTION_CAP)
                        .map_err(|e| e.to_string())
                } else {
                    Ok(gen_iid(self.p, self.n()?, &mut rng))
                }
            }
            KindArg::Sir => {
                let lambda_n = self.lambda_n()?;
                gen_sir(self.n()?, lambda_n, &mut rng)
                    .map(|(x, _)| x)
                    .map_err(|e| e.to_string())
            }
            KindArg::Explicit => {
                let path = self.x.as_ref().ok_or("explicit kind needs --x <file>")?;
                read_sequence_file(path).map_err(|e| e.to_string())
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build one tree and write it out (or run a manifest of replications).
    Simulate {
        #[arg(long, value_enum, default_value = "attach")]
        builder: BuilderArg,
        #[command(flatten)]
        sequence: SequenceArgs,
        /// Output format for single-tree runs.
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the generated sequence here.
        #[arg(long)]
        save_sequence: Option<PathBuf>,
        /// Write the coalescent merge log (CSV: i,root1,root2) here.
        #[arg(long)]
        save_merge_log: Option<PathBuf>,
        /// Run a full RunManifest (JSON) instead of a single build.
        #[arg(long, conflicts_with_all = ["builder", "format", "out"])]
        manifest: Option<PathBuf>,
    },
    /// Exhaustively enumerate the exact tree distribution of a sequence.
    Enumerate {
        /// Sequence file, one ±1 per line.
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u128,
        /// CSV output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Round-trip checks and tangent-number counting for the bijection.
    Bijection {
        /// Verify both round trips over all members with at most this many
        /// vertices.
        #[arg(long)]
        roundtrip: bool,
        #[arg(long, default_value_t = 6)]
        max_n: usize,
        /// Count the fully frozen trees on this many vertices.
        #[arg(long)]
        count_t0n: Option<usize>,
        /// Use the exhaustive enumeration (n <= 7) instead of the recurrence.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Print the linear-regime constants, or the whole curve as CSV.
    Constants {
        #[arg(long)]
        c: Option<f64>,
        /// Emit the height-constant curve on a c-grid.
        #[arg(long)]
        curve: bool,
        #[arg(long, default_value_t = 200)]
        grid: usize,
    },
    /// SIR experiments: trajectories, fluid comparison, summary statistics.
    Sir {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        lambda_total: Option<f64>,
        #[arg(long, default_value_t = 100)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory (default: $FREEZE_TREE_OUT or the working dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the named verification suite (or `all`).
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn write_or_print(out: Option<&PathBuf>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| e.to_string()),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Simulate {
            builder,
            sequence,
            format,
            out,
            save_sequence,
            save_merge_log,
            manifest,
        } => {
            if let Some(path) = manifest {
                let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
                let manifest: RunManifest =
                    serde_json::from_str(&text).map_err(|e| e.to_string())?;
                let output = run_experiment(&manifest).map_err(|e| e.to_string())?;
                println!("wrote {}", output.stats_path.display());
                println!("wrote {}", output.csv_path.display());
                return Ok(ExitCode::SUCCESS);
            }
            let x = sequence.generate()?;
            let n = x.len();
            if let Some(path) = save_sequence {
                let file = std::fs::File::create(&path).map_err(|e| e.to_string())?;
                write_sequence(
                    std::io::BufWriter::new(file),
                    &x,
                    Some(&format!("seed={}", sequence.seed)),
                )
                .map_err(|e| e.to_string())?;
            }
            let mut rng = stream_rng(sequence.seed, 1);
            let tree: FreezeTree = match builder {
                BuilderArg::Attach => {
                    if save_merge_log.is_some() {
                        return Err("--save-merge-log needs --builder coalescent".into());
                    }
                    build_attach(&x, n, &mut rng).map_err(|e| e.to_string())?
                }
                BuilderArg::Coalescent => {
                    let build = build_coalescent(&x, n, &mut rng).map_err(|e| e.to_string())?;
                    if let Some(path) = save_merge_log {
                        std::fs::write(&path, build.merge_log_to_csv())
                            .map_err(|e| e.to_string())?;
                    }
                    build.tree
                }
            };
            let rendered = match format {
                FormatArg::Json => tree_to_json_string(&tree),
                FormatArg::Tsv => tree_to_tsv(&tree),
                FormatArg::Dot => tree_to_dot(&tree),
            };
            write_or_print(out.as_ref(), &rendered)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Enumerate { x, n, cap, out } => {
            let sequence = read_sequence_file(&x).map_err(|e| e.to_string())?;
            let trees = enumerate_trees(&sequence, n, cap).map_err(|e| e.to_string())?;
            let mut csv = String::from("canonical_key,probability\n");
            for (key, p) in &trees {
                csv.push_str(&format!("{},{}\n", csv_escape(key), p));
            }
            write_or_print(out.as_ref(), &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bijection {
            roundtrip,
            max_n,
            count_t0n,
            exhaustive,
        } => {
            if let Some(n) = count_t0n {
                let count = if exhaustive {
                    bijection::count_t0n_exhaustive(n).map_err(|e| e.to_string())?
                } else {
                    bijection::count_t0n(n).map_err(|e| e.to_string())?
                };
                println!("{count}");
                return Ok(ExitCode::SUCCESS);
            }
            if roundtrip {
                let mut members = 0u64;
                for total in 1..=max_n {
                    for actives in 0..=total {
                        bijection::enumerate_increasing_trees(total, actives, &mut |tree| {
                            members += 1;
                            let image = bijection::phi(tree).expect("member maps");
                            let back = bijection::psi(&image).expect("image maps back");
                            assert_eq!(back.canonical_key(), tree.canonical_key());
                        })
                        .map_err(|e| e.to_string())?;
                    }
                }
                println!("round trip verified over {members} members (<= {max_n} vertices)");
                return Ok(ExitCode::SUCCESS);
            }
            Err("bijection needs --roundtrip or --count-t0n".into())
        }
        Command::Constants { c, curve, grid } => {
            if curve {
                let mut csv = String::from("c,depth_const,dist_const,f_c,height_const\n");
                for j in 1..=grid {
                    let c = j as f64 / grid as f64;
                    let k = linear_constants(c).map_err(|e| e.to_string())?;
                    csv.push_str(&format!(
                        "{c},{},{},{},{}\n",
                        k.depth_const, k.dist_const, k.f_c, k.height_const
                    ));
                }
                print!("{csv}");
                return Ok(ExitCode::SUCCESS);
            }
            let c = c.ok_or("constants needs --c or --curve")?;
            let k = linear_constants(c).map_err(|e| e.to_string())?;
            let doc = json!({
                "c": c,
                "depth": k.depth_const,
                "distance": k.dist_const,
                "f_c": k.f_c,
                "height": k.height_const,
            });
            print!("{}", canonical_json_string(&doc));
            Ok(ExitCode::SUCCESS)
        }
        Command::Sir {
            n,
            lambda,
            lambda_total,
            reps,
            seed,
            out,
        } => {
            let lambda_n = match (lambda, lambda_total) {
                (Some(l), None) => l,
                (None, Some(total)) => total / n as f64,
                _ => return Err("give exactly one of --lambda, --lambda-total".into()),
            };
            let out_dir = out.unwrap_or_else(default_out_dir);
            std::fs::create_dir_all(&out_dir).map_err(|e| e.to_string())?;
            run_sir_experiment(n, lambda_n, reps, seed, &out_dir).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, seed } => {
            let cfg = VerifyConfig { master_seed: seed };
            let suites: Vec<Suite> = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![Suite::parse(&suite).ok_or_else(|| {
                    format!(
                        "unknown suite '{suite}'; expected all, {}",
                        Suite::ALL.map(|s| s.name()).join(", ")
                    )
                })?]
            };
            let mut all_passed = true;
            for suite in suites {
                let results = run_suite(suite, &cfg).map_err(|e| e.to_string())?;
                for result in &results {
                    println!("{}", result.line());
                    all_passed &= result.passed;
                }
            }
            Ok(if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

/// Runs `reps` SIR chains, writing the first trajectory and the fluid curve
/// as CSV plus a summary JSON with survival fraction, tree-geometry ratios
/// and the offspring chi-square report.
fn run_sir_experiment(
    n: usize,
    lambda_n: f64,
    reps: u64,
    seed: u64,
    out_dir: &std::path::Path,
) -> freeze_tree::Result<()> {
    let lambda_total = lambda_n * n as f64;
    let ln_n = (n as f64).ln();
    let threshold = default_survival_threshold(n);

    let solution = fluid_solve(lambda_total.max(f64::MIN_POSITIVE), 2.5, 1e-3)?;
    let mut survived = 0u64;
    let mut fluid_sups = Vec::new();
    let mut depth_ratios = Vec::new();
    let mut dist_ratios = Vec::new();
    let mut height_ratios = Vec::new();

    for rep in 0..reps {
        let mut rng = stream_rng(seed, rep);
        let (x, traj) = gen_sir(n, lambda_n, &mut rng)?;
        if rep == 0 {
            let mut csv = String::from("k,H,I\n");
            for (k, (h, i)) in traj.susceptible.iter().zip(&traj.infective).enumerate() {
                csv.push_str(&format!("{k},{h},{i}\n"));
            }
            std::fs::write(out_dir.join("trajectory.csv"), csv)?;
        }
        if survival_filter(&traj, threshold) {
            survived += 1;
            fluid_sups.push(fluid_comparison(&traj, &solution));
            let tree = build_attach(&x, x.len(), &mut rng)?;
            let depths = tree.depths();
            let v = rng.gen_range(0..tree.num_vertices());
            let (a, b) = (
                rng.gen_range(0..tree.num_vertices() as u32),
                rng.gen_range(0..tree.num_vertices() as u32),
            );
            depth_ratios.push(depths[v] as f64 / ln_n);
            dist_ratios.push(tree.distance(&depths, a, b) as f64 / ln_n);
            height_ratios.push(depths.iter().copied().max().unwrap() as f64 / ln_n);
        }
    }

    let mut fluid_csv = String::from("t,g,i_fluid\n");
    for (t, g) in solution.t_grid.iter().zip(&solution.g) {
        fluid_csv.push_str(&format!("{t},{g},{}\n", (2.0 - 2.0 * g - t).max(0.0)));
    }
    std::fs::write(out_dir.join("fluid.csv"), fluid_csv)?;

    let offspring = geometric_offspring_check(
        lambda_total,
        n,
        (reps * 10).max(20_000) as usize,
        &mut stream_rng(seed, u64::MAX / 2),
        1e-3,
    )?;

    let doc = json!({
        "n": n,
        "lambda_n": lambda_n,
        "lambda_total": lambda_total,
        "replications": reps,
        "seed": seed,
        "survival_fraction": survived as f64 / reps as f64,
        "fluid_sup": summarize(&fluid_sups),
        "depth_over_ln": summarize(&depth_ratios),
        "distance_over_ln": summarize(&dist_ratios),
        "height_over_ln": summarize(&height_ratios),
        "offspring_chi_square": serde_json::to_value(&offspring)?,
    });
    let mut file = std::fs::File::create(out_dir.join("summary.json"))?;
    file.write_all(canonical_json_string(&doc).as_bytes())?;
    println!("wrote {}", out_dir.join("summary.json").display());
    Ok(())
}
