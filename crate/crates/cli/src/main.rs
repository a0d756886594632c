mod config;
mod run;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Experiments on translation lengths: tight spans, word metrics, quasimorphisms,
/// central extensions, quasilines and toy hierarchical structures.
#[derive(Parser, Debug)]
#[command(name = "translen", version)]
pub struct Cli {
    /// Seed for every sampled quantity.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Element budget for each breadth-first search.
    #[arg(long, global = true, default_value_t = translen::group::DEFAULT_BFS_BUDGET)]
    pub budget: usize,
    /// Directory for CSV/JSON artifacts; stdout only when absent.
    #[arg(long = "out-dir", global = true)]
    pub out_dir: Option<std::path::PathBuf>,
    /// key=value file with the same keys as the flags, plus `command`.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Barycentre of a tuple of points in the injective hull of a finite metric space.
    Tightspan(TightspanArgs),
    /// Stable translation length brackets in a word metric.
    Tau(TauArgs),
    /// Brooks counting quasimorphisms on free groups.
    Brooks(BrooksArgs),
    /// Arithmetic in cocycle extensions.
    Extension(ExtensionArgs),
    /// Distance and translation brackets on the quasiline of a homogeneous quasimorphism.
    Quasiline(QuasilineArgs),
    /// Toy hierarchical structures.
    Hhg(HhgArgs),
    /// Cocycle, quasiline, extended structure and discreteness probe in one report.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug)]
pub struct TightspanArgs {
    /// Metric as CSV (header of labels) or JSON (`labels`, `dist`).
    #[arg(long)]
    pub metric: std::path::PathBuf,
    /// Comma-separated point indices or labels.
    #[arg(long)]
    pub tuple: String,
    #[arg(long, default_value = "1/1000000000")]
    pub eta: String,
}

#[derive(Args, Debug)]
pub struct TauArgs {
    #[arg(long)]
    pub group: String,
    #[arg(long)]
    pub element: String,
    #[arg(long = "N", alias = "n", default_value_t = 20)]
    pub n: u32,
    /// Largest word distance searched.
    #[arg(long, default_value_t = 128)]
    pub cap: u32,
    /// Emit the distortion profile as CSV.
    #[arg(long)]
    pub profile: bool,
    /// Barycentric displacement at this n.
    #[arg(long)]
    pub barycentric: Option<u32>,
    /// Lipschitz homomorphism for a certified lower bound: abelianization, sum, linear:c1,c2.
    #[arg(long)]
    pub certify: Option<String>,
    #[arg(long = "certify-radius", default_value_t = 4)]
    pub certify_radius: u32,
}

#[derive(Args, Debug)]
pub struct BrooksArgs {
    #[arg(long)]
    pub pattern: String,
    #[arg(long, default_value_t = 2)]
    pub rank: usize,
    /// Words to evaluate; repeatable.
    #[arg(long)]
    pub word: Vec<String>,
    /// Number of random pairs for a defect sample.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long = "max-len", default_value_t = 40)]
    pub max_len: usize,
    /// Power used for homogenised intervals.
    #[arg(long = "hom-n", default_value_t = 16)]
    pub hom_n: u64,
}

#[derive(Args, Debug)]
pub struct ExtensionArgs {
    /// `zero`, `heisenberg`, `coboundary:<beta>[|bound]`, optionally `@<base>`, or a JSON object.
    #[arg(long)]
    pub cocycle: String,
    /// mult, inverse, power, q-alpha, q-alpha-hat, peripheral, validate.
    #[arg(long)]
    pub op: String,
    #[arg(long)]
    pub a: Option<String>,
    #[arg(long)]
    pub b: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub n: i64,
    /// Constants visible to cocycle expressions, as name=value; repeatable.
    #[arg(long)]
    pub param: Vec<String>,
    #[arg(long = "search-bound", default_value_t = 100)]
    pub search_bound: i64,
    #[arg(long, default_value = "1/1000")]
    pub tol: String,
    /// Power used by `q-alpha-hat` and `peripheral`.
    #[arg(long = "hom-n", default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    pub hom_n: u64,
    /// Random triples for `validate`.
    #[arg(long, default_value_t = 1000)]
    pub triples: usize,
}

#[derive(Args, Debug)]
pub struct QuasilineArgs {
    #[arg(long, default_value = "lattice:2")]
    pub group: String,
    /// `linear:c1,c2,...` or `brooks:<word>` (homogenised).
    #[arg(long = "s-hat")]
    pub s_hat: String,
    #[arg(long = "C", alias = "c", default_value = "1")]
    pub c: String,
    #[arg(long)]
    pub element: String,
    #[arg(long = "N", alias = "n", default_value_t = 32)]
    pub n: u32,
    #[arg(long, default_value_t = 0)]
    pub effort: u32,
    #[arg(long = "hom-n", default_value_t = 64)]
    pub hom_n: u64,
}

#[derive(Args, Debug)]
pub struct StructureArgs {
    /// Registered structure such as `z2_epsilon:1/3`.
    #[arg(long)]
    pub structure: Option<String>,
    /// JSON structure file.
    #[arg(long)]
    pub file: Option<std::path::PathBuf>,
    /// Shortcut for `z2_epsilon`, or `z2_delta_epsilon` together with `--delta`.
    #[arg(long, visible_alias = "eps", alias = "ε")]
    pub epsilon: Option<String>,
    #[arg(long, alias = "δ")]
    pub delta: Option<String>,
}

#[derive(Args, Debug)]
pub struct HhgArgs {
    #[command(subcommand)]
    pub action: HhgAction,
}

#[derive(Subcommand, Debug)]
pub enum HhgAction {
    /// Relation, rho and Lipschitz checks.
    Validate {
        #[command(flatten)]
        s: StructureArgs,
    },
    /// Empirical distance-formula constant over a word ball.
    Scan {
        #[command(flatten)]
        s: StructureArgs,
        #[arg(long, default_value_t = 64)]
        radius: u32,
        #[arg(long = "D", alias = "d", default_value = "1/2")]
        d: String,
    },
    /// Per-domain translation lengths.
    Tau {
        #[command(flatten)]
        s: StructureArgs,
        #[arg(long)]
        element: String,
        #[arg(long = "N", alias = "n", default_value_t = 64)]
        n: u32,
    },
    /// Certified small translation lengths on bigset domains.
    Probe {
        #[command(flatten)]
        s: StructureArgs,
        #[arg(long)]
        tau0: String,
        #[arg(long, default_value_t = 200)]
        radius: u32,
        #[arg(long = "tau-n", default_value_t = 256)]
        tau_n: u32,
        #[arg(long, default_value_t = 4096)]
        horizon: u64,
    },
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[arg(long, visible_alias = "eps", alias = "ε")]
    pub epsilon: String,
    #[arg(long = "C", alias = "c", default_value = "1")]
    pub c: String,
    #[arg(long, default_value = "1/100")]
    pub tau0: String,
    #[arg(long, default_value_t = 300)]
    pub radius: u32,
    #[arg(long = "tau-n", default_value_t = 256)]
    pub tau_n: u32,
    #[arg(long, default_value_t = 4096)]
    pub horizon: u64,
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(run::EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { run::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(run::exit_code(&e))
        }
    }
}
