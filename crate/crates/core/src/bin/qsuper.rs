use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use qsuper::affine::{Level, MomentumWindow};
use qsuper::finite::{FiniteRealization, Sabotage, Variant};
use qsuper::harness::{self, SuiteConfig, SuiteReport};
use qsuper::report::Status;
use qsuper::Error;

#[derive(Parser)]
#[command(
    name = "qsuper",
    version,
    about = "Exact checks of q-difference and free-boson realizations of quantum superalgebras"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the q-difference realization of U_q(sl(M|N))
    CheckFinite {
        #[arg(long = "M")]
        m: usize,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, value_parser = parse_variant)]
        variant: Variant,
        #[arg(long)]
        max_degree: usize,
        /// atom to corrupt, e.g. `f2.j=1` or `e.i=2.ip=1:scale-q`
        #[arg(long, value_parser = parse_sabotage)]
        sabotage: Option<Sabotage>,
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check the free boson realization of U_q(sl^(2|1))
    CheckAffine {
        #[arg(long)]
        energy_cut: u32,
        #[arg(long)]
        mode_window: i64,
        /// integer level or `formal`
        #[arg(long, default_value = "formal", value_parser = parse_level)]
        k: Level,
        /// replace one structure constant, e.g. `f13=1`
        #[arg(long = "override")]
        overrides: Vec<String>,
        /// `weighted:<s>` (oscillator energy plus s*|m|_1 within the energy cut) or `box:<w>`
        /// (every momentum entry in [-w, w])
        #[arg(long, value_parser = parse_momentum)]
        momentum: Option<MomentumWindow>,
        /// stop the state sweep after this many seconds; unchecked relations
        /// are reported incomplete
        #[arg(long)]
        budget_secs: Option<u64>,
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Apply a combination of generator words to a monomial and print the image
    Apply {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        on: String,
        #[arg(long = "M", default_value_t = 2)]
        m: usize,
        #[arg(long = "N", default_value_t = 1)]
        n: usize,
        #[arg(long, default_value = "i", value_parser = parse_variant)]
        variant: Variant,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_sabotage(s: &str) -> Result<Sabotage, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_level(s: &str) -> Result<Level, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_momentum(s: &str) -> Result<MomentumWindow, String> {
    s.parse()
}

fn install_pool(common: &Common) -> Result<(), Error> {
    if let Some(j) = common.jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn finish(report: &SuiteReport, path: &Path) -> Result<ExitCode, Error> {
    report.write(path)?;
    // a closed pipe (`| head`) must not turn a verdict into a panic
    let mut out = std::io::stdout().lock();
    let s = &report.summary;
    let _ = writeln!(
        out,
        "{} relations: {} pass, {} fail, {} not applicable, {} incomplete",
        s.total, s.pass, s.fail, s.not_applicable, s.incomplete
    );
    for f in report.failures() {
        let _ = match &f.witness {
            Some(w) => writeln!(
                out,
                "FAIL {} on {} at {}: {} != {}",
                f.id,
                w.basis,
                w.component,
                f.lhs.as_deref().unwrap_or("?"),
                f.rhs.as_deref().unwrap_or("?")
            ),
            None => writeln!(
                out,
                "FAIL {} ({})",
                f.id,
                f.note.as_deref().unwrap_or("numeric disagreement")
            ),
        };
    }
    if let Some(r) = report
        .relations
        .iter()
        .find(|r| r.status == Status::Incomplete)
    {
        let _ = writeln!(
            out,
            "INCOMPLETE {} relations, e.g. {}: {}",
            s.incomplete,
            r.id,
            r.note.as_deref().unwrap_or("")
        );
    }
    Ok(ExitCode::from(report.exit_code() as u8))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::CheckFinite {
            m,
            n,
            variant,
            max_degree,
            sabotage,
            filter,
            seed,
            report,
            common,
        } => {
            install_pool(&common)?;
            let mut cfg = SuiteConfig::finite(m, n, variant, max_degree);
            cfg.sabotage = sabotage;
            cfg.filter = filter;
            cfg.seed = seed;
            finish(&harness::run(&cfg)?, &report)
        }
        Command::CheckAffine {
            energy_cut,
            mode_window,
            k,
            overrides,
            momentum,
            budget_secs,
            filter,
            seed,
            report,
            common,
        } => {
            install_pool(&common)?;
            let mut cfg = SuiteConfig::affine(energy_cut, mode_window);
            cfg.level = k;
            cfg.overrides = overrides;
            if let Some(m) = momentum {
                cfg.momentum = m;
            }
            cfg.budget = budget_secs.map(Duration::from_secs);
            cfg.filter = filter;
            cfg.seed = seed;
            finish(&harness::run(&cfg)?, &report)
        }
        Command::Apply {
            expr,
            on,
            m,
            n,
            variant,
            common,
        } => {
            install_pool(&common)?;
            let r = FiniteRealization::new(m, n, variant, None)?;
            let _ = writeln!(
                std::io::stdout().lock(),
                "{}",
                harness::apply_expr(&r, &expr, &on)?
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
