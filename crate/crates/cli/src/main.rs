use clap::{Args, Parser, Subcommand};
use cubecycle::layer_cover::short_cycle_census;
use cubecycle::oracle::{brute_longest_cycle, mc_monotone_path};
use cubecycle::params::Mode;
use cubecycle::percolation::EdgeOracle;
use cubecycle_cli::{
    parse_config, run_grid, run_pipeline, verify, write_cycle_file, CliError, RunConfig,
    CSV_HEADER,
};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "cubecycle", about = "Percolated-hypercube cycle laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Hypercube dimension.
    #[arg(long)]
    d: Option<u32>,
    /// Edge probability as C/d; mutually exclusive with --p.
    #[arg(long = "C")]
    c: Option<f64>,
    /// Edge probability; mutually exclusive with --C.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Parameter regime: paper or desk.
    #[arg(long)]
    mode: Option<String>,
    /// Config file in "key = value" form with an optional [grid] section.
    #[arg(long)]
    config: Option<String>,
    /// Output path (cycle file for pipeline, CSV for grid).
    #[arg(long)]
    out: Option<String>,
    /// Worker thread cap for grid runs.
    #[arg(long)]
    workers: Option<usize>,
    /// Trial count for Monte Carlo commands.
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the full construction once and print its CSV row.
    Pipeline(Common),
    /// Run a (d, p, seed) grid and emit CSV.
    Grid(Common),
    /// Re-check a cycle file against the percolation sample.
    Verify {
        file: String,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo estimate of the monotone-path probability.
    McLemma {
        #[command(flatten)]
        common: Common,
        /// Target depth divided by d gives the step probability.
        #[arg(long, default_value_t = 6.0)]
        alpha: f64,
        /// Vertex retention probability.
        #[arg(long, default_value_t = 0.6)]
        q: f64,
    },
    /// Count short open cycles touching a layer pair.
    Census {
        #[command(flatten)]
        common: Common,
        /// Bottom layer of the pair.
        #[arg(long, default_value_t = 1)]
        i: u32,
        /// Largest cycle length counted (even, >= 4).
        #[arg(long, default_value_t = 4)]
        maxlen: usize,
    },
    /// Exact longest open cycle (d <= 5 only).
    Brute(Common),
}

impl Common {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            parse_config(&text, cfg)?;
        }
        if let Some(d) = self.d {
            cfg.d = d;
        }
        if let Some(c) = self.c {
            cfg.c = Some(c);
        }
        if let Some(p) = self.p {
            cfg.p = Some(p);
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = &self.mode {
            cfg.mode = match m.as_str() {
                "paper" => Mode::Paper,
                "desk" => Mode::Desk,
                other => return Err(CliError::Config(format!("unknown mode {other}"))),
            };
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        Ok(())
    }
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.cmd {
        Cmd::Pipeline(common) => {
            let mut cfg = RunConfig::default();
            common.apply(&mut cfg)?;
            let (p, _) = cfg.resolve(cfg.d)?;
            let t0 = Instant::now();
            let out = run_pipeline(&cfg, cfg.d, p, cfg.seed)?;
            eprintln!("runtime_ms {}", t0.elapsed().as_millis());
            println!("{CSV_HEADER}");
            println!("{}", out.row.csv());
            if let Some(path) = &cfg.out {
                std::fs::write(path, write_cycle_file(&out.cycle, cfg.d))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Grid(common) => {
            let mut cfg = RunConfig::default();
            common.apply(&mut cfg)?;
            if let Some(w) = cfg.workers {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(w.max(1))
                    .build_global()
                    .ok();
            }
            let t0 = Instant::now();
            let csv = run_grid(&cfg)?;
            eprintln!("runtime_ms {}", t0.elapsed().as_millis());
            emit(&cfg, &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { file, common } => {
            let mut cfg = RunConfig::default();
            common.apply(&mut cfg)?;
            let (p, _) = cfg.resolve(cfg.d)?;
            let text = std::fs::read_to_string(&file)?;
            let rep = verify(&text, cfg.seed, cfg.d, p)?;
            if rep.valid {
                println!("valid length={}", rep.length);
                Ok(ExitCode::SUCCESS)
            } else {
                let (at, why) = rep.violation.unwrap();
                println!("invalid at={at} reason={why}");
                Ok(ExitCode::from(2))
            }
        }
        Cmd::McLemma { common, alpha, q } => {
            let mut cfg = RunConfig::default();
            common.apply(&mut cfg)?;
            let rep = mc_monotone_path(cfg.d, alpha, q, cfg.trials, cfg.seed)
                .map_err(|e| CliError::Config(e.to_string()))?;
            println!(
                "d={} alpha={alpha} q={q} trials={} estimate={} wilson_lo={} wilson_hi={} flagged={}",
                cfg.d, rep.trials, rep.estimate, rep.wilson_lo, rep.wilson_hi, rep.flagged
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Census { common, i, maxlen } => {
            let mut cfg = RunConfig::default();
            common.apply(&mut cfg)?;
            let (p, _) = cfg.resolve(cfg.d)?;
            let eo = EdgeOracle::new(cfg.seed, p, cfg.d);
            let count = short_cycle_census(i, maxlen, &eo)
                .map_err(|e| CliError::Config(e.to_string()))?;
            println!("d={} p={p} seed={} i={i} maxlen={maxlen} count={count}", cfg.d, cfg.seed);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Brute(common) => {
            let mut cfg = RunConfig::default();
            common.apply(&mut cfg)?;
            let (p, _) = cfg.resolve(cfg.d)?;
            let eo = EdgeOracle::new(cfg.seed, p, cfg.d);
            let best = brute_longest_cycle(cfg.d, &eo)
                .map_err(|e| CliError::Config(e.to_string()))?;
            println!("d={} p={p} seed={} longest_cycle={best}", cfg.d, cfg.seed);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are success; anything else is a
            // configuration error
            use clap::error::ErrorKind::*;
            let _ = e.print();
            return match e.kind() {
                DisplayHelp | DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        // a panic means an internal invariant tripped, not bad input
        Err(_) => ExitCode::from(3),
    }
}
