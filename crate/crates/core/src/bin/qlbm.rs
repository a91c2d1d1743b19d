use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qlbm::harness::experiment::SweepParam;
use qlbm::harness::output::emit_sweep;
use qlbm::harness::{emit_outputs, run_experiment, sweep, ExperimentConfig, ExperimentResult, Mode};
use qlbm::lattice::{CollisionMode, VelocityField};
use qlbm::{linear, nonlinear, QlbmError};

#[derive(Parser)]
#[command(name = "qlbm", version, about = "Quantum lattice-Boltzmann simulations of a 1D Gaussian hill")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single solver (selected by --mode).
    Run(RunArgs),
    /// Run quantum, classical and analytic solvers side by side.
    Compare(RunArgs),
    /// Repeat `compare` over several shot counts or step counts.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Parameter to vary: shots or steps.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<u64>,
    },
    /// Print the collision angles for a velocity.
    Angles {
        #[arg(long, allow_hyphen_values = true)]
        u: f64,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Key-value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<String>,
    /// Collision model for compare: linear or nonlinear.
    #[arg(long)]
    model: Option<String>,
    /// Position qubits (2^M cells).
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    u: Option<f64>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// exact or shots.
    #[arg(long)]
    backend: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long)]
    ambient: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    sigma0: Option<f64>,
    /// Diffusivity of the analytic reference.
    #[arg(long = "D")]
    diffusivity: Option<f64>,
    #[arg(long)]
    update_velocity: bool,
    /// Also write an SVG plot.
    #[arg(long)]
    plot: bool,
}

impl RunArgs {
    fn load(&self, forced_mode: Option<Mode>) -> Result<ExperimentConfig, QlbmError> {
        let text = match &self.config {
            Some(path) => fs::read_to_string(path).map_err(|e| QlbmError::Config(format!("{}: {e}", path.display())))?,
            None => String::new(),
        };
        let mut o: Vec<(&str, String)> = Vec::new();
        let mut put = |k, v: Option<String>| {
            if let Some(v) = v {
                o.push((k, v));
            }
        };
        put("mode", self.mode.clone());
        put("model", self.model.clone());
        put("M", self.m.map(|v| v.to_string()));
        put("steps", self.steps.map(|v| v.to_string()));
        put("u", self.u.map(|v| v.to_string()));
        put("shots", self.shots.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("backend", self.backend.clone());
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("rho0", self.rho0.map(|v| v.to_string()));
        put("ambient", self.ambient.map(|v| v.to_string()));
        put("x0", self.x0.map(|v| v.to_string()));
        put("sigma0", self.sigma0.map(|v| v.to_string()));
        put("D", self.diffusivity.map(|v| v.to_string()));
        put("update_velocity", self.update_velocity.then(|| "true".to_string()));
        put("plot", self.plot.then(|| "true".to_string()));
        if let Some(mode) = forced_mode {
            o.push(("mode", mode.to_string()));
        }
        ExperimentConfig::parse_with_overrides(&text, &o)
    }
}

fn summarize(result: &ExperimentResult) {
    let c = &result.config;
    println!(
        "mode={} model={} M={} steps={} u={} backend={} shots={} seed={}",
        c.mode, c.model, c.pos_qubits, c.steps, c.u, c.backend, c.shots, c.seed
    );
    for (label, r) in &result.reports {
        println!("metric {label} l2={:.6e} linf={:.6e} l2_relative={:.6e}", r.l2, r.linf, r.l2_relative);
    }
}

fn angle_table(u: f64) {
    println!("u = {u}");
    println!("linear:");
    println!("  theta0 = {:.12}", linear::theta0());
    match linear::theta1(u) {
        Ok(t) => println!("  theta1 = {t:.12}"),
        Err(e) => println!("  theta1 = inadmissible ({e})"),
    }
    println!("nonlinear:");
    match nonlinear::nonlinear_angles(&VelocityField::Uniform(u), 1) {
        Ok(a) => {
            println!("  theta0 = {:.12}", a.theta0);
            println!("  theta1 = {:.12}", a.theta1.at(0));
            println!("  theta2 = {:.12}", a.theta2);
            println!("  theta3 = {:.12}", a.theta3.at(0));
            println!("  theta4 = {:.12}", a.theta4.at(0));
        }
        Err(e) => println!("  inadmissible ({e})"),
    }
    if CollisionMode::Linear.check_velocity(u).is_err() && CollisionMode::Nonlinear.check_velocity(u).is_err() {
        println!("note: u is outside both admissible ranges");
    }
}

fn execute(cli: Cli) -> Result<(), QlbmError> {
    match cli.command {
        Command::Run(args) => {
            let config = args.load(None)?;
            let result = run_experiment(&config)?;
            summarize(&result);
            for p in emit_outputs(&result)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Compare(args) => {
            let config = args.load(Some(Mode::Compare))?;
            let result = run_experiment(&config)?;
            summarize(&result);
            for p in emit_outputs(&result)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Sweep { run, param, values } => {
            let config = run.load(Some(Mode::Compare))?;
            let which: SweepParam = param.parse()?;
            let rows = sweep(&config, which, &values)?;
            println!("{param},l2,linf,l2_relative");
            for row in &rows {
                println!("{},{:.6e},{:.6e},{:.6e}", row.value, row.report.l2, row.report.linf, row.report.l2_relative);
            }
            let path = emit_sweep(&config.out, &param, &rows)?;
            println!("wrote {}", path.display());
        }
        Command::Angles { u } => angle_table(u),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
