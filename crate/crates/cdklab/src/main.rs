use std::path::PathBuf;
use std::process::ExitCode;

use cdklab::config::{GridValue, Seq};
use cdklab::{emit, run, RawConfig};
use clap::{Args, Parser, Subcommand};

/// Christoffel-Darboux kernel experiments: universality limits, perturbations and point masses.
#[derive(Parser, Debug)]
#[command(name = "cdklab", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Scaled first-kind kernels against the sine kernel.
    Universality(Flags),
    /// Scaled second-kind kernels against the sine kernel with the second-kind weight.
    SecondKind(Flags),
    /// Kernels of a perturbed measure (also the mixed kernel and the rank-one expansion).
    Perturb(Flags),
    /// Kernels under decaying random diagonal perturbations, one run per seed.
    RandomPerturb(Flags),
    /// Boundary values of the Stieltjes transform, weights and Wronskians.
    Stieltjes(Flags),
    /// Eigenvalue and point mass created by a rank-one perturbation.
    Eigenvalue(Flags),
    /// Quadrature check of the sinc integral identity.
    IdentityCheck(Flags),
    /// Variation-of-parameters coefficients and their convergence.
    Varpar(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// TOML experiment file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    experiment_id: Option<String>,
    /// free, chebyshev1 or custom (custom needs a config file).
    #[arg(long)]
    measure: Option<String>,
    /// Comma-separated points.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Ladder such as 512,1024,2048 or the doubling rule 512..4096.
    #[arg(long)]
    n: Option<String>,
    /// "standard", a point list for its square grid, or pairs "a:b;c:d".
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// none, rank_one, diagonal, power_law or random_diagonal (inferred when omitted).
    #[arg(long)]
    perturbation: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta1: Option<f64>,
    /// Comma-separated diagonal shifts beta_1, beta_2, ...
    #[arg(long, allow_hyphen_values = true)]
    betas: Option<String>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    exponent: Option<f64>,
    /// rademacher, uniform_symmetric or gaussian.
    #[arg(long)]
    dist: Option<String>,
    /// Seeds such as 1,2,3 or 1..5.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
    /// by_n, by_diag, second_kind, mixed or expansion, depending on the command.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long)]
    quad_tol: Option<f64>,
    /// Eigenvalue search interval "lo,hi".
    #[arg(long, allow_hyphen_values = true)]
    bracket: Option<String>,
    #[arg(long)]
    l2_n: Option<usize>,
    /// Mandatory bound on abs_err at the largest n; exceeding it exits with status 2.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long, env = "CDKLAB_THREADS")]
    threads: Option<usize>,
}

fn overrides(name: &str, f: &Flags) -> Result<RawConfig, String> {
    let betas = f.betas.as_deref().map(cdklab::parse::floats).transpose()?;
    let bracket = f.bracket.as_deref().map(cdklab::parse::floats).transpose()?;
    Ok(RawConfig {
        experiment_id: f.experiment_id.clone(),
        command: Some(name.to_string()),
        measure: f.measure.clone(),
        perturbation: f.perturbation.clone(),
        beta1: f.beta1,
        betas,
        amplitude: f.amplitude,
        exponent: f.exponent,
        dist: f.dist.clone(),
        seeds: f.seed.clone().map(Seq::Text),
        horizon: f.horizon,
        x0: f.x0.clone().map(Seq::Text),
        n: f.n.clone().map(Seq::Text),
        grid: f.grid.clone().map(GridValue::Text),
        mode: f.mode.clone(),
        rho: f.rho,
        a: f.a.clone(),
        b: f.b.clone(),
        quad_tol: f.quad_tol,
        bracket,
        l2_n: f.l2_n,
        tolerance: f.tolerance,
        out: f.out.clone(),
        format: f.format.clone(),
        threads: f.threads,
        ..RawConfig::default()
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, flags) = match &cli.command {
        Cmd::Universality(f) => ("universality", f),
        Cmd::SecondKind(f) => ("second-kind", f),
        Cmd::Perturb(f) => ("perturb", f),
        Cmd::RandomPerturb(f) => ("random-perturb", f),
        Cmd::Stieltjes(f) => ("stieltjes", f),
        Cmd::Eigenvalue(f) => ("eigenvalue", f),
        Cmd::IdentityCheck(f) => ("identity-check", f),
        Cmd::Varpar(f) => ("varpar", f),
    };

    let top = match overrides(name, flags) {
        Ok(t) => t,
        Err(m) => {
            eprintln!("error: flags: {m}");
            return ExitCode::from(1);
        }
    };
    let base = match &flags.config {
        Some(path) => match RawConfig::from_path(path) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        },
        None => RawConfig::default(),
    };
    if let Some(file_cmd) = base.command.as_deref().filter(|c| *c != name) {
        eprintln!("error: command: config file is for {file_cmd:?}, not {name:?}");
        return ExitCode::from(1);
    }
    let exp = match base.overlay(top).validate() {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let output = run(&exp);
    if let Err(e) = emit(&exp, &output) {
        eprintln!("error: out: {e}");
        return ExitCode::from(1);
    }
    if output.passed() {
        ExitCode::SUCCESS
    } else {
        for f in &output.failures {
            eprintln!("check failed: {f}");
        }
        ExitCode::from(2)
    }
}
