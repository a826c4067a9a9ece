use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use magnon_echo_cli::config::{parse_ini, Entries, KEYS};
use magnon_echo_cli::output::write_csv;
use magnon_echo_cli::presets::preset;
use magnon_echo_cli::{init_threads, run_scenario, CliError, RunConfig};

/// Loschmidt echo of local quantum processes in spin chains.
///
/// Every setting can come from a preset, an INI config file (`key = value`)
/// or a flag of the same name; flags override the file, which overrides the
/// preset. Sweeps use `start:stop:step` on exactly one of t0, t, n, m.
#[derive(Parser, Debug)]
#[command(name = "magnon-echo", version)]
struct Args {
    /// INI config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// fig1a, fig1b, fig1c, fig1d, fig2, fig3, fig4 or fig5
    #[arg(long)]
    preset: Option<String>,
    /// echo-single, echo-coherent, echo-multi, harper-green, harper-echo,
    /// harper-echo-qdp, harper-reverse or oracle
    #[arg(long)]
    scenario: Option<String>,
    /// Ring size, or `inf` (default 1000)
    #[arg(long = "N")]
    n_sites: Option<String>,
    /// Anisotropy (default 1)
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    /// Zero-to-one-magnon gap (default 2*delta)
    #[arg(long, allow_hyphen_values = true)]
    gap: Option<String>,
    /// Kick strength (default 1)
    #[arg(long)]
    g: Option<String>,
    /// Kick period (default 0.1)
    #[arg(long)]
    tau: Option<String>,
    /// Backward kick period for harper-reverse
    #[arg(long)]
    tau2: Option<String>,
    /// Kick wave number (default 1)
    #[arg(long)]
    eta: Option<String>,
    /// unentangled or entangled
    #[arg(long)]
    state: Option<String>,
    #[arg(long = "alpha-re", allow_hyphen_values = true)]
    alpha_re: Option<String>,
    #[arg(long = "alpha-im", allow_hyphen_values = true)]
    alpha_im: Option<String>,
    #[arg(long = "beta-re", allow_hyphen_values = true)]
    beta_re: Option<String>,
    #[arg(long = "beta-im", allow_hyphen_values = true)]
    beta_im: Option<String>,
    /// |beta|^2 with real amplitudes (default 0.5)
    #[arg(long)]
    beta2: Option<String>,
    /// Partner site of the entangled state (default 5)
    #[arg(long)]
    r: Option<String>,
    /// phase-flip, bit-flip, project-z or project-x
    #[arg(long)]
    channel: Option<String>,
    /// Channel mixing probability
    #[arg(long)]
    p: Option<String>,
    /// channel or gate (oracle runs)
    #[arg(long)]
    qdp: Option<String>,
    #[arg(long = "gamma-re", allow_hyphen_values = true)]
    gamma_re: Option<String>,
    #[arg(long = "gamma-im", allow_hyphen_values = true)]
    gamma_im: Option<String>,
    #[arg(long = "gate-delta-re", allow_hyphen_values = true)]
    gate_delta_re: Option<String>,
    #[arg(long = "gate-delta-im", allow_hyphen_values = true)]
    gate_delta_im: Option<String>,
    /// QDP site, or a grid
    #[arg(long)]
    m: Option<String>,
    /// Comma-separated QDP sites for sequences
    #[arg(long)]
    sites: Option<String>,
    /// QDP time or sequence spacing, or a grid
    #[arg(long)]
    t0: Option<String>,
    /// Final time for harper-reverse
    #[arg(long)]
    t: Option<String>,
    /// Kick count or number of QDPs, or a grid
    #[arg(long)]
    n: Option<String>,
    /// Truncation order (Green factors) for echo-multi
    #[arg(long)]
    order: Option<String>,
    /// echo or string (echo-multi)
    #[arg(long)]
    quantity: Option<String>,
    /// chain or harper (oracle runs)
    #[arg(long)]
    model: Option<String>,
    /// Average the harper-echo over input states
    #[arg(long)]
    averaged: Option<String>,
    /// Output file (default stdout)
    #[arg(long)]
    output: Option<String>,
}

impl Args {
    fn entries(&self) -> Entries {
        let values = [
            &self.scenario,
            &self.n_sites,
            &self.delta,
            &self.gap,
            &self.g,
            &self.tau,
            &self.tau2,
            &self.eta,
            &self.state,
            &self.alpha_re,
            &self.alpha_im,
            &self.beta_re,
            &self.beta_im,
            &self.beta2,
            &self.r,
            &self.channel,
            &self.p,
            &self.qdp,
            &self.gamma_re,
            &self.gamma_im,
            &self.gate_delta_re,
            &self.gate_delta_im,
            &self.m,
            &self.sites,
            &self.t0,
            &self.t,
            &self.n,
            &self.order,
            &self.quantity,
            &self.model,
            &self.averaged,
            &self.output,
        ];
        KEYS.iter()
            .zip(values)
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

fn execute(args: Args) -> Result<(), CliError> {
    init_threads()?;
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            parse_ini(&text)?
        }
        None => Entries::new(),
    };
    let preset = args.preset.as_deref().map(preset).transpose()?;
    let cfg = RunConfig::resolve(preset.as_ref(), &file, &args.entries())?;
    let blocks = run_scenario(&cfg)?;
    match &cfg.output {
        Some(path) => {
            let mut buf = Vec::new();
            write_csv(&mut buf, &cfg.describe(), &blocks)?;
            fs::write(path, buf).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_csv(&mut lock, &cfg.describe(), &blocks)?;
            lock.flush().map_err(|e| CliError::Runtime(format!("write failed: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("magnon-echo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
