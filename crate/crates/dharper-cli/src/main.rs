//! `dharper`: batch front-end for the dirac-harper library.
//!
//! Every subcommand writes its artifacts plus `<stem>.manifest.json` into
//! `--out`. Errors go to stderr as a one-line JSON record. Exit codes: 0 ok,
//! 1 I/O, 2 configuration, 3 numerical guard.

mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dirac_harper::cocycle::{self, LyapunovOptions, PhaseSampling, TransferCocycle};
use dirac_harper::continuum::{self, ContinuumParams};
use dirac_harper::dynamics::{self, Evolver};
use dirac_harper::twod::{self, Harmonic, Potential2d, TwoDParams};
use dirac_harper::{arith, greens, io, model, spectra, Boundary, ModelParams, Variant};

use output::{Artifacts, Manifest};

/// Environment variable holding the worker count.
const WORKERS_ENV: &str = "DHARPER_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "dharper", version, about = "Dirac-Harper moiré model computations")]
struct Cli {
    /// output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// file stem for the artifacts (defaults to the subcommand name)
    #[arg(long, global = true)]
    name: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// seed for Monte-Carlo phase sampling
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Side {
    Minus,
    Plus,
}

impl From<Side> for Boundary {
    fn from(s: Side) -> Self {
        match s {
            Side::Minus => Boundary::Minus,
            Side::Plus => Boundary::Plus,
        }
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{x} is not in [0, 1)"))
    }
}

fn nonnegative(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{x} must be finite and >= 0"))
    }
}

fn finite(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{x} must be finite"))
    }
}

/// `offset,amplitude,shift`
fn harmonic(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|t| finite(t.trim())).collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|_| "expected offset,amplitude,shift".to_string())
}

/// Couplings and phases shared by the tight-binding subcommands.
#[derive(Args, Debug, Clone, Serialize)]
struct Model {
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
    w0: f64,
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
    w1: f64,
    /// inverse moiré length 1/L in [0, 1)
    #[arg(long, default_value_t = dirac_harper::golden_mean(), value_parser = unit_interval)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, value_parser = finite)]
    theta: f64,
    #[arg(long, default_value_t = 0.0, value_parser = finite)]
    phi: f64,
    #[arg(long, default_value_t = 0.0, value_parser = finite)]
    vartheta: f64,
}

impl Model {
    fn params(&self) -> Result<ModelParams, CliError> {
        Ok(ModelParams::new(self.w0, self.w1, self.alpha, self.theta, self.phi, self.vartheta)?)
    }
}

/// Butterfly couplings; α runs over the Farey fractions.
#[derive(Args, Debug, Clone, Serialize)]
struct Couplings {
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
    w0: f64,
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
    w1: f64,
    #[arg(long, default_value_t = 0.0, value_parser = finite)]
    theta: f64,
    #[arg(long, default_value_t = 0.0, value_parser = finite)]
    phi: f64,
    #[arg(long, default_value_t = 0.0, value_parser = finite)]
    vartheta: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Window {
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    n1: i64,
    #[arg(long, default_value_t = 99, allow_hyphen_values = true)]
    n2: i64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Packet {
    #[arg(long, default_value_t = 70f64.sqrt())]
    sigma: f64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    center: i64,
    /// internal component, 1..=4
    #[arg(long, default_value_t = 1)]
    component: usize,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "subcommand")]
enum Command {
    /// Floquet spectra over the Farey fractions p/q with q <= qmax
    Butterfly {
        #[command(flatten)]
        #[serde(flatten)]
        c: Couplings,
        #[arg(long, default_value_t = 20)]
        qmax: u64,
        #[arg(long, default_value_t = 16)]
        bloch_points: usize,
    },
    /// Eigenvalues of a finite truncation
    Spectrum {
        #[command(flatten)]
        #[serde(flatten)]
        m: Model,
        #[command(flatten)]
        #[serde(flatten)]
        w: Window,
        #[arg(long, value_enum, default_value_t = Side::Minus)]
        boundary: Side,
    },
    /// Density of states histogram averaged over phase offsets
    Dos {
        #[command(flatten)]
        #[serde(flatten)]
        m: Model,
        #[arg(long, default_value_t = 200)]
        sites: usize,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[arg(long, default_value_t = 64)]
        bins: usize,
    },
    /// Lyapunov spectrum of the transfer cocycle
    Lyapunov {
        #[command(flatten)]
        #[serde(flatten)]
        m: Model,
        #[arg(long, default_value_t = 0.0, value_parser = finite, allow_hyphen_values = true)]
        energy: f64,
        #[arg(long, default_value_t = 100_000)]
        iterates: usize,
        #[arg(long, default_value_t = 16)]
        phases: usize,
        /// imaginary phase shift; nonzero selects the complexified cocycle
        #[arg(long, default_value_t = 0.0, value_parser = finite, allow_hyphen_values = true)]
        epsilon: f64,
        /// draw starting phases from the seeded stream instead of a grid
        #[arg(long)]
        random_phases: bool,
    },
    /// Cocycle γ⁴ against the averaged log-determinant
    Thouless {
        #[command(flatten)]
        #[serde(flatten)]
        m: Model,
        #[arg(long, default_value_t = 0.0, value_parser = finite, allow_hyphen_values = true)]
        energy: f64,
        #[arg(long, default_value_t = 2000)]
        sites: usize,
        #[arg(long, default_value_t = 32)]
        samples: usize,
        #[arg(long, default_value_t = 100_000)]
        iterates: usize,
    },
    /// Decay of the finite-volume Green's function from the left edge
    GreenDecay {
        #[command(flatten)]
        #[serde(flatten)]
        m: Model,
        #[command(flatten)]
        #[serde(flatten)]
        w: Window,
        #[arg(long, default_value_t = 0.0, value_parser = finite, allow_hyphen_values = true)]
        energy: f64,
    },
    /// Regular/singular classification of a site
    Regularity {
        #[command(flatten)]
        #[serde(flatten)]
        m: Model,
        #[arg(long, default_value_t = 0.0, value_parser = finite, allow_hyphen_values = true)]
        energy: f64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        site: i64,
        #[arg(long, value_parser = nonnegative)]
        gamma: f64,
        #[arg(long, default_value_t = 40)]
        k: usize,
    },
    /// Symmetry defects of the characteristic polynomial in the phase
    Charpoly {
        #[command(flatten)]
        #[serde(flatten)]
        m: Model,
        #[arg(long, default_value_t = 0.0, value_parser = finite, allow_hyphen_values = true)]
        energy: f64,
        #[arg(long, default_value_t = 12)]
        sites: usize,
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Time evolution of a Gaussian wavepacket
    Evolve {
        #[command(flatten)]
        #[serde(flatten)]
        m: Model,
        #[command(flatten)]
        #[serde(flatten)]
        w: Window,
        #[command(flatten)]
        #[serde(flatten)]
        packet: Packet,
        /// comma-separated times
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
    },
    /// Dynamical-localization moment over a geometric time grid
    Dynloc {
        #[command(flatten)]
        #[serde(flatten)]
        m: Model,
        #[command(flatten)]
        #[serde(flatten)]
        w: Window,
        #[command(flatten)]
        #[serde(flatten)]
        packet: Packet,
        #[arg(long, default_value_t = 0.1)]
        t_min: f64,
        #[arg(long, default_value_t = 1e3)]
        t_max: f64,
        #[arg(long, default_value_t = dynamics::DEFAULT_PER_DECADE)]
        per_decade: usize,
    },
    /// Continuum Bloch branches over one Brillouin zone
    ContinuumBands {
        #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
        w0: f64,
        #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
        w1: f64,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long, default_value_t = 0.0, value_parser = finite, allow_hyphen_values = true)]
        k_perp: f64,
        #[arg(long, default_value_t = continuum::DEFAULT_MODES)]
        modes: usize,
        #[arg(long, default_value_t = 64)]
        points: usize,
    },
    /// Monodromy of the chiral zero-energy equation
    Monodromy {
        #[arg(long, value_parser = nonnegative)]
        w1: f64,
        #[arg(long, default_value_t = continuum::DEFAULT_STEPS)]
        steps: usize,
    },
    /// Continued fraction and Diophantine margin of a frequency
    ArithClassify {
        #[arg(long, value_parser = unit_interval)]
        alpha: f64,
        #[arg(long, default_value_t = 40)]
        depth: usize,
        /// Diophantine constant
        #[arg(long, default_value_t = 0.1)]
        t: f64,
        #[arg(long, default_value_t = 10_000)]
        kmax: u64,
        #[arg(long, default_value_t = 1.0)]
        exponent: f64,
    },
    /// Block diagonalization of the two-dimensional model
    TwodBlockdiag {
        #[arg(long, default_value_t = 1.0, value_parser = nonnegative)]
        w: f64,
        #[arg(long, default_value_t = dirac_harper::golden_mean(), value_parser = finite)]
        alpha1: f64,
        #[arg(long, default_value_t = 1.0 / std::f64::consts::PI, value_parser = finite)]
        alpha2: f64,
        #[arg(long, default_value_t = 12)]
        nx: usize,
        #[arg(long, default_value_t = 12)]
        ny: usize,
        #[arg(long, value_enum, default_value_t = Shape::Product)]
        potential: Shape,
        /// first factor `offset,amplitude,shift`
        #[arg(long, default_value = "1.5,1,0", value_parser = harmonic, allow_hyphen_values = true)]
        u1: [f64; 3],
        /// second factor `offset,amplitude,shift`
        #[arg(long, default_value = "2,1,0.2", value_parser = harmonic, allow_hyphen_values = true)]
        u2: [f64; 3],
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Shape {
    Product,
    Sum,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Butterfly { .. } => "butterfly",
            Command::Spectrum { .. } => "spectrum",
            Command::Dos { .. } => "dos",
            Command::Lyapunov { .. } => "lyapunov",
            Command::Thouless { .. } => "thouless",
            Command::GreenDecay { .. } => "green-decay",
            Command::Regularity { .. } => "regularity",
            Command::Charpoly { .. } => "charpoly",
            Command::Evolve { .. } => "evolve",
            Command::Dynloc { .. } => "dynloc",
            Command::ContinuumBands { .. } => "continuum-bands",
            Command::Monodromy { .. } => "monodromy",
            Command::ArithClassify { .. } => "arith-classify",
            Command::TwodBlockdiag { .. } => "twod-blockdiag",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config { field: String, message: String },
    Numerical { kind: String, message: String },
    Io(String),
}

impl CliError {
    fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config { field: field.to_string(), message: message.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config { .. } => 2,
            CliError::Numerical { .. } => 3,
        }
    }

    fn record(&self) -> serde_json::Value {
        match self {
            CliError::Config { field, message } => {
                serde_json::json!({"status": "error", "class": "config", "field": field, "message": message})
            }
            CliError::Numerical { kind, message } => {
                serde_json::json!({"status": "error", "class": "numerical", "kind": kind, "message": message})
            }
            CliError::Io(message) => serde_json::json!({"status": "error", "class": "io", "message": message}),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.record())
    }
}

impl From<dirac_harper::Error> for CliError {
    fn from(e: dirac_harper::Error) -> Self {
        use dirac_harper::Error as E;
        let message = e.to_string();
        match &e {
            E::InvalidParameter { field, .. } => CliError::config(field, message),
            E::EmptyWindow { .. } | E::WindowTooSmall { .. } => CliError::config("window", message),
            E::NotRational { .. } => CliError::config("alpha", message),
            _ => {
                let kind = format!("{e:?}");
                let kind = kind.split([' ', '(', '{']).next().unwrap_or("Unknown").to_string();
                CliError::Numerical { kind, message }
            }
        }
    }
}

/// Worker count from the environment; 0 or unset leaves the default.
fn workers() -> Result<usize, CliError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v.trim().parse().map_err(|_| CliError::config(WORKERS_ENV, format!("`{v}` is not a worker count"))),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let workers = workers()?;
    if workers > 0 {
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    let name = cli.command.name();
    let stem = cli.name.clone().unwrap_or_else(|| name.to_string());
    let mut out = Artifacts::new(&cli.out, &stem)?;
    let json = cli.format == Format::Json;
    execute(&cli.command, cli.seed, json, &mut out)?;
    let outputs = out.written.clone();
    let manifest = Manifest {
        tool: "dharper",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: name,
        parameters: &cli.command,
        format: if json { "json" } else { "csv" },
        seed: cli.seed,
        workers: rayon::current_num_threads(),
        outputs: &outputs,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    out.json(".manifest.json", &manifest)
}

fn execute(cmd: &Command, seed: u64, json: bool, out: &mut Artifacts) -> Result<(), CliError> {
    match cmd {
        Command::Butterfly { c, qmax, bloch_points } => {
            let t = ModelParams::new(c.w0, c.w1, 0.0, c.theta, c.phi, c.vartheta)?;
            let sets = spectra::butterfly(&t, *qmax, *bloch_points, &[c.theta])?;
            if json {
                out.json(".json", &sets)
            } else {
                out.csv(".csv", |w| io::write_butterfly(w, &sets))
            }
        }
        Command::Spectrum { m, w, boundary } => {
            let ev = model::build_finite(&m.params()?, (w.n1, w.n2), (*boundary).into())?.eigenvalues()?;
            if json {
                out.json(".json", &ev)
            } else {
                out.csv(".csv", |wr| io::write_spectrum(wr, &ev))
            }
        }
        Command::Dos { m, sites, samples, bins } => {
            let d = spectra::dos(&m.params()?, *sites, *samples, *bins)?;
            if json {
                out.json(".json", &d)
            } else {
                out.csv(".csv", |w| io::write_dos(w, &d))
            }
        }
        Command::Lyapunov { m, energy, iterates, phases, epsilon, random_phases } => {
            let c = TransferCocycle::new(m.params()?, *energy).complexified(*epsilon);
            let sampling = if *random_phases { PhaseSampling::Random { seed } } else { PhaseSampling::Grid };
            let o = LyapunovOptions {
                iterates: *iterates,
                phase_samples: *phases,
                reorth_every: if *epsilon != 0.0 { Some(1) } else { None },
                sampling,
                ..Default::default()
            };
            let s = cocycle::lyapunov_with(&c, &o)?;
            if json {
                out.json(".json", &s)
            } else {
                out.csv(".csv", |w| io::write_lyapunov(w, &s))
            }
        }
        Command::Thouless { m, energy, sites, samples, iterates } => {
            let o = LyapunovOptions { iterates: *iterates, ..Default::default() };
            let r = cocycle::thouless_check(&m.params()?, *energy, *sites, *samples, &o)?;
            out.json(".json", &r)
        }
        Command::GreenDecay { m, w, energy } => {
            let g = greens::green(&m.params()?, Variant::Standard, (w.n1, w.n2), Boundary::Minus, *energy)?;
            let d = greens::decay_profile(&g);
            if json {
                out.json(".json", &d)
            } else {
                out.csv(".csv", |wr| io::write_decay(wr, &d))
            }
        }
        Command::Regularity { m, energy, site, gamma, k } => {
            let r = greens::regularity_classify(&m.params()?, Variant::Standard, *energy, *site, *gamma, *k)?;
            out.json(".json", &r)
        }
        Command::Charpoly { m, energy, sites, grid } => {
            let r = greens::charpoly_symmetries(&m.params()?, *energy, *sites, *grid)?;
            out.json(".json", &r)
        }
        Command::Evolve { m, w, packet, times } => {
            let ev = Evolver::new(&m.params()?, (w.n1, w.n2))?;
            let s = dynamics::gaussian_packet(packet.sigma, packet.center, packet.component, (w.n1, w.n2))?;
            let states = ev.evolve(&s, times)?;
            let layers = dynamics::layer_trace(&states);
            if json {
                out.json(".json", &states)?;
            } else {
                out.csv(".csv", |wr| io::write_dynamics(wr, &states))?;
            }
            out.csv(".layers.csv", |wr| io::write_layer_trace(wr, &layers))
        }
        Command::Dynloc { m, w, packet, t_min, t_max, per_decade } => {
            let ev = Evolver::new(&m.params()?, (w.n1, w.n2))?;
            let s = dynamics::gaussian_packet(packet.sigma, packet.center, packet.component, (w.n1, w.n2))?;
            let grid = dynamics::geometric_times(*t_min, *t_max, *per_decade)?;
            let d = dynamics::dynloc_moment(&ev, &s, &grid)?;
            if json {
                out.json(".json", &d)
            } else {
                out.csv(".csv", |wr| io::write_moments(wr, &d))
            }
        }
        Command::ContinuumBands { w0, w1, length, k_perp, modes, points } => {
            let p = ContinuumParams::new(*w0, *w1, *length, *k_perp, 0.0, *modes)?;
            let t = continuum::flat_band_scan_continuum(&p, &continuum::kx_grid(*length, *points))?;
            if json {
                out.json(".json", &t)
            } else {
                out.csv(".csv", |w| io::write_continuum_bands(w, &t))?;
                out.csv(".widths.csv", |w| io::write_branch_widths(w, &t.widths))
            }
        }
        Command::Monodromy { w1, steps } => {
            let m = continuum::chiral_monodromy(*w1, *steps)?;
            let z = continuum::zero_energy_chiral(*w1, &[*steps / 2, *steps])?;
            out.json(".json", &serde_json::json!({ "monodromy": m, "zero_energy": z }))
        }
        Command::ArithClassify { alpha, depth, t, kmax, exponent } => {
            let r = arith::classify(*alpha, *depth, *t, *kmax, *exponent)?;
            out.json(".json", &r)
        }
        Command::TwodBlockdiag { w, alpha1, alpha2, nx, ny, potential, u1, u2 } => {
            if *nx == 0 || *ny == 0 {
                return Err(CliError::config("window", "nx and ny must be positive"));
            }
            let (f1, f2) = (Harmonic::new(u1[0], u1[1], u1[2]), Harmonic::new(u2[0], u2[1], u2[2]));
            let pot = match potential {
                Shape::Product => Potential2d::Product(f1, f2),
                Shape::Sum => Potential2d::Sum(f1, f2),
            };
            let p = TwoDParams::new(*w, *alpha1, *alpha2, ((0, *nx as i64 - 1), (0, *ny as i64 - 1)), pot)?;
            let block = twod::block_diag_2d(&p)?;
            let sep = twod::separable_check(&p)?;
            out.json(".json", &serde_json::json!({ "block_diagonal": block, "separable": sep }))
        }
    }
}

/// The argument name clap blames, without dashes or value placeholder.
fn clap_field(e: &clap::Error) -> String {
    match e.get(ContextKind::InvalidArg) {
        Some(ContextValue::String(s)) => s.trim_start_matches('-').split([' ', '=']).next().unwrap_or(s).to_string(),
        Some(ContextValue::Strings(v)) if !v.is_empty() => v[0].trim_start_matches('-').split(' ').next().unwrap_or("").to_string(),
        _ => "arguments".to_string(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            let message = message.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            let err = CliError::config(&clap_field(&e), message);
            eprintln!("{err}");
            return ExitCode::from(err.code());
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
