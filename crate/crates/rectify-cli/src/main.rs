use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use rectify::certify::{
    self, decay_fit, lagarias_sequence, osc_certificate, weighted_series, membership_certificate, CertifyParams, LagariasParams,
    OscParams, TailModel,
};
use rectify::density::{BkField, BkParams, DyadicField, OscillationBound};
use rectify::moduli::Modulus;
use rectify::pointset::{DeviationProfile, Generator, IntegerCube, PointSet};
use rectify::transport::{calibrate_c_eta, compose, Mode};
use rectify_cli::{bi_omega_distortion, default_halo, hall_match, min_radius, transport_match, HallOutcome, Matching};

#[derive(Parser)]
#[command(name = "rectify", version, about = "Density deviation, dyadic transport and rectifiability certificates")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone)]
struct Global {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Tolerance for exactness checks.
    #[arg(long, global = true, default_value_t = rectify::tol::PUSHFORWARD)]
    tol: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Point sets (text) or density fields (JSON).
    Generate(GenerateArgs),
    /// Deviation and repetitivity profiles of a point set.
    Analyze(AnalyzeArgs),
    #[command(subcommand)]
    Certify(CertifyCmd),
    /// Builds the composed transport map and checks the pushforward.
    Solve(SolveArgs),
    /// Bijection from a point window to the integer lattice.
    Match(MatchArgs),
    /// Sampled bi-omega constants of a matching.
    Distort(DistortArgs),
    /// Recursive checkerboard densities with controlled oscillation.
    Bk(BkArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Lattice,
    Perturbed,
    Fibonacci,
    FromDensity,
    Random,
    Cascade,
    Checkerboard,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 16)]
    side: i64,
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    #[arg(long, default_value_t = 0.3)]
    amplitude: f64,
    /// Substitution count for the Fibonacci chain.
    #[arg(long, default_value_t = 12)]
    n: u32,
    /// Field depth.
    #[arg(long, default_value_t = 4)]
    depth: u32,
    #[arg(long, default_value_t = 1.0)]
    lo: f64,
    #[arg(long, default_value_t = 2.0)]
    hi: f64,
    /// Gate constant for cascades.
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    /// Contrast for checkerboards.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Square count for checkerboards.
    #[arg(long, default_value_t = 4)]
    squares: usize,
    /// Field JSON for `from-density`.
    #[arg(long)]
    field: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    points: PathBuf,
    /// Reference density, or `auto` for the window average.
    #[arg(long, default_value = "auto")]
    rho: String,
    #[arg(long, default_value_t = 4)]
    imax: u32,
    /// Smallest scale; defaults to the first one without empty cubes.
    #[arg(long)]
    imin: Option<u32>,
    /// Comma-separated patch radii for the repetitivity profile.
    #[arg(long, value_delimiter = ',')]
    repetitivity: Vec<f64>,
    #[arg(long, default_value_t = 1e-6)]
    snap: f64,
}

#[derive(Subcommand)]
enum CertifyCmd {
    /// Gate constant and modulus-series membership.
    Membership {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        omega: String,
        #[arg(long)]
        d: u32,
        #[arg(long, default_value_t = 64)]
        imax: u32,
    },
    /// Weighted series criterion with its constant chain.
    Series {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        omega: String,
        #[arg(long)]
        d: u32,
        /// Series exponent; defaults to min(1, 1/(2d²)).
        #[arg(long)]
        alpha: Option<f64>,
        /// Box-map constant; measured from the profile range when absent.
        #[arg(long)]
        c_eta: Option<f64>,
        #[arg(long)]
        i0: Option<u32>,
        #[arg(long)]
        k_max: Option<f64>,
        /// `inverse-linear` or `geometric:<ratio>`.
        #[arg(long, default_value = "inverse-linear")]
        tail: String,
    },
    /// Oscillation criterion.
    Oscillation {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        omega: String,
        #[arg(long, default_value_t = 1.0)]
        c_eta: f64,
        /// Lower bound of the density.
        #[arg(long, default_value_t = 1.0)]
        a: f64,
    },
    /// Block products of the Lagarias–Pleasants recursion.
    Lagarias {
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        d: u32,
        #[arg(long, default_value_t = 0.5)]
        c1: f64,
        #[arg(long, default_value_t = 3.0)]
        c5: f64,
        #[arg(long, default_value_t = 10.0)]
        u2: f64,
        #[arg(long, default_value_t = 60)]
        jmax: u32,
        #[arg(long, default_value_t = 20)]
        fit_from: u32,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    density: PathBuf,
    #[arg(long)]
    depth: u32,
    #[arg(long, default_value = "exact2d")]
    mode: String,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Writes the composed map as JSON.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    grid_level: u32,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    points: PathBuf,
    /// Fixed radius; the minimal one is searched when absent.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    halo: Option<i64>,
    /// Guides the matching by the transport map of the point density.
    #[arg(long)]
    transport: bool,
}

#[derive(Args)]
struct DistortArgs {
    #[arg(long)]
    matching: PathBuf,
    #[arg(long)]
    omega: String,
    #[arg(long, value_delimiter = ',', default_values_t = vec![4.0, 8.0, 16.0])]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pairs: usize,
}

#[derive(Args)]
struct BkArgs {
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 3)]
    levels: u32,
    #[arg(long, default_value = "pow:2")]
    phi: String,
    #[arg(long, default_value_t = 1.0)]
    height_constant: f64,
    /// Also certifies the oscillation criterion against this modulus.
    #[arg(long)]
    omega: Option<String>,
    /// Writes the rasterised field as JSON.
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    max_depth: u32,
}

/// Failure classes with their exit codes.
#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Tolerance(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Tolerance(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl From<rectify::Error> for CliError {
    fn from(e: rectify::Error) -> Self {
        use rectify::Error as E;
        match e {
            E::InvalidParam(_) | E::Parse(_) | E::Domain { .. } | E::DepthOverflow { .. } | E::OutOfWindow(_) => CliError::Usage(e.to_string()),
            E::Infeasible(_) | E::NotFound | E::EmptyCube { .. } | E::GateFailed { .. } => CliError::Infeasible(e.to_string()),
            E::QuadratureFailure(_) | E::SplitRequired { .. } | E::DegenerateFan { .. } => CliError::Tolerance(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}

type Res<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn emit(g: &Global, text: &str) -> Res<()> {
    match &g.out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialises");
    s.push('\n');
    s
}

fn modulus(s: &str) -> Res<Modulus> {
    Ok(s.parse::<Modulus>()?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: &Cli) -> Res<()> {
    let g = &cli.global;
    if !(g.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    match &cli.cmd {
        Command::Generate(a) => generate(g, a),
        Command::Analyze(a) => analyze(g, a),
        Command::Certify(c) => certify_cmd(g, c),
        Command::Solve(a) => solve(g, a),
        Command::Match(a) => matching(g, a),
        Command::Distort(a) => distort(g, a),
        Command::Bk(a) => bk(g, a),
    }
}

fn generate(g: &Global, a: &GenerateArgs) -> Res<()> {
    let points = |gen: Generator<'_>| -> Res<String> { Ok(PointSet::generate(gen)?.to_text()) };
    let text = match a.kind {
        Kind::Lattice => points(Generator::Lattice { d: a.d, spacing: a.spacing, side: a.side })?,
        Kind::Perturbed => points(Generator::Perturbed { d: a.d, spacing: a.spacing, side: a.side, amplitude: a.amplitude, seed: g.seed })?,
        Kind::Fibonacci => points(Generator::Fibonacci { n: a.n })?,
        Kind::FromDensity => {
            let path = a.field.as_ref().ok_or_else(|| CliError::Usage("--field is required for from-density".into()))?;
            let f = DyadicField::from_json(&read(path)?)?;
            points(Generator::FromDensity(&f))?
        }
        Kind::Random => DyadicField::random(a.d, a.depth, a.lo, a.hi, g.seed)?.to_json(),
        Kind::Cascade => DyadicField::cascade(a.d, a.depth, a.k, g.seed)?.to_json(),
        Kind::Checkerboard => DyadicField::checkerboard(a.c, a.squares)?.to_json(),
    };
    emit(g, &text)
}

fn analyze(g: &Global, a: &AnalyzeArgs) -> Res<()> {
    let x = PointSet::from_text(&read(&a.points)?)?;
    let w = x.window().as_cube();
    let rho = if a.rho == "auto" {
        x.empirical_density(&w)?
    } else {
        a.rho.parse::<f64>().map_err(|_| CliError::Usage(format!("bad --rho {:?}", a.rho)))?
    };
    let prof = match a.imin {
        Some(lo) => x.deviation_profile_from(rho, &w, lo, a.imax)?,
        None => first_nonempty_profile(&x, rho, &w, a.imax)?,
    };
    let mut rep = Vec::new();
    for &r in &a.repetitivity {
        let big = x.repetitivity_radius(r, &w, a.snap);
        rep.push(json!({ "r": r, "R": big.as_ref().ok(), "error": big.err().map(|e| e.to_string()) }));
    }
    let text = match g.format {
        Format::Csv => prof.to_csv(),
        Format::Json => to_json(&json!({
            "schema": "rectify.analysis/1",
            "rho": rho,
            "packing": x.packing(),
            "covering": x.covering(),
            "points": x.len(),
            "window": w,
            "entries": prof.entries,
            "k_hat": prof.fit_inverse_linear(),
            "repetitivity": rep,
        })),
    };
    emit(g, &text)
}

fn first_nonempty_profile(x: &PointSet, rho: f64, w: &IntegerCube, i_max: u32) -> Res<DeviationProfile> {
    let mut last = None;
    for lo in 0..=i_max {
        match x.deviation_profile_from(rho, w, lo, i_max) {
            Err(e @ rectify::Error::EmptyCube { .. }) => last = Some(e),
            other => return Ok(other?),
        }
    }
    Err(last.expect("loop runs at least once").into())
}

fn load_profile(path: &Path) -> Res<DeviationProfile> {
    Ok(DeviationProfile::from_csv(&read(path)?, 1.0)?)
}

fn certificate_out(g: &Global, c: &certify::Certificate) -> Res<()> {
    let text = match g.format {
        Format::Csv => c.partial_sums_csv(),
        Format::Json => {
            let mut s = c.to_json();
            s.push('\n');
            s
        }
    };
    emit(g, &text)?;
    c.check_gate()?;
    Ok(())
}

fn certify_cmd(g: &Global, c: &CertifyCmd) -> Res<()> {
    match c {
        CertifyCmd::Membership { profile, omega, d, imax } => {
            let cert = membership_certificate(&load_profile(profile)?, &modulus(omega)?, *d, *imax)?;
            certificate_out(g, &cert)
        }
        CertifyCmd::Series { profile, omega, d, alpha, c_eta, i0, k_max, tail } => {
            let prof = load_profile(profile)?;
            let c_eta = match c_eta {
                Some(v) => *v,
                None => {
                    let e = prof.entries.iter().map(|e| e.1).fold(1.0, f64::max);
                    let dev = ((e * e - 1.0) / (2.0 * (e * e + 1.0))).clamp(1e-3, 0.45);
                    calibrate_c_eta(dev, 64)?.c_eta
                }
            };
            let mut params = CertifyParams::for_dim(*d, c_eta);
            if let Some(a) = alpha {
                params.alpha_exp = *a;
            }
            params.i0 = *i0;
            params.k_max = *k_max;
            params.tail = parse_tail(tail)?;
            certificate_out(g, &weighted_series(&prof, &modulus(omega)?, &params, *d)?)
        }
        CertifyCmd::Oscillation { phi, omega, c_eta, a } => {
            let phi: OscillationBound = phi.parse()?;
            let cert = osc_certificate(&phi, &modulus(omega)?, OscParams { c_eta: *c_eta, a: *a })?;
            certificate_out(g, &cert)
        }
        CertifyCmd::Lagarias { p, d, c1, c5, u2, jmax, fit_from } => {
            let l = lagarias_sequence(LagariasParams { p: *p, d: *d, c1: *c1, c5: *c5, u2: *u2 }, *jmax)?;
            let pts: Vec<(u32, f64)> = l.b().into_iter().filter(|b| b.0 >= (*fit_from).max(2)).collect();
            let fit = decay_fit(&pts, *p, *d).ok();
            let text = match g.format {
                Format::Csv => l.to_csv(),
                Format::Json => to_json(&json!({
                    "schema": "rectify.lagarias/1",
                    "params": l.params,
                    "u": l.u,
                    "rows": l.rows,
                    "step_violations": l.step_violations,
                    "step_holds": l.step_holds,
                    "fit": fit,
                })),
            };
            emit(g, &text)
        }
    }
}

fn parse_tail(s: &str) -> Res<TailModel> {
    if s == "inverse-linear" {
        return Ok(TailModel::InverseLinear);
    }
    if let Some(r) = s.strip_prefix("geometric:") {
        let ratio = r.parse().map_err(|_| CliError::Usage(format!("bad ratio in {s:?}")))?;
        return Ok(TailModel::Geometric { ratio });
    }
    Err(CliError::Usage(format!("unknown tail model {s:?}")))
}

fn solve(g: &Global, a: &SolveArgs) -> Res<()> {
    let f = DyadicField::from_json(&read(&a.density)?)?;
    let mode: Mode = a.mode.parse()?;
    let u = compose(&f, a.depth, mode)?;
    let rep = u.pushforward_check(a.depth)?;
    let round_trip = if mode == Mode::VolumeOnly { None } else { Some(u.round_trip_error(1000, g.seed)?) };
    if let Some(p) = &a.svg {
        fs::write(p, u.to_svg(a.grid_level, 32)?)?;
    }
    if let Some(p) = &a.map {
        fs::write(p, u.to_json())?;
    }
    let text = match g.format {
        Format::Csv => format!("cubes,max_error,round_trip\n{},{:e},{}\n", rep.cubes, rep.max_error, round_trip.map_or(String::new(), |r| format!("{r:e}"))),
        Format::Json => to_json(&json!({
            "schema": "rectify.pushforward/1",
            "mode": mode.to_string(),
            "depth": a.depth,
            "cubes": rep.cubes,
            "max_error": rep.max_error,
            "worst": rep.worst,
            "round_trip": round_trip,
            "tolerance": g.tol,
        })),
    };
    emit(g, &text)?;
    if rep.max_error > g.tol || round_trip.is_some_and(|r| r > g.tol) {
        return Err(CliError::Tolerance(format!("pushforward error {:e} or round trip above {:e}", rep.max_error, g.tol)));
    }
    Ok(())
}

fn matching(g: &Global, a: &MatchArgs) -> Res<()> {
    let x = PointSet::from_text(&read(&a.points)?)?;
    let w = x.window().clone();
    let halo = a.halo.unwrap_or_else(|| default_halo(&x));
    let (m, note) = if a.transport {
        let (f, _) = DyadicField::from_delone(&x, 1e-3)?;
        let u = compose(&f, f.depth(), if x.dim() == 1 { Mode::Exact1D } else { Mode::Exact2D })?;
        let (m, fell_back) = transport_match(&x, &u, halo)?;
        (m, if fell_back { "transport repair failed; minimal radius used" } else { "transport guided" })
    } else if let Some(r) = a.radius {
        match hall_match(&x, &w, r, halo)? {
            HallOutcome::Perfect(m) => (m, "fixed radius"),
            HallOutcome::Deficient(wit) => {
                eprintln!("{}", serde_json::to_string(&wit).expect("witness serialises"));
                return Err(CliError::Infeasible(format!(
                    "no perfect matching at radius {r}: {} points see only {} lattice sites",
                    wit.points.len(),
                    wit.neighbours.len()
                )));
            }
        }
    } else {
        (min_radius(&x, &w, halo)?.1, "minimal radius")
    };
    let text = match g.format {
        Format::Csv => m.to_csv(),
        Format::Json => to_json(&json!({ "matching": m, "note": note })),
    };
    emit(g, &text)
}

fn distort(g: &Global, a: &DistortArgs) -> Res<()> {
    let m = Matching::from_csv(&read(&a.matching)?)?;
    let rep = bi_omega_distortion(&m, &modulus(&a.omega)?, &a.radii, a.pairs, g.seed)?;
    let text = match g.format {
        Format::Csv => {
            let mut s = String::from("R,forward,backward\n");
            for (r, f, b) in &rep.per_radius {
                s.push_str(&format!("{r},{f},{b}\n"));
            }
            s
        }
        Format::Json => to_json(&rep),
    };
    emit(g, &text)
}

fn bk(g: &Global, a: &BkArgs) -> Res<()> {
    let phi: OscillationBound = a.phi.parse()?;
    let params = BkParams { c: a.c, n: a.n, m: a.m, levels: a.levels, phi: phi.clone(), height_constant: a.height_constant };
    let field = BkField::new(params.clone())?;
    if let Some(p) = &a.field {
        fs::write(p, field.to_dyadic(a.max_depth)?.to_json())?;
    }
    let cert = match &a.omega {
        Some(w) => Some(osc_certificate(&phi, &modulus(w)?, OscParams::default())?),
        None => None,
    };
    let text = match g.format {
        Format::Csv => {
            let mut s = String::from("level,side,host_side,nominal,cap,height\n");
            for (k, h) in field.heights().iter().enumerate() {
                s.push_str(&format!("{},{:e},{:e},{:e},{:e},{:e}\n", k + 1, field.sides()[k + 1], h.host_side, h.nominal, h.cap, h.height));
            }
            s
        }
        Format::Json => to_json(&json!({
            "schema": "rectify.bk/1",
            "params": params,
            "sides": field.sides(),
            "heights": field.heights(),
            "certificate": cert,
        })),
    };
    emit(g, &text)
}
