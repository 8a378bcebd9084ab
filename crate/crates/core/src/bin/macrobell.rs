//! Batch command-line front end. Every command reads its inputs, computes,
//! then writes one artifact atomically (or prints it when `--out` is absent).
//!
//! Exit codes: 0 on success, 1 on usage or validation errors, 2 on numeric
//! failures. Errors go to stderr as `{"kind": ..., "message": ...}`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use macrobell::bell::{self, BellConfig, RotorPairState, SettingPair};
use macrobell::finite::{self, DickeSuperposition, PmfOptions};
use macrobell::io::{self, CoeffsJson};
use macrobell::limit::{self, LimitState};
use macrobell::noise::{self, NoiseShape, NoiseSpec};
use macrobell::operator::{AlphaMode, DerivedParams, Povm};
use macrobell::sampler::{self, SampleBatch};
use macrobell::{selftest, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "macrobell", version, about = "Coarse-grained collective measurements and macroscopic Bell tests")]
struct Cli {
    /// Cap on worker threads (defaults to all cores)
    #[arg(long, global = true, env = "MACROBELL_THREADS")]
    threads: Option<usize>,

    /// Run the embedded invariant suite and exit
    #[arg(long)]
    selftest: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact finite-N PMF of the collective variable, as CSV `x,prob`
    Dist(DistArgs),
    /// Limit density, as CSV `x,density` (α = 1/2) or `theta,density` (α = 1)
    Limit(LimitArgs),
    /// CHSH value of sign-binned quadratures on a Schmidt-diagonal state, as JSON
    Chsh(ChshArgs),
    /// Rotor joint against its hidden-variable model, as CSV
    LocalModel(LocalModelArgs),
    /// CHSH over a grid of smearing widths and classical noise bounds, as CSV `s,eps,chsh`
    NoiseSweep(NoiseSweepArgs),
    /// Effective limit parameters after loss and single-particle channels, as JSON
    Channel(ChannelArgs),
    /// Monte Carlo samples of the collective variable, as CSV `x`
    Sample(SampleArgs),
    /// KS distance between sampled and limit distributions, as CSV `N,ks`
    Converge(ConvergeArgs),
    /// Run the embedded invariant suite
    Selftest,
}

#[derive(Args, Debug)]
struct StateArgs {
    /// w, dicke:K, product, equal, reference, random, inline JSON or a JSON file
    #[arg(long = "state", visible_alias = "coeffs", default_value = "w")]
    state: String,
    /// Seed for `random` states
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of coefficients for `random` states
    #[arg(long, default_value_t = 3)]
    dim: usize,
}

#[derive(Args, Debug)]
struct MeasureArgs {
    /// builtin:sx, builtin:sy, builtin:sz or a POVM JSON file
    #[arg(long, default_value = "builtin:sx")]
    povm: String,
    /// Coarse-graining exponent in [0, 1]; 1 selects the centered family
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Override the centering μ
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    /// Override the scale τ
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Args, Debug)]
struct DistArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    measure: MeasureArgs,
    /// Particle number
    #[arg(long = "N", short = 'N')]
    n: usize,
    /// Largest intensity lattice
    #[arg(long, default_value_t = PmfOptions::default().cap)]
    cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LimitArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, default_value = "builtin:sx")]
    povm: String,
    /// 0.5 or 1
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Override the smearing width s (α = 1/2)
    #[arg(long)]
    width: Option<f64>,
    /// Override the phase φ
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Evaluation grid, a:b:n or a comma list
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Push the rotor density forward to x = cos θ (α = 1)
    #[arg(long)]
    pushforward: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ChshArgs {
    /// reference, equal, random, inline JSON or a JSON file
    #[arg(long = "coeffs", default_value = "reference")]
    coeffs: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// φ_A,φ_A′,φ_B,φ_B′ as a JSON array or comma list
    #[arg(long, allow_hyphen_values = true)]
    angles: Option<String>,
    /// Maximize over the angles
    #[arg(long)]
    optimize: bool,
    /// Smearing widths s_A,s_B
    #[arg(long, default_value = "0,0")]
    widths: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LocalModelArgs {
    /// random, reference, or a JSON file holding the square matrix c_kl
    #[arg(long = "coeffs", default_value = "random")]
    coeffs: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phi_a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phi_b: f64,
    /// Points per axis on [0, π]
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ShapeArg {
    Uniform,
    TruncatedGaussian,
}

#[derive(Args, Debug)]
struct NoiseSweepArgs {
    #[arg(long = "coeffs", default_value = "reference")]
    coeffs: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value = "0:1:11")]
    s_grid: String,
    #[arg(long, default_value = "0:1:11")]
    eps_grid: String,
    #[arg(long, value_enum, default_value_t = ShapeArg::Uniform)]
    shape: ShapeArg,
    /// Fixed settings; otherwise each cell is optimized
    #[arg(long, allow_hyphen_values = true)]
    angles: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ChannelArgs {
    #[arg(long, default_value = "builtin:sx")]
    povm: String,
    #[arg(long, default_value_t = 0.0)]
    depol: f64,
    #[arg(long, default_value_t = 0.0)]
    dephase: f64,
    /// Detection probability p
    #[arg(long, default_value_t = 1.0)]
    loss: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum SampleMethod {
    /// Sequential measurement, falling back to the exact PMF when the window is too wide
    Auto,
    Sequential,
    Pmf,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    measure: MeasureArgs,
    #[arg(long = "N", short = 'N')]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    n_samples: usize,
    #[arg(long, value_enum, default_value_t = SampleMethod::Auto)]
    method: SampleMethod,
    /// CSV output; a `<out>.json` sidecar records the seed and sizes
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, default_value = "builtin:sx")]
    povm: String,
    /// Particle numbers, comma separated
    #[arg(long, default_value = "50,100,200,400,800")]
    ns: String,
    #[arg(long, default_value_t = 10_000)]
    n_samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: if e.is_validation() { 1 } else { 2 }, kind: e.kind().into(), message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: 1, kind: "InvalidInput".into(), message: message.into() }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => io::atomic_write(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                // a closed downstream pipe (`| head`) is not an error
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io(format!("stdout: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

fn parse_list(spec: &str) -> Result<Vec<f64>> {
    let t = spec.trim();
    if t.starts_with('[') {
        serde_json::from_str(t).map_err(|e| Error::InvalidInput(format!("bad list {spec:?}: {e}")))
    } else {
        io::parse_grid(t)
    }
}

fn parse_angles(spec: &str) -> Result<[f64; 4]> {
    let v = parse_list(spec)?;
    v.try_into().map_err(|_| Error::InvalidInput("expected four angles".into()))
}

/// Into `(-π, π]`.
fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI { w - 2.0 * PI } else { w }
}

fn mode_for(alpha: f64) -> AlphaMode {
    if alpha == 1.0 { AlphaMode::One } else { AlphaMode::Half }
}

fn measurement(m: &MeasureArgs) -> Result<(Povm, DerivedParams)> {
    let povm = io::load_povm(&m.povm)?;
    let mode = mode_for(m.alpha);
    let params = match (m.mu, m.tau) {
        (None, None) => DerivedParams::derive(&povm, mode)?,
        (mu, tau) => {
            let derived = DerivedParams::derive(&povm, mode).ok();
            let mu = mu.or(derived.map(|d| d.mu)).ok_or_else(|| Error::InvalidInput("--tau given without --mu for a degenerate POVM".into()))?;
            let tau = tau.or(derived.map(|d| d.tau)).ok_or_else(|| Error::InvalidInput("--mu given without --tau for a degenerate POVM".into()))?;
            if !(tau > 0.0) {
                return Err(Error::InvalidInput(format!("scale tau = {tau} must be positive")));
            }
            DerivedParams::with_normalization(&povm, mode, mu, tau)
        }
    };
    Ok((povm, params))
}

/// `|N, first + k⟩` for α < 1; `|N, N/2 + first + k⟩` with even `N` for α = 1.
fn dicke_state(c: &CoeffsJson, n: usize, alpha: f64) -> Result<DickeSuperposition> {
    if alpha == 1.0 {
        if n % 2 != 0 {
            return Err(Error::InvalidInput(format!("alpha = 1 needs an even particle number, got {n}")));
        }
        DickeSuperposition::centered(n / 2, c.first as i64, c.coeffs.clone())
    } else {
        DickeSuperposition::with_offset(n, c.first, c.coeffs.clone())
    }
}

fn padded(c: &CoeffsJson) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); c.first];
    v.extend_from_slice(&c.coeffs);
    v
}

fn run_dist(a: &DistArgs) -> Result<()> {
    let c = io::resolve_coeffs(&a.state.state, a.state.seed, a.state.dim)?;
    let (povm, params) = measurement(&a.measure)?;
    let state = dicke_state(&c, a.n, a.measure.alpha)?;
    let pmf = finite::pmf_finite_with(&state, &povm, &params, a.measure.alpha, PmfOptions { cap: a.cap })?;
    let rows: Vec<[f64; 2]> = pmf.values.iter().zip(&pmf.probs).map(|(&x, &p)| [x, p]).collect();
    emit(a.out.as_deref(), &io::csv_string(&["x", "prob"], rows.iter().map(|r| &r[..])))
}

fn run_limit(a: &LimitArgs) -> Result<()> {
    let c = io::resolve_coeffs(&a.state.state, a.state.seed, a.state.dim)?;
    let povm = io::load_povm(&a.povm)?;
    let coeffs = padded(&c);
    if a.alpha == 1.0 {
        let params = DerivedParams::derive(&povm, AlphaMode::One)?;
        let phi = a.phi.unwrap_or(params.phi);
        if a.pushforward {
            let grid = match &a.grid {
                Some(g) => io::parse_grid(g)?,
                None => macrobell::numeric::linspace(-0.999, 0.999, 1999),
            };
            let d = limit::rotor_pushforward(&coeffs, phi, &grid)?;
            return write_density(a.out.as_deref(), "x", &d.grid, &d.density);
        }
        let grid = match &a.grid {
            Some(g) => io::parse_grid(g)?,
            None => limit::default_theta_grid(),
        };
        let d = limit::limit_density_alpha_one(&coeffs, phi, &grid)?;
        return write_density(a.out.as_deref(), "theta", &d.grid, &d.density);
    }
    if a.alpha != 0.5 {
        return Err(Error::InvalidInput(format!("limit laws are available at alpha = 0.5 and 1, not {}", a.alpha)));
    }
    let params = DerivedParams::derive(&povm, AlphaMode::Half)?;
    let state = LimitState::new(coeffs, a.phi.unwrap_or(params.phi), a.width.unwrap_or(params.width()))?;
    let grid = match &a.grid {
        Some(g) => io::parse_grid(g)?,
        None => limit::default_grid(state.k_max()),
    };
    let d = limit::limit_density_alpha_half(&state, &grid)?;
    write_density(a.out.as_deref(), "x", &d.grid, &d.density)
}

fn write_density(out: Option<&Path>, axis: &str, grid: &[f64], density: &[f64]) -> Result<()> {
    let rows: Vec<[f64; 2]> = grid.iter().zip(density).map(|(&x, &p)| [x, p]).collect();
    emit(out, &io::csv_string(&[axis, "density"], rows.iter().map(|r| &r[..])))
}

fn schmidt_coeffs(spec: &str, seed: u64, dim: usize) -> Result<Vec<Complex64>> {
    Ok(padded(&io::resolve_coeffs(spec, seed, dim)?))
}

fn run_chsh(a: &ChshArgs) -> Result<()> {
    let coeffs = schmidt_coeffs(&a.coeffs, a.seed, a.dim)?;
    let widths = parse_list(&a.widths)?;
    let widths: [f64; 2] = widths.try_into().map_err(|_| Error::InvalidInput("expected two widths".into()))?;
    let angles = match (&a.angles, a.optimize) {
        (Some(_), true) => return Err(Error::InvalidInput("--angles and --optimize are exclusive".into())),
        (Some(s), false) => parse_angles(s)?,
        (None, false) => [0.0, PI / 2.0, -PI / 4.0, PI / 4.0],
        (None, true) => {
            BellConfig::new(coeffs.clone(), [0.0; 4], widths)?;
            let k = coeffs.len() - 1;
            let ta = bell::smeared_sign_table(k, widths[0]);
            let tb = bell::smeared_sign_table(k, widths[1]);
            bell::optimize_chsh_with_tables(&coeffs, &ta, &tb).angles.map(wrap_angle)
        }
    };
    let config = BellConfig::new(coeffs, angles, widths)?;
    let correlators: Vec<f64> = SettingPair::ALL.iter().map(|&p| bell::correlator(&config, p)).collect();
    let v = json!({
        "value": bell::chsh_value(&config),
        "angles": angles,
        "widths": widths,
        "correlators": {
            "ab": correlators[0], "ab_prime": correlators[1],
            "a_prime_b": correlators[2], "a_prime_b_prime": correlators[3],
        },
    });
    emit(a.out.as_deref(), &json_text(&v))
}

fn run_local_model(a: &LocalModelArgs) -> Result<serde_json::Value> {
    let state = match a.coeffs.as_str() {
        "random" => RotorPairState::random(a.dim, a.seed)?,
        "reference" => {
            let c = bell::reference_state();
            let d = c.len();
            let mut m = vec![Complex64::new(0.0, 0.0); d * d];
            for (k, z) in c.iter().enumerate() {
                m[k * d + k] = *z;
            }
            RotorPairState::new(d, m)?
        }
        path => {
            let (d, m) = io::coeff_matrix_from_json_str(&io::read_text(path)?)?;
            RotorPairState::new(d, m)?
        }
    };
    if a.points < 3 {
        return Err(Error::InvalidInput("need at least 3 grid points".into()));
    }
    let grid = macrobell::numeric::linspace(0.0, PI, a.points);
    let cmp = bell::local_model_alpha_one(&state, a.phi_a, a.phi_b, &grid, &grid)?;
    let mut rows = Vec::with_capacity(a.points * a.points);
    for (i, &ta) in grid.iter().enumerate() {
        for (j, &tb) in grid.iter().enumerate() {
            let (q, l) = (cmp.quantum.at(i, j), cmp.lhv.at(i, j));
            rows.push([ta, tb, q, l, q - l]);
        }
    }
    let header = ["theta_a", "theta_b", "quantum", "lhv", "difference"];
    emit(a.out.as_deref(), &io::csv_string(&header, rows.iter().map(|r| &r[..])))?;
    Ok(json!({
        "dim": state.dim(),
        "max_abs_difference": cmp.max_abs_difference,
        "total_variation": cmp.total_variation,
    }))
}

fn run_noise_sweep(a: &NoiseSweepArgs) -> Result<serde_json::Value> {
    let coeffs = schmidt_coeffs(&a.coeffs, a.seed, a.dim)?;
    let s_grid = io::parse_grid(&a.s_grid)?;
    let eps_grid = io::parse_grid(&a.eps_grid)?;
    let shape = match a.shape {
        ShapeArg::Uniform => NoiseShape::Uniform,
        ShapeArg::TruncatedGaussian => NoiseShape::TruncatedGaussian,
    };
    let angles = a.angles.as_deref().map(parse_angles).transpose()?;
    let sweep = noise::noisy_chsh_sweep(&coeffs, &s_grid, &eps_grid, shape, angles)?;
    let rows: Vec<[f64; 3]> = sweep.cells.iter().map(|c| [c.s, c.eps, c.chsh]).collect();
    emit(a.out.as_deref(), &io::csv_string(&["s", "eps", "chsh"], rows.iter().map(|r| &r[..])))?;
    let contour: Vec<_> = sweep.contour.iter().map(|(eps, s)| json!({"eps": eps, "s_critical": s})).collect();
    Ok(json!({"monotone_in_s": sweep.monotone_in_s, "contour": contour}))
}

fn run_channel(a: &ChannelArgs) -> Result<()> {
    let povm = io::load_povm(&a.povm)?;
    let spec = NoiseSpec { loss_p: a.loss, depol_lambda: a.depol, dephase_lambda: a.dephase, ..NoiseSpec::default() };
    let eff = noise::noisy_limit_params(&povm, &spec)?;
    let mut v = json!({
        "s": eff.s(), "s2": eff.s2, "phi": eff.phi, "sigma2": eff.sigma2, "tau": eff.tau,
    });
    if a.loss < 1.0 {
        // loss acts on the channel-transformed measurement
        let transformed = noise::dephase_povm(&noise::depolarize_povm(&povm, a.depol)?, a.dephase)?;
        let params = DerivedParams::derive(&transformed, AlphaMode::Half)?;
        let s2_loss = noise::loss_width(&params, a.loss)?;
        v["loss_s2"] = json!(s2_loss);
        v["loss_s"] = json!(s2_loss.sqrt());
    }
    emit(a.out.as_deref(), &json_text(&v))
}

fn draw(
    state: &DickeSuperposition,
    povm: &Povm,
    params: &DerivedParams,
    alpha: f64,
    n_samples: usize,
    seed: u64,
    method: SampleMethod,
) -> Result<(SampleBatch, &'static str)> {
    let via_pmf = || -> Result<(SampleBatch, &'static str)> {
        let pmf = finite::pmf_finite(state, povm, params, alpha)?;
        Ok((sampler::sample_from_pmf(&pmf, state.n_particles(), n_samples, seed), "pmf"))
    };
    match method {
        SampleMethod::Pmf => via_pmf(),
        SampleMethod::Sequential => Ok((sampler::sample_outcomes(state, povm, params, alpha, n_samples, seed)?, "sequential")),
        SampleMethod::Auto => match sampler::sample_outcomes(state, povm, params, alpha, n_samples, seed) {
            Err(Error::CapExceeded { .. }) => via_pmf(),
            other => Ok((other?, "sequential")),
        },
    }
}

fn run_sample(a: &SampleArgs) -> Result<()> {
    let c = io::resolve_coeffs(&a.state.state, a.state.seed, a.state.dim)?;
    let (povm, params) = measurement(&a.measure)?;
    let state = dicke_state(&c, a.n, a.measure.alpha)?;
    let (batch, method) = draw(&state, &povm, &params, a.measure.alpha, a.n_samples, a.state.seed, a.method)?;
    let csv = io::csv_string(&["x"], batch.values.iter().map(std::slice::from_ref));
    let mut sidecar = a.out.clone().into_os_string();
    sidecar.push(".json");
    let meta = json!({"seed": batch.seed, "N": batch.n_particles, "n_samples": batch.n_samples, "method": method});
    io::atomic_write(&a.out, csv.as_bytes())?;
    io::atomic_write(PathBuf::from(sidecar), json_text(&meta).as_bytes())
}

fn run_converge(a: &ConvergeArgs) -> Result<()> {
    let c = io::resolve_coeffs(&a.state.state, a.state.seed, a.state.dim)?;
    let povm = io::load_povm(&a.povm)?;
    let params = DerivedParams::derive(&povm, AlphaMode::Half)?;
    let ns: Vec<usize> = a
        .ns
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::InvalidInput(format!("bad particle number {t:?}"))))
        .collect::<Result<_>>()?;
    let limit_state = LimitState::new(padded(&c), params.phi, params.width())?;
    let density = limit::limit_density_alpha_half(&limit_state, &limit::default_grid(limit_state.k_max()))?;
    let cdf = density.cdf_table();
    let mut csv = String::from("N,ks\n");
    for &n in &ns {
        let state = dicke_state(&c, n, 0.5)?;
        let (batch, _) = draw(&state, &povm, &params, 0.5, a.n_samples, a.state.seed, SampleMethod::Auto)?;
        let ks = sampler::ks_distance_batch(&batch, |x| cdf.eval(x));
        csv.push_str(&format!("{n},{}\n", io::fmt_float(ks)));
    }
    emit(a.out.as_deref(), &csv)
}

fn run_selftest() -> CliResult<()> {
    let results = selftest::run_all();
    let failed = results.iter().filter(|r| !r.pass).count();
    for r in &results {
        println!("{}", serde_json::to_string(r).expect("check result serializes"));
    }
    if failed > 0 {
        return Err(Failure { code: 1, kind: "SelftestFailed".into(), message: format!("{failed} check(s) failed") });
    }
    Ok(())
}

fn print_summary(v: serde_json::Value) {
    println!("{}", serde_json::to_string(&v).expect("summary serializes"));
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure { code: 2, kind: "Internal".into(), message: e.to_string() })?;
    }
    if cli.selftest {
        return run_selftest();
    }
    let Some(command) = cli.command else {
        return Err(invalid("no command given; see --help"));
    };
    match command {
        Command::Dist(a) => run_dist(&a)?,
        Command::Limit(a) => run_limit(&a)?,
        Command::Chsh(a) => run_chsh(&a)?,
        Command::LocalModel(a) => {
            let summary = run_local_model(&a)?;
            // the CSV owns stdout when no --out is given
            if a.out.is_some() {
                print_summary(summary);
            }
        }
        Command::NoiseSweep(a) => {
            let summary = run_noise_sweep(&a)?;
            if a.out.is_some() {
                print_summary(summary);
            }
        }
        Command::Channel(a) => run_channel(&a)?,
        Command::Sample(a) => run_sample(&a)?,
        Command::Converge(a) => run_converge(&a)?,
        Command::Selftest => run_selftest()?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let message = e.render().to_string();
            eprintln!("{}", json!({"kind": "Usage", "message": message.trim()}));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({"kind": f.kind, "message": f.message}));
            ExitCode::from(f.code)
        }
    }
}
