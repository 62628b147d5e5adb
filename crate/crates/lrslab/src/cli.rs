//! Command-line interface: construct, rigidity, rpca, mc, sweep, diagnose,
//! epsilon-study, and the repro pipelines.
//!
//! Every subcommand accepts `--config <json>` holding the same keys as its
//! flags; explicit flags override the file, the file overrides built-in
//! defaults, and the resolved configuration is printed as JSON on stderr.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::construct::{self, ConstructionSpec, Family, SizeBound, DEFAULT_EPS_SCHEDULE};
use crate::diagnostics::{
    self, classify, epsilon_study, SolverTrace, DEFAULT_DIVERGENCE_CAP, DEFAULT_RES_TOL,
    DEFAULT_WINDOW,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mc::{self, McConfig, McInit};
use crate::rigidity::{rigidity, RigidityCertificate, RigidityConfig};
use crate::rpca::{self, ConvexSolver, RpcaConfig};

#[derive(Parser)]
#[command(
    name = "lrslab",
    about = "Low-rank plus sparse decomposition lab: adversarial families, a rigidity oracle, \
             and Robust PCA / matrix completion solvers",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a matrix family: limit, eps-member, and its (L, S) split
    Construct(ConstructArgs),
    /// Bound the rigidity Rig(M, r) of a matrix
    Rigidity(RigidityArgs),
    /// Run a Robust PCA solver and write its trace
    Rpca(RpcaArgs),
    /// Run a matrix completion solver and write its trace
    Mc(McArgs),
    /// Sweep the convex relaxation over a lambda grid
    Sweep(SweepArgs),
    /// Classify a solver trace
    Diagnose(DiagnoseArgs),
    /// Tabulate a family along an epsilon schedule
    EpsilonStudy(EpsilonArgs),
    /// Reproduce the demonstration experiments (fig1, fig2, fig3)
    Repro(ReproArgs),
    /// Evaluate the non-closedness size bounds
    MinSize(MinSizeArgs),
}

fn load_config<T: for<'de> Deserialize<'de> + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::InvalidParameter(format!("bad config file {:?}: {}", p, e)))
        }
    }
}

fn announce<T: Serialize>(resolved: &T) {
    match serde_json::to_string(resolved) {
        Ok(js) => eprintln!("resolved config: {}", js),
        Err(e) => eprintln!("resolved config unserializable: {}", e),
    }
}

macro_rules! merge {
    ($params:expr, $( $field:ident ),* $(,)?) => {
        $( if let Some(v) = $field { $params.$field = v; } )*
    };
}

// ---- construct ----

#[derive(Args)]
pub struct ConstructArgs {
    /// Family: simple3 | lemma1 | lemma2 | lemma3 | lemma4 | maxrigid3 | demo1 | demo2
    #[arg(long)]
    family: Option<String>,
    /// Rank parameter r [default: 1]
    #[arg(long)]
    r: Option<usize>,
    /// Sparsity parameter s [default: 1]
    #[arg(long)]
    s: Option<usize>,
    /// Block-grid count p for lemma4 [default: 1]
    #[arg(long)]
    p: Option<usize>,
    /// Epsilon of the family member [default: 1e-3]
    #[arg(long)]
    eps: Option<f64>,
    /// PRNG seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Size parameter n (lemma1 only)
    #[arg(long)]
    n: Option<usize>,
    /// Zero-pad the output to this size
    #[arg(long)]
    pad: Option<usize>,
    /// Output path prefix; writes `<prefix>_{M_limit,M_eps,L_eps,S_eps}.txt`
    /// and `<prefix>_meta.json`
    #[arg(long)]
    out_prefix: PathBuf,
    /// JSON config file (flags override file, file overrides defaults)
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct ConstructParams {
    family: String,
    r: usize,
    s: usize,
    p: usize,
    eps: f64,
    seed: u64,
    n: Option<usize>,
    pad: Option<usize>,
}

impl Default for ConstructParams {
    fn default() -> Self {
        ConstructParams {
            family: "simple3".into(),
            r: 1,
            s: 1,
            p: 1,
            eps: 1e-3,
            seed: 0,
            n: None,
            pad: None,
        }
    }
}

#[derive(Serialize)]
struct ConstructMeta<'a> {
    family: &'a str,
    r: usize,
    s: usize,
    p: usize,
    epsilon: f64,
    seed: u64,
    pad_to: Option<usize>,
    natural_size: usize,
    n: usize,
    claimed_rigidity_lower_bound: usize,
}

fn run_construct(a: ConstructArgs) -> Result<()> {
    let mut params: ConstructParams = load_config(&a.config)?;
    let ConstructArgs {
        family,
        r,
        s,
        p,
        eps,
        seed,
        n,
        pad,
        out_prefix,
        ..
    } = a;
    merge!(params, r, s, p, eps, seed);
    if let Some(f) = family {
        params.family = f;
    }
    if n.is_some() {
        params.n = n;
    }
    if pad.is_some() {
        params.pad = pad;
    }
    announce(&params);

    let mut spec = ConstructionSpec::new(
        Family::parse(&params.family)?,
        params.r,
        params.s,
        params.eps,
        params.seed,
    );
    spec.p = params.p;
    spec.n = params.n;
    spec.pad_to = params.pad;
    let out = construct::build(&spec)?;
    let natural = match spec.pad_to {
        Some(_) => {
            let mut unpadded = spec.clone();
            unpadded.pad_to = None;
            construct::build(&unpadded)?.n
        }
        None => out.n,
    };

    let prefix = out_prefix.to_string_lossy();
    let write = |suffix: &str, m: &Matrix| -> Result<()> {
        m.write_file(Path::new(&format!("{}_{}.txt", prefix, suffix)))
    };
    write("M_limit", &out.m_limit)?;
    write("M_eps", &out.m_eps)?;
    write("L_eps", &out.l_eps)?;
    write("S_eps", &out.s_eps)?;
    diagnostics::write_json(
        &ConstructMeta {
            family: out.family.name(),
            r: out.r,
            s: out.s,
            p: params.p,
            epsilon: params.eps,
            seed: params.seed,
            pad_to: params.pad,
            natural_size: natural,
            n: out.n,
            claimed_rigidity_lower_bound: out.claimed_rigidity_lower_bound,
        },
        Path::new(&format!("{}_meta.json", prefix)),
    )?;
    println!(
        "wrote {}_{{M_limit,M_eps,L_eps,S_eps}}.txt and {}_meta.json",
        prefix, prefix
    );
    Ok(())
}

// ---- rigidity ----

#[derive(Args)]
pub struct RigidityArgs {
    /// Matrix file in the text format
    #[arg(long)]
    matrix: PathBuf,
    /// Target rank r
    #[arg(long)]
    r: usize,
    /// Cap on enumerated support cardinality [default: (n-r)^2]
    #[arg(long)]
    smax: Option<usize>,
    /// Wall-clock budget in seconds [default: 300]
    #[arg(long)]
    budget_sec: Option<f64>,
    /// Support evaluation budget [default: 1000000]
    #[arg(long)]
    budget_supports: Option<u64>,
    /// Declare a p x p block-grid symmetry for orbit pruning
    #[arg(long)]
    block_symmetry: Option<usize>,
    /// Witness hint files (matrix text format); verified, never trusted
    #[arg(long)]
    hint: Vec<PathBuf>,
    /// PRNG seed for the feasibility searches [default: 24301]
    #[arg(long)]
    seed: Option<u64>,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
    /// JSON config file (flags override file, file overrides defaults)
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Certificate as emitted by the CLI: the witness inlined in the matrix
/// text format.
#[derive(Serialize)]
struct CliCertificate {
    r: usize,
    lower_bound: usize,
    upper_bound: usize,
    numerical_lower_bound: Option<usize>,
    status: crate::rigidity::CertStatus,
    supports_examined: u64,
    elapsed_secs: f64,
    witness: Option<String>,
}

impl From<&RigidityCertificate> for CliCertificate {
    fn from(c: &RigidityCertificate) -> Self {
        CliCertificate {
            r: c.r,
            lower_bound: c.lower_bound,
            upper_bound: c.upper_bound,
            numerical_lower_bound: c.numerical_lower_bound,
            status: c.status,
            supports_examined: c.supports_examined,
            elapsed_secs: c.elapsed.as_secs_f64(),
            witness: c.witness.as_ref().map(|w| w.to_text()),
        }
    }
}

fn run_rigidity(a: RigidityArgs) -> Result<()> {
    let mut cfg: RigidityConfig = load_config(&a.config)?;
    if a.smax.is_some() {
        cfg.s_max = a.smax;
    }
    if let Some(b) = a.budget_sec {
        cfg.time_budget_secs = b;
    }
    if let Some(b) = a.budget_supports {
        cfg.max_support_evals = b;
    }
    if a.block_symmetry.is_some() {
        cfg.block_symmetry_p = a.block_symmetry;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    for h in &a.hint {
        cfg.witness_hints.push(Matrix::read_file(h)?);
    }
    announce(&cfg);

    let m = Matrix::read_file(&a.matrix)?;
    let cert = rigidity(&m, a.r, &cfg)?;
    diagnostics::write_json(&CliCertificate::from(&cert), &a.out)?;
    println!(
        "Rig(M, {}) in [{}, {}], status {:?} ({} supports examined)",
        a.r, cert.lower_bound, cert.upper_bound, cert.status, cert.supports_examined
    );
    Ok(())
}

// ---- rpca ----

#[derive(Args)]
pub struct RpcaArgs {
    /// Algorithm: godec | altmin | altproj | fastgd | pcp | ialm
    #[arg(long)]
    algo: String,
    /// Matrix file in the text format
    #[arg(long)]
    matrix: PathBuf,
    /// Rank constraint r [default: 1]
    #[arg(long)]
    r: Option<usize>,
    /// Sparsity constraint s [default: 1]
    #[arg(long)]
    s: Option<usize>,
    /// Convex weight / FastGD estimator control
    #[arg(long)]
    lambda: Option<f64>,
    /// FastGD step size [default: 1/6]
    #[arg(long)]
    eta: Option<f64>,
    /// AltProj threshold control [default: 0.35]
    #[arg(long)]
    beta: Option<f64>,
    /// GoDec power sweeps; 0 = exact SVD projection [default: 10]
    #[arg(long)]
    power_iters: Option<usize>,
    /// Iteration cap [default: 10000]
    #[arg(long)]
    max_iters: Option<u64>,
    /// Stop when residual <= res_tol * ||M||_F [default: 1e-9]
    #[arg(long)]
    res_tol: Option<f64>,
    /// PRNG seed [default: 7]
    #[arg(long)]
    seed: Option<u64>,
    /// Trace CSV output path
    #[arg(long)]
    out: PathBuf,
    /// Write the final L (convex solvers)
    #[arg(long)]
    out_l: Option<PathBuf>,
    /// Write the final S (convex solvers)
    #[arg(long)]
    out_s: Option<PathBuf>,
    /// JSON config file (flags override file, file overrides defaults)
    #[arg(long)]
    config: Option<PathBuf>,
}

fn run_rpca(a: RpcaArgs) -> Result<()> {
    let mut cfg: RpcaConfig = load_config(&a.config)?;
    let RpcaArgs {
        algo,
        matrix,
        r,
        s,
        lambda,
        eta,
        beta,
        power_iters,
        max_iters,
        res_tol,
        seed,
        out,
        out_l,
        out_s,
        ..
    } = a;
    merge!(cfg, r, s, eta, beta, max_iters, res_tol, seed);
    if lambda.is_some() {
        cfg.lambda = lambda;
    }
    if let Some(q) = power_iters {
        cfg.godec_power_iters = q;
    }
    announce(&cfg);

    let m = Matrix::read_file(&matrix)?;
    let lam = cfg
        .lambda
        .unwrap_or_else(|| rpca::default_lambda(m.rows(), m.cols()));
    let (trace, ls) = match algo.as_str() {
        "godec" => (rpca::godec(&m, &cfg)?, None),
        "altmin" => (rpca::altmin(&m, &cfg)?, None),
        "altproj" => (rpca::altproj(&m, &cfg)?, None),
        "fastgd" => (rpca::fastgd(&m, &cfg)?, None),
        "pcp" => {
            let (l, s, t) = rpca::pcp_admm(&m, lam, &cfg)?;
            (t, Some((l, s)))
        }
        "ialm" => {
            let (l, s, t) = rpca::ialm(&m, lam, &cfg)?;
            (t, Some((l, s)))
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown rpca algorithm {:?}",
                other
            )))
        }
    };
    trace.write_csv(&out)?;
    if let Some((l, s)) = ls {
        if let Some(p) = out_l {
            l.write_file(&p)?;
        }
        if let Some(p) = out_s {
            s.write_file(&p)?;
        }
    }
    let last = trace.records.last();
    println!(
        "{}: {} iterations, final residual {}",
        trace.algo,
        last.map_or(0, |r| r.iter),
        last.map_or(0.0, |r| r.residual)
    );
    Ok(())
}

// ---- mc ----

#[derive(Args)]
pub struct McArgs {
    /// Algorithm: asd | pf | lmafit | cgiht
    #[arg(long)]
    algo: String,
    /// Matrix file in the text format
    #[arg(long)]
    matrix: PathBuf,
    /// Missing entries as "i,j;i,j;..."
    #[arg(long)]
    missing: String,
    /// Rank constraint [default: 1]
    #[arg(long)]
    r: Option<usize>,
    /// Initialization: spectral | corner [default: spectral]
    #[arg(long)]
    init: Option<String>,
    /// Iteration cap [default: 10000]
    #[arg(long)]
    max_iters: Option<u64>,
    /// Stop when observed residual <= res_tol * ||P_Omega(M)||_F
    /// [default: 1e-9]
    #[arg(long)]
    res_tol: Option<f64>,
    /// LMaFit over-relaxation start value [default: 1.0]
    #[arg(long)]
    omega: Option<f64>,
    /// CGIHT restart threshold on |cos| of successive gradients
    /// [default: 0.95]
    #[arg(long)]
    restart_angle: Option<f64>,
    /// PRNG seed [default: 7]
    #[arg(long)]
    seed: Option<u64>,
    /// Trace CSV output path
    #[arg(long)]
    out: PathBuf,
    /// JSON config file (flags override file, file overrides defaults)
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_missing(s: &str) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for part in s.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let pieces: Vec<&str> = part.split(',').collect();
        if pieces.len() != 2 {
            return Err(Error::InvalidParameter(format!(
                "bad missing entry {:?}: expected \"i,j\"",
                part
            )));
        }
        let i = pieces[0].trim().parse().map_err(|e| {
            Error::InvalidParameter(format!("bad row index {:?}: {}", pieces[0], e))
        })?;
        let j = pieces[1].trim().parse().map_err(|e| {
            Error::InvalidParameter(format!("bad col index {:?}: {}", pieces[1], e))
        })?;
        out.push((i, j));
    }
    Ok(out)
}

fn run_mc(a: McArgs) -> Result<()> {
    let mut cfg: McConfig = load_config(&a.config)?;
    let McArgs {
        algo,
        matrix,
        missing,
        r,
        init,
        max_iters,
        res_tol,
        omega,
        restart_angle,
        seed,
        out,
        ..
    } = a;
    merge!(cfg, r, max_iters, res_tol, restart_angle, seed);
    if let Some(w) = omega {
        cfg.omega_sor = w;
    }
    if let Some(init) = init {
        cfg.init = match init.as_str() {
            "spectral" => McInit::SpectralOfZeroFill,
            "corner" => McInit::RandomNonzeroCorner,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown init {:?} (expected spectral | corner)",
                    other
                )))
            }
        };
    }
    announce(&cfg);

    let m = Matrix::read_file(&matrix)?;
    let mask = mc::make_mask(m.rows(), m.cols(), &parse_missing(&missing)?)?;
    let trace = match algo.as_str() {
        "asd" => mc::asd(&m, &mask, &cfg)?,
        "pf" => mc::power_factorization(&m, &mask, &cfg)?,
        "lmafit" => mc::lmafit(&m, &mask, &cfg)?,
        "cgiht" => mc::cgiht(&m, &mask, &cfg)?,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown mc algorithm {:?}",
                other
            )))
        }
    };
    trace.write_csv(&out)?;
    let last = trace.records.last();
    println!(
        "{}: {} iterations, final observed residual {}",
        trace.algo,
        last.map_or(0, |r| r.iter),
        last.map_or(0.0, |r| r.residual)
    );
    Ok(())
}

// ---- sweep ----

#[derive(Args)]
pub struct SweepArgs {
    /// Solver: pcp | ialm
    #[arg(long)]
    algo: String,
    /// Matrix file in the text format
    #[arg(long)]
    matrix: PathBuf,
    /// Lambda grid "start:end:step" (inclusive)
    #[arg(long, default_value = "0.05:2.0:0.05")]
    lambda_grid: String,
    /// Iteration cap per grid point [default: 10000]
    #[arg(long)]
    max_iters: Option<u64>,
    /// Convex feasibility tolerance [default: 1e-9]
    #[arg(long)]
    res_tol: Option<f64>,
    /// Table CSV output path
    #[arg(long)]
    out: PathBuf,
    /// JSON config file (flags override file, file overrides defaults)
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidParameter(format!(
            "bad grid {:?}: expected start:end:step",
            s
        )));
    }
    let parse = |x: &str| -> Result<f64> {
        x.trim()
            .parse()
            .map_err(|e| Error::InvalidParameter(format!("bad grid number {:?}: {}", x, e)))
    };
    let (start, end, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    if step <= 0.0 || end < start {
        return Err(Error::InvalidParameter("grid must ascend".into()));
    }
    let mut out = Vec::new();
    let n = ((end - start) / step).round() as usize;
    for k in 0..=n {
        let v = start + step * k as f64;
        if v <= end + 1e-12 * step {
            out.push(v);
        }
    }
    Ok(out)
}

fn run_sweep(a: SweepArgs) -> Result<()> {
    let mut cfg: RpcaConfig = load_config(&a.config)?;
    let SweepArgs {
        algo,
        matrix,
        lambda_grid,
        max_iters,
        res_tol,
        out,
        ..
    } = a;
    merge!(cfg, max_iters, res_tol);
    announce(&cfg);
    let solver = match algo.as_str() {
        "pcp" => ConvexSolver::Pcp,
        "ialm" => ConvexSolver::Ialm,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown sweep solver {:?}",
                other
            )))
        }
    };
    let m = Matrix::read_file(&matrix)?;
    let grid = parse_grid(&lambda_grid)?;
    let table = rpca::lambda_sweep(&m, &grid, solver, &cfg)?;
    for (lam, err) in &table.errors {
        eprintln!("lambda {}: {}", lam, err);
    }
    table.write_csv(&out)?;
    println!(
        "swept {} lambda points ({} failed)",
        table.rows.len(),
        table.errors.len()
    );
    Ok(())
}

// ---- diagnose ----

#[derive(Args)]
pub struct DiagnoseArgs {
    /// Trace CSV file
    #[arg(long)]
    trace: PathBuf,
    /// Residual tolerance relative to the initial residual [default: 1e-4]
    #[arg(long)]
    res_tol: Option<f64>,
    /// Divergence cap relative to the input scale [default: 1e3]
    #[arg(long)]
    cap: Option<f64>,
    /// Trailing window in records [default: 50]
    #[arg(long)]
    window: Option<usize>,
    /// Classification JSON output path
    #[arg(long)]
    out: PathBuf,
    /// JSON config file (flags override file, file overrides defaults)
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct DiagnoseParams {
    res_tol: f64,
    cap: f64,
    window: usize,
}

impl Default for DiagnoseParams {
    fn default() -> Self {
        DiagnoseParams {
            res_tol: DEFAULT_RES_TOL,
            cap: DEFAULT_DIVERGENCE_CAP,
            window: DEFAULT_WINDOW,
        }
    }
}

fn run_diagnose(a: DiagnoseArgs) -> Result<()> {
    let mut params: DiagnoseParams = load_config(&a.config)?;
    let DiagnoseArgs {
        trace,
        res_tol,
        cap,
        window,
        out,
        ..
    } = a;
    merge!(params, res_tol, cap, window);
    announce(&params);
    let t = SolverTrace::read_csv(&trace)?;
    let c = classify(&t, params.res_tol, params.cap, params.window)?;
    diagnostics::write_json(&c, &out)?;
    println!("verdict: {:?}", c.verdict);
    Ok(())
}

// ---- epsilon-study ----

#[derive(Args)]
pub struct EpsilonArgs {
    /// Family: simple3 | lemma1 | lemma2 | lemma3 | lemma4 | maxrigid3 | demo1 | demo2
    #[arg(long)]
    family: Option<String>,
    /// Rank parameter r [default: 1]
    #[arg(long)]
    r: Option<usize>,
    /// Sparsity parameter s [default: 1]
    #[arg(long)]
    s: Option<usize>,
    /// Block-grid count p for lemma4 [default: 1]
    #[arg(long)]
    p: Option<usize>,
    /// Size parameter n (lemma1 only)
    #[arg(long)]
    n: Option<usize>,
    /// PRNG seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated epsilon schedule [default: 1e-1..1e-6]
    #[arg(long)]
    schedule: Option<String>,
    /// Table CSV output path
    #[arg(long)]
    out: PathBuf,
    /// JSON config file (flags override file, file overrides defaults)
    #[arg(long)]
    config: Option<PathBuf>,
}

fn run_epsilon_study(a: EpsilonArgs) -> Result<()> {
    let mut params: ConstructParams = load_config(&a.config)?;
    let EpsilonArgs {
        family,
        r,
        s,
        p,
        n,
        seed,
        schedule,
        out,
        ..
    } = a;
    merge!(params, r, s, p, seed);
    if let Some(f) = family {
        params.family = f;
    }
    if n.is_some() {
        params.n = n;
    }
    let schedule: Vec<f64> = match &schedule {
        None => DEFAULT_EPS_SCHEDULE.to_vec(),
        Some(text) => {
            let mut eps = Vec::new();
            for tok in text.split(',') {
                eps.push(tok.trim().parse().map_err(|e| {
                    Error::InvalidParameter(format!("bad epsilon {:?}: {}", tok, e))
                })?);
            }
            eps
        }
    };
    announce(&params);
    let mut spec = ConstructionSpec::new(
        Family::parse(&params.family)?,
        params.r,
        params.s,
        1.0,
        params.seed,
    );
    spec.p = params.p;
    spec.n = params.n;
    let study = epsilon_study(&spec, &schedule)?;
    study.write_csv(&out)?;
    println!("{} rows -> {:?}", study.rows.len(), out);
    Ok(())
}

// ---- min-size ----

#[derive(Args)]
pub struct MinSizeArgs {
    /// Rank parameter r
    #[arg(long)]
    r: usize,
    /// Sparsity parameter s
    #[arg(long)]
    s: usize,
    /// Bound: main | quadratic | conjecture
    #[arg(long, default_value = "main")]
    bound: String,
}

fn run_min_size(a: MinSizeArgs) -> Result<()> {
    announce(&serde_json::json!({ "r": a.r, "s": a.s, "bound": a.bound }));
    let bound = match a.bound.as_str() {
        "main" => SizeBound::TheoremMain,
        "quadratic" => SizeBound::QuadraticSparsity,
        "conjecture" => SizeBound::Conjecture,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown bound {:?} (expected main | quadratic | conjecture)",
                other
            )))
        }
    };
    let n = construct::min_size(a.r, a.s, bound)?;
    println!("{}", n);
    Ok(())
}

// ---- repro ----

#[derive(Args)]
pub struct ReproArgs {
    /// Which figure to reproduce: fig1 | fig2 | fig3
    figure: String,
    /// Output directory [default: .]
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Iteration horizon for the solver runs [default: 10000]
    #[arg(long, default_value_t = 10_000)]
    max_iters: u64,
}

fn classify_and_write(trace: &SolverTrace, dir: &Path, stem: &str) -> Result<()> {
    trace.write_csv(&dir.join(format!("{}.csv", stem)))?;
    let c = classify(
        trace,
        DEFAULT_RES_TOL,
        DEFAULT_DIVERGENCE_CAP,
        DEFAULT_WINDOW,
    )?;
    diagnostics::write_json(&c, &dir.join(format!("{}.classification.json", stem)))?;
    println!(
        "{}: verdict {:?}, final residual {:.3e}, max component {:.3e}",
        stem, c.verdict, c.final_residual, c.max_component_norm
    );
    Ok(())
}

/// The four non-convex RPCA runs of the first demonstration.
pub fn repro_fig1(out_dir: &Path, max_iters: u64) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let (m1, m2) = construct::demo_matrices();
    let mut cfg = RpcaConfig {
        max_iters,
        ..RpcaConfig::default()
    };
    cfg.lambda = Some(3.23);
    cfg.eta = 1.0 / 6.0;
    classify_and_write(&rpca::fastgd(&m1, &cfg)?, out_dir, "fig1_fastgd_m1")?;
    classify_and_write(&rpca::altmin(&m2, &cfg)?, out_dir, "fig1_altmin_m2")?;
    classify_and_write(&rpca::altproj(&m2, &cfg)?, out_dir, "fig1_altproj_m2")?;
    classify_and_write(&rpca::godec(&m2, &cfg)?, out_dir, "fig1_godec_m2")?;
    Ok(())
}

/// The convex lambda sweeps of the second demonstration.
pub fn repro_fig2(out_dir: &Path, max_iters: u64) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let (m1, _) = construct::demo_matrices();
    let cfg = RpcaConfig {
        max_iters,
        ..RpcaConfig::default()
    };
    let grid = parse_grid("0.05:2.0:0.05")?;
    let ialm_table = rpca::lambda_sweep(&m1, &grid, ConvexSolver::Ialm, &cfg)?;
    ialm_table.write_csv(&out_dir.join("fig2_ialm_m1.csv"))?;
    let pcp_table = rpca::lambda_sweep(&m1, &grid, ConvexSolver::Pcp, &cfg)?;
    pcp_table.write_csv(&out_dir.join("fig2_pcp_m1.csv"))?;
    println!(
        "fig2: {} ialm rows, {} pcp rows",
        ialm_table.rows.len(),
        pcp_table.rows.len()
    );
    Ok(())
}

/// The four matrix completion runs of the third demonstration: M1 with the
/// top-left entry missing, rank 1, nonzero-corner initialization.
pub fn repro_fig3(out_dir: &Path, max_iters: u64) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let (m1, _) = construct::demo_matrices();
    let mask = mc::make_mask(3, 3, &[(0, 0)])?;
    let cfg = McConfig {
        max_iters,
        init: McInit::RandomNonzeroCorner,
        ..McConfig::default()
    };
    classify_and_write(&mc::asd(&m1, &mask, &cfg)?, out_dir, "fig3_asd_m1")?;
    classify_and_write(
        &mc::power_factorization(&m1, &mask, &cfg)?,
        out_dir,
        "fig3_pf_m1",
    )?;
    classify_and_write(&mc::lmafit(&m1, &mask, &cfg)?, out_dir, "fig3_lmafit_m1")?;
    classify_and_write(&mc::cgiht(&m1, &mask, &cfg)?, out_dir, "fig3_cgiht_m1")?;
    Ok(())
}

fn run_repro(a: ReproArgs) -> Result<()> {
    announce(&serde_json::json!({
        "figure": a.figure,
        "out_dir": a.out_dir,
        "max_iters": a.max_iters,
    }));
    match a.figure.as_str() {
        "fig1" => repro_fig1(&a.out_dir, a.max_iters),
        "fig2" => repro_fig2(&a.out_dir, a.max_iters),
        "fig3" => repro_fig3(&a.out_dir, a.max_iters),
        other => Err(Error::InvalidParameter(format!(
            "unknown figure {:?} (expected fig1 | fig2 | fig3)",
            other
        ))),
    }
}

/// Dispatch a parsed invocation; the error carries the exit code.
pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Construct(a) => run_construct(a),
        Command::Rigidity(a) => run_rigidity(a),
        Command::Rpca(a) => run_rpca(a),
        Command::Mc(a) => run_mc(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Diagnose(a) => run_diagnose(a),
        Command::EpsilonStudy(a) => run_epsilon_study(a),
        Command::Repro(a) => run_repro(a),
        Command::MinSize(a) => run_min_size(a),
    }
}
