//! Command-line frontend: spec validation, spectral/measure/kernel queries,
//! the identity suite, and the transform-level checks, all emitting CSV with
//! `#`-prefixed metadata lines. Exit codes: 0 on success, 1 when a check
//! exceeds its tolerance, 2 on malformed input.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::frequency::{integrate_mu_j, FrequencyPoint};
use crate::group::GroupSpec;
use crate::hermite::{
    gauss_hermite_rule, gauss_legendre_rule, ladder_apply, rescaled_hermite_eval, CoeffVector,
    LadderKind,
};
use crate::kernel::{identity_suite, kernel_k, kernel_w_symmetric, KMethod, KernelPoint1D, WMethod};
use crate::spectral::{rank_at, spectral_decompose};
use crate::transform::{
    boundary_mass, central_limit_check, convolution_check, fourier_operator_matrix,
    kappa_heisenberg, plancherel_check, smooth_bump, DecayClass, QuadSet, SampledFunction,
};
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "nilfourier",
    version,
    about = "Fourier analysis on 2-step nilpotent Lie groups",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Built-in group name ("heisenberg:d", "example-4x2") or a JSON spec path
    #[arg(long, default_value = "heisenberg:1")]
    group: String,
    /// Write CSV to this path instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed for sampled checks
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Group-spec file utilities
    Spec {
        #[command(subcommand)]
        action: SpecAction,
    },
    /// Spectral data of U^(λ): frequencies, rank, Pfaffian
    Spectral {
        #[command(flatten)]
        common: Common,
        /// λ vector as comma-separated values; repeatable
        #[arg(long, required = true)]
        lambda: Vec<String>,
    },
    /// Hermite-function utilities
    Hermite {
        #[command(subcommand)]
        action: HermiteAction,
    },
    /// One-coordinate dμ integral of e^{−a} over the comb/half-line
    Measure {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 0)]
        b: i64,
        #[arg(long, default_value_t = 60.0)]
        a_max: f64,
    },
    /// Evaluate the Fourier kernel 𝒲 (η > 0) or the boundary kernel 𝒦 (η = 0)
    Kernel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 0)]
        b: i64,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        /// Fail (exit 1) when the cross-method error estimate exceeds this
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Run all boundary-kernel identities on seeded random samples
    IdentitySuite {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 24)]
        samples: usize,
    },
    /// Operator matrix of the Gaussian e^{−cz|Z|²}e^{−cs|s|²} at one λ
    Transform {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 6)]
        nmax: usize,
        #[arg(long, default_value_t = 0.25)]
        cz: f64,
        #[arg(long, default_value_t = 0.5)]
        cs: f64,
        /// Fail (exit 1) when the truncation-box boundary mass exceeds this
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Plancherel ratio for the same Gaussian family
    Plancherel {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 12)]
        nmax: usize,
        /// λ-grid size (Gauss–Legendre on [−lbox, lbox])
        #[arg(long, default_value_t = 80)]
        grid: usize,
        #[arg(long, default_value_t = 6.0)]
        lbox: f64,
        #[arg(long, default_value_t = 0.25)]
        cz: f64,
        #[arg(long, default_value_t = 0.5)]
        cs: f64,
        /// Normalization constant κ; defaults to 2^{d−1}/π^{d+1}
        #[arg(long)]
        kappa: Option<f64>,
        /// Fail (exit 1) when |ratio − 1| exceeds this
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Boundary central-limit pairing vs the 2π·⟨dμ^0, θ𝒢⟩ target
    CentralLimit {
        #[command(flatten)]
        common: Common,
        /// Window widths, comma-separated, decreasing
        #[arg(long, default_value = "0.4,0.2")]
        eps: String,
        /// Centre of the Gaussian factor in the test symbol θ
        #[arg(long, default_value_t = 0.45)]
        a0: f64,
        #[arg(long, default_value_t = 1)]
        b_range: i64,
        #[arg(long, default_value_t = 6.0)]
        a_max: f64,
        #[arg(long, default_value_t = 10)]
        n_half: usize,
        /// Fail (exit 1) when the final relative gap exceeds this
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
    },
    /// Convolution theorem: ℱ(f1 ∗ f2) vs ℱ(f1)·ℱ(f2) for a Gaussian pair
    ConvolutionCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 8)]
        nmax: usize,
        #[arg(long, default_value_t = 0.25)]
        cz1: f64,
        #[arg(long, default_value_t = 0.5)]
        cs1: f64,
        #[arg(long, default_value_t = 0.4)]
        cz2: f64,
        #[arg(long, default_value_t = 0.8)]
        cs2: f64,
        /// Fail (exit 1) when the Frobenius error exceeds this
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum SpecAction {
    /// Parse and validate a JSON group spec; exit 2 with a diagnostic on failure
    Validate {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum HermiteAction {
    /// Evaluate the rescaled Hermite function H_{n,η}(x)
    Eval {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Orthonormality and ladder-identity residuals up to nmax
    Check {
        #[arg(long, default_value_t = 16)]
        nmax: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    Direct,
    Series,
    Integral,
    Polar,
}

impl MethodArg {
    fn label(self) -> &'static str {
        match self {
            MethodArg::Auto => "auto",
            MethodArg::Direct => "direct",
            MethodArg::Series => "series",
            MethodArg::Integral => "integral",
            MethodArg::Polar => "polar",
        }
    }
}

/// Parse `argv` and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // clap prints help/version on stdout with code 0, errors with 2
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Spec { action } => run_spec(action),
        Command::Spectral { common, lambda } => run_spectral(common, lambda),
        Command::Hermite { action } => run_hermite(action),
        Command::Measure { common, eta, b, a_max } => run_measure(common, eta, b, a_max),
        Command::Kernel { common, a, b, eta, x, y, method, tol } => {
            run_kernel(common, a, b, eta, x, y, method, tol)
        }
        Command::IdentitySuite { common, samples } => run_identity_suite(common, samples),
        Command::Transform { common, lambda, nmax, cz, cs, tol } => {
            run_transform(common, lambda, nmax, cz, cs, tol)
        }
        Command::Plancherel { common, nmax, grid, lbox, cz, cs, kappa, tol } => {
            run_plancherel(common, nmax, grid, lbox, cz, cs, kappa, tol)
        }
        Command::CentralLimit { common, eps, a0, b_range, a_max, n_half, tol } => {
            run_central_limit(common, eps, a0, b_range, a_max, n_half, tol)
        }
        Command::ConvolutionCheck { common, lambda, nmax, cz1, cs1, cz2, cs2, tol } => {
            run_convolution_check(common, lambda, nmax, cz1, cs1, cz2, cs2, tol)
        }
    }
}

// ---------------------------------------------------------------------------
// output plumbing
// ---------------------------------------------------------------------------

struct Csv {
    buf: String,
    out: Option<PathBuf>,
}

impl Csv {
    fn new(out: Option<PathBuf>) -> Self {
        Csv { buf: String::new(), out }
    }

    fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.buf, "# {key}={value}");
    }

    fn group_meta(&mut self, g: &GroupSpec) {
        self.meta("group", g.name().unwrap_or("custom"));
        self.meta("group-hash", format_args!("{:#018x}", g.content_hash()));
    }

    fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.buf, "{}", cells.join(","));
    }

    fn header(&mut self, cols: &[&str]) {
        let _ = writeln!(self.buf, "{}", cols.join(","));
    }

    fn finish(self) -> Result<()> {
        match self.out {
            Some(path) => std::fs::write(path, self.buf)?,
            None => {
                use std::io::Write;
                std::io::stdout().write_all(self.buf.as_bytes())?;
            }
        }
        Ok(())
    }
}

fn fnum(v: f64) -> String {
    format!("{v:.17e}")
}

fn load_group(arg: &str) -> Result<GroupSpec> {
    if arg.contains(':') || arg == "example-4x2" {
        return GroupSpec::by_name(arg);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| Error::Invalid(format!("cannot read group spec '{arg}': {e}")))?;
    GroupSpec::from_json(&text)
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Invalid(format!("bad number '{t}' in list '{text}'")))
        })
        .collect()
}

fn exit_code(failed: bool) -> i32 {
    if failed {
        1
    } else {
        0
    }
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

fn run_spec(action: SpecAction) -> Result<i32> {
    let SpecAction::Validate { file, out } = action;
    let text = std::fs::read_to_string(&file)
        .map_err(|e| Error::Invalid(format!("cannot read '{}': {e}", file.display())))?;
    match GroupSpec::from_json(&text) {
        Ok(g) => {
            let mut csv = Csv::new(out);
            csv.meta("subcommand", "spec-validate");
            csv.group_meta(&g);
            csv.header(&["m", "p", "name", "valid"]);
            csv.row(&[
                g.m.to_string(),
                g.p.to_string(),
                g.name().unwrap_or("custom").to_string(),
                "true".to_string(),
            ]);
            csv.finish()?;
            Ok(0)
        }
        Err(e) => {
            eprintln!("error: invalid group spec {}: {e}", file.display());
            Ok(2)
        }
    }
}

fn run_spectral(common: Common, lambda: Vec<String>) -> Result<i32> {
    let g = load_group(&common.group)?;
    let dmax = g.m / 2;
    let mut csv = Csv::new(common.out);
    csv.meta("subcommand", "spectral");
    csv.group_meta(&g);
    let mut cols: Vec<String> = (1..=g.p).map(|k| format!("lambda_{k}")).collect();
    cols.extend((1..=dmax).map(|j| format!("eta_{j}")));
    cols.push("rank".into());
    cols.push("pfaffian".into());
    csv.header(&cols.iter().map(String::as_str).collect::<Vec<_>>());
    for spec_text in &lambda {
        let lam = parse_f64_list(spec_text)?;
        if lam.len() != g.p {
            return Err(Error::Dimension(format!(
                "lambda '{spec_text}' has {} entries, group has p = {}",
                lam.len(),
                g.p
            )));
        }
        let rank = rank_at(&g, &lam, 1e-10)?;
        let mut etas = vec![0.0f64; dmax];
        let mut pf = 0.0f64;
        if rank > 0 {
            let spec = spectral_decompose(&g, &lam, rank / 2, 1e-10)?;
            etas[..spec.d].copy_from_slice(&spec.eta);
            pf = spec.pfaffian;
        }
        let mut cells: Vec<String> = lam.iter().copied().map(fnum).collect();
        cells.extend(etas.iter().copied().map(fnum));
        cells.push(rank.to_string());
        cells.push(fnum(pf));
        csv.row(&cells);
    }
    csv.finish()?;
    Ok(0)
}

fn run_hermite(action: HermiteAction) -> Result<i32> {
    match action {
        HermiteAction::Eval { n, eta, x, out } => {
            let v = rescaled_hermite_eval(n, eta, x)?;
            let mut csv = Csv::new(out);
            csv.meta("subcommand", "hermite-eval");
            csv.header(&["n", "eta", "x", "value"]);
            csv.row(&[n.to_string(), fnum(eta), fnum(x), fnum(v)]);
            csv.finish()?;
            Ok(0)
        }
        HermiteAction::Check { nmax, tol, out } => {
            // n + 1 Gauss–Hermite nodes are exact for ψ_nψ_m, n, m ≤ nmax
            let rule = gauss_hermite_rule(nmax + 1)?;
            let mut ortho = 0.0f64;
            for n in 0..=nmax {
                for m in n..=nmax {
                    let v = rule.integrate(|x| {
                        Complex64::new(
                            rescaled_hermite_eval(n, 1.0, x).unwrap()
                                * rescaled_hermite_eval(m, 1.0, x).unwrap(),
                            0.0,
                        )
                    });
                    let expect = if n == m { 1.0 } else { 0.0 };
                    ortho = ortho.max((v.re - expect).abs().max(v.im.abs()));
                }
            }
            // (CA + Id)H_n = (2n+1)H_n, exact in coefficients
            let mut ladder = 0.0f64;
            for n in 0..=nmax {
                let hn = CoeffVector::basis(n);
                let mut v = ladder_apply(LadderKind::Create, &ladder_apply(LadderKind::Annihilate, &hn));
                while v.coeffs.len() < n + 1 {
                    v.coeffs.push(Complex64::ZERO);
                }
                v.coeffs[n] += Complex64::ONE;
                for (k, c) in v.coeffs.iter().enumerate() {
                    let expect = if k == n { (2 * n + 1) as f64 } else { 0.0 };
                    ladder = ladder.max((c - Complex64::new(expect, 0.0)).norm());
                }
            }
            let mut csv = Csv::new(out);
            csv.meta("subcommand", "hermite-check");
            csv.meta("nmax", nmax);
            csv.meta("tol", fnum(tol));
            csv.header(&["check", "residual", "tol", "pass"]);
            let mut failed = false;
            for (name, residual) in [("orthonormality", ortho), ("ladder_identity", ladder)] {
                let pass = residual <= tol;
                failed |= !pass;
                csv.row(&[name.to_string(), fnum(residual), fnum(tol), pass.to_string()]);
            }
            csv.finish()?;
            Ok(exit_code(failed))
        }
    }
}

fn run_measure(common: Common, eta: f64, b: i64, a_max: f64) -> Result<i32> {
    let g = load_group(&common.group)?;
    let mut theta = |a: f64| Complex64::new((-a).exp(), 0.0);
    let (value, trunc) = integrate_mu_j(&mut theta, eta, b, a_max)?;
    let mut csv = Csv::new(common.out);
    csv.meta("subcommand", "measure");
    csv.group_meta(&g);
    csv.meta("integrand", "exp(-a)");
    csv.header(&["eta", "b", "a_max", "value_re", "value_im", "truncation_estimate"]);
    csv.row(&[fnum(eta), b.to_string(), fnum(a_max), fnum(value.re), fnum(value.im), fnum(trunc)]);
    csv.finish()?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn run_kernel(
    common: Common,
    a: f64,
    b: i64,
    eta: f64,
    x: f64,
    y: f64,
    method: MethodArg,
    tol: f64,
) -> Result<i32> {
    let (value, error_estimate, label) = if eta > 0.0 {
        let pt = KernelPoint1D { a, b, eta, x, y };
        pt.indices()?; // validates lattice membership
        let wm = match method {
            MethodArg::Auto | MethodArg::Direct => WMethod::Direct,
            MethodArg::Series => WMethod::Series,
            _ => {
                return Err(Error::Invalid(format!(
                    "method '{}' applies to the boundary kernel (eta = 0)",
                    method.label()
                )))
            }
        };
        let v = kernel_w_symmetric(&pt, wm, 1e-12)?;
        let alt = match wm {
            WMethod::Direct => kernel_w_symmetric(&pt, WMethod::Series, 1e-12)?,
            WMethod::Series => kernel_w_symmetric(&pt, WMethod::Direct, 1e-12)?,
        };
        let label = if matches!(wm, WMethod::Direct) { "direct" } else { "series" };
        (v, (v - alt).norm(), label)
    } else if eta == 0.0 {
        let km = match method {
            MethodArg::Auto | MethodArg::Polar => KMethod::Polar,
            MethodArg::Series => KMethod::Series,
            MethodArg::Integral => KMethod::Integral,
            MethodArg::Direct => {
                return Err(Error::Invalid(
                    "method 'direct' applies to the lattice kernel (eta > 0)".into(),
                ))
            }
        };
        let v = kernel_k(a, x, y, b, km, 1e-12)?;
        let alt_m = if matches!(km, KMethod::Polar) { KMethod::Integral } else { KMethod::Polar };
        let alt = kernel_k(a, x, y, b, alt_m, 1e-12)?;
        let label = match km {
            KMethod::Polar => "polar",
            KMethod::Series => "series",
            KMethod::Integral => "integral",
        };
        (v, (v - alt).norm(), label)
    } else {
        return Err(Error::Invalid(format!("eta must be nonnegative, got {eta}")));
    };
    let mut csv = Csv::new(common.out);
    csv.meta("subcommand", "kernel");
    csv.meta("tol", fnum(tol));
    csv.header(&["a", "b", "eta", "x", "y", "value_re", "value_im", "method", "error_estimate"]);
    csv.row(&[
        fnum(a),
        b.to_string(),
        fnum(eta),
        fnum(x),
        fnum(y),
        fnum(value.re),
        fnum(value.im),
        label.to_string(),
        fnum(error_estimate),
    ]);
    csv.finish()?;
    Ok(exit_code(error_estimate > tol))
}

fn run_identity_suite(common: Common, samples: usize) -> Result<i32> {
    let g = load_group(&common.group)?;
    if g.name() != Some("heisenberg:1") {
        return Err(Error::Invalid(
            "the identity suite runs on the 1-dimensional kernel: use --group heisenberg:1".into(),
        ));
    }
    let results = identity_suite(common.seed, samples)?;
    let mut csv = Csv::new(common.out);
    csv.meta("subcommand", "identity-suite");
    csv.group_meta(&g);
    csv.meta("seed", common.seed);
    csv.meta("samples", samples);
    csv.header(&["identity", "residual", "tol", "pass"]);
    let mut failed = false;
    for r in &results {
        failed |= !r.passed();
        csv.row(&[r.name.to_string(), fnum(r.residual), fnum(r.tol), r.passed().to_string()]);
    }
    csv.finish()?;
    Ok(exit_code(failed))
}

fn gaussian_fn(cz: f64, cs: f64) -> SampledFunction {
    SampledFunction::separable(
        move |z: &[f64]| Complex64::new((-cz * z.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0),
        move |s: &[f64]| Complex64::new((-cs * s.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0),
        DecayClass::SchwartzLike,
    )
}

fn run_transform(
    common: Common,
    lambda: f64,
    nmax: usize,
    cz: f64,
    cs: f64,
    tol: f64,
) -> Result<i32> {
    let g = load_group(&common.group)?;
    if g.p != 1 {
        return Err(Error::Invalid("transform CLI supports p = 1 groups".into()));
    }
    let spec = spectral_decompose(&g, &[lambda], g.m / 2, 1e-10)?;
    let quad = QuadSet::standard()?;
    let f = gaussian_fn(cz, cs);
    let mat = fourier_operator_matrix(&g, &spec, &f, nmax, &quad)?;
    let bmass = boundary_mass(&g, &f, &quad);
    let mut csv = Csv::new(common.out);
    csv.meta("subcommand", "transform");
    csv.group_meta(&g);
    csv.meta("lambda", fnum(lambda));
    csv.meta("cz", fnum(cz));
    csv.meta("cs", fnum(cs));
    csv.meta("tol", fnum(tol));
    csv.header(&["n", "m", "value_re", "value_im", "error_estimate"]);
    let dim = mat.dim();
    for n in 0..dim {
        for m in 0..dim {
            let v = mat.entries[(n, m)];
            csv.row(&[n.to_string(), m.to_string(), fnum(v.re), fnum(v.im), fnum(bmass)]);
        }
    }
    csv.finish()?;
    Ok(exit_code(bmass > tol))
}

#[allow(clippy::too_many_arguments)]
fn run_plancherel(
    common: Common,
    nmax: usize,
    grid: usize,
    lbox: f64,
    cz: f64,
    cs: f64,
    kappa: Option<f64>,
    tol: f64,
) -> Result<i32> {
    let g = load_group(&common.group)?;
    if g.p != 1 || g.m != 2 {
        return Err(Error::Invalid("plancherel CLI supports heisenberg:1".into()));
    }
    let kappa = kappa.unwrap_or_else(|| kappa_heisenberg(g.m / 2));
    let rule = gauss_legendre_rule(grid, -lbox, lbox)?;
    let quad = QuadSet::standard()?;
    let f = gaussian_fn(cz, cs);
    let rep = plancherel_check(&g, &f, &rule, nmax, &quad, kappa)?;
    let mut csv = Csv::new(common.out);
    csv.meta("subcommand", "plancherel");
    csv.group_meta(&g);
    csv.meta("nmax", nmax);
    csv.meta("grid", grid);
    csv.meta("tol", fnum(tol));
    csv.header(&[
        "cz",
        "cs",
        "lhs",
        "rhs",
        "ratio",
        "kappa",
        "kappa_empirical",
        "lambda_tail",
        "hs_tail",
    ]);
    csv.row(&[
        fnum(cz),
        fnum(cs),
        fnum(rep.lhs),
        fnum(rep.rhs),
        fnum(rep.ratio),
        fnum(rep.kappa),
        fnum(rep.kappa_empirical),
        fnum(rep.lambda_tail),
        fnum(rep.hs_tail),
    ]);
    csv.finish()?;
    Ok(exit_code(!((rep.ratio - 1.0).abs() <= tol)))
}

#[allow(clippy::too_many_arguments)]
fn run_central_limit(
    common: Common,
    eps: String,
    a0: f64,
    b_range: i64,
    a_max: f64,
    n_half: usize,
    tol: f64,
) -> Result<i32> {
    let g = load_group(&common.group)?;
    let eps_list = parse_f64_list(&eps)?;
    if eps_list.is_empty() {
        return Err(Error::Invalid("need at least one eps".into()));
    }
    let zrule = gauss_legendre_rule(48, -8.0, 8.0)?;
    let fz =
        |z: &[f64]| Complex64::new((-z.iter().map(|v| v * v).sum::<f64>() / 4.0).exp(), 0.0);
    let bump_scale = a_max;
    let theta = move |pt: &FrequencyPoint| {
        let a = pt.a[0];
        Complex64::new(
            smooth_bump(a / bump_scale)
                * (-(a - a0) * (a - a0)).exp()
                * (-pt.lambda[0] * pt.lambda[0]).exp(),
            0.0,
        )
    };
    let rep = central_limit_check(&g, &fz, &theta, 0.0, &eps_list, b_range, a_max, &zrule, n_half)?;
    let mut csv = Csv::new(common.out);
    csv.meta("subcommand", "central-limit");
    csv.group_meta(&g);
    csv.meta("a0", fnum(a0));
    csv.meta("tol", fnum(tol));
    csv.header(&["eps", "pairing_re", "pairing_im", "target_re", "target_im", "rel_err"]);
    for (i, &e) in rep.eps.iter().enumerate() {
        csv.row(&[
            fnum(e),
            fnum(rep.pairing[i].re),
            fnum(rep.pairing[i].im),
            fnum(rep.target.re),
            fnum(rep.target.im),
            fnum(rep.rel_err[i]),
        ]);
    }
    csv.finish()?;
    let last = *rep.rel_err.last().unwrap();
    Ok(exit_code(!(last <= tol)))
}

#[allow(clippy::too_many_arguments)]
fn run_convolution_check(
    common: Common,
    lambda: f64,
    nmax: usize,
    cz1: f64,
    cs1: f64,
    cz2: f64,
    cs2: f64,
    tol: f64,
) -> Result<i32> {
    let g = load_group(&common.group)?;
    let quad = QuadSet::standard()?;
    let f1 = gaussian_fn(cz1, cs1);
    let f2 = gaussian_fn(cz2, cs2);
    let rep = convolution_check(&g, &f1, &f2, lambda, nmax, &quad)?;
    let mut csv = Csv::new(common.out);
    csv.meta("subcommand", "convolution-check");
    csv.group_meta(&g);
    csv.meta("tol", fnum(tol));
    csv.header(&[
        "lambda",
        "nmax",
        "frobenius_error",
        "product_norm",
        "rel_error",
        "spot_consistency",
    ]);
    csv.row(&[
        fnum(lambda),
        nmax.to_string(),
        fnum(rep.frobenius_error),
        fnum(rep.product_norm),
        fnum(rep.rel_error),
        fnum(rep.spot_consistency),
    ]);
    csv.finish()?;
    Ok(exit_code(!(rep.frobenius_error <= tol)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("nilfourier-cli-{}-{name}", std::process::id()));
        p
    }

    fn run_args(args: &[&str]) -> i32 {
        run(std::iter::once("nilfourier").chain(args.iter().copied()))
    }

    #[test]
    fn kernel_bessel_oracle_row() {
        let out = tmp("kernel.csv");
        let code = run_args(&[
            "kernel", "--a", "1", "--b", "0", "--eta", "0", "--x", "0", "--y", "1", "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(&out).unwrap();
        let data = text.lines().last().unwrap();
        let value: f64 = data.split(',').nth(5).unwrap().parse().unwrap();
        assert!((value - 0.7651976865579666).abs() < 1e-7, "J_0(1) row, got {value}");
        std::fs::remove_file(out).ok();
    }

    #[test]
    fn identity_suite_emits_eight_rows() {
        let out = tmp("suite.csv");
        let code =
            run_args(&["identity-suite", "--samples", "8", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(&out).unwrap();
        let rows = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, 9, "header + 8 identities");
        std::fs::remove_file(out).ok();
    }

    #[test]
    fn spec_validate_rejects_symmetric_matrix() {
        let bad = tmp("bad.json");
        std::fs::write(&bad, r#"{"m":2,"p":1,"matrices":[[[0,1],[1,0]]]}"#).unwrap();
        let code = run_args(&["spec", "validate", bad.to_str().unwrap()]);
        assert_eq!(code, 2);
        let good = tmp("good.json");
        std::fs::write(&good, r#"{"builtin":"heisenberg","d":2}"#).unwrap();
        let out = tmp("spec.csv");
        let code = run_args(&[
            "spec", "validate", good.to_str().unwrap(), "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.lines().last().unwrap().starts_with("4,1,heisenberg:2,true"));
        for p in [bad, good, out] {
            std::fs::remove_file(p).ok();
        }
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let (o1, o2) = (tmp("det1.csv"), tmp("det2.csv"));
        for o in [&o1, &o2] {
            let code = run_args(&[
                "transform", "--lambda", "0.8", "--nmax", "3", "--out", o.to_str().unwrap(),
            ]);
            assert_eq!(code, 0);
        }
        assert_eq!(std::fs::read(&o1).unwrap(), std::fs::read(&o2).unwrap());
        std::fs::remove_file(o1).ok();
        std::fs::remove_file(o2).ok();
    }

    #[test]
    fn malformed_flags_exit_two() {
        assert_eq!(run_args(&["kernel", "--a", "not-a-number"]), 2);
        assert_eq!(run_args(&["no-such-subcommand"]), 2);
    }

    #[test]
    fn measure_matches_geometric_series_oracle() {
        let out = tmp("measure.csv");
        let code = run_args(&["measure", "--eta", "1", "--b", "0", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(&out).unwrap();
        let value: f64 =
            text.lines().last().unwrap().split(',').nth(3).unwrap().parse().unwrap();
        assert!((value - 2.0 / (1.0 - (-2.0f64).exp())).abs() < 1e-12, "got {value}");
        std::fs::remove_file(out).ok();
    }
}
