//! The group Fourier transform ℱ_g on sampled functions, operator matrices in
//! the Hermite basis, group convolution, the central-variable-independent
//! transform 𝒢_g^λ, the ε→0 Dirac/central-limit pairings, and the Plancherel
//! and sublaplacian diagonalization checks.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frequency::{inner_mu_integral, CoordClass, FrequencyPoint};
use crate::group::{GroupElement, GroupSpec};
use crate::hermite::{gauss_hermite_cached, gauss_legendre_rule, PsiBlock, QuadratureRule};
use crate::kernel::{bessel_j, kernel_w_symmetric, KernelPoint1D, WMethod};
use crate::spectral::{spectral_decompose, SpectralData};

const LN_2: f64 = std::f64::consts::LN_2;
const PI: f64 = std::f64::consts::PI;

// ---------------------------------------------------------------------------
// sampled functions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayClass {
    SchwartzLike,
    Compact,
}

type EvalFn = dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync;
type ZFn = dyn Fn(&[f64]) -> Complex64 + Send + Sync;

/// A function on ℝ^m × ℝ^p given by an evaluation callable, with a declared
/// decay class and an optional separable structure f(Z,s) = f_Z(Z)·α(s).
#[derive(Clone)]
pub struct SampledFunction {
    eval: Arc<EvalFn>,
    pub decay: DecayClass,
    separable: Option<(Arc<ZFn>, Arc<ZFn>)>,
}

impl SampledFunction {
    pub fn new<F>(eval: F, decay: DecayClass) -> Self
    where
        F: Fn(&[f64], &[f64]) -> Complex64 + Send + Sync + 'static,
    {
        SampledFunction { eval: Arc::new(eval), decay, separable: None }
    }

    /// f(Z,s) = f_Z(Z)·α(s); both factors are kept so the scalar s-transform
    /// can be factored out.
    pub fn separable<FZ, FS>(fz: FZ, alpha: FS, decay: DecayClass) -> Self
    where
        FZ: Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
        FS: Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    {
        let fz: Arc<ZFn> = Arc::new(fz);
        let alpha: Arc<ZFn> = Arc::new(alpha);
        let (fz2, al2) = (fz.clone(), alpha.clone());
        SampledFunction {
            eval: Arc::new(move |z: &[f64], s: &[f64]| fz2(z) * al2(s)),
            decay,
            separable: Some((fz, alpha)),
        }
    }

    pub fn zero() -> Self {
        SampledFunction::separable(
            |_| Complex64::ZERO,
            |_| Complex64::ZERO,
            DecayClass::Compact,
        )
    }

    #[inline]
    pub fn at(&self, z: &[f64], s: &[f64]) -> Complex64 {
        (self.eval)(z, s)
    }

    pub fn is_separable(&self) -> bool {
        self.separable.is_some()
    }
}

/// Quadrature rules for the Z-box and the central s-box.
#[derive(Debug, Clone)]
pub struct QuadSet {
    pub z: QuadratureRule,
    pub s: QuadratureRule,
}

impl QuadSet {
    /// Default truncation: 64-node Gauss–Legendre on [−8,8] per Z coordinate
    /// and on [−10,10] per central coordinate.
    pub fn standard() -> Result<Self> {
        QuadSet::with_sizes(64, 8.0, 64, 10.0)
    }

    pub fn with_sizes(nz: usize, zbox: f64, ns: usize, sbox: f64) -> Result<Self> {
        Ok(QuadSet {
            z: gauss_legendre_rule(nz, -zbox, zbox)?,
            s: gauss_legendre_rule(ns, -sbox, sbox)?,
        })
    }
}

/// Visit the full tensor grid of `rule` over `dims` coordinates in a fixed
/// (first-coordinate-fastest) order.
fn for_each_tensor<F: FnMut(&[f64], f64)>(rule: &QuadratureRule, dims: usize, mut f: F) {
    let n = rule.len();
    let total = n.pow(dims as u32);
    let mut coords = vec![0.0; dims];
    for flat in 0..total {
        let mut rem = flat;
        let mut w = 1.0;
        for c in coords.iter_mut() {
            let i = rem % n;
            rem /= n;
            *c = rule.nodes[i];
            w *= rule.weights[i];
        }
        f(&coords, w);
    }
}

/// ∫ α(s) e^{−i⟨λ,s⟩} ds over the s-box.
fn alpha_hat(alpha: &ZFn, lambda: &[f64], srule: &QuadratureRule) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for_each_tensor(srule, lambda.len(), |s, w| {
        let phase: f64 = lambda.iter().zip(s).map(|(l, si)| l * si).sum();
        acc += alpha(s) * Complex64::new(0.0, -phase).exp() * w;
    });
    acc
}

/// ∫ f(Z,s) e^{−i⟨λ,s⟩} ds at fixed Z.
fn s_reduced(f: &SampledFunction, lambda: &[f64], z: &[f64], srule: &QuadratureRule) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for_each_tensor(srule, lambda.len(), |s, w| {
        let phase: f64 = lambda.iter().zip(s).map(|(l, si)| l * si).sum();
        acc += f.at(z, s) * Complex64::new(0.0, -phase).exp() * w;
    });
    acc
}

fn check_full_rank(g: &GroupSpec, spectral: &SpectralData) -> Result<()> {
    if 2 * spectral.d != g.m {
        return Err(Error::Invalid(format!(
            "transform requires a full-rank λ layer (m = 2d), got m = {}, d = {}",
            g.m, spectral.d
        )));
    }
    if spectral.eta.iter().any(|&e| e <= 0.0) {
        return Err(Error::Invalid("transform requires a regular λ (all η_j > 0)".into()));
    }
    Ok(())
}

/// Π_j conj(𝒲(n_j, m_j, η_j, x_j, y_j)) at adapted coordinates zad.
fn conj_w_product(spectral: &SpectralData, n: &[usize], m: &[usize], zad: &[f64]) -> Result<Complex64> {
    let d = spectral.d;
    let mut out = Complex64::ONE;
    for j in 0..d {
        let pt = KernelPoint1D {
            a: spectral.eta[j] * (n[j] + m[j]) as f64,
            b: m[j] as i64 - n[j] as i64,
            eta: spectral.eta[j],
            x: zad[j],
            y: zad[d + j],
        };
        out *= kernel_w_symmetric(&pt, WMethod::Direct, 1e-12)?.conj();
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Fourier coefficients and operator matrices
// ---------------------------------------------------------------------------

/// ℱ_g(f)(n,m,λ) = ∫ f(Z,s) e^{−i⟨λ,s⟩} conj(𝒲(n,m,λ,Z)) dZ ds, with the
/// Z-integral taken in the adapted (orthonormal) coordinates of `spectral`.
pub fn fourier_coeff(
    g: &GroupSpec,
    spectral: &SpectralData,
    f: &SampledFunction,
    n: &[usize],
    m: &[usize],
    quad: &QuadSet,
) -> Result<Complex64> {
    check_full_rank(g, spectral)?;
    let d = spectral.d;
    if n.len() != d || m.len() != d {
        return Err(Error::Dimension(format!("multi-indices must have length d = {d}")));
    }
    let lambda = spectral.lambda.clone();
    let mut acc = Complex64::ZERO;
    let mut mass = 0.0f64;
    let mut shell = 0.0f64;
    let box_edge = quad.z.nodes.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    // the scalar s-transform factors out for separable f
    let ahat = f
        .separable
        .as_ref()
        .map(|(_, alpha)| alpha_hat(alpha.as_ref(), &lambda, &quad.s));
    let mut worst: Option<Error> = None;
    for_each_tensor(&quad.z, 2 * d, |zad, w| {
        if worst.is_some() {
            return;
        }
        let zorig = spectral.from_adapted(&DVector::from_column_slice(zad));
        let gz = match (&f.separable, &ahat) {
            (Some((fz, _)), Some(a)) => fz(zorig.as_slice()) * a,
            _ => s_reduced(f, &lambda, zorig.as_slice(), &quad.s),
        };
        let wv = match conj_w_product(spectral, n, m, zad) {
            Ok(v) => v,
            Err(e) => {
                worst = Some(e);
                return;
            }
        };
        let term = gz * wv * w;
        acc += term;
        mass += term.norm();
        if zad.iter().any(|&c| c.abs() > 0.9 * box_edge) {
            shell += term.norm();
        }
    });
    if let Some(e) = worst {
        return Err(e);
    }
    if shell > 1e-4 * mass + 1e-9 {
        return Err(Error::Unreachable {
            what: format!("Z-box boundary mass {shell:.3e} of total {mass:.3e}"),
            tol: 1e-4,
        });
    }
    Ok(acc)
}

/// Matrix ℱ^g(f)(λ) of Fourier coefficients over Hermite multi-indices
/// n, m ≤ N_max per coordinate, flattened row-major (n-major).
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub lambda: Vec<f64>,
    pub n_max: usize,
    pub d: usize,
    pub entries: DMatrix<Complex64>,
}

fn flat_index(idx: &[usize], n_max: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * (n_max + 1) + i)
}

fn unflatten(mut flat: usize, d: usize, n_max: usize) -> Vec<usize> {
    let mut idx = vec![0usize; d];
    for j in (0..d).rev() {
        idx[j] = flat % (n_max + 1);
        flat /= n_max + 1;
    }
    idx
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        (self.n_max + 1).pow(self.d as u32)
    }

    pub fn entry(&self, n: &[usize], m: &[usize]) -> Complex64 {
        self.entries[(flat_index(n, self.n_max), flat_index(m, self.n_max))]
    }

    pub fn hs_norm_sqr(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum()
    }

    pub fn frobenius_distance(&self, other: &OperatorMatrix) -> f64 {
        (&self.entries - &other.entries)
            .iter()
            .map(|e| e.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest singular value by power iteration on AᴴA (deterministic start).
    pub fn op_norm(&self) -> f64 {
        let a = &self.entries;
        let nn = a.ncols();
        if nn == 0 {
            return 0.0;
        }
        let mut x = DVector::from_element(nn, Complex64::new(1.0 / (nn as f64).sqrt(), 0.0));
        let mut sigma2 = 0.0f64;
        for _ in 0..80 {
            let y = a.adjoint() * (a * &x);
            let norm = y.norm();
            if norm == 0.0 {
                return 0.0;
            }
            sigma2 = norm;
            x = y / Complex64::new(norm, 0.0);
        }
        sigma2.sqrt()
    }

    /// Matrix product, matching ℱ^g(f1 ∗ f2) = ℱ^g(f1)·ℱ^g(f2).
    pub fn matmul(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.n_max != other.n_max || self.d != other.d {
            return Err(Error::Dimension("operator matrices of different shape".into()));
        }
        Ok(OperatorMatrix {
            lambda: self.lambda.clone(),
            n_max: self.n_max,
            d: self.d,
            entries: &self.entries * &other.entries,
        })
    }
}

/// Batched evaluation of E[n,m] = ∫ gbar(Z) conj(𝒲(n,m,η,Z)) dZ (d = 1) for
/// a list of (n,m) pairs: the y-integral is folded into
/// C(x,v) = Σ_y w_y gbar(x,y) e^{−i√η v y} once per Gauss–Hermite node v, and
/// the Hermite factors are evaluated blockwise with their scale carried in
/// log₂ form so that large degrees neither overflow nor underflow.
fn operator_entries_1d(
    gbar: &[Complex64],
    zrule: &QuadratureRule,
    eta: f64,
    pairs: &[(usize, usize)],
) -> Result<Vec<Complex64>> {
    if eta <= 0.0 {
        return Err(Error::Invalid("operator entries require η > 0".into()));
    }
    let nz = zrule.len();
    if gbar.len() != nz * nz {
        return Err(Error::Dimension("gbar grid does not match the Z rule".into()));
    }
    let max_n = pairs.iter().map(|p| p.0).max().unwrap_or(0);
    let max_m = pairs.iter().map(|p| p.1).max().unwrap_or(0);
    let nq = ((max_n + max_m) / 2 + 48).max(64);
    let urule = gauss_hermite_cached(nq)?;
    let se = eta.sqrt();
    let mut out = vec![Complex64::ZERO; pairs.len()];
    for (ix, &x) in zrule.nodes.iter().enumerate() {
        let c = se * x / 2.0;
        let wx = zrule.weights[ix];
        let row = &gbar[ix * nz..(ix + 1) * nz];
        for (k, &v) in urule.nodes.iter().enumerate() {
            let mut cv = Complex64::ZERO;
            for (iy, &y) in zrule.nodes.iter().enumerate() {
                cv += row[iy] * zrule.weights[iy] * Complex64::new(0.0, -se * v * y).exp();
            }
            if cv == Complex64::ZERO {
                continue;
            }
            let bp = PsiBlock::new(max_m, v + c);
            let bm = PsiBlock::new(max_n, v - c);
            let base = urule.log_total_weights[k] + (bp.exp2 + bm.exp2) * LN_2;
            let lqp = bp.q.iter().fold(0.0f64, |a, q| a.max(q.abs())).ln();
            let lqm = bm.q.iter().fold(0.0f64, |a, q| a.max(q.abs())).ln();
            if base + lqp + lqm < -745.0 {
                continue;
            }
            if base < 700.0 && lqp + lqm < 700.0 {
                // every product and the weight stay in range
                let cc = cv * (base.exp() * wx);
                for (pi, &(n, m)) in pairs.iter().enumerate() {
                    out[pi] += cc * (bp.q[m] * bm.q[n]);
                }
            } else {
                // the polynomial parts (or the renormalized weight) would
                // overflow pairwise; combine magnitudes in log form
                let cc = cv * wx;
                for (pi, &(n, m)) in pairs.iter().enumerate() {
                    let (qm, qn) = (bp.q[m], bm.q[n]);
                    if qm == 0.0 || qn == 0.0 {
                        continue;
                    }
                    let mag = (base + qm.abs().ln() + qn.abs().ln()).exp();
                    out[pi] += cc * (mag * qm.signum() * qn.signum());
                }
            }
        }
    }
    Ok(out)
}

/// The s-reduced slice ĝ(λ, ·) of f on the adapted Z grid (row-major x, y)
/// together with the separable scalar factor when available.
fn gbar_grid(
    spectral: &SpectralData,
    f: &SampledFunction,
    quad: &QuadSet,
) -> Vec<Complex64> {
    let lambda = &spectral.lambda;
    let nz = quad.z.len();
    let ahat = f
        .separable
        .as_ref()
        .map(|(_, alpha)| alpha_hat(alpha.as_ref(), lambda, &quad.s));
    let mut grid = vec![Complex64::ZERO; nz * nz];
    for (ix, &x) in quad.z.nodes.iter().enumerate() {
        for (iy, &y) in quad.z.nodes.iter().enumerate() {
            let zorig = spectral.from_adapted(&DVector::from_column_slice(&[x, y]));
            grid[ix * nz + iy] = match (&f.separable, &ahat) {
                (Some((fz, _)), Some(a)) => fz(zorig.as_slice()) * a,
                _ => s_reduced(f, lambda, zorig.as_slice(), &quad.s),
            };
        }
    }
    grid
}

/// ℱ^g(f)(λ) for all multi-indices n, m ≤ N_max. For d = 1 the entries come
/// from the batched path; higher d falls back to per-entry quadrature.
pub fn fourier_operator_matrix(
    g: &GroupSpec,
    spectral: &SpectralData,
    f: &SampledFunction,
    n_max: usize,
    quad: &QuadSet,
) -> Result<OperatorMatrix> {
    check_full_rank(g, spectral)?;
    let d = spectral.d;
    let dim = (n_max + 1).pow(d as u32);
    let mut entries = DMatrix::from_element(dim, dim, Complex64::ZERO);
    if d == 1 {
        let gbar = gbar_grid(spectral, f, quad);
        let mut pairs = Vec::with_capacity(dim * dim);
        for n in 0..=n_max {
            for m in 0..=n_max {
                pairs.push((n, m));
            }
        }
        let vals = operator_entries_1d(&gbar, &quad.z, spectral.eta[0], &pairs)?;
        for (k, &(n, m)) in pairs.iter().enumerate() {
            entries[(n, m)] = vals[k];
        }
    } else {
        for rn in 0..dim {
            let n = unflatten(rn, d, n_max);
            for rm in 0..dim {
                let m = unflatten(rm, d, n_max);
                entries[(rn, rm)] = fourier_coeff(g, spectral, f, &n, &m, quad)?;
            }
        }
    }
    if entries.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
        return Err(Error::Invalid("non-finite operator matrix entry".into()));
    }
    Ok(OperatorMatrix { lambda: spectral.lambda.clone(), n_max, d, entries })
}

/// ∫ |f| over the truncation box.
pub fn l1_norm(g: &GroupSpec, f: &SampledFunction, quad: &QuadSet) -> f64 {
    let mut acc = 0.0f64;
    for_each_tensor(&quad.z, g.m, |z, wz| {
        for_each_tensor(&quad.s, g.p, |s, ws| {
            acc += f.at(z, s).norm() * wz * ws;
        });
    });
    acc
}

/// Fraction of ∫|f| carried by the outer 10% shell of the truncation box —
/// the monitor for a too-small box.
pub fn boundary_mass(g: &GroupSpec, f: &SampledFunction, quad: &QuadSet) -> f64 {
    let zedge = quad.z.nodes.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let sedge = quad.s.nodes.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let mut total = 0.0f64;
    let mut shell = 0.0f64;
    for_each_tensor(&quad.z, g.m, |z, wz| {
        let z_out = z.iter().any(|&c| c.abs() > 0.9 * zedge);
        for_each_tensor(&quad.s, g.p, |s, ws| {
            let v = f.at(z, s).norm() * wz * ws;
            total += v;
            if z_out || s.iter().any(|&c| c.abs() > 0.9 * sedge) {
                shell += v;
            }
        });
    });
    if total == 0.0 {
        0.0
    } else {
        shell / total
    }
}

// ---------------------------------------------------------------------------
// group convolution
// ---------------------------------------------------------------------------

/// (f1 ∗ f2)(w) = ∫ f1(w·v⁻¹) f2(v) dv by pointwise quadrature over the
/// truncation box. Each evaluation costs a full tensor-grid sweep, so keep
/// the rules coarse when the result is sampled many times.
pub fn group_convolve(
    g: &GroupSpec,
    f1: &SampledFunction,
    f2: &SampledFunction,
    quad: &QuadSet,
) -> SampledFunction {
    let g = g.clone();
    let f1 = f1.clone();
    let f2 = f2.clone();
    let quad = quad.clone();
    SampledFunction::new(
        move |z: &[f64], s: &[f64]| {
            let w = GroupElement::new(z.to_vec(), s.to_vec());
            let mut acc = Complex64::ZERO;
            for_each_tensor(&quad.z, g.m, |zp, wz| {
                for_each_tensor(&quad.s, g.p, |sp, ws| {
                    let v = GroupElement::new(zp.to_vec(), sp.to_vec());
                    let u = g
                        .multiply(&w, &g.inverse(&v))
                        .expect("dimensions fixed by construction");
                    acc += f1.at(u.z.as_slice(), u.s.as_slice()) * f2.at(zp, sp) * (wz * ws);
                });
            });
            acc
        },
        DecayClass::SchwartzLike,
    )
}

/// Convolution-theorem check at one regular λ (d = 1): Frobenius distance
/// between ℱ^g(f1 ∗ f2) and ℱ^g(f1)·ℱ^g(f2). The s-reduction of f1 ∗ f2 is
/// the λ-twisted convolution of the s-reduced slices (exact Fubini identity),
/// which keeps the left side computable at matrix scale; `spot_consistency`
/// ties that reduction back to direct quadrature of `group_convolve` at a few
/// sample points.
#[derive(Debug, Clone)]
pub struct ConvolutionReport {
    pub frobenius_error: f64,
    pub product_norm: f64,
    pub rel_error: f64,
    pub spot_consistency: f64,
}

pub fn convolution_check(
    g: &GroupSpec,
    f1: &SampledFunction,
    f2: &SampledFunction,
    lambda: f64,
    n_max: usize,
    quad: &QuadSet,
) -> Result<ConvolutionReport> {
    if g.p != 1 {
        return Err(Error::Invalid("convolution check implemented for p = 1".into()));
    }
    let spectral = spectral_decompose(g, &[lambda], g.m / 2, 1e-10)?;
    check_full_rank(g, &spectral)?;
    if spectral.d != 1 {
        return Err(Error::Invalid("convolution check implemented for d = 1".into()));
    }
    let eta = spectral.eta[0];
    let e1 = fourier_operator_matrix(g, &spectral, f1, n_max, quad)?;
    let e2 = fourier_operator_matrix(g, &spectral, f2, n_max, quad)?;
    let product = e1.matmul(&e2)?;

    // s-reduced slices of both factors
    let lamv = [lambda];
    let ahat1 = f1.separable.as_ref().map(|(_, a)| alpha_hat(a.as_ref(), &lamv, &quad.s));
    let f1_lam = |zorig: &[f64]| -> Complex64 {
        match (&f1.separable, &ahat1) {
            (Some((fz, _)), Some(a)) => fz(zorig) * a,
            _ => s_reduced(f1, &lamv, zorig, &quad.s),
        }
    };
    let nz = quad.z.len();
    let mut orig = vec![[0.0f64; 2]; nz * nz];
    let mut f2_lam = vec![Complex64::ZERO; nz * nz];
    let ahat2 = f2.separable.as_ref().map(|(_, a)| alpha_hat(a.as_ref(), &lamv, &quad.s));
    for (ix, &x) in quad.z.nodes.iter().enumerate() {
        for (iy, &y) in quad.z.nodes.iter().enumerate() {
            let zo = spectral.from_adapted(&DVector::from_column_slice(&[x, y]));
            orig[ix * nz + iy] = [zo[0], zo[1]];
            f2_lam[ix * nz + iy] = match (&f2.separable, &ahat2) {
                (Some((fz, _)), Some(a)) => fz(zo.as_slice()) * a,
                _ => s_reduced(f2, &lamv, zo.as_slice(), &quad.s),
            };
        }
    }
    // twisted convolution on the adapted grid:
    //   ĝ₁₂(λ,Z) = Σ_{Z'} w' ĝ₁(λ,Z−Z') ĝ₂(λ,Z') e^{−(i/2)σ_λ(Z−Z',Z')}
    // with σ_λ(Z,Z') = η(x y' − y x') in adapted coordinates.
    let mut gbar12 = vec![Complex64::ZERO; nz * nz];
    for (ix, &x) in quad.z.nodes.iter().enumerate() {
        for (iy, &y) in quad.z.nodes.iter().enumerate() {
            let o = orig[ix * nz + iy];
            let mut acc = Complex64::ZERO;
            for (jx, &xp) in quad.z.nodes.iter().enumerate() {
                let wxp = quad.z.weights[jx];
                for (jy, &yp) in quad.z.nodes.iter().enumerate() {
                    let idx = jx * nz + jy;
                    let op = orig[idx];
                    let diff = [o[0] - op[0], o[1] - op[1]];
                    let twist = eta * ((x - xp) * yp - (y - yp) * xp);
                    acc += f1_lam(&diff)
                        * f2_lam[idx]
                        * Complex64::new(0.0, -0.5 * twist).exp()
                        * (wxp * quad.z.weights[jy]);
                }
            }
            gbar12[ix * nz + iy] = acc;
        }
    }
    let mut pairs = Vec::new();
    for n in 0..=n_max {
        for m in 0..=n_max {
            pairs.push((n, m));
        }
    }
    let vals = operator_entries_1d(&gbar12, &quad.z, eta, &pairs)?;
    let dim = n_max + 1;
    let mut e12 = DMatrix::from_element(dim, dim, Complex64::ZERO);
    for (k, &(n, m)) in pairs.iter().enumerate() {
        e12[(n, m)] = vals[k];
    }
    let frob = (&e12 - &product.entries).iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
    let pnorm = product.entries.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();

    // tie the analytic s-reduction back to direct group_convolve quadrature
    let coarse = QuadSet::with_sizes(24, 6.0, 24, 8.0)?;
    let conv = group_convolve(g, f1, f2, &coarse);
    let samples = [[0.3, -0.5], [0.0, 0.0], [1.1, 0.4], [-0.7, 0.9]];
    let mut spot = 0.0f64;
    for zs in samples {
        let zo = spectral.from_adapted(&DVector::from_column_slice(&zs));
        let direct = s_reduced(&conv, &lamv, zo.as_slice(), &coarse.s);
        let mut twisted = Complex64::ZERO;
        for (jx, &xp) in coarse.z.nodes.iter().enumerate() {
            for (jy, &yp) in coarse.z.nodes.iter().enumerate() {
                let op = spectral.from_adapted(&DVector::from_column_slice(&[xp, yp]));
                let diff = [zo[0] - op[0], zo[1] - op[1]];
                let twist = eta * ((zs[0] - xp) * yp - (zs[1] - yp) * xp);
                let f2v = match (&f2.separable, &ahat2) {
                    (Some((fz, _)), Some(a)) => fz(op.as_slice()) * a,
                    _ => s_reduced(f2, &lamv, op.as_slice(), &coarse.s),
                };
                twisted += f1_lam(&diff)
                    * f2v
                    * Complex64::new(0.0, -0.5 * twist).exp()
                    * (coarse.z.weights[jx] * coarse.z.weights[jy]);
            }
        }
        spot = spot.max((direct - twisted).norm());
    }
    Ok(ConvolutionReport {
        frobenius_error: frob,
        product_norm: pnorm,
        rel_error: if pnorm > 0.0 { frob / pnorm } else { frob },
        spot_consistency: spot,
    })
}

// ---------------------------------------------------------------------------
// the central-variable-independent transform 𝒢_g^λ
// ---------------------------------------------------------------------------

/// 𝒢_g^λ(f)(a,b) = ∫ conj(kernel(a,b,λ,Z)) f(Z) dZ: 𝒲 on regular
/// coordinates, 𝒦 on boundary ones. `fz` takes original Z coordinates; the
/// grid is tensorized in the adapted basis of `spectral`.
pub fn gcal_lambda(
    fz: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    spectral: &SpectralData,
    a: &[f64],
    b: &[i64],
    zrule: &QuadratureRule,
) -> Result<Complex64> {
    let d = spectral.d;
    if a.len() != d || b.len() != d {
        return Err(Error::Dimension(format!("(a,b) must have length d = {d}")));
    }
    // Bessel values depend only on r = |(x_j, y_j)|; cache per coordinate
    let mut jcache: Vec<HashMap<u64, f64>> = vec![HashMap::new(); d];
    let mut acc = Complex64::ZERO;
    let mut err: Option<Error> = None;
    for_each_tensor(zrule, 2 * d, |zad, w| {
        if err.is_some() {
            return;
        }
        let mut kern = Complex64::ONE;
        for j in 0..d {
            let (x, y) = (zad[j], zad[d + j]);
            if spectral.eta[j] > 0.0 {
                let pt = KernelPoint1D { a: a[j], b: b[j], eta: spectral.eta[j], x, y };
                match kernel_w_symmetric(&pt, WMethod::Direct, 1e-12) {
                    Ok(v) => kern *= v.conj(),
                    Err(e) => {
                        err = Some(e);
                        return;
                    }
                }
            } else {
                // 𝒦(a,x,y,b) = e^{i b atan2(y,x)} J_b(√a·r)
                let r = x.hypot(y);
                let jb = *jcache[j]
                    .entry(r.to_bits())
                    .or_insert_with(|| bessel_j(b[j], a[j].sqrt() * r));
                kern *= Complex64::new(0.0, -(b[j] as f64) * y.atan2(x)).exp() * jb;
            }
        }
        let zorig = spectral.from_adapted(&DVector::from_column_slice(zad));
        acc += fz(zorig.as_slice()) * kern * w;
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Dirac and central-limit pairings (p = 1, d = 1)
// ---------------------------------------------------------------------------

/// C_c^∞ bump with value 1 at t = 0, support |t| < 1.
pub fn smooth_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// χ̂ of χ(s) = sinc²(s): the triangle π(1 − |ξ|/2)₊, supported in |ξ| ≤ 2,
/// with ∫χ̂ = 2π.
pub fn triangle_hat(xi: f64) -> f64 {
    (PI * (1.0 - xi.abs() / 2.0)).max(0.0)
}

/// Rescale a reference decomposition at λ = 1 to any λ (valid for p = 1,
/// where U_λ = λ·U₁): η_j(λ) = |λ|η_j(1), with the y-columns of the adapted
/// basis flipped for λ < 0 so the symplectic normalization stays positive.
/// This keeps the basis continuous on each side of λ = 0 — eigensolvers give
/// no such continuity.
fn scaled_spectral(base: &SpectralData, lambda: f64) -> SpectralData {
    let d = base.d;
    let mut basis = base.basis.clone();
    if lambda < 0.0 {
        for j in d..2 * d {
            let col = -basis.column(j);
            basis.set_column(j, &col);
        }
    }
    let eta: Vec<f64> = base.eta.iter().map(|e| e * lambda.abs()).collect();
    let pf: f64 = eta.iter().product();
    SpectralData {
        lambda: vec![lambda],
        eta,
        basis,
        rank: if lambda == 0.0 { 0 } else { base.rank },
        pfaffian: if lambda == 0.0 { 0.0 } else { pf },
        d,
    }
}

fn boundary_spectral(base: &SpectralData) -> SpectralData {
    scaled_spectral(base, 0.0)
}

/// Comb points of g(λ) with a ≤ a_max, |b| ≤ b_range, as Hermite pairs (n,m).
fn comb_pairs(eta: f64, b_range: i64, a_max: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for b in -b_range..=b_range {
        let n0 = (-b).max(0) as usize;
        let mut n = n0;
        loop {
            let a = eta * (2 * n as i64 + b) as f64;
            if a > a_max {
                break;
            }
            pairs.push((n, (n as i64 + b) as usize));
            n += 1;
        }
    }
    pairs
}

/// ⟨dμ^λ, θ(·,·,λ)·ℱ_Z⟩ at one regular λ through the batched entries.
fn comb_pairing(
    gbar: &[Complex64],
    zrule: &QuadratureRule,
    spec: &SpectralData,
    theta: &(dyn Fn(&FrequencyPoint) -> Complex64 + Sync),
    b_range: i64,
    a_max: f64,
) -> Result<Complex64> {
    let eta = spec.eta[0];
    let pairs = comb_pairs(eta, b_range, a_max);
    let vals = operator_entries_1d(gbar, zrule, eta, &pairs)?;
    let mut acc = Complex64::ZERO;
    for (k, &(n, m)) in pairs.iter().enumerate() {
        let pt = FrequencyPoint {
            a: vec![eta * (n + m) as f64],
            b: vec![m as i64 - n as i64],
            lambda: spec.lambda.clone(),
            class: vec![CoordClass::Regular],
        };
        acc += theta(&pt) * vals[k] * (2.0 * eta);
    }
    Ok(acc)
}

/// Gauss–Legendre nodes over [λ0 − 2ε, λ0] ∪ [λ0, λ0 + 2ε] (the kink of the
/// triangle sits at λ0, each half is smooth).
fn window_rule(lambda0: f64, eps: f64, n_half: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let left = gauss_legendre_rule(n_half, lambda0 - 2.0 * eps, lambda0)?;
    let right = gauss_legendre_rule(n_half, lambda0, lambda0 + 2.0 * eps)?;
    let mut nodes = left.nodes.clone();
    nodes.extend_from_slice(&right.nodes);
    let mut weights = left.weights.clone();
    weights.extend_from_slice(&right.weights);
    Ok((nodes, weights))
}

/// Lemma-style Dirac pairing in isolation:
/// I_ε = (1/2π) ∫ χ̂((λ−λ0)/ε)/ε · ⟨dμ^λ, θ⟩ dλ, with the ε→0 target
/// ⟨dμ^{λ0}, θ(·,·,λ0)⟩.
pub fn dirac_check(
    g: &GroupSpec,
    theta: &(dyn Fn(&FrequencyPoint) -> Complex64 + Sync),
    lambda0: f64,
    eps: f64,
    b_range: i64,
    a_max: f64,
    n_half: usize,
) -> Result<(Complex64, Complex64)> {
    if g.p != 1 {
        return Err(Error::Invalid("Dirac pairing implemented for p = 1".into()));
    }
    if lambda0 != 0.0 {
        return Err(Error::Invalid("the boundary set for p = 1 is {λ = 0}".into()));
    }
    let base = spectral_decompose(g, &[1.0], g.m / 2, 1e-10)?;
    let (nodes, weights) = window_rule(lambda0, eps, n_half)?;
    let mut acc = Complex64::ZERO;
    for (&lam, &w) in nodes.iter().zip(&weights) {
        if lam == 0.0 {
            continue;
        }
        let spec = scaled_spectral(&base, lam);
        let (inner, _) = inner_mu_integral(theta, &spec, b_range, a_max)?;
        acc += inner * (w * triangle_hat((lam - lambda0) / eps) / eps);
    }
    let spec0 = boundary_spectral(&base);
    let (target, _) = inner_mu_integral(theta, &spec0, b_range, a_max)?;
    Ok((acc / (2.0 * PI), target))
}

#[derive(Debug, Clone)]
pub struct CentralLimitReport {
    pub eps: Vec<f64>,
    pub pairing: Vec<Complex64>,
    pub target: Complex64,
    pub rel_err: Vec<f64>,
}

/// Theorem-style central-limit pairing (p = 1, d = 1, λ0 = 0): for each ε,
///   LHS(ε) = ∫ χ̂((λ−λ0)/ε)/ε · ⟨dμ^λ, θ · 𝒢_λ(f)⟩ dλ,
/// where the scalar s-transform of e^{iλ0 s}χ(εs) with χ = sinc² is exact
/// (triangle), and the regular-λ 𝒢 values are Fourier coefficients computed
/// by the batched path. The reported target is (2π)^p ⟨dμ^{λ0}, θ·𝒢_{λ0}(f)⟩.
pub fn central_limit_check(
    g: &GroupSpec,
    fz: &(dyn Fn(&[f64]) -> Complex64 + Sync),
    theta: &(dyn Fn(&FrequencyPoint) -> Complex64 + Sync),
    lambda0: f64,
    eps_list: &[f64],
    b_range: i64,
    a_max: f64,
    zrule: &QuadratureRule,
    n_half: usize,
) -> Result<CentralLimitReport> {
    if g.p != 1 || g.m != 2 {
        return Err(Error::Invalid("central-limit check implemented for d = 1, p = 1".into()));
    }
    if lambda0 != 0.0 {
        return Err(Error::Invalid("the boundary set for p = 1 is {λ = 0}".into()));
    }
    let base = spectral_decompose(g, &[1.0], 1, 1e-10)?;
    let nz = zrule.len();
    // fz on the adapted grid for each basis orientation (λ ≷ 0)
    let mut gbar_pos = vec![Complex64::ZERO; nz * nz];
    let mut gbar_neg = vec![Complex64::ZERO; nz * nz];
    let spec_pos = scaled_spectral(&base, 1.0);
    let spec_neg = scaled_spectral(&base, -1.0);
    for (ix, &x) in zrule.nodes.iter().enumerate() {
        for (iy, &y) in zrule.nodes.iter().enumerate() {
            let u = DVector::from_column_slice(&[x, y]);
            gbar_pos[ix * nz + iy] = fz(spec_pos.from_adapted(&u).as_slice());
            gbar_neg[ix * nz + iy] = fz(spec_neg.from_adapted(&u).as_slice());
        }
    }
    // target at the boundary
    let spec0 = boundary_spectral(&base);
    let theta_g = |pt: &FrequencyPoint| -> Complex64 {
        let gval = gcal_lambda(fz, &spec0, &pt.a, &pt.b, zrule)
            .expect("boundary 𝒢 evaluation is total for finite inputs");
        theta(pt) * gval
    };
    let (inner0, _) = inner_mu_integral(&theta_g, &spec0, b_range, a_max)?;
    let target = inner0 * 2.0 * PI;

    let mut pairing = Vec::with_capacity(eps_list.len());
    let mut rel = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let (nodes, weights) = window_rule(lambda0, eps, n_half)?;
        let mut acc = Complex64::ZERO;
        for (&lam, &w) in nodes.iter().zip(&weights) {
            if lam == 0.0 {
                continue;
            }
            let spec = scaled_spectral(&base, lam);
            let gbar = if lam >= 0.0 { &gbar_pos } else { &gbar_neg };
            let inner = comb_pairing(gbar, zrule, &spec, theta, b_range, a_max)?;
            acc += inner * (w * triangle_hat((lam - lambda0) / eps) / eps);
        }
        pairing.push(acc);
        rel.push(if target.norm() > 0.0 {
            (acc - target).norm() / target.norm()
        } else {
            acc.norm()
        });
    }
    Ok(CentralLimitReport { eps: eps_list.to_vec(), pairing, target, rel_err: rel })
}

// ---------------------------------------------------------------------------
// Plancherel
// ---------------------------------------------------------------------------

/// κ(ℍ^d) = 2^{d−1}/π^{d+1}, the quoted Heisenberg Plancherel constant.
pub fn kappa_heisenberg(d: usize) -> f64 {
    2f64.powi(d as i32 - 1) / PI.powi(d as i32 + 1)
}

#[derive(Debug, Clone)]
pub struct PlancherelReport {
    /// ∫|f|² by direct quadrature.
    pub lhs: f64,
    /// ∫ Pf(λ)‖ℱ^g(f)(λ)‖²_HS dλ, without any constant.
    pub rhs_integral: f64,
    /// the constant actually applied to rhs_integral
    pub kappa: f64,
    pub rhs: f64,
    /// lhs/rhs; NaN when both sides vanish
    pub ratio: f64,
    /// lhs/rhs_integral — the measured normalization constant
    pub kappa_empirical: f64,
    /// relative contribution of the outermost λ nodes (window monitor)
    pub lambda_tail: f64,
    /// share of rhs_integral carried by the last Hermite band (truncation
    /// monitor)
    pub hs_tail: f64,
}

/// Plancherel check on a p = 1 group: lhs by direct quadrature, rhs through
/// operator matrices over the λ grid with the Pf(λ) weight and the supplied
/// constant κ.
pub fn plancherel_check(
    g: &GroupSpec,
    f: &SampledFunction,
    lambda_rule: &QuadratureRule,
    n_max: usize,
    quad: &QuadSet,
    kappa: f64,
) -> Result<PlancherelReport> {
    if g.p != 1 {
        return Err(Error::Invalid("Plancherel check implemented for p = 1".into()));
    }
    let mut lhs = 0.0f64;
    for_each_tensor(&quad.z, g.m, |z, wz| {
        for_each_tensor(&quad.s, g.p, |s, ws| {
            lhs += f.at(z, s).norm_sqr() * wz * ws;
        });
    });
    let mut rhs_integral = 0.0f64;
    let mut edge = 0.0f64;
    let mut hs_tail = 0.0f64;
    let lam_edge = lambda_rule.nodes.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    for (i, &lam) in lambda_rule.nodes.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        let spec = spectral_decompose(g, &[lam], g.m / 2, 1e-10)?;
        let mat = fourier_operator_matrix(g, &spec, f, n_max, quad)?;
        let hs2 = mat.hs_norm_sqr();
        let contribution = spec.pfaffian.abs() * hs2 * lambda_rule.weights[i];
        rhs_integral += contribution;
        if lam.abs() > 0.95 * lam_edge {
            edge += contribution.abs();
        }
        let dim = mat.dim();
        let mut band = 0.0f64;
        for k in 0..dim {
            band += mat.entries[(dim - 1, k)].norm_sqr();
            if k != dim - 1 {
                band += mat.entries[(k, dim - 1)].norm_sqr();
            }
        }
        hs_tail += spec.pfaffian.abs() * band * lambda_rule.weights[i];
    }
    let hs_tail = if rhs_integral > 0.0 { hs_tail / rhs_integral } else { 0.0 };
    let rhs = kappa * rhs_integral;
    Ok(PlancherelReport {
        lhs,
        rhs_integral,
        kappa,
        rhs,
        ratio: if rhs == 0.0 { f64::NAN } else { lhs / rhs },
        kappa_empirical: if rhs_integral == 0.0 { f64::NAN } else { lhs / rhs_integral },
        lambda_tail: if rhs_integral > 0.0 { edge / rhs_integral } else { 0.0 },
        hs_tail,
    })
}

// ---------------------------------------------------------------------------
// sublaplacian
// ---------------------------------------------------------------------------

/// d²/dt² f(w·(tv, 0)) at t = 0 by a 5-point stencil. t ↦ (tv,0) is a
/// one-parameter subgroup, so this equals X_v² f(w) for the left-invariant
/// field X_v.
pub fn group_second_derivative(
    g: &GroupSpec,
    f: &dyn Fn(&GroupElement) -> Complex64,
    w: &GroupElement,
    v: &DVector<f64>,
    h: f64,
    right: bool,
) -> Result<Complex64> {
    if h <= 0.0 {
        return Err(Error::Invalid(format!("step must be positive, got {h}")));
    }
    let eval = |t: f64| -> Result<Complex64> {
        let step = GroupElement { z: v * t, s: DVector::zeros(g.p) };
        let u = if right { g.multiply(&step, w)? } else { g.multiply(w, &step)? };
        Ok(f(&u))
    };
    Ok((-eval(2.0 * h)? + eval(h)? * 16.0 - eval(0.0)? * 30.0 + eval(-h)? * 16.0
        - eval(-2.0 * h)?)
        / (12.0 * h * h))
}

/// Δ_g f(w) = Σ_i X_{e_i}² f(w) over the standard basis of the Z layer (the
/// sum is independent of the orthonormal basis chosen).
pub fn sublaplacian_at(
    g: &GroupSpec,
    f: &dyn Fn(&GroupElement) -> Complex64,
    w: &GroupElement,
    h: f64,
    right: bool,
) -> Result<Complex64> {
    let mut acc = Complex64::ZERO;
    for i in 0..g.m {
        let mut v = DVector::zeros(g.m);
        v[i] = 1.0;
        acc += group_second_derivative(g, f, w, &v, h, right)?;
    }
    Ok(acc)
}

/// −Δ_g as a map on sampled functions (for intertwining checks).
pub fn neg_sublaplacian_function(g: &GroupSpec, f: &SampledFunction, h: f64) -> SampledFunction {
    let g = g.clone();
    let f = f.clone();
    let decay = f.decay;
    SampledFunction::new(
        move |z: &[f64], s: &[f64]| {
            let w = GroupElement::new(z.to_vec(), s.to_vec());
            let fe = |u: &GroupElement| f.at(u.z.as_slice(), u.s.as_slice());
            -sublaplacian_at(&g, &fe, &w, h, false).expect("dimensions fixed")
        },
        decay,
    )
}

#[derive(Debug, Clone)]
pub struct SublaplacianReport {
    /// eigenvalue of the left-invariant sublaplacian on Θ(ŵ,·)
    pub eigen_left: f64,
    pub left_residual: f64,
    /// eigenvalue of the right-invariant analogue
    pub eigen_right: f64,
    pub right_residual: f64,
    /// (Δ − Δ̃)Θ = 2Ση_j(n_j−m_j)Θ with this kernel orientation
    pub difference_residual: f64,
}

/// Finite-difference check that Θ(ŵ,·) diagonalizes the sublaplacian with
/// oscillator eigenvalues. With the kernel orientation used here (b = m − n,
/// the column index m attached to the x-shifted Hermite factor), the
/// left-invariant sublaplacian selects the column index, Δ Θ = −Σ(2m_j+1)η_jΘ,
/// and the right-invariant one the row index, Δ̃ Θ = −Σ(2n_j+1)η_jΘ.
/// Residuals are max |ΔΘ − eigen·Θ| over the sampled w, normalized by
/// max |eigen·Θ| (or max |ΔΘ| for the difference identity).
pub fn sublaplacian_check(
    g: &GroupSpec,
    spectral: &SpectralData,
    pt: &FrequencyPoint,
    h: f64,
) -> Result<SublaplacianReport> {
    check_full_rank(g, spectral)?;
    let (n, m) = crate::frequency::unembed(pt, spectral)
        .ok_or_else(|| Error::Invalid("frequency point is not on the comb of λ".into()))?;
    let eigen_left: f64 = -m
        .iter()
        .zip(&spectral.eta)
        .map(|(&mj, &e)| (2 * mj + 1) as f64 * e)
        .sum::<f64>();
    let eigen_right: f64 = -n
        .iter()
        .zip(&spectral.eta)
        .map(|(&nj, &e)| (2 * nj + 1) as f64 * e)
        .sum::<f64>();
    let theta = |w: &GroupElement| -> Complex64 {
        let zad = spectral.to_adapted(&w.z);
        let wad = GroupElement { z: zad, s: w.s.clone() };
        crate::kernel::theta_kernel(pt, spectral, &wad).expect("kernel evaluation")
    };
    let samples: Vec<GroupElement> = [
        (vec![0.3, -0.4], vec![0.2]),
        (vec![0.7, 0.5], vec![-0.6]),
        (vec![-0.2, 0.9], vec![0.0]),
        (vec![0.0, 0.0], vec![0.4]),
    ]
    .into_iter()
    .map(|(z, s)| {
        let mut zf = z;
        zf.resize(g.m, 0.1);
        let mut sf = s;
        sf.resize(g.p, -0.3);
        GroupElement::new(zf, sf)
    })
    .collect();
    let mut num_l = 0.0f64;
    let mut num_r = 0.0f64;
    let mut num_d = 0.0f64;
    let mut scale_l = 0.0f64;
    let mut scale_r = 0.0f64;
    let mut scale_d = 0.0f64;
    let eigen_diff = eigen_left - eigen_right;
    for w in &samples {
        let tv = theta(w);
        let dl = sublaplacian_at(g, &theta, w, h, false)?;
        let dr = sublaplacian_at(g, &theta, w, h, true)?;
        num_l = num_l.max((dl - tv * eigen_left).norm());
        num_r = num_r.max((dr - tv * eigen_right).norm());
        num_d = num_d.max(((dl - dr) - tv * eigen_diff).norm());
        scale_l = scale_l.max((tv * eigen_left).norm());
        scale_r = scale_r.max((tv * eigen_right).norm());
        scale_d = scale_d.max((tv * eigen_diff).norm().max(dl.norm()));
    }
    Ok(SublaplacianReport {
        eigen_left,
        left_residual: num_l / scale_l.max(1e-300),
        eigen_right,
        right_residual: num_r / scale_r.max(1e-300),
        difference_residual: num_d / scale_d.max(1e-300),
    })
}

// ---------------------------------------------------------------------------
