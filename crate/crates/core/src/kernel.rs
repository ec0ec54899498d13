//! The 1D Fourier kernel 𝒲 (Gauss–Hermite quadrature and power series), the
//! combinatorial coefficients F_{ℓ1,ℓ2} and ℋ_{ℓ1,ℓ2}, the boundary kernel 𝒦
//! (series / oscillatory integral / polar Bessel oracle), K̃, the full kernel
//! Θ, and the lattice operator −Δ̂ with its continuum limit −Δ̂⁰.
//!
//! Conventions (validated against closed-form oracles):
//!   𝒲̃(n,m,η,x,y) = ∫ e^{i√η u y} H_m(u + √η x) H_n(u) du,
//!   𝒲 = e^{(i/2)ηxy} 𝒲̃  (the symmetric form),
//!   b = m − n,
//!   𝒦(a,x,y,b) = (1/2π)∫_{−π}^{π} e^{−i√a(x sin z − y cos z)} e^{ibz} dz.

use crate::error::{Error, Result};
use crate::frequency::{CoordClass, FrequencyPoint};
use crate::group::GroupElement;
use crate::hermite::{
    gauss_hermite_cached, ladder_apply, trapezoid_rule, CoeffVector, LadderKind, PsiBlock,
};
use crate::spectral::SpectralData;
use num_complex::Complex64;
use std::f64::consts::PI;

/// One tensor coordinate of a kernel evaluation point.
#[derive(Debug, Clone, Copy)]
pub struct KernelPoint1D {
    pub a: f64,
    pub b: i64,
    pub eta: f64,
    pub x: f64,
    pub y: f64,
}

impl KernelPoint1D {
    /// Hermite indices n = (η⁻¹a − b)/2, m = (η⁻¹a + b)/2 of a regular point.
    pub fn indices(&self) -> Result<(usize, usize)> {
        if self.eta <= 0.0 {
            return Err(Error::Invalid("boundary point has no Hermite indices".into()));
        }
        let q = self.a / self.eta;
        let scale = q.abs().max(1.0);
        let nv = (q - self.b as f64) / 2.0;
        let mv = (q + self.b as f64) / 2.0;
        for v in [nv, mv] {
            if (v - v.round()).abs() > 1e-9 * scale || v.round() < -0.5 {
                return Err(Error::Invalid(format!(
                    "({}, {}) is not on the η = {} comb",
                    self.a, self.b, self.eta
                )));
            }
        }
        Ok((nv.round() as usize, mv.round() as usize))
    }
}

fn binom(n: u32, k: u32) -> i128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i128 / (i + 1) as i128;
    }
    acc
}

/// F_{ℓ1,ℓ2}(k) = Σ_{ℓ1',ℓ2'} (−1)^{ℓ2−ℓ2'} C(ℓ1,ℓ1')C(ℓ2,ℓ2')
/// 𝟙{2(ℓ1'+ℓ2') = k+ℓ1+ℓ2}, exact. Vanishes when k+ℓ1+ℓ2 is odd.
pub fn f_coeff(l1: u32, l2: u32, k: i64) -> i128 {
    let target = k + l1 as i64 + l2 as i64;
    if target < 0 || target % 2 != 0 {
        return 0;
    }
    let half = (target / 2) as i128;
    let mut sum: i128 = 0;
    for lp1 in 0..=l1 {
        for lp2 in 0..=l2 {
            if (lp1 + lp2) as i128 == half {
                let sign = if (l2 - lp2) % 2 == 0 { 1 } else { -1 };
                sum += sign * binom(l1, lp1) * binom(l2, lp2);
            }
        }
    }
    sum
}

/// ℋ_{ℓ1,ℓ2}: η^{(ℓ1+ℓ2)/2}·(M^{ℓ1}H_n | H_m^{(ℓ2)}) at a regular point,
/// (a/4)^{(ℓ1+ℓ2)/2}·F_{ℓ1,ℓ2}(b) at a boundary point.
pub fn h_coeff(l1: u32, l2: u32, pt: &KernelPoint1D) -> Result<f64> {
    if pt.eta > 0.0 {
        let (n, m) = pt.indices()?;
        let mut vm = CoeffVector::basis(n);
        for _ in 0..l1 {
            vm = ladder_apply(LadderKind::Multiply, &vm);
        }
        let mut vd = CoeffVector::basis(m);
        for _ in 0..l2 {
            vd = ladder_apply(LadderKind::Differentiate, &vd);
        }
        Ok(pt.eta.powf((l1 + l2) as f64 / 2.0) * vm.inner(&vd).re)
    } else {
        Ok((pt.a / 4.0).powf((l1 + l2) as f64 / 2.0) * f_coeff(l1, l2, pt.b) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WMethod {
    Direct,
    Series,
}

const SERIES_CAP: usize = 128;

/// 𝒲̃ at a regular point; at a boundary point the series limit 𝒦 is returned
/// (the relating phase is 1 there).
pub fn kernel_w_1d(pt: &KernelPoint1D, method: WMethod, tol: f64) -> Result<Complex64> {
    if pt.eta == 0.0 {
        return kernel_k(pt.a, pt.x, pt.y, pt.b, KMethod::Series, tol);
    }
    let phase = Complex64::new(0.0, -0.5 * pt.eta * pt.x * pt.y).exp();
    Ok(phase * kernel_w_symmetric(pt, method, tol)?)
}

/// The symmetric kernel 𝒲 = e^{(i/2)ηxy}·𝒲̃
///   = ∫ H_m(v + √η x/2) H_n(v − √η x/2) e^{i√η v y} dv.
pub fn kernel_w_symmetric(pt: &KernelPoint1D, method: WMethod, tol: f64) -> Result<Complex64> {
    if pt.eta == 0.0 {
        return kernel_k(pt.a, pt.x, pt.y, pt.b, KMethod::Series, tol);
    }
    match method {
        WMethod::Direct => w_direct(pt),
        WMethod::Series => {
            let phase = Complex64::new(0.0, 0.5 * pt.eta * pt.x * pt.y).exp();
            Ok(phase * w_series(pt, tol)?)
        }
    }
}

fn w_direct(pt: &KernelPoint1D) -> Result<Complex64> {
    let (n, m) = pt.indices()?;
    let nq = ((n + m) / 2 + 48).max(64);
    let rule = gauss_hermite_cached(nq)?;
    let se = pt.eta.sqrt();
    let c = se * pt.x / 2.0;
    let om = se * pt.y;
    let mut sum = Complex64::ZERO;
    for (i, &v) in rule.nodes.iter().enumerate() {
        let bm = PsiBlock::new(m, v + c);
        let bn = PsiBlock::new(n, v - c);
        let (qm, qn) = (bm.q[m], bn.q[n]);
        if qm == 0.0 || qn == 0.0 {
            continue;
        }
        let logmag = rule.log_total_weights[i]
            + qm.abs().ln()
            + bm.exp2 * std::f64::consts::LN_2
            + qn.abs().ln()
            + bn.exp2 * std::f64::consts::LN_2;
        let mag = logmag.exp() * qm.signum() * qn.signum();
        sum += Complex64::new(0.0, om * v).exp() * mag;
    }
    Ok(sum)
}

/// One ladder row M^ℓ·basis(base) (or D^ℓ) together with the Cauchy–Schwarz
/// majorant c(ℓ) = η^{ℓ/2}‖row_ℓ‖·arg^ℓ/ℓ! built from the exact vector norms
/// (strictly below the (2n+2ℓ)^{ℓ/2} lemma bound, same inequality chain).
fn ladder_row(
    kind: LadderKind,
    base: usize,
    se: f64,
    arg: f64,
    stop: f64,
) -> (Vec<CoeffVector>, Vec<f64>) {
    let mut vecs = Vec::new();
    let mut bounds = Vec::new();
    let mut v = CoeffVector::basis(base);
    let mut fact = 1.0f64;
    for l in 0..=SERIES_CAP {
        if l > 0 {
            fact *= l as f64;
        }
        let c = se.powi(l as i32) * v.norm() * arg.powi(l as i32) / fact;
        vecs.push(v.clone());
        bounds.push(c);
        if l > 0 && c <= stop {
            break;
        }
        v = ladder_apply(kind, &v);
    }
    (vecs, bounds)
}

fn row_cut(bounds: &[f64], other_total: f64, tol: f64) -> Option<usize> {
    // geometric extension past the last computed term
    let last = *bounds.last().unwrap();
    let prev = bounds[bounds.len().saturating_sub(2)];
    let ratio = if prev > 0.0 { (last / prev).min(0.9) } else { 0.0 };
    let beyond = last * ratio / (1.0 - ratio);
    // suffix sums accumulated from the small end to avoid cancellation debris
    let mut suffix = vec![beyond; bounds.len() + 1];
    for l in (0..bounds.len()).rev() {
        suffix[l] = suffix[l + 1] + bounds[l];
    }
    (0..bounds.len()).find(|&l| suffix[l + 1] * other_total <= tol / 3.0)
}

/// 𝒲̃ by the double power series Σ ℋ_{ℓ1,ℓ2}(iy)^{ℓ1}x^{ℓ2}/(ℓ1!ℓ2!), with
/// the Cauchy–Schwarz majorant tail forced ≤ tol (hard cap 128 per index).
fn w_series(pt: &KernelPoint1D, tol: f64) -> Result<Complex64> {
    let (n, m) = pt.indices()?;
    let se = pt.eta.sqrt();
    let stop = (tol * 1e-8).max(1e-300);
    let (vms, b1) = ladder_row(LadderKind::Multiply, n, se, pt.y.abs(), stop);
    let (vds, b2) = ladder_row(LadderKind::Differentiate, m, se, pt.x.abs(), stop);
    let s1: f64 = b1.iter().sum();
    let s2: f64 = b2.iter().sum();
    let l1max = row_cut(&b1, s2, tol)
        .ok_or(Error::Unreachable { what: "𝒲 series y-tail".into(), tol })?;
    let l2max = row_cut(&b2, s1, tol)
        .ok_or(Error::Unreachable { what: "𝒲 series x-tail".into(), tol })?;
    let iy = Complex64::new(0.0, pt.y);
    let mut sum = Complex64::ZERO;
    let mut f1 = 1.0f64;
    for l1 in 0..=l1max {
        if l1 > 0 {
            f1 *= l1 as f64;
        }
        let mut f2 = 1.0f64;
        for l2 in 0..=l2max {
            if l2 > 0 {
                f2 *= l2 as f64;
            }
            let h = se.powi((l1 + l2) as i32) * vms[l1].inner(&vds[l2]).re;
            if h != 0.0 {
                sum += iy.powu(l1 as u32) * pt.x.powi(l2 as i32) * (h / (f1 * f2));
            }
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KMethod {
    Series,
    Integral,
    Polar,
}

/// Boundary kernel 𝒦(a,x,y,b).
pub fn kernel_k(a: f64, x: f64, y: f64, b: i64, method: KMethod, tol: f64) -> Result<Complex64> {
    if a < 0.0 {
        return Err(Error::Invalid(format!("a must be nonnegative, got {a}")));
    }
    match method {
        KMethod::Series => k_series(a, x, y, b, tol),
        KMethod::Integral => k_integral(a, x, y, b, tol),
        KMethod::Polar => {
            let r = x.hypot(y);
            let phase = Complex64::new(0.0, b as f64 * y.atan2(x)).exp();
            Ok(phase * bessel_j(b, a.sqrt() * r))
        }
    }
}

fn k_series(a: f64, x: f64, y: f64, b: i64, tol: f64) -> Result<Complex64> {
    // |term| ≤ (√a|y|)^{ℓ1}(√a|x|)^{ℓ2}/(ℓ1!ℓ2!) since |F| ≤ 2^{ℓ1+ℓ2}
    let cut = |arg: f64| -> Result<usize> {
        let mut term = 1.0f64;
        let mut tail = arg.exp();
        for l in 0..=SERIES_CAP {
            tail -= term;
            if tail.max(0.0) * (arg.exp()) <= tol / 3.0 {
                return Ok(l);
            }
            term *= arg / (l + 1) as f64;
        }
        Err(Error::Unreachable { what: "𝒦 series tail".into(), tol })
    };
    let sa = a.sqrt();
    let l1max = cut(sa * y.abs())?;
    let l2max = cut(sa * x.abs())?;
    let iy = Complex64::new(0.0, y);
    let mut sum = Complex64::ZERO;
    let mut f1 = 1.0f64;
    for l1 in 0..=l1max {
        if l1 > 0 {
            f1 *= l1 as f64;
        }
        let mut f2 = 1.0f64;
        for l2 in 0..=l2max {
            if l2 > 0 {
                f2 *= l2 as f64;
            }
            let f = f_coeff(l1 as u32, l2 as u32, b);
            if f != 0 {
                let coeff = (a / 4.0).powf((l1 + l2) as f64 / 2.0) * f as f64 / (f1 * f2);
                sum += iy.powu(l1 as u32) * x.powi(l2 as i32) * coeff;
            }
        }
    }
    Ok(sum)
}

fn k_integral(a: f64, x: f64, y: f64, b: i64, tol: f64) -> Result<Complex64> {
    let sa = a.sqrt();
    let eval = |n: usize| -> Result<Complex64> {
        let rule = trapezoid_rule(n)?;
        Ok(rule.integrate(|z| {
            Complex64::new(0.0, -sa * (x * z.sin() - y * z.cos()) + b as f64 * z).exp()
        }) / (2.0 * PI))
    };
    let mut n = 256usize;
    let mut prev = eval(n)?;
    while n < 16384 {
        n *= 2;
        let next = eval(n)?;
        if (next - prev).norm() <= tol {
            return Ok(next);
        }
        prev = next;
    }
    Ok(prev)
}

/// J_b(t) = (1/2π)∫_{−π}^{π} e^{i(t sin τ − bτ)} dτ by the (spectrally
/// convergent) periodic trapezoid rule.
pub fn bessel_j(b: i64, t: f64) -> f64 {
    // aliasing error of the N-node rule is O(J_{N−|b|}(t)), negligible for
    // N ≳ 2(t + |b|) + margin
    let n = 128 + 2 * (t.abs() as usize) + 2 * b.unsigned_abs() as usize;
    let rule = trapezoid_rule(n).expect("trapezoid rule");
    (rule.integrate(|tau| Complex64::new(0.0, t * tau.sin() - b as f64 * tau).exp())
        / (2.0 * PI))
        .re
}

/// K̃(a,x,y,z) = e^{−i√a(x sin z − y cos z)}.
pub fn ktilde(a: f64, x: f64, y: f64, z: f64) -> Complex64 {
    Complex64::new(0.0, -a.sqrt() * (x * z.sin() - y * z.cos())).exp()
}

/// Truncated Fourier synthesis Σ_{|b|≤B} 𝒦(a,x,y,b) e^{−ibz}. The −ibz phase
/// pairs with the +ibz factor inside the analysis integral (Jacobi–Anger).
pub fn ktilde_synthesis(a: f64, x: f64, y: f64, z: f64, bmax: i64) -> Result<Complex64> {
    let mut sum = Complex64::ZERO;
    for b in -bmax..=bmax {
        sum += kernel_k(a, x, y, b, KMethod::Polar, 1e-12)?
            * Complex64::new(0.0, -(b as f64) * z).exp();
    }
    Ok(sum)
}

/// Θ(ŵ, w) = e^{i⟨λ,s⟩}·Π_j 𝒲_j, with 𝒦 on boundary coordinates. The element
/// w carries adapted-basis coordinates (x_1..x_d, y_1..y_d, …).
pub fn theta_kernel(
    pt: &FrequencyPoint,
    spectral: &SpectralData,
    w: &GroupElement,
) -> Result<Complex64> {
    let d = spectral.d;
    if w.z.len() < 2 * d {
        return Err(Error::Dimension("element too short for 2d kernel coordinates".into()));
    }
    let mut lam_s = 0.0;
    for (k, &lk) in pt.lambda.iter().enumerate() {
        lam_s += lk * w.s[k];
    }
    let mut out = Complex64::new(0.0, lam_s).exp();
    for j in 0..d {
        let kp = KernelPoint1D {
            a: pt.a[j],
            b: pt.b[j],
            eta: spectral.eta[j],
            x: w.z[j],
            y: w.z[d + j],
        };
        let factor = match pt.class[j] {
            CoordClass::Regular => kernel_w_symmetric(&kp, WMethod::Direct, 1e-12)?,
            CoordClass::Boundary => kernel_k(kp.a, kp.x, kp.y, kp.b, KMethod::Polar, 1e-12)?,
        };
        out *= factor;
    }
    Ok(out)
}

/// The lattice combination (−Δ̂θ)(a,b) =
///   [2(a+η)θ(a,b) − √(a²−η²b²)θ(a−2η,b) − √((a+2η)²−η²b²)θ(a+2η,b)] / η²,
/// satisfying |Z|²𝒲(a,b) = (−Δ̂𝒲)(a,b).
pub fn delta_hat_apply(
    theta: &dyn Fn(f64, i64) -> Complex64,
    pt: &KernelPoint1D,
) -> Result<Complex64> {
    let (a, eta, b) = (pt.a, pt.eta, pt.b);
    if eta <= 0.0 {
        return Err(Error::Invalid("−Δ̂ requires a regular point".into()));
    }
    let disc_lo = a * a - eta * eta * (b * b) as f64;
    if disc_lo < -1e-12 * a.max(1.0).powi(2) {
        return Err(Error::Invalid(format!(
            "a² − η²b² = {disc_lo} < 0: point below the comb vertex"
        )));
    }
    let disc_hi = (a + 2.0 * eta).powi(2) - eta * eta * (b * b) as f64;
    let val = 2.0 * (a + eta) * theta(a, b)
        - disc_lo.max(0.0).sqrt() * theta(a - 2.0 * eta, b)
        - disc_hi.sqrt() * theta(a + 2.0 * eta, b);
    Ok(val / (eta * eta))
}

/// The continuum limit (−Δ̂⁰θ)(a,b) = −4a θ''(a) − 4θ'(a) + (b²/a)θ(a), with
/// 4th-order finite differences at step h = 1e-4.
pub fn delta_hat0_apply(
    theta: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: i64,
) -> Result<Complex64> {
    if a <= 0.0 {
        return Err(Error::Invalid(format!("−Δ̂⁰ requires a > 0, got {a}")));
    }
    let h = 1e-4;
    let f = |t: f64| theta(a + t);
    let d1 = (-f(2.0 * h) + f(h) * 8.0 - f(-h) * 8.0 + f(-2.0 * h)) / (12.0 * h);
    let d2 = (-f(2.0 * h) + f(h) * 16.0 - f(0.0) * 30.0 + f(-h) * 16.0 - f(-2.0 * h))
        / (12.0 * h * h);
    Ok(d2 * (-4.0 * a) - d1 * 4.0 + f(0.0) * ((b * b) as f64 / a))
}

fn fd_partial(f: &dyn Fn(f64, f64) -> Complex64, x: f64, y: f64, on_x: bool) -> Complex64 {
    let h = 1e-4;
    let g = |t: f64| if on_x { f(x + t, y) } else { f(x, y + t) };
    (-g(2.0 * h) + g(h) * 8.0 - g(-h) * 8.0 + g(-2.0 * h)) / (12.0 * h)
}

fn fd_laplacian(f: &dyn Fn(f64, f64) -> Complex64, x: f64, y: f64) -> Complex64 {
    let h = 1e-4;
    let d2 = |on_x: bool| {
        let g = |t: f64| if on_x { f(x + t, y) } else { f(x, y + t) };
        (-g(2.0 * h) + g(h) * 16.0 - g(0.0) * 30.0 + g(-h) * 16.0 - g(-2.0 * h))
            / (12.0 * h * h)
    };
    d2(true) + d2(false)
}

/// Residual of the lattice identity |Z|²𝒲(a,b) = (−Δ̂𝒲)(a,b) at one point.
pub fn lattice_identity_residual(n: usize, m: usize, eta: f64, x: f64, y: f64) -> Result<f64> {
    let a = eta * (n + m) as f64;
    let b = m as i64 - n as i64;
    let pt = KernelPoint1D { a, b, eta, x, y };
    let w_at = |aa: f64, bb: i64| -> Complex64 {
        let q = aa / eta;
        let nv = (q - bb as f64) / 2.0;
        let mv = (q + bb as f64) / 2.0;
        if nv.round() < -0.5 || mv.round() < -0.5 {
            return Complex64::ZERO;
        }
        kernel_w_symmetric(&KernelPoint1D { a: aa, b: bb, eta, x, y }, WMethod::Direct, 1e-12)
            .unwrap_or(Complex64::ZERO)
    };
    let lhs = (x * x + y * y) * w_at(a, b);
    let rhs = delta_hat_apply(&w_at, &pt)?;
    Ok((lhs - rhs).norm())
}

/// Residual of the lattice convolution identity
///   e^{(i/2)η(xy'−yx')}𝒲(a,b,Z+Z') = Σ_{b'}𝒲(a−ηb',b−b',Z)𝒲(a+η(b−b'),b',Z'),
/// the sum running over the finitely many b' with nonnegative Hermite indices.
pub fn lattice_convolution_residual(
    n: usize,
    m: usize,
    eta: f64,
    z1: (f64, f64),
    z2: (f64, f64),
) -> Result<f64> {
    let w = |nn: usize, mm: usize, x: f64, y: f64| -> Result<Complex64> {
        let pt = KernelPoint1D {
            a: eta * (nn + mm) as f64,
            b: mm as i64 - nn as i64,
            eta,
            x,
            y,
        };
        kernel_w_symmetric(&pt, WMethod::Direct, 1e-12)
    };
    let phase = Complex64::new(0.0, 0.5 * eta * (z1.0 * z2.1 - z1.1 * z2.0)).exp();
    let lhs = phase * w(n, m, z1.0 + z2.0, z1.1 + z2.1)?;
    let mut rhs = Complex64::ZERO;
    // b' = m − k with intermediate index k ≥ 0; truncate where terms vanish
    for k in 0..=(n + m + 40) {
        rhs += w(n, k, z1.0, z1.1)? * w(k, m, z2.0, z2.1)?;
    }
    Ok((lhs - rhs).norm())
}

/// Residual of (m−n)𝒲 = −i(x∂_y − y∂_x)𝒲 at one regular point.
pub fn rotation_w_residual(n: usize, m: usize, eta: f64, x: f64, y: f64) -> Result<f64> {
    let pt0 = KernelPoint1D {
        a: eta * (n + m) as f64,
        b: m as i64 - n as i64,
        eta,
        x,
        y,
    };
    let f = |xx: f64, yy: f64| {
        kernel_w_symmetric(
            &KernelPoint1D { x: xx, y: yy, ..pt0 },
            WMethod::Direct,
            1e-12,
        )
        .unwrap()
    };
    let rot = fd_partial(&f, x, y, false) * x - fd_partial(&f, x, y, true) * y;
    let lhs = f(x, y) * (m as f64 - n as f64);
    Ok((lhs - rot * Complex64::new(0.0, -1.0)).norm())
}

#[derive(Debug, Clone)]
pub struct IdentityResult {
    pub name: &'static str,
    pub residual: f64,
    pub tol: f64,
}

impl IdentityResult {
    pub fn passed(&self) -> bool {
        self.residual <= self.tol
    }
}

/// All Prop.-style 𝒦 identities on seeded random samples: the four exact
/// symmetries, the Laplacian identity, the rotation identity (adopted sign
/// b𝒦 = −i𝒯𝒦), the b-convolution with B = 25, and the radial ODE with
/// coefficients (4a, 4) via analytic Bessel derivatives.
pub fn identity_suite(seed: u64, samples: usize) -> Result<Vec<IdentityResult>> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(samples);
    for _ in 0..samples {
        let a: f64 = rng.gen_range(0.05..2.0);
        let x: f64 = rng.gen_range(-2.0..2.0);
        let y: f64 = rng.gen_range(-2.0..2.0);
        let b: i64 = rng.gen_range(-4..=4);
        pts.push((a, x, y, b));
    }
    let k = |a: f64, x: f64, y: f64, b: i64| kernel_k(a, x, y, b, KMethod::Polar, 1e-12);
    let mut results = Vec::new();
    let mut push = |name: &'static str, residual: f64, tol: f64| {
        results.push(IdentityResult { name, residual, tol });
    };

    let mut r = 0.0f64;
    for &(_, x, y, b) in &pts {
        let expect = if b == 0 { 1.0 } else { 0.0 };
        r = r.max((k(0.0, x, y, b)? - expect).norm());
    }
    push("identity1_a_zero", r, 1e-10);

    let mut r = 0.0f64;
    for &(a, x, y, b) in &pts {
        r = r.max((k(a, x, -y, b)? - k(a, x, y, b)?.conj()).norm());
    }
    push("identity2_conjugation", r, 1e-10);

    let mut r = 0.0f64;
    for &(a, x, y, b) in &pts {
        r = r.max((k(a, -x, y, -b)? - k(a, x, y, b)?).norm());
    }
    push("identity3_reflection", r, 1e-10);

    let mut r = 0.0f64;
    for &(a, x, y, b) in &pts {
        let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
        r = r.max((k(a, x, -y, -b)? - k(a, x, y, b)? * sign).norm());
    }
    push("identity4_parity", r, 1e-10);

    let mut r = 0.0f64;
    for &(a, x, y, b) in pts.iter().take(8) {
        let f = |xx: f64, yy: f64| k(a, xx, yy, b).unwrap();
        let lap = fd_laplacian(&f, x, y);
        r = r.max((lap * (-1.0) - f(x, y) * a).norm());
    }
    push("identity5_laplacian", r, 1e-6);

    let mut r = 0.0f64;
    for &(a, x, y, b) in pts.iter().take(8) {
        let f = |xx: f64, yy: f64| k(a, xx, yy, b).unwrap();
        let rot = fd_partial(&f, x, y, false) * x - fd_partial(&f, x, y, true) * y;
        r = r.max((f(x, y) * b as f64 - rot * Complex64::new(0.0, -1.0)).norm());
    }
    push("identity6_rotation", r, 1e-6);

    let mut r = 0.0f64;
    for &(a, x, y, b) in pts.iter().take(6) {
        let (xp, yp) = (0.7 * y - 0.2, 0.4 * x + 0.3);
        let lhs = k(a, x + xp, y + yp, b)?;
        let mut rhs = Complex64::ZERO;
        for bp in -25..=25i64 {
            rhs += k(a, x, y, b - bp)? * k(a, xp, yp, bp)?;
        }
        r = r.max((lhs - rhs).norm());
    }
    push("identity7_convolution", r, 1e-9);

    let mut r = 0.0f64;
    for &(a, x, y, b) in pts.iter().take(8) {
        let rr = x.hypot(y);
        let t = a.sqrt() * rr;
        let phase = Complex64::new(0.0, b as f64 * y.atan2(x)).exp();
        let jb = bessel_j(b, t);
        // dθ/da and d²θ/da² of θ(a) = e^{ibφ}J_b(√a r) via J'_b, J''_b
        let jp = 0.5 * (bessel_j(b - 1, t) - bessel_j(b + 1, t));
        let jpp = 0.25 * (bessel_j(b - 2, t) - 2.0 * jb + bessel_j(b + 2, t));
        let dtda = rr / (2.0 * a.sqrt());
        let d1 = jp * dtda;
        let d2 = jpp * dtda * dtda - jp * rr / (4.0 * a.powf(1.5));
        let lhs = (rr * rr * jb + 4.0 * a * d2 + 4.0 * d1) * phase;
        let rhs = phase * jb * ((b * b) as f64 / a);
        r = r.max((lhs - rhs).norm());
    }
    push("identity8_radial_ode", r, 1e-6);

    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::{embed, CoordClass};
    use crate::group::{GroupElement, GroupSpec};
    use crate::spectral::spectral_decompose;

    fn w_sym(n: usize, m: usize, eta: f64, x: f64, y: f64, method: WMethod) -> Complex64 {
        let pt = KernelPoint1D {
            a: eta * (n + m) as f64,
            b: m as i64 - n as i64,
            eta,
            x,
            y,
        };
        kernel_w_symmetric(&pt, method, 1e-12).unwrap()
    }

    #[test]
    fn f_coeff_examples() {
        assert_eq!(f_coeff(0, 0, 0), 1);
        assert_eq!(f_coeff(0, 0, 2), 0);
        assert_eq!(f_coeff(0, 0, -1), 0);
        assert_eq!(f_coeff(1, 1, 0), 0);
        assert_eq!(f_coeff(2, 0, 0), 2);
        assert_eq!(f_coeff(1, 0, 1), 1);
        assert_eq!(f_coeff(1, 0, 0), 0);
        // parity and reflection F(−k) = (−1)^{ℓ2}F(k)
        for l1 in 0..6u32 {
            for l2 in 0..6u32 {
                for k in -6..=6i64 {
                    if (k + l1 as i64 + l2 as i64) % 2 != 0 {
                        assert_eq!(f_coeff(l1, l2, k), 0);
                    }
                    let sign = if l2 % 2 == 0 { 1 } else { -1 };
                    assert_eq!(f_coeff(l1, l2, -k), sign * f_coeff(l1, l2, k));
                }
            }
        }
    }

    #[test]
    fn h_coeff_orthonormality_and_boundary() {
        for n in 0..5usize {
            for m in 0..5usize {
                let pt = KernelPoint1D {
                    a: (n + m) as f64,
                    b: m as i64 - n as i64,
                    eta: 1.0,
                    x: 0.0,
                    y: 0.0,
                };
                let h = h_coeff(0, 0, &pt).unwrap();
                let expect = if n == m { 1.0 } else { 0.0 };
                assert!((h - expect).abs() < 1e-14);
            }
        }
        let bpt = KernelPoint1D { a: 1.0, b: 1, eta: 0.0, x: 0.0, y: 0.0 };
        assert!((h_coeff(1, 0, &bpt).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn h_coeff_boundary_continuity() {
        // a=1, b=1, ℓ1=1, ℓ2=0: regular values → 0.5 as η → 0 along members
        let mut prev = f64::INFINITY;
        for k in 1..=9 {
            let eta = 2f64.powi(-2 * k);
            let h_steps = (1.0 / (2.0 * eta)).ceil();
            let a = eta * (2.0 * h_steps + 1.0);
            let pt = KernelPoint1D { a, b: 1, eta, x: 0.0, y: 0.0 };
            let err = (h_coeff(1, 0, &pt).unwrap() - 0.5).abs();
            assert!(err < prev + 1e-12, "k={k} err={err}");
            prev = err;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn w_examples() {
        assert!((w_sym(0, 0, 1.0, 0.0, 0.0, WMethod::Direct) - 1.0).norm() < 1e-12);
        let e1 = (-1.0f64).exp();
        assert!((w_sym(0, 0, 1.0, 2.0, 0.0, WMethod::Direct) - e1).norm() < 1e-10);
        let spot = w_sym(0, 1, 1.0, 2.0, 0.0, WMethod::Direct);
        assert!((spot - 2f64.sqrt() * e1).norm() < 1e-10, "spot = {spot}");
        // Gaussian closed form on a grid
        for &x in &[-1.5f64, 0.2, 1.0] {
            for &y in &[-0.7f64, 0.0, 1.9] {
                let expect = (-(x * x + y * y) / 4.0).exp();
                assert!((w_sym(0, 0, 1.0, x, y, WMethod::Direct) - expect).norm() < 1e-10);
                assert!((w_sym(0, 0, 1.0, x, y, WMethod::Series) - expect).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn w_series_matches_direct() {
        for n in 0..=4usize {
            for m in 0..=4usize {
                for &eta in &[0.5f64, 2.0] {
                    let (x, y) = (0.9, -1.3);
                    let a = w_sym(n, m, eta, x, y, WMethod::Direct);
                    let b = w_sym(n, m, eta, x, y, WMethod::Series);
                    assert!((a - b).norm() < 1e-9, "n={n} m={m} eta={eta}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn w_large_degree_stable() {
        // high on the comb: finite, bounded by 1 in modulus
        let v = w_sym(600, 600, 1.0 / 1024.0, 1.0, 0.5, WMethod::Direct);
        assert!(v.norm().is_finite());
        assert!(v.norm() <= 1.0 + 1e-9);
    }

    #[test]
    fn k_examples() {
        for b in -3..=3i64 {
            let expect = if b == 0 { 1.0 } else { 0.0 };
            for m in [KMethod::Series, KMethod::Integral, KMethod::Polar] {
                assert!((kernel_k(0.0, 0.4, -1.0, b, m, 1e-12).unwrap() - expect).norm() < 1e-12);
                assert!((kernel_k(1.3, 0.0, 0.0, b, m, 1e-12).unwrap() - expect).norm() < 1e-10);
            }
        }
        let j01 = kernel_k(1.0, 0.0, 1.0, 0, KMethod::Integral, 1e-12).unwrap();
        assert!((j01.re - 0.7651976865579666).abs() < 1e-10);
        assert!(j01.im.abs() < 1e-12);
    }

    #[test]
    fn k_methods_agree() {
        for &a in &[0.3f64, 1.0, 4.0] {
            for &(x, y) in &[(0.5, -1.2), (2.0, 2.0), (-1.0, 0.0)] {
                for b in -5..=5i64 {
                    let s = kernel_k(a, x, y, b, KMethod::Series, 1e-12).unwrap();
                    let i = kernel_k(a, x, y, b, KMethod::Integral, 1e-13).unwrap();
                    let p = kernel_k(a, x, y, b, KMethod::Polar, 1e-12).unwrap();
                    assert!((s - i).norm() < 1e-10, "s vs i at a={a} b={b}");
                    assert!((i - p).norm() < 1e-10, "i vs p at a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn ktilde_examples() {
        assert_eq!(ktilde(2.0, 0.0, 0.0, 0.7), Complex64::new(1.0, 0.0));
        let y = 0.35;
        let v = ktilde(4.0, 0.0, y, 0.0);
        assert!((v - Complex64::new(0.0, 2.0 * y).exp()).norm() < 1e-15);
        for &z in &[-2.0f64, -0.5, 0.0, 1.1, 3.0] {
            let syn = ktilde_synthesis(1.0, 1.0, 1.0, z, 20).unwrap();
            assert!((syn - ktilde(1.0, 1.0, 1.0, z)).norm() < 1e-10, "z={z}");
        }
    }

    #[test]
    fn theta_kernel_examples() {
        let g = GroupSpec::heisenberg(1);
        let sp = spectral_decompose(&g, &[1.0], 1, 1e-10).unwrap();
        let pt = embed(&[0], &[0], &sp).unwrap();
        for &(x, y) in &[(0.3, -0.8), (1.4, 0.6)] {
            let w = GroupElement::new(vec![x, y], vec![0.0]);
            let v = theta_kernel(&pt, &sp, &w).unwrap();
            assert!((v - (-(x * x + y * y) / 4.0).exp()).norm() < 1e-10);
            // s-dependence is a pure phase
            let ws = GroupElement::new(vec![x, y], vec![2.2]);
            let vs = theta_kernel(&pt, &sp, &ws).unwrap();
            assert!((vs - v * Complex64::new(0.0, 2.2).exp()).norm() < 1e-12);
        }
        // ∇_s Θ = iλ Θ by finite differences
        let pt2 = embed(&[1], &[2], &sp).unwrap();
        let h = 1e-4;
        let f = |s: f64| {
            theta_kernel(&pt2, &sp, &GroupElement::new(vec![0.4, 0.9], vec![s])).unwrap()
        };
        let d = (-f(2.0 * h) + f(h) * 8.0 - f(-h) * 8.0 + f(-2.0 * h)) / (12.0 * h);
        let expect = f(0.0) * Complex64::new(0.0, 1.0);
        assert!((d - expect).norm() < 1e-6 * expect.norm().max(1.0));
    }

    #[test]
    fn delta_hat0_constant() {
        let theta = |_: f64| Complex64::new(1.0, 0.0);
        for &(a, b) in &[(0.5f64, 2i64), (1.0, 0), (3.0, -3)] {
            let v = delta_hat0_apply(&theta, a, b).unwrap();
            assert!((v.re - (b * b) as f64 / a).abs() < 1e-6);
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn lattice_identity_spot() {
        let r = lattice_identity_residual(1, 1, 1.0, 0.3, -0.7).unwrap();
        assert!(r < 1e-8, "residual {r}");
    }

    #[test]
    fn lattice_convolution_spot() {
        let r = lattice_convolution_residual(1, 2, 1.0, (0.4, -0.3), (0.2, 0.8)).unwrap();
        assert!(r < 1e-8, "residual {r}");
        let r0 = lattice_convolution_residual(0, 0, 0.7, (1.0, 0.5), (-0.6, 0.2)).unwrap();
        assert!(r0 < 1e-8, "residual {r0}");
    }

    #[test]
    fn rotation_identity_w() {
        let r = rotation_w_residual(1, 3, 1.0, 0.8, -0.5).unwrap();
        assert!(r < 1e-6, "residual {r}");
    }

    #[test]
    fn delta_hat_converges_to_continuum() {
        // smooth θ(a) = e^{−a}: lattice − continuum → 0 as η → 0
        let theta2 = |a: f64, _: i64| Complex64::new((-a).exp(), 0.0);
        let theta1 = |a: f64| Complex64::new((-a).exp(), 0.0);
        let (a, b) = (1.0, 2i64);
        let cont = delta_hat0_apply(&theta1, a, b).unwrap();
        let mut prev = f64::INFINITY;
        for k in 4..=9 {
            let eta = 2f64.powi(-k);
            let pt = KernelPoint1D { a, b, eta, x: 0.0, y: 0.0 };
            let lat = delta_hat_apply(&theta2, &pt).unwrap();
            let err = (lat - cont).norm();
            assert!(err < prev, "k={k} err={err}");
            assert!(err <= 12.0 * eta, "k={k} err={err}");
            prev = err;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn identity_suite_passes() {
        let results = identity_suite(0, 24).unwrap();
        assert_eq!(results.len(), 8);
        for r in &results {
            assert!(r.passed(), "{} residual {:.3e} > {:.1e}", r.name, r.residual, r.tol);
        }
    }

    #[test]
    fn boundary_continuity_trend() {
        // |𝒲 − 𝒦| decreases along η = 2^{−k} member sequences
        for &(x, y, b) in &[(0.5f64, -1.0, 0i64), (1.5, 1.0, 2), (2.0, -2.0, -3)] {
            let a_target = 1.5f64;
            let errs: Vec<f64> = (1..=10)
                .map(|k| {
                    let eta = 2f64.powi(-k);
                    let h = (a_target / (2.0 * eta))
                        .ceil()
                        .max(((1 - b) as f64 / 2.0).ceil())
                        .max(1.0)
                        .max(-b as f64);
                    let a = eta * (2.0 * h + b as f64);
                    let pt = KernelPoint1D { a, b, eta, x, y };
                    let w = kernel_w_symmetric(&pt, WMethod::Direct, 1e-12).unwrap();
                    let kk = kernel_k(a, x, y, b, KMethod::Polar, 1e-12).unwrap();
                    (w - kk).norm()
                })
                .collect();
            for k in 5..10 {
                assert!(
                    errs[k] <= errs[k - 1] + 1e-12,
                    "x={x} y={y} b={b} k={}: {} > {}",
                    k + 1,
                    errs[k],
                    errs[k - 1]
                );
            }
            assert!(errs[9] <= 1e-3, "final gap {}", errs[9]);
        }
    }

    #[test]
    fn theta_boundary_factor() {
        // boundary coordinate falls back to 𝒦
        let g = GroupSpec::heisenberg(1);
        let sp = spectral_decompose(&g, &[0.0], 1, 1e-10).unwrap();
        let pt = FrequencyPoint {
            a: vec![1.0],
            b: vec![0],
            lambda: vec![0.0],
            class: vec![CoordClass::Boundary],
        };
        let w = GroupElement::new(vec![0.0, 1.0], vec![0.0]);
        let v = theta_kernel(&pt, &sp, &w).unwrap();
        assert!((v.re - 0.7651976865579666).abs() < 1e-10);
    }
}
