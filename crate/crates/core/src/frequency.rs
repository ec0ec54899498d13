//! The frequency sets g̃ and ĝ: membership, the i_E embedding and ρ_E
//! distance, boundary-approach sequences, and the measures dμ^λ / dŵ.
//!
//! Sign convention: the integer label is b = m − n, so that the inverse of
//! the embedding reads n = (η⁻¹a − b)/2, m = (η⁻¹a + b)/2.

use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::hermite::QuadratureRule;
use crate::spectral::{spectral_decompose, SpectralData};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordClass {
    Regular,
    Boundary,
}

/// A point (a, b, λ) of ĝ with per-coordinate classification.
#[derive(Debug, Clone)]
pub struct FrequencyPoint {
    pub a: Vec<f64>,
    pub b: Vec<i64>,
    pub lambda: Vec<f64>,
    pub class: Vec<CoordClass>,
}

pub const MEMBER_TOL: f64 = 1e-9;

/// Accepts iff every regular coordinate satisfies
/// (η_j⁻¹ a_j ∓ b_j)/2 ∈ ℕ within tol; boundary coordinates only need a_j ≥ 0.
pub fn is_member(
    spec: &SpectralData,
    a: &[f64],
    b: &[i64],
    tol: f64,
) -> Option<Vec<CoordClass>> {
    if a.len() != spec.d || b.len() != spec.d {
        return None;
    }
    let mut class = Vec::with_capacity(spec.d);
    for j in 0..spec.d {
        if a[j] < 0.0 {
            return None;
        }
        let eta = spec.eta[j];
        if eta == 0.0 {
            class.push(CoordClass::Boundary);
            continue;
        }
        let q = a[j] / eta;
        let scale = q.abs().max(1.0);
        for v in [(q - b[j] as f64) / 2.0, (q + b[j] as f64) / 2.0] {
            if (v - v.round()).abs() > tol * scale || v.round() < -0.5 {
                return None;
            }
        }
        class.push(CoordClass::Regular);
    }
    Some(class)
}

/// i_E(n, m, λ) = (η(λ)·(n+m), m−n, λ).
pub fn embed(n: &[usize], m: &[usize], spec: &SpectralData) -> Result<FrequencyPoint> {
    if n.len() != spec.d || m.len() != spec.d {
        return Err(Error::Dimension("multi-indices must have length d".into()));
    }
    let mut a = Vec::with_capacity(spec.d);
    let mut b = Vec::with_capacity(spec.d);
    let mut class = Vec::with_capacity(spec.d);
    for j in 0..spec.d {
        a.push(spec.eta[j] * (n[j] + m[j]) as f64);
        b.push(m[j] as i64 - n[j] as i64);
        class.push(if spec.eta[j] > 0.0 {
            CoordClass::Regular
        } else {
            CoordClass::Boundary
        });
    }
    Ok(FrequencyPoint {
        a,
        b,
        lambda: spec.lambda.clone(),
        class,
    })
}

/// Inverse of [`embed`] on regular coordinates: n = (η⁻¹a − b)/2,
/// m = (η⁻¹a + b)/2. None when any coordinate is boundary or non-integral.
pub fn unembed(pt: &FrequencyPoint, spec: &SpectralData) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut n = Vec::with_capacity(spec.d);
    let mut m = Vec::with_capacity(spec.d);
    for j in 0..spec.d {
        let eta = spec.eta[j];
        if eta == 0.0 {
            return None;
        }
        let q = pt.a[j] / eta;
        let nv = (q - pt.b[j] as f64) / 2.0;
        let mv = (q + pt.b[j] as f64) / 2.0;
        let scale = q.abs().max(1.0);
        if (nv - nv.round()).abs() > MEMBER_TOL * scale || nv.round() < -0.5 {
            return None;
        }
        if (mv - mv.round()).abs() > MEMBER_TOL * scale || mv.round() < -0.5 {
            return None;
        }
        n.push(nv.round() as usize);
        m.push(mv.round() as usize);
    }
    Some((n, m))
}

/// Euclidean distance between the i_E images of (n, m, λ) and (n', m', λ').
pub fn rho_e(
    n1: &[usize],
    m1: &[usize],
    s1: &SpectralData,
    n2: &[usize],
    m2: &[usize],
    s2: &SpectralData,
) -> f64 {
    let mut sq = 0.0f64;
    for j in 0..s1.d {
        let a1 = s1.eta[j] * (n1[j] + m1[j]) as f64;
        let a2 = s2.eta[j] * (n2[j] + m2[j]) as f64;
        sq += (a1 - a2).powi(2);
        let b1 = m1[j] as f64 - n1[j] as f64;
        let b2 = m2[j] as f64 - n2[j] as f64;
        sq += (b1 - b2).powi(2);
    }
    for k in 0..s1.lambda.len() {
        sq += (s1.lambda[k] - s2.lambda[k]).powi(2);
    }
    sq.sqrt()
}

/// Distance between two FrequencyPoints as elements of ℝ^d × ℤ^d × ℝ^p.
pub fn point_distance(p1: &FrequencyPoint, p2: &FrequencyPoint) -> f64 {
    let mut sq = 0.0f64;
    for j in 0..p1.a.len() {
        sq += (p1.a[j] - p2.a[j]).powi(2) + ((p1.b[j] - p2.b[j]) as f64).powi(2);
    }
    for k in 0..p1.lambda.len() {
        sq += (p1.lambda[k] - p2.lambda[k]).powi(2);
    }
    sq.sqrt()
}

/// Members of g(λ(q)) converging to `target` along λ_seq. Every λ(q) must be
/// fully regular. Boundary coordinates use
/// h_j^-(q) = max(⌈a_j/(2η_j(λ(q)))⌉, ⌈(1−b_j)/2⌉, 1).
pub fn approach_sequence(
    g: &GroupSpec,
    target: &FrequencyPoint,
    lambda_seq: &[Vec<f64>],
    d: usize,
    tol: f64,
) -> Result<Vec<FrequencyPoint>> {
    let spec0 = spectral_decompose(g, &target.lambda, d, tol)?;
    let mut out = Vec::with_capacity(lambda_seq.len());
    for lam in lambda_seq {
        let spec = spectral_decompose(g, lam, d, tol)?;
        let mut a = Vec::with_capacity(d);
        let mut class = Vec::with_capacity(d);
        for j in 0..d {
            let etaq = spec.eta[j];
            if etaq == 0.0 {
                return Err(Error::Invalid(format!(
                    "approach sequence requires eta_{j} > 0 along the sequence"
                )));
            }
            let h = match target.class[j] {
                CoordClass::Regular => {
                    let eta0 = spec0.eta[j];
                    let h = (target.a[j] - eta0 * target.b[j] as f64) / (2.0 * eta0);
                    if (h - h.round()).abs() > 1e-6 || h.round() < -0.5 {
                        return Err(Error::Invalid(format!(
                            "target coordinate {j} is not a member (h = {h})"
                        )));
                    }
                    h.round() as i64
                }
                CoordClass::Boundary => {
                    let c1 = (target.a[j] / (2.0 * etaq)).ceil() as i64;
                    let c2 = ((1.0 - target.b[j] as f64) / 2.0).ceil() as i64;
                    // h ≥ −b keeps the second Hermite index h + b nonnegative
                    c1.max(c2).max(1).max(-target.b[j])
                }
            };
            a.push(etaq * (2 * h + target.b[j]) as f64);
            class.push(CoordClass::Regular);
        }
        out.push(FrequencyPoint {
            a,
            b: target.b.clone(),
            lambda: lam.clone(),
            class,
        });
    }
    Ok(out)
}

fn adaptive_simpson_rec(
    f: &mut dyn FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: usize,
) -> (Complex64, f64) {
    let m = (a + b) / 2.0;
    let lm = (a + m) / 2.0;
    let rm = (m + b) / 2.0;
    let flm = f(lm);
    let frm = f(rm);
    let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
    let err = (left + right - whole).norm() / 15.0;
    if depth == 0 || err <= tol {
        return (left + right + (left + right - whole) / 15.0, err);
    }
    let (lv, le) = adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1);
    let (rv, re) = adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
    (lv + rv, le + re)
}

/// Adaptive Simpson quadrature of ∫_a^b f with error estimate.
pub fn adaptive_simpson(
    f: &mut dyn FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    tol: f64,
) -> (Complex64, f64) {
    let fa = f(a);
    let m = (a + b) / 2.0;
    let fm = f(m);
    let fb = f(b);
    let whole = (fa + fm * 4.0 + fb) * ((b - a) / 6.0);
    adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 24)
}

/// One-coordinate integral against dμ^λ_{j,b_j}: the 2η_j-weighted comb sum
/// for η_j > 0, Lebesgue on [0, a_max] for η_j = 0. Returns the value and a
/// truncation/quadrature error estimate.
pub fn integrate_mu_j(
    theta: &mut dyn FnMut(f64) -> Complex64,
    eta_j: f64,
    b_j: i64,
    a_max: f64,
) -> Result<(Complex64, f64)> {
    if a_max <= 0.0 {
        return Err(Error::Invalid(format!("a_max must be positive, got {a_max}")));
    }
    if eta_j < 0.0 {
        return Err(Error::Invalid("eta_j must be nonnegative".into()));
    }
    if eta_j == 0.0 {
        let (v, e) = adaptive_simpson(theta, 0.0, a_max, 1e-12);
        return Ok((v, e));
    }
    let mut sum = Complex64::ZERO;
    let mut last = 0.0f64;
    let mut k = 0u64;
    loop {
        let a = (2 * k + b_j.unsigned_abs()) as f64 * eta_j;
        if a > a_max {
            break;
        }
        let term = theta(a) * (2.0 * eta_j);
        sum += term;
        last = term.norm();
        k += 1;
    }
    Ok((sum, last))
}

/// ∫_{ℝ^p} ( ∫_{g(λ)} θ dμ^λ ) dλ with the λ-rule tensorized over central
/// coordinates, combs truncated at a_max and |b_j| ≤ b_range.
pub fn integrate_ghat(
    theta: &dyn Fn(&FrequencyPoint) -> Complex64,
    g: &GroupSpec,
    lambda_rule: &QuadratureRule,
    b_range: i64,
    a_max: f64,
    d: usize,
    tol: f64,
) -> Result<(Complex64, f64)> {
    let nl = lambda_rule.len();
    let npts = nl.pow(g.p as u32);
    let mut total = Complex64::ZERO;
    let mut tail = 0.0f64;
    for flat in 0..npts {
        let mut rem = flat;
        let mut lam = Vec::with_capacity(g.p);
        let mut wl = 1.0f64;
        for _ in 0..g.p {
            let i = rem % nl;
            rem /= nl;
            lam.push(lambda_rule.nodes[i]);
            wl *= lambda_rule.weights[i];
        }
        let spec = spectral_decompose(g, &lam, d, 1e-10)?;
        let (inner, est) = inner_mu_integral(theta, &spec, b_range, a_max)?;
        total += inner * wl;
        tail += est * wl.abs();
    }
    if tail > 0.3 * total.norm() + tol {
        return Err(Error::Unreachable {
            what: format!("dmu truncation estimate {tail:.3e} vs value {:.3e}", total.norm()),
            tol,
        });
    }
    Ok((total, tail))
}

/// ∫_{g(λ)} θ dμ^λ at one λ, truncated; returns (value, tail estimate).
pub fn inner_mu_integral(
    theta: &dyn Fn(&FrequencyPoint) -> Complex64,
    spec: &SpectralData,
    b_range: i64,
    a_max: f64,
) -> Result<(Complex64, f64)> {
    let d = spec.d;
    // composite Simpson grid for boundary coordinates
    let nseg = 128usize;
    let mut total = Complex64::ZERO;
    let mut tail = 0.0f64;
    // depth-first tensor enumeration, fixed order for determinism
    fn rec(
        theta: &dyn Fn(&FrequencyPoint) -> Complex64,
        spec: &SpectralData,
        j: usize,
        a: &mut Vec<f64>,
        b: &mut Vec<i64>,
        class: &mut Vec<CoordClass>,
        weight: f64,
        in_tail: bool,
        b_range: i64,
        a_max: f64,
        nseg: usize,
        total: &mut Complex64,
        tail: &mut f64,
    ) {
        let d = spec.d;
        if j == d {
            let pt = FrequencyPoint {
                a: a.clone(),
                b: b.clone(),
                lambda: spec.lambda.clone(),
                class: class.clone(),
            };
            let v = theta(&pt) * weight;
            *total += v;
            if in_tail {
                *tail += v.norm();
            }
            return;
        }
        let eta = spec.eta[j];
        for bj in -b_range..=b_range {
            b.push(bj);
            if eta > 0.0 {
                class.push(CoordClass::Regular);
                let mut k = 0u64;
                loop {
                    let aj = (2 * k + bj.unsigned_abs()) as f64 * eta;
                    if aj > a_max {
                        break;
                    }
                    a.push(aj);
                    rec(
                        theta,
                        spec,
                        j + 1,
                        a,
                        b,
                        class,
                        weight * 2.0 * eta,
                        in_tail || aj > 0.9 * a_max,
                        b_range,
                        a_max,
                        nseg,
                        total,
                        tail,
                    );
                    a.pop();
                    k += 1;
                }
            } else {
                class.push(CoordClass::Boundary);
                let h = a_max / nseg as f64;
                for i in 0..=nseg {
                    let aj = i as f64 * h;
                    let w = if i == 0 || i == nseg {
                        h / 3.0
                    } else if i % 2 == 1 {
                        4.0 * h / 3.0
                    } else {
                        2.0 * h / 3.0
                    };
                    a.push(aj);
                    rec(
                        theta,
                        spec,
                        j + 1,
                        a,
                        b,
                        class,
                        weight * w,
                        in_tail || aj > 0.9 * a_max,
                        b_range,
                        a_max,
                        nseg,
                        total,
                        tail,
                    );
                    a.pop();
                }
            }
            class.pop();
            b.pop();
        }
    }
    let mut a = Vec::with_capacity(d);
    let mut b = Vec::with_capacity(d);
    let mut class = Vec::with_capacity(d);
    rec(
        theta, spec, 0, &mut a, &mut b, &mut class, 1.0, false, b_range, a_max, nseg,
        &mut total, &mut tail,
    );
    Ok((total, tail))
}
