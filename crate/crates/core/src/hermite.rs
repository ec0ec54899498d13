//! L²-normalized Hermite functions, ladder operators on coefficient vectors,
//! and quadrature rules (Gauss–Hermite, Gauss–Legendre, periodic trapezoid).

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Finite Hermite-coefficient expansion of an L² function of one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    pub coeffs: Vec<Complex64>,
}

impl CoeffVector {
    pub fn basis(n: usize) -> Self {
        let mut coeffs = vec![Complex64::ZERO; n + 1];
        coeffs[n] = Complex64::ONE;
        CoeffVector { coeffs }
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self, other⟩ with the second slot conjugated.
    pub fn inner(&self, other: &CoeffVector) -> Complex64 {
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.len() > 1 && self.coeffs.last().map(|c| c.norm_sqr()) == Some(0.0) {
            self.coeffs.pop();
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderKind {
    Create,
    Annihilate,
    Multiply,
    Differentiate,
}

/// C H_n = √(2(n+1)) H_{n+1}, A H_n = √(2n) H_{n-1},
/// M H_n = (√n H_{n-1} + √(n+1) H_{n+1})/√2,
/// D H_n = (√n H_{n-1} − √(n+1) H_{n+1})/√2.
pub fn ladder_apply(kind: LadderKind, v: &CoeffVector) -> CoeffVector {
    let n = v.coeffs.len();
    let mut out = vec![Complex64::ZERO; n + 1];
    for (k, c) in v.coeffs.iter().enumerate() {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let kf = k as f64;
        match kind {
            LadderKind::Create => out[k + 1] += c * (2.0 * (kf + 1.0)).sqrt(),
            LadderKind::Annihilate => {
                if k > 0 {
                    out[k - 1] += c * (2.0 * kf).sqrt();
                }
            }
            LadderKind::Multiply => {
                if k > 0 {
                    out[k - 1] += c * (kf / 2.0).sqrt();
                }
                out[k + 1] += c * ((kf + 1.0) / 2.0).sqrt();
            }
            LadderKind::Differentiate => {
                if k > 0 {
                    out[k - 1] += c * (kf / 2.0).sqrt();
                }
                out[k + 1] -= c * ((kf + 1.0) / 2.0).sqrt();
            }
        }
    }
    CoeffVector { coeffs: out }.trimmed()
}

/// Proven bound (2n+2ℓ)^{ℓ/2} for ‖M^ℓ H_n‖ and ‖H_n^{(ℓ)}‖.
pub fn norm_bound(n: usize, l: usize) -> f64 {
    (2.0 * n as f64 + 2.0 * l as f64).powf(l as f64 / 2.0)
}

/// Values of H_0..H_nmax at one point, held as q[k]·2^{exp2} to avoid
/// under/overflow of the shared Gaussian factor for large degree or argument.
#[derive(Debug, Clone)]
pub struct PsiBlock {
    pub q: Vec<f64>,
    pub exp2: f64,
}

impl PsiBlock {
    pub fn new(nmax: usize, x: f64) -> Self {
        let mut q = Vec::with_capacity(nmax + 1);
        let mut exp2 = -x * x / 2.0 * std::f64::consts::LOG2_E;
        q.push(std::f64::consts::PI.powf(-0.25));
        if nmax >= 1 {
            q.push(std::f64::consts::SQRT_2 * x * q[0]);
        }
        for k in 1..nmax {
            let kf = k as f64;
            let next = (2.0 / (kf + 1.0)).sqrt() * x * q[k] - (kf / (kf + 1.0)).sqrt() * q[k - 1];
            q.push(next);
            if next.abs() > 1e230 {
                for v in q.iter_mut() {
                    *v *= 2f64.powi(-800);
                }
                exp2 += 800.0;
            }
        }
        PsiBlock { q, exp2 }
    }

    pub fn value(&self, n: usize) -> f64 {
        self.q[n] * self.exp2.exp2()
    }
}

/// L²-normalized Hermite function H_n(x) via the stable three-term recurrence.
pub fn hermite_eval(n: usize, x: f64) -> f64 {
    PsiBlock::new(n, x).value(n)
}

/// η^{1/4}·H_n(√η·x), the L²-normalized rescaling satisfying
/// (−∂² + η²x²) H_{n,η} = η(2n+1) H_{n,η}.
pub fn rescaled_hermite_eval(n: usize, eta: f64, x: f64) -> Result<f64> {
    if eta <= 0.0 {
        return Err(Error::Invalid(format!("eta must be positive, got {eta}")));
    }
    Ok(eta.powf(0.25) * hermite_eval(n, eta.sqrt() * x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadKind {
    GaussHermite,
    GaussLegendre,
    TrapezoidPeriodic,
}

/// Nodes/weights. For Gauss–Hermite, `log_total_weights[i] = ln w_i + x_i²`
/// so that ∫f dx ≈ Σ exp(ltw_i)·f(x_i) stays usable when w_i underflows.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub kind: QuadKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub log_total_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫ f(x) dx over the rule's natural domain (ℝ for Gauss–Hermite, the
    /// interval for Gauss–Legendre, [−π,π) for the trapezoid rule).
    pub fn integrate<F: FnMut(f64) -> Complex64>(&self, mut f: F) -> Complex64 {
        match self.kind {
            QuadKind::GaussHermite => self
                .nodes
                .iter()
                .zip(self.log_total_weights.iter())
                .map(|(&x, &ltw)| f(x) * ltw.exp())
                .sum(),
            _ => self
                .nodes
                .iter()
                .zip(self.weights.iter())
                .map(|(&x, &w)| f(x) * w)
                .sum(),
        }
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix by the implicit QL method.
/// `d` holds the diagonal, `e` the subdiagonal (one shorter).
fn tridiag_eigenvalues(d: &mut [f64], e_in: &[f64]) -> Result<()> {
    let n = d.len();
    let mut e = vec![0.0f64; n];
    e[..n - 1].copy_from_slice(e_in);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Eigen("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(())
}

/// N-node Gauss–Hermite rule for ∫e^{−x²}p(x)dx, exact up to degree 2N−1.
/// Nodes from the Jacobi matrix; total weights from 1/Σ_{k<N} H_k(x_i)².
pub fn gauss_hermite_rule(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::Invalid("quadrature rule needs N >= 1".into()));
    }
    let mut d = vec![0.0f64; n];
    let e: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    tridiag_eigenvalues(&mut d, &e)?;
    // enforce exact symmetry of the node set
    for i in 0..n / 2 {
        let v = (d[i] - d[n - 1 - i]) / 2.0;
        d[i] = v;
        d[n - 1 - i] = -v;
    }
    if n % 2 == 1 {
        d[n / 2] = 0.0;
    }
    let mut weights = Vec::with_capacity(n);
    let mut ltw = Vec::with_capacity(n);
    for &x in d.iter() {
        let block = PsiBlock::new(n.saturating_sub(1), x);
        // tw = 1/Σψ_k² ; ln tw = −ln(Σq²) − 2·exp2·ln2, with Σq² accumulated
        // relative to max|q| so large rules don't overflow
        let qmax = block.q.iter().fold(0.0f64, |a, q| a.max(q.abs()));
        let sq: f64 = block.q.iter().map(|q| (q / qmax) * (q / qmax)).sum();
        let log_tw =
            -sq.ln() - 2.0 * qmax.ln() - 2.0 * block.exp2 * std::f64::consts::LN_2;
        ltw.push(log_tw);
        weights.push((log_tw - x * x).exp());
    }
    Ok(QuadratureRule {
        kind: QuadKind::GaussHermite,
        nodes: d,
        weights,
        log_total_weights: ltw,
    })
}

/// N-node Gauss–Legendre rule on [a, b].
pub fn gauss_legendre_rule(n: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::Invalid("quadrature rule needs N >= 1".into()));
    }
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by recurrence
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 1..n {
            let kf = k as f64;
            let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    for i in 0..n {
        nodes[i] = c + h * nodes[i];
        weights[i] *= h;
    }
    let ltw = weights.iter().map(|w| w.ln()).collect();
    Ok(QuadratureRule {
        kind: QuadKind::GaussLegendre,
        nodes,
        weights,
        log_total_weights: ltw,
    })
}

/// N uniform nodes on [−π, π), weights 2π/N (spectrally accurate for smooth
/// periodic integrands).
pub fn trapezoid_rule(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::Invalid("quadrature rule needs N >= 1".into()));
    }
    let w = 2.0 * std::f64::consts::PI / n as f64;
    let nodes: Vec<f64> = (0..n)
        .map(|i| -std::f64::consts::PI + w * i as f64)
        .collect();
    let weights = vec![w; n];
    let ltw = weights.iter().map(|x| x.ln()).collect();
    Ok(QuadratureRule {
        kind: QuadKind::TrapezoidPeriodic,
        nodes,
        weights,
        log_total_weights: ltw,
    })
}

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

static GH_CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();

/// Cached Gauss–Hermite rule.
pub fn gauss_hermite_cached(n: usize) -> Result<Arc<QuadratureRule>> {
    let cache = GH_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    if let Some(r) = map.get(&n) {
        return Ok(r.clone());
    }
    let rule = Arc::new(gauss_hermite_rule(n)?);
    map.insert(n, rule.clone());
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn h0_at_zero() {
        assert!((hermite_eval(0, 0.0) - std::f64::consts::PI.powf(-0.25)).abs() < 1e-15);
    }

    #[test]
    fn h1_odd() {
        assert_eq!(hermite_eval(1, 0.0), 0.0);
    }

    #[test]
    fn h3_normalized_by_quadrature() {
        let rule = gauss_hermite_rule(64).unwrap();
        let v = rule.integrate(|x| c(hermite_eval(3, x) * hermite_eval(3, x)));
        assert!((v.re - 1.0).abs() < 1e-12, "got {}", v.re);
    }

    #[test]
    fn gh_moments() {
        let rule = gauss_hermite_rule(20).unwrap();
        let m0: f64 = rule.weights.iter().sum();
        assert!((m0 - std::f64::consts::PI.sqrt()).abs() < 1e-14);
        let m2: f64 = rule
            .nodes
            .iter()
            .zip(rule.weights.iter())
            .map(|(x, w)| w * x * x)
            .sum();
        assert!((m2 - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-14);
    }

    #[test]
    fn orthonormality_up_to_32() {
        let rule = gauss_hermite_rule(64).unwrap();
        let blocks: Vec<PsiBlock> = rule.nodes.iter().map(|&x| PsiBlock::new(32, x)).collect();
        for n in 0..=32usize {
            for m in n..=32usize {
                let mut s = 0.0;
                for (i, b) in blocks.iter().enumerate() {
                    s += rule.log_total_weights[i].exp() * b.value(n) * b.value(m);
                }
                let expect = if n == m { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-10, "n={n} m={m} got {s}");
            }
        }
    }

    #[test]
    fn h5_h7_orthogonal() {
        let rule = gauss_hermite_rule(64).unwrap();
        let v = rule.integrate(|x| c(hermite_eval(5, x) * hermite_eval(7, x)));
        assert!(v.re.abs() < 1e-12);
    }

    #[test]
    fn rescaled_value_and_unit_norm() {
        let v = rescaled_hermite_eval(0, 4.0, 0.0).unwrap();
        assert!((v - 4f64.powf(0.25) * std::f64::consts::PI.powf(-0.25)).abs() < 1e-12);
        assert!(rescaled_hermite_eval(0, 0.0, 1.0).is_err());
        // unit norm by substitution x = u/√η
        let rule = gauss_hermite_rule(64).unwrap();
        for &eta in &[0.5f64, 2.0] {
            let se: f64 = eta.sqrt();
            let v = rule.integrate(|u| {
                let x = u / se;
                let h = rescaled_hermite_eval(3, eta, x).unwrap();
                c(h * h / se)
            });
            assert!((v.re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rescaled_oscillator_equation() {
        // (−∂² + η²x²) H_{0,η} = η H_{0,η} by central differences
        let eta = 4.0;
        let h = 1e-4;
        for &x in &[0.3, -0.8, 1.1] {
            let f = |t: f64| rescaled_hermite_eval(0, eta, t).unwrap();
            let d2 = (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h)
                - f(x - 2.0 * h))
                / (12.0 * h * h);
            let lhs = -d2 + eta * eta * x * x * f(x);
            let rel = (lhs - eta * f(x)).abs() / f(x).abs().max(1e-30);
            assert!(rel < 1e-6, "x={x} rel={rel}");
        }
    }

    #[test]
    fn ladder_examples() {
        let z = ladder_apply(LadderKind::Annihilate, &CoeffVector::basis(0));
        assert!(z.norm() == 0.0);
        let cr = ladder_apply(LadderKind::Create, &CoeffVector::basis(1));
        assert_eq!(cr.coeffs.len(), 3);
        assert!((cr.coeffs[2].re - 2.0).abs() < 1e-15);
        let mu = ladder_apply(LadderKind::Multiply, &CoeffVector::basis(1));
        assert!((mu.coeffs[0].re - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((mu.coeffs[2].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ladder_consistency() {
        // (CA + Id) H_n = (2n+1) H_n, exact in coefficients
        for n in 0..12usize {
            let v = CoeffVector::basis(n);
            let ca = ladder_apply(
                LadderKind::Create,
                &ladder_apply(LadderKind::Annihilate, &v),
            );
            let got = if ca.coeffs.len() > n {
                ca.coeffs[n].re + 1.0
            } else {
                1.0
            };
            assert!((got - (2 * n + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_bound_examples() {
        assert_eq!(norm_bound(7, 0), 1.0);
        assert_eq!(norm_bound(3, 2), 10.0);
        let m2h3 = ladder_apply(
            LadderKind::Multiply,
            &ladder_apply(LadderKind::Multiply, &CoeffVector::basis(3)),
        );
        assert!(m2h3.norm() <= 10.0);
        let mh0 = ladder_apply(LadderKind::Multiply, &CoeffVector::basis(0));
        assert!((mh0.norm() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(mh0.norm() <= norm_bound(0, 1));
    }

    #[test]
    fn lemma_bound_full_range() {
        for n in 0..=16usize {
            for l in 0..=6usize {
                let mut vm = CoeffVector::basis(n);
                let mut vd = CoeffVector::basis(n);
                for _ in 0..l {
                    vm = ladder_apply(LadderKind::Multiply, &vm);
                    vd = ladder_apply(LadderKind::Differentiate, &vd);
                }
                let bound = norm_bound(n, l);
                assert!(vm.norm() <= bound + 1e-12, "M: n={n} l={l}");
                assert!(vd.norm() <= bound + 1e-12, "D: n={n} l={l}");
            }
        }
    }

    #[test]
    fn psi_block_large_degree_large_argument() {
        // no overflow/underflow breakdown: value matches within the
        // classically computable range
        let direct = hermite_eval(200, 15.0);
        let block = PsiBlock::new(200, 15.0);
        assert!((block.value(200) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        // far beyond the turning point the value must be tiny, not NaN
        let far = hermite_eval(512, 40.0);
        assert!(far.is_finite());
        assert!(far.abs() < 1e-40);
    }

    #[test]
    fn legendre_rule_moments() {
        let rule = gauss_legendre_rule(16, -1.0, 3.0).unwrap();
        let m0: f64 = rule.weights.iter().sum();
        assert!((m0 - 4.0).abs() < 1e-13);
        let m2: f64 = rule
            .nodes
            .iter()
            .zip(rule.weights.iter())
            .map(|(x, w)| w * x * x)
            .sum();
        assert!((m2 - (27.0 + 1.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_fourier_orthogonality() {
        let rule = trapezoid_rule(64).unwrap();
        let v = rule.integrate(|z| Complex64::new(0.0, 3.0 * z).exp());
        assert!(v.norm() < 1e-13);
        let v0 = rule.integrate(|_| Complex64::ONE);
        assert!((v0.re - 2.0 * std::f64::consts::PI).abs() < 1e-13);
    }
}
