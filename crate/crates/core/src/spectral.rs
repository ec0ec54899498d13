//! Spectral reduction of U^(λ): frequencies η_j(λ), adapted basis, rank,
//! generic rank, and the Pfaffian.

use crate::error::{Error, Result};
use crate::group::GroupSpec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Spectral data of U^(λ): eta sorted descending (length d, zero-padded),
/// orthogonal basis with columns (x_1..x_d, y_1..y_d, r_1..r_t) reducing
/// U^(λ) to [[0, η, 0], [−η, 0, 0], [0, 0, 0]], rank, and Pf(λ) = Πη_j.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub lambda: Vec<f64>,
    pub eta: Vec<f64>,
    pub basis: DMatrix<f64>,
    pub rank: usize,
    pub pfaffian: f64,
    pub d: usize,
}

impl SpectralData {
    /// Adapted coordinates basisᵀ·Z of a vector given in the ambient basis.
    pub fn to_adapted(&self, z: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * z
    }

    pub fn from_adapted(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.basis * u
    }
}

fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0usize;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        *v = -&*v;
    }
}

/// Reduce U^(λ) to the adapted block form. `d` is half the generic rank
/// (from [`generic_rank`]); eta is zero-padded when rank(U^(λ)) < 2d.
pub fn spectral_decompose(g: &GroupSpec, lambda: &[f64], d: usize, tol: f64) -> Result<SpectralData> {
    if tol <= 0.0 {
        return Err(Error::Invalid(format!("tol must be positive, got {tol}")));
    }
    if 2 * d > g.m {
        return Err(Error::Dimension(format!("2d = {} exceeds m = {}", 2 * d, g.m)));
    }
    let a = g.u_lambda(lambda)?;
    let a_norm = a.amax();
    let s = -(&a * &a); // symmetric PSD with eigenvalues η_j²
    let eig = s.symmetric_eigen();
    // sort eigenpairs by eigenvalue descending, index as tie-break
    let mut order: Vec<usize> = (0..g.m).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let eta_cut = tol * a_norm.max(1.0);
    let etas: Vec<f64> = order
        .iter()
        .map(|&i| eig.eigenvalues[i].max(0.0).sqrt())
        .collect();

    let mut xs: Vec<DVector<f64>> = Vec::new();
    let mut ys: Vec<DVector<f64>> = Vec::new();
    let mut eta_out: Vec<f64> = Vec::new();
    let mut idx = 0usize;
    while idx < g.m && etas[idx] > eta_cut {
        // cluster of (numerically) equal frequencies
        let eta = etas[idx];
        let mut end = idx + 1;
        while end < g.m && etas[end] > eta_cut && (eta - etas[end]).abs() <= 1e-7 * eta.max(1.0) {
            end += 1;
        }
        let cluster: Vec<DVector<f64>> = order[idx..end]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        if (end - idx) % 2 != 0 {
            return Err(Error::Eigen(format!(
                "odd cluster size {} for eta = {eta}",
                end - idx
            )));
        }
        let pairs = (end - idx) / 2;
        let mut chosen: Vec<DVector<f64>> = Vec::new(); // x and y already taken
        for _ in 0..pairs {
            // first cluster vector with significant residual after projection
            let mut x = None;
            for v in &cluster {
                let mut w = v.clone();
                for c in &chosen {
                    let proj = c.dot(&w);
                    w -= c * proj;
                }
                if w.norm() > 1e-6 {
                    w /= w.norm();
                    x = Some(w);
                    break;
                }
            }
            let mut x = x.ok_or_else(|| Error::Eigen("cluster pairing failed".into()))?;
            fix_sign(&mut x);
            let y = -(&a * &x) / eta;
            let ny = y.norm();
            if (ny - 1.0).abs() > 1e-6 {
                return Err(Error::Eigen(format!("pair vector norm {ny} != 1")));
            }
            let y = y / ny;
            chosen.push(x.clone());
            chosen.push(y.clone());
            xs.push(x);
            ys.push(y);
            eta_out.push(eta);
        }
        idx = end;
    }
    if xs.len() > d {
        return Err(Error::Eigen(format!(
            "found {} positive frequencies but d = {d}; recompute generic rank",
            xs.len()
        )));
    }
    // zero block: Gram-Schmidt the remaining eigenvectors, deterministic order
    let mut kernel: Vec<DVector<f64>> = Vec::new();
    for &i in order[idx..].iter() {
        let mut w = eig.eigenvectors.column(i).into_owned();
        for c in xs.iter().chain(ys.iter()).chain(kernel.iter()) {
            let proj = c.dot(&w);
            w -= c * proj;
        }
        if w.norm() > 1e-6 {
            w /= w.norm();
            fix_sign(&mut w);
            kernel.push(w);
        }
    }
    if xs.len() + ys.len() + kernel.len() != g.m {
        return Err(Error::Eigen("basis completion failed".into()));
    }
    let rank = 2 * xs.len();
    // pad degenerate (x_j, y_j) pairs with kernel vectors
    let mut kit = kernel.into_iter();
    while xs.len() < d {
        let x = kit
            .next()
            .ok_or_else(|| Error::Eigen("not enough kernel vectors to pad".into()))?;
        let y = kit
            .next()
            .ok_or_else(|| Error::Eigen("not enough kernel vectors to pad".into()))?;
        xs.push(x);
        ys.push(y);
        eta_out.push(0.0);
    }
    let rest: Vec<DVector<f64>> = kit.collect();
    let mut basis = DMatrix::zeros(g.m, g.m);
    for (j, v) in xs.iter().chain(ys.iter()).chain(rest.iter()).enumerate() {
        basis.set_column(j, v);
    }
    // residual against the block form
    let reduced = basis.transpose() * &a * &basis;
    let mut resid = 0.0f64;
    for i in 0..g.m {
        for j in 0..g.m {
            let expect = if i < d && j >= d && j < 2 * d && j - d == i {
                eta_out[i]
            } else if i >= d && i < 2 * d && j < d && i - d == j {
                -eta_out[j]
            } else {
                0.0
            };
            resid = resid.max((reduced[(i, j)] - expect).abs());
        }
    }
    if resid > tol.max(1e-10) * (1.0 + a_norm) * 100.0 {
        return Err(Error::Eigen(format!(
            "block reduction residual {resid:.3e} exceeds tolerance"
        )));
    }
    let pfaffian = eta_out.iter().product();
    Ok(SpectralData {
        lambda: lambda.to_vec(),
        eta: eta_out,
        basis,
        rank,
        pfaffian,
        d,
    })
}

/// rank(U^(λ)) at one λ, counting singular values above tol·max(1,‖U^(λ)‖).
pub fn rank_at(g: &GroupSpec, lambda: &[f64], tol: f64) -> Result<usize> {
    let a = g.u_lambda(lambda)?;
    let a_norm = a.amax();
    let s = -(&a * &a);
    let eig = s.symmetric_eigen();
    let cut = tol * a_norm.max(1.0);
    Ok(eig
        .eigenvalues
        .iter()
        .filter(|&&v| v.max(0.0).sqrt() > cut)
        .count())
}

/// 2d = max rank of U^(λ) over pseudo-random unit λ; deterministic per seed.
pub fn generic_rank(g: &GroupSpec, n_samples: usize, tol: f64, seed: u64) -> Result<usize> {
    if n_samples < 1 {
        return Err(Error::Invalid("need n_samples >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0usize;
    for _ in 0..n_samples {
        let mut lam: Vec<f64>;
        loop {
            lam = (0..g.p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = lam.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 1e-3 {
                lam.iter_mut().for_each(|v| *v /= n);
                break;
            }
        }
        best = best.max(rank_at(g, &lam, tol)?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_4x2_eigenvalues() {
        let g = GroupSpec::example_4x2();
        let sp = spectral_decompose(&g, &[1.0, 1.0], 2, 1e-10).unwrap();
        assert!((sp.eta[0] - 2.0).abs() < 1e-10);
        assert!(sp.eta[1].abs() < 1e-10);
        assert_eq!(sp.rank, 2);
        assert_eq!(sp.pfaffian, 0.0);
    }

    #[test]
    fn example_4x2_eta_formula_grid() {
        let g = GroupSpec::example_4x2();
        for i in 0..10 {
            for j in 0..10 {
                let l1 = -1.8 + 0.4 * i as f64;
                let l2 = -1.7 + 0.38 * j as f64;
                let sp = spectral_decompose(&g, &[l1, l2], 2, 1e-10).unwrap();
                let mut expect = [(l1.abs() + l2.abs()), (l1.abs() - l2.abs()).abs()];
                expect.sort_by(|a, b| b.partial_cmp(a).unwrap());
                assert!(
                    (sp.eta[0] - expect[0]).abs() < 1e-10
                        && (sp.eta[1] - expect[1]).abs() < 1e-10,
                    "lambda = ({l1},{l2}): got {:?}, expected {:?}",
                    sp.eta,
                    expect
                );
            }
        }
    }

    #[test]
    fn heisenberg2_unit_lambda() {
        let g = GroupSpec::heisenberg(2);
        let sp = spectral_decompose(&g, &[1.0], 2, 1e-10).unwrap();
        assert!((sp.eta[0] - 1.0).abs() < 1e-12 && (sp.eta[1] - 1.0).abs() < 1e-12);
        assert_eq!(sp.rank, 4);
        assert!((sp.pfaffian - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_zero() {
        let g = GroupSpec::heisenberg(1);
        let sp = spectral_decompose(&g, &[0.0], 1, 1e-10).unwrap();
        assert_eq!(sp.eta, vec![0.0]);
        assert_eq!(sp.rank, 0);
        assert_eq!(sp.pfaffian, 0.0);
    }

    #[test]
    fn basis_orthogonality_and_block_form() {
        let g = GroupSpec::example_4x2();
        for lam in [[0.9, 0.4], [-1.3, 0.8], [0.5, -0.5], [2.0, 0.0]] {
            let sp = spectral_decompose(&g, &lam, 2, 1e-10).unwrap();
            let gram = sp.basis.transpose() * &sp.basis;
            let mut dev = 0.0f64;
            for i in 0..4 {
                for j in 0..4 {
                    let e = if i == j { 1.0 } else { 0.0 };
                    dev = dev.max((gram[(i, j)] - e).abs());
                }
            }
            assert!(dev < 1e-10, "orthogonality dev {dev}");
            // pfaffian² = det on the nondegenerate block
            if sp.rank == 4 {
                let a = g.u_lambda(&lam).unwrap();
                let det = a.determinant();
                assert!((sp.pfaffian * sp.pfaffian - det).abs() < 1e-8 * det.abs().max(1.0));
            }
        }
    }

    #[test]
    fn homogeneity() {
        let g = GroupSpec::example_4x2();
        let sp1 = spectral_decompose(&g, &[0.7, 0.2], 2, 1e-10).unwrap();
        let sp3 = spectral_decompose(&g, &[-2.1, -0.6], 2, 1e-10).unwrap();
        for j in 0..2 {
            assert!((sp3.eta[j] - 3.0 * sp1.eta[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn generic_ranks() {
        for d in 1..=3usize {
            let g = GroupSpec::heisenberg(d);
            assert_eq!(generic_rank(&g, 8, 1e-10, 0).unwrap(), 2 * d);
        }
        assert_eq!(generic_rank(&GroupSpec::example_4x2(), 16, 1e-10, 0).unwrap(), 4);
        let mut z = GroupSpec::heisenberg(1);
        z.u[0] *= 0.0;
        assert_eq!(generic_rank(&z, 4, 1e-10, 0).unwrap(), 0);
    }

    #[test]
    fn determinism() {
        let g = GroupSpec::example_4x2();
        let a = spectral_decompose(&g, &[0.9, 0.4], 2, 1e-10).unwrap();
        let b = spectral_decompose(&g, &[0.9, 0.4], 2, 1e-10).unwrap();
        assert_eq!(a.basis, b.basis);
        assert_eq!(a.eta, b.eta);
    }
}
