//! 2-step nilpotent groups defined by antisymmetric structure matrices:
//! σ, the group law, U^(λ), and invariant vector fields.

use crate::error::{Error, Result};
use crate::spectral::SpectralData;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Deserialize;

/// Group on ℝ^m × ℝ^p with law (Z,s)(Z',s') = (Z+Z', s+s'+½σ(Z,Z')),
/// σ_k(Z,Z') = ⟨Z, U_k Z'⟩ for p antisymmetric m×m matrices U_k.
#[derive(Debug, Clone)]
pub struct GroupSpec {
    pub m: usize,
    pub p: usize,
    pub u: Vec<DMatrix<f64>>,
    name: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub z: DVector<f64>,
    pub s: DVector<f64>,
}

impl GroupElement {
    pub fn new(z: Vec<f64>, s: Vec<f64>) -> Self {
        GroupElement {
            z: DVector::from_vec(z),
            s: DVector::from_vec(s),
        }
    }
}

#[derive(Deserialize)]
struct GroupConfig {
    builtin: Option<String>,
    d: Option<usize>,
    m: Option<usize>,
    p: Option<usize>,
    matrices: Option<Vec<Vec<Vec<f64>>>>,
}

const ANTISYM_TOL: f64 = 1e-12;

impl GroupSpec {
    /// Validates antisymmetry: symmetrized when within 1e-12, rejected otherwise.
    pub fn new(m: usize, p: usize, mats: Vec<DMatrix<f64>>) -> Result<Self> {
        if m < 1 || p < 1 {
            return Err(Error::Invalid(format!("need m >= 1 and p >= 1, got m={m} p={p}")));
        }
        if mats.len() != p {
            return Err(Error::Dimension(format!(
                "expected {p} structure matrices, got {}",
                mats.len()
            )));
        }
        let mut u = Vec::with_capacity(p);
        for mat in mats {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(Error::Dimension(format!(
                    "structure matrix is {}x{}, expected {m}x{m}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            let scale = mat.amax().max(1.0);
            let dev = (&mat + mat.transpose()).amax();
            if dev > ANTISYM_TOL * scale {
                return Err(Error::NotAntisymmetric(dev));
            }
            u.push((&mat - mat.transpose()) * 0.5);
        }
        Ok(GroupSpec { m, p, u, name: None })
    }

    /// ℍ^d: m = 2d, p = 1, σ((x,y),(x',y')) = ⟨y,x'⟩ − ⟨y',x⟩.
    pub fn heisenberg(d: usize) -> Self {
        let m = 2 * d;
        let mut u1 = DMatrix::zeros(m, m);
        for j in 0..d {
            u1[(j, d + j)] = -1.0;
            u1[(d + j, j)] = 1.0;
        }
        GroupSpec {
            m,
            p: 1,
            u: vec![u1],
            name: Some(format!("heisenberg:{d}")),
        }
    }

    /// The 4×2 example: U_1 = diag(J, −J), U_2 = offdiag(S, −S) with
    /// J = [[0,1],[−1,0]], S = [[0,1],[1,0]]; η_±(λ) = ||λ_1| ± |λ_2||.
    pub fn example_4x2() -> Self {
        let mut u1 = DMatrix::zeros(4, 4);
        u1[(0, 1)] = 1.0;
        u1[(1, 0)] = -1.0;
        u1[(2, 3)] = -1.0;
        u1[(3, 2)] = 1.0;
        let mut u2 = DMatrix::zeros(4, 4);
        u2[(0, 3)] = 1.0;
        u2[(1, 2)] = 1.0;
        u2[(2, 1)] = -1.0;
        u2[(3, 0)] = -1.0;
        GroupSpec {
            m: 4,
            p: 2,
            u: vec![u1, u2],
            name: Some("example-4x2".into()),
        }
    }

    /// Resolve "heisenberg:d" or "example-4x2".
    pub fn by_name(name: &str) -> Result<Self> {
        if let Some(ds) = name.strip_prefix("heisenberg:") {
            let d: usize = ds
                .parse()
                .map_err(|_| Error::UnknownBuiltin(name.to_string()))?;
            if d == 0 {
                return Err(Error::UnknownBuiltin(name.to_string()));
            }
            return Ok(GroupSpec::heisenberg(d));
        }
        if name == "example-4x2" {
            return Ok(GroupSpec::example_4x2());
        }
        Err(Error::UnknownBuiltin(name.to_string()))
    }

    /// JSON config: {"builtin": "heisenberg", "d": 1} / {"builtin": "example-4x2"}
    /// or {"m":…, "p":…, "matrices": [[[…]]]}.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: GroupConfig = serde_json::from_str(text)?;
        if let Some(b) = cfg.builtin {
            let full = if b == "heisenberg" {
                format!("heisenberg:{}", cfg.d.unwrap_or(1))
            } else {
                b
            };
            return GroupSpec::by_name(&full);
        }
        let (m, p) = match (cfg.m, cfg.p) {
            (Some(m), Some(p)) => (m, p),
            _ => return Err(Error::Invalid("config must declare m and p (or builtin)".into())),
        };
        let rows = cfg
            .matrices
            .ok_or_else(|| Error::Invalid("config must declare matrices".into()))?;
        let mats = rows
            .into_iter()
            .map(|rows| {
                let nr = rows.len();
                let nc = rows.first().map(|r| r.len()).unwrap_or(0);
                if rows.iter().any(|r| r.len() != nc) {
                    return Err(Error::Dimension("ragged matrix rows".into()));
                }
                Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
            })
            .collect::<Result<Vec<_>>>()?;
        GroupSpec::new(m, p, mats)
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// FNV-1a hash of the canonical matrix data, for CSV metadata.
    pub fn content_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        feed(&(self.m as u64).to_le_bytes());
        feed(&(self.p as u64).to_le_bytes());
        for u in &self.u {
            for v in u.iter() {
                feed(&v.to_le_bytes());
            }
        }
        h
    }

    /// σ(Z,Z') with k-th component ⟨Z, U_k Z'⟩.
    pub fn sigma(&self, z: &DVector<f64>, zp: &DVector<f64>) -> Result<DVector<f64>> {
        if z.len() != self.m || zp.len() != self.m {
            return Err(Error::Dimension(format!(
                "sigma expects vectors of length {}, got {} and {}",
                self.m,
                z.len(),
                zp.len()
            )));
        }
        Ok(DVector::from_iterator(
            self.p,
            self.u.iter().map(|u| z.dot(&(u * zp))),
        ))
    }

    /// Σ_k λ_k U_k.
    pub fn u_lambda(&self, lambda: &[f64]) -> Result<DMatrix<f64>> {
        if lambda.len() != self.p {
            return Err(Error::Dimension(format!(
                "lambda must have length {}, got {}",
                self.p,
                lambda.len()
            )));
        }
        let mut out = DMatrix::zeros(self.m, self.m);
        for (lk, uk) in lambda.iter().zip(self.u.iter()) {
            out += uk * *lk;
        }
        Ok(out)
    }

    /// (Z+Z', s+s'+½σ(Z,Z')).
    pub fn multiply(&self, w1: &GroupElement, w2: &GroupElement) -> Result<GroupElement> {
        let sig = self.sigma(&w1.z, &w2.z)?;
        if w1.s.len() != self.p || w2.s.len() != self.p {
            return Err(Error::Dimension("central part has wrong length".into()));
        }
        Ok(GroupElement {
            z: &w1.z + &w2.z,
            s: &w1.s + &w2.s + sig * 0.5,
        })
    }

    pub fn inverse(&self, w: &GroupElement) -> GroupElement {
        GroupElement {
            z: -&w.z,
            s: -&w.s,
        }
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            z: DVector::zeros(self.m),
            s: DVector::zeros(self.p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// X_j = ∂_{x_j} + ½ η_j(∇_s) y_j
    X(usize),
    /// Y_j = ∂_{y_j} − ½ η_j(∇_s) x_j
    Y(usize),
    /// X̃_j = ∂_{x_j} − ½ η_j(∇_s) y_j
    XTilde(usize),
    /// Ỹ_j = ∂_{y_j} + ½ η_j(∇_s) x_j
    YTilde(usize),
    /// ∂_{s_k}
    Ds(usize),
}

/// Left/right invariant fields applied to f at w by 4th-order central
/// differences. Coordinates are in the adapted basis of `spectral`
/// (x_1..x_d, y_1..y_d, r…). η_j(∇_s) acts as multiplication by iη_j(λ):
/// the caller's f must have the form e^{i⟨λ,s⟩}·g(Z) with λ = spectral.lambda
/// for the X/Y/X̃/Ỹ kinds to be meaningful.
pub fn apply_field<F>(
    g: &GroupSpec,
    spectral: &SpectralData,
    kind: FieldKind,
    f: F,
    z: &[f64],
    s: &[f64],
    h: f64,
) -> Result<Complex64>
where
    F: Fn(&[f64], &[f64]) -> Complex64,
{
    if h <= 0.0 {
        return Err(Error::Invalid(format!("step must be positive, got {h}")));
    }
    if z.len() != g.m || s.len() != g.p {
        return Err(Error::Dimension("element has wrong dimensions".into()));
    }
    let d = spectral.d;
    let diff_z = |idx: usize| -> Complex64 {
        let mut zs = z.to_vec();
        let eval = |zs: &mut Vec<f64>, t: f64| {
            zs[idx] = z[idx] + t;
            f(zs, s)
        };
        (-eval(&mut zs, 2.0 * h) + eval(&mut zs, h) * 8.0 - eval(&mut zs, -h) * 8.0
            + eval(&mut zs, -2.0 * h))
            / (12.0 * h)
    };
    match kind {
        FieldKind::X(j) | FieldKind::XTilde(j) => {
            if j >= d {
                return Err(Error::Dimension(format!("coordinate {j} out of range (d={d})")));
            }
            let sign = if matches!(kind, FieldKind::X(_)) { 1.0 } else { -1.0 };
            let central = Complex64::new(0.0, 0.5 * sign * spectral.eta[j] * z[d + j]) * f(z, s);
            Ok(diff_z(j) + central)
        }
        FieldKind::Y(j) | FieldKind::YTilde(j) => {
            if j >= d {
                return Err(Error::Dimension(format!("coordinate {j} out of range (d={d})")));
            }
            let sign = if matches!(kind, FieldKind::Y(_)) { -1.0 } else { 1.0 };
            let central = Complex64::new(0.0, 0.5 * sign * spectral.eta[j] * z[j]) * f(z, s);
            Ok(diff_z(d + j) + central)
        }
        FieldKind::Ds(k) => {
            if k >= g.p {
                return Err(Error::Dimension(format!("central coordinate {k} out of range")));
            }
            let mut ss = s.to_vec();
            let mut eval = |t: f64| {
                ss[k] = s[k] + t;
                f(z, &ss)
            };
            Ok(
                (-eval(2.0 * h) + eval(h) * 8.0 - eval(-h) * 8.0 + eval(-2.0 * h))
                    / (12.0 * h),
            )
        }
    }
}
