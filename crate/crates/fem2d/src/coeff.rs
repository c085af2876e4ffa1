//! Piecewise-constant SPD diffusion tensors and derived edge weights.

use crate::mesh::Mesh;
use crate::{FemError, Result};

/// Symmetric 2x2 tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Tensor2 {
    pub fn new(a11: f64, a12: f64, a22: f64) -> Tensor2 {
        Tensor2 { a11, a12, a22 }
    }

    pub fn iso(c: f64) -> Tensor2 {
        Tensor2 {
            a11: c,
            a12: 0.0,
            a22: c,
        }
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a12 * v[0] + self.a22 * v[1],
        ]
    }

    /// v . A w
    pub fn bilinear(&self, v: [f64; 2], w: [f64; 2]) -> f64 {
        let aw = self.apply(w);
        v[0] * aw[0] + v[1] * aw[1]
    }

    /// (lambda_min, lambda_max), closed form.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let t = 0.5 * (self.a11 + self.a22);
        let d = (0.25 * (self.a11 - self.a22).powi(2) + self.a12 * self.a12).sqrt();
        (t - d, t + d)
    }

    pub fn is_spd(&self) -> bool {
        let (lo, _) = self.eigenvalues();
        lo > 0.0
    }

    /// Spectral function f(A) = Q f(Lambda) Q^T.
    fn spectral(&self, f: impl Fn(f64) -> f64) -> Tensor2 {
        let (lo, hi) = self.eigenvalues();
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            return Tensor2::iso(f(0.5 * (lo + hi)));
        }
        // eigenvector for hi
        let (vx, vy) = if self.a12.abs() > (self.a11 - hi).abs() {
            (self.a12, hi - self.a11)
        } else {
            (hi - self.a22, self.a12)
        };
        let n = (vx * vx + vy * vy).sqrt();
        let (vx, vy) = (vx / n, vy / n);
        let (fh, fl) = (f(hi), f(lo));
        // f(A) = fl I + (fh - fl) v v^T
        Tensor2 {
            a11: fl + (fh - fl) * vx * vx,
            a12: (fh - fl) * vx * vy,
            a22: fl + (fh - fl) * vy * vy,
        }
    }

    pub fn sqrt(&self) -> Tensor2 {
        self.spectral(f64::sqrt)
    }

    pub fn inv_sqrt(&self) -> Tensor2 {
        self.spectral(|l| 1.0 / l.sqrt())
    }

    pub fn inverse(&self) -> Tensor2 {
        self.spectral(|l| 1.0 / l)
    }
}

/// Piecewise-constant coefficient: one tensor per subdomain id.
#[derive(Debug, Clone)]
pub struct Coefficient {
    pub tensors: Vec<Tensor2>,
}

impl Coefficient {
    pub fn isotropic(values: &[f64]) -> Coefficient {
        Coefficient {
            tensors: values.iter().map(|&c| Tensor2::iso(c)).collect(),
        }
    }

    /// SPD check and the per-subdomain eigenvalue-ratio bound.
    pub fn validate(&self, kappa: f64) -> Result<()> {
        for (i, t) in self.tensors.iter().enumerate() {
            let (lo, hi) = t.eigenvalues();
            if !(lo > 0.0) || !lo.is_finite() || !hi.is_finite() || hi / lo > kappa {
                return Err(FemError::BadCoefficient {
                    subdomain: i,
                    kappa,
                });
            }
        }
        Ok(())
    }

    pub fn on_element(&self, mesh: &Mesh, k: usize) -> &Tensor2 {
        &self.tensors[mesh.subdomain_id[k]]
    }

    pub fn lambda_min(&self, mesh: &Mesh, k: usize) -> f64 {
        self.on_element(mesh, k).eigenvalues().0
    }

    pub fn lambda_max(&self, mesh: &Mesh, k: usize) -> f64 {
        self.on_element(mesh, k).eigenvalues().1
    }
}

/// Edge quantities derived from the two neighboring tensors. On boundary
/// edges the missing plus side mirrors the minus side, so theta = 1/2,
/// omega = 1/2, alpha_h = lambda^- / 2.
#[derive(Debug, Clone, Copy)]
pub struct EdgeWeights {
    /// min eigenvalues on K_F^- / K_F^+
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    /// max eigenvalues on K_F^- / K_F^+
    pub big_lambda_minus: f64,
    pub big_lambda_plus: f64,
    /// lambda_F: min of the two on interior edges, minus side on boundary
    pub lambda_f: f64,
    /// tangential-recovery weight Lambda^- / (Lambda^- + Lambda^+)
    pub theta: f64,
    /// harmonic average of lambda over F
    pub alpha_h: f64,
    /// DG averaging weights, omega^- + omega^+ = 1
    pub omega_minus: f64,
    pub omega_plus: f64,
}

pub fn edge_weights(mesh: &Mesh, coeff: &Coefficient, f: usize) -> EdgeWeights {
    let (km, kp) = mesh.elements_of_edge[f];
    let (lm, bm) = coeff.on_element(mesh, km).eigenvalues();
    let (lp, bp) = match kp {
        Some(kp) => coeff.on_element(mesh, kp).eigenvalues(),
        None => (lm, bm),
    };
    EdgeWeights {
        lambda_minus: lm,
        lambda_plus: lp,
        big_lambda_minus: bm,
        big_lambda_plus: bp,
        lambda_f: if kp.is_some() { lm.min(lp) } else { lm },
        theta: bm / (bm + bp),
        alpha_h: lm * lp / (lm + lp),
        omega_minus: lp / (lm + lp),
        omega_plus: lm / (lm + lp),
    }
}
