//! Quadrature rules and the edge Gauss-Legendre polynomial family.
//!
//! Triangle rules are conical-product Gauss rules on the reference triangle
//! (0,0), (1,0), (0,1); they have strictly interior points, which matters when
//! integrating singular exact solutions whose gradient blows up at a vertex.

use crate::{FemError, Result};

pub const MAX_DEGREE: usize = 25;

/// Evaluate the Legendre polynomial P_j(s) by the three-term recurrence.
pub fn legendre(j: usize, s: f64) -> f64 {
    match j {
        0 => 1.0,
        1 => s,
        _ => {
            let mut pm = 1.0;
            let mut p = s;
            for n in 1..j {
                let nf = n as f64;
                let next = ((2.0 * nf + 1.0) * s * p - nf * pm) / (nf + 1.0);
                pm = p;
                p = next;
            }
            p
        }
    }
}

/// P_j and its derivative P_j'(s).
pub fn legendre_with_deriv(j: usize, s: f64) -> (f64, f64) {
    if j == 0 {
        return (1.0, 0.0);
    }
    let mut pm = 1.0;
    let mut p = s;
    for n in 1..j {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * s * p - nf * pm) / (nf + 1.0);
        pm = p;
        p = next;
    }
    // derivative from (1-s^2) P_j' = j (P_{j-1} - s P_j)
    let jf = j as f64;
    let dp = if (1.0 - s * s).abs() > 1e-14 {
        jf * (pm - s * p) / (1.0 - s * s)
    } else {
        // endpoint limit: P_j'(+-1) = (+-1)^{j-1} j(j+1)/2
        let sign: f64 = if s > 0.0 { 1.0 } else { -1.0 };
        sign.powi(j as i32 - 1) * jf * (jf + 1.0) / 2.0
    };
    (p, dp)
}

/// Gauss-Legendre nodes and weights on [-1, 1], exact for degree 2n-1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev initial guess, then Newton.
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        weights[i] = w;
        nodes[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Quadrature rule on the reference edge [-1, 1].
#[derive(Debug, Clone)]
pub struct EdgeQuad {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Quadrature rule on the reference triangle (0,0), (1,0), (0,1).
/// Weights sum to the reference area 1/2.
#[derive(Debug, Clone)]
pub struct TriQuad {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

pub fn quad_edge(degree: usize) -> Result<EdgeQuad> {
    if degree > MAX_DEGREE {
        return Err(FemError::UnsupportedQuadDegree {
            degree,
            max: MAX_DEGREE,
        });
    }
    let n = degree / 2 + 1;
    let (nodes, weights) = gauss_legendre(n);
    Ok(EdgeQuad {
        nodes,
        weights,
        degree,
    })
}

pub fn quad_tri(degree: usize) -> Result<TriQuad> {
    if degree > MAX_DEGREE {
        return Err(FemError::UnsupportedQuadDegree {
            degree,
            max: MAX_DEGREE,
        });
    }
    // Conical product: x = xi (1 - eta), y = eta with Jacobian (1 - eta).
    let nx = degree / 2 + 1;
    let ny = (degree + 1) / 2 + 1;
    let (gx, wx) = gauss_legendre(nx);
    let (gy, wy) = gauss_legendre(ny);
    let mut points = Vec::with_capacity(nx * ny);
    let mut weights = Vec::with_capacity(nx * ny);
    for (j, &etah) in gy.iter().enumerate() {
        let eta = 0.5 * (etah + 1.0);
        for (i, &xih) in gx.iter().enumerate() {
            let xi = 0.5 * (xih + 1.0);
            points.push([xi * (1.0 - eta), eta]);
            weights.push(0.25 * wx[i] * wy[j] * (1.0 - eta));
        }
    }
    Ok(TriQuad {
        points,
        weights,
        degree,
    })
}

impl TriQuad {
    /// Map the rule to a physical triangle; returns (points, weights).
    pub fn mapped(&self, v: &[[f64; 2]; 3]) -> (Vec<[f64; 2]>, Vec<f64>) {
        let jac = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1])
            - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        let points = self
            .points
            .iter()
            .map(|&[x, y]| {
                [
                    v[0][0] + x * (v[1][0] - v[0][0]) + y * (v[2][0] - v[0][0]),
                    v[0][1] + x * (v[1][1] - v[0][1]) + y * (v[2][1] - v[0][1]),
                ]
            })
            .collect();
        // reference weights sum to 1/2 and the physical area is |jac|/2
        let weights = self.weights.iter().map(|w| w * jac.abs()).collect();
        (points, weights)
    }
}

impl EdgeQuad {
    /// Map to the physical segment from `a` to `b`; weights carry ds.
    pub fn mapped(&self, a: [f64; 2], b: [f64; 2]) -> (Vec<[f64; 2]>, Vec<f64>) {
        let h = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let points = self
            .nodes
            .iter()
            .map(|&s| {
                let t = 0.5 * (s + 1.0);
                [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
            })
            .collect();
        let weights = self.weights.iter().map(|w| w * 0.5 * h).collect();
        (points, weights)
    }
}

/// ||L_{j,F}||_{0,F}^2 = h_F / (2j + 1).
pub fn edge_norm_sq(j: usize, h_f: f64) -> f64 {
    h_f / (2.0 * j as f64 + 1.0)
}
