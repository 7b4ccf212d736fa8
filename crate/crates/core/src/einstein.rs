//! Weight-2 densitized Einstein tensor for four-dimensional metrics.
//!
//! The classical Einstein tensor needs the inverse metric twice and
//! blows up where the metric degenerates. Rewriting it through the
//! Levi-Civita permutation symbol removes every inverse:
//!
//! ```text
//! G^{ab}·det g = −¼ g_kl ε^{akst} ε^{blpq} R_stpq
//! ```
//!
//! (ε is the integer permutation symbol; the ¼ is the usual ½ per Hodge
//! dual, applied twice). The right-hand side is polynomial in `g` and
//! `R`, so it stays finite — and for semi-regular metrics smooth —
//! straight through the degeneracy, while `G^{ab}` itself diverges.

use thiserror::Error;

use crate::curvature::RiemannTensor;
use crate::linalg::{CoMetric, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EinsteinError {
    #[error("densitized Einstein tensor requires dimension 4, found {n}")]
    DimensionNot4 { n: usize },
}

/// Permutation sign of four indices; 0 on repeats.
fn eps4(i: usize, j: usize, k: usize, l: usize) -> f64 {
    let idx = [i, j, k, l];
    let mut sign = 1.0;
    for a in 0..4 {
        for b in (a + 1)..4 {
            if idx[a] == idx[b] {
                return 0.0;
            }
            if idx[a] > idx[b] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Densitized curvature bundle at one point. All entries are weight-2
/// densities (a factor `det g` is built in), finite at semi-regular
/// degenerate points.
#[derive(Debug, Clone)]
pub struct DensitizedCurvature {
    /// `G^{ab}·det g` by the ε-symbol formula (no inverse anywhere).
    pub g_up_density: SymMatrix,
    /// `G_ab·det g`, lowered with `g` (pure lowering, no extra weight).
    pub g_down_density: SymMatrix,
    /// `s·det g = −g_ab G^{ab} det g`.
    pub s_density: f64,
    /// `Ric_ab·det g = G_ab det g + ½ s g_ab det g`.
    pub ric_density: SymMatrix,
    pub detg: f64,
}

/// Evaluates the densitized Einstein tensor from the Riemann tensor and
/// the metric value. `det g` is the signed product of the eigenvalues
/// from the already-available decomposition, consistent with the rank
/// cut used everywhere else.
pub fn densitized_einstein(
    r: &RiemannTensor,
    g: &SymMatrix,
    cm: &CoMetric,
) -> Result<DensitizedCurvature, EinsteinError> {
    let n = g.n();
    if n != 4 {
        return Err(EinsteinError::DimensionNot4 { n });
    }
    let mut up = [[0.0f64; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let mut acc = 0.0;
            for k in 0..4 {
                for s in 0..4 {
                    for t in 0..4 {
                        let e1 = eps4(a, k, s, t);
                        if e1 == 0.0 {
                            continue;
                        }
                        for l in 0..4 {
                            let gkl = g.get(k, l);
                            if gkl == 0.0 {
                                continue;
                            }
                            for p in 0..4 {
                                for q in 0..4 {
                                    let e2 = eps4(b, l, p, q);
                                    if e2 == 0.0 {
                                        continue;
                                    }
                                    acc += gkl * e1 * e2 * r.get(s, t, p, q);
                                }
                            }
                        }
                    }
                }
            }
            up[a][b] = -0.25 * acc;
        }
    }
    let g_up_density = SymMatrix::from_fn(4, |i, j| up[i][j]);

    let mut s_density = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            s_density -= g.get(a, b) * up[a][b];
        }
    }

    let lower = |i: usize, j: usize| -> f64 {
        let mut acc = 0.0;
        for s in 0..4 {
            for t in 0..4 {
                acc += g.get(i, s) * g.get(j, t) * up[s][t];
            }
        }
        acc
    };
    let g_down_density = SymMatrix::from_fn(4, |i, j| lower(i, j));
    let ric_density =
        SymMatrix::from_fn(4, |i, j| g_down_density.get(i, j) + 0.5 * s_density * g.get(i, j));

    Ok(DensitizedCurvature {
        g_up_density,
        g_down_density,
        s_density,
        ric_density,
        detg: cm.det(),
    })
}

/// Residual of the densitized Einstein equation
/// `G_ab det g + Λ g_ab det g − κ T_ab det g` for a given stress-energy
/// tensor `T`. Zero (to rounding) exactly when the equation holds.
pub fn einstein_residual(
    dc: &DensitizedCurvature,
    g: &SymMatrix,
    lambda: f64,
    kappa: f64,
    stress: &SymMatrix,
) -> SymMatrix {
    let n = g.n();
    assert_eq!(n, 4);
    assert_eq!(stress.n(), 4);
    SymMatrix::from_fn(4, |a, b| {
        dc.g_down_density.get(a, b) + lambda * g.get(a, b) * dc.detg
            - kappa * stress.get(a, b) * dc.detg
    })
}
