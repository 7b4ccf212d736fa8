//! Linear algebra for degenerate inner products.
//!
//! At a point the metric is a symmetric matrix `g` that may be singular.
//! Its spectral decomposition splits the tangent space into the radical
//! (kernel of the index-lowering map) and the rest; on the annihilator of
//! the radical the inverse survives as the co-metric `g•`, computed here
//! as the Moore–Penrose pseudo-inverse extended by zero. Covariant slots
//! of tensors that annihilate the radical can be contracted with `g•`,
//! which is the only invariant contraction available when `g` has no
//! inverse.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("symmetric eigensolver failed to converge")]
    EigenFailed,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid contraction slots ({k}, {l}) for tensor of order {order}")]
    BadSlots { k: usize, l: usize, order: usize },
}

/// Symmetric `n x n` matrix stored as a packed lower triangle, so
/// `get(i, j) == get(j, i)` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

fn tri(i: usize, j: usize) -> usize {
    debug_assert!(i >= j);
    i * (i + 1) / 2 + j
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    /// Builds from a function of `(i, j)`, queried only for `i >= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        SymMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[tri(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[tri(i, j)] = v;
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Bilinear form value `u^T A v`.
    pub fn pair(&self, u: &[f64], v: &[f64]) -> f64 {
        let av = self.mul_vec(v);
        u.iter().zip(&av).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues with matching orthonormal eigenvectors (as rows of the
/// returned vec, i.e. `vectors[k]` belongs to `values[k]`).
///
/// Jacobi is the method of choice at the small dimensions this engine
/// targets (n <= 8): reconstruction residuals sit at a few ulps, which
/// the pseudo-inverse identities downstream depend on, and the sweep is
/// fully deterministic.
fn jacobi_eigen(g: &SymMatrix) -> Result<(Vec<f64>, Vec<Vec<f64>>), LinalgError> {
    let n = g.n();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| g.get(i, j)).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q].abs();
            }
        }
        if off == 0.0 {
            break;
        }
        // threshold rotations in the first sweeps (Numerical Recipes
        // style), afterwards rotate everything that is not negligible
        let thresh = if sweep < 3 {
            0.2 * off / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                let small = 100.0 * apq.abs();
                if sweep > 3
                    && a[p][p].abs() + small == a[p][p].abs()
                    && a[q][q].abs() + small == a[q][q].abs()
                {
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;
                    continue;
                }
                if apq.abs() <= thresh {
                    continue;
                }
                let diff = a[q][q] - a[p][p];
                let t = if diff.abs() + small == diff.abs() {
                    apq / diff
                } else {
                    let theta = 0.5 * diff / apq;
                    let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        t = -t;
                    }
                    t
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;
                a[p][p] -= h;
                a[q][q] += h;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[r][p];
                        let arq = a[r][q];
                        a[r][p] = arp - s * (arq + tau * arp);
                        a[r][q] = arq + s * (arp - tau * arq);
                        a[p][r] = a[r][p];
                        a[q][r] = a[r][q];
                    }
                }
                for r in 0..n {
                    let vrp = v[r][p];
                    let vrq = v[r][q];
                    v[r][p] = vrp - s * (vrq + tau * vrp);
                    v[r][q] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
        if sweep == 99 {
            return Err(LinalgError::EigenFailed);
        }
    }

    let values: Vec<f64> = (0..n).map(|k| a[k][k]).collect();
    let vectors: Vec<Vec<f64>> = (0..n).map(|k| (0..n).map(|r| v[r][k]).collect()).collect();
    Ok((values, vectors))
}

/// The index-lowering map: `v ↦ g·v`, i.e. the 1-form `v^♭` in
/// components. Its kernel is exactly the radical.
pub fn flat(g: &SymMatrix, v: &[f64]) -> Vec<f64> {
    g.mul_vec(v)
}

/// Counts of zero, negative and positive eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub zero: usize,
    pub neg: usize,
    pub pos: usize,
}

/// Spectral analysis of the metric at a point: rank, radical basis and
/// the annihilator co-metric `g•` (the pseudo-inverse, extended by zero
/// on the radical so contraction formulas read off as plain index sums).
#[derive(Debug, Clone)]
pub struct CoMetric {
    pub rank: usize,
    pub signature: Signature,
    /// Orthonormal basis of the zero eigenspace, `n - rank` vectors.
    pub radical_basis: Vec<Vec<f64>>,
    /// `g•`: sum of `v v^T / λ` over the nonzero eigenvalues.
    pub cometric: SymMatrix,
    /// Rank tolerance supplied by the caller.
    pub tol: f64,
    /// Absolute eigenvalue threshold actually applied: `tol * |λ|_max`.
    /// Purely relative, so uniformly small metrics (conformal factors
    /// near a degeneracy) keep their true rank.
    pub zero_cut: f64,
    /// All eigenvalues, with the matching orthonormal eigenvectors.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
}

impl CoMetric {
    pub fn n(&self) -> usize {
        self.cometric.n()
    }

    /// Co-metric pairing of two covectors, `ω^T g• τ`.
    pub fn co_pair(&self, omega: &[f64], tau: &[f64]) -> f64 {
        self.cometric.pair(omega, tau)
    }

    /// Determinant of `g` as the signed product of all eigenvalues.
    pub fn det(&self) -> f64 {
        self.eigenvalues.iter().product()
    }

    /// `max|λ| / min|λ|`; infinite when the metric is singular.
    pub fn condition_number(&self) -> f64 {
        let max = self.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let min = self
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, l| m.min(l.abs()));
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Full inverse with the rank cut disabled. Meaningful only at
    /// non-degenerate points; callers should gate on `condition_number`.
    pub fn full_inverse(&self) -> SymMatrix {
        let n = self.n();
        SymMatrix::from_fn(n, |i, j| {
            self.eigenvalues
                .iter()
                .zip(&self.eigenvectors)
                .map(|(l, v)| v[i] * v[j] / l)
                .sum()
        })
    }
}

/// Eigendecomposition of `g` with a relative rank cut: eigenvalues with
/// `|λ| <= tol * |λ|_max` are treated as exactly zero.
pub fn analyze_metric(g: &SymMatrix, tol: f64) -> Result<CoMetric, LinalgError> {
    assert!(tol > 0.0, "rank tolerance must be positive");
    let n = g.n();
    let (eigenvalues, eigenvectors) = jacobi_eigen(g)?;

    let max_abs = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let zero_cut = tol * max_abs;

    let mut signature = Signature {
        zero: 0,
        neg: 0,
        pos: 0,
    };
    for &l in &eigenvalues {
        if l.abs() <= zero_cut {
            signature.zero += 1;
        } else if l < 0.0 {
            signature.neg += 1;
        } else {
            signature.pos += 1;
        }
    }
    let rank = signature.neg + signature.pos;

    let cometric = SymMatrix::from_fn(n, |i, j| {
        eigenvalues
            .iter()
            .zip(&eigenvectors)
            .filter(|(l, _)| l.abs() > zero_cut)
            .map(|(l, v)| v[i] * v[j] / l)
            .sum()
    });
    let radical_basis: Vec<Vec<f64>> = eigenvalues
        .iter()
        .zip(&eigenvectors)
        .filter(|(l, _)| l.abs() <= zero_cut)
        .map(|(_, v)| v.clone())
        .collect();

    Ok(CoMetric {
        rank,
        signature,
        radical_basis,
        cometric,
        tol,
        zero_cut,
        eigenvalues,
        eigenvectors,
    })
}

/// Dense covariant tensor of the given order over an `n`-dimensional
/// space, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CoTensor {
    n: usize,
    order: usize,
    data: Vec<f64>,
}

impl CoTensor {
    pub fn zeros(n: usize, order: usize) -> Self {
        CoTensor {
            n,
            order,
            data: vec![0.0; n.pow(order as u32)],
        }
    }

    pub fn from_fn(n: usize, order: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(n, order);
        let mut idx = vec![0usize; order];
        for flat in 0..t.data.len() {
            t.unflatten(flat, &mut idx);
            t.data[flat] = f(&idx);
        }
        t
    }

    pub fn from_matrix(m: &SymMatrix) -> Self {
        Self::from_fn(m.n(), 2, |idx| m.get(idx[0], idx[1]))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order);
        idx.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.n);
            acc * self.n + i
        })
    }

    fn unflatten(&self, mut flat: usize, idx: &mut [usize]) {
        for slot in (0..self.order).rev() {
            idx[slot] = flat % self.n;
            flat /= self.n;
        }
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Visits every multi-index in row-major order.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut idx = vec![0usize; self.order];
        for flat in 0..self.data.len() {
            self.unflatten(flat, &mut idx);
            f(&idx, self.data[flat]);
        }
    }

    /// Contraction of `slot` with the vector `w`, lowering the order by
    /// one. Used for radical-annihilator checks.
    pub fn contract_slot(&self, slot: usize, w: &[f64]) -> CoTensor {
        assert!(slot < self.order);
        assert_eq!(w.len(), self.n);
        let mut out = CoTensor::zeros(self.n, self.order - 1);
        let mut full = vec![0usize; self.order];
        let mut result = std::mem::take(&mut out.data);
        let mut idx = vec![0usize; self.order.saturating_sub(1)];
        for (flat, r) in result.iter_mut().enumerate() {
            out.unflatten_into(flat, &mut idx);
            full[..slot].copy_from_slice(&idx[..slot]);
            full[slot + 1..].copy_from_slice(&idx[slot..]);
            let mut acc = 0.0;
            for (a, &wa) in w.iter().enumerate() {
                full[slot] = a;
                acc += self.get(&full) * wa;
            }
            *r = acc;
        }
        out.data = result;
        out
    }

    fn unflatten_into(&self, flat: usize, idx: &mut [usize]) {
        let mut f = flat;
        for slot in (0..idx.len()).rev() {
            idx[slot] = f % self.n;
            f /= self.n;
        }
    }
}

/// Residual of the radical-annihilator condition on one covariant slot:
/// the largest contraction of that slot against the radical basis,
/// relative to `max(1, ‖T‖∞)`. Zero when the radical is empty.
pub fn slot_radical_residual(t: &CoTensor, slot: usize, cm: &CoMetric) -> f64 {
    let scale = t.max_abs().max(1.0);
    cm.radical_basis
        .iter()
        .map(|w| t.contract_slot(slot, w).max_abs())
        .fold(0.0, f64::max)
        / scale
}

/// Covariant contraction `(C_{kl} T) = g•^{ab} T[.. a .. b ..]` over the
/// 0-based slots `k < l`. Well-defined when those slots are
/// radical-annihilator; see [`cocontract_checked`] for the diagnostic
/// variant.
pub fn cocontract(
    t: &CoTensor,
    k: usize,
    l: usize,
    cm: &CoMetric,
) -> Result<CoTensor, LinalgError> {
    if k >= l || l >= t.order() {
        return Err(LinalgError::BadSlots {
            k,
            l,
            order: t.order(),
        });
    }
    if t.n() != cm.n() {
        return Err(LinalgError::Dimension {
            expected: cm.n(),
            found: t.n(),
        });
    }
    let n = t.n();
    let order = t.order();
    let mut out = CoTensor::zeros(n, order - 2);
    let mut data = std::mem::take(&mut out.data);
    let mut rest = vec![0usize; order - 2];
    let mut full = vec![0usize; order];
    for (flat, r) in data.iter_mut().enumerate() {
        out.unflatten_into(flat, &mut rest);
        // scatter remaining indices around the contracted slots
        let mut pos = 0;
        for (slot, f) in full.iter_mut().enumerate() {
            if slot != k && slot != l {
                *f = rest[pos];
                pos += 1;
            }
        }
        let mut acc = 0.0;
        for a in 0..n {
            full[k] = a;
            for b in 0..n {
                let w = cm.cometric.get(a, b);
                if w == 0.0 {
                    continue;
                }
                full[l] = b;
                acc += w * t.get(&full);
            }
        }
        *r = acc;
    }
    out.data = data;
    Ok(out)
}

/// Result of a contraction together with the radical-annihilator
/// diagnostic on the contracted slots. A failing check means the
/// contraction is not invariantly defined; the value is still returned
/// so ill-posed contractions can be probed.
#[derive(Debug, Clone)]
pub struct CheckedContraction {
    pub values: CoTensor,
    pub radical_annihilator: bool,
    pub residual: f64,
}

pub fn cocontract_checked(
    t: &CoTensor,
    k: usize,
    l: usize,
    cm: &CoMetric,
    tol: f64,
) -> Result<CheckedContraction, LinalgError> {
    let values = cocontract(t, k, l, cm)?;
    let residual = slot_radical_residual(t, k, cm).max(slot_radical_residual(t, l, cm));
    Ok(CheckedContraction {
        values,
        radical_annihilator: residual <= tol,
        residual,
    })
}

/// The same contraction evaluated as an orthogonal-frame sum
/// `Σ_a T(.., E_a, .., E_a, ..) / λ_a` over the non-null eigenvectors —
/// an independent route used to cross-check [`cocontract`].
pub fn cocontract_frame(
    t: &CoTensor,
    k: usize,
    l: usize,
    frame: &[Vec<f64>],
    eigenvalues: &[f64],
    zero_cut: f64,
) -> Result<CoTensor, LinalgError> {
    if k >= l || l >= t.order() {
        return Err(LinalgError::BadSlots {
            k,
            l,
            order: t.order(),
        });
    }
    let n = t.n();
    let order = t.order();
    let mut out = CoTensor::zeros(n, order - 2);
    let mut data = std::mem::take(&mut out.data);
    let mut rest = vec![0usize; order - 2];
    let mut full = vec![0usize; order];
    for (flat, r) in data.iter_mut().enumerate() {
        out.unflatten_into(flat, &mut rest);
        let mut pos = 0;
        for (slot, f) in full.iter_mut().enumerate() {
            if slot != k && slot != l {
                *f = rest[pos];
                pos += 1;
            }
        }
        let mut acc = 0.0;
        for (lam, e) in eigenvalues.iter().zip(frame) {
            if lam.abs() <= zero_cut {
                continue;
            }
            let mut inner = 0.0;
            for a in 0..n {
                full[k] = a;
                for b in 0..n {
                    full[l] = b;
                    inner += e[a] * e[b] * t.get(&full);
                }
            }
            acc += inner / lam;
        }
        *r = acc;
    }
    out.data = data;
    Ok(out)
}
