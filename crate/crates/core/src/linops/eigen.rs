//! Eigensolvers and dense factorisations.
//!
//! * [`hermitian_eigs`]: cyclic complex Jacobi, fixed sweep order.
//! * [`eigenvalues`]: Householder reduction to Hessenberg form followed by
//!   shifted QR with deflation (complex Schur form, eigenvalues only).
//! * [`solve`]: LU with partial pivoting.
//! * [`singular_values`]: one-sided Jacobi on a real matrix.

use super::{CMatrix, C64, HERMITIAN_TOL, ONE, ZERO};
use crate::error::{Error, Result};

const MAX_JACOBI_SWEEPS: usize = 64;

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// `sum_k f(λ_k) |v_k><v_k|`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Input must be Hermitian within [`HERMITIAN_TOL`]; it is symmetrised first.
pub fn hermitian_eigs(h: &CMatrix) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::NotSquare { rows: h.rows(), cols: h.cols() });
    }
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let n = h.rows();
    let mut a = h.hermitian_part();
    let mut v = CMatrix::identity(n);

    let scale = a.frobenius_norm();
    for _ in 0..MAX_JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if off.sqrt() <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, c| v[(i, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// One Jacobi rotation annihilating `a[p][q]`.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let g = a[(p, q)];
    let mag = g.norm();
    if mag < 1e-300 {
        return;
    }
    // Phase rotation makes the (p, q) entry real, then a real Jacobi rotation.
    let phase = g.conj() / mag;
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // W = diag(1, phase) * [[c, s], [-s, c]]
    let w_pp = C64::new(c, 0.0);
    let w_pq = C64::new(s, 0.0);
    let w_qp = phase * -s;
    let w_qq = phase * c;

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * w_pp + akq * w_qp;
        a[(k, q)] = akp * w_pq + akq * w_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = w_pp.conj() * apk + w_qp.conj() * aqk;
        a[(q, k)] = w_pq.conj() * apk + w_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * w_pp + vkq * w_qp;
        v[(k, q)] = vkp * w_pq + vkq * w_qq;
    }
}

/// All eigenvalues of a general complex square matrix, sorted by descending
/// modulus (ties broken by real part, then imaginary part).
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = m.clone();
    hessenberg(&mut h);
    let mut eig = vec![ZERO; n];
    let eps = f64::EPSILON;
    // Absolute floor so clusters of tiny (possibly defective) eigenvalues deflate.
    let floor = eps * h.frobenius_norm();

    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total_iter = 0usize;
    while hi > 0 {
        // find the start of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if sub <= eps * diag || sub <= floor || sub < 1e-300 {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total_iter += 1;
        if total_iter > 100 * n.max(10) {
            return Err(Error::NoConvergence);
        }

        let shift = if iter % 11 == 10 {
            // exceptional shift to break cycles
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm(), 0.0) * 0.75
        } else {
            wilkinson_shift(&h, hi)
        };
        qr_step(&mut h, lo, hi, shift);
    }
    eig[0] = h[(0, 0)];

    eig.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.re.total_cmp(&a.re)).then(b.im.total_cmp(&a.im)));
    Ok(eig)
}

fn wilkinson_shift(h: &CMatrix, hi: usize) -> C64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half_tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Explicitly shifted QR step on the block `lo..=hi` of a Hessenberg matrix.
fn qr_step(h: &mut CMatrix, lo: usize, hi: usize, shift: C64) {
    for k in lo..=hi {
        h[(k, k)] -= shift;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let x = h[(k, k)];
        let y = h[(k + 1, k)];
        let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
        let (c, s) = if r < 1e-300 {
            (1.0, ZERO)
        } else if x.norm() < 1e-300 {
            (0.0, ONE)
        } else {
            let c = x.norm() / r;
            (c, x / x.norm() * y.conj() / r)
        };
        for j in k..=hi {
            let a = h[(k, j)];
            let b = h[(k + 1, j)];
            h[(k, j)] = a * c + s * b;
            h[(k + 1, j)] = -s.conj() * a + b * c;
        }
        rots.push((c, s));
    }
    for (off, &(c, s)) in rots.iter().enumerate() {
        let k = lo + off;
        let top = (k + 2).min(hi);
        for i in lo..=top {
            let a = h[(i, k)];
            let b = h[(i, k + 1)];
            h[(i, k)] = a * c + s.conj() * b;
            h[(i, k + 1)] = -s * a + b * c;
        }
    }
    for k in lo..=hi {
        h[(k, k)] += shift;
    }
}

/// In-place Householder reduction to upper Hessenberg form (similarity).
fn hessenberg(h: &mut CMatrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let alpha = -phase * norm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm < 1e-300 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- (I - 2 v v^dagger) H on rows k+1..n
        for j in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(t, vt)| vt.conj() * h[(k + 1 + t, j)]).sum();
            for (t, vt) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= vt * dot * 2.0;
            }
        }
        // H <- H (I - 2 v v^dagger) on columns k+1..n
        for i in 0..n {
            let dot: C64 = v.iter().enumerate().map(|(t, vt)| h[(i, k + 1 + t)] * vt).sum();
            for (t, vt) in v.iter().enumerate() {
                h[(i, k + 1 + t)] -= dot * vt.conj() * 2.0;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
}

/// Solves `a x = b` by LU factorisation with partial pivoting.
pub fn solve(a: &CMatrix, b: &[C64]) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    if b.len() != n {
        return Err(Error::LengthMismatch(n, b.len()));
    }
    let mut lu = a.clone();
    let mut x = b.to_vec();
    let scale = a.max_abs().max(1e-300);
    for k in 0..n {
        let (piv, pmax) =
            (k..n).map(|i| (i, lu[(i, k)].norm())).max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty pivot range");
        if pmax <= 1e-14 * scale {
            return Err(Error::SingularMatrix);
        }
        if piv != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
            x.swap(k, piv);
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / pivot;
            if f == ZERO {
                continue;
            }
            for j in k..n {
                let t = lu[(k, j)];
                lu[(i, j)] -= f * t;
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for k in (0..n).rev() {
        let s: C64 = (k + 1..n).map(|j| lu[(k, j)] * x[j]).sum();
        x[k] = (x[k] - s) / lu[(k, k)];
    }
    Ok(x)
}

/// Singular values (descending) of a real matrix given as a list of columns.
pub fn singular_values(columns: &[Vec<f64>]) -> Vec<f64> {
    if columns.is_empty() {
        return Vec::new();
    }
    let mut cols: Vec<Vec<f64>> = columns.to_vec();
    let k = cols.len();
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(a, b)| a * b).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (a, b) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `tol`.
pub fn numerical_rank(columns: &[Vec<f64>], tol: f64) -> usize {
    singular_values(columns).into_iter().filter(|&s| s > tol).count()
}
