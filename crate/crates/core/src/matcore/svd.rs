//! Singular value decompositions.
//!
//! [`svd`] is a one-sided (Hestenes) Jacobi SVD: accurate to working
//! precision for every singular triplet, cubic cost. [`truncated_svd`]
//! computes the leading triplets by block subspace iteration with
//! Rayleigh-Ritz extraction and falls back to the full decomposition for
//! small matrices or when the iteration stalls.

use rand::Rng;

use super::matrix::dot;
use super::{DenseMatrix, RngStream};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;
const SUBSPACE_MAX_ITERS: usize = 4000;
const RITZ_CHECK_EVERY: usize = 4;
const RITZ_TOL: f64 = 1e-11;

/// Thin SVD `a = u · diag(s) · vᵀ` with `s` sorted nonincreasing.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(self, k: usize) -> Svd {
        let k = k.min(self.s.len());
        Svd {
            u: keep_columns(&self.u, k),
            s: self.s[..k].to_vec(),
            v: keep_columns(&self.v, k),
        }
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.u
            .scale_columns(&self.s)
            .and_then(|us| us.matmul_t(&self.v))
            .expect("consistent svd factors")
    }
}

fn keep_columns(m: &DenseMatrix, k: usize) -> DenseMatrix {
    DenseMatrix::from_fn(m.rows(), k, |i, j| m[(i, j)])
}

/// Result of orthogonalizing a set of column vectors with Jacobi rotations.
struct JacobiColumns {
    /// Norms of the rotated columns (the singular values), unsorted.
    norms: Vec<f64>,
    /// Rotated columns, each of length `len`.
    columns: Vec<Vec<f64>>,
    /// Accumulated rotation; `rotation[j]` is column `j` of the k×k factor.
    rotation: Vec<Vec<f64>>,
}

fn jacobi_orthogonalize(mut columns: Vec<Vec<f64>>) -> Result<JacobiColumns> {
    let k = columns.len();
    let len = columns.first().map_or(0, Vec::len);
    let mut rotation: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (len.max(1) as f64).sqrt();
    let mut sq: Vec<f64> = columns.iter().map(|c| dot(c, c)).collect();

    let mut converged = k < 2;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numeric {
                iterations: sweeps,
                message: "one-sided Jacobi SVD did not converge".into(),
            });
        }
        sweeps += 1;
        converged = true;
        for p in 0..k - 1 {
            for q in p + 1..k {
                let alpha = sq[p];
                let beta = sq[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&columns[p], &columns[q]);
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (head, tail) = columns.split_at_mut(q);
                rotate(&mut head[p], &mut tail[0], c, s);
                let (head, tail) = rotation.split_at_mut(q);
                rotate(&mut head[p], &mut tail[0], c, s);
                sq[p] = dot(&columns[p], &columns[p]);
                sq[q] = dot(&columns[q], &columns[q]);
            }
        }
    }

    Ok(JacobiColumns {
        norms: sq.iter().map(|v| v.sqrt()).collect(),
        columns,
        rotation,
    })
}

#[inline]
fn rotate(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xa, yb) = (*x, *y);
        *x = c * xa - s * yb;
        *y = s * xa + c * yb;
    }
}

/// Sorts Jacobi output and normalizes the rotated columns into left singular
/// vectors. Columns with numerically zero norm are completed to an
/// orthonormal set.
fn finish(jac: JacobiColumns, len: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
    let mut order: Vec<usize> = (0..jac.norms.len()).collect();
    order.sort_by(|&a, &b| jac.norms[b].total_cmp(&jac.norms[a]).then(a.cmp(&b)));
    let smax = order.first().map_or(0.0, |&i| jac.norms[i]);
    let floor = smax * f64::EPSILON * (len.max(1) as f64);

    let mut left: Vec<Option<Vec<f64>>> = Vec::with_capacity(order.len());
    let mut values = Vec::with_capacity(order.len());
    let mut right = Vec::with_capacity(order.len());
    for &idx in &order {
        let s = jac.norms[idx];
        values.push(s);
        right.push(jac.rotation[idx].clone());
        if s > floor && s > 0.0 {
            left.push(Some(jac.columns[idx].iter().map(|v| v / s).collect()));
        } else {
            left.push(None);
        }
    }
    (complete_orthonormal(left, len), values, right)
}

/// Fills `None` slots with unit vectors orthogonal to every other slot.
pub(crate) fn complete_orthonormal(slots: Vec<Option<Vec<f64>>>, len: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = slots.iter().flatten().cloned().collect();
    let mut candidate = 0usize;
    let mut out = Vec::with_capacity(slots.len());
    for slot in slots {
        match slot {
            Some(v) => out.push(v),
            None => {
                let v = loop {
                    assert!(candidate < len, "cannot complete an orthonormal set");
                    let mut v = vec![0.0; len];
                    v[candidate] = 1.0;
                    candidate += 1;
                    if project_out(&mut v, &basis) > 0.5 {
                        break v;
                    }
                };
                basis.push(v.clone());
                out.push(v);
            }
        }
    }
    out
}

/// Removes the components of `v` along `basis` (twice, for stability) and
/// normalizes. Returns the norm that remained before normalization.
fn project_out(v: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Full thin SVD by one-sided Jacobi.
pub fn svd(a: &DenseMatrix) -> Result<Svd> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::domain("SVD of an empty matrix"));
    }
    if m >= n {
        let jac = jacobi_orthogonalize(a.columns())?;
        let (u_cols, s, v_cols) = finish(jac, m);
        Ok(Svd {
            u: DenseMatrix::from_columns(m, &u_cols),
            s,
            v: DenseMatrix::from_columns(n, &v_cols),
        })
    } else {
        // aᵀ = U' S V'ᵀ, so a = V' S U'ᵀ.
        let rows: Vec<Vec<f64>> = (0..m).map(|i| a.row(i).to_vec()).collect();
        let jac = jacobi_orthogonalize(rows)?;
        let (u_cols, s, v_cols) = finish(jac, n);
        Ok(Svd {
            u: DenseMatrix::from_columns(m, &v_cols),
            s,
            v: DenseMatrix::from_columns(n, &u_cols),
        })
    }
}

/// Leading `k` singular triplets of `a`.
pub fn truncated_svd(a: &DenseMatrix, k: usize) -> Result<Svd> {
    let (m, n) = a.shape();
    let d = m.min(n);
    if k == 0 || k > d {
        return Err(Error::shape(format!(
            "rank {k} out of range for a {m}x{n} matrix"
        )));
    }
    let block = (2 * k + 10).min(d);
    if d <= 96 || 2 * block >= d {
        return Ok(svd(a)?.truncate(k));
    }
    match subspace_iteration(a, k, block)? {
        Some(svd) => Ok(svd),
        None => Ok(svd(a)?.truncate(k)),
    }
}

/// Block subspace iteration on `a aᵀ`. Returns `None` when the Ritz residuals
/// fail to reach tolerance within the iteration budget.
fn subspace_iteration(a: &DenseMatrix, k: usize, block: usize) -> Result<Option<Svd>> {
    let (m, n) = a.shape();
    let mut rng = RngStream::new(0x5eed_5bd0, 0);
    let start: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    let mut q = orthonormalize(apply(a, &start), &mut rng);

    for it in 1..=SUBSPACE_MAX_ITERS {
        let w = orthonormalize(apply_t(a, &q), &mut rng);
        q = orthonormalize(apply(a, &w), &mut rng);
        if it % RITZ_CHECK_EVERY != 0 {
            continue;
        }
        // Rayleigh-Ritz: B = Qᵀ a, rows b_i = aᵀ q_i.
        let b_rows = apply_t(a, &q);
        let jac = jacobi_orthogonalize(b_rows)?;
        let (right, s, small) = finish(jac, n);
        let svd = Svd {
            u: DenseMatrix::from_fn(m, k, |i, j| (0..block).map(|t| q[t][i] * small[j][t]).sum()),
            s: s[..k].to_vec(),
            v: DenseMatrix::from_columns(n, &right[..k]),
        };
        let av = a.matmul(&svd.v)?;
        let worst = (0..k)
            .map(|j| {
                (0..m)
                    .map(|i| (av[(i, j)] - svd.s[j] * svd.u[(i, j)]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if worst <= RITZ_TOL * svd.s[0] {
            return Ok(Some(svd));
        }
    }
    Ok(None)
}

/// `a · v` for each `v` in `vs` (each of length `cols`).
fn apply(a: &DenseMatrix, vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    vs.iter()
        .map(|v| (0..a.rows()).map(|i| dot(a.row(i), v)).collect())
        .collect()
}

/// `aᵀ · v` for each `v` in `vs` (each of length `rows`).
fn apply_t(a: &DenseMatrix, vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    vs.iter()
        .map(|v| {
            let mut out = vec![0.0; a.cols()];
            for (i, &vi) in v.iter().enumerate() {
                if vi == 0.0 {
                    continue;
                }
                for (o, &x) in out.iter_mut().zip(a.row(i)) {
                    *o += vi * x;
                }
            }
            out
        })
        .collect()
}

/// Modified Gram-Schmidt with reorthogonalization. Dependent vectors are
/// replaced by fresh random directions.
fn orthonormalize(vs: Vec<Vec<f64>>, rng: &mut RngStream) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for mut v in vs {
        let before = dot(&v, &v).sqrt();
        let after = project_out(&mut v, &basis);
        if after <= 1e-10 * before || after == 0.0 {
            loop {
                let mut fresh: Vec<f64> = (0..v.len()).map(|_| rng.random::<f64>() - 0.5).collect();
                if project_out(&mut fresh, &basis) > 1e-3 {
                    v = fresh;
                    break;
                }
            }
        }
        basis.push(v);
    }
    basis
}
