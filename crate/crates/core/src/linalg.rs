//! Dense symmetric eigensolvers and small matrix helpers.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `xᵀ A`, i.e. the action on a row vector.
    pub fn vecmat(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues (unsorted unless stated) and optional eigenvectors stored as
/// columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Option<Mat>,
    pub sweeps: usize,
}

impl SymEigen {
    /// Sort by decreasing eigenvalue, permuting vector columns alongside.
    pub fn sort_descending(mut self) -> Self {
        let n = self.values.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| self.values[b].total_cmp(&self.values[a]));
        self.values = idx.iter().map(|&i| self.values[i]).collect();
        if let Some(v) = &self.vectors {
            self.vectors = Some(Mat::from_fn(v.rows, n, |r, c| v[(r, idx[c])]));
        }
        self
    }
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 60;

/// Cyclic Jacobi for a real symmetric matrix.
///
/// Sweeps over all off-diagonal pairs applying plane rotations until the
/// off-diagonal Frobenius norm drops below `1e-12 · max(1, ‖A‖_F)`.
pub fn jacobi_eigen(a: &Mat, want_vectors: bool) -> Result<SymEigen> {
    assert_eq!(a.rows, a.cols, "matrix must be square");
    let n = a.rows;
    let mut m = a.clone();
    let mut v = want_vectors.then(|| Mat::identity(n));
    let scale = a.frobenius().max(1.0);
    let off_norm = |m: &Mat| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    loop {
        let off = off_norm(&m);
        if off < JACOBI_TOL * scale {
            break;
        }
        if sweeps >= JACOBI_MAX_SWEEPS {
            return Err(Error::SolverNonConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Rows p and q.
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                // Columns p and q.
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    Ok(SymEigen {
        values: (0..n).map(|i| m[(i, i)]).collect(),
        vectors: v,
        sweeps,
    })
}

/// Householder reduction to tridiagonal form followed by implicit QL.
///
/// Returns the same result as [`jacobi_eigen`] at `O(n³)` cost with a much
/// smaller constant; used for blocks too large for Jacobi sweeps.
pub fn householder_ql_eigen(a: &Mat, want_vectors: bool) -> Result<SymEigen> {
    assert_eq!(a.rows, a.cols, "matrix must be square");
    let n = a.rows;
    if n == 0 {
        return Ok(SymEigen {
            values: vec![],
            vectors: None,
            sweeps: 0,
        });
    }
    let mut z = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut z, &mut d, &mut e, want_vectors);
    tql2(&mut d, &mut e, if want_vectors { Some(&mut z) } else { None })?;
    Ok(SymEigen {
        values: d,
        vectors: want_vectors.then_some(z),
        sweeps: 0,
    })
}

fn tred2(a: &mut Mat, d: &mut [f64], e: &mut [f64], want_vectors: bool) {
    let n = a.rows;
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[(i, k)].abs()).sum();
            if scale == 0.0 {
                e[i] = a[(i, l)];
            } else {
                for k in 0..=l {
                    a[(i, k)] /= scale;
                    h += a[(i, k)] * a[(i, k)];
                }
                let f = a[(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[(i, l)] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    if want_vectors {
                        a[(j, i)] = a[(i, j)] / h;
                    }
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[(j, k)] * a[(i, k)];
                    }
                    for k in (j + 1)..=l {
                        g += a[(k, j)] * a[(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * a[(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[(j, k)] -= f * e[k] + g * a[(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[(i, l)];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if want_vectors {
            if d[i] != 0.0 {
                for j in 0..i {
                    let mut g = 0.0;
                    for k in 0..i {
                        g += a[(i, k)] * a[(k, j)];
                    }
                    for k in 0..i {
                        a[(k, j)] -= g * a[(k, i)];
                    }
                }
            }
            d[i] = a[(i, i)];
            a[(i, i)] = 1.0;
            for j in 0..i {
                a[(j, i)] = 0.0;
                a[(i, j)] = 0.0;
            }
        } else {
            d[i] = a[(i, i)];
        }
    }
}

/// Implicit QL on a symmetric tridiagonal matrix with diagonal `d` and
/// subdiagonal `e[1..]`. Eigenvectors are accumulated into `z` when given.
pub fn tql2(d: &mut [f64], e: &mut [f64], mut z: Option<&mut Mat>) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    if n > 0 {
        e[n - 1] = 0.0;
    }
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
                return Err(Error::SolverNonConvergence {
                    sweeps: iter,
                    off_norm: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..z.rows {
                        f = z[(k, i + 1)];
                        z[(k, i + 1)] = s * z[(k, i)] + c * f;
                        z[(k, i)] = c * z[(k, i)] - s * f;
                    }
                }
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues of a symmetric tridiagonal matrix (`diag`, `off` of length n−1).
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[1..n].copy_from_slice(&off[..(n - 1)]);
    tql2(&mut d, &mut e, None)?;
    Ok(d)
}

/// Eigenpairs of a symmetric tridiagonal matrix; vectors as columns.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<SymEigen> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[1..n].copy_from_slice(&off[..(n - 1)]);
    let mut z = Mat::identity(n);
    tql2(&mut d, &mut e, Some(&mut z))?;
    Ok(SymEigen {
        values: d,
        vectors: Some(z),
        sweeps: 0,
    })
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`
/// (Sturm sequence count).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k` smallest eigenvalues of a symmetric tridiagonal matrix, ascending,
/// by Sturm-sequence bisection.
pub fn tridiagonal_lowest(diag: &[f64], off: &[f64], k: usize) -> Vec<f64> {
    let n = diag.len();
    let k = k.min(n);
    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    (0..k)
        .map(|j| {
            let (mut a, mut b) = (lo, hi);
            while b - a > 4.0 * f64::EPSILON * scale.min(a.abs().max(b.abs()).max(1e-3 * scale)) {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if sturm_count(diag, off, mid) > j {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Unit eigenvector of a symmetric tridiagonal matrix for an accurate
/// eigenvalue estimate, by inverse iteration.
pub fn tridiagonal_eigenvector(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let shift = lambda + 1e-13 * scale;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919 % 101) as f64 / 101.0)).collect();
    let mut c = vec![0.0; n];
    let mut piv = vec![0.0; n];
    for _ in 0..4 {
        // Thomas algorithm on (T − shift I).
        for i in 0..n {
            let a = diag[i] - shift;
            let sub = if i > 0 { off[i - 1] } else { 0.0 };
            let mut p = a - if i > 0 { sub * c[i - 1] } else { 0.0 };
            if p.abs() < 1e-300 {
                p = 1e-300;
            }
            piv[i] = p;
            c[i] = if i + 1 < n { off[i] / p } else { 0.0 };
            x[i] = (x[i] - if i > 0 { sub * x[i - 1] } else { 0.0 }) / p;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    }
    x
}

/// Spectral norm `σ_max(A)` via the eigenvalues of `AᵀA`.
pub fn spectral_norm(a: &Mat) -> Result<f64> {
    let ata = a.transpose().matmul(a);
    let eig = householder_ql_eigen(&ata, false)?;
    Ok(eig.values.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn two_by_two() {
        let a = Mat::from_fn(2, 2, |i, j| if i == j { 2.0 } else { 1.0 });
        let e = jacobi_eigen(&a, true).unwrap();
        let v = sorted(e.values.clone());
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_and_householder_agree() {
        let n = 40;
        let a = Mat::from_fn(n, n, |i, j| {
            let (i, j) = (i.min(j) as f64, i.max(j) as f64);
            ((i + 1.0) * (j + 2.0)).sin() / (1.0 + (i - j).abs())
        });
        let j = sorted(jacobi_eigen(&a, false).unwrap().values);
        let h = sorted(householder_ql_eigen(&a, false).unwrap().values);
        for (x, y) in j.iter().zip(&h) {
            assert!((x - y).abs() < 1e-11, "{x} {y}");
        }
    }

    #[test]
    fn eigenvectors_reconstruct() {
        let n = 12;
        let a = Mat::from_fn(n, n, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        for e in [jacobi_eigen(&a, true).unwrap(), householder_ql_eigen(&a, true).unwrap()] {
            let v = e.vectors.unwrap();
            for k in 0..n {
                let col: Vec<f64> = (0..n).map(|r| v[(r, k)]).collect();
                let av = a.matvec(&col);
                for r in 0..n {
                    assert!((av[r] - e.values[k] * col[r]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn tridiagonal_matches_known_spectrum() {
        // Dirichlet second difference: eigenvalues 2 − 2cos(kπ/(n+1)).
        let n = 50;
        let vals = sorted(tridiagonal_eigenvalues(&vec![2.0; n], &vec![-1.0; n - 1]).unwrap());
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { [1.0, -4.0, 2.0][i] } else { 0.0 });
        assert!((spectral_norm(&a).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn bisection_and_inverse_iteration() {
        let n = 60;
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.01 * i as f64).collect();
        let off = vec![-1.0; n - 1];
        let all = sorted(tridiagonal_eigenvalues(&diag, &off).unwrap());
        let low = tridiagonal_lowest(&diag, &off, 5);
        for k in 0..5 {
            assert!((all[k] - low[k]).abs() < 1e-13, "{} {}", all[k], low[k]);
            let v = tridiagonal_eigenvector(&diag, &off, low[k]);
            for i in 0..n {
                let mut tv = diag[i] * v[i];
                if i > 0 {
                    tv += off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    tv += off[i] * v[i + 1];
                }
                assert!((tv - low[k] * v[i]).abs() < 1e-10);
            }
        }
    }
}
