//! Dense linear algebra for the small matrices this crate manipulates
//! (state dimensions are single digits; everything is row-major `Vec`).

use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMat<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> SquareMat<S> {
    pub fn zeros(n: usize) -> Self {
        SquareMat { n, data: vec![S::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n);
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: S) {
        self.data[i * self.n + j] = x;
    }

    #[inline]
    pub fn add_assign_at(&mut self, i: usize, j: usize, x: S) {
        self.data[i * self.n + j] = self.data[i * self.n + j] + x;
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn matvec(&self, v: &[S], out: &mut [S]) {
        debug_assert_eq!(v.len(), self.n);
        for i in 0..self.n {
            let mut acc = S::zero();
            for j in 0..self.n {
                acc = acc + self.get(i, j) * v[j];
            }
            out[i] = acc;
        }
    }

    pub fn matmul(&self, other: &SquareMat<S>) -> SquareMat<S> {
        debug_assert_eq!(self.n, other.n);
        let mut out = SquareMat::zeros(self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                let a = self.get(i, k);
                if a == S::zero() {
                    continue;
                }
                for j in 0..self.n {
                    out.add_assign_at(i, j, a * other.get(k, j));
                }
            }
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> S {
        self.data
            .iter()
            .fold(S::zero(), |acc, &x| acc.max(x.abs()))
    }

    /// Largest absolute asymmetry `|a_ij − a_ji|`.
    pub fn asymmetry(&self) -> S {
        let mut worst = S::zero();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Quadratic form `vᵀ M v`.
    pub fn quad_form(&self, v: &[S]) -> S {
        let mut acc = S::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                acc = acc + v[i] * self.get(i, j) * v[j];
            }
        }
        acc
    }
}

/// Eigenvalues and eigenvectors of a symmetric matrix by cyclic Jacobi
/// rotations. Eigenvalues ascend; `vectors` holds eigenvectors as columns.
pub struct SymEigen<S> {
    pub values: Vec<S>,
    pub vectors: SquareMat<S>,
}

pub fn sym_eigen<S: Scalar>(mat: &SquareMat<S>) -> SymEigen<S> {
    let n = mat.n();
    let mut a = mat.clone();
    let mut v = SquareMat::identity(n);
    if n <= 1 {
        return SymEigen {
            values: (0..n).map(|i| a.get(i, i)).collect(),
            vectors: v,
        };
    }

    let tol = S::epsilon() * S::of(n as f64);
    for _sweep in 0..64 {
        let mut off = S::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + a.get(i, j) * a.get(i, j);
            }
        }
        let mut diag = S::zero();
        for i in 0..n {
            diag = diag + a.get(i, i) * a.get(i, i);
        }
        if off <= tol * tol * (diag + off).max(S::one() * S::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= S::min_positive_value() {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (S::of(2.0) * apq);
                // tangent of the rotation angle, stable for large theta
                let t = {
                    let sgn = if theta >= S::zero() { S::one() } else { -S::one() };
                    sgn / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                let c = (t * t + S::one()).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(i, i)
            .partial_cmp(&a.get(j, j))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = SquareMat::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, v.get(row, src));
        }
    }
    SymEigen { values, vectors }
}

/// Gram matrix `Σ v vᵀ` of a family of vectors.
pub fn gram<S: Scalar>(vectors: &[Vec<S>], dim: usize) -> SquareMat<S> {
    let mut g = SquareMat::zeros(dim);
    for v in vectors {
        debug_assert_eq!(v.len(), dim);
        for i in 0..dim {
            for j in 0..dim {
                g.add_assign_at(i, j, v[i] * v[j]);
            }
        }
    }
    g
}

/// Rank of a vector family from its Gram spectrum: singular values are
/// `√max(λ, 0)`; values below `tol_rel · σ_max` count as zero.
pub fn rank_from_gram<S: Scalar>(g: &SquareMat<S>, tol_rel: f64) -> usize {
    let eig = sym_eigen(g);
    let sigma: Vec<S> = eig
        .values
        .iter()
        .map(|&l| l.max(S::zero()).sqrt())
        .collect();
    let sigma_max = sigma.iter().fold(S::zero(), |a, &b| a.max(b));
    if sigma_max == S::zero() {
        return 0;
    }
    let cut = S::of(tol_rel) * sigma_max;
    sigma.iter().filter(|&&s| s > cut).count()
}

/// Determinant by LU with partial pivoting.
pub fn det_lu<S: Scalar>(mat: &SquareMat<S>) -> S {
    let n = mat.n();
    let mut a = mat.clone();
    let mut det = S::one();
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if a.get(row, col).abs() > a.get(pivot, col).abs() {
                pivot = row;
            }
        }
        if a.get(pivot, col) == S::zero() {
            return S::zero();
        }
        if pivot != col {
            for k in 0..n {
                let tmp = a.get(col, k);
                a.set(col, k, a.get(pivot, k));
                a.set(pivot, k, tmp);
            }
            det = -det;
        }
        let diag = a.get(col, col);
        det = det * diag;
        for row in (col + 1)..n {
            let factor = a.get(row, col) / diag;
            for k in col..n {
                let x = a.get(row, k) - factor * a.get(col, k);
                a.set(row, k, x);
            }
        }
    }
    det
}

/// Symmetric PSD square root: eigenvalues clamped at zero before rooting.
pub fn psd_sqrt<S: Scalar>(mat: &SquareMat<S>) -> SquareMat<S> {
    let n = mat.n();
    let eig = sym_eigen(mat);
    let mut out = SquareMat::zeros(n);
    for k in 0..n {
        let root = eig.values[k].max(S::zero()).sqrt();
        if root == S::zero() {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                out.add_assign_at(i, j, root * eig.vectors.get(i, k) * eig.vectors.get(j, k));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal() {
        let m = SquareMat::from_rows(&[vec![3.0f64, 0.0], vec![0.0, 1.0]]);
        let e = sym_eigen(&m);
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!((e.values[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_of_known_symmetric() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let m = SquareMat::from_rows(&[vec![2.0f64, 1.0], vec![1.0, 2.0]]);
        let e = sym_eigen(&m);
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!((e.values[1] - 3.0).abs() < 1e-12);
        // eigenvector columns reproduce M v = λ v
        for k in 0..2 {
            let v: Vec<f64> = (0..2).map(|i| e.vectors.get(i, k)).collect();
            let mut mv = vec![0.0; 2];
            m.matvec(&v, &mut mv);
            for i in 0..2 {
                assert!((mv[i] - e.values[k] * v[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eigen_3x3_trace_and_det_consistent() {
        let m = SquareMat::from_rows(&[
            vec![4.0f64, 1.0, -2.0],
            vec![1.0, 2.0, 0.5],
            vec![-2.0, 0.5, 3.0],
        ]);
        let e = sym_eigen(&m);
        let trace: f64 = e.values.iter().sum();
        assert!((trace - 9.0).abs() < 1e-10);
        let prod: f64 = e.values.iter().product();
        assert!((prod - det_lu(&m)).abs() < 1e-9);
    }

    #[test]
    fn rank_thresholding() {
        let vecs = vec![vec![1.0f64, 0.0], vec![2.0, 0.0]];
        let g = gram(&vecs, 2);
        assert_eq!(rank_from_gram(&g, 1e-9), 1);
        let vecs = vec![vec![1.0, 0.0], vec![0.0, 1e-3]];
        let g = gram(&vecs, 2);
        assert_eq!(rank_from_gram(&g, 1e-9), 2);
        let g = gram::<f64>(&[], 2);
        assert_eq!(rank_from_gram(&g, 1e-9), 0);
    }

    #[test]
    fn quad_form_reads_diagonal() {
        let m = SquareMat::from_rows(&[vec![3.5f64, 0.0], vec![0.0, 1.25]]);
        assert_eq!(m.quad_form(&[1.0, 0.0]), 3.5);
        assert_eq!(m.quad_form(&[0.0, 1.0]), 1.25);
    }

    #[test]
    fn det_matches_hand_value() {
        let m = SquareMat::from_rows(&[vec![1.0f64, 2.0], vec![3.0, 4.0]]);
        assert!((det_lu(&m) + 2.0).abs() < 1e-14);
        assert_eq!(det_lu(&SquareMat::<f64>::zeros(3)), 0.0);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let m = SquareMat::from_rows(&[vec![2.0f64, 1.0], vec![1.0, 2.0]]);
        let r = psd_sqrt(&m);
        let rr = r.matmul(&r);
        for i in 0..2 {
            for j in 0..2 {
                assert!((rr.get(i, j) - m.get(i, j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn works_in_f32_too() {
        let m = SquareMat::from_rows(&[vec![2.0f32, 1.0], vec![1.0, 2.0]]);
        let e = sym_eigen(&m);
        assert!((e.values[0] - 1.0).abs() < 1e-5);
        assert!((e.values[1] - 3.0).abs() < 1e-5);
    }
}
