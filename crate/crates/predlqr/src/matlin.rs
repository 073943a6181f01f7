//! Minimal dense real matrix kernel.
//!
//! Everything downstream works with small matrices (n <= 8), so the kernel
//! favors clarity: row-major `f64` storage, value semantics, no external
//! linear-algebra dependencies. Spectral quantities come from power iteration
//! with an order-2 Krylov fit so complex dominant eigenvalue pairs are still
//! resolved to their modulus.

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// Builds a matrix from row-major data. Rejects empty shapes, length
    /// mismatches, and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Config(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "matrix construction",
            });
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Config("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Config("ragged rows in matrix literal".into()));
        }
        Mat::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Result<Self> {
        let n = entries.len();
        let mut m = Mat::new(n, n, vec![0.0; n * n])?;
        for (i, &e) in entries.iter().enumerate() {
            if !e.is_finite() {
                return Err(Error::NonFinite {
                    context: "matrix construction",
                });
            }
            m.data[i * n + i] = e;
        }
        Ok(m)
    }

    /// Column vector view of a slice.
    pub fn column(v: &[f64]) -> Result<Self> {
        Mat::new(v.len(), 1, v.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(&self, other: &Mat, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Mat> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                op,
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch {
                op: "matvec",
                left: (self.rows, self.cols),
                right: (v.len(), 1),
            });
        }
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(v).map(|(&a, &b)| a * b).sum();
        }
        Ok(out)
    }

    pub fn trace(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok((0..self.rows).map(|i| self.data[i * self.cols + i]).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// Largest |a_ij - a_ji| over the strict upper triangle (0 if not square).
    pub fn symmetry_deviation(&self) -> f64 {
        if !self.is_square() {
            return 0.0;
        }
        let mut dev = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                dev = dev.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        dev
    }

    /// Symmetrizes in place: (M + M^T) / 2. Used to keep Riccati iterates from
    /// drifting off the symmetric cone.
    pub fn symmetrize(&self) -> Mat {
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }

    /// Lower Cholesky factor of a symmetric positive-definite matrix.
    /// Symmetry is checked to 1e-10 relative to the largest entry; positive
    /// definiteness is detected pivot by pivot during factorization.
    pub fn cholesky(&self) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let dev = self.symmetry_deviation();
        if dev > 1e-10 * (1.0 + self.max_abs()) {
            return Err(Error::NotSymmetric {
                op: "cholesky",
                max_asymmetry: dev,
            });
        }
        let n = self.rows;
        let mut l = Mat::zeros(n, n);
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l.get(j, k) * l.get(j, k);
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let dj = d.sqrt();
            l.set(j, j, dj);
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / dj);
            }
        }
        Ok(l)
    }

    /// Solves M X = rhs for symmetric positive-definite M via Cholesky.
    pub fn solve_spd(&self, rhs: &Mat) -> Result<Mat> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch {
                op: "solve_spd",
                left: (self.rows, self.cols),
                right: (rhs.rows, rhs.cols),
            });
        }
        let l = self.cholesky()?;
        let n = self.rows;
        let m = rhs.cols;
        let mut x = rhs.clone();
        // forward substitution L y = rhs
        for c in 0..m {
            for i in 0..n {
                let mut s = x.get(i, c);
                for k in 0..i {
                    s -= l.get(i, k) * x.get(k, c);
                }
                x.set(i, c, s / l.get(i, i));
            }
            // back substitution L^T x = y
            for i in (0..n).rev() {
                let mut s = x.get(i, c);
                for k in (i + 1)..n {
                    s -= l.get(k, i) * x.get(k, c);
                }
                x.set(i, c, s / l.get(i, i));
            }
        }
        Ok(x)
    }

    /// Spectral radius via power iteration from 3 seeded starts, at most
    /// 10 000 iterations each. Each step fits the dominant eigenpair of the
    /// Krylov triple (v, Mv, M^2 v), so complex conjugate pairs resolve to
    /// their modulus. Accuracy target 1e-6 for diagonalizable input.
    pub fn spectral_radius(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        if n == 1 {
            return Ok(self.data[0].abs());
        }
        let mut best = 0.0f64;
        for start in 0..3u64 {
            let mut v: Vec<f64> = (0..n)
                .map(|i| rng::uniform(0x5EED_5EED, start, i as u64, 0) - 0.5)
                .collect();
            normalize(&mut v);
            let mut est = 0.0f64;
            let mut stable = 0;
            for _ in 0..10_000 {
                let y = self.matvec(&v)?;
                let ny = norm(&y);
                if ny < 1e-300 {
                    est = 0.0;
                    break;
                }
                let z = self.matvec(&y)?;
                let new_est = krylov_pair_modulus(&v, &y, &z, ny);
                if (new_est - est).abs() <= 1e-13 * (1.0 + new_est.abs()) {
                    stable += 1;
                    if stable >= 5 {
                        est = new_est;
                        break;
                    }
                } else {
                    stable = 0;
                }
                est = new_est;
                v = y;
                let inv = 1.0 / ny;
                for x in &mut v {
                    *x *= inv;
                }
            }
            best = best.max(est);
        }
        Ok(best)
    }

    /// Spectral norm as sqrt of the spectral radius of M^T M.
    pub fn spectral_norm(&self) -> Result<f64> {
        let gram = self.transpose().matmul(self)?;
        Ok(gram.spectral_radius()?.max(0.0).sqrt())
    }
}

/// Dominant eigenvalue modulus from the fit M^2 v ~ alpha * (M v) + beta * v.
/// Falls back to |Mv| when v is already (numerically) an eigenvector.
fn krylov_pair_modulus(v: &[f64], y: &[f64], z: &[f64], ny: f64) -> f64 {
    let yy = dot(y, y);
    let yv = dot(y, v);
    let vv = dot(v, v);
    let det = yy * vv - yv * yv;
    if det.abs() <= 1e-14 * yy * vv {
        // y parallel to v: v is an eigenvector, |lambda| = |Mv| / |v|
        return ny / vv.sqrt();
    }
    let yz = dot(y, z);
    let vz = dot(v, z);
    let alpha = (yz * vv - vz * yv) / det;
    let beta = (yy * vz - yv * yz) / det;
    let disc = alpha * alpha + 4.0 * beta;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let r1 = 0.5 * (alpha + s);
        let r2 = 0.5 * (alpha - s);
        r1.abs().max(r2.abs())
    } else {
        // complex pair with modulus sqrt(-beta)
        (-beta).max(0.0).sqrt()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    } else {
        v[0] = 1.0;
    }
}

/// x^T M x for square M.
pub fn quad_form(m: &Mat, x: &[f64]) -> Result<f64> {
    let mx = m.matvec(x)?;
    Ok(dot(x, &mx))
}

pub fn add_scaled(dst: &mut [f64], src: &[f64], s: f64) {
    for (d, &x) in dst.iter_mut().zip(src) {
        *d += s * x;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn random_mat(seed: u64, rows: usize, cols: usize) -> Mat {
        let data = (0..rows * cols)
            .map(|i| 2.0 * rng::uniform(seed, 0, i as u64, 0) - 1.0)
            .collect();
        Mat::new(rows, cols, data).unwrap()
    }

    #[test]
    fn matmul_identity() {
        let i2 = Mat::identity(2);
        let prod = i2.matmul(&i2).unwrap();
        assert_eq!(prod, i2);
    }

    #[test]
    fn matmul_hand_expansion() {
        let a = Mat::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let b = Mat::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let p = a.matmul(&b).unwrap();
        assert_eq!(p.to_rows(), vec![vec![1.0], vec![1.0]]);
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        // Independent oracle: naive i-j-k triple loop.
        let a = random_mat(11, 3, 3);
        let b = random_mat(12, 3, 3);
        let p = a.matmul(&b).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += a.get(i, k) * b.get(k, j);
                }
                assert_close(p.get(i, j), s, 1e-12);
            }
        }
    }

    #[test]
    fn matmul_associative_on_random_triples() {
        for seed in 0..20u64 {
            let a = random_mat(100 + seed, 4, 3);
            let b = random_mat(200 + seed, 3, 5);
            let c = random_mat(300 + seed, 5, 2);
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            let scale = left.max_abs().max(1.0);
            for (x, y) in left.data().iter().zip(right.data()) {
                assert!((x - y).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn matmul_dimension_mismatch_carries_shapes() {
        let a = Mat::zeros(2, 3);
        let b = Mat::zeros(2, 3);
        match a.matmul(&b) {
            Err(Error::DimensionMismatch { left, right, .. }) => {
                assert_eq!(left, (2, 3));
                assert_eq!(right, (2, 3));
            }
            other => panic!("expected dimension error, got {other:?}"),
        }
    }

    #[test]
    fn construction_rejects_non_finite() {
        assert!(matches!(
            Mat::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn solve_spd_identity_and_scalar() {
        let b = Mat::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let x = Mat::identity(3).solve_spd(&b).unwrap();
        assert_eq!(x, b);
        let m = Mat::from_rows(&[vec![2.0]]).unwrap();
        let rhs = Mat::from_rows(&[vec![1.0]]).unwrap();
        assert_close(m.solve_spd(&rhs).unwrap().get(0, 0), 0.5, 1e-15);
    }

    #[test]
    fn solve_spd_random_residual() {
        // M = G^T G + I is SPD; check the residual oracle M x - rhs.
        let g = random_mat(42, 4, 4);
        let m = g
            .transpose()
            .matmul(&g)
            .unwrap()
            .add(&Mat::identity(4))
            .unwrap();
        let rhs = random_mat(43, 4, 2);
        let x = m.solve_spd(&rhs).unwrap();
        let resid = m.matmul(&x).unwrap().sub(&rhs).unwrap();
        let rhs_norm = rhs.spectral_norm().unwrap();
        assert!(resid.spectral_norm().unwrap() <= 1e-10 * rhs_norm.max(1.0));
    }

    #[test]
    fn solve_spd_roundtrip() {
        for seed in 0..10u64 {
            let g = random_mat(500 + seed, 3, 3);
            let m = g
                .transpose()
                .matmul(&g)
                .unwrap()
                .add(&Mat::identity(3))
                .unwrap();
            let x = random_mat(600 + seed, 3, 1);
            let rhs = m.matmul(&x).unwrap();
            let back = m.solve_spd(&rhs).unwrap();
            for (a, b) in back.data().iter().zip(x.data()) {
                assert!((a - b).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn solve_spd_names_failing_pivot() {
        // diag(1, -1) fails at pivot 1.
        let m = Mat::diag(&[1.0, -1.0]).unwrap();
        match m.solve_spd(&Mat::identity(2)) {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected pivot failure, got {other:?}"),
        }
    }

    #[test]
    fn solve_spd_rejects_asymmetric() {
        let m = Mat::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            m.solve_spd(&Mat::identity(2)),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn spectral_radius_diagonal() {
        let m = Mat::diag(&[0.5, 0.2]).unwrap();
        assert_close(m.spectral_radius().unwrap(), 0.5, 1e-9);
    }

    #[test]
    fn spectral_radius_golden_scalar() {
        // (3 - sqrt(5)) / 2
        let f = (3.0 - 5.0f64.sqrt()) / 2.0;
        let m = Mat::from_rows(&[vec![f]]).unwrap();
        assert_close(m.spectral_radius().unwrap(), 0.3819660112501051, 1e-12);
    }

    #[test]
    fn spectral_radius_constructed_spectrum() {
        // Similarity transform of a known diagonal: S D S^-1 has D's spectrum.
        let d = Mat::diag(&[0.9, -0.4, 0.1, 0.05]).unwrap();
        let g = random_mat(77, 4, 4);
        let s = g
            .transpose()
            .matmul(&g)
            .unwrap()
            .add(&Mat::identity(4))
            .unwrap();
        let s_inv = s.solve_spd(&Mat::identity(4)).unwrap();
        let m = s.matmul(&d).unwrap().matmul(&s_inv).unwrap();
        assert_close(m.spectral_radius().unwrap(), 0.9, 1e-6);
    }

    #[test]
    fn spectral_radius_complex_pair() {
        // 0.8 * rotation: eigenvalues 0.8 e^{+-i theta}, modulus 0.8.
        let th = 1.1f64;
        let m = Mat::from_rows(&[
            vec![0.8 * th.cos(), -0.8 * th.sin()],
            vec![0.8 * th.sin(), 0.8 * th.cos()],
        ])
        .unwrap();
        assert_close(m.spectral_radius().unwrap(), 0.8, 1e-6);
    }

    #[test]
    fn spectral_radius_non_square_errors() {
        assert!(matches!(
            Mat::zeros(2, 3).spectral_radius(),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn spectral_norm_identity_and_vector() {
        assert_close(Mat::identity(4).spectral_norm().unwrap(), 1.0, 1e-9);
        let v = Mat::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        assert_close(v.spectral_norm().unwrap(), 5.0, 1e-9);
    }

    #[test]
    fn spectral_norm_matches_gram_oracle() {
        // For a 3x2 matrix the Gram matrix is 2x2; its eigenvalues come from
        // the closed-form characteristic polynomial.
        let m = random_mat(99, 3, 2);
        let g = m.transpose().matmul(&m).unwrap();
        let (a, b, c) = (g.get(0, 0), g.get(0, 1), g.get(1, 1));
        let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
        let lam_max = 0.5 * (a + c + disc);
        assert_close(m.spectral_norm().unwrap(), lam_max.sqrt(), 1e-6);
    }

    #[test]
    fn spectral_norm_bounds_column_images() {
        for seed in 0..10u64 {
            let m = random_mat(800 + seed, 4, 4);
            let sn = m.spectral_norm().unwrap();
            for j in 0..4 {
                let mut e = vec![0.0; 4];
                e[j] = 1.0;
                assert!(sn + 1e-9 >= norm(&m.matvec(&e).unwrap()));
            }
            assert!(m.spectral_radius().unwrap() < sn + 1e-6);
        }
    }
}
