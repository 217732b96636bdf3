//! Selected eigenpairs of a real symmetric tridiagonal matrix.
//!
//! Eigenvalues come from Sturm-sequence bisection and eigenvectors from
//! inverse iteration on a partially pivoted LU factorization, so asking for the
//! top `k` pairs of an `n × n` matrix costs `O(n k)` instead of `O(n³)`.

/// Symmetric tridiagonal matrix stored as its diagonal and first off-diagonal.
#[derive(Debug, Clone)]
pub(crate) struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Self {
        assert_eq!(offdiag.len() + 1, diag.len().max(1));
        Self { diag, offdiag }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    fn norm_inf(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    /// Number of eigenvalues strictly less than `x`.
    fn sturm_count(&self, x: f64, pivmin: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            let e = self.offdiag[i - 1];
            q = self.diag[i] - x - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `j`-th smallest eigenvalue (0-based) by bisection.
    fn eigenvalue_ascending(&self, j: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        let pivmin = f64::MIN_POSITIVE * scale.max(1.0);
        lo -= 2.0 * f64::EPSILON * scale;
        hi += 2.0 * f64::EPSILON * scale;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid, pivmin) > j {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenpairs for the `k` largest eigenvalues, in decreasing order.
    pub fn largest_eigenpairs(&self, k: usize) -> Vec<(f64, Vec<f64>)> {
        let n = self.len();
        assert!(k <= n);
        let norm = self.norm_inf().max(f64::MIN_POSITIVE);
        let cluster_tol = 1e-3 * norm;
        let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
        for rank in 0..k {
            let value = self.eigenvalue_ascending(n - 1 - rank);
            let cluster: Vec<&[f64]> = pairs
                .iter()
                .filter(|(v, _)| (v - value).abs() < cluster_tol)
                .map(|(_, vec)| vec.as_slice())
                .collect();
            let vector = self.inverse_iteration(value, norm, rank, &cluster);
            pairs.push((value, vector));
        }
        pairs
    }

    fn inverse_iteration(&self, shift: f64, norm: f64, seed: usize, cluster: &[&[f64]]) -> Vec<f64> {
        let n = self.len();
        if n == 1 {
            return vec![1.0];
        }
        let lu = PivotedLu::factor(self, shift, norm);
        // deterministic start vector, not orthogonal to any eigenvector in practice
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * (((i + 7 * seed) as f64) * 0.618_033_988_749_895).fract())
            .collect();
        normalize(&mut x);
        for _ in 0..8 {
            let mut y = x.clone();
            lu.solve(&mut y);
            for q in cluster {
                let dot: f64 = y.iter().zip(q.iter()).map(|(a, b)| a * b).sum();
                y.iter_mut().zip(q.iter()).for_each(|(a, b)| *a -= dot * b);
            }
            let growth = normalize(&mut y);
            let delta: f64 = y
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs().min((a + b).abs()))
                .fold(0.0, f64::max);
            x = y;
            if growth > 0.0 && delta < 1e-15 {
                break;
            }
        }
        x
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

/// LU factorization of `T - shift·I` with partial pivoting. The upper factor
/// has two superdiagonals because row swaps push fill-in one place right.
struct PivotedLu {
    diag: Vec<f64>,
    sup1: Vec<f64>,
    sup2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl PivotedLu {
    fn factor(t: &SymTridiagonal, shift: f64, norm: f64) -> Self {
        let n = t.len();
        let mut diag: Vec<f64> = t.diag.iter().map(|d| d - shift).collect();
        let mut sup1 = t.offdiag.clone();
        let sub = t.offdiag.clone();
        let mut sup2 = vec![0.0; n.saturating_sub(2)];
        let mut mult = vec![0.0; n - 1];
        let mut swapped = vec![false; n - 1];
        for k in 0..n - 1 {
            if diag[k].abs() >= sub[k].abs() {
                let m = if diag[k] != 0.0 { sub[k] / diag[k] } else { 0.0 };
                mult[k] = m;
                diag[k + 1] -= m * sup1[k];
            } else {
                let m = diag[k] / sub[k];
                let next_diag = diag[k + 1];
                diag[k] = sub[k];
                diag[k + 1] = sup1[k] - m * next_diag;
                if k + 2 < n {
                    sup2[k] = sup1[k + 1];
                    sup1[k + 1] = -m * sup2[k];
                }
                sup1[k] = next_diag;
                mult[k] = m;
                swapped[k] = true;
            }
        }
        let tiny = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
        for d in diag.iter_mut() {
            if d.abs() < tiny {
                *d = if *d < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            diag,
            sup1,
            sup2,
            mult,
            swapped,
        }
    }

    fn solve(&self, y: &mut [f64]) {
        let n = self.diag.len();
        for k in 0..n - 1 {
            if self.swapped[k] {
                y.swap(k, k + 1);
            }
            y[k + 1] -= self.mult[k] * y[k];
        }
        y[n - 1] /= self.diag[n - 1];
        if n >= 2 {
            y[n - 2] = (y[n - 2] - self.sup1[n - 2] * y[n - 1]) / self.diag[n - 2];
        }
        for k in (0..n.saturating_sub(2)).rev() {
            y[k] = (y[k] - self.sup1[k] * y[k + 1] - self.sup2[k] * y[k + 2]) / self.diag[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn dense(t: &SymTridiagonal) -> DMatrix<f64> {
        let n = t.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = t.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = t.offdiag[i];
                m[(i + 1, i)] = t.offdiag[i];
            }
        }
        m
    }

    #[test]
    fn matches_dense_symmetric_eigen() {
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64) - 4.0).collect();
        let off: Vec<f64> = (1..n).map(|i| 0.3 + (i % 5) as f64).collect();
        let t = SymTridiagonal::new(diag, off);
        let eig = dense(&t).symmetric_eigen();
        let mut reference: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        reference.sort_by(|a, b| b.partial_cmp(a).unwrap());

        let pairs = t.largest_eigenpairs(6);
        let a = dense(&t);
        for (k, (value, vec)) in pairs.iter().enumerate() {
            assert!((value - reference[k]).abs() < 1e-11, "k={k}");
            let v = nalgebra::DVector::from_column_slice(vec);
            let residual = (&a * &v - *value * &v).norm();
            assert!(residual < 1e-10, "residual {residual}");
        }
    }

    #[test]
    fn one_by_one() {
        let t = SymTridiagonal::new(vec![3.5], vec![]);
        let pairs = t.largest_eigenpairs(1);
        assert!((pairs[0].0 - 3.5).abs() < 1e-14);
        assert_eq!(pairs[0].1, vec![1.0]);
    }

    #[test]
    fn zero_diagonal_is_handled() {
        // Sylvester-Kac type matrix, eigenvalues symmetric about zero
        let n = 9;
        let off: Vec<f64> = (1..n).map(|t| (t * (n - t)) as f64 / 2.0).collect();
        let t = SymTridiagonal::new(vec![0.0; n], off);
        let pairs = t.largest_eigenpairs(n);
        for w in pairs.windows(2) {
            assert!(w[0].0 > w[1].0);
        }
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = pairs[i].1.iter().zip(&pairs[j].1).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
    }
}
