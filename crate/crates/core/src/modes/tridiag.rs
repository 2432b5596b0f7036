//! Symmetric tridiagonal eigenproblems: Sturm-sequence bisection for selected
//! eigenvalues and inverse iteration for their eigenvectors.

const LANES: usize = 4;

/// Symmetric tridiagonal matrix with `diag.len() == n` and `off.len() == n - 1`.
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    off2: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(!diag.is_empty());
        assert_eq!(off.len() + 1, diag.len());
        let off2 = off.iter().map(|e| e * e).collect();
        Self { diag, off, off2 }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Gershgorin interval containing every eigenvalue.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly less than `x` (Sturm count from the LDLᵀ pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut d = self.diag[0] - x;
        for i in 0..self.len() {
            if i > 0 {
                d = self.diag[i] - x - self.off2[i - 1] / d;
            }
            if d == 0.0 {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn count_above(&self, x: f64) -> usize {
        self.len() - self.count_below(x)
    }

    /// Sturm counts below several shifts in one sweep; the independent
    /// recurrences keep the divider busy.
    fn count_below_lanes(&self, x: &[f64; LANES]) -> [usize; LANES] {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = [0usize; LANES];
        let mut d = [0.0f64; LANES];
        for l in 0..LANES {
            d[l] = self.diag[0] - x[l];
        }
        for i in 0..self.len() {
            for l in 0..LANES {
                if i > 0 {
                    d[l] = self.diag[i] - x[l] - self.off2[i - 1] / d[l];
                }
                if d[l] == 0.0 {
                    d[l] = -tiny;
                }
                count[l] += (d[l] < 0.0) as usize;
            }
        }
        count
    }

    /// The `count` largest eigenvalues that exceed `floor`, in descending order.
    ///
    /// Bisection runs on several eigenvalues at once, and every Sturm count
    /// narrows the brackets of all eigenvalues it informs.
    pub fn largest_eigenvalues(&self, floor: f64, count: usize) -> Vec<f64> {
        let (glo, ghi) = self.gershgorin();
        let floor = floor.max(glo);
        let n = self.len();
        let available = self.count_above(floor);
        let m = available.min(count);
        let scale = glo.abs().max(ghi.abs()).max(f64::MIN_POSITIVE);
        let tol = 4.0 * f64::EPSILON * scale;
        // Eigenvalue j (0-based, descending) lies in (lo[j], hi[j]].
        let mut lo = vec![floor; m];
        let mut hi = vec![ghi; m];
        let done = |lo: &[f64], hi: &[f64], j: usize| hi[j] - lo[j] <= tol;
        let mut next = 0;
        for _ in 0..200 * m.max(1) {
            while next < m && done(&lo, &hi, next) {
                next += 1;
            }
            if next == m {
                break;
            }
            let mut shifts = [0.0; LANES];
            let mut picked = 0;
            let mut j = next;
            while picked < LANES {
                if j < m && !done(&lo, &hi, j) {
                    shifts[picked] = 0.5 * (lo[j] + hi[j]);
                    picked += 1;
                } else if j >= m {
                    shifts[picked] = shifts[0];
                    picked += 1;
                }
                j += 1;
            }
            let below = self.count_below_lanes(&shifts);
            for (x, b) in shifts.iter().zip(below) {
                // Eigenvalues strictly above x: indices 0..above.
                let above = n - b;
                for (jj, (l, h)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    if jj < above {
                        if *x > *l {
                            *l = x.min(*h);
                        }
                    } else if *x < *h {
                        *h = x.max(*l);
                    }
                }
            }
        }
        lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// Unit eigenvector for eigenvalue `lambda` by inverse iteration.
    /// `against` holds already-computed eigenvectors to orthogonalize against
    /// (used for close eigenvalues).
    pub fn eigenvector(&self, lambda: f64, against: &[&[f64]]) -> Vec<f64> {
        let n = self.len();
        let (glo, ghi) = self.gershgorin();
        let scale = glo.abs().max(ghi.abs()).max(f64::MIN_POSITIVE);
        let lu = ShiftedLu::factor(self, lambda, f64::EPSILON * scale);
        // Deterministic, non-degenerate start vector.
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_7).fract())
            .collect();
        normalize(&mut x);
        for _ in 0..4 {
            let mut y = lu.solve(&x);
            for v in against {
                let p = dot(&y, v);
                for (yi, vi) in y.iter_mut().zip(v.iter()) {
                    *yi -= p * vi;
                }
            }
            let growth = normalize(&mut y);
            let converged = growth > 1e10 && {
                let c = dot(&x, &y).abs();
                (1.0 - c).abs() < 1e-14
            };
            x = y;
            if converged {
                break;
            }
        }
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = dot(x, x).sqrt();
    if norm > 0.0 {
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
    norm
}

/// LU factorization of `T - σI` with partial pivoting (two superdiagonals in U).
struct ShiftedLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    l: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(t: &SymTridiagonal, sigma: f64, pivot_floor: f64) -> Self {
        let n = t.len();
        let mut u0: Vec<f64> = t.diag.iter().map(|d| d - sigma).collect();
        let mut u1: Vec<f64> = t.off.clone();
        u1.push(0.0);
        let mut u2 = vec![0.0; n];
        let mut l = vec![0.0; n];
        let mut swapped = vec![false; n];
        let mut sub: Vec<f64> = t.off.clone();
        sub.push(0.0);
        for i in 0..n.saturating_sub(1) {
            // Rows i and i+1: [u0[i] u1[i] u2[i]] and [sub[i] d[i+1] off[i+1]]
            if sub[i].abs() > u0[i].abs() {
                swapped[i] = true;
                let (a0, a1, a2) = (u0[i], u1[i], u2[i]);
                u0[i] = sub[i];
                u1[i] = u0[i + 1];
                u2[i] = u1[i + 1];
                let m = a0 / u0[i];
                l[i] = m;
                u0[i + 1] = a1 - m * u1[i];
                u1[i + 1] = a2 - m * u2[i];
            } else {
                if u0[i] == 0.0 {
                    u0[i] = pivot_floor;
                }
                let m = sub[i] / u0[i];
                l[i] = m;
                u0[i + 1] -= m * u1[i];
                u1[i + 1] -= m * u2[i];
            }
            sub[i] = 0.0;
        }
        if u0[n - 1] == 0.0 {
            u0[n - 1] = pivot_floor;
        }
        for v in u0.iter_mut() {
            if v.abs() < pivot_floor {
                *v = if *v < 0.0 { -pivot_floor } else { pivot_floor };
            }
        }
        Self {
            u0,
            u1,
            u2,
            l,
            swapped,
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut y = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                y.swap(i, i + 1);
            }
            y[i + 1] -= self.l[i] * y[i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            if i + 1 < n {
                s -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * x[i + 2];
            }
            x[i] = s / self.u0[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Second-difference matrix: eigenvalues 2 - 2cos(jπ/(n+1)).
    fn laplacian(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn laplacian_spectrum() {
        let n = 50;
        let t = laplacian(n);
        let ev = t.largest_eigenvalues(f64::NEG_INFINITY, n);
        assert_eq!(ev.len(), n);
        for (j, &l) in ev.iter().enumerate() {
            let k = (n - j) as f64;
            let exact = 2.0 - 2.0 * (k * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((l - exact).abs() < 1e-13, "{j}: {l} vs {exact}");
        }
    }

    #[test]
    fn eigenvectors_satisfy_equation() {
        let n = 200;
        let diag: Vec<f64> = (0..n).map(|i| ((i * 7) % 13) as f64 * 0.1).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 0.5 + ((i * 3) % 5) as f64 * 0.05).collect();
        let t = SymTridiagonal::new(diag.clone(), off.clone());
        let ev = t.largest_eigenvalues(f64::NEG_INFINITY, 10);
        let mut vecs: Vec<Vec<f64>> = Vec::new();
        for &l in &ev {
            let refs: Vec<&[f64]> = vecs.iter().map(|v| v.as_slice()).collect();
            let v = t.eigenvector(l, &refs);
            let mut res = 0.0f64;
            for i in 0..n {
                let mut tv = diag[i] * v[i];
                if i > 0 {
                    tv += off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    tv += off[i] * v[i + 1];
                }
                res = res.max((tv - l * v[i]).abs());
            }
            assert!(res < 1e-10, "residual {res}");
            vecs.push(v);
        }
        for a in 0..vecs.len() {
            for b in 0..a {
                assert!(dot(&vecs[a], &vecs[b]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn floor_limits_count() {
        let t = laplacian(20);
        let ev = t.largest_eigenvalues(2.0, 100);
        assert_eq!(ev.len(), 10);
        assert!(ev.iter().all(|&l| l > 2.0));
    }
}
