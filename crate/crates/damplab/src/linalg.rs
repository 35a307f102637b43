//! Complex linear algebra kernels: periodic (cyclic) tridiagonal LU solves,
//! a restarted GMRES for matrix-free operators, and dense oracles backed by
//! nalgebra for cross-checking the fast paths at small sizes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is numerically singular (zero pivot at row {0})")]
    SingularPivot(usize),
    #[error("Sherman-Morrison denominator vanished; cyclic system singular")]
    SingularCyclic,
    #[error("gmres did not reach tolerance {tol:e}: residual {residual:e} after {iters} iterations")]
    GmresStalled {
        tol: f64,
        residual: f64,
        iters: usize,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Tridiagonal matrix with periodic corner entries:
/// `A[i][i] = diag[i]`, `A[i+1][i] = sub[i]`, `A[i][i+1] = sup[i]`,
/// `A[0][n-1] = corner_tr`, `A[n-1][0] = corner_bl`.
#[derive(Debug, Clone)]
pub struct CyclicTridiag {
    pub diag: Vec<Complex64>,
    pub sub: Vec<Complex64>,
    pub sup: Vec<Complex64>,
    pub corner_tr: Complex64,
    pub corner_bl: Complex64,
}

impl CyclicTridiag {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        let mut y = vec![Complex64::default(); n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y[0] += self.corner_tr * x[n - 1];
        y[n - 1] += self.corner_bl * x[0];
        y
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CyclicTridiag {
        CyclicTridiag {
            diag: self.diag.iter().map(|z| z.conj()).collect(),
            sub: self.sup.iter().map(|z| z.conj()).collect(),
            sup: self.sub.iter().map(|z| z.conj()).collect(),
            corner_tr: self.corner_bl.conj(),
            corner_bl: self.corner_tr.conj(),
        }
    }

    /// Factors via the Sherman-Morrison rank-one splitting of the corners on
    /// top of a partially pivoted tridiagonal LU.
    pub fn factor(&self) -> Result<CyclicLu, LinalgError> {
        let n = self.n();
        let gamma = if self.diag[0].norm() > f64::MIN_POSITIVE {
            -self.diag[0]
        } else {
            Complex64::new(1.0, 0.0)
        };
        // A = T + u v^T, u = gamma e_0 + corner_bl e_{n-1},
        //                v = e_0 + (corner_tr / gamma) e_{n-1}.
        let mut diag = self.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= self.corner_bl * self.corner_tr / gamma;
        let tri = TridiagLu::factor(&self.sub, &diag, &self.sup)?;

        let mut u = vec![Complex64::default(); n];
        u[0] = gamma;
        u[n - 1] = self.corner_bl;
        let z = tri.solve(&u);
        let v_last = self.corner_tr / gamma;
        let denom = Complex64::new(1.0, 0.0) + z[0] + v_last * z[n - 1];
        if denom.norm() < 1e-300 {
            return Err(LinalgError::SingularCyclic);
        }
        Ok(CyclicLu {
            tri,
            z,
            v_last,
            denom,
        })
    }
}

/// Factored cyclic tridiagonal system, reusable across right-hand sides.
pub struct CyclicLu {
    tri: TridiagLu,
    z: Vec<Complex64>,
    v_last: Complex64,
    denom: Complex64,
}

impl CyclicLu {
    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = rhs.len();
        let mut y = self.tri.solve(rhs);
        let vy = y[0] + self.v_last * y[n - 1];
        let scale = vy / self.denom;
        for i in 0..n {
            y[i] -= scale * self.z[i];
        }
        y
    }
}

/// LU of a (non-periodic) tridiagonal matrix with partial pivoting. Pivoting
/// introduces one extra superdiagonal, as in the LAPACK gttrf layout.
struct TridiagLu {
    dl: Vec<Complex64>,
    d: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(
        sub: &[Complex64],
        diag: &[Complex64],
        sup: &[Complex64],
    ) -> Result<Self, LinalgError> {
        let n = diag.len();
        let mut dl = sub.to_vec();
        let mut d = diag.to_vec();
        let mut du = sup.to_vec();
        let mut du2 = vec![Complex64::default(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];

        for i in 0..n - 1 {
            if d[i].norm() >= dl[i].norm() {
                if d[i].norm() == 0.0 {
                    return Err(LinalgError::SingularPivot(i));
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
                if i < n - 2 {
                    du2[i] = Complex64::default();
                }
            } else {
                swapped[i] = true;
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i < n - 2 {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
            }
        }
        if d[n - 1].norm() == 0.0 {
            return Err(LinalgError::SingularPivot(n - 1));
        }
        Ok(TridiagLu {
            dl,
            d,
            du,
            du2,
            swapped,
        })
    }

    fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = rhs.len();
        let mut b = rhs.to_vec();
        for i in 0..n - 1 {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            let update = self.dl[i] * b[i];
            b[i + 1] -= update;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
        b
    }
}

/// Restarted GMRES with right preconditioning: solves `A M^{-1} y = b`,
/// returns `x = M^{-1} y`. The residual history refers to the true residual.
pub struct GmresResult {
    pub x: Vec<Complex64>,
    pub residual: f64,
    pub iterations: usize,
}

pub fn gmres(
    apply_a: &dyn Fn(&[Complex64]) -> Vec<Complex64>,
    apply_m_inv: &dyn Fn(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    tol_rel: f64,
    restart: usize,
    max_iters: usize,
) -> Result<GmresResult, LinalgError> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(GmresResult {
            x: vec![Complex64::default(); n],
            residual: 0.0,
            iterations: 0,
        });
    }
    let target = tol_rel * bnorm;
    let m = restart.min(n).max(1);
    let mut x = vec![Complex64::default(); n];
    let mut total_iters = 0usize;
    let mut residual = bnorm;

    while total_iters < max_iters {
        let ax = apply_a(&x);
        let mut r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        residual = norm2(&r);
        if residual <= target {
            return Ok(GmresResult {
                x,
                residual: residual / bnorm,
                iterations: total_iters,
            });
        }
        let beta = residual;
        for ri in &mut r {
            *ri /= beta;
        }
        let mut basis: Vec<Vec<Complex64>> = vec![r];
        // Hessenberg stored column-wise; Givens rotations applied on the fly.
        let mut h = vec![vec![Complex64::default(); 0]; 0];
        let mut cs: Vec<Complex64> = Vec::new();
        let mut sn: Vec<Complex64> = Vec::new();
        let mut g = vec![Complex64::default(); m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;

        for k in 0..m {
            total_iters += 1;
            let zk = apply_m_inv(&basis[k]);
            let mut w = apply_a(&zk);
            let mut hk = vec![Complex64::default(); k + 2];
            for (j, vj) in basis.iter().enumerate() {
                let hjk = dot(vj, &w);
                hk[j] = hjk;
                axpy(-hjk, vj, &mut w);
            }
            // one re-orthogonalization pass keeps the basis tight
            for (j, vj) in basis.iter().enumerate() {
                let corr = dot(vj, &w);
                hk[j] += corr;
                axpy(-corr, vj, &mut w);
            }
            let wn = norm2(&w);
            hk[k + 1] = Complex64::new(wn, 0.0);

            // apply accumulated rotations
            for j in 0..k {
                let t = cs[j].conj() * hk[j] + sn[j].conj() * hk[j + 1];
                hk[j + 1] = -sn[j] * hk[j] + cs[j] * hk[j + 1];
                hk[j] = t;
            }
            // new rotation zeroing hk[k+1]
            let denom = (hk[k].norm_sqr() + hk[k + 1].norm_sqr()).sqrt();
            let (c, s) = if denom == 0.0 {
                (Complex64::new(1.0, 0.0), Complex64::default())
            } else {
                (hk[k] / denom, hk[k + 1] / denom)
            };
            cs.push(c);
            sn.push(s);
            hk[k] = Complex64::new(denom, 0.0);
            hk[k + 1] = Complex64::default();
            let gk = g[k];
            g[k] = c.conj() * gk;
            g[k + 1] = -s * gk;
            h.push(hk);
            k_used = k + 1;

            let est = g[k + 1].norm();
            if est <= target || wn < 1e-300 || total_iters >= max_iters {
                break;
            }
            let mut v_next = w;
            for vi in &mut v_next {
                *vi /= wn;
            }
            basis.push(v_next);
        }

        // back-substitute the triangular system for the Krylov coefficients
        let mut ys = vec![Complex64::default(); k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for j in i + 1..k_used {
                acc -= h[j][i] * ys[j];
            }
            ys[i] = acc / h[i][i];
        }
        let mut correction = vec![Complex64::default(); n];
        for (j, yj) in ys.iter().enumerate() {
            axpy(*yj, &basis[j], &mut correction);
        }
        let precond_corr = apply_m_inv(&correction);
        for i in 0..n {
            x[i] += precond_corr[i];
        }
        let ax = apply_a(&x);
        residual = norm2(
            &b.iter()
                .zip(&ax)
                .map(|(bi, ai)| bi - ai)
                .collect::<Vec<_>>(),
        );
        if residual <= target {
            return Ok(GmresResult {
                x,
                residual: residual / bnorm,
                iterations: total_iters,
            });
        }
    }
    Err(LinalgError::GmresStalled {
        tol: tol_rel,
        residual: residual / bnorm,
        iters: total_iters,
    })
}

/// Assembles a dense matrix from a column-wise operator application.
pub fn assemble_dense(
    apply: &dyn Fn(&[Complex64]) -> Vec<Complex64>,
    n: usize,
) -> DMatrix<Complex64> {
    let mut mat = DMatrix::zeros(n, n);
    let mut e = vec![Complex64::default(); n];
    for j in 0..n {
        e[j] = Complex64::new(1.0, 0.0);
        let col = apply(&e);
        for i in 0..n {
            mat[(i, j)] = col[i];
        }
        e[j] = Complex64::default();
    }
    mat
}

/// Smallest singular value by full dense SVD. Small-n oracle only.
pub fn dense_smallest_singular_value(mat: &DMatrix<Complex64>) -> f64 {
    let svd = mat.clone().svd(false, false);
    svd.singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Dense LU solve oracle.
pub fn dense_solve(
    mat: &DMatrix<Complex64>,
    rhs: &[Complex64],
) -> Result<Vec<Complex64>, LinalgError> {
    let b = DVector::from_column_slice(rhs);
    let lu = mat.clone().lu();
    match lu.solve(&b) {
        Some(x) => Ok(x.iter().cloned().collect()),
        None => Err(LinalgError::SingularPivot(0)),
    }
}
