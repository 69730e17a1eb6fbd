//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivots of the unpivoted symmetric factorization `A = L D L'`.
///
/// Stops at the first pivot that is not strictly positive relative to
/// `rel_tol * max|diag|`; the returned vector then ends with that pivot.
pub fn ldlt_pivots(a: &DMatrix<f64>, rel_tol: f64) -> Vec<f64> {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let threshold = rel_tol * scale;
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut d = Vec::with_capacity(n);
    for j in 0..n {
        let mut dj = a[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        d.push(dj);
        if !(dj > threshold) {
            return d;
        }
        l[(j, j)] = 1.0;
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = v / dj;
        }
    }
    d
}

/// Partial-pivot LU factorization kept for repeated solves.
pub struct LuFactor {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// Smallest |U_ii|.
    pub min_pivot: f64,
}

impl LuFactor {
    /// A relative pivot below `rel_tol` (against the largest |entry| of `a`)
    /// is reported as a numerical failure instead of being regularized.
    pub fn new(a: DMatrix<f64>, rel_tol: f64) -> Result<Self> {
        let scale = a.amax().max(f64::MIN_POSITIVE);
        let lu = a.lu();
        let u = lu.u();
        let min_pivot = (0..u.nrows()).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        if !(min_pivot > rel_tol * scale) {
            return Err(Error::numerical(
                "linear system is singular to working precision",
                min_pivot,
            ));
        }
        Ok(Self { lu, min_pivot })
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.lu
            .solve(b)
            .ok_or_else(|| Error::numerical("LU solve failed", self.min_pivot))
    }
}

/// Cap on the QR sweeps of one Schur attempt.
const SCHUR_MAX_ITERS: usize = 10_000;

/// Eigenvalues of a general real matrix.
///
/// nalgebra's real Schur iteration can stall without converging; when it
/// does, the decomposition is retried on `a + s I` (eigenvalues `nu + s`)
/// for a few shifts `s` and deflation tolerances.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<nalgebra::Complex<f64>>> {
    let n = a.nrows();
    for eps in [1e-14, 4.0 * f64::EPSILON, 1e-13] {
        for shift in [0.0, 1.0, -0.7, 0.5, 2.3] {
            let m = a + DMatrix::<f64>::identity(n, n) * shift;
            if let Some(schur) = nalgebra::Schur::try_new(m, eps, SCHUR_MAX_ITERS) {
                return Ok(schur
                    .complex_eigenvalues()
                    .iter()
                    .map(|z| nalgebra::Complex::new(z.re - shift, z.im))
                    .collect());
            }
        }
    }
    Err(Error::numerical("Schur iteration did not converge", f64::NAN))
}

/// Result of a dense LU solve with the smallest |pivot| of the factorization.
pub struct LuSolve {
    pub solution: DVector<f64>,
    pub min_pivot: f64,
}

/// One-shot `A x = b`; see [`LuFactor::new`] for the singularity rule.
pub fn lu_solve(a: DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> Result<LuSolve> {
    let f = LuFactor::new(a, rel_tol)?;
    Ok(LuSolve {
        solution: f.solve(b)?,
        min_pivot: f.min_pivot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pivots_of_spd_matrix_are_positive() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.0, 2.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let d = ldlt_pivots(&a, 1e-12);
        assert_eq!(d.len(), 3);
        assert!(d.iter().all(|&p| p > 0.0));
        // det = product of pivots
        let det: f64 = d.iter().product();
        assert!((det - a.determinant()).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_stops_early() {
        let a = DMatrix::from_element(3, 3, 1.0);
        let d = ldlt_pivots(&a, 1e-12);
        assert_eq!(d.len(), 2);
        assert!(d[1].abs() < 1e-15);
    }

    #[test]
    fn eigenvalues_of_a_rotation_and_a_triangle() {
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let mut ev = eigenvalues(&rot).unwrap();
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((ev[0].im + 1.0).abs() < 1e-12 && ev[0].re.abs() < 1e-12);
        assert!((ev[1].im - 1.0).abs() < 1e-12);
        let tri = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 5.0, 0.0, -1.0, 3.0, 0.0, 0.0, 0.5]);
        let mut re: Vec<f64> = eigenvalues(&tri).unwrap().iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (a, b) in re.iter().zip([-1.0, 0.5, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(lu_solve(a, &b, 1e-13), Err(Error::Numerical { .. })));
    }
}
