//! Minimal sparse symmetric linear algebra: adjacency-list matrices and a
//! Jacobi-preconditioned conjugate gradient solver. Shared by the harmonic
//! flattening and random-walker Dirichlet solves.

use thiserror::Error;

#[derive(Debug, Error)]
#[error("conjugate gradient did not converge: residual {residual:e} after {iterations} iterations (tolerance {tolerance:e})")]
pub struct SolveFailure {
    pub residual: f64,
    pub iterations: usize,
    pub tolerance: f64,
}

/// Square sparse matrix stored as per-row (column, value) lists.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn zeros(n: usize) -> Self {
        SparseMatrix {
            rows: vec![Vec::new(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        if value == 0.0 {
            return;
        }
        for entry in &mut self.rows[row] {
            if entry.0 == col {
                entry.1 += value;
                return;
            }
        }
        self.rows[row].push((col, value));
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                self.rows[i]
                    .iter()
                    .find(|&&(c, _)| c == i)
                    .map(|&(_, v)| v)
                    .unwrap_or(0.0)
            })
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, row) in self.rows.iter().enumerate() {
            let mut s = 0.0;
            for &(c, v) in row {
                s += v * x[c];
            }
            out[i] = s;
        }
    }

    pub fn residual_inf_norm(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.dim()];
        self.mul_vec(x, &mut ax);
        ax.iter()
            .zip(b)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `A x = b` for symmetric positive-definite `A` by conjugate gradient
/// with Jacobi preconditioning. Starts from the zero vector; converges when
/// the residual infinity norm drops to `tolerance`.
pub fn solve_cg(
    a: &SparseMatrix,
    b: &[f64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<Vec<f64>, SolveFailure> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let diag = a.diagonal();
    let precond: Vec<f64> = diag
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut inf = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if inf <= tolerance {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(&precond) .map(|(r, p)| r * p).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 0..max_iterations {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(SolveFailure {
                residual: inf,
                iterations: it,
                tolerance,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        inf = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if inf <= tolerance {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * precond[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolveFailure {
        residual: inf,
        iterations: max_iterations,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        // [4 1; 1 3] x = [1; 2]
        let mut a = SparseMatrix::zeros(2);
        a.add(0, 0, 4.0);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        a.add(1, 1, 3.0);
        let x = solve_cg(&a, &[1.0, 2.0], 1e-12, 100).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-10);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-10);
    }

    #[test]
    fn laplacian_like_system_converges() {
        // 1D Poisson: tridiag(-1, 2, -1), n = 50.
        let n = 50;
        let mut a = SparseMatrix::zeros(n);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
            }
        }
        let b = vec![1.0; n];
        let x = solve_cg(&a, &b, 1e-11, 10 * n).unwrap();
        assert!(a.residual_inf_norm(&x, &b) <= 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let mut a = SparseMatrix::zeros(2);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        let err = solve_cg(&a, &[1.0, 1.0], 1e-30, 0).unwrap_err();
        assert!(err.residual > 0.0);
    }
}
