//! Compressed sparse row matrices and preconditioned Krylov solvers.
//!
//! The sparsity pattern is fixed once per grid; only values change between
//! outer iterations. ILU(0) is used as preconditioner for both solvers; on a
//! symmetric matrix it coincides with incomplete Cholesky up to scaling, so
//! it is a valid SPD preconditioner for conjugate gradients.

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    diag: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds the pattern from per-row neighbour lists (diagonal is added).
    pub fn from_adjacency(adjacency: &[Vec<usize>]) -> Self {
        let n = adjacency.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut diag = Vec::with_capacity(n);
        row_ptr.push(0);
        for (i, nbrs) in adjacency.iter().enumerate() {
            let mut cols: Vec<usize> = nbrs.iter().copied().chain(std::iter::once(i)).collect();
            cols.sort_unstable();
            cols.dedup();
            let start = col_idx.len();
            diag.push(start + cols.iter().position(|&c| c == i).unwrap());
            col_idx.extend(cols);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Self {
            n,
            row_ptr,
            col_idx,
            diag,
            values: vec![0.0; nnz],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Storage position of entry `(i, j)`, if it is in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|p| self.row_ptr[i] + p)
    }

    pub fn diag_position(&self, i: usize) -> usize {
        self.diag[i]
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[p] * x[self.col_idx[p]];
            }
            y[i] = s;
        }
    }
}

/// Incomplete LU factorisation with the sparsity pattern of the matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: Vec<f64>,
}

impl Ilu0 {
    pub fn factor(a: &CsrMatrix) -> Option<Self> {
        let mut lu = a.values.clone();
        let mut iw = vec![usize::MAX; a.n];
        for i in 0..a.n {
            let (start, end) = (a.row_ptr[i], a.row_ptr[i + 1]);
            for p in start..end {
                iw[a.col_idx[p]] = p;
            }
            for p in start..a.diag[i] {
                let k = a.col_idx[p];
                let pivot = lu[a.diag[k]];
                if pivot == 0.0 {
                    return None;
                }
                lu[p] /= pivot;
                let lik = lu[p];
                for q in a.diag[k] + 1..a.row_ptr[k + 1] {
                    let pos = iw[a.col_idx[q]];
                    if pos != usize::MAX {
                        lu[pos] -= lik * lu[q];
                    }
                }
            }
            for p in start..end {
                iw[a.col_idx[p]] = usize::MAX;
            }
            if !(lu[a.diag[i]].abs() > 0.0) {
                return None;
            }
        }
        Some(Self { lu })
    }

    /// Solves `L U z = r`.
    pub fn apply(&self, a: &CsrMatrix, r: &[f64], z: &mut [f64]) {
        for i in 0..a.n {
            let mut s = r[i];
            for p in a.row_ptr[i]..a.diag[i] {
                s -= self.lu[p] * z[a.col_idx[p]];
            }
            z[i] = s;
        }
        for i in (0..a.n).rev() {
            let mut s = z[i];
            for p in a.diag[i] + 1..a.row_ptr[i + 1] {
                s -= self.lu[p] * z[a.col_idx[p]];
            }
            z[i] = s / self.lu[a.diag[i]];
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioned conjugate gradients for symmetric positive definite `a`.
/// `x` holds the initial guess on entry and the solution on exit.
pub fn pcg(
    a: &CsrMatrix,
    precond: &Ilu0,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let n = a.n;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![0.0; n];
    precond.apply(a, &r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = norm(&r) / bnorm;
    let mut it = 0;
    while rel > tol && it < max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond.apply(a, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
        rel = norm(&r) / bnorm;
    }
    KrylovOutcome {
        iterations: it,
        relative_residual: rel,
        converged: rel <= tol,
    }
}

/// Right-preconditioned BiCGSTAB for general nonsymmetric `a`.
pub fn bicgstab(
    a: &CsrMatrix,
    precond: &Ilu0,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let n = a.n;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut rel = norm(&r) / bnorm;
    let mut it = 0;
    while rel > tol && it < max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond.apply(a, &p, &mut p_hat);
        a.matvec(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 {
            break;
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        it += 1;
        if norm(&s) / bnorm <= tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            r.copy_from_slice(&s);
            rel = norm(&r) / bnorm;
            break;
        }
        precond.apply(a, &s, &mut s_hat);
        a.matvec(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            break;
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        rel = norm(&r) / bnorm;
    }
    KrylovOutcome {
        iterations: it,
        relative_residual: rel,
        converged: rel <= tol,
    }
}
