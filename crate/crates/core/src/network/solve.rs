//! Linear solves with the Laplacian restricted to a set of free vertices.
//!
//! Every quantity in the calculus reduces to `L_FF u = b`, where `F` is the
//! set of vertices whose potential is not prescribed. `L_FF` is symmetric
//! positive definite as soon as every component of `F` touches a prescribed
//! vertex. Small systems are factorised densely (Cholesky), large ones go to
//! Jacobi-preconditioned conjugate gradients.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{Network, Tolerances};
use crate::error::{Error, Result};

pub(crate) struct FreeSystem {
    /// free position -> network index
    pub free: Vec<usize>,
    /// network index -> free position (usize::MAX when prescribed)
    pub slot: Vec<usize>,
    kind: Kind,
}

enum Kind {
    Dense(Cholesky<f64, Dyn>),
    Sparse { rows: Vec<Vec<(usize, f64)>>, diag: Vec<f64>, tol: f64 },
}

impl FreeSystem {
    pub fn new(net: &Network, free: Vec<usize>, tol: &Tolerances) -> Result<Self> {
        let mut slot = vec![usize::MAX; net.len()];
        for (k, &i) in free.iter().enumerate() {
            slot[i] = k;
        }
        let m = free.len();
        // every free vertex must reach a prescribed one, otherwise L_FF is singular
        let mut grounded = vec![false; m];
        let mut stack: Vec<usize> =
            (0..m).filter(|&k| net.neighbors(free[k]).iter().any(|&(j, _)| slot[j] == usize::MAX)).collect();
        for &k in &stack {
            grounded[k] = true;
        }
        while let Some(k) = stack.pop() {
            for &(j, _) in net.neighbors(free[k]) {
                let kj = slot[j];
                if kj != usize::MAX && !grounded[kj] {
                    grounded[kj] = true;
                    stack.push(kj);
                }
            }
        }
        if let Some(k) = grounded.iter().position(|&g| !g) {
            return Err(Error::Singular(format!(
                "vertex {} is not connected to any prescribed vertex",
                net.id(free[k])
            )));
        }
        let kind = if m <= tol.dense_limit {
            let mut a = DMatrix::<f64>::zeros(m, m);
            for (k, &i) in free.iter().enumerate() {
                for &(j, w) in net.neighbors(i) {
                    a[(k, k)] += w;
                    if slot[j] != usize::MAX {
                        a[(k, slot[j])] -= w;
                    }
                }
            }
            let chol = Cholesky::new(a).ok_or_else(|| {
                Error::Singular("grounded Laplacian is not positive definite (free vertices not grounded)".into())
            })?;
            Kind::Dense(chol)
        } else {
            let mut rows = Vec::with_capacity(m);
            let mut diag = Vec::with_capacity(m);
            for &i in &free {
                let mut d = 0.0;
                let mut row = Vec::new();
                for &(j, w) in net.neighbors(i) {
                    d += w;
                    if slot[j] != usize::MAX {
                        row.push((slot[j], w));
                    }
                }
                if !(d > 0.0) {
                    return Err(Error::Singular(format!("free vertex {} has no edges", net.id(i))));
                }
                rows.push(row);
                diag.push(d);
            }
            Kind::Sparse { rows, diag, tol: tol.solve_tol }
        };
        Ok(FreeSystem { free, slot, kind })
    }

    pub fn len(&self) -> usize {
        self.free.len()
    }

    /// Solves `L_FF u = rhs` (both indexed by free position).
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match &self.kind {
            Kind::Dense(chol) => {
                let b = DVector::from_column_slice(rhs);
                Ok(chol.solve(&b).as_slice().to_vec())
            }
            Kind::Sparse { rows, diag, tol } => pcg(rows, diag, rhs, *tol),
        }
    }
}

fn apply(rows: &[Vec<(usize, f64)>], diag: &[f64], x: &[f64], out: &mut [f64]) {
    for (k, row) in rows.iter().enumerate() {
        let mut s = diag[k] * x[k];
        for &(j, w) in row {
            s -= w * x[j];
        }
        out[k] = s;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pcg(rows: &[Vec<(usize, f64)>], diag: &[f64], b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let max_iter = 20 * n + 1000;
    for _ in 0..max_iter {
        apply(rows, diag, &p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Singular("conjugate gradient breakdown".into()));
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if dot(&r, &r).sqrt() <= tol * bnorm {
            return Ok(x);
        }
        for k in 0..n {
            z[k] = r[k] / diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: dot(&r, &r).sqrt() / bnorm })
}
