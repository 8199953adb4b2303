//! Restarted GMRES with right preconditioning.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresInfo {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Less than 1% reduction over this many iterations counts as stagnation.
const STAGNATION_WINDOW: usize = 5;
const STAGNATION_RATIO: f64 = 0.99;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves A M⁻¹ y = b and returns x = M⁻¹ y, starting from x = 0. Stops
/// early on stagnation, which is how an inconsistent right-hand side
/// (b outside the range of A) shows up.
pub fn gmres<A, P>(apply: A, precondition: P, b: &[f64], tol: f64, restart: usize, max_iter: usize) -> Result<(Vec<f64>, GmresInfo)>
where
    A: Fn(&[f64]) -> Result<Vec<f64>>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, GmresInfo { iterations: 0, relative_residual: 0.0 }));
    }
    let mut total = 0;
    let mut r = b.to_vec();
    loop {
        let beta = norm(&r);
        if beta <= tol * bnorm || total >= max_iter {
            return Ok((x, GmresInfo { iterations: total, relative_residual: beta / bnorm }));
        }
        let m = restart.min(max_iter - total);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            let mut w = apply(&precondition(&v[j]))?;
            // modified Gram–Schmidt
            for (i, vi) in v.iter().enumerate() {
                h[i][j] = dot(&w, vi);
                w.iter_mut().zip(vi).for_each(|(a, b)| *a -= h[i][j] * b);
            }
            let hn = norm(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let d = h[j][j].hypot(h[j + 1][j]);
            if d == 0.0 {
                return Err(Error::Diverged("GMRES breakdown on a singular operator".into()));
            }
            cs[j] = h[j][j] / d;
            sn[j] = h[j + 1][j] / d;
            h[j][j] = d;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            total += 1;
            let stagnant = j >= STAGNATION_WINDOW && g[j + 1].abs() > STAGNATION_RATIO * g[j + 1 - STAGNATION_WINDOW].abs();
            if g[j + 1].abs() <= tol * bnorm || hn == 0.0 || stagnant {
                break;
            }
            v.push(w.iter().map(|t| t / hn).collect());
        }
        // back substitution on the triangular part
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = (i + 1..used).map(|k| h[i][k] * y[k]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut z = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&v) {
            z.iter_mut().zip(vi).for_each(|(a, b)| *a += yi * b);
        }
        let dx = precondition(&z);
        x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
        let ax = apply(&x)?;
        r = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        if norm(&r) > STAGNATION_RATIO * beta {
            return Ok((x, GmresInfo { iterations: total, relative_residual: norm(&r) / bnorm }));
        }
    }
}
