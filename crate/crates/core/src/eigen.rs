//! Dense real symmetric eigensolvers.
//!
//! [`symmetric_eigen`] reduces the matrix to tridiagonal form with
//! Householder reflections and then runs implicit-shift QL iterations,
//! accumulating the rotations into the reflector product. Matrix storage is
//! row-major; the eigenvector matrix `z` is returned with eigenvector `k` in
//! column `k` (`z[i * n + k]`), eigenvalues ascending.
//!
//! [`jacobi_eigen`] is an independent cyclic Jacobi solver. It is slow
//! (`O(n³)` per sweep) and only meant for small matrices and cross-checks.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// QL iterations allowed per eigenvalue before giving up.
pub const MAX_QL_ITERATIONS: usize = 64;

/// Rows handed to one rayon task in the row-parallel kernels.
const ROW_CHUNK: usize = 16;

pub struct Eigen {
    pub values: Vec<f64>,
    /// Row-major `n × n`, eigenvectors in columns. Empty when only
    /// eigenvalues were requested.
    pub vectors: Vec<f64>,
}

/// Eigen-decomposition of the symmetric row-major `n × n` matrix `a`.
/// `a` must hold both triangles.
pub fn symmetric_eigen(a: Vec<f64>, n: usize) -> Result<Eigen> {
    solve(a, n, true)
}

/// Eigenvalues only, ascending.
pub fn symmetric_eigenvalues(a: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    Ok(solve(a, n, false)?.values)
}

fn solve(mut a: Vec<f64>, n: usize, want_vectors: bool) -> Result<Eigen> {
    assert_eq!(a.len(), n * n, "matrix storage does not match dimension");
    if n == 0 {
        return Ok(Eigen {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    let (mut d, mut e, reflectors) = tridiagonalize(&mut a, n);
    drop(a);
    let mut z = if want_vectors {
        accumulate_reflectors(&reflectors, n)
    } else {
        Vec::new()
    };
    drop(reflectors);
    implicit_ql(&mut d, &mut e, &mut z, n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].total_cmp(&d[y]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = if want_vectors {
        let mut sorted = vec![0.0; n * n];
        sorted
            .par_chunks_mut(n)
            .zip(z.par_chunks(n))
            .for_each(|(dst, src)| {
                for (c, &k) in order.iter().enumerate() {
                    dst[c] = src[k];
                }
            });
        sorted
    } else {
        Vec::new()
    };
    Ok(Eigen { values, vectors })
}

struct Reflector {
    /// First row the reflector acts on.
    start: usize,
    v: Vec<f64>,
    beta: f64,
}

/// Householder reduction `A = Q T Qᵀ`. Returns the diagonal, the
/// subdiagonal padded with a trailing zero, and the reflectors of `Q`.
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>, Vec<Reflector>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));

    for k in 0..n.saturating_sub(2) {
        d[k] = a[k * n + k];
        let start = k + 1;
        let m = n - start;
        // column k below the diagonal equals row k right of it
        let x: Vec<f64> = a[k * n + start..k * n + n].to_vec();
        let tail: f64 = x[1..].iter().map(|t| t * t).sum();
        if tail == 0.0 {
            e[k] = x[0];
            continue;
        }
        let norm = (x[0] * x[0] + tail).sqrt();
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let beta = 2.0 / (v[0] * v[0] + tail);
        e[k] = alpha;

        // p = β A₂₂ v
        let mut p = vec![0.0; m];
        p.par_iter_mut().enumerate().for_each(|(r, pr)| {
            let row = &a[(start + r) * n + start..(start + r) * n + n];
            *pr = beta * dot(row, &v);
        });
        let kappa = 0.5 * beta * dot(&p, &v);
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - kappa * vi).collect();

        // A₂₂ -= v wᵀ + w vᵀ
        a[start * n..]
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(r, row)| {
                let (vr, wr) = (v[r], w[r]);
                for ((x, &vc), &wc) in row[start..].iter_mut().zip(&v).zip(&w) {
                    *x -= vr * wc + wr * vc;
                }
            });
        reflectors.push(Reflector { start, v, beta });
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + n - 2];
        e[n - 2] = a[(n - 1) * n + n - 2];
    }
    d[n - 1] = a[(n - 1) * n + n - 1];
    e[n - 1] = 0.0;
    (d, e, reflectors)
}

/// `Q = H₀ H₁ ⋯` built right to left so each step only touches the
/// trailing block.
fn accumulate_reflectors(reflectors: &[Reflector], n: usize) -> Vec<f64> {
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    for r in reflectors.iter().rev() {
        let s = r.start;
        let m = n - s;
        // u = vᵀ Q₂₂, column blocks in parallel with a fixed row order inside
        let mut u = vec![0.0; m];
        let q_ref = &q;
        u.par_chunks_mut(64).enumerate().for_each(|(b, uc)| {
            let c0 = s + b * 64;
            for (i, &vi) in r.v.iter().enumerate() {
                if vi == 0.0 {
                    continue;
                }
                let row = &q_ref[(s + i) * n + c0..(s + i) * n + c0 + uc.len()];
                for (ucj, &qij) in uc.iter_mut().zip(row) {
                    *ucj += vi * qij;
                }
            }
        });
        q[s * n..]
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| {
                let f = r.beta * r.v[i];
                if f != 0.0 {
                    for (x, &uj) in row[s..].iter_mut().zip(&u) {
                        *x -= f * uj;
                    }
                }
            });
    }
    q
}

/// Implicit-shift QL on the tridiagonal `(d, e)`, with `e[k]` the element
/// coupling `k` and `k + 1`. Rotations are applied to the columns of `z`
/// when it is nonempty.
fn implicit_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64], n: usize) -> Result<()> {
    let eps = f64::EPSILON;
    let mut shift_total = 0.0;
    let mut tst1 = 0.0_f64;
    let mut rotations: Vec<(usize, f64, f64)> = Vec::with_capacity(n);

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n && e[m].abs() > eps * tst1 {
            m += 1;
        }
        // e[n - 1] == 0 guarantees m < n
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::NoConvergence { dim: n, index: l });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in &mut d[l + 2..n] {
                    *di -= h;
                }
                shift_total += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                rotations.clear();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotations.push((i, c, s));
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if !z.is_empty() {
                    let rot = &rotations;
                    z.par_chunks_mut(n * ROW_CHUNK).for_each(|rows| {
                        for row in rows.chunks_mut(n) {
                            for &(i, c, s) in rot {
                                let h = row[i + 1];
                                row[i + 1] = s * row[i] + c * h;
                                row[i] = c * row[i] - s * h;
                            }
                        }
                    });
                }
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += shift_total;
        e[l] = 0.0;
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cyclic Jacobi eigen-decomposition, same output layout as
/// [`symmetric_eigen`].
pub fn jacobi_eigen(mut a: Vec<f64>, n: usize) -> Result<Eigen> {
    assert_eq!(a.len(), n * n, "matrix storage does not match dimension");
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut converged = n < 2;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { dim: n, index: 0 });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[x * n + x].total_cmp(&a[y * n + y]));
    let values = order.iter().map(|&k| a[k * n + k]).collect();
    let mut vectors = vec![0.0; n * n];
    for i in 0..n {
        for (c, &k) in order.iter().enumerate() {
            vectors[i * n + c] = v[i * n + k];
        }
    }
    Ok(Eigen { values, vectors })
}
