//! Thin SVD by Householder QR followed by one-sided (Hestenes) Jacobi on `R`.

use ndarray::{Array1, Array2, ArrayView2};

use crate::real::Real;

/// `A = U Σ Vᵀ` with `U` n×r, `Σ` length r, `V` c×r, `r = min(n, c)`.
/// Singular values are non-increasing; the largest-magnitude entry of every left
/// vector is non-negative.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Array2<T>,
    pub singular_values: Array1<T>,
    pub v: Array2<T>,
}

const MAX_SWEEPS: usize = 80;

pub fn thin_svd<T: Real>(a: ArrayView2<'_, T>) -> Svd<T> {
    let (n, c) = a.dim();
    if n < c {
        let t = thin_svd(a.t());
        let mut out = Svd { u: t.v, singular_values: t.singular_values, v: t.u };
        fix_signs(&mut out);
        return out;
    }
    let mut cols: Vec<Vec<T>> = (0..c).map(|j| a.column(j).to_vec()).collect();
    let reflectors = householder_qr(&mut cols);
    // R is the leading c×c upper triangle
    let mut r: Vec<Vec<T>> = cols.iter().enumerate().map(|(j, col)| {
        let mut rc = vec![T::zero(); c];
        rc[..=j.min(c - 1)].copy_from_slice(&col[..=j.min(c - 1)]);
        rc
    }).collect();
    let mut v: Vec<Vec<T>> = (0..c).map(|j| {
        let mut e = vec![T::zero(); c];
        e[j] = T::one();
        e
    }).collect();
    jacobi_sweeps(&mut r, &mut v);

    let norms: Vec<T> = r.iter().map(|col| col.iter().map(|&x| x * x).sum::<T>().sqrt()).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));

    let scale = norms.iter().fold(T::zero(), |m, &s| m.max(s));
    let floor = scale * T::epsilon() * T::from_count(c.max(1));
    let mut u = Array2::zeros((n, c));
    let mut s = Array1::zeros(c);
    let mut vv = Array2::zeros((c, c));
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s[dst] = sigma;
        for i in 0..c {
            vv[[i, dst]] = v[src][i];
        }
        let mut ur = vec![T::zero(); n];
        if sigma > floor {
            for i in 0..c {
                ur[i] = r[src][i] / sigma;
            }
        }
        apply_q(&reflectors, &mut ur);
        for i in 0..n {
            u[[i, dst]] = ur[i];
        }
    }
    let mut out = Svd { u, singular_values: s, v: vv };
    fix_signs(&mut out);
    out
}

/// In-place Householder QR of column-major `cols`; returns the unit reflectors.
fn householder_qr<T: Real>(cols: &mut [Vec<T>]) -> Vec<Vec<T>> {
    let c = cols.len();
    let n = cols.first().map_or(0, |v| v.len());
    let mut reflectors = Vec::with_capacity(c);
    for j in 0..c {
        let norm = cols[j][j..].iter().map(|&x| x * x).sum::<T>().sqrt();
        let mut v = vec![T::zero(); n];
        if norm == T::zero() {
            reflectors.push(v);
            continue;
        }
        let x0 = cols[j][j];
        let alpha = if x0 >= T::zero() { -norm } else { norm };
        v[j..].copy_from_slice(&cols[j][j..]);
        v[j] -= alpha;
        let vn = v[j..].iter().map(|&x| x * x).sum::<T>().sqrt();
        if vn == T::zero() {
            reflectors.push(vec![T::zero(); n]);
            continue;
        }
        for x in &mut v[j..] {
            *x /= vn;
        }
        for col in cols.iter_mut().skip(j) {
            reflect(&v, j, col);
        }
        reflectors.push(v);
    }
    reflectors
}

#[inline]
fn reflect<T: Real>(v: &[T], start: usize, x: &mut [T]) {
    let d: T = v[start..].iter().zip(&x[start..]).map(|(&a, &b)| a * b).sum();
    let two_d = d + d;
    for (xi, &vi) in x[start..].iter_mut().zip(&v[start..]) {
        *xi -= two_d * vi;
    }
}

fn apply_q<T: Real>(reflectors: &[Vec<T>], x: &mut [T]) {
    for (j, v) in reflectors.iter().enumerate().rev() {
        reflect(v, j, x);
    }
}

fn jacobi_sweeps<T: Real>(a: &mut [Vec<T>], v: &mut [Vec<T>]) {
    let c = a.len();
    let tol = T::epsilon() * T::from_count(c.max(1));
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..c {
            for j in i + 1..c {
                let (alpha, beta, gamma) = {
                    let (ai, aj) = (&a[i], &a[j]);
                    let mut al = T::zero();
                    let mut be = T::zero();
                    let mut ga = T::zero();
                    for (&x, &y) in ai.iter().zip(aj) {
                        al += x * x;
                        be += y * y;
                        ga += x * y;
                    }
                    (al, be, ga)
                };
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                rotate(a, i, j, cs, sn);
                rotate(v, i, j, cs, sn);
            }
        }
        if !rotated {
            break;
        }
    }
}

fn rotate<T: Real>(cols: &mut [Vec<T>], i: usize, j: usize, cs: T, sn: T) {
    let (lo, hi) = cols.split_at_mut(j);
    for (x, y) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = cs * xi - sn * yj;
        *y = sn * xi + cs * yj;
    }
}

fn fix_signs<T: Real>(svd: &mut Svd<T>) {
    for k in 0..svd.u.ncols() {
        let col = svd.u.column(k);
        let mut peak = T::zero();
        let mut sign = T::one();
        for &x in col.iter() {
            if x.abs() > peak {
                peak = x.abs();
                sign = if x < T::zero() { -T::one() } else { T::one() };
            }
        }
        if sign < T::zero() {
            svd.u.column_mut(k).mapv_inplace(|x| -x);
            svd.v.column_mut(k).mapv_inplace(|x| -x);
        }
    }
}
