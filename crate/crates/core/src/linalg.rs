//! Dense complex linear algebra: SVD, pseudo-inverse, eigendecomposition and
//! least squares.
//!
//! Everything is written directly against [`CMatrix`]; matrices in this crate
//! are small (factor matrices with a handful of columns, unfoldings of a few
//! thousand rows), so plain one-sided Jacobi and shifted QR are accurate and
//! fast enough.

use num_complex::Complex;

use crate::error::{shape_err, Result};
use crate::scalar::{cone, creal, czero, from_usize, real, Real};
use crate::tensor::{inner, norm2, CMatrix};

/// Thin singular value decomposition `M = U·diag(s)·Vᴴ`.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    /// `rows × r` left singular vectors, `r = min(rows, cols)`.
    pub u: CMatrix<T>,
    /// Singular values in descending order.
    pub s: Vec<T>,
    /// `cols × r` right singular vectors.
    pub v: CMatrix<T>,
}

/// Eigenvalues with eigenvectors stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigResult<T> {
    pub values: Vec<Complex<T>>,
    pub vectors: CMatrix<T>,
}

const MAX_JACOBI_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd<T: Real>(m: &CMatrix<T>) -> Svd<T> {
    if m.rows() < m.cols() {
        let t = svd(&m.adjoint());
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    let (rows, n) = m.shape();
    // Work on columns stored contiguously.
    let mut cols: Vec<Vec<Complex<T>>> = (0..n).map(|j| m.col(j)).collect();
    let mut vcols: Vec<Vec<Complex<T>>> = (0..n)
        .map(|j| {
            let mut e = vec![czero(); n];
            e[j] = cone();
            e
        })
        .collect();
    let eps = T::epsilon();

    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = cols[p].iter().fold(T::zero(), |s, z| s + z.norm_sqr());
                let beta = cols[q].iter().fold(T::zero(), |s, z| s + z.norm_sqr());
                let gamma = inner(&cols[p], &cols[q]);
                let g = gamma.norm();
                if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rotate the phase out of the off-diagonal term, then apply a real rotation
                let phase = gamma / g;
                let zeta = (beta - alpha) / (real::<T>(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                rotate_pair(&mut lo[p], &mut hi[0], phase, c, s);
                let (lo, hi) = vcols.split_at_mut(q);
                rotate_pair(&mut lo[p], &mut hi[0], phase, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(T, usize)> = cols.iter().map(|c| norm2(c)).zip(0..n).collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut u = CMatrix::zeros(rows, n);
    let mut v = CMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (dst, &(sigma, src)) in order.iter().enumerate() {
        s.push(sigma);
        if sigma > T::zero() {
            let inv = creal(T::one() / sigma);
            let ucol: Vec<_> = cols[src].iter().map(|&z| z * inv).collect();
            u.set_col(dst, &ucol);
        }
        v.set_col(dst, &vcols[src]);
    }
    Svd { u, s, v }
}

fn rotate_pair<T: Real>(
    p: &mut [Complex<T>],
    q: &mut [Complex<T>],
    phase: Complex<T>,
    c: T,
    s: T,
) {
    let unphase = phase.conj();
    for (x, y) in p.iter_mut().zip(q.iter_mut()) {
        let yq = *y * unphase;
        let xp = *x;
        *x = xp * c - yq * s;
        *y = xp * s + yq * c;
    }
}

/// Singular-value cutoff `max(rows, cols)·ε·σ_max`.
pub fn rank_cutoff<T: Real>(rows: usize, cols: usize, sigma_max: T) -> T {
    from_usize::<T>(rows.max(cols)) * T::epsilon() * sigma_max
}

/// Moore–Penrose pseudo-inverse.
pub fn pinv<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    let Svd { u, s, v } = svd(m);
    let cutoff = rank_cutoff(m.rows(), m.cols(), s.first().copied().unwrap_or(T::zero()));
    let mut out = CMatrix::zeros(m.cols(), m.rows());
    for (r, &sigma) in s.iter().enumerate() {
        if sigma <= cutoff || sigma == T::zero() {
            continue;
        }
        let inv = T::one() / sigma;
        for i in 0..m.cols() {
            let vi = v[(i, r)] * inv;
            for j in 0..m.rows() {
                out[(i, j)] += vi * u[(j, r)].conj();
            }
        }
    }
    out
}

/// Numerical rank under [`rank_cutoff`].
pub fn rank<T: Real>(m: &CMatrix<T>) -> usize {
    let s = svd(m).s;
    let cutoff = rank_cutoff(m.rows(), m.cols(), s.first().copied().unwrap_or(T::zero()));
    s.iter().filter(|&&x| x > cutoff && x > T::zero()).count()
}

/// 2-norm condition number; infinite for rank-deficient input.
pub fn condition_number<T: Real>(m: &CMatrix<T>) -> T {
    let s = svd(m).s;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
        (Some(_), Some(_)) => T::infinity(),
        _ => T::one(),
    }
}

/// Householder QR of a tall matrix, kept in compact form.
struct Qr<T> {
    /// Upper triangle holds R; reflectors are stored separately.
    r: CMatrix<T>,
    reflectors: Vec<Vec<Complex<T>>>,
}

fn householder_qr<T: Real>(a: &CMatrix<T>) -> Qr<T> {
    let (m, n) = a.shape();
    let mut r = a.clone();
    let mut reflectors = Vec::with_capacity(n);
    for k in 0..n.min(m) {
        let x: Vec<_> = (k..m).map(|i| r[(i, k)]).collect();
        let xnorm = norm2(&x);
        let mut v = x;
        if xnorm == T::zero() {
            reflectors.push(vec![czero(); m - k]);
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == T::zero() {
            cone()
        } else {
            x0 / x0.norm()
        };
        // v = x + phase·‖x‖·e1 avoids cancellation
        v[0] = x0 + phase * xnorm;
        let vnorm = norm2(&v);
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        apply_reflector(&mut r, &v, k, k);
        reflectors.push(v);
    }
    Qr { r, reflectors }
}

/// Applies `I − 2vvᴴ` to rows `row0..` of columns `col0..`.
fn apply_reflector<T: Real>(m: &mut CMatrix<T>, v: &[Complex<T>], row0: usize, col0: usize) {
    let two = real::<T>(2.0);
    for j in col0..m.cols() {
        let dot = v
            .iter()
            .enumerate()
            .fold(czero(), |acc, (i, vi)| acc + vi.conj() * m[(row0 + i, j)]);
        let f = dot * two;
        for (i, vi) in v.iter().enumerate() {
            let cur = m[(row0 + i, j)];
            m[(row0 + i, j)] = cur - *vi * f;
        }
    }
}

/// Least-squares solution `X = argmin ‖A·X − B‖_F`, minimum norm when `A` is
/// rank deficient.
pub fn lstsq<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<CMatrix<T>> {
    if a.rows() != b.rows() {
        return Err(shape_err(
            "lstsq",
            format!("A has {} rows, B has {}", a.rows(), b.rows()),
        ));
    }
    let (m, n) = a.shape();
    if m >= n && n > 0 {
        let qr = householder_qr(a);
        let diag: Vec<T> = (0..n).map(|i| qr.r[(i, i)].norm()).collect();
        let dmax = diag.iter().copied().fold(T::zero(), T::max);
        let dmin = diag.iter().copied().fold(T::infinity(), T::min);
        // Clear full-rank case: triangular solve. Anything near rank deficiency
        // goes through the SVD so the minimum-norm solution is returned.
        if dmax > T::zero() && dmin > T::epsilon().sqrt() * dmax {
            let mut qtb = b.clone();
            for (k, v) in qr.reflectors.iter().enumerate() {
                apply_reflector(&mut qtb, v, k, 0);
            }
            let mut x = CMatrix::zeros(n, b.cols());
            for col in 0..b.cols() {
                for i in (0..n).rev() {
                    let mut acc = qtb[(i, col)];
                    for j in i + 1..n {
                        acc -= qr.r[(i, j)] * x[(j, col)];
                    }
                    x[(i, col)] = acc / qr.r[(i, i)];
                }
            }
            return Ok(x);
        }
    }
    pinv(a).matmul(b)
}

/// Inverse of a square matrix (pseudo-inverse if singular).
pub fn inverse<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    if a.rows() != a.cols() {
        return Err(shape_err("inverse", format!("{:?} is not square", a.shape())));
    }
    lstsq(a, &CMatrix::identity(a.rows()))
}

/// Eigendecomposition of a general complex square matrix.
///
/// Hessenberg reduction followed by single-shift QR to complex Schur form;
/// eigenvectors come from back substitution on the triangular factor. The
/// eigenvalue order is unspecified.
pub fn eig<T: Real>(m: &CMatrix<T>) -> Result<EigResult<T>> {
    if m.rows() != m.cols() {
        return Err(shape_err("eig", format!("{:?} is not square", m.shape())));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(EigResult {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let (mut h, mut z) = hessenberg(m);
    schur_qr(&mut h, &mut z);

    let values: Vec<_> = (0..n).map(|i| h[(i, i)]).collect();
    let hnorm = h.frob_norm();
    let tiny = T::epsilon() * hnorm.max(T::min_positive_value());
    let mut vectors = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = values[k];
        let mut y = vec![czero(); n];
        y[k] = cone();
        for i in (0..k).rev() {
            let mut acc: Complex<T> = czero();
            for j in i + 1..=k {
                acc += h[(i, j)] * y[j];
            }
            let mut d = h[(i, i)] - lambda;
            if d.norm() < tiny {
                d = creal(tiny);
            }
            y[i] = -acc / d;
        }
        let mut v = vec![czero(); n];
        for (r, out) in v.iter_mut().enumerate() {
            for (c, yc) in y.iter().enumerate().take(k + 1) {
                *out += z[(r, c)] * yc;
            }
        }
        let nv = norm2(&v);
        if nv > T::zero() {
            for x in v.iter_mut() {
                *x /= nv;
            }
        }
        vectors.set_col(k, &v);
    }
    Ok(EigResult { values, vectors })
}

/// Reduces `m` to upper Hessenberg `H = Qᴴ·M·Q`, returning `(H, Q)`.
fn hessenberg<T: Real>(m: &CMatrix<T>) -> (CMatrix<T>, CMatrix<T>) {
    let n = m.rows();
    let mut h = m.clone();
    let mut q = CMatrix::identity(n);
    let two = real::<T>(2.0);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<_> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = norm2(&x);
        if xnorm == T::zero() {
            continue;
        }
        let mut v = x;
        let x0 = v[0];
        let phase = if x0.norm() == T::zero() {
            cone()
        } else {
            x0 / x0.norm()
        };
        v[0] = x0 + phase * xnorm;
        let vn = norm2(&v);
        for z in v.iter_mut() {
            *z /= vn;
        }
        // H ← P·H·P with P = I − 2vvᴴ acting on indices k+1..
        apply_reflector(&mut h, &v, k + 1, 0);
        for i in 0..n {
            let dot = v
                .iter()
                .enumerate()
                .fold(czero(), |acc, (j, vj)| acc + h[(i, k + 1 + j)] * *vj);
            let f = dot * two;
            for (j, vj) in v.iter().enumerate() {
                let cur = h[(i, k + 1 + j)];
                h[(i, k + 1 + j)] = cur - f * vj.conj();
            }
        }
        for i in 0..n {
            let dot = v
                .iter()
                .enumerate()
                .fold(czero(), |acc, (j, vj)| acc + q[(i, k + 1 + j)] * *vj);
            let f = dot * two;
            for (j, vj) in v.iter().enumerate() {
                let cur = q[(i, k + 1 + j)];
                q[(i, k + 1 + j)] = cur - f * vj.conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = czero();
        }
    }
    (h, q)
}

/// Givens rotation `G = [[c, s], [−s̄, c]]` with `G·[x; y] = [r; 0]`.
fn givens<T: Real>(x: Complex<T>, y: Complex<T>) -> (T, Complex<T>) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == T::zero() {
        return (T::one(), czero());
    }
    if ax == T::zero() {
        return (T::zero(), y.conj() / ay);
    }
    let r = (ax * ax + ay * ay).sqrt();
    (ax / r, (x / ax) * y.conj() / r)
}

/// Shifted QR iteration on a Hessenberg matrix, in place, accumulating the
/// unitary similarity into `z`. On return `h` is upper triangular.
fn schur_qr<T: Real>(h: &mut CMatrix<T>, z: &mut CMatrix<T>) {
    let n = h.rows();
    let eps = T::epsilon();
    let mut hi = n - 1;
    let mut iter = 0usize;
    let max_iter = 60 * n.max(1);
    let mut total = 0usize;
    let half = real::<T>(0.5);

    while hi > 0 && total < max_iter {
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            let scale = if s == T::zero() { h.frob_norm() } else { s };
            if h[(lo, lo - 1)].norm() <= eps * scale {
                h[(lo, lo - 1)] = czero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;

        let mu = if iter % 11 == 0 {
            // exceptional shift to break cycles
            h[(hi, hi)] + creal(h[(hi, hi - 1)].norm() * real::<T>(0.75))
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let tr_half = (a + d) * half;
            let disc = ((a - d) * half * ((a - d) * half) + b * c).sqrt();
            let l1 = tr_half + disc;
            let l2 = tr_half - disc;
            if (l1 - d).norm() < (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };

        for i in lo..=hi {
            h[(i, i)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            rots.push((c, s));
        }
        for (idx, &(c, s)) in rots.iter().enumerate() {
            let k = lo + idx;
            let top = (k + 2).min(hi);
            for i in 0..=top {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + s.conj() * y;
                h[(i, k + 1)] = -s * x + y * c;
            }
            for i in 0..n {
                let x = z[(i, k)];
                let y = z[(i, k + 1)];
                z[(i, k)] = x * c + s.conj() * y;
                z[(i, k + 1)] = -s * x + y * c;
            }
        }
        for i in lo..=hi {
            h[(i, i)] += mu;
        }
    }
    // clear the strictly lower part left by round-off
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = czero();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cis;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Complex<f64>;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix<f64> {
        CMatrix::from_fn(rows, cols, |_, _| {
            C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn rel(a: &CMatrix<f64>, b: &CMatrix<f64>) -> f64 {
        a.sub(b).unwrap().frob_norm() / b.frob_norm().max(1e-300)
    }

    #[test]
    fn svd_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(r, c) in &[(5, 3), (3, 5), (1, 1), (8, 8), (64, 20)] {
            let m = random(r, c, &mut rng);
            let d = svd(&m);
            let us = CMatrix::from_fn(d.u.rows(), d.s.len(), |i, j| d.u[(i, j)] * d.s[j]);
            let back = us.matmul(&d.v.adjoint()).unwrap();
            assert!(rel(&back, &m) < 1e-13, "{r}x{c}");
            assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn pinv_identity_and_diagonal() {
        let i3 = CMatrix::<f64>::identity(3);
        assert!(rel(&pinv(&i3), &i3) < 1e-15);
        let d = CMatrix::from_diag(&[creal(2.0), creal(0.0)]);
        let p = pinv(&d);
        let expected = CMatrix::from_diag(&[creal(0.5), creal(0.0)]);
        assert!(p.sub(&expected).unwrap().frob_norm() < 1e-15);
    }

    #[test]
    fn pinv_of_zero_is_zero() {
        let z = CMatrix::<f64>::zeros(3, 2);
        assert_eq!(pinv(&z), CMatrix::zeros(2, 3));
    }

    #[test]
    fn pinv_left_inverse_full_column_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random(5, 2, &mut rng);
        let left = pinv(&m).matmul(&m).unwrap();
        assert!(rel(&left, &CMatrix::identity(2)) < 1e-10);
    }

    #[test]
    fn eig_diagonal() {
        let a = cis(-std::f64::consts::FRAC_PI_2);
        let b = cis(std::f64::consts::FRAC_PI_3);
        let e = eig(&CMatrix::from_diag(&[a, b])).unwrap();
        let mut found = e.values.clone();
        found.sort_by(|x, y| x.arg().partial_cmp(&y.arg()).unwrap());
        assert!((found[0] - a).norm() < 1e-14);
        assert!((found[1] - b).norm() < 1e-14);
    }

    #[test]
    fn eig_similarity_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random(2, 2, &mut rng);
        let d = CMatrix::from_diag(&[creal(1.0), C::new(0.0, 2.0)]);
        let m = p.matmul(&d).unwrap().matmul(&inverse(&p).unwrap()).unwrap();
        let e = eig(&m).unwrap();
        let mut vals = e.values.clone();
        vals.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        assert!((vals[0] - creal(1.0)).norm() < 1e-10);
        assert!((vals[1] - C::new(0.0, 2.0)).norm() < 1e-10);
    }

    #[test]
    fn eig_scalar_and_non_square() {
        let z = C::new(0.3, -1.7);
        let e = eig(&CMatrix::from_diag(&[z])).unwrap();
        assert_eq!(e.values, vec![z]);
        assert!(eig(&CMatrix::<f64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn eig_pairs_satisfy_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [1usize, 2, 3, 5, 8, 16, 32] {
            let m = random(n, n, &mut rng);
            let e = eig(&m).unwrap();
            let mnorm = m.frob_norm();
            for k in 0..n {
                let v = CMatrix::from_columns(&[e.vectors.col(k)]).unwrap();
                let mv = m.matmul(&v).unwrap();
                let lv = v.scale(e.values[k]);
                assert!(
                    mv.sub(&lv).unwrap().frob_norm() <= 1e-8 * mnorm * v.frob_norm(),
                    "n={n} k={k}"
                );
            }
            // reconstruction M = V·Λ·V⁻¹
            let vl = CMatrix::from_fn(n, n, |i, j| e.vectors[(i, j)] * e.values[j]);
            let back = vl.matmul(&inverse(&e.vectors).unwrap()).unwrap();
            assert!(rel(&back, &m) <= 1e-7, "n={n}");
        }
    }

    #[test]
    fn lstsq_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = random(3, 2, &mut rng);
        let x = lstsq(&CMatrix::identity(3), &b).unwrap();
        assert!(rel(&x, &b) < 1e-15);

        let a = CMatrix::from_columns(&[vec![creal(1.0), creal(1.0)]]).unwrap();
        let rhs = CMatrix::from_columns(&[vec![creal(1.0), creal(3.0)]]).unwrap();
        let x = lstsq(&a, &rhs).unwrap();
        assert!((x[(0, 0)] - creal(2.0)).norm() < 1e-14);

        // rank deficient: duplicated column
        let base = random(6, 1, &mut rng);
        let a = CMatrix::from_columns(&[base.col(0), base.col(0)]).unwrap();
        let rhs = random(6, 1, &mut rng);
        let x = lstsq(&a, &rhs).unwrap();
        let via_pinv = pinv(&a).matmul(&rhs).unwrap();
        assert!(rel(&x, &via_pinv) < 1e-10);
        assert!((x[(0, 0)] - x[(1, 0)]).norm() < 1e-12);

        assert!(lstsq(&a, &random(5, 1, &mut rng)).is_err());
    }

    #[test]
    fn f32_instantiation_works() {
        let m = CMatrix::<f32>::from_fn(3, 2, |i, j| Complex::new(i as f32 + 1.0, j as f32));
        let left = pinv(&m).matmul(&m).unwrap();
        let err = left.sub(&CMatrix::identity(2)).unwrap().frob_norm();
        assert!(err < 1e-5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn moore_penrose_identities(rows in 1usize..65, cols in 1usize..65, seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let m = random(rows, cols, &mut rng);
                let p = pinv(&m);
                let mpm = m.matmul(&p).unwrap().matmul(&m).unwrap();
                let pmp = p.matmul(&m).unwrap().matmul(&p).unwrap();
                prop_assert!(rel(&mpm, &m) < 1e-10);
                prop_assert!(rel(&pmp, &p) < 1e-10);
            }

            #[test]
            fn lstsq_matches_pinv_and_residual_is_orthogonal(rows in 1usize..40, cols in 1usize..12, rhs in 1usize..4, seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random(rows, cols, &mut rng);
                let b = random(rows, rhs, &mut rng);
                let x = lstsq(&a, &b).unwrap();
                let xp = pinv(&a).matmul(&b).unwrap();
                prop_assert!(rel(&x, &xp) < 1e-10);
                let resid = a.matmul(&x).unwrap().sub(&b).unwrap();
                let ortho = a.adjoint().matmul(&resid).unwrap().frob_norm();
                prop_assert!(ortho <= 1e-8 * a.frob_norm() * b.frob_norm());
            }
        }
    }
}
