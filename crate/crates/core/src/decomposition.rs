//! CP (PARAFAC) fitting by alternating least squares, with and without a fixed
//! elementwise mask.
//!
//! The masked problem minimizes `‖𝒴 − 𝒳 ∗ 𝒟‖_F` over CP tensors `𝒳 = [[A, B, C]]`.
//! When every mask entry has unit modulus, `‖𝒴 − 𝒳∗𝒟‖ = ‖𝒴∗conj(𝒟) − 𝒳‖`, so the
//! masked fit is plain ALS on the demodulated tensor. Other masks go through a
//! per-row weighted least-squares solve.

use num_complex::Complex;
use rand::Rng;

use crate::error::{shape_err, Error, Result};
use crate::estimator::uniqueness_check;
use crate::linalg::{condition_number, lstsq, svd};
use crate::scalar::{creal, real, Real};
use crate::scene::{complex_normal, trial_rng, MaskTensor};
use crate::tensor::{cp_construct, khatri_rao, norm2, CMatrix, Tensor3};

/// Factor initialization strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    /// Complex Gaussian factors.
    Random,
    /// Leading singular vectors of each unfolding (first restart only; later
    /// restarts are random).
    Svd,
}

/// Solver used by [`als_masked`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskedSolver {
    /// Demodulate when the mask is unit modulus, weighted otherwise.
    Auto,
    /// Always demodulate; non-unit-modulus masks are rejected.
    Demodulate,
    /// Always solve the per-row weighted problems.
    Weighted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlsOptions {
    pub max_iters: usize,
    /// Stop once the relative residual changes by less than this fraction.
    pub rel_tol: f64,
    pub restarts: usize,
    pub init: Init,
    pub seed: u64,
    pub masked_solver: MaskedSolver,
}

impl Default for AlsOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            rel_tol: 1e-8,
            restarts: 3,
            init: Init::Random,
            seed: 0,
            masked_solver: MaskedSolver::Auto,
        }
    }
}

impl AlsOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.restarts == 0 || !(self.rel_tol > 0.0) {
            return Err(Error::Config(format!(
                "ALS options need max_iters ≥ 1, restarts ≥ 1, rel_tol > 0 (got {}, {}, {})",
                self.max_iters, self.restarts, self.rel_tol
            )));
        }
        Ok(())
    }
}

/// Condition number above which a factor is reported as degenerate.
pub const SWAMP_CONDITION: f64 = 1e8;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AlsDiagnostics {
    /// The iteration limit was reached before the tolerance.
    pub hit_max_iters: bool,
    /// Some factor has condition number above [`SWAMP_CONDITION`].
    pub swamp: bool,
    /// Columns left unnormalized because a factor column vanished.
    pub zero_columns: Vec<usize>,
    /// The identifiability bound `min(I,K)+min(J,K)+min(L,K) ≥ 2K+2` holds (or K = 1).
    pub identifiable: bool,
    /// Restart that produced the returned factors.
    pub best_restart: usize,
}

/// CP factors and convergence record.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorSet<T> {
    pub a: CMatrix<T>,
    pub b: CMatrix<T>,
    pub c: CMatrix<T>,
    /// Final relative residual `‖𝒴 − model‖_F / ‖𝒴‖_F` (masked metric for masked fits).
    pub fit: T,
    pub iters: usize,
    /// Relative residual after every sweep.
    pub residual_history: Vec<T>,
    pub diagnostics: AlsDiagnostics,
}

impl<T: Real> FactorSet<T> {
    pub fn k(&self) -> usize {
        self.a.cols()
    }

    /// `[[A, B, C]]` as a dense tensor.
    pub fn model(&self) -> Tensor3<T> {
        cp_construct(&self.a, &self.b, &self.c).expect("factor column counts agree")
    }

    /// Fit above one half with the iteration budget exhausted.
    pub fn non_converged(&self) -> bool {
        self.diagnostics.hit_max_iters && self.fit > real(0.5)
    }
}

/// Initial `(A, B, C)`.
pub type Factors<T> = (CMatrix<T>, CMatrix<T>, CMatrix<T>);

fn check_rank<T: Real>(t: &Tensor3<T>, k: usize) -> Result<()> {
    let (d1, d2, d3) = t.dims();
    if k == 0 || k > (d1 * d2).max(d1 * d3).max(d2 * d3) {
        return Err(Error::NotIdentifiable { k, d1, d2, d3 });
    }
    Ok(())
}

/// Random complex Gaussian factors for a tensor of `dims`.
pub fn random_factors<T: Real, R: Rng + ?Sized>(
    dims: (usize, usize, usize),
    k: usize,
    rng: &mut R,
) -> Factors<T> {
    let mut draw = |rows| CMatrix::from_fn(rows, k, |_, _| complex_normal(rng, T::one()));
    let a = draw(dims.0);
    let b = draw(dims.1);
    let c = draw(dims.2);
    (a, b, c)
}

/// Leading left singular vectors of each mode's column space, padded with
/// random columns where a mode has fewer than `k` directions.
pub fn svd_factors<T: Real, R: Rng + ?Sized>(t: &Tensor3<T>, k: usize, rng: &mut R) -> Result<Factors<T>> {
    let mut lead = |mode: usize| -> Result<CMatrix<T>> {
        // unfold(mode)ᵀ has the mode's index along its rows
        let m = t.unfold(mode)?.transpose();
        let u = svd(&m).u;
        Ok(CMatrix::from_fn(m.rows(), k, |i, r| {
            if r < u.cols() {
                u[(i, r)]
            } else {
                complex_normal(rng, T::one())
            }
        }))
    };
    Ok((lead(1)?, lead(2)?, lead(3)?))
}

/// Plain CP-ALS with `opts.restarts` random (or SVD) starts; best fit wins.
pub fn als_standard<T: Real>(t: &Tensor3<T>, k: usize, opts: &AlsOptions) -> Result<FactorSet<T>> {
    opts.validate()?;
    check_rank(t, k)?;
    best_of_restarts(t, k, opts, |init| als_core(t, None, init, opts))
}

/// CP-ALS from a given starting point (single run, no restarts).
pub fn als_standard_from<T: Real>(t: &Tensor3<T>, init: Factors<T>, opts: &AlsOptions) -> Result<FactorSet<T>> {
    opts.validate()?;
    check_init(t.dims(), &init)?;
    check_rank(t, init.0.cols())?;
    Ok(finish(t, als_core(t, None, init, opts), 0))
}

/// Masked CP-ALS: fits `𝒴 ≈ [[A, B, C]] ∗ 𝒟`.
pub fn als_masked<T: Real>(
    t: &Tensor3<T>,
    mask: &MaskTensor<T>,
    k: usize,
    opts: &AlsOptions,
) -> Result<FactorSet<T>> {
    opts.validate()?;
    check_rank(t, k)?;
    let route = masked_route(t, mask, opts)?;
    let mut fs = match &route {
        Route::Demodulated(d) => best_of_restarts(d, k, opts, |init| als_core(d, None, init, opts))?,
        Route::Weighted => {
            best_of_restarts(t, k, opts, |init| als_core(t, Some(mask.tensor()), init, opts))?
        }
    };
    fs.fit = masked_residual(t, mask.tensor(), &fs.a, &fs.b, &fs.c);
    Ok(fs)
}

/// Masked CP-ALS from a given starting point (single run).
pub fn als_masked_from<T: Real>(
    t: &Tensor3<T>,
    mask: &MaskTensor<T>,
    init: Factors<T>,
    opts: &AlsOptions,
) -> Result<FactorSet<T>> {
    opts.validate()?;
    check_init(t.dims(), &init)?;
    check_rank(t, init.0.cols())?;
    let mut fs = match masked_route(t, mask, opts)? {
        Route::Demodulated(d) => finish(&d, als_core(&d, None, init, opts), 0),
        Route::Weighted => finish(t, als_core(t, Some(mask.tensor()), init, opts), 0),
    };
    fs.fit = masked_residual(t, mask.tensor(), &fs.a, &fs.b, &fs.c);
    Ok(fs)
}

enum Route<T> {
    Demodulated(Tensor3<T>),
    Weighted,
}

fn masked_route<T: Real>(t: &Tensor3<T>, mask: &MaskTensor<T>, opts: &AlsOptions) -> Result<Route<T>> {
    if mask.dims() != t.dims() {
        return Err(shape_err(
            "als_masked",
            format!("mask {:?} vs tensor {:?}", mask.dims(), t.dims()),
        ));
    }
    let unit = mask.is_unit_modulus(real(1e-12));
    match opts.masked_solver {
        MaskedSolver::Weighted => Ok(Route::Weighted),
        MaskedSolver::Auto if !unit => Ok(Route::Weighted),
        MaskedSolver::Demodulate if !unit => Err(Error::MaskRejected),
        _ => Ok(Route::Demodulated(t.hadamard(&mask.tensor().conj())?)),
    }
}

fn check_init<T: Real>(dims: (usize, usize, usize), init: &Factors<T>) -> Result<()> {
    let k = init.0.cols();
    let ok = init.0.rows() == dims.0
        && init.1.rows() == dims.1
        && init.2.rows() == dims.2
        && init.1.cols() == k
        && init.2.cols() == k;
    if ok {
        Ok(())
    } else {
        Err(shape_err("als init", format!("factors do not fit dims {dims:?}")))
    }
}

fn best_of_restarts<T: Real>(
    t: &Tensor3<T>,
    k: usize,
    opts: &AlsOptions,
    mut run: impl FnMut(Factors<T>) -> RawRun<T>,
) -> Result<FactorSet<T>> {
    let mut best: Option<(RawRun<T>, usize)> = None;
    for restart in 0..opts.restarts {
        let mut rng = trial_rng(opts.seed, restart as u64);
        let init = if opts.init == Init::Svd && restart == 0 {
            svd_factors(t, k, &mut rng)?
        } else {
            random_factors(t.dims(), k, &mut rng)
        };
        let res = run(init);
        let better = match &best {
            None => true,
            Some((b, _)) => res.residual < b.residual,
        };
        if better {
            best = Some((res, restart));
        }
        if best.as_ref().is_some_and(|(b, _)| b.residual == T::zero()) {
            break;
        }
    }
    let (raw, restart) = best.expect("at least one restart");
    Ok(finish(t, raw, restart))
}

struct RawRun<T> {
    factors: Factors<T>,
    residual: T,
    history: Vec<T>,
    hit_max_iters: bool,
}

fn finish<T: Real>(t: &Tensor3<T>, raw: RawRun<T>, restart: usize) -> FactorSet<T> {
    let (a, b, c) = raw.factors;
    let k = a.cols();
    let (d1, d2, d3) = t.dims();
    let swamp = [&a, &b, &c]
        .iter()
        .any(|f| condition_number(*f) > real::<T>(SWAMP_CONDITION));
    let fs = FactorSet {
        a,
        b,
        c,
        fit: raw.residual,
        iters: raw.history.len(),
        residual_history: raw.history,
        diagnostics: AlsDiagnostics {
            hit_max_iters: raw.hit_max_iters,
            swamp,
            zero_columns: Vec::new(),
            identifiable: k == 1 || uniqueness_check(d1, d2, d3, k).holds,
            best_restart: restart,
        },
    };
    normalize_factors(fs)
}

fn masked_residual<T: Real>(
    t: &Tensor3<T>,
    mask: &Tensor3<T>,
    a: &CMatrix<T>,
    b: &CMatrix<T>,
    c: &CMatrix<T>,
) -> T {
    let norm = t.frob_norm();
    if norm == T::zero() {
        return T::zero();
    }
    let model = cp_construct(a, b, c).expect("conformable factors");
    let resid: Vec<Complex<T>> = t
        .as_slice()
        .iter()
        .zip(model.as_slice())
        .zip(mask.as_slice())
        .map(|((&y, &x), &d)| y - x * d)
        .collect();
    norm2(&resid) / norm
}

/// The alternating sweeps. `weights = None` is standard ALS; `Some(𝒟)` solves
/// each factor row as its own weighted least-squares problem.
fn als_core<T: Real>(
    t: &Tensor3<T>,
    weights: Option<&Tensor3<T>>,
    init: Factors<T>,
    opts: &AlsOptions,
) -> RawRun<T> {
    let norm = t.frob_norm();
    let (mut a, mut b, mut c) = init;
    let k = a.cols();
    if norm == T::zero() {
        let (d1, d2, d3) = t.dims();
        return RawRun {
            factors: (CMatrix::zeros(d1, k), CMatrix::zeros(d2, k), CMatrix::zeros(d3, k)),
            residual: T::zero(),
            history: Vec::new(),
            hit_max_iters: false,
        };
    }
    let unfoldings = [
        t.unfold(1).expect("mode 1"),
        t.unfold(2).expect("mode 2"),
        t.unfold(3).expect("mode 3"),
    ];
    let rel_tol = real::<T>(opts.rel_tol);
    let floor = T::epsilon() * real(100.0);
    let mut history = Vec::with_capacity(opts.max_iters.min(4096));
    let mut prev: Option<T> = None;
    let mut hit_max_iters = true;

    for _ in 0..opts.max_iters {
        match weights {
            None => {
                a = solve_mode(&khatri_rao(&b, &c).unwrap(), &unfoldings[0]);
                b = solve_mode(&khatri_rao(&c, &a).unwrap(), &unfoldings[1]);
                c = solve_mode(&khatri_rao(&a, &b).unwrap(), &unfoldings[2]);
            }
            Some(w) => {
                a = solve_weighted(t, w, &b, &c, Mode::First);
                b = solve_weighted(t, w, &a, &c, Mode::Second);
                c = solve_weighted(t, w, &a, &b, Mode::Third);
            }
        }
        rebalance(&mut a, &mut b, &mut c);

        let residual = match weights {
            None => {
                let model = khatri_rao(&a, &b).unwrap().matmul(&c.transpose()).unwrap();
                unfoldings[2].sub(&model).unwrap().frob_norm() / norm
            }
            Some(w) => masked_residual(t, w, &a, &b, &c),
        };
        history.push(residual);
        let done = residual <= floor
            || prev.is_some_and(|p: T| (p - residual).abs() <= rel_tol * p);
        prev = Some(residual);
        if done {
            hit_max_iters = false;
            break;
        }
    }
    RawRun {
        factors: (a, b, c),
        residual: prev.unwrap_or(T::one()),
        history,
        hit_max_iters,
    }
}

/// Solves `unfolding ≈ design · Xᵀ` for `X`.
fn solve_mode<T: Real>(design: &CMatrix<T>, unfolding: &CMatrix<T>) -> CMatrix<T> {
    lstsq(design, unfolding)
        .expect("unfolding rows match design rows")
        .transpose()
}

#[derive(Clone, Copy)]
enum Mode {
    First,
    Second,
    Third,
}

/// Row-by-row weighted update of one factor with the other two fixed.
///
/// For mode 1, row `i` of `A` minimizes `Σ_{j,l} |y_ijl − d_ijl·Σ_r a_ir f_jr g_lr|²`.
fn solve_weighted<T: Real>(
    t: &Tensor3<T>,
    w: &Tensor3<T>,
    f: &CMatrix<T>,
    g: &CMatrix<T>,
    mode: Mode,
) -> CMatrix<T> {
    let (d1, d2, d3) = t.dims();
    let k = f.cols();
    let (rows, n1, n2) = match mode {
        Mode::First => (d1, d2, d3),
        Mode::Second => (d2, d3, d1),
        Mode::Third => (d3, d1, d2),
    };
    // f indexes the first remaining mode, g the second, in cyclic order
    let (f, g) = match mode {
        Mode::Second => (g, f),
        _ => (f, g),
    };
    let index = |row: usize, x: usize, y: usize| match mode {
        Mode::First => (row, x, y),
        Mode::Second => (y, row, x),
        Mode::Third => (x, y, row),
    };
    let mut out = CMatrix::zeros(rows, k);
    let mut design = CMatrix::zeros(n1 * n2, k);
    let mut rhs = CMatrix::zeros(n1 * n2, 1);
    for row in 0..rows {
        for x in 0..n1 {
            for y in 0..n2 {
                let idx = index(row, x, y);
                let d = w[idx];
                let r = x * n2 + y;
                for col in 0..k {
                    design[(r, col)] = d * f[(x, col)] * g[(y, col)];
                }
                rhs[(r, 0)] = t[idx];
            }
        }
        let sol = lstsq(&design, &rhs).expect("shapes agree");
        for col in 0..k {
            out[(row, col)] = sol[(col, 0)];
        }
    }
    out
}

/// Moves column scale from A and B into C. Leaves the model unchanged.
fn rebalance<T: Real>(a: &mut CMatrix<T>, b: &mut CMatrix<T>, c: &mut CMatrix<T>) {
    for r in 0..a.cols() {
        let na = norm2(&a.col(r));
        let nb = norm2(&b.col(r));
        if na == T::zero() || nb == T::zero() {
            continue;
        }
        for i in 0..a.rows() {
            a[(i, r)] /= na;
        }
        for i in 0..b.rows() {
            b[(i, r)] /= nb;
        }
        let s = na * nb;
        for i in 0..c.rows() {
            c[(i, r)] *= s;
        }
    }
}

fn first_nonzero_phase<T: Real>(v: &[Complex<T>]) -> Complex<T> {
    v.iter()
        .find(|z| z.norm() > T::zero())
        .map(|z| z / z.norm())
        .unwrap_or_else(|| creal(T::one()))
}

/// Canonical scaling: unit-norm A and B columns whose first nonzero entry is
/// real positive; the removed scale and phase go into C.
///
/// Columns where A or B vanishes are left untouched and listed in
/// `diagnostics.zero_columns`.
pub fn normalize_factors<T: Real>(mut f: FactorSet<T>) -> FactorSet<T> {
    f.diagnostics.zero_columns.clear();
    for r in 0..f.a.cols() {
        let ca = f.a.col(r);
        let cb = f.b.col(r);
        let na = norm2(&ca);
        let nb = norm2(&cb);
        if na == T::zero() || nb == T::zero() {
            f.diagnostics.zero_columns.push(r);
            continue;
        }
        let sa = first_nonzero_phase(&ca).scale(na);
        let sb = first_nonzero_phase(&cb).scale(nb);
        let new_a: Vec<_> = ca.iter().map(|&z| z / sa).collect();
        let new_b: Vec<_> = cb.iter().map(|&z| z / sb).collect();
        let new_c: Vec<_> = f.c.col(r).iter().map(|&z| z * sa * sb).collect();
        f.a.set_col(r, &new_a);
        f.b.set_col(r, &new_b);
        f.c.set_col(r, &new_c);
    }
    f
}

/// `|xᴴy| / (‖x‖·‖y‖)`; zero if either vector vanishes.
pub fn congruence<T: Real>(x: &[Complex<T>], y: &[Complex<T>]) -> T {
    let nx = norm2(x);
    let ny = norm2(y);
    if nx == T::zero() || ny == T::zero() {
        return T::zero();
    }
    crate::tensor::inner(x, y).norm() / (nx * ny)
}

/// Best column matching of `estimate` to `truth` by congruence.
///
/// Returns `(perm, congruences)` where estimate column `perm[r]` pairs with
/// truth column `r`.
pub fn match_columns<T: Real>(estimate: &CMatrix<T>, truth: &CMatrix<T>) -> (Vec<usize>, Vec<T>) {
    let k = truth.cols();
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|r| {
            (0..estimate.cols())
                .map(|e| -congruence(&truth.col(r), &estimate.col(e)).to_f64().unwrap_or(0.0))
                .collect()
        })
        .collect();
    let perm = crate::matching::min_cost_assignment(&cost);
    let cong = perm
        .iter()
        .enumerate()
        .map(|(r, &e)| congruence(&truth.col(r), &estimate.col(e)))
        .collect();
    (perm, cong)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{build_mask, ddma_matrix, RadarConfig};

    fn random_tensor_from(k: usize, dims: (usize, usize, usize), seed: u64) -> (Tensor3<f64>, Factors<f64>) {
        let f: Factors<f64> = random_factors(dims, k, &mut trial_rng(seed, 99));
        (cp_construct(&f.0, &f.1, &f.2).unwrap(), f)
    }

    #[test]
    fn rank_one_noiseless_fits_quickly() {
        let (t, _) = random_tensor_from(1, (3, 4, 5), 1);
        let fs = als_standard(&t, 1, &AlsOptions::default()).unwrap();
        assert!(fs.fit <= 1e-8, "fit {}", fs.fit);
        assert!(fs.iters <= 50, "iters {}", fs.iters);
    }

    #[test]
    fn zero_tensor_gives_zero_factors() {
        let t = Tensor3::<f64>::zeros(3, 3, 3);
        let fs = als_standard(&t, 2, &AlsOptions::default()).unwrap();
        assert_eq!(fs.fit, 0.0);
        assert!(fs.a.as_slice().iter().all(|z| z.norm() == 0.0));
        assert_eq!(fs.diagnostics.zero_columns, vec![0, 1]);
    }

    #[test]
    fn rank_two_recovery_up_to_permutation() {
        let (t, truth) = random_tensor_from(2, (5, 6, 7), 3);
        let fs = als_standard(&t, 2, &AlsOptions::default()).unwrap();
        for (est, tru) in [(&fs.a, &truth.0), (&fs.b, &truth.1), (&fs.c, &truth.2)] {
            let (_, cong) = match_columns(est, tru);
            assert!(cong.iter().all(|&c| c >= 0.999), "{cong:?}");
        }
    }

    #[test]
    fn rejects_unidentifiable_rank() {
        let t = Tensor3::<f64>::zeros(2, 2, 2);
        assert!(matches!(
            als_standard(&t, 5, &AlsOptions::default()),
            Err(Error::NotIdentifiable { .. })
        ));
        assert!(als_standard(&t, 0, &AlsOptions::default()).is_err());
    }

    #[test]
    fn options_validation() {
        let t = Tensor3::<f64>::zeros(2, 2, 2);
        let bad = AlsOptions {
            restarts: 0,
            ..AlsOptions::default()
        };
        assert!(als_standard(&t, 1, &bad).is_err());
    }

    #[test]
    fn all_ones_mask_matches_standard() {
        let (t, _) = random_tensor_from(2, (4, 3, 6), 5);
        let mut noisy = t.clone();
        let noise = crate::scene::add_noise_with_power(&t, 0.01, &mut trial_rng(1, 1));
        noisy.as_mut_slice().copy_from_slice(noise.as_slice());
        let opts = AlsOptions::default();
        let std = als_standard(&noisy, 2, &opts).unwrap();
        let masked = als_masked(&noisy, &MaskTensor::ones(noisy.dims()), 2, &opts).unwrap();
        assert_eq!(std.a, masked.a);
        assert_eq!(std.b, masked.b);
        assert_eq!(std.c, masked.c);
    }

    #[test]
    fn masked_recovers_steering_columns() {
        let cfg = RadarConfig::<f64>::new(4, 4, 16, 50e3, 10e-6, 40e6).unwrap();
        let a = crate::scene::steering_matrix(&[-0.5, 0.4], 4);
        let b = crate::scene::steering_matrix(&[-0.25, 0.35], 4);
        let c = CMatrix::from_fn(16, 2, |q, k| {
            crate::scalar::cis(std::f64::consts::TAU * [0.02, -0.05][k] * (q + 1) as f64)
        });
        let mask = build_mask(&cfg);
        let y = cp_construct(&a, &b, &c).unwrap().hadamard(mask.tensor()).unwrap();
        let fs = als_masked(&y, &mask, 2, &AlsOptions::default()).unwrap();
        let (_, ca) = match_columns(&fs.a, &a);
        let (_, cb) = match_columns(&fs.b, &b);
        assert!(ca.iter().chain(&cb).all(|&x| x >= 0.999), "{ca:?} {cb:?}");

        // wrong mask: transmit rows of W shuffled
        let w = ddma_matrix(&cfg);
        let shuffled = w.select_rows(&[2, 0, 3, 1]);
        let wrong = MaskTensor::from_generator(shuffled, cfg.n);
        let bad = als_masked(&y, &wrong, 2, &AlsOptions::default()).unwrap();
        assert!(bad.fit >= 10.0 * fs.fit.max(1e-12), "{} vs {}", bad.fit, fs.fit);
    }

    #[test]
    fn demodulate_solver_rejects_non_unit_mask() {
        let (t, _) = random_tensor_from(1, (2, 2, 2), 1);
        let mask = MaskTensor::from_tensor(t.map(|_| creal(2.0)));
        let opts = AlsOptions {
            masked_solver: MaskedSolver::Demodulate,
            ..AlsOptions::default()
        };
        assert_eq!(als_masked(&t, &mask, 1, &opts), Err(Error::MaskRejected));
        // auto picks the weighted path and still fits
        let fs = als_masked(&t.map(|z| z * 2.0), &mask, 1, &AlsOptions::default()).unwrap();
        assert!(fs.fit < 1e-8);
    }

    #[test]
    fn weighted_path_handles_zero_entries() {
        let (t, _) = random_tensor_from(2, (4, 5, 6), 8);
        let mut w = t.map(|_| creal(1.0));
        for (idx, z) in w.as_mut_slice().iter_mut().enumerate() {
            if idx % 7 == 3 {
                *z = creal(0.0);
            }
        }
        let mask = MaskTensor::from_tensor(w.clone());
        assert!(mask.has_zero_entries());
        let y = t.hadamard(&w).unwrap();
        let fs = als_masked(&y, &mask, 2, &AlsOptions::default()).unwrap();
        assert!(fs.fit < 1e-6, "fit {}", fs.fit);
    }

    #[test]
    fn normalize_is_idempotent_and_model_preserving() {
        let (t, f) = random_tensor_from(3, (4, 5, 3), 11);
        let fs = FactorSet {
            a: f.0,
            b: f.1,
            c: f.2,
            fit: 0.0,
            iters: 0,
            residual_history: vec![],
            diagnostics: AlsDiagnostics::default(),
        };
        let once = normalize_factors(fs);
        let model = once.model();
        assert!(model.sub(&t).unwrap().frob_norm() <= 1e-12 * t.frob_norm());
        for r in 0..3 {
            assert!((norm2(&once.a.col(r)) - 1.0).abs() < 1e-14);
            assert!(once.a[(0, r)].im.abs() < 1e-15 && once.a[(0, r)].re > 0.0);
        }
        let twice = normalize_factors(once.clone());
        assert!(twice.a.sub(&once.a).unwrap().frob_norm() < 1e-14);
        assert!(twice.c.sub(&once.c).unwrap().frob_norm() < 1e-12 * once.c.frob_norm());

        // scaling a column of A by 5j is absorbed by C
        let mut scaled = once.clone();
        let col: Vec<_> = scaled.a.col(1).iter().map(|z| z * Complex::new(0.0, 5.0)).collect();
        scaled.a.set_col(1, &col);
        let renorm = normalize_factors(scaled.clone());
        assert!(renorm.model().sub(&scaled.model()).unwrap().frob_norm() <= 1e-12 * t.frob_norm());
        assert!(renorm.a.sub(&once.a).unwrap().frob_norm() < 1e-13);
    }

    #[test]
    fn residual_history_is_monotone() {
        let (t, _) = random_tensor_from(3, (4, 5, 6), 21);
        let noisy = crate::scene::add_noise(&t, 5.0, &mut trial_rng(3, 3));
        let fs = als_standard(&noisy, 3, &AlsOptions::default()).unwrap();
        for w in fs.residual_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
    }

    #[test]
    fn svd_init_runs() {
        let (t, _) = random_tensor_from(2, (5, 6, 7), 31);
        let opts = AlsOptions {
            init: Init::Svd,
            restarts: 1,
            ..AlsOptions::default()
        };
        let fs = als_standard(&t, 2, &opts).unwrap();
        assert!(fs.fit < 1e-8);
    }

    #[test]
    fn f32_fit() {
        let f: Factors<f32> = random_factors((4, 4, 5), 2, &mut trial_rng(2, 2));
        let t = cp_construct(&f.0, &f.1, &f.2).unwrap();
        let fs = als_standard(&t, 2, &AlsOptions::default()).unwrap();
        assert!(fs.fit < 1e-4, "fit {}", fs.fit);
    }
}
