//! Joint DOD/DOA estimation.
//!
//! The proposed estimator augments the data tensor with two overlapping
//! subarrays (transmit side, then receive side), fits each with masked CP-ALS,
//! and reads angles off the shift invariance between the stacked halves of the
//! Vandermonde factor. Two baselines work on the per-transmitter decimated
//! tensor: plain CP-ALS and LS-ESPRIT on the Khatri-Rao array manifold.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::decomposition::{als_masked, als_standard, AlsOptions, FactorSet};
use crate::error::{shape_err, Error, Result};
use crate::linalg::{eig, inverse, lstsq, rank_cutoff, svd};
use crate::matching::min_cost_assignment;
use crate::scalar::Real;
use crate::scene::MaskTensor;
use crate::tensor::{inner, norm2, CMatrix, Tensor3};

/// Estimation method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Subarray-augmented masked CP + shift invariance.
    Proposed,
    /// Plain CP-ALS on the decimated `M × N × Q/M` tensor.
    ParafacSmall,
    /// LS-ESPRIT on the decimated `MN × Q/M` snapshot matrix.
    Esprit,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Proposed, Method::ParafacSmall, Method::Esprit];

    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::ParafacSmall => "parafac_small",
            Method::Esprit => "esprit",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown method '{s}' (expected proposed, parafac_small or esprit)")))
    }
}

/// Convergence summary of one decomposition inside an estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary<T> {
    pub fit: T,
    pub iters: usize,
    pub hit_max_iters: bool,
    pub swamp: bool,
}

impl<T: Real> RunSummary<T> {
    fn of(fs: &FactorSet<T>) -> Self {
        Self {
            fit: fs.fit,
            iters: fs.iters,
            hit_max_iters: fs.diagnostics.hit_max_iters,
            swamp: fs.diagnostics.swamp,
        }
    }
}

/// Warning flags raised during estimation. None of them abort the estimate.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EstimationFlags {
    /// An eigenvalue phase fell outside the physical range and was clamped.
    pub clamped: bool,
    /// Two pairing candidates were indistinguishable.
    pub ambiguous_pairing: bool,
    /// Some ALS run hit its iteration limit with relative residual above 0.5.
    pub non_converged: bool,
    /// `K > 1` and the identifiability bound fails for the data dimensions.
    pub uniqueness_violated: bool,
}

impl EstimationFlags {
    pub fn any(&self) -> bool {
        self.clamped || self.ambiguous_pairing || self.non_converged || self.uniqueness_violated
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationResult<T> {
    /// `(dod, doa)` in radians, sorted by DOD.
    pub pairs: Vec<(T, T)>,
    /// Eigenvalues of the transmit rotation operator.
    pub eig_tx: Vec<Complex<T>>,
    /// Eigenvalues of the receive rotation operator.
    pub eig_rx: Vec<Complex<T>>,
    /// One entry per decomposition performed (none for ESPRIT).
    pub runs: Vec<RunSummary<T>>,
    pub method: Method,
    pub flags: EstimationFlags,
}

impl<T: Real> EstimationResult<T> {
    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    pub fn dods(&self) -> Vec<T> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn doas(&self) -> Vec<T> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    /// Pairs in degrees.
    pub fn pairs_deg(&self) -> Vec<(f64, f64)> {
        let deg = |x: T| x.to_f64().unwrap_or(f64::NAN).to_degrees();
        self.pairs.iter().map(|&(a, b)| (deg(a), deg(b))).collect()
    }
}

/// Stacks the `M−1`-element transmit subarrays along mode 1.
///
/// Output slices `i` and `i + M − 1` come from transmit elements `i` and `i + 1`.
/// The mask is stacked the same way, so its top half carries `W` without its
/// last row and its bottom half `W` without its first row.
pub fn build_transmit_augmented<T: Real>(
    y: &Tensor3<T>,
    mask: &MaskTensor<T>,
) -> Result<(Tensor3<T>, MaskTensor<T>)> {
    augment(y, mask, 1)
}

/// Stacks the `N−1`-element receive subarrays along mode 2.
pub fn build_receive_augmented<T: Real>(
    y: &Tensor3<T>,
    mask: &MaskTensor<T>,
) -> Result<(Tensor3<T>, MaskTensor<T>)> {
    augment(y, mask, 2)
}

fn augment<T: Real>(y: &Tensor3<T>, mask: &MaskTensor<T>, mode: usize) -> Result<(Tensor3<T>, MaskTensor<T>)> {
    let size = y.dim(mode)?;
    if size < 2 {
        return Err(shape_err(
            "augment",
            format!("mode-{mode} size {size}; need at least 2 elements"),
        ));
    }
    if mask.dims() != y.dims() {
        return Err(shape_err(
            "augment",
            format!("mask {:?} vs data {:?}", mask.dims(), y.dims()),
        ));
    }
    let stack = |t: &Tensor3<T>| -> Result<Tensor3<T>> {
        t.slice_mode(mode, 0..size - 1)?
            .concat(&t.slice_mode(mode, 1..size)?, mode)
    };
    let data = stack(y)?;
    let (_, n, _) = y.dims();
    let aug_mask = match (mask.generator(), mode) {
        (Some(g), 1) => MaskTensor::from_generator(g.row_range(0..size - 1).vstack(&g.row_range(1..size))?, n),
        (Some(g), _) => MaskTensor::from_generator(g.clone(), 2 * (n - 1)),
        (None, _) => MaskTensor::from_tensor(stack(mask.tensor())?),
    };
    Ok((data, aug_mask))
}

/// Angles recovered from a shift-invariant factor.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedAngles<T> {
    /// Angle for each factor column, radians.
    pub per_column: Vec<T>,
    /// Eigenvalue assigned to each factor column.
    pub eigenvalues: Vec<Complex<T>>,
    /// The same angles sorted ascending.
    pub sorted: Vec<T>,
    pub clamped: bool,
    /// `‖F₂ − F₁Γ‖_F / ‖F₂‖_F`.
    pub residual: T,
}

/// Splits `f0` (`2P × K`) into halves `F₁`, `F₂`, solves `F₂ ≈ F₁Γ` in the
/// least-squares sense and converts each eigenvalue `λ` of `Γ` to
/// `asin(−arg λ / π)`.
///
/// Each eigenvalue is attached to a column of `f0` through its eigenvector:
/// when `F₁ = A₁ΠΛ`, the eigenvectors of `Γ` are the columns of `(ΠΛ)⁻¹`.
pub fn angles_from_stacked_factor<T: Real>(f0: &CMatrix<T>) -> Result<StackedAngles<T>> {
    let (rows, k) = f0.shape();
    if rows % 2 != 0 || k == 0 {
        return Err(shape_err(
            "angles_from_stacked_factor",
            format!("{rows}×{k}; need an even row count and at least one column"),
        ));
    }
    let p = rows / 2;
    if p < k {
        return Err(Error::Estimation(format!(
            "subarray of {p} rows cannot resolve {k} columns"
        )));
    }
    let f1 = f0.row_range(0..p);
    let f2 = f0.row_range(p..rows);
    let gamma = lstsq(&f1, &f2)?;
    let residual = {
        let n2 = f2.frob_norm();
        let r = f2.sub(&f1.matmul(&gamma)?)?.frob_norm();
        if n2 > T::zero() {
            r / n2
        } else {
            r
        }
    };
    let e = eig(&gamma)?;

    // eigenvalue index r belongs to the column where its eigenvector peaks
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|col| {
            (0..k)
                .map(|r| -e.vectors[(col, r)].norm().to_f64().unwrap_or(0.0))
                .collect()
        })
        .collect();
    let assign = min_cost_assignment(&cost);

    let mut clamped = false;
    let mut per_column = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    for &r in &assign {
        let (angle, c) = angle_from_eigenvalue(e.values[r]);
        clamped |= c;
        per_column.push(angle);
        eigenvalues.push(e.values[r]);
    }
    let mut sorted = per_column.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(StackedAngles {
        per_column,
        eigenvalues,
        sorted,
        clamped,
        residual,
    })
}

/// `asin(−arg λ / π)` with the sine clamped to `[−1, 1]`; reports clamping.
pub fn angle_from_eigenvalue<T: Real>(lambda: Complex<T>) -> (T, bool) {
    let s = -lambda.arg() / T::PI();
    let clamped = s.abs() > T::one();
    (s.max(-T::one()).min(T::one()).asin(), clamped)
}

/// Stacks rows `0..P−1` over rows `1..P` of a single factor.
fn shift_stack<T: Real>(f: &CMatrix<T>) -> Result<CMatrix<T>> {
    let p = f.rows();
    if p < 2 {
        return Err(Error::Estimation(format!("factor with {p} rows has no shift invariance")));
    }
    f.row_range(0..p - 1).vstack(&f.row_range(1..p))
}

/// Result of [`pair_angles`].
#[derive(Clone, Debug, PartialEq)]
pub struct Pairing<T> {
    /// `(dod, doa)` per transmit-run column.
    pub pairs: Vec<(T, T)>,
    /// Receive-run column chosen for each transmit-run column.
    pub rx_column: Vec<usize>,
    /// `|normalized correlation|` of each chosen pair.
    pub correlation: Vec<T>,
    pub ambiguous: bool,
}

/// Gap below which two pairing candidates count as tied.
pub const PAIRING_TIE: f64 = 1e-6;

/// Pairs the DODs of the transmit run with the DOAs of the receive run by the
/// correlation of their slow-time factors, which both decompositions share.
///
/// Greedy: repeatedly take the largest remaining `|correlation|`. A decision is
/// ambiguous when another candidate in the same row or column is within
/// [`PAIRING_TIE`].
pub fn pair_angles<T: Real>(
    tx: &FactorSet<T>,
    dods: &[T],
    rx: &FactorSet<T>,
    doas: &[T],
) -> Result<Pairing<T>> {
    let k = tx.k();
    if rx.k() != k || dods.len() != k || doas.len() != k {
        return Err(shape_err(
            "pair_angles",
            format!("tx K={k}, rx K={}, {} DODs, {} DOAs", rx.k(), dods.len(), doas.len()),
        ));
    }
    if tx.c.rows() != rx.c.rows() {
        return Err(shape_err("pair_angles", String::from("slow-time factors differ in length")));
    }
    let corr: Vec<Vec<T>> = (0..k)
        .map(|i| {
            let ci = tx.c.col(i);
            (0..k)
                .map(|j| {
                    let cj = rx.c.col(j);
                    let denom = norm2(&ci) * norm2(&cj);
                    if denom > T::zero() {
                        inner(&ci, &cj).norm() / denom
                    } else {
                        T::zero()
                    }
                })
                .collect()
        })
        .collect();

    let tie = crate::scalar::real::<T>(PAIRING_TIE);
    let mut row_done = vec![false; k];
    let mut col_done = vec![false; k];
    let mut rx_column = vec![0; k];
    let mut correlation = vec![T::zero(); k];
    let mut ambiguous = false;
    for _ in 0..k {
        let mut best: Option<(usize, usize)> = None;
        for i in (0..k).filter(|&i| !row_done[i]) {
            for j in (0..k).filter(|&j| !col_done[j]) {
                if best.is_none_or(|(bi, bj)| corr[i][j] > corr[bi][bj]) {
                    best = Some((i, j));
                }
            }
        }
        let (i, j) = best.expect("a free row and column remain");
        let top = corr[i][j];
        let rival = (0..k)
            .filter(|&jj| jj != j && !col_done[jj])
            .map(|jj| corr[i][jj])
            .chain((0..k).filter(|&ii| ii != i && !row_done[ii]).map(|ii| corr[ii][j]))
            .any(|c| top - c <= tie);
        ambiguous |= rival;
        row_done[i] = true;
        col_done[j] = true;
        rx_column[i] = j;
        correlation[i] = top;
    }
    let pairs = (0..k).map(|i| (dods[i], doas[rx_column[i]])).collect();
    Ok(Pairing {
        pairs,
        rx_column,
        correlation,
        ambiguous,
    })
}

/// Identifiability report for an `M × N × Q` rank-`K` decomposition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Uniqueness {
    /// `min(M,K) + min(N,K) + min(Q,K) ≥ 2K + 2`.
    pub holds: bool,
    /// Largest `K` satisfying the inequality (0 if none does).
    pub max_k: usize,
    /// `min{MN, MQ, NQ}`: the generic rank bound, reached almost surely.
    pub generic_max_k: usize,
    /// `K ≤ generic_max_k`.
    pub within_generic: bool,
}

/// Evaluates the identifiability bound.
///
/// The left side minus the right is `K − 2` while `K` is below every
/// dimension and decreases once `K` exceeds the largest, so the valid ranks
/// form an interval starting at 2 and a scan up to `M + N + Q` finds `max_k`.
/// `K = 1` never satisfies the inequality literally, although rank-one
/// decompositions are always unique; callers treat it separately.
pub fn uniqueness_check(m: usize, n: usize, q: usize, k: usize) -> Uniqueness {
    let holds_for = |k: usize| m.min(k) + n.min(k) + q.min(k) >= 2 * k + 2;
    let max_k = (1..=m + n + q).rev().find(|&k| holds_for(k)).unwrap_or(0);
    let generic_max_k = (m * n).min(m * q).min(n * q);
    Uniqueness {
        holds: holds_for(k),
        max_k,
        generic_max_k,
        within_generic: k <= generic_max_k,
    }
}

fn uniqueness_violated(dims: (usize, usize, usize), k: usize) -> bool {
    k > 1 && !uniqueness_check(dims.0, dims.1, dims.2, k).holds
}

fn sort_pairs<T: Real>(pairs: &mut [(T, T)]) {
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// The proposed estimator on the full `M × N × Q` modulated tensor.
pub fn estimate_proposed<T: Real>(
    y: &Tensor3<T>,
    mask: &MaskTensor<T>,
    k: usize,
    opts: &AlsOptions,
) -> Result<EstimationResult<T>> {
    let (y_tx, d_tx) = build_transmit_augmented(y, mask)?;
    let (y_rx, d_rx) = build_receive_augmented(y, mask)?;
    let (tx, rx) = rayon::join(
        || als_masked(&y_tx, &d_tx, k, opts),
        || als_masked(&y_rx, &d_rx, k, opts),
    );
    let (tx, rx) = (tx?, rx?);

    let dod = angles_from_stacked_factor(&tx.a)?;
    let b_stacked = {
        let n1 = rx.b.rows() / 2;
        rx.b.row_range(0..n1).vstack(&rx.b.row_range(n1..2 * n1))?
    };
    let doa = angles_from_stacked_factor(&b_stacked)?;
    let pairing = pair_angles(&tx, &dod.per_column, &rx, &doa.per_column)?;

    let mut pairs = pairing.pairs;
    sort_pairs(&mut pairs);
    Ok(EstimationResult {
        pairs,
        eig_tx: dod.eigenvalues,
        eig_rx: doa.eigenvalues,
        runs: vec![RunSummary::of(&tx), RunSummary::of(&rx)],
        method: Method::Proposed,
        flags: EstimationFlags {
            clamped: dod.clamped || doa.clamped,
            ambiguous_pairing: pairing.ambiguous,
            non_converged: tx.non_converged() || rx.non_converged(),
            uniqueness_violated: uniqueness_violated(y.dims(), k),
        },
    })
}

/// Plain CP-ALS on the decimated tensor; angles from the shift invariance
/// within each factor. Pairing is implicit in the shared column index.
pub fn baseline_parafac_small<T: Real>(
    y_small: &Tensor3<T>,
    k: usize,
    opts: &AlsOptions,
) -> Result<EstimationResult<T>> {
    let fs = als_standard(y_small, k, opts)?;
    let dod = angles_from_stacked_factor(&shift_stack(&fs.a)?)?;
    let doa = angles_from_stacked_factor(&shift_stack(&fs.b)?)?;
    let mut pairs: Vec<(T, T)> = dod
        .per_column
        .iter()
        .zip(&doa.per_column)
        .map(|(&a, &b)| (a, b))
        .collect();
    sort_pairs(&mut pairs);
    Ok(EstimationResult {
        pairs,
        eig_tx: dod.eigenvalues,
        eig_rx: doa.eigenvalues,
        runs: vec![RunSummary::of(&fs)],
        method: Method::ParafacSmall,
        flags: EstimationFlags {
            clamped: dod.clamped || doa.clamped,
            ambiguous_pairing: false,
            non_converged: fs.non_converged(),
            uniqueness_violated: uniqueness_violated(y_small.dims(), k),
        },
    })
}

/// LS-ESPRIT on the `MN × Q/M` snapshot matrix of the decimated tensor.
///
/// The signal subspace `U_s` spans `A ⊙ B`. Transmit rotation `Ψ_tx` comes from
/// rows with transmit index `0..M−1` versus `1..M`, receive rotation `Ψ_rx`
/// likewise over the receive index. Pairing uses the eigenvectors `T` of
/// `Ψ_tx`: `T⁻¹Ψ_rx T` is diagonal in the same target order.
pub fn baseline_esprit<T: Real>(y_small: &Tensor3<T>, k: usize) -> Result<EstimationResult<T>> {
    let (m, n, snapshots) = y_small.dims();
    if k == 0 {
        return Err(Error::Estimation("ESPRIT needs K ≥ 1".into()));
    }
    if snapshots < k {
        return Err(Error::Estimation(format!(
            "ESPRIT needs at least K = {k} snapshots, got {snapshots}"
        )));
    }
    if k >= m * n || m < 2 || n < 2 {
        return Err(Error::Estimation(format!(
            "ESPRIT needs M, N ≥ 2 and K < MN (M={m}, N={n}, K={k})"
        )));
    }
    // rows indexed i*N + j
    let x = y_small.unfold(3)?;
    let dec = svd(&x);
    let smax = dec.s.first().copied().unwrap_or_else(T::zero);
    if dec.s.len() < k || smax == T::zero() || dec.s[k - 1] <= rank_cutoff(x.rows(), x.cols(), smax) {
        return Err(Error::Estimation("signal subspace has collapsed".into()));
    }
    let us = dec.u.select_cols(&(0..k).collect::<Vec<_>>());

    let tx_lo: Vec<usize> = (0..(m - 1) * n).collect();
    let tx_hi: Vec<usize> = (n..m * n).collect();
    let rx_lo: Vec<usize> = (0..m).flat_map(|i| (0..n - 1).map(move |j| i * n + j)).collect();
    let rx_hi: Vec<usize> = (0..m).flat_map(|i| (1..n).map(move |j| i * n + j)).collect();
    let psi_tx = lstsq(&us.select_rows(&tx_lo), &us.select_rows(&tx_hi))?;
    let psi_rx = lstsq(&us.select_rows(&rx_lo), &us.select_rows(&rx_hi))?;

    let e = eig(&psi_tx)?;
    let t_inv = inverse(&e.vectors)?;
    let rx_diag = t_inv.matmul(&psi_rx)?.matmul(&e.vectors)?.diag();

    let mut clamped = false;
    let mut pairs = Vec::with_capacity(k);
    for r in 0..k {
        let (dod, c1) = angle_from_eigenvalue(e.values[r]);
        let (doa, c2) = angle_from_eigenvalue(rx_diag[r]);
        clamped |= c1 || c2;
        pairs.push((dod, doa));
    }
    sort_pairs(&mut pairs);
    Ok(EstimationResult {
        pairs,
        eig_tx: e.values,
        eig_rx: rx_diag,
        runs: Vec::new(),
        method: Method::Esprit,
        flags: EstimationFlags {
            clamped,
            ..EstimationFlags::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{build_mask, steering_matrix, RadarConfig, Target, TargetScene};
    use crate::tensor::cp_construct;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    fn scene(dods: &[f64], doas: &[f64], nus: &[f64]) -> TargetScene<f64> {
        TargetScene::new(
            dods.iter()
                .zip(doas)
                .zip(nus)
                .enumerate()
                .map(|(i, ((&p, &t), &v))| Target {
                    dod: deg(p),
                    doa: deg(t),
                    doppler: v,
                    rcs: Complex::new(1.0 + 0.3 * i as f64, -0.2),
                })
                .collect(),
        )
    }

    fn full_tensor(cfg: &RadarConfig<f64>, s: &TargetScene<f64>) -> Tensor3<f64> {
        let t = cp_construct(
            &s.transmit_steering(cfg.m),
            &s.receive_steering(cfg.n),
            &s.doppler_factor(cfg.q),
        )
        .unwrap();
        t.hadamard(build_mask(cfg).tensor()).unwrap()
    }

    fn small_tensor(cfg: &RadarConfig<f64>, s: &TargetScene<f64>) -> Tensor3<f64> {
        let pulses: Vec<usize> = (0..cfg.decimated_pulses()).map(|p| cfg.m * p + 1).collect();
        cp_construct(
            &s.transmit_steering(cfg.m),
            &s.receive_steering(cfg.n),
            &s.doppler_factor_at(&pulses),
        )
        .unwrap()
    }

    fn assert_pairs(res: &EstimationResult<f64>, truth: &[(f64, f64)], tol_deg: f64) {
        let got = res.pairs_deg();
        assert_eq!(got.len(), truth.len());
        for (g, t) in got.iter().zip(truth) {
            assert!(
                (g.0 - t.0).abs() <= tol_deg && (g.1 - t.1).abs() <= tol_deg,
                "{got:?} vs {truth:?}"
            );
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("music".parse::<Method>().is_err());
    }

    #[test]
    fn transmit_augmented_shapes_and_slices() {
        let cfg = RadarConfig::<f64>::paper();
        let y = Tensor3::from_fn((8, 10, 80), |i, j, k| Complex::new(i as f64, (j * 100 + k) as f64));
        let (ya, da) = build_transmit_augmented(&y, &build_mask(&cfg)).unwrap();
        assert_eq!(ya.dims(), (14, 10, 80));
        assert_eq!(da.dims(), (14, 10, 80));
        assert_eq!(ya[(3, 2, 5)], y[(3, 2, 5)]);
        assert_eq!(ya[(3 + 7, 2, 5)], y[(4, 2, 5)]);
        let w = crate::scene::ddma_matrix(&cfg);
        assert_eq!(da.tensor()[(6, 0, 9)], w[(6, 9)]);
        assert_eq!(da.tensor()[(7, 0, 9)], w[(1, 9)]);

        let (yr, dr) = build_receive_augmented(&y, &build_mask(&cfg)).unwrap();
        assert_eq!(yr.dims(), (8, 18, 80));
        assert_eq!(yr[(1, 9 + 4, 3)], y[(1, 5, 3)]);
        for j in 0..18 {
            assert_eq!(dr.tensor()[(5, j, 11)], w[(5, 11)]);
        }
    }

    #[test]
    fn smallest_transmit_augmentation() {
        let cfg = RadarConfig::<f64>::new(2, 2, 4, 50e3, 10e-6, 40e6).unwrap();
        let y = Tensor3::from_fn((2, 2, 4), |i, j, k| Complex::new((i * 10 + j) as f64, k as f64));
        let (ya, _) = build_transmit_augmented(&y, &build_mask(&cfg)).unwrap();
        assert_eq!(ya.dims(), (2, 2, 4));
        assert_eq!(ya, y);
        let cfg1 = RadarConfig::<f64>::new(1, 2, 4, 50e3, 10e-6, 40e6).unwrap();
        let y1 = Tensor3::zeros(1, 2, 4);
        assert!(build_transmit_augmented(&y1, &build_mask(&cfg1)).is_err());
    }

    #[test]
    fn augmented_halves_follow_masked_cp_model() {
        let cfg = RadarConfig::<f64>::desk();
        let s = scene(&[-30.0, 25.0], &[-15.0, 20.0], &[0.02, -0.05]);
        let y = full_tensor(&cfg, &s);
        let (ya, da) = build_transmit_augmented(&y, &build_mask(&cfg)).unwrap();
        let a = s.transmit_steering(cfg.m);
        let stacked = a.row_range(0..3).vstack(&a.row_range(1..4)).unwrap();
        let model = cp_construct(&stacked, &s.receive_steering(cfg.n), &s.doppler_factor(cfg.q))
            .unwrap()
            .hadamard(da.tensor())
            .unwrap();
        assert!(model.sub(&ya).unwrap().frob_norm() < 1e-10);

        let (yr, dr) = build_receive_augmented(&y, &build_mask(&cfg)).unwrap();
        let b = s.receive_steering(cfg.n);
        let stacked = b.row_range(0..3).vstack(&b.row_range(1..4)).unwrap();
        let model = cp_construct(&a, &stacked, &s.doppler_factor(cfg.q))
            .unwrap()
            .hadamard(dr.tensor())
            .unwrap();
        assert!(model.sub(&yr).unwrap().frob_norm() < 1e-10);
    }

    #[test]
    fn broadside_eigenvalue_is_one() {
        let a = steering_matrix::<f64>(&[0.0], 4);
        let f0 = a.row_range(0..3).vstack(&a.row_range(1..4)).unwrap();
        let out = angles_from_stacked_factor(&f0).unwrap();
        assert!((out.eigenvalues[0] - Complex::new(1.0, 0.0)).norm() < 1e-14);
        assert!(out.sorted[0].abs() < 1e-14);
    }

    #[test]
    fn exact_steering_angles() {
        let a = steering_matrix(&[deg(25.0), deg(-30.0)], 8);
        let f0 = shift_stack(&a).unwrap();
        let out = angles_from_stacked_factor(&f0).unwrap();
        assert!((out.sorted[0].to_degrees() + 30.0).abs() < 1e-9);
        assert!((out.sorted[1].to_degrees() - 25.0).abs() < 1e-9);
        assert!((out.per_column[0].to_degrees() - 25.0).abs() < 1e-9);
        assert!(out.residual < 1e-8);
        assert!(!out.clamped);
    }

    #[test]
    fn stacked_factor_rejects_underdetermined() {
        let a = steering_matrix(&[0.1, 0.2, 0.3], 2);
        let f0 = shift_stack(&a).unwrap();
        assert!(matches!(angles_from_stacked_factor(&f0), Err(Error::Estimation(_))));
    }

    #[test]
    fn uniqueness_examples() {
        assert!(uniqueness_check(8, 10, 80, 2).holds);
        assert!(!uniqueness_check(2, 2, 2, 3).holds);
        let u = uniqueness_check(8, 10, 80, 80);
        assert!(u.within_generic);
        assert_eq!(u.generic_max_k, 80);
        assert!(!u.holds);
        assert!(!uniqueness_check(5, 5, 5, 1).holds);
        assert_eq!(uniqueness_check(8, 10, 80, 2).max_k, 16);
    }

    #[test]
    fn proposed_noiseless_recovery() {
        let cfg = RadarConfig::<f64>::desk();
        let s = scene(&[-30.0, 25.0], &[-15.0, 20.0], &[0.02, -0.05]);
        let y = full_tensor(&cfg, &s);
        let res = estimate_proposed(&y, &build_mask(&cfg), 2, &AlsOptions::default()).unwrap();
        assert_pairs(&res, &[(-30.0, -15.0), (25.0, 20.0)], 1e-3);
        assert!(!res.flags.any(), "{:?}", res.flags);
        assert_eq!(res.runs.len(), 2);
    }

    #[test]
    fn proposed_single_target() {
        let cfg = RadarConfig::<f64>::desk();
        let s = scene(&[12.0], &[-40.0], &[0.03]);
        let y = full_tensor(&cfg, &s);
        let res = estimate_proposed(&y, &build_mask(&cfg), 1, &AlsOptions::default()).unwrap();
        assert_pairs(&res, &[(12.0, -40.0)], 1e-3);
        assert!(!res.flags.ambiguous_pairing && !res.flags.uniqueness_violated);
    }

    #[test]
    fn pairing_flags_identical_signatures() {
        let cfg = RadarConfig::<f64>::desk();
        let mut s = scene(&[-30.0, 25.0], &[-15.0, 20.0], &[0.02, 0.02]);
        s.targets[1].rcs = s.targets[0].rcs;
        let c = s.doppler_factor(cfg.q);
        let fs = |a: CMatrix<f64>| FactorSet {
            b: a.clone(),
            a,
            c: c.clone(),
            fit: 0.0,
            iters: 1,
            residual_history: vec![],
            diagnostics: Default::default(),
        };
        let tx = fs(s.transmit_steering(4));
        let rx = fs(s.receive_steering(4));
        let p = pair_angles(&tx, &[0.1, 0.2], &rx, &[0.3, 0.4]).unwrap();
        assert!(p.ambiguous);

        let s2 = scene(&[-30.0, 25.0], &[-15.0, 20.0], &[0.02, -0.05]);
        let c2 = s2.doppler_factor(cfg.q);
        let mut tx2 = tx.clone();
        tx2.c = c2.clone();
        let mut rx2 = rx.clone();
        rx2.c = c2.select_cols(&[1, 0]);
        let p = pair_angles(&tx2, &[0.1, 0.2], &rx2, &[0.3, 0.4]).unwrap();
        assert!(!p.ambiguous);
        assert_eq!(p.rx_column, vec![1, 0]);
        assert_eq!(p.pairs, vec![(0.1, 0.4), (0.2, 0.3)]);
        assert!(p.correlation.iter().all(|&c| c >= 0.999));
    }

    #[test]
    fn parafac_small_noiseless() {
        let cfg = RadarConfig::<f64>::desk();
        let s = scene(&[-30.0, 25.0], &[-15.0, 20.0], &[0.02, -0.05]);
        let res = baseline_parafac_small(&small_tensor(&cfg, &s), 2, &AlsOptions::default()).unwrap();
        assert_pairs(&res, &[(-30.0, -15.0), (25.0, 20.0)], 1e-3);
    }

    #[test]
    fn parafac_small_static_target_has_constant_doppler_column() {
        let cfg = RadarConfig::<f64>::desk();
        let s = scene(&[5.0], &[10.0], &[0.0]);
        let y = small_tensor(&cfg, &s);
        let fs = als_standard(&y, 1, &AlsOptions::default()).unwrap();
        let c = fs.c.col(0);
        assert!(c.iter().all(|z| (z - c[0]).norm() < 1e-10));
    }

    #[test]
    fn esprit_noiseless() {
        let cfg = RadarConfig::<f64>::desk();
        let s = scene(&[-30.0, 25.0], &[-15.0, 20.0], &[0.02, -0.05]);
        let res = baseline_esprit(&small_tensor(&cfg, &s), 2).unwrap();
        assert_pairs(&res, &[(-30.0, -15.0), (25.0, 20.0)], 1e-3);

        let s1 = scene(&[-7.0], &[33.0], &[0.01]);
        let res = baseline_esprit(&small_tensor(&cfg, &s1), 1).unwrap();
        assert_eq!(res.eig_tx.len(), 1);
        assert_pairs(&res, &[(-7.0, 33.0)], 1e-3);
    }

    #[test]
    fn esprit_errors() {
        let y = Tensor3::<f64>::zeros(4, 4, 1);
        assert!(baseline_esprit(&y, 2).is_err());
        let y = Tensor3::<f64>::zeros(4, 4, 8);
        assert!(matches!(baseline_esprit(&y, 2), Err(Error::Estimation(_))));
    }
}
