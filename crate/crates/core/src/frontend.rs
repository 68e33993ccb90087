//! Fast-time processing chain and the direct tensor shortcut.
//!
//! The chain follows the receiver: synthesize chirp echoes per receive element
//! and pulse, matched filter in fast time, gate the target range cell, then per
//! transmitter demodulate the DDMA carrier, lowpass to `±Δf/2` and decimate by
//! `M`. [`interpolate_restore`] brings the decimated tensor back to `Q` pulses
//! and reapplies the modulation so the proposed estimator can consume it.
//!
//! Fast-time samples are taken at rate `B`, so the chirp has `L = round(B·T)`
//! samples and one range cell is `1/B` of delay.

use std::io::{self, Write};

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{shape_err, Error, Result};
use crate::scalar::{cis, czero, from_usize, real, Real};
use crate::scene::{add_noise, build_mask, ddma_frequencies, ddma_matrix, RadarConfig, TargetScene};
use crate::tensor::{cp_construct, Tensor3};

/// Fast-time data indexed `(receive element, pulse, sample)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseCube<T> {
    pub data: Tensor3<T>,
}

impl<T: Real> PulseCube<T> {
    pub fn zeros(n: usize, q: usize, samples: usize) -> Self {
        Self {
            data: Tensor3::zeros(n, q, samples),
        }
    }

    pub fn receivers(&self) -> usize {
        self.data.dims().0
    }

    pub fn pulses(&self) -> usize {
        self.data.dims().1
    }

    pub fn samples(&self) -> usize {
        self.data.dims().2
    }

    /// Fast-time snapshot of receiver `n`, pulse `q` (0-based).
    pub fn snapshot(&self, n: usize, q: usize) -> &[Complex<T>] {
        self.data.fiber3(n, q)
    }
}

/// Sampled LFM chirp `u[l] = exp(jπ(l − L/2)²/L)`, unit modulus, `L` samples.
pub fn chirp<T: Real>(l: usize) -> Vec<Complex<T>> {
    let len = from_usize::<T>(l);
    let half = len / real(2.0);
    (0..l)
        .map(|i| {
            let t = from_usize::<T>(i) - half;
            cis(T::PI() * t * t / len)
        })
        .collect()
}

/// Where echoes land in the fast-time window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EchoGeometry {
    /// Delay in samples: one entry shared by all targets, or one per target.
    pub delays: Vec<usize>,
    /// Fast-time window length.
    pub samples: usize,
}

impl EchoGeometry {
    /// All targets in one range cell at `delay`; window `delay + 2L`.
    pub fn single_cell(l: usize, delay: usize) -> Self {
        Self {
            delays: vec![delay],
            samples: delay + 2 * l,
        }
    }

    fn delay(&self, k: usize) -> usize {
        if self.delays.len() == 1 {
            self.delays[0]
        } else {
            self.delays[k]
        }
    }

    fn validate(&self, k: usize, l: usize) -> Result<()> {
        if self.delays.len() != 1 && self.delays.len() != k {
            return Err(Error::Scene(format!(
                "{} delays for {k} targets",
                self.delays.len()
            )));
        }
        if let Some(&d) = self.delays.iter().find(|&&d| d + l > self.samples) {
            return Err(Error::Scene(format!(
                "echo at delay {d} with {l}-sample chirp overruns a {}-sample window",
                self.samples
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FastTimeOptions<T> {
    pub geometry: EchoGeometry,
    /// Per-sample SNR against the mean cube power; `None` is noiseless.
    pub snr_db: Option<T>,
    /// Active transmitters (0-based). `None` uses all of them.
    pub tx_subset: Option<Vec<usize>>,
}

impl<T: Real> FastTimeOptions<T> {
    pub fn noiseless(cfg: &RadarConfig<T>) -> Self {
        Self {
            geometry: EchoGeometry::single_cell(cfg.l, cfg.l / 2),
            snr_db: None,
            tx_subset: None,
        }
    }
}

/// Raw received chirp echoes.
///
/// Snapshot `(n, q)` holds `Σ_k σ_k β_n(θ_k) Σ_m α_m(φ_k) e^{j2π(f_m/f_a + ν_k)q} u`
/// placed at the target delay, with `q = 1..Q`.
pub fn synthesize_fast_time<T: Real, R: Rng + ?Sized>(
    scene: &TargetScene<T>,
    cfg: &RadarConfig<T>,
    opts: &FastTimeOptions<T>,
    rng: &mut R,
) -> Result<PulseCube<T>> {
    cfg.validate()?;
    opts.geometry.validate(scene.k(), cfg.l)?;
    let transmitters: Vec<usize> = match &opts.tx_subset {
        Some(set) => {
            if let Some(&bad) = set.iter().find(|&&m| m >= cfg.m) {
                return Err(Error::Config(format!("transmitter {bad} out of range (M = {})", cfg.m)));
            }
            set.clone()
        }
        None => (0..cfg.m).collect(),
    };
    let u = chirp::<T>(cfg.l);
    let a = scene.transmit_steering(cfg.m);
    let b = scene.receive_steering(cfg.n);
    let carriers: Vec<T> = ddma_frequencies(cfg.m, cfg.prf).into_iter().map(|f| f / cfg.prf).collect();

    let mut cube = PulseCube::zeros(cfg.n, cfg.q, opts.geometry.samples);
    for n in 0..cfg.n {
        for q in 0..cfg.q {
            let pulse = from_usize::<T>(q + 1);
            let snap = cube.data.fiber3_mut(n, q);
            for (k, target) in scene.targets.iter().enumerate() {
                let tx_sum = transmitters.iter().fold(czero::<T>(), |acc, &m| {
                    acc + a[(m, k)] * cis(T::TAU() * (carriers[m] + target.doppler) * pulse)
                });
                let g = target.rcs * b[(n, k)] * tx_sum;
                let d = opts.geometry.delay(k);
                for (x, &ul) in snap[d..d + cfg.l].iter_mut().zip(&u) {
                    *x += g * ul;
                }
            }
        }
    }
    if let Some(snr) = opts.snr_db {
        cube.data = add_noise(&cube.data, snr, rng);
    }
    Ok(cube)
}

fn forward<T: Real>(len: usize) -> std::sync::Arc<dyn Fft<T>> {
    FftPlanner::new().plan_fft_forward(len)
}

fn backward<T: Real>(len: usize) -> std::sync::Arc<dyn Fft<T>> {
    FftPlanner::new().plan_fft_inverse(len)
}

/// Fast-time correlation with the chirp: `out[τ] = Σ_l x[τ+l]·conj(u[l])` for
/// the `W − L + 1` lags that need no padding. A lone chirp peaks at `‖u‖² = L`.
pub fn matched_filter<T: Real>(cube: &PulseCube<T>, cfg: &RadarConfig<T>) -> Result<PulseCube<T>> {
    let w = cube.samples();
    if w < cfg.l {
        return Err(shape_err(
            "matched_filter",
            format!("{w} samples is shorter than the {}-sample chirp", cfg.l),
        ));
    }
    let cells = w - cfg.l + 1;
    let fwd = forward::<T>(w);
    let inv = backward::<T>(w);
    let mut u_spec = chirp::<T>(cfg.l);
    u_spec.resize(w, czero());
    fwd.process(&mut u_spec);
    let scale = T::one() / from_usize::<T>(w);

    let mut out = PulseCube::zeros(cube.receivers(), cube.pulses(), cells);
    out.data
        .as_mut_slice()
        .par_chunks_mut(cells)
        .zip(cube.data.as_slice().par_chunks(w))
        .for_each(|(dst, src)| {
            let mut buf = src.to_vec();
            fwd.process(&mut buf);
            for (x, uf) in buf.iter_mut().zip(&u_spec) {
                *x *= uf.conj();
            }
            inv.process(&mut buf);
            for (d, x) in dst.iter_mut().zip(&buf) {
                *d = x.scale(scale);
            }
        });
    Ok(out)
}

/// Slow-time spectra per receive element.
///
/// `maps[n]` is `Q × cells`: row `d` is Doppler bin `d` (frequency `d·f_a/Q`,
/// wrapped), column `r` is range cell `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeDopplerMap<T> {
    pub maps: Vec<crate::tensor::CMatrix<T>>,
}

impl<T: Real> RangeDopplerMap<T> {
    pub fn bins(&self) -> usize {
        self.maps.first().map_or(0, |m| m.rows())
    }

    pub fn cells(&self) -> usize {
        self.maps.first().map_or(0, |m| m.cols())
    }

    /// `|map|` along Doppler at one range cell for receiver `n`.
    pub fn doppler_slice(&self, n: usize, cell: usize) -> Vec<T> {
        let m = &self.maps[n];
        (0..m.rows()).map(|d| m[(d, cell)].norm()).collect()
    }

    /// Range cell with the largest total power over all receivers and bins.
    pub fn peak_cell(&self) -> usize {
        argmax(&(0..self.cells())
            .map(|r| {
                self.maps
                    .iter()
                    .map(|m| (0..m.rows()).map(|d| m[(d, r)].norm_sqr()).fold(T::zero(), |a, b| a + b))
                    .fold(T::zero(), |a, b| a + b)
            })
            .collect::<Vec<_>>())
    }

    /// Magnitude map of receiver `n` as CSV: one row per Doppler bin, one
    /// column per range cell.
    pub fn write_csv<W: Write>(&self, n: usize, mut out: W) -> io::Result<()> {
        let m = &self.maps[n];
        for d in 0..m.rows() {
            let row: Vec<String> = (0..m.cols())
                .map(|r| format!("{:e}", m[(d, r)].norm().to_f64().unwrap_or(f64::NAN)))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn argmax<T: Real>(v: &[T]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, T::neg_infinity()), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}

/// Slow-time FFT of every range cell.
pub fn range_doppler_map<T: Real>(cube: &PulseCube<T>) -> RangeDopplerMap<T> {
    let (n, q, cells) = cube.data.dims();
    let fwd = forward::<T>(q);
    let maps = (0..n)
        .into_par_iter()
        .map(|rx| {
            let mut m = crate::tensor::CMatrix::zeros(q, cells);
            let mut buf = vec![czero::<T>(); q];
            for r in 0..cells {
                for (p, x) in buf.iter_mut().enumerate() {
                    *x = cube.data[(rx, p, r)];
                }
                fwd.process(&mut buf);
                for (d, x) in buf.iter().enumerate() {
                    m[(d, r)] = *x;
                }
            }
            m
        })
        .collect();
    RangeDopplerMap { maps }
}

/// Indices of circular local maxima within `floor_db` of the largest value,
/// ascending.
pub fn dominant_peaks<T: Real>(values: &[T], floor_db: T) -> Vec<usize> {
    let len = values.len();
    if len == 0 {
        return Vec::new();
    }
    let top = values.iter().copied().fold(T::zero(), T::max);
    if top == T::zero() {
        return Vec::new();
    }
    let floor = top * real::<T>(10.0).powf(-floor_db / real(20.0));
    (0..len)
        .filter(|&i| {
            let prev = values[(i + len - 1) % len];
            let next = values[(i + 1) % len];
            values[i] >= floor && values[i] >= prev && values[i] > next
        })
        .collect()
}

/// Slow-time taper applied before the lowpass FFT.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Taper {
    #[default]
    Rectangular,
    Hann,
    /// 4-term Blackman-Harris (about −92 dB sidelobes).
    BlackmanHarris,
}

impl Taper {
    pub fn weights<T: Real>(self, len: usize) -> Vec<T> {
        let coeffs: &[f64] = match self {
            Taper::Rectangular => return vec![T::one(); len],
            Taper::Hann => &[0.5, 0.5],
            Taper::BlackmanHarris => &[0.35875, 0.48829, 0.14128, 0.01168],
        };
        let denom = len.max(2) as f64 - 1.0;
        (0..len)
            .map(|i| {
                let x = std::f64::consts::TAU * i as f64 / denom;
                let w: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(r, &c)| if r % 2 == 0 { c } else { -c } * (r as f64 * x).cos())
                    .sum();
                real(w)
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecimateOptions {
    /// Range cell to process; `None` picks the strongest cell.
    pub gate: Option<usize>,
    pub taper: Taper,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decimated<T> {
    /// `M × N × Q/M`; slice `p` corresponds to pulse `M·p + 1`.
    pub tensor: Tensor3<T>,
    pub gate: usize,
}

/// Strongest range cell of a matched-filtered cube (total power over receivers
/// and pulses).
pub fn detect_gate<T: Real>(cube: &PulseCube<T>) -> usize {
    let (n, q, cells) = cube.data.dims();
    let power: Vec<T> = (0..cells)
        .map(|r| {
            let mut acc = T::zero();
            for rx in 0..n {
                for p in 0..q {
                    acc += cube.data[(rx, p, r)].norm_sqr();
                }
            }
            acc
        })
        .collect();
    argmax(&power)
}

/// Separates transmitters at one range cell.
///
/// For each transmitter `m` and receiver `n`: demodulate by `e^{−j2π f_m q/f_a}`,
/// taper, FFT over the `Q` pulses, keep the `Q/M` bins around DC (ideal lowpass
/// at `±Δf/2`), inverse FFT of length `Q/M`. The result is scaled by the
/// chirp energy and taper sum, so a noiseless echo comes out as
/// `σ_k α_m β_n e^{j2πν_k(Mp+1)}` up to the filter response.
pub fn demodulate_decimate<T: Real>(
    cube: &PulseCube<T>,
    cfg: &RadarConfig<T>,
    opts: &DecimateOptions,
) -> Result<Decimated<T>> {
    cfg.validate()?;
    let (n, q, cells) = cube.data.dims();
    if n != cfg.n || q != cfg.q {
        return Err(shape_err(
            "demodulate_decimate",
            format!("cube {n}×{q} vs config {}×{}", cfg.n, cfg.q),
        ));
    }
    let gate = opts.gate.unwrap_or_else(|| detect_gate(cube));
    if gate >= cells {
        return Err(Error::Config(format!("range gate {gate} outside {cells} cells")));
    }
    let m_count = cfg.m;
    let p_count = cfg.decimated_pulses();
    let w = ddma_matrix(cfg);
    let taper = opts.taper.weights::<T>(q);
    let norm = taper.iter().fold(T::zero(), |a, &b| a + b) * from_usize::<T>(cfg.l);
    let fwd = forward::<T>(q);
    let inv = backward::<T>(p_count);
    let kept = lowpass_bins(q, p_count);

    let mut out = Tensor3::zeros(m_count, n, p_count);
    let fibers: Vec<(usize, usize, Vec<Complex<T>>)> = (0..m_count)
        .flat_map(|m| (0..n).map(move |rx| (m, rx)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(m, rx)| {
            let mut buf: Vec<Complex<T>> = (0..q)
                .map(|p| cube.data[(rx, p, gate)] * w[(m, p)].conj() * taper[p])
                .collect();
            fwd.process(&mut buf);
            let mut small: Vec<Complex<T>> = kept.iter().map(|&(src, _)| buf[src]).collect();
            let mut ordered = vec![czero::<T>(); p_count];
            for (&(_, dst), v) in kept.iter().zip(small.drain(..)) {
                ordered[dst] = v;
            }
            inv.process(&mut ordered);
            (m, rx, ordered.into_iter().map(|z| z / norm).collect())
        })
        .collect();
    for (m, rx, fiber) in fibers {
        out.fiber3_mut(m, rx).copy_from_slice(&fiber);
    }
    Ok(Decimated { tensor: out, gate })
}

/// `(source bin in length-q spectrum, destination bin in length-p spectrum)`
/// for the `p` bins nearest DC: `−⌊p/2⌋ ..= ⌈p/2⌉ − 1`.
fn lowpass_bins(q: usize, p: usize) -> Vec<(usize, usize)> {
    let lo = (p / 2) as isize;
    let hi = p as isize - lo;
    (-lo..hi)
        .map(|d| (d.rem_euclid(q as isize) as usize, d.rem_euclid(p as isize) as usize))
        .collect()
}

/// Upsamples each `(m, n)` fiber by `M` (spectral zero padding, Nyquist bin
/// split for even lengths) and reapplies the DDMA carrier of transmitter `m`.
///
/// Decimated slice `p` lands on pulse `M·p + 1`, so the output is aligned with
/// [`direct_synthesis`].
pub fn interpolate_restore<T: Real>(small: &Tensor3<T>, cfg: &RadarConfig<T>) -> Result<Tensor3<T>> {
    cfg.validate()?;
    let (m_count, n, p_count) = small.dims();
    if m_count != cfg.m || n != cfg.n || p_count != cfg.decimated_pulses() {
        return Err(shape_err(
            "interpolate_restore",
            format!(
                "{:?} vs expected ({}, {}, {})",
                small.dims(),
                cfg.m,
                cfg.n,
                cfg.decimated_pulses()
            ),
        ));
    }
    let q = cfg.q;
    let w = ddma_matrix(cfg);
    let fwd = forward::<T>(p_count);
    let inv = backward::<T>(q);
    let scale = T::one() / from_usize::<T>(p_count);
    let half = real::<T>(0.5);

    let mut out = Tensor3::zeros(m_count, n, q);
    for m in 0..m_count {
        for rx in 0..n {
            let mut spec = small.fiber3(m, rx).to_vec();
            fwd.process(&mut spec);
            let mut padded = vec![czero::<T>(); q];
            for (d, &z) in spec.iter().enumerate() {
                let signed = if 2 * d < p_count { d as isize } else { d as isize - p_count as isize };
                if p_count % 2 == 0 && 2 * d == p_count && q > p_count {
                    // Nyquist bin: split between ±p/2
                    padded[q - d] += z * half;
                    padded[d] += z * half;
                } else {
                    padded[signed.rem_euclid(q as isize) as usize] += z;
                }
            }
            inv.process(&mut padded);
            for (p, (dst, z)) in out.fiber3_mut(m, rx).iter_mut().zip(padded).enumerate() {
                *dst = z.scale(scale) * w[(m, p)];
            }
        }
    }
    Ok(out)
}

/// Leakage between DDMA channels after [`demodulate_decimate`].
///
/// Entry `[m][m']` is the power in output channel `m` when only transmitter
/// `m'` radiates, in dB relative to channel `m'` with the same transmitter
/// (the retained term). Diagonal entries are 0 dB. The chain is linear, so
/// this isolates every cross-term of the full-array output.
pub fn cross_term_levels<T: Real>(
    scene: &TargetScene<T>,
    cfg: &RadarConfig<T>,
    opts: &ChainOptions<T>,
) -> Result<Vec<Vec<f64>>> {
    let channel_power = |tx: usize| -> Result<Vec<f64>> {
        let fast = FastTimeOptions {
            snr_db: None,
            tx_subset: Some(vec![tx]),
            ..opts.fast_time.clone()
        };
        // noiseless, so the generator is never drawn from
        let cube = synthesize_fast_time(scene, cfg, &fast, &mut crate::scene::trial_rng(0, 0))?;
        let dec = demodulate_decimate(&matched_filter(&cube, cfg)?, cfg, &opts.decimate)?;
        (0..cfg.m)
            .map(|m| {
                let power = dec.tensor.slice_mode(1, m..m + 1)?.frob_norm().to_f64().unwrap_or(0.0);
                Ok(power * power)
            })
            .collect()
    };
    let per_tx = (0..cfg.m).map(channel_power).collect::<Result<Vec<_>>>()?;
    Ok((0..cfg.m)
        .map(|m| {
            (0..cfg.m)
                .map(|tx| 10.0 * (per_tx[tx][m] / per_tx[tx][tx]).log10())
                .collect()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainOptions<T> {
    pub fast_time: FastTimeOptions<T>,
    pub decimate: DecimateOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainOutput<T> {
    pub range_doppler: RangeDopplerMap<T>,
    pub decimated: Decimated<T>,
    /// `M × N × Q`, ready for the proposed estimator.
    pub restored: Tensor3<T>,
}

/// Synthesize → matched filter → range-Doppler map → demodulate/decimate →
/// restore.
pub fn run_chain<T: Real, R: Rng + ?Sized>(
    scene: &TargetScene<T>,
    cfg: &RadarConfig<T>,
    opts: &ChainOptions<T>,
    rng: &mut R,
) -> Result<ChainOutput<T>> {
    scene.validate(cfg)?;
    let raw = synthesize_fast_time(scene, cfg, &opts.fast_time, rng)?;
    let mf = matched_filter(&raw, cfg)?;
    let range_doppler = range_doppler_map(&mf);
    let decimated = demodulate_decimate(&mf, cfg, &opts.decimate)?;
    let restored = interpolate_restore(&decimated.tensor, cfg)?;
    Ok(ChainOutput {
        range_doppler,
        decimated,
        restored,
    })
}

/// `[[A, B, C]] ∗ 𝒟` plus noise at `snr_db` (per element; `+∞` is noiseless).
pub fn direct_synthesis<T: Real, R: Rng + ?Sized>(
    scene: &TargetScene<T>,
    cfg: &RadarConfig<T>,
    snr_db: T,
    rng: &mut R,
) -> Result<Tensor3<T>> {
    cfg.validate()?;
    let clean = cp_construct(
        &scene.transmit_steering(cfg.m),
        &scene.receive_steering(cfg.n),
        &scene.doppler_factor(cfg.q),
    )?
    .hadamard(build_mask(cfg).tensor())?;
    Ok(add_noise(&clean, snr_db, rng))
}

/// Per-transmitter decimated tensor `[[A, B, C̄]]` (`M × N × Q/M`) with the
/// Doppler factor sampled at pulses `M·p + 1`, plus noise at `snr_db`.
pub fn decimated_synthesis<T: Real, R: Rng + ?Sized>(
    scene: &TargetScene<T>,
    cfg: &RadarConfig<T>,
    snr_db: T,
    rng: &mut R,
) -> Result<Tensor3<T>> {
    cfg.validate()?;
    let pulses: Vec<usize> = (0..cfg.decimated_pulses()).map(|p| cfg.m * p + 1).collect();
    let clean = cp_construct(
        &scene.transmit_steering(cfg.m),
        &scene.receive_steering(cfg.n),
        &scene.doppler_factor_at(&pulses),
    )?;
    Ok(add_noise(&clean, snr_db, rng))
}
