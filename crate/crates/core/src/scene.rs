//! Radar geometry, DDMA phase coding and random trial generation.
//!
//! Slow-time convention: pulses are indexed `q = 1..Q` and sampled at the
//! pulse repetition frequency `f_a`, so a Doppler `f` advances the phase by
//! `2π·f/f_a` per pulse. Target Dopplers are stored normalized to the PRF
//! (`ν = f/f_a`), which makes the DDMA ambiguity limit `|ν| < 1/(2M)`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{cis, from_usize, real, to_radians, Real};
use crate::tensor::{CMatrix, Tensor3};

/// Array sizes, pulse counts and timing.
#[derive(Clone, Debug, PartialEq)]
pub struct RadarConfig<T> {
    /// Transmit elements.
    pub m: usize,
    /// Receive elements.
    pub n: usize,
    /// Pulses per CPI.
    pub q: usize,
    /// Fast-time samples per pulse (chirp length).
    pub l: usize,
    /// Pulse repetition frequency, Hz.
    pub prf: T,
    /// Chirp duration, s.
    pub pulse_duration: T,
    /// Chirp bandwidth, Hz.
    pub bandwidth: T,
}

impl<T: Real> RadarConfig<T> {
    /// Builds a config with `L = round(B·T)` (chirp sampled at rate `B`).
    pub fn new(m: usize, n: usize, q: usize, prf: T, pulse_duration: T, bandwidth: T) -> Result<Self> {
        let l = (bandwidth * pulse_duration).round().to_usize().unwrap_or(0).max(1);
        let cfg = Self {
            m,
            n,
            q,
            l,
            prf,
            pulse_duration,
            bandwidth,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 8 transmit, 10 receive elements, 80 pulses at 50 kHz PRF, 40 MHz / 10 µs chirp.
    pub fn paper() -> Self {
        Self::new(8, 10, 80, real(50e3), real(10e-6), real(40e6)).expect("valid preset")
    }

    /// Reduced 4×4 array with 32 pulses; same timing as [`RadarConfig::paper`].
    pub fn desk() -> Self {
        Self::new(4, 4, 32, real(50e3), real(10e-6), real(40e6)).expect("valid preset")
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.q == 0 || self.l == 0 {
            return Err(Error::Config(format!(
                "M, N, Q, L must be at least 1 (got {}, {}, {}, {})",
                self.m, self.n, self.q, self.l
            )));
        }
        if self.q % self.m != 0 {
            return Err(Error::Config(format!(
                "Q = {} is not a multiple of M = {}",
                self.q, self.m
            )));
        }
        if !(self.prf > T::zero()) || !(self.pulse_duration > T::zero()) {
            return Err(Error::Config("PRF and pulse duration must be positive".into()));
        }
        if !(self.bandwidth > T::zero()) {
            return Err(Error::Config("bandwidth must be positive".into()));
        }
        Ok(())
    }

    /// Pulses left per channel after DDMA demultiplexing, `Q/M`.
    pub fn decimated_pulses(&self) -> usize {
        self.q / self.m
    }

    /// DDMA channel spacing `Δf = f_a/M`, Hz.
    pub fn doppler_spacing(&self) -> T {
        self.prf / from_usize(self.m)
    }

    /// Largest unambiguous normalized Doppler, `1/(2M)`.
    pub fn max_normalized_doppler(&self) -> T {
        T::one() / from_usize::<T>(2 * self.m)
    }
}

/// One point scatterer.
#[derive(Clone, Debug, PartialEq)]
pub struct Target<T> {
    /// Direction of departure, rad.
    pub dod: T,
    /// Direction of arrival, rad.
    pub doa: T,
    /// Doppler normalized to the PRF.
    pub doppler: T,
    /// Complex RCS fading coefficient, fixed over a CPI.
    pub rcs: Complex<T>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TargetScene<T> {
    pub targets: Vec<Target<T>>,
}

impl<T: Real> TargetScene<T> {
    pub fn new(targets: Vec<Target<T>>) -> Self {
        Self { targets }
    }

    pub fn k(&self) -> usize {
        self.targets.len()
    }

    pub fn dods(&self) -> Vec<T> {
        self.targets.iter().map(|t| t.dod).collect()
    }

    pub fn doas(&self) -> Vec<T> {
        self.targets.iter().map(|t| t.doa).collect()
    }

    /// Checks angles and Dopplers against the physical and DDMA limits.
    pub fn validate(&self, cfg: &RadarConfig<T>) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::Scene("no targets".into()));
        }
        let half_pi = T::FRAC_PI_2();
        for (k, t) in self.targets.iter().enumerate() {
            if !(t.dod.abs() < half_pi) || !(t.doa.abs() < half_pi) {
                return Err(Error::Scene(format!("target {k}: angle outside (-90°, 90°)")));
            }
        }
        self.check_doppler_ambiguity(cfg)
    }

    /// Errors when any Doppler reaches `Δf/2`, where DDMA channels alias into each other.
    pub fn check_doppler_ambiguity(&self, cfg: &RadarConfig<T>) -> Result<()> {
        let limit = cfg.max_normalized_doppler();
        match self.targets.iter().position(|t| !(t.doppler.abs() < limit)) {
            Some(k) => Err(Error::Scene(format!(
                "target {k}: normalized Doppler {} is ambiguous (limit ±{})",
                self.targets[k].doppler, limit
            ))),
            None => Ok(()),
        }
    }

    /// Transmit steering matrix `A` (`count × K`).
    pub fn transmit_steering(&self, count: usize) -> CMatrix<T> {
        steering_matrix(&self.dods(), count)
    }

    /// Receive steering matrix `B` (`count × K`).
    pub fn receive_steering(&self, count: usize) -> CMatrix<T> {
        steering_matrix(&self.doas(), count)
    }

    /// Slow-time factor `C` with `C[q,k] = σ_k²·e^{j2πν_k·q}`, `q = 1..Q`.
    pub fn doppler_factor(&self, pulses: usize) -> CMatrix<T> {
        self.doppler_factor_at(&(1..=pulses).collect::<Vec<_>>())
    }

    /// `C` evaluated at arbitrary 1-based pulse indices.
    pub fn doppler_factor_at(&self, pulse_index: &[usize]) -> CMatrix<T> {
        let two_pi = T::TAU();
        CMatrix::from_fn(pulse_index.len(), self.k(), |row, k| {
            let t = &self.targets[k];
            t.rcs * cis(two_pi * t.doppler * from_usize(pulse_index[row]))
        })
    }
}

/// `[1, e^{−jπ sin θ}, …, e^{−j(count−1)π sin θ}]`.
pub fn steering_vector<T: Real>(angle: T, count: usize) -> Vec<Complex<T>> {
    let step = -T::PI() * angle.sin();
    (0..count).map(|i| cis(step * from_usize(i))).collect()
}

pub fn steering_matrix<T: Real>(angles: &[T], count: usize) -> CMatrix<T> {
    let cols: Vec<_> = angles.iter().map(|&a| steering_vector(a, count)).collect();
    CMatrix::from_fn(count, angles.len(), |i, k| cols[k][i])
}

/// DDMA carrier offsets `f_m = (f_a/2)(−1 + (2m−1)/M)`, `m = 1..M`, in Hz.
pub fn ddma_frequencies<T: Real>(m_count: usize, prf: T) -> Vec<T> {
    let m_f = from_usize::<T>(m_count);
    let half = prf / real(2.0);
    (1..=m_count)
        .map(|m| half * (-T::one() + from_usize::<T>(2 * m - 1) / m_f))
        .collect()
}

/// Phase modulation matrix `W` (`M × Q`), `W[m,q] = e^{j2π f_m q/f_a}`.
pub fn ddma_matrix<T: Real>(cfg: &RadarConfig<T>) -> CMatrix<T> {
    let freqs = ddma_frequencies(cfg.m, cfg.prf);
    let two_pi = T::TAU();
    CMatrix::from_fn(cfg.m, cfg.q, |m, q| {
        cis(two_pi * freqs[m] / cfg.prf * from_usize(q + 1))
    })
}

/// Known elementwise modulation applied to a CP tensor.
///
/// For DDMA masks the entry `(i, j, k)` does not depend on `j` and equals
/// `generator[i, k]`; arbitrary masks (used by the weighted ALS path) carry no
/// generator.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskTensor<T> {
    tensor: Tensor3<T>,
    generator: Option<CMatrix<T>>,
}

impl<T: Real> MaskTensor<T> {
    /// Replicates `generator` (`rows × Q`) across `width` mode-2 indices.
    pub fn from_generator(generator: CMatrix<T>, width: usize) -> Self {
        let tensor = Tensor3::from_fn((generator.rows(), width, generator.cols()), |i, _, k| {
            generator[(i, k)]
        });
        Self {
            tensor,
            generator: Some(generator),
        }
    }

    pub fn from_tensor(tensor: Tensor3<T>) -> Self {
        Self {
            tensor,
            generator: None,
        }
    }

    /// All-ones mask (no modulation).
    pub fn ones(dims: (usize, usize, usize)) -> Self {
        let g = CMatrix::from_fn(dims.0, dims.2, |_, _| Complex::new(T::one(), T::zero()));
        Self::from_generator(g, dims.1)
    }

    pub fn tensor(&self) -> &Tensor3<T> {
        &self.tensor
    }

    pub fn generator(&self) -> Option<&CMatrix<T>> {
        self.generator.as_ref()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.tensor.dims()
    }

    pub fn is_unit_modulus(&self, tol: T) -> bool {
        self.tensor
            .as_slice()
            .iter()
            .all(|z| (z.norm() - T::one()).abs() <= tol)
    }

    pub fn has_zero_entries(&self) -> bool {
        self.tensor.as_slice().iter().any(|z| z.norm() == T::zero())
    }
}

/// Mask tensor `𝒟` (`M × N × Q`) with entry `(m, n, q) = W[m, q]`.
pub fn build_mask<T: Real>(cfg: &RadarConfig<T>) -> MaskTensor<T> {
    MaskTensor::from_generator(ddma_matrix(cfg), cfg.n)
}

/// How target positions are chosen for a trial.
#[derive(Clone, Debug, PartialEq)]
pub enum SceneSpec<T> {
    /// Fixed angles (rad) and normalized Dopplers; only the RCS is random.
    Fixed {
        dod: Vec<T>,
        doa: Vec<T>,
        doppler: Vec<T>,
    },
    /// `k` targets drawn uniformly within the bounds (angles in rad).
    Uniform {
        k: usize,
        dod: (T, T),
        doa: (T, T),
        doppler: (T, T),
    },
}

impl<T: Real> SceneSpec<T> {
    /// Fixed scene from angles in degrees.
    pub fn fixed_degrees(dod: &[f64], doa: &[f64], doppler: &[f64]) -> Self {
        Self::Fixed {
            dod: dod.iter().map(|&d| to_radians(real(d))).collect(),
            doa: doa.iter().map(|&d| to_radians(real(d))).collect(),
            doppler: doppler.iter().map(|&d| real(d)).collect(),
        }
    }

    /// Two well separated targets: DOD −30°/25°, DOA −15°/20°, Doppler 0.02/−0.05.
    pub fn separated() -> Self {
        Self::fixed_degrees(&[-30.0, 25.0], &[-15.0, 20.0], &[0.02, -0.05])
    }

    /// Two closely spaced targets: DOD 20°/21°, DOA 15°/16°, Doppler 0.02/−0.05.
    pub fn closely_spaced() -> Self {
        Self::fixed_degrees(&[20.0, 21.0], &[15.0, 16.0], &[0.02, -0.05])
    }

    pub fn k(&self) -> usize {
        match self {
            Self::Fixed { dod, .. } => dod.len(),
            Self::Uniform { k, .. } => *k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Fixed { dod, doa, doppler } => {
                if dod.is_empty() {
                    return Err(Error::Scene("no targets".into()));
                }
                if dod.len() != doa.len() || dod.len() != doppler.len() {
                    return Err(Error::Scene(format!(
                        "{} DODs, {} DOAs, {} Dopplers",
                        dod.len(),
                        doa.len(),
                        doppler.len()
                    )));
                }
            }
            Self::Uniform { k, dod, doa, doppler } => {
                if *k == 0 {
                    return Err(Error::Scene("no targets".into()));
                }
                if dod.0 > dod.1 || doa.0 > doa.1 || doppler.0 > doppler.1 {
                    return Err(Error::Scene("empty bounds".into()));
                }
            }
        }
        Ok(())
    }
}

/// Deterministic generator for stream `stream` of a run seeded with `seed`.
///
/// Distinct streams are statistically independent, so parallel trials never
/// share random numbers.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Circular complex Gaussian sample with `E|z|² = variance`.
pub fn complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R, variance: T) -> Complex<T> {
    let s = (variance / real(2.0)).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(real::<T>(re) * s, real::<T>(im) * s)
}

/// Draws a Swerling-I scene: RCS from `CN(0, 1)`, positions per `spec`.
pub fn sample_scene<T: Real, R: Rng + ?Sized>(spec: &SceneSpec<T>, rng: &mut R) -> Result<TargetScene<T>> {
    spec.validate()?;
    let targets = match spec {
        SceneSpec::Fixed { dod, doa, doppler } => dod
            .iter()
            .zip(doa)
            .zip(doppler)
            .map(|((&dod, &doa), &doppler)| Target {
                dod,
                doa,
                doppler,
                rcs: complex_normal(rng, T::one()),
            })
            .collect(),
        SceneSpec::Uniform { k, dod, doa, doppler } => {
            fn uniform<T: Real, R: Rng + ?Sized>(rng: &mut R, (lo, hi): (T, T)) -> T {
                lo + (hi - lo) * real::<T>(rng.random::<f64>())
            }
            (0..*k)
                .map(|_| {
                    let dod = uniform(rng, *dod);
                    let doa = uniform(rng, *doa);
                    let doppler = uniform(rng, *doppler);
                    Target {
                        dod,
                        doa,
                        doppler,
                        rcs: complex_normal(rng, T::one()),
                    }
                })
                .collect()
        }
    };
    Ok(TargetScene { targets })
}

/// [`sample_scene`] on a fresh generator seeded with `seed`.
pub fn sample_scene_seeded<T: Real>(spec: &SceneSpec<T>, seed: u64) -> Result<TargetScene<T>> {
    sample_scene(spec, &mut trial_rng(seed, 0))
}

/// Noise variance giving `snr_db` against the mean per-element power of `signal`.
pub fn noise_power_for_snr<T: Real>(signal: &Tensor3<T>, snr_db: T) -> T {
    signal.mean_power() / real::<T>(10.0).powf(snr_db / real(10.0))
}

/// Adds white circular Gaussian noise at `snr_db` (per-element SNR against the
/// mean signal power). An infinite SNR returns the input unchanged.
pub fn add_noise<T: Real, R: Rng + ?Sized>(t: &Tensor3<T>, snr_db: T, rng: &mut R) -> Tensor3<T> {
    if snr_db.is_infinite() && snr_db > T::zero() {
        return t.clone();
    }
    add_noise_with_power(t, noise_power_for_snr(t, snr_db), rng)
}

/// Adds white circular Gaussian noise with per-element variance `power`.
pub fn add_noise_with_power<T: Real, R: Rng + ?Sized>(
    t: &Tensor3<T>,
    power: T,
    rng: &mut R,
) -> Tensor3<T> {
    let mut out = t.clone();
    for z in out.as_mut_slice() {
        *z += complex_normal(rng, power);
    }
    out
}
