//! Random perturbations of the density matrix (magnitude "noise" and phase
//! "decoherence") and of the Hamiltonian parameters.
//!
//! Every draw is uniform on `[-√3·A, √3·A]`, which has root-mean-square `A`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{project_physical, CMatrix, DensityMatrix};

/// Deterministic random stream for one (seed, run, step) triple.
pub type RngStream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// RMS of additive perturbations to element magnitudes.
    pub mag_amplitude: f64,
    /// RMS of phase perturbations (radians) of off-diagonal elements.
    pub phase_amplitude: f64,
    /// RMS of additive perturbations to K, ε and ζ.
    pub hamiltonian_amplitude: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(mag: f64, phase: f64, hamiltonian: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            mag_amplitude: mag,
            phase_amplitude: phase,
            hamiltonian_amplitude: hamiltonian,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Equal magnitude and phase perturbation ("total noise") of the given amplitude.
    pub fn total(amplitude: f64, seed: u64) -> Result<Self> {
        Self::new(amplitude, amplitude, 0.0, seed)
    }

    pub fn hamiltonian_only(amplitude: f64, seed: u64) -> Result<Self> {
        Self::new(0.0, 0.0, amplitude, seed)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("noise.magnitude", self.mag_amplitude),
            ("noise.phase", self.phase_amplitude),
            ("noise.hamiltonian", self.hamiltonian_amplitude),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(name, format!("amplitude must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn density_active(&self) -> bool {
        self.mag_amplitude > 0.0 || self.phase_amplitude > 0.0
    }

    pub fn hamiltonian_active(&self) -> bool {
        self.hamiltonian_amplitude > 0.0
    }

    pub fn is_silent(&self) -> bool {
        !self.density_active() && !self.hamiltonian_active()
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for `(seed, run_id, step)`.
///
/// The seed is expanded into the ChaCha key, `run_id` selects the ChaCha
/// stream and `step` positions the block counter at `step · 2^32` words, so
/// distinct triples never share output as long as a single step consumes
/// fewer than 2^32 words.
pub fn rng_stream_for(seed: u64, run_id: u64, step: u64) -> RngStream {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(run_id);
    rng.set_word_pos(u128::from(step) << 32);
    rng
}

/// Zero-mean uniform draw with the given RMS.
pub fn symmetric_draw(rng: &mut RngStream, rms: f64) -> f64 {
    let u: f64 = rng.random();
    (2.0 * u - 1.0) * 3f64.sqrt() * rms
}

/// Perturbs magnitudes and phases of the upper triangle and mirrors it,
/// without restoring physicality. Diagonal phases are left alone.
pub fn perturb_elements(rho: &CMatrix, cfg: &NoiseConfig, rng: &mut RngStream) -> CMatrix {
    let n = rho.nrows();
    let mut out = rho.clone();
    for i in 0..n {
        for j in i..n {
            let (m, phi) = rho[(i, j)].to_polar();
            let dm = symmetric_draw(rng, cfg.mag_amplitude);
            let dphi = if i == j { 0.0 } else { symmetric_draw(rng, cfg.phase_amplitude) };
            let z = Complex64::from_polar((m + dm).max(0.0), phi + dphi);
            if i == j {
                out[(i, i)] = Complex64::new(z.re, 0.0);
            } else {
                out[(i, j)] = z;
                out[(j, i)] = z.conj();
            }
        }
    }
    out
}

/// One application of the density-matrix channel followed by projection
/// back onto valid states. Identity (bit-for-bit) when both amplitudes are 0.
pub fn perturb_density(rho: &DensityMatrix, cfg: &NoiseConfig, rng: &mut RngStream) -> Result<DensityMatrix> {
    if !cfg.density_active() {
        return Ok(rho.clone());
    }
    project_physical(&perturb_elements(rho.elements(), cfg, rng))
}

/// Additive noise on one step's Hamiltonian parameters.
pub fn perturb_parameters(
    k: f64,
    eps: f64,
    zeta: f64,
    cfg: &NoiseConfig,
    rng: &mut RngStream,
) -> (f64, f64, f64) {
    if !cfg.hamiltonian_active() {
        return (k, eps, zeta);
    }
    let a = cfg.hamiltonian_amplitude;
    let dk = symmetric_draw(rng, a);
    let de = symmetric_draw(rng, a);
    let dz = symmetric_draw(rng, a);
    (k + dk, eps + de, zeta + dz)
}
