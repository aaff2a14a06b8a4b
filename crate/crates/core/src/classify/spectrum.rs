//! Radial spectral energy of luma planes: the blur index and the
//! directional-anisotropy measure used to tell motion from defocus blur.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::filter;
use crate::frameio::LumaPlane;

/// Floor for a vanishing spectral difference, so the index stays finite.
pub const PBI_EPSILON: f64 = 1e-12;

/// Angular sectors over [0, π) used for anisotropy.
pub const ANGULAR_SECTORS: usize = 8;

/// Radial band (cycles/pixel) probed for directional loss of detail.
pub const ANISOTROPY_BAND: (f64, f64) = (0.15, 0.35);

/// Lower band each direction's probe energy is normalized by, so oriented
/// content (straight edges, vessels) does not read as anisotropic.
pub const ANISOTROPY_REF_BAND: (f64, f64) = (0.03, 0.12);

/// Power spectrum, normalized by N² so that its sum equals the mean square
/// of the windowed input. Laid out like the input (row-major, unshifted).
pub struct PowerSpectrum {
    width: usize,
    height: usize,
    power: Vec<f64>,
}

impl PowerSpectrum {
    /// Mean-removed, Hann-windowed spectrum of `values`.
    pub fn compute(values: &[f64], width: usize, height: usize) -> Self {
        SpectrumAnalyzer::new(width, height).spectrum(values)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Energy per radial annulus; `bins` equal-width annuli cover radii up
    /// to the spectrum corner, √0.5 cycles/pixel.
    pub fn radial_energy(&self, bins: usize) -> Vec<f64> {
        BinLayout::new(self.width, self.height).radial_energy(self, bins)
    }

    /// Mean energy per frequency bin in each orientation sector within a
    /// radial band. Sector 0 is centred on the horizontal frequency axis.
    pub fn angular_energy(&self, sectors: usize, band: (f64, f64)) -> Vec<f64> {
        let mut out = vec![0.0; sectors];
        let mut count = vec![0usize; sectors];
        let (w, h) = (self.width, self.height);
        for ky in 0..h {
            for kx in 0..w {
                if kx == 0 && ky == 0 {
                    continue;
                }
                let (fx, fy) = (signed_freq(kx, w), signed_freq(ky, h));
                let r = fx.hypot(fy);
                if r < band.0 || r > band.1 {
                    continue;
                }
                let s = sector_of(fx, fy, sectors);
                out[s] += self.power[ky * w + kx];
                count[s] += 1;
            }
        }
        for (e, n) in out.iter_mut().zip(count) {
            if n > 0 {
                *e /= n as f64;
            }
        }
        out
    }
}

fn signed_freq(k: usize, n: usize) -> f64 {
    let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    k / n as f64
}

fn sector_of(fx: f64, fy: f64, sectors: usize) -> usize {
    let half = PI / (2 * sectors) as f64;
    let theta = (fy.atan2(fx) + half).rem_euclid(PI);
    (((theta / PI) * sectors as f64) as usize).min(sectors - 1)
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * (i as f64 + 0.5) / n as f64).cos())
        .collect()
}

const NO_BAND: u8 = 0;
const PROBE: u8 = 1;
const REFERENCE: u8 = 2;

/// Per-bin geometry of a spectrum of fixed size: normalized radius,
/// orientation sector and anisotropy band membership. Bin 0 (DC) is unused.
struct BinLayout {
    radius: Vec<f64>,
    sector: Vec<u8>,
    band: Vec<u8>,
    band_counts: [[usize; ANGULAR_SECTORS]; 2],
}

impl BinLayout {
    fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        let rmax = 0.5f64.sqrt();
        let mut radius = vec![0.0; n];
        let mut sector = vec![0u8; n];
        let mut band = vec![NO_BAND; n];
        let mut band_counts = [[0usize; ANGULAR_SECTORS]; 2];
        for ky in 0..height {
            for kx in 0..width {
                let i = ky * width + kx;
                let (fx, fy) = (signed_freq(kx, width), signed_freq(ky, height));
                let r = fx.hypot(fy);
                radius[i] = r / rmax;
                let s = sector_of(fx, fy, ANGULAR_SECTORS);
                sector[i] = s as u8;
                if i == 0 {
                    continue;
                }
                if (ANISOTROPY_BAND.0..=ANISOTROPY_BAND.1).contains(&r) {
                    band[i] = PROBE;
                    band_counts[0][s] += 1;
                } else if (ANISOTROPY_REF_BAND.0..=ANISOTROPY_REF_BAND.1).contains(&r) {
                    band[i] = REFERENCE;
                    band_counts[1][s] += 1;
                }
            }
        }
        BinLayout {
            radius,
            sector,
            band,
            band_counts,
        }
    }

    fn radial_energy(&self, s: &PowerSpectrum, bins: usize) -> Vec<f64> {
        let mut out = vec![0.0; bins];
        for (r, p) in self.radius.iter().zip(&s.power).skip(1) {
            out[((r * bins as f64) as usize).min(bins - 1)] += p;
        }
        out
    }

    fn anisotropy(&self, s: &PowerSpectrum) -> f64 {
        let mut sums = [[0.0f64; ANGULAR_SECTORS]; 2];
        for ((&b, &sec), &p) in self.band.iter().zip(&self.sector).zip(&s.power) {
            if b != NO_BAND {
                sums[usize::from(b - 1)][usize::from(sec)] += p;
            }
        }
        let mut shares = Vec::with_capacity(ANGULAR_SECTORS);
        for k in 0..ANGULAR_SECTORS {
            let (np, nr) = (self.band_counts[0][k], self.band_counts[1][k]);
            if np == 0 || nr == 0 || sums[1][k] <= 0.0 {
                continue;
            }
            shares.push((sums[0][k] / np as f64) / (sums[1][k] / nr as f64));
        }
        let max = shares.iter().copied().fold(0.0, f64::max);
        let min = shares.iter().copied().fold(f64::INFINITY, f64::min);
        if shares.len() < ANGULAR_SECTORS || max <= 0.0 {
            1.0
        } else {
            max / min.max(max * 1e-12)
        }
    }
}

/// Reusable FFT plans and bin geometry for planes of one size. Building
/// one per clip keeps per-frame work down to the transforms themselves.
pub struct SpectrumAnalyzer {
    width: usize,
    height: usize,
    row_fft: Arc<dyn Fft<f64>>,
    col_fft: Arc<dyn Fft<f64>>,
    hann_x: Vec<f64>,
    hann_y: Vec<f64>,
    layout: BinLayout,
}

impl SpectrumAnalyzer {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        SpectrumAnalyzer {
            width,
            height,
            row_fft: planner.plan_fft_forward(width),
            col_fft: planner.plan_fft_forward(height),
            hann_x: hann(width),
            hann_y: hann(height),
            layout: BinLayout::new(width, height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Mean-removed, Hann-windowed power spectrum.
    pub fn spectrum(&self, values: &[f64]) -> PowerSpectrum {
        let (w, h) = (self.width, self.height);
        let n = w * h;
        assert_eq!(values.len(), n, "plane does not match analyzer size");
        let mean = values.iter().sum::<f64>() / n as f64;
        let mut buf: Vec<Complex<f64>> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Complex::new((v - mean) * self.hann_x[i % w] * self.hann_y[i / w], 0.0))
            .collect();
        self.row_fft.process(&mut buf);
        // columns become rows of the transpose, transformed in one batch
        let mut t = vec![Complex::new(0.0, 0.0); n];
        for y in 0..h {
            for x in 0..w {
                t[x * h + y] = buf[y * w + x];
            }
        }
        self.col_fft.process(&mut t);
        let norm = (n as f64).powi(2);
        let mut power = vec![0.0; n];
        for x in 0..w {
            for y in 0..h {
                power[y * w + x] = t[x * h + y].norm_sqr() / norm;
            }
        }
        PowerSpectrum {
            width: w,
            height: h,
            power,
        }
    }

    pub fn radial_energy(&self, s: &PowerSpectrum, bins: usize) -> Vec<f64> {
        self.layout.radial_energy(s, bins)
    }

    /// Blur index from an already computed spectrum of the plane.
    pub fn pbi_from(&self, sharp: &PowerSpectrum, luma: &LumaPlane, w_bins: usize) -> f64 {
        let smooth = self.spectrum(&binomial(luma));
        let re = self.radial_energy(sharp, w_bins);
        let re_f = self.radial_energy(&smooth, w_bins);
        let total: f64 = re.iter().zip(&re_f).map(|(a, b)| (a - b).abs()).sum();
        (total / w_bins as f64).max(PBI_EPSILON).ln()
    }

    pub fn pbi(&self, luma: &LumaPlane, w_bins: usize) -> f64 {
        self.pbi_from(&self.spectrum(luma.values()), luma, w_bins)
    }

    pub fn anisotropy(&self, s: &PowerSpectrum) -> f64 {
        self.layout.anisotropy(s)
    }
}

/// Separable [1, 2, 1]/4 binomial smoothing, replicate border.
pub fn binomial(luma: &LumaPlane) -> Vec<f64> {
    let k = [0.25, 0.5, 0.25];
    filter::separable(luma.values(), luma.width(), luma.height(), &k, &k)
}

/// Blur index: log of the mean absolute difference between the radial
/// energy of the plane and of its binomial-smoothed copy. Sharp content
/// loses more energy to the smoothing and scores higher.
pub fn pbi(luma: &LumaPlane, w_bins: usize) -> f64 {
    let (w, h) = luma.dims();
    SpectrumAnalyzer::new(w, h).pbi(luma, w_bins)
}

/// Directional anisotropy: for every orientation sector the share of
/// energy kept in the probe band relative to the reference band, then the
/// ratio of the largest to the smallest share. Near 1 when detail falls off
/// equally in all directions (sharp or defocused); large when one
/// direction has been smeared out.
pub fn anisotropy(spectrum: &PowerSpectrum) -> f64 {
    BinLayout::new(spectrum.width, spectrum.height).anisotropy(spectrum)
}
