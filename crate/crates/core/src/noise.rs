//! Accidental-coincidence backgrounds, Procrustean flattening weights, and
//! the nonlinear conversion efficiency scale.

use crate::{Error, Result};

/// Measured coincidences with the time-shifted background estimate.
///
/// Both bins share the same window width; the offset of the background bin
/// is free metadata (the measurement convention reports it as a multiple of
/// the window).
#[derive(Debug, Clone, Copy)]
pub struct CoincidenceRecord {
    pub signal_counts: f64,
    pub background_counts: f64,
    pub window_ns: f64,
}

impl CoincidenceRecord {
    pub fn new(signal_counts: f64, background_counts: f64, window_ns: f64) -> Result<Self> {
        if signal_counts < 0.0 || background_counts < 0.0 || !(window_ns > 0.0) {
            return Err(Error::InvalidConfig(
                "counts must be non-negative and the window positive".into(),
            ));
        }
        Ok(CoincidenceRecord { signal_counts, background_counts, window_ns })
    }
}

/// Background-subtracted counts; `clamped` is set when the background
/// exceeded the signal and the result was pinned at zero.
#[derive(Debug, Clone, Copy)]
pub struct Subtracted {
    pub counts: f64,
    pub clamped: bool,
}

/// `max(signal - background, 0)`.
pub fn background_subtract(rec: &CoincidenceRecord) -> Subtracted {
    let diff = rec.signal_counts - rec.background_counts;
    Subtracted { counts: diff.max(0.0), clamped: diff < 0.0 }
}

/// Intensity attenuations flattening a modal spectrum, with the surviving
/// signal fraction.
#[derive(Debug, Clone)]
pub struct ProcrusteanWeights {
    /// `t_j = min(diag) / diag_j`, in `(0, 1]`.
    pub weights: Vec<f64>,
    /// `sum t_j diag_j / sum diag_j`
    pub throughput: f64,
}

/// Per-mode attenuations equalising a positive diagonal.
pub fn procrustean_weights(diag: &[f64]) -> Result<ProcrusteanWeights> {
    if diag.is_empty() {
        return Err(Error::Degenerate("empty spectrum".into()));
    }
    if diag.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Degenerate(
            "spectrum with a zero or negative entry cannot be flattened".into(),
        ));
    }
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = diag.iter().map(|&v| min / v).collect();
    let total: f64 = diag.iter().sum();
    let kept: f64 = weights.iter().zip(diag).map(|(w, v)| w * v).sum();
    Ok(ProcrusteanWeights { weights, throughput: kept / total })
}

/// Second-order conversion scale inputs (SI).
#[derive(Debug, Clone, Copy)]
pub struct EfficiencyParams {
    /// chi^(2), meters per volt.
    pub chi2: f64,
    /// Pump photons per second per square meter.
    pub flux_per_area: f64,
    /// Angular frequencies of pump, signal and idler (rad/s).
    pub omega_p: f64,
    pub omega_b: f64,
    pub omega_c: f64,
    pub n_p: f64,
    pub n_b: f64,
    pub n_c: f64,
}

impl EfficiencyParams {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.chi2,
            self.flux_per_area,
            self.omega_p,
            self.omega_b,
            self.omega_c,
            self.n_p,
            self.n_b,
            self.n_c,
        ];
        if vals.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidConfig("efficiency parameters must be positive".into()));
        }
        Ok(())
    }
}

const HBAR: f64 = 1.054_571_817e-34;
const EPSILON_0: f64 = 8.854_187_812_8e-12;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Nonlinear coefficient
/// `sigma = chi2 sqrt(hbar w_p w_B w_C F0 / (8 eps0 c^3 n_p n_B n_C A_p))`.
///
/// As printed the expression carries units of inverse length; the
/// dimensionless single-pair amplitude is `sigma * L` for an interaction
/// length `L`, which is very small for CW pumping.
pub fn conversion_sigma(p: &EfficiencyParams) -> Result<f64> {
    p.validate()?;
    let arg = HBAR * p.omega_p * p.omega_b * p.omega_c * p.flux_per_area
        / (8.0 * EPSILON_0 * SPEED_OF_LIGHT.powi(3) * p.n_p * p.n_b * p.n_c);
    Ok(p.chi2 * arg.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subtract_basics() {
        let rec = CoincidenceRecord::new(120.0, 0.0, 0.5).unwrap();
        let s = background_subtract(&rec);
        assert_eq!(s.counts, 120.0);
        assert!(!s.clamped);

        let noisy = CoincidenceRecord::new(120.0, 20.0, 0.5).unwrap();
        assert_eq!(background_subtract(&noisy).counts, 100.0);

        let over = CoincidenceRecord::new(5.0, 9.0, 0.5).unwrap();
        let c = background_subtract(&over);
        assert_eq!(c.counts, 0.0);
        assert!(c.clamped);
    }

    #[test]
    fn subtract_idempotent_after_clean() {
        let rec = CoincidenceRecord::new(80.0, 30.0, 0.5).unwrap();
        let once = background_subtract(&rec);
        let again =
            background_subtract(&CoincidenceRecord::new(once.counts, 0.0, 0.5).unwrap());
        assert_eq!(once.counts, again.counts);
    }

    #[test]
    fn uniform_floor_subtraction_restores_visibility() {
        // V of {max, min} with a uniform floor b removed equals the clean V.
        let (pmax, pmin, floor) = (0.9, 0.1, 0.37);
        let v_clean = (pmax - pmin) / (pmax + pmin);
        let smax = background_subtract(
            &CoincidenceRecord::new(pmax + floor, floor, 0.5).unwrap(),
        );
        let smin = background_subtract(
            &CoincidenceRecord::new(pmin + floor, floor, 0.5).unwrap(),
        );
        let v = (smax.counts - smin.counts) / (smax.counts + smin.counts);
        assert!((v - v_clean).abs() < 1e-12);
    }

    #[test]
    fn procrustean_flat_input_is_identity() {
        let w = procrustean_weights(&[2.0, 2.0, 2.0]).unwrap();
        assert!(w.weights.iter().all(|&t| (t - 1.0).abs() < 1e-15));
        assert!((w.throughput - 1.0).abs() < 1e-15);
    }

    #[test]
    fn procrustean_four_to_one() {
        let w = procrustean_weights(&[4.0, 1.0]).unwrap();
        assert_eq!(w.weights, vec![0.25, 1.0]);
        let flattened: Vec<f64> = w.weights.iter().zip(&[4.0, 1.0]).map(|(t, v)| t * v).collect();
        assert!((flattened[0] - flattened[1]).abs() < 1e-15);
        assert!((w.throughput - 2.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn procrustean_always_flattens() {
        let diag = [0.3, 1.9, 0.22, 5.0, 0.9];
        let w = procrustean_weights(&diag).unwrap();
        let out: Vec<f64> = w.weights.iter().zip(&diag).map(|(t, v)| t * v).collect();
        let max = out.iter().cloned().fold(f64::MIN, f64::max);
        let min = out.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min <= 1.0 + 1e-12);
        assert!(procrustean_weights(&[1.0, 0.0]).is_err());
    }

    fn representative() -> EfficiencyParams {
        let two_pi_c = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT;
        // 1.5 W at 532 nm focused to a 600 um spot; PPKTP chi2.
        let photon_rate = 1.5 / (HBAR * two_pi_c / 532e-9);
        let area = std::f64::consts::PI * 600e-6_f64.powi(2) / 2.0;
        EfficiencyParams {
            chi2: 33.8e-12,
            flux_per_area: photon_rate / area,
            omega_p: two_pi_c / 532e-9,
            omega_b: two_pi_c / 1565e-9,
            omega_c: two_pi_c / 808e-9,
            n_p: 1.8,
            n_b: 1.8,
            n_c: 1.8,
        }
    }

    #[test]
    fn sigma_scalings() {
        let base = representative();
        let s0 = conversion_sigma(&base).unwrap();
        let mut quad_flux = base;
        quad_flux.flux_per_area *= 4.0;
        assert!((conversion_sigma(&quad_flux).unwrap() / s0 - 2.0).abs() < 1e-12);
        let mut double_chi = base;
        double_chi.chi2 *= 2.0;
        assert!((conversion_sigma(&double_chi).unwrap() / s0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_single_pair_regime() {
        // The printed expression is an inverse length; over the 5 mm crystal
        // the dimensionless pair amplitude sigma * L stays far below one.
        let s = conversion_sigma(&representative()).unwrap();
        assert!(s * 5e-3 < 1e-2, "sigma L = {}", s * 5e-3);
        assert!(s * 5e-3 > 0.0);
    }
}
