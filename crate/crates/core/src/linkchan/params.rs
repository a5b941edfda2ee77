use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Standard single-mode fiber spans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FiberParams {
    pub alpha_db_km: f64,
    pub d_ps_nm_km: f64,
    /// Nonlinear coefficient in 1/(W km).
    pub gamma_w_km: f64,
    pub span_km: f64,
    pub n_spans: usize,
    pub center_wavelength_nm: f64,
}

impl Default for FiberParams {
    fn default() -> Self {
        FiberParams {
            alpha_db_km: 0.2,
            d_ps_nm_km: 20.0,
            gamma_w_km: 1.3,
            span_km: 80.0,
            n_spans: 30,
            center_wavelength_nm: 1550.0,
        }
    }
}

impl FiberParams {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.alpha_db_km,
            self.d_ps_nm_km,
            self.gamma_w_km,
            self.span_km,
            self.center_wavelength_nm,
        ];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Parameter("fiber parameters must be non-negative".into()));
        }
        Ok(())
    }

    /// Power attenuation in 1/m.
    pub fn alpha_per_m(&self) -> f64 {
        self.alpha_db_km / (10.0 * std::f64::consts::LOG10_E) / 1e3
    }

    /// Group-velocity dispersion in s^2/m.
    pub fn beta2(&self) -> f64 {
        beta2_from_d(self.d_ps_nm_km, self.center_wavelength_nm)
    }

    pub fn gamma_per_w_m(&self) -> f64 {
        self.gamma_w_km / 1e3
    }

    pub fn span_m(&self) -> f64 {
        self.span_km * 1e3
    }

    pub fn span_loss_db(&self) -> f64 {
        self.alpha_db_km * self.span_km
    }

    pub fn center_frequency_hz(&self) -> f64 {
        SPEED_OF_LIGHT / (self.center_wavelength_nm * 1e-9)
    }
}

/// `beta2 = -D lambda^2 / (2 pi c)` in s^2/m, for D in ps/(nm km).
pub fn beta2_from_d(d_ps_nm_km: f64, wavelength_nm: f64) -> f64 {
    let d = d_ps_nm_km * 1e-12 / 1e-9 / 1e3; // s/m^2
    let lambda = wavelength_nm * 1e-9;
    -d * lambda * lambda / (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT)
}

/// Accumulated dispersion in ps/nm seen at `wavelength_nm` for a total
/// `beta2 * L` in s^2.
pub fn dispersion_ps_nm(beta2_l: f64, wavelength_nm: f64) -> f64 {
    let lambda = wavelength_nm * 1e-9;
    let d_l = -2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * beta2_l / (lambda * lambda); // s/m
    d_l * 1e12 / 1e9
}

/// Inverse of [`dispersion_ps_nm`].
pub fn beta2_l_from_dispersion(ps_nm: f64, wavelength_nm: f64) -> f64 {
    let lambda = wavelength_nm * 1e-9;
    let d_l = ps_nm * 1e-12 / 1e-9;
    -d_l * lambda * lambda / (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT)
}

pub fn wavelength_nm_at(offset_hz: f64, center_wavelength_nm: f64) -> f64 {
    let f0 = SPEED_OF_LIGHT / (center_wavelength_nm * 1e-9);
    SPEED_OF_LIGHT / (f0 + offset_hz) * 1e9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmpParams {
    pub gain_db: f64,
    pub nf_db: f64,
}

impl Default for AmpParams {
    fn default() -> Self {
        AmpParams {
            gain_db: 16.0,
            nf_db: 5.5,
        }
    }
}

impl AmpParams {
    pub fn validate(&self) -> Result<()> {
        if self.gain_db < 0.0 {
            return Err(Error::Parameter("amplifier gain must be >= 0 dB".into()));
        }
        Ok(())
    }

    /// Spontaneous-emission factor `10^(NF/10) / 2`.
    pub fn n_sp(&self) -> f64 {
        10f64.powf(self.nf_db / 10.0) / 2.0
    }

    /// ASE power spectral density per polarization in W/Hz.
    pub fn ase_psd(&self, center_freq_hz: f64) -> f64 {
        let g = 10f64.powf(self.gain_db / 10.0);
        (g - 1.0) * self.n_sp() * PLANCK * center_freq_hz
    }
}

/// Transceiver and grid parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkParams {
    pub symbol_rate: f64,
    /// Samples per symbol of the composite optical grid.
    pub oversample: usize,
    pub roll_off: f64,
    pub launch_power_dbm: f64,
    pub snr_b2b_db: f64,
    /// Number of equal AWGN loading stages composing `snr_b2b_db`.
    pub noise_stages: usize,
    pub bpf_bw_hz: f64,
    pub elec_bw_hz: f64,
    pub adc_sps: usize,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            symbol_rate: 135e9,
            oversample: 8,
            roll_off: 0.1,
            launch_power_dbm: 3.0,
            snr_b2b_db: 22.0,
            noise_stages: 2,
            bpf_bw_hz: 150e9,
            elec_bw_hz: 70e9,
            adc_sps: 2,
        }
    }
}

impl LinkParams {
    pub fn grid_rate(&self) -> f64 {
        self.symbol_rate * self.oversample as f64
    }

    pub fn adc_rate(&self) -> f64 {
        self.symbol_rate * self.adc_sps as f64
    }

    /// SNR of each loading stage so that `noise_stages` equal stages compose
    /// to `snr_b2b_db`.
    pub fn per_stage_snr_db(&self) -> f64 {
        self.snr_b2b_db + 10.0 * (self.noise_stages as f64).log10()
    }
}
