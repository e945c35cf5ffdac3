//! Base-station power model and energy efficiency.
//!
//! Per-converter power follows the pipeline-ADC bound
//! `P_ADC(b) = omega * (c1 b + c2 b^2 + c3 4^b + c4 b 4^b) * f_s`.
//! Everything that is not an ADC is folded into the architecture factor
//! `alpha = P_rest / (2 M P_ADC(b_ref))`, giving `P_tot = 2M (P_ADC(b) + alpha P_ADC(b_ref))`.
//!
//! # Default coefficients
//!
//! The coefficient values are not published with the bound, so the defaults are derived from
//! two anchors:
//!
//! 1. `omega = 100`, `b = 2`, `f_s = 20 MHz`, `M = 100` gives `2M P_ADC = 3 mW`, i.e.
//!    `c1 2 + c2 4 + c3 16 + c4 32 = 7.5e-15 J`.
//! 2. The linear (`c1 b + c2 b^2`) and exponential (`c3 4^b + c4 b 4^b`) groups cross at
//!    `b = 8`, so low resolutions are dominated by the linear terms and high resolutions by
//!    the `4^b` thermal-noise terms.
//!
//! Within each group the split is fixed at `b = 2`: `c1 b` carries 90 % of the linear group
//! and `c3 4^b`, `c4 b 4^b` carry equal shares of the exponential group.

use crate::{Error, Result};

pub const DEFAULT_OMEGA: f64 = 100.0;
pub const DEFAULT_C1: f64 = 3.373_287_002_693_944_4e-15;
pub const DEFAULT_C2: f64 = 1.874_048_334_829_969e-16;
pub const DEFAULT_C3: f64 = 1.189_581_462_538_554_8e-19;
pub const DEFAULT_C4: f64 = 5.947_907_312_692_774e-20;
pub const DEFAULT_SAMPLING_RATE: f64 = 20e6;
pub const DEFAULT_B_REF: u32 = 2;

/// Above this sampling rate the linear-in-`f_s` model stops tracking real converters.
pub const MAX_LINEAR_SAMPLING_RATE: f64 = 400e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcPowerParams {
    pub omega: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// Sampling rate in Hz.
    pub f_s: f64,
}

impl Default for AdcPowerParams {
    fn default() -> Self {
        Self {
            omega: DEFAULT_OMEGA,
            c1: DEFAULT_C1,
            c2: DEFAULT_C2,
            c3: DEFAULT_C3,
            c4: DEFAULT_C4,
            f_s: DEFAULT_SAMPLING_RATE,
        }
    }
}

impl AdcPowerParams {
    pub fn with_sampling_rate(self, f_s: f64) -> Self {
        Self { f_s, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::invalid(format!(
                "omega must be > 0, got {}",
                self.omega
            )));
        }
        let cs = [self.c1, self.c2, self.c3, self.c4];
        if cs.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::invalid("ADC coefficients must be finite and >= 0"));
        }
        if !cs.iter().any(|&c| c > 0.0) {
            return Err(Error::invalid(
                "at least one ADC coefficient must be positive",
            ));
        }
        if !(self.f_s > 0.0) || !self.f_s.is_finite() {
            return Err(Error::invalid(format!(
                "sampling rate must be > 0, got {}",
                self.f_s
            )));
        }
        Ok(())
    }

    /// Warning text when the sampling rate is outside the model's linear range.
    pub fn validity_warning(&self) -> Option<String> {
        (self.f_s > MAX_LINEAR_SAMPLING_RATE).then(|| {
            format!(
                "sampling rate {:.3e} Hz exceeds {:.0e} Hz; ADC power is no longer linear in f_s there",
                self.f_s, MAX_LINEAR_SAMPLING_RATE
            )
        })
    }
}

/// Power of a single converter in watts.
pub fn adc_power(b: u32, params: &AdcPowerParams) -> Result<f64> {
    params.validate()?;
    if b < 1 {
        return Err(Error::invalid("resolution must be >= 1"));
    }
    let bf = f64::from(b);
    let e = (2.0 * bf).exp2();
    Ok(params.omega
        * (params.c1 * bf + params.c2 * bf * bf + params.c3 * e + params.c4 * bf * e)
        * params.f_s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    pub p_adc_single: f64,
    /// `2M P_ADC(b)`.
    pub p_adc_total: f64,
    pub p_rest: f64,
    pub p_tot: f64,
    pub alpha: f64,
    pub b_ref: u32,
}

pub fn total_power(
    m: usize,
    b: u32,
    alpha: f64,
    params: &AdcPowerParams,
    b_ref: u32,
) -> Result<PowerBudget> {
    if m < 1 {
        return Err(Error::invalid("antenna count must be >= 1"));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!(
            "alpha must be finite and >= 0, got {alpha}"
        )));
    }
    let chains = 2.0 * m as f64;
    let p_adc_single = adc_power(b, params)?;
    let p_ref = adc_power(b_ref, params)?;
    let p_rest = alpha * chains * p_ref;
    Ok(PowerBudget {
        p_adc_single,
        p_adc_total: chains * p_adc_single,
        p_rest,
        p_tot: chains * (p_adc_single + alpha * p_ref),
        alpha,
        b_ref,
    })
}

/// Architecture factor implied by a non-ADC power `p_rest`.
pub fn architecture_factor(
    p_rest: f64,
    m: usize,
    params: &AdcPowerParams,
    b_ref: u32,
) -> Result<f64> {
    if m < 1 {
        return Err(Error::invalid("antenna count must be >= 1"));
    }
    Ok(p_rest / (2.0 * m as f64 * adc_power(b_ref, params)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyResult {
    /// Bits per second.
    pub sumrate: f64,
    /// Watts.
    pub p_tot: f64,
    /// Bits per Joule.
    pub eta: f64,
}

pub fn energy_efficiency(sumrate: f64, budget: &PowerBudget) -> Result<EfficiencyResult> {
    if !(budget.p_tot > 0.0) {
        return Err(Error::InvalidState(format!(
            "total power must be > 0, got {}",
            budget.p_tot
        )));
    }
    Ok(EfficiencyResult {
        sumrate,
        p_tot: budget.p_tot,
        eta: sumrate / budget.p_tot,
    })
}
