//! Voltage-to-time conversion.
//!
//! A sampling switch stores the input on a capacitive divider; on the clock
//! edge the divider discharges at a roughly constant current until an
//! inverter flips at its switching point. The elapsed time is affine in the
//! sampled voltage, so the converter turns a voltage into a pulse width with
//! a fixed gain (seconds per volt) plus a fixed logic-path offset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width multiplication applied by the delay-element stage that stretches
/// hidden-layer pulses between two array phases.
pub const DEFAULT_DELAY_ELEMENT_SCALE: f64 = 18.0;

/// Converter power draw (W) at the reference design point, used when a
/// report needs a figure of merit and no measurement is supplied.
pub const REFERENCE_POWER_W: f64 = 5.7e-6;

/// Conversion accuracy (fraction) at the reference design point.
pub const REFERENCE_ACCURACY: f64 = 0.997;

/// Electrical parameters of one converter.
///
/// All values are SI units. The defaults describe the reference 65 nm design
/// point: a 27 fF / 18 fF divider pair discharged at 14 µA, flipping a 0.35 V
/// inverter under a 1 V supply, with 0.21 ns of fixed logic delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VtcParams {
    /// Input sampling capacitance (F). Default: 27e-15.
    pub c1: f64,
    /// Bias-side divider capacitance (F). Default: 18e-15.
    pub c2: f64,
    /// Supply voltage (V). Default: 1.0.
    pub vdd: f64,
    /// Inverter switching point (V). Default: 0.35.
    pub v_sp: f64,
    /// Average discharge current (A). Default: 14e-6.
    pub i_avg: f64,
    /// Fixed logic-path delay added to every conversion (s). Default: 0.21e-9.
    pub t_offset: f64,
    /// Accepted input voltage range (V). Default: [0.0, 1.0].
    pub v_in_range: [f64; 2],
}

impl Default for VtcParams {
    fn default() -> Self {
        VtcParams {
            c1: 27e-15,
            c2: 18e-15,
            vdd: 1.0,
            v_sp: 0.35,
            i_avg: 14e-6,
            t_offset: 0.21e-9,
            v_in_range: [0.0, 1.0],
        }
    }
}

impl VtcParams {
    /// Charge numerator of the delay expression at `v_in`: the charge that
    /// must discharge before the inverter flips.
    #[inline]
    fn charge_numerator(&self, v_in: f64) -> f64 {
        self.c1 * v_in + self.c2 * self.vdd - self.v_sp * (self.c1 + self.c2)
    }

    /// Checks every structural invariant of the parameter set.
    ///
    /// Beyond simple positivity this enforces that the divider actually has
    /// charge to discharge at the lowest accepted input — a switching point
    /// set too high relative to `c2·vdd` yields a negative discharge time,
    /// which is unphysical and must be rejected rather than simulated.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("c1", self.c1),
            ("c2", self.c2),
            ("vdd", self.vdd),
            ("i_avg", self.i_avg),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::param(
                    name,
                    format!("must be positive, got {value:e}"),
                ));
            }
        }
        if !(self.t_offset.is_finite() && self.t_offset >= 0.0) {
            return Err(Error::param(
                "t_offset",
                format!("must be non-negative, got {:e}", self.t_offset),
            ));
        }
        if !(self.v_sp.is_finite() && self.v_sp > 0.0 && self.v_sp < self.vdd) {
            return Err(Error::param(
                "v_sp",
                format!(
                    "switching point must lie strictly inside (0, vdd); got {} with vdd {}",
                    self.v_sp, self.vdd
                ),
            ));
        }
        let [lo, hi] = self.v_in_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param(
                "v_in_range",
                format!("bounds must be finite and ordered, got [{lo}, {hi}]"),
            ));
        }
        let num_min = self.charge_numerator(lo);
        if num_min < 0.0 {
            return Err(Error::param(
                "v_sp",
                format!(
                    "discharge charge at v_in = {lo} V is negative ({num_min:e} C): the divider \
                     never crosses the switching point; lower v_sp or raise c2·vdd"
                ),
            ));
        }
        if num_min / self.i_avg + self.t_offset <= 0.0 {
            return Err(Error::param(
                "t_offset",
                "delay at the lowest accepted input must be positive".to_string(),
            ));
        }
        Ok(())
    }

    /// Conversion delay (s) for an input voltage: affine in `v_in` with slope
    /// [`conversion_gain`](Self::conversion_gain) plus the fixed offset.
    pub fn delay(&self, v_in: f64) -> Result<f64> {
        if !(self.i_avg.is_finite() && self.i_avg > 0.0) {
            return Err(Error::param(
                "i_avg",
                format!("must be positive, got {:e}", self.i_avg),
            ));
        }
        let [lo, hi] = self.v_in_range;
        if !(v_in.is_finite() && v_in >= lo && v_in <= hi) {
            return Err(Error::input(
                "v_in",
                format!("{v_in} V outside accepted range [{lo}, {hi}] V"),
            ));
        }
        let numerator = self.charge_numerator(v_in);
        if numerator < 0.0 {
            return Err(Error::Configuration(format!(
                "discharge charge is negative ({numerator:e} C) at v_in = {v_in} V: \
                 the divider never crosses the switching point"
            )));
        }
        Ok(numerator / self.i_avg + self.t_offset)
    }

    /// Slope of the voltage-to-delay line (s/V): `c1 / i_avg`.
    #[inline]
    pub fn conversion_gain(&self) -> f64 {
        self.c1 / self.i_avg
    }

    /// Pulse width (s) produced under a clock whose high phase lasts
    /// `clk_high` seconds: the conversion delay, truncated by the window.
    pub fn pulse_width(&self, v_in: f64, clk_high: f64) -> Result<f64> {
        if !(clk_high.is_finite() && clk_high > 0.0) {
            return Err(Error::param(
                "clk_high",
                format!("must be positive, got {clk_high:e}"),
            ));
        }
        Ok(self.delay(v_in)?.min(clk_high))
    }

    /// Total delay (s) through `n_stages` identical converters in series.
    pub fn cascade_delay(&self, v_in: f64, n_stages: u32) -> Result<f64> {
        if n_stages == 0 {
            return Err(Error::input("n_stages", "cascade needs at least one stage"));
        }
        Ok(self.delay(v_in)? * f64::from(n_stages))
    }
}

/// Geometry and thresholds of the sensing inverter, used to place its
/// switching point.
///
/// Defaults give the 0.35 V switching point of the reference design:
/// a 9:1 pull-down/pull-up strength ratio with 0.3 V / 0.5 V thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InverterRatio {
    /// Supply voltage (V). Default: 1.0.
    pub vdd: f64,
    /// NMOS threshold voltage (V). Default: 0.3.
    pub v_thn: f64,
    /// PMOS threshold voltage magnitude (V). Default: 0.5.
    pub v_thp_abs: f64,
    /// Strength ratio beta_n / beta_p. Default: 9.0.
    pub beta_ratio: f64,
}

impl Default for InverterRatio {
    fn default() -> Self {
        InverterRatio {
            vdd: 1.0,
            v_thn: 0.3,
            v_thp_abs: 0.5,
            beta_ratio: 9.0,
        }
    }
}

impl InverterRatio {
    /// Input voltage (V) at which the inverter output crosses mid-swing:
    ///
    /// ```text
    /// v_sp = (vdd − v_thp_abs + sqrt(beta_ratio) · v_thn) / (1 + sqrt(beta_ratio))
    /// ```
    pub fn switching_point(&self) -> Result<f64> {
        if !(self.beta_ratio.is_finite() && self.beta_ratio > 0.0) {
            return Err(Error::param(
                "beta_ratio",
                format!("must be positive, got {:e}", self.beta_ratio),
            ));
        }
        if !(self.vdd.is_finite() && self.vdd > 0.0) {
            return Err(Error::param(
                "vdd",
                format!("must be positive, got {:e}", self.vdd),
            ));
        }
        let r = self.beta_ratio.sqrt();
        let v_sp = (self.vdd - self.v_thp_abs + r * self.v_thn) / (1.0 + r);
        if !(v_sp > 0.0 && v_sp < self.vdd) {
            return Err(Error::Configuration(format!(
                "switching point {v_sp} V falls outside (0, {} V); check thresholds",
                self.vdd
            )));
        }
        Ok(v_sp)
    }
}

/// Width (s) after the delay-element stage: `pw_in · scale`, linear through
/// the origin. `scale` defaults to [`DEFAULT_DELAY_ELEMENT_SCALE`] in the
/// shipped pipeline.
pub fn delay_element_scale(pw_in: f64, scale: f64) -> Result<f64> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::param(
            "scale",
            format!("must be positive, got {scale:e}"),
        ));
    }
    if !(pw_in.is_finite() && pw_in >= 0.0) {
        return Err(Error::input(
            "pw_in",
            format!("pulse width must be non-negative, got {pw_in:e}"),
        ));
    }
    Ok(pw_in * scale)
}

/// Figure of merit (s/(V·W)): `accuracy · gain / power`. Higher is better —
/// more seconds of delay swing per volt, per watt spent, weighted by how
/// accurately the line is realized.
pub fn fom(accuracy: f64, gain: f64, power: f64) -> Result<f64> {
    if !(accuracy.is_finite() && (0.0..=1.0).contains(&accuracy)) {
        return Err(Error::param(
            "accuracy",
            format!("must lie in [0, 1], got {accuracy}"),
        ));
    }
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::param(
            "power",
            format!("must be positive, got {power:e}"),
        ));
    }
    if !(gain.is_finite() && gain > 0.0) {
        return Err(Error::param(
            "gain",
            format!("must be positive, got {gain:e}"),
        ));
    }
    Ok(accuracy * gain / power)
}

/// Signal-to-noise ratio in dB: `10·log10(signal_power / noise_power)`.
/// Both arguments are powers (same units) and must be positive.
pub fn snr_db(signal_power: f64, noise_power: f64) -> Result<f64> {
    if !(signal_power.is_finite() && signal_power > 0.0) {
        return Err(Error::param(
            "signal_power",
            format!("must be positive, got {signal_power:e}"),
        ));
    }
    if !(noise_power.is_finite() && noise_power > 0.0) {
        return Err(Error::param(
            "noise_power",
            format!("must be positive, got {noise_power:e}"),
        ));
    }
    Ok(10.0 * (signal_power / noise_power).log10())
}
