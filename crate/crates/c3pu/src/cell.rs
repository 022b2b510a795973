//! One multiply cell: a capacitive divider driving a transistor.
//!
//! The cell stores its weight as a capacitance ratio. A wordline pulse of
//! amplitude `v_amp` couples through the divider, so the transistor gate sees
//! `v_amp · x_eq`; while the pulse is high the transistor conducts a current
//! proportional to that gate voltage, and the delivered charge — current
//! times pulse width — is the product of input (width) and weight (ratio).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight window in which the divider-plus-transistor pair multiplies
/// linearly. Weights compiled onto an array are mapped into this range.
pub const X_EQ_WINDOW: [f64; 2] = [0.5, 0.75];

/// Capacitances of one cell (F).
///
/// The equivalent weight is `x_eq = c_c / (c_c + c_b + c_g)`. Defaults give
/// the top of the weight window: 8 fF coupling against a 2.5 fF bottom plate
/// and a 0.1667 fF transistor gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CellConfig {
    /// Cross-coupling capacitance (F). Default: 8e-15.
    pub c_c: f64,
    /// Bottom-plate capacitance (F). Default: 2.5e-15.
    pub c_b: f64,
    /// Transistor gate capacitance (F). Default: 0.1667e-15.
    pub c_g: f64,
}

impl Default for CellConfig {
    fn default() -> Self {
        CellConfig {
            c_c: 8e-15,
            c_b: 2.5e-15,
            c_g: 0.1667e-15,
        }
    }
}

impl CellConfig {
    /// Builds a cell holding weight `x_target`, keeping the default bottom
    /// plate and gate capacitances and solving for the coupling capacitor.
    pub fn for_weight(x_target: f64) -> Result<Self> {
        let defaults = CellConfig::default();
        Ok(CellConfig {
            c_c: capacitance_for_weight(x_target, defaults.c_b, defaults.c_g)?,
            ..defaults
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_c.is_finite() && self.c_c > 0.0) {
            return Err(Error::param(
                "c_c",
                format!("must be positive, got {:e}", self.c_c),
            ));
        }
        for (name, value) in [("c_b", self.c_b), ("c_g", self.c_g)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::param(
                    name,
                    format!("must be non-negative, got {value:e}"),
                ));
            }
        }
        Ok(())
    }

    /// Equivalent weight of the divider: `c_c / (c_c + c_b + c_g)`, in (0, 1].
    pub fn x_eq(&self) -> Result<f64> {
        self.validate()?;
        Ok(self.c_c / (self.c_c + self.c_b + self.c_g))
    }

    /// Gate voltage (V) seen by the transistor for a pulse of amplitude
    /// `v_amp`: the amplitude attenuated by the divider.
    pub fn gate_voltage(&self, v_amp: f64) -> Result<f64> {
        if !(v_amp.is_finite() && v_amp >= 0.0) {
            return Err(Error::input(
                "v_amp",
                format!("pulse amplitude must be non-negative, got {v_amp:e}"),
            ));
        }
        Ok(v_amp * self.x_eq()?)
    }
}

/// Coupling capacitance (F) that realizes weight `x_target` against the given
/// bottom-plate and gate capacitances: `c_c = x·(c_b + c_g)/(1 − x)`.
pub fn capacitance_for_weight(x_target: f64, c_b: f64, c_g: f64) -> Result<f64> {
    if !(x_target.is_finite() && x_target > 0.0 && x_target < 1.0) {
        return Err(Error::param(
            "x_target",
            format!("weight must lie strictly inside (0, 1), got {x_target}"),
        ));
    }
    if !(c_b.is_finite() && c_b >= 0.0 && c_g.is_finite() && c_g >= 0.0) {
        return Err(Error::param(
            "c_b/c_g",
            "fixed capacitances must be non-negative".to_string(),
        ));
    }
    if c_b + c_g == 0.0 {
        return Err(Error::param(
            "c_b/c_g",
            "at least one fixed capacitance must be positive to set a ratio".to_string(),
        ));
    }
    Ok(x_target * (c_b + c_g) / (1.0 - x_target))
}

/// Current transfer of the cell transistor: linear in the gate voltage
/// inside `v_g_window`, clamped outside it.
///
/// The default is continuous clamping — below the window the current holds at
/// `g_m · v_low`, above it at `g_m · v_high` — so the transfer has no jumps.
/// Both plateau currents are plain fields and can be overridden to model a
/// device that actually cuts off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransistorModel {
    /// Transconductance (S). Default: 230.13e-6.
    pub g_m: f64,
    /// Gate-voltage window (V) of linear operation. Default: [0.5, 0.8].
    pub v_g_window: [f64; 2],
    /// Current (A) below the window. Default: g_m · 0.5 (continuous).
    pub i_off: f64,
    /// Current (A) above the window. Default: g_m · 0.8 (continuous).
    pub i_sat: f64,
}

impl Default for TransistorModel {
    fn default() -> Self {
        TransistorModel::continuous(230.13e-6, [0.5, 0.8])
    }
}

impl TransistorModel {
    /// Clamped-linear model with plateaus chosen for continuity at the
    /// window edges.
    pub fn continuous(g_m: f64, v_g_window: [f64; 2]) -> Self {
        TransistorModel {
            g_m,
            v_g_window,
            i_off: g_m * v_g_window[0],
            i_sat: g_m * v_g_window[1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_m.is_finite() && self.g_m > 0.0) {
            return Err(Error::param(
                "g_m",
                format!("must be positive, got {:e}", self.g_m),
            ));
        }
        let [lo, hi] = self.v_g_window;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param(
                "v_g_window",
                format!("bounds must be finite and ordered, got [{lo}, {hi}]"),
            ));
        }
        Ok(())
    }

    /// Drain current (A) at gate voltage `v_g`.
    #[inline]
    pub fn drain_current(&self, v_g: f64) -> f64 {
        let [lo, hi] = self.v_g_window;
        if v_g < lo {
            self.i_off
        } else if v_g > hi {
            self.i_sat
        } else {
            self.g_m * v_g
        }
    }

    /// Whether `v_g` falls inside the linear window.
    #[inline]
    pub fn in_linear_window(&self, v_g: f64) -> bool {
        let [lo, hi] = self.v_g_window;
        (lo..=hi).contains(&v_g)
    }
}

/// Charge delivered by one cell over one pulse, with the gate voltage it saw
/// and whether that voltage stayed in the transistor's linear window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellCharge {
    /// Delivered charge (C).
    pub charge: f64,
    /// Gate voltage during the pulse (V).
    pub v_g: f64,
    /// False when the gate voltage left the linear window, in which case the
    /// clamped transfer was used and the product is no longer exact.
    pub linear: bool,
}

/// Charge (C) one cell delivers to its bitline for a pulse of the given
/// width (s) and amplitude (V): `drain_current(v_amp · x_eq) · pulse_width`.
///
/// Gate voltages outside the linear window are not an error — the clamped
/// transfer is used and the result is flagged via [`CellCharge::linear`].
pub fn cell_charge(
    pulse_width: f64,
    v_amp: f64,
    cell: &CellConfig,
    fet: &TransistorModel,
) -> Result<CellCharge> {
    if !(pulse_width.is_finite() && pulse_width >= 0.0) {
        return Err(Error::input(
            "pulse_width",
            format!("must be non-negative, got {pulse_width:e}"),
        ));
    }
    fet.validate()?;
    let v_g = cell.gate_voltage(v_amp)?;
    Ok(CellCharge {
        charge: fet.drain_current(v_g) * pulse_width,
        v_g,
        linear: fet.in_linear_window(v_g),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Cell with exact weight 0.5: equal coupling and bottom capacitances.
    fn half_cell() -> CellConfig {
        CellConfig {
            c_c: 2.5e-15,
            c_b: 2.5e-15,
            c_g: 0.0,
        }
    }

    #[test]
    fn x_eq_is_the_capacitance_ratio() {
        assert_relative_eq!(half_cell().x_eq().unwrap(), 0.5, max_relative = 1e-15);
        // Default cell: 8 / (8 + 2.5 + 0.1667) — the top of the window.
        let oracle = 8.0 / (8.0 + 2.5 + 0.1667);
        let x = CellConfig::default().x_eq().unwrap();
        assert_relative_eq!(x, oracle, max_relative = 1e-15);
        assert_relative_eq!(x, 0.75, max_relative = 1e-4);
    }

    #[test]
    fn weight_to_capacitance_inverts_x_eq() {
        assert_relative_eq!(
            capacitance_for_weight(0.5, 2.5e-15, 0.0).unwrap(),
            2.5e-15,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            capacitance_for_weight(0.6, 2.5e-15, 0.0).unwrap(),
            3.75e-15,
            max_relative = 1e-15
        );
        // Top of the window with the default fixed capacitances: 8 fF.
        assert_relative_eq!(
            capacitance_for_weight(0.75, 2.5e-15, 0.1667e-15).unwrap(),
            8e-15,
            max_relative = 1e-3
        );
        // Round trip: weight -> capacitance -> weight.
        for x in [0.5, 0.55, 0.625, 0.7, 0.75] {
            let cell = CellConfig::for_weight(x).unwrap();
            assert_relative_eq!(cell.x_eq().unwrap(), x, max_relative = 1e-12);
        }
    }

    #[test]
    fn weight_outside_unit_interval_is_rejected() {
        assert!(matches!(
            capacitance_for_weight(1.0, 2.5e-15, 0.0),
            Err(Error::InvalidParam { .. })
        ));
        assert!(matches!(
            capacitance_for_weight(0.0, 2.5e-15, 0.0),
            Err(Error::InvalidParam { .. })
        ));
        assert!(matches!(
            capacitance_for_weight(-0.2, 2.5e-15, 0.0),
            Err(Error::InvalidParam { .. })
        ));
    }

    #[test]
    fn drain_current_is_linear_inside_the_window() {
        let fet = TransistorModel::default();
        // Oracle: g_m · v_g at 0.75 V.
        assert_relative_eq!(
            fet.drain_current(0.75),
            230.13e-6 * 0.75,
            max_relative = 1e-15
        );
        assert_relative_eq!(fet.drain_current(0.75), 172.6e-6, max_relative = 1e-4);
    }

    #[test]
    fn default_transfer_is_continuous_at_the_window_edges() {
        let fet = TransistorModel::default();
        assert_relative_eq!(
            fet.drain_current(0.5 - 1e-12),
            fet.drain_current(0.5),
            max_relative = 1e-9
        );
        assert_relative_eq!(
            fet.drain_current(0.8 + 1e-12),
            fet.drain_current(0.8),
            max_relative = 1e-9
        );
        // Plateaus hold far outside the window.
        assert_relative_eq!(
            fet.drain_current(0.1),
            230.13e-6 * 0.5,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            fet.drain_current(1.4),
            230.13e-6 * 0.8,
            max_relative = 1e-15
        );
    }

    #[test]
    fn cutoff_override_returns_zero_below_the_window() {
        let fet = TransistorModel {
            i_off: 0.0,
            ..TransistorModel::continuous(230.13e-6, [0.5, 0.8])
        };
        assert_eq!(fet.drain_current(0.1), 0.0);
        assert!(fet.drain_current(0.6) > 0.0);
    }

    #[test]
    fn cell_charge_is_current_times_width() {
        let fet = TransistorModel::default();
        // Full-swing pulse on a weight-0.5 cell for one reference conversion
        // delay: 230.13 µS · 0.5 V · 2.0893 ns = 240.4 fC.
        let pw = 2.089_285_714_285_714_6e-9;
        let out = cell_charge(pw, 1.0, &half_cell(), &fet).unwrap();
        assert_relative_eq!(out.charge, 230.13e-6 * 0.5 * pw, max_relative = 1e-15);
        assert_relative_eq!(out.charge, 240.4e-15, max_relative = 1e-4);
        assert!(out.linear, "0.5 V sits on the window edge and is linear");

        // Weight 0.75 for 1 ns: 172.6 fC.
        let cell = CellConfig {
            c_c: 7.5e-15,
            c_b: 2.5e-15,
            c_g: 0.0,
        };
        let out = cell_charge(1e-9, 1.0, &cell, &fet).unwrap();
        assert_relative_eq!(out.charge, 172.6e-15, max_relative = 1e-4);
        assert!(out.linear);
    }

    #[test]
    fn low_amplitude_pulses_are_flagged_nonlinear() {
        let fet = TransistorModel::default();
        let out = cell_charge(1e-9, 0.5, &half_cell(), &fet).unwrap();
        assert_relative_eq!(out.v_g, 0.25, max_relative = 1e-15);
        assert!(!out.linear);
        // Clamped transfer still delivers the plateau current.
        assert_relative_eq!(out.charge, 230.13e-6 * 0.5 * 1e-9, max_relative = 1e-15);
    }

    #[test]
    fn zero_width_pulse_delivers_no_charge() {
        let out = cell_charge(0.0, 1.0, &half_cell(), &TransistorModel::default()).unwrap();
        assert_eq!(out.charge, 0.0);
    }

    #[test]
    fn invalid_pulse_inputs_are_rejected() {
        let fet = TransistorModel::default();
        assert!(matches!(
            cell_charge(-1e-9, 1.0, &half_cell(), &fet),
            Err(Error::InvalidInput { .. })
        ));
        assert!(matches!(
            cell_charge(1e-9, -0.5, &half_cell(), &fet),
            Err(Error::InvalidInput { .. })
        ));
    }
}
