//! Crossbar MAC arrays: pulse trains in, integrated column voltages out.
//!
//! Each wordline carries a pulse whose width encodes one input; each column
//! integrates the charge its cells deliver onto a capacitor, so the column
//! voltage is a scaled dot product of the width vector and the column's
//! weights. A one-time per-column scaling calibration maps volts back to the
//! dimensionless products. Long bitlines lose signal as columns are added;
//! the loss model caps usable width at 46 columns.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cell::{cell_charge, CellConfig, TransistorModel, X_EQ_WINDOW};
use crate::error::{Error, Result};
use crate::vtc::VtcParams;

/// Hard ceiling on column count: beyond this the line loss model has no
/// support and the signal is considered unusable.
pub const MAX_COLUMNS: usize = 46;

/// Integrator sizing rule: capacitance per wordline row (F/row).
pub const INTEGRATOR_FARADS_PER_ROW: f64 = 60e-15;

/// Relative mismatch against the sizing rule tolerated before the
/// configuration audit reports a violation.
pub const INTEGRATOR_SIZING_TOLERANCE: f64 = 0.25;

/// Recommended integrator capacitance (F) for an array of `n_rows` rows.
#[inline]
pub fn integrator_cap_for_rows(n_rows: usize) -> f64 {
    n_rows as f64 * INTEGRATOR_FARADS_PER_ROW
}

/// How bitline loss is applied to the drive signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegradationMode {
    /// Shrink every pulse width by the loss fraction (default): the charge
    /// product shrinks but gate voltages — and thus linearity — are intact.
    #[default]
    Width,
    /// Shrink the pulse amplitude instead; gate voltages drop and may leave
    /// the linear window.
    Amplitude,
}

/// Piecewise-linear signal loss versus column count, anchored at measured
/// points and passing through the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradationModel {
    /// (column count, loss fraction) anchors, strictly increasing in columns.
    /// Default: 10.8% at 32 columns, 13.4% at 46.
    pub anchors: Vec<(u32, f64)>,
    pub mode: DegradationMode,
}

impl Default for DegradationModel {
    fn default() -> Self {
        DegradationModel {
            anchors: vec![(32, 0.108), (46, 0.134)],
            mode: DegradationMode::Width,
        }
    }
}

impl DegradationModel {
    pub fn validate(&self) -> Result<()> {
        if self.anchors.is_empty() {
            return Err(Error::param("anchors", "need at least one anchor"));
        }
        let mut prev = (0u32, 0.0f64);
        for &(cols, loss) in &self.anchors {
            if cols <= prev.0 {
                return Err(Error::param(
                    "anchors",
                    format!(
                        "column counts must increase strictly, got {cols} after {}",
                        prev.0
                    ),
                ));
            }
            if !(loss.is_finite() && (0.0..1.0).contains(&loss)) {
                return Err(Error::param(
                    "anchors",
                    format!("loss fractions must lie in [0, 1), got {loss}"),
                ));
            }
            if loss < prev.1 {
                return Err(Error::param(
                    "anchors",
                    format!(
                        "loss must not decrease with columns, got {loss} after {}",
                        prev.1
                    ),
                ));
            }
            prev = (cols, loss);
        }
        Ok(())
    }

    /// Loss fraction at `n_cols` columns, interpolated between the origin and
    /// the anchors. Column counts beyond the last anchor are rejected: the
    /// model has nothing to say about them.
    pub fn loss(&self, n_cols: usize) -> Result<f64> {
        self.validate()?;
        if n_cols == 0 {
            return Err(Error::input("n_cols", "need at least one column"));
        }
        let n = n_cols as f64;
        let mut seg_start = (0.0f64, 0.0f64);
        for &(cols, loss) in &self.anchors {
            let seg_end = (f64::from(cols), loss);
            if n <= seg_end.0 {
                let t = (n - seg_start.0) / (seg_end.0 - seg_start.0);
                return Ok(seg_start.1 + t * (seg_end.1 - seg_start.1));
            }
            seg_start = seg_end;
        }
        Err(Error::input(
            "n_cols",
            format!(
                "{n_cols} columns exceeds the supported maximum of {}",
                self.anchors.last().map(|a| a.0).unwrap_or(0)
            ),
        ))
    }
}

/// One cycle's wordline drive: a pulse width (s) per row, sharing one
/// amplitude (V).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    pub widths: Vec<f64>,
    /// Pulse amplitude (V). Default 1.0 — the converter output swing.
    pub amplitude: f64,
}

impl PulseTrain {
    pub fn new(widths: Vec<f64>) -> Self {
        PulseTrain {
            widths,
            amplitude: 1.0,
        }
    }

    /// Train of `n` identical pulses.
    pub fn uniform(width: f64, n: usize) -> Self {
        PulseTrain::new(vec![width; n])
    }

    /// Checks every width fits inside the clock's high phase.
    pub fn validate(&self, clk_high: f64) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::input(
                "amplitude",
                format!("must be non-negative, got {:e}", self.amplitude),
            ));
        }
        for (i, &w) in self.widths.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0 && w <= clk_high) {
                return Err(Error::input(
                    "widths",
                    format!("pulse {i} is {w:e} s, outside [0, {clk_high:e}] s"),
                ));
            }
        }
        Ok(())
    }
}

/// Encodes a voltage vector as the width train a converter bank drives the
/// array with: `width_i = conversion_gain · v_i`.
///
/// Widths are measured from the zero-input conversion. Every converter in
/// the bank adds the same affine offset, which the two-phase clocking aligns
/// away at the array boundary, so only the gain term carries information.
pub fn encode_inputs(v_in: &[f64], vtc: &VtcParams) -> Result<PulseTrain> {
    vtc.validate()?;
    let gain = vtc.conversion_gain();
    let [lo, hi] = vtc.v_in_range;
    let mut widths = Vec::with_capacity(v_in.len());
    for (i, &v) in v_in.iter().enumerate() {
        if !(v.is_finite() && v >= lo.max(0.0) && v <= hi) {
            return Err(Error::input(
                "v_in",
                format!("entry {i} is {v} V, outside [{}, {hi}] V", lo.max(0.0)),
            ));
        }
        widths.push(gain * v);
    }
    Ok(PulseTrain::new(widths))
}

/// Energy bookkeeping constants (fJ per MAC), split by subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyParams {
    /// Array-side energy per MAC (fJ). Default: 26.3.
    pub crossbar_fj_per_mac: f64,
    /// Converter-side energy per MAC (fJ). Default: 40.1.
    pub converter_fj_per_mac: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            crossbar_fj_per_mac: 26.3,
            converter_fj_per_mac: 40.1,
        }
    }
}

/// Energy totals for a run of `n_macs` multiply-accumulates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub n_macs: u64,
    pub crossbar_fj_per_mac: f64,
    pub converter_fj_per_mac: f64,
    pub per_mac_fj: f64,
    pub total_fj: f64,
    pub total_j: f64,
}

/// Splits and totals the energy of `n_macs` MAC operations.
pub fn energy_report(n_macs: u64, params: &EnergyParams) -> Result<EnergyReport> {
    for (name, v) in [
        ("crossbar_fj_per_mac", params.crossbar_fj_per_mac),
        ("converter_fj_per_mac", params.converter_fj_per_mac),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::param(
                name,
                format!("must be non-negative, got {v:e}"),
            ));
        }
    }
    let per_mac_fj = params.crossbar_fj_per_mac + params.converter_fj_per_mac;
    let total_fj = per_mac_fj * n_macs as f64;
    Ok(EnergyReport {
        n_macs,
        crossbar_fj_per_mac: params.crossbar_fj_per_mac,
        converter_fj_per_mac: params.converter_fj_per_mac,
        per_mac_fj,
        total_fj,
        total_j: total_fj * 1e-15,
    })
}

/// Full description of one array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossbarConfig {
    pub rows: usize,
    pub cols: usize,
    /// Cell per crosspoint, row-major: `cells[row][column]`.
    pub cells: Vec<Vec<CellConfig>>,
    /// Shared transistor transfer model for every cell.
    pub fet: TransistorModel,
    /// Array supply rail (V). Default: 0.3. Informational in the behavioral
    /// model; the energy constants already assume it.
    pub vdd: f64,
    /// Integration capacitance (F) per column.
    pub integrator_caps: Vec<f64>,
    /// Clock high phase (s) gating the pulses. Default: 3e-9.
    pub clk_high: f64,
    /// Full cycle period (s). Default: 6e-9.
    pub period: f64,
    /// Bitline loss model; `None` simulates ideal lines.
    pub degradation: Option<DegradationModel>,
    pub energy: EnergyParams,
}

impl Default for CrossbarConfig {
    fn default() -> Self {
        CrossbarConfig::reference(5, 4)
    }
}

impl CrossbarConfig {
    /// Reference array: evenly spaced weights sweeping the linear window
    /// row-major from 0.5 up to 0.75, integrators sized by the per-row rule,
    /// a 3 ns high phase in a 6 ns period, and ideal lines.
    pub fn reference(rows: usize, cols: usize) -> Self {
        let n = (rows * cols).max(1);
        let [w_lo, w_hi] = X_EQ_WINDOW;
        let weights: Vec<Vec<f64>> = (0..rows)
            .map(|i| {
                (0..cols)
                    .map(|j| {
                        let k = (i * cols + j) as f64;
                        let t = if n > 1 { k / (n - 1) as f64 } else { 0.0 };
                        w_lo + t * (w_hi - w_lo)
                    })
                    .collect()
            })
            .collect();
        CrossbarConfig::from_weights(&weights).expect("reference weights are inside the window")
    }

    /// Builds an array holding the given weight matrix (`x[row][column]`,
    /// each inside (0, 1)), with default timing and rule-sized integrators.
    pub fn from_weights(x_eq: &[Vec<f64>]) -> Result<Self> {
        let rows = x_eq.len();
        let cols = x_eq.first().map(Vec::len).unwrap_or(0);
        if rows == 0 || cols == 0 {
            return Err(Error::input("x_eq", "weight matrix must be non-empty"));
        }
        let mut cells = Vec::with_capacity(rows);
        for row in x_eq {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "weight matrix row".into(),
                    expected: cols,
                    got: row.len(),
                });
            }
            cells.push(
                row.iter()
                    .map(|&x| CellConfig::for_weight(x))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(CrossbarConfig {
            rows,
            cols,
            cells,
            fet: TransistorModel::default(),
            vdd: 0.3,
            integrator_caps: vec![integrator_cap_for_rows(rows); cols],
            clk_high: 3e-9,
            period: 6e-9,
            degradation: None,
            energy: EnergyParams::default(),
        })
    }

    /// Weight matrix realized by the cells.
    pub fn weights(&self) -> Result<Vec<Vec<f64>>> {
        self.cells
            .iter()
            .map(|row| row.iter().map(|c| c.x_eq()).collect())
            .collect()
    }

    /// Hard validation: anything failing here makes simulation meaningless.
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 {
            return Err(Error::param("rows", "need at least one row"));
        }
        if self.cols == 0 {
            return Err(Error::param("cols", "need at least one column"));
        }
        if self.cols > MAX_COLUMNS {
            return Err(Error::Configuration(format!(
                "{} columns exceeds the {MAX_COLUMNS}-column line-loss ceiling",
                self.cols
            )));
        }
        if self.cells.len() != self.rows {
            return Err(Error::DimensionMismatch {
                what: "cell rows".into(),
                expected: self.rows,
                got: self.cells.len(),
            });
        }
        for (i, row) in self.cells.iter().enumerate() {
            if row.len() != self.cols {
                return Err(Error::DimensionMismatch {
                    what: format!("cell row {i}"),
                    expected: self.cols,
                    got: row.len(),
                });
            }
            for cell in row {
                cell.validate()?;
            }
        }
        self.fet.validate()?;
        if self.integrator_caps.len() != self.cols {
            return Err(Error::DimensionMismatch {
                what: "integrator_caps".into(),
                expected: self.cols,
                got: self.integrator_caps.len(),
            });
        }
        for (j, &c) in self.integrator_caps.iter().enumerate() {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::param(
                    "integrator_caps",
                    format!("column {j} capacitance must be positive, got {c:e}"),
                ));
            }
        }
        if !(self.clk_high.is_finite() && self.clk_high > 0.0) {
            return Err(Error::param(
                "clk_high",
                format!("must be positive, got {:e}", self.clk_high),
            ));
        }
        if !(self.period.is_finite() && self.period >= self.clk_high) {
            return Err(Error::param(
                "period",
                format!(
                    "must be at least clk_high ({:e} s), got {:e}",
                    self.clk_high, self.period
                ),
            ));
        }
        if let Some(d) = &self.degradation {
            d.validate()?;
            d.loss(self.cols)?;
        }
        Ok(())
    }

    /// Full configuration audit. Returns every rule violation found — the
    /// list is empty exactly when the configuration is sound. Passing the
    /// converter parameters also audits that a full-swing conversion fits
    /// inside the clock's high phase.
    pub fn check(&self, vtc: Option<&VtcParams>) -> Vec<ConfigViolation> {
        let mut violations = Vec::new();

        if self.cells.len() != self.rows
            || self.cells.iter().any(|r| r.len() != self.cols)
            || self.integrator_caps.len() != self.cols
        {
            violations.push(ConfigViolation::Structure(format!(
                "cell matrix / integrator list shape does not match {}x{}",
                self.rows, self.cols
            )));
        }
        if self.cols > MAX_COLUMNS {
            violations.push(ConfigViolation::ColumnLimit {
                cols: self.cols,
                max: MAX_COLUMNS,
            });
        }
        if !(self.clk_high > 0.0 && self.period >= self.clk_high) {
            violations.push(ConfigViolation::ClockWindow {
                clk_high: self.clk_high,
                period: self.period,
            });
        }
        let recommended = integrator_cap_for_rows(self.rows);
        for (j, &cap) in self.integrator_caps.iter().enumerate() {
            if !(cap.is_finite() && cap > 0.0)
                || (cap - recommended).abs() / recommended > INTEGRATOR_SIZING_TOLERANCE
            {
                violations.push(ConfigViolation::IntegratorSizing {
                    column: j,
                    cap,
                    recommended,
                });
            }
        }
        let [w_lo, w_hi] = X_EQ_WINDOW;
        for (i, row) in self.cells.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                match cell.x_eq() {
                    Ok(x) if x >= w_lo - 1e-9 && x <= w_hi + 1e-9 => {}
                    Ok(x) => violations.push(ConfigViolation::WeightWindow {
                        row: i,
                        column: j,
                        x_eq: x,
                    }),
                    Err(e) => {
                        violations.push(ConfigViolation::Structure(format!("cell ({i}, {j}): {e}")))
                    }
                }
            }
        }
        if let Some(vtc) = vtc {
            match vtc.delay(vtc.v_in_range[1]) {
                Ok(max_delay) if max_delay > self.clk_high => {
                    violations.push(ConfigViolation::PulseOverrun {
                        max_delay,
                        clk_high: self.clk_high,
                    });
                }
                Ok(_) => {}
                Err(e) => violations.push(ConfigViolation::Structure(format!(
                    "converter parameters: {e}"
                ))),
            }
        }
        violations
    }
}

/// One rule violation found by [`CrossbarConfig::check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConfigViolation {
    /// Shape or parameter defect that makes the array unsimulatable.
    Structure(String),
    /// Column limit: more columns than the line loss model supports.
    ColumnLimit { cols: usize, max: usize },
    /// Clock window: the high phase and period are inconsistent.
    ClockWindow { clk_high: f64, period: f64 },
    /// Clock vs conversion: a full-swing input produces a pulse longer than
    /// the high phase, so the top of the input range is truncated.
    PulseOverrun { max_delay: f64, clk_high: f64 },
    /// Integrator sizing: a column capacitance strays from the per-row rule.
    IntegratorSizing {
        column: usize,
        cap: f64,
        recommended: f64,
    },
    /// Weight window: a cell's ratio sits outside the linear range.
    WeightWindow {
        row: usize,
        column: usize,
        x_eq: f64,
    },
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigViolation::Structure(msg) => write!(f, "structure: {msg}"),
            ConfigViolation::ColumnLimit { cols, max } => {
                write!(f, "column limit: {cols} columns exceeds the maximum of {max}")
            }
            ConfigViolation::ClockWindow { clk_high, period } => write!(
                f,
                "clock window: high phase {clk_high:e} s and period {period:e} s are inconsistent"
            ),
            ConfigViolation::PulseOverrun { max_delay, clk_high } => write!(
                f,
                "clock vs max pulse: full-swing conversion takes {max_delay:e} s but the high \
                 phase is {clk_high:e} s"
            ),
            ConfigViolation::IntegratorSizing {
                column,
                cap,
                recommended,
            } => write!(
                f,
                "integrator sizing: column {column} has {cap:e} F, rule recommends {recommended:e} F"
            ),
            ConfigViolation::WeightWindow { row, column, x_eq } => write!(
                f,
                "weight window: cell ({row}, {column}) holds {x_eq:.4}, outside [{}, {}]",
                X_EQ_WINDOW[0], X_EQ_WINDOW[1]
            ),
        }
    }
}

/// Result of one MAC cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacOutput {
    /// Integrated voltage (V) per column.
    pub voltages: Vec<f64>,
    /// Total delivered charge (C) per column.
    pub charges: Vec<f64>,
    /// (row, column) of every cell whose gate voltage left the linear
    /// window during this cycle.
    pub nonlinear_cells: Vec<(usize, usize)>,
}

/// Runs one MAC cycle: every row pulses once, every column integrates.
///
/// The integrators reset between cycles, so consecutive calls are
/// independent. Line degradation, when configured, shrinks the drive
/// uniformly across rows before any charge is computed.
pub fn simulate_mac(pulses: &PulseTrain, cfg: &CrossbarConfig) -> Result<MacOutput> {
    cfg.validate()?;
    if pulses.widths.len() != cfg.rows {
        return Err(Error::DimensionMismatch {
            what: "pulse train".into(),
            expected: cfg.rows,
            got: pulses.widths.len(),
        });
    }
    pulses.validate(cfg.clk_high)?;

    let loss = match &cfg.degradation {
        Some(d) => d.loss(cfg.cols)?,
        None => 0.0,
    };
    let keep = 1.0 - loss;
    let (width_scale, amplitude) = match cfg.degradation.as_ref().map(|d| d.mode) {
        Some(DegradationMode::Amplitude) => (1.0, pulses.amplitude * keep),
        Some(DegradationMode::Width) => (keep, pulses.amplitude),
        None => (1.0, pulses.amplitude),
    };

    let mut voltages = vec![0.0; cfg.cols];
    let mut charges = vec![0.0; cfg.cols];
    let mut nonlinear_cells = Vec::new();
    for j in 0..cfg.cols {
        let mut q = 0.0;
        for i in 0..cfg.rows {
            let out = cell_charge(
                pulses.widths[i] * width_scale,
                amplitude,
                &cfg.cells[i][j],
                &cfg.fet,
            )?;
            q += out.charge;
            if !out.linear {
                nonlinear_cells.push((i, j));
            }
        }
        charges[j] = q;
        voltages[j] = q / cfg.integrator_caps[j];
    }
    Ok(MacOutput {
        voltages,
        charges,
        nonlinear_cells,
    })
}

/// Zero-loss pulse regeneration between array tiles: the repeater hands the
/// same train to the next tile unchanged.
pub fn regenerate(pulses: &PulseTrain) -> PulseTrain {
    pulses.clone()
}

/// Runs the same pulse train across several independent tiles and
/// concatenates their columns. Tiles must agree on row count; nonlinearity
/// metadata keeps per-tile column indices offset into the combined output.
pub fn simulate_tiled(pulses: &PulseTrain, tiles: &[CrossbarConfig]) -> Result<MacOutput> {
    if tiles.is_empty() {
        return Err(Error::input("tiles", "need at least one tile"));
    }
    let mut voltages = Vec::new();
    let mut charges = Vec::new();
    let mut nonlinear_cells = Vec::new();
    let mut train = pulses.clone();
    let mut col_offset = 0;
    for tile in tiles {
        let out = simulate_mac(&train, tile)?;
        nonlinear_cells.extend(
            out.nonlinear_cells
                .iter()
                .map(|&(i, j)| (i, j + col_offset)),
        );
        col_offset += tile.cols;
        voltages.extend(out.voltages);
        charges.extend(out.charges);
        train = regenerate(&train);
    }
    Ok(MacOutput {
        voltages,
        charges,
        nonlinear_cells,
    })
}

/// Per-column volts-to-products scaling learned from one calibration cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCalibration {
    /// Volts per unit of expected product, per column.
    pub factors: Vec<f64>,
}

/// Derives per-column scaling factors from observed voltages and their
/// expected dimensionless products: `factor_j = observed_j / expected_j`.
///
/// Columns whose expected product is zero must also observe zero; they get a
/// neutral factor.
pub fn calibrate_scaling(observed: &[f64], expected: &[f64]) -> Result<ScalingCalibration> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::DimensionMismatch {
            what: "calibration readings".into(),
            expected: expected.len(),
            got: observed.len(),
        });
    }
    let mut factors = Vec::with_capacity(observed.len());
    for (j, (&obs, &exp)) in observed.iter().zip(expected).enumerate() {
        if exp == 0.0 {
            if obs != 0.0 {
                return Err(Error::Calibration(format!(
                    "column {j} expects 0 but observed {obs:e} V"
                )));
            }
            factors.push(1.0);
            continue;
        }
        if exp > 0.0 && obs <= 0.0 {
            return Err(Error::Calibration(format!(
                "column {j} expects a positive product but observed {obs:e} V"
            )));
        }
        let f = obs / exp;
        if !(f.is_finite() && f != 0.0) {
            return Err(Error::Calibration(format!(
                "column {j} yields unusable factor {f:e}"
            )));
        }
        factors.push(f);
    }
    Ok(ScalingCalibration { factors })
}

impl ScalingCalibration {
    /// Maps observed column voltages back to dimensionless products.
    pub fn normalize(&self, observed: &[f64]) -> Result<Vec<f64>> {
        if observed.len() != self.factors.len() {
            return Err(Error::DimensionMismatch {
                what: "normalize readings".into(),
                expected: self.factors.len(),
                got: observed.len(),
            });
        }
        Ok(observed
            .iter()
            .zip(&self.factors)
            .map(|(o, f)| o / f)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ideal_mac;
    use approx::assert_relative_eq;

    /// 5x4 array of exactly weight-0.5 cells on 300 fF integrators.
    fn half_weight_array() -> CrossbarConfig {
        CrossbarConfig::from_weights(&vec![vec![0.5; 4]; 5]).unwrap()
    }

    #[test]
    fn reference_config_is_sound() {
        let cfg = CrossbarConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.rows, 5);
        assert_eq!(cfg.cols, 4);
        assert_relative_eq!(cfg.integrator_caps[0], 300e-15, max_relative = 1e-12);
        assert!(cfg.check(Some(&VtcParams::default())).is_empty());
    }

    #[test]
    fn integrator_rule_is_sixty_femtofarads_per_row() {
        assert_relative_eq!(integrator_cap_for_rows(5), 300e-15, max_relative = 1e-15);
        assert_relative_eq!(integrator_cap_for_rows(4), 240e-15, max_relative = 1e-15);
    }

    #[test]
    fn uniform_full_swing_cycle_matches_hand_computation() {
        // Five rows pulsing 2.0893 ns into weight-0.5 cells: each cell
        // delivers 240.4 fC, five of them on 300 fF give 4.007 V.
        let cfg = half_weight_array();
        let width = 2.089_285_714_285_714_6e-9;
        let out = simulate_mac(&PulseTrain::uniform(width, 5), &cfg).unwrap();
        let oracle = 5.0 * (230.13e-6 * 0.5 * width) / 300e-15;
        for j in 0..4 {
            assert_relative_eq!(out.voltages[j], oracle, max_relative = 1e-13);
            assert_relative_eq!(out.voltages[j], 4.007, max_relative = 1e-3);
        }
        assert!(out.nonlinear_cells.is_empty());

        // Against the expected dot product Σ v·x = 2.5 the scaling factor is
        // 4.007 / 2.5 ≈ 1.603 V per unit.
        let expected = ideal_mac(&[1.0; 5], &cfg.weights().unwrap()).unwrap();
        let cal = calibrate_scaling(&out.voltages, &expected).unwrap();
        assert_relative_eq!(cal.factors[0], 1.6027, max_relative = 1e-3);
        let normalized = cal.normalize(&out.voltages).unwrap();
        assert_relative_eq!(normalized[0], 2.5, max_relative = 1e-12);
    }

    #[test]
    fn charge_is_linear_in_widths() {
        let cfg = CrossbarConfig::default();
        let a = PulseTrain::new(vec![0.4e-9, 0.8e-9, 1.2e-9, 0.2e-9, 0.6e-9]);
        let b = PulseTrain::new(vec![0.3e-9, 0.1e-9, 0.5e-9, 0.9e-9, 0.7e-9]);
        let sum = PulseTrain::new(a.widths.iter().zip(&b.widths).map(|(x, y)| x + y).collect());
        let va = simulate_mac(&a, &cfg).unwrap().voltages;
        let vb = simulate_mac(&b, &cfg).unwrap().voltages;
        let vs = simulate_mac(&sum, &cfg).unwrap().voltages;
        for j in 0..cfg.cols {
            assert_relative_eq!(vs[j], va[j] + vb[j], max_relative = 1e-12);
        }
    }

    #[test]
    fn calibration_recovers_the_ideal_dot_product() {
        let cfg = CrossbarConfig::default();
        let vtc = VtcParams::default();
        let weights = cfg.weights().unwrap();

        // Calibrate on the all-max input vector.
        let cal_inputs = vec![vtc.v_in_range[1]; cfg.rows];
        let cal_out = simulate_mac(&encode_inputs(&cal_inputs, &vtc).unwrap(), &cfg).unwrap();
        let cal = calibrate_scaling(
            &cal_out.voltages,
            &ideal_mac(&cal_inputs, &weights).unwrap(),
        )
        .unwrap();

        // Any other input now reads back as the exact dot product.
        let v_in = vec![0.3, 0.9, 0.1, 0.7, 0.5];
        let out = simulate_mac(&encode_inputs(&v_in, &vtc).unwrap(), &cfg).unwrap();
        let got = cal.normalize(&out.voltages).unwrap();
        let want = ideal_mac(&v_in, &weights).unwrap();
        for j in 0..cfg.cols {
            assert_relative_eq!(got[j], want[j], max_relative = 1e-12);
        }
    }

    #[test]
    fn calibration_rejects_unusable_readings() {
        assert!(matches!(
            calibrate_scaling(&[1.0], &[0.0]),
            Err(Error::Calibration(_))
        ));
        assert!(matches!(
            calibrate_scaling(&[0.0], &[1.0]),
            Err(Error::Calibration(_))
        ));
        // Zero expecting zero calibrates neutrally.
        let cal = calibrate_scaling(&[0.0, 2.0], &[0.0, 1.0]).unwrap();
        assert_eq!(cal.factors[0], 1.0);
    }

    #[test]
    fn line_loss_interpolates_between_anchors() {
        let d = DegradationModel::default();
        assert_relative_eq!(d.loss(16).unwrap(), 0.054, max_relative = 1e-12);
        assert_relative_eq!(d.loss(32).unwrap(), 0.108, max_relative = 1e-12);
        assert_relative_eq!(d.loss(46).unwrap(), 0.134, max_relative = 1e-12);
        assert_relative_eq!(d.loss(4).unwrap(), 0.0135, max_relative = 1e-12);
        assert!(matches!(d.loss(47), Err(Error::InvalidInput { .. })));
        assert!(matches!(d.loss(0), Err(Error::InvalidInput { .. })));
    }

    #[test]
    fn width_mode_loss_scales_outputs_without_leaving_the_window() {
        let mut cfg = half_weight_array();
        let train = PulseTrain::uniform(2e-9, 5);
        let clean = simulate_mac(&train, &cfg).unwrap();

        cfg.degradation = Some(DegradationModel::default());
        let lossy = simulate_mac(&train, &cfg).unwrap();
        let keep = 1.0 - cfg.degradation.as_ref().unwrap().loss(4).unwrap();
        for j in 0..4 {
            assert_relative_eq!(
                lossy.voltages[j],
                clean.voltages[j] * keep,
                max_relative = 1e-12
            );
        }
        assert!(lossy.nonlinear_cells.is_empty());
    }

    #[test]
    fn amplitude_mode_loss_can_push_gates_out_of_the_window() {
        let mut cfg = half_weight_array();
        cfg.degradation = Some(DegradationModel {
            mode: DegradationMode::Amplitude,
            ..DegradationModel::default()
        });
        // Weight-0.5 cells sit exactly on the window edge at 1 V amplitude;
        // any amplitude loss drops the gate below it.
        let out = simulate_mac(&PulseTrain::uniform(2e-9, 5), &cfg).unwrap();
        assert_eq!(out.nonlinear_cells.len(), 20);
    }

    #[test]
    fn oversized_pulses_and_shapes_are_rejected() {
        let cfg = CrossbarConfig::default();
        let err = simulate_mac(&PulseTrain::uniform(4e-9, 5), &cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidInput { .. }));
        let err = simulate_mac(&PulseTrain::uniform(1e-9, 3), &cfg).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn column_ceiling_is_a_configuration_error() {
        let cfg = CrossbarConfig::reference(2, 47);
        assert!(matches!(cfg.validate(), Err(Error::Configuration(_))));
        assert!(cfg
            .check(None)
            .iter()
            .any(|v| matches!(v, ConfigViolation::ColumnLimit { .. })));
    }

    #[test]
    fn audit_names_each_violated_rule() {
        let mut cfg = CrossbarConfig {
            period: 1e-9,
            ..CrossbarConfig::default()
        };
        cfg.integrator_caps[2] = 500e-15;
        cfg.cells[1][1] = CellConfig::for_weight(0.9).unwrap();
        // Full-swing delay now exceeds the 3 ns high phase.
        let slow = VtcParams {
            c1: 60e-15,
            ..VtcParams::default()
        };

        let violations = cfg.check(Some(&slow));
        assert!(violations
            .iter()
            .any(|v| matches!(v, ConfigViolation::IntegratorSizing { column: 2, .. })));
        assert!(violations.iter().any(|v| matches!(
            v,
            ConfigViolation::WeightWindow {
                row: 1,
                column: 1,
                ..
            }
        )));
        assert!(violations
            .iter()
            .any(|v| matches!(v, ConfigViolation::ClockWindow { .. })));
        assert!(violations
            .iter()
            .any(|v| matches!(v, ConfigViolation::PulseOverrun { .. })));
        // Each violation renders a rule name.
        for v in &violations {
            assert!(!v.to_string().is_empty());
        }
    }

    #[test]
    fn consecutive_cycles_are_independent() {
        let cfg = CrossbarConfig::default();
        let train = PulseTrain::new(vec![1e-9, 2e-9, 0.5e-9, 1.5e-9, 2.5e-9]);
        let first = simulate_mac(&train, &cfg).unwrap();
        let second = simulate_mac(&train, &cfg).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn tiling_concatenates_independent_arrays() {
        let left = CrossbarConfig::reference(5, 2);
        let right = CrossbarConfig::reference(5, 3);
        let train = PulseTrain::new(vec![1e-9, 2e-9, 0.5e-9, 1.5e-9, 2.5e-9]);
        let tiled = simulate_tiled(&train, &[left.clone(), right.clone()]).unwrap();
        let l = simulate_mac(&train, &left).unwrap();
        let r = simulate_mac(&regenerate(&train), &right).unwrap();
        assert_eq!(tiled.voltages[..2], l.voltages[..]);
        assert_eq!(tiled.voltages[2..], r.voltages[..]);
    }

    #[test]
    fn energy_totals_follow_the_per_mac_split() {
        let rep = energy_report(120, &EnergyParams::default()).unwrap();
        assert_relative_eq!(rep.per_mac_fj, 66.4, max_relative = 1e-12);
        assert_relative_eq!(rep.total_fj, 7968.0, max_relative = 1e-12);
        assert_relative_eq!(rep.total_j, 7.968e-12, max_relative = 1e-12);
    }
}
