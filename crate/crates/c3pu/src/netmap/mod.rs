//! Compiles a trained two-layer classifier onto a pair of simulated arrays
//! and runs time-domain inference through them.
//!
//! The mapping follows a differential scheme. Each layer's signed weights
//! (bias row included) are shifted by their most negative value, affinely
//! coded into the cell weight window, and joined by one extra column that
//! carries the coded shift itself. Subtracting that reference column's
//! output from every other column cancels the shift exactly, leaving a
//! positive multiple of the signed dot product. Between the arrays the
//! subtraction happens in the time domain — a differential pulse stage that
//! also clips negatives, which *is* the hidden ReLU — while after the second
//! array it happens in software, where the logits' common scale is divided
//! away.

pub mod ann;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cell::X_EQ_WINDOW;
use crate::crossbar::{
    calibrate_scaling, encode_inputs, energy_report, simulate_mac, CrossbarConfig, EnergyReport,
    PulseTrain, ScalingCalibration,
};
use crate::error::{Error, Result};
use crate::netmap::ann::{argmax, softmax, AnnModel, Dataset};
use crate::variability::{perturb, perturb_crossbar, perturb_pulses, sample_rng, MismatchSpec};
use crate::vtc::VtcParams;

/// Narrowest pulse the generators can emit (s); anything below is dropped to
/// zero width. Sits below the narrowest legitimate conversion so real
/// signals survive. Default: 50 ps.
pub const DEFAULT_T_MIN: f64 = 50e-12;

/// RNG stream reserved for drawing one hardware instance, disjoint from the
/// per-sample streams `0..n`.
pub const HARDWARE_STREAM: u64 = u64::MAX;

/// Drops widths the pulse generator cannot physically produce. Idempotent.
pub fn quantize_pulse(pw: f64, t_min: f64) -> f64 {
    if pw < t_min {
        0.0
    } else {
        pw
    }
}

/// Differential time-domain subtraction with rectification: the width
/// difference of two pulses, gated so a negative difference yields no pulse
/// at all. This clipping is the hidden-layer ReLU.
pub fn time_subtract_relu(pw: f64, pw_ref: f64) -> Result<f64> {
    for (name, v) in [("pw", pw), ("pw_ref", pw_ref)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::input(
                name,
                format!("widths are non-negative, got {v:e}"),
            ));
        }
    }
    Ok((pw - pw_ref).max(0.0))
}

/// Shifts signed weights by their most negative entry so everything is
/// non-negative: `W = W_shifted + w_min` elementwise. A matrix with no
/// negative entries shifts by zero — the reference column must still encode
/// signed zero, so the shift never goes positive.
pub fn shift_weights(w: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64)> {
    if w.is_empty() || w[0].is_empty() {
        return Err(Error::input("weights", "matrix must be non-empty"));
    }
    let mut w_min = 0.0f64;
    for row in w {
        for &v in row {
            if !v.is_finite() {
                return Err(Error::input("weights", format!("non-finite entry {v}")));
            }
            w_min = w_min.min(v);
        }
    }
    let shifted = w
        .iter()
        .map(|row| row.iter().map(|&v| v - w_min).collect())
        .collect();
    Ok((shifted, w_min))
}

/// The affine weight→cell-weight code fitted to one layer.
///
/// In signed-weight terms, `code(w) = win_lo + win_span · (w − lo) / span`.
/// Weight differences survive the coding up to the constant `slope()`, which
/// is what the differential readout recovers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightMapping {
    /// The shift: the layer's most negative signed weight (≤ 0).
    pub lo: f64,
    /// Signed-weight range covered by the window.
    pub span: f64,
}

impl WeightMapping {
    /// Cell weight code for a signed weight.
    pub fn code(&self, w: f64) -> f64 {
        let [win_lo, win_hi] = X_EQ_WINDOW;
        win_lo + (win_hi - win_lo) * (w - self.lo) / self.span
    }

    /// The code of signed weight zero — the reference column's cell weight.
    pub fn zero_code(&self) -> f64 {
        self.code(0.0)
    }

    /// Cell-weight units per signed-weight unit.
    pub fn slope(&self) -> f64 {
        let [win_lo, win_hi] = X_EQ_WINDOW;
        (win_hi - win_lo) / self.span
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.span.is_finite() && self.span > 0.0) {
            return Err(Error::param(
                "span",
                format!("must be positive, got {}", self.span),
            ));
        }
        if !(self.lo.is_finite() && self.lo <= 0.0 && self.lo + self.span >= 0.0) {
            return Err(Error::param(
                "lo",
                format!(
                    "interval [{}, {}] must contain zero",
                    self.lo,
                    self.lo + self.span
                ),
            ));
        }
        Ok(())
    }
}

/// Codes shifted weights into the cell window and appends the reference
/// column that carries the coded shift `|w_min|`.
///
/// The code is order-preserving — strictly, for distinct weights — with the
/// largest value (shifted weight or `|w_min|`, whichever is bigger) landing
/// at the window top and shifted zero at the window bottom.
pub fn map_weights_to_xeq(
    w_shifted: &[Vec<f64>],
    w_min: f64,
) -> Result<(Vec<Vec<f64>>, WeightMapping)> {
    if w_shifted.is_empty() || w_shifted[0].is_empty() {
        return Err(Error::input("w_shifted", "matrix must be non-empty"));
    }
    if !(w_min.is_finite() && w_min <= 0.0) {
        return Err(Error::input(
            "w_min",
            format!("the shift must be non-positive, got {w_min}"),
        ));
    }
    let mut w_max = w_min.abs();
    for row in w_shifted {
        for &v in row {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::input(
                    "w_shifted",
                    format!("shifted weights are non-negative, got {v}"),
                ));
            }
            w_max = w_max.max(v);
        }
    }
    if w_max == 0.0 {
        return Err(Error::input(
            "w_shifted",
            "all weights are zero; the mapping range is degenerate",
        ));
    }
    let mapping = WeightMapping {
        lo: w_min,
        span: w_max,
    };
    let [win_lo, win_hi] = X_EQ_WINDOW;
    let code = |w: f64| win_lo + (win_hi - win_lo) * w / w_max;
    let reference = code(w_min.abs());
    let coded = w_shifted
        .iter()
        .map(|row| {
            let mut r: Vec<f64> = row.iter().map(|&w| code(w)).collect();
            r.push(reference);
            r
        })
        .collect();
    Ok((coded, mapping))
}

/// How the inter-layer pulse widths are scaled up before the second array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseScale {
    /// Delay-element chain with a fixed multiplier.
    Fixed(f64),
    /// The ratio of the width a converter would give each activation to the
    /// width the subtractor actually produces — a constant of the mapping,
    /// `1 / slope`. It re-normalizes the inter-layer code to the converter
    /// gain: one activation unit then rides the same width a unit input does.
    Auto,
}

impl Default for PulseScale {
    fn default() -> Self {
        PulseScale::Fixed(18.0)
    }
}

/// Everything `compile` needs besides the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompileOptions {
    pub vtc: VtcParams,
    pub pulse_scale: PulseScale,
    /// Narrowest producible pulse (s). Default: 50 ps.
    pub t_min: f64,
    /// First array clock high phase / period (s). Default: 3 ns / 6 ns.
    pub clk1_high: f64,
    pub period1: f64,
    /// Second array clock high phase / period (s). Default: 9 ns / 12 ns —
    /// wider, because scaled activation pulses outgrow raw input pulses.
    pub clk2_high: f64,
    pub period2: f64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            vtc: VtcParams::default(),
            pulse_scale: PulseScale::default(),
            t_min: DEFAULT_T_MIN,
            clk1_high: 3e-9,
            period1: 6e-9,
            clk2_high: 9e-9,
            period2: 12e-9,
        }
    }
}

impl CompileOptions {
    pub fn validate(&self) -> Result<()> {
        self.vtc.validate()?;
        if let PulseScale::Fixed(s) = self.pulse_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::param(
                    "pulse_scale",
                    format!("must be positive, got {s}"),
                ));
            }
        }
        if !(self.t_min.is_finite() && self.t_min >= 0.0) {
            return Err(Error::param(
                "t_min",
                format!("must be non-negative, got {:e}", self.t_min),
            ));
        }
        for (name, clk, period) in [
            ("first array", self.clk1_high, self.period1),
            ("second array", self.clk2_high, self.period2),
        ] {
            if !(clk.is_finite() && clk > 0.0 && period.is_finite() && period >= clk) {
                return Err(Error::param(
                    "clock",
                    format!("{name} needs 0 < clk_high <= period, got {clk:e} / {period:e}"),
                ));
            }
        }
        Ok(())
    }
}

/// A classifier compiled onto two arrays, with its calibrations frozen.
///
/// Calibration factors are measured once on the nominal arrays (an all-ones
/// drive against the known column sums) and kept; a mismatched hardware
/// instance is deliberately read through the nominal calibration, the way a
/// factory-calibrated part would be.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedNetwork {
    pub model: AnnModel,
    pub vtc: VtcParams,
    /// First array: feature rows + bias row; hidden columns + reference.
    pub xbar1: CrossbarConfig,
    /// Second array: hidden rows + bias row; class columns + reference.
    pub xbar2: CrossbarConfig,
    pub map1: WeightMapping,
    pub map2: WeightMapping,
    /// Per-column readout calibration of the first array.
    pub scale1: ScalingCalibration,
    /// Per-column readout calibration of the second array.
    pub scale2: ScalingCalibration,
    /// Resolved inter-layer width multiplier.
    pub pulse_scale: f64,
    /// Seconds of second-array pulse width per unit of hidden activation.
    ///
    /// The bias row is driven at exactly this width — its converter input is
    /// chosen so logical 1.0 rides the same code as the activations. Under
    /// [`PulseScale::Auto`] this equals the converter gain, i.e. the bias is
    /// literally a full-scale conversion.
    pub code_unit: f64,
    /// Narrowest producible pulse (s).
    pub t_min: f64,
}

fn augmented(w: &[Vec<f64>], b: &[f64]) -> Vec<Vec<f64>> {
    let mut aug = w.to_vec();
    aug.push(b.to_vec());
    aug
}

/// Maps a trained model onto two arrays and calibrates their readouts.
pub fn compile(model: &AnnModel, opts: &CompileOptions) -> Result<MappedNetwork> {
    model.validate()?;
    opts.validate()?;
    let (_, n_h, n_out) = model.dims();
    let vtc = opts.vtc.clone();
    let gain = vtc.conversion_gain();
    if gain * vtc.v_in_range[1] > opts.clk1_high {
        return Err(Error::Timing(format!(
            "a full-scale input converts to {:.3e} s, wider than the {:.3e} s first-array window",
            gain * vtc.v_in_range[1],
            opts.clk1_high
        )));
    }

    let aug1 = augmented(&model.w1, &model.b1);
    let (shifted1, w_min1) = shift_weights(&aug1)?;
    let (codes1, map1) = map_weights_to_xeq(&shifted1, w_min1)?;
    let mut xbar1 = CrossbarConfig::from_weights(&codes1)?;
    xbar1.clk_high = opts.clk1_high;
    xbar1.period = opts.period1;

    let aug2 = augmented(&model.w2, &model.b2);
    let (shifted2, w_min2) = shift_weights(&aug2)?;
    let (codes2, map2) = map_weights_to_xeq(&shifted2, w_min2)?;
    let mut xbar2 = CrossbarConfig::from_weights(&codes2)?;
    xbar2.clk_high = opts.clk2_high;
    xbar2.period = opts.period2;

    let pulse_scale = match opts.pulse_scale {
        PulseScale::Fixed(s) => s,
        PulseScale::Auto => 1.0 / map1.slope(),
    };
    let code_unit = pulse_scale * gain * map1.slope();
    if code_unit > opts.clk2_high {
        return Err(Error::Timing(format!(
            "a unit activation scales to {code_unit:.3e} s, wider than the {:.3e} s second-array window",
            opts.clk2_high
        )));
    }

    // Readout calibration on the nominal arrays: drive every row with the
    // width that encodes 1.0 and divide out the observed volts per unit of
    // expected column sum.
    let unit1 = encode_inputs(&vec![1.0; aug1.len()], &vtc)?;
    let out1 = simulate_mac(&unit1, &xbar1)?;
    let expected1: Vec<f64> = (0..=n_h)
        .map(|j| codes1.iter().map(|row| row[j]).sum())
        .collect();
    let scale1 = calibrate_scaling(&out1.voltages, &expected1)?;

    let unit2 = PulseTrain::uniform(code_unit, aug2.len());
    let out2 = simulate_mac(&unit2, &xbar2)?;
    let expected2: Vec<f64> = (0..=n_out)
        .map(|k| codes2.iter().map(|row| row[k]).sum())
        .collect();
    let scale2 = calibrate_scaling(&out2.voltages, &expected2)?;

    Ok(MappedNetwork {
        model: model.clone(),
        vtc,
        xbar1,
        xbar2,
        map1,
        map2,
        scale1,
        scale2,
        pulse_scale,
        code_unit,
        t_min: opts.t_min,
    })
}

/// Everything one hardware inference produces, stage by stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceTrace {
    /// Normalized features plus the trailing bias input 1.0.
    pub inputs_unit: Vec<f64>,
    /// First-array drive widths (s), after noise and the pulse floor.
    pub input_widths: Vec<f64>,
    /// Calibrated first-array column products (hidden columns + reference).
    pub layer1_products: Vec<f64>,
    /// Subtractor output widths (s) per hidden unit, after rectification,
    /// noise, and the pulse floor — before the scale-up.
    pub sub_widths: Vec<f64>,
    /// Second-array drive widths (s): scaled activations plus the trailing
    /// bias width.
    pub hidden_widths: Vec<f64>,
    /// Hidden activations as the second array sees them (widths decoded).
    pub hidden: Vec<f64>,
    /// Calibrated second-array column products (class columns + reference).
    pub layer2_products: Vec<f64>,
    /// Recovered class scores, on the ideal model's scale.
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub prediction: usize,
}

/// Hardware evaluation summary over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedEvalReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// `confusion[true_class][predicted_class]`.
    pub confusion: Vec<Vec<usize>>,
    /// Fraction of samples where hardware and ideal model agree.
    pub ideal_agreement: f64,
    pub predictions: Vec<usize>,
}

impl MappedNetwork {
    /// The first layer's weight shift (its most negative signed weight).
    pub fn w_min1(&self) -> f64 {
        self.map1.lo
    }

    /// The second layer's weight shift.
    pub fn w_min2(&self) -> f64 {
        self.map2.lo
    }

    /// Largest hidden activation the second array's clock window can encode.
    pub fn max_activation(&self) -> f64 {
        self.xbar2.clk_high / self.code_unit
    }

    /// Noise-free inference on raw features.
    pub fn infer(&self, raw: &[f64]) -> Result<InferenceTrace> {
        self.infer_with_noise(raw, &MismatchSpec::noiseless(), &mut sample_rng(0, 0))
    }

    /// Inference with conversion mismatch drawn at every pulse-generation
    /// stage: the input converters, the differential subtractor outputs, and
    /// the bias converter. Array mismatch is not drawn here — perturb the
    /// instance once with [`MappedNetwork::perturb_arrays`] and infer on
    /// that, the way one physical part serves many samples.
    pub fn infer_with_noise(
        &self,
        raw: &[f64],
        spec: &MismatchSpec,
        rng: &mut ChaCha8Rng,
    ) -> Result<InferenceTrace> {
        spec.validate()?;
        let (_, n_h, _) = self.model.dims();
        let gain = self.vtc.conversion_gain();
        let mut inputs_unit = self.model.scale_features(raw)?;
        inputs_unit.push(1.0);

        // Phase 1: convert, perturb each converter, apply the pulse floor.
        let encoded = encode_inputs(&inputs_unit, &self.vtc)?;
        let mut train1 = perturb_pulses(&encoded, spec, self.xbar1.clk_high, rng)?;
        for w in &mut train1.widths {
            *w = quantize_pulse(*w, self.t_min);
        }
        let out1 = simulate_mac(&train1, &self.xbar1)?;
        let layer1_products = self.scale1.normalize(&out1.voltages)?;

        // Differential stage: each calibrated level re-encodes as a pulse of
        // width gain·level (the converters' shared affine base cancels edge
        // to edge), the reference column's pulse is subtracted with
        // rectification, and the resulting pulse — a fresh generation event,
        // so it draws noise and obeys the floor — is scaled up.
        let ref_pw = gain * layer1_products[n_h];
        let mut sub_widths = Vec::with_capacity(n_h);
        for &level in &layer1_products[..n_h] {
            let s = time_subtract_relu(gain * level, ref_pw)?;
            let s = perturb(s, spec.vtc_delay_rel_sigma, rng);
            sub_widths.push(quantize_pulse(s, self.t_min));
        }
        let mut widths2: Vec<f64> = sub_widths.iter().map(|&s| self.pulse_scale * s).collect();
        // Bias row: its own converter encodes logical 1.0.
        let bias_pw = perturb(self.code_unit, spec.vtc_delay_rel_sigma, rng);
        widths2.push(quantize_pulse(bias_pw, self.t_min));
        for (j, w) in widths2.iter_mut().enumerate() {
            if *w > self.xbar2.clk_high {
                // On the clean nominal path an overrun is a design error and
                // must be loud. Under mismatch it is what the silicon does:
                // the clock gate clips the pulse and the activation
                // saturates.
                if spec.is_noiseless() {
                    return Err(Error::Timing(format!(
                        "activation pulse {j} is {w:.3e} s, wider than the {:.3e} s second-array window",
                        self.xbar2.clk_high
                    )));
                }
                *w = self.xbar2.clk_high;
            }
        }
        let train2 = PulseTrain::new(widths2);
        let hidden: Vec<f64> = train2.widths[..n_h]
            .iter()
            .map(|&w| w / self.code_unit)
            .collect();

        // Phase 2: accumulate, then subtract the reference column in
        // software and divide the mapping slope away to land on the ideal
        // model's logit scale.
        let out2 = simulate_mac(&train2, &self.xbar2)?;
        let layer2_products = self.scale2.normalize(&out2.voltages)?;
        let r = layer2_products[layer2_products.len() - 1];
        let logits: Vec<f64> = layer2_products[..layer2_products.len() - 1]
            .iter()
            .map(|&v| (v - r) / self.map2.slope())
            .collect();
        let probs = softmax(&logits);
        let prediction = argmax(&logits);
        Ok(InferenceTrace {
            inputs_unit,
            input_widths: train1.widths,
            layer1_products,
            sub_widths,
            hidden_widths: train2.widths,
            hidden,
            layer2_products,
            logits,
            probs,
            prediction,
        })
    }

    /// Draws one mismatched hardware instance: every cell weight and the
    /// shared transfer perturbed per `spec`, read through the *nominal*
    /// calibration. Conversion mismatch stays per-inference.
    pub fn perturb_arrays(
        &self,
        spec: &MismatchSpec,
        rng: &mut ChaCha8Rng,
    ) -> Result<MappedNetwork> {
        let mut instance = self.clone();
        instance.xbar1 = perturb_crossbar(&self.xbar1, spec, rng)?;
        instance.xbar2 = perturb_crossbar(&self.xbar2, spec, rng)?;
        Ok(instance)
    }

    /// Energy of one inference: every cell in both arrays performs one MAC.
    pub fn energy_per_inference(&self) -> Result<EnergyReport> {
        let n_macs = (self.xbar1.rows * self.xbar1.cols + self.xbar2.rows * self.xbar2.cols) as u64;
        energy_report(n_macs, &self.xbar1.energy)
    }
}

/// Evaluates a compiled network over a dataset.
///
/// With a noisy spec, one hardware instance is drawn on a reserved RNG
/// stream and every sample `i` converts with fresh mismatch on stream `i`,
/// so the run is deterministic in `spec.seed` and independent of evaluation
/// order. Ideal agreement is measured against the embedded model.
pub fn evaluate(
    net: &MappedNetwork,
    data: &Dataset,
    spec: &MismatchSpec,
) -> Result<MappedEvalReport> {
    data.validate()?;
    spec.validate()?;
    let (_, _, n_out) = net.model.dims();
    if data.n_classes() != n_out {
        return Err(Error::DimensionMismatch {
            what: "classes".into(),
            expected: n_out,
            got: data.n_classes(),
        });
    }
    let instance;
    let active = if spec.is_noiseless() {
        net
    } else {
        instance = net.perturb_arrays(spec, &mut sample_rng(spec.seed, HARDWARE_STREAM))?;
        &instance
    };
    let mut confusion = vec![vec![0usize; n_out]; n_out];
    let mut predictions = Vec::with_capacity(data.n_samples());
    let mut correct = 0;
    let mut agree = 0;
    for (i, (row, &label)) in data.features.iter().zip(&data.labels).enumerate() {
        let mut rng = sample_rng(spec.seed, i as u64);
        let trace = active.infer_with_noise(row, spec, &mut rng)?;
        confusion[label][trace.prediction] += 1;
        if trace.prediction == label {
            correct += 1;
        }
        if trace.prediction == net.model.predict(row)? {
            agree += 1;
        }
        predictions.push(trace.prediction);
    }
    let total = data.n_samples();
    Ok(MappedEvalReport {
        accuracy: correct as f64 / total as f64,
        correct,
        total,
        confusion,
        ideal_agreement: agree as f64 / total as f64,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hand_model() -> AnnModel {
        AnnModel {
            w1: vec![vec![0.4, -0.3, 0.1], vec![-0.2, 0.5, 0.3]],
            b1: vec![0.05, -0.1, 0.2],
            w2: vec![
                vec![0.6, -0.4, 0.2],
                vec![-0.5, 0.3, 0.1],
                vec![0.2, 0.2, -0.6],
            ],
            b2: vec![0.1, -0.2, 0.3],
            feature_max: vec![1.0, 1.0],
            class_names: vec!["a".into(), "b".into(), "c".into()],
        }
    }

    fn auto_options() -> CompileOptions {
        CompileOptions {
            pulse_scale: PulseScale::Auto,
            ..CompileOptions::default()
        }
    }

    #[test]
    fn shifting_moves_the_minimum_to_zero_and_reconstructs() {
        let w = vec![vec![1.0, -2.0], vec![0.0, 3.0]];
        let (shifted, w_min) = shift_weights(&w).unwrap();
        assert_eq!(w_min, -2.0);
        assert_eq!(shifted, vec![vec![3.0, 0.0], vec![2.0, 5.0]]);
        for (orig, shift) in w.iter().flatten().zip(shifted.iter().flatten()) {
            assert_relative_eq!(orig, &(shift + w_min), max_relative = 1e-15);
        }
        // Nothing negative: shift is zero and the matrix is unchanged.
        let w = vec![vec![0.0, 2.0]];
        let (shifted, w_min) = shift_weights(&w).unwrap();
        assert_eq!(w_min, 0.0);
        assert_eq!(shifted, w);
    }

    #[test]
    fn coding_pins_window_ends_and_midpoint() {
        let (shifted, w_min) = shift_weights(&[vec![4.0, -4.0], vec![2.0, 0.0]]).unwrap();
        let (coded, map) = map_weights_to_xeq(&shifted, w_min).unwrap();
        // Largest shifted weight hits the window top, shifted zero the bottom.
        assert_relative_eq!(coded[0][0], 0.75, max_relative = 1e-15); // 4 → shifted 8 = max
        assert_relative_eq!(coded[0][1], 0.5, max_relative = 1e-15); // −4 → shifted 0
        assert_relative_eq!(coded[1][1], 0.625, max_relative = 1e-15); // 0 → shifted 4 = mid
                                                                       // The appended reference column codes |w_min| in every row.
        for row in &coded {
            assert_eq!(row.len(), 3);
            assert_relative_eq!(row[2], map.zero_code(), max_relative = 1e-15);
        }
        assert_eq!(map.lo, -4.0);
        assert_eq!(map.span, 8.0);
    }

    #[test]
    fn coding_is_strictly_order_preserving() {
        let (shifted, w_min) = shift_weights(&[vec![-1.5, -0.2, 0.0, 0.3, 2.0]]).unwrap();
        let (coded, _) = map_weights_to_xeq(&shifted, w_min).unwrap();
        for pair in coded[0][..5].windows(2) {
            assert!(pair[0] < pair[1], "codes must rise with weights: {pair:?}");
        }
        for &x in &coded[0] {
            assert!((0.5..=0.75).contains(&x), "code {x} outside window");
        }
    }

    #[test]
    fn all_zero_weights_are_a_degenerate_range() {
        let (shifted, w_min) = shift_weights(&[vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            map_weights_to_xeq(&shifted, w_min),
            Err(Error::InvalidInput { .. })
        ));
        // All-equal negative weights still work: the reference value spans.
        let (shifted, w_min) = shift_weights(&[vec![-1.0, -1.0]]).unwrap();
        let (coded, map) = map_weights_to_xeq(&shifted, w_min).unwrap();
        assert_relative_eq!(coded[0][0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(coded[0][2], 0.75, max_relative = 1e-15);
        assert_eq!(map.span, 1.0);
    }

    #[test]
    fn compile_shapes_and_calibrations_match_the_model() {
        let net = compile(&hand_model(), &auto_options()).unwrap();
        assert_eq!((net.xbar1.rows, net.xbar1.cols), (3, 4)); // 2 inputs + bias, 3 hidden + ref
        assert_eq!((net.xbar2.rows, net.xbar2.cols), (4, 4)); // 3 hidden + bias, 3 classes + ref
        assert_eq!(net.scale1.factors.len(), 4);
        assert_eq!(net.scale2.factors.len(), 4);
        assert!(net.xbar1.check(Some(&net.vtc)).is_empty());
        assert_eq!(net.w_min1(), -0.3);
        assert_eq!(net.w_min2(), -0.6);
        // Auto scale re-normalizes the inter-layer code to the converter
        // gain: the bias row is literally a full-scale conversion.
        assert_relative_eq!(
            net.code_unit,
            net.vtc.conversion_gain(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn noiseless_inference_reproduces_ideal_logits_exactly() {
        let model = hand_model();
        let opts = CompileOptions {
            t_min: 0.0,
            ..auto_options()
        };
        let net = compile(&model, &opts).unwrap();
        for raw in [
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.3, 0.9],
            vec![0.72, 0.18],
            vec![1.0, 1.0],
        ] {
            let ideal = model.forward(&raw).unwrap();
            let hw = net.infer(&raw).unwrap();
            for (h, i) in hw.logits.iter().zip(&ideal.logits) {
                assert_relative_eq!(h, i, max_relative = 1e-9, epsilon = 1e-12);
            }
            for (h, i) in hw.hidden.iter().zip(&ideal.hidden) {
                assert_relative_eq!(h, i, max_relative = 1e-9, epsilon = 1e-12);
            }
            assert_eq!(hw.prediction, ideal.prediction);
            for (p, q) in hw.probs.iter().zip(&ideal.probs) {
                assert_relative_eq!(p, q, max_relative = 1e-8, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn default_pulse_floor_only_perturbs_below_threshold_activations() {
        let model = hand_model();
        let exact = compile(
            &model,
            &CompileOptions {
                t_min: 0.0,
                ..auto_options()
            },
        )
        .unwrap();
        let floored = compile(&model, &auto_options()).unwrap();
        let raw = vec![0.5, 0.4];
        let a = exact.infer(&raw).unwrap();
        let b = floored.infer(&raw).unwrap();
        // The floor zeroes activations whose subtractor pulse is below
        // t_min, shifting each logit by at most that dead zone times the
        // largest second-layer weight, per hidden unit.
        let gain = floored.vtc.conversion_gain();
        let dead_zone = floored.t_min / (gain * floored.map1.slope());
        let bound = 3.0 * dead_zone * 0.7 + 1e-12;
        for (x, y) in a.logits.iter().zip(&b.logits) {
            assert!(
                (x - y).abs() <= bound,
                "floor moved a logit by {}",
                (x - y).abs()
            );
        }
    }

    #[test]
    fn pulse_floor_zeroes_unproducible_widths() {
        assert_eq!(quantize_pulse(30e-12, 50e-12), 0.0);
        assert_eq!(quantize_pulse(0.0, 50e-12), 0.0);
        assert_eq!(quantize_pulse(2e-9, 50e-12), 2e-9);
        // Idempotent.
        assert_eq!(quantize_pulse(quantize_pulse(30e-12, 50e-12), 50e-12), 0.0);
    }

    #[test]
    fn time_subtraction_rectifies_width_differences() {
        assert_relative_eq!(
            time_subtract_relu(2.0e-9, 1.5e-9).unwrap(),
            0.5e-9,
            max_relative = 1e-15
        );
        assert_eq!(time_subtract_relu(1.0e-9, 1.0e-9).unwrap(), 0.0);
        assert_eq!(time_subtract_relu(0.5e-9, 2.0e-9).unwrap(), 0.0);
        // Two rectified differences recover the absolute difference.
        let (a, b) = (1.3e-9, 2.1e-9);
        let total = time_subtract_relu(a, b).unwrap() + time_subtract_relu(b, a).unwrap();
        assert_relative_eq!(total, (a - b).abs(), max_relative = 1e-15);
        assert!(time_subtract_relu(-1.0, 0.0).is_err());
    }

    #[test]
    fn oversized_activations_raise_a_timing_error() {
        let mut model = hand_model();
        for row in &mut model.w1 {
            for w in row.iter_mut() {
                *w *= 40.0;
            }
        }
        let net = compile(&model, &auto_options()).unwrap();
        match net.infer(&[1.0, 1.0]) {
            Err(Error::Timing(_)) => {}
            other => panic!("expected a timing error, got {other:?}"),
        }
    }

    #[test]
    fn noisy_inference_is_deterministic_per_stream() {
        let net = compile(&hand_model(), &auto_options()).unwrap();
        let spec = MismatchSpec::default();
        let raw = vec![0.6, 0.3];
        let a = net
            .infer_with_noise(&raw, &spec, &mut sample_rng(spec.seed, 5))
            .unwrap();
        let b = net
            .infer_with_noise(&raw, &spec, &mut sample_rng(spec.seed, 5))
            .unwrap();
        assert_eq!(a, b);
        let c = net
            .infer_with_noise(&raw, &spec, &mut sample_rng(spec.seed, 6))
            .unwrap();
        assert_ne!(a.logits, c.logits);
        // Noiseless spec through the noisy path changes nothing.
        let clean = net
            .infer_with_noise(&raw, &MismatchSpec::noiseless(), &mut sample_rng(9, 9))
            .unwrap();
        assert_eq!(clean, net.infer(&raw).unwrap());
    }

    #[test]
    fn perturbed_instances_differ_but_keep_nominal_calibration() {
        let net = compile(&hand_model(), &auto_options()).unwrap();
        let spec = MismatchSpec {
            xeq_rel_sigma: 0.02,
            ..MismatchSpec::default()
        };
        let inst = net.perturb_arrays(&spec, &mut sample_rng(1, 0)).unwrap();
        assert_ne!(inst.xbar1, net.xbar1);
        assert_eq!(inst.scale1, net.scale1);
        assert_eq!(inst.scale2, net.scale2);
        // Perturbed hardware still classifies; logits move but stay finite.
        let t = inst.infer(&[0.5, 0.5]).unwrap();
        assert!(t.logits.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn evaluation_agrees_with_ideal_when_noiseless() {
        let model = hand_model();
        let net = compile(&model, &auto_options()).unwrap();
        let data = Dataset {
            features: vec![
                vec![0.1, 0.9],
                vec![0.9, 0.1],
                vec![0.5, 0.5],
                vec![0.2, 0.3],
            ],
            labels: vec![0, 1, 2, 0],
            class_names: vec!["a".into(), "b".into(), "c".into()],
        };
        let report = evaluate(&net, &data, &MismatchSpec::noiseless()).unwrap();
        assert_eq!(report.ideal_agreement, 1.0);
        assert_eq!(report.total, 4);
        let diag: usize = (0..3).map(|i| report.confusion[i][i]).sum();
        assert_eq!(diag, report.correct);
        // Deterministic under repetition.
        let again = evaluate(&net, &data, &MismatchSpec::noiseless()).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn energy_counts_every_cell_once_per_inference() {
        let net = compile(&hand_model(), &auto_options()).unwrap();
        let e = net.energy_per_inference().unwrap();
        assert_eq!(e.n_macs, (3 * 4 + 4 * 4) as u64);
        assert_relative_eq!(e.per_mac_fj, 66.4, max_relative = 1e-12);
    }
}
