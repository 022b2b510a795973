//! Device mismatch and Monte Carlo aggregation.
//!
//! Mismatch is modeled as multiplicative Gaussian perturbation of a nominal
//! value: `nominal · (1 + N(0, rel_sigma))`. Every Monte Carlo sample runs on
//! its own RNG stream derived from `(seed, sample index)`, so results are
//! deterministic, independent of evaluation order, and reproducible sample
//! by sample.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::crossbar::{CrossbarConfig, PulseTrain};
use crate::error::{Error, Result};
use crate::vtc::VtcParams;

/// Relative mismatch magnitudes, plus the seed all derived streams start
/// from.
///
/// The default carries the measured single-converter delay spread (9.2%
/// relative) and leaves array-side mismatch off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MismatchSpec {
    /// Relative sigma of converter delay mismatch. Default: 0.092.
    pub vtc_delay_rel_sigma: f64,
    /// Relative sigma of cell weight (capacitance ratio) mismatch. Default: 0.
    pub xeq_rel_sigma: f64,
    /// Relative sigma of transconductance mismatch. Default: 0.
    pub gm_rel_sigma: f64,
    /// Base seed for all derived sample streams. Default: 42.
    pub seed: u64,
}

impl Default for MismatchSpec {
    fn default() -> Self {
        MismatchSpec {
            vtc_delay_rel_sigma: 0.092,
            xeq_rel_sigma: 0.0,
            gm_rel_sigma: 0.0,
            seed: 42,
        }
    }
}

impl MismatchSpec {
    /// All sigmas zero: the spec that perturbs nothing.
    pub fn noiseless() -> Self {
        MismatchSpec {
            vtc_delay_rel_sigma: 0.0,
            xeq_rel_sigma: 0.0,
            gm_rel_sigma: 0.0,
            seed: 42,
        }
    }

    /// True when every sigma is zero.
    pub fn is_noiseless(&self) -> bool {
        self.vtc_delay_rel_sigma == 0.0 && self.xeq_rel_sigma == 0.0 && self.gm_rel_sigma == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("vtc_delay_rel_sigma", self.vtc_delay_rel_sigma),
            ("xeq_rel_sigma", self.xeq_rel_sigma),
            ("gm_rel_sigma", self.gm_rel_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// RNG for one Monte Carlo sample: stream `stream` of the generator seeded
/// with `seed`. Distinct streams are independent, so samples can be drawn in
/// any order — or skipped — without affecting each other.
pub fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One multiplicative mismatch draw: `nominal · (1 + N(0, rel_sigma))`,
/// clamped at zero (with a warning — a clamp means the linear mismatch
/// model is being pushed past where it is physical). A zero sigma returns
/// the nominal without consuming randomness.
///
/// # Panics
///
/// Panics if `rel_sigma` is negative or non-finite; validate specs before
/// drawing from them.
pub fn perturb(nominal: f64, rel_sigma: f64, rng: &mut ChaCha8Rng) -> f64 {
    assert!(
        rel_sigma.is_finite() && rel_sigma >= 0.0,
        "rel_sigma must be finite and non-negative, got {rel_sigma}"
    );
    if rel_sigma == 0.0 {
        return nominal;
    }
    let normal = Normal::new(0.0, rel_sigma).expect("sigma checked above");
    let value = nominal * (1.0 + normal.sample(rng));
    if value < 0.0 {
        log::warn!(
            "mismatch draw went negative ({value:e} from nominal {nominal:e} at \
             rel_sigma {rel_sigma}); clamping to zero"
        );
        return 0.0;
    }
    value
}

/// Summary statistics of a Monte Carlo batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McStats {
    pub mean: f64,
    /// Sample standard deviation (n − 1 normalization).
    pub std: f64,
    /// Spread relative to the mean magnitude: `100 · std / |mean|`.
    pub variation_pct: f64,
    pub n_samples: usize,
}

impl McStats {
    /// Computes statistics over raw samples. A single sample has zero spread
    /// by definition.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::input("samples", "need at least one sample"));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let std = if samples.len() < 2 {
            0.0
        } else {
            let ss = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>();
            (ss / (n - 1.0)).sqrt()
        };
        let variation_pct = if mean == 0.0 {
            if std == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            100.0 * std / mean.abs()
        };
        Ok(McStats {
            mean,
            std,
            variation_pct,
            n_samples: samples.len(),
        })
    }
}

/// Runs `run` on `n` independently seeded RNG streams and returns the raw
/// scalars, sample `i` drawn from stream `i`. Deterministic given
/// `(spec.seed, n)`. If any sample fails, the whole run fails with the list
/// of failing streams.
pub fn monte_carlo_samples<F>(run: F, n: usize, spec: &MismatchSpec) -> Result<Vec<f64>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64>,
{
    spec.validate()?;
    if n < 2 {
        return Err(Error::input(
            "n",
            "spread statistics need at least two samples",
        ));
    }
    let mut samples = Vec::with_capacity(n);
    let mut failures = Vec::new();
    for i in 0..n {
        let mut rng = sample_rng(spec.seed, i as u64);
        match run(&mut rng) {
            Ok(v) => samples.push(v),
            Err(e) => failures.push((i as u64, e.to_string())),
        }
    }
    if !failures.is_empty() {
        return Err(Error::MonteCarlo { failures });
    }
    Ok(samples)
}

/// [`monte_carlo_samples`] aggregated into summary statistics.
pub fn monte_carlo<F>(run: F, n: usize, spec: &MismatchSpec) -> Result<McStats>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64>,
{
    McStats::from_samples(&monte_carlo_samples(run, n, spec)?)
}

/// Monte Carlo over a cascade of `n_stages` converters at input `v_in`:
/// each stage's delay is drawn independently, so stage noise averages and
/// the relative spread shrinks like `1/sqrt(n_stages)`.
pub fn cascade_delay_mc(
    v_in: f64,
    n_stages: u32,
    vtc: &VtcParams,
    n: usize,
    spec: &MismatchSpec,
) -> Result<McStats> {
    if n_stages == 0 {
        return Err(Error::input("n_stages", "cascade needs at least one stage"));
    }
    vtc.validate()?;
    let nominal = vtc.delay(v_in)?;
    monte_carlo(
        |rng| {
            let mut total = 0.0;
            for _ in 0..n_stages {
                total += perturb(nominal, spec.vtc_delay_rel_sigma, rng);
            }
            Ok(total)
        },
        n,
        spec,
    )
}

/// Cascade statistics for each requested stage count.
pub fn cascade_variation_table(
    v_in: f64,
    stages: &[u32],
    vtc: &VtcParams,
    n: usize,
    spec: &MismatchSpec,
) -> Result<Vec<McStats>> {
    if stages.is_empty() {
        return Err(Error::input("stages", "need at least one stage count"));
    }
    stages
        .iter()
        .map(|&s| cascade_delay_mc(v_in, s, vtc, n, spec))
        .collect()
}

/// An equal-width histogram of Monte Carlo samples, in the shape plotting
/// tools expect: `edges` has one more entry than `counts`, and the last bin
/// is closed on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Bins samples into `n_bins` equal-width bins spanning their range. A
/// degenerate (all-equal) sample set gets one token-width bin around the
/// value.
pub fn histogram(samples: &[f64], n_bins: usize) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::input("samples", "need at least one sample"));
    }
    if n_bins == 0 {
        return Err(Error::input("n_bins", "need at least one bin"));
    }
    if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
        return Err(Error::input("samples", format!("non-finite sample {bad}")));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in samples {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        let pad = (lo.abs() * 1e-6).max(1e-12);
        lo -= pad;
        hi += pad;
    }
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0u64; n_bins];
    for &v in samples {
        let idx = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// One mismatched instance of an array: every cell's weight drawn with
/// `xeq_rel_sigma` (clamped to stay a valid ratio), and the shared transfer
/// scaled by one `gm_rel_sigma` draw. The transfer draw is array-wide
/// because the model is shared; per-device spread rides on the weights.
pub fn perturb_crossbar(
    cfg: &CrossbarConfig,
    spec: &MismatchSpec,
    rng: &mut ChaCha8Rng,
) -> Result<CrossbarConfig> {
    spec.validate()?;
    cfg.validate()?;
    let mut noisy = cfg.clone();
    if spec.xeq_rel_sigma > 0.0 {
        for row in &mut noisy.cells {
            for cell in row.iter_mut() {
                let x = cell.x_eq()?;
                let drawn = perturb(x, spec.xeq_rel_sigma, rng).clamp(1e-6, 1.0 - 1e-6);
                *cell = crate::cell::CellConfig {
                    c_c: crate::cell::capacitance_for_weight(drawn, cell.c_b, cell.c_g)?,
                    ..*cell
                };
            }
        }
    }
    if spec.gm_rel_sigma > 0.0 {
        let scale = perturb(1.0, spec.gm_rel_sigma, rng);
        noisy.fet.g_m *= scale;
        noisy.fet.i_off *= scale;
        noisy.fet.i_sat *= scale;
    }
    Ok(noisy)
}

/// One mismatched conversion of a pulse train: every width drawn with
/// `vtc_delay_rel_sigma` — each row has its own converter — then truncated
/// by the clock window, which is what the gating logic does physically.
pub fn perturb_pulses(
    train: &PulseTrain,
    spec: &MismatchSpec,
    clk_high: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PulseTrain> {
    spec.validate()?;
    if !(clk_high.is_finite() && clk_high > 0.0) {
        return Err(Error::param(
            "clk_high",
            format!("must be positive, got {clk_high:e}"),
        ));
    }
    let widths = train
        .widths
        .iter()
        .map(|&w| perturb(w, spec.vtc_delay_rel_sigma, rng).min(clk_high))
        .collect();
    Ok(PulseTrain {
        widths,
        amplitude: train.amplitude,
    })
}
