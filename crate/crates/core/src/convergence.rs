//! Partial sums of the time series, "likely convergence" classification,
//! ratio-test radii and comparison of runs across truncations.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Component, Error, Result};
use crate::lattice::WaveIndex;
use crate::taylor::{SeriesStatus, TaylorTable};

/// First order of the stability window.
pub const WINDOW_START: usize = 40;
/// Highest order the window must reach.
pub const MIN_ORDERS: usize = 50;
/// Five significant figures: relative deviation from the final partial sum.
pub const STABILITY_TOLERANCE: f64 = 0.5e-5;
/// Six significant figures, for cross-truncation agreement.
pub const AGREEMENT_TOLERANCE: f64 = 0.5e-6;
/// Guards relative tests against exact zeros.
pub const ZERO_FLOOR: f64 = 1e-30;
/// Orders over which tail growth is measured.
pub const GROWTH_SPAN: usize = 10;
/// Cumulative growth over [`GROWTH_SPAN`] orders that signals divergence.
pub const GROWTH_FACTOR: f64 = 10.0;
/// Envelope width used for the growth test; spans one `++--` sign period.
pub const GROWTH_ENVELOPE: usize = 4;
/// Orders used by the ratio test.
pub const RATIO_SPAN: usize = 10;
/// Spread of consecutive ratios above which an estimate is unreliable.
pub const RATIO_SPREAD: f64 = 1.5;

/// `Sum(p) = Σ_{i<=p} C_i t^i` for one mode and component.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSumTrace {
    pub mode: WaveIndex,
    pub component: Component,
    pub t: f64,
    pub sums: Vec<Complex64>,
    /// The underlying series froze on overflow, or a sum went non-finite.
    pub overflow: bool,
}

impl PartialSumTrace {
    pub fn p_max(&self) -> usize {
        self.sums.len() - 1
    }

    pub fn final_value(&self) -> Complex64 {
        self.sums[self.sums.len() - 1]
    }

    /// Some partial sum is nonzero.
    pub fn is_active(&self) -> bool {
        self.sums.iter().any(|z| z.re != 0.0 || z.im != 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { sums: self.sums.iter().map(|z| z * s).collect(), ..self.clone() }
    }
}

/// Forward accumulation of every mode's partial sums at time `t`.
pub fn partial_sums(table: &TaylorTable, t: f64) -> Result<Vec<PartialSumTrace>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter { field: "t", reason: format!("{t} is not a nonnegative time") });
    }
    let lattice = table.lattice();
    let mut traces = Vec::with_capacity(2 * lattice.len());
    for (k, mode) in lattice.modes().enumerate() {
        for component in [Component::C, Component::D] {
            let mut sums = Vec::with_capacity(table.p_max() + 1);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut power = 1.0f64;
            for (p, slice) in table.orders().iter().enumerate() {
                if p > 0 {
                    power *= t;
                }
                let coef = match component {
                    Component::C => slice.c_slice()[k],
                    Component::D => slice.d_slice()[k],
                };
                acc += coef * power;
                sums.push(acc);
            }
            let overflow = table.overflowed() || !acc.re.is_finite() || !acc.im.is_finite();
            traces.push(PartialSumTrace { mode, component, t, sums, overflow });
        }
    }
    Ok(traces)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    LikelyConvergent,
    Nonconvergent,
    Indeterminate,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::LikelyConvergent => "LikelyConvergent",
            Classification::Nonconvergent => "Nonconvergent",
            Classification::Indeterminate => "Indeterminate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeVerdict {
    pub mode: WaveIndex,
    pub component: Component,
    pub classification: Classification,
    /// First order from which every later partial sum passes the
    /// five-figure test (only for likely-convergent traces).
    pub stable_from: Option<usize>,
    pub final_value: Complex64,
    pub initial_value: Complex64,
    pub active: bool,
}

fn part(z: Complex64, imaginary: bool) -> f64 {
    if imaginary {
        z.im
    } else {
        z.re
    }
}

fn within_window(x: f64, last: f64) -> bool {
    (x - last).abs() <= STABILITY_TOLERANCE * last.abs().max(ZERO_FLOOR)
}

fn stable_at(sums: &[Complex64], p: usize) -> bool {
    let last = sums[sums.len() - 1];
    within_window(sums[p].re, last.re) && within_window(sums[p].im, last.im)
}

/// Envelope `max |x(q)|` for `q` in the [`GROWTH_ENVELOPE`] orders ending at `p`.
fn envelope(sums: &[Complex64], p: usize, imaginary: bool) -> f64 {
    let lo = (p + 1).saturating_sub(GROWTH_ENVELOPE);
    sums[lo..=p].iter().map(|z| part(*z, imaginary).abs()).fold(0.0, f64::max)
}

fn tail_grows(sums: &[Complex64]) -> bool {
    let last = sums.len() - 1;
    if last < GROWTH_SPAN {
        return false;
    }
    [false, true].into_iter().any(|imaginary| {
        let then = envelope(sums, last - GROWTH_SPAN, imaginary);
        let now = envelope(sums, last, imaginary);
        now > 0.0 && now >= GROWTH_FACTOR * then
    })
}

pub fn classify_mode(trace: &PartialSumTrace) -> Result<ModeVerdict> {
    let verdict = |classification, stable_from| ModeVerdict {
        mode: trace.mode,
        component: trace.component,
        classification,
        stable_from,
        final_value: trace.final_value(),
        initial_value: trace.sums[0],
        active: trace.is_active(),
    };
    if trace.overflow {
        return Ok(verdict(Classification::Nonconvergent, None));
    }
    if trace.p_max() < MIN_ORDERS {
        return Err(Error::TraceTooShort { p_max: trace.p_max(), required: MIN_ORDERS });
    }
    let sums = &trace.sums;
    if (WINDOW_START..sums.len()).all(|p| stable_at(sums, p)) {
        let mut from = WINDOW_START;
        while from > 0 && stable_at(sums, from - 1) {
            from -= 1;
        }
        return Ok(verdict(Classification::LikelyConvergent, Some(from)));
    }
    if tail_grows(sums) {
        Ok(verdict(Classification::Nonconvergent, None))
    } else {
        Ok(verdict(Classification::Indeterminate, None))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunVerdict {
    pub classification: Classification,
    /// Active modes disagree between likely convergence and nonconvergence.
    pub anomaly: bool,
    pub convergent_modes: usize,
    pub nonconvergent_modes: usize,
    pub indeterminate_modes: usize,
}

/// Aggregates mode verdicts. Identically-zero traces count as convergent but
/// are left out of the all-or-nothing anomaly check.
pub fn classify_run(verdicts: &[ModeVerdict]) -> RunVerdict {
    let count = |c: Classification| verdicts.iter().filter(|v| v.classification == c).count();
    let (conv, nonconv, indet) = (
        count(Classification::LikelyConvergent),
        count(Classification::Nonconvergent),
        count(Classification::Indeterminate),
    );
    let classification = if nonconv > 0 {
        Classification::Nonconvergent
    } else if indet > 0 {
        Classification::Indeterminate
    } else {
        Classification::LikelyConvergent
    };
    let active_conv = verdicts.iter().any(|v| v.active && v.classification == Classification::LikelyConvergent);
    let active_nonconv = verdicts.iter().any(|v| v.active && v.classification == Classification::Nonconvergent);
    RunVerdict {
        classification,
        anomaly: active_conv && active_nonconv,
        convergent_modes: conv,
        nonconvergent_modes: nonconv,
        indeterminate_modes: indet,
    }
}

/// Ratio-test radius for one real coefficient sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartRadius {
    /// `+inf` when every usable ratio is unbounded (all-zero sequence).
    #[serde(with = "infinite_as_null")]
    pub radius: f64,
    pub reliable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub mode: WaveIndex,
    pub component: Component,
    /// From the real parts `a_p`.
    pub real: PartRadius,
    /// From the imaginary parts `b_p`.
    pub imag: PartRadius,
}

impl RadiusEstimate {
    pub fn reliable(&self) -> bool {
        self.real.reliable && self.imag.reliable
    }
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_some(x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len() / 2;
    if values.len() % 2 == 1 {
        values[k]
    } else {
        0.5 * (values[k - 1] + values[k])
    }
}

/// Median of `|a_p / a_{p+1}|` over the last [`RATIO_SPAN`] orders.
///
/// The estimate is unreliable when the ratios spread by more than
/// [`RATIO_SPREAD`] or when the signs in the window follow neither a constant
/// nor a strictly alternating pattern (`++--` and similar).
pub fn ratio_estimate(coefficients: &[f64]) -> PartRadius {
    let last = coefficients.len().saturating_sub(1);
    let start = last.saturating_sub(RATIO_SPAN);
    let window = &coefficients[start..];
    let mut ratios: Vec<f64> = window
        .windows(2)
        .filter(|w| w[1].abs() >= ZERO_FLOOR)
        .map(|w| (w[0] / w[1]).abs())
        .collect();
    if ratios.is_empty() {
        return PartRadius { radius: f64::INFINITY, reliable: true };
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let spread_ok = lo > 0.0 && hi <= RATIO_SPREAD * lo;
    let signs: Vec<bool> = window.iter().map(|x| x.is_sign_positive()).collect();
    let constant = signs.windows(2).all(|w| w[0] == w[1]);
    let alternating = signs.windows(2).all(|w| w[0] != w[1]);
    let has_zero = window.iter().any(|x| x.abs() < ZERO_FLOOR);
    PartRadius { radius: median(&mut ratios), reliable: spread_ok && !has_zero && (constant || alternating) }
}

pub fn ratio_test(table: &TaylorTable, mode: WaveIndex, component: Component) -> Result<RadiusEstimate> {
    if table.p_max() + 1 < RATIO_SPAN {
        return Err(Error::TraceTooShort { p_max: table.p_max(), required: RATIO_SPAN - 1 });
    }
    table.lattice().try_index(mode)?;
    let coefs: Vec<Complex64> = table.orders().iter().map(|s| s.get(mode, component)).collect();
    let re: Vec<f64> = coefs.iter().map(|z| z.re).collect();
    let im: Vec<f64> = coefs.iter().map(|z| z.im).collect();
    Ok(RadiusEstimate { mode, component, real: ratio_estimate(&re), imag: ratio_estimate(&im) })
}

/// Everything kept about one `(N, IC, α, t, P_max)` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub bound: usize,
    pub alpha: f64,
    pub t: f64,
    pub p_max: usize,
    pub series: SeriesStatus,
    pub verdict: RunVerdict,
    pub modes: Vec<ModeVerdict>,
    /// Ratio-test estimates for active modes.
    pub radii: Vec<RadiusEstimate>,
}

impl RunSummary {
    pub fn mode(&self, mode: WaveIndex, component: Component) -> Option<&ModeVerdict> {
        self.modes.iter().find(|v| v.mode == mode && v.component == component)
    }
}

/// Classifies every trace of `table` at time `t`. `p_max` is the order the
/// run was asked for, which exceeds `table.p_max()` after an overflow.
pub fn summarize_run(table: &TaylorTable, t: f64, p_max: usize) -> Result<(RunSummary, Vec<PartialSumTrace>)> {
    let traces = partial_sums(table, t)?;
    let modes = traces.par_iter().map(classify_mode).collect::<Result<Vec<_>>>()?;
    let verdict = classify_run(&modes);
    let radii = if table.p_max() + 1 >= RATIO_SPAN {
        traces
            .iter()
            .filter(|tr| tr.is_active())
            .map(|tr| ratio_test(table, tr.mode, tr.component))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let summary = RunSummary {
        bound: table.lattice().bound(),
        alpha: table.alpha(),
        t,
        p_max,
        series: table.status(),
        verdict,
        modes,
        radii,
    };
    Ok((summary, traces))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationComparison {
    pub small_bound: usize,
    pub large_bound: usize,
    pub small_verdict: Classification,
    pub large_verdict: Classification,
    /// Traces on the common lattice where both runs are likely convergent.
    pub compared_traces: usize,
    /// `max |x_small - x_large| / max(|x_large|, floor)` over compared traces.
    pub max_rel_disagreement: Option<f64>,
    pub worst_mode: Option<(WaveIndex, Component)>,
    /// `None` when no traces were compared.
    pub agrees_to_six_figures: Option<bool>,
    pub monotonicity_violations: Vec<String>,
}

impl TruncationComparison {
    pub fn monotone(&self) -> bool {
        self.monotonicity_violations.is_empty()
    }
}

pub fn compare_truncations(a: &RunSummary, b: &RunSummary) -> Result<TruncationComparison> {
    if a.bound == b.bound {
        return Err(Error::Incomparable(format!("both runs use N = {}", a.bound)));
    }
    if a.alpha != b.alpha || a.t != b.t || a.p_max != b.p_max {
        return Err(Error::Incomparable(format!(
            "configuration differs: alpha {} vs {}, t {} vs {}, P_max {} vs {}",
            a.alpha, b.alpha, a.t, b.t, a.p_max, b.p_max
        )));
    }
    let (small, large) = if a.bound < b.bound { (a, b) } else { (b, a) };
    let small_bound = small.bound as u32;

    for lv in &large.modes {
        let inside = lv.mode.chebyshev_radius() <= small_bound;
        let same = match small.mode(lv.mode, lv.component) {
            Some(sv) => sv.initial_value == lv.initial_value,
            None => !inside && lv.initial_value == Complex64::new(0.0, 0.0),
        };
        if !same {
            return Err(Error::Incomparable(format!(
                "initial conditions differ at ({}, {}) {}",
                lv.mode.n, lv.mode.m, lv.component
            )));
        }
    }

    let mut compared = 0;
    let mut worst: Option<(f64, WaveIndex, Component)> = None;
    for sv in &small.modes {
        let Some(lv) = large.mode(sv.mode, sv.component) else { continue };
        if sv.classification != Classification::LikelyConvergent
            || lv.classification != Classification::LikelyConvergent
        {
            continue;
        }
        compared += 1;
        let rel = (sv.final_value - lv.final_value).norm() / lv.final_value.norm().max(ZERO_FLOOR);
        if worst.map_or(true, |(w, _, _)| rel > w) {
            worst = Some((rel, sv.mode, sv.component));
        }
    }

    let (sc, lc) = (small.verdict.classification, large.verdict.classification);
    let mut violations = Vec::new();
    if lc == Classification::LikelyConvergent && sc != Classification::LikelyConvergent {
        violations.push(format!("likely convergent at N = {} but {sc} at smaller N = {}", large.bound, small.bound));
    }
    if sc == Classification::Nonconvergent && lc != Classification::Nonconvergent {
        violations.push(format!("nonconvergent at N = {} but {lc} at larger N = {}", small.bound, large.bound));
    }

    Ok(TruncationComparison {
        small_bound: small.bound,
        large_bound: large.bound,
        small_verdict: sc,
        large_verdict: lc,
        compared_traces: compared,
        max_rel_disagreement: worst.map(|w| w.0),
        worst_mode: worst.map(|w| (w.1, w.2)),
        agrees_to_six_figures: worst.map(|w| w.0 <= AGREEMENT_TOLERANCE),
        monotonicity_violations: violations,
    })
}

/// Writes active traces as `mode_n,mode_m,component,p,sum_re,sum_im`.
pub fn write_traces_csv<W: Write>(traces: &[PartialSumTrace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mode_n", "mode_m", "component", "p", "sum_re", "sum_im"])?;
    for trace in traces.iter().filter(|t| t.is_active()) {
        let (n, m, c) = (trace.mode.n.to_string(), trace.mode.m.to_string(), trace.component.to_string());
        for (p, z) in trace.sums.iter().enumerate() {
            w.write_record([&n, &m, &c, &p.to_string(), &format!("{:e}", z.re), &format!("{:e}", z.im)])?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
