//! Numeric summaries of switching behavior and tracking quality.
//!
//! Switch metrics quantify what happens at each handoff: the jump in the
//! control signal across the switch instant, how far each stage output is
//! pushed from where it sat, and how long it takes to come back. Tracking
//! metrics score one epoch of one signal against a constant reference.

use crate::error::{Error, Result};
use crate::trace::Trace;

/// Default post-switch observation window in seconds.
pub const DEFAULT_PEAK_WINDOW: f64 = 5.0;

/// Default settling band as a fraction of the pre-switch level.
pub const DEFAULT_SETTLING_BAND: f64 = 0.02;

/// Slack used when comparing sample times against interval endpoints.
const TIME_EPS: f64 = 1e-9;

/// A column of a [`Trace`] that metrics can read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceColumn {
    /// The control signal y_c.
    ControlSignal,
    /// A plant stage output, 0-based.
    StageOutput(usize),
    /// A path output, 0-based.
    PathOutput(usize),
}

fn column_values(trace: &Trace, column: TraceColumn) -> Result<&[f64]> {
    match column {
        TraceColumn::ControlSignal => Ok(&trace.y_c),
        TraceColumn::StageOutput(j) => {
            trace.y.get(j).map(Vec::as_slice).ok_or_else(|| {
                Error::Config(format!("trace has no stage output column y{}", j + 1))
            })
        }
        TraceColumn::PathOutput(i) => {
            trace.x_c.get(i).map(Vec::as_slice).ok_or_else(|| {
                Error::Config(format!("trace has no path output column x_c{}", i + 1))
            })
        }
    }
}

/// What one switch instant did to the loop.
#[derive(Clone, Debug)]
pub struct SwitchReport {
    /// The switch instant this report covers.
    pub switch_time: f64,
    /// |y_c just after - y_c just before|, from the recorded samples
    /// straddling the instant.
    pub jump: f64,
    /// Mean of each stage output over the second before the switch.
    pub pre_switch_mean: Vec<f64>,
    /// Largest |output - pre-switch mean| per stage within the window.
    pub peak_deviation: Vec<f64>,
    /// Seconds after the switch until each stage output re-enters the band
    /// around its pre-switch mean and stays there for the rest of the epoch;
    /// None if it never does.
    pub settling_time: Vec<Option<f64>>,
}

/// Computes a [`SwitchReport`] for every instant in `switch_times`.
///
/// Each instant needs a second of recorded history before it; the epoch for
/// settling purposes runs to the next switch instant or the end of the
/// trace. `window` bounds the peak search, `band_fraction` scales the
/// settling band.
pub fn switch_metrics(
    trace: &Trace,
    switch_times: &[f64],
    window: f64,
    band_fraction: f64,
) -> Result<Vec<SwitchReport>> {
    if !window.is_finite() || window <= 0.0 {
        return Err(Error::Config(format!(
            "peak window must be positive, got {window}"
        )));
    }
    if !band_fraction.is_finite() || band_fraction <= 0.0 {
        return Err(Error::Config(format!(
            "settling band fraction must be positive, got {band_fraction}"
        )));
    }
    let times = &trace.times;
    let mut reports = Vec::with_capacity(switch_times.len());
    for (k, &t_s) in switch_times.iter().enumerate() {
        let i_s = times.partition_point(|&t| t < t_s - TIME_EPS);
        if i_s == 0 || i_s >= times.len() {
            return Err(Error::Config(format!(
                "switch instant {t_s} is not inside the recorded time range"
            )));
        }
        let jump = (trace.y_c[i_s] - trace.y_c[i_s - 1]).abs();

        let pre_start = times.partition_point(|&t| t < t_s - 1.0 - TIME_EPS);
        if t_s < times[0] + 1.0 - TIME_EPS || pre_start >= i_s {
            return Err(Error::Config(format!(
                "switch instant {t_s} needs one second of recorded history before it"
            )));
        }
        let epoch_end = switch_times
            .get(k + 1)
            .copied()
            .unwrap_or(f64::INFINITY)
            .min(*times.last().unwrap());
        let i_win = times.partition_point(|&t| t <= t_s + window + TIME_EPS);
        let i_epoch = times.partition_point(|&t| t <= epoch_end + TIME_EPS);

        let mut pre_switch_mean = Vec::with_capacity(trace.y.len());
        let mut peak_deviation = Vec::with_capacity(trace.y.len());
        let mut settling_time = Vec::with_capacity(trace.y.len());
        for column in &trace.y {
            let pre = &column[pre_start..i_s];
            let mean = pre.iter().sum::<f64>() / pre.len() as f64;
            let peak = column[i_s..i_win]
                .iter()
                .map(|y| (y - mean).abs())
                .fold(0.0, f64::max);
            let band = band_fraction * mean.abs();
            // Walk the epoch backwards: the settling index is just past the
            // last out-of-band sample.
            let mut settle_idx = i_s;
            for idx in (i_s..i_epoch).rev() {
                if (column[idx] - mean).abs() > band {
                    settle_idx = idx + 1;
                    break;
                }
            }
            let settled = settle_idx < i_epoch;
            pre_switch_mean.push(mean);
            peak_deviation.push(peak);
            settling_time.push(settled.then(|| times[settle_idx] - t_s));
        }
        reports.push(SwitchReport {
            switch_time: t_s,
            jump,
            pre_switch_mean,
            peak_deviation,
            settling_time,
        });
    }
    Ok(reports)
}

/// Tracking quality of one signal over one epoch.
#[derive(Clone, Copy, Debug)]
pub struct TrackingReport {
    /// Integral of |reference - y| dt, trapezoidal.
    pub iae: f64,
    /// Integral of (t - epoch start) |reference - y| dt, trapezoidal.
    pub itae: f64,
    /// Mean |reference - y| over the final fifth of the epoch.
    pub steady_state_error: f64,
    /// Mean squared residual of the signal about its least-squares line over
    /// the final half of the epoch. Zero for anything that decays to a ramp;
    /// positive under sustained oscillation.
    pub oscillation_energy: f64,
}

/// Scores `column` against a constant `reference` over [t0, t1).
///
/// The interval is half open so adjacent epochs share no samples; pad t1
/// past the final sample to include it (see [`epochs`]).
pub fn tracking_metrics(
    trace: &Trace,
    t0: f64,
    t1: f64,
    reference: f64,
    column: TraceColumn,
) -> Result<TrackingReport> {
    if !t0.is_finite() || !t1.is_finite() || t1 <= t0 {
        return Err(Error::Config(format!("empty epoch [{t0}, {t1})")));
    }
    let values = column_values(trace, column)?;
    let times = &trace.times;
    let start = times.partition_point(|&t| t < t0 - TIME_EPS);
    let end = times.partition_point(|&t| t < t1 - TIME_EPS);
    if end - start < 2 {
        return Err(Error::Config(format!(
            "epoch [{t0}, {t1}) contains fewer than two samples"
        )));
    }
    let t = &times[start..end];
    let y = &values[start..end];

    let mut iae = 0.0;
    let mut itae = 0.0;
    for k in 0..t.len() - 1 {
        let h = t[k + 1] - t[k];
        let e0 = (reference - y[k]).abs();
        let e1 = (reference - y[k + 1]).abs();
        iae += 0.5 * h * (e0 + e1);
        itae += 0.5 * h * ((t[k] - t0) * e0 + (t[k + 1] - t0) * e1);
    }

    let span = t[t.len() - 1] - t0;
    let tail_start = t.partition_point(|&tk| tk < t0 + 0.8 * span - TIME_EPS);
    let tail = &y[tail_start..];
    let steady_state_error =
        tail.iter().map(|v| (reference - v).abs()).sum::<f64>() / tail.len() as f64;

    let half_start = t.partition_point(|&tk| tk < t0 + 0.5 * span - TIME_EPS);
    let th = &t[half_start..];
    let yh = &y[half_start..];
    let oscillation_energy = if th.len() < 2 {
        0.0
    } else {
        let n = th.len() as f64;
        let t_mean = th.iter().sum::<f64>() / n;
        let y_mean = yh.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut var = 0.0;
        for (tk, yk) in th.iter().zip(yh) {
            cov += (tk - t_mean) * (yk - y_mean);
            var += (tk - t_mean) * (tk - t_mean);
        }
        let slope = if var > 0.0 { cov / var } else { 0.0 };
        yh.iter()
            .zip(th)
            .map(|(yk, tk)| {
                let fit = y_mean + slope * (tk - t_mean);
                (yk - fit) * (yk - fit)
            })
            .sum::<f64>()
            / n
    };

    Ok(TrackingReport {
        iae,
        itae,
        steady_state_error,
        oscillation_energy,
    })
}

/// Splits a trace into epochs delimited by the given switch instants.
///
/// Returns half-open [start, end) pairs covering the whole trace; the final
/// end lies one grid spacing past the last sample so that slicing with
/// [`tracking_metrics`] includes it.
pub fn epochs(trace: &Trace, switch_times: &[f64]) -> Vec<(f64, f64)> {
    let first = *trace.times.first().unwrap_or(&0.0);
    let last = *trace.times.last().unwrap_or(&0.0);
    let pad = if trace.times.len() >= 2 {
        trace.times[trace.times.len() - 1] - trace.times[trace.times.len() - 2]
    } else {
        1.0
    };
    let mut starts = vec![first];
    for &t_s in switch_times {
        if t_s > first + TIME_EPS && t_s < last - TIME_EPS {
            starts.push(t_s);
        }
    }
    let mut out = Vec::with_capacity(starts.len());
    for (i, &s) in starts.iter().enumerate() {
        let e = starts.get(i + 1).copied().unwrap_or(last + pad);
        out.push((s, e));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// A trace with one path and one stage on a uniform grid.
    fn synthetic(dt: f64, y: Vec<f64>, y_c: Vec<f64>) -> Trace {
        let n = y.len();
        assert_eq!(y_c.len(), n);
        Trace {
            times: (0..n).map(|k| k as f64 * dt).collect(),
            y_c: y_c.clone(),
            x_c: vec![y_c],
            y: vec![y],
            w: vec![1.0; n],
            u: vec![1.0; n],
            e: vec![vec![0.0; n]],
        }
    }

    #[test]
    fn perfect_tracking_scores_zero() {
        let trace = synthetic(0.1, vec![5.0; 101], vec![5.0; 101]);
        let r = tracking_metrics(&trace, 0.0, 10.01, 5.0, TraceColumn::StageOutput(0)).unwrap();
        assert_eq!(r.iae, 0.0);
        assert_eq!(r.itae, 0.0);
        assert_eq!(r.steady_state_error, 0.0);
        assert_eq!(r.oscillation_energy, 0.0);
    }

    #[test]
    fn constant_offset_integrates_linearly() {
        // y = ref + 1 over 10 s: IAE = 10, ITAE = 50, both exact for the
        // trapezoid rule on constants and ramps.
        let trace = synthetic(0.1, vec![6.0; 101], vec![6.0; 101]);
        let r = tracking_metrics(&trace, 0.0, 10.01, 5.0, TraceColumn::StageOutput(0)).unwrap();
        assert_relative_eq!(r.iae, 10.0, max_relative = 1e-12);
        assert_relative_eq!(r.itae, 50.0, max_relative = 1e-12);
        assert_relative_eq!(r.steady_state_error, 1.0);
        assert!(r.oscillation_energy < 1e-20);
    }

    #[test]
    fn ramps_have_no_oscillation_energy() {
        let y: Vec<f64> = (0..101).map(|k| 3.0 + 0.25 * k as f64).collect();
        let trace = synthetic(0.1, y.clone(), y);
        let r = tracking_metrics(&trace, 0.0, 10.01, 0.0, TraceColumn::StageOutput(0)).unwrap();
        assert!(r.oscillation_energy < 1e-18, "{}", r.oscillation_energy);
    }

    #[test]
    fn sine_oscillation_energy_is_half_amplitude_squared() {
        let dt = 0.01;
        let y: Vec<f64> = (0..=4000)
            .map(|k| 2.0 * (2.0 * std::f64::consts::PI * k as f64 * dt).sin())
            .collect();
        let trace = synthetic(dt, y.clone(), y);
        let r = tracking_metrics(&trace, 0.0, 40.01, 0.0, TraceColumn::StageOutput(0)).unwrap();
        // Mean square of A sin over whole periods is A^2/2 = 2. The detrend
        // line soaks up a little of it (a sine is not orthogonal to a ramp on
        // a finite window), which at 20 periods is a 0.2% bias.
        assert_relative_eq!(r.oscillation_energy, 2.0, max_relative = 0.01);
        assert_relative_eq!(
            r.oscillation_energy,
            1.9959689309712083,
            max_relative = 1e-9
        );
    }

    #[test]
    fn epoch_selection_is_half_open() {
        let trace = synthetic(1.0, (0..11).map(f64::from).collect(), vec![0.0; 11]);
        // [0, 5) must not see the sample at t = 5.
        let r = tracking_metrics(&trace, 0.0, 5.0, 0.0, TraceColumn::StageOutput(0)).unwrap();
        assert_relative_eq!(r.iae, 8.0); // trapezoid of 0,1,2,3,4
        let r = tracking_metrics(&trace, 5.0, 11.0, 0.0, TraceColumn::StageOutput(0)).unwrap();
        assert_relative_eq!(r.iae, 37.5); // trapezoid of 5..=10
    }

    #[test]
    fn rejects_degenerate_epochs() {
        let trace = synthetic(1.0, vec![0.0; 11], vec![0.0; 11]);
        assert!(tracking_metrics(&trace, 5.0, 5.0, 0.0, TraceColumn::StageOutput(0)).is_err());
        assert!(tracking_metrics(&trace, 9.5, 10.2, 0.0, TraceColumn::StageOutput(0)).is_err());
        assert!(tracking_metrics(&trace, 0.0, 5.0, 0.0, TraceColumn::StageOutput(3)).is_err());
    }

    #[test]
    fn epochs_partition_the_trace() {
        let trace = synthetic(0.5, vec![0.0; 21], vec![0.0; 21]);
        let eps = epochs(&trace, &[3.0, 7.0]);
        assert_eq!(eps, vec![(0.0, 3.0), (3.0, 7.0), (7.0, 10.5)]);
        // Out-of-range switch instants are dropped.
        let eps = epochs(&trace, &[0.0, 3.0, 10.0, 25.0]);
        assert_eq!(eps.len(), 2);
    }

    fn step_trace() -> Trace {
        // y_c sits at 600, drops to 450 at t = 5; the stage output dips to
        // 90 and recovers to 100 by t = 7.
        let dt = 0.1;
        let n = 101;
        let mut y_c = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for k in 0..n {
            let t = k as f64 * dt;
            y_c.push(if t < 5.0 { 600.0 } else { 450.0 });
            y.push(if t < 5.0 {
                100.0
            } else if t < 7.0 {
                90.0
            } else {
                100.0
            });
        }
        synthetic(dt, y, y_c)
    }

    #[test]
    fn switch_report_measures_the_jump_and_peak() {
        let reports = switch_metrics(&step_trace(), &[5.0], 3.0, 0.02).unwrap();
        assert_eq!(reports.len(), 1);
        let r = &reports[0];
        assert_relative_eq!(r.jump, 150.0);
        assert_relative_eq!(r.pre_switch_mean[0], 100.0);
        assert_relative_eq!(r.peak_deviation[0], 10.0);
        // Returns into the 2% band at t = 7 => settling time 2 s.
        assert_relative_eq!(r.settling_time[0].unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn settling_is_none_when_the_output_stays_out() {
        let dt = 0.1;
        let n = 101;
        let y: Vec<f64> = (0..n)
            .map(|k| if k as f64 * dt < 5.0 { 100.0 } else { 50.0 })
            .collect();
        let trace = synthetic(dt, y, vec![0.0; n]);
        let reports = switch_metrics(&trace, &[5.0], 3.0, 0.02).unwrap();
        assert!(reports[0].settling_time[0].is_none());
        assert_relative_eq!(reports[0].peak_deviation[0], 50.0);
    }

    #[test]
    fn switch_metrics_validate_inputs() {
        let trace = step_trace();
        assert!(
            switch_metrics(&trace, &[0.05], 3.0, 0.02).is_err(),
            "no history"
        );
        assert!(
            switch_metrics(&trace, &[20.0], 3.0, 0.02).is_err(),
            "outside"
        );
        assert!(switch_metrics(&trace, &[5.0], -1.0, 0.02).is_err());
        assert!(switch_metrics(&trace, &[5.0], 3.0, 0.0).is_err());
    }
}
