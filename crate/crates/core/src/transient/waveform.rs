//! Piecewise-linear terminal voltage waveforms.

use serde::{Deserialize, Serialize};

use crate::error::SolverError;

/// One linear ramp (or hold when `v_start == v_end`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// s
    pub duration: f64,
    /// V
    pub v_start: f64,
    /// V
    pub v_end: f64,
    pub label: String,
}

impl Segment {
    pub fn voltage_at(&self, tau: f64) -> f64 {
        let f = (tau / self.duration).clamp(0.0, 1.0);
        self.v_start + (self.v_end - self.v_start) * f
    }
}

/// A continuous sequence of segments starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Waveform {
    pub segments: Vec<Segment>,
}

impl Waveform {
    pub fn builder(v0: f64) -> WaveformBuilder {
        WaveformBuilder {
            v: v0,
            segments: Vec::new(),
        }
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn initial_voltage(&self) -> f64 {
        self.segments.first().map_or(0.0, |s| s.v_start)
    }

    /// Voltage at absolute time `t`, held at the final value past the end.
    pub fn voltage_at(&self, t: f64) -> f64 {
        let mut t0 = 0.0;
        for s in &self.segments {
            if t <= t0 + s.duration {
                return s.voltage_at(t - t0);
            }
            t0 += s.duration;
        }
        self.segments.last().map_or(0.0, |s| s.v_end)
    }

    /// Checks durations and continuity between segments.
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.segments.is_empty() {
            return Err(SolverError::Waveform("waveform has no segments".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return Err(SolverError::Waveform(format!(
                    "segment {i} (`{}`) has non-positive duration {}",
                    s.label, s.duration
                )));
            }
            if !(s.v_start.is_finite() && s.v_end.is_finite()) {
                return Err(SolverError::Waveform(format!(
                    "segment {i} (`{}`) has a non-finite voltage",
                    s.label
                )));
            }
        }
        for (i, w) in self.segments.windows(2).enumerate() {
            if (w[0].v_end - w[1].v_start).abs() > 1e-12 {
                return Err(SolverError::Waveform(format!(
                    "discontinuity between segments {i} and {}: {} V -> {} V",
                    i + 1,
                    w[0].v_end,
                    w[1].v_start
                )));
            }
        }
        Ok(())
    }

    /// Symmetric triangle 0 → +amp → −amp → 0 repeated `cycles` times.
    pub fn triangle(amplitude: f64, period: f64, cycles: usize) -> Self {
        let mut b = Self::builder(0.0);
        for c in 0..cycles {
            b = b
                .ramp_to(amplitude, period / 4.0, &format!("cycle{c}_up"))
                .ramp_to(-amplitude, period / 2.0, &format!("cycle{c}_down"))
                .ramp_to(0.0, period / 4.0, &format!("cycle{c}_return"));
        }
        b.build()
    }

    /// Trapezoidal pulse from 0 V with equal rise and fall times.
    pub fn pulse(amplitude: f64, width: f64, edge: f64) -> Self {
        Self::builder(0.0)
            .ramp_to(amplitude, edge, "rise")
            .hold(width, "plateau")
            .ramp_to(0.0, edge, "fall")
            .build()
    }
}

/// Fluent constructor for continuous waveforms.
#[derive(Debug, Clone)]
pub struct WaveformBuilder {
    v: f64,
    segments: Vec<Segment>,
}

impl WaveformBuilder {
    pub fn ramp_to(mut self, v_end: f64, duration: f64, label: &str) -> Self {
        self.segments.push(Segment {
            duration,
            v_start: self.v,
            v_end,
            label: label.to_string(),
        });
        self.v = v_end;
        self
    }

    pub fn hold(self, duration: f64, label: &str) -> Self {
        let v = self.v;
        self.ramp_to(v, duration, label)
    }

    pub fn build(self) -> Waveform {
        Waveform {
            segments: self.segments,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_shape() {
        let w = Waveform::triangle(2.0, 1e-3, 2);
        w.validate().unwrap();
        assert!((w.duration() - 2e-3).abs() < 1e-15);
        assert!((w.voltage_at(0.25e-3) - 2.0).abs() < 1e-12);
        assert!((w.voltage_at(0.75e-3) + 2.0).abs() < 1e-12);
        assert!(w.voltage_at(1e-3).abs() < 1e-12);
    }

    #[test]
    fn rejects_discontinuity() {
        let mut w = Waveform::pulse(1.0, 1e-6, 1e-8);
        w.segments[1].v_start = 0.5;
        assert!(w.validate().is_err());
    }

    #[test]
    fn rejects_zero_duration() {
        let w = Waveform::builder(0.0).ramp_to(1.0, 0.0, "bad").build();
        assert!(w.validate().is_err());
    }
}
