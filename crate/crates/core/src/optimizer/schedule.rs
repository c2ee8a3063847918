use crate::error::{invalid, Result};

/// Pseudo-time schedule of target void fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSchedule {
    pub vol0: f64,
    pub vol_final: f64,
    pub nsteps: usize,
    /// Curvature of the exponential schedule; 0 gives equal increments.
    pub k: f64,
}

impl TimeSchedule {
    pub fn new(vol0: f64, vol_final: f64, nsteps: usize, k: f64) -> Result<Self> {
        let s = Self {
            vol0,
            vol_final,
            nsteps,
            k,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nsteps == 0 {
            return invalid("nsteps must be positive");
        }
        if !(0.0..1.0).contains(&self.vol0) {
            return invalid(format!("vol0 must lie in [0, 1), got {}", self.vol0));
        }
        if !(self.vol_final > 0.0 && self.vol_final <= 1.0) {
            return invalid(format!("final volume must lie in (0, 1], got {}", self.vol_final));
        }
        if self.vol0 >= self.vol_final {
            return invalid("vol0 must be smaller than the final volume");
        }
        if !self.k.is_finite() {
            return invalid("curvature k must be finite");
        }
        Ok(())
    }
}

/// Target void fraction of every step, ending exactly at `vol_final`.
pub fn time_steps(s: &TimeSchedule) -> Result<Vec<f64>> {
    s.validate()?;
    let n = s.nsteps as f64;
    let span = s.vol_final - s.vol0;
    let mut t: Vec<f64> = (1..=s.nsteps)
        .map(|i| {
            let i = i as f64;
            if s.k == 0.0 {
                s.vol0 + i * span / n
            } else {
                s.vol0 + span * (s.k * i / n).exp_m1() / s.k.exp_m1()
            }
        })
        .collect();
    *t.last_mut().unwrap() = s.vol_final;
    Ok(t)
}
