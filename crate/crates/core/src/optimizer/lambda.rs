use std::cell::Cell;

use crate::error::{invalid, Error, Result};

use super::volume::{NodeConstraints, VolumeField, VolumeIntegrator};

/// Volume tolerance of the threshold search.
pub const VOLUME_TOL: f64 = 1e-4;
/// Maximum number of trial thresholds.
pub const MAX_TRIALS: usize = 1000;

/// Root-finding scheme for the volume constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootMethod {
    #[default]
    Bisection,
    RegulaFalsi,
    AndersonBjorck,
}

/// Threshold and the topology it produces.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSolution {
    pub lambda: f64,
    pub psi: Vec<f64>,
    pub field: VolumeField,
    /// Number of volume evaluations performed.
    pub evaluations: usize,
}

/// Everything needed to turn a threshold into a topology.
#[derive(Debug, Clone)]
pub struct Thresholding<'a> {
    pub integrator: &'a VolumeIntegrator,
    pub constraints: &'a NodeConstraints,
    pub alpha0: f64,
}

impl Thresholding<'_> {
    /// `psi = xi - lambda` with node constraints applied.
    pub fn topology(&self, xi: &[f64], lambda: f64) -> Result<(Vec<f64>, VolumeField)> {
        let mut psi: Vec<f64> = xi.iter().map(|x| x - lambda).collect();
        self.constraints.apply(&mut psi, self.alpha0);
        let field = self.integrator.integrate(&psi)?;
        Ok((psi, field))
    }
}

struct Trial {
    lambda: f64,
    c: f64,
    psi: Vec<f64>,
    field: VolumeField,
}

/// Finds `lambda` such that the void fraction of `xi - lambda` is within
/// [`VOLUME_TOL`] of `t_ref`. The void fraction is non-decreasing in `lambda`.
pub fn find_lambda(
    xi: &[f64],
    t_ref: f64,
    lambda_prev: Option<f64>,
    method: RootMethod,
    th: &Thresholding<'_>,
) -> Result<LambdaSolution> {
    if xi.is_empty() || xi.iter().any(|v| !v.is_finite()) {
        return invalid("xi must be non-empty and finite");
    }
    if !(0.0..=1.0).contains(&t_ref) {
        return invalid(format!("target volume must lie in [0, 1], got {t_ref}"));
    }
    let count = Cell::new(0usize);
    let eval = |lambda: f64| -> Result<Trial> {
        count.set(count.get() + 1);
        let (psi, field) = th.topology(xi, lambda)?;
        Ok(Trial {
            lambda,
            c: t_ref - field.vol,
            psi,
            field,
        })
    };
    let done = |t: Trial, evaluations: usize| LambdaSolution {
        lambda: t.lambda,
        psi: t.psi,
        field: t.field,
        evaluations,
    };

    let min = xi.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let delta = 1e-2 * (max - min).max(max.abs()).max(min.abs()).max(1e-12);

    // `lo` keeps C >= 0 (too little void), `hi` keeps C <= 0.
    let mut lo: Option<Trial> = None;
    let mut hi: Option<Trial> = None;
    if let Some(lp) = lambda_prev.filter(|l| *l > min && *l < max) {
        let t = eval(lp)?;
        if t.c.abs() <= VOLUME_TOL {
            return Ok(done(t, count.get()));
        }
        if t.c > 0.0 {
            lo = Some(t);
        } else {
            hi = Some(t);
        }
    }
    let lo = match lo {
        Some(t) => t,
        None => {
            let mut t = eval(min)?;
            if t.c.abs() <= VOLUME_TOL {
                return Ok(done(t, count.get()));
            }
            if t.c < 0.0 {
                t = eval(min - delta)?;
                if t.c.abs() <= VOLUME_TOL {
                    return Ok(done(t, count.get()));
                }
                if t.c < 0.0 {
                    return Err(infeasible(t_ref, t.field.vol, "minimum"));
                }
            }
            t
        }
    };
    let hi = match hi {
        Some(t) => t,
        None => {
            let mut t = eval(max)?;
            if t.c.abs() <= VOLUME_TOL {
                return Ok(done(t, count.get()));
            }
            if t.c > 0.0 {
                t = eval(max + delta)?;
                if t.c.abs() <= VOLUME_TOL {
                    return Ok(done(t, count.get()));
                }
                if t.c > 0.0 {
                    return Err(infeasible(t_ref, t.field.vol, "maximum"));
                }
            }
            t
        }
    };

    let (mut lo, mut hi) = (lo, hi);
    // Scaled constraint values used by the interpolating methods.
    let (mut c_lo, mut c_hi) = (lo.c, hi.c);
    let mut last_side: Option<bool> = None;
    while count.get() < MAX_TRIALS {
        let mid = 0.5 * (lo.lambda + hi.lambda);
        let candidate = match method {
            RootMethod::Bisection => mid,
            RootMethod::RegulaFalsi | RootMethod::AndersonBjorck => {
                (lo.lambda * c_hi - hi.lambda * c_lo) / (c_hi - c_lo)
            }
        };
        let lambda = if candidate > lo.lambda && candidate < hi.lambda {
            candidate
        } else {
            mid
        };
        if !(lambda > lo.lambda && lambda < hi.lambda) {
            return Err(Error::VolumeGap {
                target: t_ref,
                below: lo.field.vol,
                above: hi.field.vol,
                lambda_below: lo.lambda,
                lambda_above: hi.lambda,
                evaluations: count.get(),
            });
        }
        let t = eval(lambda)?;
        if t.c.abs() <= VOLUME_TOL {
            return Ok(done(t, count.get()));
        }
        let replace_lo = t.c > 0.0;
        if method == RootMethod::AndersonBjorck && last_side == Some(replace_lo) {
            // The opposite endpoint was retained twice: shrink its value.
            let (c_new, c_old, keep) = if replace_lo {
                (t.c, c_lo, &mut c_hi)
            } else {
                (t.c, c_hi, &mut c_lo)
            };
            let m = 1.0 - c_new / c_old;
            *keep *= if m > 0.0 { m } else { 0.5 };
        }
        last_side = Some(replace_lo);
        if replace_lo {
            c_lo = t.c;
            lo = t;
        } else {
            c_hi = t.c;
            hi = t;
        }
    }
    Err(Error::ConstraintInfeasible(format!(
        "threshold search for void fraction {t_ref} did not converge in {MAX_TRIALS} trials"
    )))
}

fn infeasible(t_ref: f64, vol: f64, side: &str) -> Error {
    Error::ConstraintInfeasible(format!(
        "void fraction {t_ref} unreachable: the {side} threshold gives {vol}"
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, StructuredGrid};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const METHODS: [RootMethod; 3] = [
        RootMethod::Bisection,
        RootMethod::RegulaFalsi,
        RootMethod::AndersonBjorck,
    ];

    fn solve(
        g: &StructuredGrid,
        xi: &[f64],
        t: f64,
        prev: Option<f64>,
        m: RootMethod,
        nc: &NodeConstraints,
    ) -> Result<LambdaSolution> {
        let integrator = VolumeIntegrator::for_grid(g);
        let th = Thresholding {
            integrator: &integrator,
            constraints: nc,
            alpha0: 1e-3,
        };
        find_lambda(xi, t, prev, m, &th)
    }

    fn smooth_random(g: &StructuredGrid, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
        g.coords()
            .iter()
            .map(|&[x, y]| {
                let (x, y) = (x as f64, y as f64);
                (a * x * 0.3).sin() + (b * y * 0.4).cos() + 0.2 * c * x / (1.0 + y) + 0.05 * rng.gen::<f64>()
            })
            .collect()
    }

    #[test]
    fn constant_field_solid_target() {
        let g = build_grid(4, 4).unwrap();
        let s = solve(
            &g,
            &[2.0; 25],
            0.0,
            None,
            RootMethod::Bisection,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(s.field.vol, 0.0);
        assert!(s.lambda <= 2.0);
    }

    #[test]
    fn staircase_strip() {
        // 1 x 10 strip, nodal value = column index.
        let g = build_grid(10, 1).unwrap();
        let xi: Vec<f64> = g.coords().iter().map(|&[x, _]| x as f64).collect();
        for j in 1..10 {
            let t = j as f64 / 10.0;
            for m in METHODS {
                let s = solve(&g, &xi, t, None, m, &Default::default()).unwrap();
                assert!((s.field.vol - t).abs() <= VOLUME_TOL, "{m:?} j={j}");
                assert!(s.lambda >= (j - 1) as f64 && s.lambda <= (j + 1) as f64);
                // Scan oracle: void fraction at lambda computed independently.
                let void = g
                    .connect()
                    .iter()
                    .filter(|nodes| nodes.iter().all(|&n| xi[n] - s.lambda < 0.0))
                    .count();
                assert!(void <= j && void + 1 >= j);
            }
        }
    }

    #[test]
    fn methods_agree_on_volume() {
        let g = build_grid(30, 15).unwrap();
        for seed in 0..5 {
            let xi = smooth_random(&g, seed);
            let vols: Vec<f64> = METHODS
                .iter()
                .map(|&m| {
                    solve(&g, &xi, 0.37, None, m, &Default::default())
                        .unwrap()
                        .field
                        .vol
                })
                .collect();
            for v in &vols {
                assert!((v - 0.37).abs() <= VOLUME_TOL);
                assert!((v - vols[0]).abs() <= 2e-4);
            }
        }
    }

    #[test]
    fn previous_lambda_shortcuts_the_search() {
        let g = build_grid(30, 15).unwrap();
        let xi = smooth_random(&g, 9);
        let first = solve(&g, &xi, 0.4, None, RootMethod::Bisection, &Default::default()).unwrap();
        let again = solve(
            &g,
            &xi,
            0.4,
            Some(first.lambda),
            RootMethod::Bisection,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(again.evaluations, 1);
        assert_eq!(again.field.chi, first.field.chi);
    }

    #[test]
    fn unreachable_target_is_infeasible() {
        let g = build_grid(4, 4).unwrap();
        let all: Vec<usize> = (0..25).collect();
        let nc = NodeConstraints::new(&all, &[], 25).unwrap();
        let xi: Vec<f64> = (0..25).map(|i| i as f64).collect();
        let e = solve(&g, &xi, 0.5, None, RootMethod::Bisection, &nc).unwrap_err();
        assert!(matches!(e, Error::ConstraintInfeasible(_)));
    }

    #[test]
    fn volume_gap_reports_both_sides() {
        // A constant field switches every element at once.
        let g = build_grid(2, 1).unwrap();
        for m in METHODS {
            let e = solve(&g, &[1.5; 6], 0.5, None, m, &Default::default()).unwrap_err();
            let Error::VolumeGap {
                below,
                above,
                lambda_below,
                lambda_above,
                ..
            } = e
            else {
                panic!("{m:?}: {e}");
            };
            assert_eq!((below, above), (0.0, 1.0));
            assert!(lambda_below <= 1.5 && lambda_above > 1.5);
            assert_eq!(lambda_above, lambda_below.next_up());
        }
    }

    #[test]
    fn shift_equivariance_is_bitwise_on_chi() {
        let g = build_grid(30, 15).unwrap();
        for seed in 0..5 {
            let xi = smooth_random(&g, seed);
            let shifted: Vec<f64> = xi.iter().map(|v| v + 10.0).collect();
            for m in METHODS {
                let a = solve(&g, &xi, 0.3, None, m, &Default::default()).unwrap();
                let b = solve(&g, &shifted, 0.3, None, m, &Default::default()).unwrap();
                assert!((b.lambda - a.lambda - 10.0).abs() < 1e-9);
                assert_eq!(a.field.chi, b.field.chi);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn volume_is_monotone_in_lambda(seed in 0u64..1000) {
            let g = build_grid(6, 5).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xi: Vec<f64> = (0..g.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let integrator = VolumeIntegrator::for_grid(&g);
            let nc = NodeConstraints::default();
            let th = Thresholding { integrator: &integrator, constraints: &nc, alpha0: 1e-3 };
            let mut last = -1.0;
            for k in 0..=60 {
                let lambda = -1.2 + 2.4 * k as f64 / 60.0;
                let vol = th.topology(&xi, lambda).unwrap().1.vol;
                prop_assert!(vol >= last);
                last = vol;
            }
        }
    }
}
