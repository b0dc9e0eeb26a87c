//! Transmitter-side polarity control.
//!
//! A transmitter whose current opposes its terminal voltage is coupled
//! destructively; inverting its terminals flips the sign of its channel's
//! coupling so every channel adds to the receiver current. Only Tx-side
//! quantities are observed.

use crate::circuit::{solve_full, PhasorSolution, Sign, SystemConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerSettings {
    /// Relative margin ε: flag when `Re(I) < -ε |I|`.
    pub phase_tolerance: f64,
    /// Channels with `|I| < dead_band * max |I|` are never flagged.
    pub dead_band: f64,
    pub max_iters: usize,
}

impl Default for ControllerSettings {
    fn default() -> Self {
        Self {
            phase_tolerance: 1e-6,
            dead_band: 1e-3,
            max_iters: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarityState {
    pub signs: [Sign; 3],
    pub converged: bool,
    /// Number of circuit solves performed.
    pub iterations: usize,
}

/// Channels whose transmitter current lies in the left half-plane relative
/// to the (real) source phasor, outside the dead-band.
pub fn detect_out_of_phase(solution: &PhasorSolution, settings: &ControllerSettings) -> [bool; 3] {
    let peak = solution.i_tx.iter().map(|c| c.norm()).fold(0.0, f64::max);
    solution.i_tx.map(|c| {
        let magnitude = c.norm();
        magnitude >= settings.dead_band * peak
            && magnitude > 0.0
            && c.re < -settings.phase_tolerance * magnitude
    })
}

/// Solve, detect, flip all flagged channels at once; repeat until nothing is
/// flagged. A revisited sign pattern or running out of iterations is
/// reported as oscillation with every pattern tried.
pub fn run_controller(
    config: &SystemConfig,
    settings: &ControllerSettings,
) -> Result<(SystemConfig, PolarityState)> {
    let mut current = config.clone();
    let mut visited = vec![current.polarity];
    for iteration in 1..=settings.max_iters {
        let solution = solve_full(&current)?;
        let flags = detect_out_of_phase(&solution, settings);
        if !flags.contains(&true) {
            let state = PolarityState {
                signs: current.polarity,
                converged: true,
                iterations: iteration,
            };
            return Ok((current, state));
        }
        let next = [0, 1, 2].map(|i| {
            if flags[i] {
                current.polarity[i].flipped()
            } else {
                current.polarity[i]
            }
        });
        if visited.contains(&next) {
            visited.push(next);
            return Err(Error::ControllerOscillation { visited });
        }
        visited.push(next);
        current.polarity = next;
    }
    Err(Error::ControllerOscillation { visited })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{analytic_currents, tune_xt, v_s_from_dc};
    use crate::magnetics::CouplingSet;
    use std::f64::consts::PI;

    fn omega() -> f64 {
        2.0 * PI * 592.6e3
    }

    fn ideal(m: [f64; 3]) -> SystemConfig {
        let couplings = CouplingSet::uniform(3.1e-6, m, 0.7).unwrap();
        SystemConfig::ideal(
            omega(),
            v_s_from_dc(10.0),
            20.0,
            tune_xt(0.7, 3.1e-6, omega()),
            couplings,
        )
    }

    #[test]
    fn aligned_couplings_are_not_flagged() {
        let s = analytic_currents(&ideal([2e-6, 1e-6, 0.5e-6])).unwrap();
        assert_eq!(
            detect_out_of_phase(&s, &ControllerSettings::default()),
            [false; 3]
        );
    }

    #[test]
    fn opposing_channel_is_flagged() {
        let s = analytic_currents(&ideal([2e-6, -1.5e-6, 1e-6])).unwrap();
        assert_eq!(
            detect_out_of_phase(&s, &ControllerSettings::default()),
            [false, true, false]
        );
    }

    #[test]
    fn dead_band_channel_is_never_flagged() {
        let s = analytic_currents(&ideal([2e-6, -1e-12, 1e-6])).unwrap();
        assert!(s.i_tx[1].re < 0.0);
        assert_eq!(
            detect_out_of_phase(&s, &ControllerSettings::default()),
            [false; 3]
        );
    }

    #[test]
    fn flips_the_negative_channel() {
        let (cfg, state) = run_controller(
            &ideal([2e-6, -1.5e-6, 1e-6]),
            &ControllerSettings::default(),
        )
        .unwrap();
        assert_eq!(state.signs, [Sign::Pos, Sign::Neg, Sign::Pos]);
        assert!(state.converged);
        assert_eq!(state.iterations, 2);
        assert!((cfg.m_sum() - 4.5e-6).abs() < 1e-18);
    }

    #[test]
    fn positive_couplings_are_a_fixed_point() {
        let start = ideal([2e-6, 1.5e-6, 1e-6]);
        let (cfg, state) = run_controller(&start, &ControllerSettings::default()).unwrap();
        assert_eq!(state.iterations, 1);
        assert_eq!(cfg, start);
        let (again, state2) = run_controller(&cfg, &ControllerSettings::default()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(state2.signs, state.signs);
    }

    #[test]
    fn iteration_budget_exhaustion_is_reported() {
        let settings = ControllerSettings {
            max_iters: 1,
            ..Default::default()
        };
        let err = run_controller(&ideal([2e-6, -1.5e-6, 1e-6]), &settings).unwrap_err();
        match err {
            Error::ControllerOscillation { visited } => assert_eq!(visited.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
