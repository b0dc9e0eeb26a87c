//! Scenario-level consistency checks behind `omniwpt verify`.
//!
//! Each check returns a [`Check`] instead of failing fast so a report can
//! list every verdict. Randomized checks draw from a seeded ChaCha stream.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{analytic_currents, solve_full, tune_xt, Sign, SystemConfig};
use crate::controller::{run_controller, ControllerSettings};
use crate::error::Result;
use crate::geometry::{FilamentLoop, Pose, Vec3};
use crate::magnetics::{loop_mutual, maxwell_coaxial, CouplingSet};
use crate::quadrature::QuadratureSpec;
use crate::sweep::{count_local_minima, revolution_trace, Sweep, SweepRecord};

/// Numerical thresholds the prototype scenario is expected to meet.
pub mod thresholds {
    pub const M0_NOMINAL: f64 = 3.1e-6;
    pub const M0_REL_TOL: f64 = 0.15;
    /// Cross-channel couplings must be at least this many times below M0.
    pub const CROSS_RATIO: f64 = 50.0;
    pub const GAMMA_BAND: (f64, f64) = (0.60, 0.80);
    pub const XT_AUTO_BAND: (f64, f64) = (14.0, 19.0);
    pub const ETA_FLOOR: f64 = 0.88;
    pub const ETA_MEAN_BAND: (f64, f64) = (0.88, 0.97);
    pub const DIPS_PER_REVOLUTION: usize = 6;
    pub const ORACLE_REL_TOL: f64 = 1e-6;
    pub const PERPENDICULAR_REL_TOL: f64 = 1e-12;
    pub const CLOSED_FORM_REL_TOL: f64 = 1e-9;
    pub const NULLING_REL_TOL: f64 = 1e-9;
    pub const POWER_LAW_REL_TOL: f64 = 1e-6;
    pub const ENERGY_REL_TOL: f64 = 1e-9;
    pub const SYMMETRY_POWER_REL_TOL: f64 = 0.01;
    pub const SYMMETRY_CURRENT_REL_TOL: f64 = 0.02;
    pub const RP_FLOOR_REL_TOL: f64 = 1e-9;
    pub const CONTROLLER_MAX_SOLVES: usize = 4;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn ok_records(sweep: &Sweep) -> Vec<&SweepRecord> {
    sweep.records.iter().filter(|r| r.is_ok()).collect()
}

fn failed_angles(sweep: &Sweep) -> usize {
    sweep.records.len() - ok_records(sweep).len()
}

/// Lossless model of one record: mean M0 in every channel, the sweep's mean
/// γ in every channel, X_t tuned to them, no cross couplings, and the
/// record's polarity.
pub fn lossless_tuned_config(sweep: &Sweep, record: &SweepRecord) -> Result<SystemConfig> {
    let m0 = sweep.mean_m0();
    let couplings = CouplingSet::uniform(m0, record.m, sweep.gamma_mean)?;
    let x_t = tune_xt(sweep.gamma_mean, m0, sweep.omega0);
    Ok(
        SystemConfig::ideal(sweep.omega0, sweep.v_s, sweep.r_load, x_t, couplings)
            .with_polarity(record.signs),
    )
}

/// Randomized coaxial loops against the closed form, plus perpendicular
/// concentric loops against zero.
pub fn magnetics_oracle(cases: usize, seed: u64, spec: &QuadratureSpec) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut worst_perp: f64 = 0.0;
    let mut errors = 0usize;
    for _ in 0..cases {
        let r1 = rng.random_range(0.02..0.4);
        let r2 = rng.random_range(0.02..0.4);
        let gap = rng.random_range(0.005..0.5);
        let axis = random_unit(&mut rng);
        let origin = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        match oracle_case(origin, axis, r1, r2, gap, spec) {
            Ok((coaxial_err, perp_ratio)) => {
                worst = worst.max(coaxial_err);
                worst_perp = worst_perp.max(perp_ratio);
            }
            Err(_) => errors += 1,
        }
    }
    let passed = errors == 0
        && worst <= thresholds::ORACLE_REL_TOL
        && worst_perp < thresholds::PERPENDICULAR_REL_TOL;
    Check::new(
        "magnetics oracle",
        passed,
        format!(
            "{cases} coaxial cases, worst rel err {worst:.2e}; perpendicular worst {worst_perp:.2e}; {errors} errors"
        ),
    )
}

/// Relative coaxial error and perpendicular-to-coaxial ratio of one case.
fn oracle_case(
    origin: Vec3,
    axis: Vec3,
    r1: f64,
    r2: f64,
    gap: f64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let a = FilamentLoop::new(Pose::new(origin, axis)?, r1)?;
    let b = FilamentLoop::new(Pose::new(origin + gap * axis, axis)?, r2)?;
    let reference = maxwell_coaxial(r1, r2, gap)?;
    let m = loop_mutual(&a, &b, spec)?;
    let perp_axis = axis.cross(&any_orthogonal(&axis)).normalize();
    let p = FilamentLoop::new(Pose::new(origin, perp_axis)?, 0.6 * r1)?;
    let mp = loop_mutual(&a, &p, spec)?;
    Ok((rel(m, reference), mp.abs() / reference.abs()))
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn any_orthogonal(v: &Vec3) -> Vec3 {
    if v.x.abs() < 0.9 {
        Vec3::x().cross(v)
    } else {
        Vec3::y().cross(v)
    }
}

pub fn m0_reproduction(sweep: &Sweep) -> Check {
    let m0_ok = sweep.m0.iter().all(|m| {
        (m - thresholds::M0_NOMINAL).abs() <= thresholds::M0_REL_TOL * thresholds::M0_NOMINAL
    });
    let m0_min = sweep.m0.iter().cloned().fold(f64::INFINITY, f64::min);
    let cross_ok = match sweep.max_cross {
        Some(c) => c * thresholds::CROSS_RATIO <= m0_min,
        None => false,
    };
    Check::new(
        "M0 reproduction",
        m0_ok && cross_ok,
        format!(
            "M0 = [{:.4}, {:.4}, {:.4}] uH; max cross {}",
            sweep.m0[0] * 1e6,
            sweep.m0[1] * 1e6,
            sweep.m0[2] * 1e6,
            sweep
                .max_cross
                .map(|c| format!("{:.3e} H", c))
                .unwrap_or_else(|| "not computed".into())
        ),
    )
}

pub fn gamma_band(sweep: &Sweep) -> Check {
    let ok = ok_records(sweep);
    let (lo, hi) = ok
        .iter()
        .flat_map(|r| r.gamma)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), g| {
            (a.min(g), b.max(g))
        });
    let passed = !ok.is_empty()
        && failed_angles(sweep) == 0
        && lo >= thresholds::GAMMA_BAND.0
        && hi <= thresholds::GAMMA_BAND.1;
    Check::new("gamma band", passed, format!("gamma in [{lo:.4}, {hi:.4}]"))
}

pub fn xt_auto_band(sweep: &Sweep) -> Check {
    let x = sweep.x_t_auto;
    Check::new(
        "auto X_t band",
        (thresholds::XT_AUTO_BAND.0..=thresholds::XT_AUTO_BAND.1).contains(&x),
        format!("X_t(auto) = {x:.4} ohm"),
    )
}

/// Lossless tuned full solves against the closed-form currents on random
/// couplings.
pub fn closed_form_equivalence(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega0 = 2.0 * PI * 592.6e3;
    let mut worst: f64 = 0.0;
    let mut errors = 0usize;
    for _ in 0..cases {
        let m0 = rng.random_range(0.5e-6..10e-6);
        let gamma = rng.random_range(0.3..0.95);
        let m = [0; 3].map(|_| rng.random_range(-3e-6..3e-6));
        let signs = [0; 3].map(|_| {
            if rng.random_bool(0.5) {
                Sign::Pos
            } else {
                Sign::Neg
            }
        });
        let r_load = rng.random_range(1.0..100.0);
        let v_s = rng.random_range(1.0..50.0);
        let cfg = CouplingSet::uniform(m0, m, gamma).map(|c| {
            SystemConfig::ideal(omega0, v_s, r_load, tune_xt(gamma, m0, omega0), c)
                .with_polarity(signs)
        });
        let pair = cfg.and_then(|c| Ok((solve_full(&c)?, analytic_currents(&c)?)));
        match pair {
            Ok((full, closed)) => {
                let scale = closed
                    .currents()
                    .iter()
                    .map(|c| c.norm())
                    .fold(0.0, f64::max);
                for (a, b) in full.currents().iter().zip(closed.currents()) {
                    let denom = b.norm().max(a.norm());
                    let e = if denom == 0.0 {
                        0.0
                    } else {
                        (a - b).norm() / denom
                    };
                    // Currents far below the largest branch carry only rounding.
                    if b.norm() > 1e-6 * scale {
                        worst = worst.max(e);
                    }
                }
            }
            Err(_) => errors += 1,
        }
    }
    Check::new(
        "closed-form equivalence",
        errors == 0 && worst <= thresholds::CLOSED_FORM_REL_TOL,
        format!("{cases} cases, worst rel err {worst:.2e}, {errors} errors"),
    )
}

/// Channels whose coupling is above the controller dead-band.
fn active_channels(m: &[f64; 3], dead_band: f64) -> [bool; 3] {
    let peak = m.iter().map(|v| v.abs()).fold(0.0, f64::max);
    m.map(|v| v.abs() > dead_band * peak)
}

pub fn reactance_nulling(sweep: &Sweep, settings: &ControllerSettings) -> Check {
    let mut worst: f64 = 0.0;
    let mut errors = 0usize;
    for r in ok_records(sweep) {
        let solved = lossless_tuned_config(sweep, r)
            .and_then(|c| run_controller(&c, settings))
            .and_then(|(c, _)| solve_full(&c));
        match solved {
            Ok(sol) => {
                for (i, active) in active_channels(&r.m, settings.dead_band).iter().enumerate() {
                    if *active {
                        let z = sweep.v_s / sol.i_tx[i];
                        worst = worst.max(z.im.abs() / z.re.abs());
                    }
                }
            }
            Err(_) => errors += 1,
        }
    }
    errors += failed_angles(sweep);
    Check::new(
        "reactance nulling",
        errors == 0 && worst < thresholds::NULLING_REL_TOL,
        format!("worst |X_in|/R_in {worst:.2e}, {errors} errors"),
    )
}

pub fn power_law(sweep: &Sweep, settings: &ControllerSettings) -> Check {
    let mut ratios = Vec::new();
    let mut errors = failed_angles(sweep);
    for r in ok_records(sweep) {
        let solved = lossless_tuned_config(sweep, r)
            .and_then(|c| run_controller(&c, settings))
            .and_then(|(c, _)| solve_full(&c));
        match solved {
            Ok(sol) if r.m_sum_abs > 0.0 => ratios.push(sol.p_out / (r.m_sum_abs * r.m_sum_abs)),
            Ok(_) => {}
            Err(_) => errors += 1,
        }
    }
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    let spread = if ratios.is_empty() {
        f64::INFINITY
    } else {
        (hi - lo) / hi
    };
    let (trace, wraps) = revolution_trace(&sweep.records);
    let dips = count_local_minima(&trace, true);
    let passed = errors == 0
        && spread <= thresholds::POWER_LAW_REL_TOL
        && wraps
        && dips == thresholds::DIPS_PER_REVOLUTION;
    Check::new(
        "P_out follows M_sum squared",
        passed,
        format!(
            "P_out/M_sum^2 spread {spread:.2e}; lossy P_out has {dips} local minima{}",
            if wraps {
                ""
            } else {
                " (sweep is not one revolution)"
            }
        ),
    )
}

pub fn efficiency(sweep: &Sweep) -> Check {
    let ok = ok_records(sweep);
    let min = ok.iter().map(|r| r.eta).fold(f64::INFINITY, f64::min);
    let mean = ok.iter().map(|r| r.eta).sum::<f64>() / ok.len().max(1) as f64;
    let passed = !ok.is_empty()
        && failed_angles(sweep) == 0
        && min >= thresholds::ETA_FLOOR
        && (thresholds::ETA_MEAN_BAND.0..=thresholds::ETA_MEAN_BAND.1).contains(&mean);
    Check::new(
        "efficiency",
        passed,
        format!(
            "min eta {min:.4}, mean eta {mean:.4} at X_t = {:.3} ohm",
            sweep.x_t_used
        ),
    )
}

/// Exhaustive search over all polarity patterns as the optimality oracle.
pub fn controller_optimality(cases: usize, seed: u64, settings: &ControllerSettings) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega0 = 2.0 * PI * 592.6e3;
    let mut suboptimal = 0usize;
    let mut max_solves = 0usize;
    let mut errors = 0usize;
    for _ in 0..cases {
        let m = [0; 3].map(|_| {
            let mag = rng.random_range(0.2e-6..3e-6);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        });
        let gamma = rng.random_range(0.5..0.9);
        let m0 = 3.1e-6;
        let base = match CouplingSet::uniform(m0, m, gamma) {
            Ok(c) => SystemConfig::ideal(omega0, 9.0, 20.0, tune_xt(gamma, m0, omega0), c),
            Err(_) => {
                errors += 1;
                continue;
            }
        };
        let best = all_patterns()
            .iter()
            .filter_map(|p| solve_full(&base.with_polarity(*p)).ok())
            .map(|s| s.p_out)
            .fold(0.0, f64::max);
        match run_controller(&base, settings).and_then(|(c, st)| Ok((solve_full(&c)?, st))) {
            Ok((sol, state)) => {
                max_solves = max_solves.max(state.iterations);
                if sol.p_out < best * (1.0 - 1e-12) {
                    suboptimal += 1;
                }
            }
            Err(_) => errors += 1,
        }
    }
    Check::new(
        "controller optimality",
        errors == 0 && suboptimal == 0 && max_solves <= thresholds::CONTROLLER_MAX_SOLVES,
        format!(
            "{cases} cases, {suboptimal} suboptimal, at most {max_solves} solves, {errors} errors"
        ),
    )
}

pub fn all_patterns() -> [[Sign; 3]; 8] {
    let s = |b: usize| if b == 0 { Sign::Pos } else { Sign::Neg };
    std::array::from_fn(|k| [s(k & 1), s((k >> 1) & 1), s((k >> 2) & 1)])
}

pub fn energy_balance(sweep: &Sweep) -> Check {
    let worst = ok_records(sweep)
        .iter()
        .map(|r| (r.p_in - r.p_out - r.p_loss).abs() / r.p_in.abs())
        .fold(0.0, f64::max);
    let errors = failed_angles(sweep);
    Check::new(
        "energy balance",
        errors == 0 && worst <= thresholds::ENERGY_REL_TOL,
        format!("worst rel imbalance {worst:.2e}"),
    )
}

/// Record at `angle` (degrees, any turn), if the sweep has one.
fn record_at(sweep: &Sweep, angle: f64) -> Option<&SweepRecord> {
    let target = angle.rem_euclid(360.0);
    sweep.records.iter().find(|r| {
        let d = (r.angle_deg.rem_euclid(360.0) - target).abs();
        d < 1e-9 || (360.0 - d) < 1e-9
    })
}

/// Threefold symmetry: power repeats every 120°; channel k's current
/// magnitude at θ + 120° matches channel k + 1's at θ.
pub fn symmetry(sweep: &Sweep) -> Check {
    let ok = ok_records(sweep);
    let peak = ok
        .iter()
        .flat_map(|r| r.i_tx.iter().map(|c| c.norm()))
        .fold(0.0, f64::max);
    let mut worst_p: f64 = 0.0;
    let mut worst_i: f64 = 0.0;
    let mut pairs = 0usize;
    for r in &ok {
        let Some(s) = record_at(sweep, r.angle_deg + 120.0).filter(|s| s.is_ok()) else {
            continue;
        };
        pairs += 1;
        worst_p = worst_p.max(rel(r.p_out, s.p_out));
        // Channel azimuths step by -120°, so channel k at θ+120° matches channel k+1 at θ.
        for k in 0..3 {
            let e = (s.i_tx[k].norm() - r.i_tx[(k + 1) % 3].norm()).abs() / peak;
            worst_i = worst_i.max(e);
        }
    }
    Check::new(
        "threefold symmetry",
        pairs > 0
            && failed_angles(sweep) == 0
            && worst_p <= thresholds::SYMMETRY_POWER_REL_TOL
            && worst_i <= thresholds::SYMMETRY_CURRENT_REL_TOL,
        format!("{pairs} pairs, worst P_out rel diff {worst_p:.2e}, worst Tx current diff {worst_i:.2e} of peak"),
    )
}

pub fn rp_current_floor(sweep: &Sweep, settings: &ControllerSettings) -> Check {
    let floor = -sweep.v_s / (sweep.omega0 * sweep.mean_m0());
    let mut worst: f64 = 0.0;
    let mut errors = failed_angles(sweep);
    for r in ok_records(sweep) {
        let solved = lossless_tuned_config(sweep, r)
            .and_then(|c| run_controller(&c, settings))
            .and_then(|(c, _)| solve_full(&c));
        match solved {
            Ok(sol) => {
                for c in sol.i_rp {
                    worst = worst.max(rel(c.im, floor));
                }
            }
            Err(_) => errors += 1,
        }
    }
    Check::new(
        "Rp current floor",
        errors == 0 && worst <= thresholds::RP_FLOOR_REL_TOL,
        format!("Im(I_Rp) floor {floor:.6} A, worst rel err {worst:.2e}"),
    )
}

/// Every scenario-level check on a finished sweep.
pub fn run_checks(
    sweep: &Sweep,
    settings: &ControllerSettings,
    spec: &QuadratureSpec,
    seed: u64,
) -> Vec<Check> {
    vec![
        magnetics_oracle(100, seed, spec),
        m0_reproduction(sweep),
        gamma_band(sweep),
        xt_auto_band(sweep),
        closed_form_equivalence(1000, seed.wrapping_add(1)),
        reactance_nulling(sweep, settings),
        power_law(sweep, settings),
        efficiency(sweep),
        controller_optimality(500, seed.wrapping_add(2), settings),
        energy_balance(sweep),
        symmetry(sweep),
        rp_current_floor(sweep, settings),
    ]
}
