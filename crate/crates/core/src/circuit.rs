//! Phasor circuit of the three channels and the receiver.
//!
//! Branch order everywhere is Tx1, Tx2, Tx3, Rp1, Rp2, Rp3, Rx. Phasors are
//! RMS, so average power in a resistance is `|I|² R`. The source phasor is
//! real and is the phase reference.
//!
//! Repeaters and receiver resonate at ω0 and carry only resistance on the
//! diagonal; transmitters keep a residual reactance `x_t`. Inverting the
//! terminals of transmitter `i` is modeled by negating every coupling between
//! channel `i`'s coils and the rest of the system, which keeps currents in
//! the frame of the source terminals.

use std::fmt;

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::magnetics::CouplingSet;

pub type ImpedanceMatrix = SMatrix<Complex64, 7, 7>;

/// Reciprocal condition number (1-norm) below which a solve is refused.
pub const MIN_RCOND: f64 = 1e-14;

/// Terminal polarity of one transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Sign {
    #[default]
    Pos,
    Neg,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Pos => 1.0,
            Sign::Neg => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Pos => 1,
            Sign::Neg => -1,
        }
    }

    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            1 => Some(Sign::Pos),
            -1 => Some(Sign::Neg),
            _ => None,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

/// RMS source voltage of a full-bridge inverter at the fundamental.
pub fn v_s_from_dc(v_dc: f64) -> f64 {
    2.0 * 2f64.sqrt() * v_dc / std::f64::consts::PI
}

/// Complete electrical scenario at one receiver position.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Working angular frequency, rad/s.
    pub omega0: f64,
    /// RMS source voltage, V.
    pub v_s: f64,
    pub r_tx: [f64; 3],
    pub r_rp: [f64; 3],
    pub r_rx: f64,
    pub r_load: f64,
    /// Residual transmitter reactance, Ω.
    pub x_t: f64,
    pub polarity: [Sign; 3],
    pub couplings: CouplingSet,
}

impl SystemConfig {
    /// Lossless configuration with all polarities positive.
    pub fn ideal(omega0: f64, v_s: f64, r_load: f64, x_t: f64, couplings: CouplingSet) -> Self {
        Self {
            omega0,
            v_s,
            r_tx: [0.0; 3],
            r_rp: [0.0; 3],
            r_rx: 0.0,
            r_load,
            x_t,
            polarity: [Sign::Pos; 3],
            couplings,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidConfig(format!("{what}: {v}")));
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return bad("omega0 must be positive", self.omega0);
        }
        if !(self.r_load.is_finite() && self.r_load > 0.0) {
            return bad("load resistance must be positive", self.r_load);
        }
        for &r in self.r_tx.iter().chain(&self.r_rp).chain([&self.r_rx]) {
            if !(r.is_finite() && r >= 0.0) {
                return bad("parasitic resistances must be >= 0", r);
            }
        }
        if !self.v_s.is_finite() {
            return bad("source voltage must be finite", self.v_s);
        }
        if !self.x_t.is_finite() {
            return bad("x_t must be finite", self.x_t);
        }
        Ok(())
    }

    pub fn is_lossless(&self) -> bool {
        self.r_tx.iter().chain(&self.r_rp).all(|r| *r == 0.0) && self.r_rx == 0.0
    }

    /// Same scenario with every parasitic resistance removed.
    pub fn lossless(&self) -> Self {
        Self {
            r_tx: [0.0; 3],
            r_rp: [0.0; 3],
            r_rx: 0.0,
            ..self.clone()
        }
    }

    pub fn with_polarity(&self, polarity: [Sign; 3]) -> Self {
        Self {
            polarity,
            ..self.clone()
        }
    }

    /// Rp-to-Rx couplings as seen through the transmitter polarities.
    pub fn effective_m(&self) -> [f64; 3] {
        let m = self.couplings.m();
        [0, 1, 2].map(|i| self.polarity[i].value() * m[i])
    }

    pub fn effective_gamma_m(&self) -> [f64; 3] {
        let g = self.couplings.gamma_m();
        [0, 1, 2].map(|i| self.polarity[i].value() * g[i])
    }

    /// Σ sᵢ Mᵢ.
    pub fn m_sum(&self) -> f64 {
        self.effective_m().iter().sum()
    }
}

/// Branch currents and power flow of one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasorSolution {
    pub i_tx: [Complex64; 3],
    pub i_rp: [Complex64; 3],
    pub i_rx: Complex64,
    /// Real power delivered by the source.
    pub p_in: f64,
    pub p_out: f64,
    pub p_loss_tx: f64,
    pub p_loss_rp: f64,
    pub p_loss_rx: f64,
}

impl PhasorSolution {
    pub fn currents(&self) -> [Complex64; 7] {
        [
            self.i_tx[0],
            self.i_tx[1],
            self.i_tx[2],
            self.i_rp[0],
            self.i_rp[1],
            self.i_rp[2],
            self.i_rx,
        ]
    }

    pub fn efficiency(&self) -> f64 {
        if self.p_in > 0.0 {
            self.p_out / self.p_in
        } else {
            0.0
        }
    }

    pub fn total_loss(&self) -> f64 {
        self.p_loss_tx + self.p_loss_rp + self.p_loss_rx
    }
}

/// Coupling inductance between branches `a` and `b` before polarity is
/// applied; zero on the diagonal.
fn coupling_inductances(c: &CouplingSet) -> [[f64; 7]; 7] {
    let mut l = c.cross().copied().unwrap_or([[0.0; 7]; 7]);
    for (i, row) in l.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    let (m0, m, gm) = (c.m0(), c.m(), c.gamma_m());
    for i in 0..3 {
        l[i][3 + i] = m0[i];
        l[3 + i][i] = m0[i];
        l[3 + i][6] = m[i];
        l[6][3 + i] = m[i];
        l[i][6] = gm[i];
        l[6][i] = gm[i];
    }
    l
}

/// The 7×7 impedance matrix with polarity applied.
pub fn assemble_impedance(config: &SystemConfig) -> Result<ImpedanceMatrix> {
    config.validate()?;
    let l = coupling_inductances(&config.couplings);
    let s = config.polarity.map(Sign::value);
    let branch_sign = [s[0], s[1], s[2], s[0], s[1], s[2], 1.0];
    let mut z = ImpedanceMatrix::zeros();
    for a in 0..7 {
        for b in 0..7 {
            if a != b {
                z[(a, b)] = Complex64::new(
                    0.0,
                    config.omega0 * branch_sign[a] * branch_sign[b] * l[a][b],
                );
            }
        }
    }
    for i in 0..3 {
        z[(i, i)] = Complex64::new(config.r_tx[i], config.x_t);
        z[(3 + i, 3 + i)] = Complex64::new(config.r_rp[i], 0.0);
    }
    z[(6, 6)] = Complex64::new(config.r_rx + config.r_load, 0.0);
    Ok(z)
}

fn norm1(m: &ImpedanceMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves the full circuit by dense LU with partial pivoting.
pub fn solve_full(config: &SystemConfig) -> Result<PhasorSolution> {
    let z = assemble_impedance(config)?;
    let lu = z.lu();
    let inverse = lu
        .try_inverse()
        .ok_or(Error::SingularSystem { rcond: 0.0 })?;
    let rcond = 1.0 / (norm1(&z) * norm1(&inverse));
    if !(rcond >= MIN_RCOND) {
        return Err(Error::SingularSystem { rcond });
    }
    let mut v = SMatrix::<Complex64, 7, 1>::zeros();
    for i in 0..3 {
        v[i] = Complex64::new(config.v_s, 0.0);
    }
    let i = lu.solve(&v).ok_or(Error::SingularSystem { rcond })?;
    if i.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::SingularSystem { rcond });
    }
    let i_tx = [i[0], i[1], i[2]];
    let i_rp = [i[3], i[4], i[5]];
    let i_rx = i[6];
    let p_in = i_tx.iter().map(|c| config.v_s * c.re).sum();
    let p_loss_tx = (0..3).map(|k| i_tx[k].norm_sqr() * config.r_tx[k]).sum();
    let p_loss_rp = (0..3).map(|k| i_rp[k].norm_sqr() * config.r_rp[k]).sum();
    Ok(PhasorSolution {
        i_tx,
        i_rp,
        i_rx,
        p_in,
        p_out: i_rx.norm_sqr() * config.r_load,
        p_loss_tx,
        p_loss_rp,
        p_loss_rx: i_rx.norm_sqr() * config.r_rx,
    })
}

/// Input resistance and reactance seen from each transmitter in the
/// lossless model (parasitic resistances are ignored):
/// `R_in,i = M0² R_L / (M_sum Mᵢ)`,
/// `X_in,i = (X_t M·M - 2 ω0 M0 Γ·M) / (M_sum Mᵢ)`.
/// M0 is the channel mean.
pub fn input_impedance(config: &SystemConfig) -> Result<([f64; 3], [f64; 3])> {
    config.validate()?;
    let m = config.effective_m();
    let g = config.effective_gamma_m();
    let m_sum: f64 = m.iter().sum();
    if m_sum == 0.0 {
        return Err(Error::UndefinedImpedance(
            "coupling sum M_sum is zero".into(),
        ));
    }
    if let Some(i) = m.iter().position(|v| *v == 0.0) {
        return Err(Error::UndefinedImpedance(format!(
            "channel {} has zero Rp-to-Rx coupling",
            i + 1
        )));
    }
    let m0 = config.couplings.mean_m0();
    let mm: f64 = m.iter().map(|v| v * v).sum();
    let gm: f64 = m.iter().zip(&g).map(|(a, b)| a * b).sum();
    let numerator_x = config.x_t * mm - 2.0 * config.omega0 * m0 * gm;
    let r_in = m.map(|mi| m0 * m0 * config.r_load / (m_sum * mi));
    let x_in = m.map(|mi| numerator_x / (m_sum * mi));
    Ok((r_in, x_in))
}

/// Transmitter reactance that nulls every input reactance when Γ = γM,
/// independent of the receiver position: `X_t = 2 ω0 γ M0`.
pub fn tune_xt(gamma: f64, m0: f64, omega0: f64) -> f64 {
    2.0 * omega0 * gamma * m0
}

/// Series capacitance that leaves reactance `x_t` on an inductance `l` at ω0.
pub fn series_capacitance(l: f64, omega0: f64, x_t: f64) -> f64 {
    1.0 / (omega0 * (omega0 * l - x_t))
}

/// Scalar γ and M0 the closed forms are built on, or why they do not apply.
fn closed_form_parameters(config: &SystemConfig) -> Result<(f64, f64)> {
    let gamma = config.couplings.scalar_gamma().ok_or_else(|| {
        Error::ModelDomain("closed forms need one γ shared by all channels".into())
    })?;
    let m0s = config.couplings.m0();
    let m0 = config.couplings.mean_m0();
    if m0s.iter().any(|v| (v - m0).abs() > 1e-9 * m0) {
        return Err(Error::ModelDomain(format!(
            "closed forms need identical M0 in every channel, got {m0s:?}"
        )));
    }
    Ok((gamma, m0))
}

/// Branch currents of the lossless, tuned system in closed form:
/// `I_Tx = (M_sum M / M0²) V_s/R_L`,
/// `I_Rp = -j V_s/(ω0 M0) - γ (M_sum M / M0²) V_s/R_L`,
/// `I_Rx = -(M_sum/M0) V_s/R_L`, with polarity-adjusted M.
pub fn analytic_currents(config: &SystemConfig) -> Result<PhasorSolution> {
    config.validate()?;
    if !config.is_lossless() {
        return Err(Error::ModelDomain(
            "parasitic resistances present; use the full solve".into(),
        ));
    }
    if config.couplings.cross().is_some() {
        return Err(Error::ModelDomain(
            "cross-channel couplings present; use the full solve".into(),
        ));
    }
    let (gamma, m0) = closed_form_parameters(config)?;
    let tuned = tune_xt(gamma, m0, config.omega0);
    if (config.x_t - tuned).abs() > 1e-9 * (config.omega0 * m0) {
        return Err(Error::ModelDomain(format!(
            "x_t = {} is not the tuned value {tuned}",
            config.x_t
        )));
    }
    let m = config.effective_m();
    let m_sum: f64 = m.iter().sum();
    let drive = config.v_s / config.r_load;
    let i_tx = m.map(|mi| Complex64::new(m_sum * mi / (m0 * m0) * drive, 0.0));
    let floor = -config.v_s / (config.omega0 * m0);
    let i_rp = m.map(|mi| Complex64::new(-gamma * m_sum * mi / (m0 * m0) * drive, floor));
    let i_rx = Complex64::new(-m_sum / m0 * drive, 0.0);
    let p_out = i_rx.norm_sqr() * config.r_load;
    Ok(PhasorSolution {
        i_tx,
        i_rp,
        i_rx,
        p_in: i_tx.iter().map(|c| config.v_s * c.re).sum(),
        p_out,
        p_loss_tx: 0.0,
        p_loss_rp: 0.0,
        p_loss_rx: 0.0,
    })
}

/// Closed-form output power and efficiency decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceReport {
    /// `(M_sum/M0)² V_s²/R_L`.
    pub p_out: f64,
    pub eta: f64,
    pub xi_tx: f64,
    pub xi_rp: f64,
    pub xi_rx: f64,
    /// `None` when some channel has zero coupling.
    pub r_in: Option<[f64; 3]>,
    pub x_in: Option<[f64; 3]>,
    pub m_sum: f64,
    /// Set when M_sum = 0: no power reaches the receiver and η is reported as 0.
    pub degenerate: bool,
}

/// Output power and `η = 1/(1 + ξ_Tx + ξ_Rp + ξ_Rx)` with
/// `ξ_Tx = (M·M/M0²)(R_Tx/R_L)`, `ξ_Rx = R_Rx/R_L`,
/// `ξ_Rp = 3 R_Rp R_L/(ω0² M_sum²) + γ² (M·M/M0²)(R_Rp/R_L)`.
///
/// The per-coil transmitter and repeater resistances enter through their
/// means.
pub fn performance(config: &SystemConfig) -> Result<PerformanceReport> {
    config.validate()?;
    let (gamma, m0) = closed_form_parameters(config)?;
    let m = config.effective_m();
    let m_sum: f64 = m.iter().sum();
    let mm: f64 = m.iter().map(|v| v * v).sum();
    let r_tx = config.r_tx.iter().sum::<f64>() / 3.0;
    let r_rp = config.r_rp.iter().sum::<f64>() / 3.0;
    let rl = config.r_load;
    let xi_tx = mm / (m0 * m0) * r_tx / rl;
    let xi_rx = config.r_rx / rl;
    let p_out = (m_sum / m0).powi(2) * config.v_s * config.v_s / rl;
    let (r_in, x_in) = match input_impedance(config) {
        Ok((r, x)) => (Some(r), Some(x)),
        Err(_) => (None, None),
    };
    if m_sum == 0.0 {
        return Ok(PerformanceReport {
            p_out,
            eta: 0.0,
            xi_tx,
            xi_rp: f64::INFINITY,
            xi_rx,
            r_in,
            x_in,
            m_sum,
            degenerate: true,
        });
    }
    let xi_rp = 3.0 * r_rp * rl / (config.omega0 * m_sum).powi(2)
        + gamma * gamma * mm / (m0 * m0) * r_rp / rl;
    Ok(PerformanceReport {
        p_out,
        eta: 1.0 / (1.0 + xi_tx + xi_rp + xi_rx),
        xi_tx,
        xi_rp,
        xi_rx,
        r_in,
        x_in,
        m_sum,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const F0: f64 = 592.6e3;

    fn omega() -> f64 {
        2.0 * PI * F0
    }

    fn ideal(m: [f64; 3], gamma: f64, m0: f64) -> SystemConfig {
        let couplings = CouplingSet::uniform(m0, m, gamma).unwrap();
        SystemConfig::ideal(
            omega(),
            v_s_from_dc(10.0),
            20.0,
            tune_xt(gamma, m0, omega()),
            couplings,
        )
    }

    fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
        (a - b).norm() <= rel * b.norm().max(a.norm())
    }

    #[test]
    fn source_voltage_from_dc() {
        assert!((v_s_from_dc(10.0) - 9.003163161571061).abs() < 1e-12);
    }

    #[test]
    fn tune_xt_endpoints() {
        // Reported to one decimal: 15.2 Ω and 17.3 Ω.
        assert!((tune_xt(0.66, 3.1e-6, omega()) - 15.2).abs() < 0.05);
        assert!((tune_xt(0.75, 3.1e-6, omega()) - 17.3).abs() < 0.05);
        assert_eq!(tune_xt(0.0, 3.1e-6, omega()), 0.0);
    }

    #[test]
    fn analytic_receiver_current_example() {
        let cfg = ideal([2e-6; 3], 0.7, 3.1e-6);
        let sol = analytic_currents(&cfg).unwrap();
        let expected = 6.0 / 3.1 * v_s_from_dc(10.0) / 20.0;
        assert!((sol.i_rx.norm() - expected).abs() < 1e-12);
        assert!((sol.i_rx.norm() - 0.871).abs() < 5e-4);
    }

    #[test]
    fn analytic_zero_coupling_leaves_repeater_idling() {
        let cfg = ideal([0.0; 3], 0.7, 3.1e-6);
        let sol = analytic_currents(&cfg).unwrap();
        let idle = Complex64::new(0.0, -cfg.v_s / (omega() * 3.1e-6));
        for k in 0..3 {
            assert_eq!(sol.i_tx[k], Complex64::new(0.0, 0.0));
            assert!(close(sol.i_rp[k], idle, 1e-15));
        }
        assert_eq!(sol.i_rx.norm(), 0.0);
    }

    #[test]
    fn analytic_matches_full_solve() {
        let cfg = ideal([2.1e-6, -0.7e-6, 1.3e-6], 0.71, 3.05e-6);
        let a = analytic_currents(&cfg).unwrap();
        let f = solve_full(&cfg).unwrap();
        for (x, y) in a.currents().iter().zip(f.currents()) {
            assert!(close(*x, y, 1e-9), "{x} vs {y}");
        }
    }

    #[test]
    fn repeater_current_identity() {
        // I_Rp = -j V_s/(ω0 M0) - γ I_Tx.
        let cfg = ideal([1.1e-6, 2.2e-6, 0.4e-6], 0.68, 3.1e-6);
        let s = analytic_currents(&cfg).unwrap();
        for k in 0..3 {
            let alt = Complex64::new(0.0, -cfg.v_s / (omega() * 3.1e-6)) - 0.68 * s.i_tx[k];
            assert!(close(s.i_rp[k], alt, 1e-14));
        }
    }

    #[test]
    fn analytic_rejects_lossy_or_detuned() {
        let mut cfg = ideal([2e-6; 3], 0.7, 3.1e-6);
        cfg.r_rx = 0.469;
        assert!(matches!(
            analytic_currents(&cfg),
            Err(Error::ModelDomain(_))
        ));
        let mut cfg = ideal([2e-6; 3], 0.7, 3.1e-6);
        cfg.x_t += 1.0;
        assert!(matches!(
            analytic_currents(&cfg),
            Err(Error::ModelDomain(_))
        ));
        let mut cfg = ideal([2e-6; 3], 0.7, 3.1e-6);
        cfg.couplings = CouplingSet::new([3.1e-6; 3], [2e-6; 3], [0.7, 0.72, 0.7], None).unwrap();
        assert!(matches!(
            analytic_currents(&cfg),
            Err(Error::ModelDomain(_))
        ));
    }

    #[test]
    fn decoupled_circuits() {
        let couplings = CouplingSet::new([1e-30; 3], [0.0; 3], [0.0; 3], None).unwrap();
        let cfg = SystemConfig {
            r_tx: [0.05; 3],
            r_rp: [0.05; 3],
            r_rx: 0.5,
            ..SystemConfig::ideal(omega(), 9.0, 20.0, 17.5, couplings)
        };
        let z = assemble_impedance(&cfg).unwrap();
        for a in 0..7 {
            for b in 0..7 {
                if a != b {
                    assert!(z[(a, b)].norm() < 1e-20);
                }
            }
        }
        let sol = solve_full(&cfg).unwrap();
        let expected = Complex64::new(9.0, 0.0) / Complex64::new(0.05, 17.5);
        for k in 0..3 {
            assert!(close(sol.i_tx[k], expected, 1e-12));
            assert!(sol.i_rp[k].norm() < 1e-20);
        }
        assert!(sol.i_rx.norm() < 1e-20);
    }

    #[test]
    fn polarity_is_sign_absorption() {
        let (a, b, c) = (1.2e-6, 0.8e-6, -0.3e-6);
        let flipped =
            ideal([a, b, c], 0.7, 3.1e-6).with_polarity([Sign::Pos, Sign::Neg, Sign::Pos]);
        let negated = ideal([a, -b, c], 0.7, 3.1e-6);
        assert_eq!(
            assemble_impedance(&flipped).unwrap(),
            assemble_impedance(&negated).unwrap()
        );
    }

    #[test]
    fn assembled_matrix_is_symmetric() {
        let mut cross = [[0.0; 7]; 7];
        cross[0][4] = 2e-8;
        cross[4][0] = 2e-8;
        let couplings =
            CouplingSet::new([3.1e-6; 3], [1e-6, 2e-6, -1e-6], [0.7; 3], Some(cross)).unwrap();
        let cfg = SystemConfig::ideal(omega(), 9.0, 20.0, 17.5, couplings).with_polarity([
            Sign::Neg,
            Sign::Pos,
            Sign::Neg,
        ]);
        let z = assemble_impedance(&cfg).unwrap();
        assert_eq!(z, z.transpose());
        assert!(z[(0, 4)].im < 0.0);
    }

    #[test]
    fn lossless_efficiency_is_one() {
        let mut cfg = ideal([1.5e-6, 0.2e-6, 1.1e-6], 0.7, 3.1e-6);
        cfg.x_t = 17.5;
        let sol = solve_full(&cfg).unwrap();
        assert!((sol.efficiency() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_balance_on_detuned_lossy_config() {
        let couplings = CouplingSet::new(
            [3.0e-6, 3.1e-6, 3.2e-6],
            [1.5e-6, -0.4e-6, 2.2e-6],
            [0.66, 0.7, 0.75],
            None,
        )
        .unwrap();
        let cfg = SystemConfig {
            r_tx: [0.049, 0.047, 0.039],
            r_rp: [0.055, 0.055, 0.037],
            r_rx: 0.469,
            ..SystemConfig::ideal(omega() * 1.01, 9.0, 20.0, 12.0, couplings)
        };
        let s = solve_full(&cfg).unwrap();
        let balance = s.p_out + s.total_loss();
        assert!(((s.p_in - balance) / s.p_in).abs() < 1e-9);
        assert_eq!(s.p_out, s.i_rx.norm_sqr() * 20.0);
    }

    #[test]
    fn singular_system_is_reported() {
        let couplings = CouplingSet::new([1e-300; 3], [0.0; 3], [0.0; 3], None).unwrap();
        let cfg = SystemConfig::ideal(omega(), 9.0, 20.0, 0.0, couplings);
        let r = solve_full(&cfg);
        assert!(matches!(r, Err(Error::SingularSystem { .. })), "{r:?}");
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = ideal([1e-6; 3], 0.7, 3.1e-6);
        cfg.r_load = 0.0;
        assert!(matches!(solve_full(&cfg), Err(Error::InvalidConfig(_))));
        let mut cfg = ideal([1e-6; 3], 0.7, 3.1e-6);
        cfg.r_rp[1] = -0.1;
        assert!(solve_full(&cfg).is_err());
    }

    #[test]
    fn tuning_nulls_input_reactance() {
        let cfg = ideal([1.2e-6, 0.4e-6, 2.0e-6], 0.7, 3.1e-6);
        let (r, x) = input_impedance(&cfg).unwrap();
        assert!(x
            .iter()
            .all(|v| v.abs() < 1e-12 * r.iter().cloned().fold(0.0, f64::max)));
    }

    #[test]
    fn input_resistance_symmetric_and_homogeneous() {
        let m = 1.7e-6;
        let (r, _) = input_impedance(&ideal([m; 3], 0.7, 3.1e-6)).unwrap();
        let expected = 3.1e-6f64.powi(2) * 20.0 / (3.0 * m * m);
        assert!(r.iter().all(|v| ((v - expected) / expected).abs() < 1e-14));
        let base = [1.0e-6, 2.0e-6, 0.5e-6];
        let (r1, _) = input_impedance(&ideal(base, 0.7, 3.1e-6)).unwrap();
        let (r2, _) = input_impedance(&ideal(base.map(|v| 2.0 * v), 0.7, 3.1e-6)).unwrap();
        for k in 0..3 {
            assert!((r1[k] / 4.0 - r2[k]).abs() < 1e-14 * r1[k]);
        }
    }

    #[test]
    fn input_impedance_undefined_without_coupling() {
        assert!(matches!(
            input_impedance(&ideal([1e-6, 0.0, 1e-6], 0.7, 3.1e-6)),
            Err(Error::UndefinedImpedance(_))
        ));
        assert!(matches!(
            input_impedance(&ideal([1e-6, -1e-6, 0.0], 0.7, 3.1e-6)),
            Err(Error::UndefinedImpedance(_))
        ));
    }

    #[test]
    fn receiver_loss_ratio() {
        let mut cfg = ideal([1e-6; 3], 0.7, 3.1e-6);
        cfg.r_rx = 0.469;
        let p = performance(&cfg).unwrap();
        assert!((p.xi_rx - 0.02345).abs() < 1e-15);
    }

    #[test]
    fn lossless_performance() {
        let p = performance(&ideal([1e-6, 2e-6, 0.3e-6], 0.7, 3.1e-6)).unwrap();
        assert_eq!(p.eta, 1.0);
        assert_eq!((p.xi_tx, p.xi_rp, p.xi_rx), (0.0, 0.0, 0.0));
    }

    #[test]
    fn output_power_scales_with_coupling_squared() {
        let base = [1e-6, 2e-6, 0.3e-6];
        let p1 = performance(&ideal(base, 0.7, 3.1e-6)).unwrap().p_out;
        let p2 = performance(&ideal(base.map(|v| 2.0 * v), 0.7, 3.1e-6))
            .unwrap()
            .p_out;
        assert!((p2 / p1 - 4.0).abs() < 1e-14);
    }

    #[test]
    fn efficiency_decomposition_is_consistent() {
        let mut cfg = ideal([1.5e-6, 0.5e-6, 2.0e-6], 0.7, 3.1e-6);
        cfg.r_tx = [0.049, 0.047, 0.039];
        cfg.r_rp = [0.055, 0.055, 0.037];
        cfg.r_rx = 0.469;
        let p = performance(&cfg).unwrap();
        assert!((p.eta - 1.0 / (1.0 + p.xi_tx + p.xi_rp + p.xi_rx)).abs() < 1e-12);
        assert!(p.eta > 0.9 && p.eta < 1.0);
    }

    #[test]
    fn degenerate_coupling_sum() {
        let mut cfg = ideal([1e-6, -1e-6, 0.0], 0.7, 3.1e-6);
        cfg.r_rp = [0.05; 3];
        let p = performance(&cfg).unwrap();
        assert!(p.degenerate);
        assert_eq!(p.eta, 0.0);
        assert!(p.xi_rp.is_infinite());
    }

    #[test]
    fn compensation_capacitor() {
        // Fully resonant (x_t = 0): C = 1/(ω² L).
        let c = series_capacitance(7.45e-6, omega(), 0.0);
        assert!((c - 1.0 / (omega() * omega() * 7.45e-6)).abs() < 1e-20);
    }
}
