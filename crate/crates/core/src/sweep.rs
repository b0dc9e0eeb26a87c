//! Receiver-angle sweep: couplings → polarity control → full solve per
//! angle, plus CSV output and a summary report.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuit::{solve_full, tune_xt, PhasorSolution, Sign, SystemConfig};
use crate::controller::{run_controller, PolarityState};
use crate::error::{Error, Result};
use crate::geometry::SystemLayout;
use crate::magnetics::{cluster_couplings, coupling_set_with, ClusterCouplings, CouplingSet};
use crate::scenario::{Scenario, XtSetting};
use crate::verify::thresholds;

/// One receiver position.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub angle_deg: f64,
    /// Rp-to-Rx couplings before polarity, H.
    pub m: [f64; 3],
    pub gamma: [f64; 3],
    pub signs: [Sign; 3],
    pub i_tx: [Complex64; 3],
    pub i_rp: [Complex64; 3],
    pub i_rx: Complex64,
    /// Σ|mᵢ|, H.
    pub m_sum_abs: f64,
    pub p_in: f64,
    pub p_out: f64,
    /// Total dissipation in the coil resistances.
    pub p_loss: f64,
    pub eta: f64,
    pub controller_iterations: usize,
    pub error: Option<String>,
}

impl SweepRecord {
    fn failed(angle_deg: f64, couplings: Option<&CouplingSet>, error: &Error) -> Self {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        let (m, gamma) = couplings
            .map(|c| (c.m(), c.gamma()))
            .unwrap_or(([f64::NAN; 3], [f64::NAN; 3]));
        Self {
            angle_deg,
            m,
            gamma,
            signs: [Sign::Pos; 3],
            i_tx: [nan; 3],
            i_rp: [nan; 3],
            i_rx: nan,
            m_sum_abs: m.iter().map(|v| v.abs()).sum(),
            p_in: f64::NAN,
            p_out: f64::NAN,
            p_loss: f64::NAN,
            eta: f64::NAN,
            controller_iterations: 0,
            error: Some(error.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Records of a sweep and the angle-independent quantities behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub records: Vec<SweepRecord>,
    pub m0: [f64; 3],
    /// Largest cross-channel coupling, when computed.
    pub max_cross: Option<f64>,
    /// Mean γ over all channels and angles.
    pub gamma_mean: f64,
    /// X_t that would null the input reactance for `gamma_mean` and mean M0.
    pub x_t_auto: f64,
    pub x_t_used: f64,
    pub omega0: f64,
    pub v_s: f64,
    pub r_load: f64,
}

impl Sweep {
    pub fn mean_m0(&self) -> f64 {
        self.m0.iter().sum::<f64>() / 3.0
    }
}

/// Per-angle couplings in sweep order.
pub type CouplingTrace = Vec<(f64, Result<CouplingSet>)>;

/// Couplings at every sweep angle. The angle-independent cluster couplings
/// are computed once; per-angle failures are kept in place.
pub fn coupling_trace(scenario: &Scenario) -> Result<(ClusterCouplings, CouplingTrace)> {
    scenario.validate()?;
    let params = scenario.layout_params();
    let quad = scenario.quadrature_spec();
    let angles = scenario.angles_deg();
    let base = SystemLayout::build(&params, angles[0].to_radians())?;
    let cluster = cluster_couplings(&base, &quad, scenario.electrical.include_cross)?;
    let trace = angles
        .par_iter()
        .map(|&deg| {
            let c = SystemLayout::build(&params, deg.to_radians())
                .and_then(|layout| coupling_set_with(&cluster, &layout, &quad));
            (deg, c)
        })
        .collect();
    Ok((cluster, trace))
}

fn lossy_config(scenario: &Scenario, x_t: f64, couplings: CouplingSet) -> SystemConfig {
    let params = scenario.layout_params();
    SystemConfig {
        omega0: scenario.omega0(),
        v_s: scenario.v_s(),
        r_tx: params.tx.map(|c| c.resistance),
        r_rp: params.rp.map(|c| c.resistance),
        r_rx: params.rx.resistance,
        r_load: scenario.electrical.r_load_ohm,
        x_t,
        polarity: [Sign::Pos; 3],
        couplings,
    }
}

/// Controlled full solve at one receiver angle, starting from all-positive
/// polarity. With `x_t_ohm = "auto"` the reactance is tuned to this angle's
/// mean γ.
///
/// Where two channels cancel exactly (a coupling zero crossing with all signs
/// positive) no transmitter current is out of phase and the controller has
/// nothing to act on; the sweep avoids this by carrying polarity forward.
pub fn solve_at(
    scenario: &Scenario,
    angle_deg: f64,
) -> Result<(SystemConfig, PolarityState, PhasorSolution)> {
    scenario.validate()?;
    let params = scenario.layout_params();
    let quad = scenario.quadrature_spec();
    let layout = SystemLayout::build(&params, angle_deg.to_radians())?;
    let cluster = cluster_couplings(&layout, &quad, scenario.electrical.include_cross)?;
    let couplings = coupling_set_with(&cluster, &layout, &quad)?;
    let x_t = match scenario.electrical.x_t_ohm {
        XtSetting::Ohms(x) => x,
        XtSetting::Auto(_) => {
            let gamma = couplings.gamma().iter().sum::<f64>() / 3.0;
            tune_xt(gamma, couplings.mean_m0(), scenario.omega0())
        }
    };
    let config = lossy_config(scenario, x_t, couplings);
    let (config, state) = run_controller(&config, &scenario.controller_settings())?;
    let solution = solve_full(&config)?;
    Ok((config, state, solution))
}

/// Runs the scenario's sweep. Setup failures (invalid geometry, cluster
/// couplings) abort; failures at a single angle are stored in that record.
pub fn run_sweep(scenario: &Scenario) -> Result<Sweep> {
    let (cluster, trace) = coupling_trace(scenario)?;
    let (angles, couplings): (Vec<f64>, Vec<Result<CouplingSet>>) = trace.into_iter().unzip();

    let gammas: Vec<f64> = couplings
        .iter()
        .filter_map(|c| c.as_ref().ok())
        .flat_map(|c| c.gamma())
        .collect();
    let gamma_mean = if gammas.is_empty() {
        f64::NAN
    } else {
        gammas.iter().sum::<f64>() / gammas.len() as f64
    };
    let m0_mean = cluster.m0.iter().sum::<f64>() / 3.0;
    let omega0 = scenario.omega0();
    let x_t_auto = tune_xt(gamma_mean, m0_mean, omega0);
    let x_t_used = match scenario.electrical.x_t_ohm {
        XtSetting::Ohms(x) => x,
        XtSetting::Auto(_) => x_t_auto,
    };

    // Sweep angles are visited in order and the controller starts from the
    // polarity it converged to at the previous angle.
    let settings = scenario.controller_settings();
    let mut polarity = [Sign::Pos; 3];
    let mut records = Vec::with_capacity(angles.len());
    for (&deg, coupling) in angles.iter().zip(&couplings) {
        let coupling = match coupling {
            Ok(c) => c,
            Err(e) => {
                records.push(SweepRecord::failed(deg, None, e));
                continue;
            }
        };
        let config = lossy_config(scenario, x_t_used, coupling.clone()).with_polarity(polarity);
        let solved = run_controller(&config, &settings)
            .and_then(|(cfg, state)| Ok((solve_full(&cfg)?, state)));
        let record = match solved {
            Ok((sol, state)) => {
                polarity = state.signs;
                let m = coupling.m();
                SweepRecord {
                    angle_deg: deg,
                    m,
                    gamma: coupling.gamma(),
                    signs: state.signs,
                    i_tx: sol.i_tx,
                    i_rp: sol.i_rp,
                    i_rx: sol.i_rx,
                    m_sum_abs: m.iter().map(|v| v.abs()).sum(),
                    p_in: sol.p_in,
                    p_out: sol.p_out,
                    p_loss: sol.total_loss(),
                    eta: sol.efficiency(),
                    controller_iterations: state.iterations,
                    error: None,
                }
            }
            Err(e) => SweepRecord::failed(deg, Some(coupling), &e),
        };
        records.push(record);
    }

    let max_cross = cluster.tx_rp_cross.map(|c| {
        let mut best: f64 = 0.0;
        for (i, row) in c.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if i != j {
                    best = best.max(v.abs());
                }
            }
        }
        best
    });

    Ok(Sweep {
        records,
        m0: cluster.m0,
        max_cross,
        gamma_mean,
        x_t_auto,
        x_t_used,
        omega0,
        v_s: scenario.v_s(),
        r_load: scenario.electrical.r_load_ohm,
    })
}

pub const CSV_HEADER: [&str; 31] = [
    "angle_deg",
    "M1_uH",
    "M2_uH",
    "M3_uH",
    "gamma1",
    "gamma2",
    "gamma3",
    "s1",
    "s2",
    "s3",
    "ITx1_A",
    "ITx1_deg",
    "ITx2_A",
    "ITx2_deg",
    "ITx3_A",
    "ITx3_deg",
    "IRp1_A",
    "IRp1_deg",
    "IRp2_A",
    "IRp2_deg",
    "IRp3_A",
    "IRp3_deg",
    "IRx_A",
    "IRx_deg",
    "Msum_uH",
    "Pout_W",
    "eta",
    "ctrl_iters",
    "error",
    "Pin_W",
    "Ploss_W",
];

// The documented column set ends at `error`; power-flow columns follow it.
const DOCUMENTED_COLUMNS: usize = 29;

fn sci(v: f64) -> String {
    format!("{v:e}")
}

/// Writes records as CSV: one header row, one row per record. Complex
/// currents are magnitude / phase-in-degrees pairs; couplings are in µH.
pub fn write_csv<W: Write>(records: &[SweepRecord], writer: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let mut row: Vec<String> = Vec::with_capacity(CSV_HEADER.len());
        row.push(sci(r.angle_deg));
        row.extend(r.m.iter().map(|m| sci(m * 1e6)));
        row.extend(r.gamma.iter().map(|g| sci(*g)));
        row.extend(r.signs.iter().map(|s| s.to_string()));
        for c in r.i_tx.iter().chain(&r.i_rp).chain([&r.i_rx]) {
            row.push(sci(c.norm()));
            row.push(sci(c.arg().to_degrees()));
        }
        row.push(sci(r.m_sum_abs * 1e6));
        row.push(sci(r.p_out));
        row.push(sci(r.eta));
        row.push(r.controller_iterations.to_string());
        row.push(r.error.clone().unwrap_or_default());
        row.push(sci(r.p_in));
        row.push(sci(r.p_loss));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the CSV file; nothing is created when `records` is empty.
pub fn emit_csv(records: &[SweepRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let file = std::fs::File::create(path)?;
    write_csv(records, std::io::BufWriter::new(file))
}

/// Parses CSV produced by [`write_csv`].
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<SweepRecord>> {
    let mut rd = csv::Reader::from_reader(reader);
    let header = rd.headers()?.clone();
    if header.len() < DOCUMENTED_COLUMNS || header.iter().zip(CSV_HEADER).any(|(a, b)| a != b) {
        return Err(Error::InvalidConfig("unexpected CSV header".into()));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let num = |i: usize| -> Result<f64> {
            row.get(i)
                .unwrap_or("NaN")
                .parse::<f64>()
                .map_err(|e| Error::InvalidConfig(format!("column {}: {e}", CSV_HEADER[i])))
        };
        let sign = |i: usize| -> Result<Sign> {
            row.get(i)
                .and_then(|s| s.parse::<i8>().ok())
                .and_then(Sign::from_i8)
                .ok_or_else(|| Error::InvalidConfig(format!("column {}: bad sign", CSV_HEADER[i])))
        };
        let phasor = |i: usize| -> Result<Complex64> {
            Ok(Complex64::from_polar(num(i)?, num(i + 1)?.to_radians()))
        };
        let error = row.get(28).filter(|s| !s.is_empty()).map(str::to_string);
        out.push(SweepRecord {
            angle_deg: num(0)?,
            m: [num(1)? * 1e-6, num(2)? * 1e-6, num(3)? * 1e-6],
            gamma: [num(4)?, num(5)?, num(6)?],
            signs: [sign(7)?, sign(8)?, sign(9)?],
            i_tx: [phasor(10)?, phasor(12)?, phasor(14)?],
            i_rp: [phasor(16)?, phasor(18)?, phasor(20)?],
            i_rx: phasor(22)?,
            m_sum_abs: num(24)? * 1e-6,
            p_out: num(25)?,
            eta: num(26)?,
            controller_iterations: row
                .get(27)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidConfig("column ctrl_iters".into()))?,
            error,
            p_in: if row.len() > 29 { num(29)? } else { f64::NAN },
            p_loss: if row.len() > 30 { num(30)? } else { f64::NAN },
        });
    }
    Ok(out)
}

/// Number of strict local minima of `values`, treated as periodic when
/// `cyclic` is set.
pub fn count_local_minima(values: &[f64], cyclic: bool) -> usize {
    let n = values.len();
    if n < 3 {
        return 0;
    }
    let range: Box<dyn Iterator<Item = usize>> = if cyclic {
        Box::new(0..n)
    } else {
        Box::new(1..n - 1)
    };
    range
        .filter(|&i| {
            let prev = values[(i + n - 1) % n];
            let next = values[(i + 1) % n];
            values[i] < prev && values[i] <= next
        })
        .count()
}

/// P_out of the valid records over one revolution, dropping a duplicated
/// 360° endpoint. Returns the trace and whether it wraps around.
pub fn revolution_trace(records: &[SweepRecord]) -> (Vec<f64>, bool) {
    let ok: Vec<&SweepRecord> = records.iter().filter(|r| r.is_ok()).collect();
    if ok.len() < 2 {
        return (ok.iter().map(|r| r.p_out).collect(), false);
    }
    let first = ok[0].angle_deg;
    let last = ok[ok.len() - 1].angle_deg;
    let step = ok[1].angle_deg - first;
    let wraps = (last - first - 360.0).abs() < 1e-9 || (last + step - first - 360.0).abs() < 1e-9;
    let mut trace: Vec<f64> = ok.iter().map(|r| r.p_out).collect();
    if wraps && (last - first - 360.0).abs() < 1e-9 {
        trace.pop();
    }
    (trace, wraps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Aggregate view of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub records: usize,
    pub failed: usize,
    pub eta_min: f64,
    pub eta_mean: f64,
    pub eta_max: f64,
    pub p_out_min: f64,
    pub p_out_max: f64,
    /// `(max - min) / max` of P_out.
    pub p_out_ripple: f64,
    pub m_sum_range: (f64, f64),
    pub gamma_range: (f64, f64),
    pub m0: [f64; 3],
    pub max_cross: Option<f64>,
    pub x_t_auto: f64,
    pub x_t_used: f64,
    /// Local minima of P_out per revolution; `None` unless the sweep covers one.
    pub dips: Option<usize>,
    pub verdicts: Vec<Verdict>,
}

impl Summary {
    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Statistics and threshold verdicts of a sweep.
pub fn summarize(sweep: &Sweep) -> Result<Summary> {
    if sweep.records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let ok: Vec<&SweepRecord> = sweep.records.iter().filter(|r| r.is_ok()).collect();
    let n = ok.len().max(1) as f64;
    let (eta_min, eta_max) = min_max(ok.iter().map(|r| r.eta));
    let eta_mean = ok.iter().map(|r| r.eta).sum::<f64>() / n;
    let (p_out_min, p_out_max) = min_max(ok.iter().map(|r| r.p_out));
    let p_out_ripple = if p_out_max > 0.0 {
        (p_out_max - p_out_min) / p_out_max
    } else {
        0.0
    };
    let m_sum_range = min_max(ok.iter().map(|r| r.m_sum_abs));
    let gamma_range = min_max(ok.iter().flat_map(|r| r.gamma));
    let (trace, wraps) = revolution_trace(&sweep.records);
    let dips = wraps.then(|| count_local_minima(&trace, true));

    let m0_mean = sweep.mean_m0();
    let mut verdicts = vec![
        Verdict {
            name: "gamma band",
            passed: gamma_range.0 >= thresholds::GAMMA_BAND.0
                && gamma_range.1 <= thresholds::GAMMA_BAND.1,
            detail: format!(
                "gamma in [{:.4}, {:.4}], required within [{}, {}]",
                gamma_range.0,
                gamma_range.1,
                thresholds::GAMMA_BAND.0,
                thresholds::GAMMA_BAND.1
            ),
        },
        Verdict {
            name: "auto X_t band",
            passed: (thresholds::XT_AUTO_BAND.0..=thresholds::XT_AUTO_BAND.1)
                .contains(&sweep.x_t_auto),
            detail: format!(
                "X_t(auto) = {:.3} ohm, required within [{}, {}]",
                sweep.x_t_auto,
                thresholds::XT_AUTO_BAND.0,
                thresholds::XT_AUTO_BAND.1
            ),
        },
        Verdict {
            name: "M0",
            passed: sweep.m0.iter().all(|m| {
                (m - thresholds::M0_NOMINAL).abs()
                    <= thresholds::M0_REL_TOL * thresholds::M0_NOMINAL
            }),
            detail: format!(
                "M0 = [{:.4}, {:.4}, {:.4}] uH, required {} uH +/- {:.0} %",
                sweep.m0[0] * 1e6,
                sweep.m0[1] * 1e6,
                sweep.m0[2] * 1e6,
                thresholds::M0_NOMINAL * 1e6,
                thresholds::M0_REL_TOL * 100.0
            ),
        },
        Verdict {
            name: "efficiency floor",
            passed: eta_min >= thresholds::ETA_FLOOR,
            detail: format!(
                "min eta = {eta_min:.4}, required >= {}",
                thresholds::ETA_FLOOR
            ),
        },
        Verdict {
            name: "mean efficiency",
            passed: (thresholds::ETA_MEAN_BAND.0..=thresholds::ETA_MEAN_BAND.1).contains(&eta_mean),
            detail: format!(
                "mean eta = {eta_mean:.4}, required within [{}, {}]",
                thresholds::ETA_MEAN_BAND.0,
                thresholds::ETA_MEAN_BAND.1
            ),
        },
    ];
    if let Some(cross) = sweep.max_cross {
        verdicts.push(Verdict {
            name: "cross coupling",
            passed: cross * thresholds::CROSS_RATIO <= m0_mean,
            detail: format!(
                "max cross-channel coupling {:.3} nH, required <= M0/{}",
                cross * 1e9,
                thresholds::CROSS_RATIO
            ),
        });
    }
    if let Some(d) = dips {
        verdicts.push(Verdict {
            name: "output power dips",
            passed: d == thresholds::DIPS_PER_REVOLUTION,
            detail: format!(
                "{d} local minima per revolution, expected {}",
                thresholds::DIPS_PER_REVOLUTION
            ),
        });
    }
    if sweep.records.len() != ok.len() {
        verdicts.push(Verdict {
            name: "all angles solved",
            passed: false,
            detail: format!(
                "{} of {} angles failed",
                sweep.records.len() - ok.len(),
                sweep.records.len()
            ),
        });
    }

    Ok(Summary {
        records: sweep.records.len(),
        failed: sweep.records.len() - ok.len(),
        eta_min,
        eta_mean,
        eta_max,
        p_out_min,
        p_out_max,
        p_out_ripple,
        m_sum_range,
        gamma_range,
        m0: sweep.m0,
        max_cross: sweep.max_cross,
        x_t_auto: sweep.x_t_auto,
        x_t_used: sweep.x_t_used,
        dips,
        verdicts,
    })
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "records            {} ({} failed)",
            self.records, self.failed
        )?;
        writeln!(
            f,
            "efficiency         min {:.4}  mean {:.4}  max {:.4}",
            self.eta_min, self.eta_mean, self.eta_max
        )?;
        writeln!(
            f,
            "output power       min {:.4} W  max {:.4} W  min/max {:.4}  ripple {:.4}",
            self.p_out_min,
            self.p_out_max,
            if self.p_out_max > 0.0 {
                self.p_out_min / self.p_out_max
            } else {
                1.0
            },
            self.p_out_ripple
        )?;
        writeln!(
            f,
            "M_sum (|M| sum)    {:.4} .. {:.4} uH",
            self.m_sum_range.0 * 1e6,
            self.m_sum_range.1 * 1e6
        )?;
        writeln!(
            f,
            "gamma              {:.4} .. {:.4}",
            self.gamma_range.0, self.gamma_range.1
        )?;
        writeln!(
            f,
            "M0                 {:.4} / {:.4} / {:.4} uH",
            self.m0[0] * 1e6,
            self.m0[1] * 1e6,
            self.m0[2] * 1e6
        )?;
        if let Some(c) = self.max_cross {
            writeln!(f, "max cross coupling {:.4} nH", c * 1e9)?;
        }
        writeln!(
            f,
            "X_t                auto {:.4} ohm, used {:.4} ohm",
            self.x_t_auto, self.x_t_used
        )?;
        if let Some(d) = self.dips {
            writeln!(f, "P_out dips         {d} per revolution")?;
        }
        for v in &self.verdicts {
            writeln!(
                f,
                "[{}] {}: {}",
                if v.passed { "PASS" } else { "FAIL" },
                v.name,
                v.detail
            )?;
        }
        Ok(())
    }
}
