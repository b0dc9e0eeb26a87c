//! Mutual inductance of posed circular filaments and multi-turn coils, and
//! the coupling set of the three-channel system.
//!
//! Sign convention: `M > 0` when current circulating positively about loop
//! `a`'s normal produces flux linking loop `b` positively about `b`'s normal.

pub mod elliptic;

use crate::error::{Error, Result};
use crate::geometry::{Coil, FilamentLoop, SystemLayout, Vec3};
use crate::quadrature::{adaptive_2d, QuadratureSpec};

use std::f64::consts::{PI, TAU};

/// Vacuum permeability, H/m (pre-2019 exact SI value).
pub const MU0: f64 = 4.0e-7 * PI;

/// Filaments closer than this are treated as touching.
pub const MIN_SEPARATION: f64 = 1e-6;

/// Channels whose Rp-to-Rx coupling falls below this fraction of the largest
/// one get their γ from the angular limit instead of the direct ratio.
const GAMMA_DEGENERATE_RATIO: f64 = 1e-6;
const GAMMA_LIMIT_STEP: f64 = 1e-3;

/// Orientation-independent frame of a loop: the axis is the normal folded
/// into a fixed hemisphere, `sign` records the fold. Flipping a loop's normal
/// therefore reuses the same quadrature nodes and negates the result exactly.
struct LoopFrame {
    center: Vec3,
    radius: f64,
    u: Vec3,
    v: Vec3,
    sign: f64,
}

impl LoopFrame {
    fn new(l: &FilamentLoop) -> Self {
        let n = l.pose.normal();
        let positive = n.z > 0.0 || (n.z == 0.0 && (n.y > 0.0 || (n.y == 0.0 && n.x > 0.0)));
        let (axis, sign) = if positive { (n, 1.0) } else { (-n, -1.0) };
        let helper = {
            let a = axis.abs();
            if a.x <= a.y && a.x <= a.z {
                Vec3::x()
            } else if a.y <= a.z {
                Vec3::y()
            } else {
                Vec3::z()
            }
        };
        let u = axis.cross(&helper).normalize();
        let v = axis.cross(&u);
        Self {
            center: l.pose.center(),
            radius: l.radius(),
            u,
            v,
            sign,
        }
    }

    #[inline]
    fn point(&self, s: f64) -> Vec3 {
        let (sin, cos) = s.sin_cos();
        self.center + self.radius * (cos * self.u + sin * self.v)
    }

    /// d(point)/ds.
    #[inline]
    fn tangent(&self, s: f64) -> Vec3 {
        let (sin, cos) = s.sin_cos();
        self.radius * (cos * self.v - sin * self.u)
    }
}

/// Smallest distance between points of two circular filaments.
pub fn min_separation(a: &FilamentLoop, b: &FilamentLoop) -> f64 {
    const SAMPLES: usize = 360;
    let fa = LoopFrame::new(a);
    let dist = |s: f64| b.distance_to_point(&fa.point(s));
    let step = TAU / SAMPLES as f64;
    let samples: Vec<f64> = (0..SAMPLES).map(|i| dist(i as f64 * step)).collect();
    let mut best = f64::INFINITY;
    for i in 0..SAMPLES {
        let prev = samples[(i + SAMPLES - 1) % SAMPLES];
        let next = samples[(i + 1) % SAMPLES];
        if samples[i] <= prev && samples[i] <= next {
            let s = i as f64 * step;
            best = best.min(golden_min(&dist, s - step, s + step));
        }
        best = best.min(samples[i]);
    }
    best
}

fn golden_min(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2)
}

/// Mutual inductance of two circular filaments from the Neumann double line
/// integral `M = µ0/4π ∮∮ dl_a·dl_b / |r_a - r_b|`, evaluated by adaptive
/// Gauss-Legendre quadrature over both loop angles.
pub fn loop_mutual(a: &FilamentLoop, b: &FilamentLoop, spec: &QuadratureSpec) -> Result<f64> {
    let separation = min_separation(a, b);
    if separation <= MIN_SEPARATION {
        return Err(Error::SingularGeometry {
            min_distance: separation,
        });
    }
    let fa = LoopFrame::new(a);
    let fb = LoopFrame::new(b);
    let integrand = |s: f64, t: f64| {
        let d = fa.point(s) - fb.point(t);
        fa.tangent(s).dot(&fb.tangent(t)) / d.norm()
    };
    let integral = adaptive_2d(integrand, (0.0, TAU), (0.0, TAU), 4, spec)?;
    Ok(fa.sign * fb.sign * MU0 / (4.0 * PI) * integral.value)
}

/// Sum of [`loop_mutual`] over all turn pairs.
pub fn coil_mutual(a: &Coil, b: &Coil, spec: &QuadratureSpec) -> Result<f64> {
    let mut total = 0.0;
    for la in a.loops() {
        for lb in b.loops() {
            total += loop_mutual(la, lb, spec)?;
        }
    }
    Ok(total)
}

/// Closed-form mutual inductance of two coaxial circular filaments (Maxwell):
/// `M = µ0 sqrt(r1 r2) ((2/k - k) K(k) - (2/k) E(k))`,
/// `k² = 4 r1 r2 / ((r1 + r2)² + gap²)`.
pub fn maxwell_coaxial(r1: f64, r2: f64, gap: f64) -> Result<f64> {
    if !(r1 > 0.0 && r2 > 0.0 && gap > 0.0)
        || !(r1.is_finite() && r2.is_finite() && gap.is_finite())
    {
        return Err(Error::InvalidGeometry(format!(
            "coaxial loops need positive radii and gap, got r1 = {r1}, r2 = {r2}, gap = {gap}"
        )));
    }
    let k = (4.0 * r1 * r2 / ((r1 + r2).powi(2) + gap * gap)).sqrt();
    // (2/k - k) K - (2/k) E = (2/k) ((1 - k²/2) K - E)
    Ok(MU0 * (r1 * r2).sqrt() * 2.0 / k * elliptic::coaxial_kernel(k))
}

/// 7×7 coupling matrix in the order Tx1..Tx3, Rp1..Rp3, Rx.
pub type CrossMatrix = [[f64; 7]; 7];

/// Inductive coupling state of the three-channel system.
///
/// `gamma_m` is always stored as `gamma * m`, so the Tx-to-Rx vector is
/// exactly proportional to the Rp-to-Rx vector channel by channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSet {
    m0: [f64; 3],
    m: [f64; 3],
    gamma: [f64; 3],
    gamma_m: [f64; 3],
    cross: Option<CrossMatrix>,
}

impl CouplingSet {
    pub fn new(
        m0: [f64; 3],
        m: [f64; 3],
        gamma: [f64; 3],
        cross: Option<CrossMatrix>,
    ) -> Result<Self> {
        if let Some(bad) = m0.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "M0 must be positive in every channel, got {bad}"
            )));
        }
        if m.iter().chain(&gamma).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("couplings must be finite".into()));
        }
        if let Some(c) = &cross {
            for i in 0..7 {
                for j in 0..i {
                    let scale = c[i][j].abs().max(c[j][i].abs());
                    if (c[i][j] - c[j][i]).abs() > 1e-12 * scale {
                        return Err(Error::InvalidConfig(format!(
                            "coupling matrix not symmetric at ({i}, {j})"
                        )));
                    }
                }
            }
        }
        let gamma_m = [0, 1, 2].map(|i| gamma[i] * m[i]);
        Ok(Self {
            m0,
            m,
            gamma,
            gamma_m,
            cross,
        })
    }

    /// Identical channels: one M0 and one γ.
    pub fn uniform(m0: f64, m: [f64; 3], gamma: f64) -> Result<Self> {
        Self::new([m0; 3], m, [gamma; 3], None)
    }

    pub fn m0(&self) -> [f64; 3] {
        self.m0
    }

    pub fn m(&self) -> [f64; 3] {
        self.m
    }

    pub fn gamma(&self) -> [f64; 3] {
        self.gamma
    }

    pub fn gamma_m(&self) -> [f64; 3] {
        self.gamma_m
    }

    pub fn cross(&self) -> Option<&CrossMatrix> {
        self.cross.as_ref()
    }

    pub fn mean_m0(&self) -> f64 {
        self.m0.iter().sum::<f64>() / 3.0
    }

    /// The common γ when all three channels share it (within 1e-12 relative).
    pub fn scalar_gamma(&self) -> Option<f64> {
        let g = self.gamma[0];
        self.gamma
            .iter()
            .all(|x| (x - g).abs() <= 1e-12 * g.abs().max(f64::MIN_POSITIVE))
            .then_some(g)
    }

    /// Largest |entry| of the cross-channel part of the 7×7 matrix.
    pub fn max_cross_channel(&self) -> Option<f64> {
        self.cross.as_ref().map(|c| {
            let mut best: f64 = 0.0;
            for i in 0..6 {
                for j in 0..6 {
                    if i % 3 != j % 3 {
                        best = best.max(c[i][j].abs());
                    }
                }
            }
            best
        })
    }

    pub fn without_cross(&self) -> Self {
        Self {
            cross: None,
            ..self.clone()
        }
    }
}

/// Couplings inside the transmitter cluster; independent of the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCouplings {
    pub m0: [f64; 3],
    /// Tx_i-to-Rp_j for i != j (indexed `[i][j]`, diagonal unused).
    pub tx_rp_cross: Option<[[f64; 3]; 3]>,
}

/// Computes M0 per channel and, when requested, the Tx_i-to-Rp_j cross terms.
///
/// Tx-to-Tx and Rp-to-Rp couplings are not computed: the three coils of each
/// set are concentric orthogonal circles of equal radius, whose filaments
/// cross each other, and the coupling of the full symmetric stack vanishes.
pub fn cluster_couplings(
    layout: &SystemLayout,
    spec: &QuadratureSpec,
    include_cross: bool,
) -> Result<ClusterCouplings> {
    let mut m0 = [0.0; 3];
    for (i, slot) in m0.iter_mut().enumerate() {
        *slot = coil_mutual(&layout.tx[i], &layout.rp[i], spec)?;
    }
    let tx_rp_cross = if include_cross {
        let mut c = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    c[i][j] = coil_mutual(&layout.tx[i], &layout.rp[j], spec)?;
                }
            }
        }
        Some(c)
    } else {
        None
    };
    Ok(ClusterCouplings { m0, tx_rp_cross })
}

/// Rp-to-Rx (`m`) and Tx-to-Rx (`Γ`) couplings at the layout's receiver pose.
pub fn rx_couplings(layout: &SystemLayout, spec: &QuadratureSpec) -> Result<([f64; 3], [f64; 3])> {
    let mut m = [0.0; 3];
    let mut g = [0.0; 3];
    for i in 0..3 {
        m[i] = coil_mutual(&layout.rp[i], &layout.rx, spec)?;
        g[i] = coil_mutual(&layout.tx[i], &layout.rx, spec)?;
    }
    Ok((m, g))
}

/// Full coupling set of a layout.
pub fn coupling_set(
    layout: &SystemLayout,
    spec: &QuadratureSpec,
    include_cross: bool,
) -> Result<CouplingSet> {
    let cluster = cluster_couplings(layout, spec, include_cross)?;
    coupling_set_with(&cluster, layout, spec)
}

/// Coupling set reusing precomputed cluster couplings.
///
/// γᵢ is the ratio Γᵢ/Mᵢ. Where Mᵢ vanishes (the receiver sits on a zero
/// crossing of that channel) the ratio is replaced by its limit along the
/// receiver circle, a central difference of Γᵢ and Mᵢ in the receiver angle.
pub fn coupling_set_with(
    cluster: &ClusterCouplings,
    layout: &SystemLayout,
    spec: &QuadratureSpec,
) -> Result<CouplingSet> {
    let (m, raw_gamma_m) = rx_couplings(layout, spec)?;
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut gamma = [0.0; 3];
    for i in 0..3 {
        gamma[i] = if scale > 0.0 && m[i].abs() > GAMMA_DEGENERATE_RATIO * scale {
            raw_gamma_m[i] / m[i]
        } else if scale > 0.0 {
            gamma_limit(layout, i, spec)?
        } else {
            0.0
        };
    }
    let cross = cluster.tx_rp_cross.map(|txrp| {
        let mut c = [[0.0; 7]; 7];
        let coils = layout.coils();
        for (k, coil) in coils.iter().enumerate() {
            c[k][k] = coil.self_inductance();
        }
        for i in 0..3 {
            for j in 0..3 {
                let v = if i == j { cluster.m0[i] } else { txrp[i][j] };
                c[i][3 + j] = v;
                c[3 + j][i] = v;
            }
            c[i][6] = gamma[i] * m[i];
            c[6][i] = c[i][6];
            c[3 + i][6] = m[i];
            c[6][3 + i] = m[i];
        }
        c
    });
    CouplingSet::new(cluster.m0, m, gamma, cross)
}

fn gamma_limit(layout: &SystemLayout, channel: usize, spec: &QuadratureSpec) -> Result<f64> {
    let theta = layout.rx_angle();
    let ahead = layout.rotate_rx(theta + GAMMA_LIMIT_STEP);
    let behind = layout.rotate_rx(theta - GAMMA_LIMIT_STEP);
    let dm = coil_mutual(&ahead.rp[channel], &ahead.rx, spec)?
        - coil_mutual(&behind.rp[channel], &behind.rx, spec)?;
    let dg = coil_mutual(&ahead.tx[channel], &ahead.rx, spec)?
        - coil_mutual(&behind.tx[channel], &behind.rx, spec)?;
    if dm == 0.0 {
        return Ok(0.0);
    }
    Ok(dg / dm)
}
