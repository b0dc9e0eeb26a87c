//! Coils as stacks of circular filaments posed in 3D, and the three-channel
//! transmitter/repeater/receiver arrangement.
//!
//! Coordinates: `z` is vertical, the receiver moves in the `z = 0` plane, and
//! the zero receiver angle lies on the `+x` axis. All lengths are meters.

use nalgebra::{Rotation3, Unit, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

const NORMAL_TOLERANCE: f64 = 1e-12;
const ORTHOGONALITY_TOLERANCE: f64 = 1e-9;

/// Position and orientation of a planar filament. The normal fixes the
/// positive circulation by the right-hand rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    center: Vec3,
    normal: Vec3,
}

impl Pose {
    /// Builds a pose, normalizing `normal`. Fails on a zero or non-finite normal.
    pub fn new(center: Vec3, normal: Vec3) -> Result<Self> {
        let norm = normal.norm();
        if !(norm.is_finite() && norm > 0.0) || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "pose needs a finite center and non-zero normal, got {center:?} / {normal:?}"
            )));
        }
        Ok(Self {
            center,
            normal: normal / norm,
        })
    }

    /// Origin, normal `+z`.
    pub fn identity() -> Self {
        Self {
            center: Vec3::zeros(),
            normal: Vec3::z(),
        }
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    /// Same position, opposite circulation.
    pub fn flipped(&self) -> Self {
        Self {
            center: self.center,
            normal: -self.normal,
        }
    }

    /// Applies the rigid motion `x -> rotation * x + translation`.
    pub fn transformed(&self, rotation: &Rotation3<f64>, translation: &Vec3) -> Self {
        let normal = rotation * self.normal;
        Self {
            center: rotation * self.center + translation,
            normal: normal / normal.norm(),
        }
    }
}

/// A single closed circular current filament.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilamentLoop {
    pub pose: Pose,
    radius: f64,
}

impl FilamentLoop {
    pub fn new(pose: Pose, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "loop radius must be positive, got {radius}"
            )));
        }
        Ok(Self { pose, radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn flipped(&self) -> Self {
        Self {
            pose: self.pose.flipped(),
            radius: self.radius,
        }
    }

    pub fn transformed(&self, rotation: &Rotation3<f64>, translation: &Vec3) -> Self {
        Self {
            pose: self.pose.transformed(rotation, translation),
            radius: self.radius,
        }
    }

    /// Uniform scaling of all lengths about the origin.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            Pose::new(self.pose.center * factor, self.pose.normal)?,
            self.radius * factor,
        )
    }

    /// Shortest distance from `point` to the filament.
    pub fn distance_to_point(&self, point: &Vec3) -> f64 {
        let q = point - self.pose.center;
        let axial = q.dot(&self.pose.normal);
        let radial = (q - axial * self.pose.normal).norm();
        (axial * axial + (radial - self.radius).powi(2)).sqrt()
    }
}

/// A multi-turn coil: geometric turns plus measured electrical data.
#[derive(Debug, Clone, PartialEq)]
pub struct Coil {
    pub label: String,
    loops: Vec<FilamentLoop>,
    series_resistance: f64,
    self_inductance: f64,
    /// Measured Q, informational only; 0 when not measured.
    pub quality_factor: f64,
}

impl Coil {
    pub fn new(
        label: impl Into<String>,
        loops: Vec<FilamentLoop>,
        series_resistance: f64,
        self_inductance: f64,
        quality_factor: f64,
    ) -> Result<Self> {
        let label = label.into();
        let Some(first) = loops.first() else {
            return Err(Error::InvalidGeometry(format!("coil {label} has no turns")));
        };
        let r0 = first.radius();
        if let Some(bad) = loops.iter().find(|l| (l.radius() - r0).abs() > 0.01 * r0) {
            return Err(Error::InvalidGeometry(format!(
                "coil {label}: turn radius {} deviates more than 1 % from {r0}",
                bad.radius()
            )));
        }
        if !(series_resistance.is_finite() && series_resistance >= 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "coil {label}: series resistance must be >= 0, got {series_resistance}"
            )));
        }
        if !(self_inductance.is_finite() && self_inductance > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "coil {label}: self inductance must be > 0, got {self_inductance}"
            )));
        }
        Ok(Self {
            label,
            loops,
            series_resistance,
            self_inductance,
            quality_factor,
        })
    }

    pub fn loops(&self) -> &[FilamentLoop] {
        &self.loops
    }

    pub fn series_resistance(&self) -> f64 {
        self.series_resistance
    }

    pub fn self_inductance(&self) -> f64 {
        self.self_inductance
    }

    /// Center of the turn stack.
    pub fn center(&self) -> Vec3 {
        let sum: Vec3 = self.loops.iter().map(|l| l.pose.center).sum();
        sum / self.loops.len() as f64
    }

    pub fn normal(&self) -> Vec3 {
        self.loops[0].pose.normal
    }

    fn transformed(&self, rotation: &Rotation3<f64>, translation: &Vec3) -> Self {
        Self {
            loops: self
                .loops
                .iter()
                .map(|l| l.transformed(rotation, translation))
                .collect(),
            ..self.clone()
        }
    }
}

/// A coil of `turns` parallel circles of equal radius, spaced `pitch` along
/// the pose normal and centered on the pose center.
pub fn make_helical_coil(
    label: impl Into<String>,
    radius: f64,
    turns: usize,
    pitch: f64,
    pose: Pose,
    resistance: f64,
    inductance: f64,
) -> Result<Coil> {
    if turns == 0 {
        return Err(Error::InvalidGeometry(
            "coil needs at least one turn".into(),
        ));
    }
    if !(pitch.is_finite() && pitch >= 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "pitch must be >= 0, got {pitch}"
        )));
    }
    let mid = (turns as f64 - 1.0) / 2.0;
    let loops = (0..turns)
        .map(|k| {
            let offset = (k as f64 - mid) * pitch;
            FilamentLoop::new(
                Pose::new(pose.center + offset * pose.normal, pose.normal)?,
                radius,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Coil::new(label, loops, resistance, inductance, 0.0)
}

/// Winding shape and measured electrical data of one coil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoilSpec {
    pub radius: f64,
    pub turns: usize,
    pub resistance: f64,
    pub inductance: f64,
    pub quality_factor: f64,
}

/// Everything needed to build a [`SystemLayout`] apart from the receiver angle.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutParams {
    pub tx: [CoilSpec; 3],
    pub rp: [CoilSpec; 3],
    pub rx: CoilSpec,
    /// Turn spacing shared by all coils.
    pub pitch: f64,
    /// Shift of each repeater along its axis relative to its transmitter.
    pub pair_axial_offset: f64,
    pub rx_distance: f64,
}

impl LayoutParams {
    /// Prototype geometry: 260 mm / 300 mm three-turn Tx / Rp coils, a
    /// 300 mm ten-turn receiver 200 mm from the cluster center, and the
    /// measured inductances and resistances of each coil.
    pub fn prototype() -> Self {
        let spec = |radius, turns, l_uh: f64, r_mohm: f64, q| CoilSpec {
            radius,
            turns,
            resistance: r_mohm * 1e-3,
            inductance: l_uh * 1e-6,
            quality_factor: q,
        };
        Self {
            tx: [
                spec(0.130, 3, 6.41, 49.0, 490.0),
                spec(0.130, 3, 6.33, 47.0, 505.0),
                spec(0.130, 3, 6.43, 39.0, 620.0),
            ],
            rp: [
                spec(0.150, 3, 7.39, 55.0, 510.0),
                spec(0.150, 3, 7.45, 55.0, 512.0),
                spec(0.150, 3, 7.53, 37.0, 765.0),
            ],
            rx: spec(0.150, 10, 75.93, 469.0, 610.0),
            pitch: 0.004,
            pair_axial_offset: 0.0,
            rx_distance: 0.200,
        }
    }
}

/// Unit normals of the three channels. Each makes the angle `acos(1/sqrt 3)`
/// with `+z`; their horizontal projections sit at azimuths 120°, 0°, -120°
/// for channels 1, 2, 3, so channel 2 faces the zero receiver angle.
pub fn channel_normals() -> [Vec3; 3] {
    let horizontal = (2.0f64 / 3.0).sqrt();
    let vertical = (1.0f64 / 3.0).sqrt();
    let azimuths = [
        2.0 * std::f64::consts::FRAC_PI_3,
        0.0,
        -2.0 * std::f64::consts::FRAC_PI_3,
    ];
    azimuths.map(|phi| Vec3::new(horizontal * phi.cos(), horizontal * phi.sin(), vertical))
}

/// Full three-channel arrangement with the receiver at one angular position.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemLayout {
    pub tx: [Coil; 3],
    pub rp: [Coil; 3],
    pub rx: Coil,
    rx_angle: f64,
    rx_distance: f64,
}

impl SystemLayout {
    pub fn build(params: &LayoutParams, rx_angle: f64) -> Result<Self> {
        if !(params.rx_distance.is_finite() && params.rx_distance > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "receiver distance must be positive, got {}",
                params.rx_distance
            )));
        }
        if !rx_angle.is_finite() {
            return Err(Error::InvalidGeometry(
                "receiver angle must be finite".into(),
            ));
        }
        let normals = channel_normals();
        let coil = |label: String, spec: &CoilSpec, pose: Pose| -> Result<Coil> {
            let mut c = make_helical_coil(
                label,
                spec.radius,
                spec.turns,
                params.pitch,
                pose,
                spec.resistance,
                spec.inductance,
            )?;
            c.quality_factor = spec.quality_factor;
            Ok(c)
        };
        let mut tx = Vec::with_capacity(3);
        let mut rp = Vec::with_capacity(3);
        for (i, n) in normals.iter().enumerate() {
            tx.push(coil(
                format!("Tx{}", i + 1),
                &params.tx[i],
                Pose::new(Vec3::zeros(), *n)?,
            )?);
            rp.push(coil(
                format!("Rp{}", i + 1),
                &params.rp[i],
                Pose::new(params.pair_axial_offset * n, *n)?,
            )?);
        }
        let rx = coil(
            "Rx".into(),
            &params.rx,
            rx_pose(rx_angle, params.rx_distance)?,
        )?;
        let layout = Self {
            tx: tx.try_into().expect("three coils"),
            rp: rp.try_into().expect("three coils"),
            rx,
            rx_angle,
            rx_distance: params.rx_distance,
        };
        layout.check_orthogonal()?;
        Ok(layout)
    }

    pub fn rx_angle(&self) -> f64 {
        self.rx_angle
    }

    pub fn rx_distance(&self) -> f64 {
        self.rx_distance
    }

    /// Moves the receiver along its circle to `new_angle`; the transmitter
    /// cluster is untouched.
    pub fn rotate_rx(&self, new_angle: f64) -> Self {
        let rotation = Rotation3::from_axis_angle(&Vec3::z_axis(), new_angle - self.rx_angle);
        Self {
            rx: self.rx.transformed(&rotation, &Vec3::zeros()),
            rx_angle: new_angle,
            ..self.clone()
        }
    }

    /// Applies one rigid motion to every coil.
    pub fn transformed(&self, rotation: &Rotation3<f64>, translation: &Vec3) -> Self {
        Self {
            tx: self
                .tx
                .clone()
                .map(|c| c.transformed(rotation, translation)),
            rp: self
                .rp
                .clone()
                .map(|c| c.transformed(rotation, translation)),
            rx: self.rx.transformed(rotation, translation),
            ..self.clone()
        }
    }

    /// Coils in matrix order: Tx1..Tx3, Rp1..Rp3, Rx.
    pub fn coils(&self) -> [&Coil; 7] {
        [
            &self.tx[0],
            &self.tx[1],
            &self.tx[2],
            &self.rp[0],
            &self.rp[1],
            &self.rp[2],
            &self.rx,
        ]
    }

    fn check_orthogonal(&self) -> Result<()> {
        for group in [&self.tx, &self.rp] {
            for i in 0..3 {
                let ni = group[i].normal();
                if (ni.norm() - 1.0).abs() > NORMAL_TOLERANCE {
                    return Err(Error::InvalidGeometry("non-unit coil normal".into()));
                }
                for j in (i + 1)..3 {
                    let d = ni.dot(&group[j].normal()).abs();
                    if d > ORTHOGONALITY_TOLERANCE {
                        return Err(Error::InvalidGeometry(format!(
                            "{} and {} are not orthogonal (|n_i . n_j| = {d:.3e})",
                            group[i].label, group[j].label
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Receiver pose at `angle` on the horizontal circle of radius `distance`,
/// normal pointing back at the cluster center.
fn rx_pose(angle: f64, distance: f64) -> Result<Pose> {
    let radial = Unit::new_unchecked(Vec3::new(angle.cos(), angle.sin(), 0.0));
    Pose::new(distance * radial.into_inner(), -radial.into_inner())
}

/// Prototype layout with the receiver at `rx_angle` and `rx_distance`.
pub fn prototype_layout(rx_angle: f64, rx_distance: f64) -> Result<SystemLayout> {
    let params = LayoutParams {
        rx_distance,
        ..LayoutParams::prototype()
    };
    SystemLayout::build(&params, rx_angle)
}
