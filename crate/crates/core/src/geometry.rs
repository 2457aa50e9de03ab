//! Scene geometry, line-of-sight channel synthesis and received-power
//! evaluation for a BS → RIS → UT link.
//!
//! Coordinates are meters. The RIS lies in the plane through `ris_center`
//! spanned by its row and column axes; element `(i, j)` (row `i`, column
//! `j`) has flat index `i * N_h + j`.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Distances below this are treated as coincident points.
const MIN_DISTANCE_M: f64 = 1e-9;

const PHASE_TOL: f64 = 1e-12;

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn add_scaled(a: Vec3, b: Vec3, s: f64) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn unit(a: Vec3) -> Option<Vec3> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some([a[0] / n, a[1] / n, a[2] / n])
    } else {
        None
    }
}

pub fn distance(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

/// Element spacing as written in a scenario file: either meters or the
/// string `"half-wavelength"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpacingSpec {
    Meters(f64),
    Named(String),
}

impl SpacingSpec {
    fn resolve(&self, wavelength: f64) -> Result<f64> {
        match self {
            SpacingSpec::Meters(m) => Ok(*m),
            SpacingSpec::Named(name) => match name.as_str() {
                "half-wavelength" | "half_wavelength" | "lambda/2" => Ok(wavelength / 2.0),
                other => Err(Error::InvalidScene(format!("unknown spacing `{other}`"))),
            },
        }
    }
}

impl Default for SpacingSpec {
    fn default() -> Self {
        SpacingSpec::Named("half-wavelength".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub spacing: SpacingSpec,
}

/// Scenario description, deserialized from the `[scene]` section of a
/// config file. Units: Hz, m, W, degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub frequency_hz: f64,
    pub tx_power_w: f64,
    pub bs: ArrayConfig,
    pub ris: ArrayConfig,
    pub ris_center: Vec3,
    /// Outward normal of the RIS plane.
    pub ris_normal: Vec3,
    /// Direction of increasing column index.
    pub ris_col_axis: Vec3,
    /// Explicit BS array center; overrides `bs_distance_m`/`bs_angle_deg`.
    pub bs_position: Option<Vec3>,
    pub bs_distance_m: f64,
    pub bs_angle_deg: f64,
    /// Explicit UT position; overrides `ut_distance_m`/`ut_angle_deg`.
    pub ut_position: Option<Vec3>,
    pub ut_distance_m: f64,
    pub ut_angle_deg: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            frequency_hz: 28.0e9,
            tx_power_w: 1.0,
            bs: ArrayConfig { rows: 8, cols: 8, spacing: SpacingSpec::default() },
            ris: ArrayConfig { rows: 74, cols: 74, spacing: SpacingSpec::default() },
            ris_center: [0.0, 0.0, 0.0],
            ris_normal: [1.0, 0.0, 0.0],
            ris_col_axis: [0.0, 1.0, 0.0],
            bs_position: None,
            bs_distance_m: 20.0,
            bs_angle_deg: 0.0,
            ut_position: None,
            ut_distance_m: 50.0,
            ut_angle_deg: 30.0,
        }
    }
}

impl SceneConfig {
    pub fn with_ris_size(mut self, rows: usize, cols: usize) -> Self {
        self.ris.rows = rows;
        self.ris.cols = cols;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrayLayout {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
}

impl ArrayLayout {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Orthonormal frame of the RIS plane. `row_axis` points toward increasing
/// row index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Orientation {
    pub normal: Vec3,
    pub row_axis: Vec3,
    pub col_axis: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub frequency_hz: f64,
    pub tx_power_w: f64,
    pub bs_array: ArrayLayout,
    pub ris_array: ArrayLayout,
    pub bs_position: Vec3,
    pub ris_center: Vec3,
    pub ut_position: Vec3,
    pub ris_orientation: Orientation,
}

impl Scene {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    /// Number of RIS elements `N`.
    pub fn num_elements(&self) -> usize {
        self.ris_array.len()
    }

    /// Number of BS antennas `M`.
    pub fn num_antennas(&self) -> usize {
        self.bs_array.len()
    }

    pub fn ut_distance(&self) -> f64 {
        distance(self.ut_position, self.ris_center)
    }

    /// Moves the UT along the ray from the RIS center through its current
    /// position.
    pub fn with_ut_distance(&self, d: f64) -> Result<Scene> {
        let dir = unit(sub(self.ut_position, self.ris_center))
            .ok_or_else(|| Error::InvalidScene("UT sits at the RIS center".into()))?;
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidScene(format!("UT distance must be positive, got {d}")));
        }
        let mut scene = self.clone();
        scene.ut_position = add_scaled(self.ris_center, dir, d);
        scene.validate()?;
        Ok(scene)
    }

    /// Positions of the BS antennas; the array plane faces the RIS center.
    pub fn bs_antenna_positions(&self) -> Vec<Vec3> {
        let o = &self.ris_orientation;
        let facing = unit(sub(self.ris_center, self.bs_position)).unwrap_or(o.normal);
        let up = [-o.row_axis[0], -o.row_axis[1], -o.row_axis[2]];
        let horiz = unit(cross(up, facing)).unwrap_or(o.col_axis);
        let vert = cross(facing, horiz);
        grid(self.bs_position, self.bs_array, vert, horiz)
    }

    fn validate(&self) -> Result<()> {
        if !(self.frequency_hz > 0.0 && self.frequency_hz.is_finite()) {
            return Err(Error::InvalidScene(format!(
                "frequency must be positive, got {}",
                self.frequency_hz
            )));
        }
        if !(self.tx_power_w > 0.0 && self.tx_power_w.is_finite()) {
            return Err(Error::InvalidScene(format!(
                "transmit power must be positive, got {}",
                self.tx_power_w
            )));
        }
        for (name, a) in [("bs", self.bs_array), ("ris", self.ris_array)] {
            if a.rows == 0 || a.cols == 0 {
                return Err(Error::InvalidScene(format!("{name} array dimensions must be >= 1")));
            }
            if !(a.spacing > 0.0 && a.spacing.is_finite()) {
                return Err(Error::InvalidScene(format!(
                    "{name} spacing must be positive, got {}",
                    a.spacing
                )));
            }
        }
        let elements = element_positions(self);
        let bs = self.bs_antenna_positions();
        for p in &elements {
            if distance(*p, self.ut_position) < MIN_DISTANCE_M {
                return Err(Error::ZeroDistance("UT and a RIS element".into()));
            }
            if bs.iter().any(|b| distance(*p, *b) < MIN_DISTANCE_M) {
                return Err(Error::ZeroDistance("a BS antenna and a RIS element".into()));
            }
        }
        Ok(())
    }
}

fn grid(center: Vec3, layout: ArrayLayout, row_axis: Vec3, col_axis: Vec3) -> Vec<Vec3> {
    let r0 = (layout.rows as f64 - 1.0) / 2.0;
    let c0 = (layout.cols as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(layout.len());
    for i in 0..layout.rows {
        for j in 0..layout.cols {
            let p = add_scaled(center, row_axis, (i as f64 - r0) * layout.spacing);
            out.push(add_scaled(p, col_axis, (j as f64 - c0) * layout.spacing));
        }
    }
    out
}

fn direction_in_plane(normal: Vec3, col_axis: Vec3, angle_deg: f64) -> Vec3 {
    let a = angle_deg.to_radians();
    let mut d = [0.0; 3];
    for k in 0..3 {
        d[k] = a.cos() * normal[k] + a.sin() * col_axis[k];
    }
    d
}

pub fn build_scene(config: &SceneConfig) -> Result<Scene> {
    if !(config.frequency_hz > 0.0 && config.frequency_hz.is_finite()) {
        return Err(Error::InvalidScene(format!(
            "frequency must be positive, got {}",
            config.frequency_hz
        )));
    }
    let wavelength = SPEED_OF_LIGHT / config.frequency_hz;
    let layout = |a: &ArrayConfig| -> Result<ArrayLayout> {
        Ok(ArrayLayout { rows: a.rows, cols: a.cols, spacing: a.spacing.resolve(wavelength)? })
    };

    let normal = unit(config.ris_normal)
        .ok_or_else(|| Error::InvalidScene("RIS normal must be nonzero".into()))?;
    // Gram-Schmidt the column axis against the normal.
    let c = config.ris_col_axis;
    let c = add_scaled(c, normal, -dot(c, normal));
    let col_axis = unit(c)
        .ok_or_else(|| Error::InvalidScene("RIS column axis must not be parallel to the normal".into()))?;
    let row_axis = cross(col_axis, normal);

    let bs_position = config.bs_position.unwrap_or_else(|| {
        let d = direction_in_plane(normal, col_axis, config.bs_angle_deg);
        add_scaled(config.ris_center, d, config.bs_distance_m)
    });
    let ut_position = config.ut_position.unwrap_or_else(|| {
        let d = direction_in_plane(normal, col_axis, config.ut_angle_deg);
        add_scaled(config.ris_center, d, config.ut_distance_m)
    });

    let scene = Scene {
        frequency_hz: config.frequency_hz,
        tx_power_w: config.tx_power_w,
        bs_array: layout(&config.bs)?,
        ris_array: layout(&config.ris)?,
        bs_position,
        ris_center: config.ris_center,
        ut_position,
        ris_orientation: Orientation { normal, row_axis, col_axis },
    };
    scene.validate()?;
    Ok(scene)
}

/// RIS element positions in row-major order (`i * N_h + j`).
pub fn element_positions(scene: &Scene) -> Vec<Vec3> {
    let o = &scene.ris_orientation;
    grid(scene.ris_center, scene.ris_array, o.row_axis, o.col_axis)
}

/// BS → RIS channel `G` (N×M) and RIS → UT channel `h_r` (length N).
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub g: Array2<Complex64>,
    pub h_r: Array1<Complex64>,
}

impl Channel {
    pub fn new(g: Array2<Complex64>, h_r: Array1<Complex64>) -> Result<Self> {
        if g.nrows() != h_r.len() {
            return Err(Error::DimensionMismatch { expected: g.nrows(), got: h_r.len() });
        }
        if g.nrows() == 0 || g.ncols() == 0 {
            return Err(Error::InvalidScene("empty channel".into()));
        }
        Ok(Self { g, h_r })
    }

    pub fn num_elements(&self) -> usize {
        self.h_r.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.g.ncols()
    }

    /// Cascaded channel `diag(h_r) G`, N×M.
    pub fn cascade(&self) -> Array2<Complex64> {
        let mut b = self.g.clone();
        for (mut row, h) in b.rows_mut().into_iter().zip(self.h_r.iter()) {
            row.mapv_inplace(|x| x * h);
        }
        b
    }

    /// Hermitian matrix `A` with `effective_objective(φ) = φ^H A φ`.
    ///
    /// With `B = diag(h_r) G`, `A = conj(B) B^T`, the element-wise conjugate
    /// of `diag(h_r) G G^H diag(h_r)^H`. Both share the real part.
    pub fn gram(&self) -> Array2<Complex64> {
        let b = self.cascade();
        let n = b.nrows();
        let mut a = Array2::<Complex64>::zeros((n, n));
        for r in 0..n {
            for c in r..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..b.ncols() {
                    acc += b[[r, m]].conj() * b[[c, m]];
                }
                a[[r, c]] = acc;
                a[[c, r]] = acc.conj();
            }
        }
        a
    }
}

/// Free-space spherical-wave coefficient `λ/(4πd) · e^{-j2πd/λ}`.
pub fn free_space_coefficient(d: f64, wavelength: f64) -> Complex64 {
    let amp = wavelength / (4.0 * PI * d);
    Complex64::from_polar(amp, -2.0 * PI * d / wavelength)
}

pub fn los_channel(scene: &Scene) -> Result<Channel> {
    let lambda = scene.wavelength();
    let elements = element_positions(scene);
    let antennas = scene.bs_antenna_positions();
    let n = elements.len();
    let m = antennas.len();
    let mut g = Array2::<Complex64>::zeros((n, m));
    let mut h_r = Array1::<Complex64>::zeros(n);
    for (row, e) in elements.iter().enumerate() {
        for (col, a) in antennas.iter().enumerate() {
            let d = distance(*e, *a);
            if d < MIN_DISTANCE_M {
                return Err(Error::ZeroDistance(format!("BS antenna {col} and RIS element {row}")));
            }
            g[[row, col]] = free_space_coefficient(d, lambda);
        }
        let d = distance(*e, scene.ut_position);
        if d < MIN_DISTANCE_M {
            return Err(Error::ZeroDistance(format!("UT and RIS element {row}")));
        }
        h_r[row] = free_space_coefficient(d, lambda);
    }
    Channel::new(g, h_r)
}

/// Which phase alphabet a [`PhaseVector`] is drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseLevel {
    /// {-1, +1}
    Binary,
    /// {e^{jπ/4}, e^{j3π/4}, e^{j5π/4}, e^{j7π/4}}
    Quad,
    /// {1, j, -1, -j}; products of two `Quad` phases land here.
    QuadAxis,
    Continuous,
}

impl PhaseLevel {
    pub fn levels(&self) -> Option<usize> {
        match self {
            PhaseLevel::Binary => Some(2),
            PhaseLevel::Quad | PhaseLevel::QuadAxis => Some(4),
            PhaseLevel::Continuous => None,
        }
    }

    fn contains(&self, z: Complex64) -> bool {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let near = |w: Complex64| (z - w).norm() <= 1e-9;
        match self {
            PhaseLevel::Binary => near(Complex64::new(1.0, 0.0)) || near(Complex64::new(-1.0, 0.0)),
            PhaseLevel::Quad => [(s, s), (-s, s), (-s, -s), (s, -s)]
                .iter()
                .any(|&(re, im)| near(Complex64::new(re, im))),
            PhaseLevel::QuadAxis => [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]
                .iter()
                .any(|&(re, im)| near(Complex64::new(re, im))),
            PhaseLevel::Continuous => (z.norm() - 1.0).abs() <= PHASE_TOL,
        }
    }
}

/// Unit-modulus per-element phase shifts `φ`; `Φ = diag(φ)` is never formed.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseVector {
    phases: Vec<Complex64>,
    level: PhaseLevel,
}

impl PhaseVector {
    pub fn new(phases: Vec<Complex64>, level: PhaseLevel) -> Result<Self> {
        for (i, z) in phases.iter().enumerate() {
            if (z.norm() - 1.0).abs() > PHASE_TOL || !level.contains(*z) {
                return Err(Error::InvalidScene(format!(
                    "phase {i} = {z} is not in the {level:?} alphabet"
                )));
            }
        }
        Ok(Self { phases, level })
    }

    /// Renormalizes each entry onto the unit circle.
    pub fn continuous(phases: Vec<Complex64>) -> Self {
        let phases = phases
            .into_iter()
            .map(|z| if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) })
            .collect();
        Self { phases, level: PhaseLevel::Continuous }
    }

    pub fn ones(n: usize) -> Self {
        Self { phases: vec![Complex64::new(1.0, 0.0); n], level: PhaseLevel::Binary }
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    pub fn level(&self) -> PhaseLevel {
        self.level
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub(crate) fn from_parts_unchecked(phases: Vec<Complex64>, level: PhaseLevel) -> Self {
        Self { phases, level }
    }
}

fn check_len(channel: &Channel, phases: &PhaseVector) -> Result<()> {
    if phases.len() != channel.num_elements() {
        return Err(Error::DimensionMismatch { expected: channel.num_elements(), got: phases.len() });
    }
    Ok(())
}

/// Effective BS → UT row vector `h_r Φ G`, length M.
pub fn effective_channel(channel: &Channel, phases: &PhaseVector) -> Result<Vec<Complex64>> {
    check_len(channel, phases)?;
    let mut e = vec![Complex64::new(0.0, 0.0); channel.num_antennas()];
    for (n, (h, phi)) in channel.h_r.iter().zip(phases.phases()).enumerate() {
        let c = h * phi;
        for (acc, g) in e.iter_mut().zip(channel.g.row(n).iter()) {
            *acc += c * g;
        }
    }
    Ok(e)
}

/// Maximum-ratio transmit beamformer with `‖w‖² = P_t`.
pub fn mrt_beamformer(channel: &Channel, phases: &PhaseVector, tx_power_w: f64) -> Result<Vec<Complex64>> {
    let e = effective_channel(channel, phases)?;
    let norm = e.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroEffectiveChannel);
    }
    let scale = tx_power_w.sqrt() / norm;
    Ok(e.iter().map(|z| z.conj() * scale).collect())
}

/// `P_r = |h_r Φ G w|²`.
pub fn received_power(channel: &Channel, phases: &PhaseVector, w: &[Complex64]) -> Result<f64> {
    if w.len() != channel.num_antennas() {
        return Err(Error::DimensionMismatch { expected: channel.num_antennas(), got: w.len() });
    }
    let e = effective_channel(channel, phases)?;
    let y: Complex64 = e.iter().zip(w).map(|(a, b)| a * b).sum();
    Ok(y.norm_sqr())
}

/// `(h_r Φ G)(h_r Φ G)^H`, the received power per watt under MRT.
pub fn effective_objective(channel: &Channel, phases: &PhaseVector) -> Result<f64> {
    Ok(effective_channel(channel, phases)?.iter().map(|z| z.norm_sqr()).sum())
}

pub fn watts_to_dbm(p: f64) -> f64 {
    10.0 * (p * 1000.0).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_channel() -> Channel {
        Channel::new(
            Array2::from_elem((1, 1), Complex64::new(1.0, 0.0)),
            Array1::from_elem(1, Complex64::new(1.0, 0.0)),
        )
        .unwrap()
    }

    #[test]
    fn table_one_wavelength_and_spacing() {
        let scene = build_scene(&SceneConfig::default()).unwrap();
        assert!((scene.wavelength() - 0.010707).abs() < 1e-6);
        assert!((scene.bs_array.spacing - 5.3537e-3).abs() < 1e-6);
        assert_eq!(scene.num_antennas(), 64);
        assert_eq!(scene.num_elements(), 5476);
    }

    #[test]
    fn degenerate_single_element_scene() {
        let mut cfg = SceneConfig::default().with_ris_size(1, 1);
        cfg.bs.rows = 1;
        cfg.bs.cols = 1;
        let scene = build_scene(&cfg).unwrap();
        assert_eq!(scene.num_elements(), 1);
        assert_eq!(scene.num_antennas(), 1);
        assert_eq!(element_positions(&scene), vec![scene.ris_center]);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = SceneConfig::default();
        cfg.ris.spacing = SpacingSpec::Meters(-0.01);
        assert!(build_scene(&cfg).is_err());

        let mut cfg = SceneConfig::default();
        cfg.frequency_hz = 0.0;
        assert!(build_scene(&cfg).is_err());

        let mut cfg = SceneConfig::default().with_ris_size(0, 4);
        assert!(build_scene(&cfg).is_err());
        cfg.ris.rows = 1;
        cfg.ris.cols = 1;
        cfg.ut_position = Some([0.0, 0.0, 0.0]);
        assert!(matches!(build_scene(&cfg), Err(Error::ZeroDistance(_))));
    }

    #[test]
    fn two_by_two_grid_is_centered_square() {
        let mut cfg = SceneConfig::default().with_ris_size(2, 2);
        cfg.ris.spacing = SpacingSpec::Meters(0.1);
        cfg.ris_center = [1.0, 2.0, 3.0];
        let scene = build_scene(&cfg).unwrap();
        let p = element_positions(&scene);
        assert_eq!(p.len(), 4);
        let mut centroid = [0.0; 3];
        for q in &p {
            for k in 0..3 {
                centroid[k] += q[k] / 4.0;
            }
        }
        assert!(distance(centroid, cfg.ris_center) < 1e-12);
        assert!((distance(p[0], p[1]) - 0.1).abs() < 1e-12);
        assert!((distance(p[0], p[2]) - 0.1).abs() < 1e-12);
        assert!((distance(p[0], p[3]) - 0.1 * 2f64.sqrt()).abs() < 1e-12);
        // row-major: p[1] is one column over from p[0]
        let step = sub(p[1], p[0]);
        assert!(distance(step, [0.0, 0.1, 0.0]) < 1e-12);
    }

    #[test]
    fn aperture_of_74_by_74() {
        let scene = build_scene(&SceneConfig::default()).unwrap();
        let p = element_positions(&scene);
        let side = distance(p[0], p[73]);
        let expected = 73.0 * scene.wavelength() / 2.0;
        assert!((side - expected).abs() < 1e-12);
        assert!((side - 0.3908).abs() < 1e-4);
    }

    #[test]
    fn free_space_phase_wraps_at_one_wavelength() {
        let lambda = 0.01;
        let c = free_space_coefficient(lambda, lambda);
        let amp = lambda / (4.0 * PI * lambda);
        assert!((c - Complex64::new(amp, 0.0)).norm() < 1e-15);
        let half = free_space_coefficient(2.0 * lambda, lambda).norm();
        assert!((half - amp / 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_beamformer_gives_zero_power() {
        let ch = unit_channel();
        let p = received_power(&ch, &PhaseVector::ones(1), &[Complex64::new(0.0, 0.0)]).unwrap();
        assert_eq!(p, 0.0);
        let p = received_power(&ch, &PhaseVector::ones(1), &[Complex64::new(1.0, 0.0)]).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn single_antenna_mrt_has_full_power() {
        let ch = Channel::new(
            Array2::from_elem((1, 1), Complex64::from_polar(0.3, 1.1)),
            Array1::from_elem(1, Complex64::from_polar(0.7, -0.4)),
        )
        .unwrap();
        let w = mrt_beamformer(&ch, &PhaseVector::ones(1), 2.5).unwrap();
        assert!((w[0].norm_sqr() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn mrt_rejects_zero_effective_channel() {
        let ch = Channel::new(Array2::zeros((1, 2)), Array1::from_elem(1, Complex64::new(1.0, 0.0))).unwrap();
        assert!(matches!(
            mrt_beamformer(&ch, &PhaseVector::ones(1), 1.0),
            Err(Error::ZeroEffectiveChannel)
        ));
    }

    #[test]
    fn single_element_objective() {
        let g = Array2::from_shape_vec(
            (1, 3),
            vec![Complex64::new(0.5, 0.1), Complex64::new(-0.2, 0.3), Complex64::new(0.0, -1.0)],
        )
        .unwrap();
        let h = Array1::from_elem(1, Complex64::new(0.6, 0.8));
        let ch = Channel::new(g.clone(), h).unwrap();
        let phi = PhaseVector::continuous(vec![Complex64::from_polar(1.0, 0.77)]);
        let g2: f64 = g.iter().map(|z| z.norm_sqr()).sum();
        let v = effective_objective(&ch, &phi).unwrap();
        assert!((v - 1.0 * g2).abs() < 1e-12);
    }

    #[test]
    fn phase_vector_alphabets() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(PhaseVector::new(vec![Complex64::new(1.0, 0.0)], PhaseLevel::Binary).is_ok());
        assert!(PhaseVector::new(vec![Complex64::new(0.0, 1.0)], PhaseLevel::Binary).is_err());
        assert!(PhaseVector::new(vec![Complex64::new(s, -s)], PhaseLevel::Quad).is_ok());
        assert!(PhaseVector::new(vec![Complex64::new(0.0, -1.0)], PhaseLevel::QuadAxis).is_ok());
        assert!(PhaseVector::new(vec![Complex64::new(2.0, 0.0)], PhaseLevel::Continuous).is_err());
    }
}
