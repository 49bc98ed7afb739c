//! Conductivity fields `sigma(x)`: symmetric, uniformly elliptic 2x2 matrices
//! on the closed unit disk.
//!
//! The four benchmark presets are isotropic with scalar values in `[1, 4]`:
//!
//! | kind          | scalar profile                                            |
//! |---------------|-----------------------------------------------------------|
//! | `linear`      | `2.5 + 1.5 x1`                                            |
//! | `gaussian`    | `1 + 3 exp(-|x - (0.3, 0.2)|^2 / (2 * 0.3^2))`            |
//! | `oscillating` | `2.5 + 1.5 sin(2 pi x1) sin(2 pi x2)`                     |
//! | `realistic`   | bilinear raster, affinely rescaled onto `[1, 4]`          |
//!
//! `identity`, `constant`, `manufactured` (`1 + x1^2`) and `anisotropic`
//! (constant rotated diagonal matrix) are used by tests and examples.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SymMat2, Vec2};
use crate::mesh::TriangleMesh;

/// Points this far outside the unit circle are still evaluated.
const DOMAIN_SLACK: f64 = 1e-9;

/// Scalar range of the benchmark presets.
pub const PRESET_MIN: f64 = 1.0;
pub const PRESET_MAX: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Identity,
    Constant,
    Linear,
    Gaussian,
    Oscillating,
    Realistic,
    Manufactured,
    Anisotropic,
}

impl FieldKind {
    /// The four coefficient choices of the boundary-data benchmark.
    pub const BENCHMARK: [FieldKind; 4] = [
        FieldKind::Linear,
        FieldKind::Gaussian,
        FieldKind::Oscillating,
        FieldKind::Realistic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FieldKind::Identity => "identity",
            FieldKind::Constant => "constant",
            FieldKind::Linear => "linear",
            FieldKind::Gaussian => "gaussian",
            FieldKind::Oscillating => "oscillating",
            FieldKind::Realistic => "realistic",
            FieldKind::Manufactured => "manufactured",
            FieldKind::Anisotropic => "anisotropic",
        }
    }

    pub fn is_benchmark(self) -> bool {
        Self::BENCHMARK.contains(&self)
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "identity" => FieldKind::Identity,
            "constant" => FieldKind::Constant,
            "linear" => FieldKind::Linear,
            "gaussian" => FieldKind::Gaussian,
            "oscillating" => FieldKind::Oscillating,
            "realistic" => FieldKind::Realistic,
            "manufactured" => FieldKind::Manufactured,
            "anisotropic" => FieldKind::Anisotropic,
            other => return Err(Error::UnknownKind(other.to_owned())),
        })
    }
}

/// Regular grid of samples over a rectangle, row-major with `y` increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterGrid {
    nx: usize,
    ny: usize,
    x_range: (f64, f64),
    y_range: (f64, f64),
    values: Vec<f64>,
}

impl RasterGrid {
    pub fn new(
        nx: usize,
        ny: usize,
        x_range: (f64, f64),
        y_range: (f64, f64),
        values: Vec<f64>,
    ) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::invalid(format!("raster needs nx, ny >= 2, got {nx}x{ny}")));
        }
        if values.len() != nx * ny {
            return Err(Error::invalid(format!(
                "raster has {} values, expected {}",
                values.len(),
                nx * ny
            )));
        }
        if !(x_range.0 < x_range.1 && y_range.0 < y_range.1) {
            return Err(Error::invalid("raster ranges must be increasing"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("raster value {v} is not finite")));
        }
        Ok(RasterGrid {
            nx,
            ny,
            x_range,
            y_range,
            values,
        })
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(
        nx: usize,
        ny: usize,
        x_range: (f64, f64),
        y_range: (f64, f64),
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let dx = (x_range.1 - x_range.0) / (nx.max(2) - 1) as f64;
        let dy = (y_range.1 - y_range.0) / (ny.max(2) - 1) as f64;
        let values = (0..ny)
            .flat_map(|iy| (0..nx).map(move |ix| (ix, iy)))
            .map(|(ix, iy)| f(x_range.0 + ix as f64 * dx, y_range.0 + iy as f64 * dy))
            .collect();
        Self::new(nx, ny, x_range, y_range, values)
    }

    /// Deterministic synthetic stand-in for a measured conductivity map:
    /// a few smooth bumps on a gently tilted background, sampled on 41x41.
    pub fn synthetic_default() -> Self {
        Self::from_fn(41, 41, (-1.0, 1.0), (-1.0, 1.0), |x, y| {
            let bump = |cx: f64, cy: f64, w: f64| {
                (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * w * w)).exp()
            };
            0.4 * x - 0.2 * y
                + 1.2 * bump(-0.35, 0.4, 0.25)
                + 0.8 * bump(0.45, -0.3, 0.3)
                - 0.6 * bump(0.1, 0.65, 0.2)
                + 0.25 * (3.0 * x + 1.0).sin() * (2.0 * y - 0.5).cos()
        })
        .expect("static raster is valid")
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.x_range
    }

    pub fn y_range(&self) -> (f64, f64) {
        self.y_range
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    fn spacing(&self) -> (f64, f64) {
        (
            (self.x_range.1 - self.x_range.0) / (self.nx - 1) as f64,
            (self.y_range.1 - self.y_range.0) / (self.ny - 1) as f64,
        )
    }

    pub fn covers_unit_disk(&self) -> bool {
        self.x_range.0 <= -1.0 && self.x_range.1 >= 1.0 && self.y_range.0 <= -1.0 && self.y_range.1 >= 1.0
    }

    /// Bilinear interpolation; points outside the rectangle are clamped.
    pub fn bilinear(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = self.spacing();
        let locate = |t: f64, lo: f64, d: f64, n: usize| {
            let s = ((t - lo) / d).clamp(0.0, (n - 1) as f64);
            let i = (s.floor() as usize).min(n - 2);
            (i, s - i as f64)
        };
        let (ix, fx) = locate(x, self.x_range.0, dx, self.nx);
        let (iy, fy) = locate(y, self.y_range.0, dy, self.ny);
        let v00 = self.value(ix, iy);
        let v10 = self.value(ix + 1, iy);
        let v01 = self.value(ix, iy + 1);
        let v11 = self.value(ix + 1, iy + 1);
        (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11)
    }

    /// Lipschitz constant of the bilinear interpolant, from the largest
    /// nodal difference quotients along each axis.
    pub fn lipschitz_bound(&self) -> f64 {
        let (dx, dy) = self.spacing();
        let mut gx: f64 = 0.0;
        let mut gy: f64 = 0.0;
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if ix + 1 < self.nx {
                    gx = gx.max((self.value(ix + 1, iy) - self.value(ix, iy)).abs() / dx);
                }
                if iy + 1 < self.ny {
                    gy = gy.max((self.value(ix, iy + 1) - self.value(ix, iy)).abs() / dy);
                }
            }
        }
        gx.hypot(gy)
    }

    /// Reads `nx ny xmin xmax ymin ymax` followed by `ny` rows of `nx` values.
    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut tokens: Vec<(usize, String)> = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            tokens.extend(line.split_whitespace().map(|t| (i + 1, t.to_owned())));
        }
        let mut it = tokens.into_iter();
        let mut next_f64 = |what: &str| -> Result<f64> {
            let (line, tok) = it.next().ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("unexpected end of raster while reading {what}"),
            })?;
            tok.parse().map_err(|_| Error::Parse {
                line,
                message: format!("cannot parse {what} from `{tok}`"),
            })
        };
        let nx = next_f64("nx")? as usize;
        let ny = next_f64("ny")? as usize;
        let x_range = (next_f64("xmin")?, next_f64("xmax")?);
        let y_range = (next_f64("ymin")?, next_f64("ymax")?);
        let values = (0..nx * ny)
            .map(|_| next_f64("value"))
            .collect::<Result<Vec<_>>>()?;
        Self::new(nx, ny, x_range, y_range, values)
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{} {} {} {} {} {}",
            self.nx, self.ny, self.x_range.0, self.x_range.1, self.y_range.0, self.y_range.1
        )?;
        for iy in 0..self.ny {
            let row: Vec<String> = (0..self.nx).map(|ix| self.value(ix, iy).to_string()).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Key-value parameters for [`make_preset`]; unknown keys are rejected.
#[derive(Clone, Debug, Default)]
pub struct PresetParams {
    pub values: BTreeMap<String, f64>,
    pub raster: Option<RasterGrid>,
}

impl PresetParams {
    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_owned(), value);
        self
    }

    pub fn with_raster(mut self, raster: RasterGrid) -> Self {
        self.raster = Some(raster);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Profile {
    Constant(f64),
    Linear {
        offset: f64,
        slope: f64,
    },
    Gaussian {
        base: f64,
        amplitude: f64,
        center: Vec2,
        width: f64,
    },
    Oscillating {
        mean: f64,
        amplitude: f64,
        frequency: f64,
    },
    Raster {
        grid: RasterGrid,
        min: f64,
        max: f64,
    },
    Manufactured,
    Matrix(SymMat2),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConductivityField {
    kind: FieldKind,
    profile: Profile,
    kappa: f64,
    beta: f64,
}

/// Builds a coefficient field of the given kind.
///
/// Recognised keys (defaults in parentheses): `constant`: `value` (2.5);
/// `linear`: `offset` (2.5), `slope` (1.5); `gaussian`: `base` (1),
/// `amplitude` (3), `cx` (0.3), `cy` (0.2), `width` (0.3); `oscillating`:
/// `mean` (2.5), `amplitude` (1.5), `frequency` (1); `anisotropic`:
/// `major` (2), `minor` (1), `angle` (0). Every kind accepts `beta` (0.5).
/// `realistic` requires [`PresetParams::raster`].
pub fn make_preset(kind: FieldKind, params: &PresetParams) -> Result<ConductivityField> {
    let allowed: &[&str] = match kind {
        FieldKind::Identity | FieldKind::Manufactured | FieldKind::Realistic => &[],
        FieldKind::Constant => &["value"],
        FieldKind::Linear => &["offset", "slope"],
        FieldKind::Gaussian => &["base", "amplitude", "cx", "cy", "width"],
        FieldKind::Oscillating => &["mean", "amplitude", "frequency"],
        FieldKind::Anisotropic => &["major", "minor", "angle"],
    };
    if let Some(key) = params
        .values
        .keys()
        .find(|k| k.as_str() != "beta" && !allowed.contains(&k.as_str()))
    {
        return Err(Error::invalid(format!("parameter `{key}` is not used by kind `{kind}`")));
    }
    let get = |key: &str, default: f64| params.values.get(key).copied().unwrap_or(default);
    let beta = get("beta", 0.5);
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    if let Some((k, v)) = params.values.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::invalid(format!("parameter `{k}` = {v} is not finite")));
    }

    // (profile, smallest and largest eigenvalue over the closed disk)
    let (profile, lo, hi) = match kind {
        FieldKind::Identity => (Profile::Constant(1.0), 1.0, 1.0),
        FieldKind::Constant => {
            let v = get("value", 2.5);
            (Profile::Constant(v), v, v)
        }
        FieldKind::Linear => {
            let (offset, slope) = (get("offset", 2.5), get("slope", 1.5));
            (
                Profile::Linear { offset, slope },
                offset - slope.abs(),
                offset + slope.abs(),
            )
        }
        FieldKind::Gaussian => {
            let (base, amplitude, width) = (get("base", 1.0), get("amplitude", 3.0), get("width", 0.3));
            if !(width > 0.0) {
                return Err(Error::invalid(format!("gaussian width must be positive, got {width}")));
            }
            (
                Profile::Gaussian {
                    base,
                    amplitude,
                    center: Vec2::new(get("cx", 0.3), get("cy", 0.2)),
                    width,
                },
                base.min(base + amplitude),
                base.max(base + amplitude),
            )
        }
        FieldKind::Oscillating => {
            let (mean, amplitude) = (get("mean", 2.5), get("amplitude", 1.5));
            (
                Profile::Oscillating {
                    mean,
                    amplitude,
                    frequency: get("frequency", 1.0),
                },
                mean - amplitude.abs(),
                mean + amplitude.abs(),
            )
        }
        FieldKind::Realistic => {
            let grid = params
                .raster
                .clone()
                .ok_or_else(|| Error::invalid("realistic kind requires a raster"))?;
            if !grid.covers_unit_disk() {
                return Err(Error::invalid("raster does not cover [-1, 1]^2"));
            }
            let (min, max) = grid.min_max();
            (Profile::Raster { grid, min, max }, PRESET_MIN, PRESET_MAX)
        }
        FieldKind::Manufactured => (Profile::Manufactured, 1.0, 2.0),
        FieldKind::Anisotropic => {
            let (major, minor) = (get("major", 2.0), get("minor", 1.0));
            (
                Profile::Matrix(SymMat2::from_principal(major, minor, get("angle", 0.0))),
                major.min(minor),
                major.max(minor),
            )
        }
    };
    if !(lo > 0.0) {
        return Err(Error::invalid(format!(
            "kind `{kind}` with these parameters reaches non-positive value {lo}"
        )));
    }
    // kappa > 1 is required even for the identity, hence the epsilon guard.
    let kappa = hi.max(1.0 / lo).max(1.0 + f64::EPSILON);
    Ok(ConductivityField {
        kind,
        profile,
        kappa,
        beta,
    })
}

impl ConductivityField {
    /// Shorthand for a kind with default parameters (the default raster for
    /// `realistic`).
    pub fn preset(kind: FieldKind) -> Result<Self> {
        let params = match kind {
            FieldKind::Realistic => PresetParams::default().with_raster(RasterGrid::synthetic_default()),
            _ => PresetParams::default(),
        };
        make_preset(kind, &params)
    }

    pub fn identity() -> Self {
        Self::preset(FieldKind::Identity).expect("identity is always admissible")
    }

    pub fn constant(value: f64) -> Result<Self> {
        make_preset(FieldKind::Constant, &PresetParams::default().with("value", value))
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    /// Certified upper bound on `max(lambda_max, 1/lambda_min)` over the disk.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Hoelder exponent metadata; no computation consumes it.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_isotropic(&self) -> bool {
        !matches!(self.profile, Profile::Matrix(m) if m.xy != 0.0 || m.xx != m.yy)
    }

    pub fn evaluate(&self, x: Vec2) -> Result<SymMat2> {
        if x.norm() > 1.0 + DOMAIN_SLACK || !x.x.is_finite() || !x.y.is_finite() {
            return Err(Error::OutsideDomain { x: x.x, y: x.y });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: Vec2) -> SymMat2 {
        match &self.profile {
            Profile::Matrix(m) => *m,
            _ => SymMat2::scalar(self.scalar(x)),
        }
    }

    fn scalar(&self, x: Vec2) -> f64 {
        match &self.profile {
            Profile::Constant(v) => *v,
            Profile::Linear { offset, slope } => offset + slope * x.x,
            Profile::Gaussian {
                base,
                amplitude,
                center,
                width,
            } => base + amplitude * (-(x - *center).norm_squared() / (2.0 * width * width)).exp(),
            Profile::Oscillating {
                mean,
                amplitude,
                frequency,
            } => {
                let w = 2.0 * PI * frequency;
                mean + amplitude * (w * x.x).sin() * (w * x.y).sin()
            }
            Profile::Raster { grid, min, max } => {
                if max > min {
                    PRESET_MIN + (PRESET_MAX - PRESET_MIN) * (grid.bilinear(x.x, x.y) - min) / (max - min)
                } else {
                    0.5 * (PRESET_MIN + PRESET_MAX)
                }
            }
            Profile::Manufactured => 1.0 + x.x * x.x,
            Profile::Matrix(m) => 0.5 * m.trace(),
        }
    }

    /// Lipschitz bound of the rescaled raster (realistic kind only).
    pub fn raster_lipschitz(&self) -> Option<f64> {
        match &self.profile {
            Profile::Raster { grid, min, max } if max > min => {
                Some(grid.lipschitz_bound() * (PRESET_MAX - PRESET_MIN) / (max - min))
            }
            Profile::Raster { .. } => Some(0.0),
            _ => None,
        }
    }

    /// Row divergence `(div sigma)_i = sum_j d_j sigma_ij` by centered
    /// differences with step `step`.
    pub fn divergence_fd(&self, x: Vec2, step: f64) -> Vec2 {
        let ex = Vec2::new(step, 0.0);
        let ey = Vec2::new(0.0, step);
        let dx = {
            let (p, m) = (self.eval_unchecked(x + ex), self.eval_unchecked(x - ex));
            ((p.xx - m.xx) / (2.0 * step), (p.xy - m.xy) / (2.0 * step))
        };
        let dy = {
            let (p, m) = (self.eval_unchecked(x + ey), self.eval_unchecked(x - ey));
            ((p.xy - m.xy) / (2.0 * step), (p.yy - m.yy) / (2.0 * step))
        };
        Vec2::new(dx.0 + dy.0, dx.1 + dy.1)
    }
}

/// Largest `max(lambda_max, 1/lambda_min)` over the mesh quadrature points.
/// Fails if a sample has a non-positive eigenvalue or exceeds the field's
/// certified `kappa`.
pub fn certify_ellipticity(field: &ConductivityField, mesh: &TriangleMesh) -> Result<f64> {
    let mut kappa: f64 = 1.0;
    for q in mesh.quadrature_points() {
        let s = field.evaluate(q.point)?;
        let (lo, hi) = s.eigenvalues();
        if !(lo > 0.0) || !hi.is_finite() {
            return Err(Error::NotAdmissible {
                x: q.point.x,
                y: q.point.y,
                reason: format!("eigenvalues ({lo}, {hi})"),
            });
        }
        kappa = kappa.max(hi).max(1.0 / lo);
    }
    if kappa > field.kappa() * (1.0 + 1e-12) {
        return Err(Error::Certification(format!(
            "sampled ellipticity {kappa} exceeds the certified bound {} of `{}`",
            field.kappa(),
            field.kind()
        )));
    }
    Ok(kappa)
}
