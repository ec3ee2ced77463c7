//! Ground-truth terrain: the height field, its synthesis from a seed, and the
//! plain-text heightmap format.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::scalar::{from_usize, lit, Scalar};

/// Regular cell lattice anchored at the world origin.
///
/// Cell `(i, j)` covers `[origin.x + i·res, origin.x + (i+1)·res)` along x and
/// the analogous interval along y; its elevation sample sits at the center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry<T> {
    pub origin: Point2<T>,
    pub resolution: T,
    pub nx: usize,
    pub ny: usize,
}

impl<T: Scalar> GridGeometry<T> {
    pub fn cell_of(&self, p: Point2<T>) -> (i64, i64) {
        let fx = ((p.x - self.origin.x) / self.resolution).floor();
        let fy = ((p.y - self.origin.y) / self.resolution).floor();
        (
            fx.to_i64().unwrap_or(i64::MIN),
            fy.to_i64().unwrap_or(i64::MIN),
        )
    }

    pub fn cell_center(&self, i: i64, j: i64) -> Point2<T> {
        let half = lit::<T>(0.5);
        Point2::new(
            self.origin.x + (T::from_i64(i).unwrap() + half) * self.resolution,
            self.origin.y + (T::from_i64(j).unwrap() + half) * self.resolution,
        )
    }

    pub fn in_bounds(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny
    }

    pub fn flat_index(&self, i: i64, j: i64) -> Option<usize> {
        self.in_bounds(i, j)
            .then(|| j as usize * self.nx + i as usize)
    }

    pub fn width_m(&self) -> T {
        from_usize::<T>(self.nx) * self.resolution
    }

    pub fn height_m(&self) -> T {
        from_usize::<T>(self.ny) * self.resolution
    }

    /// True when `p` lies inside the closed extent of the lattice.
    pub fn contains(&self, p: Point2<T>) -> bool {
        let d = p - self.origin;
        d.x >= T::zero() && d.y >= T::zero() && d.x <= self.width_m() && d.y <= self.height_m()
    }
}

/// Bilinear interpolation over cell-center samples.
///
/// Cells whose interpolation weight is exactly zero do not contribute, so a
/// query on a cell center returns that cell's value untouched. Any
/// contributing cell that is unknown makes the result unknown.
pub(crate) fn bilinear<T: Scalar>(
    geometry: &GridGeometry<T>,
    p: Point2<T>,
    sample: impl Fn(i64, i64) -> Option<T>,
) -> Option<T> {
    let half = lit::<T>(0.5);
    let fx = (p.x - geometry.origin.x) / geometry.resolution - half;
    let fy = (p.y - geometry.origin.y) / geometry.resolution - half;
    if !fx.is_finite() || !fy.is_finite() {
        return None;
    }
    let bx = fx.floor();
    let by = fy.floor();
    let tx = fx - bx;
    let ty = fy - by;
    let i0 = bx.to_i64()?;
    let j0 = by.to_i64()?;
    let row = |j: i64| -> Option<T> {
        let a = sample(i0, j)?;
        if tx == T::zero() {
            return Some(a);
        }
        let b = sample(i0 + 1, j)?;
        Some(a + (b - a) * tx)
    };
    let lower = row(j0)?;
    if ty == T::zero() {
        return Some(lower);
    }
    let upper = row(j0 + 1)?;
    Some(lower + (upper - lower) * ty)
}

/// Read access to a (possibly partial) elevation model.
pub trait TerrainView<T: Scalar> {
    /// Interpolated ground height, `None` when unknown.
    fn elevation_at(&self, p: Point2<T>) -> Option<T>;

    /// Whether the cell containing `p` is hazard-flagged.
    fn is_hazard(&self, _p: Point2<T>) -> bool {
        false
    }

    fn resolution(&self) -> T;
}

/// Immutable ground-truth terrain owned by the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField<T> {
    geometry: GridGeometry<T>,
    elevations: Vec<T>,
}

impl<T: Scalar> HeightField<T> {
    /// Builds a field from row-major elevations (`elevations[j * nx + i]`).
    pub fn new(
        origin: Point2<T>,
        resolution: T,
        nx: usize,
        ny: usize,
        elevations: Vec<T>,
    ) -> Result<Self> {
        if !(resolution > T::zero()) || !resolution.is_finite() {
            return Err(Error::config("terrain.resolution", "must be strictly positive"));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::config("terrain.width", "field must contain at least one cell"));
        }
        if elevations.len() != nx * ny {
            return Err(Error::Heightmap(format!(
                "expected {} elevations, got {}",
                nx * ny,
                elevations.len()
            )));
        }
        if let Some(bad) = elevations.iter().position(|h| !h.is_finite()) {
            return Err(Error::Heightmap(format!("elevation #{bad} is not finite")));
        }
        Ok(Self {
            geometry: GridGeometry {
                origin,
                resolution,
                nx,
                ny,
            },
            elevations,
        })
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(
        origin: Point2<T>,
        resolution: T,
        nx: usize,
        ny: usize,
        f: impl Fn(Point2<T>) -> T,
    ) -> Result<Self> {
        let geometry = GridGeometry {
            origin,
            resolution,
            nx,
            ny,
        };
        let mut elevations = Vec::with_capacity(nx * ny);
        for j in 0..ny as i64 {
            for i in 0..nx as i64 {
                elevations.push(f(geometry.cell_center(i, j)));
            }
        }
        Self::new(origin, resolution, nx, ny, elevations)
    }

    pub fn geometry(&self) -> &GridGeometry<T> {
        &self.geometry
    }

    pub fn width_m(&self) -> T {
        self.geometry.width_m()
    }

    pub fn height_m(&self) -> T {
        self.geometry.height_m()
    }

    pub fn elevations(&self) -> &[T] {
        &self.elevations
    }

    /// Elevation sample of cell `(i, j)`, `None` outside the field.
    pub fn cell(&self, i: i64, j: i64) -> Option<T> {
        self.geometry.flat_index(i, j).map(|k| self.elevations[k])
    }

    pub fn contains(&self, p: Point2<T>) -> bool {
        self.geometry.contains(p)
    }

    pub fn min_max(&self) -> (T, T) {
        self.elevations.iter().fold(
            (T::infinity(), T::neg_infinity()),
            |(lo, hi), &h| (lo.min(h), hi.max(h)),
        )
    }
}

impl<T: Scalar> TerrainView<T> for HeightField<T> {
    fn elevation_at(&self, p: Point2<T>) -> Option<T> {
        bilinear(&self.geometry, p, |i, j| self.cell(i, j))
    }

    fn resolution(&self) -> T {
        self.geometry.resolution
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TerrainKind {
    /// Smooth value-noise hills with raised plateaus bounded by vertical cliffs.
    Hilly,
    /// Gentle ground scattered with narrow impassable trunks.
    Forest,
    /// Heightmap read from a file in the text format of [`parse_heightmap`].
    Imported { path: PathBuf },
}

/// Recipe for a synthetic world.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainSpec<T> {
    pub kind: TerrainKind,
    pub seed: u64,
    pub width_m: T,
    pub height_m: T,
    pub resolution: T,
    /// Peak-to-trough spread of the smooth ground, meters.
    pub amplitude: T,
    /// Lowest ground elevation, meters.
    pub base: T,
    pub feature_scale: T,
    /// Plateaus (hilly) or trunks (forest).
    pub cliff_count: usize,
    pub cliff_height: T,
    /// Obstacles keep at least this distance from the field border.
    pub cliff_margin: T,
}

impl<T: Scalar> TerrainSpec<T> {
    pub fn hilly(seed: u64) -> Self {
        Self {
            kind: TerrainKind::Hilly,
            seed,
            width_m: lit(32.0),
            height_m: lit(32.0),
            resolution: lit(0.2),
            amplitude: lit(2.424),
            base: lit(0.549),
            feature_scale: lit(8.0),
            cliff_count: 3,
            cliff_height: lit(1.5),
            cliff_margin: lit(5.0),
        }
    }

    pub fn forest(seed: u64) -> Self {
        Self {
            kind: TerrainKind::Forest,
            seed,
            width_m: lit(44.0),
            height_m: lit(44.0),
            resolution: lit(0.2),
            amplitude: lit(0.844),
            base: lit(0.582),
            feature_scale: lit(6.0),
            cliff_count: 40,
            cliff_height: lit(2.0),
            cliff_margin: lit(4.0),
        }
    }

    pub fn flat(width_m: T, height_m: T, resolution: T) -> Self {
        Self {
            amplitude: T::zero(),
            cliff_count: 0,
            width_m,
            height_m,
            resolution,
            ..Self::hilly(0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T, key: &str| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, "must be strictly positive"))
            }
        };
        positive(self.resolution, "terrain.resolution")?;
        if matches!(self.kind, TerrainKind::Imported { .. }) {
            return Ok(());
        }
        positive(self.width_m, "terrain.width")?;
        positive(self.height_m, "terrain.height")?;
        positive(self.feature_scale, "terrain.feature_scale")?;
        if !(self.amplitude >= T::zero()) || !self.amplitude.is_finite() {
            return Err(Error::config("terrain.amplitude", "must be nonnegative"));
        }
        if !self.base.is_finite() {
            return Err(Error::config("terrain.base", "must be finite"));
        }
        if !(self.cliff_height >= T::zero()) || !self.cliff_height.is_finite() {
            return Err(Error::config("terrain.cliff_height", "must be nonnegative"));
        }
        if !(self.cliff_margin >= T::zero()) {
            return Err(Error::config("terrain.cliff_margin", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Synthesizes (or loads) the ground-truth field described by `spec`.
pub fn generate_terrain<T: Scalar>(spec: &TerrainSpec<T>) -> Result<HeightField<T>> {
    spec.validate()?;
    if let TerrainKind::Imported { path } = &spec.kind {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Heightmap(format!("{}: {e}", path.display())))?;
        return parse_heightmap(&text);
    }
    let nx = (spec.width_m / spec.resolution).round().to_usize().unwrap_or(0);
    let ny = (spec.height_m / spec.resolution).round().to_usize().unwrap_or(0);
    if nx == 0 || ny == 0 {
        return Err(Error::config("terrain.width", "area smaller than one cell"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = ValueNoise::new(&mut rng, spec, 3);
    let origin = Point2::new(T::zero(), T::zero());
    let geometry = GridGeometry {
        origin,
        resolution: spec.resolution,
        nx,
        ny,
    };

    let mut raw = Vec::with_capacity(nx * ny);
    for j in 0..ny as i64 {
        for i in 0..nx as i64 {
            let c = geometry.cell_center(i, j);
            raw.push(noise.sample(c.x.to_f64().unwrap(), c.y.to_f64().unwrap()));
        }
    }
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = hi - lo;
    let mut elevations: Vec<T> = raw
        .iter()
        .map(|&v| {
            let unit = if span > 0.0 { (v - lo) / span } else { 0.0 };
            spec.base + spec.amplitude * lit::<T>(unit)
        })
        .collect();

    let obstacles = place_obstacles(&mut rng, spec);
    if !obstacles.is_empty() {
        for j in 0..ny as i64 {
            for i in 0..nx as i64 {
                let c = geometry.cell_center(i, j);
                let (x, y) = (c.x.to_f64().unwrap(), c.y.to_f64().unwrap());
                if obstacles.iter().any(|o| o.covers(x, y)) {
                    let k = geometry.flat_index(i, j).unwrap();
                    elevations[k] = elevations[k] + spec.cliff_height;
                }
            }
        }
    }
    // stored at the export precision so a written heightmap reloads bit-exactly
    for h in &mut elevations {
        *h = format_nine_digits(*h).parse().unwrap_or(*h);
    }
    HeightField::new(origin, spec.resolution, nx, ny, elevations)
}

/// Multi-octave lattice value noise with quintic fade.
struct ValueNoise {
    octaves: Vec<Lattice>,
}

struct Lattice {
    spacing: f64,
    weight: f64,
    cols: usize,
    values: Vec<f64>,
}

impl ValueNoise {
    fn new<T: Scalar>(rng: &mut ChaCha8Rng, spec: &TerrainSpec<T>, octaves: usize) -> Self {
        let width = spec.width_m.to_f64().unwrap();
        let height = spec.height_m.to_f64().unwrap();
        let mut spacing = spec.feature_scale.to_f64().unwrap();
        let mut weight = 1.0;
        let mut layers = Vec::with_capacity(octaves);
        for _ in 0..octaves {
            let cols = (width / spacing).ceil() as usize + 2;
            let rows = (height / spacing).ceil() as usize + 2;
            let values = (0..cols * rows).map(|_| rng.gen::<f64>()).collect();
            layers.push(Lattice {
                spacing,
                weight,
                cols,
                values,
            });
            spacing *= 0.5;
            weight *= 0.35;
        }
        Self { octaves: layers }
    }

    fn sample(&self, x: f64, y: f64) -> f64 {
        self.octaves.iter().map(|l| l.weight * l.sample(x, y)).sum()
    }
}

impl Lattice {
    fn sample(&self, x: f64, y: f64) -> f64 {
        let gx = x / self.spacing;
        let gy = y / self.spacing;
        let (ix, iy) = (gx.floor() as usize, gy.floor() as usize);
        let (tx, ty) = (fade(gx - gx.floor()), fade(gy - gy.floor()));
        let at = |i: usize, j: usize| self.values[j * self.cols + i];
        let top = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
        let bottom = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

enum Obstacle {
    Plateau { cx: f64, cy: f64, hw: f64, hh: f64 },
    Trunk { cx: f64, cy: f64, r: f64 },
}

impl Obstacle {
    fn covers(&self, x: f64, y: f64) -> bool {
        match *self {
            Obstacle::Plateau { cx, cy, hw, hh } => (x - cx).abs() <= hw && (y - cy).abs() <= hh,
            Obstacle::Trunk { cx, cy, r } => (x - cx).hypot(y - cy) <= r,
        }
    }
}

fn place_obstacles<T: Scalar>(rng: &mut ChaCha8Rng, spec: &TerrainSpec<T>) -> Vec<Obstacle> {
    if spec.cliff_height == T::zero() {
        return Vec::new();
    }
    let width = spec.width_m.to_f64().unwrap();
    let height = spec.height_m.to_f64().unwrap();
    let margin = spec.cliff_margin.to_f64().unwrap();
    let span = |extent: f64, rng: &mut ChaCha8Rng| {
        if extent > 2.0 * margin {
            rng.gen_range(margin..extent - margin)
        } else {
            extent * 0.5
        }
    };
    (0..spec.cliff_count)
        .map(|_| {
            let cx = span(width, rng);
            let cy = span(height, rng);
            match spec.kind {
                TerrainKind::Forest => Obstacle::Trunk {
                    cx,
                    cy,
                    r: rng.gen_range(0.25..0.45),
                },
                _ => Obstacle::Plateau {
                    cx,
                    cy,
                    hw: rng.gen_range(0.6..1.5),
                    hh: rng.gen_range(0.6..1.5),
                },
            }
        })
        .collect()
}

/// Formats `v` with nine significant digits in plain decimal notation.
pub fn format_nine_digits<T: Scalar>(v: T) -> String {
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    // digits = d0 d1 ... d8, value = d0.d1...d8 × 10^exp
    let point = exp + 1;
    let mut out = String::from(sign);
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat('0').take((-point) as usize));
        out.push_str(&digits);
    } else if point as usize >= digits.len() {
        out.push_str(&digits);
        out.extend(std::iter::repeat('0').take(point as usize - digits.len()));
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    if out.contains('.') {
        let trimmed = out.trim_end_matches('0').trim_end_matches('.');
        out = trimmed.to_string();
    }
    if out == "-0" {
        out = "0".to_string();
    }
    out
}

/// Serializes a field: `W H resolution` then `W·H` row-major elevations.
pub fn write_heightmap<T: Scalar>(field: &HeightField<T>) -> String {
    let g = field.geometry();
    let mut out = format!("{} {} {}\n", g.nx, g.ny, format_nine_digits(g.resolution));
    for row in field.elevations().chunks(g.nx) {
        let line: Vec<String> = row.iter().map(|&h| format_nine_digits(h)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parses the text heightmap format. The field origin is the world origin.
pub fn parse_heightmap<T: Scalar>(text: &str) -> Result<HeightField<T>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Heightmap("empty input".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::Heightmap(format!(
            "header must be `W H resolution`, got `{header}`"
        )));
    }
    let nx: usize = fields[0]
        .parse()
        .map_err(|_| Error::Heightmap(format!("bad width `{}`", fields[0])))?;
    let ny: usize = fields[1]
        .parse()
        .map_err(|_| Error::Heightmap(format!("bad height `{}`", fields[1])))?;
    let resolution: T = fields[2]
        .parse()
        .map_err(|_| Error::Heightmap(format!("bad resolution `{}`", fields[2])))?;
    let mut elevations = Vec::with_capacity(nx.saturating_mul(ny));
    for tok in lines.flat_map(str::split_whitespace) {
        let h: T = tok
            .parse()
            .map_err(|_| Error::Heightmap(format!("bad elevation `{tok}`")))?;
        elevations.push(h);
    }
    HeightField::new(Point2::default(), resolution, nx, ny, elevations)
}
