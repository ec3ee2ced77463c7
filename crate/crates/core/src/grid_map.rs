//! The robot-centered local 2.5D window, the sensing model that fills it, and
//! the world-indexed memories (hazard flags, ever-sensed elevations) the
//! navigator keeps across window motion.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::scalar::{from_usize, Scalar};
use crate::terrain::{bilinear, GridGeometry, HeightField, TerrainView};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell<T> {
    /// `None` while the cell has never been observed.
    pub elevation: Option<T>,
    pub hazard: bool,
}

impl<T> Default for GridCell<T> {
    fn default() -> Self {
        Self {
            elevation: None,
            hazard: false,
        }
    }
}

/// Fixed-size `W × H` window of world cells centered on the robot.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGridMap<T> {
    world: GridGeometry<T>,
    window_w: usize,
    window_h: usize,
    /// World index of the window's lower-left cell.
    i0: i64,
    j0: i64,
    center: Point2<T>,
    cells: Vec<GridCell<T>>,
}

impl<T: Scalar> LocalGridMap<T> {
    /// All-unknown window centered on `center`.
    pub fn empty(world: GridGeometry<T>, window_w: usize, window_h: usize, center: Point2<T>) -> Self {
        let (ci, cj) = world.cell_of(center);
        Self {
            world,
            window_w,
            window_h,
            i0: ci - (window_w / 2) as i64,
            j0: cj - (window_h / 2) as i64,
            center,
            cells: vec![GridCell::default(); window_w * window_h],
        }
    }

    pub fn window_w(&self) -> usize {
        self.window_w
    }

    pub fn window_h(&self) -> usize {
        self.window_h
    }

    pub fn center(&self) -> Point2<T> {
        self.center
    }

    pub fn world(&self) -> &GridGeometry<T> {
        &self.world
    }

    /// World index of the lower-left window cell.
    pub fn window_origin_cell(&self) -> (i64, i64) {
        (self.i0, self.j0)
    }

    pub fn cells(&self) -> &[GridCell<T>] {
        &self.cells
    }

    fn local_index(&self, i: i64, j: i64) -> Option<usize> {
        let li = i - self.i0;
        let lj = j - self.j0;
        (li >= 0 && lj >= 0 && (li as usize) < self.window_w && (lj as usize) < self.window_h)
            .then(|| lj as usize * self.window_w + li as usize)
    }

    /// Cell by world index, `None` outside the window.
    pub fn cell(&self, i: i64, j: i64) -> Option<&GridCell<T>> {
        self.local_index(i, j).map(|k| &self.cells[k])
    }

    /// Iterates `(world_i, world_j, cell)` row by row.
    pub fn iter_cells(&self) -> impl Iterator<Item = (i64, i64, &GridCell<T>)> + '_ {
        self.cells.iter().enumerate().map(move |(k, c)| {
            (
                self.i0 + (k % self.window_w) as i64,
                self.j0 + (k / self.window_w) as i64,
                c,
            )
        })
    }

    /// World-space corners `(min, max)` of the window.
    pub fn bounds(&self) -> (Point2<T>, Point2<T>) {
        let res = self.world.resolution;
        let min = Point2::new(
            self.world.origin.x + T::from_i64(self.i0).unwrap() * res,
            self.world.origin.y + T::from_i64(self.j0).unwrap() * res,
        );
        let max = Point2::new(
            min.x + from_usize::<T>(self.window_w) * res,
            min.y + from_usize::<T>(self.window_h) * res,
        );
        (min, max)
    }

    /// Whether `p` lies in the window's half-open world extent.
    pub fn contains(&self, p: Point2<T>) -> bool {
        let (i, j) = self.world.cell_of(p);
        self.local_index(i, j).is_some()
    }

    /// Overwrites one cell's elevation; ignored outside the window.
    pub fn set_elevation(&mut self, i: i64, j: i64, elevation: Option<T>) {
        if let Some(k) = self.local_index(i, j) {
            self.cells[k].elevation = elevation;
        }
    }

    pub fn unknown_count(&self) -> usize {
        self.cells.iter().filter(|c| c.elevation.is_none()).count()
    }

    /// Copies every flag of `layer` that falls on a known window cell.
    pub fn project_hazards(&mut self, layer: &HazardLayer<T>) {
        for (i, j) in layer.cells_in_range(self.i0, self.j0, self.window_w, self.window_h) {
            if let Some(k) = self.local_index(i, j) {
                if self.cells[k].elevation.is_some() {
                    self.cells[k].hazard = true;
                }
            }
        }
    }
}

impl<T: Scalar> TerrainView<T> for LocalGridMap<T> {
    fn elevation_at(&self, p: Point2<T>) -> Option<T> {
        bilinear(&self.world, p, |i, j| self.cell(i, j).and_then(|c| c.elevation))
    }

    fn is_hazard(&self, p: Point2<T>) -> bool {
        let (i, j) = self.world.cell_of(p);
        self.cell(i, j).is_some_and(|c| c.hazard)
    }

    fn resolution(&self) -> T {
        self.world.resolution
    }
}

/// Perfect ground-truth sensor: every world cell whose center is within
/// `radius` of the robot is observed exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorModel<T> {
    pub window_w: usize,
    pub window_h: usize,
    pub radius: T,
}

impl<T: Scalar> SensorModel<T> {
    /// Recenters the window on `robot` and samples the field. Cells still
    /// inside the window keep what `prior` knew about them.
    pub fn sense(
        &self,
        field: &HeightField<T>,
        robot: Point2<T>,
        prior: Option<&LocalGridMap<T>>,
    ) -> Result<LocalGridMap<T>> {
        if !field.contains(robot) {
            return Err(Error::OutOfBounds {
                x: robot.x.to_f64().unwrap_or(f64::NAN),
                y: robot.y.to_f64().unwrap_or(f64::NAN),
            });
        }
        let world = *field.geometry();
        let mut map = LocalGridMap::empty(world, self.window_w, self.window_h, robot);
        let (i0, j0) = (map.i0, map.j0);
        for lj in 0..self.window_h {
            for li in 0..self.window_w {
                let (i, j) = (i0 + li as i64, j0 + lj as i64);
                let previous = prior.and_then(|p| p.cell(i, j)).copied().unwrap_or_default();
                let sensed = (world.cell_center(i, j).distance(robot) <= self.radius)
                    .then(|| field.cell(i, j))
                    .flatten();
                let elevation = sensed.or(previous.elevation);
                map.cells[lj * self.window_w + li] = GridCell {
                    elevation,
                    hazard: previous.hazard && elevation.is_some(),
                };
            }
        }
        Ok(map)
    }
}

/// World-indexed, grow-only set of hazard-flagged cells.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardLayer<T> {
    world: GridGeometry<T>,
    cells: BTreeSet<(i64, i64)>,
}

impl<T: Scalar> HazardLayer<T> {
    pub fn new(world: GridGeometry<T>) -> Self {
        Self {
            world,
            cells: BTreeSet::new(),
        }
    }

    /// Flags the cell containing `center` and every cell whose center lies
    /// within `radius` of it, clipped to the world. Returns how many cells
    /// were newly flagged.
    pub fn mark_disc(&mut self, center: Point2<T>, radius: T) -> usize {
        let before = self.cells.len();
        let (ci, cj) = self.world.cell_of(center);
        if self.world.in_bounds(ci, cj) {
            self.cells.insert((ci, cj));
        }
        let reach = (radius / self.world.resolution).ceil().to_i64().unwrap_or(0) + 1;
        for j in cj - reach..=cj + reach {
            for i in ci - reach..=ci + reach {
                if self.world.in_bounds(i, j) && self.world.cell_center(i, j).distance(center) <= radius {
                    self.cells.insert((i, j));
                }
            }
        }
        self.cells.len() - before
    }

    pub fn contains_cell(&self, i: i64, j: i64) -> bool {
        self.cells.contains(&(i, j))
    }

    pub fn contains(&self, p: Point2<T>) -> bool {
        let (i, j) = self.world.cell_of(p);
        self.contains_cell(i, j)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.cells.iter().copied()
    }

    fn cells_in_range(&self, i0: i64, j0: i64, w: usize, h: usize) -> impl Iterator<Item = (i64, i64)> + '_ {
        let (i1, j1) = (i0 + w as i64, j0 + h as i64);
        self.cells
            .range((i0, i64::MIN)..(i1, i64::MIN))
            .copied()
            .filter(move |&(_, j)| j >= j0 && j < j1)
    }
}

/// Every elevation the robot has ever observed, indexed by world cell.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownTerrain<T> {
    world: GridGeometry<T>,
    elevations: Vec<Option<T>>,
}

impl<T: Scalar> KnownTerrain<T> {
    pub fn new(world: GridGeometry<T>) -> Self {
        Self {
            world,
            elevations: vec![None; world.nx * world.ny],
        }
    }

    pub fn absorb(&mut self, map: &LocalGridMap<T>) {
        for (i, j, c) in map.iter_cells() {
            if let (Some(h), Some(k)) = (c.elevation, self.world.flat_index(i, j)) {
                self.elevations[k] = Some(h);
            }
        }
    }

    pub fn cell(&self, i: i64, j: i64) -> Option<T> {
        self.world.flat_index(i, j).and_then(|k| self.elevations[k])
    }

    pub fn known_count(&self) -> usize {
        self.elevations.iter().filter(|e| e.is_some()).count()
    }

    /// Pairs the record with hazard flags for feasibility checks.
    pub fn view<'a>(&'a self, hazards: &'a HazardLayer<T>) -> KnownView<'a, T> {
        KnownView {
            known: self,
            hazards,
        }
    }
}

/// Known-terrain record plus hazard layer, seen as one terrain.
#[derive(Debug, Clone, Copy)]
pub struct KnownView<'a, T> {
    known: &'a KnownTerrain<T>,
    hazards: &'a HazardLayer<T>,
}

impl<T: Scalar> TerrainView<T> for KnownView<'_, T> {
    fn elevation_at(&self, p: Point2<T>) -> Option<T> {
        bilinear(&self.known.world, p, |i, j| self.known.cell(i, j))
    }

    fn is_hazard(&self, p: Point2<T>) -> bool {
        self.hazards.contains(p)
    }

    fn resolution(&self) -> T {
        self.known.world.resolution
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::{generate_terrain, TerrainSpec};

    fn hills() -> HeightField<f64> {
        let mut spec = TerrainSpec::<f64>::hilly(11);
        spec.width_m = 20.0;
        spec.height_m = 20.0;
        generate_terrain(&spec).unwrap()
    }

    #[test]
    fn full_radius_leaves_no_unknown_cells() {
        let field = hills();
        let sensor = SensorModel {
            window_w: 20,
            window_h: 20,
            radius: 100.0,
        };
        let map = sensor.sense(&field, Point2::new(10.0, 10.0), None).unwrap();
        assert_eq!(map.unknown_count(), 0);
        assert_eq!(map.cells().len(), 400);
    }

    #[test]
    fn corner_sense_leaves_outside_cells_unknown() {
        let field = hills();
        let sensor = SensorModel {
            window_w: 20,
            window_h: 20,
            radius: 100.0,
        };
        let map = sensor.sense(&field, Point2::new(0.05, 0.05), None).unwrap();
        for (i, j, c) in map.iter_cells() {
            assert_eq!(c.elevation.is_some(), i >= 0 && j >= 0);
        }
        assert_eq!(map.unknown_count(), 400 - 100);
    }

    #[test]
    fn sense_rejects_robot_outside_field() {
        let field = hills();
        let sensor = SensorModel {
            window_w: 10,
            window_h: 10,
            radius: 1.0,
        };
        assert!(matches!(
            sensor.sense(&field, Point2::new(-1.0, 3.0), None),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn sensing_is_idempotent_and_exact() {
        let field = hills();
        let sensor = SensorModel {
            window_w: 30,
            window_h: 24,
            radius: 2.0,
        };
        let p = Point2::new(7.3, 9.9);
        let a = sensor.sense(&field, p, None).unwrap();
        let b = sensor.sense(&field, p, Some(&a)).unwrap();
        assert_eq!(a, b);
        for (i, j, c) in a.iter_cells() {
            if let Some(h) = c.elevation {
                assert_eq!(Some(h), field.cell(i, j));
            }
        }
    }

    /// Two windows shifted by `s` cells along x share `(w − s)·h` cells when
    /// `s < w` and none otherwise.
    #[test]
    fn window_shift_overlap_matches_geometry() {
        let field = hills();
        // radius covers the whole first window; second window is shifted
        let sensor = SensorModel {
            window_w: 20,
            window_h: 20,
            radius: 0.5,
        };
        let full = SensorModel { radius: 50.0, ..sensor };
        let a = Point2::new(5.1, 10.1);
        let first = full.sense(&field, a, None).unwrap();
        // one full window width (20 cells × 0.2 m = 4 m): nothing shared
        let b = Point2::new(9.1, 10.1);
        let second = sensor.sense(&field, b, Some(&first)).unwrap();
        let carried = second
            .iter_cells()
            .filter(|(i, j, c)| c.elevation.is_some() && field.geometry().cell_center(*i, *j).distance(b) > 0.5)
            .count();
        assert_eq!(carried, 0);
        // half a window (10 cells): 10 × 20 shared cells, minus those re-sensed
        let b = Point2::new(7.1, 10.1);
        let second = sensor.sense(&field, b, Some(&first)).unwrap();
        let shared = second
            .iter_cells()
            .filter(|(i, j, _)| first.cell(*i, *j).is_some())
            .count();
        assert_eq!(shared, 10 * 20);
        assert!(second.iter_cells().filter(|(_, _, c)| c.elevation.is_some()).count() >= shared);
    }

    #[test]
    fn recentring_never_changes_shared_cells() {
        let field = hills();
        let sensor = SensorModel {
            window_w: 25,
            window_h: 25,
            radius: 1.7,
        };
        let mut map = sensor.sense(&field, Point2::new(4.0, 4.0), None).unwrap();
        for step in 1..20 {
            let p = Point2::new(4.0 + 0.37 * step as f64, 4.0 + 0.21 * step as f64);
            let next = sensor.sense(&field, p, Some(&map)).unwrap();
            for (i, j, c) in map.iter_cells() {
                if let (Some(h), Some(n)) = (c.elevation, next.cell(i, j)) {
                    assert_eq!(n.elevation, Some(h));
                }
            }
            map = next;
        }
    }

    #[test]
    fn hazard_disc_geometry() {
        let field = hills();
        let mut layer = HazardLayer::new(*field.geometry());
        assert_eq!(layer.mark_disc(Point2::new(3.05, 3.05), 0.0), 1);
        assert!(layer.contains(Point2::new(3.01, 3.19)));

        let mut a = HazardLayer::new(*field.geometry());
        let single = a.mark_disc(Point2::new(10.0, 10.0), 1.0);
        let second = a.mark_disc(Point2::new(10.5, 10.0), 1.0);
        assert!(second > 0 && second < single);
        assert!(a.len() < 2 * single);

        // near the corner the disc is clipped without panicking
        let mut c = HazardLayer::new(*field.geometry());
        let n = c.mark_disc(Point2::new(0.0, 0.0), 1.0);
        assert!(n > 0 && n < single);
        assert!(c.iter().all(|(i, j)| i >= 0 && j >= 0));
    }

    #[test]
    fn hazard_projection_only_on_known_cells() {
        let field = hills();
        let sensor = SensorModel {
            window_w: 20,
            window_h: 20,
            radius: 1.0,
        };
        let mut map = sensor.sense(&field, Point2::new(10.0, 10.0), None).unwrap();
        let mut layer = HazardLayer::new(*field.geometry());
        layer.mark_disc(Point2::new(10.0, 10.0), 3.0);
        map.project_hazards(&layer);
        for (_, _, c) in map.iter_cells() {
            assert!(!c.hazard || c.elevation.is_some());
        }
        assert!(map.is_hazard(Point2::new(10.0, 10.0)));
        assert!(!map.is_hazard(Point2::new(12.5, 10.0)));
        // flags survive re-sensing from the same prior
        let again = sensor.sense(&field, Point2::new(10.3, 10.0), Some(&map)).unwrap();
        assert!(again.is_hazard(Point2::new(10.0, 10.0)));
    }

    #[test]
    fn known_view_matches_field_where_known() {
        let field = hills();
        let sensor = SensorModel {
            window_w: 30,
            window_h: 30,
            radius: 2.5,
        };
        let map = sensor.sense(&field, Point2::new(8.0, 8.0), None).unwrap();
        let mut known = KnownTerrain::new(*field.geometry());
        known.absorb(&map);
        let hazards = HazardLayer::new(*field.geometry());
        let view = known.view(&hazards);
        for k in 0..50 {
            let p = Point2::new(6.5 + 0.06 * k as f64, 7.0 + 0.04 * k as f64);
            assert_eq!(view.elevation_at(p), field.elevation_at(p));
            assert_eq!(map.elevation_at(p), field.elevation_at(p));
        }
        assert_eq!(view.elevation_at(Point2::new(15.0, 15.0)), None);
    }
}
