//! Grid geometry, great-circle distance, and ring/disk membership.
//!
//! Cells belong to a disk or ring by their CENTER point. All cell lists are
//! sorted by (distance, row, col) so downstream floating-point reductions are
//! reproducible regardless of worker count.

use serde::{Deserialize, Serialize};

use crate::error::GridError;

/// Mean Earth radius in km (IUGG R1). The model is a sphere: ring widths of
/// 500 m and up dwarf the ellipsoidal correction.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// A point on the sphere. `lat_deg` in [-90, 90], `lon_deg` in [-180, 180).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self, GridError> {
        let ok = lat_deg.is_finite()
            && lon_deg.is_finite()
            && (-90.0..=90.0).contains(&lat_deg)
            && (-180.0..180.0).contains(&lon_deg);
        if !ok {
            return Err(GridError::InvalidPoint { lat_deg, lon_deg });
        }
        Ok(GeoPoint { lat_deg, lon_deg })
    }
}

/// Header of an ESRI-style raster: `row 0` is the NORTHERNMOST row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub ncols: usize,
    pub nrows: usize,
    pub xll_deg: f64,
    pub yll_deg: f64,
    pub cellsize_deg: f64,
    pub nodata: f64,
}

impl GridSpec {
    pub fn new(
        ncols: usize,
        nrows: usize,
        xll_deg: f64,
        yll_deg: f64,
        cellsize_deg: f64,
        nodata: f64,
    ) -> Result<Self, GridError> {
        let spec = GridSpec { ncols, nrows, xll_deg, yll_deg, cellsize_deg, nodata };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the type invariants. Needed separately because specs also
    /// arrive via deserialization, which bypasses `new`.
    pub fn validate(&self) -> Result<(), GridError> {
        let fail = |reason: String| Err(GridError::InvalidSpec { reason });
        if self.ncols == 0 || self.nrows == 0 {
            return fail(format!("dimensions must be positive, got {}x{}", self.nrows, self.ncols));
        }
        if self.ncols.checked_mul(self.nrows).is_none() {
            return fail(format!("cell count {}x{} overflows", self.nrows, self.ncols));
        }
        if !(self.cellsize_deg.is_finite() && self.cellsize_deg > 0.0) {
            return fail(format!("cellsize must be > 0, got {}", self.cellsize_deg));
        }
        if !self.nodata.is_finite() {
            return fail(format!("nodata sentinel must be finite, got {}", self.nodata));
        }
        if !(self.xll_deg.is_finite() && self.yll_deg.is_finite()) {
            return fail("corner coordinates must be finite".to_string());
        }
        // Small tolerance: corners that are exact in decimal may not be in binary.
        const EPS: f64 = 1e-9;
        let lat_top = self.yll_deg + self.nrows as f64 * self.cellsize_deg;
        if self.yll_deg < -90.0 - EPS || lat_top > 90.0 + EPS {
            return fail(format!("latitude extent [{}, {}] outside [-90, 90]", self.yll_deg, lat_top));
        }
        let lon_right = self.xll_deg + self.ncols as f64 * self.cellsize_deg;
        if self.xll_deg < -180.0 - EPS || lon_right > 180.0 + EPS {
            return fail(format!("longitude extent [{}, {}] outside [-180, 180]", self.xll_deg, lon_right));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.ncols * self.nrows
    }

    pub fn lat_top_deg(&self) -> f64 {
        self.yll_deg + self.nrows as f64 * self.cellsize_deg
    }

    pub fn lon_right_deg(&self) -> f64 {
        self.xll_deg + self.ncols as f64 * self.cellsize_deg
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Result<GeoPoint, GridError> {
        if row >= self.nrows || col >= self.ncols {
            return Err(GridError::IndexOutOfRange {
                row,
                col,
                nrows: self.nrows,
                ncols: self.ncols,
            });
        }
        Ok(self.cell_center_unchecked(row, col))
    }

    /// `cell_center` without the bounds check, for hot loops that already
    /// iterate valid indices.
    pub fn cell_center_unchecked(&self, row: usize, col: usize) -> GeoPoint {
        GeoPoint {
            lon_deg: self.xll_deg + (col as f64 + 0.5) * self.cellsize_deg,
            lat_deg: self.yll_deg + (self.nrows as f64 - row as f64 - 0.5) * self.cellsize_deg,
        }
    }

    /// Cell containing `p`, or None if `p` lies outside the grid extent.
    /// Points exactly on the north/east edge count as inside the last cell.
    pub fn cell_of(&self, p: GeoPoint) -> Option<(usize, usize)> {
        let fx = (p.lon_deg - self.xll_deg) / self.cellsize_deg;
        let fy = (p.lat_deg - self.yll_deg) / self.cellsize_deg;
        if !(0.0..=self.ncols as f64).contains(&fx) || !(0.0..=self.nrows as f64).contains(&fy) {
            return None;
        }
        let col = (fx.floor() as usize).min(self.ncols - 1);
        let row_from_south = (fy.floor() as usize).min(self.nrows - 1);
        Some((self.nrows - 1 - row_from_south, col))
    }

    /// True if `p` falls inside the grid extent (edges inclusive).
    pub fn contains_point(&self, p: GeoPoint) -> bool {
        p.lon_deg >= self.xll_deg
            && p.lon_deg <= self.lon_right_deg()
            && p.lat_deg >= self.yll_deg
            && p.lat_deg <= self.lat_top_deg()
    }

    /// Spherical area of any cell in `row`: R² · Δλ · (sin φ_top − sin φ_bot).
    pub fn cell_area_km2(&self, row: usize) -> f64 {
        let lat_top = self.yll_deg + (self.nrows - row) as f64 * self.cellsize_deg;
        let lat_bot = lat_top - self.cellsize_deg;
        EARTH_RADIUS_KM
            * EARTH_RADIUS_KM
            * self.cellsize_deg.to_radians()
            * (lat_top.to_radians().sin() - lat_bot.to_radians().sin())
    }
}

/// Great-circle distance in km on the spherical Earth model.
///
/// Exactly symmetric in its arguments: the coordinate differences enter
/// through `abs`, and the remaining operations are commutative.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let dphi = (b.lat_deg - a.lat_deg).abs().to_radians();
    let dlam = (b.lon_deg - a.lon_deg).abs().to_radians();
    let s = (dphi / 2.0).sin().powi(2)
        + a.lat_deg.to_radians().cos() * b.lat_deg.to_radians().cos() * (dlam / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * s.sqrt().min(1.0).asin()
}

/// One cell of a disk or ring, tagged with its center distance from the site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellDistance {
    pub row: usize,
    pub col: usize,
    pub distance_km: f64,
}

/// Disk membership plus the fraction of the disk's area that the grid covers.
#[derive(Debug, Clone)]
pub struct DiskCells {
    pub cells: Vec<CellDistance>,
    pub coverage: f64,
}

/// Concentric half-open rings [n·dr, (n+1)·dr) around a site, truncated to
/// the disk of radius `r_max_km`. Ring 0 contains distance 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSpec {
    pub center: GeoPoint,
    pub r_max_km: f64,
    pub dr_km: f64,
}

impl RingSpec {
    pub fn new(center: GeoPoint, r_max_km: f64, dr_km: f64) -> Result<Self, GridError> {
        if !(r_max_km.is_finite() && r_max_km > 0.0) {
            return Err(GridError::InvalidRingSpec {
                reason: format!("r_max_km must be > 0, got {r_max_km}"),
            });
        }
        if !(dr_km.is_finite() && dr_km > 0.0) {
            return Err(GridError::InvalidRingSpec {
                reason: format!("dr_km must be > 0, got {dr_km}"),
            });
        }
        Ok(RingSpec { center, r_max_km, dr_km })
    }

    pub fn n_rings(&self) -> usize {
        ((self.r_max_km / self.dr_km).ceil() as usize).max(1)
    }

    /// Ring containing distance `d_km`, or None outside [0, r_max]. Uses
    /// floor(d/dr); the clamp fires only at d == r_max when r_max is an
    /// exact multiple of dr.
    pub fn ring_index(&self, d_km: f64) -> Option<usize> {
        if !(0.0..=self.r_max_km).contains(&d_km) {
            return None;
        }
        Some(((d_km / self.dr_km).floor() as usize).min(self.n_rings() - 1))
    }

    /// Midpoint label of ring `n`, in km.
    pub fn ring_mid_km(&self, n: usize) -> f64 {
        (n as f64 + 0.5) * self.dr_km
    }
}

/// Disk cells partitioned into rings; each disk cell appears in exactly one
/// ring, and ring lists keep the (distance, row, col) order.
#[derive(Debug, Clone)]
pub struct RingPartition {
    pub rings: Vec<Vec<CellDistance>>,
    pub coverage: f64,
}

/// Cells whose centers lie within `r_km` of `center`, sorted by
/// (distance, row, col). A disk reaching outside the grid is truncated
/// silently; `coverage` reports the fraction of disk area the grid covers.
///
/// `r_km == 0` degenerates to the single cell containing `center` (if any),
/// tagged with the center-to-cell-center distance.
pub fn cells_within_radius(spec: &GridSpec, center: GeoPoint, r_km: f64) -> DiskCells {
    if r_km == 0.0 {
        return match spec.cell_of(center) {
            Some((row, col)) => {
                let d = haversine_km(center, spec.cell_center_unchecked(row, col));
                DiskCells { cells: vec![CellDistance { row, col, distance_km: d }], coverage: 1.0 }
            }
            None => DiskCells { cells: Vec::new(), coverage: 0.0 },
        };
    }

    let (row_range, col_range) = candidate_window(spec, center, r_km);
    let mut cells = Vec::new();
    for row in row_range {
        for col in col_range.clone() {
            let d = haversine_km(center, spec.cell_center_unchecked(row, col));
            if d <= r_km {
                cells.push(CellDistance { row, col, distance_km: d });
            }
        }
    }
    cells.sort_by(|a, b| {
        a.distance_km
            .total_cmp(&b.distance_km)
            .then(a.row.cmp(&b.row))
            .then(a.col.cmp(&b.col))
    });
    DiskCells { cells, coverage: disk_coverage(spec, center, r_km) }
}

pub fn ring_partition(spec: &GridSpec, ring: &RingSpec) -> RingPartition {
    let disk = cells_within_radius(spec, ring.center, ring.r_max_km);
    let mut rings = vec![Vec::new(); ring.n_rings()];
    for cell in disk.cells {
        // Disk membership guarantees distance <= r_max, so the index exists.
        let n = ring.ring_index(cell.distance_km).expect("disk cell within r_max");
        rings[n].push(cell);
    }
    RingPartition { rings, coverage: disk.coverage }
}

/// Conservative row/col window guaranteed to contain every cell center
/// within `r_km` of `center`, clamped to the grid.
fn candidate_window(
    spec: &GridSpec,
    center: GeoPoint,
    r_km: f64,
) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let dlat_deg = (r_km / EARTH_RADIUS_KM).to_degrees();
    let lat_lo = center.lat_deg - dlat_deg;
    let lat_hi = center.lat_deg + dlat_deg;
    // Meridian shrink: bound Δλ by the widest parallel the disk touches.
    let max_abs_lat = lat_lo.abs().max(lat_hi.abs()).min(90.0);
    let cos_lat = max_abs_lat.to_radians().cos();
    let dlon_deg = if cos_lat < 1e-9 { 360.0 } else { dlat_deg / cos_lat };

    let clamp_idx = |f: f64, n: usize| -> usize {
        if f < 0.0 {
            0
        } else {
            (f as usize).min(n)
        }
    };
    // One-cell margin absorbs the flat-Earth approximation in the bound.
    let col_lo = (center.lon_deg - dlon_deg - spec.xll_deg) / spec.cellsize_deg - 1.0;
    let col_hi = (center.lon_deg + dlon_deg - spec.xll_deg) / spec.cellsize_deg + 2.0;
    let south_lo = (lat_lo - spec.yll_deg) / spec.cellsize_deg - 1.0;
    let south_hi = (lat_hi - spec.yll_deg) / spec.cellsize_deg + 2.0;
    // Row index runs north to south: flip the south-based bounds.
    let row_lo = spec.nrows as f64 - south_hi;
    let row_hi = spec.nrows as f64 - south_lo;
    (
        clamp_idx(row_lo.floor(), spec.nrows)..clamp_idx(row_hi.ceil(), spec.nrows),
        clamp_idx(col_lo.floor(), spec.ncols)..clamp_idx(col_hi.ceil(), spec.ncols),
    )
}

/// Fraction of the disk's area inside the grid extent, by deterministic
/// polar quadrature (64 radii × 256 bearings, area-weighted). Approximate:
/// this is a diagnostic flag, not an input to any statistic.
fn disk_coverage(spec: &GridSpec, center: GeoPoint, r_km: f64) -> f64 {
    const N_R: usize = 64;
    const N_THETA: usize = 256;
    let mut inside = 0.0;
    let mut total = 0.0;
    for ir in 0..N_R {
        let frac = (ir as f64 + 0.5) / N_R as f64;
        let weight = frac; // annulus area grows linearly with radius
        for it in 0..N_THETA {
            let bearing = (it as f64 + 0.5) / N_THETA as f64 * std::f64::consts::TAU;
            let p = destination(center, bearing, frac * r_km);
            total += weight;
            if spec.contains_point(p) {
                inside += weight;
            }
        }
    }
    inside / total
}

/// Great-circle forward step: the point `distance_km` from `p` along
/// `bearing_rad` (clockwise from north). Longitude normalized to [-180, 180).
fn destination(p: GeoPoint, bearing_rad: f64, distance_km: f64) -> GeoPoint {
    let delta = distance_km / EARTH_RADIUS_KM;
    let phi1 = p.lat_deg.to_radians();
    let lam1 = p.lon_deg.to_radians();
    let phi2 =
        (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * bearing_rad.cos()).asin();
    let lam2 = lam1
        + (bearing_rad.sin() * delta.sin() * phi1.cos())
            .atan2(delta.cos() - phi1.sin() * phi2.sin());
    let mut lon_deg = lam2.to_degrees();
    if lon_deg >= 180.0 {
        lon_deg -= 360.0;
    } else if lon_deg < -180.0 {
        lon_deg += 360.0;
    }
    GeoPoint { lat_deg: phi2.to_degrees(), lon_deg }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(ncols: usize, nrows: usize, xll: f64, yll: f64, cell: f64) -> GridSpec {
        GridSpec::new(ncols, nrows, xll, yll, cell, -9999.0).unwrap()
    }

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn cell_center_single_cell() {
        let s = spec(1, 1, 0.0, 0.0, 1.0);
        let c = s.cell_center(0, 0).unwrap();
        assert_eq!((c.lat_deg, c.lon_deg), (0.5, 0.5));
    }

    #[test]
    fn cell_center_two_by_two() {
        let s = spec(2, 2, 0.0, 0.0, 1.0);
        let nw = s.cell_center(0, 0).unwrap();
        assert_eq!((nw.lat_deg, nw.lon_deg), (1.5, 0.5));
        let se = s.cell_center(1, 1).unwrap();
        assert_eq!((se.lat_deg, se.lon_deg), (0.5, 1.5));
    }

    #[test]
    fn cell_center_rejects_out_of_range() {
        let s = spec(2, 2, 0.0, 0.0, 1.0);
        assert!(matches!(s.cell_center(2, 0), Err(GridError::IndexOutOfRange { .. })));
        assert!(matches!(s.cell_center(0, 2), Err(GridError::IndexOutOfRange { .. })));
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(0, 1, 0.0, 0.0, 1.0, -9999.0).is_err());
        assert!(GridSpec::new(1, 1, 0.0, 0.0, 0.0, -9999.0).is_err());
        assert!(GridSpec::new(1, 1, 0.0, 0.0, 1.0, f64::NAN).is_err());
        // Top edge would cross the pole.
        assert!(GridSpec::new(1, 10, 0.0, 85.0, 1.0, -9999.0).is_err());
        assert!(GridSpec::new(10, 1, 175.0, 0.0, 1.0, -9999.0).is_err());
        assert!(GridSpec::new(10, 10, 0.0, 80.0, 1.0, -9999.0).is_ok());
    }

    #[test]
    fn haversine_identity() {
        assert_eq!(haversine_km(pt(0.0, 0.0), pt(0.0, 0.0)), 0.0);
    }

    #[test]
    fn haversine_one_degree_equator() {
        let d = haversine_km(pt(0.0, 0.0), pt(0.0, 1.0));
        assert!((d - 111.195).abs() < 0.001, "got {d}");
    }

    #[test]
    fn haversine_quarter_meridian() {
        let d = haversine_km(pt(0.0, 0.0), pt(90.0, 0.0));
        assert!((d - 10007.557).abs() < 0.001, "got {d}");
    }

    #[test]
    fn haversine_symmetric_bitwise() {
        let a = pt(37.42, -122.08);
        let b = pt(-33.86, 151.21);
        assert_eq!(haversine_km(a, b).to_bits(), haversine_km(b, a).to_bits());
    }

    #[test]
    fn cell_of_roundtrip_and_edges() {
        let s = spec(4, 3, 10.0, 20.0, 0.5);
        for row in 0..3 {
            for col in 0..4 {
                let c = s.cell_center(row, col).unwrap();
                assert_eq!(s.cell_of(c), Some((row, col)));
            }
        }
        // Corners: SW belongs to the last row / first col, NE to row 0 / last col.
        assert_eq!(s.cell_of(pt(20.0, 10.0)), Some((2, 0)));
        assert_eq!(s.cell_of(pt(21.5, 12.0)), Some((0, 3)));
        assert_eq!(s.cell_of(pt(19.999, 10.0)), None);
        assert_eq!(s.cell_of(pt(20.0, 12.001)), None);
    }

    #[test]
    fn degenerate_disk_is_containing_cell() {
        let s = spec(10, 10, 0.0, 0.0, 0.01);
        let site = pt(0.042, 0.061);
        let disk = cells_within_radius(&s, site, 0.0);
        assert_eq!(disk.cells.len(), 1);
        let cell = disk.cells[0];
        assert_eq!((cell.row, cell.col), s.cell_of(site).unwrap());
        let expected = haversine_km(site, s.cell_center(cell.row, cell.col).unwrap());
        assert_eq!(cell.distance_km, expected);
        assert_eq!(disk.coverage, 1.0);

        let outside = cells_within_radius(&s, pt(5.0, 5.0), 0.0);
        assert!(outside.cells.is_empty());
        assert_eq!(outside.coverage, 0.0);
    }

    #[test]
    fn tiny_radius_at_cell_center_is_one_cell() {
        let s = spec(10, 10, 0.0, 0.0, 0.01);
        let center = s.cell_center(5, 5).unwrap();
        // Half the inter-center spacing is ~0.55 km at the equator.
        let disk = cells_within_radius(&s, center, 0.4);
        assert_eq!(disk.cells.len(), 1);
        assert_eq!((disk.cells[0].row, disk.cells[0].col), (5, 5));
        assert_eq!(disk.cells[0].distance_km, 0.0);
    }

    /// Brute-force oracle: membership must match an exhaustive scan of all
    /// cell centers, and the list must come back ordered.
    #[test]
    fn disk_matches_exhaustive_scan() {
        let s = spec(100, 100, 0.0, 0.0, 0.01);
        let site = pt(0.503, 0.497);
        let disk = cells_within_radius(&s, site, 3.0);

        let mut expected = Vec::new();
        for row in 0..s.nrows {
            for col in 0..s.ncols {
                let d = haversine_km(site, s.cell_center(row, col).unwrap());
                if d <= 3.0 {
                    expected.push((row, col));
                }
            }
        }
        let got: Vec<(usize, usize)> = disk.cells.iter().map(|c| (c.row, c.col)).collect();
        let mut got_sorted = got.clone();
        got_sorted.sort();
        let mut expected_sorted = expected.clone();
        expected_sorted.sort();
        assert_eq!(got_sorted, expected_sorted);
        assert!(!disk.cells.is_empty());

        for w in disk.cells.windows(2) {
            let key = |c: &CellDistance| (c.distance_km, c.row, c.col);
            let (a, b) = (key(&w[0]), key(&w[1]));
            assert!(a.0 < b.0 || (a.0 == b.0 && (a.1, a.2) < (b.1, b.2)));
        }
        assert!((disk.coverage - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disk_truncated_at_grid_edge_reports_partial_coverage() {
        let s = spec(100, 100, 0.0, 0.0, 0.01);
        // Site on the west edge: roughly half the disk hangs off the grid.
        let disk = cells_within_radius(&s, pt(0.5, 0.0), 3.0);
        assert!(disk.coverage > 0.4 && disk.coverage < 0.6, "coverage {}", disk.coverage);
        assert!(disk.cells.iter().all(|c| c.col < s.ncols));
    }

    #[test]
    fn single_ring_equals_disk() {
        let s = spec(50, 50, 0.0, 0.0, 0.01);
        let center = pt(0.25, 0.25);
        let ring = RingSpec::new(center, 5.0, 5.0).unwrap();
        let part = ring_partition(&s, &ring);
        assert_eq!(part.rings.len(), 1);
        let disk = cells_within_radius(&s, center, 5.0);
        assert_eq!(part.rings[0], disk.cells);
    }

    /// Brute-force oracle for ring assignment: floor(d/dr), clamped to the
    /// last ring only at d == r_max exactly.
    #[test]
    fn rings_match_bruteforce_assignment() {
        let s = spec(100, 100, 0.0, 0.0, 0.01);
        let center = pt(0.498, 0.502);
        let ring = RingSpec::new(center, 5.0, 1.0).unwrap();
        let part = ring_partition(&s, &ring);
        assert_eq!(part.rings.len(), 5);

        let mut expected: Vec<Vec<(usize, usize)>> = vec![Vec::new(); 5];
        for row in 0..s.nrows {
            for col in 0..s.ncols {
                let d = haversine_km(center, s.cell_center(row, col).unwrap());
                if d <= 5.0 {
                    let n = ((d / 1.0).floor() as usize).min(4);
                    expected[n].push((row, col));
                }
            }
        }
        for (n, cells) in part.rings.iter().enumerate() {
            let mut got: Vec<(usize, usize)> = cells.iter().map(|c| (c.row, c.col)).collect();
            got.sort();
            expected[n].sort();
            assert_eq!(got, expected[n], "ring {n}");
            assert!(!cells.is_empty(), "ring {n} unexpectedly empty");
        }
    }

    #[test]
    fn ring_union_is_disk() {
        let s = spec(80, 80, 10.0, 40.0, 0.005);
        let center = pt(40.2, 10.2);
        let ring = RingSpec::new(center, 4.0, 0.7).unwrap();
        let part = ring_partition(&s, &ring);
        let disk = cells_within_radius(&s, center, 4.0);
        let union: usize = part.rings.iter().map(Vec::len).sum();
        assert_eq!(union, disk.cells.len());
    }

    #[test]
    fn ring_index_edges() {
        let ring = RingSpec::new(pt(0.0, 0.0), 5.0, 1.0).unwrap();
        assert_eq!(ring.n_rings(), 5);
        assert_eq!(ring.ring_index(0.0), Some(0));
        assert_eq!(ring.ring_index(0.999), Some(0));
        assert_eq!(ring.ring_index(1.0), Some(1));
        // Exact outer boundary folds into the last ring.
        assert_eq!(ring.ring_index(5.0), Some(4));
        assert_eq!(ring.ring_index(5.0001), None);
        assert_eq!(ring.ring_index(-0.1), None);
        assert_eq!(ring.ring_mid_km(2), 2.5);
    }

    #[test]
    fn cell_area_matches_crude_estimate() {
        let s = spec(10, 10, 0.0, 0.0, 0.005);
        // Near the equator a 0.005 degree cell is ~0.556 km on a side.
        let a = s.cell_area_km2(5);
        let side = 0.005 * std::f64::consts::PI / 180.0 * EARTH_RADIUS_KM;
        assert!((a - side * side).abs() / (side * side) < 1e-3, "area {a}");
        // Areas shrink away from the equator.
        let far = spec(10, 10, 0.0, 60.0, 0.005);
        assert!(far.cell_area_km2(5) < a);
    }
}
