//! Per-pixel predictor rasters: focal forest-cover percentage, focal
//! fragmentation index, and Euclidean distance to a target class, plus the
//! aligned feature stack fed to the network.
//!
//! Focal windows are odd-sided squares clipped to the raster at the edges;
//! a focal output is nodata exactly where the window's center cell is
//! nodata.

use thiserror::Error;

use crate::raster::{assert_aligned, CellClass, Grid, RasterError};

/// Canonical feature order of the model input stack.
pub const FEATURE_NAMES: [&str; 3] = ["cover", "dist_urban", "elev"];

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("window side must be an odd number >= 3, got {0}")]
    BadWindowSide(usize),
    #[error("window side {side} exceeds the raster extent ({nrows}x{ncols})")]
    WindowTooLarge {
        side: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("mask contains no {0:?} cell")]
    NoTargetCells(CellClass),
    #[error("distance target must be Forest or NonForest")]
    NoDataTarget,
}

/// Odd-sided square focal window; the study default is 3x3, with 9x9 and
/// 15x15 as the supported variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    side: usize,
}

impl WindowSpec {
    pub fn new(side: usize) -> Result<Self, FeatureError> {
        if side < 3 || side % 2 == 0 {
            return Err(FeatureError::BadWindowSide(side));
        }
        Ok(WindowSpec { side })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Half-width: cells on each side of the center.
    pub fn reach(&self) -> usize {
        self.side / 2
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { side: 3 }
    }
}

fn check_window(mask: &Grid, window: WindowSpec) -> Result<(), FeatureError> {
    if window.side() > mask.nrows() || window.side() > mask.ncols() {
        return Err(FeatureError::WindowTooLarge {
            side: window.side(),
            nrows: mask.nrows(),
            ncols: mask.ncols(),
        });
    }
    Ok(())
}

fn window_bounds(center: usize, reach: usize, len: usize) -> (usize, usize) {
    (center.saturating_sub(reach), (center + reach).min(len - 1))
}

/// Percentage of forest cells among the valid cells of the focal window.
///
/// Output is in [0, 100]; nodata cells are excluded from the denominator.
pub fn forest_cover_index(mask: &Grid, window: WindowSpec) -> Result<Grid, FeatureError> {
    check_window(mask, window)?;
    let classes = mask.cell_classes()?;
    let (nrows, ncols) = (mask.nrows(), mask.ncols());
    let reach = window.reach();
    let nodata = mask.header.nodata_value;

    let mut cells = vec![0.0; nrows * ncols];
    for r in 0..nrows {
        let (rlo, rhi) = window_bounds(r, reach, nrows);
        for c in 0..ncols {
            let idx = r * ncols + c;
            if classes[idx] == CellClass::NoData {
                cells[idx] = nodata;
                continue;
            }
            let (clo, chi) = window_bounds(c, reach, ncols);
            let mut forest = 0usize;
            let mut valid = 0usize;
            for wr in rlo..=rhi {
                for wc in clo..=chi {
                    match classes[wr * ncols + wc] {
                        CellClass::Forest => {
                            forest += 1;
                            valid += 1;
                        }
                        CellClass::NonForest => valid += 1,
                        CellClass::NoData => {}
                    }
                }
            }
            cells[idx] = 100.0 * forest as f64 / valid as f64;
        }
    }
    Ok(mask.with_cells(cells)?)
}

/// Focal fragmentation index: boundary pairs / (sqrt(forest) * sqrt(valid)).
///
/// A boundary pair is a 4-adjacent unordered pair of valid in-window cells
/// with one forest and one non-forest member. A window with no forest cell
/// scores 0.
pub fn matheron_index(mask: &Grid, window: WindowSpec) -> Result<Grid, FeatureError> {
    check_window(mask, window)?;
    let classes = mask.cell_classes()?;
    let (nrows, ncols) = (mask.nrows(), mask.ncols());
    let reach = window.reach();
    let nodata = mask.header.nodata_value;

    let mixed = |a: CellClass, b: CellClass| {
        matches!(
            (a, b),
            (CellClass::Forest, CellClass::NonForest) | (CellClass::NonForest, CellClass::Forest)
        )
    };

    let mut cells = vec![0.0; nrows * ncols];
    for r in 0..nrows {
        let (rlo, rhi) = window_bounds(r, reach, nrows);
        for c in 0..ncols {
            let idx = r * ncols + c;
            if classes[idx] == CellClass::NoData {
                cells[idx] = nodata;
                continue;
            }
            let (clo, chi) = window_bounds(c, reach, ncols);
            let mut valid = 0usize;
            let mut forest = 0usize;
            let mut boundary = 0usize;
            for wr in rlo..=rhi {
                for wc in clo..=chi {
                    let here = classes[wr * ncols + wc];
                    match here {
                        CellClass::Forest => {
                            forest += 1;
                            valid += 1;
                        }
                        CellClass::NonForest => valid += 1,
                        CellClass::NoData => {}
                    }
                    // count each unordered pair once: right and down neighbors
                    if wc + 1 <= chi && mixed(here, classes[wr * ncols + wc + 1]) {
                        boundary += 1;
                    }
                    if wr + 1 <= rhi && mixed(here, classes[(wr + 1) * ncols + wc]) {
                        boundary += 1;
                    }
                }
            }
            cells[idx] = if forest == 0 {
                0.0
            } else {
                boundary as f64 / ((forest as f64).sqrt() * (valid as f64).sqrt())
            };
        }
    }
    Ok(mask.with_cells(cells)?)
}

/// Exact squared distance transform of one scanline.
///
/// Lower envelope of the parabolas `y = f[i] + (x - i)^2` over the finite
/// heights (Felzenszwalb-Huttenlocher); infinite heights are skipped, and a
/// scanline with no finite height stays infinite throughout.
fn squared_dt_1d(f: &[f64], out: &mut [f64], hull: &mut Vec<usize>, breaks: &mut Vec<f64>) {
    let n = f.len();
    hull.clear();
    breaks.clear();
    breaks.resize(n + 1, f64::INFINITY);

    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        let fq = f[q] + (q * q) as f64;
        loop {
            match hull.last() {
                None => {
                    hull.push(q);
                    breaks[0] = f64::NEG_INFINITY;
                    breaks[1] = f64::INFINITY;
                    break;
                }
                Some(&p) => {
                    let fp = f[p] + (p * p) as f64;
                    let s = (fq - fp) / (2.0 * (q as f64 - p as f64));
                    if s <= breaks[hull.len() - 1] {
                        hull.pop();
                    } else {
                        breaks[hull.len()] = s;
                        breaks[hull.len() + 1] = f64::INFINITY;
                        hull.push(q);
                        break;
                    }
                }
            }
        }
    }

    if hull.is_empty() {
        out.fill(f64::INFINITY);
        return;
    }
    let mut k = 0usize;
    for q in 0..n {
        while breaks[k + 1] < q as f64 {
            k += 1;
        }
        let p = hull[k];
        let d = q as f64 - p as f64;
        out[q] = f[p] + d * d;
    }
}

/// Exact Euclidean distance from every cell center to the nearest cell of
/// `target`, in map units (pixel distance times the mask's cellsize).
///
/// Target cells map to 0. Nodata cells are treated as non-target and still
/// receive a distance, so the output has no nodata cells.
pub fn distance_to_class(mask: &Grid, target: CellClass) -> Result<Grid, FeatureError> {
    if target == CellClass::NoData {
        return Err(FeatureError::NoDataTarget);
    }
    let classes = mask.cell_classes()?;
    let (nrows, ncols) = (mask.nrows(), mask.ncols());
    if !classes.iter().any(|&c| c == target) {
        return Err(FeatureError::NoTargetCells(target));
    }

    let mut sq: Vec<f64> = classes
        .iter()
        .map(|&c| if c == target { 0.0 } else { f64::INFINITY })
        .collect();

    let mut hull = Vec::with_capacity(nrows.max(ncols));
    let mut breaks = Vec::with_capacity(nrows.max(ncols) + 1);
    let mut line = vec![0.0; ncols.max(nrows)];
    let mut out_line = vec![0.0; ncols.max(nrows)];

    for r in 0..nrows {
        let row = &mut sq[r * ncols..(r + 1) * ncols];
        line[..ncols].copy_from_slice(row);
        squared_dt_1d(&line[..ncols], &mut out_line[..ncols], &mut hull, &mut breaks);
        row.copy_from_slice(&out_line[..ncols]);
    }
    for c in 0..ncols {
        for r in 0..nrows {
            line[r] = sq[r * ncols + c];
        }
        squared_dt_1d(&line[..nrows], &mut out_line[..nrows], &mut hull, &mut breaks);
        for r in 0..nrows {
            sq[r * ncols + c] = out_line[r];
        }
    }

    let cellsize = mask.header.cellsize;
    let cells = sq.into_iter().map(|d| d.sqrt() * cellsize).collect();
    Ok(mask.with_cells(cells)?)
}

/// The aligned model input layers in the order [`FEATURE_NAMES`], plus a
/// per-pixel validity mask that is true only where all layers are valid.
#[derive(Debug, Clone)]
pub struct FeatureStack {
    names: Vec<String>,
    layers: Vec<Grid>,
    valid: Vec<bool>,
}

impl FeatureStack {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn layers(&self) -> &[Grid] {
        &self.layers
    }

    pub fn header(&self) -> &crate::raster::GridHeader {
        &self.layers[0].header
    }

    pub fn nrows(&self) -> usize {
        self.layers[0].nrows()
    }

    pub fn ncols(&self) -> usize {
        self.layers[0].ncols()
    }

    pub fn n_features(&self) -> usize {
        self.layers.len()
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.valid[index]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Raw feature vector at a flat pixel index, or None where any layer is
    /// nodata.
    pub fn feature_vector(&self, index: usize) -> Option<Vec<f64>> {
        if !self.valid[index] {
            return None;
        }
        Some(self.layers.iter().map(|g| g.cells[index]).collect())
    }
}

/// Assemble the canonical [cover, dist_urban, elev] stack. The caller's
/// argument order is trusted; no reordering is attempted.
pub fn stack_features(
    cover: Grid,
    dist_urban: Grid,
    elevation: Grid,
) -> Result<FeatureStack, FeatureError> {
    assert_aligned(&[&cover, &dist_urban, &elevation])?;
    let layers = vec![cover, dist_urban, elevation];
    let n = layers[0].cells.len();
    let valid = (0..n)
        .map(|i| layers.iter().all(|g| !g.is_nodata(g.cells[i])))
        .collect();
    Ok(FeatureStack {
        names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        layers,
        valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{GridHeader, DEFAULT_NODATA};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mask_from(cells: Vec<f64>, ncols: usize, cellsize: f64) -> Grid {
        let nrows = cells.len() / ncols;
        Grid::new(GridHeader::new(ncols, nrows, cellsize), cells).unwrap()
    }

    fn random_mask(rng: &mut ChaCha8Rng, nrows: usize, ncols: usize, nodata_frac: f64) -> Grid {
        let cells = (0..nrows * ncols)
            .map(|_| {
                if rng.gen_bool(nodata_frac) {
                    DEFAULT_NODATA
                } else if rng.gen_bool(0.5) {
                    0.0
                } else {
                    1.0
                }
            })
            .collect();
        mask_from(cells, ncols, 1.0)
    }

    /// Nested-loop focal counting, written independently of the library path.
    fn oracle_cover(mask: &Grid, side: usize) -> Vec<f64> {
        let (nrows, ncols) = (mask.nrows(), mask.ncols());
        let h = (side / 2) as isize;
        let nodata = mask.header.nodata_value;
        let mut out = vec![0.0; nrows * ncols];
        for r in 0..nrows as isize {
            for c in 0..ncols as isize {
                let center = mask.cells[(r as usize) * ncols + c as usize];
                if center == nodata {
                    out[(r as usize) * ncols + c as usize] = nodata;
                    continue;
                }
                let mut forest = 0.0;
                let mut valid = 0.0;
                for dr in -h..=h {
                    for dc in -h..=h {
                        let (rr, cc) = (r + dr, c + dc);
                        if rr < 0 || cc < 0 || rr >= nrows as isize || cc >= ncols as isize {
                            continue;
                        }
                        let v = mask.cells[(rr as usize) * ncols + cc as usize];
                        if v == nodata {
                            continue;
                        }
                        valid += 1.0;
                        if v == 0.0 {
                            forest += 1.0;
                        }
                    }
                }
                out[(r as usize) * ncols + c as usize] = 100.0 * forest / valid;
            }
        }
        out
    }

    #[test]
    fn cover_saturates_on_all_forest() {
        let mask = mask_from(vec![0.0; 9], 3, 1.0);
        let out = forest_cover_index(&mask, WindowSpec::default()).unwrap();
        assert_eq!(out.get(1, 1), 100.0);
    }

    #[test]
    fn cover_counts_single_forest_pixel() {
        let mut cells = vec![1.0; 9];
        cells[4] = 0.0;
        let mask = mask_from(cells, 3, 1.0);
        let out = forest_cover_index(&mask, WindowSpec::default()).unwrap();
        assert!((out.get(1, 1) - 100.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn cover_clips_at_edges() {
        // corner of an all-forest 3x3 sees a 2x2 window
        let mask = mask_from(vec![0.0; 9], 3, 1.0);
        let out = forest_cover_index(&mask, WindowSpec::default()).unwrap();
        assert_eq!(out.get(0, 0), 100.0);
    }

    #[test]
    fn cover_matches_bruteforce_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let mask = random_mask(&mut rng, 32, 32, 0.1);
            let got = forest_cover_index(&mask, WindowSpec::new(3).unwrap()).unwrap();
            let want = oracle_cover(&mask, 3);
            for i in 0..want.len() {
                assert!(
                    (got.cells[i] - want[i]).abs() <= 1e-12,
                    "pixel {i}: {} vs {}",
                    got.cells[i],
                    want[i]
                );
            }
        }
    }

    #[test]
    fn cover_is_nodata_exactly_on_nodata_centers() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mask = random_mask(&mut rng, 16, 16, 0.3);
        let out = forest_cover_index(&mask, WindowSpec::default()).unwrap();
        for i in 0..mask.cells.len() {
            assert_eq!(mask.is_nodata(mask.cells[i]), out.is_nodata(out.cells[i]));
            if !out.is_nodata(out.cells[i]) {
                assert!((0.0..=100.0).contains(&out.cells[i]));
            }
        }
    }

    #[test]
    fn window_larger_than_raster_is_rejected() {
        let mask = mask_from(vec![0.0; 9], 3, 1.0);
        assert!(matches!(
            forest_cover_index(&mask, WindowSpec::new(5).unwrap()),
            Err(FeatureError::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn window_spec_validates_side() {
        assert!(WindowSpec::new(4).is_err());
        assert!(WindowSpec::new(1).is_err());
        assert!(WindowSpec::new(15).is_ok());
    }

    #[test]
    fn matheron_zero_without_boundary_or_forest() {
        let uniform_forest = mask_from(vec![0.0; 9], 3, 1.0);
        let out = matheron_index(&uniform_forest, WindowSpec::default()).unwrap();
        assert!(out.cells.iter().all(|&v| v == 0.0));

        let uniform_nonforest = mask_from(vec![1.0; 9], 3, 1.0);
        let out = matheron_index(&uniform_nonforest, WindowSpec::default()).unwrap();
        assert!(out.cells.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matheron_checkerboard_center() {
        // forest at corners + center: N_F = 5, N = 9, every 4-adjacent pair mixed
        let cells = vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let mask = mask_from(cells, 3, 1.0);
        let out = matheron_index(&mask, WindowSpec::default()).unwrap();
        // exhaustive pair enumeration: 6 horizontal + 6 vertical, all mixed
        let mut pairs = 0;
        for r in 0..3 {
            for c in 0..3 {
                if c + 1 < 3 && mask.get(r, c) != mask.get(r, c + 1) {
                    pairs += 1;
                }
                if r + 1 < 3 && mask.get(r, c) != mask.get(r + 1, c) {
                    pairs += 1;
                }
            }
        }
        assert_eq!(pairs, 12);
        let expected = pairs as f64 / (5.0f64.sqrt() * 9.0f64.sqrt());
        assert!((out.get(1, 1) - expected).abs() < 1e-12);
    }

    #[test]
    fn matheron_is_nonnegative_and_nodata_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mask = random_mask(&mut rng, 20, 20, 0.15);
        let out = matheron_index(&mask, WindowSpec::new(5).unwrap()).unwrap();
        for i in 0..mask.cells.len() {
            if mask.is_nodata(mask.cells[i]) {
                assert!(out.is_nodata(out.cells[i]));
            } else {
                assert!(out.cells[i] >= 0.0);
            }
        }
    }

    /// All-pairs nearest-target scan.
    fn oracle_distance(mask: &Grid, target: f64) -> Vec<f64> {
        let (nrows, ncols) = (mask.nrows(), mask.ncols());
        let targets: Vec<(usize, usize)> = (0..nrows * ncols)
            .filter(|&i| mask.cells[i] == target)
            .map(|i| (i / ncols, i % ncols))
            .collect();
        (0..nrows * ncols)
            .map(|i| {
                let (r, c) = (i / ncols, i % ncols);
                let best = targets
                    .iter()
                    .map(|&(tr, tc)| {
                        let dr = r as f64 - tr as f64;
                        let dc = c as f64 - tc as f64;
                        dr * dr + dc * dc
                    })
                    .fold(f64::INFINITY, f64::min);
                best.sqrt() * mask.header.cellsize
            })
            .collect()
    }

    #[test]
    fn distance_zero_on_target_and_cellsize_on_neighbor() {
        let mut cells = vec![1.0; 9];
        cells[4] = 0.0;
        let mask = mask_from(cells, 3, 90.0);
        let out = distance_to_class(&mask, CellClass::Forest).unwrap();
        assert_eq!(out.get(1, 1), 0.0);
        assert_eq!(out.get(0, 1), 90.0);
        assert_eq!(out.get(1, 0), 90.0);
        assert!((out.get(0, 0) - 90.0 * 2.0f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn distance_matches_allpairs_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..5 {
            let mask = random_mask(&mut rng, 33, 29, 0.1);
            if !mask.cells.iter().any(|&v| v == 0.0) {
                continue;
            }
            let got = distance_to_class(&mask, CellClass::Forest).unwrap();
            let want = oracle_distance(&mask, 0.0);
            for i in 0..want.len() {
                assert!(
                    (got.cells[i] - want[i]).abs() <= 1e-9,
                    "pixel {i}: {} vs {}",
                    got.cells[i],
                    want[i]
                );
            }
        }
    }

    #[test]
    fn distance_nodata_cells_still_receive_distances() {
        let cells = vec![0.0, DEFAULT_NODATA, 1.0, 1.0];
        let mask = mask_from(cells, 2, 1.0);
        let out = distance_to_class(&mask, CellClass::Forest).unwrap();
        assert_eq!(out.get(0, 1), 1.0);
        assert!(out.cells.iter().all(|&v| v.is_finite()));
    }

    #[test]
    fn distance_requires_a_target() {
        let mask = mask_from(vec![1.0; 4], 2, 1.0);
        assert!(matches!(
            distance_to_class(&mask, CellClass::Forest),
            Err(FeatureError::NoTargetCells(CellClass::Forest))
        ));
        assert!(matches!(
            distance_to_class(&mask, CellClass::NoData),
            Err(FeatureError::NoDataTarget)
        ));
    }

    #[test]
    fn distance_is_transpose_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..5 {
            let mask = random_mask(&mut rng, 17, 23, 0.0);
            if !mask.cells.iter().any(|&v| v == 0.0) {
                continue;
            }
            let transposed_cells: Vec<f64> = (0..23 * 17)
                .map(|i| mask.get(i % 17, i / 17))
                .collect();
            let transposed = mask_from(transposed_cells, 23, 1.0);

            let d = distance_to_class(&mask, CellClass::Forest).unwrap();
            let dt = distance_to_class(&transposed, CellClass::Forest).unwrap();
            for r in 0..17 {
                for c in 0..23 {
                    assert_eq!(d.get(r, c), dt.get(c, r));
                }
            }
        }
    }

    #[test]
    fn distance_positive_off_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let mask = random_mask(&mut rng, 16, 16, 0.05);
        if let Ok(out) = distance_to_class(&mask, CellClass::Forest) {
            for i in 0..mask.cells.len() {
                if mask.cells[i] == 0.0 {
                    assert_eq!(out.cells[i], 0.0);
                } else {
                    assert!(out.cells[i] > 0.0);
                }
            }
        }
    }

    #[test]
    fn stack_builds_and_tracks_validity() {
        let cover = mask_from(vec![50.0, 25.0, 0.0, 100.0], 2, 1.0);
        let dist = mask_from(vec![0.0, 30.0, 30.0, 60.0], 2, 1.0);
        let mut elev = mask_from(vec![100.0, 200.0, 300.0, 400.0], 2, 1.0);
        elev.cells[2] = DEFAULT_NODATA;
        let stack = stack_features(cover, dist, elev).unwrap();
        assert_eq!(stack.n_features(), 3);
        assert_eq!(stack.valid_count(), 3);
        assert!(stack.feature_vector(2).is_none());
        assert_eq!(stack.feature_vector(1), Some(vec![25.0, 30.0, 200.0]));
        assert_eq!(stack.names(), &FEATURE_NAMES);
    }

    #[test]
    fn stack_rejects_misaligned_layers() {
        let a = mask_from(vec![0.0; 4], 2, 1.0);
        let b = mask_from(vec![0.0; 4], 2, 2.0);
        let c = mask_from(vec![0.0; 4], 2, 1.0);
        assert!(matches!(
            stack_features(a, b, c),
            Err(FeatureError::Raster(RasterError::NotAligned { .. }))
        ));
    }
}
