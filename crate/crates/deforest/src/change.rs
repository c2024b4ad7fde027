//! Deforestation labels from two forest masks at different epochs.

use thiserror::Error;

use crate::raster::{assert_aligned, CellClass, Grid, RasterError};

#[derive(Debug, Error)]
pub enum ChangeError {
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Per-pixel change labels: 1 where forest at t0 became non-forest at t1,
/// 0 where forest persisted, nodata everywhere the pixel was not forest at
/// t0 (or either input is nodata). Reforestation therefore also maps to
/// nodata; only loss is modeled.
pub fn deforestation_labels(mask_t0: &Grid, mask_t1: &Grid) -> Result<Grid, ChangeError> {
    assert_aligned(&[mask_t0, mask_t1])?;
    let c0 = mask_t0.cell_classes()?;
    let c1 = mask_t1.cell_classes()?;
    let nodata = mask_t0.header.nodata_value;

    let cells = c0
        .iter()
        .zip(&c1)
        .map(|(&t0, &t1)| match (t0, t1) {
            (CellClass::Forest, CellClass::NonForest) => 1.0,
            (CellClass::Forest, CellClass::Forest) => 0.0,
            _ => nodata,
        })
        .collect();
    Ok(mask_t0.with_cells(cells)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{GridHeader, DEFAULT_NODATA};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mask(cells: Vec<f64>, ncols: usize) -> Grid {
        let nrows = cells.len() / ncols;
        Grid::new(GridHeader::new(ncols, nrows, 30.0), cells).unwrap()
    }

    #[test]
    fn truth_table_matches_rule() {
        let nd = DEFAULT_NODATA;
        // (t0, t1) -> expected label
        let cases = [
            ((0.0, 1.0), 1.0), // forest lost
            ((0.0, 0.0), 0.0), // forest kept
            ((1.0, 0.0), nd),  // reforestation: outside the label domain
            ((1.0, 1.0), nd),  // never forest
            ((nd, 0.0), nd),
            ((nd, 1.0), nd),
            ((0.0, nd), nd),
            ((1.0, nd), nd),
            ((nd, nd), nd),
        ];
        for ((t0, t1), want) in cases {
            let labels =
                deforestation_labels(&mask(vec![t0], 1), &mask(vec![t1], 1)).unwrap();
            assert_eq!(labels.cells[0], want, "case ({t0}, {t1})");
        }
    }

    #[test]
    fn self_comparison_is_all_stable() {
        let m = mask(vec![0.0, 1.0, DEFAULT_NODATA, 0.0, 1.0, 0.0], 3);
        let labels = deforestation_labels(&m, &m).unwrap();
        for (i, &v) in m.cells.iter().enumerate() {
            if v == 0.0 {
                assert_eq!(labels.cells[i], 0.0);
            } else {
                assert!(labels.is_nodata(labels.cells[i]));
            }
        }
    }

    #[test]
    fn label_counts_match_set_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let cells0: Vec<f64> = (0..100)
                .map(|_| if rng.gen_bool(0.5) { 0.0 } else { 1.0 })
                .collect();
            let cells1: Vec<f64> = (0..100)
                .map(|_| if rng.gen_bool(0.5) { 0.0 } else { 1.0 })
                .collect();
            let m0 = mask(cells0, 10);
            let m1 = mask(cells1, 10);
            let labels = deforestation_labels(&m0, &m1).unwrap();

            let forest_t0 = m0.cells.iter().filter(|&&v| v == 0.0).count();
            let forest_both = (0..100)
                .filter(|&i| m0.cells[i] == 0.0 && m1.cells[i] == 0.0)
                .count();
            let ones = labels.cells.iter().filter(|&&v| v == 1.0).count();
            assert_eq!(ones, forest_t0 - forest_both);
        }
    }

    #[test]
    fn misaligned_masks_are_rejected() {
        let m0 = mask(vec![0.0; 4], 2);
        let mut m1 = mask(vec![0.0; 4], 2);
        m1.header.xllcorner = 500.0;
        assert!(deforestation_labels(&m0, &m1).is_err());
    }
}
