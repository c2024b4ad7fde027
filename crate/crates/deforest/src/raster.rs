//! Single-band raster data model and plain-text ASCII grid I/O.
//!
//! The on-disk format is the common ASCII grid layout: `key value` header
//! lines (`ncols`, `nrows`, `xllcorner`, `yllcorner`, `cellsize`, optional
//! `nodata_value` defaulting to -9999), followed by the cells row-major,
//! one row per line, row 0 northernmost. The writer is canonical (lowercase
//! keys in fixed order, shortest round-trip number rendering) so that
//! `read(write(g))` reproduces `g` exactly and repeated writes are
//! byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Sentinel used when a file omits `nodata_value`.
pub const DEFAULT_NODATA: f64 = -9999.0;

/// Tolerance, in map units, for corner and cellsize agreement checks.
pub const ALIGN_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("line {line}: unknown header key `{key}`")]
    UnknownHeaderKey { line: usize, key: String },
    #[error("line {line}: header key `{key}` given more than once")]
    DuplicateHeaderKey { line: usize, key: String },
    #[error("missing header key `{key}`")]
    MissingHeaderKey { key: &'static str },
    #[error("line {line}: header `{key}` has invalid value `{value}`")]
    InvalidHeaderValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("header `{field}` must be positive, got {value}")]
    NonPositiveDimension { field: &'static str, value: f64 },
    #[error("line {line}, token {token}: `{text}` is not a finite number")]
    BadCellToken {
        line: usize,
        token: usize,
        text: String,
    },
    #[error("expected {expected} cells, found {found}")]
    CellCount { expected: usize, found: usize },
    #[error("grid has {found} cells but the header implies {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("cell {index} holds {value}, which is neither finite nor the nodata sentinel")]
    NonFiniteCell { index: usize, value: f64 },
    #[error("cell ({row}, {col}) holds {value}; expected 0, 1, or the nodata sentinel")]
    InvalidClassCell { row: usize, col: usize, value: f64 },
    #[error("grids are not aligned: `{field}` differs ({left} vs {right})")]
    NotAligned {
        field: &'static str,
        left: f64,
        right: f64,
    },
    #[error("alignment check requires at least one grid")]
    NoGrids,
    #[error("reclassification source value {0} appears in more than one rule")]
    OverlappingSources(f64),
    #[error("reclassification value {0} is not finite")]
    NonFiniteReclassValue(f64),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Georeferencing header shared by every layer of a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct GridHeader {
    pub ncols: usize,
    pub nrows: usize,
    pub xllcorner: f64,
    pub yllcorner: f64,
    pub cellsize: f64,
    pub nodata_value: f64,
}

impl GridHeader {
    pub fn new(ncols: usize, nrows: usize, cellsize: f64) -> Self {
        GridHeader {
            ncols,
            nrows,
            xllcorner: 0.0,
            yllcorner: 0.0,
            cellsize,
            nodata_value: DEFAULT_NODATA,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.ncols * self.nrows
    }

    fn validate(&self) -> Result<(), RasterError> {
        if self.ncols == 0 {
            return Err(RasterError::NonPositiveDimension {
                field: "ncols",
                value: 0.0,
            });
        }
        if self.nrows == 0 {
            return Err(RasterError::NonPositiveDimension {
                field: "nrows",
                value: 0.0,
            });
        }
        if !(self.cellsize > 0.0) || !self.cellsize.is_finite() {
            return Err(RasterError::NonPositiveDimension {
                field: "cellsize",
                value: self.cellsize,
            });
        }
        Ok(())
    }
}

/// A single-band raster: header plus row-major cells (row 0 northernmost).
///
/// Grids are immutable after construction; every operation over them is a
/// pure function returning a new grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub header: GridHeader,
    pub cells: Vec<f64>,
}

impl Grid {
    /// Build a grid, checking the shape and that every cell is finite.
    pub fn new(header: GridHeader, cells: Vec<f64>) -> Result<Self, RasterError> {
        header.validate()?;
        if cells.len() != header.cell_count() {
            return Err(RasterError::ShapeMismatch {
                expected: header.cell_count(),
                found: cells.len(),
            });
        }
        for (i, &v) in cells.iter().enumerate() {
            if !v.is_finite() && v != header.nodata_value {
                return Err(RasterError::NonFiniteCell { index: i, value: v });
            }
        }
        Ok(Grid { header, cells })
    }

    /// New grid with this grid's header but different cells.
    pub fn with_cells(&self, cells: Vec<f64>) -> Result<Self, RasterError> {
        Grid::new(self.header.clone(), cells)
    }

    pub fn ncols(&self) -> usize {
        self.header.ncols
    }

    pub fn nrows(&self) -> usize {
        self.header.nrows
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.nrows() && col < self.ncols());
        row * self.ncols() + col
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[self.index(row, col)]
    }

    pub fn is_nodata(&self, value: f64) -> bool {
        value == self.header.nodata_value
    }

    /// Count of cells not equal to the nodata sentinel.
    pub fn valid_count(&self) -> usize {
        self.cells.iter().filter(|&&v| !self.is_nodata(v)).count()
    }

    /// Decode every cell as the binary class alphabet (0/1/nodata).
    pub fn cell_classes(&self) -> Result<Vec<CellClass>, RasterError> {
        let nodata = self.header.nodata_value;
        let mut out = Vec::with_capacity(self.cells.len());
        for (i, &v) in self.cells.iter().enumerate() {
            match CellClass::from_value(v, nodata) {
                Some(c) => out.push(c),
                None => {
                    return Err(RasterError::InvalidClassCell {
                        row: i / self.ncols(),
                        col: i % self.ncols(),
                        value: v,
                    })
                }
            }
        }
        Ok(out)
    }
}

/// Cell alphabet of the binary class layers.
///
/// On disk the class of interest is 0 and everything else is 1: forest
/// masks store forest as 0 and non-forest as 1, and urban masks reuse the
/// same convention with urban as the 0 class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    Forest,
    NonForest,
    NoData,
}

impl CellClass {
    pub fn from_value(value: f64, nodata: f64) -> Option<CellClass> {
        if value == nodata {
            Some(CellClass::NoData)
        } else if value == 0.0 {
            Some(CellClass::Forest)
        } else if value == 1.0 {
            Some(CellClass::NonForest)
        } else {
            None
        }
    }

    pub fn to_value(self, nodata: f64) -> f64 {
        match self {
            CellClass::Forest => 0.0,
            CellClass::NonForest => 1.0,
            CellClass::NoData => nodata,
        }
    }
}

const HEADER_KEYS: [&str; 6] = [
    "ncols",
    "nrows",
    "xllcorner",
    "yllcorner",
    "cellsize",
    "nodata_value",
];

/// Parse an ASCII grid. Diagnostics carry 1-based line and token positions.
pub fn read_ascii_grid(text: &str) -> Result<Grid, RasterError> {
    let mut raw: [Option<(usize, f64)>; 6] = [None; 6];
    let mut cells: Vec<f64> = Vec::new();
    let mut in_header = true;

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let mut tokens = line.split_whitespace().peekable();
        let first = match tokens.peek() {
            Some(t) => *t,
            None => continue,
        };

        if in_header && first.parse::<f64>().is_err() {
            let key = first.to_ascii_lowercase();
            let slot = match HEADER_KEYS.iter().position(|k| *k == key) {
                Some(i) => i,
                None => return Err(RasterError::UnknownHeaderKey { line: lineno, key }),
            };
            tokens.next();
            let value = tokens.next().unwrap_or("");
            if value.is_empty() || tokens.next().is_some() {
                return Err(RasterError::InvalidHeaderValue {
                    line: lineno,
                    key,
                    value: line.trim().to_string(),
                });
            }
            if raw[slot].is_some() {
                return Err(RasterError::DuplicateHeaderKey { line: lineno, key });
            }
            let parsed: f64 = if slot < 2 {
                // dimensions must be plain integers
                value
                    .parse::<i64>()
                    .map(|v| v as f64)
                    .map_err(|_| RasterError::InvalidHeaderValue {
                        line: lineno,
                        key: key.clone(),
                        value: value.to_string(),
                    })?
            } else {
                let v: f64 = value.parse().map_err(|_| RasterError::InvalidHeaderValue {
                    line: lineno,
                    key: key.clone(),
                    value: value.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(RasterError::InvalidHeaderValue {
                        line: lineno,
                        key,
                        value: value.to_string(),
                    });
                }
                v
            };
            raw[slot] = Some((lineno, parsed));
            continue;
        }

        in_header = false;
        for (ti, tok) in tokens.enumerate() {
            let v: f64 = tok.parse().map_err(|_| RasterError::BadCellToken {
                line: lineno,
                token: ti + 1,
                text: tok.to_string(),
            })?;
            if !v.is_finite() {
                return Err(RasterError::BadCellToken {
                    line: lineno,
                    token: ti + 1,
                    text: tok.to_string(),
                });
            }
            cells.push(v);
        }
    }

    let required = |slot: usize| -> Result<f64, RasterError> {
        raw[slot]
            .map(|(_, v)| v)
            .ok_or(RasterError::MissingHeaderKey {
                key: HEADER_KEYS[slot],
            })
    };
    let ncols_f = required(0)?;
    let nrows_f = required(1)?;
    if ncols_f < 1.0 {
        return Err(RasterError::NonPositiveDimension {
            field: "ncols",
            value: ncols_f,
        });
    }
    if nrows_f < 1.0 {
        return Err(RasterError::NonPositiveDimension {
            field: "nrows",
            value: nrows_f,
        });
    }
    let header = GridHeader {
        ncols: ncols_f as usize,
        nrows: nrows_f as usize,
        xllcorner: required(2)?,
        yllcorner: required(3)?,
        cellsize: required(4)?,
        nodata_value: raw[5].map(|(_, v)| v).unwrap_or(DEFAULT_NODATA),
    };
    header.validate()?;
    if cells.len() != header.cell_count() {
        return Err(RasterError::CellCount {
            expected: header.cell_count(),
            found: cells.len(),
        });
    }
    Grid::new(header, cells)
}

/// Render a grid in the canonical form: lowercase header keys in fixed
/// order, then one row of cells per line. Numbers use Rust's shortest
/// round-trip formatting, so writing is deterministic and lossless.
pub fn write_ascii_grid(grid: &Grid) -> String {
    let h = &grid.header;
    let mut out = String::with_capacity(grid.cells.len() * 8 + 128);
    let _ = writeln!(out, "ncols {}", h.ncols);
    let _ = writeln!(out, "nrows {}", h.nrows);
    let _ = writeln!(out, "xllcorner {}", h.xllcorner);
    let _ = writeln!(out, "yllcorner {}", h.yllcorner);
    let _ = writeln!(out, "cellsize {}", h.cellsize);
    let _ = writeln!(out, "nodata_value {}", h.nodata_value);
    for row in grid.cells.chunks(h.ncols) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn read_grid_file(path: &Path) -> Result<Grid, RasterError> {
    let text = std::fs::read_to_string(path).map_err(|source| RasterError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_ascii_grid(&text)
}

pub fn write_grid_file(path: &Path, grid: &Grid) -> Result<(), RasterError> {
    std::fs::write(path, write_ascii_grid(grid)).map_err(|source| RasterError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Where a reclassification rule sends matching cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReclassTarget {
    Value(f64),
    NoData,
}

/// One reclassification rule: any cell equal to one of `sources` becomes
/// `target`.
#[derive(Debug, Clone)]
pub struct ReclassRule {
    pub sources: Vec<f64>,
    pub target: ReclassTarget,
}

impl ReclassRule {
    pub fn new(sources: Vec<f64>, target: ReclassTarget) -> Self {
        ReclassRule { sources, target }
    }
}

/// Map categorical cell values onto new ones. Cells matching no rule get
/// `default`; nodata cells stay nodata; the header is unchanged.
pub fn reclassify(
    grid: &Grid,
    rules: &[ReclassRule],
    default: ReclassTarget,
) -> Result<Grid, RasterError> {
    let mut seen: Vec<f64> = Vec::new();
    for rule in rules {
        if let ReclassTarget::Value(v) = rule.target {
            if !v.is_finite() {
                return Err(RasterError::NonFiniteReclassValue(v));
            }
        }
        for &s in &rule.sources {
            if !s.is_finite() {
                return Err(RasterError::NonFiniteReclassValue(s));
            }
            if seen.iter().any(|&p| p == s) {
                return Err(RasterError::OverlappingSources(s));
            }
            seen.push(s);
        }
    }
    if let ReclassTarget::Value(v) = default {
        if !v.is_finite() {
            return Err(RasterError::NonFiniteReclassValue(v));
        }
    }

    let nodata = grid.header.nodata_value;
    let resolve = |t: ReclassTarget| match t {
        ReclassTarget::Value(v) => v,
        ReclassTarget::NoData => nodata,
    };
    let cells = grid
        .cells
        .iter()
        .map(|&v| {
            if v == nodata {
                return nodata;
            }
            for rule in rules {
                if rule.sources.iter().any(|&s| s == v) {
                    return resolve(rule.target);
                }
            }
            resolve(default)
        })
        .collect();
    grid.with_cells(cells)
}

/// Check that all grids cover the same pixels: equal dimensions, and
/// cellsize/corners within [`ALIGN_TOL`] map units. The error names the
/// first differing field.
pub fn assert_aligned(grids: &[&Grid]) -> Result<(), RasterError> {
    let first = *grids.first().ok_or(RasterError::NoGrids)?;
    for g in &grids[1..] {
        let checks: [(&'static str, f64, f64, f64); 5] = [
            ("ncols", first.header.ncols as f64, g.header.ncols as f64, 0.0),
            ("nrows", first.header.nrows as f64, g.header.nrows as f64, 0.0),
            ("cellsize", first.header.cellsize, g.header.cellsize, ALIGN_TOL),
            ("xllcorner", first.header.xllcorner, g.header.xllcorner, ALIGN_TOL),
            ("yllcorner", first.header.yllcorner, g.header.yllcorner, ALIGN_TOL),
        ];
        for (field, left, right, tol) in checks {
            if (left - right).abs() > tol {
                return Err(RasterError::NotAligned { field, left, right });
            }
        }
    }
    Ok(())
}
