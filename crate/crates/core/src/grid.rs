//! Periodic grids on the torus `[0, L)^n`, scalar and vector fields, and
//! their flat binary and CSV encodings.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid with `N` points per axis on a torus of period `L`.
///
/// Grid point `(i, j)` sits at `(i h, j h)` and is stored at `i * N + j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDim(dim));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {length}")));
        }
        Ok(Self { dim, n, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Total number of grid points `N^n`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `h^n`, the weight of one point in Riemann sums.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinates of the point with flat index `idx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        if self.dim == 1 {
            [idx as f64 * h, 0.0]
        } else {
            [(idx / self.n) as f64 * h, (idx % self.n) as f64 * h]
        }
    }

    /// Frequency `k / L` of FFT bin `k` along one axis, in `[-N/2, N/2)`.
    pub fn frequency(&self, k: usize) -> f64 {
        let n = self.n as i64;
        let k = k as i64;
        let signed = if k < n / 2 { k } else { k - n };
        signed as f64 / self.length
    }

    pub fn is_nyquist(&self, k: usize) -> bool {
        k == self.n / 2
    }

    /// Frequency vector of the flat spectral index `idx`.
    pub fn frequency_vector(&self, idx: usize) -> [f64; 2] {
        if self.dim == 1 {
            [self.frequency(idx), 0.0]
        } else {
            [self.frequency(idx / self.n), self.frequency(idx % self.n)]
        }
    }

    /// Largest `|xi|` on the frequency grid.
    pub fn max_frequency(&self) -> f64 {
        0.5 * self.n as f64 / self.length * (self.dim as f64).sqrt()
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Axis-aligned box `[lo, hi]` inside the torus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubBox {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl SubBox {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Self { lo: [lo, 0.0], hi: [hi, 0.0] }
    }

    pub fn rect(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Self { lo, hi }
    }

    /// Cube `[c - r, c + r]^n` centred in the torus.
    pub fn centered(grid: &Grid, half_width: f64) -> Self {
        let c = 0.5 * grid.length();
        Self { lo: [c - half_width; 2], hi: [c + half_width; 2] }
    }

    pub fn contains(&self, x: [f64; 2], dim: usize) -> bool {
        (0..dim).all(|d| x[d] >= self.lo[d] && x[d] <= self.hi[d])
    }

    /// Checks that the box lies strictly inside `(0, L)^n`.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        for d in 0..grid.dim() {
            if !(self.lo[d] > 0.0 && self.hi[d] < grid.length() && self.lo[d] < self.hi[d]) {
                return Err(Error::InvalidGrid(format!(
                    "sub-box [{}, {}] on axis {d} is not strictly inside (0, {})",
                    self.lo[d], self.hi[d], grid.length()
                )));
            }
        }
        Ok(())
    }

    /// 0/1 mask of the grid points in the box.
    pub fn mask(&self, grid: &Grid) -> Vec<bool> {
        (0..grid.len()).map(|i| self.contains(grid.point(i), grid.dim())).collect()
    }
}

/// Scalar samples on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    pub values: Vec<f64>,
    support: Option<SubBox>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid with {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, support: None })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()], support: None }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()], support: None }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid, values, support: None }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn support(&self) -> Option<&SubBox> {
        self.support.as_ref()
    }

    /// Zeroes every value outside `omega` and records it as the support.
    pub fn restrict_to(mut self, omega: SubBox) -> Self {
        self.mask_in_place(&omega);
        self.support = Some(omega);
        self
    }

    pub fn mask_in_place(&mut self, omega: &SubBox) {
        let g = self.grid;
        for (i, v) in self.values.iter_mut().enumerate() {
            if !omega.contains(g.point(i), g.dim()) {
                *v = 0.0;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Grid inner product `h^n sum u v`.
    pub fn dot(&self, other: &Field) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self.grid.cell_volume() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Field { grid: self.grid, values, support: None })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Field { grid: self.grid, values, support: None })
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|v| c * v).collect(), support: self.support }
    }

    pub fn write_bin(&self, path: &Path) -> Result<()> {
        write_bin(path, &self.grid, &[&self.values])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv(path, &self.grid, &["u"], &[&self.values])
    }
}

/// `n`-vector samples on a grid, stored component by component.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    pub components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: Grid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.is_empty() || components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch("vector components do not match the grid".into()));
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, components: vec![vec![0.0; grid.len()]; grid.dim()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Pointwise Euclidean norm.
    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.components.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.magnitude().into_iter().fold(0.0, f64::max)
    }

    /// Grid inner product `h^n sum_x sum_k a_k(x) b_k(x)`.
    pub fn dot(&self, other: &VectorField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        if self.components.len() != other.components.len() {
            return Err(Error::GridMismatch("component counts differ".into()));
        }
        let s: f64 = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum();
        Ok(self.grid.cell_volume() * s)
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        self.grid.check_same(&other.grid)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(VectorField { grid: self.grid, components })
    }

    pub fn write_bin(&self, path: &Path) -> Result<()> {
        let refs: Vec<&[f64]> = self.components.iter().map(|c| c.as_slice()).collect();
        write_bin(path, &self.grid, &refs)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let names: Vec<String> = (0..self.components.len()).map(|k| format!("d{k}")).collect();
        let names: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let refs: Vec<&[f64]> = self.components.iter().map(|c| c.as_slice()).collect();
        write_csv(path, &self.grid, &names, &refs)
    }
}

/// Writes `[dim u64][N u64][L f64]` followed by every component in turn, all
/// little-endian.
fn write_bin(path: &Path, grid: &Grid, components: &[&[f64]]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&(grid.dim() as u64).to_le_bytes())?;
    w.write_all(&(grid.points_per_axis() as u64).to_le_bytes())?;
    w.write_all(&grid.length().to_le_bytes())?;
    for c in components {
        for v in c.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a binary field file; returns the grid and one vector per stored component.
pub fn read_bin(path: &Path) -> Result<(Grid, Vec<Vec<f64>>)> {
    let bytes = fs::read(path)?;
    decode_bin(&bytes)
}

pub fn decode_bin(bytes: &[u8]) -> Result<(Grid, Vec<Vec<f64>>)> {
    if bytes.len() < 24 || bytes.len() % 8 != 0 {
        return Err(Error::Io("truncated field file".into()));
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("8 bytes") };
    let dim = u64::from_le_bytes(word(0)) as usize;
    let n = u64::from_le_bytes(word(1)) as usize;
    let length = f64::from_le_bytes(word(2));
    let grid = Grid::new(dim, n, length)?;
    let count = bytes.len() / 8 - 3;
    if count == 0 || count % grid.len() != 0 {
        return Err(Error::Io(format!(
            "{count} values is not a whole number of fields on {} points",
            grid.len()
        )));
    }
    let values: Vec<f64> = (0..count).map(|i| f64::from_le_bytes(word(3 + i))).collect();
    Ok((grid, values.chunks(grid.len()).map(|c| c.to_vec()).collect()))
}

/// CSV with a header and `{:.16e}` floats; one-dimensional grids only.
fn write_csv(path: &Path, grid: &Grid, names: &[&str], columns: &[&[f64]]) -> Result<()> {
    if grid.dim() != 1 {
        return Err(Error::UnsupportedDim(grid.dim()));
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    write!(w, "x")?;
    for n in names {
        write!(w, ",{n}")?;
    }
    writeln!(w)?;
    for i in 0..grid.len() {
        write!(w, "{}", fmt_float(grid.point(i)[0]))?;
        for c in columns {
            write!(w, ",{}", fmt_float(c[i]))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a generic CSV table with the float format used throughout.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| fmt_float(*v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1, 4, 1.0).is_err());
        assert!(Grid::new(1, 24, 1.0).is_err());
        assert!(Grid::new(3, 16, 1.0).is_err());
        assert!(Grid::new(2, 16, 0.0).is_err());
        let g = Grid::new(2, 16, 4.0).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g.spacing(), 0.25);
    }

    #[test]
    fn frequencies_are_fft_ordered() {
        let g = Grid::new(1, 8, 2.0).unwrap();
        let f: Vec<f64> = (0..8).map(|k| g.frequency(k)).collect();
        assert_eq!(f, vec![0.0, 0.5, 1.0, 1.5, -2.0, -1.5, -1.0, -0.5]);
        assert!(g.is_nyquist(4));
    }

    #[test]
    fn restriction_vanishes_outside() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let omega = SubBox::rect([0.25, 0.25], [0.5, 0.75]);
        let u = Field::constant(g, 3.0).restrict_to(omega);
        for i in 0..g.len() {
            if !omega.contains(g.point(i), 2) {
                assert_eq!(u.values[i], 0.0);
            } else {
                assert_eq!(u.values[i], 3.0);
            }
        }
    }

    #[test]
    fn binary_round_trip() {
        let dir = std::env::temp_dir().join(format!("nlgrad-grid-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let g = Grid::new(2, 8, 3.5).unwrap();
        let v = VectorField::new(g, vec![(0..64).map(|i| i as f64).collect(), vec![-0.25; 64]]).unwrap();
        let p = dir.join("v.bin");
        v.write_bin(&p).unwrap();
        let (g2, comps) = read_bin(&p).unwrap();
        assert_eq!(g2, g);
        assert_eq!(comps, v.components);
        assert_eq!(fs::metadata(&p).unwrap().len(), 24 + 2 * 64 * 8);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let dir = std::env::temp_dir().join(format!("nlgrad-csv-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let g = Grid::new(1, 8, 1.0).unwrap();
        let u = Field::from_fn(g, |x| 1.0 / 3.0 + x[0]);
        let p = dir.join("u.csv");
        u.write_csv(&p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,u"));
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!(first[1], 1.0 / 3.0);
        fs::remove_dir_all(&dir).ok();
    }
}
