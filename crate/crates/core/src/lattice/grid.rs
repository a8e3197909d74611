use std::ops::{Index, IndexMut};

use crate::{Error, Result};

/// Dense row-major M×N array.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn new(rows: usize, cols: usize, fill: T) -> Self {
        Grid {
            rows,
            cols,
            data: vec![fill; rows * cols],
        }
    }

    pub fn fill(&mut self, value: T) {
        self.data.iter_mut().for_each(|x| *x = value.clone());
    }
}

impl<T> Grid<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "{} values do not fill a {rows}x{cols} grid",
                data.len()
            )));
        }
        Ok(Grid { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Grid { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `(rows, cols)`
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, r: usize, c: usize) -> Option<&T> {
        (r < self.rows && c < self.cols).then(|| &self.data[r * self.cols + c])
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Elementwise combination of two grids of equal shape.
    pub fn zip_map<U, V>(&self, other: &Grid<U>, mut f: impl FnMut(&T, &U) -> V) -> Result<Grid<V>> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                got: other.shape(),
            });
        }
        Ok(Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        })
    }
}

impl<T> Index<(usize, usize)> for Grid<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        assert!(r < self.rows && c < self.cols, "({r}, {c}) outside {}x{}", self.rows, self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Grid<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        assert!(r < self.rows && c < self.cols, "({r}, {c}) outside {}x{}", self.rows, self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Cell values in `[-1, 1]`: black is `+1`, white is `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    values: Grid<f64>,
}

impl Image {
    /// Linear coding `u = 1 - 2 p / 255` of 8-bit gray levels.
    pub fn encode(pixels: &Grid<u8>) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::EmptyImage);
        }
        Ok(Image {
            values: pixels.map(|&p| 1.0 - 2.0 * (p as f64 / 255.0)),
        })
    }

    pub fn from_values(values: Grid<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyImage);
        }
        if let Some(x) = values.iter().find(|x| !(x.is_finite() && x.abs() <= 1.0)) {
            return Err(Error::InvalidParameter(format!("image value {x} outside [-1, 1]")));
        }
        Ok(Image { values })
    }

    pub fn uniform(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Image::from_values(Grid::new(rows, cols, value))
    }

    pub fn values(&self) -> &Grid<f64> {
        &self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&x| x == 1.0 || x == -1.0)
    }
}

/// Gray level of an output in `[-1, 1]`: `+1 -> 0`, `-1 -> 255`, `0 -> 128`.
pub fn to_pixels(y: &Grid<f64>) -> Grid<u8> {
    y.map(|&v| (127.5 * (1.0 - v.clamp(-1.0, 1.0))).round() as u8)
}

/// Decode a three-valued output lattice. In strict mode a zero output (an
/// undecided or powered-off cell) is an error.
pub fn decode_output(y: &Grid<f64>, strict: bool) -> Result<Grid<u8>> {
    for r in 0..y.rows() {
        for c in 0..y.cols() {
            let v = y[(r, c)];
            if !(v == 1.0 || v == -1.0 || v == 0.0) {
                return Err(Error::NonTernary(v));
            }
            if strict && v == 0.0 {
                return Err(Error::NonBinary { row: r, col: c });
            }
        }
    }
    Ok(to_pixels(y))
}
