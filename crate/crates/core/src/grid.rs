use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major per-pixel values addressed by 1-based `(row, col)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelGrid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type CountGrid = PixelGrid<u64>;
pub type Mask = PixelGrid<bool>;

impl<T: Clone> PixelGrid<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }
}

impl<T> PixelGrid<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Input(format!(
                "grid data has {} values, expected {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 1..=rows {
            for c in 1..=cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn index(&self, row: usize, col: usize) -> usize {
        assert!(
            (1..=self.rows).contains(&row) && (1..=self.cols).contains(&col),
            "pixel ({row},{col}) outside {}x{} grid",
            self.rows,
            self.cols
        );
        (row - 1) * self.cols + (col - 1)
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[self.index(row, col)]
    }

    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut T {
        let i = self.index(row, col);
        &mut self.data[i]
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        *self.get_mut(row, col) = value;
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    /// `((row, col), value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &T)> {
        let cols = self.cols;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| ((i / cols + 1, i % cols + 1), v))
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> PixelGrid<U> {
        PixelGrid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: std::fmt::Display> PixelGrid<T> {
    /// One CSV line per row, no header.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for r in self.data.chunks(self.cols) {
            let line: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

impl Mask {
    /// Parse an 8×8-style CSV of 0/1 values.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rows = 0;
        let mut cols = None;
        let mut data = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let vals: Vec<&str> = line.split(',').map(str::trim).collect();
            if *cols.get_or_insert(vals.len()) != vals.len() {
                return Err(Error::Input(format!("mask row {} has {} values", rows + 1, vals.len())));
            }
            for v in vals {
                data.push(match v {
                    "0" => false,
                    "1" => true,
                    other => return Err(Error::Input(format!("mask value {other:?} is not 0 or 1"))),
                });
            }
            rows += 1;
        }
        let cols = cols.ok_or_else(|| Error::Input("empty mask".into()))?;
        Self::from_vec(rows, cols, data)
    }

    pub fn to_bit_csv(&self) -> String {
        self.map(|&b| u8::from(b)).to_csv()
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Plain (ASCII) portable graymap, maximum value scaled to `maxval`.
pub fn to_pgm(values: &PixelGrid<f64>, maxval: u16) -> String {
    let hi = values.values().iter().cloned().fold(0.0f64, f64::max);
    let mut s = format!("P2\n{} {}\n{}\n", values.cols(), values.rows(), maxval);
    for row in values.values().chunks(values.cols()) {
        let line: Vec<String> = row
            .iter()
            .map(|&v| {
                let g = if hi > 0.0 { (v.max(0.0) / hi * maxval as f64).round() } else { 0.0 };
                (g as u16).to_string()
            })
            .collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}
