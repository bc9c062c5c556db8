use std::io::{self, Read, Write};

use super::PhaseSpaceError;

/// Uniform periodic axis: `n` samples `min + j·(max − min)/n`, `j = 0..n`.
///
/// The upper bound is the periodic image of the first sample and is not
/// itself a sample, so a symmetric axis with even `n` contains 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self, PhaseSpaceError> {
        if !(min.is_finite() && max.is_finite() && max > min) || n < 4 {
            return Err(PhaseSpaceError::InvalidGrid(format!("axis [{min}, {max}) with {n} points")));
        }
        Ok(Self { min, max, n })
    }

    pub fn symmetric(half_width: f64, n: usize) -> Result<Self, PhaseSpaceError> {
        Self::new(-half_width, half_width, n)
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        self.min + j as f64 * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Last sample on the axis.
    pub fn last(&self) -> f64 {
        self.point(self.n - 1)
    }

    /// Signed angular wavenumbers of the discrete Fourier modes, in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        let scale = 2.0 * std::f64::consts::PI / (self.n as f64 * self.step());
        (0..n).map(|k| if k <= n / 2 { k } else { k - n }).map(|k| k as f64 * scale).collect()
    }

    /// Index of the Nyquist mode, which odd derivatives zero out.
    pub fn nyquist(&self) -> Option<usize> {
        self.n.is_multiple_of(2).then_some(self.n / 2)
    }
}

/// Discretised Wigner function `W(q, p)` on a rectangular phase-space grid.
///
/// `values` is row-major in q: `values[i * p.n + j] = W(q_i, p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub q: Axis,
    pub p: Axis,
    pub hbar: f64,
    pub time: f64,
    pub values: Vec<f64>,
}

const MAGIC: &[u8; 8] = b"WIGNERG1";

impl WignerGrid {
    pub fn zeros(q: Axis, p: Axis, hbar: f64) -> Self {
        Self { q, p, hbar, time: 0.0, values: vec![0.0; q.n * p.n] }
    }

    pub fn from_fn(q: Axis, p: Axis, hbar: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut grid = Self::zeros(q, p, hbar);
        for i in 0..q.n {
            let qi = q.point(i);
            for j in 0..p.n {
                grid.values[i * p.n + j] = f(qi, p.point(j));
            }
        }
        grid
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p.n..(i + 1) * self.p.n]
    }

    pub fn cell_area(&self) -> f64 {
        self.q.step() * self.p.step()
    }

    /// Σ W Δq Δp.
    pub fn normalization(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    /// Position density Σ_p W Δp at every q sample.
    pub fn position_marginal(&self) -> Vec<f64> {
        let dp = self.p.step();
        (0..self.q.n).map(|i| self.row(i).iter().sum::<f64>() * dp).collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_axes(&self, other: &WignerGrid) -> bool {
        self.q == other.q && self.p == other.p
    }

    /// Binary snapshot: 8-byte magic `WIGNERG1`, `n_q`, `n_p` as u64, then
    /// `q_min, q_max, p_min, p_max, time, hbar` as f64, then the values
    /// row-major in q. Everything little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(self.q.n as u64).to_le_bytes())?;
        out.write_all(&(self.p.n as u64).to_le_bytes())?;
        for v in [self.q.min, self.q.max, self.p.min, self.p.max, self.time, self.hbar] {
            out.write_all(&v.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)
    }

    pub fn read_binary<R: Read>(mut input: R) -> io::Result<Self> {
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("not a Wigner grid snapshot"));
        }
        let mut word = [0u8; 8];
        let mut next_u64 = |input: &mut R| -> io::Result<u64> {
            input.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let n_q = next_u64(&mut input)? as usize;
        let n_p = next_u64(&mut input)? as usize;
        let mut floats = [0.0; 6];
        for f in floats.iter_mut() {
            *f = f64::from_bits(next_u64(&mut input)?);
        }
        let q = Axis::new(floats[0], floats[1], n_q).map_err(|e| bad(&e.to_string()))?;
        let p = Axis::new(floats[2], floats[3], n_p).map_err(|e| bad(&e.to_string()))?;
        let mut raw = vec![0u8; n_q * n_p * 8];
        input.read_exact(&mut raw)?;
        let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self { q, p, hbar: floats[5], time: floats[4], values })
    }

    /// Text sidecar describing a binary snapshot.
    pub fn metadata_text(&self) -> String {
        format!(
            "format = \"WIGNERG1\"\nbyte_order = \"little-endian\"\nlayout = \"row-major in q: value[i_q * n_p + i_p]\"\n\
             header_bytes = 72\nn_q = {}\nn_p = {}\nq_min = {}\nq_max = {}\np_min = {}\np_max = {}\n\
             axis_rule = \"x_j = min + j * (max - min) / n, j = 0..n-1\"\ntime = {}\nhbar = {}\nnormalization = {}\n",
            self.q.n,
            self.p.n,
            self.q.min,
            self.q.max,
            self.p.min,
            self.p.max,
            self.time,
            self.hbar,
            self.normalization()
        )
    }
}
