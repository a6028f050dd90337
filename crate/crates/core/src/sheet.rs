//! Brownian-sheet increments on a rectangular lattice.
//!
//! A `d`-dimensional Brownian sheet `W` is sampled through its independent
//! cell increments: the increment attached to cell `(i, j)` (lower-left node
//! convention) is a centered Gaussian with variance `Δs·Δt`. Node values are
//! rectangle sums of increments, so `W` vanishes on both axes.
//!
//! Draws are addressed as `(seed; trial, l, i, j)` through the counter-based
//! generator, which makes sampling independent of traversal order and worker
//! count.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::rng::standard_normal;
use crate::scalar::Scalar;

/// Cell increments of one trial of the sheet.
#[derive(Debug, Clone, PartialEq)]
pub struct SheetSample<S> {
    d: usize,
    n_s: usize,
    n_t: usize,
    /// `(l, i, j)` in l-major order, length `d · n_s · n_t`.
    increments: Vec<S>,
    seed: u64,
    trial: u64,
}

/// Samples all cell increments for one trial. Same `(seed, grid, d, trial)`
/// always reproduces the identical array.
pub fn sample_sheet_trial<S: Scalar>(
    grid: &GridSpec,
    d: usize,
    seed: u64,
    trial: u64,
) -> Result<SheetSample<S>> {
    if d == 0 {
        return Err(Error::Config("sheet needs at least one component".into()));
    }
    let (n_s, n_t) = (grid.n_s(), grid.n_t());
    let sd = grid.cell_area().sqrt();
    let mut increments = Vec::with_capacity(d * n_s * n_t);
    for l in 0..d {
        for i in 0..n_s {
            for j in 0..n_t {
                let ctr1 = ((l * n_s + i) * n_t + j) as u64;
                increments.push(S::of(sd * standard_normal(seed, trial, ctr1)));
            }
        }
    }
    Ok(SheetSample { d, n_s, n_t, increments, seed, trial })
}

/// Trial-0 convenience wrapper around [`sample_sheet_trial`].
pub fn sample_sheet<S: Scalar>(grid: &GridSpec, d: usize, seed: u64) -> Result<SheetSample<S>> {
    sample_sheet_trial(grid, d, seed, 0)
}

impl<S: Scalar> SheetSample<S> {
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn n_s(&self) -> usize {
        self.n_s
    }
    pub fn n_t(&self) -> usize {
        self.n_t
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn trial(&self) -> u64 {
        self.trial
    }

    /// Increment of component `l` over cell `(i, j)`.
    #[inline]
    pub fn increment(&self, l: usize, i: usize, j: usize) -> S {
        debug_assert!(l < self.d && i < self.n_s && j < self.n_t);
        self.increments[(l * self.n_s + i) * self.n_t + j]
    }

    /// Node value `W(iΔs, jΔt)`: sum of increments over cells below and left.
    /// Zero on the axes (empty sum).
    pub fn value(&self, grid: &GridSpec, i: usize, j: usize) -> Result<Vec<S>> {
        grid.check_node(i, j)?;
        let mut out = vec![S::zero(); self.d];
        for l in 0..self.d {
            let mut acc = S::zero();
            for ii in 0..i {
                for jj in 0..j {
                    acc = acc + self.increment(l, ii, jj);
                }
            }
            out[l] = acc;
        }
        Ok(out)
    }

    /// All node values as one prefix-sum table: index `((i·(n_t+1)) + j)·d + l`.
    pub fn cumulative(&self) -> Vec<S> {
        let (n_s, n_t, d) = (self.n_s, self.n_t, self.d);
        let stride = (n_t + 1) * d;
        let mut table = vec![S::zero(); (n_s + 1) * stride];
        for i in 1..=n_s {
            for j in 1..=n_t {
                for l in 0..d {
                    let w = table[(i - 1) * stride + j * d + l]
                        + table[i * stride + (j - 1) * d + l]
                        - table[(i - 1) * stride + (j - 1) * d + l]
                        + self.increment(l, i - 1, j - 1);
                    table[i * stride + j * d + l] = w;
                }
            }
        }
        table
    }

    /// Sums `factor × factor` blocks of cells, producing the increments the
    /// same sheet induces on a grid coarsened by `factor` per axis.
    pub fn aggregate_blocks(&self, factor: usize) -> Result<SheetSample<S>> {
        if factor == 0 || self.n_s % factor != 0 || self.n_t % factor != 0 {
            return Err(Error::Config(format!(
                "block factor {factor} does not divide {}x{} cells",
                self.n_s, self.n_t
            )));
        }
        let (m_s, m_t) = (self.n_s / factor, self.n_t / factor);
        let mut increments = Vec::with_capacity(self.d * m_s * m_t);
        for l in 0..self.d {
            for bi in 0..m_s {
                for bj in 0..m_t {
                    let mut acc = S::zero();
                    for di in 0..factor {
                        for dj in 0..factor {
                            acc = acc + self.increment(l, bi * factor + di, bj * factor + dj);
                        }
                    }
                    increments.push(acc);
                }
            }
        }
        Ok(SheetSample {
            d: self.d,
            n_s: m_s,
            n_t: m_t,
            increments,
            seed: self.seed,
            trial: self.trial,
        })
    }

    /// Binary dump: text header line `SHEET1 d n_s n_t seed`, then the
    /// increments as little-endian 64-bit floats in `(l, i, j)` order.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "SHEET1 {} {} {} {}", self.d, self.n_s, self.n_t, self.seed)?;
        for &x in &self.increments {
            w.write_all(&x.as_f64().to_le_bytes())?;
        }
        Ok(())
    }
}

impl SheetSample<f64> {
    /// Reads a dump produced by [`SheetSample::write_binary`].
    pub fn read_binary<R: Read>(r: &mut R) -> io::Result<SheetSample<f64>> {
        let mut header = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            r.read_exact(&mut byte)?;
            if byte[0] == b'\n' {
                break;
            }
            header.push(byte[0]);
        }
        let header = String::from_utf8(header)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        let mut parts = header.split_whitespace();
        let bad = || io::Error::new(io::ErrorKind::InvalidData, "malformed sheet header");
        if parts.next() != Some("SHEET1") {
            return Err(bad());
        }
        let d: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let n_s: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let n_t: usize = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let seed: u64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let mut increments = vec![0.0; d * n_s * n_t];
        let mut buf = [0u8; 8];
        for x in increments.iter_mut() {
            r.read_exact(&mut buf)?;
            *x = f64::from_le_bytes(buf);
        }
        Ok(SheetSample { d, n_s, n_t, increments, seed, trial: 0 })
    }
}
