//! Circular convolutions on the periodic grid.
//!
//! `conv(k, f)[i] = cell_vol · Σ_m k[m] f[i−m]` (indices mod the grid),
//! the rectangle-rule discretization of the torus convolution. Two
//! interchangeable backends: FFT (default) and a direct summation used
//! to cross-check the transform path. The adjoint (transpose) of a
//! kernel is its index reversal, prepared from the same sample array so
//! gain/loss convolution pairs stay exact discrete adjoints.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::kinetic::field::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvMethod {
    Spectral,
    Direct,
}

/// A kernel sampled on the displacement grid, with its precomputed
/// scaled DFT for the spectral path.
#[derive(Clone)]
pub struct PreparedKernel {
    sample: Vec<f64>,
    hat: Vec<Complex<f64>>,
}

impl PreparedKernel {
    pub fn sample(&self) -> &[f64] {
        &self.sample
    }
}

pub struct Convolver {
    grid: Grid,
    method: ConvMethod,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Convolver {
    pub fn new(grid: Grid, method: ConvMethod) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.m);
        let inv = planner.plan_fft_inverse(grid.m);
        Convolver {
            grid,
            method,
            fwd,
            inv,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn method(&self) -> ConvMethod {
        self.method
    }

    /// Prepare a kernel from its displacement-grid samples. The DFT is
    /// scaled by `cell_vol / n` so convolution is one multiply + inverse.
    pub fn prepare(&self, sample: Vec<f64>) -> PreparedKernel {
        assert_eq!(sample.len(), self.grid.n_cells());
        let n = self.grid.n_cells() as f64;
        let scale = self.grid.cell_vol() / n;
        let mut buf: Vec<Complex<f64>> = sample.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fft_nd(&mut buf, true);
        for v in &mut buf {
            *v *= scale;
        }
        PreparedKernel { sample, hat: buf }
    }

    /// Prepare the index-reversed (adjoint) kernel of the same samples.
    pub fn prepare_reversed(&self, kernel: &PreparedKernel) -> PreparedKernel {
        let m = self.grid.m;
        let src = &kernel.sample;
        let mut rev = vec![0.0; src.len()];
        match self.grid.dim {
            1 => {
                for i in 0..m {
                    rev[i] = src[(m - i) % m];
                }
            }
            _ => {
                for i in 0..m {
                    for j in 0..m {
                        rev[i * m + j] = src[((m - i) % m) * m + (m - j) % m];
                    }
                }
            }
        }
        self.prepare(rev)
    }

    /// Circular convolution of the prepared kernel with a field.
    pub fn convolve(&self, kernel: &PreparedKernel, field: &[f64]) -> Vec<f64> {
        assert_eq!(field.len(), self.grid.n_cells());
        match self.method {
            ConvMethod::Spectral => self.convolve_fft(kernel, field),
            ConvMethod::Direct => self.convolve_direct(kernel, field),
        }
    }

    fn convolve_fft(&self, kernel: &PreparedKernel, field: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = field.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fft_nd(&mut buf, true);
        for (v, k) in buf.iter_mut().zip(&kernel.hat) {
            *v *= k;
        }
        self.fft_nd(&mut buf, false);
        buf.into_iter().map(|c| c.re).collect()
    }

    fn convolve_direct(&self, kernel: &PreparedKernel, field: &[f64]) -> Vec<f64> {
        let m = self.grid.m;
        let w = self.grid.cell_vol();
        let k = &kernel.sample;
        match self.grid.dim {
            1 => {
                let mut out = vec![0.0; m];
                for i in 0..m {
                    let mut acc = 0.0;
                    for s in 0..m {
                        // f index i - s mod m
                        let j = (i + m - s) % m;
                        acc += k[s] * field[j];
                    }
                    out[i] = acc * w;
                }
                out
            }
            _ => {
                let n = m * m;
                let mut out = vec![0.0; n];
                for ix in 0..m {
                    for iy in 0..m {
                        let mut acc = 0.0;
                        for sx in 0..m {
                            let jx = (ix + m - sx) % m;
                            for sy in 0..m {
                                let jy = (iy + m - sy) % m;
                                acc += k[sx * m + sy] * field[jx * m + jy];
                            }
                        }
                        out[ix * m + iy] = acc * w;
                    }
                }
                out
            }
        }
    }

    /// In-place FFT along every axis (row-major layout in 2-d).
    fn fft_nd(&self, data: &mut [Complex<f64>], forward: bool) {
        let plan = if forward { &self.fwd } else { &self.inv };
        let m = self.grid.m;
        match self.grid.dim {
            1 => plan.process(data),
            _ => {
                // rows
                for row in data.chunks_exact_mut(m) {
                    plan.process(row);
                }
                // columns via gather/scatter
                let mut col = vec![Complex::new(0.0, 0.0); m];
                for j in 0..m {
                    for i in 0..m {
                        col[i] = data[i * m + j];
                    }
                    plan.process(&mut col);
                    for i in 0..m {
                        data[i * m + j] = col[i];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry;

    fn gauss_kernel(grid: Grid, sigma: f64) -> Vec<f64> {
        let torus = grid.torus();
        (0..grid.n_cells())
            .map(|i| geometry::wrapped_gauss_density(&torus, grid.node(i), sigma))
            .collect()
    }

    #[test]
    fn spectral_matches_direct_1d() {
        let grid = Grid::new(1, 20.0, 128).unwrap();
        let spectral = Convolver::new(grid, ConvMethod::Spectral);
        let direct = Convolver::new(grid, ConvMethod::Direct);
        let ks = spectral.prepare(gauss_kernel(grid, 0.7));
        let kd = direct.prepare(gauss_kernel(grid, 0.7));
        let field: Vec<f64> = (0..128)
            .map(|i| 1.0 + (2.0 * std::f64::consts::PI * i as f64 / 128.0).sin())
            .collect();
        let a = spectral.convolve(&ks, &field);
        let b = direct.convolve(&kd, &field);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn spectral_matches_direct_2d() {
        let grid = Grid::new(2, 16.0, 24).unwrap();
        let spectral = Convolver::new(grid, ConvMethod::Spectral);
        let direct = Convolver::new(grid, ConvMethod::Direct);
        let ks = spectral.prepare(gauss_kernel(grid, 0.9));
        let field: Vec<f64> = (0..grid.n_cells())
            .map(|i| {
                let p = grid.node(i);
                1.0 + 0.5 * (p.coord(0) * 0.8).sin() * (p.coord(1) * 0.5).cos()
            })
            .collect();
        let a = spectral.convolve(&ks, &field);
        let b = direct.convolve(&ks, &field);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn convolving_constant_with_unit_mass_kernel() {
        let grid = Grid::new(1, 20.0, 256).unwrap();
        let conv = Convolver::new(grid, ConvMethod::Spectral);
        let k = conv.prepare(gauss_kernel(grid, 0.5));
        let out = conv.convolve(&k, &vec![2.0; 256]);
        for v in out {
            assert!((v - 2.0).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn reversal_is_discrete_adjoint() {
        // sum_i (k * f)[i] g[i] == sum_i f[i] (rev(k) * g)[i]
        let grid = Grid::new(1, 20.0, 64).unwrap();
        let conv = Convolver::new(grid, ConvMethod::Direct);
        // an asymmetric kernel to make the adjoint matter
        let sample: Vec<f64> = (0..64).map(|i| ((i * 37 + 11) % 17) as f64 / 17.0).collect();
        let k = conv.prepare(sample);
        let krev = conv.prepare_reversed(&k);
        let f: Vec<f64> = (0..64).map(|i| ((i * 13 + 5) % 23) as f64 / 23.0).collect();
        let g: Vec<f64> = (0..64).map(|i| ((i * 7 + 3) % 19) as f64 / 19.0).collect();
        let lhs: f64 = conv.convolve(&k, &f).iter().zip(&g).map(|(a, b)| a * b).sum();
        let rhs: f64 = f
            .iter()
            .zip(conv.convolve(&krev, &g).iter())
            .map(|(a, b)| a * b)
            .sum();
        assert!((lhs - rhs).abs() < 1e-13 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}
