//! Points and periodic geometry on the torus `[0, L)^d`, d = 1 or 2.
//!
//! A [`Point`] always carries two coordinates; in one dimension the
//! second coordinate is identically zero. All distances and kernel
//! arguments go through [`Torus::min_image`], and Gaussian bumps are
//! made periodic by truncated image sums whose omitted tail mass stays
//! below [`TAIL_THRESHOLD`].

use std::cmp::Ordering;
use std::f64::consts::PI;

use rand::Rng;

/// Relative mass a truncated image sum is allowed to drop.
pub const TAIL_THRESHOLD: f64 = 1e-12;

/// A point of the torus. Second coordinate is 0.0 in one dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    coords: [f64; 2],
}

impl Point {
    pub fn new_1d(x: f64) -> Self {
        Point { coords: [x, 0.0] }
    }

    pub fn new_2d(x: f64, y: f64) -> Self {
        Point { coords: [x, y] }
    }

    pub fn from_slice(c: &[f64]) -> Self {
        match c.len() {
            1 => Point::new_1d(c[0]),
            2 => Point::new_2d(c[0], c[1]),
            n => panic!("point dimension {n} unsupported"),
        }
    }

    pub fn coords(&self) -> &[f64; 2] {
        &self.coords
    }

    pub fn coord(&self, axis: usize) -> f64 {
        self.coords[axis]
    }

    /// Total lexicographic order (used for canonical configuration order).
    pub fn cmp_lex(&self, other: &Point) -> Ordering {
        match self.coords[0].total_cmp(&other.coords[0]) {
            Ordering::Equal => self.coords[1].total_cmp(&other.coords[1]),
            ord => ord,
        }
    }
}

/// The periodic domain `[0, L)^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Torus {
    pub dim: usize,
    pub len: f64,
}

impl Torus {
    pub fn new(dim: usize, len: f64) -> Self {
        assert!(dim == 1 || dim == 2, "torus dimension must be 1 or 2");
        assert!(len > 0.0, "torus side length must be positive");
        Torus { dim, len }
    }

    pub fn volume(&self) -> f64 {
        self.len.powi(self.dim as i32)
    }

    /// Reduce a coordinate into `[0, L)`.
    pub fn wrap_coord(&self, x: f64) -> f64 {
        let w = x - self.len * (x / self.len).floor();
        // floor can land exactly on L for tiny negative x
        if w >= self.len {
            w - self.len
        } else {
            w
        }
    }

    pub fn wrap(&self, p: Point) -> Point {
        let mut c = [0.0; 2];
        for a in 0..self.dim {
            c[a] = self.wrap_coord(p.coord(a));
        }
        Point { coords: c }
    }

    /// Signed minimal-image difference of one coordinate, in `[-L/2, L/2)`.
    pub fn min_image_coord(&self, dx: f64) -> f64 {
        let r = dx - self.len * (dx / self.len).round();
        if r < -self.len / 2.0 {
            r + self.len
        } else if r >= self.len / 2.0 {
            r - self.len
        } else {
            r
        }
    }

    /// Minimal-image displacement `b - a`.
    pub fn min_image(&self, a: Point, b: Point) -> Point {
        let mut c = [0.0; 2];
        for axis in 0..self.dim {
            c[axis] = self.min_image_coord(b.coord(axis) - a.coord(axis));
        }
        Point { coords: c }
    }

    /// Uniform random point on the torus.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let mut c = [0.0; 2];
        for a in 0..self.dim {
            c[a] = rng.random_range(0.0..self.len);
        }
        Point { coords: c }
    }
}

/// Number of images per side so the omitted Gaussian tail mass stays
/// below [`TAIL_THRESHOLD`]. With the usual constraint `L > 12 sigma`
/// this is 0 or 1.
pub fn image_count(sigma: f64, len: f64) -> i64 {
    // tail mass beyond radius R is erfc(R / (sigma sqrt 2)) <= exp(-R^2 / (2 sigma^2))
    let mut k: i64 = 0;
    loop {
        let r = (k as f64 + 0.5) * len;
        if (-r * r / (2.0 * sigma * sigma)).exp() < TAIL_THRESHOLD {
            return k;
        }
        k += 1;
        assert!(k < 64, "torus far too small for kernel width {sigma}");
    }
}

/// One axis of a periodic unnormalized Gaussian: sum of
/// `exp(-(v + kL)^2 / (2 sigma^2))` over the retained images.
pub fn wrapped_gauss_axis(v: f64, sigma: f64, len: f64) -> f64 {
    let vr = v - len * (v / len).round();
    let kmax = image_count(sigma, len);
    let mut s = 0.0;
    for k in -kmax..=kmax {
        let u = vr + k as f64 * len;
        s += (-u * u / (2.0 * sigma * sigma)).exp();
    }
    s
}

/// Periodic normalized Gaussian bump of width `sigma` on the torus:
/// product over axes of wrapped 1-d densities. Integrates to 1 exactly
/// (image-sum wrapping preserves total mass).
pub fn wrapped_gauss_density(t: &Torus, v: Point, sigma: f64) -> f64 {
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let mut out = 1.0;
    for a in 0..t.dim {
        out *= norm * wrapped_gauss_axis(v.coord(a), sigma, t.len);
    }
    out
}

/// Periodic unnormalized Gaussian `amp * exp(-|v|^2 / (2 w^2))`, wrapped.
pub fn wrapped_gauss_bump(t: &Torus, v: Point, amp: f64, width: f64) -> f64 {
    let mut out = amp;
    for a in 0..t.dim {
        out *= wrapped_gauss_axis(v.coord(a), width, t.len);
    }
    out
}
