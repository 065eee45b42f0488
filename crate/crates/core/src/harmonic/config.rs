//! Finite point configurations in canonical (lexicographic) order.

use crate::geometry::Point;

/// A finite set of distinct torus points, kept sorted lexicographically
/// so subset enumeration is deterministic and tests reproduce.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Configuration {
    points: Vec<Point>,
}

impl Configuration {
    pub fn empty() -> Self {
        Configuration { points: Vec::new() }
    }

    pub fn singleton(p: Point) -> Self {
        Configuration { points: vec![p] }
    }

    /// Build from arbitrary points: sorts and drops exact duplicates.
    pub fn from_points(mut points: Vec<Point>) -> Self {
        points.sort_by(Point::cmp_lex);
        points.dedup_by(|a, b| a.cmp_lex(b) == std::cmp::Ordering::Equal);
        Configuration { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.points
            .binary_search_by(|q| q.cmp_lex(&p))
            .is_ok()
    }

    /// Set union with one point; idempotent if the point is present.
    pub fn with_point(&self, p: Point) -> Configuration {
        match self.points.binary_search_by(|q| q.cmp_lex(&p)) {
            Ok(_) => self.clone(),
            Err(pos) => {
                let mut pts = Vec::with_capacity(self.points.len() + 1);
                pts.extend_from_slice(&self.points[..pos]);
                pts.push(p);
                pts.extend_from_slice(&self.points[pos..]);
                Configuration { points: pts }
            }
        }
    }

    pub fn with_points(&self, ps: &[Point]) -> Configuration {
        let mut out = self.clone();
        for &p in ps {
            out = out.with_point(p);
        }
        out
    }

    /// Configuration with the point at `index` removed.
    pub fn without_index(&self, index: usize) -> Configuration {
        let mut pts = self.points.clone();
        pts.remove(index);
        Configuration { points: pts }
    }

    /// Configuration with the points at both indices removed.
    pub fn without_pair(&self, i: usize, j: usize) -> Configuration {
        debug_assert!(i != j);
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let mut pts = Vec::with_capacity(self.points.len() - 2);
        for (k, &p) in self.points.iter().enumerate() {
            if k != lo && k != hi {
                pts.push(p);
            }
        }
        Configuration { points: pts }
    }

    /// Sub-configuration selected by a bitmask over the sorted points.
    /// Subsequences of a sorted list stay sorted, so no re-sort happens.
    pub fn subset_by_mask(&self, mask: u32) -> Configuration {
        let mut pts = Vec::with_capacity(mask.count_ones() as usize);
        for (i, &p) in self.points.iter().enumerate() {
            if mask & (1 << i) != 0 {
                pts.push(p);
            }
        }
        Configuration { points: pts }
    }
}

impl FromIterator<Point> for Configuration {
    fn from_iter<T: IntoIterator<Item = Point>>(iter: T) -> Self {
        Configuration::from_points(iter.into_iter().collect())
    }
}
