//! Linear indexing of discrete tori `(Z / L Z)^d`, first coordinate fastest.

use alloc::vec::Vec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusShape {
    pub dim: usize,
    pub side: usize,
}

impl TorusShape {
    pub fn new(dim: usize, side: usize) -> Self {
        TorusShape { dim, side }
    }

    /// Sites `γ ∈ {-n..=n}^d` of the torus `Z^d / (2n+1) Z^d`.
    pub fn sites(dim: usize, n: usize) -> Self {
        TorusShape { dim, side: 2 * n + 1 }
    }

    pub fn len(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self, mut idx: usize, out: &mut [usize]) {
        for c in out.iter_mut().take(self.dim) {
            *c = idx % self.side;
            idx /= self.side;
        }
    }

    pub fn coords_vec(&self, idx: usize) -> Vec<usize> {
        let mut c = alloc::vec![0; self.dim];
        self.coords(idx, &mut c);
        c
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().take(self.dim).rev().fold(0, |acc, &c| acc * self.side + c)
    }

    /// Index of an unwrapped integer coordinate, reduced modulo the side.
    pub fn index_wrapped(&self, coords: &[i64]) -> usize {
        let side = self.side as i64;
        coords.iter().take(self.dim).rev().fold(0usize, |acc, &c| acc * self.side + c.rem_euclid(side) as usize)
    }

    /// Neighbor along `axis` by `step` (±1); the flag reports a wrap across the boundary.
    pub fn neighbor(&self, idx: usize, axis: usize, step: i64) -> (usize, i64) {
        let stride = self.side.pow(axis as u32);
        let c = (idx / stride) % self.side;
        let moved = c as i64 + step;
        let side = self.side as i64;
        let wrap = moved.div_euclid(side);
        let nc = moved.rem_euclid(side) as usize;
        (idx - c * stride + nc * stride, wrap)
    }

    /// Centered site coordinates `γ_j = c_j - n` for an odd side `2n+1`.
    pub fn centered(&self, idx: usize) -> Vec<i64> {
        let half = (self.side / 2) as i64;
        self.coords_vec(idx).into_iter().map(|c| c as i64 - half).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let t = TorusShape::new(2, 5);
        for i in 0..t.len() {
            assert_eq!(t.index(&t.coords_vec(i)), i);
        }
        assert_eq!(t.index_wrapped(&[-1, 5]), t.index(&[4, 0]));
    }

    #[test]
    fn neighbor_wraps() {
        let t = TorusShape::new(1, 4);
        assert_eq!(t.neighbor(3, 0, 1), (0, 1));
        assert_eq!(t.neighbor(0, 0, -1), (3, -1));
        let t2 = TorusShape::new(2, 3);
        let i = t2.index(&[1, 2]);
        assert_eq!(t2.neighbor(i, 1, 1), (t2.index(&[1, 0]), 1));
    }

    #[test]
    fn centered_sites() {
        let t = TorusShape::sites(1, 2);
        assert_eq!(t.centered(0), alloc::vec![-2]);
        assert_eq!(t.centered(4), alloc::vec![2]);
    }
}
