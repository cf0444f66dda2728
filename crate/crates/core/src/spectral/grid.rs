//! Mapped grids on the line: `t = sinh(s)`, `s` uniform, `<t>` reaching `10^decades`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

pub const DEFAULT_NODES: usize = 1200;
pub const DEFAULT_DECADES: f64 = 4.0;
pub const MIN_NODES: usize = 200;
pub const MIN_PER_DECADE: f64 = 24.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nodes: usize,
    pub decades: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nodes: DEFAULT_NODES, decades: DEFAULT_DECADES }
    }
}

impl GridSpec {
    pub fn new(nodes: usize, decades: f64) -> Self {
        Self { nodes, decades }
    }

    /// Half-width `S` of the uniform `s` interval: `cosh S = 10^decades`.
    pub fn s_max(&self) -> f64 {
        10f64.powf(self.decades).acosh()
    }

    /// Truncation radius `T = sinh S`.
    pub fn radius(&self) -> f64 {
        self.s_max().sinh()
    }

    pub fn per_decade(&self) -> f64 {
        (self.nodes as f64 - 1.0) / (2.0 * self.s_max()) * core::f64::consts::LN_10
    }

    pub fn is_admissible(&self) -> bool {
        self.nodes >= MIN_NODES && self.decades > 0.0 && self.per_decade() >= MIN_PER_DECADE
    }

    pub fn nodes_vec(&self) -> Vec<f64> {
        let s = self.s_max();
        let n = self.nodes;
        (0..n)
            .map(|j| {
                // mirror so that the grid is exactly symmetric
                let sj = -s + 2.0 * s * j as f64 / (n - 1) as f64;
                let sym = if 2 * j + 1 == n { 0.0 } else { sj };
                sym.sinh()
            })
            .collect()
    }

    /// The two audit grids: 1.5x nodes, and one more decade at the same tail density.
    pub fn refinements(&self) -> [GridSpec; 2] {
        let more = ((self.nodes as f64) * 1.5).round() as usize;
        let deeper = ((self.nodes as f64) * (self.decades + 1.0) / self.decades).round() as usize;
        [GridSpec::new(more, self.decades), GridSpec::new(deeper, self.decades + 1.0)]
    }
}

/// Trapezoid weights of a strictly increasing node set.
pub fn trapezoid_weights(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|j| {
            let left = if j > 0 { t[j] - t[j - 1] } else { 0.0 };
            let right = if j + 1 < n { t[j + 1] - t[j] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = GridSpec::default();
        let t = g.nodes_vec();
        assert_eq!(t.len(), 1200);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!((t[0] + t[1199]).abs() < 1e-9);
        assert!(((1.0 + t[1199] * t[1199]).sqrt() - 1e4).abs() < 1e-6);
        assert!(g.is_admissible() && g.per_decade() > 100.0);
        let [a, b] = g.refinements();
        assert_eq!((a.nodes, b.nodes, b.decades), (1800, 1500, 5.0));
    }
}
