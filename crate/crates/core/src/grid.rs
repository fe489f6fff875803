/// A uniform grid `xmin, xmin + dx, ...` up to and including `xmax`
/// (within a small rounding allowance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub xmin: f64,
    pub dx: f64,
    pub len: usize,
}

impl Grid {
    /// Returns `None` unless `dx > 0`, the bounds are finite and `xmax >= xmin`.
    pub fn new(xmin: f64, xmax: f64, dx: f64) -> Option<Grid> {
        if !(dx > 0.0) || !xmin.is_finite() || !xmax.is_finite() || xmax < xmin {
            return None;
        }
        let steps = ((xmax - xmin) / dx + 1e-9).floor();
        if !steps.is_finite() || steps > 1e9 {
            return None;
        }
        Some(Grid { xmin, dx, len: steps as usize + 1 })
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.xmin + i as f64 * self.dx
    }

    pub fn xmax(&self) -> f64 {
        self.x(self.len - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.x(i))
    }
}

/// Trapezoid rule for samples on a uniform grid.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            dx * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_endpoint() {
        let g = Grid::new(-4.0, 4.0, 0.01).unwrap();
        assert_eq!(g.len, 801);
        assert!((g.xmax() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_bad_step() {
        assert!(Grid::new(0.0, 1.0, 0.0).is_none());
        assert!(Grid::new(0.0, 1.0, -0.1).is_none());
        assert!(Grid::new(1.0, 0.0, 0.1).is_none());
    }

    #[test]
    fn trapezoid_constant() {
        assert!((trapezoid(&[2.0; 11], 0.1) - 2.0).abs() < 1e-14);
    }
}
