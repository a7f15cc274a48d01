//! Axis-aligned boxes: the computational domains Ω ⊂ ℝⁿ, n ∈ {1, 2}.

/// Axis-aligned box `[lo₁, hi₁] × … × [loₙ, hiₙ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    /// 1D interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Self {
        Self { lo: vec![lo], hi: vec![hi] }
    }

    /// 2D rectangle `[lo_x, hi_x] × [lo_y, hi_y]`.
    pub fn rectangle(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Self { lo: lo.to_vec(), hi: hi.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Side length along `axis`.
    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.extent(i)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&xi, (&lo, &hi))| xi >= lo && xi <= hi)
    }

    /// Clamp `x` into the box componentwise.
    pub fn clamp(&self, x: &mut [f64]) {
        for i in 0..self.dim() {
            x[i] = x[i].clamp(self.lo[i], self.hi[i]);
        }
    }

    /// True when every side has positive length.
    pub fn is_nondegenerate(&self) -> bool {
        !self.lo.is_empty() && (0..self.dim()).all(|i| self.extent(i) > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_basics() {
        let d = Domain::interval(-1.0, 1.0);
        assert_eq!(d.dim(), 1);
        assert_eq!(d.volume(), 2.0);
        assert!(d.contains(&[0.5]));
        assert!(!d.contains(&[1.5]));
        assert!(d.is_nondegenerate());
    }

    #[test]
    fn rectangle_basics() {
        let d = Domain::rectangle([0.0, 0.0], [1.0, 2.0]);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.volume(), 2.0);
        let mut x = [3.0, -1.0];
        d.clamp(&mut x);
        assert_eq!(x, [1.0, 0.0]);
    }

    #[test]
    fn degenerate_box_detected() {
        assert!(!Domain::interval(1.0, 1.0).is_nondegenerate());
    }
}
