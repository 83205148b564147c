use crate::error::{check_arg, Result};

/// Parameters of one Brunn-Minkowski evaluation: dimension `N`, interpolation
/// parameter `s` and slack `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BMQuery {
    dim: f64,
    s: f64,
    h: f64,
}

impl BMQuery {
    pub fn new(dim: f64, s: f64, h: f64) -> Result<Self> {
        check_arg(dim >= 1.0 && dim.is_finite(), "N", dim, "dimension must be a finite real >= 1")?;
        check_interpolation(s, h)?;
        Ok(BMQuery { dim, s, h })
    }

    pub fn dim(&self) -> f64 {
        self.dim
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn with_s(self, s: f64) -> Result<Self> {
        Self::new(self.dim, s, self.h)
    }

    /// True when `N` is a positive integer.
    pub fn integral_dim(&self) -> bool {
        libm::floor(self.dim) == self.dim
    }
}

pub(crate) fn check_interpolation(s: f64, h: f64) -> Result<()> {
    check_arg((0.0..=1.0).contains(&s), "s", s, "must lie in [0, 1]")?;
    check_arg(h >= 0.0 && h.is_finite(), "h", h, "must be a finite real >= 0")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_enforced() {
        assert!(BMQuery::new(1.0, 0.5, 0.0).is_ok());
        assert!(BMQuery::new(0.5, 0.5, 0.0).is_err());
        assert!(BMQuery::new(2.0, 1.5, 0.0).is_err());
        assert!(BMQuery::new(2.0, 0.5, -1.0).is_err());
        assert!(BMQuery::new(2.0, f64::NAN, 0.0).is_err());
        assert!(!BMQuery::new(2.5, 0.5, 0.0).unwrap().integral_dim());
    }
}
