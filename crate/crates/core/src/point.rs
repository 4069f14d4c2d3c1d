/// A probability `cdf` stored together with its complement `tail = 1 - cdf`.
///
/// Both components are kept with full relative precision: generating
/// functions are evaluated on whichever side is accurate, so a tail of
/// `1e-40` survives composition where `1 - cdf` would round to zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CdfPoint {
    pub cdf: f64,
    pub tail: f64,
}

impl CdfPoint {
    pub const ONE: CdfPoint = CdfPoint {
        cdf: 1.0,
        tail: 0.0,
    };
    pub const ZERO: CdfPoint = CdfPoint {
        cdf: 0.0,
        tail: 1.0,
    };

    pub fn from_cdf(cdf: f64) -> Self {
        Self {
            cdf,
            tail: 1.0 - cdf,
        }
    }

    pub fn from_tail(tail: f64) -> Self {
        Self {
            cdf: 1.0 - tail,
            tail,
        }
    }

    /// The smaller of the two components, which carries the absolute scale
    /// of rounding error for a difference of such points.
    pub fn scale(&self) -> f64 {
        self.cdf.min(self.tail)
    }

    /// Mass strictly above `below` and at most `self`, i.e. `self.cdf - below.cdf`,
    /// evaluated on the side where both operands are small.
    pub fn mass_above(&self, below: &CdfPoint) -> f64 {
        if below.tail <= 0.5 {
            below.tail - self.tail
        } else {
            self.cdf - below.cdf
        }
    }
}
