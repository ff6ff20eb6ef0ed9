use serde::{Deserialize, Serialize};

/// How a bound was obtained. Exact methods produce `lower == upper`
/// up to rounding; heuristic tags never appear on a certified side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Trivial,
    BaseNorm,
    CrossnormIdentity,
    VertexEnumeration,
    Svd,
    SymmetricEigen,
    CoefficientL1,
    AtomLp,
    LpDual,
    PolynomialDual,
    NormingPower,
    BranchAndBound,
    GradientAscent,
    AlternatingMaximization,
    UnfoldingSpectral,
    Frobenius,
    Peeling,
    DualSampling,
    CoordinateRestriction,
    TheoremIsometry,
    TheoremBound,
    PairSearch,
    SignPatternEnumeration,
    FrankWolfe,
    PowerMean,
    TermwiseSup,
    ExtremePoints,
    McShaneLp,
    Ratio,
}

/// Certified interval `[lower, upper]` enclosing a norm or constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
    pub method_lower: Method,
    pub method_upper: Method,
}

const ORDER_SLACK: f64 = 1e-12;

impl Bracket {
    pub fn new(lower: f64, upper: f64, method_lower: Method, method_upper: Method) -> Self {
        debug_assert!(
            lower.is_finite() && upper.is_finite(),
            "non-finite bracket [{lower}, {upper}]"
        );
        // rounding can push a certified lower bound a hair above its upper bound
        let slack = ORDER_SLACK * upper.abs().max(1.0) + 1e-9 * upper.abs();
        debug_assert!(lower <= upper + slack, "inverted bracket [{lower}, {upper}]");
        let lower = if lower > upper { upper } else { lower };
        Self {
            lower,
            upper,
            method_lower,
            method_upper,
        }
    }

    pub fn exact(value: f64, method: Method) -> Self {
        Self::new(value, value, method, method)
    }

    pub fn zero() -> Self {
        Self::exact(0.0, Method::Trivial)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    /// Gap relative to the upper bound; zero brackets have zero gap.
    pub fn rel_gap(&self) -> f64 {
        if self.upper <= 0.0 {
            0.0
        } else {
            self.gap() / self.upper
        }
    }

    pub fn contains(&self, value: f64, rel_tol: f64) -> bool {
        let slack = rel_tol * value.abs().max(self.upper.abs()) + ORDER_SLACK;
        value >= self.lower - slack && value <= self.upper + slack
    }

    pub fn overlaps(&self, other: &Bracket, rel_tol: f64) -> bool {
        let scale = self.upper.abs().max(other.upper.abs());
        let slack = rel_tol * scale + ORDER_SLACK;
        self.lower <= other.upper + slack && other.lower <= self.upper + slack
    }

    /// Widens a bracket of a non-negative quantity by a few ulps on each side so
    /// that it still encloses the value after floating-point rounding.
    pub fn outward(&self) -> Self {
        const ULPS: f64 = 16.0 * f64::EPSILON;
        Self {
            lower: (self.lower - ULPS * self.lower.abs()).max(0.0),
            upper: self.upper + ULPS * self.upper.abs(),
            ..*self
        }
    }

    /// Multiplies both ends by a non-negative factor.
    pub fn scale(&self, factor: f64) -> Self {
        debug_assert!(factor >= 0.0);
        Self::new(
            self.lower * factor,
            self.upper * factor,
            self.method_lower,
            self.method_upper,
        )
    }

    /// Tightest enclosure consistent with both brackets.
    pub fn intersect(&self, other: &Bracket) -> Self {
        let (lower, ml) = if other.lower > self.lower {
            (other.lower, other.method_lower)
        } else {
            (self.lower, self.method_lower)
        };
        let (upper, mu) = if other.upper < self.upper {
            (other.upper, other.method_upper)
        } else {
            (self.upper, self.method_upper)
        };
        Self::new(lower, upper, ml, mu)
    }

    /// Elementwise maximum: encloses `max(a, b)` when `self ∋ a`, `other ∋ b`.
    pub fn max(&self, other: &Bracket) -> Self {
        let (lower, ml) = if other.lower > self.lower {
            (other.lower, other.method_lower)
        } else {
            (self.lower, self.method_lower)
        };
        let (upper, mu) = if other.upper > self.upper {
            (other.upper, other.method_upper)
        } else {
            (self.upper, self.method_upper)
        };
        Self::new(lower, upper, ml, mu)
    }

    pub fn with_methods(mut self, lower: Method, upper: Method) -> Self {
        self.method_lower = lower;
        self.method_upper = upper;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_bracket_has_no_gap() {
        let b = Bracket::exact(2.5, Method::Svd);
        assert_eq!(b.gap(), 0.0);
        assert!(b.contains(2.5, 0.0));
        assert!(!b.contains(2.6, 1e-3));
    }

    #[test]
    fn tiny_inversion_is_clamped() {
        let b = Bracket::new(1.0 + 1e-15, 1.0, Method::LpDual, Method::AtomLp);
        assert!(b.lower <= b.upper);
    }

    #[test]
    fn intersect_and_max() {
        let a = Bracket::new(1.0, 3.0, Method::DualSampling, Method::Peeling);
        let b = Bracket::new(2.0, 4.0, Method::LpDual, Method::AtomLp);
        let i = a.intersect(&b);
        assert_eq!((i.lower, i.upper), (2.0, 3.0));
        assert_eq!(i.method_lower, Method::LpDual);
        assert_eq!(i.method_upper, Method::Peeling);
        let m = a.max(&b);
        assert_eq!((m.lower, m.upper), (2.0, 4.0));
        assert!(a.overlaps(&b, 0.0));
    }
}
