use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failures reported by the numerical engine.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A distribution parameter is outside its admissible range.
    InvalidParameter(&'static str, f64),
    /// Explicit probabilities are negative, non-finite, or do not sum to one.
    InvalidPmf(&'static str),
    /// The offspring mean is zero (`p_0 = 1`).
    ZeroMean,
    /// `p_1 = 1`: every point of `[0, 1]` is a fixed point of `G_1`.
    Degenerate,
    /// An argument of a generating function is outside `[0, 1]`.
    OutOfDomain(f64),
    /// Only first and second derivatives are supported.
    UnsupportedOrder(u32),
    /// An operation needs a non-empty list.
    EmptyCaps,
    /// Generation indices of a cap vector must strictly increase.
    UnorderedGenerations,
    /// A cap of zero cannot be decremented.
    ZeroCap,
    /// A fixed-point solve did not converge.
    NoConvergence {
        iterations: u32,
        iterate: f64,
        residual: f64,
    },
    /// The operation assumes a different criticality class or support shape.
    RegimeMismatch(&'static str),
    /// No row survived the precision floor.
    EmptyWindow,
    /// Too many simulated trees hit the generation or population cap.
    ExcessiveCensoring { rate: f64 },
    /// Simulation configuration is unusable.
    InvalidConfig(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(name, v) => write!(f, "invalid parameter {name} = {v}"),
            Error::InvalidPmf(why) => write!(f, "invalid pmf: {why}"),
            Error::ZeroMean => f.write_str("offspring mean is zero"),
            Error::Degenerate => f.write_str("degenerate offspring law with p_1 = 1"),
            Error::OutOfDomain(x) => write!(f, "argument {x} outside [0, 1]"),
            Error::UnsupportedOrder(k) => write!(f, "derivative order {k} not supported"),
            Error::EmptyCaps => f.write_str("empty cap list"),
            Error::UnorderedGenerations => f.write_str("generation indices must strictly increase"),
            Error::ZeroCap => f.write_str("caps must be at least 1"),
            Error::NoConvergence {
                iterations,
                iterate,
                residual,
            } => write!(
                f,
                "fixed-point solve did not converge after {iterations} iterations \
                 (iterate {iterate}, residual {residual})"
            ),
            Error::RegimeMismatch(why) => write!(f, "regime mismatch: {why}"),
            Error::EmptyWindow => f.write_str("no trusted rows before the precision floor"),
            Error::ExcessiveCensoring { rate } => {
                write!(
                    f,
                    "censoring rate {rate} exceeds 1% for a (sub)critical law"
                )
            }
            Error::InvalidConfig(why) => write!(f, "invalid simulation config: {why}"),
        }
    }
}

impl core::error::Error for Error {}
