use std::fmt;
use std::str::FromStr;

use super::dd::DoubleDouble;
use super::error::NumericsError;
use super::mp::{with_precision, MpFloat};
use super::qd::QuadDouble;
use super::real::Real;

/// Concrete arithmetic level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precision {
    Double,
    DoubleDouble,
    QuadDouble,
    /// MPFR significand of the given number of bits.
    Multi(u32),
}

impl Precision {
    pub fn bits(self) -> u32 {
        match self {
            Precision::Double => 53,
            Precision::DoubleDouble => 106,
            Precision::QuadDouble => 212,
            Precision::Multi(b) => b,
        }
    }

    /// True when values of this level share the f64 exponent range.
    pub fn has_f64_range(self) -> bool {
        !matches!(self, Precision::Multi(_))
    }

    /// Cheapest level with at least `bits` of significand whose exponent range
    /// covers magnitudes up to 2^`log2_range`.
    pub fn at_least(bits: u32, log2_range: f64) -> Precision {
        let fits = log2_range < 900.0;
        if fits && bits <= 100 {
            Precision::DoubleDouble
        } else if fits && bits <= 200 {
            Precision::QuadDouble
        } else {
            Precision::Multi(bits.max(128).div_ceil(64) * 64)
        }
    }

    /// Runs `task` with the scalar type of this level.
    pub fn dispatch<T: PrecisionTask>(self, task: T) -> T::Output {
        match self {
            Precision::Double => task.run::<f64>(),
            Precision::DoubleDouble => task.run::<DoubleDouble>(),
            Precision::QuadDouble => task.run::<QuadDouble>(),
            Precision::Multi(bits) => with_precision(bits, || task.run::<MpFloat>()),
        }
    }
}

/// A computation generic over the scalar type, selected at run time by
/// [`Precision::dispatch`].
pub trait PrecisionTask {
    type Output;
    fn run<R: Real>(self) -> Self::Output;
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Precision::Double => f.write_str("double"),
            Precision::DoubleDouble => f.write_str("dd"),
            Precision::QuadDouble => f.write_str("qd"),
            Precision::Multi(b) => write!(f, "mp:{b}"),
        }
    }
}

/// How a sweep chooses its working precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PrecisionMode {
    /// Every point at the same level.
    Fixed(Precision),
    /// Per point, from the growth rate of the layer generators.
    #[default]
    Auto,
}

impl fmt::Display for PrecisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecisionMode::Fixed(p) => p.fmt(f),
            PrecisionMode::Auto => f.write_str("auto"),
        }
    }
}

impl FromStr for PrecisionMode {
    type Err = NumericsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let p = match s.trim().to_ascii_lowercase().as_str() {
            "auto" => return Ok(PrecisionMode::Auto),
            "double" | "f64" => Precision::Double,
            "dd" | "double-double" => Precision::DoubleDouble,
            "qd" | "quad-double" => Precision::QuadDouble,
            other => {
                let bits = other
                    .strip_prefix("mp:")
                    .and_then(|b| b.parse::<u32>().ok())
                    .ok_or_else(|| NumericsError::UnknownPrecision(s.to_string()))?;
                if !(64..=1 << 20).contains(&bits) {
                    return Err(NumericsError::UnknownPrecision(s.to_string()));
                }
                Precision::Multi(bits)
            }
        };
        Ok(PrecisionMode::Fixed(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_levels() {
        assert_eq!("dd".parse::<PrecisionMode>().unwrap(), PrecisionMode::Fixed(Precision::DoubleDouble));
        assert_eq!("qd".parse::<PrecisionMode>().unwrap(), PrecisionMode::Fixed(Precision::QuadDouble));
        assert_eq!("double".parse::<PrecisionMode>().unwrap(), PrecisionMode::Fixed(Precision::Double));
        assert_eq!("mp:512".parse::<PrecisionMode>().unwrap(), PrecisionMode::Fixed(Precision::Multi(512)));
        assert_eq!("auto".parse::<PrecisionMode>().unwrap(), PrecisionMode::Auto);
        assert!("mp:3".parse::<PrecisionMode>().is_err());
        assert!("single".parse::<PrecisionMode>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["double", "dd", "qd", "mp:300", "auto"] {
            assert_eq!(s.parse::<PrecisionMode>().unwrap().to_string(), s);
        }
    }
}
