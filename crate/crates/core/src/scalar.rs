//! Scalar abstraction shared by the map, the semantic model and the checkers.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::distr::uniform::SampleUniform;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the library computes in: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + SampleUniform
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossless for `f64`; `f32` widens exactly.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn lit(v: f64) -> Self {
        Self::from_f64_lossy(v)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

/// Euclidean distance. Every distance in the crate goes through here so that
/// equal inputs give bitwise-equal results.
pub fn euclidean<T: Scalar>(a: &[T], b: &[T]) -> T {
    squared_distance(a, b).sqrt()
}

/// Serde adapter for values that may carry the `+inf` sentinel. JSON has no
/// infinity literal, so it is written as the string `"inf"`.
pub(crate) mod extended {
    use super::Scalar;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Scalar, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        let f = v.to_f64_lossy();
        if f.is_infinite() && f > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(f)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(f) => Ok(T::from_f64_lossy(f)),
            Repr::Str(s) if s == "inf" => Ok(T::infinity()),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", found {s:?}"
            ))),
        }
    }

    pub mod option {
        use super::super::Scalar;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<T: Scalar, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(x) => super::serialize(x, s),
                None => s.serialize_none(),
            }
        }

        #[derive(Deserialize)]
        struct Wrap<T: Scalar>(#[serde(with = "super")] T);

        pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Option<T>, D::Error> {
            Ok(Option::<Wrap<T>>::deserialize(d)?.map(|w| w.0))
        }
    }
}
