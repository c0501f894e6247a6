use std::fmt::{Debug, Display};
use std::str::FromStr;

/// Floating-point scalar the CRF is generic over.
///
/// `Display` must print the shortest string that parses back to the same
/// value, which holds for the primitive float types.
pub trait Scalar:
    num_traits::Float + num_traits::FromPrimitive + Debug + Display + FromStr + Default + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: num_traits::Float + num_traits::FromPrimitive + Debug + Display + FromStr + Default + Send + Sync + 'static
{
}

/// Numerically stable `ln(sum(exp(x)))`.
pub fn log_sum_exp<F: Scalar>(xs: impl IntoIterator<Item = F> + Clone) -> F {
    let max = xs.clone().into_iter().fold(F::neg_infinity(), F::max);
    if max == F::neg_infinity() {
        return max;
    }
    let sum = xs.into_iter().fold(F::zero(), |acc, x| acc + (x - max).exp());
    max + sum.ln()
}

pub(crate) fn cast<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("f64 converts to any float scalar")
}
