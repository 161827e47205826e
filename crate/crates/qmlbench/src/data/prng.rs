//! Invertible linear-congruential scrambling of feature values:
//! rand(x) = 1 + (a*x + b) mod m and its inverse
//! rand^{-1}(y) = a^{-1} * (y - 1 - b) mod m, with a and m prime and m
//! larger than every quantized feature value.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrngParams {
    pub a: u64,
    pub b: u64,
    pub m: u64,
    pub a_inv: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

impl std::str::FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "forward" => Ok(Direction::Forward),
            "inverse" => Ok(Direction::Inverse),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Modular inverse found by linear scan over [1, m), exactly the naive
/// procedure: the first candidate with a*candidate = 1 (mod m).
pub fn mod_inverse(a: u64, m: u64) -> Result<u64> {
    for candidate in 1..m {
        if (a as u128 * candidate as u128) % m as u128 == 1 {
            return Ok(candidate);
        }
    }
    Err(Error::NoModularInverse { a, m })
}

impl PrngParams {
    pub fn new(a: u64, b: u64, m: u64) -> Result<Self> {
        if !is_prime(a) || !is_prime(m) {
            return Err(Error::InvalidParameter(format!(
                "a = {a} and m = {m} must both be prime"
            )));
        }
        if a >= m {
            return Err(Error::InvalidParameter(format!("a = {a} must be < m = {m}")));
        }
        let a_inv = mod_inverse(a, m)?;
        Ok(PrngParams { a, b, m, a_inv })
    }

    fn forward(&self, v: i64) -> i64 {
        let r = (self.a as i128 * v as i128 + self.b as i128).rem_euclid(self.m as i128);
        1 + r as i64
    }

    fn inverse(&self, v: i64) -> i64 {
        let r = (self.a_inv as i128 * (v as i128 - 1 - self.b as i128)).rem_euclid(self.m as i128);
        r as i64
    }
}

fn is_power_of_ten(k: u64) -> bool {
    let mut v = 1u64;
    loop {
        if v == k {
            return true;
        }
        match v.checked_mul(10) {
            Some(next) if next <= k => v = next,
            _ => return false,
        }
    }
}

/// Scramble (or unscramble) every feature value of a dataset. Values are
/// quantized to round(v * k), mapped, and divided back by k; labels are
/// untouched. `inverse(forward(d)) == d` exactly as long as the parameters
/// match.
pub fn prng_apply(
    dataset: &Dataset,
    params: &PrngParams,
    direction: Direction,
    quantization_scale: u64,
) -> Result<Dataset> {
    if !is_power_of_ten(quantization_scale) {
        return Err(Error::InvalidParameter(format!(
            "quantization scale {quantization_scale} must be a power of ten"
        )));
    }
    let k = quantization_scale as f64;
    let mut features = dataset.features.clone();
    for v in features.iter_mut() {
        let q = (*v * k).round() as i64;
        let mapped = match direction {
            Direction::Forward => {
                if q < 0 || q >= params.m as i64 {
                    return Err(Error::PrngRangeExceeded {
                        value: *v,
                        quantized: q,
                        m: params.m,
                    });
                }
                params.forward(q)
            }
            Direction::Inverse => params.inverse(q),
        };
        *v = mapped as f64 / k;
    }
    dataset.with_features(features, dataset.feature_names.clone())
}
