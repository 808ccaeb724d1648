//! Per-coordinate interval boxes used for state, input and workspace sets.

use crate::error::{dim_err, Error, Result};
use serde::{Deserialize, Serialize};

/// Axis-aligned box `{x : lo ≤ x ≤ hi}`; infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxBounds {
    #[serde(with = "extended_reals")]
    pub lo: Vec<f64>,
    #[serde(with = "extended_reals")]
    pub hi: Vec<f64>,
}

/// Serializes infinite bounds as the strings `"inf"` / `"-inf"` (JSON has no
/// infinity literal).
mod extended_reals {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize)]
    #[serde(untagged)]
    enum Ext {
        Num(f64),
        Word(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let items: Vec<Ext> = v
            .iter()
            .map(|x| match *x {
                f64::INFINITY => Ext::Word("inf".into()),
                f64::NEG_INFINITY => Ext::Word("-inf".into()),
                x => Ext::Num(x),
            })
            .collect();
        items.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        // Goes through `Value` because untagged enums do not see through
        // arbitrary-precision numbers.
        Vec::<serde_json::Value>::deserialize(d)?
            .into_iter()
            .map(|e| match &e {
                serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| D::Error::custom("invalid bound")),
                serde_json::Value::String(w) => match w.as_str() {
                    "inf" | "+inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    other => Err(D::Error::custom(format!("invalid bound {other:?}"))),
                },
                other => Err(D::Error::custom(format!("invalid bound {other}"))),
            })
            .collect()
    }
}

impl BoxBounds {
    /// Builds a box; requires equal lengths and `lo ≤ hi` everywhere.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(dim_err("BoxBounds", lo.len(), hi.len()));
        }
        if lo.iter().chain(&hi).any(|v| v.is_nan()) {
            return Err(Error::NonFinite("BoxBounds"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::InvalidArgument("box lower bound exceeds upper bound".into()));
        }
        Ok(Self { lo, hi })
    }

    /// Symmetric box `[-r_i, r_i]`.
    pub fn symmetric(radius: &[f64]) -> Result<Self> {
        Self::new(radius.iter().map(|r| -r).collect(), radius.to_vec())
    }

    /// Unbounded box of dimension `n`.
    pub fn unbounded(n: usize) -> Self {
        Self { lo: vec![f64::NEG_INFINITY; n], hi: vec![f64::INFINITY; n] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Strict-interior membership (`lo < x < hi`).
    pub fn contains_strict(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| *v > *l && *v < *h)
    }

    /// Shrinks each coordinate by `amount[i]`; errors if any interval empties.
    pub fn shrink_by(&self, amount: &[f64]) -> Result<Self> {
        if amount.len() != self.dim() {
            return Err(dim_err("BoxBounds::shrink_by", self.dim(), amount.len()));
        }
        let lo: Vec<f64> = self.lo.iter().zip(amount).map(|(l, a)| l + a).collect();
        let hi: Vec<f64> = self.hi.iter().zip(amount).map(|(h, a)| h - a).collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::EmptyTightenedSet(format!("shrinking by {amount:?} empties box lo={:?} hi={:?}", self.lo, self.hi)));
        }
        Ok(Self { lo, hi })
    }

    /// Shrinks every coordinate by the same amount.
    pub fn shrink(&self, amount: f64) -> Result<Self> {
        self.shrink_by(&vec![amount; self.dim()])
    }

    /// Grows every coordinate by `amount`.
    pub fn inflate(&self, amount: f64) -> Self {
        Self { lo: self.lo.iter().map(|l| l - amount).collect(), hi: self.hi.iter().map(|h| h + amount).collect() }
    }

    /// Whether `other` is contained in `self`.
    pub fn contains_box(&self, other: &BoxBounds) -> bool {
        self.dim() == other.dim()
            && self.lo.iter().zip(&other.lo).all(|(a, b)| a <= b)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| a >= b)
    }

    /// Midpoint (finite boxes only).
    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shrink_and_inflate() {
        let b = BoxBounds::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let s = b.shrink(0.25).unwrap();
        assert_eq!(s.lo, vec![0.25, 0.25]);
        assert_eq!(s.hi, vec![0.75, 1.75]);
        assert!(b.contains_box(&s));
        assert!(matches!(b.shrink(0.6), Err(Error::EmptyTightenedSet(_))));
        let i = b.inflate(0.5);
        assert_eq!(i.lo, vec![-0.5, -0.5]);
        assert!(i.contains_box(&b));
    }

    #[test]
    fn membership() {
        let b = BoxBounds::new(vec![0.0], vec![1.0]).unwrap();
        assert!(b.contains(&[1.0]));
        assert!(!b.contains_strict(&[1.0]));
        assert!(b.contains_strict(&[0.5]));
        assert!(!b.contains(&[1.0, 0.0]));
        assert!(BoxBounds::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxBounds::unbounded(3).contains(&[1e300, -1e300, 0.0]));
    }
}
