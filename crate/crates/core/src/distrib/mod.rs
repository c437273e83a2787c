//! Unigram distributions, Jensen-Shannon divergence and PPMI co-occurrence
//! matrices.
//!
//! All logarithms are base 2, so every divergence lies in `[0, 1]`.

mod ppmi;

use std::collections::btree_map;
use std::collections::BTreeMap;
use std::iter::Peekable;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ppmi::{
    cooccurrence_counts, ppmi_matrix, ppmi_row_distribution, CoocWindow, CooccurrenceCounts,
    PpmiMatrix, PpmiRowDistribution,
};

#[derive(Debug, Error, PartialEq)]
pub enum DistribError {
    #[error("cannot estimate a distribution from an empty token stream")]
    EmptyStream,
    #[error("divergence is undefined between two empty distributions")]
    BothEmpty,
    #[error("invalid weight {weight} for token `{token}`")]
    InvalidWeight { token: String, weight: f64 },
}

/// Sparse probability distribution over tokens.
///
/// Stored probabilities are strictly positive and sum to one (up to
/// rounding). The empty distribution is representable so that divergence
/// against "nothing" is well defined.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TokenDistribution {
    weights: BTreeMap<String, f64>,
}

impl TokenDistribution {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Maximum-likelihood estimate (count / total), no smoothing.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, DistribError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut total = 0u64;
        for t in tokens {
            let t = t.as_ref();
            match counts.get_mut(t) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(t.to_string(), 1);
                }
            }
            total += 1;
        }
        if total == 0 {
            return Err(DistribError::EmptyStream);
        }
        let total = total as f64;
        Ok(TokenDistribution {
            weights: counts
                .into_iter()
                .map(|(k, c)| (k, c as f64 / total))
                .collect(),
        })
    }

    /// Normalizes non-negative weights; zero weights are dropped.
    pub fn from_weights<I>(weights: I) -> Result<Self, DistribError>
    where
        I: IntoIterator<Item = (String, f64)>,
    {
        let mut map: BTreeMap<String, f64> = BTreeMap::new();
        for (token, weight) in weights {
            if !weight.is_finite() || weight < 0.0 {
                return Err(DistribError::InvalidWeight { token, weight });
            }
            if weight > 0.0 {
                *map.entry(token).or_insert(0.0) += weight;
            }
        }
        let total: f64 = map.values().sum();
        if total > 0.0 {
            for w in map.values_mut() {
                *w /= total;
            }
        }
        Ok(TokenDistribution { weights: map })
    }

    pub fn get(&self, token: &str) -> f64 {
        self.weights.get(token).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.weights.contains_key(token)
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn support(&self) -> impl Iterator<Item = &str> {
        self.weights.keys().map(String::as_str)
    }
}

/// Unigram estimate for a token stream.
pub fn estimate_distribution<T: AsRef<[String]>>(
    stream: T,
) -> Result<TokenDistribution, DistribError> {
    TokenDistribution::from_tokens(stream.as_ref())
}

/// Walks the union of two supports in token order.
struct Union<'a> {
    p: Peekable<btree_map::Iter<'a, String, f64>>,
    q: Peekable<btree_map::Iter<'a, String, f64>>,
}

impl<'a> Iterator for Union<'a> {
    type Item = (&'a str, f64, f64);

    fn next(&mut self) -> Option<Self::Item> {
        use std::cmp::Ordering::*;
        let ord = match (self.p.peek(), self.q.peek()) {
            (None, None) => return None,
            (Some(_), None) => Less,
            (None, Some(_)) => Greater,
            (Some((a, _)), Some((b, _))) => a.cmp(b),
        };
        match ord {
            Less => self.p.next().map(|(k, &v)| (k.as_str(), v, 0.0)),
            Greater => self.q.next().map(|(k, &v)| (k.as_str(), 0.0, v)),
            Equal => {
                let (k, &pv) = self.p.next()?;
                let (_, &qv) = self.q.next()?;
                Some((k.as_str(), pv, qv))
            }
        }
    }
}

fn union<'a>(p: &'a TokenDistribution, q: &'a TokenDistribution) -> Union<'a> {
    Union {
        p: p.weights.iter().peekable(),
        q: q.weights.iter().peekable(),
    }
}

fn xlog2_ratio(x: f64, m: f64) -> f64 {
    if x > 0.0 {
        x * (x / m).log2()
    } else {
        0.0
    }
}

fn term(pw: f64, qw: f64) -> f64 {
    let m = 0.5 * (pw + qw);
    0.5 * xlog2_ratio(pw, m) + 0.5 * xlog2_ratio(qw, m)
}

/// Jensen-Shannon divergence with base-2 logarithms.
pub fn jsd(p: &TokenDistribution, q: &TokenDistribution) -> Result<f64, DistribError> {
    if p.is_empty() && q.is_empty() {
        return Err(DistribError::BothEmpty);
    }
    let total: f64 = union(p, q).map(|(_, pw, qw)| term(pw, qw).max(0.0)).sum();
    Ok(total.clamp(0.0, 1.0))
}

/// Which way a token moves from `p` to `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// More probable in `q`.
    Appearing,
    /// More probable in `p`.
    Disappearing,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub value: f64,
    pub direction: Direction,
}

/// Per-token terms of [`jsd`]; they sum to the divergence.
pub fn jsd_contributions(
    p: &TokenDistribution,
    q: &TokenDistribution,
) -> Result<BTreeMap<String, Contribution>, DistribError> {
    if p.is_empty() && q.is_empty() {
        return Err(DistribError::BothEmpty);
    }
    Ok(union(p, q)
        .map(|(tok, pw, qw)| {
            let direction = if qw > pw {
                Direction::Appearing
            } else if pw > qw {
                Direction::Disappearing
            } else {
                Direction::Neutral
            };
            let value = term(pw, qw).max(0.0);
            (tok.to_string(), Contribution { value, direction })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(pairs: &[(&str, f64)]) -> TokenDistribution {
        TokenDistribution::from_weights(pairs.iter().map(|(k, v)| (k.to_string(), *v))).unwrap()
    }

    #[test]
    fn estimate_counts_tokens() {
        let d = TokenDistribution::from_tokens(["a", "a", "b"]).unwrap();
        assert_eq!(d.get("a"), 2.0 / 3.0);
        assert_eq!(d.get("b"), 1.0 / 3.0);
        assert_eq!(d.support_size(), 2);
        let d = TokenDistribution::from_tokens(["x"]).unwrap();
        assert_eq!(d.get("x"), 1.0);
        assert_eq!(
            TokenDistribution::from_tokens(Vec::<String>::new()),
            Err(DistribError::EmptyStream)
        );
    }

    #[test]
    fn jsd_identical_is_zero() {
        let p = dist(&[("a", 0.5), ("b", 0.5)]);
        assert_eq!(jsd(&p, &p.clone()).unwrap(), 0.0);
    }

    #[test]
    fn jsd_disjoint_is_one() {
        assert_eq!(
            jsd(&dist(&[("a", 1.0)]), &dist(&[("b", 1.0)])).unwrap(),
            1.0
        );
    }

    #[test]
    fn jsd_point_mass_vs_uniform_pair() {
        // Frozen from an exact rational/log evaluation:
        // 1/2 * (log2(4/3)) + 1/2 * (1/2*log2(2/3) + 1/2*log2(2))
        let v = jsd(&dist(&[("a", 1.0)]), &dist(&[("a", 0.5), ("b", 0.5)])).unwrap();
        assert!((v - 0.311_278_124_459_132_8).abs() < 1e-15, "{v}");
    }

    #[test]
    fn jsd_both_empty_errors() {
        let e = TokenDistribution::empty();
        assert_eq!(jsd(&e, &e), Err(DistribError::BothEmpty));
        assert!(jsd_contributions(&e, &e).is_err());
    }

    #[test]
    fn contributions_directions() {
        let p = dist(&[("a", 0.5), ("b", 0.5)]);
        let c = jsd_contributions(&p, &p).unwrap();
        assert!(c
            .values()
            .all(|c| c.value == 0.0 && c.direction == Direction::Neutral));

        let q = dist(&[("a", 0.5), ("z", 0.5)]);
        let c = jsd_contributions(&p, &q).unwrap();
        assert_eq!(c["z"].direction, Direction::Appearing);
        assert_eq!(c["b"].direction, Direction::Disappearing);
        assert_eq!(c["a"].direction, Direction::Neutral);
        let sum: f64 = c.values().map(|c| c.value).sum();
        assert!((sum - jsd(&p, &q).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn contributions_three_token_fixture() {
        // p = {a:.5, b:.3, c:.2}, q = {a:.2, b:.3, d:.5}; values frozen from
        // a term-by-term evaluation with 50-digit arithmetic.
        let p = dist(&[("a", 0.5), ("b", 0.3), ("c", 0.2)]);
        let q = dist(&[("a", 0.2), ("b", 0.3), ("d", 0.5)]);
        let c = jsd_contributions(&p, &q).unwrap();
        assert!(
            (c["a"].value - 0.047_907_801_001_679_15).abs() < 1e-12,
            "{}",
            c["a"].value
        );
        assert_eq!(c["b"].value, 0.0);
        assert!((c["c"].value - 0.1).abs() < 1e-15);
        assert!((c["d"].value - 0.25).abs() < 1e-15);
        assert_eq!(c["a"].direction, Direction::Disappearing);
        assert_eq!(c["d"].direction, Direction::Appearing);
    }

    #[test]
    fn from_weights_rejects_negative() {
        assert!(TokenDistribution::from_weights([("a".to_string(), -1.0)]).is_err());
        assert!(TokenDistribution::from_weights([("a".to_string(), f64::NAN)]).is_err());
        let d = TokenDistribution::from_weights([("a".to_string(), 0.0), ("b".to_string(), 2.0)])
            .unwrap();
        assert_eq!(d.support_size(), 1);
        assert_eq!(d.get("b"), 1.0);
    }
}
