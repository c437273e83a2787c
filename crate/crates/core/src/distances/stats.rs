//! Pearson correlation and Welch's t-test with exact Student-t p-values.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationFlag {
    /// Fewer than three pairs; p is undefined.
    TooFewPairs,
    /// One of the columns is constant; r is undefined.
    ZeroVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pearson {
    pub r: Option<f64>,
    pub p_value: Option<f64>,
    pub n: usize,
    pub flag: Option<CorrelationFlag>,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with `n - 1` in the denominator.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Two-sided tail probability of Student's t with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    if t.is_nan() || df <= 0.0 {
        return f64::NAN;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Pearson {
    assert_eq!(x.len(), y.len(), "pearson needs paired samples");
    let n = x.len();
    if n < 2 {
        return Pearson {
            r: None,
            p_value: None,
            n,
            flag: Some(CorrelationFlag::TooFewPairs),
        };
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Pearson {
            r: None,
            p_value: None,
            n,
            flag: Some(CorrelationFlag::ZeroVariance),
        };
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    if n < 3 {
        return Pearson {
            r: Some(r),
            p_value: None,
            n,
            flag: Some(CorrelationFlag::TooFewPairs),
        };
    }
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        t_two_sided_p(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Pearson {
        r: Some(r),
        p_value: Some(p),
        n,
        flag: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Welch {
    pub mean_a: f64,
    pub mean_b: f64,
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

impl Welch {
    /// `mean_a - mean_b`.
    pub fn gap(&self) -> f64 {
        self.mean_a - self.mean_b
    }
}

/// Unequal-variance two-sample t-test. `None` when either group has fewer
/// than two values.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Option<Welch> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (qa, qb) = (variance(a) / na, variance(b) / nb);
    let se2 = qa + qb;
    if se2 == 0.0 {
        let t = if ma == mb {
            0.0
        } else {
            (ma - mb).signum() * f64::INFINITY
        };
        return Some(Welch {
            mean_a: ma,
            mean_b: mb,
            t,
            df: na + nb - 2.0,
            p_value: if t == 0.0 { 1.0 } else { 0.0 },
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    Some(Welch {
        mean_a: ma,
        mean_b: mb,
        t,
        df,
        p_value: t_two_sided_p(t, df),
    })
}
