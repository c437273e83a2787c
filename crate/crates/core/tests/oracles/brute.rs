//! Naive re-derivation of the five divergence metrics, sharing no code with
//! the library. Everything is recomputed from raw token lists by direct
//! enumeration; speed is irrelevant here.

use std::collections::{BTreeMap, BTreeSet};

pub type Dist = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    Document,
    Sliding(usize),
}

pub fn dist(tokens: &[String]) -> Dist {
    let mut d = Dist::new();
    for t in tokens {
        *d.entry(t.clone()).or_insert(0.0) += 1.0;
    }
    let n = tokens.len() as f64;
    d.values_mut().for_each(|v| *v /= n);
    d
}

fn normalize(w: &BTreeMap<String, f64>) -> Dist {
    let s: f64 = w.values().sum();
    w.iter().map(|(k, v)| (k.clone(), v / s)).collect()
}

fn term(p: f64, q: f64) -> f64 {
    let m = (p + q) / 2.0;
    let mut t = 0.0;
    if p > 0.0 {
        t += 0.5 * p * (p / m).log2();
    }
    if q > 0.0 {
        t += 0.5 * q * (q / m).log2();
    }
    t
}

fn union(p: &Dist, q: &Dist) -> BTreeSet<String> {
    p.keys().chain(q.keys()).cloned().collect()
}

pub fn jsd(p: &Dist, q: &Dist) -> f64 {
    union(p, q)
        .iter()
        .map(|w| term(*p.get(w).unwrap_or(&0.0), *q.get(w).unwrap_or(&0.0)))
        .sum()
}

/// (word, contribution, +1 appearing / -1 disappearing / 0)
pub fn contributions(p: &Dist, q: &Dist) -> Vec<(String, f64, i8)> {
    union(p, q)
        .into_iter()
        .map(|w| {
            let (a, b) = (*p.get(&w).unwrap_or(&0.0), *q.get(&w).unwrap_or(&0.0));
            let dir = if b > a {
                1
            } else if a > b {
                -1
            } else {
                0
            };
            let t = term(a, b);
            (w, t, dir)
        })
        .collect()
}

pub struct Thresholds {
    pub newness_eps: f64,
    pub difference_eps: f64,
    pub degenerate: bool,
}

pub fn thresholds(texts: &[Vec<String>]) -> Thresholds {
    let n = texts.len();
    if n < 2 {
        return Thresholds {
            newness_eps: 0.0,
            difference_eps: f64::INFINITY,
            degenerate: true,
        };
    }
    let mut eps = 0.0;
    for i in 0..n {
        let rest: Vec<String> = (0..n)
            .filter(|&j| j != i)
            .flat_map(|j| texts[j].clone())
            .collect();
        let pos: Vec<f64> = contributions(&dist(&rest), &dist(&texts[i]))
            .into_iter()
            .map(|c| c.1)
            .filter(|&v| v > 0.0)
            .collect();
        if !pos.is_empty() {
            eps += pos.iter().sum::<f64>() / pos.len() as f64;
        }
    }
    let mut pair = 0.0;
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            pair += jsd(&dist(&texts[i]), &dist(&texts[j]));
            k += 1;
        }
    }
    Thresholds {
        newness_eps: eps / n as f64,
        difference_eps: pair / k as f64,
        degenerate: false,
    }
}

fn contexts(texts: &[Vec<String>], window: Window) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for t in texts.iter().filter(|t| !t.is_empty()) {
        match window {
            Window::Sliding(k) if t.len() > k => {
                for s in 0..=t.len() - k {
                    out.push(t[s..s + k].to_vec());
                }
            }
            _ => out.push(t.clone()),
        }
    }
    out
}

pub struct Ppmi {
    pub vocab: BTreeSet<String>,
    /// Symmetric, positive entries only.
    pub cells: BTreeMap<(String, String), f64>,
}

pub fn ppmi(texts: &[Vec<String>], window: Window) -> Ppmi {
    let ctx = contexts(texts, window);
    let vocab: BTreeSet<String> = texts.iter().flatten().cloned().collect();
    let n = ctx.len() as f64;
    let has = |c: &Vec<String>, w: &String| c.contains(w);
    let mut cells = BTreeMap::new();
    for a in &vocab {
        for b in &vocab {
            if a == b {
                continue;
            }
            let both = ctx.iter().filter(|c| has(c, a) && has(c, b)).count() as f64;
            if both == 0.0 {
                continue;
            }
            let fa = ctx.iter().filter(|c| has(c, a)).count() as f64;
            let fb = ctx.iter().filter(|c| has(c, b)).count() as f64;
            let pmi = (both * n / (fa * fb)).log2();
            if pmi > 0.0 {
                cells.insert((a.clone(), b.clone()), pmi);
            }
        }
    }
    Ppmi { vocab, cells }
}

#[derive(Debug, Clone, Copy)]
pub struct Metrics {
    pub newness: f64,
    pub appearance: f64,
    pub disappearance: f64,
    pub uniqueness: f64,
    pub difference: f64,
    pub new_surprise: f64,
    pub divergent_surprise: f64,
}

/// Scores a variation (one or more texts) against reference texts. The
/// disappearance count is divided by the variation's support size.
pub fn score(refs: &[Vec<String>], var: &[Vec<String>], window: Window) -> Metrics {
    let th = thresholds(refs);
    let pooled = dist(&refs.concat());
    let nt = dist(&var.concat());
    let c = contributions(&pooled, &nt);
    let support = nt.len() as f64;
    let appear = c
        .iter()
        .filter(|x| x.2 == 1 && x.1 >= th.newness_eps)
        .count() as f64
        / support;
    let disappear = c
        .iter()
        .filter(|x| x.2 == -1 && x.1 >= th.newness_eps)
        .count() as f64
        / support;

    let difference = if th.degenerate {
        0.0
    } else {
        refs.iter()
            .filter(|r| jsd(&dist(r), &nt) >= th.difference_eps)
            .count() as f64
            / refs.len() as f64
    };

    let pr = ppmi(refs, window);
    let pv = ppmi(var, window);
    let var_pairs: Vec<_> = pv.cells.keys().filter(|(a, b)| a < b).collect();
    let new_surprise = if var_pairs.is_empty() {
        0.0
    } else {
        var_pairs
            .iter()
            .filter(|k| !pr.cells.contains_key(**k))
            .count() as f64
            / var_pairs.len() as f64
    };

    let shared: BTreeSet<String> = pr.vocab.intersection(&pv.vocab).cloned().collect();
    let row = |m: &Ppmi, w: &String| -> BTreeMap<String, f64> {
        shared
            .iter()
            .filter_map(|x| {
                m.cells
                    .get(&(w.clone(), x.clone()))
                    .map(|v| (x.clone(), *v))
            })
            .collect()
    };
    let mut ds = Vec::new();
    for w in &shared {
        let (a, b) = (row(&pr, w), row(&pv, w));
        if !a.is_empty() && !b.is_empty() {
            ds.push(jsd(&normalize(&a), &normalize(&b)));
        }
    }
    let divergent_surprise = if ds.is_empty() {
        0.0
    } else {
        ds.iter().sum::<f64>() / ds.len() as f64
    };

    Metrics {
        newness: 0.8 * appear + 0.2 * disappear,
        appearance: appear,
        disappearance: disappear,
        uniqueness: jsd(&pooled, &nt),
        difference,
        new_surprise,
        divergent_surprise,
    }
}
