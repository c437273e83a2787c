use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TokenDistribution;

/// The unit inside which two tokens count as co-occurring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CoocWindow {
    /// Each stream is one context.
    Document,
    /// Every run of `k` consecutive tokens is one context; a stream shorter
    /// than `k` is a single context.
    Sliding(usize),
}

impl Default for CoocWindow {
    fn default() -> Self {
        CoocWindow::Sliding(5)
    }
}

impl fmt::Display for CoocWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoocWindow::Document => f.write_str("document"),
            CoocWindow::Sliding(k) => write!(f, "sliding:{k}"),
        }
    }
}

impl FromStr for CoocWindow {
    type Err = String;

    /// Accepts `document`, `sliding:K`, `sliding(K)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_lowercase();
        if s == "document" {
            return Ok(CoocWindow::Document);
        }
        let k = s
            .strip_prefix("sliding")
            .map(|r| r.trim_matches(|c| c == ':' || c == '(' || c == ')' || c == ' '))
            .ok_or_else(|| format!("unknown co-occurrence window `{s}`"))?;
        let k: usize = k.parse().map_err(|_| format!("bad window size in `{s}`"))?;
        if k < 2 {
            return Err("sliding window must span at least 2 tokens".into());
        }
        Ok(CoocWindow::Sliding(k))
    }
}

impl TryFrom<String> for CoocWindow {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<CoocWindow> for String {
    fn from(w: CoocWindow) -> String {
        w.to_string()
    }
}

/// Interned contexts: each context is a sorted, deduplicated id list.
struct Contexts {
    vocab: Vec<String>,
    sets: Vec<Vec<u32>>,
}

fn contexts<T: AsRef<[String]>>(streams: &[T], window: CoocWindow) -> Contexts {
    let vocab: Vec<String> = streams
        .iter()
        .flat_map(|s| s.as_ref().iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&str, u32> = vocab
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i as u32))
        .collect();

    let mut sets = Vec::new();
    let mut push = |toks: &[String]| {
        let mut ids: Vec<u32> = toks.iter().map(|t| index[t.as_str()]).collect();
        ids.sort_unstable();
        ids.dedup();
        sets.push(ids);
    };
    for stream in streams {
        let toks = stream.as_ref();
        if toks.is_empty() {
            continue;
        }
        match window {
            CoocWindow::Document => push(toks),
            CoocWindow::Sliding(k) if toks.len() <= k => push(toks),
            CoocWindow::Sliding(k) => toks.windows(k).for_each(&mut push),
        }
    }
    Contexts { vocab, sets }
}

/// Raw context frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceCounts {
    pub n_contexts: u64,
    /// Contexts containing each token.
    pub frequency: BTreeMap<String, u64>,
    /// Contexts containing both tokens, keyed with `a < b`.
    pub pairs: BTreeMap<(String, String), u64>,
}

impl CooccurrenceCounts {
    pub fn pair(&self, a: &str, b: &str) -> u64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.pairs
            .get(&(key.0.to_string(), key.1.to_string()))
            .copied()
            .unwrap_or(0)
    }
}

fn count_ids(ctx: &Contexts) -> (Vec<u64>, HashMap<(u32, u32), u64>) {
    let mut freq = vec![0u64; ctx.vocab.len()];
    let mut pairs: HashMap<(u32, u32), u64> = HashMap::new();
    for set in &ctx.sets {
        for (i, &a) in set.iter().enumerate() {
            freq[a as usize] += 1;
            for &b in &set[i + 1..] {
                *pairs.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    (freq, pairs)
}

/// Context and pair frequencies under `window`; self-pairs are excluded.
pub fn cooccurrence_counts<T: AsRef<[String]>>(
    streams: &[T],
    window: CoocWindow,
) -> CooccurrenceCounts {
    let ctx = contexts(streams, window);
    let (freq, pairs) = count_ids(&ctx);
    CooccurrenceCounts {
        n_contexts: ctx.sets.len() as u64,
        frequency: ctx
            .vocab
            .iter()
            .cloned()
            .zip(freq)
            .filter(|(_, f)| *f > 0)
            .collect(),
        pairs: pairs
            .into_iter()
            .map(|((a, b), c)| {
                (
                    (ctx.vocab[a as usize].clone(), ctx.vocab[b as usize].clone()),
                    c,
                )
            })
            .collect(),
    }
}

/// Sparse symmetric positive-PMI matrix.
///
/// Only strictly positive values are stored. `vocabulary` holds every token
/// seen in the input streams, including tokens without any positive entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PpmiMatrix {
    rows: BTreeMap<String, BTreeMap<String, f64>>,
    vocabulary: BTreeSet<String>,
    n_contexts: u64,
}

impl PpmiMatrix {
    pub fn get(&self, a: &str, b: &str) -> f64 {
        self.rows
            .get(a)
            .and_then(|r| r.get(b))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn row(&self, word: &str) -> Option<&BTreeMap<String, f64>> {
        self.rows.get(word)
    }

    pub fn vocabulary(&self) -> &BTreeSet<String> {
        &self.vocabulary
    }

    pub fn n_contexts(&self) -> u64 {
        self.n_contexts
    }

    /// Stored entries with `a < b`.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.rows.iter().flat_map(|(a, row)| {
            row.range::<String, _>((
                std::ops::Bound::Excluded(a.clone()),
                std::ops::Bound::Unbounded,
            ))
            .map(move |(b, &v)| (a.as_str(), b.as_str(), v))
        })
    }

    /// Number of stored unordered pairs.
    pub fn len(&self) -> usize {
        self.rows.values().map(BTreeMap::len).sum::<usize>() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Debug dump as `token_a,token_b,ppmi`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["token_a", "token_b", "ppmi"])?;
        for (a, b, v) in self.entries() {
            w.write_record([a, b, &v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Positive PMI over contexts: `log2(c(a,b) * N / (c(a) * c(b)))` with
/// marginals taken as context frequencies.
pub fn ppmi_matrix<T: AsRef<[String]>>(streams: &[T], window: CoocWindow) -> PpmiMatrix {
    let ctx = contexts(streams, window);
    let (freq, pairs) = count_ids(&ctx);
    let n = ctx.sets.len() as f64;

    let mut sorted: Vec<_> = pairs.into_iter().collect();
    sorted.sort_unstable_by_key(|&(k, _)| k);

    let mut rows: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for ((a, b), c) in sorted {
        let pmi = (c as f64 * n / (freq[a as usize] as f64 * freq[b as usize] as f64)).log2();
        if pmi > 0.0 {
            let (wa, wb) = (&ctx.vocab[a as usize], &ctx.vocab[b as usize]);
            rows.entry(wa.clone()).or_default().insert(wb.clone(), pmi);
            rows.entry(wb.clone()).or_default().insert(wa.clone(), pmi);
        }
    }
    PpmiMatrix {
        rows,
        vocabulary: ctx.vocab.into_iter().collect(),
        n_contexts: ctx.sets.len() as u64,
    }
}

/// One PPMI row restricted to a shared vocabulary and L1-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct PpmiRowDistribution {
    pub word: String,
    /// `None` when the restricted row has no mass.
    pub distribution: Option<TokenDistribution>,
}

impl PpmiRowDistribution {
    pub fn is_empty(&self) -> bool {
        self.distribution.is_none()
    }
}

pub fn ppmi_row_distribution(
    m: &PpmiMatrix,
    word: &str,
    shared_vocab: &BTreeSet<String>,
) -> PpmiRowDistribution {
    let distribution = m.row(word).and_then(|row| {
        let restricted: Vec<(String, f64)> = row
            .iter()
            .filter(|(w, _)| shared_vocab.contains(*w))
            .map(|(w, &v)| (w.clone(), v))
            .collect();
        if restricted.is_empty() {
            return None;
        }
        TokenDistribution::from_weights(restricted)
            .ok()
            .filter(|d| !d.is_empty())
    });
    PpmiRowDistribution {
        word: word.to_string(),
        distribution,
    }
}
