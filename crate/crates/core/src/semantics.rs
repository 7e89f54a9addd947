//! Semantic similarity between articles: sublinear tf-idf vectors reduced by a
//! sparse random projection and compared by cosine, plus category overlap.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Read, Write};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{NameTable, SimilaritySource};

pub const DEFAULT_DIMENSION: usize = 512;

const CACHE_MAGIC: &[u8; 8] = b"LPPROJ\x00\x01";

/// Lowercases and splits on non-alphanumeric characters, dropping tokens
/// shorter than two characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
}

/// Term counts and category sets per article.
#[derive(Debug, Clone, Default)]
pub struct DocumentCorpus {
    articles: NameTable,
    vocabulary: NameTable,
    /// Per article: `(term, count)` sorted by term.
    term_counts: Vec<Vec<(u32, u32)>>,
    document_frequency: Vec<u32>,
    categories: Vec<BTreeSet<String>>,
}

impl DocumentCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    fn article(&mut self, name: &str) -> usize {
        let id = self.articles.intern(name) as usize;
        if id == self.term_counts.len() {
            self.term_counts.push(Vec::new());
            self.categories.push(BTreeSet::new());
        }
        id
    }

    /// Adds (or extends) the text of an article.
    pub fn add_text(&mut self, name: &str, text: &str) {
        let id = self.article(name);
        let mut counts: HashMap<u32, u32> = self.term_counts[id].iter().copied().collect();
        let before: BTreeSet<u32> = counts.keys().copied().collect();
        for token in tokenize(text) {
            let term = self.vocabulary.intern(&token);
            if term as usize == self.document_frequency.len() {
                self.document_frequency.push(0);
            }
            *counts.entry(term).or_default() += 1;
        }
        for &term in counts.keys() {
            if !before.contains(&term) {
                self.document_frequency[term as usize] += 1;
            }
        }
        let mut sorted: Vec<_> = counts.into_iter().collect();
        sorted.sort_unstable();
        self.term_counts[id] = sorted;
    }

    pub fn add_categories<I, S>(&mut self, name: &str, categories: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let id = self.article(name);
        self.categories[id].extend(categories.into_iter().map(Into::into));
    }

    /// Reads `name\ttext...` lines; every field after the name is tokenized.
    pub fn read_texts<R: BufRead>(&mut self, reader: R) -> Result<()> {
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, rest) = line.split_once('\t').unwrap_or((&line, ""));
            if name.is_empty() {
                return Err(Error::line(i + 1, "empty article name"));
            }
            self.add_text(name, rest);
        }
        Ok(())
    }

    /// Reads `name\tcategory\tcategory...` lines.
    pub fn read_categories<R: BufRead>(&mut self, reader: R) -> Result<()> {
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let name = fields.next().unwrap_or_default();
            if name.is_empty() {
                return Err(Error::line(i + 1, "empty article name"));
            }
            self.add_categories(name, fields.filter(|c| !c.is_empty()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn article_id(&self, name: &str) -> Option<u32> {
        self.articles.get(name)
    }

    pub fn article_name(&self, id: u32) -> &str {
        self.articles.name(id)
    }

    pub fn term_id(&self, term: &str) -> Option<u32> {
        self.vocabulary.get(term)
    }

    pub fn document_frequency(&self, term: u32) -> u32 {
        self.document_frequency[term as usize]
    }

    pub fn term_counts(&self, article: u32) -> &[(u32, u32)] {
        &self.term_counts[article as usize]
    }

    pub fn categories(&self, article: u32) -> &BTreeSet<String> {
        &self.categories[article as usize]
    }

    /// Content hash over articles, term counts and categories.
    pub fn content_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for id in 0..self.len() as u32 {
            h.update(self.article_name(id).as_bytes());
            h.update([0]);
            for &(term, count) in self.term_counts(id) {
                h.update(self.vocabulary.name(term).as_bytes());
                h.update(count.to_le_bytes());
            }
            h.update([1]);
            for c in self.categories(id) {
                h.update(c.as_bytes());
                h.update([0]);
            }
            h.update([2]);
        }
        h.finalize().into()
    }
}

/// Sparse vector with ascending indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    pub entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&(_, v)| v == 0.0)
    }
}

/// Sublinear tf-idf, `(1 + ln tf) * ln(N / df)`, L2-normalized per document.
/// Documents whose weights all vanish get the zero vector.
pub fn tfidf(corpus: &DocumentCorpus) -> Vec<SparseVector> {
    let n_docs = corpus.len() as f64;
    (0..corpus.len() as u32)
        .map(|doc| {
            let mut entries: Vec<(u32, f64)> = corpus
                .term_counts(doc)
                .iter()
                .map(|&(term, tf)| {
                    let idf = (n_docs / corpus.document_frequency(term) as f64).ln();
                    (term, (1.0 + (tf as f64).ln()) * idf)
                })
                .filter(|&(_, w)| w != 0.0)
                .collect();
            let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                entries.iter_mut().for_each(|(_, w)| *w /= norm);
            }
            SparseVector { entries }
        })
        .collect()
}

/// Sparse sign matrix mapping `input_dim` coordinates to `dim`.
///
/// Each entry is `+s`, `0` or `-s`, nonzero with probability `1/sqrt(input_dim)`,
/// with `s = input_dim^(1/4)` so that entries have unit variance. Outputs are
/// scaled by `1/sqrt(dim)`.
#[derive(Debug, Clone)]
pub struct RandomProjection {
    dim: usize,
    seed: u64,
    /// Nonzeros per input coordinate: `(output index, signed weight)`.
    columns: Vec<Vec<(u32, f64)>>,
}

impl RandomProjection {
    pub fn new(input_dim: usize, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("projection dimension must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let density = if input_dim == 0 {
            1.0
        } else {
            1.0 / (input_dim as f64).sqrt()
        };
        let scale = density.recip().sqrt() / (dim as f64).sqrt();
        let nonzeros = Binomial::new(dim as u64, density)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let columns = (0..input_dim)
            .map(|_| {
                let k = nonzeros.sample(&mut rng) as usize;
                let mut picks: Vec<u32> = index::sample(&mut rng, dim, k)
                    .into_iter()
                    .map(|i| i as u32)
                    .collect();
                picks.sort_unstable();
                picks
                    .into_iter()
                    .map(|i| (i, if rng.random_bool(0.5) { scale } else { -scale }))
                    .collect()
            })
            .collect();
        Ok(Self { dim, seed, columns })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn apply(&self, v: &SparseVector) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(j, x) in &v.entries {
            if let Some(col) = self.columns.get(j as usize) {
                for &(k, w) in col {
                    out[k as usize] += x * w;
                }
            }
        }
        out
    }
}

/// Projected article vectors, keyed by `(dim, seed, corpus hash)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedVectors {
    pub dim: usize,
    pub seed: u64,
    pub corpus_hash: [u8; 32],
    pub vectors: Vec<Vec<f64>>,
}

impl ProjectedVectors {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&(self.dim as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.corpus_hash)?;
        w.write_all(&(self.vectors.len() as u64).to_le_bytes())?;
        for v in &self.vectors {
            for x in v {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a cache file, returning `None` when its key differs from the
    /// requested one.
    pub fn read_cached<R: Read>(
        mut r: R,
        dim: usize,
        seed: u64,
        corpus_hash: &[u8; 32],
    ) -> Result<Option<Self>> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::MalformedInput("not a projection cache".into()));
        }
        let mut u = [0u8; 8];
        r.read_exact(&mut u)?;
        let file_dim = u64::from_le_bytes(u) as usize;
        r.read_exact(&mut u)?;
        let file_seed = u64::from_le_bytes(u);
        let mut hash = [0u8; 32];
        r.read_exact(&mut hash)?;
        if file_dim != dim || file_seed != seed || &hash != corpus_hash {
            return Ok(None);
        }
        r.read_exact(&mut u)?;
        let n = u64::from_le_bytes(u) as usize;
        let mut vectors = Vec::with_capacity(n);
        for _ in 0..n {
            let mut v = Vec::with_capacity(dim);
            for _ in 0..dim {
                r.read_exact(&mut u)?;
                v.push(f64::from_le_bytes(u));
            }
            vectors.push(v);
        }
        Ok(Some(Self {
            dim,
            seed,
            corpus_hash: hash,
            vectors,
        }))
    }
}

/// Projects every tf-idf vector of the corpus to `dim` dimensions.
pub fn project(corpus: &DocumentCorpus, dim: usize, seed: u64) -> Result<ProjectedVectors> {
    let projection = RandomProjection::new(corpus.vocabulary_size(), dim, seed)?;
    let vectors = tfidf(corpus).iter().map(|v| projection.apply(v)).collect();
    Ok(ProjectedVectors {
        dim,
        seed,
        corpus_hash: corpus.content_hash(),
        vectors,
    })
}

/// Cosine of two dense vectors; 0 when either is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Cosine of binary category indicators: `|A ∩ B| / sqrt(|A| |B|)`.
pub fn category_cosine(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let shared = a.intersection(b).count() as f64;
    shared / ((a.len() * b.len()) as f64).sqrt()
}

/// Similarity lookups over a corpus and its projected text vectors.
#[derive(Debug, Clone)]
pub struct SemanticIndex {
    corpus: DocumentCorpus,
    projected: ProjectedVectors,
}

impl SemanticIndex {
    pub fn new(corpus: DocumentCorpus, projected: ProjectedVectors) -> Result<Self> {
        if projected.vectors.len() != corpus.len() || projected.corpus_hash != corpus.content_hash() {
            return Err(Error::Alignment("projected vectors do not belong to this corpus".into()));
        }
        Ok(Self { corpus, projected })
    }

    pub fn build(corpus: DocumentCorpus, dim: usize, seed: u64) -> Result<Self> {
        let projected = project(&corpus, dim, seed)?;
        Ok(Self { corpus, projected })
    }

    pub fn corpus(&self) -> &DocumentCorpus {
        &self.corpus
    }

    pub fn projected(&self) -> &ProjectedVectors {
        &self.projected
    }

    fn id(&self, name: &str) -> Result<u32> {
        self.corpus
            .article_id(name)
            .ok_or_else(|| Error::UnknownArticle(name.to_owned()))
    }

    /// Cosine of projected tf-idf vectors, clamped to `[0, 1]`.
    pub fn text_similarity(&self, a: &str, b: &str) -> Result<f64> {
        let (a, b) = (self.id(a)?, self.id(b)?);
        let c = cosine(
            &self.projected.vectors[a as usize],
            &self.projected.vectors[b as usize],
        );
        Ok(c.clamp(0.0, 1.0))
    }

    /// Category cosine; articles without categories (or unknown) score 0.
    pub fn topic_similarity(&self, a: &str, b: &str) -> f64 {
        match (self.corpus.article_id(a), self.corpus.article_id(b)) {
            (Some(a), Some(b)) => category_cosine(self.corpus.categories(a), self.corpus.categories(b)),
            _ => 0.0,
        }
    }
}

impl SimilaritySource for SemanticIndex {
    fn text_similarity(&self, src: &str, trg: &str) -> Result<f64> {
        SemanticIndex::text_similarity(self, src, trg)
    }

    fn topic_similarity(&self, src: &str, trg: &str) -> Result<f64> {
        Ok(SemanticIndex::topic_similarity(self, src, trg))
    }
}
