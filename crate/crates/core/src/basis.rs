//! The frozen word-embedding space ("Basis") used both as tagger input and as
//! the codomain of frame encoding.
//!
//! Vectors are read from the usual whitespace-separated text format
//! (`token v1 ... vd`, one entry per line). A first line made of exactly two
//! integers is treated as a `count dim` header and skipped.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg;

/// Immutable vocabulary to vector map.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisStore {
    dim: usize,
    lowercase: bool,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    // row-major, tokens.len() x dim
    data: Vec<f64>,
    norms: Vec<f64>,
    duplicates: usize,
}

impl BasisStore {
    /// Load a text embedding file. With `lowercase` set, stored and queried
    /// tokens are both lowercased; the first occurrence of a token wins.
    pub fn load(path: impl AsRef<Path>, lowercase: bool) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file), path, lowercase)
    }

    pub fn from_reader<R: BufRead>(reader: R, source: &Path, lowercase: bool) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut tokens = Vec::new();
        let mut index = HashMap::new();
        let mut data = Vec::new();
        let mut duplicates = 0;
        let mut row = Vec::new();

        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::io(source, e))?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else {
                continue;
            };

            row.clear();
            for field in fields {
                let value: f64 = field.parse().map_err(|_| {
                    Error::format(source, line_no, format!("invalid float `{field}`"))
                })?;
                row.push(value);
            }

            if line_no == 1 && row.len() == 1 && is_count_header(&line) {
                continue;
            }
            if row.is_empty() {
                return Err(Error::format(source, line_no, "token has no vector"));
            }
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(Error::format(
                        source,
                        line_no,
                        format!("vector has {} components, expected {d}", row.len()),
                    ));
                }
                Some(_) => {}
            }

            let token = normalize(token, lowercase);
            if index.contains_key(&token) {
                duplicates += 1;
                continue;
            }
            index.insert(token.clone(), tokens.len());
            tokens.push(token);
            data.extend_from_slice(&row);
        }

        let Some(dim) = dim else {
            return Err(Error::EmptyFile(source.to_path_buf()));
        };
        let norms = data.chunks_exact(dim).map(|v| linalg::sq_norm(v).sqrt()).collect();
        Ok(BasisStore {
            dim,
            lowercase,
            tokens,
            index,
            data,
            norms,
            duplicates,
        })
    }

    /// Build a store from in-memory entries (first occurrence wins).
    pub fn from_entries<I, S>(dim: usize, entries: I, lowercase: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        if dim == 0 {
            return Err(Error::InvalidArgument("basis dimension must be positive".into()));
        }
        let mut store = BasisStore {
            dim,
            lowercase,
            tokens: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            norms: Vec::new(),
            duplicates: 0,
        };
        for (token, vector) in entries {
            if vector.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: vector.len(),
                });
            }
            let token = normalize(token.as_ref(), lowercase);
            if store.index.contains_key(&token) {
                store.duplicates += 1;
                continue;
            }
            store.index.insert(token.clone(), store.tokens.len());
            store.tokens.push(token);
            store.norms.push(linalg::sq_norm(&vector).sqrt());
            store.data.extend(vector);
        }
        Ok(store)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    /// Number of duplicate token lines dropped at load time.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    /// Vector of a single vocabulary token.
    pub fn token_vector(&self, token: &str) -> Option<&[f64]> {
        let idx = if self.lowercase && token.chars().any(char::is_uppercase) {
            *self.index.get(&token.to_lowercase())?
        } else {
            *self.index.get(token)?
        };
        Some(&self.data[idx * self.dim..(idx + 1) * self.dim])
    }

    pub fn contains_token(&self, token: &str) -> bool {
        self.token_vector(token).is_some()
    }

    /// Embed a term. Multiword terms ("astronomical body") embed as the mean
    /// of their in-vocabulary tokens; `None` when no token is known.
    pub fn lookup_term(&self, term: &str) -> Option<Vec<f64>> {
        let mut sum = vec![0.0; self.dim];
        let mut found = 0usize;
        for token in term.split_whitespace() {
            if let Some(v) = self.token_vector(token) {
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
                found += 1;
            }
        }
        if found == 0 {
            return None;
        }
        if found > 1 {
            let n = found as f64;
            sum.iter_mut().for_each(|s| *s /= n);
        }
        Some(sum)
    }

    /// The `k` vocabulary terms closest to `v` by cosine, best first. Ties
    /// are broken by term order; all-zero stored vectors never match.
    pub fn nearest_terms(&self, v: &[f64], k: usize) -> Result<Vec<(String, f64)>> {
        if v.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: v.len(),
            });
        }
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let v_norm = linalg::sq_norm(v).sqrt();
        if v_norm == 0.0 {
            return Err(Error::ZeroVector);
        }

        let mut scored: Vec<(f64, usize)> = self
            .data
            .chunks_exact(self.dim)
            .zip(&self.norms)
            .enumerate()
            .filter(|(_, (_, &n))| n > 0.0)
            .map(|(i, (row, &n))| (linalg::dot(row, v) / (n * v_norm), i))
            .collect();

        let order = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            b.0.total_cmp(&a.0)
                .then_with(|| self.tokens[a.1].cmp(&self.tokens[b.1]))
        };
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_unstable_by(order);
        Ok(scored
            .into_iter()
            .map(|(s, i)| (self.tokens[i].clone(), s))
            .collect())
    }
}

fn normalize(token: &str, lowercase: bool) -> String {
    if lowercase {
        token.to_lowercase()
    } else {
        token.to_owned()
    }
}

fn is_count_header(line: &str) -> bool {
    let fields: Vec<&str> = line.split_whitespace().collect();
    fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok())
}
