//! Text checkpoint for [`TaggerModel`].
//!
//! ```text
//! defframe-tagger/1
//! config hidden_size=100 word_proj_dim=50 ...
//! basis_dim 50
//! labels O B-IsA I-IsA ...
//! pos <unk> DT NN ...          (TAB-separated)
//! chunk <unk> B-NP ...         (TAB-separated)
//! block pos_embed 12 16
//! <one line of space-separated f64 per row>
//! ...
//! end
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{FeatureVocab, TaggerConfig, TaggerModel};
use crate::corpus::BioLabel;
use crate::error::{Error, Result};
use crate::linalg::fmt_f64;

pub const TAGGER_VERSION: &str = "defframe-tagger/1";

impl TaggerModel {
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TAGGER_VERSION}")?;
        let config: Vec<String> = self
            .config()
            .entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        writeln!(w, "config {}", config.join(" "))?;
        writeln!(w, "basis_dim {}", self.basis_dim())?;
        let labels: Vec<String> = self.labels().iter().map(ToString::to_string).collect();
        writeln!(w, "labels {}", labels.join(" "))?;
        writeln!(w, "pos\t{}", self.features().pos.join("\t"))?;
        writeln!(w, "chunk\t{}", self.features().chunk.join("\t"))?;
        for block in self.blocks() {
            writeln!(w, "block {} {} {}", block.name, block.rows, block.cols)?;
            let values = &self.params()[block.range()];
            for row in values.chunks(block.cols.max(1)) {
                let row: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
                writeln!(w, "{}", row.join(" "))?;
            }
        }
        writeln!(w, "end")?;
        w.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_to(&mut buf).map_err(|e| Error::io(path, e))?;
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::format(source, 0, format!("unexpected end of file, expected {what}")))
        };
        let bad = |line: usize, msg: String| Error::format(source, line, msg);

        let (_, version) = next("version")?;
        if version.trim() != TAGGER_VERSION {
            return Err(Error::Version {
                expected: TAGGER_VERSION.into(),
                found: version.trim().into(),
            });
        }

        let (n, line) = next("config")?;
        let body = line.strip_prefix("config").ok_or_else(|| bad(n, "expected `config`".into()))?;
        let mut config = TaggerConfig::default();
        for kv in body.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad(n, format!("bad config entry `{kv}`")))?;
            config.set(k, v).map_err(|e| bad(n, e.to_string()))?;
        }

        let (n, line) = next("basis_dim")?;
        let basis_dim: usize = line
            .strip_prefix("basis_dim ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad(n, "expected `basis_dim <n>`".into()))?;

        let (n, line) = next("labels")?;
        let labels = line
            .strip_prefix("labels ")
            .ok_or_else(|| bad(n, "expected `labels`".into()))?
            .split_whitespace()
            .map(|l| l.parse::<BioLabel>().map_err(|e| bad(n, e.to_string())))
            .collect::<Result<Vec<_>>>()?;

        let mut vocab = |key: &str| -> Result<Vec<String>> {
            let (n, line) = next(key)?;
            let mut fields = line.split('\t');
            if fields.next() != Some(key) {
                return Err(bad(n, format!("expected `{key}`")));
            }
            Ok(fields.map(str::to_string).collect())
        };
        let features = FeatureVocab {
            pos: vocab("pos")?,
            chunk: vocab("chunk")?,
        };

        let mut blocks = Vec::new();
        loop {
            let (n, line) = next("block or end")?;
            if line.trim() == "end" {
                break;
            }
            let header: Vec<&str> = line.split_whitespace().collect();
            let ["block", name, rows, cols] = header[..] else {
                return Err(bad(n, "expected `block <name> <rows> <cols>`".into()));
            };
            let rows: usize = rows.parse().map_err(|_| bad(n, "bad row count".into()))?;
            let cols: usize = cols.parse().map_err(|_| bad(n, "bad column count".into()))?;
            let mut values = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (n, line) = next("parameter row")?;
                let before = values.len();
                for v in line.split_whitespace() {
                    values.push(v.parse::<f64>().map_err(|_| bad(n, format!("invalid float `{v}`")))?);
                }
                if values.len() - before != cols {
                    return Err(bad(n, format!("expected {cols} values")));
                }
            }
            blocks.push((name.to_string(), rows, cols, values));
        }
        TaggerModel::from_parts(&config, basis_dim, labels, features, blocks)
    }
}
