use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Hyperparameters of the relation tagger.
#[derive(Clone, Debug, PartialEq)]
pub struct TaggerConfig {
    pub hidden_size: usize,
    /// Output size of the linear projection applied to frozen word vectors.
    pub word_proj_dim: usize,
    pub pos_embed_dim: usize,
    pub chunk_embed_dim: usize,
    pub query_embed_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            hidden_size: 100,
            word_proj_dim: 50,
            pos_embed_dim: 16,
            chunk_embed_dim: 16,
            query_embed_dim: 4,
            learning_rate: 0.001,
            epochs: 30,
            clip_norm: 5.0,
            seed: 0,
        }
    }
}

impl TaggerConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("hidden_size", self.hidden_size),
            ("word_proj_dim", self.word_proj_dim),
            ("pos_embed_dim", self.pos_embed_dim),
            ("chunk_embed_dim", self.chunk_embed_dim),
            ("query_embed_dim", self.query_embed_dim),
        ];
        for (name, value) in dims {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::Config("clip_norm must be positive".into()));
        }
        Ok(())
    }

    /// Input width of each recurrent cell.
    pub fn input_size(&self) -> usize {
        self.word_proj_dim + self.pos_embed_dim + self.chunk_embed_dim + self.query_embed_dim
    }

    /// Parse flat `key=value` text on top of the defaults. Blank lines and
    /// `#` comments are ignored; unknown keys are errors.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut config = TaggerConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value `{value}` for {key}")))
        }
        match key {
            "hidden_size" => self.hidden_size = num(key, value)?,
            "word_proj_dim" => self.word_proj_dim = num(key, value)?,
            "pos_embed_dim" => self.pos_embed_dim = num(key, value)?,
            "chunk_embed_dim" => self.chunk_embed_dim = num(key, value)?,
            "query_embed_dim" => self.query_embed_dim = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "clip_norm" => self.clip_norm = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("hidden_size", self.hidden_size.to_string()),
            ("word_proj_dim", self.word_proj_dim.to_string()),
            ("pos_embed_dim", self.pos_embed_dim.to_string()),
            ("chunk_embed_dim", self.chunk_embed_dim.to_string()),
            ("query_embed_dim", self.query_embed_dim.to_string()),
            ("learning_rate", format!("{:?}", self.learning_rate)),
            ("epochs", self.epochs.to_string()),
            ("clip_norm", format!("{:?}", self.clip_norm)),
            ("seed", self.seed.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let config = TaggerConfig {
            hidden_size: 8,
            learning_rate: 0.02,
            seed: 9,
            ..TaggerConfig::default()
        };
        assert_eq!(TaggerConfig::from_kv(&config.to_kv()).unwrap(), config);
    }

    #[test]
    fn rejects_zero_hidden_and_unknown_keys() {
        assert!(matches!(TaggerConfig::from_kv("hidden_size=0"), Err(Error::Config(_))));
        assert!(TaggerConfig::from_kv("dropout=0.5").is_err());
        assert!(TaggerConfig::from_kv("learning_rate=-1").is_err());
        assert!(TaggerConfig::from_kv("epochs=ten").is_err());
    }
}
