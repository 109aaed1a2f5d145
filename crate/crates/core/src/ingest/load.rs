use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use super::dataset::{IdMap, InteractionDataset};
use crate::error::{Error, Result};

/// Column layout of an interaction file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// `user item rating [timestamp]`; every rating counts as a positive.
    Triples,
    /// `user item`.
    Pairs,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "triples" | "ratings" => Ok(Self::Triples),
            "pairs" => Ok(Self::Pairs),
            other => Err(Error::Config(format!("unknown dataset format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    /// Detected from the first data line.
    Auto,
    Whitespace,
    Comma,
    Tab,
    /// MovieLens `::` separator.
    DoubleColon,
}

impl FromStr for Delimiter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(Self::Auto),
            "whitespace" | "space" => Ok(Self::Whitespace),
            "comma" | "," => Ok(Self::Comma),
            "tab" | "\\t" => Ok(Self::Tab),
            "doublecolon" | "::" => Ok(Self::DoubleColon),
            other => Err(Error::Config(format!("unknown delimiter `{other}`"))),
        }
    }
}

impl Delimiter {
    fn detect(line: &str) -> Self {
        if line.contains("::") {
            Self::DoubleColon
        } else if line.contains('\t') {
            Self::Tab
        } else if line.contains(',') {
            Self::Comma
        } else {
            Self::Whitespace
        }
    }

    fn split(self, line: &str) -> Vec<&str> {
        match self {
            Self::Auto | Self::Whitespace => line.split_whitespace().collect(),
            Self::Comma => line.split(',').map(str::trim).collect(),
            Self::Tab => line.split('\t').map(str::trim).collect(),
            Self::DoubleColon => line.split("::").map(str::trim).collect(),
        }
    }
}

/// Reads an interaction file into a dense-indexed binary dataset.
pub fn load_interactions(
    path: impl AsRef<Path>,
    format: DatasetFormat,
    delimiter: Delimiter,
) -> Result<InteractionDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_interactions(&text, format, delimiter).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.to_owned(),
            line,
            message,
        },
        other => other,
    })
}

/// Parses interaction text. Blank lines and lines starting with `#` are skipped.
pub fn parse_interactions(text: &str, format: DatasetFormat, delimiter: Delimiter) -> Result<InteractionDataset> {
    let mut users = IdMap::new();
    let mut items = IdMap::new();
    let mut pairs = Vec::new();
    let mut delimiter = delimiter;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if delimiter == Delimiter::Auto {
            delimiter = Delimiter::detect(line);
        }
        let fields = delimiter.split(line);
        let malformed = |message: String| Error::Parse {
            path: Default::default(),
            line: lineno + 1,
            message,
        };
        let expected = match format {
            DatasetFormat::Pairs => 2..=2,
            DatasetFormat::Triples => 3..=4,
        };
        if !expected.contains(&fields.len()) {
            return Err(malformed(format!(
                "expected {} to {} fields, found {}",
                expected.start(),
                expected.end(),
                fields.len()
            )));
        }
        if fields[..2].iter().any(|f| f.is_empty()) {
            return Err(malformed("empty user or item id".into()));
        }
        if format == DatasetFormat::Triples && fields[2].parse::<f64>().is_err() {
            return Err(malformed(format!("rating `{}` is not a number", fields[2])));
        }
        let u = users.intern(fields[0]);
        let i = items.intern(fields[1]);
        pairs.push((u, i));
    }

    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    InteractionDataset::from_pairs(Arc::new(users), Arc::new(items), pairs)
}
