//! Binary model checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! offset  size      field
//! 0       8         magic "ILECKPT1"
//! 8       8         n   (u64, users)
//! 16      8         m   (u64, items)
//! 24      8         d   (u64, factors)
//! 32      8         seed (u64)
//! 40      8         epoch (u64, completed epochs)
//! 48      8*n*d     user factors, row-major f64
//! ..      8*m*d     item factors, row-major f64
//! ```

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::FactorModel;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ILECKPT1";
const HEADER_LEN: usize = 48;

impl FactorModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let (n, m, d) = (self.n_users(), self.n_items(), self.dim());
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * d * (n + m));
        out.extend_from_slice(CHECKPOINT_MAGIC);
        for v in [n as u64, m as u64, d as u64, self.seed, self.epoch] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for x in self.user_factors.iter().chain(self.item_factors.iter()) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("missing header".into()));
        }
        let word = |k: usize| u64::from_le_bytes(bytes[8 + 8 * k..16 + 8 * k].try_into().unwrap());
        let (n, m, d) = (word(0) as usize, word(1) as usize, word(2) as usize);
        let expected = n
            .checked_add(m)
            .and_then(|r| r.checked_mul(d))
            .and_then(|c| c.checked_mul(8))
            .and_then(|b| b.checked_add(HEADER_LEN))
            .ok_or_else(|| Error::Checkpoint("dimensions overflow".into()))?;
        if bytes.len() != expected {
            return Err(Error::Checkpoint(format!(
                "expected {expected} bytes for {n}x{m}x{d}, found {}",
                bytes.len()
            )));
        }
        let mut floats = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let user_factors = Array2::from_shape_simple_fn((n, d), || floats.next().unwrap());
        let item_factors = Array2::from_shape_simple_fn((m, d), || floats.next().unwrap());
        Ok(Self {
            user_factors,
            item_factors,
            seed: word(3),
            epoch: word(4),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_model, TrainConfig};

    #[test]
    fn round_trip_is_exact() {
        let mut model = init_model(
            &TrainConfig {
                dim: 3,
                seed: 5,
                ..TrainConfig::default()
            },
            4,
            6,
        )
        .unwrap();
        model.epoch = 17;
        let bytes = model.to_bytes();
        assert_eq!(bytes.len(), 48 + 8 * 3 * 10);
        assert_eq!(&bytes[..8], b"ILECKPT1");
        assert_eq!(u64::from_le_bytes(bytes[40..48].try_into().unwrap()), 17);
        assert_eq!(FactorModel::from_bytes(&bytes).unwrap(), model);
    }

    #[test]
    fn truncated_or_foreign_bytes_rejected() {
        let model = init_model(
            &TrainConfig {
                dim: 2,
                ..TrainConfig::default()
            },
            2,
            2,
        )
        .unwrap();
        let bytes = model.to_bytes();
        assert!(FactorModel::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(FactorModel::from_bytes(b"not a checkpoint at all, definitely not one.....").is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let model = init_model(
            &TrainConfig {
                dim: 2,
                ..TrainConfig::default()
            },
            3,
            2,
        )
        .unwrap();
        model.save(&path).unwrap();
        assert_eq!(FactorModel::load(&path).unwrap(), model);
    }
}
