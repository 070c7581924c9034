//! Model checkpoints: a JSON header (format version, scorer kind, training
//! mode, dimensions, vocabulary, tensor manifest) followed by the tensor
//! payload as little-endian f32, in manifest order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::math::Real;
use super::{ModelMeta, ScoreModel, TrainMode};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"XPCHKPT1";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    meta: ModelMeta,
    mode: TrainMode,
    n_words: usize,
    n_pos: usize,
    vocab: Vocabulary,
    tensors: Vec<TensorEntry>,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
}

/// A trained model together with everything needed to parse with it.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: ScoreModel<f32>,
    pub vocab: Vocabulary,
    pub mode: TrainMode,
    pub seed: u64,
}

pub fn save_checkpoint<F: Real>(
    path: &Path,
    model: &ScoreModel<F>,
    vocab: &Vocabulary,
    mode: TrainMode,
    seed: u64,
) -> Result<()> {
    let header = Header {
        version: FORMAT_VERSION,
        meta: model.meta().clone(),
        mode,
        n_words: model.n_words(),
        n_pos: model.n_pos(),
        vocab: vocab.clone(),
        tensors: model
            .layout()
            .tensors()
            .iter()
            .map(|t| TensorEntry { name: t.name.clone(), rows: t.rows, cols: t.cols })
            .collect(),
        seed,
    };
    let header_bytes = serde_json::to_vec(&header)
        .map_err(|e| Error::Checkpoint(format!("header serialization failed: {e}")))?;

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for v in model.data() {
        w.write_all(&(v.into_f64() as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Checkpoint("file too short for a checkpoint".into()))?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic; not a model checkpoint".into()));
    }
    let mut len_bytes = [0u8; 4];
    r.read_exact(&mut len_bytes)?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)
        .map_err(|_| Error::Checkpoint("truncated header".into()))?;
    let header: Header = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::Checkpoint(format!("corrupt header: {e}")))?;
    if header.version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported format version {}", header.version)));
    }

    let mut model = ScoreModel::<f32>::zeros(header.meta.clone(), header.n_words, header.n_pos);
    // the manifest must match the layout this build derives from the header
    let expected: Vec<TensorEntry> = model
        .layout()
        .tensors()
        .iter()
        .map(|t| TensorEntry { name: t.name.clone(), rows: t.rows, cols: t.cols })
        .collect();
    if expected.len() != header.tensors.len()
        || expected.iter().zip(&header.tensors).any(|(a, b)| {
            a.name != b.name || a.rows != b.rows || a.cols != b.cols
        })
    {
        return Err(Error::Checkpoint("tensor manifest does not match model layout".into()));
    }

    let total = model.layout().total();
    let mut payload = vec![0u8; total * 4];
    r.read_exact(&mut payload)
        .map_err(|_| Error::Checkpoint("truncated tensor payload".into()))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after tensor payload".into()));
    }
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        model.data_mut()[i] = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
    }
    model.check_finite()?;

    let mut vocab = header.vocab;
    vocab.rebuild_indices();
    vocab.validate()?;
    Ok(Checkpoint { model, vocab, mode: header.mode, seed: header.seed })
}
