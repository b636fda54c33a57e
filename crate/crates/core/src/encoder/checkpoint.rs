//! Binary checkpoints: magic, a length-prefixed JSON header, then tensors
//! in name order as little-endian f32.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::EncoderConfig;
use super::infer::EditModel;
use super::params::{ParamStore, Tensor};
use super::vocab::Vocab;
use super::EncoderError;

const MAGIC: &[u8; 8] = b"SPDTCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    config: EncoderConfig,
    intents: Vec<String>,
    vocab: Vec<String>,
    tensors: usize,
}

fn corrupt(msg: impl Into<String>) -> EncoderError {
    EncoderError::Checkpoint(msg.into())
}

pub fn write_checkpoint<W: Write>(model: &EditModel, mut w: W) -> Result<(), EncoderError> {
    let header = Header {
        format_version: FORMAT_VERSION,
        config: model.config.clone(),
        intents: model.intents.clone(),
        vocab: model.vocab.tokens().to_vec(),
        tensors: model.params.len(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| corrupt(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    for name in model.params.sorted_names() {
        let t = model.params.get(name).expect("listed name exists");
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.shape.len() as u32).to_le_bytes())?;
        for &d in &t.shape {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for &v in &t.data {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, EncoderError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, EncoderError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<EditModel, EncoderError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(corrupt("not a checkpoint (bad magic)"));
    }
    let len = read_u32(&mut r)? as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| corrupt(format!("header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(corrupt(format!("unsupported format version {}", header.format_version)));
    }
    header.config.validate()?;
    let vocab = Vocab::from_tokens(header.vocab).map_err(corrupt)?;
    if vocab.len() != header.config.vocab_size {
        return Err(corrupt("vocabulary size disagrees with config"));
    }
    if header.intents.len() != header.config.num_intents {
        return Err(corrupt("intent list disagrees with config"));
    }
    let mut params = ParamStore::new();
    for _ in 0..header.tensors {
        let nlen = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; nlen];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| corrupt("tensor name is not utf-8"))?;
        let ndim = read_u32(&mut r)? as usize;
        let shape = (0..ndim)
            .map(|_| read_u64(&mut r).map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let count: usize = shape.iter().product();
        let mut raw = vec![0u8; count * 4];
        r.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect();
        params.insert(name, Tensor { shape, data });
    }
    let model = EditModel {
        config: header.config,
        params,
        vocab,
        intents: header.intents,
    };
    // Fails early on a store that does not match its config.
    let fresh = ParamStore::init(&model.config)?;
    for (name, t) in fresh.iter() {
        match model.params.get(name) {
            Some(have) if have.shape == t.shape => {}
            _ => return Err(corrupt(format!("tensor {name} missing or misshapen"))),
        }
    }
    Ok(model)
}

pub fn save_checkpoint(model: &EditModel, path: &Path) -> Result<(), EncoderError> {
    write_checkpoint(model, BufWriter::new(File::create(path)?))
}

pub fn load_checkpoint(path: &Path) -> Result<EditModel, EncoderError> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

/// Rounds every parameter to f32, matching what a save/load cycle yields.
pub fn round_to_f32(store: &mut ParamStore) {
    for id in 0..store.len() {
        for v in &mut store.tensor_mut(id).data {
            *v = f64::from(*v as f32);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> EditModel {
        let config = EncoderConfig::toy();
        let vocab = Vocab::build(
            "a b c d e f g h i j k l m n o p".split(' '),
            config.vocab_size,
        );
        let config = EncoderConfig {
            vocab_size: vocab.len(),
            ..config
        };
        EditModel {
            params: ParamStore::init(&config).unwrap(),
            config,
            vocab,
            intents: vec!["x".into(), "y".into()],
        }
    }

    #[test]
    fn round_trip_is_f32_exact() {
        let mut m = model();
        let mut buf = Vec::new();
        write_checkpoint(&m, &mut buf).unwrap();
        let back = read_checkpoint(&buf[..]).unwrap();
        round_to_f32(&mut m.params);
        assert_eq!(back, m);
        let mut again = Vec::new();
        write_checkpoint(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_checkpoint(&b"nope"[..]), Err(EncoderError::Io(_))));
        assert!(matches!(
            read_checkpoint(&b"NOTMAGIC\0\0\0\0"[..]),
            Err(EncoderError::Checkpoint(_))
        ));
        let mut buf = Vec::new();
        write_checkpoint(&model(), &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_checkpoint(&buf[..]).is_err());
    }
}
