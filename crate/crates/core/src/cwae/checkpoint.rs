//! Binary checkpoints and CSV export of training curves.
//!
//! Checkpoint layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes  "CWAECKPT"
//! version      u32      1
//! config_len   u32      byte length of the config text
//! config       utf-8    TrainConfig::to_text()
//! hidden_act   u8
//! output_act   u8
//! num_layers   u32
//! enc_layers   u32
//! shapes       num_layers × (u32 inputs, u32 outputs)
//! num_params   u64
//! params       num_params × f64, layer by layer, weights row-major then bias
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::cwae::mlp::{Activation, MlpParams};
use crate::cwae::train::{TrainConfig, TrainRecord};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CWAECKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

pub const RECORDS_CSV_HEADER: &str =
    "epoch,rec_error,cw_pre_log,cw_post_log,skewness,kurtosis,normalized_kurtosis";

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    params: &MlpParams,
    config: &TrainConfig,
) -> Result<()> {
    let path = path.as_ref();
    let text = config.to_text();
    let mut buf = Vec::with_capacity(64 + text.len() + 8 * params.num_params());
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(text.len() as u32).to_le_bytes());
    buf.extend_from_slice(text.as_bytes());
    buf.push(params.hidden_activation.code());
    buf.push(params.output_activation.code());
    buf.extend_from_slice(&(params.layers().len() as u32).to_le_bytes());
    buf.extend_from_slice(&(params.encoder_layers() as u32).to_le_bytes());
    for l in params.layers() {
        buf.extend_from_slice(&(l.inputs as u32).to_le_bytes());
        buf.extend_from_slice(&(l.outputs as u32).to_le_bytes());
    }
    buf.extend_from_slice(&(params.num_params() as u64).to_le_bytes());
    for v in params.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format(self.path, format!("truncated {what}")))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(MlpParams, TrainConfig)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut c = Cursor {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if c.take(8, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::format(path, "not a checkpoint file"));
    }
    let version = c.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let len = c.u32("config length")? as usize;
    let text = std::str::from_utf8(c.take(len, "config")?)
        .map_err(|_| Error::format(path, "config text is not utf-8"))?;
    let config = TrainConfig::from_text(text).map_err(|e| Error::format(path, e.to_string()))?;
    let act = |code: u8| {
        Activation::from_code(code)
            .ok_or_else(|| Error::format(path, format!("unknown activation code {code}")))
    };
    let hidden = act(c.u8("activation")?)?;
    let output = act(c.u8("activation")?)?;
    let num_layers = c.u32("layer count")? as usize;
    let enc_layers = c.u32("encoder layer count")? as usize;
    let mut shapes = Vec::with_capacity(num_layers.min(1024));
    for _ in 0..num_layers {
        let inputs = c.u32("layer shape")? as usize;
        let outputs = c.u32("layer shape")? as usize;
        shapes.push((inputs, outputs));
    }
    let num_params = c.u64("parameter count")? as usize;
    let raw = c.take(num_params.saturating_mul(8), "parameters")?;
    let values = raw
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    if c.pos != bytes.len() {
        return Err(Error::format(path, "trailing bytes after parameters"));
    }
    let params = MlpParams::from_parts(&shapes, enc_layers, values, hidden, output)
        .map_err(|e| Error::format(path, e.to_string()))?;
    Ok((params, config))
}

/// Writes one CSV row per record under [`RECORDS_CSV_HEADER`].
pub fn write_records_csv(path: impl AsRef<Path>, records: &[TrainRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = String::new();
    body.push_str(RECORDS_CSV_HEADER);
    body.push('\n');
    for r in records {
        body.push_str(&format!(
            "{},{:?},{:?},{:?},{:?},{:?},{:?}\n",
            r.epoch,
            r.reconstruction_error,
            r.cw_pre_log,
            r.cw_post_log,
            r.mardia.skewness,
            r.mardia.kurtosis,
            r.mardia.normalized_kurtosis
        ));
    }
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
