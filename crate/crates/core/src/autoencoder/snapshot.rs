use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::model::{AutoencoderModel, DenseLayer, LayerSpec, Mode};
use super::Activation;
use crate::storage::StorageError;
use crate::Matrix;

const MAGIC: &[u8; 4] = b"LMAE";
const FORMAT_VERSION: u32 = 1;

fn io_err(path: &Path, source: std::io::Error) -> StorageError {
    StorageError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> StorageError {
    StorageError::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn activation_tag(a: Activation) -> u8 {
    match a {
        Activation::Relu => 0,
        Activation::Linear => 1,
    }
}

fn write_layer_header<W: Write>(w: &mut W, spec: LayerSpec) -> std::io::Result<()> {
    w.write_all(&(spec.input_width as u64).to_le_bytes())?;
    w.write_all(&(spec.output_width as u64).to_le_bytes())?;
    w.write_all(&[activation_tag(spec.activation)])
}

fn write_layer_params<W: Write>(w: &mut W, layer: &DenseLayer<f64>) -> std::io::Result<()> {
    for &v in layer.w.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    for &v in &layer.b {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Writes a model snapshot: magic, format version, mode, layer headers
/// (dims and activation per layer, encoder then heads then decoder), then
/// every weight matrix and bias vector as little-endian 64-bit floats in
/// the same order.
pub fn save_model(path: &Path, model: &AutoencoderModel<f64>) -> Result<(), StorageError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let res = (|| {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&[match model.mode() {
            Mode::Plain => 0u8,
            Mode::Variational => 1u8,
        }])?;
        w.write_all(&(model.encoder.len() as u32).to_le_bytes())?;
        w.write_all(&(model.decoder.len() as u32).to_le_bytes())?;
        for layer in &model.encoder {
            write_layer_header(&mut w, layer.spec())?;
        }
        for head in model.mu_head.iter().chain(model.logvar_head.iter()) {
            write_layer_header(&mut w, head.spec())?;
        }
        for layer in &model.decoder {
            write_layer_header(&mut w, layer.spec())?;
        }
        for layer in model
            .encoder
            .iter()
            .chain(model.mu_head.iter())
            .chain(model.logvar_head.iter())
            .chain(model.decoder.iter())
        {
            write_layer_params(&mut w, layer)?;
        }
        w.flush()
    })();
    res.map_err(|e| io_err(path, e))
}

struct SnapshotReader<'a> {
    r: BufReader<File>,
    path: &'a Path,
}

impl<'a> SnapshotReader<'a> {
    fn u8(&mut self) -> Result<u8, StorageError> {
        let mut buf = [0u8; 1];
        self.r
            .read_exact(&mut buf)
            .map_err(|e| io_err(self.path, e))?;
        Ok(buf[0])
    }

    fn u32(&mut self) -> Result<u32, StorageError> {
        let mut buf = [0u8; 4];
        self.r
            .read_exact(&mut buf)
            .map_err(|e| io_err(self.path, e))?;
        Ok(u32::from_le_bytes(buf))
    }

    fn u64(&mut self) -> Result<u64, StorageError> {
        let mut buf = [0u8; 8];
        self.r
            .read_exact(&mut buf)
            .map_err(|e| io_err(self.path, e))?;
        Ok(u64::from_le_bytes(buf))
    }

    fn f64_vec(&mut self, count: usize) -> Result<Vec<f64>, StorageError> {
        let mut out = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            self.r
                .read_exact(&mut buf)
                .map_err(|e| io_err(self.path, e))?;
            out.push(f64::from_le_bytes(buf));
        }
        Ok(out)
    }

    fn layer_header(&mut self) -> Result<LayerSpec, StorageError> {
        let input = self.u64()? as usize;
        let output = self.u64()? as usize;
        let activation = match self.u8()? {
            0 => Activation::Relu,
            1 => Activation::Linear,
            tag => return Err(format_err(self.path, format!("unknown activation tag {tag}"))),
        };
        Ok(LayerSpec::new(input, output, activation))
    }

    fn layer_params(&mut self, spec: LayerSpec) -> Result<DenseLayer<f64>, StorageError> {
        let w = Matrix::from_vec(
            spec.input_width,
            spec.output_width,
            self.f64_vec(spec.input_width * spec.output_width)?,
        );
        let b = self.f64_vec(spec.output_width)?;
        Ok(DenseLayer {
            w,
            b,
            activation: spec.activation,
        })
    }
}

pub fn load_model(path: &Path) -> Result<AutoencoderModel<f64>, StorageError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = SnapshotReader {
        r: BufReader::new(file),
        path,
    };

    let mut magic = [0u8; 4];
    reader
        .r
        .read_exact(&mut magic)
        .map_err(|e| io_err(path, e))?;
    if &magic != MAGIC {
        return Err(format_err(path, "not a model snapshot (bad magic)"));
    }
    let version = reader.u32()?;
    if version != FORMAT_VERSION {
        return Err(format_err(
            path,
            format!("unsupported snapshot version {version}"),
        ));
    }
    let mode = match reader.u8()? {
        0 => Mode::Plain,
        1 => Mode::Variational,
        tag => return Err(format_err(path, format!("unknown mode tag {tag}"))),
    };
    let n_enc = reader.u32()? as usize;
    let n_dec = reader.u32()? as usize;

    let mut enc_specs = Vec::with_capacity(n_enc);
    for _ in 0..n_enc {
        enc_specs.push(reader.layer_header()?);
    }
    let head_specs = if mode == Mode::Variational {
        Some((reader.layer_header()?, reader.layer_header()?))
    } else {
        None
    };
    let mut dec_specs = Vec::with_capacity(n_dec);
    for _ in 0..n_dec {
        dec_specs.push(reader.layer_header()?);
    }

    let mut encoder = Vec::with_capacity(n_enc);
    for &spec in &enc_specs {
        encoder.push(reader.layer_params(spec)?);
    }
    let (mu_head, logvar_head) = match head_specs {
        Some((mu_spec, lv_spec)) => (
            Some(reader.layer_params(mu_spec)?),
            Some(reader.layer_params(lv_spec)?),
        ),
        None => (None, None),
    };
    let mut decoder = Vec::with_capacity(n_dec);
    for &spec in &dec_specs {
        decoder.push(reader.layer_params(spec)?);
    }

    AutoencoderModel::from_parts(encoder, mu_head, logvar_head, decoder, mode)
        .map_err(|e| format_err(path, e.to_string()))
}
