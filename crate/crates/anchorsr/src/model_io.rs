//! Binary serialization for trained models and pooled training data.
//! Little-endian throughout; floating-point payloads are stored as raw IEEE
//! bits, so a save/load round trip is bit exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::color::LumaConvention;
use crate::dictionary::AnchorDictionary;
use crate::error::{Error, Result};
use crate::features::FeatureEncoder;
use crate::image::Scale;
use crate::patches::TrainingSet;
use crate::pipeline::{SRModel, SRStage, StageRegressors};
use crate::regression::{ContextModel, RegressorBank};

const MODEL_MAGIC: &[u8; 4] = b"ASRM";
const MODEL_VERSION: u32 = 1;
const POOL_MAGIC: &[u8; 4] = b"ASRC";
const POOL_VERSION: u32 = 1;

struct Writer<W: Write> {
    w: W,
}

impl<W: Write> Writer<W> {
    fn bytes(&mut self, b: &[u8]) -> std::io::Result<()> {
        self.w.write_all(b)
    }

    fn u8(&mut self, v: u8) -> std::io::Result<()> {
        self.bytes(&[v])
    }

    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn f64_slice(&mut self, vs: &[f64]) -> std::io::Result<()> {
        for &v in vs {
            self.f64(v)?;
        }
        Ok(())
    }

    fn f32_slice(&mut self, vs: &[f32]) -> std::io::Result<()> {
        for &v in vs {
            self.bytes(&v.to_le_bytes())?;
        }
        Ok(())
    }

    fn matrix(&mut self, m: &DMatrix<f64>) -> std::io::Result<()> {
        self.u32(m.nrows() as u32)?;
        self.u32(m.ncols() as u32)?;
        self.f64_slice(m.as_slice())
    }
}

struct Reader<R: Read> {
    r: R,
}

impl<R: Read> Reader<R> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.r
            .read_exact(&mut buf)
            .map_err(|_| Error::ModelFormat("file truncated".into()))?;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(8)?.try_into().expect("8 bytes")))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.bytes(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn f32_vec(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.bytes(n * 4)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }

    fn matrix(&mut self) -> Result<DMatrix<f64>> {
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        if rows == 0 || cols == 0 || rows.saturating_mul(cols) > 1 << 31 {
            return Err(Error::ModelFormat(format!("implausible matrix shape {rows}x{cols}")));
        }
        Ok(DMatrix::from_column_slice(rows, cols, &self.f64_vec(rows * cols)?))
    }
}

fn luma_code(l: LumaConvention) -> u8 {
    match l {
        LumaConvention::Bt601Studio => 0,
        LumaConvention::Bt601Full => 1,
    }
}

fn luma_from_code(c: u8) -> Result<LumaConvention> {
    match c {
        0 => Ok(LumaConvention::Bt601Studio),
        1 => Ok(LumaConvention::Bt601Full),
        other => Err(Error::ModelFormat(format!("unknown luma code {other}"))),
    }
}

fn write_bank<W: Write>(w: &mut Writer<W>, bank: &RegressorBank) -> std::io::Result<()> {
    w.matrix(bank.dict().atoms())?;
    w.f64(bank.lambda())?;
    w.u32(bank.flagged_anchors() as u32)?;
    w.u32(bank.target_dim() as u32)?;
    for p in bank.projections() {
        w.f64_slice(p.as_slice())?;
    }
    Ok(())
}

fn read_bank<R: Read>(r: &mut Reader<R>) -> Result<RegressorBank> {
    let atoms = r.matrix()?;
    let (dim, count) = (atoms.nrows(), atoms.ncols());
    let dict = AnchorDictionary::from_atoms(atoms)?;
    let lambda = r.f64()?;
    let flagged = r.u32()? as usize;
    let target_dim = r.u32()? as usize;
    let mut projections = Vec::with_capacity(count);
    for _ in 0..count {
        let data = r.f64_vec(target_dim * dim)?;
        projections.push(DMatrix::from_column_slice(target_dim, dim, &data));
    }
    RegressorBank::from_parts(dict, projections, lambda, flagged)
}

fn write_stage<W: Write>(w: &mut Writer<W>, stage: &SRStage) -> std::io::Result<()> {
    w.u32(stage.scale.get())?;
    w.u32(stage.window as u32)?;
    w.matrix(stage.encoder.basis())?;
    w.f64(stage.encoder.captured_energy())?;
    match &stage.regressors {
        StageRegressors::Plain(bank) => {
            w.u8(0)?;
            write_bank(w, bank)?;
        }
        StageRegressors::Context(model) => {
            w.u8(1)?;
            w.matrix(&model.centroids)?;
            w.u32(model.banks.len() as u32)?;
            for bank in &model.banks {
                write_bank(w, bank)?;
            }
        }
    }
    Ok(())
}

fn read_stage<R: Read>(r: &mut Reader<R>) -> Result<SRStage> {
    let scale = Scale::new(r.u32()?)?;
    let window = r.u32()? as usize;
    if window == 0 || window > 1 << 12 {
        return Err(Error::ModelFormat(format!("implausible window side {window}")));
    }
    let basis = r.matrix()?;
    let energy = r.f64()?;
    let encoder = FeatureEncoder::from_parts(basis, energy);
    let regressors = match r.u8()? {
        0 => StageRegressors::Plain(read_bank(r)?),
        1 => {
            let centroids = r.matrix()?;
            let n = r.u32()? as usize;
            let mut banks = Vec::with_capacity(n);
            for _ in 0..n {
                banks.push(read_bank(r)?);
            }
            if banks.is_empty() || centroids.ncols() != banks.len() {
                return Err(Error::ModelFormat("context cells and banks disagree".into()));
            }
            StageRegressors::Context(ContextModel { centroids, banks })
        }
        other => return Err(Error::ModelFormat(format!("unknown regressor kind {other}"))),
    };
    Ok(SRStage { scale, window, encoder, regressors })
}

/// Write a model file.
pub fn save_model(model: &SRModel, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = Writer { w: BufWriter::new(file) };
    let res: std::io::Result<()> = (|| {
        w.bytes(MODEL_MAGIC)?;
        w.u32(MODEL_VERSION)?;
        w.u8(luma_code(model.luma))?;
        w.u32(model.stages.len() as u32)?;
        for stage in &model.stages {
            write_stage(&mut w, stage)?;
        }
        w.w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Read a model file, validating magic, version, and structural invariants.
pub fn load_model(path: &Path) -> Result<SRModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader { r: BufReader::new(file) };
    if r.bytes(4)? != MODEL_MAGIC {
        return Err(Error::ModelFormat("not a model file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported model version {version} (expected {MODEL_VERSION})"
        )));
    }
    let luma = luma_from_code(r.u8()?)?;
    let n = r.u32()? as usize;
    if n == 0 || n > 64 {
        return Err(Error::ModelFormat(format!("implausible stage count {n}")));
    }
    let mut stages = Vec::with_capacity(n);
    for _ in 0..n {
        stages.push(read_stage(&mut r)?);
    }
    SRModel::new(luma, stages)
}

/// Write a pooled training set (the training cache).
pub fn save_pool(pool: &TrainingSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = Writer { w: BufWriter::new(file) };
    let res: std::io::Result<()> = (|| {
        w.bytes(POOL_MAGIC)?;
        w.u32(POOL_VERSION)?;
        w.u32(pool.dim as u32)?;
        w.u32(pool.target_dim as u32)?;
        w.u8(pool.context.is_some() as u8)?;
        w.u64(pool.len() as u64)?;
        w.f32_slice(&pool.features)?;
        w.f32_slice(&pool.targets)?;
        if let Some(ctx) = &pool.context {
            w.f32_slice(ctx)?;
        }
        w.w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Read a pooled training set.
pub fn load_pool(path: &Path) -> Result<TrainingSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader { r: BufReader::new(file) };
    if r.bytes(4)? != POOL_MAGIC {
        return Err(Error::ModelFormat("not a training cache (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != POOL_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported cache version {version} (expected {POOL_VERSION})"
        )));
    }
    let dim = r.u32()? as usize;
    let target_dim = r.u32()? as usize;
    let has_ctx = r.u8()? != 0;
    let n = r.u64()? as usize;
    if dim == 0 || target_dim == 0 || n.saturating_mul(dim.max(target_dim)) > 1 << 33 {
        return Err(Error::ModelFormat("implausible cache dimensions".into()));
    }
    let features = r.f32_vec(n * dim)?;
    let targets = r.f32_vec(n * target_dim)?;
    let context = if has_ctx { Some(r.f32_vec(n * dim)?) } else { None };
    Ok(TrainingSet { dim, target_dim, features, targets, context })
}

/// Hex SHA-256 of a file, used to fingerprint models in benchmark records.
pub fn file_digest(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}
