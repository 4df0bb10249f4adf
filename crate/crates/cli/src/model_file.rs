//! Versioned binary model files.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `STLFMDL\0` |
//! | 2     | format version |
//! | 1     | model tag ([`ModelKind::code`]) |
//! | 4     | payload length |
//! | n     | payload |
//! | 4     | CRC-32 of everything before it |

use std::collections::VecDeque;
use std::path::Path;

use stlf_core::arima::{ArmaFit, ArmaSpec, ArmaState, AvgArimaModel};
use stlf_core::dshw::{DshwModel, DshwParams, DshwState, DshwVariant};
use stlf_core::eval::{FittedModel, ModelKind};
use stlf_core::narxrf::{FeatureRecipe, Forest, LeadForest, NarxRfModel, Node, RegressionTree};

use crate::error::{CliError, Result};

pub const MAGIC: [u8; 8] = *b"STLFMDL\0";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 8 + 2 + 1 + 4;

/// A fitted model plus what is needed to line it up with its series again.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub series_id: String,
    /// First hour of the series the model was fitted on.
    pub start_hour: i64,
    /// Index of the first hour after the training data.
    pub train_end: usize,
    pub seed: u64,
    pub model: FittedModel,
}

pub fn save_model(path: &Path, m: &SavedModel) -> Result<()> {
    std::fs::write(path, encode(m)).map_err(|e| CliError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes)
}

pub fn encode(m: &SavedModel) -> Vec<u8> {
    let mut w = Writer::default();
    w.str(&m.series_id);
    w.i64(m.start_hour);
    w.usize(m.train_end);
    w.u64(m.seed);
    match &m.model {
        FittedModel::Avg => {}
        FittedModel::AvgArima(a) => {
            write_arma(&mut w, &a.fit);
            w.usize(a.synced_to);
        }
        FittedModel::Dshw(d) => write_dshw(&mut w, d),
        FittedModel::NarxRf(n) => write_narx(&mut w, n),
    }
    let payload = w.buf;
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(m.model.kind().code());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&payload);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Checks magic, version, length and checksum before reading any payload field.
pub fn decode(bytes: &[u8]) -> Result<SavedModel> {
    if bytes.len() >= MAGIC.len() && bytes[..MAGIC.len()] != MAGIC {
        return Err(CliError::BadMagic);
    }
    if bytes.len() < HEADER_LEN + 4 {
        return Err(if bytes.len() < MAGIC.len() && !MAGIC.starts_with(bytes) {
            CliError::BadMagic
        } else {
            CliError::Checksum
        });
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != FORMAT_VERSION {
        return Err(CliError::Version {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let tag = bytes[10];
    let len = u32::from_le_bytes(bytes[11..15].try_into().expect("4 bytes")) as usize;
    if bytes.len() != HEADER_LEN + len + 4 {
        return Err(CliError::Checksum);
    }
    let (body, crc) = bytes.split_at(HEADER_LEN + len);
    if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().expect("4 bytes")) {
        return Err(CliError::Checksum);
    }
    let kind = ModelKind::from_code(tag).ok_or_else(|| CliError::Malformed(format!("unknown model tag {tag}")))?;
    let mut r = Reader {
        buf: &body[HEADER_LEN..],
    };
    let series_id = r.str()?;
    let start_hour = r.i64()?;
    let train_end = r.usize()?;
    let seed = r.u64()?;
    let model = match kind {
        ModelKind::Avg => FittedModel::Avg,
        ModelKind::AvgArima => {
            let fit = read_arma(&mut r)?;
            FittedModel::AvgArima(AvgArimaModel::from_fit(fit, r.usize()?))
        }
        ModelKind::OrigDshw | ModelKind::ModDshw => FittedModel::Dshw(read_dshw(&mut r)?),
        ModelKind::NarxRf => FittedModel::NarxRf(Box::new(read_narx(&mut r)?)),
    };
    if model.kind() != kind {
        return Err(CliError::Malformed(format!("tag says {kind}, payload holds {}", model.kind())));
    }
    if !r.buf.is_empty() {
        return Err(CliError::Malformed(format!("{} trailing bytes", r.buf.len())));
    }
    Ok(SavedModel {
        series_id,
        start_hour,
        train_end,
        seed,
        model,
    })
}

fn write_arma(w: &mut Writer, f: &ArmaFit) {
    let s = f.spec;
    w.u8(s.p as u8);
    w.u8(s.d as u8);
    w.u8(s.q as u8);
    w.bool(s.include_mean);
    w.f64s(&f.ar);
    w.f64s(&f.ma);
    w.f64(f.mean);
    w.f64(f.sigma2);
    w.f64(f.css);
    w.usize(f.n_eff);
    w.bool(f.converged);
    let st = &f.state;
    w.bool(st.last_raw.is_some());
    w.f64(st.last_raw.unwrap_or(0.0));
    w.f64s(&st.recent.iter().copied().collect::<Vec<_>>());
    w.f64s(&st.innovations.iter().copied().collect::<Vec<_>>());
    w.usize(st.seen);
}

fn read_arma(r: &mut Reader) -> Result<ArmaFit> {
    let (p, d, q) = (r.u8()?, r.u8()?, r.u8()?);
    let spec = ArmaSpec::new(p.into(), d.into(), q.into(), r.bool()?);
    let ar = r.f64s()?;
    let ma = r.f64s()?;
    let mut fit = ArmaFit::from_parts(spec, ar, ma, r.f64()?, r.f64()?)?;
    fit.css = r.f64()?;
    fit.n_eff = r.usize()?;
    fit.converged = r.bool()?;
    let has_raw = r.bool()?;
    let raw = r.f64()?;
    fit.state = ArmaState {
        last_raw: has_raw.then_some(raw),
        recent: VecDeque::from(r.f64s()?),
        innovations: VecDeque::from(r.f64s()?),
        seen: r.usize()?,
    };
    Ok(fit)
}

fn write_dshw(w: &mut Writer, m: &DshwModel) {
    let p = &m.params;
    w.u8(match p.variant {
        DshwVariant::Original => 0,
        DshwVariant::Modified => 1,
    });
    for v in [p.alpha, p.theta, p.omega, p.phi] {
        w.f64(v);
    }
    let s = &m.state;
    w.f64(s.level);
    w.f64s(&s.daily);
    w.f64s(&s.weekly);
    w.f64(s.last_y);
    w.f64(s.last_fitted);
    w.i64(s.next_hour);
}

fn read_dshw(r: &mut Reader) -> Result<DshwModel> {
    let variant = match r.u8()? {
        0 => DshwVariant::Original,
        1 => DshwVariant::Modified,
        v => return Err(CliError::Malformed(format!("unknown DSHW variant {v}"))),
    };
    let params = DshwParams {
        alpha: r.f64()?,
        theta: r.f64()?,
        omega: r.f64()?,
        phi: r.f64()?,
        variant,
    };
    let state = DshwState {
        level: r.f64()?,
        daily: r.f64s()?,
        weekly: r.f64s()?,
        last_y: r.f64()?,
        last_fitted: r.f64()?,
        next_hour: r.i64()?,
    };
    if state.daily.len() != 24 || state.weekly.len() != 168 {
        return Err(CliError::Malformed("seasonal rings have the wrong length".into()));
    }
    Ok(DshwModel { params, state })
}

fn write_narx(w: &mut Writer, m: &NarxRfModel) {
    w.u32(m.forests.len() as u32);
    for lf in &m.forests {
        w.u8(lf.recipe.lead() as u8);
        let f = &lf.forest;
        w.usize(f.n_features);
        w.u64(f.seed);
        w.usize(f.sample_size);
        w.u32(f.trees.len() as u32);
        for t in &f.trees {
            w.u32(t.nodes().len() as u32);
            for n in t.nodes() {
                w.u32(n.feature);
                w.u32(n.child);
                w.f64(n.value);
            }
        }
    }
}

fn read_narx(r: &mut Reader) -> Result<NarxRfModel> {
    let n = r.u32()?;
    let mut forests = Vec::with_capacity(n.min(64) as usize);
    for _ in 0..n {
        let recipe = FeatureRecipe::new(r.u8()?.into())?;
        let n_features = r.usize()?;
        let seed = r.u64()?;
        let sample_size = r.usize()?;
        let ntree = r.u32()?;
        let mut trees = Vec::with_capacity(ntree.min(4096) as usize);
        for _ in 0..ntree {
            let nn = r.u32()? as usize;
            if nn > r.buf.len() / 16 {
                return Err(CliError::Malformed("node count exceeds payload".into()));
            }
            let nodes = (0..nn)
                .map(|_| {
                    Ok(Node {
                        feature: r.u32()?,
                        child: r.u32()?,
                        value: r.f64()?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let tree = RegressionTree::from_nodes(nodes).ok_or_else(|| CliError::Malformed("bad tree links".into()))?;
            trees.push(tree);
        }
        forests.push(LeadForest {
            recipe,
            forest: Forest {
                trees,
                n_features,
                seed,
                sample_size,
            },
        });
    }
    Ok(NarxRfModel { forests })
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn bool(&mut self, v: bool) {
        self.buf.push(u8::from(v));
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn i64(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        self.u32(v.len() as u32);
        v.iter().for_each(|&x| self.f64(x));
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        if self.buf.len() < N {
            return Err(CliError::Malformed("payload ends early".into()));
        }
        let (head, rest) = self.buf.split_at(N);
        self.buf = rest;
        Ok(head.try_into().expect("length checked"))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }
    fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(CliError::Malformed(format!("invalid flag byte {v}"))),
        }
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| CliError::Malformed("index overflows usize".into()))
    }
    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u32()? as usize;
        if n > self.buf.len() / 8 {
            return Err(CliError::Malformed("array length exceeds payload".into()));
        }
        (0..n).map(|_| self.f64()).collect()
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        if n > self.buf.len() {
            return Err(CliError::Malformed("string length exceeds payload".into()));
        }
        let (s, rest) = self.buf.split_at(n);
        self.buf = rest;
        String::from_utf8(s.to_vec()).map_err(|_| CliError::Malformed("series id is not UTF-8".into()))
    }
}
