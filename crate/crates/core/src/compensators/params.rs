//! Named parameter sets and their binary file format.

use std::collections::BTreeMap;
use std::path::Path;

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::io::Cursor;

pub const PARAMS_MAGIC: &[u8; 8] = b"NRHLCPRM";
pub const PARAMS_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    GainBank,
    TinyNet,
}

impl ModelKind {
    fn code(self) -> u32 {
        match self {
            ModelKind::GainBank => 1,
            ModelKind::TinyNet => 2,
        }
    }

    fn from_code(c: u32) -> Option<Self> {
        match c {
            1 => Some(ModelKind::GainBank),
            2 => Some(ModelKind::TinyNet),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::GainBank => "gainbank",
            ModelKind::TinyNet => "tinynet",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gainbank" => Ok(ModelKind::GainBank),
            "tinynet" => Ok(ModelKind::TinyNet),
            _ => Err(Error::Validation(format!("unknown model kind {s:?}"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const U_NR: &str = "u_nr";
pub const U_HLC: &str = "u_hlc";

/// Parameter tensors of one compensator, ordered by name.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    kind: ModelKind,
    tensors: BTreeMap<String, Tensor>,
}

impl ModelParams {
    /// A parameter set with no tensors; forward passes fail with a state error.
    pub fn uninitialized(kind: ModelKind) -> Self {
        Self {
            kind,
            tensors: BTreeMap::new(),
        }
    }

    pub(crate) fn from_map(kind: ModelKind, tensors: BTreeMap<String, Tensor>) -> Self {
        Self { kind, tensors }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn is_initialized(&self) -> bool {
        !self.tensors.is_empty()
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::State(format!("{} parameter {name:?} is not initialised", self.kind)))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        let kind = self.kind;
        self.tensors
            .get_mut(name)
            .ok_or_else(|| Error::State(format!("{kind} parameter {name:?} is not initialised")))
    }

    pub fn insert(&mut self, name: &str, t: Tensor) {
        self.tensors.insert(name.to_string(), t);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.tensors.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> Vec<String> {
        self.tensors.keys().cloned().collect()
    }

    pub fn num_values(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    /// Add the multi-task uncertainty parameters, initialised to zero.
    pub fn with_uncertainties(mut self) -> Self {
        self.tensors
            .entry(U_NR.into())
            .or_insert_with(|| Tensor::scalar(0.0));
        self.tensors
            .entry(U_HLC.into())
            .or_insert_with(|| Tensor::scalar(0.0));
        self
    }

    /// `(name, shape)` for every tensor.
    pub fn manifest(&self) -> Vec<(String, Vec<usize>)> {
        self.tensors
            .iter()
            .map(|(k, v)| (k.clone(), v.shape().to_vec()))
            .collect()
    }

    /// Put every tensor on `tape`, as trainable leaves or as constants.
    pub fn register<'t>(&self, tape: &'t Tape, trainable: bool) -> ParamVars<'t> {
        let vars = self
            .tensors
            .iter()
            .map(|(k, v)| {
                let var = if trainable {
                    tape.leaf(v.clone())
                } else {
                    tape.constant(v.clone())
                };
                (k.clone(), var)
            })
            .collect();
        ParamVars {
            kind: self.kind,
            vars,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(PARAMS_MAGIC);
        out.extend_from_slice(&PARAMS_VERSION.to_le_bytes());
        out.extend_from_slice(&self.kind.code().to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.ndim() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
        }
        for t in self.tensors.values() {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Self> {
        let mut c = Cursor::new(buf, "parameter file");
        if c.take(8)? != PARAMS_MAGIC {
            return Err(c.err("bad magic"));
        }
        let version = c.u32()?;
        if version != PARAMS_VERSION {
            return Err(c.err(&format!("unsupported version {version}")));
        }
        let code = c.u32()?;
        let kind = ModelKind::from_code(code).ok_or_else(|| c.err(&format!("unknown model kind {code}")))?;
        let count = c.u32()? as usize;
        let mut manifest = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let len = c.u32()? as usize;
            let name = std::str::from_utf8(c.take(len)?)
                .map_err(|_| c.err("parameter name is not UTF-8"))?
                .to_string();
            let rank = c.u32()? as usize;
            if rank > 8 {
                return Err(c.err("rank too large"));
            }
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(usize::try_from(c.u64()?).map_err(|_| c.err("dimension overflow"))?);
            }
            manifest.push((name, shape));
        }
        let mut tensors = BTreeMap::new();
        for (name, shape) in manifest {
            let n = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .ok_or_else(|| c.err("size overflow"))?;
            let data = c.f64s(n)?;
            if data.iter().any(|v| !v.is_finite()) {
                return Err(c.err(&format!("non-finite values in {name}")));
            }
            if tensors.insert(name.clone(), Tensor::new(shape, data)?).is_some() {
                return Err(c.err(&format!("duplicate parameter {name}")));
            }
        }
        c.finish()?;
        Ok(Self { kind, tensors })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    /// Load a parameter file of any kind.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&buf).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Load and check the kind and shape manifest against `reference`.
    pub fn load_matching(path: impl AsRef<Path>, reference: &ModelParams) -> Result<Self> {
        let p = Self::load(path.as_ref())?;
        p.check_compatible(reference)?;
        Ok(p)
    }

    /// Format error unless `self` has the kind and tensor shapes of
    /// `reference` (uncertainty parameters may be present in either).
    pub fn check_compatible(&self, reference: &ModelParams) -> Result<()> {
        if self.kind != reference.kind {
            return Err(Error::Format(format!(
                "parameters are for {}, expected {}",
                self.kind, reference.kind
            )));
        }
        let strip = |m: Vec<(String, Vec<usize>)>| -> Vec<(String, Vec<usize>)> {
            m.into_iter().filter(|(n, _)| n != U_NR && n != U_HLC).collect()
        };
        if strip(self.manifest()) != strip(reference.manifest()) {
            return Err(Error::Format(format!(
                "{} shape manifest does not match the model architecture",
                self.kind
            )));
        }
        Ok(())
    }
}

/// Parameters registered on a tape.
pub struct ParamVars<'t> {
    kind: ModelKind,
    vars: BTreeMap<String, Var<'t>>,
}

impl<'t> ParamVars<'t> {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn get(&self, name: &str) -> Result<Var<'t>> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::State(format!("{} parameter {name:?} is not initialised", self.kind)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Var<'t>)> {
        self.vars.iter().map(|(k, v)| (k.as_str(), *v))
    }
}
