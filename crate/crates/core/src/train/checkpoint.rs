//! `.dhm` checkpoint files.
//!
//! Layout:
//!
//! ```text
//! DEEPHYBRID-CHECKPOINT <version>\n
//! <manifest JSON on one line>\n
//! block <name> <rows> <cols>\n<rows*cols little-endian f64>   (repeated, manifest order)
//! END\n
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Direction, FeatureSchema};
use crate::error::{Error, Result};
use crate::kernel::{DenseLayer, Matrix};
use crate::model::{ArchitectureConfig, DeepHybridModel, FeatureLayout, Params};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "DEEPHYBRID-CHECKPOINT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub architecture: ArchitectureConfig,
    pub num_users: usize,
    pub num_items: usize,
    pub schema_fingerprint: String,
    pub layout: FeatureLayout,
    /// Direction whose leave-one-out positives were withheld from training.
    #[serde(default)]
    pub holdout: Option<Direction>,
    #[serde(default)]
    pub user_ids: Vec<String>,
    #[serde(default)]
    pub item_ids: Vec<String>,
    pub blocks: Vec<BlockInfo>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub manifest: CheckpointManifest,
    pub model: DeepHybridModel,
}

impl Checkpoint {
    pub fn new(model: DeepHybridModel) -> Self {
        let blocks = model
            .params()
            .groups()
            .into_iter()
            .map(|g| BlockInfo {
                name: g.name,
                rows: g.shape.0,
                cols: g.shape.1,
            })
            .collect();
        let manifest = CheckpointManifest {
            format_version: FORMAT_VERSION,
            architecture: model.config().clone(),
            num_users: model.num_users(),
            num_items: model.num_items(),
            schema_fingerprint: model.schema_fingerprint().to_owned(),
            layout: model.layout().clone(),
            holdout: None,
            user_ids: Vec::new(),
            item_ids: Vec::new(),
            blocks,
        };
        Checkpoint { manifest, model }
    }

    pub fn with_holdout(mut self, holdout: Option<Direction>) -> Self {
        self.manifest.holdout = holdout;
        self
    }

    /// Records the external ids of the index spaces.
    pub fn with_ids(mut self, user_ids: &[String], item_ids: &[String]) -> Result<Self> {
        if user_ids.len() != self.model.num_users() || item_ids.len() != self.model.num_items() {
            return Err(Error::shape("id lists do not match the model's index spaces"));
        }
        self.manifest.user_ids = user_ids.to_vec();
        self.manifest.item_ids = item_ids.to_vec();
        Ok(self)
    }

    /// Errors unless the model was built against `schema`.
    pub fn expect_schema(&self, schema: &FeatureSchema) -> Result<()> {
        let fp = schema.fingerprint();
        if fp != self.manifest.schema_fingerprint {
            return Err(Error::Checkpoint(format!(
                "schema fingerprint {fp} does not match checkpoint fingerprint {}",
                self.manifest.schema_fingerprint
            )));
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MAGIC} {FORMAT_VERSION}")?;
        writeln!(w, "{}", serde_json::to_string(&self.manifest)?)?;
        for g in self.model.params().groups() {
            writeln!(w, "block {} {} {}", g.name, g.shape.0, g.shape.1)?;
            let mut bytes = Vec::with_capacity(g.values.len() * 8);
            for v in g.values {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&bytes)?;
        }
        writeln!(w, "END")?;
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(Error::file(path))?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn read_from<R: Read>(reader: R) -> Result<Self> {
        let mut r = BufReader::new(reader);
        let header = read_line(&mut r, "header")?;
        let version = header
            .strip_prefix(MAGIC)
            .and_then(|rest| rest.trim().parse::<u32>().ok())
            .ok_or_else(|| Error::Format("not a deephybrid checkpoint (bad magic header)".into()))?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "checkpoint format version {version}, this build reads {FORMAT_VERSION}"
            )));
        }
        let manifest: CheckpointManifest = serde_json::from_str(&read_line(&mut r, "manifest")?)
            .map_err(|e| Error::Format(format!("manifest: {e}")))?;
        if manifest.format_version != version {
            return Err(Error::Format("manifest version disagrees with header".into()));
        }

        let mut blocks = Vec::with_capacity(manifest.blocks.len());
        for info in &manifest.blocks {
            let line = read_line(&mut r, "block header")?;
            let expected = format!("block {} {} {}", info.name, info.rows, info.cols);
            if line != expected {
                return Err(Error::Format(format!("expected {expected:?}, found {line:?}")));
            }
            let n = info.rows.checked_mul(info.cols).ok_or_else(|| Error::Format("block too large".into()))?;
            let mut bytes = vec![0u8; n * 8];
            r.read_exact(&mut bytes)
                .map_err(|_| Error::Format(format!("truncated data in block {}", info.name)))?;
            let values = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            blocks.push((info.name.clone(), Matrix::from_vec(info.rows, info.cols, values)?));
        }
        if read_line(&mut r, "trailer")? != "END" {
            return Err(Error::Format("missing END trailer".into()));
        }

        let params = assemble_params(&manifest.architecture, blocks)?;
        let model = DeepHybridModel::from_parts(
            manifest.architecture.clone(),
            manifest.num_users,
            manifest.num_items,
            manifest.layout.clone(),
            manifest.schema_fingerprint.clone(),
            params,
        )
        .map_err(|e| Error::Format(e.to_string()))?;
        Ok(Checkpoint { manifest, model })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(Error::file(path))?;
        Self::read_from(file)
    }
}

fn read_line<R: BufRead>(r: &mut R, what: &str) -> Result<String> {
    let mut line = Vec::new();
    let n = r.read_until(b'\n', &mut line)?;
    if n == 0 || line.last() != Some(&b'\n') {
        return Err(Error::Format(format!("truncated checkpoint: missing {what}")));
    }
    line.pop();
    String::from_utf8(line).map_err(|_| Error::Format(format!("{what} is not UTF-8")))
}

fn assemble_params(config: &ArchitectureConfig, blocks: Vec<(String, Matrix)>) -> Result<Params> {
    let mut p = Params {
        mf_user: None,
        mf_item: None,
        dnn_user: None,
        dnn_item: None,
        cat_user: Vec::new(),
        cat_item: Vec::new(),
        layers: Vec::new(),
        fusion: Vec::new(),
    };
    let mut pending_weight: Option<Matrix> = None;
    for (name, m) in blocks {
        match name.as_str() {
            "mf_user" => p.mf_user = Some(m),
            "mf_item" => p.mf_item = Some(m),
            "dnn_user" => p.dnn_user = Some(m),
            "dnn_item" => p.dnn_item = Some(m),
            "fusion" => p.fusion = m.into_vec(),
            n if n.starts_with("cat_user.") => p.cat_user.push(m),
            n if n.starts_with("cat_item.") => p.cat_item.push(m),
            n if n.ends_with(".weight") => pending_weight = Some(m),
            n if n.ends_with(".bias") => {
                let w = pending_weight
                    .take()
                    .ok_or_else(|| Error::Format(format!("{n} without preceding weight block")))?;
                p.layers.push(
                    DenseLayer::new(w, m.into_vec(), config.hidden_activation)
                        .map_err(|e| Error::Format(e.to_string()))?,
                );
            }
            other => return Err(Error::Format(format!("unknown block {other:?}"))),
        }
    }
    Ok(p)
}

pub fn save_checkpoint(model: &DeepHybridModel, path: impl AsRef<Path>) -> Result<()> {
    Checkpoint::new(model.clone()).save(path)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<DeepHybridModel> {
    Ok(Checkpoint::load(path)?.model)
}
