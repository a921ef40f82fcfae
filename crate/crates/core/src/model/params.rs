use crate::error::{Error, Result};
use crate::kernel::{DenseLayer, Matrix};

/// All learnable tensors of a model. Gradients use the same type.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub mf_user: Option<Matrix>,
    pub mf_item: Option<Matrix>,
    pub dnn_user: Option<Matrix>,
    pub dnn_item: Option<Matrix>,
    pub cat_user: Vec<Matrix>,
    pub cat_item: Vec<Matrix>,
    pub layers: Vec<DenseLayer>,
    pub fusion: Vec<f64>,
}

pub struct ParamGroup<'a> {
    pub name: String,
    pub shape: (usize, usize),
    pub values: &'a [f64],
}

pub struct ParamGroupMut<'a> {
    pub name: String,
    pub shape: (usize, usize),
    pub values: &'a mut [f64],
}

impl Params {
    /// Named groups in a fixed order: MF tables, DNN ID tables, categorical
    /// tables, dense layers (weight then bias), fusion vector.
    pub fn groups(&self) -> Vec<ParamGroup<'_>> {
        fn table(name: String, m: &Matrix) -> ParamGroup<'_> {
            ParamGroup {
                name,
                shape: m.shape(),
                values: m.as_slice(),
            }
        }
        let mut out = Vec::new();
        for (name, m) in [
            ("mf_user", &self.mf_user),
            ("mf_item", &self.mf_item),
            ("dnn_user", &self.dnn_user),
            ("dnn_item", &self.dnn_item),
        ] {
            if let Some(m) = m {
                out.push(table(name.to_string(), m));
            }
        }
        for (k, m) in self.cat_user.iter().enumerate() {
            out.push(table(format!("cat_user.{k}"), m));
        }
        for (k, m) in self.cat_item.iter().enumerate() {
            out.push(table(format!("cat_item.{k}"), m));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            out.push(table(format!("layer{l}.weight"), &layer.weights));
            out.push(ParamGroup {
                name: format!("layer{l}.bias"),
                shape: (1, layer.bias.len()),
                values: &layer.bias,
            });
        }
        out.push(ParamGroup {
            name: "fusion".into(),
            shape: (1, self.fusion.len()),
            values: &self.fusion,
        });
        out
    }

    pub fn groups_mut(&mut self) -> Vec<ParamGroupMut<'_>> {
        let mut out = Vec::new();
        let Params {
            mf_user,
            mf_item,
            dnn_user,
            dnn_item,
            cat_user,
            cat_item,
            layers,
            fusion,
        } = self;
        for (name, m) in [
            ("mf_user", mf_user),
            ("mf_item", mf_item),
            ("dnn_user", dnn_user),
            ("dnn_item", dnn_item),
        ] {
            if let Some(m) = m.as_mut() {
                out.push(ParamGroupMut {
                    name: name.to_string(),
                    shape: m.shape(),
                    values: m.as_mut_slice(),
                });
            }
        }
        for (prefix, tables) in [("cat_user", cat_user), ("cat_item", cat_item)] {
            for (k, m) in tables.iter_mut().enumerate() {
                out.push(ParamGroupMut {
                    name: format!("{prefix}.{k}"),
                    shape: m.shape(),
                    values: m.as_mut_slice(),
                });
            }
        }
        for (l, layer) in layers.iter_mut().enumerate() {
            out.push(ParamGroupMut {
                name: format!("layer{l}.weight"),
                shape: layer.weights.shape(),
                values: layer.weights.as_mut_slice(),
            });
            out.push(ParamGroupMut {
                name: format!("layer{l}.bias"),
                shape: (1, layer.bias.len()),
                values: &mut layer.bias,
            });
        }
        out.push(ParamGroupMut {
            name: "fusion".into(),
            shape: (1, fusion.len()),
            values: fusion,
        });
        out
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups().iter().map(|g| g.values.len()).collect()
    }

    pub fn len(&self) -> usize {
        self.groups().iter().map(|g| g.values.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zeros_like(&self) -> Params {
        let mut z = self.clone();
        z.fill_zero();
        z
    }

    pub fn fill_zero(&mut self) {
        for g in self.groups_mut() {
            g.values.fill(0.0);
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for g in self.groups() {
            out.extend_from_slice(g.values);
        }
        out
    }

    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::shape(format!(
                "{} flat values for {} parameters",
                flat.len(),
                self.len()
            )));
        }
        let mut offset = 0;
        for g in self.groups_mut() {
            let n = g.values.len();
            g.values.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Name of the group containing flat index `index`.
    pub fn group_of(&self, index: usize) -> Option<String> {
        let mut offset = 0;
        for g in self.groups() {
            if index < offset + g.values.len() {
                return Some(g.name);
            }
            offset += g.values.len();
        }
        None
    }

    /// Flat offset range of the named group.
    pub fn range_of(&self, name: &str) -> Option<std::ops::Range<usize>> {
        let mut offset = 0;
        for g in self.groups() {
            let n = g.values.len();
            if g.name == name {
                return Some(offset..offset + n);
            }
            offset += n;
        }
        None
    }

    pub fn is_finite(&self) -> bool {
        self.groups().iter().all(|g| g.values.iter().all(|v| v.is_finite()))
    }
}
