use super::config::{ArchitectureConfig, FeatureLayout};
use super::params::Params;
use crate::data::{Direction, FeatureSchema, FeatureVector, Side};
use crate::error::{Error, Result};
use crate::kernel::{sigmoid, DenseLayer, Matrix};
use crate::rng::{self, stream};

/// Everything backward needs from one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub user: usize,
    pub item: usize,
    pub user_categorical: Vec<usize>,
    pub item_categorical: Vec<usize>,
    /// `p_u ⊙ q_i`; empty without the MF branch.
    pub psi_mf: Vec<f64>,
    /// `activations[0]` is the DNN input, `activations[l + 1]` the output of
    /// layer `l`. Empty without the DNN branch.
    pub activations: Vec<Vec<f64>>,
    pub logit: f64,
    pub prediction: f64,
}

impl ForwardTrace {
    pub fn psi_dnn(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeepHybridModel {
    config: ArchitectureConfig,
    num_users: usize,
    num_items: usize,
    layout: FeatureLayout,
    schema_fingerprint: String,
    params: Params,
}

impl DeepHybridModel {
    /// Gaussian-initialized model (biases zero). Each parameter group draws
    /// from its own child stream of `seed`.
    pub fn build(
        config: ArchitectureConfig,
        num_users: usize,
        num_items: usize,
        schema: &FeatureSchema,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if num_users == 0 || num_items == 0 {
            return Err(Error::Config("model needs at least one user and one item".into()));
        }
        let layout = FeatureLayout::from_schema(schema);
        let init_seed = rng::derive_seed(seed, stream::INIT);
        let mut group = 0u64;
        let sd = config.init_stddev;
        let mut gaussian = |rows: usize, cols: usize| -> Result<Matrix> {
            group += 1;
            Matrix::gaussian(rows, cols, sd, &mut rng::child(init_seed, group))
        };

        let (mf_user, mf_item) = if config.mf_branch {
            (
                Some(gaussian(num_users, config.mf_dim)?),
                Some(gaussian(num_items, config.mf_dim)?),
            )
        } else {
            (None, None)
        };
        let mut dnn_user = None;
        let mut dnn_item = None;
        let mut cat_user = Vec::new();
        let mut cat_item = Vec::new();
        let mut layers = Vec::new();
        if config.dnn_branch {
            dnn_user = Some(gaussian(num_users, config.dnn_id_dim)?);
            dnn_item = Some(gaussian(num_items, config.dnn_id_dim)?);
            if config.use_aux_features {
                for &rows in &layout.user_categorical {
                    cat_user.push(gaussian(rows, config.cat_embed_dim)?);
                }
                for &rows in &layout.item_categorical {
                    cat_item.push(gaussian(rows, config.cat_embed_dim)?);
                }
            }
            let mut width = Self::input_width(&config, &layout);
            for &out in &config.hidden_layers {
                layers.push(DenseLayer::new(
                    gaussian(width, out)?,
                    vec![0.0; out],
                    config.hidden_activation,
                )?);
                width = out;
            }
        }
        let fusion = gaussian(1, config.fusion_dim())?.into_vec();
        Ok(DeepHybridModel {
            params: Params {
                mf_user,
                mf_item,
                dnn_user,
                dnn_item,
                cat_user,
                cat_item,
                layers,
                fusion,
            },
            config,
            num_users,
            num_items,
            layout,
            schema_fingerprint: schema.fingerprint(),
        })
    }

    /// Reassembles a model from stored parts, validating every shape.
    pub fn from_parts(
        config: ArchitectureConfig,
        num_users: usize,
        num_items: usize,
        layout: FeatureLayout,
        schema_fingerprint: String,
        params: Params,
    ) -> Result<Self> {
        config.validate()?;
        let reference = DeepHybridModel {
            params: Params {
                mf_user: config.mf_branch.then(|| Matrix::zeros(num_users, config.mf_dim)),
                mf_item: config.mf_branch.then(|| Matrix::zeros(num_items, config.mf_dim)),
                dnn_user: config.dnn_branch.then(|| Matrix::zeros(num_users, config.dnn_id_dim)),
                dnn_item: config.dnn_branch.then(|| Matrix::zeros(num_items, config.dnn_id_dim)),
                cat_user: if config.dnn_branch && config.use_aux_features {
                    layout.user_categorical.iter().map(|&r| Matrix::zeros(r, config.cat_embed_dim)).collect()
                } else {
                    Vec::new()
                },
                cat_item: if config.dnn_branch && config.use_aux_features {
                    layout.item_categorical.iter().map(|&r| Matrix::zeros(r, config.cat_embed_dim)).collect()
                } else {
                    Vec::new()
                },
                layers: Vec::new(),
                fusion: vec![0.0; config.fusion_dim()],
            },
            config: config.clone(),
            num_users,
            num_items,
            layout: layout.clone(),
            schema_fingerprint: String::new(),
        };
        let expected_shapes = |p: &Params| -> Vec<(String, (usize, usize))> {
            p.groups()
                .into_iter()
                .filter(|g| !g.name.starts_with("layer"))
                .map(|g| (g.name, g.shape))
                .collect()
        };
        if expected_shapes(&reference.params) != expected_shapes(&params) {
            return Err(Error::shape("stored parameter tables do not match the architecture"));
        }
        if config.dnn_branch {
            let mut width = Self::input_width(&config, &layout);
            if params.layers.len() != config.hidden_layers.len() {
                return Err(Error::shape("stored layer count does not match hidden_layers"));
            }
            for (layer, &out) in params.layers.iter().zip(&config.hidden_layers) {
                if layer.weights.shape() != (width, out) || layer.bias.len() != out {
                    return Err(Error::shape("stored layer shape does not match hidden_layers"));
                }
                width = out;
            }
        } else if !params.layers.is_empty() {
            return Err(Error::shape("dense layers stored for a model without DNN branch"));
        }
        Ok(DeepHybridModel {
            params,
            schema_fingerprint,
            ..reference
        })
    }

    /// Width of the concatenated DNN input.
    pub fn input_width(config: &ArchitectureConfig, layout: &FeatureLayout) -> usize {
        let mut w = 2 * config.dnn_id_dim;
        if config.use_aux_features {
            for side in [Side::User, Side::Item] {
                w += layout.categorical(side).len() * config.cat_embed_dim + layout.continuous(side);
            }
        }
        w
    }

    fn side_width(&self, side: Side) -> usize {
        let mut w = self.config.dnn_id_dim;
        if self.config.use_aux_features {
            w += self.layout.categorical(side).len() * self.config.cat_embed_dim + self.layout.continuous(side);
        }
        w
    }

    pub fn config(&self) -> &ArchitectureConfig {
        &self.config
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn layout(&self) -> &FeatureLayout {
        &self.layout
    }

    pub fn schema_fingerprint(&self) -> &str {
        &self.schema_fingerprint
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn check_features(&self, fv: &FeatureVector, side: Side) -> Result<()> {
        let n = match side {
            Side::User => self.num_users,
            Side::Item => self.num_items,
        };
        if fv.id >= n {
            return Err(Error::Index(format!("{side:?} index {} >= {n}", fv.id)));
        }
        if self.config.use_aux_features {
            let cats = self.layout.categorical(side);
            if fv.categorical.len() != cats.len() || fv.continuous.len() != self.layout.continuous(side) {
                return Err(Error::shape(format!(
                    "{side:?} features have {} categorical / {} continuous values, model expects {} / {}",
                    fv.categorical.len(),
                    fv.continuous.len(),
                    cats.len(),
                    self.layout.continuous(side)
                )));
            }
            for (k, (&idx, &rows)) in fv.categorical.iter().zip(cats).enumerate() {
                if idx >= rows {
                    return Err(Error::Index(format!(
                        "{side:?} categorical field {k}: value index {idx} >= {rows}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn push_side(&self, side: Side, fv: &FeatureVector, out: &mut Vec<f64>) {
        let (ids, cats) = match side {
            Side::User => (&self.params.dnn_user, &self.params.cat_user),
            Side::Item => (&self.params.dnn_item, &self.params.cat_item),
        };
        out.extend_from_slice(ids.as_ref().expect("dnn branch").row(fv.id));
        if self.config.use_aux_features {
            for (table, &idx) in cats.iter().zip(&fv.categorical) {
                out.extend_from_slice(table.row(idx));
            }
            out.extend_from_slice(&fv.continuous);
        }
    }

    /// Concatenated DNN input: user ID embedding, user categorical embeddings,
    /// user continuous values, then the same for the item. Feature segments
    /// are omitted when auxiliary features are off.
    pub fn assemble_dnn_input(&self, user: &FeatureVector, item: &FeatureVector) -> Result<Vec<f64>> {
        if !self.config.dnn_branch {
            return Err(Error::Config("model has no DNN branch".into()));
        }
        self.check_features(user, Side::User)?;
        self.check_features(item, Side::Item)?;
        let mut x = Vec::with_capacity(Self::input_width(&self.config, &self.layout));
        self.push_side(Side::User, user, &mut x);
        self.push_side(Side::Item, item, &mut x);
        Ok(x)
    }

    pub fn forward(&self, user: &FeatureVector, item: &FeatureVector) -> Result<ForwardTrace> {
        self.check_features(user, Side::User)?;
        self.check_features(item, Side::Item)?;
        let mut logit = 0.0;
        let mut h = self.params.fusion.iter();

        let psi_mf = match (&self.params.mf_user, &self.params.mf_item) {
            (Some(p), Some(q)) => {
                let psi: Vec<f64> = p.row(user.id).iter().zip(q.row(item.id)).map(|(a, b)| a * b).collect();
                for (v, w) in psi.iter().zip(h.by_ref()) {
                    logit += w * v;
                }
                psi
            }
            _ => Vec::new(),
        };

        let mut activations = Vec::new();
        if self.config.dnn_branch {
            let mut x = Vec::with_capacity(Self::input_width(&self.config, &self.layout));
            self.push_side(Side::User, user, &mut x);
            self.push_side(Side::Item, item, &mut x);
            activations.reserve(self.params.layers.len() + 1);
            activations.push(x);
            for layer in &self.params.layers {
                let next = layer.forward(activations.last().expect("input pushed"))?;
                activations.push(next);
            }
            for (v, w) in activations.last().expect("non-empty").iter().zip(h.by_ref()) {
                logit += w * v;
            }
        }

        Ok(ForwardTrace {
            user: user.id,
            item: item.id,
            user_categorical: if self.config.use_aux_features { user.categorical.clone() } else { Vec::new() },
            item_categorical: if self.config.use_aux_features { item.categorical.clone() } else { Vec::new() },
            psi_mf,
            activations,
            logit,
            prediction: sigmoid(logit),
        })
    }

    fn check_trace(&self, trace: &ForwardTrace) -> Result<()> {
        let mf_ok = trace.psi_mf.len() == if self.config.mf_branch { self.config.mf_dim } else { 0 };
        let dnn_ok = if self.config.dnn_branch {
            trace.activations.len() == self.params.layers.len() + 1
                && trace.activations[0].len() == Self::input_width(&self.config, &self.layout)
                && trace
                    .activations
                    .iter()
                    .skip(1)
                    .zip(&self.params.layers)
                    .all(|(a, l)| a.len() == l.out_dim())
        } else {
            trace.activations.is_empty()
        };
        if !mf_ok || !dnn_ok || trace.user >= self.num_users || trace.item >= self.num_items {
            return Err(Error::shape("forward trace does not match this model"));
        }
        Ok(())
    }

    /// Adds the gradient of a loss with `d loss / d logit = dlogit` into `grads`.
    pub fn accumulate_gradients(&self, trace: &ForwardTrace, dlogit: f64, grads: &mut Params) -> Result<()> {
        self.check_trace(trace)?;
        if dlogit == 0.0 {
            return Ok(());
        }
        let mf_len = trace.psi_mf.len();
        let h = &self.params.fusion;
        for (g, v) in grads.fusion.iter_mut().zip(trace.psi_mf.iter().chain(trace.psi_dnn())) {
            *g += dlogit * v;
        }

        if let (Some(p), Some(q)) = (&self.params.mf_user, &self.params.mf_item) {
            let (pu, qi) = (p.row(trace.user), q.row(trace.item));
            let gp = grads.mf_user.as_mut().expect("mirrors model").row_mut(trace.user);
            for k in 0..mf_len {
                gp[k] += dlogit * h[k] * qi[k];
            }
            let gq = grads.mf_item.as_mut().expect("mirrors model").row_mut(trace.item);
            for k in 0..mf_len {
                gq[k] += dlogit * h[k] * pu[k];
            }
        }

        if self.config.dnn_branch {
            let mut upstream: Vec<f64> = h[mf_len..].iter().map(|w| dlogit * w).collect();
            for (l, layer) in self.params.layers.iter().enumerate().rev() {
                upstream = layer.backward_accumulate(
                    &trace.activations[l],
                    &trace.activations[l + 1],
                    &upstream,
                    &mut grads.layers[l],
                )?;
            }
            let c = self.config.cat_embed_dim;
            let mut offset = 0;
            for side in [Side::User, Side::Item] {
                let (ids, cats, idx, cat_idx) = match side {
                    Side::User => (&mut grads.dnn_user, &mut grads.cat_user, trace.user, &trace.user_categorical),
                    Side::Item => (&mut grads.dnn_item, &mut grads.cat_item, trace.item, &trace.item_categorical),
                };
                let d = self.config.dnn_id_dim;
                for (g, u) in ids.as_mut().expect("mirrors model").row_mut(idx).iter_mut().zip(&upstream[offset..offset + d]) {
                    *g += u;
                }
                offset += d;
                if self.config.use_aux_features {
                    for (table, &v) in cats.iter_mut().zip(cat_idx) {
                        for (g, u) in table.row_mut(v).iter_mut().zip(&upstream[offset..offset + c]) {
                            *g += u;
                        }
                        offset += c;
                    }
                    offset += self.layout.continuous(side);
                }
            }
            debug_assert_eq!(offset, upstream.len());
        }
        Ok(())
    }

    /// Gradient of a loss with `d loss / d logit = dlogit`, mirroring all parameters.
    pub fn backward(&self, trace: &ForwardTrace, dlogit: f64) -> Result<Params> {
        let mut grads = self.params.zeros_like();
        self.accumulate_gradients(trace, dlogit, &mut grads)?;
        Ok(grads)
    }

    pub fn predict(&self, user: &FeatureVector, item: &FeatureVector) -> Result<f64> {
        Ok(self.forward(user, item)?.prediction)
    }

    /// Scores every candidate against the query, preserving order. For
    /// [`Direction::Item`] the query is a user and candidates are items.
    pub fn predict_batch(
        &self,
        direction: Direction,
        query: &FeatureVector,
        candidates: &[&FeatureVector],
    ) -> Result<Vec<f64>> {
        if candidates.is_empty() {
            return Err(Error::invalid("predict_batch needs at least one candidate"));
        }
        candidates
            .iter()
            .map(|c| match direction {
                Direction::Item => self.predict(query, c),
                Direction::User => self.predict(c, query),
            })
            .collect()
    }

    /// The same scoring function with users and items swapped:
    /// `t.predict(i, u) == self.predict(u, i)` up to summation order.
    pub fn transpose(&self) -> Result<Self> {
        let p = &self.params;
        let mut layers = p.layers.clone();
        if let Some(first) = layers.first_mut() {
            let wu = self.side_width(Side::User);
            let wi = self.side_width(Side::Item);
            let order: Vec<usize> = (wu..wu + wi).chain(0..wu).collect();
            first.weights = first.weights.permute_rows(&order)?;
        }
        Ok(DeepHybridModel {
            config: self.config.clone(),
            num_users: self.num_items,
            num_items: self.num_users,
            layout: self.layout.transpose(),
            schema_fingerprint: self.schema_fingerprint.clone(),
            params: Params {
                mf_user: p.mf_item.clone(),
                mf_item: p.mf_user.clone(),
                dnn_user: p.dnn_item.clone(),
                dnn_item: p.dnn_user.clone(),
                cat_user: p.cat_item.clone(),
                cat_item: p.cat_user.clone(),
                layers,
                fusion: p.fusion.clone(),
            },
        })
    }
}
