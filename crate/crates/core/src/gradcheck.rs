//! Self-check of the hand-derived gradients against central finite
//! differences on a tiny fixture (5 users, 5 items, one categorical and one
//! continuous field per side).

use std::fmt;

use serde::Serialize;

use crate::data::{
    fit_schema, EntityFeatures, FeatureSchema, FeatureTable, FieldDecl, FieldKind, InteractionDataset,
    SchemaDeclaration,
};
use crate::error::{Error, Result};
use crate::kernel::finite_difference_check;
use crate::model::{Architecture, ArchitectureConfig, DeepHybridModel};
use crate::train::{bce_grad_logit, bce_loss};

pub const DEFAULT_THRESHOLD: f64 = 1e-4;
const CLAMP: f64 = 1e-7;

const USERS: &str = "user_id,segment,age\nu0,a,21\nu1,b,35\nu2,c,48\nu3,a,30\nu4,b,62\n";
const ITEMS: &str = "item_id,kind,salary\ni0,x,10\ni1,y,55\ni2,x,80\ni3,z,25\ni4,y,95\n";
const POSITIVES: [(usize, usize); 8] = [(0, 0), (1, 1), (2, 2), (3, 3), (4, 4), (0, 2), (1, 3), (2, 4)];
const NEGATIVES: [(usize, usize); 4] = [(0, 1), (2, 0), (3, 2), (4, 3)];

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    pub seed: u64,
    pub step: f64,
    pub threshold: f64,
    /// Test hook: perturbs the analytic gradient of the named parameter group.
    pub corrupt_group: Option<String>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            seed: 0,
            step: 1e-6,
            threshold: DEFAULT_THRESHOLD,
            corrupt_group: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArchitectureCheck {
    pub architecture: Architecture,
    pub max_relative_error: f64,
    pub worst_group: String,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub threshold: f64,
    pub checks: Vec<ArchitectureCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ArchitectureCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<10} max_rel_err {:.3e}  worst {} [{}]  {}",
                c.architecture.as_str(),
                c.max_relative_error,
                c.worst_group,
                c.worst_index,
                if c.passed { "PASS" } else { "FAIL" }
            )?;
        }
        write!(
            f,
            "gradcheck {} (threshold {:.0e})",
            if self.passed() { "passed" } else { "FAILED" },
            self.threshold
        )
    }
}

/// Fixture dataset, fitted schema and encoded features.
pub fn fixture() -> Result<(InteractionDataset, FeatureSchema, EntityFeatures)> {
    let dataset = InteractionDataset::from_records(
        POSITIVES
            .iter()
            .map(|&(u, i)| (format!("u{u}"), format!("i{i}"), None)),
    )?;
    let users = FeatureTable::from_csv_reader(USERS.as_bytes(), "user_id")?;
    let items = FeatureTable::from_csv_reader(ITEMS.as_bytes(), "item_id")?;
    let field = |name: &str, kind| FieldDecl { name: name.into(), kind };
    let decl = SchemaDeclaration {
        user_fields: vec![field("segment", FieldKind::Categorical), field("age", FieldKind::Continuous)],
        item_fields: vec![field("kind", FieldKind::Categorical), field("salary", FieldKind::Continuous)],
    };
    let schema = fit_schema(&decl, Some(&users), Some(&items))?;
    let features = EntityFeatures::build(&schema, &dataset, Some(&users), Some(&items))?;
    Ok((dataset, schema, features))
}

/// Small widths and a wide init so every unit is active and gradients are
/// far from zero.
pub fn fixture_config(architecture: Architecture) -> ArchitectureConfig {
    let mut c = ArchitectureConfig::new(architecture);
    c.mf_dim = 4;
    c.predictive_dim = 4;
    c.dnn_id_dim = 3;
    c.cat_embed_dim = 2;
    c.hidden_layers = vec![8, 4];
    c.init_stddev = 0.5;
    c
}

pub fn check_architecture(architecture: Architecture, opts: &GradCheckOptions) -> Result<ArchitectureCheck> {
    let (dataset, schema, features) = fixture()?;
    let model = DeepHybridModel::build(
        fixture_config(architecture),
        dataset.num_users(),
        dataset.num_items(),
        &schema,
        opts.seed,
    )?;
    let base = model.params().flatten();
    let examples = POSITIVES
        .iter()
        .map(|&(u, i)| (u, i, 1.0))
        .chain(NEGATIVES.iter().map(|&(u, i)| (u, i, 0.0)));

    let mut worst: Option<(f64, usize, f64, f64)> = None;
    for (u, i, label) in examples {
        let (uf, itf) = (features.user(u), features.item(i));
        let trace = model.forward(uf, itf)?;
        let mut grads = model.backward(&trace, bce_grad_logit(trace.prediction, label, CLAMP))?;
        if let Some(name) = &opts.corrupt_group {
            for g in grads.groups_mut() {
                if &g.name == name {
                    g.values.iter_mut().for_each(|v| *v = *v * 1.5 + 0.01);
                }
            }
        }
        let analytic = grads.flatten();
        let mut probe = model.clone();
        let report = finite_difference_check(
            |flat| {
                probe
                    .params_mut()
                    .assign_flat(flat)
                    .and_then(|_| probe.predict(uf, itf))
                    .and_then(|p| bce_loss(p, label, CLAMP))
                    .unwrap_or(f64::NAN)
            },
            &base,
            &analytic,
            opts.step,
        )?;
        if worst.is_none_or(|w| report.max_relative_error > w.0) {
            worst = Some((report.max_relative_error, report.worst_index, report.analytic, report.numeric));
        }
    }
    let (err, index, analytic, numeric) = worst.expect("fixture has examples");
    let worst_group = model.params().group_of(index).unwrap_or_default();
    let offset = model.params().range_of(&worst_group).map_or(0, |r| r.start);
    Ok(ArchitectureCheck {
        architecture,
        max_relative_error: err,
        worst_group,
        worst_index: index - offset,
        analytic,
        numeric,
        passed: err <= opts.threshold,
    })
}

/// Runs the check for all four architectures.
pub fn run_gradcheck(opts: &GradCheckOptions) -> Result<GradCheckReport> {
    if let Some(name) = &opts.corrupt_group {
        let (dataset, schema, _) = fixture()?;
        let known = Architecture::ALL.iter().any(|&a| {
            DeepHybridModel::build(fixture_config(a), dataset.num_users(), dataset.num_items(), &schema, 0)
                .map(|m| m.params().range_of(name).is_some())
                .unwrap_or(false)
        });
        if !known {
            return Err(Error::invalid(format!("no parameter group named {name:?}")));
        }
    }
    let checks = Architecture::ALL
        .iter()
        .map(|&a| check_architecture(a, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(GradCheckReport {
        threshold: opts.threshold,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_build_passes() {
        let report = run_gradcheck(&GradCheckOptions::default()).unwrap();
        assert!(report.passed(), "{report}");
        assert_eq!(report.checks.len(), 4);
    }

    #[test]
    fn corrupted_group_is_named() {
        let opts = GradCheckOptions {
            corrupt_group: Some("layer1.weight".into()),
            ..GradCheckOptions::default()
        };
        let report = run_gradcheck(&opts).unwrap();
        assert!(!report.passed());
        for c in report.failures() {
            assert_eq!(c.worst_group, "layer1.weight");
            assert_ne!(c.architecture, Architecture::Gmf);
        }
        assert!(run_gradcheck(&GradCheckOptions {
            corrupt_group: Some("nope".into()),
            ..GradCheckOptions::default()
        })
        .is_err());
    }

    #[test]
    fn report_is_deterministic() {
        let a = run_gradcheck(&GradCheckOptions::default()).unwrap();
        let b = run_gradcheck(&GradCheckOptions::default()).unwrap();
        assert_eq!(a.to_string(), b.to_string());
    }
}
