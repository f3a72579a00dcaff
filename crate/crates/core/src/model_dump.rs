//! JSON model documents: member trees in prefix notation, the voting rule
//! and the feature mask each member was restricted to.

use serde::{Deserialize, Serialize};

use crate::baselines::gp::GpModel;
use crate::baselines::m3gp::M3gpModel;
use crate::dataset::FeatureMask;
use crate::engine::TrainedModel;
use crate::error::{Error, Result};
use crate::expr_tree::ExpressionTree;
use crate::forest::VotingMode;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpMember {
    pub expr: ExpressionTree,
    pub features: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDump {
    pub method: String,
    /// Present for ensembles only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub voting: Option<VotingMode>,
    pub n_features: usize,
    pub train_accuracy: f64,
    pub total_nodes: usize,
    pub members: Vec<DumpMember>,
}

fn member(expr: &ExpressionTree, mask: &FeatureMask) -> DumpMember {
    DumpMember {
        expr: expr.clone(),
        features: mask.features().to_vec(),
    }
}

impl ModelDump {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model dump serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("bad model dump: {e}")))?;
        dump.validate()?;
        Ok(dump)
    }

    /// Checks that every member's terminals lie within its feature list.
    pub fn validate(&self) -> Result<()> {
        for (i, m) in self.members.iter().enumerate() {
            let mask = FeatureMask::new(m.features.iter().copied(), self.n_features)?;
            if !m.expr.respects(&mask) {
                return Err(Error::Invariant(format!("member {i} uses a feature outside its mask")));
            }
        }
        Ok(())
    }
}

impl From<&TrainedModel> for ModelDump {
    fn from(m: &TrainedModel) -> Self {
        Self {
            method: m.variant.name().to_owned(),
            voting: Some(m.voting),
            n_features: m.n_features,
            train_accuracy: m.train_accuracy,
            total_nodes: m.total_nodes(),
            members: m.members.iter().map(|mm| member(&mm.expr, &mm.features)).collect(),
        }
    }
}

impl From<&GpModel> for ModelDump {
    fn from(m: &GpModel) -> Self {
        Self {
            method: "GP".into(),
            voting: None,
            n_features: m.n_features,
            train_accuracy: m.train_accuracy,
            total_nodes: m.tree.len(),
            members: vec![member(&m.tree, &FeatureMask::full(m.n_features))],
        }
    }
}

impl<T: Scalar> From<&M3gpModel<T>> for ModelDump {
    fn from(m: &M3gpModel<T>) -> Self {
        let mask = FeatureMask::full(m.n_features);
        Self {
            method: "M3GP".into(),
            voting: None,
            n_features: m.n_features,
            train_accuracy: m.train_accuracy,
            total_nodes: m.total_nodes(),
            members: m.dims.iter().map(|d| member(d, &mask)).collect(),
        }
    }
}
