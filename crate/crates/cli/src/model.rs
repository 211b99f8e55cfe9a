//! The JSON model-file schema and its resolution into core objects.
//!
//! Rationals travel as reduced `"p/q"` strings (or `"p"` for integers) so
//! no float formatting can creep in; all maps are `BTreeMap`s so output key
//! order is canonical and serialization is deterministic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use semipullback::{
    format_rat, parse_rat, FinSpace, Kernel, KernelCospan, KernelKind, Lmp, LmpCospan, Morphism,
    Rat, StateId,
};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub spaces: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lmps: BTreeMap<String, LmpDef>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub kernels: BTreeMap<String, KernelDef>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub morphisms: BTreeMap<String, MorphismDef>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub cospans: BTreeMap<String, CospanDef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LmpDef {
    pub space: String,
    pub labels: Vec<String>,
    /// label -> row-major matrix of rationals as strings.
    pub kernels: BTreeMap<String, Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelDef {
    pub source: String,
    pub target: String,
    pub kind: String,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorphismDef {
    pub domain: String,
    pub codomain: String,
    pub map: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CospanDef {
    pub apex: String,
    pub leg1: LegDef,
    pub leg2: LegDef,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LegDef {
    pub object: String,
    pub morphism: String,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<ModelFile, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Schema(format!(
                "parse error at line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })
    }

    pub fn to_pretty_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("schema serializes");
        out.push('\n');
        out
    }
}

/// All model objects resolved against each other.
pub struct Resolved {
    pub spaces: BTreeMap<String, FinSpace>,
    pub kernels: BTreeMap<String, Kernel>,
    pub lmps: BTreeMap<String, Lmp>,
    pub morphisms: BTreeMap<String, Morphism>,
    pub file: ModelFile,
}

fn schema<T>(msg: String) -> Result<T, CliError> {
    Err(CliError::Schema(msg))
}

fn parse_rows(rows: &[Vec<String>], what: &str) -> Result<Vec<Vec<Rat>>, CliError> {
    rows.iter()
        .map(|row| {
            row.iter()
                .map(|s| {
                    parse_rat(s)
                        .map_err(|_| CliError::Schema(format!("{what}: bad rational `{s}`")))
                })
                .collect()
        })
        .collect()
}

pub fn resolve(file: ModelFile) -> Result<Resolved, CliError> {
    let mut spaces = BTreeMap::new();
    for (name, ids) in &file.spaces {
        let space = FinSpace::from_ids(ids)
            .map_err(|e| CliError::Schema(format!("space `{name}`: {e}")))?;
        spaces.insert(name.clone(), space);
    }

    let lookup_space = |spaces: &BTreeMap<String, FinSpace>, name: &str| -> Result<FinSpace, CliError> {
        spaces
            .get(name)
            .cloned()
            .ok_or_else(|| CliError::Schema(format!("dangling space reference `{name}`")))
    };

    let mut kernels = BTreeMap::new();
    for (name, def) in &file.kernels {
        let source = lookup_space(&spaces, &def.source)?;
        let target = lookup_space(&spaces, &def.target)?;
        let kind = match def.kind.as_str() {
            "probability" => KernelKind::Probability,
            "subprobability" => KernelKind::Subprobability,
            other => {
                return schema(format!(
                    "kernel `{name}`: kind must be \"probability\" or \"subprobability\", got `{other}`"
                ))
            }
        };
        let rows = parse_rows(&def.rows, &format!("kernel `{name}`"))?;
        let kernel = Kernel::new(source, target, kind, rows)
            .map_err(|e| CliError::Schema(format!("kernel `{name}`: {e}")))?;
        kernels.insert(name.clone(), kernel);
    }

    let mut lmps = BTreeMap::new();
    for (name, def) in &file.lmps {
        let space = lookup_space(&spaces, &def.space)?;
        let mut per_label = Vec::new();
        for label in &def.labels {
            let rows = def.kernels.get(label).ok_or_else(|| {
                CliError::Schema(format!("lmp `{name}`: no kernel for label `{label}`"))
            })?;
            let rows = parse_rows(rows, &format!("lmp `{name}` label `{label}`"))?;
            let kernel = Kernel::new(space.clone(), space.clone(), KernelKind::Subprobability, rows)
                .map_err(|e| CliError::Schema(format!("lmp `{name}` label `{label}`: {e}")))?;
            per_label.push(kernel);
        }
        for label in def.kernels.keys() {
            if !def.labels.contains(label) {
                return schema(format!("lmp `{name}`: kernel for undeclared label `{label}`"));
            }
        }
        let lmp = Lmp::new(space, def.labels.clone(), per_label)
            .map_err(|e| CliError::Schema(format!("lmp `{name}`: {e}")))?;
        lmps.insert(name.clone(), lmp);
    }

    let mut morphisms = BTreeMap::new();
    for (name, def) in &file.morphisms {
        let domain = lookup_space(&spaces, &def.domain)?;
        let codomain = lookup_space(&spaces, &def.codomain)?;
        let pairs: Vec<(StateId, StateId)> = def
            .map
            .iter()
            .map(|(from, to)| (StateId::new(from.as_str()), StateId::new(to.as_str())))
            .collect();
        let morphism = Morphism::new(domain, codomain, &pairs)
            .map_err(|e| CliError::Schema(format!("morphism `{name}`: {e}")))?;
        morphisms.insert(name.clone(), morphism);
    }

    // Cospan cross-references must resolve (legs are validated semantically
    // at use time).
    for (name, def) in &file.cospans {
        for leg in [&def.leg1, &def.leg2] {
            if !morphisms.contains_key(&leg.morphism) {
                return schema(format!(
                    "cospan `{name}`: dangling morphism reference `{}`",
                    leg.morphism
                ));
            }
            if !kernels.contains_key(&leg.object) && !lmps.contains_key(&leg.object) {
                return schema(format!(
                    "cospan `{name}`: dangling object reference `{}`",
                    leg.object
                ));
            }
        }
        if !kernels.contains_key(&def.apex) && !lmps.contains_key(&def.apex) {
            return schema(format!(
                "cospan `{name}`: dangling apex reference `{}`",
                def.apex
            ));
        }
    }

    Ok(Resolved { spaces, kernels, lmps, morphisms, file })
}

impl Resolved {
    pub fn kernel_cospan(&self, name: &str) -> Result<KernelCospan, CliError> {
        let def = self
            .file
            .cospans
            .get(name)
            .ok_or_else(|| CliError::Schema(format!("no cospan named `{name}`")))?;
        let apex = self
            .kernels
            .get(&def.apex)
            .ok_or_else(|| CliError::Schema(format!("cospan `{name}`: apex `{}` is not a kernel", def.apex)))?;
        let left = self.kernels.get(&def.leg1.object).ok_or_else(|| {
            CliError::Schema(format!("cospan `{name}`: `{}` is not a kernel", def.leg1.object))
        })?;
        let right = self.kernels.get(&def.leg2.object).ok_or_else(|| {
            CliError::Schema(format!("cospan `{name}`: `{}` is not a kernel", def.leg2.object))
        })?;
        let leg1 = &self.morphisms[&def.leg1.morphism];
        let leg2 = &self.morphisms[&def.leg2.morphism];
        KernelCospan::new(
            apex.clone(),
            left.clone(),
            leg1.clone(),
            right.clone(),
            leg2.clone(),
        )
        .map_err(|e| CliError::Semantic(format!("cospan `{name}`: {e}")))
    }

    pub fn lmp_cospan(&self, name: &str) -> Result<LmpCospan, CliError> {
        let def = self
            .file
            .cospans
            .get(name)
            .ok_or_else(|| CliError::Schema(format!("no cospan named `{name}`")))?;
        let apex = self
            .lmps
            .get(&def.apex)
            .ok_or_else(|| CliError::Schema(format!("cospan `{name}`: apex `{}` is not an LMP", def.apex)))?;
        let left = self.lmps.get(&def.leg1.object).ok_or_else(|| {
            CliError::Schema(format!("cospan `{name}`: `{}` is not an LMP", def.leg1.object))
        })?;
        let right = self.lmps.get(&def.leg2.object).ok_or_else(|| {
            CliError::Schema(format!("cospan `{name}`: `{}` is not an LMP", def.leg2.object))
        })?;
        let leg1 = &self.morphisms[&def.leg1.morphism];
        let leg2 = &self.morphisms[&def.leg2.morphism];
        LmpCospan::new(
            apex.clone(),
            left.clone(),
            leg1.clone(),
            right.clone(),
            leg2.clone(),
        )
        .map_err(|e| CliError::Semantic(format!("cospan `{name}`: {e}")))
    }
}

// Serialization back to model definitions.

pub fn space_def(space: &FinSpace) -> Vec<String> {
    space.states().iter().map(|s| s.to_string()).collect()
}

pub fn kernel_def(kernel: &Kernel, source: &str, target: &str) -> KernelDef {
    KernelDef {
        source: source.to_string(),
        target: target.to_string(),
        kind: kernel.kind().to_string(),
        rows: kernel
            .rows()
            .iter()
            .map(|row| row.iter().map(format_rat).collect())
            .collect(),
    }
}

pub fn lmp_def(lmp: &Lmp, space: &str) -> LmpDef {
    LmpDef {
        space: space.to_string(),
        labels: lmp.labels().to_vec(),
        kernels: lmp
            .labels()
            .iter()
            .map(|label| {
                let k = lmp.kernel(label).expect("own label");
                (
                    label.clone(),
                    k.rows()
                        .iter()
                        .map(|row| row.iter().map(format_rat).collect())
                        .collect(),
                )
            })
            .collect(),
    }
}

pub fn morphism_def(m: &Morphism, domain: &str, codomain: &str) -> MorphismDef {
    MorphismDef {
        domain: domain.to_string(),
        codomain: codomain.to_string(),
        map: m
            .domain()
            .states()
            .iter()
            .enumerate()
            .map(|(i, s)| (s.to_string(), m.codomain().id(m.apply(i)).to_string()))
            .collect(),
    }
}
