//! JSON rendering of construction certificates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use semipullback::{format_rat, PipelineCertificate, SemipullbackResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateFile {
    pub cospan: String,
    pub mode: String,
    pub pullback_pairs: Vec<[String; 2]>,
    pub pipelines: Vec<PipelineCertificateDef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineCertificateDef {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub ground: Vec<String>,
    pub algebra1_atoms: Vec<Vec<String>>,
    pub algebra2_atoms: Vec<Vec<String>>,
    pub ambient_atoms: Vec<Vec<String>>,
    pub rectangle_count: usize,
    pub rectangles_cover_complement: bool,
    pub per_x: BTreeMap<String, ExtensionCertificateDef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtensionCertificateDef {
    pub nu1: Vec<String>,
    pub nu2: Vec<String>,
    pub common_extension: Vec<String>,
    pub phi: Vec<String>,
    pub nu3: Vec<String>,
    pub total: String,
}

fn pipeline_def(cert: &PipelineCertificate) -> PipelineCertificateDef {
    let render_atoms = |atoms: &Vec<Vec<semipullback::StateId>>| -> Vec<Vec<String>> {
        atoms
            .iter()
            .map(|a| a.iter().map(|s| s.to_string()).collect())
            .collect()
    };
    PipelineCertificateDef {
        label: cert.label.clone(),
        ground: cert.ground.states().iter().map(|s| s.to_string()).collect(),
        algebra1_atoms: render_atoms(&cert.algebra1),
        algebra2_atoms: render_atoms(&cert.algebra2),
        ambient_atoms: render_atoms(&cert.ambient),
        rectangle_count: cert.rectangle_count,
        rectangles_cover_complement: cert.rectangles_cover_complement,
        per_x: cert
            .per_x
            .iter()
            .map(|x| {
                (
                    x.x.to_string(),
                    ExtensionCertificateDef {
                        nu1: x.nu1.iter().map(format_rat).collect(),
                        nu2: x.nu2.iter().map(format_rat).collect(),
                        common_extension: x.common.iter().map(format_rat).collect(),
                        phi: x.phi.iter().map(format_rat).collect(),
                        nu3: x.nu3.iter().map(format_rat).collect(),
                        total: format_rat(&x.total),
                    },
                )
            })
            .collect(),
    }
}

pub fn certificate_file(cospan: &str, mode: &str, result: &SemipullbackResult) -> CertificateFile {
    CertificateFile {
        cospan: cospan.to_string(),
        mode: mode.to_string(),
        pullback_pairs: result
            .pullback_pairs
            .iter()
            .map(|(a, b)| [a.to_string(), b.to_string()])
            .collect(),
        pipelines: result.certificates.iter().map(pipeline_def).collect(),
    }
}

pub fn to_pretty_json(cert: &CertificateFile) -> String {
    let mut out = serde_json::to_string_pretty(cert).expect("certificate serializes");
    out.push('\n');
    out
}
