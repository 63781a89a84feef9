//! JSON formats.
//!
//! Instances are `{"n": 4, "edges": [[i, j, w_s, w_d], ...]}`; pairs not
//! listed have zero weight on both channels.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::partition::PartitionTarget;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64, f64)>,
}

impl From<&Instance<f64>> for InstanceFile {
    fn from(inst: &Instance<f64>) -> Self {
        let n = inst.n();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let (ws, wd) = (inst.sim(i, j), inst.dis(i, j));
                if ws != 0.0 || wd != 0.0 {
                    edges.push((i, j, ws, wd));
                }
            }
        }
        InstanceFile { n, edges }
    }
}

impl TryFrom<InstanceFile> for Instance<f64> {
    type Error = Error;

    fn try_from(f: InstanceFile) -> Result<Self> {
        Instance::from_edges(f.n, &f.edges)
    }
}

pub fn instance_to_json(inst: &Instance<f64>) -> String {
    serde_json::to_string(&InstanceFile::from(inst)).expect("plain data serializes")
}

pub fn instance_from_json(text: &str) -> Result<Instance<f64>> {
    let f: InstanceFile = serde_json::from_str(text)?;
    f.try_into()
}

pub fn read_instance(path: &Path) -> Result<Instance<f64>> {
    instance_from_json(&read(path)?)
}

pub fn target_from_json(text: &str) -> Result<PartitionTarget> {
    let t: PartitionTarget = serde_json::from_str(text)?;
    t.validate()?;
    Ok(t)
}

pub fn read_target(path: &Path) -> Result<PartitionTarget> {
    target_from_json(&read(path)?)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
