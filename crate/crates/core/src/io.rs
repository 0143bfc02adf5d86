//! Kernel files: JSON with explicit rows for finite kernels, a registered
//! generator name and parameters for kernels on the naturals.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{self, BuiltKernel};
use crate::error::{Error, Result};
use crate::graph::{GeneratorSpec, Row, WeightedKernel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelFile {
    Finite {
        row_bound: f64,
        /// `[x, [[y, k], ...]]` per site.
        rows: Vec<(usize, Vec<(usize, f64)>)>,
    },
    Generated {
        row_bound: f64,
        generator: GeneratorSpec,
    },
}

impl KernelFile {
    pub fn from_kernel(k: &WeightedKernel) -> Result<Self> {
        if let Some(n) = k.num_sites() {
            let rows = (0..n).map(|x| Ok((x, k.row(x)?))).collect::<Result<_>>()?;
            return Ok(KernelFile::Finite {
                row_bound: k.row_bound(),
                rows,
            });
        }
        let generator = k.generator_spec().cloned().ok_or_else(|| {
            Error::KernelFile("generated kernel has no registered generator to record".into())
        })?;
        Ok(KernelFile::Generated {
            row_bound: k.row_bound(),
            generator,
        })
    }

    pub fn build(&self) -> Result<BuiltKernel> {
        match self {
            KernelFile::Finite { row_bound, rows } => {
                let n = rows.len();
                let mut dense: Vec<Option<Row>> = vec![None; n];
                for (x, row) in rows {
                    let slot = dense
                        .get_mut(*x)
                        .ok_or_else(|| Error::KernelFile(format!("site {x} outside 0..{n}")))?;
                    if slot.replace(row.clone()).is_some() {
                        return Err(Error::KernelFile(format!("site {x} listed twice")));
                    }
                }
                let rows = dense.into_iter().map(Option::unwrap).collect();
                Ok(BuiltKernel {
                    kernel: WeightedKernel::finite(rows, Some(*row_bound))?,
                    tail: None,
                })
            }
            KernelFile::Generated { row_bound, generator } => {
                let built = corpus::from_spec(generator)?;
                let needed = built.kernel.row_bound();
                if *row_bound < needed * (1.0 - 1e-12) {
                    return Err(Error::KernelFile(format!(
                        "declared row bound {row_bound} is below the generator's bound {needed}"
                    )));
                }
                Ok(built)
            }
        }
    }
}

pub fn kernel_to_json(k: &WeightedKernel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&KernelFile::from_kernel(k)?)?)
}

/// Parses a kernel file; a top-level `header` object, as written by the CLI, is ignored.
pub fn kernel_from_json(text: &str) -> Result<BuiltKernel> {
    let mut value: serde_json::Value = serde_json::from_str(text)?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("header");
    }
    let file: KernelFile = serde_json::from_value(value)?;
    file.build()
}

pub fn read_kernel(path: &Path) -> Result<BuiltKernel> {
    kernel_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_kernel(path: &Path, k: &WeightedKernel) -> Result<()> {
    let mut text = kernel_to_json(k)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
