//! Model and result serialization: LP, MPS, OPB, solution files, model JSON
//! and PGM weight maps.

mod lp;
mod mps;
mod opb;
mod solution;

use std::collections::HashSet;
use std::path::Path;

pub use lp::{lp_string, parse_lp, read_lp, write_lp};
pub use mps::{mps_string, parse_mps, read_mps, write_mps};
pub use opb::{names_path, names_string, opb_index, opb_name, opb_string, write_opb};
pub use solution::{parse_solution, parse_solution_str, SolutionFile};

use crate::encoder::TrainedModel;
use crate::error::{Error, Result};
use crate::model_ir::ModelIR;

pub const PIXEL_POSITIVE: u8 = 0;
pub const PIXEL_NEGATIVE: u8 = 255;
pub const PIXEL_ZERO: u8 = 128;

/// Row names as written to files: unique and non-empty.
pub(crate) fn row_names(model: &ModelIR) -> Vec<String> {
    let mut used = HashSet::new();
    model
        .constraints()
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let mut name = if row.name.is_empty() {
                format!("c{r}")
            } else {
                row.name.clone()
            };
            while !used.insert(name.clone()) {
                name = format!("{name}_{r}");
            }
            name
        })
        .collect()
}

/// P5 raster of class `class`, feature `f` at row `f / width`, column `f % width`.
pub fn weights_pgm(
    model: &TrainedModel,
    class: usize,
    width: usize,
    height: usize,
) -> Result<Vec<u8>> {
    if width * height != model.feature_count {
        return Err(Error::Dimension {
            expected: model.feature_count,
            got: width * height,
        });
    }
    if class >= model.class_count {
        return Err(Error::Dimension {
            expected: model.class_count,
            got: class + 1,
        });
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(model.weights.iter().map(|row| match row[class] {
        1 => PIXEL_POSITIVE,
        -1 => PIXEL_NEGATIVE,
        _ => PIXEL_ZERO,
    }));
    Ok(out)
}

pub fn render_weights_pgm(
    model: &TrainedModel,
    class: usize,
    width: usize,
    height: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = weights_pgm(model, class, width, height)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    model.validate()?;
    let text = serde_json::to_string_pretty(model)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

pub fn model_from_json(text: &str) -> Result<TrainedModel> {
    let model: TrainedModel =
        serde_json::from_str(text).map_err(|e| Error::ModelFile(e.to_string()))?;
    model.validate()?;
    Ok(model)
}
