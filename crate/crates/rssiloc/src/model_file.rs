use std::path::Path;

use rssiloc_core::codec;
use rssiloc_core::MlpModel;

use crate::{artifacts, Error, Result};

pub fn load(path: &Path) -> Result<MlpModel> {
    let bytes = std::fs::read(path).map_err(Error::io(path))?;
    Ok(codec::decode(&bytes)?)
}

pub fn save(path: &Path, model: &MlpModel) -> Result<()> {
    artifacts::write_atomic(path, codec::encode(model))
}
