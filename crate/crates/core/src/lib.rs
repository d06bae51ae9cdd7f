//! A variational quantum classifier toolkit on a simulated processor:
//! parametric circuits over {sx, Rz, Cz}, exact statevector simulation with
//! seeded shot sampling, peephole circuit optimization, native-gate-set
//! translation, feature encoding, softmax-log training and evaluation, and
//! dataset utilities.

pub mod circuit;
pub mod data;
pub mod encoding;
pub mod error;
mod mat2;
pub mod model;
pub mod passes;
pub mod simulator;
pub mod train;
pub mod translate;

pub use circuit::{
    bound_to_text, compact_gate, parse_text, preset, pulse_count, to_text, AngleExpr, BoundCircuit,
    Circuit, Gate, Preset, PulseCount,
};
pub use error::{Error, Result};
pub use model::{ClassMap, ClassProbs, EvalMode, ModelSpec, ModelTemplate};
pub use simulator::{distribution, sample, statevector, Distribution, ShotCounts, StateVector};
pub use train::{evaluate, train, ConfusionMatrix, TrainOptions, TrainReport};

use std::path::Path;

/// Write a file via a temporary sibling and rename, so failed runs never
/// leave partial outputs behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.file_name().unwrap_or_default().to_os_string();
    tmp.push(".tmp");
    let tmp = path.with_file_name(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
