use thiserror::Error;

/// Errors surfaced by circuit construction, simulation, encoding, data
/// handling and training.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("qubit index {qubit} out of range for width {width}")]
    QubitOutOfRange { qubit: usize, width: usize },

    #[error("two-qubit gate requires distinct qubits (got {0} twice)")]
    DuplicateQubit(usize),

    #[error("angle slot indices are not dense: {what} uses {used} of {expected} indices")]
    SparseSlots {
        what: &'static str,
        used: usize,
        expected: usize,
    },

    #[error("non-finite constant angle")]
    NonFiniteAngle,

    #[error("unknown preset `{0}` (expected iris2q, xor2q, skin3q or synth2q)")]
    UnknownPreset(String),

    #[error("circuit width {width} exceeds simulator cap of {cap} qubits")]
    WidthExceedsCap { width: usize, cap: usize },

    #[error("circuit still contains unbound angle slots; bind it first")]
    UnboundAngles,

    #[error("shot count must be at least 1")]
    ZeroShots,

    #[error("feature {0} is constant across the dataset (zero standard deviation)")]
    ConstantFeature(usize),

    #[error("{what} must lie in {range}, got {got}")]
    OutOfRange {
        what: &'static str,
        range: &'static str,
        got: f64,
    },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("class map: {0}")]
    ClassMap(String),

    #[error("class `{0}` has too few samples: {1}")]
    ClassTooSmall(String, usize),

    #[error("balanced subsample of {n} is not divisible by {k} classes")]
    UnbalancedSubsample { n: usize, k: usize },

    #[error("sampled-mode training requires the derivative-free optimizer; finite-difference gradients are unreliable on shot noise")]
    IncompatibleOptimizer,

    #[error("translation input must use only Sx, Rz and Cz gates")]
    NonCoreGates,

    #[error("translation left a Hadamard on qubit {qubit} that no absorption pattern eliminates; input is not in maximal form")]
    ResidualHadamard { qubit: usize },

    #[error("translating this input to the target gate set would change the pulse count on qubit {qubit}")]
    PulseCountChange { qubit: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model file: {0}")]
    Model(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
