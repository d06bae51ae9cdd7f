//! Parametric circuit intermediate representation.
//!
//! Circuits are ordered gate lists over the universal set {sx, Rz, Cz}.
//! Rotation angles are either numeric constants, input slots `w<k>` (filled
//! from the encoded feature vector) or model-parameter slots `t<k>` (filled
//! from the trainable vector). The extended tags `H`, `CNOT` and `ZZ` only
//! appear in the output of gate-set translation.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// An angle slot of a rotation gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleExpr {
    /// Fixed angle in radians; interpretation is 2π-periodic.
    Const(f64),
    /// Input slot ω_k, bound per sample from the encoded feature vector.
    Input(usize),
    /// Model slot θ_k, bound from the trainable parameter vector.
    Param(usize),
}

impl AngleExpr {
    pub fn as_const(&self) -> Option<f64> {
        match self {
            AngleExpr::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, AngleExpr::Const(_))
    }
}

/// A single gate. `Cz` and `Zz` are symmetric and keep their operands in
/// canonical low-first order; use the constructors rather than building
/// variants by hand when the operand order is not already canonical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Sx(usize),
    Rz(usize, AngleExpr),
    Cz(usize, usize),
    /// Hadamard; only produced transiently during gate-set translation.
    H(usize),
    /// Controlled-not with explicit control/target roles.
    Cnot { control: usize, target: usize },
    /// Two-qubit ZZ coupling, diag(e^{-iπ/4}, e^{iπ/4}, e^{iπ/4}, e^{-iπ/4}).
    Zz(usize, usize),
}

impl Gate {
    /// Canonical controlled-Z (low qubit index first).
    pub fn cz(a: usize, b: usize) -> Gate {
        Gate::Cz(a.min(b), a.max(b))
    }

    /// Canonical ZZ coupling (low qubit index first).
    pub fn zz(a: usize, b: usize) -> Gate {
        Gate::Zz(a.min(b), a.max(b))
    }

    pub fn rz(q: usize, radians: f64) -> Gate {
        Gate::Rz(q, AngleExpr::Const(radians))
    }

    /// Qubits the gate acts on (one or two).
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::Sx(q) | Gate::Rz(q, _) | Gate::H(q) => (q, None),
            Gate::Cz(a, b) | Gate::Zz(a, b) => (a, Some(b)),
            Gate::Cnot { control, target } => (control, Some(target)),
        }
    }

    pub fn touches(&self, qubit: usize) -> bool {
        let (a, b) = self.qubits();
        a == qubit || b == Some(qubit)
    }

    /// True for gates that are diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        matches!(self, Gate::Rz(..) | Gate::Cz(..) | Gate::Zz(..))
    }

    fn validate(&self, width: usize) -> Result<()> {
        let (a, b) = self.qubits();
        if a >= width {
            return Err(Error::QubitOutOfRange { qubit: a, width });
        }
        if let Some(b) = b {
            if b >= width {
                return Err(Error::QubitOutOfRange { qubit: b, width });
            }
            if a == b {
                return Err(Error::DuplicateQubit(a));
            }
        }
        if let Gate::Rz(_, AngleExpr::Const(v)) = self {
            if !v.is_finite() {
                return Err(Error::NonFiniteAngle);
            }
        }
        Ok(())
    }

    /// Same gate with canonical operand order for the symmetric two-qubit gates.
    fn canonical(self) -> Gate {
        match self {
            Gate::Cz(a, b) => Gate::cz(a, b),
            Gate::Zz(a, b) => Gate::zz(a, b),
            g => g,
        }
    }
}

/// The φ-box used as the unit parametric block: `[Sx(q), Rz(q, angle), Sx(q)]`.
pub fn compact_gate(qubit: usize, angle: AngleExpr) -> [Gate; 3] {
    [Gate::Sx(qubit), Gate::Rz(qubit, angle), Gate::Sx(qubit)]
}

/// Physical-operation tally: Sx and H cost one 1-qubit pulse, every two-qubit
/// gate costs one 2-qubit pulse, Rz costs nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct PulseCount {
    pub one_qubit: usize,
    pub two_qubit: usize,
}

pub fn pulse_count(gates: &[Gate]) -> PulseCount {
    let mut count = PulseCount::default();
    for gate in gates {
        match gate {
            Gate::Sx(_) | Gate::H(_) => count.one_qubit += 1,
            Gate::Cz(..) | Gate::Cnot { .. } | Gate::Zz(..) => count.two_qubit += 1,
            Gate::Rz(..) => {}
        }
    }
    count
}

/// A parametric circuit: ordered gates over `width` qubits with `num_inputs`
/// ω slots and `num_params` θ slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
    num_inputs: usize,
    num_params: usize,
}

impl Circuit {
    /// Build a circuit, canonicalizing symmetric gates and validating qubit
    /// indices and slot density (slot indices must cover 0..d-1 with no gaps).
    pub fn new(width: usize, gates: Vec<Gate>) -> Result<Circuit> {
        if width == 0 {
            return Err(Error::Empty("circuit width"));
        }
        let gates: Vec<Gate> = gates.into_iter().map(Gate::canonical).collect();
        let mut inputs_seen = Vec::new();
        let mut params_seen = Vec::new();
        for gate in &gates {
            gate.validate(width)?;
            if let Gate::Rz(_, expr) = gate {
                match expr {
                    AngleExpr::Input(k) => mark(&mut inputs_seen, *k),
                    AngleExpr::Param(k) => mark(&mut params_seen, *k),
                    AngleExpr::Const(_) => {}
                }
            }
        }
        let num_inputs = dense_len(&inputs_seen, "input slots")?;
        let num_params = dense_len(&params_seen, "parameter slots")?;
        Ok(Circuit {
            width,
            gates,
            num_inputs,
            num_params,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn pulse_count(&self) -> PulseCount {
        pulse_count(&self.gates)
    }

    /// Resolve every `Input`/`Param` slot to a constant. Gate order is
    /// unchanged.
    pub fn bind(&self, omega: &[f64], theta: &[f64]) -> Result<BoundCircuit> {
        if omega.len() != self.num_inputs {
            return Err(Error::DimensionMismatch {
                what: "input vector ω",
                expected: self.num_inputs,
                got: omega.len(),
            });
        }
        if theta.len() != self.num_params {
            return Err(Error::DimensionMismatch {
                what: "parameter vector θ",
                expected: self.num_params,
                got: theta.len(),
            });
        }
        let gates = self
            .gates
            .iter()
            .map(|gate| match *gate {
                Gate::Rz(q, AngleExpr::Input(k)) => Gate::rz(q, omega[k]),
                Gate::Rz(q, AngleExpr::Param(k)) => Gate::rz(q, theta[k]),
                g => g,
            })
            .collect();
        Ok(BoundCircuit {
            width: self.width,
            gates,
        })
    }

    /// Reinterpret as a bound circuit; errors if any symbolic slot remains.
    pub fn try_into_bound(&self) -> Result<BoundCircuit> {
        if self.num_inputs != 0 || self.num_params != 0 {
            return Err(Error::UnboundAngles);
        }
        Ok(BoundCircuit {
            width: self.width,
            gates: self.gates.clone(),
        })
    }
}

fn mark(seen: &mut Vec<bool>, index: usize) {
    if index >= seen.len() {
        seen.resize(index + 1, false);
    }
    seen[index] = true;
}

fn dense_len(seen: &[bool], what: &'static str) -> Result<usize> {
    let used = seen.iter().filter(|&&s| s).count();
    if used != seen.len() {
        return Err(Error::SparseSlots {
            what,
            used,
            expected: seen.len(),
        });
    }
    Ok(seen.len())
}

/// A circuit whose every angle is a numeric constant.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCircuit {
    width: usize,
    gates: Vec<Gate>,
}

impl BoundCircuit {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn pulse_count(&self) -> PulseCount {
        pulse_count(&self.gates)
    }

    /// View as a (fully constant) parametric circuit, e.g. to run rewrite
    /// passes on it.
    pub fn to_circuit(&self) -> Circuit {
        Circuit {
            width: self.width,
            gates: self.gates.clone(),
            num_inputs: 0,
            num_params: 0,
        }
    }

    pub(crate) fn from_parts(width: usize, gates: Vec<Gate>) -> BoundCircuit {
        BoundCircuit { width, gates }
    }
}

/// The four experiment circuits. Every ω/θ box is a compact φ-gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 2 qubits, 4 features re-uploaded once, 8 parameters.
    Iris2q,
    /// 2 qubits, 2 features, 4 parameters.
    Xor2q,
    /// 3 qubits, 3 features, 6 parameters, entangling pattern (0,2),(0,1),(1,2).
    Skin3q,
    /// 2 qubits, 2 features uploaded four times, 12 parameters.
    Synth2q,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Iris2q, Preset::Xor2q, Preset::Skin3q, Preset::Synth2q];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Iris2q => "iris2q",
            Preset::Xor2q => "xor2q",
            Preset::Skin3q => "skin3q",
            Preset::Synth2q => "synth2q",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Preset> {
        match s {
            "iris2q" => Ok(Preset::Iris2q),
            "xor2q" => Ok(Preset::Xor2q),
            "skin3q" => Ok(Preset::Skin3q),
            "synth2q" => Ok(Preset::Synth2q),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

pub fn preset(which: Preset) -> Circuit {
    use AngleExpr::{Input, Param};
    match which {
        Preset::Iris2q => {
            // Angle sequence per qubit: ω0 θ0 ω2 θ2 ω0 θ4 ω2 θ6 (qubit 0) and
            // ω1 θ1 ω3 θ3 ω1 θ5 ω3 θ7 (qubit 1), with a Cz between columns.
            let columns = [
                [Input(0), Input(1)],
                [Param(0), Param(1)],
                [Input(2), Input(3)],
                [Param(2), Param(3)],
                [Input(0), Input(1)],
                [Param(4), Param(5)],
                [Input(2), Input(3)],
                [Param(6), Param(7)],
            ];
            two_qubit_ladder(&columns)
        }
        Preset::Xor2q => {
            let columns = [
                [Input(0), Input(1)],
                [Param(0), Param(1)],
                [Param(2), Param(3)],
            ];
            two_qubit_ladder(&columns)
        }
        Preset::Synth2q => {
            let columns = [
                [Input(0), Input(1)],
                [Param(0), Param(1)],
                [Input(0), Input(1)],
                [Param(2), Param(3)],
                [Param(4), Param(5)],
                [Input(0), Input(1)],
                [Param(6), Param(7)],
                [Input(0), Input(1)],
                [Param(8), Param(9)],
                [Param(10), Param(11)],
            ];
            two_qubit_ladder(&columns)
        }
        Preset::Skin3q => {
            let mut gates = Vec::new();
            for (q, slot) in [(0, Input(0)), (1, Input(1)), (2, Input(2))] {
                gates.extend_from_slice(&compact_gate(q, slot));
            }
            gates.push(Gate::cz(0, 2));
            gates.extend_from_slice(&compact_gate(0, Param(0)));
            gates.extend_from_slice(&compact_gate(2, Param(1)));
            gates.push(Gate::cz(0, 1));
            gates.extend_from_slice(&compact_gate(0, Param(2)));
            gates.extend_from_slice(&compact_gate(1, Param(3)));
            gates.push(Gate::cz(1, 2));
            gates.extend_from_slice(&compact_gate(1, Param(4)));
            gates.extend_from_slice(&compact_gate(2, Param(5)));
            Circuit::new(3, gates).expect("skin3q preset is valid")
        }
    }
}

fn two_qubit_ladder(columns: &[[AngleExpr; 2]]) -> Circuit {
    let mut gates = Vec::new();
    for (i, column) in columns.iter().enumerate() {
        if i > 0 {
            gates.push(Gate::cz(0, 1));
        }
        gates.extend_from_slice(&compact_gate(0, column[0]));
        gates.extend_from_slice(&compact_gate(1, column[1]));
    }
    Circuit::new(2, gates).expect("ladder preset is valid")
}

// ---------------------------------------------------------------------------
// Text format: `QUBITS <N>` header, then one gate per line.
// ---------------------------------------------------------------------------

impl fmt::Display for AngleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngleExpr::Const(v) => write!(f, "{v}"),
            AngleExpr::Input(k) => write!(f, "w{k}"),
            AngleExpr::Param(k) => write!(f, "t{k}"),
        }
    }
}

/// Serialize a circuit to the one-gate-per-line interchange format.
pub fn to_text(circuit: &Circuit) -> String {
    let mut out = format!("QUBITS {}\n", circuit.width);
    for gate in &circuit.gates {
        match gate {
            Gate::Sx(q) => out.push_str(&format!("SX {q}\n")),
            Gate::Rz(q, angle) => out.push_str(&format!("RZ {q} {angle}\n")),
            Gate::Cz(a, b) => out.push_str(&format!("CZ {a} {b}\n")),
            Gate::H(q) => out.push_str(&format!("H {q}\n")),
            Gate::Cnot { control, target } => out.push_str(&format!("CNOT {control} {target}\n")),
            Gate::Zz(a, b) => out.push_str(&format!("ZZ {a} {b}\n")),
        }
    }
    out
}

pub fn bound_to_text(bound: &BoundCircuit) -> String {
    to_text(&bound.to_circuit())
}

/// Parse the text format. Blank lines and `#` comments are ignored.
pub fn parse_text(text: &str) -> Result<Circuit> {
    let mut width: Option<usize> = None;
    let mut gates = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let op = parts.next().unwrap();
        let rest: Vec<&str> = parts.collect();
        if width.is_none() {
            if op != "QUBITS" {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `QUBITS <N>` header, found `{op}`"),
                });
            }
            width = Some(parse_field(&rest, 0, 1, line, "qubit count")?);
            continue;
        }
        let gate = match op {
            "SX" => Gate::Sx(parse_field(&rest, 0, 1, line, "qubit")?),
            "H" => Gate::H(parse_field(&rest, 0, 1, line, "qubit")?),
            "RZ" => {
                if rest.len() != 2 {
                    return Err(Error::Parse {
                        line,
                        msg: format!("RZ expects `RZ <q> <angle>`, got {} fields", rest.len()),
                    });
                }
                let q = parse_num(rest[0], line, "qubit")?;
                Gate::Rz(q, parse_angle(rest[1], line)?)
            }
            "CZ" => Gate::cz(
                parse_field(&rest, 0, 2, line, "qubit")?,
                parse_field(&rest, 1, 2, line, "qubit")?,
            ),
            "ZZ" => Gate::zz(
                parse_field(&rest, 0, 2, line, "qubit")?,
                parse_field(&rest, 1, 2, line, "qubit")?,
            ),
            "CNOT" => Gate::Cnot {
                control: parse_field(&rest, 0, 2, line, "control")?,
                target: parse_field(&rest, 1, 2, line, "target")?,
            },
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown gate `{other}`"),
                })
            }
        };
        gates.push(gate);
    }
    let width = width.ok_or(Error::Parse {
        line: 0,
        msg: "missing `QUBITS <N>` header".into(),
    })?;
    Circuit::new(width, gates)
}

fn parse_field(rest: &[&str], idx: usize, want: usize, line: usize, what: &str) -> Result<usize> {
    if rest.len() != want {
        return Err(Error::Parse {
            line,
            msg: format!("expected {want} operand(s), got {}", rest.len()),
        });
    }
    parse_num(rest[idx], line, what)
}

fn parse_num(token: &str, line: usize, what: &str) -> Result<usize> {
    token.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {what} `{token}`"),
    })
}

fn parse_angle(token: &str, line: usize) -> Result<AngleExpr> {
    if let Some(k) = token.strip_prefix('w') {
        if let Ok(k) = k.parse() {
            return Ok(AngleExpr::Input(k));
        }
    }
    if let Some(k) = token.strip_prefix('t') {
        if let Ok(k) = k.parse() {
            return Ok(AngleExpr::Param(k));
        }
    }
    token
        .parse::<f64>()
        .map(AngleExpr::Const)
        .map_err(|_| Error::Parse {
            line,
            msg: format!("invalid angle `{token}` (expected radians, w<k> or t<k>)"),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_gate_expands_to_phi_box() {
        assert_eq!(
            compact_gate(0, AngleExpr::Const(0.0)),
            [Gate::Sx(0), Gate::rz(0, 0.0), Gate::Sx(0)]
        );
        assert_eq!(
            compact_gate(1, AngleExpr::Input(2)),
            [Gate::Sx(1), Gate::Rz(1, AngleExpr::Input(2)), Gate::Sx(1)]
        );
        assert_eq!(pulse_count(&compact_gate(0, AngleExpr::Param(0))).one_qubit, 2);
    }

    #[test]
    fn cz_canonicalizes_operands() {
        let c = Circuit::new(2, vec![Gate::Cz(1, 0)]).unwrap();
        assert_eq!(c.gates(), &[Gate::Cz(0, 1)]);
    }

    #[test]
    fn bind_replaces_slots_in_order() {
        let c = Circuit::new(1, vec![Gate::Rz(0, AngleExpr::Input(0))]).unwrap();
        let b = c.bind(&[0.5], &[]).unwrap();
        assert_eq!(b.gates(), &[Gate::rz(0, 0.5)]);
    }

    #[test]
    fn bind_rejects_wrong_lengths() {
        let c = preset(Preset::Xor2q);
        let err = c.bind(&[0.1], &[0.0; 4]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("expected 2") && msg.contains("got 1"), "{msg}");
    }

    #[test]
    fn iris_preset_binds_fully() {
        let c = preset(Preset::Iris2q);
        assert_eq!((c.width(), c.num_inputs(), c.num_params()), (2, 4, 8));
        let b = c.bind(&[0.1, 0.2, 0.3, 0.4], &[0.0; 8]).unwrap();
        assert!(b.gates().iter().all(|g| match g {
            Gate::Rz(_, a) => a.is_const(),
            _ => true,
        }));
    }

    #[test]
    fn preset_shapes() {
        for (p, width, d, np, pulses) in [
            (Preset::Iris2q, 2, 4, 8, (32, 7)),
            (Preset::Xor2q, 2, 2, 4, (12, 2)),
            (Preset::Skin3q, 3, 3, 6, (18, 3)),
            (Preset::Synth2q, 2, 2, 12, (40, 9)),
        ] {
            let c = preset(p);
            assert_eq!((c.width(), c.num_inputs(), c.num_params()), (width, d, np), "{p:?}");
            let pc = c.pulse_count();
            assert_eq!((pc.one_qubit, pc.two_qubit), pulses, "{p:?}");
        }
    }

    #[test]
    fn iris_preset_angle_sequence_on_qubit_zero() {
        use AngleExpr::{Input, Param};
        let c = preset(Preset::Iris2q);
        let angles: Vec<AngleExpr> = c
            .gates()
            .iter()
            .filter_map(|g| match g {
                Gate::Rz(0, a) => Some(*a),
                _ => None,
            })
            .collect();
        assert_eq!(
            angles,
            vec![Input(0), Param(0), Input(2), Param(2), Input(0), Param(4), Input(2), Param(6)]
        );
        let czs = c.gates().iter().filter(|g| matches!(g, Gate::Cz(..))).count();
        assert_eq!(czs, 7);
    }

    #[test]
    fn synth_preset_uploads_each_feature_four_times_per_qubit() {
        let c = preset(Preset::Synth2q);
        for q in 0..2 {
            let uploads = c
                .gates()
                .iter()
                .filter(|g| matches!(g, Gate::Rz(qq, AngleExpr::Input(k)) if *qq == q && *k == q))
                .count();
            assert_eq!(uploads, 4);
        }
    }

    #[test]
    fn skin_preset_cz_pattern() {
        let c = preset(Preset::Skin3q);
        let czs: Vec<(usize, usize)> = c
            .gates()
            .iter()
            .filter_map(|g| match g {
                Gate::Cz(a, b) => Some((*a, *b)),
                _ => None,
            })
            .collect();
        assert_eq!(czs, vec![(0, 2), (0, 1), (1, 2)]);
    }

    #[test]
    fn unknown_preset_name() {
        assert!(matches!("iris9q".parse::<Preset>(), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn sparse_slots_rejected() {
        let err = Circuit::new(1, vec![Gate::Rz(0, AngleExpr::Input(1))]).unwrap_err();
        assert!(matches!(err, Error::SparseSlots { .. }));
    }

    #[test]
    fn binding_preserves_pulse_count() {
        for p in Preset::ALL {
            let c = preset(p);
            let omega = vec![0.3; c.num_inputs()];
            let theta = vec![-0.7; c.num_params()];
            let b = c.bind(&omega, &theta).unwrap();
            assert_eq!(c.pulse_count(), b.pulse_count());
        }
    }

    #[test]
    fn empty_circuit_pulse_count() {
        let c = Circuit::new(2, vec![]).unwrap();
        assert_eq!(c.pulse_count(), PulseCount::default());
    }

    #[test]
    fn text_round_trip_on_presets() {
        for p in Preset::ALL {
            let c = preset(p);
            let text = to_text(&c);
            let parsed = parse_text(&text).unwrap();
            assert_eq!(parsed, c, "{p:?}");
            assert_eq!(to_text(&parsed), text);
        }
    }

    #[test]
    fn text_round_trip_extended_gates() {
        let text = "QUBITS 3\nH 0\nCNOT 0 1\nZZ 1 2\nRZ 2 -1.5707963267948966\n";
        let c = parse_text(text).unwrap();
        assert_eq!(to_text(&c), text);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = parse_text("QUBITS 2\nSX 0\nFOO 1\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = parse_text("SX 0\n").unwrap_err();
        assert!(err.to_string().contains("QUBITS"), "{err}");
    }
}
