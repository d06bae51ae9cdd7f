//! Peephole circuit optimization and observational equivalence checking.
//!
//! Structural rules (applied to any circuit, symbolic slots left alone):
//!   - merge adjacent constant Rz pairs on the same qubit
//!   - drop Rz gates that are zero modulo 2π
//!   - drop Rz/Cz gates acting on qubits still in |0⟩
//!   - drop trailing Rz, and trailing Cz, that no gate follows
//!   - cancel adjacent identical Cz pairs
//!
//! On fully-constant circuits, `optimize` additionally resynthesizes every
//! single-qubit segment between entangling gates into its minimal
//! Rz·sx·Rz·sx·Rz normal form, pushing the segment's trailing Z-rotation
//! through the next Cz. The result satisfies the maximal-form bounds: at
//! most sx·Rz·sx before the first Cz on a qubit, and at most Rz·sx·Rz·sx
//! between and after entanglers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{AngleExpr, Circuit, Gate, PulseCount};
use crate::error::{Error, Result};
use crate::mat2::{self, normalize_angle, Mat2};
use crate::simulator;

/// Rz angles within this tolerance of 0 (mod 2π) are deleted.
pub const ZERO_ANGLE_TOL: f64 = 1e-12;

/// Distributions within this total-variation distance count as equal for
/// `verify_equivalence`.
pub const EQUIV_TOL: f64 = 1e-9;

/// Per-rule application counts and the pulse tallies before/after.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct RewriteReport {
    pub merged_rz: usize,
    pub dropped_zero_rz: usize,
    pub removed_initial: usize,
    pub removed_final: usize,
    pub cancelled_cz: usize,
    pub resynthesized_segments: usize,
    /// Symbolic segments exceeding the maximal-form bounds; these cannot be
    /// resynthesized without numeric angles and are reported instead.
    pub oversize_symbolic_segments: usize,
    pub pulses_before: PulseCount,
    pub pulses_after: PulseCount,
}

// ---------------------------------------------------------------------------
// Individual structural rules
// ---------------------------------------------------------------------------

fn merge_rz_pass(gates: &mut Vec<Gate>) -> usize {
    let mut out: Vec<Gate> = Vec::with_capacity(gates.len());
    let mut merged = 0;
    for &gate in gates.iter() {
        if let Gate::Rz(q, AngleExpr::Const(angle)) = gate {
            if let Some(pos) = out.iter().rposition(|g| g.touches(q)) {
                if let Gate::Rz(_, AngleExpr::Const(prev)) = out[pos] {
                    out[pos] = Gate::rz(q, normalize_angle(prev + angle));
                    merged += 1;
                    continue;
                }
            }
        }
        out.push(gate);
    }
    *gates = out;
    merged
}

fn drop_zero_rz_pass(gates: &mut Vec<Gate>) -> usize {
    let before = gates.len();
    gates.retain(|g| match g {
        Gate::Rz(_, AngleExpr::Const(angle)) => normalize_angle(*angle).abs() > ZERO_ANGLE_TOL,
        _ => true,
    });
    before - gates.len()
}

/// Drop constant Rz and Cz gates acting on qubits whose state is still |0⟩.
/// Rz keeps |0⟩ fixed up to phase, so a symbolic Rz leaves the flag intact
/// but is itself kept (deleting it could leave a slot index unused).
fn remove_initial_pass(gates: &mut Vec<Gate>, width: usize) -> usize {
    let mut in_zero = vec![true; width];
    let mut out = Vec::with_capacity(gates.len());
    let mut removed = 0;
    for &gate in gates.iter() {
        match gate {
            Gate::Rz(q, expr) if in_zero[q] && expr.is_const() => {
                removed += 1;
            }
            Gate::Cz(a, b) if in_zero[a] || in_zero[b] => {
                removed += 1;
            }
            Gate::Rz(..) => out.push(gate),
            _ => {
                let (a, b) = gate.qubits();
                in_zero[a] = false;
                if let Some(b) = b {
                    in_zero[b] = false;
                }
                out.push(gate);
            }
        }
    }
    *gates = out;
    removed
}

/// Drop constant Rz gates with no later gate on their qubit, and Cz gates
/// with no later gate on either qubit; both are invisible to measurement.
fn remove_final_pass(gates: &mut Vec<Gate>, width: usize) -> usize {
    let mut quiet = vec![true; width];
    let mut kept_rev = Vec::with_capacity(gates.len());
    let mut removed = 0;
    for &gate in gates.iter().rev() {
        match gate {
            Gate::Rz(q, expr) if quiet[q] && expr.is_const() => {
                removed += 1;
                continue;
            }
            Gate::Cz(a, b) if quiet[a] && quiet[b] => {
                removed += 1;
                continue;
            }
            _ => {}
        }
        let (a, b) = gate.qubits();
        quiet[a] = false;
        if let Some(b) = b {
            quiet[b] = false;
        }
        kept_rev.push(gate);
    }
    kept_rev.reverse();
    *gates = kept_rev;
    removed
}

fn cancel_double_cz_pass(gates: &mut Vec<Gate>) -> usize {
    let mut out: Vec<Gate> = Vec::with_capacity(gates.len());
    let mut cancelled = 0;
    for &gate in gates.iter() {
        if let Gate::Cz(a, b) = gate {
            if let Some(pos) = out.iter().rposition(|g| g.touches(a) || g.touches(b)) {
                if out[pos] == Gate::Cz(a, b) {
                    out.remove(pos);
                    cancelled += 1;
                    continue;
                }
            }
        }
        out.push(gate);
    }
    *gates = out;
    cancelled
}

// ---------------------------------------------------------------------------
// Public single-rule entry points
// ---------------------------------------------------------------------------

pub fn merge_rz(circuit: &Circuit) -> Circuit {
    let mut gates = circuit.gates().to_vec();
    merge_rz_pass(&mut gates);
    drop_zero_rz_pass(&mut gates);
    rebuild(circuit, gates)
}

pub fn remove_initial(circuit: &Circuit) -> Circuit {
    let mut gates = circuit.gates().to_vec();
    while remove_initial_pass(&mut gates, circuit.width()) > 0 {}
    rebuild(circuit, gates)
}

pub fn remove_final(circuit: &Circuit) -> Circuit {
    let mut gates = circuit.gates().to_vec();
    while remove_final_pass(&mut gates, circuit.width()) > 0 {}
    rebuild(circuit, gates)
}

pub fn cancel_double_cz(circuit: &Circuit) -> Circuit {
    let mut gates = circuit.gates().to_vec();
    while cancel_double_cz_pass(&mut gates) > 0 {}
    rebuild(circuit, gates)
}

fn rebuild(original: &Circuit, gates: Vec<Gate>) -> Circuit {
    Circuit::new(original.width(), gates)
        .expect("rewrite rules preserve circuit validity")
}

// ---------------------------------------------------------------------------
// Segment resynthesis
// ---------------------------------------------------------------------------

struct Resynth {
    out: Vec<Gate>,
    segments_changed: usize,
    oversize_symbolic: usize,
}

/// One maximal run of single-qubit gates on `qubit`, located by the indices
/// of its gates in the original list.
struct Segment {
    qubit: usize,
    indices: Vec<usize>,
    opening: bool,
    closing: bool,
}

/// True when the rewritten gates match the originals up to float roundoff;
/// used to keep original gates (and exact fixpoints) when resynthesis only
/// re-derives the same angles.
fn gates_approx_eq(a: &[Gate], b: &[Gate]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| match (x, y) {
            (Gate::Rz(q1, AngleExpr::Const(v1)), Gate::Rz(q2, AngleExpr::Const(v2))) => {
                q1 == q2 && (v1 - v2).abs() < 1e-12
            }
            _ => x == y,
        })
}

/// Rewrite each single-qubit segment into its minimal Euler form, carrying
/// trailing Z-rotations through Cz gates into the next segment. Rewritten
/// gates are spliced into the position of the segment they replace, so
/// untouched circuits come back bit-identical. Only {Sx, Rz, Cz} circuits
/// are eligible; anything else is returned untouched.
fn resynthesize(gates: &[Gate], width: usize) -> Option<Resynth> {
    if gates
        .iter()
        .any(|g| matches!(g, Gate::H(_) | Gate::Cnot { .. } | Gate::Zz(..)))
    {
        return None;
    }

    // Cut every qubit's timeline at the Cz gates.
    let mut segments: Vec<Segment> = Vec::new();
    let mut open: Vec<Segment> = (0..width)
        .map(|q| Segment {
            qubit: q,
            indices: Vec::new(),
            opening: true,
            closing: false,
        })
        .collect();
    for (idx, gate) in gates.iter().enumerate() {
        match gate {
            Gate::Sx(q) | Gate::Rz(q, _) => open[*q].indices.push(idx),
            Gate::Cz(a, b) => {
                for &q in &[*a, *b] {
                    let finished = std::mem::replace(
                        &mut open[q],
                        Segment {
                            qubit: q,
                            indices: Vec::new(),
                            opening: false,
                            closing: false,
                        },
                    );
                    segments.push(finished);
                }
            }
            _ => unreachable!("filtered above"),
        }
    }
    for q in 0..width {
        open[q].closing = true;
    }
    segments.extend(open);

    // Rewrite segments in per-qubit order (the carry chains qubit-locally),
    // anchoring each emission at the segment's first original gate.
    let mut emission: Vec<Option<Vec<Gate>>> = vec![None; gates.len()];
    let mut drop: Vec<bool> = vec![false; gates.len()];
    let mut carry = vec![0.0f64; width];
    let mut state = Resynth {
        out: Vec::with_capacity(gates.len()),
        segments_changed: 0,
        oversize_symbolic: 0,
    };
    for seg in &segments {
        let q = seg.qubit;
        let originals: Vec<Gate> = seg.indices.iter().map(|&i| gates[i]).collect();
        let symbolic = originals.iter().any(|g| matches!(g, Gate::Rz(_, e) if !e.is_const()));
        let mut emitted: Vec<Gate> = Vec::with_capacity(4);
        let push_rz = |emitted: &mut Vec<Gate>, angle: f64| {
            let angle = normalize_angle(angle);
            if angle.abs() > ZERO_ANGLE_TOL {
                emitted.push(Gate::rz(q, angle));
            }
        };
        if symbolic {
            let sx_count = originals.iter().filter(|g| matches!(g, Gate::Sx(_))).count();
            let rz_count = originals.iter().filter(|g| matches!(g, Gate::Rz(..))).count();
            let rz_bound = if seg.opening { 1 } else { 2 };
            if sx_count > 2 || rz_count > rz_bound {
                state.oversize_symbolic += 1;
            }
            // Materialize a pending carry, then keep the segment untouched.
            push_rz(&mut emitted, carry[q]);
            carry[q] = 0.0;
            emitted.extend_from_slice(&originals);
        } else {
            let mut u = Mat2::rz(carry[q]);
            for g in &originals {
                u = match g {
                    Gate::Sx(_) => u.then(&Mat2::sx()),
                    Gate::Rz(_, AngleExpr::Const(v)) => u.then(&Mat2::rz(*v)),
                    _ => unreachable!("segments hold single-qubit gates"),
                };
            }
            let carry_out;
            if let Some(theta) = mat2::as_rz(&u) {
                // Pure Z-rotation: invisible after |0⟩ and before measurement.
                carry_out = if seg.opening || seg.closing { 0.0 } else { theta };
            } else if let Some((a, b)) = mat2::as_rz_sx_rz(&u) {
                if !seg.opening {
                    push_rz(&mut emitted, b);
                }
                emitted.push(Gate::Sx(q));
                carry_out = if seg.closing { 0.0 } else { a };
            } else {
                let (phi, alpha, lam) = mat2::as_zxzxz(&u);
                if !seg.opening {
                    push_rz(&mut emitted, lam);
                }
                emitted.push(Gate::Sx(q));
                push_rz(&mut emitted, alpha);
                emitted.push(Gate::Sx(q));
                carry_out = if seg.closing { 0.0 } else { phi };
            }
            let had_carry = carry[q].abs() > ZERO_ANGLE_TOL;
            carry[q] = normalize_angle(carry_out);
            if !had_carry && carry[q].abs() <= ZERO_ANGLE_TOL && gates_approx_eq(&emitted, &originals) {
                emitted = originals.clone();
            }
        }
        if emitted != originals {
            state.segments_changed += 1;
        }
        for &i in &seg.indices {
            drop[i] = true;
        }
        if let Some(&anchor) = seg.indices.first() {
            emission[anchor] = Some(emitted);
        } else {
            debug_assert!(emitted.is_empty(), "emission for an empty segment");
        }
    }

    for (idx, &gate) in gates.iter().enumerate() {
        if let Some(emitted) = emission[idx].take() {
            state.out.extend(emitted);
        } else if !drop[idx] {
            state.out.push(gate);
        }
    }
    Some(state)
}

/// Apply every rule to fixpoint; on fully-constant {Sx, Rz, Cz} circuits
/// also normalize each segment to its minimal Euler form. The output is
/// observationally equivalent to the input and never uses more pulses.
pub fn optimize(circuit: &Circuit) -> (Circuit, RewriteReport) {
    let mut report = RewriteReport {
        pulses_before: circuit.pulse_count(),
        ..Default::default()
    };
    let mut gates = circuit.gates().to_vec();
    let width = circuit.width();
    // Alternate structural fixpoint and resynthesis until stable. Each pass
    // preserves semantics, so the round cap only bounds work.
    for _ in 0..32 {
        loop {
            let mut changed = 0;
            let n = remove_initial_pass(&mut gates, width);
            report.removed_initial += n;
            changed += n;
            let n = remove_final_pass(&mut gates, width);
            report.removed_final += n;
            changed += n;
            let n = cancel_double_cz_pass(&mut gates);
            report.cancelled_cz += n;
            changed += n;
            let n = merge_rz_pass(&mut gates);
            report.merged_rz += n;
            changed += n;
            let n = drop_zero_rz_pass(&mut gates);
            report.dropped_zero_rz += n;
            changed += n;
            if changed == 0 {
                break;
            }
        }
        let before = gates.clone();
        let oversize = match resynthesize(&gates, width) {
            Some(resynth) => {
                gates = resynth.out;
                report.resynthesized_segments += resynth.segments_changed;
                resynth.oversize_symbolic
            }
            None => 0,
        };
        if gates == before {
            report.oversize_symbolic_segments = oversize;
            break;
        }
    }
    report.pulses_after = crate::circuit::pulse_count(&gates);
    (rebuild(circuit, gates), report)
}

// ---------------------------------------------------------------------------
// Observational equivalence
// ---------------------------------------------------------------------------

/// Outcome of a randomized equivalence check.
#[derive(Debug, Clone)]
pub struct EquivalenceCheck {
    pub equivalent: bool,
    /// First binding whose distributions disagreed, with the observed
    /// total-variation distance.
    pub counterexample: Option<(Vec<f64>, Vec<f64>, f64)>,
}

/// Compare two circuits on `trials` random (ω, θ) bindings. Distributions
/// must agree within 1e-9 total variation on every binding.
pub fn verify_equivalence(
    a: &Circuit,
    b: &Circuit,
    trials: usize,
    seed: u64,
) -> Result<EquivalenceCheck> {
    if a.width() != b.width() {
        return Err(Error::DimensionMismatch {
            what: "circuit width",
            expected: a.width(),
            got: b.width(),
        });
    }
    if a.num_inputs() != b.num_inputs() {
        return Err(Error::DimensionMismatch {
            what: "input slot count",
            expected: a.num_inputs(),
            got: b.num_inputs(),
        });
    }
    if a.num_params() != b.num_params() {
        return Err(Error::DimensionMismatch {
            what: "parameter slot count",
            expected: a.num_params(),
            got: b.num_params(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rounds = trials.max(1);
    for _ in 0..rounds {
        let omega: Vec<f64> = (0..a.num_inputs())
            .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let theta: Vec<f64> = (0..a.num_params())
            .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let da = simulator::distribution(&a.bind(&omega, &theta)?)?;
        let db = simulator::distribution(&b.bind(&omega, &theta)?)?;
        let tv = da.tv_distance(&db);
        if tv > EQUIV_TOL {
            return Ok(EquivalenceCheck {
                equivalent: false,
                counterexample: Some((omega, theta, tv)),
            });
        }
    }
    Ok(EquivalenceCheck {
        equivalent: true,
        counterexample: None,
    })
}
