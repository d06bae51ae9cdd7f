//! Shared test oracles: a dense matrix-product simulator built from
//! Kronecker expansions (independent of the library's in-place amplitude
//! updates), plus random-circuit generators.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

use qvc_core::{AngleExpr, BoundCircuit, Circuit, Gate};

type Matrix = Vec<Vec<Complex64>>;

fn zeros(dim: usize) -> Matrix {
    vec![vec![Complex64::new(0.0, 0.0); dim]; dim]
}

fn identity(dim: usize) -> Matrix {
    let mut m = zeros(dim);
    for i in 0..dim {
        m[i][i] = Complex64::new(1.0, 0.0);
    }
    m
}

fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, rb) = (a.len(), b.len());
    let mut out = zeros(ra * rb);
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn single(gate: [[Complex64; 2]; 2]) -> Matrix {
    vec![gate[0].to_vec(), gate[1].to_vec()]
}

fn sx_matrix() -> Matrix {
    let m = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let mi = Complex64::new(0.0, -FRAC_1_SQRT_2);
    single([[m, mi], [mi, m]])
}

fn rz_matrix(phi: f64) -> Matrix {
    single([
        [Complex64::from_polar(1.0, -phi / 2.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, phi / 2.0)],
    ])
}

fn h_matrix() -> Matrix {
    let m = Complex64::new(FRAC_1_SQRT_2, 0.0);
    single([[m, m], [m, -m]])
}

/// Expand a one-qubit matrix to the full register; qubit 0 is the leftmost
/// (most significant) factor.
fn expand_single(gate: &Matrix, qubit: usize, width: usize) -> Matrix {
    let mut full = identity(1);
    for q in 0..width {
        let factor = if q == qubit { gate.clone() } else { identity(2) };
        full = kron(&full, &factor);
    }
    full
}

fn bit(index: usize, qubit: usize, width: usize) -> bool {
    index >> (width - 1 - qubit) & 1 == 1
}

fn expand_gate(gate: &Gate, width: usize) -> Matrix {
    let dim = 1 << width;
    match *gate {
        Gate::Sx(q) => expand_single(&sx_matrix(), q, width),
        Gate::H(q) => expand_single(&h_matrix(), q, width),
        Gate::Rz(q, AngleExpr::Const(v)) => expand_single(&rz_matrix(v), q, width),
        Gate::Rz(..) => panic!("oracle needs bound angles"),
        Gate::Cz(a, b) => {
            let mut m = identity(dim);
            for i in 0..dim {
                if bit(i, a, width) && bit(i, b, width) {
                    m[i][i] = -m[i][i];
                }
            }
            m
        }
        Gate::Zz(a, b) => {
            let mut m = identity(dim);
            for i in 0..dim {
                let phase = if bit(i, a, width) == bit(i, b, width) {
                    -FRAC_PI_4
                } else {
                    FRAC_PI_4
                };
                m[i][i] = Complex64::from_polar(1.0, phase);
            }
            m
        }
        Gate::Cnot { control, target } => {
            let mut m = zeros(dim);
            for i in 0..dim {
                let j = if bit(i, control, width) {
                    i ^ (1 << (width - 1 - target))
                } else {
                    i
                };
                m[j][i] = Complex64::new(1.0, 0.0);
            }
            m
        }
    }
}

fn matvec(m: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Full dense matrix-product evaluation of a bound circuit on |0…0⟩.
pub fn oracle_statevector(bound: &BoundCircuit) -> Vec<Complex64> {
    let dim = 1usize << bound.width();
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    psi[0] = Complex64::new(1.0, 0.0);
    for gate in bound.gates() {
        let full = expand_gate(gate, bound.width());
        psi = matvec(&full, &psi);
    }
    psi
}

pub fn oracle_probabilities(bound: &BoundCircuit) -> Vec<f64> {
    oracle_statevector(bound).iter().map(|a| a.norm_sqr()).collect()
}

pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Random constant-angle {Sx, Rz, Cz} circuit.
pub fn random_const_circuit(rng: &mut ChaCha8Rng, width: usize, max_gates: usize) -> Circuit {
    let n = rng.gen_range(0..=max_gates);
    let mut gates = Vec::with_capacity(n);
    for _ in 0..n {
        let g = match rng.gen_range(0..4) {
            0 | 1 => {
                if rng.gen_bool(0.5) {
                    Gate::Sx(rng.gen_range(0..width))
                } else {
                    Gate::rz(rng.gen_range(0..width), rng.gen_range(-PI..PI))
                }
            }
            2 => Gate::Sx(rng.gen_range(0..width)),
            _ => {
                if width < 2 {
                    Gate::Sx(0)
                } else {
                    let a = rng.gen_range(0..width);
                    let mut b = rng.gen_range(0..width);
                    while b == a {
                        b = rng.gen_range(0..width);
                    }
                    Gate::cz(a, b)
                }
            }
        };
        gates.push(g);
    }
    Circuit::new(width, gates).expect("random circuit is valid")
}

/// Random circuit in the experiment style: alternating columns of φ-boxes on
/// every qubit and entangling Cz gates, so every Cz neighborhood is a box.
pub fn random_box_circuit(rng: &mut ChaCha8Rng, width: usize, columns: usize) -> Circuit {
    let mut gates = Vec::new();
    for col in 0..columns {
        if col > 0 {
            let a = rng.gen_range(0..width);
            let mut b = rng.gen_range(0..width);
            while b == a {
                b = rng.gen_range(0..width);
            }
            gates.push(Gate::cz(a, b));
        }
        for q in 0..width {
            gates.extend_from_slice(&qvc_core::compact_gate(
                q,
                AngleExpr::Const(rng.gen_range(-PI..PI)),
            ));
        }
    }
    Circuit::new(width, gates).expect("box circuit is valid")
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Maximal-form segment bounds: per qubit at most sx·Rz·sx before its first
/// Cz, and at most Rz·sx·Rz·sx between and after Cz gates.
pub fn satisfies_maximal_form(circuit: &Circuit) -> bool {
    let width = circuit.width();
    let mut seen_cz = vec![false; width];
    let mut sx_count = vec![0usize; width];
    let mut rz_count = vec![0usize; width];
    let check = |opening: bool, sx: usize, rz: usize| -> bool {
        if opening {
            sx <= 2 && rz <= 1
        } else {
            sx <= 2 && rz <= 2
        }
    };
    for gate in circuit.gates() {
        match gate {
            Gate::Sx(q) => sx_count[*q] += 1,
            Gate::Rz(q, _) => rz_count[*q] += 1,
            Gate::Cz(a, b) => {
                for &q in &[*a, *b] {
                    if !check(!seen_cz[q], sx_count[q], rz_count[q]) {
                        return false;
                    }
                    seen_cz[q] = true;
                    sx_count[q] = 0;
                    rz_count[q] = 0;
                }
            }
            _ => return false,
        }
    }
    (0..width).all(|q| check(!seen_cz[q], sx_count[q], rz_count[q]))
}
