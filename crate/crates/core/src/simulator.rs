//! Exact statevector evaluation of bound circuits, exact outcome
//! distributions and seeded shot sampling.
//!
//! Bit-order convention: a basis index `b` is read as a bitstring whose
//! leftmost character is qubit 0, i.e. qubit `q` occupies bit `width-1-q`
//! of the index.
//!
//! Gate matrices:
//!   Sx  = Rx(π/2) = (1/√2) [[1, -i], [-i, 1]]
//!   Rz(φ) = diag(e^{-iφ/2}, e^{+iφ/2})
//!   Cz  = diag(1, 1, 1, -1)
//!   H   = (1/√2) [[1, 1], [1, -1]]
//!   Zz  = diag(e^{-iπ/4}, e^{iπ/4}, e^{iπ/4}, e^{-iπ/4})
//!
//! Sampling draws from the exact 2^N outcome table by inverse CDF using a
//! ChaCha8 stream seeded from a caller-supplied `u64`, so shot counts are
//! reproducible across platforms.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{BoundCircuit, Gate};
use crate::error::{Error, Result};

/// Widest circuit the dense simulator accepts (16 M amplitudes).
pub const MAX_QUBITS: usize = 24;

/// Dense complex amplitudes over the computational basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    width: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn into_distribution(self) -> Distribution {
        Distribution {
            width: self.width,
            probabilities: self.amplitudes.iter().map(|a| a.norm_sqr()).collect(),
        }
    }
}

/// Exact outcome probabilities per bitstring.
#[derive(Debug, Clone)]
pub struct Distribution {
    width: usize,
    probabilities: Vec<f64>,
}

impl Distribution {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Probability of a bitstring given as text, e.g. `"01"` (leftmost
    /// character is qubit 0).
    pub fn prob(&self, bits: &str) -> Result<f64> {
        let idx = index_of_bitstring(bits, self.width)?;
        Ok(self.probabilities[idx])
    }

    /// Total-variation distance (1/2)·Σ|p_i − q_i|.
    pub fn tv_distance(&self, other: &Distribution) -> f64 {
        debug_assert_eq!(self.width, other.width);
        0.5 * self
            .probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>()
    }
}

/// Occurrence counts of a finite-shot run.
#[derive(Debug, Clone)]
pub struct ShotCounts {
    width: usize,
    shots: u64,
    counts: Vec<u64>,
}

impl ShotCounts {
    /// Assemble counts produced outside the simulator (e.g. parsed from a
    /// hardware run). `counts` is indexed like a Distribution.
    pub fn from_counts(width: usize, counts: Vec<u64>) -> Result<ShotCounts> {
        if counts.len() != 1 << width {
            return Err(Error::DimensionMismatch {
                what: "outcome table",
                expected: 1 << width,
                got: counts.len(),
            });
        }
        let shots = counts.iter().sum();
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        Ok(ShotCounts {
            width,
            shots,
            counts,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    /// Ĉ(s) for the bitstring `s`.
    pub fn count(&self, bits: &str) -> Result<u64> {
        Ok(self.counts[index_of_bitstring(bits, self.width)?])
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Empirical frequencies Ĉ(s)/n as a Distribution.
    pub fn frequencies(&self) -> Distribution {
        let n = self.shots as f64;
        Distribution {
            width: self.width,
            probabilities: self.counts.iter().map(|&c| c as f64 / n).collect(),
        }
    }

    /// Iterate `(bitstring, count)` over outcomes that occurred.
    pub fn iter(&self) -> impl Iterator<Item = (String, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (bitstring_of_index(i, self.width), c))
    }
}

pub fn index_of_bitstring(bits: &str, width: usize) -> Result<usize> {
    if bits.len() != width {
        return Err(Error::DimensionMismatch {
            what: "bitstring length",
            expected: width,
            got: bits.len(),
        });
    }
    let mut idx = 0usize;
    for ch in bits.chars() {
        idx <<= 1;
        match ch {
            '0' => {}
            '1' => idx |= 1,
            other => {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("invalid bitstring character `{other}`"),
                })
            }
        }
    }
    Ok(idx)
}

pub fn bitstring_of_index(index: usize, width: usize) -> String {
    (0..width)
        .map(|q| if index >> (width - 1 - q) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Apply every gate in order to |0…0⟩.
pub fn statevector(bound: &BoundCircuit) -> Result<StateVector> {
    let width = bound.width();
    if width > MAX_QUBITS {
        return Err(Error::WidthExceedsCap {
            width,
            cap: MAX_QUBITS,
        });
    }
    let dim = 1usize << width;
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    amps[0] = Complex64::new(1.0, 0.0);
    for gate in bound.gates() {
        apply_gate(&mut amps, width, gate)?;
    }
    Ok(StateVector {
        width,
        amplitudes: amps,
    })
}

/// Exact outcome distribution of a bound circuit.
pub fn distribution(bound: &BoundCircuit) -> Result<Distribution> {
    Ok(statevector(bound)?.into_distribution())
}

/// Draw `shots` independent outcomes from the exact distribution.
pub fn sample(bound: &BoundCircuit, shots: u64, seed: u64) -> Result<ShotCounts> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let dist = distribution(bound)?;
    Ok(sample_distribution(&dist, shots, seed))
}

/// Sample a precomputed distribution; used when the same circuit is shot
/// repeatedly.
pub fn sample_distribution(dist: &Distribution, shots: u64, seed: u64) -> ShotCounts {
    let mut cumulative = Vec::with_capacity(dist.probabilities.len());
    let mut acc = 0.0;
    for &p in &dist.probabilities {
        acc += p;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; dist.probabilities.len()];
    let last = counts.len() - 1;
    for _ in 0..shots {
        let u: f64 = rng.gen();
        let idx = cumulative.partition_point(|&c| c <= u).min(last);
        counts[idx] += 1;
    }
    ShotCounts {
        width: dist.width,
        shots,
        counts,
    }
}

fn apply_gate(amps: &mut [Complex64], width: usize, gate: &Gate) -> Result<()> {
    match *gate {
        Gate::Sx(q) => {
            let m = FRAC_1_SQRT_2;
            let mi = Complex64::new(0.0, -m);
            apply_one_qubit(amps, width, q, |a0, a1| (m * a0 + mi * a1, mi * a0 + m * a1));
        }
        Gate::H(q) => {
            let m = FRAC_1_SQRT_2;
            apply_one_qubit(amps, width, q, |a0, a1| (m * (a0 + a1), m * (a0 - a1)));
        }
        Gate::Rz(q, angle) => {
            let phi = angle.as_const().ok_or(Error::UnboundAngles)?;
            let lo = Complex64::from_polar(1.0, -phi / 2.0);
            let hi = Complex64::from_polar(1.0, phi / 2.0);
            let mask = qubit_mask(width, q);
            for (i, amp) in amps.iter_mut().enumerate() {
                *amp *= if i & mask == 0 { lo } else { hi };
            }
        }
        Gate::Cz(a, b) => {
            let mask = qubit_mask(width, a) | qubit_mask(width, b);
            for (i, amp) in amps.iter_mut().enumerate() {
                if i & mask == mask {
                    *amp = -*amp;
                }
            }
        }
        Gate::Zz(a, b) => {
            let ma = qubit_mask(width, a);
            let mb = qubit_mask(width, b);
            let same = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
            let diff = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
            for (i, amp) in amps.iter_mut().enumerate() {
                let equal_bits = (i & ma == ma) == (i & mb == mb);
                *amp *= if equal_bits { same } else { diff };
            }
        }
        Gate::Cnot { control, target } => {
            let mc = qubit_mask(width, control);
            let mt = qubit_mask(width, target);
            for i in 0..amps.len() {
                if i & mc == mc && i & mt == 0 {
                    amps.swap(i, i | mt);
                }
            }
        }
    }
    Ok(())
}

#[inline]
fn qubit_mask(width: usize, qubit: usize) -> usize {
    1 << (width - 1 - qubit)
}

#[inline]
fn apply_one_qubit(
    amps: &mut [Complex64],
    width: usize,
    qubit: usize,
    f: impl Fn(Complex64, Complex64) -> (Complex64, Complex64),
) {
    let mask = qubit_mask(width, qubit);
    for i in 0..amps.len() {
        if i & mask == 0 {
            let j = i | mask;
            let (n0, n1) = f(amps[i], amps[j]);
            amps[i] = n0;
            amps[j] = n1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{compact_gate, AngleExpr, Circuit};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn bound(width: usize, gates: Vec<Gate>) -> BoundCircuit {
        Circuit::new(width, gates).unwrap().try_into_bound().unwrap()
    }

    #[test]
    fn empty_circuit_stays_in_zero() {
        let d = distribution(&bound(2, vec![])).unwrap();
        assert_eq!(d.probabilities(), &[1.0, 0.0, 0.0, 0.0]);
        assert_abs_diff_eq!(d.prob("00").unwrap(), 1.0);
    }

    #[test]
    fn single_sx_is_unbiased() {
        let d = distribution(&bound(1, vec![Gate::Sx(0)])).unwrap();
        assert_abs_diff_eq!(d.prob("0").unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.prob("1").unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn cz_right_after_initialization_is_inert() {
        let with = distribution(&bound(2, vec![Gate::Sx(0), Gate::cz(0, 1)])).unwrap();
        let without = distribution(&bound(2, vec![Gate::Sx(0)])).unwrap();
        assert!(with.tv_distance(&without) < 1e-12);
    }

    #[test]
    fn phi_box_at_zero_flips_the_qubit() {
        // sx·Rz(0)·sx ≡ X up to global phase, so P(1) = 1.
        let gates = compact_gate(0, AngleExpr::Const(0.0)).to_vec();
        let d = distribution(&bound(1, gates)).unwrap();
        assert_abs_diff_eq!(d.prob("1").unwrap(), 1.0, epsilon = 1e-12);
        // sx·Rz(π)·sx ≡ Z, which leaves |0⟩ alone.
        let gates = compact_gate(0, AngleExpr::Const(PI)).to_vec();
        let d = distribution(&bound(1, gates)).unwrap();
        assert_abs_diff_eq!(d.prob("1").unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn trailing_rz_leaves_distribution_unchanged() {
        let base = vec![Gate::Sx(0), Gate::rz(0, 0.4), Gate::Sx(1), Gate::cz(0, 1), Gate::Sx(0)];
        let mut extended = base.clone();
        extended.push(Gate::rz(1, 2.3));
        let d0 = distribution(&bound(2, base)).unwrap();
        let d1 = distribution(&bound(2, extended)).unwrap();
        assert!(d0.tv_distance(&d1) < 1e-12);
    }

    #[test]
    fn qubit_zero_is_leftmost_bit() {
        // X on qubit 0 of a 2-qubit register must produce "10", index 2.
        let gates = compact_gate(0, AngleExpr::Const(0.0)).to_vec();
        let d = distribution(&bound(2, gates)).unwrap();
        assert_abs_diff_eq!(d.prob("10").unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.probabilities()[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bell_pair_from_sx_control_and_cnot() {
        let gates = vec![Gate::Sx(0), Gate::Cnot { control: 0, target: 1 }];
        let d = distribution(&bound(2, gates)).unwrap();
        assert_abs_diff_eq!(d.prob("00").unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(d.prob("11").unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn hadamard_splits_evenly() {
        let d = distribution(&bound(1, vec![Gate::H(0)])).unwrap();
        assert_abs_diff_eq!(d.prob("0").unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zz_with_local_corrections_matches_cz() {
        use std::f64::consts::FRAC_PI_2;
        // Random pre-state, then Cz vs Rz(-π/2)⊗Rz(-π/2)·Zz.
        let pre = vec![Gate::Sx(0), Gate::rz(0, 0.83), Gate::Sx(1), Gate::rz(1, -1.91), Gate::Sx(1)];
        let mut a = pre.clone();
        a.push(Gate::cz(0, 1));
        let mut b = pre;
        b.push(Gate::rz(0, -FRAC_PI_2));
        b.push(Gate::rz(1, -FRAC_PI_2));
        b.push(Gate::zz(0, 1));
        let da = distribution(&bound(2, a)).unwrap();
        let db = distribution(&bound(2, b)).unwrap();
        assert!(da.tv_distance(&db) < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_and_counts_sum() {
        let c = bound(2, vec![Gate::Sx(0), Gate::cz(0, 1), Gate::Sx(1)]);
        let a = sample(&c, 300, 9).unwrap();
        let b = sample(&c, 300, 9).unwrap();
        assert_eq!(a.counts(), b.counts());
        assert_eq!(a.counts().iter().sum::<u64>(), 300);
        let other = sample(&c, 300, 10).unwrap();
        assert_ne!(a.counts(), other.counts());
    }

    #[test]
    fn single_outcome_distribution_counts_everything() {
        let c = bound(2, vec![]);
        let counts = sample(&c, 300, 1).unwrap();
        assert_eq!(counts.count("00").unwrap(), 300);
    }

    #[test]
    fn zero_shots_is_an_error() {
        let c = bound(1, vec![]);
        assert!(matches!(sample(&c, 0, 0), Err(Error::ZeroShots)));
    }

    #[test]
    fn sx_sampling_matches_binomial_bound() {
        // |Ĉ(0)/n − 0.5| < 0.002 at n = 10^6 (≈4σ).
        let c = bound(1, vec![Gate::Sx(0)]);
        let counts = sample(&c, 1_000_000, 42).unwrap();
        let freq = counts.count("0").unwrap() as f64 / 1e6;
        assert!((freq - 0.5).abs() < 0.002, "freq = {freq}");
    }

    #[test]
    fn width_cap_enforced() {
        let c = BoundCircuit::from_parts(MAX_QUBITS + 1, vec![]);
        assert!(matches!(
            statevector(&c),
            Err(Error::WidthExceedsCap { .. })
        ));
    }

    #[test]
    fn ten_qubit_circuits_simulate() {
        let gates: Vec<Gate> = (0..10)
            .flat_map(|q| vec![Gate::Sx(q), Gate::rz(q, 0.1 * q as f64)])
            .chain((0..9).map(|q| Gate::cz(q, q + 1)))
            .collect();
        let sv = statevector(&bound(10, gates)).unwrap();
        assert_eq!(sv.amplitudes().len(), 1024);
        assert!((sv.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bitstring_helpers_round_trip() {
        for (idx, s) in [(0, "000"), (1, "001"), (4, "100"), (6, "110")] {
            assert_eq!(bitstring_of_index(idx, 3), s);
            assert_eq!(index_of_bitstring(s, 3).unwrap(), idx);
        }
    }
}
