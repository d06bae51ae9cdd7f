//! 2x2 unitary arithmetic and Z-X-Z Euler decompositions used by segment
//! resynthesis and gate-set translation. Everything here works up to global
//! phase, which is all the measurement can see.

use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub(crate) const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Mat2 {
        Mat2([
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        ])
    }

    pub fn sx() -> Mat2 {
        let m = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let mi = Complex64::new(0.0, -FRAC_1_SQRT_2);
        Mat2([[m, mi], [mi, m]])
    }

    pub fn rz(phi: f64) -> Mat2 {
        Mat2([
            [Complex64::from_polar(1.0, -phi / 2.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, phi / 2.0)],
        ])
    }

    pub fn h() -> Mat2 {
        let m = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Mat2([[m, m], [m, -m]])
    }

    /// self · rhs (matrix product; rhs is applied first).
    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }

    /// Append a gate in circuit order: returns gate_matrix · self.
    pub fn then(&self, gate: &Mat2) -> Mat2 {
        gate.mul(self)
    }

    pub fn is_diagonal(&self) -> bool {
        self.0[0][1].norm() < TOL && self.0[1][0].norm() < TOL
    }

    /// True when every entry has magnitude 1/√2, the signature of
    /// Rz(a)·sx·Rz(b).
    pub fn is_single_sx_form(&self) -> bool {
        (self.0[0][0].norm() - FRAC_1_SQRT_2).abs() < TOL
    }

    pub fn phase_equal(&self, other: &Mat2, tol: f64) -> bool {
        // Normalize on the largest entry of `other`.
        let mut bi = (0, 0);
        let mut best = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                if other.0[i][j].norm() > best {
                    best = other.0[i][j].norm();
                    bi = (i, j);
                }
            }
        }
        let ours = self.0[bi.0][bi.1];
        if ours.norm() < tol {
            return false;
        }
        let g = ours / other.0[bi.0][bi.1];
        if (g.norm() - 1.0).abs() > tol {
            return false;
        }
        for i in 0..2 {
            for j in 0..2 {
                if (self.0[i][j] - g * other.0[i][j]).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Wrap into (−π, π].
pub(crate) fn normalize_angle(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = x.rem_euclid(two_pi);
    if r > PI {
        r - two_pi
    } else {
        r
    }
}

/// Angle θ with U ≡ Rz(θ), for diagonal U.
pub(crate) fn as_rz(u: &Mat2) -> Option<f64> {
    if !u.is_diagonal() {
        return None;
    }
    Some(normalize_angle(u.0[1][1].arg() - u.0[0][0].arg()))
}

/// (a, b) with U ≡ Rz(a)·sx·Rz(b), when U is in single-sx form.
///
/// The entry-phase relations fix a+b and a−b only modulo 2π; halving leaves
/// a shared ±π ambiguity, resolved by checking the reconstruction.
pub(crate) fn as_rz_sx_rz(u: &Mat2) -> Option<(f64, f64)> {
    if !u.is_single_sx_form() {
        return None;
    }
    let sum = u.0[1][1].arg() - u.0[0][0].arg();
    let diff = u.0[1][0].arg() - u.0[0][1].arg();
    let a = (sum + diff) / 2.0;
    let b = (sum - diff) / 2.0;
    for shift in [0.0, PI] {
        let (a, b) = (normalize_angle(a + shift), normalize_angle(b + shift));
        let rebuilt = Mat2::rz(a).mul(&Mat2::sx()).mul(&Mat2::rz(b));
        if rebuilt.phase_equal(u, 1e-7) {
            return Some((a, b));
        }
    }
    None
}

/// (φ, α, λ) with U ≡ Rz(φ)·sx·Rz(α)·sx·Rz(λ); exists for every unitary.
/// α is kept in [0, π]; at the gimbal points (α ≡ 0 mod π) λ is set to 0 and
/// the whole Z-rotation folds into φ.
pub(crate) fn as_zxzxz(u: &Mat2) -> (f64, f64, f64) {
    let alpha = 2.0 * u.0[0][0].norm().atan2(u.0[0][1].norm());
    let s = (alpha / 2.0).sin();
    let c = (alpha / 2.0).cos();
    let candidates: Vec<(f64, f64)> = if c < 1e-9 {
        // diagonal: only φ+λ matters
        vec![(normalize_angle(u.0[1][1].arg() - u.0[0][0].arg() - PI), 0.0)]
    } else if s < 1e-9 {
        // antidiagonal: only φ−λ matters
        vec![(normalize_angle(u.0[1][0].arg() - u.0[0][1].arg()), 0.0)]
    } else {
        let sum = u.0[1][1].arg() - u.0[0][0].arg() - PI;
        let diff = u.0[1][0].arg() - u.0[0][1].arg();
        let phi = (sum + diff) / 2.0;
        let lam = (sum - diff) / 2.0;
        vec![
            (normalize_angle(phi), normalize_angle(lam)),
            (normalize_angle(phi + PI), normalize_angle(lam + PI)),
        ]
    };
    for (phi, lam) in candidates {
        let rebuilt = Mat2::rz(phi)
            .mul(&Mat2::sx())
            .mul(&Mat2::rz(alpha))
            .mul(&Mat2::sx())
            .mul(&Mat2::rz(lam));
        if rebuilt.phase_equal(u, 1e-7) {
            return (phi, alpha, lam);
        }
    }
    // Unreachable for unitary input; keep a loud failure for debug builds.
    panic!("zxzxz decomposition failed for a non-unitary matrix");
}
