//! Two-component spinors and Pauli matrix action.

use num_complex::Complex64;

use crate::vec3::Vec3;

pub type Spinor = [Complex64; 2];

pub const ZERO: Spinor = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
pub const UP: Spinor = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
pub const DOWN: Spinor = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];

/// (σ·v)ψ for a real vector v.
#[inline]
pub fn sigma_dot(v: Vec3, psi: Spinor) -> Spinor {
    let [a, b] = psi;
    let vm = Complex64::new(v[0], -v[1]);
    let vp = Complex64::new(v[0], v[1]);
    [a * v[2] + vm * b, vp * a - b * v[2]]
}

/// -i(σ·h)ψ, the action of σ·H when H = -i h with h real.
#[inline]
pub fn sigma_dot_h(h: Vec3, psi: Spinor) -> Spinor {
    let s = sigma_dot(h, psi);
    [mul_neg_i(s[0]), mul_neg_i(s[1])]
}

#[inline]
pub fn mul_neg_i(z: Complex64) -> Complex64 {
    Complex64::new(z.im, -z.re)
}

#[inline]
pub fn scale(s: f64, psi: Spinor) -> Spinor {
    [psi[0] * s, psi[1] * s]
}

#[inline]
pub fn add(a: Spinor, b: Spinor) -> Spinor {
    [a[0] + b[0], a[1] + b[1]]
}

/// ⟨a, b⟩, antilinear in the first slot.
#[inline]
pub fn inner(a: Spinor, b: Spinor) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

#[inline]
pub fn norm_sqr(a: Spinor) -> f64 {
    a[0].norm_sqr() + a[1].norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::{cross, dot};

    #[test]
    fn pauli_product_rule() {
        // (σ·a)(σ·b) = a·b + iσ·(a×b)
        let a = [0.3, -0.8, 1.1];
        let b = [-1.4, 0.2, 0.5];
        for psi in [UP, DOWN, [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.9)]] {
            let lhs = sigma_dot(a, sigma_dot(b, psi));
            let c = sigma_dot(cross(a, b), psi);
            let i = Complex64::i();
            for s in 0..2 {
                let rhs = psi[s] * dot(a, b) + i * c[s];
                assert!((lhs[s] - rhs).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn sigma_dot_is_hermitian() {
        let v = [0.4, 1.2, -0.6];
        let x = [Complex64::new(0.1, 0.7), Complex64::new(-0.5, 0.2)];
        let y = [Complex64::new(1.1, -0.3), Complex64::new(0.4, 0.4)];
        let l = inner(x, sigma_dot(v, y));
        let r = inner(sigma_dot(v, x), y);
        assert!((l - r).norm() < 1e-15);
    }
}
