//! Index maps of the spin ⊗ (n ≤ 2)-photon truncated Fock space.
//!
//! Layout: `[sector 0 | sector 1 | sector 2]`, spin index fastest. Sector 1
//! holds one amplitude per mode; sector 2 one per unordered pair a ≤ b in
//! row-major order. Pair coefficients are with respect to the orthonormal
//! symmetric states: `c_ab = √2 ψ(a,b)` for a < b and `c_aa = ψ(a,a)`.

use num_complex::Complex64;

pub type Amplitudes = Vec<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct FockBasis {
    m: usize,
    include_diagonal: bool,
    row_start: Vec<usize>,
    n_pairs: usize,
}

impl FockBasis {
    pub fn new(m: usize, include_diagonal: bool) -> Self {
        let mut row_start = Vec::with_capacity(m + 1);
        let mut acc = 0;
        for a in 0..m {
            row_start.push(acc);
            acc += if include_diagonal { m - a } else { m - a - 1 };
        }
        row_start.push(acc);
        FockBasis {
            m,
            include_diagonal,
            row_start,
            n_pairs: acc,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.m
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn include_diagonal(&self) -> bool {
        self.include_diagonal
    }

    pub fn dim(&self) -> usize {
        2 + 2 * self.m + 2 * self.n_pairs
    }

    pub fn sector_dim(&self, n: usize) -> usize {
        match n {
            0 => 2,
            1 => 2 * self.m,
            2 => 2 * self.n_pairs,
            _ => 0,
        }
    }

    pub fn sector_range(&self, n: usize) -> std::ops::Range<usize> {
        let o1 = 2;
        let o2 = 2 + 2 * self.m;
        match n {
            0 => 0..2,
            1 => o1..o2,
            2 => o2..self.dim(),
            _ => self.dim()..self.dim(),
        }
    }

    /// Position of the pair {a, b} within sector 2 (pair units), if present.
    #[inline]
    pub fn pair_index(&self, a: usize, b: usize) -> Option<usize> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if b >= self.m {
            return None;
        }
        if self.include_diagonal {
            Some(self.row_start[a] + (b - a))
        } else if a == b {
            None
        } else {
            Some(self.row_start[a] + (b - a - 1))
        }
    }

    /// Pair units of row `a` (pairs {a, b} with b ≥ a, or b > a).
    #[inline]
    pub fn row(&self, a: usize) -> std::ops::Range<usize> {
        self.row_start[a]..self.row_start[a + 1]
    }

    /// First partner index of row `a`.
    #[inline]
    pub fn row_first_partner(&self, a: usize) -> usize {
        if self.include_diagonal {
            a
        } else {
            a + 1
        }
    }

    /// All pairs (a, b) in storage order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.m).flat_map(move |a| (self.row_first_partner(a)..self.m).map(move |b| (a, b)))
    }

    pub fn zeros(&self) -> Amplitudes {
        vec![Complex64::new(0.0, 0.0); self.dim()]
    }

    /// Flat index of (spin s, vacuum).
    pub fn index0(&self, s: usize) -> usize {
        s
    }

    /// Flat index of (spin s, one photon in mode m).
    pub fn index1(&self, m: usize, s: usize) -> usize {
        2 + 2 * m + s
    }

    /// Flat index of (spin s, photon pair {a, b}).
    pub fn index2(&self, a: usize, b: usize, s: usize) -> Option<usize> {
        self.pair_index(a, b).map(|p| 2 + 2 * self.m + 2 * p + s)
    }
}

/// ⟨x, y⟩ with a fixed summation order.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b)
}

pub fn norm_sqr(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}
