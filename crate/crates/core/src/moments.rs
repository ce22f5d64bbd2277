//! Exact Gaussian moments in cylindrical coordinates.
//!
//! Every mode profile is a polynomial in `(r, z)` times
//! `exp(-(u r^2 + v z^2) / 2)`, so energies and density overlaps reduce to
//! sums of
//!
//! ```text
//! ∫ r^i z^j exp(-(U r^2 + V z^2)) 2π r dr dz
//!     = π Γ((i+2)/2) / U^{(i+2)/2} · Γ((j+1)/2) / V^{(j+1)/2}    (j even)
//! ```

use std::f64::consts::PI;

/// Sparse polynomial `Σ c r^i z^j`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    terms: Vec<(u32, u32, f64)>,
}

impl Poly {
    pub fn constant(c: f64) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn monomial(i: u32, j: u32, c: f64) -> Self {
        let mut p = Self::default();
        p.push(i, j, c);
        p
    }

    pub fn terms(&self) -> &[(u32, u32, f64)] {
        &self.terms
    }

    fn push(&mut self, i: u32, j: u32, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.iter_mut().find(|(a, b, _)| *a == i && *b == j) {
            Some(t) => t.2 += c,
            None => self.terms.push((i, j, c)),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for &(i, j, c) in &other.terms {
            out.push(i, j, c);
        }
        out
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|&(i, j, c)| (i, j, c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for &(i1, j1, c1) in &self.terms {
            for &(i2, j2, c2) in &other.terms {
                out.push(i1 + i2, j1 + j2, c1 * c2);
            }
        }
        out
    }

    pub fn d_dr(&self) -> Self {
        let mut out = Self::default();
        for &(i, j, c) in &self.terms {
            if i > 0 {
                out.push(i - 1, j, c * i as f64);
            }
        }
        out
    }

    pub fn d_dz(&self) -> Self {
        let mut out = Self::default();
        for &(i, j, c) in &self.terms {
            if j > 0 {
                out.push(i, j - 1, c * j as f64);
            }
        }
        out
    }

    /// Divide by `r^2`. Every term must carry at least `r^2`.
    pub fn div_r2(&self) -> Self {
        let mut out = Self::default();
        for &(i, j, c) in &self.terms {
            assert!(i >= 2, "r^{i} z^{j} is not divisible by r^2");
            out.push(i - 2, j, c);
        }
        out
    }

    /// `∫ self · exp(-(U r^2 + V z^2)) 2π r dr dz` over all space.
    pub fn gaussian_integral(&self, big_u: f64, big_v: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(i, j, c)| {
                if j % 2 == 1 {
                    return 0.0;
                }
                let sr = 0.5 * (i as f64 + 2.0);
                let sz = 0.5 * (j as f64 + 1.0);
                c * PI * gamma_half(i + 2) / big_u.powf(sr) * gamma_half(j + 1) / big_v.powf(sz)
            })
            .sum()
    }
}

/// `Γ(k / 2)` for positive integer `k`.
pub fn gamma_half(k: u32) -> f64 {
    assert!(k > 0, "Γ(0) is undefined");
    if k % 2 == 0 {
        (1..k / 2).map(f64::from).product()
    } else {
        // Γ(n + 1/2) = sqrt(pi) · Π_{m=1..n} (m - 1/2)
        let n = (k - 1) / 2;
        PI.sqrt() * (1..=n).map(|m| m as f64 - 0.5).product::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_half_values() {
        assert_eq!(gamma_half(2), 1.0);
        assert_eq!(gamma_half(6), 2.0);
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half(5) - 0.75 * PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unit_gaussian_volume() {
        // ∫ e^{-(r^2+z^2)} d^3x = pi^{3/2}
        let v = Poly::constant(1.0).gaussian_integral(1.0, 1.0);
        assert!((v - PI.powf(1.5)).abs() < 1e-13);
    }

    #[test]
    fn odd_axial_moments_vanish() {
        assert_eq!(Poly::monomial(2, 3, 1.0).gaussian_integral(0.7, 0.3), 0.0);
    }

    #[test]
    fn algebra() {
        let p = Poly::constant(1.0).add(&Poly::monomial(2, 0, -0.5));
        let sq = p.mul(&p);
        assert_eq!(sq.terms().len(), 3);
        let d = sq.d_dr();
        // d/dr (1 - r^2 + r^4/4) = -2r + r^3
        assert!(d.terms().contains(&(1, 0, -2.0)));
        assert!(d.terms().contains(&(3, 0, 1.0)));
        assert_eq!(Poly::monomial(2, 1, 3.0).div_r2(), Poly::monomial(0, 1, 3.0));
    }
}
