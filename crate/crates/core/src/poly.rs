//! Dense real polynomials in one variable, with exact arithmetic on the
//! coefficient vectors and real root isolation.

use std::ops::{Add, Mul, Neg, Sub};

/// Polynomial with coefficients in increasing degree order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly(Vec<f64>);

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly(coeffs)
    }

    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Poly(vec![0.0, 1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    /// Coefficient of `x^d`, zero beyond the stored length.
    pub fn coeff(&self, d: usize) -> f64 {
        self.0.get(d).copied().unwrap_or(0.0)
    }

    /// Index of the highest non-zero coefficient, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|&c| c != 0.0)
    }

    /// Drops every coefficient above degree `d`.
    pub fn truncate(mut self, d: usize) -> Self {
        self.0.truncate(d + 1);
        self
    }

    pub fn scale(&self, c: f64) -> Self {
        Poly(self.0.iter().map(|v| v * c).collect())
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    /// All real roots, sorted increasingly.
    ///
    /// Roots of the derivative split the real line into monotone pieces
    /// inside the Cauchy bound; each piece holds at most one root, located by
    /// bisection.
    pub fn real_roots(&self) -> Vec<f64> {
        let Some(deg) = self.degree() else {
            return Vec::new();
        };
        let c = &self.0[..=deg];
        match deg {
            0 => Vec::new(),
            1 => vec![-c[0] / c[1]],
            _ => {
                let lead = c[deg];
                let bound = 1.0 + c[..deg].iter().map(|v| (v / lead).abs()).fold(0.0, f64::max);
                let p = Poly(c.to_vec());
                let mut knots = vec![-bound];
                knots.extend(
                    p.derivative()
                        .real_roots()
                        .into_iter()
                        .filter(|r| r.abs() < bound),
                );
                knots.push(bound);
                let mut roots: Vec<f64> = Vec::new();
                for w in knots.windows(2) {
                    let (lo, hi) = (w[0], w[1]);
                    let (flo, fhi) = (p.eval(lo), p.eval(hi));
                    if flo == 0.0 {
                        roots.push(lo);
                    } else if flo.signum() != fhi.signum() && fhi != 0.0 {
                        roots.push(bisect(&p, lo, hi, flo));
                    }
                }
                if p.eval(bound) == 0.0 {
                    roots.push(bound);
                }
                roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
                roots
            }
        }
    }
}

fn bisect(p: &Poly, mut lo: f64, mut hi: f64, flo: f64) -> f64 {
    let sign_lo = flo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = p.eval(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let len = self.0.len().max(rhs.0.len());
        Poly((0..len).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let len = self.0.len().max(rhs.0.len());
        Poly((0..len).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.0.is_empty() || rhs.0.is_empty() {
            return Poly(vec![0.0]);
        }
        let mut out = vec![0.0; self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}
