//! Sparse multivariate polynomials used for the frame tables.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use smallvec::SmallVec;

use crate::scalar::Real;

pub type Exponents = SmallVec<[u8; 8]>;

/// Polynomial in `nvars` variables with real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T> {
    nvars: usize,
    terms: BTreeMap<Exponents, T>,
}

impl<T: Real> Polynomial<T> {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: T) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(SmallVec::from_elem(0, nvars), c);
        p
    }

    pub fn variable(nvars: usize, i: usize) -> Self {
        let mut e: Exponents = SmallVec::from_elem(0, nvars);
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, T::one());
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &T)> {
        self.terms.iter()
    }

    fn add_term(&mut self, e: Exponents, c: T) {
        if c == T::zero() {
            return;
        }
        match self.terms.entry(e) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == T::zero() {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    /// `self += c * x_i * other`
    pub fn add_scaled_var_product(&mut self, c: T, i: usize, other: &Self) {
        for (e, &v) in &other.terms {
            let mut e = e.clone();
            e[i] += 1;
            self.add_term(e, c * v);
        }
    }

    pub fn add_scaled(&mut self, c: T, other: &Self) {
        for (e, &v) in &other.terms {
            self.add_term(e.clone(), c * v);
        }
    }

    /// Builds a polynomial from `(coefficient, exponents)` pairs.
    pub fn from_terms(nvars: usize, terms: &[(T, Vec<u8>)]) -> Self {
        let mut p = Self::zero(nvars);
        for (c, e) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length");
            p.add_term(SmallVec::from_slice(e), *c);
        }
        p
    }

    /// Partial derivative with respect to variable `k`.
    pub fn derivative(&self, k: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, &c) in &self.terms {
            if e[k] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[k] -= 1;
            out.add_term(d, c * T::from_usize_lossy(e[k] as usize));
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().map(|&k| k as usize).sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.terms.iter().fold(T::zero(), |acc, (e, &c)| {
            let mono = e.iter().zip(x).fold(T::one(), |m, (&k, &xi)| m * xi.powi(k as i32));
            acc + c * mono
        })
    }

    /// Human-readable form with the given variable names, e.g. `-y` or `x1*x3/2`.
    pub fn format_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_owned();
        }
        let mut out = String::new();
        for (n, (e, &c)) in self.terms.iter().rev().enumerate() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { names[i].clone() } else { format!("{}^{}", names[i], k) })
                .collect();
            let neg = c < T::zero();
            let mag = c.abs();
            if n == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if mono.is_empty() {
                let _ = write!(out, "{}", format_coeff(mag));
            } else if mag == T::one() {
                out.push_str(&mono.join("*"));
            } else {
                let _ = write!(out, "{}*{}", format_coeff(mag), mono.join("*"));
            }
        }
        out
    }
}

fn format_coeff<T: Real>(c: T) -> String {
    let v = c.to_f64_lossy();
    for den in [1.0, 2.0, 3.0, 4.0, 6.0, 12.0, 24.0] {
        let num = v * den;
        if (num - num.round()).abs() < 1e-12 {
            return if den == 1.0 { format!("{}", num.round()) } else { format!("{}/{}", num.round(), den) };
        }
    }
    format!("{v}")
}
