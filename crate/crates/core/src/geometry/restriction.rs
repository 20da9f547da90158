//! Quantum restriction of polynomials in the generators and its
//! first-order asymptotics.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::GeneratorMatrices;
use crate::error::Result;

use super::symbol::{to_complex, Symbol, SymbolField, SymbolGrid};
use super::KernelFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Generator {
    APlus,
    A1,
    A2,
    AMinus,
}

impl Generator {
    fn matrix(self, g: &GeneratorMatrices) -> &DMatrix<f64> {
        match self {
            Generator::APlus => &g.a_plus,
            Generator::A1 => &g.a1,
            Generator::A2 => &g.a2,
            Generator::AMinus => &g.a_minus,
        }
    }

    fn rank(self) -> u8 {
        match self {
            Generator::APlus => 0,
            Generator::A1 | Generator::A2 => 1,
            Generator::AMinus => 2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Generator::APlus => "A+",
            Generator::A1 => "A1",
            Generator::A2 => "A2",
            Generator::AMinus => "A-",
        }
    }
}

/// A noncommutative polynomial in `A₊, A₁, A₂, A₋`, stored as words.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OrderedPolynomial {
    pub terms: Vec<(Complex64, Vec<Generator>)>,
}

impl OrderedPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn generator(g: Generator) -> Self {
        Self {
            terms: vec![(Complex64::new(1.0, 0.0), vec![g])],
        }
    }

    /// `c · A₊^a A₁^b A₂^c A₋^d`.
    pub fn monomial(coeff: Complex64, a: u32, b: u32, c: u32, d: u32) -> Self {
        let mut word = Vec::new();
        for (g, n) in [
            (Generator::APlus, a),
            (Generator::A1, b),
            (Generator::A2, c),
            (Generator::AMinus, d),
        ] {
            word.extend(std::iter::repeat_n(g, n as usize));
        }
        Self {
            terms: vec![(coeff, word)],
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            terms: self.terms.iter().map(|(c, w)| (c * s, w.clone())).collect(),
        }
    }

    /// Concatenation product.
    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (c1, w1) in &self.terms {
            for (c2, w2) in &other.terms {
                let mut w = w1.clone();
                w.extend_from_slice(w2);
                terms.push((c1 * c2, w));
            }
        }
        Self { terms }
    }

    /// Whether every word has `A₊` leftmost and `A₋` rightmost.
    pub fn is_ordered(&self) -> bool {
        self.terms
            .iter()
            .all(|(_, w)| w.windows(2).all(|p| p[0].rank() <= p[1].rank()))
    }

    /// `F(a)` with the generator matrices substituted in word order.
    pub fn matrix(&self, gens: &GeneratorMatrices) -> DMatrix<Complex64> {
        let d = gens.dim();
        let mut out = DMatrix::<Complex64>::zeros(d, d);
        for (c, w) in &self.terms {
            let mut m = DMatrix::<f64>::identity(d, d);
            for g in w {
                m *= g.matrix(gens);
            }
            out += to_complex(&m) * *c;
        }
        out
    }
}

impl fmt::Display for OrderedPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, w)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for g in w {
                write!(f, " {}", g.name())?;
            }
        }
        Ok(())
    }
}

/// `F|_Ω̂`: the Wick symbol of `F(a)`.
pub fn quantum_restriction(
    poly: &OrderedPolynomial,
    gens: &GeneratorMatrices,
    kernel: &KernelFunction,
    grid: &SymbolGrid,
) -> Result<SymbolField> {
    let s = Symbol::from_matrix(&poly.matrix(gens), kernel, &poly.to_string())?;
    Ok(SymbolField::sample(&s, grid))
}

/// `F` evaluated pointwise on the quantum coordinates, `F(a₊, a₁, a₂, a₋)`.
pub fn pointwise_restriction(
    poly: &OrderedPolynomial,
    gens: &GeneratorMatrices,
    kernel: &KernelFunction,
    grid: &SymbolGrid,
) -> Result<SymbolField> {
    let coords = coordinate_symbols(gens, kernel)?;
    let mut field = SymbolField::sample(&coords[0], grid);
    for i in 0..grid.x.len() {
        for j in 0..grid.phi.len() {
            let vals: Vec<Complex64> = coords.iter().map(|s| s.eval(grid.x[i], grid.phi[j])).collect();
            field.values[(i, j)] = poly
                .terms
                .iter()
                .map(|(c, w)| w.iter().fold(*c, |acc, g| acc * vals[index(*g)]))
                .sum();
        }
    }
    field.source = format!("pointwise {poly}");
    Ok(field)
}

fn index(g: Generator) -> usize {
    match g {
        Generator::APlus => 0,
        Generator::A1 => 1,
        Generator::A2 => 2,
        Generator::AMinus => 3,
    }
}

fn coordinate_symbols(gens: &GeneratorMatrices, kernel: &KernelFunction) -> Result<[Symbol; 4]> {
    Ok([
        Symbol::from_real(&gens.a_plus, kernel, "a+")?,
        Symbol::from_real(&gens.a1, kernel, "a1")?,
        Symbol::from_real(&gens.a2, kernel, "a2")?,
        Symbol::from_real(&gens.a_minus, kernel, "a-")?,
    ])
}

/// The first-order term `ħ e₁(F)` of `F|_Ω̂ − F(a)`:
/// for each word `x₁⋯x_n`, `Σ_{i<j} (ħ/g) ∂a_{x_i} ∂̄a_{x_j} Π_{k≠i,j} a_{x_k}`.
pub fn first_order_correction(
    poly: &OrderedPolynomial,
    gens: &GeneratorMatrices,
    kernel: &KernelFunction,
    grid: &SymbolGrid,
) -> Result<SymbolField> {
    let coords = coordinate_symbols(gens, kernel)?;
    let mut field = SymbolField::sample(&coords[0], grid);
    for i in 0..grid.x.len() {
        let ln_xi = kernel.ln_xi(grid.x[i]);
        for j in 0..grid.phi.len() {
            let loc: Vec<_> = coords.iter().map(|s| s.local(ln_xi, grid.phi[j])).collect();
            let mut total = Complex64::new(0.0, 0.0);
            for (c, w) in &poly.terms {
                let n = w.len();
                for a in 0..n {
                    for b in a + 1..n {
                        let mut prod = *c * loc[index(w[a])].bracket(&loc[index(w[b])]);
                        for (k, g) in w.iter().enumerate() {
                            if k != a && k != b {
                                prod *= loc[index(*g)].f;
                            }
                        }
                        total += prod;
                    }
                }
            }
            field.values[(i, j)] = total;
        }
    }
    field.source = format!("first order {poly}");
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_matrices, ResonanceParams};
    use crate::geometry::kernel;

    #[test]
    fn words_and_ordering() {
        let p = OrderedPolynomial::monomial(Complex64::new(2.0, 0.0), 1, 2, 0, 1);
        assert!(p.is_ordered());
        let q = OrderedPolynomial::generator(Generator::AMinus).mul(&OrderedPolynomial::generator(Generator::APlus));
        assert!(!q.is_ordered());
        assert_eq!(p.terms[0].1.len(), 4);
    }

    #[test]
    fn matrix_is_homomorphic() {
        let params = ResonanceParams::new(2, 3, 0.2).unwrap();
        let lab = params.label(4, 1, 1).unwrap();
        let g = build_matrices(&params, &lab).unwrap();
        let f = OrderedPolynomial::monomial(Complex64::new(1.0, 0.5), 1, 1, 0, 0);
        let h = OrderedPolynomial::monomial(Complex64::new(0.3, 0.0), 0, 0, 2, 1)
            .add(&OrderedPolynomial::generator(Generator::A1));
        let lhs = f.mul(&h).matrix(&g);
        let rhs = f.matrix(&g) * h.matrix(&g);
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn spin_square_first_order_is_exact() {
        // symbol(a₁²) − symbol(a₁)² = ħ²r x/(1+x)²
        let params = ResonanceParams::new(1, 1, 0.1).unwrap();
        let lab = params.label(10, 0, 0).unwrap();
        let g = build_matrices(&params, &lab).unwrap();
        let k = kernel(&params, &lab);
        let grid = SymbolGrid::new(vec![0.0, 0.3, 1.0, 4.0, 100.0], vec![0.0, 1.0]);
        let f = OrderedPolynomial::monomial(Complex64::new(1.0, 0.0), 0, 2, 0, 0);
        let q = quantum_restriction(&f, &g, &k, &grid).unwrap();
        let pw = pointwise_restriction(&f, &g, &k, &grid).unwrap();
        let e1 = first_order_correction(&f, &g, &k, &grid).unwrap();
        for (i, x) in grid.x.iter().enumerate() {
            let exact = 0.01 * 10.0 * x / (1.0 + x).powi(2);
            let diff = q.values[(i, 0)] - pw.values[(i, 0)];
            assert!((diff.re - exact).abs() < 1e-12);
            assert!((e1.values[(i, 0)] - diff).norm() < 1e-12);
        }
    }
}
