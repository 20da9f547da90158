//! Wick symbols `f = K⁻¹ F(K)` on the quantum leaf.
//!
//! A matrix `F` gives `f = Σ F_nk √(c_n c_k) z̄ⁿ zᵏ / k(|z|²)`, i.e. the
//! average `⟨F⟩ = Σ F_nk √(w_n w_k) e^{i(k−n)φ}` over the kernel weights.
//! With `ζ = √ξ e^{iφ}`, `ζ∂_ζ f = ⟨k−μ⟩`, `ζ̄∂_ζ̄ f = ⟨n−μ⟩` and
//! `ξ∂∂̄f = ⟨(n−μ)(k−μ)⟩ − σ² f`, while `ξ ∂∂̄ ln k̂ = σ²`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{GeneratorMatrices, RepLabel, ResonanceParams};
use crate::error::{GyronError, Result};

use super::{KernelFunction, MeasureDensity};

/// Weighted averages of a symbol at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSymbol {
    pub f: Complex64,
    /// `⟨k − μ⟩ = ζ ∂_ζ f`.
    pub dk: Complex64,
    /// `⟨n − μ⟩ = ζ̄ ∂_ζ̄ f`.
    pub dn: Complex64,
    /// `⟨(n−μ)(k−μ)⟩`.
    pub c: Complex64,
    /// `σ² = ξ ∂∂̄ ln k̂`.
    pub var: f64,
}

impl LocalSymbol {
    /// `∂∂̄f / ∂∂̄ ln k`.
    pub fn laplace_ratio(&self) -> Complex64 {
        if self.var == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.c / self.var - self.f
        }
    }

    /// `ħ g⁻¹ ∂f ∂̄h` for `self = f`, `other = h`.
    pub fn bracket(&self, other: &LocalSymbol) -> Complex64 {
        if self.var == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.dk * other.dn / self.var
        }
    }
}

/// Wick symbol of a fixed operator, evaluable anywhere on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    pub kernel: KernelFunction,
    pub source: String,
    pub matrix: DMatrix<Complex64>,
    entries: Vec<(usize, usize, Complex64)>,
}

impl Symbol {
    pub fn from_matrix(f: &DMatrix<Complex64>, kernel: &KernelFunction, source: &str) -> Result<Self> {
        let d = kernel.label.dim();
        if f.nrows() != d || f.ncols() != d {
            return Err(GyronError::DimensionMismatch(format!(
                "operator is {}x{}, representation has dimension {d}",
                f.nrows(),
                f.ncols()
            )));
        }
        let mut entries = Vec::new();
        for n in 0..d {
            for k in 0..d {
                if f[(n, k)].norm() != 0.0 {
                    entries.push((n, k, f[(n, k)]));
                }
            }
        }
        Ok(Self {
            kernel: kernel.clone(),
            source: source.to_string(),
            matrix: f.clone(),
            entries,
        })
    }

    pub fn from_real(f: &DMatrix<f64>, kernel: &KernelFunction, source: &str) -> Result<Self> {
        Self::from_matrix(&to_complex(f), kernel, source)
    }

    /// Largest angular harmonic `|k − n|` carried by the symbol.
    pub fn max_harmonic(&self) -> usize {
        self.entries.iter().map(|(n, k, _)| n.abs_diff(*k)).max().unwrap_or(0)
    }

    pub fn local(&self, ln_xi: f64, phi: f64) -> LocalSymbol {
        let m = self.kernel.moments(ln_xi);
        let sw: Vec<f64> = m.w.iter().map(|v| v.sqrt()).collect();
        let zero = Complex64::new(0.0, 0.0);
        let mut out = LocalSymbol {
            f: zero,
            dk: zero,
            dn: zero,
            c: zero,
            var: m.var,
        };
        for &(n, k, v) in &self.entries {
            let amp = sw[n] * sw[k];
            if amp == 0.0 {
                continue;
            }
            let t = v * amp * Complex64::from_polar(1.0, (k as f64 - n as f64) * phi);
            let (cn, ck) = (m.centred(n), m.centred(k));
            out.f += t;
            out.dk += t * ck;
            out.dn += t * cn;
            out.c += t * (cn * ck);
        }
        out
    }

    pub fn eval_xi(&self, ln_xi: f64, phi: f64) -> Complex64 {
        self.local(ln_xi, phi).f
    }

    pub fn eval(&self, x: f64, phi: f64) -> Complex64 {
        self.eval_xi(self.kernel.ln_xi(x), phi)
    }

    pub fn eval_z(&self, z: Complex64) -> Complex64 {
        self.eval(z.norm_sqr(), z.arg())
    }

    /// `Δf = (2/g) ∂∂̄f`.
    pub fn laplacian(&self, x: f64, phi: f64) -> Complex64 {
        self.laplacian_xi(self.kernel.ln_xi(x), phi)
    }

    pub fn laplacian_xi(&self, ln_xi: f64, phi: f64) -> Complex64 {
        self.local(ln_xi, phi).laplace_ratio() * (2.0 / self.kernel.params.hbar)
    }

    /// `ℱ = f − (ħ/4) Δf`.
    pub fn effective_xi(&self, ln_xi: f64, phi: f64) -> Complex64 {
        let loc = self.local(ln_xi, phi);
        loc.f - loc.laplace_ratio() * 0.5
    }

    pub fn effective(&self, x: f64, phi: f64) -> Complex64 {
        self.effective_xi(self.kernel.ln_xi(x), phi)
    }

    /// Angular harmonics of `ℱ` at `ln ξ`: `ℱ = Σ_d e^{idφ} v_d`.
    pub fn effective_modes(&self, ln_xi: f64) -> Vec<(i64, Complex64)> {
        let m = self.kernel.moments(ln_xi);
        let d = self.kernel.label.dim() as i64;
        let mut modes = vec![Complex64::new(0.0, 0.0); (2 * d - 1) as usize];
        for &(n, k, v) in &self.entries {
            let amp = (m.w[n] * m.w[k]).sqrt();
            let factor = if m.var == 0.0 {
                1.0
            } else {
                0.5 * (3.0 - m.centred(n) * m.centred(k) / m.var)
            };
            modes[(k as i64 - n as i64 + d - 1) as usize] += v * amp * factor;
        }
        modes
            .into_iter()
            .enumerate()
            .map(|(i, v)| (i as i64 - d + 1, v))
            .filter(|(_, v)| v.norm() != 0.0)
            .collect()
    }
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Sample points over both charts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolGrid {
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
}

impl SymbolGrid {
    pub fn new(x: Vec<f64>, phi: Vec<f64>) -> Self {
        Self { x, phi }
    }

    /// `n_t` points with `ξ ∈ (0, 1]` and their images `1/ξ`, by `n_phi`
    /// uniform angles.
    pub fn two_chart(kernel: &KernelFunction, n_t: usize, n_phi: usize) -> Self {
        let s0 = kernel.ln_scale.exp();
        let mut x = Vec::with_capacity(2 * n_t);
        for i in 0..n_t {
            let t = (i as f64 + 0.5) / n_t as f64;
            x.push(s0 * t);
        }
        for i in (0..n_t).rev() {
            let t = (i as f64 + 0.5) / n_t as f64;
            x.push(s0 / t);
        }
        let phi = (0..n_phi)
            .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64)
            .collect();
        Self { x, phi }
    }
}

/// A symbol sampled on a grid; rows follow `x`, columns follow `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolField {
    pub source: String,
    pub params: ResonanceParams,
    pub label: RepLabel,
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub values: DMatrix<Complex64>,
}

impl SymbolField {
    pub fn sample(symbol: &Symbol, grid: &SymbolGrid) -> Self {
        Self::from_fn(symbol, grid, |x, phi| symbol.eval(x, phi))
    }

    fn from_fn<F: Fn(f64, f64) -> Complex64>(symbol: &Symbol, grid: &SymbolGrid, f: F) -> Self {
        let values = DMatrix::from_fn(grid.x.len(), grid.phi.len(), |i, j| f(grid.x[i], grid.phi[j]));
        Self {
            source: symbol.source.clone(),
            params: symbol.kernel.params,
            label: symbol.kernel.label,
            x: grid.x.clone(),
            phi: grid.phi.clone(),
            values,
        }
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &SymbolField) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        let mut out = self.clone();
        out.values = self.values.map(f);
        out
    }

    pub fn zip_with<F: Fn(Complex64, Complex64) -> Complex64>(&self, other: &SymbolField, f: F) -> Self {
        let mut out = self.clone();
        out.values = self.values.zip_map(&other.values, f);
        out
    }
}

pub fn wick_symbol(f: &DMatrix<Complex64>, kernel: &KernelFunction, grid: &SymbolGrid) -> Result<SymbolField> {
    let s = Symbol::from_matrix(f, kernel, "operator")?;
    Ok(SymbolField::sample(&s, grid))
}

/// Effective symbol `f − (ħ/4)Δf` sampled on a grid.
pub fn effective_field(symbol: &Symbol, grid: &SymbolGrid) -> SymbolField {
    SymbolField::from_fn(symbol, grid, |x, phi| symbol.effective(x, phi))
}

/// Symbols of `a₁, a₂, a₊, a₋`.
pub fn quantum_coords(gens: &GeneratorMatrices, kernel: &KernelFunction, grid: &SymbolGrid) -> Result<[SymbolField; 4]> {
    let one = |m: &DMatrix<f64>, name: &str| -> Result<SymbolField> {
        let s = Symbol::from_real(m, kernel, name)?;
        Ok(SymbolField::sample(&s, grid))
    };
    Ok([
        one(&gens.a1, "a1")?,
        one(&gens.a2, "a2")?,
        one(&gens.a_plus, "a+")?,
        one(&gens.a_minus, "a-")?,
    ])
}

/// Star product through operator composition: the symbol of `F·G`.
pub fn star_product(
    f: &DMatrix<Complex64>,
    g: &DMatrix<Complex64>,
    kernel: &KernelFunction,
    grid: &SymbolGrid,
) -> Result<SymbolField> {
    if f.ncols() != g.nrows() {
        return Err(GyronError::DimensionMismatch("star product factors".into()));
    }
    let s = Symbol::from_matrix(&(f * g), kernel, "product")?;
    Ok(SymbolField::sample(&s, grid))
}

/// The star product at `a` as the convolution of kernels,
/// `(1/2πħK(a)) ∫ F#(ā|b) G#(b̄|a) L(b) db`, by quadrature over the measure
/// grid and `n_phi` uniform angles. Intended for small `r`.
pub fn star_product_quadrature(
    f: &DMatrix<Complex64>,
    g: &DMatrix<Complex64>,
    kernel: &KernelFunction,
    measure: &MeasureDensity,
    a: Complex64,
    n_phi: usize,
) -> Complex64 {
    let d = kernel.label.dim();
    let c = kernel.coeffs();
    let sc: Vec<f64> = c.iter().map(|v| v.sqrt()).collect();
    let apow: Vec<Complex64> = (0..d).map(|n| a.powu(n as u32)).collect();
    // F#(ā|b) = Σ_j α_j b^j,  G#(b̄|a) = Σ_j β_j b̄^j
    let alpha: Vec<Complex64> = (0..d)
        .map(|j| (0..d).map(|n| f[(n, j)] * sc[n] * sc[j] * apow[n].conj()).sum())
        .collect();
    let beta: Vec<Complex64> = (0..d)
        .map(|j| (0..d).map(|k| g[(j, k)] * sc[j] * sc[k] * apow[k]).sum())
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    for ((y, w), ll) in measure.ln_x.iter().zip(&measure.weights).zip(&measure.ln_l) {
        let x = y.exp();
        let rho = x.sqrt();
        let mut ring = Complex64::new(0.0, 0.0);
        for jp in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * jp as f64 / n_phi as f64;
            let b = Complex64::from_polar(rho, phi);
            let mut fb = Complex64::new(0.0, 0.0);
            let mut gb = Complex64::new(0.0, 0.0);
            let mut bp = Complex64::new(1.0, 0.0);
            for j in 0..d {
                fb += alpha[j] * bp;
                gb += beta[j] * bp.conj();
                bp *= b;
            }
            ring += fb * gb;
        }
        total += ring / n_phi as f64 * (w * x * ll.exp());
    }
    total / (measure.params.hbar * kernel.eval(a.norm_sqr()))
}

/// `ln |K#(a|b)|` with `K#(a|b) = Σ c_n (ā b)ⁿ`, and its phase.
fn ln_kernel_pair(kernel: &KernelFunction, a: Complex64, b: Complex64) -> Complex64 {
    let w = a.conj() * b;
    if w.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let (lw, th) = (w.norm().ln(), w.arg());
    let terms: Vec<(f64, f64)> = kernel
        .ln_coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| (c + n as f64 * lw, n as f64 * th))
        .collect();
    let m = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let s: Complex64 = terms.iter().map(|(l, p)| Complex64::from_polar((l - m).exp(), *p)).sum();
    Complex64::new(m + s.norm().ln(), s.arg())
}

/// `p_a(b) = |K#(a|b)|² / (K(a) K(b))` at one point.
pub fn probability_at(kernel: &KernelFunction, a: Complex64, b: Complex64) -> f64 {
    let l = ln_kernel_pair(kernel, a, b);
    (2.0 * l.re - kernel.ln_k(a.norm_sqr()) - kernel.ln_k(b.norm_sqr())).exp()
}

/// The projector `Π_a = 𝔓_a 𝔓_a† / K(a)` whose Wick symbol is `p_a`.
pub fn coherent_projector(kernel: &KernelFunction, a: Complex64) -> DMatrix<Complex64> {
    let d = kernel.label.dim();
    let ln_k = kernel.ln_k(a.norm_sqr());
    let u: Vec<Complex64> = (0..d)
        .map(|n| {
            if a.norm() == 0.0 {
                return Complex64::new(if n == 0 { 1.0 } else { 0.0 }, 0.0);
            }
            let ln = 0.5 * (kernel.ln_coeffs[n] - ln_k) + n as f64 * a.norm().ln();
            Complex64::from_polar(ln.exp(), n as f64 * a.arg())
        })
        .collect();
    DMatrix::from_fn(d, d, |n, k| u[n] * u[k].conj())
}

pub fn probability_function(kernel: &KernelFunction, a: Complex64, grid: &SymbolGrid) -> SymbolField {
    let values = DMatrix::from_fn(grid.x.len(), grid.phi.len(), |i, j| {
        let b = Complex64::from_polar(grid.x[i].sqrt(), grid.phi[j]);
        Complex64::new(probability_at(kernel, a, b), 0.0)
    });
    SymbolField {
        source: "p_a".into(),
        params: kernel.params,
        label: kernel.label,
        x: grid.x.clone(),
        phi: grid.phi.clone(),
        values,
    }
}

/// The off-diagonal symbol `f#(b|a) = (𝔓_b, F𝔓_a)/(𝔓_b, 𝔓_a)`.
pub fn off_diagonal_symbol(f: &DMatrix<Complex64>, kernel: &KernelFunction, b: Complex64, a: Complex64) -> Complex64 {
    let d = kernel.label.dim();
    let c = kernel.coeffs();
    let pa: Vec<Complex64> = (0..d).map(|n| c[n].sqrt() * a.powu(n as u32)).collect();
    let pb: Vec<Complex64> = (0..d).map(|n| c[n].sqrt() * b.powu(n as u32)).collect();
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = Complex64::new(0.0, 0.0);
    for n in 0..d {
        den += pb[n].conj() * pa[n];
        for k in 0..d {
            num += pb[n].conj() * f[(n, k)] * pa[k];
        }
    }
    num / den
}
