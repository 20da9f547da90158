//! The l:m resonance algebra: parameters, representation labels, structure
//! polynomials and the irreducible representation matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GyronError, Result};
use crate::numerics::ln_factorial_ratio;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Resonance `l:m` and Planck constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceParams {
    pub l: u32,
    pub m: u32,
    pub hbar: f64,
}

impl ResonanceParams {
    pub fn new(l: i64, m: i64, hbar: f64) -> Result<Self> {
        if l <= 0 {
            return Err(GyronError::NonPositive("l"));
        }
        if m <= 0 {
            return Err(GyronError::NonPositive("m"));
        }
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(GyronError::NonPositive("hbar"));
        }
        if gcd(l as u64, m as u64) != 1 {
            return Err(GyronError::NonCoprime { l, m });
        }
        Ok(Self {
            l: l as u32,
            m: m as u32,
            hbar,
        })
    }

    pub fn with_hbar(&self, hbar: f64) -> Self {
        Self { hbar, ..*self }
    }

    pub fn lf(&self) -> f64 {
        self.l as f64
    }

    pub fn mf(&self) -> f64 {
        self.m as f64
    }

    /// Oscillator energy `ħ(lmr + lp + mq)` of the label `(r, q, p)`.
    pub fn energy(&self, r: u32, q: u32, p: u32) -> f64 {
        let (l, m) = (self.l as u64, self.m as u64);
        self.hbar * (l * m * r as u64 + l * p as u64 + m * q as u64) as f64
    }

    pub fn label(&self, r: u32, q: u32, p: u32) -> Result<RepLabel> {
        if q >= self.l {
            return Err(GyronError::InvalidLabel(format!(
                "q={q} must satisfy 0 <= q <= l-1 = {}",
                self.l - 1
            )));
        }
        if p >= self.m {
            return Err(GyronError::InvalidLabel(format!(
                "p={p} must satisfy 0 <= p <= m-1 = {}",
                self.m - 1
            )));
        }
        Ok(RepLabel {
            r,
            q,
            p,
            energy: self.energy(r, q, p),
        })
    }

    pub fn structure(&self) -> StructureData {
        StructureData { params: *self }
    }
}

/// Irreducible representation label `(r, q, p)` with its energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepLabel {
    pub r: u32,
    pub q: u32,
    pub p: u32,
    pub energy: f64,
}

impl RepLabel {
    pub fn dim(&self) -> usize {
        self.r as usize + 1
    }

    /// Occupation numbers `(p + (r-n)m, q + nl)` of the n-th basis state.
    pub fn occupation(&self, params: &ResonanceParams, n: u32) -> (u64, u64) {
        (
            (self.p + (self.r - n) * params.m) as u64,
            (self.q + n * params.l) as u64,
        )
    }
}

/// All labels with `E ≤ e_max`, sorted by energy then `(r, q, p)`.
pub fn enumerate_reps(params: &ResonanceParams, e_max: f64) -> Vec<RepLabel> {
    let mut out = Vec::new();
    if e_max < 0.0 {
        return out;
    }
    let slack = 1e-9 * e_max.max(params.hbar);
    let lm = (params.l * params.m) as f64 * params.hbar;
    let r_max = ((e_max + slack) / lm).floor() as u32;
    for r in 0..=r_max {
        for q in 0..params.l {
            for p in 0..params.m {
                let e = params.energy(r, q, p);
                if e <= e_max + slack {
                    out.push(RepLabel { r, q, p, energy: e });
                }
            }
        }
    }
    out.sort_by(|a, b| {
        a.energy
            .partial_cmp(&b.energy)
            .unwrap()
            .then((a.r, a.q, a.p).cmp(&(b.r, b.q, b.p)))
    });
    out
}

/// Structure polynomials `ρ = ρ₊ρ₋`, the Casimir form `κ` and the shift `Γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureData {
    pub params: ResonanceParams,
}

impl StructureData {
    /// `ρ₊(A₁) = Π_{j=1..m} (A₁ + jħ)`.
    pub fn rho_plus(&self, a1: f64) -> f64 {
        let h = self.params.hbar;
        (1..=self.params.m).map(|j| a1 + j as f64 * h).product()
    }

    /// `ρ₋(A₂) = Π_{s=1..l} (A₂ − sħ + ħ)`.
    pub fn rho_minus(&self, a2: f64) -> f64 {
        let h = self.params.hbar;
        (1..=self.params.l).map(|s| a2 - (s as f64 - 1.0) * h).product()
    }

    pub fn rho(&self, a1: f64, a2: f64) -> f64 {
        self.rho_plus(a1) * self.rho_minus(a2)
    }

    pub fn kappa(&self, a1: f64, a2: f64) -> f64 {
        self.params.lf() * a1 + self.params.mf() * a2
    }

    pub fn gamma(&self, a1: f64, a2: f64) -> (f64, f64) {
        let h = self.params.hbar;
        (a1 - h * self.params.mf(), a2 + h * self.params.lf())
    }

    /// `ρ(a₁ + s₁I, a₂ + s₂I)` formed with matrix products.
    pub fn rho_matrix_shifted(
        &self,
        a1: &DMatrix<f64>,
        a2: &DMatrix<f64>,
        s1: f64,
        s2: f64,
    ) -> DMatrix<f64> {
        let n = a1.nrows();
        let h = self.params.hbar;
        let id = DMatrix::<f64>::identity(n, n);
        let mut out = id.clone();
        for j in 1..=self.params.m {
            out = &out * (a1 + &id * (s1 + j as f64 * h));
        }
        for s in 1..=self.params.l {
            out = &out * (a2 + &id * (s2 - (s as f64 - 1.0) * h));
        }
        out
    }

    /// Product of the entrywise norms of the factors of `ρ(a₁ + s₁I, a₂ + s₂I)`,
    /// the magnitude against which rounding in the product is measured.
    pub fn rho_factor_scale(&self, a1: &DMatrix<f64>, a2: &DMatrix<f64>, s1: f64, s2: f64) -> f64 {
        let h = self.params.hbar;
        let norm = |a: &DMatrix<f64>, s: f64| a.iter().fold(s.abs(), |acc, v| acc.max((v + s).abs()));
        let mut out = 1.0;
        for j in 1..=self.params.m {
            out *= norm(a1, s1 + j as f64 * h);
        }
        for s in 1..=self.params.l {
            out *= norm(a2, s2 - (s as f64 - 1.0) * h);
        }
        out
    }

    pub fn rho_matrix(&self, a1: &DMatrix<f64>, a2: &DMatrix<f64>) -> DMatrix<f64> {
        self.rho_matrix_shifted(a1, a2, 0.0, 0.0)
    }

    /// `ρ(Γ(a₁, a₂))` as a matrix.
    pub fn rho_gamma_matrix(&self, a1: &DMatrix<f64>, a2: &DMatrix<f64>) -> DMatrix<f64> {
        let h = self.params.hbar;
        self.rho_matrix_shifted(a1, a2, -h * self.params.mf(), h * self.params.lf())
    }
}

/// Real matrices of `a₁, a₂, a₊, a₋` in the orthonormal monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrices {
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub a_plus: DMatrix<f64>,
    pub a_minus: DMatrix<f64>,
}

impl GeneratorMatrices {
    pub fn dim(&self) -> usize {
        self.a1.nrows()
    }

    /// `a₃ = (a₊ + a₋)/2`.
    pub fn a3(&self) -> DMatrix<Complex64> {
        ((&self.a_plus + &self.a_minus) * 0.5).map(|v| Complex64::new(v, 0.0))
    }

    /// `a₄ = i(a₊ − a₋)/2`.
    pub fn a4(&self) -> DMatrix<Complex64> {
        ((&self.a_plus - &self.a_minus) * 0.5).map(|v| Complex64::new(0.0, v))
    }

    /// `l·a₁ + m·a₂`.
    pub fn energy_matrix(&self, params: &ResonanceParams) -> DMatrix<f64> {
        &self.a1 * params.lf() + &self.a2 * params.mf()
    }
}

/// `ln c_n` for the kernel coefficient
/// `c_n = ħ^{(m−l)n} q!(p+rm)! / ((q+nl)!(p+(r−n)m)!)`.
pub fn ln_kernel_coeff(params: &ResonanceParams, label: &RepLabel, n: u32) -> f64 {
    let (l, m) = (params.l as u64, params.m as u64);
    let (r, q, p) = (label.r as u64, label.q as u64, label.p as u64);
    let n = n as u64;
    (m as f64 - l as f64) * n as f64 * params.hbar.ln() - ln_factorial_ratio(q + n * l, q)
        + ln_factorial_ratio(p + r * m, p + (r - n) * m)
}

/// Matrices of the generators from their closed-form entries.
pub fn build_matrices(params: &ResonanceParams, label: &RepLabel) -> Result<GeneratorMatrices> {
    let d = label.dim();
    let h = params.hbar;
    let mut a1 = DMatrix::zeros(d, d);
    let mut a2 = DMatrix::zeros(d, d);
    let mut a_plus = DMatrix::zeros(d, d);
    for n in 0..d {
        let (n1, n2) = label.occupation(params, n as u32);
        a1[(n, n)] = h * n1 as f64;
        a2[(n, n)] = h * n2 as f64;
        if n > 0 {
            let (prev1, prev2) = label.occupation(params, n as u32 - 1);
            let ln = 0.5 * (params.l + params.m) as f64 * h.ln()
                + 0.5 * (ln_factorial_ratio(n2, prev2) + ln_factorial_ratio(prev1, n1));
            let v = ln.exp();
            if !v.is_finite() {
                return Err(GyronError::Overflow { row: n, col: n - 1 });
            }
            a_plus[(n, n - 1)] = v;
        }
    }
    let a_minus = a_plus.transpose();
    Ok(GeneratorMatrices {
        a1,
        a2,
        a_plus,
        a_minus,
    })
}

/// Matrices obtained from the differential operators acting on `z̄ⁿ`,
/// conjugated into the orthonormal basis `φ⁽ⁿ⁾ = √c_n z̄ⁿ`.
pub fn build_diffop_matrices(
    params: &ResonanceParams,
    label: &RepLabel,
) -> Result<GeneratorMatrices> {
    let d = label.dim();
    let h = params.hbar;
    let (l, m) = (params.lf(), params.mf());
    let (r, q, p) = (label.r as f64, label.q as f64, label.p as f64);
    let ln_c: Vec<f64> = (0..d as u32).map(|n| ln_kernel_coeff(params, label, n)).collect();
    let mut a1 = DMatrix::zeros(d, d);
    let mut a2 = DMatrix::zeros(d, d);
    let mut a_plus = DMatrix::zeros(d, d);
    let mut a_minus = DMatrix::zeros(d, d);
    for n in 0..d {
        let nf = n as f64;
        // a₁ = ħ(rm + p) − ħm z̄∂̄, a₂ = ħq + ħl z̄∂̄
        a1[(n, n)] = h * (r * m + p - m * nf);
        a2[(n, n)] = h * (q + l * nf);
        if n + 1 < d {
            // a₊ z̄ⁿ = ħ^m Π_j (rm + p + j − m(n+1)) z̄^{n+1}
            let ln_mono: f64 = (1..=params.m)
                .map(|j| (r * m + p + j as f64 - m * (nf + 1.0)).ln())
                .sum::<f64>()
                + m * h.ln();
            let v = (ln_mono + 0.5 * (ln_c[n] - ln_c[n + 1])).exp();
            if !v.is_finite() {
                return Err(GyronError::Overflow { row: n + 1, col: n });
            }
            a_plus[(n + 1, n)] = v;
        }
        if n > 0 {
            // a₋ z̄ⁿ = ħ^l Π_s (q − s + 1 + ln) z̄^{n−1}
            let ln_mono: f64 = (1..=params.l)
                .map(|s| (q - s as f64 + 1.0 + l * nf).ln())
                .sum::<f64>()
                + l * h.ln();
            let v = (ln_mono + 0.5 * (ln_c[n] - ln_c[n - 1])).exp();
            if !v.is_finite() {
                return Err(GyronError::Overflow { row: n - 1, col: n });
            }
            a_minus[(n - 1, n)] = v;
        }
    }
    Ok(GeneratorMatrices {
        a1,
        a2,
        a_plus,
        a_minus,
    })
}

fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Relative residuals of the commutation relations, each divided by
/// `max(1, ‖ρ(a₁,a₂)‖∞)` and the factor scales of `ρ` and `ρ∘Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationResiduals {
    pub a1_a2: f64,
    pub a1_plus: f64,
    pub a1_minus: f64,
    pub a2_plus: f64,
    pub a2_minus: f64,
    pub minus_plus: f64,
    pub scale: f64,
}

impl RelationResiduals {
    pub fn max(&self) -> f64 {
        [
            self.a1_a2,
            self.a1_plus,
            self.a1_minus,
            self.a2_plus,
            self.a2_minus,
            self.minus_plus,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("[a1,a2]", self.a1_a2),
            ("[a1,a+]", self.a1_plus),
            ("[a1,a-]", self.a1_minus),
            ("[a2,a+]", self.a2_plus),
            ("[a2,a-]", self.a2_minus),
            ("[a-,a+]", self.minus_plus),
        ]
    }
}

pub fn check_relations(g: &GeneratorMatrices, s: &StructureData) -> RelationResiduals {
    let h = s.params.hbar;
    let (l, m) = (s.params.lf(), s.params.mf());
    let rho = s.rho_matrix(&g.a1, &g.a2);
    let scale = max_abs(&rho)
        .max(1.0)
        .max(s.rho_factor_scale(&g.a1, &g.a2, 0.0, 0.0))
        .max(s.rho_factor_scale(&g.a1, &g.a2, -h * m, h * l));
    let res = |x: DMatrix<f64>| max_abs(&x) / scale;
    let rho_g = s.rho_gamma_matrix(&g.a1, &g.a2);
    RelationResiduals {
        a1_a2: res(commutator(&g.a1, &g.a2)),
        a1_plus: res(commutator(&g.a1, &g.a_plus) + &g.a_plus * (h * m)),
        a1_minus: res(commutator(&g.a1, &g.a_minus) - &g.a_minus * (h * m)),
        a2_plus: res(commutator(&g.a2, &g.a_plus) - &g.a_plus * (h * l)),
        a2_minus: res(commutator(&g.a2, &g.a_minus) + &g.a_minus * (h * l)),
        minus_plus: res(commutator(&g.a_minus, &g.a_plus) - (rho_g - rho)),
        scale,
    }
}

/// Scalar Casimir values on a representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CasimirReport {
    /// Mean diagonal value of `l·a₁ + m·a₂`.
    pub kappa_value: f64,
    /// `‖l·a₁ + m·a₂ − E·I‖∞ / max(1, E)`.
    pub kappa_residual: f64,
    /// `‖a₊a₋ − ρ(a₁,a₂)‖∞` over `max(1, ‖ρ‖∞)` and the factor scale of `ρ`.
    pub c_residual: f64,
}

pub fn casimir_values(g: &GeneratorMatrices, s: &StructureData, label: &RepLabel) -> CasimirReport {
    let d = g.dim();
    let e_mat = g.energy_matrix(&s.params);
    let kappa_value = e_mat.trace() / d as f64;
    let id = DMatrix::<f64>::identity(d, d);
    let kappa_residual = max_abs(&(&e_mat - &id * label.energy)) / label.energy.max(1.0);
    let rho = s.rho_matrix(&g.a1, &g.a2);
    let c_scale = max_abs(&rho).max(1.0).max(s.rho_factor_scale(&g.a1, &g.a2, 0.0, 0.0));
    let c_residual = max_abs(&(&g.a_plus * &g.a_minus - &rho)) / c_scale;
    CasimirReport {
        kappa_value,
        kappa_residual,
        c_residual,
    }
}

/// Canonical JSON form of a representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepDocument {
    pub l: u32,
    pub m: u32,
    pub hbar: f64,
    pub r: u32,
    pub q: u32,
    pub p: u32,
    pub energy: f64,
    pub a1_diag: Vec<f64>,
    pub a2_diag: Vec<f64>,
    pub a_plus_subdiag: Vec<f64>,
}

impl RepDocument {
    pub fn new(params: &ResonanceParams, label: &RepLabel, g: &GeneratorMatrices) -> Self {
        let d = g.dim();
        Self {
            l: params.l,
            m: params.m,
            hbar: params.hbar,
            r: label.r,
            q: label.q,
            p: label.p,
            energy: label.energy,
            a1_diag: (0..d).map(|i| g.a1[(i, i)]).collect(),
            a2_diag: (0..d).map(|i| g.a2[(i, i)]).collect(),
            a_plus_subdiag: (1..d).map(|i| g.a_plus[(i, i - 1)]).collect(),
        }
    }

    pub fn to_matrices(&self) -> GeneratorMatrices {
        let d = self.a1_diag.len();
        let a1 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.a1_diag.clone()));
        let a2 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.a2_diag.clone()));
        let mut a_plus = DMatrix::zeros(d, d);
        for (i, v) in self.a_plus_subdiag.iter().enumerate() {
            a_plus[(i + 1, i)] = *v;
        }
        let a_minus = a_plus.transpose();
        GeneratorMatrices {
            a1,
            a2,
            a_plus,
            a_minus,
        }
    }
}
