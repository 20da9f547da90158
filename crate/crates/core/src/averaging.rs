//! Normal-ordered bosonic perturbations and their first-order resonance
//! averages.
//!
//! A monomial `b₁*^{ν₁} b₂*^{ν₂} b₁^{μ₁} b₂^{μ₂}` is keyed by
//! `[ν₁, ν₂, μ₁, μ₂]`; the ladder operators obey `[b_j, b_j*] = ħ`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{RepLabel, ResonanceParams};
use crate::error::{GyronError, Result};
use crate::fock::{FockOperator, FockSpace};
use crate::geometry::{OrderedPolynomial, Generator};

/// Largest word accepted by [`normal_order`].
pub const MAX_FACTORS: usize = 8;

pub type Exponents = [u32; 4];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BosonicPolynomial {
    pub terms: BTreeMap<Exponents, Complex64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TermDoc {
    nu: [u32; 2],
    mu: [u32; 2],
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PolyDoc {
    terms: Vec<TermDoc>,
}

impl BosonicPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(nu: [u32; 2], mu: [u32; 2], coeff: Complex64) -> Self {
        let mut p = Self::zero();
        p.add_term([nu[0], nu[1], mu[0], mu[1]], coeff);
        p
    }

    pub fn add_term(&mut self, key: Exponents, coeff: Complex64) {
        let e = self.terms.entry(key).or_insert(Complex64::new(0.0, 0.0));
        *e += coeff;
        if e.norm() == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(*k, *v);
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero();
        for (k, v) in &self.terms {
            out.add_term(*k, v * s);
        }
        out
    }

    /// Hermitian conjugate: `(ν, μ, β) ↦ (μ, ν, β̄)`.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for (k, v) in &self.terms {
            out.add_term([k[2], k[3], k[0], k[1]], v.conj());
        }
        out
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let adj = self.adjoint();
        let diff = self.add(&adj.scale(Complex64::new(-1.0, 0.0)));
        diff.terms.values().all(|v| v.norm() <= tol)
    }

    pub fn is_resonant(&self, params: &ResonanceParams) -> bool {
        self.terms.keys().all(|k| resonant(k, params))
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        let doc: PolyDoc = serde_json::from_str(s)?;
        let mut p = Self::zero();
        for t in doc.terms {
            p.add_term([t.nu[0], t.nu[1], t.mu[0], t.mu[1]], Complex64::new(t.re, t.im));
        }
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        let doc = PolyDoc {
            terms: self
                .terms
                .iter()
                .map(|(k, v)| TermDoc {
                    nu: [k[0], k[1]],
                    mu: [k[2], k[3]],
                    re: v.re,
                    im: v.im,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("polynomial serializes")
    }
}

fn resonant(k: &Exponents, params: &ResonanceParams) -> bool {
    let (l, m) = (params.l as i64, params.m as i64);
    l * k[0] as i64 + m * k[1] as i64 == l * k[2] as i64 + m * k[3] as i64
}

/// A single ladder factor in an arbitrary word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LadderOp {
    B1,
    B2,
    B1Dag,
    B2Dag,
}

/// Normal-ordered single-mode word: `(creations, annihilations) → coeff`.
fn order_mode(word: &[bool], hbar: f64) -> BTreeMap<(u32, u32), f64> {
    // true = creation
    let mut out = BTreeMap::new();
    match word.windows(2).position(|w| !w[0] && w[1]) {
        None => {
            let c = word.iter().filter(|&&b| b).count() as u32;
            out.insert((c, word.len() as u32 - c), 1.0);
        }
        Some(i) => {
            // b b* = b* b + ħ
            let mut swapped = word.to_vec();
            swapped.swap(i, i + 1);
            for (k, v) in order_mode(&swapped, hbar) {
                *out.entry(k).or_insert(0.0) += v;
            }
            let mut contracted = word[..i].to_vec();
            contracted.extend_from_slice(&word[i + 2..]);
            for (k, v) in order_mode(&contracted, hbar) {
                *out.entry(k).or_insert(0.0) += hbar * v;
            }
        }
    }
    out
}

/// Rewrites a product of ladder operators in normal order.
pub fn normal_order(word: &[LadderOp], hbar: f64) -> Result<BosonicPolynomial> {
    if word.len() > MAX_FACTORS {
        return Err(GyronError::TooManyFactors {
            max: MAX_FACTORS,
            got: word.len(),
        });
    }
    let mode = |a: LadderOp, b: LadderOp| -> Vec<bool> {
        word.iter()
            .filter(|&&x| x == a || x == b)
            .map(|&x| x == b)
            .collect()
    };
    let m1 = order_mode(&mode(LadderOp::B1, LadderOp::B1Dag), hbar);
    let m2 = order_mode(&mode(LadderOp::B2, LadderOp::B2Dag), hbar);
    let mut out = BosonicPolynomial::zero();
    for ((c1, a1), v1) in &m1 {
        for ((c2, a2), v2) in &m2 {
            out.add_term([*c1, *c2, *a1, *a2], Complex64::new(v1 * v2, 0.0));
        }
    }
    Ok(out)
}

/// The first-order average `F₁` and its realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct GyronHamiltonian {
    pub params: ResonanceParams,
    pub f1: BosonicPolynomial,
}

/// Keeps the terms with `lν₁ + mν₂ = lμ₁ + mμ₂`.
pub fn project_resonant(b: &BosonicPolynomial, params: &ResonanceParams) -> GyronHamiltonian {
    let mut f1 = BosonicPolynomial::zero();
    for (k, v) in &b.terms {
        if resonant(k, params) {
            f1.add_term(*k, *v);
        }
    }
    GyronHamiltonian { params: *params, f1 }
}

/// `√(ħⁿ a!/(a−n)!)`, the amplitude of `bⁿ|a⟩`, or `None` when `n > a`.
fn lower_amp(a: u64, n: u32, hbar: f64) -> Option<f64> {
    if (n as u64) > a {
        return None;
    }
    let mut v = 1.0;
    for j in 0..n as u64 {
        v *= (hbar * (a - j) as f64).sqrt();
    }
    Some(v)
}

/// Matrix of `F₁` on the invariant subspace of `label`, from the ladder
/// action on the states `|p+(r−n)m, q+nl⟩`.
pub fn realize_in_rep(f1: &BosonicPolynomial, params: &ResonanceParams, label: &RepLabel) -> DMatrix<Complex64> {
    let d = label.dim();
    let h = params.hbar;
    let states: Vec<(u64, u64)> = (0..=label.r).map(|n| label.occupation(params, n)).collect();
    let mut out = DMatrix::<Complex64>::zeros(d, d);
    for (col, &(n1, n2)) in states.iter().enumerate() {
        for (k, v) in &f1.terms {
            let (Some(a1), Some(a2)) = (lower_amp(n1, k[2], h), lower_amp(n2, k[3], h)) else {
                continue;
            };
            let (m1, m2) = (n1 - k[2] as u64, n2 - k[3] as u64);
            let (t1, t2) = (m1 + k[0] as u64, m2 + k[1] as u64);
            // b*^ν|m⟩ has amplitude √(ħ^ν (m+ν)!/m!) = lower_amp(m+ν, ν)
            let c1 = lower_amp(t1, k[0], h).unwrap();
            let c2 = lower_amp(t2, k[1], h).unwrap();
            if let Some(row) = states.iter().position(|&s| s == (t1, t2)) {
                out[(row, col)] += v * (a1 * a2 * c1 * c2);
            }
        }
    }
    out
}

/// `(Re F, Im F)` of a polynomial as operators on a truncated Fock space.
pub fn fock_operator(f: &BosonicPolynomial, space: &FockSpace) -> (FockOperator, FockOperator) {
    let dim = space.basis.len();
    let lad = &space.ladder;
    let mut re = FockOperator::zeros(dim);
    let mut im = FockOperator::zeros(dim);
    for (k, v) in &f.terms {
        let mut op = FockOperator::identity(dim);
        for _ in 0..k[3] {
            op = lad.b2.compose(&op);
        }
        for _ in 0..k[2] {
            op = lad.b1.compose(&op);
        }
        for _ in 0..k[1] {
            op = lad.b2_dag.compose(&op);
        }
        for _ in 0..k[0] {
            op = lad.b1_dag.compose(&op);
        }
        re = re.add(&op, v.re);
        im = im.add(&op, v.im);
    }
    (re, im)
}

/// Matrix of `F₁` on the invariant subspace by the sparse Fock-space action.
pub fn realize_in_fock(f1: &BosonicPolynomial, space: &FockSpace, label: &RepLabel) -> Result<DMatrix<Complex64>> {
    let idx = space.invariant_subspace(label)?;
    let (re, im) = fock_operator(f1, space);
    let (re, im) = (re.compress(&idx), im.compress(&idx));
    Ok(re.zip_map(&im, Complex64::new))
}

impl GyronHamiltonian {
    pub fn matrix(&self, label: &RepLabel) -> DMatrix<Complex64> {
        realize_in_rep(&self.f1, &self.params, label)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.f1.is_hermitian(tol)
    }
}

/// Result of rewriting a resonant polynomial in the generators.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Expressed(OrderedPolynomial),
    /// Terms that are not resonant and so have no generator form.
    NotExpressed(Vec<Exponents>),
}

/// Coefficients of `Π_{j<k} (A − δ − jħ)`.
fn falling(k: u32, delta: f64, hbar: f64) -> Vec<f64> {
    let mut c = vec![1.0];
    for j in 0..k {
        let root = delta + j as f64 * hbar;
        let mut next = vec![0.0; c.len() + 1];
        for (i, v) in c.iter().enumerate() {
            next[i + 1] += v;
            next[i] -= root * v;
        }
        c = next;
    }
    c
}

/// Writes each resonant monomial as `A₊^s P(A₁) Q(A₂)` or `P(A₁) Q(A₂) A₋^t`.
pub fn express_in_generators(f1: &BosonicPolynomial, params: &ResonanceParams) -> Expression {
    let bad: Vec<Exponents> = f1.terms.keys().filter(|k| !resonant(k, params)).cloned().collect();
    if !bad.is_empty() {
        return Expression::NotExpressed(bad);
    }
    let h = params.hbar;
    let (l, m) = (params.l as i64, params.m as i64);
    let mut out = OrderedPolynomial::zero();
    for (k, v) in &f1.terms {
        let [nu1, nu2, mu1, mu2] = k.map(|x| x as i64);
        // ν₁ − μ₁ = −ms, ν₂ − μ₂ = ls
        let s = (nu2 - mu2) / l;
        debug_assert_eq!(nu1 - mu1, -m * s);
        let (p1, p2, plus, minus) = if s >= 0 {
            // b₁*^{ν₁}b₁^{ν₁} A₊^s b₂*^{μ₂}b₂^{μ₂}, A₁ moved right of A₊^s
            (falling(nu1 as u32, h * (m * s) as f64, h), falling(mu2 as u32, 0.0, h), s as u32, 0)
        } else {
            let t = -s;
            (falling(mu1 as u32, h * (m * t) as f64, h), falling(nu2 as u32, 0.0, h), 0, t as u32)
        };
        for (b, c1) in p1.iter().enumerate() {
            for (c, c2) in p2.iter().enumerate() {
                let coeff = v * (c1 * c2);
                if coeff.norm() != 0.0 {
                    out = out.add(&OrderedPolynomial::monomial(coeff, plus, b as u32, c as u32, minus));
                }
            }
        }
    }
    Expression::Expressed(out)
}

/// `A₁ = b₁*b₁` and the like, as bosonic polynomials.
pub fn generator_polynomial(g: Generator, params: &ResonanceParams) -> BosonicPolynomial {
    let one = Complex64::new(1.0, 0.0);
    match g {
        Generator::A1 => BosonicPolynomial::monomial([1, 0], [1, 0], one),
        Generator::A2 => BosonicPolynomial::monomial([0, 1], [0, 1], one),
        Generator::APlus => BosonicPolynomial::monomial([0, params.l], [params.m, 0], one),
        Generator::AMinus => BosonicPolynomial::monomial([params.m, 0], [0, params.l], one),
    }
}
