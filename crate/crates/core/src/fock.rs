//! Truncated two-mode Fock space: ladder operators, the resonance generators
//! built from them, invariant subspaces and coherent states.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::{GeneratorMatrices, RepLabel, ResonanceParams};
use crate::error::{GyronError, Result};
use crate::geometry::MeasureDensity;

/// States `(n₁, n₂)` with `n₁ + n₂ ≤ cutoff`, ordered by total occupation
/// and then lexicographically.
#[derive(Debug, Clone)]
pub struct FockBasis {
    pub cutoff: u32,
    pub states: Vec<(u32, u32)>,
    index: HashMap<(u32, u32), usize>,
}

impl FockBasis {
    pub fn new(cutoff: u32) -> Self {
        let mut states = Vec::new();
        for total in 0..=cutoff {
            for n1 in 0..=total {
                states.push((n1, total - n1));
            }
        }
        let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Self {
            cutoff,
            states,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, n1: u32, n2: u32) -> Option<usize> {
        self.index.get(&(n1, n2)).copied()
    }
}

/// Real sparse operator stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub dim: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl FockOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            rows: (0..dim).map(|i| vec![(i, 1.0)]).collect(),
        }
    }

    fn from_columns(dim: usize, cols: impl Iterator<Item = (usize, usize, f64)>) -> Self {
        let mut op = Self::zeros(dim);
        for (row, col, v) in cols {
            op.rows[row].push((col, v));
        }
        op.normalize();
        op
    }

    fn normalize(&mut self) {
        for row in &mut self.rows {
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            merged.retain(|e| e.1 != 0.0);
            *row = merged;
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.rows[row]
            .iter()
            .find(|e| e.0 == col)
            .map_or(0.0, |e| e.1)
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, a)| v[c] * a).sum())
            .collect()
    }

    pub fn compose(&self, other: &FockOperator) -> FockOperator {
        let mut out = Self::zeros(self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                for &(j, b) in &other.rows[k] {
                    out.rows[i].push((j, a * b));
                }
            }
        }
        out.normalize();
        out
    }

    pub fn add(&self, other: &FockOperator, scale: f64) -> FockOperator {
        let mut out = self.clone();
        for (i, row) in other.rows.iter().enumerate() {
            out.rows[i].extend(row.iter().map(|&(j, v)| (j, v * scale)));
        }
        out.normalize();
        out
    }

    pub fn adjoint(&self) -> FockOperator {
        let mut out = Self::zeros(self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                out.rows[j].push((i, v));
            }
        }
        out.normalize();
        out
    }

    pub fn commutator(&self, other: &FockOperator) -> FockOperator {
        self.compose(other).add(&other.compose(self), -1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|e| e.1.abs()))
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Matrix `⟨s_i|F|s_j⟩` on the given ordered states.
    pub fn compress(&self, indices: &[usize]) -> DMatrix<f64> {
        let d = indices.len();
        DMatrix::from_fn(d, d, |i, j| self.get(indices[i], indices[j]))
    }
}

/// `b₁, b₂, b₁*, b₂*` on a truncated basis.
#[derive(Debug, Clone)]
pub struct Ladder {
    pub b1: FockOperator,
    pub b2: FockOperator,
    pub b1_dag: FockOperator,
    pub b2_dag: FockOperator,
}

pub fn build_ladder(params: &ResonanceParams, basis: &FockBasis) -> Ladder {
    let h = params.hbar;
    let dim = basis.len();
    let lower = |mode: usize| {
        FockOperator::from_columns(
            dim,
            basis.states.iter().enumerate().filter_map(move |(j, &(n1, n2))| {
                let (n, target) = if mode == 0 {
                    (n1, (n1.wrapping_sub(1), n2))
                } else {
                    (n2, (n1, n2.wrapping_sub(1)))
                };
                if n == 0 {
                    return None;
                }
                let i = basis.index_of(target.0, target.1)?;
                Some((i, j, (h * n as f64).sqrt()))
            }),
        )
    };
    let b1 = lower(0);
    let b2 = lower(1);
    Ladder {
        b1_dag: b1.adjoint(),
        b2_dag: b2.adjoint(),
        b1,
        b2,
    }
}

/// Generators `A₁ = b₁*b₁`, `A₂ = b₂*b₂`, `A₊ = (b₂*)^l b₁^m`, `A₋ = A₊†`.
#[derive(Debug, Clone)]
pub struct AOperators {
    pub a1: FockOperator,
    pub a2: FockOperator,
    pub a_plus: FockOperator,
    pub a_minus: FockOperator,
}

impl AOperators {
    /// Oscillator energy `l A₁ + m A₂`.
    pub fn energy(&self, params: &ResonanceParams) -> FockOperator {
        FockOperator::zeros(self.a1.dim)
            .add(&self.a1, params.lf())
            .add(&self.a2, params.mf())
    }
}

pub fn build_a_ops(params: &ResonanceParams, ladder: &Ladder) -> AOperators {
    let dim = ladder.b1.dim;
    let a1 = ladder.b1_dag.compose(&ladder.b1);
    let a2 = ladder.b2_dag.compose(&ladder.b2);
    let mut a_plus = FockOperator::identity(dim);
    for _ in 0..params.m {
        a_plus = ladder.b1.compose(&a_plus);
    }
    for _ in 0..params.l {
        a_plus = ladder.b2_dag.compose(&a_plus);
    }
    let a_minus = a_plus.adjoint();
    AOperators {
        a1,
        a2,
        a_plus,
        a_minus,
    }
}

/// Smallest cutoff that serves `label` without touching the truncation edge.
pub fn required_cutoff(params: &ResonanceParams, label: &RepLabel) -> u32 {
    (label.p + label.r * params.m) + (label.q + label.r * params.l) + params.l.max(params.m)
}

/// Truncated Fock space with its ladder and generator operators.
#[derive(Debug, Clone)]
pub struct FockSpace {
    pub params: ResonanceParams,
    pub basis: FockBasis,
    pub ladder: Ladder,
    pub ops: AOperators,
}

impl FockSpace {
    pub fn new(params: &ResonanceParams, cutoff: u32) -> Result<Self> {
        if cutoff == 0 {
            return Err(GyronError::NonPositive("cutoff"));
        }
        let basis = FockBasis::new(cutoff);
        let ladder = build_ladder(params, &basis);
        let ops = build_a_ops(params, &ladder);
        Ok(Self {
            params: *params,
            basis,
            ladder,
            ops,
        })
    }

    /// A space just large enough for every label in `labels`.
    pub fn for_labels<'a>(
        params: &ResonanceParams,
        labels: impl IntoIterator<Item = &'a RepLabel>,
    ) -> Result<Self> {
        let cutoff = labels
            .into_iter()
            .map(|lab| required_cutoff(params, lab))
            .max()
            .unwrap_or(1)
            .max(1);
        Self::new(params, cutoff)
    }

    fn check_cutoff(&self, label: &RepLabel) -> Result<()> {
        let needed = required_cutoff(&self.params, label);
        if self.basis.cutoff < needed {
            return Err(GyronError::CutoffTooSmall {
                needed,
                got: self.basis.cutoff,
            });
        }
        Ok(())
    }

    /// Indices of the states `(p + (r−n)m, q + nl)`, `n = 0..r`.
    pub fn invariant_subspace(&self, label: &RepLabel) -> Result<Vec<usize>> {
        self.check_cutoff(label)?;
        Ok((0..=label.r)
            .map(|n| {
                let (n1, n2) = label.occupation(&self.params, n);
                self.basis.index_of(n1 as u32, n2 as u32).unwrap()
            })
            .collect())
    }

    pub fn project_generators(&self, label: &RepLabel) -> Result<GeneratorMatrices> {
        let idx = self.invariant_subspace(label)?;
        Ok(GeneratorMatrices {
            a1: self.ops.a1.compress(&idx),
            a2: self.ops.a2.compress(&idx),
            a_plus: self.ops.a_plus.compress(&idx),
            a_minus: self.ops.a_minus.compress(&idx),
        })
    }

    /// The vacuum `𝔓₀ = |p + rm, q⟩` of the representation.
    pub fn vacuum(&self, label: &RepLabel) -> Result<Vec<Complex64>> {
        self.check_cutoff(label)?;
        let (n1, n2) = label.occupation(&self.params, 0);
        let mut v = vec![Complex64::new(0.0, 0.0); self.basis.len()];
        v[self.basis.index_of(n1 as u32, n2 as u32).unwrap()] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    /// `𝔓_z = Σ_n q!/(q+ln)! (z/ħ^l)ⁿ A₊ⁿ 𝔓₀`, built by repeated action of `A₊`.
    pub fn coherent_state(&self, label: &RepLabel, z: Complex64) -> Result<Vec<Complex64>> {
        let mut term = self.vacuum(label)?;
        let mut out = term.clone();
        let (l, q) = (self.params.l as u64, label.q as u64);
        let zh = z / self.params.hbar.powi(self.params.l as i32);
        // running log of q!/(q+ln)!
        let mut ln_w = 0.0;
        let mut zn = Complex64::new(1.0, 0.0);
        for n in 1..=label.r as u64 {
            term = self.ops.a_plus.apply(&term);
            ln_w -= crate::numerics::ln_factorial_ratio(q + n * l, q + (n - 1) * l);
            zn *= zh;
            let w = zn * ln_w.exp();
            for (o, t) in out.iter_mut().zip(&term) {
                *o += t * w;
            }
        }
        Ok(out)
    }

    /// Samples of the coherent transform `ν(ψ)(z̄) = (ψ, 𝔓_z)`.
    pub fn coherent_transform(
        &self,
        label: &RepLabel,
        psi: &[Complex64],
        points: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        points
            .iter()
            .map(|&z| {
                let pz = self.coherent_state(label, z)?;
                Ok(inner(&pz, psi))
            })
            .collect()
    }
}

impl FockSpace {
    /// `ν⁻¹(φ) = (1/2πħ) ∫ 𝔓_z φ(z̄) L(|z|²) dx dφ` by quadrature on the
    /// measure grid with `n_phi` uniform angles; `phi` receives `z`.
    pub fn inverse_coherent_transform<F: Fn(Complex64) -> Complex64>(
        &self,
        label: &RepLabel,
        measure: &MeasureDensity,
        n_phi: usize,
        phi: F,
    ) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.basis.len()];
        for ((y, w), ll) in measure.ln_x.iter().zip(&measure.weights).zip(&measure.ln_l) {
            let x = y.exp();
            let weight = w * x * ll.exp() / (measure.params.hbar * n_phi as f64);
            for j in 0..n_phi {
                let angle = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
                let z = Complex64::from_polar(x.sqrt(), angle);
                let pz = self.coherent_state(label, z)?;
                let v = phi(z) * weight;
                for (o, c) in out.iter_mut().zip(&pz) {
                    *o += c * v;
                }
            }
        }
        Ok(out)
    }

    /// `(1/2πħ) ∫ 𝔓_z 𝔓_z† L dx dφ` restricted to the invariant subspace.
    pub fn resolution_of_unity(
        &self,
        label: &RepLabel,
        measure: &MeasureDensity,
        n_phi: usize,
    ) -> Result<DMatrix<Complex64>> {
        let idx = self.invariant_subspace(label)?;
        let d = idx.len();
        let mut out = DMatrix::<Complex64>::zeros(d, d);
        for ((y, w), ll) in measure.ln_x.iter().zip(&measure.weights).zip(&measure.ln_l) {
            let x = y.exp();
            let weight = w * x * ll.exp() / (measure.params.hbar * n_phi as f64);
            for j in 0..n_phi {
                let angle = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
                let pz = self.coherent_state(label, Complex64::from_polar(x.sqrt(), angle))?;
                let v: Vec<Complex64> = idx.iter().map(|&i| pz[i]).collect();
                for a in 0..d {
                    for b in 0..d {
                        out[(a, b)] += v[a] * v[b].conj() * weight;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `⟨u, v⟩ = Σ conj(u_i) v_i`.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm_sqr(u: &[Complex64]) -> f64 {
    u.iter().map(|a| a.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_matrices;

    fn space(l: i64, m: i64, h: f64, cutoff: u32) -> FockSpace {
        FockSpace::new(&ResonanceParams::new(l, m, h).unwrap(), cutoff).unwrap()
    }

    #[test]
    fn ladder_basics() {
        let s = space(1, 1, 0.7, 6);
        let vac = s.basis.index_of(0, 0).unwrap();
        let bb = s.ladder.b1.compose(&s.ladder.b1_dag);
        assert!((bb.get(vac, vac) - 0.7).abs() < 1e-15);
        let st = s.basis.index_of(0, 3).unwrap();
        assert!(s.ladder.b1.rows.iter().all(|r| r.iter().all(|e| e.0 != st)));
        let mixed = s.ladder.b1.commutator(&s.ladder.b2_dag);
        for (i, &(n1, n2)) in s.basis.states.iter().enumerate() {
            if n1 + n2 < s.basis.cutoff {
                assert!(mixed.rows[i].is_empty());
            }
        }
        let comm = s.ladder.b1.commutator(&s.ladder.b1_dag);
        for (i, &(n1, n2)) in s.basis.states.iter().enumerate() {
            if n1 + n2 < s.basis.cutoff {
                assert!((comm.get(i, i) - 0.7).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn a_plus_entry_for_one_two() {
        let s = space(1, 2, 1.3, 6);
        let from = s.basis.index_of(2, 0).unwrap();
        let to = s.basis.index_of(0, 1).unwrap();
        let expected = 1.3f64.powf(1.5) * 2f64.sqrt();
        assert!((s.ops.a_plus.get(to, from) - expected).abs() < 1e-14);
        assert_eq!(s.ops.a1.commutator(&s.ops.a2).max_abs(), 0.0);
    }

    #[test]
    fn subspaces_and_energies() {
        let p = ResonanceParams::new(1, 2, 1.0).unwrap();
        let lab = p.label(1, 0, 0).unwrap();
        let s = FockSpace::for_labels(&p, [&lab]).unwrap();
        let idx = s.invariant_subspace(&lab).unwrap();
        let st: Vec<_> = idx.iter().map(|&i| s.basis.states[i]).collect();
        assert_eq!(st, vec![(2, 0), (0, 1)]);

        let p = ResonanceParams::new(2, 3, 1.0).unwrap();
        let lab = p.label(2, 1, 2).unwrap();
        let s = FockSpace::for_labels(&p, [&lab]).unwrap();
        let st: Vec<_> = s
            .invariant_subspace(&lab)
            .unwrap()
            .iter()
            .map(|&i| s.basis.states[i])
            .collect();
        assert_eq!(st, vec![(8, 1), (5, 3), (2, 5)]);
        assert!(st.iter().all(|&(a, b)| 2 * a + 3 * b == 19));

        let small = FockSpace::new(&p, 3).unwrap();
        assert!(matches!(
            small.invariant_subspace(&lab),
            Err(GyronError::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn projection_matches_closed_form() {
        let p = ResonanceParams::new(2, 3, 0.4).unwrap();
        let lab = p.label(3, 1, 1).unwrap();
        let s = FockSpace::for_labels(&p, [&lab]).unwrap();
        let a = s.project_generators(&lab).unwrap();
        let b = build_matrices(&p, &lab).unwrap();
        for (x, y) in a.a_plus.iter().zip(b.a_plus.iter()) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
        let vac = s.vacuum(&lab).unwrap();
        assert!(norm_sqr(&s.ops.a_minus.apply(&vac)) == 0.0);
    }

    #[test]
    fn coherent_norm_for_spin() {
        let p = ResonanceParams::new(1, 1, 1.0).unwrap();
        let lab = p.label(2, 0, 0).unwrap();
        let s = FockSpace::for_labels(&p, [&lab]).unwrap();
        let v = s.coherent_state(&lab, Complex64::from_polar(1.0, 0.3)).unwrap();
        assert!((norm_sqr(&v) - 4.0).abs() < 1e-12);
        let v0 = s.coherent_state(&lab, Complex64::new(0.0, 0.0)).unwrap();
        assert!((norm_sqr(&v0) - 1.0).abs() < 1e-15);
        let t = s.coherent_transform(&lab, &v0, &[Complex64::new(0.4, -0.2)]).unwrap();
        assert!((t[0] - 1.0).norm() < 1e-15);
    }
}
