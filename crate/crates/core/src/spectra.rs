//! Gyron spectra: exact diagonalization and Bohr–Sommerfeld quantization of
//! the effective symbol `ℱ = f − (ħ/4)Δf` against the area form
//! `(ω − ħρ/2)/2πħ`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{RepLabel, ResonanceParams};
use crate::error::{GyronError, Result};
use crate::geometry::{kernel, metric_and_ricci, QuantumMetric, Symbol};
use crate::numerics::{brent, golden_max, linear_fit, GaussLegendre};

/// Relative anti-Hermitian part allowed by [`exact_spectrum`].
pub const HERMITIAN_TOL: f64 = 1e-12;

fn hermitian_deviation(h: &DMatrix<Complex64>) -> f64 {
    let norm = h.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (h - h.adjoint()).norm() / norm
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn exact_spectrum(h: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    Ok(eigen_pairs(h)?.0)
}

/// Eigenvalues with the largest residual `‖Hv − λv‖ / ‖H‖`.
pub fn eigen_pairs(h: &DMatrix<Complex64>) -> Result<(Vec<f64>, f64)> {
    let dev = hermitian_deviation(h);
    if dev > HERMITIAN_TOL {
        return Err(GyronError::NotHermitian { deviation: dev });
    }
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym.clone());
    let norm = sym.norm().max(f64::MIN_POSITIVE);
    let mut residual: f64 = 0.0;
    for (i, lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        let r = (&sym * v - v * Complex64::new(*lambda, 0.0)).norm() / norm;
        residual = residual.max(r);
    }
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((vals, residual))
}

/// `ℱ` as a symbol object; evaluate with [`Symbol::effective`].
pub fn effective_symbol(f: &DMatrix<Complex64>, params: &ResonanceParams, label: &RepLabel) -> Result<Symbol> {
    Symbol::from_matrix(f, &kernel(params, label), "effective")
}

const GRID_STEP: f64 = 0.05;

/// `λ ↦ A(λ) = (1/2πħ) ∫_{ℱ ≤ λ} (ω − ħρ/2)`.
#[derive(Debug, Clone)]
pub struct AreaFunction {
    pub metric: QuantumMetric,
    pub symbol: Symbol,
    pub f_min: f64,
    pub f_max: f64,
    /// `A(f_max)`.
    pub total: f64,
    /// Whether the symbol carries only the harmonics `|d| ≤ 1`.
    pub fast: bool,
    ys: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    gl: GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaSample {
    pub lambda: f64,
    pub area: f64,
}

/// Number of strict valleys of a sampled curve, flat stretches below `tol`
/// ignored; endpoints count when the curve rises away from them.
fn count_valleys(v: &[f64], tol: f64) -> usize {
    let mut slopes = Vec::new();
    let mut anchor = v[0];
    for &x in &v[1..] {
        if x - anchor > tol {
            slopes.push(1);
            anchor = x;
        } else if anchor - x > tol {
            slopes.push(-1);
            anchor = x;
        }
    }
    if slopes.is_empty() {
        return 1;
    }
    let mut dedup: Vec<i32> = Vec::new();
    for s in slopes {
        if dedup.last() != Some(&s) {
            dedup.push(s);
        }
    }
    let mut n = 0;
    if dedup[0] == 1 {
        n += 1;
    }
    n += dedup.windows(2).filter(|w| w[0] == -1 && w[1] == 1).count();
    if *dedup.last().unwrap() == -1 {
        n += 1;
    }
    n
}

impl AreaFunction {
    pub fn new(symbol: &Symbol) -> Result<Self> {
        let dev = hermitian_deviation(&symbol.matrix);
        if dev > HERMITIAN_TOL {
            return Err(GyronError::NotHermitian { deviation: dev });
        }
        let metric = metric_and_ricci(&symbol.kernel);
        let total_area = metric.area_total();
        // range of ln ξ outside which the area measure is negligible
        let tiny = 1e-15 * total_area.max(1.0);
        let mut y_lo = 0.0;
        while metric.area_cumulative_xi(y_lo) > tiny && y_lo > -2000.0 {
            y_lo -= 1.0;
        }
        let mut y_hi = 0.0;
        while total_area - metric.area_cumulative_xi(y_hi) > tiny && y_hi < 2000.0 {
            y_hi += 1.0;
        }
        let n = ((y_hi - y_lo) / GRID_STEP).ceil() as usize;
        let ys: Vec<f64> = (0..=n).map(|i| y_lo + (y_hi - y_lo) * i as f64 / n as f64).collect();
        let mut out = Self {
            metric,
            symbol: symbol.clone(),
            f_min: 0.0,
            f_max: 0.0,
            total: total_area,
            fast: symbol.max_harmonic() <= 1,
            ys: Vec::new(),
            lo: Vec::new(),
            hi: Vec::new(),
            gl: GaussLegendre::new(16),
        };
        let ranges: Vec<(f64, f64)> = ys.par_iter().map(|&y| out.range_at(y)).collect();
        out.lo = ranges.iter().map(|r| r.0).collect();
        out.hi = ranges.iter().map(|r| r.1).collect();
        out.ys = ys;

        let scale = out
            .lo
            .iter()
            .chain(&out.hi)
            .fold(0.0f64, |a, b| a.max(b.abs()))
            .max(f64::MIN_POSITIVE);
        let tol = 1e-9 * scale;
        let minima = count_valleys(&out.lo, tol) + out.angular_wells(tol, false);
        let neg_hi: Vec<f64> = out.hi.iter().map(|v| -v).collect();
        let maxima = count_valleys(&neg_hi, tol) + out.angular_wells(tol, true);
        if minima > 1 || maxima > 1 {
            return Err(GyronError::MultiWell { minima, maxima });
        }

        let (f_min, f_max) = out.extremes();
        out.f_min = f_min;
        out.f_max = f_max;
        Ok(out)
    }

    /// Extra wells along the angle: rings where `ℱ(ξ, ·)` has more than one
    /// minimum (or maximum) deeper than `tol`.
    fn angular_wells(&self, tol: f64, maxima: bool) -> usize {
        if self.fast {
            return 0;
        }
        let dmax = self.symbol.max_harmonic();
        let m = 16 * dmax + 32;
        let mut extra = 0;
        for (i, &y) in self.ys.iter().enumerate() {
            if self.hi[i] - self.lo[i] < 10.0 * tol {
                continue;
            }
            let vals: Vec<f64> = (0..m)
                .map(|j| {
                    let v = self.value(y, 2.0 * std::f64::consts::PI * j as f64 / m as f64);
                    if maxima {
                        -v
                    } else {
                        v
                    }
                })
                .collect();
            let count = (0..m)
                .filter(|&j| {
                    let (a, b, c) = (vals[(j + m - 1) % m], vals[j], vals[(j + 1) % m]);
                    b < a && b <= c
                })
                .count();
            extra = extra.max(count.saturating_sub(1));
        }
        extra
    }

    fn value(&self, y: f64, phi: f64) -> f64 {
        self.symbol.effective_xi(y, phi).re
    }

    /// `(u, a)` with `ℱ = u + a cos(φ + θ)` for symbols with `|d| ≤ 1`.
    fn harmonic_parts(&self, y: f64) -> (f64, f64) {
        let mut u = 0.0;
        let mut a = 0.0;
        for (d, v) in self.symbol.effective_modes(y) {
            match d {
                0 => u += v.re,
                1 | -1 => a += v.norm(),
                _ => {}
            }
        }
        (u, a)
    }

    /// `(min_φ ℱ, max_φ ℱ)` on the ring `ln ξ = y`.
    fn range_at(&self, y: f64) -> (f64, f64) {
        if self.fast {
            let (u, a) = self.harmonic_parts(y);
            return (u - a, u + a);
        }
        let m = 16 * self.symbol.max_harmonic() + 32;
        let h = 2.0 * std::f64::consts::PI / m as f64;
        let vals: Vec<f64> = (0..m).map(|j| self.value(y, j as f64 * h)).collect();
        let (jmin, _) = vals
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |a, (j, &v)| if v < a.1 { (j, v) } else { a });
        let (jmax, _) = vals
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, (j, &v)| if v > a.1 { (j, v) } else { a });
        let c_min = jmin as f64 * h;
        let c_max = jmax as f64 * h;
        let lo = -golden_max(|p| -self.value(y, p), c_min - h, c_min + h, 60).1;
        let hi = golden_max(|p| self.value(y, p), c_max - h, c_max + h, 60).1;
        (lo, hi)
    }

    fn extremes(&self) -> (f64, f64) {
        let refine = |vals: &[f64], sign: f64| -> f64 {
            let (i, _) = vals
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |a, (i, &v)| if sign * v > a.1 { (i, sign * v) } else { a });
            let mut best = sign * vals[i];
            if i > 0 && i + 1 < vals.len() {
                let (_, v) = golden_max(
                    |y| {
                        let (lo, hi) = self.range_at(y);
                        sign * if sign > 0.0 { hi } else { lo }
                    },
                    self.ys[i - 1],
                    self.ys[i + 1],
                    80,
                );
                best = best.max(v);
            }
            sign * best
        };
        (refine(&self.lo, -1.0), refine(&self.hi, 1.0))
    }

    /// Fraction of the ring `ln ξ = y` where `ℱ ≤ λ`.
    fn fraction(&self, y: f64, lambda: f64) -> f64 {
        if self.fast {
            let (u, a) = self.harmonic_parts(y);
            if a == 0.0 {
                return if u <= lambda { 1.0 } else { 0.0 };
            }
            let c = ((lambda - u) / a).clamp(-1.0, 1.0);
            return 1.0 - c.acos() / std::f64::consts::PI;
        }
        let m = 16 * self.symbol.max_harmonic() + 32;
        let h = 2.0 * std::f64::consts::PI / m as f64;
        let g = |p: f64| self.value(y, p) - lambda;
        let vals: Vec<f64> = (0..=m).map(|j| g(j as f64 * h)).collect();
        let mut below = 0.0;
        for j in 0..m {
            let (a, b) = (j as f64 * h, (j + 1) as f64 * h);
            let (ga, gb) = (vals[j], vals[j + 1]);
            if ga <= 0.0 && gb <= 0.0 {
                below += h;
            } else if (ga <= 0.0) != (gb <= 0.0) {
                let root = brent(g, a, b, 1e-14).unwrap_or(0.5 * (a + b));
                below += if ga <= 0.0 { root - a } else { b - root };
            }
        }
        below / (2.0 * std::f64::consts::PI)
    }

    /// Area density per unit `ln ξ`.
    fn density(&self, y: f64) -> f64 {
        self.metric.area_density_xi(y) * y.exp()
    }

    fn breakpoints(&self, lambda: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..self.ys.len() - 1 {
            for (vals, upper) in [(&self.lo, false), (&self.hi, true)] {
                let (a, b) = (vals[i] - lambda, vals[i + 1] - lambda);
                if (a <= 0.0) != (b <= 0.0) {
                    let f = |y: f64| {
                        let (lo, hi) = self.range_at(y);
                        (if upper { hi } else { lo }) - lambda
                    };
                    if let Some(root) = brent(f, self.ys[i], self.ys[i + 1], 1e-14) {
                        out.push(root);
                    }
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    /// `∫ fraction · density dy` on `[a, b]`, nodes clustered at both ends.
    fn partial(&self, a: f64, b: f64, lambda: f64) -> f64 {
        let panels = ((2.0 * (b - a)).ceil() as usize).max(4);
        let mut sum = 0.0;
        for p in 0..panels {
            let t0 = std::f64::consts::PI * p as f64 / panels as f64;
            let t1 = std::f64::consts::PI * (p + 1) as f64 / panels as f64;
            for (theta, w) in self.gl.mapped(t0, t1) {
                let y = a + 0.5 * (b - a) * (1.0 - theta.cos());
                let jac = 0.5 * (b - a) * theta.sin();
                sum += w * jac * self.fraction(y, lambda) * self.density(y);
            }
        }
        sum
    }

    pub fn area(&self, lambda: f64) -> f64 {
        if lambda < self.f_min {
            return 0.0;
        }
        if lambda >= self.f_max {
            return self.total;
        }
        let (y0, y1) = (self.ys[0], *self.ys.last().unwrap());
        let mut cuts = vec![y0];
        cuts.extend(self.breakpoints(lambda));
        cuts.push(y1);
        let mut sum = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let (lo, hi) = self.range_at(0.5 * (a + b));
            if hi <= lambda {
                sum += self.metric.area_cumulative_xi(b) - self.metric.area_cumulative_xi(a);
            } else if lo < lambda {
                sum += self.partial(a, b, lambda);
            }
        }
        // the rings beyond the grid are whole or empty
        if self.range_at(y0).1 <= lambda {
            sum += self.metric.area_cumulative_xi(y0);
        }
        if self.range_at(y1).1 <= lambda {
            sum += self.total - self.metric.area_cumulative_xi(y1);
        }
        sum
    }

    /// `A` on `n` evenly spaced levels from `f_min` to `f_max`.
    pub fn samples(&self, n: usize) -> Vec<AreaSample> {
        let n = n.max(2);
        (0..n)
            .into_par_iter()
            .map(|i| {
                let lambda = self.f_min + (self.f_max - self.f_min) * i as f64 / (n - 1) as f64;
                AreaSample {
                    lambda,
                    area: self.area(lambda),
                }
            })
            .collect()
    }
}

pub fn area_function(symbol: &Symbol) -> Result<AreaFunction> {
    AreaFunction::new(symbol)
}

pub fn area_csv(samples: &[AreaSample]) -> String {
    let mut s = String::from("lambda,area\n");
    for p in samples {
        s.push_str(&format!("{:e},{:e}\n", p.lambda, p.area));
    }
    s
}

/// Levels with `A(λ) = k + 1/2`, `k = 0, 1, …` while `k + 1/2 ≤ A_max`.
pub fn bs_spectrum(area: &AreaFunction) -> Result<Vec<f64>> {
    let mut targets = Vec::new();
    let mut k = 0.0;
    while k + 0.5 <= area.total {
        targets.push(k + 0.5);
        k += 1.0;
    }
    let span = (area.f_max - area.f_min).abs().max(f64::MIN_POSITIVE);
    targets
        .par_iter()
        .map(|&t| {
            brent(|l| area.area(l) - t, area.f_min, area.f_max, 1e-15 * span)
                .ok_or(GyronError::RootBracketFailure { target: t })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelDoc {
    pub l: u32,
    pub m: u32,
    pub hbar: f64,
    pub r: u32,
    pub q: u32,
    pub p: u32,
    pub energy: f64,
}

impl LabelDoc {
    pub fn new(params: &ResonanceParams, label: &RepLabel) -> Self {
        Self {
            l: params.l,
            m: params.m,
            hbar: params.hbar,
            r: label.r,
            q: label.q,
            p: label.p,
            energy: label.energy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub r: u32,
    pub hbar: f64,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub label: LabelDoc,
    pub exact: Vec<f64>,
    pub semiclassical: Vec<f64>,
    pub pairs: Vec<[usize; 2]>,
    pub max_abs_error: Option<f64>,
    pub convergence: Vec<ConvergenceRow>,
}

/// Indices `⌊n/3⌋ .. ⌈2n/3⌉` of an `n`-level spectrum.
pub fn middle_third(n: usize) -> std::ops::Range<usize> {
    (n / 3)..((2 * n).div_ceil(3))
}

/// Pairs the `i`-th exact level with the `i`-th semiclassical level.
fn pair_up(exact: &[f64], semi: &[f64]) -> (Vec<[usize; 2]>, Option<f64>) {
    let n = exact.len().min(semi.len());
    let pairs: Vec<[usize; 2]> = (0..n).map(|i| [i, i]).collect();
    let err = middle_third(exact.len())
        .filter(|&i| i < n)
        .map(|i| (exact[i] - semi[i]).abs())
        .fold(None, |a: Option<f64>, e| Some(a.map_or(e, |a| a.max(e))));
    (pairs, err)
}

/// Exact and, unless `exact_only`, Bohr–Sommerfeld levels of `F`.
pub fn spectrum_report(
    f: &DMatrix<Complex64>,
    params: &ResonanceParams,
    label: &RepLabel,
    exact_only: bool,
) -> Result<(SpectrumReport, Option<AreaFunction>)> {
    let exact = exact_spectrum(f)?;
    let (semi, area) = if exact_only {
        (Vec::new(), None)
    } else {
        let area = area_function(&effective_symbol(f, params, label)?)?;
        (bs_spectrum(&area)?, Some(area))
    };
    let (pairs, max_abs_error) = if exact_only { (Vec::new(), None) } else { pair_up(&exact, &semi) };
    Ok((
        SpectrumReport {
            label: LabelDoc::new(params, label),
            exact,
            semiclassical: semi,
            pairs,
            max_abs_error,
            convergence: Vec::new(),
        },
        area,
    ))
}

/// A fixed-energy sweep: `ħ = E/(lm·r)` for each `r`.
pub struct Sweep<'a> {
    pub l: i64,
    pub m: i64,
    pub q: u32,
    pub p: u32,
    pub energy: f64,
    pub operator: &'a (dyn Fn(&ResonanceParams, &RepLabel) -> Result<DMatrix<Complex64>> + Sync),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Slope of `ln err` against `ln r`.
    pub slope: f64,
    /// `err(r_i)/err(r_{i+1})` for consecutive entries.
    pub ratios: Vec<f64>,
    /// Semiclassical root counts, to compare with `r + 1`.
    pub root_counts: Vec<usize>,
}

pub fn convergence_report(sweep: &Sweep, r_list: &[u32]) -> Result<ConvergenceReport> {
    let mut rows = Vec::new();
    let mut root_counts = Vec::new();
    for &r in r_list {
        let hbar = sweep.energy / ((sweep.l * sweep.m) as f64 * r as f64);
        let params = ResonanceParams::new(sweep.l, sweep.m, hbar)?;
        let label = params.label(r, sweep.q, sweep.p)?;
        let f = (sweep.operator)(&params, &label)?;
        let (report, _) = spectrum_report(&f, &params, &label, false)?;
        root_counts.push(report.semiclassical.len());
        rows.push(ConvergenceRow {
            r,
            hbar,
            err: report.max_abs_error.unwrap_or(f64::NAN),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|c| (c.r as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|c| c.err.ln()).collect();
    let slope = if rows.len() >= 2 { linear_fit(&xs, &ys).0 } else { f64::NAN };
    let ratios = rows.windows(2).map(|w| w[0].err / w[1].err).collect();
    Ok(ConvergenceReport {
        rows,
        slope,
        ratios,
        root_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_matrices;
    use crate::geometry::symbol::to_complex;

    fn setup(l: i64, m: i64, h: f64, r: u32, q: u32, p: u32) -> (ResonanceParams, RepLabel) {
        let pr = ResonanceParams::new(l, m, h).unwrap();
        let lab = pr.label(r, q, p).unwrap();
        (pr, lab)
    }

    #[test]
    fn spin_x_spectrum() {
        let (p, lab) = setup(1, 1, 1.0, 2, 0, 0);
        let g = build_matrices(&p, &lab).unwrap();
        let ev = exact_spectrum(&to_complex(&(&g.a_plus + &g.a_minus))).unwrap();
        for (v, e) in ev.iter().zip([-2.0, 0.0, 2.0]) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let (p, lab) = setup(1, 1, 1.0, 2, 0, 0);
        let g = build_matrices(&p, &lab).unwrap();
        assert!(matches!(
            exact_spectrum(&to_complex(&g.a_plus)),
            Err(GyronError::NotHermitian { .. })
        ));
    }

    #[test]
    fn valley_counting() {
        assert_eq!(count_valleys(&[3.0, 2.0, 1.0, 2.0, 3.0], 1e-9), 1);
        assert_eq!(count_valleys(&[1.0, 2.0, 3.0], 1e-9), 1);
        assert_eq!(count_valleys(&[3.0, 1.0, 2.0, 1.0, 3.0], 1e-9), 2);
        assert_eq!(count_valleys(&[1.0, 1.0, 1.0], 1e-9), 1);
    }

    #[test]
    fn area_endpoints_and_monotonicity() {
        let (p, lab) = setup(1, 2, 0.1, 8, 0, 1);
        let g = build_matrices(&p, &lab).unwrap();
        let s = effective_symbol(&to_complex(&(&g.a_plus + &g.a_minus)), &p, &lab).unwrap();
        let a = area_function(&s).unwrap();
        assert_eq!(a.area(a.f_min - 1.0), 0.0);
        assert!((a.area(a.f_max) - 9.0).abs() < 1e-12);
        let samples = a.samples(40);
        for w in samples.windows(2) {
            assert!(w[1].area >= w[0].area - 1e-12);
        }
        assert!(samples[0].area < 1e-9 && (samples[39].area - 9.0).abs() < 1e-9);
    }

    #[test]
    fn axisymmetric_area_is_increasing_and_counts_levels() {
        let (p, lab) = setup(1, 1, 0.1, 10, 0, 0);
        let g = build_matrices(&p, &lab).unwrap();
        let s = effective_symbol(&to_complex(&g.a2), &p, &lab).unwrap();
        let a = area_function(&s).unwrap();
        let mut prev = -1.0;
        for i in 1..30 {
            let lam = a.f_min + (a.f_max - a.f_min) * i as f64 / 30.0;
            let v = a.area(lam);
            assert!(v > prev);
            prev = v;
        }
        let roots = bs_spectrum(&a).unwrap();
        assert_eq!(roots.len(), 11);
    }

    #[test]
    fn double_well_is_rejected() {
        // a₊² + a₋² carries the harmonics ±2 and has two wells
        let (p, lab) = setup(1, 1, 0.1, 10, 0, 0);
        let g = build_matrices(&p, &lab).unwrap();
        let f = &g.a_plus * &g.a_plus + &g.a_minus * &g.a_minus;
        let s = effective_symbol(&to_complex(&f), &p, &lab).unwrap();
        assert!(matches!(area_function(&s), Err(GyronError::MultiWell { .. })));
    }
}
