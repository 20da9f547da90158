//! Classical leaf geometry: the Poisson tensor on R⁴, its Casimirs, the leaf
//! function α_E, the chart coordinates and the Kähler form density ω₀.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::ResonanceParams;
use crate::error::{GyronError, Result};
use crate::numerics::{linear_fit, logistic, softplus, GaussLegendre};

fn pow_i(x: f64, k: i64) -> f64 {
    if k == 0 {
        1.0
    } else {
        x.powi(k as i32)
    }
}

/// `d/dx xᵏ`, zero for `k = 0`.
fn dpow(x: f64, k: i64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * pow_i(x, k - 1)
    }
}

/// The quadratic-polynomial Poisson structure on R⁴.
#[derive(Debug, Clone, Copy)]
pub struct PoissonTensor {
    pub params: ResonanceParams,
}

impl PoissonTensor {
    pub fn new(params: &ResonanceParams) -> Self {
        Self { params: *params }
    }

    fn lm(&self) -> (f64, f64, i64, i64) {
        let (l, m) = (self.params.l as i64, self.params.m as i64);
        (l as f64, m as f64, l, m)
    }

    /// `Π_ij(A) = {A_i, A_j}`.
    pub fn matrix(&self, a: &[f64; 4]) -> [[f64; 4]; 4] {
        let (l, m, li, mi) = self.lm();
        let mut p = [[0.0; 4]; 4];
        p[0][2] = -m * a[3];
        p[0][3] = m * a[2];
        p[1][2] = l * a[3];
        p[1][3] = -l * a[2];
        p[2][3] = -0.5 * (l * l * a[0] - m * m * a[1]) * pow_i(a[0], mi - 1) * pow_i(a[1], li - 1);
        for i in 0..4 {
            for j in 0..i {
                p[i][j] = -p[j][i];
            }
        }
        p
    }

    /// `∂_k Π_ij(A)`, indexed `[k][i][j]`.
    pub fn matrix_gradient(&self, a: &[f64; 4]) -> [[[f64; 4]; 4]; 4] {
        let (l, m, li, mi) = self.lm();
        let mut d = [[[0.0; 4]; 4]; 4];
        d[3][0][2] = -m;
        d[2][0][3] = m;
        d[3][1][2] = l;
        d[2][1][3] = -l;
        let lin = l * l * a[0] - m * m * a[1];
        let p1 = pow_i(a[0], mi - 1);
        let p2 = pow_i(a[1], li - 1);
        d[0][2][3] = -0.5 * (l * l * p1 * p2 + lin * dpow(a[0], mi - 1) * p2);
        d[1][2][3] = -0.5 * (-m * m * p1 * p2 + lin * p1 * dpow(a[1], li - 1));
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..i {
                    d[k][i][j] = -d[k][j][i];
                }
            }
        }
        d
    }

    /// `∇Fᵀ Π(A) ∇G`.
    pub fn bracket(&self, grad_f: &[f64; 4], grad_g: &[f64; 4], a: &[f64; 4]) -> f64 {
        let p = self.matrix(a);
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += grad_f[i] * p[i][j] * grad_g[j];
            }
        }
        s
    }

    /// Largest cyclic Jacobi sum `Σ_k Π_ik ∂_k Π_jl + cyclic(i,j,l)`.
    pub fn jacobi_residual(&self, a: &[f64; 4]) -> f64 {
        let p = self.matrix(a);
        let d = self.matrix_gradient(a);
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for l in 0..4 {
                    let mut s = 0.0;
                    for k in 0..4 {
                        s += p[i][k] * d[k][j][l] + p[j][k] * d[k][l][i] + p[l][k] * d[k][i][j];
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
        worst
    }

    pub fn kappa_gradient(&self) -> [f64; 4] {
        [self.params.lf(), self.params.mf(), 0.0, 0.0]
    }

    /// `C = A₃² + A₄² − A₁^m A₂^l`.
    pub fn c_value(&self, a: &[f64; 4]) -> f64 {
        let (_, _, li, mi) = self.lm();
        a[2] * a[2] + a[3] * a[3] - pow_i(a[0], mi) * pow_i(a[1], li)
    }

    pub fn c_gradient(&self, a: &[f64; 4]) -> [f64; 4] {
        let (_, _, li, mi) = self.lm();
        [
            -dpow(a[0], mi) * pow_i(a[1], li),
            -pow_i(a[0], mi) * dpow(a[1], li),
            2.0 * a[2],
            2.0 * a[3],
        ]
    }
}

/// Point on a leaf: `α_E(x)` with the coordinates `A₁, A₂` and their logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafPoint {
    pub alpha: f64,
    pub a1: f64,
    pub a2: f64,
    pub ln_a1: f64,
    pub ln_a2: f64,
}

/// Solves `l ln(E/2m + lα) − m ln(E/2l − mα) = ln x` for `α ∈ [−E/2lm, E/2lm]`.
///
/// Parametrized by `A₂ = E s/m`, `A₁ = E(1−s)/l`, `s = σ(u)`; the equation is
/// strictly monotone in `u` with slope between `min(l,m)` and `max(l,m)`.
pub fn leaf_point(e: f64, params: &ResonanceParams, x: f64) -> LeafPoint {
    let (l, m) = (params.lf(), params.mf());
    let edge = e / (2.0 * l * m);
    if x <= 0.0 {
        return LeafPoint {
            alpha: -edge,
            a1: e / l,
            a2: 0.0,
            ln_a1: (e / l).ln(),
            ln_a2: f64::NEG_INFINITY,
        };
    }
    if x == f64::INFINITY {
        return LeafPoint {
            alpha: edge,
            a1: 0.0,
            a2: e / m,
            ln_a1: f64::NEG_INFINITY,
            ln_a2: (e / m).ln(),
        };
    }
    let ln_e = e.ln();
    let (ln_l, ln_m) = (l.ln(), m.ln());
    let ln_x = x.ln();
    let f = |u: f64| l * (ln_e - ln_m - softplus(-u)) - m * (ln_e - ln_l - softplus(u)) - ln_x;
    let f0 = f(0.0);
    let bound = f0.abs() / l.min(m) + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    let mut u = 0.0;
    for _ in 0..200 {
        let fu = f(u);
        if fu > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let slope = l * logistic(-u) + m * logistic(u);
        let mut next = u - fu / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 1e-15 * (1.0 + u.abs()) {
            u = next;
            break;
        }
        u = next;
    }
    let ln_a1 = ln_e - ln_l - softplus(u);
    let ln_a2 = ln_e - ln_m - softplus(-u);
    LeafPoint {
        alpha: edge * (0.5 * u).tanh(),
        a1: ln_a1.exp(),
        a2: ln_a2.exp(),
        ln_a1,
        ln_a2,
    }
}

pub fn solve_alpha(e: f64, params: &ResonanceParams, x: f64) -> f64 {
    leaf_point(e, params, x).alpha
}

/// Relative residual of the defining equation at a solved point.
pub fn alpha_residual(e: f64, params: &ResonanceParams, x: f64, alpha: f64) -> f64 {
    let (l, m) = (params.lf(), params.mf());
    let lhs = l * (e / (2.0 * m) + l * alpha).ln() - m * (e / (2.0 * l) - m * alpha).ln();
    (lhs - x.ln()).abs() / x.ln().abs().max(1.0)
}

/// `(A₁, A₂, A₃, A₄)` at the chart point `z₀`.
pub fn classical_coords(e: f64, params: &ResonanceParams, z0: Complex64) -> [f64; 4] {
    let pt = leaf_point(e, params, z0.norm_sqr());
    let w = z0 * pt.a1.powi(params.m as i32);
    [pt.a1, pt.a2, w.re, w.im]
}

/// `g₀ = dα_E/dx = [x(l²/A₂ + m²/A₁)]⁻¹`, so that `ω₀ = g₀ dx∧dφ`.
pub fn classical_form_density(e: f64, params: &ResonanceParams, x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(GyronError::NonPositive("x"));
    }
    if x == 0.0 {
        if params.l > 1 {
            return Err(GyronError::SingularAtPole);
        }
        return Ok(e.powi(params.m as i32));
    }
    let pt = leaf_point(e, params, x);
    Ok(density_at(params, &pt, x.ln()))
}

/// `g₀` from a solved point, using `x/A₂ = A₂^{l−1}A₁^{−m}` and
/// `x/A₁ = A₂^l A₁^{−m−1}` in log form.
pub(crate) fn density_at(params: &ResonanceParams, pt: &LeafPoint, ln_x: f64) -> f64 {
    let (l, m) = (params.lf(), params.mf());
    let t2 = l * l * (ln_x - pt.ln_a2).exp();
    let t1 = m * m * (ln_x - pt.ln_a1).exp();
    1.0 / (t1 + t2)
}

/// `ln x` at the equator `α = 0`.
pub fn equator_ln_x(e: f64, params: &ResonanceParams) -> f64 {
    let (l, m) = (params.lf(), params.mf());
    l * (e / (2.0 * m)).ln() - m * (e / (2.0 * l)).ln()
}

/// `∫₀^∞ g₀ dx` by Gauss–Legendre panels in `y = ln x`; equals `E/lm`.
pub fn classical_volume(e: f64, params: &ResonanceParams) -> f64 {
    let yc = equator_ln_x(e, params);
    let (l, m) = (params.lf(), params.mf());
    let (y0, y1) = (yc - 45.0 * l, yc + 45.0 * m);
    let gl = GaussLegendre::new(16);
    let panels = ((y1 - y0) / 0.5).ceil() as usize;
    let w = (y1 - y0) / panels as f64;
    (0..panels)
        .map(|i| {
            let a = y0 + i as f64 * w;
            gl.integrate(a, a + w, |y| {
                let pt = leaf_point(e, params, y.exp());
                density_at(params, &pt, y) * y.exp()
            })
        })
        .sum()
}

/// Fitted power laws of `g₀` at both poles against the predicted ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleReport {
    pub slope_zero: f64,
    pub expected_slope_zero: f64,
    pub prefactor_zero: f64,
    pub expected_prefactor_zero: f64,
    pub slope_infinity: f64,
    pub expected_slope_infinity: f64,
    pub prefactor_infinity: f64,
    pub expected_prefactor_infinity: f64,
}

impl PoleReport {
    pub fn passes(&self, slope_tol: f64, prefactor_rel_tol: f64) -> bool {
        (self.slope_zero - self.expected_slope_zero).abs() <= slope_tol
            && (self.slope_infinity - self.expected_slope_infinity).abs() <= slope_tol
            && (self.prefactor_zero / self.expected_prefactor_zero - 1.0).abs() <= prefactor_rel_tol
            && (self.prefactor_infinity / self.expected_prefactor_infinity - 1.0).abs()
                <= prefactor_rel_tol
    }
}

fn fit_window(e: f64, params: &ResonanceParams, lo: f64, hi: f64) -> (f64, Vec<(f64, f64)>) {
    let n = 25;
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let y = lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64;
            let pt = leaf_point(e, params, y.exp());
            (y, density_at(params, &pt, y).ln())
        })
        .collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    (linear_fit(&xs, &ys).0, pts)
}

/// Fits `ln g₀` against `ln x` on `[1e−12, 1e−9]` and `[1e9, 1e12]`. Prefactors
/// are read off at the innermost sample as `g₀ x^{−expected slope}`.
pub fn pole_asymptotics_check(e: f64, params: &ResonanceParams) -> PoleReport {
    pole_asymptotics_in(e, params, (1e-12, 1e-9), (1e9, 1e12))
}

pub fn pole_asymptotics_in(
    e: f64,
    params: &ResonanceParams,
    zero: (f64, f64),
    infinity: (f64, f64),
) -> PoleReport {
    let (l, m) = (params.lf(), params.mf());
    let s0 = -(1.0 - 1.0 / l);
    let si = -(1.0 + 1.0 / m);
    let (slope_zero, p0) = fit_window(e, params, zero.0, zero.1);
    let (slope_infinity, pi) = fit_window(e, params, infinity.0, infinity.1);
    let first = p0[0];
    let last = pi[pi.len() - 1];
    PoleReport {
        slope_zero,
        expected_slope_zero: s0,
        prefactor_zero: (first.1 - s0 * first.0).exp(),
        expected_prefactor_zero: (e / l).powf(m / l) / (l * l),
        slope_infinity,
        expected_slope_infinity: si,
        prefactor_infinity: (last.1 - si * last.0).exp(),
        expected_prefactor_infinity: (e / m).powf(l / m) / (m * m),
    }
}

/// Row of the classical table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalRow {
    pub x: f64,
    pub alpha: f64,
    pub g0: f64,
    pub a1: f64,
    pub a2: f64,
}

pub fn classical_table(e: f64, params: &ResonanceParams, xs: &[f64]) -> Vec<ClassicalRow> {
    xs.iter()
        .map(|&x| {
            let pt = leaf_point(e, params, x);
            let g0 = if x > 0.0 {
                density_at(params, &pt, x.ln())
            } else {
                classical_form_density(e, params, x).unwrap_or(f64::INFINITY)
            };
            ClassicalRow {
                x,
                alpha: pt.alpha,
                g0,
                a1: pt.a1,
                a2: pt.a2,
            }
        })
        .collect()
}

pub fn classical_csv(rows: &[ClassicalRow]) -> String {
    let mut s = String::from("x,alpha,g0,a1,a2\n");
    for r in rows {
        s.push_str(&format!("{:e},{:e},{:e},{:e},{:e}\n", r.x, r.alpha, r.g0, r.a1, r.a2));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(l: i64, m: i64) -> ResonanceParams {
        ResonanceParams::new(l, m, 1.0).unwrap()
    }

    #[test]
    fn bracket_rows() {
        let pt = PoissonTensor::new(&params(1, 2));
        let a = [1.0, 1.0, 1.0, 0.0];
        let e1 = [1.0, 0.0, 0.0, 0.0];
        let e3 = [0.0, 0.0, 1.0, 0.0];
        assert_eq!(pt.bracket(&e1, &e3, &a), 0.0);
        let a = [1.0, 1.0, 1.0, 0.5];
        assert_eq!(pt.bracket(&e1, &e3, &a), -1.0);
    }

    #[test]
    fn alpha_closed_form_for_one_one() {
        let p = params(1, 1);
        assert!((solve_alpha(2.0, &p, 3.0) - 0.5).abs() < 1e-15);
        assert!(solve_alpha(2.0, &p, 1.0).abs() < 1e-15);
        assert_eq!(solve_alpha(2.0, &p, 0.0), -1.0);
        for x in [1e-9, 0.3, 7.0, 1e12] {
            let a = solve_alpha(1.7, &p, x);
            assert!((a - 0.85 * (x - 1.0) / (x + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn alpha_residual_small_and_monotone() {
        for (l, m) in [(1, 2), (2, 3), (3, 4), (5, 2)] {
            let p = params(l, m);
            let mut prev = f64::NEG_INFINITY;
            for k in -40i32..=40 {
                let x = 10f64.powf(k as f64 * 0.5);
                let pt = leaf_point(0.8, &p, x);
                assert!(pt.alpha >= prev);
                prev = pt.alpha;
                let lhs = l as f64 * pt.ln_a2 - m as f64 * pt.ln_a1;
                assert!((lhs - x.ln()).abs() <= 1e-12 * x.ln().abs().max(1.0));
                if k.abs() < 10 {
                    assert!(alpha_residual(0.8, &p, x, pt.alpha) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn coords_at_poles_and_equator() {
        let p = params(2, 3);
        let c = classical_coords(1.5, &p, Complex64::new(0.0, 0.0));
        assert_eq!(c, [0.75, 0.0, 0.0, 0.0]);
        let c = classical_coords(2.0, &params(1, 1), Complex64::new(0.6, 0.8));
        assert!((c[0] - 1.0).abs() < 1e-15 && (c[1] - 1.0).abs() < 1e-15);
        assert!(((c[2] * c[2] + c[3] * c[3]).sqrt() - 1.0).abs() < 1e-15);
        let z = Complex64::new(0.3, -1.1);
        let c = classical_coords(1.5, &p, z);
        let t = PoissonTensor::new(&p);
        assert!(t.c_value(&c).abs() < 1e-12);
        assert!((2.0 * c[0] + 3.0 * c[1] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn density_for_one_one() {
        let p = params(1, 1);
        for x in [0.0, 0.4, 3.0, 100.0] {
            let g = classical_form_density(2.5, &p, x).unwrap();
            assert!((g - 2.5 / (1.0 + x).powi(2)).abs() < 1e-14 * g.max(1.0));
        }
        assert_eq!(
            classical_form_density(1.0, &params(2, 1), 0.0),
            Err(GyronError::SingularAtPole)
        );
    }

    #[test]
    fn volume_matches() {
        for (l, m) in [(1, 1), (1, 2), (2, 3)] {
            for e in [0.5, 1.0, 5.0] {
                let v = classical_volume(e, &params(l, m));
                let exact = e / (l * m) as f64;
                assert!((v / exact - 1.0).abs() < 1e-8, "{l} {m} {e} {v}");
            }
        }
    }

    #[test]
    fn jacobi_and_casimirs() {
        let t = PoissonTensor::new(&params(2, 3));
        let a = [0.7, 1.3, -0.4, 0.9];
        assert!(t.jacobi_residual(&a) < 1e-12);
        let basis = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        for e in &basis {
            assert!(t.bracket(&t.kappa_gradient(), e, &a).abs() < 1e-14);
            assert!(t.bracket(&t.c_gradient(&a), e, &a).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_header() {
        let rows = classical_table(1.0, &params(1, 2), &[0.0, 1.0]);
        let s = classical_csv(&rows);
        assert!(s.starts_with("x,alpha,g0,a1,a2\n"));
        assert_eq!(s.lines().count(), 3);
    }
}
