//! The reproducing measure `dm = L(x) k(x) dx dφ`.
//!
//! `L(x) = 1/(ħ^{rm+p+q+1}(p+rm)! q!) ∫₀^∞ A₁^{rm+p} A₂^q g₀(E,x) e^{−(A₁+A₂)/ħ} dE`
//! with `A₁, A₂` on the leaf of energy `E` and `g₀ = [x(l²/A₂ + m²/A₁)]⁻¹`.

use rayon::prelude::*;

use crate::algebra::{RepLabel, ResonanceParams};
use crate::classical::{density_at, leaf_point};
use crate::error::{GyronError, Result};
use crate::numerics::{golden_max, ln_factorial, GaussLegendre};

use super::KernelFunction;

/// Quadrature settings for the measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureOptions {
    /// Gauss–Legendre order per `ln x` panel.
    pub x_order: usize,
    /// Upper bound on the `ln x` panel width.
    pub x_panel: f64,
    /// Gauss–Legendre order per `ln E` panel.
    pub e_order: usize,
    /// The `E` integral stops once the integrand falls below this fraction
    /// of its peak.
    pub e_cutoff: f64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            x_order: 16,
            x_panel: 1.0,
            e_order: 20,
            e_cutoff: 1e-17,
        }
    }
}

/// `ln L(x)` tabulated on Gauss–Legendre nodes in `y = ln x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureDensity {
    pub params: ResonanceParams,
    pub label: RepLabel,
    pub ln_x: Vec<f64>,
    /// Quadrature weights for `dy`.
    pub weights: Vec<f64>,
    pub ln_l: Vec<f64>,
}

fn ln_integrand(params: &ResonanceParams, a: f64, q: f64, ln_x: f64, v: f64) -> f64 {
    let e = v.exp();
    let pt = leaf_point(e, params, ln_x.exp());
    let g0 = density_at(params, &pt, ln_x);
    a * pt.ln_a1 + q * pt.ln_a2 + g0.ln() - (pt.a1 + pt.a2) / params.hbar + v
}

/// `ln L(x)` at a single point.
pub fn ln_measure_at(
    params: &ResonanceParams,
    label: &RepLabel,
    ln_x: f64,
    opts: &MeasureOptions,
) -> Result<f64> {
    let h = params.hbar;
    let a = (label.p + label.r * params.m) as f64;
    let q = label.q as f64;
    let n_tot = a + q;
    let f = |v: f64| ln_integrand(params, a, q, ln_x, v);

    // locate the peak in v = ln E
    let centre = h.ln() + (n_tot + 1.0).ln() + (params.l.max(params.m) as f64).ln();
    let (lo, hi) = (centre - 40.0, centre + 6.0);
    let step = 0.25;
    let n_scan = ((hi - lo) / step) as usize;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..=n_scan {
        let v = lo + i as f64 * step;
        let val = f(v);
        if val > best.1 {
            best = (v, val);
        }
    }
    let (v_peak, peak) = golden_max(f, best.0 - step, best.0 + step, 60);
    if !peak.is_finite() {
        return Err(GyronError::QuadratureNotConverged(format!(
            "measure integrand has no finite peak at ln x = {ln_x}"
        )));
    }
    let floor = peak + opts.e_cutoff.ln();
    let h0 = (1.5 / (n_tot + 2.0).sqrt()).min(0.5);
    let gl = GaussLegendre::new(opts.e_order);
    let mut sum = 0.0;
    for dir in [1.0, -1.0] {
        let mut start = v_peak;
        let mut width = h0;
        let mut done = false;
        for _ in 0..400 {
            let end = start + dir * width;
            let (a0, b0) = if dir > 0.0 { (start, end) } else { (end, start) };
            let mut panel_max = f64::NEG_INFINITY;
            let mut part = 0.0;
            for (v, w) in gl.mapped(a0, b0) {
                let lv = f(v);
                panel_max = panel_max.max(lv);
                part += w * (lv - peak).exp();
            }
            sum += part;
            let edge = f(end);
            if panel_max < floor && edge < floor {
                done = true;
                break;
            }
            start = end;
            if edge < peak - 3.0 {
                width *= 1.25;
            }
        }
        if !done {
            return Err(GyronError::QuadratureNotConverged(format!(
                "energy integral at ln x = {ln_x} did not decay"
            )));
        }
    }
    let ln_norm = (n_tot + 1.0) * h.ln()
        + ln_factorial((label.p + label.r * params.m) as u64)
        + ln_factorial(label.q as u64);
    Ok(peak + sum.ln() - ln_norm)
}

/// Range of `ln x` carrying the mass of `xⁿ L(x)` for `0 ≤ n ≤ r`.
fn x_range(params: &ResonanceParams, label: &RepLabel, kernel: &KernelFunction) -> (f64, f64) {
    let (l, m) = (params.lf(), params.mf());
    let n_tot = (label.p + label.r * params.m + label.q) as f64;
    let yc = (l - m) * (params.hbar * (n_tot + 1.0)).ln();
    let c = &kernel.ln_coeffs;
    let r = label.r as usize;
    let (first, last) = if r == 0 {
        (yc, yc)
    } else {
        (c[0] - c[1], c[r - 1] - c[r])
    };
    let lo = first.min(yc).min(last) - 40.0 * l / (label.q as f64 + 1.0) - 8.0;
    let hi = last.max(yc).max(first) + 40.0 * m / (label.p as f64 + 1.0) + 8.0;
    (lo, hi)
}

pub fn measure_density(
    params: &ResonanceParams,
    label: &RepLabel,
    kernel: &KernelFunction,
    opts: &MeasureOptions,
) -> Result<MeasureDensity> {
    let (lo, hi) = x_range(params, label, kernel);
    let width = opts.x_panel.min(3.0 / (label.r as f64 + 1.0).sqrt());
    let panels = ((hi - lo) / width).ceil() as usize;
    let w = (hi - lo) / panels as f64;
    let gl = GaussLegendre::new(opts.x_order);
    let mut ln_x = Vec::with_capacity(panels * opts.x_order);
    let mut weights = Vec::with_capacity(panels * opts.x_order);
    for i in 0..panels {
        let a = lo + i as f64 * w;
        for (y, wt) in gl.mapped(a, a + w) {
            ln_x.push(y);
            weights.push(wt);
        }
    }
    let ln_l = ln_x
        .par_iter()
        .map(|&y| ln_measure_at(params, label, y, opts))
        .collect::<Result<Vec<f64>>>()?;
    Ok(MeasureDensity {
        params: *params,
        label: *label,
        ln_x,
        weights,
        ln_l,
    })
}

impl MeasureDensity {
    /// `(1/ħ) ∫ x^s L(x) dx` for real `s`.
    pub fn moment(&self, s: f64) -> f64 {
        let mut sum = 0.0;
        for ((y, w), ll) in self.ln_x.iter().zip(&self.weights).zip(&self.ln_l) {
            sum += w * ((s + 1.0) * y + ll).exp();
        }
        sum / self.params.hbar
    }

    /// `(1/ħ) ∫ f(x) L(x) dx`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut sum = 0.0;
        for ((y, w), ll) in self.ln_x.iter().zip(&self.weights).zip(&self.ln_l) {
            let x = y.exp();
            sum += w * x * ll.exp() * f(x);
        }
        sum / self.params.hbar
    }

    /// `(1/2πħ)∫dm = (1/ħ)∫ L k dx`.
    pub fn dm_integral(&self, kernel: &KernelFunction) -> f64 {
        let mut sum = 0.0;
        for ((y, w), ll) in self.ln_x.iter().zip(&self.weights).zip(&self.ln_l) {
            sum += w * (y + ll + kernel.ln_k(y.exp())).exp();
        }
        sum / self.params.hbar
    }

    /// Gram matrix `(φ⁽ⁿ⁾, φ⁽ˢ⁾)` of the orthonormal monomials under the
    /// integral scalar product. The angular integral makes it diagonal;
    /// off-diagonal entries are evaluated with an explicit `φ` rule.
    pub fn gram(&self, kernel: &KernelFunction, n_phi: usize) -> nalgebra::DMatrix<num_complex::Complex64> {
        use num_complex::Complex64;
        let d = kernel.label.dim();
        let mut g = nalgebra::DMatrix::<Complex64>::zeros(d, d);
        let phases: Vec<Vec<Complex64>> = (0..n_phi)
            .map(|j| {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
                (0..d as i64)
                    .map(|k| Complex64::from_polar(1.0, -(k as f64) * phi))
                    .collect()
            })
            .collect();
        for n in 0..d {
            for s in 0..d {
                let ln_cc = 0.5 * (kernel.ln_coeffs[n] + kernel.ln_coeffs[s]);
                let radial = {
                    let mut sum = 0.0;
                    for ((y, w), ll) in self.ln_x.iter().zip(&self.weights).zip(&self.ln_l) {
                        sum += w * (ln_cc + (0.5 * (n + s) as f64 + 1.0) * y + ll).exp();
                    }
                    sum / self.params.hbar
                };
                let ang: Complex64 = phases
                    .iter()
                    .map(|p| p[n] * p[s].conj())
                    .sum::<Complex64>()
                    / n_phi as f64;
                g[(n, s)] = ang * radial;
            }
        }
        g
    }

    /// Fitted exponent of `L k` against `x` on `[lo, hi]`.
    pub fn endpoint_slope(&self, kernel: &KernelFunction, lo: f64, hi: f64, opts: &MeasureOptions) -> Result<f64> {
        let n = 17;
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for i in 0..n {
            let y = lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64;
            xs.push(y);
            ys.push(ln_measure_at(&self.params, &self.label, y, opts)? + kernel.ln_k(y.exp()));
        }
        Ok(crate::numerics::linear_fit(&xs, &ys).0)
    }
}

/// `ln L(x)` through the independent integral over `A₁`:
/// `L = 1/(l ħ^{N+1}(p+rm)! q! x) ∫ A₁^{rm+p} A₂^{q+1} e^{−(A₁+A₂)/ħ} dA₁`
/// with `A₂ = (x A₁^m)^{1/l}`.
pub fn ln_measure_oracle(params: &ResonanceParams, label: &RepLabel, ln_x: f64) -> f64 {
    let (l, m) = (params.lf(), params.mf());
    let h = params.hbar;
    let a = (label.p + label.r * params.m) as f64;
    let q = label.q as f64;
    let f = |u: f64| {
        let ln_a1 = u;
        let ln_a2 = (ln_x + m * ln_a1) / l;
        a * ln_a1 + (q + 1.0) * ln_a2 - (ln_a1.exp() + ln_a2.exp()) / h + u
    };
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut u = h.ln() - 60.0;
    while u < h.ln() + 15.0 {
        let v = f(u);
        if v > best.1 {
            best = (u, v);
        }
        u += 0.02;
    }
    let peak = best.1;
    let gl = GaussLegendre::new(30);
    let mut sum = 0.0;
    let mut a0 = best.0 - 80.0;
    while a0 < best.0 + 20.0 {
        sum += gl.integrate(a0, a0 + 0.05, |u| (f(u) - peak).exp());
        a0 += 0.05;
    }
    let ln_norm = l.ln()
        + (a + q + 1.0) * h.ln()
        + ln_factorial((label.p + label.r * params.m) as u64)
        + ln_factorial(label.q as u64);
    peak + sum.ln() - ln_norm - ln_x
}
