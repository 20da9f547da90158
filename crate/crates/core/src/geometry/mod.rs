//! Quantum Kähler geometry of an irreducible leaf: reproducing kernel,
//! metric, Ricci density, reproducing measure, Wick symbols and the quantum
//! restriction.
//!
//! The kernel is rescaled, `x = s₀ξ` with `ĉ₀ = ĉ_r = 1`. Every quantity is
//! evaluated from the normalized weights `w_n ∝ ĉ_n ξⁿ`: with `μ` and `σ²`
//! the mean and variance of `n` under `w`, `ξ (ln k̂)' = μ` and
//! `(ξ (ln k̂)')' = σ²/ξ`. Moments are taken about the heaviest index, so
//! both poles (`ξ → 0` and `ξ → ∞`, the second chart) keep full relative
//! precision.

pub mod measure;
pub mod restriction;
pub mod symbol;

use serde::{Deserialize, Serialize};

use crate::algebra::{ln_kernel_coeff, RepLabel, ResonanceParams};
use crate::numerics::{log_sum_exp, GaussLegendre};

pub use measure::{measure_density, MeasureDensity, MeasureOptions};
pub use restriction::{
    first_order_correction, pointwise_restriction, quantum_restriction, Generator,
    OrderedPolynomial,
};
pub use symbol::{
    coherent_projector, effective_field, off_diagonal_symbol, probability_at,
    probability_function, quantum_coords, star_product, star_product_quadrature, wick_symbol,
    Symbol, SymbolField, SymbolGrid,
};

/// Weight distribution of the terms of a positive polynomial at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    /// `ln P(t)`.
    pub ln_p: f64,
    /// Normalized term weights `c_n tⁿ / P(t)`.
    pub w: Vec<f64>,
    /// Index of the heaviest term.
    pub n0: usize,
    /// `μ − n0`.
    pub shift: f64,
    /// `σ²`.
    pub var: f64,
}

impl Moments {
    pub fn mean(&self) -> f64 {
        self.n0 as f64 + self.shift
    }

    /// `deg − μ`, accurate when the weight sits at the top index.
    pub fn mean_from_top(&self) -> f64 {
        (self.w.len() - 1 - self.n0) as f64 - self.shift
    }

    /// `n − μ` for index `n`.
    pub fn centred(&self, n: usize) -> f64 {
        (n as f64 - self.n0 as f64) - self.shift
    }
}

/// A polynomial with positive coefficients stored as logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPoly {
    pub ln_c: Vec<f64>,
}

impl LogPoly {
    pub fn new(ln_c: Vec<f64>) -> Self {
        Self { ln_c }
    }

    pub fn degree(&self) -> usize {
        self.ln_c.len() - 1
    }

    /// `ln t` below which only the constant and linear terms matter.
    pub fn low_cut(&self) -> f64 {
        if self.ln_c.len() < 2 {
            return f64::NEG_INFINITY;
        }
        self.ln_c[0] - self.ln_c[1] - 80.0
    }

    /// `ln t` above which only the top two terms matter.
    pub fn high_cut(&self) -> f64 {
        let d = self.degree();
        if d == 0 {
            return f64::INFINITY;
        }
        self.ln_c[d - 1] - self.ln_c[d] + 80.0
    }

    pub fn moments(&self, ln_t: f64) -> Moments {
        let ln_t = ln_t.clamp(self.low_cut(), self.high_cut());
        let terms: Vec<f64> = self
            .ln_c
            .iter()
            .enumerate()
            .map(|(n, c)| c + n as f64 * ln_t)
            .collect();
        let (n0, &top) = terms
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
        let raw: Vec<f64> = terms.iter().map(|v| (v - top).exp()).collect();
        let sum: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / sum).collect();
        let shift: f64 = w
            .iter()
            .enumerate()
            .map(|(n, wn)| (n as f64 - n0 as f64) * wn)
            .sum();
        let var: f64 = w
            .iter()
            .enumerate()
            .map(|(n, wn)| {
                let d = (n as f64 - n0 as f64) - shift;
                d * d * wn
            })
            .sum();
        Moments {
            ln_p: top + sum.ln(),
            w,
            n0,
            shift,
            var,
        }
    }

    pub fn ln_eval(&self, ln_t: f64) -> f64 {
        if ln_t == f64::NEG_INFINITY {
            return self.ln_c[0];
        }
        let terms: Vec<f64> = self
            .ln_c
            .iter()
            .enumerate()
            .map(|(n, c)| c + n as f64 * ln_t)
            .collect();
        log_sum_exp(&terms)
    }

    /// `(t (ln P)')' = σ²/t`, with the pole limit `c₁/c₀` below the cut.
    pub fn log_laplacian(&self, ln_t: f64) -> f64 {
        if self.degree() == 0 {
            return 0.0;
        }
        if ln_t <= self.low_cut() {
            return (self.ln_c[1] - self.ln_c[0]).exp();
        }
        if ln_t >= self.high_cut() {
            let d = self.degree();
            return (self.ln_c[d - 1] - self.ln_c[d] - 2.0 * ln_t).exp();
        }
        let m = self.moments(ln_t);
        (m.var.ln() - ln_t).exp()
    }

    /// Coefficients of `Q` in `(t (ln P)')' = Q/P²`,
    /// `Q = Σ_{i<j} c_i c_j (j−i)² t^{i+j−1}`.
    pub fn log_laplacian_numerator(&self) -> LogPoly {
        let n = self.ln_c.len();
        if n <= 1 {
            return LogPoly::new(vec![0.0]);
        }
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); 2 * n - 3];
        for i in 0..n {
            for j in (i + 1)..n {
                let diff = (j - i) as f64;
                buckets[i + j - 1].push(self.ln_c[i] + self.ln_c[j] + 2.0 * diff.ln());
            }
        }
        LogPoly::new(buckets.iter().map(|b| log_sum_exp(b)).collect())
    }
}

/// The reproducing kernel `k(x) = Σ c_n xⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFunction {
    pub params: ResonanceParams,
    pub label: RepLabel,
    /// `ln c_n`.
    pub ln_coeffs: Vec<f64>,
    /// `ln s₀`, with `x = s₀ ξ`.
    pub ln_scale: f64,
    /// `k̂(ξ) = k(s₀ξ)`.
    pub scaled: LogPoly,
}

pub fn kernel(params: &ResonanceParams, label: &RepLabel) -> KernelFunction {
    let r = label.r;
    let ln_coeffs: Vec<f64> = (0..=r).map(|n| ln_kernel_coeff(params, label, n)).collect();
    let ln_scale = if r == 0 {
        0.0
    } else {
        -ln_coeffs[r as usize] / r as f64
    };
    let scaled = LogPoly::new(
        ln_coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c + n as f64 * ln_scale)
            .collect(),
    );
    KernelFunction {
        params: *params,
        label: *label,
        ln_coeffs,
        ln_scale,
        scaled,
    }
}

impl KernelFunction {
    pub fn r(&self) -> u32 {
        self.label.r
    }

    pub fn coeff(&self, n: usize) -> f64 {
        self.ln_coeffs[n].exp()
    }

    pub fn coeffs(&self) -> Vec<f64> {
        self.ln_coeffs.iter().map(|v| v.exp()).collect()
    }

    /// `ln ξ` for `x`, `−∞` at the pole.
    pub fn ln_xi(&self, x: f64) -> f64 {
        if x == 0.0 {
            f64::NEG_INFINITY
        } else {
            x.ln() - self.ln_scale
        }
    }

    pub fn ln_k_xi(&self, ln_xi: f64) -> f64 {
        self.scaled.ln_eval(ln_xi)
    }

    pub fn ln_k(&self, x: f64) -> f64 {
        self.ln_k_xi(self.ln_xi(x))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.ln_k(x).exp()
    }

    pub fn moments(&self, ln_xi: f64) -> Moments {
        self.scaled.moments(ln_xi)
    }
}

/// Metric `g = ħ(x(ln k)')'` and Ricci density `ρ_d = (x(ln g)')'`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumMetric {
    pub kernel: KernelFunction,
    /// `N = Q_k̂`, so that `g = ħ N/k̂²` per unit `dξ`.
    pub n_poly: LogPoly,
}

pub fn metric_and_ricci(kernel: &KernelFunction) -> QuantumMetric {
    QuantumMetric {
        n_poly: kernel.scaled.log_laplacian_numerator(),
        kernel: kernel.clone(),
    }
}

impl QuantumMetric {
    pub fn hbar(&self) -> f64 {
        self.kernel.params.hbar
    }

    fn degenerate(&self) -> bool {
        self.kernel.r() == 0
    }

    /// `g/ħ` per unit `dξ`.
    pub fn metric_density_xi(&self, ln_xi: f64) -> f64 {
        self.kernel.scaled.log_laplacian(ln_xi)
    }

    /// `(ξ (ln N)')'` per unit `dξ`.
    fn n_density_xi(&self, ln_xi: f64) -> f64 {
        if self.degenerate() {
            0.0
        } else {
            self.n_poly.log_laplacian(ln_xi)
        }
    }

    /// `ρ_d` per unit `dξ`.
    pub fn ricci_density_xi(&self, ln_xi: f64) -> f64 {
        if self.degenerate() {
            return 0.0;
        }
        self.n_density_xi(ln_xi) - 2.0 * self.metric_density_xi(ln_xi)
    }

    /// `(g − ħρ_d/2)/ħ` per unit `dξ`.
    pub fn area_density_xi(&self, ln_xi: f64) -> f64 {
        if self.degenerate() {
            return 0.0;
        }
        2.0 * self.metric_density_xi(ln_xi) - 0.5 * self.n_density_xi(ln_xi)
    }

    /// `g(x)` per unit `dx` (so `ω = g dx∧dφ`).
    pub fn g(&self, x: f64) -> f64 {
        self.hbar() * self.metric_density_xi(self.kernel.ln_xi(x)) * (-self.kernel.ln_scale).exp()
    }

    /// `g(0) = ħ c₁`.
    pub fn g_at_zero(&self) -> f64 {
        if self.degenerate() {
            0.0
        } else {
            self.hbar() * self.kernel.coeff(1)
        }
    }

    /// `ρ_d(x)` per unit `dx`.
    pub fn ricci(&self, x: f64) -> f64 {
        self.ricci_density_xi(self.kernel.ln_xi(x)) * (-self.kernel.ln_scale).exp()
    }

    /// `(1/ħ)∫₀^x g dx = x k'/k`, running from 0 to `r`.
    pub fn omega_cumulative_xi(&self, ln_xi: f64) -> f64 {
        if self.degenerate() {
            return 0.0;
        }
        let m = self.kernel.moments(ln_xi);
        if ln_xi <= 0.0 {
            m.mean()
        } else {
            self.kernel.r() as f64 - m.mean_from_top()
        }
    }

    /// `∫₀^x ρ_d dx = x N'/N − 2x k'/k`, running from 0 to −2.
    pub fn ricci_cumulative_xi(&self, ln_xi: f64) -> f64 {
        if self.degenerate() {
            return 0.0;
        }
        let mk = self.kernel.moments(ln_xi);
        let mn = self.n_poly.moments(ln_xi);
        if ln_xi <= 0.0 {
            mn.mean() - 2.0 * mk.mean()
        } else {
            let total = self.n_poly.degree() as f64 - 2.0 * self.kernel.r() as f64;
            total - (mn.mean_from_top() - 2.0 * mk.mean_from_top())
        }
    }

    /// `Ψ = ∫₀^x (g − ħρ_d/2)/ħ dx`, running from 0 to `r + 1`.
    pub fn area_cumulative_xi(&self, ln_xi: f64) -> f64 {
        self.omega_cumulative_xi(ln_xi) - 0.5 * self.ricci_cumulative_xi(ln_xi)
    }

    /// `θ = ħ x (ln k)'`, the `dφ` component of the Kähler primitive.
    pub fn kahler_primitive(&self, x: f64) -> f64 {
        self.hbar() * self.omega_cumulative_xi(self.kernel.ln_xi(x))
    }

    /// Total of the area density, `r + 1` for `r ≥ 1`.
    pub fn area_total(&self) -> f64 {
        if self.degenerate() {
            0.0
        } else {
            let n_deg = self.n_poly.degree() as f64;
            self.kernel.r() as f64 + 0.5 * (2.0 * self.kernel.r() as f64 - n_deg)
        }
    }
}


/// Gauss–Legendre panels in `y = ln ξ` over a symmetric range.
pub(crate) fn xi_panels(half_width: f64, panel: f64, order: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::new(order);
    let n = (2.0 * half_width / panel).ceil() as usize;
    let h = 2.0 * half_width / n as f64;
    let mut out = Vec::with_capacity(n * order);
    for i in 0..n {
        let a = -half_width + i as f64 * h;
        out.extend(gl.mapped(a, a + h));
    }
    out
}

/// Integral identities of a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport {
    pub r: u32,
    /// `(1/2πħ)∫ω`, expected `r`.
    pub omega_integral: f64,
    /// `(1/2πħ)∫dm`, expected `r + 1`.
    pub dm_integral: f64,
    /// `(1/2π)∫ Ricci`, expected `−2`.
    pub ricci_integral: f64,
    pub tolerances: IntegralTolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralTolerances {
    pub omega: f64,
    pub dm: f64,
    pub ricci: f64,
}

impl Default for IntegralTolerances {
    fn default() -> Self {
        Self {
            omega: 1e-8,
            dm: 1e-4,
            ricci: 1e-6,
        }
    }
}

impl IntegralReport {
    pub fn omega_ok(&self) -> bool {
        (self.omega_integral - self.r as f64).abs() <= self.tolerances.omega
    }

    pub fn dm_ok(&self) -> bool {
        (self.dm_integral - (self.r as f64 + 1.0)).abs() <= self.tolerances.dm
    }

    pub fn ricci_ok(&self) -> bool {
        self.r == 0 || (self.ricci_integral + 2.0).abs() <= self.tolerances.ricci
    }

    pub fn passes(&self) -> bool {
        self.omega_ok() && self.dm_ok() && self.ricci_ok()
    }
}

/// `(1/ħ)∫g dx` and `∫ρ_d dx` by quadrature in `ln ξ`.
pub fn metric_integrals(metric: &QuantumMetric) -> (f64, f64) {
    let nodes = xi_panels(48.0, 0.25, 16);
    let mut om = 0.0;
    let mut ri = 0.0;
    for (y, w) in nodes {
        let xi = y.exp();
        om += w * xi * metric.metric_density_xi(y);
        ri += w * xi * metric.ricci_density_xi(y);
    }
    (om, ri)
}

pub fn integral_identities(
    metric: &QuantumMetric,
    measure: &MeasureDensity,
    tolerances: IntegralTolerances,
) -> IntegralReport {
    let (omega_integral, ricci_integral) = metric_integrals(metric);
    IntegralReport {
        r: metric.kernel.r(),
        omega_integral,
        dm_integral: measure.dm_integral(&metric.kernel),
        ricci_integral,
        tolerances,
    }
}

/// Row of the geometry table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryRow {
    pub x: f64,
    pub k: f64,
    pub g: f64,
    pub ricci: f64,
    pub l: f64,
    pub lk: f64,
}

pub fn geometry_table(metric: &QuantumMetric, measure: &MeasureDensity) -> Vec<GeometryRow> {
    measure
        .ln_x
        .iter()
        .zip(&measure.ln_l)
        .map(|(&y, &ln_l)| {
            let x = y.exp();
            let ln_k = metric.kernel.ln_k(x);
            GeometryRow {
                x,
                k: ln_k.exp(),
                g: metric.g(x),
                ricci: metric.ricci(x),
                l: ln_l.exp(),
                lk: (ln_l + ln_k).exp(),
            }
        })
        .collect()
}

pub fn geometry_csv(rows: &[GeometryRow]) -> String {
    let mut s = String::from("x,k,g,ricci,L,Lk\n");
    for r in rows {
        s.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{:e}\n",
            r.x, r.k, r.g, r.ricci, r.l, r.lk
        ));
    }
    s
}
