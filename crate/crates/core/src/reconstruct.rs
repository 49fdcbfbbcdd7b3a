//! From a solution `w` back to the flow in the strip, and residual checks of
//! the original free-boundary problem.
//!
//! With `η = w + h` the conformal coordinates are `V = extend(η)` and its
//! conjugate `U`. `ζ` is the harmonic function with `ζ(·, −h) = 0` and
//! `ζ(·, 0) = m + γη²/2`, and `ξ = ζ − m − γV²/2`, which satisfies
//! `Δξ = −γ(V_x² + V_y²)`. The stream function is `ψ(U, V) = ξ`, so all
//! checks are made on the strip without mapping to the fluid domain.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::branch::BranchPoint;
use crate::dno::{conjugate_terms, cosh_ratio, dn_apply, extend_terms, sinh_ratio, ExtensionTerms};
use crate::error::{Error, Result};
use crate::freqset::{GeneratorBasis, ModeKind};
use crate::trig::TrigSum;
use crate::waveop::{derived_constants, stagnation_indicator, WaveParams};

/// Stencil steps for the convergence-order measurement are `h / ORDER_STEP`
/// and half of it.
pub const ORDER_STEP: f64 = 16.0;

/// Sample points per axis for the order measurement.
pub const ORDER_SAMPLES: usize = 12;

/// Step of the centred differences in the Cauchy–Riemann check.
pub const CR_STEP: f64 = 1e-4;

/// `η = w + h`, the mass flux `m` and the Bernoulli constant `Q`.
pub fn surface(p: &WaveParams, pt: &BranchPoint) -> (TrigSum, f64, f64) {
    let (m, q) = derived_constants(p, pt.lambda, pt.mu);
    (pt.w.add_constant(p.h), m, q)
}

/// Boundary data `m + γη²/2` of `ζ`, on a lattice wide enough to hold `η²`.
pub fn zeta_data(p: &WaveParams, eta: &TrigSum, m: f64) -> Result<TrigSum> {
    let wide = Arc::new(eta.basis().widened(2));
    let eta = eta.rebased(&wide)?;
    let sq = eta.mul(&eta)?;
    Ok(sq.sum.scale(p.gamma / 2.0).add_constant(m))
}

/// Uniform tensor grid on `[x_min, x_max] × [−h, 0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl FlowGrid {
    /// `nx × ny` nodes, end points included.
    pub fn new(x_min: f64, x_max: f64, h: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 3 || ny < 3 || !(x_max > x_min) || !(h > 0.0) {
            return Err(Error::InvalidInput {
                field: "grid".into(),
                reason: format!("need at least 3×3 nodes on a non-empty strip, got {nx}×{ny}"),
            });
        }
        let lin = |a: f64, b: f64, n: usize| -> Vec<f64> {
            (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
        };
        let mut ys = lin(-h, 0.0, ny);
        ys[ny - 1] = 0.0;
        Ok(FlowGrid { xs: lin(x_min, x_max, nx), ys })
    }

    /// `[0, 2π/g₁] × [−h, 0]`, where `g₁` is the first generator.
    pub fn window(basis: &GeneratorBasis, h: f64, nx: usize, ny: usize) -> Result<Self> {
        let len = 2.0 * std::f64::consts::PI / basis.generators()[0];
        Self::new(0.0, len, h, nx, ny)
    }

    pub fn dx(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    pub fn dy(&self) -> f64 {
        self.ys[1] - self.ys[0]
    }

    fn check(&self, h: f64) -> Result<()> {
        let slack = 4.0 * f64::EPSILON * h;
        for &y in &self.ys {
            if !(y >= -h - slack && y <= slack) {
                return Err(Error::OutsideStrip { x: self.xs[0], y, h });
            }
        }
        Ok(())
    }
}

/// Fields sampled on a [`FlowGrid`], stored row-major (`y` outer, `x` inner).
#[derive(Clone, Debug)]
pub struct FlowField {
    pub grid: FlowGrid,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub zeta: Vec<f64>,
    pub xi: Vec<f64>,
    /// `η` at the grid abscissae.
    pub eta: Vec<f64>,
    pub m_flux: f64,
    pub q: f64,
    h: f64,
    gamma: f64,
    eta_sum: TrigSum,
    zeta_sum: TrigSum,
    eta_terms: ExtensionTerms,
    zeta_terms: ExtensionTerms,
}

impl FlowField {
    pub fn at(&self, values: &[f64], i: usize, j: usize) -> f64 {
        values[j * self.grid.xs.len() + i]
    }

    pub fn v_at(&self, x: f64, y: f64) -> f64 {
        extend_terms(self.h, &self.eta_terms, x, y)
    }

    pub fn u_at(&self, x: f64, y: f64) -> f64 {
        conjugate_terms(self.h, &self.eta_terms, x, y)
    }

    pub fn zeta_at(&self, x: f64, y: f64) -> f64 {
        extend_terms(self.h, &self.zeta_terms, x, y)
    }

    pub fn xi_at(&self, x: f64, y: f64) -> f64 {
        let v = self.v_at(x, y);
        self.zeta_at(x, y) - self.m_flux - self.gamma * v * v / 2.0
    }

    pub fn eta_sum(&self) -> &TrigSum {
        &self.eta_sum
    }

    pub fn zeta_data(&self) -> &TrigSum {
        &self.zeta_sum
    }

    /// `|Δ_δ ξ + γ(V_x² + V_y²)|` at `(x, y)` with five-point and centred
    /// stencils of step `d`.
    pub fn laplacian_residual(&self, x: f64, y: f64, d: f64) -> f64 {
        let xi = |a, b| self.xi_at(a, b);
        let lap = (xi(x + d, y) + xi(x - d, y) + xi(x, y + d) + xi(x, y - d) - 4.0 * xi(x, y)) / (d * d);
        let vx = (self.v_at(x + d, y) - self.v_at(x - d, y)) / (2.0 * d);
        let vy = (self.v_at(x, y + d) - self.v_at(x, y - d)) / (2.0 * d);
        (lap + self.gamma * (vx * vx + vy * vy)).abs()
    }
}

/// Evaluates `Σ c S_k(y) trig(kx)` (and the conjugate) on a tensor grid by
/// separating the `x` and `y` factors.
fn tabulate(h: f64, t: &TrigSum, grid: &FlowGrid, conjugate: bool) -> Vec<f64> {
    let (nx, ny) = (grid.xs.len(), grid.ys.len());
    let basis = t.basis();
    let mean = t.mean();
    let mut out: Vec<f64> = grid
        .ys
        .iter()
        .flat_map(|&y| {
            grid.xs
                .iter()
                .map(move |&x| if conjugate { mean / h * x } else { mean / h * (y + h) })
        })
        .collect();
    for (mode, c) in t.terms() {
        let k = basis.embed_raw(&mode.vec);
        let col: Vec<f64> = grid
            .xs
            .iter()
            .map(|&x| match (mode.kind, conjugate) {
                (ModeKind::Sin, false) => c * (k * x).sin(),
                (ModeKind::Sin, true) => -c * (k * x).cos(),
                (_, false) => c * (k * x).cos(),
                (_, true) => c * (k * x).sin(),
            })
            .collect();
        for (j, &y) in grid.ys.iter().enumerate() {
            let r = if conjugate { cosh_ratio(k, h, y) } else { sinh_ratio(k, h, y) };
            let row = &mut out[j * nx..(j + 1) * nx];
            for (o, cx) in row.iter_mut().zip(&col) {
                *o += r * cx;
            }
        }
    }
    debug_assert_eq!(out.len(), nx * ny);
    out
}

/// Samples `U`, `V`, `ζ` and `ξ` on `grid`.
pub fn build_field(p: &WaveParams, pt: &BranchPoint, grid: &FlowGrid) -> Result<FlowField> {
    grid.check(p.h)?;
    let (eta, m, q) = surface(p, pt);
    let zeta_sum = zeta_data(p, &eta, m)?;
    let v = tabulate(p.h, &eta, grid, false);
    let u = tabulate(p.h, &eta, grid, true);
    let zeta = tabulate(p.h, &zeta_sum, grid, false);
    let xi = zeta
        .iter()
        .zip(&v)
        .map(|(z, vv)| z - m - p.gamma * vv * vv / 2.0)
        .collect();
    Ok(FlowField {
        eta: eta.eval_grid(&grid.xs),
        grid: grid.clone(),
        u,
        v,
        zeta,
        xi,
        m_flux: m,
        q,
        h: p.h,
        gamma: p.gamma,
        eta_terms: ExtensionTerms::new(&eta),
        zeta_terms: ExtensionTerms::new(&zeta_sum),
        eta_sum: eta,
        zeta_sum,
    })
}

/// Pass/fail limits applied to a [`VerificationReport`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub bernoulli: f64,
    pub boundary: f64,
    pub laplacian: f64,
    pub order_min: f64,
    pub order_max: f64,
    pub cauchy_riemann: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            bernoulli: 1e-8,
            boundary: 1e-10,
            laplacian: 1e-4,
            order_min: 1.9,
            order_max: 2.1,
            cauchy_riemann: 1e-8,
        }
    }
}

/// Where `|∇ξ|` is smallest on the grid interior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagnationSite {
    pub x: f64,
    pub y: f64,
    pub grad_xi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub s: f64,
    pub lambda: f64,
    pub m_flux: f64,
    pub q: f64,
    /// Max of `|(ζ_y − γVV_y)² − (Q − 2gV)(V_x² + V_y²)|` on `y = 0`.
    pub bernoulli: f64,
    /// Max of `|ξ(x, 0)|`.
    pub xi_top: f64,
    /// Max of `|ξ(x, −h) + m|`.
    pub xi_bottom: f64,
    /// Max Laplacian-identity residual on the interior grid nodes.
    pub laplacian: f64,
    /// The same residual at sample points with stencil steps `h/16` and `h/32`.
    pub laplacian_coarse: f64,
    pub laplacian_fine: f64,
    /// `log₂(coarse / fine)`; absent when the coarse residual is at rounding level.
    pub laplacian_order: Option<f64>,
    pub cauchy_riemann: f64,
    /// Min of `|∇V|` on the grid interior.
    pub min_grad_v: f64,
    pub stagnation: bool,
    pub stagnation_site: Option<StagnationSite>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    pub failures: Vec<String>,
}

impl VerificationReport {
    pub fn check(&self, t: &Thresholds) -> Verdict {
        let mut failures = Vec::new();
        let mut limit = |name: &str, value: f64, tol: f64| {
            if !(value <= tol) {
                failures.push(format!("{name} residual {value:e} exceeds {tol:e}"));
            }
        };
        limit("bernoulli", self.bernoulli, t.bernoulli);
        limit("xi_top", self.xi_top, t.boundary);
        limit("xi_bottom", self.xi_bottom, t.boundary);
        limit("laplacian", self.laplacian, t.laplacian);
        limit("cauchy_riemann", self.cauchy_riemann, t.cauchy_riemann);
        if let Some(order) = self.laplacian_order {
            if !(order >= t.order_min && order <= t.order_max) {
                failures.push(format!(
                    "laplacian order {order:.4} outside [{}, {}]",
                    t.order_min, t.order_max
                ));
            }
        }
        Verdict {
            passed: failures.is_empty(),
            failures,
        }
    }
}

/// Residual checks of the free-boundary problem for one field.
pub fn verify_system(p: &WaveParams, field: &FlowField, pt: &BranchPoint) -> VerificationReport {
    let grid = &field.grid;
    let (nx, ny) = (grid.xs.len(), grid.ys.len());
    let geom = p.strip();

    // surface condition from spectral boundary derivatives
    let eta = field.eta_sum();
    let v_x = eta.derivative().eval_grid(&grid.xs);
    let v_y = dn_apply(geom, eta).eval_grid(&grid.xs);
    let zeta_y = dn_apply(geom, field.zeta_data()).eval_grid(&grid.xs);
    let bernoulli = (0..nx)
        .map(|i| {
            let v = field.eta[i];
            let lhs = zeta_y[i] - p.gamma * v * v_y[i];
            let rhs = (field.q - 2.0 * p.g * v) * (v_x[i] * v_x[i] + v_y[i] * v_y[i]);
            (lhs * lhs - rhs).abs()
        })
        .fold(0.0, f64::max);

    let xi_top = (0..nx).map(|i| field.at(&field.xi, i, ny - 1).abs()).fold(0.0, f64::max);
    let xi_bottom = (0..nx)
        .map(|i| (field.at(&field.xi, i, 0) + field.m_flux).abs())
        .fold(0.0, f64::max);

    let (dx, dy) = (grid.dx(), grid.dy());
    let mut laplacian: f64 = 0.0;
    let mut cauchy_riemann: f64 = 0.0;
    let mut min_grad_v = f64::INFINITY;
    let mut site: Option<StagnationSite> = None;
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let f = |a: &[f64], di: isize, dj: isize| {
                field.at(a, (i as isize + di) as usize, (j as isize + dj) as usize)
            };
            let lap = (f(&field.xi, 1, 0) - 2.0 * f(&field.xi, 0, 0) + f(&field.xi, -1, 0)) / (dx * dx)
                + (f(&field.xi, 0, 1) - 2.0 * f(&field.xi, 0, 0) + f(&field.xi, 0, -1)) / (dy * dy);
            let vx = (f(&field.v, 1, 0) - f(&field.v, -1, 0)) / (2.0 * dx);
            let vy = (f(&field.v, 0, 1) - f(&field.v, 0, -1)) / (2.0 * dy);
            laplacian = laplacian.max((lap + p.gamma * (vx * vx + vy * vy)).abs());
            min_grad_v = min_grad_v.min(vx.hypot(vy));

            let (x, y) = (grid.xs[i], grid.ys[j]);
            let d = CR_STEP.min(-y).min(y + p.h);
            let cvx = (field.v_at(x + d, y) - field.v_at(x - d, y)) / (2.0 * d);
            let cvy = (field.v_at(x, y + d) - field.v_at(x, y - d)) / (2.0 * d);
            let cux = (field.u_at(x + d, y) - field.u_at(x - d, y)) / (2.0 * d);
            let cuy = (field.u_at(x, y + d) - field.u_at(x, y - d)) / (2.0 * d);
            cauchy_riemann = cauchy_riemann.max((cux - cvy).abs().max((cuy + cvx).abs()));

            let gx = (f(&field.xi, 1, 0) - f(&field.xi, -1, 0)) / (2.0 * dx);
            let gy = (f(&field.xi, 0, 1) - f(&field.xi, 0, -1)) / (2.0 * dy);
            let g = gx.hypot(gy);
            if site.is_none_or(|s| g < s.grad_xi) {
                site = Some(StagnationSite { x, y, grad_xi: g });
            }
        }
    }

    let (laplacian_coarse, laplacian_fine, laplacian_order) = laplacian_order(p, field);
    let stagnation = stagnation_indicator(p, pt.lambda);

    VerificationReport {
        s: pt.s,
        lambda: pt.lambda,
        m_flux: field.m_flux,
        q: field.q,
        bernoulli,
        xi_top,
        xi_bottom,
        laplacian,
        laplacian_coarse,
        laplacian_fine,
        laplacian_order,
        cauchy_riemann,
        min_grad_v,
        stagnation,
        stagnation_site: if stagnation { site } else { None },
    }
}

/// Residuals at steps `h/16` and `h/32` on a fixed set of interior sample
/// points, and the order they imply.
fn laplacian_order(p: &WaveParams, field: &FlowField) -> (f64, f64, Option<f64>) {
    let coarse_step = p.h / ORDER_STEP;
    let xs = &field.grid.xs;
    let (x0, x1) = (xs[0], xs[xs.len() - 1]);
    let mut coarse: f64 = 0.0;
    let mut fine: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for a in 0..ORDER_SAMPLES {
        let x = x0 + (x1 - x0) * (a as f64 + 0.5) / ORDER_SAMPLES as f64;
        for b in 0..ORDER_SAMPLES {
            // keep the coarse stencil inside the strip
            let y = -coarse_step - (p.h - 2.0 * coarse_step) * (b as f64 + 0.5) / ORDER_SAMPLES as f64;
            coarse = coarse.max(field.laplacian_residual(x, y, coarse_step));
            fine = fine.max(field.laplacian_residual(x, y, coarse_step / 2.0));
            scale = scale.max(field.zeta_at(x, y).abs());
        }
    }
    // five-point rounding error is about 4ε|ξ|/δ²
    let floor = 1e3 * f64::EPSILON * scale / (coarse_step * coarse_step);
    let order = (coarse > floor).then(|| (coarse / fine).log2());
    (coarse, fine, order)
}

/// `(x, η(x))` samples.
pub fn emit_profile(p: &WaveParams, pt: &BranchPoint, xs: &[f64]) -> Vec<(f64, f64)> {
    let eta = pt.w.add_constant(p.h);
    xs.iter().copied().zip(eta.eval_grid(xs)).collect()
}

/// CSV with header `x,eta`.
pub fn profile_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("x,eta\n");
    for (x, e) in rows {
        out.push_str(&format!("{x},{e}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freqset::{GeneratorBasis, ModeId};

    fn laminar(lambda: f64) -> BranchPoint {
        let basis = Arc::new(GeneratorBasis::new(vec![1.0], 8, 8.0).unwrap());
        BranchPoint {
            s: 0.0,
            lambda,
            mu: 0.0,
            w: TrigSum::zero(&basis),
            residual_norm: 0.0,
            newton_iters: 0,
            truncation_mass: 0.0,
        }
    }

    #[test]
    fn laminar_field_is_exact() {
        let p = WaveParams::new(1.0, 9.8, 1.5).unwrap();
        let pt = laminar(2.0);
        let grid = FlowGrid::window(pt.w.basis(), p.h, 21, 11).unwrap();
        let field = build_field(&p, &pt, &grid).unwrap();
        let m = field.m_flux;
        for (j, &y) in grid.ys.iter().enumerate() {
            for (i, &x) in grid.xs.iter().enumerate() {
                assert!((field.at(&field.v, i, j) - (y + p.h)).abs() < 1e-14);
                assert!((field.at(&field.u, i, j) - x).abs() < 1e-14);
                let z = (m + p.gamma * p.h * p.h / 2.0) * (y + p.h) / p.h;
                assert!((field.at(&field.zeta, i, j) - z).abs() < 1e-13);
            }
        }
        let rep = verify_system(&p, &field, &pt);
        assert!(rep.bernoulli <= 1e-12, "{}", rep.bernoulli);
        assert_eq!(rep.xi_top, 0.0);
        assert!(rep.xi_bottom <= 1e-12);
        assert!(rep.laplacian <= 1e-9);
        assert!(rep.cauchy_riemann <= 1e-9);
        assert_eq!(rep.laplacian_order, None);
        assert!(rep.check(&Thresholds::default()).passed);
    }

    #[test]
    fn zero_thresholds_fail() {
        let p = WaveParams::new(1.0, 9.8, 1.0).unwrap();
        let pt = laminar(2.0);
        let grid = FlowGrid::window(pt.w.basis(), p.h, 11, 11).unwrap();
        let rep = verify_system(&p, &build_field(&p, &pt, &grid).unwrap(), &pt);
        let zero = Thresholds {
            bernoulli: 0.0,
            boundary: 0.0,
            laplacian: 0.0,
            order_min: 0.0,
            order_max: 0.0,
            cauchy_riemann: 0.0,
        };
        assert!(!rep.check(&zero).passed);
    }

    #[test]
    fn profile_of_laminar_is_flat() {
        let p = WaveParams::new(0.0, 9.8, 2.0).unwrap();
        let rows = emit_profile(&p, &laminar(1.0), &[0.0, 1.0, 2.0]);
        assert!(rows.iter().all(|r| r.1 == 2.0));
        assert_eq!(profile_csv(&rows[..1]), "x,eta\n0,2\n");
    }

    #[test]
    fn grid_outside_strip_is_rejected() {
        let p = WaveParams::new(0.0, 9.8, 1.0).unwrap();
        let grid = FlowGrid::new(0.0, 1.0, 2.0, 5, 5).unwrap();
        assert!(matches!(build_field(&p, &laminar(1.0), &grid), Err(Error::OutsideStrip { .. })));
    }

    #[test]
    fn tabulated_matches_pointwise() {
        let p = WaveParams::new(0.7, 9.8, 1.0).unwrap();
        let mut pt = laminar(2.0);
        pt.w.add_term(ModeId::cos(&[2]), 0.05);
        pt.w.add_term(ModeId::sin(&[3]), -0.02);
        let grid = FlowGrid::window(pt.w.basis(), p.h, 9, 7).unwrap();
        let field = build_field(&p, &pt, &grid).unwrap();
        for (j, &y) in grid.ys.iter().enumerate() {
            for (i, &x) in grid.xs.iter().enumerate() {
                assert!((field.at(&field.v, i, j) - field.v_at(x, y)).abs() < 1e-14);
                assert!((field.at(&field.u, i, j) - field.u_at(x, y)).abs() < 1e-13);
                assert!((field.at(&field.xi, i, j) - field.xi_at(x, y)).abs() < 1e-13);
            }
        }
    }
}
