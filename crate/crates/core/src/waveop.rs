//! The bifurcation functional `F(λ, (μ, w))`, its linearisation about the
//! laminar flow, the dispersion relation and its bifurcation values.
//!
//! With `η = w + h`, `λ = m/h − γh/2` and `μ = Q − 2gh − λ²` the surface
//! equation reads `F = 0` where
//!
//! ```text
//! F = {λ + γ(G(w²/2) − w − w·G(w))}² − (λ² + μ − 2gw)(w'² + G(w)² + 2G(w) + 1).
//! ```
//!
//! `F(λ, (0, 0)) = 0` for every `λ`, and the derivative in `(μ, w)` at the
//! laminar state is diagonal: `2[(g − λγ) − λ² k coth(kh)]` on a mode of
//! frequency `k`, and `−1` from `μ` onto the mean.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dno::{dn_apply, dn_multiplier, StripGeometry};
use crate::error::{Error, Result};
use crate::freqset::{AdmissiblePair, GeneratorBasis, ModeId, ModeKind};
use crate::trig::{mul_into, TrigSum};

/// Relative and absolute floor of the finite-difference step.
pub const FD_STEP: f64 = 1e-7;

/// Points used when checking `w > −h` on a grid.
pub const SURFACE_GRID: usize = 4096;

/// Physical constants of one problem instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    /// Constant vorticity (1/s).
    pub gamma: f64,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
    /// Conformal mean depth (m).
    pub h: f64,
}

impl WaveParams {
    pub fn new(gamma: f64, g: f64, h: f64) -> Result<Self> {
        let p = WaveParams { gamma, g, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| Error::InvalidInput {
            field: field.into(),
            reason,
        };
        if !self.gamma.is_finite() {
            return Err(bad("gamma", format!("{} is not finite", self.gamma)));
        }
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(bad("g", format!("gravity must be positive, got {}", self.g)));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(bad("h", format!("depth must be positive, got {}", self.h)));
        }
        Ok(())
    }

    pub fn strip(&self) -> StripGeometry {
        StripGeometry::new(self.h).expect("validated depth")
    }
}

/// `(λ, μ, w)`: a candidate solution of `F = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialState {
    pub lambda: f64,
    pub mu: f64,
    pub w: TrigSum,
}

impl TrialState {
    pub fn laminar(lambda: f64, basis: &Arc<GeneratorBasis>) -> Self {
        TrialState {
            lambda,
            mu: 0.0,
            w: TrigSum::zero(basis),
        }
    }
}

/// `F` evaluated without truncation, plus the receipts of every product.
#[derive(Clone, Debug)]
pub struct Residual {
    pub f: TrigSum,
    pub truncation_mass: f64,
}

/// Grid of `n` points on `[0, 2π / smallest generator)`.
pub fn surface_window(basis: &GeneratorBasis, n: usize) -> Vec<f64> {
    let len = 2.0 * std::f64::consts::PI / basis.generators()[0];
    (0..n).map(|i| len * i as f64 / n as f64).collect()
}

/// Errors if `w ≤ −h` somewhere on the verification grid.
pub fn check_surface(h: f64, w: &TrigSum) -> Result<()> {
    if w.l1_bound() < h {
        return Ok(());
    }
    let xs = surface_window(w.basis(), SURFACE_GRID);
    for (x, v) in xs.iter().zip(w.eval_grid(&xs)) {
        if v <= -h {
            return Err(Error::SurfaceBelowBed { x: *x, value: v, neg_h: -h });
        }
    }
    Ok(())
}

/// `F(λ, (μ, w))`, assembled on a lattice four times wider than `w`'s so
/// that no product is truncated.
pub fn residual_f(p: &WaveParams, s: &TrialState) -> Result<Residual> {
    if s.w.mean().abs() > 0.0 {
        return Err(Error::InvalidInput {
            field: "w".into(),
            reason: format!("surface deviation must have zero mean, got {}", s.w.mean()),
        });
    }
    check_surface(p.h, &s.w)?;

    let geom = p.strip();
    let wide = Arc::new(s.w.basis().widened(4));
    let w = s.w.rebased(&wide)?;
    let mut mass = 0.0;

    let gw = dn_apply(geom, &w);
    let w2 = mul_into(&w, &w, &mut mass)?;
    let w_gw = mul_into(&w, &gw, &mut mass)?;
    // λ + γ(G(w²/2) − w − w G(w))
    let brace = dn_apply(geom, &w2.scale(0.5))
        .sub(&w)?
        .sub(&w_gw)?
        .scale(p.gamma)
        .add_constant(s.lambda);
    let lhs = mul_into(&brace, &brace, &mut mass)?;

    let dw = w.derivative();
    let slope = mul_into(&dw, &dw, &mut mass)?
        .add(&mul_into(&gw, &gw, &mut mass)?)?
        .add(&gw.scale(2.0))?
        .add_constant(1.0);
    let bernoulli = w.scale(-2.0 * p.g).add_constant(s.lambda * s.lambda + s.mu);
    let rhs = mul_into(&bernoulli, &slope, &mut mass)?;

    Ok(Residual {
        f: lhs.sub(&rhs)?,
        truncation_mass: mass,
    })
}

/// `2[(g − λγ) − λ² k coth(kh)]`.
pub fn linearized_multiplier(p: &WaveParams, lambda: f64, k: f64) -> f64 {
    2.0 * ((p.g - lambda * p.gamma) - lambda * lambda * dn_multiplier(p.h, k))
}

/// `λ² k coth(kh) + λγ − g`.
pub fn dispersion_residual(p: &WaveParams, lambda: f64, k: f64) -> f64 {
    lambda * lambda * dn_multiplier(p.h, k) + lambda * p.gamma - p.g
}

/// Roots `(λ₊, λ₋)` of the dispersion relation at frequency `k`.
pub fn bifurcation_lambdas(p: &WaveParams, k: f64) -> Result<(f64, f64)> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidInput {
            field: "k".into(),
            reason: format!("frequency must be positive, got {k}"),
        });
    }
    let t = (k * p.h).tanh();
    let b = p.gamma * t / (2.0 * k);
    let c = p.g * t / k;
    let root = (b * b + c).sqrt();
    // the root of larger magnitude first, the other one from λ₊λ₋ = −c
    if b > 0.0 {
        let minus = -b - root;
        Ok((-c / minus, minus))
    } else {
        let plus = -b + root;
        Ok((plus, -c / plus))
    }
}

/// `−2λ*(k coth(kh) + g/λ*²)`, the λ-derivative of the kernel multiplier.
pub fn transversality(p: &WaveParams, lambda_star: f64, k0: f64) -> Result<f64> {
    if lambda_star == 0.0 {
        return Err(Error::InvalidInput {
            field: "lambda_star".into(),
            reason: "transversality is undefined at λ* = 0".into(),
        });
    }
    Ok(-2.0 * lambda_star * (dn_multiplier(p.h, k0) + p.g / (lambda_star * lambda_star)))
}

/// Modes of the pair whose linearised multiplier at `λ*` is below `tol`.
pub fn resonance_scan(p: &WaveParams, lambda_star: f64, pair: &AdmissiblePair, tol: f64) -> Vec<ModeId> {
    pair.enumerate()
        .into_iter()
        .filter(|m| m.kind != ModeKind::Mean)
        .filter(|m| linearized_multiplier(p, lambda_star, pair.frequency(m)).abs() < tol)
        .collect()
}

/// Mass flux `m = h(λ + γh/2)` and Bernoulli constant `Q = μ + λ² + 2gh`.
pub fn derived_constants(p: &WaveParams, lambda: f64, mu: f64) -> (f64, f64) {
    (p.h * (lambda + p.gamma * p.h / 2.0), mu + lambda * lambda + 2.0 * p.g * p.h)
}

/// Inverse of [`derived_constants`].
pub fn parameters_from_flux(p: &WaveParams, m: f64, q: f64) -> (f64, f64) {
    let lambda = m / p.h - p.gamma * p.h / 2.0;
    (lambda, q - 2.0 * p.g * p.h - lambda * lambda)
}

/// True when the flow along the branch through `λ` has stagnation points.
pub fn stagnation_indicator(p: &WaveParams, lambda: f64) -> bool {
    lambda * (lambda + p.gamma * p.h) <= 0.0
}

/// Central-difference Jacobian of `f` at `x`, step `max(FD_STEP, FD_STEP·|x_j|)`.
pub fn finite_difference_jacobian<F>(f: F, x: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut cols = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        let step = FD_STEP.max(FD_STEP * x[j].abs());
        probe[j] = x[j] + step;
        let fp = f(&probe)?;
        probe[j] = x[j] - step;
        let fm = f(&probe)?;
        probe[j] = x[j];
        let span = (x[j] + step) - (x[j] - step);
        cols.push(DVector::from_iterator(
            fp.len(),
            fp.iter().zip(&fm).map(|(a, b)| (a - b) / span),
        ));
    }
    let rows = cols.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i]))
}

/// Galerkin projection of `F` onto the mean and every mode of a pair.
#[derive(Clone, Debug)]
pub struct GalerkinSystem {
    pub params: WaveParams,
    pub pair: AdmissiblePair,
    /// `modes[0]` is the mean.
    pub modes: Vec<ModeId>,
}

/// Projected residual with the bookkeeping that goes with it.
#[derive(Clone, Debug)]
pub struct GalerkinResidual {
    /// Coefficients of `F` on `modes`.
    pub values: Vec<f64>,
    /// B² norm of `values`.
    pub norm: f64,
    /// B² norm of the part of `F` beyond the retained modes.
    pub tail: f64,
    pub truncation_mass: f64,
}

impl GalerkinSystem {
    pub fn new(params: WaveParams, pair: AdmissiblePair) -> Self {
        let modes = pair.enumerate();
        GalerkinSystem { params, pair, modes }
    }

    pub fn basis(&self) -> &Arc<GeneratorBasis> {
        self.pair.basis()
    }

    /// Oscillating modes, i.e. the unknowns of `w`.
    pub fn wave_modes(&self) -> &[ModeId] {
        &self.modes[1..]
    }

    pub fn b2_norm(values: &[f64]) -> f64 {
        let osc: f64 = values[1..].iter().map(|v| v * v).sum();
        (values[0] * values[0] + 0.5 * osc).sqrt()
    }

    pub fn surface(&self, coeffs: &[f64]) -> TrigSum {
        TrigSum::from_coefficients(self.basis(), self.wave_modes(), coeffs)
    }

    pub fn residual(&self, state: &TrialState) -> Result<GalerkinResidual> {
        let r = residual_f(&self.params, state)?;
        let values = r.f.coefficients(&self.modes);
        let norm = Self::b2_norm(&values);
        let total = r.f.norm_b2();
        Ok(GalerkinResidual {
            tail: (total * total - norm * norm).max(0.0).sqrt(),
            values,
            norm,
            truncation_mass: r.truncation_mass,
        })
    }

    /// Finite-difference Jacobian in `(μ, w-coefficients)` at the laminar state.
    pub fn jacobian_at_rest(&self, lambda: f64) -> Result<DMatrix<f64>> {
        let n = self.wave_modes().len();
        let x0 = vec![0.0; n + 1];
        finite_difference_jacobian(
            |x| {
                let state = TrialState {
                    lambda,
                    mu: x[0],
                    w: self.surface(&x[1..]),
                };
                Ok(self.residual(&state)?.values)
            },
            &x0,
        )
    }

    /// The same Jacobian from the closed-form multipliers.
    pub fn analytic_jacobian_at_rest(&self, lambda: f64) -> DMatrix<f64> {
        let n = self.modes.len();
        let mut j = DMatrix::zeros(n, n);
        j[(0, 0)] = -1.0;
        for (i, m) in self.modes.iter().enumerate().skip(1) {
            j[(i, i)] = linearized_multiplier(&self.params, lambda, self.pair.frequency(m));
        }
        j
    }

    /// Singular-value certificate that the laminar Jacobian at `λ` has a
    /// one-dimensional kernel.
    pub fn kernel_certificate(&self, lambda: f64, zero_tol: f64) -> Result<KernelCertificate> {
        let j = self.jacobian_at_rest(lambda)?;
        let mut sv: Vec<f64> = j.singular_values().iter().copied().collect();
        sv.sort_by(f64::total_cmp);
        let zeros = sv.iter().filter(|s| **s < zero_tol).count();
        let smallest = sv.first().copied().unwrap_or(0.0);
        let second = sv.get(1).copied().unwrap_or(f64::INFINITY);
        Ok(KernelCertificate {
            zero_count: zeros,
            smallest,
            second,
            gap: if smallest > 0.0 { second / smallest } else { f64::INFINITY },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelCertificate {
    pub zero_count: usize,
    pub smallest: f64,
    pub second: f64,
    /// `second / smallest`.
    pub gap: f64,
}

impl KernelCertificate {
    pub fn is_simple(&self, min_gap: f64) -> bool {
        self.zero_count == 1 && self.gap >= min_gap
    }
}
