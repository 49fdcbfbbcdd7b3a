//! Dirichlet–Neumann operator of the strip `-h < y < 0` and the harmonic
//! functions built from boundary data on its top.
//!
//! For data `w = w̄ + Σ a cos(kx) + Σ b sin(kx)` the extension vanishing on
//! the bed is
//!
//! ```text
//! W(x, y) = (w̄/h)(y + h) + Σ a S_k(y) cos(kx) + Σ b S_k(y) sin(kx),
//! S_k(y)  = sinh(k(y + h)) / sinh(kh),
//! ```
//!
//! and `G_h(w) = W_y(·, 0)` acts diagonally with multiplier `k coth(kh)`
//! (`1/h` on the mean). The same multiplier applies to cos and sin modes.

use crate::error::{Error, Result};
use crate::freqset::ModeKind;
use crate::trig::TrigSum;

/// Height of the conformal strip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripGeometry {
    h: f64,
}

impl StripGeometry {
    pub fn new(h: f64) -> Result<Self> {
        if h.is_finite() && h > 0.0 {
            Ok(StripGeometry { h })
        } else {
            Err(Error::InvalidInput {
                field: "h".into(),
                reason: format!("depth must be positive, got {h}"),
            })
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    fn check(&self, x: f64, y: f64) -> Result<()> {
        // one ulp of slack at the walls
        let slack = 4.0 * f64::EPSILON * self.h;
        if y > slack || y < -self.h - slack || !y.is_finite() {
            Err(Error::OutsideStrip { x, y, h: self.h })
        } else {
            Ok(())
        }
    }
}

/// `k coth(kh)`, continuous at `k = 0` with value `1/h`.
pub fn dn_multiplier(h: f64, k: f64) -> f64 {
    if k == 0.0 {
        1.0 / h
    } else {
        k / (k * h).tanh()
    }
}

/// `G_h(w)`.
pub fn dn_apply(geom: StripGeometry, w: &TrigSum) -> TrigSum {
    let h = geom.h;
    w.map_diagonal(|m| m / h, |k| dn_multiplier(h, k))
}

/// `sinh(k(y+h)) / sinh(kh)` for `-h ≤ y ≤ 0`, without overflow for large `kh`.
pub fn sinh_ratio(k: f64, h: f64, y: f64) -> f64 {
    // e^{ky} (1 − e^{−2k(y+h)}) / (1 − e^{−2kh})
    (k * y).exp() * (-(-2.0 * k * (y + h)).exp_m1()) / (-(-2.0 * k * h).exp_m1())
}

/// `cosh(k(y+h)) / sinh(kh)` for `-h ≤ y ≤ 0`.
pub fn cosh_ratio(k: f64, h: f64, y: f64) -> f64 {
    (k * y).exp() * (1.0 + (-2.0 * k * (y + h)).exp()) / (-(-2.0 * k * h).exp_m1())
}

/// Harmonic extension `W(x, y)` of `w` with `W(·, −h) = 0`.
pub fn extend(geom: StripGeometry, w: &TrigSum, x: f64, y: f64) -> Result<f64> {
    geom.check(x, y)?;
    Ok(extend_terms(geom.h, &ExtensionTerms::new(w), x, y))
}

/// Harmonic conjugate `U` of the extension, normalised so that
/// `U − (w̄/h)x` has zero mean. `(U, W)` satisfies `U_x = W_y`, `U_y = −W_x`.
pub fn conjugate_extend(geom: StripGeometry, w: &TrigSum, x: f64, y: f64) -> Result<f64> {
    geom.check(x, y)?;
    Ok(conjugate_terms(geom.h, &ExtensionTerms::new(w), x, y))
}

/// Terms of a boundary datum with their frequencies resolved once, for
/// evaluating extensions on many points.
#[derive(Clone, Debug)]
pub struct ExtensionTerms {
    mean: f64,
    terms: Vec<(f64, ModeKind, f64)>,
}

impl ExtensionTerms {
    pub fn new(w: &TrigSum) -> Self {
        let basis = w.basis();
        ExtensionTerms {
            mean: w.mean(),
            terms: w
                .terms()
                .into_iter()
                .map(|(m, c)| (basis.embed_raw(&m.vec), m.kind, c))
                .collect(),
        }
    }
}

/// [`extend`] on pre-resolved terms; no range check.
pub fn extend_terms(h: f64, t: &ExtensionTerms, x: f64, y: f64) -> f64 {
    let mut acc = t.mean / h * (y + h);
    for &(k, kind, c) in &t.terms {
        let s = sinh_ratio(k, h, y);
        acc += match kind {
            ModeKind::Sin => c * s * (k * x).sin(),
            _ => c * s * (k * x).cos(),
        };
    }
    acc
}

/// [`conjugate_extend`] on pre-resolved terms; no range check.
pub fn conjugate_terms(h: f64, t: &ExtensionTerms, x: f64, y: f64) -> f64 {
    let mut acc = t.mean / h * x;
    for &(k, kind, c) in &t.terms {
        let r = cosh_ratio(k, h, y);
        acc += match kind {
            ModeKind::Sin => -c * r * (k * x).cos(),
            _ => c * r * (k * x).sin(),
        };
    }
    acc
}
