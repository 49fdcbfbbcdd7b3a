//! Finite trigonometric sums over a frequency lattice.
//!
//! A [`TrigSum`] is `ū + Σ a_v cos(ω_v x) + Σ b_v sin(ω_v x)` where every key
//! `v` is a canonical lattice vector and `ω_v` its embedding. Products are
//! expanded exactly with the product-to-sum identities; whatever lands
//! outside the lattice truncation is dropped and its B² mass returned as a
//! receipt.
//!
//! Inner products use the long-window mean `(1/2X)∫_{-X}^{X}`, so
//! `⟨1,1⟩ = 1` and `⟨cos,cos⟩ = ⟨sin,sin⟩ = ½`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freqset::{AdmissiblePair, FreqVector, GeneratorBasis, ModeId, ModeKind};

/// Coefficients smaller than this are removed.
pub const DROP_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct TrigSum {
    basis: Arc<GeneratorBasis>,
    mean: f64,
    cos: BTreeMap<FreqVector, f64>,
    sin: BTreeMap<FreqVector, f64>,
}

/// A product together with the B² norm of the terms truncation removed.
#[derive(Clone, Debug)]
pub struct Truncated {
    pub sum: TrigSum,
    pub discarded_mass: f64,
}

struct Accumulator<'a> {
    basis: &'a GeneratorBasis,
    mean: f64,
    cos: BTreeMap<FreqVector, f64>,
    sin: BTreeMap<FreqVector, f64>,
    dropped_cos: BTreeMap<FreqVector, f64>,
    dropped_sin: BTreeMap<FreqVector, f64>,
}

impl<'a> Accumulator<'a> {
    fn new(basis: &'a GeneratorBasis) -> Self {
        Accumulator {
            basis,
            mean: 0.0,
            cos: BTreeMap::new(),
            sin: BTreeMap::new(),
            dropped_cos: BTreeMap::new(),
            dropped_sin: BTreeMap::new(),
        }
    }

    fn push(&mut self, kind: ModeKind, v: FreqVector, c: f64) {
        let (v, sign) = self.basis.fold(&v);
        if v.is_zero() {
            if kind == ModeKind::Cos {
                self.mean += c;
            }
            return;
        }
        let keep = self.basis.contains(&v);
        let (map, c) = match (kind, keep) {
            (ModeKind::Sin, true) => (&mut self.sin, c * sign.factor()),
            (ModeKind::Sin, false) => (&mut self.dropped_sin, c * sign.factor()),
            (_, true) => (&mut self.cos, c),
            (_, false) => (&mut self.dropped_cos, c),
        };
        *map.entry(v).or_insert(0.0) += c;
    }

    fn finish(self, basis: Arc<GeneratorBasis>) -> Truncated {
        let mass2: f64 = self
            .dropped_cos
            .values()
            .chain(self.dropped_sin.values())
            .map(|c| 0.5 * c * c)
            .sum();
        let mut sum = TrigSum {
            basis,
            mean: self.mean,
            cos: self.cos,
            sin: self.sin,
        };
        sum.sparsify();
        Truncated {
            sum,
            discarded_mass: mass2.sqrt(),
        }
    }
}

impl TrigSum {
    pub fn zero(basis: &Arc<GeneratorBasis>) -> Self {
        TrigSum {
            basis: Arc::clone(basis),
            mean: 0.0,
            cos: BTreeMap::new(),
            sin: BTreeMap::new(),
        }
    }

    pub fn constant(basis: &Arc<GeneratorBasis>, c: f64) -> Self {
        let mut s = Self::zero(basis);
        s.mean = c;
        s.sparsify();
        s
    }

    /// A single mode. The vector is folded, so `sin` of a negative
    /// frequency flips the coefficient.
    pub fn mode(basis: &Arc<GeneratorBasis>, mode: ModeId, c: f64) -> Self {
        let mut s = Self::zero(basis);
        s.add_term(mode, c);
        s
    }

    /// `Σ values[i] · modes[i]`.
    pub fn from_coefficients(basis: &Arc<GeneratorBasis>, modes: &[ModeId], values: &[f64]) -> Self {
        debug_assert_eq!(modes.len(), values.len());
        let mut s = Self::zero(basis);
        for (m, &c) in modes.iter().zip(values) {
            s.push_term(*m, c);
        }
        s.sparsify();
        s
    }

    /// Adds `c · mode` in place.
    pub fn add_term(&mut self, mode: ModeId, c: f64) {
        self.push_term(mode, c);
        self.sparsify();
    }

    fn push_term(&mut self, mode: ModeId, c: f64) {
        let (v, sign) = self.basis.fold(&mode.vec);
        match mode.kind {
            ModeKind::Mean => self.mean += c,
            ModeKind::Cos if v.is_zero() => self.mean += c,
            ModeKind::Sin if v.is_zero() => {}
            ModeKind::Cos => *self.cos.entry(v).or_insert(0.0) += c,
            ModeKind::Sin => *self.sin.entry(v).or_insert(0.0) += c * sign.factor(),
        }
    }

    pub fn basis(&self) -> &Arc<GeneratorBasis> {
        &self.basis
    }

    /// Same terms, different truncation of the same lattice.
    pub fn rebased(&self, basis: &Arc<GeneratorBasis>) -> Result<Self> {
        if !self.basis.same_lattice(basis) {
            return Err(Error::BasisMismatch);
        }
        Ok(TrigSum {
            basis: Arc::clone(basis),
            ..self.clone()
        })
    }

    /// Drops every term outside `basis` (and re-bases onto it).
    pub fn truncated(&self, basis: &Arc<GeneratorBasis>) -> Result<Truncated> {
        if !self.basis.same_lattice(basis) {
            return Err(Error::BasisMismatch);
        }
        let mut acc = Accumulator::new(basis);
        acc.mean = self.mean;
        for (v, c) in &self.cos {
            acc.push(ModeKind::Cos, *v, *c);
        }
        for (v, c) in &self.sin {
            acc.push(ModeKind::Sin, *v, *c);
        }
        Ok(acc.finish(Arc::clone(basis)))
    }

    fn sparsify(&mut self) {
        if self.mean.abs() < DROP_TOL {
            self.mean = 0.0;
        }
        self.cos.retain(|_, c| c.abs() >= DROP_TOL);
        self.sin.retain(|_, c| c.abs() >= DROP_TOL);
    }

    fn check_lattice(&self, other: &TrigSum) -> Result<()> {
        if self.basis.same_lattice(&other.basis) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    /// The wider of the two truncations.
    fn wider_basis(&self, other: &TrigSum) -> Arc<GeneratorBasis> {
        if other.basis.cutoff() > self.basis.cutoff() {
            Arc::clone(&other.basis)
        } else {
            Arc::clone(&self.basis)
        }
    }

    pub fn add(&self, other: &TrigSum) -> Result<TrigSum> {
        self.check_lattice(other)?;
        let mut out = self.clone();
        out.basis = self.wider_basis(other);
        out.mean += other.mean;
        for (v, c) in &other.cos {
            *out.cos.entry(*v).or_insert(0.0) += c;
        }
        for (v, c) in &other.sin {
            *out.sin.entry(*v).or_insert(0.0) += c;
        }
        out.sparsify();
        Ok(out)
    }

    pub fn sub(&self, other: &TrigSum) -> Result<TrigSum> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> TrigSum {
        let mut out = self.clone();
        out.mean *= c;
        out.cos.values_mut().for_each(|a| *a *= c);
        out.sin.values_mut().for_each(|b| *b *= c);
        out.sparsify();
        out
    }

    /// `self + c`.
    pub fn add_constant(&self, c: f64) -> TrigSum {
        let mut out = self.clone();
        out.mean += c;
        out.sparsify();
        out
    }

    /// Exact product, truncated to the wider of the two bases.
    pub fn mul(&self, other: &TrigSum) -> Result<Truncated> {
        self.check_lattice(other)?;
        let basis = self.wider_basis(other);
        let mut acc = Accumulator::new(&basis);

        acc.mean = self.mean * other.mean;
        for (scale, src) in [(other.mean, self), (self.mean, other)] {
            if scale == 0.0 {
                continue;
            }
            for (v, c) in &src.cos {
                acc.push(ModeKind::Cos, *v, scale * c);
            }
            for (v, c) in &src.sin {
                acc.push(ModeKind::Sin, *v, scale * c);
            }
        }

        for (a, ca) in &self.cos {
            for (b, cb) in &other.cos {
                let h = 0.5 * ca * cb;
                acc.push(ModeKind::Cos, a.add(b), h);
                acc.push(ModeKind::Cos, a.sub(b), h);
            }
            for (b, sb) in &other.sin {
                // cos a · sin b = ½ sin(a+b) − ½ sin(a−b)
                let h = 0.5 * ca * sb;
                acc.push(ModeKind::Sin, a.add(b), h);
                acc.push(ModeKind::Sin, a.sub(b), -h);
            }
        }
        for (a, sa) in &self.sin {
            for (b, cb) in &other.cos {
                // sin a · cos b = ½ sin(a+b) + ½ sin(a−b)
                let h = 0.5 * sa * cb;
                acc.push(ModeKind::Sin, a.add(b), h);
                acc.push(ModeKind::Sin, a.sub(b), h);
            }
            for (b, sb) in &other.sin {
                // sin a · sin b = ½ cos(a−b) − ½ cos(a+b)
                let h = 0.5 * sa * sb;
                acc.push(ModeKind::Cos, a.sub(b), h);
                acc.push(ModeKind::Cos, a.add(b), -h);
            }
        }
        Ok(acc.finish(Arc::clone(&basis)))
    }

    /// `d/dx`. Cos modes become sin modes on the same frequency and vice versa.
    pub fn derivative(&self) -> TrigSum {
        let mut out = TrigSum::zero(&self.basis);
        for (v, a) in &self.cos {
            out.sin.insert(*v, -a * self.basis.embed_raw(v));
        }
        for (v, b) in &self.sin {
            out.cos.insert(*v, b * self.basis.embed_raw(v));
        }
        out.sparsify();
        out
    }

    /// Multiplies every oscillating coefficient by `f(frequency)` and maps
    /// the mean through `on_mean`.
    pub fn map_diagonal(&self, on_mean: impl Fn(f64) -> f64, f: impl Fn(f64) -> f64) -> TrigSum {
        let mut out = self.clone();
        out.mean = on_mean(self.mean);
        for (v, a) in out.cos.iter_mut() {
            *a *= f(self.basis.embed_raw(v));
        }
        for (v, b) in out.sin.iter_mut() {
            *b *= f(self.basis.embed_raw(v));
        }
        out.sparsify();
        out
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Coefficient of one mode (zero when absent).
    pub fn coeff(&self, mode: &ModeId) -> f64 {
        match mode.kind {
            ModeKind::Mean => self.mean,
            ModeKind::Cos if mode.vec.is_zero() => self.mean,
            ModeKind::Sin if mode.vec.is_zero() => 0.0,
            ModeKind::Cos => {
                let (v, _) = self.basis.fold(&mode.vec);
                self.cos.get(&v).copied().unwrap_or(0.0)
            }
            ModeKind::Sin => {
                let (v, sign) = self.basis.fold(&mode.vec);
                sign.factor() * self.sin.get(&v).copied().unwrap_or(0.0)
            }
        }
    }

    pub fn coefficients(&self, modes: &[ModeId]) -> Vec<f64> {
        modes.iter().map(|m| self.coeff(m)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.mean == 0.0 && self.cos.is_empty() && self.sin.is_empty()
    }

    pub fn len(&self) -> usize {
        usize::from(self.mean != 0.0) + self.cos.len() + self.sin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    /// `ū·v̄ + ½Σ a_k a'_k + ½Σ b_k b'_k`.
    pub fn inner(&self, other: &TrigSum) -> Result<f64> {
        self.check_lattice(other)?;
        let dot = |x: &BTreeMap<FreqVector, f64>, y: &BTreeMap<FreqVector, f64>| -> f64 {
            x.iter()
                .filter_map(|(v, a)| y.get(v).map(|b| a * b))
                .sum()
        };
        Ok(self.mean * other.mean + 0.5 * dot(&self.cos, &other.cos) + 0.5 * dot(&self.sin, &other.sin))
    }

    pub fn norm_b2(&self) -> f64 {
        let osc: f64 = self.cos.values().chain(self.sin.values()).map(|c| c * c).sum();
        (self.mean * self.mean + 0.5 * osc).sqrt()
    }

    /// B² norm of the sin part alone.
    pub fn sin_mass(&self) -> f64 {
        (0.5 * self.sin.values().map(|c| c * c).sum::<f64>()).sqrt()
    }

    /// `|ū| + Σ|a| + Σ|b|`, an upper bound for `sup |u|`.
    pub fn l1_bound(&self) -> f64 {
        self.mean.abs() + self.cos.values().chain(self.sin.values()).map(|c| c.abs()).sum::<f64>()
    }

    /// Oscillating terms sorted by frequency, cos before sin on ties.
    pub fn terms(&self) -> Vec<(ModeId, f64)> {
        let mut out: Vec<(f64, ModeId, f64)> = self
            .cos
            .iter()
            .map(|(v, c)| (self.basis.embed_raw(v), ModeId { vec: *v, kind: ModeKind::Cos }, *c))
            .chain(
                self.sin
                    .iter()
                    .map(|(v, c)| (self.basis.embed_raw(v), ModeId { vec: *v, kind: ModeKind::Sin }, *c)),
            )
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.kind.cmp(&b.1.kind)).then(a.1.vec.cmp(&b.1.vec)));
        out.into_iter().map(|(_, m, c)| (m, c)).collect()
    }

    fn sampled_terms(&self) -> Vec<(f64, ModeKind, f64)> {
        self.terms()
            .into_iter()
            .map(|(m, c)| (self.basis.embed_raw(&m.vec), m.kind, c))
            .collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval_terms(self.mean, &self.sampled_terms(), x)
    }

    pub fn eval_grid(&self, xs: &[f64]) -> Vec<f64> {
        let terms = self.sampled_terms();
        xs.iter().map(|&x| eval_terms(self.mean, &terms, x)).collect()
    }

    /// Projection onto the mean-free space spanned by the pair's modes.
    /// Returns the projection and the B² norm of what was removed.
    pub fn project_e0(&self, pair: &AdmissiblePair) -> (TrigSum, f64) {
        let mut kept = TrigSum::zero(&self.basis);
        let mut removed = self.mean * self.mean;
        for (v, c) in &self.cos {
            if pair.admits(&ModeId { vec: *v, kind: ModeKind::Cos }) {
                kept.cos.insert(*v, *c);
            } else {
                removed += 0.5 * c * c;
            }
        }
        for (v, c) in &self.sin {
            if pair.admits(&ModeId { vec: *v, kind: ModeKind::Sin }) {
                kept.sin.insert(*v, *c);
            } else {
                removed += 0.5 * c * c;
            }
        }
        (kept, removed.sqrt())
    }

    /// Vectors carrying a nonzero coefficient, mean excluded.
    pub fn support(&self) -> Vec<FreqVector> {
        let mut v: Vec<FreqVector> = self.cos.keys().chain(self.sin.keys()).copied().collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn to_serial(&self) -> TrigSumSerial {
        TrigSumSerial {
            mean: self.mean,
            terms: self
                .terms()
                .into_iter()
                .map(|(m, value)| TermSerial {
                    coeffs: m.vec.coeffs().to_vec(),
                    kind: m.kind,
                    value,
                })
                .collect(),
        }
    }

    pub fn from_serial(basis: &Arc<GeneratorBasis>, ser: &TrigSumSerial) -> Result<TrigSum> {
        let mut s = TrigSum::constant(basis, ser.mean);
        for t in &ser.terms {
            if t.coeffs.len() != basis.dim() {
                return Err(Error::DimensionMismatch {
                    expected: basis.dim(),
                    found: t.coeffs.len(),
                });
            }
            s.add_term(
                ModeId {
                    vec: FreqVector::new(&t.coeffs),
                    kind: t.kind,
                },
                t.value,
            );
        }
        Ok(s)
    }
}

fn eval_terms(mean: f64, terms: &[(f64, ModeKind, f64)], x: f64) -> f64 {
    let mut acc = mean;
    for &(w, kind, c) in terms {
        acc += match kind {
            ModeKind::Sin => c * (w * x).sin(),
            _ => c * (w * x).cos(),
        };
    }
    acc
}

/// JSON form of a [`TrigSum`]: terms sorted by frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigSumSerial {
    pub mean: f64,
    pub terms: Vec<TermSerial>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermSerial {
    pub coeffs: Vec<i32>,
    pub kind: ModeKind,
    pub value: f64,
}

/// Shorthand used across the crate: fold the product's receipt into `mass`.
pub(crate) fn mul_into(u: &TrigSum, v: &TrigSum, mass: &mut f64) -> Result<TrigSum> {
    let p = u.mul(v)?;
    *mass = mass.hypot(p.discarded_mass);
    Ok(p.sum)
}
