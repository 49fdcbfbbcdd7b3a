//! Frequency lattices and admissible cos/sin frequency pairs.
//!
//! A frequency is never stored as a bare `f64`. It is an integer vector of
//! coordinates over a small set of real generators, so `2 + 2√5` is the
//! vector `(2, 2)` over the generators `(1, √5)`. Sums and differences of
//! frequencies are then exact, and the closure rules an admissible pair must
//! obey reduce to a finite check on parity classes in `(ℤ/2)^d`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of generators a basis may carry.
pub const MAX_DIM: usize = 4;

/// Two distinct lattice vectors embedding closer than this are a collision.
pub const COLLISION_TOL: f64 = 1e-9;

/// Integer coordinates of a frequency over a [`GeneratorBasis`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreqVector {
    dim: u8,
    coeffs: [i32; MAX_DIM],
}

impl FreqVector {
    /// Panics if `coeffs` is empty or longer than [`MAX_DIM`].
    pub fn new(coeffs: &[i32]) -> Self {
        assert!(
            !coeffs.is_empty() && coeffs.len() <= MAX_DIM,
            "frequency vectors have between 1 and {MAX_DIM} coordinates, got {}",
            coeffs.len()
        );
        let mut c = [0; MAX_DIM];
        c[..coeffs.len()].copy_from_slice(coeffs);
        FreqVector {
            dim: coeffs.len() as u8,
            coeffs: c,
        }
    }

    pub fn zero(dim: usize) -> Self {
        FreqVector::new(&vec![0; dim])
    }

    pub fn coeffs(&self) -> &[i32] {
        &self.coeffs[..self.dim as usize]
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn neg(&self) -> Self {
        let mut out = *self;
        for c in out.coeffs.iter_mut() {
            *c = -*c;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for (c, o) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *c += o;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn max_abs(&self) -> i32 {
        self.coeffs().iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn parity(&self) -> Parity {
        let mut bits = 0u8;
        for (i, c) in self.coeffs().iter().enumerate() {
            if c.rem_euclid(2) == 1 {
                bits |= 1 << i;
            }
        }
        Parity { dim: self.dim, bits }
    }
}

impl fmt::Debug for FreqVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FreqVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coeffs().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for FreqVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coeffs().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FreqVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<i32>::deserialize(d)?;
        if v.is_empty() || v.len() > MAX_DIM {
            return Err(serde::de::Error::custom(format!(
                "frequency vector must have 1..={MAX_DIM} coordinates"
            )));
        }
        Ok(FreqVector::new(&v))
    }
}

/// A vector in `(ℤ/2)^d`, stored as a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Parity {
    dim: u8,
    bits: u8,
}

impl Parity {
    pub fn zero(dim: usize) -> Self {
        Parity {
            dim: dim as u8,
            bits: 0,
        }
    }

    /// Entries must be 0 or 1.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.is_empty() || bits.len() > MAX_DIM {
            return Err(Error::InvalidInput {
                field: "parity".into(),
                reason: format!("parity vectors have 1..={MAX_DIM} entries"),
            });
        }
        let mut mask = 0u8;
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => mask |= 1 << i,
                _ => {
                    return Err(Error::InvalidInput {
                        field: "parity".into(),
                        reason: format!("entry {b} is not 0 or 1"),
                    })
                }
            }
        }
        Ok(Parity {
            dim: bits.len() as u8,
            bits: mask,
        })
    }

    pub fn xor(&self, other: &Self) -> Self {
        Parity {
            dim: self.dim,
            bits: self.bits ^ other.bits,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.dim).map(|i| (self.bits >> i) & 1).collect()
    }

    fn all(dim: usize) -> impl Iterator<Item = Parity> {
        (0..(1u8 << dim)).map(move |bits| Parity {
            dim: dim as u8,
            bits,
        })
    }
}

impl fmt::Debug for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits: Vec<String> = self.to_bits().iter().map(|b| b.to_string()).collect();
        write!(f, "({})", bits.join(","))
    }
}

impl Serialize for Parity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_bits().serialize(s)
    }
}

/// Sign picked up when a vector is folded to canonical form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Real generators of a frequency lattice together with its truncation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorBasis {
    generators: Vec<f64>,
    coeff_bound: i32,
    cutoff: f64,
}

impl GeneratorBasis {
    /// Validates the generators and rejects bases whose truncated lattice
    /// has two distinct vectors embedding within [`COLLISION_TOL`].
    pub fn new(generators: Vec<f64>, coeff_bound: i32, cutoff: f64) -> Result<Self> {
        let basis = Self::unchecked(generators, coeff_bound, cutoff)?;
        if let Some((a, b)) = basis.find_collision() {
            return Err(Error::Collision { a, b });
        }
        Ok(basis)
    }

    /// Shape checks only; the collision scan is skipped.
    fn unchecked(generators: Vec<f64>, coeff_bound: i32, cutoff: f64) -> Result<Self> {
        let bad = |field: &str, reason: String| Error::InvalidInput {
            field: field.into(),
            reason,
        };
        if generators.is_empty() || generators.len() > MAX_DIM {
            return Err(bad(
                "generators",
                format!("expected 1..={MAX_DIM} generators, got {}", generators.len()),
            ));
        }
        if let Some(g) = generators.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(bad("generators", format!("generator {g} is not a positive real")));
        }
        if generators.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("generators", "generators must be strictly increasing".into()));
        }
        if coeff_bound < 0 {
            return Err(bad("coeff_bound", format!("{coeff_bound} is negative")));
        }
        if !(cutoff.is_finite() && cutoff >= 0.0) {
            return Err(bad("cutoff", format!("{cutoff} is not a non-negative real")));
        }
        Ok(GeneratorBasis {
            generators,
            coeff_bound,
            cutoff,
        })
    }

    pub fn generators(&self) -> &[f64] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn coeff_bound(&self) -> i32 {
        self.coeff_bound
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Same generators and bound, different cutoff. Re-runs the collision scan.
    pub fn with_cutoff(&self, cutoff: f64) -> Result<Self> {
        GeneratorBasis::new(self.generators.clone(), self.coeff_bound, cutoff)
    }

    /// Scales both the coefficient bound and the cutoff by `factor`. The
    /// result holds intermediate products and is not collision-scanned.
    pub fn widened(&self, factor: i32) -> Self {
        GeneratorBasis {
            generators: self.generators.clone(),
            coeff_bound: self.coeff_bound.saturating_mul(factor),
            cutoff: self.cutoff * factor as f64,
        }
    }

    /// True when both bases share the exact same generators.
    pub fn same_lattice(&self, other: &GeneratorBasis) -> bool {
        self.generators == other.generators
    }

    pub fn embed(&self, v: &FreqVector) -> Result<f64> {
        if v.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.dim(),
            });
        }
        if v.max_abs() > self.coeff_bound {
            return Err(Error::CoefficientOutOfBound {
                vector: v.to_string(),
                bound: self.coeff_bound,
            });
        }
        Ok(self.embed_raw(v))
    }

    /// Embedding without the bound check.
    pub fn embed_raw(&self, v: &FreqVector) -> f64 {
        v.coeffs()
            .iter()
            .zip(&self.generators)
            .map(|(&c, &g)| c as f64 * g)
            .sum()
    }

    /// Within the coefficient bound and at or below the cutoff.
    pub fn contains(&self, v: &FreqVector) -> bool {
        v.max_abs() <= self.coeff_bound && self.embed_raw(v).abs() <= self.cutoff + COLLISION_TOL
    }

    /// Canonical representative of `±v`.
    ///
    /// The canonical vector has a positive embedding. Vectors embedding to
    /// (numerically) zero fall back to "first nonzero coordinate positive".
    pub fn fold(&self, v: &FreqVector) -> (FreqVector, Sign) {
        let x = self.embed_raw(v);
        let negate = if x > COLLISION_TOL {
            false
        } else if x < -COLLISION_TOL {
            true
        } else {
            v.coeffs().iter().find(|&&c| c != 0).is_some_and(|&c| c < 0)
        };
        if negate {
            (v.neg(), Sign::Minus)
        } else {
            (*v, Sign::Plus)
        }
    }

    /// Every lattice vector in the coefficient box, as an odometer.
    fn box_vectors(&self) -> impl Iterator<Item = FreqVector> + '_ {
        let d = self.dim();
        let b = self.coeff_bound;
        let total = (2 * b as u64 + 1).pow(d as u32);
        (0..total).map(move |mut idx| {
            let mut c = [0i32; MAX_DIM];
            for slot in c.iter_mut().take(d) {
                let digit = (idx % (2 * b as u64 + 1)) as i32;
                idx /= 2 * b as u64 + 1;
                *slot = digit - b;
            }
            FreqVector::new(&c[..d])
        })
    }

    /// Canonical vectors of the truncated lattice, zero included.
    pub fn canonical_vectors(&self) -> Vec<(f64, FreqVector)> {
        let mut out: Vec<(f64, FreqVector)> = self
            .box_vectors()
            .filter_map(|v| {
                let x = self.embed_raw(&v);
                let (c, _) = self.fold(&v);
                (c == v && x <= self.cutoff + COLLISION_TOL).then_some((x, v))
            })
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.coeffs().cmp(b.1.coeffs())));
        out
    }

    fn find_collision(&self) -> Option<(FreqVector, FreqVector)> {
        let vs = self.canonical_vectors();
        vs.windows(2)
            .find(|w| (w[1].0 - w[0].0).abs() <= COLLISION_TOL)
            .map(|w| (w[0].1, w[1].1))
    }
}

/// How a mode enters a trigonometric sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Mean,
    Cos,
    Sin,
}

/// A basis function: the constant, or `cos`/`sin` of a lattice frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeId {
    pub vec: FreqVector,
    pub kind: ModeKind,
}

impl ModeId {
    pub fn mean(dim: usize) -> Self {
        ModeId {
            vec: FreqVector::zero(dim),
            kind: ModeKind::Mean,
        }
    }

    pub fn cos(coeffs: &[i32]) -> Self {
        ModeId {
            vec: FreqVector::new(coeffs),
            kind: ModeKind::Cos,
        }
    }

    pub fn sin(coeffs: &[i32]) -> Self {
        ModeId {
            vec: FreqVector::new(coeffs),
            kind: ModeKind::Sin,
        }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModeKind::Mean => write!(f, "Mean"),
            ModeKind::Cos => write!(f, "Cos{}", self.vec),
            ModeKind::Sin => write!(f, "Sin{}", self.vec),
        }
    }
}

impl std::str::FromStr for ModeId {
    type Err = Error;

    /// Parses the display form: `Cos(1)`, `sin(0,2)`; `Mean` needs no vector
    /// and is one-dimensional.
    fn from_str(src: &str) -> Result<Self> {
        let err = || Error::InvalidInput {
            field: "mode".into(),
            reason: format!("expected `cos(a,b,...)` or `sin(a,b,...)`, got `{src}`"),
        };
        let t = src.trim();
        if t.eq_ignore_ascii_case("mean") {
            return Ok(ModeId::mean(1));
        }
        let open = t.find('(').ok_or_else(err)?;
        let kind = match t[..open].trim().to_ascii_lowercase().as_str() {
            "cos" => ModeKind::Cos,
            "sin" => ModeKind::Sin,
            _ => return Err(err()),
        };
        let inner = t[open + 1..].strip_suffix(')').ok_or_else(err)?;
        let coeffs = inner
            .split(',')
            .map(|c| c.trim().parse::<i32>().map_err(|_| err()))
            .collect::<Result<Vec<_>>>()?;
        if coeffs.is_empty() || coeffs.len() > MAX_DIM {
            return Err(err());
        }
        Ok(ModeId { vec: FreqVector::new(&coeffs), kind })
    }
}

/// Result of [`AdmissiblePair::classify`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeClass {
    Mean,
    Cos,
    Sin,
    Excluded,
}

/// One violated law, with the witness that breaks it.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Violation {
    /// The cos class must contain the zero parity.
    CosMissingZero,
    /// The cos class is not closed under XOR.
    CosNotClosed { a: Parity, b: Parity, sum: Parity },
    /// The sin class is nonempty but is not one coset of the cos class.
    SinNotCoset { representative: Parity, missing: Option<Parity>, extra: Option<Parity> },
    /// `sin ⊕ sin` must land in the cos class.
    SinSinNotCos { a: Parity, b: Parity, sum: Parity },
    /// `cos ⊕ sin` must land in the sin class.
    CosSinNotSin { a: Parity, b: Parity, sum: Parity },
    /// A parity vector sits in both classes.
    Overlap { parity: Parity },
    /// No cos frequency within the cutoff is distinct from every sin frequency.
    NoDistinctCos,
    /// Two distinct lattice vectors embed to the same frequency.
    Collision { a: FreqVector, b: FreqVector },
    /// Parity vector of the wrong length.
    WrongDimension { parity: Parity },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::CosMissingZero => write!(f, "cos parities do not contain the zero vector"),
            Violation::CosNotClosed { a, b, sum } => {
                write!(f, "cos parities not closed: {a} xor {b} = {sum} is not a cos parity")
            }
            Violation::SinNotCoset { representative, missing, extra } => {
                write!(f, "sin parities are not the coset {representative} + cos")?;
                if let Some(m) = missing {
                    write!(f, "; missing {m}")?;
                }
                if let Some(e) = extra {
                    write!(f, "; unexpected {e}")?;
                }
                Ok(())
            }
            Violation::SinSinNotCos { a, b, sum } => {
                write!(f, "sin {a} xor sin {b} = {sum} is not a cos parity")
            }
            Violation::CosSinNotSin { a, b, sum } => {
                write!(f, "cos {a} xor sin {b} = {sum} is not a sin parity")
            }
            Violation::Overlap { parity } => write!(f, "parity {parity} is both cos and sin"),
            Violation::NoDistinctCos => {
                write!(f, "no cos frequency within the cutoff differs from every sin frequency")
            }
            Violation::Collision { a, b } => write!(f, "vectors {a} and {b} embed to the same frequency"),
            Violation::WrongDimension { parity } => {
                write!(f, "parity {parity} has the wrong number of entries")
            }
        }
    }
}

/// Outcome of [`AdmissiblePair::check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    /// A cos mode whose frequency differs from every sin frequency.
    pub distinct_cos_witness: Option<FreqVector>,
}

impl AdmissibilityReport {
    pub fn is_valid(&self) -> bool {
        self.valid
    }
}

impl fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid {
            write!(f, "admissible")?;
            if let Some(w) = self.distinct_cos_witness {
                write!(f, " (distinct cos frequency {w})")?;
            }
            Ok(())
        } else {
            write!(f, "not admissible:")?;
            for v in &self.violations {
                write!(f, "\n  - {v}")?;
            }
            Ok(())
        }
    }
}

/// A frequency pair `({α_k}, {β_k})` encoded as parity classes over a lattice.
///
/// A canonical vector `v` is a cos frequency when `parity(v)` lies in
/// `cos_parities` and a sin frequency when it lies in `sin_parities`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissiblePair {
    basis: Arc<GeneratorBasis>,
    cos_parities: BTreeSet<Parity>,
    sin_parities: BTreeSet<Parity>,
}

impl AdmissiblePair {
    /// Builds the pair without checking the closure laws; see [`check`](Self::check).
    pub fn new(
        basis: GeneratorBasis,
        cos_parities: impl IntoIterator<Item = Parity>,
        sin_parities: impl IntoIterator<Item = Parity>,
    ) -> Self {
        AdmissiblePair {
            basis: Arc::new(basis),
            cos_parities: cos_parities.into_iter().collect(),
            sin_parities: sin_parities.into_iter().collect(),
        }
    }

    /// Like [`new`](Self::new) but refuses pairs that fail [`check`](Self::check).
    pub fn validated(
        basis: GeneratorBasis,
        cos_parities: impl IntoIterator<Item = Parity>,
        sin_parities: impl IntoIterator<Item = Parity>,
    ) -> Result<Self> {
        let pair = Self::new(basis, cos_parities, sin_parities);
        let report = pair.check();
        if report.valid {
            Ok(pair)
        } else {
            Err(Error::Inadmissible(report))
        }
    }

    /// `α_k = k·gen`, no sin modes: periodic even functions. Every integer
    /// multiple is a cos frequency, so the cos class is all of `ℤ/2`.
    pub fn periodic_even(generator: f64, cutoff: f64) -> Result<Self> {
        let bound = (cutoff / generator).floor() as i32;
        Self::validated(
            GeneratorBasis::new(vec![generator], bound, cutoff)?,
            [Parity::zero(1), Parity::from_bits(&[1])?],
            [],
        )
    }

    /// `α_k = 2k`, `β_k = 2k + 1` over the generator 1.
    pub fn interleaved(cutoff: f64) -> Result<Self> {
        let bound = cutoff.floor() as i32;
        Self::validated(
            GeneratorBasis::new(vec![1.0], bound, cutoff)?,
            [Parity::zero(1)],
            [Parity::from_bits(&[1])?],
        )
    }

    /// `α = 2nA + 2lB`, `β = (2n+1)A + (2l+1)B` over two generators.
    pub fn even_odd_two(a: f64, b: f64, coeff_bound: i32, cutoff: f64) -> Result<Self> {
        Self::validated(
            GeneratorBasis::new(vec![a, b], coeff_bound, cutoff)?,
            [Parity::zero(2)],
            [Parity::from_bits(&[1, 1])?],
        )
    }

    pub fn basis(&self) -> &Arc<GeneratorBasis> {
        &self.basis
    }

    pub fn cos_parities(&self) -> &BTreeSet<Parity> {
        &self.cos_parities
    }

    pub fn sin_parities(&self) -> &BTreeSet<Parity> {
        &self.sin_parities
    }

    /// Same parity classes over a basis with a different cutoff.
    pub fn with_cutoff(&self, cutoff: f64) -> Result<Self> {
        Ok(AdmissiblePair {
            basis: Arc::new(self.basis.with_cutoff(cutoff)?),
            cos_parities: self.cos_parities.clone(),
            sin_parities: self.sin_parities.clone(),
        })
    }

    /// Expects a canonical vector.
    pub fn classify(&self, v: &FreqVector) -> ModeClass {
        if v.is_zero() {
            return ModeClass::Mean;
        }
        if self.basis.embed_raw(v) <= 0.0 {
            return ModeClass::Excluded;
        }
        let p = v.parity();
        if self.cos_parities.contains(&p) {
            ModeClass::Cos
        } else if self.sin_parities.contains(&p) {
            ModeClass::Sin
        } else {
            ModeClass::Excluded
        }
    }

    /// True when the mode belongs to the `E` space spanned by the pair.
    pub fn admits(&self, mode: &ModeId) -> bool {
        matches!(
            (self.classify(&mode.vec), mode.kind),
            (ModeClass::Mean, ModeKind::Mean)
                | (ModeClass::Cos, ModeKind::Cos)
                | (ModeClass::Sin, ModeKind::Sin)
        )
    }

    /// Exhaustive check of the group laws, condition (i) and injectivity.
    pub fn check(&self) -> AdmissibilityReport {
        let d = self.basis.dim();
        let mut violations = Vec::new();

        for p in self.cos_parities.iter().chain(&self.sin_parities) {
            if p.dim() != d {
                violations.push(Violation::WrongDimension { parity: *p });
            }
        }
        if !violations.is_empty() {
            return AdmissibilityReport {
                valid: false,
                violations,
                distinct_cos_witness: None,
            };
        }

        let cos = &self.cos_parities;
        let sin = &self.sin_parities;
        if !cos.contains(&Parity::zero(d)) {
            violations.push(Violation::CosMissingZero);
        }
        'closed: for a in cos {
            for b in cos {
                let sum = a.xor(b);
                if !cos.contains(&sum) {
                    violations.push(Violation::CosNotClosed { a: *a, b: *b, sum });
                    break 'closed;
                }
            }
        }
        if let Some(rep) = sin.iter().next() {
            let coset: BTreeSet<Parity> = cos.iter().map(|c| c.xor(rep)).collect();
            if &coset != sin {
                violations.push(Violation::SinNotCoset {
                    representative: *rep,
                    missing: coset.difference(sin).next().copied(),
                    extra: sin.difference(&coset).next().copied(),
                });
            }
        }
        'sinsin: for a in sin {
            for b in sin {
                let sum = a.xor(b);
                if !cos.contains(&sum) {
                    violations.push(Violation::SinSinNotCos { a: *a, b: *b, sum });
                    break 'sinsin;
                }
            }
        }
        'cossin: for a in cos {
            for b in sin {
                let sum = a.xor(b);
                if !sin.contains(&sum) {
                    violations.push(Violation::CosSinNotSin { a: *a, b: *b, sum });
                    break 'cossin;
                }
            }
        }
        for p in Parity::all(d) {
            if cos.contains(&p) && sin.contains(&p) {
                violations.push(Violation::Overlap { parity: p });
            }
        }

        let vectors = self.basis.canonical_vectors();
        if let Some(w) = vectors
            .windows(2)
            .find(|w| (w[1].0 - w[0].0).abs() <= COLLISION_TOL)
        {
            violations.push(Violation::Collision { a: w[0].1, b: w[1].1 });
        }

        let sin_freqs: Vec<f64> = vectors
            .iter()
            .filter(|(_, v)| self.classify(v) == ModeClass::Sin)
            .map(|(x, _)| *x)
            .collect();
        let distinct_cos_witness = vectors
            .iter()
            .filter(|(_, v)| self.classify(v) == ModeClass::Cos)
            .find(|(x, _)| sin_freqs.iter().all(|s| (s - x).abs() > COLLISION_TOL))
            .map(|(_, v)| *v);
        if distinct_cos_witness.is_none() {
            violations.push(Violation::NoDistinctCos);
        }

        AdmissibilityReport {
            valid: violations.is_empty(),
            violations,
            distinct_cos_witness,
        }
    }

    /// Mean first, then every Cos/Sin mode of the truncated lattice sorted by
    /// frequency, ties broken lexicographically on the coordinates.
    pub fn enumerate(&self) -> Vec<ModeId> {
        let d = self.basis.dim();
        let mut out = vec![ModeId::mean(d)];
        for (_, v) in self.basis.canonical_vectors() {
            match self.classify(&v) {
                ModeClass::Cos => out.push(ModeId { vec: v, kind: ModeKind::Cos }),
                ModeClass::Sin => out.push(ModeId { vec: v, kind: ModeKind::Sin }),
                ModeClass::Mean | ModeClass::Excluded => {}
            }
        }
        out
    }

    /// Frequency of a mode in rad/m.
    pub fn frequency(&self, mode: &ModeId) -> f64 {
        self.basis.embed_raw(&mode.vec)
    }
}

/// A generator entry as written in a pair definition file: a number or an
/// expression such as `"sqrt(5)"`, `"2*sqrt(3)"` or `"pi/2"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorSpec {
    Value(f64),
    Expr(String),
}

impl GeneratorSpec {
    pub fn value(&self) -> Result<f64> {
        match self {
            GeneratorSpec::Value(v) => Ok(*v),
            GeneratorSpec::Expr(s) => parse_generator(s),
        }
    }

    fn source(&self) -> String {
        match self {
            GeneratorSpec::Value(v) => format!("{v}"),
            GeneratorSpec::Expr(s) => s.trim().to_string(),
        }
    }
}

/// Products and quotients of numbers, `sqrt(number)` and `pi`.
fn parse_generator(src: &str) -> Result<f64> {
    let err = |reason: String| Error::InvalidInput {
        field: "generators".into(),
        reason,
    };
    let factor = |tok: &str| -> Result<f64> {
        let tok = tok.trim();
        if tok == "pi" {
            return Ok(std::f64::consts::PI);
        }
        if let Some(inner) = tok.strip_prefix("sqrt(").and_then(|t| t.strip_suffix(')')) {
            let x: f64 = inner
                .trim()
                .parse()
                .map_err(|_| err(format!("cannot parse `{inner}` inside sqrt")))?;
            if x < 0.0 {
                return Err(err(format!("sqrt of negative number {x}")));
            }
            return Ok(x.sqrt());
        }
        tok.parse().map_err(|_| err(format!("cannot parse `{tok}`")))
    };

    let mut value = 1.0;
    let mut op = '*';
    let mut rest = src.trim();
    if rest.is_empty() {
        return Err(err("empty generator expression".into()));
    }
    loop {
        let split = rest.find(['*', '/']);
        let (tok, next) = match split {
            Some(i) => (&rest[..i], Some((rest.as_bytes()[i] as char, &rest[i + 1..]))),
            None => (rest, None),
        };
        let f = factor(tok)?;
        match op {
            '*' => value *= f,
            _ => value /= f,
        }
        match next {
            Some((o, r)) => {
                op = o;
                rest = r;
            }
            None => break,
        }
    }
    Ok(value)
}

/// On-disk description of a frequency pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub generators: Vec<GeneratorSpec>,
    pub cos_parities: Vec<Vec<u8>>,
    #[serde(default)]
    pub sin_parities: Vec<Vec<u8>>,
    /// Defaults to `ceil(cutoff / smallest generator)`.
    #[serde(default)]
    pub coeff_bound: Option<i32>,
    pub cutoff: f64,
}

/// Fully resolved echo of a [`PairSpec`], stable for golden files.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CanonicalPair {
    pub generators: Vec<CanonicalGenerator>,
    pub cos_parities: Vec<Parity>,
    pub sin_parities: Vec<Parity>,
    pub coeff_bound: i32,
    pub cutoff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CanonicalGenerator {
    pub expr: String,
    pub value: f64,
}

impl PairSpec {
    pub fn generator_values(&self) -> Result<Vec<f64>> {
        self.generators.iter().map(GeneratorSpec::value).collect()
    }

    pub fn resolved_bound(&self) -> Result<i32> {
        if let Some(b) = self.coeff_bound {
            return Ok(b);
        }
        let gens = self.generator_values()?;
        let min = gens.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::InvalidInput {
                field: "generators".into(),
                reason: "generators must be positive".into(),
            });
        }
        Ok((self.cutoff / min - 1e-12).ceil().max(0.0) as i32)
    }

    /// Builds the pair without checking admissibility.
    pub fn build(&self) -> Result<AdmissiblePair> {
        let basis = GeneratorBasis::new(self.generator_values()?, self.resolved_bound()?, self.cutoff)?;
        let parities = |rows: &[Vec<u8>]| -> Result<Vec<Parity>> {
            rows.iter().map(|r| Parity::from_bits(r)).collect()
        };
        Ok(AdmissiblePair::new(
            basis,
            parities(&self.cos_parities)?,
            parities(&self.sin_parities)?,
        ))
    }

    pub fn canonical(&self) -> Result<CanonicalPair> {
        let generators = self
            .generators
            .iter()
            .map(|g| Ok(CanonicalGenerator { expr: g.source(), value: g.value()? }))
            .collect::<Result<Vec<_>>>()?;
        let sorted = |rows: &[Vec<u8>]| -> Result<Vec<Parity>> {
            let set: BTreeSet<Parity> =
                rows.iter().map(|r| Parity::from_bits(r)).collect::<Result<_>>()?;
            Ok(set.into_iter().collect())
        };
        Ok(CanonicalPair {
            generators,
            cos_parities: sorted(&self.cos_parities)?,
            sin_parities: sorted(&self.sin_parities)?,
            coeff_bound: self.resolved_bound()?,
            cutoff: self.cutoff,
        })
    }

    /// Inverse of [`build`](Self::build) for an existing pair.
    pub fn from_pair(pair: &AdmissiblePair) -> Self {
        PairSpec {
            generators: pair.basis.generators.iter().map(|g| GeneratorSpec::Value(*g)).collect(),
            cos_parities: pair.cos_parities.iter().map(Parity::to_bits).collect(),
            sin_parities: pair.sin_parities.iter().map(Parity::to_bits).collect(),
            coeff_bound: Some(pair.basis.coeff_bound),
            cutoff: pair.basis.cutoff,
        }
    }
}
