//! Local bifurcation branches `s ↦ (λ(s), μ(s), w(s))` emanating from the
//! laminar flow at a simple root `λ*` of the dispersion relation.
//!
//! The kernel mode `φ` (one cos or sin mode of the pair) has its coefficient
//! in `w` pinned to `s`. The remaining coefficients, `λ` and `μ` are the
//! unknowns, and the equations are the projections of `F` onto the mean and
//! every retained mode, which makes the Newton system square.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freqset::{AdmissiblePair, FreqVector, ModeId, ModeKind, PairSpec};
use crate::trig::{TrigSum, TrigSumSerial};
use crate::waveop::{
    bifurcation_lambdas, check_surface, finite_difference_jacobian, resonance_scan, surface_window,
    GalerkinSystem, TrialState, WaveParams, SURFACE_GRID,
};

/// Maximum number of step halvings inside one damped Newton step.
pub const MAX_DAMPING: usize = 6;

/// Smallest continuation step is `Δs / MIN_STEP_DIVISOR`.
pub const MIN_STEP_DIVISOR: f64 = 64.0;

/// Which root of the dispersion relation to bifurcate from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootSign {
    Plus,
    Minus,
}

#[derive(Clone, Debug)]
pub struct BranchConfig {
    pub pair: AdmissiblePair,
    /// Kernel mode; its coefficient in `w` is pinned to `s`.
    pub k0: ModeId,
    pub root_sign: RootSign,
    pub s_max: f64,
    pub n_steps: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Galerkin cutoff (rad/m); replaces the pair's own cutoff.
    pub cutoff: f64,
    /// Also continue towards negative `s`.
    pub both_signs: bool,
    /// Multipliers below this count as kernel modes.
    pub resonance_tol: f64,
}

impl BranchConfig {
    /// Defaults: 10 steps, Newton tolerance `1e-11`, 25 iterations,
    /// resonance tolerance `1e-6`, positive `s` only.
    pub fn new(pair: AdmissiblePair, k0: ModeId, root_sign: RootSign, s_max: f64) -> Self {
        let cutoff = pair.basis().cutoff();
        BranchConfig {
            pair,
            k0,
            root_sign,
            s_max,
            n_steps: 10,
            newton_tol: 1e-11,
            newton_max_iter: 25,
            cutoff,
            both_signs: false,
            resonance_tol: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| Err(Error::InvalidInput {
            field: field.into(),
            reason,
        });
        if !(self.s_max.is_finite() && self.s_max >= 0.0) {
            return bad("s_max", format!("must be a non-negative real, got {}", self.s_max));
        }
        if self.n_steps == 0 {
            return bad("n_steps", "at least one step is required".into());
        }
        if !(self.newton_tol > 0.0) {
            return bad("newton_tol", format!("must be positive, got {}", self.newton_tol));
        }
        if self.newton_max_iter == 0 {
            return bad("newton_max_iter", "must be at least 1".into());
        }
        if !(self.resonance_tol > 0.0) {
            return bad("resonance_tol", format!("must be positive, got {}", self.resonance_tol));
        }
        if self.k0.kind == ModeKind::Mean {
            return bad("k0", "the kernel mode must be a cos or sin mode".into());
        }
        Ok(())
    }

    /// The pair re-truncated at the configured cutoff.
    pub fn galerkin_pair(&self) -> Result<AdmissiblePair> {
        if self.cutoff == self.pair.basis().cutoff() {
            Ok(self.pair.clone())
        } else {
            self.pair.with_cutoff(self.cutoff)
        }
    }
}

/// One converged point of a branch.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchPoint {
    pub s: f64,
    pub lambda: f64,
    pub mu: f64,
    pub w: TrigSum,
    /// B² norm of the projected residual.
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub truncation_mass: f64,
}

impl BranchPoint {
    pub fn state(&self) -> TrialState {
        TrialState {
            lambda: self.lambda,
            mu: self.mu,
            w: self.w.clone(),
        }
    }

    /// `‖w(s) − sφ‖_{B²} / s²`.
    pub fn remainder_ratio(&self, k0: &ModeId) -> f64 {
        let phi = TrigSum::mode(self.w.basis(), *k0, self.s);
        let rem = self.w.sub(&phi).expect("same lattice");
        rem.norm_b2() / (self.s * self.s)
    }

    /// Lowest surface height `h + min w` on the standard grid.
    pub fn min_surface(&self, h: f64) -> f64 {
        let xs = surface_window(self.w.basis(), SURFACE_GRID);
        h + self.w.eval_grid(&xs).into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// Continuation driver for one configuration.
#[derive(Clone, Debug)]
pub struct BranchSolver {
    system: GalerkinSystem,
    cfg: BranchConfig,
    k0_index: usize,
    lambda_star: f64,
}

impl BranchSolver {
    /// Validates the configuration and locates `λ*`. Does not test resonance;
    /// [`seed`](Self::seed) does.
    pub fn new(params: WaveParams, cfg: BranchConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        let pair = cfg.galerkin_pair()?;
        if cfg.k0.vec.dim() != pair.basis().dim() {
            return Err(Error::DimensionMismatch {
                expected: pair.basis().dim(),
                found: cfg.k0.vec.dim(),
            });
        }
        let (k0, _) = pair.basis().fold(&cfg.k0.vec);
        let k0 = ModeId { vec: k0, kind: cfg.k0.kind };
        let system = GalerkinSystem::new(params, pair);
        let k0_index = system
            .wave_modes()
            .iter()
            .position(|m| *m == k0)
            .ok_or_else(|| Error::InvalidInput {
                field: "k0".into(),
                reason: format!("{k0} is not a mode of the pair below the cutoff"),
            })?;
        let (plus, minus) = bifurcation_lambdas(&params, system.pair.frequency(&k0))?;
        let lambda_star = match cfg.root_sign {
            RootSign::Plus => plus,
            RootSign::Minus => minus,
        };
        Ok(BranchSolver {
            system,
            cfg: BranchConfig { k0, ..cfg },
            k0_index,
            lambda_star,
        })
    }

    pub fn lambda_star(&self) -> f64 {
        self.lambda_star
    }

    pub fn system(&self) -> &GalerkinSystem {
        &self.system
    }

    pub fn config(&self) -> &BranchConfig {
        &self.cfg
    }

    pub fn k0(&self) -> ModeId {
        self.cfg.k0
    }

    /// The laminar point at `λ*`, after checking that the kernel is exactly `{k0}`.
    pub fn seed(&self) -> Result<BranchPoint> {
        let hits = resonance_scan(
            &self.system.params,
            self.lambda_star,
            &self.system.pair,
            self.cfg.resonance_tol,
        );
        if hits != [self.cfg.k0] {
            return Err(Error::Resonance { modes: hits });
        }
        Ok(BranchPoint {
            s: 0.0,
            lambda: self.lambda_star,
            mu: 0.0,
            w: TrigSum::zero(self.system.basis()),
            residual_norm: 0.0,
            newton_iters: 0,
            truncation_mass: 0.0,
        })
    }

    fn pack(&self, state: &TrialState) -> Vec<f64> {
        let mut x = vec![state.lambda, state.mu];
        x.extend(
            state
                .w
                .coefficients(self.system.wave_modes())
                .into_iter()
                .enumerate()
                .filter(|(i, _)| *i != self.k0_index)
                .map(|(_, c)| c),
        );
        x
    }

    fn unpack(&self, x: &[f64], s: f64) -> TrialState {
        let mut coeffs = Vec::with_capacity(x.len() - 1);
        coeffs.extend_from_slice(&x[2..2 + self.k0_index]);
        coeffs.push(s);
        coeffs.extend_from_slice(&x[2 + self.k0_index..]);
        TrialState {
            lambda: x[0],
            mu: x[1],
            w: self.system.surface(&coeffs),
        }
    }

    fn residual_at(&self, x: &[f64], s: f64) -> Result<(Vec<f64>, f64, f64)> {
        let r = self.system.residual(&self.unpack(x, s))?;
        Ok((r.values, r.norm, r.truncation_mass))
    }

    /// Damped Newton on the pinned system at amplitude `s`.
    pub fn newton_correct(&self, guess: &TrialState, s: f64) -> Result<BranchPoint> {
        let mut x = self.pack(guess);
        let (mut f, mut norm, mut mass) = self.residual_at(&x, s)?;
        let mut iters = 0;
        while norm > self.cfg.newton_tol {
            if iters == self.cfg.newton_max_iter {
                return Err(Error::NonConvergence { s, residual: norm, iterations: iters });
            }
            iters += 1;
            let jac = finite_difference_jacobian(|y| Ok(self.residual_at(y, s)?.0), &x)?;
            let delta = solve(jac, &f).ok_or(Error::SingularJacobian { s })?;

            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_DAMPING {
                let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a - t * d).collect();
                match self.residual_at(&trial, s) {
                    Ok((tf, tn, tm)) if tn < norm => {
                        accepted = Some((trial, tf, tn, tm));
                        break;
                    }
                    Ok(_) | Err(Error::SurfaceBelowBed { .. }) => t *= 0.5,
                    Err(e) => return Err(e),
                }
            }
            match accepted {
                Some((nx, nf, nn, nm)) => {
                    x = nx;
                    f = nf;
                    norm = nn;
                    mass = nm;
                }
                None => return Err(Error::NonConvergence { s, residual: norm, iterations: iters }),
            }
        }
        let state = self.unpack(&x, s);
        check_surface(self.system.params.h, &state.w)?;
        Ok(BranchPoint {
            s,
            lambda: state.lambda,
            mu: state.mu,
            w: state.w,
            residual_norm: norm,
            newton_iters: iters,
            truncation_mass: mass,
        })
    }

    fn predict(&self, pts: &[BranchPoint], s: f64) -> TrialState {
        let last = &pts[pts.len() - 1];
        if pts.len() < 2 {
            let mut w = last.w.clone();
            let current = w.coeff(&self.cfg.k0);
            w.add_term(self.cfg.k0, s - current);
            return TrialState { lambda: last.lambda, mu: last.mu, w };
        }
        let prev = &pts[pts.len() - 2];
        let r = (s - last.s) / (last.s - prev.s);
        let (xl, xp) = (self.pack(&last.state()), self.pack(&prev.state()));
        let x: Vec<f64> = xl.iter().zip(&xp).map(|(a, b)| a + r * (a - b)).collect();
        self.unpack(&x, s)
    }

    /// Continues from the seed towards `direction · s_max`.
    fn march(&self, seed: &BranchPoint, direction: f64) -> Result<Vec<BranchPoint>> {
        let mut pts = vec![seed.clone()];
        if self.cfg.s_max == 0.0 {
            return Ok(Vec::new());
        }
        let ds = self.cfg.s_max / self.cfg.n_steps as f64;
        let ds_min = ds / MIN_STEP_DIVISOR;
        let mut step = ds;
        let mut done = 0.0;
        let mut grid_index = 1;
        while grid_index <= self.cfg.n_steps {
            let grid_s = if grid_index == self.cfg.n_steps {
                self.cfg.s_max
            } else {
                grid_index as f64 * ds
            };
            // snap to the grid point when only rounding separates them
            let target = if done + step >= grid_s - 1e-9 * ds {
                grid_s
            } else {
                done + step
            };
            let s = direction * target;
            let guess = self.predict(&pts, s);
            match self.newton_correct(&guess, s) {
                Ok(pt) => {
                    pts.push(pt);
                    done = target;
                    if target == grid_s {
                        grid_index += 1;
                    }
                    step = (2.0 * step).min(ds);
                }
                Err(e) if recoverable(&e) && step / 2.0 >= ds_min => step /= 2.0,
                Err(e) => {
                    return Err(Error::Stalled {
                        last_good: Box::new(pts.pop().expect("seed present")),
                        source: Box::new(e),
                    })
                }
            }
        }
        pts.remove(0);
        Ok(pts)
    }

    /// Seed plus every accepted point, sorted by `s`.
    pub fn continue_branch(&self) -> Result<Vec<BranchPoint>> {
        let seed = self.seed()?;
        let mut out = Vec::new();
        if self.cfg.both_signs {
            let mut neg = self.march(&seed, -1.0)?;
            neg.reverse();
            out.extend(neg);
        }
        out.push(seed.clone());
        out.extend(self.march(&seed, 1.0)?);
        Ok(out)
    }

    /// Corrects from the nearest point of `pts` to amplitude `s`.
    pub fn point_at(&self, pts: &[BranchPoint], s: f64) -> Result<BranchPoint> {
        let nearest = pts
            .iter()
            .min_by(|a, b| (a.s - s).abs().total_cmp(&(b.s - s).abs()))
            .ok_or_else(|| Error::InvalidInput {
                field: "points".into(),
                reason: "empty branch".into(),
            })?;
        self.newton_correct(&self.predict(std::slice::from_ref(nearest), s), s)
    }
}

fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::NonConvergence { .. } | Error::SurfaceBelowBed { .. } | Error::SingularJacobian { .. }
    )
}

fn solve(jac: DMatrix<f64>, f: &[f64]) -> Option<Vec<f64>> {
    let rhs = DVector::from_column_slice(f);
    let lu = jac.lu();
    let x = lu.solve(&rhs)?;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

/// Seeds at `λ*` for `cfg` (see [`BranchSolver::seed`]).
pub fn seed(params: WaveParams, cfg: BranchConfig) -> Result<BranchPoint> {
    BranchSolver::new(params, cfg)?.seed()
}

/// Runs a full branch for `cfg`.
pub fn continue_branch(params: WaveParams, cfg: BranchConfig) -> Result<Vec<BranchPoint>> {
    BranchSolver::new(params, cfg)?.continue_branch()
}

// ---------------------------------------------------------------------------
// Branch files

/// JSON form of a [`BranchPoint`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPointSerial {
    pub s: f64,
    pub lambda: f64,
    pub mu: f64,
    pub w: TrigSumSerial,
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub truncation_mass: f64,
}

/// JSON form of a [`BranchConfig`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchConfigSerial {
    pub pair: PairSpec,
    pub k0: ModeId,
    pub root_sign: RootSign,
    pub s_max: f64,
    pub n_steps: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub cutoff: f64,
    pub both_signs: bool,
    pub resonance_tol: f64,
}

impl BranchConfigSerial {
    pub fn from_config(cfg: &BranchConfig) -> Self {
        BranchConfigSerial {
            pair: PairSpec::from_pair(&cfg.pair),
            k0: cfg.k0,
            root_sign: cfg.root_sign,
            s_max: cfg.s_max,
            n_steps: cfg.n_steps,
            newton_tol: cfg.newton_tol,
            newton_max_iter: cfg.newton_max_iter,
            cutoff: cfg.cutoff,
            both_signs: cfg.both_signs,
            resonance_tol: cfg.resonance_tol,
        }
    }

    pub fn to_config(&self) -> Result<BranchConfig> {
        Ok(BranchConfig {
            pair: self.pair.build()?,
            k0: self.k0,
            root_sign: self.root_sign,
            s_max: self.s_max,
            n_steps: self.n_steps,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            cutoff: self.cutoff,
            both_signs: self.both_signs,
            resonance_tol: self.resonance_tol,
        })
    }
}

/// Self-describing record of one branch run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchFile {
    pub params: WaveParams,
    pub config: BranchConfigSerial,
    pub lambda_star: f64,
    pub points: Vec<BranchPointSerial>,
}

impl BranchFile {
    pub fn new(params: WaveParams, solver: &BranchSolver, points: &[BranchPoint]) -> Self {
        BranchFile {
            params,
            config: BranchConfigSerial::from_config(solver.config()),
            lambda_star: solver.lambda_star(),
            points: points
                .iter()
                .map(|p| BranchPointSerial {
                    s: p.s,
                    lambda: p.lambda,
                    mu: p.mu,
                    w: p.w.to_serial(),
                    residual_norm: p.residual_norm,
                    newton_iters: p.newton_iters,
                    truncation_mass: p.truncation_mass,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("branch files serialise") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput {
            field: "branch file".into(),
            reason: e.to_string(),
        })
    }

    /// Rebuilds the points on the Galerkin lattice of the stored config.
    pub fn points(&self) -> Result<Vec<BranchPoint>> {
        let pair = self.config.to_config()?.galerkin_pair()?;
        let basis = pair.basis();
        self.points
            .iter()
            .map(|p| {
                Ok(BranchPoint {
                    s: p.s,
                    lambda: p.lambda,
                    mu: p.mu,
                    w: TrigSum::from_serial(basis, &p.w)?,
                    residual_norm: p.residual_norm,
                    newton_iters: p.newton_iters,
                    truncation_mass: p.truncation_mass,
                })
            })
            .collect()
    }

    /// `s, lambda, mu, residual, min_surface, stagnation_flag` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::from("s,lambda,mu,residual,min_surface,stagnation_flag\n");
        for p in self.points()? {
            let stag = crate::waveop::stagnation_indicator(&self.params, p.lambda);
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.s,
                p.lambda,
                p.mu,
                p.residual_norm,
                p.min_surface(self.params.h),
                stag
            ));
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Demonstrations

/// Branch settings shared by the demos.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoOptions {
    pub s_max: f64,
    pub n_steps: usize,
    pub cutoff: f64,
    /// Coefficient bound for multi-generator lattices.
    pub coeff_bound: i32,
}

impl DemoOptions {
    /// Integer lattice, cutoff 12, ten steps to `s = 1e-2`.
    pub fn nonuniqueness() -> Self {
        DemoOptions {
            s_max: 1e-2,
            n_steps: 10,
            cutoff: 12.0,
            coeff_bound: 12,
        }
    }

    /// Twenty steps to `s = 1e-2` with cutoff 50 and bound 24, enough for
    /// eleven harmonics of `2√5`.
    pub fn almost_periodic() -> Self {
        DemoOptions {
            s_max: 1e-2,
            n_steps: 20,
            cutoff: 50.0,
            coeff_bound: 24,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NonuniquenessRow {
    pub s: f64,
    pub lambda_even: f64,
    pub lambda_odd: f64,
    /// `‖w_even − w_odd‖_{B²}`.
    pub distance: f64,
    /// B² mass of the sin modes.
    pub evenness_defect_even: f64,
    pub evenness_defect_odd: f64,
}

#[derive(Clone, Debug)]
pub struct NonuniquenessReport {
    pub lambda_star: f64,
    pub rows: Vec<NonuniquenessRow>,
    pub even: Vec<BranchPoint>,
    pub odd: Vec<BranchPoint>,
    pub even_solver: BranchSolver,
    pub odd_solver: BranchSolver,
}

/// Two branches at one `λ*`: the periodic even pair with kernel `cos x`
/// and the interleaved pair (`α = 2k`, `β = 2k + 1`) with kernel `sin x`,
/// both on the minus root.
pub fn nonuniqueness_demo(params: WaveParams, opts: &DemoOptions) -> Result<NonuniquenessReport> {
    let mk = |pair: AdmissiblePair, k0: ModeId| -> Result<BranchSolver> {
        let mut cfg = BranchConfig::new(pair, k0, RootSign::Minus, opts.s_max);
        cfg.n_steps = opts.n_steps;
        BranchSolver::new(params, cfg)
    };
    let even_solver = mk(AdmissiblePair::periodic_even(1.0, opts.cutoff)?, ModeId::cos(&[1]))?;
    let odd_solver = mk(AdmissiblePair::interleaved(opts.cutoff)?, ModeId::sin(&[1]))?;
    let even = even_solver.continue_branch()?;
    let odd = odd_solver.continue_branch()?;

    let rows = even
        .iter()
        .zip(&odd)
        .map(|(a, b)| {
            // both lattices are the integers; compare on the odd one's basis
            let wa = a.w.rebased(b.w.basis()).expect("same generators");
            NonuniquenessRow {
                s: a.s,
                lambda_even: a.lambda,
                lambda_odd: b.lambda,
                distance: wa.sub(&b.w).expect("same lattice").norm_b2(),
                evenness_defect_even: a.w.sin_mass(),
                evenness_defect_odd: b.w.sin_mass(),
            }
        })
        .collect();
    Ok(NonuniquenessReport {
        lambda_star: even_solver.lambda_star(),
        rows,
        even,
        odd,
        even_solver,
        odd_solver,
    })
}

/// How far the structural non-periodicity certificate got.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    /// Two rationally independent vectors carry nonzero coefficients.
    Support,
    /// Independent vectors appear once the support is closed under one product.
    ProductClosure,
    /// Only the admissible frequency set has independent vectors.
    FrequencySetOnly,
    None,
}

#[derive(Clone, Debug)]
pub struct AlmostPeriodicReport {
    pub lambda_star: f64,
    pub k0: ModeId,
    pub points: Vec<BranchPoint>,
    pub solver: BranchSolver,
    /// Support of the last point's `w`.
    pub support: Vec<FreqVector>,
    pub support_rank: usize,
    pub closure_rank: usize,
    pub frequency_set_rank: usize,
    /// Two rationally independent vectors, when found.
    pub witness: Option<(FreqVector, FreqVector)>,
    pub certification: Certification,
}

/// Branch over the generators `(1, √5)` with parities (even, even) for cos
/// and (odd, odd) for sin, bifurcating at the cos mode `(0, 2)` (frequency
/// `2√5`) on the plus root.
pub fn almost_periodic_demo(params: WaveParams, opts: &DemoOptions) -> Result<AlmostPeriodicReport> {
    let pair = AdmissiblePair::even_odd_two(1.0, 5f64.sqrt(), opts.coeff_bound, opts.cutoff)?;
    let k0 = ModeId::cos(&[0, 2]);
    let mut cfg = BranchConfig::new(pair.clone(), k0, RootSign::Plus, opts.s_max);
    cfg.n_steps = opts.n_steps;
    let solver = BranchSolver::new(params, cfg)?;
    let points = solver.continue_branch()?;

    let last = points.last().expect("seed is always present");
    let support = last.w.support();
    let support_rank = integer_rank(&support);

    let mut closure = support.clone();
    for a in &support {
        for b in &support {
            closure.push(a.add(b));
            closure.push(a.sub(b));
        }
    }
    let closure_rank = integer_rank(&closure);

    let freq_set: Vec<FreqVector> = pair.enumerate().iter().map(|m| m.vec).collect();
    let frequency_set_rank = integer_rank(&freq_set);

    let (certification, pool) = if support_rank >= 2 {
        (Certification::Support, &support)
    } else if closure_rank >= 2 {
        (Certification::ProductClosure, &closure)
    } else if frequency_set_rank >= 2 {
        (Certification::FrequencySetOnly, &freq_set)
    } else {
        (Certification::None, &support)
    };
    let witness = independent_pair(pool);

    Ok(AlmostPeriodicReport {
        lambda_star: solver.lambda_star(),
        k0,
        points,
        solver,
        support,
        support_rank,
        closure_rank,
        frequency_set_rank,
        witness,
        certification,
    })
}

/// Rank over ℚ of a set of integer vectors (fraction-free elimination).
pub fn integer_rank(vectors: &[FreqVector]) -> usize {
    let mut rows: Vec<Vec<i128>> = vectors
        .iter()
        .map(|v| v.coeffs().iter().map(|&c| c as i128).collect())
        .filter(|r: &Vec<i128>| r.iter().any(|&c| c != 0))
        .collect();
    let cols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        for r in 0..rows.len() {
            if r == rank || rows[r][col] == 0 {
                continue;
            }
            let (a, b) = (rows[rank][col], rows[r][col]);
            let pivot_row = rows[rank].clone();
            for (x, p) in rows[r].iter_mut().zip(&pivot_row) {
                *x = *x * a - p * b;
            }
            let g = rows[r].iter().fold(0i128, |g, &x| gcd(g, x.abs()));
            if g > 1 {
                rows[r].iter_mut().for_each(|x| *x /= g);
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn independent_pair(vs: &[FreqVector]) -> Option<(FreqVector, FreqVector)> {
    let nz: Vec<&FreqVector> = vs.iter().filter(|v| !v.is_zero()).collect();
    for (i, a) in nz.iter().enumerate() {
        for b in &nz[i + 1..] {
            if integer_rank(&[**a, **b]) == 2 {
                return Some((**a, **b));
            }
        }
    }
    None
}

/// Builds the Galerkin lattice basis of a pair for callers outside this module.
pub fn galerkin_basis(cfg: &BranchConfig) -> Result<Arc<crate::freqset::GeneratorBasis>> {
    Ok(Arc::clone(cfg.galerkin_pair()?.basis()))
}
