//! Run configuration files and pair files.
//!
//! A branch run is described by one TOML file:
//!
//! ```toml
//! pair_file = "pair.toml"   # or an inline [pair] table
//!
//! [params]
//! gamma = 1.0   # vorticity, 1/s
//! g = 9.8       # gravity, m/s^2 (default 9.8)
//! h = 1.0       # conformal mean depth, m
//!
//! [branch]
//! k0 = "cos(1)"
//! root = "plus"
//! s_max = 0.01  # m
//! n_steps = 20
//! cutoff = 20.0 # rad/m, defaults to the pair's cutoff
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use apwave::branch::{BranchConfig, RootSign};
use apwave::{ModeId, PairSpec, WaveParams};
use serde::Deserialize;

use crate::commands::CliError;
use crate::{BranchArgs, PhysicsArgs, Root};

pub const DEFAULT_G: f64 = 9.8;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default)]
    pub params: ParamsSection,
    pub pair: Option<PairSpec>,
    pub pair_file: Option<PathBuf>,
    #[serde(default)]
    pub branch: BranchSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub gamma: Option<f64>,
    pub g: Option<f64>,
    pub h: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSection {
    pub k0: Option<String>,
    pub root: Option<RootSign>,
    pub s_max: Option<f64>,
    pub n_steps: Option<usize>,
    pub cutoff: Option<f64>,
    pub both_signs: Option<bool>,
    pub newton_tol: Option<f64>,
    pub newton_max_iter: Option<usize>,
    pub resonance_tol: Option<f64>,
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Reads a pair file: JSON when the extension is `.json`, TOML otherwise.
pub fn load_pair(path: &Path) -> Result<PairSpec, CliError> {
    let text = read(path)?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn required<T>(value: Option<T>, field: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Input(format!("missing `{field}` (set it in the config or by flag)")))
}

pub fn params(file: &ParamsSection, flags: &PhysicsArgs) -> Result<WaveParams, CliError> {
    let gamma = required(flags.gamma.or(file.gamma), "params.gamma")?;
    let h = required(flags.h.or(file.h), "params.h")?;
    let g = flags.g.or(file.g).unwrap_or(DEFAULT_G);
    Ok(WaveParams::new(gamma, g, h)?)
}

/// Merges the config file (if any) with the command-line flags.
pub fn branch_run(args: &BranchArgs) -> Result<(WaveParams, BranchConfig), CliError> {
    let (run, base) = match &args.config {
        Some(path) => {
            let text = read(path)?;
            let run: RunFile =
                toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            (run, path.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (RunFile::default(), PathBuf::new()),
    };

    let params = params(&run.params, &args.physics)?;
    let spec = match (&args.pair, &run.pair_file, run.pair) {
        (Some(p), _, _) => load_pair(p)?,
        (None, Some(p), None) => load_pair(&base.join(p))?,
        (None, None, Some(spec)) => spec,
        (None, Some(_), Some(_)) => {
            return Err(CliError::Input("give either `pair` or `pair_file`, not both".into()))
        }
        (None, None, None) => return Err(CliError::Input("missing `pair` (config table or --pair)".into())),
    };
    let pair = spec.build()?;
    let report = pair.check();
    if !report.valid {
        return Err(CliError::Input(format!("pair {report}")));
    }

    let b = &run.branch;
    let k0: ModeId = required(args.k0.clone().or(b.k0.clone()), "branch.k0")?.parse()?;
    let root = match args.root {
        Some(Root::Plus) => RootSign::Plus,
        Some(Root::Minus) => RootSign::Minus,
        None => required(b.root, "branch.root")?,
    };
    let s_max = required(args.s_max.or(b.s_max), "branch.s_max")?;
    let mut cfg = BranchConfig::new(pair, k0, root, s_max);
    if let Some(n) = args.steps.or(b.n_steps) {
        cfg.n_steps = n;
    }
    if let Some(c) = args.cutoff.or(b.cutoff) {
        cfg.cutoff = c;
    }
    cfg.both_signs = args.both_signs || b.both_signs.unwrap_or(false);
    if let Some(t) = args.newton_tol.or(b.newton_tol) {
        cfg.newton_tol = t;
    }
    if let Some(n) = b.newton_max_iter {
        cfg.newton_max_iter = n;
    }
    if let Some(t) = b.resonance_tol {
        cfg.resonance_tol = t;
    }
    cfg.validate()?;
    Ok((params, cfg))
}
