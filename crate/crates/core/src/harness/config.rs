//! Plain-text experiment configuration.
//!
//! One `key = value` per line; `#` starts a comment; lists are comma
//! separated. Unknown or repeated keys are errors. Values left out fall
//! back to the defaults of the experiment kind.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::{default_c_lt, e_tf};
use crate::error::{Error, Result};
use crate::solver::model::check_exponent;
use crate::solver::{BoxPolicy, Engine, GridPolicy, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Solve,
    SweepLambda,
    BindingTable,
    BoundsReport,
    DimerCurve,
    Figure1,
    Figure2,
    Figure3,
    Figure4,
    GapVsP,
}

impl Kind {
    pub const ALL: [Kind; 10] = [
        Kind::Solve,
        Kind::SweepLambda,
        Kind::BindingTable,
        Kind::BoundsReport,
        Kind::DimerCurve,
        Kind::Figure1,
        Kind::Figure2,
        Kind::Figure3,
        Kind::Figure4,
        Kind::GapVsP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Solve => "solve",
            Kind::SweepLambda => "sweep-lambda",
            Kind::BindingTable => "binding-table",
            Kind::BoundsReport => "bounds-report",
            Kind::DimerCurve => "dimer-curve",
            Kind::Figure1 => "figure1",
            Kind::Figure2 => "figure2",
            Kind::Figure3 => "figure3",
            Kind::Figure4 => "figure4",
            Kind::GapVsP => "gap-vs-p",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment kind '{s}'")))
    }
}

/// Every recognised key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("kind", "experiment kind (solve, sweep-lambda, ..., gap-vs-p)"),
    ("dim", "dimension d in {1, 2, 3}"),
    ("p", "exponent, 1 < p < 1 + 2/d"),
    ("mass", "mass λ of a single solve"),
    ("masses", "explicit ascending list of masses for sweeps"),
    ("lambda_min", "first mass of a uniform sweep"),
    ("lambda_max", "last mass of a uniform sweep"),
    ("lambda_points", "number of masses of a uniform sweep"),
    ("n_max", "largest integer mass of binding tables and 2D figures"),
    ("p_list", "exponents for gap-vs-p"),
    ("r_min", "first dimer separation"),
    ("r_max", "last dimer separation"),
    ("r_step", "dimer separation step"),
    ("quarter_turns", "rotation of the right dimer cluster in units of 90 degrees"),
    ("engine", "flow or scf"),
    ("el_tol", "Euler-Lagrange residual tolerance"),
    ("eig_tol", "eigensolver residual tolerance"),
    ("energy_tol", "relative energy stall tolerance"),
    ("max_iter", "outer iteration cap"),
    ("mixing", "density mixing of the scf engine, in (0, 1]"),
    ("n_restarts", "independent starts per solve"),
    ("seed", "base random seed"),
    ("guard", "unoccupied vectors carried by the engines"),
    ("backtrack_slack", "allowed energy rise per flow step"),
    ("box_l", "fixed box length (overrides the box rule)"),
    ("grid_n", "fixed points per axis, even, at least 8"),
    ("l_min", "smallest automatic box length"),
    ("c_box", "core size per N^(1/d) of the automatic box"),
    ("decay_lengths", "decay lengths of margin on each side of the automatic box"),
    ("points_per_decay", "grid points per estimated decay length"),
    ("verify_box", "re-solve at 1.5 L and compare (true/false)"),
    ("verify_tol", "relative energy change accepted by the box check"),
    ("c_lt", "Lieb-Thirring constant (default: shipped table)"),
    ("binding_slack", "binding slack relative to |J(N)|"),
    ("warm_start", "seed each sweep point by its predecessor (true/false)"),
    ("dump_orbitals", "write orbitals as little-endian f64 with a JSON sidecar"),
    ("pw_lengths", "box lengths of the plane-wave bound sequence"),
    ("mollifier_eps", "half-width of the plane-wave mollifier"),
    ("memo_spacing", "p spacing of the I(d,p,1) table used by p_critical"),
];

/// Parsed but unresolved configuration: key → (line, raw value).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(Error::Config { line: line_no, message: format!("expected 'key = value', got '{body}'") });
            };
            let key = key.trim().to_string();
            if !KEYS.iter().any(|(k, _)| *k == key) {
                return Err(Error::Config { line: line_no, message: format!("unknown key '{key}'") });
            }
            if let Some((first, _)) = values.get(&key) {
                return Err(Error::Config { line: line_no, message: format!("key '{key}' already set on line {first}") });
            }
            values.insert(key, (line_no, value.trim().to_string()));
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets a value coming from the command line (line 0).
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), (0, value.to_string()));
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::Config { line: *line, message: format!("{key}: cannot parse '{raw}': {e}") }),
        }
    }

    fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw
                .split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|e| Error::Config {
                        line: *line,
                        message: format!("{key}: cannot parse '{}': {e}", t.trim()),
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.values.get(key).map_or(0, |v| v.0)
    }
}

/// Fully resolved experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: Kind,
    pub dim: usize,
    pub p: f64,
    pub mass: f64,
    pub masses: Vec<f64>,
    pub n_max: u32,
    pub p_list: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub r_step: f64,
    pub quarter_turns: u8,
    pub solver: SolverConfig,
    pub c_lt: f64,
    pub c_lt_source: String,
    pub binding_slack: f64,
    pub warm_start: bool,
    pub dump_orbitals: bool,
    pub pw_lengths: Vec<f64>,
    pub mollifier_eps: f64,
    pub memo_spacing: f64,
    pub output: PathBuf,
    pub seed: u64,
}

fn uniform(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

fn range_err(raw: &RawConfig, key: &str, message: String) -> Error {
    Error::Config { line: raw.line_of(key), message }
}

impl ExperimentSpec {
    /// Resolves `raw` for `kind` (or the config's own `kind`, default
    /// `solve`), validating every field.
    pub fn resolve(kind: Option<Kind>, raw: &RawConfig, output: PathBuf) -> Result<Self> {
        let kind = match kind {
            Some(k) => k,
            None => raw.get::<String>("kind")?.map(|s| s.parse()).transpose()?.unwrap_or(Kind::Solve),
        };
        let two_d = matches!(kind, Kind::Figure2 | Kind::Figure3);
        let dim = raw.get::<usize>("dim")?.unwrap_or(if two_d { 2 } else { 1 });
        if !(1..=3).contains(&dim) {
            return Err(range_err(raw, "dim", format!("dim must be 1, 2 or 3, got {dim}")));
        }
        let p = raw.get::<f64>("p")?.unwrap_or(if two_d { 1.5 } else { 1.3 });
        if kind != Kind::GapVsP {
            check_exponent(dim, p).map_err(|e| range_err(raw, "p", e.to_string()))?;
        }
        let mass = raw.get::<f64>("mass")?.unwrap_or(if kind == Kind::Figure1 { 15.0 } else { 1.0 });
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(range_err(raw, "mass", format!("mass must be positive, got {mass}")));
        }
        let masses = match raw.get_list("masses")? {
            Some(m) => m,
            None => {
                let lo = raw.get::<f64>("lambda_min")?.unwrap_or(0.25);
                let hi = raw.get::<f64>("lambda_max")?.unwrap_or(3.0);
                let count = raw.get::<usize>("lambda_points")?.unwrap_or(12);
                if count == 0 || !(lo > 0.0 && hi >= lo) {
                    return Err(range_err(raw, "lambda_points", "need 0 < lambda_min ≤ lambda_max and at least one point".into()));
                }
                uniform(lo, hi, count)
            }
        };
        if masses.iter().any(|&m| !(m > 0.0)) || masses.windows(2).any(|w| w[1] <= w[0]) {
            return Err(range_err(raw, "masses", "masses must be positive and strictly ascending".into()));
        }
        let n_max = raw.get::<u32>("n_max")?.unwrap_or(4);
        if n_max == 0 {
            return Err(range_err(raw, "n_max", "n_max must be at least 1".into()));
        }
        let p_list = raw.get_list("p_list")?.unwrap_or_else(|| vec![1.3, 1.6, 1.9]);
        if kind == Kind::GapVsP {
            for &q in &p_list {
                check_exponent(dim, q).map_err(|e| range_err(raw, "p_list", e.to_string()))?;
            }
        }
        let r_min = raw.get::<f64>("r_min")?.unwrap_or(2.0);
        let r_max = raw.get::<f64>("r_max")?.unwrap_or(30.0);
        let r_step = raw.get::<f64>("r_step")?.unwrap_or(1.0);
        if !(r_min >= 0.0 && r_max >= r_min && r_step > 0.0) {
            return Err(range_err(raw, "r_step", "need 0 ≤ r_min ≤ r_max and r_step > 0".into()));
        }
        let quarter_turns = raw.get::<u8>("quarter_turns")?.unwrap_or(0) % 4;

        let d = SolverConfig::default();
        let b = BoxPolicy::default();
        let seed = raw.get::<u64>("seed")?.unwrap_or(0);
        let solver = SolverConfig {
            engine: raw.get::<Engine>("engine")?.unwrap_or(d.engine),
            grid: GridPolicy {
                box_length: raw.get::<f64>("box_l")?,
                grid_n: raw.get::<usize>("grid_n")?,
                rule: BoxPolicy {
                    l_min: raw.get("l_min")?.unwrap_or(b.l_min),
                    c_box: raw.get("c_box")?.unwrap_or(b.c_box),
                    decay_lengths: raw.get("decay_lengths")?.unwrap_or(b.decay_lengths),
                    points_per_decay: raw.get("points_per_decay")?.unwrap_or(b.points_per_decay),
                    verify: raw.get("verify_box")?.unwrap_or(b.verify),
                    verify_tol: raw.get("verify_tol")?.unwrap_or(b.verify_tol),
                },
            },
            el_tol: raw.get("el_tol")?.unwrap_or(d.el_tol),
            eig_tol: raw.get("eig_tol")?.unwrap_or(d.eig_tol),
            energy_tol: raw.get("energy_tol")?.unwrap_or(d.energy_tol),
            max_iter: raw.get("max_iter")?.unwrap_or(d.max_iter),
            mixing: raw.get("mixing")?.unwrap_or(d.mixing),
            n_restarts: raw.get("n_restarts")?.unwrap_or(if two_d { 3 } else { d.n_restarts }),
            seed,
            guard: raw.get("guard")?.unwrap_or(d.guard),
            backtrack_slack: raw.get("backtrack_slack")?.unwrap_or(d.backtrack_slack),
        };
        solver.validate().map_err(|e| {
            // Validation messages start with the offending field.
            let msg = e.to_string();
            let field = msg.trim_start_matches("invalid parameter: ").split_whitespace().next().unwrap_or("");
            let key = if field == "box" { "box_l" } else { field }.to_string();
            range_err(raw, &key, msg)
        })?;

        let (c_lt, c_lt_source) = match raw.get::<f64>("c_lt")? {
            Some(c) if c > 0.0 => (c, "config".to_string()),
            Some(c) => return Err(range_err(raw, "c_lt", format!("c_lt must be positive, got {c}"))),
            None => {
                let e = default_c_lt(dim)?;
                (e.value, e.source)
            }
        };
        let binding_slack = raw.get::<f64>("binding_slack")?.unwrap_or(crate::ledger::DEFAULT_SLACK);
        if !(binding_slack >= 0.0) {
            return Err(range_err(raw, "binding_slack", "binding_slack must be nonnegative".into()));
        }
        // Plane-wave defaults in units of the Thomas-Fermi length |e_TF|^{-1/2}:
        // the mollifier costs O(1/(εL)) kinetic energy and O(ε/L) interaction,
        // so its best width is a fixed physical length.
        let tf_length = e_tf(dim, p).map_or(1.0, |e| 1.0 / e.abs().sqrt());
        let pw_lengths = raw.get_list("pw_lengths")?.unwrap_or_else(|| {
            let top = if dim == 3 { 6 } else { 7 };
            (2..2 + top).map(|k| tf_length * f64::from(1u32 << k)).collect()
        });
        let mollifier_eps = raw.get::<f64>("mollifier_eps")?.unwrap_or(tf_length);
        if !(mollifier_eps > 0.0) || pw_lengths.iter().any(|&l| l < 4.0 * mollifier_eps) {
            return Err(range_err(raw, "pw_lengths", "plane-wave lengths must be at least 4 mollifier_eps > 0".into()));
        }
        let memo_spacing = raw.get::<f64>("memo_spacing")?.unwrap_or(0.02);
        if !(memo_spacing > 0.0 && memo_spacing <= 0.1) {
            return Err(range_err(raw, "memo_spacing", "memo_spacing must lie in (0, 0.1]".into()));
        }
        Ok(Self {
            kind,
            dim,
            p,
            mass,
            masses,
            n_max,
            p_list,
            r_min,
            r_max,
            r_step,
            quarter_turns,
            solver,
            c_lt,
            c_lt_source,
            binding_slack,
            warm_start: raw.get("warm_start")?.unwrap_or(false),
            dump_orbitals: raw.get("dump_orbitals")?.unwrap_or(false),
            pw_lengths,
            mollifier_eps,
            memo_spacing,
            output,
            seed,
        })
    }

    /// Dimer separations `r_min, r_min + r_step, …` up to `r_max`.
    pub fn separations(&self) -> Vec<f64> {
        let count = ((self.r_max - self.r_min) / self.r_step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.r_min + i as f64 * self.r_step).collect()
    }

    /// The effective configuration in the input format; parsing it back
    /// resolves to the same spec.
    pub fn to_config_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let s = &self.solver;
        let r = &s.grid.rule;
        let mut lines = vec![
            ("kind", self.kind.to_string()),
            ("dim", self.dim.to_string()),
            ("p", self.p.to_string()),
            ("mass", self.mass.to_string()),
            ("masses", list(&self.masses)),
            ("n_max", self.n_max.to_string()),
            ("p_list", list(&self.p_list)),
            ("r_min", self.r_min.to_string()),
            ("r_max", self.r_max.to_string()),
            ("r_step", self.r_step.to_string()),
            ("quarter_turns", self.quarter_turns.to_string()),
            ("engine", format!("{:?}", s.engine).to_lowercase()),
            ("el_tol", s.el_tol.to_string()),
            ("eig_tol", s.eig_tol.to_string()),
            ("energy_tol", s.energy_tol.to_string()),
            ("max_iter", s.max_iter.to_string()),
            ("mixing", s.mixing.to_string()),
            ("n_restarts", s.n_restarts.to_string()),
            ("seed", self.seed.to_string()),
            ("guard", s.guard.to_string()),
            ("backtrack_slack", s.backtrack_slack.to_string()),
            ("l_min", r.l_min.to_string()),
            ("c_box", r.c_box.to_string()),
            ("decay_lengths", r.decay_lengths.to_string()),
            ("points_per_decay", r.points_per_decay.to_string()),
            ("verify_box", r.verify.to_string()),
            ("verify_tol", r.verify_tol.to_string()),
            ("binding_slack", self.binding_slack.to_string()),
            ("warm_start", self.warm_start.to_string()),
            ("dump_orbitals", self.dump_orbitals.to_string()),
            ("pw_lengths", list(&self.pw_lengths)),
            ("mollifier_eps", self.mollifier_eps.to_string()),
            ("memo_spacing", self.memo_spacing.to_string()),
        ];
        if self.c_lt_source == "config" {
            lines.push(("c_lt", self.c_lt.to_string()));
        }
        if let Some(l) = s.grid.box_length {
            lines.push(("box_l", l.to_string()));
        }
        if let Some(n) = s.grid.grid_n {
            lines.push(("grid_n", n.to_string()));
        }
        let mut out = String::new();
        for (k, v) in lines {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}
