//! Key-value run configuration.
//!
//! The format is a small INI dialect with four sections:
//!
//! ```ini
//! [fields]
//! preset = grushin          # or custom: m, a0, a1.., regime, bounds
//!
//! [grid]
//! s-max = 1.0
//! t-max = 1.0
//! n-s = 16
//! n-t = 16
//!
//! [experiment]
//! kind = probe              # simulate | hormander | malliavin | probe |
//!                           # norris | density | converge
//! x0 = 0, 0
//! z = 1.0, 1.0              # snapped to the nearest grid node
//! trials = 20000
//! eps = 0.2, 0.1, 0.05
//! seed = 42
//!
//! [output]
//! dir = out
//! workers = 4
//! ```
//!
//! Unknown keys are errors (with their line number); exponent-bound
//! violations that only weaken guarantees are warnings. See `README.md` for
//! the full key reference.

use std::collections::BTreeMap;
use std::fmt;

use sheetlab_core::field::{parse_field, presets, DeclaredBounds, FieldExpr, FieldSet, Regime};
use sheetlab_core::grid::GridSpec;
use sheetlab_core::malliavin::CovarianceStrategy;
use sheetlab_core::norris::{min_nu_regular, min_rho_irregular, min_rho_regular};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Simulate,
    Hormander,
    Malliavin,
    Probe,
    Norris,
    Density,
    Converge,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Hormander => "hormander",
            ExperimentKind::Malliavin => "malliavin",
            ExperimentKind::Probe => "probe",
            ExperimentKind::Norris => "norris",
            ExperimentKind::Density => "density",
            ExperimentKind::Converge => "converge",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "simulate" => ExperimentKind::Simulate,
            "hormander" => ExperimentKind::Hormander,
            "malliavin" => ExperimentKind::Malliavin,
            "probe" => ExperimentKind::Probe,
            "norris" => ExperimentKind::Norris,
            "density" => ExperimentKind::Density,
            "converge" => ExperimentKind::Converge,
            _ => return None,
        })
    }
}

/// Source of the semimartingale family for the norris experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NorrisSource {
    /// Synthetic standard Brownian family.
    Brownian,
    /// Distilled from a solved lattice via the diagonal adapter.
    Spde,
}

/// Fully parsed, defaulted run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub fields: FieldSet,
    pub field_label: String,
    pub grid: GridSpec,
    pub x0: Vec<f64>,
    /// Requested evaluation point in time coordinates (pre-snap).
    pub z: (f64, f64),
    pub trials: u64,
    pub seed: u64,
    pub eps: Vec<f64>,
    pub directions: usize,
    pub pinned: Vec<Vec<f64>>,
    pub depth: usize,
    pub hormander_t: f64,
    pub neighborhood: Option<(f64, f64, usize)>,
    pub moment_p: f64,
    pub strategy: CovarianceStrategy,
    pub alpha1: f64,
    pub alpha2: f64,
    pub rho: f64,
    pub nu: f64,
    pub steps: usize,
    pub horizon: f64,
    pub norris_source: NorrisSource,
    pub beta: f64,
    pub beta_prime: Option<f64>,
    pub bracket_level: usize,
    pub bracket_index: usize,
    pub direction: Option<Vec<f64>>,
    pub resolution: usize,
    pub bandwidth: Option<Vec<f64>>,
    pub box_lo: Option<Vec<f64>>,
    pub box_hi: Option<Vec<f64>>,
    pub dump_endpoints: bool,
    pub dump_sheet: bool,
    pub base: usize,
    pub levels: usize,
    pub out_dir: String,
    pub workers: usize,
    /// Verbatim config text, echoed into every artifact.
    pub raw_text: String,
}

const SECTIONS: &[&str] = &["fields", "grid", "experiment", "output"];

struct Raw {
    entries: BTreeMap<(String, String), (String, usize)>,
    errors: Vec<ConfigError>,
}

impl Raw {
    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn err(&mut self, line: usize, message: impl Into<String>) {
        self.errors.push(ConfigError { line, message: message.into() });
    }

    fn f64(&mut self, section: &str, key: &str, default: f64) -> f64 {
        match self.take(section, key) {
            None => default,
            Some((v, line)) => match v.parse() {
                Ok(x) => x,
                Err(_) => {
                    self.err(line, format!("'{key}' expects a number, got '{v}'"));
                    default
                }
            },
        }
    }

    fn usize(&mut self, section: &str, key: &str, default: usize) -> usize {
        match self.take(section, key) {
            None => default,
            Some((v, line)) => match v.parse() {
                Ok(x) => x,
                Err(_) => {
                    self.err(line, format!("'{key}' expects a non-negative integer, got '{v}'"));
                    default
                }
            },
        }
    }

    fn u64(&mut self, section: &str, key: &str, default: u64) -> u64 {
        match self.take(section, key) {
            None => default,
            Some((v, line)) => match v.parse() {
                Ok(x) => x,
                Err(_) => {
                    self.err(line, format!("'{key}' expects a non-negative integer, got '{v}'"));
                    default
                }
            },
        }
    }

    fn bool(&mut self, section: &str, key: &str, default: bool) -> bool {
        match self.take(section, key) {
            None => default,
            Some((v, line)) => match v.as_str() {
                "true" | "yes" | "1" => true,
                "false" | "no" | "0" => false,
                _ => {
                    self.err(line, format!("'{key}' expects true/false, got '{v}'"));
                    default
                }
            },
        }
    }

    fn vec_f64(&mut self, section: &str, key: &str) -> Option<Vec<f64>> {
        let (v, line) = self.take(section, key)?;
        let mut out = Vec::new();
        for part in v.split(',') {
            match part.trim().parse() {
                Ok(x) => out.push(x),
                Err(_) => {
                    self.err(line, format!("'{key}' expects comma-separated numbers, got '{v}'"));
                    return None;
                }
            }
        }
        Some(out)
    }
}

fn parse_raw(text: &str) -> Raw {
    let mut entries = BTreeMap::new();
    let mut errors = Vec::new();
    let mut section = String::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        if let Some(name) = stripped.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            if SECTIONS.contains(&name) {
                section = name.to_string();
            } else {
                errors.push(ConfigError {
                    line,
                    message: format!(
                        "unknown section '[{name}]' (expected one of: {})",
                        SECTIONS.join(", ")
                    ),
                });
                section = name.to_string(); // swallow its keys without cascading
            }
            continue;
        }
        match stripped.split_once('=') {
            None => errors.push(ConfigError {
                line,
                message: format!("expected 'key = value', got '{stripped}'"),
            }),
            Some((k, v)) => {
                if section.is_empty() {
                    errors.push(ConfigError {
                        line,
                        message: "key outside any [section]".to_string(),
                    });
                    continue;
                }
                let key = (section.clone(), k.trim().to_string());
                match entries.entry(key) {
                    std::collections::btree_map::Entry::Occupied(_) => {
                        errors.push(ConfigError {
                            line,
                            message: format!("duplicate key '{}' in [{}]", k.trim(), section),
                        });
                    }
                    std::collections::btree_map::Entry::Vacant(slot) => {
                        slot.insert((v.trim().to_string(), line));
                    }
                }
            }
        }
    }
    Raw { entries, errors }
}

fn build_fields(raw: &mut Raw) -> Option<(FieldSet, String)> {
    let preset = raw.take("fields", "preset");
    let m = raw.take("fields", "m");
    let m_parsed: Option<usize> = match &m {
        None => None,
        Some((v, line)) => match v.parse() {
            Ok(x) => Some(x),
            Err(_) => {
                let line = *line;
                raw.err(line, format!("'m' expects a positive integer, got '{v}'"));
                None
            }
        },
    };

    let mut custom: Vec<(usize, String, usize)> = Vec::new();
    for l in 0..10usize {
        if let Some((v, line)) = raw.take("fields", &format!("a{l}")) {
            custom.push((l, v, line));
        }
    }

    if let Some((name, line)) = preset {
        if !custom.is_empty() {
            raw.err(line, "preset and custom field expressions cannot be mixed");
            return None;
        }
        match presets::by_name(&name, m_parsed) {
            Ok(fs) => return Some((fs, name)),
            Err(e) => {
                raw.err(line, e.to_string());
                return None;
            }
        }
    }

    if custom.is_empty() {
        // headerless default keeps tiny configs runnable
        return Some((presets::additive(m_parsed.unwrap_or(2)), "additive".into()));
    }

    let m = match m_parsed {
        Some(m) => m,
        None => {
            let line = custom[0].2;
            raw.err(line, "custom fields need 'm' (state dimension)");
            return None;
        }
    };
    let regime = match raw.take("fields", "regime") {
        None => Regime::Smooth,
        Some((v, line)) => match v.as_str() {
            "elliptic" => Regime::Elliptic,
            "smooth" => Regime::Smooth,
            "factorable" => Regime::Factorable,
            "regular-holder" => Regime::RegularHolder,
            "irregular-holder" => Regime::IrregularHolder,
            _ => {
                raw.err(line, format!("unknown regime '{v}'"));
                Regime::Smooth
            }
        },
    };
    let bounds = DeclaredBounds {
        k_sup: raw.f64("fields", "k", 1.0),
        gamma: raw.f64("fields", "gamma", 0.5),
        k_gamma: raw.f64("fields", "k-gamma", 1.0),
        beta: raw.take("fields", "beta").and_then(|(v, line)| match v.parse() {
            Ok(x) => Some(x),
            Err(_) => {
                raw.err(line, format!("'beta' expects a number, got '{v}'"));
                None
            }
        }),
        k_beta: raw.take("fields", "k-beta").and_then(|(v, line)| match v.parse() {
            Ok(x) => Some(x),
            Err(_) => {
                raw.err(line, format!("'k-beta' expects a number, got '{v}'"));
                None
            }
        }),
    };

    let max_l = custom.iter().map(|(l, _, _)| *l).max().unwrap();
    let mut drift = FieldExpr::zero(m);
    let mut diffusion: Vec<FieldExpr> = (1..=max_l.max(1)).map(|_| FieldExpr::zero(m)).collect();
    let mut ok = true;
    for (l, text, line) in custom {
        match parse_field(&text) {
            Err(e) => {
                raw.err(line, format!("a{l}: {e}"));
                ok = false;
            }
            Ok(expr) => {
                if expr.dim() != m {
                    raw.err(line, format!("a{l} has {} components, expected {m}", expr.dim()));
                    ok = false;
                } else if l == 0 {
                    drift = expr;
                } else {
                    diffusion[l - 1] = expr;
                }
            }
        }
    }
    if !ok {
        return None;
    }
    match FieldSet::new(m, drift, diffusion, regime, bounds) {
        Ok(fs) => Some((fs, "custom".into())),
        Err(e) => {
            raw.err(0, e.to_string());
            None
        }
    }
}

/// Parses and validates a config text; errors carry line numbers.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    let mut raw = parse_raw(text);

    let kind = match raw.take("experiment", "kind") {
        None => {
            raw.err(0, "missing required key 'kind' in [experiment]");
            None
        }
        Some((v, line)) => match ExperimentKind::parse(&v) {
            Some(k) => Some(k),
            None => {
                raw.err(line, format!(
                    "unknown experiment kind '{v}' (expected simulate, hormander, malliavin, probe, norris, density or converge)"
                ));
                None
            }
        },
    };

    let fields = build_fields(&mut raw);

    let s_max = raw.f64("grid", "s-max", 1.0);
    let t_max = raw.f64("grid", "t-max", 1.0);
    let n_s = raw.usize("grid", "n-s", 32);
    let n_t = raw.usize("grid", "n-t", 32);
    let grid = match GridSpec::new(s_max, t_max, n_s, n_t) {
        Ok(g) => Some(g),
        Err(e) => {
            raw.err(0, e.to_string());
            None
        }
    };

    let x0 = raw.vec_f64("experiment", "x0");
    let z = raw.vec_f64("experiment", "z");
    let trials = raw.u64("experiment", "trials", 1000);
    let seed = raw.u64("experiment", "seed", 0);
    let eps = raw
        .vec_f64("experiment", "eps")
        .unwrap_or_else(|| vec![0.2, 0.1, 0.05]);
    let directions = raw.usize("experiment", "directions", 8);
    let pinned: Vec<Vec<f64>> = match raw.take("experiment", "pinned") {
        None => Vec::new(),
        Some((v, line)) => {
            let mut out = Vec::new();
            for part in v.split(';') {
                let mut vec = Vec::new();
                let mut bad = false;
                for c in part.trim().split(',') {
                    match c.trim().parse() {
                        Ok(x) => vec.push(x),
                        Err(_) => bad = true,
                    }
                }
                if bad {
                    raw.err(line, format!("'pinned' expects ';'-separated vectors, got '{v}'"));
                } else {
                    out.push(vec);
                }
            }
            out
        }
    };

    let depth = raw.usize("experiment", "depth", 2);
    let hormander_t = raw.f64("experiment", "t", t_max);
    let s0 = raw.take("experiment", "s0");
    let radius = raw.take("experiment", "radius");
    let samples = raw.usize("experiment", "samples", 512);
    let neighborhood = match (s0, radius) {
        (Some((s0v, l0)), Some((rv, l1))) => match (s0v.parse(), rv.parse()) {
            (Ok(a), Ok(b)) => Some((a, b, samples)),
            _ => {
                raw.err(l0.max(l1), "'s0' and 'radius' expect numbers");
                None
            }
        },
        (Some((_, line)), None) | (None, Some((_, line))) => {
            raw.err(line, "'s0' and 'radius' must be given together");
            None
        }
        (None, None) => None,
    };

    let moment_p = raw.f64("experiment", "moment-p", 2.0);
    let strategy = match raw.take("experiment", "strategy") {
        None => CovarianceStrategy::Auto,
        Some((v, line)) => {
            if v == "auto" {
                CovarianceStrategy::Auto
            } else if v == "exact" {
                CovarianceStrategy::Exact
            } else if let Some(n) = v.strip_prefix("subsample:") {
                match n.parse() {
                    Ok(max_cells) => CovarianceStrategy::Subsample { max_cells },
                    Err(_) => {
                        raw.err(line, format!("bad subsample cell count in '{v}'"));
                        CovarianceStrategy::Auto
                    }
                }
            } else {
                raw.err(line, format!("unknown strategy '{v}' (auto, exact, subsample:N)"));
                CovarianceStrategy::Auto
            }
        }
    };

    let alpha1 = raw.f64("experiment", "alpha1", 1.0);
    let alpha2 = raw.f64("experiment", "alpha2", 1.0);
    let rho = raw.f64("experiment", "rho", 16.0);
    let nu = raw.f64("experiment", "nu", 6.5);
    let steps = raw.usize("experiment", "steps", 256);
    let horizon = raw.f64("experiment", "horizon", 1.0);
    let norris_source = match raw.take("experiment", "source") {
        None => NorrisSource::Brownian,
        Some((v, line)) => match v.as_str() {
            "brownian" => NorrisSource::Brownian,
            "spde" => NorrisSource::Spde,
            _ => {
                raw.err(line, format!("unknown norris source '{v}' (brownian, spde)"));
                NorrisSource::Brownian
            }
        },
    };
    let beta = raw.f64("experiment", "beta", 0.75);
    let beta_prime = match raw.take("experiment", "beta-prime") {
        None => Some(0.5),
        Some((v, line)) => match v.parse::<f64>() {
            Ok(x) if x > 0.0 => Some(x),
            Ok(x) => {
                raw.err(line, format!("'beta-prime' must be positive, got {x}"));
                None
            }
            Err(_) => {
                raw.err(line, format!("'beta-prime' expects a number, got '{v}'"));
                None
            }
        },
    };
    let bracket_level = raw.usize("experiment", "bracket-level", 0);
    let bracket_index = raw.usize("experiment", "bracket-index", 0);
    let direction = raw.vec_f64("experiment", "direction");

    let resolution = raw.usize("experiment", "resolution", 64);
    let bandwidth = match raw.take("experiment", "bandwidth") {
        None => None,
        Some((v, line)) => {
            if v == "scott" {
                None
            } else {
                let mut out = Vec::new();
                let mut bad = false;
                for part in v.split(',') {
                    match part.trim().parse() {
                        Ok(x) => out.push(x),
                        Err(_) => bad = true,
                    }
                }
                if bad {
                    raw.err(line, format!("'bandwidth' expects 'scott' or numbers, got '{v}'"));
                    None
                } else {
                    Some(out)
                }
            }
        }
    };
    let box_lo = raw.vec_f64("experiment", "box-lo");
    let box_hi = raw.vec_f64("experiment", "box-hi");
    let dump_endpoints = raw.bool("experiment", "dump-endpoints", false);
    let dump_sheet = raw.bool("experiment", "dump-sheet", false);
    let base = raw.usize("experiment", "base", 16);
    let levels = raw.usize("experiment", "levels", 4);

    let out_dir = raw
        .take("output", "dir")
        .map(|(v, _)| v)
        .unwrap_or_else(|| "out".to_string());
    let workers = raw.usize("output", "workers", 0);

    // anything left over is an unknown key
    let leftovers: Vec<ConfigError> = raw
        .entries
        .iter()
        .map(|((section, key), (_, line))| ConfigError {
            line: *line,
            message: format!("unknown key '{key}' in [{section}]"),
        })
        .collect();
    raw.errors.extend(leftovers);

    // structural cross-checks
    if eps.is_empty() || eps.iter().any(|&e| !(0.0 < e && e < 1.0)) {
        raw.err(0, "'eps' values must lie strictly inside (0,1)".to_string());
    }
    if let (Some(fields), Some(x0)) = (&fields, &x0) {
        if x0.len() != fields.0.m() {
            raw.err(0, format!(
                "x0 has {} components but the field set has dimension {}",
                x0.len(),
                fields.0.m()
            ));
        }
    }
    if let Some(z) = &z {
        if z.len() != 2 {
            raw.err(0, "'z' expects exactly two coordinates".to_string());
        }
    }

    if !raw.errors.is_empty() {
        raw.errors.sort_by_key(|e| e.line);
        return Err(raw.errors);
    }
    let (fields, field_label) = fields.expect("validated above");
    let grid = grid.expect("validated above");
    let x0 = x0.unwrap_or_else(|| vec![0.0; fields.m()]);
    let z = z
        .map(|v| (v[0], v[1]))
        .unwrap_or((grid.s_max(), grid.t_max()));

    Ok(RunConfig {
        kind: kind.expect("validated above"),
        fields,
        field_label,
        grid,
        x0,
        z,
        trials,
        seed,
        eps,
        directions,
        pinned,
        depth,
        hormander_t,
        neighborhood,
        moment_p,
        strategy,
        alpha1,
        alpha2,
        rho,
        nu,
        steps,
        horizon,
        norris_source,
        beta,
        beta_prime,
        bracket_level,
        bracket_index,
        direction,
        resolution,
        bandwidth,
        box_lo,
        box_hi,
        dump_endpoints,
        dump_sheet,
        base,
        levels,
        out_dir,
        workers,
        raw_text: text.to_string(),
    })
}

/// Non-blocking advisories: exponent bounds and cost warnings.
pub fn config_warnings(cfg: &RunConfig) -> Vec<String> {
    let mut warnings = Vec::new();
    if cfg.kind == ExperimentKind::Norris {
        if cfg.beta > 0.5 && cfg.beta < 1.0 {
            let nu_min = min_nu_regular(cfg.beta);
            if cfg.nu <= nu_min {
                warnings.push(format!(
                    "ν = {} does not exceed 3/(2β−1) = {nu_min} for β = {}",
                    cfg.nu, cfg.beta
                ));
            }
            let rho_min = min_rho_regular(cfg.nu.max(nu_min));
            if cfg.rho <= rho_min {
                warnings.push(format!(
                    "ρ = {} does not exceed the 3+2ν bound {rho_min} for minimal admissible ν = {}",
                    cfg.rho,
                    cfg.nu.max(nu_min)
                ));
            }
        }
        if let Some(bp) = cfg.beta_prime {
            if cfg.beta <= 0.5 {
                let rho_min = min_rho_irregular(bp);
                if cfg.rho <= rho_min {
                    warnings.push(format!(
                        "ρ = {} does not exceed (11/2+4/β')(1+1/β') = {rho_min} for β' = {bp}",
                        cfg.rho
                    ));
                }
            }
        }
    }
    if cfg.kind == ExperimentKind::Probe && cfg.grid.cell_count() > 16_384 {
        warnings.push(format!(
            "probe on {} cells is quadratic per trial; consider a coarser grid or subsampling",
            cfg.grid.cell_count()
        ));
    }
    warnings
}
