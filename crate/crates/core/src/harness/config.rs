//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every other line is
//! `key = value`; keys are unique. The schema is [`KEYS`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::VerdictThresholds;
use crate::error::{InlsError, Result};
use crate::evolve::{Caps, DtControl, EvolveConfig, Sponge};
use crate::field::GridSpec;
use crate::model::{ModelParams, Number, Regime, Sign};

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("N", "spatial dimension, 1..=5"),
    ("b", "inhomogeneity exponent (integer, p/q or decimal)"),
    ("mu", "focusing | defocusing"),
    ("alpha", "nonlinearity override; makes the run exploratory"),
    ("grid.kind", "cartesian | radial (default cartesian)"),
    ("grid.points", "points per axis, a power of two"),
    ("grid.L", "half width of the box (radius for radial grids)"),
    ("grid.offset", "true | false (default true)"),
    ("grid.epsilon", "regularization of |x|^-b (default 0)"),
    ("data.family", "gaussian | sampled-W | translated-gaussian | ring"),
    ("data.amplitude", "amplitude A (default 1)"),
    ("data.width", "Gaussian width (default 1)"),
    ("data.x0", "center offset, comma separated (default origin)"),
    (
        "data.random_offset",
        "radius of a seeded random shift added to x0 (default 0)",
    ),
    ("data.ring_radius", "ring radius (default 3)"),
    ("data.cutoff_inner", "sampled-W cutoff start (default 0.4 L)"),
    ("data.cutoff_outer", "sampled-W cutoff end (default 0.8 L)"),
    ("seed", "seed for randomized placement (default 0)"),
    ("evolve.dt", "time step"),
    ("evolve.t_end", "end time"),
    ("evolve.checkpoint_stride", "steps between checkpoints (default 1)"),
    ("evolve.sponge_inner", "sponge start as a fraction of L (default 0.7)"),
    ("evolve.sponge_strength", "sponge damping rate; 0 disables (default 0)"),
    (
        "evolve.gamma",
        "dt-halving trigger on kinetic growth per step; absent disables",
    ),
    (
        "evolve.cap_kinetic_ratio",
        "blow-up cap on kinetic/kinetic(0) (default 1e3)",
    ),
    ("evolve.cap_sup", "blow-up cap on sup|u| (default 1e8)"),
    ("evolve.dealias", "true | false (default false)"),
    (
        "diag.virial_R",
        "radius of the quadratic-plateau weight for M_a; absent disables",
    ),
    ("diag.bump_R", "radius of the bump weight for V_R; absent disables"),
    (
        "classify.kinetic_ratio",
        "scattering: max/min kinetic bound (default 10)",
    ),
    (
        "classify.snorm_decay",
        "scattering: snorm increment decay factor (default 10)",
    ),
    ("classify.proxy_tail", "scattering: proxy tail fraction (default 0.05)"),
    ("classify.growup_factor", "grow-up: kinetic growth factor (default 4)"),
    (
        "classify.boundary_tol",
        "relative width of the threshold boundary (default 1e-2)",
    ),
    ("classify.min_samples", "checkpoints needed for a verdict (default 4)"),
    ("output.dir", "directory for records and series (default out)"),
    (
        "output.snapshots",
        "write the final field as a snapshot (default false)",
    ),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Gaussian,
    #[serde(rename = "sampled-W")]
    SampledW,
    TranslatedGaussian,
    Ring,
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gaussian" => Ok(Family::Gaussian),
            "sampled-W" => Ok(Family::SampledW),
            "translated-gaussian" => Ok(Family::TranslatedGaussian),
            "ring" => Ok(Family::Ring),
            _ => Err(format!("unknown family {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub family: Family,
    pub amplitude: f64,
    pub width: f64,
    pub x0: [f64; 3],
    pub random_offset: f64,
    pub ring_radius: f64,
    pub cutoff: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dimension: u32,
    pub b: Number,
    pub sign: Sign,
    pub alpha_override: Option<Number>,
    pub grid: GridSpec,
    pub epsilon: f64,
    pub data: DataSpec,
    pub seed: u64,
    pub evolve: EvolveConfig,
    pub virial_radius: Option<f64>,
    pub bump_radius: Option<f64>,
    pub thresholds: VerdictThresholds,
    pub output_dir: PathBuf,
    pub snapshots: bool,
    /// The explicit entries as written, keyed by name.
    pub entries: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn params(&self) -> Result<ModelParams> {
        match self.alpha_override {
            Some(a) => ModelParams::exploratory(self.dimension, self.b, a, self.sign),
            None => ModelParams::critical(self.dimension, self.b, self.sign),
        }
    }

    /// Sorted `key = value` lines of the explicit entries.
    pub fn canonical(&self) -> String {
        canonical_text(&self.entries)
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Copy with one entry replaced, re-validated.
    pub fn with_entry(&self, key: &str, value: &str) -> Result<Self> {
        let mut entries = self.entries.clone();
        entries.insert(key.to_string(), value.to_string());
        from_entries(entries)
    }
}

pub fn canonical_text(entries: &BTreeMap<String, String>) -> String {
    entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut errs = Vec::new();
    let mut entries = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            errs.push(format!("line {}: expected `key = value`", no + 1));
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.iter().any(|(name, _)| *name == k) {
            errs.push(format!("line {}: unknown key `{k}`", no + 1));
            continue;
        }
        if entries.insert(k.to_string(), v.to_string()).is_some() {
            errs.push(format!("line {}: duplicate key `{k}`", no + 1));
        }
    }
    if !errs.is_empty() {
        return Err(InlsError::Config(errs));
    }
    from_entries(entries)
}

struct Reader<'a> {
    entries: &'a BTreeMap<String, String>,
    errs: Vec<String>,
}

impl Reader<'_> {
    fn get<T: FromStr>(&mut self, key: &str) -> Option<T> {
        let raw = self.entries.get(key)?;
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.errs.push(format!("`{key}`: cannot parse {raw:?}"));
                None
            }
        }
    }

    fn or<T: FromStr>(&mut self, key: &str, default: T) -> T {
        self.get(key).unwrap_or(default)
    }

    fn required<T: FromStr>(&mut self, key: &str) -> Option<T> {
        if !self.entries.contains_key(key) {
            self.errs.push(format!("missing required key `{key}`"));
            return None;
        }
        self.get(key)
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.errs.push(msg());
        }
    }
}

fn parse_sign(s: &str) -> Option<Sign> {
    match s {
        "focusing" | "+1" | "1" => Some(Sign::Focusing),
        "defocusing" | "-1" => Some(Sign::Defocusing),
        _ => None,
    }
}

fn parse_vector(s: &str) -> Option<[f64; 3]> {
    let parts: Vec<f64> = s.split(',').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
    if parts.is_empty() || parts.len() > 3 {
        return None;
    }
    let mut out = [0.0; 3];
    out[..parts.len()].copy_from_slice(&parts);
    Some(out)
}

fn from_entries(entries: BTreeMap<String, String>) -> Result<ExperimentConfig> {
    let mut r = Reader {
        entries: &entries,
        errs: Vec::new(),
    };
    let dimension: Option<u32> = r.required("N");
    let b: Option<Number> = r.required("b");
    let sign = match entries.get("mu") {
        None => {
            r.errs.push("missing required key `mu`".into());
            None
        }
        Some(s) => {
            let v = parse_sign(s);
            r.check(v.is_some(), || {
                format!("`mu`: expected focusing or defocusing, got {s:?}")
            });
            v
        }
    };
    let alpha_override: Option<Number> = r.get("alpha");

    let kind = entries.get("grid.kind").map(String::as_str).unwrap_or("cartesian");
    r.check(kind == "cartesian" || kind == "radial", || {
        format!("`grid.kind`: expected cartesian or radial, got {kind:?}")
    });
    let points: Option<usize> = r.required("grid.points");
    let half_width: Option<f64> = r.required("grid.L");
    let offset = r.or("grid.offset", true);
    let epsilon = r.or("grid.epsilon", 0.0);

    let family: Option<Family> = r.required("data.family");
    let amplitude: f64 = r.or("data.amplitude", 1.0);
    let width = r.or("data.width", 1.0);
    let x0 = match entries.get("data.x0") {
        None => [0.0; 3],
        Some(s) => parse_vector(s).unwrap_or_else(|| {
            r.errs.push(format!(
                "`data.x0`: expected up to 3 comma-separated numbers, got {s:?}"
            ));
            [0.0; 3]
        }),
    };
    let random_offset = r.or("data.random_offset", 0.0);
    let ring_radius = r.or("data.ring_radius", 3.0);
    let l = half_width.unwrap_or(1.0);
    let cutoff = (r.or("data.cutoff_inner", 0.4 * l), r.or("data.cutoff_outer", 0.8 * l));
    let seed = r.or("seed", 0u64);

    let dt: Option<f64> = r.required("evolve.dt");
    let t_end: Option<f64> = r.required("evolve.t_end");
    let mut evolve = EvolveConfig::new(dt.unwrap_or(1.0), t_end.unwrap_or(0.0));
    evolve.checkpoint_stride = r.or("evolve.checkpoint_stride", 1usize);
    let strength = r.or("evolve.sponge_strength", 0.0);
    let inner = r.or("evolve.sponge_inner", 0.7);
    if strength != 0.0 || entries.contains_key("evolve.sponge_inner") {
        evolve.sponge = Some(Sponge {
            inner_fraction: inner,
            strength,
        });
    }
    if let Some(gamma) = r.get::<f64>("evolve.gamma") {
        evolve.dt_control = DtControl::Halve { gamma };
    }
    evolve.caps = Caps {
        kinetic_ratio: r.or("evolve.cap_kinetic_ratio", Caps::default().kinetic_ratio),
        sup_abs: r.or("evolve.cap_sup", Caps::default().sup_abs),
    };
    evolve.dealias = r.or("evolve.dealias", false);

    let virial_radius: Option<f64> = r.get("diag.virial_R");
    let bump_radius: Option<f64> = r.get("diag.bump_R");

    let d = VerdictThresholds::default();
    let thresholds = VerdictThresholds {
        kinetic_ratio: r.or("classify.kinetic_ratio", d.kinetic_ratio),
        snorm_decay: r.or("classify.snorm_decay", d.snorm_decay),
        proxy_tail: r.or("classify.proxy_tail", d.proxy_tail),
        growup_factor: r.or("classify.growup_factor", d.growup_factor),
        boundary_tol: r.or("classify.boundary_tol", d.boundary_tol),
        min_samples: r.or("classify.min_samples", d.min_samples),
    };
    let output_dir = PathBuf::from(entries.get("output.dir").map(String::as_str).unwrap_or("out"));
    let snapshots = r.or("output.snapshots", false);

    // cross-field checks against the module contracts
    let mut errs = r.errs;
    let mut check = |ok: bool, msg: String| {
        if !ok {
            errs.push(msg)
        }
    };
    if let (Some(n), Some(b), Some(sign)) = (dimension, b, sign) {
        let params = match alpha_override {
            Some(a) => ModelParams::exploratory(n, b, a, sign),
            None => ModelParams::critical(n, b, sign).and_then(|p| {
                let regime = if sign == Sign::Focusing {
                    Regime::BlowUp
                } else {
                    Regime::Scattering
                };
                if b.value() > 0.0 {
                    p.validate(regime)?;
                }
                Ok(p)
            }),
        };
        if let Err(e) = params {
            check(false, e.to_string());
        }
        if kind == "cartesian" {
            check(
                (1..=3).contains(&n),
                format!("grid: Cartesian grids support N = 1..=3, got N = {n}"),
            );
        } else {
            check(n >= 2, format!("grid: radial grids need N >= 2, got N = {n}"));
        }
        if family == Some(Family::SampledW) {
            check(n >= 3, format!("data: sampled-W needs N >= 3, got N = {n}"));
        }
        let singular = b.value() > 0.0 && epsilon == 0.0;
        check(
            !(singular && !offset),
            "grid: an unregularized |x|^-b needs grid.offset = true".to_string(),
        );
    }
    check(epsilon >= 0.0, format!("grid: epsilon = {epsilon} must be nonnegative"));
    if let Some(p) = points {
        check(
            p >= 2 && p.is_power_of_two(),
            format!("grid: points = {p} must be a power of two >= 2"),
        );
    }
    if let Some(l) = half_width {
        check(l > 0.0 && l.is_finite(), format!("grid: L = {l} must be positive"));
    }
    check(width > 0.0, format!("data: width = {width} must be positive"));
    check(
        amplitude.is_finite(),
        format!("data: amplitude = {amplitude} must be finite"),
    );
    check(
        random_offset >= 0.0,
        format!("data: random_offset = {random_offset} must be nonnegative"),
    );
    check(
        ring_radius > 0.0,
        format!("data: ring_radius = {ring_radius} must be positive"),
    );
    check(
        0.0 < cutoff.0 && cutoff.0 < cutoff.1,
        format!("data: cutoff radii {} < {} required", cutoff.0, cutoff.1),
    );
    if dt.is_some() && t_end.is_some() {
        if let Err(InlsError::Config(e)) = evolve.validate() {
            for m in e {
                check(false, m);
            }
        }
    }
    for (name, r) in [("diag.virial_R", virial_radius), ("diag.bump_R", bump_radius)] {
        if let Some(r) = r {
            check(r > 0.0, format!("diagnostics: {name} = {r} must be positive"));
        }
    }
    check(
        thresholds.kinetic_ratio > 1.0,
        "classify: kinetic_ratio must exceed 1".into(),
    );
    check(
        thresholds.snorm_decay > 1.0,
        "classify: snorm_decay must exceed 1".into(),
    );
    check(
        thresholds.proxy_tail > 0.0,
        "classify: proxy_tail must be positive".into(),
    );
    check(
        thresholds.growup_factor > 1.0,
        "classify: growup_factor must exceed 1".into(),
    );
    check(
        thresholds.boundary_tol >= 0.0,
        "classify: boundary_tol must be nonnegative".into(),
    );
    if !errs.is_empty() {
        return Err(InlsError::Config(errs));
    }

    let n = dimension.expect("checked");
    let points = points.expect("checked");
    let l = half_width.expect("checked");
    let grid = if kind == "radial" {
        GridSpec::radial(n, points, l)
    } else {
        GridSpec::cartesian(n as usize, points, l).with_offset(offset)
    };
    Ok(ExperimentConfig {
        dimension: n,
        b: b.expect("checked"),
        sign: sign.expect("checked"),
        alpha_override,
        grid,
        epsilon,
        data: DataSpec {
            family: family.expect("checked"),
            amplitude,
            width,
            x0,
            random_offset,
            ring_radius,
            cutoff,
        },
        seed,
        evolve,
        virial_radius,
        bump_radius,
        thresholds,
        output_dir,
        snapshots,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "N = 3\nb = 1\nmu = focusing\ngrid.points = 16\ngrid.L = 8\n\
                           data.family = gaussian\nevolve.dt = 0.01\nevolve.t_end = 0.1\n";

    #[test]
    fn minimal_config_reserializes() {
        let cfg = parse_config(MINIMAL).unwrap();
        let mut a: Vec<&str> = MINIMAL.lines().collect();
        let canon = cfg.canonical();
        let mut b: Vec<&str> = canon.lines().collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(cfg.hash().len(), 64);
        assert_eq!(parse_config(&canon).unwrap().hash(), cfg.hash());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config(&format!("{MINIMAL}gridd = 3\n")).unwrap_err().to_string();
        assert!(err.contains("unknown key `gridd`"), "{err}");
    }

    #[test]
    fn dimension_six_cites_model() {
        let err = parse_config(&MINIMAL.replace("N = 3", "N = 6"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("model:"), "{err}");
    }

    #[test]
    fn every_violation_is_listed() {
        let text = MINIMAL
            .replace("grid.points = 16", "grid.points = 15")
            .replace("evolve.dt = 0.01", "evolve.dt = -1");
        match parse_config(&text) {
            Err(InlsError::Config(errs)) => assert!(errs.len() >= 2, "{errs:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn every_key_is_parsed() {
        let full = "N = 3\nb = 1\nmu = defocusing\nalpha = 2\ngrid.kind = cartesian\ngrid.points = 16\n\
                    grid.L = 8\ngrid.offset = true\ngrid.epsilon = 0\ndata.family = translated-gaussian\n\
                    data.amplitude = 0.5\ndata.width = 1.5\ndata.x0 = 1,0,0\ndata.random_offset = 0.5\n\
                    data.ring_radius = 2\ndata.cutoff_inner = 2\ndata.cutoff_outer = 3\nseed = 7\n\
                    evolve.dt = 0.01\nevolve.t_end = 0.1\nevolve.checkpoint_stride = 2\n\
                    evolve.sponge_inner = 0.8\nevolve.sponge_strength = 2\nevolve.gamma = 1.5\n\
                    evolve.cap_kinetic_ratio = 10\nevolve.cap_sup = 100\nevolve.dealias = true\n\
                    diag.virial_R = 3\ndiag.bump_R = 0.5\nclassify.kinetic_ratio = 5\nclassify.snorm_decay = 20\n\
                    classify.proxy_tail = 0.1\nclassify.growup_factor = 3\nclassify.boundary_tol = 0.001\n\
                    classify.min_samples = 5\noutput.dir = /tmp/x\noutput.snapshots = true\n";
        let cfg = parse_config(full).unwrap();
        assert_eq!(cfg.entries.len(), KEYS.len());
        assert_eq!(cfg.data.x0, [1.0, 0.0, 0.0]);
        assert_eq!(cfg.evolve.dt_control, DtControl::Halve { gamma: 1.5 });
        assert_eq!(cfg.thresholds.min_samples, 5);
    }
}
