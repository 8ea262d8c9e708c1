//! Command-line front end: one subcommand per operation, a `key = value`
//! config file, and deterministic JSON/CSV artifacts.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bergman::{self, KernelModel, MonomialSet, QuadratureSpec};
use crate::domains::{Automorphism, ModelDomain};
use crate::error::{Error, Result};
use crate::func::{Func, Map};
use crate::holo_algebra::{self, Character, HomAction, RecoveryOptions};
use crate::lipschitz::{self, CompactExhaustion, PairSampler};
use crate::point::{c64, parse_point, Point, C64};
use crate::series::TruncatedLaurent;
use crate::{limits, scaling};

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "BERS_OUT_DIR";

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub tol: f64,
    /// Largest order accepted when reading series files.
    pub series_order: usize,
    /// `|j| ≤ N` for the annulus kernel series.
    pub kernel_truncation: usize,
    pub quad_graded_panels: usize,
    pub quad_uniform_panels: usize,
    pub quad_points_per_panel: usize,
    pub quad_grading: f64,
    pub quad_angular: usize,
    pub pairs: usize,
    pub refine_steps: usize,
    pub blowup_factor: f64,
    pub grid_size: usize,
    pub exhaustion_candidates: usize,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        RunConfig {
            seed: 1,
            tol: holo_algebra::DEFAULT_TOL,
            series_order: 256,
            kernel_truncation: bergman::ANNULUS_TRUNCATION,
            quad_graded_panels: q.graded_panels,
            quad_uniform_panels: q.uniform_panels,
            quad_points_per_panel: q.points_per_panel,
            quad_grading: q.grading,
            quad_angular: q.angular,
            pairs: lipschitz::DEFAULT_PAIRS,
            refine_steps: lipschitz::DEFAULT_REFINE_STEPS,
            blowup_factor: lipschitz::DEFAULT_BLOWUP_FACTOR,
            grid_size: 200,
            exhaustion_candidates: 400,
            out_dir: PathBuf::from("bers-out"),
        }
    }
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            c.set(k.trim(), v.trim()).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn p<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse {v:?}"))
        }
        match key {
            "seed" => self.seed = p(value)?,
            "tol" => self.tol = p(value)?,
            "series_order" => self.series_order = p(value)?,
            "kernel_truncation" => self.kernel_truncation = p(value)?,
            "quad_graded_panels" => self.quad_graded_panels = p(value)?,
            "quad_uniform_panels" => self.quad_uniform_panels = p(value)?,
            "quad_points_per_panel" => self.quad_points_per_panel = p(value)?,
            "quad_grading" => self.quad_grading = p(value)?,
            "quad_angular" => self.quad_angular = p(value)?,
            "pairs" => self.pairs = p(value)?,
            "refine_steps" => self.refine_steps = p(value)?,
            "blowup_factor" => self.blowup_factor = p(value)?,
            "grid_size" => self.grid_size = p(value)?,
            "exhaustion_candidates" => self.exhaustion_candidates = p(value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.blowup_factor > 1.0) {
            return Err(Error::Config("tol must be > 0 and blowup_factor > 1".into()));
        }
        if self.pairs == 0 || self.grid_size == 0 || self.exhaustion_candidates == 0 {
            return Err(Error::Config("pairs, grid_size and exhaustion_candidates must be positive".into()));
        }
        self.quadrature().validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            graded_panels: self.quad_graded_panels,
            uniform_panels: self.quad_uniform_panels,
            points_per_panel: self.quad_points_per_panel,
            grading: self.quad_grading,
            angular: self.quad_angular,
        }
    }

    fn sampler(&self, d: ModelDomain) -> PairSampler {
        PairSampler::new(d, self.pairs, self.seed).with_refinement(self.refine_steps)
    }
}

#[derive(Parser, Debug)]
#[command(name = "bers", version, about = "Holomorphic function algebras, automorphisms and Bergman geometry of model domains")]
pub struct Cli {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the environment and the config file).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Closed,
    Numeric,
}

#[derive(Args, Debug, Serialize)]
pub struct KernelArgs {
    /// disk | annulus:R | ball | bidisc | ellipsoid:M | siegel
    #[arg(long)]
    pub domain: String,
    #[arg(long, value_enum, default_value = "closed")]
    pub mode: Mode,
    /// Total degree of the monomial basis in numeric mode.
    #[arg(long, default_value_t = 12)]
    pub degree: usize,
    /// Box basis `z1^a z2^b`, `a ≤ a_max`, `b ≤ b_max` (numeric mode, two variables).
    #[arg(long, requires = "b_max")]
    pub a_max: Option<usize>,
    #[arg(long, requires = "a_max")]
    pub b_max: Option<usize>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Recover h from the composition homomorphism f ↦ f ∘ h.
    BersRecover {
        #[arg(long)]
        domain: String,
        /// Automorphism as JSON (inline or file).
        #[arg(long)]
        aut: String,
    },
    /// Locate the point of a point-evaluation character.
    Character {
        #[arg(long)]
        domain: String,
        /// `re,im` or `re,im;re,im`.
        #[arg(long)]
        point: String,
    },
    /// Classify the image of the identity under an algebra automorphism of an annulus.
    ClassifyAnnulus {
        #[arg(long)]
        r: f64,
        /// JSON `{"terms": [[j, re, im], ...], "tail_bound": b}` (inline or file).
        #[arg(long)]
        series: String,
    },
    /// Sampled Lipschitz norm of a coordinate composed with an automorphism.
    Lipschitz {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        aut: Option<String>,
        #[arg(long, default_value_t = 0)]
        coordinate: usize,
    },
    /// Noncompact / equicontinuous classification of `z1 ∘ φ_j`.
    Family {
        #[arg(long)]
        domain: String,
        /// JSON array of automorphisms (inline or file).
        #[arg(long)]
        sequence: String,
    },
    /// Evaluate the Bergman kernel.
    Kernel {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        z: String,
        #[arg(long)]
        zeta: String,
    },
    /// Bergman metric and holomorphic sectional curvature.
    Curvature {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        z: String,
        #[arg(long)]
        v: String,
    },
    /// Residual of the kernel transformation law under an automorphism.
    TransformLaw {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        aut: String,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
    },
    /// Power-law exponent of the diagonal kernel toward a boundary point.
    Blowup {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        x: String,
        /// Comma-separated, strictly decreasing.
        #[arg(long)]
        deltas: String,
    },
    /// Curvature profile toward a boundary point.
    Klembeck {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        x: String,
        #[arg(long)]
        v: String,
        #[arg(long)]
        deltas: String,
    },
    /// Rescaled boundary defects toward the Siegel model.
    Scale {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        deltas: String,
    },
    /// Cayley map from the ball to the Siegel domain, or its inverse.
    Cayley {
        #[arg(long)]
        z: String,
        #[arg(long)]
        inverse: bool,
    },
    /// Normal-limit classification of an automorphism sequence.
    Limit {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        sequence: String,
    },
    /// Composed-sequence check for a self-map f and an automorphism sequence.
    Prop52 {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        sequence: String,
        /// `identity`, `square` (planar z²) or an automorphism as JSON.
        #[arg(long, default_value = "identity")]
        f: String,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::BersRecover { .. } => "bers-recover",
            Command::Character { .. } => "character",
            Command::ClassifyAnnulus { .. } => "classify-annulus",
            Command::Lipschitz { .. } => "lipschitz",
            Command::Family { .. } => "family",
            Command::Kernel { .. } => "kernel",
            Command::Curvature { .. } => "curvature",
            Command::TransformLaw { .. } => "transform-law",
            Command::Blowup { .. } => "blowup",
            Command::Klembeck { .. } => "klembeck",
            Command::Scale { .. } => "scale",
            Command::Cayley { .. } => "cayley",
            Command::Limit { .. } => "limit",
            Command::Prop52 { .. } => "prop52",
        }
    }
}

/// `disk`, `annulus:R`, `ball`, `bidisc`, `ellipsoid:M`, `siegel`.
pub fn parse_domain(s: &str) -> Result<ModelDomain> {
    let (kind, arg) = match s.split_once(':') {
        Some((k, a)) => (k.trim(), Some(a.trim())),
        None => (s.trim(), None),
    };
    let bad = || Error::Usage(format!("invalid domain descriptor {s:?}"));
    match (kind, arg) {
        ("disk", None) => Ok(ModelDomain::Disk),
        ("ball", None) => Ok(ModelDomain::Ball),
        ("bidisc", None) => Ok(ModelDomain::Bidisc),
        ("siegel", None) => Ok(ModelDomain::Siegel),
        ("annulus", Some(r)) => ModelDomain::annulus(r.parse().map_err(|_| bad())?),
        ("ellipsoid", Some(m)) => ModelDomain::ellipsoid(m.parse().map_err(|_| bad())?),
        _ => Err(bad()),
    }
}

fn parse_deltas(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Usage(format!("invalid delta {t:?}"))))
        .collect()
}

/// Inline JSON when the argument starts with `[` or `{`, otherwise a file path.
fn json_arg<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T> {
    let t = s.trim_start();
    let text = if t.starts_with('[') || t.starts_with('{') { s.to_string() } else { fs::read_to_string(s)? };
    serde_json::from_str(&text).map_err(|e| Error::Usage(format!("invalid JSON argument: {e}")))
}

fn aut_arg(s: &str, d: ModelDomain) -> Result<Automorphism> {
    let f: Automorphism = json_arg::<Automorphism>(s)?.validated()?;
    if f.domain() != d {
        return Err(Error::Usage(format!("automorphism of {} given for {}", f.domain().name(), d.name())));
    }
    Ok(f)
}

fn sequence_arg(s: &str, d: ModelDomain) -> Result<Vec<Automorphism>> {
    let seq: Vec<Automorphism> = json_arg(s)?;
    for f in &seq {
        f.validate()?;
        if f.domain() != d {
            return Err(Error::Usage(format!("sequence term on {} given for {}", f.domain().name(), d.name())));
        }
    }
    Ok(seq)
}

#[derive(Deserialize)]
struct SeriesFile {
    #[serde(default)]
    center: Option<C64>,
    terms: Vec<(i32, f64, f64)>,
    #[serde(default)]
    tail_bound: f64,
}

fn series_arg(s: &str, max_order: usize) -> Result<TruncatedLaurent> {
    let file: SeriesFile = json_arg(s)?;
    let n = max_order;
    if let Some((j, _, _)) = file.terms.iter().find(|(j, _, _)| j.unsigned_abs() as usize > n) {
        return Err(Error::Usage(format!("term of order {j} exceeds series_order {n}")));
    }
    let entries = file.terms.iter().map(|&(j, re, im)| (j, c64(re, im)));
    Ok(TruncatedLaurent::from_entries(file.center.unwrap_or(c64(0.0, 0.0)), n, n, entries)?
        .with_tail_bound(file.tail_bound))
}

fn kernel_model(k: &KernelArgs, cfg: &RunConfig) -> Result<KernelModel> {
    let d = parse_domain(&k.domain)?;
    match k.mode {
        Mode::Closed => match KernelModel::closed_form(d)? {
            KernelModel::ClosedForm { domain, .. } => {
                Ok(KernelModel::ClosedForm { domain, truncation: cfg.kernel_truncation })
            }
            other => Ok(other),
        },
        Mode::Numeric => {
            let set = match (k.a_max, k.b_max) {
                (Some(a_max), Some(b_max)) => MonomialSet::Box { a_max, b_max },
                _ => MonomialSet::TotalDegree { degree: k.degree },
            };
            KernelModel::numeric_with(d, set, &cfg.quadrature())
        }
    }
}

fn kernel_summary(k: &KernelModel) -> Value {
    match k {
        KernelModel::ClosedForm { domain, truncation } => {
            json!({"mode": "closed_form", "domain": domain, "truncation": truncation})
        }
        KernelModel::Numeric(n) => json!({
            "mode": "numeric",
            "domain": n.domain,
            "monomials": n.monomials,
            "quadrature": n.quadrature,
            "condition": n.condition,
            "basis_size": n.len(),
            "total_nodes": n.total_nodes,
        }),
    }
}

fn to_value<T: Serialize>(t: &T) -> Result<Value> {
    Ok(serde_json::to_value(t)?)
}

/// Artifact body and optional CSV table.
struct Outcome {
    result: Value,
    csv: Option<String>,
}

fn execute(cmd: &Command, cfg: &RunConfig) -> Result<Outcome> {
    let plain = |result: Value| Ok(Outcome { result, csv: None });
    match cmd {
        Command::BersRecover { domain, aut } => {
            let d = parse_domain(domain)?;
            let h = aut_arg(aut, d)?;
            let phi = HomAction::composition(Map::new(h), d, d);
            let grid = holo_algebra::interior_grid(d, cfg.grid_size, cfg.seed);
            let opts = RecoveryOptions {
                tol: cfg.tol,
                candidate_inverse: Some(Map::new(h.inverse())),
                seed: cfg.seed,
                ..Default::default()
            };
            let report = holo_algebra::bers_recover(&phi, &grid, &holo_algebra::standard_test_set(d), &opts)?;
            let max_dev = grid.iter().zip(&report.h_values).map(|(p, v)| h.map(p).dist(v)).fold(0.0, f64::max);
            let mut v = to_value(&report)?;
            v["max_deviation_from_input"] = json!(max_dev);
            v["input"] = to_value(&h)?;
            plain(v)
        }
        Command::Character { domain, point } => {
            let d = parse_domain(domain)?;
            let c = parse_point(point)?;
            let chi = Character::point_evaluation(d, c);
            plain(to_value(&holo_algebra::character_locate(&chi, d, &holo_algebra::standard_test_set(d), cfg.tol)?)?)
        }
        Command::ClassifyAnnulus { r, series } => {
            let s = series_arg(series, cfg.series_order)?;
            plain(to_value(&holo_algebra::annulus_auto_classify(&s, *r, cfg.tol)?)?)
        }
        Command::Lipschitz { domain, aut, coordinate } => {
            let d = parse_domain(domain)?;
            if *coordinate >= d.dim() {
                return Err(Error::Usage(format!("coordinate {coordinate} out of range for {}", d.name())));
            }
            let mut f = Func::coordinate(*coordinate, d.dim());
            if let Some(a) = aut {
                f = f.compose(&Map::new(aut_arg(a, d)?));
            }
            plain(to_value(&lipschitz::lipschitz_norm(&f, &cfg.sampler(d))?)?)
        }
        Command::Family { domain, sequence } => {
            let d = parse_domain(domain)?;
            let seq = sequence_arg(sequence, d)?;
            let ex = CompactExhaustion::new(d, &standard_deltas(d), cfg.exhaustion_candidates, cfg.seed)?;
            let report = lipschitz::family_classify(
                &Func::coordinate(0, d.dim()),
                &seq,
                &ex,
                &cfg.sampler(d),
                cfg.blowup_factor,
            )?;
            Ok(Outcome { csv: Some(report.to_csv()), result: to_value(&report)? })
        }
        Command::Kernel { kernel, z, zeta } => {
            let k = kernel_model(kernel, cfg)?;
            let (z, zeta) = (parse_point(z)?, parse_point(zeta)?);
            let value = k.eval(&z, &zeta)?;
            plain(json!({
                "kernel": kernel_summary(&k),
                "z": z,
                "zeta": zeta,
                "value": value,
                "tail_bound": k.tail_bound(&z, &zeta),
            }))
        }
        Command::Curvature { kernel, z, v } => {
            let k = kernel_model(kernel, cfg)?;
            let (z, v) = (parse_point(z)?, parse_point(v)?);
            let metric = bergman::bergman_metric(&k, &z)?;
            let curvature = bergman::holo_curvature(&k, &z, &v)?;
            plain(json!({"kernel": kernel_summary(&k), "direction": v, "metric": metric, "curvature": curvature}))
        }
        Command::TransformLaw { kernel, aut, pairs } => {
            let k = kernel_model(kernel, cfg)?;
            let d = k.domain();
            let f = aut_arg(aut, d)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let list: Vec<(Point, Point)> =
                (0..*pairs).map(|_| (d.sample_interior(&mut rng), d.sample_interior(&mut rng))).collect();
            let table = bergman::transformation_residual(&k, &f, &list)?;
            Ok(Outcome {
                csv: Some(table.to_csv()),
                result: json!({"kernel": kernel_summary(&k), "automorphism": f, "max_residual": table.max_residual, "pairs": pairs}),
            })
        }
        Command::Blowup { kernel, x, deltas } => {
            let k = kernel_model(kernel, cfg)?;
            let fit = bergman::blowup_exponent(&k, &parse_point(x)?, &parse_deltas(deltas)?)?;
            Ok(Outcome { csv: Some(fit.to_csv()), result: json!({"kernel": kernel_summary(&k), "fit": fit}) })
        }
        Command::Klembeck { kernel, x, v, deltas } => {
            let k = kernel_model(kernel, cfg)?;
            let p = bergman::klembeck_profile(&k, &parse_point(x)?, &parse_deltas(deltas)?, &parse_point(v)?)?;
            Ok(Outcome { csv: Some(p.to_csv()), result: json!({"kernel": kernel_summary(&k), "profile": p}) })
        }
        Command::Scale { domain, x, deltas } => {
            let d = parse_domain(domain)?;
            let r = scaling::scale_sequence(d, &parse_point(x)?, &parse_deltas(deltas)?, cfg.seed)?;
            Ok(Outcome { csv: Some(r.to_csv()), result: to_value(&r)? })
        }
        Command::Cayley { z, inverse } => {
            let p = parse_point(z)?;
            let image = if *inverse { scaling::cayley_inverse(&p)? } else { scaling::cayley(&p)? };
            let back = if *inverse { scaling::cayley(&image)? } else { scaling::cayley_inverse(&image)? };
            plain(json!({"input": p, "image": image, "round_trip_error": back.dist(&p), "inverse": inverse}))
        }
        Command::Limit { domain, sequence } => {
            let d = parse_domain(domain)?;
            let seq = sequence_arg(sequence, d)?;
            let ex = CompactExhaustion::new(d, &standard_deltas(d), cfg.exhaustion_candidates, cfg.seed)?;
            plain(to_value(&limits::normal_limit_classify(&seq, &ex, cfg.tol)?)?)
        }
        Command::Prop52 { domain, sequence, f } => {
            let d = parse_domain(domain)?;
            let seq = sequence_arg(sequence, d)?;
            let map = match f.as_str() {
                "identity" => Map::identity(d.dim()),
                "square" if d.dim() == 1 => Map::planar("z^2", |z| z * z),
                other => Map::new(aut_arg(other, d)?),
            };
            let ex = CompactExhaustion::new(d, &standard_deltas(d), cfg.exhaustion_candidates, cfg.seed)?;
            plain(to_value(&limits::prop52_check(&map, &seq, &ex, cfg.tol)?)?)
        }
    }
}

fn standard_deltas(d: ModelDomain) -> Vec<f64> {
    match d {
        ModelDomain::Annulus { r } => [0.4, 0.2, 0.1, 0.05].iter().map(|s| s * (1.0 - r)).collect(),
        _ => vec![0.5, 0.25, 0.1, 0.05],
    }
}

/// Sorted-key JSON with numbers at 15 significant digits.
pub fn render_json(v: &Value) -> String {
    fn go(v: &Value, indent: usize, out: &mut String) {
        let pad = |n: usize| "  ".repeat(n);
        match v {
            Value::Null => out.push_str("null"),
            Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Value::Number(n) => {
                if n.is_f64() {
                    out.push_str(&crate::fmt::num(n.as_f64().unwrap_or(f64::NAN)));
                } else {
                    out.push_str(&n.to_string());
                }
            }
            Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
            Value::Array(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    out.push_str(&pad(indent + 1));
                    go(item, indent + 1, out);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push(']');
            }
            Value::Object(map) => {
                if map.is_empty() {
                    out.push_str("{}");
                    return;
                }
                let mut keys: Vec<&String> = map.keys().collect();
                keys.sort();
                out.push_str("{\n");
                for (i, k) in keys.iter().enumerate() {
                    out.push_str(&pad(indent + 1));
                    out.push_str(&Value::String((*k).clone()).to_string());
                    out.push_str(": ");
                    go(&map[*k], indent + 1, out);
                    out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push('}');
            }
        }
    }
    let mut out = String::new();
    go(v, 0, &mut out);
    out.push('\n');
    out
}

/// Writes through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::parse(
            &fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        )?,
        None => RunConfig::default(),
    };
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        cfg.out_dir = PathBuf::from(dir);
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = cli.tol {
        cfg.tol = tol;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn error_document(e: &Error) -> String {
    render_json(&json!({"error": {"kind": e.kind(), "message": e.to_string()}}))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Config(_) => 2,
        _ => 1,
    }
}

/// Runs the CLI; returns the process exit code. The artifact (or error
/// document) is printed on stdout.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let err = Error::Usage(e.render().to_string().trim().to_string());
            print!("{}", error_document(&err));
            return 2;
        }
    };
    match run_parsed(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            print!("{}", error_document(&e));
            exit_code(&e)
        }
    }
}

fn run_parsed(cli: &Cli) -> Result<String> {
    let cfg = effective_config(cli)?;
    let outcome = execute(&cli.command, &cfg)?;
    let name = cli.command.name();
    let doc = json!({
        "command": name,
        "args": to_value(&cli.command)?,
        "config": to_value(&cfg)?,
        "seed": cfg.seed,
        "result": outcome.result,
    });
    let text = render_json(&doc);
    write_atomic(&cfg.out_dir.join(format!("{name}.json")), &text)?;
    if let Some(csv) = outcome.csv {
        write_atomic(&cfg.out_dir.join(format!("{name}.csv")), &csv)?;
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_errors() {
        let c = RunConfig::parse("# comment\nseed = 7\ntol = 1e-6\nout_dir = /tmp/x\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.tol, 1e-6);
        assert!(matches!(RunConfig::parse("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("tol = -1"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("seed"), Err(Error::Config(_))));
    }

    #[test]
    fn domain_descriptors() {
        assert_eq!(parse_domain("annulus:0.5").unwrap(), ModelDomain::Annulus { r: 0.5 });
        assert_eq!(parse_domain("ellipsoid:2").unwrap(), ModelDomain::Ellipsoid { m: 2 });
        assert!(parse_domain("annulus").is_err());
        assert!(parse_domain("annulus:1.5").is_err());
        assert!(parse_domain("torus").is_err());
    }

    #[test]
    fn json_rendering_is_sorted_with_fifteen_digits() {
        let v = json!({"b": 1.0 / 3.0, "a": [1, 2.5], "c": {"z": null, "y": true}});
        let s = render_json(&v);
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.contains("0.333333333333333"));
        assert!(!s.contains("0.3333333333333333"));
        assert!(s.find("\"y\"").unwrap() < s.find("\"z\"").unwrap());
    }

    #[test]
    fn series_files_parse() {
        let s = series_arg(r#"{"terms": [[1, 0.9, 0.0]]}"#, 8).unwrap();
        assert_eq!(s.coeff(1), c64(0.9, 0.0));
        assert!(series_arg(r#"{"terms": [[20, 1.0, 0.0]]}"#, 8).is_err());
    }
}
