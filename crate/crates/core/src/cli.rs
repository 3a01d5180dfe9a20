//! Command-line front end.
//!
//! Every command prints one JSON report on standard output:
//! `{"command", "inputs", "outputs", "residuals", "tolerance", "verdicts"}`.
//! `inputs` maps each input flag to the SHA-256 of the file it named. Keys are
//! sorted and every real is written with 17 significant digits, so identical
//! inputs give byte-identical reports.
//!
//! Exit codes: 0 when every verdict holds (or there are none), 1 when some
//! verdict fails, 2 on usage or input errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::connection::{
    covariant_derivative_estimate, curvature_tensor, homogeneity_residual, ricci_by_contraction, ricci_tensor,
};
use crate::io::{self, ChartFile, DirectionFile, LambdaFile, PairFile, QuadricFile, SubspaceFile};
use crate::normalization::{
    estimate_fundamental_tensor, harmonic_defect, isotropic_dimension, lambda_rank, lambda_rank_with, metric_rank,
    symmetrize_metric, NormalizingMap, RankThreshold, DEFAULT_EPS,
};
use crate::polar::{
    block_metrics, covariant_curvature, einstein_check, lower_raise, polar_conjugate, polar_lambda, BlockMetrics,
    Quadric,
};
use crate::projective::{adapted_frame, MPair, Subspace};
use crate::sampling::Sampler;
use crate::segre_affine::{flatness_report, inverse_projection, stereographic_projection, AffineChartPoint};
use crate::{cross_ratio, linalg};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "grassnorm", version, about = "Normalizations of Grassmann manifolds")]
struct Cli {
    /// Tolerance for every verdict.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Finite-difference step.
    #[arg(long, global = true, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// Seed for sampled checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cross-ratio matrix W of two m-pairs.
    CrossRatio {
        #[arg(long)]
        pair_a: PathBuf,
        #[arg(long)]
        pair_b: PathBuf,
        /// Also report (m+1)·ln(tr W/(m+1)).
        #[arg(long)]
        log_distance: bool,
    },
    /// Finite-difference fundamental tensor of a normalizing map.
    EstimateLambda {
        /// `polar:<quadric file>` or `constant:<subspace file>`.
        #[arg(long)]
        map: String,
        #[arg(long)]
        subspace: PathBuf,
    },
    /// Symmetrized metric tensor and ranks.
    Metric {
        #[arg(long)]
        lambda: PathBuf,
    },
    /// Curvature tensor, index order [i][β][γ][ε][α][j][k][l].
    Curvature {
        #[arg(long)]
        lambda: PathBuf,
    },
    /// Ricci tensor, index order [β][γ][j][k].
    Ricci {
        #[arg(long)]
        lambda: PathBuf,
    },
    /// Polar normalization of a quadric at a subspace.
    Polar {
        #[arg(long)]
        quadric: PathBuf,
        #[arg(long)]
        subspace: PathBuf,
        #[arg(long, value_enum)]
        emit: Emit,
    },
    #[command(subcommand)]
    Check(Check),
    /// Einstein test of the polar normalization, at one subspace or at
    /// sampled subspaces of dimension `--m`.
    Einstein {
        #[arg(long)]
        quadric: PathBuf,
        #[arg(long, conflicts_with = "m")]
        subspace: Option<PathBuf>,
        #[arg(long, required_unless_present = "subspace")]
        m: Option<usize>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Chart coordinates B of a subspace for a fixed normalizer.
    Project {
        #[arg(long)]
        subspace: PathBuf,
        #[arg(long)]
        normalizer: PathBuf,
    },
    /// Subspace with given chart coordinates.
    Unproject {
        #[arg(long)]
        chart: PathBuf,
        #[arg(long)]
        normalizer: PathBuf,
    },
    /// Invariants of the rank-zero normalization on G(m, n).
    Flatness {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Number of sampled chart round trips.
        #[arg(long)]
        samples: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum Check {
    /// Homogeneity identity of a fundamental tensor.
    Homogeneity {
        #[arg(long)]
        lambda: PathBuf,
    },
    /// Central-difference covariant derivative of λ along a direction.
    CovariantConstancy {
        #[arg(long)]
        map: String,
        #[arg(long)]
        subspace: PathBuf,
        #[arg(long)]
        direction: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Conjugate,
    Lambda,
    Metric,
    Curvature,
    Ricci,
    Einstein,
}

/// Machine-readable result of one command.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, Value>,
    pub residuals: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub verdicts: BTreeMap<String, bool>,
}

impl Report {
    fn new(command: &str, tolerance: f64) -> Self {
        Self {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            residuals: BTreeMap::new(),
            tolerance,
            verdicts: BTreeMap::new(),
        }
    }

    fn output(&mut self, key: &str, v: impl Serialize) {
        let v = serde_json::to_value(v).expect("report values serialize");
        self.outputs.insert(key.to_string(), v);
    }

    fn residual(&mut self, key: &str, v: f64) {
        self.residuals.insert(key.to_string(), v.abs());
    }

    fn verdict(&mut self, key: &str, holds: bool, residual_key: &str, residual: f64) {
        self.residual(residual_key, residual);
        self.verdicts.insert(key.to_string(), holds);
    }

    /// 0 when all verdicts hold, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.verdicts.values().all(|&v| v) {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats);
        self.serialize(&mut ser).expect("report serializes");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

/// Writes every finite real in scientific notation with 17 significant digits.
struct FixedFloats;

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        write!(w, "{v:.16e}")
    }
}

/// Exit code and captured streams of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let (stdout, stderr) = if code == 0 { (text, String::new()) } else { (String::new(), text) };
            return Outcome { code, stdout, stderr };
        }
    };
    match dispatch(&cli) {
        Ok(report) => Outcome { code: report.exit_code(), stdout: report.to_json() + "\n", stderr: String::new() },
        Err(e) => Outcome { code: 2, stdout: String::new(), stderr: format!("error: {e:#}\n") },
    }
}

fn load<T: for<'de> serde::Deserialize<'de>>(report: &mut Report, key: &str, path: &Path) -> anyhow::Result<T> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    report.inputs.insert(key.to_string(), hex::encode(Sha256::digest(&bytes)));
    let text = String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
    io::parse(&text).with_context(|| format!("invalid {key} file {}", path.display()))
}

fn load_subspace(report: &mut Report, key: &str, path: &Path) -> anyhow::Result<Subspace> {
    let f: SubspaceFile = load(report, key, path)?;
    f.into_subspace().with_context(|| format!("invalid {key} file {}", path.display()))
}

fn load_lambda(report: &mut Report, path: &Path) -> anyhow::Result<crate::normalization::FundamentalTensor> {
    let f: LambdaFile = load(report, "lambda", path)?;
    f.into_tensor().with_context(|| format!("invalid lambda file {}", path.display()))
}

fn load_quadric(report: &mut Report, path: &Path) -> anyhow::Result<Quadric> {
    let f: QuadricFile = load(report, "quadric", path)?;
    f.into_quadric().with_context(|| format!("invalid quadric file {}", path.display()))
}

fn load_map(report: &mut Report, spec: &str, m: usize) -> anyhow::Result<NormalizingMap> {
    let (kind, path) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("map must be polar:<file> or constant:<file>, got {spec:?}"))?;
    let path = Path::new(path);
    match kind {
        "polar" => Ok(NormalizingMap::polar(load_quadric(report, path)?, m)?),
        "constant" => Ok(NormalizingMap::constant(load_subspace(report, "map", path)?)?),
        other => bail!("unknown map kind {other:?}; expected polar or constant"),
    }
}

fn polar_setup(q: &Quadric, p: Subspace) -> anyhow::Result<(MPair, BlockMetrics)> {
    let m = p.dim();
    let p_star = polar_conjugate(&p, q)?;
    let pair = MPair::new(p, p_star)?;
    let bm = block_metrics(&adapted_frame(&pair), q, m)?;
    Ok((pair, bm))
}

fn dispatch(cli: &Cli) -> anyhow::Result<Report> {
    if !(cli.tol.is_finite() && cli.tol >= 0.0) {
        bail!("--tol must be a non-negative real");
    }
    if !(cli.eps.is_finite() && cli.eps > 0.0) {
        bail!("--eps must be a positive real");
    }
    let tol = cli.tol;
    match &cli.command {
        Command::CrossRatio { pair_a, pair_b, log_distance } => {
            let mut r = Report::new("cross-ratio", tol);
            let a = load::<PairFile>(&mut r, "pair_a", pair_a)?.into_pair().context("invalid pair_a")?;
            let b = load::<PairFile>(&mut r, "pair_b", pair_b)?.into_pair().context("invalid pair_b")?;
            let w = cross_ratio::cross_ratio(&a, &b)?;
            r.output("trace", w.trace());
            r.output("w", io::matrix_value(w.matrix()));
            let ld = if *log_distance { Some(cross_ratio::cr_log_distance(&a, &b)?) } else { None };
            r.output("log_distance", ld);
            Ok(r)
        }
        Command::EstimateLambda { map, subspace } => {
            let mut r = Report::new("estimate-lambda", tol);
            let p = load_subspace(&mut r, "subspace", subspace)?;
            let nu = load_map(&mut r, map, p.dim())?;
            let pair = nu.pair_at(&p)?;
            let lam = estimate_fundamental_tensor(&nu, &pair, cli.eps)?;
            let file = LambdaFile::from_tensor(&lam);
            r.output("m", file.m);
            r.output("n", file.n);
            r.output("lambda", &file.lambda);
            r.output("p_star", SubspaceFile::from_subspace(pair.p_star()));
            r.output("rank", lambda_rank_with(&lam, RankThreshold::Absolute(10.0 * cli.eps)));
            r.output("eps", cli.eps);
            Ok(r)
        }
        Command::Metric { lambda } => {
            let mut r = Report::new("metric", tol);
            let lam = load_lambda(&mut r, lambda)?;
            let g = symmetrize_metric(&lam);
            r.output("metric", io::array4_value(g.array()));
            r.output("metric_rank", metric_rank(&g));
            r.output("lambda_rank", lambda_rank(&lam));
            r.output("isotropic_dimension", isotropic_dimension(&g));
            r.residual("harmonic_defect", harmonic_defect(&lam));
            Ok(r)
        }
        Command::Curvature { lambda } => {
            let mut r = Report::new("curvature", tol);
            let lam = load_lambda(&mut r, lambda)?;
            let c = curvature_tensor(&lam);
            r.output("curvature", io::array_value(c.array()));
            r.residual("antisymmetry_defect", c.antisymmetry_defect());
            Ok(r)
        }
        Command::Ricci { lambda } => {
            let mut r = Report::new("ricci", tol);
            let lam = load_lambda(&mut r, lambda)?;
            let ric = ricci_tensor(&lam);
            let contracted = ricci_by_contraction(&curvature_tensor(&lam));
            let mismatch = (ric.array() - contracted.array()).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            r.output("ricci", io::array4_value(ric.array()));
            r.residual("asymmetry", ric.asymmetry());
            r.residual("contraction_mismatch", mismatch);
            Ok(r)
        }
        Command::Polar { quadric, subspace, emit } => {
            let mut r = Report::new("polar", tol);
            let q = load_quadric(&mut r, quadric)?;
            let p = load_subspace(&mut r, "subspace", subspace)?;
            let (pair, bm) = polar_setup(&q, p)?;
            r.output("p_star", SubspaceFile::from_subspace(pair.p_star()));
            let lam = polar_lambda(&bm);
            match emit {
                Emit::Conjugate => {}
                Emit::Lambda => r.output("lambda", io::array4_value(lam.array())),
                Emit::Metric => {
                    let g = symmetrize_metric(&lam);
                    r.output("g_ab", io::matrix_value(bm.g_ab()));
                    r.output("g_ij", io::matrix_value(bm.g_ij()));
                    r.output("metric", io::array4_value(g.array()));
                    r.output("metric_rank", metric_rank(&g));
                }
                Emit::Curvature => {
                    let c = curvature_tensor(&lam);
                    let cov = covariant_curvature(&bm);
                    r.output("curvature", io::array_value(c.array()));
                    r.output("covariant_curvature", io::array_value(cov.array()));
                    r.residual("index_adjustment_mismatch", lower_raise(&c, &bm)?.max_abs_diff(&cov));
                }
                Emit::Ricci => {
                    let ric = ricci_tensor(&lam);
                    r.output("ricci", io::array4_value(ric.array()));
                    r.residual("asymmetry", ric.asymmetry());
                }
                Emit::Einstein => {
                    let e = einstein_check(&bm, tol);
                    r.output("constant", e.constant);
                    r.verdict("is_einstein", e.is_einstein, "einstein_residual", e.residual);
                }
            }
            Ok(r)
        }
        Command::Check(Check::Homogeneity { lambda }) => {
            let mut r = Report::new("check homogeneity", tol);
            let lam = load_lambda(&mut r, lambda)?;
            let res = homogeneity_residual(&lam);
            let scale = lam.max_abs().powi(2);
            r.output("scale", scale);
            r.verdict("is_homogeneous", res <= tol * scale, "homogeneity_residual", res);
            Ok(r)
        }
        Command::Check(Check::CovariantConstancy { map, subspace, direction }) => {
            let mut r = Report::new("check covariant-constancy", tol);
            let p = load_subspace(&mut r, "subspace", subspace)?;
            let nu = load_map(&mut r, map, p.dim())?;
            let dir = load::<DirectionFile>(&mut r, "direction", direction)?
                .into_direction()
                .context("invalid direction file")?;
            let pair = nu.pair_at(&p)?;
            let nabla = covariant_derivative_estimate(&nu, &pair, &dir, cli.eps)?;
            r.output("nabla_lambda", io::array4_value(nabla.array()));
            r.output("eps", cli.eps);
            let res = nabla.max_abs();
            r.verdict("is_covariantly_constant", res <= tol, "nabla_max_abs", res);
            Ok(r)
        }
        Command::Einstein { quadric, subspace, m, samples } => {
            let mut r = Report::new("einstein", tol);
            let q = load_quadric(&mut r, quadric)?;
            let n = q.n();
            let subspaces = match (subspace, m) {
                (Some(path), _) => vec![load_subspace(&mut r, "subspace", path)?],
                (None, Some(m)) => {
                    if *m >= n {
                        bail!("--m must be smaller than n = {n}");
                    }
                    let mut s = Sampler::new(cli.seed);
                    (0..*samples).map(|_| s.subspace(n, *m)).collect()
                }
                (None, None) => bail!("either --subspace or --m is required"),
            };
            let mut constants = Vec::with_capacity(subspaces.len());
            let (mut all, mut worst) = (true, 0.0_f64);
            for p in subspaces {
                let (_, bm) = polar_setup(&q, p)?;
                let e = einstein_check(&bm, tol);
                all &= e.is_einstein;
                worst = worst.max(e.residual);
                constants.push(e.constant);
            }
            r.output("expected_constant", 0.5 * (n as f64 - 1.0));
            if let [c] = constants.as_slice() {
                r.output("constant", *c);
            } else {
                r.output("constants", &constants);
            }
            r.verdict("is_einstein", all, "einstein_residual", worst);
            Ok(r)
        }
        Command::Project { subspace, normalizer } => {
            let mut r = Report::new("project", tol);
            let p = load_subspace(&mut r, "subspace", subspace)?;
            let ps = load_subspace(&mut r, "normalizer", normalizer)?;
            let b = ChartFile::from_chart(&stereographic_projection(&p, &ps)?);
            r.output("m", b.m);
            r.output("n", b.n);
            r.output("B", &b.b);
            Ok(r)
        }
        Command::Unproject { chart, normalizer } => {
            let mut r = Report::new("unproject", tol);
            let b = load::<ChartFile>(&mut r, "chart", chart)?.into_chart().context("invalid chart file")?;
            let ps = load_subspace(&mut r, "normalizer", normalizer)?;
            let s = SubspaceFile::from_subspace(&inverse_projection(&b, &ps)?);
            r.output("n", s.n);
            r.output("points", &s.points);
            Ok(r)
        }
        Command::Flatness { m, n, samples } => {
            let mut r = Report::new("flatness", tol);
            let f = flatness_report(*m, *n)?;
            r.output("lambda_rank", f.lambda_rank);
            r.output("metric_rank", f.metric_rank);
            r.output("rho", f.rho);
            r.residual("curvature_max_abs", f.curvature_max_abs);
            r.residual("lambda_rank", f.lambda_rank as f64);
            r.residual("metric_rank", f.metric_rank as f64);
            let mut flat = f.lambda_rank == 0 && f.metric_rank == 0 && f.curvature_max_abs == 0.0;
            if let Some(k) = samples {
                let mut s = Sampler::new(cli.seed);
                let mut worst = 0.0_f64;
                for _ in 0..*k {
                    let ps = s.subspace(*n, n - m - 1);
                    let b = AffineChartPoint::new(*m, *n, s.matrix(n - m, m + 1))?;
                    let back = stereographic_projection(&inverse_projection(&b, &ps)?, &ps)?;
                    worst = worst.max(linalg::max_abs(&(back.matrix() - b.matrix())));
                }
                r.residual("round_trip_max_error", worst);
                flat &= worst <= tol;
            }
            r.verdicts.insert("is_flat".into(), flat);
            Ok(r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_significant_digits() {
        let mut r = Report::new("x", 1e-9);
        r.output("one", 1.0);
        r.output("count", 3usize);
        let json = r.to_json();
        assert!(json.contains("\"one\":1.0000000000000000e0"), "{json}");
        assert!(json.contains("\"count\":3"), "{json}");
        assert!(json.starts_with("{\"command\":\"x\",\"inputs\":{},\"outputs\":{\"count\""), "{json}");
    }

    #[test]
    fn exit_code_follows_verdicts() {
        let mut r = Report::new("x", 0.0);
        assert_eq!(r.exit_code(), 0);
        r.verdict("a", true, "ra", 0.0);
        assert_eq!(r.exit_code(), 0);
        r.verdict("b", false, "rb", -2.0);
        assert_eq!(r.exit_code(), 1);
        assert_eq!(r.residuals["rb"], 2.0);
    }

    #[test]
    fn usage_errors_exit_two() {
        let out = run(["grassnorm", "no-such-command"]);
        assert_eq!(out.code, 2);
        assert!(out.stdout.is_empty() && !out.stderr.is_empty());
        let out = run(["grassnorm", "flatness", "--m", "1"]);
        assert_eq!(out.code, 2);
        let out = run(["grassnorm", "flatness", "--m", "1", "--n", "3", "--eps", "-1"]);
        assert_eq!(out.code, 2);
    }

    #[test]
    fn flatness_command() {
        let out = run(["grassnorm", "flatness", "--m", "1", "--n", "3"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        for (_, res) in v["residuals"].as_object().unwrap() {
            assert_eq!(res.as_f64(), Some(0.0));
        }
        assert_eq!(v["outputs"]["rho"], 4);
    }

    #[test]
    fn bad_map_spec_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("p.json");
        std::fs::write(&sub, r#"{"n": 2, "points": [[1, 0, 0]]}"#).unwrap();
        let out = run(["grassnorm", "estimate-lambda", "--map", "nothing", "--subspace", sub.to_str().unwrap()]);
        assert_eq!(out.code, 2);
        assert!(out.stderr.contains("polar:<file>"), "{}", out.stderr);
    }
}
