//! Command-line front end for `magpath_core`.
//!
//! [`run`] parses an argument vector, dispatches to the library and writes JSON
//! (or CSV for `sweep`). Exit codes: 0 success, 1 usage error, 2 domain or
//! validation error (including caustics), 3 numerical failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use magpath_core::block::RCOND_THRESHOLD;
use magpath_core::cp::{
    det_idlk, generating_functional, m_matrix, propagator_variant, spectrum_idlk, CPQuery, DetMethod, KernelVariant,
    ADJUDICATED_VARIANT, CAUSTIC_TOL, CLUSTER_TOL,
};
use magpath_core::grid::{make_grid, GridFunction};
use magpath_core::oracle::{adjudicate, AdjudicationSettings, OracleReport};
use magpath_core::{Complex, Error};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "magpath", version, about = "White-noise propagator calculus for a charged particle in a magnetic field")]
#[command(allow_negative_numbers = true)]
pub struct CommandConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Output format; CSV is available for `sweep` only.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Recorded in the output metadata.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct QueryArgs {
    #[arg(long)]
    pub t: f64,
    #[arg(long)]
    pub k: f64,
    #[arg(long, default_value_t = 0.0)]
    pub y1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub y2: f64,
    #[arg(long)]
    pub y3: Option<f64>,
}

impl QueryArgs {
    fn query(&self) -> CPQuery<f64> {
        let q = CPQuery::new(self.t, self.k, self.y1, self.y2);
        match self.y3 {
            Some(y3) => q.with_y3(y3),
            None => q,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form propagator G(t, y).
    Propagator {
        #[command(flatten)]
        q: QueryArgs,
        /// Kernel variant such as k_over/plus; defaults to the adjudicated one.
        #[arg(long)]
        variant: Option<String>,
    },
    /// Leading eigenvalues of Id + L(Id+K)^-1 on a grid of n cells.
    #[command(allow_negative_numbers = true)]
    Spectrum {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
    /// det(Id + L(Id+K)^-1) by truncated product or dense determinant.
    #[command(allow_negative_numbers = true)]
    Det {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        k: f64,
        #[arg(long, default_value = "product")]
        method: String,
        /// Number of product factors, or grid size for the dense method.
        #[arg(long, default_value_t = 10_000)]
        order: usize,
    },
    /// Pinning matrix, closed form and (with --n) from the boundary-value solve.
    #[command(allow_negative_numbers = true)]
    Mmatrix {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Generating functional at a test function built from Gaussian bumps.
    Tgen {
        #[command(flatten)]
        q: QueryArgs,
        #[arg(long, default_value_t = 256)]
        n: usize,
        /// `component,amplitude,center,width`; repeatable. Components 0..4 are (x1, p1, x2, p2).
        #[arg(long = "bump")]
        bumps: Vec<String>,
    },
    /// Adjudicate the kernel variants against the independent oracles.
    Oracle {
        #[command(flatten)]
        q: QueryArgs,
        #[arg(long, default_value_t = 256)]
        slices: usize,
        #[arg(long, default_value_t = 1e-4)]
        epsilon: f64,
    },
    /// Propagator over the Cartesian product of comma-separated parameter lists.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
        k: Vec<f64>,
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',', default_value = "0")]
        y1: Vec<f64>,
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',', default_value = "0")]
        y2: Vec<f64>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn complex(z: Complex<f64>) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn variant_json(v: KernelVariant) -> Value {
    json!({ "prefactor_form": v.prefactor_label(), "phase_sign": v.phase_label() })
}

fn query_json(q: &CPQuery<f64>) -> Value {
    json!({ "t": q.t, "k": q.k, "y1": q.y1, "y2": q.y2, "y3": q.y3 })
}

fn positive(name: &str, v: usize) -> Result<(), Failure> {
    if v < 2 {
        return Err(Error::InvalidArgument(format!("--{name} must be at least 2, got {v}")).into());
    }
    Ok(())
}

fn parse_bump(spec: &str) -> Result<(usize, f64, f64, f64), Failure> {
    let bad = || Failure::Core(Error::InvalidArgument(format!("bad --bump '{spec}', expected component,amplitude,center,width")));
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(bad());
    }
    let comp: usize = parts[0].parse().map_err(|_| bad())?;
    let nums: Vec<f64> = parts[1..].iter().map(|p| p.parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    if comp >= 4 || nums[2] <= 0.0 || nums[2].is_nan() || nums.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok((comp, nums[0], nums[1], nums[2]))
}

fn bump_function(n: usize, t: f64, bumps: &[(usize, f64, f64, f64)]) -> Result<GridFunction<f64>, Failure> {
    let grid = make_grid(t, n)?;
    Ok(GridFunction::from_fn(grid, 4, |c, s| {
        let v: f64 = bumps
            .iter()
            .filter(|b| b.0 == c)
            .map(|&(_, a, m, w)| a * (-(s - m) * (s - m) / (2.0 * w * w)).exp())
            .sum();
        Complex::new(v, 0.0)
    }))
}

fn propagator_json(q: &CPQuery<f64>, variant: KernelVariant) -> Result<Value, Failure> {
    let value = propagator_variant(q, variant)?;
    let phase = q.k.abs() * (q.y1 * q.y1 + q.y2 * q.y2) / (2.0 * (q.k * q.t).tan().abs()).max(f64::MIN_POSITIVE);
    let estimate = f64::EPSILON * (4.0 + phase) * value.norm();
    Ok(json!({
        "query": query_json(q),
        "result": complex(value),
        "meta": {
            "variant": variant_json(variant),
            "n": Value::Null,
            "tolerances": { "caustic": CAUSTIC_TOL },
            "error_estimate": estimate,
        },
    }))
}

fn report_json(r: &OracleReport<f64>, slices: usize, epsilon: f64) -> Value {
    let scores: Vec<Value> = r
        .scores
        .iter()
        .map(|s| {
            json!({
                "variant": variant_json(s.variant),
                "value": complex(s.value),
                "pde_residuals": s.pde_residuals,
                "pde_order": s.pde_order,
                "short_time_defect": s.short_time_defect,
                "slicing_rel": s.slicing_rel,
                "passes": s.passes,
            })
        })
        .collect();
    let table: Vec<Value> = r.slicing_table.iter().map(|(n, v)| json!({ "slices": n, "value": complex(*v) })).collect();
    let winner = r.scores.iter().find(|s| s.variant == r.selected).expect("selected variant is scored");
    json!({
        "query": query_json(&r.query),
        "result": complex(winner.value),
        "meta": {
            "variant": variant_json(r.selected),
            "n": slices,
            "epsilon": epsilon,
            "tolerances": { "caustic": CAUSTIC_TOL },
            "error_estimate": winner.slicing_rel,
            "slicing_value": complex(r.slicing_value),
            "slicing_table": table,
            "scores": scores,
            "confidence_notes": r.confidence_notes,
        },
    })
}

type SweepRow = ([f64; 4], Result<Complex<f64>, Error>);

fn sweep_rows(t: &[f64], k: &[f64], y1: &[f64], y2: &[f64]) -> Vec<SweepRow> {
    let mut tuples: Vec<[f64; 4]> = Vec::with_capacity(t.len() * k.len() * y1.len() * y2.len());
    for &a in t {
        for &b in k {
            for &c in y1 {
                for &d in y2 {
                    tuples.push([a, b, c, d]);
                }
            }
        }
    }
    tuples.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    tuples.dedup();
    tuples
        .into_par_iter()
        .map(|p| (p, propagator_variant(&CPQuery::new(p[0], p[1], p[2], p[3]), ADJUDICATED_VARIANT)))
        .collect()
}

fn execute(cfg: &CommandConfig) -> Result<Vec<u8>, Failure> {
    if cfg.output == OutputFormat::Csv && !matches!(cfg.command, Command::Sweep { .. }) {
        return Err(Failure::Usage("--output csv is only available for sweep".into()));
    }
    let mut doc = match &cfg.command {
        Command::Propagator { q, variant } => {
            let v = match variant {
                Some(s) => s.parse::<KernelVariant>()?,
                None => ADJUDICATED_VARIANT,
            };
            propagator_json(&q.query(), v)?
        }
        Command::Spectrum { t, k, n, count } => {
            positive("n", *n)?;
            let r = spectrum_idlk(make_grid(*t, *n)?, *k, *count)?;
            let rel: Vec<f64> = r.matched.iter().zip(&r.closed_form).map(|(a, b)| (a.re - b).hypot(a.im) / b.abs()).collect();
            json!({
                "query": { "t": t, "k": k },
                "result": {
                    "matched": r.matched.iter().map(|z| complex(*z)).collect::<Vec<_>>(),
                    "closed_form": r.closed_form,
                    "multiplicities": r.multiplicities,
                },
                "meta": {
                    "variant": variant_json(ADJUDICATED_VARIANT),
                    "n": n,
                    "count": count,
                    "tolerances": { "cluster": CLUSTER_TOL, "rcond": RCOND_THRESHOLD },
                    "error_estimate": rel,
                },
            })
        }
        Command::Det { t, k, method, order } => {
            let m: DetMethod = method.parse()?;
            if m == DetMethod::Dense {
                positive("order", *order)?;
            }
            let value = det_idlk(*t, *k, m, *order)?;
            let coarse = det_idlk(*t, *k, m, (*order / 2).max(if m == DetMethod::Dense { 2 } else { 1 }))?;
            json!({
                "query": { "t": t, "k": k },
                "result": complex(value),
                "meta": {
                    "variant": variant_json(ADJUDICATED_VARIANT),
                    "n": order,
                    "method": method,
                    "tolerances": { "rcond": RCOND_THRESHOLD },
                    "error_estimate": (value - coarse).norm(),
                },
            })
        }
        Command::Mmatrix { t, k, n } => {
            let grid = match n {
                Some(n) => {
                    positive("n", *n)?;
                    Some(make_grid(*t, *n)?)
                }
                None => None,
            };
            let m = m_matrix(*t, *k, grid.as_ref())?;
            let entry = |a: &[[Complex<f64>; 2]; 2], i: usize, j: usize| a[i][j];
            let closed = [[m.closed[(0, 0)], m.closed[(0, 1)]], [m.closed[(1, 0)], m.closed[(1, 1)]]];
            let numerical = m.numerical.map(|x| [[x[(0, 0)], x[(0, 1)]], [x[(1, 0)], x[(1, 1)]]]);
            let mat = |a: &[[Complex<f64>; 2]; 2]| -> Value {
                json!([[complex(a[0][0]), complex(a[0][1])], [complex(a[1][0]), complex(a[1][1])]])
            };
            let err = numerical.map(|x| {
                let diff = (0..4).map(|e| (entry(&x, e / 2, e % 2) - entry(&closed, e / 2, e % 2)).norm()).fold(0.0, f64::max);
                diff / closed[0][0].norm()
            });
            json!({
                "query": { "t": t, "k": k },
                "result": {
                    "re": m.closed[(0, 0)].re,
                    "im": m.closed[(0, 0)].im,
                    "closed": mat(&closed),
                    "numerical": numerical.as_ref().map(mat),
                },
                "meta": {
                    "variant": variant_json(ADJUDICATED_VARIANT),
                    "n": n,
                    "tolerances": { "caustic": CAUSTIC_TOL },
                    "error_estimate": err,
                },
            })
        }
        Command::Tgen { q, n, bumps } => {
            positive("n", *n)?;
            let bumps = bumps.iter().map(|b| parse_bump(b)).collect::<Result<Vec<_>, _>>()?;
            let query = q.query();
            let fine = generating_functional(&query, &bump_function(*n, q.t, &bumps)?)?;
            let coarse = generating_functional(&query, &bump_function((*n / 2).max(2), q.t, &bumps)?)?;
            json!({
                "query": query_json(&query),
                "result": complex(fine.value),
                "meta": {
                    "variant": variant_json(ADJUDICATED_VARIANT),
                    "n": n,
                    "bumps": bumps.iter().map(|b| json!({ "component": b.0, "amplitude": b.1, "center": b.2, "width": b.3 })).collect::<Vec<_>>(),
                    "det_nk": fine.det_nk.map(complex),
                    "branch_note": fine.branch_note,
                    "tolerances": { "caustic": CAUSTIC_TOL, "rcond": RCOND_THRESHOLD },
                    "error_estimate": (fine.value - coarse.value).norm() / 3.0,
                },
            })
        }
        Command::Oracle { q, slices, epsilon } => {
            positive("slices", *slices)?;
            let settings = AdjudicationSettings {
                slices: vec![(*slices / 4).max(2), (*slices / 2).max(2), *slices],
                epsilon: *epsilon,
                ..AdjudicationSettings::default()
            };
            report_json(&adjudicate(&q.query(), &settings)?, *slices, *epsilon)
        }
        Command::Sweep { t, k, y1, y2 } => {
            let rows = sweep_rows(t, k, y1, y2);
            if cfg.output == OutputFormat::Csv {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["t", "k", "y1", "y2", "re", "im", "prefactor_form", "phase_sign", "status"])
                    .map_err(|e| Failure::Io(e.to_string()))?;
                for (p, r) in &rows {
                    let (re, im, status) = match r {
                        Ok(z) => (z.re.to_string(), z.im.to_string(), "ok".to_string()),
                        Err(e) => (String::new(), String::new(), e.to_string()),
                    };
                    let mut rec: Vec<String> = p.iter().map(f64::to_string).collect();
                    rec.extend([re, im, ADJUDICATED_VARIANT.prefactor_label().into(), ADJUDICATED_VARIANT.phase_label().into(), status]);
                    w.write_record(&rec).map_err(|e| Failure::Io(e.to_string()))?;
                }
                return w.into_inner().map_err(|e| Failure::Io(e.to_string()));
            }
            let rows: Vec<Value> = rows
                .iter()
                .map(|(p, r)| match r {
                    Ok(z) => json!({ "query": { "t": p[0], "k": p[1], "y1": p[2], "y2": p[3] }, "result": complex(*z) }),
                    Err(e) => json!({ "query": { "t": p[0], "k": p[1], "y1": p[2], "y2": p[3] }, "error": e.to_string() }),
                })
                .collect();
            json!({
                "query": { "t": t, "k": k, "y1": y1, "y2": y2 },
                "result": rows,
                "meta": {
                    "variant": variant_json(ADJUDICATED_VARIANT),
                    "n": Value::Null,
                    "tolerances": { "caustic": CAUSTIC_TOL },
                },
            })
        }
    };
    if let Some(seed) = cfg.seed {
        doc["meta"]["seed"] = json!(seed);
    }
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| Failure::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Runs the CLI on `argv` (program name first). Output goes to `stdout` unless
/// `--out` is given; diagnostics go to `stderr`. Returns the exit code.
pub fn run<I, S>(argv: I, stdout: &mut impl Write, stderr: &mut impl Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cfg = match CommandConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let bytes = match execute(&cfg) {
        Ok(b) => b,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (EXIT_USAGE, format!("usage error: {m}")),
                Failure::Core(e) if e.is_domain() => (EXIT_DOMAIN, format!("error: {e}")),
                Failure::Core(e) => (EXIT_NUMERICAL, format!("error: {e}")),
                Failure::Io(m) => (EXIT_NUMERICAL, format!("output error: {m}")),
            };
            let _ = writeln!(stderr, "{msg}");
            return code;
        }
    };
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout.write_all(&bytes).map_err(|e| e.to_string()),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(m) => {
            let _ = writeln!(stderr, "output error: {m}");
            EXIT_NUMERICAL
        }
    }
}
