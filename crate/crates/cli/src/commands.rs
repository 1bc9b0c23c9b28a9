use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use idslab_core::discretize::assemble;
use idslab_core::field::io::{write_binary, write_csv};
use idslab_core::ids::{
    finite_volume_ids, geometric_grid, homogenized_ids_with, periodized_ids, IdsCurve, MeanKind,
    ThetaGrid,
};
use idslab_core::lab::{
    approximation_check, deviation_event_probability, fit_tail_estimates, ld_rate, sandwich_check,
    write_deviation_csv, write_json, write_sandwich_csv, ApproxSettings, DeviationSettings,
    SandwichParams, SandwichSettings,
};
use idslab_core::selftest::run_selftest;
use idslab_core::spectral::lowest_eigenvalues;
use idslab_core::{
    mean_field, periodize, sample_field, BoundaryCondition, CoefficientSpec, Disorder, IdsError,
    Result,
};

use crate::config::{self, Loaded, RunFile};
use crate::{Bc, Command, Common, Energies, FieldFormat, IdsMethod, Mean};

pub fn is_config_error(e: &IdsError) -> bool {
    match e {
        IdsError::Config(_) => true,
        IdsError::Sample { source, .. } => is_config_error(source),
        _ => false,
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(IdsError::config("--workers must be at least 1"));
        }
        b = b.num_threads(w);
    }
    b.build().map_err(|e| IdsError::config(format!("thread pool: {e}")))
}

fn workers_of(cmd: &Command) -> Option<usize> {
    match cmd {
        Command::SampleField { common, .. }
        | Command::Bands { common, .. }
        | Command::Ids { common, .. }
        | Command::Homogenized { common, .. }
        | Command::Sandwich { common, .. }
        | Command::ApproxCheck { common, .. }
        | Command::Deviation { common, .. } => common.workers,
        Command::Selftest { workers } => *workers,
        Command::LdRate { .. } => None,
    }
}

pub fn dispatch(cmd: Command) -> Result<i32> {
    let pool = pool(workers_of(&cmd))?;
    pool.install(|| execute(cmd))
}

/// Resolved spec, `[run]` defaults, seed and output directory of one invocation.
struct Setup {
    spec: CoefficientSpec,
    run: RunFile,
    seed: u64,
    out: PathBuf,
    source: Option<PathBuf>,
}

impl Setup {
    fn new(common: &Common) -> Result<Self> {
        let loaded = config::load(common.spec.as_deref())?;
        let spec = loaded.spec(common.d, common.m)?;
        let Loaded { run, source, .. } = loaded;
        let seed = common.seed.or(run.seed).unwrap_or(0);
        let out = config::out_dir(common.out.as_deref(), &run);
        Ok(Setup { spec, run, seed, out, source })
    }

    /// Everything needed to rerun the command, minus the worker count.
    fn sidecar(&self, command: &str, settings: Value) -> Value {
        json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config_file": self.source.as_ref().map(|p| p.display().to_string()),
            "seed": self.seed,
            "spec": self.spec,
            "settings": settings,
        })
    }

    fn energies(&self, e: &Energies, default: impl FnOnce() -> Result<Vec<f64>>) -> Result<Vec<f64>> {
        let v = if let Some(g) = &e.grid {
            config::parse_grid(g)?
        } else if !e.energies.is_empty() {
            e.energies.clone()
        } else if let Some(v) = &self.run.energies {
            v.clone()
        } else {
            default()?
        };
        if v.is_empty() {
            return Err(IdsError::config("no energies given"));
        }
        Ok(v)
    }

    fn bc(&self, flag: Option<Bc>) -> Result<BoundaryCondition> {
        Ok(match flag {
            Some(Bc::Dirichlet) => BoundaryCondition::Dirichlet,
            Some(Bc::Neumann) => BoundaryCondition::Neumann,
            Some(Bc::Periodic) => BoundaryCondition::Periodic,
            None => match &self.run.bc {
                Some(t) => BoundaryCondition::parse(t)?,
                None => BoundaryCondition::Dirichlet,
            },
        })
    }

    fn theta(&self, flag: Option<usize>, default: usize) -> Result<ThetaGrid> {
        let nodes = flag.or(self.run.theta_nodes).unwrap_or(default);
        if nodes == 0 {
            return Err(IdsError::config("--theta-nodes must be at least 1"));
        }
        Ok(ThetaGrid::midpoint(nodes))
    }

    fn path(&self, name: String) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }
}

fn positive(name: &str, v: usize) -> Result<usize> {
    if v == 0 {
        Err(IdsError::config(format!("--{name} must be at least 1")))
    } else {
        Ok(v)
    }
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn print_curve(path: &Path, c: &IdsCurve) {
    println!("{}", path.display());
    for ((e, v), s) in c.energies.iter().zip(&c.values).zip(&c.stderr) {
        println!("E={e}\tN={v:.6}\tstderr={s:.2e}");
    }
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::SampleField { common, n, index, periodize: per, format } => {
            let s = Setup::new(&common)?;
            let n = n.or(s.run.n).unwrap_or(2);
            let (r, f) = sample_field(&s.spec, n, s.seed, index)?;
            let field = if per { periodize(&r, &s.spec)? } else { f };
            let d = s.spec.dimension;
            let stem = format!(
                "field-{d}d-n{n}-s{}-i{index}{}",
                s.seed,
                if per { "-periodized" } else { "" }
            );
            let ext = match format {
                FieldFormat::Csv => "csv",
                FieldFormat::Binary => "bin",
            };
            let path = s.path(format!("{stem}.{ext}"))?;
            write_with(&path, |w| match format {
                FieldFormat::Csv => write_csv(&field, w),
                FieldFormat::Binary => write_binary(&field, w),
            })?;
            let meta = json!({
                "config": s.sidecar("sample-field", json!({ "n": n, "index": index, "periodize": per })),
                "kind": field.kind.as_str(),
                "periodic": field.periodic,
                "points": field.len(),
                "min": field.values.iter().copied().fold(f64::INFINITY, f64::min),
                "max": field.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                "omega": r.omega,
            });
            write_json(&s.path(format!("{stem}.json"))?, &meta)?;
            println!("{}\tpoints={}", path.display(), field.len());
            Ok(0)
        }

        Command::Bands { common, n, sample, theta_nodes, bands } => {
            let s = Setup::new(&common)?;
            let n = n.or(s.run.n).unwrap_or(0);
            positive("bands", bands)?;
            let nodes = positive("theta-nodes", theta_nodes.or(s.run.theta_nodes).unwrap_or(16))?;
            s.spec.check_box(n)?;
            let field = if sample {
                periodize(&sample_field(&s.spec, n, s.seed, 0)?.0, &s.spec)?
            } else {
                mean_field(&s.spec)?.tile(n)?
            };
            let points = ThetaGrid::endpoint(nodes).points(s.spec.dimension);
            eprintln!("bands: {} theta points, {} bands, {} unknowns", points.len(), bands, field.len());
            let rows: Vec<Result<Vec<f64>>> = {
                use rayon::prelude::*;
                points
                    .par_iter()
                    .map(|t| {
                        let a = assemble(&field, &BoundaryCondition::floquet(t))?;
                        lowest_eigenvalues(&a, bands.min(a.dim))
                    })
                    .collect()
            };
            let d = s.spec.dimension;
            let stem = format!("bands-{d}d-n{n}-s{}", s.seed);
            let path = s.path(format!("{stem}.csv"))?;
            let mut lowest = f64::INFINITY;
            let mut table = Vec::with_capacity(rows.len());
            for r in rows {
                let r = r?;
                lowest = lowest.min(r[0]);
                table.push(r);
            }
            write_with(&path, |w| {
                let head: Vec<&str> = ["theta1", "theta2"][..d].to_vec();
                writeln!(w, "{},band,E", head.join(","))?;
                for (t, ev) in points.iter().zip(&table) {
                    let ts: Vec<String> = t.iter().map(|x| format!("{x:.17e}")).collect();
                    for (k, e) in ev.iter().enumerate() {
                        writeln!(w, "{},{k},{e:.17e}", ts.join(","))?;
                    }
                }
                Ok(())
            })?;
            let cfg = s.sidecar(
                "bands",
                json!({ "n": n, "sample": sample, "theta_nodes": nodes, "rule": "endpoint", "bands": bands }),
            );
            write_json(&s.path(format!("{stem}.json"))?, &json!({ "config": cfg }))?;
            println!("{}\tbottom={lowest:.6e}", path.display());
            Ok(0)
        }

        Command::Ids { common, energies, method, n, samples, bc, theta_nodes } => {
            let s = Setup::new(&common)?;
            let energies = s.energies(&energies, || geometric_grid(0.01, 1.0, 10))?;
            let method = match method {
                Some(m) => m,
                None => match s.run.method.as_deref() {
                    None | Some("periodized") => IdsMethod::Periodized,
                    Some("fv") => IdsMethod::Fv,
                    Some(other) => {
                        return Err(IdsError::config(format!("unknown method '{other}' (periodized, fv)")))
                    }
                },
            };
            let n = n.or(s.run.n).unwrap_or(20);
            let samples = positive("samples", samples.or(s.run.samples).unwrap_or(20))?;
            eprintln!("ids: {samples} samples, {} energies, n = {n}", energies.len());
            let mut curve = match method {
                IdsMethod::Periodized => {
                    let theta = s.theta(theta_nodes, 32)?;
                    let mut c = periodized_ids(&s.spec, n, &energies, samples, s.seed, theta)?;
                    c.meta.config = s.sidecar(
                        "ids",
                        json!({ "method": "periodized", "n": n, "samples": samples, "theta": theta, "energies": energies }),
                    );
                    c
                }
                IdsMethod::Fv => {
                    let bc = s.bc(bc)?;
                    let mut c = finite_volume_ids(&s.spec, n, &bc, &energies, samples, s.seed)?;
                    c.meta.config = s.sidecar(
                        "ids",
                        json!({ "method": "fv", "n": n, "samples": samples, "bc": bc, "energies": energies }),
                    );
                    c
                }
            };
            curve.meta.seed = s.seed;
            std::fs::create_dir_all(&s.out)?;
            let path = curve.write_files(&s.out)?;
            print_curve(&path, &curve);
            Ok(0)
        }

        Command::Homogenized { common, energies, mean, theta_nodes } => {
            let s = Setup::new(&common)?;
            let energies = s.energies(&energies, || geometric_grid(0.01, 1.0, 10))?;
            let theta = s.theta(theta_nodes, 64)?;
            let kind = match mean {
                Mean::Arithmetic => MeanKind::Arithmetic,
                Mean::Harmonic => MeanKind::Harmonic,
            };
            let mut c = homogenized_ids_with(&s.spec, &energies, theta, kind)?;
            c.meta.seed = s.seed;
            c.meta.config = s.sidecar("homogenized", json!({ "mean": kind, "theta": theta, "energies": energies }));
            let path = c.write_files(&s.out)?;
            print_curve(&path, &c);
            Ok(0)
        }

        Command::Sandwich { common, energies, alpha, n, samples, bc, theta_nodes, cells, c, tau } => {
            let s = Setup::new(&common)?;
            let energies = s.energies(&energies, || geometric_grid(0.02, 0.2, 10))?;
            let alphas = if !alpha.is_empty() {
                alpha
            } else {
                s.run.alpha.clone().unwrap_or_else(|| vec![0.5, 0.6, 0.7, 0.8])
            };
            let settings = SandwichSettings {
                n: n.or(s.run.n).unwrap_or(200),
                bc: s.bc(bc)?,
                samples: positive("samples", samples.or(s.run.samples).unwrap_or(200))?,
                seed: s.seed,
                theta: s.theta(theta_nodes, 64)?,
                cells,
                bar_grid: None,
            };
            // validate every exponent before the first run
            let params: Vec<SandwichParams> = alphas
                .iter()
                .map(|&a| SandwichParams { alpha: a, energies: energies.clone(), c, tau })
                .collect();
            for p in &params {
                if !(p.alpha > 0.0 && p.alpha <= 1.0) {
                    return Err(IdsError::config(format!("alpha must lie in (0, 1], got {}", p.alpha)));
                }
            }
            let d = s.spec.dimension;
            for p in params {
                eprintln!("sandwich: alpha = {}, {} samples, n = {}", p.alpha, settings.samples, settings.n);
                let report = sandwich_check(&s.spec, &p, &settings)?;
                let stem = format!("sandwich-{d}d-n{}-s{}-a{}", settings.n, s.seed, p.alpha);
                let csv = s.path(format!("{stem}.csv"))?;
                write_with(&csv, |w| write_sandwich_csv(&report, w))?;
                let cfg = s.sidecar("sandwich", json!({ "settings": settings, "params": p }));
                write_json(&s.path(format!("{stem}.json"))?, &json!({ "config": cfg, "report": report }))?;
                println!(
                    "{}\talpha={}\tC={:.6e}\tall_pass={}\tgap_decreasing={}",
                    csv.display(),
                    p.alpha,
                    report.c,
                    report.all_pass,
                    report.gap_decreasing
                );
            }
            Ok(0)
        }

        Command::ApproxCheck {
            common,
            energy,
            eps,
            n,
            samples,
            coupling_exponent,
            eta,
            theta_nodes,
            reference_n,
        } => {
            let s = Setup::new(&common)?;
            let n = n.or(s.run.n).unwrap_or(16);
            let samples = positive("samples", samples.or(s.run.samples).unwrap_or(200))?;
            let settings = ApproxSettings {
                coupling_exponent,
                eta,
                theta: s.theta(theta_nodes, 32)?,
                reference_n,
                reference_bc: BoundaryCondition::Dirichlet,
                seed: s.seed,
            };
            eprintln!("approx-check: E = {energy}, eps = {eps}, n = {n}, {samples} samples");
            let report = approximation_check(&s.spec, energy, eps, n, samples, &settings)?;
            let d = s.spec.dimension;
            let path = s.path(format!("approx-{d}d-n{n}-s{}-E{energy}-eps{eps}.json", s.seed))?;
            let cfg = s.sidecar(
                "approx-check",
                json!({ "energy": energy, "epsilon": eps, "n": n, "samples": samples, "settings": settings }),
            );
            write_json(&path, &json!({ "config": cfg, "report": report }))?;
            println!(
                "{}\tholds={}\tlower_z={:.3}\tupper_z={:.3}\twidth={:.6e}",
                path.display(),
                report.holds,
                report.lower_z,
                report.upper_z,
                report.width
            );
            Ok(0)
        }

        Command::Deviation { common, energies, radii, alpha, trials, cutoff_mult } => {
            let s = Setup::new(&common)?;
            let energies = s.energies(&energies, || Ok(vec![0.2, 0.1, 0.05, 0.025]))?;
            let radii = if radii.is_empty() { vec![s.run.n.unwrap_or(16)] } else { radii };
            let trials = positive("trials", trials.or(s.run.trials).unwrap_or(10_000))?;
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(IdsError::config(format!("alpha must lie in (0, 1), got {alpha}")));
            }
            let settings = DeviationSettings { cutoff_mult, ..DeviationSettings::default() };
            let mut estimates = Vec::new();
            let mut fits = Vec::new();
            for &n in &radii {
                let mut row = Vec::new();
                for &e in &energies {
                    eprintln!("deviation: n = {n}, E = {e}, {trials} trials");
                    row.push(deviation_event_probability(&s.spec, n, e, alpha, trials, s.seed, &settings)?);
                }
                let fit = if energies.len() >= 4 {
                    match fit_tail_estimates(&row) {
                        Ok(f) => json!(f),
                        Err(e) => json!({ "status": "not-fitted", "reason": e.to_string() }),
                    }
                } else {
                    Value::Null
                };
                fits.push(json!({ "n": n, "fit": fit }));
                estimates.extend(row);
            }
            let d = s.spec.dimension;
            let stem = format!("deviation-{d}d-s{}-a{alpha}", s.seed);
            let csv = s.path(format!("{stem}.csv"))?;
            write_with(&csv, |w| write_deviation_csv(&estimates, w))?;
            let cfg = s.sidecar(
                "deviation",
                json!({ "radii": radii, "energies": energies, "alpha": alpha, "trials": trials, "settings": settings }),
            );
            write_json(
                &s.path(format!("{stem}.json"))?,
                &json!({ "config": cfg, "estimates": estimates, "tail_fits": fits }),
            )?;
            println!("{}", csv.display());
            for e in &estimates {
                println!(
                    "n={}\tE={}\tp_hat={:.4e}\tci=[{:.3e}, {:.3e}]\tsubspace={}",
                    e.n, e.energy, e.p_hat, e.ci_low, e.ci_high, e.subspace_dim
                );
            }
            Ok(0)
        }

        Command::LdRate { law, m, t, out } => {
            let disorder = Disorder::parse(&law)?;
            let r = ld_rate(&disorder, t, m)?;
            let dir = config::out_dir(out.as_deref(), &RunFile::default());
            std::fs::create_dir_all(&dir)?;
            let path = dir.join(format!("ld-rate-m{m}-t{t}.json"));
            write_json(&path, &json!({ "law": disorder, "result": r }))?;
            println!(
                "{}\tprobability={:.10e}\texact={}\thoeffding={:.10e}\trate={:.6e}",
                path.display(),
                r.probability,
                r.exact,
                r.hoeffding,
                r.rate
            );
            Ok(0)
        }

        Command::Selftest { .. } => {
            let checks = run_selftest();
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                if c.passed {
                    println!("PASS {}", c.name);
                } else {
                    println!("FAIL {}: {}", c.name, c.detail);
                }
            }
            println!("selftest: {} passed, {failed} failed", checks.len() - failed);
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}
