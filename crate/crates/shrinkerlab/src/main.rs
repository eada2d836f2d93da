use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use shrinker_core::evolver::{descend, refine_critical, EvolveConfig, EvolveTrace};
use shrinker_core::lab::{
    analyze, run_batch, run_pipeline, verify_known_shrinkers, width_scan_with, write_json, BatchJob,
};
use shrinker_core::seeds::{seed, Family, SeedSpec};
use shrinker_core::{Error, Group, Mesh, Result};

#[derive(Parser)]
#[command(name = "shrinkerlab", version, about = "Construct, evolve and check triangulated self-shrinkers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build an initial surface and write it as OBJ or PLY.
    Seed {
        #[command(flatten)]
        seed: SeedArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Descend and refine a mesh to a critical point of the Gaussian area.
    Evolve {
        #[arg(long = "in")]
        input: PathBuf,
        /// Symmetry group: `Dn`, `Cn` or `trivial`.
        #[arg(long, default_value = "trivial")]
        group: String,
        /// JSON file with solver parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoint_every: Option<usize>,
        /// Where checkpoints go; defaults to the output's directory.
        #[arg(long)]
        checkpoint_dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the iteration trace as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Measure genus, ends, residuals and distance diagnostics.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "trivial")]
        group: String,
        #[arg(long, default_value_t = 8.0)]
        radius: f64,
        /// Write the report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Gaussian area along the one-end sweepout.
    Widthscan {
        #[arg(long)]
        g: usize,
        #[arg(long, default_value_t = 99)]
        samples: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Plane, sphere and cylinder against their closed forms.
    Verify {
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Seed, evolve and analyze in one go.
    Pipeline {
        #[command(flatten)]
        seed: SeedArgs,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory receiving report.json and mesh.obj.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Several independent pipelines on worker threads.
    Batch {
        #[arg(long, value_enum, default_value_t = FamilyArg::OneEnd)]
        family: FamilyArg,
        /// Comma-separated genera (one_end) or n values (two_end).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    #[value(name = "one_end")]
    OneEnd,
    #[value(name = "two_end")]
    TwoEnd,
}

#[derive(Args)]
struct SeedArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::OneEnd)]
    family: FamilyArg,
    /// Genus of a one-end seed.
    #[arg(long)]
    g: Option<usize>,
    /// Symmetry order of a two-end seed (genus 2n-1).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    fillet: Option<f64>,
    #[arg(long)]
    edge: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    /// Two-end seeds: stack the neck rings instead of staggering them.
    #[arg(long)]
    prismatic: bool,
}

impl SeedArgs {
    fn spec(&self) -> Result<SeedSpec> {
        let mut s = SeedSpec::default();
        s.family = match self.family {
            FamilyArg::OneEnd => Family::OneEnd,
            FamilyArg::TwoEnd => Family::TwoEnd,
        };
        s.g_or_n = match (self.family, self.g, self.n) {
            (FamilyArg::OneEnd, Some(g), None) => g,
            (FamilyArg::TwoEnd, None, Some(n)) => n,
            (FamilyArg::OneEnd, _, _) => return Err(Error::InvalidInput("one_end seeds take --g".into())),
            (FamilyArg::TwoEnd, _, _) => return Err(Error::InvalidInput("two_end seeds take --n".into())),
        };
        if let Some(t) = self.t {
            s.t = t;
        }
        if let Some(f) = self.fillet {
            s.fillet = f;
        }
        if let Some(e) = self.edge {
            s.target_edge = e;
        }
        if let Some(r) = self.radius {
            s.clip_radius = r;
        }
        s.prismatic = self.prismatic;
        s.validate()?;
        Ok(s)
    }
}

fn load_config(path: Option<&Path>) -> Result<EvolveConfig> {
    match path {
        Some(p) => EvolveConfig::from_json(&std::fs::read_to_string(p)?),
        None => Ok(EvolveConfig::default()),
    }
}

fn emit<S: serde::Serialize>(value: &S, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn evolve(mesh: &Mesh, group: &Group, config: &EvolveConfig) -> Result<(Mesh, EvolveTrace)> {
    let (m, mut trace) = descend(mesh, group, config)?;
    info!(
        "phase A: {} iterations, F {:.6}, residual {:.3e}",
        trace.records.len(),
        trace.final_f,
        trace.final_residual
    );
    let (m, t) = refine_critical(&m, group, config)?;
    trace.append(t);
    info!("phase B: F {:.6}, residual {:.3e}", trace.final_f, trace.final_residual);
    Ok((m, trace))
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Seed { seed: args, out } => {
            let spec = args.spec()?;
            let m: Mesh = seed(&spec)?;
            info!("seed: {} vertices, {} triangles", m.num_vertices(), m.num_triangles());
            m.save(&out, None)
        }
        Cmd::Evolve {
            input,
            group,
            config,
            checkpoint_every,
            checkpoint_dir,
            out,
            trace,
        } => {
            let mesh = Mesh::load(&input)?;
            let group = Group::parse(&group)?;
            let mut cfg = load_config(config.as_deref())?;
            if checkpoint_every.is_some() {
                cfg.checkpoint_every = checkpoint_every;
                cfg.checkpoint_dir = checkpoint_dir
                    .or_else(|| out.parent().map(Path::to_path_buf))
                    .or_else(|| Some(PathBuf::from(".")));
            }
            let (m, tr) = evolve(&mesh, &group, &cfg)?;
            m.save(&out, None)?;
            if let Some(p) = trace {
                write_json(&p, &tr)?;
            }
            if !tr.converged {
                log::warn!("refinement did not reach refine_tol; residual {:.3e}", tr.final_residual);
            }
            Ok(())
        }
        Cmd::Analyze {
            input,
            group,
            radius,
            report,
        } => {
            let mesh = Mesh::load(&input)?;
            let group = Group::parse(&group)?;
            emit(&analyze(&mesh, &group, radius)?, report.as_deref())
        }
        Cmd::Widthscan { g, samples, report } => {
            let scan = width_scan_with(g, samples, &SeedSpec::default())?;
            info!("g={g}: max F {:.6} at t={:.4}", scan.max_f, scan.argmax_t);
            emit(&scan, report.as_deref())
        }
        Cmd::Verify { report } => emit(&verify_known_shrinkers()?, report.as_deref()),
        Cmd::Pipeline {
            seed: args,
            config,
            out_dir,
        } => {
            let spec = args.spec()?;
            let mut cfg = load_config(config.as_deref())?;
            cfg.radius = spec.clip_radius;
            let out = run_pipeline(&spec, &cfg)?;
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(&dir)?;
                out.mesh.save(&dir.join("mesh.obj"), None)?;
                write_json(&dir.join("report.json"), &out.report)?;
                write_json(&dir.join("trace.json"), &out.trace)?;
            } else {
                emit(&out.report, None)?;
            }
            Ok(())
        }
        Cmd::Batch {
            family,
            values,
            workers,
            config,
            out_dir,
        } => {
            let cfg = load_config(config.as_deref())?;
            let jobs: Vec<BatchJob> = values
                .iter()
                .map(|&v| {
                    let spec = match family {
                        FamilyArg::OneEnd => SeedSpec::one_end(v, SeedSpec::default().t),
                        FamilyArg::TwoEnd => SeedSpec::two_end(v),
                    };
                    let tag = match family {
                        FamilyArg::OneEnd => format!("one_end_g{v}"),
                        FamilyArg::TwoEnd => format!("two_end_n{v}"),
                    };
                    BatchJob {
                        spec,
                        config: cfg.clone(),
                        out_dir: Some(out_dir.join(tag)),
                    }
                })
                .collect();
            let mut first_err = None;
            for (v, r) in values.iter().zip(run_batch(&jobs, workers)) {
                match r {
                    Ok(rep) => println!(
                        "{v}: converged {} F {:.6} genus {} ends {}",
                        rep.converged, rep.analysis.gauss_area, rep.analysis.genus, rep.analysis.end_count
                    ),
                    Err(e) => {
                        println!("{v}: {e}");
                        first_err.get_or_insert(e);
                    }
                }
            }
            first_err.map_or(Ok(()), Err)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Stage { checkpoint: Some(p), .. } = &e {
                eprintln!("checkpoints in {}", p.display());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
