//! Command-line front end.
//!
//! Five subcommands: `norm` evaluates one of the discrete norms of a vertex
//! function, `modes` computes compressed manifold modes and writes them with
//! a JSON sidecar and per-mode PLY files, `convergence` runs the
//! cross-resolution norm study, `bench` times the solver configurations, and
//! `export-ply` writes a mesh with a per-vertex scalar for external viewers.
//!
//! Every command is deterministic given its flags and seed; every JSON
//! output embeds a format-version field and the fully resolved
//! configuration. Exit code 0 means all outputs were written and the
//! internal invariant checks passed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::cmm::{compressed_modes, CmmOptions};
use crate::error::{Error, Result};
use crate::io;
use crate::irls::RepairKind;
use crate::l1::{norm_first, norm_naive, norm_zeroth, quadrature_norm, L1Scheme};
use crate::mesh::{AreaScheme, MeshFormat, TriangleMesh};
use crate::operators::{cotangent_stiffness, lumped_mass};
use crate::spectral::{
    default_deflation_beta, deflation_factor, dense_generalized_eig, smallest_eigpairs,
    smallest_generalized_eigpair, EigOptions, StartVector,
};
use crate::study::convergence_study;

pub const FORMAT_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "MANIFOLD_L1_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "manifold-l1",
    version,
    about = "Geometry-aware L1 norms and compressed manifold modes on triangle meshes"
)]
pub struct Cli {
    /// Cap on internal parallelism (mirrored by MANIFOLD_L1_THREADS). The
    /// numerical kernels are single-threaded, so any value >= 1 is accepted
    /// and recorded for reproducibility.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormSchemeArg {
    Naive,
    Zeroth,
    First,
    /// Quadrature reference for the first-order interpolant.
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AreaSchemeArg {
    Barycentric,
    Voronoi,
}

impl From<AreaSchemeArg> for AreaScheme {
    fn from(a: AreaSchemeArg) -> Self {
        match a {
            AreaSchemeArg::Barycentric => AreaScheme::Barycentric,
            AreaSchemeArg::Voronoi => AreaScheme::MixedVoronoi,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Auto,
    Off,
    Obj,
}

impl From<FormatArg> for MeshFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Auto => MeshFormat::Auto,
            FormatArg::Off => MeshFormat::Off,
            FormatArg::Obj => MeshFormat::Obj,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum L1SchemeArg {
    Zeroth,
    First,
}

impl From<L1SchemeArg> for L1Scheme {
    fn from(s: L1SchemeArg) -> Self {
        match s {
            L1SchemeArg::Zeroth => L1Scheme::Zeroth,
            L1SchemeArg::First => L1Scheme::First,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RepairArg {
    Gersgorin,
    PsdProject,
    None,
}

impl From<RepairArg> for RepairKind {
    fn from(r: RepairArg) -> Self {
        match r {
            RepairArg::Gersgorin => RepairKind::Gersgorin,
            RepairArg::PsdProject => RepairKind::PsdProject,
            RepairArg::None => RepairKind::None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BenchConfigArg {
    /// Shared factorization across modes, cached low-rank core.
    Woodbury,
    /// Full re-factorization for every mode.
    Refactor,
    /// Dense eigendecomposition fallback (refuses large meshes).
    Dense,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate a discrete L1 norm of a vertex function.
    Norm {
        mesh: PathBuf,
        /// Text file with one value per vertex.
        function: PathBuf,
        #[arg(long, value_enum, default_value = "first")]
        scheme: NormSchemeArg,
        #[arg(long, value_enum, default_value = "barycentric")]
        area_scheme: AreaSchemeArg,
        /// Points per triangle for the oracle scheme.
        #[arg(long, default_value_t = 3000)]
        quad_points: usize,
        #[arg(long, value_enum, default_value = "auto")]
        format: FormatArg,
    },
    /// Compute compressed manifold modes and write modes.txt, modes.json and
    /// per-mode PLY files into the output directory.
    Modes {
        mesh: PathBuf,
        #[arg(short)]
        k: usize,
        #[arg(long)]
        mu: f64,
        #[arg(long, value_enum, default_value = "zeroth")]
        scheme: L1SchemeArg,
        #[arg(long, value_enum, default_value = "gersgorin")]
        repair: RepairArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 30)]
        max_irls_iters: usize,
        #[arg(long, default_value_t = 1e-6)]
        irls_rel_tol: f64,
        #[arg(long, default_value_t = 1e-8)]
        epsilon_rel: f64,
        /// Interpret --mu in units of 1/total-area (multiplies mu by the
        /// total surface area).
        #[arg(long)]
        area_normalized_mu: bool,
        #[arg(long, value_enum, default_value = "auto")]
        format: FormatArg,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Mean relative error of the three norm discretizations across
    /// subdivision levels; writes JSON and CSV.
    Convergence {
        mesh: PathBuf,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value_t = 200)]
        num_eigs: usize,
        #[arg(long, default_value_t = 2000)]
        dense_limit: usize,
        #[arg(long, value_enum, default_value = "auto")]
        format: FormatArg,
        /// Report path (.json); a .csv sibling is written next to it.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Time the eigensolver configurations on one or more meshes.
    Bench {
        /// Mesh files.
        #[arg(required = true)]
        meshes: Vec<PathBuf>,
        /// Mode counts, comma separated.
        #[arg(short, long, value_delimiter = ',', default_value = "8")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(
            long,
            value_enum,
            value_delimiter = ',',
            default_value = "woodbury,refactor"
        )]
        configs: Vec<BenchConfigArg>,
        #[arg(long, default_value_t = 2000)]
        dense_limit: usize,
        #[arg(long, value_enum, default_value = "auto")]
        format: FormatArg,
        /// Output JSON path; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Export a mesh with a per-vertex scalar as binary little-endian PLY.
    ExportPly {
        mesh: PathBuf,
        function: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        format: FormatArg,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    let value = match flag {
        Some(v) => v,
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => s
                .parse()
                .map_err(|_| Error::InvalidOptions(format!("bad {THREADS_ENV} value {s:?}")))?,
            Err(_) => 1,
        },
    };
    if value < 1 {
        return Err(Error::InvalidOptions("--threads must be >= 1".into()));
    }
    Ok(value)
}

/// Parse `args` and run; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through this path
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let threads = resolve_threads(cli.threads)?;
    match cli.command {
        Command::Norm {
            mesh,
            function,
            scheme,
            area_scheme,
            quad_points,
            format,
        } => cmd_norm(
            &mesh,
            &function,
            scheme,
            area_scheme,
            quad_points,
            format,
            threads,
        ),
        Command::Modes {
            mesh,
            k,
            mu,
            scheme,
            repair,
            seed,
            beta,
            max_irls_iters,
            irls_rel_tol,
            epsilon_rel,
            area_normalized_mu,
            format,
            output,
        } => cmd_modes(
            &mesh,
            k,
            mu,
            scheme,
            repair,
            seed,
            beta,
            max_irls_iters,
            irls_rel_tol,
            epsilon_rel,
            area_normalized_mu,
            format,
            &output,
            threads,
        ),
        Command::Convergence {
            mesh,
            levels,
            num_eigs,
            dense_limit,
            format,
            output,
        } => cmd_convergence(
            &mesh,
            levels,
            num_eigs,
            dense_limit,
            format,
            &output,
            threads,
        ),
        Command::Bench {
            meshes,
            k,
            mu,
            repeats,
            configs,
            dense_limit,
            format,
            output,
        } => cmd_bench(
            &meshes,
            &k,
            mu,
            repeats,
            &configs,
            dense_limit,
            format,
            output.as_deref(),
            threads,
        ),
        Command::ExportPly {
            mesh,
            function,
            format,
            output,
        } => cmd_export_ply(&mesh, &function, format, &output),
    }
}

fn load_function_for(mesh: &TriangleMesh, path: &Path) -> Result<Vec<f64>> {
    let f = io::read_function_file(path)?;
    if f.len() != mesh.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: mesh.vertex_count(),
            got: f.len(),
        });
    }
    Ok(f.into_values())
}

fn cmd_norm(
    mesh_path: &Path,
    function_path: &Path,
    scheme: NormSchemeArg,
    area_scheme: AreaSchemeArg,
    quad_points: usize,
    format: FormatArg,
    threads: usize,
) -> Result<()> {
    let mesh = TriangleMesh::load(mesh_path, format.into())?;
    let f = load_function_for(&mesh, function_path)?;
    let (name, value) = match scheme {
        NormSchemeArg::Naive => ("naive", norm_naive(&f)),
        NormSchemeArg::Zeroth => {
            let areas = mesh.vertex_cell_areas(area_scheme.into());
            ("zeroth", norm_zeroth(&f, &areas)?)
        }
        NormSchemeArg::First => ("first", norm_first(&mesh, &f)?),
        NormSchemeArg::Oracle => ("oracle", quadrature_norm(&mesh, &f, quad_points)?),
    };
    let config = serde_json::json!({
        "mesh": mesh_path.display().to_string(),
        "function": function_path.display().to_string(),
        "scheme": name,
        "area_scheme": match area_scheme { AreaSchemeArg::Barycentric => "barycentric", AreaSchemeArg::Voronoi => "mixed_voronoi" },
        "quad_points": quad_points,
        "threads": threads,
        "vertices": mesh.vertex_count(),
        "faces": mesh.face_count(),
    });
    // value printed with 17 significant digits
    println!(
        "{{\"format_version\":{FORMAT_VERSION},\"scheme\":\"{name}\",\"value\":{value:.16e},\"config\":{config}}}"
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_modes(
    mesh_path: &Path,
    k: usize,
    mu: f64,
    scheme: L1SchemeArg,
    repair: RepairArg,
    seed: Option<u64>,
    beta: Option<f64>,
    max_irls_iters: usize,
    irls_rel_tol: f64,
    epsilon_rel: f64,
    area_normalized_mu: bool,
    format: FormatArg,
    output: &Path,
    threads: usize,
) -> Result<()> {
    let mesh = TriangleMesh::load(mesh_path, format.into())?;
    let effective_mu = if area_normalized_mu {
        mu * mesh.total_area()
    } else {
        mu
    };
    let opts = CmmOptions {
        k,
        mu: effective_mu,
        scheme: scheme.into(),
        repair: repair.into(),
        beta_override: beta,
        max_irls_iters,
        irls_rel_tol,
        epsilon_rel,
        seed,
    };
    let set = compressed_modes(&mesh, &opts)?;

    std::fs::create_dir_all(output)?;
    io::write_modes_txt(output.join("modes.txt"), &set)?;

    let config = serde_json::json!({
        "mesh": mesh_path.display().to_string(),
        "mu_flag": mu,
        "area_normalized_mu": area_normalized_mu,
        "threads": threads,
        "vertices": mesh.vertex_count(),
        "faces": mesh.face_count(),
        "output": output.display().to_string(),
    });
    let sidecar = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "config": config,
        "options": &set.options,
        "eigenvalues": &set.eigenvalues,
        "support_tau": set.support_tau,
        "support_fractions": &set.support_fractions,
        "histories": &set.histories,
    });
    std::fs::write(
        output.join("modes.json"),
        serde_json::to_string_pretty(&sidecar).expect("serializable report") + "\n",
    )?;

    for (i, mode) in set.modes.iter().enumerate() {
        let name = format!("mode_{:03}.ply", i + 1);
        io::export_ply(&mesh, mode, output.join(name))?;
    }
    println!(
        "wrote {} modes to {} (eigenvalues {:.6e} .. {:.6e})",
        set.modes.len(),
        output.display(),
        set.eigenvalues.first().unwrap(),
        set.eigenvalues.last().unwrap()
    );
    Ok(())
}

fn cmd_convergence(
    mesh_path: &Path,
    levels: usize,
    num_eigs: usize,
    dense_limit: usize,
    format: FormatArg,
    output: &Path,
    threads: usize,
) -> Result<()> {
    let mesh = TriangleMesh::load(mesh_path, format.into())?;
    let report = convergence_study(&mesh, levels, num_eigs, dense_limit)?;

    let config = serde_json::json!({
        "mesh": mesh_path.display().to_string(),
        "levels": levels,
        "num_eigs": num_eigs,
        "dense_limit": dense_limit,
        "threads": threads,
    });
    let payload = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "config": config,
        "report": &report,
    });
    if let Some(parent) = output.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(
        output,
        serde_json::to_string_pretty(&payload).expect("serializable report") + "\n",
    )?;
    let csv_path = output.with_extension("csv");
    std::fs::write(&csv_path, report.to_csv())?;
    println!(
        "wrote {} and {} ({} levels, reference level {})",
        output.display(),
        csv_path.display(),
        report.levels.len(),
        report.reference_level
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    mesh_paths: &[PathBuf],
    ks: &[usize],
    mu: f64,
    repeats: usize,
    configs: &[BenchConfigArg],
    dense_limit: usize,
    format: FormatArg,
    output: Option<&Path>,
    threads: usize,
) -> Result<()> {
    if repeats < 1 {
        return Err(Error::InvalidOptions("--repeats must be >= 1".into()));
    }
    let mut cells = Vec::new();
    for mesh_path in mesh_paths {
        let mesh = TriangleMesh::load(mesh_path, format.into())?;
        let w = cotangent_stiffness(&mesh);
        let a = lumped_mass(&mesh, AreaScheme::Barycentric);
        let av: Vec<f64> = a.entries().to_vec();
        // a fixed, mildly confining potential makes the timing problem
        // representative of a mu > 0 pipeline iteration
        let q = if mu > 0.0 {
            w.with_added_diagonal(&av, mu)?
        } else {
            w.clone()
        };
        for &k in ks {
            for &config in configs {
                let mut samples = Vec::with_capacity(repeats);
                for _ in 0..repeats {
                    let start = Instant::now();
                    match config {
                        BenchConfigArg::Woodbury => {
                            smallest_eigpairs(&q, &a, k, None, &EigOptions::default())?;
                        }
                        BenchConfigArg::Refactor => {
                            let beta = default_deflation_beta(&q, &a);
                            let mut modes: Vec<Vec<f64>> = Vec::with_capacity(k);
                            for _ in 0..k {
                                let u = deflation_factor(&a, &modes, beta);
                                let res = smallest_generalized_eigpair(
                                    &q,
                                    &u,
                                    &a,
                                    &EigOptions {
                                        start: StartVector::Ones,
                                        ..EigOptions::default()
                                    },
                                )?;
                                modes.push(res.eigenvector);
                            }
                        }
                        BenchConfigArg::Dense => {
                            let pairs = dense_generalized_eig(&q.to_dense(), &a, dense_limit)?;
                            let _ = &pairs[..k];
                        }
                    }
                    samples.push(start.elapsed().as_secs_f64());
                }
                let mean = samples.iter().sum::<f64>() / samples.len() as f64;
                let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
                    / samples.len() as f64;
                cells.push(serde_json::json!({
                    "mesh": mesh_path.display().to_string(),
                    "vertices": mesh.vertex_count(),
                    "k": k,
                    "config": match config {
                        BenchConfigArg::Woodbury => "woodbury",
                        BenchConfigArg::Refactor => "refactor_per_mode",
                        BenchConfigArg::Dense => "dense",
                    },
                    "repeats": repeats,
                    "mean_seconds": mean,
                    "std_seconds": var.sqrt(),
                }));
            }
        }
    }
    let config = serde_json::json!({
        "meshes": mesh_paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "k": ks,
        "mu": mu,
        "repeats": repeats,
        "dense_limit": dense_limit,
        "threads": threads,
    });
    let payload = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "config": config,
        "cells": cells,
    });
    let text = serde_json::to_string_pretty(&payload).expect("serializable report") + "\n";
    match output {
        Some(path) => {
            std::fs::write(path, text)?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_export_ply(
    mesh_path: &Path,
    function_path: &Path,
    format: FormatArg,
    output: &Path,
) -> Result<()> {
    let mesh = TriangleMesh::load(mesh_path, format.into())?;
    let f = load_function_for(&mesh, function_path)?;
    io::export_ply(&mesh, &f, output)?;
    println!("wrote {}", output.display());
    Ok(())
}
