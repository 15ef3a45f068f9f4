//! Subcommand implementations.

use crate::config::{ConfigError, RunConfig};
use crate::output::{num, OutputDir, OutputError};
use elastic_np::nystrom::{build_surface_grid, write_binary, write_csv, OperatorMatrix, CSV_LIMIT};
use elastic_np::spectral::{centers, default_delta, polynomial_compactness_probe, CompactnessDiagnostic, ProbeOptions, SpectrumOptions, SpectrumReport};
use elastic_np::verify::{self, CheckResult};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Resource(String),
    Output(OutputError),
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => 1,
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e}"),
            CliError::Resource(m) => write!(f, "resource limit: {m}"),
            CliError::Output(e) => write!(f, "output error: {e}"),
            CliError::Compute(m) => write!(f, "computation failed: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<OutputError> for CliError {
    fn from(e: OutputError) -> Self {
        CliError::Output(e)
    }
}

fn compute(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

#[derive(Serialize)]
struct Parameters {
    lambda: f64,
    mu: f64,
    k0: f64,
}

#[derive(Serialize)]
struct CheckReport<'a, T: Serialize> {
    surface: String,
    seed: u64,
    parameters: Parameters,
    passed: bool,
    checks: &'a [CheckResult],
    #[serde(flatten)]
    extra: T,
}

fn parameters(cfg: &RunConfig) -> Parameters {
    Parameters { lambda: cfg.params.lambda(), mu: cfg.params.mu(), k0: cfg.params.k0() }
}

fn status(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "fail"
    }
}

fn check_table(checks: &[CheckResult]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:<width$}  {:>12}  {:>10}  status\n", "check", "value", "bound");
    for c in checks {
        let _ = writeln!(s, "{:<width$}  {:>12.4e}  {:>10.3e}  {}", c.name, c.max_residual, c.tolerance, status(c.passed));
    }
    s
}

/// `report.json`, `residuals.csv` and `summary.txt` for a list of checks.
fn write_checks<T: Serialize>(out: &mut OutputDir, cfg: &RunConfig, checks: &[CheckResult], extra: T, table_suffix: &str) -> Result<bool, CliError> {
    let passed = verify::all_passed(checks);
    out.write_json("report.json", &CheckReport { surface: cfg.surface.name(), seed: cfg.seed, parameters: parameters(cfg), passed, checks, extra })?;
    out.write_csv(
        "residuals.csv",
        &["check", "max_residual", "tolerance", "status"],
        checks.iter().map(|c| vec![c.name.clone(), num(c.max_residual), num(c.tolerance), status(c.passed).to_string()]),
    )?;
    let mut summary = check_table(checks);
    summary.push_str(table_suffix);
    out.write_text("summary.txt", &summary)?;
    print!("{summary}");
    Ok(passed)
}

#[derive(Serialize)]
struct Nothing {}

pub fn verify_kernels(cfg: &RunConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = verify::kernel_split_checks(&cfg.params, &cfg.surface, cfg.kernel_pairs, &mut rng);
    checks.push(verify::conormal_fd_check(&cfg.params, &cfg.surface, 200, &mut rng));
    checks.push(verify::weak_singularity_check(&cfg.params, &cfg.surface, cfg.singularity_samples, &mut rng));
    write_checks(out, cfg, &checks, Nothing {}, "")
}

#[derive(Serialize)]
struct RieszExtra {
    composition: Vec<(usize, f64)>,
}

pub fn verify_riesz(cfg: &RunConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = vec![
        verify::riesz_sum_of_squares_check(cfg.riesz_grid, &mut rng).map_err(compute)?,
        verify::halfspace_cube_check(cfg.riesz_grid, &mut rng).map_err(compute)?,
        verify::symbol_formula_check(cfg.symbol_pairs, &mut rng).map_err(compute)?,
    ];
    let samples = verify::sum_of_squares_samples(cfg.identity_samples, &mut rng).map_err(compute)?;
    checks.push(verify::sum_of_squares_check(&samples));
    let (comp, rows) = verify::composition_check(&cfg.composition_grids, cfg.seed).map_err(compute)?;
    checks.push(comp);
    out.write_csv("composition.csv", &["grid", "relative_remainder"], rows.iter().map(|(n, e)| vec![n.to_string(), num(*e)]))?;
    write_checks(out, cfg, &checks, RieszExtra { composition: rows }, "")
}

#[derive(Serialize)]
struct SymbolExtra {
    direct_vs_quantized: Vec<(usize, f64)>,
}

pub fn verify_symbols(cfg: &RunConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = vec![verify::symbol_formula_check(cfg.symbol_pairs, &mut rng).map_err(compute)?];
    let samples = verify::sum_of_squares_samples(cfg.identity_samples, &mut rng).map_err(compute)?;
    checks.push(verify::sum_of_squares_check(&samples));
    out.write_csv(
        "sum_of_squares_samples.csv",
        &["chart", "u1", "u2", "xi1", "xi2", "residual"],
        samples.iter().map(|s| vec![s.chart.to_string(), num(s.u[0]), num(s.u[1]), num(s.xi[0]), num(s.xi[1]), num(s.residual)]),
    )?;
    checks.push(verify::r_cube_check(&cfg.composition_grids, cfg.seed).map_err(compute)?);
    checks.push(verify::trace_probe_check(cfg.trace_grid, cfg.trace_vectors, cfg.seed).map_err(compute)?);
    let mut direct = Vec::new();
    if !cfg.direct_grids.is_empty() {
        let (c, rows) = verify::riesz_quadrature_agreement(&cfg.direct_grids, 1).map_err(compute)?;
        checks.push(c);
        direct = rows;
    }
    write_checks(out, cfg, &checks, SymbolExtra { direct_vs_quantized: direct }, "")
}

#[derive(Serialize)]
struct Outlier {
    index: usize,
    value: f64,
    distance: f64,
}

#[derive(Serialize)]
struct ResolutionSummary<'a> {
    resolution: usize,
    dim: usize,
    method: elastic_np::spectral::SpectrumMethod,
    eigenvalues: &'a [f64],
    cluster_counts: [usize; 3],
    inlier_fraction: f64,
    outliers: Vec<Outlier>,
    imaginary_defect: Option<f64>,
    symmetry_defect: Option<f64>,
    plemelj_defect: f64,
    spectral_radius: f64,
}

#[derive(Serialize)]
struct SpectrumExtra<'a> {
    centers: [f64; 3],
    delta: f64,
    resolutions: Vec<ResolutionSummary<'a>>,
    compactness: &'a [CompactnessDiagnostic],
    exports: Vec<String>,
}

struct Pipeline {
    reports: Vec<SpectrumReport>,
    defects: Vec<(usize, f64)>,
    ks: Vec<OperatorMatrix>,
    exports: Vec<String>,
}

/// Reject any resolution whose dense problem exceeds the unknown ceiling, before assembly.
fn check_ceiling(cfg: &RunConfig) -> Result<(), CliError> {
    for &n in &cfg.resolutions {
        let dim = 3 * build_surface_grid(&cfg.surface, n).map_err(compute)?.len();
        if dim > cfg.max_unknowns {
            return Err(CliError::Resource(format!("resolution {n} needs 3N = {dim} unknowns, above max_unknowns = {}", cfg.max_unknowns)));
        }
    }
    Ok(())
}

fn run_pipeline(cfg: &RunConfig, out: &mut OutputDir, keep_k: bool) -> Result<Pipeline, CliError> {
    let opts = SpectrumOptions { delta: cfg.delta, cross_check: cfg.cross_check, snapshot_dir: None };
    let mut p = Pipeline { reports: Vec::new(), defects: Vec::new(), ks: Vec::new(), exports: Vec::new() };
    for &n in &cfg.resolutions {
        let start = Instant::now();
        let run = verify::run_resolution(&cfg.surface, &cfg.params, n, &cfg.quadrature, &opts).map_err(compute)?;
        eprintln!("resolution {n}: 3N = {}, {:.1} s", run.k.dim(), start.elapsed().as_secs_f64());
        out.write_csv(&format!("eigenvalues_n{n}.csv"), &[], run.report.eigenvalues.iter().map(|v| vec![num(*v)]))?;
        if cfg.export_matrices {
            for (m, label) in [(&run.k, "K"), (&run.s, "S")] {
                let name = format!("{label}_n{n}.bin");
                write_binary(&out.path(&name), m).map_err(compute)?;
                out.record(&name);
                p.exports.push(name);
                if m.dim() <= CSV_LIMIT {
                    let name = format!("{label}_n{n}.csv");
                    write_csv(&out.path(&name), m).map_err(compute)?;
                    out.record(&name);
                    p.exports.push(name);
                }
            }
        }
        p.defects.push((n, run.plemelj_defect));
        p.reports.push(run.report);
        if keep_k {
            p.ks.push(run.k);
        }
    }
    if let Some(last) = p.reports.last() {
        out.write_csv("eigenvalues.csv", &[], last.eigenvalues.iter().map(|v| vec![num(*v)]))?;
    }
    Ok(p)
}

fn probe(cfg: &RunConfig, p: &Pipeline, out: &mut OutputDir) -> Result<Vec<CompactnessDiagnostic>, CliError> {
    let refs: Vec<&OperatorMatrix> = p.ks.iter().collect();
    let spectra: Vec<&[f64]> = p.reports.iter().map(|r| r.eigenvalues.as_slice()).collect();
    let opts = ProbeOptions { index: cfg.probe_index, lanczos_steps: cfg.lanczos_steps, fraction: cfg.probe_fraction, seed: cfg.seed };
    let diags = polynomial_compactness_probe(&refs, &cfg.params, Some(&spectra), &opts).map_err(compute)?;
    let mut rows = Vec::new();
    for d in &diags {
        for (r, sv) in d.resolutions.iter().zip(&d.singular_values) {
            for (k, s) in sv.iter().enumerate() {
                rows.push(vec![d.kind.name().to_string(), r.to_string(), (k + 1).to_string(), num(*s)]);
            }
        }
    }
    out.write_csv("singular_values.csv", &["composite", "resolution", "index", "sigma"], rows)?;
    Ok(diags)
}

fn spectrum_table(p: &Pipeline, diags: &[CompactnessDiagnostic]) -> String {
    let mut s = format!(
        "\n{:>5} {:>6} {:>12} {:>8} {:>7} {:>7} {:>7} {:>8} {:>11} {:>9}\n",
        "n", "3N", "method", "inliers", "#0", "#+k0", "#-k0", "outliers", "plemelj", "radius"
    );
    for (r, (_, d)) in p.reports.iter().zip(&p.defects) {
        let c = &r.clustering;
        let _ = writeln!(
            s,
            "{:>5} {:>6} {:>12} {:>8.4} {:>7} {:>7} {:>7} {:>8} {:>11.4e} {:>9.5}",
            r.resolution,
            r.dim,
            format!("{:?}", r.method),
            c.inlier_fraction(),
            c.counts[0],
            c.counts[1],
            c.counts[2],
            c.outliers.len(),
            d,
            r.spectral_radius
        );
    }
    if !diags.is_empty() {
        let _ = writeln!(s, "\n{:<10} {:>5}  sigma by resolution", "composite", "k");
        for d in diags {
            let v: Vec<String> = d.sigma_index.iter().map(|x| format!("{x:.4e}")).collect();
            let _ = writeln!(s, "{:<10} {:>5}  {}", d.kind.name(), d.index, v.join("  "));
        }
    }
    s
}

fn spectrum_outputs(cfg: &RunConfig, out: &mut OutputDir, p: &Pipeline, diags: &[CompactnessDiagnostic], checks: &[CheckResult]) -> Result<bool, CliError> {
    let resolutions = p
        .reports
        .iter()
        .zip(&p.defects)
        .map(|(r, (_, d))| ResolutionSummary {
            resolution: r.resolution,
            dim: r.dim,
            method: r.method,
            eigenvalues: &r.eigenvalues,
            cluster_counts: r.clustering.counts,
            inlier_fraction: r.clustering.inlier_fraction(),
            outliers: r.clustering.outliers.iter().map(|&i| Outlier { index: i, value: r.eigenvalues[i], distance: r.clustering.assignments[i].distance }).collect(),
            imaginary_defect: r.imaginary_defect,
            symmetry_defect: r.symmetry_defect,
            plemelj_defect: *d,
            spectral_radius: r.spectral_radius,
        })
        .collect();
    let extra = SpectrumExtra {
        centers: centers(&cfg.params),
        delta: cfg.delta.unwrap_or_else(|| default_delta(&cfg.params)),
        resolutions,
        compactness: diags,
        exports: p.exports.clone(),
    };
    let table = spectrum_table(p, diags);
    write_checks(out, cfg, checks, extra, &table)
}

pub fn spectrum(cfg: &RunConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    cfg.require_probe_resolutions()?;
    check_ceiling(cfg)?;
    let p = run_pipeline(cfg, out, cfg.probe)?;
    let mut checks = verify::clustering_checks(&p.reports);
    if p.defects.len() >= 2 {
        checks.push(verify::symmetrization_check(&p.defects));
    }
    let diags = if cfg.probe { probe(cfg, &p, out)? } else { Vec::new() };
    let k0 = cfg.params.k0();
    checks.extend(verify::compactness_checks(&diags, 0.1 * k0 * k0));
    spectrum_outputs(cfg, out, &p, &diags, &checks)
}

pub fn probe_compactness(cfg: &RunConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    let mut cfg = cfg.clone();
    cfg.probe = true;
    cfg.require_probe_resolutions()?;
    check_ceiling(&cfg)?;
    let p = run_pipeline(&cfg, out, true)?;
    let diags = probe(&cfg, &p, out)?;
    let k0 = cfg.params.k0();
    let checks = verify::compactness_checks(&diags, 0.1 * k0 * k0);
    spectrum_outputs(&cfg, out, &p, &diags, &checks)
}
