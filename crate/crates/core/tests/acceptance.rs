//! Acceptance runner: one PASS/FAIL line per criterion.
//!
//! Exits 0 after printing every line so the rest of the test suite still runs;
//! set `ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

use elastic_np::nystrom::{OperatorMatrix, QuadratureOptions};
use elastic_np::spectral::{polynomial_compactness_probe, ProbeOptions, SpectrumOptions};
use elastic_np::verify::{self, CheckResult};
use elastic_np::LameParameters;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const SEED: u64 = 20240611;
const RESOLUTIONS: [usize; 3] = [16, 24, 32];

struct Criterion {
    id: usize,
    title: &'static str,
    checks: Vec<CheckResult>,
    seconds: f64,
}

impl Criterion {
    fn passed(&self) -> bool {
        !self.checks.is_empty() && verify::all_passed(&self.checks)
    }

    fn print(&self) {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        println!("{tag} C{:<2} {} ({:.1} s)", self.id, self.title, self.seconds);
        for c in &self.checks {
            let mark = if c.passed { "ok" } else { "xx" };
            println!("       [{mark}] {:<34} value {:>11.4e}  bound {:>10.3e}  {}", c.name, c.max_residual, c.tolerance, c.detail);
        }
    }
}

fn timed(id: usize, title: &'static str, f: impl FnOnce() -> Vec<CheckResult>) -> Criterion {
    let start = Instant::now();
    let checks = f();
    let c = Criterion { id, title, checks, seconds: start.elapsed().as_secs_f64() };
    c.print();
    c
}

fn failure(name: &str, err: impl std::fmt::Display) -> Vec<CheckResult> {
    vec![CheckResult::with_outcome(name, f64::NAN, f64::NAN, false, err.to_string())]
}

fn runtime(name: &str, seconds: f64, limit: f64) -> CheckResult {
    CheckResult::at_most(name, seconds, limit, "wall-clock seconds".into())
}

/// Clustering, compactness and Plemelj results for one surface.
struct SurfaceOutcome {
    clustering: Vec<CheckResult>,
    compactness: Vec<CheckResult>,
    plemelj: CheckResult,
    pipeline_seconds: f64,
}

fn surface_outcome(name: &str, p: &LameParameters) -> Result<SurfaceOutcome, String> {
    let surface = verify::fixture(name).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mut ks: Vec<OperatorMatrix> = Vec::new();
    let mut reports = Vec::new();
    let mut defects = Vec::new();
    for n in RESOLUTIONS {
        let run = verify::run_resolution(&surface, p, n, &QuadratureOptions::default(), &SpectrumOptions::default()).map_err(|e| e.to_string())?;
        println!(
            "       {name} n={n}: 3N = {}, {:?}, inliers {:.3}, counts {:?}, assembly {:.1} s, eigen {:.1} s",
            run.k.dim(),
            run.report.method,
            run.report.clustering.inlier_fraction(),
            run.report.clustering.counts,
            run.assembly_seconds,
            run.eigen_seconds
        );
        defects.push((n, run.plemelj_defect));
        reports.push(run.report);
        ks.push(run.k);
    }
    let pipeline_seconds = start.elapsed().as_secs_f64();
    let refs: Vec<&OperatorMatrix> = ks.iter().collect();
    let spectra: Vec<&[f64]> = reports.iter().map(|r| r.eigenvalues.as_slice()).collect();
    let diags = polynomial_compactness_probe(&refs, p, Some(&spectra), &ProbeOptions::default()).map_err(|e| e.to_string())?;
    for d in &diags {
        println!("       {name} {}: σ_{} = {:?}, |p(λ)| at rank 10% = {:?}", d.kind.name(), d.index, d.sigma_index, d.fraction_values.clone().unwrap_or_default());
    }
    let k0 = p.k0();
    Ok(SurfaceOutcome {
        clustering: verify::clustering_checks(&reports),
        compactness: verify::compactness_checks(&diags, 0.1 * k0 * k0),
        plemelj: verify::symmetrization_check(&defects),
        pipeline_seconds,
    })
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let p = LameParameters::new(1.0, 1.0).expect("valid parameters");
    let sphere = verify::fixture("sphere").expect("fixture");
    let ellipsoid = verify::fixture("ellipsoid").expect("fixture");
    let mut all = Vec::new();

    all.push(timed(1, "kernel split on 10⁴ sphere pairs", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut checks = verify::kernel_split_checks(&p, &sphere, 10_000, &mut rng);
        checks.push(runtime("runtime", start.elapsed().as_secs_f64(), 5.0));
        checks
    }));

    all.push(timed(2, "weak singularity of K2", || {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
        [("sphere", &sphere), ("ellipsoid", &ellipsoid)]
            .into_iter()
            .map(|(name, s)| {
                let mut c = verify::weak_singularity_check(&p, s, 200, &mut rng);
                c.name = format!("{}_{name}", c.name);
                c
            })
            .collect()
    }));

    all.push(timed(3, "flat Riesz identities on 512²", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
        let mut checks = Vec::new();
        match verify::riesz_sum_of_squares_check(512, &mut rng) {
            Ok(c) => checks.push(c),
            Err(e) => return failure("riesz_sum_of_squares", e),
        }
        match verify::halfspace_cube_check(512, &mut rng) {
            Ok(c) => checks.push(c),
            Err(e) => return failure("halfspace_cube", e),
        }
        checks.push(runtime("runtime", start.elapsed().as_secs_f64(), 10.0));
        checks
    }));

    all.push(timed(4, "principal symbol vs Fourier-transformed kernel, 100 pairs", || {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
        verify::symbol_formula_check(100, &mut rng).map(|c| vec![c]).unwrap_or_else(|e| failure("symbol_formula", e))
    }));

    all.push(timed(5, "symbol sum of squares at 10⁴ samples", || {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
        match verify::sum_of_squares_samples(10_000, &mut rng) {
            Ok(s) => vec![verify::sum_of_squares_check(&s)],
            Err(e) => failure("sum_of_squares", e),
        }
    }));

    all.push(timed(6, "composition remainder order on 64, 128, 256", || {
        verify::composition_check(&[64, 128, 256], SEED + 5).map(|(c, _)| vec![c]).unwrap_or_else(|e| failure("composition_order", e))
    }));

    let sphere_run = surface_outcome("sphere", &p);
    let (c7, c8, c10) = match &sphere_run {
        Ok(o) => {
            let mut c7 = o.clustering.clone();
            c7.push(runtime("runtime", o.pipeline_seconds, 600.0));
            (c7, o.compactness.clone(), vec![o.plemelj.clone()])
        }
        Err(e) => (failure("sphere_pipeline", e), failure("sphere_pipeline", e), failure("sphere_pipeline", e)),
    };
    all.push(timed(7, "spectral clustering on the sphere, n = 16, 24, 32", || c7));
    all.push(timed(8, "polynomial compactness dichotomy on the sphere", || c8));

    all.push(timed(9, "clustering and compactness on ellipsoid and star", || {
        let mut checks = Vec::new();
        for name in ["ellipsoid", "star"] {
            match surface_outcome(name, &p) {
                Ok(o) => {
                    for mut c in o.clustering.into_iter().chain(o.compactness) {
                        c.name = format!("{name}_{}", c.name);
                        checks.push(c);
                    }
                }
                Err(e) => checks.extend(failure(&format!("{name}_pipeline"), e)),
            }
        }
        checks
    }));

    all.push(timed(10, "Plemelj defect decreasing on the sphere", || c10));

    let failed: Vec<String> = all.iter().filter(|c| !c.passed()).map(|c| format!("C{}", c.id)).collect();
    println!();
    println!("summary: {} of {} criteria passed{}", all.len() - failed.len(), all.len(), if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) });
    if strict && !failed.is_empty() {
        std::process::exit(1);
    }
}
