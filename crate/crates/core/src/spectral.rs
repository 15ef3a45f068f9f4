//! Spectra of assembled operators, clustering about `{0, ±k0}`, the discrete
//! Plemelj defect and singular-value probes of polynomials in `K`.

use crate::linalg::{fit_slope, spectral_norm, top_singular_values, DenseOperator, LinearOperator};
use crate::nystrom::{write_binary, OperatorMatrix, OperatorTag};
use crate::LameParameters;
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Mat, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("operators do not share a grid: {0}")]
    Shape(String),
    #[error("eigensolver failed on a {dim}×{dim} matrix (snapshot: {snapshot:?})")]
    Eigen { dim: usize, snapshot: Option<PathBuf> },
    #[error("configuration: {0}")]
    Config(String),
}

/// Cluster radius for given parameters: 0.04 at `k0 = 1/6`, proportional to `k0`.
pub fn default_delta(p: &LameParameters) -> f64 {
    0.24 * p.k0()
}

/// Cluster centers `[0, +k0, −k0]`.
pub fn centers(p: &LameParameters) -> [f64; 3] {
    [0.0, p.k0(), -p.k0()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Assignment {
    /// Index into the centers.
    pub center: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clustering {
    pub centers: [f64; 3],
    pub delta: f64,
    pub assignments: Vec<Assignment>,
    /// Members within `delta` of each center.
    pub counts: [usize; 3],
    /// Indices of eigenvalues farther than `delta` from every center.
    pub outliers: Vec<usize>,
}

impl Clustering {
    pub fn outlier_fraction(&self) -> f64 {
        if self.assignments.is_empty() {
            0.0
        } else {
            self.outliers.len() as f64 / self.assignments.len() as f64
        }
    }

    pub fn inlier_fraction(&self) -> f64 {
        1.0 - self.outlier_fraction()
    }
}

/// Nearest-center assignment with outliers at distance `> delta`.
pub fn cluster(eigenvalues: &[f64], centers: [f64; 3], delta: f64) -> Result<Clustering, SpectralError> {
    if delta.is_nan() || delta < 0.0 {
        return Err(SpectralError::Config(format!("cluster radius must be nonnegative, got {delta}")));
    }
    let mut counts = [0; 3];
    let mut outliers = Vec::new();
    let assignments = eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let (center, distance) = centers
                .iter()
                .map(|c| (x - c).abs())
                .enumerate()
                .fold((0, f64::INFINITY), |best, (k, d)| if d < best.1 { (k, d) } else { best });
            if distance > delta {
                outliers.push(i);
            } else {
                counts[center] += 1;
            }
            Assignment { center, distance }
        })
        .collect();
    Ok(Clustering { centers, delta, assignments, counts, outliers })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpectrumMethod {
    /// Cholesky of the single-layer metric, symmetric eigensolver.
    Symmetrized,
    /// Nonsymmetric eigensolver, imaginary parts discarded.
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpectrumOptions {
    pub delta: Option<f64>,
    /// Also run the nonsymmetric solver to measure the imaginary defect.
    pub cross_check: bool,
    /// Where to write a matrix snapshot if an eigensolver fails.
    pub snapshot_dir: Option<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub resolution: usize,
    pub dim: usize,
    pub method: SpectrumMethod,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `max |Im λ|` of the nonsymmetric solve, when it was run.
    pub imaginary_defect: Option<f64>,
    /// `‖A − Aᵀ‖_F / ‖A‖_F` of the symmetrized matrix before symmetric projection.
    pub symmetry_defect: Option<f64>,
    pub spectral_radius: f64,
    pub clustering: Clustering,
}

fn frobenius(m: &Mat<f64>) -> f64 {
    (0..m.ncols()).map(|j| m.col_as_slice(j).iter().map(|v| v * v).sum::<f64>()).sum::<f64>().sqrt()
}

fn same_grid(k: &OperatorMatrix, s: &OperatorMatrix) -> Result<(), SpectralError> {
    if k.dim() != s.dim() || k.weights != s.weights {
        return Err(SpectralError::Shape(format!("dimensions {} and {}", k.dim(), s.dim())));
    }
    Ok(())
}

fn snapshot(k: &OperatorMatrix, dir: Option<&str>) -> Option<PathBuf> {
    let path = PathBuf::from(dir?).join(format!("failed-eigen-{}.bin", k.dim()));
    write_binary(&path, k).ok().map(|_| path)
}

/// Eigenvalues of `K` in the weighted L² frame.
///
/// With `H = −(S̃ + S̃ᵀ)/2 = L Lᵀ` the Plemelj identity `K̃ H = H K̃ᵀ` makes
/// `L⁻¹ K̃ L` symmetric. If `H` is not positive definite the plain
/// nonsymmetric spectrum is returned instead.
pub fn spectrum(k: &OperatorMatrix, s: &OperatorMatrix, p: &LameParameters, opts: &SpectrumOptions) -> Result<SpectrumReport, SpectralError> {
    same_grid(k, s)?;
    let n = k.dim();
    let kt = k.weighted();
    let st = s.weighted();
    let h = Mat::from_fn(n, n, |i, j| -0.5 * (st[(i, j)] + st[(j, i)]));
    let fail = || SpectralError::Eigen { dim: n, snapshot: snapshot(k, opts.snapshot_dir) };
    let plain = |kt: &Mat<f64>| -> Result<(Vec<f64>, f64), SpectralError> {
        let ev = kt.eigenvalues().map_err(|_| fail())?;
        let defect = ev.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
        let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.total_cmp(b));
        Ok((re, defect))
    };
    let (method, mut eigenvalues, symmetry_defect) = match h.llt(Side::Lower) {
        Ok(llt) => {
            let l = llt.L().to_owned();
            let mut a = &kt * &l;
            solve_lower_triangular_in_place(l.as_ref(), a.as_mut(), Par::rayon(0));
            let asym = Mat::from_fn(n, n, |i, j| a[(i, j)] - a[(j, i)]);
            let defect = frobenius(&asym) / frobenius(&a);
            let sym = Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
            let ev = sym.self_adjoint_eigenvalues(Side::Lower).map_err(|_| fail())?;
            (SpectrumMethod::Symmetrized, ev, Some(defect))
        }
        Err(_) => (SpectrumMethod::Plain, Vec::new(), None),
    };
    let mut imaginary_defect = None;
    if method == SpectrumMethod::Plain || opts.cross_check {
        let (re, defect) = plain(&kt)?;
        imaginary_defect = Some(defect);
        if method == SpectrumMethod::Plain {
            eigenvalues = re;
        }
    }
    eigenvalues.sort_by(|a, b| a.total_cmp(b));
    let spectral_radius = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let clustering = cluster(&eigenvalues, centers(p), opts.delta.unwrap_or_else(|| default_delta(p)))?;
    Ok(SpectrumReport { resolution: k.resolution, dim: n, method, eigenvalues, imaginary_defect, symmetry_defect, spectral_radius, clustering })
}

/// Matrix-free operator from apply / apply-transpose closures.
pub struct ClosureOperator<F, G> {
    pub dim: usize,
    pub forward: F,
    pub transpose: G,
}

impl<F, G> LinearOperator for ClosureOperator<F, G>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.forward)(x, y)
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        (self.transpose)(x, y)
    }
}

fn random_start(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect()
}

/// `‖K S − S Kᵀ‖₂ / ‖S‖₂` for matrices already in the weighted frame.
pub fn plemelj_defect(k: &Mat<f64>, s: &Mat<f64>, steps: usize, seed: u64) -> f64 {
    let n = k.nrows();
    let ko = DenseOperator(k);
    let so = DenseOperator(s);
    let d = ClosureOperator {
        dim: n,
        forward: |x: &[f64], y: &mut [f64]| {
            let mut t = vec![0.0; n];
            let mut u = vec![0.0; n];
            so.apply(x, &mut t);
            ko.apply(&t, y);
            ko.apply_transpose(x, &mut t);
            so.apply(&t, &mut u);
            y.iter_mut().zip(&u).for_each(|(a, b)| *a -= b);
        },
        transpose: |x: &[f64], y: &mut [f64]| {
            let mut t = vec![0.0; n];
            let mut u = vec![0.0; n];
            ko.apply_transpose(x, &mut t);
            so.apply_transpose(&t, y);
            so.apply_transpose(x, &mut t);
            ko.apply(&t, &mut u);
            y.iter_mut().zip(&u).for_each(|(a, b)| *a -= b);
        },
    };
    let start = random_start(n, seed);
    let ns = spectral_norm(&so, steps, &start);
    if ns == 0.0 {
        return 0.0;
    }
    spectral_norm(&d, steps, &start) / ns
}

/// Discrete Plemelj defect `‖K S − S Kᵀ‖₂ / ‖S‖₂` in the weighted inner product.
pub fn symmetrization_defect(k: &OperatorMatrix, s: &OperatorMatrix) -> Result<f64, SpectralError> {
    same_grid(k, s)?;
    Ok(plemelj_defect(&k.weighted(), &s.weighted(), 60, 0x5eed))
}

/// The four polynomials in `K` whose compactness is probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProbeKind {
    /// `K³ − k0² K`
    P3,
    /// `K (K − k0)`
    KMinus,
    /// `K (K + k0)`
    KPlus,
    /// `K² − k0²`
    SquareMinus,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 4] = [ProbeKind::P3, ProbeKind::KMinus, ProbeKind::KPlus, ProbeKind::SquareMinus];

    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::P3 => "p3(K)",
            ProbeKind::KMinus => "K(K-k0)",
            ProbeKind::KPlus => "K(K+k0)",
            ProbeKind::SquareMinus => "K^2-k0^2",
        }
    }

    /// The polynomial evaluated at a scalar.
    pub fn eval(self, t: f64, k0: f64) -> f64 {
        match self {
            ProbeKind::P3 => t * (t * t - k0 * k0),
            ProbeKind::KMinus => t * (t - k0),
            ProbeKind::KPlus => t * (t + k0),
            ProbeKind::SquareMinus => t * t - k0 * k0,
        }
    }

    /// `y = p(A) x` using only applications of `A`.
    fn apply(self, a: &dyn Fn(&[f64], &mut [f64]), k0: f64, x: &[f64], y: &mut [f64]) {
        let n = x.len();
        let mut ax = vec![0.0; n];
        a(x, &mut ax);
        let mut aax = vec![0.0; n];
        a(&ax, &mut aax);
        match self {
            ProbeKind::P3 => {
                a(&aax, y);
                y.iter_mut().zip(&ax).for_each(|(v, w)| *v -= k0 * k0 * w);
            }
            ProbeKind::KMinus => y.iter_mut().enumerate().for_each(|(i, v)| *v = aax[i] - k0 * ax[i]),
            ProbeKind::KPlus => y.iter_mut().enumerate().for_each(|(i, v)| *v = aax[i] + k0 * ax[i]),
            ProbeKind::SquareMinus => y.iter_mut().enumerate().for_each(|(i, v)| *v = aax[i] - k0 * k0 * x[i]),
        }
    }
}

/// Largest `count` singular values of `p(A)` for each probe polynomial, matrix-free.
pub fn probe_operator(op: &dyn LinearOperator, k0: f64, count: usize, steps: usize, seed: u64) -> Vec<(ProbeKind, Vec<f64>)> {
    let n = op.dim();
    let start = random_start(n, seed);
    let fwd = |x: &[f64], y: &mut [f64]| op.apply(x, y);
    let bwd = |x: &[f64], y: &mut [f64]| op.apply_transpose(x, y);
    ProbeKind::ALL
        .iter()
        .map(|&kind| {
            let p = ClosureOperator {
                dim: n,
                forward: |x: &[f64], y: &mut [f64]| kind.apply(&fwd, k0, x, y),
                transpose: |x: &[f64], y: &mut [f64]| kind.apply(&bwd, k0, x, y),
            };
            (kind, top_singular_values(&p, count, steps, &start))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CompactnessDiagnostic {
    pub kind: ProbeKind,
    pub tag: OperatorTag,
    pub resolutions: Vec<usize>,
    pub node_counts: Vec<usize>,
    /// Descending, one list per resolution.
    pub singular_values: Vec<Vec<f64>>,
    /// Probe index (1-based).
    pub index: usize,
    /// `σ_index` per resolution.
    pub sigma_index: Vec<f64>,
    /// Least-squares slope of `log σ_index` against `log N`.
    pub trend_slope: f64,
    /// `|p(λ)|` at a fixed fraction of the ranked spectrum, per resolution, when spectra were supplied.
    pub fraction_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOptions {
    pub index: usize,
    pub lanczos_steps: usize,
    /// Rank fraction for the spectrum-based diagnostic.
    pub fraction: f64,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { index: 20, lanczos_steps: 90, fraction: 0.1, seed: 20 }
    }
}

/// `|p(λ)|` at rank `⌈fraction·len⌉` (descending) over a real spectrum.
pub fn fraction_value(eigenvalues: &[f64], kind: ProbeKind, k0: f64, fraction: f64) -> f64 {
    let mut v: Vec<f64> = eigenvalues.iter().map(|&t| kind.eval(t, k0).abs()).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| b.total_cmp(a));
    let rank = ((fraction * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Singular-value trends of `p(K_h)` across at least three resolutions, in the weighted frame.
pub fn polynomial_compactness_probe(
    ks: &[&OperatorMatrix],
    p: &LameParameters,
    spectra: Option<&[&[f64]]>,
    opts: &ProbeOptions,
) -> Result<Vec<CompactnessDiagnostic>, SpectralError> {
    if ks.len() < 3 {
        return Err(SpectralError::Config(format!("compactness probe needs at least 3 resolutions, got {}", ks.len())));
    }
    if let Some(s) = spectra {
        if s.len() != ks.len() {
            return Err(SpectralError::Config("one spectrum per resolution is required".into()));
        }
    }
    let k0 = p.k0();
    let per_resolution: Vec<Vec<(ProbeKind, Vec<f64>)>> = ks
        .iter()
        .map(|k| probe_operator(&DenseOperator(&k.weighted()), k0, opts.index, opts.lanczos_steps.max(opts.index + 10), opts.seed))
        .collect();
    let node_counts: Vec<usize> = ks.iter().map(|k| k.node_count()).collect();
    let logn: Vec<f64> = node_counts.iter().map(|&n| (n as f64).ln()).collect();
    Ok(ProbeKind::ALL
        .iter()
        .enumerate()
        .map(|(slot, &kind)| {
            let singular_values: Vec<Vec<f64>> = per_resolution.iter().map(|r| r[slot].1.clone()).collect();
            let sigma_index: Vec<f64> = singular_values.iter().map(|s| s.get(opts.index - 1).copied().unwrap_or(0.0)).collect();
            let logs: Vec<f64> = sigma_index.iter().map(|v| v.max(1e-300).ln()).collect();
            CompactnessDiagnostic {
                kind,
                tag: OperatorTag::Composite,
                resolutions: ks.iter().map(|k| k.resolution).collect(),
                node_counts: node_counts.clone(),
                singular_values,
                index: opts.index,
                trend_slope: fit_slope(&logn, &logs),
                sigma_index,
                fraction_values: spectra.map(|s| s.iter().map(|ev| fraction_value(ev, kind, k0, opts.fraction)).collect()),
            }
        })
        .collect())
}
