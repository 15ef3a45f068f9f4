//! Dense assembly with a smoothly windowed polar patch around every target.
//!
//! Near part: polar Gauss rule in geodesic polar coordinates of the parameter
//! sphere (or the plane), with nodal values carried to the patch by
//! trigonometric interpolation. Far part: the native rule weighted by `1 − χ`.
//! Every kernel sees the same rule, so `K = k0·T − K2` holds to rounding.

use super::grid::{surface_frame, GridLayout, GridRow, QuadratureGrid};
use super::{NystromError, OperatorMatrix, OperatorTag};
use crate::geometry::{spherical_angles, spherical_frame, Surface};
use crate::lame::LameParameters;
use crate::linalg::{dirichlet_row, dirichlet_tables, gauss_legendre_on};
use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par};
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub radial_nodes: usize,
    /// Even, so that every angle has its antipode.
    pub angular_nodes: usize,
    /// Patch radius in grid spacings at resolution 16; the ratio grows like `√(n/16)`
    /// so that the window error keeps decreasing under refinement.
    pub patch_factor: f64,
    /// Use the regularized point rule instead of the polar patch.
    pub regularized: bool,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            radial_nodes: 24,
            angular_nodes: 80,
            patch_factor: 8.0,
            regularized: false,
        }
    }
}

impl QuadratureOptions {
    fn validate(&self) -> Result<(), NystromError> {
        if self.radial_nodes == 0 || self.angular_nodes < 2 || !self.angular_nodes.is_multiple_of(2) {
            return Err(NystromError::Config(format!(
                "need radial_nodes >= 1 and an even angular_nodes >= 2, got {} and {}",
                self.radial_nodes, self.angular_nodes
            )));
        }
        if !(self.patch_factor > 0.0) {
            return Err(NystromError::Config(format!("patch_factor must be positive, got {}", self.patch_factor)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// `K1`, principal value.
    T,
    /// `K2`, weakly singular.
    K2Part,
    /// Kelvin matrix.
    S,
    /// Conormal kernel evaluated in one piece.
    KDirect,
}

impl KernelFamily {
    fn channels(self) -> usize {
        match self {
            KernelFamily::T => 3,
            KernelFamily::K2Part | KernelFamily::S => 6,
            KernelFamily::KDirect => 9,
        }
    }

    fn tag(self) -> OperatorTag {
        match self {
            KernelFamily::T => OperatorTag::T,
            KernelFamily::K2Part => OperatorTag::K2Part,
            KernelFamily::S => OperatorTag::S,
            KernelFamily::KDirect => OperatorTag::K,
        }
    }
}

const ANTI: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
const SYM: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Matrices produced by one assembly pass.
#[derive(Debug, Clone, Default)]
pub struct Assembled {
    pub t: Option<OperatorMatrix>,
    pub k2: Option<OperatorMatrix>,
    pub s: Option<OperatorMatrix>,
    pub k_direct: Option<OperatorMatrix>,
}

impl Assembled {
    fn slot(&mut self, family: KernelFamily) -> &mut Option<OperatorMatrix> {
        match family {
            KernelFamily::T => &mut self.t,
            KernelFamily::K2Part => &mut self.k2,
            KernelFamily::S => &mut self.s,
            KernelFamily::KDirect => &mut self.k_direct,
        }
    }

    /// `K = k0·T − K2` from the split parts.
    pub fn k_split(&self) -> Option<OperatorMatrix> {
        let (t, k2) = (self.t.as_ref()?, self.k2.as_ref()?);
        let k0 = t.params.or(k2.params)?.k0();
        t.combine(k0, k2, -1.0, OperatorTag::K).ok()
    }
}

/// Smooth window: 1 at 0, 0 from 1 on, all derivatives vanishing at both ends.
pub fn cutoff(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        (2.0 * (-1.0 / t).exp() / (t - 1.0)).exp()
    }
}

/// Patch radius for a grid: parameter-sphere angle, or planar length.
pub fn patch_radius(grid: &QuadratureGrid, opts: &QuadratureOptions) -> f64 {
    let r = opts.patch_factor * grid.spacing * (grid.resolution() as f64 / 16.0).sqrt();
    match grid.layout {
        GridLayout::Sphere { .. } => r.min(0.5 * PI),
        GridLayout::Flat { .. } => r,
    }
}

/// Channel layout of a multi-family pass.
struct Plan {
    families: Vec<KernelFamily>,
    offsets: Vec<usize>,
    channels: usize,
    params: LameParameters,
}

impl Plan {
    fn new(families: &[KernelFamily], params: LameParameters) -> Self {
        let mut fam = Vec::new();
        for f in families {
            if !fam.contains(f) {
                fam.push(*f);
            }
        }
        let mut offsets = Vec::with_capacity(fam.len());
        let mut c = 0;
        for f in &fam {
            offsets.push(c);
            c += f.channels();
        }
        Self { families: fam, offsets, channels: c, params }
    }

    /// Kernel channels at `z = x − y` with target normal `n`; `eps2` regularizes `r²`.
    fn eval(&self, z: &Vector3<f64>, n: &Vector3<f64>, eps2: f64, scale: f64, out: &mut [f64]) {
        let p = &self.params;
        let r2 = z.norm_squared() + eps2;
        let r = r2.sqrt();
        let r3 = r2 * r;
        for (f, &off) in self.families.iter().zip(&self.offsets) {
            let o = &mut out[off..off + f.channels()];
            match f {
                KernelFamily::T => {
                    let c = scale / (2.0 * PI * r3);
                    for (slot, (i, j)) in o.iter_mut().zip(ANTI) {
                        *slot = c * (z[i] * n[j] - n[i] * z[j]);
                    }
                }
                KernelFamily::K2Part => {
                    let (c1, c2) = k2_coefficients(p, z, n, r3, r2);
                    for (slot, (i, j)) in o.iter_mut().zip(SYM) {
                        let d = if i == j { c1 } else { 0.0 };
                        *slot = scale * (d + c2 * z[i] * z[j]);
                    }
                }
                KernelFamily::S => {
                    let a = -p.alpha1() / (4.0 * PI * r);
                    let b = -p.alpha2() / (4.0 * PI * r3);
                    for (slot, (i, j)) in o.iter_mut().zip(SYM) {
                        let d = if i == j { a } else { 0.0 };
                        *slot = scale * (d + b * z[i] * z[j]);
                    }
                }
                KernelFamily::KDirect => {
                    let k0 = p.k0();
                    let c = k0 / (2.0 * PI * r3);
                    let (c1, c2) = k2_coefficients(p, z, n, r3, r2);
                    for i in 0..3 {
                        for j in 0..3 {
                            let k1 = c * (z[i] * n[j] - n[i] * z[j]);
                            let k2 = if i == j { c1 } else { 0.0 } + c2 * z[i] * z[j];
                            o[3 * i + j] = scale * (k1 - k2);
                        }
                    }
                }
            }
        }
    }
}

fn k2_coefficients(p: &LameParameters, z: &Vector3<f64>, n: &Vector3<f64>, r3: f64, r2: f64) -> (f64, f64) {
    let (lam, mu) = (p.lambda(), p.mu());
    let dn = z.dot(n);
    let c1 = -(mu / (2.0 * mu + lam)) * dn / (4.0 * PI * r3);
    let c2 = -(3.0 * (mu + lam) / (2.0 * mu + lam)) * dn / (4.0 * PI * r3 * r2);
    (c1, c2)
}

/// Trigonometric interpolation from the grid to arbitrary parameter points.
enum Interpolator<'a> {
    Sphere {
        n: usize,
        rows: &'a [GridRow],
        /// Distinct row lengths with their node tables.
        tables: Vec<(usize, Vec<f64>, Vec<f64>)>,
        row_table: Vec<usize>,
        /// cos and sin of θ_k/2 per row.
        half_angles: Vec<(f64, f64)>,
    },
    Flat {
        n: usize,
        side: f64,
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
}

impl<'a> Interpolator<'a> {
    fn new(grid: &'a QuadratureGrid) -> Self {
        match &grid.layout {
            GridLayout::Sphere { n, rows, .. } => {
                let mut tables: Vec<(usize, Vec<f64>, Vec<f64>)> = Vec::new();
                let mut row_table = Vec::with_capacity(rows.len());
                for row in rows.iter() {
                    let idx = match tables.iter().position(|t| t.0 == row.count) {
                        Some(i) => i,
                        None => {
                            let (c, s) = dirichlet_tables(row.count);
                            tables.push((row.count, c, s));
                            tables.len() - 1
                        }
                    };
                    row_table.push(idx);
                }
                let half_angles = rows.iter().map(|r| ((0.5 * r.theta).cos(), (0.5 * r.theta).sin())).collect();
                Interpolator::Sphere { n: *n, rows, tables, row_table, half_angles }
            }
            GridLayout::Flat { n, side, .. } => {
                let (cos, sin) = dirichlet_tables(*n);
                Interpolator::Flat { n: *n, side: *side, cos, sin }
            }
        }
    }

    /// Interpolation weights of all grid nodes at the point `u` (θ, φ) or (u1, u2).
    fn weights(&self, u: [f64; 2], scratch: &mut Vec<Vec<f64>>, out: &mut [f64]) {
        match self {
            Interpolator::Sphere { n, rows, tables, row_table, half_angles } => {
                if scratch.len() != tables.len() {
                    *scratch = tables.iter().map(|t| vec![0.0; t.0]).collect();
                }
                for (t, buf) in tables.iter().zip(scratch.iter_mut()) {
                    dirichlet_row(u[1], t.0, &t.1, &t.2, buf);
                }
                // D_2n(θ ∓ θ_k): the numerators sin(n(θ ∓ θ_k)) are ∓(−1)^k cos(nθ),
                // the half-angle tangents come from the row tables
                let m2 = (2 * n) as f64;
                let cn = (*n as f64 * u[0]).cos();
                let (sq, cq) = (0.5 * u[0]).sin_cos();
                for (k, ((row, &ti), &(ck, sk))) in rows.iter().zip(row_table).zip(half_angles).enumerate() {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let ratio = |s: f64, c: f64, num: f64| if s.abs() < 1e-13 { 1.0 } else { num * c / (m2 * s) };
                    let a = ratio(sq * ck - cq * sk, cq * ck + sq * sk, -sign * cn);
                    let b = ratio(sq * ck + cq * sk, cq * ck - sq * sk, sign * cn);
                    let d = &scratch[ti];
                    let m = row.count;
                    let half = m / 2;
                    let dst = &mut out[row.offset..row.offset + m];
                    for l in 0..m {
                        let lr = if l + half < m { l + half } else { l + half - m };
                        dst[l] = a * d[l] + b * d[lr];
                    }
                }
            }
            Interpolator::Flat { n, side, cos, sin } => {
                if scratch.len() != 2 {
                    *scratch = vec![vec![0.0; *n]; 2];
                }
                let k = 2.0 * PI / side;
                let (first, second) = scratch.split_at_mut(1);
                dirichlet_row(k * u[0], *n, cos, sin, &mut first[0]);
                dirichlet_row(k * u[1], *n, cos, sin, &mut second[0]);
                let (dx, dy) = (&first[0], &second[0]);
                for a in 0..*n {
                    let dst = &mut out[a * n..(a + 1) * n];
                    for b in 0..*n {
                        dst[b] = dx[a] * dy[b];
                    }
                }
            }
        }
    }
}

/// A patch node: parameter point, surface position and quadrature weight.
struct PatchNode {
    param: [f64; 2],
    position: Vector3<f64>,
    weight: f64,
}

struct Patch {
    radial: (Vec<f64>, Vec<f64>),
    angular: usize,
    rho: f64,
}

impl Patch {
    fn new(grid: &QuadratureGrid, opts: &QuadratureOptions) -> Self {
        let rho = patch_radius(grid, opts);
        Self {
            radial: gauss_legendre_on(opts.radial_nodes, 0.0, rho),
            angular: opts.angular_nodes,
            rho,
        }
    }

    fn nodes(&self, grid: &QuadratureGrid, surface: Option<&Surface>, i: usize) -> Vec<PatchNode> {
        let na = self.angular;
        let dalpha = 2.0 * PI / na as f64;
        let mut out = Vec::with_capacity(self.radial.0.len() * na);
        match surface {
            Some(surface) => {
                let [th, ph] = grid.chart_coords[i];
                let (w, et, ep) = spherical_frame(th, ph);
                for (&r, &gw) in self.radial.0.iter().zip(&self.radial.1) {
                    let (sr, cr) = r.sin_cos();
                    let base = gw * dalpha * sr * cutoff(r / self.rho);
                    for a in 0..na {
                        let (sa, ca) = (a as f64 * dalpha).sin_cos();
                        let wq = cr * w + sr * (ca * et + sa * ep);
                        let (tq, pq) = spherical_angles(&wq);
                        let (_, pt, jac) = surface_frame(surface, tq, pq);
                        out.push(PatchNode { param: [tq, pq], position: pt.position, weight: base * jac });
                    }
                }
            }
            None => {
                let u = grid.chart_coords[i];
                for (&r, &gw) in self.radial.0.iter().zip(&self.radial.1) {
                    let base = gw * dalpha * r * cutoff(r / self.rho);
                    for a in 0..na {
                        let (sa, ca) = (a as f64 * dalpha).sin_cos();
                        let q = [u[0] + r * ca, u[1] + r * sa];
                        out.push(PatchNode { param: q, position: Vector3::new(q[0], q[1], 0.0), weight: base });
                    }
                }
            }
        }
        out
    }

    /// Distance used by the far-field window.
    fn distance(grid: &QuadratureGrid, spherical: bool, i: usize, j: usize) -> f64 {
        if spherical {
            grid.directions[i].dot(&grid.directions[j]).clamp(-1.0, 1.0).acos()
        } else {
            (grid.directions[i] - grid.directions[j]).norm()
        }
    }
}

/// Row block of one target: `channels × N`, column-major.
fn target_row(
    grid: &QuadratureGrid,
    plan: &Plan,
    patch: &Patch,
    interp: &Interpolator,
    surface: Option<&Surface>,
    i: usize,
) -> Vec<f64> {
    let nn = grid.len();
    let ch = plan.channels;
    let x = grid.nodes[i];
    let nodes = patch.nodes(grid, surface, i);

    // kernel samples (ch × B) and interpolation weights stored transposed (N × B),
    // in blocks of B patch nodes so the weights stay in cache
    const BLOCK: usize = 256;
    let mut kq = vec![0.0; ch * BLOCK];
    let mut it = vec![0.0; nn * BLOCK];
    let mut scratch = Vec::new();
    let mut out = Mat::<f64>::zeros(ch, nn);
    for (b, block) in nodes.chunks(BLOCK).enumerate() {
        let m = block.len();
        for (c, node) in block.iter().enumerate() {
            let z = x.position - node.position;
            plan.eval(&z, &x.normal, 0.0, node.weight, &mut kq[c * ch..(c + 1) * ch]);
            interp.weights(node.param, &mut scratch, &mut it[c * nn..(c + 1) * nn]);
        }
        let k_ref = MatRef::from_column_major_slice(&kq[..ch * m], ch, m);
        let i_ref = MatRef::from_column_major_slice(&it[..nn * m], nn, m);
        let accum = if b == 0 { Accum::Replace } else { Accum::Add };
        matmul(out.as_mut(), accum, k_ref, i_ref.transpose(), 1.0, Par::Seq);
    }

    let spherical = surface.is_some();
    let mut buf = vec![0.0; ch];
    for j in 0..nn {
        if j == i {
            continue;
        }
        let d = Patch::distance(grid, spherical, i, j);
        let w = (1.0 - cutoff(d / patch.rho)) * grid.weights[j];
        if w == 0.0 {
            continue;
        }
        let z = x.position - grid.nodes[j].position;
        plan.eval(&z, &x.normal, 0.0, w, &mut buf);
        for (c, v) in buf.iter().enumerate() {
            out[(c, j)] += v;
        }
    }
    (0..nn).flat_map(|j| out.col_as_slice(j).to_vec()).collect()
}

/// Regularized point rule row: every node with `r² → r² + ε²`.
fn regularized_row(grid: &QuadratureGrid, plan: &Plan, eps: f64, i: usize) -> Vec<f64> {
    let nn = grid.len();
    let ch = plan.channels;
    let x = grid.nodes[i];
    let mut out = vec![0.0; ch * nn];
    let mut half = vec![0.0; ch];
    for j in 0..nn {
        let z = x.position - grid.nodes[j].position;
        let full = &mut out[j * ch..(j + 1) * ch];
        plan.eval(&z, &x.normal, eps * eps, grid.weights[j], full);
        plan.eval(&z, &x.normal, 0.25 * eps * eps, grid.weights[j], &mut half);
        for (v, h) in full.iter_mut().zip(&half) {
            *v = 2.0 * h - *v;
        }
    }
    out
}

fn scatter(plan: &Plan, mats: &mut [Mat<f64>], i: usize, row: &[f64], nn: usize) {
    let ch = plan.channels;
    for (fi, (f, &off)) in plan.families.iter().zip(&plan.offsets).enumerate() {
        let m = &mut mats[fi];
        for j in 0..nn {
            let v = &row[j * ch + off..j * ch + off + f.channels()];
            let (r0, c0) = (3 * i, 3 * j);
            match f {
                KernelFamily::T => {
                    for (val, (a, b)) in v.iter().zip(ANTI) {
                        m[(r0 + a, c0 + b)] = *val;
                        m[(r0 + b, c0 + a)] = -*val;
                    }
                    for a in 0..3 {
                        m[(r0 + a, c0 + a)] = 0.0;
                    }
                }
                KernelFamily::K2Part | KernelFamily::S => {
                    for (val, (a, b)) in v.iter().zip(SYM) {
                        m[(r0 + a, c0 + b)] = *val;
                        m[(r0 + b, c0 + a)] = *val;
                    }
                }
                KernelFamily::KDirect => {
                    for a in 0..3 {
                        for b in 0..3 {
                            m[(r0 + a, c0 + b)] = v[3 * a + b];
                        }
                    }
                }
            }
        }
    }
}

fn surface_of(grid: &QuadratureGrid) -> Option<Surface> {
    match &grid.layout {
        GridLayout::Sphere { surface, .. } => Some(*surface),
        GridLayout::Flat { .. } => None,
    }
}

/// Assemble the requested families in a single pass over targets.
pub fn assemble(
    grid: &QuadratureGrid,
    params: &LameParameters,
    families: &[KernelFamily],
    opts: &QuadratureOptions,
) -> Result<Assembled, NystromError> {
    opts.validate()?;
    let plan = Plan::new(families, *params);
    let nn = grid.len();
    let dim = 3 * nn;
    let mut mats: Vec<Mat<f64>> = plan.families.iter().map(|_| Mat::zeros(dim, dim)).collect();
    let surface = surface_of(grid);
    let patch = Patch::new(grid, opts);
    let interp = Interpolator::new(grid);
    let eps = grid.h;
    let chunk = 2 * rayon::current_num_threads().max(1);
    let mut start = 0;
    while start < nn {
        let end = (start + chunk).min(nn);
        let rows: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|i| {
                if opts.regularized {
                    regularized_row(grid, &plan, eps, i)
                } else {
                    target_row(grid, &plan, &patch, &interp, surface.as_ref(), i)
                }
            })
            .collect();
        for (k, row) in rows.iter().enumerate() {
            scatter(&plan, &mut mats, start + k, row, nn);
        }
        start = end;
    }
    let mut out = Assembled::default();
    for (f, m) in plan.families.iter().zip(mats) {
        *out.slot(*f) = Some(OperatorMatrix {
            tag: f.tag(),
            matrix: m,
            weights: grid.weights.clone(),
            params: Some(*params),
            resolution: grid.resolution(),
        });
    }
    Ok(out)
}

/// `T`, the principal-value operator with kernel `K1`.
pub fn assemble_t(grid: &QuadratureGrid, params: &LameParameters, opts: &QuadratureOptions) -> Result<OperatorMatrix, NystromError> {
    Ok(assemble(grid, params, &[KernelFamily::T], opts)?.t.expect("assembled"))
}

/// Single layer `S` with the Kelvin matrix.
pub fn assemble_s(grid: &QuadratureGrid, params: &LameParameters, opts: &QuadratureOptions) -> Result<OperatorMatrix, NystromError> {
    Ok(assemble(grid, params, &[KernelFamily::S], opts)?.s.expect("assembled"))
}

/// `K = k0·T − K2` from one pass.
pub fn assemble_k(grid: &QuadratureGrid, params: &LameParameters, opts: &QuadratureOptions) -> Result<OperatorMatrix, NystromError> {
    let a = assemble(grid, params, &[KernelFamily::T, KernelFamily::K2Part], opts)?;
    Ok(a.k_split().expect("both parts assembled"))
}

/// `K` with the conormal kernel evaluated directly.
pub fn assemble_k_direct(grid: &QuadratureGrid, params: &LameParameters, opts: &QuadratureOptions) -> Result<OperatorMatrix, NystromError> {
    Ok(assemble(grid, params, &[KernelFamily::KDirect], opts)?.k_direct.expect("assembled"))
}

/// Regularized point rule with Richardson extrapolation `2A(ε/2) − A(ε)`, `ε = h`.
pub fn assemble_regularized(
    grid: &QuadratureGrid,
    params: &LameParameters,
    families: &[KernelFamily],
) -> Result<Assembled, NystromError> {
    let opts = QuadratureOptions { regularized: true, ..Default::default() };
    assemble(grid, params, families, &opts)
}

/// Diagonal 3×3 block `A_ii` produced by the polar patch with `angular` directions.
pub fn pv_diagonal_block(
    grid: &QuadratureGrid,
    params: &LameParameters,
    i: usize,
    family: KernelFamily,
    angular: usize,
) -> Result<Matrix3<f64>, NystromError> {
    if i >= grid.len() {
        return Err(NystromError::Shape(format!("node {i} out of range {}", grid.len())));
    }
    let opts = QuadratureOptions { angular_nodes: angular, ..Default::default() };
    opts.validate()?;
    let plan = Plan::new(&[family], *params);
    let surface = surface_of(grid);
    let row = target_row(grid, &plan, &Patch::new(grid, &opts), &Interpolator::new(grid), surface.as_ref(), i);
    let mut block = [Mat::zeros(3, 3)];
    scatter(&plan, &mut block, 0, &row[i * plan.channels..(i + 1) * plan.channels], 1);
    let m = &block[0];
    Ok(Matrix3::from_fn(|a, b| m[(a, b)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nystrom::{build_flat_grid, build_surface_grid};

    fn lame() -> LameParameters {
        LameParameters::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff(0.0), 1.0);
        assert_eq!(cutoff(1.0), 0.0);
        assert!(cutoff(0.5) > 0.0 && cutoff(0.5) < 1.0);
        let mut prev = 1.0;
        for k in 1..100 {
            let c = cutoff(k as f64 / 100.0);
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn interpolation_reproduces_low_degree_fields() {
        let g = build_surface_grid(&Surface::unit_sphere(), 12).unwrap();
        let interp = Interpolator::new(&g);
        let f = |w: &Vector3<f64>| 1.0 + w.x - 0.5 * w.y * w.z + w.z * w.z;
        let vals: Vec<f64> = g.directions.iter().map(f).collect();
        let mut out = vec![0.0; g.len()];
        let mut scratch = Vec::new();
        for (th, ph) in [(0.03, 1.0), (1.1, 4.0), (2.9, -0.5), (1.5, 3.0)] {
            interp.weights([th, ph], &mut scratch, &mut out);
            let v: f64 = out.iter().zip(&vals).map(|(a, b)| a * b).sum();
            let (w, _, _) = spherical_frame(th, ph);
            assert!((v - f(&w)).abs() < 1e-12, "{th} {ph}: {v} vs {}", f(&w));
        }
    }

    #[test]
    fn split_matches_direct() {
        let g = build_surface_grid(&Surface::unit_sphere(), 8).unwrap();
        let opts = QuadratureOptions { radial_nodes: 6, angular_nodes: 16, ..Default::default() };
        let a = assemble(&g, &lame(), &[KernelFamily::T, KernelFamily::K2Part, KernelFamily::KDirect], &opts).unwrap();
        let ks = a.k_split().unwrap();
        let kd = a.k_direct.unwrap();
        let diff = ks.combine(1.0, &kd, -1.0, OperatorTag::Composite).unwrap();
        assert!(diff.max_abs() <= 1e-12 * kd.max_abs());
    }

    #[test]
    fn t_blocks_are_antisymmetric_and_s_blocks_symmetric() {
        let g = build_surface_grid(&Surface::unit_sphere(), 8).unwrap();
        let opts = QuadratureOptions { radial_nodes: 4, angular_nodes: 8, ..Default::default() };
        let a = assemble(&g, &lame(), &[KernelFamily::T, KernelFamily::S], &opts).unwrap();
        let (t, s) = (a.t.unwrap(), a.s.unwrap());
        for (i, j) in [(0, 0), (3, 17), (40, 2)] {
            let bt = t.block(i, j);
            let bs = s.block(i, j);
            assert!((bt + bt.transpose()).abs().max() == 0.0);
            assert!((bs - bs.transpose()).abs().max() == 0.0);
        }
    }

    #[test]
    fn sphere_single_layer_constant_density() {
        // ∫ Γ(x−y) dσ(y) = −(α1 + α2/3) I for |x| = 1, since ∫ z zᵀ/|z|³ dσ = (4π/3) I.
        let p = lame();
        let g = build_surface_grid(&Surface::unit_sphere(), 16).unwrap();
        let s = assemble_s(&g, &p, &QuadratureOptions::default()).unwrap();
        let nn = g.len();
        let mut sum = Matrix3::zeros();
        for j in 0..nn {
            sum += s.block(5, j);
        }
        let exact = -(p.alpha1() + p.alpha2() / 3.0);
        for a in 0..3 {
            assert!((sum[(a, a)] - exact).abs() < 5e-5, "{} vs {exact}", sum[(a, a)]);
        }
    }

    #[test]
    fn regularized_rule_is_finite() {
        let g = build_flat_grid(8, 1.0, true).unwrap();
        let a = assemble_regularized(&g, &lame(), &[KernelFamily::T, KernelFamily::S]).unwrap();
        assert!(a.t.unwrap().is_finite());
        assert!(a.s.unwrap().is_finite());
    }

    #[test]
    fn t_annihilates_constants_on_the_sphere() {
        // ∫ (x−y)/|x−y|³ dσ(y) = 2π x on the unit sphere, so both terms of K1 cancel.
        let g = build_surface_grid(&Surface::unit_sphere(), 16).unwrap();
        let t = assemble_t(&g, &lame(), &QuadratureOptions::default()).unwrap();
        for i in [0, 100, 333] {
            let mut sum = Matrix3::zeros();
            for j in 0..g.len() {
                sum += t.block(i, j);
            }
            assert!(sum.abs().max() < 2e-4, "{sum}");
        }
    }

    #[test]
    fn diagonal_block_is_antisymmetric_for_t() {
        let g = build_surface_grid(&Surface::unit_sphere(), 10).unwrap();
        let b = pv_diagonal_block(&g, &lame(), 7, KernelFamily::T, 32).unwrap();
        assert_eq!((b + b.transpose()).abs().max(), 0.0);
        assert!(pv_diagonal_block(&g, &lame(), 7, KernelFamily::T, 31).is_err());
    }
}
