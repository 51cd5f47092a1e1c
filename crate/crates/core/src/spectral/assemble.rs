//! Dense discretizations of the walk operators.
//!
//! Every basis is a Nyström scheme: a row is the quadrature of the kernel
//! against interpolating cardinal functions, evaluated at one node. The
//! raw matrix `A` acts on nodal values; the stored `matrix` is
//! `D A D⁻¹` with `D = diag √(weight · density)`, averaged with its
//! transpose.

use crate::error::{invalid, Error, Result};
use crate::geometry::revolution::{BallVolumeTable, RevolutionTorus};
use crate::geometry::{sphere, Manifold, Point};
use crate::kernels::{KernelKind, BALL_ANGULAR, BALL_RADIAL};
use crate::linalg::Mat;
use crate::quad::GaussLegendre;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Tolerance handed to the ball-volume table used by curved assemblies.
const VOLUME_TABLE_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "basis")]
pub enum Basis {
    /// Piecewise-constant cells on a flat circle: `P_ij = |cell_j ∩ B(x_i, h)|/2h`.
    Cells { n: usize },
    /// Trigonometric interpolation on a uniform flat grid (`n` per axis).
    Grid { n: usize },
    /// Polynomial interpolation in `z = cos(colatitude)` on S², rotation-invariant part.
    Zonal { n: usize },
    /// One Fourier mode `m` in `φ` on a torus of revolution, trigonometric in `θ`.
    Azimuthal { n_theta: usize, m: usize },
}

impl Basis {
    pub fn label(&self) -> String {
        match self {
            Basis::Cells { n } => format!("cells-{n}"),
            Basis::Grid { n } => format!("grid-{n}"),
            Basis::Zonal { n } => format!("zonal-{n}"),
            Basis::Azimuthal { n_theta, m } => format!("azimuthal-{n_theta}-m{m}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelOperator {
    pub manifold: Manifold,
    pub h: f64,
    pub kind: KernelKind,
    pub basis: Basis,
    pub nodes: Vec<Point>,
    /// Quadrature weights of the nodes for `d_g x` (per unit `φ`-period on
    /// azimuthal blocks).
    pub weights: Vec<f64>,
    /// Stationary density at the nodes relative to `d_g x`.
    pub density: Vec<f64>,
    /// Holding probabilities (zero for the ball walk).
    pub atoms: Vec<f64>,
    /// Nodal operator, atoms included.
    pub raw: Mat,
    /// Symmetrized operator.
    pub matrix: Mat,
    pub asymmetry: f64,
    /// `max_i |(A·1)_i − 1|`, measured on the `m = 0` kernel mass.
    pub markov_defect: f64,
}

impl KernelOperator {
    /// Copies of each eigenvalue in the full spectrum.
    pub fn multiplicity(&self) -> usize {
        match self.basis {
            Basis::Azimuthal { m, .. } if m > 0 => 2,
            _ => 1,
        }
    }

    /// `‖f‖_∞` of the normalized eigenfunction behind column `k` of `vectors`.
    pub fn sup_norm(&self, vectors: &Mat, k: usize) -> f64 {
        let n = self.nodes.len();
        let vals: Vec<f64> = (0..n)
            .map(|i| vectors[(i, k)] / (self.weights[i] * self.density[i]).sqrt())
            .collect();
        let nodal = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        match self.basis {
            Basis::Zonal { .. } => {
                let z: Vec<f64> = self.nodes.iter().map(|p| p.0[2]).collect();
                let bw = barycentric_weights(&z);
                let ends = [1.0, -1.0].map(|e| lagrange_row(&z, &bw, e).iter().zip(&vals).map(|(l, v)| l * v).sum::<f64>());
                nodal.max(ends[0].abs()).max(ends[1].abs())
            }
            Basis::Azimuthal { m, .. } => nodal / if m == 0 { (2.0 * PI).sqrt() } else { PI.sqrt() },
            _ => nodal,
        }
    }
}

/// Even-`n` periodic cardinal functions on `[0, period)`:
/// `S_j(x) = sin(nπu/P) / (n tan(πu/P))`, `u = x − jP/n`.
#[derive(Debug, Clone)]
pub struct PeriodicCardinal {
    n: usize,
    period: f64,
    cos_b: Vec<f64>,
    sin_b: Vec<f64>,
}

impl PeriodicCardinal {
    pub fn new(n: usize, period: f64) -> Self {
        assert!(n >= 2 && n % 2 == 0, "cardinal basis needs an even node count");
        let (sin_b, cos_b) = (0..n).map(|j| (PI * j as f64 / n as f64).sin_cos()).unzip();
        Self { n, period, cos_b, sin_b }
    }

    /// All `S_j(x)` into `out`.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        let n = self.n as f64;
        let a = PI * x / self.period;
        let (sa, ca) = a.sin_cos();
        let num = (n * a).sin();
        for j in 0..self.n {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let den = sa * self.cos_b[j] - ca * self.sin_b[j];
            out[j] = if den.abs() > 1e-6 {
                sign * num * (ca * self.cos_b[j] + sa * self.sin_b[j]) / (n * den)
            } else {
                let u = PI * (x / self.period - j as f64 / n);
                if u.sin().abs() < 1e-300 {
                    1.0
                } else {
                    (n * u).sin() / (n * u.tan())
                }
            };
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.eval_into(x, &mut out);
        out
    }
}

fn barycentric_weights(z: &[f64]) -> Vec<f64> {
    (0..z.len())
        .map(|j| 1.0 / (0..z.len()).filter(|&k| k != j).map(|k| z[j] - z[k]).product::<f64>())
        .collect()
}

fn lagrange_row(z: &[f64], bw: &[f64], x: f64) -> Vec<f64> {
    if let Some(j) = z.iter().position(|&zj| zj == x) {
        let mut out = vec![0.0; z.len()];
        out[j] = 1.0;
        return out;
    }
    let terms: Vec<f64> = z.iter().zip(bw).map(|(&zj, &w)| w / (x - zj)).collect();
    let total: f64 = terms.iter().sum();
    terms.into_iter().map(|t| t / total).collect()
}

/// Finish an operator: conjugate, measure asymmetry, symmetrize.
fn finish(
    manifold: &Manifold,
    h: f64,
    kind: KernelKind,
    basis: Basis,
    nodes: Vec<Point>,
    weights: Vec<f64>,
    density: Vec<f64>,
    atoms: Vec<f64>,
    raw: Mat,
    masses: Vec<f64>,
) -> KernelOperator {
    let n = raw.rows;
    let scale: Vec<f64> = weights.iter().zip(&density).map(|(w, d)| (w * d).sqrt()).collect();
    let conj = Mat::from_fn(n, n, |i, j| scale[i] * raw[(i, j)] / scale[j]);
    let asymmetry = conj.asymmetry();
    let matrix = Mat::from_fn(n, n, |i, j| 0.5 * (conj[(i, j)] + conj[(j, i)]));
    let markov_defect = masses.iter().zip(&atoms).map(|(m, a)| (m + a - 1.0).abs()).fold(0.0, f64::max);
    KernelOperator { manifold: manifold.clone(), h, kind, basis, nodes, weights, density, atoms, raw, matrix, asymmetry, markov_defect }
}

/// Assemble `T_h` or `M_h` in the given basis.
pub fn assemble_operator(m: &Manifold, h: f64, kind: KernelKind, basis: Basis) -> Result<KernelOperator> {
    m.check_radius(h)?;
    match (m, basis) {
        (Manifold::FlatTorus(t), Basis::Cells { n }) => {
            if t.dim() != 1 {
                return Err(Error::Unsupported("cell basis is one-dimensional".into()));
            }
            let len = t.lengths()[0];
            let spacing = len / n as f64;
            if spacing > h / 8.0 {
                return Err(Error::Resolution { required: (8.0 * len / h).ceil() as usize, actual: n });
            }
            // Circulant: first row from interval overlaps.
            let row: Vec<f64> = (0..n)
                .map(|j| {
                    let c = crate::geometry::flat::wrap_delta(j as f64 * spacing, len);
                    let (lo, hi) = (c - 0.5 * spacing, c + 0.5 * spacing);
                    (hi.min(h) - lo.max(-h)).max(0.0) / (2.0 * h)
                })
                .collect();
            let raw = Mat::from_fn(n, n, |i, j| row[(j + n - i) % n]);
            let nodes = (0..n).map(|i| Point([i as f64 * spacing, 0.0, 0.0])).collect();
            let masses = vec![row.iter().sum(); n];
            Ok(finish(m, h, kind, basis, nodes, vec![spacing; n], vec![1.0; n], vec![0.0; n], raw, masses))
        }
        (Manifold::FlatTorus(t), Basis::Grid { n }) => flat_grid(m, t, h, kind, n),
        (Manifold::Sphere2, Basis::Zonal { n }) => sphere_zonal(m, h, kind, n),
        (Manifold::RevolutionTorus(_), Basis::Azimuthal { n_theta, m: mode }) => {
            Ok(assemble_azimuthal(m, h, kind, n_theta, &[mode])?.remove(0))
        }
        _ => Err(Error::Unsupported(format!("basis {} on {}", basis.label(), m.name()))),
    }
}

fn flat_grid(m: &Manifold, t: &crate::geometry::flat::FlatTorus, h: f64, kind: KernelKind, n: usize) -> Result<KernelOperator> {
    let d = t.dim();
    if d > 2 {
        return Err(Error::Unsupported("grid basis supports d ≤ 2".into()));
    }
    if n < 4 || n % 2 != 0 {
        return Err(invalid("n", "grid size must be even and at least 4"));
    }
    let lens = t.lengths().to_vec();
    let card: Vec<PeriodicCardinal> = lens.iter().map(|&l| PeriodicCardinal::new(n, l)).collect();
    // Enough Gauss points to integrate cardinals of bandwidth n/2 across the ball.
    let bandwidth = PI * n as f64 / lens.iter().cloned().fold(f64::INFINITY, f64::min);
    let radial = ((bandwidth * h) as usize + 32).max(64);
    let vol = t.ball_volume(h);
    let origin = Point([0.0; 3]);
    let size = n.pow(d as u32);
    // Translation invariance: row 0 determines everything.
    let row0: Vec<f64> = if d == 1 {
        let gl = GaussLegendre::new(radial);
        let mut row = vec![0.0; n];
        let mut buf = vec![0.0; n];
        for (s, w) in gl.on(-h, h) {
            card[0].eval_into(s.rem_euclid(lens[0]), &mut buf);
            row.iter_mut().zip(&buf).for_each(|(r, b)| *r += w / vol * b);
        }
        row
    } else {
        let nodes = m.ball_quadrature(origin, h, radial, 2 * radial)?;
        nodes
            .par_chunks(256)
            .map(|chunk| {
                let mut row = vec![0.0; size];
                let (mut b0, mut b1) = (vec![0.0; n], vec![0.0; n]);
                for q in chunk {
                    card[0].eval_into(q.point.0[0], &mut b0);
                    card[1].eval_into(q.point.0[1], &mut b1);
                    for (j0, &c0) in b0.iter().enumerate() {
                        let f = q.weight / vol * c0;
                        for (j1, &c1) in b1.iter().enumerate() {
                            row[j0 * n + j1] += f * c1;
                        }
                    }
                }
                row
            })
            .reduce(|| vec![0.0; size], |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            })
    };
    let raw = if d == 1 {
        Mat::from_fn(n, n, |i, j| row0[(j + n - i) % n])
    } else {
        Mat::from_fn(size, size, |i, j| {
            let (i0, i1, j0, j1) = (i / n, i % n, j / n, j % n);
            row0[((j0 + n - i0) % n) * n + (j1 + n - i1) % n]
        })
    };
    let nodes: Vec<Point> = (0..size)
        .map(|i| {
            if d == 1 {
                Point([i as f64 * lens[0] / n as f64, 0.0, 0.0])
            } else {
                Point([(i / n) as f64 * lens[0] / n as f64, (i % n) as f64 * lens[1] / n as f64, 0.0])
            }
        })
        .collect();
    let w = t.volume() / size as f64;
    let masses = vec![row0.iter().sum(); size];
    Ok(finish(m, h, kind, Basis::Grid { n }, nodes, vec![w; size], vec![1.0; size], vec![0.0; size], raw, masses))
}

fn sphere_zonal(m: &Manifold, h: f64, kind: KernelKind, n: usize) -> Result<KernelOperator> {
    if n < 2 {
        return Err(invalid("n", "need at least two nodes"));
    }
    let gl = GaussLegendre::new(n);
    let z = gl.nodes.clone();
    let bw = barycentric_weights(&z);
    let cap = sphere::cap_area(h);
    let nodes: Vec<Point> = z.iter().map(|&zi| Point([(1.0 - zi * zi).sqrt(), 0.0, zi])).collect();
    let rows: Vec<Result<Vec<f64>>> = nodes
        .par_iter()
        .map(|&x| {
            let mut row = vec![0.0; n];
            for q in m.ball_quadrature(x, h, BALL_RADIAL, BALL_ANGULAR)? {
                let l = lagrange_row(&z, &bw, q.point.0[2].clamp(-1.0, 1.0));
                row.iter_mut().zip(&l).for_each(|(r, v)| *r += q.weight / cap * v);
            }
            Ok(row)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let masses = rows.iter().map(|r| r.iter().sum()).collect();
    let raw = Mat::from_fn(n, n, |i, j| rows[i][j]);
    let weights = gl.weights.iter().map(|w| 2.0 * PI * w).collect();
    Ok(finish(m, h, kind, Basis::Zonal { n }, nodes, weights, vec![1.0; n], vec![0.0; n], raw, masses))
}

/// Quadrature nodes for one row of a torus-of-revolution block.
struct RowNodes {
    theta: Vec<f64>,
    phi: Vec<f64>,
    /// `w_q · kernel(x, y_q)`.
    kernel: Vec<f64>,
    /// `w_q · (1/V_x − min(1/V_x, 1/V_q))`, the ball-walk minus Metropolis kernel.
    excess: Vec<f64>,
}

fn row_nodes(m: &Manifold, table: &BallVolumeTable, h: f64, theta: f64, kind: KernelKind) -> Result<RowNodes> {
    let x = Point([theta, 0.0, 0.0]);
    let vx = table.eval(theta);
    let split = |p: Point| table.eval(p.0[0]) - vx;
    let nodes = m.ball_quadrature_split(x, h, BALL_RADIAL, BALL_ANGULAR, Some(split))?;
    let mut out = RowNodes { theta: vec![], phi: vec![], kernel: vec![], excess: vec![] };
    for q in nodes {
        let vq = table.eval(q.point.0[0]);
        let metro = (1.0 / vx).min(1.0 / vq);
        out.theta.push(q.point.0[0]);
        out.phi.push(q.point.0[1]);
        out.kernel.push(q.weight * if kind == KernelKind::Metropolis { metro } else { 1.0 / vx });
        out.excess.push(q.weight * (1.0 / vx - metro));
    }
    Ok(out)
}

fn revolution_setup(m: &Manifold, h: f64, n_theta: usize) -> Result<(&RevolutionTorus, BallVolumeTable, Vec<f64>, Vec<f64>)> {
    let Manifold::RevolutionTorus(t) = m else {
        return Err(Error::Unsupported("azimuthal blocks need a torus of revolution".into()));
    };
    if n_theta < 8 || n_theta % 2 != 0 {
        return Err(invalid("n_theta", "must be even and at least 8"));
    }
    m.check_radius(h)?;
    let table = BallVolumeTable::new(t, h, VOLUME_TABLE_TOL)?;
    let thetas: Vec<f64> = (0..n_theta).map(|i| 2.0 * PI * i as f64 / n_theta as f64).collect();
    let weights = thetas.iter().map(|&th| t.minor() * t.rho(th) * 2.0 * PI / n_theta as f64).collect();
    Ok((t, table, thetas, weights))
}

/// The `φ`-Fourier blocks `m ∈ modes` of the operator on a torus of
/// revolution, sharing one set of row quadratures.
pub fn assemble_azimuthal(m: &Manifold, h: f64, kind: KernelKind, n_theta: usize, modes: &[usize]) -> Result<Vec<KernelOperator>> {
    let (_, table, thetas, weights) = revolution_setup(m, h, n_theta)?;
    let card = PeriodicCardinal::new(n_theta, 2.0 * PI);
    let rows: Vec<Result<(Vec<Vec<f64>>, f64, f64)>> = thetas
        .par_iter()
        .map(|&th| {
            let rn = row_nodes(m, &table, h, th, kind)?;
            let mut blocks = vec![vec![0.0; n_theta]; modes.len()];
            let mut buf = vec![0.0; n_theta];
            for q in 0..rn.theta.len() {
                card.eval_into(rn.theta[q], &mut buf);
                for (b, &mode) in blocks.iter_mut().zip(modes) {
                    let f = rn.kernel[q] * (mode as f64 * rn.phi[q]).cos();
                    b.iter_mut().zip(&buf).for_each(|(r, c)| *r += f * c);
                }
            }
            let mass: f64 = rn.kernel.iter().sum();
            let atom = if kind == KernelKind::Metropolis { rn.excess.iter().sum() } else { 0.0 };
            Ok((blocks, mass, atom))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let masses: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let atoms: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let density: Vec<f64> = match kind {
        KernelKind::Metropolis => vec![1.0; n_theta],
        KernelKind::BallWalk => {
            let c = PI * h * h;
            thetas.iter().map(|&th| table.eval(th) / c).collect()
        }
    };
    let nodes: Vec<Point> = thetas.iter().map(|&th| Point([th, 0.0, 0.0])).collect();
    Ok(modes
        .iter()
        .enumerate()
        .map(|(b, &mode)| {
            let raw = Mat::from_fn(n_theta, n_theta, |i, j| rows[i].0[b][j] + if i == j { atoms[i] } else { 0.0 });
            finish(
                m,
                h,
                kind,
                Basis::Azimuthal { n_theta, m: mode },
                nodes.clone(),
                weights.clone(),
                density.clone(),
                atoms.clone(),
                raw,
                masses.clone(),
            )
        })
        .collect())
}

/// `T_h − M_h` on the `φ`-modes `modes`, in `L²(d_g x)`-orthonormal
/// coordinates. Built from `∫ (1/V_x − min(1/V_x, 1/V_y)) (f(y) − f(x)) dy`
/// so the two nearly equal operators are never subtracted.
pub fn azimuthal_difference(m: &Manifold, h: f64, n_theta: usize, modes: &[usize]) -> Result<Vec<Mat>> {
    let (_, table, thetas, weights) = revolution_setup(m, h, n_theta)?;
    let card = PeriodicCardinal::new(n_theta, 2.0 * PI);
    let rows: Vec<Result<Vec<Vec<f64>>>> = thetas
        .par_iter()
        .enumerate()
        .map(|(i, &th)| {
            let rn = row_nodes(m, &table, h, th, KernelKind::Metropolis)?;
            let mut blocks = vec![vec![0.0; n_theta]; modes.len()];
            let mut buf = vec![0.0; n_theta];
            for q in 0..rn.theta.len() {
                if rn.excess[q] == 0.0 {
                    continue;
                }
                card.eval_into(rn.theta[q], &mut buf);
                for (b, &mode) in blocks.iter_mut().zip(modes) {
                    let f = rn.excess[q] * (mode as f64 * rn.phi[q]).cos();
                    b.iter_mut().zip(&buf).for_each(|(r, c)| *r += f * c);
                }
            }
            let total: f64 = rn.excess.iter().sum();
            for b in blocks.iter_mut() {
                b[i] -= total;
            }
            Ok(blocks)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let scale: Vec<f64> = weights.iter().map(|w: &f64| w.sqrt()).collect();
    Ok((0..modes.len())
        .map(|b| Mat::from_fn(n_theta, n_theta, |i, j| scale[i] * rows[i][b][j] / scale[j]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinals_interpolate_and_sum_to_one() {
        let c = PeriodicCardinal::new(16, 3.0);
        for j in 0..16 {
            let v = c.eval(3.0 * j as f64 / 16.0);
            for (k, x) in v.iter().enumerate() {
                assert!((x - if k == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let v = c.eval(0.377);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        // Reproduces a band-limited function between nodes.
        let f = |x: f64| (2.0 * PI * 3.0 * x / 3.0).cos();
        let interp: f64 = (0..16).map(|j| f(3.0 * j as f64 / 16.0) * v[j]).sum();
        assert!((interp - f(0.377)).abs() < 1e-12);
    }

    #[test]
    fn lagrange_is_exact_on_polynomials() {
        let z = GaussLegendre::new(8).nodes;
        let bw = barycentric_weights(&z);
        let row = lagrange_row(&z, &bw, 0.3);
        let p: f64 = z.iter().zip(&row).map(|(x, l)| x.powi(5) * l).sum();
        assert!((p - 0.3f64.powi(5)).abs() < 1e-13);
    }
}
