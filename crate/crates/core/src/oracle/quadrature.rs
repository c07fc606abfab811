//! Midpoint-rule quadrature of divergences between bivariate densities.
//!
//! Cells cut by the edge of a bounded support are clipped exactly, so
//! rotated or sheared supports integrate without edge bias.
//! Rows are processed in fixed-size chunks and the chunk results are reduced
//! in index order, which keeps results independent of the thread count.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::{check_transform, AnalyticDensity2D, Box2, Mat2};
use super::IdentityReport;
use crate::error::{Error, Result};

pub const DEFAULT_STEP: f64 = 0.01;
/// Minimum probability mass the grid must capture.
pub const MIN_COVERAGE: f64 = 1.0 - 1e-4;

const ROW_CHUNK: usize = 16;
/// Density values below this contribute nothing to `p ln(p/q)`.
const P_FLOOR: f64 = 1e-300;

/// Uniform cell grid over a box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

fn cells(lo: f64, hi: f64, step: f64) -> Result<usize> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidConfig(format!("invalid grid interval [{lo}, {hi}]")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidConfig(format!("grid step must be positive, got {step}")));
    }
    Ok((((hi - lo) / step) - 1e-9).ceil().max(1.0) as usize)
}

impl Grid {
    /// Cells of width at most `step` tiling the box exactly.
    pub fn new(x: (f64, f64), y: (f64, f64), step: f64) -> Result<Self> {
        Ok(Self {
            x,
            y,
            nx: cells(x.0, x.1, step)?,
            ny: cells(y.0, y.1, step)?,
        })
    }

    pub fn for_density(p: &AnalyticDensity2D, step: f64) -> Result<Self> {
        Self::covering(&[p], step)
    }

    /// Union of the densities' extents. When any support is bounded the box
    /// is padded by one cell on each side, keeping support edges on cell
    /// boundaries.
    pub fn covering(densities: &[&AnalyticDensity2D], step: f64) -> Result<Self> {
        let mut b: Box2 = [(f64::INFINITY, f64::NEG_INFINITY); 2];
        for p in densities {
            p.validate()?;
            let e = p.extent();
            for i in 0..2 {
                b[i] = (b[i].0.min(e[i].0), b[i].1.max(e[i].1));
            }
        }
        let grid = Self::new(b[0], b[1], step)?;
        if !densities.iter().any(|p| p.has_bounded_support()) {
            return Ok(grid);
        }
        let (dx, dy) = (grid.dx(), grid.dy());
        Ok(Self {
            x: (b[0].0 - dx, b[0].1 + dx),
            y: (b[1].0 - dy, b[1].1 + dy),
            nx: grid.nx + 2,
            ny: grid.ny + 2,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.x.1 - self.x.0) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y.1 - self.y.0) / self.ny as f64
    }

    /// Same box, half the step.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx,
            ny: 2 * self.ny,
            ..*self
        }
    }

    fn x_edge(&self, j: usize) -> f64 {
        self.x.0 + j as f64 * self.dx()
    }

    fn y_edge(&self, k: usize) -> f64 {
        self.y.0 + k as f64 * self.dy()
    }

    pub fn x_mid(&self, j: usize) -> f64 {
        self.x.0 + (j as f64 + 0.5) * self.dx()
    }

    pub fn y_mid(&self, k: usize) -> f64 {
        self.y.0 + (k as f64 + 0.5) * self.dy()
    }
}

/// Visits quadrature nodes for one density: cell midpoints inside the
/// support, and for cells cut by a support edge the centroid of the clipped
/// cell weighted by its exact area.
struct Sampler<'a> {
    grid: &'a Grid,
    planes: Vec<([f64; 2], f64)>,
}

/// Area and centroid of the part of a rectangle satisfying every `a·x ≤ b`.
fn clip_cell(x: (f64, f64), y: (f64, f64), planes: &[([f64; 2], f64)]) -> Option<([f64; 2], f64)> {
    // work relative to the cell centre for accuracy
    let c = [0.5 * (x.0 + x.1), 0.5 * (y.0 + y.1)];
    let (hx, hy) = (0.5 * (x.1 - x.0), 0.5 * (y.1 - y.0));
    let mut poly = vec![[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]];
    for &(a, b) in planes {
        let b = b - a[0] * c[0] - a[1] * c[1];
        let f = |p: [f64; 2]| a[0] * p[0] + a[1] * p[1] - b;
        let mut out = Vec::with_capacity(poly.len() + 1);
        for i in 0..poly.len() {
            let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
            let (fp, fq) = (f(p), f(q));
            if fp <= 0.0 {
                out.push(p);
            }
            if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
                let t = fp / (fp - fq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        if out.len() < 3 {
            return None;
        }
        poly = out;
    }
    let (mut area2, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let cross = p[0] * q[1] - q[0] * p[1];
        area2 += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    if area2 <= 0.0 {
        return None;
    }
    Some(([c[0] + cx / (3.0 * area2), c[1] + cy / (3.0 * area2)], 0.5 * area2))
}

impl<'a> Sampler<'a> {
    fn new(grid: &'a Grid, p: &AnalyticDensity2D) -> Self {
        Self {
            grid,
            planes: p.support_halfplanes(),
        }
    }

    /// Calls `f(k, point, weight)` for every quadrature node in row `j`.
    fn visit_row(&self, j: usize, f: &mut impl FnMut(usize, [f64; 2], f64)) {
        let g = self.grid;
        let (dx, dy) = (g.dx(), g.dy());
        let w = dx * dy;
        let xm = g.x_mid(j);
        'cells: for k in 0..g.ny {
            let ym = g.y_mid(k);
            let mut cut = false;
            for (a, b) in &self.planes {
                let centre = a[0] * xm + a[1] * ym - b;
                let reach = 0.5 * (a[0].abs() * dx + a[1].abs() * dy);
                if centre - reach >= 0.0 {
                    continue 'cells;
                }
                cut |= centre + reach > 0.0;
            }
            if !cut {
                f(k, [xm, ym], w);
            } else if let Some((x, area)) = clip_cell((g.x_edge(j), g.x_edge(j + 1)), (g.y_edge(k), g.y_edge(k + 1)), &self.planes) {
                f(k, x, area);
            }
        }
    }

    /// Folds `visit(acc, j, k, point, weight)` over the grid; one
    /// accumulator per row chunk, returned in row order.
    fn sweep<A, I, V>(&self, init: I, visit: V) -> Vec<A>
    where
        A: Send,
        I: Fn(usize) -> A + Sync,
        V: Fn(&mut A, usize, usize, [f64; 2], f64) + Sync,
    {
        let nx = self.grid.nx;
        (0..nx.div_ceil(ROW_CHUNK))
            .into_par_iter()
            .map(|c| {
                let rows = c * ROW_CHUNK..((c + 1) * ROW_CHUNK).min(nx);
                let mut acc = init(rows.start);
                for j in rows {
                    self.visit_row(j, &mut |k, x, w| visit(&mut acc, j, k, x, w));
                }
                acc
            })
            .collect()
    }
}

fn check_coverage(mass: f64) -> Result<()> {
    if mass < MIN_COVERAGE {
        return Err(Error::InsufficientCoverage { mass });
    }
    Ok(())
}

/// Midpoint-rule `∫∫ p ln(p/q)`. Infinite when `q` vanishes on part of the
/// support of `p`.
pub fn quad_kld_2d(p: &AnalyticDensity2D, q: &AnalyticDensity2D, grid: &Grid) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    let parts = Sampler::new(grid, p).sweep(
        |_| [0.0; 2],
        |acc, _, _, x, w| {
            let lp = p.log_density(x);
            let pv = lp.exp();
            acc[0] += pv * w;
            if pv > P_FLOOR {
                acc[1] += pv * (lp - q.log_density(x)) * w;
            }
        },
    );
    let [mp, kld] = parts.iter().fold([0.0; 2], |s, a| [s[0] + a[0], s[1] + a[1]]);
    check_coverage(mp)?;
    check_coverage(mass(q, grid))?;
    Ok(kld)
}

/// Quadrature mass of `p` on the grid.
pub fn mass(p: &AnalyticDensity2D, grid: &Grid) -> f64 {
    Sampler::new(grid, p)
        .sweep(|_| 0.0, |acc, _, _, x, w| *acc += p.density(x) * w)
        .iter()
        .sum()
}

/// All terms of the decomposition of a density, by quadrature. The grid
/// density is renormalized to unit mass; marginals are its row and column
/// sums and the Gaussian projections use its mean and covariance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub mass: f64,
    pub mean: [f64; 2],
    pub cov: Mat2,
    pub mutual_information: f64,
    pub correlation: f64,
    pub joint_negentropy: f64,
    pub marginal_negentropies: [f64; 2],
    /// Divergence to the product of the marginal Gaussian projections.
    pub hypotenuse: f64,
}

struct Moments {
    row0: usize,
    mass: f64,
    first: [f64; 2],
    second: [f64; 3],
    rows: Vec<f64>,
    cols: Vec<f64>,
}

fn normal_log(mean: f64, var: f64, x: f64) -> f64 {
    let u = x - mean;
    -0.5 * u * u / var - 0.5 * (2.0 * PI * var).ln()
}

pub fn decompose(p: &AnalyticDensity2D, grid: &Grid) -> Result<Decomposition> {
    p.validate()?;
    let sampler = Sampler::new(grid, p);
    let ny = grid.ny;
    let parts = sampler.sweep(
        |row0| Moments {
            row0,
            mass: 0.0,
            first: [0.0; 2],
            second: [0.0; 3],
            rows: vec![0.0; ROW_CHUNK],
            cols: vec![0.0; ny],
        },
        |m, j, k, x, w| {
            let pw = p.density(x) * w;
            m.mass += pw;
            m.first[0] += pw * x[0];
            m.first[1] += pw * x[1];
            m.second[0] += pw * x[0] * x[0];
            m.second[1] += pw * x[0] * x[1];
            m.second[2] += pw * x[1] * x[1];
            m.rows[j - m.row0] += pw;
            m.cols[k] += pw;
        },
    );
    let mut mass = 0.0;
    let mut first = [0.0; 2];
    let mut second = [0.0; 3];
    let mut rows = vec![0.0; grid.nx];
    let mut cols = vec![0.0; ny];
    for m in &parts {
        mass += m.mass;
        for i in 0..2 {
            first[i] += m.first[i];
        }
        for i in 0..3 {
            second[i] += m.second[i];
        }
        for (r, v) in rows[m.row0..].iter_mut().zip(&m.rows) {
            *r += v;
        }
        for (c, v) in cols.iter_mut().zip(&m.cols) {
            *c += v;
        }
    }
    check_coverage(mass)?;
    let mean = [first[0] / mass, first[1] / mass];
    let cxy = second[1] / mass - mean[0] * mean[1];
    let cov = [
        [second[0] / mass - mean[0] * mean[0], cxy],
        [cxy, second[2] / mass - mean[1] * mean[1]],
    ];
    let det = cov[0][0] * cov[1][1] - cxy * cxy;
    if !(det > 0.0) {
        return Err(Error::SingularCovariance {
            ratio: det / (cov[0][0] * cov[1][1]),
        });
    }
    let inv = [[cov[1][1] / det, -cxy / det], [-cxy / det, cov[0][0] / det]];
    let gauss_const = -(2.0 * PI).ln() - 0.5 * det.ln();

    // marginal probabilities per cell and their log densities
    let (dx, dy) = (grid.dx(), grid.dy());
    for v in rows.iter_mut().chain(cols.iter_mut()) {
        *v /= mass;
    }
    let log_p1: Vec<f64> = rows.iter().map(|&r| (r / dx).ln()).collect();
    let log_p2: Vec<f64> = cols.iter().map(|&c| (c / dy).ln()).collect();
    let log_mass = mass.ln();

    let parts = sampler.sweep(
        |_| [0.0; 4],
        |acc, j, k, x, w| {
            let lp = p.log_density(x) - log_mass;
            let pv = lp.exp();
            if pv <= P_FLOOR {
                return;
            }
            let (u, v) = (x[0] - mean[0], x[1] - mean[1]);
            let gauss = gauss_const - 0.5 * (inv[0][0] * u * u + 2.0 * inv[0][1] * u * v + inv[1][1] * v * v);
            let diag = normal_log(mean[0], cov[0][0], x[0]) + normal_log(mean[1], cov[1][1], x[1]);
            let pw = pv * w;
            acc[0] += pw * lp;
            acc[1] += pw * (log_p1[j] + log_p2[k]);
            acc[2] += pw * gauss;
            acc[3] += pw * diag;
        },
    );
    let [neg_h, cross_prod, cross_gauss, cross_diag] = parts
        .iter()
        .fold([0.0; 4], |s, a| [s[0] + a[0], s[1] + a[1], s[2] + a[2], s[3] + a[3]]);

    let marginal = |probs: &[f64], logs: &[f64], mid: &dyn Fn(usize) -> f64, m: f64, var: f64| -> f64 {
        probs
            .iter()
            .zip(logs)
            .enumerate()
            .filter(|(_, (&q, _))| q > 0.0)
            .map(|(i, (&q, &l))| q * (l - normal_log(m, var, mid(i))))
            .sum()
    };
    let g1 = marginal(&rows, &log_p1, &|j| grid.x_mid(j), mean[0], cov[0][0]);
    let g2 = marginal(&cols, &log_p2, &|k| grid.y_mid(k), mean[1], cov[1][1]);

    Ok(Decomposition {
        mass,
        mean,
        cov,
        mutual_information: neg_h - cross_prod,
        correlation: 0.5 * (cov[0][0] * cov[1][1] / det).ln(),
        joint_negentropy: neg_h - cross_gauss,
        marginal_negentropies: [g1, g2],
        hypotenuse: neg_h - cross_diag,
    })
}

/// `I + ΣGᵢ = C + G`, with both right-triangle routes to the hypotenuse
/// reported as extra residual terms.
pub fn verify_four_point_identity(p: &AnalyticDensity2D, grid: &Grid) -> Result<IdentityReport> {
    let d = decompose(p, grid)?;
    let [g1, g2] = d.marginal_negentropies;
    let product_route = d.mutual_information + g1 + g2;
    let gaussian_route = d.correlation + d.joint_negentropy;
    let terms = BTreeMap::from([
        ("mutual_information".to_string(), d.mutual_information),
        ("correlation".to_string(), d.correlation),
        ("joint_negentropy".to_string(), d.joint_negentropy),
        ("marginal_negentropy_1".to_string(), g1),
        ("marginal_negentropy_2".to_string(), g2),
        ("hypotenuse".to_string(), d.hypotenuse),
        ("product_route_residual".to_string(), (d.hypotenuse - product_route).abs()),
        ("gaussian_route_residual".to_string(), (d.hypotenuse - gaussian_route).abs()),
        ("mass".to_string(), d.mass),
    ]);
    Ok(IdentityReport::new(product_route, gaussian_route, terms))
}

/// `|G(p) − G(M∘p)|` with the pushforward evaluated in closed form. Each
/// side gets its own grid of the given step.
pub fn gaussianity_invariance_check(p: &AnalyticDensity2D, transform: &Mat2, step: f64) -> Result<IdentityReport> {
    check_transform(transform)?;
    let q = p.transformed(*transform);
    let before = decompose(p, &Grid::for_density(p, step)?)?.joint_negentropy;
    let after = decompose(&q, &Grid::for_density(&q, step)?)?.joint_negentropy;
    let terms = BTreeMap::from([
        ("negentropy_before".to_string(), before),
        ("negentropy_after".to_string(), after),
    ]);
    Ok(IdentityReport::new(before, after, terms))
}

/// `KLD(p‖q) = KLD(M∘p ‖ M∘q)` by quadrature on both sides.
pub fn kld_invariance_check(
    p: &AnalyticDensity2D,
    q: &AnalyticDensity2D,
    transform: &Mat2,
    step: f64,
) -> Result<IdentityReport> {
    check_transform(transform)?;
    let (pm, qm) = (p.transformed(*transform), q.transformed(*transform));
    let before = quad_kld_2d(p, q, &Grid::covering(&[p, q], step)?)?;
    let after = quad_kld_2d(&pm, &qm, &Grid::covering(&[&pm, &qm], step)?)?;
    let terms = BTreeMap::from([
        ("kld_before".to_string(), before),
        ("kld_after".to_string(), after),
    ]);
    Ok(IdentityReport::new(before, after, terms))
}
