//! Freudenthal/Kuhn triangulations of axis-aligned boxes `[0, e_1] × … × [0, e_d]`.
//!
//! The box is cut into cubes of side `h = min(extents) / cells`; each cube is
//! split into `d!` simplices, one per permutation `π` of the axes, with vertices
//! `c, c + h e_π(1), c + h e_π(1) + h e_π(2), …`. The triangulation is nested
//! under `cells → 2 · cells`.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::small::{self, Mat3};

/// Affine map `x = P x̂ + q` from the reference simplex onto an element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMap {
    pub p: Mat3,
    pub q: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct Mesh {
    d: usize,
    extents: Vec<f64>,
    counts: Vec<usize>,
    vertices: Vec<[f64; 3]>,
    simplices: Vec<[usize; 4]>,
    boundary_mask: Vec<bool>,
    element_maps: Vec<ElementMap>,
    h: f64,
    rho: f64,
    h_min_sv: f64,
    volume: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStats {
    pub h: f64,
    pub rho: f64,
    pub volume: f64,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub m: usize,
    /// Elements whose volume falls outside `[ĥ^d/d!, ρ^d ĥ^d/d!]`, where `ĥ` is
    /// the smallest singular value over all element maps.
    pub weight_bound_violations: usize,
}

const PERMS_1: [[usize; 3]; 1] = [[0, 0, 0]];
const PERMS_2: [[usize; 3]; 2] = [[0, 1, 0], [1, 0, 0]];
const PERMS_3: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn factorial(d: usize) -> usize {
    (1..=d).product()
}

impl Mesh {
    /// Builds the Kuhn triangulation of the box with the given extents.
    ///
    /// Every extent must be an integer multiple of `min(extents) / cells`.
    pub fn build_box(extents: &[f64], cells: usize, d: usize) -> Result<Mesh> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidConfig(format!("dimension must be 1, 2 or 3, got {d}")));
        }
        if cells == 0 {
            return Err(Error::InvalidConfig("cells per axis must be at least 1".into()));
        }
        if extents.len() != d {
            return Err(Error::InvalidConfig(format!(
                "expected {d} extents, got {}",
                extents.len()
            )));
        }
        if extents.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::InvalidConfig("extents must be positive and finite".into()));
        }
        let h = extents.iter().copied().fold(f64::INFINITY, f64::min) / cells as f64;
        let mut counts = Vec::with_capacity(d);
        for &e in extents {
            let k = (e / h).round();
            if (k * h - e).abs() > 1e-9 * e {
                return Err(Error::InvalidConfig(format!(
                    "extent {e} is not a multiple of the cell side {h}"
                )));
            }
            counts.push(k as usize);
        }

        let stride = |counts: &[usize]| -> [usize; 3] {
            let mut s = [0; 3];
            let mut acc = 1;
            for j in 0..d {
                s[j] = acc;
                acc *= counts[j] + 1;
            }
            s
        };
        let strides = stride(&counts);
        let n_vertices: usize = counts.iter().map(|c| c + 1).product();

        let mut vertices = Vec::with_capacity(n_vertices);
        let mut boundary_mask = Vec::with_capacity(n_vertices);
        for v in 0..n_vertices {
            let mut x = [0.0; 3];
            let mut on_boundary = false;
            for j in 0..d {
                let idx = (v / strides[j]) % (counts[j] + 1);
                x[j] = if idx == counts[j] { extents[j] } else { idx as f64 * h };
                on_boundary |= idx == 0 || idx == counts[j];
            }
            vertices.push(x);
            boundary_mask.push(on_boundary);
        }

        let perms: &[[usize; 3]] = match d {
            1 => &PERMS_1,
            2 => &PERMS_2,
            _ => &PERMS_3,
        };
        let n_cells: usize = counts.iter().product();
        let mut simplices = Vec::with_capacity(n_cells * perms.len());
        for cell in 0..n_cells {
            let mut rem = cell;
            let mut base = 0;
            for j in 0..d {
                let idx = rem % counts[j];
                rem /= counts[j];
                base += idx * strides[j];
            }
            for perm in perms {
                let mut s = [0usize; 4];
                s[0] = base;
                for k in 0..d {
                    s[k + 1] = s[k] + strides[perm[k]];
                }
                simplices.push(s);
            }
        }

        let mut mesh = Mesh {
            d,
            extents: extents.to_vec(),
            counts,
            vertices,
            simplices,
            boundary_mask,
            element_maps: Vec::new(),
            h,
            rho: 1.0,
            h_min_sv: h,
            volume: extents.iter().product(),
        };
        mesh.compute_maps()?;
        Ok(mesh)
    }

    /// Fills the element maps, choosing for each simplex the origin vertex that
    /// maximizes the smallest singular value of `P`.
    fn compute_maps(&mut self) -> Result<()> {
        let d = self.d;
        let mut maps = Vec::with_capacity(self.simplices.len());
        let mut sv_min = f64::INFINITY;
        let mut sv_max: f64 = 0.0;
        for (k, simplex) in self.simplices.iter_mut().enumerate() {
            let mut best: Option<(f64, f64, [usize; 4])> = None;
            for origin in 0..=d {
                let mut order = [0usize; 4];
                order[0] = simplex[origin];
                let mut pos = 1;
                for r in 0..=d {
                    if r != origin {
                        order[pos] = simplex[r];
                        pos += 1;
                    }
                }
                let p = edge_matrix(&self.vertices, &order, d);
                let (lo, hi) = small::singular_range(&p, d);
                if best.is_none_or(|(b, _, _)| lo > b * (1.0 + 1e-12)) {
                    best = Some((lo, hi, order));
                }
            }
            let (lo, hi, order) = best.unwrap();
            *simplex = order;
            let p = edge_matrix(&self.vertices, &order, d);
            let det = small::det(&p, d);
            if !(det.abs() > 0.0) {
                return Err(Error::DegenerateElement { index: k, det });
            }
            sv_min = sv_min.min(lo);
            sv_max = sv_max.max(hi);
            maps.push(ElementMap {
                p,
                q: self.vertices[order[0]],
            });
        }
        self.element_maps = maps;
        self.h_min_sv = sv_min;
        self.rho = (sv_max / sv_min).max(1.0);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    /// Cells per axis.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Vertex coordinates; entries beyond `dim()` are zero.
    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    /// Vertex indices of each simplex; entries beyond `dim() + 1` are unused.
    pub fn simplices(&self) -> &[[usize; 4]] {
        &self.simplices
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary_mask
    }

    pub fn element_maps(&self) -> &[ElementMap] {
        &self.element_maps
    }

    /// Cell side.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Ratio of the largest to the smallest singular value over all element maps.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Smallest side of the bounding box.
    pub fn width(&self) -> f64 {
        self.extents.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.simplices.len()
    }

    pub fn n_interior(&self) -> usize {
        self.boundary_mask.iter().filter(|b| !**b).count()
    }

    /// `|det P| / d!` for element `k`.
    pub fn element_volume(&self, k: usize) -> f64 {
        small::det(&self.element_maps[k].p, self.d).abs() / factorial(self.d) as f64
    }

    pub fn stats(&self) -> MeshStats {
        let d = self.d as i32;
        let fact = factorial(self.d) as f64;
        let lo = self.h_min_sv.powi(d) / fact;
        let hi = (self.rho * self.h_min_sv).powi(d) / fact;
        let violations = (0..self.n_elements())
            .filter(|&k| {
                let w = self.element_volume(k);
                w < lo * (1.0 - 1e-12) || w > hi * (1.0 + 1e-12)
            })
            .count();
        let n_interior = self.n_interior();
        MeshStats {
            h: self.h,
            rho: self.rho,
            volume: self.volume,
            n_interior,
            n_boundary: self.n_vertices() - n_interior,
            m: self.n_elements(),
            weight_bound_violations: violations,
        }
    }

    /// Barycenter of element `k`.
    pub fn centroid(&self, k: usize) -> [f64; 3] {
        let mut c = [0.0; 3];
        for &v in &self.simplices[k][..=self.d] {
            for j in 0..self.d {
                c[j] += self.vertices[v][j];
            }
        }
        c.iter_mut().for_each(|x| *x /= (self.d + 1) as f64);
        c
    }

    /// Nodal values of `f` at every vertex.
    pub fn interpolate(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.vertices.iter().map(|x| f(&x[..self.d])).collect()
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| self.boundary_mask[v]).collect()
    }

    /// Every interior vertex index.
    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| !self.boundary_mask[v]).collect()
    }
}

fn edge_matrix(vertices: &[[f64; 3]], order: &[usize; 4], d: usize) -> Mat3 {
    let mut p = [[0.0; 3]; 3];
    let x0 = vertices[order[0]];
    for c in 0..d {
        let xc = vertices[order[c + 1]];
        for r in 0..d {
            p[r][c] = xc[r] - x0[r];
        }
    }
    p
}
