//! Periodic cubic lattice geometry: vertex indexing, torus displacements and
//! distances, and dissection into congruent sub-boxes.
//!
//! Vertices of the d-dimensional torus with edge L are numbered row-major
//! (last axis fastest), so ids are reproducible bit-for-bit across runs.

use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Distance norm used on minimal-image displacements.
///
/// `Euclidean` is the default everywhere; `Linf` is selectable by config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    Euclidean,
    Linf,
}

impl Default for Norm {
    fn default() -> Self {
        Norm::Euclidean
    }
}

/// A periodic d-dimensional cubic lattice with `N = L^d` vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    d: usize,
    l: i64,
    n_vertices: usize,
}

impl Lattice {
    pub fn new(d: usize, l: i64) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("lattice dimension must be >= 1"));
        }
        if l < 1 {
            return Err(Error::domain("lattice edge must be >= 1"));
        }
        let mut n: usize = 1;
        for _ in 0..d {
            n = n
                .checked_mul(l as usize)
                .ok_or_else(|| Error::domain("vertex count L^d overflows"))?;
        }
        Ok(Lattice { d, l, n_vertices: n })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn edge(&self) -> i64 {
        self.l
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n_vertices {
            Ok(())
        } else {
            Err(Error::domain("vertex id out of range"))
        }
    }

    /// Row-major coordinates of a vertex id, each in `[0, L)`.
    pub fn coords(&self, v: usize) -> Vec<i64> {
        debug_assert!(v < self.n_vertices);
        let mut c = alloc::vec![0i64; self.d];
        let mut rem = v as i64;
        for k in (0..self.d).rev() {
            c[k] = rem % self.l;
            rem /= self.l;
        }
        c
    }

    /// Vertex id for coordinates; components wrap modulo L.
    pub fn vertex(&self, coords: &[i64]) -> usize {
        debug_assert_eq!(coords.len(), self.d);
        let mut v: i64 = 0;
        for &c in coords {
            v = v * self.l + c.rem_euclid(self.l);
        }
        v as usize
    }

    /// Translates a vertex by a coordinate shift (componentwise mod L).
    pub fn translate(&self, v: usize, shift: &[i64]) -> usize {
        let mut c = self.coords(v);
        for (ck, sk) in c.iter_mut().zip(shift) {
            *ck += sk;
        }
        self.vertex(&c)
    }

    /// Minimal-image representative of a coordinate difference, in
    /// `(-L/2, L/2]`.
    pub fn min_image(&self, delta: i64) -> i64 {
        let r = delta.rem_euclid(self.l);
        if 2 * r > self.l {
            r - self.l
        } else {
            r
        }
    }

    /// Minimal-image coordinate difference `b - a`; adding it to `a`
    /// (mod L) yields `b`.
    pub fn torus_displacement(&self, a: usize, b: usize) -> Result<Vec<i64>> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        let ca = self.coords(a);
        let cb = self.coords(b);
        Ok(ca
            .iter()
            .zip(&cb)
            .map(|(&x, &y)| self.min_image(y - x))
            .collect())
    }

    /// Norm of the minimal-image displacement between two vertices.
    pub fn min_image_distance(&self, a: usize, b: usize, norm: Norm) -> Result<f64> {
        let disp = self.torus_displacement(a, b)?;
        Ok(displacement_norm(&disp, norm))
    }

    /// All 2d signed unit shifts, in a fixed order (axis major, +1 before -1).
    pub fn unit_shifts(&self) -> Vec<Vec<i64>> {
        let mut shifts = Vec::with_capacity(2 * self.d);
        for axis in 0..self.d {
            for sign in [1i64, -1] {
                let mut s = alloc::vec![0i64; self.d];
                s[axis] = sign;
                shifts.push(s);
            }
        }
        shifts
    }
}

/// Norm of an integer displacement vector.
pub fn displacement_norm(disp: &[i64], norm: Norm) -> f64 {
    match norm {
        Norm::Euclidean => {
            let sq: i64 = disp.iter().map(|&x| x * x).sum();
            math::sqrt(sq as f64)
        }
        Norm::Linf => disp.iter().map(|&x| x.abs()).max().unwrap_or(0) as f64,
    }
}

/// A dissection of the lattice into `N̄ = L̄^d` congruent boxes of edge `ℓ̄`,
/// each holding `n̄ = ℓ̄^d` vertices. Requires `ℓ̄ | L`; no padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dissection {
    lat: Lattice,
    ell_bar: i64,
    coarse: Lattice,
    n_bar: usize,
}

impl Dissection {
    pub fn new(lat: Lattice, ell_bar: i64) -> Result<Self> {
        if ell_bar < 1 {
            return Err(Error::domain("box edge must be >= 1"));
        }
        if lat.edge() % ell_bar != 0 {
            return Err(Error::domain("box edge must divide the lattice edge"));
        }
        let coarse = Lattice::new(lat.dim(), lat.edge() / ell_bar)?;
        let mut n_bar: usize = 1;
        for _ in 0..lat.dim() {
            n_bar *= ell_bar as usize;
        }
        Ok(Dissection {
            lat,
            ell_bar,
            coarse,
            n_bar,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lat
    }

    /// The torus of boxes: edge `L̄ = L/ℓ̄`, one vertex per box.
    pub fn coarse_lattice(&self) -> &Lattice {
        &self.coarse
    }

    pub fn box_edge(&self) -> i64 {
        self.ell_bar
    }

    /// Vertices per box, `n̄ = ℓ̄^d`.
    pub fn vertices_per_box(&self) -> usize {
        self.n_bar
    }

    /// Number of boxes, `N̄ = N/n̄`.
    pub fn n_boxes(&self) -> usize {
        self.coarse.n_vertices()
    }

    /// Box id holding a vertex; box ids are row-major over box coordinates.
    pub fn box_of(&self, v: usize) -> usize {
        let c = self.lat.coords(v);
        let bc: Vec<i64> = c.iter().map(|&x| x / self.ell_bar).collect();
        self.coarse.vertex(&bc)
    }

    /// The `n̄` vertex ids inside a box, ascending.
    pub fn box_vertices(&self, b: usize) -> Vec<usize> {
        let bc = self.coarse.coords(b);
        let d = self.lat.dim();
        let mut verts = Vec::with_capacity(self.n_bar);
        let mut offset = alloc::vec![0i64; d];
        loop {
            let coords: Vec<i64> = bc
                .iter()
                .zip(&offset)
                .map(|(&c, &o)| c * self.ell_bar + o)
                .collect();
            verts.push(self.lat.vertex(&coords));
            // odometer over [0, ℓ̄)^d
            let mut k = d;
            loop {
                if k == 0 {
                    verts.sort_unstable();
                    return verts;
                }
                k -= 1;
                offset[k] += 1;
                if offset[k] < self.ell_bar {
                    break;
                }
                offset[k] = 0;
            }
        }
    }

    /// Minimal distance (fine-lattice units, chosen norm) between any vertex
    /// of box `a` and any vertex of box `b`.
    pub fn box_min_distance(&self, a: usize, b: usize, norm: Norm) -> f64 {
        let va = self.box_vertices(a);
        let vb = self.box_vertices(b);
        let mut best = f64::INFINITY;
        for &x in &va {
            for &y in &vb {
                let dist = self
                    .lat
                    .min_image_distance(x, y, norm)
                    .expect("box vertices are valid");
                if dist < best {
                    best = dist;
                }
            }
        }
        best
    }

    /// Distance between box centers (fine-lattice units): `ℓ̄` times the
    /// coarse minimal-image distance.
    pub fn box_center_distance(&self, a: usize, b: usize, norm: Norm) -> f64 {
        let coarse_dist = self
            .coarse
            .min_image_distance(a, b, norm)
            .expect("box ids are valid");
        self.ell_bar as f64 * coarse_dist
    }
}
