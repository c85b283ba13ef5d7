//! Discrete phase-transition energy on a masked grid.
//!
//! `E(u) = sum_faces 1/2 (area/dist) (u_a - u_b)^2 + sum_cells vol W(u_c)`.
//! Faces towards inactive cells are simply absent, which realises the natural
//! Neumann condition. Face energy is split evenly between the two adjacent
//! cells, and a cell's energy is attributed to regions by its shares.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DumbbellGrid;
use crate::potential::Potential;
use crate::reduce::{chunked_sum, CHUNK};

/// Order parameter values, one per active cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn new(grid: &DumbbellGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.active_count() {
            return Err(Error::SizeMismatch {
                expected: grid.active_count(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField(i));
        }
        Ok(Self(values))
    }

    pub fn constant(grid: &DumbbellGrid, value: f64) -> Self {
        Self(vec![value; grid.active_count()])
    }

    /// Samples `f` at every active cell centre.
    pub fn from_fn(grid: &DumbbellGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        Self((0..grid.active_count()).map(|c| f(grid.centre(c))).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `L^2` distance weighted by cell volumes.
    pub fn l2_distance(&self, other: &Self, grid: &DumbbellGrid) -> f64 {
        let d: Vec<f64> = self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect();
        crate::reduce::weighted_dot(grid.volumes(), &d, &d).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub neck: f64,
    pub left_bulk: f64,
    pub right_bulk: f64,
    pub dirichlet_part: f64,
    pub potential_part: f64,
}

impl EnergyBreakdown {
    /// Energy outside the neck.
    pub fn outside(&self) -> f64 {
        self.left_bulk + self.right_bulk
    }
}

fn check(grid: &DumbbellGrid, u: &[f64]) -> Result<()> {
    if u.len() != grid.active_count() {
        return Err(Error::SizeMismatch {
            expected: grid.active_count(),
            got: u.len(),
        });
    }
    Ok(())
}

pub fn energy<P: Potential + ?Sized>(
    grid: &DumbbellGrid,
    field: &ScalarField,
    potential: &P,
) -> Result<EnergyBreakdown> {
    check(grid, field.values())?;
    Ok(energy_of(grid, field.values(), potential))
}

pub(crate) fn energy_of<P: Potential + ?Sized>(
    grid: &DumbbellGrid,
    u: &[f64],
    potential: &P,
) -> EnergyBreakdown {
    let (offsets, nbrs, coefs) = grid.stencil();
    let vol = grid.volumes();
    // [left, neck, right, dirichlet, potential]
    let s = chunked_sum::<5, _>(u.len(), |range| {
        let mut acc = [0.0; 5];
        for c in range {
            let uc = u[c];
            let mut d = 0.0;
            for f in offsets[c] as usize..offsets[c + 1] as usize {
                let du = uc - u[nbrs[f] as usize];
                d += coefs[f] * du * du;
            }
            // each face is visited from both sides: 1/2 * 1/2 per visit
            d *= 0.25;
            let w = vol[c] * potential.value(uc);
            let e = d + w;
            let sh = grid.shares(c);
            acc[0] += sh[0] * e;
            acc[1] += sh[1] * e;
            acc[2] += sh[2] * e;
            acc[3] += d;
            acc[4] += w;
        }
        acc
    });
    EnergyBreakdown {
        total: s[3] + s[4],
        left_bulk: s[0],
        neck: s[1],
        right_bulk: s[2],
        dirichlet_part: s[3],
        potential_part: s[4],
    }
}

/// Scalar total energy, cheaper than the full breakdown.
pub(crate) fn total_energy<P: Potential + ?Sized>(
    grid: &DumbbellGrid,
    u: &[f64],
    potential: &P,
) -> f64 {
    let (offsets, nbrs, coefs) = grid.stencil();
    let vol = grid.volumes();
    chunked_sum::<1, _>(u.len(), |range| {
        let mut acc = 0.0;
        for c in range {
            let uc = u[c];
            let mut d = 0.0;
            for f in offsets[c] as usize..offsets[c + 1] as usize {
                let du = uc - u[nbrs[f] as usize];
                d += coefs[f] * du * du;
            }
            acc += 0.25 * d + vol[c] * potential.value(uc);
        }
        [acc]
    })[0]
}

pub fn energy_gradient<P: Potential + ?Sized>(
    grid: &DumbbellGrid,
    field: &ScalarField,
    potential: &P,
) -> Result<ScalarField> {
    check(grid, field.values())?;
    let mut g = vec![0.0; field.len()];
    gradient_into(grid, field.values(), potential, &mut g);
    Ok(ScalarField(g))
}

/// Exact gradient: masked 7-point Laplacian plus `vol * W'(u)`.
pub(crate) fn gradient_into<P: Potential + ?Sized>(
    grid: &DumbbellGrid,
    u: &[f64],
    potential: &P,
    out: &mut [f64],
) {
    let (offsets, nbrs, coefs) = grid.stencil();
    let vol = grid.volumes();
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(chunk, slice)| {
            let base = chunk * CHUNK;
            for (k, g) in slice.iter_mut().enumerate() {
                let c = base + k;
                let uc = u[c];
                let mut lap = 0.0;
                for f in offsets[c] as usize..offsets[c + 1] as usize {
                    lap += coefs[f] * (uc - u[nbrs[f] as usize]);
                }
                *g = lap + vol[c] * potential.derivative(uc);
            }
        });
}
