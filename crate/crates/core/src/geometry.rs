//! Dumbbell domains and their masked, anisotropically graded rasterisation.
//!
//! The continuous domain is two box bulks joined by the neck box
//! `[-eps, eps] x [-delta, delta] x [-eta, eta]`. The left bulk occupies
//! `[-eps - L, -eps] x [-L/2, L/2]^2` and the right bulk is its mirror image.
//!
//! The structured grid is a tensor product of three non-uniform axes. Along
//! `x` the cell centres inside the neck are node-aligned: the first and last
//! neck slabs are centred exactly on the mouth planes `x = -eps` and
//! `x = eps`. Such mouth cells straddle the neck/bulk interface and their
//! volume and energy are shared half and half between the neck and the bulk
//! on their side. With this layout a field that is affine in `x` across the
//! neck has a discrete Dirichlet energy equal to the continuum one.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{positive, Error, Result};

/// Half-lengths of the neck box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeckParams {
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
}

impl NeckParams {
    pub fn new(eps: f64, delta: f64, eta: f64) -> Result<Self> {
        positive("eps", eps)?;
        positive("delta", delta)?;
        positive("eta", eta)?;
        if eta > delta {
            return Err(Error::RegimeViolation { delta, eta });
        }
        Ok(Self { eps, delta, eta })
    }

    /// `eta == delta` is accepted but lies outside the thin-window setting.
    pub fn is_degenerate(&self) -> bool {
        self.eta == self.delta
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.eps * self.delta * self.eta
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.eps * factor, self.delta * factor, self.eta * factor)
    }
}

/// Box bulks. `half_extent` is the length `L` of each bulk along `x`; the
/// cross-section is `[-L/2, L/2]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkSpec {
    pub half_extent: f64,
    pub flat_radius: f64,
}

impl BulkSpec {
    /// Bulk of length `half_extent` whose mouth face is flat up to `L/2`.
    pub fn new(half_extent: f64) -> Result<Self> {
        positive("half_extent", half_extent)?;
        Ok(Self {
            half_extent,
            flat_radius: 0.5 * half_extent,
        })
    }

    pub fn with_flat_radius(half_extent: f64, flat_radius: f64) -> Result<Self> {
        positive("half_extent", half_extent)?;
        positive("flat_radius", flat_radius)?;
        if flat_radius > 0.5 * half_extent {
            return Err(Error::InvalidResolution(format!(
                "flat radius {flat_radius} exceeds the face half-width {}",
                0.5 * half_extent
            )));
        }
        Ok(Self {
            half_extent,
            flat_radius,
        })
    }

    /// Smallest admissible `L` for a neck: bulks must dominate it.
    pub fn required_extent(neck: &NeckParams) -> f64 {
        20.0 * neck.delta.max(neck.eta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    LeftBulk,
    Neck,
    RightBulk,
}

impl Region {
    pub fn code(self) -> char {
        match self {
            Region::LeftBulk => 'L',
            Region::Neck => 'N',
            Region::RightBulk => 'R',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'L' => Some(Region::LeftBulk),
            'N' => Some(Region::Neck),
            'R' => Some(Region::RightBulk),
            _ => None,
        }
    }
}

/// Continuous dumbbell: a point-membership test with region labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dumbbell {
    pub neck: NeckParams,
    pub bulk: BulkSpec,
}

pub fn build_domain(neck: NeckParams, bulk: BulkSpec) -> Result<Dumbbell> {
    // re-validate in case the caller built the structs by hand
    let neck = NeckParams::new(neck.eps, neck.delta, neck.eta)?;
    let required = BulkSpec::required_extent(&neck);
    if bulk.half_extent < required {
        return Err(Error::BulkTooSmall {
            extent: bulk.half_extent,
            required,
        });
    }
    Ok(Dumbbell { neck, bulk })
}

impl Dumbbell {
    fn tol(&self) -> f64 {
        1e-9 * self.neck.eta.min(self.neck.eps)
    }

    /// Region of a point of the closed domain, `None` outside.
    pub fn locate(&self, p: [f64; 3]) -> Option<Region> {
        let NeckParams { eps, delta, eta } = self.neck;
        let t = self.tol();
        let [x, y, z] = p;
        if x.abs() <= eps + t && y.abs() <= delta + t && z.abs() <= eta + t {
            return Some(Region::Neck);
        }
        let l = self.bulk.half_extent;
        let half = 0.5 * l;
        if y.abs() > half + t || z.abs() > half + t {
            return None;
        }
        if x <= -eps + t && x >= -eps - l - t {
            Some(Region::LeftBulk)
        } else if x >= eps - t && x <= eps + l + t {
            Some(Region::RightBulk)
        } else {
            None
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        self.locate(p).is_some()
    }

    /// True for neck points on a mouth plane `|x| = eps`.
    pub fn on_mouth(&self, p: [f64; 3]) -> bool {
        (p[0].abs() - self.neck.eps).abs() <= self.tol()
    }

    pub fn bulk_volume(&self) -> f64 {
        self.bulk.half_extent.powi(3)
    }
}

/// A non-uniform grid axis described by its face coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    faces: Vec<f64>,
}

impl Axis {
    pub fn new(faces: Vec<f64>) -> Result<Self> {
        if faces.len() < 2 {
            return Err(Error::InvalidResolution("axis needs at least one cell".into()));
        }
        if faces.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidResolution("axis faces must increase".into()));
        }
        Ok(Self { faces })
    }

    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidResolution("zero cells requested".into()));
        }
        let h = (hi - lo) / n as f64;
        Self::new((0..=n).map(|i| lo + h * i as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.faces.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    pub fn centre(&self, i: usize) -> f64 {
        0.5 * (self.faces[i] + self.faces[i + 1])
    }

    pub fn width(&self, i: usize) -> f64 {
        self.faces[i + 1] - self.faces[i]
    }

    pub fn max_width(&self) -> f64 {
        (0..self.len()).map(|i| self.width(i)).fold(0.0, f64::max)
    }
}

/// Faces strictly after `start` up to and including `end`, with widths
/// growing geometrically from `first` and capped at `cap`.
fn graded(start: f64, end: f64, first: f64, growth: f64, cap: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut f = start;
    let mut w = first.min(cap);
    let span = end - start;
    while end - f > 1e-12 * span {
        let next_w = (w * growth).min(cap);
        if f + w >= end || end - (f + w) < 0.5 * next_w {
            out.push(end);
            break;
        }
        f += w;
        out.push(f);
        w = next_w;
    }
    out
}

/// Mirror-symmetric axis: `inner` uniform cells tiling `[-half, half]`, then
/// graded cells out to `+-outer`.
fn symmetric_axis(half: f64, inner: usize, outer: f64, growth: f64, cap: f64) -> Result<Axis> {
    if !inner.is_multiple_of(2) {
        return Err(Error::InvalidResolution("inner cell count must be even".into()));
    }
    let h = 2.0 * half / inner as f64;
    let mut pos: Vec<f64> = (1..inner / 2).map(|i| h * i as f64).collect();
    pos.push(half);
    pos.extend(graded(half, outer, h * growth, growth, cap));
    let mut faces: Vec<f64> = pos.iter().rev().map(|f| -f).collect();
    faces.push(0.0);
    faces.extend(pos);
    Axis::new(faces)
}

/// How finely to resolve the neck and how quickly to coarsen away from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// Cells across each neck half-dimension, per axis `(x, y, z)`.
    pub cells_per_half: [usize; 3],
    /// Width ratio between consecutive bulk cells.
    pub growth: f64,
    /// Largest bulk cell width as a fraction of `L`.
    pub max_spacing_frac: f64,
    /// Active-cell budget.
    pub max_cells: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            cells_per_half: [8, 8, 8],
            growth: 1.2,
            max_spacing_frac: 0.1,
            max_cells: 2_000_000,
        }
    }
}

impl Resolution {
    pub fn uniform(cells_per_half: usize) -> Self {
        Self {
            cells_per_half: [cells_per_half; 3],
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.cells_per_half.contains(&0) {
            return Err(Error::InvalidResolution("zero cells requested".into()));
        }
        if !(self.growth >= 1.0 && self.growth.is_finite()) {
            return Err(Error::InvalidResolution(format!("growth {} < 1", self.growth)));
        }
        if !(self.max_spacing_frac > 0.0) {
            return Err(Error::InvalidResolution("max spacing must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionVolumes {
    pub left: f64,
    pub neck: f64,
    pub right: f64,
}

/// Masked structured grid over a dumbbell.
///
/// Active cells are numbered with `x` fastest, then `y`, then `z`. Each face
/// between two active neighbours carries the coupling `area / distance`; faces
/// towards inactive cells are absent, which is the homogeneous Neumann
/// closure.
#[derive(Debug, Clone)]
pub struct DumbbellGrid {
    axes: [Axis; 3],
    neck: Option<NeckParams>,
    full_to_active: Vec<u32>,
    ijk: Vec<[u32; 3]>,
    region: Vec<Region>,
    mouth: Vec<bool>,
    volume: Vec<f64>,
    nbr_offsets: Vec<u32>,
    nbrs: Vec<u32>,
    coefs: Vec<f64>,
}

const INACTIVE: u32 = u32::MAX;

impl DumbbellGrid {
    /// Builds a grid from axes and a per-cell classifier returning the region
    /// and mouth flag of the cell centred at the given point.
    pub fn from_axes<F>(
        axes: [Axis; 3],
        neck: Option<NeckParams>,
        max_cells: usize,
        classify: F,
    ) -> Result<Self>
    where
        F: Fn([f64; 3]) -> Option<(Region, bool)>,
    {
        let [nx, ny, nz] = [axes[0].len(), axes[1].len(), axes[2].len()];
        let total = Self::checked_total(&axes, max_cells)?;
        let mut labels = Vec::with_capacity(total);
        let mut count = 0usize;
        for k in 0..nz {
            let cz = axes[2].centre(k);
            for j in 0..ny {
                let cy = axes[1].centre(j);
                for i in 0..nx {
                    let label = classify([axes[0].centre(i), cy, cz]);
                    if label.is_some() {
                        count += 1;
                        if count > max_cells {
                            return Err(Error::CellBudgetExceeded {
                                cells: count,
                                budget: max_cells,
                            });
                        }
                    }
                    labels.push(label);
                }
            }
        }
        Self::from_labels(axes, neck, &labels)
    }

    fn checked_total(axes: &[Axis; 3], max_cells: usize) -> Result<usize> {
        axes[0]
            .len()
            .checked_mul(axes[1].len())
            .and_then(|v| v.checked_mul(axes[2].len()))
            .filter(|&v| v < INACTIVE as usize)
            .ok_or(Error::CellBudgetExceeded {
                cells: usize::MAX,
                budget: max_cells,
            })
    }

    /// Builds a grid from per-cell labels in full-grid order (`x` fastest);
    /// `None` marks an inactive cell.
    pub fn from_labels(
        axes: [Axis; 3],
        neck: Option<NeckParams>,
        labels: &[Option<(Region, bool)>],
    ) -> Result<Self> {
        let [nx, ny, nz] = [axes[0].len(), axes[1].len(), axes[2].len()];
        let total = Self::checked_total(&axes, usize::MAX)?;
        if labels.len() != total {
            return Err(Error::SizeMismatch {
                expected: total,
                got: labels.len(),
            });
        }
        let mut full_to_active = vec![INACTIVE; total];
        let mut ijk = Vec::new();
        let mut region = Vec::new();
        let mut mouth = Vec::new();
        let mut volume = Vec::new();
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let flat = i + nx * (j + ny * k);
                    if let Some((r, m)) = labels[flat] {
                        full_to_active[flat] = ijk.len() as u32;
                        ijk.push([i as u32, j as u32, k as u32]);
                        region.push(r);
                        mouth.push(m);
                        volume.push(axes[0].width(i) * axes[1].width(j) * axes[2].width(k));
                    }
                }
            }
        }
        if ijk.is_empty() {
            return Err(Error::InvalidResolution("grid has no active cells".into()));
        }

        let mut grid = Self {
            axes,
            neck,
            full_to_active,
            ijk,
            region,
            mouth,
            volume,
            nbr_offsets: Vec::new(),
            nbrs: Vec::new(),
            coefs: Vec::new(),
        };
        grid.build_stencil();
        Ok(grid)
    }

    fn build_stencil(&mut self) {
        let n = self.ijk.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut nbrs = Vec::with_capacity(6 * n);
        let mut coefs = Vec::with_capacity(6 * n);
        offsets.push(0u32);
        for c in 0..n {
            let idx = self.ijk[c].map(|v| v as usize);
            for axis in 0..3 {
                for step in [-1i64, 1] {
                    let j = idx[axis] as i64 + step;
                    if j < 0 || j as usize >= self.axes[axis].len() {
                        continue;
                    }
                    let mut other = idx;
                    other[axis] = j as usize;
                    let a = self.full_to_active[self.flat(other)];
                    if a == INACTIVE {
                        continue;
                    }
                    let ax = &self.axes[axis];
                    let dist = (ax.centre(other[axis]) - ax.centre(idx[axis])).abs();
                    let (t1, t2) = ((axis + 1) % 3, (axis + 2) % 3);
                    let area = self.axes[t1].width(idx[t1]) * self.axes[t2].width(idx[t2]);
                    nbrs.push(a);
                    coefs.push(area / dist);
                }
            }
            offsets.push(nbrs.len() as u32);
        }
        self.nbr_offsets = offsets;
        self.nbrs = nbrs;
        self.coefs = coefs;
    }

    fn flat(&self, [i, j, k]: [usize; 3]) -> usize {
        let nx = self.axes[0].len();
        let ny = self.axes[1].len();
        i + nx * (j + ny * k)
    }

    /// Grid containing only the neck: mouth slabs sit on `x = +-eps`, and the
    /// `y`, `z` cells tile `[-delta, delta]` and `[-eta, eta]` exactly.
    pub fn neck_only(neck: NeckParams, cells_per_half: [usize; 3]) -> Result<Self> {
        if cells_per_half.contains(&0) {
            return Err(Error::InvalidResolution("zero cells requested".into()));
        }
        let cx = cells_per_half[0];
        let h = neck.eps / cx as f64;
        let x = Axis::new(
            (0..=2 * cx + 1)
                .map(|i| -neck.eps - 0.5 * h + h * i as f64)
                .collect(),
        )?;
        let y = Axis::uniform(-neck.delta, neck.delta, 2 * cells_per_half[1])?;
        let z = Axis::uniform(-neck.eta, neck.eta, 2 * cells_per_half[2])?;
        Self::from_axes([x, y, z], Some(neck), usize::MAX, |_| Some((Region::Neck, false)))
    }

    /// Fully active box with uniform spacing, labelled by the sign of `x`
    /// (`x < 0` left bulk, `x > 0` right bulk, `x = 0` neck).
    pub fn full_box(n: [usize; 3], h: [f64; 3]) -> Result<Self> {
        let axes = [
            Axis::uniform(-0.5 * h[0] * n[0] as f64, 0.5 * h[0] * n[0] as f64, n[0])?,
            Axis::uniform(-0.5 * h[1] * n[1] as f64, 0.5 * h[1] * n[1] as f64, n[1])?,
            Axis::uniform(-0.5 * h[2] * n[2] as f64, 0.5 * h[2] * n[2] as f64, n[2])?,
        ];
        let tol = 1e-12 * h[0];
        Self::from_axes(axes, None, usize::MAX, |p| {
            let r = if p[0] < -tol {
                Region::LeftBulk
            } else if p[0] > tol {
                Region::RightBulk
            } else {
                Region::Neck
            };
            Some((r, false))
        })
    }

    pub fn axes(&self) -> &[Axis; 3] {
        &self.axes
    }

    pub fn neck(&self) -> Option<&NeckParams> {
        self.neck.as_ref()
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.axes[0].len(), self.axes[1].len(), self.axes[2].len()]
    }

    pub fn active_count(&self) -> usize {
        self.ijk.len()
    }

    pub fn is_active(&self, idx: [usize; 3]) -> bool {
        self.active_index(idx).is_some()
    }

    pub fn active_index(&self, idx: [usize; 3]) -> Option<usize> {
        let dims = self.dims();
        if (0..3).any(|a| idx[a] >= dims[a]) {
            return None;
        }
        match self.full_to_active[self.flat(idx)] {
            INACTIVE => None,
            a => Some(a as usize),
        }
    }

    pub fn cell_index(&self, c: usize) -> [usize; 3] {
        self.ijk[c].map(|v| v as usize)
    }

    pub fn centre(&self, c: usize) -> [f64; 3] {
        let [i, j, k] = self.cell_index(c);
        [self.axes[0].centre(i), self.axes[1].centre(j), self.axes[2].centre(k)]
    }

    pub fn volume(&self, c: usize) -> f64 {
        self.volume[c]
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volume
    }

    pub fn region(&self, c: usize) -> Region {
        self.region[c]
    }

    pub fn regions(&self) -> &[Region] {
        &self.region
    }

    pub fn is_mouth(&self, c: usize) -> bool {
        self.mouth[c]
    }

    /// Fractions of a cell attributed to (left bulk, neck, right bulk).
    pub fn shares(&self, c: usize) -> [f64; 3] {
        match (self.region[c], self.mouth[c]) {
            (Region::LeftBulk, _) => [1.0, 0.0, 0.0],
            (Region::RightBulk, _) => [0.0, 0.0, 1.0],
            (Region::Neck, false) => [0.0, 1.0, 0.0],
            (Region::Neck, true) => {
                if self.centre(c)[0] < 0.0 {
                    [0.5, 0.5, 0.0]
                } else {
                    [0.0, 0.5, 0.5]
                }
            }
        }
    }

    /// Neighbours of cell `c` with their face couplings `area / distance`.
    pub fn neighbours(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.nbr_offsets[c] as usize;
        let hi = self.nbr_offsets[c + 1] as usize;
        self.nbrs[lo..hi]
            .iter()
            .zip(&self.coefs[lo..hi])
            .map(|(&n, &w)| (n as usize, w))
    }

    pub(crate) fn stencil(&self) -> (&[u32], &[u32], &[f64]) {
        (&self.nbr_offsets, &self.nbrs, &self.coefs)
    }

    /// Sum of face couplings of each cell: the diagonal of the stiffness.
    pub fn stiffness_diagonal(&self) -> Vec<f64> {
        (0..self.active_count())
            .map(|c| self.neighbours(c).map(|(_, w)| w).sum())
            .collect()
    }

    pub fn region_volumes(&self) -> RegionVolumes {
        let mut v = [0.0; 3];
        for c in 0..self.active_count() {
            let s = self.shares(c);
            for r in 0..3 {
                v[r] += s[r] * self.volume[c];
            }
        }
        RegionVolumes {
            left: v[0],
            neck: v[1],
            right: v[2],
        }
    }

    pub fn total_volume(&self) -> f64 {
        self.volume.iter().sum()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.active_count();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(c) = queue.pop_front() {
            for (nb, _) in self.neighbours(c) {
                if !seen[nb] {
                    seen[nb] = true;
                    count += 1;
                    queue.push_back(nb);
                }
            }
        }
        count == n
    }

    /// Largest cell width along each axis over active neck cells.
    pub fn neck_spacing(&self) -> [f64; 3] {
        let mut h = [0.0f64; 3];
        for c in 0..self.active_count() {
            if self.region[c] == Region::Neck {
                let idx = self.cell_index(c);
                for a in 0..3 {
                    h[a] = h[a].max(self.axes[a].width(idx[a]));
                }
            }
        }
        h
    }

    /// Cell index mirrored through `x = 0`, when active.
    pub fn mirror_x(&self, c: usize) -> Option<usize> {
        let [i, j, k] = self.cell_index(c);
        self.active_index([self.axes[0].len() - 1 - i, j, k])
    }
}

/// Rasterises a dumbbell onto a graded tensor grid.
pub fn rasterize(domain: &Dumbbell, res: &Resolution) -> Result<DumbbellGrid> {
    res.validate()?;
    let NeckParams { eps, delta, eta } = domain.neck;
    let l = domain.bulk.half_extent;
    let cap = res.max_spacing_frac * l;
    let g = res.growth;

    let cx = res.cells_per_half[0];
    let hx = eps / cx as f64;
    // positive half: neck faces between slab centres, the mouth slab's
    // outer face, then the graded bulk
    let mut half: Vec<f64> = (0..cx).map(|k| hx * (0.5 + k as f64)).collect();
    half.push(eps + 0.5 * hx);
    half.extend(graded(eps + 0.5 * hx, eps + l, hx * g, g, cap));
    let mut xf: Vec<f64> = half.iter().rev().map(|f| -f).collect();
    xf.extend(half);
    let x = Axis::new(xf)?;

    let y = symmetric_axis(delta, 2 * res.cells_per_half[1], 0.5 * l, g, cap)?;
    let z = symmetric_axis(eta, 2 * res.cells_per_half[2], 0.5 * l, g, cap)?;

    DumbbellGrid::from_axes([x, y, z], Some(domain.neck), res.max_cells, |p| {
        domain.locate(p).map(|r| {
            let mouth = r == Region::Neck && domain.on_mouth(p);
            (r, mouth)
        })
    })
}
