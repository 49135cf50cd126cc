//! Lattice geometry, binary masks, windows and scalar fields.
//!
//! Cells are identified with their centers: the center of cell `k` along
//! axis `i` sits at `origin[i] + (k + 1/2) h`. Linear indices are row-major
//! with axis 0 varying fastest.
//!
//! Periodic axes may carry a *wrap shift*: crossing axis `i` once moves the
//! point by `shape[i]` along `i` and by `wrap_shift[i][j]` cells along every
//! other axis `j`. Plain tori have all shifts zero. Sheared identifications
//! are what strip domains for rational directions need, where the period
//! lattice is not aligned with the coordinate axes.

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const MAX_DIM: usize = 3;

/// Integer cell coordinates; entries beyond `dim` are zero.
pub type Index = [i64; MAX_DIM];

pub type Bits = BitVec<u64, Lsb0>;

pub(crate) fn div_floor(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometryRecord", into = "GeometryRecord")]
pub struct GridGeometry {
    dim: usize,
    shape: [usize; MAX_DIM],
    spacing: f64,
    origin: [f64; MAX_DIM],
    periodic: [bool; MAX_DIM],
    wrap_shift: [[i64; MAX_DIM]; MAX_DIM],
}

/// Portable JSON form of a geometry (vectors of length `dim`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeometryRecord {
    pub dim: usize,
    pub shape: Vec<usize>,
    pub spacing: f64,
    pub origin: Vec<f64>,
    pub periodic_axes: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wrap_shift: Option<Vec<Vec<i64>>>,
}

impl From<GridGeometry> for GeometryRecord {
    fn from(g: GridGeometry) -> Self {
        let d = g.dim;
        let sheared = g.is_sheared();
        GeometryRecord {
            dim: d,
            shape: g.shape[..d].to_vec(),
            spacing: g.spacing,
            origin: g.origin[..d].to_vec(),
            periodic_axes: g.periodic[..d].to_vec(),
            wrap_shift: sheared.then(|| g.wrap_shift[..d].iter().map(|s| s[..d].to_vec()).collect()),
        }
    }
}

impl TryFrom<GeometryRecord> for GridGeometry {
    type Error = Error;

    fn try_from(rec: GeometryRecord) -> Result<Self> {
        if rec.shape.len() != rec.dim {
            return Err(Error::InvalidGeometry("shape length differs from dim".into()));
        }
        let mut g = GridGeometry::new(&rec.shape, rec.spacing, &rec.origin)?;
        g = g.with_periodic(&rec.periodic_axes)?;
        if let Some(shifts) = rec.wrap_shift {
            for (axis, s) in shifts.iter().enumerate() {
                if g.periodic[axis] && s.iter().any(|&v| v != 0) {
                    g = g.with_wrap_shift(axis, s)?;
                }
            }
        }
        Ok(g)
    }
}

impl GridGeometry {
    pub fn new(shape: &[usize], spacing: f64, origin: &[f64]) -> Result<Self> {
        let dim = shape.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGeometry(format!("dimension {dim} not in 1..=3")));
        }
        if origin.len() != dim {
            return Err(Error::InvalidGeometry("origin length differs from dim".into()));
        }
        if shape.contains(&0) {
            return Err(Error::InvalidGeometry("every shape entry must be >= 1".into()));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGeometry(format!("spacing {spacing} must be positive")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGeometry("origin must be finite".into()));
        }
        let mut s = [1usize; MAX_DIM];
        let mut o = [0.0; MAX_DIM];
        s[..dim].copy_from_slice(shape);
        o[..dim].copy_from_slice(origin);
        Ok(GridGeometry {
            dim,
            shape: s,
            spacing,
            origin: o,
            periodic: [false; MAX_DIM],
            wrap_shift: [[0; MAX_DIM]; MAX_DIM],
        })
    }

    /// Box `[-half_width, half_width]^dim` with `round(2 half_width / h)` cells per axis.
    pub fn centered(dim: usize, half_width: f64, spacing: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(invalid("half_width", "must be positive"));
        }
        let n = (2.0 * half_width / spacing).round().max(1.0) as usize;
        let lo = -(n as f64) * spacing / 2.0;
        GridGeometry::new(&vec![n; dim], spacing, &vec![lo; dim])
    }

    pub fn with_periodic(mut self, axes: &[bool]) -> Result<Self> {
        if axes.len() != self.dim {
            return Err(Error::InvalidGeometry("periodic_axes length differs from dim".into()));
        }
        self.periodic = [false; MAX_DIM];
        self.periodic[..self.dim].copy_from_slice(axes);
        Ok(self)
    }

    /// Sets the shear applied when wrapping across periodic `axis`.
    ///
    /// Shifts may only touch axes that are non-periodic or come later in
    /// the reduction order; the entry for `axis` itself is ignored.
    pub fn with_wrap_shift(mut self, axis: usize, shift: &[i64]) -> Result<Self> {
        if axis >= self.dim || !self.periodic[axis] {
            return Err(Error::InvalidGeometry(format!("axis {axis} is not periodic")));
        }
        if shift.len() != self.dim {
            return Err(Error::InvalidGeometry("wrap shift length differs from dim".into()));
        }
        for (j, &v) in shift.iter().enumerate() {
            if j < axis && self.periodic[j] && v != 0 {
                return Err(Error::InvalidGeometry(
                    "wrap shift may not move an earlier periodic axis".into(),
                ));
            }
        }
        let mut row = [0; MAX_DIM];
        row[..self.dim].copy_from_slice(shift);
        row[axis] = 0;
        self.wrap_shift[axis] = row;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    pub fn periodic_axes(&self) -> &[bool] {
        &self.periodic[..self.dim]
    }

    pub fn wrap_shift(&self, axis: usize) -> &[i64] {
        &self.wrap_shift[axis][..self.dim]
    }

    pub fn is_sheared(&self) -> bool {
        (0..self.dim).any(|i| self.periodic[i] && self.wrap_shift[i].iter().any(|&v| v != 0))
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn center(&self, idx: &Index) -> [f64; MAX_DIM] {
        let mut c = [0.0; MAX_DIM];
        for i in 0..self.dim {
            c[i] = self.origin[i] + (idx[i] as f64 + 0.5) * self.spacing;
        }
        c
    }

    pub fn center_of(&self, lin: usize) -> [f64; MAX_DIM] {
        self.center(&self.index(lin))
    }

    pub fn in_window(&self, idx: &Index) -> bool {
        (0..self.dim).all(|i| idx[i] >= 0 && (idx[i] as usize) < self.shape[i])
    }

    /// Row-major linear index, axis 0 fastest. `idx` must lie in the window.
    #[inline]
    pub fn linear(&self, idx: &Index) -> usize {
        debug_assert!(self.in_window(idx));
        (idx[2] as usize * self.shape[1] + idx[1] as usize) * self.shape[0] + idx[0] as usize
    }

    #[inline]
    pub fn index(&self, lin: usize) -> Index {
        let i0 = lin % self.shape[0];
        let rest = lin / self.shape[0];
        let i1 = rest % self.shape[1];
        let i2 = rest / self.shape[1];
        [i0 as i64, i1 as i64, i2 as i64]
    }

    /// Applies the periodic identifications (including shears).
    #[inline]
    pub fn reduce(&self, mut idx: Index) -> Index {
        for i in 0..self.dim {
            if self.periodic[i] {
                let n = self.shape[i] as i64;
                let q = div_floor(idx[i], n);
                if q != 0 {
                    idx[i] -= q * n;
                    for j in 0..self.dim {
                        idx[j] -= q * self.wrap_shift[i][j];
                    }
                }
            }
        }
        idx
    }

    /// Linear index of the stored cell representing `idx`, if any.
    #[inline]
    pub fn locate(&self, idx: Index) -> Option<usize> {
        let r = self.reduce(idx);
        self.in_window(&r).then(|| self.linear(&r))
    }

    /// Index of the cell whose center is nearest to `x`.
    pub fn nearest_index(&self, x: &[f64]) -> Index {
        let mut idx = [0; MAX_DIM];
        for i in 0..self.dim {
            idx[i] = ((x[i] - self.origin[i]) / self.spacing - 0.5).round() as i64;
        }
        idx
    }

    pub fn indices(&self) -> impl Iterator<Item = Index> + '_ {
        (0..self.len()).map(move |l| self.index(l))
    }

    /// Number of lattice cells per unit length, when `1/h` is an integer.
    pub fn cells_per_unit(&self) -> Option<i64> {
        let m = (1.0 / self.spacing).round();
        ((m * self.spacing - 1.0).abs() < 1e-9 && m >= 1.0).then_some(m as i64)
    }
}

/// How a mask is continued outside its stored window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtensionRule {
    ConstantInside,
    ConstantOutside,
    /// Inside iff `normal · x <= offset` (or the strict reverse when `complement`).
    HalfSpace {
        normal: Vec<i64>,
        offset: f64,
        #[serde(default)]
        complement: bool,
    },
    Periodic,
    Mirror,
}

impl ExtensionRule {
    pub fn half_space(normal: &[i64], offset: f64) -> Result<Self> {
        if normal.iter().all(|&v| v == 0) {
            return Err(Error::DegenerateShape("half-space normal must be nonzero".into()));
        }
        Ok(ExtensionRule::HalfSpace {
            normal: normal.to_vec(),
            offset,
            complement: false,
        })
    }

    pub fn complement(&self) -> Self {
        match self {
            ExtensionRule::ConstantInside => ExtensionRule::ConstantOutside,
            ExtensionRule::ConstantOutside => ExtensionRule::ConstantInside,
            ExtensionRule::HalfSpace {
                normal,
                offset,
                complement,
            } => ExtensionRule::HalfSpace {
                normal: normal.clone(),
                offset: *offset,
                complement: !complement,
            },
            ExtensionRule::Periodic => ExtensionRule::Periodic,
            ExtensionRule::Mirror => ExtensionRule::Mirror,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if let ExtensionRule::HalfSpace { normal, offset, .. } = self {
            if normal.len() != dim {
                return Err(Error::InvalidGeometry("half-space normal length differs from dim".into()));
            }
            if normal.iter().all(|&v| v == 0) {
                return Err(Error::DegenerateShape("half-space normal must be nonzero".into()));
            }
            if !offset.is_finite() {
                return Err(invalid("offset", "must be finite"));
            }
        }
        Ok(())
    }
}

fn mirror_coord(i: i64, n: i64) -> i64 {
    let p = 2 * n;
    let m = i.rem_euclid(p);
    if m < n {
        m
    } else {
        p - 1 - m
    }
}

/// Dense bit field over a geometry, continued everywhere by an [`ExtensionRule`].
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMask {
    geometry: GridGeometry,
    bits: Bits,
    extension: ExtensionRule,
}

impl BinaryMask {
    pub fn empty(geometry: &GridGeometry, extension: ExtensionRule) -> Result<Self> {
        Self::from_bits(geometry, bitvec![u64, Lsb0; 0; geometry.len()], extension)
    }

    pub fn full(geometry: &GridGeometry, extension: ExtensionRule) -> Result<Self> {
        Self::from_bits(geometry, bitvec![u64, Lsb0; 1; geometry.len()], extension)
    }

    pub fn from_bits(geometry: &GridGeometry, bits: Bits, extension: ExtensionRule) -> Result<Self> {
        if bits.len() != geometry.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} bits for {} cells",
                bits.len(),
                geometry.len()
            )));
        }
        extension.validate(geometry.dim())?;
        Ok(BinaryMask {
            geometry: geometry.clone(),
            bits,
            extension,
        })
    }

    pub fn from_bools(geometry: &GridGeometry, cells: &[bool], extension: ExtensionRule) -> Result<Self> {
        Self::from_bits(geometry, cells.iter().copied().collect(), extension)
    }

    /// Mask whose stored cell is set iff `pred(center)`.
    pub fn from_predicate(
        geometry: &GridGeometry,
        extension: ExtensionRule,
        pred: impl Fn(&[f64]) -> bool,
    ) -> Result<Self> {
        let bits: Bits = (0..geometry.len())
            .map(|l| pred(&geometry.center_of(l)[..geometry.dim()]))
            .collect();
        Self::from_bits(geometry, bits, extension)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn bits(&self) -> &Bits {
        &self.bits
    }

    pub fn extension(&self) -> &ExtensionRule {
        &self.extension
    }

    pub fn with_extension(mut self, extension: ExtensionRule) -> Result<Self> {
        extension.validate(self.geometry.dim())?;
        self.extension = extension;
        Ok(self)
    }

    #[inline]
    pub fn get(&self, lin: usize) -> bool {
        self.bits[lin]
    }

    pub fn set(&mut self, lin: usize, value: bool) {
        self.bits.set(lin, value);
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_empty_window(&self) -> bool {
        self.bits.not_any()
    }

    /// Total membership query: defined for every integer index.
    #[inline]
    pub fn contains(&self, idx: Index) -> bool {
        let g = &self.geometry;
        let r = g.reduce(idx);
        if g.in_window(&r) {
            return self.bits[g.linear(&r)];
        }
        self.exterior(&r)
    }

    /// Membership of the cell whose center is nearest to `x`.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.contains(self.geometry.nearest_index(x))
    }

    fn exterior(&self, r: &Index) -> bool {
        let g = &self.geometry;
        match &self.extension {
            ExtensionRule::ConstantInside => true,
            ExtensionRule::ConstantOutside => false,
            ExtensionRule::HalfSpace {
                normal,
                offset,
                complement,
            } => {
                let c = g.center(r);
                let s: f64 = (0..g.dim()).map(|i| normal[i] as f64 * c[i]).sum();
                (s <= *offset) != *complement
            }
            ExtensionRule::Periodic => {
                let mut w = *r;
                for i in 0..g.dim() {
                    w[i] = w[i].rem_euclid(g.shape[i] as i64);
                }
                self.bits[g.linear(&w)]
            }
            ExtensionRule::Mirror => {
                let mut w = *r;
                for i in 0..g.dim() {
                    w[i] = mirror_coord(w[i], g.shape[i] as i64);
                }
                self.bits[g.linear(&w)]
            }
        }
    }

    pub fn complement(&self) -> Self {
        BinaryMask {
            geometry: self.geometry.clone(),
            bits: !self.bits.clone(),
            extension: self.extension.complement(),
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.geometry != other.geometry {
            return Err(Error::IncompatibleGeometry);
        }
        if self.extension != other.extension {
            return Err(Error::IncompatibleExtension);
        }
        Ok(())
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut bits = self.bits.clone();
        bits &= other.bits.as_bitslice();
        Ok(BinaryMask {
            geometry: self.geometry.clone(),
            bits,
            extension: self.extension.clone(),
        })
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut bits = self.bits.clone();
        bits |= other.bits.as_bitslice();
        Ok(BinaryMask {
            geometry: self.geometry.clone(),
            bits,
            extension: self.extension.clone(),
        })
    }

    /// Stored cells of `self` not in `other`.
    pub fn difference_count(&self, other: &Self) -> Result<usize> {
        if self.geometry != other.geometry {
            return Err(Error::IncompatibleGeometry);
        }
        Ok(self
            .bits
            .iter()
            .by_vals()
            .zip(other.bits.iter().by_vals())
            .filter(|&(a, b)| a && !b)
            .count())
    }

    /// Number of stored cells where the two masks differ.
    pub fn symmetric_difference_count(&self, other: &Self) -> Result<usize> {
        if self.geometry != other.geometry {
            return Err(Error::IncompatibleGeometry);
        }
        let mut x = self.bits.clone();
        x ^= other.bits.as_bitslice();
        Ok(x.count_ones())
    }

    pub fn is_subset_of(&self, other: &Self) -> Result<bool> {
        Ok(self.difference_count(other)? == 0)
    }

    /// `E + k` for a cell offset `k`: stored cell `x` is set iff `x - k ∈ E`.
    ///
    /// Stored bits are exact. The exterior keeps the original rule, except
    /// that half-space offsets move with the shift.
    pub fn translate(&self, k: &Index) -> Self {
        let g = &self.geometry;
        let bits: Bits = (0..g.len())
            .map(|l| {
                let x = g.index(l);
                let mut y = x;
                for i in 0..g.dim() {
                    y[i] -= k[i];
                }
                self.contains(y)
            })
            .collect();
        let extension = match &self.extension {
            ExtensionRule::HalfSpace {
                normal,
                offset,
                complement,
            } => {
                let dot: f64 = (0..g.dim())
                    .map(|i| normal[i] as f64 * k[i] as f64 * g.spacing())
                    .sum();
                ExtensionRule::HalfSpace {
                    normal: normal.clone(),
                    offset: offset + dot,
                    complement: *complement,
                }
            }
            other => other.clone(),
        };
        BinaryMask {
            geometry: g.clone(),
            bits,
            extension,
        }
    }

    /// Cells inside `window`, as a mask with an empty exterior.
    pub fn restricted_to(&self, window: &Window) -> Result<Self> {
        if window.geometry() != &self.geometry {
            return Err(Error::IncompatibleGeometry);
        }
        let mut bits = self.bits.clone();
        bits &= window.cells().as_bitslice();
        Ok(BinaryMask {
            geometry: self.geometry.clone(),
            bits,
            extension: ExtensionRule::ConstantOutside,
        })
    }
}

/// Lebesgue measure of `E ∩ window`: set cells in the window times `h^n`.
pub fn volume(mask: &BinaryMask, window: &Window) -> Result<f64> {
    if window.geometry() != mask.geometry() {
        return Err(Error::IncompatibleGeometry);
    }
    let mut bits = mask.bits().clone();
    bits &= window.cells().as_bitslice();
    Ok(bits.count_ones() as f64 * mask.geometry().cell_volume())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowKind {
    Full,
    Box { lo: Vec<usize>, hi: Vec<usize> },
    Ball { center: Vec<f64>, radius: f64 },
    Cells { count: usize },
}

/// A subset of the stored cells over which energies are measured.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    geometry: GridGeometry,
    cells: Bits,
    kind: WindowKind,
}

impl Window {
    pub fn full(geometry: &GridGeometry) -> Self {
        Window {
            geometry: geometry.clone(),
            cells: bitvec![u64, Lsb0; 1; geometry.len()],
            kind: WindowKind::Full,
        }
    }

    /// Half-open index box `lo <= idx < hi`.
    pub fn boxed(geometry: &GridGeometry, lo: &[usize], hi: &[usize]) -> Result<Self> {
        let d = geometry.dim();
        if lo.len() != d || hi.len() != d {
            return Err(Error::InvalidGeometry("box corner length differs from dim".into()));
        }
        if (0..d).any(|i| lo[i] > hi[i] || hi[i] > geometry.shape()[i]) {
            return Err(Error::InvalidGeometry("box exceeds the stored window".into()));
        }
        let cells = (0..geometry.len())
            .map(|l| {
                let x = geometry.index(l);
                (0..d).all(|i| x[i] as usize >= lo[i] && (x[i] as usize) < hi[i])
            })
            .collect();
        Ok(Window {
            geometry: geometry.clone(),
            cells,
            kind: WindowKind::Box {
                lo: lo.to_vec(),
                hi: hi.to_vec(),
            },
        })
    }

    /// Cells whose center lies in the closed ball.
    pub fn ball(geometry: &GridGeometry, center: &[f64], radius: f64) -> Result<Self> {
        if center.len() != geometry.dim() {
            return Err(Error::InvalidGeometry("center length differs from dim".into()));
        }
        if !(radius >= 0.0) {
            return Err(invalid("radius", "must be nonnegative"));
        }
        let r2 = radius * radius;
        let cells = (0..geometry.len())
            .map(|l| {
                let c = geometry.center_of(l);
                let d2: f64 = (0..geometry.dim()).map(|i| (c[i] - center[i]).powi(2)).sum();
                d2 <= r2
            })
            .collect();
        Ok(Window {
            geometry: geometry.clone(),
            cells,
            kind: WindowKind::Ball {
                center: center.to_vec(),
                radius,
            },
        })
    }

    pub fn from_bits(geometry: &GridGeometry, cells: Bits) -> Result<Self> {
        if cells.len() != geometry.len() {
            return Err(Error::InvalidGeometry("window bit count differs from cell count".into()));
        }
        let count = cells.count_ones();
        Ok(Window {
            geometry: geometry.clone(),
            cells,
            kind: WindowKind::Cells { count },
        })
    }

    pub fn from_mask(mask: &BinaryMask) -> Self {
        Window {
            geometry: mask.geometry().clone(),
            cells: mask.bits().clone(),
            kind: WindowKind::Cells { count: mask.count() },
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn cells(&self) -> &Bits {
        &self.cells
    }

    pub fn kind(&self) -> &WindowKind {
        &self.kind
    }

    #[inline]
    pub fn contains(&self, lin: usize) -> bool {
        self.cells[lin]
    }

    pub fn count(&self) -> usize {
        self.cells.count_ones()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter_ones()
    }

    pub fn is_subset_of(&self, other: &Window) -> bool {
        self.cells
            .iter()
            .by_vals()
            .zip(other.cells.iter().by_vals())
            .all(|(a, b)| !a || b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldExtension {
    Periodic,
    Zero,
}

/// One finite real per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    geometry: GridGeometry,
    values: Vec<f64>,
    extension: FieldExtension,
}

impl ScalarField {
    pub fn new(geometry: &GridGeometry, values: Vec<f64>, extension: FieldExtension) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} values for {} cells",
                values.len(),
                geometry.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "must be finite"));
        }
        Ok(ScalarField {
            geometry: geometry.clone(),
            values,
            extension,
        })
    }

    pub fn zeros(geometry: &GridGeometry) -> Self {
        ScalarField {
            geometry: geometry.clone(),
            values: vec![0.0; geometry.len()],
            extension: FieldExtension::Zero,
        }
    }

    pub fn from_fn(
        geometry: &GridGeometry,
        extension: FieldExtension,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let values = (0..geometry.len())
            .map(|l| f(&geometry.center_of(l)[..geometry.dim()]))
            .collect();
        Self::new(geometry, values, extension)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn extension(&self) -> FieldExtension {
        self.extension
    }

    #[inline]
    pub fn get(&self, lin: usize) -> f64 {
        self.values[lin]
    }

    pub fn value_at(&self, idx: Index) -> f64 {
        let g = &self.geometry;
        let r = g.reduce(idx);
        if g.in_window(&r) {
            return self.values[g.linear(&r)];
        }
        match self.extension {
            FieldExtension::Zero => 0.0,
            FieldExtension::Periodic => {
                let mut w = r;
                for i in 0..g.dim() {
                    w[i] = w[i].rem_euclid(g.shape()[i] as i64);
                }
                self.values[g.linear(&w)]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom4() -> GridGeometry {
        GridGeometry::new(&[4, 4], 1.0, &[-2.0, -2.0]).unwrap()
    }

    #[test]
    fn cell_centers_follow_origin_and_spacing() {
        let g = GridGeometry::new(&[10], 0.5, &[1.0]).unwrap();
        assert_eq!(g.center(&[0, 0, 0])[0], 1.25);
        assert_eq!(g.center(&[3, 0, 0])[0], 2.75);
        assert_eq!(g.nearest_index(&[2.74]), [3, 0, 0]);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(GridGeometry::new(&[0, 3], 1.0, &[0.0, 0.0]).is_err());
        assert!(GridGeometry::new(&[3, 3], 0.0, &[0.0, 0.0]).is_err());
        assert!(GridGeometry::new(&[1, 1, 1, 1], 1.0, &[0.0; 4]).is_err());
    }

    #[test]
    fn linear_index_round_trips() {
        let g = GridGeometry::new(&[3, 4, 5], 1.0, &[0.0; 3]).unwrap();
        for l in 0..g.len() {
            assert_eq!(g.linear(&g.index(l)), l);
        }
    }

    #[test]
    fn sheared_wrap_moves_other_axes() {
        let g = GridGeometry::new(&[2, 10], 1.0, &[0.0, 0.0])
            .unwrap()
            .with_periodic(&[true, false])
            .unwrap()
            .with_wrap_shift(0, &[0, -1])
            .unwrap();
        // (2, 5) ≡ (0, 6): crossing axis 0 once subtracts the shift.
        assert_eq!(g.reduce([2, 5, 0]), [0, 6, 0]);
        assert_eq!(g.reduce([-1, 5, 0]), [1, 4, 0]);
        assert!(g.is_sheared());
    }

    #[test]
    fn exterior_rules() {
        let g = geom4();
        let m = BinaryMask::empty(&g, ExtensionRule::ConstantInside).unwrap();
        assert!(m.contains([-1, 0, 0]));
        assert!(!m.contains([0, 0, 0]));
        let hs = BinaryMask::empty(&g, ExtensionRule::half_space(&[0, 1], 0.0).unwrap()).unwrap();
        assert!(hs.contains([10, -3, 0]));
        assert!(!hs.contains([10, 7, 0]));
        assert!(!hs.complement().contains([10, -3, 0]));

        let mut p = BinaryMask::empty(&g, ExtensionRule::Periodic).unwrap();
        p.set(g.linear(&[0, 0, 0]), true);
        assert!(p.contains([4, 4, 0]));
        assert!(p.contains([-4, 0, 0]));

        let mut mi = BinaryMask::empty(&g, ExtensionRule::Mirror).unwrap();
        mi.set(g.linear(&[0, 1, 0]), true);
        assert!(mi.contains([-1, 1, 0]));
        assert!(!mi.contains([-2, 1, 0]));
        assert!(mi.contains([7, 1, 0]));
    }

    #[test]
    fn exterior_queries_are_pure() {
        let g = geom4();
        let m = BinaryMask::empty(&g, ExtensionRule::half_space(&[1, 1], 0.3).unwrap()).unwrap();
        for k in -20..20 {
            let idx = [k, 3 - k, 0];
            assert_eq!(m.contains(idx), m.contains(idx));
        }
    }

    #[test]
    fn zero_normal_is_rejected() {
        assert!(ExtensionRule::half_space(&[0, 0], 0.0).is_err());
    }

    #[test]
    fn volume_counts_cells() {
        let g = GridGeometry::new(&[10, 10], 0.5, &[0.0, 0.0]).unwrap();
        let full = BinaryMask::full(&g, ExtensionRule::ConstantOutside).unwrap();
        let empty = BinaryMask::empty(&g, ExtensionRule::ConstantOutside).unwrap();
        let w = Window::full(&g);
        assert_eq!(volume(&full, &w).unwrap(), 25.0);
        assert_eq!(volume(&empty, &w).unwrap(), 0.0);
    }

    #[test]
    fn translate_shifts_bits_and_half_space() {
        let g = geom4();
        let m = BinaryMask::from_predicate(&g, ExtensionRule::half_space(&[0, 1], 0.0).unwrap(), |x| {
            x[1] <= 0.0
        })
        .unwrap();
        let up = m.translate(&[0, 1, 0]);
        assert_eq!(up.count(), 12);
        assert!(up.contains([0, 2, 0]));
        assert!(!up.contains([0, 3, 0]));
    }

    #[test]
    fn geometry_json_round_trip() {
        let g = GridGeometry::new(&[2, 6], 0.5, &[0.0, -1.0])
            .unwrap()
            .with_periodic(&[true, false])
            .unwrap()
            .with_wrap_shift(0, &[0, 2])
            .unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: GridGeometry = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
    }
}
