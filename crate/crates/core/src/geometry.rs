//! Fluid-antenna array blueprints and their difference co-arrays.
//!
//! All element coordinates live on the integer lattice in units of the
//! basic movement step `d`. The physical spacing is applied only when
//! steering phases are formed, so co-array arithmetic is exact.
//!
//! Two blueprints are provided:
//!
//! * [`DesignKind::Aligned`]: two sparse subarrays that both move, with
//!   steps `d` and `M1 (G+1) d`, for source waveforms that repeat across
//!   movements. Covariances are formed over the stacked output.
//! * [`DesignKind::Misaligned`]: a fixed unit-spaced subarray plus a moving
//!   sparse subarray, for waveforms that change between movements.
//!   Covariances are formed per movement.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default carrier wavelength (normalized units).
pub const DEFAULT_WAVELENGTH: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Aligned,
    Misaligned,
}

impl std::fmt::Display for DesignKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DesignKind::Aligned => "aligned",
            DesignKind::Misaligned => "misaligned",
        })
    }
}

/// Array blueprint with explicit per-movement element coordinates.
///
/// `positions[v][m]` is the lattice coordinate of physical element `m`
/// after movement `v`; the first `m1` entries belong to subarray 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryDesign {
    pub kind: DesignKind,
    pub m1: usize,
    pub m2: usize,
    /// Number of movements `G`; there are `G + 1` layouts.
    pub movements: usize,
    /// Basic step `d` in the same length unit as `wavelength`.
    pub spacing: f64,
    pub wavelength: f64,
    pub positions: Vec<Vec<i64>>,
}

impl GeometryDesign {
    /// Total physical element count `M`.
    pub fn antennas(&self) -> usize {
        self.m1 + self.m2
    }

    /// Intra-subarray step of subarray 1 in the aligned design, `G + 1`.
    pub fn delta1(&self) -> i64 {
        self.movements as i64 + 1
    }

    /// Step of subarray 2 in the aligned design, `M1 (G+1)^2`.
    pub fn delta2(&self) -> Option<i64> {
        match self.kind {
            DesignKind::Aligned => Some(self.m1 as i64 * self.delta1() * self.delta1()),
            DesignKind::Misaligned => None,
        }
    }

    /// Largest lag `Δ` of the consecutive co-array run guaranteed by the
    /// blueprint; the observation vector spans lags `-Δ..=Δ`.
    pub fn delta(&self) -> usize {
        max_lag(self.kind, self.m1, self.m2, self.movements) as usize
    }

    /// `d / λ`.
    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing / self.wavelength
    }

    /// Sets the physical spacing and wavelength; coordinates are unchanged.
    pub fn with_spacing(mut self, spacing: f64, wavelength: f64) -> Result<Self> {
        if !(spacing > 0.0 && wavelength > 0.0 && spacing.is_finite() && wavelength.is_finite()) {
            return Err(Error::InvalidDesign(format!(
                "spacing {spacing} and wavelength {wavelength} must be positive and finite"
            )));
        }
        self.spacing = spacing;
        self.wavelength = wavelength;
        Ok(self)
    }

    pub fn layout(&self, movement: usize) -> &[i64] {
        &self.positions[movement]
    }

    /// Subarray-1 and subarray-2 coordinates at one movement.
    pub fn subarrays(&self, movement: usize) -> (&[i64], &[i64]) {
        self.positions[movement].split_at(self.m1)
    }

    /// Coordinates of the stacked output: layout 0, then layout 1, and so on.
    pub fn stacked_positions(&self) -> Vec<i64> {
        self.positions.iter().flatten().copied().collect()
    }

    fn validate(&self) -> Result<()> {
        if self.m1 == 0 || self.m2 == 0 {
            return Err(Error::InvalidDesign(
                "each subarray needs at least one element".into(),
            ));
        }
        if self.positions.len() != self.movements + 1 {
            return Err(Error::InvalidDesign(format!(
                "expected {} layouts, found {}",
                self.movements + 1,
                self.positions.len()
            )));
        }
        let mut sub1 = BTreeSet::new();
        let mut sub2 = BTreeSet::new();
        for (v, layout) in self.positions.iter().enumerate() {
            if layout.len() != self.antennas() {
                return Err(Error::InvalidDesign(format!(
                    "layout {v} has {} elements, expected {}",
                    layout.len(),
                    self.antennas()
                )));
            }
            let distinct: BTreeSet<_> = layout.iter().collect();
            if distinct.len() != layout.len() {
                return Err(Error::InvalidDesign(format!(
                    "layout {v} has coinciding elements"
                )));
            }
            sub1.extend(layout[..self.m1].iter().copied());
            sub2.extend(layout[self.m1..].iter().copied());
        }
        if let Some(p) = sub1.intersection(&sub2).next() {
            return Err(Error::InvalidDesign(format!(
                "subarray 2 collides with subarray 1 at coordinate {p}"
            )));
        }
        Ok(())
    }
}

/// Antenna split maximizing consecutive lags: even `M` halves, odd `M`
/// gives the extra element to subarray 1.
pub fn optimal_split(m: usize) -> (usize, usize) {
    let m1 = m.div_ceil(2);
    (m1, m - m1)
}

fn check_count(m: usize) -> Result<()> {
    if m < 2 {
        Err(Error::InvalidDesign(format!(
            "need at least 2 antennas (one per subarray), got {m}"
        )))
    } else {
        Ok(())
    }
}

/// Aligned-signal design with the optimal split.
pub fn design_aligned(m: usize, movements: usize) -> Result<GeometryDesign> {
    check_count(m)?;
    let (m1, m2) = optimal_split(m);
    design_aligned_split(m1, m2, movements)
}

/// Aligned-signal design with an explicit split.
pub fn design_aligned_split(m1: usize, m2: usize, movements: usize) -> Result<GeometryDesign> {
    let d1 = movements as i64 + 1;
    let d2 = m1 as i64 * d1 * d1;
    let positions = (0..=movements as i64)
        .map(|n| {
            let sub1 = (0..m1 as i64).map(|i| n + i * d1);
            let start2 = (2 * m1 as i64 - 1) * d1 + movements as i64 + m1 as i64 * n * d1;
            let sub2 = (0..m2 as i64).map(|j| start2 + j * d2);
            sub1.chain(sub2).collect()
        })
        .collect();
    let design = GeometryDesign {
        kind: DesignKind::Aligned,
        m1,
        m2,
        movements,
        spacing: DEFAULT_WAVELENGTH / 2.0,
        wavelength: DEFAULT_WAVELENGTH,
        positions,
    };
    design.validate()?;
    Ok(design)
}

/// Misaligned-signal (generalized) design with the optimal split.
pub fn design_misaligned(m: usize, movements: usize) -> Result<GeometryDesign> {
    check_count(m)?;
    let (m1, m2) = optimal_split(m);
    design_misaligned_split(m1, m2, movements)
}

/// Misaligned-signal design with an explicit split. Subarray 1 never moves.
pub fn design_misaligned_split(m1: usize, m2: usize, movements: usize) -> Result<GeometryDesign> {
    let d1 = movements as i64 + 1;
    let m1i = m1 as i64;
    let positions = (0..=movements as i64)
        .map(|g| {
            let sub1 = 0..m1i;
            let sub2 = (0..m2 as i64).map(|j| (2 * m1i - 1) + j * m1i * d1 + g * m1i);
            sub1.chain(sub2).collect()
        })
        .collect();
    let design = GeometryDesign {
        kind: DesignKind::Misaligned,
        m1,
        m2,
        movements,
        spacing: DEFAULT_WAVELENGTH / 2.0,
        wavelength: DEFAULT_WAVELENGTH,
        positions,
    };
    design.validate()?;
    Ok(design)
}

pub fn design(kind: DesignKind, m: usize, movements: usize) -> Result<GeometryDesign> {
    match kind {
        DesignKind::Aligned => design_aligned(m, movements),
        DesignKind::Misaligned => design_misaligned(m, movements),
    }
}

/// Union of all per-movement coordinates, sorted.
pub fn virtual_positions(design: &GeometryDesign) -> Vec<i64> {
    let set: BTreeSet<i64> = design.positions.iter().flatten().copied().collect();
    set.into_iter().collect()
}

/// Set of pairwise differences with its consecutive run around zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagSet {
    pub lags: Vec<i64>,
    /// `[lo, hi]` of the maximal run of consecutive lags containing 0.
    pub consecutive_range: (i64, i64),
    pub consecutive_count: usize,
}

impl LagSet {
    pub fn contains(&self, lag: i64) -> bool {
        self.lags.binary_search(&lag).is_ok()
    }
}

/// All pairwise differences of `positions` (any integer set; this is also
/// the escape hatch for arbitrary geometries).
pub fn difference_coarray(positions: &[i64]) -> LagSet {
    let lags: BTreeSet<i64> = positions
        .iter()
        .flat_map(|&a| positions.iter().map(move |&b| a - b))
        .collect();
    let mut hi = 0;
    while lags.contains(&(hi + 1)) {
        hi += 1;
    }
    let (lo, hi, count) = if lags.is_empty() {
        (0, 0, 0)
    } else {
        (-hi, hi, (2 * hi + 1) as usize)
    };
    LagSet {
        lags: lags.into_iter().collect(),
        consecutive_range: (lo, hi),
        consecutive_count: count,
    }
}

/// `Δ` for a given split: the largest lag of the guaranteed consecutive run.
pub fn max_lag(kind: DesignKind, m1: usize, m2: usize, movements: usize) -> i64 {
    let (m1, m2, d1) = (m1 as i64, m2 as i64, movements as i64 + 1);
    match kind {
        DesignKind::Aligned => m1 * d1 - 1 + m1 * m2 * d1 * d1,
        DesignKind::Misaligned => m1 - 1 + m1 * m2 * d1,
    }
}

/// Closed-form maximum number of consecutive lags for `M` antennas and `G`
/// movements under the optimal split.
pub fn max_consecutive_dof(m: usize, movements: usize, kind: DesignKind) -> Result<usize> {
    check_count(m)?;
    let (m, d1) = (m as i64, movements as i64 + 1);
    let even = m % 2 == 0;
    let f = match (kind, even) {
        (DesignKind::Aligned, true) => m * d1 + m * m * d1 * d1 / 2 - 1,
        (DesignKind::Aligned, false) => (m + 1) * d1 + (m * m - 1) * d1 * d1 / 2 - 1,
        (DesignKind::Misaligned, true) => m - 1 + m * m * d1 / 2,
        (DesignKind::Misaligned, false) => m + (m * m - 1) * d1 / 2,
    };
    Ok(f as usize)
}
