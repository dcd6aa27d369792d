//! Uniform particle grid on [0, 1] with peridynamic-horizon bookkeeping.
//!
//! Nodes are addressed by a signed index `i`: `0..N` are the real particles,
//! negative indices and indices `>= N` are fictitious (ghost) particles. The
//! fictitious region extends `2m` spacings beyond each end, where `m` is the
//! number of spacings per horizon, so that every neighbour of a neighbour of a
//! real particle exists.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Grid {
    num_nodes: usize,
    spacing: f64,
    horizon_ratio: usize,
    delta: f64,
    requested_delta: f64,
}

impl Grid {
    /// Builds the grid, snapping the horizon to the nearest multiple of the spacing.
    pub fn new(num_nodes: usize, delta: f64) -> Result<Self> {
        if num_nodes < 5 {
            return Err(Error::InvalidParameter {
                field: "num_particles",
                reason: format!("need at least 5 particles, got {num_nodes}"),
            });
        }
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::InvalidParameter {
                field: "Delta",
                reason: format!("must lie in (0, 0.5), got {delta}"),
            });
        }
        let spacing = 1.0 / (num_nodes - 1) as f64;
        let min = 3.0 * spacing;
        if delta < min * (1.0 - 1e-12) {
            return Err(Error::HorizonUnderResolved { delta, min });
        }
        let m = (delta / spacing).round() as usize;
        // Mirror ghosts reflect interior nodes, so the interior must be at least 2m wide.
        if 2 * m > num_nodes - 1 {
            return Err(Error::InvalidParameter {
                field: "Delta",
                reason: format!("horizon of {m} spacings is too wide for {num_nodes} particles"),
            });
        }
        Ok(Self {
            num_nodes,
            spacing,
            horizon_ratio: m,
            delta: m as f64 * spacing,
            requested_delta: delta,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// ΔX = 1/(N−1).
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// m = Δ/ΔX.
    pub fn horizon_ratio(&self) -> usize {
        self.horizon_ratio
    }

    /// Effective (snapped) horizon m·ΔX.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn requested_delta(&self) -> f64 {
        self.requested_delta
    }

    /// True when the requested horizon had to be moved onto the grid.
    pub fn delta_was_snapped(&self) -> bool {
        (self.delta - self.requested_delta).abs() > 1e-12 * self.delta
    }

    /// Number of ghost particles on each side (2m).
    pub fn ghost_count(&self) -> usize {
        2 * self.horizon_ratio
    }

    /// Particle volume per unit cross-section.
    pub fn volume(&self) -> f64 {
        self.spacing
    }

    pub fn position(&self, i: isize) -> f64 {
        i as f64 * self.spacing
    }

    /// Positions of the real particles.
    pub fn positions(&self) -> Vec<f64> {
        (0..self.num_nodes as isize).map(|i| self.position(i)).collect()
    }

    pub fn is_ghost(&self, i: isize) -> bool {
        i < 0 || i >= self.num_nodes as isize
    }

    /// Signed offsets ±1..±m of the particles inside one horizon.
    pub fn offsets(&self) -> impl Iterator<Item = isize> + '_ {
        let m = self.horizon_ratio as isize;
        (-m..=m).filter(|&o| o != 0)
    }

    /// Particles within the horizon of `i`, self excluded, ghosts included.
    pub fn neighbors(&self, i: isize) -> Vec<isize> {
        self.offsets().map(|o| i + o).collect()
    }

    /// Dimensionless bond length between two particles.
    pub fn bond_length(&self, i: isize, j: isize) -> f64 {
        (i - j).unsigned_abs() as f64 * self.spacing
    }

    /// Quadrature weight 𝒱/Ξ² for a bond spanning `offset` spacings.
    pub fn bond_weight(&self, offset: isize) -> f64 {
        let xi = offset.unsigned_abs() as f64 * self.spacing;
        self.spacing / (xi * xi)
    }

    /// Length of a field extended with ghosts on both sides.
    pub fn extended_len(&self) -> usize {
        self.num_nodes + 2 * self.ghost_count()
    }

    /// Position of signed node `i` inside an extended array.
    pub fn ext_index(&self, i: isize) -> usize {
        (i + self.ghost_count() as isize) as usize
    }

    /// Real particle that ghost `i` mirrors (identity for real particles).
    ///
    /// Reflection is about the clamped end nodes X = 0 and X = 1, i.e. the
    /// field is extended evenly, which enforces a zero slope there.
    pub fn mirror_source(&self, i: isize) -> usize {
        let last = self.num_nodes as isize - 1;
        let j = if i < 0 {
            -i
        } else if i > last {
            2 * last - i
        } else {
            i
        };
        j as usize
    }
}
