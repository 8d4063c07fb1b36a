use serde::Serialize;

use crate::error::{Error, Result};

/// Minimum number of nodes strictly between the centre and `R_out`.
pub const MIN_INTERIOR_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrid {
    radii: Vec<f64>,
    dimension: usize,
}

impl RadialGrid {
    pub fn new(radii: Vec<f64>, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if radii.len() < MIN_INTERIOR_NODES + 2 {
            return Err(Error::InvalidGrid(format!(
                "{} nodes given; need at least {} interior nodes",
                radii.len(),
                MIN_INTERIOR_NODES
            )));
        }
        if radii[0] != 0.0 {
            return Err(Error::InvalidGrid("the first node must be r = 0".into()));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidGrid("radii must be finite and strictly increasing".into()));
        }
        Ok(Self { radii, dimension })
    }

    /// `intervals + 1` equally spaced nodes on `[0, r_out]`.
    pub fn uniform(r_out: f64, intervals: usize, dimension: usize) -> Result<Self> {
        if !(r_out > 0.0 && r_out.is_finite()) {
            return Err(Error::InvalidGrid(format!("R_out must be positive, got {r_out}")));
        }
        let radii = (0..=intervals).map(|i| r_out * i as f64 / intervals as f64).collect();
        Self::new(radii, dimension)
    }

    /// Uniform grid with spacing `h`; `r_out` must be a multiple of `h`.
    /// Grids built this way with the same `h` share their nodes.
    pub fn with_spacing(r_out: f64, h: f64, dimension: usize) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        let intervals = (r_out / h).round();
        if !(intervals >= 1.0) || (intervals * h - r_out).abs() > 1e-9 * r_out {
            return Err(Error::InvalidGrid(format!("R_out = {r_out} is not a multiple of h = {h}")));
        }
        let n = intervals as usize;
        let radii = (0..=n).map(|i| i as f64 * h).collect();
        Self::new(radii, dimension)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn r_out(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn max_spacing(&self) -> f64 {
        self.radii.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index of the node at `r`, if there is one within `1e-9·h`.
    pub fn node_index(&self, r: f64) -> Option<usize> {
        let tol = 1e-9 * self.max_spacing();
        let j = self.radii.partition_point(|&x| x < r - tol);
        (j < self.radii.len() && (self.radii[j] - r).abs() <= tol).then_some(j)
    }

    /// Coupling weights `(c_{j,j−1}, c_{j,j+1})` of the radial Laplacian at each
    /// non-boundary node, so that `Δu_j ≈ Σ c_{jk} (u_k − u_j)`.
    ///
    /// Finite-volume form on the shell `[r_{j−½}, r_{j+½}]`:
    /// `N (r_{j+½}^{N−1} (u_{j+1}−u_j)/h_{j+½} − r_{j−½}^{N−1} (u_j−u_{j−1})/h_{j−½}) / (r_{j+½}^N − r_{j−½}^N)`.
    /// The centre cell is the ball of radius `h/2`, which gives `2N (u_1 − u_0)/h²`.
    pub(crate) fn laplacian_weights(&self) -> Vec<(f64, f64)> {
        let r = &self.radii;
        let n = self.dimension as f64;
        let m = r.len() - 1;
        let mut w = Vec::with_capacity(m);
        let h0 = r[1] - r[0];
        w.push((0.0, 2.0 * n / (h0 * h0)));
        for j in 1..m {
            let hm = r[j] - r[j - 1];
            let hp = r[j + 1] - r[j];
            // Radii scaled by r_j so high powers stay in range.
            let sm = 0.5 * (r[j] + r[j - 1]) / r[j];
            let sp = 0.5 * (r[j] + r[j + 1]) / r[j];
            let volume = r[j] * (sp.powf(n) - sm.powf(n)) / n;
            w.push((sm.powf(n - 1.0) / (volume * hm), sp.powf(n - 1.0) / (volume * hp)));
        }
        w
    }
}
