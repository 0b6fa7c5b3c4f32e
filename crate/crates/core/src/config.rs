use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by the analysis routines.
///
/// None of these come from the underlying theory, which is stated in exact
/// arithmetic. Every threshold that decides a verdict lives here so it can be
/// overridden from the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Base number of frequency samples on [0, pi].
    pub grid: usize,
    /// Minimum sample count once a pole or zero sits close to the unit circle.
    pub dense_grid: usize,
    /// Distance to the unit circle below which the grid is densified.
    pub densify_below: f64,
    /// Relative margin for declaring the peak gain unique.
    pub peak_margin: f64,
    /// Half-width of the band in which a phase-rate comparison is undecided.
    pub rate_tol: f64,
    /// Poles closer than this to the unit circle are treated as on it.
    pub unit_circle_tol: f64,
    /// Closed-loop roots within this distance of the unit circle count as boundary roots.
    pub boundary_tol: f64,
    /// Clustering radius when counting root multiplicity.
    pub cluster_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            grid: 4096,
            dense_grid: 1 << 14,
            densify_below: 1e-2,
            peak_margin: 1e-6,
            rate_tol: 1e-7,
            unit_circle_tol: 1e-9,
            boundary_tol: 1e-6,
            cluster_tol: 1e-7,
        }
    }
}
