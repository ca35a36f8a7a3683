//! Instance generators for the hardness constructions and brute-force
//! certifiers that check each construction against its source problem.

pub mod grid;
pub mod measure;
pub mod moment;
pub mod pvc;

pub use grid::{
    build_cylinder_instance, build_grid_instance, certify_grid_equivalence, cylinder_sentinels, grid_centre_labels,
    solve_grid_tiling, GridReductionSpec, GridTilingInstance,
};
pub use measure::{measure_approx_check, MeasureReport, MEASURE_TOLERANCE};
pub use moment::{
    clearance_grid, fit_sphere_3d, fit_sphere_4d, integer_separation, solve_sphere, sphere_curve_clearance, ClearanceReport,
    SphereFit,
};
pub use pvc::{
    build_pvc4_instance, build_pvc6_instance, build_pvc_instance, certify_pvc_equivalence, certify_pvc_reduction,
    check_cost_formula, solve_pvc, PvcGraph, PvcReduction, PvcSolution, PvcVariant,
};

/// One named check inside a certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertificateCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CertificateCheck {
    pub fn new(name: &str, passed: bool, detail: String) -> CertificateCheck {
        CertificateCheck { name: name.to_string(), passed, detail }
    }
}

/// Ties a source instance to its generated clustering instance and records
/// the outcome of every brute-force comparison between them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionCertificate {
    /// `grid_tiling`, `pvc4` or `pvc6`.
    pub source: String,
    /// Construction constants and both solvers' answers, as exact strings.
    pub parameters: Vec<(String, String)>,
    pub checks: Vec<CertificateCheck>,
}

impl ReductionCertificate {
    pub fn holds(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CertificateCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn parameter(&self, key: &str) -> Option<&str> {
        self.parameters.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}
