//! Named experiments. Each returns an [`ExperimentReport`] whose measurements
//! are deviations checked against fixed tolerances.

mod certificates;
mod metrics;
mod rokhlin;
mod rotation;
mod spectra;

use std::time::Instant;

use contactkit::flow::Tolerance;
use contactkit::translated::ActionSpectrum;

use crate::error::{ExperimentError, Result};
use crate::report::ExperimentReport;

pub use certificates::{contact_certificate, squeeze_formula};
pub use metrics::co_vs_c0;
pub use rokhlin::rokhlin_demo;
pub use rotation::rational_rotation;
pub use spectra::{displacement_spectrum, lift_endpoints, path_independence, radial_spectrum, spectrum_bound};

/// Settings shared by every experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub seed: u64,
    /// Lattice spacing of sup-norm estimates.
    pub mesh: f64,
    /// Relative integrator tolerance; the absolute tolerance is a tenth of it.
    pub tol: f64,
    /// Half the dimension of the base.
    pub n: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            seed: 0,
            mesh: 0.02,
            tol: 1e-9,
            n: 1,
        }
    }
}

impl Settings {
    pub fn tolerance(&self) -> Result<Tolerance> {
        Ok(Tolerance::new(self.tol / 10.0, self.tol)?)
    }

    /// Grid points per axis for a search whose default is `base` in two dimensions.
    pub fn per_axis(&self, base: usize) -> usize {
        if self.n <= 1 {
            base
        } else {
            ((base as f64).powf(1.0 / self.n as f64).ceil() as usize).max(7)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > 4 {
            return Err(ExperimentError::Parameter(format!("n must be in 1..=4, got {}", self.n)));
        }
        if !(self.mesh > 0.0 && self.mesh <= 0.5) {
            return Err(ExperimentError::Parameter(format!("mesh must be in (0, 0.5], got {}", self.mesh)));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-5) {
            return Err(ExperimentError::Parameter(format!("tol must be in (0, 1e-5], got {}", self.tol)));
        }
        Ok(())
    }
}

pub const IDS: [&str; 11] = [
    "contact-certificate",
    "squeeze-formula",
    "radial-spectrum",
    "lift-endpoints",
    "spectrum-bound",
    "displacement-spectrum",
    "rational-rotation",
    "rokhlin-demo",
    "path-independence",
    "co-vs-c0",
    "verify-all",
];

/// Run one experiment by id with its default parameters.
pub fn run(id: &str, s: &Settings) -> Result<Vec<ExperimentReport>> {
    s.validate()?;
    let one = |r: Result<ExperimentReport>| r.map(|r| vec![r]);
    match id {
        "contact-certificate" => one(contact_certificate(s)),
        "squeeze-formula" => one(squeeze_formula(s)),
        "radial-spectrum" => one(radial_spectrum(s, 0.3, &[0.0, 0.25, 0.5, 1.0])),
        "lift-endpoints" => one(lift_endpoints(s)),
        "spectrum-bound" => one(spectrum_bound(s, 100)),
        "displacement-spectrum" => one(displacement_spectrum(s, 0.3, 1.0 / 3.0, 2.0 / 3.0)),
        "rational-rotation" => one(rational_rotation(s, 5, 50)),
        "rokhlin-demo" => one(rokhlin_demo(s, 3, &[0.1, 0.05, 0.025], 2)),
        "path-independence" => one(path_independence(s, 10)),
        "co-vs-c0" => one(co_vs_c0(s, &[0, 1, 2, 3])),
        "verify-all" => IDS[..IDS.len() - 1].iter().map(|id| run(id, s).map(|mut v| v.remove(0))).collect(),
        other => Err(ExperimentError::Parameter(format!("unknown experiment {other}"))),
    }
}

/// Time `body` and record the runtime on its report.
pub(crate) fn timed<F>(body: F) -> Result<ExperimentReport>
where
    F: FnOnce() -> Result<ExperimentReport>,
{
    let start = Instant::now();
    let mut r = body()?;
    r.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

/// Cluster count match and the largest deviation from `expected` (sorted, deduplicated).
pub(crate) fn spectrum_deviation(spec: &ActionSpectrum, expected: &[f64]) -> (bool, f64) {
    let mut e = expected.to_vec();
    e.sort_by(|a, b| a.total_cmp(b));
    e.dedup_by(|a, b| (*a - *b).abs() <= spec.cluster_tol);
    if e.len() != spec.values.len() {
        return (false, f64::NAN);
    }
    let dev = e
        .iter()
        .zip(&spec.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    (true, dev)
}

pub(crate) fn fmt_key(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}
