//! Lower bounds for conjugates of a rational Reeb rotation.

use contactkit::c0::{c0_distance_on, c0_lower_at, GridSpec};
use contactkit::constructions::squeeze_at;
use contactkit::fields::rotation_plateau;
use contactkit::flow::{compose, conjugate, FlowMap};
use contactkit::lifts::{lift, HamiltonianFlow};
use contactkit::Space;

use super::{timed, Settings};
use crate::error::{ExperimentError, Result};
use crate::random::{random_conjugator, substream};
use crate::report::{ExperimentReport, Measurement};

const SLACK: f64 = 1e-3;
const ITERATE_TOL: f64 = 1e-6;
const PLATEAU_RADIUS: f64 = 0.3;
const SUPPORT_RADIUS: f64 = 0.8;

/// Points of the plateau tube: a base lattice inside the disc times circle samples.
fn tube_points(n: usize, per_axis: usize, circle: usize) -> Vec<Vec<f64>> {
    let m = 2 * n;
    let r = 0.95 * PLATEAU_RADIUS;
    let step = 2.0 * r / (per_axis - 1) as f64;
    let mut base = vec![Vec::new()];
    for _ in 0..m {
        let mut next = Vec::with_capacity(base.len() * per_axis);
        for b in &base {
            for i in 0..per_axis {
                let mut c: Vec<f64> = b.clone();
                c.push(-r + step * i as f64);
                next.push(c);
            }
        }
        base = next;
    }
    let mut out = Vec::new();
    for b in base.into_iter().filter(|b| b.iter().map(|v| v * v).sum::<f64>() <= r * r) {
        for k in 0..circle {
            let mut p = b.clone();
            p.push(k as f64 / circle as f64);
            out.push(p);
        }
    }
    out
}

/// `|| psi phi psi^-1 ||` stays at least `1/m` for the lift of a Hamiltonian
/// equal to `1/m` on a tube, over seeded random conjugators `psi`.
pub fn rational_rotation(s: &Settings, m: usize, conjugators: usize) -> Result<ExperimentReport> {
    timed(|| {
        if m < 2 {
            return Err(ExperimentError::Parameter(format!("m must be at least 2, got {m}")));
        }
        let tol = s.tolerance()?;
        let n = s.n;
        let space = Space::Prequantized(n);
        let height = 1.0 / m as f64;
        let h = rotation_plateau(Space::SymplecticBase(n), height, &vec![0.0; 2 * n], PLATEAU_RADIUS, SUPPORT_RADIUS)?;
        let phi = lift(&HamiltonianFlow::new(h, 1.0, tol)?);
        let mut r = ExperimentReport::new(
            "rational-rotation",
            "conjugates of the lift of a Hamiltonian equal to 1/m on a tube have C0 norm at least 1/m",
            s.seed,
        );
        r.param("m", m);
        r.param("conjugators", conjugators);
        r.param("plateau_radius", PLATEAU_RADIUS);
        r.param("support_radius", SUPPORT_RADIUS);
        r.param("n", n);

        let points = tube_points(n, if n == 1 { 9 } else { 4 }, 32);
        r.param("tube_points", points.len());
        let iterate = compose(vec![phi.clone(); m])?;
        let id = FlowMap::identity(space);
        let back = c0_lower_at(&iterate, &id, &points)?;
        r.push(Measurement::at_most("iterate_defect", back.lower, ITERATE_TOL));

        let grid = GridSpec {
            mesh: s.mesh,
            max_per_axis: 21,
            ..GridSpec::default()
        };
        let mut shortfall = f64::NEG_INFINITY;
        let mut fallbacks = 0usize;
        let plain = c0_lower_at(&phi, &id, &points)?;
        shortfall = shortfall.max(height - plain.lower);
        r.point("lower_estimate", -1.0, plain.lower);
        // A squeeze supported away from the tube leaves every tube distance unchanged.
        let mut away = vec![0.0; 2 * n + 1];
        away[0] = 0.6;
        let disjoint = squeeze_at(n, 0.5, 0.1, 0.25, &away, tol)?.map;
        let moved = compose(vec![disjoint.clone(), phi.clone()])?;
        let kept = c0_lower_at(&moved, &disjoint, &points)?;
        r.push(Measurement::close("disjoint_squeeze_change", kept.lower, plain.lower, ITERATE_TOL));
        for i in 0..conjugators {
            let mut rng = substream(s.seed, 3000 + i as u64);
            let psi = random_conjugator(&mut rng, n, tol)?;
            let moved = compose(vec![psi.clone(), phi.clone()])?;
            let mut lower = c0_lower_at(&moved, &psi, &points)?.lower;
            if lower < height - SLACK {
                fallbacks += 1;
                let conj = conjugate(&phi, &psi)?;
                let boxes = conj.support().boxes().map(|b| b.to_vec()).unwrap_or_default();
                lower = lower.max(c0_distance_on(&conj, &id, &boxes, &grid)?.lower);
            }
            shortfall = shortfall.max(height - lower);
            r.point("lower_estimate", i as f64, lower);
        }
        r.param("lattice_fallbacks", fallbacks);
        r.push(Measurement::at_most("norm_shortfall", shortfall, SLACK));
        Ok(r)
    })
}
