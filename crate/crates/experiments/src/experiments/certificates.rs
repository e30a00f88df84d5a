//! Pointwise checks: contact pullback sweeps and the squeeze formula.

use contactkit::constructions::{
    ball_samples, basis_change_coords, box_samples, cutoff_translation, reeb_push, squeeze, squeeze_at,
};
use contactkit::fields::radial_profile;
use contactkit::flow::{pullback_defect, pullback_defect_fn, FlowMap};
use contactkit::lifts::{lift, HamiltonianFlow};
use contactkit::space::{FormId, OneForm, Point};
use contactkit::support::AxisBox;
use contactkit::Space;

use super::{fmt_key, timed, Settings};
use crate::error::Result;
use crate::random::{random_circle_flow, random_conjugator, substream, STEEP};
use crate::report::{ExperimentReport, Measurement};

const SWEEP: usize = 1000;
const CONTACT_TOL: f64 = 1e-4;
const FORMULA_TOL: f64 = 1e-5;
const IDENTITY_TOL: f64 = 1e-6;

fn sample_region(phi: &FlowMap) -> AxisBox {
    let space = phi.space();
    let d = space.dimension();
    let mut b = phi
        .support()
        .hull()
        .unwrap_or_else(|| AxisBox::new(vec![-1.0; d], vec![1.0; d]));
    if space.is_prequantized() {
        b.lo[d - 1] = 0.0;
        b.hi[d - 1] = 1.0;
    }
    b
}

/// Worst best-fit residual and worst `|conformal - 1|` over the sweep.
fn sweep_defect(phi: &FlowMap, points: &[Vec<f64>]) -> Result<(f64, f64)> {
    let space = phi.space();
    let form = OneForm::alpha0(space);
    let mut residual: f64 = 0.0;
    let mut strict: f64 = 0.0;
    for p in points {
        let d = pullback_defect(phi, &form, &Point::new(space, p.clone())?)?;
        residual = residual.max(d.residual);
        strict = strict.max((d.conformal - 1.0).abs());
    }
    Ok((residual, strict))
}

/// `phi^* alpha_0 = e^g alpha_0` at 1000 points for every construction.
pub fn contact_certificate(s: &Settings) -> Result<ExperimentReport> {
    timed(|| {
        let tol = s.tolerance()?;
        let n = s.n;
        let euclid = Space::EuclideanContact(n);
        let circle = Space::Prequantized(n);
        let d = euclid.dimension();
        let mut r = ExperimentReport::new(
            "contact-certificate",
            "every constructed map pulls alpha_0 back to a positive multiple of itself",
            s.seed,
        );
        r.param("points_per_map", SWEEP);
        r.param("n", n);

        let mut maps: Vec<(String, FlowMap, bool)> = Vec::new();
        maps.push(("squeeze-0.5".into(), squeeze(n, 0.5, 0.5, 1.0, tol)?.map, false));
        maps.push(("squeeze-0.1".into(), squeeze(n, 0.1, 0.3, 0.8, tol)?.map, false));
        maps.push(("translation".into(), cutoff_translation(euclid, 0.7, 0.5, 2.0, tol)?, false));
        let target = AxisBox::new(vec![-0.2; d], vec![0.2; d]);
        maps.push(("reeb-push".into(), reeb_push(euclid, 0.3, &target, (-0.8, 0.8), tol)?, false));
        let mut lo = vec![-0.2; d];
        let mut hi = vec![0.2; d];
        lo[d - 1] = 0.0;
        hi[d - 1] = 1.0;
        maps.push((
            "reeb-push-circle".into(),
            reeb_push(circle, 0.25, &AxisBox::new(lo, hi), (-0.8, 0.8), tol)?,
            false,
        ));
        let h = radial_profile(Space::SymplecticBase(n), 0.3, 0.3, 0.9)?;
        maps.push(("lift".into(), lift(&HamiltonianFlow::new(h, 1.0, tol)?), true));
        let mut center = vec![0.1; d];
        center[d - 1] = 0.3;
        maps.push(("squeeze-circle".into(), squeeze_at(n, 0.6, 0.15, 0.3, &center, tol)?.map, false));
        for k in 0..2u64 {
            let mut rng = substream(s.seed, 2000 + k);
            maps.push((format!("circle-flow-{k}"), random_circle_flow(&mut rng, n, 0.4, STEEP, tol)?, false));
        }
        let mut rng = substream(s.seed, 2100);
        maps.push(("conjugator".into(), random_conjugator(&mut rng, n, tol)?, false));

        for (name, phi, strict) in &maps {
            let points = box_samples(&sample_region(phi), SWEEP);
            let (residual, conformal) = sweep_defect(phi, &points)?;
            r.push(Measurement::at_most(format!("pullback_residual[{name}]"), residual, CONTACT_TOL));
            if *strict {
                r.push(Measurement::at_most(format!("strict_defect[{name}]"), conformal, CONTACT_TOL));
            }
        }

        // The change of coordinates is a contactomorphism between two forms.
        let source = OneForm::alpha0(euclid);
        let target = OneForm::new(FormId::Alpha0Prime, euclid)?;
        let eval = |states: &mut [f64]| -> contactkit::Result<()> {
            for block in states.chunks_exact_mut(d + 1) {
                let img = basis_change_coords(euclid, &block[..d]);
                block[..d].copy_from_slice(&img);
            }
            Ok(())
        };
        let mut worst: f64 = 0.0;
        for p in ball_samples(&vec![0.0; d], 2.0, SWEEP) {
            worst = worst.max(pullback_defect_fn(eval, &source, &target, &p)?.unit_residual);
        }
        r.push(Measurement::at_most("pullback_residual[basis-change]", worst, CONTACT_TOL));
        Ok(r)
    })
}

/// The squeeze is `(ax, ay, a^2 z)` on `B(r)` and the identity outside `B(R)`.
pub fn squeeze_formula(s: &Settings) -> Result<ExperimentReport> {
    timed(|| {
        let tol = s.tolerance()?;
        let n = s.n;
        let space = Space::EuclideanContact(n);
        let d = space.dimension();
        let (r_in, r_out) = (0.5, 1.0);
        let mut rep = ExperimentReport::new(
            "squeeze-formula",
            "the squeeze acts by (ax, ay, a^2 z) on B(r) and is the identity outside B(R)",
            s.seed,
        );
        rep.param("r", r_in);
        rep.param("R", r_out);
        rep.param("points", SWEEP);
        rep.param("n", n);
        let inside = ball_samples(&vec![0.0; d], r_in, SWEEP);
        let outside: Vec<Vec<f64>> = ball_samples(&vec![0.0; d], r_out + 0.5, 6 * SWEEP)
            .into_iter()
            .filter(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt() > r_out)
            .take(SWEEP)
            .collect();
        for a in [1.0, 0.5, 0.1] {
            let sq = squeeze(n, a, r_in, r_out, tol)?;
            let imgs = sq.map.apply_many(&inside)?;
            let mut worst: f64 = 0.0;
            for (p, img) in inside.iter().zip(&imgs) {
                let expected: Vec<f64> = p
                    .iter()
                    .enumerate()
                    .map(|(k, v)| if k == d - 1 { a * a * v } else { a * v })
                    .collect();
                worst = worst.max(space.distance_raw(&img.coords, &expected));
            }
            rep.push(Measurement::at_most(format!("formula_error[a={}]", fmt_key(a)), worst, FORMULA_TOL));
            let imgs = sq.map.apply_many(&outside)?;
            let mut moved: f64 = 0.0;
            for (p, img) in outside.iter().zip(&imgs) {
                moved = moved.max(space.distance_raw(&img.coords, p));
            }
            rep.push(Measurement::at_most(format!("outside_motion[a={}]", fmt_key(a)), moved, IDENTITY_TOL));
            rep.point("formula_error", a, worst);
        }
        Ok(rep)
    })
}
