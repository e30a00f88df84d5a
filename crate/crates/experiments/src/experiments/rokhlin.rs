//! Extraction of one fragment from a truncated Rokhlin element.

use std::sync::Arc;

use contactkit::c0::{c0_distance, c0_distance_on, GridSpec};
use contactkit::constructions::{rokhlin_element, rokhlin_extract};
use contactkit::fields::{bump, contact_vector_field, Field, Scaled};
use contactkit::flow::FlowMap;
use contactkit::Space;

use super::{fmt_key, timed, Settings};
use crate::error::{ExperimentError, Result};
use crate::report::{ExperimentReport, Measurement};

const AGREEMENT_TOL: f64 = 1e-5;
const FRAGMENT_SUPPORT: f64 = 0.54;
const HEIGHTS: [f64; 4] = [0.35, -0.3, 0.25, -0.2];
const PLATEAUS: [f64; 4] = [0.2, 0.25, 0.15, 0.3];

fn fragments(n: usize, count: usize, s: &Settings) -> Result<Vec<FlowMap>> {
    let space = Space::EuclideanContact(n);
    let tol = s.tolerance()?;
    (0..count)
        .map(|k| {
            let cut = bump(space, PLATEAUS[k % 4], FRAGMENT_SUPPORT)?;
            let h: Field = Arc::new(Scaled(HEIGHTS[k % 4], cut));
            Ok(FlowMap::flow(contact_vector_field(h)?, 1.0, tol).with_label(format!("f{}", k + 1)))
        })
        .collect()
}

/// `d(approximant, target) < 2 eps`, shrinking with `eps`.
pub fn rokhlin_demo(s: &Settings, count: usize, eps_list: &[f64], index: usize) -> Result<ExperimentReport> {
    timed(|| {
        if index == 0 || index > count {
            return Err(ExperimentError::Parameter(format!("fragment index {index} out of 1..={count}")));
        }
        let tol = s.tolerance()?;
        let fs = fragments(s.n, count, s)?;
        let g = rokhlin_element(&fs, count, tol)?;
        let mut r = ExperimentReport::new(
            "rokhlin-demo",
            "squeezing the pushed composite approximates the isolated fragment within 2 eps",
            s.seed,
        );
        r.param("fragments", count);
        r.param("index", index);
        r.param("eps", eps_list);
        r.param("fragment_support", FRAGMENT_SUPPORT);
        r.param("mesh", s.mesh);
        r.param("n", s.n);
        let grid = GridSpec {
            mesh: s.mesh,
            max_per_axis: 17,
            ..GridSpec::default()
        };
        let mut previous: Option<f64> = None;
        let mut rise: f64 = 0.0;
        for &eps in eps_list {
            let ex = rokhlin_extract(&g, index, eps)?;
            let key = fmt_key(eps);
            let d = c0_distance(&ex.approximant, &ex.target, &grid)?;
            r.push(Measurement::at_most(format!("distance_over_bound[eps={key}]"), d.upper() - ex.bound, 0.0));
            r.param(&format!("distance_lower[eps={key}]"), d.lower);
            r.param(&format!("distance_upper[eps={key}]"), d.upper());
            if let Some(p) = previous {
                rise = rise.max(d.lower - p);
            }
            previous = Some(d.lower);
            r.point("distance", eps, d.lower);
            r.point("certified_upper", eps, d.upper());
            r.point("bound", eps, ex.bound);
            let target_boxes = ex.target.support().boxes().map(|b| b.to_vec()).unwrap_or_default();
            let near = c0_distance_on(&ex.approximant, &ex.target, &target_boxes, &grid)?;
            r.push(Measurement::at_most(format!("agreement_on_target[eps={key}]"), near.lower, AGREEMENT_TOL));
        }
        r.push(Measurement::at_most("increase_as_eps_shrinks", rise, 0.0));
        Ok(r)
    })
}
