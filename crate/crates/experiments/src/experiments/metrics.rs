//! Compact-open versus uniform behaviour of a translated family.

use std::sync::Arc;

use contactkit::c0::{c0_distance_on, c0_norm, GridSpec};
use contactkit::constructions::cutoff_translation;
use contactkit::fields::{bump, contact_vector_field, Field, Scaled};
use contactkit::flow::{conjugate, FlowMap};
use contactkit::support::AxisBox;
use contactkit::Space;

use super::{timed, Settings};
use crate::error::Result;
use crate::report::{ExperimentReport, Measurement};

const NORM_TOL: f64 = 1e-3;
const STEP: f64 = 1.5;
const COMPACT_HALF: f64 = 1.0;

/// `f_k = T_k f_0 T_k^-1` keeps its C0 norm while its displacement on a fixed
/// compact set dies once the support has left it.
pub fn co_vs_c0(s: &Settings, ks: &[usize]) -> Result<ExperimentReport> {
    timed(|| {
        let tol = s.tolerance()?;
        let space = Space::EuclideanContact(s.n);
        let d = space.dimension();
        let h: Field = Arc::new(Scaled(0.3, bump(space, 0.2, 0.5)?));
        let f0 = FlowMap::flow(contact_vector_field(h)?, 1.0, tol).with_label("f0");
        let compact = AxisBox::new(vec![-COMPACT_HALF; d], vec![COMPACT_HALF; d]);
        let mut r = ExperimentReport::new(
            "co-vs-c0",
            "translated conjugates keep their C0 norm but converge to the identity on compact sets",
            s.seed,
        );
        r.param("k", ks);
        r.param("step", STEP);
        r.param("compact_half_width", COMPACT_HALF);
        r.param("mesh", s.mesh);
        r.param("n", s.n);
        let grid = GridSpec::with_mesh(s.mesh);
        let id = FlowMap::identity(space);
        let base = c0_norm(&f0, &grid)?;
        r.param("norm_f0", base.lower);
        let mut exited = false;
        for &k in ks {
            let shift = STEP * k as f64;
            let t = cutoff_translation(space, shift, 0.9, 0.9 + shift + 1.0, tol)?;
            let fk = conjugate(&f0, &t)?;
            let norm = c0_norm(&fk, &grid)?;
            let on_k = c0_distance_on(&fk, &id, std::slice::from_ref(&compact), &grid)?;
            r.push(Measurement::close(format!("norm_drift[k={k}]"), norm.lower, base.lower, NORM_TOL));
            r.point("norm", k as f64, norm.lower);
            r.point("compact_sup", k as f64, on_k.lower);
            let outside = fk
                .support()
                .boxes()
                .map(|bs| bs.iter().all(|b| !b.intersects(space, &compact)))
                .unwrap_or(false);
            if outside {
                exited = true;
                r.push(Measurement::at_most(format!("compact_sup_after_exit[k={k}]"), on_k.lower, 0.0));
            }
            if k == 0 {
                // K contains the support: the two estimates are intervals around one sup.
                let gap = (norm.lower - on_k.upper()).max(on_k.lower - norm.upper()).max(0.0);
                r.push(Measurement::at_most("compact_vs_global_gap[k=0]", gap, 0.0));
            }
        }
        r.push(Measurement::holds("support_leaves_compact", exited));
        Ok(r)
    })
}
