//! Flow-level invariants: group law, the defining identity of the contact
//! Hamiltonian, contactomorphism certificates and reparametrisation.

use std::sync::Arc;

use contactkit::fields::{contact_vector_field, CircleModulated, Field, Radial, RadialBump, SquareTime};
use contactkit::flow::{compose, integrate, pullback_defect, FlowMap, Tolerance};
use contactkit::space::{OneForm, Point};
use contactkit::Space;
use proptest::prelude::*;

fn circle_field(cx: f64, cy: f64, c: [f64; 3]) -> Field {
    let space = Space::Prequantized(1);
    let bump: Field = Arc::new(RadialBump::new(space, vec![cx, cy, 0.0], 1.0, 0.2, 0.7, Radial::Base).unwrap());
    Arc::new(CircleModulated::new(bump, c).unwrap())
}

fn euclid_field(height: f64) -> Field {
    let space = Space::EuclideanContact(1);
    Arc::new(RadialBump::new(space, vec![0.1, -0.1, 0.2], height, 0.2, 0.8, Radial::Full).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_property_for_autonomous_fields(
        height in -0.5f64..0.5,
        s in 0.05f64..0.6,
        t in 0.05f64..0.6,
        x in -0.6f64..0.6, y in -0.6f64..0.6, z in -0.6f64..0.6,
    ) {
        let tol = Tolerance::default();
        let field = contact_vector_field(euclid_field(height)).unwrap();
        let p = Point::new(Space::EuclideanContact(1), vec![x, y, z]).unwrap();
        let whole = FlowMap::flow(field.clone(), s + t, tol).apply(&p).unwrap();
        let first = FlowMap::flow(field.clone(), s, tol).apply(&p).unwrap();
        let split = FlowMap::flow(field, t, tol).apply(&first).unwrap();
        for (a, b) in whole.coords().iter().zip(split.coords()) {
            prop_assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn alpha_of_velocity_is_the_hamiltonian(
        cx in -0.3f64..0.3, cy in -0.3f64..0.3,
        c0 in -0.4f64..0.4, c1 in -0.2f64..0.2, c2 in -0.2f64..0.2,
        x in -0.5f64..0.5, y in -0.5f64..0.5, z in 0.0f64..1.0,
    ) {
        let h = circle_field(cx, cy, [c0, c1, c2]);
        let space = Space::Prequantized(1);
        let tol = Tolerance::new(1e-13, 1e-12).unwrap();
        let iso = integrate(contact_vector_field(h.clone()).unwrap(), 1.0, tol).unwrap();
        let traj = iso.trajectory(&Point::new(space, vec![x, y, z]).unwrap()).unwrap();
        let form = OneForm::alpha0(space);
        let step = 1e-4;
        for t in [0.2, 0.5, 0.8] {
            let q = traj.at(t).coords;
            let plus = traj.at(t + step).coords;
            let minus = traj.at(t - step).coords;
            let vel: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * step)).collect();
            let mut a = vec![0.0; 3];
            form.covector(&q, &mut a);
            let lhs: f64 = a.iter().zip(&vel).map(|(u, v)| u * v).sum();
            prop_assert!((lhs - h.value(t, &q)).abs() < 1e-6, "alpha(X) {lhs} vs H {}", h.value(t, &q));
        }
    }

    #[test]
    fn contact_flows_pull_alpha_back_conformally(
        cx in -0.3f64..0.3, cy in -0.3f64..0.3,
        c0 in -0.4f64..0.4, c1 in -0.2f64..0.2, c2 in -0.2f64..0.2,
        x in -0.7f64..0.7, y in -0.7f64..0.7, z in 0.0f64..1.0,
    ) {
        let space = Space::Prequantized(1);
        let phi = FlowMap::flow(contact_vector_field(circle_field(cx, cy, [c0, c1, c2])).unwrap(), 1.0, Tolerance::default());
        let d = pullback_defect(&phi, &OneForm::alpha0(space), &Point::new(space, vec![x, y, z]).unwrap()).unwrap();
        prop_assert!(d.residual < 1e-4, "residual {}", d.residual);
        prop_assert!(d.conformal > 0.0);
    }

    #[test]
    fn square_time_path_has_same_endpoint_and_action(
        cx in -0.3f64..0.3, cy in -0.3f64..0.3,
        c0 in -0.4f64..0.4, c1 in -0.2f64..0.2,
        x in -0.5f64..0.5, y in -0.5f64..0.5, z in 0.0f64..1.0,
    ) {
        let space = Space::Prequantized(1);
        let tol = Tolerance::default();
        let field = contact_vector_field(circle_field(cx, cy, [c0, c1, 0.0])).unwrap();
        let direct = FlowMap::flow(field.clone(), 1.0, tol);
        let squared = FlowMap::flow(Arc::new(SquareTime(field)), 1.0, tol);
        let p = Point::new(space, vec![x, y, z]).unwrap();
        let a = direct.apply_tracked(p.coords()).unwrap();
        let b = squared.apply_tracked(p.coords()).unwrap();
        prop_assert!(space.distance_raw(&a.coords, &b.coords) < 1e-7);
        prop_assert!((direct.action(&p).unwrap() - squared.action(&p).unwrap()).abs() < 1e-7);
    }
}

#[test]
fn inverse_composes_to_identity() {
    let space = Space::Prequantized(1);
    let phi = FlowMap::flow(
        contact_vector_field(circle_field(0.1, 0.0, [0.3, 0.1, -0.1])).unwrap(),
        1.0,
        Tolerance::default(),
    );
    let both = compose(vec![phi.inverse(), phi.clone()]).unwrap();
    for p in [[0.0, 0.0, 0.3], [0.2, -0.3, 0.9], [0.5, 0.1, 0.0]] {
        let img = both.apply_tracked(&p).unwrap();
        assert!(space.distance_raw(&img.coords, &p) < 1e-8);
        assert!(img.log_conformal.abs() < 1e-8);
        assert!(both.action(&Point::new(space, p.to_vec()).unwrap()).unwrap().abs() < 1e-8);
    }
}

#[test]
fn points_outside_the_support_are_not_moved() {
    let phi = FlowMap::flow(contact_vector_field(euclid_field(0.4)).unwrap(), 1.0, Tolerance::default());
    let far = [3.0, -2.0, 5.0];
    assert_eq!(phi.apply_tracked(&far).unwrap().coords, far.to_vec());
}
