//! Lifts, translated points and action spectra.

use std::sync::Arc;

use contactkit::fields::{contact_vector_field, radial_profile, CircleModulated, Field, Radial, RadialBump, Sum};
use contactkit::flow::{pullback_defect, FlowMap, Tolerance};
use contactkit::lifts::{base_spectrum, lift, FixedPointOptions, HamiltonianFlow};
use contactkit::space::{OneForm, Point};
use contactkit::support::AxisBox;
use contactkit::translated::{search, search_box, ActionSpectrum, SearchOptions};
use contactkit::Space;
use proptest::prelude::*;

fn base() -> Space {
    Space::SymplecticBase(1)
}

fn two_bumps(h1: f64, h2: f64, c: (f64, f64)) -> Field {
    let a: Field = Arc::new(RadialBump::new(base(), vec![c.0, c.1], h1, 0.2, 0.6, Radial::Full).unwrap());
    let b: Field = Arc::new(RadialBump::new(base(), vec![-c.0, 0.2], h2, 0.15, 0.5, Radial::Full).unwrap());
    Arc::new(Sum(vec![a, b]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lifts_are_strict(
        h1 in -0.4f64..0.4, h2 in -0.4f64..0.4,
        cx in -0.3f64..0.3, cy in -0.3f64..0.3,
        x in -0.8f64..0.8, y in -0.8f64..0.8, z in 0.0f64..1.0,
    ) {
        let f = HamiltonianFlow::new(two_bumps(h1, h2, (cx, cy)), 1.0, Tolerance::default()).unwrap();
        let phi = lift(&f);
        let space = Space::Prequantized(1);
        let d = pullback_defect(&phi, &OneForm::alpha0(space), &Point::new(space, vec![x, y, z]).unwrap()).unwrap();
        prop_assert!(d.residual < 1e-4);
        prop_assert!((d.conformal - 1.0).abs() < 1e-4, "conformal {}", d.conformal);
    }

    #[test]
    fn clusters_are_separated_and_cover_inputs(values in prop::collection::vec(-1.0f64..1.0, 1..60), tol in 1e-4f64..0.1) {
        let s = ActionSpectrum::from_values(&values, tol);
        prop_assert_eq!(s.multiplicity.iter().sum::<usize>(), values.len());
        for w in s.values.windows(2) {
            prop_assert!(w[1] - w[0] > tol);
        }
        for v in &values {
            prop_assert!(s.values.iter().any(|c| (c - v).abs() <= tol * values.len() as f64));
        }
    }
}

#[test]
fn lift_matches_contact_route_on_support_grid() {
    let f = HamiltonianFlow::new(two_bumps(0.3, -0.2, (0.2, -0.1)), 1.0, Tolerance::default()).unwrap();
    let direct = lift(&f);
    let other = f.contact_route().unwrap();
    let space = Space::Prequantized(1);
    let grid = AxisBox::new(vec![-0.8, -0.8, 0.0], vec![0.8, 0.8, 0.9]).sample_lattice(9);
    for p in grid {
        let a = direct.apply_tracked(&p).unwrap();
        let b = other.apply_tracked(&p).unwrap();
        assert!(space.distance_raw(&a.coords, &b.coords) < 1e-5, "{p:?}");
        assert!((a.coords[2] - b.coords[2]).abs() < 1e-5);
    }
}

#[test]
fn lift_actions_equal_base_actions() {
    let h = radial_profile(base(), 0.25, 0.3, 0.9).unwrap();
    let f = HamiltonianFlow::new(h, 1.0, Tolerance::default()).unwrap();
    let region = AxisBox::new(vec![-0.9, -0.9], vec![0.9, 0.9]);
    let on_base = base_spectrum(&f, &region, &FixedPointOptions { per_axis: 21, ..Default::default() }).unwrap();
    let upstairs = search(&lift(&f), &region, &SearchOptions { per_axis: 21, ..Default::default() }).unwrap();
    assert_eq!(on_base.spectrum.len(), upstairs.spectrum.len());
    for (a, b) in on_base.spectrum.values.iter().zip(&upstairs.spectrum.values) {
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
}

#[test]
fn witnesses_are_certified_and_consistent() {
    let space = Space::Prequantized(1);
    let bump: Field = Arc::new(RadialBump::new(space, vec![0.0, 0.0, 0.0], 1.0, 0.25, 0.7, Radial::Base).unwrap());
    let h: Field = Arc::new(CircleModulated::new(bump, [0.2, 0.05, 0.0]).unwrap());
    let phi = FlowMap::flow(contact_vector_field(h).unwrap(), 1.0, Tolerance::default());
    let fallback = AxisBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
    let opts = SearchOptions {
        per_axis: 21,
        circle_samples: 12,
        ..SearchOptions::default()
    };
    let found = search(&phi, &search_box(&phi, &fallback), &opts).unwrap();
    assert!(found.spectrum.len() >= 2, "{:?}", found.spectrum);
    for w in &found.witnesses {
        assert!(w.residual_translation < 1e-6, "{w:?}");
        assert!(w.residual_conformal < 1e-6, "{w:?}");
        assert!(w.action_tau_gap() < 1e-5, "{w:?}");
    }
}

#[test]
fn radial_spectrum_scales_with_time() {
    let h = radial_profile(base(), 0.3, 0.3, 0.9).unwrap();
    let region = AxisBox::new(vec![-0.9, -0.9], vec![0.9, 0.9]);
    let opts = FixedPointOptions {
        per_axis: 21,
        ..FixedPointOptions::default()
    };
    for t in [0.25, 0.5, 1.0] {
        let f = HamiltonianFlow::new(h.clone(), t, Tolerance::default()).unwrap();
        let s = base_spectrum(&f, &region, &opts).unwrap();
        assert!(s.spectrum.matches(&[0.0, 0.3 * t], 1e-3), "t={t}: {:?}", s.spectrum);
    }
}
