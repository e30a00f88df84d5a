//! Spectra of lifts, displaced radial flows and random maps.

use std::sync::Arc;

use contactkit::c0::{c0_norm, projection_distance, GridSpec};
use contactkit::constructions::reeb_push;
use contactkit::fields::{
    contact_vector_field, radial_profile, translation_generator, BasePullback, BoxCutoff, Field, Radial,
    RadialBump, Scaled, SquareTime, Sum,
};
use contactkit::flow::{compose, FlowMap, Tolerance};
use contactkit::lifts::{base_spectrum, lift, FixedPointOptions, HamiltonianFlow};
use contactkit::support::AxisBox;
use contactkit::translated::{search, search_box, SearchOptions};
use contactkit::Space;
use rand::Rng;

use super::{fmt_key, spectrum_deviation, timed, Settings};
use crate::error::Result;
use crate::random::{
    base_hamiltonian, circle_hamiltonian, random_circle_flow, random_lift, substream, GENTLE, STEEP,
};
use crate::report::{ExperimentReport, Measurement};

const SPECTRUM_TOL: f64 = 1e-3;
const ENDPOINT_TOL: f64 = 1e-4;
const BOUND_SLACK: f64 = 1e-4;
const PATH_TOL: f64 = 1e-5;

fn square(space: Space, half: f64) -> AxisBox {
    let d = space.dimension();
    AxisBox::new(vec![-half; d], vec![half; d])
}

fn check_spectrum(r: &mut ExperimentReport, key: &str, spec: &contactkit::translated::ActionSpectrum, expected: &[f64]) {
    let (count_ok, dev) = spectrum_deviation(spec, expected);
    r.push(Measurement::holds(format!("cluster_count[{key}]"), count_ok));
    r.push(Measurement::at_most(
        format!("spectrum_error[{key}]"),
        if count_ok { dev } else { f64::INFINITY },
        SPECTRUM_TOL,
    ));
}

/// Fixed-point actions of the time-`t` flow of a radial profile of height `a`
/// whose slope stays below the rotation threshold: `{0, a t}`.
pub fn radial_spectrum(s: &Settings, a: f64, times: &[f64]) -> Result<ExperimentReport> {
    timed(|| {
        let tol = s.tolerance()?;
        let space = Space::SymplecticBase(s.n);
        let (plateau, support) = (0.3, 0.9);
        let h = radial_profile(space, a, plateau, support)?;
        let mut r = ExperimentReport::new(
            "radial-spectrum",
            "fixed-point actions of a slow radial Hamiltonian are exactly {0, a t}",
            s.seed,
        );
        r.param("a", a);
        r.param("times", times);
        r.param("plateau_radius", plateau);
        r.param("support_radius", support);
        r.param("n", s.n);
        let opts = FixedPointOptions {
            per_axis: s.per_axis(41),
            ..FixedPointOptions::default()
        };
        r.param("per_axis", opts.per_axis);
        for &t in times {
            let flow = HamiltonianFlow::new(h.clone(), t, tol)?;
            let found = base_spectrum(&flow, &square(space, support), &opts)?;
            check_spectrum(&mut r, &format!("t={}", fmt_key(t)), &found.spectrum, &[0.0, a * t]);
            for v in &found.spectrum.values {
                r.point("action", t, *v);
            }
        }
        Ok(r)
    })
}

/// Spectral norm of a symmetric matrix by power iteration on its square.
fn symmetric_norm(a: &[f64], m: usize) -> f64 {
    let mut v: Vec<f64> = (0..m).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..200 {
        let av: Vec<f64> = (0..m).map(|i| (0..m).map(|j| a[i * m + j] * v[j]).sum()).collect();
        let norm = av.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = av.iter().map(|x| x / norm).collect();
    }
    lambda
}

/// Largest Hessian operator norm of `h` over a lattice, from central
/// differences of the analytic gradient.
fn hessian_bound(h: &Field, region: &AxisBox, per_axis: usize) -> f64 {
    let m = region.dim();
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    let mut gp = vec![0.0; m];
    let mut gm = vec![0.0; m];
    let mut hess = vec![0.0; m * m];
    for p in region.sample_lattice(per_axis) {
        for i in 0..m {
            let mut q = p.clone();
            q[i] += step;
            h.eval(0.0, &q, &mut gp);
            q[i] -= 2.0 * step;
            h.eval(0.0, &q, &mut gm);
            for j in 0..m {
                hess[i * m + j] = (gp[j] - gm[j]) / (2.0 * step);
            }
        }
        for i in 0..m {
            for j in 0..i {
                let avg = 0.5 * (hess[i * m + j] + hess[j * m + i]);
                hess[i * m + j] = avg;
                hess[j * m + i] = avg;
            }
        }
        worst = worst.max(symmetric_norm(&hess, m));
    }
    worst
}

struct Family {
    name: &'static str,
    hamiltonian: Field,
    min: f64,
    max: f64,
    per_axis: usize,
}

fn families(n: usize) -> Result<Vec<Family>> {
    let space = Space::SymplecticBase(n);
    let m = 2 * n;
    let at = |x: f64, y: f64| {
        let mut c = vec![0.0; m];
        c[0] = x;
        c[n] = y;
        c
    };
    let mut out = vec![
        Family {
            name: "radial",
            hamiltonian: radial_profile(space, 0.3, 0.4, 2.2)?,
            min: 0.0,
            max: 0.3,
            per_axis: 31,
        },
        Family {
            name: "radial-negative",
            hamiltonian: radial_profile(space, -0.3, 0.4, 2.2)?,
            min: -0.3,
            max: 0.0,
            per_axis: 31,
        },
    ];
    let left: Field = Arc::new(RadialBump::new(space, at(-2.2, 0.0), 0.25, 0.35, 1.95, Radial::Full)?);
    let right: Field = Arc::new(RadialBump::new(space, at(2.2, 0.0), -0.2, 0.35, 1.95, Radial::Full)?);
    out.push(Family {
        name: "sign-changing",
        hamiltonian: Arc::new(Sum(vec![left, right])),
        min: -0.2,
        max: 0.25,
        per_axis: 41,
    });
    out.push(Family {
        name: "offset",
        hamiltonian: Arc::new(RadialBump::new(space, at(0.5, -0.3), 0.15, 0.3, 1.6, Radial::Full)?),
        min: 0.0,
        max: 0.15,
        per_axis: 31,
    });
    let inner = AxisBox::new(vec![-0.3; m], vec![0.3; m]);
    let outer = AxisBox::new(vec![-2.0; m], vec![2.0; m]);
    out.push(Family {
        name: "box",
        hamiltonian: Arc::new(Scaled(0.2, Arc::new(BoxCutoff::new(space, inner, outer)?))),
        min: 0.0,
        max: 0.2,
        per_axis: 31,
    });
    out.push(Family {
        name: "zero",
        hamiltonian: Arc::new(Scaled(0.0, radial_profile(space, 1.0, 0.4, 2.2)?)),
        min: 0.0,
        max: 0.0,
        per_axis: 21,
    });
    Ok(out)
}

/// Lifts of Hamiltonians with Hessian at most 1: the spectrum runs from min H to max H.
pub fn lift_endpoints(s: &Settings) -> Result<ExperimentReport> {
    timed(|| {
        let tol = s.tolerance()?;
        let mut r = ExperimentReport::new(
            "lift-endpoints",
            "for C2-small H the extreme actions of the lift are min H and max H",
            s.seed,
        );
        r.param("n", s.n);
        r.param("hessian_limit", 1.0);
        for fam in families(s.n)? {
            let region = fam
                .hamiltonian
                .support()
                .hull()
                .unwrap_or_else(|| square(Space::SymplecticBase(s.n), 1.0));
            let hb = hessian_bound(&fam.hamiltonian, &region, s.per_axis(41));
            r.push(Measurement::at_most(format!("hessian_bound[{}]", fam.name), hb, 1.0));
            let phi = lift(&HamiltonianFlow::new(fam.hamiltonian.clone(), 1.0, tol)?);
            let opts = SearchOptions {
                per_axis: s.per_axis(fam.per_axis),
                ..SearchOptions::default()
            };
            let found = search(&phi, &region, &opts)?;
            let (lo, hi) = match (found.spectrum.min(), found.spectrum.max()) {
                (Some(lo), Some(hi)) => (lo, hi),
                _ => (f64::INFINITY, f64::INFINITY),
            };
            r.push(Measurement::close(format!("min_error[{}]", fam.name), lo, fam.min, ENDPOINT_TOL));
            r.push(Measurement::close(format!("max_error[{}]", fam.name), hi, fam.max, ENDPOINT_TOL));
            r.param(&format!("spectrum[{}]", fam.name), &found.spectrum.values);
        }
        Ok(r)
    })
}

/// `phi_T o psi o phi_s o psi^-1`-type composite: a radial flow, displaced by
/// `psi`, then run again. The displaced plateau contributes `a T`, the common
/// plateau would contribute `a (s + T)` if `psi` were trivial.
pub fn displacement_spectrum(s: &Settings, a: f64, t_first: f64, t_second: f64) -> Result<ExperimentReport> {
    timed(|| {
        let tol = s.tolerance()?;
        let space = Space::SymplecticBase(s.n);
        let m = space.dimension();
        let (plateau, support) = (0.3, 0.9);
        let shift = 2.5;
        let h = radial_profile(space, a, plateau, support)?;
        let gen = translation_generator(space, shift, support, support + shift + 1.0)?;
        let psi = HamiltonianFlow::new(gen, 1.0, tol)?;
        let phi_s = HamiltonianFlow::new(h.clone(), t_first, tol)?;
        let phi_t = HamiltonianFlow::new(h, t_second, tol)?;
        let mut r = ExperimentReport::new(
            "displacement-spectrum",
            "the composite of a radial flow with a displaced copy has spectrum {0, a s, a T}",
            s.seed,
        );
        r.param("a", a);
        r.param("s", t_first);
        r.param("T", t_second);
        r.param("shift", shift);
        r.param("n", s.n);
        let mut lo = vec![-1.0; m];
        let mut hi = vec![1.0; m];
        lo[0] = -1.0;
        hi[0] = shift + 1.0;
        let region = AxisBox::new(lo, hi);
        let opts = FixedPointOptions {
            per_axis: s.per_axis(41).max(13),
            ..FixedPointOptions::default()
        };
        let displaced = HamiltonianFlow::compose(&[psi.clone(), phi_t.clone(), psi.inverse(), phi_s.clone()])?;
        let found = base_spectrum(&displaced, &region, &opts)?;
        check_spectrum(&mut r, "displaced", &found.spectrum, &[0.0, a * t_first, a * t_second]);
        r.param("spectrum[displaced]", &found.spectrum.values);

        let stacked = HamiltonianFlow::compose(&[phi_t.clone(), phi_s])?;
        let found = base_spectrum(&stacked, &region, &opts)?;
        check_spectrum(&mut r, "undisplaced", &found.spectrum, &[0.0, a * (t_first + t_second)]);

        let alone = HamiltonianFlow::compose(&[psi.clone(), phi_t, psi.inverse()])?;
        let found = base_spectrum(&alone, &region, &opts)?;
        check_spectrum(&mut r, "first-time-zero", &found.spectrum, &[0.0, a * t_second]);
        Ok(r)
    })
}

fn candidate<R: Rng>(rng: &mut R, kind: usize, n: usize, tol: Tolerance) -> Result<FlowMap> {
    let space = Space::Prequantized(n);
    let d = space.dimension();
    Ok(match kind {
        0..=2 => random_lift(rng, n, 0.15, GENTLE, tol)?,
        3 => {
            let time = rng.random_range(-0.3..0.3);
            let mut lo = vec![0.0; d];
            let mut hi = vec![1.0; d];
            for k in 0..d - 1 {
                let c = rng.random_range(-0.3..0.3);
                let w = rng.random_range(0.15..0.3);
                lo[k] = c - w;
                hi[k] = c + w;
            }
            let margin = rng.random_range(0.3..0.6);
            let strip = (lo[0] - margin, hi[0] + margin);
            reeb_push(space, time, &AxisBox::new(lo, hi), strip, tol)?
        }
        _ => random_circle_flow(rng, n, 0.06, GENTLE, tol)?,
    })
}

/// Random maps of C0 norm below 1/2: every action lies within the norm.
pub fn spectrum_bound(s: &Settings, count: usize) -> Result<ExperimentReport> {
    timed(|| {
        let tol = s.tolerance()?;
        let n = s.n;
        let mut r = ExperimentReport::new(
            "spectrum-bound",
            "translated-point actions of a map with C0 norm below 1/2 are bounded by the norm",
            s.seed,
        );
        r.param("count", count);
        r.param("mesh", s.mesh);
        r.param("n", n);
        let fallback = square(Space::SymplecticBase(n), 1.5);
        let mut accepted = 0usize;
        // Skipped candidates per family: lifts, Reeb pushes, circle flows.
        let mut skipped = [0usize; 3];
        let mut worst_excess = f64::NEG_INFINITY;
        let mut worst_projection_excess = f64::NEG_INFINITY;
        let mut empty = 0usize;
        let mut index = 0u64;
        while accepted < count {
            if index as usize > 8 * count {
                break;
            }
            let mut rng = substream(s.seed, index);
            let kind = (index % 5) as usize;
            index += 1;
            let phi = candidate(&mut rng, kind, n, tol)?;
            let circle = !phi.reeb_invariant();
            let grid = GridSpec {
                mesh: s.mesh,
                max_per_axis: s.per_axis(if circle { 21 } else { 41 }).max(9),
                circle_samples: 12,
                ..GridSpec::default()
            };
            let norm = c0_norm(&phi, &grid)?;
            if norm.upper() >= 0.5 {
                skipped[kind.saturating_sub(2)] += 1;
                continue;
            }
            accepted += 1;
            let opts = SearchOptions {
                per_axis: s.per_axis(if circle { 25 } else { 31 }),
                circle_samples: 12,
                ..SearchOptions::default()
            };
            let found = search(&phi, &search_box(&phi, &fallback), &opts)?;
            if found.spectrum.is_empty() {
                empty += 1;
            }
            let top = found.spectrum.max_abs();
            worst_excess = worst_excess.max(top - norm.upper());
            let proj = projection_distance(&phi, &grid)?;
            worst_projection_excess = worst_projection_excess.max(top - proj.upper());
            r.point("max_abs_action_vs_norm", norm.upper(), top);
        }
        r.param("candidates", index);
        r.param("skipped_norm_at_least_half", skipped);
        r.push(Measurement::at_most("shortfall_in_count", (count - accepted) as f64, 0.0));
        r.push(Measurement::at_most("spectrum_excess_over_norm", worst_excess, BOUND_SLACK));
        r.push(Measurement::at_most(
            "spectrum_excess_over_projection_distance",
            worst_projection_excess,
            BOUND_SLACK,
        ));
        r.push(Measurement::at_most("maps_without_translated_points", empty as f64, 0.0));
        Ok(r)
    })
}

/// Isotopies to evaluate the same map along: the generating path, its
/// square-time reparametrisation and the path preceded by a loop.
fn three_paths(field_map: (contactkit::fields::Flow, FlowMap), loop_map: &FlowMap, tol: Tolerance) -> [FlowMap; 3] {
    let (field, direct) = field_map;
    let squared = FlowMap::flow(Arc::new(SquareTime(field)), 1.0, tol).with_support(direct.support().clone());
    let looped = compose(vec![direct.clone(), loop_map.inverse(), loop_map.clone()])
        .expect("same space")
        .with_support(direct.support().clone());
    [direct, squared, looped]
}

/// Actions of translated points do not depend on the isotopy within its homotopy class.
pub fn path_independence(s: &Settings, count: usize) -> Result<ExperimentReport> {
    timed(|| {
        let tol = s.tolerance()?;
        let n = s.n;
        let space = Space::Prequantized(n);
        let mut r = ExperimentReport::new(
            "path-independence",
            "the action of a translated point depends only on the homotopy class of the path",
            s.seed,
        );
        r.param("count", count);
        r.param("n", n);
        let fallback = square(Space::SymplecticBase(n), 1.5);
        for i in 0..count {
            let mut rng = substream(s.seed, 1000 + i as u64);
            let h: Field = if i % 2 == 0 {
                Arc::new(BasePullback::new(base_hamiltonian(&mut rng, n, 0.35, STEEP)?, space)?)
            } else {
                circle_hamiltonian(&mut rng, n, 0.3, STEEP)?
            };
            let field = contact_vector_field(h)?;
            let direct = FlowMap::flow(field.clone(), 1.0, tol);
            let loop_map = FlowMap::flow(contact_vector_field(circle_hamiltonian(&mut rng, n, 0.4, STEEP)?)?, 1.0, tol);
            let [direct, squared, looped] = three_paths((field, direct), &loop_map, tol);
            let opts = SearchOptions {
                per_axis: s.per_axis(25),
                circle_samples: 12,
                max_per_cluster: 3,
                ..SearchOptions::default()
            };
            let found = search(&direct, &search_box(&direct, &fallback), &opts)?;
            let mut gap: f64 = 0.0;
            for w in &found.witnesses {
                let a2 = squared.action(&w.point)?;
                let a3 = looped.action(&w.point)?;
                gap = gap.max((a2 - w.action).abs()).max((a3 - w.action).abs());
            }
            r.push(Measurement::holds(format!("has_witnesses[{i}]"), !found.witnesses.is_empty()));
            r.push(Measurement::at_most(format!("action_gap[{i}]"), gap, PATH_TOL));
            r.point("witnesses", i as f64, found.witnesses.len() as f64);
        }
        Ok(r)
    })
}
