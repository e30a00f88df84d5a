//! Hamiltonian diffeomorphisms of `R^{2n}`, the action of their points, and
//! their lifts to strict contactomorphisms of `R^{2n} x S^1`.
//!
//! The action uses the primitive `lambda_0 = -sum y_i dx_i`:
//! `A(q) = int H_t(phi_t q) dt - int lambda_0(d/dt phi_t q) dt`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{contact_vector_field, symplectic_vector_field, BasePullback, Field, TimeReversed};
use crate::flow::{compose, dopri, FlowMap, Tolerance, Transform};
use crate::newton::NewtonOptions;
use crate::seeding::{self, Grid, Refine};
use crate::space::{Point, Space};
use crate::support::{AxisBox, Support};
use crate::translated::ActionSpectrum;

/// Gauss–Legendre nodes on `[-1, 1]` (positive half) and weights.
const GAUSS_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// One leg of a path: the flow of `hamiltonian` over `[0, duration]`.
#[derive(Debug, Clone)]
pub struct Segment {
    pub hamiltonian: Field,
    pub duration: f64,
}

/// A Hamiltonian path on `R^{2n}` given as a concatenation of segments, first segment first.
#[derive(Debug, Clone)]
pub struct HamiltonianFlow {
    space: Space,
    segments: Vec<Segment>,
    tol: Tolerance,
}

impl HamiltonianFlow {
    pub fn new(hamiltonian: Field, duration: f64, tol: Tolerance) -> Result<Self> {
        let space = hamiltonian.space();
        if space.is_contact() {
            return Err(Error::InvalidParameter(format!(
                "Hamiltonian flows live on a symplectic base, not {space}"
            )));
        }
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad duration {duration}")));
        }
        if matches!(hamiltonian.support(), Support::Unbounded) {
            return Err(Error::InvalidParameter(
                "Hamiltonian must be compactly supported".into(),
            ));
        }
        Ok(HamiltonianFlow {
            space,
            segments: vec![Segment {
                hamiltonian,
                duration,
            }],
            tol,
        })
    }

    pub fn identity(space: Space) -> Self {
        HamiltonianFlow {
            space,
            segments: Vec::new(),
            tol: Tolerance::default(),
        }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    /// Total length of the path.
    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// The path `self` followed by `next`; its time-one map is `next o self`.
    pub fn then(&self, next: &HamiltonianFlow) -> Result<HamiltonianFlow> {
        self.space.ensure_same(next.space)?;
        let mut segments = self.segments.clone();
        segments.extend(next.segments.iter().cloned());
        Ok(HamiltonianFlow {
            space: self.space,
            segments,
            tol: self.tol,
        })
    }

    /// `maps[0] o maps[1] o ... `: the last path runs first.
    pub fn compose(maps: &[HamiltonianFlow]) -> Result<HamiltonianFlow> {
        let mut it = maps.iter().rev();
        let first = it
            .next()
            .ok_or_else(|| Error::InvalidParameter("empty composition".into()))?
            .clone();
        it.try_fold(first, |acc, m| acc.then(m))
    }

    /// Reversed path, generated by `-H_{T - t}` on each segment.
    pub fn inverse(&self) -> HamiltonianFlow {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| Segment {
                hamiltonian: Arc::new(TimeReversed::new(s.hamiltonian.clone(), s.duration)),
                duration: s.duration,
            })
            .collect();
        HamiltonianFlow {
            space: self.space,
            segments,
            tol: self.tol,
        }
    }

    pub fn support(&self) -> Support {
        self.segments
            .iter()
            .fold(Support::empty(), |acc, s| acc.union(&s.hamiltonian.support()))
    }

    pub fn time_map(&self) -> Result<FlowMap> {
        let maps = self
            .segments
            .iter()
            .rev()
            .map(|s| {
                Ok(FlowMap::flow(
                    symplectic_vector_field(s.hamiltonian.clone())?,
                    s.duration,
                    self.tol,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        if maps.is_empty() {
            return Ok(FlowMap::identity(self.space));
        }
        compose(maps)
    }

    /// Contact flow of `H^(q, z) = H(q)` on `R^{2n} x S^1`: a second route to the lift.
    pub fn contact_route(&self) -> Result<FlowMap> {
        let target = Space::Prequantized(self.space.n());
        let maps = self
            .segments
            .iter()
            .rev()
            .map(|s| {
                let h: Field = Arc::new(BasePullback::new(s.hamiltonian.clone(), target)?);
                Ok(FlowMap::flow(contact_vector_field(h)?, s.duration, self.tol))
            })
            .collect::<Result<Vec<_>>>()?;
        if maps.is_empty() {
            return Ok(FlowMap::identity(target));
        }
        compose(maps)
    }

    /// Transport `k` stacked base points (stride `2n`) in place; returns their actions.
    fn transport(&self, pts: &mut [f64]) -> Result<Vec<f64>> {
        let m = self.space.dimension();
        let k = pts.len() / m;
        let mut actions = vec![0.0; k];
        for seg in &self.segments {
            let supp = seg.hamiltonian.support();
            if seg.duration == 0.0 || !pts.chunks_exact(m).any(|q| supp.contains(self.space, q)) {
                continue;
            }
            let h = &seg.hamiltonian;
            let field = symplectic_vector_field(h.clone())?;
            let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
                for (yb, db) in y.chunks_exact(m).zip(dy.chunks_exact_mut(m)) {
                    field.eval(t, yb, db);
                }
            };
            let dense = dopri::integrate(rhs, 0.0, seg.duration, pts, self.tol, true)?
                .expect("dense output requested");
            let mut state = vec![0.0; pts.len()];
            let mut grad = vec![0.0; m];
            for (a, b) in dense.step_bounds() {
                let mid = 0.5 * (a + b);
                let half = 0.5 * (b - a);
                for (node, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                    for t in [mid - half * node, mid + half * node] {
                        dense.eval(t, &mut state);
                        for (i, q) in state.chunks_exact(m).enumerate() {
                            // H - lambda_0(X_H) = H - sum y_i dH/dy_i
                            let v = h.eval(t, q, &mut grad);
                            let n = m / 2;
                            let ydh: f64 = (0..n).map(|j| q[n + j] * grad[n + j]).sum();
                            actions[i] += w * half * (v - ydh);
                        }
                    }
                }
            }
        }
        Ok(actions)
    }

    /// `phi(q)` and the action of `q`.
    pub fn evaluate(&self, q: &Point) -> Result<(Point, f64)> {
        self.space.ensure_same(q.space())?;
        let mut c = q.coords().to_vec();
        let a = self.transport(&mut c)?;
        Ok((Point::new(self.space, c)?, a[0]))
    }
}

/// Action of `q` along the path; 0 outside the support.
pub fn point_action(flow: &HamiltonianFlow, q: &Point) -> Result<f64> {
    Ok(flow.evaluate(q)?.1)
}

/// `(q, z) -> (phi(q), z + A(q))` evaluated by transport plus quadrature.
#[derive(Debug, Clone)]
struct LiftMap {
    flow: HamiltonianFlow,
}

impl Transform for LiftMap {
    fn space(&self) -> Space {
        Space::Prequantized(self.flow.space.n())
    }

    fn apply_joint(&self, states: &mut [f64]) -> Result<()> {
        let m = self.flow.space.dimension();
        let stride = m + 2;
        let mut base: Vec<f64> = states
            .chunks_exact(stride)
            .flat_map(|b| b[..m].iter().copied())
            .collect();
        let actions = self.flow.transport(&mut base)?;
        for (i, b) in states.chunks_exact_mut(stride).enumerate() {
            b[..m].copy_from_slice(&base[i * m..(i + 1) * m]);
            b[m] += actions[i];
        }
        Ok(())
    }

    fn inverse(&self) -> Arc<dyn Transform> {
        Arc::new(LiftMap {
            flow: self.flow.inverse(),
        })
    }

    fn support(&self) -> Support {
        let target = self.space();
        match self.flow.support() {
            Support::Unbounded => Support::Unbounded,
            Support::Compact(boxes) => Support::Compact(
                boxes
                    .into_iter()
                    .map(|b| {
                        let mut lo = b.lo;
                        let mut hi = b.hi;
                        lo.push(0.0);
                        hi.push(1.0);
                        let mut out = AxisBox::new(lo, hi);
                        out.fix_circle(target);
                        out
                    })
                    .collect(),
            ),
        }
    }

    fn reeb_invariant(&self) -> bool {
        true
    }
}

/// The lift `(q, z) -> (phi(q), z + A(q) mod 1)`, a strict contactomorphism.
pub fn lift(flow: &HamiltonianFlow) -> FlowMap {
    if flow.segments.is_empty() {
        return FlowMap::identity(Space::Prequantized(flow.space.n()));
    }
    FlowMap::from_transform(Arc::new(LiftMap { flow: flow.clone() }), "lift")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointOptions {
    pub per_axis: usize,
    /// Relative inflation of the search box.
    pub inflate: f64,
    pub screen_factor: f64,
    /// `|phi(q) - q|` accepted as a fixed point.
    pub accept_tol: f64,
    pub cluster_tol: f64,
    pub max_refine: usize,
    pub newton: NewtonOptions,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            per_axis: 41,
            inflate: 0.1,
            screen_factor: 3.0,
            accept_tol: 1e-8,
            cluster_tol: 1e-3,
            max_refine: 400,
            newton: NewtonOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub point: Point,
    pub action: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct BaseSpectrum {
    pub spectrum: ActionSpectrum,
    /// A few fixed points per spectral value.
    pub witnesses: Vec<FixedPoint>,
    pub failures: usize,
    pub seeds: usize,
}

/// Actions of the fixed points of the time map found in `region`.
pub fn base_spectrum(flow: &HamiltonianFlow, region: &AxisBox, opts: &FixedPointOptions) -> Result<BaseSpectrum> {
    let space = flow.space;
    let m = space.dimension();
    if region.dim() != m {
        return Err(Error::InvalidParameter("search box has wrong dimension".into()));
    }
    let per = opts.per_axis.max(2);
    let mut lo = Vec::with_capacity(m);
    let mut spacing = Vec::with_capacity(m);
    for k in 0..m {
        let pad = opts.inflate * region.side(k) / 2.0;
        lo.push(region.lo[k] - pad);
        spacing.push((region.side(k) + 2.0 * pad) / (per - 1) as f64);
    }
    let grid = Grid {
        lo,
        spacing,
        counts: vec![per; m],
        periodic: vec![false; m],
    };
    let residual = |x: &[f64], _k: usize| -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        flow.transport(&mut y)?;
        Ok(y.iter().zip(x).map(|(a, b)| a - b).collect())
    };
    let support = flow.support();
    let located = seeding::locate(
        &grid,
        residual,
        m,
        |p| support.contains(space, p),
        &Refine {
            accept_tol: opts.accept_tol,
            screen_factor: opts.screen_factor,
            max_refine: opts.max_refine,
            newton: &opts.newton,
        },
    )?;
    let mut found: Vec<(f64, (Vec<f64>, f64))> = located
        .accepted
        .par_iter()
        .map(|p| -> Result<(f64, (Vec<f64>, f64))> {
            let mut y = p.clone();
            let a = flow.transport(&mut y)?;
            let r = y
                .iter()
                .zip(p)
                .map(|(u, v)| (u - v).powi(2))
                .sum::<f64>()
                .sqrt();
            Ok((a[0], (p.clone(), r)))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(p) = located.outside {
        found.push((0.0, (p, 0.0)));
    }
    let spectrum = ActionSpectrum::from_values(
        &found.iter().map(|(a, _)| *a).collect::<Vec<_>>(),
        opts.cluster_tol,
    );
    let witnesses = seeding::thin_clusters(found, opts.cluster_tol, 8)
        .into_iter()
        .map(|(action, (p, residual))| {
            Ok(FixedPoint {
                point: Point::new(space, p)?,
                action,
                residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BaseSpectrum {
        spectrum,
        witnesses,
        failures: located.failures,
        seeds: located.seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{radial_profile, Affine, Quadratic};
    use crate::flow::pullback_defect;
    use crate::space::OneForm;

    fn base() -> Space {
        Space::SymplecticBase(1)
    }

    #[test]
    fn gauss_weights_integrate_polynomials_exactly() {
        let total: f64 = GAUSS_WEIGHTS.iter().sum::<f64>() * 2.0;
        assert!((total - 2.0).abs() < 1e-14);
        // x^14 integrates to 2/15
        let s: f64 = GAUSS_NODES
            .iter()
            .zip(GAUSS_WEIGHTS)
            .map(|(x, w)| 2.0 * w * x.powi(14))
            .sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-13);
    }

    #[test]
    fn action_outside_support_is_zero() {
        let h = radial_profile(base(), 0.3, 0.3, 0.9).unwrap();
        let f = HamiltonianFlow::new(h, 1.0, Tolerance::default()).unwrap();
        let q = Point::new(base(), vec![1.5, -0.2]).unwrap();
        assert_eq!(point_action(&f, &q).unwrap(), 0.0);
    }

    #[test]
    fn critical_point_action_is_value_times_time() {
        let h = radial_profile(base(), 0.3, 0.3, 0.9).unwrap();
        let f = HamiltonianFlow::new(h, 0.7, Tolerance::default()).unwrap();
        let q = Point::new(base(), vec![0.1, 0.05]).unwrap();
        assert!((point_action(&f, &q).unwrap() - 0.21).abs() < 1e-12);
    }

    // H = pi |q|^2 turns the plane once in unit time. Along the orbit
    // -lambda_0(v) = y dx/dt = -2 pi y^2, so over time T the action is
    // pi r^2 T - 2 pi int_0^T y(t)^2 dt.
    #[test]
    fn rotation_action_matches_closed_form() {
        use std::f64::consts::PI;
        let space = base();
        let h: Field = Arc::new(Quadratic::rotation(space));
        let cut = crate::fields::bump(space, 5.0, 6.0).unwrap();
        let h: Field = Arc::new(crate::fields::Product(cut, h));
        let (x0, y0) = (0.4, -0.3);
        let q = Point::new(space, vec![x0, y0]).unwrap();
        for t in [1.0, 0.25, 0.6] {
            let f = HamiltonianFlow::new(h.clone(), t, Tolerance::default()).unwrap();
            let (img, a) = f.evaluate(&q).unwrap();
            let w = 2.0 * PI;
            let (c, s) = ((w * t).cos(), (w * t).sin());
            assert!((img.coords()[0] - (x0 * c - y0 * s)).abs() < 1e-7);
            assert!((img.coords()[1] - (x0 * s + y0 * c)).abs() < 1e-7);
            // y(t) = x0 sin wt + y0 cos wt
            let int_y2 = (x0 * x0 + y0 * y0) * t / 2.0
                + (y0 * y0 - x0 * x0) * (2.0 * w * t).sin() / (4.0 * w)
                + x0 * y0 * (1.0 - (2.0 * w * t).cos()) / (2.0 * w);
            let expected = PI * (x0 * x0 + y0 * y0) * t - 2.0 * PI * int_y2;
            assert!((a - expected).abs() < 1e-8, "t={t}: {a} vs {expected}");
        }
    }

    #[test]
    fn zero_hamiltonian_lifts_to_identity() {
        let h: Field = Arc::new(Affine::constant(base(), 0.0));
        let h: Field = Arc::new(crate::fields::Product(crate::fields::bump(base(), 0.5, 1.0).unwrap(), h));
        let f = HamiltonianFlow::new(h, 1.0, Tolerance::default()).unwrap();
        let l = lift(&f);
        let p = Point::new(Space::Prequantized(1), vec![0.2, 0.1, 0.7]).unwrap();
        let img = l.apply(&p).unwrap();
        assert!(Space::Prequantized(1).distance_raw(img.coords(), p.coords()) < 1e-14);
    }

    #[test]
    fn lift_agrees_with_contact_route_and_is_strict() {
        let h = radial_profile(base(), 0.3, 0.2, 0.8).unwrap();
        let f = HamiltonianFlow::new(h, 1.0, Tolerance::default()).unwrap();
        let direct = lift(&f);
        let other = f.contact_route().unwrap();
        let sp = Space::Prequantized(1);
        for p in [[0.35, 0.1, 0.2], [-0.5, 0.3, 0.9], [0.0, -0.6, 0.45]] {
            let a = direct.apply_tracked(&p).unwrap();
            let b = other.apply_tracked(&p).unwrap();
            assert!(sp.distance_raw(&a.coords, &b.coords) < 1e-6);
            assert!((a.coords[2] - b.coords[2]).abs() < 1e-6);
            let pt = Point::new(sp, p.to_vec()).unwrap();
            let d = pullback_defect(&direct, &OneForm::alpha0(sp), &pt).unwrap();
            assert!((d.conformal - 1.0).abs() < 1e-5);
            assert!(d.residual < 1e-4);
        }
    }

    #[test]
    fn inverse_undoes_path_and_negates_action() {
        let h = radial_profile(base(), 0.3, 0.2, 0.8).unwrap();
        let f = HamiltonianFlow::new(h, 1.0, Tolerance::default()).unwrap();
        let q = Point::new(base(), vec![0.3, 0.25]).unwrap();
        let (img, a) = f.evaluate(&q).unwrap();
        let (back, b) = f.inverse().evaluate(&img).unwrap();
        assert!(base().distance_raw(back.coords(), q.coords()) < 1e-7);
        assert!((a + b).abs() < 1e-7);
    }

    #[test]
    fn radial_spectrum_is_zero_and_height() {
        let h = radial_profile(base(), 0.3, 0.3, 0.9).unwrap();
        let f = HamiltonianFlow::new(h, 1.0, Tolerance::default()).unwrap();
        let region = AxisBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let opts = FixedPointOptions {
            per_axis: 21,
            ..FixedPointOptions::default()
        };
        let s = base_spectrum(&f, &region, &opts).unwrap();
        assert!(s.spectrum.matches(&[0.0, 0.3], 1e-3), "{:?}", s.spectrum);
    }
}
