//! Explicit contactomorphisms: squeezes, cut-off translations, Reeb pushes,
//! the basis change between the two standard forms, and truncated Rokhlin
//! elements built from them.
//!
//! Every map is the flow of a cut-off generator. Each builder checks the
//! promised closed form on a deterministic sample before returning.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{
    contact_vector_field, reeb_box_generator, scaling_generator, translation_generator, Field,
    ScalingPath, Scaled, Transported,
};
use crate::flow::{compose, conjugate, FlowMap, Plateau, Region, Tolerance};
use crate::space::{Point, Space};
use crate::support::{AxisBox, Support};

/// Deterministic low-discrepancy points in the closed ball `B(center, radius)`.
pub fn ball_samples(center: &[f64], radius: f64, count: usize) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
    let d = center.len();
    let halton = |mut i: u64, b: u64| {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= b as f64;
            r += f * (i % b) as f64;
            i /= b;
        }
        r
    };
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count {
        let u: Vec<f64> = (0..d).map(|k| 2.0 * halton(i, PRIMES[k]) - 1.0).collect();
        i += 1;
        if u.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            out.push(center.iter().zip(&u).map(|(c, v)| c + radius * v).collect());
        }
    }
    out
}

/// Deterministic points in a box.
pub fn box_samples(b: &AxisBox, count: usize) -> Vec<Vec<f64>> {
    let center = vec![0.0; b.dim()];
    ball_samples(&center, 1.0, count)
        .into_iter()
        .map(|u| {
            (0..b.dim())
                .map(|k| b.lo[k] + b.side(k) * 0.5 * (u[k] + 1.0))
                .collect()
        })
        .collect()
}

/// Number of sample points each builder checks.
const SWEEP: usize = 256;
const FORMULA_TOL: f64 = 1e-5;
/// Plateau radius fractions tried in turn by [`squeeze`].
const PLATEAU_FRACTIONS: [f64; 4] = [0.1, 0.25, 0.45, 0.7];

/// Worst deviation of `map` from `expected` over `points`.
fn sweep<E>(map: &FlowMap, points: &[Vec<f64>], expected: E) -> Result<(f64, Vec<f64>)>
where
    E: Fn(&[f64]) -> Vec<f64>,
{
    let space = map.space();
    let imgs = map.apply_many(points)?;
    let mut worst = (0.0, Vec::new());
    for (p, img) in points.iter().zip(imgs) {
        let e = expected(p);
        let dist = space.distance_raw(&img.coords, &e);
        if dist > worst.0 || worst.1.is_empty() {
            worst = (dist, p.clone());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct SqueezeMap {
    pub a: f64,
    pub r: f64,
    pub big_r: f64,
    pub map: FlowMap,
    /// Worst deviation from `(ax, ay, a^2 z)` seen by the construction sweep.
    pub formula_error: f64,
}

/// `(x, y, z) -> (ax, ay, a^2 z)` on `B(r)`, identity outside `B(big_r)`, on `R^{2n+1}`.
pub fn squeeze(n: usize, a: f64, r: f64, big_r: f64, tol: Tolerance) -> Result<SqueezeMap> {
    squeeze_with_path(n, a, r, big_r, ScalingPath::Exponential, tol)
}

pub fn squeeze_with_path(
    n: usize,
    a: f64,
    r: f64,
    big_r: f64,
    path: ScalingPath,
    tol: Tolerance,
) -> Result<SqueezeMap> {
    if !(a > 0.0 && a <= 1.0 && r > 0.0 && r < big_r) {
        return Err(Error::InvalidParameter(format!(
            "squeeze needs 0 < a <= 1 and 0 < r < R (got a={a}, r={r}, R={big_r})"
        )));
    }
    let space = Space::EuclideanContact(n);
    let d = space.dimension();
    if a == 1.0 {
        return Ok(SqueezeMap {
            a,
            r,
            big_r,
            map: FlowMap::identity(space),
            formula_error: 0.0,
        });
    }
    let mut diag = vec![a; d];
    diag[d - 1] = a * a;
    let expected = |p: &[f64]| -> Vec<f64> { p.iter().zip(&diag).map(|(v, s)| v * s).collect() };
    let points = ball_samples(&vec![0.0; d], r, SWEEP);
    let outer = big_r - 0.05 * (big_r - r);
    let mut last = None;
    for frac in PLATEAU_FRACTIONS {
        let inner = r + frac * (big_r - r);
        let gen = scaling_generator(space, a, path, inner, outer)?;
        let map = FlowMap::flow(contact_vector_field(gen)?, 1.0, tol)
            .with_label(format!("squeeze[{a}]"))
            .with_plateau(Plateau::diagonal(
                Region::Ball {
                    center: vec![0.0; d],
                    radius: r,
                    base_only: false,
                },
                &diag,
                vec![0.0; d],
            ));
        let (worst, at) = sweep(&map, &points, expected)?;
        if worst < FORMULA_TOL {
            return Ok(SqueezeMap {
                a,
                r,
                big_r,
                map,
                formula_error: worst,
            });
        }
        last = Some((worst, at));
    }
    let (worst, point) = last.unwrap_or_default();
    Err(Error::Construction {
        what: format!("squeeze a={a} on B({r}) inside B({big_r})"),
        worst,
        point,
    })
}

/// The Heisenberg translation `(x, y, z) -> (x + x0, y + y0, z + z0 + y0 . x)`.
pub fn heisenberg_shift(space: Space, shift: &[f64], p: &[f64]) -> Vec<f64> {
    let n = space.n();
    let mut out = p.to_vec();
    let mut yx = 0.0;
    for i in 0..n {
        out[i] += shift[i];
        out[n + i] += shift[n + i];
        yx += shift[n + i] * p[i];
    }
    out[2 * n] += shift[2 * n] + yx;
    space.canonicalize(&mut out);
    out
}

/// A squeeze of `R^{2n} x S^1` around `center`: the standard squeeze conjugated by
/// the Heisenberg translation taking the origin to `center`. Needs `big_r < 1/2`.
pub fn squeeze_at(n: usize, a: f64, r: f64, big_r: f64, center: &[f64], tol: Tolerance) -> Result<SqueezeMap> {
    let target = Space::Prequantized(n);
    let d = target.dimension();
    if center.len() != d {
        return Err(Error::InvalidParameter("squeeze center has wrong dimension".into()));
    }
    if !(big_r < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "a squeeze of the circle bundle needs R < 1/2, got {big_r}"
        )));
    }
    if !(a > 0.0 && a <= 1.0 && r > 0.0 && r < big_r) {
        return Err(Error::InvalidParameter(format!(
            "squeeze needs 0 < a <= 1 and 0 < r < R (got a={a}, r={r}, R={big_r})"
        )));
    }
    if a == 1.0 {
        return Ok(SqueezeMap {
            a,
            r,
            big_r,
            map: FlowMap::identity(target),
            formula_error: 0.0,
        });
    }
    let outer = big_r - 0.05 * (big_r - r);
    let mut last = None;
    let mut diag = vec![a; d];
    diag[d - 1] = a * a;
    let points: Vec<Vec<f64>> = ball_samples(&vec![0.0; d], r, SWEEP);
    let shifted: Vec<Vec<f64>> = points.iter().map(|p| heisenberg_shift(target, center, p)).collect();
    for frac in PLATEAU_FRACTIONS {
        let inner = r + frac * (big_r - r);
        let gen = scaling_generator(Space::EuclideanContact(n), a, ScalingPath::Exponential, inner, outer)?;
        let moved: Field = Arc::new(Transported::new(gen, target, center.to_vec())?);
        let map = FlowMap::flow(contact_vector_field(moved)?, 1.0, tol).with_label(format!("squeeze[{a}]@"));
        let imgs = map.apply_many(&shifted)?;
        let mut worst = (0.0, Vec::new());
        for (p, img) in points.iter().zip(imgs) {
            let scaled: Vec<f64> = p.iter().zip(&diag).map(|(v, s)| v * s).collect();
            let e = heisenberg_shift(target, center, &scaled);
            let dist = target.distance_raw(&img.wrapped(), &e);
            if dist > worst.0 || worst.1.is_empty() {
                worst = (dist, p.clone());
            }
        }
        if worst.0 < FORMULA_TOL {
            return Ok(SqueezeMap {
                a,
                r,
                big_r,
                map,
                formula_error: worst.0,
            });
        }
        last = Some(worst);
    }
    let (worst, point) = last.unwrap_or_default();
    Err(Error::Construction {
        what: format!("circle-bundle squeeze a={a} on B({r})"),
        worst,
        point,
    })
}

/// `x_1`-translation by `shift` on the ball (tube on `R^{2n} x S^1`) of radius
/// `plateau_radius`, identity outside radius `support_radius`.
pub fn cutoff_translation(
    space: Space,
    shift: f64,
    plateau_radius: f64,
    support_radius: f64,
    tol: Tolerance,
) -> Result<FlowMap> {
    space.ensure_contact()?;
    if shift == 0.0 {
        return Ok(FlowMap::identity(space));
    }
    let d = space.dimension();
    let gen = translation_generator(space, shift, plateau_radius, support_radius)?;
    let mut offset = vec![0.0; d];
    offset[0] = shift;
    let map = FlowMap::flow(contact_vector_field(gen)?, 1.0, tol)
        .with_label(format!("translate[{shift}]"))
        .with_plateau(Plateau::diagonal(
            Region::Ball {
                center: vec![0.0; d],
                radius: plateau_radius,
                base_only: space.is_prequantized(),
            },
            &vec![1.0; d],
            offset.clone(),
        ));
    let mut center = vec![0.0; d];
    if space.is_prequantized() {
        center[d - 1] = 0.5;
    }
    let points = ball_samples(&center, plateau_radius, SWEEP);
    let (worst, point) = sweep(&map, &points, |p| {
        p.iter().zip(&offset).map(|(a, b)| a + b).collect()
    })?;
    if worst >= FORMULA_TOL {
        return Err(Error::Construction {
            what: format!("translation by {shift} on B({plateau_radius})"),
            worst,
            point,
        });
    }
    Ok(map)
}

/// Reeb push by `time` on `target`, supported in `strip.0 <= x_1 <= strip.1`.
///
/// The generator is `time` times a box cutoff equal to 1 on the target swept
/// by the push, so the flow is exactly `z -> z + time` on `target`.
pub fn reeb_push(space: Space, time: f64, target: &AxisBox, strip: (f64, f64), tol: Tolerance) -> Result<FlowMap> {
    space.ensure_contact()?;
    let d = space.dimension();
    let z = d - 1;
    if target.dim() != d {
        return Err(Error::InvalidParameter("push target has wrong dimension".into()));
    }
    if !(strip.0 < target.lo[0] && target.hi[0] < strip.1) {
        return Err(Error::InvalidParameter(format!(
            "push target x_1 range [{}, {}] is not inside the strip ({}, {})",
            target.lo[0], target.hi[0], strip.0, strip.1
        )));
    }
    if time == 0.0 {
        return Ok(FlowMap::identity(space));
    }
    let mut inner = target.clone();
    inner.lo[0] = 0.5 * (strip.0 + target.lo[0]);
    inner.hi[0] = 0.5 * (strip.1 + target.hi[0]);
    let margin = 0.05;
    for k in 1..d {
        if k != z {
            inner.lo[k] -= margin;
            inner.hi[k] += margin;
        }
    }
    inner.lo[z] += time.min(0.0) - margin;
    inner.hi[z] += time.max(0.0) + margin;
    let mut outer = inner.clone();
    outer.lo[0] = strip.0;
    outer.hi[0] = strip.1;
    for k in 1..d {
        outer.lo[k] -= 0.5;
        outer.hi[k] += 0.5;
    }
    inner.fix_circle(space);
    outer.fix_circle(space);
    let cut = reeb_box_generator(space, inner, outer)?;
    let gen: Field = Arc::new(Scaled(time, cut));
    let mut offset = vec![0.0; d];
    offset[z] = time;
    let map = FlowMap::flow(contact_vector_field(gen)?, 1.0, tol)
        .with_label(format!("reeb_push[{time}]"))
        .with_plateau(Plateau::diagonal(
            Region::Box(target.clone()),
            &vec![1.0; d],
            offset.clone(),
        ));
    let mut sample_box = target.clone();
    sample_box.fix_circle(space);
    let points = box_samples(&sample_box, SWEEP);
    let (worst, point) = sweep(&map, &points, |p| {
        let mut q: Vec<f64> = p.iter().zip(&offset).map(|(a, b)| a + b).collect();
        space.canonicalize(&mut q);
        q
    })?;
    if worst >= FORMULA_TOL {
        return Err(Error::Construction {
            what: format!("Reeb push by {time}"),
            worst,
            point,
        });
    }
    Ok(map)
}

/// `(x, y, z) -> ((x - y)/sqrt 2, (x + y)/sqrt 2, z - x.y/2)`, taking `alpha_0` to the
/// rotation-invariant form `dz + (x dy - y dx)/2`.
pub fn basis_change_coords(space: Space, p: &[f64]) -> Vec<f64> {
    let n = space.n();
    let mut out = p.to_vec();
    let mut xy = 0.0;
    for i in 0..n {
        let (x, y) = (p[i], p[n + i]);
        out[i] = FRAC_1_SQRT_2 * (x - y);
        out[n + i] = FRAC_1_SQRT_2 * (x + y);
        xy += x * y;
    }
    out[2 * n] = p[2 * n] - 0.5 * xy;
    space.canonicalize(&mut out);
    out
}

pub fn basis_change(p: &Point) -> Result<Point> {
    let space = p.space();
    space.ensure_contact()?;
    Point::new(space, basis_change_coords(space, p.coords()))
}

/// A finite truncation of the product of conjugated fragments.
#[derive(Debug, Clone)]
pub struct RokhlinElement {
    pub fragments: Vec<FlowMap>,
    /// The conjugators `translate o squeeze`, one per fragment.
    pub conjugators: Vec<FlowMap>,
    pub centers: Vec<f64>,
    pub composite: FlowMap,
    pub tol: Tolerance,
}

impl RokhlinElement {
    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    /// Ball radius allotted to fragment `i` (1-based).
    pub fn radius(i: usize) -> f64 {
        0.5f64.powi(i as i32)
    }

    /// `x_1` center of fragment `i` (1-based).
    pub fn center(i: usize) -> f64 {
        2.0 - 3.0 * Self::radius(i)
    }

    /// `x_1` strip of fragment `i`: the slab between consecutive centers.
    pub fn strip(i: usize) -> (f64, f64) {
        let r = Self::radius(i);
        (2.0 - 4.0 * r, 2.0 - 2.0 * r)
    }

    pub fn space(&self) -> Space {
        self.composite.space()
    }

    pub fn fragment_box(&self, i: usize) -> Result<AxisBox> {
        self.fragments
            .get(i.wrapping_sub(1))
            .and_then(|f| f.support().hull())
            .ok_or_else(|| Error::InvalidParameter(format!("no fragment {i}")))
    }
}

/// Fraction of its allotted ball a squeezed fragment may occupy.
const FRAGMENT_FILL: f64 = 0.8;

/// Conjugate each `f_i` into the ball of radius `2^-i` around `x_1 = 2 - 3 2^-i`
/// and compose the first `count` of them.
pub fn rokhlin_element(fs: &[FlowMap], count: usize, tol: Tolerance) -> Result<RokhlinElement> {
    let first = fs
        .first()
        .ok_or_else(|| Error::InvalidParameter("no fragments".into()))?;
    let space = first.space();
    if !matches!(space, Space::EuclideanContact(_)) {
        return Err(Error::InvalidParameter("fragments live on R^{2n+1}".into()));
    }
    if count > fs.len() {
        return Err(Error::InvalidParameter(format!(
            "truncation {count} exceeds the {} fragments given",
            fs.len()
        )));
    }
    let n = space.n();
    let mut fragments = Vec::with_capacity(count);
    let mut conjugators = Vec::with_capacity(count);
    let mut centers = Vec::with_capacity(count);
    for (k, f) in fs.iter().take(count).enumerate() {
        let i = k + 1;
        f.space().ensure_same(space)?;
        let rho = match f.support() {
            Support::Unbounded => {
                return Err(Error::InvalidParameter(format!("fragment {i} is not compactly supported")))
            }
            s => s.radius(space),
        };
        let alloc = RokhlinElement::radius(i);
        let c = RokhlinElement::center(i);
        let squeeze_map = if rho == 0.0 {
            FlowMap::identity(space)
        } else {
            let a = alloc * (FRAGMENT_FILL / rho).min(1.0);
            let r = 1.02 * rho;
            squeeze(n, a, r, r + 0.5, tol)?.map
        };
        let shift = cutoff_translation(space, c, 1.0, 2.0 + c, tol)?;
        let phi = compose(vec![shift, squeeze_map])?;
        let frag = conjugate(f, &phi)?.with_label(format!("fragment{i}"));
        if let Some(h) = frag.support().hull() {
            let far = (0..space.dimension())
                .map(|k| {
                    let ctr = if k == 0 { c } else { 0.0 };
                    let m = (h.lo[k] - ctr).abs().max((h.hi[k] - ctr).abs());
                    m * m
                })
                .sum::<f64>()
                .sqrt();
            if far > alloc {
                return Err(Error::Construction {
                    what: format!("fragment {i} leaves its ball of radius {alloc}"),
                    worst: far,
                    point: h.center(),
                });
            }
        }
        fragments.push(frag);
        conjugators.push(phi);
        centers.push(c);
    }
    let composite = compose(fragments.clone())?.with_label(format!("g[{count}]"));
    Ok(RokhlinElement {
        fragments,
        conjugators,
        centers,
        composite,
        tol,
    })
}

#[derive(Debug, Clone)]
pub struct Extraction {
    /// `squeeze o push o g o push^-1 o squeeze^-1`.
    pub approximant: FlowMap,
    /// `push o fragment_i o push^-1`.
    pub target: FlowMap,
    /// The push isolating fragment `i` and the squeeze shrinking the rest.
    pub push: FlowMap,
    pub squeeze: FlowMap,
    pub bound: f64,
}

/// Isolate fragment `i` of `g` up to C0 error `2 eps`.
///
/// A Reeb push inside the fragment's strip lifts it out of `B(4)`; a squeeze
/// by `eps / 3` that is the identity outside `B(4)` then shrinks every other
/// fragment toward the origin.
pub fn rokhlin_extract(g: &RokhlinElement, i: usize, eps: f64) -> Result<Extraction> {
    if i == 0 || i > g.len() {
        return Err(Error::InvalidParameter(format!("fragment index {i} out of 1..={}", g.len())));
    }
    if !(eps > 0.0 && eps <= 0.3) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 0.3], got {eps}")));
    }
    let space = g.space();
    let d = space.dimension();
    let target_box = g.fragment_box(i)?;
    let lift = 4.5 - target_box.lo[d - 1];
    let push = reeb_push(space, lift, &target_box, RokhlinElement::strip(i), g.tol)?;
    let squeeze_map = squeeze(space.n(), eps / 3.0, 3.0, 4.0, g.tol)?.map;
    let target = conjugate(&g.fragments[i - 1], &push)?.with_label(format!("isolated{i}"));
    let approximant = conjugate(&conjugate(&g.composite, &push)?, &squeeze_map)?.with_label(format!("approx{i}"));
    Ok(Extraction {
        approximant,
        target,
        push,
        squeeze: squeeze_map,
        bound: 2.0 * eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{bump, contact_vector_field};
    use crate::flow::{pullback_defect, pullback_defect_fn};
    use crate::space::{FormId, OneForm};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn samples_stay_in_ball() {
        let pts = ball_samples(&[1.0, 0.0, -1.0], 0.5, 300);
        assert_eq!(pts.len(), 300);
        for p in &pts {
            let r = ((p[0] - 1.0).powi(2) + p[1].powi(2) + (p[2] + 1.0).powi(2)).sqrt();
            assert!(r <= 0.5 + 1e-15);
        }
    }

    #[test]
    fn half_squeeze_matches_formula() {
        let s = squeeze(1, 0.5, 0.5, 1.0, tol()).unwrap();
        let img = s.map.apply_tracked(&[0.1, 0.1, 0.1]).unwrap();
        for (a, b) in img.coords.iter().zip([0.05, 0.05, 0.025]) {
            assert!((a - b).abs() < 1e-6);
        }
        let sp = Space::EuclideanContact(1);
        let p = Point::new(sp, vec![0.2, -0.1, 0.3]).unwrap();
        let dfx = pullback_defect(&s.map, &OneForm::alpha0(sp), &p).unwrap();
        assert!((dfx.conformal - 0.25).abs() < 1e-5);
        assert!(dfx.residual < 1e-4);
        let far = s.map.apply_tracked(&[1.2, 0.0, 0.0]).unwrap();
        assert_eq!(far.coords, vec![1.2, 0.0, 0.0]);
    }

    #[test]
    fn unit_squeeze_is_identity() {
        assert!(squeeze(1, 1.0, 0.5, 1.0, tol()).unwrap().map.is_identity());
    }

    #[test]
    fn bad_squeeze_parameters_rejected() {
        assert!(squeeze(1, 0.0, 0.5, 1.0, tol()).is_err());
        assert!(squeeze(1, 1.5, 0.5, 1.0, tol()).is_err());
        assert!(squeeze(1, 0.5, 1.0, 0.5, tol()).is_err());
    }

    #[test]
    fn circle_squeeze_at_center() {
        let c = [0.3, -0.2, 0.7];
        let s = squeeze_at(1, 0.5, 0.1, 0.3, &c, tol()).unwrap();
        let sp = Space::Prequantized(1);
        let p = heisenberg_shift(sp, &c, &[0.04, 0.02, -0.06]);
        let img = s.map.apply(&Point::new(sp, p).unwrap()).unwrap();
        let e = heisenberg_shift(sp, &c, &[0.02, 0.01, -0.015]);
        assert!(sp.distance_raw(img.coords(), &e) < 1e-6);
        let pt = Point::new(sp, vec![0.35, -0.1, 0.9]).unwrap();
        let dfx = pullback_defect(&s.map, &OneForm::alpha0(sp), &pt).unwrap();
        assert!(dfx.residual < 1e-4);
    }

    #[test]
    fn translation_on_plateau() {
        let sp = Space::EuclideanContact(1);
        let t = cutoff_translation(sp, 0.7, 1.0, 2.5, tol()).unwrap();
        let img = t.apply_tracked(&[0.2, 0.5, -0.3]).unwrap();
        assert!((img.coords[0] - 0.9).abs() < 1e-7);
        assert!((img.coords[1] - 0.5).abs() < 1e-7);
        assert!((img.coords[2] + 0.3).abs() < 1e-7);
        assert!(cutoff_translation(sp, 0.0, 1.0, 2.0, tol()).unwrap().is_identity());
        // strict on the plateau, contact with a nontrivial factor in the cutoff shell
        let p = Point::new(sp, vec![0.3, 0.4, 0.2]).unwrap();
        let dfx = pullback_defect(&t, &OneForm::alpha0(sp), &p).unwrap();
        assert!((dfx.conformal - 1.0).abs() < 1e-6 && dfx.residual < 1e-4);
        let p = Point::new(sp, vec![1.3, 0.4, 0.9]).unwrap();
        let dfx = pullback_defect(&t, &OneForm::alpha0(sp), &p).unwrap();
        assert!(dfx.residual < 1e-4);
    }

    #[test]
    fn push_moves_box_and_fixes_outside_strip() {
        let sp = Space::EuclideanContact(1);
        let b = AxisBox::new(vec![0.2, -0.2, -0.2], vec![0.8, 0.2, 0.2]);
        let push = reeb_push(sp, 0.4, &b, (0.0, 1.0), tol()).unwrap();
        let img = push.apply_tracked(&[0.5, 0.1, 0.0]).unwrap();
        assert!((img.coords[2] - 0.4).abs() < 1e-8);
        let out = push.apply_tracked(&[1.2, 0.1, 0.0]).unwrap();
        assert_eq!(out.coords, vec![1.2, 0.1, 0.0]);
        assert!(reeb_push(sp, 0.0, &b, (0.0, 1.0), tol()).unwrap().is_identity());
        assert!(reeb_push(sp, 0.4, &b, (0.3, 1.0), tol()).is_err());
    }

    #[test]
    fn basis_change_is_contact_and_keeps_radius() {
        let sp = Space::Prequantized(1);
        let o = basis_change(&Point::origin(sp)).unwrap();
        assert_eq!(o.coords(), &[0.0, 0.0, 0.0]);
        let p = Point::new(sp, vec![0.7 * 0.6, 0.7 * 0.8, 0.3]).unwrap();
        let q = basis_change(&p).unwrap();
        assert!((q.x()[0].hypot(q.y()[0]) - 0.7).abs() < 1e-15);
        let src = OneForm::alpha0(sp);
        let dst = OneForm::new(FormId::Alpha0Prime, sp).unwrap();
        let eval = |s: &mut [f64]| -> Result<()> {
            for b in s.chunks_exact_mut(4) {
                let mut img = basis_change_coords(Space::EuclideanContact(1), &b[..3]);
                b[..3].swap_with_slice(&mut img);
            }
            Ok(())
        };
        for c in [[0.3, -0.4, 0.2], [-1.0, 0.5, 0.7], [0.0, 0.9, 0.1]] {
            let dfx = pullback_defect_fn(eval, &src, &dst, &c).unwrap();
            assert!(dfx.unit_residual < 1e-8);
        }
    }

    fn small_fragment() -> FlowMap {
        let sp = Space::EuclideanContact(1);
        let h: Field = Arc::new(Scaled(0.3, bump(sp, 0.1, 0.4).unwrap()));
        FlowMap::flow(contact_vector_field(h).unwrap(), 1.0, tol())
    }

    #[test]
    fn rokhlin_fragments_sit_in_their_balls() {
        let f = small_fragment();
        let g = rokhlin_element(&[f.clone(), f.clone(), f], 3, tol()).unwrap();
        for i in 1..=3 {
            let b = g.fragment_box(i).unwrap();
            let (s0, s1) = RokhlinElement::strip(i);
            assert!(s0 < b.lo[0] && b.hi[0] < s1);
            assert!(b.max_radius(g.space()) < 2.0);
        }
        // fragment 1: a point near its center moves like the conjugated flow
        let p = [0.5, 0.0, 0.0];
        let a = g.composite.apply_tracked(&p).unwrap();
        let b = g.fragments[0].apply_tracked(&p).unwrap();
        assert!(Space::EuclideanContact(1).distance_raw(&a.coords, &b.coords) < 1e-9);
    }
}
