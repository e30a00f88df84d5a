//! Sampled sup-distances between compactly supported maps.
//!
//! Each support box is covered by a lattice anchored at its lower corner with
//! spacing equal to the mesh, so halving the mesh refines the lattice. The
//! upper estimate adds, per axis, the largest observed difference quotient of
//! the distance function times half the lattice step; it is a heuristic
//! certificate, not a proof.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::FlowMap;
use crate::space::{circle_distance, Space};
use crate::support::{AxisBox, Support};

#[derive(Debug, Clone, PartialEq)]
pub struct SupEstimate {
    /// Largest sampled value.
    pub lower: f64,
    /// Largest lattice spacing used.
    pub mesh: f64,
    pub lipschitz_bound: Option<f64>,
    pub certified_upper: Option<f64>,
    /// Where `lower` was attained.
    pub argmax: Vec<f64>,
    pub samples: usize,
}

impl SupEstimate {
    fn zero() -> Self {
        SupEstimate {
            lower: 0.0,
            mesh: 0.0,
            lipschitz_bound: Some(0.0),
            certified_upper: Some(0.0),
            argmax: Vec::new(),
            samples: 0,
        }
    }

    /// `certified_upper`, or `lower` when no certificate exists.
    pub fn upper(&self) -> f64 {
        self.certified_upper.unwrap_or(self.lower)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub mesh: f64,
    pub min_per_axis: usize,
    pub max_per_axis: usize,
    /// Samples on the circle factor when a map is not Reeb-invariant.
    pub circle_samples: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            mesh: 0.02,
            min_per_axis: 9,
            max_per_axis: 25,
            circle_samples: 16,
        }
    }
}

impl GridSpec {
    pub fn with_mesh(mesh: f64) -> Self {
        GridSpec {
            mesh,
            ..GridSpec::default()
        }
    }
}

/// Per-axis lattice of one box.
struct Lattice {
    lo: Vec<f64>,
    step: Vec<f64>,
    counts: Vec<usize>,
    periodic: Vec<bool>,
}

impl Lattice {
    fn new(space: Space, b: &AxisBox, grid: &GridSpec, circle: usize) -> Self {
        let d = space.dimension();
        let z = space.z_index().filter(|_| space.is_prequantized());
        let mut lo = Vec::with_capacity(d);
        let mut step = Vec::with_capacity(d);
        let mut counts = Vec::with_capacity(d);
        let mut periodic = Vec::with_capacity(d);
        for k in 0..d {
            if Some(k) == z {
                let c = circle.max(1);
                lo.push(0.0);
                step.push(1.0 / c as f64);
                counts.push(c);
                periodic.push(true);
                continue;
            }
            let side = b.side(k).max(0.0);
            let want = (side / grid.mesh).ceil() as usize + 1;
            let c = want.clamp(grid.min_per_axis.max(2), grid.max_per_axis.max(2));
            lo.push(b.lo[k]);
            step.push(if c == want { grid.mesh } else { side / (c - 1) as f64 });
            counts.push(c);
            periodic.push(false);
        }
        Lattice {
            lo,
            step,
            counts,
            periodic,
        }
    }

    fn total(&self) -> usize {
        self.counts.iter().product()
    }

    fn index(&self, mut flat: usize) -> Vec<usize> {
        self.counts
            .iter()
            .map(|&c| {
                let j = flat % c;
                flat /= c;
                j
            })
            .collect()
    }

    fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(k, &j)| self.lo[k] + self.step[k] * j as f64)
            .collect()
    }

    fn stride(&self, k: usize) -> usize {
        self.counts[..k].iter().product()
    }

    fn on_face(&self, idx: &[usize]) -> bool {
        idx.iter()
            .enumerate()
            .any(|(k, &j)| !self.periodic[k] && (j == 0 || j + 1 == self.counts[k]))
    }
}

/// Sampled distance function over one lattice; returns values in flat order.
fn sample<D>(lat: &Lattice, dist: &D) -> Result<Vec<f64>>
where
    D: Fn(&[f64]) -> Result<f64> + Sync,
{
    (0..lat.total())
        .into_par_iter()
        .map(|f| dist(&lat.point(&lat.index(f))))
        .collect()
}

struct BoxResult {
    lower: f64,
    argmax: Vec<f64>,
    lipschitz: Vec<f64>,
    step: Vec<f64>,
    leak: f64,
    samples: usize,
}

fn scan_box<D>(space: Space, lat: &Lattice, dist: &D, others: &[AxisBox]) -> Result<BoxResult>
where
    D: Fn(&[f64]) -> Result<f64> + Sync,
{
    let vals = sample(lat, dist)?;
    let d = space.dimension();
    let mut lower = 0.0;
    let mut argmax = lat.point(&lat.index(0));
    let mut lipschitz = vec![0.0f64; d];
    let mut leak: f64 = 0.0;
    for (f, &v) in vals.iter().enumerate() {
        let idx = lat.index(f);
        if v > lower {
            lower = v;
            argmax = lat.point(&idx);
        }
        for k in 0..d {
            let c = lat.counts[k];
            if c < 2 {
                continue;
            }
            let g = if idx[k] + 1 < c {
                f + lat.stride(k)
            } else if lat.periodic[k] {
                f + lat.stride(k) - c * lat.stride(k)
            } else {
                continue;
            };
            let q = (vals[g] - v).abs() / lat.step[k];
            lipschitz[k] = lipschitz[k].max(q);
        }
        if v > 0.0 && lat.on_face(&idx) {
            let p = lat.point(&idx);
            if !others.iter().any(|b| strictly_inside(space, b, &p)) {
                leak = leak.max(v);
            }
        }
    }
    Ok(BoxResult {
        lower,
        argmax,
        lipschitz,
        step: lat.step.clone(),
        leak,
        samples: vals.len(),
    })
}

fn strictly_inside(space: Space, b: &AxisBox, p: &[f64]) -> bool {
    let z = space.z_index().filter(|_| space.is_prequantized());
    p.iter()
        .enumerate()
        .all(|(k, &v)| Some(k) == z || (v > b.lo[k] && v < b.hi[k]))
}

/// Boundary values above this count as support leakage.
const LEAK_TOL: f64 = 1e-9;

fn estimate<D>(space: Space, boxes: &[AxisBox], grid: &GridSpec, circle: usize, dist: &D, check_leak: bool) -> Result<SupEstimate>
where
    D: Fn(&[f64]) -> Result<f64> + Sync,
{
    if !(grid.mesh > 0.0) {
        return Err(Error::InvalidParameter(format!("mesh must be positive, got {}", grid.mesh)));
    }
    if grid.min_per_axis > grid.max_per_axis {
        return Err(Error::InvalidParameter(format!(
            "min_per_axis {} exceeds max_per_axis {}",
            grid.min_per_axis, grid.max_per_axis
        )));
    }
    if boxes.is_empty() {
        return Ok(SupEstimate::zero());
    }
    let mut out = SupEstimate::zero();
    let mut leak: f64 = 0.0;
    let mut upper: f64 = 0.0;
    let mut lip: f64 = 0.0;
    for (i, b) in boxes.iter().enumerate() {
        let others: Vec<AxisBox> = boxes
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, o)| o.clone())
            .collect();
        let lat = Lattice::new(space, b, grid, circle);
        let r = scan_box(space, &lat, dist, &others)?;
        out.samples += r.samples;
        if r.lower > out.lower || out.argmax.is_empty() {
            out.lower = r.lower;
            out.argmax = r.argmax.clone();
        }
        // Any point reaches a lattice point through half a step along each axis.
        let slack: f64 = r.lipschitz.iter().zip(&r.step).map(|(l, s)| 0.5 * l * s).sum();
        let l = r.lipschitz.iter().map(|v| v * v).sum::<f64>().sqrt();
        lip = lip.max(l);
        upper = upper.max(r.lower + slack);
        out.mesh = out.mesh.max(r.step.iter().cloned().fold(0.0, f64::max));
        leak = leak.max(r.leak);
    }
    // A map moves no point on the boundary of its support. Maps are evaluated
    // as the identity outside their declared support, so a wider sample region
    // could not reveal more: a leak is reported at once.
    if check_leak && leak > LEAK_TOL {
        return Err(Error::RegionTooSmall(format!(
            "displacement {leak:.3e} on the boundary of the declared support"
        )));
    }
    out.lipschitz_bound = Some(lip);
    out.certified_upper = Some(upper.max(out.lower));
    Ok(out)
}

fn region_of(f: &FlowMap, g: &FlowMap) -> Result<Vec<AxisBox>> {
    match f.support().union(g.support()) {
        Support::Compact(boxes) => Ok(boxes),
        Support::Unbounded => Err(Error::InvalidParameter(
            "sup distance over an unbounded support needs an explicit region".into(),
        )),
    }
}

fn circle_count(space: Space, f: &FlowMap, g: &FlowMap, grid: &GridSpec) -> usize {
    if !space.is_prequantized() || (f.reeb_invariant() && g.reeb_invariant()) {
        1
    } else {
        grid.circle_samples
    }
}

fn distance_fn<'a>(space: Space, f: &'a FlowMap, g: &'a FlowMap) -> impl Fn(&[f64]) -> Result<f64> + Sync + 'a {
    move |p: &[f64]| {
        let a = f.apply_tracked(p)?;
        let b = g.apply_tracked(p)?;
        Ok(space.distance_raw(&a.coords, &b.coords))
    }
}

/// `sup_x d(f(x), g(x))` over the union of the two support bounds.
pub fn c0_distance(f: &FlowMap, g: &FlowMap, grid: &GridSpec) -> Result<SupEstimate> {
    let space = f.space();
    space.ensure_same(g.space())?;
    let boxes = region_of(f, g)?;
    let circle = circle_count(space, f, g, grid);
    estimate(space, &boxes, grid, circle, &distance_fn(space, f, g), true)
}

/// Same as [`c0_distance`] over caller-chosen boxes, without the leakage check;
/// the result is a sup over those boxes only.
pub fn c0_distance_on(f: &FlowMap, g: &FlowMap, region: &[AxisBox], grid: &GridSpec) -> Result<SupEstimate> {
    let space = f.space();
    space.ensure_same(g.space())?;
    let circle = circle_count(space, f, g, grid);
    estimate(space, region, grid, circle, &distance_fn(space, f, g), false)
}

/// `sup_x d(f(x), x)`.
pub fn c0_norm(f: &FlowMap, grid: &GridSpec) -> Result<SupEstimate> {
    c0_distance(f, &FlowMap::identity(f.space()), grid)
}

/// `max_i d(f(p_i), g(p_i))` over explicit points: a lower bound for the sup distance.
pub fn c0_lower_at(f: &FlowMap, g: &FlowMap, points: &[Vec<f64>]) -> Result<SupEstimate> {
    let space = f.space();
    space.ensure_same(g.space())?;
    let dist = distance_fn(space, f, g);
    let vals = points.par_iter().map(|p| dist(p)).collect::<Result<Vec<_>>>()?;
    let mut out = SupEstimate::zero();
    out.lipschitz_bound = None;
    out.certified_upper = None;
    out.samples = points.len();
    for (p, v) in points.iter().zip(vals) {
        if v > out.lower || out.argmax.is_empty() {
            out.lower = v;
            out.argmax = p.clone();
        }
    }
    Ok(out)
}

/// `sup_x |z(phi(x)) - z(x)|` in the circle metric: the distance between the
/// projection to the circle and its composite with `phi`.
pub fn projection_distance(phi: &FlowMap, grid: &GridSpec) -> Result<SupEstimate> {
    let space = phi.space();
    if !space.is_prequantized() {
        return Err(Error::InvalidParameter(format!(
            "projection distance needs a circle bundle, got {space}"
        )));
    }
    let boxes = match phi.support() {
        Support::Compact(b) => b.clone(),
        Support::Unbounded => {
            return Err(Error::InvalidParameter(
                "projection distance over an unbounded support needs an explicit region".into(),
            ))
        }
    };
    let id = FlowMap::identity(space);
    let circle = circle_count(space, phi, &id, grid);
    let z = space.dimension() - 1;
    let dist = move |p: &[f64]| -> Result<f64> {
        let a = phi.apply_tracked(p)?;
        Ok(circle_distance(a.coords[z], p[z]))
    };
    estimate(space, &boxes, grid, circle, &dist, false)
}
