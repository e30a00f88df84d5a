//! Flow maps of vector fields, their compositions and conjugates.
//!
//! Every map acts on *tracked states*: blocks of `dimension + 1` numbers
//! holding the coordinates, with the Reeb coordinate never wrapped, followed
//! by the logarithm of the accumulated conformal factor. The unwrapped `z`
//! travel of a state is the path action of the generating isotopy.

pub mod dopri;
mod pullback;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::Flow;
use crate::space::{wrap_unit, Point, Space};
use crate::support::{AxisBox, Support};

pub use dopri::{Dense, Tolerance};
pub use pullback::{jacobian, pullback_defect, pullback_defect_fn, PullbackDefect};

/// A map acting on tracked states.
pub trait Transform: Send + Sync + fmt::Debug {
    fn space(&self) -> Space;

    /// Map every block of `states` (stride `dimension + 1`) in place. All
    /// blocks share one integration step sequence, so differences between
    /// nearby blocks are smooth in the initial data.
    fn apply_joint(&self, states: &mut [f64]) -> Result<()>;

    fn inverse(&self) -> Arc<dyn Transform>;

    fn support(&self) -> Support;

    /// `true` when the map commutes with the Reeb flow.
    fn reeb_invariant(&self) -> bool;
}

/// Result of applying a map to one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracked {
    pub space: Space,
    /// Image coordinates; the Reeb coordinate is not wrapped.
    pub coords: Vec<f64>,
    pub log_conformal: f64,
}

impl Tracked {
    pub fn point(&self) -> Point {
        let mut c = self.coords.clone();
        self.space.canonicalize(&mut c);
        Point::new(self.space, c).expect("tracked state is finite")
    }

    pub fn wrapped(&self) -> Vec<f64> {
        let mut c = self.coords.clone();
        self.space.canonicalize(&mut c);
        c
    }
}

/// Where a map is known to act by an affine formula `p -> A p + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plateau {
    pub region: Region,
    /// Row-major `d x d`.
    pub linear: Vec<f64>,
    pub offset: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Closed ball; with `base_only` the distance uses only the `(x, y)` block.
    Ball {
        center: Vec<f64>,
        radius: f64,
        base_only: bool,
    },
    Box(AxisBox),
}

impl Region {
    pub fn contains(&self, space: Space, p: &[f64]) -> bool {
        match self {
            Region::Ball {
                center,
                radius,
                base_only,
            } => {
                let m = if *base_only { 2 * space.n() } else { p.len() };
                (0..m).map(|k| (p[k] - center[k]).powi(2)).sum::<f64>() <= radius * radius
            }
            Region::Box(b) => b.contains(space, p),
        }
    }

    pub fn contains_box(&self, space: Space, b: &AxisBox) -> bool {
        match self {
            Region::Box(outer) => (0..b.dim()).all(|k| {
                (space.is_prequantized() && Some(k) == space.z_index())
                    || (outer.lo[k] <= b.lo[k] && b.hi[k] <= outer.hi[k])
            }),
            Region::Ball {
                center,
                radius,
                base_only,
            } => {
                let m = if *base_only || space.is_prequantized() {
                    2 * space.n()
                } else {
                    b.dim()
                };
                let far: f64 = (0..m)
                    .map(|k| {
                        let a = (b.lo[k] - center[k]).abs().max((b.hi[k] - center[k]).abs());
                        a * a
                    })
                    .sum();
                far.sqrt() <= *radius
            }
        }
    }
}

impl Plateau {
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let d = p.len();
        (0..d)
            .map(|i| {
                self.offset[i] + (0..d).map(|j| self.linear[i * d + j] * p[j]).sum::<f64>()
            })
            .collect()
    }

    /// Diagonal-plus-shift plateau.
    pub fn diagonal(region: Region, diag: &[f64], offset: Vec<f64>) -> Self {
        let d = diag.len();
        let mut linear = vec![0.0; d * d];
        for i in 0..d {
            linear[i * d + i] = diag[i];
        }
        Plateau {
            region,
            linear,
            offset,
        }
    }

    fn image_box(&self, space: Space, b: &AxisBox) -> AxisBox {
        let d = b.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for mask in 0..(1usize << d) {
            let corner: Vec<f64> = (0..d)
                .map(|k| if mask >> k & 1 == 1 { b.hi[k] } else { b.lo[k] })
                .collect();
            let img = self.apply(&corner);
            for k in 0..d {
                lo[k] = lo[k].min(img[k]);
                hi[k] = hi[k].max(img[k]);
            }
        }
        let mut out = AxisBox::new(lo, hi);
        out.fix_circle(space);
        out
    }
}

#[derive(Clone)]
enum Body {
    Identity,
    Leaf(Arc<dyn Transform>),
    /// `factors[0] o factors[1] o ... `; the last factor is applied first.
    Chain(Arc<[FlowMap]>),
    /// `[h, f, h^-1]`: exactly the identity wherever `h^-1` lands outside `supp f`.
    Conjugate(Arc<[FlowMap]>),
}

/// A contactomorphism (or symplectomorphism) given by flows and compositions.
#[derive(Clone)]
pub struct FlowMap {
    space: Space,
    body: Body,
    support: Support,
    plateau: Option<Plateau>,
    label: String,
}

impl fmt::Debug for FlowMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowMap")
            .field("label", &self.label)
            .field("space", &self.space)
            .finish()
    }
}

#[derive(Debug)]
struct FieldFlow {
    field: Flow,
    t0: f64,
    t1: f64,
    tol: Tolerance,
}

impl Transform for FieldFlow {
    fn space(&self) -> Space {
        self.field.space()
    }

    fn apply_joint(&self, states: &mut [f64]) -> Result<()> {
        let d = self.field.space().dimension();
        let stride = d + 1;
        let field = &self.field;
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            for (yb, db) in y.chunks_exact(stride).zip(dy.chunks_exact_mut(stride)) {
                db[d] = field.eval(t, &yb[..d], &mut db[..d]);
            }
        };
        dopri::integrate(rhs, self.t0, self.t1, states, self.tol, false)?;
        Ok(())
    }

    fn inverse(&self) -> Arc<dyn Transform> {
        Arc::new(FieldFlow {
            field: self.field.clone(),
            t0: self.t1,
            t1: self.t0,
            tol: self.tol,
        })
    }

    fn support(&self) -> Support {
        self.field.support()
    }

    fn reeb_invariant(&self) -> bool {
        self.field.reeb_invariant()
    }
}

impl FlowMap {
    pub fn identity(space: Space) -> Self {
        FlowMap {
            space,
            body: Body::Identity,
            support: Support::empty(),
            plateau: None,
            label: "id".into(),
        }
    }

    pub fn from_transform(op: Arc<dyn Transform>, label: impl Into<String>) -> Self {
        FlowMap {
            space: op.space(),
            support: op.support(),
            body: Body::Leaf(op),
            plateau: None,
            label: label.into(),
        }
    }

    /// Time-`(t0 -> t1)` map of a vector field.
    pub fn flow_between(field: Flow, t0: f64, t1: f64, tol: Tolerance) -> Self {
        if field.support().is_empty() || t0 == t1 {
            return FlowMap::identity(field.space());
        }
        let label = format!("flow[{t0}, {t1}]");
        FlowMap::from_transform(Arc::new(FieldFlow { field, t0, t1, tol }), label)
    }

    /// Time-`duration` map of a vector field started at time 0.
    pub fn flow(field: Flow, duration: f64, tol: Tolerance) -> Self {
        FlowMap::flow_between(field, 0.0, duration, tol)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    /// Replace the support bound (must contain the true support).
    pub fn with_support(mut self, support: Support) -> Self {
        self.support = support;
        self
    }

    pub fn plateau(&self) -> Option<&Plateau> {
        self.plateau.as_ref()
    }

    pub fn with_plateau(mut self, plateau: Plateau) -> Self {
        self.plateau = Some(plateau);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.body, Body::Identity)
    }

    pub fn factors(&self) -> Option<&[FlowMap]> {
        match &self.body {
            Body::Chain(f) | Body::Conjugate(f) => Some(f),
            _ => None,
        }
    }

    pub fn reeb_invariant(&self) -> bool {
        match &self.body {
            Body::Identity => true,
            Body::Leaf(op) => op.reeb_invariant(),
            Body::Chain(f) | Body::Conjugate(f) => f.iter().all(|m| m.reeb_invariant()),
        }
    }

    pub fn inverse(&self) -> FlowMap {
        let body = match &self.body {
            Body::Identity => Body::Identity,
            Body::Leaf(op) => Body::Leaf(op.inverse()),
            Body::Chain(f) => Body::Chain(f.iter().rev().map(|m| m.inverse()).collect()),
            Body::Conjugate(f) => Body::Conjugate(f.iter().rev().map(|m| m.inverse()).collect()),
        };
        FlowMap {
            space: self.space,
            body,
            support: self.support.clone(),
            plateau: None,
            label: format!("({})^-1", self.label),
        }
    }

    fn any_block_in_support(&self, states: &[f64]) -> bool {
        let stride = self.space.dimension() + 1;
        match &self.support {
            Support::Unbounded => true,
            Support::Compact(boxes) if boxes.is_empty() => false,
            s => states
                .chunks_exact(stride)
                .any(|b| s.contains(self.space, &b[..stride - 1])),
        }
    }

    /// Apply to blocks of tracked states in place (stride `dimension + 1`).
    pub fn apply_joint(&self, states: &mut [f64]) -> Result<()> {
        if !self.any_block_in_support(states) {
            return Ok(());
        }
        match &self.body {
            Body::Identity => Ok(()),
            Body::Leaf(op) => op.apply_joint(states),
            Body::Chain(f) => {
                for m in f.iter().rev() {
                    m.apply_joint(states)?;
                }
                Ok(())
            }
            Body::Conjugate(f) => {
                let start = states.to_vec();
                f[2].apply_joint(states)?;
                if !f[1].any_block_in_support(states) {
                    states.copy_from_slice(&start);
                    return Ok(());
                }
                f[1].apply_joint(states)?;
                f[0].apply_joint(states)
            }
        }
    }

    /// Apply to one point given by coordinates (any representative of `z`).
    pub fn apply_tracked(&self, coords: &[f64]) -> Result<Tracked> {
        let d = self.space.dimension();
        if coords.len() != d {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates for a map on {}",
                coords.len(),
                self.space
            )));
        }
        let mut s = Vec::with_capacity(d + 1);
        s.extend_from_slice(coords);
        s.push(0.0);
        self.apply_joint(&mut s)?;
        let g = s.pop().unwrap_or(0.0);
        Ok(Tracked {
            space: self.space,
            coords: s,
            log_conformal: g,
        })
    }

    /// Independent evaluation of many points, in parallel, order preserved.
    pub fn apply_many(&self, points: &[Vec<f64>]) -> Result<Vec<Tracked>> {
        points.par_iter().map(|p| self.apply_tracked(p)).collect()
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        self.space.ensure_same(p.space())?;
        Ok(self.apply_tracked(p.coords())?.point())
    }

    /// Total `z` travel of `p` along the generating isotopy.
    pub fn action(&self, p: &Point) -> Result<f64> {
        let z = self
            .space
            .z_index()
            .ok_or_else(|| Error::InvalidParameter("actions need a contact space".into()))?;
        self.space.ensure_same(p.space())?;
        let t = self.apply_tracked(p.coords())?;
        Ok(t.coords[z] - p.coords()[z])
    }
}

/// `maps[0] o maps[1] o ... o maps[N-1]`, a lazy composite.
#[derive(Debug, Clone)]
pub struct Composite {
    pub factors: Vec<FlowMap>,
}

impl Composite {
    pub fn new(factors: Vec<FlowMap>) -> Result<Self> {
        if let Some(first) = factors.first() {
            for m in &factors[1..] {
                first.space().ensure_same(m.space())?;
            }
        }
        Ok(Composite { factors })
    }

    pub fn to_map(&self) -> FlowMap {
        let space = match self.factors.first() {
            Some(m) => m.space(),
            None => return FlowMap::identity(Space::EuclideanContact(1)),
        };
        let factors: Vec<FlowMap> = self
            .factors
            .iter()
            .filter(|m| !m.is_identity())
            .cloned()
            .collect();
        if factors.is_empty() {
            return FlowMap::identity(space);
        }
        if factors.len() == 1 {
            return factors[0].clone();
        }
        let support = factors
            .iter()
            .fold(Support::empty(), |acc, m| acc.union(m.support()));
        let label = factors
            .iter()
            .map(|m| m.label().to_string())
            .collect::<Vec<_>>()
            .join(" o ");
        FlowMap {
            space,
            body: Body::Chain(factors.into()),
            support,
            plateau: None,
            label,
        }
    }
}

/// `maps[0] o maps[1] o ... o maps[N-1]`.
pub fn compose(maps: Vec<FlowMap>) -> Result<FlowMap> {
    Ok(Composite::new(maps)?.to_map())
}

/// `h o f o h^{-1}`, with support bounded by the image of `supp f` under `h`.
pub fn conjugate(f: &FlowMap, h: &FlowMap) -> Result<FlowMap> {
    f.space().ensure_same(h.space())?;
    if f.is_identity() {
        return Ok(f.clone());
    }
    if h.is_identity() {
        return Ok(f.clone());
    }
    let support = match f.support() {
        Support::Unbounded => Support::Unbounded,
        Support::Compact(boxes) => Support::Compact(
            boxes
                .iter()
                .map(|b| image_bound(h, b))
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    let label = format!("{} . {} . {}^-1", h.label(), f.label(), h.label());
    Ok(FlowMap {
        space: f.space(),
        body: Body::Conjugate(vec![h.clone(), f.clone(), h.inverse()].into()),
        support,
        plateau: None,
        label,
    })
}

/// A box containing `h(b)`: exact through affine plateaus and untouched
/// regions, otherwise from sampled images inflated by a safety margin.
pub fn image_bound(h: &FlowMap, b: &AxisBox) -> Result<AxisBox> {
    let space = h.space();
    if let Some(factors) = h.factors() {
        let mut cur = b.clone();
        for m in factors.iter().rev() {
            cur = image_bound(m, &cur)?;
        }
        return Ok(cur);
    }
    if h.is_identity() {
        return Ok(b.clone());
    }
    if let Support::Compact(boxes) = h.support() {
        if !boxes.iter().any(|s| s.intersects(space, b)) {
            return Ok(b.clone());
        }
    }
    if let Some(p) = h.plateau() {
        if p.region.contains_box(space, b) {
            return Ok(p.image_box(space, b));
        }
    }
    let d = space.dimension();
    let per_axis = if d <= 3 { 7 } else if d <= 5 { 4 } else { 3 };
    let mut sample_box = b.clone();
    if space.is_prequantized() {
        let z = 2 * space.n();
        sample_box.lo[z] = 0.0;
        sample_box.hi[z] = 1.0;
    }
    let pts = sample_box.sample_lattice(per_axis);
    let imgs = h.apply_many(&pts)?;
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for t in &imgs {
        for k in 0..d {
            lo[k] = lo[k].min(t.coords[k]);
            hi[k] = hi[k].max(t.coords[k]);
        }
    }
    let img = AxisBox::new(lo, hi);
    // lattice images miss interior bulges; widen generously
    let spread = (0..d)
        .map(|k| b.side(k))
        .filter(|s| s.is_finite())
        .fold(0.0, f64::max)
        .max(1e-3);
    Ok(img.inflate(space, 0.25, 0.05 * spread))
}

/// A path of maps `t -> phi_t`, `t in [0, T]`, generated by one vector field.
#[derive(Debug, Clone)]
pub struct Isotopy {
    field: Flow,
    t_end: f64,
    tol: Tolerance,
}

/// The isotopy of `field` over `[0, t_end]`.
pub fn integrate(field: Flow, t_end: f64, tol: Tolerance) -> Result<Isotopy> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "isotopy length must be finite and >= 0, got {t_end}"
        )));
    }
    Ok(Isotopy { field, t_end, tol })
}

/// Sampled trajectory of one point with dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    space: Space,
    dense: Dense,
}

impl Trajectory {
    pub fn at(&self, t: f64) -> Tracked {
        let d = self.space.dimension();
        let mut s = vec![0.0; d + 1];
        self.dense.eval(t, &mut s);
        let g = s.pop().unwrap_or(0.0);
        Tracked {
            space: self.space,
            coords: s,
            log_conformal: g,
        }
    }

    pub fn dense(&self) -> &Dense {
        &self.dense
    }
}

impl Isotopy {
    pub fn field(&self) -> &Flow {
        &self.field
    }

    pub fn length(&self) -> f64 {
        self.t_end
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    pub fn trajectory(&self, p: &Point) -> Result<Trajectory> {
        let space = self.field.space();
        space.ensure_same(p.space())?;
        let d = space.dimension();
        let stride = d + 1;
        let mut s = p.coords().to_vec();
        s.push(0.0);
        let field = &self.field;
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            dy[d] = field.eval(t, &y[..d], &mut dy[..d]);
        };
        debug_assert_eq!(s.len(), stride);
        let dense = dopri::integrate(rhs, 0.0, self.t_end, &mut s, self.tol, true)?
            .expect("dense output requested");
        Ok(Trajectory { space, dense })
    }

    /// `phi_t(p)`; exact at `t = 0`.
    pub fn evaluate(&self, t: f64, p: &Point) -> Result<Point> {
        if !(0.0..=self.t_end).contains(&t) {
            return Err(Error::InvalidParameter(format!(
                "time {t} outside [0, {}]",
                self.t_end
            )));
        }
        FlowMap::flow_between(self.field.clone(), 0.0, t, self.tol).apply(p)
    }

    pub fn time_map(&self) -> FlowMap {
        FlowMap::flow(self.field.clone(), self.t_end, self.tol)
    }

    /// `int_0^T dtheta(d/dt phi_t(p)) dt`: the unwrapped travel of the Reeb coordinate.
    pub fn path_action(&self, p: &Point) -> Result<f64> {
        self.time_map().action(p)
    }
}

/// Circle-aware comparison helper: the image's Reeb coordinate reduced to `[0, 1)`.
pub fn wrapped_z(space: Space, coords: &[f64]) -> Option<f64> {
    space.z_index().map(|z| {
        if space.is_prequantized() {
            wrap_unit(coords[z])
        } else {
            coords[z]
        }
    })
}
