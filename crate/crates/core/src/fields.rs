//! Scalar Hamiltonians with analytic gradients and the contact and
//! symplectic vector fields they generate.
//!
//! With `alpha_0 = dz - sum y_i dx_i` the Reeb field is `d/dz`, and solving
//! `d alpha(X, .) = dH(R) alpha - dH`, `alpha(X) = H` gives
//!
//! ```text
//! X^{x_i} = -dH/dy_i
//! X^{y_i} =  dH/dx_i + y_i dH/dz
//! X^{z}   =  H - sum_i y_i dH/dy_i
//! ```
//!
//! Along the flow the conformal factor `phi_t^* alpha = e^{g_t} alpha`
//! satisfies `dg/dt = (dH/dz)(phi_t)`, which every contact field reports
//! next to its velocity.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{Point, Space, TangentVector};
use crate::support::{AxisBox, Support};

/// Upper bound on ambient dimension for the stack scratch buffers.
pub const MAX_DIM: usize = 16;

/// A time-dependent scalar function with analytic gradient.
pub trait ScalarField: Send + Sync + fmt::Debug {
    fn space(&self) -> Space;

    /// Value at `(t, p)`; the gradient is written into `grad` (length = dimension).
    fn eval(&self, t: f64, p: &[f64], grad: &mut [f64]) -> f64;

    /// Region outside which value and gradient vanish.
    fn support(&self) -> Support;

    fn is_autonomous(&self) -> bool {
        true
    }

    /// `true` when the field does not depend on the Reeb coordinate.
    fn reeb_invariant(&self) -> bool {
        true
    }

    fn value(&self, t: f64, p: &[f64]) -> f64 {
        let mut g = [0.0; MAX_DIM];
        self.eval(t, p, &mut g[..p.len()])
    }
}

pub type Field = Arc<dyn ScalarField>;

/// Smooth step `S: [0,1] -> [0,1]`, `S(0)=0`, `S(1)=1`, flat to all orders at both ends.
/// Returns `(S(u), S'(u), S''(u))`.
pub fn smooth_step(u: f64) -> (f64, f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if u >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    // f(u) = exp(-1/u), f' = f/u^2, f'' = f (1 - 2u) / u^4
    let f = |s: f64| (-1.0 / s).exp();
    let (a, b) = (f(u), f(1.0 - u));
    let (da, db) = (a / (u * u), -b / ((1.0 - u) * (1.0 - u)));
    let dda = a * (1.0 - 2.0 * u) / u.powi(4);
    let v = 1.0 - u;
    let ddb = b * (1.0 - 2.0 * v) / v.powi(4);
    let s = a + b;
    let ds = da + db;
    let dds = dda + ddb;
    let val = a / s;
    let d1 = (da * s - a * ds) / (s * s);
    let d2 = (dda * s - a * dds) / (s * s) - 2.0 * d1 * ds / s;
    (val, d1, d2)
}

/// Supremum of `S'` on `[0, 1]`, attained at `u = 1/2`.
pub const SMOOTH_STEP_MAX_SLOPE: f64 = 2.0;

/// Radial cutoff profile: 1 for `r <= r_inner`, 0 for `r >= r_outer`.
/// Returns `(sigma(r), sigma'(r), sigma''(r))`.
pub fn cutoff_profile(r: f64, r_inner: f64, r_outer: f64) -> (f64, f64, f64) {
    let w = r_outer - r_inner;
    let (s, ds, dds) = smooth_step((r_outer - r) / w);
    (s, -ds / w, dds / (w * w))
}

/// Which coordinates a radial profile measures distance in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Radial {
    /// Every coordinate (a ball).
    Full,
    /// Only the `(x, y)` block (a tube `B x S^1` or `B x R`).
    Base,
}

/// `height * sigma(|p - center|)` with the smooth cutoff profile.
#[derive(Debug, Clone)]
pub struct RadialBump {
    space: Space,
    center: Vec<f64>,
    height: f64,
    r_inner: f64,
    r_outer: f64,
    radial: Radial,
}

impl RadialBump {
    pub fn new(
        space: Space,
        center: Vec<f64>,
        height: f64,
        r_inner: f64,
        r_outer: f64,
        radial: Radial,
    ) -> Result<Self> {
        if !(r_inner > 0.0 && r_inner < r_outer) {
            return Err(Error::InvalidParameter(format!(
                "cutoff radii must satisfy 0 < r_inner < r_outer (got {r_inner}, {r_outer})"
            )));
        }
        if center.len() != space.dimension() {
            return Err(Error::InvalidParameter("center has wrong dimension".into()));
        }
        let radial = if space.is_prequantized() {
            Radial::Base
        } else {
            radial
        };
        Ok(RadialBump {
            space,
            center,
            height,
            r_inner,
            r_outer,
            radial,
        })
    }

    fn measured(&self) -> usize {
        match self.radial {
            Radial::Full => self.space.dimension(),
            Radial::Base => 2 * self.space.n(),
        }
    }

    pub fn radius(&self, p: &[f64]) -> f64 {
        (0..self.measured())
            .map(|k| (p[k] - self.center[k]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn radii(&self) -> (f64, f64) {
        (self.r_inner, self.r_outer)
    }

    /// Radial profile `(F, F', F'')` at radius `r`.
    pub fn profile(&self, r: f64) -> (f64, f64, f64) {
        let (s, ds, dds) = cutoff_profile(r, self.r_inner, self.r_outer);
        (self.height * s, self.height * ds, self.height * dds)
    }

    /// Analytic bound on `sup_r |F'(r)| / r`.
    pub fn slope_ratio_bound(&self) -> f64 {
        self.height.abs() * SMOOTH_STEP_MAX_SLOPE / ((self.r_outer - self.r_inner) * self.r_inner)
    }
}

impl ScalarField for RadialBump {
    fn space(&self) -> Space {
        self.space
    }

    fn eval(&self, _t: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let r = self.radius(p);
        if r >= self.r_outer {
            return 0.0;
        }
        if r <= self.r_inner {
            return self.height;
        }
        let (f, df, _) = self.profile(r);
        for (k, g) in grad.iter_mut().enumerate().take(self.measured()) {
            *g = df * (p[k] - self.center[k]) / r;
        }
        f
    }

    fn support(&self) -> Support {
        let mut b = AxisBox::ball_hull(self.space, &self.center, self.r_outer);
        if self.radial == Radial::Base {
            if let Some(z) = self.space.z_index() {
                b.lo[z] = f64::NEG_INFINITY;
                b.hi[z] = f64::INFINITY;
                b.fix_circle(self.space);
            }
        }
        Support::boxed(b)
    }
}

/// Product of one-dimensional smooth plateaus: 1 on `inner`, 0 outside `outer`.
#[derive(Debug, Clone)]
pub struct BoxCutoff {
    space: Space,
    inner: AxisBox,
    outer: AxisBox,
}

impl BoxCutoff {
    pub fn new(space: Space, inner: AxisBox, outer: AxisBox) -> Result<Self> {
        let d = space.dimension();
        if inner.dim() != d || outer.dim() != d {
            return Err(Error::InvalidParameter("box dimension mismatch".into()));
        }
        for k in 0..d {
            if space.is_prequantized() && Some(k) == space.z_index() {
                continue;
            }
            if !(outer.lo[k] < inner.lo[k] && inner.lo[k] <= inner.hi[k] && inner.hi[k] < outer.hi[k])
            {
                return Err(Error::InvalidParameter(format!(
                    "inner box must sit strictly inside the outer box on axis {k}"
                )));
            }
        }
        Ok(BoxCutoff { space, inner, outer })
    }

    fn axis(&self, k: usize, v: f64) -> (f64, f64) {
        let (il, ih, ol, oh) = (self.inner.lo[k], self.inner.hi[k], self.outer.lo[k], self.outer.hi[k]);
        if v <= ol || v >= oh {
            (0.0, 0.0)
        } else if v < il {
            let w = il - ol;
            let (s, ds, _) = smooth_step((v - ol) / w);
            (s, ds / w)
        } else if v > ih {
            let w = oh - ih;
            let (s, ds, _) = smooth_step((oh - v) / w);
            (s, -ds / w)
        } else {
            (1.0, 0.0)
        }
    }
}

impl ScalarField for BoxCutoff {
    fn space(&self) -> Space {
        self.space
    }

    fn eval(&self, _t: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        let d = p.len();
        let skip = if self.space.is_prequantized() {
            self.space.z_index()
        } else {
            None
        };
        let mut vals = [1.0; MAX_DIM];
        let mut ders = [0.0; MAX_DIM];
        for k in 0..d {
            if Some(k) == skip {
                continue;
            }
            let (v, dv) = self.axis(k, p[k]);
            vals[k] = v;
            ders[k] = dv;
        }
        let total: f64 = vals[..d].iter().product();
        for k in 0..d {
            grad[k] = if ders[k] == 0.0 {
                0.0
            } else {
                ders[k]
                    * vals[..d]
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != k)
                        .map(|(_, v)| v)
                        .product::<f64>()
            };
        }
        total
    }

    fn support(&self) -> Support {
        let mut b = self.outer.clone();
        b.fix_circle(self.space);
        Support::boxed(b)
    }
}

/// `c + sum_k w_k p_k`.
#[derive(Debug, Clone)]
pub struct Affine {
    space: Space,
    constant: f64,
    weights: Vec<f64>,
}

impl Affine {
    pub fn constant(space: Space, c: f64) -> Self {
        Affine {
            space,
            constant: c,
            weights: vec![0.0; space.dimension()],
        }
    }

    pub fn new(space: Space, constant: f64, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.dimension() {
            return Err(Error::InvalidParameter("weights have wrong length".into()));
        }
        if space.is_prequantized() && weights[2 * space.n()] != 0.0 {
            return Err(Error::InvalidParameter(
                "a linear function of z is not defined on the circle".into(),
            ));
        }
        Ok(Affine {
            space,
            constant,
            weights,
        })
    }
}

impl ScalarField for Affine {
    fn space(&self) -> Space {
        self.space
    }

    fn eval(&self, _t: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        grad.copy_from_slice(&self.weights);
        self.constant + self.weights.iter().zip(p).map(|(w, v)| w * v).sum::<f64>()
    }

    fn support(&self) -> Support {
        if self.constant == 0.0 && self.weights.iter().all(|w| *w == 0.0) {
            Support::empty()
        } else {
            Support::Unbounded
        }
    }

    fn reeb_invariant(&self) -> bool {
        self.space
            .z_index()
            .is_none_or(|z| self.weights[z] == 0.0)
    }
}

/// `pi * |q|^2` on the `(x, y)` block: its symplectic flow is the unit-period rotation.
#[derive(Debug, Clone)]
pub struct Quadratic {
    space: Space,
    coefficient: f64,
}

impl Quadratic {
    pub fn new(space: Space, coefficient: f64) -> Self {
        Quadratic { space, coefficient }
    }

    pub fn rotation(space: Space) -> Self {
        Quadratic::new(space, PI)
    }
}

impl ScalarField for Quadratic {
    fn space(&self) -> Space {
        self.space
    }

    fn eval(&self, _t: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let m = 2 * self.space.n();
        let mut v = 0.0;
        for k in 0..m {
            v += p[k] * p[k];
            grad[k] = 2.0 * self.coefficient * p[k];
        }
        self.coefficient * v
    }

    fn support(&self) -> Support {
        Support::Unbounded
    }
}

/// Time profile of the scaling isotopy `(x, y, z) -> (s x, s y, s^2 z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingPath {
    /// `s(t) = 1 + (a - 1) t`.
    Linear,
    /// `s(t) = a^t`; autonomous generator.
    Exponential,
}

/// Contact Hamiltonian `c(t) (2z - <x, y>)` of the scaling isotopy, uncut.
#[derive(Debug, Clone)]
pub struct ScalingGenerator {
    space: Space,
    a: f64,
    path: ScalingPath,
}

impl ScalingGenerator {
    pub fn new(space: Space, a: f64, path: ScalingPath) -> Result<Self> {
        if !matches!(space, Space::EuclideanContact(_)) {
            return Err(Error::InvalidParameter(
                "the scaling generator lives on R^{2n+1}".into(),
            ));
        }
        if !(a > 0.0) {
            return Err(Error::InvalidParameter(format!("scaling factor must be > 0, got {a}")));
        }
        Ok(ScalingGenerator { space, a, path })
    }

    /// Logarithmic rate `s'(t)/s(t)`.
    pub fn rate(&self, t: f64) -> f64 {
        match self.path {
            ScalingPath::Linear => (self.a - 1.0) / (1.0 + (self.a - 1.0) * t),
            ScalingPath::Exponential => self.a.ln(),
        }
    }
}

impl ScalarField for ScalingGenerator {
    fn space(&self) -> Space {
        self.space
    }

    fn eval(&self, t: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.space.n();
        let c = self.rate(t);
        let mut xy = 0.0;
        for i in 0..n {
            xy += p[i] * p[n + i];
            grad[i] = -c * p[n + i];
            grad[n + i] = -c * p[i];
        }
        grad[2 * n] = 2.0 * c;
        c * (2.0 * p[2 * n] - xy)
    }

    fn support(&self) -> Support {
        if self.a == 1.0 {
            Support::empty()
        } else {
            Support::Unbounded
        }
    }

    fn is_autonomous(&self) -> bool {
        self.path == ScalingPath::Exponential || self.a == 1.0
    }

    fn reeb_invariant(&self) -> bool {
        self.a == 1.0
    }
}

#[derive(Debug, Clone)]
pub struct Sum(pub Vec<Field>);

impl ScalarField for Sum {
    fn space(&self) -> Space {
        self.0[0].space()
    }

    fn eval(&self, t: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut tmp = [0.0; MAX_DIM];
        let d = p.len();
        let mut v = 0.0;
        for f in &self.0 {
            v += f.eval(t, p, &mut tmp[..d]);
            for k in 0..d {
                grad[k] += tmp[k];
            }
        }
        v
    }

    fn support(&self) -> Support {
        self.0
            .iter()
            .fold(Support::empty(), |acc, f| acc.union(&f.support()))
    }

    fn is_autonomous(&self) -> bool {
        self.0.iter().all(|f| f.is_autonomous())
    }

    fn reeb_invariant(&self) -> bool {
        self.0.iter().all(|f| f.reeb_invariant())
    }
}

/// Pointwise product, typically `cutoff * generator`.
#[derive(Debug, Clone)]
pub struct Product(pub Field, pub Field);

impl ScalarField for Product {
    fn space(&self) -> Space {
        self.0.space()
    }

    fn eval(&self, t: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        let d = p.len();
        let mut ga = [0.0; MAX_DIM];
        let a = self.0.eval(t, p, &mut ga[..d]);
        if a == 0.0 && ga[..d].iter().all(|g| *g == 0.0) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return 0.0;
        }
        let mut gb = [0.0; MAX_DIM];
        let b = self.1.eval(t, p, &mut gb[..d]);
        for k in 0..d {
            grad[k] = ga[k] * b + a * gb[k];
        }
        a * b
    }

    fn support(&self) -> Support {
        match (self.0.support(), self.1.support()) {
            (Support::Unbounded, s) | (s, Support::Unbounded) => s,
            (a, b) => {
                // either bound is valid; keep the one with fewer boxes
                if a.boxes().map_or(0, |v| v.len()) <= b.boxes().map_or(0, |v| v.len()) {
                    a
                } else {
                    b
                }
            }
        }
    }

    fn is_autonomous(&self) -> bool {
        self.0.is_autonomous() && self.1.is_autonomous()
    }

    fn reeb_invariant(&self) -> bool {
        self.0.reeb_invariant() && self.1.reeb_invariant()
    }
}

#[derive(Debug, Clone)]
pub struct Scaled(pub f64, pub Field);

impl ScalarField for Scaled {
    fn space(&self) -> Space {
        self.1.space()
    }

    fn eval(&self, t: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        let v = self.1.eval(t, p, grad);
        grad.iter_mut().for_each(|g| *g *= self.0);
        self.0 * v
    }

    fn support(&self) -> Support {
        if self.0 == 0.0 {
            Support::empty()
        } else {
            self.1.support()
        }
    }

    fn is_autonomous(&self) -> bool {
        self.1.is_autonomous()
    }

    fn reeb_invariant(&self) -> bool {
        self.1.reeb_invariant()
    }
}

/// `base(q) * (c0 + c1 sin(2 pi z) + c2 cos(2 pi z))` on the prequantized space.
#[derive(Debug, Clone)]
pub struct CircleModulated {
    base: Field,
    coefficients: [f64; 3],
}

impl CircleModulated {
    pub fn new(base: Field, coefficients: [f64; 3]) -> Result<Self> {
        if !base.space().is_prequantized() {
            return Err(Error::InvalidParameter(
                "circle modulation needs a prequantized space".into(),
            ));
        }
        Ok(CircleModulated { base, coefficients })
    }
}

impl ScalarField for CircleModulated {
    fn space(&self) -> Space {
        self.base.space()
    }

    fn eval(&self, t: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        let d = p.len();
        let b = self.base.eval(t, p, grad);
        let w = 2.0 * PI * p[d - 1];
        let [c0, c1, c2] = self.coefficients;
        let (s, c) = w.sin_cos();
        let m = c0 + c1 * s + c2 * c;
        let dm = 2.0 * PI * (c1 * c - c2 * s);
        for g in grad.iter_mut() {
            *g *= m;
        }
        grad[d - 1] += b * dm;
        b * m
    }

    fn support(&self) -> Support {
        self.base.support()
    }

    fn is_autonomous(&self) -> bool {
        self.base.is_autonomous()
    }

    fn reeb_invariant(&self) -> bool {
        self.coefficients[1] == 0.0 && self.coefficients[2] == 0.0 && self.base.reeb_invariant()
    }
}

/// Transport of a field on `R^{2n+1}` by the strict contactomorphism
/// `L(x, y, z) = (x + x0, y + y0, z + z0 + <y0, x>)`; the result is `H o L^{-1}`.
///
/// On a prequantized target the inner field must be supported in `|z| < 1/2`
/// and is extended periodically.
#[derive(Debug, Clone)]
pub struct Transported {
    inner: Field,
    target: Space,
    shift: Vec<f64>,
}

impl Transported {
    pub fn new(inner: Field, target: Space, shift: Vec<f64>) -> Result<Self> {
        let n = target.n();
        if !target.is_contact()
            || !matches!(inner.space(), Space::EuclideanContact(m) if m == n)
            || shift.len() != 2 * n + 1
        {
            return Err(Error::InvalidParameter(
                "transport needs an R^{2n+1} field and a contact target of the same n".into(),
            ));
        }
        if target.is_prequantized() {
            let fits = inner
                .support()
                .hull()
                .map_or(inner.support().is_empty(), |b| {
                    b.lo[2 * n] > -0.5 && b.hi[2 * n] < 0.5
                });
            if !fits {
                return Err(Error::InvalidParameter(
                    "field support does not fit in one circle period".into(),
                ));
            }
        }
        Ok(Transported {
            inner,
            target,
            shift,
        })
    }

    fn pull(&self, p: &[f64], out: &mut [f64]) {
        let n = self.target.n();
        let mut xy0 = 0.0;
        for i in 0..n {
            out[i] = p[i] - self.shift[i];
            out[n + i] = p[n + i] - self.shift[n + i];
            xy0 += self.shift[n + i] * out[i];
        }
        let mut w = p[2 * n] - self.shift[2 * n] - xy0;
        if self.target.is_prequantized() {
            w -= w.round();
        }
        out[2 * n] = w;
    }
}

impl ScalarField for Transported {
    fn space(&self) -> Space {
        self.target
    }

    fn eval(&self, t: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.target.n();
        let d = p.len();
        let mut q = [0.0; MAX_DIM];
        self.pull(p, &mut q[..d]);
        let mut g = [0.0; MAX_DIM];
        let v = self.inner.eval(t, &q[..d], &mut g[..d]);
        for i in 0..n {
            grad[i] = g[i] - self.shift[n + i] * g[2 * n];
            grad[n + i] = g[n + i];
        }
        grad[2 * n] = g[2 * n];
        v
    }

    fn support(&self) -> Support {
        let n = self.target.n();
        match self.inner.support() {
            Support::Unbounded => Support::Unbounded,
            Support::Compact(boxes) => Support::Compact(
                boxes
                    .into_iter()
                    .map(|b| {
                        let mut lo = b.lo.clone();
                        let mut hi = b.hi.clone();
                        let mut zlo = b.lo[2 * n] + self.shift[2 * n];
                        let mut zhi = b.hi[2 * n] + self.shift[2 * n];
                        for i in 0..n {
                            lo[i] += self.shift[i];
                            hi[i] += self.shift[i];
                            lo[n + i] += self.shift[n + i];
                            hi[n + i] += self.shift[n + i];
                            let e1 = self.shift[n + i] * lo[i];
                            let e2 = self.shift[n + i] * hi[i];
                            zlo += e1.min(e2);
                            zhi += e1.max(e2);
                        }
                        lo[2 * n] = zlo;
                        hi[2 * n] = zhi;
                        let mut out = AxisBox::new(lo, hi);
                        out.fix_circle(self.target);
                        out
                    })
                    .collect(),
            ),
        }
    }

    fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }

    fn reeb_invariant(&self) -> bool {
        self.inner.reeb_invariant()
    }
}

/// `-H_{span - t}`: generates the reversed path `s -> phi_{span - s} o phi_span^{-1}`.
#[derive(Debug, Clone)]
pub struct TimeReversed {
    inner: Field,
    span: f64,
}

impl TimeReversed {
    pub fn new(inner: Field, span: f64) -> Self {
        TimeReversed { inner, span }
    }
}

impl ScalarField for TimeReversed {
    fn space(&self) -> Space {
        self.inner.space()
    }

    fn eval(&self, t: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        let v = self.inner.eval(self.span - t, p, grad);
        grad.iter_mut().for_each(|g| *g = -*g);
        -v
    }

    fn support(&self) -> Support {
        self.inner.support()
    }

    fn is_autonomous(&self) -> bool {
        self.inner.is_autonomous()
    }

    fn reeb_invariant(&self) -> bool {
        self.inner.reeb_invariant()
    }
}

/// Lift of a base field to a contact space: `H^(q, z) = H(q)`.
#[derive(Debug, Clone)]
pub struct BasePullback {
    base: Field,
    target: Space,
}

impl BasePullback {
    pub fn new(base: Field, target: Space) -> Result<Self> {
        if base.space() != target.base() || !target.is_contact() {
            return Err(Error::InvalidParameter(format!(
                "cannot pull a field on {} back to {target}",
                base.space()
            )));
        }
        Ok(BasePullback { base, target })
    }
}

impl ScalarField for BasePullback {
    fn space(&self) -> Space {
        self.target
    }

    fn eval(&self, t: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        let m = 2 * self.target.n();
        let v = self.base.eval(t, &p[..m], &mut grad[..m]);
        grad[m] = 0.0;
        v
    }

    fn support(&self) -> Support {
        match self.base.support() {
            Support::Unbounded => Support::Unbounded,
            Support::Compact(boxes) => Support::Compact(
                boxes
                    .into_iter()
                    .map(|b| {
                        let mut lo = b.lo;
                        let mut hi = b.hi;
                        lo.push(f64::NEG_INFINITY);
                        hi.push(f64::INFINITY);
                        let mut out = AxisBox::new(lo, hi);
                        out.fix_circle(self.target);
                        out
                    })
                    .collect(),
            ),
        }
    }

    fn is_autonomous(&self) -> bool {
        self.base.is_autonomous()
    }
}

/// Smooth radial cutoff equal to 1 on `B(r_inner)` and 0 outside `B(r_outer)`.
pub fn bump(space: Space, r_inner: f64, r_outer: f64) -> Result<Field> {
    Ok(Arc::new(RadialBump::new(
        space,
        vec![0.0; space.dimension()],
        1.0,
        r_inner,
        r_outer,
        Radial::Full,
    )?))
}

/// `F(|q|)` with `F(0) = a`, `F` nonincreasing in `|a|`, compactly supported, and
/// `|F'(r)| < 2 pi r` so that no non-constant orbit of period `<= 1` exists.
pub fn radial_profile(space: Space, a: f64, plateau_radius: f64, support_radius: f64) -> Result<Field> {
    if space != space.base() {
        return Err(Error::InvalidParameter(
            "radial profiles live on the symplectic base".into(),
        ));
    }
    let b = RadialBump::new(
        space,
        vec![0.0; space.dimension()],
        a,
        plateau_radius,
        support_radius,
        Radial::Full,
    )?;
    let bound = b.slope_ratio_bound();
    if bound >= 2.0 * PI {
        return Err(Error::InvalidParameter(format!(
            "slope bound violated: sup |F'(r)|/r <= {bound:.3} is not below 2 pi"
        )));
    }
    Ok(Arc::new(b))
}

/// Constant `height` on the tube of radius `plateau_radius` around `center` (base coordinates).
pub fn rotation_plateau(
    space: Space,
    height: f64,
    center: &[f64],
    plateau_radius: f64,
    support_radius: f64,
) -> Result<Field> {
    if center.len() != 2 * space.n() {
        return Err(Error::InvalidParameter("plateau center is a base point".into()));
    }
    let mut c = center.to_vec();
    c.resize(space.dimension(), 0.0);
    Ok(Arc::new(RadialBump::new(
        space,
        c,
        height,
        plateau_radius,
        support_radius,
        Radial::Base,
    )?))
}

/// Cut-off generator of the `x_1`-translation by `shift` in unit time: `-shift * y_1`
/// times a cutoff equal to 1 on the ball of radius `plateau_radius + |shift|`.
///
/// Works on every space: the translation is contact (`T^* alpha_0 = alpha_0`)
/// and Hamiltonian on the base.
pub fn translation_generator(
    space: Space,
    shift: f64,
    plateau_radius: f64,
    support_radius: f64,
) -> Result<Field> {
    let inner = plateau_radius + shift.abs();
    if !(plateau_radius > 0.0 && inner < support_radius) {
        return Err(Error::InvalidParameter(format!(
            "translation by {shift} on B({plateau_radius}) needs support radius > {inner}"
        )));
    }
    let n = space.n();
    let mut w = vec![0.0; space.dimension()];
    w[n] = -shift;
    let gen: Field = Arc::new(Affine::new(space, 0.0, w)?);
    let cut: Field = Arc::new(RadialBump::new(
        space,
        vec![0.0; space.dimension()],
        1.0,
        inner,
        support_radius,
        Radial::Full,
    )?);
    Ok(Arc::new(Product(cut, gen)))
}

/// Scaling generator cut off to `B(r_outer)`, equal to the pure generator on `B(r_inner)`.
pub fn scaling_generator(
    space: Space,
    a: f64,
    path: ScalingPath,
    r_inner: f64,
    r_outer: f64,
) -> Result<Field> {
    let gen: Field = Arc::new(ScalingGenerator::new(space, a, path)?);
    let cut = bump(space, r_inner, r_outer)?;
    Ok(Arc::new(Product(cut, gen)))
}

/// Cutoff equal to 1 on `inner` and 0 outside `outer`: generates a Reeb push on `inner`.
pub fn reeb_box_generator(space: Space, inner: AxisBox, outer: AxisBox) -> Result<Field> {
    space.ensure_contact()?;
    Ok(Arc::new(BoxCutoff::new(space, inner, outer)?))
}

/// A vector field with an attached conformal rate.
pub trait VectorField: Send + Sync + fmt::Debug {
    fn space(&self) -> Space;

    /// Writes the velocity at `(t, p)` into `out` and returns
    /// `d/dt log(conformal factor)` along the flow (0 for symplectic fields).
    fn eval(&self, t: f64, p: &[f64], out: &mut [f64]) -> f64;

    fn support(&self) -> Support;

    fn is_autonomous(&self) -> bool;

    fn reeb_invariant(&self) -> bool;

    fn tangent(&self, t: f64, p: &Point) -> TangentVector {
        let mut v = vec![0.0; p.space().dimension()];
        self.eval(t, p.coords(), &mut v);
        TangentVector {
            base: p.clone(),
            components: v,
        }
    }
}

pub type Flow = Arc<dyn VectorField>;

/// `X_H` for the contact form `alpha_0`.
#[derive(Debug, Clone)]
pub struct ContactField {
    pub hamiltonian: Field,
}

impl VectorField for ContactField {
    fn space(&self) -> Space {
        self.hamiltonian.space()
    }

    fn eval(&self, t: f64, p: &[f64], out: &mut [f64]) -> f64 {
        let d = p.len();
        let n = (d - 1) / 2;
        let mut g = [0.0; MAX_DIM];
        let h = self.hamiltonian.eval(t, p, &mut g[..d]);
        let hz = g[2 * n];
        let mut ydhy = 0.0;
        for i in 0..n {
            let y = p[n + i];
            out[i] = -g[n + i];
            out[n + i] = g[i] + y * hz;
            ydhy += y * g[n + i];
        }
        out[2 * n] = h - ydhy;
        hz
    }

    fn support(&self) -> Support {
        self.hamiltonian.support()
    }

    fn is_autonomous(&self) -> bool {
        self.hamiltonian.is_autonomous()
    }

    fn reeb_invariant(&self) -> bool {
        self.hamiltonian.reeb_invariant()
    }
}

/// `X_H` with `omega_0(X_H, .) = -dH`.
#[derive(Debug, Clone)]
pub struct SymplecticField {
    pub hamiltonian: Field,
}

impl VectorField for SymplecticField {
    fn space(&self) -> Space {
        self.hamiltonian.space()
    }

    fn eval(&self, t: f64, p: &[f64], out: &mut [f64]) -> f64 {
        let d = p.len();
        let n = d / 2;
        let mut g = [0.0; MAX_DIM];
        self.hamiltonian.eval(t, p, &mut g[..d]);
        for i in 0..n {
            out[i] = -g[n + i];
            out[n + i] = g[i];
        }
        0.0
    }

    fn support(&self) -> Support {
        self.hamiltonian.support()
    }

    fn is_autonomous(&self) -> bool {
        self.hamiltonian.is_autonomous()
    }

    fn reeb_invariant(&self) -> bool {
        true
    }
}

/// The path `t -> phi_{t^2}` of a flow, generated by `2t X_{t^2}`.
#[derive(Debug, Clone)]
pub struct SquareTime(pub Flow);

impl VectorField for SquareTime {
    fn space(&self) -> Space {
        self.0.space()
    }

    fn eval(&self, t: f64, p: &[f64], out: &mut [f64]) -> f64 {
        let r = self.0.eval(t * t, p, out);
        out.iter_mut().for_each(|v| *v *= 2.0 * t);
        2.0 * t * r
    }

    fn support(&self) -> Support {
        self.0.support()
    }

    fn is_autonomous(&self) -> bool {
        false
    }

    fn reeb_invariant(&self) -> bool {
        self.0.reeb_invariant()
    }
}

pub fn contact_vector_field(h: Field) -> Result<Flow> {
    h.space().ensure_contact()?;
    if h.space().dimension() > MAX_DIM {
        return Err(Error::InvalidParameter("dimension too large".into()));
    }
    Ok(Arc::new(ContactField { hamiltonian: h }))
}

pub fn symplectic_vector_field(h: Field) -> Result<Flow> {
    if h.space().is_contact() {
        return Err(Error::InvalidParameter(format!(
            "symplectic fields need a base space, got {}",
            h.space()
        )));
    }
    if h.space().dimension() > MAX_DIM {
        return Err(Error::InvalidParameter("dimension too large".into()));
    }
    Ok(Arc::new(SymplecticField { hamiltonian: h }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{FormId, OneForm};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_gradient(f: &dyn ScalarField, t: f64, p: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..p.len())
            .map(|k| {
                let mut a = p.to_vec();
                let mut b = p.to_vec();
                a[k] += h;
                b[k] -= h;
                (f.value(t, &a) - f.value(t, &b)) / (2.0 * h)
            })
            .collect()
    }

    fn sample_fields() -> Vec<Field> {
        let e = Space::EuclideanContact(1);
        let pq = Space::Prequantized(1);
        let b2 = Space::SymplecticBase(1);
        let sq: Field = Arc::new(
            RadialBump::new(e, vec![0.0; 3], 1.0, 0.1, 0.4, Radial::Full).unwrap(),
        );
        let sq = Arc::new(Product(
            sq,
            Arc::new(ScalingGenerator::new(e, 0.6, ScalingPath::Exponential).unwrap()),
        ));
        let base_bump: Field = Arc::new(
            RadialBump::new(pq, vec![0.2, -0.1, 0.0], 0.3, 0.2, 0.9, Radial::Base).unwrap(),
        );
        vec![
            bump(e, 0.5, 1.5).unwrap(),
            radial_profile(b2, 0.3, 0.6, 1.6).unwrap(),
            rotation_plateau(pq, 0.2, &[0.5, 0.0], 0.3, 1.0).unwrap(),
            translation_generator(e, 0.7, 1.0, 3.0).unwrap(),
            scaling_generator(e, 0.5, ScalingPath::Linear, 0.8, 1.6).unwrap(),
            reeb_box_generator(
                e,
                AxisBox::new(vec![-0.5, -1.0, -1.0], vec![0.5, 1.0, 1.0]),
                AxisBox::new(vec![-0.8, -1.5, -2.0], vec![0.8, 1.5, 2.0]),
            )
            .unwrap(),
            Arc::new(CircleModulated::new(base_bump, [0.1, 0.2, -0.15]).unwrap()),
            Arc::new(Transported::new(sq, pq, vec![0.3, -0.2, 0.7]).unwrap()),
        ]
    }

    fn random_point(rng: &mut ChaCha8Rng, d: usize, r: f64) -> Vec<f64> {
        (0..d).map(|_| rng.random_range(-r..r)).collect()
    }

    #[test]
    fn smooth_step_slope_peaks_at_two() {
        let m = (1..10_000)
            .map(|k| smooth_step(k as f64 / 10_000.0).1)
            .fold(0.0, f64::max);
        assert!((m - SMOOTH_STEP_MAX_SLOPE).abs() < 1e-6);
        let (_, d1, d2) = smooth_step(0.3);
        let h = 1e-6;
        let fd = (smooth_step(0.3 + h).1 - smooth_step(0.3 - h).1) / (2.0 * h);
        assert_relative_eq!(d2, fd, epsilon = 1e-6);
        assert!(d1 > 0.0);
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for f in sample_fields() {
            let d = f.space().dimension();
            for _ in 0..500 {
                let p = random_point(&mut rng, d, 2.0);
                let t = rng.random_range(0.0..1.0);
                let mut g = vec![0.0; d];
                f.eval(t, &p, &mut g);
                let fd = fd_gradient(f.as_ref(), t, &p);
                for k in 0..d {
                    assert!(
                        (g[k] - fd[k]).abs() <= 1e-5 * (1.0 + g[k].abs()),
                        "{f:?} at {p:?}: analytic {g:?} vs fd {fd:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn fields_vanish_outside_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for f in sample_fields() {
            let s = f.space();
            let sup = f.support();
            let d = s.dimension();
            for _ in 0..2000 {
                let p = random_point(&mut rng, d, 5.0);
                if sup.contains(s, &p) {
                    continue;
                }
                let mut g = vec![0.0; d];
                assert_eq!(f.eval(0.3, &p, &mut g), 0.0, "{f:?} at {p:?}");
                assert!(g.iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn bump_basics() {
        let s = Space::EuclideanContact(1);
        let b = bump(s, 1.0, 2.0).unwrap();
        assert_eq!(b.value(0.0, &[0.0, 0.0, 0.0]), 1.0);
        assert_eq!(b.value(0.0, &[3.0, 0.0, 0.0]), 0.0);
        let mut last = 1.0;
        for k in 0..1000 {
            let r = 2.5 * k as f64 / 1000.0;
            let v = b.value(0.0, &[r, 0.0, 0.0]);
            assert!(v <= last && (0.0..=1.0).contains(&v));
            last = v;
        }
        assert!(bump(s, 2.0, 1.0).is_err());
        assert!(bump(s, 1.0, 1.0).is_err());
    }

    #[test]
    fn named_family_values() {
        let b2 = Space::SymplecticBase(1);
        let f = radial_profile(b2, 0.3, 0.5, 1.5).unwrap();
        assert_eq!(f.value(0.0, &[0.0, 0.0]), 0.3);
        let pq = Space::Prequantized(1);
        let g = rotation_plateau(pq, 1.0 / 5.0, &[0.4, 0.0], 0.25, 0.8).unwrap();
        assert_relative_eq!(g.value(0.0, &[0.5, 0.1, 0.77]), 0.2);
        // slope bound: a / (width * plateau) too steep
        assert!(radial_profile(b2, 5.0, 0.2, 0.5).is_err());
        assert!(radial_profile(b2, 0.3, 0.0, 1.0).is_err());
        assert!(translation_generator(b2, 1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn constant_hamiltonian_gives_reeb_field() {
        let s = Space::EuclideanContact(2);
        let x = contact_vector_field(Arc::new(Affine::constant(s, 1.0))).unwrap();
        let mut out = vec![0.0; 5];
        let rate = x.eval(0.0, &[0.3, -1.0, 2.0, 0.5, 9.0], &mut out);
        assert_eq!(out, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn half_plateau_gives_half_speed_reeb() {
        let pq = Space::Prequantized(1);
        let h = rotation_plateau(pq, 0.5, &[0.0, 0.0], 1.0, 2.0).unwrap();
        let x = contact_vector_field(h).unwrap();
        let mut out = vec![0.0; 3];
        x.eval(0.0, &[0.3, 0.2, 0.9], &mut out);
        assert_eq!(out, vec![0.0, 0.0, 0.5]);
    }

    // The linear scaling path q -> (s q_x, s q_y, s^2 q_z), s = 1 + (a - 1) t,
    // has velocity (s'/s)(X, Y, 2Z) at the current point; its alpha_0-value
    // must equal the Hamiltonian and the contact field must equal the velocity.
    #[test]
    fn scaling_generator_matches_analytic_velocity() {
        let s = Space::EuclideanContact(1);
        let a = 0.4;
        let h = ScalingGenerator::new(s, a, ScalingPath::Linear).unwrap();
        let x = contact_vector_field(Arc::new(h.clone())).unwrap();
        let alpha = OneForm::alpha0(s);
        for &(t, q) in &[(0.0, [0.3, -0.2, 0.5]), (0.7, [1.0, 2.0, -1.0]), (0.95, [-0.1, 0.4, 0.2])] {
            let sc = 1.0 + (a - 1.0) * t;
            let p = [sc * q[0], sc * q[1], sc * sc * q[2]];
            let ds = a - 1.0;
            let vel = [ds * q[0], ds * q[1], 2.0 * sc * ds * q[2]];
            let mut cov = [0.0; 3];
            alpha.covector(&p, &mut cov);
            let a_vel: f64 = cov.iter().zip(&vel).map(|(c, v)| c * v).sum();
            assert_relative_eq!(a_vel, h.value(t, &p), epsilon = 1e-12);
            let mut out = [0.0; 3];
            x.eval(t, &p, &mut out);
            for k in 0..3 {
                assert_relative_eq!(out[k], vel[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn quadratic_gives_unit_period_rotation() {
        let b2 = Space::SymplecticBase(1);
        let x = symplectic_vector_field(Arc::new(Quadratic::rotation(b2))).unwrap();
        let mut out = [0.0; 2];
        x.eval(0.0, &[1.0, 0.0], &mut out);
        assert_relative_eq!(out[0], 0.0);
        assert_relative_eq!(out[1], 2.0 * PI);
        // omega(X, v) = -dH(v), checked by differences of H on a grid
        let h = Quadratic::rotation(b2);
        for i in -5..=5 {
            for j in -5..=5 {
                let p = [0.3 * i as f64, 0.3 * j as f64];
                x.eval(0.0, &p, &mut out);
                let fd = fd_gradient(&h, 0.0, &p);
                // omega(X, e_x) = -X^y, omega(X, e_y) = X^x
                assert!((-out[1] + fd[0]).abs() < 1e-6);
                assert!((out[0] + fd[1]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn radial_rotation_speed_matches_profile() {
        let b2 = Space::SymplecticBase(1);
        let bump = RadialBump::new(b2, vec![0.0, 0.0], 0.3, 0.5, 1.5, Radial::Full).unwrap();
        let x = symplectic_vector_field(Arc::new(bump.clone())).unwrap();
        let r: f64 = 0.9;
        let p = [r * 0.6, r * 0.8];
        let mut out = [0.0; 2];
        x.eval(0.0, &p, &mut out);
        // velocity is tangent to the circle with speed |F'(r)|
        let speed = (out[0] * out[0] + out[1] * out[1]).sqrt();
        assert_relative_eq!(speed, bump.profile(r).1.abs(), epsilon = 1e-12);
        assert!((out[0] * p[0] + out[1] * p[1]).abs() < 1e-14);
    }

    #[test]
    fn wrong_space_kinds_are_rejected() {
        let b2 = Space::SymplecticBase(1);
        let e = Space::EuclideanContact(1);
        assert!(contact_vector_field(Arc::new(Affine::constant(b2, 1.0))).is_err());
        assert!(symplectic_vector_field(Arc::new(Affine::constant(e, 1.0))).is_err());
        assert!(ScalingGenerator::new(Space::Prequantized(1), 0.5, ScalingPath::Linear).is_err());
    }

    /// Defining system: alpha(X) = H and d alpha(X, v) = dH(R) alpha(v) - dH(v).
    #[test]
    fn contact_field_solves_defining_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let fields = sample_fields();
        let mut count = 0;
        while count < 10_000 {
            for f in fields.iter().filter(|f| f.space().is_contact()) {
                let s = f.space();
                let d = s.dimension();
                let x = contact_vector_field(f.clone()).unwrap();
                let p = random_point(&mut rng, d, 1.5);
                let v = random_point(&mut rng, d, 1.0);
                let t = rng.random_range(0.0..1.0);
                let mut xv = vec![0.0; d];
                x.eval(t, &p, &mut xv);
                let mut g = vec![0.0; d];
                let h = f.eval(t, &p, &mut g);
                let alpha = OneForm::new(FormId::Alpha0, s).unwrap();
                let mut cov = vec![0.0; d];
                alpha.covector(&p, &mut cov);
                let ax: f64 = cov.iter().zip(&xv).map(|(a, b)| a * b).sum();
                assert!((ax - h).abs() < 1e-8);
                let av: f64 = cov.iter().zip(&v).map(|(a, b)| a * b).sum();
                let dh_v: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
                let rhs = g[d - 1] * av - dh_v;
                let lhs = alpha.exterior_derivative(&xv, &v);
                assert!((lhs - rhs).abs() < 1e-6 * (1.0 + rhs.abs()));
                count += 1;
            }
        }
    }

    #[test]
    fn symplectic_field_solves_defining_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b2 = Space::SymplecticBase(2);
        let f: Field = Arc::new(
            RadialBump::new(b2, vec![0.1, 0.0, -0.2, 0.3], 0.4, 0.3, 1.2, Radial::Full).unwrap(),
        );
        let x = symplectic_vector_field(f.clone()).unwrap();
        let omega = OneForm::new(FormId::Lambda0, b2).unwrap();
        for _ in 0..5000 {
            let p = random_point(&mut rng, 4, 1.3);
            let v = random_point(&mut rng, 4, 1.0);
            let mut xv = vec![0.0; 4];
            x.eval(0.0, &p, &mut xv);
            let mut g = vec![0.0; 4];
            f.eval(0.0, &p, &mut g);
            let dh_v: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((omega.exterior_derivative(&xv, &v) + dh_v).abs() < 1e-8);
        }
    }
}
