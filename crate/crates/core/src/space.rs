//! Ambient spaces, points, the standard one-forms and the product metric.
//!
//! Coordinates are ordered `(x_1..x_n, y_1..y_n, z)`. On the prequantized
//! space `R^{2n} x S^1` the last coordinate is a circle coordinate of
//! length 1 and every [`Point`] keeps it in `[0, 1)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    /// `R^{2n+1}` with `dz - sum y_i dx_i`.
    EuclideanContact(usize),
    /// `R^{2n} x S^1`, last coordinate taken mod 1.
    Prequantized(usize),
    /// `R^{2n}` with `omega_0 = sum dx_i ^ dy_i`.
    SymplecticBase(usize),
}

impl Space {
    /// Half the dimension of the symplectic part.
    pub fn n(&self) -> usize {
        match *self {
            Space::EuclideanContact(n) | Space::Prequantized(n) | Space::SymplecticBase(n) => n,
        }
    }

    pub fn dimension(&self) -> usize {
        match *self {
            Space::EuclideanContact(n) | Space::Prequantized(n) => 2 * n + 1,
            Space::SymplecticBase(n) => 2 * n,
        }
    }

    pub fn is_contact(&self) -> bool {
        !matches!(self, Space::SymplecticBase(_))
    }

    pub fn is_prequantized(&self) -> bool {
        matches!(self, Space::Prequantized(_))
    }

    /// Index of the Reeb coordinate `z`, if any.
    pub fn z_index(&self) -> Option<usize> {
        match *self {
            Space::EuclideanContact(n) | Space::Prequantized(n) => Some(2 * n),
            Space::SymplecticBase(_) => None,
        }
    }

    /// The symplectic base `R^{2n}` underneath a contact space.
    pub fn base(&self) -> Space {
        Space::SymplecticBase(self.n())
    }

    pub fn ensure_same(&self, other: Space) -> Result<()> {
        if *self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                expected: *self,
                found: other,
            })
        }
    }

    pub fn ensure_contact(&self) -> Result<()> {
        if self.is_contact() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{self} is not a contact space"
            )))
        }
    }

    /// Reduce coordinates in place to the canonical representative.
    pub fn canonicalize(&self, coords: &mut [f64]) {
        if let Space::Prequantized(n) = *self {
            coords[2 * n] = wrap_unit(coords[2 * n]);
        }
    }

    /// Distance between two coordinate vectors in this space (no checks).
    pub fn distance_raw(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Space::Prequantized(n) => {
                let base: f64 = a[..2 * n]
                    .iter()
                    .zip(&b[..2 * n])
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum();
                let c = circle_distance(a[2 * n], b[2 * n]);
                (base + c * c).sqrt()
            }
            _ => a
                .iter()
                .zip(b)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Space::EuclideanContact(n) => write!(f, "R^{}", 2 * n + 1),
            Space::Prequantized(n) => write!(f, "R^{} x S^1", 2 * n),
            Space::SymplecticBase(n) => write!(f, "R^{}", 2 * n),
        }
    }
}

/// Reduce a real number to `[0, 1)`.
pub fn wrap_unit(z: f64) -> f64 {
    let w = z - z.floor();
    // -1e-17 floors to -1 and lands exactly on 1.0
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Signed circle displacement from `from` to `to`, in `(-1/2, 1/2]`.
pub fn circle_displacement(from: f64, to: f64) -> f64 {
    let d = wrap_unit(to - from);
    if d > 0.5 {
        d - 1.0
    } else {
        d
    }
}

/// Flat distance on `R/Z`: `min(|dz|, 1 - |dz|)` after reduction.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    let d = d - d.floor();
    d.min(1.0 - d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    space: Space,
    coords: Vec<f64>,
}

impl Point {
    pub fn new(space: Space, mut coords: Vec<f64>) -> Result<Self> {
        if coords.len() != space.dimension() {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates given for {space} of dimension {}",
                coords.len(),
                space.dimension()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate".into()));
        }
        space.canonicalize(&mut coords);
        Ok(Point { space, coords })
    }

    pub fn origin(space: Space) -> Self {
        Point {
            space,
            coords: vec![0.0; space.dimension()],
        }
    }

    /// Build from `x`, `y` and (for contact spaces) `z` blocks.
    pub fn from_parts(space: Space, x: &[f64], y: &[f64], z: Option<f64>) -> Result<Self> {
        let mut c = Vec::with_capacity(space.dimension());
        c.extend_from_slice(x);
        c.extend_from_slice(y);
        if let Some(z) = z {
            c.push(z);
        }
        Point::new(space, c)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn x(&self) -> &[f64] {
        &self.coords[..self.space.n()]
    }

    pub fn y(&self) -> &[f64] {
        let n = self.space.n();
        &self.coords[n..2 * n]
    }

    pub fn z(&self) -> Option<f64> {
        self.space.z_index().map(|i| self.coords[i])
    }

    /// The `(x, y)` block, i.e. the projection to the symplectic base.
    pub fn base(&self) -> Point {
        let n = self.space.n();
        Point {
            space: Space::SymplecticBase(n),
            coords: self.coords[..2 * n].to_vec(),
        }
    }

    /// Euclidean norm of the coordinate vector (z taken as stored).
    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// A tangent vector at a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: Point,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Point, components: Vec<f64>) -> Result<Self> {
        if components.len() != base.space().dimension() {
            return Err(Error::InvalidParameter(format!(
                "tangent vector of length {} at a point of {}",
                components.len(),
                base.space()
            )));
        }
        Ok(TangentVector { base, components })
    }

    /// The coordinate vector field `d/dc_k` at `base`.
    pub fn coordinate(base: Point, k: usize) -> Self {
        let mut components = vec![0.0; base.space().dimension()];
        components[k] = 1.0;
        TangentVector { base, components }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormId {
    /// `dz - sum y_i dx_i`
    Alpha0,
    /// `dz + 1/2 sum (x_i dy_i - y_i dx_i)`
    Alpha0Prime,
    /// `-sum y_i dx_i`
    Lambda0,
    /// `dz` (the angular form on the circle factor)
    DTheta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneForm {
    pub id: FormId,
    pub space: Space,
}

impl OneForm {
    pub fn new(id: FormId, space: Space) -> Result<Self> {
        match id {
            FormId::Alpha0 | FormId::Alpha0Prime | FormId::DTheta => space.ensure_contact()?,
            FormId::Lambda0 => {}
        }
        Ok(OneForm { id, space })
    }

    pub fn alpha0(space: Space) -> Self {
        OneForm {
            id: FormId::Alpha0,
            space,
        }
    }

    /// Covector components of the form at `coords` (no checks).
    pub fn covector(&self, coords: &[f64], out: &mut [f64]) {
        let n = self.space.n();
        out.iter_mut().for_each(|c| *c = 0.0);
        match self.id {
            FormId::Alpha0 => {
                for i in 0..n {
                    out[i] = -coords[n + i];
                }
                out[2 * n] = 1.0;
            }
            FormId::Alpha0Prime => {
                for i in 0..n {
                    out[i] = -0.5 * coords[n + i];
                    out[n + i] = 0.5 * coords[i];
                }
                out[2 * n] = 1.0;
            }
            FormId::Lambda0 => {
                for i in 0..n {
                    out[i] = -coords[n + i];
                }
            }
            FormId::DTheta => out[2 * n] = 1.0,
        }
    }

    /// `d(form)(u, v)` at any point; all four forms have constant exterior derivative.
    pub fn exterior_derivative(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.space.n();
        match self.id {
            // d(-y dx) = dx ^ dy
            FormId::Alpha0 | FormId::Lambda0 | FormId::Alpha0Prime => (0..n)
                .map(|i| u[i] * v[n + i] - u[n + i] * v[i])
                .sum(),
            FormId::DTheta => 0.0,
        }
    }
}

/// Pair a one-form with a tangent vector in closed form.
pub fn eval_form(form: &OneForm, v: &TangentVector) -> Result<f64> {
    form.space.ensure_same(v.base.space())?;
    let mut cov = vec![0.0; form.space.dimension()];
    form.covector(v.base.coords(), &mut cov);
    Ok(cov.iter().zip(&v.components).map(|(a, b)| a * b).sum())
}

/// Euclidean distance, or the product of the Euclidean and flat circle metric.
pub fn ambient_distance(p: &Point, q: &Point) -> Result<f64> {
    p.space.ensure_same(q.space)?;
    Ok(p.space.distance_raw(&p.coords, &q.coords))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p3(x: f64, y: f64, z: f64) -> Point {
        Point::new(Space::EuclideanContact(1), vec![x, y, z]).unwrap()
    }

    #[test]
    fn alpha0_on_reeb_direction_is_one() {
        let p = p3(0.3, -2.0, 5.0);
        let v = TangentVector::coordinate(p, 2);
        let a = OneForm::alpha0(Space::EuclideanContact(1));
        assert_eq!(eval_form(&a, &v).unwrap(), 1.0);
    }

    #[test]
    fn alpha0_on_dx_picks_minus_y() {
        let s = Space::EuclideanContact(2);
        let p = Point::new(s, vec![0.0, 0.0, 3.0, 0.0, 0.0]).unwrap();
        let v = TangentVector::coordinate(p, 0);
        assert_eq!(eval_form(&OneForm::alpha0(s), &v).unwrap(), -3.0);
    }

    #[test]
    fn lambda0_has_no_dy_part() {
        let s = Space::SymplecticBase(1);
        let p = Point::new(s, vec![1.0, 7.0]).unwrap();
        let v = TangentVector::coordinate(p, 1);
        let l = OneForm::new(FormId::Lambda0, s).unwrap();
        assert_eq!(eval_form(&l, &v).unwrap(), 0.0);
    }

    #[test]
    fn space_mismatch_is_rejected() {
        let p = p3(0.0, 0.0, 0.0);
        let v = TangentVector::coordinate(p, 0);
        let a = OneForm::alpha0(Space::Prequantized(1));
        assert!(matches!(
            eval_form(&a, &v),
            Err(Error::SpaceMismatch { .. })
        ));
        let q = Point::origin(Space::Prequantized(1));
        assert!(ambient_distance(&p3(0.0, 0.0, 0.0), &q).is_err());
        assert!(OneForm::new(FormId::Alpha0, Space::SymplecticBase(1)).is_err());
    }

    #[test]
    fn circle_distance_wraps() {
        let s = Space::Prequantized(1);
        let p = Point::new(s, vec![1.0, 2.0, 0.1]).unwrap();
        let q = Point::new(s, vec![1.0, 2.0, 0.9]).unwrap();
        assert_relative_eq!(ambient_distance(&p, &q).unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(ambient_distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn product_metric_combines_components() {
        let s = Space::Prequantized(1);
        let p = Point::new(s, vec![0.0, 0.0, 0.05]).unwrap();
        let q = Point::new(s, vec![3.0, 0.0, 0.65]).unwrap();
        assert_relative_eq!(
            ambient_distance(&p, &q).unwrap(),
            (9.0f64 + 0.16).sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn circle_displacement_examples() {
        assert_relative_eq!(circle_displacement(0.1, 0.3), 0.2, epsilon = 1e-15);
        assert_relative_eq!(circle_displacement(0.9, 0.1), 0.2, epsilon = 1e-15);
        assert_eq!(circle_displacement(0.0, 0.5), 0.5);
    }

    #[test]
    fn prequantized_points_are_wrapped() {
        let s = Space::Prequantized(1);
        let p = Point::new(s, vec![0.0, 0.0, -0.25]).unwrap();
        assert_relative_eq!(p.z().unwrap(), 0.75);
        let q = Point::new(s, vec![0.0, 0.0, 3.0]).unwrap();
        assert_eq!(q.z().unwrap(), 0.0);
        assert!(Point::new(s, vec![0.0, 0.0]).is_err());
        assert_eq!(wrap_unit(-1e-18), 0.0);
    }

    fn form_ids() -> impl Strategy<Value = FormId> {
        prop_oneof![
            Just(FormId::Alpha0),
            Just(FormId::Alpha0Prime),
            Just(FormId::Lambda0),
            Just(FormId::DTheta),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        // d(alpha)(u, v) = u(alpha(v)) - v(alpha(u)) for constant fields u, v;
        // the left side is closed form, the right side is a finite difference of eval_form.
        #[test]
        fn eval_form_matches_exterior_derivative_by_differences(
            id in form_ids(),
            n in 1usize..3,
            seed in prop::collection::vec(-3.0f64..3.0, 15),
        ) {
            let s = Space::EuclideanContact(n);
            let d = s.dimension();
            let form = OneForm { id, space: s };
            let p = &seed[..d];
            let u = &seed[5..5 + d];
            let v = &seed[10..10 + d];
            let pair = |at: &[f64], w: &[f64]| {
                let base = Point::new(s, at.to_vec()).unwrap();
                eval_form(&form, &TangentVector::new(base, w.to_vec()).unwrap()).unwrap()
            };
            let h = 1e-4;
            let shift = |dir: &[f64], sgn: f64| -> Vec<f64> {
                p.iter().zip(dir).map(|(a, b)| a + sgn * h * b).collect()
            };
            let du_av = (pair(&shift(u, 1.0), v) - pair(&shift(u, -1.0), v)) / (2.0 * h);
            let dv_au = (pair(&shift(v, 1.0), u) - pair(&shift(v, -1.0), u)) / (2.0 * h);
            let fd = du_av - dv_au;
            let exact = form.exterior_derivative(u, v);
            prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()));
        }

        #[test]
        fn distance_is_a_metric(
            a in prop::collection::vec(-2.0f64..2.0, 3),
            b in prop::collection::vec(-2.0f64..2.0, 3),
            c in prop::collection::vec(-2.0f64..2.0, 3),
        ) {
            let s = Space::Prequantized(1);
            let (a, b, c) = (
                Point::new(s, a).unwrap(),
                Point::new(s, b).unwrap(),
                Point::new(s, c).unwrap(),
            );
            let ab = ambient_distance(&a, &b).unwrap();
            prop_assert_eq!(ab, ambient_distance(&b, &a).unwrap());
            let ac = ambient_distance(&a, &c).unwrap();
            let cb = ambient_distance(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-12);
        }

        #[test]
        fn signed_displacement_convention(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let s = circle_displacement(a, b) + circle_displacement(b, a);
            prop_assert!(s.abs() < 1e-12 || (s - 1.0).abs() < 1e-12);
            let d = circle_displacement(a, b);
            prop_assert!(d > -0.5 && d <= 0.5);
        }
    }
}
