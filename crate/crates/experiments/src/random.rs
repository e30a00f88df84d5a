//! Seeded generators of compactly supported Hamiltonians and contactomorphisms.
//!
//! Every random map is a flow (or composite of flows) of a finite sum of
//! named generators with bounded coefficients.

use std::ops::Range;
use std::sync::Arc;

use contactkit::constructions::{cutoff_translation, squeeze_at};
use contactkit::fields::{contact_vector_field, CircleModulated, Field, Radial, RadialBump, Sum};
use contactkit::flow::{compose, FlowMap, Tolerance};
use contactkit::lifts::{lift, HamiltonianFlow};
use contactkit::Space;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for sample `index` of an experiment.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index + 1);
    r
}

fn point<R: Rng>(rng: &mut R, dim: usize, half: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-half..half)).collect()
}

/// Transition widths of the random bumps: steep enough to move points, and a
/// wider range for maps that must stay C0-small.
pub const STEEP: Range<f64> = 0.3..0.6;
pub const GENTLE: Range<f64> = 0.7..1.1;

/// Sum of one to three radial bumps on `R^{2n}` with `|height| <= max_height`.
pub fn base_hamiltonian<R: Rng>(rng: &mut R, n: usize, max_height: f64, widths: Range<f64>) -> Result<Field> {
    let space = Space::SymplecticBase(n);
    let count = rng.random_range(1..=3);
    let mut terms: Vec<Field> = Vec::with_capacity(count);
    for _ in 0..count {
        let r_in = rng.random_range(0.15..0.3);
        let r_out = r_in + rng.random_range(widths.clone());
        terms.push(Arc::new(RadialBump::new(
            space,
            point(rng, 2 * n, 0.6),
            rng.random_range(-max_height..max_height),
            r_in,
            r_out,
            Radial::Full,
        )?));
    }
    Ok(Arc::new(Sum(terms)))
}

/// Radial bump on the base times `c0 + c1 sin 2 pi z + c2 cos 2 pi z`.
pub fn circle_hamiltonian<R: Rng>(rng: &mut R, n: usize, scale: f64, widths: Range<f64>) -> Result<Field> {
    let space = Space::Prequantized(n);
    let r_in = rng.random_range(0.15..0.3);
    let r_out = r_in + rng.random_range(widths);
    let mut center = point(rng, 2 * n, 0.5);
    center.push(0.0);
    let bump: Field = Arc::new(RadialBump::new(space, center, 1.0, r_in, r_out, Radial::Base)?);
    let c = [
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale) * 0.5,
        rng.random_range(-scale..scale) * 0.5,
    ];
    Ok(Arc::new(CircleModulated::new(bump, c)?))
}

pub fn random_lift<R: Rng>(rng: &mut R, n: usize, max_height: f64, widths: Range<f64>, tol: Tolerance) -> Result<FlowMap> {
    let h = base_hamiltonian(rng, n, max_height, widths)?;
    Ok(lift(&HamiltonianFlow::new(h, 1.0, tol)?))
}

pub fn random_circle_flow<R: Rng>(
    rng: &mut R,
    n: usize,
    scale: f64,
    widths: Range<f64>,
    tol: Tolerance,
) -> Result<FlowMap> {
    let h = circle_hamiltonian(rng, n, scale, widths)?;
    Ok(FlowMap::flow(contact_vector_field(h)?, 1.0, tol).with_label("circle-flow"))
}

/// A compactly supported contactomorphism of `R^{2n} x S^1`: a composite of one
/// to three lifts, circle-bundle squeezes, cut-off translations and
/// circle-dependent flows.
pub fn random_conjugator<R: Rng>(rng: &mut R, n: usize, tol: Tolerance) -> Result<FlowMap> {
    let space = Space::Prequantized(n);
    let count = rng.random_range(1..=3);
    let mut factors = Vec::with_capacity(count);
    for _ in 0..count {
        let kind = rng.random_range(0..4);
        let f = match kind {
            0 => random_lift(rng, n, 0.4, STEEP, tol)?,
            1 => {
                let mut c = point(rng, 2 * n, 0.5);
                c.push(rng.random_range(0.0..1.0));
                let a = rng.random_range(0.2..0.9);
                let r = rng.random_range(0.1..0.2);
                squeeze_at(n, a, r, r + 0.15, &c, tol)?.map
            }
            2 => {
                let shift = rng.random_range(-0.8..0.8);
                let plateau = rng.random_range(0.4..0.9);
                cutoff_translation(space, shift, plateau, plateau + shift.abs() + 1.0, tol)?
            }
            _ => random_circle_flow(rng, n, 0.4, STEEP, tol)?,
        };
        factors.push(f);
    }
    Ok(compose(factors)?.with_label("conjugator"))
}
