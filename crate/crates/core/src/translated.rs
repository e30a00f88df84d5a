//! Translated points of contactomorphisms of `R^{2n} x S^1` and their actions.
//!
//! A point `p` is translated when `phi(p)` lies on the Reeb orbit of `p` and the
//! conformal factor of `phi` at `p` is 1. Seeds on a grid are screened by the
//! residual `(base(phi(p)) - base(p), log conformal factor)` and the promising
//! ones are refined by Gauss–Newton.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{pullback_defect, FlowMap};
use crate::newton::NewtonOptions;
use crate::seeding::{self, Grid, Refine};
use crate::space::{circle_displacement, circle_distance, wrap_unit, OneForm, Point, Space};
use crate::support::AxisBox;

/// Sorted, tolerance-clustered action values.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpectrum {
    pub values: Vec<f64>,
    /// Detected witnesses per value.
    pub multiplicity: Vec<usize>,
    pub cluster_tol: f64,
}

impl ActionSpectrum {
    /// Single-linkage clustering: sorted values split where the gap exceeds `cluster_tol`;
    /// each cluster is represented by its mean.
    pub fn from_values(values: &[f64], cluster_tol: f64) -> Self {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        let mut out = Vec::new();
        let mut mult = Vec::new();
        let mut start = 0;
        for i in 1..=v.len() {
            if i == v.len() || v[i] - v[i - 1] > cluster_tol {
                let c = &v[start..i];
                if !c.is_empty() {
                    out.push(c.iter().sum::<f64>() / c.len() as f64);
                    mult.push(c.len());
                }
                start = i;
            }
        }
        ActionSpectrum {
            values: out,
            multiplicity: mult,
            cluster_tol,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn contains(&self, value: f64, tol: f64) -> bool {
        self.values.iter().any(|v| (v - value).abs() <= tol)
    }

    /// Same number of clusters, each within `tol` of the expected value (both sorted).
    pub fn matches(&self, expected: &[f64], tol: f64) -> bool {
        let mut e = expected.to_vec();
        e.sort_by(|a, b| a.total_cmp(b));
        e.dedup_by(|a, b| (*a - *b).abs() <= tol);
        e.len() == self.values.len()
            && e.iter().zip(&self.values).all(|(a, b)| (a - b).abs() <= tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslatedPoint {
    pub point: Point,
    /// Reeb time with `Phi_{-tau}(phi(z)) = z`, from circle bookkeeping, in `(-1/2, 1/2]`.
    pub tau: f64,
    /// Path action: unwrapped Reeb travel along the generating isotopy.
    pub action: f64,
    pub residual_translation: f64,
    pub residual_conformal: f64,
}

impl TranslatedPoint {
    /// `|action - tau|` reduced mod 1.
    pub fn action_tau_gap(&self) -> f64 {
        circle_distance(self.action, self.tau)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// Grid points per base axis.
    pub per_axis: usize,
    /// Grid points on the circle (one is used for Reeb-invariant maps).
    pub circle_samples: usize,
    /// Relative inflation of the search box.
    pub inflate: f64,
    /// Seeds are refined when their residual is a grid local minimum below
    /// `screen_factor * spacing`.
    pub screen_factor: f64,
    /// Residual norm accepted as a translated point.
    pub accept_tol: f64,
    pub max_refine: usize,
    /// Certified witnesses kept per action value (all are counted).
    pub max_per_cluster: usize,
    pub cluster_tol: f64,
    pub newton: NewtonOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            per_axis: 31,
            circle_samples: 16,
            inflate: 0.2,
            screen_factor: 3.0,
            accept_tol: 1e-7,
            max_refine: 300,
            max_per_cluster: 8,
            cluster_tol: 1e-3,
            newton: NewtonOptions {
                tol: 1e-10,
                ..NewtonOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct Search {
    pub witnesses: Vec<TranslatedPoint>,
    pub spectrum: ActionSpectrum,
    /// Seeds refined by Newton that did not reach `accept_tol`.
    pub failures: usize,
    pub seeds: usize,
}

/// Residual blocks `(base(phi p) - base(p), g(p))` for stacked points.
fn residuals(phi: &FlowMap, pts: &[f64], k: usize) -> Result<Vec<f64>> {
    let space = phi.space();
    let d = space.dimension();
    let m = 2 * space.n();
    let mut s = vec![0.0; k * (d + 1)];
    for i in 0..k {
        s[i * (d + 1)..i * (d + 1) + d].copy_from_slice(&pts[i * d..(i + 1) * d]);
    }
    phi.apply_joint(&mut s)?;
    let mut out = Vec::with_capacity(k * (m + 1));
    for i in 0..k {
        let img = &s[i * (d + 1)..(i + 1) * (d + 1)];
        let src = &pts[i * d..(i + 1) * d];
        for j in 0..m {
            out.push(img[j] - src[j]);
        }
        out.push(img[d]);
    }
    Ok(out)
}

fn certify(phi: &FlowMap, coords: &[f64]) -> Result<TranslatedPoint> {
    let space = phi.space();
    let d = space.dimension();
    let img = phi.apply_tracked(coords)?;
    let z0 = coords[d - 1];
    let z1 = img.coords[d - 1];
    let tau = circle_displacement(wrap_unit(z0), wrap_unit(z1));
    let action = z1 - z0;
    let point = Point::new(space, coords.to_vec())?;
    let mut back = img.coords.clone();
    back[d - 1] -= tau;
    let back = Point::new(space, back)?;
    let residual_translation = space.distance_raw(back.coords(), point.coords());
    let defect = pullback_defect(phi, &OneForm::alpha0(space), &point)?;
    Ok(TranslatedPoint {
        point,
        tau,
        action,
        residual_translation,
        residual_conformal: defect.unit_residual,
    })
}

/// Locate translated points of `phi` over `region` (a box in the base or in the full space).
pub fn search(phi: &FlowMap, region: &AxisBox, opts: &SearchOptions) -> Result<Search> {
    let space = phi.space();
    if !space.is_prequantized() {
        return Err(Error::InvalidParameter(format!(
            "translated points are searched on prequantized spaces, not {space}"
        )));
    }
    let n = space.n();
    let d = space.dimension();
    let m = 2 * n;
    if region.dim() != m && region.dim() != d {
        return Err(Error::InvalidParameter("search box has wrong dimension".into()));
    }
    let per = opts.per_axis.max(2);
    let nz = if phi.reeb_invariant() {
        1
    } else {
        opts.circle_samples.max(1)
    };
    let mut lo = Vec::with_capacity(d);
    let mut spacing = Vec::with_capacity(d);
    for k in 0..m {
        let pad = opts.inflate * region.side(k) / 2.0;
        lo.push(region.lo[k] - pad);
        spacing.push((region.side(k) + 2.0 * pad) / (per - 1) as f64);
    }
    lo.push(0.0);
    spacing.push(1.0 / nz as f64);
    let mut counts = vec![per; m];
    counts.push(nz);
    let mut periodic = vec![false; m];
    periodic.push(true);
    let grid = Grid {
        lo,
        spacing,
        counts,
        periodic,
    };

    let support = phi.support().clone();
    let located = seeding::locate(
        &grid,
        |x, k| residuals(phi, x, k),
        m + 1,
        |p| support.contains(space, p),
        &Refine {
            accept_tol: opts.accept_tol,
            screen_factor: opts.screen_factor,
            max_refine: opts.max_refine,
            newton: &opts.newton,
        },
    )?;

    let mut found: Vec<(f64, Vec<f64>)> = located
        .accepted
        .par_iter()
        .map(|p| -> Result<(f64, Vec<f64>)> {
            let t = phi.apply_tracked(p)?;
            Ok((t.coords[d - 1] - p[d - 1], p.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(p) = located.outside {
        found.push((0.0, p));
    }
    let spectrum = ActionSpectrum::from_values(
        &found.iter().map(|(a, _)| *a).collect::<Vec<_>>(),
        opts.cluster_tol,
    );
    let chosen = seeding::thin_clusters(found, opts.cluster_tol, opts.max_per_cluster);
    let witnesses = chosen
        .par_iter()
        .map(|(_, p)| certify(phi, p))
        .collect::<Result<Vec<_>>>()?;

    Ok(Search {
        witnesses,
        spectrum,
        failures: located.failures,
        seeds: located.seeds,
    })
}

pub fn find_translated_points(
    phi: &FlowMap,
    region: &AxisBox,
    opts: &SearchOptions,
) -> Result<Vec<TranslatedPoint>> {
    Ok(search(phi, region, opts)?.witnesses)
}

pub fn spectrum(phi: &FlowMap, region: &AxisBox, opts: &SearchOptions) -> Result<ActionSpectrum> {
    Ok(search(phi, region, opts)?.spectrum)
}

/// The base box of a map's support, or `fallback` when the support is unbounded or empty.
pub fn search_box(phi: &FlowMap, fallback: &AxisBox) -> AxisBox {
    let space: Space = phi.space();
    let m = 2 * space.n();
    match phi.support().hull() {
        Some(h) if h.lo[..m].iter().chain(&h.hi[..m]).all(|v| v.is_finite()) => {
            AxisBox::new(h.lo[..m].to_vec(), h.hi[..m].to_vec())
        }
        _ => fallback.clone(),
    }
}
