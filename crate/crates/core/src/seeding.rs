//! Grid seeding and Newton refinement shared by the fixed-point and
//! translated-point searches.

use rayon::prelude::*;

use crate::error::Result;
use crate::newton::{self, NewtonOptions};

/// Regular lattice; periodic axes wrap and have no endpoint duplicate.
#[derive(Debug, Clone)]
pub(crate) struct Grid {
    pub lo: Vec<f64>,
    pub spacing: Vec<f64>,
    pub counts: Vec<usize>,
    pub periodic: Vec<bool>,
}

impl Grid {
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

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.counts)
            .rev()
            .fold(0, |acc, (&j, &c)| acc * c + j)
    }

    fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(k, &j)| self.lo[k] + self.spacing[k] * j as f64)
            .collect()
    }

    fn scale(&self) -> f64 {
        self.spacing
            .iter()
            .zip(&self.counts)
            .filter(|(_, &c)| c > 1)
            .map(|(s, _)| *s)
            .fold(0.0, f64::max)
    }
}

pub(crate) struct Refine<'a> {
    pub accept_tol: f64,
    pub screen_factor: f64,
    pub max_refine: usize,
    pub newton: &'a NewtonOptions,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Located {
    pub accepted: Vec<Vec<f64>>,
    /// One seed outside the support, if any.
    pub outside: Option<Vec<f64>>,
    pub failures: usize,
    pub seeds: usize,
}

/// Zeros of `residual` (joint evaluator, residual length `m`) seeded on `grid`.
///
/// Seeds outside `in_support` are skipped except for one representative.
/// Seeds already below `accept_tol` are kept as they are; the rest are refined
/// when they are grid local minima with residual below `screen_factor` times
/// the grid spacing.
pub(crate) fn locate<R, S>(grid: &Grid, residual: R, m: usize, in_support: S, opts: &Refine) -> Result<Located>
where
    R: Fn(&[f64], usize) -> Result<Vec<f64>> + Sync,
    S: Fn(&[f64]) -> bool,
{
    let total = grid.total();
    let seeds: Vec<Vec<f64>> = (0..total).map(|f| grid.point(&grid.index(f))).collect();
    let inside: Vec<bool> = seeds.iter().map(|p| in_support(p)).collect();
    let norms: Vec<f64> = seeds
        .par_iter()
        .zip(&inside)
        .map(|(p, &ins)| -> Result<f64> {
            if !ins {
                return Ok(0.0);
            }
            let r = residual(p, 1)?;
            Ok(r.iter().map(|v| v * v).sum::<f64>().sqrt())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Located {
        seeds: total,
        ..Located::default()
    };
    let threshold = opts.screen_factor * grid.scale();
    let mut candidates: Vec<(f64, usize)> = Vec::new();
    for f in 0..total {
        if !inside[f] {
            if out.outside.is_none() {
                out.outside = Some(seeds[f].clone());
            }
            continue;
        }
        let r = norms[f];
        if r <= opts.accept_tol {
            out.accepted.push(seeds[f].clone());
            continue;
        }
        if r > threshold {
            continue;
        }
        let idx = grid.index(f);
        let mut is_min = true;
        'axes: for k in 0..idx.len() {
            let c = grid.counts[k];
            if c == 1 {
                continue;
            }
            for s in [-1i64, 1] {
                let v = idx[k] as i64 + s;
                let j = if grid.periodic[k] {
                    v.rem_euclid(c as i64) as usize
                } else if v < 0 || v >= c as i64 {
                    continue;
                } else {
                    v as usize
                };
                let mut nb = idx.clone();
                nb[k] = j;
                let g = grid.flat(&nb);
                if inside[g] && norms[g] < r {
                    is_min = false;
                    break 'axes;
                }
            }
        }
        if is_min {
            candidates.push((r, f));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates.truncate(opts.max_refine);

    let refined: Vec<Option<Vec<f64>>> = candidates
        .par_iter()
        .map(|&(_, f)| match newton::solve(&residual, &seeds[f], m, opts.newton) {
            Ok(o) if o.norm <= opts.accept_tol => Some(o.x),
            _ => None,
        })
        .collect();
    out.failures = refined.iter().filter(|r| r.is_none()).count();
    out.accepted.extend(refined.into_iter().flatten());
    Ok(out)
}

/// Keep at most `cap` evenly spread members of each cluster of `(value, payload)`
/// pairs (sorted by value, split at gaps above `tol`).
pub(crate) fn thin_clusters<T: Clone>(mut items: Vec<(f64, T)>, tol: f64, cap: usize) -> Vec<(f64, T)> {
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut chosen = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let mut j = i + 1;
        while j < items.len() && items[j].0 - items[j - 1].0 <= tol {
            j += 1;
        }
        let group = &items[i..j];
        let take = cap.max(1).min(group.len());
        for q in 0..take {
            chosen.push(group[q * group.len() / take].clone());
        }
        i = j;
    }
    chosen
}
