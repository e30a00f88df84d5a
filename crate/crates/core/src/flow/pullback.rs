use crate::error::{Error, Result};
use crate::flow::FlowMap;
use crate::space::{OneForm, Point, Space};

/// Best conformal fit of a pulled-back one-form at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullbackDefect {
    /// `e^g` minimising `|(f^* alpha)_p - e^g alpha_p|`.
    pub conformal: f64,
    pub residual: f64,
    /// `|(f^* alpha)_p - alpha_p|`.
    pub unit_residual: f64,
}

/// Central-difference differential of a jointly evaluated map, with one
/// Richardson step (`step` and `step / 2`) cancelling the second-order error.
///
/// `eval` maps blocks of stride `dimension + 1` in place. Returns the image of
/// `p` and the row-major Jacobian.
pub fn jacobian<F>(space: Space, eval: F, p: &[f64], step: f64) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(&mut [f64]) -> Result<()>,
{
    let d = space.dimension();
    let stride = d + 1;
    let blocks = 4 * d + 1;
    let mut s = vec![0.0; blocks * stride];
    for b in 0..blocks {
        s[b * stride..b * stride + d].copy_from_slice(p);
    }
    for k in 0..d {
        s[(1 + 4 * k) * stride + k] += step;
        s[(2 + 4 * k) * stride + k] -= step;
        s[(3 + 4 * k) * stride + k] += 0.5 * step;
        s[(4 + 4 * k) * stride + k] -= 0.5 * step;
    }
    eval(&mut s).map_err(|_| Error::Differential(p.to_vec()))?;
    let image = s[..d].to_vec();
    let mut jac = vec![0.0; d * d];
    let at = |b: usize, i: usize| s[b * stride + i];
    for k in 0..d {
        for i in 0..d {
            let wide = (at(1 + 4 * k, i) - at(2 + 4 * k, i)) / (2.0 * step);
            let narrow = (at(3 + 4 * k, i) - at(4 + 4 * k, i)) / step;
            jac[i * d + k] = (4.0 * narrow - wide) / 3.0;
        }
    }
    if jac.iter().any(|v| !v.is_finite()) {
        return Err(Error::Differential(p.to_vec()));
    }
    Ok((image, jac))
}

/// Compare `f^* target` with `source` at `p` for a map given by a joint evaluator.
pub fn pullback_defect_fn<F>(
    eval: F,
    source: &OneForm,
    target: &OneForm,
    p: &[f64],
) -> Result<PullbackDefect>
where
    F: Fn(&mut [f64]) -> Result<()>,
{
    let space = source.space;
    let d = space.dimension();
    let norm: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    let step = 1e-5 * (1.0 + norm);
    let (image, jac) = jacobian(space, eval, p, step)?;
    let mut a_img = vec![0.0; d];
    target.covector(&image, &mut a_img);
    let mut a = vec![0.0; d];
    source.covector(p, &mut a);
    // (f^* beta)_p = J^T beta_{f(p)}
    let pulled: Vec<f64> = (0..d)
        .map(|k| (0..d).map(|i| jac[i * d + k] * a_img[i]).sum())
        .collect();
    let aa: f64 = a.iter().map(|v| v * v).sum();
    if aa == 0.0 {
        return Err(Error::InvalidParameter(
            "form vanishes at the sample point".into(),
        ));
    }
    let lambda = pulled.iter().zip(&a).map(|(c, v)| c * v).sum::<f64>() / aa;
    let residual = pulled
        .iter()
        .zip(&a)
        .map(|(c, v)| (c - lambda * v).powi(2))
        .sum::<f64>()
        .sqrt();
    let unit_residual = pulled
        .iter()
        .zip(&a)
        .map(|(c, v)| (c - v).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(PullbackDefect {
        conformal: lambda,
        residual,
        unit_residual,
    })
}

/// Pull `form` back by `f` at `p` using a central-difference differential.
pub fn pullback_defect(f: &FlowMap, form: &OneForm, p: &Point) -> Result<PullbackDefect> {
    f.space().ensure_same(p.space())?;
    form.space.ensure_same(p.space())?;
    pullback_defect_fn(|s| f.apply_joint(s), form, form, p.coords())
}
