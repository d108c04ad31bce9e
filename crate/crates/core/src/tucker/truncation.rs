use nalgebra::DMatrix;

use super::dense::DenseTensor3;
use super::sum::TuckerSum;
use super::tensor::TuckerTensor3;
use crate::error::{Error, Result};
use crate::linalg::{left_singular, rank_for_budget};

/// Sequentially truncated HOSVD with relative tolerance `eps`.
///
/// The budget `eps * ‖X‖_F` is split evenly over the three modes (processed
/// in order 1, 2, 3), so the result satisfies `‖X - X̃‖_F <= eps ‖X‖_F`.
/// Factors are orthonormal. A zero tensor yields a rank-(1,1,1) zero.
pub fn sthosvd(x: &DenseTensor3, eps: f64) -> Result<TuckerTensor3> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be non-negative, got {eps}"
        )));
    }
    let dims = x.dims();
    let norm = x.norm();
    if norm == 0.0 || dims.contains(&0) {
        return Ok(TuckerTensor3::zeros(dims));
    }
    let budget = eps * norm / 3f64.sqrt();
    let mut cur = x.clone();
    let mut factors: [DMatrix<f64>; 3] = Default::default();
    for (m, factor) in factors.iter_mut().enumerate() {
        let (u, sigma) = left_singular(&cur.unfold(m));
        let k = rank_for_budget(&sigma, budget).max(1);
        let uk = u.columns(0, k).into_owned();
        cur = cur.mode_product_unchecked(m, &uk.transpose());
        *factor = uk;
    }
    TuckerTensor3::new(cur, factors)
}

/// Relative-tolerance truncation of a Tucker tensor:
/// QR of each factor, ST-HOSVD of the reduced core, recombination.
pub fn truncate_rel(y: &TuckerTensor3, eps: f64) -> Result<TuckerTensor3> {
    truncate_sum(&TuckerSum::from_tucker(y), eps)
}

/// Relative-tolerance truncation of an unevaluated sum.
pub fn truncate_sum(y: &TuckerSum, eps: f64) -> Result<TuckerTensor3> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {eps}")));
    }
    if y.width().0.contains(&0) || y.block_count() == 0 {
        return Ok(TuckerTensor3::zeros(y.dims()));
    }
    let red = y.reduce();
    let z = y.project_blocks(&red.r, 0..y.block_count());
    recombine(&red.q, &sthosvd(&z, eps)?)
}

fn recombine(q: &[DMatrix<f64>; 3], s: &TuckerTensor3) -> Result<TuckerTensor3> {
    let (core, f) = s.clone().into_parts();
    TuckerTensor3::new(core, std::array::from_fn(|t| &q[t] * &f[t]))
}

/// Parameters of the dynamic truncation loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicParams {
    /// Reduction factor applied to the tolerance on rejection, in (0, 1).
    pub alpha: f64,
    /// Floor for the tolerance.
    pub eps_min: f64,
    /// Acceptance threshold on `|v - 1|`.
    pub delta: f64,
}

/// Result of one dynamic truncation.
#[derive(Clone, Debug)]
pub struct DynamicOutcome {
    pub tensor: TuckerTensor3,
    /// Last tolerance used.
    pub eps: f64,
    /// Update ratio of the accepted step (1 for a stagnant proposal).
    pub ratio: f64,
    pub passes: usize,
}

/// Dynamic truncation of the proposal `y_next` relative to the previous
/// iterate `y_prev`. Returns the truncated tensor and the last tolerance.
pub fn truncate_dynamic(
    y_prev: &TuckerTensor3,
    y_next: &TuckerTensor3,
    eps: f64,
    params: DynamicParams,
) -> Result<(TuckerTensor3, f64)> {
    let mut s = TuckerSum::from_tucker(y_prev);
    s.push_tucker(y_next, 1.0)?;
    // Cancel the leading copy so the sum equals y_next while block 0
    // still gives the coordinates of y_prev.
    s.append(&TuckerSum::from_tucker(y_prev), -1.0)?;
    let out = truncate_dynamic_sum(&s, 1, eps, params)?;
    Ok((out.tensor, out.eps))
}

/// Dynamic truncation where `y_next` is a lazy sum whose first
/// `prev_blocks` blocks represent the previous iterate.
pub(crate) fn truncate_dynamic_sum(
    y_next: &TuckerSum,
    prev_blocks: usize,
    eps: f64,
    params: DynamicParams,
) -> Result<DynamicOutcome> {
    let (mut t, eps, ratio, passes) =
        truncate_dynamic_blocks(std::slice::from_ref(y_next), &[prev_blocks], eps, params)?;
    Ok(DynamicOutcome {
        tensor: t.pop().expect("one component"),
        eps,
        ratio,
        passes,
    })
}

/// Block version of the dynamic truncation: all components share the
/// tolerance and the update ratio is taken over the whole block vector.
/// Returns `(components, eps, ratio, passes)`.
pub fn truncate_dynamic_blocks(
    y_next: &[TuckerSum],
    prev_blocks: &[usize],
    eps: f64,
    params: DynamicParams,
) -> Result<(Vec<TuckerTensor3>, f64, f64, usize)> {
    let DynamicParams { alpha, eps_min, delta } = params;
    if !(alpha > 0.0 && alpha < 1.0) || !(eps_min > 0.0) || !(delta > 0.0) || !(eps >= eps_min) {
        return Err(Error::InvalidInput(format!(
            "dynamic truncation needs 0<alpha<1, eps>=eps_min>0, delta>0 (alpha={alpha}, eps={eps}, eps_min={eps_min}, delta={delta})"
        )));
    }
    if y_next.len() != prev_blocks.len() {
        return Err(crate::error::mismatch(
            "truncate_dynamic_blocks",
            format!(
                "{} components, {} previous-block counts",
                y_next.len(),
                prev_blocks.len()
            ),
        ));
    }
    struct Part {
        q: [DMatrix<f64>; 3],
        next: DenseTensor3,
        prev: DenseTensor3,
        proposed: DenseTensor3,
    }
    let mut parts = Vec::with_capacity(y_next.len());
    for (y, &pb) in y_next.iter().zip(prev_blocks) {
        let red = y.reduce();
        let next = y.project_blocks(&red.r, 0..y.block_count());
        let prev = y.project_blocks(&red.r, 0..pb.min(y.block_count()));
        let mut proposed = next.clone();
        proposed.axpy(-1.0, &prev)?;
        parts.push(Part {
            q: red.q,
            next,
            prev,
            proposed,
        });
    }
    let sq = |f: &dyn Fn(&Part) -> f64| parts.iter().map(f).sum::<f64>();
    let prop_sq = sq(&|p| p.proposed.norm().powi(2));
    let next_norm = sq(&|p| p.next.norm().powi(2)).sqrt();
    let prev_norm = sq(&|p| p.prev.norm().powi(2)).sqrt();
    if prop_sq.sqrt() <= 64.0 * f64::EPSILON * next_norm.max(prev_norm) || next_norm == 0.0 {
        // Stagnant proposal: keep the previous iterate.
        let kept = parts
            .iter()
            .zip(y_next)
            .map(|(p, y)| {
                if p.prev.norm() == 0.0 {
                    Ok(TuckerTensor3::zeros(y.dims()))
                } else {
                    recombine(&p.q, &sthosvd(&p.prev, f64::EPSILON)?)
                }
            })
            .collect::<Result<_>>()?;
        return Ok((kept, eps, 1.0, 0));
    }
    let mut eps_new = eps;
    let mut passes = 0;
    loop {
        passes += 1;
        let mut dot = 0.0;
        let mut trunc = Vec::with_capacity(parts.len());
        for p in &parts {
            let s = sthosvd(&p.next, eps_new)?;
            let (core, f) = s.clone().into_parts();
            let mut actual = core.multi_mode_product([&f[0], &f[1], &f[2]])?;
            actual.axpy(-1.0, &p.prev)?;
            dot += p.proposed.dot(&actual)?;
            trunc.push(s);
        }
        let ratio = dot / prop_sq;
        let accept = (ratio - 1.0).abs() < delta;
        if accept || alpha * eps_new <= eps_min {
            let out = parts
                .iter()
                .zip(&trunc)
                .map(|(p, s)| recombine(&p.q, s))
                .collect::<Result<_>>()?;
            return Ok((out, eps_new, ratio, passes));
        }
        eps_new *= alpha;
    }
}
