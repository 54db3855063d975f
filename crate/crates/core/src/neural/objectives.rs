//! Losses and their gradients for the two training objectives.

use super::mlp::{Gradients, Mlp};
use crate::collection::FdPair;
use crate::error::{Error, Result};
use crate::linalg::{pinv_adjoint, pinv_full_rank, Mat};

/// Mean over the batch of `‖f(input) − target‖²`, with parameter gradients.
///
/// When `weight_decay > 0` the term `wd · W` is added to every weight
/// gradient; the returned loss is the data term only.
pub fn mse_backprop(
    mlp: &Mlp,
    batch: &[(&[f64], &[f64])],
    weight_decay: f64,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Empty("mse batch"));
    }
    let spec = mlp.spec();
    let mut grads = Gradients::zeros_like(mlp);
    let mut loss = 0.0;
    for (input, target) in batch {
        if input.len() != spec.input_dim {
            return Err(Error::DimensionMismatch {
                context: "mse input",
                expected: spec.input_dim,
                got: input.len(),
            });
        }
        if target.len() != spec.output_dim {
            return Err(Error::DimensionMismatch {
                context: "mse target",
                expected: spec.output_dim,
                got: target.len(),
            });
        }
        let cache = mlp.forward_cached(input);
        let residual: Vec<f64> = cache
            .output()
            .iter()
            .zip(target.iter())
            .map(|(y, t)| y - t)
            .collect();
        loss += residual.iter().map(|r| r * r).sum::<f64>();
        let dy: Vec<f64> = residual.iter().map(|r| 2.0 * r).collect();
        mlp.backward(&cache, &dy, &mut grads);
    }
    let inv = 1.0 / batch.len() as f64;
    grads.scale(inv);
    grads.add_weight_decay(mlp, weight_decay);
    Ok((loss * inv, grads))
}

/// Secant-condition loss of a Jacobian over finite-difference pairs,
///
/// `Σ ‖Δx − J Δq‖² + β Σ ‖Δq − J† Δx‖²`,
///
/// and its gradient with respect to `J`. The inverse term differentiates
/// through the pseudo-inverse and therefore needs `J` at full rank.
pub fn hyperplane_loss_and_grad(j: &Mat, pairs: &[FdPair], beta: f64) -> Result<(f64, Mat)> {
    if pairs.is_empty() {
        return Err(Error::Empty("finite-difference pairs"));
    }
    let (m, n) = j.shape();
    for p in pairs {
        if p.dx.len() != m || p.dq.len() != n {
            return Err(Error::ShapeMismatch {
                context: "hyperplane pair",
                left: (m, n),
                right: (p.dx.len(), p.dq.len()),
            });
        }
    }
    let mut loss = 0.0;
    let mut grad = Mat::zeros(m, n);
    for p in pairs {
        let pred = j.mul_vec(&p.dq);
        for (i, (&dx, &px)) in p.dx.iter().zip(&pred).enumerate() {
            let r = dx - px;
            loss += r * r;
            let row = &mut grad.as_mut_slice()[i * n..(i + 1) * n];
            for (g, &dq) in row.iter_mut().zip(&p.dq) {
                *g -= 2.0 * r * dq;
            }
        }
    }
    if beta != 0.0 {
        let jp = pinv_full_rank(j)?;
        // Cotangent of the loss with respect to J†.
        let mut cot = Mat::zeros(n, m);
        let mut inverse_loss = 0.0;
        for p in pairs {
            let pred = jp.mul_vec(&p.dx);
            for (a, (&dq, &pq)) in p.dq.iter().zip(&pred).enumerate() {
                let r = dq - pq;
                inverse_loss += r * r;
                let row = &mut cot.as_mut_slice()[a * m..(a + 1) * m];
                for (c, &dx) in row.iter_mut().zip(&p.dx) {
                    *c -= 2.0 * r * dx;
                }
            }
        }
        loss += beta * inverse_loss;
        let g_inv = pinv_adjoint(j, &jp, &cot)?;
        grad = &grad + &g_inv.scale(beta);
    }
    Ok((loss, grad))
}

/// Secant loss of the Jacobian a network emits at `input` (read row-major
/// as `m × n`), back-propagated to the network parameters.
pub fn hyperplane_backprop(
    mlp: &Mlp,
    input: &[f64],
    pairs: &[FdPair],
    beta: f64,
) -> Result<(f64, Gradients)> {
    let spec = mlp.spec();
    if input.len() != spec.input_dim {
        return Err(Error::DimensionMismatch {
            context: "hyperplane input",
            expected: spec.input_dim,
            got: input.len(),
        });
    }
    let n = pairs.first().map_or(0, |p| p.dq.len());
    if n == 0 || !spec.output_dim.is_multiple_of(n) {
        return Err(Error::ShapeMismatch {
            context: "network output as a Jacobian",
            left: (spec.output_dim, 1),
            right: (0, n),
        });
    }
    let cache = mlp.forward_cached(input);
    let j = Mat::new(spec.output_dim / n, n, cache.output().to_vec())?;
    let (loss, dj) = hyperplane_loss_and_grad(&j, pairs, beta)?;
    let mut grads = Gradients::zeros_like(mlp);
    mlp.backward(&cache, dj.as_slice(), &mut grads);
    Ok((loss, grads))
}
