//! Exact group-expectation gradients and the gradient-concentration
//! statistics v(w) and g(w).
//!
//! Everything is enumerated over the whole of Z_p^* — no sampling — so the
//! numbers verify the expectation forms directly. The per-base loss
//! gradient decomposes as grad L_a = cbar + m_a with
//!   cbar = E_X[sbar(X) g(X)],    m_a = E_X[h_a(X) lambda(X) g(X)],
//! where g(x) is the network-output gradient and sbar/lambda collect the
//! two possible per-target loss derivatives. The m_a for all bases are a
//! +/-1-weighted matrix product, computed here in cache-sized column
//! blocks.

use crate::error::{Error, Result};
use crate::neural::{
    backward_accumulate, encode_into, output_gradient, LossKind, MlpArchitecture, MlpGradient,
    MlpParams, Workspace,
};
use crate::zp::GroupSpec;

/// Enumeration cap for the exact per-base gradient.
pub const EXACT_ENUM_LIMIT: u64 = 100_000;

/// Cap for the all-bases variance statistics ((p-1) x d panel storage).
pub const VARIANCE_ENUM_LIMIT: u64 = 3072;

fn target_for(loss: LossKind, dlog: u64) -> f64 {
    match loss {
        // squared loss trains against the sign (-1)^{log}
        LossKind::Squared => {
            if dlog & 1 == 0 {
                1.0
            } else {
                -1.0
            }
        }
        // cross-entropy trains against the bit log mod 2
        LossKind::BinaryCrossEntropy => (dlog & 1) as f64,
    }
}

/// grad L_a(w): the per-example gradient averaged over every x in Z_p^*,
/// with targets from the parity bit of log_a x. Returns (mean loss, grad).
pub fn exact_loss_gradient(
    params: &MlpParams,
    arch: &MlpArchitecture,
    group: GroupSpec,
    base: u64,
    loss: LossKind,
) -> Result<(f64, MlpGradient)> {
    let p = group.p();
    if p > EXACT_ENUM_LIMIT {
        return Err(Error::Capacity {
            p,
            limit: EXACT_ENUM_LIMIT,
        });
    }
    if arch.output_width != 1 {
        return Err(Error::Domain(
            "per-base gradients are defined for the scalar parity output".into(),
        ));
    }
    let inv = group.mod_inverse(base)?;
    let m = group.unit_count();
    let scale = 1.0 / m as f64;
    let mut grad = MlpGradient::zeros(arch.param_count());
    let mut ws = Workspace::new(arch);
    let mut input = vec![0.0; arch.input_width];
    let mut total = 0.0;
    let mut k = 0u64; // log_base x, stepped by the inverse
    for x in group.units() {
        k += inv;
        if k >= p {
            k -= p;
        }
        encode_into(x, &mut input)?;
        let target = target_for(loss, k);
        total += backward_accumulate(
            params,
            arch,
            &input,
            &[target],
            loss,
            &mut ws,
            &mut grad.data,
            scale,
        )?;
    }
    Ok((total * scale, grad))
}

/// Gradient-concentration statistics at one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct GradientVariance {
    /// E_A || grad L_A - E_A' grad L_A' ||^2, computed definitionally.
    pub v: f64,
    /// The same variance through E||grad L_A||^2 - ||mean||^2.
    pub v_second_moment: f64,
    /// E_X || d f_w(X) / d w ||^2.
    pub g: f64,
    /// (v / g) * sqrt(p).
    pub ratio_scaled: f64,
}

/// Computes v(w) over ALL bases and g(w) over ALL inputs, exhaustively.
pub fn gradient_variance(
    params: &MlpParams,
    arch: &MlpArchitecture,
    group: GroupSpec,
    loss: LossKind,
) -> Result<GradientVariance> {
    let p = group.p();
    if p > VARIANCE_ENUM_LIMIT {
        return Err(Error::Capacity {
            p,
            limit: VARIANCE_ENUM_LIMIT,
        });
    }
    if arch.output_width != 1 {
        return Err(Error::Domain(
            "gradient variance is defined for the scalar parity output".into(),
        ));
    }
    let m = (p - 1) as usize;
    let d = arch.param_count();
    let inv_m = 1.0 / m as f64;

    // Column-block width: one block panel (m x BLOCK singles) stays cache
    // resident while the base loop streams over it. The panel and the
    // signed strip sums are f32 — the concentration statistics need ~4
    // digits and the margins in every bound are orders of magnitude — but
    // all reductions (cbar, means, norms, v, g) accumulate in f64.
    const BLOCK: usize = 128;
    // bases processed together; independent index walks fill the pipeline
    const TILE: usize = 4;
    let nblocks = d.div_ceil(BLOCK);

    // q(x) = lambda(x) g(x), stored block-major: all rows of block 0, then
    // block 1, ... so the per-block GEMM reads contiguously.
    let mut panels = vec![0.0f32; m * d];
    let mut cbar = vec![0.0f64; d];
    let mut g_scratch = vec![0.0f64; d];
    let mut input = vec![0.0f64; arch.input_width];
    let mut ws = Workspace::new(arch);
    let mut g_sum = 0.0f64;

    for x in 1..p {
        encode_into(x, &mut input)?;
        let yhat = output_gradient(params, arch, &input, &mut ws, &mut g_scratch)?;
        let (sbar, lambda) = match loss {
            LossKind::Squared => (yhat, -1.0),
            LossKind::BinaryCrossEntropy => {
                let a = 1.0 / (1.0 - yhat);
                let b = 1.0 / yhat;
                ((a - b) * 0.5, (a + b) * 0.5)
            }
        };
        g_sum += g_scratch.iter().map(|v| v * v).sum::<f64>();
        let w = sbar * inv_m;
        for (c, gi) in cbar.iter_mut().zip(&g_scratch) {
            *c += w * gi;
        }
        let row = x as usize - 1;
        let mut off = 0;
        let mut col = 0;
        for _ in 0..nblocks {
            let wb = BLOCK.min(d - col);
            let dst = &mut panels[off + row * wb..off + row * wb + wb];
            for (dv, gv) in dst.iter_mut().zip(&g_scratch[col..col + wb]) {
                *dv = (lambda * gv) as f32;
            }
            off += m * wb;
            col += wb;
        }
    }

    let mut inverses = Vec::with_capacity(m);
    for a in group.units() {
        inverses.push(group.mod_inverse(a)?);
    }

    let mut v_def_sum = 0.0f64;
    let mut second_moment_sum = 0.0f64;
    let mut mu_norm_sq = 0.0f64;
    let mut mpanel = vec![0.0f32; m * BLOCK];
    let mut mbar = vec![0.0f64; BLOCK];

    let mut off = 0;
    let mut col = 0;
    for _ in 0..nblocks {
        let wb = BLOCK.min(d - col);
        let panel = &panels[off..off + m * wb];
        // m_a rows for this block: signed sums of the q rows, sign from
        // the parity of log_a x walked incrementally, TILE bases at a time.
        let mut ai = 0;
        while ai < m {
            let tile = TILE.min(m - ai);
            let (acc_all, _) = mpanel.split_at_mut((ai + tile) * wb);
            let acc_all = &mut acc_all[ai * wb..];
            for a in acc_all.iter_mut() {
                *a = 0.0;
            }
            let mut ks = [0u64; TILE];
            if tile == TILE {
                let us = [
                    inverses[ai],
                    inverses[ai + 1],
                    inverses[ai + 2],
                    inverses[ai + 3],
                ];
                for x in 0..m {
                    let row = &panel[x * wb..x * wb + wb];
                    for lane in 0..TILE {
                        let mut k = ks[lane] + us[lane];
                        k = if k >= p { k - p } else { k };
                        ks[lane] = k;
                        let sign = 1.0f32 - 2.0 * ((k & 1) as f32);
                        let acc = &mut acc_all[lane * wb..(lane + 1) * wb];
                        for (a, r) in acc.iter_mut().zip(row) {
                            *a += sign * r;
                        }
                    }
                }
            } else {
                for lane in 0..tile {
                    let u = inverses[ai + lane];
                    let mut k = 0u64;
                    for x in 0..m {
                        k += u;
                        k = if k >= p { k - p } else { k };
                        let sign = 1.0f32 - 2.0 * ((k & 1) as f32);
                        let row = &panel[x * wb..x * wb + wb];
                        let acc = &mut acc_all[lane * wb..(lane + 1) * wb];
                        for (a, r) in acc.iter_mut().zip(row) {
                            *a += sign * r;
                        }
                    }
                }
            }
            ai += tile;
        }
        let scale = inv_m as f32;
        for a in mpanel[..m * wb].iter_mut() {
            *a *= scale;
        }
        let cb = &cbar[col..col + wb];
        let mbar = &mut mbar[..wb];
        mbar.fill(0.0);
        for ai in 0..m {
            let row = &mpanel[ai * wb..(ai + 1) * wb];
            for (b, r) in mbar.iter_mut().zip(row) {
                *b += *r as f64;
            }
        }
        for b in mbar.iter_mut() {
            *b *= inv_m;
        }
        for j in 0..wb {
            let mu_j = cb[j] + mbar[j];
            mu_norm_sq += mu_j * mu_j;
        }
        for ai in 0..m {
            let row = &mpanel[ai * wb..(ai + 1) * wb];
            let mut dist = 0.0f64;
            let mut norm = 0.0f64;
            for j in 0..wb {
                let grad_j = cb[j] + row[j] as f64;
                let mu_j = cb[j] + mbar[j];
                let diff = grad_j - mu_j;
                dist += diff * diff;
                norm += grad_j * grad_j;
            }
            v_def_sum += dist;
            second_moment_sum += norm;
        }
        off += m * wb;
        col += wb;
    }

    let g = g_sum * inv_m;
    let v = v_def_sum * inv_m;
    let v_second_moment = second_moment_sum * inv_m - mu_norm_sq;
    Ok(GradientVariance {
        v,
        v_second_moment,
        g,
        ratio_scaled: v / g * (p as f64).sqrt(),
    })
}
