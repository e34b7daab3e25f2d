//! Least-squares helpers: straight-line fits for trend assertions and the
//! three-parameter log-log model for the covariance growth curve.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Ordinary least squares y = intercept + slope * x.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(Error::Domain("need at least two points".into()));
    }
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-12 * n * sxx.max(1.0) {
        return Err(Error::Domain("x values are degenerate".into()));
    }
    let slope = (n * sxy - sx * sy) / det;
    Ok(LinearFit {
        slope,
        intercept: (sy - slope * sx) / n,
    })
}

/// Fit of y ~ C * p^alpha * (ln p)^beta, via OLS on
/// ln y = ln C + alpha ln p + beta ln ln p.
#[derive(Debug, Clone, Copy)]
pub struct PowerLawFit {
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl PowerLawFit {
    pub fn eval(&self, p: f64) -> f64 {
        self.c * p.powf(self.alpha) * p.ln().powf(self.beta)
    }
}

pub fn power_law_fit(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::Domain("need at least three points".into()));
    }
    // rows (1, ln p, ln ln p) -> ln y; p must exceed e so ln ln p is defined
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(p, y) in points {
        if p <= std::f64::consts::E || y <= 0.0 {
            return Err(Error::Domain(format!(
                "log-log fit needs p > e and y > 0, got ({p}, {y})"
            )));
        }
        let row = [1.0, p.ln(), p.ln().ln()];
        let ln_y = y.ln();
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * ln_y;
        }
    }
    let sol = solve3(ata, atb)?;
    Ok(PowerLawFit {
        c: sol[0].exp(),
        alpha: sol[1],
        beta: sol[2],
    })
}

/// Raw-scale least squares for y ~ C * p^alpha * (ln p)^beta.
///
/// The log-space OLS above is exact when the model holds, but on data
/// that sit below their asymptote at small p the nearly collinear
/// regressors (ln p, ln ln p) trade off and the exponent comes out far
/// from the asymptotic growth rate. Minimizing raw residuals instead
/// weights the large-p tail, which is where the exponent lives. C is
/// closed-form per (alpha, beta); the pair is found by a deterministic
/// coarse grid with two local refinement rounds.
pub fn power_law_fit_raw(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::Domain("need at least three points".into()));
    }
    for &(p, y) in points {
        if p <= std::f64::consts::E || y <= 0.0 {
            return Err(Error::Domain(format!(
                "power-law fit needs p > e and y > 0, got ({p}, {y})"
            )));
        }
    }
    let rss = |alpha: f64, beta: f64| -> (f64, f64) {
        let mut wy = 0.0;
        let mut ww = 0.0;
        for &(p, y) in points {
            let w = p.powf(alpha) * p.ln().powf(beta);
            wy += w * y;
            ww += w * w;
        }
        let c = wy / ww;
        let mut r = 0.0;
        for &(p, y) in points {
            let w = p.powf(alpha) * p.ln().powf(beta);
            r += (y - c * w) * (y - c * w);
        }
        (r, c)
    };
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0); // (rss, c, alpha, beta)
    let scan = |a_lo: f64, a_hi: f64, a_step: f64, b_lo: f64, b_hi: f64, b_step: f64,
                best: &mut (f64, f64, f64, f64)| {
        let a_n = ((a_hi - a_lo) / a_step).round() as usize;
        let b_n = ((b_hi - b_lo) / b_step).round() as usize;
        for i in 0..=a_n {
            let alpha = a_lo + i as f64 * a_step;
            for j in 0..=b_n {
                let beta = b_lo + j as f64 * b_step;
                let (r, c) = rss(alpha, beta);
                if r < best.0 {
                    *best = (r, c, alpha, beta);
                }
            }
        }
    };
    scan(0.0, 6.0, 0.05, -3.0, 3.0, 0.05, &mut best);
    // pattern search: re-center while the minimum keeps moving, shrink the
    // step when it stalls; the RSS valley is long and diagonal
    let mut step = 0.05f64;
    let mut guard = 0;
    while step > 5e-6 && guard < 10_000 {
        guard += 1;
        let before = (best.2, best.3);
        scan(
            best.2 - 4.0 * step,
            best.2 + 4.0 * step,
            step,
            best.3 - 4.0 * step,
            best.3 + 4.0 * step,
            step,
            &mut best,
        );
        if (best.2, best.3) == before {
            step /= 4.0;
        }
    }
    Ok(PowerLawFit {
        c: best.1,
        alpha: best.2,
        beta: best.3,
    })
}

/// 3x3 Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::Domain("singular normal equations".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in (row + 1)..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Ok(x)
}
