//! Special functions backing the Generalized Poisson cumulant machinery:
//! the principal-branch Lambert W function, Stirling numbers of the second
//! kind, and the integer polynomials appearing in the derivatives of W.

use crate::error::{Error, Result};

/// 1/e, the left edge of the principal branch domain.
const NEG_INV_E: f64 = -0.367_879_441_171_442_33;

/// Principal-branch Lambert W function, the inverse of `w * exp(w)` on
/// `w >= -1`.
///
/// Evaluated by Halley iteration from a piecewise initial guess: a branch
/// point series near `-1/e`, a log-log asymptotic for large arguments, and a
/// rational approximation in between. Converges to `1e-14` in a handful of
/// iterations.
pub fn lambert_w0(z: f64) -> Result<f64> {
    if z.is_nan() {
        return Err(Error::Domain("lambert_w0: NaN argument".into()));
    }
    if z < NEG_INV_E {
        // Tolerate rounding right at the branch point.
        if z > NEG_INV_E * (1.0 + 1e-12) - 1e-300 {
            return Ok(-1.0);
        }
        return Err(Error::Domain(format!(
            "lambert_w0: argument {z} below -1/e"
        )));
    }
    if z == 0.0 {
        return Ok(0.0);
    }

    let mut w = initial_guess(z);
    if (w + 1.0).abs() < 1e-10 {
        // Within rounding of the branch point; the series value is already
        // at machine precision and Halley's denominator degenerates.
        return Ok(w);
    }
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - z;
        // Halley step: f' = e^w (w + 1), f'' = e^w (w + 2).
        let correction = if (2.0 * w + 2.0).abs() > 1e-12 {
            (w + 2.0) * f / (2.0 * w + 2.0)
        } else {
            0.0
        };
        let denom = ew * (w + 1.0) - correction;
        if denom == 0.0 {
            break;
        }
        let dw = f / denom;
        w -= dw;
        if dw.abs() <= 1e-14 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

fn initial_guess(z: f64) -> f64 {
    if z < -0.3 {
        // Branch point series in p = sqrt(2(ez + 1)).
        let p2 = (2.0 * (std::f64::consts::E * z + 1.0)).max(0.0);
        let p = p2.sqrt();
        -1.0 + p - p2 / 3.0 + 11.0 / 72.0 * p * p2
    } else if z < std::f64::consts::E {
        // Padé-style guess around the origin, adequate to start Halley.
        z * (60.0 + 114.0 * z + 17.0 * z * z) / (60.0 + 174.0 * z + 101.0 * z * z)
    } else {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

/// Stirling number of the second kind `S(j, l)`, the number of ways to
/// partition `j` labelled objects into `l` nonempty blocks.
///
/// Exact via the recurrence `S(n, k) = k S(n-1, k) + S(n-1, k-1)`; supported
/// for `1 <= l <= j <= 20`, which stays far inside the `u128` range.
pub fn stirling2(j: u32, l: u32) -> Result<u128> {
    if j < 1 || j > 20 || l < 1 || l > j {
        return Err(Error::Range(format!(
            "stirling2: need 1 <= l <= j <= 20, got j={j}, l={l}"
        )));
    }
    let j = j as usize;
    let l = l as usize;
    // row[k] = S(n, k); build rows up to n = j.
    let mut row = vec![0u128; j + 1];
    row[0] = 1; // S(0, 0)
    for n in 1..=j {
        for k in (1..=n).rev() {
            row[k] = k as u128 * row[k] + row[k - 1];
        }
        row[0] = 0;
    }
    Ok(row[l])
}

/// Coefficients (ascending powers) of the polynomial `p_l` from the
/// derivative formula of the Lambert W function,
/// `W^(l)(x) = W^l p_l(W) / (x^l (1 + W)^(2l-1))`.
///
/// Defined by `p_1 = 1` and the recurrence
/// `p_{l+1}(x) = (1 + x) p_l'(x) - (l x + 3 l - 1) p_l(x)`.
/// Exact integer coefficients; supported for `l <= 12`.
pub fn w_poly(l: u32) -> Result<Vec<i128>> {
    if l < 1 || l > 12 {
        return Err(Error::Range(format!("w_poly: need 1 <= l <= 12, got {l}")));
    }
    let mut p: Vec<i128> = vec![1];
    for step in 1..l {
        let s = step as i128;
        let deg = p.len() - 1;
        let mut next = vec![0i128; deg + 2];
        // (1 + x) p'(x)
        for (k, &c) in p.iter().enumerate().skip(1) {
            let k_i = k as i128;
            next[k - 1] += k_i * c;
            next[k] += k_i * c;
        }
        // - (s x + 3 s - 1) p(x)
        for (k, &c) in p.iter().enumerate() {
            next[k + 1] -= s * c;
            next[k] -= (3 * s - 1) * c;
        }
        while next.len() > 1 && *next.last().unwrap() == 0 {
            next.pop();
        }
        p = next;
    }
    Ok(p)
}

/// Evaluate an integer-coefficient polynomial (ascending powers) at `x`.
pub fn poly_eval(coeffs: &[i128], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
}

/// The `j`-th derivative at zero of the exponent map in the Generalized
/// Poisson cumulant function:
/// `zeta_j0 = (1/theta) * sum_{l=1..j} S(j,l) (-theta)^l p_l(-theta) / (1-theta)^(2l-1)`.
///
/// For every `lambda > 0` and `j = 1..4`, `-lambda * zeta_j0(theta, j)`
/// equals the `j`-th GP cumulant; higher orders extend the same identity.
/// Undefined at `theta = 0` (Poisson callers use the constant-cumulant limit
/// instead).
pub fn zeta_j0(theta: f64, j: u32) -> Result<f64> {
    if theta == 0.0 {
        return Err(Error::Domain(
            "zeta_j0: theta = 0 is the Poisson limit; use the cumulants directly".into(),
        ));
    }
    if !(-1.0..1.0).contains(&theta) {
        return Err(Error::Domain(format!(
            "zeta_j0: theta must lie in (-1, 1), got {theta}"
        )));
    }
    if j < 1 || j > 8 {
        return Err(Error::Range(format!("zeta_j0: need 1 <= j <= 8, got {j}")));
    }
    let mut sum = 0.0;
    for l in 1..=j {
        let s = stirling2(j, l)? as f64;
        let p = poly_eval(&w_poly(l)?, -theta);
        sum += s * (-theta).powi(l as i32) * p / (1.0 - theta).powi(2 * l as i32 - 1);
    }
    Ok(sum / theta)
}
