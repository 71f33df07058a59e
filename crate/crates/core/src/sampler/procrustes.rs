//! Orthogonal Procrustes alignment for latent coordinate configurations.
//!
//! Posterior draws of latent positions are identified only up to rotation
//! and reflection; aligning each draw to a common reference removes the
//! rotational wander before averaging or plotting.

use crate::error::{Error, Result};

/// Result of aligning an `N x d` configuration to a reference.
#[derive(Debug, Clone)]
pub struct ProcrustesAlignment {
    /// `x * rotation`, row-major `N x d`.
    pub rotated: Vec<f64>,
    /// The orthogonal `d x d` rotation (reflections allowed), row-major.
    pub rotation: Vec<f64>,
    /// Set when the cross-covariance is rank deficient; the alignment is
    /// still returned but the null directions are arbitrary.
    pub rank_deficient: bool,
}

/// Find the orthogonal matrix `R` minimizing `||x R - reference||_F` and
/// return the rotated configuration.
///
/// Both configurations are `N x d` row-major with `N >= 1` rows. The
/// solution is `R = U V'` from the singular value decomposition
/// `x' reference = U S V'`, computed here by Jacobi iteration on the small
/// `d x d` problem.
pub fn procrustes_align(
    x: &[f64],
    reference: &[f64],
    n: usize,
    d: usize,
) -> Result<ProcrustesAlignment> {
    if x.len() != n * d || reference.len() != n * d {
        return Err(Error::Dimension(format!(
            "procrustes_align: expected {n}x{d} configurations, got {} and {}",
            x.len(),
            reference.len()
        )));
    }
    if n == 0 || d == 0 {
        return Err(Error::Dimension("procrustes_align: empty configuration".into()));
    }

    // m = x' * reference (d x d).
    let mut m = vec![0.0; d * d];
    for row in 0..n {
        for a in 0..d {
            let xa = x[row * d + a];
            for b in 0..d {
                m[a * d + b] += xa * reference[row * d + b];
            }
        }
    }

    let (u, _sigma, v, rank_deficient) = svd_small(&m, d);

    // R = U V'.
    let mut rotation = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += u[a * d + k] * v[b * d + k];
            }
            rotation[a * d + b] = s;
        }
    }

    let mut rotated = vec![0.0; n * d];
    for row in 0..n {
        for b in 0..d {
            let mut s = 0.0;
            for a in 0..d {
                s += x[row * d + a] * rotation[a * d + b];
            }
            rotated[row * d + b] = s;
        }
    }

    Ok(ProcrustesAlignment {
        rotated,
        rotation,
        rank_deficient,
    })
}

/// SVD of a small `d x d` matrix via Jacobi eigendecomposition of `M'M`:
/// `M'M = V S^2 V'`, then `U = M V S^{-1}` with orthogonal completion of
/// any null columns. Returns `(U, S, V, rank_deficient)`.
fn svd_small(m: &[f64], d: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, bool) {
    // mtm = M' M, symmetric PSD.
    let mut mtm = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += m[k * d + a] * m[k * d + b];
            }
            mtm[a * d + b] = s;
        }
    }
    let (eigvals, v) = jacobi_eigen(&mut mtm, d);

    // Singular values, descending with matching columns of V.
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigvals[b].partial_cmp(&eigvals[a]).unwrap());
    let mut sigma = vec![0.0; d];
    let mut v_sorted = vec![0.0; d * d];
    for (col, &src) in order.iter().enumerate() {
        sigma[col] = eigvals[src].max(0.0).sqrt();
        for row in 0..d {
            v_sorted[row * d + col] = v[row * d + src];
        }
    }

    let tol = sigma[0].max(1e-300) * 1e-12;
    let rank_deficient = sigma.iter().any(|s| *s <= tol);

    // U columns: M v_k / sigma_k where defined.
    let mut u = vec![0.0; d * d];
    for col in 0..d {
        if sigma[col] > tol {
            for row in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += m[row * d + k] * v_sorted[k * d + col];
                }
                u[row * d + col] = s / sigma[col];
            }
        }
    }
    // Complete null columns to an orthonormal basis by Gram-Schmidt over
    // the standard basis.
    for col in 0..d {
        if sigma[col] > tol {
            continue;
        }
        for candidate in 0..d {
            let mut w = vec![0.0; d];
            w[candidate] = 1.0;
            for prev in 0..d {
                if prev != col {
                    let dot: f64 = (0..d).map(|r| w[r] * u[r * d + prev]).sum();
                    for r in 0..d {
                        w[r] -= dot * u[r * d + prev];
                    }
                }
            }
            let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for r in 0..d {
                    u[r * d + col] = w[r] / norm;
                }
                break;
            }
        }
    }
    (u, sigma, v_sorted, rank_deficient)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (destroys `a`).
/// Returns eigenvalues and the orthogonal eigenvector matrix (columns).
pub(crate) fn jacobi_eigen(a: &mut [f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += a[p * d + q] * a[p * d + q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eig = (0..d).map(|i| a[i * d + i]).collect();
    (eig, v)
}
