//! Floating-point helpers that work without `std`.

pub(crate) use libm::{atan2, cos, exp, expm1, fabs as abs, log, sin, sqrt};

/// `x^n` by repeated squaring.
pub(crate) fn powu(x: f64, n: u32) -> f64 {
    let mut base = x;
    let mut exp = n;
    let mut acc = 1.0;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}

const PAIRWISE_BLOCK: usize = 16;

/// Pairwise (cascade) summation with a fixed split order.
///
/// The result depends only on the slice contents and length, never on how
/// the caller partitioned the work that produced it.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        let mut acc = 0.0;
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations,
/// returned in ascending order. Only the upper triangle is read.
pub fn symmetric_eigenvalues<const N: usize>(matrix: &[[f64; N]; N]) -> [f64; N] {
    let mut a = *matrix;
    for p in 0..N {
        for q in p + 1..N {
            a[q][p] = a[p][q];
        }
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for p in 0..N {
            diag += a[p][p] * a[p][p];
            for q in p + 1..N {
                off += a[p][q] * a[p][q];
            }
        }
        if off == 0.0 || off <= 1e-36 * diag {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (abs(theta) + sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..N {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig = [0.0; N];
    for (i, e) in eig.iter_mut().enumerate() {
        *e = a[i][i];
    }
    eig.sort_by(f64::total_cmp);
    eig
}
