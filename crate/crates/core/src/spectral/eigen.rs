// Dense symmetric eigensolver.
//
// Householder reduction to tridiagonal form followed by the implicit-shift QL
// iteration, after the Algol procedures tred2/tql2 (Bowdler, Martin, Reinsch,
// Wilkinson, Handbook for Automatic Computation Vol. II) as they appear in
// EISPACK and JAMA. Small matrices fall back to cyclic Jacobi when QL fails
// to converge.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// QL iterations allowed per eigenvalue.
const QL_MAX_ITER: usize = 50;
/// Jacobi sweeps before giving up.
const JACOBI_MAX_SWEEPS: usize = 50;
/// Largest size where the Jacobi fallback is attempted.
const JACOBI_FALLBACK_MAX_N: usize = 64;

/// Eigenvalues ascending and orthonormal eigenvectors as columns.
///
/// Every eigenvector is sign-normalised so its largest-magnitude entry
/// (first one on ties) is positive.
pub fn symmetric_eigen(m: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let (n, c) = m.dim();
    if n != c {
        return Err(Error::domain(format!("matrix is {n}x{c}, expected square")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("matrix has non-finite entries"));
    }
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    let (mut values, mut vectors) = match householder_ql(m) {
        Ok(pair) => pair,
        Err(err) if n <= JACOBI_FALLBACK_MAX_N => match jacobi_eigen(m) {
            Ok(pair) => pair,
            Err(_) => return Err(err),
        },
        Err(err) => return Err(err),
    };
    sort_ascending(&mut values, &mut vectors);
    normalise_signs(&mut vectors);
    Ok((values, vectors))
}

fn sort_ascending(values: &mut Array1<f64>, vectors: &mut Array2<f64>) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let v = values.clone();
    let q = vectors.clone();
    for (new, &old) in order.iter().enumerate() {
        values[new] = v[old];
        vectors.column_mut(new).assign(&q.column(old));
    }
}

fn normalise_signs(vectors: &mut Array2<f64>) {
    for mut col in vectors.columns_mut() {
        let mut best = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
}

/// tred2 + tql2. Returns unsorted eigenpairs.
fn householder_ql(m: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = m.nrows();
    let mut v = m.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    // tql2 rotates eigenvector columns; work on the transpose so each rotation
    // touches two contiguous rows.
    let mut z = v.t().as_standard_layout().to_owned();
    tridiagonal_ql(&mut z, &mut d, &mut e)?;
    Ok((Array1::from(d), z.t().to_owned()))
}

#[allow(clippy::needless_range_loop)]
fn tridiagonalize(v: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[[n - 1, j]];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[[i - 1, j]];
                v[[i, j]] = 0.0;
                v[[j, i]] = 0.0;
            }
        } else {
            // Householder vector
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[[j, i]] = f;
                g = e[j] + v[[j, j]] * f;
                for k in (j + 1)..i {
                    g += v[[k, j]] * d[k];
                    e[k] += v[[k, j]] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[[k, j]] -= f * e[k] + g * d[k];
                }
                d[j] = v[[i - 1, j]];
                v[[i, j]] = 0.0;
            }
        }
        d[i] = h;
    }

    // accumulate transformations
    for i in 0..(n - 1) {
        v[[n - 1, i]] = v[[i, i]];
        v[[i, i]] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[[k, i + 1]] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[[k, i + 1]] * v[[k, j]];
                }
                for k in 0..=i {
                    v[[k, j]] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[[k, i + 1]] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[[n - 1, j]];
        v[[n - 1, j]] = 0.0;
    }
    v[[n - 1, n - 1]] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)`; `z` holds eigenvectors as rows.
#[allow(clippy::many_single_char_names)]
fn tridiagonal_ql(z: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITER {
                    return Err(Error::Numerical {
                        message: format!("QL iteration did not converge for eigenvalue {l}"),
                        layer: None,
                        residual: Some(e[l].abs()),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (mut lo, mut hi) = z.multi_slice_mut((
                        ndarray::s![i, ..],
                        ndarray::s![i + 1, ..],
                    ));
                    for (zi, zi1) in lo.iter_mut().zip(hi.iter_mut()) {
                        let t = *zi1;
                        *zi1 = s * *zi + c * t;
                        *zi = c * *zi - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Cyclic Jacobi rotations. Eigenvectors in columns, unsorted.
pub(crate) fn jacobi_eigen(m: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = Array2::<f64>::eye(n);
    let total: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * total.max(f64::MIN_POSITIVE) {
            return Ok((a.diag().to_owned(), v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::numerical(format!(
        "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps"
    )))
}
