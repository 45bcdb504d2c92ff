//! Conditioning of interval moment matrices across polynomial bases.
//!
//! The moment matrix of Lebesgue measure on `[-1, 1]` in a basis `b_0..b_d`
//! is the Gram matrix `∫ b_i b_j dx`. Expanding each `b_i` over Legendre
//! polynomials (which are orthogonal for this measure, `∫ P_j^2 = 2/(2j+1)`)
//! factors the matrix as `M = G D Gᵀ` with exactly representable `G`, and —
//! crucially — factors the inverse as `M⁻¹ = Hᵀ D⁻¹ H` where `H = G⁻¹` is
//! the reverse change of basis, also built directly by stable recurrences.
//! Both extreme eigenvalues are then the *largest* eigenvalues of explicitly
//! formed matrices, which double precision handles even when `cond(M)` is far
//! beyond `1/eps`; naively inverting `M` would produce pure noise instead.

use nalgebra::DMatrix;

use crate::poly::Basis;
use crate::structures::max_eigenvalue;

/// Coordinates of `x^0..x^d` in the Legendre basis (rows), via the
/// multiply-by-x action `x P_j = ((j+1) P_{j+1} + j P_{j-1}) / (2j+1)`.
/// All entries are nonnegative, so the recurrence does not cancel.
pub fn monomial_in_legendre(d: u32) -> DMatrix<f64> {
    build_rows(d, |prev_row| x_times_legendre(prev_row))
}

/// Coordinates of `P_0..P_d` in the monomial basis (rows), via the
/// three-term recurrence `(j+1) P_{j+1} = (2j+1) x P_j - j P_{j-1}`.
pub fn legendre_in_monomial(d: u32) -> DMatrix<f64> {
    orthogonal_rows(d, |j, pj, pjm1| {
        let mut next = shift_up(pj);
        for v in next.iter_mut() {
            *v *= (2 * j + 1) as f64 / (j + 1) as f64;
        }
        for (k, &c) in pjm1.iter().enumerate() {
            next[k] -= c * j as f64 / (j + 1) as f64;
        }
        next
    })
}

/// Coordinates of `T_0..T_d` in the Legendre basis (rows), via
/// `T_{k+1} = 2x T_k - T_{k-1}` with the multiply-by-x action above.
pub fn chebyshev_in_legendre(d: u32) -> DMatrix<f64> {
    orthogonal_rows(d, |_, tk, tkm1| {
        let mut next = x_times_legendre(tk);
        for v in next.iter_mut() {
            *v *= 2.0;
        }
        for (k, &c) in tkm1.iter().enumerate() {
            next[k] -= c;
        }
        next
    })
}

/// Coordinates of `P_0..P_d` in the Chebyshev basis (rows), using
/// `x T_k = (T_{k+1} + T_{|k-1|}) / 2`.
pub fn legendre_in_chebyshev(d: u32) -> DMatrix<f64> {
    orthogonal_rows(d, |j, pj, pjm1| {
        let mut next = x_times_chebyshev(pj);
        for v in next.iter_mut() {
            *v *= (2 * j + 1) as f64 / (j + 1) as f64;
        }
        for (k, &c) in pjm1.iter().enumerate() {
            next[k] -= c * j as f64 / (j + 1) as f64;
        }
        next
    })
}

fn x_times_legendre(c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; c.len() + 1];
    for (j, &cj) in c.iter().enumerate() {
        if cj == 0.0 {
            continue;
        }
        let jf = j as f64;
        out[j + 1] += cj * (jf + 1.0) / (2.0 * jf + 1.0);
        if j > 0 {
            out[j - 1] += cj * jf / (2.0 * jf + 1.0);
        }
    }
    out
}

fn x_times_chebyshev(c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; c.len() + 1];
    for (k, &ck) in c.iter().enumerate() {
        if ck == 0.0 {
            continue;
        }
        out[k + 1] += 0.5 * ck;
        if k >= 1 {
            out[k - 1] += 0.5 * ck;
        } else {
            out[1] += 0.5 * ck; // |k-1| = 1 when k = 0
        }
    }
    out
}

fn shift_up(c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; c.len() + 1];
    out[1..].copy_from_slice(c);
    out
}

/// Rows generated by `row_{k+1} = step(k, row_k, row_{k-1})`, starting from
/// the coordinates of the constant 1 and of `x` (both `[1]`-like in every
/// basis this module handles).
fn orthogonal_rows(d: u32, step: impl Fn(usize, &[f64], &[f64]) -> Vec<f64>) -> DMatrix<f64> {
    let size = d as usize + 1;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(size);
    rows.push(vec![1.0]);
    if d >= 1 {
        rows.push(vec![0.0, 1.0]);
    }
    for k in 1..d as usize {
        let next = step(k, &rows[k], &rows[k - 1]);
        rows.push(next);
    }
    rows_to_matrix(size, rows)
}

fn build_rows(d: u32, advance: impl Fn(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
    let size = d as usize + 1;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(size);
    rows.push(vec![1.0]);
    for k in 0..d as usize {
        let next = advance(&rows[k]);
        rows.push(next);
    }
    rows_to_matrix(size, rows)
}

fn rows_to_matrix(size: usize, rows: Vec<Vec<f64>>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(size, size);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            if j < size {
                m[(i, j)] = v;
            }
        }
    }
    m
}

/// Spectral condition number of the order-`d` interval moment matrix
/// `[∫ b_i b_j dx]` in the given basis, accurate even when it overwhelms
/// double precision (see the module docs for why).
pub fn interval_moment_matrix_cond(basis: Basis, d: u32) -> f64 {
    let (g, h) = match basis {
        Basis::Monomial => (monomial_in_legendre(d), legendre_in_monomial(d)),
        Basis::Chebyshev => (chebyshev_in_legendre(d), legendre_in_chebyshev(d)),
    };
    let size = d as usize + 1;
    let masses: Vec<f64> = (0..size).map(|j| 2.0 / (2 * j + 1) as f64).collect();
    let mut gd = g.clone();
    let mut hd = h.clone();
    for j in 0..size {
        for i in 0..size {
            gd[(i, j)] *= masses[j];
            hd[(j, i)] /= masses[j];
        }
    }
    let m = &gd * g.transpose();
    let m_inv = h.transpose() * hd;
    max_eigenvalue(&m) * max_eigenvalue(&m_inv)
}
