//! Moment and localizing matrices as affine maps of a moment vector.
//!
//! A truncated moment vector `y` determines the symmetric matrix
//! `M_d(y)[i][j] = L_y(b_i b_j)` over the degree-`d` basis elements, and for
//! a polynomial `g` the localizing variant `L_y(g b_i b_j)`. Both are affine
//! in `y`, so they are stored as one sparse coefficient matrix per moment
//! index and instantiated against concrete moment vectors on demand.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::moments::MomentVector;
use crate::poly::{basis_product, index_set, Basis, MultiIndex, MultiPoly};

#[derive(Debug)]
pub enum StructureError {
    /// The hierarchy order is too small for the polynomial's degree.
    OrderTooSmall { required: u32, got: u32 },
    /// Instantiation against a moment vector that is too short or in the
    /// wrong basis.
    MomentMismatch(String),
}

impl fmt::Display for StructureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureError::OrderTooSmall { required, got } => write!(
                f,
                "hierarchy order {got} too small: the localizing block needs order >= {required}"
            ),
            StructureError::MomentMismatch(msg) => write!(f, "moment vector mismatch: {msg}"),
        }
    }
}

impl std::error::Error for StructureError {}

/// A symmetric-matrix-valued map `y -> Σ_a y_a A_a` over a fixed basis
/// enumeration. Coefficient matrices are stored sparsely (upper triangle).
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMatrixMap {
    n: usize,
    basis: Basis,
    size: usize,
    rows: Vec<MultiIndex>,
    /// For each moment index, the (row, col, weight) entries it scales;
    /// `row <= col`, the mirrored entry is implied.
    coeffs: BTreeMap<MultiIndex, Vec<(u32, u32, f64)>>,
}

impl AffineMatrixMap {
    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Matrix dimension (number of basis elements indexing rows/columns).
    pub fn size(&self) -> usize {
        self.size
    }

    /// Basis elements labelling the rows/columns.
    pub fn row_indices(&self) -> &[MultiIndex] {
        &self.rows
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&MultiIndex, &[(u32, u32, f64)])> {
        self.coeffs.iter().map(|(a, v)| (a, v.as_slice()))
    }

    /// Highest total degree of any moment index the map touches.
    pub fn max_moment_degree(&self) -> u32 {
        self.coeffs.keys().map(|a| a.degree()).max().unwrap_or(0)
    }

    /// Evaluate the map at a concrete moment vector.
    pub fn instantiate(&self, y: &MomentVector) -> Result<DMatrix<f64>, StructureError> {
        if y.basis() != self.basis {
            return Err(StructureError::MomentMismatch(format!(
                "map in {} basis, moments in {}",
                self.basis,
                y.basis()
            )));
        }
        if y.n_vars() != self.n {
            return Err(StructureError::MomentMismatch(format!(
                "map over {} variables, moments over {}",
                self.n,
                y.n_vars()
            )));
        }
        let mut m = DMatrix::zeros(self.size, self.size);
        for (a, entries) in &self.coeffs {
            let ya = y.get(a).ok_or_else(|| {
                StructureError::MomentMismatch(format!(
                    "moment vector of degree {} lacks index {a} (degree {})",
                    y.degree(),
                    a.degree()
                ))
            })?;
            if ya == 0.0 {
                continue;
            }
            for &(i, j, w) in entries {
                let (i, j) = (i as usize, j as usize);
                m[(i, j)] += w * ya;
                if i != j {
                    m[(j, i)] += w * ya;
                }
            }
        }
        Ok(m)
    }

    fn build(n: usize, basis: Basis, block_order: u32, weight: Option<&MultiPoly>) -> Self {
        let rows = index_set(n, block_order);
        let size = rows.len();
        let mut coeffs: BTreeMap<MultiIndex, Vec<(u32, u32, f64)>> = BTreeMap::new();
        for i in 0..size {
            for j in i..size {
                // Expand b_i * b_j (optionally times the weight polynomial)
                // in the working basis and scatter into the per-index slots.
                let pairs = basis_product(basis, &rows[i], &rows[j]);
                match weight {
                    None => {
                        for (idx, w) in pairs {
                            coeffs.entry(idx).or_default().push((i as u32, j as u32, w));
                        }
                    }
                    Some(g) => {
                        for (idx, w) in pairs {
                            for (ga, gc) in g.terms() {
                                for (final_idx, fw) in basis_product(basis, &idx, ga) {
                                    let entry = coeffs.entry(final_idx).or_default();
                                    push_merged(entry, i as u32, j as u32, w * gc * fw);
                                }
                            }
                        }
                    }
                }
            }
        }
        coeffs.retain(|_, v| {
            v.retain(|&(_, _, w)| w != 0.0);
            !v.is_empty()
        });
        for v in coeffs.values_mut() {
            v.sort_by_key(|&(i, j, _)| (i, j));
        }
        AffineMatrixMap {
            n,
            basis,
            size,
            rows,
            coeffs,
        }
    }
}

fn push_merged(entries: &mut Vec<(u32, u32, f64)>, i: u32, j: u32, w: f64) {
    if let Some(slot) = entries.iter_mut().find(|(a, b, _)| *a == i && *b == j) {
        slot.2 += w;
    } else {
        entries.push((i, j, w));
    }
}

/// The order-`d` moment matrix map in `n` variables: `y -> M_d(y)`.
pub fn moment_matrix_map(n: usize, d: u32, basis: Basis) -> AffineMatrixMap {
    AffineMatrixMap::build(n, basis, d, None)
}

/// The localizing map for `g` inside an order-`d` hierarchy:
/// `y -> M_{d-r}(g y)` with `r = ceil(deg g / 2)`. The block shrinks so the
/// entries stay within moment degree `2d`.
pub fn localizing_matrix_map(g: &MultiPoly, d: u32) -> Result<AffineMatrixMap, StructureError> {
    let r = g.degree().div_ceil(2);
    if d < r {
        return Err(StructureError::OrderTooSmall { required: r, got: d });
    }
    Ok(AffineMatrixMap::build(g.n_vars(), g.basis(), d - r, Some(g)))
}

/// Result of a dominance test between two moment vectors.
#[derive(Debug, Clone)]
pub struct DominanceReport {
    pub ok: bool,
    pub tolerance: f64,
    /// Minimum eigenvalue of each tested block, labelled for diagnostics.
    pub min_eigenvalues: Vec<(String, f64)>,
}

/// Check the order-`d` necessary conditions for `y1` to be dominated by `y2`
/// as measures on `{g_j >= 0}`: `M_d(y2 - y1)` and every localizing block of
/// the difference must be PSD up to `1e-8 * mass(y2)`.
pub fn dominance_check(
    y1: &MomentVector,
    y2: &MomentVector,
    gs: &[MultiPoly],
    d: u32,
) -> Result<DominanceReport, StructureError> {
    let tolerance = 1e-8 * y2.mass().abs();
    let mut min_eigenvalues = Vec::new();
    let mut push_block = |label: String, map: &AffineMatrixMap| -> Result<(), StructureError> {
        let m = map.instantiate(y2)? - map.instantiate(y1)?;
        min_eigenvalues.push((label, min_eigenvalue(&m)));
        Ok(())
    };
    push_block(
        "moment".to_string(),
        &moment_matrix_map(y1.n_vars(), d, y1.basis()),
    )?;
    for (j, g) in gs.iter().enumerate() {
        let map = localizing_matrix_map(g, d)?;
        push_block(format!("localizing g{}", j + 1), &map)?;
    }
    let ok = min_eigenvalues.iter().all(|&(_, e)| e >= -tolerance);
    Ok(DominanceReport {
        ok,
        tolerance,
        min_eigenvalues,
    })
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    nalgebra::SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    nalgebra::SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{ball_moments, box_moments};
    use crate::poly::parse_poly;

    /// Moments of Lebesgue measure restricted to `[lo, hi]`.
    fn segment_moments(lo: f64, hi: f64, degree: u32) -> MomentVector {
        MomentVector::tabulate(1, Basis::Monomial, degree, |a| {
            let k = a.0[0] as i32;
            (hi.powi(k + 1) - lo.powi(k + 1)) / (k as f64 + 1.0)
        })
    }

    #[test]
    fn moment_matrix_is_hankel_in_one_variable() {
        let map = moment_matrix_map(1, 3, Basis::Monomial);
        assert_eq!(map.size(), 4);
        // Each coefficient matrix has unit entries exactly on one
        // anti-diagonal: entry (i, j) responds to the moment of degree i+j.
        for (a, entries) in map.coefficients() {
            let k = a.degree();
            for &(i, j, w) in entries {
                assert_eq!(i + j, k);
                assert_eq!(w, 1.0);
            }
        }
        let y = box_moments(1, 6, 1.0);
        let m = map.instantiate(&y).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if (i + j) % 2 == 0 {
                    2.0 / (i + j + 1) as f64
                } else {
                    0.0
                };
                assert!((m[(i, j)] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn localizing_map_shrinks_and_matches_hand_expansion() {
        // g(x) = x/2 - x^2 at order d = 1: block order 0, single entry
        // L_y(g) = y_1/2 - y_2.
        let g = parse_poly("0.5*x1 - x1^2", 1).unwrap();
        let map = localizing_matrix_map(&g, 1).unwrap();
        assert_eq!(map.size(), 1);
        let y = segment_moments(0.0, 0.5, 2);
        let m = map.instantiate(&y).unwrap();
        let expect = 0.5 * y.get(&MultiIndex(vec![1])).unwrap() - y.get(&MultiIndex(vec![2])).unwrap();
        assert!((m[(0, 0)] - expect).abs() < 1e-15);
        // order below ceil(deg g / 2) is rejected with the minimum stated
        match localizing_matrix_map(&g, 0) {
            Err(StructureError::OrderTooSmall { required, got }) => {
                assert_eq!((required, got), (1, 0));
            }
            other => panic!("expected OrderTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn localizing_entries_match_direct_products() {
        // Generic check: entry (i,j) of the instantiated localizing matrix
        // equals L_y(g * b_i * b_j) computed through polynomial arithmetic.
        for basis in [Basis::Monomial, Basis::Chebyshev] {
            let g_mono = parse_poly("x1^3 + x1*x2^2 - x1^4 - x1^2*x2^2 - x2^4", 2).unwrap();
            let g = g_mono.convert(basis);
            let d = 3;
            let map = localizing_matrix_map(&g, d).unwrap();
            let y = {
                let base = box_moments(2, 2 * d, 1.0);
                match basis {
                    Basis::Monomial => base,
                    Basis::Chebyshev => base.to_basis(Basis::Chebyshev),
                }
            };
            let m = map.instantiate(&y).unwrap();
            let rows = map.row_indices();
            for (i, bi) in rows.iter().enumerate() {
                for (j, bj) in rows.iter().enumerate() {
                    let pi = MultiPoly::from_terms(2, basis, [(bi.clone(), 1.0)]);
                    let pj = MultiPoly::from_terms(2, basis, [(bj.clone(), 1.0)]);
                    let prod = g.multiply(&pi).unwrap().multiply(&pj).unwrap();
                    let direct = y.apply(&prod).unwrap();
                    assert!(
                        (m[(i, j)] - direct).abs() < 1e-12,
                        "basis {basis}: entry ({i},{j}) {} vs {}",
                        m[(i, j)],
                        direct
                    );
                }
            }
        }
    }

    #[test]
    fn reference_moment_matrices_are_psd() {
        for n in 1..=3 {
            let y = box_moments(n, 8, 1.0);
            let m = moment_matrix_map(n, 4, Basis::Monomial)
                .instantiate(&y)
                .unwrap();
            assert!(min_eigenvalue(&m) > -1e-12, "box n={n}");
        }
        let yb = ball_moments(2, 8, 1.0);
        let mb = moment_matrix_map(2, 4, Basis::Monomial)
            .instantiate(&yb)
            .unwrap();
        assert!(min_eigenvalue(&mb) > -1e-12);
        // Chebyshev-basis moment matrix of the box measure is PSD too.
        let yc = box_moments(2, 8, 1.0).to_basis(Basis::Chebyshev);
        let mc = moment_matrix_map(2, 4, Basis::Chebyshev)
            .instantiate(&yc)
            .unwrap();
        assert!(min_eigenvalue(&mc) > -1e-12);
    }

    #[test]
    fn dominance_accepts_the_restriction_and_rejects_the_reverse() {
        // The localizing polynomials describe the support of the *difference*
        // measure, here all of [-1, 1].
        let g_box = parse_poly("1 - x1^2", 1).unwrap();
        let y1 = segment_moments(0.0, 0.5, 8);
        let y2 = box_moments(1, 8, 1.0);
        let report = dominance_check(&y1, &y2, &[g_box.clone()], 3).unwrap();
        assert!(report.ok, "restriction should be dominated: {report:?}");
        let reversed = dominance_check(&y2, &y1, &[g_box], 3).unwrap();
        assert!(!reversed.ok);
        assert!(reversed
            .min_eigenvalues
            .iter()
            .any(|&(_, e)| e < -reversed.tolerance));
        // A measure that is *not* setwise below: Lebesgue on [0, 1/2] scaled
        // by 3 exceeds Lebesgue on [-1, 1] on small sets around x = 1/4.
        let y_big = MomentVector::tabulate(1, Basis::Monomial, 8, |a| {
            3.0 * y1.get(a).unwrap()
        });
        let report = dominance_check(&y_big, &y2, &[], 3).unwrap();
        assert!(!report.ok);
    }

    #[test]
    fn instantiate_rejects_short_or_mismatched_moments() {
        let map = moment_matrix_map(1, 3, Basis::Monomial);
        let y_short = box_moments(1, 4, 1.0);
        assert!(map.instantiate(&y_short).is_err());
        let y_cheb = box_moments(1, 6, 1.0).to_basis(Basis::Chebyshev);
        assert!(map.instantiate(&y_cheb).is_err());
    }
}
