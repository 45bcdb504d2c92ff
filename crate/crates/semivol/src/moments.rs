//! Reference moment vectors of the Lebesgue measure on simple bounding sets.
//!
//! The hierarchies compare an unknown measure against a measure whose moments
//! are known in closed form: Lebesgue measure on a box `[-a, a]^n` or on a
//! ball of radius `a`. Moments are kept *unnormalized* (the zeroth moment is
//! the set's volume), matching the bound semantics everywhere else in the
//! crate. Weighted variants `dν = w dx` are filled in by tensor quadrature.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use crate::poly::{basis_size, index_set, Basis, MultiIndex, MultiPoly};
use crate::quad::GaussRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundingKind {
    Box,
    Ball,
}

/// The simple compact set `B` carrying the reference measure: a centered box
/// `[-a, a]^n` or the centered ball of radius `a`, with `a` in `(0, 1]` so
/// that `B` sits inside the unit box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingSet {
    pub kind: BoundingKind,
    pub n: usize,
    pub a: f64,
}

impl BoundingSet {
    pub fn unit_box(n: usize) -> Self {
        BoundingSet {
            kind: BoundingKind::Box,
            n,
            a: 1.0,
        }
    }

    pub fn unit_ball(n: usize) -> Self {
        BoundingSet {
            kind: BoundingKind::Ball,
            n,
            a: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), MomentError> {
        if self.n == 0 {
            return Err(MomentError::Invalid("zero variables".into()));
        }
        if !(self.a > 0.0 && self.a <= 1.0) {
            return Err(MomentError::Invalid(format!(
                "bounding radius/half-width must lie in (0, 1], got {}",
                self.a
            )));
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        match self.kind {
            BoundingKind::Box => (2.0 * self.a).powi(self.n as i32),
            BoundingKind::Ball => {
                // vol = pi^(n/2) / Gamma(n/2 + 1) * a^n
                let n = self.n as u32;
                std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half(n + 2)
                    * self.a.powi(self.n as i32)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self.kind {
            BoundingKind::Box => x.iter().all(|&xi| xi.abs() <= self.a),
            BoundingKind::Ball => x.iter().map(|&xi| xi * xi).sum::<f64>() <= self.a * self.a,
        }
    }
}

#[derive(Debug)]
pub enum MomentError {
    Invalid(String),
    Unsupported(String),
    Io(std::io::Error),
    Format { line: usize, msg: String },
}

impl fmt::Display for MomentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MomentError::Invalid(msg) => write!(f, "invalid moment request: {msg}"),
            MomentError::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            MomentError::Io(e) => write!(f, "i/o error: {e}"),
            MomentError::Format { line, msg } => {
                write!(f, "moment csv format error at line {line}: {msg}")
            }
        }
    }
}

impl std::error::Error for MomentError {}

impl From<std::io::Error> for MomentError {
    fn from(e: std::io::Error) -> Self {
        MomentError::Io(e)
    }
}

/// Dense vector of moments `y_a = ∫ b_a dν` for every basis element of total
/// degree at most `degree`, stored in canonical index order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    n: usize,
    basis: Basis,
    degree: u32,
    indices: Vec<MultiIndex>,
    values: Vec<f64>,
    pos: HashMap<MultiIndex, usize>,
}

impl MomentVector {
    pub fn new(n: usize, basis: Basis, degree: u32, values: Vec<f64>) -> Result<Self, MomentError> {
        let indices = index_set(n, degree);
        if values.len() != indices.len() {
            return Err(MomentError::Invalid(format!(
                "expected {} values for n={n}, degree={degree}, got {}",
                indices.len(),
                values.len()
            )));
        }
        let pos = indices
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, a)| (a, i))
            .collect();
        Ok(MomentVector {
            n,
            basis,
            degree,
            indices,
            values,
            pos,
        })
    }

    /// Build from a per-index rule.
    pub fn tabulate<F>(n: usize, basis: Basis, degree: u32, mut f: F) -> Self
    where
        F: FnMut(&MultiIndex) -> f64,
    {
        let indices = index_set(n, degree);
        let values = indices.iter().map(|a| f(a)).collect();
        Self::new(n, basis, degree, values).expect("tabulate produces aligned values")
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mass of the underlying measure (the moment of the constant basis
    /// element, which is 1 in both supported bases).
    pub fn mass(&self) -> f64 {
        self.values[0]
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        self.pos.get(alpha).map(|&i| self.values[i])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.indices.iter().zip(self.values.iter().copied())
    }

    /// Apply the linear functional `y` to a polynomial in the same basis:
    /// `L_y(p) = Σ p_a y_a`. Errors if the polynomial reaches beyond the
    /// stored degree or uses a different basis.
    pub fn apply(&self, p: &MultiPoly) -> Result<f64, MomentError> {
        if p.basis() != self.basis {
            return Err(MomentError::Invalid(format!(
                "basis mismatch: polynomial in {}, moments in {}",
                p.basis(),
                self.basis
            )));
        }
        let mut acc = 0.0;
        for (a, c) in p.terms() {
            match self.get(a) {
                Some(y) => acc += c * y,
                None => {
                    return Err(MomentError::Invalid(format!(
                        "moment for index {a} (degree {}) not available at degree {}",
                        a.degree(),
                        self.degree
                    )))
                }
            }
        }
        Ok(acc)
    }

    /// Restriction to a smaller degree.
    pub fn truncate(&self, degree: u32) -> Result<MomentVector, MomentError> {
        if degree > self.degree {
            return Err(MomentError::Invalid(format!(
                "cannot truncate degree {} to {}",
                self.degree, degree
            )));
        }
        let keep = basis_size(self.n, degree);
        MomentVector::new(self.n, self.basis, degree, self.values[..keep].to_vec())
    }

    /// Re-express the same linear functional over another polynomial basis:
    /// the new entry at `b` is `L(b_b)` computed by expanding `b_b` in the
    /// source basis. Moment vectors transform contravariantly, so this is a
    /// conversion of values, not of coefficients.
    pub fn to_basis(&self, target: Basis) -> MomentVector {
        if target == self.basis {
            return self.clone();
        }
        MomentVector::tabulate(self.n, target, self.degree, |beta| {
            let elem = MultiPoly::from_terms(self.n, target, [(beta.clone(), 1.0)]);
            let expanded = elem.convert(self.basis);
            self.apply(&expanded)
                .expect("conversion stays within stored degree")
        })
    }

    /// Write the `alpha_1,...,alpha_n,value` CSV representation, rows in
    /// canonical index order.
    pub fn export_csv<W: Write>(&self, mut w: W) -> Result<(), MomentError> {
        let header: Vec<String> = (1..=self.n)
            .map(|i| format!("alpha_{i}"))
            .chain(std::iter::once("value".to_string()))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (a, v) in self.iter() {
            let mut row: Vec<String> = a.0.iter().map(|e| e.to_string()).collect();
            row.push(format!("{v}"));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Read a CSV produced by [`export_csv`](Self::export_csv). The rows must
    /// form a complete canonical enumeration for some degree. The file does
    /// not record a basis, so the caller states one.
    pub fn import_csv<R: BufRead>(r: R, basis: Basis) -> Result<MomentVector, MomentError> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| MomentError::Format {
                line: 1,
                msg: "empty file".into(),
            })
            .and_then(|(i, l)| l.map(|l| (i, l)).map_err(MomentError::from))?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 2 || cols.last() != Some(&"value") {
            return Err(MomentError::Format {
                line: 1,
                msg: "expected header alpha_1,...,alpha_n,value".into(),
            });
        }
        let n = cols.len() - 1;
        for (i, c) in cols.iter().take(n).enumerate() {
            if *c != format!("alpha_{}", i + 1) {
                return Err(MomentError::Format {
                    line: 1,
                    msg: format!("unexpected column name '{c}'"),
                });
            }
        }
        let mut rows: Vec<(MultiIndex, f64)> = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.trim().split(',').collect();
            if parts.len() != n + 1 {
                return Err(MomentError::Format {
                    line: i + 1,
                    msg: format!("expected {} fields, got {}", n + 1, parts.len()),
                });
            }
            let mut exps = Vec::with_capacity(n);
            for p in &parts[..n] {
                exps.push(p.trim().parse::<u32>().map_err(|e| MomentError::Format {
                    line: i + 1,
                    msg: format!("bad exponent '{p}': {e}"),
                })?);
            }
            let v = parts[n]
                .trim()
                .parse::<f64>()
                .map_err(|e| MomentError::Format {
                    line: i + 1,
                    msg: format!("bad value '{}': {e}", parts[n]),
                })?;
            rows.push((MultiIndex(exps), v));
        }
        let degree = rows.iter().map(|(a, _)| a.degree()).max().unwrap_or(0);
        let expected = index_set(n, degree);
        if rows.len() != expected.len() {
            return Err(MomentError::Format {
                line: 1,
                msg: format!(
                    "incomplete moment table: {} rows, need {} for degree {}",
                    rows.len(),
                    expected.len(),
                    degree
                ),
            });
        }
        for (row, want) in rows.iter().zip(&expected) {
            if &row.0 != want {
                return Err(MomentError::Format {
                    line: 1,
                    msg: format!("rows out of canonical order near index {}", row.0),
                });
            }
        }
        MomentVector::new(n, basis, degree, rows.into_iter().map(|(_, v)| v).collect())
    }
}

/// Moments of Lebesgue measure on the box `[-a, a]^n` up to total degree
/// `degree`, in the monomial basis: the moment at `a` is the product of
/// one-dimensional moments `2 a^(k+1) / (k+1)` for even `k`, zero otherwise.
pub fn box_moments(n: usize, degree: u32, a: f64) -> MomentVector {
    MomentVector::tabulate(n, Basis::Monomial, degree, |alpha| {
        alpha
            .0
            .iter()
            .map(|&k| {
                if k % 2 == 1 {
                    0.0
                } else {
                    2.0 * a.powi(k as i32 + 1) / (k as f64 + 1.0)
                }
            })
            .product()
    })
}

/// Moments of Lebesgue measure on the centered ball of radius `a`:
/// zero for any odd exponent, otherwise
/// `a^(n+|α|) · Π_i Γ((α_i+1)/2) / Γ((|α|+n+2)/2)`.
pub fn ball_moments(n: usize, degree: u32, a: f64) -> MomentVector {
    MomentVector::tabulate(n, Basis::Monomial, degree, |alpha| {
        if alpha.0.iter().any(|&k| k % 2 == 1) {
            return 0.0;
        }
        let total = alpha.degree();
        let num: f64 = alpha.0.iter().map(|&k| gamma_half(k + 1)).product();
        num / gamma_half(total + n as u32 + 2) * a.powi((n as u32 + total) as i32)
    })
}

/// `Γ(twice/2)` for positive half-integer arguments, exact up to round-off.
fn gamma_half(twice: u32) -> f64 {
    assert!(twice >= 1);
    let mut z = twice as f64 / 2.0;
    let mut acc = 1.0;
    // Γ(z) = (z-1) Γ(z-1), down to Γ(1) = 1 or Γ(1/2) = √π.
    while z > 1.0 {
        z -= 1.0;
        acc *= z;
    }
    if (twice & 1) == 1 {
        acc *= std::f64::consts::PI.sqrt();
    }
    acc
}

/// Moments of `dν = w dx` on `B` by tensor quadrature with `nodes` points per
/// axis. For a box this is Gauss–Legendre and is exact (to round-off) for
/// polynomial `w` whenever `2·nodes - 1 ≥ degree + deg w`; for a ball it is
/// a product rule in polar form, currently for `n = 2` only.
pub fn weighted_moments<F>(
    w: F,
    set: &BoundingSet,
    degree: u32,
    nodes: usize,
) -> Result<MomentVector, MomentError>
where
    F: Fn(&[f64]) -> f64,
{
    set.validate()?;
    if nodes < 2 {
        return Err(MomentError::Invalid("need at least 2 nodes per axis".into()));
    }
    match set.kind {
        BoundingKind::Box => {
            let rule = GaussRule::new(nodes).mapped(-set.a, set.a);
            let indices = index_set(set.n, degree);
            let mut values = vec![0.0; indices.len()];
            let mut x = vec![0.0; set.n];
            let mut weight_stack = vec![1.0; set.n + 1];
            // Walk the tensor grid depth-first; accumulate every monomial at
            // each node so the grid is traversed once.
            tensor_walk(&rule, set.n, 0, &mut x, &mut weight_stack, &mut |x, wt| {
                let wval = w(x) * wt;
                if wval == 0.0 {
                    return;
                }
                for (i, alpha) in indices.iter().enumerate() {
                    let mono: f64 = alpha
                        .0
                        .iter()
                        .zip(x)
                        .map(|(&e, &xi)| xi.powi(e as i32))
                        .product();
                    values[i] += wval * mono;
                }
            });
            MomentVector::new(set.n, Basis::Monomial, degree, values)
        }
        BoundingKind::Ball => {
            if set.n != 2 {
                return Err(MomentError::Unsupported(
                    "weighted moments on a ball are implemented for n = 2".into(),
                ));
            }
            // Polar product rule: Gauss–Legendre in r (with the r Jacobian)
            // and a trapezoid rule in the angle, exact for trigonometric
            // polynomials of degree < n_theta.
            let radial = GaussRule::new(nodes).mapped(0.0, set.a);
            let n_theta = (2 * nodes).max(degree as usize + 2);
            let indices = index_set(2, degree);
            let mut values = vec![0.0; indices.len()];
            for &(r, wr) in radial.pairs() {
                for k in 0..n_theta {
                    let theta = 2.0 * std::f64::consts::PI * k as f64 / n_theta as f64;
                    let x = [r * theta.cos(), r * theta.sin()];
                    let wt = wr * r * 2.0 * std::f64::consts::PI / n_theta as f64;
                    let wval = w(&x) * wt;
                    if wval == 0.0 {
                        continue;
                    }
                    for (i, alpha) in indices.iter().enumerate() {
                        values[i] +=
                            wval * x[0].powi(alpha.0[0] as i32) * x[1].powi(alpha.0[1] as i32);
                    }
                }
            }
            MomentVector::new(2, Basis::Monomial, degree, values)
        }
    }
}

fn tensor_walk<F>(
    rule: &GaussRule,
    n: usize,
    depth: usize,
    x: &mut Vec<f64>,
    wstack: &mut Vec<f64>,
    visit: &mut F,
) where
    F: FnMut(&[f64], f64),
{
    if depth == n {
        visit(x, wstack[n]);
        return;
    }
    for &(xi, wi) in rule.pairs() {
        x[depth] = xi;
        wstack[depth + 1] = wstack[depth] * wi;
        tensor_walk(rule, n, depth + 1, x, wstack, visit);
    }
}

/// The same linear functional as `base`, tabulated against the tensor
/// Chebyshev basis: entry at `a` equals `L(T_a)`.
pub fn chebyshev_moments(base: &MomentVector) -> MomentVector {
    base.to_basis(Basis::Chebyshev)
}
