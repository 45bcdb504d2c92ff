//! Sparse multivariate polynomials over a choice of product basis.
//!
//! Polynomials are stored as coefficient maps keyed by exponent multi-indices.
//! Two bases are supported: plain monomials `x^a` and tensorized Chebyshev
//! polynomials `T_a(x) = T_{a_1}(x_1) * ... * T_{a_n}(x_n)`. Multi-indices are
//! ordered by total degree first, then reverse-lexicographically within a
//! degree, so `BTreeMap` iteration matches the canonical basis enumeration
//! used throughout the crate.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// Exponent vector of one basis element, e.g. `[2, 0, 1]` for `x1^2 * x3`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn n_vars(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|a| = a_1 + ... + a_n`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Coordinate-wise sum; the exponent of a monomial product.
    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.0.len(), other.0.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        // Graded order: lower total degree first; within a degree the index
        // with the larger leading exponents comes first, e.g. for n = 2:
        // (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &a) in self.0.iter().enumerate() {
            if a == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if a == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, a)?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// Number of multi-indices in `n` variables with total degree at most `d`,
/// i.e. `C(n + d, d)`.
pub fn basis_size(n: usize, d: u32) -> usize {
    let mut s: u128 = 1;
    for k in 1..=n as u128 {
        s = s * (d as u128 + k) / k;
    }
    s as usize
}

/// All multi-indices with `|a| <= d` in canonical (graded) order.
pub fn index_set(n: usize, d: u32) -> Vec<MultiIndex> {
    let mut out = Vec::with_capacity(basis_size(n, d));
    let mut cur = vec![0u32; n];
    for t in 0..=d {
        emit_degree(&mut out, &mut cur, 0, t);
    }
    out
}

fn emit_degree(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, rem: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = rem;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    // Larger exponent on the earlier coordinate sorts first.
    for v in (0..=rem).rev() {
        cur[pos] = v;
        emit_degree(out, cur, pos + 1, rem - v);
    }
    cur[pos] = 0;
}

/// Position of `alpha` in the canonical enumeration of its variable count.
pub fn rank(alpha: &MultiIndex) -> usize {
    let n = alpha.n_vars();
    let t = alpha.degree();
    // Everything of strictly smaller total degree comes first.
    let mut r = if t == 0 { 0 } else { basis_size(n, t - 1) };
    // Then count the degree-t indices that precede alpha: those sharing a
    // prefix but carrying a larger exponent at the first differing slot.
    let mut rem = t;
    for (i, &ai) in alpha.0.iter().enumerate().take(n.saturating_sub(1)) {
        for v in (ai + 1)..=rem {
            r += compositions(rem - v, n - i - 1);
        }
        rem -= ai;
    }
    r
}

/// Inverse of [`rank`]: the `k`-th multi-index in `n` variables.
pub fn unrank(n: usize, k: usize) -> MultiIndex {
    let mut t = 0u32;
    while basis_size(n, t) <= k {
        t += 1;
    }
    let mut pos = k - if t == 0 { 0 } else { basis_size(n, t - 1) };
    let mut coords = vec![0u32; n];
    let mut rem = t;
    for i in 0..n.saturating_sub(1) {
        for v in (0..=rem).rev() {
            let block = compositions(rem - v, n - i - 1);
            if pos < block {
                coords[i] = v;
                rem -= v;
                break;
            }
            pos -= block;
        }
    }
    if n > 0 {
        coords[n - 1] = rem;
    }
    MultiIndex(coords)
}

/// Number of ways to write `t` as an ordered sum of `parts` nonnegative
/// integers: `C(t + parts - 1, parts - 1)`.
fn compositions(t: u32, parts: usize) -> usize {
    if parts == 0 {
        return if t == 0 { 1 } else { 0 };
    }
    basis_size(parts - 1, t)
}

/// Which product basis a polynomial's coefficients refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Monomial,
    Chebyshev,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Monomial => write!(f, "monomial"),
            Basis::Chebyshev => write!(f, "chebyshev"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolyError {
    /// Arithmetic between polynomials expressed in different bases.
    BasisMismatch { left: Basis, right: Basis },
    /// Arithmetic between polynomials over different variable counts.
    VariableMismatch { left: usize, right: usize },
    /// An exponent exceeded the supported range.
    DegreeOverflow { limit: u32 },
    /// Text input that does not conform to the polynomial grammar.
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
}

impl fmt::Display for PolyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolyError::BasisMismatch { left, right } => {
                write!(f, "basis mismatch: {left} vs {right}")
            }
            PolyError::VariableMismatch { left, right } => {
                write!(f, "variable count mismatch: {left} vs {right}")
            }
            PolyError::DegreeOverflow { limit } => {
                write!(f, "degree overflow: exponents are limited to {limit}")
            }
            PolyError::Parse { line, col, msg } => {
                write!(f, "parse error at line {line}, column {col}: {msg}")
            }
        }
    }
}

impl std::error::Error for PolyError {}

/// Largest exponent accepted by the parser and arithmetic routines.
pub const MAX_EXPONENT: u32 = 10_000;

/// A sparse polynomial: finitely many `(multi-index, coefficient)` pairs in a
/// fixed basis. Exact zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    n: usize,
    basis: Basis,
    terms: BTreeMap<MultiIndex, f64>,
}

impl MultiPoly {
    pub fn zero(n: usize, basis: Basis) -> Self {
        MultiPoly {
            n,
            basis,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, basis: Basis, c: f64) -> Self {
        let mut p = Self::zero(n, basis);
        p.add_term(MultiIndex::zero(n), c);
        p
    }

    pub fn one(n: usize, basis: Basis) -> Self {
        Self::constant(n, basis, 1.0)
    }

    /// The monomial (or Chebyshev) `x_i` — exponent 1 on variable `var`
    /// (0-based), coefficient 1.
    pub fn var(n: usize, basis: Basis, var: usize) -> Self {
        assert!(var < n, "variable index out of range");
        let mut e = vec![0u32; n];
        e[var] = 1;
        let mut p = Self::zero(n, basis);
        p.add_term(MultiIndex(e), 1.0);
        p
    }

    pub fn from_terms<I>(n: usize, basis: Basis, terms: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut p = Self::zero(n, basis);
        for (a, c) in terms {
            assert_eq!(a.n_vars(), n, "term arity mismatch");
            p.add_term(a, c);
        }
        p
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(a, &c)| (a, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    /// Total degree; zero polynomial reports 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|a| a.degree()).max().unwrap_or(0)
    }

    fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(alpha);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn check_compat(&self, other: &MultiPoly) -> Result<(), PolyError> {
        if self.basis != other.basis {
            return Err(PolyError::BasisMismatch {
                left: self.basis,
                right: other.basis,
            });
        }
        if self.n != other.n {
            return Err(PolyError::VariableMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check_compat(other)?;
        let mut out = self.clone();
        for (a, &c) in &other.terms {
            out.add_term(a.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> MultiPoly {
        let mut out = MultiPoly::zero(self.n, self.basis);
        for (a, &c) in &self.terms {
            out.add_term(a.clone(), c * s);
        }
        out
    }

    /// Product with exact linearization in the polynomial's own basis.
    pub fn multiply(&self, other: &MultiPoly) -> Result<MultiPoly, PolyError> {
        self.check_compat(other)?;
        let mut out = MultiPoly::zero(self.n, self.basis);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                if a.degree().saturating_add(b.degree()) > MAX_EXPONENT {
                    return Err(PolyError::DegreeOverflow {
                        limit: MAX_EXPONENT,
                    });
                }
                for (g, w) in basis_product(self.basis, a, b) {
                    out.add_term(g, w * ca * cb);
                }
            }
        }
        Ok(out)
    }

    /// `self^k` by repeated multiplication; `k = 0` gives the constant 1.
    pub fn pow(&self, k: u32) -> Result<MultiPoly, PolyError> {
        let mut out = MultiPoly::one(self.n, self.basis);
        for _ in 0..k {
            out = out.multiply(self)?;
        }
        Ok(out)
    }

    /// Re-express the polynomial in `target`, exactly up to round-off.
    pub fn convert(&self, target: Basis) -> MultiPoly {
        if self.basis == target {
            return self.clone();
        }
        let mut out = MultiPoly::zero(self.n, target);
        for (a, &c) in &self.terms {
            // Expand one basis element coordinate-by-coordinate and take the
            // tensor product of the 1-d expansions.
            let per_coord: Vec<Vec<(u32, f64)>> = a
                .0
                .iter()
                .map(|&k| match self.basis {
                    Basis::Monomial => power_in_chebyshev(k),
                    Basis::Chebyshev => chebyshev_in_powers(k),
                })
                .collect();
            let mut acc: Vec<(Vec<u32>, f64)> = vec![(Vec::with_capacity(self.n), c)];
            for coord in &per_coord {
                let mut next = Vec::with_capacity(acc.len() * coord.len());
                for (prefix, w) in &acc {
                    for &(e, ce) in coord {
                        let mut p = prefix.clone();
                        p.push(e);
                        next.push((p, w * ce));
                    }
                }
                acc = next;
            }
            for (e, w) in acc {
                out.add_term(MultiIndex(e), w);
            }
        }
        out
    }

    /// Evaluate at a point (len must equal the variable count).
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n, "point dimension mismatch");
        match self.basis {
            Basis::Monomial => self
                .terms
                .iter()
                .map(|(a, c)| {
                    c * a
                        .0
                        .iter()
                        .zip(x)
                        .map(|(&e, &xi)| xi.powi(e as i32))
                        .product::<f64>()
                })
                .sum(),
            Basis::Chebyshev => {
                // One Chebyshev value table per coordinate, up to the degree
                // actually used there.
                let mut tables: Vec<Vec<f64>> = Vec::with_capacity(self.n);
                for i in 0..self.n {
                    let dmax = self.terms.keys().map(|a| a.0[i]).max().unwrap_or(0);
                    tables.push(chebyshev_values(x[i], dmax));
                }
                self.terms
                    .iter()
                    .map(|(a, c)| {
                        c * a
                            .0
                            .iter()
                            .enumerate()
                            .map(|(i, &e)| tables[i][e as usize])
                            .product::<f64>()
                    })
                    .sum()
            }
        }
    }

    /// Largest absolute coefficient; 0 for the zero polynomial.
    pub fn coeff_inf_norm(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Sum of absolute coefficients.
    pub fn coeff_l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (a, c)) in self.terms.iter().enumerate() {
            if k == 0 {
                if c.is_sign_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c.is_sign_negative() { "-" } else { "+" })?;
            }
            let mag = c.abs();
            let name = match self.basis {
                Basis::Monomial => format!("{}", a),
                Basis::Chebyshev if a.is_zero() => "1".to_string(),
                Basis::Chebyshev => format!(
                    "T[{}]",
                    a.0.iter()
                        .map(|e| e.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                ),
            };
            if name == "1" {
                write!(f, "{}", mag)?;
            } else if mag == 1.0 {
                write!(f, "{}", name)?;
            } else {
                write!(f, "{}*{}", mag, name)?;
            }
        }
        Ok(())
    }
}

/// Expansion of the product `b_a * b_b` of two basis elements as a short list
/// of `(index, weight)` pairs in the same basis.
///
/// Monomials multiply to a single monomial. Tensor Chebyshev elements follow
/// `T_a T_b = (T_{a+b} + T_{|a-b|}) / 2` in each coordinate, giving up to
/// `2^n` terms with weight `2^-n` before merging.
pub fn basis_product(basis: Basis, a: &MultiIndex, b: &MultiIndex) -> Vec<(MultiIndex, f64)> {
    match basis {
        Basis::Monomial => vec![(a.plus(b), 1.0)],
        Basis::Chebyshev => {
            let n = a.n_vars();
            let w = 0.5f64.powi(n as i32);
            let mut out: Vec<(MultiIndex, f64)> = Vec::with_capacity(1 << n);
            let mut stack: Vec<(Vec<u32>, usize)> = vec![(Vec::with_capacity(n), 0)];
            while let Some((prefix, i)) = stack.pop() {
                if i == n {
                    let idx = MultiIndex(prefix);
                    match out.iter_mut().find(|(g, _)| *g == idx) {
                        Some((_, acc)) => *acc += w,
                        None => out.push((idx, w)),
                    }
                    continue;
                }
                let (ai, bi) = (a.0[i], b.0[i]);
                let mut hi = prefix.clone();
                hi.push(ai + bi);
                stack.push((hi, i + 1));
                let mut lo = prefix;
                lo.push(ai.abs_diff(bi));
                stack.push((lo, i + 1));
            }
            out
        }
    }
}

/// `T_0(x) .. T_d(x)` by the three-term recurrence.
pub fn chebyshev_values(x: f64, d: u32) -> Vec<f64> {
    let mut t = Vec::with_capacity(d as usize + 1);
    t.push(1.0);
    if d >= 1 {
        t.push(x);
    }
    for k in 2..=d as usize {
        t.push(2.0 * x * t[k - 1] - t[k - 2]);
    }
    t
}

/// Coefficients of `x^k` in the Chebyshev basis: pairs `(j, c_j)` with
/// `x^k = sum c_j T_j`. Built by repeated use of
/// `x T_j = (T_{j+1} + T_{|j-1|}) / 2`.
fn power_in_chebyshev(k: u32) -> Vec<(u32, f64)> {
    let mut coeffs = vec![0.0f64; k as usize + 1];
    coeffs[0] = 1.0;
    for step in 0..k as usize {
        let mut next = vec![0.0f64; step + 2];
        for (j, &c) in coeffs.iter().enumerate().take(step + 1) {
            if c == 0.0 {
                continue;
            }
            if j == 0 {
                next[1] += c;
            } else {
                next[j + 1] += 0.5 * c;
                next[j - 1] += 0.5 * c;
            }
        }
        coeffs = next;
    }
    coeffs
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c != 0.0)
        .map(|(j, c)| (j as u32, c))
        .collect()
}

/// Coefficients of `T_k` in the monomial basis via the three-term recurrence.
fn chebyshev_in_powers(k: u32) -> Vec<(u32, f64)> {
    let mut prev = vec![1.0f64]; // T_0
    if k == 0 {
        return vec![(0, 1.0)];
    }
    let mut cur = vec![0.0, 1.0]; // T_1
    for _ in 2..=k {
        let mut next = vec![0.0f64; cur.len() + 1];
        for (j, &c) in cur.iter().enumerate() {
            next[j + 1] += 2.0 * c;
        }
        for (j, &c) in prev.iter().enumerate() {
            next[j] -= c;
        }
        prev = cur;
        cur = next;
    }
    cur.into_iter()
        .enumerate()
        .filter(|&(_, c)| c != 0.0)
        .map(|(j, c)| (j as u32, c))
        .collect()
}

// ---------------------------------------------------------------------------
// Text format: sums of terms `c * x1^a1 * ... * xn^an`.
// ---------------------------------------------------------------------------

/// Parse a polynomial in the plain-text monomial grammar, e.g.
/// `"0.5*x1 - x1^2"` or `"-1*x1^6 + 4*x1^2*x2^2"`. Coefficients may be
/// omitted (`x1*x2` means `1*x1*x2`), `*` between coefficient and variables
/// is optional, and whitespace is free-form.
pub fn parse_poly(input: &str, n: usize) -> Result<MultiPoly, PolyError> {
    Parser::new(input, n).parse()
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    n: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, n: usize) -> Self {
        Parser {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            n,
            src,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, PolyError> {
        Err(PolyError::Parse {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn parse(mut self) -> Result<MultiPoly, PolyError> {
        if self.src.trim().is_empty() {
            return self.err("empty polynomial");
        }
        let mut poly = MultiPoly::zero(self.n, Basis::Monomial);
        let mut sign = 1.0;
        self.skip_ws();
        if let Some(c) = self.peek() {
            if c == '+' || c == '-' {
                sign = if c == '-' { -1.0 } else { 1.0 };
                self.bump();
            }
        }
        loop {
            let (alpha, coeff) = self.parse_term()?;
            poly.add_term(alpha, sign * coeff);
            self.skip_ws();
            match self.peek() {
                None => break,
                Some('+') => {
                    sign = 1.0;
                    self.bump();
                }
                Some('-') => {
                    sign = -1.0;
                    self.bump();
                }
                Some(c) => return self.err(format!("expected '+' or '-', found '{c}'")),
            }
        }
        Ok(poly)
    }

    /// One term: optional coefficient, then zero or more variable powers
    /// joined by `*`.
    fn parse_term(&mut self) -> Result<(MultiIndex, f64), PolyError> {
        self.skip_ws();
        let mut coeff = 1.0;
        let mut saw_factor = false;
        if matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
            coeff = self.parse_number()?;
            saw_factor = true;
        }
        let mut exps = vec![0u32; self.n];
        loop {
            self.skip_ws();
            let mark = (self.pos, self.line, self.col);
            if self.peek() == Some('*') {
                self.bump();
                self.skip_ws();
            } else if saw_factor && self.peek().is_some_and(|c| c == 'x') {
                // implicit product like "2x1" — tolerated
            } else if saw_factor {
                break;
            }
            match self.peek() {
                Some('x') => {
                    self.bump();
                    let var = self.parse_uint("variable index")?;
                    if var == 0 || var as usize > self.n {
                        return self.err(format!(
                            "unknown variable x{var} (problem has {} variable{})",
                            self.n,
                            if self.n == 1 { "" } else { "s" }
                        ));
                    }
                    let mut e: u32 = 1;
                    self.skip_ws();
                    if self.peek() == Some('^') {
                        self.bump();
                        self.skip_ws();
                        if self.peek() == Some('-') {
                            return self.err("negative exponents are not allowed");
                        }
                        e = self.parse_uint("exponent")?;
                    }
                    let slot = &mut exps[var as usize - 1];
                    *slot = slot.checked_add(e).filter(|&v| v <= MAX_EXPONENT).ok_or(
                        PolyError::DegreeOverflow {
                            limit: MAX_EXPONENT,
                        },
                    )?;
                    saw_factor = true;
                }
                Some(c) if c.is_ascii_digit() || c == '.' => {
                    // A number after '*': fold it into the coefficient.
                    if mark.0 == self.pos && !saw_factor {
                        return self.err(format!("unexpected character '{c}'"));
                    }
                    if mark.0 == self.pos {
                        // No '*' consumed: this digit starts a new token that
                        // cannot legally follow a factor.
                        return self.err(format!("expected '+', '-' or '*', found '{c}'"));
                    }
                    coeff *= self.parse_number()?;
                    saw_factor = true;
                }
                _ => {
                    if mark.0 != self.pos {
                        (self.pos, self.line, self.col) = mark;
                        if !saw_factor {
                            return self.err("expected a term");
                        }
                    }
                    break;
                }
            }
        }
        if !saw_factor {
            return match self.peek() {
                Some(c) => self.err(format!("unexpected character '{c}'")),
                None => self.err("unexpected end of input"),
            };
        }
        Ok((MultiIndex(exps), coeff))
    }

    fn parse_number(&mut self) -> Result<f64, PolyError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
            self.bump();
        }
        if matches!(self.peek(), Some('e') | Some('E')) {
            let save = self.pos;
            self.bump();
            if matches!(self.peek(), Some('+') | Some('-')) {
                self.bump();
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
            } else {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => self.err(format!("invalid number '{text}'")),
        }
    }

    fn parse_uint(&mut self, what: &str) -> Result<u32, PolyError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        if start == self.pos {
            return self.err(format!("expected {what}"));
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<u32>()
            .ok()
            .filter(|&v| v <= MAX_EXPONENT)
            .ok_or(PolyError::DegreeOverflow {
                limit: MAX_EXPONENT,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_poly(rng: &mut impl Rng, n: usize, basis: Basis, d: u32, terms: usize) -> MultiPoly {
        let idx = index_set(n, d);
        let mut p = MultiPoly::zero(n, basis);
        for _ in 0..terms {
            let a = idx[rng.gen_range(0..idx.len())].clone();
            p = p
                .add(&MultiPoly::from_terms(
                    n,
                    basis,
                    [(a, rng.gen_range(-1.0..1.0))],
                ))
                .unwrap();
        }
        p
    }

    #[test]
    fn index_set_counts_and_order() {
        assert_eq!(index_set(2, 20).len(), 231);
        assert_eq!(index_set(3, 4).len(), 35);
        let head: Vec<Vec<u32>> = index_set(2, 2).into_iter().map(|a| a.0).collect();
        assert_eq!(
            head,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
    }

    #[test]
    fn rank_unrank_inverse() {
        for n in 1..=3 {
            for (k, alpha) in index_set(n, 6).iter().enumerate() {
                assert_eq!(rank(alpha), k, "rank of {alpha:?}");
                assert_eq!(&unrank(n, k), alpha, "unrank of {k} in {n} vars");
            }
        }
    }

    #[test]
    fn monomial_product_and_eval() {
        // g(x) = x/2 - x^2 at 1/4 is 1/16.
        let g = parse_poly("0.5*x1 - x1^2", 1).unwrap();
        assert!((g.eval(&[0.25]) - 1.0 / 16.0).abs() < 1e-15);
        let g2 = g.multiply(&g).unwrap();
        assert!((g2.eval(&[0.25]) - 1.0 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_product_linearizes() {
        let t1 = MultiPoly::var(1, Basis::Chebyshev, 0);
        let p = t1.multiply(&t1).unwrap();
        // T1*T1 = T2/2 + T0/2
        assert!((p.coeff(&MultiIndex(vec![2])) - 0.5).abs() < 1e-15);
        assert!((p.coeff(&MultiIndex(vec![0])) - 0.5).abs() < 1e-15);
        assert_eq!(p.num_terms(), 2);
    }

    #[test]
    fn conversion_examples() {
        // x^2 = T0/2 + T2/2
        let x2 = parse_poly("x1^2", 1).unwrap().convert(Basis::Chebyshev);
        assert!((x2.coeff(&MultiIndex(vec![0])) - 0.5).abs() < 1e-15);
        assert!((x2.coeff(&MultiIndex(vec![2])) - 0.5).abs() < 1e-15);
        // T3 = 4x^3 - 3x
        let t3 = MultiPoly::from_terms(1, Basis::Chebyshev, [(MultiIndex(vec![3]), 1.0)])
            .convert(Basis::Monomial);
        assert_eq!(t3.coeff(&MultiIndex(vec![3])), 4.0);
        assert_eq!(t3.coeff(&MultiIndex(vec![1])), -3.0);
    }

    #[test]
    fn conversion_round_trip_is_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [5u32, 12, 20, 30] {
            let p = random_poly(&mut rng, 1, Basis::Monomial, d, 8);
            let back = p.convert(Basis::Chebyshev).convert(Basis::Monomial);
            let diff = p.sub(&back).unwrap();
            assert!(
                diff.coeff_inf_norm() <= 1e-10 * (1.0 + p.coeff_inf_norm()),
                "round-trip error {} at degree {d}",
                diff.coeff_inf_norm()
            );
        }
    }

    #[test]
    fn product_matches_pointwise_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..200 {
            let n = rng.gen_range(1..=3);
            let basis = if trial % 2 == 0 {
                Basis::Monomial
            } else {
                Basis::Chebyshev
            };
            let a = random_poly(&mut rng, n, basis, 4, 5);
            let b = random_poly(&mut rng, n, basis, 4, 5);
            let ab = a.multiply(&b).unwrap();
            let tol = 1e-9 * (1.0 + a.coeff_l1_norm() * b.coeff_l1_norm());
            for _ in 0..50 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let err = (ab.eval(&x) - a.eval(&x) * b.eval(&x)).abs();
                assert!(err <= tol, "trial {trial}: error {err} exceeds {tol}");
            }
        }
    }

    #[test]
    fn mixed_basis_product_is_rejected() {
        let a = MultiPoly::one(1, Basis::Monomial);
        let b = MultiPoly::one(1, Basis::Chebyshev);
        assert!(matches!(
            a.multiply(&b),
            Err(PolyError::BasisMismatch { .. })
        ));
    }

    #[test]
    fn parser_accepts_the_fixture_constraints() {
        let bean = parse_poly(
            "x1^3 + x1*x2^2 - x1^4 - x1^2*x2^2 - x2^4",
            2,
        )
        .unwrap();
        assert_eq!(bean.degree(), 4);
        assert_eq!(bean.num_terms(), 5);
        let folium = parse_poly(
            "-1*x1^6 - 3*x1^4*x2^2 - 3*x1^2*x2^4 - x2^6 + 4*x1^2*x2^2",
            2,
        )
        .unwrap();
        assert_eq!(folium.degree(), 6);
        // value at (1/2, 1/2): -(1/2)^6*8... check against direct arithmetic
        let r2: f64 = 0.25 + 0.25;
        let expect = -(r2.powi(3)) + 4.0 * 0.25 * 0.25;
        assert!((folium.eval(&[0.5, 0.5]) - expect).abs() < 1e-15);
    }

    #[test]
    fn parser_reports_position() {
        match parse_poly("0.5*x1 - x3", 2) {
            Err(PolyError::Parse { line, col, msg }) => {
                assert_eq!(line, 1);
                assert!(col >= 10, "column {col}");
                assert!(msg.contains("x3"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse_poly("x1^-1", 1),
            Err(PolyError::Parse { .. })
        ));
        assert!(matches!(
            parse_poly("x1^20000", 1),
            Err(PolyError::DegreeOverflow { .. }) | Err(PolyError::Parse { .. })
        ));
        assert!(parse_poly("", 1).is_err());
        assert!(parse_poly("2*", 1).is_err());
    }

    #[test]
    fn parser_handles_plain_constants_and_signs() {
        let p = parse_poly("1", 2).unwrap();
        assert_eq!(p.coeff(&MultiIndex::zero(2)), 1.0);
        let q = parse_poly("-2.5e-1*x1 + 1 - x2", 2).unwrap();
        assert_eq!(q.coeff(&MultiIndex(vec![1, 0])), -0.25);
        assert_eq!(q.coeff(&MultiIndex(vec![0, 1])), -1.0);
    }
}
