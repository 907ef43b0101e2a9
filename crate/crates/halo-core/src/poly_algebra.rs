//! Sparse complex polynomials in six phase-space variables.
//!
//! Variables are ordered as three coordinates followed by their three
//! conjugate momenta, `(v0, v1, v2, v3, v4, v5) = (q1, q2, q3, p1, p2, p3)`,
//! so that variable `i < 3` is canonically conjugate to variable `i + 3`.
//! In the real local chart the same slots read `(x, y, z, px, py, pz)`.
//!
//! Every polynomial carries a [`Chart`] tag identifying the coordinate system
//! its variables refer to; binary operations between polynomials in different
//! charts are rejected so that a diagonalized object can never be silently
//! combined with a real-chart one.
//!
//! Polynomials are stored degree-bucketed: one hash map of
//! `exponent vector -> Complex64` per total degree, which makes graded access
//! (a pervasive pattern in normal-form computations) proportional to the
//! number of terms of that degree only.

use num_complex::Complex64;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::hash::{BuildHasherDefault, Hash, Hasher};
use thiserror::Error;

/// Number of phase-space variables.
pub const NVARS: usize = 6;

/// Errors raised by polynomial-algebra operations.
#[derive(Debug, Error)]
pub enum PolyError {
    /// A binary operation received operands tagged with different charts.
    #[error("chart mismatch: left operand is in chart {left:?}, right operand in chart {right:?}")]
    ChartMismatch {
        /// Chart of the left operand.
        left: Chart,
        /// Chart of the right operand.
        right: Chart,
    },
    /// A product would create an exponent beyond the representable range.
    #[error("exponent overflow: monomial degree {degree} exceeds the representable maximum 255")]
    ExponentOverflow {
        /// Total degree of the offending product.
        degree: u32,
    },
    /// A Lie transform with a quadratic generator failed to converge.
    #[error("Lie series did not converge within {max_terms} terms (last term norm {last_norm:.3e})")]
    LieSeriesDivergent {
        /// Number of terms evaluated before giving up.
        max_terms: usize,
        /// Norm of the last evaluated term.
        last_norm: f64,
    },
}

/// Coordinate system a polynomial's variables refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum Chart {
    /// Real translated and scaled local variables `(x, y, z, px, py, pz)`.
    Original,
    /// Complex eigenbasis variables `(q1, q2, q3, p1, p2, p3)` of the
    /// quadratic Hamiltonian.
    Diagonal,
    /// Variables of the resonant normal form, i.e. the diagonal chart after
    /// the nonlinear near-identity transformation.
    Normalized,
}

/// Exponent vector of a monomial in the six phase-space variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ExponentVector(pub [u8; NVARS]);

impl ExponentVector {
    /// The constant monomial.
    pub const ZERO: Self = Self([0; NVARS]);

    /// Total degree of the monomial.
    #[inline]
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| u32::from(e)).sum()
    }

    /// Exponent of variable `i`.
    #[inline]
    pub fn exponent(&self, i: usize) -> u8 {
        self.0[i]
    }

    /// All six exponents packed into a single integer (used as hash key).
    #[inline]
    fn packed(&self) -> u64 {
        let mut bytes = [0u8; 8];
        bytes[..NVARS].copy_from_slice(&self.0);
        u64::from_le_bytes(bytes)
    }

    /// Sum of two exponent vectors (monomial product).
    #[inline]
    fn checked_add(&self, other: &Self) -> Result<Self, PolyError> {
        let mut out = [0u8; NVARS];
        for i in 0..NVARS {
            out[i] = self.0[i].checked_add(other.0[i]).ok_or(PolyError::ExponentOverflow {
                degree: self.degree() + other.degree(),
            })?;
        }
        Ok(Self(out))
    }
}

impl Hash for ExponentVector {
    #[inline]
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.packed());
    }
}

/// Hasher specialised for packed exponent vectors: a single SplitMix64-style
/// finalizer over the packed `u64`, avoiding SipHash overhead in the hot
/// multiplication and bracket loops.
#[derive(Default, Clone)]
pub struct PackedExponentHasher(u64);

impl Hasher for PackedExponentHasher {
    #[inline]
    fn write(&mut self, bytes: &[u8]) {
        // Fallback for callers that hash byte slices; the fast path below is
        // what `ExponentVector::hash` uses.
        for &b in bytes {
            self.0 = (self.0 ^ u64::from(b)).wrapping_mul(0x100_0000_01b3);
        }
    }

    #[inline]
    fn write_u64(&mut self, n: u64) {
        let mut z = n.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        self.0 = z ^ (z >> 31);
    }

    #[inline]
    fn finish(&self) -> u64 {
        self.0
    }
}

type TermMap = HashMap<ExponentVector, Complex64, BuildHasherDefault<PackedExponentHasher>>;

/// A sparse polynomial with complex coefficients in six variables.
///
/// Terms are bucketed by total degree. Exact zeros produced by cancellation
/// are removed eagerly; numerically tiny terms are only removed by an explicit
/// [`SparsePolynomial::prune`] call, whose threshold is relative to the
/// largest coefficient magnitude within the same degree.
#[derive(Debug, Clone)]
pub struct SparsePolynomial {
    chart: Chart,
    buckets: BTreeMap<u32, TermMap>,
}

impl SparsePolynomial {
    /// The zero polynomial in the given chart.
    pub fn zero(chart: Chart) -> Self {
        Self { chart, buckets: BTreeMap::new() }
    }

    /// A single monomial `coeff * v^exps`.
    pub fn monomial(chart: Chart, exps: [u8; NVARS], coeff: Complex64) -> Self {
        let mut p = Self::zero(chart);
        p.add_term(ExponentVector(exps), coeff);
        p
    }

    /// A constant polynomial.
    pub fn constant(chart: Chart, value: Complex64) -> Self {
        Self::monomial(chart, [0; NVARS], value)
    }

    /// Chart tag of this polynomial.
    pub fn chart(&self) -> Chart {
        self.chart
    }

    /// Re-tags the polynomial as belonging to a different chart.
    ///
    /// This is the explicit escape hatch used when a transformation step
    /// (diagonalization, normalization) changes the meaning of the variables;
    /// it performs no numerical work.
    pub fn retag(&mut self, chart: Chart) {
        self.chart = chart;
    }

    /// Returns a re-tagged copy.
    pub fn retagged(&self, chart: Chart) -> Self {
        let mut p = self.clone();
        p.retag(chart);
        p
    }

    /// True if no terms are stored.
    pub fn is_zero(&self) -> bool {
        self.buckets.is_empty()
    }

    /// Number of stored terms.
    pub fn num_terms(&self) -> usize {
        self.buckets.values().map(TermMap::len).sum()
    }

    /// Largest total degree with at least one term, if any.
    pub fn max_degree(&self) -> Option<u32> {
        self.buckets.keys().next_back().copied()
    }

    /// Smallest total degree with at least one term, if any.
    pub fn min_degree(&self) -> Option<u32> {
        self.buckets.keys().next().copied()
    }

    /// Coefficient of the given monomial (zero if absent).
    pub fn coefficient(&self, exps: [u8; NVARS]) -> Complex64 {
        let ev = ExponentVector(exps);
        self.buckets
            .get(&ev.degree())
            .and_then(|m| m.get(&ev))
            .copied()
            .unwrap_or(Complex64::ZERO)
    }

    /// Adds `coeff` to the coefficient of the monomial `ev`, removing the
    /// entry if the result is an exact zero.
    pub fn add_term(&mut self, ev: ExponentVector, coeff: Complex64) {
        if coeff == Complex64::ZERO {
            return;
        }
        let bucket = self.buckets.entry(ev.degree()).or_default();
        let entry = bucket.entry(ev).or_insert(Complex64::ZERO);
        *entry += coeff;
        if *entry == Complex64::ZERO {
            bucket.remove(&ev);
            if bucket.is_empty() {
                self.buckets.remove(&ev.degree());
            }
        }
    }

    /// Iterates over all `(exponents, coefficient)` pairs in degree order
    /// (order within a degree is unspecified).
    pub fn terms(&self) -> impl Iterator<Item = (ExponentVector, Complex64)> + '_ {
        self.buckets.values().flat_map(|m| m.iter().map(|(ev, c)| (*ev, *c)))
    }

    /// Iterates over the terms of total degree `n` only.
    pub fn degree_terms(&self, n: u32) -> impl Iterator<Item = (ExponentVector, Complex64)> + '_ {
        self.buckets
            .get(&n)
            .into_iter()
            .flat_map(|m| m.iter().map(|(ev, c)| (*ev, *c)))
    }

    /// Degrees that carry at least one term, ascending.
    pub fn degrees(&self) -> impl Iterator<Item = u32> + '_ {
        self.buckets.keys().copied()
    }

    /// The homogeneous part of total degree `n`.
    pub fn homogeneous_part(&self, n: u32) -> Self {
        let mut p = Self::zero(self.chart);
        if let Some(bucket) = self.buckets.get(&n) {
            p.buckets.insert(n, bucket.clone());
        }
        p
    }

    /// True if every term has total degree `n`.
    pub fn is_homogeneous(&self, n: u32) -> bool {
        self.buckets.keys().all(|&d| d == n)
    }

    /// Adds another polynomial in place. Panics on chart mismatch: mixing
    /// charts in an additive context is a programming error, while the
    /// fallible entry point for user-facing composite operations is
    /// [`poisson_bracket`].
    pub fn add_assign_poly(&mut self, other: &Self) {
        assert_eq!(
            self.chart, other.chart,
            "cannot add polynomials from different charts ({:?} vs {:?})",
            self.chart, other.chart
        );
        for (ev, c) in other.terms() {
            self.add_term(ev, c);
        }
    }

    /// Subtracts another polynomial in place (same chart rules as addition).
    pub fn sub_assign_poly(&mut self, other: &Self) {
        assert_eq!(
            self.chart, other.chart,
            "cannot subtract polynomials from different charts ({:?} vs {:?})",
            self.chart, other.chart
        );
        for (ev, c) in other.terms() {
            self.add_term(ev, -c);
        }
    }

    /// Multiplies every coefficient by `k`.
    pub fn scale(&mut self, k: Complex64) {
        if k == Complex64::ZERO {
            self.buckets.clear();
            return;
        }
        for bucket in self.buckets.values_mut() {
            for c in bucket.values_mut() {
                *c *= k;
            }
        }
    }

    /// Returns `self * k`.
    pub fn scaled(&self, k: Complex64) -> Self {
        let mut p = self.clone();
        p.scale(k);
        p
    }

    /// Polynomial product, discarding terms above `max_degree` when given.
    pub fn mul(&self, other: &Self, max_degree: Option<u32>) -> Result<Self, PolyError> {
        if self.chart != other.chart {
            return Err(PolyError::ChartMismatch { left: self.chart, right: other.chart });
        }
        let mut out = Self::zero(self.chart);
        for (&da, bucket_a) in &self.buckets {
            for (&db, bucket_b) in &other.buckets {
                if let Some(cap) = max_degree {
                    if da + db > cap {
                        continue;
                    }
                }
                for (eva, ca) in bucket_a {
                    for (evb, cb) in bucket_b {
                        let ev = eva.checked_add(evb)?;
                        out.add_term(ev, ca * cb);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(var < NVARS, "variable index out of range");
        let mut out = Self::zero(self.chart);
        for (ev, c) in self.terms() {
            let e = ev.exponent(var);
            if e > 0 {
                let mut exps = ev.0;
                exps[var] = e - 1;
                out.add_term(ExponentVector(exps), c * f64::from(e));
            }
        }
        out
    }

    /// Discards all terms of total degree greater than `max_degree`.
    pub fn truncate_above(&mut self, max_degree: u32) {
        self.buckets.retain(|&d, _| d <= max_degree);
    }

    /// Sum of the absolute values of all coefficients.
    pub fn norm(&self) -> f64 {
        self.terms().map(|(_, c)| c.norm()).sum()
    }

    /// Sum of the absolute values of the coefficients of total degree `n`.
    pub fn degree_norm(&self, n: u32) -> f64 {
        self.degree_terms(n).map(|(_, c)| c.norm()).sum()
    }

    /// Removes, within each degree, the terms whose magnitude is at most
    /// `rel_threshold` times the largest magnitude in that degree. Returns the
    /// total absolute mass removed. A threshold of zero keeps everything.
    pub fn prune(&mut self, rel_threshold: f64) -> f64 {
        if rel_threshold <= 0.0 {
            return 0.0;
        }
        let mut removed = 0.0;
        let mut empty = Vec::new();
        for (&deg, bucket) in self.buckets.iter_mut() {
            let max_mag = bucket.values().map(|c| c.norm()).fold(0.0_f64, f64::max);
            if max_mag == 0.0 {
                empty.push(deg);
                continue;
            }
            let cut = rel_threshold * max_mag;
            bucket.retain(|_, c| {
                let keep = c.norm() > cut;
                if !keep {
                    removed += c.norm();
                }
                keep
            });
            if bucket.is_empty() {
                empty.push(deg);
            }
        }
        for deg in empty {
            self.buckets.remove(&deg);
        }
        removed
    }

    /// Evaluates the polynomial at a phase-space point.
    pub fn evaluate(&self, point: &[Complex64; NVARS]) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for (ev, c) in self.terms() {
            let mut term = c;
            for (i, &p) in point.iter().enumerate() {
                for _ in 0..ev.exponent(i) {
                    term *= p;
                }
            }
            acc += term;
        }
        acc
    }

    /// Deterministic textual dump: one `e1 e2 e3 e4 e5 e6 : re,im` line per
    /// term, sorted by degree and then lexicographically by exponents.
    pub fn dump(&self) -> String {
        let mut lines: Vec<(ExponentVector, Complex64)> = self.terms().collect();
        lines.sort_by_key(|(ev, _)| (ev.degree(), ev.0));
        let mut out = String::new();
        for (ev, c) in lines {
            let e = ev.0;
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} : {:.16e},{:.16e}",
                e[0], e[1], e[2], e[3], e[4], e[5], c.re, c.im
            );
        }
        out
    }
}

impl fmt::Display for SparsePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.dump())
    }
}

/// Sum of the absolute values of all coefficients of `p`.
pub fn polynomial_norm(p: &SparsePolynomial) -> f64 {
    p.norm()
}

/// Canonical Poisson bracket `{f, g} = sum_i df/dq_i dg/dp_i - df/dp_i dg/dq_i`
/// with `q_i` the first three variables and `p_i` the last three.
///
/// Computed term-pair-wise: for monomials `v^a` and `v^b` the bracket is
/// `sum_i (a_i b_{i+3} - a_{i+3} b_i) v^{a+b-e_i-e_{i+3}}`. Terms whose degree
/// exceeds `max_degree` (when given) are dropped before accumulation.
pub fn poisson_bracket(
    f: &SparsePolynomial,
    g: &SparsePolynomial,
    max_degree: Option<u32>,
) -> Result<SparsePolynomial, PolyError> {
    if f.chart != g.chart {
        return Err(PolyError::ChartMismatch { left: f.chart, right: g.chart });
    }
    let mut out = SparsePolynomial::zero(f.chart);
    for (&da, bucket_a) in &f.buckets {
        if da == 0 {
            continue;
        }
        for (&db, bucket_b) in &g.buckets {
            if db == 0 {
                continue;
            }
            let result_degree = da + db - 2;
            if let Some(cap) = max_degree {
                if result_degree > cap {
                    continue;
                }
            }
            for (eva, ca) in bucket_a {
                for (evb, cb) in bucket_b {
                    for i in 0..3 {
                        let ai = i32::from(eva.exponent(i));
                        let api = i32::from(eva.exponent(i + 3));
                        let bi = i32::from(evb.exponent(i));
                        let bpi = i32::from(evb.exponent(i + 3));
                        let factor = ai * bpi - api * bi;
                        if factor == 0 {
                            continue;
                        }
                        let mut exps = [0u8; NVARS];
                        for (k, e) in exps.iter_mut().enumerate() {
                            *e = eva.exponent(k) + evb.exponent(k);
                        }
                        // The derivative pair removes one power of q_i and p_i.
                        exps[i] -= 1;
                        exps[i + 3] -= 1;
                        out.add_term(ExponentVector(exps), ca * cb * f64::from(factor));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Composes `p` with the linear change of variables `v = m * w`, i.e. returns
/// the polynomial `q(w) = p(m w)` in the new variables `w`.
///
/// `chart` is the tag of the result (the chart the new variables live in).
/// Powers of the six substituted linear forms are memoized, so the cost is
/// dominated by one polynomial product per input term.
pub fn substitute_linear(
    p: &SparsePolynomial,
    m: &nalgebra::SMatrix<Complex64, 6, 6>,
    chart: Chart,
    max_degree: Option<u32>,
) -> Result<SparsePolynomial, PolyError> {
    // Linear form each old variable maps to, expressed in the new chart.
    let mut forms = Vec::with_capacity(NVARS);
    for i in 0..NVARS {
        let mut form = SparsePolynomial::zero(chart);
        for j in 0..NVARS {
            let c = m[(i, j)];
            if c != Complex64::ZERO {
                let mut exps = [0u8; NVARS];
                exps[j] = 1;
                form.add_term(ExponentVector(exps), c);
            }
        }
        forms.push(form);
    }
    // powers[i][k] = forms[i]^k, built on demand.
    let mut powers: Vec<Vec<SparsePolynomial>> =
        forms.iter().map(|_| vec![SparsePolynomial::constant(chart, Complex64::ONE)]).collect();
    let mut out = SparsePolynomial::zero(chart);
    for (ev, c) in p.terms() {
        let mut term = SparsePolynomial::constant(chart, c);
        for i in 0..NVARS {
            let e = usize::from(ev.exponent(i));
            if e == 0 {
                continue;
            }
            while powers[i].len() <= e {
                let last = powers[i].last().expect("power table starts at k = 0");
                let next = last.mul(&forms[i], max_degree)?;
                powers[i].push(next);
            }
            term = term.mul(&powers[i][e], max_degree)?;
        }
        out.add_assign_poly(&term);
    }
    Ok(out)
}

/// A polynomial series organised by homogeneous degree: slot `n` holds the
/// homogeneous part of total degree `n`, up to and including `max_degree`.
#[derive(Debug, Clone)]
pub struct GradedSeries {
    chart: Chart,
    slots: Vec<SparsePolynomial>,
}

impl GradedSeries {
    /// An empty series able to hold degrees `0..=max_degree`.
    pub fn new(chart: Chart, max_degree: u32) -> Self {
        let slots = (0..=max_degree).map(|_| SparsePolynomial::zero(chart)).collect();
        Self { chart, slots }
    }

    /// Splits a polynomial into its homogeneous parts, discarding any part of
    /// degree above `max_degree`.
    pub fn from_polynomial(p: &SparsePolynomial, max_degree: u32) -> Self {
        let mut series = Self::new(p.chart(), max_degree);
        for (ev, c) in p.terms() {
            let d = ev.degree();
            if d <= max_degree {
                series.slots[d as usize].add_term(ev, c);
            }
        }
        series
    }

    /// Chart tag shared by every slot.
    pub fn chart(&self) -> Chart {
        self.chart
    }

    /// Highest representable degree.
    pub fn max_degree(&self) -> u32 {
        (self.slots.len() - 1) as u32
    }

    /// The homogeneous part of degree `n` (zero polynomial if `n` exceeds the
    /// stored range).
    pub fn slot(&self, n: u32) -> &SparsePolynomial {
        static EMPTY: std::sync::OnceLock<SparsePolynomial> = std::sync::OnceLock::new();
        self.slots.get(n as usize).unwrap_or_else(|| {
            EMPTY.get_or_init(|| SparsePolynomial::zero(Chart::Original))
        })
    }

    /// Mutable access to the homogeneous part of degree `n`.
    pub fn slot_mut(&mut self, n: u32) -> &mut SparsePolynomial {
        &mut self.slots[n as usize]
    }

    /// Replaces slot `n`; the polynomial must be homogeneous of degree `n`
    /// and live in the series chart.
    pub fn set_slot(&mut self, n: u32, p: SparsePolynomial) {
        assert_eq!(p.chart(), self.chart, "chart mismatch in set_slot");
        assert!(p.is_homogeneous(n), "set_slot expects a homogeneous polynomial of degree {n}");
        self.slots[n as usize] = p;
    }

    /// Recombines all slots into a single polynomial.
    pub fn to_polynomial(&self) -> SparsePolynomial {
        let mut p = SparsePolynomial::zero(self.chart);
        for slot in &self.slots {
            p.add_assign_poly(slot);
        }
        p
    }

    /// Norm of the degree-`n` slot.
    pub fn norm_at(&self, n: u32) -> f64 {
        self.slot(n).norm()
    }

    /// Total number of stored terms.
    pub fn num_terms(&self) -> usize {
        self.slots.iter().map(SparsePolynomial::num_terms).sum()
    }

    /// Re-tags the whole series (see [`SparsePolynomial::retag`]).
    pub fn retag(&mut self, chart: Chart) {
        self.chart = chart;
        for slot in &mut self.slots {
            slot.retag(chart);
        }
    }

    /// Applies a relative per-degree prune to every slot; returns removed mass.
    pub fn prune(&mut self, rel_threshold: f64) -> f64 {
        self.slots.iter_mut().map(|s| s.prune(rel_threshold)).sum()
    }
}

/// Maximum number of Lie-series terms attempted for non-nilpotent (quadratic)
/// generators before reporting divergence.
const LIE_MAX_TERMS: usize = 256;

/// Relative tail threshold at which the Lie series for a quadratic generator
/// is considered converged.
const LIE_TAIL_TOL: f64 = 1e-18;

/// Applies the Lie transform `exp(L_chi) h = sum_j (1/j!) ad_chi^j h`
/// truncated at `max_degree`, where `ad_chi f = {f, chi}`.
///
/// For a generator of degree `k >= 3` each bracket raises the degree by
/// `k - 2 >= 1`, so the series terminates on its own once every term exceeds
/// the truncation degree. For a quadratic generator the degree is preserved
/// and the series is summed until the running term norm falls below a
/// relative tail threshold.
pub fn lie_transform(
    h: &GradedSeries,
    chi: &SparsePolynomial,
    max_degree: u32,
) -> Result<GradedSeries, PolyError> {
    if h.chart() != chi.chart() {
        return Err(PolyError::ChartMismatch { left: h.chart(), right: chi.chart() });
    }
    let mut result = h.clone();
    if chi.is_zero() {
        return Ok(result);
    }
    let nilpotent = chi.min_degree().is_none_or(|d| d >= 3);
    let mut term = h.to_polynomial();
    let scale_ref = term.norm().max(1.0);
    for j in 1..=LIE_MAX_TERMS {
        term = poisson_bracket(&term, chi, Some(max_degree))?;
        term.scale(Complex64::new(1.0 / j as f64, 0.0));
        if term.is_zero() {
            return Ok(result);
        }
        for (ev, c) in term.terms() {
            result.slot_mut(ev.degree()).add_term(ev, c);
        }
        if !nilpotent && term.norm() < LIE_TAIL_TOL * scale_ref {
            return Ok(result);
        }
    }
    if nilpotent {
        // A nilpotent generator always terminates within max_degree steps.
        Ok(result)
    } else {
        Err(PolyError::LieSeriesDivergent { max_terms: LIE_MAX_TERMS, last_norm: term.norm() })
    }
}

/// Applies the Lie transform to a single polynomial (convenience wrapper used
/// for transforming coordinate functions).
pub fn lie_transform_poly(
    f: &SparsePolynomial,
    chi: &SparsePolynomial,
    max_degree: u32,
) -> Result<SparsePolynomial, PolyError> {
    let series = GradedSeries::from_polynomial(f, max_degree);
    Ok(lie_transform(&series, chi, max_degree)?.to_polynomial())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn add_term_removes_exact_zero() {
        let mut p = SparsePolynomial::zero(Chart::Original);
        let ev = ExponentVector([1, 0, 0, 0, 0, 0]);
        p.add_term(ev, c(2.0, 0.0));
        p.add_term(ev, c(-2.0, 0.0));
        assert!(p.is_zero());
    }

    #[test]
    fn canonical_pairs_bracket() {
        // {q_i, p_j} = delta_ij, {q_i, q_j} = {p_i, p_j} = 0.
        for i in 0..3 {
            for j in 0..3 {
                let mut eq = [0u8; NVARS];
                eq[i] = 1;
                let mut ep = [0u8; NVARS];
                ep[j + 3] = 1;
                let q = SparsePolynomial::monomial(Chart::Diagonal, eq, Complex64::ONE);
                let p = SparsePolynomial::monomial(Chart::Diagonal, ep, Complex64::ONE);
                let b = poisson_bracket(&q, &p, None).unwrap();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_eq!(b.coefficient([0; NVARS]).re, expected);
            }
        }
    }

    #[test]
    fn chart_mismatch_is_reported() {
        let f = SparsePolynomial::monomial(Chart::Original, [1, 0, 0, 0, 0, 0], Complex64::ONE);
        let g = SparsePolynomial::monomial(Chart::Diagonal, [0, 0, 0, 1, 0, 0], Complex64::ONE);
        assert!(matches!(
            poisson_bracket(&f, &g, None),
            Err(PolyError::ChartMismatch { .. })
        ));
    }

    #[test]
    fn prune_is_relative_per_degree() {
        let mut p = SparsePolynomial::zero(Chart::Original);
        p.add_term(ExponentVector([2, 0, 0, 0, 0, 0]), c(1.0, 0.0));
        p.add_term(ExponentVector([0, 2, 0, 0, 0, 0]), c(1e-20, 0.0));
        // Degree 3 has only a tiny coefficient; relative pruning keeps it.
        p.add_term(ExponentVector([3, 0, 0, 0, 0, 0]), c(1e-20, 0.0));
        p.prune(1e-16);
        assert_eq!(p.coefficient([0, 2, 0, 0, 0, 0]), Complex64::ZERO);
        assert_eq!(p.coefficient([3, 0, 0, 0, 0, 0]), c(1e-20, 0.0));
    }

    #[test]
    fn graded_series_round_trip() {
        let mut p = SparsePolynomial::zero(Chart::Diagonal);
        p.add_term(ExponentVector([1, 1, 0, 0, 0, 0]), c(1.5, -0.5));
        p.add_term(ExponentVector([0, 0, 3, 0, 0, 1]), c(0.25, 2.0));
        let series = GradedSeries::from_polynomial(&p, 6);
        assert_eq!(series.slot(2).num_terms(), 1);
        assert_eq!(series.slot(4).num_terms(), 1);
        let q = series.to_polynomial();
        assert_eq!(q.coefficient([1, 1, 0, 0, 0, 0]), c(1.5, -0.5));
        assert_eq!(q.coefficient([0, 0, 3, 0, 0, 1]), c(0.25, 2.0));
    }

    #[test]
    fn dump_is_sorted_and_stable() {
        let mut p = SparsePolynomial::zero(Chart::Original);
        p.add_term(ExponentVector([0, 1, 0, 0, 0, 0]), c(2.0, 0.0));
        p.add_term(ExponentVector([1, 0, 0, 0, 0, 0]), c(1.0, 0.0));
        p.add_term(ExponentVector([0, 0, 0, 2, 0, 0]), c(3.0, -1.0));
        let d1 = p.dump();
        let d2 = p.clone().dump();
        assert_eq!(d1, d2);
        let lines: Vec<&str> = d1.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("0 1 0 0 0 0"));
        assert!(lines[1].starts_with("1 0 0 0 0 0"));
        assert!(lines[2].starts_with("0 0 0 2 0 0"));
    }
}
