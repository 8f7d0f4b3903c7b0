//! Exact arithmetic in the real cyclotomic field generated by `a_2 = 2cos(pi/n)`.
//!
//! Elements are stored as rational coefficient vectors in the power basis
//! `1, a_2, ..., a_2^(d-1)` with `d = (n-1)/2`, always reduced modulo the
//! minimal polynomial `q_n`. Diagonal lengths `a_k` of the regular n-gon,
//! normalized triangle areas, and the length and tile substitution matrices
//! are all derived here.

use crate::error::{Error, Result};
use crate::matrix::{IntMatrix, QMatrix};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn is_odd_prime(n: u32) -> bool {
    n >= 3
        && n % 2 == 1
        && (3..)
            .step_by(2)
            .take_while(|p| p * p <= n)
            .all(|p| !n.is_multiple_of(p))
}

/// Element of Q(a_2) in the reduced power basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldElement {
    coeffs: Vec<BigRational>,
}

impl FieldElement {
    pub fn zero(d: usize) -> Self {
        FieldElement {
            coeffs: vec![BigRational::zero(); d],
        }
    }

    pub fn one(d: usize) -> Self {
        let mut e = Self::zero(d);
        e.coeffs[0] = BigRational::one();
        e
    }

    /// Builds an element from already-reduced coefficients.
    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        FieldElement { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        FieldElement {
            coeffs: coeffs.iter().map(|&c| rat(c)).collect(),
        }
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn degree_bound(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(BigRational::is_integer)
    }

    /// Integer coefficients, if all are integral and fit in `i64`.
    pub fn to_i64s(&self) -> Option<Vec<i64>> {
        self.coeffs
            .iter()
            .map(|c| {
                if c.is_integer() {
                    c.to_integer().to_i64()
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        FieldElement {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        FieldElement {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        FieldElement {
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        FieldElement {
            coeffs: self.coeffs.iter().map(|a| a * s).collect(),
        }
    }

    pub fn scale_int(&self, s: i64) -> Self {
        self.scale(&rat(s))
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Integer polynomial `a_k(x)` (unreduced), lowest degree first.
///
/// `a_0 = 0`, `a_1 = 1`, `a_{k+1} = x a_k - a_{k-1}`.
pub fn chebyshev_length(k: usize) -> Vec<BigInt> {
    let mut prev: Vec<BigInt> = vec![];
    let mut cur: Vec<BigInt> = vec![BigInt::one()];
    if k == 0 {
        return prev;
    }
    for _ in 1..k {
        let mut next = vec![BigInt::zero(); cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimalPolynomial {
    pub n: u32,
    /// Monic integer coefficients, lowest degree first; length `d + 1`.
    pub coeffs: Vec<BigInt>,
    /// Companion matrix: `v(a_2 b) = A v(b)`.
    pub companion: QMatrix,
}

impl MinimalPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    fn eval_rational(&self, x: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| {
                acc * x + BigRational::from_integer(c.clone())
            })
    }
}

impl fmt::Display for MinimalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            let sign = if c.is_negative() { "-" } else { "+" };
            let body = match (i, mag.is_one()) {
                (0, _) => mag.to_string(),
                (1, true) => "x".to_string(),
                (1, false) => format!("{mag}x"),
                (_, true) => format!("x^{i}"),
                (_, false) => format!("{mag}x^{i}"),
            };
            terms.push((sign, body));
        }
        for (idx, (sign, body)) in terms.iter().enumerate() {
            if idx == 0 {
                if *sign == "-" {
                    write!(f, "-")?;
                }
                write!(f, "{body}")?;
            } else {
                write!(f, " {sign} {body}")?;
            }
        }
        Ok(())
    }
}

/// Minimal polynomial of `2cos(pi/n)` from the equality of the two middle
/// diagonal lengths, `a_{(n+1)/2} = a_{(n-1)/2}`.
pub fn minimal_polynomial(n: u32) -> Result<MinimalPolynomial> {
    if !is_odd_prime(n) || n < 5 {
        return Err(Error::UnsupportedOrder(n));
    }
    let hi = chebyshev_length(n.div_ceil(2) as usize);
    let lo = chebyshev_length(((n - 1) / 2) as usize);
    let mut coeffs = hi;
    for (i, c) in lo.iter().enumerate() {
        coeffs[i] -= c;
    }
    let d = coeffs.len() - 1;
    assert!(coeffs[d].is_one(), "relation polynomial must be monic");
    // The degree of 2cos(pi/n) over Q is phi(2n)/2 = (n-1)/2 for odd prime n,
    // so a monic polynomial of that degree vanishing at it is minimal.
    assert_eq!(d, ((n - 1) / 2) as usize, "relation polynomial degree");
    let mut companion = QMatrix::zeros(d, d);
    for i in 0..d {
        if i + 1 < d {
            companion.set(i + 1, i, BigRational::one());
        }
        companion.set(i, d - 1, -BigRational::from_integer(coeffs[i].clone()));
    }
    let mp = MinimalPolynomial {
        n,
        coeffs,
        companion,
    };
    for j in 1..=d {
        let root = 2.0 * ((2 * j - 1) as f64 * std::f64::consts::PI / n as f64).cos();
        let v = mp.eval_f64(root);
        assert!(
            v.abs() < 1e-6,
            "q_{n} does not vanish at conjugate {root}: {v}"
        );
    }
    Ok(mp)
}

/// Triangle with angles `k1*pi/n, k2*pi/n, k3*pi/n`. Vertex `i` carries angle `k[i]`;
/// the side opposite vertex `i` has length `a_{k[i]}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AngleTriple(pub [u32; 3]);

impl AngleTriple {
    pub fn new(n: u32, k1: u32, k2: u32, k3: u32) -> Result<Self> {
        if k1 == 0 || k2 == 0 || k3 == 0 || k1 + k2 + k3 != n {
            return Err(Error::InvalidTriple(k1, k2, k3, n));
        }
        Ok(AngleTriple([k1, k2, k3]))
    }

    pub fn angles(&self) -> [u32; 3] {
        self.0
    }

    pub fn sorted(&self) -> AngleTriple {
        let mut k = self.0;
        k.sort_unstable();
        AngleTriple(k)
    }

    pub fn is_isosceles(&self) -> bool {
        let [a, b, c] = self.0;
        a == b || b == c || a == c
    }

    pub fn sum(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl fmt::Display for AngleTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

/// Length class of the diagonal `a_k`: the index in `1..=(n-1)/2` with the same length.
pub fn length_class(n: u32, k: u32) -> u32 {
    k.min(n - k)
}

/// Arithmetic context for a fixed odd prime `n`.
#[derive(Clone, Debug)]
pub struct Field {
    n: u32,
    d: usize,
    minpoly: MinimalPolynomial,
    /// Reduced forms of `x^j` for `0 <= j < 2d - 1`.
    powers: Vec<FieldElement>,
    /// `a_0 ..= a_n`.
    lengths: Vec<FieldElement>,
    a2: f64,
}

impl Field {
    pub fn new(n: u32) -> Result<Self> {
        let minpoly = minimal_polynomial(n)?;
        let d = minpoly.degree();
        let mut powers = Vec::with_capacity(2 * d);
        for j in 0..(2 * d).max(1) {
            if j < d {
                let mut e = FieldElement::zero(d);
                e.coeffs[j] = BigRational::one();
                powers.push(e);
            } else {
                // x^j = x * x^{j-1}; shift and substitute x^d = -sum q_i x^i.
                let prev = &powers[j - 1];
                let top = prev.coeffs[d - 1].clone();
                let mut coeffs = vec![BigRational::zero(); d];
                for i in 1..d {
                    coeffs[i] = prev.coeffs[i - 1].clone();
                }
                for (i, c) in coeffs.iter_mut().enumerate() {
                    *c -= &top * BigRational::from_integer(minpoly.coeffs[i].clone());
                }
                powers.push(FieldElement { coeffs });
            }
        }
        let a2 = 2.0 * (std::f64::consts::PI / n as f64).cos();
        let mut field = Field {
            n,
            d,
            minpoly,
            powers,
            lengths: Vec::new(),
            a2,
        };
        let mut lengths = vec![FieldElement::zero(d), FieldElement::one(d)];
        let x = field.generator();
        for k in 1..n as usize {
            let next = field.mul(&x, &lengths[k]).sub(&lengths[k - 1]);
            lengths.push(next);
        }
        field.lengths = lengths;
        Ok(field)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Degree `(n-1)/2` of the field over Q.
    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn minimal_polynomial(&self) -> &MinimalPolynomial {
        &self.minpoly
    }

    pub fn a2_f64(&self) -> f64 {
        self.a2
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement::zero(self.d)
    }

    pub fn one(&self) -> FieldElement {
        FieldElement::one(self.d)
    }

    /// The element `a_2` itself.
    pub fn generator(&self) -> FieldElement {
        if self.d == 1 {
            return self.powers[1].clone();
        }
        let mut e = self.zero();
        e.coeffs[1] = BigRational::one();
        e
    }

    /// Diagonal length `a_k`, `0 <= k <= n`.
    pub fn length(&self, k: usize) -> Result<&FieldElement> {
        self.lengths.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            max: self.n as usize,
        })
    }

    pub fn lengths(&self) -> &[FieldElement] {
        &self.lengths
    }

    /// Reduces an arbitrary polynomial (lowest degree first) modulo `q_n`.
    pub fn reduce_poly(&self, poly: &[BigRational]) -> FieldElement {
        let mut out = self.zero();
        let mut x_pow = self.one();
        let x = self.generator();
        for (j, c) in poly.iter().enumerate() {
            if j > 0 {
                x_pow = if j < self.powers.len() {
                    self.powers[j].clone()
                } else {
                    self.mul(&x_pow, &x)
                };
            }
            if !c.is_zero() {
                out = out.add(&x_pow.scale(c));
            }
        }
        out
    }

    pub fn mul(&self, x: &FieldElement, y: &FieldElement) -> FieldElement {
        let d = self.d;
        let mut prod = vec![BigRational::zero(); 2 * d - 1];
        for (i, a) in x.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in y.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        let mut coeffs: Vec<BigRational> = prod[..d].to_vec();
        for (j, c) in prod.iter().enumerate().skip(d) {
            if c.is_zero() {
                continue;
            }
            for (i, p) in self.powers[j].coeffs.iter().enumerate() {
                if !p.is_zero() {
                    coeffs[i] += c * p;
                }
            }
        }
        FieldElement { coeffs }
    }

    pub fn square(&self, x: &FieldElement) -> FieldElement {
        self.mul(x, x)
    }

    /// Matrix of multiplication by `x` on the power basis, i.e. `p_x(A)`.
    pub fn multiplication_matrix(&self, x: &FieldElement) -> QMatrix {
        let cols: Vec<Vec<BigRational>> = (0..self.d)
            .map(|j| self.mul(x, &self.powers[j]).coeffs)
            .collect();
        QMatrix::from_columns(&cols)
    }

    /// Field norm `N(x)`, the determinant of multiplication by `x`.
    pub fn norm(&self, x: &FieldElement) -> BigRational {
        self.multiplication_matrix(x).determinant()
    }

    /// Evaluates the polynomial representative at an arbitrary real point.
    pub fn eval_at(&self, x: &FieldElement, point: f64) -> f64 {
        x.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * point + c.to_f64().unwrap_or(f64::NAN))
    }

    /// Numeric value at `a_2 = 2cos(pi/n)`.
    pub fn to_f64(&self, x: &FieldElement) -> f64 {
        self.eval_at(x, self.a2)
    }

    /// All real embeddings of `x`: evaluation at `2cos((2j-1)pi/n)` for `j = 1..=d`.
    /// The first entry is the value at `a_2` itself.
    pub fn conjugates(&self, x: &FieldElement) -> Vec<f64> {
        (1..=self.d)
            .map(|j| {
                let r = 2.0 * ((2 * j - 1) as f64 * std::f64::consts::PI / self.n as f64).cos();
                self.eval_at(x, r)
            })
            .collect()
    }

    /// Exact sign of the real number `x` at `a_2 = 2cos(pi/n)`.
    pub fn sign(&self, x: &FieldElement) -> Ordering {
        if x.is_zero() {
            return Ordering::Equal;
        }
        if let Some(s) = self.float_sign(x) {
            return s;
        }
        let mut bits = 64u32;
        loop {
            let (lo, hi) = self.enclose_a2(bits);
            let (vlo, vhi) = interval_eval(x, &lo, &hi);
            if vlo.is_positive() {
                return Ordering::Greater;
            }
            if vhi.is_negative() {
                return Ordering::Less;
            }
            bits *= 2;
        }
    }

    fn float_sign(&self, x: &FieldElement) -> Option<Ordering> {
        let mut value = 0.0f64;
        let mut magnitude = 0.0f64;
        let mut p = 1.0f64;
        for c in &x.coeffs {
            let cf = c.to_f64()?;
            if !cf.is_finite() {
                return None;
            }
            value += cf * p;
            magnitude += cf.abs() * p;
            p *= self.a2;
        }
        let bound = magnitude * 1e-12;
        if value > bound {
            Some(Ordering::Greater)
        } else if value < -bound {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    /// Rational interval of width below `2^-bits` containing `2cos(pi/n)`.
    ///
    /// `2cos(pi/n)` is the largest root of `q_n`, which is monic, so `q_n` is
    /// negative just left of it and positive just right of it.
    fn enclose_a2(&self, bits: u32) -> (BigRational, BigRational) {
        let scale = BigInt::one() << 40u32;
        let approx = (self.a2 * (1u64 << 40) as f64).round() as i64;
        let mut widen = 1i64 << 10;
        let (mut lo, mut hi) = loop {
            let lo = BigRational::new(BigInt::from(approx - widen), scale.clone());
            let hi = BigRational::new(BigInt::from(approx + widen), scale.clone());
            if self.minpoly.eval_rational(&lo).is_negative()
                && self.minpoly.eval_rational(&hi).is_positive()
            {
                break (lo, hi);
            }
            widen *= 2;
        };
        let target = BigRational::new(BigInt::one(), BigInt::one() << bits);
        let two = rat(2);
        while &hi - &lo > target {
            let mid = (&lo + &hi) / &two;
            match self.minpoly.eval_rational(&mid).cmp(&BigRational::zero()) {
                Ordering::Less => lo = mid,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return (mid.clone(), mid),
            }
        }
        (lo, hi)
    }
}

/// Encloses `sum c_i x^i` for `x` in `[lo, hi]`, `0 < lo`.
fn interval_eval(
    x: &FieldElement,
    lo: &BigRational,
    hi: &BigRational,
) -> (BigRational, BigRational) {
    let mut plo = BigRational::one();
    let mut phi = BigRational::one();
    let mut vlo = BigRational::zero();
    let mut vhi = BigRational::zero();
    for c in &x.coeffs {
        if c.is_positive() {
            vlo += c * &plo;
            vhi += c * &phi;
        } else if c.is_negative() {
            vlo += c * &phi;
            vhi += c * &plo;
        }
        plo *= lo;
        phi *= hi;
    }
    (vlo, vhi)
}

/// Inflation factor `lambda = sum c_i a_i` over `a_1 ..= a_{(n-1)/2}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InflationFactor {
    coeffs_by_length: Vec<u32>,
    value: FieldElement,
}

impl InflationFactor {
    /// Builds `lambda` from its non-negative coefficients over `a_1..a_d`.
    /// Requires at least one positive coefficient; `lambda = 1` is accepted here and
    /// rejected by [`InflationFactor::ensure_expanding`].
    pub fn new(field: &Field, coeffs_by_length: &[u32]) -> Result<Self> {
        if coeffs_by_length.len() != field.degree() {
            return Err(Error::InvalidInflation(format!(
                "expected {} coefficients over a_1..a_{}, got {}",
                field.degree(),
                field.degree(),
                coeffs_by_length.len()
            )));
        }
        if coeffs_by_length.iter().all(|&c| c == 0) {
            return Err(Error::InvalidInflation("all coefficients are zero".into()));
        }
        let mut value = field.zero();
        for (i, &c) in coeffs_by_length.iter().enumerate() {
            value = value.add(&field.length(i + 1)?.scale_int(i64::from(c)));
        }
        Ok(InflationFactor {
            coeffs_by_length: coeffs_by_length.to_vec(),
            value,
        })
    }

    pub fn ensure_expanding(&self, field: &Field) -> Result<()> {
        if field.sign(&self.value.sub(&field.one())) != Ordering::Greater {
            return Err(Error::InvalidInflation(format!(
                "lambda = {:.6} is not greater than 1",
                field.to_f64(&self.value)
            )));
        }
        Ok(())
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs_by_length
    }

    pub fn value(&self) -> &FieldElement {
        &self.value
    }

    pub fn label(&self) -> String {
        let terms: Vec<String> = self
            .coeffs_by_length
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| {
                if c == 1 {
                    format!("a_{}", i + 1)
                } else {
                    format!("{c}a_{}", i + 1)
                }
            })
            .collect();
        terms.join(" + ")
    }
}

/// Area of `T(k1,k2,k3)` divided by the area of `T(1,1,n-2)`.
pub fn area_vector(field: &Field, triple: AngleTriple) -> Result<FieldElement> {
    let n = field.n();
    let [k1, k2, k3] = triple.sorted().angles();
    AngleTriple::new(n, k1, k2, k3)?;
    if k1 == 1 {
        return narrow_area(field, k2 as usize);
    }
    // T(k,l,m) together with an inflated T(1,k-1,n-k) forms an inflated T(1,l,n-l-1).
    let (k, l) = (k1 as usize, k2 as usize);
    let ak = field.square(field.length(k)?);
    let al = field.square(field.length(l)?);
    Ok(field
        .mul(&ak, &narrow_area(field, l)?)
        .sub(&field.mul(&al, &narrow_area(field, k - 1)?)))
}

/// Area of the narrow triangle `T(1,k,n-k-1)`; `k = 0` gives the degenerate zero.
fn narrow_area(field: &Field, k: usize) -> Result<FieldElement> {
    let mut area = field.zero();
    for j in 1..=k {
        area = field.square(field.length(j)?).sub(&area);
    }
    Ok(area)
}

/// Normalized areas of a family of triangles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AreaTable {
    pub ratios: BTreeMap<AngleTriple, FieldElement>,
}

impl AreaTable {
    /// All triangles with angles that are multiples of `pi/n`.
    pub fn all(field: &Field) -> Result<Self> {
        let n = field.n();
        let mut ratios = BTreeMap::new();
        for k1 in 1..n {
            for k2 in k1..n {
                if k1 + k2 >= n {
                    break;
                }
                let k3 = n - k1 - k2;
                if k3 < k2 {
                    continue;
                }
                let t = AngleTriple::new(n, k1, k2, k3)?;
                ratios.insert(t, area_vector(field, t)?);
            }
        }
        Ok(AreaTable { ratios })
    }
}

/// `X = L_n^{-1} p_lambda(A) L_n`: column `i` expresses `lambda a_{i+1}` over `a_1..a_d`.
pub fn length_matrix(field: &Field, lambda: &InflationFactor) -> Result<QMatrix> {
    let l = length_basis(field)?;
    let l_inv = l
        .inverse()
        .ok_or_else(|| Error::Internal("L_n is singular".into()))?;
    let p = field.multiplication_matrix(lambda.value());
    Ok(l_inv.mul(&p).mul(&l))
}

/// `L_n = [v(a_1) | ... | v(a_d)]`.
pub fn length_basis(field: &Field) -> Result<QMatrix> {
    let cols: Result<Vec<Vec<BigRational>>> = (1..=field.degree())
        .map(|k| Ok(field.length(k)?.coeffs().to_vec()))
        .collect();
    Ok(QMatrix::from_columns(&cols?))
}

/// `X` as an integer matrix; exact for every admissible inflation factor since
/// each `lambda a_i` is an integer combination of diagonals.
pub fn length_matrix_int(field: &Field, lambda: &InflationFactor) -> Result<IntMatrix> {
    length_matrix(field, lambda)?
        .to_integer()
        .map_err(|(i, j)| Error::Internal(format!("length matrix entry ({i},{j}) is not integral")))
}

/// Rational form of `M = B^{-1} p_lambda(A)^2 B` without admissibility screening.
pub fn substitution_matrix_rational(
    field: &Field,
    prototiles: &[AngleTriple],
    lambda: &InflationFactor,
) -> Result<QMatrix> {
    if prototiles.len() != field.degree() {
        return Err(Error::AreasNotABasis);
    }
    let cols: Result<Vec<Vec<BigRational>>> = prototiles
        .iter()
        .map(|&t| Ok(area_vector(field, t)?.coeffs().to_vec()))
        .collect();
    let b = QMatrix::from_columns(&cols?);
    let b_inv = b.inverse().ok_or(Error::AreasNotABasis)?;
    let p = field.multiplication_matrix(lambda.value());
    Ok(b_inv.mul(&p.mul(&p)).mul(&b))
}

/// Tile substitution matrix; entry `(i, j)` counts copies of prototile `i` in the
/// substituted prototile `j`. Fails unless every entry is a non-negative integer.
pub fn substitution_matrix(
    field: &Field,
    prototiles: &[AngleTriple],
    lambda: &InflationFactor,
) -> Result<IntMatrix> {
    let m = substitution_matrix_rational(field, prototiles, lambda)?;
    let mut bad = Vec::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m.get(i, j);
            if !v.is_integer() || v.is_negative() {
                bad.push(format!("M[{i}][{j}] = {v}"));
            }
        }
    }
    if !bad.is_empty() {
        return Err(Error::Inadmissible(bad.join(", ")));
    }
    m.to_integer()
        .map_err(|(i, j)| Error::Inadmissible(format!("M[{i}][{j}] overflows")))
}

/// Pisot / unit classification of an inflation factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub value: f64,
    pub conjugates: Vec<f64>,
    pub norm: String,
    pub is_unit: bool,
    pub is_pv: bool,
    /// Smallest distance of a conjugate modulus from 1.
    pub margin: f64,
}

pub fn classify(field: &Field, lambda: &InflationFactor) -> Classification {
    let conj = field.conjugates(lambda.value());
    let value = conj[0];
    let others = &conj[1..];
    let margin = others
        .iter()
        .map(|c| (c.abs() - 1.0).abs())
        .fold(f64::INFINITY, f64::min);
    let is_pv = value > 1.0 && others.iter().all(|c| c.abs() < 1.0);
    let norm = field.norm(lambda.value());
    let is_unit = norm.is_integer() && norm.to_integer().abs().is_one();
    Classification {
        value,
        conjugates: conj,
        norm: norm.to_string(),
        is_unit,
        is_pv,
        margin,
    }
}

/// Integer `i64` coefficients of `a_k` for all `k`, used by the fast geometric kernel.
pub fn integer_lengths(field: &Field) -> Vec<Vec<i64>> {
    field
        .lengths()
        .iter()
        .map(|a| {
            a.to_i64s()
                .expect("diagonal lengths have small integer coefficients")
        })
        .collect()
}

/// Whether a rational is a non-negative integer.
pub fn is_nonneg_integer(v: &BigRational) -> bool {
    v.is_integer() && !v.is_negative()
}
