//! Vertices as integer vectors over the directions `u_i = (cos(i pi/n), sin(i pi/n))`,
//! rigid motions acting by integer matrices, and exact orientation predicates.
//!
//! A point `p = sum c_i u_i` has `2x = sum c_i (a_{i+1} - a_{i-1})` and
//! `y / sin(pi/n) = sum c_i a_i`, both in `Z[a_2]`. Cross and dot products of
//! differences therefore reduce to signs of field elements, which the kernel
//! decides exactly after a float filter.

use crate::cyclotomic::{self, AngleTriple, Field, FieldElement, InflationFactor};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

/// Largest supported order of symmetry (lattice dimension `n - 1 <= MAX_DIM`).
pub const MAX_N: u32 = 17;
pub const MAX_DIM: usize = (MAX_N - 1) as usize;

/// Float filter margin for orientation and dot-product signs.
pub const FLOAT_MARGIN: f64 = 1e-6;

/// Integer vector in `Z^(n-1)`; unused trailing coordinates are zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LatticePoint(pub [i32; MAX_DIM]);

impl LatticePoint {
    pub const ZERO: LatticePoint = LatticePoint([0; MAX_DIM]);

    pub fn unit(i: usize) -> Self {
        let mut p = Self::ZERO;
        p.0[i] = 1;
        p
    }

    pub fn from_slice(c: &[i64]) -> Result<Self> {
        if c.len() > MAX_DIM {
            return Err(Error::Internal(format!(
                "lattice vector of length {}",
                c.len()
            )));
        }
        let mut p = Self::ZERO;
        for (i, &v) in c.iter().enumerate() {
            p.0[i] = i32::try_from(v)
                .map_err(|_| Error::Internal(format!("coordinate {v} overflows")))?;
        }
        Ok(p)
    }

    /// First `dim` coordinates.
    pub fn coords(&self, dim: usize) -> Vec<i64> {
        self.0[..dim].iter().map(|&v| i64::from(v)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = *self;
        for (a, b) in r.0.iter_mut().zip(o.0.iter()) {
            *a += *b;
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut r = *self;
        for (a, b) in r.0.iter_mut().zip(o.0.iter()) {
            *a -= *b;
        }
        r
    }

    pub fn scale(&self, s: i32) -> Self {
        let mut r = *self;
        for a in r.0.iter_mut() {
            *a *= s;
        }
        r
    }

    pub fn neg(&self) -> Self {
        self.scale(-1)
    }

    fn add_scaled(&mut self, o: &Self, s: i32) {
        for (a, b) in self.0.iter_mut().zip(o.0.iter()) {
            *a += *b * s;
        }
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.0.iter().rposition(|&v| v != 0).map_or(0, |i| i + 1);
        write!(f, "{:?}", &self.0[..last])
    }
}

impl Serialize for LatticePoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let last = self.0.iter().rposition(|&v| v != 0).map_or(0, |i| i + 1);
        self.0[..last].serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<i64> = Vec::deserialize(d)?;
        LatticePoint::from_slice(&v).map_err(serde::de::Error::custom)
    }
}

/// `p -> R^rot F^flip p + shift`, with `R` rotation by `pi/n` and `F` reflection
/// across the x-axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RigidMotion {
    pub rot: u32,
    pub flip: bool,
    pub shift: LatticePoint,
}

impl RigidMotion {
    pub const IDENTITY: RigidMotion = RigidMotion {
        rot: 0,
        flip: false,
        shift: LatticePoint::ZERO,
    };

    pub fn rotation(rot: u32) -> Self {
        RigidMotion {
            rot,
            flip: false,
            shift: LatticePoint::ZERO,
        }
    }

    pub fn translation(shift: LatticePoint) -> Self {
        RigidMotion {
            rot: 0,
            flip: false,
            shift,
        }
    }
}

/// Lattice tables for a fixed `n`.
#[derive(Clone, Debug)]
pub struct Lattice {
    n: u32,
    dim: usize,
    field: Arc<Field>,
    /// Lattice representation of `u_m` for `m` in `0..2n`.
    dirs: Vec<LatticePoint>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    kernel: Kernel,
}

/// Fixed-width integer arithmetic in `Z[a_2]` for the exact predicates.
#[derive(Clone, Debug)]
struct Kernel {
    d: usize,
    /// `2cos(i pi/n)` as integer coefficient vectors, per lattice basis index.
    xs: Vec<[i64; MAX_DIM]>,
    /// `sin(i pi/n)/sin(pi/n)`.
    ys: Vec<[i64; MAX_DIM]>,
    /// Reduced `x^j` for `j < 2d - 1`.
    powers: Vec<[i64; MAX_DIM]>,
    /// `4 - a_2^2`, so that `4 dot = X1 X2 + (4 - a_2^2) Y1 Y2`.
    four_minus_a2sq: [i64; MAX_DIM],
    a2: f64,
}

/// Largest field degree `(MAX_N - 1) / 2`.
const MAX_DEG: usize = MAX_DIM / 2;

type Coeffs = [i128; MAX_DEG];

impl Kernel {
    fn new(field: &Field) -> Self {
        let n = field.n() as usize;
        let d = field.degree();
        let lengths = cyclotomic::integer_lengths(field);
        let to_arr = |v: &[i64]| {
            let mut a = [0i64; MAX_DIM];
            a[..v.len()].copy_from_slice(v);
            a
        };
        let mut xs = Vec::with_capacity(n - 1);
        let mut ys = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let next = &lengths[i + 1];
            let mut x = to_arr(next);
            if i == 0 {
                // a_{-1} = -1.
                x[0] += 1;
            } else {
                for (xi, p) in x.iter_mut().zip(&lengths[i - 1]) {
                    *xi -= p;
                }
            }
            xs.push(x);
            ys.push(to_arr(&lengths[i]));
        }
        let mut powers = Vec::new();
        let mut x = field.one();
        for _ in 0..(2 * d).saturating_sub(1).max(1) {
            powers.push(to_arr(&x.to_i64s().expect("integral power")));
            x = field.mul(&x, &field.generator());
        }
        let a2sq = field.square(&field.generator());
        let fm = field.one().scale_int(4).sub(&a2sq);
        Kernel {
            d,
            xs,
            ys,
            powers,
            four_minus_a2sq: to_arr(&fm.to_i64s().unwrap()),
            a2: field.a2_f64(),
        }
    }

    fn xy(&self, p: &LatticePoint, dim: usize) -> Option<(Coeffs, Coeffs)> {
        let mut x = [0i128; MAX_DEG];
        let mut y = [0i128; MAX_DEG];
        for i in 0..dim {
            let c = i128::from(p.0[i]);
            if c == 0 {
                continue;
            }
            for j in 0..self.d {
                x[j] = x[j].checked_add(c * i128::from(self.xs[i][j]))?;
                y[j] = y[j].checked_add(c * i128::from(self.ys[i][j]))?;
            }
        }
        Some((x, y))
    }

    fn mul(&self, a: &Coeffs, b: &Coeffs) -> Option<Coeffs> {
        let d = self.d;
        let mut prod = [0i128; 2 * MAX_DEG];
        for i in 0..d {
            if a[i] == 0 {
                continue;
            }
            for j in 0..d {
                prod[i + j] = prod[i + j].checked_add(a[i].checked_mul(b[j])?)?;
            }
        }
        let mut out = [0i128; MAX_DEG];
        out[..d].copy_from_slice(&prod[..d]);
        for j in d..(2 * d).saturating_sub(1) {
            if prod[j] == 0 {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate().take(d) {
                *o = o.checked_add(prod[j].checked_mul(i128::from(self.powers[j][i]))?)?;
            }
        }
        Some(out)
    }

    fn sub(a: &Coeffs, b: &Coeffs) -> Option<Coeffs> {
        let mut o = [0i128; MAX_DEG];
        for i in 0..MAX_DEG {
            o[i] = a[i].checked_sub(b[i])?;
        }
        Some(o)
    }

    fn add(a: &Coeffs, b: &Coeffs) -> Option<Coeffs> {
        let mut o = [0i128; MAX_DEG];
        for i in 0..MAX_DEG {
            o[i] = a[i].checked_add(b[i])?;
        }
        Some(o)
    }

    /// Sign of `sum c_i a_2^i`; `None` if the float filter is inconclusive.
    fn float_sign(&self, c: &Coeffs) -> Option<Ordering> {
        let mut v = 0.0f64;
        let mut mag = 0.0f64;
        let mut p = 1.0f64;
        for &ci in &c[..self.d] {
            let f = ci as f64;
            v += f * p;
            mag += f.abs() * p;
            p *= self.a2;
        }
        let bound = mag * 1e-12;
        if v > bound {
            Some(Ordering::Greater)
        } else if v < -bound {
            Some(Ordering::Less)
        } else {
            None
        }
    }
}

fn to_field_element(c: &Coeffs, d: usize) -> FieldElement {
    FieldElement::from_coeffs(
        c[..d]
            .iter()
            .map(|&v| BigRational::from_integer(BigInt::from(v)))
            .collect(),
    )
}

impl Lattice {
    pub fn new(field: Arc<Field>) -> Result<Self> {
        let n = field.n();
        if n > MAX_N {
            return Err(Error::UnsupportedOrder(n));
        }
        let dim = (n - 1) as usize;
        // u_{n-1} = -u_0 + u_1 - u_2 + ... + u_{n-2} from the 2n-th cyclotomic polynomial.
        let mut top = LatticePoint::ZERO;
        for j in 0..dim {
            top.0[j] = if j % 2 == 0 { -1 } else { 1 };
        }
        let mut dirs = Vec::with_capacity(2 * n as usize);
        for m in 0..n as usize {
            dirs.push(if m < dim { LatticePoint::unit(m) } else { top });
        }
        for m in 0..n as usize {
            let v = dirs[m].neg();
            dirs.push(v);
        }
        let cos = (0..dim)
            .map(|i| (i as f64 * std::f64::consts::PI / n as f64).cos())
            .collect();
        let sin = (0..dim)
            .map(|i| (i as f64 * std::f64::consts::PI / n as f64).sin())
            .collect();
        let kernel = Kernel::new(&field);
        Ok(Lattice {
            n,
            dim,
            field,
            dirs,
            cos,
            sin,
            kernel,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    /// Lattice representation of `u_m`, `m` taken mod `2n`.
    pub fn direction(&self, m: i64) -> LatticePoint {
        self.dirs[m.rem_euclid(2 * i64::from(self.n)) as usize]
    }

    /// `a_k u_i = sum_{j<k} u_{i-k+1+2j}`.
    pub fn scaled_direction(&self, k: u32, i: i64) -> LatticePoint {
        let mut p = LatticePoint::ZERO;
        for j in 0..i64::from(k) {
            p = p.add(&self.direction(i - i64::from(k) + 1 + 2 * j));
        }
        p
    }

    pub fn apply_motion(&self, g: &RigidMotion, p: &LatticePoint) -> LatticePoint {
        let mut out = g.shift;
        let two_n = 2 * i64::from(self.n);
        for i in 0..self.dim {
            let c = p.0[i];
            if c == 0 {
                continue;
            }
            let mut idx = i as i64;
            if g.flip {
                idx = two_n - idx;
            }
            out.add_scaled(&self.direction(idx + i64::from(g.rot)), c);
        }
        out
    }

    /// Linear part only.
    pub fn apply_linear(&self, g: &RigidMotion, p: &LatticePoint) -> LatticePoint {
        self.apply_motion(
            &RigidMotion {
                shift: LatticePoint::ZERO,
                ..*g
            },
            p,
        )
    }

    /// `g o h`.
    pub fn compose(&self, g: &RigidMotion, h: &RigidMotion) -> RigidMotion {
        let two_n = 2 * self.n;
        let h_rot = if g.flip {
            (two_n - h.rot % two_n) % two_n
        } else {
            h.rot % two_n
        };
        RigidMotion {
            rot: (g.rot + h_rot) % two_n,
            flip: g.flip ^ h.flip,
            shift: self.apply_motion(g, &h.shift),
        }
    }

    pub fn inverse(&self, g: &RigidMotion) -> RigidMotion {
        let two_n = 2 * self.n;
        let lin = if g.flip {
            // (R^r F)^{-1} = F R^{-r} = R^r F.
            RigidMotion {
                rot: g.rot % two_n,
                flip: true,
                shift: LatticePoint::ZERO,
            }
        } else {
            RigidMotion {
                rot: (two_n - g.rot % two_n) % two_n,
                flip: false,
                shift: LatticePoint::ZERO,
            }
        };
        let shift = self.apply_motion(&lin, &g.shift).neg();
        RigidMotion { shift, ..lin }
    }

    /// Integer matrix of multiplication by `lambda`, as images of the basis vectors.
    pub fn scaling(&self, lambda: &InflationFactor) -> Scaling {
        let images = (0..self.dim)
            .map(|i| {
                let mut img = LatticePoint::ZERO;
                for (k, &c) in lambda.coeffs().iter().enumerate() {
                    if c > 0 {
                        img.add_scaled(&self.scaled_direction(k as u32 + 1, i as i64), c as i32);
                    }
                }
                img
            })
            .collect();
        Scaling {
            images,
            dim: self.dim,
        }
    }

    pub fn embed(&self, p: &LatticePoint) -> (f64, f64) {
        let mut x = 0.0;
        let mut y = 0.0;
        for i in 0..self.dim {
            let c = f64::from(p.0[i]);
            x += c * self.cos[i];
            y += c * self.sin[i];
        }
        (x, y)
    }

    /// Exact `(2x, y/sin(pi/n))` of a lattice point as field elements.
    pub fn exact_coordinates(&self, p: &LatticePoint) -> (FieldElement, FieldElement) {
        let d = self.field.degree();
        let mut x = self.field.zero();
        let mut y = self.field.zero();
        for i in 0..self.dim {
            let c = i64::from(p.0[i]);
            if c == 0 {
                continue;
            }
            let xi = FieldElement::from_ints(&self.kernel.xs[i][..d]);
            let yi = FieldElement::from_ints(&self.kernel.ys[i][..d]);
            x = x.add(&xi.scale_int(c));
            y = y.add(&yi.scale_int(c));
        }
        (x, y)
    }

    /// Sign of the cross product `(b - a) x (c - a)`.
    pub fn orientation_sign(
        &self,
        a: &LatticePoint,
        b: &LatticePoint,
        c: &LatticePoint,
    ) -> Ordering {
        self.orient(&self.vertex(a), &self.vertex(b), &self.vertex(c))
    }

    /// Lattice point with its cached float embedding and exact coordinates.
    pub fn vertex(&self, p: &LatticePoint) -> Vertex {
        let (x, y) = self.embed(p);
        let mut v = Vertex {
            p: *p,
            x,
            y,
            ex: [0; MAX_DEG],
            ey: [0; MAX_DEG],
            cached: false,
        };
        if let Some((ex, ey)) = self.kernel.xy(p, self.dim) {
            let fits = ex
                .iter()
                .chain(ey.iter())
                .all(|c| i64::try_from(*c).is_ok());
            if fits {
                v.ex = ex.map(|c| c as i64);
                v.ey = ey.map(|c| c as i64);
                v.cached = true;
            }
        }
        v
    }

    /// Exact sign of `(u1 - u0) x (v1 - v0)` from cached coordinates, if nothing overflows.
    fn cross_cached(&self, u0: &Vertex, u1: &Vertex, v0: &Vertex, v1: &Vertex) -> Option<Ordering> {
        if !(u0.cached && u1.cached && v0.cached && v1.cached) {
            return None;
        }
        let k = &self.kernel;
        let diff = |a: &[i64; MAX_DEG], b: &[i64; MAX_DEG]| -> Coeffs {
            std::array::from_fn(|i| i128::from(a[i]) - i128::from(b[i]))
        };
        let (ux, uy) = (diff(&u1.ex, &u0.ex), diff(&u1.ey, &u0.ey));
        let (vx, vy) = (diff(&v1.ex, &v0.ex), diff(&v1.ey, &v0.ey));
        let c = Kernel::sub(&k.mul(&ux, &vy)?, &k.mul(&uy, &vx)?)?;
        Some(self.kernel_sign(&c))
    }

    /// Exact sign of `(u1 - u0) . (v1 - v0)` from cached coordinates.
    fn dot_cached(&self, u0: &Vertex, u1: &Vertex, v0: &Vertex, v1: &Vertex) -> Option<Ordering> {
        if !(u0.cached && u1.cached && v0.cached && v1.cached) {
            return None;
        }
        let k = &self.kernel;
        let diff = |a: &[i64; MAX_DEG], b: &[i64; MAX_DEG]| -> Coeffs {
            std::array::from_fn(|i| i128::from(a[i]) - i128::from(b[i]))
        };
        let (ux, uy) = (diff(&u1.ex, &u0.ex), diff(&u1.ey, &u0.ey));
        let (vx, vy) = (diff(&v1.ex, &v0.ex), diff(&v1.ey, &v0.ey));
        let fm: Coeffs = std::array::from_fn(|i| i128::from(k.four_minus_a2sq[i]));
        let c = Kernel::add(&k.mul(&ux, &vx)?, &k.mul(&k.mul(&uy, &vy)?, &fm)?)?;
        Some(self.kernel_sign(&c))
    }

    /// [`Lattice::orientation_sign`] on vertices with cached coordinates.
    pub fn orient(&self, a: &Vertex, b: &Vertex, c: &Vertex) -> Ordering {
        let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if cross > FLOAT_MARGIN {
            return Ordering::Greater;
        }
        if cross < -FLOAT_MARGIN {
            return Ordering::Less;
        }
        if a.p == b.p || a.p == c.p || b.p == c.p {
            return Ordering::Equal;
        }
        self.cross_cached(a, b, a, c)
            .unwrap_or_else(|| self.orientation_exact(&a.p, &b.p, &c.p))
    }

    /// Exact orientation without the float filter.
    pub fn orientation_exact(
        &self,
        a: &LatticePoint,
        b: &LatticePoint,
        c: &LatticePoint,
    ) -> Ordering {
        let u = b.sub(a);
        let v = c.sub(a);
        let fast = (|| {
            let (ux, uy) = self.kernel.xy(&u, self.dim)?;
            let (vx, vy) = self.kernel.xy(&v, self.dim)?;
            Kernel::sub(&self.kernel.mul(&ux, &vy)?, &self.kernel.mul(&uy, &vx)?)
        })();
        match fast {
            Some(c) => self.kernel_sign(&c),
            None => {
                let (ux, uy) = self.exact_coordinates(&u);
                let (vx, vy) = self.exact_coordinates(&v);
                let f = &self.field;
                f.sign(&f.mul(&ux, &vy).sub(&f.mul(&uy, &vx)))
            }
        }
    }

    /// Sign of the dot product `u . v` of two lattice vectors.
    pub fn dot_sign(&self, u: &LatticePoint, v: &LatticePoint) -> Ordering {
        let (ux, uy) = self.embed(u);
        let (vx, vy) = self.embed(v);
        self.dot_sign_with(u, v, ux * vx + uy * vy)
    }

    /// Dot product sign given its float approximation.
    fn dot_sign_with(&self, u: &LatticePoint, v: &LatticePoint, dot: f64) -> Ordering {
        if dot > FLOAT_MARGIN {
            return Ordering::Greater;
        }
        if dot < -FLOAT_MARGIN {
            return Ordering::Less;
        }
        let k = &self.kernel;
        let fast = (|| {
            let (ux, uy) = k.xy(u, self.dim)?;
            let (vx, vy) = k.xy(v, self.dim)?;
            let fm: Coeffs = std::array::from_fn(|i| i128::from(k.four_minus_a2sq[i]));
            let yy = k.mul(&k.mul(&uy, &vy)?, &fm)?;
            Kernel::add(&k.mul(&ux, &vx)?, &yy)
        })();
        match fast {
            Some(c) => self.kernel_sign(&c),
            None => {
                let f = &self.field;
                let (ux, uy) = self.exact_coordinates(u);
                let (vx, vy) = self.exact_coordinates(v);
                let fm = FieldElement::from_ints(&k.four_minus_a2sq[..k.d]);
                f.sign(&f.mul(&ux, &vx).add(&f.mul(&f.mul(&uy, &vy), &fm)))
            }
        }
    }

    fn kernel_sign(&self, c: &Coeffs) -> Ordering {
        if c.iter().all(|&v| v == 0) {
            return Ordering::Equal;
        }
        self.kernel
            .float_sign(c)
            .unwrap_or_else(|| self.field.sign(&to_field_element(c, self.kernel.d)))
    }

    /// Squared Euclidean length as an exact field element: `4|v|^2 = X^2 + (4 - a_2^2) Y^2`, divided by 4.
    pub fn squared_length(&self, v: &LatticePoint) -> FieldElement {
        let f = &self.field;
        let (x, y) = self.exact_coordinates(v);
        let fm = FieldElement::from_ints(&self.kernel.four_minus_a2sq[..self.kernel.d]);
        let four = f.mul(&x, &x).add(&f.mul(&f.mul(&y, &y), &fm));
        four.scale(&BigRational::new(1.into(), 4.into()))
    }

    /// Twice the signed area of `(a, b, c)` divided by `sin(pi/n)`, times two:
    /// `X_u Y_v - Y_u X_v = 2 cross / sin(pi/n)`.
    pub fn cross_element(
        &self,
        a: &LatticePoint,
        b: &LatticePoint,
        c: &LatticePoint,
    ) -> FieldElement {
        let f = &self.field;
        let (ux, uy) = self.exact_coordinates(&b.sub(a));
        let (vx, vy) = self.exact_coordinates(&c.sub(a));
        f.mul(&ux, &vy).sub(&f.mul(&uy, &vx))
    }
}

/// Multiplication by an inflation factor as an integer linear map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scaling {
    images: Vec<LatticePoint>,
    dim: usize,
}

impl Scaling {
    pub fn apply(&self, p: &LatticePoint) -> LatticePoint {
        let mut out = LatticePoint::ZERO;
        for i in 0..self.dim {
            if p.0[i] != 0 {
                out.add_scaled(&self.images[i], p.0[i]);
            }
        }
        out
    }

    pub fn compose(&self, other: &Scaling) -> Scaling {
        Scaling {
            images: other.images.iter().map(|p| self.apply(p)).collect(),
            dim: self.dim,
        }
    }
}

pub fn scale_by(lattice: &Lattice, lambda: &InflationFactor, p: &LatticePoint) -> LatticePoint {
    lattice.scaling(lambda).apply(p)
}

/// A triangle with counterclockwise vertices; vertex `i` has angle `angles[i] pi/n`
/// and edge `i` joins the two other vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triangle {
    pub angles: AngleTriple,
    pub vertices: [LatticePoint; 3],
}

impl Triangle {
    pub fn new(
        lattice: &Lattice,
        angles: AngleTriple,
        vertices: [LatticePoint; 3],
    ) -> Result<Self> {
        let t = Triangle { angles, vertices };
        if lattice.orientation_sign(&vertices[0], &vertices[1], &vertices[2]) != Ordering::Greater {
            return Err(Error::Internal(format!(
                "triangle {vertices:?} is not counterclockwise"
            )));
        }
        Ok(t)
    }

    /// Endpoints of edge `i` in counterclockwise order.
    pub fn edge(&self, i: usize) -> (LatticePoint, LatticePoint) {
        (self.vertices[(i + 1) % 3], self.vertices[(i + 2) % 3])
    }
}

/// Directed segment with a length class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: LatticePoint,
    pub to: LatticePoint,
    pub length_class: u32,
}

impl Edge {
    pub fn same_segment(&self, other: &Edge) -> bool {
        (self.from == other.from && self.to == other.to)
            || (self.from == other.to && self.to == other.from)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SegmentRelation {
    Disjoint,
    Equal,
    SharedEndpointOnly,
    CollinearOverlap,
    Crossing,
    Touching,
}

impl Lattice {
    /// Whether `p` lies strictly inside segment `(a, b)`, given that it is on its line.
    fn strictly_between(&self, a: &Vertex, b: &Vertex, p: &Vertex) -> bool {
        if p.p == a.p || p.p == b.p {
            return false;
        }
        self.dot_v(a, p, a, b) == Ordering::Greater && self.dot_v(b, p, b, a) == Ordering::Greater
    }

    /// Sign of `(u1 - u0) . (v1 - v0)`.
    fn dot_v(&self, u0: &Vertex, u1: &Vertex, v0: &Vertex, v1: &Vertex) -> Ordering {
        let dot = (u1.x - u0.x) * (v1.x - v0.x) + (u1.y - u0.y) * (v1.y - v0.y);
        if dot > FLOAT_MARGIN {
            return Ordering::Greater;
        }
        if dot < -FLOAT_MARGIN {
            return Ordering::Less;
        }
        self.dot_cached(u0, u1, v0, v1)
            .unwrap_or_else(|| self.dot_sign_with(&u1.p.sub(&u0.p), &v1.p.sub(&v0.p), dot))
    }

    pub fn segment_relation(
        &self,
        e1: (&LatticePoint, &LatticePoint),
        e2: (&LatticePoint, &LatticePoint),
    ) -> SegmentRelation {
        self.segment_relation_v(
            (&self.vertex(e1.0), &self.vertex(e1.1)),
            (&self.vertex(e2.0), &self.vertex(e2.1)),
        )
    }

    pub fn segment_relation_v(
        &self,
        e1: (&Vertex, &Vertex),
        e2: (&Vertex, &Vertex),
    ) -> SegmentRelation {
        let (a1, b1) = e1;
        let (a2, b2) = e2;
        if (a1.p == a2.p && b1.p == b2.p) || (a1.p == b2.p && b1.p == a2.p) {
            return SegmentRelation::Equal;
        }
        let m = FLOAT_MARGIN;
        if a1.x.max(b1.x) < a2.x.min(b2.x) - m
            || a2.x.max(b2.x) < a1.x.min(b1.x) - m
            || a1.y.max(b1.y) < a2.y.min(b2.y) - m
            || a2.y.max(b2.y) < a1.y.min(b1.y) - m
        {
            return SegmentRelation::Disjoint;
        }
        let shared = a1.p == a2.p || a1.p == b2.p || b1.p == a2.p || b1.p == b2.p;
        let o1 = self.orient(a1, b1, a2);
        let o2 = self.orient(a1, b1, b2);
        if o1 == Ordering::Equal && o2 == Ordering::Equal {
            // Collinear: the segments overlap iff an endpoint of one lies strictly
            // inside the other, or they share both endpoints (handled above).
            if self.strictly_between(a1, b1, a2)
                || self.strictly_between(a1, b1, b2)
                || self.strictly_between(a2, b2, a1)
                || self.strictly_between(a2, b2, b1)
            {
                return SegmentRelation::CollinearOverlap;
            }
            return if shared {
                SegmentRelation::SharedEndpointOnly
            } else {
                SegmentRelation::Disjoint
            };
        }
        if shared {
            return SegmentRelation::SharedEndpointOnly;
        }
        let o3 = self.orient(a2, b2, a1);
        let o4 = self.orient(a2, b2, b1);
        let opposite =
            |x: Ordering, y: Ordering| x != Ordering::Equal && y != Ordering::Equal && x != y;
        if opposite(o1, o2) && opposite(o3, o4) {
            return SegmentRelation::Crossing;
        }
        if (o1 == Ordering::Equal && self.strictly_between(a1, b1, a2))
            || (o2 == Ordering::Equal && self.strictly_between(a1, b1, b2))
            || (o3 == Ordering::Equal && self.strictly_between(a2, b2, a1))
            || (o4 == Ordering::Equal && self.strictly_between(a2, b2, b1))
        {
            return SegmentRelation::Touching;
        }
        SegmentRelation::Disjoint
    }

    /// Whether the open interiors of two triangles (vertices in either order) intersect.
    pub fn interiors_overlap(&self, t: &[LatticePoint; 3], u: &[LatticePoint; 3]) -> bool {
        self.interiors_overlap_v(&t.map(|p| self.vertex(&p)), &u.map(|p| self.vertex(&p)))
    }

    pub fn interiors_overlap_v(&self, t: &[Vertex; 3], u: &[Vertex; 3]) -> bool {
        if !float_boxes_overlap(t, u) {
            return false;
        }
        let t = self.ccw_v(t);
        let u = self.ccw_v(u);
        !(self.separated_by_edge_of(&t, &u) || self.separated_by_edge_of(&u, &t))
    }

    fn separated_by_edge_of(&self, t: &[Vertex; 3], u: &[Vertex; 3]) -> bool {
        (0..3).any(|i| {
            let a = &t[i];
            let b = &t[(i + 1) % 3];
            u.iter().all(|p| self.orient(a, b, p) != Ordering::Greater)
        })
    }

    /// Vertices reordered counterclockwise.
    pub fn ccw(&self, t: &[LatticePoint; 3]) -> [LatticePoint; 3] {
        if self.orientation_sign(&t[0], &t[1], &t[2]) == Ordering::Less {
            [t[0], t[2], t[1]]
        } else {
            *t
        }
    }

    pub fn ccw_v(&self, t: &[Vertex; 3]) -> [Vertex; 3] {
        if self.orient(&t[0], &t[1], &t[2]) == Ordering::Less {
            [t[0], t[2], t[1]]
        } else {
            *t
        }
    }

    /// Closed containment of a point in a counterclockwise triangle.
    pub fn point_in_closed_triangle(&self, p: &LatticePoint, region: &[LatticePoint; 3]) -> bool {
        self.point_in_closed_triangle_v(&self.vertex(p), &region.map(|v| self.vertex(&v)))
    }

    pub fn point_in_closed_triangle_v(&self, p: &Vertex, region: &[Vertex; 3]) -> bool {
        (0..3).all(|i| self.orient(&region[i], &region[(i + 1) % 3], p) != Ordering::Less)
    }

    /// Both triangle predicates at once.
    pub fn triangle_predicates(
        &self,
        t: &[LatticePoint; 3],
        u: &[LatticePoint; 3],
        region: &Triangle,
    ) -> TrianglePredicates {
        TrianglePredicates {
            interiors_overlap: self.interiors_overlap(t, u),
            point_in_closed_region: u
                .iter()
                .all(|p| self.point_in_closed_triangle(p, &region.vertices)),
        }
    }

    /// Prototile with `V0` at the origin, `V1 = a_{k3} u_0`, `V2 = a_{k2} u_{k1}`.
    pub fn canonical_prototile(&self, triple: AngleTriple) -> Result<Triangle> {
        let [k1, k2, k3] = triple.angles();
        AngleTriple::new(self.n, k1, k2, k3)?;
        let n = self.n;
        let v1 = self.scaled_direction(cyclotomic::length_class(n, k3), 0);
        let v2 = self.scaled_direction(cyclotomic::length_class(n, k2), i64::from(k1));
        Triangle::new(self, triple, [LatticePoint::ZERO, v1, v2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrianglePredicates {
    pub interiors_overlap: bool,
    /// All vertices of the second triangle lie in the closed region.
    pub point_in_closed_region: bool,
}

/// Lattice point together with its float embedding, so filters need not recompute it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub p: LatticePoint,
    pub x: f64,
    pub y: f64,
    /// `2x` and `y / sin(pi/n)` as integer coefficient vectors over `a_2^j`.
    ex: [i64; MAX_DEG],
    ey: [i64; MAX_DEG],
    cached: bool,
}

fn float_boxes_overlap(t: &[Vertex; 3], u: &[Vertex; 3]) -> bool {
    let bt = bbox(t);
    let bu = bbox(u);
    let m = FLOAT_MARGIN;
    !(bt[2] < bu[0] - m || bu[2] < bt[0] - m || bt[3] < bu[1] - m || bu[3] < bt[1] - m)
}

/// `[min x, min y, max x, max y]`.
pub fn bbox(points: &[Vertex]) -> [f64; 4] {
    points.iter().fold(
        [
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        ],
        |b, v| [b[0].min(v.x), b[1].min(v.y), b[2].max(v.x), b[3].max(v.y)],
    )
}

/// Direction indices (mod `2n`) of the counterclockwise edges of a canonical prototile:
/// entry `i` is the direction of `V_{i+1} -> V_{i+2}`.
pub fn canonical_edge_directions(n: u32, triple: AngleTriple) -> [u32; 3] {
    let [k1, k2, _] = triple.angles();
    let two_n = 2 * n;
    [(n - k2) % two_n, (k1 + n) % two_n, 0]
}

/// All triangles containing an angle of `(n-1)/2` or `(n+1)/2`, sorted.
pub fn special_set(n: u32) -> Vec<AngleTriple> {
    let mut out = Vec::new();
    let (lo, hi) = ((n - 1) / 2, n.div_ceil(2));
    for k1 in 1..n {
        for k2 in k1..n {
            if k1 + k2 >= n {
                break;
            }
            let k3 = n - k1 - k2;
            if k3 < k2 {
                continue;
            }
            if [k1, k2, k3].iter().any(|&k| k == lo || k == hi) {
                out.push(AngleTriple([k1, k2, k3]));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn lattice(n: u32) -> Lattice {
        Lattice::new(Arc::new(Field::new(n).unwrap())).unwrap()
    }

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::from_slice(c).unwrap()
    }

    fn close(a: (f64, f64), b: (f64, f64)) -> bool {
        (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9
    }

    #[test]
    fn scaled_directions() {
        let l = lattice(7);
        assert_eq!(l.scaled_direction(1, 3), LatticePoint::unit(3));
        assert_eq!(l.scaled_direction(2, 1), pt(&[1, 0, 1]));
        assert_eq!(l.scaled_direction(3, 2), pt(&[1, 0, 1, 0, 1]));
        for k in 1..=3u32 {
            for i in 0..14 {
                let (x, y) = l.embed(&l.scaled_direction(k, i));
                let a = (k as f64 * PI / 7.0).sin() / (PI / 7.0).sin();
                let ang = i as f64 * PI / 7.0;
                assert!(close((x, y), (a * ang.cos(), a * ang.sin())));
            }
        }
    }

    #[test]
    fn rotation_uses_cyclotomic_relation() {
        let l = lattice(7);
        let g = RigidMotion::rotation(1);
        let img = l.apply_motion(&g, &LatticePoint::unit(5));
        assert_eq!(img, pt(&[-1, 1, -1, 1, -1, 1]));
        let (x, y) = l.embed(&img);
        assert!(close(
            (x, y),
            ((6.0 * PI / 7.0).cos(), (6.0 * PI / 7.0).sin())
        ));
        let f = RigidMotion {
            rot: 0,
            flip: true,
            shift: LatticePoint::ZERO,
        };
        let img = l.apply_motion(&f, &LatticePoint::unit(1));
        assert_eq!(img, l.direction(13));
        assert_eq!(img, pt(&[1, -1, 1, -1, 1, -1]));
        assert_eq!(
            l.apply_motion(&RigidMotion::IDENTITY, &pt(&[3, -1, 2])),
            pt(&[3, -1, 2])
        );
    }

    #[test]
    fn rotation_order_and_flip_involution() {
        for n in [5u32, 7, 11] {
            let l = lattice(n);
            let r = RigidMotion::rotation(1);
            let f = RigidMotion {
                rot: 0,
                flip: true,
                shift: LatticePoint::ZERO,
            };
            for i in 0..l.dim() {
                let e = LatticePoint::unit(i);
                let mut p = e;
                for _ in 0..2 * n {
                    p = l.apply_motion(&r, &p);
                }
                assert_eq!(p, e);
                assert_eq!(l.apply_motion(&f, &l.apply_motion(&f, &e)), e);
            }
        }
    }

    #[test]
    fn embedding() {
        let l = lattice(7);
        assert!(close(l.embed(&LatticePoint::unit(0)), (1.0, 0.0)));
        assert!(close(
            l.embed(&LatticePoint::unit(1)),
            ((PI / 7.0).cos(), (PI / 7.0).sin())
        ));
        assert!(close(l.embed(&LatticePoint::ZERO), (0.0, 0.0)));
    }

    #[test]
    fn scaling_examples() {
        let l = lattice(7);
        let f = l.field().clone();
        let lam = InflationFactor::new(&f, &[1, 1, 0]).unwrap();
        let img = scale_by(&l, &lam, &LatticePoint::unit(0));
        assert_eq!(img, LatticePoint::unit(0).add(&l.scaled_direction(2, 0)));
        let (x, y) = l.embed(&img);
        assert!(((x * x + y * y).sqrt() - f.to_f64(lam.value())).abs() < 1e-9);
        let one = InflationFactor::new(&f, &[1, 0, 0]).unwrap();
        assert_eq!(scale_by(&l, &one, &pt(&[2, -3, 1])), pt(&[2, -3, 1]));

        let l5 = lattice(5);
        let a2 = InflationFactor::new(l5.field(), &[0, 1]).unwrap();
        let p = pt(&[1, 0, 1]);
        assert_eq!(
            scale_by(&l5, &a2, &p),
            l5.scaled_direction(2, 0).add(&l5.scaled_direction(2, 2))
        );
    }

    #[test]
    fn orientation_examples() {
        let l = lattice(7);
        let o = LatticePoint::ZERO;
        let e0 = LatticePoint::unit(0);
        let e1 = LatticePoint::unit(1);
        assert_eq!(l.orientation_sign(&o, &e0, &e1), Ordering::Greater);
        assert_eq!(l.orientation_sign(&o, &e0, &e0.scale(2)), Ordering::Equal);
        assert_eq!(l.orientation_sign(&o, &e1, &e0), Ordering::Less);
        // Collinear through a nontrivial relation: a_2 u_1 = u_0 + u_2.
        let p = l.scaled_direction(2, 1);
        assert_eq!(l.orientation_exact(&o, &e1, &p), Ordering::Equal);
    }

    #[test]
    fn segment_relations() {
        let l = lattice(7);
        let o = LatticePoint::ZERO;
        let e0 = LatticePoint::unit(0);
        let e2 = LatticePoint::unit(2);
        assert_eq!(
            l.segment_relation((&o, &e0), (&o, &e0)),
            SegmentRelation::Equal
        );
        assert_eq!(
            l.segment_relation((&o, &e0), (&e0, &o)),
            SegmentRelation::Equal
        );
        assert_eq!(
            l.segment_relation((&o, &e0.scale(2)), (&e0, &e0.scale(3))),
            SegmentRelation::CollinearOverlap
        );
        assert_eq!(
            l.segment_relation((&o, &e0), (&e0, &e0.add(&e2))),
            SegmentRelation::SharedEndpointOnly
        );
        assert_eq!(
            l.segment_relation((&o, &e0), (&e0.scale(2), &e0.scale(3))),
            SegmentRelation::Disjoint
        );
        assert_eq!(
            l.segment_relation((&o, &e0), (&e0, &e0.scale(3))),
            SegmentRelation::SharedEndpointOnly
        );
        // A vertical-ish segment crossing the x-axis segment.
        let up = LatticePoint::unit(3);
        let down = l.direction(3 + 7);
        let mid = e0.scale(1);
        let a = mid.add(&down).sub(&LatticePoint::ZERO);
        let crossing = l.segment_relation((&o, &e0.scale(3)), (&a, &mid.add(&up)));
        assert_eq!(crossing, SegmentRelation::Crossing);
        let touching = l.segment_relation((&o, &e0.scale(3)), (&mid, &mid.add(&up)));
        assert_eq!(touching, SegmentRelation::Touching);
    }

    #[test]
    fn canonical_prototiles() {
        let l = lattice(7);
        let t = l.canonical_prototile(AngleTriple([1, 2, 4])).unwrap();
        assert!(close(l.embed(&t.vertices[0]), (0.0, 0.0)));
        assert!(close(l.embed(&t.vertices[1]), (2.2469796037, 0.0)));
        let v2 = l.embed(&t.vertices[2]);
        assert!((v2.0 - 1.6234898019).abs() < 1e-8 && (v2.1 - 0.7818314825).abs() < 1e-8);
        let (a, b) = t.edge(0);
        let (x0, y0) = l.embed(&a);
        let (x1, y1) = l.embed(&b);
        assert!(((x1 - x0).hypot(y1 - y0) - 1.0).abs() < 1e-9);

        let l5 = lattice(5);
        let t5 = l5.canonical_prototile(AngleTriple([1, 1, 3])).unwrap();
        let side = |t: &Triangle, i: usize, l: &Lattice| {
            let (a, b) = t.edge(i);
            let (x0, y0) = l.embed(&a);
            let (x1, y1) = l.embed(&b);
            (x1 - x0).hypot(y1 - y0)
        };
        assert!((side(&t5, 0, &l5) - 1.0).abs() < 1e-9);
        assert!((side(&t5, 1, &l5) - 1.0).abs() < 1e-9);
        assert!((side(&t5, 2, &l5) - 2.0 * (PI / 5.0).cos()).abs() < 1e-9);

        let t7 = l.canonical_prototile(AngleTriple([1, 1, 5])).unwrap();
        assert!((side(&t7, 2, &l) - 2.0 * (PI / 7.0).cos()).abs() < 1e-9);
        assert!(l.canonical_prototile(AngleTriple([1, 1, 4])).is_err());
    }

    #[test]
    fn prototile_sides_and_directions() {
        for n in [5u32, 7, 11] {
            let l = lattice(n);
            let f = l.field().clone();
            for t in special_set(n) {
                let tri = l.canonical_prototile(t).unwrap();
                let dirs = canonical_edge_directions(n, t);
                for i in 0..3 {
                    let (a, b) = tri.edge(i);
                    let k = t.angles()[i];
                    let len = f.to_f64(f.length(k as usize).unwrap());
                    let (x0, y0) = l.embed(&a);
                    let (x1, y1) = l.embed(&b);
                    assert!(((x1 - x0).powi(2) + (y1 - y0).powi(2) - len * len).abs() < 1e-9);
                    let exact = l.squared_length(&b.sub(&a));
                    assert_eq!(exact, f.square(f.length(k as usize).unwrap()));
                    let class = cyclotomic::length_class(n, k);
                    assert_eq!(b.sub(&a), l.scaled_direction(class, i64::from(dirs[i])));
                }
            }
        }
    }

    #[test]
    fn special_sets() {
        assert_eq!(
            special_set(7),
            vec![
                AngleTriple([1, 2, 4]),
                AngleTriple([1, 3, 3]),
                AngleTriple([2, 2, 3])
            ]
        );
        assert_eq!(
            special_set(5),
            vec![AngleTriple([1, 1, 3]), AngleTriple([1, 2, 2])]
        );
        let s11 = special_set(11);
        assert_eq!(s11.len(), 5);
        assert!(s11
            .iter()
            .all(|t| t.angles().iter().any(|&k| k == 5 || k == 6)));
    }

    #[test]
    fn triangle_predicate_examples() {
        let l = lattice(7);
        let t = l.canonical_prototile(AngleTriple([1, 2, 4])).unwrap();
        let region = l.canonical_prototile(AngleTriple([1, 2, 4])).unwrap();
        let p = l.triangle_predicates(&t.vertices, &t.vertices, &region);
        assert!(p.interiors_overlap && p.point_in_closed_region);
        // Reflect across edge 2 (the x-axis): shares exactly that edge.
        let f = RigidMotion {
            rot: 0,
            flip: true,
            shift: LatticePoint::ZERO,
        };
        let mirrored = t.vertices.map(|v| l.apply_motion(&f, &v));
        assert!(!l.interiors_overlap(&t.vertices, &mirrored));
        assert!(l.point_in_closed_triangle(&region.vertices[2], &region.vertices));
        assert!(!l.point_in_closed_triangle(&mirrored[2], &region.vertices));
    }

    #[test]
    fn motion_compose_and_inverse() {
        let l = lattice(7);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let g = random_motion(&l, &mut rng);
            let h = random_motion(&l, &mut rng);
            let p = random_point(&l, &mut rng);
            let gh = l.compose(&g, &h);
            assert_eq!(
                l.apply_motion(&gh, &p),
                l.apply_motion(&g, &l.apply_motion(&h, &p))
            );
            let gi = l.inverse(&g);
            assert_eq!(l.apply_motion(&gi, &l.apply_motion(&g, &p)), p);
        }
    }

    fn random_point(l: &Lattice, rng: &mut ChaCha8Rng) -> LatticePoint {
        let mut p = LatticePoint::ZERO;
        for i in 0..l.dim() {
            p.0[i] = rng.gen_range(-4..=4);
        }
        p
    }

    fn random_motion(l: &Lattice, rng: &mut ChaCha8Rng) -> RigidMotion {
        RigidMotion {
            rot: rng.gen_range(0..2 * l.n()),
            flip: rng.gen(),
            shift: random_point(l, rng),
        }
    }
}
