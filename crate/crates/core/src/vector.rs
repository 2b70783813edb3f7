//! Small real and complex 3-vectors.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn from_f64(v: [f64; 3]) -> Self {
        Self::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2]))
    }

    pub fn to_f64(self) -> [f64; 3] {
        [self.x.as_f64(), self.y.as_f64(), self.z.as_f64()]
    }

    pub fn unit_x() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    pub fn unit_y() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    pub fn unit_z() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    /// Unit vector along axis `i` (0, 1, 2).
    pub fn unit(i: usize) -> Self {
        match i {
            0 => Self::unit_x(),
            1 => Self::unit_y(),
            _ => Self::unit_z(),
        }
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    /// Returns `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self * (T::one() / n))
        } else {
            None
        }
    }

    #[inline]
    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn max_abs(self) -> T {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(U::lit(self.x.as_f64()), U::lit(self.y.as_f64()), U::lit(self.z.as_f64()))
    }

    /// Orthonormal pair `(a, b)` spanning the plane normal to `n`, with `a × b = n̂`.
    ///
    /// `a` is `ẑ × n̂` normalized, falling back to `x̂` when `n̂` is (anti)parallel to `ẑ`.
    /// The same rule orients loop sources, circular paths and photon polarizations.
    pub fn transverse_frame(n: Self) -> Option<(Self, Self)> {
        let n = n.normalized()?;
        let c = Self::unit_z().cross(n);
        let a = if c.norm() > T::lit(1e-9) { c.normalized()? } else { Self::unit_x() };
        Some((a, n.cross(a)))
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> SubAssign for Vec3<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T: Real> Zero for Vec3<T> {
    fn zero() -> Self {
        Vec3::zero()
    }
    fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero() && self.z.is_zero()
    }
}

/// Complex 3-vector, used for Fourier components of currents and fields.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CVec3<T> {
    pub x: Complex<T>,
    pub y: Complex<T>,
    pub z: Complex<T>,
}

impl<T: Real> CVec3<T> {
    #[inline]
    pub fn new(x: Complex<T>, y: Complex<T>, z: Complex<T>) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(z, z, z)
    }

    /// `re + i·im`.
    #[inline]
    pub fn from_parts(re: Vec3<T>, im: Vec3<T>) -> Self {
        Self::new(Complex::new(re.x, im.x), Complex::new(re.y, im.y), Complex::new(re.z, im.z))
    }

    #[inline]
    pub fn re(&self) -> Vec3<T> {
        Vec3::new(self.x.re, self.y.re, self.z.re)
    }

    #[inline]
    pub fn im(&self) -> Vec3<T> {
        Vec3::new(self.x.im, self.y.im, self.z.im)
    }

    #[inline]
    pub fn conj(&self) -> Self {
        Self::new(self.x.conj(), self.y.conj(), self.z.conj())
    }

    /// Bilinear product `Σ v_i c_i` with a real vector (no conjugation).
    #[inline]
    pub fn dot_real(&self, v: Vec3<T>) -> Complex<T> {
        self.x * v.x + self.y * v.y + self.z * v.z
    }

    /// Bilinear product `Σ a_i b_i` (no conjugation).
    #[inline]
    pub fn dot(&self, o: &Self) -> Complex<T> {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// `k × self` for a real vector `k`.
    #[inline]
    pub fn cross_from_real(&self, k: Vec3<T>) -> Self {
        Self::new(
            self.z * k.y - self.y * k.z,
            self.x * k.z - self.z * k.x,
            self.y * k.x - self.x * k.y,
        )
    }

    #[inline]
    pub fn scale(&self, s: Complex<T>) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    #[inline]
    pub fn scale_real(&self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    /// Euclidean norm `sqrt(Σ |c_i|²)`.
    pub fn norm(&self) -> T {
        (self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()).sqrt()
    }

    /// Complex vector `c·v` from a complex scalar and a real vector.
    #[inline]
    pub fn from_real_scaled(v: Vec3<T>, c: Complex<T>) -> Self {
        Self::new(c * v.x, c * v.y, c * v.z)
    }
}

impl<T: Real> Add for CVec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for CVec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Mul<T> for CVec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        self.scale_real(s)
    }
}

impl<T: Real> Sub for CVec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Zero for CVec3<T> {
    fn zero() -> Self {
        CVec3::zero()
    }
    fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero() && self.z.is_zero()
    }
}
