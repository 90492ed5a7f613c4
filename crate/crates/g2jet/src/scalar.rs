//! Coefficient backends for jets.
//!
//! Three runtime-selectable fields plus a dual-number layer:
//!
//! * [`Rational`] — arbitrary-precision rationals, the default for every
//!   exact verification.
//! * [`Radical`] — the quotient field Q[t]/(t^d − r) for a validated
//!   positive rational r and d ≤ 9, used where constants like 12^{3/2}
//!   or 12^{1/3} appear.
//! * [`BigFloat`] — arbitrary-precision binary floats for best-effort
//!   work outside the certified path.
//! * [`Dual`] — dual numbers over any backend; every linearization in
//!   the gauge machinery is an exact dual-number sweep.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

/// Field-like coefficient interface every backend implements.
///
/// Division and fractional powers are partial; exact backends either
/// return the exact result or refuse.
pub trait Scalar: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_big_ratio(r: &BigRational) -> Self;

    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, rhs: &Self) -> Result<Self>;

    /// `self^(num/den)`, exact in exact backends.
    fn pow_ratio(&self, num: i64, den: u32) -> Result<Self>;

    /// Exact sign of the real value.
    fn sign(&self) -> Sign;

    fn approx_f64(&self) -> f64;
    fn backend_name() -> &'static str;

    fn inv(&self) -> Result<Self> {
        Self::one().div(self)
    }
    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }
}

// ---------------------------------------------------------------------------
// exact rationals
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rational(pub BigRational);

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn big(&self) -> &BigRational {
        &self.0
    }
}

/// Exact q-th root of a rational, if it exists (sign-aware for odd q).
fn rational_root(x: &BigRational, q: u32) -> Option<BigRational> {
    if q == 1 {
        return Some(x.clone());
    }
    if x.is_zero() {
        return Some(BigRational::zero());
    }
    let negative = x.is_negative();
    if negative && q % 2 == 0 {
        return None;
    }
    let ax = x.abs();
    let rn = ax.numer().nth_root(q);
    let rd = ax.denom().nth_root(q);
    if num_traits::pow(rn.clone(), q as usize) != *ax.numer()
        || num_traits::pow(rd.clone(), q as usize) != *ax.denom()
    {
        return None;
    }
    let mut root = BigRational::new(rn, rd);
    if negative {
        root = -root;
    }
    Some(root)
}

/// `x^(num/den)` over Q, exact or None.
fn rational_pow(x: &BigRational, num: i64, den: u32) -> Option<BigRational> {
    if x.is_zero() {
        return if num > 0 {
            Some(BigRational::zero())
        } else {
            None
        };
    }
    let base = if num < 0 { x.recip() } else { x.clone() };
    let p = num.unsigned_abs() as usize;
    let powed = num_traits::pow(base, p);
    rational_root(&powed, den)
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Scalar for Rational {
    fn zero() -> Self {
        Rational(BigRational::zero())
    }
    fn one() -> Self {
        Rational(BigRational::one())
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(num, den)
    }
    fn from_big_ratio(r: &BigRational) -> Self {
        Rational(r.clone())
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn add(&self, rhs: &Self) -> Self {
        Rational(&self.0 + &rhs.0)
    }
    fn sub(&self, rhs: &Self) -> Self {
        Rational(&self.0 - &rhs.0)
    }
    fn mul(&self, rhs: &Self) -> Self {
        Rational(&self.0 * &rhs.0)
    }
    fn neg(&self) -> Self {
        Rational(-self.0.clone())
    }
    fn div(&self, rhs: &Self) -> Result<Self> {
        if rhs.0.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }
    fn pow_ratio(&self, num: i64, den: u32) -> Result<Self> {
        rational_pow(&self.0, num, den)
            .map(Rational)
            .ok_or_else(|| Error::RootNotRepresentable {
                value: self.0.to_string(),
                num,
                den,
                backend: Self::backend_name(),
            })
    }
    fn sign(&self) -> Sign {
        if self.0.is_zero() {
            Sign::Zero
        } else if self.0.is_positive() {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }
    fn approx_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
    fn backend_name() -> &'static str {
        "rational"
    }
}

// ---------------------------------------------------------------------------
// the radical field Q[t]/(t^d - r)
// ---------------------------------------------------------------------------

/// The ring data `t^degree = radicand`, validated at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadicalRing {
    degree: u32,
    radicand: BigRational,
}

impl RadicalRing {
    /// Validates that x^degree - radicand is irreducible over Q, so the
    /// quotient is a field containing the positive real root.
    pub fn new(degree: u32, radicand: BigRational) -> Result<Arc<Self>> {
        let fail = |reason: &str| Error::InvalidRing {
            degree,
            radicand: radicand.to_string(),
            reason: reason.to_string(),
        };
        if degree == 0 || degree > 9 {
            return Err(fail("degree must lie in 1..=9"));
        }
        if !radicand.is_positive() {
            return Err(fail("radicand must be positive"));
        }
        if degree > 1 {
            // x^d - r is irreducible over Q for positive r iff r is not a
            // p-th power for any prime p dividing d (the -4b^4 branch of the
            // classical criterion cannot trigger for positive r).
            for p in [2u32, 3, 5, 7] {
                if degree % p == 0 && rational_root(&radicand, p).is_some() {
                    return Err(fail("radicand is a perfect power; adjoin a smaller root"));
                }
            }
        }
        Ok(Arc::new(RadicalRing { degree, radicand }))
    }

    pub fn from_ints(degree: u32, num: i64, den: i64) -> Result<Arc<Self>> {
        RadicalRing::new(
            degree,
            BigRational::new(BigInt::from(num), BigInt::from(den)),
        )
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }
    pub fn radicand(&self) -> &BigRational {
        &self.radicand
    }

    /// Rational enclosure of the real root t = radicand^(1/degree),
    /// refined until the width drops below `eps`.
    fn root_interval(&self, eps: &BigRational) -> (BigRational, BigRational) {
        let one = BigRational::one();
        let (mut lo, mut hi) = if self.radicand >= one {
            (one.clone(), self.radicand.clone())
        } else {
            (self.radicand.clone(), one.clone())
        };
        let two = BigRational::from_integer(BigInt::from(2));
        while &hi - &lo > *eps {
            let mid = (&lo + &hi) / &two;
            let midp = num_traits::pow(mid.clone(), self.degree as usize);
            if midp <= self.radicand {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, hi)
    }
}

/// Element of Q[t]/(t^d − r).
///
/// Plain rationals carry no ring tag and unify with any ring on contact;
/// this lets generic code call `zero()`/`one()` without threading context.
#[derive(Clone, Debug)]
pub struct Radical {
    ring: Option<Arc<RadicalRing>>,
    /// Coefficients of 1, t, …, t^{d-1}; length d when ring-tagged, 1 otherwise.
    coeffs: Vec<BigRational>,
}

impl Radical {
    pub fn rational(q: BigRational) -> Self {
        Radical {
            ring: None,
            coeffs: vec![q],
        }
    }

    /// The adjoined root t itself.
    pub fn root(ring: &Arc<RadicalRing>) -> Self {
        let mut coeffs = vec![BigRational::zero(); ring.degree as usize];
        if ring.degree == 1 {
            coeffs[0] = ring.radicand.clone();
        } else {
            coeffs[1] = BigRational::one();
        }
        Radical {
            ring: Some(ring.clone()),
            coeffs,
        }
    }

    pub fn from_coeffs(ring: &Arc<RadicalRing>, mut coeffs: Vec<BigRational>) -> Self {
        coeffs.resize(ring.degree as usize, BigRational::zero());
        Radical {
            ring: Some(ring.clone()),
            coeffs,
        }
    }

    pub fn ring(&self) -> Option<&Arc<RadicalRing>> {
        self.ring.as_ref()
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// The rational part if the element is ring-free or has no t-components.
    pub fn as_rational(&self) -> Option<&BigRational> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(&self.coeffs[0])
        } else {
            None
        }
    }

    fn promote(&self, ring: &Arc<RadicalRing>) -> Vec<BigRational> {
        let mut c = self.coeffs.clone();
        c.resize(ring.degree as usize, BigRational::zero());
        c
    }

    fn unify(
        &self,
        rhs: &Self,
    ) -> Result<(Option<Arc<RadicalRing>>, Vec<BigRational>, Vec<BigRational>)> {
        match (&self.ring, &rhs.ring) {
            (Some(a), Some(b)) => {
                if a != b {
                    return Err(Error::RingMismatch);
                }
                Ok((Some(a.clone()), self.coeffs.clone(), rhs.coeffs.clone()))
            }
            (Some(a), None) => Ok((Some(a.clone()), self.coeffs.clone(), rhs.promote(a))),
            (None, Some(b)) => Ok((Some(b.clone()), self.promote(b), rhs.coeffs.clone())),
            (None, None) => Ok((None, self.coeffs.clone(), rhs.coeffs.clone())),
        }
    }

    fn reduce(ring: &RadicalRing, raw: Vec<BigRational>) -> Vec<BigRational> {
        let d = ring.degree as usize;
        let mut out = vec![BigRational::zero(); d];
        for (i, c) in raw.into_iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut pow = i;
            let mut c = c;
            while pow >= d {
                pow -= d;
                c *= &ring.radicand;
            }
            out[pow] += c;
        }
        out
    }

    /// Writes the element as s·t^m if it is a monomial in t.
    fn as_monomial(&self) -> Option<(BigRational, u32)> {
        let mut found: Option<(BigRational, u32)> = None;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if found.is_some() {
                return None;
            }
            found = Some((c.clone(), i as u32));
        }
        Some(found.unwrap_or((BigRational::zero(), 0)))
    }
}

impl PartialEq for Radical {
    fn eq(&self, other: &Self) -> bool {
        match self.unify(other) {
            Ok((_, a, b)) => a == b,
            Err(_) => false,
        }
    }
}

impl fmt::Display for Radical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, "+")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*t")?,
                _ => write!(f, "{c}*t^{i}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Polynomial division over Q: (quotient, remainder).
fn poly_divmod(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let bd = b.iter().rposition(|c| !c.is_zero()).expect("divisor zero");
    let mut rem = a.to_vec();
    let mut quo = vec![BigRational::zero(); a.len().saturating_sub(bd).max(1)];
    loop {
        let rd = match rem.iter().rposition(|c| !c.is_zero()) {
            Some(d) => d,
            None => break,
        };
        if rd < bd {
            break;
        }
        let f = &rem[rd] / &b[bd];
        let shift = rd - bd;
        for i in 0..=bd {
            let sub = &f * &b[i];
            rem[shift + i] -= sub;
        }
        quo[shift] += f;
    }
    (quo, rem)
}

/// Inverse of `a` modulo the irreducible m(t) = t^d - r via extended Euclid.
fn poly_inverse_mod(ring: &RadicalRing, a: &[BigRational]) -> Vec<BigRational> {
    let d = ring.degree as usize;
    let mut modulus = vec![BigRational::zero(); d + 1];
    modulus[0] = -ring.radicand.clone();
    modulus[d] = BigRational::one();

    // (r0, s0) and (r1, s1) with invariant r = s*a mod m
    let mut r0 = modulus;
    let mut s0 = vec![BigRational::zero()];
    let mut r1 = a.to_vec();
    let mut s1 = vec![BigRational::one()];
    while r1.iter().any(|c| !c.is_zero()) {
        let (q, rem) = poly_divmod(&r0, &r1);
        let mut s_new = s0.clone();
        // s_new = s0 - q*s1
        let prod_len = q.len() + s1.len();
        s_new.resize(s_new.len().max(prod_len), BigRational::zero());
        for (i, qc) in q.iter().enumerate() {
            if qc.is_zero() {
                continue;
            }
            for (j, sc) in s1.iter().enumerate() {
                let sub = qc * sc;
                s_new[i + j] -= sub;
            }
        }
        r0 = r1;
        s0 = s1;
        r1 = rem;
        s1 = s_new;
    }
    // r0 is the gcd, a nonzero constant since m is irreducible.
    let g = r0
        .iter()
        .find(|c| !c.is_zero())
        .expect("gcd of nonzero element vanished")
        .clone();
    debug_assert!(r0.iter().skip(1).all(|c| c.is_zero()), "gcd not constant");
    let mut inv = s0;
    for c in inv.iter_mut() {
        *c /= &g;
    }
    Radical::reduce(ring, inv)
}

impl Scalar for Radical {
    fn zero() -> Self {
        Radical::rational(BigRational::zero())
    }
    fn one() -> Self {
        Radical::rational(BigRational::one())
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Radical::rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }
    fn from_big_ratio(r: &BigRational) -> Self {
        Radical::rational(r.clone())
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
    fn add(&self, rhs: &Self) -> Self {
        let (ring, a, b) = self.unify(rhs).expect("radical ring mismatch");
        let coeffs = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        Radical { ring, coeffs }
    }
    fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }
    fn mul(&self, rhs: &Self) -> Self {
        let (ring, a, b) = self.unify(rhs).expect("radical ring mismatch");
        let mut raw = vec![BigRational::zero(); a.len() + b.len()];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                raw[i + j] += x * y;
            }
        }
        let coeffs = match &ring {
            Some(r) => Radical::reduce(r, raw),
            None => vec![raw.swap_remove(0)],
        };
        Radical { ring, coeffs }
    }
    fn neg(&self) -> Self {
        Radical {
            ring: self.ring.clone(),
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }
    fn div(&self, rhs: &Self) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (ring, a, b) = self.unify(rhs)?;
        match &ring {
            None => Ok(Radical {
                ring,
                coeffs: vec![&a[0] / &b[0]],
            }),
            Some(r) => {
                let binv = poly_inverse_mod(r, &b);
                let lhs = Radical {
                    ring: ring.clone(),
                    coeffs: a,
                };
                let rhs_inv = Radical { ring, coeffs: binv };
                Ok(lhs.mul(&rhs_inv))
            }
        }
    }
    fn pow_ratio(&self, num: i64, den: u32) -> Result<Self> {
        let err = || Error::RootNotRepresentable {
            value: self.to_string(),
            num,
            den,
            backend: Self::backend_name(),
        };
        if self.is_zero() {
            return if num > 0 {
                Ok(Self::zero())
            } else {
                Err(err())
            };
        }
        let (s, m) = self.as_monomial().ok_or_else(err)?;
        let ring = match &self.ring {
            None => {
                // plain rational living inside the radical backend
                let p = rational_pow(&s, num, den).ok_or_else(err)?;
                return Ok(Radical::rational(p));
            }
            Some(r) => r.clone(),
        };
        let d = ring.degree;
        // self^num as a monomial s_p * t^{m_p}
        let (sp, mp) = {
            let e = num.unsigned_abs();
            let total = (m as u64) * e;
            let mut sp = num_traits::pow(s.clone(), e as usize);
            let reduced = (total % d as u64) as u32;
            let carries = total / d as u64;
            sp *= num_traits::pow(ring.radicand.clone(), carries as usize);
            if num < 0 {
                // (s t^m)^{-1} = s^{-1} r^{-1} t^{d-m} when m > 0
                if reduced == 0 {
                    sp = sp.recip();
                    (sp, 0)
                } else {
                    sp = (sp * &ring.radicand).recip();
                    (sp, d - reduced)
                }
            } else {
                (sp, reduced)
            }
        };
        // q-th root: find m' with m'*q ≡ mp (mod d) and rational s'
        let q = den;
        for mq in 0..d {
            let total = (mq as u64) * (q as u64);
            if (total % d as u64) as u32 != mp {
                continue;
            }
            let carries = (total - mp as u64) / d as u64;
            let target = &sp / num_traits::pow(ring.radicand.clone(), carries as usize);
            if let Some(sroot) = rational_root(&target, q) {
                let mut coeffs = vec![BigRational::zero(); d as usize];
                coeffs[mq as usize] = sroot;
                return Ok(Radical {
                    ring: Some(ring),
                    coeffs,
                });
            }
        }
        Err(err())
    }
    fn sign(&self) -> Sign {
        if self.is_zero() {
            return Sign::Zero;
        }
        if let Some(q) = self.as_rational() {
            return if q.is_positive() {
                Sign::Positive
            } else {
                Sign::Negative
            };
        }
        let ring = self.ring.as_ref().expect("non-rational element has a ring");
        // interval refinement around the real root; a nonzero element of the
        // field cannot vanish at t, so this terminates
        let mut eps = BigRational::new(BigInt::one(), BigInt::from(16));
        for _ in 0..10_000 {
            let (lo, hi) = ring.root_interval(&eps);
            let mut vlo = BigRational::zero();
            let mut vhi = BigRational::zero();
            let mut plo = BigRational::one();
            let mut phi = BigRational::one();
            for c in &self.coeffs {
                if c.is_positive() {
                    vlo += c * &plo;
                    vhi += c * &phi;
                } else if c.is_negative() {
                    vlo += c * &phi;
                    vhi += c * &plo;
                }
                plo *= &lo;
                phi *= &hi;
            }
            if vlo.is_positive() {
                return Sign::Positive;
            }
            if vhi.is_negative() {
                return Sign::Negative;
            }
            eps /= BigRational::from_integer(BigInt::from(1 << 16));
        }
        unreachable!("sign refinement failed to converge");
    }
    fn approx_f64(&self) -> f64 {
        match &self.ring {
            None => self.coeffs[0].to_f64().unwrap_or(f64::NAN),
            Some(r) => {
                let t = r
                    .radicand
                    .to_f64()
                    .map(|x| x.powf(1.0 / r.degree as f64))
                    .unwrap_or(f64::NAN);
                let mut acc = 0.0;
                let mut p = 1.0;
                for c in &self.coeffs {
                    acc += c.to_f64().unwrap_or(f64::NAN) * p;
                    p *= t;
                }
                acc
            }
        }
    }
    fn backend_name() -> &'static str {
        "radical"
    }
}

// ---------------------------------------------------------------------------
// arbitrary-precision floats
// ---------------------------------------------------------------------------

use astro_float::{BigFloat as Abf, Consts, RoundingMode};
use std::cell::RefCell;
use std::sync::atomic::{AtomicUsize, Ordering};

static BIGFLOAT_PREC: AtomicUsize = AtomicUsize::new(256);

/// Sets the working precision (bits) for the big-float backend.
/// Configured once per run before any computation starts.
pub fn set_bigfloat_precision(bits: usize) {
    BIGFLOAT_PREC.store(bits.max(64), Ordering::SeqCst);
}

pub fn bigfloat_precision() -> usize {
    BIGFLOAT_PREC.load(Ordering::SeqCst)
}

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constants cache"));
}

const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Clone, Debug)]
pub struct BigFloat(pub Abf);

impl PartialEq for BigFloat {
    fn eq(&self, other: &Self) -> bool {
        self.0.cmp(&other.0) == Some(0)
    }
}

impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl BigFloat {
    fn check(v: Abf) -> Self {
        assert!(
            !v.is_nan() && !v.is_inf(),
            "big-float operation produced {v:?}"
        );
        BigFloat(v)
    }
}

impl Scalar for BigFloat {
    fn zero() -> Self {
        BigFloat(Abf::from_i64(0, bigfloat_precision()))
    }
    fn one() -> Self {
        BigFloat(Abf::from_i64(1, bigfloat_precision()))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        let p = bigfloat_precision();
        let n = Abf::from_i64(num, p);
        let d = Abf::from_i64(den, p);
        BigFloat::check(n.div(&d, p, RM))
    }
    fn from_big_ratio(r: &BigRational) -> Self {
        let p = bigfloat_precision();
        let conv = |x: &BigInt| -> Abf {
            let mut acc = Abf::from_i64(0, p);
            let base = Abf::from_i64(1i64 << 62, p);
            // digits in base 2^62, most significant first
            let (sign, mag) = (x.sign(), x.magnitude().clone());
            let digits = mag.to_u64_digits();
            for d in digits.iter().rev() {
                acc = acc.mul(&base, p, RM);
                acc = acc.add(&Abf::from_u64(*d, p), p, RM);
            }
            if sign == num_bigint::Sign::Minus {
                acc.neg()
            } else {
                acc
            }
        };
        let n = conv(r.numer());
        let d = conv(r.denom());
        BigFloat::check(n.div(&d, p, RM))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn add(&self, rhs: &Self) -> Self {
        BigFloat::check(self.0.add(&rhs.0, bigfloat_precision(), RM))
    }
    fn sub(&self, rhs: &Self) -> Self {
        BigFloat::check(self.0.sub(&rhs.0, bigfloat_precision(), RM))
    }
    fn mul(&self, rhs: &Self) -> Self {
        BigFloat::check(self.0.mul(&rhs.0, bigfloat_precision(), RM))
    }
    fn neg(&self) -> Self {
        BigFloat(self.0.neg())
    }
    fn div(&self, rhs: &Self) -> Result<Self> {
        if rhs.0.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(BigFloat::check(self.0.div(
            &rhs.0,
            bigfloat_precision(),
            RM,
        )))
    }
    fn pow_ratio(&self, num: i64, den: u32) -> Result<Self> {
        let p = bigfloat_precision();
        let err = || Error::RootNotRepresentable {
            value: self.0.to_string(),
            num,
            den,
            backend: Self::backend_name(),
        };
        if self.0.is_zero() {
            return if num > 0 {
                Ok(Self::zero())
            } else {
                Err(err())
            };
        }
        let negative = self.0.is_negative();
        if negative && den % 2 == 0 {
            return Err(err());
        }
        let abs = if negative {
            self.0.neg()
        } else {
            self.0.clone()
        };
        let root = match den {
            1 => abs,
            2 => abs.sqrt(p, RM),
            3 => abs.cbrt(p, RM),
            _ => CONSTS.with(|cc| {
                let cc = &mut cc.borrow_mut();
                let e = Abf::from_i64(1, p).div(&Abf::from_u64(den as u64, p), p, RM);
                abs.pow(&e, p, RM, cc)
            }),
        };
        let mut out = match num {
            1 => root,
            _ if num >= 0 => root.powi(num as usize, p, RM),
            _ => Abf::from_i64(1, p).div(&root.powi(num.unsigned_abs() as usize, p, RM), p, RM),
        };
        if negative && num % 2 != 0 {
            out = out.neg();
        }
        Ok(BigFloat::check(out))
    }
    fn sign(&self) -> Sign {
        if self.0.is_zero() {
            Sign::Zero
        } else if self.0.is_negative() {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }
    fn approx_f64(&self) -> f64 {
        format!("{}", self.0).parse().unwrap_or(f64::NAN)
    }
    fn backend_name() -> &'static str {
        "bigfloat"
    }
}

// ---------------------------------------------------------------------------
// dual numbers
// ---------------------------------------------------------------------------

/// `re + ε·eps` with ε² = 0; exact forward-mode differentiation.
#[derive(Clone, PartialEq, Debug)]
pub struct Dual<S: Scalar> {
    pub re: S,
    pub eps: S,
}

impl<S: Scalar> Dual<S> {
    pub fn constant(re: S) -> Self {
        Dual { re, eps: S::zero() }
    }
    pub fn new(re: S, eps: S) -> Self {
        Dual { re, eps }
    }
}

impl<S: Scalar> fmt::Display for Dual<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+eps*{}", self.re, self.eps)
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn zero() -> Self {
        Dual::constant(S::zero())
    }
    fn one() -> Self {
        Dual::constant(S::one())
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Dual::constant(S::from_ratio(num, den))
    }
    fn from_big_ratio(r: &BigRational) -> Self {
        Dual::constant(S::from_big_ratio(r))
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.eps.is_zero()
    }
    fn add(&self, rhs: &Self) -> Self {
        Dual {
            re: self.re.add(&rhs.re),
            eps: self.eps.add(&rhs.eps),
        }
    }
    fn sub(&self, rhs: &Self) -> Self {
        Dual {
            re: self.re.sub(&rhs.re),
            eps: self.eps.sub(&rhs.eps),
        }
    }
    fn mul(&self, rhs: &Self) -> Self {
        Dual {
            re: self.re.mul(&rhs.re),
            eps: self.re.mul(&rhs.eps).add(&self.eps.mul(&rhs.re)),
        }
    }
    fn neg(&self) -> Self {
        Dual {
            re: self.re.neg(),
            eps: self.eps.neg(),
        }
    }
    fn div(&self, rhs: &Self) -> Result<Self> {
        // (a+εb)/(c+εd) = a/c + ε (b c - a d)/c²
        let re = self.re.div(&rhs.re)?;
        let num = self.eps.mul(&rhs.re).sub(&self.re.mul(&rhs.eps));
        let eps = num.div(&rhs.re.mul(&rhs.re))?;
        Ok(Dual { re, eps })
    }
    fn pow_ratio(&self, num: i64, den: u32) -> Result<Self> {
        // (a+εb)^α = a^α + ε α a^{α-1} b
        let y = self.re.pow_ratio(num, den)?;
        if self.eps.is_zero() {
            return Ok(Dual::constant(y));
        }
        let alpha = S::from_ratio(num, den as i64);
        let eps = alpha.mul(&y.div(&self.re)?).mul(&self.eps);
        Ok(Dual { re: y, eps })
    }
    fn sign(&self) -> Sign {
        self.re.sign()
    }
    fn approx_f64(&self) -> f64 {
        self.re.approx_f64()
    }
    fn backend_name() -> &'static str {
        "dual"
    }
}

/// The ratio (α choose n)·coefficients for binomial series, computed over Q
/// and injected into the target backend.
pub fn binomial_coefficient(alpha_num: i64, alpha_den: u32, n: u32) -> BigRational {
    let alpha = BigRational::new(BigInt::from(alpha_num), BigInt::from(alpha_den));
    let mut acc = BigRational::one();
    for j in 0..n {
        let factor = &alpha - BigRational::from_integer(BigInt::from(j));
        acc *= factor;
        acc /= BigRational::from_integer(BigInt::from(j + 1));
    }
    acc
}
