//! Differential forms on R^7 with jet coefficients.
//!
//! Basis m-forms are indexed by strictly increasing index tuples, stored as
//! 7-bit masks. The module provides the graded-commutative wedge, interior
//! product against a jet vector field, the exterior derivative, Taylor
//! projection, coordinate dilation, and the radial homotopy that witnesses
//! the Poincaré lemma on polynomial forms.

use std::fmt;

use crate::error::{Error, Result};
use crate::jet::{Expo, Jet};
use crate::scalar::Scalar;

/// Strictly increasing tuple of indices from 1..=7 as a bitmask
/// (bit i-1 set means index i is present).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(u8);

pub const FULL_MASK: MultiIndex = MultiIndex(0x7f);

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(0)
    }

    pub fn from_mask(mask: u8) -> Self {
        debug_assert!(mask < 0x80);
        MultiIndex(mask)
    }

    pub fn mask(self) -> u8 {
        self.0
    }

    pub fn len(self) -> u8 {
        self.0.count_ones() as u8
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, index: u8) -> bool {
        self.0 >> (index - 1) & 1 == 1
    }

    pub fn complement(self) -> Self {
        MultiIndex(!self.0 & 0x7f)
    }

    /// 1-based indices in ascending order.
    pub fn indices(self) -> Vec<u8> {
        (1..=7).filter(|&i| self.contains(i)).collect()
    }

    /// Canonicalizes an arbitrary tuple: None on repeats, otherwise the
    /// sorted mask together with the permutation sign.
    pub fn from_indices(idx: &[u8]) -> Option<(Self, i8)> {
        let mut v = idx.to_vec();
        let mut sign = 1i8;
        for i in 1..v.len() {
            let mut j = i;
            while j > 0 && v[j - 1] > v[j] {
                v.swap(j - 1, j);
                sign = -sign;
                j -= 1;
            }
        }
        let mut mask = 0u8;
        for &i in &v {
            debug_assert!((1..=7).contains(&i));
            let bit = 1 << (i - 1);
            if mask & bit != 0 {
                return None;
            }
            mask |= bit;
        }
        Some((MultiIndex(mask), sign))
    }

    /// Sign of e^A wedge e^B for disjoint A, B: parity of the number of
    /// pairs (a in A, b in B) with a > b.
    pub fn wedge_sign(self, rhs: MultiIndex) -> i8 {
        debug_assert!(self.0 & rhs.0 == 0);
        let mut inversions = 0u32;
        for b in 0..7 {
            if rhs.0 >> b & 1 == 1 {
                inversions += (self.0 >> (b + 1)).count_ones();
            }
        }
        if inversions % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Position of `index` inside the ascending tuple (0-based).
    fn position(self, index: u8) -> u32 {
        (self.0 & ((1 << (index - 1)) - 1)).count_ones()
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e^{{")?;
        for i in self.indices() {
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Degree-m differential form with jet coefficients.
#[derive(Clone, PartialEq)]
pub struct Form<S: Scalar> {
    degree: u8,
    order: u32,
    /// Sorted by mask, zero jets removed.
    comps: Vec<(MultiIndex, Jet<S>)>,
}

impl<S: Scalar> fmt::Debug for Form<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.comps.is_empty() {
            return write!(f, "0 (degree {})", self.degree);
        }
        for (n, (m, j)) in self.comps.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({j}) {m:?}")?;
        }
        Ok(())
    }
}

fn normalize_comps<S: Scalar>(mut raw: Vec<(MultiIndex, Jet<S>)>) -> Vec<(MultiIndex, Jet<S>)> {
    raw.sort_by_key(|(m, _)| *m);
    let mut out: Vec<(MultiIndex, Jet<S>)> = Vec::with_capacity(raw.len());
    for (m, j) in raw {
        match out.last_mut() {
            Some((lm, lj)) if *lm == m => *lj = lj.add(&j).expect("component orders agree"),
            _ => out.push((m, j)),
        }
    }
    out.retain(|(_, j)| !j.is_zero());
    out
}

impl<S: Scalar> Form<S> {
    pub fn zero(degree: u8, order: u32) -> Self {
        debug_assert!(degree <= 7);
        Form {
            degree,
            order,
            comps: Vec::new(),
        }
    }

    /// Constant basis form e^I.
    pub fn basis(index: MultiIndex, order: u32) -> Self {
        Form {
            degree: index.len(),
            order,
            comps: vec![(index, Jet::one(order))],
        }
    }

    /// Wraps a jet as a 0-form.
    pub fn scalar(j: Jet<S>) -> Self {
        let order = j.order();
        let comps = if j.is_zero() {
            Vec::new()
        } else {
            vec![(MultiIndex::empty(), j)]
        };
        Form {
            degree: 0,
            order,
            comps,
        }
    }

    pub fn from_comps(degree: u8, order: u32, raw: Vec<(MultiIndex, Jet<S>)>) -> Self {
        for (m, j) in &raw {
            assert_eq!(m.len(), degree, "component of wrong length");
            assert_eq!(j.order(), order, "component of wrong order");
        }
        Form {
            degree,
            order,
            comps: normalize_comps(raw),
        }
    }

    pub fn degree(&self) -> u8 {
        self.degree
    }
    pub fn order(&self) -> u32 {
        self.order
    }
    pub fn comps(&self) -> &[(MultiIndex, Jet<S>)] {
        &self.comps
    }
    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn comp(&self, index: MultiIndex) -> Jet<S> {
        match self.comps.binary_search_by_key(&index, |(m, _)| *m) {
            Ok(i) => self.comps[i].1.clone(),
            Err(_) => Jet::zero(self.order),
        }
    }

    /// Minimum effective order over the components (order for the zero form).
    pub fn eff(&self) -> i64 {
        self.comps
            .iter()
            .map(|(_, j)| j.eff())
            .min()
            .unwrap_or(self.order as i64)
    }

    pub fn with_eff(mut self, eff: i64) -> Self {
        self.comps = self
            .comps
            .into_iter()
            .map(|(m, j)| (m, j.with_eff(eff)))
            .collect();
        self
    }

    /// Smallest total degree over all coefficient jets; order+1 if zero.
    pub fn valuation(&self) -> u32 {
        self.comps
            .iter()
            .map(|(_, j)| j.valuation())
            .min()
            .unwrap_or(self.order + 1)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        if self.degree != rhs.degree {
            return Err(Error::WrongDegree {
                expected: self.degree,
                found: rhs.degree,
            });
        }
        if self.order != rhs.order {
            return Err(Error::OrderMismatch {
                left: self.order,
                right: rhs.order,
            });
        }
        let mut raw = self.comps.clone();
        raw.extend(rhs.comps.iter().cloned());
        Ok(Form {
            degree: self.degree,
            order: self.order,
            comps: normalize_comps(raw),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Self {
        Form {
            degree: self.degree,
            order: self.order,
            comps: self.comps.iter().map(|(m, j)| (*m, j.neg())).collect(),
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        Form {
            degree: self.degree,
            order: self.order,
            comps: self
                .comps
                .iter()
                .map(|(m, j)| (*m, j.scale(c)))
                .filter(|(_, j)| !j.is_zero())
                .collect(),
        }
    }

    pub fn scale_ratio(&self, num: i64, den: i64) -> Self {
        self.scale(&S::from_ratio(num, den))
    }

    /// Multiplies every coefficient by a jet (module structure over jets).
    pub fn scale_jet(&self, j: &Jet<S>) -> Result<Self> {
        let mut comps = Vec::with_capacity(self.comps.len());
        for (m, c) in &self.comps {
            let p = c.mul(j)?;
            if !p.is_zero() {
                comps.push((*m, p));
            }
        }
        Ok(Form {
            degree: self.degree,
            order: self.order,
            comps,
        })
    }

    /// Graded-commutative wedge product.
    pub fn wedge(&self, rhs: &Self) -> Result<Self> {
        if self.degree + rhs.degree > 7 {
            return Err(Error::DegreeOverflow {
                left: self.degree,
                right: rhs.degree,
            });
        }
        if self.order != rhs.order {
            return Err(Error::OrderMismatch {
                left: self.order,
                right: rhs.order,
            });
        }
        let mut raw = Vec::new();
        for (ma, ja) in &self.comps {
            for (mb, jb) in &rhs.comps {
                if ma.mask() & mb.mask() != 0 {
                    continue;
                }
                let mut p = ja.mul(jb)?;
                if ma.wedge_sign(*mb) < 0 {
                    p = p.neg();
                }
                raw.push((MultiIndex::from_mask(ma.mask() | mb.mask()), p));
            }
        }
        Ok(Form {
            degree: self.degree + rhs.degree,
            order: self.order,
            comps: normalize_comps(raw),
        })
    }

    /// Interior product X ⌟ a against a jet vector field.
    pub fn interior(&self, field: &VectorFieldJet<S>) -> Result<Self> {
        if self.degree == 0 {
            return Err(Error::WrongDegree {
                expected: 1,
                found: 0,
            });
        }
        let mut raw = Vec::new();
        for (m, j) in &self.comps {
            for i in m.indices() {
                let xi = &field.comps[(i - 1) as usize];
                if xi.is_zero() {
                    continue;
                }
                let mut p = j.mul(xi)?;
                if m.position(i) % 2 == 1 {
                    p = p.neg();
                }
                raw.push((MultiIndex::from_mask(m.mask() & !(1 << (i - 1))), p));
            }
        }
        Ok(Form {
            degree: self.degree - 1,
            order: self.order,
            comps: normalize_comps(raw),
        })
    }

    /// Interior product against the constant frame field e_axis.
    pub fn interior_axis(&self, axis: u8) -> Result<Self> {
        if self.degree == 0 {
            return Err(Error::WrongDegree {
                expected: 1,
                found: 0,
            });
        }
        let bit = 1u8 << (axis - 1);
        let mut raw = Vec::new();
        for (m, j) in &self.comps {
            if m.mask() & bit == 0 {
                continue;
            }
            let mut p = j.clone();
            if m.position(axis) % 2 == 1 {
                p = p.neg();
            }
            raw.push((MultiIndex::from_mask(m.mask() & !bit), p));
        }
        Ok(Form {
            degree: self.degree - 1,
            order: self.order,
            comps: normalize_comps(raw),
        })
    }

    /// Exterior derivative, computed componentwise from jet partials.
    /// Costs one effective order.
    pub fn d(&self) -> Result<Self> {
        if self.degree == 7 {
            return Err(Error::WrongDegree {
                expected: 6,
                found: 7,
            });
        }
        let mut raw = Vec::new();
        for (m, j) in &self.comps {
            for axis in 1..=7u8 {
                if m.contains(axis) {
                    continue;
                }
                let pj = j.partial(axis);
                if pj.is_zero() {
                    // keep effective-order accounting honest even for zeros
                    raw.push((MultiIndex::from_mask(m.mask() | (1 << (axis - 1))), pj));
                    continue;
                }
                let one = MultiIndex::from_mask(1 << (axis - 1));
                let signed = if one.wedge_sign(*m) < 0 { pj.neg() } else { pj };
                raw.push((MultiIndex::from_mask(m.mask() | (1 << (axis - 1))), signed));
            }
        }
        // normalize_comps drops zero jets; reapply the effective order bound
        let eff = self.eff() - 1;
        let mut out = Form {
            degree: self.degree + 1,
            order: self.order,
            comps: normalize_comps(raw),
        };
        out = out.with_eff(eff);
        Ok(out)
    }

    /// Closedness of the stored data through the effective order of d(a).
    pub fn is_closed(&self) -> bool {
        if self.degree == 7 {
            return true;
        }
        let da = self.d().expect("degree < 7");
        let through = da.eff().max(0) as u32;
        da.comps
            .iter()
            .all(|(_, j)| j.valuation() > through.min(j.order()))
    }

    /// Taylor projection: keeps the jets through total degree n
    /// (`keep_low = true`, the Taylor polynomial P_n) or subtracts them
    /// (`keep_low = false`, killing all jets through order n at the origin).
    pub fn taylor_project(&self, n: u32, keep_low: bool) -> Result<Self> {
        let mut comps = Vec::with_capacity(self.comps.len());
        for (m, j) in &self.comps {
            let t = if keep_low {
                j.truncate(n)?
            } else {
                j.kill_low(n)?
            };
            if !t.is_zero() {
                comps.push((*m, t));
            }
        }
        Ok(Form {
            degree: self.degree,
            order: self.order,
            comps,
        })
    }

    /// Dilation: substitutes x_i -> s^{-1} x_i in every coefficient.
    pub fn dilate(&self, s: &S) -> Result<Self> {
        if s.is_zero() {
            return Err(Error::ZeroDilation);
        }
        let sinv = s.inv()?;
        let mut comps = Vec::with_capacity(self.comps.len());
        for (m, j) in &self.comps {
            comps.push((*m, j.substitute_scale(&sinv)?));
        }
        Ok(Form {
            degree: self.degree,
            order: self.order,
            comps,
        })
    }

    /// Radial homotopy h with d(h b) + h(d b) = b on polynomial forms of
    /// degree >= 1: each monomial term x^a e^I of weight w = |a| + |I| maps
    /// to w^{-1} (radial field ⌟ x^a e^I).
    pub fn radial_homotopy(&self) -> Result<Self> {
        if self.degree == 0 {
            return Err(Error::WrongDegree {
                expected: 1,
                found: 0,
            });
        }
        let mut raw: Vec<(MultiIndex, Jet<S>)> = Vec::new();
        let eff = self.eff();
        for (m, j) in &self.comps {
            for (e, c) in j.terms() {
                let w = e.degree() + m.len() as u32;
                let winv = S::from_ratio(1, w as i64);
                for i in m.indices() {
                    let me = e.mul(Expo::var(i));
                    if me.degree() > self.order {
                        continue;
                    }
                    let mut coeff = c.mul(&winv);
                    if m.position(i) % 2 == 1 {
                        coeff = coeff.neg();
                    }
                    raw.push((
                        MultiIndex::from_mask(m.mask() & !(1 << (i - 1))),
                        Jet::from_terms(self.order, vec![(me, coeff)]),
                    ));
                }
            }
        }
        let out = Form {
            degree: self.degree - 1,
            order: self.order,
            comps: normalize_comps(raw),
        };
        Ok(out.with_eff((eff + 1).min(self.order as i64)))
    }

    /// Componentwise homogeneous part of the coefficient jets.
    pub fn homogeneous_part(&self, degree: u32) -> Self {
        Form {
            degree: self.degree,
            order: self.order,
            comps: self
                .comps
                .iter()
                .map(|(m, j)| (*m, j.homogeneous_part(degree)))
                .filter(|(_, j)| !j.is_zero())
                .collect(),
        }
    }

    /// Constant-term form (value at the origin).
    pub fn at_origin(&self) -> Vec<(MultiIndex, S)> {
        self.comps
            .iter()
            .filter_map(|(m, j)| {
                let c = j.eval0();
                if c.is_zero() {
                    None
                } else {
                    Some((*m, c))
                }
            })
            .collect()
    }

    /// Data equality through total degree n.
    pub fn eq_through(&self, rhs: &Self, n: u32) -> bool {
        if self.degree != rhs.degree {
            return false;
        }
        let masks: std::collections::BTreeSet<MultiIndex> = self
            .comps
            .iter()
            .chain(rhs.comps.iter())
            .map(|(m, _)| *m)
            .collect();
        masks
            .into_iter()
            .all(|m| self.comp(m).eq_through(&rhs.comp(m), n))
    }

    /// Equality to the common effective order (the honest comparison for
    /// identities involving derivatives).
    pub fn eq_to_eff(&self, rhs: &Self) -> bool {
        let n = self.eff().min(rhs.eff());
        if n < 0 {
            return true;
        }
        self.eq_through(rhs, n as u32)
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> Form<T> {
        Form {
            degree: self.degree,
            order: self.order,
            comps: self
                .comps
                .iter()
                .map(|(m, j)| (*m, j.map_coeffs(f)))
                .filter(|(_, j)| !j.is_zero())
                .collect(),
        }
    }

    pub fn with_order(&self, order: u32) -> Self {
        Form {
            degree: self.degree,
            order,
            comps: self
                .comps
                .iter()
                .map(|(m, j)| (*m, j.with_order(order)))
                .filter(|(_, j)| !j.is_zero())
                .collect(),
        }
    }

    /// Pullback by the linear map x -> A x (exact substitution; basis
    /// covectors transform by the transpose action).
    pub fn pullback_linear(&self, a: &[[S; 7]; 7]) -> Result<Self> {
        // images of the coordinate functions: x_t -> sum_j a[t][j] x_j
        let lin: Vec<Jet<S>> = (0..7)
            .map(|t| {
                let raw = (0..7)
                    .map(|j| (Expo::var(j as u8 + 1), a[t][j].clone()))
                    .filter(|(_, c)| !c.is_zero())
                    .collect();
                Jet::from_terms(self.order, raw)
            })
            .collect();
        // images of the basis covectors: e^t -> sum_j a[t][j] e^j
        let cov: Vec<Form<S>> = (0..7)
            .map(|t| {
                let raw = (0..7)
                    .map(|j| {
                        (
                            MultiIndex::from_mask(1 << j),
                            Jet::constant(a[t][j].clone(), self.order),
                        )
                    })
                    .filter(|(_, j)| !j.is_zero())
                    .collect();
                Form {
                    degree: 1,
                    order: self.order,
                    comps: normalize_comps(raw),
                }
            })
            .collect();
        let mut acc = Form::zero(self.degree, self.order);
        for (m, j) in &self.comps {
            // substitute coordinates into the jet
            let mut sub = Jet::constant(S::zero(), self.order);
            for (e, c) in j.terms() {
                let mut mono = Jet::constant(c.clone(), self.order);
                for axis in 1..=7u8 {
                    for _ in 0..e.power(axis) {
                        mono = mono.mul(&lin[(axis - 1) as usize])?;
                    }
                }
                sub = sub.add(&mono)?;
            }
            // transform the basis form
            let mut basis = Form::scalar(Jet::one(self.order));
            for i in m.indices() {
                basis = basis.wedge(&cov[(i - 1) as usize])?;
            }
            acc = acc.add(&basis.scale_jet(&sub)?)?;
        }
        Ok(acc)
    }
}

/// Vector field with jet coefficients in the frame e_1..e_7.
#[derive(Clone, PartialEq, Debug)]
pub struct VectorFieldJet<S: Scalar> {
    pub comps: [Jet<S>; 7],
}

impl<S: Scalar> VectorFieldJet<S> {
    pub fn zero(order: u32) -> Self {
        VectorFieldJet {
            comps: std::array::from_fn(|_| Jet::zero(order)),
        }
    }

    pub fn from_comps(comps: [Jet<S>; 7]) -> Self {
        VectorFieldJet { comps }
    }

    /// Constant frame field e_axis.
    pub fn axis(axis: u8, order: u32) -> Self {
        let mut v = VectorFieldJet::zero(order);
        v.comps[(axis - 1) as usize] = Jet::one(order);
        v
    }

    /// The radial (Euler) field sum_i x_i e_i.
    pub fn radial(order: u32) -> Self {
        VectorFieldJet {
            comps: std::array::from_fn(|i| Jet::var(i as u8 + 1, order)),
        }
    }

    pub fn order(&self) -> u32 {
        self.comps[0].order()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|j| j.is_zero())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        let mut comps = self.comps.clone();
        for (c, r) in comps.iter_mut().zip(&rhs.comps) {
            *c = c.add(r)?;
        }
        Ok(VectorFieldJet { comps })
    }

    pub fn neg(&self) -> Self {
        VectorFieldJet {
            comps: std::array::from_fn(|i| self.comps[i].neg()),
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        VectorFieldJet {
            comps: std::array::from_fn(|i| self.comps[i].scale(c)),
        }
    }

    /// Minimum valuation over components; order+1 if zero.
    pub fn valuation(&self) -> u32 {
        self.comps
            .iter()
            .map(|j| j.valuation())
            .min()
            .unwrap_or(self.order() + 1)
    }

    pub fn eff(&self) -> i64 {
        self.comps.iter().map(|j| j.eff()).min().unwrap_or(0)
    }
}

#[cfg(test)]
pub mod test_support {
    use super::*;
    use crate::scalar::Rational;
    use rand::rngs::StdRng;
    use rand::Rng;

    pub fn random_jet(rng: &mut StdRng, k: u32, nterms: usize, maxdeg: u32) -> Jet<Rational> {
        let mut raw = Vec::new();
        for _ in 0..nterms {
            let mut p = [0u8; 7];
            let mut left = rng.gen_range(0..=maxdeg.min(k));
            while left > 0 {
                p[rng.gen_range(0..7)] += 1;
                left -= 1;
            }
            raw.push((
                Expo::from_powers(p),
                Rational::new(rng.gen_range(-9..=9), rng.gen_range(1..=9)),
            ));
        }
        Jet::from_terms(k, raw)
    }

    pub fn random_form(rng: &mut StdRng, degree: u8, k: u32, ncomps: usize) -> Form<Rational> {
        let all: Vec<u8> = (0u8..128)
            .filter(|m| m.count_ones() == degree as u32)
            .collect();
        let mut raw = Vec::new();
        for _ in 0..ncomps {
            let m = all[rng.gen_range(0..all.len())];
            raw.push((MultiIndex::from_mask(m), random_jet(rng, k, 3, k)));
        }
        Form::from_comps(degree, k, normalize_comps(raw))
    }

    /// Random closed m-form: d of a random (m-1)-form plus a constant form.
    pub fn random_closed(rng: &mut StdRng, degree: u8, k: u32) -> Form<Rational> {
        let pot = random_form(rng, degree - 1, k, 6);
        let mut f = pot.d().expect("degree ok");
        // restore full effective order: d of stored polynomials is exact here
        f = f.with_eff(k as i64);
        let all: Vec<u8> = (0u8..128)
            .filter(|m| m.count_ones() == degree as u32)
            .collect();
        let m = all[rng.gen_range(0..all.len())];
        let c = Form::from_comps(
            degree,
            k,
            vec![(
                MultiIndex::from_mask(m),
                Jet::constant(Rational::new(rng.gen_range(-5..=5), 1), k),
            )],
        );
        f.add(&c).unwrap()
    }
}
