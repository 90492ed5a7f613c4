//! Seeded random generators for jets and forms, shared by the verification
//! suites and the test batteries. Everything is deterministic in the seed.

use rand::rngs::StdRng;
use rand::Rng;

use crate::form::{Form, MultiIndex, VectorFieldJet};
use crate::jet::{Expo, Jet};
use crate::scalar::Scalar;

pub fn random_jet<S: Scalar>(rng: &mut StdRng, order: u32, nterms: usize, maxdeg: u32) -> Jet<S> {
    let mut raw = Vec::new();
    for _ in 0..nterms {
        let mut p = [0u8; 7];
        let mut left = rng.gen_range(0..=maxdeg.min(order));
        while left > 0 {
            p[rng.gen_range(0..7)] += 1;
            left -= 1;
        }
        raw.push((
            Expo::from_powers(p),
            S::from_ratio(rng.gen_range(-9..=9), rng.gen_range(1..=9)),
        ));
    }
    Jet::from_terms(order, raw)
}

pub fn random_form<S: Scalar>(rng: &mut StdRng, degree: u8, order: u32, ncomps: usize) -> Form<S> {
    let all: Vec<u8> = (0u8..128)
        .filter(|m| m.count_ones() == degree as u32)
        .collect();
    let mut acc = Form::zero(degree, order);
    for _ in 0..ncomps {
        let m = all[rng.gen_range(0..all.len())];
        let single = Form::from_comps(
            degree,
            order,
            vec![(MultiIndex::from_mask(m), random_jet(rng, order, 3, order))],
        );
        acc = acc.add(&single).expect("same degree and order");
    }
    acc
}

/// Random closed m-form: d of a random potential plus a constant form.
/// The result is an exact polynomial, so it carries full effective order.
pub fn random_closed<S: Scalar>(rng: &mut StdRng, degree: u8, order: u32) -> Form<S> {
    let pot = random_form(rng, degree - 1, order, 6);
    let f = pot.d().expect("degree below 7").with_eff(order as i64);
    let all: Vec<u8> = (0u8..128)
        .filter(|m| m.count_ones() == degree as u32)
        .collect();
    let m = all[rng.gen_range(0..all.len())];
    let c = Form::from_comps(
        degree,
        order,
        vec![(
            MultiIndex::from_mask(m),
            Jet::constant(S::from_ratio(rng.gen_range(-5..=5), 1), order),
        )],
    );
    f.add(&c).expect("constant form")
}

/// Random closed m-form whose coefficients vanish to first order at the
/// origin (valuation >= 2).
pub fn random_closed_val2<S: Scalar>(rng: &mut StdRng, degree: u8, order: u32) -> Form<S> {
    let mut pot = random_form(rng, degree - 1, order, 6);
    pot = pot.taylor_project(2, false).expect("fresh polynomial data");
    pot.d().expect("degree below 7").with_eff(order as i64)
}

/// Random closed m-form of valuation >= 1 (no constant part).
pub fn random_closed_val1<S: Scalar>(rng: &mut StdRng, degree: u8, order: u32) -> Form<S> {
    let mut pot = random_form(rng, degree - 1, order, 6);
    pot = pot.taylor_project(1, false).expect("fresh polynomial data");
    pot.d().expect("degree below 7").with_eff(order as i64)
}

/// Random vector field with components of valuation >= 2.
pub fn random_val2_field<S: Scalar>(rng: &mut StdRng, order: u32) -> VectorFieldJet<S> {
    let mut v = VectorFieldJet::zero(order);
    for c in v.comps.iter_mut() {
        *c = random_jet::<S>(rng, order, 3, order)
            .kill_low(1)
            .expect("fresh polynomial data");
    }
    v
}
