//! The construction pipeline: the quadratic point ansatz and its exact
//! verification, the scale audit, the quartic gauge corrector, the jet
//! right inverse of the flat Laplacian, the degree-graded linear solve,
//! and the gauged fixed-point Poisson solver with independent
//! recertification.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::deturck::{deturck_field_with, flow_pullback, GaugeContraction, GaugeField};
use crate::error::{Error, Result};
use crate::form::{Form, MultiIndex};
use crate::g2::{
    hodge_star, quadratic_ansatz, sigma_canonical, G2Structure, TRIPLES_MINUS, TRIPLES_PLUS,
};
use crate::jet::{Expo, Jet};
use crate::report::Claim;
use crate::scalar::{Rational, Scalar, Sign};

/// The closed quadratic ansatz as a certified structure.
pub fn quadratic_seed<S: Scalar>(sign: i8, order: u32) -> Result<G2Structure<S>> {
    Ok(G2Structure::new_closed(quadratic_ansatz(sign, order))?.with_sign(sign))
}

// ---------------------------------------------------------------------------
// point-solve verification
// ---------------------------------------------------------------------------

fn fmt_origin<S: Scalar>(entries: &[(MultiIndex, S)]) -> String {
    if entries.is_empty() {
        return "0".to_string();
    }
    entries
        .iter()
        .map(|(m, c)| format!("{c} {m:?}"))
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Verifies every step of the point-solve computation exactly over the
/// rationals and reports each claim separately. Claims that transcribe the
/// source construction's displayed star expansions and its final origin
/// value are carried verbatim and fail with exact witnesses; the true
/// counterparts are reported alongside.
pub fn verify_point_solve(order: u32) -> Result<Vec<Claim>> {
    assert!(order >= 4, "need at least order 4");
    let mut claims = Vec::new();
    let theta: Form<Rational> = quadratic_ansatz(1, order);
    let s = G2Structure::new_closed(theta.clone())?;
    let b = s.b_matrix();
    let sq = |i: usize| {
        let mut p = [0u8; 7];
        p[i] = 2;
        Expo::from_powers(p)
    };

    // closedness
    claims.push(Claim::check(
        "pointsolve/ansatz-closed",
        "d(theta) == 0",
        theta.is_closed(),
        || format!("{:?}", theta.d().unwrap()),
    ));

    // B-matrix diagonality (exact at all stored orders)
    let offdiag_ok = (0..7).all(|i| (0..7).all(|j| i == j || b[i][j].is_zero()));
    claims.push(Claim::check(
        "pointsolve/b-matrix-diagonal",
        "(e_i . theta) ^ (e_j . theta) ^ theta == 0 for i != j",
        offdiag_ok,
        || format!("B[1][2] = {}", b[0][1]),
    ));

    // B_ii = 6(1 − Σ x² − 2 x_i²) + O(|x|³)
    let mut bexp_ok = true;
    for i in 0..7 {
        let mut terms = vec![(Expo::zero(), Rational::new(6, 1))];
        for m in 0..7 {
            let c = if m == i { -18 } else { -6 };
            terms.push((sq(m), Rational::new(c, 1)));
        }
        let expected = Jet::from_terms(order, terms);
        if !b[i][i].eq_through(&expected, 2) {
            bexp_ok = false;
        }
    }
    claims.push(Claim::check(
        "pointsolve/b-matrix-expansion",
        "(e_i . theta)^2 ^ theta == (6(1 - |x|^2 - 2 x_i^2) + O(|x|^3)) e^{1..7}",
        bexp_ok,
        || format!("B[1][1] = {}", b[0][0]),
    ));

    // metric diagonal, no linear terms, quadratic part −2x_i², trace
    let g = s.metric().entries();
    let gdiag_ok = (0..7).all(|i| (0..7).all(|j| i == j || g[i][j].is_zero()));
    claims.push(Claim::check(
        "pointsolve/metric-diagonal",
        "g_theta is diagonal",
        gdiag_ok,
        || format!("g[1][2] = {}", g[0][1]),
    ));
    let lin_ok = (0..7).all(|i| g[i][i].homogeneous_part(1).is_zero());
    claims.push(Claim::check(
        "pointsolve/metric-no-linear-terms",
        "linear part of g_theta_ii == 0",
        lin_ok,
        || format!("g[1][1] = {}", g[0][0]),
    ));
    let mut s_ok = true;
    let mut trace = Jet::zero(order);
    for i in 0..7 {
        let qpart = g[i][i].homogeneous_part(2);
        trace = trace.add(&qpart)?;
        let expected = Jet::from_terms(order, vec![(sq(i), Rational::new(-2, 1))]);
        if qpart != expected {
            s_ok = false;
        }
    }
    claims.push(Claim::check(
        "pointsolve/metric-quadratic-terms",
        "s_i(x) == -2 x_i^2",
        s_ok,
        || format!("quadratic part of g[1][1] = {}", g[0][0].homogeneous_part(2)),
    ));
    let expected_trace = Jet::from_terms(
        order,
        (0..7).map(|i| (sq(i), Rational::new(-2, 1))).collect(),
    );
    claims.push(Claim::check(
        "pointsolve/metric-quadratic-trace",
        "s_1 + ... + s_7 == -2(x_1^2 + ... + x_7^2)",
        trace == expected_trace,
        || format!("{trace}"),
    ));

    // volume expansion 1 + (Σ s_i)/2 + O(|x|³)
    let vol = s.metric().volume_density();
    let expected_vol = Jet::from_terms(
        order,
        std::iter::once((Expo::zero(), Rational::one()))
            .chain((0..7).map(|i| (sq(i), Rational::new(-1, 1))))
            .collect(),
    );
    claims.push(Claim::check(
        "pointsolve/volume-expansion",
        "vol_theta == (1 + (s_1+...+s_7)/2 + O(|x|^3)) e^{1..7}",
        vol.eq_through(&expected_vol, 2),
        || format!("{vol}"),
    ));

    // star of 5-forms: coefficient 1 + O(|x|²)
    let mut star5_ok = true;
    for mask in 0u8..128 {
        if mask.count_ones() != 5 {
            continue;
        }
        let mj = MultiIndex::from_mask(mask);
        let starred = hodge_star(s.metric(), &Form::<Rational>::basis(mj, order))?;
        let coeff = starred.comp(mj.complement());
        let mut lead = Jet::from_terms(order, vec![(Expo::zero(), Rational::one())]);
        if mj.wedge_sign(mj.complement()) < 0 {
            lead = lead.neg();
        }
        if !coeff.eq_through(&lead, 1) {
            star5_ok = false;
        }
    }
    claims.push(Claim::check(
        "pointsolve/star-five-form-expansion",
        "star_theta e^{ijklm} == (1 + O(|x|^2)) e^{pq}",
        star5_ok,
        || "unexpected linear term".to_string(),
    ));

    // the displayed 3-form star expansion: 1 − (own squares) + (complement
    // squares); the computed star carries the reciprocal weight
    let mut displayed_ok = true;
    let mut true_ok = true;
    let mut witness3 = String::new();
    for (i, j, l) in TRIPLES_PLUS.iter().chain(TRIPLES_MINUS.iter()).copied() {
        let (mj, _) = MultiIndex::from_indices(&[i, j, l]).unwrap();
        let starred = hodge_star(s.metric(), &Form::<Rational>::basis(mj, order))?;
        let mc = mj.complement();
        let coeff = starred.comp(mc);
        let sign = mj.wedge_sign(mc);
        let build = |own: i64, comp: i64| {
            let mut terms = vec![(Expo::zero(), Rational::one())];
            for v in mj.indices() {
                terms.push((sq((v - 1) as usize), Rational::new(own, 1)));
            }
            for v in mc.indices() {
                terms.push((sq((v - 1) as usize), Rational::new(comp, 1)));
            }
            let jet = Jet::from_terms(order, terms);
            if sign < 0 {
                jet.neg()
            } else {
                jet
            }
        };
        let displayed = build(-1, 1);
        let truth = build(1, -1);
        if !coeff.eq_through(&displayed, 2) {
            displayed_ok = false;
            if witness3.is_empty() {
                witness3 = format!("star coefficient on e^{{{i}{j}{l}}} = {coeff}");
            }
        }
        if !coeff.eq_through(&truth, 2) {
            true_ok = false;
        }
    }
    claims.push(Claim::check(
        "pointsolve/star-three-form-displayed-expansion",
        "star_theta e^{ijk} == (1 - x_i^2-x_j^2-x_k^2 + x_a^2+x_b^2+x_c^2+x_d^2 + O(|x|^3)) e^{abcd}",
        displayed_ok,
        || witness3.clone(),
    ));
    claims.push(Claim::check(
        "pointsolve/star-three-form-derived-expansion",
        "star_theta e^{ijk} == (1 + x_i^2+x_j^2+x_k^2 - x_a^2-x_b^2-x_c^2-x_d^2 + O(|x|^3)) e^{abcd}",
        true_ok,
        || "derived expansion mismatch".to_string(),
    ));

    // the final origin value: claimed 12 sigma_can(0), computed 0
    let lap = s.laplacian_of_self()?;
    let at0 = lap.at_origin();
    let twelve: Vec<(MultiIndex, Rational)> = sigma_canonical::<Rational>(order)
        .at_origin()
        .into_iter()
        .map(|(m, c)| (m, c.mul(&Rational::new(12, 1))))
        .collect();
    claims.push(Claim::check(
        "pointsolve/laplacian-at-origin-claimed",
        "lap_theta(theta)(0) == 12 sigma_can(0)",
        at0 == twelve,
        || format!("lap_theta(theta)(0) = {}", fmt_origin(&at0)),
    ));
    claims.push(Claim::check(
        "pointsolve/laplacian-valuation-derived",
        "valuation(lap_theta(theta)) >= 2 (torsion two-form has cubic coefficients)",
        at0.is_empty() && lap.valuation() >= 2,
        || format!("valuation = {}", lap.valuation()),
    ));

    Ok(claims)
}

// ---------------------------------------------------------------------------
// scale audit
// ---------------------------------------------------------------------------

/// Outcome of the homogeneity audit of σ ↦ Δ_σσ under σ → λσ.
#[derive(Debug, Clone)]
pub struct ScaleAudit {
    /// Derived exponent α with Δ_{λσ}(λσ) = λ^α Δ_σσ, as (num, den).
    pub alpha: (i64, i64),
    /// Derived exponent m with g_{λσ} = λ^m g_σ.
    pub metric_exponent: (i64, i64),
    /// Δ_θθ(0) printed as a witness.
    pub origin_value: String,
    /// True when Δ_θθ(0) is a nonzero multiple of σ_can(0).
    pub origin_proportional_nonzero: bool,
    /// The exponent e with λ = 12^e solving both point conditions, when it
    /// exists. With a vanishing origin value no positive λ exists.
    pub lambda_exponent: Option<(i64, i64)>,
    /// Whether the constant pair (λ = 12^{2/3}, factor 12^{−1/3}) used by
    /// the source construction is consistent with the derived α.
    pub displayed_constants_consistent: bool,
    pub detail: String,
}

fn exact_power_exponent(r: &BigRational, base: i64) -> Option<i64> {
    // r = base^e for integer e
    if r.is_zero() || r.is_negative() {
        return None;
    }
    let b = BigRational::from_integer(BigInt::from(base));
    let mut e = 0i64;
    let mut v = r.clone();
    while v > BigRational::one() {
        v /= &b;
        e += 1;
        if e > 4096 {
            return None;
        }
    }
    while v < BigRational::one() {
        v *= &b;
        e -= 1;
        if e < -4096 {
            return None;
        }
    }
    if v.is_one() {
        Some(e)
    } else {
        None
    }
}

/// Derives the exponent x/9 with f_big = λ^x/9... both jets must satisfy
/// scaled == λ^{x/9} · base with λ = p^9.
fn derive_exponent(
    base: &Form<Rational>,
    scaled: &Form<Rational>,
    p: i64,
) -> Option<(i64, i64)> {
    // find a nonzero coefficient pair and derive, then verify globally
    for (m, j) in base.comps() {
        for (e, c) in j.terms() {
            let sc = scaled.comp(*m).coefficient(*e);
            if sc.is_zero() {
                return None;
            }
            let ratio = sc.big() / c.big();
            let x = exact_power_exponent(&ratio, p)?;
            // verify: scaled == base * p^x everywhere
            let factor = Rational(num_traits::pow(
                BigRational::from_integer(BigInt::from(p)),
                x.unsigned_abs() as usize,
            ));
            let factor = if x < 0 {
                Rational(factor.big().recip())
            } else {
                factor
            };
            let predicted = base.scale(&factor);
            let n = predicted.eff().min(scaled.eff()).max(0) as u32;
            if predicted.eq_through(scaled, n) {
                // λ = p^9, factor = p^x ⇒ exponent x/9
                let g = gcd(x.unsigned_abs(), 9);
                return Some((x / g as i64, 9 / g as i64));
            }
            return None;
        }
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Derives the homogeneity exponents of the metric and of σ ↦ Δ_σσ from
/// two rational sample scalings, audits whether a positive λ satisfies
/// both point conditions, and compares with the displayed constants.
pub fn determine_scale(sign: i8) -> Result<ScaleAudit> {
    let order = 4;
    let theta: Form<Rational> = quadratic_ansatz(sign, order);
    let s0 = G2Structure::new_closed(theta.clone())?;
    let lap0 = s0.laplacian_of_self()?;
    let g0 = s0.metric().entries().clone();

    let mut alpha: Option<(i64, i64)> = None;
    let mut metric_exp: Option<(i64, i64)> = None;
    for p in [2i64, 3] {
        // λ = p^9 keeps every ninth root rational
        let lam = Rational(num_traits::pow(
            BigRational::from_integer(BigInt::from(p)),
            9,
        ));
        let scaled_form = theta.scale(&lam);
        let ss = G2Structure::new_closed(scaled_form)?;
        let lap1 = ss.laplacian_of_self()?;
        let a = derive_exponent(&lap0, &lap1, p).ok_or_else(|| Error::ScaleInconsistent {
            detail: format!("laplacian scaling at λ = {p}^9 is not a pure power"),
        })?;
        match alpha {
            None => alpha = Some(a),
            Some(prev) if prev == a => {}
            Some(prev) => {
                return Err(Error::ScaleInconsistent {
                    detail: format!("alpha disagrees across samples: {prev:?} vs {a:?}"),
                })
            }
        }
        // metric law via a diagonal entry promoted to a 0-form
        let gf = Form::scalar(g0[0][0].clone());
        let gs = Form::scalar(ss.metric().entries()[0][0].clone());
        let me = derive_exponent(&gf, &gs, p).ok_or_else(|| Error::ScaleInconsistent {
            detail: format!("metric scaling at λ = {p}^9 is not a pure power"),
        })?;
        match metric_exp {
            None => metric_exp = Some(me),
            Some(prev) if prev == me => {}
            Some(prev) => {
                return Err(Error::ScaleInconsistent {
                    detail: format!("metric exponent disagrees: {prev:?} vs {me:?}"),
                })
            }
        }
    }
    let alpha = alpha.unwrap();
    let metric_exponent = metric_exp.unwrap();

    // point conditions: Δ_{λθ}(λθ)(0) = λ^α Δ_θθ(0) must equal sign·λ
    // times the canonical value while σ₀(0) = λ σ_can(0)
    let at0 = lap0.at_origin();
    let canonical: Vec<(MultiIndex, Rational)> = sigma_canonical::<Rational>(order).at_origin();
    let proportional = if at0.is_empty() {
        Some(Rational::zero())
    } else {
        // test at0 == c * sign * canonical for a single scalar c
        let c = at0
            .first()
            .and_then(|(m, v)| {
                canonical
                    .iter()
                    .find(|(cm, _)| cm == m)
                    .map(|(_, cv)| v.div(cv).unwrap())
            })
            .map(|c| if sign < 0 { c.neg() } else { c });
        c.filter(|c| {
            let predicted: Vec<(MultiIndex, Rational)> = canonical
                .iter()
                .map(|(m, v)| {
                    let mut x = v.mul(c);
                    if sign < 0 {
                        x = x.neg();
                    }
                    (*m, x)
                })
                .collect();
            predicted == at0
        })
    };
    let origin_value = fmt_origin(&at0);
    let origin_proportional_nonzero = matches!(&proportional, Some(c) if !c.is_zero());

    // with Δ_θθ(0) = m·sign·σ_can(0): λ^α · m = λ forces λ = m^{1/(1−α)};
    // m = 0 admits no positive λ
    let lambda_exponent = if origin_proportional_nonzero {
        let (an, ad) = alpha;
        // λ = m^{ad/(ad−an)}; report in terms of the base-12 exponent when
        // m = 12 (the derived origin constant in the counterfactual)
        Some((ad, ad - an))
    } else {
        None
    };

    // the displayed pair (λ = 12^{2/3}, factor 12^{−1/3}) needs
    // λ^α = 12^{−1/3}, i.e. (2/3)α = −1/3, i.e. α = −1/2
    let displayed_constants_consistent =
        alpha.0 * 2 == -1 * alpha.1 && false || (2 * alpha.0) * 3 == -(alpha.1 * 3) / 3;

    let detail = format!(
        "derived alpha = {}/{} (laplacian), metric exponent = {}/{}; \
         origin value {}; {}",
        alpha.0,
        alpha.1,
        metric_exponent.0,
        metric_exponent.1,
        origin_value,
        if lambda_exponent.is_some() {
            "a consistent λ exists".to_string()
        } else {
            "no positive λ satisfies both point conditions (origin value is \
             not a nonzero multiple of the canonical form)"
                .to_string()
        }
    );

    Ok(ScaleAudit {
        alpha,
        metric_exponent,
        origin_value,
        origin_proportional_nonzero,
        lambda_exponent,
        displayed_constants_consistent,
        detail,
    })
}

// ---------------------------------------------------------------------------
// quartic corrector
// ---------------------------------------------------------------------------

/// Second derivatives at the origin of the components of a 2-form,
/// symmetric in the derivative pair.
pub struct TwoFormSecondJets<S: Scalar> {
    /// (component mask, k, l) -> ∂²τ_{ij}/∂x_k∂x_l(0), stored for k <= l.
    data: Vec<(MultiIndex, [[S; 7]; 7])>,
}

impl<S: Scalar> TwoFormSecondJets<S> {
    pub fn from_form(tau: &Form<S>) -> Self {
        assert_eq!(tau.degree(), 2);
        let mut data = Vec::new();
        for (m, j) in tau.comps() {
            let mut mat: [[S; 7]; 7] = std::array::from_fn(|_| std::array::from_fn(|_| S::zero()));
            for k in 0..7usize {
                for l in k..7usize {
                    let mut p = [0u8; 7];
                    p[k] += 1;
                    p[l] += 1;
                    let mut c = j.coefficient(Expo::from_powers(p));
                    if k == l {
                        c = c.add(&c); // ∂²(x²) = 2
                    }
                    mat[k][l] = c.clone();
                    mat[l][k] = c;
                }
            }
            data.push((*m, mat));
        }
        TwoFormSecondJets { data }
    }

    pub fn from_entries(data: Vec<(MultiIndex, [[S; 7]; 7])>) -> Result<Self> {
        for (_, mat) in &data {
            for k in 0..7 {
                for l in 0..7 {
                    if mat[k][l] != mat[l][k] {
                        return Err(Error::Precondition {
                            detail: "second jets must be symmetric in the derivative pair"
                                .to_string(),
                        });
                    }
                }
            }
        }
        Ok(TwoFormSecondJets { data })
    }

    pub fn is_zero(&self) -> bool {
        self.data
            .iter()
            .all(|(_, m)| m.iter().all(|row| row.iter().all(|c| c.is_zero())))
    }
}

fn tau_star_with_coeffs<S: Scalar>(
    jets: &TwoFormSecondJets<S>,
    order: u32,
    coeff: impl Fn(usize, usize) -> S,
) -> Form<S> {
    let mut acc = Form::zero(2, order);
    for (m, mat) in &jets.data {
        let mut raw: Vec<(Expo, S)> = Vec::new();
        for k in 0..7usize {
            for l in 0..7usize {
                if mat[k][l].is_zero() {
                    continue;
                }
                if order < 4 {
                    continue;
                }
                let mut p = [0u8; 7];
                p[k] += 3;
                p[l] += 1;
                raw.push((Expo::from_powers(p), coeff(k, l).mul(&mat[k][l])));
            }
        }
        let jet = Jet::from_terms(order, raw);
        if !jet.is_zero() {
            acc = acc
                .add(&Form::from_comps(2, order, vec![(*m, jet)]))
                .expect("same degree");
        }
    }
    acc
}

/// The quartic corrector in the transcription of the source display:
/// τ* = Σ_{ij} Σ_{k,l} 2/(1+3δ_k^l) ∂²τ_{ij}(0) x_k³ x_l e^{ij}.
pub fn build_tau_star<S: Scalar>(jets: &TwoFormSecondJets<S>, order: u32) -> Form<S> {
    tau_star_with_coeffs(jets, order, |k, l| {
        if k == l {
            S::from_ratio(1, 2)
        } else {
            S::from_ratio(2, 1)
        }
    })
}

/// The derived quartic corrector: coefficients −1/(12γ(1+δ_k^l)) make
/// ∂²(γ Δ_g τ*)(0) = ∂²τ(0) hold exactly for the geometer-sign Laplacian.
pub fn build_tau_star_derived<S: Scalar>(
    jets: &TwoFormSecondJets<S>,
    order: u32,
    gamma: &S,
) -> Result<Form<S>> {
    let g12 = gamma.mul(&S::from_ratio(12, 1));
    let base = g12.inv()?.neg();
    let half = base.mul(&S::from_ratio(1, 2));
    Ok(tau_star_with_coeffs(jets, order, move |k, l| {
        if k == l {
            half.clone()
        } else {
            base.clone()
        }
    }))
}

// ---------------------------------------------------------------------------
// first-order solution at the origin
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct FirstOrderSolution<S: Scalar> {
    pub sigma1: G2Structure<S>,
    pub gauge: GaugeField<S>,
    pub tau_star: Form<S>,
    /// Valuations of the three condition witnesses (value, gradient,
    /// normalization difference).
    pub condition_valuations: [u32; 3],
}

/// Reads γ from the metric at the origin, which must be a positive scalar
/// multiple of the identity: γ = g_{11}(0)^{-1}.
pub fn principal_constant<S: Scalar>(structure: &G2Structure<S>) -> Result<S> {
    let g = structure.metric().entries();
    let g00 = g[0][0].eval0();
    for i in 0..7 {
        for j in 0..7 {
            let v = g[i][j].eval0();
            if i == j {
                if v != g00 {
                    return Err(Error::Precondition {
                        detail: "metric at origin is not a multiple of the identity".to_string(),
                    });
                }
            } else if !v.is_zero() {
                return Err(Error::Precondition {
                    detail: "metric at origin is not diagonal".to_string(),
                });
            }
        }
    }
    g00.inv()
}

/// Builds the first-order solution from a point seed: τ from the radial
/// homotopy of the point residual, the derived quartic corrector, the
/// gauge flow back. Requires both point conditions on (σ₀, η); the three
/// output conditions are verified exactly and any failure is an error
/// carrying the offending jet.
pub fn build_first_order_solution<S: Scalar>(
    sigma0: &G2Structure<S>,
    eta: &Form<S>,
    sign: i8,
) -> Result<FirstOrderSolution<S>> {
    let order = sigma0.order();
    let lap0 = sigma0.laplacian_of_self()?;
    let rho0 = lap0.sub(eta)?;
    // point conditions
    if !rho0.at_origin().is_empty() {
        return Err(Error::Precondition {
            detail: format!(
                "point residual does not vanish at the origin: {}",
                fmt_origin(&rho0.at_origin())
            ),
        });
    }
    let norm = sigma0.form().scale(&S::from_int(sign as i64)).sub(eta)?;
    if !norm.at_origin().is_empty() {
        return Err(Error::Precondition {
            detail: format!(
                "sign·σ₀(0) != η(0): difference {}",
                fmt_origin(&norm.at_origin())
            ),
        });
    }
    if !eta.is_closed() {
        return Err(Error::NotClosed {
            valuation: eta.d()?.valuation(),
        });
    }
    let gamma = principal_constant(sigma0)?;

    // τ with dτ = ρ₀ (radial primitive), its second jets, the corrector
    let tau = rho0.radial_homotopy()?;
    let jets = TwoFormSecondJets::from_form(&tau);
    let tau_star = build_tau_star_derived(&jets, order, &gamma)?;
    let sigma1_star_form = sigma0.form().add(&tau_star.d()?.with_eff(order as i64))?;
    let sigma1_star = G2Structure::new_closed(sigma1_star_form)?.with_sign(sign);

    // gauge flow back
    let v = deturck_field_with(sigma0, &sigma1_star, sign, GaugeContraction::Plain)?;
    if !v.is_zero() && v.valuation() < 2 {
        return Err(Error::FlowValuation {
            found: v.valuation(),
        });
    }
    let sigma1_form = flow_pullback(&v.neg(), sigma1_star.form())?;
    let sigma1 = G2Structure::new_closed(sigma1_form)?.with_sign(sign);

    // the three conditions, verified exactly
    let resid = sigma1.laplacian_of_self()?.sub(eta)?;
    let v0 = if resid.at_origin().is_empty() { u32::MAX } else { 0 };
    let v1 = resid.valuation();
    let norm1 = sigma1.form().scale(&S::from_int(sign as i64)).sub(eta)?;
    let v2 = if norm1.at_origin().is_empty() {
        u32::MAX
    } else {
        0
    };
    let conditions = [v0.min(2), v1.min(2), v2.min(2)];
    if v0 == 0 {
        return Err(Error::Precondition {
            detail: format!(
                "first condition failed: residual at origin {}",
                fmt_origin(&resid.at_origin())
            ),
        });
    }
    if v1 < 2 {
        return Err(Error::Precondition {
            detail: format!("second condition failed: residual valuation {v1}"),
        });
    }
    if v2 == 0 {
        return Err(Error::Precondition {
            detail: format!(
                "third condition failed: sign·σ₁(0) − η(0) = {}",
                fmt_origin(&norm1.at_origin())
            ),
        });
    }
    Ok(FirstOrderSolution {
        sigma1,
        gauge: v,
        tau_star,
        condition_valuations: conditions,
    })
}

// ---------------------------------------------------------------------------
// the flat right inverse
// ---------------------------------------------------------------------------

/// Solves Δ_g w = q on polynomial jets degree by degree via the radial
/// ansatz w_d = Σ_j c_j |x|^{2j+2} Δ^j q_d with a triangular coefficient
/// recurrence. Always solvable; the output is exact on each homogeneous
/// slice and carries effective order min(eff(q) + 2, order).
pub fn poly_laplace_inverse<S: Scalar>(q: &Jet<S>) -> Jet<S> {
    let order = q.order();
    // |x|^2
    let r2 = Jet::from_terms(
        order,
        (0..7usize)
            .map(|i| {
                let mut p = [0u8; 7];
                p[i] = 2;
                (Expo::from_powers(p), S::one())
            })
            .collect(),
    );
    let scalar_lap = |j: &Jet<S>| -> Jet<S> {
        let mut acc = Jet::zero(order);
        for axis in 1..=7u8 {
            acc = acc
                .add(&j.partial(axis).partial(axis))
                .expect("same order");
        }
        acc.neg().with_eff(order as i64)
    };
    let mut out = Jet::zero(order);
    for d in 0..=order {
        let qd = q.homogeneous_part(d);
        if qd.is_zero() {
            continue;
        }
        // c_0 = −1/(2(2d+7)), c_j = c_{j−1} / (2(j+1)(2d−2j+7))
        let mut c = BigRational::new(BigInt::from(-1), BigInt::from(2 * (2 * d as i64 + 7)));
        let mut lpow = qd.clone();
        let mut rpow = r2.clone();
        let mut j = 0u32;
        loop {
            let term = lpow.mul(&rpow).expect("orders match").scale(&S::from_big_ratio(&c));
            out = out.add(&term).expect("orders match");
            if 2 * (j + 1) > d {
                break;
            }
            lpow = scalar_lap(&lpow);
            if lpow.is_zero() {
                break;
            }
            rpow = rpow.mul(&r2).expect("orders match");
            j += 1;
            let denom = BigInt::from(2 * (j as i64 + 1) * (2 * d as i64 - 2 * j as i64 + 7));
            c /= BigRational::from_integer(denom);
        }
    }
    out.with_eff((q.eff() + 2).min(order as i64))
}

/// The jet right inverse of the flat Laplacian on closed 3-forms:
/// R(φ) = P_kill( d( G( h(φ) ) ) ), computed with internal order padding
/// so the output is exact through the storage order. Satisfies
/// Δ_g R φ = φ and d R φ = 0, and raises effective order by two.
pub fn right_inverse_jet<S: Scalar>(phi: &Form<S>, kill_order: u32) -> Result<Form<S>> {
    if phi.degree() != 3 {
        return Err(Error::WrongDegree {
            expected: 3,
            found: phi.degree(),
        });
    }
    if !phi.is_closed() {
        return Err(Error::NotClosed {
            valuation: phi.d()?.valuation(),
        });
    }
    let order = phi.order();
    let eff_in = phi.eff();
    let padded = phi.with_order(order + 2);
    let h = padded.radial_homotopy()?;
    let mut comps = Vec::with_capacity(h.comps().len());
    for (m, j) in h.comps() {
        comps.push((*m, poly_laplace_inverse(j)));
    }
    let g = Form::from_comps(2, order + 2, comps);
    let dg = g.d()?;
    let killed = dg.taylor_project(kill_order.min((dg.eff().max(0)) as u32), false)?;
    Ok(killed
        .with_order(order)
        .with_eff((eff_in + 2).min(order as i64)))
}

/// Convenience wrapper choosing the kill order from the input valuation.
pub fn right_inverse<S: Scalar>(phi: &Form<S>) -> Result<Form<S>> {
    let kill = phi.valuation().min(phi.order()) + 1;
    right_inverse_jet(phi, kill)
}

// ---------------------------------------------------------------------------
// graded linear solve
// ---------------------------------------------------------------------------

pub struct GradedSolve<S: Scalar> {
    pub psi: Form<S>,
    /// Valuation of each successive correction.
    pub trace: Vec<u32>,
}

/// Solves L ψ = φ on closed 3-form jets when K = L − γΔ_g raises the
/// valuation of corrections after preconditioning by the right inverse:
/// the fixed point of ψ ↦ γ^{-1} R(φ) − γ^{-1} R(K ψ), reached in finitely
/// many exact iterations. Errors with the stagnating degree if the
/// valuation fails to increase.
pub fn graded_linear_solve<S: Scalar>(
    l: &dyn Fn(&Form<S>) -> Result<Form<S>>,
    phi: &Form<S>,
    gamma: &S,
) -> Result<GradedSolve<S>> {
    if !phi.is_closed() {
        return Err(Error::NotClosed {
            valuation: phi.d()?.valuation(),
        });
    }
    let order = phi.order();
    let ginv = gamma.inv()?;
    let k_op = |psi: &Form<S>| -> Result<Form<S>> {
        let lap = crate::g2::laplacian_euclid(psi)?.scale(gamma);
        l(psi)?.sub(&lap)
    };
    // iterate on corrections: c_{n+1} = −γ^{-1} R(K c_n), ψ = Σ c_n; the
    // corrections get sparser as their valuation rises, which keeps the
    // operator applications cheap
    let mut correction = right_inverse(phi)?.scale(&ginv);
    let mut psi = correction.clone();
    let mut trace = vec![correction.valuation()];
    for _ in 0..=order + 2 {
        if correction.is_zero() || correction.valuation() > correction.eff().max(0) as u32 {
            break;
        }
        let kc = k_op(&correction)?;
        if kc.is_zero() || kc.valuation() > kc.eff().max(0) as u32 {
            break;
        }
        let next = right_inverse(&kc)?.scale(&ginv).neg();
        if next.is_zero() || next.valuation() > next.eff().max(0) as u32 {
            break;
        }
        if next.valuation() <= correction.valuation() {
            return Err(Error::StagnantValuation {
                degree: next.valuation(),
            });
        }
        trace.push(next.valuation());
        psi = psi.add(&next)?;
        correction = next;
    }
    Ok(GradedSolve { psi, trace })
}

// ---------------------------------------------------------------------------
// the gauged fixed-point solver
// ---------------------------------------------------------------------------

pub struct PoissonProblem<S: Scalar> {
    pub eta: Form<S>,
    pub sign: i8,
    /// η(0) = c · sign · σ_can(0), c > 0, verified at construction.
    pub normalization: S,
}

impl<S: Scalar> PoissonProblem<S> {
    pub fn new(eta: Form<S>, sign: i8) -> Result<Self> {
        if eta.degree() != 3 {
            return Err(Error::WrongDegree {
                expected: 3,
                found: eta.degree(),
            });
        }
        if !eta.is_closed() {
            return Err(Error::NotClosed {
                valuation: eta.d()?.valuation(),
            });
        }
        let normalization = normalization_constant(&eta, sign)?;
        Ok(PoissonProblem {
            eta,
            sign,
            normalization,
        })
    }
}

/// Verifies η(0) = c · sign · σ_can(0) for a positive scalar c and
/// returns c.
pub fn normalization_constant<S: Scalar>(eta: &Form<S>, sign: i8) -> Result<S> {
    let at0 = eta.at_origin();
    let canonical = sigma_canonical::<S>(eta.order()).at_origin();
    let (m0, c0) = canonical.first().expect("canonical form is nonzero");
    let c = at0
        .iter()
        .find(|(m, _)| m == m0)
        .map(|(_, v)| v.div(c0))
        .transpose()?
        .map(|c| if sign < 0 { c.neg() } else { c })
        .unwrap_or_else(S::zero);
    if c.sign() != Sign::Positive {
        return Err(Error::Normalization {
            detail: format!(
                "η(0) = {} is not a positive multiple of sign·σ_can(0)",
                fmt_origin(&at0)
            ),
        });
    }
    let predicted: Vec<(MultiIndex, S)> = canonical
        .iter()
        .map(|(m, v)| {
            let mut x = v.mul(&c);
            if sign < 0 {
                x = x.neg();
            }
            (*m, x)
        })
        .collect();
    if predicted != at0 {
        return Err(Error::Normalization {
            detail: format!(
                "η(0) = {} is not proportional to sign·σ_can(0)",
                fmt_origin(&at0)
            ),
        });
    }
    Ok(c)
}

#[derive(Debug)]
pub struct JetSolution<S: Scalar> {
    pub sigma: Form<S>,
    pub gauge: GaugeField<S>,
    pub residual: Form<S>,
    pub residual_valuation: u32,
    pub certified_order: u32,
    /// (outer iteration, gauged residual valuation) per step.
    pub trace: Vec<(usize, u32)>,
    /// Valuation of the gauged residual at the gauged solution, for the
    /// diffeomorphism-invariance cross-check.
    pub gauged_residual_valuation: u32,
}

/// The linear model at σ₁: L(ψ) = −LL(ψ) + d(V'(ψ) ⌟ η), the negative of
/// the derivative of the gauged residual ψ ↦ Δ_{σ₁+ψ}(σ₁+ψ) − φ*_{V}η.
/// One shared dual sweep produces both pieces.
fn linear_model<S: Scalar>(
    sigma1: &G2Structure<S>,
    sigma1_conn: &crate::deturck::ConnectionJet<S>,
    eta: &Form<S>,
    sign: i8,
    psi: &Form<S>,
) -> Result<Form<S>> {
    let (ll, vprime) = crate::deturck::linearized_laplacian_and_gauge(
        sigma1,
        sigma1_conn,
        psi,
        sign,
        GaugeContraction::Plain,
    )?;
    let gauge = eta.interior(&vprime)?.d()?;
    ll.neg().add(&gauge)
}

/// One evaluation of the gauged nonlinear residual
/// Δ_{σ₁+ψ}(σ₁+ψ) − φ*_{V(σ₁,σ₁+ψ)} η.
fn gauged_residual<S: Scalar>(
    sigma1: &G2Structure<S>,
    sigma1_conn: &crate::deturck::ConnectionJet<S>,
    eta: &Form<S>,
    sign: i8,
    psi: &Form<S>,
) -> Result<(Form<S>, GaugeField<S>)> {
    let moved = G2Structure::new_closed(sigma1.form().add(psi)?)?.with_sign(sign);
    let v = crate::deturck::deturck_field_from(sigma1_conn, &moved, sign, GaugeContraction::Plain)?;
    let pulled = flow_pullback(&v, eta)?;
    let lap = moved.laplacian_of_self()?;
    Ok((lap.sub(&pulled)?, v))
}

/// The gauged fixed-point loop anchored at a caller-supplied seed: solves
/// Δ_σσ = η to the certifiable jet order for right-hand sides whose
/// residual against the seed has positive valuation. The final structure
/// is recertified from scratch (fresh structure, fresh Laplacian).
pub fn solve_gauged_near<S: Scalar>(
    seed: &G2Structure<S>,
    eta: &Form<S>,
    sign: i8,
) -> Result<JetSolution<S>> {
    let order = seed.order();
    let target = order.saturating_sub(1); // required residual valuation
    if !eta.is_closed() {
        return Err(Error::NotClosed {
            valuation: eta.d()?.valuation(),
        });
    }
    let gamma = principal_constant(seed)?;
    let seed_conn = crate::deturck::christoffels(seed.metric())?;
    let rho = seed.laplacian_of_self()?.sub(eta)?;
    if !rho.is_zero() && rho.valuation() < 1 {
        return Err(Error::Precondition {
            detail: format!(
                "seed residual has valuation {}; the loop needs valuation >= 1",
                rho.valuation()
            ),
        });
    }

    let l = |psi: &Form<S>| linear_model(seed, &seed_conn, eta, sign, psi);
    let mut psi = Form::zero(3, order);
    let mut trace: Vec<(usize, u32)> = Vec::new();
    let mut last_val = 0u32;
    let mut gauged_val = 0u32;
    let mut final_gauge = GaugeField::zero(order);
    for iter in 0..=(order as usize + 2) {
        let (res, v) = gauged_residual(seed, &seed_conn, eta, sign, &psi)?;
        let usable = res.eff().max(0) as u32;
        let val = res.valuation().min(usable + 1);
        trace.push((iter, val));
        if res.is_zero() || val > target.min(usable) {
            gauged_val = val;
            final_gauge = v;
            break;
        }
        if iter > 0 && val <= last_val {
            return Err(Error::StagnantValuation { degree: val });
        }
        last_val = val;
        // ψ ← P(ρ + J(ψ)) with J(ψ) = Res(ψ) − ρ + Lψ recomputed exactly
        let j = res.sub(&rho)?.add(&l(&psi)?)?;
        let rhs = rho.add(&j)?;
        let solved = graded_linear_solve(&l, &rhs, &gamma)?;
        psi = solved.psi;
    }

    // un-gauge and certify from scratch
    let sigma_star = seed.form().add(&psi)?;
    let sigma = flow_pullback(&final_gauge.neg(), &sigma_star)?;
    let fresh = G2Structure::new_closed(sigma.clone())?;
    let residual = fresh.laplacian_of_self()?.sub(eta)?;
    let certified_order = residual.eff().max(0) as u32;
    let residual_valuation = residual.valuation().min(certified_order + 1);
    if residual_valuation <= target.min(certified_order) {
        return Err(Error::StagnantValuation {
            degree: residual_valuation,
        });
    }
    Ok(JetSolution {
        sigma,
        gauge: final_gauge,
        residual,
        residual_valuation,
        certified_order,
        trace,
        gauged_residual_valuation: gauged_val,
    })
}

/// The full pipeline: normalization audit, scale audit, point seed,
/// first-order solution, gauged loop, un-gauging. The scale audit is the
/// gate: when no consistent λ exists the solve reports the inconsistency
/// rather than proceeding.
pub fn jet_poisson_solve<S: Scalar>(problem: &PoissonProblem<S>) -> Result<JetSolution<S>> {
    let audit = determine_scale(problem.sign)?;
    let (en, ed) = match audit.lambda_exponent {
        Some(e) => e,
        None => {
            return Err(Error::ScaleInconsistent {
                detail: audit.detail,
            })
        }
    };
    // unreachable with the audited origin value; kept for the counterfactual
    // path: σ₀ = λ·(dilated ansatz), then the first-order solution and the
    // gauged loop anchored there.
    let lambda = S::from_ratio(12, 1).pow_ratio(en, ed as u32)?;
    let seed: G2Structure<S> = quadratic_seed(problem.sign, problem.eta.order())?;
    let sigma0_form = seed.form().scale(&lambda);
    let sigma0 = G2Structure::new_closed(sigma0_form)?.with_sign(problem.sign);
    let first = build_first_order_solution(&sigma0, &problem.eta, problem.sign)?;
    solve_gauged_near(&first.sigma1, &problem.eta, problem.sign)
}
