//! G2-specific machinery: the canonical 3-form, positivity via the
//! B-matrix certificate, the induced metric, volume form, Hodge star,
//! codifferential, and Hodge Laplacians.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::form::{Form, MultiIndex, VectorFieldJet, FULL_MASK};
use crate::jet::Jet;
use crate::linalg::{definiteness, mat_is_symmetric, Definiteness, JetMat};
use crate::scalar::Scalar;

/// Index triples of the canonical 3-form: positive orientation block.
pub const TRIPLES_PLUS: [(u8, u8, u8); 4] = [(1, 2, 3), (1, 4, 5), (1, 6, 7), (2, 4, 6)];
/// Index triples entering with a minus sign.
pub const TRIPLES_MINUS: [(u8, u8, u8); 3] = [(2, 5, 7), (3, 4, 7), (3, 5, 6)];

/// The canonical constant G2 3-form on R^7.
pub fn sigma_canonical<S: Scalar>(order: u32) -> Form<S> {
    let mut comps = Vec::new();
    for (i, j, k) in TRIPLES_PLUS {
        let (m, _) = MultiIndex::from_indices(&[i, j, k]).unwrap();
        comps.push((m, Jet::one(order)));
    }
    for (i, j, k) in TRIPLES_MINUS {
        let (m, _) = MultiIndex::from_indices(&[i, j, k]).unwrap();
        comps.push((m, Jet::one(order).neg()));
    }
    Form::from_comps(3, order, comps)
}

/// B_ij read off (e_i ⌟ φ) ∧ (e_j ⌟ φ) ∧ φ = B_ij e^{1..7}.
pub fn b_matrix<S: Scalar>(phi: &Form<S>) -> Result<JetMat<S>> {
    if phi.degree() != 3 {
        return Err(Error::WrongDegree {
            expected: 3,
            found: phi.degree(),
        });
    }
    let order = phi.order();
    let ints: Vec<Form<S>> = (1..=7u8)
        .map(|i| phi.interior_axis(i))
        .collect::<Result<_>>()?;
    let mut b: JetMat<S> = (0..7)
        .map(|_| (0..7).map(|_| Jet::zero(order)).collect())
        .collect();
    for i in 0..7 {
        for j in i..7 {
            let pair = ints[i].wedge(&ints[j])?;
            let mut acc = Jet::zero(order);
            for (m4, j4) in pair.comps() {
                let m3 = m4.complement();
                let c3 = phi.comp(m3);
                if c3.is_zero() {
                    continue;
                }
                let mut term = j4.mul(&c3)?;
                if m4.wedge_sign(m3) < 0 {
                    term = term.neg();
                }
                acc = acc.add(&term)?;
            }
            b[i][j] = acc.clone();
            b[j][i] = acc;
        }
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Positivity {
    Positive,
    Negative,
    Neither,
}

/// Pointwise positivity certificate: definiteness of B at the origin.
pub fn positivity_check<S: Scalar>(phi: &Form<S>) -> Result<Positivity> {
    let b = b_matrix(phi)?;
    let b0: Vec<Vec<S>> = b
        .iter()
        .map(|row| row.iter().map(|j| j.eval0()).collect())
        .collect();
    Ok(match definiteness(&b0) {
        Definiteness::PositiveDefinite => Positivity::Positive,
        Definiteness::NegativeDefinite => Positivity::Negative,
        Definiteness::Neither => Positivity::Neither,
    })
}

fn mat_det<S: Scalar>(m: &JetMat<S>) -> Result<Jet<S>> {
    let n = m.len();
    let mut a = m.clone();
    let order = a[0][0].order();
    let mut det = Jet::one(order);
    for col in 0..n {
        let pivot = a[col][col].clone();
        if pivot.eval0().is_zero() {
            return Err(Error::SingularMetric);
        }
        det = det.mul(&pivot)?;
        let pinv = pivot.unit_power(-1, 1)?;
        for row in col + 1..n {
            let f = a[row][col].mul(&pinv)?;
            if f.is_zero() {
                continue;
            }
            for j in col..n {
                a[row][j] = a[row][j].sub(&f.mul(&a[col][j])?)?;
            }
        }
    }
    Ok(det)
}

/// Compound matrices Λ^m(g^{-1}): inner products of basis m-covectors.
struct CompoundTable<S: Scalar> {
    masks: Vec<u8>,
    pos: [usize; 128],
    entries: Vec<Jet<S>>, // row-major masks x masks
}

impl<S: Scalar> CompoundTable<S> {
    fn get(&self, a: u8, b: u8) -> &Jet<S> {
        &self.entries[self.pos[a as usize] * self.masks.len() + self.pos[b as usize]]
    }
}

struct Compounds<S: Scalar>(Vec<CompoundTable<S>>);

fn build_compounds<S: Scalar>(g_inv: &JetMat<S>, order: u32) -> Result<Compounds<S>> {
    let mut tables: Vec<CompoundTable<S>> = Vec::with_capacity(8);
    for m in 0..=7u32 {
        let masks: Vec<u8> = (0u8..128).filter(|x| x.count_ones() == m).collect();
        let mut pos = [usize::MAX; 128];
        for (i, &mk) in masks.iter().enumerate() {
            pos[mk as usize] = i;
        }
        let n = masks.len();
        let mut entries = vec![Jet::zero(order); n * n];
        if m == 0 {
            entries[0] = Jet::one(order);
        } else {
            for (ri, &rj) in masks.iter().enumerate() {
                let rtop = 8 - rj.leading_zeros() as u8; // largest index in rj
                let rrest = rj & !(1 << (rtop - 1));
                for (ci, &cj) in masks.iter().enumerate() {
                    // Laplace expansion along the last row
                    let mut acc = Jet::zero(order);
                    let prev = &tables[(m - 1) as usize];
                    let mut colpos = 0i32;
                    for b in 1..=7u8 {
                        if cj & (1 << (b - 1)) == 0 {
                            continue;
                        }
                        let g = &g_inv[(rtop - 1) as usize][(b - 1) as usize];
                        if !g.is_zero() {
                            let minor = prev.get(rrest, cj & !(1 << (b - 1)));
                            if !minor.is_zero() {
                                let mut t = g.mul(minor)?;
                                if (m as i32 - 1 + colpos) % 2 == 1 {
                                    t = t.neg();
                                }
                                acc = acc.add(&t)?;
                            }
                        }
                        colpos += 1;
                    }
                    entries[ri * n + ci] = acc;
                }
            }
        }
        tables.push(CompoundTable {
            masks,
            pos,
            entries,
        });
    }
    Ok(Compounds(tables))
}

/// Symmetric 7x7 jet metric with cached inverse and volume density.
pub struct MetricJet<S: Scalar> {
    order: u32,
    g: JetMat<S>,
    g_inv: JetMat<S>,
    det: Jet<S>,
    sqrt_det: Jet<S>,
    compounds: OnceLock<Arc<Compounds<S>>>,
}

impl<S: Scalar> Clone for MetricJet<S> {
    fn clone(&self) -> Self {
        MetricJet {
            order: self.order,
            g: self.g.clone(),
            g_inv: self.g_inv.clone(),
            det: self.det.clone(),
            sqrt_det: self.sqrt_det.clone(),
            compounds: OnceLock::new(),
        }
    }
}

impl<S: Scalar> MetricJet<S> {
    pub fn new(g: JetMat<S>) -> Result<Self> {
        assert_eq!(g.len(), 7);
        assert!(mat_is_symmetric(&g), "metric must be symmetric");
        let order = g[0][0].order();
        let g0: Vec<Vec<S>> = g
            .iter()
            .map(|row| row.iter().map(|j| j.eval0()).collect())
            .collect();
        if definiteness(&g0) != Definiteness::PositiveDefinite {
            return Err(Error::NotPositive);
        }
        let (det, g_inv) = crate::linalg::mat_det_inverse(&g)?;
        let sqrt_det = det.unit_power(1, 2)?;
        Ok(MetricJet {
            order,
            g,
            g_inv,
            det,
            sqrt_det,
            compounds: OnceLock::new(),
        })
    }

    pub fn identity(order: u32) -> Self {
        let g = crate::linalg::mat_identity(7, order);
        MetricJet::new(g).expect("identity metric")
    }

    pub fn order(&self) -> u32 {
        self.order
    }
    pub fn entries(&self) -> &JetMat<S> {
        &self.g
    }
    pub fn inverse_entries(&self) -> &JetMat<S> {
        &self.g_inv
    }
    pub fn det(&self) -> &Jet<S> {
        &self.det
    }
    /// Volume density sqrt(det g).
    pub fn volume_density(&self) -> &Jet<S> {
        &self.sqrt_det
    }

    pub fn volume_form(&self) -> Form<S> {
        Form::from_comps(7, self.order, vec![(FULL_MASK, self.sqrt_det.clone())])
    }

    fn compounds(&self) -> Result<Arc<Compounds<S>>> {
        if let Some(c) = self.compounds.get() {
            return Ok(c.clone());
        }
        let built = Arc::new(build_compounds(&self.g_inv, self.order)?);
        let _ = self.compounds.set(built.clone());
        Ok(self.compounds.get().cloned().unwrap_or(built))
    }

    /// Inner product of two forms of equal degree in this metric.
    pub fn inner_product(&self, a: &Form<S>, b: &Form<S>) -> Result<Jet<S>> {
        assert_eq!(a.degree(), b.degree());
        let table = self.compounds()?;
        let t = &table.0[a.degree() as usize];
        let mut acc = Jet::zero(self.order);
        for (ma, ja) in a.comps() {
            for (mb, jb) in b.comps() {
                let gram = t.get(ma.mask(), mb.mask());
                if gram.is_zero() {
                    continue;
                }
                acc = acc.add(&ja.mul(jb)?.mul(gram)?)?;
            }
        }
        Ok(acc)
    }
}

/// Hodge star of an arbitrary jet metric, via the induced inner product on
/// m-covectors: ⋆e^J = √det g · Σ_I ⟨e^J, e^I⟩ ε(I, I^c) e^{I^c}.
pub fn hodge_star<S: Scalar>(metric: &MetricJet<S>, a: &Form<S>) -> Result<Form<S>> {
    let order = a.order();
    if order != metric.order() {
        return Err(Error::OrderMismatch {
            left: metric.order(),
            right: order,
        });
    }
    let m = a.degree();
    let table = metric.compounds()?;
    let t = &table.0[m as usize];
    let mut raw: Vec<(MultiIndex, Jet<S>)> = Vec::new();
    for (mj, j) in a.comps() {
        let scaled = j.mul(&metric.sqrt_det)?;
        for &mi in &t.masks {
            let gram = t.get(mj.mask(), mi);
            if gram.is_zero() {
                continue;
            }
            let i = MultiIndex::from_mask(mi);
            let ic = i.complement();
            let mut c = scaled.mul(gram)?;
            if i.wedge_sign(ic) < 0 {
                c = c.neg();
            }
            raw.push((ic, c));
        }
    }
    let mut out = Form::zero(7 - m, order);
    for (mk, j) in raw {
        out = out.add(&Form::from_comps(7 - m, order, vec![(mk, j)]))?;
    }
    Ok(out)
}

/// Euclidean Hodge star (identity metric fast path).
pub fn hodge_star_euclid<S: Scalar>(a: &Form<S>) -> Result<Form<S>> {
    let order = a.order();
    let m = a.degree();
    let mut comps = Vec::with_capacity(a.comps().len());
    for (mj, j) in a.comps() {
        let mc = mj.complement();
        let c = if mj.wedge_sign(mc) < 0 {
            j.neg()
        } else {
            j.clone()
        };
        comps.push((mc, c));
    }
    Ok(Form::from_comps(7 - m, order, comps))
}

/// Codifferential δ = (−1)^m ⋆ d ⋆ on m-forms (dimension 7, Riemannian).
pub fn codifferential<S: Scalar>(metric: &MetricJet<S>, a: &Form<S>) -> Result<Form<S>> {
    if a.degree() == 0 {
        return Ok(Form::zero(0, a.order()).with_eff(a.eff() - 1));
    }
    let m = a.degree();
    let s1 = hodge_star(metric, a)?;
    let s2 = s1.d()?;
    let s3 = hodge_star(metric, &s2)?;
    Ok(if m % 2 == 1 { s3.neg() } else { s3 })
}

/// Hodge Laplacian Δ = dδ + δd; on functions this is −Σ ∂²_i.
pub fn hodge_laplacian<S: Scalar>(metric: &MetricJet<S>, a: &Form<S>) -> Result<Form<S>> {
    let mut acc = if a.degree() > 0 {
        codifferential(metric, a)?.d()?
    } else {
        Form::zero(0, a.order()).with_eff(a.eff() - 2)
    };
    if a.degree() < 7 {
        let t = codifferential(metric, &a.d()?)?;
        acc = acc.add(&t)?;
    }
    Ok(acc)
}

/// Flat-space Laplacian acting componentwise: Δ(f e^I) = (−Σ ∂²_i f) e^I.
pub fn laplacian_euclid<S: Scalar>(a: &Form<S>) -> Result<Form<S>> {
    let order = a.order();
    let mut comps = Vec::with_capacity(a.comps().len());
    for (m, j) in a.comps() {
        let mut acc = Jet::zero(order).with_eff(j.eff() - 2);
        for axis in 1..=7u8 {
            acc = acc.add(&j.partial(axis).partial(axis))?;
        }
        comps.push((*m, acc.neg()));
    }
    let eff = a.eff() - 2;
    Ok(Form::from_comps(a.degree(), order, comps).with_eff(eff))
}

/// The induced metric of a positive 3-form: g = B · (36 det B)^{−1/9},
/// the unique solution of 6 g(X,Y) vol_g = (X⌟φ)∧(Y⌟φ)∧φ.
pub fn metric_from_form<S: Scalar>(phi: &Form<S>) -> Result<MetricJet<S>> {
    let b = b_matrix(phi)?;
    let b0: Vec<Vec<S>> = b
        .iter()
        .map(|row| row.iter().map(|j| j.eval0()).collect())
        .collect();
    if definiteness(&b0) != Definiteness::PositiveDefinite {
        return Err(Error::NotPositive);
    }
    let det_b = mat_det(&b)?;
    let fac = det_b.scale(&S::from_int(36)).unit_power(-1, 9)?;
    let g: JetMat<S> = b
        .iter()
        .map(|row| row.iter().map(|e| e.mul(&fac)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    MetricJet::new(g)
}

/// A positive 3-form with its cached certificate, B-matrix, metric and
/// volume form. `sign` records the orientation convention of the ambient
/// problem (+1 unless solving for a negative right-hand side).
pub struct G2Structure<S: Scalar> {
    phi: Form<S>,
    sign: i8,
    b: JetMat<S>,
    metric: MetricJet<S>,
}

impl<S: Scalar> std::fmt::Debug for G2Structure<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "G2Structure(sign {}, {:?})", self.sign, self.phi)
    }
}

impl<S: Scalar> Clone for G2Structure<S> {
    fn clone(&self) -> Self {
        G2Structure {
            phi: self.phi.clone(),
            sign: self.sign,
            b: self.b.clone(),
            metric: self.metric.clone(),
        }
    }
}

impl<S: Scalar> G2Structure<S> {
    pub fn new(phi: Form<S>) -> Result<Self> {
        if positivity_check(&phi)? != Positivity::Positive {
            return Err(Error::NotPositive);
        }
        let b = b_matrix(&phi)?;
        let metric = metric_from_form(&phi)?;
        Ok(G2Structure {
            phi,
            sign: 1,
            b,
            metric,
        })
    }

    /// Also certifies closedness of the defining 3-form.
    pub fn new_closed(phi: Form<S>) -> Result<Self> {
        if !phi.is_closed() {
            let val = phi.d()?.valuation();
            return Err(Error::NotClosed { valuation: val });
        }
        G2Structure::new(phi)
    }

    pub fn with_sign(mut self, sign: i8) -> Self {
        debug_assert!(sign == 1 || sign == -1);
        self.sign = sign;
        self
    }

    pub fn form(&self) -> &Form<S> {
        &self.phi
    }
    pub fn sign(&self) -> i8 {
        self.sign
    }
    pub fn b_matrix(&self) -> &JetMat<S> {
        &self.b
    }
    pub fn metric(&self) -> &MetricJet<S> {
        &self.metric
    }
    pub fn volume_form(&self) -> Form<S> {
        self.metric.volume_form()
    }
    pub fn order(&self) -> u32 {
        self.phi.order()
    }

    pub fn laplacian(&self, a: &Form<S>) -> Result<Form<S>> {
        hodge_laplacian(&self.metric, a)
    }

    /// Δ_φ φ, the torsion 3-form of the structure.
    pub fn laplacian_of_self(&self) -> Result<Form<S>> {
        self.laplacian(&self.phi)
    }
}

/// Interior product against a frame vector as a field (used in tests and
/// the gauge machinery, where X⌟dφ needs a genuine jet field).
pub fn interior_field<S: Scalar>(x: &VectorFieldJet<S>, a: &Form<S>) -> Result<Form<S>> {
    a.interior(x)
}

/// The closed quadratic ansatz: coefficient 1 − sign·(x_i²+x_j²+x_k²) on
/// each canonical triple (sign-reversed squares for sign = −1). Closed and
/// positive at the origin for both signs.
pub fn quadratic_ansatz<S: Scalar>(sign: i8, order: u32) -> Form<S> {
    let mut comps = Vec::new();
    let factor = |i: u8, j: u8, k: u8| -> Jet<S> {
        let mut u = Jet::one(order);
        for v in [i, j, k] {
            let x = Jet::var(v, order);
            let sq = x.mul(&x).unwrap().scale(&S::from_int(-sign as i64));
            u = u.add(&sq).unwrap();
        }
        u
    };
    for (i, j, k) in TRIPLES_PLUS {
        let (m, _) = MultiIndex::from_indices(&[i, j, k]).unwrap();
        comps.push((m, factor(i, j, k)));
    }
    for (i, j, k) in TRIPLES_MINUS {
        let (m, _) = MultiIndex::from_indices(&[i, j, k]).unwrap();
        comps.push((m, factor(i, j, k).neg()));
    }
    Form::from_comps(3, order, comps)
}
