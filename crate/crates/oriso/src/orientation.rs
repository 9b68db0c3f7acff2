//! Orientations of supersingular curves by imaginary quadratic orders:
//! the canonical class encoding, twisting, primitivisation, and the
//! class-group action of smooth ideals.
//!
//! An orientation is stored as the image theta of the order's canonical
//! small-norm generator omega ((t, n) with omega^2 - t omega + n = 0).
//! Primitivisation divides the trace-zero endomorphism 2 theta - t by every
//! prime of twice the conductor while the division stays integral, then
//! applies the half-integer correction; divisibility of theta' by m is
//! decided by torsion evaluation, E[m] in ker(theta'), with no intermediate
//! materializations. The output generator is rebuilt as a fresh Velu chain.

use std::collections::BTreeSet;

use crate::arith::{self, valuation};
use crate::curve::{automorphisms, isomorphisms, Curve, Point, TorsionBasis};
use crate::division::{divide_by_integer, Divided};
use crate::field::Fe;
use crate::isogeny::{
    aux_prime, chain_from_subgroup, dlog2, matrix_kernel_mod, IsogenyChain, IsogenyExpr,
};
use crate::quadratic::{QuadForm, QuadOrder};
use crate::{Error, Result};

/// An orientation: the order and the image of its canonical generator.
#[derive(Clone, Debug)]
pub struct Orientation {
    pub order: QuadOrder,
    pub theta: IsogenyExpr,
}

/// A curve together with an orientation.
#[derive(Clone, Debug)]
pub struct OrientedCurve {
    pub curve: Curve,
    pub orientation: Orientation,
    pub primitive: Option<bool>,
}

impl OrientedCurve {
    pub fn new(curve: Curve, order: QuadOrder, theta: IsogenyExpr) -> Result<OrientedCurve> {
        if theta.curve != curve {
            return Err(Error::InvalidInput("theta is not an endomorphism of the curve".into()));
        }
        Ok(OrientedCurve {
            curve,
            orientation: Orientation { order, theta },
            primitive: None,
        })
    }

    /// Check trace, degree, and the minimal polynomial on sampled torsion
    /// over two coprime levels. Detects garbage orientations.
    pub fn verify(&self) -> Result<()> {
        let o = &self.orientation;
        let deg = o.theta.degree()?;
        let tr = o.theta.trace()?;
        if deg != o.order.n as u128 || tr != o.order.t {
            return Err(Error::InvalidInput(format!(
                "theta has (trace, deg) = ({tr}, {deg}), order wants ({}, {})",
                o.order.t, o.order.n
            )));
        }
        if o.order.disc >= 0 {
            return Err(Error::NonScalarRequired);
        }
        // minimal polynomial on two coprime torsion levels
        let q1 = aux_prime(&self.curve, &[deg])?;
        let q2 = aux_prime(&self.curve, &[deg, q1])?;
        for level in [q1, q2] {
            let basis = self.curve.torsion_basis(level)?;
            for pt in [&basis.p_point, &basis.q_point] {
                let t1 = o.theta.evaluate(pt)?;
                let t2 = o.theta.evaluate(&t1)?;
                let val = t2
                    .sub(&t1.mul_i128(o.order.t)?)?
                    .add(&pt.mul_i128(o.order.n)?)?;
                if !val.is_infinity() {
                    return Err(Error::InvalidInput(
                        "theta does not satisfy the order's minimal polynomial".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// The canonical bit-comparable encoding of the oriented isomorphism class.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ClassKey {
    pub bytes: Vec<u8>,
}

impl ClassKey {
    pub fn hex(&self) -> String {
        hex::encode(&self.bytes)
    }
}

/// enc: transport the orientation to the canonical model, pick the first
/// deterministic point of order > 4 N(omega), and record Q = theta(P) (the
/// Q-set over the automorphisms when j is 0 or 1728).
pub fn enc(x: &OrientedCurve) -> Result<ClassKey> {
    let tower = x.curve.tower();
    let j = x.curve.j_invariant();
    let canonical = Curve::canonical_model(tower, &j)?;
    let sigma = isomorphisms(&x.curve, &canonical)?
        .into_iter()
        .next()
        .expect("same j-invariant");
    let n_omega = x.orientation.order.n;
    let p_point = deterministic_point_of_order(&canonical, 4 * n_omega)?;
    let theta_on_canonical = |pt: &Point| -> Result<Point> {
        let back = sigma.inverse().apply(pt)?;
        let img = x.orientation.theta.evaluate(&back)?;
        sigma.apply(&img)
    };
    let base = tower.base();
    let exceptional = j.is_zero() || j == Fe::from_u64(&base, 1728);
    let mut q_set: Vec<Vec<u8>> = Vec::new();
    if exceptional {
        for u in automorphisms(&canonical)? {
            let moved = u.inverse().apply(&p_point)?;
            let img = theta_on_canonical(&moved)?;
            let q = u.apply(&img)?.descend_min()?;
            let b = q.bytes();
            if !q_set.contains(&b) {
                q_set.push(b);
            }
        }
        q_set.sort();
    } else {
        q_set.push(theta_on_canonical(&p_point)?.descend_min()?.bytes());
    }
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"oriso-enc-v1");
    bytes.extend_from_slice(&tower.p().to_be_bytes());
    bytes.extend_from_slice(&j.bytes());
    bytes.extend_from_slice(&x.orientation.order.disc.to_be_bytes());
    bytes.extend_from_slice(&p_point.bytes());
    bytes.extend_from_slice(&(q_set.len() as u32).to_be_bytes());
    for q in &q_set {
        bytes.extend_from_slice(q);
    }
    Ok(ClassKey { bytes })
}

/// First point (lex x, canonical root, ascending extension degree) whose
/// order exceeds the bound, found by exact order computation.
fn deterministic_point_of_order(e: &Curve, exceeds: i128) -> Result<Point> {
    let cap = e.tower().config().ext_cap;
    for d in 1..=cap {
        let mut idx: u128 = 0;
        let mut tried = 0u32;
        while tried < 512 {
            let Some(pt) = e.point_from_x_index(2 * d, idx)? else {
                idx += 1;
                continue;
            };
            idx += 1;
            tried += 1;
            // skip points that really live in a smaller field: they were
            // already considered at the smaller degree
            let pt_min = pt.descend_min()?;
            if pt_min.ext_degree() < d {
                continue;
            }
            match pt.order() {
                Ok(ord) => {
                    if ord > num_bigint::BigUint::from(exceeds.unsigned_abs()) {
                        return Ok(pt_min);
                    }
                }
                Err(Error::InputTooLarge(_)) => break,
                Err(e) => return Err(e),
            }
        }
    }
    Err(Error::TorsionUnreachable { m: exceeds.unsigned_abs(), cap })
}

/// The O-twist: the generator maps to its conjugate, theta -> [t] - theta.
pub fn twist(x: &OrientedCurve) -> OrientedCurve {
    let t = x.orientation.order.t;
    let theta = x.orientation.theta.scale_add(-1, t);
    OrientedCurve {
        curve: x.curve.clone(),
        orientation: Orientation { order: x.orientation.order.clone(), theta },
        primitive: x.primitive,
    }
}

/// Divided view of theta' = 2 theta - t after dividing by m, with the
/// optional half-integer correction: theta_out = (theta'/m + 1)/2 or
/// theta'/m. Evaluations route through the m-fold (or 2m-fold) torsion.
struct DividedGenerator<'a> {
    e: &'a Curve,
    theta_prime: &'a IsogenyExpr,
    m: u128,
    half: bool,
}

impl DividedGenerator<'_> {
    /// Basis of E[level] together with the images of the basis under the
    /// divided generator theta_out = theta'/m (plus the half correction).
    ///
    /// With u the divisor (m or 2m), only the part of u sharing primes with
    /// the level forces a torsion stretch; the coprime part is undone by a
    /// scalar inverse: theta_out(P) = V([w^{-1}] B) for [g] B = P, u = g w.
    fn eval_on_level(&self, level: u128) -> Result<(TorsionBasis, [Point; 2])> {
        let u = if self.half { 2 * self.m } else { self.m };
        let mut g: u128 = 1;
        for (q, _) in arith::factor(level)? {
            g *= q.pow(valuation(u, q));
        }
        let w = u / g;
        let big = self.e.torsion_basis(g * level)?;
        let small_p = big.p_point.mul_i128(g as i128)?;
        let small_q = big.q_point.mul_i128(g as i128)?;
        let w_inv = crate::arith::inv_mod(w as i128, (g * level) as i128)
            .expect("w is coprime to the stretched level");
        let value = |b: &Point| -> Result<Point> {
            let arg = b.mul_i128(w_inv)?;
            let mut v = self.theta_prime.evaluate(&arg)?;
            if self.half {
                v = v.add(&arg.mul_i128(self.m as i128)?)?;
            }
            Ok(v)
        };
        let basis = TorsionBasis {
            m: level,
            p_point: small_p,
            q_point: small_q,
            ext_degree: big.ext_degree,
        };
        Ok((basis, [value(&big.p_point)?, value(&big.q_point)?]))
    }
}

/// The division-probing core of primitivisation: returns the trace-zero
/// generator theta' = 2 theta - t, the maximal divisor m found, whether the
/// half-integer correction applies, and the resulting discriminant.
fn primitivise_probe(
    e: &Curve,
    theta: &IsogenyExpr,
    disc_factorization: Option<&[(u128, u32)]>,
    restrict_primes: Option<&[u128]>,
) -> Result<(IsogenyExpr, u128, bool, i128)> {
    let deg = theta.degree()? as i128;
    let tr = theta.trace()?;
    let disc = tr * tr - 4 * deg;
    if disc >= 0 {
        return Err(Error::NonScalarRequired);
    }
    let factors: Vec<(u128, u32)> = match disc_factorization {
        Some(f) => f.to_vec(),
        None => arith::factor_i128(disc)?,
    };
    // conductor of Z[theta] from the factored discriminant
    let mut d_sqfree: i128 = -1;
    for &(q, e_q) in &factors {
        if e_q % 2 == 1 {
            d_sqfree *= q as i128;
        }
    }
    let delta_k = if d_sqfree.rem_euclid(4) == 1 { d_sqfree } else { 4 * d_sqfree };
    let f_alpha = arith::isqrt_u128((disc / delta_k) as u128) as i128;
    debug_assert_eq!(f_alpha * f_alpha * delta_k, disc);
    // theta' = 2 theta - t, the trace-zero square root of disc
    let theta_prime = theta.scale_add(2, -tr);
    // for each prime ell of 2 f_alpha, divide while E[ell^e] is killed;
    // m^2 must divide disc, which caps the exponent
    let mut m: u128 = 1;
    let mut primes_2f: Vec<u128> = vec![2];
    match restrict_primes {
        Some(list) => {
            for &q in list {
                if q != 2 && !primes_2f.contains(&q) {
                    primes_2f.push(q);
                }
            }
        }
        None => {
            for (q, _) in arith::factor(f_alpha as u128)? {
                if q != 2 && !primes_2f.contains(&q) {
                    primes_2f.push(q);
                }
            }
        }
    }
    for &ell in &primes_2f {
        let cap = valuation(disc.unsigned_abs(), ell) / 2;
        let mut e_ell = 0u32;
        while e_ell < cap {
            let level = ell.pow(e_ell + 1);
            let basis = e.torsion_basis(level)?;
            let dies = theta_prime.evaluate(&basis.p_point)?.is_infinity()
                && theta_prime.evaluate(&basis.q_point)?.is_infinity();
            if !dies {
                break;
            }
            e_ell += 1;
        }
        m *= ell.pow(e_ell);
    }
    let d2 = disc / (m as i128 * m as i128); // alpha'' = sqrt(d2)
    // half-integer step: (theta'' + 1)/2 is integral iff E[2] dies under
    // theta'' + 1, which we test through the 2m-torsion
    let mut half = false;
    if d2.rem_euclid(4) == 1 {
        let big = e.torsion_basis(2 * m)?;
        half = [&big.p_point, &big.q_point].iter().all(|b| {
            let v = theta_prime
                .evaluate(b)
                .and_then(|v| v.add(&b.mul_i128(m as i128)?));
            matches!(v, Ok(v) if v.is_infinity())
        });
    }
    let disc_final = if half { d2 } else { 4 * d2 };
    Ok((theta_prime, m, half, disc_final))
}

/// Discriminant of the primitive closure of Z[theta] in End(E), without
/// materializing the generator. Cheap primitivity check.
pub fn primitive_discriminant(
    e: &Curve,
    theta: &IsogenyExpr,
    disc_factorization: Option<&[(u128, u32)]>,
) -> Result<i128> {
    let (_, _, _, disc) = primitivise_probe(e, theta, disc_factorization, None)?;
    Ok(disc)
}

/// As [`primitive_discriminant`] with the division attempts restricted to
/// the listed primes (plus the structural 2).
pub fn primitive_discriminant_restricted(
    e: &Curve,
    theta: &IsogenyExpr,
    restrict_primes: &[u128],
) -> Result<i128> {
    let (_, _, _, disc) = primitivise_probe(e, theta, None, Some(restrict_primes))?;
    Ok(disc)
}

/// Primitivisation: extend the orientation Z[theta] to the largest order of
/// its field that still embeds in End(E). Returns the primitively oriented
/// curve with the canonical generator materialized as a fresh Velu chain.
pub fn primitivise(
    e: &Curve,
    theta: &IsogenyExpr,
    disc_factorization: Option<&[(u128, u32)]>,
) -> Result<OrientedCurve> {
    primitivise_restricted(e, theta, disc_factorization, None)
}

/// Primitivisation with the division attempts restricted to the listed
/// primes (plus the structural factor 2); used by volcano steps, which
/// must clear exactly one prime of the conductor.
pub fn primitivise_restricted(
    e: &Curve,
    theta: &IsogenyExpr,
    disc_factorization: Option<&[(u128, u32)]>,
    restrict_primes: Option<&[u128]>,
) -> Result<OrientedCurve> {
    let (theta_prime, m, half, disc_final) =
        primitivise_probe(e, theta, disc_factorization, restrict_primes)?;
    let order = QuadOrder::from_disc(disc_final)?;
    let divided = DividedGenerator { e, theta_prime: &theta_prime, m, half };
    let theta_out = materialize_generator(e, &divided, &order)?;
    let out = OrientedCurve {
        curve: e.clone(),
        orientation: Orientation { order, theta: theta_out },
        primitive: Some(true),
    };
    out.verify()?;
    Ok(out)
}

/// Rebuild the divided generator as a fresh Velu chain: extract its kernel
/// on each prime power of n_omega, build the chain, and pin the final
/// isomorphism by matching the known images.
fn materialize_generator(
    e: &Curve,
    gen: &DividedGenerator<'_>,
    order: &QuadOrder,
) -> Result<IsogenyExpr> {
    let n_omega = order.n as u128;
    let mut kernel_gens: Vec<(Point, u128)> = Vec::new();
    // evaluation records reused for the final isomorphism match
    let mut tests: Vec<(Point, Point)> = Vec::new();
    for (ell, v) in arith::factor(n_omega)? {
        let level = ell.pow(v);
        let (basis, values) = gen.eval_on_level(level)?;
        let (a11, a21) = dlog2(&basis, &values[0])?;
        let (a12, a22) = dlog2(&basis, &values[1])?;
        let mat = [[a11 as i128, a12 as i128], [a21 as i128, a22 as i128]];
        for ((c1, c2), ord) in matrix_kernel_mod(&mat, level) {
            let pt = basis.p_point.mul_i128(c1)?.add(&basis.q_point.mul_i128(c2)?)?;
            kernel_gens.push((pt.descend_min()?, ord));
        }
        tests.push((basis.p_point.clone(), values[0].clone()));
        tests.push((basis.q_point.clone(), values[1].clone()));
    }
    let total: u128 = kernel_gens.iter().map(|(_, o)| o).product();
    if total != n_omega {
        return Err(Error::InvalidInput(
            "divided generator kernel does not match the order norm".into(),
        ));
    }
    // an auxiliary level pins the quotient among automorphism twists
    let q_aux = aux_prime(e, &[n_omega, gen.m * 2])?;
    let (aux_basis, aux_values) = gen.eval_on_level(q_aux)?;
    tests.push((aux_basis.p_point.clone(), aux_values[0].clone()));
    tests.push((aux_basis.q_point.clone(), aux_values[1].clone()));
    let chain = chain_from_subgroup(e, &kernel_gens)?;
    let candidates = isomorphisms(&chain.codomain, e)?;
    'cand: for sigma in candidates {
        for (x, want) in &tests {
            if sigma.apply(&chain.evaluate(x)?)? != *want {
                continue 'cand;
            }
        }
        let full = chain.then(&IsogenyChain::from_isomorphism(sigma))?;
        return Ok(IsogenyExpr::from_chain(full)?);
    }
    Err(Error::InvalidInput("generator normalization not found".into()))
}

/// The frozen form/eigenvalue dictionary: for the prime ideal (ell, b) the
/// canonical generator omega acts on the kernel with this eigenvalue.
pub fn eigenvalue_on_kernel(order: &QuadOrder, ell: u128, b: i128) -> i128 {
    debug_assert_eq!((order.t - b).rem_euclid(2), 0, "b and t share parity");
    ((order.t - b) / 2).rem_euclid(ell as i128)
}

/// One prime-ideal step of the class-group action: Velu through the
/// lambda-eigenspace, transport by conjugation, divide by ell.
fn prime_step(x: &OrientedCurve, ell: u128, b: i128) -> Result<(OrientedCurve, IsogenyChain)> {
    let order = &x.orientation.order;
    let e = &x.curve;
    if ell == e.tower().p() as u128 {
        return Err(Error::GcdViolation("ideal norm shares a factor with p".into()));
    }
    if order.conductor % ell as i128 == 0 {
        return Err(Error::ConductorClash(ell as i128));
    }
    // a legitimate prime ideal (ell, b) satisfies b^2 = disc mod 4 ell;
    // anything else is inert or malformed
    if (b * b - order.disc).rem_euclid(4 * ell as i128) != 0 {
        return Err(Error::EigenspaceMissing);
    }
    let lambda = eigenvalue_on_kernel(order, ell, b);
    let basis = e.torsion_basis(ell)?;
    let mat = x.orientation.theta.matrix_on_basis(&basis)?;
    let shifted = [
        [(mat[0][0] - lambda).rem_euclid(ell as i128), mat[0][1].rem_euclid(ell as i128)],
        [mat[1][0].rem_euclid(ell as i128), (mat[1][1] - lambda).rem_euclid(ell as i128)],
    ];
    let kernel = matrix_kernel_mod(&shifted, ell);
    let eigen: Vec<_> = kernel.iter().filter(|(_, ord)| *ord == ell).collect();
    if eigen.is_empty() {
        return Err(Error::EigenspaceMissing);
    }
    if eigen.len() > 1 {
        return Err(Error::InvalidInput(
            "theta is scalar on E[ell]: the orientation is not primitive at ell".into(),
        ));
    }
    let ((c1, c2), _) = eigen[0];
    let gen = basis.p_point.mul_i128(*c1)?.add(&basis.q_point.mul_i128(*c2)?)?;
    let (cod, phi) = crate::isogeny::velu_step(e, &gen.descend_min()?, ell as u64)?;
    // transported generator: (phi o theta o phi-hat) / ell
    let phihat = phi.dual()?;
    let mut terms = Vec::new();
    for (c, chain) in &x.orientation.theta.terms {
        terms.push((*c, phihat.then(chain)?.then(&phi)?));
    }
    let conj = IsogenyExpr::new(&cod, terms)?;
    let theta_new = match divide_by_integer(&conj.into(), ell)? {
        Divided::Quotient(c) => c,
        Divided::NotDivisible => {
            return Err(Error::InvalidInput(
                "transported generator is not divisible: eigenvalue convention violated".into(),
            ))
        }
    };
    let out = OrientedCurve {
        curve: cod,
        orientation: Orientation {
            order: order.clone(),
            theta: IsogenyExpr::from_chain(theta_new)?,
        },
        primitive: Some(true),
    };
    Ok((out, phi))
}

/// Class-group action of an ideal given as a form: factor the norm, act by
/// each prime ideal in turn, and re-assert primitivity of the result.
pub fn ideal_action(x: &OrientedCurve, a: &QuadForm) -> Result<OrientedCurve> {
    Ok(ideal_action_with_chain(x, a)?.0)
}

/// As [`ideal_action`], also returning the composed Velu chain realizing
/// the a-multiplication from x.curve to the result.
pub fn ideal_action_with_chain(
    x: &OrientedCurve,
    a: &QuadForm,
) -> Result<(OrientedCurve, IsogenyChain)> {
    if a.disc() != x.orientation.order.disc {
        return Err(Error::DiscMismatch);
    }
    let norm = a.norm();
    if norm <= 0 {
        return Err(Error::InvalidInput("forms must be positive definite".into()));
    }
    let mut cur = x.clone();
    let mut chain = IsogenyChain::identity(&x.curve);
    for (ell, e) in arith::factor(norm as u128)? {
        for _ in 0..e {
            let (next, phi) = prime_step(&cur, ell, a.b)?;
            chain = chain.then(&phi)?;
            cur = next;
        }
    }
    // the action preserves the primitive order: re-run the primitivisation
    // probe and compare discriminants
    let check = primitive_discriminant(&cur.curve, &cur.orientation.theta, None)?;
    if check != x.orientation.order.disc {
        return Err(Error::InvalidInput(
            "action changed the primitive order; input was not primitive".into(),
        ));
    }
    Ok((cur, chain))
}

/// Left-to-right application of a word of (form, exponent) pairs.
pub fn action_word(x: &OrientedCurve, word: &[(QuadForm, u32)]) -> Result<OrientedCurve> {
    let mut cur = x.clone();
    for (form, e) in word {
        for _ in 0..*e {
            cur = ideal_action(&cur, form)?;
        }
    }
    Ok(cur)
}

/// All supersingular j-invariants over F_{p^2}, enumerated by a 2-isogeny
/// graph walk from a known supersingular start: j = 1728 when p = 3 mod 4,
/// j = 0 when p = 2 mod 3.
pub fn supersingular_j_list(tower: &crate::field::Tower) -> Result<Vec<Fe>> {
    let base = tower.base();
    let start_j = if tower.p() % 4 == 3 {
        Fe::from_u64(&base, 1728)
    } else if tower.p() % 3 == 2 {
        Fe::zero(&base)
    } else {
        return Err(Error::InvalidInput(
            "the supersingular walk needs p = 3 mod 4 or p = 2 mod 3".into(),
        ));
    };
    let start = Curve::canonical_model(tower, &start_j)?;
    let mut seen: BTreeSet<Vec<u8>> = BTreeSet::new();
    let mut out = Vec::new();
    let mut frontier = vec![start];
    seen.insert(start_j.bytes());
    out.push(start_j);
    while let Some(e) = frontier.pop() {
        let basis = e.torsion_basis(2)?;
        let t1 = basis.p_point.clone();
        let t2 = basis.q_point.clone();
        let t3 = t1.add(&t2)?;
        for ker in [t1, t2, t3] {
            let (cod, _) = crate::isogeny::velu_step(&e, &ker.descend_min()?, 2)?;
            let j = cod.j_invariant();
            if seen.insert(j.bytes()) {
                out.push(j.clone());
                frontier.push(cod);
            }
        }
    }
    Ok(out)
}

/// Search every supersingular curve for cyclic loops of degree n_omega and
/// trace +-t_omega: a desk-scale enumeration of primitively O-oriented
/// curves. Returns all found, deduplicated by enc.
pub fn enumerate_oriented(tower: &crate::field::Tower, order: &QuadOrder) -> Result<Vec<OrientedCurve>> {
    let mut out: Vec<OrientedCurve> = Vec::new();
    let mut keys: BTreeSet<Vec<u8>> = BTreeSet::new();
    let n = order.n as u128;
    for j in supersingular_j_list(tower)? {
        let e = Curve::canonical_model(tower, &j)?;
        for theta in loops_with_invariants(&e, n, order.t)? {
            // primitive iff the primitivisation probe keeps the discriminant
            if primitive_discriminant(&e, &theta, None)? != order.disc {
                continue;
            }
            let prim = primitivise(&e, &theta, None)?;
            let key = enc(&prim)?;
            if keys.insert(key.bytes.clone()) {
                out.push(prim);
            }
        }
    }
    Ok(out)
}

/// The first primitively O-oriented curve found by the loop search.
pub fn orient_by_search(tower: &crate::field::Tower, order: &QuadOrder) -> Result<OrientedCurve> {
    for j in supersingular_j_list(tower)? {
        let e = Curve::canonical_model(tower, &j)?;
        for theta in loops_with_invariants(&e, order.n as u128, order.t)? {
            if primitive_discriminant(&e, &theta, None)? == order.disc {
                return Ok(primitivise(&e, &theta, None)?);
            }
        }
    }
    Err(Error::InvalidInput(format!(
        "no primitively oriented curve found for disc {}",
        order.disc
    )))
}

/// Endomorphism loops: cyclic degree-n isogenies from E back to E with
/// trace +-t, normalized to trace exactly t.
pub(crate) fn loops_with_invariants(e: &Curve, n: u128, t: i128) -> Result<Vec<IsogenyExpr>> {
    let mut out = Vec::new();
    if n == 1 {
        // automorphism loops
        for u in automorphisms(e)? {
            let expr = IsogenyExpr::from_chain(IsogenyChain::from_isomorphism(u))?;
            let tr = expr.trace()?;
            if tr == t {
                out.push(expr);
            } else if tr == -t && t != 0 {
                out.push(expr.scale_add(-1, 0));
            }
        }
        return Ok(out);
    }
    let basis = e.torsion_basis(n)?;
    for (c1, c2) in projective_line(n) {
        let gen = basis.p_point.mul_i128(c1 as i128)?.add(&basis.q_point.mul_i128(c2 as i128)?)?;
        // generator of exact order n (unit combinations guarantee it)
        let chain = chain_from_subgroup(e, &[(gen.descend_min()?, n)])?;
        if chain.codomain.j_invariant() != e.j_invariant() {
            continue;
        }
        for sigma in isomorphisms(&chain.codomain, e)? {
            let loop_chain = chain.then(&IsogenyChain::from_isomorphism(sigma))?;
            let expr = IsogenyExpr::from_chain(loop_chain)?;
            let tr = expr.trace()?;
            if tr == t {
                out.push(expr);
            } else if tr == -t && t != 0 {
                out.push(expr.scale_add(-1, 0));
            } else if t == 0 && tr == 0 {
                // already covered by tr == t
            }
        }
    }
    Ok(out)
}

/// Representatives of P^1(Z/n): the cyclic subgroups of (Z/n)^2.
fn projective_line(n: u128) -> Vec<(u128, u128)> {
    let mut out = Vec::new();
    // (1 : b) for all b, and (a : 1) for a not a unit... enumerate pairs
    // (c1, c2) with gcd(c1, c2, n) = 1, deduplicated by unit scaling
    let mut seen = BTreeSet::new();
    let units: Vec<u128> = (1..n).filter(|&u| arith::gcd_u128(u, n) == 1).collect();
    for c1 in 0..n {
        for c2 in 0..n {
            if arith::gcd_u128(arith::gcd_u128(c1, c2), n) != 1 {
                continue;
            }
            let canon = units
                .iter()
                .map(|&u| ((c1 * u) % n, (c2 * u) % n))
                .min()
                .unwrap();
            if seen.insert(canon) {
                out.push(canon);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Config, Tower};
    use crate::quadratic::PrimeIdeal;

    fn tower31() -> Tower {
        Tower::new(31, Config::default())
    }

    fn e1728(t: &Tower) -> Curve {
        Curve::canonical_model(t, &Fe::from_u64(&t.base(), 1728)).unwrap()
    }

    fn iota_expr(e: &Curve) -> IsogenyExpr {
        let auts = automorphisms(e).unwrap();
        let t = e.tower();
        let pts = e.sample_points(1, 3).unwrap();
        let base = t.base();
        let i = Fe { ctx: base.clone(), c: vec![0, 1] };
        let found = auts
            .into_iter()
            .find(|a| {
                pts.iter().all(|p| {
                    let q = a.apply(p).unwrap();
                    let (x, y) = p.xy.as_ref().unwrap();
                    let (qx, qy) = q.xy.as_ref().unwrap();
                    let k = qx.ctx.k;
                    *qx == t.embed(&x.neg(), k).unwrap()
                        && *qy == t.embed(&i, k).unwrap().mul(&t.embed(y, k).unwrap())
                })
            })
            .unwrap();
        IsogenyExpr::from_chain(IsogenyChain::from_isomorphism(found)).unwrap()
    }

    fn gaussian_curve(t: &Tower) -> OrientedCurve {
        let e = e1728(t);
        let order = QuadOrder::from_disc(-4).unwrap();
        let x = OrientedCurve::new(e.clone(), order, iota_expr(&e)).unwrap();
        x.verify().unwrap();
        x
    }

    #[test]
    fn enc_is_deterministic_and_stable() {
        let t = tower31();
        let x = gaussian_curve(&t);
        let k1 = enc(&x).unwrap();
        let k2 = enc(&x).unwrap();
        assert_eq!(k1, k2);
        // a fresh tower reproduces the same bytes
        let t2 = tower31();
        let y = gaussian_curve(&t2);
        assert_eq!(enc(&y).unwrap(), k1);
    }

    #[test]
    fn enc_separates_twist_at_1728() {
        let t = tower31();
        let x = gaussian_curve(&t);
        let xbar = twist(&x);
        xbar.verify().unwrap();
        // iota and -iota are not conjugate by any automorphism (Aut abelian),
        // so the keys differ
        assert_ne!(enc(&x).unwrap(), enc(&xbar).unwrap());
        // twisting twice comes back
        assert_eq!(enc(&twist(&xbar)).unwrap(), enc(&x).unwrap());
    }

    #[test]
    fn twist_preserves_invariants() {
        let t = tower31();
        let x = gaussian_curve(&t);
        let xb = twist(&x);
        assert_eq!(xb.orientation.theta.trace().unwrap(), x.orientation.order.t);
        assert_eq!(
            xb.orientation.theta.degree().unwrap(),
            x.orientation.order.n as u128
        );
    }

    #[test]
    fn primitivise_z2i_hand_trace() {
        // theta = [2] o iota on y^2 = x^3 + x / F_31: disc Z[2i] = -16;
        // two divisions by 2, the half step fails, output Z[i]
        let t = tower31();
        let e = e1728(&t);
        let theta = iota_expr(&e).scale_add(2, 0);
        assert_eq!(theta.degree().unwrap(), 4);
        assert_eq!(theta.trace().unwrap(), 0);
        let out = primitivise(&e, &theta, None).unwrap();
        assert_eq!(out.orientation.order.disc, -4);
        assert_eq!(out.primitive, Some(true));
        // theta_out = iota up to the automorphism normalization: it must act
        // like +-iota; enc equality with the iota orientation pins the class
        let x = gaussian_curve(&t);
        let key = enc(&out).unwrap();
        let k_plus = enc(&x).unwrap();
        let k_minus = enc(&twist(&x)).unwrap();
        assert!(key == k_plus || key == k_minus);
    }

    #[test]
    fn primitivise_idempotent_on_primitive_input() {
        let t = tower31();
        let x = gaussian_curve(&t);
        let out = primitivise(&x.curve, &x.orientation.theta, None).unwrap();
        assert_eq!(out.orientation.order.disc, -4);
        assert_eq!(enc(&out).unwrap(), enc(&x).unwrap());
    }

    #[test]
    fn primitivise_three_iota() {
        // theta = [3] o iota: disc -36, one division by 3 (and the 2-steps)
        let t = tower31();
        let e = e1728(&t);
        let theta = iota_expr(&e).scale_add(3, 0);
        assert_eq!(theta.degree().unwrap(), 9);
        let out = primitivise(&e, &theta, None).unwrap();
        assert_eq!(out.orientation.order.disc, -4);
    }

    #[test]
    fn primitivise_rejects_scalars() {
        let t = tower31();
        let e = e1728(&t);
        let theta = IsogenyExpr::scalar(&e, 5);
        assert!(matches!(
            primitivise(&e, &theta, None),
            Err(Error::NonScalarRequired)
        ));
    }

    #[test]
    fn ramified_prime_action_is_trivial_for_h1() {
        // disc -4, h = 1: the ramified prime 2 acts trivially on classes
        let t = tower31();
        let x = gaussian_curve(&t);
        let order = x.orientation.order.clone();
        let PrimeIdeal::Form(f2) = crate::quadratic::prime_form(&order, 2).unwrap() else {
            panic!("2 ramifies in Z[i]");
        };
        let y = ideal_action(&x, &f2).unwrap();
        assert_eq!(enc(&y).unwrap(), enc(&x).unwrap(), "principal class acts trivially");
    }

    #[test]
    fn split_prime_action_roundtrip_h1() {
        // disc -4, ell = 5 splits; the class is principal (h = 1) so the
        // action must return the same key
        let t = tower31();
        let x = gaussian_curve(&t);
        let order = x.orientation.order.clone();
        let PrimeIdeal::Form(f5) = crate::quadratic::prime_form(&order, 5).unwrap() else {
            panic!("5 splits in Z[i]");
        };
        let y = ideal_action(&x, &f5).unwrap();
        assert_eq!(enc(&y).unwrap(), enc(&x).unwrap());
    }

    #[test]
    fn inert_prime_has_no_eigenspace() {
        let t = tower31();
        let x = gaussian_curve(&t);
        // 3 is inert in Z[i]; force a bogus prime step
        let r = prime_step(&x, 3, 1);
        assert!(matches!(r, Err(Error::EigenspaceMissing) | Err(Error::InvalidInput(_))));
    }

    #[test]
    fn supersingular_enumeration_p31() {
        let t = tower31();
        let js = supersingular_j_list(&t).unwrap();
        // p = 31: two supersingular j-invariants (1728 and 23 = 2,
        // class number of B_{31,infinity}); count is floor(p/12) + eps
        assert_eq!(js.len(), 3);
        for j in &js {
            let e = Curve::canonical_model(&t, j).unwrap();
            assert!(e.is_supersingular().unwrap());
        }
    }

    #[test]
    fn enumerate_gaussian_orientations_orbit_structure() {
        // SS_{Z[i]}(31): exactly the two classes (E_1728, iota) and its
        // twist; p = 31 is inert in Q(i)
        let t = tower31();
        let order = QuadOrder::from_disc(-4).unwrap();
        let all = enumerate_oriented(&t, &order).unwrap();
        assert_eq!(all.len(), 2, "h = 1 and two orbits when p is inert");
        let x = gaussian_curve(&t);
        let keys: BTreeSet<_> = all.iter().map(|c| enc(c).unwrap().bytes).collect();
        assert!(keys.contains(&enc(&x).unwrap().bytes));
        assert!(keys.contains(&enc(&twist(&x)).unwrap().bytes));
    }

    #[test]
    fn class_group_action_on_disc_minus_47() {
        // p = 107: inert in Q(sqrt(-47)), 3 mod 4, and 12 | p + 1 so the
        // norm-12 generator loops are cheap. h(-47) = 5.
        let p = 107u64;
        assert_eq!(p % 12, 11);
        assert_eq!(crate::arith::kronecker(-47, p as u128), -1);
        let t = Tower::new(p, Config::default());
        let order = QuadOrder::from_disc(-47).unwrap();
        let x = orient_by_search(&t, &order).unwrap();
        x.verify().unwrap();
        let key_x = enc(&x).unwrap();
        let a = QuadForm::new(2, 1, 6);
        let abar = QuadForm::new(2, -1, 6);
        // freeness: a non-principal class moves the curve
        let y = ideal_action(&x, &a).unwrap();
        let key_y = enc(&y).unwrap();
        assert_ne!(key_y, key_x, "free action: non-principal ideal moves the class");
        // inverse composition: acting by the conjugate returns
        let back = ideal_action(&y, &abar).unwrap();
        assert_eq!(enc(&back).unwrap(), key_x);
        // compatibility: act(act(x, a), b) ~ act(x, a o b)
        let b = QuadForm::new(3, 1, 4);
        let lhs = ideal_action(&ideal_action(&x, &a).unwrap(), &b).unwrap();
        let ab = a.compose(&b).unwrap();
        let rhs = ideal_action(&x, &ab).unwrap();
        assert_eq!(enc(&lhs).unwrap(), enc(&rhs).unwrap(), "action is compatible");
        // full cycle: order of [a] divides 5, so acting 5 times returns
        let mut cur = x.clone();
        for _ in 0..5 {
            cur = ideal_action(&cur, &a).unwrap();
        }
        assert_eq!(enc(&cur).unwrap(), key_x, "order-5 class cycles back");
    }

    #[test]
    fn pushforward_isomorphism_preserves_enc() {
        // transport the orientation through an isomorphism to a non-canonical
        // model; enc must agree
        let t = tower31();
        let x = gaussian_curve(&t);
        // build a non-trivially presented isomorphic model: conjugate theta
        // by an automorphism (a K-isomorphic presentation of the same class)
        for u in automorphisms(&x.curve).unwrap() {
            let chain_u = IsogenyChain::from_isomorphism(u.clone());
            let chain_uinv = IsogenyChain::from_isomorphism(u.inverse());
            let mut terms = Vec::new();
            for (c, chain) in &x.orientation.theta.terms {
                terms.push((*c, chain_uinv.then(chain).unwrap().then(&chain_u).unwrap()));
            }
            let conj = IsogenyExpr::new(&x.curve, terms).unwrap();
            let y = OrientedCurve::new(x.curve.clone(), x.orientation.order.clone(), conj)
                .unwrap();
            y.verify().unwrap();
            assert_eq!(enc(&y).unwrap(), enc(&x).unwrap(), "conjugation preserves the class");
        }
    }
}
