//! Efficient isogeny representations: composable step chains and Z-linear
//! combinations of endomorphisms.
//!
//! A chain is a list of steps (Velu kernel step, scalar multiplication,
//! isomorphism, Frobenius marker) whose endpoints agree. Every Velu step is
//! normalized on construction: its codomain is the canonical model of the
//! image j-invariant, so chain endpoints always live over F_{p^2}.
//!
//! Degrees and traces of endomorphism expressions are recovered from the
//! matrices of the map on torsion bases E[m] (det = degree, tr = trace mod
//! m), combined by CRT over enough coprime levels.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::arith;
use crate::curve::velu::{velu_build, VeluData};
use crate::curve::weil_pairing;
use crate::curve::{isomorphisms, Curve, IsoData, Isomorphism, Point, TorsionBasis};
use crate::field::Fe;
use crate::{Error, Result};

/// One Velu step with its canonical-model normalization.
pub struct VeluStepData {
    pub domain: Curve,
    pub kernel: Point,
    pub ell: u64,
    pub codomain: Curve,
    pub(crate) velu: VeluData,
    pub(crate) post: IsoData,
    lifted: Mutex<HashMap<u32, VeluData>>,
}

impl VeluStepData {
    fn lifted_velu(&self, k: u32) -> Result<VeluData> {
        if k == self.velu.field_k() {
            return Ok(self.velu.clone());
        }
        if let Some(v) = self.lifted.lock().unwrap().get(&k) {
            return Ok(v.clone());
        }
        let v = self.velu.lift(self.domain.tower(), k)?;
        self.lifted.lock().unwrap().insert(k, v.clone());
        Ok(v)
    }
}

#[derive(Clone)]
pub enum Step {
    Velu(Arc<VeluStepData>),
    Scalar { curve: Curve, n: i128 },
    Iso(Isomorphism),
    Frobenius { curve: Curve, power: u32 },
}

impl std::fmt::Debug for Step {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Step::Velu(v) => write!(f, "Velu({})", v.ell),
            Step::Scalar { n, .. } => write!(f, "[{n}]"),
            Step::Iso(_) => write!(f, "Iso"),
            Step::Frobenius { power, .. } => write!(f, "Frob^{power}"),
        }
    }
}

impl Step {
    pub fn domain(&self) -> &Curve {
        match self {
            Step::Velu(v) => &v.domain,
            Step::Scalar { curve, .. } => curve,
            Step::Iso(i) => &i.domain,
            Step::Frobenius { curve, .. } => curve,
        }
    }

    pub fn codomain(&self) -> &Curve {
        match self {
            Step::Velu(v) => &v.codomain,
            Step::Scalar { curve, .. } => curve,
            Step::Iso(i) => &i.codomain,
            Step::Frobenius { curve, .. } => curve,
        }
    }

    pub fn degree(&self) -> u128 {
        match self {
            Step::Velu(v) => v.ell as u128,
            Step::Scalar { n, .. } => n.unsigned_abs() * n.unsigned_abs(),
            Step::Iso(_) => 1,
            Step::Frobenius { curve, power } => (curve.tower().p() as u128).pow(*power),
        }
    }

    pub fn apply(&self, pt: &Point) -> Result<Point> {
        debug_assert!(pt.curve == *self.domain(), "step applied off its domain");
        match self {
            Step::Velu(v) => {
                if pt.is_infinity() {
                    return Ok(v.codomain.infinity());
                }
                let k = num_integer::lcm(pt.field_k(), v.velu.field_k());
                let lifted = v.lifted_velu(k)?;
                let pe = pt.in_field(k)?;
                let raw = lifted.apply(&pe.xy);
                let xy = v.post.apply_affine(v.domain.tower(), &raw)?;
                Ok(Point { curve: v.codomain.clone(), xy })
            }
            Step::Scalar { n, .. } => pt.mul_i128(*n),
            Step::Iso(i) => i.apply(pt),
            Step::Frobenius { curve, power } => {
                let Some((x, y)) = &pt.xy else { return Ok(curve.infinity()) };
                let e = num_bigint::BigUint::from(curve.tower().p()).pow(*power);
                Ok(Point { curve: curve.clone(), xy: Some((x.pow(&e), y.pow(&e))) })
            }
        }
    }
}

/// A composable chain of isogeny steps.
#[derive(Clone)]
pub struct IsogenyChain {
    pub domain: Curve,
    pub codomain: Curve,
    pub steps: Vec<Step>,
    degree: u128,
}

impl std::fmt::Debug for IsogenyChain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Chain(deg={}, steps={:?})", self.degree, self.steps)
    }
}

impl IsogenyChain {
    pub fn identity(e: &Curve) -> IsogenyChain {
        IsogenyChain { domain: e.clone(), codomain: e.clone(), steps: vec![], degree: 1 }
    }

    pub fn scalar(e: &Curve, n: i128) -> IsogenyChain {
        if n == 1 {
            return IsogenyChain::identity(e);
        }
        IsogenyChain {
            domain: e.clone(),
            codomain: e.clone(),
            steps: vec![Step::Scalar { curve: e.clone(), n }],
            degree: n.unsigned_abs() * n.unsigned_abs(),
        }
    }

    pub fn from_isomorphism(iso: Isomorphism) -> IsogenyChain {
        IsogenyChain {
            domain: iso.domain.clone(),
            codomain: iso.codomain.clone(),
            steps: vec![Step::Iso(iso)],
            degree: 1,
        }
    }

    pub fn from_steps(steps: Vec<Step>) -> Result<IsogenyChain> {
        let Some(first) = steps.first() else {
            return Err(Error::InvalidInput("empty step list; use identity(E)".into()));
        };
        let domain = first.domain().clone();
        let mut cod = first.codomain().clone();
        let mut degree: u128 = first.degree();
        for s in &steps[1..] {
            if *s.domain() != cod {
                return Err(Error::InvalidInput("non-composable steps".into()));
            }
            cod = s.codomain().clone();
            degree = degree
                .checked_mul(s.degree())
                .ok_or_else(|| Error::InputTooLarge("chain degree overflow".into()))?;
        }
        Ok(IsogenyChain { domain, codomain: cod, steps, degree })
    }

    pub fn then(&self, g: &IsogenyChain) -> Result<IsogenyChain> {
        if self.codomain != g.domain {
            return Err(Error::InvalidInput("chain composition endpoint mismatch".into()));
        }
        let mut steps = self.steps.clone();
        steps.extend(g.steps.iter().cloned());
        Ok(IsogenyChain {
            domain: self.domain.clone(),
            codomain: g.codomain.clone(),
            steps,
            degree: self
                .degree
                .checked_mul(g.degree)
                .ok_or_else(|| Error::InputTooLarge("chain degree overflow".into()))?,
        })
    }

    pub fn degree(&self) -> u128 {
        self.degree
    }

    pub fn separable_degree(&self) -> u128 {
        self.steps
            .iter()
            .map(|s| match s {
                Step::Frobenius { .. } => 1,
                other => other.degree(),
            })
            .product()
    }

    pub fn is_endomorphism(&self) -> bool {
        self.domain == self.codomain
    }

    pub fn evaluate(&self, pt: &Point) -> Result<Point> {
        if pt.curve != self.domain {
            return Err(Error::InvalidInput("point not on chain domain".into()));
        }
        let mut cur = pt.clone();
        for s in &self.steps {
            cur = s.apply(&cur)?;
        }
        Ok(cur)
    }

    /// The dual chain: dual(f) o f = [deg f] pointwise, exactly.
    pub fn dual(&self) -> Result<IsogenyChain> {
        let mut steps: Vec<Step> = Vec::new();
        for s in self.steps.iter().rev() {
            match s {
                Step::Scalar { curve, n } => {
                    steps.push(Step::Scalar { curve: curve.clone(), n: *n })
                }
                Step::Iso(i) => steps.push(Step::Iso(i.inverse())),
                Step::Frobenius { .. } => return Err(Error::InseparableUnsupported),
                Step::Velu(v) => steps.extend(dual_velu_steps(v)?),
            }
        }
        if steps.is_empty() {
            return Ok(IsogenyChain::identity(&self.domain));
        }
        let d = IsogenyChain::from_steps(steps)?;
        debug_assert!(d.domain == self.codomain && d.codomain == self.domain);
        Ok(d)
    }
}

/// Velu step as an operation: codomain plus a one-step chain that lands on
/// the canonical model of the image class.
pub fn velu_step(e: &Curve, kernel_gen: &Point, ell: u64) -> Result<(Curve, IsogenyChain)> {
    if !arith::is_prime(ell as u128) || ell == e.tower().p() {
        return Err(Error::BadKernelOrder);
    }
    if kernel_gen.is_infinity()
        || kernel_gen.curve != *e
        || !kernel_gen.mul_i128(ell as i128)?.is_infinity()
    {
        return Err(Error::BadKernelOrder);
    }
    let kf = kernel_gen.field_k();
    let a = e.coeffs_in(kf)?;
    let velu = velu_build(&a, &kernel_gen.xy, ell)?;
    let tower = e.tower();
    let j_raw = crate::curve::j_of(&velu.codomain)
        .ok_or_else(|| Error::InvalidInput("singular Velu codomain".into()))?;
    let j = tower
        .descend(&j_raw, 2)?
        .ok_or_else(|| Error::InvalidInput("codomain j-invariant not in F_{p^2}".into()))?;
    let cod = Curve::canonical_model(tower, &j)?;
    let max_k = 2 * tower.config().ext_cap;
    let isos = crate::curve::isomorphisms_raw(tower, &velu.codomain, cod.coeffs(), max_k)?;
    let post = isos
        .into_iter()
        .next()
        .ok_or_else(|| Error::InvalidInput("no isomorphism to canonical model".into()))?;
    let step = Step::Velu(Arc::new(VeluStepData {
        domain: e.clone(),
        kernel: kernel_gen.clone(),
        ell,
        codomain: cod.clone(),
        velu,
        post,
        lifted: Mutex::new(HashMap::new()),
    }));
    Ok((cod, IsogenyChain::from_steps(vec![step])?))
}

fn dual_velu_steps(v: &Arc<VeluStepData>) -> Result<Vec<Step>> {
    let e = &v.domain;
    let ell = v.ell;
    let basis = e.torsion_basis(ell as u128)?;
    let fwd = Step::Velu(v.clone());
    // a basis point outside the kernel maps to a generator of the dual kernel
    let mut image = None;
    for cand in [&basis.p_point, &basis.q_point] {
        let img = fwd.apply(cand)?;
        if !img.is_infinity() {
            image = Some(img.descend_min()?);
            break;
        }
    }
    let t_dual = image.expect("E[ell] is never contained in a prime-degree kernel");
    let (_, psi) = velu_step(&v.codomain, &t_dual, ell)?;
    // pin the normalizing isomorphism with test points of order >= 5
    let m_aux = aux_prime(e, &[ell as u128])?;
    let aux = e.torsion_basis(m_aux)?;
    let candidates = isomorphisms(&psi.codomain, e)?;
    let mut matched = Vec::new();
    'cand: for sigma in candidates {
        for pt in [&aux.p_point, &aux.q_point] {
            let lhs = sigma.apply(&psi.evaluate(&fwd.apply(pt)?)?)?;
            let rhs = pt.mul_i128(ell as i128)?;
            if lhs != rhs {
                continue 'cand;
            }
        }
        matched.push(sigma);
    }
    let sigma = matched
        .into_iter()
        .next()
        .ok_or_else(|| Error::InvalidInput("dual normalization not found".into()))?;
    let mut steps = psi.steps;
    steps.push(Step::Iso(sigma));
    Ok(steps)
}

/// Smallest prime >= 5 coprime to p and the avoid list, with reachable
/// torsion. Order-5 points discriminate every automorphism twist.
pub(crate) fn aux_prime(e: &Curve, avoid: &[u128]) -> Result<u128> {
    let p = e.tower().p() as u128;
    for q in arith::primes() {
        let q = q as u128;
        if q < 5 || q == p || avoid.iter().any(|a| a % q == 0) {
            continue;
        }
        if q > 60 {
            break;
        }
        if e.torsion_basis(q).is_ok() {
            return Ok(q);
        }
    }
    Err(Error::TorsionUnreachable { m: 5, cap: e.tower().config().ext_cap })
}

/// Z-linear combination of endomorphism chains of a single curve.
#[derive(Clone)]
pub struct IsogenyExpr {
    pub curve: Curve,
    pub terms: Vec<(i128, IsogenyChain)>,
    deg_cache: Arc<OnceLock<u128>>,
    tr_cache: Arc<OnceLock<i128>>,
}

impl std::fmt::Debug for IsogenyExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Expr[{} terms]", self.terms.len())
    }
}

impl IsogenyExpr {
    pub fn from_chain(chain: IsogenyChain) -> Result<IsogenyExpr> {
        if !chain.is_endomorphism() {
            return Err(Error::InvalidInput("expressions are endomorphisms".into()));
        }
        IsogenyExpr::new(&chain.domain.clone(), vec![(1, chain)])
    }

    pub fn new(curve: &Curve, terms: Vec<(i128, IsogenyChain)>) -> Result<IsogenyExpr> {
        for (_, c) in &terms {
            if c.domain != *curve || c.codomain != *curve {
                return Err(Error::InvalidInput(
                    "all terms must be endomorphisms of the curve".into(),
                ));
            }
        }
        Ok(IsogenyExpr {
            curve: curve.clone(),
            terms,
            deg_cache: Arc::new(OnceLock::new()),
            tr_cache: Arc::new(OnceLock::new()),
        })
    }

    pub fn scalar(curve: &Curve, n: i128) -> IsogenyExpr {
        IsogenyExpr::new(curve, vec![(n, IsogenyChain::identity(curve))]).unwrap()
    }

    /// a * self + b as an endomorphism expression.
    pub fn scale_add(&self, a: i128, b: i128) -> IsogenyExpr {
        let mut terms: Vec<(i128, IsogenyChain)> =
            self.terms.iter().map(|(c, ch)| (a * c, ch.clone())).collect();
        if b != 0 {
            terms.push((b, IsogenyChain::identity(&self.curve)));
        }
        IsogenyExpr::new(&self.curve, terms).unwrap()
    }

    pub fn evaluate(&self, pt: &Point) -> Result<Point> {
        let mut acc = self.curve.infinity();
        for (c, chain) in &self.terms {
            if *c == 0 {
                continue;
            }
            let img = chain.evaluate(pt)?.mul_i128(*c)?;
            acc = acc.add(&img)?;
        }
        Ok(acc)
    }

    /// Whether the endomorphism acts as a scalar on E[m].
    pub fn is_scalar_on(&self, m: u128) -> Result<bool> {
        let basis = self.curve.torsion_basis(m)?;
        let mat = self.matrix_on_basis(&basis)?;
        Ok(mat[0][1] == 0 && mat[1][0] == 0 && mat[0][0] == mat[1][1])
    }

    /// Matrix of the endomorphism on a torsion basis, entries mod basis.m,
    /// column convention: f(P) = a11 P + a21 Q.
    pub fn matrix_on_basis(&self, basis: &TorsionBasis) -> Result<[[i128; 2]; 2]> {
        let fp = self.evaluate(&basis.p_point)?;
        let fq = self.evaluate(&basis.q_point)?;
        let (a11, a21) = dlog2(basis, &fp)?;
        let (a12, a22) = dlog2(basis, &fq)?;
        Ok([[a11 as i128, a12 as i128], [a21 as i128, a22 as i128]])
    }

    /// Degree (norm) via determinants of torsion matrices + CRT.
    pub fn degree(&self) -> Result<u128> {
        if let Some(d) = self.deg_cache.get() {
            return Ok(*d);
        }
        // bound: (sum_i |c_i| ceil(sqrt(deg chain_i)))^2
        let mut sum: u128 = 0;
        for (c, ch) in &self.terms {
            let s = arith::isqrt_u128(ch.degree());
            let s = if s * s == ch.degree() { s } else { s + 1 };
            sum += c.unsigned_abs() * s;
        }
        let bound = sum * sum;
        let (r, _) = self.crt_residues(bound + 1, None, |mat, m| {
            (mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]).rem_euclid(m as i128) as u128
        })?;
        let _ = self.deg_cache.set(r);
        Ok(r)
    }

    /// Trace: the unique t with |t| <= 2 sqrt(deg f) and f^2 - t f + deg = 0,
    /// from matrix traces mod coprime levels with product > 4 sqrt(deg).
    pub fn trace(&self) -> Result<i128> {
        if let Some(t) = self.tr_cache.get() {
            return Ok(*t);
        }
        let deg = self.degree()?;
        let s = arith::isqrt_u128(deg);
        let s = if s * s == deg { s } else { s + 1 };
        let bound = 4 * s + 1;
        let (res, modulus) = self.crt_residues(bound, Some(deg), |mat, m| {
            (mat[0][0] + mat[1][1]).rem_euclid(m as i128) as u128
        })?;
        let t = arith::centered_lift(res as i128, modulus as i128);
        let _ = self.tr_cache.set(t);
        Ok(t)
    }

    /// Collect a matrix invariant mod coprime prime levels until their
    /// product exceeds the target; returns (value mod M, M).
    fn crt_residues(
        &self,
        exceed: u128,
        avoid_deg: Option<u128>,
        extract: impl Fn(&[[i128; 2]; 2], u128) -> u128,
    ) -> Result<(u128, u128)> {
        let p = self.curve.tower().p() as u128;
        let mut residues: Vec<(i128, i128)> = Vec::new();
        let mut modulus: u128 = 1;
        let mut skipped = 0u32;
        for q in arith::primes() {
            let q = q as u128;
            if modulus > exceed {
                break;
            }
            if q == p || avoid_deg.map(|d| d % q == 0) == Some(true) {
                continue;
            }
            let basis = match self.curve.torsion_basis(q) {
                Ok(b) => b,
                Err(Error::TorsionUnreachable { .. }) => {
                    skipped += 1;
                    if skipped > 24 {
                        return Err(Error::TorsionUnreachable {
                            m: q,
                            cap: self.curve.tower().config().ext_cap,
                        });
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            let mat = self.matrix_on_basis(&basis)?;
            residues.push((extract(&mat, q) as i128, q as i128));
            modulus *= q;
        }
        let (r, m) = arith::crt(&residues)?;
        Ok((r as u128, m as u128))
    }
}

/// Two-dimensional discrete log: coordinates (a, b) of r = aP + bQ in the
/// torsion basis, via Weil pairings and Pohlig-Hellman.
pub fn dlog2(basis: &TorsionBasis, r: &Point) -> Result<(u128, u128)> {
    let m = basis.m;
    if r.is_infinity() {
        return Ok((0, 0));
    }
    let zeta = weil_pairing(&basis.p_point, &basis.q_point, m)?;
    let u = weil_pairing(r, &basis.q_point, m)?; // = zeta^a
    let v = weil_pairing(r, &basis.p_point, m)?; // = zeta^{-b}
    let factors = arith::factor(m)?;
    let tower = r.curve.tower();
    let k = [zeta.ctx.k, u.ctx.k, v.ctx.k].into_iter().fold(1, num_integer::lcm);
    let zeta = tower.embed(&zeta, k)?;
    let u = tower.embed(&u, k)?;
    let v = tower.embed(&v, k)?;
    let a = fe_dlog(&zeta, &u, m, &factors).ok_or(Error::OrderMismatch)?;
    let nb = fe_dlog(&zeta, &v, m, &factors).ok_or(Error::OrderMismatch)?;
    let b = (m - nb) % m;
    Ok((a, b))
}

/// Pohlig-Hellman discrete log base zeta (exact order m, factored).
pub fn fe_dlog(zeta: &Fe, target: &Fe, m: u128, factors: &[(u128, u32)]) -> Option<u128> {
    let one = Fe::one(&zeta.ctx);
    let mut residues: Vec<(i128, i128)> = Vec::new();
    for &(ell, e) in factors {
        let q = ell.pow(e);
        let cof = m / q;
        let z = zeta.pow_u64(cof as u64);
        let t = target.pow_u64(cof as u64);
        let mut gamma = z.clone();
        for _ in 0..e - 1 {
            gamma = gamma.pow_u64(ell as u64);
        }
        let mut x: u128 = 0;
        for j in 0..e {
            // h = (t z^{-x})^{ell^{e-1-j}} = gamma^{digit}
            let zx_inv = z.pow_u64((q - x % q) as u64);
            let mut h = t.mul(&zx_inv);
            for _ in 0..(e - 1 - j) {
                h = h.pow_u64(ell as u64);
            }
            let mut digit = None;
            let mut acc = one.clone();
            for c in 0..ell {
                if acc == h {
                    digit = Some(c);
                    break;
                }
                acc = acc.mul(&gamma);
            }
            x += digit? * ell.pow(j);
        }
        residues.push((x as i128, q as i128));
    }
    let (r, _) = arith::crt(&residues).ok()?;
    Some(r as u128)
}

/// Generators of the kernel of a 2x2 integer matrix acting on (Z/q)^2,
/// as coordinate vectors with their orders.
pub(crate) fn matrix_kernel_mod(mat: &[[i128; 2]; 2], q: u128) -> Vec<((i128, i128), u128)> {
    // Smith-style reduction. Row operations preserve the kernel; column
    // operations M -> M E mean kernel vectors are E w for kernel vectors w
    // of the reduced matrix.
    let mut m = [[mat[0][0], mat[0][1]], [mat[1][0], mat[1][1]]];
    let mut e = [[1i128, 0i128], [0, 1]];
    fn col_swap(m: &mut [[i128; 2]; 2], e: &mut [[i128; 2]; 2]) {
        for r in m.iter_mut() {
            r.swap(0, 1);
        }
        for r in e.iter_mut() {
            r.swap(0, 1);
        }
    }
    fn col_addmul(m: &mut [[i128; 2]; 2], e: &mut [[i128; 2]; 2], f: i128) {
        for r in m.iter_mut() {
            r[1] += f * r[0];
        }
        for r in e.iter_mut() {
            r[1] += f * r[0];
        }
    }
    let mut guard = 0;
    loop {
        guard += 1;
        assert!(guard < 512, "matrix reduction did not converge");
        if m[0][0] == 0 {
            if m[0][1] != 0 {
                col_swap(&mut m, &mut e);
                continue;
            }
            if m[1][0] != 0 {
                m.swap(0, 1);
                continue;
            }
            if m[1][1] != 0 {
                col_swap(&mut m, &mut e);
                m.swap(0, 1);
                continue;
            }
            break;
        }
        if m[0][1] % m[0][0] != 0 {
            let f = -(m[0][1] / m[0][0]);
            col_addmul(&mut m, &mut e, f);
            col_swap(&mut m, &mut e);
            continue;
        }
        let f = -(m[0][1] / m[0][0]);
        col_addmul(&mut m, &mut e, f);
        if m[1][0] % m[0][0] != 0 {
            let f = -(m[1][0] / m[0][0]);
            m[1][0] += f * m[0][0];
            m[1][1] += f * m[0][1];
            m.swap(0, 1);
            continue;
        }
        let f = -(m[1][0] / m[0][0]);
        m[1][0] += f * m[0][0];
        m[1][1] += f * m[0][1];
        break;
    }
    let qi = q as i128;
    let mut out = Vec::new();
    for (idx, d) in [(0usize, m[0][0].unsigned_abs()), (1usize, m[1][1].unsigned_abs())] {
        let g = arith::gcd_u128(d % q, q);
        if g <= 1 {
            continue;
        }
        let scale = (q / g) as i128;
        let w = if idx == 0 { (scale, 0) } else { (0, scale) };
        let v = (
            (e[0][0] * w.0 + e[0][1] * w.1).rem_euclid(qi),
            (e[1][0] * w.0 + e[1][1] * w.1).rem_euclid(qi),
        );
        out.push((v, g));
    }
    out
}

/// Description of a finite kernel subgroup by generators.
#[derive(Clone, Debug)]
pub struct KernelDescription {
    pub generators: Vec<(Point, u128)>,
    pub order: u128,
}

/// Either representation of an isogeny: a chain between two curves or an
/// endomorphism expression.
#[derive(Clone, Debug)]
pub enum IsogenyRep {
    Chain(IsogenyChain),
    Expr(IsogenyExpr),
}

impl From<IsogenyChain> for IsogenyRep {
    fn from(c: IsogenyChain) -> Self {
        IsogenyRep::Chain(c)
    }
}
impl From<IsogenyExpr> for IsogenyRep {
    fn from(e: IsogenyExpr) -> Self {
        IsogenyRep::Expr(e)
    }
}

impl IsogenyRep {
    pub fn domain(&self) -> &Curve {
        match self {
            IsogenyRep::Chain(c) => &c.domain,
            IsogenyRep::Expr(e) => &e.curve,
        }
    }

    pub fn codomain(&self) -> &Curve {
        match self {
            IsogenyRep::Chain(c) => &c.codomain,
            IsogenyRep::Expr(e) => &e.curve,
        }
    }

    pub fn degree(&self) -> Result<u128> {
        match self {
            IsogenyRep::Chain(c) => Ok(c.degree()),
            IsogenyRep::Expr(e) => e.degree(),
        }
    }

    pub fn evaluate(&self, pt: &Point) -> Result<Point> {
        match self {
            IsogenyRep::Chain(c) => c.evaluate(pt),
            IsogenyRep::Expr(e) => e.evaluate(pt),
        }
    }
}

/// Kernel of a separable smooth-degree isogeny (chain or expression), via
/// torsion bases and two-dimensional discrete logs, prime by prime.
pub fn kernel_of(f: &IsogenyRep, bound: u128) -> Result<KernelDescription> {
    let deg = f.degree()?;
    let domain = f.domain().clone();
    let codomain = f.codomain().clone();
    if deg > bound {
        return Err(Error::InputTooLarge(format!("kernel_of degree {deg} over bound {bound}")));
    }
    let prime_cap = domain.tower().config().prime_cap as u128;
    let factors = arith::factor(deg)?;
    if let Some((ell, _)) = factors.iter().find(|(ell, _)| *ell > prime_cap) {
        return Err(Error::NotSmooth(*ell));
    }
    if deg % domain.tower().p() as u128 == 0 {
        return Err(Error::InseparableUnsupported);
    }
    let mut generators = Vec::new();
    let mut order: u128 = 1;
    for &(ell, e) in &factors {
        let q = ell.pow(e);
        let basis = domain.torsion_basis(q)?;
        let cod_basis = codomain.torsion_basis(q)?;
        let fp = f.evaluate(&basis.p_point)?;
        let fq = f.evaluate(&basis.q_point)?;
        let (a11, a21) = dlog2(&cod_basis, &fp)?;
        let (a12, a22) = dlog2(&cod_basis, &fq)?;
        let mat = [[a11 as i128, a12 as i128], [a21 as i128, a22 as i128]];
        let kernel = matrix_kernel_mod(&mat, q);
        let mut part: u128 = 1;
        for ((c1, c2), ord) in kernel {
            let pt = basis.p_point.mul_i128(c1)?.add(&basis.q_point.mul_i128(c2)?)?;
            debug_assert!(f.evaluate(&pt)?.is_infinity(), "kernel vector must die");
            part *= ord;
            generators.push((pt.descend_min()?, ord));
        }
        if part != ell.pow(arith::valuation(deg, ell)) {
            return Err(Error::InvalidInput(
                "kernel size mismatch: map is not separable of the stated degree".into(),
            ));
        }
        order *= part;
    }
    Ok(KernelDescription { generators, order })
}

/// Rebuild a separable isogeny as a fresh Velu chain from a kernel subgroup.
pub fn chain_from_subgroup(e: &Curve, gens: &[(Point, u128)]) -> Result<IsogenyChain> {
    let mut chain = IsogenyChain::identity(e);
    let mut work: Vec<(Point, u128)> = gens.to_vec();
    loop {
        let mut ell: Option<u128> = None;
        for (_, ord) in &work {
            if *ord > 1 {
                let small = arith::factor(*ord)?[0].0;
                ell = Some(ell.map_or(small, |cur: u128| cur.min(small)));
            }
        }
        let Some(ell) = ell else { break };
        let (idx, _) = work
            .iter()
            .enumerate()
            .find(|(_, (_, ord))| ord % ell == 0)
            .expect("some generator carries the prime");
        let (g, ord) = work[idx].clone();
        let t = g.mul_i128((ord / ell) as i128)?;
        let (_, step) = velu_step(&chain.codomain, &t.descend_min()?, ell as u64)?;
        let mut next: Vec<(Point, u128)> = Vec::new();
        for (gp, go) in work {
            let img = step.evaluate(&gp)?;
            let mut o = go;
            for (q, _) in arith::factor(go)? {
                while o % q == 0 && img.mul_i128((o / q) as i128)?.is_infinity() {
                    o /= q;
                }
            }
            if o > 1 {
                next.push((img, o));
            }
        }
        work = next;
        chain = chain.then(&step)?;
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Config, Tower};

    fn tower31() -> Tower {
        Tower::new(31, Config::default())
    }

    fn e1728(t: &Tower) -> Curve {
        Curve::canonical_model(t, &Fe::from_u64(&t.base(), 1728)).unwrap()
    }

    /// The automorphism (x, y) -> (-x, iy) on y^2 = x^3 + x, as a chain.
    pub(crate) fn iota_chain(e: &Curve) -> IsogenyChain {
        let t = e.tower();
        let auts = crate::curve::automorphisms(e).unwrap();
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
            .expect("iota exists at j = 1728");
        IsogenyChain::from_isomorphism(found)
    }

    #[test]
    fn identity_and_scalar_evaluation() {
        let t = tower31();
        let e = e1728(&t);
        let id = IsogenyChain::identity(&e);
        for p in e.sample_points(1, 5).unwrap() {
            assert_eq!(id.evaluate(&p).unwrap(), p);
        }
        let b = e.torsion_basis(4).unwrap();
        let s4 = IsogenyChain::scalar(&e, 4);
        assert!(s4.evaluate(&b.p_point).unwrap().is_infinity());
        assert_eq!(s4.degree(), 16);
    }

    #[test]
    fn velu_dual_composition_is_multiplication() {
        let t = tower31();
        let e = e1728(&t);
        for ell in [2u64, 3, 5, 7] {
            let basis = e.torsion_basis(ell as u128).unwrap();
            let (_, phi) = velu_step(&e, &basis.p_point, ell).unwrap();
            let dual = phi.dual().unwrap();
            let comp = phi.then(&dual).unwrap();
            assert_eq!(comp.degree(), (ell * ell) as u128);
            for p in e.sample_points(1, 8).unwrap() {
                assert_eq!(
                    comp.evaluate(&p).unwrap(),
                    p.mul_i128(ell as i128).unwrap(),
                    "dual o phi = [{ell}]"
                );
            }
            assert!(phi.evaluate(&basis.p_point).unwrap().is_infinity());
        }
    }

    #[test]
    fn dual_roundtrips_over_extensions() {
        let t = tower31();
        let e = e1728(&t);
        let basis = e.torsion_basis(3).unwrap();
        let (_, phi) = velu_step(&e, &basis.p_point, 3).unwrap();
        let comp = phi.then(&phi.dual().unwrap()).unwrap();
        // points over a couple of extension degrees
        for d in [2u32, 3] {
            for p in e.sample_points(d, 4).unwrap() {
                assert_eq!(comp.evaluate(&p).unwrap(), p.mul_i128(3).unwrap());
            }
        }
    }

    #[test]
    fn dual_of_dual_matches_up_to_automorphism() {
        let t = tower31();
        let e = e1728(&t);
        let basis = e.torsion_basis(3).unwrap();
        let (_, phi) = velu_step(&e, &basis.p_point, 3).unwrap();
        let dd = phi.dual().unwrap().dual().unwrap();
        assert_eq!(dd.domain, phi.domain);
        assert_eq!(dd.codomain, phi.codomain);
        let auts = crate::curve::automorphisms(&phi.codomain).unwrap();
        let pts = e.sample_points(1, 6).unwrap();
        let ok = auts.iter().any(|u| {
            pts.iter()
                .all(|p| u.apply(&phi.evaluate(p).unwrap()).unwrap() == dd.evaluate(p).unwrap())
        });
        assert!(ok, "dual(dual(f)) = f up to isomorphism normalization");
    }

    #[test]
    fn chain_homomorphism_property() {
        let t = tower31();
        let e = e1728(&t);
        let b3 = e.torsion_basis(3).unwrap();
        let (_, phi) = velu_step(&e, &b3.p_point, 3).unwrap();
        let pts = e.sample_points(1, 10).unwrap();
        for pair in pts.chunks(2) {
            if let [p, q] = pair {
                assert_eq!(
                    phi.evaluate(&p.add(q).unwrap()).unwrap(),
                    phi.evaluate(p).unwrap().add(&phi.evaluate(q).unwrap()).unwrap()
                );
            }
        }
    }

    #[test]
    fn scalar_and_iota_traces() {
        let t = tower31();
        let e = e1728(&t);
        let f = IsogenyExpr::from_chain(IsogenyChain::scalar(&e, 3)).unwrap();
        assert_eq!(f.degree().unwrap(), 9);
        assert_eq!(f.trace().unwrap(), 6);
        let iota = IsogenyExpr::from_chain(iota_chain(&e)).unwrap();
        assert_eq!(iota.degree().unwrap(), 1);
        assert_eq!(iota.trace().unwrap(), 0);
        let onepi =
            IsogenyExpr::new(&e, vec![(1, IsogenyChain::identity(&e)), (1, iota_chain(&e))])
                .unwrap();
        assert_eq!(onepi.degree().unwrap(), 2);
        assert_eq!(onepi.trace().unwrap(), 2);
    }

    #[test]
    fn norm_form_of_linear_combinations() {
        let t = tower31();
        let e = e1728(&t);
        let iota = IsogenyExpr::from_chain(iota_chain(&e)).unwrap();
        // deg(a iota + b) = a^2 deg iota + ab tr iota + b^2 = a^2 + b^2
        for (a, b) in [(2i128, 1i128), (3, 2), (1, 4), (5, 0)] {
            let f = iota.scale_add(a, b);
            assert_eq!(f.degree().unwrap() as i128, a * a + b * b, "a={a} b={b}");
            assert_eq!(f.trace().unwrap(), 2 * b);
        }
    }

    #[test]
    fn trace_consistency_on_torsion() {
        let t = tower31();
        let e = e1728(&t);
        let iota = IsogenyExpr::from_chain(iota_chain(&e)).unwrap();
        let f = iota.scale_add(2, 1);
        let (tr, dg) = (f.trace().unwrap(), f.degree().unwrap());
        assert_eq!((tr, dg), (2, 5));
        let basis = e.torsion_basis(8).unwrap();
        for pt in [&basis.p_point, &basis.q_point] {
            let f1 = f.evaluate(pt).unwrap();
            let f2 = f.evaluate(&f1).unwrap();
            let val = f2
                .sub(&f1.mul_i128(tr).unwrap())
                .unwrap()
                .add(&pt.mul_i128(dg as i128).unwrap())
                .unwrap();
            assert!(val.is_infinity(), "f^2 - t f + deg = 0 on E[8]");
        }
    }

    #[test]
    fn kernel_of_scalar_velu_and_one_plus_iota() {
        let t = tower31();
        let e = e1728(&t);
        let f = IsogenyExpr::from_chain(IsogenyChain::scalar(&e, 2)).unwrap();
        let k = kernel_of(&f.clone().into(), 1 << 20).unwrap();
        assert_eq!(k.order, 4);
        // velu round trip: [3] = dual o phi has kernel of order 9
        let b3 = e.torsion_basis(3).unwrap();
        let (_, phi) = velu_step(&e, &b3.p_point, 3).unwrap();
        let endo = phi.then(&phi.dual().unwrap()).unwrap();
        let f3 = IsogenyExpr::from_chain(endo).unwrap();
        assert_eq!(kernel_of(&f3.into(), 1 << 20).unwrap().order, 9);
        // kernel of 1 + iota: order 2, generated by (0, 0)
        let onepi =
            IsogenyExpr::new(&e, vec![(1, IsogenyChain::identity(&e)), (1, iota_chain(&e))])
                .unwrap();
        let k2 = kernel_of(&onepi.into(), 100).unwrap();
        assert_eq!(k2.order, 2);
        let (g, ord) = &k2.generators[0];
        assert_eq!(*ord, 2);
        assert!(g.xy.as_ref().unwrap().0.is_zero(), "fixed 2-torsion point is (0,0)");
    }

    #[test]
    fn kernel_subgroup_enumerates_to_separable_degree() {
        let t = tower31();
        let e = e1728(&t);
        let b3 = e.torsion_basis(3).unwrap();
        let (_, phi) = velu_step(&e, &b3.p_point, 3).unwrap();
        let b5 = phi.codomain.torsion_basis(5).unwrap();
        let (_, psi) = velu_step(&phi.codomain, &b5.p_point, 5).unwrap();
        let chain = phi.then(&psi).unwrap();
        let endo = chain.then(&chain.dual().unwrap()).unwrap();
        let f = IsogenyExpr::from_chain(endo).unwrap();
        assert_eq!(f.degree().unwrap(), 225);
        let k = kernel_of(&f.clone().into(), 1 << 20).unwrap();
        assert_eq!(k.order, 225);
        let mut seen = std::collections::HashSet::new();
        let mut frontier = vec![e.infinity()];
        seen.insert(e.infinity().bytes());
        while let Some(pt) = frontier.pop() {
            for (g, _) in &k.generators {
                let nxt = pt.add(g).unwrap();
                if seen.insert(nxt.bytes()) {
                    frontier.push(nxt);
                }
            }
        }
        assert_eq!(seen.len(), 225);
    }

    #[test]
    fn chain_from_subgroup_roundtrip() {
        let t = tower31();
        let e = e1728(&t);
        let f = IsogenyExpr::from_chain(IsogenyChain::scalar(&e, 6)).unwrap();
        let k = kernel_of(&f.into(), 1 << 20).unwrap();
        assert_eq!(k.order, 36);
        let chain = chain_from_subgroup(&e, &k.generators).unwrap();
        assert_eq!(chain.degree(), 36);
        for (g, _) in &k.generators {
            assert!(chain.evaluate(g).unwrap().is_infinity());
        }
    }

    #[test]
    fn associativity_under_evaluation() {
        let t = tower31();
        let e = e1728(&t);
        let b2 = e.torsion_basis(2).unwrap();
        let (_, f) = velu_step(&e, &b2.p_point, 2).unwrap();
        let b3 = f.codomain.torsion_basis(3).unwrap();
        let (_, g) = velu_step(&f.codomain, &b3.p_point, 3).unwrap();
        let b5 = g.codomain.torsion_basis(5).unwrap();
        let (_, h) = velu_step(&g.codomain, &b5.p_point, 5).unwrap();
        let left = f.then(&g).unwrap().then(&h).unwrap();
        let right = f.then(&g.then(&h).unwrap()).unwrap();
        for p in e.sample_points(1, 6).unwrap() {
            assert_eq!(left.evaluate(&p).unwrap(), right.evaluate(&p).unwrap());
        }
    }

    #[test]
    fn velu_step_rejects_bad_kernels() {
        let t = tower31();
        let e = e1728(&t);
        assert!(matches!(
            velu_step(&e, &e.infinity(), 2),
            Err(Error::BadKernelOrder)
        ));
        let b3 = e.torsion_basis(3).unwrap();
        assert!(matches!(
            velu_step(&e, &b3.p_point, 5),
            Err(Error::BadKernelOrder)
        ));
    }
}
