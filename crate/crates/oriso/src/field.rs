//! Finite field towers F_{p^k} with deterministic moduli and compatible
//! subfield embeddings.
//!
//! Every field of degree k over F_p is F_p[x]/(f_k) where f_k is the
//! lexicographically smallest monic irreducible of degree k (coefficient
//! vectors compared constant term first). Embeddings F_{p^a} -> F_{p^b} are
//! memoized per (a, b) pair and chosen so that the triangle over F_{p^2}
//! commutes: curve coefficients, which always live in F_{p^2}, map to the
//! same elements no matter which working extension an operation picks.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;

use crate::{Error, Result};

/// Desk-scale knobs shared by the whole pipeline.
#[derive(Clone, Debug)]
pub struct Config {
    /// Points may live over F_{p^{2d}} with d up to this cap.
    pub ext_cap: u32,
    /// Isogeny degrees handled by kernel extraction must factor over primes
    /// up to this bound.
    pub prime_cap: u64,
    /// Class-group enumeration cap on |disc|.
    pub disc_cap: i128,
    /// Integer factorization cap.
    pub factor_cap: u128,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            ext_cap: 24,
            prime_cap: 64,
            disc_cap: 1_000_000,
            factor_cap: crate::arith::FACTOR_CAP,
        }
    }
}

// ---- dense polynomials over F_p (u64 coefficients), used for modulus search

fn ptrim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn pmulmod_p(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = ((out[i + j] as u128 + ai as u128 * bj as u128) % p as u128) as u64;
        }
    }
    ptrim(&mut out);
    out
}

fn prem_p(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    // m monic
    let mut r = a.to_vec();
    ptrim(&mut r);
    let dm = m.len() - 1;
    while r.len() > dm {
        let c = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if c != 0 {
            for (i, &mi) in m.iter().enumerate() {
                let idx = i + shift;
                let sub = (c as u128 * mi as u128) % p as u128;
                r[idx] = ((r[idx] as u128 + p as u128 * p as u128 - sub) % p as u128) as u64;
            }
        }
        r.pop();
        ptrim(&mut r);
    }
    r
}

fn pgcd_p(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    ptrim(&mut a);
    ptrim(&mut b);
    while !b.is_empty() {
        // make b monic before reducing
        let lead = *b.last().unwrap();
        if lead != 1 {
            let inv = crate::arith::inv_mod(lead as i128, p as i128).unwrap() as u64;
            for c in b.iter_mut() {
                *c = ((*c as u128 * inv as u128) % p as u128) as u64;
            }
        }
        let r = prem_p(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

fn ppow_x_mod(e: &BigUint, m: &[u64], p: u64) -> Vec<u64> {
    // x^e mod m by square and multiply over the bits of e
    let mut acc = vec![1u64];
    let x = vec![0u64, 1];
    for bit in (0..e.bits()).rev() {
        acc = prem_p(&pmulmod_p(&acc, &acc, p), m, p);
        if e.bit(bit) {
            acc = prem_p(&pmulmod_p(&acc, &x, p), m, p);
        }
    }
    acc
}

fn is_irreducible_p(f: &[u64], p: u64) -> bool {
    let k = (f.len() - 1) as u32;
    if k == 0 {
        return false;
    }
    if k == 1 {
        return true;
    }
    let pb = BigUint::from(p);
    // x^(p^k) == x mod f
    let xq = ppow_x_mod(&pb.pow(k), f, p);
    let mut diff = xq.clone();
    if diff.len() < 2 {
        diff.resize(2, 0);
    }
    diff[1] = (diff[1] + p - 1) % p;
    ptrim(&mut diff);
    if !diff.is_empty() {
        return false;
    }
    // gcd(x^(p^(k/t)) - x, f) trivial for each prime t | k
    let mut t = 2;
    let mut rest = k;
    let mut primes_of_k = vec![];
    while rest > 1 {
        if rest % t == 0 {
            primes_of_k.push(t);
            while rest % t == 0 {
                rest /= t;
            }
        }
        t += 1;
    }
    for t in primes_of_k {
        let mut g = ppow_x_mod(&pb.pow(k / t), f, p);
        if g.len() < 2 {
            g.resize(2, 0);
        }
        g[1] = (g[1] + p - 1) % p;
        ptrim(&mut g);
        let d = pgcd_p(&g, f, p);
        if d.len() != 1 {
            return false;
        }
    }
    true
}

/// Lexicographically smallest monic irreducible of degree k over F_p,
/// scanning coefficient vectors (c0, ..., c_{k-1}) constant term first.
fn smallest_irreducible(p: u64, k: u32) -> Vec<u64> {
    if k == 1 {
        return vec![0, 1]; // x
    }
    // constant term 0 means x divides f, so the scan starts at (1, 0, .., 0)
    let mut c = vec![0u64; k as usize];
    c[0] = 1;
    loop {
        let mut f = c.clone();
        f.push(1);
        if is_irreducible_p(&f, p) {
            return f;
        }
        // odometer: last coordinate fastest keeps lex order ascending
        let mut i = k as usize;
        loop {
            if i == 0 {
                unreachable!("irreducibles of every degree exist");
            }
            i -= 1;
            c[i] += 1;
            if c[i] < p {
                break;
            }
            c[i] = 0;
        }
    }
}

/// One finite field F_{p^k} in the tower.
pub struct FieldCtx {
    pub p: u64,
    pub k: u32,
    /// Monic modulus, length k+1.
    pub modulus: Vec<u64>,
    pub q: BigUint,
    half: BigUint, // (q-1)/2
    nonresidue: Mutex<Option<Vec<u64>>>,
}

impl FieldCtx {
    fn new(p: u64, k: u32) -> Self {
        let modulus = smallest_irreducible(p, k);
        let q = BigUint::from(p).pow(k);
        let half = (&q - 1u32) >> 1;
        FieldCtx { p, k, modulus, q, half, nonresidue: Mutex::new(None) }
    }

    pub fn is_modulus_irreducible(&self) -> bool {
        is_irreducible_p(&self.modulus, self.p)
    }
}

impl std::fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "F_{}^{}", self.p, self.k)
    }
}

/// Element of F_{p^k}: k residues mod p, constant term first.
#[derive(Clone)]
pub struct Fe {
    pub ctx: Arc<FieldCtx>,
    pub c: Vec<u64>,
}

impl std::fmt::Debug for Fe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}@F_{}^{}", self.c, self.ctx.p, self.ctx.k)
    }
}

impl PartialEq for Fe {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.p == other.ctx.p && self.ctx.k == other.ctx.k && self.c == other.c
    }
}
impl Eq for Fe {}

impl Fe {
    fn assert_same(&self, other: &Fe) {
        debug_assert!(
            self.ctx.p == other.ctx.p && self.ctx.k == other.ctx.k,
            "mixed field contexts: {:?} vs {:?}",
            self.ctx,
            other.ctx
        );
    }

    pub fn zero(ctx: &Arc<FieldCtx>) -> Fe {
        Fe { ctx: ctx.clone(), c: vec![0; ctx.k as usize] }
    }

    pub fn one(ctx: &Arc<FieldCtx>) -> Fe {
        Fe::from_u64(ctx, 1)
    }

    pub fn from_u64(ctx: &Arc<FieldCtx>, v: u64) -> Fe {
        let mut c = vec![0; ctx.k as usize];
        c[0] = v % ctx.p;
        Fe { ctx: ctx.clone(), c }
    }

    pub fn from_i128(ctx: &Arc<FieldCtx>, v: i128) -> Fe {
        Fe::from_u64(ctx, v.rem_euclid(ctx.p as i128) as u64)
    }

    /// Deterministic enumeration: index -> coefficient vector, monotone with
    /// respect to the lex order (constant term most significant).
    pub fn from_index(ctx: &Arc<FieldCtx>, mut idx: u128) -> Fe {
        let k = ctx.k as usize;
        let mut c = vec![0u64; k];
        for i in (0..k).rev() {
            c[i] = (idx % ctx.p as u128) as u64;
            idx /= ctx.p as u128;
        }
        Fe { ctx: ctx.clone(), c }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0)
    }

    pub fn lex_cmp(&self, other: &Fe) -> std::cmp::Ordering {
        self.assert_same(other);
        self.c.cmp(&other.c)
    }

    pub fn add(&self, other: &Fe) -> Fe {
        self.assert_same(other);
        let p = self.ctx.p;
        let c = self
            .c
            .iter()
            .zip(&other.c)
            .map(|(&a, &b)| (a + b) % p)
            .collect();
        Fe { ctx: self.ctx.clone(), c }
    }

    pub fn sub(&self, other: &Fe) -> Fe {
        self.assert_same(other);
        let p = self.ctx.p;
        let c = self
            .c
            .iter()
            .zip(&other.c)
            .map(|(&a, &b)| (a + p - b) % p)
            .collect();
        Fe { ctx: self.ctx.clone(), c }
    }

    pub fn neg(&self) -> Fe {
        let p = self.ctx.p;
        let c = self.c.iter().map(|&a| (p - a) % p).collect();
        Fe { ctx: self.ctx.clone(), c }
    }

    pub fn mul(&self, other: &Fe) -> Fe {
        self.assert_same(other);
        let p = self.ctx.p;
        let prod = pmulmod_p(&self.c, &other.c, p);
        let mut r = prem_p(&prod, &self.ctx.modulus, p);
        r.resize(self.ctx.k as usize, 0);
        Fe { ctx: self.ctx.clone(), c: r }
    }

    pub fn square(&self) -> Fe {
        self.mul(self)
    }

    pub fn mul_u64(&self, v: u64) -> Fe {
        let p = self.ctx.p;
        let v = v % p;
        let c = self
            .c
            .iter()
            .map(|&a| ((a as u128 * v as u128) % p as u128) as u64)
            .collect();
        Fe { ctx: self.ctx.clone(), c }
    }

    pub fn mul_i128(&self, v: i128) -> Fe {
        self.mul_u64(v.rem_euclid(self.ctx.p as i128) as u64)
    }

    pub fn inv(&self) -> Option<Fe> {
        if self.is_zero() {
            return None;
        }
        // extended Euclid over F_p[x]
        let p = self.ctx.p;
        let mut r0: Vec<u64> = self.ctx.modulus.clone();
        let mut r1: Vec<u64> = self.c.clone();
        ptrim(&mut r1);
        let mut s0: Vec<u64> = vec![];
        let mut s1: Vec<u64> = vec![1];
        while !r1.is_empty() {
            // divide r0 by r1
            let lead = *r1.last().unwrap();
            let lead_inv = crate::arith::inv_mod(lead as i128, p as i128).unwrap() as u64;
            let mut q = vec![0u64; r0.len().saturating_sub(r1.len()) + 1];
            let mut rem = r0.clone();
            while rem.len() >= r1.len() && !rem.is_empty() {
                let c = ((*rem.last().unwrap() as u128 * lead_inv as u128) % p as u128) as u64;
                let shift = rem.len() - r1.len();
                q[shift] = c;
                if c != 0 {
                    for (i, &mi) in r1.iter().enumerate() {
                        let idx = i + shift;
                        let sub = (c as u128 * mi as u128) % p as u128;
                        rem[idx] =
                            ((rem[idx] as u128 + p as u128 * p as u128 - sub) % p as u128) as u64;
                    }
                }
                rem.pop();
                ptrim(&mut rem);
            }
            ptrim(&mut q);
            // (r0, r1) = (r1, rem); (s0, s1) = (s1, s0 - q*s1)
            let qs1 = pmulmod_p(&q, &s1, p);
            let mut s2 = s0.clone();
            s2.resize(s2.len().max(qs1.len()), 0);
            for (i, &v) in qs1.iter().enumerate() {
                s2[i] = (s2[i] + p - v % p) % p;
            }
            ptrim(&mut s2);
            r0 = r1;
            r1 = rem;
            s0 = s1;
            s1 = s2;
        }
        // r0 = gcd (degree 0 since modulus irreducible); s0 * self = r0 mod modulus
        debug_assert_eq!(r0.len(), 1);
        let g_inv = crate::arith::inv_mod(r0[0] as i128, p as i128).unwrap() as u64;
        let mut out = s0;
        for c in out.iter_mut() {
            *c = ((*c as u128 * g_inv as u128) % p as u128) as u64;
        }
        let mut out = prem_p(&out, &self.ctx.modulus, p);
        out.resize(self.ctx.k as usize, 0);
        Some(Fe { ctx: self.ctx.clone(), c: out })
    }

    pub fn div(&self, other: &Fe) -> Option<Fe> {
        other.inv().map(|i| self.mul(&i))
    }

    pub fn pow(&self, e: &BigUint) -> Fe {
        let mut acc = Fe::one(&self.ctx);
        for bit in (0..e.bits()).rev() {
            acc = acc.square();
            if e.bit(bit) {
                acc = acc.mul(self);
            }
        }
        acc
    }

    pub fn pow_u64(&self, e: u64) -> Fe {
        self.pow(&BigUint::from(e))
    }

    pub fn is_square(&self) -> bool {
        if self.is_zero() {
            return true;
        }
        self.pow(&self.ctx.half.clone()) == Fe::one(&self.ctx)
    }

    /// Canonical square root: the lex-smaller of the two roots of a nonzero
    /// square; 0 for 0; None for non-squares.
    pub fn sqrt(&self) -> Option<Fe> {
        if self.is_zero() {
            return Some(self.clone());
        }
        if !self.is_square() {
            return None;
        }
        let one = Fe::one(&self.ctx);
        let q1 = &self.ctx.q - 1u32;
        let s = q1.trailing_zeros().unwrap_or(0);
        let t: BigUint = &q1 >> s;
        let r = if s == 1 {
            // q = 3 mod 4
            self.pow(&((&self.ctx.q + 1u32) >> 2))
        } else {
            // Tonelli-Shanks
            let z = self.nonresidue_elem();
            let mut m = s;
            let mut c = z.pow(&t);
            let mut tv = self.pow(&t);
            let mut r = self.pow(&((&t + 1u32) >> 1));
            loop {
                if tv == one {
                    break r;
                }
                let mut i = 0u64;
                let mut probe = tv.clone();
                while probe != one {
                    probe = probe.square();
                    i += 1;
                }
                let mut b = c.clone();
                for _ in 0..(m - i - 1) {
                    b = b.square();
                }
                m = i;
                c = b.square();
                tv = tv.mul(&c);
                r = r.mul(&b);
            }
        };
        debug_assert_eq!(r.square(), *self);
        let rn = r.neg();
        Some(if r.lex_cmp(&rn) == std::cmp::Ordering::Greater { rn } else { r })
    }

    fn nonresidue_elem(&self) -> Fe {
        let mut guard = self.ctx.nonresidue.lock().unwrap();
        if let Some(c) = guard.as_ref() {
            return Fe { ctx: self.ctx.clone(), c: c.clone() };
        }
        let mut idx = 1u128;
        loop {
            let cand = Fe::from_index(&self.ctx, idx);
            if !cand.is_zero() && !cand.is_square() {
                *guard = Some(cand.c.clone());
                return cand;
            }
            idx += 1;
        }
    }

    /// Serialization bytes: big-endian k then coefficients.
    pub fn bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + self.c.len() * 8);
        out.extend_from_slice(&self.ctx.k.to_be_bytes());
        for &c in &self.c {
            out.extend_from_slice(&c.to_be_bytes());
        }
        out
    }
}

// ---- polynomials over Fe, used by the deterministic root finder

fn trim_fe(v: &mut Vec<Fe>) {
    while v.last().map(|x| x.is_zero()) == Some(true) {
        v.pop();
    }
}

fn poly_mul(a: &[Fe], b: &[Fe], ctx: &Arc<FieldCtx>) -> Vec<Fe> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![Fe::zero(ctx); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            out[i + j] = out[i + j].add(&ai.mul(bj));
        }
    }
    trim_fe(&mut out);
    out
}

fn poly_rem(a: &[Fe], m: &[Fe], ctx: &Arc<FieldCtx>) -> Vec<Fe> {
    let mut r = a.to_vec();
    trim_fe(&mut r);
    let dm = m.len() - 1;
    let lead_inv = m[dm].inv().expect("nonzero leading coefficient");
    while r.len() > dm {
        let c = r.last().unwrap().mul(&lead_inv);
        let shift = r.len() - 1 - dm;
        if !c.is_zero() {
            for (i, mi) in m.iter().enumerate() {
                r[i + shift] = r[i + shift].sub(&c.mul(mi));
            }
        }
        r.pop();
        trim_fe(&mut r);
    }
    let _ = ctx;
    r
}

fn poly_gcd(a: &[Fe], b: &[Fe], ctx: &Arc<FieldCtx>) -> Vec<Fe> {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    trim_fe(&mut a);
    trim_fe(&mut b);
    while !b.is_empty() {
        let r = poly_rem(&a, &b, ctx);
        a = b;
        b = r;
    }
    if let Some(lead) = a.last().cloned() {
        let inv = lead.inv().unwrap();
        for c in a.iter_mut() {
            *c = c.mul(&inv);
        }
    }
    a
}

fn poly_pow_mod(base: &[Fe], e: &BigUint, m: &[Fe], ctx: &Arc<FieldCtx>) -> Vec<Fe> {
    let mut acc = vec![Fe::one(ctx)];
    for bit in (0..e.bits()).rev() {
        acc = poly_rem(&poly_mul(&acc, &acc, ctx), m, ctx);
        if e.bit(bit) {
            acc = poly_rem(&poly_mul(&acc, base, ctx), m, ctx);
        }
    }
    acc
}

/// All roots of the polynomial (coefficients ascending) in its own field,
/// sorted lexicographically. Deterministic: the equal-degree splitting uses
/// the fixed enumeration of field elements for its shifts.
pub fn poly_roots(f: &[Fe], ctx: &Arc<FieldCtx>) -> Vec<Fe> {
    let mut f = f.to_vec();
    trim_fe(&mut f);
    if f.len() <= 1 {
        return vec![];
    }
    // isolate the part that splits into distinct linear factors over F_q:
    // gcd(x^q - x, f)
    let x = vec![Fe::zero(ctx), Fe::one(ctx)];
    let xq = poly_pow_mod(&x, &ctx.q.clone(), &f, ctx);
    let mut diff = xq;
    diff.resize(diff.len().max(2), Fe::zero(ctx));
    diff[1] = diff[1].sub(&Fe::one(ctx));
    trim_fe(&mut diff);
    let mut g = poly_gcd(&diff, &f, ctx);
    if g.len() <= 1 {
        return vec![];
    }
    // split recursively
    let mut roots = Vec::new();
    let mut stack = vec![std::mem::take(&mut g)];
    let mut shift_idx: u128 = 0;
    while let Some(h) = stack.pop() {
        if h.len() == 2 {
            // monic x + c0 -> root -c0
            roots.push(h[0].neg());
            continue;
        }
        // try shifts until the gcd splits h properly
        loop {
            let delta = Fe::from_index(ctx, shift_idx);
            shift_idx += 1;
            let base = vec![delta, Fe::one(ctx)];
            let mut w = poly_pow_mod(&base, &ctx.half.clone(), &h, ctx);
            w.resize(w.len().max(1), Fe::zero(ctx));
            w[0] = w[0].sub(&Fe::one(ctx));
            trim_fe(&mut w);
            let d = poly_gcd(&w, &h, ctx);
            if d.len() > 1 && d.len() < h.len() {
                let quotient = poly_divide_exact(&h, &d, ctx);
                stack.push(d);
                stack.push(quotient);
                break;
            }
        }
    }
    roots.sort_by(|a, b| a.lex_cmp(b));
    roots
}

fn poly_divide_exact(a: &[Fe], b: &[Fe], ctx: &Arc<FieldCtx>) -> Vec<Fe> {
    // exact division of monic-splittable polys
    let mut r = a.to_vec();
    trim_fe(&mut r);
    let db = b.len() - 1;
    let lead_inv = b[db].inv().unwrap();
    let mut q = vec![Fe::zero(ctx); r.len() - db];
    while r.len() > db {
        let c = r.last().unwrap().mul(&lead_inv);
        let shift = r.len() - 1 - db;
        q[shift] = c.clone();
        for (i, bi) in b.iter().enumerate() {
            r[i + shift] = r[i + shift].sub(&c.mul(bi));
        }
        r.pop();
        trim_fe(&mut r);
    }
    trim_fe(&mut q);
    q
}

// ---- the tower

struct Embedding {
    root_pows: Vec<Fe>, // powers 0..from_k of the chosen root, in the target field
    // row indices of an invertible from_k x from_k minor, and its inverse
    solve_rows: Vec<usize>,
    solve_inv: Vec<Vec<u64>>, // from_k x from_k over F_p
}

struct TowerInner {
    p: u64,
    config: Config,
    fields: Mutex<HashMap<u32, Arc<FieldCtx>>>,
    embeds: Mutex<HashMap<(u32, u32), Arc<Embedding>>>,
}

/// Registry of the fields F_{p^k} for one prime p, with memoized embeddings.
#[derive(Clone)]
pub struct Tower(Arc<TowerInner>);

impl std::fmt::Debug for Tower {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Tower(p={})", self.0.p)
    }
}

impl Tower {
    pub fn new(p: u64, config: Config) -> Tower {
        assert!(p > 3 && crate::arith::is_prime(p as u128), "p must be a prime > 3");
        Tower(Arc::new(TowerInner {
            p,
            config,
            fields: Mutex::new(HashMap::new()),
            embeds: Mutex::new(HashMap::new()),
        }))
    }

    pub fn p(&self) -> u64 {
        self.0.p
    }

    pub fn config(&self) -> &Config {
        &self.0.config
    }

    pub fn same(&self, other: &Tower) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// The field F_{p^k}. Built on first use; k must be 1 or even.
    pub fn field(&self, k: u32) -> Result<Arc<FieldCtx>> {
        if k != 1 && k % 2 != 0 {
            return Err(Error::InvalidInput(format!("tower degree {k} must be 1 or even")));
        }
        if k > 2 * self.0.config.ext_cap {
            return Err(Error::ExtensionCap { need: k.div_ceil(2), cap: self.0.config.ext_cap });
        }
        let mut fields = self.0.fields.lock().unwrap();
        if let Some(f) = fields.get(&k) {
            return Ok(f.clone());
        }
        let ctx = Arc::new(FieldCtx::new(self.0.p, k));
        fields.insert(k, ctx.clone());
        Ok(ctx)
    }

    pub fn base(&self) -> Arc<FieldCtx> {
        self.field(2).expect("base field F_{p^2}")
    }

    fn embedding(&self, from_k: u32, to_k: u32) -> Result<Arc<Embedding>> {
        debug_assert!(to_k % from_k == 0 && from_k > 1);
        if let Some(e) = self.0.embeds.lock().unwrap().get(&(from_k, to_k)) {
            return Ok(e.clone());
        }
        let from = self.field(from_k)?;
        let to = self.field(to_k)?;
        // roots of the source modulus in the target field
        let modulus_poly: Vec<Fe> = from
            .modulus
            .iter()
            .map(|&c| Fe::from_u64(&to, c))
            .collect();
        let roots = poly_roots(&modulus_poly, &to);
        debug_assert_eq!(roots.len(), from_k as usize);
        // pick the lex-smallest root compatible with the canonical F_{p^2}
        // embeddings so that base-field data maps consistently everywhere
        let root = if from_k == 2 || to_k == from_k {
            roots.into_iter().next().expect("modulus splits in extension")
        } else {
            let g2_in_from = self.embed_generator2(from_k)?;
            let g2_in_to = self.embed_generator2(to_k)?;
            roots
                .into_iter()
                .find(|r| {
                    // apply candidate map to g2_in_from
                    let mut acc = Fe::zero(&to);
                    let mut pow = Fe::one(&to);
                    for &ci in &g2_in_from.c {
                        acc = acc.add(&pow.mul_u64(ci));
                        pow = pow.mul(r);
                    }
                    acc == g2_in_to
                })
                .expect("a base-compatible root exists among the conjugates")
        };
        let mut root_pows = Vec::with_capacity(from_k as usize);
        let mut pow = Fe::one(&to);
        for _ in 0..from_k {
            root_pows.push(pow.clone());
            pow = pow.mul(&root);
        }
        // precompute an invertible minor for the descent solves
        let (solve_rows, solve_inv) = descent_solver(&root_pows, to_k as usize, self.0.p);
        let emb = Arc::new(Embedding { root_pows, solve_rows, solve_inv });
        self.0
            .embeds
            .lock()
            .unwrap()
            .insert((from_k, to_k), emb.clone());
        Ok(emb)
    }

    fn embed_generator2(&self, to_k: u32) -> Result<Fe> {
        let base = self.field(2)?;
        let g2 = Fe { ctx: base.clone(), c: { let mut c = vec![0; 2]; c[1] = 1; c } };
        if to_k == 2 {
            return Ok(g2);
        }
        let e = self.embedding(2, to_k)?;
        Ok(e.root_pows[1].clone())
    }

    /// Lift an element into the degree-to_k field (single hop; from | to).
    pub fn embed(&self, fe: &Fe, to_k: u32) -> Result<Fe> {
        let from_k = fe.ctx.k;
        if from_k == to_k {
            return Ok(fe.clone());
        }
        if to_k % from_k != 0 {
            return Err(Error::InvalidInput(format!(
                "cannot embed degree {from_k} into degree {to_k}"
            )));
        }
        let to = self.field(to_k)?;
        if from_k == 1 {
            return Ok(Fe::from_u64(&to, fe.c[0]));
        }
        let emb = self.embedding(from_k, to_k)?;
        let mut acc = Fe::zero(&to);
        for (i, &ci) in fe.c.iter().enumerate() {
            if ci != 0 {
                acc = acc.add(&emb.root_pows[i].mul_u64(ci));
            }
        }
        Ok(acc)
    }

    /// Express an element in the degree-to_k subfield if it lies there.
    pub fn descend(&self, fe: &Fe, to_k: u32) -> Result<Option<Fe>> {
        let from_k = fe.ctx.k;
        if from_k == to_k {
            return Ok(Some(fe.clone()));
        }
        if from_k % to_k != 0 {
            return Ok(None);
        }
        if to_k == 1 {
            if fe.c[1..].iter().all(|&c| c == 0) {
                let to = self.field(1)?;
                return Ok(Some(Fe::from_u64(&to, fe.c[0])));
            }
            return Ok(None);
        }
        let emb = self.embedding(to_k, from_k)?;
        let p = self.0.p;
        // coords = inv * fe[rows]; then verify the full linear relation
        let to = self.field(to_k)?;
        let mut coords = vec![0u64; to_k as usize];
        for (i, row) in emb.solve_inv.iter().enumerate() {
            let mut acc: u128 = 0;
            for (j, &m) in row.iter().enumerate() {
                acc += m as u128 * fe.c[emb.solve_rows[j]] as u128;
            }
            coords[i] = (acc % p as u128) as u64;
        }
        let candidate = Fe { ctx: to.clone(), c: coords };
        let back = self.embed(&candidate, from_k)?;
        if &back == fe {
            Ok(Some(candidate))
        } else {
            Ok(None)
        }
    }

    /// Equality after lifting both sides into their common field.
    pub fn fe_eq(&self, a: &Fe, b: &Fe) -> bool {
        let k = num_integer::lcm(a.ctx.k, b.ctx.k);
        match (self.embed(a, k), self.embed(b, k)) {
            (Ok(x), Ok(y)) => x == y,
            _ => false,
        }
    }

    /// Smallest subfield (in the tower) containing the element.
    pub fn minimal_field(&self, fe: &Fe) -> Result<Fe> {
        let k = fe.ctx.k;
        let mut divisors: Vec<u32> = (1..=k).filter(|d| k % d == 0 && (*d == 1 || d % 2 == 0)).collect();
        divisors.sort_unstable();
        for d in divisors {
            if d == k {
                break;
            }
            if let Some(smaller) = self.descend(fe, d)? {
                return Ok(smaller);
            }
        }
        Ok(fe.clone())
    }
}

fn descent_solver(root_pows: &[Fe], to_len: usize, p: u64) -> (Vec<usize>, Vec<Vec<u64>>) {
    let from_k = root_pows.len();
    // matrix M: to_len rows x from_k cols, col i = root_pows[i]
    // find from_k independent rows by Gaussian elimination, invert the minor
    let mut m: Vec<Vec<u64>> = (0..to_len)
        .map(|r| (0..from_k).map(|c| root_pows[c].c[r]).collect())
        .collect();
    let mut chosen: Vec<usize> = Vec::new();
    let mut work = m.clone();
    let mut row_of_pivot: Vec<usize> = Vec::new();
    for col in 0..from_k {
        let mut pivot = None;
        for (r, row) in work.iter().enumerate() {
            if row[col] != 0 && !row_of_pivot.contains(&r) {
                pivot = Some(r);
                break;
            }
        }
        let pr = pivot.expect("root powers are linearly independent");
        chosen.push(pr);
        row_of_pivot.push(pr);
        let inv = crate::arith::inv_mod(work[pr][col] as i128, p as i128).unwrap() as u64;
        for c in 0..from_k {
            work[pr][c] = ((work[pr][c] as u128 * inv as u128) % p as u128) as u64;
        }
        let pivot_row = work[pr].clone();
        for (r, row) in work.iter_mut().enumerate() {
            if r != pr && row[col] != 0 {
                let f = row[col];
                for c in 0..from_k {
                    let sub = (f as u128 * pivot_row[c] as u128) % p as u128;
                    row[c] = ((row[c] as u128 + p as u128 * p as u128 - sub) % p as u128) as u64;
                }
            }
        }
    }
    chosen.sort_unstable();
    // invert the minor M[chosen][..]
    let n = from_k;
    let mut a: Vec<Vec<u64>> = chosen.iter().map(|&r| std::mem::take(&mut m[r])).collect();
    let mut inv: Vec<Vec<u64>> = (0..n)
        .map(|i| (0..n).map(|j| u64::from(i == j)).collect())
        .collect();
    for col in 0..n {
        let pr = (col..n).find(|&r| a[r][col] != 0).expect("invertible minor");
        a.swap(col, pr);
        inv.swap(col, pr);
        let f = crate::arith::inv_mod(a[col][col] as i128, p as i128).unwrap() as u64;
        for j in 0..n {
            a[col][j] = ((a[col][j] as u128 * f as u128) % p as u128) as u64;
            inv[col][j] = ((inv[col][j] as u128 * f as u128) % p as u128) as u64;
        }
        for r in 0..n {
            if r != col && a[r][col] != 0 {
                let f = a[r][col];
                for j in 0..n {
                    let s1 = (f as u128 * a[col][j] as u128) % p as u128;
                    a[r][j] = ((a[r][j] as u128 + p as u128 * p as u128 - s1) % p as u128) as u64;
                    let s2 = (f as u128 * inv[col][j] as u128) % p as u128;
                    inv[r][j] =
                        ((inv[r][j] as u128 + p as u128 * p as u128 - s2) % p as u128) as u64;
                }
            }
        }
    }
    (chosen, inv)
}

/// n-th roots of an element: all y in the element's field with y^n = a.
pub fn nth_roots(a: &Fe, n: u32) -> Vec<Fe> {
    let ctx = &a.ctx;
    let mut f = vec![Fe::zero(ctx); n as usize + 1];
    f[0] = a.neg();
    f[n as usize] = Fe::one(ctx);
    poly_roots(&f, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tower31() -> Tower {
        Tower::new(31, Config::default())
    }

    #[test]
    fn modulus_is_deterministic_and_irreducible() {
        let t = tower31();
        let f2 = t.field(2).unwrap();
        // 31 = 3 mod 4, so x^2 + 1 is the lex-first irreducible quadratic
        assert_eq!(f2.modulus, vec![1, 0, 1]);
        assert!(f2.is_modulus_irreducible());
        for k in [4u32, 6, 8, 12] {
            let f = t.field(k).unwrap();
            assert!(f.is_modulus_irreducible(), "k={k}");
            let again = FieldCtx::new(31, k);
            assert_eq!(again.modulus, f.modulus);
        }
    }

    #[test]
    fn field_axioms_smoke() {
        let t = tower31();
        let f4 = t.field(4).unwrap();
        for i in 0..40u128 {
            let a = Fe::from_index(&f4, 7 * i + 1);
            let b = Fe::from_index(&f4, 11 * i + 3);
            let c = Fe::from_index(&f4, 13 * i + 5);
            assert_eq!(a.add(&b), b.add(&a));
            assert_eq!(a.mul(&b), b.mul(&a));
            assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            if !a.is_zero() {
                assert_eq!(a.mul(&a.inv().unwrap()), Fe::one(&f4));
            }
        }
    }

    #[test]
    fn sqrt_canonical() {
        let t = tower31();
        let f2 = t.field(2).unwrap();
        let four = Fe::from_u64(&f2, 4);
        let r = four.sqrt().unwrap();
        assert_eq!(r, Fe::from_u64(&f2, 2)); // 2 lex-smaller than 29
        assert_eq!(Fe::zero(&f2).sqrt().unwrap(), Fe::zero(&f2));
        // 3 is not a square mod 7: check in the degree-1 field of a 7-tower
        let t7 = Tower::new(7, Config::default());
        let f1 = t7.field(1).unwrap();
        assert!(Fe::from_u64(&f1, 3).sqrt().is_none());
        assert_eq!(
            (0..7)
                .filter(|&v| Fe::from_u64(&f1, v).sqrt().is_some())
                .map(|v| v)
                .collect::<Vec<_>>(),
            vec![0, 1, 2, 4]
        );
    }

    #[test]
    fn sqrt_random_squares() {
        let t = tower31();
        for k in [2u32, 4, 6] {
            let f = t.field(k).unwrap();
            for i in 0..200u128 {
                let b = Fe::from_index(&f, i * 977 + 1);
                let a = b.square();
                let r = a.sqrt().expect("squares have roots");
                assert!(r == b || r == b.neg());
                assert!(r.lex_cmp(&r.neg()) != std::cmp::Ordering::Greater);
            }
        }
    }

    #[test]
    fn embeddings_commute_over_base() {
        let t = tower31();
        let f2 = t.field(2).unwrap();
        for i in 0..50u128 {
            let a = Fe::from_index(&f2, i * 37 + 2);
            let via4 = t.embed(&t.embed(&a, 4).unwrap(), 8).unwrap();
            let direct = t.embed(&a, 8).unwrap();
            assert_eq!(via4, direct);
            let via6 = t.embed(&t.embed(&a, 6).unwrap(), 12).unwrap();
            let direct12 = t.embed(&a, 12).unwrap();
            assert_eq!(via6, direct12);
        }
    }

    #[test]
    fn embed_descend_roundtrip() {
        let t = tower31();
        let f4 = t.field(4).unwrap();
        for i in 0..60u128 {
            let a = Fe::from_index(&f4, i * 101 + 3);
            let up = t.embed(&a, 12).unwrap();
            let down = t.descend(&up, 4).unwrap().expect("element is in the subfield");
            assert_eq!(down, a);
        }
        // an element truly of degree 12 does not descend
        let f12 = t.field(12).unwrap();
        let gen = Fe { ctx: f12.clone(), c: { let mut c = vec![0; 12]; c[1] = 1; c } };
        assert!(t.descend(&gen, 4).unwrap().is_none());
    }

    #[test]
    fn embedding_is_a_ring_hom() {
        let t = tower31();
        let f2 = t.field(2).unwrap();
        for i in 0..30u128 {
            let a = Fe::from_index(&f2, i + 5);
            let b = Fe::from_index(&f2, 3 * i + 11);
            let ea = t.embed(&a, 8).unwrap();
            let eb = t.embed(&b, 8).unwrap();
            assert_eq!(t.embed(&a.mul(&b), 8).unwrap(), ea.mul(&eb));
            assert_eq!(t.embed(&a.add(&b), 8).unwrap(), ea.add(&eb));
        }
    }

    #[test]
    fn roots_of_polynomials() {
        let t = tower31();
        let f2 = t.field(2).unwrap();
        // x^2 + 1 over F_{31^2} has the two roots +-i = +-x
        let poly = vec![Fe::one(&f2), Fe::zero(&f2), Fe::one(&f2)];
        let roots = poly_roots(&poly, &f2);
        assert_eq!(roots.len(), 2);
        for r in &roots {
            assert_eq!(r.square(), Fe::one(&f2).neg());
        }
        // (x - 3)(x - 5)(x - 7)
        let mut poly = vec![Fe::one(&f2)];
        for v in [3u64, 5, 7] {
            poly = poly_mul(&poly, &[Fe::from_u64(&f2, v).neg(), Fe::one(&f2)], &f2);
        }
        let roots = poly_roots(&poly, &f2);
        assert_eq!(
            roots,
            vec![Fe::from_u64(&f2, 3), Fe::from_u64(&f2, 5), Fe::from_u64(&f2, 7)]
        );
    }

    #[test]
    fn nth_roots_complete() {
        let t = tower31();
        let f2 = t.field(2).unwrap();
        let a = Fe::from_u64(&f2, 16);
        let quartics = nth_roots(&a, 4);
        assert!(!quartics.is_empty());
        for r in &quartics {
            assert_eq!(r.pow_u64(4), a);
        }
        assert_eq!(quartics.len(), 4); // mu_4 lives in F_{31^2}
    }
}
