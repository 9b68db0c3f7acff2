//! Isomorphisms between Weierstrass models.
//!
//! An isomorphism is stored by its (u, r, s, t) data: the substitution
//! x = u^2 x' + r, y = u^3 y' + s u^2 x' + t identifies the domain equation
//! with the codomain equation, and the forward map domain -> codomain is
//! (x, y) |-> ((x - r)/u^2, (y - s(x - r) - t)/u^3).

use crate::field::{nth_roots, Fe, Tower};
use crate::{Error, Result};

use super::{c_invariants_of, j_of, Curve, Point};

/// (u, r, s, t) isomorphism data over some tower field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoData {
    pub u: Fe,
    pub r: Fe,
    pub s: Fe,
    pub t: Fe,
}

impl IsoData {
    pub fn identity(tower: &Tower) -> IsoData {
        let base = tower.base();
        IsoData {
            u: Fe::one(&base),
            r: Fe::zero(&base),
            s: Fe::zero(&base),
            t: Fe::zero(&base),
        }
    }

    pub fn field_k(&self) -> u32 {
        self.u.ctx.k
    }

    fn lift(&self, tower: &Tower, k: u32) -> Result<IsoData> {
        Ok(IsoData {
            u: tower.embed(&self.u, k)?,
            r: tower.embed(&self.r, k)?,
            s: tower.embed(&self.s, k)?,
            t: tower.embed(&self.t, k)?,
        })
    }

    /// Forward map on affine coordinates (domain -> codomain).
    pub fn apply_affine(&self, tower: &Tower, xy: &Option<(Fe, Fe)>) -> Result<Option<(Fe, Fe)>> {
        let Some((x, y)) = xy else { return Ok(None) };
        let k = num_integer::lcm(self.field_k(), x.ctx.k);
        let d = self.lift(tower, k)?;
        let x = tower.embed(x, k)?;
        let y = tower.embed(y, k)?;
        let u2 = d.u.square();
        let u3 = u2.mul(&d.u);
        let xr = x.sub(&d.r);
        let xp = xr.div(&u2).expect("u nonzero");
        let yp = y.sub(&d.s.mul(&xr)).sub(&d.t).div(&u3).unwrap();
        Ok(Some((xp, yp)))
    }

    /// Inverse map on affine coordinates (codomain -> domain).
    pub fn apply_inverse_affine(
        &self,
        tower: &Tower,
        xy: &Option<(Fe, Fe)>,
    ) -> Result<Option<(Fe, Fe)>> {
        let Some((xp, yp)) = xy else { return Ok(None) };
        let k = num_integer::lcm(self.field_k(), xp.ctx.k);
        let d = self.lift(tower, k)?;
        let xp = tower.embed(xp, k)?;
        let yp = tower.embed(yp, k)?;
        let u2 = d.u.square();
        let u3 = u2.mul(&d.u);
        let x = u2.mul(&xp).add(&d.r);
        let y = u3.mul(&yp).add(&d.s.mul(&u2).mul(&xp)).add(&d.t);
        Ok(Some((x, y)))
    }

    pub fn inverse(&self) -> IsoData {
        let u_inv = self.u.inv().expect("u nonzero");
        let u2_inv = u_inv.square();
        let u3_inv = u2_inv.mul(&u_inv);
        IsoData {
            u: u_inv.clone(),
            r: self.r.mul(&u2_inv).neg(),
            s: self.s.mul(&u_inv).neg(),
            t: self.r.mul(&self.s).sub(&self.t).mul(&u3_inv),
        }
    }

    /// Composition: self then other.
    pub fn compose(&self, tower: &Tower, other: &IsoData) -> Result<IsoData> {
        // with Silverman-style data, applying self then other corresponds to
        // substituting other's data into self's primed coordinates:
        // u = u1 u2, r = r1 + u1^2 r2, s = s1 + u1 s2,
        // t = t1 + u1^3 t2 + u1^2 r2 s1
        let k = num_integer::lcm(self.field_k(), other.field_k());
        let a = self.lift(tower, k)?;
        let b = other.lift(tower, k)?;
        let u1sq = a.u.square();
        Ok(IsoData {
            u: a.u.mul(&b.u),
            r: a.r.add(&u1sq.mul(&b.r)),
            s: a.s.add(&a.u.mul(&b.s)),
            t: a
                .t
                .add(&u1sq.mul(&a.u).mul(&b.t))
                .add(&u1sq.mul(&b.r).mul(&a.s)),
        })
    }

    pub fn bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for fe in [&self.u, &self.r, &self.s, &self.t] {
            out.extend_from_slice(&fe.bytes());
        }
        out
    }

    /// Checks that this data transforms `from` into `to` exactly.
    pub fn is_valid_between(&self, tower: &Tower, from: &[Fe; 5], to: &[Fe; 5]) -> bool {
        let k = [self.field_k(), from[0].ctx.k, to[0].ctx.k]
            .into_iter()
            .fold(1u32, num_integer::lcm);
        let Ok(d) = self.lift(tower, k) else { return false };
        let emb =
            |a: &[Fe; 5]| -> Result<Vec<Fe>> { a.iter().map(|c| tower.embed(c, k)).collect() };
        let (Ok(fa), Ok(ta)) = (emb(from), emb(to)) else {
            return false;
        };
        let (u, r, s, t) = (&d.u, &d.r, &d.s, &d.t);
        let u2 = u.square();
        let u3 = u2.mul(u);
        let u4 = u2.square();
        let u6 = u3.square();
        // Silverman's table of transformed coefficients
        let c1 = u.mul(&ta[0]) == fa[0].add(&s.mul_u64(2));
        let c2 = u2.mul(&ta[1])
            == fa[1]
                .sub(&s.mul(&fa[0]))
                .add(&r.mul_u64(3))
                .sub(&s.square());
        let c3 = u3.mul(&ta[2]) == fa[2].add(&r.mul(&fa[0])).add(&t.mul_u64(2));
        let c4 = u4.mul(&ta[3])
            == fa[3]
                .sub(&s.mul(&fa[2]))
                .add(&r.mul(&fa[1]).mul_u64(2))
                .sub(&t.add(&r.mul(s)).mul(&fa[0]))
                .add(&r.square().mul_u64(3))
                .sub(&s.mul(t).mul_u64(2));
        let c6 = u6.mul(&ta[4])
            == fa[4]
                .add(&r.mul(&fa[3]))
                .add(&r.square().mul(&fa[1]))
                .add(&r.square().mul(r))
                .sub(&t.mul(&fa[2]))
                .sub(&t.square())
                .sub(&r.mul(t).mul(&fa[0]));
        c1 && c2 && c3 && c4 && c6
    }
}

/// All isomorphisms between two Weierstrass quintuples, over tower fields of
/// degree up to `max_k`. Sorted deterministically by serialized data.
pub(crate) fn isomorphisms_raw(
    tower: &Tower,
    from: &[Fe; 5],
    to: &[Fe; 5],
    max_k: u32,
) -> Result<Vec<IsoData>> {
    let jf = j_of(from);
    let jt = j_of(to);
    let k0 = num_integer::lcm(from[0].ctx.k, to[0].ctx.k);
    let lift = |a: &[Fe; 5], k: u32| -> Result<[Fe; 5]> {
        Ok([
            tower.embed(&a[0], k)?,
            tower.embed(&a[1], k)?,
            tower.embed(&a[2], k)?,
            tower.embed(&a[3], k)?,
            tower.embed(&a[4], k)?,
        ])
    };
    let from0 = lift(from, k0)?;
    let to0 = lift(to, k0)?;
    match (jf, jt) {
        (Some(a), Some(b)) => {
            let ka = num_integer::lcm(a.ctx.k, b.ctx.k);
            if tower.embed(&a, ka)? != tower.embed(&b, ka)? {
                return Ok(vec![]);
            }
        }
        _ => return Err(Error::InvalidInput("singular quintuple".into())),
    }
    let (c4f, c6f) = c_invariants_of(&from0);
    let (c4t, c6t) = c_invariants_of(&to0);
    // candidate u values, possibly in an extension
    let mut us: Vec<Fe> = Vec::new();
    let grow = |n: u32, val: &Fe, us: &mut Vec<Fe>| -> Result<()> {
        for mult in [1u32, 2, 3, 4, 6] {
            let k = k0 * mult;
            if k > max_k || (k != 1 && k % 2 != 0) {
                continue;
            }
            if tower.field(k).is_err() {
                continue;
            }
            let v = tower.embed(val, k)?;
            let roots = nth_roots(&v, n);
            if !roots.is_empty() {
                us.extend(roots);
                return Ok(());
            }
        }
        Err(Error::ExtensionCap { need: max_k.div_ceil(2), cap: tower.config().ext_cap })
    };
    if c4f.is_zero() {
        // j = 0: u^6 = c6/c6'
        let v = c6f.div(&c6t).ok_or_else(|| Error::InvalidInput("degenerate c6".into()))?;
        grow(6, &v, &mut us)?;
    } else if c6f.is_zero() {
        // j = 1728: u^4 = c4/c4'
        let v = c4f.div(&c4t).ok_or_else(|| Error::InvalidInput("degenerate c4".into()))?;
        grow(4, &v, &mut us)?;
    } else {
        // generic: u^2 = (c6 c4')/(c4 c6')
        let v = c6f.mul(&c4t).div(&c4f.mul(&c6t)).unwrap();
        grow(2, &v, &mut us)?;
    }
    let mut out = Vec::new();
    for u in us {
        let k = u.ctx.k;
        let fa = lift(from, k)?;
        let ta = lift(to, k)?;
        let inv2 = Fe::from_u64(&u.ctx, 2).inv().unwrap();
        let inv3 = Fe::from_u64(&u.ctx, 3).inv().unwrap();
        // s = (u a1' - a1)/2 ; r = (u^2 a2' - a2 + s a1 + s^2)/3 ;
        // t = (u^3 a3' - a3 - r a1)/2
        let s = u.mul(&ta[0]).sub(&fa[0]).mul(&inv2);
        let r = u
            .square()
            .mul(&ta[1])
            .sub(&fa[1])
            .add(&s.mul(&fa[0]))
            .add(&s.square())
            .mul(&inv3);
        let t = u.square().mul(&u).mul(&ta[2]).sub(&fa[2]).sub(&r.mul(&fa[0])).mul(&inv2);
        let data = IsoData { u, r, s, t };
        if data.is_valid_between(tower, from, to) {
            out.push(data);
        }
    }
    out.sort_by(|a, b| a.bytes().cmp(&b.bytes()));
    Ok(out)
}

/// Complete list of isomorphisms E -> E' over tower extensions, in a fixed
/// deterministic order. Empty when j(E) != j(E').
pub fn isomorphisms(e: &Curve, e2: &Curve) -> Result<Vec<Isomorphism>> {
    let max_k = 2 * e.tower().config().ext_cap;
    let data = isomorphisms_raw(e.tower(), e.coeffs(), e2.coeffs(), max_k)?;
    Ok(data
        .into_iter()
        .map(|d| Isomorphism { domain: e.clone(), codomain: e2.clone(), data: d })
        .collect())
}

pub fn automorphisms(e: &Curve) -> Result<Vec<Isomorphism>> {
    isomorphisms(e, e)
}

/// An isomorphism of curves with explicit domain and codomain.
#[derive(Clone, Debug)]
pub struct Isomorphism {
    pub domain: Curve,
    pub codomain: Curve,
    pub data: IsoData,
}

impl Isomorphism {
    pub fn identity(e: &Curve) -> Isomorphism {
        Isomorphism {
            domain: e.clone(),
            codomain: e.clone(),
            data: IsoData::identity(e.tower()),
        }
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        debug_assert!(p.curve == self.domain, "point not on the domain");
        let xy = self.data.apply_affine(self.domain.tower(), &p.xy)?;
        Ok(Point { curve: self.codomain.clone(), xy })
    }

    pub fn inverse(&self) -> Isomorphism {
        Isomorphism {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            data: self.data.inverse(),
        }
    }

    pub fn compose(&self, then: &Isomorphism) -> Result<Isomorphism> {
        debug_assert!(self.codomain == then.domain);
        Ok(Isomorphism {
            domain: self.domain.clone(),
            codomain: then.codomain.clone(),
            data: self.data.compose(self.domain.tower(), &then.data)?,
        })
    }

    pub fn is_identity_map(&self) -> bool {
        self.domain == self.codomain
            && self.data.u == Fe::one(&self.data.u.ctx)
            && self.data.r.is_zero()
            && self.data.s.is_zero()
            && self.data.t.is_zero()
    }
}
