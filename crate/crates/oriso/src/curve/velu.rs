//! Velu's formulas for a separable prime-degree isogeny from an explicit
//! kernel point, on a general long Weierstrass model.

use crate::field::Fe;
use crate::{Error, Result};

use super::ops::{self, Affine};

/// Per-kernel-point evaluation data for a Velu map.
#[derive(Clone, Debug)]
pub struct VeluData {
    /// domain quintuple (in the kernel's field)
    pub domain: [Fe; 5],
    /// raw codomain quintuple, same field
    pub codomain: [Fe; 5],
    pub ell: u64,
    rows: Vec<VeluRow>,
}

#[derive(Clone, Debug)]
struct VeluRow {
    xq: Fe,
    yq: Fe,
    gx: Fe,
    gy: Fe,
    v: Fe,
    u: Fe,
}

/// Build the degree-ell Velu map with kernel generated by `gen` (exact order
/// ell, ell != p) on the curve `a` over the generator's field.
pub fn velu_build(a: &[Fe; 5], gen: &Affine, ell: u64) -> Result<VeluData> {
    let Some((gx0, _)) = gen else {
        return Err(Error::BadKernelOrder);
    };
    let ctx = gx0.ctx.clone();
    let [a1, a2, a3, a4, a6] = a;
    // kernel representatives: 2-torsion points plus one of each +-pair
    let mut reps: Vec<(Fe, Fe, bool)> = Vec::new(); // (x, y, is_two_torsion)
    let mut t = gen.clone();
    let mut seen = std::collections::BTreeSet::new();
    for _ in 1..ell {
        let Some((x, y)) = &t else {
            return Err(Error::BadKernelOrder);
        };
        let neg_y = y.neg().sub(&a1.mul(x)).sub(a3);
        let two_tor = *y == neg_y;
        let key = (x.bytes(), y.bytes());
        let neg_key = (x.bytes(), neg_y.bytes());
        if !seen.contains(&key) && !seen.contains(&neg_key) {
            reps.push((x.clone(), y.clone(), two_tor));
        }
        seen.insert(key);
        t = ops::add(a, &t, gen);
    }
    if !t.is_none() {
        return Err(Error::BadKernelOrder);
    }
    let mut vsum = Fe::zero(&ctx);
    let mut wsum = Fe::zero(&ctx);
    let mut rows = Vec::with_capacity(reps.len());
    for (xq, yq, two_tor) in reps {
        let gx = xq
            .square()
            .mul_u64(3)
            .add(&a2.mul(&xq).mul_u64(2))
            .add(a4)
            .sub(&a1.mul(&yq));
        let gy = yq.mul_u64(2).neg().sub(&a1.mul(&xq)).sub(a3);
        let v = if two_tor { gx.clone() } else { gx.mul_u64(2).sub(&a1.mul(&gy)) };
        let u = gy.square();
        vsum = vsum.add(&v);
        wsum = wsum.add(&u.add(&xq.mul(&v)));
        rows.push(VeluRow { xq, yq, gx, gy, v, u });
    }
    let b2 = a1.square().add(&a2.mul_u64(4));
    let a4_new = a4.sub(&vsum.mul_u64(5));
    let a6_new = a6.sub(&b2.mul(&vsum)).sub(&wsum.mul_u64(7));
    let codomain = [a1.clone(), a2.clone(), a3.clone(), a4_new, a6_new];
    Ok(VeluData { domain: a.clone(), codomain, ell, rows })
}

impl VeluData {
    pub fn field_k(&self) -> u32 {
        self.domain[0].ctx.k
    }

    /// The same map with all data lifted into a larger tower field.
    pub fn lift(&self, tower: &crate::field::Tower, k: u32) -> crate::Result<VeluData> {
        let lift5 = |a: &[Fe; 5]| -> crate::Result<[Fe; 5]> {
            Ok([
                tower.embed(&a[0], k)?,
                tower.embed(&a[1], k)?,
                tower.embed(&a[2], k)?,
                tower.embed(&a[3], k)?,
                tower.embed(&a[4], k)?,
            ])
        };
        let rows = self
            .rows
            .iter()
            .map(|r| {
                Ok(VeluRow {
                    xq: tower.embed(&r.xq, k)?,
                    yq: tower.embed(&r.yq, k)?,
                    gx: tower.embed(&r.gx, k)?,
                    gy: tower.embed(&r.gy, k)?,
                    v: tower.embed(&r.v, k)?,
                    u: tower.embed(&r.u, k)?,
                })
            })
            .collect::<crate::Result<Vec<_>>>()?;
        Ok(VeluData {
            domain: lift5(&self.domain)?,
            codomain: lift5(&self.codomain)?,
            ell: self.ell,
            rows,
        })
    }

    /// Image of an affine point (coordinates must live in the same field as
    /// the kernel or an extension compatible with it; the caller lifts).
    pub fn apply(&self, xy: &Affine) -> Affine {
        let Some((x, y)) = xy else { return None };
        let [a1, _, a3, _, _] = &self.domain;
        let mut xs = x.clone();
        let mut ysub = Fe::zero(&x.ctx);
        for row in &self.rows {
            let dx = x.sub(&row.xq);
            if dx.is_zero() {
                // x-collision means the point is +-(kernel element)
                return None;
            }
            let dx_inv = dx.inv().unwrap();
            let dx2 = dx_inv.square();
            let dx3 = dx2.mul(&dx_inv);
            xs = xs.add(&row.v.mul(&dx_inv)).add(&row.u.mul(&dx2));
            // y-part per Velu:
            // u (2y + a1 x + a3)/dx^3 + v (a1 dx + y - yq)/dx^2
            //   + (a1 u - gx gy)/dx^2
            let term1 = row
                .u
                .mul(&y.mul_u64(2).add(&a1.mul(x)).add(a3))
                .mul(&dx3);
            let term2 = row
                .v
                .mul(&a1.mul(&dx).add(y).sub(&row.yq))
                .mul(&dx2);
            let term3 = a1.mul(&row.u).sub(&row.gx.mul(&row.gy)).mul(&dx2);
            ysub = ysub.add(&term1).add(&term2).add(&term3);
        }
        Some((xs, y.sub(&ysub)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::tests::{e1728, tower31};
    use crate::curve::Curve;
    use crate::field::Fe;

    #[test]
    fn classical_two_isogeny_from_origin_kernel() {
        let t = tower31();
        let e = e1728(&t);
        let base = t.base();
        let a = e.coeffs().clone();
        let gen = Some((Fe::zero(&base), Fe::zero(&base)));
        let v = velu_build(&a, &gen, 2).unwrap();
        // classical codomain: y^2 = x^3 - 4x
        assert_eq!(v.codomain[3], Fe::from_u64(&base, 4).neg());
        assert!(v.codomain[4].is_zero());
        // classical map: (x, y) -> ((x^2+1)/x, y (x^2-1)/x^2)
        for p in e.sample_points(1, 8).unwrap() {
            let (x, y) = p.xy.clone().unwrap();
            if x.is_zero() {
                assert!(v.apply(&p.xy).is_none());
                continue;
            }
            let img = v.apply(&p.xy).unwrap();
            let xe = x.square().add(&Fe::one(&base)).div(&x).unwrap();
            let ye = y.mul(&x.square().sub(&Fe::one(&base))).div(&x.square()).unwrap();
            assert_eq!(img.0, xe);
            assert_eq!(img.1, ye);
            assert!(ops::is_on(&v.codomain, &Some(img)));
        }
    }

    #[test]
    fn kernel_maps_to_infinity_and_images_lie_on_codomain() {
        let t = tower31();
        let e = e1728(&t);
        for ell in [3u64, 5] {
            let b = e.torsion_basis(ell as u128).unwrap();
            let k = b.p_point.field_k();
            let a = e.coeffs_in(k).unwrap();
            let v = velu_build(&a, &b.p_point.xy, ell).unwrap();
            // kernel multiples die
            let mut t_pt = b.p_point.xy.clone();
            for _ in 1..ell {
                assert!(v.apply(&t_pt).is_none());
                t_pt = ops::add(&a, &t_pt, &b.p_point.xy);
            }
            // non-kernel points map onto the codomain, homomorphically
            let q = b.q_point.in_field(k).unwrap();
            let img_q = v.apply(&q.xy);
            assert!(img_q.is_some());
            assert!(ops::is_on(&v.codomain, &img_q));
            let q2 = q.add(&q).unwrap().in_field(k).unwrap();
            let img_q2 = v.apply(&q2.xy);
            assert_eq!(img_q2, ops::add(&v.codomain, &img_q, &img_q));
        }
    }

    #[test]
    fn bad_kernel_rejected() {
        let t = tower31();
        let e = e1728(&t);
        let base = t.base();
        assert!(matches!(
            velu_build(e.coeffs(), &None, 2),
            Err(Error::BadKernelOrder)
        ));
        // a point of order 4 is not a valid kernel generator for ell = 2
        let b4 = e.torsion_basis(4).unwrap();
        let k = b4.p_point.field_k();
        let a = e.coeffs_in(k).unwrap();
        assert!(velu_build(&a, &b4.p_point.xy, 2).is_err());
        let _ = Curve::canonical_model(&t, &Fe::zero(&base));
    }
}
