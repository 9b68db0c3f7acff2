//! Versioned JSON wire formats for curves, points, isogeny chains,
//! expressions, oriented curves and forms.
//!
//! Unknown fields are rejected; emission is byte-stable (serde_json sorts
//! object keys). Points serialize over their minimal field; Velu steps
//! store only (kernel, ell) and are rebuilt deterministically on load.

use serde::{Deserialize, Serialize};

use crate::curve::{Curve, IsoData, Isomorphism, Point};
use crate::field::{Fe, Tower};
use crate::isogeny::{velu_step, IsogenyChain, IsogenyExpr, Step};
use crate::orientation::{Orientation, OrientedCurve};
use crate::quadratic::{QuadForm, QuadOrder};
use crate::{Error, Result};

pub const CURVE_SCHEMA: &str = "oriso/curve/v1";
pub const CHAIN_SCHEMA: &str = "oriso/chain/v1";
pub const EXPR_SCHEMA: &str = "oriso/expr/v1";
pub const ORIENTED_SCHEMA: &str = "oriso/oriented/v1";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FeWire {
    /// tower degree k of the field F_{p^k}
    pub d: u32,
    /// coefficients, constant term first, length d
    pub c: Vec<u64>,
}

pub fn fe_to_wire(fe: &Fe) -> FeWire {
    FeWire { d: fe.ctx.k, c: fe.c.clone() }
}

pub fn fe_from_wire(tower: &Tower, w: &FeWire) -> Result<Fe> {
    let ctx = tower.field(w.d)?;
    if w.c.len() != w.d as usize || w.c.iter().any(|&x| x >= tower.p()) {
        return Err(Error::InvalidInput("malformed field element".into()));
    }
    Ok(Fe { ctx, c: w.c.clone() })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PointWire {
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub inf: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<FeWire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<FeWire>,
}

pub fn point_to_wire(p: &Point) -> Result<PointWire> {
    let p = p.descend_min()?;
    Ok(match &p.xy {
        None => PointWire { inf: true, x: None, y: None },
        Some((x, y)) => {
            PointWire { inf: false, x: Some(fe_to_wire(x)), y: Some(fe_to_wire(y)) }
        }
    })
}

pub fn point_from_wire(curve: &Curve, w: &PointWire) -> Result<Point> {
    if w.inf {
        return Ok(curve.infinity());
    }
    let (Some(xw), Some(yw)) = (&w.x, &w.y) else {
        return Err(Error::InvalidInput("finite point needs x and y".into()));
    };
    let tower = curve.tower();
    let k = num_integer::lcm(xw.d, yw.d).max(2);
    let x = tower.embed(&fe_from_wire(tower, xw)?, k)?;
    let y = tower.embed(&fe_from_wire(tower, yw)?, k)?;
    curve.point(x, y)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CurveWire {
    pub schema: String,
    pub p: u64,
    /// a1, a2, a3, a4, a6 over F_{p^2}
    pub a: Vec<FeWire>,
}

pub fn curve_to_wire(e: &Curve) -> CurveWire {
    CurveWire {
        schema: CURVE_SCHEMA.into(),
        p: e.tower().p(),
        a: e.coeffs().iter().map(fe_to_wire).collect(),
    }
}

pub fn curve_from_wire(tower: &Tower, w: &CurveWire) -> Result<Curve> {
    if w.schema != CURVE_SCHEMA {
        return Err(Error::InvalidInput(format!("unexpected schema {}", w.schema)));
    }
    if w.p != tower.p() {
        return Err(Error::InvalidInput("curve prime does not match the context".into()));
    }
    if w.a.len() != 5 {
        return Err(Error::InvalidInput("a curve has five coefficients".into()));
    }
    let a: Vec<Fe> = w
        .a
        .iter()
        .map(|fw| {
            if fw.d != 2 {
                return Err(Error::InvalidInput("curve coefficients live in F_{p^2}".into()));
            }
            fe_from_wire(tower, fw)
        })
        .collect::<Result<_>>()?;
    Curve::new(tower, a.try_into().expect("length checked"))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum StepWire {
    Velu { ell: u64, kernel: PointWire },
    Scalar { n: i64 },
    Iso { u: FeWire, r: FeWire, s: FeWire, t: FeWire, codomain: CurveWire },
    Frobenius { power: u32 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChainWire {
    pub schema: String,
    pub p: u64,
    pub domain: CurveWire,
    pub steps: Vec<StepWire>,
}

pub fn chain_to_wire(c: &IsogenyChain) -> Result<ChainWire> {
    let mut steps = Vec::new();
    for s in &c.steps {
        steps.push(match s {
            Step::Velu(v) => StepWire::Velu { ell: v.ell, kernel: point_to_wire(&v.kernel)? },
            Step::Scalar { n, .. } => StepWire::Scalar {
                n: (*n).try_into().map_err(|_| {
                    Error::InputTooLarge("scalar step exceeds the wire range".into())
                })?,
            },
            Step::Iso(i) => StepWire::Iso {
                u: fe_to_wire(&i.data.u),
                r: fe_to_wire(&i.data.r),
                s: fe_to_wire(&i.data.s),
                t: fe_to_wire(&i.data.t),
                codomain: curve_to_wire(&i.codomain),
            },
            Step::Frobenius { power, .. } => StepWire::Frobenius { power: *power },
        });
    }
    Ok(ChainWire {
        schema: CHAIN_SCHEMA.into(),
        p: c.domain.tower().p(),
        domain: curve_to_wire(&c.domain),
        steps,
    })
}

pub fn chain_from_wire(tower: &Tower, w: &ChainWire) -> Result<IsogenyChain> {
    if w.schema != CHAIN_SCHEMA {
        return Err(Error::InvalidInput(format!("unexpected schema {}", w.schema)));
    }
    let domain = curve_from_wire(tower, &w.domain)?;
    let mut chain = IsogenyChain::identity(&domain);
    for sw in &w.steps {
        let cur = chain.codomain.clone();
        let next = match sw {
            StepWire::Velu { ell, kernel } => {
                let k = point_from_wire(&cur, kernel)?;
                let (_, step) = velu_step(&cur, &k, *ell)?;
                step
            }
            StepWire::Scalar { n } => IsogenyChain::scalar(&cur, *n as i128),
            StepWire::Iso { u, r, s, t, codomain } => {
                let data = IsoData {
                    u: fe_from_wire(tower, u)?,
                    r: fe_from_wire(tower, r)?,
                    s: fe_from_wire(tower, s)?,
                    t: fe_from_wire(tower, t)?,
                };
                let cod = curve_from_wire(tower, codomain)?;
                if !data.is_valid_between(tower, cur.coeffs(), cod.coeffs()) {
                    return Err(Error::InvalidInput("isomorphism data does not map the curves".into()));
                }
                IsogenyChain::from_isomorphism(Isomorphism {
                    domain: cur.clone(),
                    codomain: cod,
                    data,
                })
            }
            StepWire::Frobenius { power } => {
                if power % 2 != 0 {
                    return Err(Error::InvalidInput(
                        "only even Frobenius powers keep the curve fixed".into(),
                    ));
                }
                IsogenyChain::from_steps(vec![Step::Frobenius { curve: cur.clone(), power: *power }])?
            }
        };
        chain = chain.then(&next)?;
    }
    Ok(chain)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExprWire {
    pub schema: String,
    pub p: u64,
    pub curve: CurveWire,
    pub terms: Vec<TermWire>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermWire {
    pub coeff: i64,
    pub chain: ChainWire,
}

pub fn expr_to_wire(e: &IsogenyExpr) -> Result<ExprWire> {
    Ok(ExprWire {
        schema: EXPR_SCHEMA.into(),
        p: e.curve.tower().p(),
        curve: curve_to_wire(&e.curve),
        terms: e
            .terms
            .iter()
            .map(|(c, ch)| {
                let coeff = (*c).try_into().map_err(|_| {
                    Error::InputTooLarge("term coefficient exceeds the wire range".into())
                })?;
                Ok(TermWire { coeff, chain: chain_to_wire(ch)? })
            })
            .collect::<Result<_>>()?,
    })
}

pub fn expr_from_wire(tower: &Tower, w: &ExprWire) -> Result<IsogenyExpr> {
    if w.schema != EXPR_SCHEMA {
        return Err(Error::InvalidInput(format!("unexpected schema {}", w.schema)));
    }
    let curve = curve_from_wire(tower, &w.curve)?;
    let terms = w
        .terms
        .iter()
        .map(|t| Ok((t.coeff as i128, chain_from_wire(tower, &t.chain)?)))
        .collect::<Result<Vec<_>>>()?;
    IsogenyExpr::new(&curve, terms)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OrientedWire {
    pub schema: String,
    pub p: u64,
    pub disc: i64,
    pub curve: CurveWire,
    pub theta: ExprWire,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitive: Option<bool>,
}

pub fn oriented_to_wire(x: &OrientedCurve) -> Result<OrientedWire> {
    Ok(OrientedWire {
        schema: ORIENTED_SCHEMA.into(),
        p: x.curve.tower().p(),
        disc: x
            .orientation
            .order
            .disc
            .try_into()
            .map_err(|_| Error::InputTooLarge("discriminant exceeds the wire range".into()))?,
        curve: curve_to_wire(&x.curve),
        theta: expr_to_wire(&x.orientation.theta)?,
        primitive: x.primitive,
    })
}

pub fn oriented_from_wire(tower: &Tower, w: &OrientedWire) -> Result<OrientedCurve> {
    if w.schema != ORIENTED_SCHEMA {
        return Err(Error::InvalidInput(format!("unexpected schema {}", w.schema)));
    }
    let curve = curve_from_wire(tower, &w.curve)?;
    let theta = expr_from_wire(tower, &w.theta)?;
    let order = QuadOrder::from_disc(w.disc as i128)?;
    let x = OrientedCurve {
        curve,
        orientation: Orientation { order, theta },
        primitive: w.primitive,
    };
    x.verify()?;
    Ok(x)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FormWire {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

pub fn form_to_wire(f: &QuadForm) -> Result<FormWire> {
    let cast = |v: i128| -> Result<i64> {
        v.try_into()
            .map_err(|_| Error::InputTooLarge("form coefficient exceeds the wire range".into()))
    };
    Ok(FormWire { a: cast(f.a)?, b: cast(f.b)?, c: cast(f.c)? })
}

pub fn form_from_wire(w: &FormWire) -> QuadForm {
    QuadForm::new(w.a as i128, w.b as i128, w.c as i128)
}
