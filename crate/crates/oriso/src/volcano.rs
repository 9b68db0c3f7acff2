//! Navigation of oriented ell-isogeny volcanoes: the unique ascending step,
//! walks to the crater, the full edge census of a vertex, the (Z + cO)
//! conductor-clearing walk, and graph export.
//!
//! Ascending from a vertex of conductor divisible by ell: normalize the
//! generator to the trace-zero sqrt(disc), whose ell-kernel intersection is
//! the unique ascending kernel; transport and divide by ell^2 (folding in
//! the factor 2 that relates sqrt(disc') to the canonical generator).

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::arith;
use crate::curve::{Curve, Point};
use crate::isogeny::{matrix_kernel_mod, velu_step, IsogenyChain, IsogenyExpr};
use crate::orientation::{
    enc, loops_with_invariants, primitive_discriminant_restricted, primitivise_restricted,
    ClassKey, Orientation, OrientedCurve,
};
use crate::quadratic::QuadOrder;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Ascending,
    Horizontal,
    Descending,
}

impl Direction {
    pub fn tag(&self) -> &'static str {
        match self {
            Direction::Ascending => "up",
            Direction::Horizontal => "flat",
            Direction::Descending => "down",
        }
    }
}

/// One classified edge of the oriented ell-isogeny graph.
#[derive(Clone, Debug)]
pub struct VolcanoEdge {
    pub source: ClassKey,
    pub target: ClassKey,
    pub ell: u128,
    pub direction: Direction,
    pub kernel: Point,
    pub target_curve: OrientedCurve,
}

/// Result of an ascend attempt.
#[derive(Debug)]
pub enum Ascent {
    Step(Box<(OrientedCurve, VolcanoEdge)>),
    AtCrater,
}

/// A walk of successive prime steps with recoverable kernels.
#[derive(Clone, Debug)]
pub struct WalkTranscript {
    pub steps: Vec<(u128, Point, OrientedCurve)>,
    pub start: ClassKey,
    pub end: ClassKey,
}

impl WalkTranscript {
    pub fn degree(&self) -> u128 {
        self.steps.iter().map(|(l, _, _)| l).product()
    }
}

/// Conjugate an endomorphism expression through an isogeny chain:
/// phi o f o phi-hat on the codomain of phi.
pub(crate) fn conjugate_expr(f: &IsogenyExpr, phi: &IsogenyChain) -> Result<IsogenyExpr> {
    let phihat = phi.dual()?;
    let mut terms = Vec::new();
    for (c, chain) in &f.terms {
        terms.push((*c, phihat.then(chain)?.then(phi)?));
    }
    IsogenyExpr::new(&phi.codomain, terms)
}

/// The generator renormalization of the ascending step: with O_1 the
/// ell-ascended order and omega_1 its canonical generator, omega = ell
/// omega_1 generates the current order, and iota(omega) = theta + c with
/// the integer shift c = (ell t_1 - t)/2.
fn renormalized_generator(x: &OrientedCurve, ell: u128) -> Result<(IsogenyExpr, QuadOrder)> {
    let order = &x.orientation.order;
    let disc_up = order.disc / (ell as i128 * ell as i128);
    let up = QuadOrder::from_disc(disc_up)?;
    let c = (ell as i128 * up.t - order.t) / 2;
    debug_assert_eq!((ell as i128 * up.t - order.t).rem_euclid(2), 0);
    Ok((x.orientation.theta.scale_add(1, c), up))
}

/// The kernel generator of the unique ascending ell-step: the intersection
/// of ker(iota(ell omega_1)) with E[ell].
fn ascending_kernel(x: &OrientedCurve, ell: u128) -> Result<Point> {
    let (renorm, _) = renormalized_generator(x, ell)?;
    let basis = x.curve.torsion_basis(ell)?;
    let mat = renorm.matrix_on_basis(&basis)?;
    let reduced = [
        [mat[0][0].rem_euclid(ell as i128), mat[0][1].rem_euclid(ell as i128)],
        [mat[1][0].rem_euclid(ell as i128), mat[1][1].rem_euclid(ell as i128)],
    ];
    let kernel = matrix_kernel_mod(&reduced, ell);
    let gens: Vec<_> = kernel.iter().filter(|(_, o)| *o == ell).collect();
    match gens.len() {
        1 => {
            let ((c1, c2), _) = gens[0];
            let pt = basis.p_point.mul_i128(*c1)?.add(&basis.q_point.mul_i128(*c2)?)?;
            pt.descend_min()
        }
        0 => Err(Error::InvalidInput(
            "sqrt(disc) has trivial ell-kernel; the vertex is not below the crater".into(),
        )),
        _ => Err(Error::InvalidInput(
            "sqrt(disc) kills all of E[ell]; the orientation is not primitive".into(),
        )),
    }
}

/// The unique ascending step at ell, or AtCrater when the order is already
/// ell-maximal.
pub fn ascend(x: &OrientedCurve, ell: u128) -> Result<Ascent> {
    let order = &x.orientation.order;
    if ell == x.curve.tower().p() as u128 {
        return Err(Error::InvalidInput("ell = p volcanoes are out of scope".into()));
    }
    if order.conductor % ell as i128 != 0 {
        return Ok(Ascent::AtCrater);
    }
    let source_key = enc(x)?;
    let kernel = ascending_kernel(x, ell)?;
    let (cod, phi) = velu_step(&x.curve, &kernel, ell as u64)?;
    let (renorm, up_order) = renormalized_generator(x, ell)?;
    let pushed = conjugate_expr(&x.orientation.theta, &phi)?;
    let up = transport_ascending(x, ell, &cod, &phi, &pushed, &renorm, &up_order)?;
    up.verify()?;
    let edge = VolcanoEdge {
        source: source_key,
        target: enc(&up)?,
        ell,
        direction: Direction::Ascending,
        kernel,
        target_curve: up.clone(),
    };
    Ok(Ascent::Step(Box::new((up, edge))))
}

/// Transport the orientation along an ascending step: primitivise the
/// pushed generator with divisions restricted to {2, ell}. When the
/// materialization needs torsion past the cap (deep vertices at larger
/// ell), fall back to a direct loop search on the codomain, pinned against
/// the renormalized generator on coprime torsion.
fn transport_ascending(
    x: &OrientedCurve,
    ell: u128,
    cod: &Curve,
    phi: &IsogenyChain,
    pushed: &IsogenyExpr,
    renorm: &IsogenyExpr,
    up_order: &QuadOrder,
) -> Result<OrientedCurve> {
    match primitivise_restricted(cod, pushed, None, Some(&[2, ell])) {
        Ok(up) => {
            if up.orientation.order.disc != up_order.disc {
                return Err(Error::InvalidInput(format!(
                    "ascending transport landed on disc {} instead of {}",
                    up.orientation.order.disc, up_order.disc
                )));
            }
            Ok(up)
        }
        Err(Error::TorsionUnreachable { .. }) => {
            ascended_by_search(x, ell, cod, phi, renorm, up_order)
        }
        Err(e) => Err(e),
    }
}

/// Deep-vertex fallback: enumerate candidate norm-n_1 trace-t_1 loops on the
/// codomain and keep the one whose pullback through phi equals the
/// renormalized generator, checked on coprime torsion levels whose product
/// squared exceeds 4 deg.
fn ascended_by_search(
    x: &OrientedCurve,
    ell: u128,
    cod: &Curve,
    phi: &IsogenyChain,
    renorm: &IsogenyExpr,
    up_order: &QuadOrder,
) -> Result<OrientedCurve> {
    let deg = (ell * ell * up_order.n as u128) as f64;
    let target = 2.0 * deg.sqrt();
    // collect reachable test levels coprime to ell and p
    let p = x.curve.tower().p() as u128;
    let mut levels: Vec<u128> = Vec::new();
    let mut product = 1f64;
    for q in crate::arith::primes() {
        let q = q as u128;
        if product > target {
            break;
        }
        if q == p || q == ell || up_order.n as u128 % q == 0 {
            continue;
        }
        if q > 60 {
            return Err(Error::TorsionUnreachable { m: q, cap: x.curve.tower().config().ext_cap });
        }
        if x.curve.torsion_basis(q).is_err() {
            continue;
        }
        levels.push(q);
        product *= q as f64;
    }
    let mut tests: Vec<(crate::curve::Point, crate::curve::Point)> = Vec::new();
    for &q in &levels {
        let b = x.curve.torsion_basis(q)?;
        for pt in [&b.p_point, &b.q_point] {
            tests.push((pt.clone(), renorm.evaluate(pt)?));
        }
    }
    let phihat = phi.dual()?;
    'cand: for candidate in loops_with_invariants(cod, up_order.n as u128, up_order.t)? {
        for (pt, want) in &tests {
            let lhs = phihat.evaluate(&candidate.evaluate(&phi.evaluate(pt)?)?)?;
            if lhs != *want {
                continue 'cand;
            }
        }
        return Ok(OrientedCurve {
            curve: cod.clone(),
            orientation: Orientation { order: up_order.clone(), theta: candidate },
            primitive: Some(true),
        });
    }
    Err(Error::InvalidInput("no codomain loop matches the ascended generator".into()))
}

/// Iterate ascend until the crater; the transcript length equals the
/// ell-valuation of the conductor.
pub fn walk_to_crater(x: &OrientedCurve, ell: u128) -> Result<(OrientedCurve, WalkTranscript)> {
    let start = enc(x)?;
    let mut steps = Vec::new();
    let mut cur = x.clone();
    loop {
        match ascend(&cur, ell)? {
            Ascent::AtCrater => break,
            Ascent::Step(step) => {
                let (next, edge) = *step;
                steps.push((ell, edge.kernel.clone(), next.clone()));
                cur = next;
            }
        }
    }
    let end = enc(&cur)?;
    Ok((cur, WalkTranscript { steps, start, end }))
}

/// All ell + 1 edges at a vertex, classified by primitivising each pushed
/// orientation (never by elimination).
pub fn neighbors(x: &OrientedCurve, ell: u128) -> Result<Vec<VolcanoEdge>> {
    let order = &x.orientation.order;
    let source_key = enc(x)?;
    let basis = x.curve.torsion_basis(ell)?;
    let mut edges = Vec::new();
    for (c1, c2) in projective_line_prime(ell) {
        let gen = basis
            .p_point
            .mul_i128(c1 as i128)?
            .add(&basis.q_point.mul_i128(c2 as i128)?)?
            .descend_min()?;
        let (cod, phi) = velu_step(&x.curve, &gen, ell as u64)?;
        let pushed = conjugate_expr(&x.orientation.theta, &phi)?;
        let disc_new = primitive_discriminant_restricted(&cod, &pushed, &[2, ell])?;
        let li = ell as i128;
        let (direction, child) = if disc_new == order.disc {
            let prim = primitivise_restricted(&cod, &pushed, None, Some(&[2, ell]))?;
            (Direction::Horizontal, prim)
        } else if disc_new == order.disc * li * li {
            // descending: the canonical generator of the suborder is the
            // pushed generator plus an explicit integer shift, exactly
            let down_order = QuadOrder::from_disc(disc_new)?;
            let c = (down_order.t - li * order.t) / 2;
            let theta = pushed.scale_add(1, c);
            let child = OrientedCurve {
                curve: cod.clone(),
                orientation: Orientation { order: down_order, theta },
                primitive: Some(true),
            };
            (Direction::Descending, child)
        } else if disc_new * li * li == order.disc {
            let (renorm, up_order) = renormalized_generator(x, ell)?;
            let child = transport_ascending(x, ell, &cod, &phi, &pushed, &renorm, &up_order)?;
            (Direction::Ascending, child)
        } else {
            return Err(Error::InvalidInput(format!(
                "neighbor discriminant {disc_new} is not disc, disc*ell^2 or disc/ell^2"
            )));
        };
        edges.push(VolcanoEdge {
            source: source_key.clone(),
            target: enc(&child)?,
            ell,
            direction,
            kernel: gen,
            target_curve: child,
        });
    }
    Ok(edges)
}

fn projective_line_prime(ell: u128) -> Vec<(u128, u128)> {
    let mut v: Vec<(u128, u128)> = (0..ell).map(|b| (1, b)).collect();
    v.push((0, 1));
    v
}

/// Clear the conductor c: walk e_i ascending steps per prime ell_i | c.
/// Returns the O-oriented endpoint and the dual-ready transcript.
pub fn reduce_conductor(
    x: &OrientedCurve,
    c: u128,
) -> Result<(OrientedCurve, WalkTranscript)> {
    let start = enc(x)?;
    if x.orientation.order.conductor % c as i128 != 0 {
        return Err(Error::InvalidInput(format!(
            "c = {c} does not divide the conductor {}",
            x.orientation.order.conductor
        )));
    }
    let mut steps = Vec::new();
    let mut cur = x.clone();
    for (ell, e) in arith::factor(c)? {
        for _ in 0..e {
            match ascend(&cur, ell)? {
                Ascent::AtCrater => {
                    return Err(Error::InvalidInput(
                        "hit the crater before clearing the conductor".into(),
                    ))
                }
                Ascent::Step(step) => {
                    let (next, edge) = *step;
                    steps.push((ell, edge.kernel.clone(), next.clone()));
                    cur = next;
                }
            }
        }
    }
    let end = enc(&cur)?;
    Ok((cur, WalkTranscript { steps, start, end }))
}

/// A BFS export of the volcano component around a seed vertex.
#[derive(Clone, Debug)]
pub struct VolcanoGraph {
    pub ell: u128,
    /// node id (hex of the key hash) -> (key, disc, depth below crater)
    pub nodes: BTreeMap<String, (ClassKey, i128, u32)>,
    /// (source id, target id, direction)
    pub edges: Vec<(String, String, Direction)>,
}

pub fn node_id(key: &ClassKey) -> String {
    let mut h = Sha256::new();
    h.update(&key.bytes);
    hex::encode(&h.finalize()[..8])
}

/// Depth of an order in the ell-volcano: the ell-valuation of the conductor.
pub fn depth_of(order: &QuadOrder, ell: u128) -> u32 {
    arith::valuation(order.conductor.unsigned_abs(), ell)
}

/// BFS from the seed, expanding vertices of depth up to depth_cap, with a
/// node budget. Every discovered vertex is labeled with its depth.
pub fn export_volcano(
    seed: &OrientedCurve,
    ell: u128,
    depth_cap: u32,
    node_budget: usize,
) -> Result<VolcanoGraph> {
    let mut nodes: BTreeMap<String, (ClassKey, i128, u32)> = BTreeMap::new();
    let mut edges: Vec<(String, String, Direction)> = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    let seed_key = enc(seed)?;
    let seed_id = node_id(&seed_key);
    nodes.insert(
        seed_id,
        (seed_key, seed.orientation.order.disc, depth_of(&seed.orientation.order, ell)),
    );
    queue.push_back(seed.clone());
    while let Some(cur) = queue.pop_front() {
        if nodes.len() >= node_budget {
            break;
        }
        // each vertex is expanded exactly once, so parallel edges found in
        // one census are genuine multiplicities and are all kept
        for edge in neighbors(&cur, ell)? {
            let tid = node_id(&edge.target);
            let sid = node_id(&edge.source);
            edges.push((sid, tid.clone(), edge.direction));
            if !nodes.contains_key(&tid) {
                let t_depth = depth_of(&edge.target_curve.orientation.order, ell);
                nodes.insert(
                    tid,
                    (edge.target.clone(), edge.target_curve.orientation.order.disc, t_depth),
                );
                let expand = match edge.direction {
                    Direction::Descending => t_depth <= depth_cap,
                    _ => true,
                };
                if expand && nodes.len() < node_budget {
                    queue.push_back(edge.target_curve.clone());
                }
            }
        }
    }
    Ok(VolcanoGraph { ell, nodes, edges })
}

impl VolcanoGraph {
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph volcano {\n");
        for (id, (_, disc, depth)) in &self.nodes {
            out.push_str(&format!(
                "  \"{id}\" [label=\"{id}\\ndisc={disc} depth={depth}\"];\n"
            ));
        }
        for (s, t, d) in &self.edges {
            out.push_str(&format!("  \"{s}\" -> \"{t}\" [dir=\"{}\"];\n", d.tag()));
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": "oriso/volcano/v1",
            "ell": self.ell.to_string(),
            "nodes": self.nodes.iter().map(|(id, (key, disc, depth))| serde_json::json!({
                "id": id,
                "key": key.hex(),
                "disc": disc.to_string(),
                "depth": depth,
            })).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|(s, t, d)| serde_json::json!({
                "source": s,
                "target": t,
                "dir": d.tag(),
            })).collect::<Vec<_>>(),
        })
    }
}
