//! Artifact writers: CSV tables and JSON summaries with stable column sets.
//!
//! All numbers are printed in shortest round-trip form, so identical inputs
//! produce byte-identical artifacts. Writers return strings; callers own the
//! file handling.

use crate::analysis::{ConvergenceTable, OptimizationResult};
use crate::mesh::{Mesh, SegmentTag};
use crate::scalar::Real;
use serde::Serialize;
use std::fmt::Write as _;

/// Version stamped into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Shortest round-trip decimal form of one number.
pub fn fmt_num<T: Real>(v: T) -> String {
    format!("{v:?}")
}

/// Nodal primal field as CSV: `node,x,y,u`, one row per mesh node in node
/// order.
pub fn solution_u_csv<T: Real>(mesh: &Mesh<T>, u: &[T]) -> String {
    assert_eq!(u.len(), mesh.num_nodes(), "primal field length");
    let mut out = String::from("node,x,y,u\n");
    for (i, (p, &v)) in mesh.nodes.iter().zip(u).enumerate() {
        let _ = writeln!(
            out,
            "{i},{},{},{}",
            fmt_num(p[0]),
            fmt_num(p[1]),
            fmt_num(v)
        );
    }
    out
}

/// Contact multiplier as CSV: `edge,arc_start,length,lambda`, one row per
/// contact edge in trace order; `arc_start` is the arc-length coordinate of
/// the edge start along the contact segment.
pub fn solution_lambda_csv<T: Real>(mesh: &Mesh<T>, lam: &[T]) -> String {
    let edges = mesh.trace_edges(SegmentTag::G3);
    assert_eq!(lam.len(), edges.len(), "multiplier length");
    let mut out = String::from("edge,arc_start,length,lambda\n");
    for (e, (edge, &v)) in edges.iter().zip(lam).enumerate() {
        let s0 = mesh
            .arc_coord(SegmentTag::G3, edge.nodes[0])
            .min(mesh.arc_coord(SegmentTag::G3, edge.nodes[1]));
        let _ = writeln!(
            out,
            "{e},{},{},{}",
            fmt_num(s0),
            fmt_num(edge.length),
            fmt_num(v)
        );
    }
    out
}

/// Convergence study as CSV: one row per instance with the perturbed data,
/// the primal gap, the five probe pairing gaps, the diagnostic multiplier
/// norm gap and the per-instance solver effort.
pub fn convergence_csv<T: Real>(table: &ConvergenceTable<T>) -> String {
    let mut out = String::from(
        "n,f0,f1,theta,g,primal_gap,pairing_gap_1,pairing_gap_2,pairing_gap_3,\
         pairing_gap_4,pairing_gap_5,multiplier_norm_gap,uzawa_iters,\
         newton_iters_total,final_residual\n",
    );
    for row in &table.rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            row.n,
            fmt_num(row.f_coeffs[0]),
            fmt_num(row.f_coeffs[1]),
            fmt_num(row.theta),
            fmt_num(row.g),
            fmt_num(row.primal_gap)
        );
        for &p in &row.pairing_gaps {
            let _ = write!(out, ",{}", fmt_num(p));
        }
        let _ = writeln!(
            out,
            ",{},{},{},{}",
            fmt_num(row.multiplier_norm_gap),
            row.uzawa_iters,
            row.newton_iters_total,
            fmt_num(row.final_residual)
        );
    }
    out
}

/// Optimization trace as CSV: one row per forward-solve evaluation,
/// `evaluation,p0..p{d-1},cost,solved`.
pub fn optimization_csv<T: Real>(result: &OptimizationResult<T>) -> String {
    let dim = result.p_star.len();
    let mut out = String::from("evaluation");
    for k in 0..dim {
        let _ = write!(out, ",p{k}");
    }
    out.push_str(",cost,solved\n");
    for (i, e) in result.trace.iter().enumerate() {
        let _ = write!(out, "{i}");
        for &x in &e.p {
            let _ = write!(out, ",{}", fmt_num(x));
        }
        let _ = writeln!(out, ",{},{}", fmt_num(e.cost), e.solved);
    }
    out
}

/// Pretty JSON with a trailing newline. Field order follows struct
/// declaration order, so identical payloads serialize identically.
pub fn json_summary<S: Serialize>(payload: &S) -> String {
    let mut s = serde_json::to_string_pretty(payload).expect("JSON serialization");
    s.push('\n');
    s
}
