//! Outer polyblock approximation: the globally optimal solver.
//!
//! The feasible rate region is a normal set, so its optimum over an
//! increasing objective sits on the boundary. Starting from the single-box
//! polyblock spanned by the full-power vertex, each iteration projects the
//! most promising vertex onto the region (a Dinkelbach run per candidate
//! schedule, see [`crate::projection`]), replaces that vertex with up to D
//! children obtained by lowering one coordinate to its projection value, and
//! keeps the best achieved allocation as incumbent. Termination follows the
//! relative vertex-to-projection distance ||z - Phi(z)|| / ||z|| <= epsilon;
//! the loop also stops early when the certified bound max_V sum chi_d log2
//! z_d closes onto the incumbent.
//!
//! Two prunings keep the vertex set small, neither affecting correctness:
//! vertices whose bound cannot beat the incumbent are dropped, and
//! componentwise-dominated vertices are swept periodically. The incumbent is
//! strengthened after each selection by the schedule-fixed power refinement
//! ([`crate::refine`]), warm-started at the projecting allocation.

use crate::error::Result;
use crate::metrics::SolveStatus;
use crate::projection::ProjectionEngine;
use crate::refine::refine_power;
use crate::trace::{CollectSink, TraceEvent, TraceSink};
use crate::tuples::Schedule;
use crate::zspace::ZSpace;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct PolyblockOptions {
    /// Relative termination tolerance on ||z - Phi(z)|| / ||z||.
    pub epsilon: f64,
    /// Dinkelbach termination tolerance.
    pub delta: f64,
    pub max_outer_iters: usize,
}

#[derive(Debug, Clone)]
pub struct PolyblockOutcome {
    /// Best achieved allocation: (entry index, slot powers) per subcarrier.
    pub picks: Vec<(usize, Vec<f64>)>,
    /// True weighted objective of `picks` in the space's model.
    pub objective: f64,
    /// Final certified upper bound over the remaining polyblock.
    pub upper_bound: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Projection of the final selected vertex (the z* of the recovery step).
    pub z_star: Vec<f64>,
    pub final_lambda: f64,
}

struct Vertex {
    z: Vec<f64>,
    lambda: f64,
    picks: Vec<(usize, Vec<f64>)>,
    /// Selection metric: sum chi_d log2(phi_d).
    phi_value: f64,
    /// Box bound: sum chi_d log2(z_d).
    ub: f64,
    seq: usize,
}

/// Children of a vertex: one per coordinate, lowering z_d to the projection
/// value (clamped at 1, coordinates below 1 carry no feasible point).
pub fn expand_vertex(z: &[f64], phi: &[f64]) -> Vec<Vec<f64>> {
    (0..z.len())
        .map(|d| {
            let mut child = z.to_vec();
            child[d] = phi[d].max(1.0);
            child
        })
        .collect()
}

/// Schedule recovery from an optimal point: a tuple is active when all of
/// its quadrant values exceed 1 + threshold; if several qualify on one
/// subcarrier, the largest weighted log contribution wins.
pub fn recover_schedule(zs: &ZSpace, z: &[f64], threshold: f64) -> Schedule {
    let mut sched = Schedule::empty(zs.dims.n_sc);
    let mut best: Vec<Option<(f64, usize)>> = vec![None; zs.dims.n_sc];
    for (idx, e) in zs.entries.iter().enumerate() {
        let all_above =
            (0..zs.n_quadrants).all(|q| z[zs.coord(q, idx)] > 1.0 + threshold);
        if !all_above {
            continue;
        }
        let contribution: f64 = (0..zs.n_quadrants)
            .map(|q| e.chi[q] * z[zs.coord(q, idx)].log2())
            .sum();
        let sc = e.tuple.i - 1;
        if best[sc].is_none_or(|(v, _)| contribution > v) {
            best[sc] = Some((contribution, idx));
        }
    }
    for slot in best.into_iter().flatten() {
        sched.set(zs.entries[slot.1].tuple).expect("entry subcarrier in range");
    }
    sched
}

/// Monotone-interval bound of a weighted two-term split:
/// max over b of w1 log2(min(zc1, 1 + g1 a/(1 + g2 b))) + w2 log2(min(zc2, 1 + g2 b))
/// with a at its cap (or cap1 - b when the slots share a budget). The first
/// term decreases and the second increases in b, so evaluating them at
/// opposite interval endpoints upper-bounds every point inside.
fn split_bound(
    w1: f64,
    w2: f64,
    g1: f64,
    g2: f64,
    cap1: f64,
    cap2: f64,
    shared: bool,
    zc1: f64,
    zc2: f64,
) -> f64 {
    if (w1 == 0.0 || zc1 <= 1.0) && (w2 == 0.0 || zc2 <= 1.0) {
        return 0.0;
    }
    const N_IV: usize = 48;
    let mut bound = 0.0f64;
    let mut b1 = 0.0;
    for k in 0..=N_IV {
        let b2 = if k == N_IV {
            cap2
        } else {
            cap2 * 10f64.powf(-6.0 * (1.0 - k as f64 / N_IV as f64))
        };
        let a = if shared { (cap1 - b1).max(0.0) } else { cap1 };
        let r1 = (1.0 + g1 * a / (1.0 + g2 * b1)).min(zc1);
        let r2 = (1.0 + g2 * b2).min(zc2);
        let t1 = if w1 > 0.0 && r1 > 1.0 { w1 * r1.log2() } else { 0.0 };
        let t2 = if w2 > 0.0 && r2 > 1.0 { w2 * r2.log2() } else { 0.0 };
        bound = bound.max(t1 + t2);
        b1 = b2;
    }
    bound
}

/// Valid upper bound on one tuple's utility within the box [1, z_caps]:
/// cross-direction interference is dropped (it only lowers the terms) and
/// each direction's power split is bounded by [`split_bound`]; every ratio
/// is additionally capped by its vertex coordinate.
fn tuple_bound_capped(zs: &ZSpace, idx: usize, zc: &[f64; 4]) -> f64 {
    let e = &zs.entries[idx];
    match zs.kind {
        crate::zspace::SpaceKind::Fd => {
            let h_m = e.forms[0].f[0];
            let h_n = e.forms[1].f[1];
            let g_r = e.forms[2].f[2];
            let g_t = e.forms[2].f[3];
            let dl = split_bound(
                e.chi[0], e.chi[1], h_m, h_n, zs.p_max_dl, zs.p_max_dl, true, zc[0], zc[1],
            );
            let shared_ul = e.tuple.r == e.tuple.t;
            let cap_t = if shared_ul { e.slot_cap[2] } else { e.slot_cap[3] };
            let ul = split_bound(
                e.chi[2], e.chi[3], g_r, g_t, e.slot_cap[2], cap_t, shared_ul, zc[2], zc[3],
            );
            dl + ul
        }
        crate::zspace::SpaceKind::DlOnly => {
            let h_m = e.forms[0].f[0];
            let h_n = e.forms[1].f[1];
            split_bound(e.chi[0], e.chi[1], h_m, h_n, zs.p_max_dl, zs.p_max_dl, true, zc[0], zc[1])
        }
        crate::zspace::SpaceKind::UlOnly => {
            let g_r = e.forms[0].f[0];
            let g_t = e.forms[0].f[1];
            let shared = e.tuple.r == e.tuple.t;
            let cap_t = if shared { e.slot_cap[0] } else { e.slot_cap[1] };
            split_bound(e.chi[0], e.chi[1], g_r, g_t, e.slot_cap[0], cap_t, shared, zc[0], zc[1])
        }
    }
}

/// Valid objective bound of the box [1, z] that honors the schedule
/// structure: per subcarrier only one tuple can be active, and each tuple's
/// contribution is bounded by its interference-free budget split capped at
/// the vertex coordinates.
pub fn schedule_bound(zs: &ZSpace, z: &[f64]) -> f64 {
    let mut total = 0.0;
    for list in &zs.by_subcarrier {
        let mut best = 0.0f64;
        for &idx in list {
            let mut zc = [f64::INFINITY; 4];
            for q in 0..zs.n_quadrants {
                zc[q] = z[zs.coord(q, idx)];
            }
            best = best.max(tuple_bound_capped(zs, idx, &zc));
        }
        total += best;
    }
    total
}

/// Deterministic starting incumbent: per subcarrier, refine each allowed
/// tuple alone (full budgets) and keep the best; then refine the combined
/// schedule jointly under the shared budgets.
fn greedy_seed(zs: &ZSpace) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut combined = Vec::new();
    for list in &zs.by_subcarrier {
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for &idx in list {
            let start = vec![(idx, vec![0.0; zs.n_slots])];
            let refined = refine_power(zs, &start, 1e-7)?;
            let value = zs.pick_objective(&refined);
            if best.as_ref().is_none_or(|(v, _, _)| value > *v) {
                best = Some((value, idx, refined[0].1.clone()));
            }
        }
        if let Some((value, idx, slots)) = best {
            if value > 0.0 {
                combined.push((idx, slots));
            }
        }
    }
    refine_power(zs, &combined, 1e-9)
}

/// Result of one core loop run.
struct CoreOutcome {
    picks: Vec<(usize, Vec<f64>)>,
    objective: f64,
    upper_bound: f64,
    iterations: usize,
    certified: bool,
    z_star: Vec<f64>,
    final_lambda: f64,
}

/// The Algorithm-1 loop on one space, starting from a given incumbent.
/// Stops on the epsilon criterion, on certified-gap closure, on the
/// iteration budget, or after `stall_limit` iterations without progress in
/// either the incumbent or the bound (the caller then certifies by other
/// means). `certified` reports whether optimality was established.
fn core_loop(
    zs: &ZSpace,
    opts: &PolyblockOptions,
    trace: &dyn TraceSink,
    seed_picks: Vec<(usize, Vec<f64>)>,
    stall_limit: usize,
) -> Result<CoreOutcome> {
    let engine = ProjectionEngine::new(zs, opts.delta)?;
    let chi = zs.chi_vec();

    let make_vertex = |z: Vec<f64>, lambda: f64, picks: Vec<(usize, Vec<f64>)>, seq: usize| {
        let ub = schedule_bound(zs, &z);
        // Line-5 metric: the problem objective at the projection lambda*z.
        // Coordinates below 1 are outside the objective's domain and carry
        // no throughput, so they clip to 1.
        let phi_value: f64 = chi
            .iter()
            .zip(&z)
            .map(|(&c, &v)| {
                let phi = (lambda * v).max(1.0);
                if c > 0.0 {
                    c * phi.log2()
                } else {
                    0.0
                }
            })
            .sum();
        Vertex { z, lambda, picks, phi_value, ub, seq }
    };

    let mut incumbent_picks = seed_picks;
    let mut incumbent = zs.pick_objective(&incumbent_picks).max(0.0);

    let z0 = zs.z_init();
    let p0 = engine.project(&z0, trace)?;
    let seeded = refine_power(zs, &p0.best_picks, 1e-9)?;
    let seeded_value = zs.pick_objective(&seeded);
    if seeded_value > incumbent {
        incumbent = seeded_value;
        incumbent_picks = seeded;
    }
    let mut z_star = p0.phi.clone();
    let mut final_lambda = p0.lambda;
    let mut vertices = vec![make_vertex(z0, p0.lambda, p0.picks, 0)];
    let mut seq = 1;
    let mut certified = false;
    let mut iterations = 0;
    let mut upper_bound = vertices[0].ub;
    let mut last_progress = 0usize;
    let mut best_lambda_seen = p0.lambda.min(1.0);
    let gap_tol = |inc: f64| 1e-7 * (1.0 + inc.abs());

    while iterations < opts.max_outer_iters {
        iterations += 1;
        // Bound pruning.
        vertices.retain(|v| v.ub > incumbent + 1e-12);
        if vertices.is_empty() {
            certified = true;
            upper_bound = incumbent;
            break;
        }
        if iterations % 64 == 0 && vertices.len() <= 1024 {
            dominance_prune(&mut vertices);
        }
        // Termination check on the vertex closest to its projection: once
        // any vertex satisfies ||z - Phi(z)||/||z|| <= epsilon the loop may
        // stop there.
        let mut close_idx = 0;
        for (i, v) in vertices.iter().enumerate() {
            let b = &vertices[close_idx];
            if v.lambda > b.lambda || (v.lambda == b.lambda && v.seq < b.seq) {
                close_idx = i;
            }
        }
        if 1.0 - vertices[close_idx].lambda.min(1.0) <= opts.epsilon {
            let v = vertices.swap_remove(close_idx);
            let polished = refine_power(zs, &v.picks, 1e-9)?;
            let value = zs.pick_objective(&polished);
            if value > incumbent {
                incumbent = value;
                incumbent_picks = polished;
            }
            z_star = v.z.iter().map(|&c| v.lambda * c).collect();
            final_lambda = v.lambda;
            upper_bound = vertices.iter().map(|w| w.ub).fold(v.ub, f64::max);
            certified = true;
            trace.record(&TraceEvent::PolyblockIter {
                k: iterations,
                vertices: vertices.len() + 1,
                incumbent,
                gap: (upper_bound - incumbent).max(0.0),
            });
            break;
        }
        // Selection alternates between the line-5 metric (best projected
        // objective, pushes lambda toward 1) and the largest bound (closes
        // the certified gap); ties go to the oldest vertex.
        let by_bound = iterations % 2 == 0;
        let mut best_idx = 0;
        for (i, v) in vertices.iter().enumerate() {
            let b = &vertices[best_idx];
            let (va, ba) = if by_bound { (v.ub, b.ub) } else { (v.phi_value, b.phi_value) };
            if va > ba || (va == ba && v.seq < b.seq) {
                best_idx = i;
            }
        }
        let selected = vertices.swap_remove(best_idx);
        let new_ub = vertices.iter().map(|v| v.ub).fold(selected.ub, f64::max);
        if new_ub < upper_bound - 1e-12 {
            last_progress = iterations;
        }
        upper_bound = new_ub;

        // Strengthen the incumbent from the selected projection when it is
        // competitive (or periodically, as a refresher).
        let raw_selected = zs.pick_objective(&selected.picks);
        if raw_selected > 0.9 * incumbent || iterations % 20 == 0 {
            let polished = refine_power(zs, &selected.picks, 1e-9)?;
            let polished_value = zs.pick_objective(&polished);
            if polished_value > incumbent + 1e-12 {
                incumbent = polished_value;
                incumbent_picks = polished;
                last_progress = iterations;
            }
        }
        z_star = selected.z.iter().map(|&v| selected.lambda * v).collect();
        final_lambda = selected.lambda;
        if selected.lambda.min(1.0) > best_lambda_seen + 1e-4 {
            best_lambda_seen = selected.lambda.min(1.0);
            last_progress = iterations;
        }

        // Paper termination: relative distance between vertex and projection.
        let dist: f64 = selected
            .z
            .iter()
            .zip(&z_star)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = selected.z.iter().map(|a| a * a).sum::<f64>().sqrt();
        let ratio = if norm > 0.0 { dist / norm } else { 0.0 };
        if std::env::var_os("POLY_DEBUG").is_some() && iterations % 25 == 0 {
            eprintln!(
                "  dbg k={iterations} lambda={:.5} ratio={ratio:.5} ub={upper_bound:.4} inc={incumbent:.4} V={}",
                selected.lambda,
                vertices.len()
            );
        }
        let gap_closed = upper_bound - incumbent <= gap_tol(incumbent);
        if ratio <= opts.epsilon || gap_closed {
            certified = true;
            trace.record(&TraceEvent::PolyblockIter {
                k: iterations,
                vertices: vertices.len() + 1,
                incumbent,
                gap: (upper_bound - incumbent).max(0.0),
            });
            break;
        }
        if iterations.saturating_sub(last_progress) > stall_limit {
            // No movement on either side of the sandwich; hand control back
            // for schedule-wise certification.
            vertices.push(selected);
            break;
        }

        // Expansion: shrink each coordinate that has room, then project the
        // surviving children in parallel (deterministic order and sums).
        let phi = &z_star;
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        for d in 0..selected.z.len() {
            let target = phi[d].max(1.0);
            if selected.z[d] - target > 1e-12 {
                let mut child = selected.z.clone();
                child[d] = target;
                candidates.push(child);
            }
        }
        let surviving: Vec<Vec<f64>> = candidates
            .into_iter()
            .filter(|child| schedule_bound(zs, child) > incumbent + 1e-12)
            .collect();
        let projected: Vec<(Vec<f64>, crate::projection::Projection, Vec<TraceEvent>)> = surviving
            .into_par_iter()
            .map(|child| {
                let sink = CollectSink::new();
                let proj = engine.project(&child, &sink)?;
                Ok((child, proj, sink.take()))
            })
            .collect::<Result<Vec<_>>>()?;
        for (child, proj, events) in projected {
            for ev in &events {
                trace.record(ev);
            }
            // Lift raw improvements to local tightness before adopting.
            if proj.best_value > incumbent {
                let polished = refine_power(zs, &proj.best_picks, 1e-9)?;
                let value = zs.pick_objective(&polished).max(proj.best_value);
                if value > incumbent + 1e-12 {
                    incumbent = value;
                    incumbent_picks = if value > proj.best_value {
                        polished
                    } else {
                        proj.best_picks.clone()
                    };
                    last_progress = iterations;
                }
            }
            vertices.push(make_vertex(child, proj.lambda, proj.picks, seq));
            seq += 1;
        }
        trace.record(&TraceEvent::PolyblockIter {
            k: iterations,
            vertices: vertices.len(),
            incumbent,
            gap: (upper_bound - incumbent).max(0.0),
        });
    }

    Ok(CoreOutcome {
        picks: incumbent_picks,
        objective: incumbent,
        upper_bound: upper_bound.max(incumbent),
        iterations,
        certified,
        z_star,
        final_lambda,
    })
}

/// Static tuple bound (no vertex caps).
fn tuple_upper_bound(zs: &ZSpace, idx: usize) -> f64 {
    tuple_bound_capped(zs, idx, &[f64::INFINITY; 4])
}

/// Runs the outer approximation on one vertex space.
///
/// The joint Algorithm-1 loop usually certifies on its own (epsilon rule or
/// gap closure). When vertex coordinates share values across tuples the
/// single-coordinate cuts stop making progress; optimality is then
/// established by sweeping the maximal schedules, solving each restriction
/// with the same machinery and pruning against the shared incumbent. Either
/// way the returned objective is achieved by a feasible allocation and
/// `upper_bound` is a valid bound on the optimum.
pub fn polyblock_optimize(
    zs: &ZSpace,
    opts: &PolyblockOptions,
    trace: &dyn TraceSink,
) -> Result<PolyblockOutcome> {
    let seed = greedy_seed(zs)?;
    let joint = core_loop(zs, opts, trace, seed, 30)?;
    let mut picks = joint.picks;
    let mut objective = joint.objective;
    let mut iterations = joint.iterations;
    let mut upper_bound = joint.upper_bound;
    let gap_tol = 1e-7 * (1.0 + objective.abs());

    if joint.certified {
        return Ok(PolyblockOutcome {
            picks,
            objective,
            upper_bound,
            iterations,
            status: SolveStatus::Optimal,
            z_star: joint.z_star,
            final_lambda: joint.final_lambda,
        });
    }

    // Schedule-wise certification: enumerate the maximal tuple selections
    // (best bounds first), prune against the incumbent, and solve the rest
    // on their restricted spaces.
    let mut sigmas: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut cursor: Vec<usize> = vec![0; zs.dims.n_sc];
    loop {
        let mut keep = Vec::new();
        let mut bound = 0.0;
        for (i, list) in zs.by_subcarrier.iter().enumerate() {
            if !list.is_empty() {
                let idx = list[cursor[i]];
                keep.push(idx);
                bound += tuple_upper_bound(zs, idx);
            }
        }
        sigmas.push((bound, keep));
        let mut pos = zs.dims.n_sc;
        let mut done = true;
        while pos > 0 {
            pos -= 1;
            if zs.by_subcarrier[pos].is_empty() {
                continue;
            }
            if cursor[pos] + 1 < zs.by_subcarrier[pos].len() {
                cursor[pos] += 1;
                for c in cursor.iter_mut().skip(pos + 1) {
                    *c = 0;
                }
                done = false;
                break;
            }
            cursor[pos] = 0;
        }
        if done {
            break;
        }
    }
    sigmas.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut all_certified = true;
    let mut residual_bound = objective;
    let budget = opts.max_outer_iters;
    let n_sigmas = sigmas.len();
    let mut solved = 0usize;
    for (bound, keep) in sigmas {
        if bound <= objective + gap_tol {
            continue; // pruned: this schedule cannot beat the incumbent
        }
        solved += 1;
        let restricted = zs.restrict_to(&keep);
        let sub = core_loop(
            &restricted,
            &PolyblockOptions { max_outer_iters: budget, ..opts.clone() },
            trace,
            picks_intersect(&picks, &keep),
            200,
        )?;
        iterations += sub.iterations;
        if sub.objective > objective {
            objective = sub.objective;
            picks = sub.picks;
        }
        residual_bound = residual_bound.max(sub.upper_bound.min(bound));
        all_certified &= sub.certified;
        if std::env::var_os("POLY_DEBUG").is_some() {
            eprintln!(
                "  sweep sigma {solved}/{n_sigmas}: bound {bound:.3} -> sub obj {:.4} iters {} cert {}",
                sub.objective, sub.iterations, sub.certified
            );
        }
    }
    upper_bound = upper_bound.min(residual_bound.max(objective));

    let status = if all_certified { SolveStatus::Optimal } else { SolveStatus::IterationCap };
    Ok(PolyblockOutcome {
        picks,
        objective,
        upper_bound,
        iterations,
        status,
        z_star: joint.z_star,
        final_lambda: joint.final_lambda,
    })
}

/// Keeps only the picks whose entries appear in the restriction.
fn picks_intersect(picks: &[(usize, Vec<f64>)], keep: &[usize]) -> Vec<(usize, Vec<f64>)> {
    picks.iter().filter(|(e, _)| keep.contains(e)).cloned().collect()
}

fn dominance_prune(vertices: &mut Vec<Vertex>) {
    let mut keep = vec![true; vertices.len()];
    for a in 0..vertices.len() {
        if !keep[a] {
            continue;
        }
        for b in 0..vertices.len() {
            if a == b || !keep[b] {
                continue;
            }
            // Drop a when dominated by b (ties resolved toward lower seq).
            let dominated = vertices[a]
                .z
                .iter()
                .zip(&vertices[b].z)
                .all(|(x, y)| x <= y)
                && (vertices[a].z != vertices[b].z || vertices[a].seq > vertices[b].seq);
            if dominated {
                keep[a] = false;
                break;
            }
        }
    }
    let mut it = keep.iter();
    vertices.retain(|_| *it.next().unwrap());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ProblemInstance;
    use crate::trace::{CollectSink, NullSink};
    use crate::tuples::Dims;

    fn one_tuple() -> ProblemInstance {
        ProblemInstance::from_parts(
            Dims::new(1, 1, 1),
            vec![2.0],
            vec![1.5],
            vec![0.4],
            vec![0.6],
            vec![1.0],
            vec![1.0],
            2.0,
            vec![1.0],
            0.5,
        )
        .unwrap()
    }

    fn opts() -> PolyblockOptions {
        PolyblockOptions { epsilon: 0.01, delta: 0.01, max_outer_iters: 2000 }
    }

    #[test]
    fn expansion_examples() {
        // Phi(z) = z: every child equals the parent.
        let z = vec![2.0, 3.0];
        let same = expand_vertex(&z, &z);
        assert_eq!(same, vec![vec![2.0, 3.0], vec![2.0, 3.0]]);

        let children = expand_vertex(&[3.0, 3.0], &[2.0, 2.0]);
        assert_eq!(children, vec![vec![2.0, 3.0], vec![3.0, 2.0]]);
    }

    #[test]
    fn expansion_children_bracketed_by_projection_and_parent() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.gen_range(2..8);
            let z: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..5.0)).collect();
            let lambda: f64 = rng.gen_range(0.2..1.0);
            let phi: Vec<f64> = z.iter().map(|v| lambda * v).collect();
            for child in expand_vertex(&z, &phi) {
                for d in 0..n {
                    assert!(child[d] <= z[d] + 1e-15);
                    assert!(child[d] >= phi[d] - 1e-15);
                }
            }
        }
    }

    #[test]
    fn recover_examples() {
        let inst = one_tuple();
        let zs = ZSpace::fd(&inst, false);
        // All ones: nothing recovered.
        let empty = recover_schedule(&zs, &vec![1.0; 4], 1e-6);
        assert!(empty.is_empty());
        // All four quadrants at 2: the tuple activates.
        let active = recover_schedule(&zs, &vec![2.0; 4], 1e-6);
        assert_eq!(active.iter_active().count(), 1);
    }

    #[test]
    fn recover_prefers_larger_contribution() {
        let inst = ProblemInstance::from_parts(
            Dims::new(1, 2, 1),
            vec![1.0, 2.0],
            vec![1.0],
            vec![0.1, 0.1],
            vec![0.1],
            vec![1.0, 1.0],
            vec![1.0],
            2.0,
            vec![1.0],
            0.5,
        )
        .unwrap();
        let zs = ZSpace::fd(&inst, false);
        let mut z = vec![1.0; zs.coord_count()];
        // Activate two tuples with different contributions.
        let weak = 0usize;
        let strong = 3usize;
        for q in 0..4 {
            z[zs.coord(q, weak)] = 1.5;
            z[zs.coord(q, strong)] = 2.5;
        }
        let sched = recover_schedule(&zs, &z, 1e-6);
        assert_eq!(sched.iter_active().count(), 1);
        assert_eq!(*sched.on(1).unwrap(), zs.entries[strong].tuple);
    }

    #[test]
    fn single_dl_user_full_power_optimum() {
        // One DL user, zero UL weight: optimum log2(1 + H*P).
        let inst = ProblemInstance::from_parts(
            Dims::new(1, 1, 1),
            vec![3.0],
            vec![1.0],
            vec![0.2],
            vec![0.4],
            vec![1.0],
            vec![0.0],
            2.0,
            vec![1.0],
            0.5,
        )
        .unwrap();
        let zs = ZSpace::fd(&inst, false);
        let out = polyblock_optimize(&zs, &opts(), &NullSink).unwrap();
        let expect = (1.0 + 3.0 * 2.0f64).log2();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!(
            (out.objective - expect).abs() < 1e-4,
            "objective {} vs closed form {expect}",
            out.objective
        );
    }

    #[test]
    fn single_tuple_matches_power_grid() {
        // Grid brute force over the four slot powers.
        let inst = one_tuple();
        let zs = ZSpace::fd(&inst, false);
        let out = polyblock_optimize(&zs, &opts(), &NullSink).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);

        let entry = &zs.entries[0];
        let steps = 56;
        let mut best = 0.0f64;
        for a in 0..=steps {
            for b in 0..=(steps - a) {
                for c in 0..=steps {
                    for d in 0..=(steps - c) {
                        let x = [
                            inst.p_max_dl * a as f64 / steps as f64,
                            inst.p_max_dl * b as f64 / steps as f64,
                            inst.p_max_ul[0] * c as f64 / steps as f64,
                            inst.p_max_ul[0] * d as f64 / steps as f64,
                        ];
                        best = best.max(entry.utility(&x));
                    }
                }
            }
        }
        assert!(
            out.objective >= best - 1e-6,
            "polyblock {} below grid {best}",
            out.objective
        );
        assert!(
            best >= out.objective * (1.0 - 0.01),
            "grid {best} too far below polyblock {}",
            out.objective
        );
        // Sandwich: bound above, incumbent below.
        assert!(out.upper_bound >= out.objective - 1e-9);
    }

    #[test]
    fn incumbent_sequence_is_monotone() {
        let inst = one_tuple();
        let zs = ZSpace::fd(&inst, false);
        let sink = CollectSink::new();
        polyblock_optimize(&zs, &opts(), &sink).unwrap();
        let mut last = f64::NEG_INFINITY;
        let mut iters = 0;
        for ev in sink.take() {
            if let TraceEvent::PolyblockIter { incumbent, k, .. } = ev {
                assert!(incumbent >= last - 1e-12);
                last = incumbent;
                iters = iters.max(k);
            }
        }
        assert!(iters >= 1);
    }

    #[test]
    fn recovered_solution_is_feasible() {
        use crate::objective::check_feasibility;
        let inst = one_tuple();
        let zs = ZSpace::fd(&inst, false);
        let out = polyblock_optimize(&zs, &opts(), &NullSink).unwrap();
        let (sched, alloc) = zs.assemble(&out.picks).unwrap();
        let report = check_feasibility(&inst, &sched, &alloc);
        assert!(report.feasible, "{report:?}");
    }
}
