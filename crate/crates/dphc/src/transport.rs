//! Exact optimal transport between small weighted point sets.
//!
//! The main entry point is [`wasserstein_distance`]: the order-1 Wasserstein
//! distance under Euclidean ground cost between the uniform empirical
//! measures on two point sets (sizes may differ; weights are fractional
//! uniform). Internally the measures are scaled to integer mass units and
//! the resulting transportation problem is solved to optimality by
//! successive shortest paths with node potentials, so flows stay integral
//! throughout.
//!
//! [`min_cost_transport_reference`] is an exhaustive reference solver that
//! enumerates every spanning-tree basis of the transportation polytope. It
//! exists to cross-check the main solver on tiny instances and is
//! exponential in the instance size.

use crate::affinity::euclidean;
use crate::error::{Error, Result};

/// An optimal transportation plan on integer mass units.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    /// Positive flows as `(source, sink, units)`.
    pub flows: Vec<(usize, usize, u64)>,
    /// Total cost: sum of `units * cost[source][sink]`.
    pub cost: f64,
}

/// Exact minimum-cost transportation with dense costs.
///
/// `cost` is row-major `na x nb` and must be finite and non-negative;
/// `supply` and `demand` are integer mass units with equal totals.
pub fn min_cost_transport(
    na: usize,
    nb: usize,
    cost: &[f64],
    supply: &[u64],
    demand: &[u64],
) -> Result<TransportPlan> {
    check_problem(na, nb, cost, supply, demand)?;
    let nodes = na + nb;
    let mut pot = vec![0.0f64; nodes];
    let mut flow = vec![0u64; na * nb];
    let mut s: Vec<u64> = supply.to_vec();
    let mut d: Vec<u64> = demand.to_vec();
    let mut left: u64 = s.iter().sum();

    while left > 0 {
        // Dijkstra over the residual graph with reduced costs. Node layout:
        // 0..na sources, na..na+nb sinks.
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev: Vec<Option<usize>> = vec![None; nodes];
        let mut done = vec![false; nodes];
        for i in 0..na {
            if s[i] > 0 {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut cur = None;
            let mut best = f64::INFINITY;
            for x in 0..nodes {
                if !done[x] && dist[x] < best {
                    best = dist[x];
                    cur = Some(x);
                }
            }
            let Some(x) = cur else { break };
            done[x] = true;
            if x < na {
                let i = x;
                for j in 0..nb {
                    let rc = (cost[i * nb + j] + pot[i] - pot[na + j]).max(0.0);
                    let cand = dist[x] + rc;
                    if cand < dist[na + j] {
                        dist[na + j] = cand;
                        prev[na + j] = Some(x);
                    }
                }
            } else {
                let j = x - na;
                for i in 0..na {
                    if flow[i * nb + j] > 0 {
                        let rc = (pot[na + j] - pot[i] - cost[i * nb + j]).max(0.0);
                        let cand = dist[x] + rc;
                        if cand < dist[i] {
                            dist[i] = cand;
                            prev[i] = Some(x);
                        }
                    }
                }
            }
        }

        let mut target = None;
        let mut best = f64::INFINITY;
        for j in 0..nb {
            if d[j] > 0 && dist[na + j] < best {
                best = dist[na + j];
                target = Some(na + j);
            }
        }
        let Some(t) = target else {
            return Err(Error::InvalidArgument(
                "transportation problem is disconnected".to_string(),
            ));
        };

        for x in 0..nodes {
            pot[x] += dist[x].min(dist[t]);
        }

        // Walk back to the multi-source start, find the bottleneck, augment.
        let mut path = vec![t];
        while let Some(p) = prev[*path.last().unwrap()] {
            path.push(p);
        }
        path.reverse(); // source .. t
        let src = path[0];
        let mut bottleneck = s[src].min(d[t - na]);
        for w in path.windows(2) {
            if w[0] >= na {
                // sink -> source residual edge, limited by existing flow
                let i = w[1];
                let j = w[0] - na;
                bottleneck = bottleneck.min(flow[i * nb + j]);
            }
        }
        debug_assert!(bottleneck > 0);
        for w in path.windows(2) {
            if w[0] < na {
                flow[w[0] * nb + (w[1] - na)] += bottleneck;
            } else {
                flow[w[1] * nb + (w[0] - na)] -= bottleneck;
            }
        }
        s[src] -= bottleneck;
        d[t - na] -= bottleneck;
        left -= bottleneck;
    }

    let mut flows = Vec::new();
    let mut total = 0.0;
    for i in 0..na {
        for j in 0..nb {
            let f = flow[i * nb + j];
            if f > 0 {
                flows.push((i, j, f));
                total += f as f64 * cost[i * nb + j];
            }
        }
    }
    Ok(TransportPlan { flows, cost: total })
}

/// Reference solver: enumerates all spanning-tree bases of the bipartite
/// transportation graph and returns the cheapest feasible basic solution.
/// Only usable for very small instances (`na * nb <= 20`).
pub fn min_cost_transport_reference(
    na: usize,
    nb: usize,
    cost: &[f64],
    supply: &[u64],
    demand: &[u64],
) -> Result<TransportPlan> {
    check_problem(na, nb, cost, supply, demand)?;
    let m = na * nb;
    if m > 20 {
        return Err(Error::InvalidArgument(
            "reference solver is exponential; instance too large".to_string(),
        ));
    }
    let k = na + nb - 1;
    let mut best: Option<TransportPlan> = None;
    for mask in 0u32..(1u32 << m) {
        if mask.count_ones() as usize != k {
            continue;
        }
        if let Some(plan) = solve_tree_basis(na, nb, cost, supply, demand, mask) {
            if best.as_ref().is_none_or(|b| plan.cost < b.cost) {
                best = Some(plan);
            }
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("no feasible basis".to_string()))
}

/// Solves the flow forced by a candidate tree basis, rejecting bases that
/// are cyclic or demand a negative flow.
fn solve_tree_basis(
    na: usize,
    nb: usize,
    cost: &[f64],
    supply: &[u64],
    demand: &[u64],
    mask: u32,
) -> Option<TransportPlan> {
    let nodes = na + nb;
    let mut edges = Vec::new();
    for i in 0..na {
        for j in 0..nb {
            if mask & (1 << (i * nb + j)) != 0 {
                edges.push((i, na + j));
            }
        }
    }
    let mut degree = vec![0usize; nodes];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for (e, &(a, b)) in edges.iter().enumerate() {
        degree[a] += 1;
        degree[b] += 1;
        incident[a].push(e);
        incident[b].push(e);
    }
    // Signed balance: + for supply still to ship, - for demand still owed.
    let mut balance: Vec<i128> = (0..nodes)
        .map(|x| {
            if x < na {
                supply[x] as i128
            } else {
                -(demand[x - na] as i128)
            }
        })
        .collect();
    let mut used = vec![false; edges.len()];
    let mut flow = vec![0i128; edges.len()];
    let mut leaves: Vec<usize> = (0..nodes).filter(|&x| degree[x] == 1).collect();
    let mut eliminated = 0usize;
    while let Some(x) = leaves.pop() {
        if degree[x] != 1 {
            continue;
        }
        let &e = incident[x].iter().find(|&&e| !used[e])?;
        let (a, b) = edges[e];
        let other = if a == x { b } else { a };
        // The leaf's whole remaining balance crosses its only edge.
        let f = if x < na { balance[x] } else { -balance[x] };
        if f < 0 {
            return None;
        }
        flow[e] = f;
        used[e] = true;
        balance[x] = 0;
        if x < na {
            balance[other] += f; // a sink receives
        } else {
            balance[other] -= f; // a source ships
        }
        degree[x] -= 1;
        degree[other] -= 1;
        eliminated += 1;
        if degree[other] == 1 {
            leaves.push(other);
        }
    }
    if eliminated != edges.len() {
        return None; // cycle: not a spanning tree
    }
    if balance.iter().any(|&b| b != 0) {
        return None;
    }
    let mut flows = Vec::new();
    let mut total = 0.0;
    for (e, &(a, b)) in edges.iter().enumerate() {
        if flow[e] > 0 {
            let i = a;
            let j = b - na;
            flows.push((i, j, flow[e] as u64));
            total += flow[e] as f64 * cost[i * nb + j];
        }
    }
    Some(TransportPlan { flows, cost: total })
}

fn check_problem(na: usize, nb: usize, cost: &[f64], supply: &[u64], demand: &[u64]) -> Result<()> {
    if na == 0 || nb == 0 {
        return Err(Error::EmptyPointSet);
    }
    if cost.len() != na * nb {
        return Err(Error::ShapeMismatch {
            expected: na * nb,
            got: cost.len(),
        });
    }
    if supply.len() != na {
        return Err(Error::ShapeMismatch {
            expected: na,
            got: supply.len(),
        });
    }
    if demand.len() != nb {
        return Err(Error::ShapeMismatch {
            expected: nb,
            got: demand.len(),
        });
    }
    for (k, &c) in cost.iter().enumerate() {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::NonFinite {
                row: k / nb,
                col: k % nb,
            });
        }
    }
    let total_s: u64 = supply.iter().sum();
    let total_d: u64 = demand.iter().sum();
    if total_s != total_d || total_s == 0 {
        return Err(Error::InvalidArgument(format!(
            "unbalanced transportation problem: supply {} vs demand {}",
            total_s, total_d
        )));
    }
    Ok(())
}

/// Exact 1-Wasserstein distance, Euclidean ground cost, between the uniform
/// empirical measures on two point sets in the same dimension.
pub fn wasserstein_distance<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: AsRef<[f64]>,
    B: AsRef<[f64]>,
{
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let dim = a[0].as_ref().len();
    for row in a
        .iter()
        .map(AsRef::as_ref)
        .chain(b.iter().map(AsRef::as_ref))
    {
        if row.len() != dim {
            return Err(Error::ShapeMismatch {
                expected: dim,
                got: row.len(),
            });
        }
    }
    let (na, nb) = (a.len(), b.len());
    let mut cost = vec![0.0f64; na * nb];
    for i in 0..na {
        for j in 0..nb {
            cost[i * nb + j] = euclidean(a[i].as_ref(), b[j].as_ref());
        }
    }
    // Uniform weights 1/na and 1/nb become integer units after scaling both
    // measures by na*nb.
    let supply = vec![nb as u64; na];
    let demand = vec![na as u64; nb];
    let plan = min_cost_transport(na, nb, &cost, &supply, &demand)?;
    Ok(plan.cost / (na as f64 * nb as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn points(rows: &[&[f64]]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn identical_sets_cost_zero() {
        let a = points(&[&[0.0, 1.0], &[2.0, 3.0], &[-1.0, 0.5]]);
        assert_eq!(wasserstein_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn singletons() {
        let a = points(&[&[0.0]]);
        let b = points(&[&[3.0]]);
        assert_eq!(wasserstein_distance(&a, &b).unwrap(), 3.0);
    }

    #[test]
    fn unit_square_pairs() {
        // {(0,0),(1,0)} vs {(0,1),(1,1)}: both plans cost 1 (matching
        // straight up) or sqrt(2) (crossed), so the optimum is 1.
        let a = points(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let b = points(&[&[0.0, 1.0], &[1.0, 1.0]]);
        let d = wasserstein_distance(&a, &b).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_set_rejected() {
        let a: Vec<Vec<f64>> = Vec::new();
        let b = points(&[&[0.0]]);
        assert_eq!(
            wasserstein_distance(&a, &b).unwrap_err(),
            Error::EmptyPointSet
        );
    }

    #[test]
    fn reference_agrees_on_hand_example() {
        // 2x3, uneven integer masses.
        let cost = vec![1.0, 4.0, 2.0, 3.0, 1.0, 5.0];
        let supply = vec![5, 7];
        let demand = vec![4, 6, 2];
        let fast = min_cost_transport(2, 3, &cost, &supply, &demand).unwrap();
        let slow = min_cost_transport_reference(2, 3, &cost, &supply, &demand).unwrap();
        assert!((fast.cost - slow.cost).abs() < 1e-9);
        // optimal: s0 -> (3 to c0, 2 to c2), s1 -> (1 to c0, 6 to c1):
        // 3*1 + 2*2 + 1*3 + 6*1 = 16
        assert!((fast.cost - 16.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn solver_matches_basis_enumeration(seed in any::<u64>()) {
            use rand::rngs::StdRng;
            use rand::{Rng, SeedableRng};
            let mut rng = StdRng::seed_from_u64(seed);
            let na = rng.random_range(1..5usize);
            let nb = rng.random_range(1..5usize);
            let cost: Vec<f64> =
                (0..na * nb).map(|_| rng.random_range(0.0..10.0)).collect();
            let supply: Vec<u64> = (0..na).map(|_| rng.random_range(1..6)).collect();
            let total: u64 = supply.iter().sum();
            // random demand composition of the same total
            let mut demand = vec![0u64; nb];
            for _ in 0..total {
                demand[rng.random_range(0..nb)] += 1;
            }
            if demand.contains(&0) {
                // keep every sink active so the basis count matches
                for d in demand.iter_mut() {
                    *d += 1;
                }
                let extra = nb as u64;
                let mut supply = supply.clone();
                supply[0] += extra;
                let fast = min_cost_transport(na, nb, &cost, &supply, &demand).unwrap();
                let slow =
                    min_cost_transport_reference(na, nb, &cost, &supply, &demand).unwrap();
                prop_assert!((fast.cost - slow.cost).abs() < 1e-9 * (1.0 + slow.cost));
            } else {
                let fast = min_cost_transport(na, nb, &cost, &supply, &demand).unwrap();
                let slow =
                    min_cost_transport_reference(na, nb, &cost, &supply, &demand).unwrap();
                prop_assert!((fast.cost - slow.cost).abs() < 1e-9 * (1.0 + slow.cost));
            }
        }

        #[test]
        fn wasserstein_metric_properties(seed in any::<u64>()) {
            use rand::rngs::StdRng;
            use rand::{Rng, SeedableRng};
            let mut rng = StdRng::seed_from_u64(seed);
            let dim = rng.random_range(1..4usize);
            let gen = |rng: &mut StdRng, k: usize| -> Vec<Vec<f64>> {
                (0..k)
                    .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
                    .collect()
            };
            let ka = rng.random_range(1..5);
            let a = gen(&mut rng, ka);
            let kb = rng.random_range(1..5);
            let b = gen(&mut rng, kb);
            let kc = rng.random_range(1..5);
            let c = gen(&mut rng, kc);
            let dab = wasserstein_distance(&a, &b).unwrap();
            let dba = wasserstein_distance(&b, &a).unwrap();
            prop_assert!(dab >= 0.0);
            prop_assert!((dab - dba).abs() < 1e-9);
            prop_assert!(wasserstein_distance(&a, &a).unwrap() < 1e-12);
            let dac = wasserstein_distance(&a, &c).unwrap();
            let dcb = wasserstein_distance(&c, &b).unwrap();
            prop_assert!(dab <= dac + dcb + 1e-9);
        }
    }
}
