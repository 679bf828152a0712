//! Max-profit transportation, used as the continuous relaxation bound of the
//! allocation search.

const FLOW_EPS: f64 = 1e-12;

struct Edge {
    to: usize,
    cap: f64,
    cost: f64,
}

/// Maximizes `sum profit[c][s] * y[c][s]` subject to row sums `<= supply[c]`,
/// column sums `<= capacity[s]` and `y >= 0`. Non-positive or non-finite
/// profits mark arcs that are never used.
pub(crate) fn max_profit(supply: &[f64], capacity: &[f64], profit: &[Vec<f64>]) -> f64 {
    let m = supply.len();
    let k = capacity.len();
    if m == 0 || k == 0 {
        return 0.0;
    }
    // Single source row or column: a greedy fill is optimal.
    if m == 1 {
        return fill_greedy(supply[0], capacity, &profit[0]);
    }
    if k == 1 {
        let column: Vec<f64> = profit.iter().map(|row| row[0]).collect();
        return fill_greedy(capacity[0], supply, &column);
    }

    let source = 0;
    let sink = m + k + 1;
    let n = sink + 1;
    let mut edges: Vec<Edge> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let add = |edges: &mut Vec<Edge>, adj: &mut Vec<Vec<usize>>, from: usize, to: usize, cap: f64, cost: f64| {
        adj[from].push(edges.len());
        edges.push(Edge { to, cap, cost });
        adj[to].push(edges.len());
        edges.push(Edge { to: from, cap: 0.0, cost: -cost });
    };
    for (c, &s) in supply.iter().enumerate() {
        if s > FLOW_EPS {
            add(&mut edges, &mut adj, source, 1 + c, s, 0.0);
        }
    }
    for (st, &cap) in capacity.iter().enumerate() {
        if cap > FLOW_EPS {
            add(&mut edges, &mut adj, 1 + m + st, sink, cap, 0.0);
        }
    }
    for c in 0..m {
        for st in 0..k {
            let g = profit[c][st];
            if g.is_finite() && g > 0.0 {
                add(&mut edges, &mut adj, 1 + c, 1 + m + st, f64::INFINITY, -g);
            }
        }
    }

    let mut total = 0.0;
    // Each augmentation saturates an arc; the cap only guards against
    // floating-point stalls.
    for _ in 0..10_000 {
        let mut dist = vec![f64::INFINITY; n];
        let mut via = vec![usize::MAX; n];
        dist[source] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if !dist[u].is_finite() {
                    continue;
                }
                for &e in &adj[u] {
                    let edge = &edges[e];
                    if edge.cap > FLOW_EPS && dist[u] + edge.cost < dist[edge.to] - 1e-15 {
                        dist[edge.to] = dist[u] + edge.cost;
                        via[edge.to] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if !(dist[sink] < -1e-15) {
            break;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = sink;
        while v != source {
            let e = via[v];
            bottleneck = bottleneck.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let e = via[v];
            edges[e].cap -= bottleneck;
            edges[e ^ 1].cap += bottleneck;
            v = edges[e ^ 1].to;
        }
        total += -dist[sink] * bottleneck;
    }
    total
}

fn fill_greedy(amount: f64, slots: &[f64], profit: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..slots.len()).filter(|&s| profit[s].is_finite() && profit[s] > 0.0).collect();
    order.sort_by(|&a, &b| profit[b].total_cmp(&profit[a]));
    let mut left = amount;
    let mut total = 0.0;
    for s in order {
        if left <= FLOW_EPS {
            break;
        }
        let take = left.min(slots[s]);
        if take > 0.0 {
            total += take * profit[s];
            left -= take;
        }
    }
    total
}
