//! One slot as a bipartite assignment, split into connected components.

use crate::assign::{solve_max_cardinality, Sense, WeightMatrix};
use crate::num::Weight;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlotEdge<W> {
    pub satellite: u32,
    pub station: u32,
    pub weight: W,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Chooses edges of one slot: as many links as the transmitter and receiver
/// limits allow, and among those the best total weight.
///
/// Rows of each component's matrix are the smaller side (stations on a tie).
/// Returns indices into `edges`, ascending.
pub fn solve_slot<W: Weight>(edges: &[SlotEdge<W>], sat_cap: &[u32], sta_cap: &[u32], sense: Sense) -> Vec<usize> {
    if edges.is_empty() {
        return Vec::new();
    }
    // Local node ids: satellites first, then stations.
    let mut sats: Vec<u32> = edges.iter().map(|e| e.satellite).collect();
    sats.sort_unstable();
    sats.dedup();
    let mut stas: Vec<u32> = edges.iter().map(|e| e.station).collect();
    stas.sort_unstable();
    stas.dedup();
    let sat_node = |s: u32| sats.binary_search(&s).expect("satellite of an edge");
    let sta_node = |g: u32| sats.len() + stas.binary_search(&g).expect("station of an edge");

    let mut parent: Vec<usize> = (0..sats.len() + stas.len()).collect();
    for e in edges {
        let a = find(&mut parent, sat_node(e.satellite));
        let b = find(&mut parent, sta_node(e.station));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); parent.len()];
    for (i, e) in edges.iter().enumerate() {
        let r = find(&mut parent, sat_node(e.satellite));
        by_root[r].push(i);
    }

    let mut chosen = Vec::new();
    for comp in by_root.iter().filter(|c| !c.is_empty()) {
        if comp.len() == 1 {
            chosen.push(comp[0]);
            continue;
        }
        solve_component(edges, comp, sat_cap, sta_cap, sense, &mut chosen);
    }
    chosen.sort_unstable();
    chosen
}

fn solve_component<W: Weight>(
    edges: &[SlotEdge<W>],
    comp: &[usize],
    sat_cap: &[u32],
    sta_cap: &[u32],
    sense: Sense,
    chosen: &mut Vec<usize>,
) {
    let mut sats: Vec<u32> = comp.iter().map(|&i| edges[i].satellite).collect();
    sats.sort_unstable();
    sats.dedup();
    let mut stas: Vec<u32> = comp.iter().map(|&i| edges[i].station).collect();
    stas.sort_unstable();
    stas.dedup();
    let unit = sats.iter().all(|&s| sat_cap[s as usize] == 1) && stas.iter().all(|&g| sta_cap[g as usize] == 1);
    if !unit {
        chosen.extend(flow::solve(edges, comp, &sats, &stas, sat_cap, sta_cap, sense));
        return;
    }
    let mut edge_of = vec![None; sats.len() * stas.len()];
    for &i in comp {
        let e = &edges[i];
        let a = sats.binary_search(&e.satellite).expect("component satellite");
        let b = stas.binary_search(&e.station).expect("component station");
        edge_of[a * stas.len() + b] = Some(i);
    }
    let stations_are_rows = stas.len() <= sats.len();
    let (nr, nc) = if stations_are_rows {
        (stas.len(), sats.len())
    } else {
        (sats.len(), stas.len())
    };
    let lookup = |r: usize, c: usize| {
        let (a, b) = if stations_are_rows { (c, r) } else { (r, c) };
        edge_of[a * stas.len() + b]
    };
    let mut w = WeightMatrix::new(nr, nc);
    for r in 0..nr {
        for c in 0..nc {
            w.set(r, c, lookup(r, c).map(|i| edges[i].weight));
        }
    }
    let m = solve_max_cardinality(&w, sense);
    chosen.extend(m.pairs().map(|(r, c)| lookup(r, c).expect("matched edge exists")));
}

/// Components with several transmitters or receivers per node: replicating
/// nodes in an assignment matrix could serve one link twice, so these use
/// successive shortest paths on the flow network
/// source -> satellite (M_s) -> station (1 per link) -> sink (R_g).
mod flow {
    use super::SlotEdge;
    use crate::assign::Sense;
    use crate::num::Weight;

    struct Arc<W> {
        to: usize,
        cap: u32,
        cost: W,
        edge: Option<usize>,
    }

    pub(super) fn solve<W: Weight>(
        edges: &[SlotEdge<W>],
        comp: &[usize],
        sats: &[u32],
        stas: &[u32],
        sat_cap: &[u32],
        sta_cap: &[u32],
        sense: Sense,
    ) -> Vec<usize> {
        let n = sats.len() + stas.len() + 2;
        let (src, sink) = (n - 2, n - 1);
        let mut arcs: Vec<Arc<W>> = Vec::new();
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut add = |arcs: &mut Vec<Arc<W>>, a: usize, b: usize, cap: u32, cost: W, edge: Option<usize>| {
            out[a].push(arcs.len());
            arcs.push(Arc { to: b, cap, cost, edge });
            out[b].push(arcs.len());
            arcs.push(Arc {
                to: a,
                cap: 0,
                cost: W::zero() - cost,
                edge: None,
            });
        };
        for (k, &s) in sats.iter().enumerate() {
            add(&mut arcs, src, k, sat_cap[s as usize], W::zero(), None);
        }
        for &i in comp {
            let e = &edges[i];
            let a = sats.binary_search(&e.satellite).expect("component satellite");
            let b = sats.len() + stas.binary_search(&e.station).expect("component station");
            let cost = match sense {
                Sense::Minimize => e.weight,
                Sense::Maximize => W::zero() - e.weight,
            };
            add(&mut arcs, a, b, 1, cost, Some(i));
        }
        for (k, &g) in stas.iter().enumerate() {
            add(&mut arcs, sats.len() + k, sink, sta_cap[g as usize], W::zero(), None);
        }
        loop {
            // Bellman-Ford; the residual graph never has a negative cycle.
            let mut dist: Vec<Option<W>> = vec![None; n];
            let mut via: Vec<Option<usize>> = vec![None; n];
            dist[src] = Some(W::zero());
            for _ in 0..n {
                let mut changed = false;
                for u in 0..n {
                    let Some(du) = dist[u] else { continue };
                    for &a in &out[u] {
                        let arc = &arcs[a];
                        if arc.cap == 0 {
                            continue;
                        }
                        let nd = du + arc.cost;
                        if dist[arc.to].map_or(true, |d| nd < d) {
                            dist[arc.to] = Some(nd);
                            via[arc.to] = Some(a);
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[sink].is_none() {
                break;
            }
            let mut v = sink;
            while v != src {
                let a = via[v].expect("path arc");
                arcs[a].cap -= 1;
                arcs[a ^ 1].cap += 1;
                v = arcs[a ^ 1].to;
            }
        }
        arcs.iter()
            .filter(|a| a.cap == 0)
            .filter_map(|a| a.edge)
            .collect()
    }
}
