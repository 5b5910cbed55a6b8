//! Strongly connected components and their diameters.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::MultiTokenNetwork;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Component {
    /// Node indices, ascending.
    pub nodes: Vec<usize>,
    pub token: usize,
    /// Distinct entities in the component.
    pub users: usize,
    /// Directed hop diameter; `None` until computed, always `None` for singletons.
    pub diameter: Option<u32>,
    pub has_ego: bool,
}

impl Component {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SccSummary {
    /// Descending by size; equal sizes ordered by smallest node index.
    pub components: Vec<Component>,
}

/// Tarjan's algorithm with an explicit call stack.
pub fn tarjan_scc(n: usize, successors: impl Fn(usize) -> Vec<usize>) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut components = Vec::new();
    let adjacency: Vec<Vec<usize>> = (0..n).map(&successors).collect();

    // (node, position of the next successor to explore)
    let mut call_stack: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call_stack.push((root, 0));
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call_stack.last_mut() {
            if let Some(&w) = adjacency[v].get(*pos) {
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    lowlink[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call_stack.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
                continue;
            }
            call_stack.pop();
            if let Some(&(parent, _)) = call_stack.last() {
                lowlink[parent] = lowlink[parent].min(lowlink[v]);
            }
            if lowlink[v] == index[v] {
                let mut component = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                component.sort_unstable();
                components.push(component);
            }
        }
    }
    components
}

/// Partition the network into maximal strongly connected components.
/// Diameters are left unset; see [`compute_diameters`].
pub fn scc_decomposition(net: &MultiTokenNetwork) -> SccSummary {
    let raw = tarjan_scc(net.node_count(), |v| net.out_edges(v).iter().map(|e| e.target).collect());
    let mut components: Vec<Component> = raw
        .into_iter()
        .map(|nodes| {
            let token = net.node(nodes[0]).token;
            debug_assert!(nodes.iter().all(|&v| net.node(v).token == token));
            let mut entities: Vec<usize> = nodes.iter().map(|&v| net.node(v).entity).collect();
            entities.sort_unstable();
            entities.dedup();
            let has_ego = nodes.iter().any(|&v| net.is_ego(v));
            Component {
                nodes,
                token,
                users: entities.len(),
                diameter: None,
                has_ego,
            }
        })
        .collect();
    components.sort_by(|a, b| b.size().cmp(&a.size()).then(a.nodes[0].cmp(&b.nodes[0])));
    SccSummary { components }
}

/// Longest shortest directed path (in hops) between ordered pairs of `component`.
pub fn scc_diameter(net: &MultiTokenNetwork, component: &[usize]) -> Result<u32> {
    let mut position = vec![NOT_MEMBER; net.node_count()];
    for (i, &v) in component.iter().enumerate() {
        position[v] = i as u32;
    }
    diameter_indexed(net, component, &position)
}

const NOT_MEMBER: u32 = u32::MAX;

/// `position[v]` is `v`'s index in `members`, or `NOT_MEMBER`. One BFS per
/// member, spread over the rayon pool.
fn diameter_indexed(net: &MultiTokenNetwork, members: &[usize], position: &[u32]) -> Result<u32> {
    if members.len() < 2 {
        return Err(Error::NotStronglyConnected);
    }
    let eccentricity = |start: usize| -> Option<u32> {
        let mut dist = vec![u32::MAX; members.len()];
        let mut queue = VecDeque::from([start]);
        dist[start] = 0;
        let mut reached = 1;
        let mut far = 0;
        while let Some(u) = queue.pop_front() {
            for e in net.out_edges(members[u]) {
                let w = position[e.target] as usize;
                let inside = members.get(w) == Some(&e.target);
                if inside && dist[w] == u32::MAX {
                    dist[w] = dist[u] + 1;
                    far = dist[w];
                    reached += 1;
                    queue.push_back(w);
                }
            }
        }
        (reached == members.len()).then_some(far)
    };
    (0..members.len())
        .into_par_iter()
        .map(eccentricity)
        .try_reduce(|| 0, |a, b| Some(a.max(b)))
        .ok_or(Error::NotStronglyConnected)
}

/// Fill in diameters for every non-singleton component.
pub fn compute_diameters(net: &MultiTokenNetwork, summary: &mut SccSummary) {
    // Components are disjoint, so one position table serves all of them.
    let mut position = vec![NOT_MEMBER; net.node_count()];
    for c in &summary.components {
        for (i, &v) in c.nodes.iter().enumerate() {
            position[v] = i as u32;
        }
    }
    summary
        .components
        .par_iter_mut()
        .filter(|c| c.size() >= 2)
        .for_each(|c| {
            c.diameter = Some(diameter_indexed(net, &c.nodes, &position).expect("tarjan components are strongly connected"));
        });
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiameterDistribution {
    /// Diameter to number of non-singleton components.
    pub histogram: BTreeMap<u32, usize>,
    pub components: usize,
    /// Non-singleton components containing a node of the designated group.
    pub with_group: usize,
    pub group_fraction: f64,
}

/// Histogram over non-singleton components. `group` is an entity-indexed mask.
pub fn diameter_distribution(net: &MultiTokenNetwork, summary: &SccSummary, group: &[bool]) -> DiameterDistribution {
    let mut histogram = BTreeMap::new();
    let mut components = 0;
    let mut with_group = 0;
    for c in summary.components.iter().filter(|c| c.size() >= 2) {
        let d = c.diameter.unwrap_or_else(|| scc_diameter(net, &c.nodes).expect("strongly connected"));
        *histogram.entry(d).or_insert(0) += 1;
        components += 1;
        if c.nodes.iter().any(|&v| group[net.node(v).entity]) {
            with_group += 1;
        }
    }
    DiameterDistribution {
        histogram,
        components,
        with_group,
        group_fraction: if components == 0 { 0.0 } else { with_group as f64 / components as f64 },
    }
}
