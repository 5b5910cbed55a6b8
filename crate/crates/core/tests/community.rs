use std::collections::BTreeSet;

use proptest::prelude::*;
use tokennet_core::community::{louvain, modularity, project_undirected, UndirectedGraph};
use tokennet_core::synthetic::{random_network, RandomNetworkConfig};

/// Q = 1/(2m) * sum_ij [A_ij - gamma k_i k_j / (2m)] delta(c_i, c_j), over a dense matrix.
fn direct_modularity(graph: &UndirectedGraph, membership: &[usize], gamma: f64) -> f64 {
    let n = graph.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for (u, v, w) in graph.edges() {
        a[u][v] += w;
        a[v][u] += w;
    }
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if membership[i] == membership[j] {
                q += a[i][j] - gamma * k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

fn canonical(membership: &[usize]) -> BTreeSet<BTreeSet<usize>> {
    let max = membership.iter().max().map_or(0, |m| m + 1);
    (0..max)
        .map(|c| (0..membership.len()).filter(|&i| membership[i] == c).collect::<BTreeSet<_>>())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Visit every set partition of `n` items as a restricted growth string.
fn for_each_partition(n: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(i: usize, max: usize, labels: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if i == labels.len() {
            visit(labels);
            return;
        }
        for c in 0..=max {
            labels[i] = c;
            rec(i + 1, max.max(c + 1), labels, visit);
        }
    }
    let mut labels = vec![0; n];
    if n > 0 {
        rec(1, 1, &mut labels, &mut visit);
    }
}

fn two_cliques() -> UndirectedGraph {
    let mut edges = Vec::new();
    for base in [0, 5] {
        for i in 0..5 {
            for j in i + 1..5 {
                edges.push((base + i, base + j, 1.0));
            }
        }
    }
    edges.push((4, 5, 1.0));
    UndirectedGraph::from_edges(10, edges)
}

#[test]
fn two_cliques_reach_the_exhaustive_optimum() {
    let graph = two_cliques();
    let mut best = f64::NEG_INFINITY;
    let mut best_partitions = Vec::new();
    let mut count = 0;
    for_each_partition(10, |labels| {
        count += 1;
        let q = direct_modularity(&graph, labels, 1.0);
        if q > best + 1e-12 {
            best = q;
            best_partitions = vec![canonical(labels)];
        } else if (q - best).abs() <= 1e-12 {
            best_partitions.push(canonical(labels));
        }
    });
    assert_eq!(count, 115_975);
    assert_eq!(best_partitions.len(), 1);

    for seed in 0..10 {
        let p = louvain(&graph, 1.0, seed).unwrap();
        assert_eq!(canonical(&p.membership), best_partitions[0]);
        assert!((p.modularity - best).abs() < 1e-12);
    }
}

#[test]
fn reported_modularity_matches_direct_formula() {
    for seed in 0..20 {
        let cfg = RandomNetworkConfig {
            entities: 40,
            tokens: 2,
            edges: 150,
            ..Default::default()
        };
        let graph = project_undirected(&random_network(&cfg, seed));
        for gamma in [0.5, 1.0, 2.0] {
            let p = louvain(&graph, gamma, seed).unwrap();
            let direct = direct_modularity(&graph, &p.membership, gamma);
            assert!((p.modularity - direct).abs() < 1e-12, "{} vs {direct}", p.modularity);
            assert!((modularity(&graph, &p.membership, gamma).unwrap() - direct).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn louvain_is_seed_deterministic_and_never_worse_than_singletons(seed in any::<u64>()) {
        let graph = project_undirected(&random_network(&RandomNetworkConfig::default(), seed));
        let a = louvain(&graph, 1.0, seed).unwrap();
        prop_assert_eq!(&a, &louvain(&graph, 1.0, seed).unwrap());
        let singletons: Vec<usize> = (0..graph.node_count()).collect();
        prop_assert!(a.modularity >= modularity(&graph, &singletons, 1.0).unwrap() - 1e-12);
        let sizes = a.sizes();
        prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
    }
}
