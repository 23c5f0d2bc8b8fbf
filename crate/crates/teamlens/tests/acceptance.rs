//! Acceptance suite: one test per shipped criterion, each checked against
//! an independent oracle at its stated tolerance and reporting a PASS line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use teamlens::congruence::{
    congruence, congruence_trend, ActualCoordination, CoordinationRequirements,
};
use teamlens::diagnostics::{detect_brokers, BrokerParams, Subjects};
use teamlens::graph::{threshold_binary, Directedness, SocialNetwork};
use teamlens::ingest::{parse_commit_log, parse_commit_log_lenient, parse_events, IngestError};
use teamlens::metrics::{
    betweenness_centrality, transitivity, triad_census_directed, triad_census_undirected,
    TriadCensus,
};
use teamlens::model::{EventPayload, MemberId, TeamRoster};
use teamlens::stats::{average_ranks, spearman, PairedSeries};

fn member(i: usize) -> MemberId {
    MemberId::new(format!("m{i}")).unwrap()
}

fn roster(n: usize) -> TeamRoster {
    TeamRoster::new("t", (0..n).map(member).collect()).unwrap()
}

fn undirected_from(n: usize, edges: &BTreeSet<(usize, usize)>) -> SocialNetwork {
    let mut net = SocialNetwork::new(Directedness::Undirected, &roster(n));
    for &(a, b) in edges {
        net.add_weight(a, b, 1.0);
    }
    net
}

fn directed_from(n: usize, arcs: &BTreeSet<(usize, usize)>) -> SocialNetwork {
    let mut net = SocialNetwork::new(Directedness::Directed, &roster(n));
    for &(a, b) in arcs {
        net.add_weight(a, b, 1.0);
    }
    net
}

fn random_undirected(rng: &mut ChaCha8Rng, n: usize, p: f64) -> BTreeSet<(usize, usize)> {
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p) {
                edges.insert((i, j));
            }
        }
    }
    edges
}

fn random_directed(rng: &mut ChaCha8Rng, n: usize, p: f64) -> BTreeSet<(usize, usize)> {
    let mut arcs = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(p) {
                arcs.insert((i, j));
            }
        }
    }
    arcs
}

fn choose3(n: u64) -> u64 {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

// --- criterion 1: triad census exactness -----------------------------------

fn oracle_undirected_census(n: usize, edges: &BTreeSet<(usize, usize)>) -> [u64; 4] {
    let mut counts = [0u64; 4];
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let present = [(i, j), (i, k), (j, k)]
                    .iter()
                    .filter(|pair| edges.contains(pair))
                    .count();
                counts[present] += 1;
            }
        }
    }
    counts
}

const ARC_SLOTS: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];
const PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn triple_code(arcs: &BTreeSet<(usize, usize)>) -> u8 {
    ARC_SLOTS
        .iter()
        .enumerate()
        .fold(0u8, |acc, (bit, slot)| {
            if arcs.contains(slot) {
                acc | (1 << bit)
            } else {
                acc
            }
        })
}

/// Isomorphism-canonical code: minimum encoding over all node relabelings.
fn canonical_code(arcs: &BTreeSet<(usize, usize)>) -> u8 {
    PERMS
        .iter()
        .map(|perm| {
            let mapped: BTreeSet<(usize, usize)> =
                arcs.iter().map(|&(s, t)| (perm[s], perm[t])).collect();
            triple_code(&mapped)
        })
        .min()
        .expect("six permutations")
}

/// Exemplar arc pictures for the sixteen classes, in census label order.
fn exemplar_canonical_codes() -> Vec<u8> {
    let pictures: [&[(usize, usize)]; 16] = [
        &[],
        &[(0, 1)],
        &[(0, 1), (1, 0)],
        &[(1, 0), (1, 2)],
        &[(0, 1), (2, 1)],
        &[(0, 1), (1, 2)],
        &[(0, 1), (1, 0), (2, 1)],
        &[(0, 1), (1, 0), (1, 2)],
        &[(0, 1), (2, 1), (0, 2)],
        &[(1, 0), (2, 1), (0, 2)],
        &[(0, 1), (1, 0), (1, 2), (2, 1)],
        &[(1, 0), (1, 2), (0, 2), (2, 0)],
        &[(0, 1), (2, 1), (0, 2), (2, 0)],
        &[(0, 1), (1, 2), (0, 2), (2, 0)],
        &[(0, 1), (1, 2), (2, 1), (0, 2), (2, 0)],
        &[(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)],
    ];
    pictures
        .iter()
        .map(|arcs| canonical_code(&arcs.iter().copied().collect()))
        .collect()
}

fn oracle_directed_census(n: usize, arcs: &BTreeSet<(usize, usize)>) -> [u64; 16] {
    let canon = exemplar_canonical_codes();
    let mut counts = [0u64; 16];
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let nodes = [i, j, k];
                let mut local = BTreeSet::new();
                for (s, slot_s) in nodes.iter().enumerate() {
                    for (t, slot_t) in nodes.iter().enumerate() {
                        if s != t && arcs.contains(&(*slot_s, *slot_t)) {
                            local.insert((s, t));
                        }
                    }
                }
                let code = canonical_code(&local);
                let class = canon
                    .iter()
                    .position(|&c| c == code)
                    .expect("every triple matches one class");
                counts[class] += 1;
            }
        }
    }
    counts
}

#[test]
fn criterion_1_triad_census_exactness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let probabilities = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

    for trial in 0..200 {
        let n = 3 + (trial % 8); // 3..=10
        let p = probabilities[trial % probabilities.len()];
        let edges = random_undirected(&mut rng, n, p);
        let census = triad_census_undirected(&undirected_from(n, &edges)).unwrap();
        let TriadCensus::Undirected(counts) = census else {
            panic!("undirected census expected")
        };
        assert_eq!(counts, oracle_undirected_census(n, &edges), "trial {trial}");
        assert_eq!(counts.iter().sum::<u64>(), choose3(n as u64));
    }

    for trial in 0..200 {
        let n = 3 + (trial % 5); // 3..=7
        let p = probabilities[trial % probabilities.len()];
        let arcs = random_directed(&mut rng, n, p);
        let census = triad_census_directed(&directed_from(n, &arcs)).unwrap();
        let TriadCensus::Directed(counts) = census else {
            panic!("directed census expected")
        };
        assert_eq!(counts, oracle_directed_census(n, &arcs), "trial {trial}");
        assert_eq!(counts.iter().sum::<u64>(), choose3(n as u64));
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("ACCEPTANCE 1 triad-census-exactness: PASS ({elapsed:?})");
}

// --- criterion 2: betweenness exactness -------------------------------------

fn out_neighbors(n: usize, arcs: &BTreeSet<(usize, usize)>, directed: bool) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in arcs {
        adj[a].push(b);
        if !directed {
            adj[b].push(a);
        }
    }
    adj
}

fn enumerate_geodesics(
    adj: &[Vec<usize>],
    dist: &[usize],
    path: &mut Vec<usize>,
    t: usize,
    found: &mut Vec<Vec<usize>>,
) {
    let v = *path.last().expect("non-empty path");
    if v == t {
        found.push(path.clone());
        return;
    }
    for &w in &adj[v] {
        if dist[w] == dist[v] + 1 {
            path.push(w);
            enumerate_geodesics(adj, dist, path, t, found);
            path.pop();
        }
    }
}

/// Exhaustive all-shortest-paths betweenness: enumerate every geodesic for
/// every ordered pair and count pass-throughs.
fn oracle_betweenness(n: usize, arcs: &BTreeSet<(usize, usize)>, directed: bool) -> Vec<f64> {
    let adj = out_neighbors(n, arcs, directed);
    let mut scores = vec![0.0; n];
    for s in 0..n {
        // BFS distances from s.
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        for t in 0..n {
            if t == s || dist[t] == usize::MAX {
                continue;
            }
            let mut geodesics = Vec::new();
            enumerate_geodesics(&adj, &dist, &mut vec![s], t, &mut geodesics);
            let sigma = geodesics.len() as f64;
            for (v, score) in scores.iter_mut().enumerate() {
                if v == s || v == t {
                    continue;
                }
                let through = geodesics.iter().filter(|p| p.contains(&v)).count() as f64;
                *score += through / sigma;
            }
        }
    }
    if !directed {
        for s in &mut scores {
            *s /= 2.0;
        }
    }
    scores
}

#[test]
fn criterion_2_betweenness_exactness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);

    for trial in 0..100 {
        let n = 3 + (trial % 6); // 3..=8
        let p = 0.2 + 0.1 * ((trial % 7) as f64);
        if trial % 2 == 0 {
            let edges = random_undirected(&mut rng, n, p);
            let got = betweenness_centrality(&undirected_from(n, &edges), false).unwrap();
            let want = oracle_betweenness(n, &edges, false);
            for (g, w) in got.values().iter().zip(&want) {
                assert!((g - w).abs() < 1e-9, "trial {trial}: {g} vs {w}");
            }
        } else {
            let arcs = random_directed(&mut rng, n, p);
            let got = betweenness_centrality(&directed_from(n, &arcs), false).unwrap();
            let want = oracle_betweenness(n, &arcs, true);
            for (g, w) in got.values().iter().zip(&want) {
                assert!((g - w).abs() < 1e-9, "trial {trial}: {g} vs {w}");
            }
        }
    }

    // Closed forms, exact.
    let path: BTreeSet<(usize, usize)> = [(0, 1), (1, 2)].into();
    let scores = betweenness_centrality(&undirected_from(3, &path), false).unwrap();
    assert_eq!(scores.values(), &[0.0, 1.0, 0.0]);
    for n in 3..=8usize {
        let star: BTreeSet<(usize, usize)> = (1..n).map(|leaf| (0, leaf)).collect();
        let scores = betweenness_centrality(&undirected_from(n, &star), false).unwrap();
        let expected = ((n - 1) * (n - 2) / 2) as f64; // C(n-1, 2)
        assert_eq!(scores.values()[0], expected, "star n={n}");
        assert!(scores.values()[1..].iter().all(|&v| v == 0.0));
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("ACCEPTANCE 2 betweenness-exactness: PASS ({elapsed:?})");
}

// --- criterion 3: transitivity consistency ----------------------------------

/// Direct definition: 3 * triangles / connected triples, where connected
/// triples are counted as sum over v of C(deg(v), 2).
fn oracle_transitivity(n: usize, edges: &BTreeSet<(usize, usize)>) -> Option<f64> {
    let mut adj = vec![vec![false; n]; n];
    let mut degree = vec![0u64; n];
    for &(a, b) in edges {
        adj[a][b] = true;
        adj[b][a] = true;
        degree[a] += 1;
        degree[b] += 1;
    }
    let mut triangles = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                if adj[i][j] && adj[i][k] && adj[j][k] {
                    triangles += 1;
                }
            }
        }
    }
    let triples: u64 = degree.iter().map(|&d| d * d.saturating_sub(1) / 2).sum();
    if triples == 0 {
        None
    } else {
        Some(3.0 * triangles as f64 / triples as f64)
    }
}

#[test]
fn criterion_3_transitivity_consistency() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);

    for trial in 0..100 {
        let n = 3 + (trial % 8);
        let p = 0.1 + 0.08 * ((trial % 10) as f64);
        let edges = random_undirected(&mut rng, n, p);
        let census = triad_census_undirected(&undirected_from(n, &edges)).unwrap();
        let from_census = transitivity(&census).unwrap();
        let direct = oracle_transitivity(n, &edges);
        match (from_census, direct) {
            (None, None) => {}
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12, "trial {trial}: {a} vs {b}"),
            other => panic!("trial {trial}: definedness mismatch {other:?}"),
        }
    }

    let triangle: BTreeSet<(usize, usize)> = [(0, 1), (1, 2), (0, 2)].into();
    let census = triad_census_undirected(&undirected_from(3, &triangle)).unwrap();
    assert_eq!(transitivity(&census).unwrap(), Some(1.0));
    let star: BTreeSet<(usize, usize)> = [(0, 1), (0, 2), (0, 3)].into();
    let census = triad_census_undirected(&undirected_from(4, &star)).unwrap();
    assert_eq!(transitivity(&census).unwrap(), Some(0.0));

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!("ACCEPTANCE 3 transitivity-consistency: PASS ({elapsed:?})");
}

// --- criterion 4: congruence oracle ------------------------------------------

fn requirements_from(members: &[MemberId], pairs: &[(usize, usize, u64)]) -> CoordinationRequirements {
    let m = members.len();
    let mut data = vec![vec![0u64; m]; m];
    for &(i, j, v) in pairs {
        data[i][j] = v;
        data[j][i] = v;
    }
    CoordinationRequirements {
        members: members.to_vec(),
        data,
    }
}

fn actual_from(members: &[MemberId], pairs: &[(usize, usize)]) -> ActualCoordination {
    let m = members.len();
    let mut data = vec![vec![false; m]; m];
    for &(i, j) in pairs {
        data[i][j] = true;
        data[j][i] = true;
    }
    ActualCoordination {
        members: members.to_vec(),
        data,
    }
}

#[test]
fn criterion_4_congruence_oracle() {
    let started = Instant::now();

    // Worked 4-member fixture: CR pairs {ab, ac, bd}, A pairs {ab, cd}.
    let members: Vec<MemberId> = ["a", "b", "c", "d"]
        .iter()
        .map(|s| MemberId::new(*s).unwrap())
        .collect();
    let cr = requirements_from(&members, &[(0, 1, 1), (0, 2, 1), (1, 3, 1)]);
    let actual = actual_from(&members, &[(0, 1), (2, 3)]);
    let result = congruence(&cr, &actual).unwrap();
    assert_eq!(result.team_score, Some(1.0 / 3.0));
    let scores: Vec<Option<f64>> = result.member_scores.iter().map(|(_, s)| *s).collect();
    assert_eq!(scores, vec![Some(1.0 / 2.0), Some(1.0 / 2.0), Some(0.0), Some(0.0)]);

    // Monotonicity over 500 random instances: adding one A pair never
    // lowers a defined score.
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let mut instances = 0;
    while instances < 500 {
        let m = rng.random_range(3..8);
        let members: Vec<MemberId> = (0..m).map(member).collect();
        let mut cr_pairs = Vec::new();
        let mut a_pairs = Vec::new();
        let mut absent = Vec::new();
        for i in 0..m {
            for j in (i + 1)..m {
                if rng.random_bool(0.6) {
                    cr_pairs.push((i, j, rng.random_range(1..6)));
                }
                if rng.random_bool(0.4) {
                    a_pairs.push((i, j));
                } else {
                    absent.push((i, j));
                }
            }
        }
        if absent.is_empty() {
            continue;
        }
        let cr = requirements_from(&members, &cr_pairs);
        let before = congruence(&cr, &actual_from(&members, &a_pairs)).unwrap();

        let added = absent[rng.random_range(0..absent.len())];
        a_pairs.push(added);
        let after = congruence(&cr, &actual_from(&members, &a_pairs)).unwrap();

        match (before.team_score, after.team_score) {
            (Some(b), Some(a)) => assert!(a >= b, "team score dropped: {b} -> {a}"),
            (None, None) => {}
            other => panic!("team definedness changed: {other:?}"),
        }
        for ((_, b), (_, a)) in before.member_scores.iter().zip(&after.member_scores) {
            match (b, a) {
                (Some(b), Some(a)) => assert!(a >= b, "member score dropped: {b} -> {a}"),
                (None, None) => {}
                other => panic!("member definedness changed: {other:?}"),
            }
        }
        instances += 1;
    }

    let elapsed = started.elapsed();
    println!("ACCEPTANCE 4 congruence-oracle: PASS ({elapsed:?})");
}

// --- criterion 5: planted-broker recovery ------------------------------------

#[test]
fn criterion_5_planted_broker_recovery() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let n = 7;

    for team in 0..50 {
        let center = rng.random_range(0..n);
        let mut net = SocialNetwork::new(Directedness::Undirected, &roster(n));
        for other in 0..n {
            if other != center {
                net.add_weight(center, other, 1.0);
            }
        }
        // Noise edges below the binarization threshold.
        for i in 0..n {
            for j in (i + 1)..n {
                if i != center && j != center && rng.random_bool(0.3) {
                    net.add_weight(i, j, 0.5);
                }
            }
        }

        let topology = threshold_binary(&net, 1.0);
        let scores = betweenness_centrality(&topology, true).unwrap();
        let flagged: Vec<usize> = detect_brokers(&scores, &BrokerParams::default())
            .into_iter()
            .filter_map(|d| match d.subjects {
                Subjects::Members(ms) => roster(n).index_of(&ms[0]),
                _ => None,
            })
            .collect();
        assert_eq!(flagged, vec![center], "team {team}: precision/recall broken");
    }

    let elapsed = started.elapsed();
    println!("ACCEPTANCE 5 planted-broker-recovery: PASS ({elapsed:?})");
}

// --- criterion 6: congruence trend -------------------------------------------

#[test]
fn criterion_6_congruence_trend() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC6);

    for trial in 0..100 {
        let len = rng.random_range(3..=10);
        let mut x = 0i64;
        let series: Vec<(i64, f64)> = (0..len)
            .map(|_| {
                x += rng.random_range(1..4);
                (x, rng.random_range(0..1000) as f64 / 1000.0)
            })
            .collect();
        let slope = congruence_trend(&series);

        // Independent closed form from expanded sums.
        let n = series.len() as f64;
        let sx: f64 = series.iter().map(|&(x, _)| x as f64).sum();
        let sy: f64 = series.iter().map(|&(_, y)| y).sum();
        let sxy: f64 = series.iter().map(|&(x, y)| x as f64 * y).sum();
        let sxx: f64 = series.iter().map(|&(x, _)| (x * x) as f64).sum();
        let denom = n * sxx - sx * sx;
        let all_y_equal = series.iter().all(|&(_, y)| y == series[0].1);
        let expected = if all_y_equal {
            Some(0.0)
        } else {
            Some((n * sxy - sx * sy) / denom)
        };

        match (slope, expected) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12, "trial {trial}: {a} vs {b}"),
            other => panic!("trial {trial}: {other:?}"),
        }
    }

    // Constant series: exactly zero, no float residue.
    let constant: Vec<(i64, f64)> = (0..6).map(|i| (i, 0.37)).collect();
    assert_eq!(congruence_trend(&constant), Some(0.0));

    let elapsed = started.elapsed();
    println!("ACCEPTANCE 6 congruence-trend: PASS ({elapsed:?})");
}

// --- criterion 7: rank correlation --------------------------------------------

#[test]
fn criterion_7_rank_correlation() {
    let started = Instant::now();

    // Tied fixture against the definitional oracle: rank (average ties),
    // then plain Pearson on the ranks, computed here independently.
    let x = [1.0, 2.0, 2.0, 4.0];
    let y = [1.0, 3.0, 2.0, 4.0];
    let labels = (0..4).map(|i| ("t".to_string(), format!("s{i}"))).collect();
    let series = PairedSeries::new(labels, x.to_vec(), y.to_vec()).unwrap();
    let rho = spearman(&series).unwrap();

    let rx = average_ranks(&x);
    let ry = average_ranks(&y);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    let oracle = cov / (vx * vy).sqrt();
    assert!((rho - oracle).abs() < 1e-12, "{rho} vs {oracle}");
    assert!((rho - 0.9_f64.sqrt()).abs() < 1e-12);

    // Monotone-transform invariance over 200 random series. Integer grids
    // keep ties intact under the transforms.
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7);
    let mut checked = 0;
    while checked < 200 {
        let len = rng.random_range(4..20);
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(0..40) as f64).collect();
        let y: Vec<f64> = (0..len).map(|_| rng.random_range(0..40) as f64).collect();
        if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
            continue;
        }
        let labels: Vec<(String, String)> =
            (0..len).map(|i| ("t".to_string(), format!("s{i}"))).collect();
        let base = spearman(&PairedSeries::new(labels.clone(), x.clone(), y.clone()).unwrap())
            .unwrap();

        let affine: Vec<f64> = x.iter().map(|&v| 2.0 * v + 3.0).collect();
        let cubic: Vec<f64> = x.iter().map(|&v| v * v * v).collect();
        let y_affine: Vec<f64> = y.iter().map(|&v| 0.5 * v + 1.0).collect();
        for (tx, ty) in [
            (affine, y.clone()),
            (cubic, y.clone()),
            (x.clone(), y_affine),
        ] {
            let transformed =
                spearman(&PairedSeries::new(labels.clone(), tx, ty).unwrap()).unwrap();
            assert_eq!(base, transformed, "transform changed rho");
        }
        checked += 1;
    }

    let elapsed = started.elapsed();
    println!("ACCEPTANCE 7 rank-correlation: PASS ({elapsed:?})");
}

// --- criterion 8: end-to-end determinism --------------------------------------

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/e2e")
}

fn run_analyze(events: &Path, config: &Path, out: &Path, jobs: usize) {
    let output = Command::new(env!("CARGO_BIN_EXE_teamlens"))
        .args(["analyze", "--events"])
        .arg(events)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--jobs", &jobs.to_string()])
        .output()
        .expect("spawn teamlens");
    assert!(
        output.status.success(),
        "analyze failed for {}: {}",
        config.display(),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&path).unwrap(),
            )
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn criterion_8_end_to_end_determinism() {
    let started = Instant::now();
    let teams = ["team-alpha", "team-beta", "team-gamma"];
    let tmp = tempfile::tempdir().unwrap();

    for team in teams {
        let events = fixture_dir().join(team).join("events.jsonl");
        let config = fixture_dir().join(team).join("config.toml");
        let out_a = tmp.path().join("run-a").join(team);
        let out_b = tmp.path().join("run-b").join(team);
        let out_p = tmp.path().join("run-parallel").join(team);
        run_analyze(&events, &config, &out_a, 1);
        run_analyze(&events, &config, &out_b, 1);
        run_analyze(&events, &config, &out_p, 4);

        let a = read_dir_sorted(&out_a);
        let b = read_dir_sorted(&out_b);
        let p = read_dir_sorted(&out_p);
        assert_eq!(a.len(), 3, "{team}: 2 sprint reports + summary");
        assert_eq!(a, b, "{team}: reruns must be byte-identical");
        assert_eq!(a, p, "{team}: --jobs 4 must be byte-identical to --jobs 1");
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("ACCEPTANCE 8 end-to-end-determinism: PASS ({elapsed:?})");
}

// --- criterion 9: ingestion robustness -----------------------------------------

#[test]
fn criterion_9_ingestion_robustness() {
    let started = Instant::now();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let aliases: std::collections::BTreeMap<String, MemberId> = [
        ("Alice B <a@x>".to_string(), MemberId::new("alice").unwrap()),
        ("Bob C <b@y>".to_string(), MemberId::new("bob").unwrap()),
    ]
    .into();

    // The grammar fixture parses to the documented event list.
    let log = std::fs::File::open(fixtures.join("commit_log.txt")).unwrap();
    let events = parse_commit_log(std::io::BufReader::new(log), &aliases).unwrap();
    assert_eq!(events.len(), 3);
    assert_eq!(events[0].actor, MemberId::new("alice").unwrap());
    let EventPayload::Commit { files } = &events[0].payload else {
        panic!("commit expected")
    };
    assert_eq!(files.len(), 2);
    assert_eq!((files[0].added, files[0].deleted), (12, 3));
    // Binary markers parse as 0/0; the +13:00 date normalizes to UTC.
    let EventPayload::Commit { files } = &events[1].payload else {
        panic!("commit expected")
    };
    assert_eq!(files[0].path, "assets/logo.png");
    assert_eq!((files[0].added, files[0].deleted), (0, 0));
    assert_eq!(
        events[1].timestamp.to_rfc3339(),
        "2025-03-04T20:00:00+00:00"
    );

    // A corrupted line aborts with its line number by default.
    let corrupt = std::fs::File::open(fixtures.join("commit_log_corrupt.txt")).unwrap();
    let err = parse_commit_log(std::io::BufReader::new(corrupt), &aliases).unwrap_err();
    match err {
        IngestError::BadLine { line, .. } => assert_eq!(line, 6),
        other => panic!("wrong error: {other:?}"),
    }

    // Lenient mode skips and counts the bad block, keeping the good one.
    let corrupt = std::fs::File::open(fixtures.join("commit_log_corrupt.txt")).unwrap();
    let lenient = parse_commit_log_lenient(std::io::BufReader::new(corrupt), &aliases).unwrap();
    assert_eq!(lenient.events.len(), 1);
    assert_eq!(lenient.skipped.len(), 1);
    assert_eq!(lenient.skipped[0].0, 6);

    // Event-line robustness: same contract for the jsonl parser.
    let corrupt_events = std::fs::read(fixtures.join("events_corrupt.jsonl")).unwrap();
    let err = parse_events(corrupt_events.as_slice()).unwrap_err();
    assert!(matches!(err, IngestError::BadLine { line: 2, .. }));
    let lenient = teamlens::ingest::parse_events_lenient(corrupt_events.as_slice()).unwrap();
    assert_eq!(lenient.events.len(), 2);
    assert_eq!(lenient.skipped.len(), 1);

    let elapsed = started.elapsed();
    println!("ACCEPTANCE 9 ingestion-robustness: PASS ({elapsed:?})");
}
