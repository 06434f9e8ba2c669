mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svcflock::harness::to_descriptors;
use svcflock::{
    absorb_batch, extract_clusters, initialize, BatchConfig, Error, FlockSpace, FlockWeights, Position, SpaceConfig,
    Vec2,
};

use common::{brute_components, descriptor, synthetic, workload_config};

fn batch(init: usize, maintenance: usize) -> BatchConfig {
    BatchConfig {
        init_iterations: init,
        maintenance_iterations: maintenance,
    }
}

#[test]
fn initialization_groups_categories() {
    let (records, provider) = synthetic(4);
    let (services, labels) = to_descriptors(&records, &provider).unwrap();
    let space = initialize(&services, SpaceConfig::default().with_seed(4), FlockWeights::default(), &batch(600, 1), &provider)
        .unwrap();
    let torus = space.torus();
    let (mut intra, mut inter) = ((0.0, 0usize), (0.0, 0usize));
    let agents = space.agents();
    for (i, a) in agents.iter().enumerate() {
        for b in &agents[i + 1..] {
            let d = torus.distance(a.position, b.position);
            if labels[&a.descriptor.id] == labels[&b.descriptor.id] {
                intra = (intra.0 + d, intra.1 + 1);
            } else {
                inter = (inter.0 + d, inter.1 + 1);
            }
        }
    }
    let (intra, inter) = (intra.0 / intra.1 as f64, inter.0 / inter.1 as f64);
    assert!(intra < inter, "intra {intra} inter {inter}");
}

#[test]
fn single_service_deploys_at_half_speed() {
    let (records, provider) = synthetic(0);
    let (services, _) = to_descriptors(&records[..1], &provider).unwrap();
    let config = SpaceConfig::default().with_seed(8);
    let mut space = FlockSpace::new(config.clone(), FlockWeights::default()).unwrap();
    space.insert_random(Arc::new(services[0].clone())).unwrap();
    let a = &space.agents()[0];
    assert!(space.torus().contains(a.position));
    assert!((a.velocity.norm() - config.max_speed / 2.0).abs() < 1e-12);

    let again = initialize(&services, config.clone(), FlockWeights::default(), &batch(1, 1), &provider).unwrap();
    let twice = initialize(&services, config, FlockWeights::default(), &batch(1, 1), &provider).unwrap();
    assert_eq!(again.agents()[0].position, twice.agents()[0].position);
}

#[test]
fn empty_batch_only_advances_ticks_and_duplicates_fail() {
    let (records, provider) = synthetic(0);
    let (services, _) = to_descriptors(&records[..20], &provider).unwrap();
    let mut space = initialize(&services, SpaceConfig::default(), FlockWeights::default(), &batch(5, 7), &provider).unwrap();
    absorb_batch(&mut space, &[], &batch(5, 7), &provider).unwrap();
    assert_eq!(space.tick(), 12);
    assert_eq!(space.len(), 20);
    let err = absorb_batch(&mut space, &services[3..4], &batch(5, 7), &provider).unwrap_err();
    assert!(matches!(err, Error::DuplicateId(id) if id == services[3].id));
}

/// Toroidal centroid of `members`, unwrapped around the first member.
fn centroid(space: &FlockSpace, members: &[u64]) -> Position {
    let torus = space.torus();
    let origin = space.agent(members[0]).unwrap().position;
    let sum = members
        .iter()
        .map(|&m| torus.displacement(origin, space.agent(m).unwrap().position))
        .fold(Vec2::ZERO, |acc, v| acc + v);
    torus.translate(origin, sum / members.len() as f64)
}

#[test]
fn absorbed_twin_approaches_its_cluster() {
    for seed in 0..3 {
        let (records, provider) = synthetic(seed);
        let (services, _) = to_descriptors(&records, &provider).unwrap();
        let mut space =
            initialize(&services, workload_config(seed), FlockWeights::default(), &batch(400, 1), &provider).unwrap();
        let clusters = extract_clusters(&space, space.config().epsilon);
        let largest = clusters.clusters.iter().max_by_key(|c| c.members.len()).unwrap().members.clone();
        let model = space.agent(largest[0]).unwrap().descriptor.clone();
        let tags: Vec<&str> = model.tags().iter().map(|t| t.base.as_str()).collect();
        let twin = provider.descriptor("twin", "twin", &tags).unwrap();

        let before: BTreeMap<u64, Position> = space.agents().iter().map(|a| (a.id, a.position)).collect();
        absorb_batch(&mut space, &[twin], &batch(1, 1), &provider).unwrap();
        for a in space.agents().iter().filter(|a| before.contains_key(&a.id)) {
            assert!(space.torus().distance(before[&a.id], a.position) <= space.config().max_speed + 1e-9);
        }
        let twin_id = space.agents().iter().find(|a| a.descriptor.id == "twin").unwrap().id;
        let gap = |s: &FlockSpace| s.torus().distance(s.agent(twin_id).unwrap().position, centroid(s, &largest));
        let start = gap(&space);
        let mut trace = vec![start];
        for _ in 0..150 {
            space.step(&provider);
            trace.push(gap(&space));
        }
        let end = *trace.last().unwrap();
        assert!(end < start, "seed {seed}: {start} -> {end}");
        assert!(end <= space.config().epsilon, "seed {seed}: ended {end} from the centroid");
    }
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, w: f64, h: f64) -> Vec<(f64, f64)> {
    (0..n).map(|_| (rng.random::<f64>() * w, rng.random::<f64>() * h)).collect()
}

fn space_with(points: &[(f64, f64)], config: SpaceConfig) -> FlockSpace {
    let d = Arc::new(descriptor("d", &["x"]));
    let mut space = FlockSpace::new(config, FlockWeights::default()).unwrap();
    for &(x, y) in points {
        space.insert(d.clone(), Position { x, y }, Vec2::ZERO).unwrap();
    }
    space
}

fn components(space: &FlockSpace, eps: f64) -> Vec<Vec<u64>> {
    let a = extract_clusters(space, eps);
    let mut all: Vec<Vec<u64>> = a.components().map(<[u64]>::to_vec).collect();
    all.sort();
    all
}

#[test]
fn extraction_matches_union_find_and_ignores_input_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for round in 0..10 {
        let n = rng.random_range(1..=300);
        let config = SpaceConfig::default();
        let points = random_points(&mut rng, n, config.width, config.height);
        let space = space_with(&points, config.clone());
        let pts: Vec<(u64, f64, f64)> = space.agents().iter().map(|a| (a.id, a.position.x, a.position.y)).collect();
        let want = brute_components(&pts, config.width, config.height, 3.0);
        assert_eq!(components(&space, 3.0), want, "round {round}");

        // Same positions inserted in reverse: same components up to relabeling.
        let reversed: Vec<(f64, f64)> = points.iter().rev().copied().collect();
        let rev = space_with(&reversed, config);
        let mut relabeled: Vec<Vec<u64>> = components(&rev, 3.0)
            .into_iter()
            .map(|c| {
                let mut c: Vec<u64> = c.into_iter().map(|id| (n as u64 - 1) - id).collect();
                c.sort_unstable();
                c
            })
            .collect();
        relabeled.sort();
        assert_eq!(relabeled, want, "round {round} reversed");
    }
}

#[test]
fn epsilon_boundary_is_inclusive_unless_strict() {
    let points = [(10.0, 10.0), (13.0, 10.0)];
    let inclusive = space_with(&points, SpaceConfig::default());
    assert_eq!(extract_clusters(&inclusive, 3.0).clusters.len(), 1);
    let strict = space_with(
        &points,
        SpaceConfig {
            strict_epsilon: true,
            ..SpaceConfig::default()
        },
    );
    let a = extract_clusters(&strict, 3.0);
    assert!(a.clusters.is_empty());
    assert_eq!(a.outliers.len(), 2);
}
