//! Fitness evaluation of one population, inline versus on a thread pool.
//! Without the `parallel` feature both variants run inline.

use std::sync::Arc;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use plancritic_core::corpus::load_pack;
use plancritic_core::ga::{ConstraintPool, Evaluator};
use plancritic_core::oracle::{ExactOracle, FeedbackSet, FeedbackStatement};
use plancritic_core::pddl::{parse_specification, Specification};
use plancritic_core::planner::BuiltinPlanner;
use plancritic_core::Workers;

fn population(c: &mut Criterion) {
    let pack = load_pack("naval").expect("naval pack");
    let domain = pack.domain.clone();
    let problem = pack.problem("mini").expect("mini problem").clone();
    let planner = BuiltinPlanner {
        horizon: 16,
        timeout: Duration::from_secs(10),
        ..BuiltinPlanner::default()
    };
    let oracle = ExactOracle::new(Arc::new(domain.clone()), Arc::new(problem.clone()));
    let truth = parse_specification(
        "(:constraints (sometime (at sct_ast_0 wpt_end)))",
        &domain,
        &problem,
    )
    .unwrap();
    let feedback = FeedbackSet::new(vec![FeedbackStatement::new(
        "scout visits the end",
        Some(truth),
    )])
    .unwrap();
    let pool = ConstraintPool::enumerate(&domain, &problem, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let genotypes: Vec<Specification> = (0..20)
        .map(|_| {
            Specification::new(
                (0..rng.random_range(1..=3))
                    .map(|_| pool.sample(&mut rng))
                    .collect(),
            )
        })
        .collect();

    let mut group = c.benchmark_group("evaluate_batch");
    group.sample_size(10);
    for (label, width) in [("sequential", 1usize), ("parallel", 0)] {
        let workers = Workers::new(width);
        group.bench_with_input(
            BenchmarkId::new(label, genotypes.len()),
            &genotypes,
            |b, g| {
                b.iter(|| {
                    // a fresh memo table each time, so every genotype is planned
                    let ev = Evaluator::new(&domain, &problem, &planner, &oracle, &feedback);
                    ev.evaluate_batch(g, &workers).expect("evaluation succeeds")
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, population);
criterion_main!(benches);
