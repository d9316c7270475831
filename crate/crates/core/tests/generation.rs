mod support;

use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use planpred::gridworld::{collected_along, validate_grid, validate_path};
use planpred::inference::infer;
use planpred::plans::{check_consistency, enumerate_plans, plan_cost};
use planpred::simulate::{
    complexity_signature, execute_plan, generate_task, CandidateRole, GeneratorSpec,
    STANDARD_SIGNATURES,
};
use planpred::{ModelConfig, ModelKind};
use support::random_tasks::{random_task, MICRO};

#[test]
fn every_standard_signature_yields_a_disagreeing_task() {
    for (i, sig) in STANDARD_SIGNATURES.iter().enumerate() {
        let spec = GeneratorSpec::new(*sig, 100 + i as u64);
        let generated = generate_task(&spec).unwrap();
        let task = &generated.task;
        assert_eq!(complexity_signature(task).unwrap(), *sig);
        assert_eq!(task.candidates.len(), 4);
        assert!(generated.report.attempts <= spec.max_attempts);
        validate_grid(&task.grid).unwrap();
        validate_path(&task.grid, task.observation.path()).unwrap();

        let full = infer(task, ModelConfig::new(ModelKind::Full)).unwrap();
        let ppo = infer(task, ModelConfig::new(ModelKind::Ppo)).unwrap();
        assert_ne!(full.argmax_id(), ppo.argmax_id());
        assert_eq!(full.argmax_id(), generated.report.argmax_full);
        assert_eq!(ppo.argmax_id(), generated.report.argmax_ppo);
        let roles: Vec<CandidateRole> = generated.report.roles.iter().map(|r| r.1).collect();
        assert_eq!(
            roles.iter().filter(|r| **r == CandidateRole::Low).count(),
            1
        );
        assert!(roles.contains(&CandidateRole::Filler));

        // no accidental pickups: each collected part belongs to a plan of
        // some candidate that is consistent with the observation
        for part in task.observation.collected() {
            let explained = task.candidates.iter().any(|g| {
                enumerate_plans(&task.grid, g).plans.iter().any(|p| {
                    check_consistency(p, &task.observation).is_consistent()
                        && p.part_ids().any(|id| id == part.id)
                })
            });
            assert!(explained, "{sig}: stray pickup {}", part.id);
        }
    }
}

#[test]
fn generation_is_deterministic_per_seed() {
    let spec = GeneratorSpec::new(STANDARD_SIGNATURES[4], 9);
    let a = generate_task(&spec).unwrap();
    let b = generate_task(&spec).unwrap();
    assert_eq!(a, b);
    let other = generate_task(&GeneratorSpec::new(STANDARD_SIGNATURES[4], 10)).unwrap();
    assert_ne!(a.task, other.task);
}

proptest! {
    #[test]
    fn executed_plans_are_valid_walks(seed in any::<u64>(), cut in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let task = random_task(&mut rng, &MICRO);
        let goal = task.candidates.choose(&mut rng).unwrap();
        let plans = enumerate_plans(&task.grid, goal).plans;
        prop_assume!(!plans.is_empty());
        let plan = plans.choose(&mut rng).unwrap();
        let total = plan_cost(&task.grid, plan).unwrap();
        let steps = (f64::from(total) * cut).floor() as u32;
        let path = execute_plan(&task.grid, plan, steps).unwrap();
        prop_assert_eq!(path.steps(), steps);
        prop_assert!(validate_path(&task.grid, &path).is_ok());
        if steps == total {
            // every planned part is reached, in slot order, among the pickups
            let got: Vec<String> = collected_along(&task.grid, &path).iter().map(|p| p.id.clone()).collect();
            let mut it = got.iter();
            for id in plan.part_ids() {
                prop_assert!(it.any(|g| g == id));
            }
        }
    }
}
