use binreg::branch_bound::{brute_force_oracle, solve, SolveConfig, SolveStatus};
use binreg::dataset::{corrupt_labels, CorruptionSpec};
use binreg::encoder::{build_mip, build_pbo, decode_values, default_bounds, margin_slacks};
use binreg::evaluator::margin;
use binreg::ratio::Rational;
use binreg::suite::{oracle_variables, tiny_suite};

const SUITE_SIZE: usize = 30;

#[test]
fn branch_and_bound_matches_oracle() {
    for inst in tiny_suite(SUITE_SIZE) {
        let (model, layout) = build_mip(&inst.train, &inst.hp).unwrap();
        let result = solve(&model, &SolveConfig::default());
        let oracle = brute_force_oracle(&model, &oracle_variables(&layout))
            .unwrap()
            .expect("the all-zero classifier is always feasible");
        assert_eq!(result.status, SolveStatus::Optimal, "seed {}", inst.seed);
        assert_eq!(
            result.objective,
            Some(oracle.objective),
            "seed {}",
            inst.seed
        );
        assert_eq!(result.gap, 0.0);
    }
}

#[test]
fn pbo_and_mip_optima_agree() {
    for inst in tiny_suite(SUITE_SIZE) {
        let (mip, _) = build_mip(&inst.train, &inst.hp).unwrap();
        let (pbo, _) = build_pbo(&inst.train, &inst.hp, &default_bounds(&inst.train)).unwrap();
        assert!(pbo.all_binary());
        let a = solve(&mip, &SolveConfig::default());
        let b = solve(&pbo, &SolveConfig::default());
        assert_eq!(b.status, SolveStatus::Optimal, "seed {}", inst.seed);
        assert_eq!(a.objective, b.objective, "seed {}", inst.seed);
    }
}

#[test]
fn oracle_slacks_are_complementary() {
    for inst in tiny_suite(SUITE_SIZE) {
        let (model, layout) = build_mip(&inst.train, &inst.hp).unwrap();
        let oracle = brute_force_oracle(&model, &oracle_variables(&layout))
            .unwrap()
            .unwrap();
        let trained = decode_values(&layout, &oracle.assignment);
        let slacks = margin_slacks(&layout, &oracle.assignment);
        for (inst_i, (ep, em)) in inst.train.instances().iter().zip(slacks) {
            let m = margin(&trained, &inst_i.x, inst_i.label).unwrap();
            assert_eq!((ep, em), (m.max(0), (-m).max(0)), "seed {}", inst.seed);
        }
    }
}

#[test]
fn corrupted_training_stays_optimal() {
    let fraction = Rational::new(1, 10);
    for inst in tiny_suite(SUITE_SIZE) {
        let noisy = corrupt_labels(
            &inst.train,
            CorruptionSpec {
                fraction,
                seed: inst.seed,
            },
        )
        .unwrap();
        let changed = inst
            .train
            .labels()
            .zip(noisy.labels())
            .filter(|(a, b)| a != b)
            .count();
        // round-half-up of 0.1 * k for k <= 4 is 0
        assert_eq!(changed, 0);
        let (model, _) = build_mip(&noisy, &inst.hp).unwrap();
        assert_eq!(
            solve(&model, &SolveConfig::default()).status,
            SolveStatus::Optimal
        );
    }
}
