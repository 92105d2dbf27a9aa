use twincity::experiments::{limit_gap_report, logtsp_diagnostic, SequenceGenerator};
use twincity::process::{base_eval, draw_shift_indices};
use twincity::rng::{derive_seed, streams, DEFAULT_MASTER_SEED};
use twincity::stats::{chi_square_counts, uniformity_chi_square};
use twincity::tsp::HeuristicOptions;
use twincity::{Metric, ProcessSpec, Stage};

#[test]
fn base_points_are_uniform() {
    let seed = derive_seed(DEFAULT_MASTER_SEED, streams::BASE, 0);
    let pts: Vec<_> = (0..100_000).map(|t| base_eval(seed, t - 50_000)).collect();
    let c = uniformity_chi_square(&pts, 16).unwrap();
    assert!(c.p_value > 0.001, "{c:?}");
}

#[test]
fn shift_indices_are_uniform() {
    let spec = ProcessSpec::iid(0).with_stage(Stage::pinned(0.1, 5).unwrap());
    let mut counts = vec![0u64; 10];
    for r in 0..10_000 {
        let s = draw_shift_indices(&spec, derive_seed(DEFAULT_MASTER_SEED, streams::SHIFTS, r));
        counts[s.stages[0].shift_index as usize] += 1;
    }
    let c = chi_square_counts(&counts);
    assert_eq!(c.df, 9);
    assert!(c.p_value > 0.001, "{c:?} {counts:?}");
}

#[test]
fn second_stage_marginal_is_uniform_at_several_times() {
    let spec = ProcessSpec::iid(0)
        .with_stage(Stage::pinned(0.2, 3).unwrap())
        .with_stage(Stage::pinned(0.05, 11).unwrap());
    for t in [0i64, 5, -40] {
        let pts: Vec<_> = (0..20_000u64)
            .map(|r| {
                let s = draw_shift_indices(
                    &spec.reseeded(derive_seed(7, streams::BASE, r)),
                    derive_seed(7, streams::SHIFTS, r),
                );
                s.eval(2, t).unwrap()
            })
            .collect();
        let c = uniformity_chi_square(&pts, 8).unwrap();
        assert!(c.p_value > 0.001, "t = {t}: {c:?}");
    }
}

#[test]
fn log_length_ratios_near_one_half() {
    let opts = HeuristicOptions::default();
    let kron = logtsp_diagnostic(
        &SequenceGenerator::default_kronecker(),
        &[1, 4096],
        Metric::Torus,
        &opts,
    )
    .unwrap();
    assert_eq!(kron[0].log_ratio, None);
    let v = kron[1].log_ratio.unwrap();
    assert!((0.45..=0.60).contains(&v), "{v}");

    let iid = SequenceGenerator::Process {
        spec: ProcessSpec::iid(derive_seed(DEFAULT_MASTER_SEED, streams::BASE, 1)),
        j: 0,
    };
    let v = logtsp_diagnostic(&iid, &[4096], Metric::Torus, &opts).unwrap()[0]
        .log_ratio
        .unwrap();
    assert!((0.45..=0.60).contains(&v), "{v}");
}

#[test]
fn limit_gap_example() {
    let g = limit_gap_report(&[10_000], 1, 10, true, 0.05);
    assert!(g.bound > 0.0094 && g.bound < 0.0107, "{g:?}");
    assert!(g.certified);
    assert_eq!(limit_gap_report(&[], 1, 10, true, 0.05).bound, 0.0);
}
