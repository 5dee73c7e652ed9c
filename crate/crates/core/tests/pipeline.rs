use hapaltmin::theory::{self, TheoryParams};
use hapaltmin::{
    assemble, evaluate, incoherence, init_power_clip, principal_angle_dist, svt_complete, Algorithm, Reference,
    SimulationSpec, SolverConfig, SvtConfig,
};

#[test]
fn initializer_lands_within_half_of_truth() {
    let mut close = 0;
    for seed in 0..20 {
        let (truth, f) = SimulationSpec::uniform(100, 200, 0.3, 0.05, seed).simulate().unwrap();
        let init = init_power_clip(&f, &SolverConfig::default()).unwrap();
        if principal_angle_dist(&init.u, &truth.u_star()).unwrap() <= 0.5 {
            close += 1;
        }
    }
    assert!(close >= 19, "{close}/20");
}

#[test]
fn clipped_start_is_incoherent() {
    for seed in 0..10 {
        let (_, f) = SimulationSpec::uniform(100, 200, 0.05, 0.1, seed).simulate().unwrap();
        let init = init_power_clip(&f, &SolverConfig::default()).unwrap();
        assert!(incoherence(&init.u).unwrap() <= 8.0);
    }
}

#[test]
fn normalized_mec_of_truth_tracks_flip_rate() {
    let (m, n, p, p_e) = (200, 300, 0.4, 0.05);
    assert!((m * n) as f64 * p * p_e >= 500.0);
    for seed in 0..5 {
        let (truth, f) = SimulationSpec::uniform(m, n, p, p_e, seed).simulate().unwrap();
        let r = evaluate(&f, &truth.haplotype, Some(&truth)).unwrap();
        let expected = p * p_e;
        assert!((r.normalized_mec - expected).abs() <= 0.2 * expected, "{} vs {expected}", r.normalized_mec);
    }
}

#[test]
fn noisy_distance_settles_below_plateau_limit() {
    let tp = TheoryParams::new(100, 200, 0.02);
    let limit = theory::plateau_limit(&tp).unwrap();
    for seed in 0..5 {
        let (truth, f) = SimulationSpec::uniform(100, 200, 1.0, 0.02, seed).simulate().unwrap();
        let r = assemble(&f, &SolverConfig::default(), Some(&Reference::from(&truth))).unwrap();
        let last = *r.trace.dist_u().last().unwrap();
        assert!(last <= limit, "{last} > {limit}");
    }
}

#[test]
fn noiseless_full_recovery_by_every_variant() {
    for alg in Algorithm::ALL {
        let (truth, f) = SimulationSpec::uniform(300, 500, 1.0, 0.0, 4).simulate().unwrap();
        let r = assemble(&f, &SolverConfig::with_algorithm(alg), None).unwrap();
        let e = evaluate(&f, &r.haplotype, Some(&truth)).unwrap();
        assert_eq!(e.mec, 0);
        assert_eq!(e.reconstruction_rate, Some(1.0));
    }
}

#[test]
fn svt_estimate_is_dominated_by_one_direction() {
    let (truth, f) = SimulationSpec::uniform(40, 60, 0.5, 0.0, 2).simulate().unwrap();
    let out = svt_complete(&f, &SvtConfig::default()).unwrap();
    assert!(out.converged);
    assert_eq!(out.rank, 1);
    assert_eq!(out.haplotype().unwrap(), truth.haplotype.canonical());

    for seed in 0..3 {
        let (truth, f) = SimulationSpec::uniform(40, 60, 0.5, 0.05, seed).simulate().unwrap();
        let out = svt_complete(&f, &SvtConfig { max_iters: 200, ..SvtConfig::default() }).unwrap();
        let (x, u) = (&out.estimate, out.leading_left.clone().unwrap());
        let total: f64 = (0..x.rows()).map(|i| x.row(i).iter().map(|v| v * v).sum::<f64>()).sum();
        let top: f64 = (0..x.cols())
            .map(|j| (0..x.rows()).map(|i| u[i] * x.get(i, j)).sum::<f64>().powi(2))
            .sum();
        assert!(top / total >= 0.75, "leading share {}", top / total);
        let rate = hapaltmin::reconstruction_rate(
            &hapaltmin::HaplotypePair::complementary(&truth.haplotype),
            &hapaltmin::HaplotypePair::complementary(&out.haplotype().unwrap()),
        )
        .unwrap();
        assert!(rate >= 0.95, "{rate}");
    }
}
