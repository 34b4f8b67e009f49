use super::*;
use crate::linalg::{max_abs, pinv_solve};
use crate::model::{restrict_support, sample_measurement_matrix};
use crate::siggen::generate_instance;
use itertools::Itertools;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reference_cfg() -> OfdmConfig {
    OfdmConfig::new(32, 8, 3, 20, 10).unwrap()
}

struct Trial {
    a: MeasurementMatrix,
    z: CompressedStream,
}

fn trial(cfg: &OfdmConfig, seed: u64, d: usize, snr_db: f64) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = sample_measurement_matrix(cfg, &mut rng);
    let ft = extended_idft(cfg);
    let z = generate_instance(cfg, &ft, &a, d, snr_db, &mut rng)
        .unwrap()
        .compressed;
    Trial { a, z }
}

fn energy(frames: &[CVec]) -> f64 {
    frames.iter().map(|f| f.norm_squared()).sum()
}

#[test]
fn omp_noiseless_inside_regime() {
    let cfg = reference_cfg();
    let mut exact = 0;
    for seed in 0..200 {
        let t = trial(&cfg, seed, 13, f64::INFINITY);
        let sensor = Sensor::new(cfg, &t.a).unwrap();
        let dict = sensor.dictionary(13).unwrap();
        let (res, trace) = omp_joint_traced(&t.z.frames, &dict, &cfg).unwrap();
        assert_eq!(res.support_est.len(), 3);
        assert!(trace
            .residuals
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
        if res.support_est == t.z.true_support {
            exact += 1;
            assert!(
                res.residual_sq <= 1e-16 * energy(&t.z.frames),
                "seed {seed}"
            );
        }
    }
    assert!(exact >= 198, "exact recoveries {exact}/200");
}

#[test]
fn omp_single_atom() {
    let cfg = OfdmConfig::new(32, 8, 1, 20, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = sample_measurement_matrix(&cfg, &mut rng);
    let sensor = Sensor::new(cfg, &a).unwrap();
    let dict = sensor.dictionary(10).unwrap();
    let j0 = 17;
    // Same unit symbol on atom j0 in every block.
    let frames: Vec<CVec> = (0..cfg.n_blocks)
        .map(|_| dict.b1.column(j0) + dict.b2.column(j0))
        .collect();
    let res = omp_joint(&frames, &dict, &cfg).unwrap();
    assert_eq!(res.support_est.indices(), &[j0]);
    assert!(res.residual_sq < 1e-20);
}

#[test]
fn omp_zero_input_ties_to_lowest_indices() {
    let cfg = reference_cfg();
    let t = trial(&cfg, 1, 13, f64::INFINITY);
    let dict = Sensor::new(cfg, &t.a).unwrap().dictionary(13).unwrap();
    let zeros = vec![CVec::zeros(cfg.m); cfg.n_blocks];
    let res = omp_joint(&zeros, &dict, &cfg).unwrap();
    assert_eq!(res.support_est.indices(), &[0, 1, 2]);
    assert_eq!(res.residual_sq, 0.0);
    assert!(res.coeffs.iter().all(|c| c.norm() == 0.0));
    assert_eq!(res.coeffs.len(), 3 * 11);
}

#[test]
fn omp_rejects_unresolvable_offset() {
    let cfg = reference_cfg();
    let t = trial(&cfg, 2, 1, f64::INFINITY);
    let dict = Sensor::new(cfg, &t.a).unwrap().dictionary(1).unwrap();
    assert!(matches!(
        omp_joint(&t.z.frames, &dict, &cfg),
        Err(SenseError::RankDeficient { d: 1, .. })
    ));
}

#[test]
fn annihilator_cases() {
    let p = column_space_annihilator(&CMat::zeros(6, 0), 1e-12);
    assert_eq!(p, CMat::identity(6, 6));

    let cfg = reference_cfg();
    let t = trial(&cfg, 3, 2, f64::INFINITY);
    let dict = Sensor::new(cfg, &t.a).unwrap().dictionary(2).unwrap();
    let p = column_space_annihilator(&dict.b1, rank_tolerance(20, 32));
    assert_eq!(p.shape(), (18, 20));
    assert!(max_abs(&(&p * &dict.b1)) < 1e-10);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sq = CMat::from_fn(5, 5, |_, _| Complex64::new(rng.random(), rng.random()));
    assert_eq!(
        column_space_annihilator(&sq, rank_tolerance(5, 5)).nrows(),
        0
    );
}

#[test]
fn annihilator_exact_on_both_edges() {
    let cfg = reference_cfg();
    for seed in 0..20 {
        let t = trial(&cfg, seed, 0, f64::INFINITY);
        let sensor = Sensor::new(cfg, &t.a).unwrap();
        for d in [0, 1, 2] {
            let b1 = sensor.dictionary(d).unwrap().b1;
            let p = column_space_annihilator(&b1, rank_tolerance(20, 32));
            assert_eq!(p.nrows(), 20 - d);
            assert!(max_abs(&(&p * &b1)) < 1e-10);
        }
        for d in [38, 39] {
            let b2 = sensor.dictionary(d).unwrap().b2;
            let p = column_space_annihilator(&b2, rank_tolerance(20, 32));
            assert_eq!(p.nrows(), 20 - (40 - d));
            assert!(max_abs(&(&p * &b2)) < 1e-10);
        }
    }
}

#[test]
fn somp_basic_contracts() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut atoms = CMat::from_fn(8, 12, |_, _| Complex64::new(rng.random(), rng.random()));
    for mut col in atoms.column_iter_mut() {
        col.normalize_mut();
    }
    let frames = vec![atoms.column(7).into_owned(); 4];
    let fit = somp(&frames, &atoms, 2).unwrap();
    assert_eq!(fit.order[0], 7);

    let fit = somp(&frames, &atoms, 12).unwrap();
    assert_eq!(fit.support, SupportSet::full(12));
    assert!(somp(&frames, &atoms, 0).is_err());
    assert!(somp(&frames, &atoms, 13).is_err());
}

#[test]
fn somp_on_projected_model() {
    let cfg = reference_cfg();
    let mut exact = 0;
    for seed in 0..200 {
        let t = trial(&cfg, seed, 1, f64::INFINITY);
        let dict = Sensor::new(cfg, &t.a).unwrap().dictionary(1).unwrap();
        let p = column_space_annihilator(&dict.b1, rank_tolerance(20, 32));
        let frames: Vec<CVec> = t.z.frames.iter().map(|z| &p * z).collect();
        let fit = somp(&frames, &(&p * &dict.b2), 3).unwrap();
        exact += usize::from(fit.support == t.z.true_support);
    }
    assert!(exact >= 190, "exact recoveries {exact}/200");
}

#[test]
fn zero_offset_is_plain_somp() {
    let cfg = reference_cfg();
    let t = trial(&cfg, 7, 0, f64::INFINITY);
    let sensor = Sensor::new(cfg, &t.a).unwrap();
    let res = sensor.recover_known_offset(&t.z, 0).unwrap();
    let dict = sensor.dictionary(0).unwrap();
    let plain = somp(&t.z.frames, &dict.b2, 3).unwrap();
    assert_eq!(res.support_est, plain.support);
    assert_eq!(res.support_est, t.z.true_support);
}

fn known_offset_rate(d: usize) -> usize {
    let cfg = reference_cfg();
    (0..200)
        .filter(|&seed| {
            let t = trial(&cfg, 1000 + seed, d, f64::INFINITY);
            let res = recover_known_offset(&t.z, &t.a, d, &cfg).unwrap();
            assert!(res.residual_sq <= energy(&t.z.frames));
            res.support_est == t.z.true_support
        })
        .count()
}

#[test]
fn known_offset_tail_edge() {
    let hits = known_offset_rate(39);
    assert!(hits >= 190, "{hits}/200");
}

#[test]
fn known_offset_inside() {
    let hits = known_offset_rate(20);
    assert!(hits >= 198, "{hits}/200");
}

#[test]
fn objective_projection_identities() {
    let cfg = OfdmConfig::new(8, 2, 2, 5, 2).unwrap();
    let t = trial(&cfg, 8, 4, f64::INFINITY);
    let sensor = Sensor::new(cfg, &t.a).unwrap();
    let s = t.z.true_support.clone();
    let dict = sensor.dictionary(4).unwrap();
    let b = restrict_support(&dict, &s, 2).unwrap();
    // Inside the column space.
    let coeff = CVec::from_fn(b.ncols(), |i, _| Complex64::new(i as f64, 1.0));
    let inside = &b * coeff;
    let frames: Vec<CVec> = (0..2).map(|n| inside.rows(n * 5, 5).into_owned()).collect();
    assert!(sensor.offset_objective(&frames, 4, &s).unwrap() < 1e-24 * inside.norm_squared());
    // Orthogonal to it.
    let p = column_space_annihilator(&b, rank_tolerance(b.nrows(), b.ncols()));
    let ortho: CVec = p.adjoint().column(0).into_owned();
    let frames: Vec<CVec> = (0..2).map(|n| ortho.rows(n * 5, 5).into_owned()).collect();
    let obj = sensor.offset_objective(&frames, 4, &s).unwrap();
    assert!((obj - ortho.norm_squared() / 10.0).abs() < 1e-12);
}

#[test]
fn objective_separates_offsets() {
    let cfg = reference_cfg();
    let mut larger = 0;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let d = rng.random_range(0..cfg.n_total - 7);
        let t = trial(&cfg, 500 + seed, d, f64::INFINITY);
        let at_truth = offset_objective(&t.z.stacked, d, &t.z.true_support, &t.a, &cfg).unwrap();
        if cfg.is_resolvable_offset(d) {
            assert!(at_truth < 1e-18, "seed {seed}: {at_truth:e}");
        }
        let shifted = offset_objective(&t.z.stacked, d + 7, &t.z.true_support, &t.a, &cfg).unwrap();
        larger += usize::from(shifted > at_truth);
    }
    assert!(larger >= 198, "{larger}/200");
}

#[test]
fn objective_matches_dense_projection() {
    let cfg = OfdmConfig::new(8, 2, 2, 5, 3).unwrap();
    for seed in 0..30 {
        let t = trial(&cfg, seed, (seed % 10) as usize, 5.0);
        let sensor = Sensor::new(cfg, &t.a).unwrap();
        for d in 0..cfg.n_total {
            let b = restrict_support(&sensor.dictionary(d).unwrap(), &t.z.true_support, 3).unwrap();
            let zm = CMat::from_column_slice(t.z.stacked.len(), 1, t.z.stacked.as_slice());
            let dense = (&zm - &b * pinv_solve(&b, &zm)).norm_squared() / 15.0;
            let fast = sensor
                .offset_objective(&t.z.frames, d, &t.z.true_support)
                .unwrap();
            assert!(
                (dense - fast).abs() < 1e-10 * (1.0 + dense),
                "seed {seed} d {d}: {dense:e} vs {fast:e}"
            );
        }
    }
}

#[test]
fn unknown_offset_noiseless() {
    let cfg = reference_cfg();
    let mut exact = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(0..cfg.n_total);
        let t = trial(&cfg, 7000 + seed, d, f64::INFINITY);
        let res = estimate_offset_and_support(&t.z, &t.a, &cfg, 3).unwrap();
        assert!(res.iterations >= 1 && res.iterations <= 3);
        exact += usize::from(res.d_est == Some(d) && res.support_est == t.z.true_support);
    }
    assert!(exact >= 190, "{exact}/200");
}

#[test]
fn single_candidate_matches_known_offset() {
    let cfg = reference_cfg();
    for (seed, d) in [(1u64, 0usize), (2, 13), (3, 39), (4, 25)] {
        let t = trial(&cfg, seed, d, 0.0);
        let sensor = Sensor::new(cfg, &t.a).unwrap();
        let known = sensor.recover_known_offset(&t.z, d).unwrap();
        let searched = sensor.estimate_over(&t.z.frames, &[d], 4).unwrap();
        assert_eq!(searched.d_est, Some(d));
        assert_eq!(searched.support_est, known.support_est);
        assert_eq!(searched.coeffs, known.coeffs);
        assert_eq!(searched.residual_sq, known.residual_sq);
    }
}

#[test]
fn exhaustive_oracle_agrees_at_tiny_scale() {
    let cfg = OfdmConfig::new(6, 2, 2, 5, 2).unwrap();
    let mut compared = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(cfg.k..=cfg.n_total - cfg.k);
        let t = trial(&cfg, 900 + seed, d, f64::INFINITY);
        let sensor = Sensor::new(cfg, &t.a).unwrap();
        let res = sensor.recover_known_offset(&t.z, d).unwrap();
        if res.residual_sq > 1e-20 * energy(&t.z.frames) {
            continue;
        }
        let dict = sensor.dictionary(d).unwrap();
        let zm = CMat::from_column_slice(t.z.stacked.len(), 1, t.z.stacked.as_slice());
        let best = (0..cfg.n_sub)
            .combinations(cfg.k)
            .map(|sub| {
                let s = SupportSet::new(sub, cfg.n_sub).unwrap();
                let b = restrict_support(&dict, &s, cfg.n_blocks).unwrap();
                let r = (&zm - &b * pinv_solve(&b, &zm)).norm_squared();
                (s, r)
            })
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        assert_eq!(best.0, res.support_est, "seed {seed}");
        compared += 1;
    }
    assert!(compared > 50, "only {compared} zero-residual runs");
}

#[test]
fn regime_classification() {
    let cfg = reference_cfg();
    assert_eq!(OffsetRegime::classify(&cfg, 2), OffsetRegime::Below);
    assert_eq!(OffsetRegime::classify(&cfg, 3), OffsetRegime::Inside);
    assert_eq!(OffsetRegime::classify(&cfg, 37), OffsetRegime::Inside);
    assert_eq!(OffsetRegime::classify(&cfg, 38), OffsetRegime::Above);
}

#[test]
fn rejects_bad_inputs() {
    let cfg = reference_cfg();
    let t = trial(&cfg, 1, 5, f64::INFINITY);
    let sensor = Sensor::new(cfg, &t.a).unwrap();
    assert!(matches!(
        sensor.recover_known_offset(&t.z, 40),
        Err(SenseError::InvalidOffset { .. })
    ));
    assert!(sensor.recover_frames(&t.z.frames[..9], 5).is_err());
    assert!(sensor.estimate_over(&t.z.frames, &[], 1).is_err());
    assert!(sensor.estimate_over(&t.z.frames, &[5], 0).is_err());
    let other = OfdmConfig::new(32, 8, 3, 19, 10).unwrap();
    assert!(Sensor::new(other, &t.a).is_err());
}
