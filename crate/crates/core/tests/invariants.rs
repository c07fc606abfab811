use icageo_core::dataset::Dataset;
use icageo_core::eval::diagnose;
use icageo_core::ica::{stationarity_matrix, ScoreKind, ScoreModel};
use icageo_core::linalg::off_diagonal_norm;
use icageo_core::model::{simulate, MixingModel};
use icageo_core::rng::Rng;
use icageo_core::source::SourceSpec;
use nalgebra::DMatrix;

fn sources(specs: &[SourceSpec], t: usize, seed: u64) -> Dataset {
    let model = MixingModel::new(DMatrix::identity(specs.len(), specs.len()), specs.to_vec()).unwrap();
    simulate(&model, t, &Rng::new(seed)).unwrap().1
}

#[test]
fn stationarity_norm_shrinks_like_inverse_root_t() {
    let specs = [SourceSpec::Laplace, SourceSpec::Uniform, SourceSpec::Gaussian];
    for kind in [ScoreKind::Tanh, ScoreKind::Cube, ScoreKind::Identity] {
        let scores = vec![ScoreModel::new(kind); specs.len()];
        let mean_norm = |t: usize| {
            (0..10)
                .map(|seed| off_diagonal_norm(&stationarity_matrix(&sources(&specs, t, seed), &scores).unwrap()))
                .sum::<f64>()
                / 10.0
        };
        let norms: Vec<f64> = [1_000, 10_000, 100_000].into_iter().map(mean_norm).collect();
        for w in norms.windows(2) {
            // √10 ≈ 3.16 per decade
            let ratio = w[0] / w[1];
            assert!((2.0..5.0).contains(&ratio), "{kind}: {norms:?}");
        }
    }
}

#[test]
fn diagnose_is_permutation_equivariant() {
    let s = sources(&[SourceSpec::Laplace, SourceSpec::Uniform, SourceSpec::Gaussian], 5_000, 3);
    let mut rng = Rng::new(4);
    let model = MixingModel::random(vec![SourceSpec::Gaussian; 3], 5.0, &mut rng).unwrap();
    let x = s.transform(model.mixing()).unwrap();
    let order = [2, 0, 1];
    let permuted = x.select_channels(&order).unwrap();
    let a = diagnose(&x, 9).unwrap();
    let b = diagnose(&permuted, 9).unwrap();
    assert!((a.correlation - b.correlation).abs() < 1e-12);
    let (ma, mb) = (a.mi.unwrap().value, b.mi.unwrap().value);
    assert!((ma - mb).abs() < 1e-10, "{ma} {mb}");
    for (k, &j) in order.iter().enumerate() {
        assert_eq!(b.marginal_negentropies[k], a.marginal_negentropies[j]);
    }
}
