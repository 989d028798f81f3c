use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use labelshift::adjust::{
    bbe_estimate_prior, distpfn_adjust, distpfn_t_adjust, em_estimate_prior, predicted_label_distribution,
    AdjustmentSpec, ConfusionMatrix, Method, NumeratorMode,
};
use labelshift::models::{fit, predict_posteriors, GaussianNb};
use labelshift::{CategoricalDistribution, GaussianMixtureSpec, ModelSpec, PosteriorMatrix};

fn fixture_posteriors(n: usize) -> (PosteriorMatrix, CategoricalDistribution) {
    let prior = CategoricalDistribution::new(vec![0.8, 0.2]).unwrap();
    let spec = GaussianMixtureSpec::fixture(prior.clone(), 1);
    let train = spec.sample(1000).unwrap();
    let test = spec.with_prior(CategoricalDistribution::new(vec![0.3, 0.7]).unwrap()).with_seed(2).sample(n).unwrap();
    let nb = GaussianNb::fit(&train).unwrap();
    (nb.predict_posteriors(test.features.view()).unwrap(), prior)
}

fn adjustments(c: &mut Criterion) {
    let mut group = c.benchmark_group("adjust");
    for n in [1_000, 10_000] {
        let (posts, prior) = fixture_posteriors(n);
        group.bench_with_input(BenchmarkId::new("distpfn", n), &posts, |b, p| {
            b.iter(|| distpfn_adjust(black_box(p), &prior, NumeratorMode::TestAverage).unwrap())
        });
        let spec = AdjustmentSpec::new(Method::DistPfnT).per_instance();
        group.bench_with_input(BenchmarkId::new("distpfn_t", n), &posts, |b, p| {
            b.iter(|| distpfn_t_adjust(black_box(p), &prior, &spec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("em", n), &posts, |b, p| {
            b.iter(|| em_estimate_prior(black_box(p), &prior, 100, 1e-6).unwrap())
        });
        let confusion = ConfusionMatrix::from_predictions(&posts.predictions(), &posts.predictions(), 2).unwrap();
        let observed = predicted_label_distribution(&posts).unwrap();
        group.bench_with_input(BenchmarkId::new("bbe", n), &observed, |b, q| {
            b.iter(|| bbe_estimate_prior(&confusion, black_box(q)).unwrap())
        });
    }
    group.finish();
}

fn knn_predict(c: &mut Criterion) {
    let prior = CategoricalDistribution::new(vec![0.5, 0.5]).unwrap();
    let spec = GaussianMixtureSpec::fixture(prior, 3);
    let train = spec.sample(500).unwrap();
    let test = spec.with_seed(4).sample(500).unwrap();
    let model = fit(&ModelSpec::knn(10), &train).unwrap();
    c.bench_function("knn_predict_500x500", |b| {
        b.iter(|| predict_posteriors(&model, black_box(test.features.view())).unwrap())
    });
}

criterion_group!(benches, adjustments, knn_predict);
criterion_main!(benches);
