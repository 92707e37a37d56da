use tailnorm::evt::hill;
use tailnorm::parallel::{with_workers, Execution};
use tailnorm::path_gen::{
    simulate_driver, simulate_product, FbmMethod, Multiplier, ProcessSpec, ProductSampler,
    ProductSpec,
};
use tailnorm::{discrete_norm, NormOrder, OrderedSample, RandomStream, TailModel};

fn pareto_bm(gamma: f64) -> ProductSpec {
    ProductSpec {
        multiplier: Multiplier::Tail(TailModel::pareto(gamma).unwrap()),
        driver: ProcessSpec::brownian(),
    }
}

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

#[test]
fn multiplier_and_driver_are_independent() {
    // γ = 0.25 keeps four moments, so the sample correlation has se ≈ 0.01.
    let spec = pareto_bm(0.25);
    let m = 64;
    let sampler = ProductSampler::new(&spec, m).unwrap();
    let mut ws = sampler.driver().workspace();
    let stream = RandomStream::new(2024);
    let mut row = vec![0.0; m];
    let (mut r, mut z) = (Vec::new(), Vec::new());
    for i in 0..10_000 {
        let ri = sampler.fill_row(&stream, i, &mut ws, &mut row);
        r.push(ri);
        z.push(discrete_norm(&row, NormOrder::Infinity).unwrap() / ri);
    }
    let rho = correlation(&r, &z);
    assert!(rho.abs() < 0.05, "corr = {rho}");
}

#[test]
fn product_sup_norm_has_multiplier_index() {
    let n = 5000;
    let paths = simulate_product(
        &pareto_bm(0.5),
        1024,
        n,
        &RandomStream::new(8),
        Execution::Parallel,
    )
    .unwrap();
    let norms: Vec<f64> = paths
        .rows()
        .map(|r| discrete_norm(r, NormOrder::Infinity).unwrap())
        .collect();
    let k = (n as f64).sqrt().floor() as usize;
    let g = hill(&OrderedSample::new(norms).unwrap(), k)
        .unwrap()
        .gamma_hat;
    assert!(g > 0.35 && g < 0.65, "γ̂ = {g}");
}

#[test]
fn unit_multiplier_reproduces_driver() {
    let driver = ProcessSpec::fbm(0.3).unwrap();
    let spec = ProductSpec {
        multiplier: Multiplier::Fixed(1.0),
        driver,
    };
    let stream = RandomStream::new(5);
    let a = simulate_product(&spec, 128, 20, &stream, Execution::Sequential).unwrap();
    let b = simulate_driver(&driver, 128, 20, &stream, Execution::Sequential).unwrap();
    assert_eq!(a, b);
}

#[test]
fn paths_do_not_depend_on_scheduling() {
    let spec = ProductSpec {
        multiplier: Multiplier::Tail(TailModel::burr(1.0, 2.0).unwrap()),
        driver: ProcessSpec::fbm(0.7).unwrap(),
    };
    let stream = RandomStream::new(77);
    let seq = simulate_product(&spec, 256, 64, &stream, Execution::Sequential).unwrap();
    for workers in [1, 2, 5] {
        let par = with_workers(Some(workers), || {
            simulate_product(&spec, 256, 64, &stream, Execution::Parallel).unwrap()
        })
        .unwrap();
        assert_eq!(seq, par);
    }
    assert_eq!(seq.to_csv(), seq.to_csv());
}

#[test]
fn fbm_methods_agree_in_distribution() {
    // Both syntheses are exact; compare Var Z(1/2) and Cov(Z(1/4), Z(3/4)).
    let (m, n, h) = (64, 20_000, 0.7);
    let cov = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / n as f64;
    let theory =
        |s: f64, t: f64| 0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h));
    for method in [FbmMethod::CirculantEmbedding, FbmMethod::Cholesky] {
        let spec = ProcessSpec::fbm(h).unwrap().with_method(method);
        let p = simulate_driver(&spec, m, n, &RandomStream::new(9), Execution::Parallel).unwrap();
        let mid: Vec<f64> = p.column(m / 2).collect();
        let q1: Vec<f64> = p.column(m / 4).collect();
        let q3: Vec<f64> = p.column(3 * m / 4).collect();
        // Relative se of a second moment from 20000 Gaussian draws is about 1%.
        let v = cov(&mid, &mid);
        assert!(
            (v / theory(0.5, 0.5) - 1.0).abs() < 0.04,
            "{method:?} var {v}"
        );
        let c = cov(&q1, &q3);
        assert!(
            (c / theory(0.25, 0.75) - 1.0).abs() < 0.06,
            "{method:?} cov {c}"
        );
    }
}

#[test]
fn csv_round_trip_is_lossless_for_simulated_paths() {
    let p = simulate_product(
        &pareto_bm(0.5),
        32,
        50,
        &RandomStream::new(3),
        Execution::Parallel,
    )
    .unwrap();
    let back = tailnorm::PathMatrix::from_csv(&p.to_csv()).unwrap();
    assert_eq!(p, back);
}
