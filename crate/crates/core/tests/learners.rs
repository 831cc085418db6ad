use ctxengage_core::learn::linear::{logistic_loss_grad, train_nb};
use ctxengage_core::learn::tree::{
    train_forest, train_gbt, train_tree, Binned, ForestConfig, GbtConfig, Impurity, SubsetStrategy, TreeConfig,
};
use ctxengage_core::learn::Matrix;
use ctxengage_core::rng::stream;
use rand::Rng;

fn random_problem(seed: u64, n: usize, d: usize) -> (Matrix, Vec<i64>) {
    let mut rng = stream(seed, "learners");
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(0.0..3.0)).collect()).collect();
    let y = rows
        .iter()
        .map(|r| (r[0] - r[d - 1] + rng.gen_range(-1.0..1.0) > 0.0) as i64)
        .collect();
    (Matrix::from_rows(&rows).unwrap(), y)
}

#[test]
fn logistic_gradient_matches_central_differences() {
    for seed in 0..10 {
        let (x, y) = random_problem(seed, 200, 5);
        let mut rng = stream(seed, "weights");
        let w: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = rng.gen_range(-1.0..1.0);
        let (_, gw, gb) = logistic_loss_grad(&x, &y, &w, b);
        let h = 1e-6;
        let close = |num: f64, ana: f64| (num - ana).abs() <= 1e-4 * ana.abs().max(1e-3);
        for j in 0..5 {
            let (mut up, mut dn) = (w.clone(), w.clone());
            up[j] += h;
            dn[j] -= h;
            let num = (logistic_loss_grad(&x, &y, &up, b).0 - logistic_loss_grad(&x, &y, &dn, b).0) / (2.0 * h);
            assert!(close(num, gw[j]), "seed {seed} w{j}: {num} vs {}", gw[j]);
        }
        let num = (logistic_loss_grad(&x, &y, &w, b + h).0 - logistic_loss_grad(&x, &y, &w, b - h).0) / (2.0 * h);
        assert!(close(num, gb), "seed {seed} b: {num} vs {gb}");
    }
}

#[test]
fn depth_two_tree_solves_xor() {
    let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 2) as f64, ((i / 2) % 2) as f64]).collect();
    let y: Vec<i64> = rows.iter().map(|r| (r[0] != r[1]) as i64).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let b = Binned::new(&x);
    let idx: Vec<u32> = (0..40).collect();
    for imp in [Impurity::Gini, Impurity::Entropy] {
        let t = train_tree(&b, &idx, &y, &TreeConfig::classifier(imp, 2));
        assert!(t.depth() <= 2);
        for i in 0..40 {
            assert_eq!(t.predict_value(&x, i), y[i] as f64, "{imp:?} row {i}");
        }
    }
}

#[test]
fn boosting_loss_never_increases_without_subsampling() {
    for seed in 0..5 {
        let (x, y) = random_problem(seed, 500, 4);
        let b = Binned::new(&x);
        let idx: Vec<u32> = (0..500).collect();
        let cfg = GbtConfig {
            num_iter: 20,
            max_depth: 5,
            min_instances: 1,
            subsampling_rate: 1.0,
            min_info_gain: 0.0,
            step_size: 0.1,
        };
        let (_, hist) = train_gbt(&b, &idx, &y, &cfg, seed).unwrap();
        assert_eq!(hist.len(), 21);
        for w in hist.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "seed {seed}: {hist:?}");
        }
        assert!(hist[20] < hist[0]);
    }
}

#[test]
fn naive_bayes_probabilities_sum_to_one() {
    let (x, y) = random_problem(4, 300, 6);
    for s in [0.0, 0.5, 1.0] {
        let m = train_nb(&x, &y, s).unwrap();
        for p in m.class_probabilities(&x) {
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
    assert!(train_nb(&x, &y, 1.5).is_err());
}

#[test]
fn forest_is_reproducible_per_seed() {
    let (x, y) = random_problem(6, 400, 8);
    let b = Binned::new(&x);
    let idx: Vec<u32> = (0..400).collect();
    let cfg = ForestConfig {
        impurity: Impurity::Gini,
        num_trees: 10,
        strategy: SubsetStrategy::Sqrt,
        max_depth: 5,
        bootstrap: true,
    };
    let a = train_forest(&b, &idx, &y, &cfg, 17);
    let again = train_forest(&b, &idx, &y, &cfg, 17);
    let other = train_forest(&b, &idx, &y, &cfg, 18);
    assert_eq!(a, again);
    assert_ne!(a, other);
}
