use std::path::Path;
use std::sync::Arc;

use stochctl::powernet::{
    build_powernet, case_study_labels, case_study_letter, reach_avoid_automaton, PowerNetParams, Scenario,
    TruncatedGaussian,
};
use stochctl::product::compose;

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn truncated_gaussian_against_quadrature() {
    let (mu, sigma) = (0.1, 0.03);
    let t = TruncatedGaussian::new(mu, sigma, 0.0, 2.0).unwrap();
    let density = |x: f64| (-0.5 * ((x - mu) / sigma).powi(2)).exp();
    let mass = simpson(density, 0.0, 2.0, 10_000_000);
    let below = simpson(density, 0.0, 0.1, 10_000_000);
    assert!((t.cdf(0.1) - below / mass).abs() < 1e-10, "{} vs {}", t.cdf(0.1), below / mass);
    assert_eq!(t.cdf(0.0), 0.0);
    assert_eq!(t.cdf(2.0), 1.0);
}

#[test]
fn every_row_is_a_distribution() {
    let model = build_powernet(&PowerNetParams::default(), Scenario::Safety).unwrap();
    let mdp = &model.mdp;
    assert_eq!(mdp.n_states(), 64 * 64);
    assert_eq!(mdp.n_actions(), 5 * 11);
    let mut worst: f64 = 0.0;
    for x in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            let row = mdp.row(x, a).unwrap();
            assert!(row.iter().all(|&(_, p)| p >= 0.0));
            worst = worst.max((row.iter().map(|&(_, p)| p).sum::<f64>() - 1.0).abs());
        }
    }
    assert!(worst < 1e-9, "row sum off by {worst:e}");
}

#[test]
fn reach_avoid_letters() {
    let letter = |x: f64, y: f64| case_study_letter(Scenario::ReachAvoid, &[x, y]);
    assert_eq!(letter(1.0, 1.0), "S");
    assert_eq!(letter(1.9, 1.9), "G");
    assert_eq!(letter(0.1, 0.1), "BOT");
    assert_eq!(letter(1.9, 1.0), "G1");
    assert_eq!(letter(1.0, 1.9), "G2");
    assert_eq!(case_study_letter(Scenario::Safety, &[1.6, 1.0]), "BOT");
    assert_eq!(case_study_letter(Scenario::Safety, &[1.5, 0.2]), "S");
}

#[test]
fn bundled_configs_agree_with_the_builtin_models() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    for (file, scenario) in [
        ("powernet_safety.cfg", Scenario::Safety),
        ("powernet_reachavoid.cfg", Scenario::ReachAvoid),
    ] {
        let model = stochctl::load_model(&dir.join(file)).unwrap();
        let labels = model.mdp.labeling().unwrap();
        let expected = case_study_labels(&model.grid, scenario);
        let names = |l: &stochctl::mdp::Labeling| -> Vec<String> {
            (0..l.letters().len()).map(|x| l.letter_name(x).to_string()).collect()
        };
        assert_eq!(names(labels), names(&expected), "{file}");

        let builtin = build_powernet(&PowerNetParams::default(), scenario).unwrap();
        let f: Vec<f64> = (0..builtin.mdp.n_states()).map(|x| (x % 7) as f64 / 7.0).collect();
        assert_eq!(model.mdp.sweep(&f), builtin.mdp.sweep(&f), "{file}");
    }
}

#[test]
fn product_with_the_corridor_automaton() {
    let model = build_powernet(&PowerNetParams::default(), Scenario::ReachAvoid).unwrap();
    let n = model.mdp.n_states();
    let product = compose(Arc::new(model.mdp), &reach_avoid_automaton()).unwrap();
    assert_eq!(product.mdp.n_states(), 5 * n);
}
