//! A quick invariant suite runnable from the command line.

use egp_core::engine::{train, EngineConfig, Variant};
use egp_core::expr_tree::{apply, e_crossover, e_mutation, ramped_half_and_half};
use egp_core::forest::{certainty_row, majority_vote, weighted_vote, CertaintyMatrix, VoteMatrix};
use egp_core::{kruskal_wallis, ClassModel, DataSplit, FeatureMask, FeatureSimilarity, Node};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::synthetic::two_gaussians;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, result: Result<(), String>) -> Check {
    Check {
        name,
        passed: result.is_ok(),
        detail: result.err().unwrap_or_default(),
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_mask(rng: &mut ChaCha8Rng, n_feat: usize) -> FeatureMask {
    let k = rng.gen_range(1..=n_feat);
    let feats = rand::seq::index::sample(rng, n_feat, k).into_vec();
    FeatureMask::new(feats, n_feat).expect("nonempty in-range mask")
}

fn protected_operators() -> Result<(), String> {
    let cases = [
        (Node::Div, 3.0, 0.0, 3.0),
        (Node::Log, -2.0, 0.0, -2.0),
        (Node::Log, 0.0, 0.0, 0.0),
        (Node::Sqrt, -4.0, 0.0, -4.0),
        (Node::Sqrt, 9.0, 0.0, 3.0),
        (Node::Mul, f64::MAX, 2.0, f64::MAX),
    ];
    for (op, a, b, want) in cases {
        let got = apply(op, a, b);
        ensure(got == want, || format!("{op:?}({a}, {b}) = {got}, expected {want}"))?;
    }
    Ok(())
}

fn operator_closure() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n_feat = 8;
    let ds = two_gaussians(60, n_feat, 1);
    let sim = FeatureSimilarity::compute(&ds, &DataSplit::random(ds.n_obs(), &mut rng));
    for _ in 0..500 {
        let (m1, m2) = (random_mask(&mut rng, n_feat), random_mask(&mut rng, n_feat));
        let p1 = ramped_half_and_half(&m1, (2, 6), &mut rng);
        let p2 = ramped_half_and_half(&m2, (2, 6), &mut rng);
        let out = e_crossover((&p1, &m1), (&p2, &m2), &sim, &mut rng);
        let mutant = e_mutation(&out.first, &m1, 4, &mut rng);
        ensure(out.first.respects(&m1) && out.second.respects(&m2) && mutant.respects(&m1), || {
            format!("offspring escaped its mask: {}", out.first)
        })?;
    }
    Ok(())
}

fn voting() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let members = rng.gen_range(1..8);
        let rows: Vec<Vec<u8>> = (0..10).map(|_| (0..members).map(|_| rng.gen_range(0..2)).collect()).collect();
        let c: f64 = rng.gen_range(0.01..1.0);
        let cert = CertaintyMatrix::from_rows(vec![vec![c; members]; rows.len()]);
        let votes = VoteMatrix::from_rows(rows);
        let w = weighted_vote(&votes, &cert);
        let m = majority_vote(&votes, &mut rng);
        for r in 0..votes.n_rows() {
            let ones = votes.row(r).iter().filter(|&&v| v == 1).count();
            let want = if 2 * ones == members { 0 } else { m[r] };
            ensure(w[r] == want, || format!("row {:?}: weighted {} expected {want}", votes.row(r), w[r]))?;
        }
    }
    for n in 1..30 {
        let cert = certainty_row(&vec![0.25f64; n], &vec![0; n]);
        let want = 1.0 - 1.0 / (n as f64).sqrt();
        ensure(cert.iter().all(|c| (c - want).abs() < 1e-12), || format!("equal residuals, n={n}: {cert:?}"))?;
    }
    Ok(())
}

fn kruskal_wallis_example() -> Result<(), String> {
    let r = kruskal_wallis(&[[1.0, 2.0, 3.0], [101.0, 102.0, 103.0]]).map_err(|e| e.to_string())?;
    ensure((r.h - 27.0 / 7.0).abs() < 1e-12 && (r.p_value - 0.049534613435626).abs() < 1e-12, || {
        format!("H = {}, p = {}", r.h, r.p_value)
    })
}

fn mahalanobis_identity() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = 3;
    let identity: Vec<f64> = (0..d * d).map(|i| if i % (d + 1) == 0 { 1.0 } else { 0.0 }).collect();
    let mu0: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mu1: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let model = ClassModel::from_parts(Some((mu0.clone(), identity.clone())), Some((mu1.clone(), identity)));
    let sq = |z: &[f64], mu: &[f64]| z.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    for _ in 0..200 {
        let z: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let euclid = u8::from(sq(&z, &mu1) < sq(&z, &mu0));
        ensure(model.classify(&z) == euclid, || format!("point {z:?}"))?;
    }
    Ok(())
}

fn short_training_run() -> Result<(), String> {
    let ds = two_gaussians(120, 4, 9);
    let cfg = EngineConfig {
        generations: 8,
        subpop_size: 30,
        ..EngineConfig::new(Variant::EgpN, 2)
    };
    let m = train(&ds, &cfg).map_err(|e| e.to_string())?;
    for w in m.trace.windows(2) {
        ensure(w[1].best_forest_acc >= w[0].best_forest_acc, || format!("forest accuracy fell at {}", w[1].generation))?;
        ensure(w[1].best_tree_rmse <= w[0].best_tree_rmse, || format!("tree rmse rose at {}", w[1].generation))?;
    }
    ensure(m.diagnostics.prunes.iter().all(|p| p.accuracy_after >= p.accuracy_before), || {
        "a prune lowered accuracy".into()
    })?;
    let replay = m.accuracy_on(&ds, &m.split.train).map_err(|e| e.to_string())?;
    ensure(replay == m.train_accuracy, || format!("replayed accuracy {replay} != {}", m.train_accuracy))
}

/// Runs every check; a few seconds at most.
pub fn run() -> Vec<Check> {
    vec![
        check("protected operators", protected_operators()),
        check("operator closure", operator_closure()),
        check("voting and certainty", voting()),
        check("kruskal-wallis", kruskal_wallis_example()),
        check("mahalanobis identity", mahalanobis_identity()),
        check("training invariants", short_training_run()),
    ]
}
