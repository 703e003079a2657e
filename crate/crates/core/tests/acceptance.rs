//! Acceptance suite. Each test prints one PASS/FAIL line; run with
//! `cargo test -p epr-chain --test acceptance -- --nocapture --test-threads=1`.

mod common;

use std::time::Instant;

use common::*;
use epr_chain::analysis::{
    chi_square_gof, correlation_rate, empirical_distribution, no_signaling_algebraic, no_signaling_check,
    total_variation, two_sample_tv_bound,
};
use epr_chain::cli::{run_command, EXIT_OK};
use epr_chain::measurement::{ideal_coupling_unitary, verify_one_to_one, RngStream};
use epr_chain::protocol::{
    prepare_initial, reduced_particle_state, run_chain, run_step1, run_step2, ChainConfig, Coupling, Stage,
};
use epr_chain::state::{
    apply_unitary, fidelity_pure, partial_trace, purity, random_density, random_state, random_unitary,
    tensor_product, unitarity_error, DensityMatrix, Layout, StateVector,
};
use epr_chain::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: &str, name: &str, ok: bool, detail: String) {
    println!("[{}] {id} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
}

fn random_amplitudes(d: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    random_state(Layout::single("x", d).unwrap(), rng).amps().to_vec()
}

#[test]
fn ac1_post_step1_mixedness() {
    let config = ChainConfig::builder(2, vec![c(0.6, 0.0), c(0.0, 0.8)]).build().unwrap();
    let s = run_step1(&prepare_initial(&config).unwrap(), &config).unwrap();
    let red = reduced_particle_state(&s).unwrap();
    let expect = DensityMatrix::diagonal(Layout::single("particle", 2).unwrap(), &[0.36, 0.64]).unwrap();
    let err = red.max_abs_diff(&expect).unwrap();
    let p = purity(&red);
    let ok = err <= 1e-10 && (p - 0.5392).abs() <= 1e-10;
    report("AC1", "post-step-1 mixedness", ok, format!("max entry error {err:.2e}, purity {p:.12}"));
    assert!(ok);
}

#[test]
fn ac2_collapse_to_definite_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_fid = 0.0f64;
    let mut worst_purity = 0.0f64;
    let mut shots_checked = 0u64;
    for (d, m) in [(2, 1), (2, 2), (3, 1), (3, 3), (5, 2)] {
        let config = ChainConfig::builder(d, random_amplitudes(d, &mut rng))
            .chain_depth(m)
            .shots(10_000)
            .seed(17)
            .build()
            .unwrap();
        let separated = run_step1(&prepare_initial(&config).unwrap(), &config).unwrap();
        let trajectories = run_chain(&config).unwrap();
        for t in &trajectories {
            let mut rng = RngStream::new(config.seed(), t.shot_index);
            let (o, post) = run_step2(&separated, &config, &mut rng).unwrap();
            assert_eq!(o.outcome_index, t.outcome().outcome_index);
            let k = o.outcome_index;
            let target = StateVector::product_basis(config.layout().clone(), &vec![k; m + 1]).unwrap();
            worst_fid = worst_fid.max((fidelity_pure(&post, &target).unwrap() - 1.0).abs());
            let p = purity(&t.record(Stage::Collapsed).unwrap().particle_reduced);
            worst_purity = worst_purity.max((p - 1.0).abs());
            shots_checked += 1;
        }
    }
    let ok = worst_fid <= 1e-12 && worst_purity <= 1e-10;
    report(
        "AC2",
        "collapse",
        ok,
        format!("{shots_checked} shots, worst |F-1| {worst_fid:.2e}, worst |purity-1| {worst_purity:.2e}"),
    );
    assert!(ok);
}

#[test]
fn ac3_born_statistics() {
    let config = ChainConfig::builder(2, vec![c(0.6, 0.0), c(0.0, 0.8)])
        .shots(100_000)
        .seed(0)
        .build()
        .unwrap();
    let start = Instant::now();
    let trajectories = run_chain(&config).unwrap();
    let hist = empirical_distribution(&trajectories).unwrap();
    let chi = chi_square_gof(&hist, &[0.36, 0.64]).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let f1 = hist.frequencies()[1];
    let band = 4.0 * (0.64f64 * 0.36 / 1e5).sqrt();
    let ok = (f1 - 0.64).abs() <= band && chi.pvalue > 1e-4 && elapsed <= 5.0;
    report(
        "AC3",
        "Born statistics",
        ok,
        format!(
            "freq(1) {f1:.5} (|dev| {:.2e} <= {band:.4}), chi2 {:.3} p {:.3e}, {elapsed:.2}s",
            (f1 - 0.64).abs(),
            chi.statistic,
            chi.pvalue
        ),
    );
    assert!(ok);
}

#[test]
fn ac4_perfect_correlation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut rates = Vec::new();
    for d in [2, 3, 5] {
        let config = ChainConfig::builder(d, random_amplitudes(d, &mut rng))
            .shots(100_000)
            .measure_particle_after(true)
            .build()
            .unwrap();
        rates.push((d, correlation_rate(&run_chain(&config).unwrap()).unwrap()));
    }
    let ok = rates.iter().all(|&(_, r)| r == 1.0);
    report("AC4", "perfect correlation", ok, format!("{rates:?}"));
    assert!(ok);
}

#[test]
fn ac5_no_signaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_algebraic = 0.0f64;
    let mut configs = Vec::new();
    for i in 0..20 {
        let d = rng.random_range(2..=5);
        let depth = rng.random_range(1..=3);
        let coupling = if i % 2 == 0 {
            Coupling::Ideal
        } else {
            Coupling::Explicit(random_unitary(d * d, &mut rng))
        };
        let config = ChainConfig::builder(d, random_amplitudes(d, &mut rng))
            .chain_depth(depth)
            .coupling(coupling)
            .shots(100_000)
            .seed(i)
            .build()
            .unwrap();
        worst_algebraic = worst_algebraic.max(no_signaling_algebraic(&config).unwrap());
        configs.push(config);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let uniform = ChainConfig::builder(2, vec![c(h, 0.0), c(h, 0.0)]).build().unwrap();
    let mut statistical = Vec::new();
    for config in std::iter::once(&uniform).chain(configs.iter().take(4)) {
        let r = no_signaling_check(config).unwrap();
        statistical.push((config.dimension(), config.chain_depth(), r.tv, r.tv_bound));
    }
    let ok = worst_algebraic <= 1e-10 && statistical.iter().all(|&(_, _, tv, b)| tv <= b);
    report(
        "AC5",
        "no-signaling",
        ok,
        format!(
            "algebraic max {worst_algebraic:.2e} over 20 configs; two-arm (d, depth, TV, bound): {}",
            statistical
                .iter()
                .map(|(d, m, tv, b)| format!("({d},{m},{tv:.2e},{b:.2e})"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    );
    assert!(ok);
}

#[test]
fn ac6_depth_invariance() {
    let probs = [0.36, 0.64];
    let n = 100_000u64;
    let freqs: Vec<Vec<f64>> = (1..=4)
        .map(|m| {
            let config = ChainConfig::builder(2, vec![c(0.6, 0.0), c(0.8, 0.0)])
                .chain_depth(m)
                .shots(n)
                .seed(600 + m as u64)
                .build()
                .unwrap();
            empirical_distribution(&run_chain(&config).unwrap()).unwrap().frequencies()
        })
        .collect();
    let bound = two_sample_tv_bound(&probs, n, n, 4.0);
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in i + 1..4 {
            worst = worst.max(total_variation(&freqs[i], &freqs[j]).unwrap());
        }
    }
    let ok = worst <= bound;
    report("AC6", "depth invariance", ok, format!("max pairwise TV {worst:.2e} <= {bound:.2e}"));
    assert!(ok);
}

#[test]
fn ac7_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = [0.0f64; 3];
    for _ in 0..100 {
        let dims: Vec<usize> = loop {
            let n = rng.random_range(1..=4);
            let dims: Vec<usize> = (0..n).map(|_| rng.random_range(2..=4)).collect();
            if dims.iter().product::<usize>() <= 64 {
                break dims;
            }
        };
        let labels: Vec<String> = (0..dims.len()).map(|i| format!("r{i}")).collect();
        let layout = Layout::new(dims.clone(), labels).unwrap();

        let rho = random_density(layout.clone(), &mut rng);
        let keep: Vec<usize> = loop {
            let k: Vec<usize> = (0..dims.len()).filter(|_| rng.random_bool(0.5)).collect();
            if !k.is_empty() {
                break k;
            }
        };
        let red = partial_trace(&rho, &keep).unwrap();
        worst[0] = worst[0].max(max_diff_mat(&red.to_rows(), &partial_trace_oracle(&rho.to_rows(), &dims, &keep)));

        let da = rng.random_range(2..=8);
        let db = rng.random_range(2..=8);
        let a = random_state(Layout::single("a", da).unwrap(), &mut rng);
        let b = random_state(Layout::single("b", db).unwrap(), &mut rng);
        let t = tensor_product(&a, &b).unwrap();
        worst[1] = worst[1].max(max_diff_vec(t.amps(), &kron_vec(a.amps(), b.amps())));

        let psi = random_state(layout, &mut rng);
        let mut targets: Vec<usize> = (0..dims.len()).filter(|_| rng.random_bool(0.5)).collect();
        if targets.is_empty() {
            targets.push(0);
        }
        if rng.random_bool(0.5) {
            targets.reverse();
        }
        let sub: usize = targets.iter().map(|&r| dims[r]).product();
        let u = random_unitary(sub, &mut rng);
        let out = apply_unitary(&psi, &u, &targets).unwrap();
        let full = embed_operator(&u.rows(), &dims, &targets);
        worst[2] = worst[2].max(max_diff_vec(out.amps(), &mat_vec(&full, psi.amps())));
    }
    let ok = worst.iter().all(|&w| w <= 1e-10);
    report(
        "AC7",
        "oracle equivalence",
        ok,
        format!(
            "100 instances: partial_trace {:.2e}, tensor_product {:.2e}, apply_unitary {:.2e}",
            worst[0], worst[1], worst[2]
        ),
    );
    assert!(ok);
}

#[test]
fn ac8_unitarity_and_one_to_one() {
    let mut worst = 0.0f64;
    let mut all_one_to_one = true;
    for d in 2..=16 {
        let u = ideal_coupling_unitary(d).unwrap();
        worst = worst.max(unitarity_error(u.matrix()));
        all_one_to_one &= verify_one_to_one(&u, d).unwrap();
    }
    let ok = worst <= 1e-12 && all_one_to_one;
    report(
        "AC8",
        "unitarity and one-to-one",
        ok,
        format!("d=2..16: max |U\u{2020}U-I| {worst:.2e}, one-to-one {all_one_to_one}"),
    );
    assert!(ok);
}

#[test]
fn ac9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"dimension":3,"amplitudes":[{"re":0.6,"im":0},{"re":0,"im":0.48},{"re":0.64,"im":0}],"chain_depth":2,"shots":50000,"seed":9,"measure_particle_after":true}"#,
    )
    .unwrap();
    let cfg = cfg.display().to_string();
    let mut texts = Vec::new();
    let mut codes = Vec::new();
    for name in ["a.json", "b.json"] {
        let out = dir.path().join(name).display().to_string();
        codes.push(run_command(["epr", "run", "--config", &cfg, "--out", &out]));
        let text = std::fs::read_to_string(&out).unwrap();
        texts.push(
            text.lines()
                .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
                .collect::<Vec<_>>()
                .join("\n"),
        );
    }
    let ok = codes.iter().all(|&c| c == EXIT_OK) && texts[0] == texts[1];
    report(
        "AC9",
        "determinism",
        ok,
        format!("exit codes {codes:?}, reports identical modulo timestamp: {}", texts[0] == texts[1]),
    );
    assert!(ok);
}
