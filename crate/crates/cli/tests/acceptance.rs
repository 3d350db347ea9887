//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs as a plain binary so every line shows up in `cargo test`.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use coordbound::bounds::{PiTable, COND_N_TYPICAL};
use coordbound::dist::{example_distribution, kl_divergence};
use coordbound::info::{third_moment_ratio, variance_decomposition};
use coordbound::simulate::{exhaustive_expected_error, mc_expected_error};
use coordbound::types::{count_ratio, enumerate_typical_joint_types, log2_type_probability, quantize_to_type};
use coordbound::{
    achievability_bound, conditional_probability_bound, expected_codebook_error, gaussian_approx_rate, Error,
    InfoProfile, JointDistribution, LambdaCache, Pmf, Threshold, TypeVector, TypicalitySpec,
};
use coordbound_cli::{run_sweep_with, SweepConfig};
use num_bigint::BigUint;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn t(s: &str) -> Threshold {
    Threshold::parse(s).unwrap()
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_weights(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<u64>> {
    loop {
        let w: Vec<Vec<u64>> = (0..rows).map(|_| (0..cols).map(|_| rng.random_range(0..10)).collect()).collect();
        if w.iter().flatten().any(|&x| x > 0) {
            return w;
        }
    }
}

fn delta_table() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_coordbound"))
        .args(["table-delta", "--c", "1/12", "--n-list", "10,20,40,100,200,400"])
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let expected = [(10, 0.04), (20, 0.032), (40, 0.025), (100, 0.018), (200, 0.014), (400, 0.01)];
    let rows: Vec<(u64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    check(rows.len() == expected.len(), || format!("got {} rows", rows.len()))?;
    for ((n, d), (en, ed)) in rows.iter().zip(expected) {
        check(*n == en && *d == ed, || format!("n={n}: {d} vs {ed}"))?;
    }
    Ok("six rounded values match".into())
}

fn mutual_information_line() -> Outcome {
    let i = InfoProfile::compute(&example_distribution()).mutual_information;
    let exact = 3f64.log2() - 4.0 / 3.0;
    check((i - exact).abs() <= 1e-9, || format!("I = {i}, expected {exact}"))?;
    Ok(format!("I = {i}"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut dists = vec![example_distribution()];
    for _ in 0..3 {
        dists.push(JointDistribution::from_weights(&random_weights(&mut rng, 2, 2)).unwrap());
    }
    let mut worst = 0f64;
    let mut cases = 0;
    for p in &dists {
        for n in 1..=6u64 {
            for m in [1, 2, 4, 8] {
                for delta in ["0.1", "0.3"] {
                    let a = expected_codebook_error(n, m, p, &t(delta));
                    let b = exhaustive_expected_error(n as usize, m, p, &t(delta)).map_err(|e| e.to_string())?;
                    worst = worst.max((a - b).abs());
                    cases += 1;
                    check((a - b).abs() <= 1e-10, || format!("n={n} m={m} delta={delta}: {a} vs {b}"))?;
                }
            }
        }
    }
    Ok(format!("{cases} cases, max |diff| = {worst:e}"))
}

fn monte_carlo_consistency() -> Outcome {
    let p = example_distribution();
    let delta = t("0.025");
    let mut parts = Vec::new();
    for (i, m) in [2u64, 8, 32].into_iter().enumerate() {
        let exact = expected_codebook_error(40, m, &p, &delta);
        let est = mc_expected_error(40, m, &p, &delta, 100_000, 1000 + i as u64).map_err(|e| e.to_string())?;
        let gap = (est.mean - exact).abs();
        check(gap <= 3.0 * est.std_error, || {
            format!("m={m}: estimate {} ± {} vs exact {exact}", est.mean, est.std_error)
        })?;
        parts.push(format!("m={m}: z={:.2}", est.z_score(exact)));
    }
    Ok(parts.join(", "))
}

fn lambda_normalization() -> Outcome {
    let bases = [[1u64, 2], [1, 1], [1, 9], [0, 1]];
    let mut worst = 0f64;
    for w in bases {
        let base = Pmf::from_weights(&w).unwrap();
        for n in [10u64, 50, 200] {
            let total: f64 =
                (0..=n).map(|k| log2_type_probability(&TypeVector::new(vec![k, n - k]), &base).exp2()).sum();
            worst = worst.max((total - 1.0).abs());
            check((total - 1.0).abs() <= 1e-10, || format!("base {w:?}, n={n}: sum {total}"))?;
        }
    }
    Ok(format!("max |sum - 1| = {worst:e}"))
}

fn infeasibility_edge() -> Outcome {
    let p = example_distribution();
    let delta = t("0.04");
    check(enumerate_typical_joint_types(10, &p, &delta).is_empty(), || "typical joint types exist".into())?;
    let table = PiTable::build(&p, 10, &delta);
    check(table.terms().iter().all(|term| term.pi() == 0.0), || "some Π > 0".into())?;
    for m in [1u64, 2, 10, 1 << 20] {
        let e = table.error_u64(m);
        check(e == 1.0, || format!("E[p_C](m={m}) = {e}"))?;
    }
    match table.optimal_codebook_size(0.1) {
        Err(Error::Infeasible { .. }) => Ok("empty enumeration, Π ≡ 0, error 1, R♯ infeasible".into()),
        other => Err(format!("expected infeasible, got {other:?}")),
    }
}

fn sweep_config() -> SweepConfig {
    SweepConfig {
        n_start: 40,
        n_end: 600,
        n_step: 20,
        ..SweepConfig::new("", 0.1, TypicalitySpec::Convention { c: 0.5 }, 40)
    }
}

fn self_consistency() -> Outcome {
    let p = example_distribution();
    let config = sweep_config();
    let out = run_sweep_with(&config, &p, &LambdaCache::new()).map_err(|e| e.to_string())?;
    let mut feasible = 0;
    for row in &out.rows {
        let Some(Ok(r)) = &row.optimal else { continue };
        feasible += 1;
        // re-evaluate from a fresh table rather than trusting the search's own numbers
        let table = PiTable::build(&p, row.n, &config.typicality.threshold(row.n).unwrap());
        let at = table.error(&r.m_star);
        check(at <= 0.1, || format!("n={}: error(m*) = {at}", row.n))?;
        if !r.m_star.is_one() {
            let below = table.error(&(&r.m_star - BigUint::one()));
            check(below > 0.1, || format!("n={}: error(m*-1) = {below}", row.n))?;
        }
    }
    check(feasible > 0, || "no feasible n".into())?;
    Ok(format!("{feasible}/{} rows feasible and self-consistent (δₙ = ½√(ln n/n))", out.rows.len()))
}

fn asymptotic_shape() -> Outcome {
    let p = example_distribution();
    let out = run_sweep_with(&sweep_config(), &p, &LambdaCache::new()).map_err(|e| e.to_string())?;
    let get = |n: u64| {
        let row = out.rows.iter().find(|r| r.n == n).unwrap();
        (row.rate(), row.rate_approx, row.mutual_information)
    };
    let (Some(r100), a100, _) = get(100) else { return Err("R♯ infeasible at n=100".into()) };
    let (Some(r600), a600, i) = get(600) else { return Err("R♯ infeasible at n=600".into()) };
    let (g100, g600) = ((r100 - a100).abs(), (r600 - a600).abs());
    check(g600 < g100, || format!("gap grows: {g100} -> {g600}"))?;
    check((r600 - i).abs() <= 0.15 && (a600 - i).abs() <= 0.15, || format!("R♯={r600}, R̄={a600}, I={i}"))?;
    Ok(format!("|R♯-R̄|: {g100:.4} (n=100) -> {g600:.4} (n=600); R♯={r600:.4}, R̄={a600:.4}, I={i:.4}"))
}

fn exact_bound() -> Outcome {
    let p = example_distribution();
    let report = achievability_bound(20000, &p, &t("0.1"), 0.1);
    let rate = report.rate.ok_or_else(|| format!("invalid at n=20000:\n{report}"))?;
    let approx = gaussian_approx_rate(20000, &p, 0.1).map_err(|e| e.to_string())?;
    check(rate >= approx, || format!("bound {rate} below Gaussian rate {approx}"))?;
    let small = achievability_bound(400, &p, &t("0.01"), 0.1);
    check(!small.valid && small.rate.is_none(), || "n=400 reported valid".into())?;
    check(small.failed_conditions().any(|c| c.name == COND_N_TYPICAL), || format!("{small}"))?;
    Ok(format!("n=20000: {rate:.5} >= {approx:.5}; n=400 invalid, fails {COND_N_TYPICAL}"))
}

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);

    // quantization
    let mut triples = 0;
    while triples < 100 {
        let len = rng.random_range(2..=5);
        let a: Vec<u64> = (0..len).map(|_| rng.random_range(1..=9)).collect();
        let b: Vec<u64> = (0..len).map(|_| rng.random_range(0..=9)).collect();
        if b.iter().all(|&x| x == 0) {
            continue;
        }
        let (a, b) = (Pmf::from_weights(&a).unwrap(), Pmf::from_weights(&b).unwrap());
        let k_min = (1.0 / a.min_prob()).max(1.0 / b.min_prob()).ceil() as u64;
        let k = rng.random_range(k_min..=k_min + 200);
        let c = quantize_to_type(&b, &a, k).map_err(|e| e.to_string())?;
        for (x, (&count, bx)) in c.counts().iter().zip(b.exact()).enumerate() {
            check((count_ratio(count, k) - bx).abs() <= count_ratio(1, k), || format!("cell {x}, k={k}"))?;
            check((count > 0) == b.in_support(x), || format!("support differs at {x}"))?;
        }
        let lhs = kl_divergence(&c.as_pmf().unwrap(), &a);
        let rhs = kl_divergence(&b, &a) + (len as f64 / k as f64) * (k as f64).max(1.0 / a.min_prob()).log2();
        check(lhs <= rhs, || format!("divergence {lhs} > {rhs} at k={k}"))?;
        triples += 1;
    }

    // third-moment ratio and variance identity
    let (mut ratios, mut identities, mut worst) = (0, 0, 0f64);
    while ratios < 100 || identities < 100 {
        let (rows, cols) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let p = JointDistribution::from_weights(&random_weights(&mut rng, rows, cols)).unwrap();
        if identities < 100 {
            let (v, alt) = variance_decomposition(&p);
            worst = worst.max((v - alt).abs());
            check((v - alt).abs() <= 1e-12, || format!("variance identity: {v} vs {alt}"))?;
            identities += 1;
        }
        match third_moment_ratio(&p) {
            Ok((ratio, limit)) if ratios < 100 => {
                check(ratio <= limit, || format!("ratio {ratio} > {limit}"))?;
                ratios += 1;
            }
            Ok(_) | Err(Error::ZeroVariance) => {}
            Err(e) => return Err(e.to_string()),
        }
    }

    // conditional-probability bound at every admissible source type
    let p = example_distribution();
    let mut held = 0;
    for n0 in 0..=2000 {
        match conditional_probability_bound(&TypeVector::new(vec![n0, 2000 - n0]), &p, &t("0.1")) {
            Ok(b) => {
                check(b.holds, || format!("fails at type ({n0}, {}): {b:?}", 2000 - n0))?;
                held += 1;
            }
            Err(Error::PreconditionViolated(_)) => {}
            Err(e) => return Err(e.to_string()),
        }
    }
    check(held > 0, || "no admissible source type".into())?;
    Ok(format!(
        "100 quantizations, 100 ratios, 100 identities (max diff {worst:e}), conditional bound at {held} source types"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("delta table", Duration::from_secs(1), delta_table),
        ("mutual information", Duration::from_secs(1), mutual_information_line),
        ("type-based vs exhaustive error", Duration::from_secs(30), oracle_equivalence),
        ("Monte Carlo consistency", Duration::from_secs(60), monte_carlo_consistency),
        ("type-probability normalization", Duration::from_secs(5), lambda_normalization),
        ("infeasibility at n=10", Duration::from_secs(5), infeasibility_edge),
        ("optimal-rate self-consistency", Duration::from_secs(300), self_consistency),
        ("asymptotic shape", Duration::from_secs(300), asymptotic_shape),
        ("exact bound dominance and validity", Duration::from_secs(5), exact_bound),
        ("property suites", Duration::from_secs(60), property_suites),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
