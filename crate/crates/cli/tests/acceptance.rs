//! Acceptance criteria. Each test prints one PASS/FAIL line; run with
//! `cargo test -p qalign-cli --test acceptance -- --nocapture` to see them.

use std::path::Path;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use qalign_cli::config::{ChannelMode, NoiseKind};
use qalign_cli::{dispatch, Command, Outcome, Overrides, RunConfig};
use qalign_core::analysis::{beats_epsilon, dof_theory, exact_power, min_base_for_epsilon, power_scaling_check};
use qalign_core::analysis::{wilson_interval, Z95};
use qalign_core::det::{delay_sim, det_decode, det_encode, det_output, DetSpec};
use qalign_core::gauss::{alphabet_bound, ChannelSpec};
use qalign_core::QFixed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, what: &str, ok: bool, detail: &str, elapsed: Duration, limit: Duration) {
    let within = elapsed < limit;
    let tag = if ok && within { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id:>2}: {what} | {detail} | {:.3}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs());
    assert!(ok, "criterion {id} failed: {detail}");
    assert!(within, "criterion {id} exceeded its runtime limit: {elapsed:?} >= {limit:?}");
}

fn run(command: Command, cli: Overrides) -> Outcome {
    let cfg = RunConfig::resolve(command, cli, Overrides::default()).expect("valid config");
    dispatch(&cfg).expect("run succeeds")
}

fn csv_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

fn random_info(rng: &mut ChaCha8Rng, users: usize, bits: usize) -> Vec<Vec<u8>> {
    (0..users).map(|_| (0..bits).map(|_| rng.random_range(0..2u8)).collect()).collect()
}

/// Bit errors over the even levels of every receiver.
fn det_errors(spec: &DetSpec, infos: &[Vec<u8>]) -> usize {
    let xs: Vec<_> = infos.iter().map(|i| det_encode(i).unwrap()).collect();
    let ys = det_output(spec, &xs).unwrap();
    ys.iter().zip(infos).map(|(y, info)| det_decode(y).iter().zip(info).filter(|(a, b)| a != b).count()).sum()
}

#[test]
fn c01_deterministic_alignment_identity() {
    let start = Instant::now();
    let spec = DetSpec::unit_offset(3, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let random_errors: usize = (0..10_000).map(|_| det_errors(&spec, &random_info(&mut rng, 3, 4))).sum();

    let small = DetSpec::unit_offset(3, 4).unwrap();
    let mut exhaustive_errors = 0;
    for code in 0u32..1 << 6 {
        let infos: Vec<Vec<u8>> = (0..3).map(|k| (0..2).map(|b| ((code >> (2 * k + b)) & 1) as u8).collect()).collect();
        exhaustive_errors += det_errors(&small, &infos);
    }

    let out = run(Command::DetDemo, Overrides { trials: Some(10_000), seed: Some(7), ..Default::default() });
    let rates: Vec<String> = csv_rows(&out.csv).iter().map(|r| r[3].clone()).collect();
    let ok = random_errors == 0
        && exhaustive_errors == 0
        && rates.iter().all(|r| r == "4.000000000")
        && out.summary.contains("interference-free reference: 8 bits/use");
    let detail = format!(
        "random errors {random_errors}, exhaustive errors {exhaustive_errors}/64 tuples, rates {rates:?} vs 8 interference-free"
    );
    report(1, "deterministic alignment identity", ok, &detail, start.elapsed(), Duration::from_secs(1));
}

fn aligned_matrix(rng: &mut ChaCha8Rng, users: usize, width: usize) -> Vec<Vec<u32>> {
    let max_half = (width as u32 + 1) / 2;
    (0..users)
        .map(|k| {
            (0..users)
                .map(|j| {
                    let h = rng.random_range(0..max_half);
                    if j == k {
                        2 * h
                    } else {
                        2 * h + 1
                    }
                })
                .collect()
        })
        .collect()
}

#[test]
fn c02_even_odd_sufficiency() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut aligned_failures = 0;
    let mut misaligned_without_error = 0;
    for _ in 0..50 {
        let users = rng.random_range(2..=6usize);
        let n = [3usize, 5, 7][rng.random_range(0..3)];
        let shifts = aligned_matrix(&mut rng, users, n + 1);
        let spec = DetSpec::new(n + 1, shifts).unwrap();
        assert!(spec.is_aligned());
        let errs: usize = (0..1000).map(|_| det_errors(&spec, &random_info(&mut rng, users, (n + 1) / 2))).sum();
        aligned_failures += usize::from(errs > 0);
    }
    for _ in 0..50 {
        let users = rng.random_range(2..=6usize);
        let n = [3usize, 5, 7][rng.random_range(0..3)];
        let mut shifts = aligned_matrix(&mut rng, users, n + 1);
        // Flip the parity of one entry, staying below the symbol width.
        let (k, j) = (rng.random_range(0..users), rng.random_range(0..users));
        shifts[k][j] = if shifts[k][j] == 0 { 1 } else { shifts[k][j] - 1 };
        let spec = DetSpec::new(n + 1, shifts).unwrap();
        assert!(!spec.is_aligned());
        let errs: usize = (0..1000).map(|_| det_errors(&spec, &random_info(&mut rng, users, (n + 1) / 2))).sum();
        misaligned_without_error += usize::from(errs == 0);
    }
    let ok = aligned_failures == 0 && misaligned_without_error == 0;
    let detail = format!(
        "aligned matrices with errors {aligned_failures}/50, parity-violating matrices without errors {misaligned_without_error}/50"
    );
    report(2, "even/odd sufficiency", ok, &detail, start.elapsed(), Duration::from_secs(5));
}

#[test]
fn c03_carry_free_invariant() {
    let start = Instant::now();
    let mut analytic_violations = 0;
    let mut enumeration_violations = 0;
    let mut checked = 0;
    for users in 2..=5u32 {
        for q in (users..=40).step_by(users as usize) {
            let Ok(m) = alphabet_bound(&ChannelSpec::basic(users as usize, q).unwrap()) else { continue };
            let m = m as u32;
            if (users - 1) * (q / users - 1) > q - 1 {
                analytic_violations += 1;
            }
            // Every (K-1)-tuple of interfering qits, placed one digit below a
            // zero padding position, must leave the position above untouched.
            let tuples = m.pow(users - 1);
            for code in 0..tuples {
                let mut c = code;
                let mut sum = 0u32;
                for _ in 0..users - 1 {
                    sum += c % m;
                    c /= m;
                }
                let placed = QFixed::from_int(q, sum).unwrap().scale_by_power(1);
                if sum > q - 1 || placed.digit_at(2).unwrap() != 0 || placed.digit_at(1).unwrap() != sum {
                    enumeration_violations += 1;
                }
                checked += 1;
            }
        }
    }
    let ok = analytic_violations == 0 && enumeration_violations == 0;
    let detail = format!("analytic violations {analytic_violations}, enumeration violations {enumeration_violations} over {checked} tuples");
    report(3, "carry-free invariant", ok, &detail, start.elapsed(), Duration::from_secs(1));
}

fn verify(users: usize, base: u32, blocks: usize, exhaustive: bool, seed: u64) -> (bool, String) {
    let out = run(
        Command::GaussVerify,
        Overrides {
            users: Some(users),
            base: Some(base),
            blocks: Some(blocks),
            exhaustive: Some(exhaustive),
            trials: Some(10_000),
            seed: Some(seed),
            ..Default::default()
        },
    );
    (out.verified, out.summary.lines().nth(1).unwrap_or_default().to_owned())
}

#[test]
fn c04_noise_free_gaussian_round_trip() {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for (users, base, exhaustive_blocks) in [(3usize, 9u32, [1usize, 2]), (2, 8, [1, 2])] {
        for n in exhaustive_blocks {
            let (v, line) = verify(users, base, n, true, 0);
            ok &= v;
            notes.push(format!("K{users} Q{base} N{n}: {line}"));
        }
    }
    for (users, base, n) in [(3usize, 27u32, 6usize), (4, 64, 6), (5, 40, 4)] {
        let (v, line) = verify(users, base, n, false, 4);
        ok &= v;
        notes.push(format!("K{users} Q{base} N{n}: {line}"));
    }

    // Generalized coefficients: random alpha in {1,2,3}, desired exponents in
    // {-2,0,2}, interfering exponents in {-1,1,3}; 20 channels x 500 tuples.
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut gen_tuples = 0u64;
    let mut gen_ok = true;
    for c in 0..20u64 {
        let users = rng.random_range(2..=4usize);
        let alpha: Vec<Vec<u64>> = (0..users).map(|_| (0..users).map(|_| rng.random_range(1..=3)).collect()).collect();
        let exponent: Vec<Vec<i32>> = (0..users)
            .map(|k| {
                (0..users)
                    .map(|j| if j == k { [-2, 0, 2][rng.random_range(0..3)] } else { [-1, 1, 3][rng.random_range(0..3)] })
                    .collect()
            })
            .collect();
        let out = run(
            Command::GaussVerify,
            Overrides {
                mode: Some(ChannelMode::Generalized),
                users: Some(users),
                base: Some(64),
                blocks: Some(3),
                alpha: Some(alpha),
                exponent: Some(exponent),
                exhaustive: Some(false),
                trials: Some(500),
                seed: Some(c),
                ..Default::default()
            },
        );
        gen_ok &= out.verified;
        gen_tuples += 500;
    }
    ok &= gen_ok;
    notes.push(format!("generalized: {} over {gen_tuples} tuples", if gen_ok { "0 mismatches" } else { "MISMATCHES" }));
    report(4, "noise-free Gaussian round-trip", ok, &notes.join("; "), start.elapsed(), Duration::from_secs(10));
}

/// `E[X^2]` by enumerating every message.
fn brute_power(n: usize, q: u32, m: u64) -> (BigUint, BigUint) {
    let total = m.pow(n as u32);
    let step = BigUint::from(q) * BigUint::from(q);
    let mut sum = BigUint::from(0u32);
    for code in 0..total {
        let mut digits = Vec::with_capacity(n);
        let mut c = code;
        for _ in 0..n {
            digits.push(c % m);
            c /= m;
        }
        let x = digits.iter().rev().fold(BigUint::from(0u32), |acc, &d| acc * &step + d);
        sum += &x * &x;
    }
    (sum, BigUint::from(total))
}

#[test]
fn c05_power_scaling() {
    let start = Instant::now();
    let mut mismatches = 0;
    let mut compared = 0;
    for (q, m) in [(4u32, 2u64), (9, 3), (16, 4), (27, 9), (40, 8), (64, 16)] {
        let mut n = 1;
        while m.pow(n as u32) <= 100_000 {
            let p = exact_power(n, q, m).unwrap().exact_power;
            let (num, den) = brute_power(n, q, m);
            let lhs = p.numer().to_biguint().unwrap() * &den;
            let rhs = num * p.denom().to_biguint().unwrap();
            mismatches += usize::from(lhs != rhs);
            compared += 1;
            n += 1;
        }
    }
    let scaling = power_scaling_check(16, 4, &(1..=10).collect::<Vec<_>>()).unwrap();
    let max_delta = scaling.max_abs_delta();
    let slope = scaling.final_slope().unwrap();
    let ok = mismatches == 0 && max_delta <= 5.0 && (slope - 4.0).abs() < 0.1;
    let detail = format!(
        "{mismatches} mismatches over {compared} (Q,M,N) cases; max |log_Q P - 4N| = {max_delta:.4}; slope at N=10 = {slope:.6}"
    );
    report(5, "power scaling", ok, &detail, start.elapsed(), Duration::from_secs(1));
}

#[test]
fn c06_noise_localization() {
    let start = Instant::now();
    let out = run(
        Command::GaussMc,
        Overrides { users: Some(4), base: Some(64), blocks: Some(4), trials: Some(100_000), seed: Some(2024), ..Default::default() },
    );
    let rows = csv_rows(&out.csv);
    let rate = |r: &Vec<String>| r[3].parse::<f64>().unwrap();
    let band = |r: &Vec<String>| {
        let (obs, err) = (r[1].parse::<u64>().unwrap(), r[2].parse::<u64>().unwrap());
        wilson_interval(err, obs, Z95)
    };
    let positions: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    let low_ok = rate(&rows[0]) >= 0.1;
    let high_ok = rows[1..].iter().all(|r| rate(r) <= 1e-3);
    let monotone = rows.windows(2).all(|w| band(&w[1]).0 <= band(&w[0]).1);
    let ok = positions == ["0", "2", "4", "6"] && low_ok && high_ok && monotone;
    let rates: Vec<String> = rows.iter().map(|r| format!("pos {}: {}", r[0], r[3])).collect();
    report(6, "noise localization", ok, &format!("{}; monotone within 95% bands: {monotone}", rates.join(", ")), start.elapsed(), Duration::from_secs(60));
}

#[test]
fn c07_dof_convergence() {
    let start = Instant::now();
    let out = run(
        Command::Sweep,
        Overrides {
            users: Some(4),
            base: Some(64),
            n_list: Some(vec![2, 4, 8, 12]),
            threshold: Some(1e-2),
            trials: Some(20_000),
            seed: Some(7),
            ..Default::default()
        },
    );
    let rows = csv_rows(&out.csv);
    let dof = |i: usize| rows[i][5].parse::<f64>().unwrap();
    let theory = rows[0][6].parse::<f64>().unwrap();
    // 4^3 = 64, so log_64 4 = 1/3 and the target is 2 * (2/3) = 4/3 exactly.
    let exact_target = 4u64.pow(3) == 64;
    let target = 4.0 / 3.0;
    let theory_ok = exact_target && (dof_theory(4, 64) - target).abs() < 1e-12 && (theory - target).abs() < 1e-8;
    let (d2, d12) = (dof(0), dof(3));
    let ok = theory_ok && (1.2..=1.5).contains(&d12) && (d12 - target).abs() < (d2 - target).abs();
    let trend: Vec<String> = rows.iter().map(|r| format!("N={}: {}", r[0], r[5])).collect();
    report(7, "DoF convergence", ok, &format!("dof_theory {theory}; {}", trend.join(", ")), start.elapsed(), Duration::from_secs(300));
}

#[test]
fn c08_feasibility_boundary() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut checks = 0;
    for k in 2..=8u64 {
        for (eps, inv) in [(0.05, 20u32), (0.1, 10), (0.25, 4), (0.5, 2)] {
            let boundary = num_traits::pow(BigUint::from(k), inv as usize);
            let q_min = min_base_for_epsilon(k, 1, inv).unwrap();
            if q_min != &boundary + 1u32 {
                failures.push(format!("K={k} eps={eps}: Q_min {q_min}"));
            }
            // At Q = K^(1/eps) the bound is met with equality, not exceeded.
            if beats_epsilon(k, &boundary, 1, inv) {
                failures.push(format!("K={k} eps={eps}: boundary counted as feasible"));
            }
            for q in [q_min.clone(), &q_min + 1u32, &q_min * 2u32, &q_min * &q_min] {
                checks += 1;
                if !beats_epsilon(k, &q, 1, inv) {
                    failures.push(format!("K={k} eps={eps} Q={q}"));
                }
                // Float route where Q fits the simulator's base type and the
                // margin is well above rounding.
                if let Ok(q32) = u32::try_from(&q) {
                    if q > q_min {
                        let lhs = dof_theory(k as usize, q32);
                        if lhs <= k as f64 / 2.0 * (1.0 - eps) {
                            failures.push(format!("K={k} eps={eps} Q={q32}: float {lhs}"));
                        }
                    }
                }
            }
        }
    }
    let ok = failures.is_empty();
    let detail = format!("{checks} (K, eps, Q) checks, failures: {failures:?}");
    report(8, "feasibility boundary", ok, &detail, start.elapsed(), Duration::from_secs(1));
}

#[test]
fn c09_delay_analogy() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut bad_fraction = Vec::new();
    let mut parity_violations = 0;
    let mut arrivals = 0;
    for trial in 0..20 {
        let delays: Vec<Vec<u64>> = if trial == 0 {
            vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]
        } else {
            (0..3)
                .map(|k| (0..3).map(|j| 2 * rng.random_range(0..5u64) + u64::from(j != k)).collect())
                .collect()
        };
        let payloads: Vec<Vec<u64>> = (0..3).map(|j| (0..70).map(|n| 1000 * j + n).collect()).collect();
        let r = delay_sim(&delays, 100, &payloads).unwrap();
        for (k, slots) in r.arrivals.iter().enumerate() {
            if r.alone_fraction[k] != 0.5 {
                bad_fraction.push((trial, k, r.alone_fraction[k]));
            }
            for (t, heard) in slots.iter().enumerate() {
                for a in heard {
                    arrivals += 1;
                    if (r.start + t as u64) % 2 != delays[k][a.from] % 2 {
                        parity_violations += 1;
                    }
                }
            }
        }
    }
    let ok = bad_fraction.is_empty() && parity_violations == 0;
    let detail = format!(
        "20 delay matrices x 3 receivers, fractions != 1/2: {bad_fraction:?}; parity violations {parity_violations}/{arrivals} arrivals"
    );
    report(9, "delay analogy", ok, &detail, start.elapsed(), Duration::from_secs(1));
}

fn run_binary(args: &[&str], dir: &Path) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_qalign")).args(args).current_dir(dir).output().expect("binary runs")
}

#[test]
fn c10_determinism() {
    let start = Instant::now();
    let cli = Overrides { trials: Some(10_000), seed: Some(2024), noise: Some(NoiseKind::Awgn), ..Default::default() };
    let cfg = RunConfig::resolve(Command::GaussMc, cli, Overrides::default()).unwrap();
    let in_pool = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| dispatch(&cfg).unwrap().csv)
    };
    let serial = in_pool(1);
    let parallel = in_pool(4);

    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str, threads: &str| {
        vec!["gauss-mc", "--trials", "10000", "--seed", "2024", "--threads", threads, "--output", out]
            .into_iter()
            .map(str::to_owned)
            .collect::<Vec<_>>()
    };
    let a = run_binary(&args("a.csv", "1").iter().map(String::as_str).collect::<Vec<_>>(), dir.path());
    let b = run_binary(&args("b.csv", "3").iter().map(String::as_str).collect::<Vec<_>>(), dir.path());
    let file_a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let file_b = std::fs::read(dir.path().join("b.csv")).unwrap();

    // Re-feed the echoed configuration.
    let echoed = String::from_utf8(a.stdout.clone()).unwrap();
    let toml_part: String = echoed
        .lines()
        .skip_while(|l| l.starts_with('#'))
        .take_while(|l| !l.is_empty())
        .filter(|l| !l.starts_with("output") && !l.starts_with("threads"))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(dir.path().join("echo.toml"), &toml_part).unwrap();
    let c = run_binary(&["gauss-mc", "--config", "echo.toml", "--output", "c.csv"], dir.path());
    let file_c = std::fs::read(dir.path().join("c.csv")).unwrap();

    let ok = serial == parallel
        && a.status.success()
        && b.status.success()
        && c.status.success()
        && file_a == file_b
        && file_a == file_c
        && file_a == serial.as_bytes();
    let detail = format!(
        "in-process 1 vs 4 threads identical: {}; binary runs identical: {}; echoed config reproduces: {}",
        serial == parallel,
        file_a == file_b,
        file_a == file_c
    );
    report(10, "determinism", ok, &detail, start.elapsed(), Duration::from_secs(60));
}
