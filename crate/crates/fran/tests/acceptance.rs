//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fran::analysis::{compare_baseline, optimality_check, OptimalityGrid};
use fran_core::bounds::{cutset_constraints, pipelined_lower_bound, serial_lower_bound};
use fran_core::delivery::{latency_from_report, run_delivery};
use fran_core::formulas::{
    closed_form, multicast_rate_r2, multicast_rate_r3, pipelined_ndt, scheme_ndt, serial_ndt, stage_ndt,
};
use fran_core::placement::{empirical_fragment_stats, partition_files, place_caches, FragmentPartition};
use fran_core::{enumerate_fragment_keys, DemandVector, FragmentKey, Scheme, Stage, SystemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn max_column(csv: &str, column: &str) -> f64 {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().expect("header").split(',').collect();
    let idx = header.iter().position(|h| *h == column).expect("column present");
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn run_sweep(step: &str) -> (Duration, bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let t0 = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_fran"))
        .args([
            "sweep",
            "--kr",
            "100",
            "--r",
            "1",
            "--step",
            step,
            "-o",
            path.to_str().unwrap(),
        ])
        .output()
        .expect("fran runs")
        .status;
    let elapsed = t0.elapsed();
    (
        elapsed,
        status.success(),
        std::fs::read_to_string(&path).unwrap_or_default(),
    )
}

fn gap_surface() -> Verdict {
    let (elapsed, ok, csv) = run_sweep("0.01");
    if !ok {
        return verdict(false, "sweep command failed");
    }
    let rows = csv.lines().count() - 1;
    let (gs, gp) = (max_column(&csv, "gap_s"), max_column(&csv, "gap_p"));
    let fast = elapsed < Duration::from_secs(60);
    let in_band = (16.0..=24.0).contains(&gs) && (8.0..=12.0).contains(&gp);
    let (_, _, coarse) = run_sweep("0.1");
    verdict(
        fast && in_band && rows == 101 * 101,
        format!(
            "{rows} rows in {:.2} s; max gap_s {gs:.4} (want [16, 24]), max gap_p {gp:.4} (want [8, 12]); \
             at step 0.1 the maxima are {:.4} and {:.4}",
            elapsed.as_secs_f64(),
            max_column(&coarse, "gap_s"),
            max_column(&coarse, "gap_p"),
        ),
    )
}

fn tight_point() -> Verdict {
    let c = SystemConfig::two_en(2, 0.0, 0.0, 1.0);
    let s = serial_ndt(&c).unwrap();
    let s_lb = serial_lower_bound(&c).unwrap().delta_lb;
    let p = pipelined_ndt(&c).unwrap();
    let p_lb = pipelined_lower_bound(&c).unwrap();
    let ok = [(s, 2.0), (s_lb, 2.0), (p, 1.0), (p_lb, 1.0)]
        .iter()
        .all(|(got, want)| (got - want).abs() <= 1e-9);
    verdict(ok, format!("serial {s} vs bound {s_lb}; pipelined {p} vs bound {p_lb}"))
}

fn optimality_regions() -> Verdict {
    let t0 = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for kr in [2usize, 10, 100] {
        let rep = optimality_check(kr, OptimalityGrid::default()).unwrap();
        pass &= rep.passed();
        let worst_p1 = rep.p1.violations.iter().map(|v| v.ratio).fold(1.0, f64::max);
        parts.push(format!(
            "Kr={kr}: P1 {}/{} violations (worst ratio {worst_p1:.4}), P2 {}/{} violations (max ratio {:.4})",
            rep.p1.violations.len(),
            rep.p1.checked,
            rep.p2.violations.len(),
            rep.p2.checked,
            rep.p2.max_ratio
        ));
    }
    let elapsed = t0.elapsed();
    pass &= elapsed < Duration::from_secs(10);
    verdict(pass, format!("{} in {:.2} s", parts.join("; "), elapsed.as_secs_f64()))
}

fn closed_form_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let open = |rng: &mut ChaCha8Rng| loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    };
    for _ in 0..1000 {
        let kr = rng.random_range(2..=200usize);
        let (mt, mr) = (open(&mut rng), open(&mut rng));
        let r = 300.0 * (1.0 - rng.random::<f64>());
        let c = SystemConfig::two_en(kr, mt, mr, r);
        worst = worst
            .max(rel_diff(
                multicast_rate_r2(&c).unwrap(),
                closed_form::rate_r2(&c).unwrap(),
            ))
            .max(rel_diff(
                multicast_rate_r3(&c).unwrap(),
                closed_form::rate_r3(&c).unwrap(),
            ));
        for scheme in [Scheme::A, Scheme::B] {
            let sum = scheme_ndt(&c, scheme).unwrap();
            let cf = closed_form::scheme(&c, scheme).unwrap();
            worst = worst
                .max(rel_diff(sum.fronthaul, cf.fronthaul))
                .max(rel_diff(sum.edge, cf.edge));
        }
    }
    verdict(
        worst <= 1e-12,
        format!("max relative difference {worst:.3e} over 1000 configs"),
    )
}

/// Variance of a fragment's size in one file under exact-size sampling:
/// bit indicators are exchangeable and node choices independent.
fn fragment_count_variance(key: FragmentKey, f: usize, m_en: usize, m_user: usize, kt: usize, kr: usize) -> (f64, f64) {
    let ff = f as f64;
    let mut p = 1.0;
    let mut pair = 1.0;
    let nodes = (0..kt)
        .map(|e| (key.has_en(e), m_en))
        .chain((0..kr).map(|u| (key.has_user(u), m_user)));
    for (cached, m) in nodes {
        let k = if cached { m as f64 } else { ff - m as f64 };
        p *= k / ff;
        pair *= k * (k - 1.0) / (ff * (ff - 1.0));
    }
    (ff * p, ff * p * (1.0 - p) + ff * (ff - 1.0) * (pair - p * p))
}

fn placement_concentration() -> Verdict {
    const F: usize = 1_000_000;
    const SEEDS: u64 = 10;
    let base = SystemConfig::two_en(4, 0.5, 0.5, 1.0).with_file_bits(F);
    let keys = enumerate_fragment_keys(2, 4);
    let mut pooled = vec![0.0f64; keys.len()];
    let mut worst_seed_err: f64 = 0.0;
    let mut samples = 0usize;
    for seed in 0..SEEDS {
        let cfg = base.with_seed(seed);
        let partition: FragmentPartition = partition_files(&place_caches(&cfg).unwrap());
        for stat in empirical_fragment_stats(&partition, &cfg).unwrap() {
            if let Some(e) = stat.rel_error {
                worst_seed_err = worst_seed_err.max(e);
            }
        }
        for (i, &key) in keys.iter().enumerate() {
            for file in 0..partition.n_files() {
                pooled[i] += partition.fragment(file, key).len() as f64;
            }
        }
        samples += partition.n_files();
    }
    let (mut worst_z, mut worst_key, mut sum_z2, mut checked) = (0.0f64, FragmentKey::EMPTY, 0.0, 0);
    for (i, &key) in keys.iter().enumerate() {
        let (mean, var) = fragment_count_variance(key, F, F / 2, F / 2, 2, 4);
        if mean < 1000.0 {
            continue;
        }
        checked += 1;
        let observed = pooled[i] / samples as f64;
        let sigma = (var / samples as f64).sqrt();
        let z = (observed - mean).abs() / sigma;
        sum_z2 += z * z;
        if z > worst_z {
            worst_z = z;
            worst_key = key;
        }
    }
    // Near 1 for an unbiased sampler; the maximum of 64 such deviates
    // exceeds 3 with probability of roughly 0.15.
    let rms_z = (sum_z2 / checked as f64).sqrt();
    verdict(
        worst_z <= 3.0 && worst_seed_err <= 0.02 && checked == 64,
        format!(
            "{checked} fragments; pooled deviation at most {worst_z:.2} sigma at key {worst_key}, rms {rms_z:.2} sigma; \
             worst per-seed relative error {:.3}%",
            100.0 * worst_seed_err
        ),
    )
}

fn delivery_correctness() -> Verdict {
    let levels = [0.0, 0.3, 0.7, 1.0];
    let mut runs = 0;
    let mut failures = Vec::new();
    for kr in 2..=4usize {
        for &mt in &levels {
            for &mr in &levels {
                for scheme in [Scheme::A, Scheme::B] {
                    for seed in 0..3 {
                        runs += 1;
                        let cfg = SystemConfig::two_en(kr, mt, mr, 1.0)
                            .with_file_bits(10_000)
                            .with_seed(seed);
                        let state = place_caches(&cfg).unwrap();
                        let partition = partition_files(&state);
                        let demands = DemandVector::worst_case(kr, kr).unwrap();
                        match run_delivery(&state, &partition, &demands, scheme) {
                            Ok(rep) if rep.all_decoded() => {}
                            Ok(rep) => failures.push(format!("{kr} {mt} {mr} {scheme:?} {seed}: {:?}", rep.verify())),
                            Err(e) => failures.push(format!("{kr} {mt} {mr} {scheme:?} {seed}: {e}")),
                        }
                    }
                }
            }
        }
    }

    let cfg = SystemConfig::two_en(4, 0.5, 0.5, 1.0)
        .with_file_bits(1_000_000)
        .with_seed(7);
    let state = place_caches(&cfg).unwrap();
    let partition = partition_files(&state);
    let demands = DemandVector::worst_case(4, 4).unwrap();
    let mut worst: f64 = 0.0;
    for scheme in [Scheme::A, Scheme::B] {
        let rep = run_delivery(&state, &partition, &demands, scheme).unwrap();
        if !rep.all_decoded() {
            failures.push(format!("spot check {scheme:?}"));
        }
        let emp = latency_from_report(&rep, &cfg).unwrap();
        let stages = Stage::COMMON.iter().copied().chain([scheme.stage5()]);
        for stage in stages {
            let want = stage_ndt(&cfg, stage).unwrap();
            let got = emp.stage(stage).unwrap();
            for (g, w) in [(got.edge, want.edge), (got.fronthaul, want.fronthaul)] {
                if w > 0.0 {
                    worst = worst.max((g - w).abs() / w);
                } else if g != 0.0 {
                    worst = f64::INFINITY;
                }
            }
        }
    }
    verdict(
        failures.is_empty() && worst <= 0.03,
        format!(
            "{runs} runs, {} decode failures; spot check worst per-stage NDT error {:.3}%{}",
            failures.len(),
            100.0 * worst,
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

/// Minimum of `x + y` over the `1e-3` grid: for each grid `x`, the least
/// feasible `y` rounded up to the grid.
fn grid_lp_min(planes: &[(f64, f64, f64)], x_max: f64) -> f64 {
    const H: f64 = 1e-3;
    let steps = (x_max / H).ceil() as usize + 1;
    let mut best = f64::INFINITY;
    'x: for i in 0..=steps {
        let x = i as f64 * H;
        let mut y: f64 = 0.0;
        for &(a, b, c) in planes {
            if b > 0.0 {
                y = y.max((c - a * x) / b);
            } else if a * x < c - 1e-12 {
                continue 'x;
            }
        }
        let y = (y / H - 1e-9).ceil().max(0.0) * H;
        best = best.min(x + y);
    }
    best
}

fn dominance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_gap_s, mut worst_gap_p) = (f64::INFINITY, f64::INFINITY);
    let mut worst_slack: f64 = 0.0;
    let mut worst_grid: f64 = 0.0;
    for _ in 0..10_000 {
        let kr = rng.random_range(2..=30usize);
        let mt: f64 = rng.random();
        let mr: f64 = rng.random();
        let r = 10f64.powf(rng.random_range(-1.0..=2.0));
        let c = SystemConfig::two_en(kr, mt, mr, r);
        let lb = serial_lower_bound(&c).unwrap();
        worst_gap_s = worst_gap_s.min(serial_ndt(&c).unwrap() - lb.delta_lb);
        worst_gap_p = worst_gap_p.min(pipelined_ndt(&c).unwrap() - pipelined_lower_bound(&c).unwrap());

        let mut planes: Vec<(f64, f64, f64)> = cutset_constraints(&c)
            .iter()
            .map(|k| (k.fronthaul_coeff, k.edge_coeff, k.rhs))
            .collect();
        planes.push((0.0, 1.0, 1.0 - mr));
        for &(a, b, rhs) in &planes {
            let slack = a * lb.delta_f + b * lb.delta_e - rhs;
            worst_slack = worst_slack.max(-slack / rhs.abs().max(1.0));
        }
        worst_slack = worst_slack.max(-lb.delta_f).max(-lb.delta_e);
        // Beyond this δF every constraint with a fronthaul term holds.
        let x_max = planes
            .iter()
            .filter(|p| p.0 > 0.0)
            .map(|p| p.2 / p.0)
            .fold(0.0, f64::max);
        worst_grid = worst_grid.max((grid_lp_min(&planes, x_max) - lb.delta_lb).abs());
    }
    verdict(
        worst_gap_s >= -1e-9 && worst_gap_p >= -1e-9 && worst_slack <= 1e-9 && worst_grid <= 2e-3,
        format!(
            "min gap_s {worst_gap_s:.3e}, min gap_p {worst_gap_p:.3e}, worst constraint violation {worst_slack:.1e}, \
             worst grid mismatch {worst_grid:.2e} over 10000 configs"
        ),
    )
}

fn baseline_identity() -> Verdict {
    let rows = compare_baseline(10, 0.01).unwrap();
    let worst = rows
        .iter()
        .map(|r| (r.difference - 5.0 * (1.0 - r.mu_r).powi(10)).abs())
        .fold(0.0, f64::max);
    let last = rows.last().unwrap();
    let zero_end = last.mu_r == 1.0 && last.two_antenna == 0.0 && last.single_antenna == 0.0;
    verdict(
        worst <= 1e-12 && zero_end,
        format!(
            "{} points, max deviation {worst:.2e}, curves at mu_r=1: {} / {}",
            rows.len(),
            last.two_antenna,
            last.single_antenna
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("gap surface maxima for Kr=100, r=1, step 0.01", gap_surface),
        ("exact tight point at Kr=2, mu=0, r=1", tight_point),
        ("optimality regions at mu_r=0", optimality_regions),
        ("direct sums match closed forms", closed_form_equivalence),
        ("placement concentration at F=1e6", placement_concentration),
        ("delivery decodes every user", delivery_correctness),
        ("achievability dominates the lower bounds", dominance),
        ("two-antenna vs single-antenna difference", baseline_identity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} {}: {name} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
