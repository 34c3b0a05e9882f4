//! Acceptance suite: one test per release criterion, each printing a single
//! PASS/FAIL line with the measured numbers. Tolerances are asserted exactly
//! as agreed; nothing here is tuned to the implementation.
//!
//! Criteria 2, 3, and parts of 1 and 5 encode idealized operating points that
//! a calibration from n points cannot reach (the scale parameter estimate
//! would need a sampling spread no tail estimator achieves at these sample
//! sizes). They are kept at full strength on purpose and fail honestly; the
//! measured values are printed for the record. See the workspace README.

use outlier_core::detector::{self, DetectorConfig, LevelSchedule, Variant};
use outlier_core::evt::{self, GevParams};
use outlier_core::kernels::{jackknife_kernel, quartic_kernel};
use outlier_core::math::adaptive_simpson;
use outlier_core::sim::{self, Distribution, MeanFn, Process, Scenario};
use outlier_core::smoother::{jackknife_estimate, SmootherConfig, WindowBuffer};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

const SEED: u64 = 4242;

fn clean_scenario(n: usize) -> Scenario {
    Scenario::study(MeanFn::Mu0, Process::Iid, Distribution::Normal, n, false, SEED)
}

fn default_config(n: usize, alpha: f64) -> DetectorConfig {
    DetectorConfig::new(n, LevelSchedule::constant(alpha).unwrap())
}

fn verdict_line(criterion: &str, pass: bool, detail: &str) -> String {
    let line = format!("criterion {criterion}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    println!("{line}");
    line
}

// Specificity on clean nominal data, constant level 1%, 200 replications per
// size, against reference operating points 98.3 / 99.3 / 99.7 (+-1.0pp).
// Budget: under five minutes single threaded, so this one avoids the thread
// pool entirely.
#[test]
fn criterion_1_specificity_reproduction() {
    let started = std::time::Instant::now();
    let targets = [(50usize, 98.3f64), (100, 99.3), (200, 99.7)];
    let mut details = Vec::new();
    let mut ok = true;
    for (n, target) in targets {
        let sc = clean_scenario(n);
        let cfg = default_config(n, 0.01);
        let (mut fp, mut tn, mut failed) = (0u64, 0u64, 0u64);
        for rep in 0..200 {
            let (series, _) = sim::generate(&sc, rep);
            let mut state = match detector::calibrate(&series[..n], &cfg) {
                Ok(s) => s,
                Err(_) => {
                    failed += 1;
                    continue;
                }
            };
            for &x in &series[n..] {
                if state.step(x).flag {
                    fp += 1;
                } else {
                    tn += 1;
                }
            }
        }
        let spec = 100.0 * tn as f64 / (tn + fp) as f64;
        let hit = (spec - target).abs() <= 1.0;
        ok &= hit;
        details.push(format!("n={n}: {spec:.2} (target {target}+-1.0{}) failed={failed}", if hit { "" } else { " MISS" }));
    }
    let elapsed = started.elapsed();
    let in_budget = elapsed < std::time::Duration::from_secs(300);
    ok &= in_budget;
    let line = verdict_line(
        "1 (specificity reproduction)",
        ok,
        &format!("{} elapsed={elapsed:.1?}", details.join("; ")),
    );
    assert!(ok, "{line}");
}

// Joint level over blocks of n consecutive tests: 200 clean streams at
// n = 100 monitored for 10 blocks each; the fraction of the 2000 blocks
// containing at least one rejection must stay within [0, 0.025] at the
// 1% joint level.
#[test]
fn criterion_2_joint_level_calibration() {
    let n = 100usize;
    let sc = clean_scenario(n);
    let cfg = default_config(n, 0.01);
    let (mut blocks_hit, mut blocks_total) = (0u64, 0u64);
    for rep in 0..200 {
        let (series, _) = sim::generate(&sc, rep);
        let mut state = match detector::calibrate(&series[..n], &cfg) {
            Ok(s) => s,
            Err(_) => continue,
        };
        for b in 0..10 {
            let mut any = false;
            for &x in &series[n + b * n..n + (b + 1) * n] {
                any |= state.step(x).flag;
            }
            blocks_hit += any as u64;
            blocks_total += 1;
        }
    }
    let fraction = blocks_hit as f64 / blocks_total as f64;
    let ok = (0.0..=0.025).contains(&fraction);
    let line = verdict_line(
        "2 (joint level per block)",
        ok,
        &format!("{blocks_hit}/{blocks_total} blocks with a rejection = {fraction:.4} (bound 0.025)"),
    );
    assert!(ok, "{line}");
}

// Decaying level schedule: with geometric per-block levels summing to the
// joint budget, the empirical probability of any rejection over the whole
// 10-block horizon must not exceed alpha + 0.01.
#[test]
fn criterion_3_summable_schedule_bound() {
    let n = 100usize;
    let alpha = 0.01f64;
    let sc = clean_scenario(n);
    let cfg = DetectorConfig::new(n, LevelSchedule::summable(alpha).unwrap());
    let outcomes: Vec<Option<bool>> = (0..1000usize)
        .into_par_iter()
        .map(|rep| {
            let (series, _) = sim::generate(&sc, rep);
            let mut state = detector::calibrate(&series[..n], &cfg).ok()?;
            Some(series[n..].iter().any(|&x| state.step(x).flag))
        })
        .collect();
    let usable = outcomes.iter().flatten().count();
    let any = outcomes.iter().flatten().filter(|&&b| b).count();
    let fraction = any as f64 / usable as f64;
    let ok = fraction <= alpha + 0.01;
    let line = verdict_line(
        "3 (summable schedule bound)",
        ok,
        &format!("{any}/{usable} streams with any rejection = {fraction:.4} (bound {})", alpha + 0.01),
    );
    assert!(ok, "{line}");
}

// Consistency: outliers of ten times the calibrated threshold must be caught
// essentially always. 100 streams x 5 injections on a curved mean with
// dependent heavy-ish noise.
#[test]
fn criterion_4_consistency_at_ten_sigma() {
    let n = 100usize;
    let sc = Scenario::study(MeanFn::Mu1, Process::Ar, Distribution::Exp, n, false, SEED);
    let cfg = default_config(n, 0.01);
    let slots = [150usize, 320, 500, 710, 900];
    let hits: Vec<(u64, u64)> = (0..100usize)
        .into_par_iter()
        .map(|rep| {
            let (series, _) = sim::generate(&sc, rep);
            let mut state = match detector::calibrate(&series[..n], &cfg) {
                Ok(s) => s,
                Err(_) => return (0, 0),
            };
            let threshold = evt::gev_quantile(&state.theta(), 0.99).unwrap();
            let mut stream = series[n..].to_vec();
            for (j, &at) in slots.iter().enumerate() {
                stream[at - n] += if j % 2 == 0 { 10.0 } else { -10.0 } * threshold;
            }
            let mut hit = 0u64;
            for (k, &x) in stream.iter().enumerate() {
                let v = state.step(x);
                if slots.contains(&(k + n)) && v.flag {
                    hit += 1;
                }
            }
            (hit, slots.len() as u64)
        })
        .collect();
    let detected: u64 = hits.iter().map(|h| h.0).sum();
    let total: u64 = hits.iter().map(|h| h.1).sum();
    let rate = detected as f64 / total as f64;
    let ok = rate > 0.99 && total >= 500;
    let line = verdict_line(
        "4 (consistency at 10x threshold)",
        ok,
        &format!("{detected}/{total} injections detected = {rate:.4} (need > 0.99)"),
    );
    assert!(ok, "{line}");
}

// Sensitivity on the contaminated nominal grid with the analytic minimal
// height rule, against reference values 90.8 / 96.1 / 97.5 (+-10pp; heights
// in the original study are unpublished, so the band is wide).
#[test]
fn criterion_5_sensitivity_reproduction() {
    let targets = [(50usize, 90.8f64), (100, 96.1), (200, 97.5)];
    let mut details = Vec::new();
    let mut ok = true;
    for (n, target) in targets {
        let sc = Scenario::study(MeanFn::Mu0, Process::Iid, Distribution::Normal, n, true, SEED);
        let cfg = default_config(n, 0.01);
        let report = sim::run_scenario(&sc, &cfg, 200).unwrap();
        let sens = 100.0 * report.sensitivity().expect("contaminated grid always injects");
        let hit = (sens - target).abs() <= 10.0;
        ok &= hit;
        details.push(format!("n={n}: {sens:.2} (target {target}+-10{})", if hit { "" } else { " MISS" }));
    }
    let line = verdict_line("5 (sensitivity reproduction)", ok, &details.join("; "));
    assert!(ok, "{line}");
}

// Leaving flagged points out of the fit must not cost specificity: on the
// contaminated independent-noise grid the partial variant matches or beats
// the full variant in at least 80% of the 60 cells.
#[test]
fn criterion_6_partial_beats_full_on_specificity() {
    let mut cells = 0u32;
    let mut ordered = 0u32;
    for mean_fn in MeanFn::ALL {
        for dist in Distribution::ALL {
            for n in [50usize, 100, 200] {
                let sc = Scenario::study(mean_fn, Process::Iid, dist, n, true, SEED);
                let mut full = default_config(n, 0.01);
                full.variant = Variant::Full;
                let mut partial = full.clone();
                partial.variant = Variant::Partial;
                let rf = sim::run_scenario(&sc, &full, 60).unwrap();
                let rp = sim::run_scenario(&sc, &partial, 60).unwrap();
                if let (Some(sf), Some(sp)) = (rf.specificity(), rp.specificity()) {
                    cells += 1;
                    ordered += (sp >= sf) as u32;
                }
            }
        }
    }
    let fraction = ordered as f64 / cells as f64;
    let ok = fraction >= 0.80;
    let line = verdict_line(
        "6 (partial >= full specificity)",
        ok,
        &format!("{ordered}/{cells} cells ordered = {fraction:.3} (need >= 0.80)"),
    );
    assert!(ok, "{line}");
}

// Numerical suites: kernel moments by quadrature, exact affine reproduction,
// distribution round trips, rescaling composition, shape recovery on a large
// synthetic sample, and bit-exact incremental evaluation.
#[test]
fn criterion_7_numerical_suites() {
    let mut ok = true;
    let mut notes = Vec::new();

    // kernel moment and quadrature checks, 1e-8
    let k = quartic_kernel();
    let mut worst: f64 = 0.0;
    for (l, want) in k.moments().iter().enumerate() {
        let got = adaptive_simpson(&|x: f64| x.powi(l as i32) * k.eval(x), -1.0, 0.0, 1e-12);
        worst = worst.max((got - want).abs());
    }
    for (l, want) in [(0usize, 1.0f64), (1, 0.0), (2, 0.0)] {
        let got = adaptive_simpson(
            &|x: f64| x.powi(l as i32) * jackknife_kernel(&k, x).unwrap(),
            -1.0,
            0.0,
            1e-12,
        );
        worst = worst.max((got - want).abs());
    }
    ok &= worst <= 1e-8;
    notes.push(format!("kernel quadrature {worst:.2e}"));

    // affine reproduction, 1e-8 relative
    let n = 100usize;
    let cfg = SmootherConfig::new(n, 0.3, quartic_kernel()).unwrap();
    let mut buf = WindowBuffer::new(n);
    for i in 1..=60i64 {
        buf.push(i, 2.5 - 0.04 * i as f64, true);
    }
    let t = 60.0 / n as f64;
    let est = jackknife_estimate(&buf, t, &cfg).unwrap();
    let want = 2.5 - 0.04 * 60.0;
    let rel = (est - want).abs() / want.abs();
    ok &= rel <= 1e-8;
    notes.push(format!("affine {rel:.2e}"));

    // distribution round trip, 1e-10
    let mut worst: f64 = 0.0;
    for gamma in [-0.75, -0.3, -1e-7, 0.0, 1e-7, 0.3, 0.75] {
        let p = GevParams::new(gamma, 0.4, 1.3).unwrap();
        for q in [0.001, 0.01, 0.5, 0.99, 0.999] {
            let x = evt::gev_quantile(&p, q).unwrap();
            worst = worst.max((evt::gev_cdf(&p, x) - q).abs());
        }
    }
    ok &= worst <= 1e-10;
    notes.push(format!("roundtrip {worst:.2e}"));

    // rescaling composition, 1e-10
    let mut worst: f64 = 0.0;
    for gamma in [-0.4, 0.0, 0.4] {
        let p = GevParams::new(gamma, 1.0, 0.7).unwrap();
        let direct = evt::scale_params(&p, 3, 96).unwrap();
        let via = evt::scale_params(&evt::scale_params(&p, 3, 12).unwrap(), 12, 96).unwrap();
        let qd = evt::gev_quantile(&direct, 0.99).unwrap();
        let qv = evt::gev_quantile(&via, 0.99).unwrap();
        worst = worst.max((qd - qv).abs() / qd.abs());
    }
    ok &= worst <= 1e-10;
    notes.push(format!("semigroup {worst:.2e}"));

    // shape recovery from 10,000 light-tailed maxima
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(SEED);
    let maxima: Vec<f64> = (0..10_000)
        .map(|_| {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            2.0 - 0.5 * (-u.ln()).ln()
        })
        .collect();
    let fitted = evt::fit_pwm(&maxima).unwrap();
    ok &= fitted.gamma.abs() <= 0.05;
    notes.push(format!("shape {:.4}", fitted.gamma));

    // incremental buffer equals a fresh batch rebuild, bit for bit
    let errs = sim::gen_errors(Process::Ar, Distribution::Exp, 80, SEED);
    let cfg = SmootherConfig::new(n, 0.25, quartic_kernel()).unwrap();
    let mut live = WindowBuffer::new(26);
    let mut bitwise = true;
    for (k, &e) in errs.iter().enumerate() {
        let idx = k as i64 + 1;
        live.push(idx, 1.0 + e, true);
        let t = idx as f64 / n as f64;
        let incremental = jackknife_estimate(&live, t, &cfg);
        let mut fresh = WindowBuffer::new(26);
        for (j, &e2) in errs[..=k].iter().enumerate() {
            fresh.push(j as i64 + 1, 1.0 + e2, true);
        }
        let batch = jackknife_estimate(&fresh, t, &cfg);
        bitwise &= match (incremental, batch) {
            (Ok(a), Ok(b)) => a.to_bits() == b.to_bits(),
            (Err(_), Err(_)) => true,
            _ => false,
        };
    }
    ok &= bitwise;
    notes.push(format!("incremental bit-exact {bitwise}"));

    let line = verdict_line("7 (numerical suites)", ok, &notes.join(", "));
    assert!(ok, "{line}");
}

// The two-bandwidth combination and the one-shot fit weighted by the
// combined kernel solve different normal equations, and on rough data they
// differ by the documented O(1/(n h)) discretization term. On the affine
// class that term cancels for any window geometry, so there the two must
// agree to solver precision. 100 random geometries: bandwidth, position,
// occupancy, and line all drawn fresh.
#[test]
fn criterion_8_equivalent_kernel_identity() {
    let n = 100usize;
    let k = quartic_kernel();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(SEED ^ 0x8);
    let mut worst: f64 = 0.0;
    let mut done = 0u32;
    while done < 100 {
        let h: f64 = rng.gen_range(0.05..0.5);
        let cfg = SmootherConfig::new(n, h, k).unwrap();
        let span = (n as f64 * h).ceil() as i64;
        let end: i64 = rng.gen_range(span + 1..(2 * n) as i64);
        let a: f64 = rng.gen_range(-5.0..5.0);
        let b: f64 = rng.gen_range(-8.0..8.0);
        let mut buf = WindowBuffer::new(n);
        let mut pts = Vec::new();
        for i in end - span..=end {
            // the two rightmost points always survive so the narrow
            // component keeps a solvable design
            if i < end - 1 && rng.gen_bool(0.3) {
                continue;
            }
            let v = a + b * (i as f64 / n as f64);
            buf.push(i, v, true);
            pts.push((i, v));
        }
        let t = end as f64 / n as f64;
        let combined = match jackknife_estimate(&buf, t, &cfg) {
            Ok(est) => est,
            Err(_) => continue,
        };

        let nh = n as f64 * h;
        let (mut s0, mut s1, mut s2, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(i, v) in &pts {
            let u = (i as f64 - n as f64 * t) / nh;
            let w = jackknife_kernel(&k, u).unwrap() / nh;
            s0 += w;
            s1 += w * u;
            s2 += w * u * u;
            r0 += w * v;
            r1 += w * u * v;
        }
        let det = s0 * s2 - s1 * s1;
        if det.abs() < 1e-9 {
            continue;
        }
        let direct = (s2 * r0 - s1 * r1) / det;
        worst = worst.max((combined - direct).abs() / (1.0 + direct.abs()));
        done += 1;
    }
    let ok = worst <= 1e-6;
    let line = verdict_line(
        "8 (equivalent kernel identity)",
        ok,
        &format!("worst relative gap {worst:.2e} over 100 windows (need <= 1e-6)"),
    );
    assert!(ok, "{line}");
}
