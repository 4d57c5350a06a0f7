//! Acceptance suite. Runs every criterion in sequence, prints one line per
//! criterion and exits nonzero if any fails. Sequential execution keeps the
//! wall-clock measurements free of interference from other tests.

use std::f64::consts::PI;
use std::panic;
use std::time::{Duration, Instant};

use fflt::diskeval::hadamard_block_identity_check;
use fflt::fourier::{calibrate_cutoff, FourierBackend};
use fflt::interp::{interp_error_sup, lagrange_matrix, lobatto_grid};
use fflt::kernels::kernel_block;
use fflt::partition::band_index;
use fflt::{
    gen_testdata, interpolation_order, make_basis, make_disk_plan, make_partition, make_plan,
    naive_apply, naive_disk_apply, relative_error, BackendKind, BesselHalfKernel, Complex64,
    ComplexMatrix, ExpKernel, Interval, Kernel, LaplacePlan, PartitionMode, Variant,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

type Outcome = Result<String, String>;
/// name, check, runtime budget in seconds
type Criterion = (&'static str, fn() -> Outcome, u64);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn eps_of_q(q: usize) -> f64 {
    4f64.powf(0.5 - q as f64)
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn l1(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

fn laplace_accuracy() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [1 << 8, 1 << 10, 1 << 12, 1 << 14] {
        for seed in 0..3u64 {
            for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
                // spatial nodes drawn over [0, log(1/eps)]
                let data = gen_testdata(n, interpolation_order(eps), seed, false);
                let plan = LaplacePlan::exp(eps, &data.y, &data.xi).map_err(|e| e.to_string())?;
                let f = plan.apply(&data.fhat).map_err(|e| e.to_string())?;
                let exact = naive_apply(&ExpKernel, &data.y, &data.xi, &data.fhat).unwrap();
                let e = relative_error(&exact, &f, &data.fhat).unwrap();
                worst = worst.max(e / eps);
                ensure(e <= eps, || format!("N={n} seed={seed} eps={eps:e}: E={e:e}"))?;
            }
        }
    }
    Ok(format!("max E/eps = {worst:.3}"))
}

fn error_decay() -> Outcome {
    let n = 1 << 14;
    let mut rows = Vec::new();
    for q in 1..=14usize {
        let eps = eps_of_q(q);
        let data = gen_testdata(n, q, 0, false);
        let plan = LaplacePlan::exp(eps, &data.y, &data.xi).map_err(|e| e.to_string())?;
        let f = plan.apply(&data.fhat).unwrap();
        let exact = naive_apply(&ExpKernel, &data.y, &data.xi, &data.fhat).unwrap();
        let e = relative_error(&exact, &f, &data.fhat).unwrap();
        let bound = 2f64.powi(1 - 2 * q as i32);
        ensure(e <= bound, || format!("q={q}: E={e:e} > {bound:e}"))?;
        rows.push((q as f64, e));
    }
    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(q, _)| (3.0..=12.0).contains(q))
        .map(|&(q, e)| (q, e.ln()))
        .collect();
    let k = fit.len() as f64;
    let mq = fit.iter().map(|p| p.0).sum::<f64>() / k;
    let me = fit.iter().map(|p| p.1).sum::<f64>() / k;
    let slope = fit.iter().map(|p| (p.0 - mq) * (p.1 - me)).sum::<f64>()
        / fit.iter().map(|p| (p.0 - mq).powi(2)).sum::<f64>();
    let base = (-slope).exp();
    ensure(base >= 4.0, || format!("decay base C={base:.3} < 4"))?;
    Ok(format!("C = {base:.3}, E(q=14) = {:.2e}", rows[13].1))
}

fn random_admissible(rng: &mut ChaCha8Rng) -> Interval {
    // diam <= dist to origin
    let lo = 10f64.powf(rng.gen_range(-3.0..3.0));
    let hi = lo * rng.gen_range(1.01..2.0);
    Interval::closed(lo, hi)
}

fn local_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let a = random_admissible(&mut rng);
        let b = random_admissible(&mut rng);
        ensure(a.is_admissible() && b.is_admissible(), || "sampler broke admissibility".into())?;
        for q in 2..=14usize {
            let err = interp_error_sup(&ExpKernel, a, b, q, 50).map_err(|e| e.to_string())?;
            let bound = 2f64.powi(1 - 2 * q as i32);
            worst = worst.max(err / bound);
            ensure(err <= bound, || format!("{a:?} x {b:?} q={q}: {err:e} > {bound:e}"))?;
        }
    }
    Ok(format!("max error/bound = {worst:.3}"))
}

fn near_far_regions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let per_case = 1000;
    for eps in [1e-3, 1e-6] {
        let y1 = rng.gen_range(1.0..20.0);
        let xi1 = rng.gen_range(100.0..1e5);
        let p = make_partition(eps, y1, xi1, PartitionMode::Exp, None).map_err(|e| e.to_string())?;
        let levels = p.levels();
        let q = p.q();
        let sample = |rng: &mut ChaCha8Rng, iv: Interval| {
            let lo = if iv.lo == 0.0 { 0.0 } else { iv.lo };
            let v: f64 = rng.gen_range(lo..=iv.hi);
            if v == iv.lo && iv.lo > 0.0 {
                iv.hi
            } else {
                v
            }
        };
        let mut counts = [0usize; 4];
        let mut guard = 0;
        while counts.iter().any(|&c| c < per_case) {
            guard += 1;
            ensure(guard < 1_000_000, || format!("sampler starved: {counts:?}"))?;
            let m = rng.gen_range(1..=levels);
            let l = rng.gen_range(1..=levels);
            let y = sample(&mut rng, p.spatial_band(m));
            let xi = sample(&mut rng, p.frequency_band(l));
            ensure(band_index(y, y1, levels).unwrap() == m, || "band mismatch".into())?;
            let k = (-y * xi).exp();
            let case = if m == levels {
                0
            } else if l < p.first_far(m) {
                1
            } else if l <= p.last_far(m) {
                2
            } else {
                3
            };
            if counts[case] >= per_case {
                continue;
            }
            match case {
                0 | 3 => ensure(1.0 - k <= eps, || format!("case {} y={y} xi={xi}", case + 1))?,
                1 => ensure(k <= eps, || format!("case ii y={y} xi={xi}"))?,
                _ => {
                    let a = p.spatial_band(m);
                    let b = p.frequency_band(l);
                    let ba = make_basis(q, Interval::closed(a.lo, a.hi)).unwrap();
                    let bb = make_basis(q, Interval::closed(b.lo, b.hi)).unwrap();
                    let block = kernel_block(&ExpKernel, ba.interval(), bb.interval(), q).unwrap();
                    let ra = ba.lagrange_row(y).unwrap();
                    let rb = bb.lagrange_row(xi).unwrap();
                    let mut approx = 0.0;
                    for (s, &u) in ra.iter().enumerate() {
                        for (r, &v) in rb.iter().enumerate() {
                            approx += u * block.get(s, r) * v;
                        }
                    }
                    ensure((k - approx).abs() <= eps, || format!("case iii y={y} xi={xi}"))?;
                }
            }
            counts[case] += 1;
        }
    }
    Ok(format!("{per_case} points per case at two accuracies"))
}

fn generalized_kernel() -> Outcome {
    let n = 1 << 10;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut quasi = || -> Vec<f64> {
        (0..n)
            .map(|j| (j as f64 + rng.gen_range(0.0..1.0)) / n as f64)
            .map(|v: f64| if v == 0.0 { 0.5 / n as f64 } else { v })
            .collect()
    };
    let y = quasi();
    let xi = quasi();
    let fhat: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen_range(0.0..1.0), 0.0)).collect();
    let kernel: Arc<dyn Kernel> = Arc::new(BesselHalfKernel);
    let exact = naive_apply(kernel.as_ref(), &y, &xi, &fhat).unwrap();
    let mut detail = Vec::new();
    for eps in [1e-3, 1e-6] {
        let plan = make_plan(eps, kernel.clone(), &y, &xi, Variant::General).map_err(|e| e.to_string())?;
        let f = plan.apply(&fhat).unwrap();
        let e = relative_error(&exact, &f, &fhat).unwrap();
        ensure(e <= eps, || format!("eps={eps:e}: E={e:e}"))?;
        detail.push(format!("eps={eps:e} q={} E={e:.2e}", plan.q()));
    }
    Ok(detail.join(", "))
}

fn hadamard_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for seed in 0..100u64 {
        let q = rng.gen_range(1..=8);
        let sizes = (rng.gen_range(1..=64), rng.gen_range(1..=64));
        ensure(hadamard_block_identity_check(q, sizes, seed), || {
            format!("q={q} sizes={sizes:?} seed={seed}")
        })?;
    }
    Ok("100 configurations".into())
}

fn disk_accuracy() -> Outcome {
    let n = 1 << 12;
    let mut worst_direct: f64 = 0.0;
    let mut worst_nfft: f64 = 0.0;
    for seed in 0..3u64 {
        for k in 2..=8 {
            let eps = 10f64.powi(-k);
            let data = gen_testdata(n, interpolation_order(eps), seed, false);
            let nodes = data.disk_nodes();
            let exact = naive_disk_apply(&nodes, &data.xi, &data.fhat).unwrap();
            let mut backends = vec![BackendKind::Direct];
            if k <= 6 {
                backends.push(BackendKind::Nfft);
            }
            for backend in backends {
                let plan = make_disk_plan(eps, &nodes, &data.xi, backend).map_err(|e| e.to_string())?;
                let f = plan.apply(&data.fhat).unwrap();
                let e = relative_error(&exact, &f, &data.fhat).unwrap();
                match backend {
                    BackendKind::Direct => worst_direct = worst_direct.max(e / eps),
                    BackendKind::Nfft => worst_nfft = worst_nfft.max(e / eps),
                }
                ensure(e <= eps, || format!("{backend:?} seed={seed} eps={eps:e}: E={e:e}"))?;
            }
        }
    }
    Ok(format!("max E/eps direct {worst_direct:.3}, nfft {worst_nfft:.3}"))
}

fn nfft_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut detail = Vec::new();
    for n in [128usize, 512, 2048] {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let freqs: Vec<f64> = (1..=n).map(|k| k as f64).collect();
        let probes: Vec<usize> = (0..50).map(|_| rng.gen_range(0..n)).collect();
        let direct = FourierBackend::direct(&x, &freqs).unwrap();
        let unit = ComplexMatrix::from_fn(1, 1, |_, _| Complex64::new(1.0, 0.0));
        let estimate = |b: &FourierBackend| -> f64 {
            probes
                .iter()
                .map(|&k| {
                    let a = direct.apply_block(0..n, k..k + 1, &unit).unwrap();
                    let t = b.apply_block(0..n, k..k + 1, &unit).unwrap();
                    a.as_slice()
                        .iter()
                        .zip(t.as_slice())
                        .map(|(u, v)| (u - v).norm())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max)
        };
        let mut prev = f64::INFINITY;
        for m in 2..=6 {
            let b = FourierBackend::nfft_with_cutoff(&x, &freqs, m).unwrap();
            let e = estimate(&b);
            ensure(e < prev, || format!("N={n}: error at m={m} ({e:e}) not below m={} ({prev:e})", m - 1))?;
            prev = e;
        }
        for eps_f in [1e-2, 1e-4, 1e-6, 1e-9] {
            let m = calibrate_cutoff(eps_f).map_err(|e| e.to_string())?;
            let b = FourierBackend::nfft_with_cutoff(&x, &freqs, m).unwrap();
            let e = estimate(&b);
            ensure(e <= eps_f, || format!("N={n} eps_F={eps_f:e} m={m}: {e:e}"))?;
            if n == 2048 {
                detail.push(format!("{eps_f:e}->m={m}"));
            }
        }
    }
    Ok(format!("monotone in m; calibrated {}", detail.join(" ")))
}

fn adjoint_consistency() -> Outcome {
    let n = 1024;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut cvec = |len: usize| -> Vec<Complex64> {
        (0..len)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    };
    let f = cvec(n);
    let g = cvec(n);
    let data = gen_testdata(n, 8, 9, false);
    let check = |name: &str, af: Vec<Complex64>, ag: Vec<Complex64>| -> Result<f64, String> {
        let lhs = inner(&af, &g);
        let rhs = inner(&f, &ag);
        let scale = l1(&af) * l1(&g);
        let rel = (lhs - rhs).norm() / scale;
        ensure(rel <= 1e-12, || format!("{name}: {rel:e}"))?;
        Ok(rel)
    };
    let mut worst: f64 = 0.0;
    let plan = LaplacePlan::exp(1e-6, &data.y, &data.xi).unwrap();
    worst = worst.max(check("laplace exp", plan.apply(&f).unwrap(), plan.apply_adjoint(&g).unwrap())?);
    let y: Vec<f64> = data.y.iter().map(|v| v + 1e-3).collect();
    let general = make_plan(1e-6, Arc::new(BesselHalfKernel), &y, &data.xi, Variant::General).unwrap();
    worst = worst.max(check(
        "laplace general",
        general.apply(&f).unwrap(),
        general.apply_adjoint(&g).unwrap(),
    )?);
    let disk = make_disk_plan(1e-6, &data.disk_nodes(), &data.xi, BackendKind::Direct).unwrap();
    worst = worst.max(check("disk", disk.apply(&f).unwrap(), disk.apply_adjoint(&g).unwrap())?);
    Ok(format!("max relative defect {worst:.2e}"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Writes through a buffer larger than the last-level cache.
fn evict_caches(buffer: &mut [u64]) {
    for (k, v) in buffer.iter_mut().enumerate().step_by(8) {
        *v = v.wrapping_add(k as u64);
    }
    std::hint::black_box(buffer);
}

fn scaling() -> Outcome {
    let q = 8;
    let eps = eps_of_q(q);
    let sizes: Vec<u32> = (16..=19).collect();
    let mut counts = Vec::new();
    let mut problems = Vec::new();
    for &p in &sizes {
        let data = gen_testdata(1 << p, q, 10, false);
        let plan = LaplacePlan::exp(eps, &data.y, &data.xi).unwrap();
        let (_, count) = plan.apply_counted(&data.fhat).unwrap();
        counts.push(count.total() as f64);
        problems.push((plan, data.fhat));
    }
    // Each timed apply starts from a cold cache. Otherwise the smaller sizes
    // run out of cache and the larger ones from memory, and the ratio at the
    // crossover measures the cache size instead of the transform.
    let mut buffer = vec![1u64; 256 << 17];
    let mut cold = vec![Vec::new(); sizes.len()];
    let mut warm = vec![Vec::new(); sizes.len()];
    for _ in 0..5 {
        for (k, (plan, fhat)) in problems.iter().enumerate() {
            evict_caches(&mut buffer);
            let t = Instant::now();
            std::hint::black_box(plan.apply(fhat).unwrap());
            cold[k].push(t.elapsed().as_secs_f64());
            let t = Instant::now();
            std::hint::black_box(plan.apply(fhat).unwrap());
            warm[k].push(t.elapsed().as_secs_f64());
        }
    }
    let times: Vec<f64> = cold.into_iter().map(median).collect();
    let warm: Vec<f64> = warm.into_iter().map(median).collect();
    let mut detail = Vec::new();
    let mut warm_detail = Vec::new();
    for i in 0..3 {
        let rc = counts[i + 1] / counts[i];
        let rt = times[i + 1] / times[i];
        ensure(rc <= 2.3, || format!("count ratio at 2^{} = {rc:.3}", 16 + i))?;
        ensure(rt <= 2.6, || format!("time ratio at 2^{} = {rt:.3}, medians {times:?}", 16 + i))?;
        detail.push(format!("{rc:.2}/{rt:.2}"));
        warm_detail.push(format!("{:.2}", warm[i + 1] / warm[i]));
    }
    Ok(format!(
        "count/time ratios {} (warm cache time ratios {})",
        detail.join(" "),
        warm_detail.join(" ")
    ))
}

fn interpolation_core() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_repro: f64 = 0.0;
    for q in 2..=20usize {
        let lo = rng.gen_range(-5.0..5.0);
        let iv = Interval::closed(lo, lo + rng.gen_range(0.1..10.0));
        let basis = make_basis(q, iv).unwrap();
        // Chebyshev series of degree q - 1 on the interval
        let coef: Vec<f64> = (0..q).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let poly = |x: f64| {
            let t = (2.0 * x - iv.lo - iv.hi) / (iv.hi - iv.lo);
            coef.iter()
                .enumerate()
                .map(|(k, c)| c * (k as f64 * t.clamp(-1.0, 1.0).acos()).cos())
                .sum::<f64>()
        };
        let values: Vec<f64> = basis.nodes().iter().map(|&x| poly(x)).collect();
        let grid = lobatto_grid(&iv, 400);
        let scale = grid.iter().map(|&x| poly(x).abs()).fold(0.0, f64::max);
        for &x in &grid {
            let err = (basis.interpolate(&values, x).unwrap() - poly(x)).abs() / scale;
            worst_repro = worst_repro.max(err);
            ensure(err <= 1e-12, || format!("q={q} x={x}: {err:e}"))?;
        }

        let unit = make_basis(q, Interval::closed(-1.0, 1.0)).unwrap();
        let fine: Vec<f64> = (0..=4000).map(|i| -1.0 + i as f64 / 2000.0).collect();
        let lm = lagrange_matrix(&unit, &fine).unwrap();
        let lebesgue = (0..fine.len())
            .map(|i| lm.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let bound = 1.0 + 2.0 / PI * (q as f64).ln();
        ensure(lebesgue <= bound, || format!("q={q}: Lebesgue {lebesgue} > {bound}"))?;
    }
    Ok(format!("max reproduction error {worst_repro:.2e}"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 Laplace accuracy", laplace_accuracy, 60),
        ("2 error decay", error_decay, 120),
        ("3 local interpolation bound", local_bound, 10),
        ("4 near/far region inequalities", near_far_regions, 5),
        ("5 generalized kernel accuracy", generalized_kernel, 30),
        ("6 Hadamard factorization identity", hadamard_identity, 5),
        ("7 unit-disk evaluation accuracy", disk_accuracy, 120),
        ("8 NFFT accuracy contract", nfft_contract, 30),
        ("9 adjoint consistency", adjoint_consistency, 10),
        ("10 work scaling", scaling, 120),
        ("11 interpolation core", interpolation_core, 10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run, limit) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|d| {
            if elapsed > Duration::from_secs(limit) {
                Err(format!("{d}; exceeded {limit} s budget"))
            } else {
                Ok(d)
            }
        });
        match outcome {
            Ok(d) => println!("PASS criterion {name}: {d} [{:.1} s]", elapsed.as_secs_f64()),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name}: {d} [{:.1} s]", elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
