//! Acceptance gate: criteria 1 to 9, one PASS/FAIL line each. Runs without
//! the libtest harness so the lines always reach the terminal.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dosx_core::disorder::{expected_v_squared, potential_at, potential_hat, sample_config, WeightDistribution};
use dosx_core::dos::{choose_kappa, dos_direct, dos_expansion, f_lorentz, DosRequest};
use dosx_core::expansion::{
    constructive_n, duhamel_crosscheck, partial_sums, s_coeffs, t_coeff_det, t_coeffs_mc, Method,
    SpectralWindow,
};
use dosx_core::lattice::{star_integral, BoxSpec, Momentum, WaveVector};
use dosx_core::oracle::expect_resolvent_batch;
use dosx_core::partitions::{bell, bell_bound, expected_moment_product};
use dosx_core::profile::{profile_hat, Profile};
use dosx_core::stats::{reduce_samples, Accumulator, ComplexAccumulator};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn unit() -> Profile {
    Profile::gaussian(1.0).unwrap()
}

fn desk_box() -> BoxSpec {
    BoxSpec::new(4.0, 1, 3.0).unwrap()
}

fn distributions() -> [WeightDistribution; 3] {
    [WeightDistribution::Constant { c: 1.0 }, WeightDistribution::UniformZeroOne, WeightDistribution::Rademacher]
}

fn criterion_1() -> Verdict {
    let bx = BoxSpec::new(2.0, 1, 2.0).unwrap();
    let prof = unit();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut tuples: Vec<Vec<Momentum>> = Vec::new();
    for n in 1..=3 {
        for _ in 0..20 {
            tuples.push((0..=n).map(|_| Momentum::new(&[rng.gen_range(-2..=2)])).collect());
        }
    }
    let transfers: BTreeSet<Momentum> = tuples.iter().flat_map(|t| t.windows(2).map(|w| w[0] - w[1])).collect();
    let transfers: Vec<Momentum> = transfers.into_iter().collect();
    let slot = |u: &Momentum| transfers.binary_search(u).unwrap();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for (di, dist) in distributions().iter().enumerate() {
        let acc = reduce_samples(
            200_000,
            || vec![ComplexAccumulator::default(); tuples.len()],
            |acc, i| {
                let c = sample_config(&bx, dist, 7000 + di as u64, i);
                let hats: Vec<Complex64> = transfers.iter().map(|u| potential_hat(&c, &prof, &bx, u)).collect();
                for (k, t) in tuples.iter().enumerate() {
                    acc[k].push(t.windows(2).map(|w| hats[slot(&(w[0] - w[1]))]).product());
                }
            },
        );
        for (k, t) in tuples.iter().enumerate() {
            let exact = expected_moment_product(&bx, &prof, dist, t).unwrap();
            let diff = (acc[k].mean() - exact).norm();
            let sigma = acc[k].stderr();
            let z = if sigma > 0.0 { diff / sigma } else if diff < 1e-12 { 0.0 } else { f64::INFINITY };
            worst = worst.max(z);
            if diff > 4.0 * sigma + 1e-12 {
                failures += 1;
            }
        }
    }
    verdict(failures == 0, format!("180 comparisons, worst |diff|/σ = {worst:.2}, failures = {failures}"))
}

fn criterion_2() -> Verdict {
    let bx = desk_box();
    let prof = unit();
    let zs: Vec<Complex64> = [(1.0, 0.3), (0.5, 0.6), (2.0, 1.0), (-0.5, 1.5), (1.0, 2.0)]
        .iter()
        .map(|&(r, i)| Complex64::new(r, i))
        .collect();
    let vectors = [
        WaveVector::plane_wave(Momentum::new(&[1])),
        WaveVector::from_pairs([
            (Momentum::ZERO, Complex64::new(0.6, 0.0)),
            (Momentum::new(&[2]), Complex64::new(0.0, 0.8)),
        ]),
    ];
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut count = 0;
    for dist in [WeightDistribution::UniformZeroOne, WeightDistribution::Rademacher] {
        for psi in &vectors {
            let mc = t_coeffs_mc(3, &bx, &prof, &dist, &zs, psi, psi, 100_000, 31).unwrap();
            for n in 0..=3 {
                for (zi, &z) in zs.iter().enumerate() {
                    let det = t_coeff_det(n, &bx, &prof, &dist, z, psi, psi).unwrap().value;
                    let m = mc[n][zi];
                    let diff = (det - m.value).norm();
                    if m.stderr > 0.0 {
                        worst = worst.max(diff / m.stderr);
                    }
                    count += 1;
                    if diff > 4.0 * m.stderr + 1e-12 {
                        failures += 1;
                    }
                }
            }
        }
    }
    verdict(failures == 0, format!("{count} comparisons, worst |diff|/σ = {worst:.2}, failures = {failures}"))
}

fn criterion_3() -> Verdict {
    let bx = desk_box();
    let prof = unit();
    let mut worst_t0: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    for m in [-3, 0, 1, 5, 12] {
        let q = Momentum::new(&[m]);
        let psi = WaveVector::plane_wave(q);
        for z in [Complex64::new(1.0, 0.5), Complex64::new(-0.3, 1.7), Complex64::new(4.0, -0.8)] {
            let r = 1.0 / (bx.nu(&q) - z);
            let t0 = t_coeff_det(0, &bx, &prof, &WeightDistribution::Rademacher, z, &psi, &psi).unwrap().value;
            worst_t0 = worst_t0.max((t0 - r).norm());
            for dist in [WeightDistribution::UniformZeroOne, WeightDistribution::Constant { c: 1.7 }] {
                let t1 = t_coeff_det(1, &bx, &prof, &dist, z, &psi, &psi).unwrap().value;
                let expect = dist.moment(1) * profile_hat(&prof, &bx, &Momentum::ZERO) * r * r;
                worst_rel = worst_rel.max((t1 - expect).norm() / expect.norm());
            }
            let t2 = t_coeff_det(2, &bx, &prof, &WeightDistribution::Rademacher, z, &psi, &psi).unwrap().value;
            let inner = star_integral(&bx, |p| profile_hat(&prof, &bx, &(q - *p)).powi(2) / (bx.nu(p) - z));
            let expect = r * r * inner;
            worst_rel = worst_rel.max((t2 - expect).norm() / expect.norm());
        }
    }
    verdict(
        worst_t0 == 0.0 && worst_rel <= 1e-10,
        format!("T_0 max |diff| = {worst_t0:.1e} (exact), T_1/T_2 max relative = {worst_rel:.2e} (≤ 1e-10)"),
    )
}

fn criterion_4() -> Verdict {
    let bx = BoxSpec::new(2.0, 1, 1.0).unwrap();
    let prof = unit();
    let window = SpectralWindow::new(1.0, 0.5, 0.25, 0.0, 1.0).unwrap();
    let vectors = [
        WaveVector::plane_wave(Momentum::ZERO),
        WaveVector::from_pairs([
            (Momentum::new(&[-1]), Complex64::new(0.6, 0.0)),
            (Momentum::new(&[1]), Complex64::new(0.0, 0.8)),
        ]),
    ];
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        let c = sample_config(&bx, &WeightDistribution::UniformZeroOne, 44, i);
        for psi in &vectors {
            for n in 0..=1 {
                worst = worst.max(duhamel_crosscheck(n, &bx, &prof, &c, &window, psi, psi).unwrap().discrepancy);
            }
        }
    }
    verdict(worst <= 1e-5, format!("max |time - frequency| = {worst:.2e} (≤ 1e-5)"))
}

fn criterion_5() -> Verdict {
    let bx = desk_box();
    let prof = unit();
    let dist = WeightDistribution::Rademacher;
    let lambdas = [0.02, 0.05, 0.1];
    let base = SpectralWindow::new(1.0, 0.5, 0.25, 0.0, 0.1).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let vectors = [
        WaveVector::plane_wave(Momentum::ZERO),
        WaveVector::plane_wave(Momentum::new(&[1])),
        WaveVector::from_pairs([(Momentum::ZERO, Complex64::new(h, 0.0)), (Momentum::new(&[2]), Complex64::new(h, 0.0))]),
    ];
    let pairs: Vec<_> = vectors.iter().map(|v| (v.clone(), v.clone())).collect();
    let oracle = expect_resolvent_batch(&bx, &prof, &dist, &lambdas, base.z(), &pairs, 100_000, 55).unwrap();
    let mut failures = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut monotone = true;
    let mut trace = Vec::new();
    for (vi, psi) in vectors.iter().enumerate() {
        let coeffs = s_coeffs(3, &bx, &prof, &dist, &base, psi, psi, Method::Deterministic).unwrap();
        for (li, &lambda) in lambdas.iter().enumerate() {
            let orc = oracle[li][vi];
            let sums = partial_sums(&coeffs, lambda);
            let numerical: f64 = coeffs.iter().map(|c| lambda.powi(c.n as i32) * c.numerical_error).sum();
            let budget = base.epsilon * psi.norm().powi(2) + 3.0 * orc.stderr + numerical;
            for big_n in [2, 3] {
                let d = (sums[big_n] - orc.value).norm();
                worst_ratio = worst_ratio.max(d / budget);
                if d > budget {
                    failures += 1;
                }
            }
            if li == 0 {
                let d: Vec<f64> = sums.iter().map(|s| (s - orc.value).norm()).collect();
                if d.windows(2).any(|w| w[1] > w[0]) {
                    monotone = false;
                }
                trace.push(format!("[{}]", d.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")));
            }
        }
    }
    verdict(
        failures == 0 && monotone,
        format!(
            "18 comparisons, worst discrepancy/budget = {worst_ratio:.3}, failures = {failures}; λ=0.02 discrepancy N=0..3 {} ({})",
            trace.join(" "),
            if monotone { "non-increasing" } else { "NOT monotone" }
        ),
    )
}

fn criterion_6() -> Verdict {
    let bx = desk_box();
    let prof = unit();
    let dist = WeightDistribution::UniformZeroOne;
    let window = SpectralWindow::new(1.0, 0.5, 0.25, 0.1, 0.1).unwrap();
    let kappa = choose_kappa(&window, &bx, &prof, &dist, window.epsilon / 2.0).unwrap();
    let req = DosRequest { window, kappa: kappa.kappa, order: 2, samples: 10_000, seed: 66 };
    let exp = dos_expansion(&req, &bx, &prof, &dist).unwrap();
    let direct = dos_direct(&req, &bx, &prof, &dist).unwrap();
    let gap = (direct.full.value - exp.value).abs();
    let budget = window.epsilon + 3.0 * direct.full.stderr;
    let main = gap <= budget;

    // λ = 0: both sides against the free Lorentzian sum over their momenta.
    let free = DosRequest { window: window.with_lambda(0.0).unwrap(), ..req };
    let direct0 = dos_direct(&free, &bx, &prof, &dist).unwrap();
    let lorentz: f64 = bx.points().iter().map(|p| f_lorentz(bx.nu(p), 1.0, 0.5)).sum::<f64>() / bx.volume();
    let exp0 = dos_expansion(&free, &bx, &prof, &dist).unwrap();
    let head_lorentz: f64 = free.head(&bx).iter().map(|q| f_lorentz(bx.nu(q), 1.0, 0.5)).sum::<f64>() / bx.volume();
    let d0 = (direct0.full.value - lorentz).abs() + direct0.full.stderr;
    let e0 = (exp0.value - head_lorentz).abs();
    let sanity = d0 <= 1e-3 && e0 <= 1e-3;
    verdict(
        main && sanity,
        format!(
            "κ = {}, |direct - expansion| = {gap:.3e} ≤ {budget:.3e}; λ=0 vs free Lorentzian sum: direct {d0:.1e}, expansion {e0:.2e} (≤ 1e-3)",
            kappa.kappa
        ),
    )
}

fn criterion_7() -> Verdict {
    let bell_ok = (1..=12).all(|n| (bell(n) as f64) < bell_bound(n));
    let w = SpectralWindow::new(1.0, 2.0, 1.0, 0.0, 2.0).unwrap();
    let cn = constructive_n(&w, 1.0, 2.0);
    let n_rel = (cn.n as f64 / 1.5e7 - 1.0).abs();
    let bx = BoxSpec::new(2.0, 1, 2.0).unwrap();
    let prof = unit();
    let dist = WeightDistribution::UniformZeroOne;
    let stats = reduce_samples(
        100_000,
        || vec![Accumulator::default(); 2],
        |acc, i| {
            let c = sample_config(&bx, &dist, 77, i);
            acc[0].push(potential_at(&c, &prof, &bx, &[0.0]).powi(2));
            let m = c.count() as f64;
            acc[1].push(m * (m - 1.0));
        },
    );
    let ev2 = expected_v_squared(&bx, &prof, &dist);
    let v_ok = (stats[0].mean() - ev2).abs() <= 4.0 * stats[0].stderr();
    let m_ok = (stats[1].mean() - 4.0).abs() <= 4.0 * stats[1].stderr();
    verdict(
        bell_ok && n_rel <= 0.05 && v_ok && m_ok,
        format!(
            "bell < bound: {bell_ok}; N = {} ({:.2}% from 1.5e7); E V² {:.4} vs {:.4} ± {:.4}; E M(M-1) {:.4} ± {:.4} vs 4",
            cn.n,
            100.0 * n_rel,
            stats[0].mean(),
            ev2,
            stats[0].stderr(),
            stats[1].mean(),
            stats[1].stderr()
        ),
    )
}

fn criterion_8() -> Verdict {
    let bx = desk_box();
    let prof = unit();
    let dist = WeightDistribution::UniformZeroOne;
    let psi = WaveVector::plane_wave(Momentum::ZERO);
    let etas = [0.25, 0.5, 1.0, 2.0];
    let x: Vec<f64> = etas.iter().map(|e: &f64| (1.0 / e).ln()).collect();
    let mut slopes = Vec::new();
    for n in 0..=3 {
        let y: Vec<f64> = etas
            .iter()
            .map(|&eta| t_coeff_det(n, &bx, &prof, &dist, Complex64::new(1.0, eta), &psi, &psi).unwrap().value.norm().ln())
            .collect();
        let mx = x.iter().sum::<f64>() / 4.0;
        let my = y.iter().sum::<f64>() / 4.0;
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        slopes.push(sxy / sxx);
    }
    let ok = slopes.iter().enumerate().all(|(n, s)| *s <= n as f64 + 1.1);
    verdict(ok, format!("slopes n=0..3: {}", slopes.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>().join(", ")))
}

fn criterion_9() -> Verdict {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.conf");
    let dir = tempfile::tempdir().unwrap();
    let mut summaries = Vec::new();
    let mut codes = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_dosx"))
            .args(["verify", "--seed", "12345", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        codes.push(status.status.code());
        let text = std::fs::read_to_string(out.join("summary.json")).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v.as_object_mut().unwrap().remove("timestamp");
        summaries.push(serde_json::to_string(&v).unwrap());
    }
    let identical = summaries[0] == summaries[1];
    verdict(
        identical && codes.iter().all(|c| *c == Some(0)),
        format!("exit codes {codes:?}, summaries identical without timestamp: {identical}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("partition formula vs Monte Carlo", criterion_1),
        ("deterministic vs Monte Carlo coefficients", criterion_2),
        ("closed-form coefficient pins", criterion_3),
        ("time vs frequency Duhamel terms", criterion_4),
        ("resolvent expansion vs oracle", criterion_5),
        ("density of states expansion vs oracle", criterion_6),
        ("error-constant machinery", criterion_7),
        ("coefficient scaling in 1/eta", criterion_8),
        ("verify-mode reproducibility", criterion_9),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        all &= v.pass;
        println!(
            "criterion {} {}: {} [{:.1}s] {}",
            i + 1,
            name,
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
