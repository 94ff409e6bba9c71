//! Acceptance criteria 1-9, one PASS/FAIL line each. Runs without the test
//! harness so the lines are printed even when everything passes.
//!
//! `QUARTIC_CM_SKIP_SCALING=1` skips the timing criterion (9).

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Integer;

use quartic_cm::algebra::linalg::rank;
use quartic_cm::algebra::{eval_sym, primes_up_to, Assignment, Evaluated, IntegerRing, Mat};
use quartic_cm::curve::{naive_count, QuarticCurve};
use quartic_cm::engine::{
    cartier_manin_with, compute_cp, start_points, target_points, transport_uncompressed, CurveEngine, EngineOptions,
    Path, Status,
};
use quartic_cm::forest::{quadratic_values, range_cartier_manin, RangeOptions};
use quartic_cm::oracle::{cartier_manin_bruteforce, count_points_ext, lpoly_from_counts, power_coeff_bruteforce};
use quartic_cm::transition::{generator_rows, B2, B6, D6_LEN, W_DIM};

type Check = std::result::Result<String, String>;
type Criterion<'a> = (u32, &'static str, Box<dyn Fn() -> Check + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Random curves with coefficients in [-9, 9] that are nondegenerate over Q.
fn corpus(count: usize, seed: u64) -> Vec<CurveEngine> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let coeffs: Vec<i64> = (0..15).map(|_| rng.gen_range(-9..=9)).collect();
        let curve = QuarticCurve::from_i64(&coeffs).expect("15 coefficients");
        if let Ok(engine) = CurveEngine::new(&curve, 1) {
            out.push(engine);
        }
    }
    out
}

fn opts() -> EngineOptions {
    EngineOptions::default()
}

fn criterion_1(curves: &[CurveEngine]) -> Check {
    let mut checked = 0;
    for (k, e) in curves.iter().enumerate() {
        for p in primes_up_to(199).into_iter().filter(|&p| p >= 5) {
            let out = e.compute(p, &opts()).map_err(|err| format!("curve {k}, p={p}: {err}"))?;
            let Some(cm) = out.cm else { continue };
            let bf = cartier_manin_bruteforce(&e.curve().reduce(p).unwrap());
            ensure(cm.a == bf, || format!("curve {k}, p={p}: {:?} != brute force {bf:?}", cm.a))?;
            checked += 1;
        }
    }
    Ok(format!("{} curves, {checked} (curve, p) pairs equal to brute force", curves.len()))
}

fn criterion_2(curves: &[CurveEngine]) -> Check {
    let mut checked = 0;
    for (k, e) in curves.iter().enumerate() {
        for p in primes_up_to(1000) {
            let out = e.compute(p, &opts()).map_err(|err| format!("curve {k}, p={p}: {err}"))?;
            let Some(cm) = out.cm else { continue };
            let n = naive_count(&e.curve().reduce(p).unwrap());
            let want = (p + 1 + p - n % p) % p;
            ensure(cm.trace() == want, || format!("curve {k}, p={p}: trace {} vs count {n}", cm.trace()))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} traces agree with naive counts"))
}

fn criterion_3(curves: &[CurveEngine]) -> Check {
    let primes = [5u64, 7, 11, 13];
    let good: Vec<&CurveEngine> = curves
        .iter()
        .filter(|e| primes.iter().all(|&p| e.compute(p, &opts()).is_ok_and(|o| o.cm.is_some())))
        .take(5)
        .collect();
    ensure(good.len() == 5, || format!("only {} curves have good reduction at 5, 7, 11, 13", good.len()))?;
    for (k, e) in good.iter().enumerate() {
        for p in primes {
            let cm = e.compute(p, &opts()).unwrap().cm.unwrap();
            let c = e.curve().reduce(p).unwrap();
            let counts = [1, 2, 3].map(|r| count_points_ext(&c, r).unwrap());
            let l: Vec<u64> = lpoly_from_counts(p, counts).iter().map(|x| x.rem_euclid(p as i128) as u64).collect();
            ensure(l == cm.lpoly_modp(), || format!("curve {k}, p={p}: {:?} vs {l:?}", cm.lpoly_modp()))?;
        }
    }
    Ok("det(I - T A_p) = L_p(T) mod p on 5 curves for p = 5, 7, 11, 13".into())
}

/// A curve whose D has the factor 149: the x0^4 coefficient vanishes mod 149.
fn engineered() -> CurveEngine {
    let curve = QuarticCurve::from_i64(&[149, 1, -1, 0, 3, 1, -2, 0, 1, 1, 3, -1, 2, 1, 1]).unwrap();
    CurveEngine::new(&curve, 1).unwrap()
}

fn criterion_4(curves: &[CurveEngine]) -> Check {
    let special = engineered();
    let n = 1u64 << 13;
    let mut fallbacks = Vec::new();
    let mut total = 0;
    for (k, e) in curves.iter().take(4).chain(std::iter::once(&special)).enumerate() {
        let mut expected = primes_up_to(n).into_iter();
        let mut failure = None;
        range_cartier_manin(e, n, &RangeOptions::default(), |o| {
            let p = expected.next();
            if failure.is_none() {
                let want = e.compute(o.p, &opts())?;
                if p != Some(o.p) || want != o {
                    failure = Some(format!("curve {k}, p={}: forest {o:?} vs per-prime {want:?}", o.p));
                }
            }
            if o.status == Status::Fallback && o.p > 144 {
                fallbacks.push(o.p);
            }
            total += 1;
            Ok(())
        })
        .map_err(|err| format!("curve {k}: {err}"))?;
        if let Some(f) = failure {
            return Err(f);
        }
        ensure(expected.next().is_none(), || format!("curve {k}: missing primes"))?;
    }
    ensure(!special.is_good(149) && fallbacks.contains(&149), || {
        format!("149 did not take the fallback path (fallbacks above 144: {fallbacks:?})")
    })?;
    Ok(format!("{total} records match the per-prime engine; fallback primes in (144, 2^13): {fallbacks:?}"))
}

fn criterion_5(curves: &[CurveEngine]) -> Check {
    let mut checked = 0;
    for (k, e) in curves.iter().take(5).enumerate() {
        for p in primes_up_to(1 << 12).into_iter().filter(|&p| p > 2 && e.is_good(p)) {
            let c = e.curve().reduce(p).unwrap();
            let data = e.prime_data(p).unwrap();
            let a = cartier_manin_with(&c, &data, Path::Compressed).map_err(|x| x.to_string())?;
            let b = cartier_manin_with(&c, &data, Path::Uncompressed).map_err(|x| x.to_string())?;
            ensure(a == b, || format!("curve {k}, p={p}: {:?} vs {:?}", a.a, b.a))?;
            checked += 1;
        }
        for p in [11u64, 101] {
            if !e.is_good(p) {
                continue;
            }
            // U_p = -lambda^-1 psi C_p pi, applied to the image of psi at the start
            let data = e.prime_data(p).unwrap();
            let cp = compute_cp(&data);
            let lhs = transport_uncompressed(&data, &data.psi_w1);
            let rhs = data.psi_v1.mul(&cp);
            ensure(lhs == rhs, || format!("curve {k}: U_p psi differs from psi C_p at p={p}"))?;
            let f = data.field;
            let lam_inv = f.inv(data.lambda).expect("lambda is a unit");
            let via_pi = data.psi_v1.mul(&cp).mul(&data.pi).mul(&data.psi_w1).scale(f.negm(lam_inv));
            ensure(lhs == via_pi, || format!("curve {k}: -lambda^-1 psi C_p pi psi differs at p={p}"))?;
        }
    }
    Ok(format!("{checked} (curve, p) pairs agree; U_p relation holds at p = 11, 101"))
}

fn criterion_6(curves: &[CurveEngine]) -> Check {
    let z = IntegerRing;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (k, e) in curves.iter().enumerate() {
        let fam = e.family();
        let gens = Mat::from_rows(generator_rows(&z, &fam.form));
        let b6 = D6_LEN - rank(&z, &gens);
        // nothing of degree 2 lies in the Jacobian ideal
        let b2 = 6;
        ensure(b2 == B2 && b6 == B6 && fam.basis.b6.len() == B6, || format!("curve {k}: b6 = {b6}"))?;
        ensure(fam.pi.rows() == W_DIM && W_DIM == 16, || format!("curve {k}: dim W = {}", fam.pi.rows()))?;
        let dm = fam.t.max_degree(&z).unwrap_or(0);
        let dt = fam.tau.max_degree(&z).unwrap_or(0);
        ensure(dm <= 2 && dt <= 1, || format!("curve {k}: deg M = {dm}, deg tau = {dt}"))?;
        for _ in 0..20 {
            let m: i64 = rng.gen_range(-20..=60);
            let v0: i64 = rng.gen_range(-40..=80);
            let v1: i64 = rng.gen_range(-40..=80);
            let v = [v0, v1, 4 * m + 6 - v0 - v1];
            let Evaluated::Int(psi) = eval_sym(&fam.psi, &Assignment::new(v, m), None).map_err(|x| x.to_string())?
            else {
                return Err("integer evaluation expected".into());
            };
            let prod = fam.pi.mul(&z, &psi);
            let scale = Integer::from(m + 1) * fam.lambda();
            let ok = (0..W_DIM).all(|i| (0..W_DIM).all(|j| prod[(i, j)] == if i == j { scale.clone() } else { Integer::new() }));
            ensure(ok, || format!("curve {k}: pi psi != (m+1) lambda I at v={v:?}, m={m}"))?;
        }
    }
    Ok(format!("b2 = 6, b6 = 10, dim W = 16, degrees and pi psi = (m+1) lambda I on {} curves", curves.len()))
}

fn criterion_7(curves: &[CurveEngine]) -> Check {
    let mut checked = 0;
    for (k, e) in curves.iter().enumerate() {
        for p in [7u64, 13, 101] {
            if !e.is_good(p) {
                continue;
            }
            let data = e.prime_data(p).unwrap();
            let c = e.curve().reduce(p).unwrap();
            let f = data.field;
            let cp = compute_cp(&data);
            let gw = power_coeff_bruteforce(&c, p - 2, start_points(p)[0], 6);
            let gv = power_coeff_bruteforce(&c, p - 2, target_points(p)[0], 6);
            let lhs = cp.mul_vec(&data.pi.mul_vec(&gw));
            let rhs: Vec<u64> = data.pi.mul_vec(&gv).iter().map(|&x| f.negm(x)).collect();
            ensure(lhs == rhs, || format!("curve {k}, p={p}: C_p pi g_w1 != -pi g_v1"))?;
            ensure(cp.inverse().is_some(), || format!("curve {k}, p={p}: C_p is singular"))?;
            checked += 1;
        }
    }
    ensure(checked >= 3, || "no curve is good at 7, 13, 101".into())?;
    Ok(format!("{checked} (curve, p) pairs satisfy the start/target identity with C_p invertible"))
}

fn criterion_8(curves: &[CurveEngine]) -> Check {
    for (k, e) in curves.iter().take(5).enumerate() {
        let lam = e.lambda();
        let ms = quadratic_values(&e.specialized().m, -2, -1, 101);
        for i in 0..100 {
            let prod = ms[i].mul_int(&ms[i + 1]);
            let ok = prod.data().iter().all(|x| x.is_divisible(lam));
            ensure(ok, || format!("curve {k}: M_{i} M_{} not divisible by lambda", i + 1))?;
        }
    }
    Ok("M_i M_(i+1) divisible by lambda for 100 consecutive i on 5 curves".into())
}

fn time_range(n: u64) -> std::result::Result<Duration, String> {
    let curve = concat!(env!("CARGO_MANIFEST_DIR"), "/../../curves/sample.json");
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_quartic-cm"))
        .args(["range", "--curve", curve, "-N", &n.to_string(), "--out", "/dev/null"])
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("range -N {n} exited with {status}"))?;
    Ok(start.elapsed())
}

fn criterion_9() -> Check {
    let times: Vec<Duration> = (15..=18).map(|e| time_range(1 << e)).collect::<std::result::Result<_, _>>()?;
    let ratios: Vec<f64> = times.windows(2).map(|w| w[1].as_secs_f64() / w[0].as_secs_f64()).collect();
    let detail = format!(
        "times {:?} s, ratios {:?}",
        times.iter().map(|t| (t.as_secs_f64() * 10.0).round() / 10.0).collect::<Vec<_>>(),
        ratios.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>()
    );
    ensure(ratios.iter().all(|&r| r <= 2.8) && times[2] < Duration::from_secs(1800), || detail.clone())?;
    Ok(detail)
}

fn report(id: u32, title: &str, start: Instant, result: &Check) {
    let secs = start.elapsed().as_secs_f64();
    let line = match result {
        Ok(msg) => format!("PASS criterion {id} ({title}, {secs:.1}s): {msg}"),
        Err(msg) => format!("FAIL criterion {id} ({title}, {secs:.1}s): {msg}"),
    };
    // straight to the handle so the line shows without --nocapture
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn main() {
    // `cargo test -- --list` and filters: nothing to enumerate here
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let curves = corpus(20, 2024);
    let criteria: Vec<Criterion> = vec![
        (1, "per-prime vs brute force, 5 <= p <= 199", Box::new(|| criterion_1(&curves))),
        (2, "trace vs naive count, p <= 1000", Box::new(|| criterion_2(&curves))),
        (3, "L-polynomial congruence", Box::new(|| criterion_3(&curves))),
        (4, "forest vs per-prime at N = 2^13", Box::new(|| criterion_4(&curves))),
        (5, "compressed vs uncompressed, p <= 2^12", Box::new(|| criterion_5(&curves))),
        (6, "structural constants", Box::new(|| criterion_6(&curves))),
        (7, "C_p start/target identity", Box::new(|| criterion_7(&curves))),
        (8, "lambda divides consecutive products", Box::new(|| criterion_8(&curves))),
    ];
    let mut failed = Vec::new();
    for (id, title, run) in &criteria {
        let start = Instant::now();
        let r = run();
        report(*id, title, start, &r);
        if r.is_err() {
            failed.push(*id);
        }
    }
    if std::env::var("QUARTIC_CM_SKIP_SCALING").is_ok_and(|v| v == "1") {
        let _ = writeln!(std::io::stderr(), "SKIP criterion 9 (soft scaling): QUARTIC_CM_SKIP_SCALING=1");
    } else {
        let start = Instant::now();
        // soft: reported, never fails the run
        report(9, "soft scaling of range, N = 2^15 .. 2^18", start, &criterion_9());
    }
    if !failed.is_empty() {
        let _ = writeln!(std::io::stderr(), "failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
