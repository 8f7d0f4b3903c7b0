//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero if any
//! criterion fails. The extended sevenfold campaign with lambda = a_1 + a_2 + a_3 runs
//! only with `--include-ignored` or `--ignored`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trisub::cyclotomic::{
    chebyshev_length, classify, length_basis, length_matrix, minimal_polynomial,
    substitution_matrix, Field, InflationFactor,
};
use trisub::geometry::{special_set, Lattice, LatticePoint, RigidMotion, FLOAT_MARGIN};
use trisub::matrix::QMatrix;
use trisub::parallel::{run_campaign, CampaignOptions};
use trisub::postprocess::{
    apply_and_verify, assemble_rules, canonicalize, extract_breakdowns, postprocess,
    prototile_seed, verify_result, Postprocessed,
};
use trisub::problem::Problem;
use trisub::search::{solve_all_sequential, RawResult, SearchOptions};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn int_poly(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&c| BigInt::from(c)).collect()
}

fn newton(coeffs: &[BigInt], mut x: f64) -> f64 {
    let c: Vec<f64> = coeffs.iter().map(|v| v.to_f64().unwrap()).collect();
    for _ in 0..100 {
        let f = c.iter().rev().fold(0.0, |a, &k| a * x + k);
        let df = c
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |a, (i, &k)| a * x + i as f64 * k);
        x -= f / df;
    }
    x
}

fn c1_minimal_polynomials() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (n, want) in [(5u32, vec![-1i64, -1, 1]), (7, vec![1, -2, -1, 1])] {
        let q = minimal_polynomial(n).map_err(|e| e.to_string())?;
        let root = newton(&q.coeffs, 2.0);
        let err = (root - 2.0 * (PI / f64::from(n)).cos()).abs();
        ok &= q.coeffs == int_poly(&want) && err < 1e-12;
        notes.push(format!("q_{n} = {q}, |root - 2cos(pi/{n})| = {err:.1e}"));
    }
    check(ok, notes.join("; "))
}

fn sevenfold(coeffs: &[u32]) -> (Field, InflationFactor) {
    let f = Field::new(7).unwrap();
    let l = InflationFactor::new(&f, coeffs).unwrap();
    (f, l)
}

fn c2_substitution_matrix() -> Outcome {
    let (f, l) = sevenfold(&[1, 1, 0]);
    let m = substitution_matrix(&f, &special_set(7), &l).map_err(|e| e.to_string())?;
    check(
        m.0 == vec![vec![3, 3, 5], vec![1, 4, 3], vec![2, 1, 3]],
        format!("M = {m}"),
    )
}

/// `sum_k c_k a_k(A)` from the Chebyshev recursion evaluated on the companion matrix.
fn poly_at(a: &QMatrix, poly: &[BigInt]) -> QMatrix {
    let mut out = QMatrix::zeros(a.rows(), a.cols());
    let mut pow = QMatrix::identity(a.rows());
    for c in poly {
        out = out.add(&pow.scale(&BigRational::from_integer(c.clone())));
        pow = pow.mul(a);
    }
    out
}

fn c3_length_matrix() -> Outcome {
    let (f, l) = sevenfold(&[1, 1, 0]);
    let x = length_matrix(&f, &l).map_err(|e| e.to_string())?;
    let want = QMatrix::from_int_rows(&[vec![1, 1, 0], vec![1, 1, 1], vec![0, 1, 2]]);
    let a = minimal_polynomial(7).unwrap().companion;
    let mut p = QMatrix::zeros(3, 3);
    for (k, &c) in l.coeffs().iter().enumerate() {
        p = p.add(
            &poly_at(&a, &chebyshev_length(k + 1)).scale(&BigRational::from_integer(c.into())),
        );
    }
    // Column k of L_7 is a_k(A) applied to the coordinates of 1.
    let mut e0 = vec![BigRational::zero(); 3];
    e0[0] = BigRational::from_integer(1.into());
    let cols: Vec<Vec<BigRational>> = (1..=3)
        .map(|k| poly_at(&a, &chebyshev_length(k)).mul_vec(&e0))
        .collect();
    let l7 = QMatrix::from_columns(&cols);
    let relation = l7.mul(&x) == p.mul(&l7);
    let same_basis = l7 == length_basis(&f).unwrap();
    // Float route: lambda a_j = sum_i X_ij a_i.
    let s = |k: f64| (k * PI / 7.0).sin() / (PI / 7.0).sin();
    let lam = s(1.0) + s(2.0);
    let float_ok = (0..3).all(|j| {
        let lhs = lam * s((j + 1) as f64);
        let rhs: f64 = (0..3)
            .map(|i| x.get(i, j).to_f64().unwrap() * s((i + 1) as f64))
            .sum();
        (lhs - rhs).abs() < 1e-12
    });
    check(
        x == want && relation && same_basis && float_ok,
        format!(
            "X = {}, L7 X = p(A) L7: {relation}, float check: {float_ok}",
            x.to_string().trim().replace('\n', " ")
        ),
    )
}

fn c4_classification() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (coeffs, pv) in [([1, 1, 0], false), ([0, 1, 1], true), ([1, 1, 1], true)] {
        let (f, l) = sevenfold(&coeffs);
        let c = classify(&f, &l);
        // Independent float route: conjugates from 2cos((2j-1)pi/7).
        let conj: Vec<f64> = (1..=3)
            .map(|j| {
                let t = (2 * j - 1) as f64 * PI / 7.0;
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| f64::from(c) * ((k + 1) as f64 * t).sin() / t.sin())
                    .sum()
            })
            .collect();
        let margin = conj[1..]
            .iter()
            .map(|v| (v.abs() - 1.0).abs())
            .fold(f64::INFINITY, f64::min);
        let oracle_pv = conj[1..].iter().all(|v| v.abs() < 1.0);
        let norm: f64 = conj.iter().product();
        ok &= c.is_pv == pv
            && oracle_pv == pv
            && c.is_unit
            && (norm.abs() - 1.0).abs() < 1e-9
            && margin > 1e-6;
        notes.push(format!(
            "{}: {}PV, unit (norm {})",
            l.label(),
            if c.is_pv { "" } else { "not " },
            c.norm
        ));
    }
    check(ok, notes.join("; "))
}

fn campaign(n: u32, lambda: &[u32]) -> (Problem, Vec<RawResult>, Postprocessed) {
    let p = Problem::new(n, &special_set(n), lambda).unwrap();
    let opts = CampaignOptions {
        workers: 4,
        ..CampaignOptions::default()
    };
    let report = run_campaign(&p, &opts).unwrap();
    assert!(!report.truncated && report.failure.is_none());
    let post = postprocess(&p, &report.results).unwrap();
    (p, report.results, post)
}

fn c5_fivefold_family() -> Outcome {
    let (_, raw, post) = campaign(5, &[1, 1]);
    let mut sizes: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for f in &post.families {
        *sizes.entry(f.sizes()).or_default() += 1;
    }
    let found = post.families.iter().any(|f| f.sizes() == [2, 7]);
    let listed: Vec<String> = sizes.iter().map(|(s, c)| format!("{s:?} x{c}")).collect();
    check(
        found,
        format!(
            "{} raw results, {} families; family sizes: {}",
            raw.len(),
            post.families.len(),
            listed.join(", ")
        ),
    )
}

fn c6_sevenfold_classes() -> Outcome {
    let (p, _, post) = campaign(7, &[1, 1, 0]);
    let m = [[3u64, 3, 5], [1, 4, 3], [2, 1, 3]];
    let mut ok = post.orientation_classes.len() == 2;
    let mut notes = vec![format!(
        "{} orientation classes",
        post.orientation_classes.len()
    )];
    for (ci, class) in post.orientation_classes.iter().enumerate() {
        let mut complete = 0;
        for &fi in &class.families {
            for rule in assemble_rules(&p, &post, &post.families[fi]) {
                let census_ok = rule.results.iter().all(|r| {
                    let mut c = [0u64; 3];
                    for t in &r.tiles {
                        c[t.proto as usize] += 1;
                    }
                    (0..3).all(|i| c[i] == m[i][r.t0 as usize])
                });
                let valid = rule
                    .results
                    .iter()
                    .all(|r| verify_result(&p, r, Some(&rule.orientation)).unwrap().ok());
                ok &= census_ok && valid;
                complete += 1;
            }
        }
        ok &= complete > 0;
        notes.push(format!(
            "class {ci} ({}): {} families, {complete} complete rule sets",
            if class.standard {
                "standard"
            } else {
                "non-standard"
            },
            class.families.len()
        ));
    }
    check(ok, notes.join("; "))
}

fn c7_extended() -> Outcome {
    let (_, raw, post) = campaign(7, &[1, 1, 1]);
    let target = post.families.iter().any(|f| f.sizes() == [3, 5, 36]);
    check(
        post.families.len() == 90 && target,
        format!(
            "{} raw results, {} combinations, {} up to relabeling",
            raw.len(),
            post.raw_combinations,
            post.families.len()
        ),
    )
}

fn c8_properties() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (n, lambda) in [
        (5u32, vec![0u32, 1]),
        (5, vec![1, 1]),
        (7, vec![0, 1, 0]),
        (7, vec![1, 1, 0]),
    ] {
        let (p, raw, post) = campaign(n, &lambda);
        let results_ok = raw.iter().all(|r| verify_result(&p, r, None).unwrap().ok());
        let mut rules = 0;
        let mut levels_ok = true;
        let mut breakdowns_ok = true;
        for f in &post.families {
            for rule in assemble_rules(&p, &post, f) {
                rules += 1;
                for (q, r) in rule.results.iter().enumerate() {
                    let b = extract_breakdowns(&p, r, &rule.orientation).unwrap();
                    breakdowns_ok &= (0..3).all(|j| b[j] == rule.breakdowns[&p.edge_classes[q][j]]);
                    let (_, rep) = apply_and_verify(&p, &rule, &prototile_seed(q), 3).unwrap();
                    levels_ok &= rep.iter().all(|l| l.ok());
                }
            }
        }
        ok &= results_ok && levels_ok && breakdowns_ok;
        notes.push(format!(
            "n={n} lambda={lambda:?}: {} results ok={results_ok}, {rules} rule sets, sigma^k k<=3 ok={levels_ok}, breakdowns ok={breakdowns_ok}",
            raw.len()
        ));
    }
    check(ok, notes.join("; "))
}

fn canonical_multiset(p: &Problem, raw: &[RawResult]) -> Vec<RawResult> {
    let mut v: Vec<RawResult> = raw.iter().map(|r| canonicalize(p, r)).collect();
    v.sort();
    v
}

fn c9_parallel_determinism() -> Outcome {
    let p = Problem::new(5, &special_set(5), &[1, 1]).unwrap();
    let base = canonical_multiset(
        &p,
        &solve_all_sequential(&p, 0, &SearchOptions::default()).unwrap(),
    );
    let mut runs = 0;
    for workers in [1usize, 2, 4, 8] {
        for threshold in [1, workers, 4 * workers] {
            let opts = CampaignOptions {
                workers,
                kill_threshold: Some(threshold),
                ..CampaignOptions::default()
            };
            let r = run_campaign(&p, &opts).unwrap();
            if r.truncated || canonical_multiset(&p, &r.results) != base {
                return Err(format!("workers={workers} threshold={threshold} differs"));
            }
            runs += 1;
        }
    }
    Ok(format!(
        "{runs} runs agree on {} canonical results",
        base.len()
    ))
}

fn c10_kernel_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut compared = 0;
    let mut checks = 0;
    for n in [5u32, 7, 11, 13] {
        let field = std::sync::Arc::new(Field::new(n).unwrap());
        let lat = Lattice::new(field.clone()).unwrap();
        let two_n = 2 * n;
        let rand_point = |rng: &mut ChaCha8Rng| {
            let mut p = LatticePoint::ZERO;
            for _ in 0..rng.gen_range(1..5) {
                let d = lat.direction(rng.gen_range(0..i64::from(two_n)));
                p = p.add(&d.scale(rng.gen_range(-3..=3)));
            }
            p
        };
        let coeffs: Vec<u32> = (0..field.degree()).map(|i| u32::from(i < 2)).collect();
        let lambda = InflationFactor::new(&field, &coeffs).unwrap();
        let lv = field.to_f64(lambda.value());
        let scaling = lat.scaling(&lambda);
        for _ in 0..2500 {
            let (a, b, c) = (
                rand_point(&mut rng),
                rand_point(&mut rng),
                rand_point(&mut rng),
            );
            let (ea, eb, ec) = (lat.embed(&a), lat.embed(&b), lat.embed(&c));
            let cross = (eb.0 - ea.0) * (ec.1 - ea.1) - (eb.1 - ea.1) * (ec.0 - ea.0);
            if cross.abs() > FLOAT_MARGIN {
                compared += 1;
                if lat.orientation_sign(&a, &b, &c) != cross.partial_cmp(&0.0).unwrap() {
                    return Err(format!("orientation disagrees for n={n}"));
                }
            }
            let g = RigidMotion {
                rot: rng.gen_range(0..two_n),
                flip: rng.gen(),
                shift: rand_point(&mut rng),
            };
            let img = lat.embed(&lat.apply_motion(&g, &a));
            let t = f64::from(g.rot) * PI / f64::from(n);
            let y = if g.flip { -ea.1 } else { ea.1 };
            let sh = lat.embed(&g.shift);
            let want = (
                t.cos() * ea.0 - t.sin() * y + sh.0,
                t.sin() * ea.0 + t.cos() * y + sh.1,
            );
            let sc = lat.embed(&scaling.apply(&a));
            if (img.0 - want.0).abs() > 1e-9
                || (img.1 - want.1).abs() > 1e-9
                || (sc.0 - lv * ea.0).abs() > 1e-9
                || (sc.1 - lv * ea.1).abs() > 1e-9
            {
                return Err(format!("embedding not equivariant for n={n}"));
            }
            checks += 1;
        }
    }
    check(
        compared > 5000,
        format!("{checks} random checks, {compared} orientation comparisons above margin"),
    )
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let extended = args
        .iter()
        .any(|a| a == "--include-ignored" || a == "--ignored");
    let criteria: Vec<(&str, fn() -> Outcome, bool)> = vec![
        ("1 minimal polynomials", c1_minimal_polynomials, false),
        ("2 substitution matrix", c2_substitution_matrix, false),
        ("3 length matrix", c3_length_matrix, false),
        ("4 PV and unit classification", c4_classification, false),
        ("5 fivefold random family (2, 7)", c5_fivefold_family, false),
        (
            "6 sevenfold lambda_1 orientation classes",
            c6_sevenfold_classes,
            false,
        ),
        ("7 sevenfold lambda_3 combinations", c7_extended, true),
        ("8 property suite", c8_properties, false),
        ("9 parallel determinism", c9_parallel_determinism, false),
        ("10 exact kernel oracles", c10_kernel_oracles, false),
    ];
    let mut failed = 0;
    for (name, f, slow) in criteria {
        if slow && !extended {
            println!("SKIP criterion {name}: extended tier, run with --include-ignored");
            continue;
        }
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(d) => println!("PASS criterion {name} ({secs:.1}s): {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1}s): {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
