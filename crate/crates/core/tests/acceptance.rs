//! One line per acceptance criterion; exits nonzero if any fails.
//!
//! All checks are exact identities (tolerance zero). Seeds and time
//! budgets are fixed below.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splitjet::field::Field;
use splitjet::ift::{ift_solve, ImplicitSystem};
use splitjet::jacobian::{milnor_number, DEFAULT_MAX_DEGREE};
use splitjet::jet::{default_var_names, Jet};
use splitjet::quadform::{arf_normal_form, arf_reduce_solvable, canonical_form_char2, quad_extract, NormalKind};
use splitjet::sample;
use splitjet::split::{split, verify_split};
use splitjet::text::parse_poly;
use splitjet::transport::{transport, TransportProblem};

const SEED: u64 = 0x5eed_0001;
const SPLIT_BUDGET: Duration = Duration::from_secs(30);
const ARF_BUDGET: Duration = Duration::from_secs(10);

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn vars(s: &str) -> Vec<String> {
    s.split(',').map(str::to_string).collect()
}

fn poly(field: Field, v: &str, text: &str, prec: u32) -> Jet {
    parse_poly(text, &vars(v), field, prec).unwrap()
}

fn families() -> Vec<Field> {
    vec![Field::Rational, Field::prime(7).unwrap(), Field::prime(2).unwrap(), Field::binary(2).unwrap()]
}

/// Random element of `m^2` with a dense-ish quadratic part.
fn random_m2<R: Rng>(field: Field, n: usize, prec: u32, rng: &mut R) -> Jet {
    let quad = sample::jet(field, n, 2, 2, 0.6, rng).with_precision(prec);
    if prec < 3 {
        return quad;
    }
    let higher_count: usize = (3..=prec).map(|d| splitjet::jet::Monomial::all_of_degree(n, d).len()).sum();
    let density = (6.0 / higher_count as f64).min(0.5);
    &quad + &sample::jet(field, n, prec, 3, density, rng)
}

fn splitting_soundness() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut count = 0;
    for field in families() {
        for _ in 0..200 {
            let n = rng.gen_range(1..=4);
            let prec = rng.gen_range(2..=8);
            let f = random_m2(field, n, prec, &mut rng);
            let r = split(&f, prec).map_err(|e| format!("{field}: split failed on {f}: {e}"))?;
            let d = verify_split(&f, &r).map_err(|e| e.to_string())?;
            ensure(d.is_zero(), || format!("{field}: nonzero defect {d} for {f}"))?;
            count += 1;
        }
    }
    let t = start.elapsed();
    ensure(t < SPLIT_BUDGET, || format!("took {t:?}, budget {SPLIT_BUDGET:?}"))?;
    Ok(format!("{count} instances over q, fp:7, fp:2, f2k:2 in {:.1?}", t))
}

fn worked_example_odd() -> Result<String, String> {
    let q = Field::Rational;
    let f = poly(q, "x,y", "x^2 + x*y^2", 4);
    let r = split(&f, 4).map_err(|e| e.to_string())?;
    let v = vars("x,y");
    ensure(r.residual == poly(q, "y", "-1/4*y^4", 4), || format!("residual {}", r.residual.to_text(&v[1..])))?;
    ensure(r.change.component(0) == &poly(q, "x,y", "x - 1/2*y^2", 4), || format!("change {}", r.change.component(0)))?;
    ensure(r.change.component(1) == &poly(q, "x,y", "y", 4), || "y component moved".into())?;
    Ok("residual -1/4*y^4, x -> x - 1/2*y^2".into())
}

fn worked_example_char2() -> Result<String, String> {
    let f2 = Field::prime(2).unwrap();
    let f = poly(f2, "x1,x2,x3", "x1*x2 + x1*x3^2", 4);
    let r = split(&f, 4).map_err(|e| e.to_string())?;
    ensure(r.rank == 2, || format!("rank {}", r.rank))?;
    ensure(r.residual.is_zero(), || format!("residual {}", r.residual))?;
    ensure(verify_split(&f, &r).unwrap().is_zero(), || "substitution identity fails".into())?;
    Ok("rank 2, residual 0".into())
}

fn rank_invariance() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut count = 0;
    for field in families() {
        for _ in 0..100 {
            let n = rng.gen_range(1..=4);
            let f = random_m2(field, n, 4, &mut rng);
            let phi = sample::automorphism(field, n, 4, 0.3, &mut rng);
            let before = f.hessian_rank().unwrap();
            let after = f.compose(&phi).unwrap().hessian_rank().unwrap();
            ensure(before == after, || format!("{field}: rank {before} became {after}"))?;
            ensure(!field.is_char2() || before % 2 == 0, || format!("{field}: odd rank {before}"))?;
            count += 1;
        }
    }
    Ok(format!("{count} automorphisms, char-2 ranks even"))
}

fn arf_oracle() -> Result<String, String> {
    let start = Instant::now();
    let group = common::gl_gf2(3);
    ensure(group.len() == 168, || format!("|GL(3,2)| = {}", group.len()))?;
    let forms = common::all_forms_gf2(3);
    let brute = common::orbit_labels(&forms, &group);
    let mut canon = Vec::new();
    let mut toolkit = Vec::new();
    for q in &forms {
        let nf = canonical_form_char2(q).map_err(|e| e.to_string())?;
        ensure(nf.verify(q), || format!("transition fails for {}", q.to_jet(2)))?;
        let key = nf.form();
        let id = canon.iter().position(|k| *k == key).unwrap_or_else(|| {
            canon.push(key);
            canon.len() - 1
        });
        toolkit.push(id);
    }
    ensure(common::same_partition(&brute, &toolkit), || "partitions differ".into())?;
    let t = start.elapsed();
    ensure(t < ARF_BUDGET, || format!("took {t:?}"))?;
    Ok(format!("{} forms, {} classes, partitions agree in {:.1?}", forms.len(), canon.len(), t))
}

fn solvable_reduction() -> Result<String, String> {
    let gf4 = Field::binary(2).unwrap();
    let f = poly(gf4, "x1,x2", "x1^2 + x1*x2 + x2^2", 2);
    let q = quad_extract(&f).unwrap();
    let nf = arf_normal_form(&q).map_err(|e| e.to_string())?;
    let red = arf_reduce_solvable(&nf).map_err(|e| e.to_string())?.ok_or("absent over f2k:2")?;
    ensure(matches!(red.kind(), NormalKind::Char2Solvable { half_rank: 1, square_term: false }), || {
        format!("got {}", red.variant_name())
    })?;
    ensure(red.form().to_jet(2) == poly(gf4, "x1,x2", "x1*x2", 2), || "form is not x1*x2".into())?;
    ensure(red.verify(&q), || "transition fails".into())?;
    let f2 = Field::prime(2).unwrap();
    let q2 = quad_extract(&poly(f2, "x1,x2", "x1^2 + x1*x2 + x2^2", 2)).unwrap();
    let absent = arf_reduce_solvable(&arf_normal_form(&q2).unwrap()).unwrap().is_none();
    ensure(absent, || "reduction reported over fp:2".into())?;
    Ok("f2k:2 -> x1*x2, fp:2 absent".into())
}

fn ift_checks() -> Result<String, String> {
    let q = Field::Rational;
    let sys = ImplicitSystem::new(1, vec![poly(q, "x,y", "y - x - y^2", 5)]).unwrap();
    let y = ift_solve(&sys, 5).unwrap();
    let coeffs: Vec<Jet> = (1..=5u32).map(|d| Jet::constant(y[0].coefficient(&[d]), 1, 5)).collect();
    let want: Vec<Jet> = [1, 1, 2, 5, 14].iter().map(|&c| Jet::constant(q.from_i64(c), 1, 5)).collect();
    ensure(coeffs == want, || format!("got {}", y[0]))?;
    ensure(sys.residual(&y).unwrap().iter().all(Jet::is_zero), || "nonzero residual".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let fields = [Field::Rational, Field::prime(7).unwrap(), Field::prime(2).unwrap(), Field::binary(3).unwrap()];
    for k in 0..100 {
        let field = fields[k % fields.len()];
        let nx = rng.gen_range(1..=2);
        let ny = rng.gen_range(1..=2);
        let prec = rng.gen_range(2..=6);
        let nv = nx + ny;
        let j0 = sample::invertible_matrix(field, ny, &mut rng);
        let eqs: Vec<Jet> = (0..ny)
            .map(|i| {
                let mut e = sample::jet(field, nv, 1, 1, 0.5, &mut rng).eliminate(&(nx..nv).collect::<Vec<_>>());
                e = e.with_precision(prec);
                for kk in 0..ny {
                    e = &e + &Jet::variable(field, nv, nx + kk, prec).scale(j0.get(i, kk));
                }
                &e + &sample::jet(field, nv, prec, 2, 0.25, &mut rng)
            })
            .collect();
        let sys = ImplicitSystem::new(nx, eqs.clone()).map_err(|e| e.to_string())?;
        let y = ift_solve(&sys, prec).unwrap();
        let oracle = common::newton_ift(&eqs, nx, prec);
        ensure(y == oracle, || format!("{field}: solver and Newton oracle differ"))?;
        ensure(sys.residual(&y).unwrap().iter().all(Jet::is_zero), || "nonzero residual".into())?;
    }
    Ok("Catalan 1,1,2,5,14; 100 systems match the Newton oracle".into())
}

fn transport_round_trips() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut summary = Vec::new();
    for field in families() {
        let mut fallback = 0;
        for _ in 0..100 {
            let n = rng.gen_range(2..=4);
            let prec = rng.gen_range(3..=5);
            let f = random_m2(field, n, prec, &mut rng);
            let r0 = split(&f, prec).map_err(|e| e.to_string())?;
            let f0 = r0.split_form();
            let q0 = quad_extract(&f0).unwrap();
            let lin = sample::isometry(&q0, 3, &mut rng);
            let rho = sample::change_with_linear(&lin, prec, 0.3, &mut rng);
            let r1 = split(&f0.compose(&rho).unwrap(), prec).map_err(|e| e.to_string())?;
            ensure(r1.quad.head_form() == r0.quad.head_form(), || format!("{field}: head forms differ"))?;
            let phi = rho.then(&r1.change).unwrap();
            let problem = TransportProblem::new(r0.quad.clone(), r0.residual.clone(), r1.residual.clone(), phi, prec)
                .map_err(|e| format!("{field}: {e}"))?;
            let t = transport(&problem).map_err(|e| format!("{field}: transport on {f0}: {e}"))?;
            ensure(r0.residual.compose(&t.phi_prime).unwrap() == r1.residual, || format!("{field}: g0(phi') != g1"))?;
            ensure(t.phi_prime.is_automorphism(), || "phi' not invertible".into())?;
            if t.linearization.name() != "direct" {
                fallback += 1;
            }
        }
        summary.push(format!("{field}: 100 ({fallback} via isometry search)"));
    }
    Ok(summary.join(", "))
}

fn milnor_checks() -> Result<String, String> {
    let q = Field::Rational;
    let r = milnor_number(&poly(q, "x,y", "x^2 + y^2", 30), DEFAULT_MAX_DEGREE);
    ensure(r.mu == Some(1) && r.determinacy_bound == Some(2), || format!("x^2+y^2: {r:?}"))?;
    let det = splitjet::jacobian::determinacy_bound(&poly(q, "x,y", "x^2 + y^2", 30), DEFAULT_MAX_DEGREE);
    ensure(det == Some(2), || format!("determinacy bound {det:?}"))?;
    for k in 1..=6u64 {
        let mu = milnor_number(&poly(q, "x", &format!("x^{}", k + 1), 30), DEFAULT_MAX_DEGREE).mu;
        ensure(mu == Some(k), || format!("mu(x^{}) = {mu:?}", k + 1))?;
    }
    let mu = milnor_number(&poly(q, "x,y", "x^3 + y^3", 30), DEFAULT_MAX_DEGREE).mu;
    ensure(mu == Some(4), || format!("mu(x^3+y^3) = {mu:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let f = poly(q, "x,y", "x^2 + y^2", 30);
    for _ in 0..20 {
        let p = sample::jet(q, 2, 6, 3, 0.4, &mut rng).with_precision(30);
        let mu = milnor_number(&(&f + &p), DEFAULT_MAX_DEGREE).mu;
        ensure(mu == Some(1), || format!("mu(f + {p}) = {mu:?}"))?;
    }
    Ok("mu 1 / bound 2, mu(x^(k+1)) = k, mu(x^3+y^3) = 4, 20 perturbations in m^3".into())
}

fn run_cli(args: &[&str]) -> (Vec<u8>, Option<i32>) {
    let out = Command::new(env!("CARGO_BIN_EXE_splitjet")).args(args).output().expect("run splitjet");
    (out.stdout, out.status.code())
}

fn parser_round_trip() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 10);
    let fields = [
        Field::Rational,
        Field::prime(7).unwrap(),
        Field::prime(2).unwrap(),
        Field::binary(2).unwrap(),
        Field::binary(4).unwrap(),
    ];
    for k in 0..500 {
        let field = fields[k % fields.len()];
        let n = rng.gen_range(1..=4);
        let prec = rng.gen_range(1..=6);
        let j = sample::jet(field, n, prec, 0, 0.3, &mut rng);
        let names = default_var_names(n);
        let back = parse_poly(&j.to_annotated_text(&names), &names, field, prec + 3).map_err(|e| e.to_string())?;
        ensure(back == j, || format!("{field}: {} reparsed as {}", j.to_annotated_text(&names), back))?;
        let plain = parse_poly(&j.to_text(&names), &names, field, prec).map_err(|e| e.to_string())?;
        ensure(plain == j, || format!("{field}: {} reparsed differently", j.to_text(&names)))?;
    }
    let runs: [&[&str]; 6] = [
        &["split", "--field", "q", "--vars", "x,y", "--precision", "4", "--format", "json", "x^2 + x*y^2"],
        &["split", "--field", "fp:2", "--vars", "x1,x2,x3", "--precision", "4", "x1*x2 + x1*x3^2"],
        &["quadform", "--field", "fp:2", "--vars", "x1,x2,x3", "--format", "json", "x1^2+x1*x2+x2^2+x3^2"],
        &["milnor", "--field", "q", "--vars", "x,y", "--format", "json", "x^2+y^2"],
        &["ift", "--vars", "x,y", "--split-vars", "y", "--precision", "5", "y - x - y^2"],
        &["transport", "--vars", "x,y", "--precision", "6", "x^2 + y^4", "x^2 + (y + y^2)^4", "x; y + y^2"],
    ];
    for args in runs {
        let a = run_cli(args);
        let b = run_cli(args);
        ensure(a == b, || format!("output differs across runs of {args:?}"))?;
        ensure(a.1 == Some(0), || format!("{args:?} exited with {:?}", a.1))?;
    }
    Ok("500 jets round-trip; 6 CLI invocations byte-identical".into())
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Check); 10] = [
        (1, "splitting soundness", splitting_soundness),
        (2, "worked example, char != 2", worked_example_odd),
        (3, "worked example, char 2", worked_example_char2),
        (4, "Hessian rank invariance", rank_invariance),
        (5, "Arf classes vs GL(3,2) brute force", arf_oracle),
        (6, "solvable reduction", solvable_reduction),
        (7, "implicit function solver", ift_checks),
        (8, "transport round trips", transport_round_trips),
        (9, "Milnor number and determinacy", milnor_checks),
        (10, "parser round trip and CLI determinism", parser_round_trip),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {id:>2}  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {id:>2}  {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
