//! Acceptance suite. Runs every criterion and prints one line per
//! criterion; exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use centrep::exterior::Multivector;
use centrep::instance::{random_instance, targeted_instance, Instance, InstanceSpec};
use centrep::lie::{oracle_check, LieAlgebra};
use centrep::rational::{int, unit_vector};
use centrep::structure::{canonical_decomposition, lefschetz_map, BlockShape};
use centrep::witness::{construct_witness, dispatch_holds, lambda_nu_dimensions, CaseTag, WitnessCertificate};

struct Outcome {
    pass: bool,
    detail: String,
}

fn corpus() -> Vec<(String, Instance)> {
    let mut out: Vec<(String, Instance)> = (1..=200u64)
        .map(|seed| {
            let dim = 2 + (seed % 7) as usize;
            let inst = random_instance(&InstanceSpec::new(dim, seed)).expect("random instance");
            (format!("random seed {seed} dim {dim}"), inst)
        })
        .collect();
    for tag in CaseTag::ALL {
        out.push((format!("targeted {tag}"), targeted_instance(tag, 0).expect("template")));
    }
    out
}

fn certify(inst: &Instance) -> Result<WitnessCertificate, String> {
    let t = inst.validate().map_err(|e| e.to_string())?;
    construct_witness(&t.epsilon, &t.omega, &t.theta).map_err(|e| e.to_string())
}

fn theorem_conformance(corpus: &[(String, Instance)]) -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut tags = std::collections::BTreeMap::new();
    for (name, inst) in corpus {
        match certify(inst) {
            Ok(c) => {
                let t = inst.validate().unwrap();
                let d = canonical_decomposition(&t.theta, &t.omega).unwrap();
                let dispatch = dispatch_holds(&c, &t.epsilon, &t.theta, &d).unwrap_or(false);
                if !c.checks.all() || !c.formula_verified || !dispatch {
                    failures.push(format!("{name}: checks {:?} formula {} dispatch {dispatch}", c.checks, c.formula_verified));
                }
                *tags.entry(c.case_tag.as_str()).or_insert(0usize) += 1;
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    let all_tags = CaseTag::ALL.iter().all(|t| tags.contains_key(t.as_str()));
    let pass = failures.is_empty() && all_tags && elapsed < Duration::from_secs(300);
    Outcome {
        pass,
        detail: format!(
            "{} instances, {} failures, all case tags reached: {all_tags}, {:.1}s, tags {tags:?}{}",
            corpus.len(),
            failures.len(),
            elapsed.as_secs_f64(),
            first(&failures)
        ),
    }
}

fn first(f: &[String]) -> String {
    f.first().map(|s| format!("; first failure: {s}")).unwrap_or_default()
}

fn oracle_agreement(corpus: &[(String, Instance)]) -> Outcome {
    let mut checked = 0;
    let mut corrected = 0;
    let mut failures = Vec::new();
    for (name, inst) in corpus.iter().filter(|(_, i)| i.dim <= 6) {
        let t = inst.validate().unwrap();
        let c = match certify(inst) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("{name}: {e}"));
                continue;
            }
        };
        checked += 1;
        match oracle_check(&t.theta, &t.epsilon, &t.omega, &c.beta, &c.alpha, &c.gamma, true) {
            Ok(r) if r.passed() => corrected += usize::from(r.cocycle_corrected),
            Ok(r) => failures.push(format!("{name}: {r:?}")),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    Outcome {
        pass: failures.is_empty() && checked > 0,
        detail: format!(
            "{checked} instances with dim_I <= 6, {} disagreements, {corrected} cocycles needed a correction term{}",
            failures.len(),
            first(&failures)
        ),
    }
}

/// Block shapes with `1 <= p + q <= 3` and `dim S <= 8`.
fn block_shapes() -> Vec<BlockShape> {
    // U/V blocks of size 2(2l+1) and Z blocks of size 2m, as sorted lists.
    let uv_sizes = [0usize, 1]; // l = 0 (size 2), l = 1 (size 6)
    let z_sizes = [1usize, 2, 3, 4]; // m (size 2m)
    let mut out = Vec::new();
    let mut ls_all: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..3 {
        let mut next = Vec::new();
        for ls in &ls_all {
            for &l in &uv_sizes {
                if ls.last().is_none_or(|&x| x <= l) {
                    let mut v = ls.clone();
                    v.push(l);
                    next.push(v);
                }
            }
        }
        ls_all.extend(next.into_iter().filter(|v| !ls_all.contains(v)).collect::<Vec<_>>());
    }
    ls_all.sort();
    ls_all.dedup();
    let mut ms_all: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..3 {
        let mut next = Vec::new();
        for ms in &ms_all {
            for &m in &z_sizes {
                if ms.last().is_none_or(|&x| x <= m) {
                    let mut v = ms.clone();
                    v.push(m);
                    next.push(v);
                }
            }
        }
        ms_all.extend(next);
    }
    ms_all.sort();
    ms_all.dedup();
    for ls in &ls_all {
        for ms in &ms_all {
            let count = ls.len() + ms.len();
            let dim: usize = ls.iter().map(|l| 2 * (2 * l + 1)).sum::<usize>() + ms.iter().map(|m| 2 * m).sum::<usize>();
            if (1..=3).contains(&count) && [2, 4, 6, 8].contains(&dim) {
                for signs in 0..(1usize << ms.len()) {
                    let zs = ms
                        .iter()
                        .enumerate()
                        .map(|(b, &m)| (m, if signs >> b & 1 == 1 { int(-1) } else { int(1) }))
                        .collect();
                    out.push(BlockShape { ls: ls.clone(), zs });
                }
            }
        }
    }
    out
}

fn lefschetz_suite() -> Outcome {
    let shapes = block_shapes();
    let mut maps = 0;
    let mut failures = Vec::new();
    for s in &shapes {
        let (_, _, d) = s.model();
        for k in 0..=d.rank {
            let m = lefschetz_map(&d, k).unwrap();
            maps += 1;
            if m.rows() != m.cols() || m.rank() != m.rows() {
                failures.push(format!("{s:?} k={k}: {}x{} rank {}", m.rows(), m.cols(), m.rank()));
            }
        }
    }
    Outcome {
        pass: failures.is_empty() && !shapes.is_empty(),
        detail: format!("{} shapes, {maps} maps, {} not bijective{}", shapes.len(), failures.len(), first(&failures)),
    }
}

fn canonical_suite() -> Outcome {
    let mut checked = 0;
    let mut non_unit = 0;
    let mut failures = Vec::new();
    for seed in 1..=120u64 {
        let dim = 2 + (seed % 7) as usize;
        let t = random_instance(&InstanceSpec::new(dim, 1000 + seed)).unwrap().validate().unwrap();
        checked += 1;
        match canonical_decomposition(&t.theta, &t.omega) {
            Ok(d) => {
                let c = d.check(&t.theta, &t.omega);
                if !c.passed() {
                    failures.push(format!("seed {seed}: {c:?}"));
                }
                if !c.unit_signs {
                    non_unit += 1;
                }
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    // Unit signs c_b = ±1 are checked as stated. Over Q they are out of
    // reach whenever c_b is not ± a square (rescaling a chain multiplies c_b
    // by a square), so such pairs are counted as failures here.
    Outcome {
        pass: failures.is_empty() && non_unit == 0,
        detail: format!(
            "{checked} random pairs, {} structural failures, {non_unit} with a sign c_b != ±1 \
             (c_b is reduced to a squarefree integer; ±1 needs a square root outside Q){}",
            failures.len(),
            first(&failures)
        ),
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn dimension_identity() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for p in 2..=4usize {
        let n = 2 * p;
        let mut sigma = Multivector::zero(n);
        for a in 0..p {
            sigma = &sigma + &Multivector::from_indices(n, &[2 * a, 2 * a + 1]);
        }
        let (sol, img) = lambda_nu_dimensions(&sigma, &unit_vector(n, 0), p);
        let expected = 3 * binomial(2 * p as u64, p as u64 + 1) / (p as u64 + 2);
        let got = (sol - img) as u64;
        pass &= got == expected;
        parts.push(format!("p={p}: {got} (expected {expected})"));
    }
    Outcome { pass, detail: parts.join(", ") }
}

fn known_cohomology() -> Outcome {
    let e = unit_vector;
    let h3 = LieAlgebra::from_brackets(3, [(0, 1, e(3, 2))]).unwrap();
    let fil = LieAlgebra::from_brackets(4, [(0, 1, e(4, 2)), (0, 2, e(4, 3))]).unwrap();
    let mut cases: Vec<(String, LieAlgebra, Vec<usize>)> = vec![
        ("h3".into(), h3, vec![1, 2, 2, 1]),
        ("filiform-4".into(), fil, vec![1, 2, 2, 2, 1]),
    ];
    for n in 1..=5u64 {
        cases.push((format!("abelian-{n}"), LieAlgebra::abelian(n as usize), (0..=n).map(|k| binomial(n, k) as usize).collect()));
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, l, expected) in cases {
        let betti = l.cohomology().unwrap().betti();
        let nontrivial = l.central_action().unwrap().nontrivial;
        pass &= betti == expected && nontrivial;
        parts.push(format!("{name} {betti:?}{}", if nontrivial { "" } else { " trivial action" }));
    }
    Outcome { pass, detail: parts.join(", ") }
}

fn sign_consistency(corpus: &[(String, Instance)]) -> Outcome {
    let mut failures = Vec::new();
    for (name, inst) in corpus {
        let t = inst.validate().unwrap();
        let z = Multivector::zero(t.theta.dim());
        match oracle_check(&t.theta, &t.epsilon, &t.omega, &z, &z, &z, false) {
            Ok(r) if r.d_squared_zero && r.cartan && r.dz_matches => {}
            Ok(r) => failures.push(format!("{name}: {r:?}")),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("{} instances, {} failures{}", corpus.len(), failures.len(), first(&failures)),
    }
}

fn main() -> ExitCode {
    let corpus = corpus();
    let results = [
        ("1 theorem conformance", theorem_conformance(&corpus)),
        ("2 oracle agreement", oracle_agreement(&corpus)),
        ("3 Lefschetz suite", lefschetz_suite()),
        ("4 canonical-form suite", canonical_suite()),
        ("5 dimension identity", dimension_identity()),
        ("6 known cohomology", known_cohomology()),
        ("7 sign-convention consistency", sign_consistency(&corpus)),
    ];
    let mut ok = true;
    for (name, o) in &results {
        ok &= o.pass;
        println!("[{}] criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
