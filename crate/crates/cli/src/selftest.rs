//! Quick cross-module consistency checks.

use anyhow::{bail, Result};
use ebc_core::gfield::{Elem, Field};
use ebc_core::gfmatrix::{self, Matrix};
use ebc_core::hitting::{self, HittingInstance};
use ebc_core::innovate::{self, Cnf, Scenario, UserState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, f: &Field, rows: usize, cols: usize) -> Matrix {
    let data: Vec<Vec<Elem>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(0..f.q()) as Elem).collect())
        .collect();
    Matrix::from_rows(f, cols, &data).expect("consistent shape")
}

fn field_axioms() -> Check {
    for q in [2u32, 3, 4, 5, 7, 8, 11, 13, 16] {
        let f = Field::new(q).map_err(|e| e.to_string())?;
        for a in f.elements() {
            for b in f.elements() {
                ensure(f.add(a, b) == f.add(b, a) && f.mul(a, b) == f.mul(b, a), format!("GF({q}) commutativity"))?;
                ensure(f.mul(a, b) == f.mul_reference(a, b), format!("GF({q}) table product"))?;
                for c in f.elements() {
                    ensure(
                        f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c)),
                        format!("GF({q}) distributivity"),
                    )?;
                }
            }
            if a != 0 {
                ensure(f.mul(a, f.inv(a).map_err(|e| e.to_string())?) == 1, format!("GF({q}) inverse"))?;
            }
        }
    }
    Ok(())
}

fn null_space_duality(rng: &mut ChaCha8Rng) -> Check {
    for i in 0..200 {
        let f = Field::new([2, 3, 7, 16, 256][i % 5]).map_err(|e| e.to_string())?;
        let n = rng.gen_range(1..=7);
        let r = rng.gen_range(0..=n);
        let c = random_matrix(rng, &f, r, n);
        let b = gfmatrix::null_space_basis(&c);
        ensure(c.rank() + b.rows() == n, "rank-nullity")?;
        ensure(c.mul(&b.transpose()).map_err(|e| e.to_string())?.is_zero(), "null basis not orthogonal")?;
        let x: Vec<Elem> = (0..n).map(|_| rng.gen_range(0..f.q()) as Elem).collect();
        let primal = gfmatrix::in_row_space(&x, &c).map_err(|e| e.to_string())?;
        let dual = gfmatrix::in_row_space_dual(&x, &c).map_err(|e| e.to_string())?;
        ensure(primal == dual, "membership paths differ")?;
    }
    Ok(())
}

fn random_scenario(rng: &mut ChaCha8Rng, f: &Field, n: usize, k: usize) -> Result<Scenario, String> {
    let mut users = Vec::new();
    for id in 0..k {
        let mut u = UserState::new(id, n, f);
        let r = rng.gen_range(0..n);
        while u.rank() < r {
            let x: Vec<Elem> = (0..n)
                .map(|_| if rng.gen_bool(0.4) { rng.gen_range(1..f.q()) as Elem } else { 0 })
                .collect();
            u.receive(&x).map_err(|e| e.to_string())?;
        }
        users.push(u);
    }
    Scenario::new(f.clone(), n, users).map_err(|e| e.to_string())
}

fn generators(rng: &mut ChaCha8Rng) -> Check {
    let f = Field::new(7).map_err(|e| e.to_string())?;
    for _ in 0..100 {
        let n = rng.gen_range(2..=6);
        let k = rng.gen_range(1..=4);
        let s = random_scenario(rng, &f, n, k)?;
        if s.num_users() == 0 {
            continue;
        }
        let oh = innovate::oh_generate(&s).map_err(|e| e.to_string())?;
        let gh = innovate::gh_generate(&s).map_err(|e| e.to_string())?;
        let (omega, _) = innovate::brute_force_sparsity(&s).map_err(|e| e.to_string())?;
        let weight = |x: &[Elem]| x.iter().filter(|&&v| v != 0).count();
        let all = |x: &[Elem]| innovate::innovative_count(x, &s).map(|c| c == s.num_users()).unwrap_or(false);
        ensure(all(&oh) && all(&gh), "generated vector not innovative")?;
        ensure(weight(&oh) == omega, "OH not sparsest")?;
        ensure(weight(&gh) >= omega && omega <= s.num_users(), "weight bounds")?;
    }
    Ok(())
}

fn reductions(rng: &mut ChaCha8Rng) -> Check {
    for q in [2u32, 3] {
        let s = innovate::gen_appendix_a(&Field::new(q).map_err(|e| e.to_string())?, 3).map_err(|e| e.to_string())?;
        ensure(
            innovate::brute_force_innovative(&s).map_err(|e| e.to_string())?.is_none(),
            "appendix-a instance has an innovative vector",
        )?;
        let back: Scenario = s.to_string().parse().map_err(|e: innovate::InnovateError| e.to_string())?;
        ensure(back.to_string() == s.to_string(), "scenario text round trip")?;
    }
    let f2 = Field::new(2).map_err(|e| e.to_string())?;
    for _ in 0..30 {
        let n = rng.gen_range(3..=5);
        let clauses = (0..rng.gen_range(1..=12))
            .map(|_| {
                let mut c = [0i32; 3];
                for l in &mut c {
                    let v = rng.gen_range(1..=n as i32);
                    *l = if rng.gen_bool(0.5) { v } else { -v };
                }
                c
            })
            .collect();
        let cnf = Cnf { n, clauses };
        let back: Cnf = cnf.to_string().parse().map_err(|e: innovate::InnovateError| e.to_string())?;
        ensure(back == cnf, "DIMACS round trip")?;
        let s = innovate::reduce_3sat(&cnf, &f2).map_err(|e| e.to_string())?;
        let nonempty = innovate::brute_force_innovative(&s).map_err(|e| e.to_string())?.is_some();
        ensure(nonempty == cnf.solve().is_some(), format!("3-SAT reduction disagrees on {cnf}"))?;
    }
    for _ in 0..50 {
        let n = rng.gen_range(1..=8);
        let sets = (0..rng.gen_range(1..=5))
            .map(|_| {
                let mut s: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
                if s.is_empty() {
                    s.push(rng.gen_range(0..n));
                }
                s
            })
            .collect();
        let inst = HittingInstance::new(n, sets).map_err(|e| e.to_string())?;
        let exact = hitting::exact_hitting(&inst, hitting::DEFAULT_NODE_BUDGET).map_err(|e| e.to_string())?;
        let oracle = hitting::oracle_min_hitting(&inst).map_err(|e| e.to_string())?;
        ensure(exact.size() == oracle.size(), "exact hitting set not minimal")?;
        let back: HittingInstance = inst.to_string().parse().map_err(|e: hitting::HittingError| e.to_string())?;
        ensure(back == inst, "hitting text round trip")?;
    }
    Ok(())
}

pub fn run(seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let suites: [(&str, Check); 4] = [
        ("field axioms", field_axioms()),
        ("null-space duality", null_space_duality(&mut rng)),
        ("SA/OH/GH properties", generators(&mut rng)),
        ("reductions and round trips", reductions(&mut rng)),
    ];
    let mut failed = 0;
    for (name, res) in suites {
        match res {
            Ok(()) => println!("selftest {name}: PASS"),
            Err(e) => {
                failed += 1;
                println!("selftest {name}: FAIL {e}");
            }
        }
    }
    if failed > 0 {
        bail!("{failed} selftest suites failed");
    }
    Ok(())
}
