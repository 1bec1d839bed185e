use ebc_core::codes::{self, Decoded, EncodedPacket, RobustSoliton};
use ebc_core::gfield::{Elem, Field};
use ebc_core::gfmatrix::{self, Matrix, NullTracker};
use ebc_core::hitting::{self, HittingInstance};
use ebc_core::innovate::{self, Scenario, UserState};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const QS: [u32; 8] = [2, 3, 4, 5, 7, 8, 16, 256];

fn field_strategy() -> impl Strategy<Value = Field> {
    prop::sample::select(QS.to_vec()).prop_map(|q| Field::new(q).unwrap())
}

/// Rows with entries already reduced into the field, about half of them zero.
fn rows_in(f: &Field, rows: impl Into<prop::collection::SizeRange>, n: usize) -> impl Strategy<Value = Vec<Vec<Elem>>> {
    let q = f.q();
    let entry = prop_oneof![Just(0u32), 0..q].prop_map(|v| v as Elem);
    prop::collection::vec(prop::collection::vec(entry, n), rows)
}

fn field_and_rows(max_n: usize, max_rows: usize) -> impl Strategy<Value = (Field, usize, Vec<Vec<Elem>>)> {
    (field_strategy(), 1..=max_n).prop_flat_map(move |(f, n)| {
        let rows = rows_in(&f, 0..=max_rows, n);
        (Just(f), Just(n), rows)
    })
}

fn scenario_from(f: &Field, n: usize, per_user: &[Vec<Vec<Elem>>]) -> Scenario {
    let users = per_user
        .iter()
        .enumerate()
        .map(|(id, rows)| {
            let mut u = UserState::new(id, n, f);
            for r in rows {
                u.receive(r).unwrap();
            }
            u
        })
        .collect();
    Scenario::new(f.clone(), n, users).unwrap()
}

fn weight(x: &[Elem]) -> usize {
    x.iter().filter(|&&v| v != 0).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn field_mul_div_round_trip(f in field_strategy(), a in 0u32..256, b in 1u32..256, c in 0u32..256) {
        let (a, b, c) = ((a % f.q()) as Elem, (b % (f.q() - 1) + 1) as Elem, (c % f.q()) as Elem);
        prop_assert_eq!(f.div(f.mul(a, b), b), a);
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.mul(a, b), f.mul_reference(a, b));
        prop_assert_eq!(f.add(f.sub(a, c), c), a);
    }

    #[test]
    fn tracker_matches_batch_rank((f, n, rows) in field_and_rows(8, 12)) {
        let mut t = NullTracker::new(n, &f);
        let mut seen = Matrix::zeros(&f, 0, n);
        for r in &rows {
            let before = seen.rank();
            seen.push_row(r).unwrap();
            let innovative = seen.rank() > before;
            prop_assert_eq!(t.is_innovative(r).unwrap(), innovative);
            if innovative {
                t.update(r).unwrap();
            }
        }
        prop_assert_eq!(t.rank(), seen.rank());
        prop_assert!(t.check_inverse());
        let nb = t.null_basis();
        prop_assert_eq!(nb.rows(), n - seen.rank());
        prop_assert!(seen.mul(&nb.transpose()).unwrap().is_zero());
        prop_assert_eq!(t.received().rank(), seen.rank());
    }

    #[test]
    fn sparse_and_dense_solvers_agree((f, n, rows) in field_and_rows(7, 9), rhs_seed in any::<u64>()) {
        prop_assume!(!rows.is_empty());
        let a = Matrix::from_rows(&f, n, &rows).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(rhs_seed);
        let x: Vec<Elem> = (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0..f.q()) as Elem).collect();
        let b = Matrix::from_rows(&f, 1, &a.mul_vec(&x).unwrap().into_iter().map(|v| vec![v]).collect::<Vec<_>>()).unwrap();
        let dense = gfmatrix::solve_dense(&a, &b).unwrap();
        prop_assert_eq!(&dense, &gfmatrix::solve_sparse(&a, &b, n).unwrap());
        let sol = dense.found().expect("consistent by construction");
        prop_assert_eq!(a.mul(&sol).unwrap(), b);
    }

    #[test]
    fn row_space_membership_paths_agree((f, n, rows) in field_and_rows(7, 7), probe in prop::collection::vec(0u32..256, 7)) {
        let c = Matrix::from_rows(&f, n, &rows).unwrap();
        let x: Vec<Elem> = probe[..n].iter().map(|v| (v % f.q()) as Elem).collect();
        prop_assert_eq!(gfmatrix::in_row_space(&x, &c).unwrap(), gfmatrix::in_row_space_dual(&x, &c).unwrap());
        for r in &rows {
            prop_assert!(gfmatrix::in_row_space_dual(r, &c).unwrap());
        }
    }

    #[test]
    fn oh_and_gh_are_innovative_when_field_is_large(
        (f, n, users) in (prop::sample::select(vec![5u32, 7, 8, 16]), 2usize..=7).prop_flat_map(|(q, n)| {
            let f = Field::new(q).unwrap();
            let users = prop::collection::vec(rows_in(&f, 0..n, n), 1..=4);
            (Just(f), Just(n), users)
        })
    ) {
        let s = scenario_from(&f, n, &users);
        prop_assume!(s.num_users() > 0);
        let oh = innovate::oh_generate(&s).unwrap();
        let gh = innovate::gh_generate(&s).unwrap();
        prop_assert_eq!(innovate::innovative_count(&oh, &s).unwrap(), s.num_users());
        prop_assert_eq!(innovate::innovative_count(&gh, &s).unwrap(), s.num_users());
        prop_assert!(weight(&oh) <= weight(&gh));
        prop_assert!(weight(&oh) <= s.num_users());
        let text = s.to_string();
        let back: Scenario = text.parse().unwrap();
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn binary_heuristics_never_break_innovativeness_claims(
        (n, users) in (2usize..=7).prop_flat_map(|n| {
            let f = Field::new(2).unwrap();
            (Just(n), prop::collection::vec(rows_in(&f, 0..n, n), 1..=6))
        })
    ) {
        let f = Field::new(2).unwrap();
        let s = scenario_from(&f, n, &users);
        prop_assume!(s.num_users() > 0);
        let best = innovate::brute_force_innovative(&s).unwrap().map(|x| innovate::innovative_count(&x, &s).unwrap());
        for x in [innovate::gh_sbes(&s).unwrap(), innovate::fh_sbes(&s).unwrap()] {
            let hits = innovate::innovative_count(&x, &s).unwrap();
            prop_assert!(hits >= 1);
            if best.is_none() {
                prop_assert!(hits < s.num_users());
            }
        }
    }

    #[test]
    fn hitting_solvers_are_consistent(
        (n, sets) in (1usize..=10).prop_flat_map(|n| {
            (Just(n), prop::collection::vec(prop::collection::btree_set(0..n, 1..=n.min(4)), 1..=8))
        })
    ) {
        let inst = HittingInstance::new(n, sets.into_iter().map(|s| s.into_iter().collect()).collect()).unwrap();
        let greedy = hitting::greedy_hitting(&inst);
        let exact = hitting::exact_hitting(&inst, hitting::DEFAULT_NODE_BUDGET).unwrap();
        let oracle = hitting::oracle_min_hitting(&inst).unwrap();
        prop_assert!(inst.is_hit_by(&greedy.hitting_set));
        prop_assert!(inst.is_hit_by(&exact.hitting_set));
        prop_assert_eq!(exact.size(), oracle.size());
        prop_assert!(exact.size() <= greedy.size());
        let back: HittingInstance = inst.to_string().parse().unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn decoders_recover_sources(q in prop::sample::select(vec![2u32, 16, 256]), n in 1usize..=12, seed in any::<u64>()) {
        let f = Field::new(q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sources: Vec<Vec<Elem>> = (0..n)
            .map(|_| (0..3).map(|_| rand::Rng::gen_range(&mut rng, 0..q) as Elem).collect())
            .collect();
        let dist = RobustSoliton::new(n, 0.1, 0.1).unwrap();
        let lt: Vec<EncodedPacket> = (0..6 * n + 10).map(|_| codes::lt_encode(&f, &sources, &dist, &mut rng)).collect();
        if let Decoded::Complete(got) = codes::lt_bp_decode(&f, &lt, n) {
            prop_assert_eq!(got, sources.clone());
        }
        let rlnc: Vec<EncodedPacket> = (0..n + 8).map(|_| codes::rlnc_encode(&f, &sources, &mut rng)).collect();
        let rank = Matrix::from_rows(&f, n, &rlnc.iter().map(|p| p.coeffs.clone()).collect::<Vec<_>>()).unwrap().rank();
        let dense = codes::ge_decode(&f, &rlnc, n).unwrap();
        let sparse = codes::sparse_decode(&f, &rlnc, n, n).unwrap();
        prop_assert_eq!(dense.clone().complete().is_some(), rank == n);
        if rank == n {
            prop_assert_eq!(dense.complete().unwrap(), sources.clone());
            prop_assert_eq!(sparse.complete().unwrap(), sources);
        }
    }

    #[test]
    fn idnc_selection_is_instantly_decodable(
        (n, has) in (1usize..=12).prop_flat_map(|n| (Just(n), prop::collection::vec(prop::collection::vec(any::<bool>(), n), 1..=8)))
    ) {
        let p = vec![0.3; has.len()];
        let anyone_missing = has.iter().any(|h| h.iter().any(|&x| !x));
        let picked = match codes::idnc_mwvs(&has, &p) {
            Err(codes::CodesError::NoMissing) if !anyone_missing => return Ok(()),
            other => other.unwrap(),
        };
        prop_assert!(!picked.is_empty());
        prop_assert!(picked.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(picked.iter().all(|&j| j < n && has.iter().any(|h| !h[j])));
        // every picked packet is the single missing one for some user
        for &j in &picked {
            prop_assert!(has.iter().any(|h| !h[j] && picked.iter().all(|&l| l == j || h[l])));
        }
    }
}
