mod common;

use common::*;
use defring::arith::primes_up_to;
use defring::galois::{fixed_space_dim, is_ramified_at, local_h0_star, Mat2};
use defring::ingest::{parse_allcurves, parse_cache, render_cache, Cache, CacheEntry, ParseMode};
use defring::pointcount::{trace_bsgs, trace_exhaustive};
use defring::{conductor, minimal_model, reduction_at, WeierstrassModel};
use proptest::prelude::*;

fn small_prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![5u64, 7, 11, 13, 17, 19, 23])
}

fn mat(p: u64) -> impl Strategy<Value = Mat2> {
    (0..p as i64, 0..p as i64, 0..p as i64, 0..p as i64).prop_map(move |(a, b, c, d)| Mat2::new(a, b, c, d, p))
}

fn coeffs() -> impl Strategy<Value = [i64; 5]> {
    (-3i64..=3, -5i64..=5, -3i64..=3, -30i64..=30, -30i64..=30).prop_map(|(a, b, c, d, e)| [a, b, c, d, e])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wiles_ledger_identity(raw in prop::collection::vec((any::<u8>(), any::<u8>()), 0..6), p in small_prime(), h0_p in 0usize..3) {
        let dims = sample_dims(&raw);
        prop_assert_eq!(check_ledger_identity(p, &dims, h0_p), Ok(()));
    }

    #[test]
    fn local_vanishing_equivalence(ell_i in 0usize..150, p in small_prime(), split: bool, ramified: bool) {
        let ell = primes_up_to(1000)[ell_i];
        prop_assume!(ell != p);
        prop_assert_eq!(check_local_vanishing(ell, p, split, ramified), Ok(()));
    }

    #[test]
    fn fixed_space_conjugation(p in small_prime(), seed in any::<u64>()) {
        // build a few invertible generators from a seed
        let mut x = seed | 1;
        let mut next = || { x ^= x << 13; x ^= x >> 7; x ^= x << 17; (x % p) as i64 };
        let mut gens = Vec::new();
        while gens.len() < 2 {
            let g = Mat2::new(next(), next(), next(), next(), p);
            if g.det(p) != 0 { gens.push(g); }
        }
        let twists = vec![1 + (next() as u64) % (p - 1), 1];
        let c = Mat2::new(next(), next(), next(), next(), p);
        prop_assert_eq!(check_conjugation_invariance(p, &gens, &twists, c), Ok(()));
    }

    #[test]
    fn fixed_space_matches_brute_force(g in mat(7), h in mat(7), t in 1u64..7) {
        let p = 7;
        prop_assume!(g.det(p) != 0 && h.det(p) != 0);
        let dim = fixed_space_dim(&[g, h], &[t, 1], p).unwrap();
        prop_assert_eq!(dim, brute_fixed_dim(&[(g, t), (h, 1)], p));
    }

    #[test]
    fn bsgs_matches_enumeration(a in coeffs(), ell_i in 2usize..46) {
        let ell = primes_up_to(200)[ell_i];
        let m = WeierstrassModel::new(a);
        prop_assume!(!m.is_singular());
        let disc = m.discriminant();
        prop_assume!(defring::arith::big_mod(&disc, ell) != 0);
        let naive = naive_trace(a, ell);
        prop_assert_eq!(trace_exhaustive(&m, ell).unwrap(), naive);
        prop_assert_eq!(trace_bsgs(&m, ell).unwrap(), naive);
    }

    #[test]
    fn minimal_model_idempotent(a in coeffs(), u in 1i64..4) {
        let m = WeierstrassModel::new(a);
        prop_assume!(!m.is_singular());
        let big = |x: i64| num_bigint::BigInt::from(x);
        let scaled = m.rescale(&big(u));
        let min = minimal_model(&scaled).unwrap();
        prop_assert_eq!(minimal_model(&min).unwrap(), min.clone());
        prop_assert_eq!(min.j_invariant().unwrap(), m.j_invariant().unwrap());
        let inv = min.invariants();
        prop_assert_eq!(big(1728) * &inv.disc, inv.c4.pow(3) - inv.c6.pow(2));
    }

    #[test]
    fn good_reduction_iff_coprime(a in coeffs()) {
        let m = WeierstrassModel::new(a);
        prop_assume!(!m.is_singular());
        let m = minimal_model(&m).unwrap();
        let n = conductor(&m).unwrap();
        for ell in primes_up_to(50) {
            let r = reduction_at(&m, ell).unwrap();
            prop_assert_eq!(r.kind == defring::ReductionKind::Good, !n.is_multiple_of(ell));
        }
    }

    #[test]
    fn cache_round_trip(rows in prop::collection::vec((1u64..5000, small_prime(), 0usize..8, any::<bool>(), any::<bool>(), prop::collection::vec(1u64..100, 0..3)), 0..20)) {
        let mut cache = Cache::default();
        for (i, (n, p, m, s, f, w)) in rows.into_iter().enumerate() {
            let mut w = w; w.sort(); w.dedup();
            cache.insert(CacheEntry {
                conductor: n, p, label: format!("{n}a{}", i + 1),
                multiplicity: 2 * m + 2, excess: 2 * m,
                is_strict: s, is_proper: !w.is_empty(), forced_by_degree: f,
                witness_levels: w,
            });
        }
        let text = render_cache(&cache);
        let back = parse_cache(&text).unwrap();
        prop_assert_eq!(back, cache);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn hecke_operators_commute(n in 11u64..120, p in small_prime()) {
        prop_assert_eq!(check_hecke_commute(n, p), Ok(()));
    }

    #[test]
    fn verdict_is_one_directional(i in 0usize..CURVES.len(), p in prop::sample::select(vec![2u64, 3, 5, 7, 11, 13]), cong: bool) {
        let (label, a) = CURVES[i];
        prop_assert_eq!(check_one_directional(&curve(label, a), p, cong), Ok(()));
    }

    #[test]
    fn strict_ingest_keeps_conductor(i in 0usize..CURVES.len()) {
        let (label, a) = CURVES[i];
        let c = curve(label, a);
        let line = format!("{} {} {} [{},{},{},{},{}] 0 1\n", c.conductor, "a", 1, a[0], a[1], a[2], a[3], a[4]);
        let recs = parse_allcurves(line.as_bytes(), ParseMode::Strict).unwrap();
        prop_assert_eq!(recs[0].conductor, conductor(&recs[0].model).unwrap());
        let bad = format!("{} a 1 [{},{},{},{},{}] 0 1\n", c.conductor + 1, a[0], a[1], a[2], a[3], a[4]);
        prop_assert!(parse_allcurves(bad.as_bytes(), ParseMode::Strict).is_err());
    }
}

const CURVES: [(&str, [i64; 5]); 8] = [
    ("11a1", [0, -1, 1, -10, -20]),
    ("14a1", [1, 0, 1, 4, -6]),
    ("15a1", [1, 1, 1, -10, -10]),
    ("17a1", [1, -1, 1, -1, -14]),
    ("19a1", [0, 1, 1, -9, -15]),
    ("37a1", [0, 0, 1, -1, 0]),
    ("43a1", [0, 1, 1, 0, 0]),
    ("53a1", [1, -1, 1, 0, 0]),
];

/// Multiplicative primes ℓ ≢ ±1 (mod p) on real curves: vanishing iff ramified.
#[test]
fn local_vanishing_on_curves() {
    for (label, a) in CURVES {
        let c = curve(label, a);
        for p in [5u64, 7, 11, 13] {
            if c.conductor.is_multiple_of(p) {
                continue;
            }
            for ell in c.bad_primes() {
                if ell % p == 1 || ell % p == p - 1 {
                    continue;
                }
                let h0 = local_h0_star(&c, p, ell).unwrap();
                assert_eq!(h0 == 0, is_ramified_at(&c, p, ell).unwrap(), "{label} p={p} ell={ell}");
            }
        }
    }
}

#[test]
fn proper_is_class_invariant() {
    let a = curve("11a1", [0, -1, 1, -10, -20]);
    let b = curve("11a2", [0, -1, 1, -7820, -263580]);
    let c = curve("11a3", [0, -1, 1, 0, 0]);
    for p in [7u64, 13] {
        let r: Vec<_> = [&a, &b, &c].iter().map(|e| defring::congruence::proper_congruence(e, p).unwrap()).collect();
        assert!(r.windows(2).all(|w| w[0] == w[1]));
    }
}
