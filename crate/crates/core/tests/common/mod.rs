#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use defring::arith::{is_prime, primes_up_to};
use defring::galois::{fixed_space_dim, LocalRepresentation, Mat2};
use defring::modsym::{ManinSymbolSpace, Sign};
use defring::obstruction::{classify_with, wiles_difference, RingVerdict, SelmerLedger};
use defring::{CurveRecord, WeierstrassModel};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn curve(label: &str, a: [i64; 5]) -> CurveRecord {
    CurveRecord::from_model(label, WeierstrassModel::new(a)).unwrap()
}

/// a_ℓ = ℓ + 1 − #E(F_ℓ) by looping over all affine (x, y).
pub fn naive_trace(a: [i64; 5], ell: u64) -> i64 {
    let l = ell as i64;
    let r = |x: i64| x.rem_euclid(l);
    let [a1, a2, a3, a4, a6] = a.map(r);
    let mut count = 1i64;
    for x in 0..l {
        let rhs = r(r(r(x * x) * x) + r(a2 * r(x * x)) + r(a4 * x) + a6);
        for y in 0..l {
            if r(r(y * y) + r(a1 * r(x * y)) + r(a3 * y)) == rhs {
                count += 1;
            }
        }
    }
    l + 1 - count
}

/// Genus of X₀(N) from the index, elliptic points and cusps.
pub fn genus_formula(n: u64) -> u64 {
    let mut primes = Vec::new();
    let mut m = n;
    let mut q = 2;
    while q * q <= m {
        if m.is_multiple_of(q) {
            let mut e = 0;
            while m.is_multiple_of(q) {
                m /= q;
                e += 1;
            }
            primes.push((q, e));
        }
        q += 1;
    }
    if m > 1 {
        primes.push((m, 1));
    }
    let mut mu = n as i64;
    for &(q, _) in &primes {
        mu = mu / q as i64 * (q as i64 + 1);
    }
    let legendre = |a: i64, q: u64| -> i64 {
        let a = a.rem_euclid(q as i64) as u64;
        if a == 0 {
            return 0;
        }
        let mut r = 1u64;
        let (mut b, mut e) = (a, (q - 1) / 2);
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % q;
            }
            b = b * b % q;
            e >>= 1;
        }
        if r == 1 {
            1
        } else {
            -1
        }
    };
    let nu2 = if n.is_multiple_of(4) {
        0
    } else {
        primes.iter().map(|&(q, _)| if q == 2 { 1 } else { 1 + legendre(-1, q) }).product::<i64>()
    };
    let nu3 = if n.is_multiple_of(9) {
        0
    } else {
        primes
            .iter()
            .map(|&(q, _)| match q {
                2 => 0,
                3 => 1,
                _ => 1 + legendre(-3, q),
            })
            .product::<i64>()
    };
    let phi = |k: u64| -> u64 { (1..=k).filter(|&i| gcd(i, k) == 1).count() as u64 };
    let cusps: u64 = (1..=n).filter(|d| n.is_multiple_of(*d)).map(|d| phi(gcd(d, n / d))).sum();
    // 12g = 12 + μ − 3ν₂ − 4ν₃ − 6c
    let twelve_g = 12 + mu - 3 * nu2 - 4 * nu3 - 6 * cusps as i64;
    assert_eq!(twelve_g % 12, 0);
    (twelve_g / 12) as u64
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn squarefree(n: u64) -> bool {
    let mut q = 2;
    while q * q <= n {
        if n.is_multiple_of(q * q) {
            return false;
        }
        q += 1;
    }
    true
}

// Property checks shared by the proptest suite and the acceptance harness.

/// t − s equals the local sum, and shapes with any other t − s are rejected.
pub fn check_ledger_identity(p: u64, dims: &[(u64, usize)], h0_p: usize) -> Result<(), String> {
    let ledger = SelmerLedger::from_dims(p, dims).with_h0_p(h0_p);
    let expected: usize = dims.iter().map(|&(_, d)| d).sum();
    let diff = wiles_difference(&ledger).map_err(|e| e.to_string())?;
    if diff != expected as i64 {
        return Err(format!("difference {diff} != {expected}"));
    }
    let t = expected as u32 + 2;
    let shape = defring::obstruction::presentation_shape(&ledger, t, 2).map_err(|e| e.to_string())?;
    if shape.t - shape.s != expected as u32 {
        return Err("shape t - s".into());
    }
    for (l, b) in &shape.local_relation_bounds {
        if Some(b) != dims.iter().find(|d| d.0 == *l).map(|d| &d.1) {
            return Err(format!("bound at {l}"));
        }
    }
    if defring::obstruction::presentation_shape(&ledger, t + 1, 2).is_ok() {
        return Err("inconsistent shape accepted".into());
    }
    Ok(())
}

/// For ℓ ≢ ±1 mod p: H⁰ of the twisted adjoint vanishes exactly when ramified.
pub fn check_local_vanishing(ell: u64, p: u64, split: bool, ramified: bool) -> Result<(), String> {
    if ell % p == 1 || ell % p == p - 1 || ell.is_multiple_of(p) {
        return Ok(());
    }
    let rep = LocalRepresentation::tate_curve(ell, p, split, ramified);
    // independent oracle: brute-force the fixed trace-zero matrices
    let mut gens = vec![(rep.frobenius, ell % p)];
    if let Some(t) = rep.tame {
        gens.push((t, 1));
    }
    let brute = brute_fixed_dim(&gens, p);
    let h0 = rep.h0_twisted().map_err(|e| e.to_string())?;
    if h0 != brute {
        return Err(format!("h0 {h0} != brute force {brute} (ell {ell}, p {p})"));
    }
    if (h0 == 0) != ramified {
        return Err(format!("ell {ell}, p {p}, split {split}: h0 {h0}, ramified {ramified}"));
    }
    Ok(())
}

/// log_p of the number of trace-zero X with t·gXg⁻¹ = X for every (g, t).
pub fn brute_fixed_dim(gens: &[(Mat2, u64)], p: u64) -> usize {
    let mut count = 0u64;
    for e in 0..p {
        for f in 0..p {
            for h in 0..p {
                let x = Mat2::new(h as i64, e as i64, f as i64, -(h as i64), p);
                let fixed = gens.iter().all(|&(g, t)| {
                    let gi = g.inverse(p).unwrap();
                    let y = g.mul(&x, p).mul(&gi, p);
                    let y = Mat2::new(
                        (y.a * t % p) as i64,
                        (y.b * t % p) as i64,
                        (y.c * t % p) as i64,
                        (y.d * t % p) as i64,
                        p,
                    );
                    y == x
                });
                count += fixed as u64;
            }
        }
    }
    let mut d = 0;
    let mut c = count;
    while c > 1 {
        c /= p;
        d += 1;
    }
    d
}

pub fn check_conjugation_invariance(p: u64, gens: &[Mat2], twists: &[u64], c: Mat2) -> Result<(), String> {
    let Some(ci) = c.inverse(p) else { return Ok(()) };
    if gens.iter().any(|g| g.det(p) == 0) {
        return Ok(());
    }
    let conj: Vec<Mat2> = gens.iter().map(|g| c.mul(g, p).mul(&ci, p)).collect();
    let a = fixed_space_dim(gens, twists, p).map_err(|e| e.to_string())?;
    let b = fixed_space_dim(&conj, twists, p).map_err(|e| e.to_string())?;
    if a != b {
        return Err(format!("{a} != {b}"));
    }
    Ok(())
}

pub fn check_hecke_commute(n: u64, p: u64) -> Result<(), String> {
    if n.is_multiple_of(p) || !is_prime(p) {
        return Ok(());
    }
    let s = ManinSymbolSpace::new(n, p, Sign::Zero).map_err(|e| e.to_string())?;
    let ells: Vec<u64> = primes_up_to(13).into_iter().filter(|&l| !n.is_multiple_of(l) && l != p).collect();
    let mats: Vec<_> = ells.iter().map(|&l| s.hecke_matrix(l).unwrap()).collect();
    for i in 0..mats.len() {
        for j in i + 1..mats.len() {
            if mats[i].mul(&mats[j]) != mats[j].mul(&mats[i]) {
                return Err(format!("T_{} and T_{} do not commute at level {n} mod {p}", ells[i], ells[j]));
            }
        }
    }
    Ok(())
}

/// The verdict is proven_Zp exactly when no flag is set; no negative verdict exists.
pub fn check_one_directional(c: &CurveRecord, p: u64, oracle_says: bool) -> Result<(), String> {
    let oracle = move |_: &CurveRecord, _: u64| -> defring::Result<bool> { Ok(oracle_says) };
    let v = match classify_with(c, p, &oracle) {
        Ok(v) => v,
        Err(_) => return Ok(()),
    };
    let expect = if v.flags.any() { RingVerdict::Unknown } else { RingVerdict::ProvenZp };
    if v.ring_verdict != expect || v.in_sigma != v.flags.any() {
        return Err(format!("{} p={p}: verdict {} with flags {:?}", c.label, v.ring_verdict, v.flags));
    }
    if v.in_ep_prime == Some(true) && !v.in_ep {
        return Err("in E'_p without E_p".into());
    }
    Ok(())
}

pub fn sample_dims(raw: &[(u8, u8)]) -> Vec<(u64, usize)> {
    let ps = primes_up_to(400);
    let mut m = BTreeMap::new();
    for &(i, d) in raw {
        m.insert(ps[i as usize % ps.len()], (d % 4) as usize);
    }
    m.into_iter().collect()
}
