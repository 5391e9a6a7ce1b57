//! Traces of Frobenius: exhaustive counting for small primes, baby-step giant-step above.

use std::collections::HashMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::arith::{big_mod, is_prime, mul_mod, pow_mod, sqrt_mod};
use crate::ec::WeierstrassModel;
use crate::error::{Error, Result};

/// Primes at or above this use baby-step giant-step.
pub const DEFAULT_BSGS_THRESHOLD: u64 = 10_000;

/// a_ℓ = ℓ + 1 − #E(F_ℓ) with the default algorithm switch.
pub fn trace_of_frobenius(model: &WeierstrassModel, ell: u64) -> Result<i64> {
    trace_with_threshold(model, ell, DEFAULT_BSGS_THRESHOLD)
}

pub fn trace_with_threshold(model: &WeierstrassModel, ell: u64, threshold: u64) -> Result<i64> {
    if ell < threshold || ell < 5 {
        trace_exhaustive(model, ell)
    } else {
        trace_bsgs(model, ell)
    }
}

fn check_good(model: &WeierstrassModel, ell: u64) -> Result<()> {
    if !is_prime(ell) {
        return Err(Error::NotPrime(ell));
    }
    if big_mod(&model.discriminant(), ell) == 0 {
        return Err(Error::BadReduction(ell));
    }
    Ok(())
}

/// Quadratic character table of F_ℓ (ℓ odd): 0 at 0, ±1 elsewhere.
pub fn quadratic_character_table(ell: u64) -> Vec<i8> {
    let mut chi = vec![-1i8; ell as usize];
    chi[0] = 0;
    for y in 1..=(ell / 2) {
        chi[mul_mod(y, y, ell) as usize] = 1;
    }
    chi
}

/// Point count by enumerating x (and y when ℓ = 2).
pub fn trace_exhaustive(model: &WeierstrassModel, ell: u64) -> Result<i64> {
    check_good(model, ell)?;
    if ell == 2 {
        let a: Vec<u64> = model.coefficients().iter().map(|c| big_mod(c, 2)).collect();
        let (a1, a2, a3, a4, a6) = (a[0], a[1], a[2], a[3], a[4]);
        let mut affine = 0i64;
        for x in 0..2u64 {
            for y in 0..2u64 {
                let lhs = y * y + a1 * x * y + a3 * y;
                let rhs = x * x * x + a2 * x * x + a4 * x + a6;
                if (lhs + rhs) % 2 == 0 {
                    affine += 1;
                }
            }
        }
        return Ok(2 + 1 - (affine + 1));
    }
    let chi = quadratic_character_table(ell);
    // (2y + a1 x + a3)² = 4x³ + b2 x² + 2 b4 x + b6
    let inv = model.invariants();
    let b2 = big_mod(&inv.b2, ell);
    let b4x2 = big_mod(&(2 * &inv.b4), ell);
    let b6 = big_mod(&inv.b6, ell);
    let four = 4 % ell;
    let mut sum = 0i64;
    for x in 0..ell {
        let mut v = four;
        v = (mul_mod(v, x, ell) + b2) % ell;
        v = (mul_mod(v, x, ell) + b4x2) % ell;
        v = (mul_mod(v, x, ell) + b6) % ell;
        sum += chi[v as usize] as i64;
    }
    Ok(-sum)
}

/// Memoized traces for one curve.
#[derive(Clone, Debug)]
pub struct TraceCache {
    model: WeierstrassModel,
    traces: HashMap<u64, i64>,
}

impl TraceCache {
    pub fn new(model: WeierstrassModel) -> Self {
        TraceCache { model, traces: HashMap::new() }
    }

    pub fn model(&self) -> &WeierstrassModel {
        &self.model
    }

    pub fn get(&mut self, ell: u64) -> Result<i64> {
        if let Some(&t) = self.traces.get(&ell) {
            return Ok(t);
        }
        let t = trace_of_frobenius(&self.model, ell)?;
        self.traces.insert(ell, t);
        Ok(t)
    }
}

type Pt = Option<(u64, u64)>;

/// Short Weierstrass curve y² = x³ + a x + b over F_ℓ, ℓ ≥ 5.
struct ShortCurve {
    a: u64,
    b: u64,
    ell: u64,
}

fn inv(x: u64, m: u64) -> u64 {
    pow_mod(x, m - 2, m)
}

impl ShortCurve {
    fn add(&self, p: Pt, q: Pt) -> Pt {
        let m = self.ell;
        let (x1, y1) = match p {
            None => return q,
            Some(v) => v,
        };
        let (x2, y2) = match q {
            None => return p,
            Some(v) => v,
        };
        let lambda = if x1 == x2 {
            if (y1 + y2) % m == 0 {
                return None;
            }
            let num = (mul_mod(3, mul_mod(x1, x1, m), m) + self.a) % m;
            mul_mod(num, inv(mul_mod(2, y1, m), m), m)
        } else {
            let num = (y2 + m - y1) % m;
            mul_mod(num, inv((x2 + m - x1) % m, m), m)
        };
        let x3 = (mul_mod(lambda, lambda, m) + 2 * m - x1 - x2) % m;
        let y3 = (mul_mod(lambda, (x1 + m - x3) % m, m) + m - y1) % m;
        Some((x3, y3))
    }

    fn neg(&self, p: Pt) -> Pt {
        p.map(|(x, y)| (x, (self.ell - y) % self.ell))
    }

    fn mul(&self, p: Pt, k: i64) -> Pt {
        let base = if k < 0 { self.neg(p) } else { p };
        let mut n = k.unsigned_abs();
        let mut acc = None;
        let mut cur = base;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.add(acc, cur);
            }
            cur = self.add(cur, cur);
            n >>= 1;
        }
        acc
    }

    /// A random affine point with y ≠ 0; `None` if sampling keeps missing
    /// (small fields can have no such point at all).
    fn random_point(&self, rng: &mut StdRng) -> Option<(u64, u64)> {
        let m = self.ell;
        for _ in 0..4 * m + 64 {
            let x = rng.gen_range(0..m);
            let rhs = (mul_mod(mul_mod(x, x, m), x, m) + mul_mod(self.a, x, m) + self.b) % m;
            if rhs == 0 {
                continue;
            }
            if let Some(y) = sqrt_mod(rhs, m) {
                return Some((x, y));
            }
        }
        None
    }

    /// All t in [−T, T] with (ℓ + 1 − t)·P = O.
    fn trace_candidates(&self, p: Pt, bound: i64) -> Vec<i64> {
        let q = self.mul(p, self.ell as i64 + 1);
        let width = (2 * bound + 1) as u64;
        let m = ((width as f64).sqrt().ceil() as u64).max(1);
        let mut baby: HashMap<Pt, Vec<u64>> = HashMap::with_capacity(m as usize);
        let mut cur: Pt = None;
        for j in 0..m {
            baby.entry(cur).or_default().push(j);
            cur = self.add(cur, p);
        }
        let step = self.neg(self.mul(p, m as i64));
        let mut giant = self.add(q, self.mul(p, bound));
        let mut out = Vec::new();
        let mut i = 0u64;
        while i * m < width {
            if let Some(js) = baby.get(&giant) {
                for &j in js {
                    let t = -bound + (i * m + j) as i64;
                    if t <= bound {
                        out.push(t);
                    }
                }
            }
            giant = self.add(giant, step);
            i += 1;
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Baby-step giant-step on the curve and its quadratic twist; falls back to
/// exhaustive counting if the candidate set never narrows to one value.
pub fn trace_bsgs(model: &WeierstrassModel, ell: u64) -> Result<i64> {
    check_good(model, ell)?;
    if ell < 5 {
        return trace_exhaustive(model, ell);
    }
    let inv_ = model.invariants();
    let a = big_mod(&(-27 * &inv_.c4), ell);
    let b = big_mod(&(-54 * &inv_.c6), ell);
    let d = (2..ell)
        .find(|&d| pow_mod(d, (ell - 1) / 2, ell) == ell - 1)
        .expect("non-residue exists");
    let curve = ShortCurve { a, b, ell };
    let twist = ShortCurve {
        a: mul_mod(a, mul_mod(d, d, ell), ell),
        b: mul_mod(b, mul_mod(d, mul_mod(d, d, ell), ell), ell),
        ell,
    };
    let bound = (2.0 * (ell as f64).sqrt()).floor() as i64;
    let seed = ell ^ a.rotate_left(21) ^ b.rotate_left(42);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut candidates: Option<Vec<i64>> = None;
    for round in 0..64 {
        let found = if round % 2 == 0 {
            let Some(pt) = curve.random_point(&mut rng) else { continue };
            curve.trace_candidates(Some(pt), bound)
        } else {
            let Some(pt) = twist.random_point(&mut rng) else { continue };
            let mut ts: Vec<i64> = twist
                .trace_candidates(Some(pt), bound)
                .into_iter()
                .map(|t| -t)
                .collect();
            ts.sort_unstable();
            ts
        };
        let next = match candidates {
            None => found,
            Some(prev) => prev.into_iter().filter(|t| found.binary_search(t).is_ok()).collect(),
        };
        if next.len() == 1 {
            return Ok(next[0]);
        }
        candidates = Some(next);
    }
    log::debug!("bsgs ambiguous at ell = {ell}; counting exhaustively");
    trace_exhaustive(model, ell)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(a: [i64; 5]) -> WeierstrassModel {
        WeierstrassModel::new(a)
    }

    #[test]
    fn small_traces() {
        let e11 = m([0, -1, 1, -10, -20]);
        assert_eq!(trace_of_frobenius(&e11, 2).unwrap(), -2);
        assert_eq!(trace_of_frobenius(&e11, 3).unwrap(), -1);
        assert_eq!(trace_of_frobenius(&e11, 5).unwrap(), 1);
        assert_eq!(trace_of_frobenius(&e11, 7).unwrap(), -2);
        assert_eq!(trace_of_frobenius(&m([0, 0, 1, -1, 0]), 2).unwrap(), -2);
        assert_eq!(trace_of_frobenius(&e11, 11), Err(Error::BadReduction(11)));
    }

    #[test]
    fn bsgs_agrees() {
        let e = m([0, 0, 1, -1, 0]);
        for ell in [101u64, 199, 1009, 10007, 100003] {
            let x = trace_exhaustive(&e, ell).unwrap();
            let y = trace_bsgs(&e, ell).unwrap();
            assert_eq!(x, y, "ell = {ell}");
        }
    }

    #[test]
    fn large_prime_within_hasse() {
        let e = m([0, -1, 1, -10, -20]);
        let ell = 1_000_003u64;
        let t = trace_of_frobenius(&e, ell).unwrap();
        assert!((t * t) as u64 <= 4 * ell);
    }
}
