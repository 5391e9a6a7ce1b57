//! Weierstrass models over Q: invariants, minimal models, Tate's algorithm and conductors.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{self, big_mod, legendre, valuation, valuation_or_max};
use crate::error::{Error, Result};
use crate::pointcount;

/// Long Weierstrass model y² + a1·xy + a3·y = x³ + a2·x² + a4·x + a6.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeierstrassModel {
    pub a1: BigInt,
    pub a2: BigInt,
    pub a3: BigInt,
    pub a4: BigInt,
    pub a6: BigInt,
}

/// The standard b- and c-quantities of a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Invariants {
    pub b2: BigInt,
    pub b4: BigInt,
    pub b6: BigInt,
    pub b8: BigInt,
    pub c4: BigInt,
    pub c6: BigInt,
    pub disc: BigInt,
}

impl WeierstrassModel {
    pub fn new(a: [i64; 5]) -> Self {
        let [a1, a2, a3, a4, a6] = a.map(BigInt::from);
        WeierstrassModel { a1, a2, a3, a4, a6 }
    }

    pub fn from_bigints(a: [BigInt; 5]) -> Self {
        let [a1, a2, a3, a4, a6] = a;
        WeierstrassModel { a1, a2, a3, a4, a6 }
    }

    pub fn coefficients(&self) -> [&BigInt; 5] {
        [&self.a1, &self.a2, &self.a3, &self.a4, &self.a6]
    }

    /// Coefficients as machine integers, when they fit.
    pub fn small_coefficients(&self) -> Option<[i64; 5]> {
        Some([
            self.a1.to_i64()?,
            self.a2.to_i64()?,
            self.a3.to_i64()?,
            self.a4.to_i64()?,
            self.a6.to_i64()?,
        ])
    }

    pub fn invariants(&self) -> Invariants {
        let (a1, a2, a3, a4, a6) = (&self.a1, &self.a2, &self.a3, &self.a4, &self.a6);
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        let c4 = &b2 * &b2 - 24 * &b4;
        let c6: BigInt = 36 * &b2 * &b4 - &b2 * &b2 * &b2 - 216 * &b6;
        let disc: BigInt = 9 * &b2 * &b4 * &b6 - &b2 * &b2 * &b8 - 8 * &b4 * &b4 * &b4 - 27 * &b6 * &b6;
        Invariants { b2, b4, b6, b8, c4, c6, disc }
    }

    pub fn discriminant(&self) -> BigInt {
        self.invariants().disc
    }

    pub fn is_singular(&self) -> bool {
        self.discriminant().is_zero()
    }

    /// j-invariant as a reduced fraction (numerator, denominator > 0).
    pub fn j_invariant(&self) -> Result<(BigInt, BigInt)> {
        let inv = self.invariants();
        if inv.disc.is_zero() {
            return Err(Error::Singular);
        }
        let num = &inv.c4 * &inv.c4 * &inv.c4;
        let g = num.gcd(&inv.disc);
        let (mut n, mut d) = (num / &g, inv.disc / &g);
        if d.is_negative() {
            n = -n;
            d = -d;
        }
        Ok((n, d))
    }

    /// Apply the change of variables x = u²x' + r, y = u³y' + s·u²x' + t.
    /// `u` must divide the resulting numerators (it always does for u = 1).
    pub fn transform(&self, u: &BigInt, r: &BigInt, s: &BigInt, t: &BigInt) -> Self {
        let (a1, a2, a3, a4, a6) = (&self.a1, &self.a2, &self.a3, &self.a4, &self.a6);
        let n1 = a1 + 2 * s;
        let n2 = a2 - s * a1 + 3 * r - s * s;
        let n3 = a3 + r * a1 + 2 * t;
        let n4 = a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t;
        let n6 = a6 + r * a4 + r * r * a2 + r * r * r - t * a3 - t * t - r * t * a1;
        let u2 = u * u;
        let u3 = &u2 * u;
        let u4 = &u2 * &u2;
        let u6 = &u3 * &u3;
        WeierstrassModel {
            a1: n1 / u,
            a2: n2 / u2,
            a3: n3 / u3,
            a4: n4 / u4,
            a6: n6 / u6,
        }
    }

    fn rst(&self, r: &BigInt, s: &BigInt, t: &BigInt) -> Self {
        self.transform(&BigInt::one(), r, s, t)
    }

    /// Divide a_i by u^i (caller guarantees divisibility).
    fn unscale(&self, u: &BigInt) -> Self {
        let z = BigInt::zero();
        self.transform(u, &z, &z, &z)
    }

    /// Rescale by u: a_i ↦ u^i·a_i (the model with Δ multiplied by u¹²).
    pub fn rescale(&self, u: &BigInt) -> Self {
        let u2 = u * u;
        let u3 = &u2 * u;
        WeierstrassModel {
            a1: &self.a1 * u,
            a2: &self.a2 * &u2,
            a3: &self.a3 * &u3,
            a4: &self.a4 * &u2 * &u2,
            a6: &self.a6 * &u3 * &u3,
        }
    }

    /// Short model (a, b) with y² = x³ + a·x + b isomorphic over Q, reduced so that
    /// no twelfth power divides gcd(a³, b²).
    pub fn short_model(&self) -> Result<(BigInt, BigInt)> {
        let inv = self.invariants();
        if inv.disc.is_zero() {
            return Err(Error::Singular);
        }
        let mut a: BigInt = -27 * &inv.c4;
        let mut b: BigInt = -54 * &inv.c6;
        let g = if a.is_zero() {
            b.abs()
        } else if b.is_zero() {
            a.abs()
        } else {
            a.gcd(&b)
        };
        for (p, _) in arith::factor_bigint(&g) {
            let p = BigInt::from(p);
            let p4 = p.pow(4);
            let p6 = p.pow(6);
            while (&a % &p4).is_zero() && (&b % &p6).is_zero() {
                a /= &p4;
                b /= &p6;
            }
        }
        Ok((a, b))
    }
}

impl fmt::Display for WeierstrassModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{},{},{}]", self.a1, self.a2, self.a3, self.a4, self.a6)
    }
}

impl FromStr for WeierstrassModel {
    type Err = Error;

    /// Accepts "[a1,a2,a3,a4,a6]" or "a1,a2,a3,a4,a6".
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('[').trim_end_matches(']');
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected 5 coefficients, found {}", parts.len()),
            });
        }
        let mut out: Vec<BigInt> = Vec::with_capacity(5);
        for p in parts {
            out.push(p.parse::<BigInt>().map_err(|e| Error::Parse {
                line: 0,
                msg: format!("bad coefficient {p:?}: {e}"),
            })?);
        }
        let arr: [BigInt; 5] = out.try_into().expect("length checked");
        Ok(WeierstrassModel::from_bigints(arr))
    }
}

/// Centered residue of `x` modulo `m` in (-m/2, m/2].
fn centered_mod(x: &BigInt, m: i64) -> BigInt {
    let m = BigInt::from(m);
    let mut r = x.mod_floor(&m);
    if &r * 2 > m {
        r -= &m;
    }
    r
}

/// Reduced model built from (c4, c6) satisfying Kraus' conditions.
fn model_from_c4c6(c4: &BigInt, c6: &BigInt) -> WeierstrassModel {
    let b2 = centered_mod(&(-c6), 12);
    let b4 = (&b2 * &b2 - c4) / 24;
    let b6: BigInt = (36 * &b2 * &b4 - &b2 * &b2 * &b2 - c6) / 216;
    let two = BigInt::from(2);
    let a1 = b2.mod_floor(&two);
    let a3 = b6.mod_floor(&two);
    let a2 = (&b2 - &a1) / 4;
    let a4 = (&b4 - &a1 * &a3) / 2;
    let a6 = (&b6 - &a3) / 4;
    WeierstrassModel { a1, a2, a3, a4, a6 }
}

/// Kraus' local integrality conditions at 2 and 3 for scaled (c4, c6).
fn kraus_ok(p: u64, c4: &BigInt, c6: &BigInt) -> bool {
    match p {
        2 => {
            let b4 = c6.mod_floor(&BigInt::from(4));
            let a16 = c4.mod_floor(&BigInt::from(16));
            let b32 = c6.mod_floor(&BigInt::from(32));
            b4 == BigInt::from(3) || (a16.is_zero() && (b32.is_zero() || b32 == BigInt::from(8)))
        }
        3 => valuation(c6, 3) != Some(2),
        _ => true,
    }
}

/// Globally minimal integral model in reduced form (a1, a3 ∈ {0,1}, a2 ∈ {-1,0,1}).
pub fn minimal_model(model: &WeierstrassModel) -> Result<WeierstrassModel> {
    let inv = model.invariants();
    if inv.disc.is_zero() {
        return Err(Error::Singular);
    }
    let (mut c4, mut c6) = (inv.c4.clone(), inv.c6.clone());
    let g = if c4.is_zero() { c6.abs() } else { c4.gcd(&c6) };
    let disc = inv.disc.clone();
    for (p, _) in arith::factor_bigint(&g) {
        let p = p.to_u64().unwrap_or(u64::MAX);
        if p == u64::MAX {
            // a prime this large cannot have p^12 | Δ for any practical input; skip scaling.
            continue;
        }
        let vd = valuation_or_max(&disc, p) / 12;
        let v4 = valuation_or_max(&c4, p) / 4;
        let v6 = valuation_or_max(&c6, p) / 6;
        let mut d = vd.min(v4).min(v6);
        let bp = BigInt::from(p);
        while d > 0 {
            let u = bp.pow(d);
            let sc4 = &c4 / u.pow(4);
            let sc6 = &c6 / u.pow(6);
            if kraus_ok(p, &sc4, &sc6) {
                c4 = sc4;
                c6 = sc6;
                break;
            }
            d -= 1;
        }
    }
    // Scaling at p = 2 or 3 may be unnecessary but the reduction step needs
    // Kraus' conditions on the final pair; they hold for any integral model.
    Ok(model_from_c4c6(&c4, &c6))
}

/// Reduction type of a model at a prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReductionKind {
    Good,
    SplitMultiplicative,
    NonsplitMultiplicative,
    Additive,
}

impl ReductionKind {
    pub fn is_multiplicative(self) -> bool {
        matches!(self, ReductionKind::SplitMultiplicative | ReductionKind::NonsplitMultiplicative)
    }
}

/// Local data at one prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalReduction {
    pub ell: u64,
    pub kind: ReductionKind,
    /// Valuation of the minimal discriminant at `ell`.
    pub v_disc: u32,
    /// a_ℓ for good reduction; +1 / −1 / 0 for split / nonsplit / additive.
    pub trace: i64,
    /// Exponent of `ell` in the conductor.
    pub conductor_exponent: u32,
}

struct TateOutcome {
    kind: ReductionKind,
    v_disc: u32,
    f: u32,
}

fn v(x: &BigInt, p: u64) -> u32 {
    valuation_or_max(x, p)
}

fn root_mod<F: Fn(u64) -> bool>(p: u64, pred: F) -> u64 {
    (0..p).find(|&x| pred(x)).expect("root exists by Tate's algorithm")
}

fn eval_mod(coeffs: &[&BigInt], x: u64, p: u64) -> u64 {
    // Horner, highest degree first.
    let mut acc = 0u64;
    for c in coeffs {
        acc = (acc * x + big_mod(c, p)) % p;
    }
    acc
}

/// Tate's algorithm with brute-force root finding over F_p, so intended for small p.
fn tate_small(model: &WeierstrassModel, p: u64) -> TateOutcome {
    let bp = BigInt::from(p);
    let big = |x: u64| BigInt::from(x);
    let zero = BigInt::zero();
    let mut c = model.clone();
    loop {
        let inv = c.invariants();
        let n = v(&inv.disc, p);
        if n == 0 {
            return TateOutcome { kind: ReductionKind::Good, v_disc: 0, f: 0 };
        }
        // Move the singular point of the reduction to (0, 0).
        let (x0, y0) = {
            let mut found = None;
            'search: for x in 0..p {
                for y in 0..p {
                    let (xb, yb) = (big(x), big(y));
                    let f = &yb * &yb + &c.a1 * &xb * &yb + &c.a3 * &yb
                        - (&xb * &xb * &xb + &c.a2 * &xb * &xb + &c.a4 * &xb + &c.a6);
                    let fx = &c.a1 * &yb - (3 * &xb * &xb + 2 * &c.a2 * &xb + &c.a4);
                    let fy = 2 * &yb + &c.a1 * &xb + &c.a3;
                    if big_mod(&f, p) == 0 && big_mod(&fx, p) == 0 && big_mod(&fy, p) == 0 {
                        found = Some((x, y));
                        break 'search;
                    }
                }
            }
            found.expect("singular point exists when p | Δ")
        };
        c = c.rst(&big(x0), &zero, &big(y0));
        let inv = c.invariants();
        if v(&inv.c4, p) == 0 {
            let split = if p == 2 {
                big_mod(&c.a2, 2) == 0
            } else {
                legendre(big_mod(&inv.b2, p) as i64, p) == 1
            };
            let kind = if split {
                ReductionKind::SplitMultiplicative
            } else {
                ReductionKind::NonsplitMultiplicative
            };
            return TateOutcome { kind, v_disc: n, f: 1 };
        }
        let additive = |f: u32| TateOutcome { kind: ReductionKind::Additive, v_disc: n, f };
        if v(&c.a6, p) < 2 {
            return additive(n);
        }
        if v(&inv.b8, p) < 3 {
            return additive(n - 1);
        }
        if v(&inv.b6, p) < 3 {
            return additive(n - 2);
        }
        // Arrange p | a1, a2; p² | a3, a4; p³ | a6.
        let p2 = p * p;
        let p3 = p2 * p;
        let mut adjusted = None;
        'st: for s in 0..p {
            for t in 0..p3 {
                let m = c.rst(&zero, &big(s), &big(t));
                if v(&m.a1, p) >= 1
                    && v(&m.a2, p) >= 1
                    && v(&m.a3, p) >= 2
                    && v(&m.a4, p) >= 2
                    && v(&m.a6, p) >= 3
                {
                    adjusted = Some(m);
                    break 'st;
                }
            }
        }
        c = adjusted.expect("Tate step 7 change of coordinates exists");
        let b = &c.a2 / &bp;
        let cc = &c.a4 / bp.pow(2);
        let d = &c.a6 / bp.pow(3);
        let w = 27 * &d * &d - &b * &b * &cc * &cc + 4 * &b * &b * &b * &d - 18 * &b * &cc * &d
            + 4 * &cc * &cc * &cc;
        let x = 3 * &cc - &b * &b;
        if v(&w, p) == 0 {
            return additive(n - 4);
        }
        let one = BigInt::one();
        if v(&x, p) == 0 {
            // Double root: move it to 0 and run the I_m^* subprocedure.
            let cubic = [&one, &b, &cc, &d];
            let three = BigInt::from(3);
            let two_b = 2 * &b;
            let deriv = [&three, &two_b, &cc];
            let r = root_mod(p, |t| eval_mod(&cubic, t, p) == 0 && eval_mod(&deriv, t, p) == 0);
            c = c.rst(&big(p * r), &zero, &zero);
            let mut ix = 3u32;
            let mut iy = 3u32;
            let mut mx = BigInt::from(p2);
            let mut my = BigInt::from(p2);
            let m = loop {
                let a2t = &c.a2 / &bp;
                let a3t = &c.a3 / &my;
                let a6t = &c.a6 / (&mx * &my);
                if v(&(&a3t * &a3t + 4 * &a6t), p) == 0 {
                    break ix + iy - 5;
                }
                let neg_a6t = -&a6t;
                let quad = [&one, &a3t, &neg_a6t];
                let y = root_mod(p, |y| eval_mod(&quad, y, p) == 0);
                c = c.rst(&zero, &zero, &(&my * big(y)));
                my *= &bp;
                iy += 1;
                let a4t = &c.a4 / (&bp * &mx);
                let a6t = &c.a6 / (&mx * &my);
                if v(&(&a4t * &a4t - 4 * &a6t * &a2t), p) == 0 {
                    break ix + iy - 5;
                }
                let quad = [&a2t, &a4t, &a6t];
                let xr = root_mod(p, |x| eval_mod(&quad, x, p) == 0);
                c = c.rst(&(&mx * big(xr)), &zero, &zero);
                mx *= &bp;
                ix += 1;
            };
            return additive(n - m - 4);
        }
        // Triple root.
        let cubic = [&one, &b, &cc, &d];
        let r = root_mod(p, |t| eval_mod(&cubic, t, p) == 0);
        c = c.rst(&big(p * r), &zero, &zero);
        let x3 = &c.a3 / bp.pow(2);
        let x6 = &c.a6 / bp.pow(4);
        if v(&(&x3 * &x3 + 4 * &x6), p) == 0 {
            return additive(n - 6);
        }
        let neg_x6 = -&x6;
        let quad = [&one, &x3, &neg_x6];
        let y = root_mod(p, |y| eval_mod(&quad, y, p) == 0);
        c = c.rst(&zero, &zero, &(bp.pow(2) * big(y)));
        if v(&c.a4, p) < 4 {
            return additive(n - 7);
        }
        if v(&c.a6, p) < 6 {
            return additive(n - 8);
        }
        // Not minimal at p: scale down and start over.
        c = c.unscale(&bp);
    }
}

/// Local data for primes ≥ 5 from the valuations of c4, Δ (model minimal at p).
fn tate_large(model: &WeierstrassModel, p: u64) -> TateOutcome {
    let mut c = model.clone();
    let bp = BigInt::from(p);
    loop {
        let inv = c.invariants();
        let n = v(&inv.disc, p);
        if n == 0 {
            return TateOutcome { kind: ReductionKind::Good, v_disc: 0, f: 0 };
        }
        if n >= 12 && v(&inv.c4, p) >= 4 && v(&inv.c6, p) >= 6 {
            // Non-minimal at p ≥ 5: rescale through (c4, c6).
            let c4 = &inv.c4 / bp.pow(4);
            let c6 = &inv.c6 / bp.pow(6);
            c = model_from_c4c6(&c4, &c6);
            continue;
        }
        if v(&inv.c4, p) == 0 {
            let split = legendre(-(big_mod(&inv.c6, p) as i64), p) == 1;
            let kind = if split {
                ReductionKind::SplitMultiplicative
            } else {
                ReductionKind::NonsplitMultiplicative
            };
            return TateOutcome { kind, v_disc: n, f: 1 };
        }
        return TateOutcome { kind: ReductionKind::Additive, v_disc: n, f: 2 };
    }
}

fn tate(model: &WeierstrassModel, p: u64) -> TateOutcome {
    if p <= 3 {
        tate_small(model, p)
    } else {
        tate_large(model, p)
    }
}

/// Local reduction data at `ell`. The model should be minimal at `ell`.
pub fn reduction_at(model: &WeierstrassModel, ell: u64) -> Result<LocalReduction> {
    if !arith::is_prime(ell) {
        return Err(Error::NotPrime(ell));
    }
    if model.is_singular() {
        return Err(Error::Singular);
    }
    let out = tate(model, ell);
    let trace = match out.kind {
        ReductionKind::Good => pointcount::trace_of_frobenius(&local_good_model(model, ell)?, ell)?,
        ReductionKind::SplitMultiplicative => 1,
        ReductionKind::NonsplitMultiplicative => -1,
        ReductionKind::Additive => 0,
    };
    Ok(LocalReduction {
        ell,
        kind: out.kind,
        v_disc: out.v_disc,
        trace,
        conductor_exponent: out.f,
    })
}

/// A model with unit discriminant at ell when the curve has good reduction there.
fn local_good_model(model: &WeierstrassModel, ell: u64) -> Result<WeierstrassModel> {
    if big_mod(&model.discriminant(), ell) != 0 {
        Ok(model.clone())
    } else {
        minimal_model(model)
    }
}

/// Exponent of `ell` in the conductor.
pub fn conductor_exponent(model: &WeierstrassModel, ell: u64) -> u32 {
    tate(model, ell).f
}

/// Conductor of the curve; computed on the global minimal model.
pub fn conductor(model: &WeierstrassModel) -> Result<u64> {
    let min = minimal_model(model)?;
    let disc = min.discriminant();
    let mut n: u64 = 1;
    for (p, _) in arith::factor_bigint(&disc) {
        let p = p.to_u64().expect("bad prime fits in u64");
        let f = tate(&min, p).f;
        n = n
            .checked_mul(p.checked_pow(f).expect("conductor overflow"))
            .expect("conductor overflow");
    }
    Ok(n)
}

/// Primes of bad reduction (those dividing the minimal discriminant), ascending.
pub fn bad_primes(model: &WeierstrassModel) -> Result<Vec<u64>> {
    let min = minimal_model(model)?;
    Ok(arith::factor_bigint(&min.discriminant())
        .into_iter()
        .map(|(p, _)| p.to_u64().expect("bad prime fits in u64"))
        .collect())
}

/// One curve from a database, together with its conductor and optional modular degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveRecord {
    pub label: String,
    pub model: WeierstrassModel,
    pub conductor: u64,
    /// Isogeny class key: conductor followed by the class letters, e.g. "11a".
    pub isogeny_class: String,
    /// Index of the curve inside its class (1 is the class representative).
    pub number: u32,
    pub modular_degree: Option<u64>,
}

/// Classes whose Gamma_0(N)-optimal curve is not number 1 in Cremona's ordering.
const OPTIMAL_EXCEPTIONS: &[(&str, u32)] = &[("990h", 3)];

impl CurveRecord {
    /// Whether this is the Gamma_0(N)-optimal curve of its isogeny class.
    pub fn is_optimal(&self) -> bool {
        let want = OPTIMAL_EXCEPTIONS
            .iter()
            .find(|(c, _)| *c == self.isogeny_class)
            .map_or(1, |&(_, k)| k);
        self.number == want
    }

    /// Build a record from a model, computing the conductor.
    pub fn from_model(label: impl Into<String>, model: WeierstrassModel) -> Result<Self> {
        let model = minimal_model(&model)?;
        let conductor = conductor(&model)?;
        let label = label.into();
        let (isogeny_class, number) = split_label(&label)
            .map(|(n, letters, k)| (format!("{n}{letters}"), k))
            .unwrap_or_else(|| (label.clone(), 1));
        Ok(CurveRecord {
            label,
            model,
            conductor,
            isogeny_class,
            number,
            modular_degree: None,
        })
    }

    pub fn with_degree(mut self, degree: u64) -> Self {
        self.modular_degree = Some(degree);
        self
    }

    /// Local data at `ell` on the stored (minimal) model.
    pub fn reduction_at(&self, ell: u64) -> Result<LocalReduction> {
        reduction_at(&self.model, ell)
    }

    pub fn bad_primes(&self) -> Vec<u64> {
        arith::prime_divisors(self.conductor)
    }

    pub fn has_good_reduction_at(&self, p: u64) -> bool {
        !self.conductor.is_multiple_of(p)
    }

    /// a_ℓ for ℓ ∤ N.
    pub fn trace_at(&self, ell: u64) -> Result<i64> {
        if self.conductor.is_multiple_of(ell) {
            return Err(Error::BadReduction(ell));
        }
        pointcount::trace_of_frobenius(&self.model, ell)
    }
}

/// Split a Cremona label like "11a1" or "990h3" into (conductor, letters, number).
pub fn split_label(label: &str) -> Option<(u64, String, u32)> {
    let digits_end = label.find(|c: char| !c.is_ascii_digit())?;
    let rest = &label[digits_end..];
    let letters_end = rest.find(|c: char| c.is_ascii_digit())?;
    let n = label[..digits_end].parse().ok()?;
    let letters = rest[..letters_end].to_string();
    if letters.is_empty() || !letters.chars().all(|c| c.is_ascii_lowercase()) {
        return None;
    }
    let k = rest[letters_end..].parse().ok()?;
    Some((n, letters, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(a: [i64; 5]) -> WeierstrassModel {
        WeierstrassModel::new(a)
    }

    #[test]
    fn discriminants() {
        assert_eq!(m([0, -1, 1, -10, -20]).discriminant(), BigInt::from(-161051));
        assert_eq!(m([0, 0, 0, 0, 1]).discriminant(), BigInt::from(-432));
        assert_eq!(m([0, 0, 0, 0, 0]).discriminant(), BigInt::zero());
    }

    #[test]
    fn c4_c6_identity() {
        let inv = m([1, 0, 1, 4, -6]).invariants();
        assert_eq!(
            1728 * &inv.disc,
            &inv.c4 * &inv.c4 * &inv.c4 - &inv.c6 * &inv.c6
        );
    }

    #[test]
    fn minimal_models() {
        let e = m([0, -1, 1, -10, -20]);
        assert_eq!(minimal_model(&e).unwrap(), e);
        let scaled = e.rescale(&BigInt::from(2));
        assert_eq!(scaled.discriminant(), e.discriminant() * BigInt::from(4096));
        assert_eq!(minimal_model(&scaled).unwrap(), e);
        assert_eq!(minimal_model(&m([0, 0, 0, 0, 64])).unwrap(), m([0, 0, 0, 0, 1]));
        assert_eq!(minimal_model(&m([0, 0, 0, 0, 0])), Err(Error::Singular));
    }

    #[test]
    fn minimal_model_after_translation() {
        // x -> x + 3, y -> y + 2x + 5 then scale by 6
        let e = m([1, 0, 1, 4, -6]);
        let t = e.transform(&BigInt::one(), &BigInt::from(3), &BigInt::from(2), &BigInt::from(5));
        let big = t.rescale(&BigInt::from(6));
        assert_eq!(minimal_model(&big).unwrap(), e);
    }

    #[test]
    fn reductions_of_11a1() {
        let e = m([0, -1, 1, -10, -20]);
        let r = reduction_at(&e, 11).unwrap();
        assert_eq!(r.kind, ReductionKind::SplitMultiplicative);
        assert_eq!(r.v_disc, 5);
        assert_eq!(r.trace, 1);
        let r7 = reduction_at(&e, 7).unwrap();
        assert_eq!(r7.kind, ReductionKind::Good);
        assert_eq!(r7.v_disc, 0);
        assert_eq!(r7.trace, -2);
    }

    #[test]
    fn additive_at_3() {
        let r = reduction_at(&m([0, 0, 0, 0, 1]), 3).unwrap();
        assert_eq!(r.kind, ReductionKind::Additive);
        assert_eq!(r.v_disc, 3);
        assert_eq!(r.trace, 0);
    }

    #[test]
    fn conductors() {
        assert_eq!(conductor(&m([0, -1, 1, -10, -20])).unwrap(), 11);
        assert_eq!(conductor(&m([0, 0, 1, -1, 0])).unwrap(), 37);
        assert_eq!(conductor(&m([1, 0, 1, 4, -6])).unwrap(), 14);
        // y² = x³ + 1 has conductor 36, y² = x³ - x conductor 32
        assert_eq!(conductor(&m([0, 0, 0, 0, 1])).unwrap(), 36);
        assert_eq!(conductor(&m([0, 0, 0, -1, 0])).unwrap(), 32);
        assert_eq!(conductor(&m([0, 0, 0, 0, 0])), Err(Error::Singular));
    }

    #[test]
    fn labels() {
        assert_eq!(split_label("11a1"), Some((11, "a".into(), 1)));
        assert_eq!(split_label("3990ba12"), Some((3990, "ba".into(), 12)));
        assert_eq!(split_label("x11"), None);
    }

    #[test]
    fn short_models() {
        assert_eq!(m([0, 0, 0, -1, 0]).short_model().unwrap(), (BigInt::from(-1), BigInt::zero()));
        assert_eq!(m([0, 0, 0, 0, 1]).short_model().unwrap(), (BigInt::zero(), BigInt::one()));
    }
}
