//! The residual representation ρ̄_{E,p}: irreducibility, ramification at bad
//! primes, and local H⁰ of the twisted adjoint Ad⁰ρ̄(1).

use std::collections::BTreeMap;

use crate::arith::{self, is_prime, is_squarefree, pow_mod, primitive_root};
use crate::ec::{CurveRecord, ReductionKind};
use crate::error::{Error, Result};
use crate::linalg::{inv_fp, FpMatrix};
use crate::modsym::sturm_bound;
use crate::pointcount::TraceCache;

/// Primes that occur as degrees of rational isogenies of elliptic curves over Q.
pub const MAZUR_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 37, 43, 67, 163];

/// 2×2 matrix over F_p, entries [[a, b], [c, d]].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mat2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl Mat2 {
    pub fn new(a: i64, b: i64, c: i64, d: i64, p: u64) -> Self {
        let r = |x: i64| x.rem_euclid(p as i64) as u64;
        Mat2 { a: r(a), b: r(b), c: r(c), d: r(d) }
    }

    pub fn identity() -> Self {
        Mat2 { a: 1, b: 0, c: 0, d: 1 }
    }

    pub fn det(&self, p: u64) -> u64 {
        (self.a * self.d % p + p - self.b * self.c % p) % p
    }

    pub fn mul(&self, o: &Mat2, p: u64) -> Mat2 {
        Mat2 {
            a: (self.a * o.a + self.b * o.c) % p,
            b: (self.a * o.b + self.b * o.d) % p,
            c: (self.c * o.a + self.d * o.c) % p,
            d: (self.c * o.b + self.d * o.d) % p,
        }
    }

    pub fn inverse(&self, p: u64) -> Option<Mat2> {
        let det = self.det(p);
        if det == 0 {
            return None;
        }
        let i = inv_fp(det as u32, p as u32) as u64;
        Some(Mat2 {
            a: self.d * i % p,
            b: (p - self.b) % p * i % p,
            c: (p - self.c) % p * i % p,
            d: self.a * i % p,
        })
    }

    pub fn pow(&self, mut e: u64, p: u64) -> Mat2 {
        let mut acc = Mat2::identity();
        let mut base = *self;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base, p);
            }
            base = base.mul(&base, p);
            e >>= 1;
        }
        acc
    }
}

/// A trace-zero 2×2 matrix x·E + y·F + z·H with E = [[0,1],[0,0]], F = [[0,0],[1,0]], H = diag(1,−1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdjointElement {
    pub e: u64,
    pub f: u64,
    pub h: u64,
}

impl AdjointElement {
    pub fn to_matrix(&self, p: u64) -> Mat2 {
        Mat2 { a: self.h % p, b: self.e % p, c: self.f % p, d: (p - self.h % p) % p }
    }

    /// Coordinates of a matrix known to have trace zero.
    pub fn from_matrix(m: &Mat2, p: u64) -> Self {
        debug_assert_eq!((m.a + m.d) % p, 0);
        AdjointElement { e: m.b, f: m.c, h: m.a }
    }
}

/// 3×3 matrix (columns = images of E, F, H) of X ↦ t·g X g⁻¹ − X.
fn adjoint_minus_identity(g: &Mat2, twist: u64, p: u64) -> Result<FpMatrix> {
    let gi = g.inverse(p).ok_or(Error::SingularMatrix)?;
    let basis = [
        AdjointElement { e: 1, f: 0, h: 0 },
        AdjointElement { e: 0, f: 1, h: 0 },
        AdjointElement { e: 0, f: 0, h: 1 },
    ];
    let mut m = FpMatrix::zeros(p as u32, 3, 3);
    for (j, x) in basis.iter().enumerate() {
        let y = g.mul(&x.to_matrix(p), p).mul(&gi, p);
        let y = AdjointElement::from_matrix(&y, p);
        let col = [y.e, y.f, y.h];
        let orig = [x.e, x.f, x.h];
        for i in 0..3 {
            let v = (twist % p * col[i] + p - orig[i]) % p;
            m.set(i, j, v as u32);
        }
    }
    Ok(m)
}

/// Dimension of the subspace of Ad⁰ fixed by every generator g acting as X ↦ t_g·g X g⁻¹.
pub fn fixed_space_dim(generators: &[Mat2], twists: &[u64], p: u64) -> Result<usize> {
    assert_eq!(generators.len(), twists.len(), "one twist per generator");
    let mut stacked = FpMatrix::zeros(p as u32, 0, 3);
    for (g, &t) in generators.iter().zip(twists) {
        if t % p == 0 {
            return Err(Error::SingularMatrix);
        }
        stacked = stacked.vstack(&adjoint_minus_identity(g, t, p)?);
    }
    Ok(3 - stacked.rank())
}

/// Restriction of ρ̄ to a decomposition group at a multiplicative prime (Tate curve model).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalRepresentation {
    pub ell: u64,
    pub p: u64,
    pub frobenius: Mat2,
    /// Generator of the tame inertia image; `None` when unramified.
    pub tame: Option<Mat2>,
    /// χ̄(Frob_ℓ) = ℓ mod p.
    pub cyclotomic_value: u64,
}

impl LocalRepresentation {
    /// Tate-curve shape: Frobenius η(ℓ)·diag(ℓ, 1), tame generator [[1,1],[0,1]] when ramified.
    pub fn tate_curve(ell: u64, p: u64, split: bool, ramified: bool) -> Self {
        let eta: i64 = if split { 1 } else { -1 };
        let l = (ell % p) as i64;
        LocalRepresentation {
            ell,
            p,
            frobenius: Mat2::new(eta * l, 0, 0, eta, p),
            tame: ramified.then(|| Mat2::new(1, 1, 0, 1, p)),
            cyclotomic_value: ell % p,
        }
    }

    /// dim H⁰ of Ad⁰ twisted by the cyclotomic character (trivial on inertia).
    pub fn h0_twisted(&self) -> Result<usize> {
        let mut gens = vec![self.frobenius];
        let mut twists = vec![self.cyclotomic_value];
        if let Some(t) = self.tame {
            gens.push(t);
            twists.push(1);
        }
        fixed_space_dim(&gens, &twists, self.p)
    }
}

/// Local H⁰ of Ad⁰ρ̄(1): a dimension, or not computed when the shape of ρ̄ at ℓ
/// cannot be pinned down (unramified with ℓ ≡ 1 mod p).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum H0Star {
    Computed(usize),
    NotComputed,
}

impl H0Star {
    pub fn value(self) -> Option<usize> {
        match self {
            H0Star::Computed(d) => Some(d),
            H0Star::NotComputed => None,
        }
    }
}

fn multiplicative_checks(curve: &CurveRecord, p: u64, ell: u64) -> Result<crate::ec::LocalReduction> {
    if ell == p {
        return Err(Error::EllEqualsP { ell, p });
    }
    if !curve.conductor.is_multiple_of(ell) {
        return Err(Error::NotBadPrime { ell, conductor: curve.conductor });
    }
    let red = curve.reduction_at(ell)?;
    if red.kind == ReductionKind::Additive {
        return Err(Error::AdditiveReduction(ell));
    }
    Ok(red)
}

/// ρ̄ is ramified at a multiplicative prime ℓ iff p ∤ v_ℓ(Δ_min).
pub fn is_ramified_at(curve: &CurveRecord, p: u64, ell: u64) -> Result<bool> {
    let red = multiplicative_checks(curve, p, ell)?;
    Ok(!(red.v_disc as u64).is_multiple_of(p))
}

/// dim H⁰(G_ℓ, Ad⁰ρ̄*) at a multiplicative prime ℓ.
pub fn local_h0_star(curve: &CurveRecord, p: u64, ell: u64) -> Result<usize> {
    match local_h0_star_marked(curve, p, ell)? {
        H0Star::Computed(d) => Ok(d),
        H0Star::NotComputed => Err(Error::NotComputed(ell)),
    }
}

pub fn local_h0_star_marked(curve: &CurveRecord, p: u64, ell: u64) -> Result<H0Star> {
    let red = multiplicative_checks(curve, p, ell)?;
    let ramified = !(red.v_disc as u64).is_multiple_of(p);
    if !ramified && ell % p == 1 {
        return Ok(H0Star::NotComputed);
    }
    let split = red.kind == ReductionKind::SplitMultiplicative;
    let rep = LocalRepresentation::tate_curve(ell, p, split, ramified);
    Ok(H0Star::Computed(rep.h0_twisted()?))
}

/// F_p-valued Dirichlet characters modulo a squarefree N, as exponent vectors.
struct CharacterGroup {
    p: u64,
    /// primitive root of F_p
    w: u64,
    /// per odd prime q | N: (q, discrete-log table mod q, step (p−1)/m_q, m_q)
    factors: Vec<(u64, Vec<u64>, u64, u64)>,
}

impl CharacterGroup {
    fn new(n: u64, p: u64) -> Self {
        let w = primitive_root(p).expect("p prime");
        let mut factors = Vec::new();
        for q in arith::prime_divisors(n) {
            if q == 2 {
                continue;
            }
            let g = primitive_root(q).expect("q prime");
            let mut dlog = vec![0u64; q as usize];
            let mut x = 1u64;
            for k in 0..q - 1 {
                dlog[x as usize] = k;
                x = x * g % q;
            }
            let m = arith::gcd(q - 1, p - 1);
            factors.push((q, dlog, (p - 1) / m, m));
        }
        CharacterGroup { p, w, factors }
    }

    fn all(&self) -> Vec<Vec<u64>> {
        let mut out = vec![Vec::new()];
        for (_, _, _, m) in &self.factors {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..*m).map(move |j| {
                        let mut v = v.clone();
                        v.push(j);
                        v
                    })
                })
                .collect();
        }
        out
    }

    /// ε(ℓ) for ℓ prime to N.
    fn eval(&self, chi: &[u64], ell: u64) -> u64 {
        let mut e = 0u64;
        for (k, (q, dlog, step, _)) in self.factors.iter().enumerate() {
            e += step * chi[k] % (self.p - 1) * dlog[(ell % q) as usize];
            e %= self.p - 1;
        }
        pow_mod(self.w, e, self.p)
    }
}

/// Sturm bound used by the Eisenstein screen.
pub fn eisenstein_screen_bound(n: u64, p: u64) -> u64 {
    sturm_bound(n * p * p)
}

/// True iff ρ̄_{E,p} is irreducible; see [`is_irreducible_with`].
pub fn is_irreducible(curve: &CurveRecord, p: u64) -> Result<bool> {
    let mut traces = TraceCache::new(curve.model.clone());
    is_irreducible_with(curve, p, &mut traces)
}

/// Irreducibility test. Outside Mazur's list of isogeny degrees the answer is
/// immediate; otherwise ρ̄ is reducible iff some F_p-valued character ε mod N
/// satisfies a_ℓ ≡ ε(ℓ)ℓ + ε(ℓ)⁻¹ for all good ℓ up to the Sturm bound at level N·p².
pub fn is_irreducible_with(curve: &CurveRecord, p: u64, traces: &mut TraceCache) -> Result<bool> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if curve.conductor.is_multiple_of(p) {
        return Err(Error::BadReduction(p));
    }
    if !is_squarefree(curve.conductor) {
        return Err(Error::NotSquarefree(curve.conductor));
    }
    if !MAZUR_PRIMES.contains(&p) {
        return Ok(true);
    }
    Ok(reducing_character(curve, p, traces, eisenstein_screen_bound(curve.conductor, p))?.is_none())
}

/// A character ε (given by its values on the primes up to `bound`) witnessing reducibility.
pub fn reducing_character(
    curve: &CurveRecord,
    p: u64,
    traces: &mut TraceCache,
    bound: u64,
) -> Result<Option<BTreeMap<u64, u64>>> {
    let n = curve.conductor;
    let group = CharacterGroup::new(n, p);
    let mut alive = group.all();
    for ell in arith::primes_up_to(bound) {
        if n.is_multiple_of(ell) || ell == p {
            continue;
        }
        let a = traces.get(ell)?.rem_euclid(p as i64) as u64;
        let l = ell % p;
        alive.retain(|chi| {
            let e = group.eval(chi, ell);
            let einv = inv_fp(e as u32, p as u32) as u64;
            (e * l + einv) % p == a
        });
        if alive.is_empty() {
            return Ok(None);
        }
    }
    let chi = &alive[0];
    let values = arith::primes_up_to(bound)
        .into_iter()
        .filter(|&l| !n.is_multiple_of(l))
        .map(|l| (l, group.eval(chi, l)))
        .collect();
    Ok(Some(values))
}

/// Residual data for (E, p) over the bad primes of E.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualProfile {
    pub curve: CurveRecord,
    pub p: u64,
    pub irreducible: bool,
    pub bad_primes: Vec<u64>,
    pub ramified: BTreeMap<u64, bool>,
    pub h0_star: BTreeMap<u64, H0Star>,
}

impl ResidualProfile {
    pub fn build(curve: &CurveRecord, p: u64) -> Result<Self> {
        let mut traces = TraceCache::new(curve.model.clone());
        Self::build_with(curve, p, &mut traces)
    }

    pub fn build_with(curve: &CurveRecord, p: u64, traces: &mut TraceCache) -> Result<Self> {
        let irreducible = is_irreducible_with(curve, p, traces)?;
        let bad_primes = curve.bad_primes();
        let mut ramified = BTreeMap::new();
        let mut h0_star = BTreeMap::new();
        for &ell in &bad_primes {
            ramified.insert(ell, is_ramified_at(curve, p, ell)?);
            h0_star.insert(ell, local_h0_star_marked(curve, p, ell)?);
        }
        Ok(ResidualProfile { curve: curve.clone(), p, irreducible, bad_primes, ramified, h0_star })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ec::WeierstrassModel;

    fn curve(label: &str, a: [i64; 5]) -> CurveRecord {
        CurveRecord::from_model(label, WeierstrassModel::new(a)).unwrap()
    }

    #[test]
    fn fixed_spaces() {
        let p = 5;
        assert_eq!(fixed_space_dim(&[Mat2::identity()], &[1], p).unwrap(), 3);
        let d = Mat2::new(2, 0, 0, 1, p);
        assert_eq!(fixed_space_dim(&[d], &[1], p).unwrap(), 1);
        let u = Mat2::new(1, 1, 0, 1, p);
        assert_eq!(fixed_space_dim(&[d, u], &[1, 1], p).unwrap(), 0);
        assert_eq!(fixed_space_dim(&[Mat2::new(1, 2, 2, 4, p)], &[1], p), Err(Error::SingularMatrix));
    }

    #[test]
    fn ramification() {
        let e11 = curve("11a1", [0, -1, 1, -10, -20]);
        let e37 = curve("37a1", [0, 0, 1, -1, 0]);
        assert!(!is_ramified_at(&e11, 5, 11).unwrap());
        assert!(is_ramified_at(&e11, 7, 11).unwrap());
        assert!(is_ramified_at(&e37, 5, 37).unwrap());
        assert_eq!(is_ramified_at(&e11, 11, 11), Err(Error::EllEqualsP { ell: 11, p: 11 }));
    }

    #[test]
    fn local_h0() {
        let e11 = curve("11a1", [0, -1, 1, -10, -20]);
        let e37 = curve("37a1", [0, 0, 1, -1, 0]);
        assert_eq!(local_h0_star(&e11, 7, 11).unwrap(), 0);
        assert_eq!(local_h0_star(&e37, 5, 37).unwrap(), 0);
        // 11 ≡ 1 (mod 5) and unramified
        assert_eq!(local_h0_star(&e11, 5, 11), Err(Error::NotComputed(11)));
        // unramified, ℓ ≢ ±1: nonzero
        let rep = LocalRepresentation::tate_curve(11, 7, true, false);
        assert_eq!(rep.h0_twisted().unwrap(), 1);
        let rep = LocalRepresentation::tate_curve(13, 7, false, false);
        assert_eq!(rep.h0_twisted().unwrap(), 2);
    }

    #[test]
    fn irreducibility() {
        let e11 = curve("11a1", [0, -1, 1, -10, -20]);
        let e37 = curve("37a1", [0, 0, 1, -1, 0]);
        assert!(!is_irreducible(&e11, 5).unwrap());
        assert!(is_irreducible(&e37, 5).unwrap());
        assert!(is_irreducible(&e11, 23).unwrap());
        assert!(is_irreducible(&e11, 7).unwrap());
        assert_eq!(is_irreducible(&e11, 11), Err(Error::BadReduction(11)));
    }

    #[test]
    fn tate_representation_relation() {
        let p = 7;
        let rep = LocalRepresentation::tate_curve(11, p, false, true);
        let f = rep.frobenius;
        let t = rep.tame.unwrap();
        let lhs = f.mul(&t, p).mul(&f.inverse(p).unwrap(), p);
        assert_eq!(lhs, t.pow(11, p));
        assert_eq!(f.det(p), 11 % p);
    }
}
