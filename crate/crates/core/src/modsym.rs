//! Weight-2 mod-p modular symbols for Γ₀(N) via Manin symbols.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;

use num_integer::Integer;

use crate::arith::{self, gamma0_index, is_prime};
use crate::ec::CurveRecord;
use crate::error::{Error, Result};
use crate::linalg::{to_fp, FpMatrix};

/// Canonical representatives of P¹(Z/N) with constant-time-ish lookup.
#[derive(Clone, Debug)]
pub struct P1List {
    n: u64,
    reps: Vec<(u64, u64)>,
    /// divisor g of N ↦ table v ↦ index of the class of (g : v)
    tables: HashMap<u64, Vec<u32>>,
}

const NONE: u32 = u32::MAX;

impl P1List {
    pub fn new(n: u64) -> Self {
        assert!(n >= 1);
        let mut reps = Vec::new();
        let mut tables = HashMap::new();
        if n == 1 {
            reps.push((0, 1));
            tables.insert(1, vec![0]);
            return P1List { n, reps, tables };
        }
        let units: Vec<u64> = (1..n).filter(|&t| arith::gcd(t, n) == 1).collect();
        // classes with c ≡ 0 first, so (0 : 1) has index 0
        let mut divs = arith::divisors(n);
        divs.sort_by_key(|&g| std::cmp::Reverse(g));
        for g in divs {
            let ng = n / g;
            let stab: Vec<u64> = units.iter().copied().filter(|t| t % ng == 1 % ng).collect();
            let mut table = vec![NONE; n as usize];
            for v in 0..n {
                if table[v as usize] != NONE || arith::gcd(arith::gcd(g % n, v), n) != 1 {
                    continue;
                }
                let idx = reps.len() as u32;
                reps.push((g % n, v));
                for &t in &stab {
                    table[(t * v % n) as usize] = idx;
                }
            }
            tables.insert(g, table);
        }
        P1List { n, reps, tables }
    }

    pub fn level(&self) -> u64 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn rep(&self, i: usize) -> (u64, u64) {
        self.reps[i]
    }

    /// Index of the class of (c : d), or `None` if gcd(c, d, N) ≠ 1.
    pub fn index(&self, c: i64, d: i64) -> Option<usize> {
        let n = self.n;
        if n == 1 {
            return Some(0);
        }
        let c = c.rem_euclid(n as i64) as u64;
        let d = d.rem_euclid(n as i64) as u64;
        let g = arith::gcd(c, n);
        let ng = n / g;
        let s = if g == n {
            1
        } else {
            let c1 = (c / g) % ng;
            let mut s = if ng == 1 { 0 } else { arith::inv_mod(c1 as i64, ng as i64)? as u64 };
            while arith::gcd(s, n) != 1 {
                s += ng;
            }
            s
        };
        let v = (s as u128 * d as u128 % n as u128) as usize;
        let idx = self.tables.get(&g)?[v];
        (idx != NONE).then_some(idx as usize)
    }
}

pub fn p1_list(n: u64) -> P1List {
    P1List::new(n)
}

/// Which quotient of the symbol space to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    /// The full space.
    Zero,
    /// The +1 quotient for the star involution; each newform contributes once.
    Plus,
}

/// Sparse vector over F_p: (coordinate, nonzero coefficient), sorted by coordinate.
pub type SparseVec = Vec<(u32, u32)>;

/// Cusp u/v in lowest terms with v ≥ 0 (∞ = 1/0).
fn normalize_cusp(u: i64, v: i64) -> (i64, i64) {
    let g = u.gcd(&v);
    let (mut u, mut v) = (u / g, v / g);
    if v < 0 || (v == 0 && u < 0) {
        u = -u;
        v = -v;
    }
    (u, v)
}

fn cusp_s(u: i64, v: i64) -> i64 {
    match v {
        0 => u,
        1 => 0,
        _ => arith::inv_mod(u, v).expect("cusp in lowest terms"),
    }
}

fn cusps_equivalent(n: i64, (u1, v1): (i64, i64), (u2, v2): (i64, i64)) -> bool {
    let m = (v1 * v2).gcd(&n);
    let s1 = cusp_s(u1, v1);
    let s2 = cusp_s(u2, v2);
    (s1 * v2 - s2 * v1).rem_euclid(m) == 0
}

/// Mod-p Manin-symbol space for Γ₀(N) in weight 2 with its cuspidal subspace.
#[derive(Debug)]
pub struct ManinSymbolSpace {
    level: u64,
    p: u32,
    sign: Sign,
    p1: P1List,
    /// For each P¹ element, its image in the quotient basis.
    sym_offsets: Vec<u32>,
    sym_entries: Vec<(u32, u32)>,
    /// P¹ index of each quotient basis element.
    basis_symbols: Vec<usize>,
    /// Cusp class representatives met by the boundary map.
    cusps: Vec<(i64, i64)>,
    /// Free positions of the boundary kernel; these are the coordinates on S.
    cusp_free: Vec<usize>,
    /// Cuspidal basis vectors in quotient coordinates (free-variable form).
    cusp_basis: Vec<SparseVec>,
    hecke_cache: Mutex<HashMap<u64, FpMatrix>>,
}

struct UnionFind {
    parent: Vec<u32>,
    sign: Vec<i8>,
    zero: Vec<bool>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), sign: vec![1; n], zero: vec![false; n] }
    }

    fn find(&mut self, i: usize) -> (usize, i8) {
        let mut path = Vec::new();
        let mut cur = i;
        let mut s = 1i8;
        while self.parent[cur] as usize != cur {
            path.push(cur);
            s *= self.sign[cur];
            cur = self.parent[cur] as usize;
        }
        let root = cur;
        // path compression: recompute signs from the top
        let mut acc = s;
        for &node in &path {
            let old = self.sign[node];
            self.parent[node] = root as u32;
            self.sign[node] = acc;
            acc *= old;
        }
        (root, s)
    }

    /// Impose x_i = c·x_j.
    fn relate(&mut self, i: usize, j: usize, c: i8) {
        let (ri, si) = self.find(i);
        let (rj, sj) = self.find(j);
        let rel = si * c * sj;
        if ri == rj {
            if rel == -1 {
                self.zero[ri] = true;
            }
            return;
        }
        self.parent[ri] = rj as u32;
        self.sign[ri] = rel;
        self.zero[rj] |= self.zero[ri];
    }
}

fn add_scaled(acc: &mut BTreeMap<u32, u32>, v: &[(u32, u32)], f: u32, p: u32) {
    for &(c, x) in v {
        let e = acc.entry(c).or_insert(0);
        *e = ((*e as u64 + f as u64 * x as u64) % p as u64) as u32;
        if *e == 0 {
            acc.remove(&c);
        }
    }
}

/// Heilbronn matrices (a, b, c, d) of determinant ℓ computing T_ℓ, by Cremona's
/// continued-fraction recursion.
pub fn heilbronn_cremona(ell: u64) -> Vec<[i64; 4]> {
    let l = ell as i64;
    if ell == 2 {
        return vec![[1, 0, 0, 2], [2, 0, 0, 1], [2, 1, 0, 1], [1, 0, 1, 2]];
    }
    let mut out = vec![[1, 0, 0, l]];
    let half = l / 2;
    for r in -half..=half {
        let (mut x1, mut x2, mut y1, mut y2) = (l, -r, 0i64, 1i64);
        let (mut a, mut b) = (-l, r);
        out.push([x1, x2, y1, y2]);
        while b != 0 {
            let q = round_half_away(a, b);
            let c = a - b * q;
            a = -b;
            b = c;
            let x3 = q * x2 - x1;
            x1 = x2;
            x2 = x3;
            let y3 = q * y2 - y1;
            y1 = y2;
            y2 = y3;
            out.push([x1, x2, y1, y2]);
        }
    }
    out
}

fn round_half_away(a: i64, b: i64) -> i64 {
    let (n, d) = if b < 0 { (-a, -b) } else { (a, b) };
    if n >= 0 {
        (2 * n + d) / (2 * d)
    } else {
        -((-2 * n + d) / (2 * d))
    }
}

/// ⌈ψ(N)/6⌉.
pub fn sturm_bound(n: u64) -> u64 {
    gamma0_index(n).div_ceil(6)
}

/// Genus of X₀(N) from the index, elliptic points and cusps.
pub fn genus_x0(n: u64) -> u64 {
    let psi = gamma0_index(n) as i64;
    let primes = arith::prime_divisors(n);
    let nu2: i64 = if n.is_multiple_of(4) {
        0
    } else {
        primes
            .iter()
            .map(|&q| match q % 4 {
                2 => 1,
                1 => 2,
                _ => 0,
            })
            .product::<i64>()
    };
    let nu3: i64 = if n.is_multiple_of(9) {
        0
    } else {
        primes
            .iter()
            .map(|&q| if q == 3 { 1 } else { 1 + kronecker_minus3(q) })
            .product::<i64>()
    };
    let cusps: i64 = arith::divisors(n)
        .into_iter()
        .map(|d| arith::euler_phi(arith::gcd(d, n / d)) as i64)
        .sum();
    // 12g = 12 + ψ − 3ν₂ − 4ν₃ − 6ν∞
    let twelve_g = 12 + psi - 3 * nu2 - 4 * nu3 - 6 * cusps;
    debug_assert!(twelve_g >= 0 && twelve_g % 12 == 0);
    (twelve_g / 12) as u64
}

fn kronecker_minus3(q: u64) -> i64 {
    match q % 3 {
        0 => 0,
        1 => 1,
        _ => -1,
    }
}

impl ManinSymbolSpace {
    /// Build the space for level `n` over F_p. Requires p ≥ 5 prime; p may divide `n`.
    pub fn new(n: u64, p: u64, sign: Sign) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parse { line: 0, msg: "level must be positive".into() });
        }
        if p.is_multiple_of(2) {
            return Err(Error::EvenPrime(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if p == 3 {
            return Err(Error::EngineInvalid { p, six_n: 6 * n });
        }
        let pp = p as u32;
        let p1 = P1List::new(n);
        let nsym = p1.len();
        let ni = n as i64;
        let mut uf = UnionFind::new(nsym);
        let idx = |c: i64, d: i64| p1.index(c, d).expect("primitive pair");
        for i in 0..nsym {
            let (c, d) = p1.rep(i);
            let (c, d) = (c as i64, d as i64);
            uf.relate(i, idx(d, -c), -1);
            if sign == Sign::Plus {
                uf.relate(i, idx(-c, d), 1);
            }
        }
        // columns: nonzero roots
        let mut col_of = vec![NONE; nsym];
        let mut col_sym = Vec::new();
        for (i, slot) in col_of.iter_mut().enumerate() {
            let (r, _) = uf.find(i);
            if r == i && !uf.zero[i] {
                *slot = col_sym.len() as u32;
                col_sym.push(i);
            }
        }
        let ncols = col_sym.len();
        let mut term = |i: usize, acc: &mut BTreeMap<u32, u32>| {
            let (r, s) = uf.find(i);
            if uf.zero[r] {
                return;
            }
            let c = col_of[r];
            let coef = if s == 1 { 1 } else { pp - 1 };
            add_scaled(acc, &[(c, coef)], 1, pp);
        };
        // three-term relations, eliminated online
        let mut pivot_time: Vec<u32> = vec![NONE; ncols];
        let mut rows: Vec<(u32, SparseVec)> = Vec::new();
        for i in 0..nsym {
            let (c, d) = p1.rep(i);
            let (c, d) = (c as i64, d as i64);
            let j = idx(d, -c - d);
            let k = idx(-c - d, c);
            if j < i || k < i {
                continue;
            }
            let mut row = BTreeMap::new();
            term(i, &mut row);
            term(j, &mut row);
            term(k, &mut row);
            // reduce against stored pivots, earliest first
            let mut pending: BTreeSet<(u32, u32)> = row
                .keys()
                .filter(|&&c| pivot_time[c as usize] != NONE)
                .map(|&c| (pivot_time[c as usize], c))
                .collect();
            while let Some((t, c)) = pending.pop_first() {
                let Some(&f) = row.get(&c) else { continue };
                let prow = &rows[t as usize].1;
                let g = pp - f;
                for &(cc, x) in prow {
                    let e = row.entry(cc).or_insert(0);
                    let was_zero = *e == 0;
                    *e = ((*e as u64 + g as u64 * x as u64) % pp as u64) as u32;
                    if *e == 0 {
                        row.remove(&cc);
                    } else if was_zero && pivot_time[cc as usize] != NONE {
                        pending.insert((pivot_time[cc as usize], cc));
                    }
                }
            }
            let Some((&pc, &pv)) = row.iter().next_back() else { continue };
            let inv = crate::linalg::inv_fp(pv, pp) as u64;
            let normalized: SparseVec = row
                .iter()
                .map(|(&c, &x)| (c, (x as u64 * inv % pp as u64) as u32))
                .collect();
            pivot_time[pc as usize] = rows.len() as u32;
            rows.push((pc, normalized));
        }
        // quotient basis: non-pivot columns
        let mut free_index = vec![NONE; ncols];
        let mut basis_symbols = Vec::new();
        for c in 0..ncols {
            if pivot_time[c] == NONE {
                free_index[c] = basis_symbols.len() as u32;
                basis_symbols.push(col_sym[c]);
            }
        }
        // back-substitution, latest pivot first
        let mut expr: Vec<Option<SparseVec>> = vec![None; ncols];
        for (pc, row) in rows.iter().rev() {
            let mut acc = BTreeMap::new();
            for &(c, x) in row {
                if c == *pc {
                    continue;
                }
                let neg = pp - x;
                if free_index[c as usize] != NONE {
                    add_scaled(&mut acc, &[(free_index[c as usize], 1)], neg, pp);
                } else {
                    let e = expr[c as usize].as_ref().expect("later pivot already expressed");
                    add_scaled(&mut acc, e, neg, pp);
                }
            }
            expr[*pc as usize] = Some(acc.into_iter().collect());
        }
        let mut sym_offsets = Vec::with_capacity(nsym + 1);
        let mut sym_entries = Vec::new();
        sym_offsets.push(0u32);
        for i in 0..nsym {
            let (r, s) = uf.find(i);
            if !uf.zero[r] {
                let c = col_of[r] as usize;
                let scale = if s == 1 { 1 } else { pp - 1 };
                if free_index[c] != NONE {
                    sym_entries.push((free_index[c], scale));
                } else {
                    for &(j, x) in expr[c].as_ref().unwrap() {
                        sym_entries.push((j, (x as u64 * scale as u64 % pp as u64) as u32));
                    }
                }
            }
            sym_offsets.push(sym_entries.len() as u32);
        }
        let mut space = ManinSymbolSpace {
            level: n,
            p: pp,
            sign,
            p1,
            sym_offsets,
            sym_entries,
            basis_symbols,
            cusps: Vec::new(),
            cusp_free: Vec::new(),
            cusp_basis: Vec::new(),
            hecke_cache: Mutex::new(HashMap::new()),
        };
        space.compute_cuspidal(ni);
        Ok(space)
    }

    fn cusp_index(&mut self, n: i64, u: i64, v: i64) -> usize {
        let c = normalize_cusp(u, v);
        let neg = normalize_cusp(-c.0, c.1);
        for (i, &r) in self.cusps.iter().enumerate() {
            if cusps_equivalent(n, c, r) || (self.sign == Sign::Plus && cusps_equivalent(n, neg, r)) {
                return i;
            }
        }
        self.cusps.push(c);
        self.cusps.len() - 1
    }

    /// Boundary of the Manin symbol (c : d): [a/c] − [b/d] for a lift [[a, b], [c, d]] ∈ SL₂(Z).
    fn symbol_boundary(&mut self, n: i64, i: usize) -> [(usize, i8); 2] {
        let (c, d) = self.p1.rep(i);
        let (a, b, c, d) = lift_to_sl2z(c as i64, d as i64, n);
        let x = self.cusp_index(n, a, c);
        let y = self.cusp_index(n, b, d);
        [(x, 1), (y, -1)]
    }

    fn compute_cuspidal(&mut self, n: i64) {
        let p = self.p;
        let dim = self.basis_symbols.len();
        let mut cols = Vec::with_capacity(dim);
        for j in 0..dim {
            let s = self.basis_symbols[j];
            cols.push(self.symbol_boundary(n, s));
        }
        let mut b = FpMatrix::zeros(p, self.cusps.len(), dim);
        for (j, terms) in cols.iter().enumerate() {
            for &(ci, sgn) in terms {
                let v = b.get(ci, j) as i64 + sgn as i64;
                b.set(ci, j, to_fp(v, p));
            }
        }
        let mut r = b.clone();
        let pivots = r.rref();
        let mut is_pivot = vec![false; dim];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        self.cusp_free = (0..dim).filter(|&c| !is_pivot[c]).collect();
        self.cusp_basis = self
            .cusp_free
            .iter()
            .map(|&f| {
                let mut v: SparseVec = vec![(f as u32, 1)];
                for (i, &pc) in pivots.iter().enumerate() {
                    let x = r.get(i, f);
                    if x != 0 {
                        v.push((pc as u32, p - x));
                    }
                }
                v.sort_unstable();
                v
            })
            .collect();
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn prime(&self) -> u64 {
        self.p as u64
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn p1(&self) -> &P1List {
        &self.p1
    }

    /// Dimension of the full quotient (all modular symbols).
    pub fn dimension(&self) -> usize {
        self.basis_symbols.len()
    }

    pub fn cuspidal_dimension(&self) -> usize {
        self.cusp_free.len()
    }

    pub fn num_cusps(&self) -> usize {
        self.cusps.len()
    }

    /// Image of a P¹ element in the quotient basis.
    pub fn symbol_vector(&self, i: usize) -> &[(u32, u32)] {
        &self.sym_entries[self.sym_offsets[i] as usize..self.sym_offsets[i + 1] as usize]
    }

    /// Cuspidal basis vector k_i in quotient coordinates.
    pub fn cuspidal_basis_vector(&self, i: usize) -> &[(u32, u32)] {
        &self.cusp_basis[i]
    }

    fn check_hecke_prime(&self, ell: u64) -> Result<()> {
        if !is_prime(ell) {
            return Err(Error::NotPrime(ell));
        }
        if self.level.is_multiple_of(ell) {
            return Err(Error::PrimeDividesLevel { p: ell, level: self.level });
        }
        if ell == self.p as u64 {
            return Err(Error::EllEqualsP { ell, p: ell });
        }
        Ok(())
    }

    /// T_ℓ of a quotient vector, as a dense vector in quotient coordinates.
    pub fn apply_hecke(&self, v: &[(u32, u32)], heil: &[[i64; 4]]) -> Vec<u32> {
        let p = self.p as u64;
        let mut acc = vec![0u64; self.dimension()];
        for &(j, x) in v {
            let (c, d) = self.p1.rep(self.basis_symbols[j as usize]);
            let (c, d) = (c as i64, d as i64);
            for h in heil {
                let i = self
                    .p1
                    .index(c * h[0] + d * h[2], c * h[1] + d * h[3])
                    .expect("Hecke image is primitive");
                for &(k, y) in self.symbol_vector(i) {
                    acc[k as usize] += x as u64 * y as u64;
                }
            }
            // x·y < 2³², so reducing once per input coordinate cannot overflow
            acc.iter_mut().for_each(|a| *a %= p);
        }
        acc.into_iter().map(|a| a as u32).collect()
    }

    /// Coordinates on the cuspidal basis of a cuspidal quotient vector.
    pub fn cuspidal_coordinates(&self, dense: &[u32]) -> Vec<u32> {
        self.cusp_free.iter().map(|&f| dense[f]).collect()
    }

    /// Boundary of a dense quotient vector, over the cusp classes.
    pub fn boundary_of(&self, dense: &[u32]) -> Vec<u32> {
        let p = self.p as u64;
        let n = self.level as i64;
        let mut out = vec![0u64; self.cusps.len()];
        // recompute per basis symbol; boundary classes are already registered
        for (j, &x) in dense.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let (c, d) = self.p1.rep(self.basis_symbols[j]);
            let (a, b, c, d) = lift_to_sl2z(c as i64, d as i64, n);
            for (u, v, s) in [(a, c, 1i64), (b, d, -1i64)] {
                let cu = normalize_cusp(u, v);
                let neg = normalize_cusp(-cu.0, cu.1);
                let ci = self
                    .cusps
                    .iter()
                    .position(|&r| {
                        cusps_equivalent(n, cu, r)
                            || (self.sign == Sign::Plus && cusps_equivalent(n, neg, r))
                    })
                    .expect("known cusp");
                out[ci] = (out[ci] + (s.rem_euclid(p as i64) as u64) * x as u64) % p;
            }
        }
        out.into_iter().map(|x| x as u32).collect()
    }

    /// Rows are the cuspidal coordinates of T_ℓ(k_i): the operator acts on row vectors from the right.
    pub fn hecke_matrix(&self, ell: u64) -> Result<FpMatrix> {
        self.check_hecke_prime(ell)?;
        if let Some(m) = self.hecke_cache.lock().expect("cache lock").get(&ell) {
            return Ok(m.clone());
        }
        let heil = heilbronn_cremona(ell);
        let s = self.cuspidal_dimension();
        let mut m = FpMatrix::zeros(self.p, s, s);
        for i in 0..s {
            let img = self.apply_hecke(&self.cusp_basis[i], &heil);
            let coords = self.cuspidal_coordinates(&img);
            m.row_mut(i).copy_from_slice(&coords);
        }
        self.hecke_cache.lock().expect("cache lock").insert(ell, m.clone());
        Ok(m)
    }

    /// Rows Q of the Hecke matrix, i.e. cuspidal coordinates of T_ℓ(k_q) for q ∈ Q.
    fn hecke_rows(&self, ell: u64, q: &[usize]) -> FpMatrix {
        if let Some(m) = self.hecke_cache.lock().expect("cache lock").get(&ell) {
            let mut out = FpMatrix::zeros(self.p, q.len(), m.ncols());
            for (r, &i) in q.iter().enumerate() {
                out.row_mut(r).copy_from_slice(m.row(i));
            }
            return out;
        }
        let heil = heilbronn_cremona(ell);
        let s = self.cuspidal_dimension();
        let mut out = FpMatrix::zeros(self.p, q.len(), s);
        for (r, &i) in q.iter().enumerate() {
            let img = self.apply_hecke(&self.cusp_basis[i], &heil);
            out.row_mut(r).copy_from_slice(&self.cuspidal_coordinates(&img));
        }
        out
    }

    /// Dimension of the simultaneous generalized eigenspace of the T_ℓ with
    /// eigenvalues `values` (ℓ ascending) inside the cuspidal subspace.
    /// Stops early once the dimension reaches `floor`, a known lower bound.
    pub fn generalized_multiplicity(&self, values: &[(u64, u32)], floor: usize) -> Result<usize> {
        let s = self.cuspidal_dimension();
        if s == 0 || values.is_empty() {
            return Ok(s);
        }
        let (l1, a1) = values[0];
        self.check_hecke_prime(l1)?;
        let r1 = self.hecke_matrix(l1)?;
        // functionals z with z·(A − a)^k = 0, A = transpose of the row-convention matrix
        let z = r1.transpose().generalized_left_eigenspace(a1 % self.p);
        self.refine(z, &values[1..], floor)
    }

    /// Continue narrowing a T-stable family of functionals `z` (in RREF).
    pub fn refine(&self, mut z: FpMatrix, values: &[(u64, u32)], floor: usize) -> Result<usize> {
        for &(ell, a) in values {
            let k = z.nrows();
            if k <= floor {
                break;
            }
            self.check_hecke_prime(ell)?;
            let mut zz = z.clone();
            let q = zz.rref();
            debug_assert_eq!(zz, z);
            // Z·A_ℓ[:, Q] where A_ℓ[:, q] is row q of the row-convention matrix
            let rows = self.hecke_rows(ell, &q);
            let c = z.mul(&rows.transpose());
            let y = c.generalized_left_eigenspace(a % self.p);
            if y.nrows() == k {
                continue;
            }
            let mut next = y.mul(&z);
            next.rref();
            z = next;
        }
        Ok(z.nrows())
    }

    /// Generalized eigenspace functionals for the first operator; useful for
    /// sharing work across several eigensystems with the same first value.
    pub fn first_step(&self, ell: u64, a: u32) -> Result<FpMatrix> {
        self.check_hecke_prime(ell)?;
        let r1 = self.hecke_matrix(ell)?;
        Ok(r1.transpose().generalized_left_eigenspace(a % self.p))
    }
}

/// A matrix [[a, b], [c', d']] ∈ SL₂(Z) with (c', d') ≡ (c, d) mod N.
fn lift_to_sl2z(c: i64, d: i64, n: i64) -> (i64, i64, i64, i64) {
    if n == 1 {
        return (1, 0, 0, 1);
    }
    let c = if c == 0 { n } else { c };
    let mut d = d;
    while c.gcd(&d) != 1 {
        d += n;
    }
    let e = c.extended_gcd(&d);
    // x·c + y·d = 1  ⇒  a·d − b·c = 1 with a = y, b = −x
    (e.y, -e.x, c, d)
}

/// Build the full (sign 0) space; p must not divide N.
pub fn build_space(n: u64, p: u64) -> Result<ManinSymbolSpace> {
    if p > 3 && n.is_multiple_of(p) {
        return Err(Error::PrimeDividesLevel { p, level: n });
    }
    if p == 2 {
        return Err(Error::EvenPrime(p));
    }
    if p == 3 {
        return Err(Error::EngineInvalid { p, six_n: 6 * n });
    }
    ManinSymbolSpace::new(n, p, Sign::Zero)
}

/// Mod-p eigenvalues a_ℓ for good primes ℓ ∤ N·p up to a bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Eigensystem {
    pub level: u64,
    pub p: u64,
    pub bound: u64,
    pub values: BTreeMap<u64, u32>,
}

impl Eigensystem {
    /// The system of a curve: a_ℓ mod p for ℓ ≤ bound, ℓ ∤ N·p.
    pub fn from_curve(curve: &CurveRecord, p: u64, bound: u64) -> Result<Self> {
        let mut values = BTreeMap::new();
        for ell in arith::primes_up_to(bound) {
            if curve.conductor.is_multiple_of(ell) || ell == p {
                continue;
            }
            let a = curve.trace_at(ell)?;
            values.insert(ell, to_fp(a, p as u32));
        }
        Ok(Eigensystem { level: curve.conductor, p, bound, values })
    }

    /// Values for ℓ ∤ level·p, as required at level `level`.
    pub fn restricted(&self, level: u64) -> Vec<(u64, u32)> {
        self.values
            .iter()
            .filter(|(&l, _)| !level.is_multiple_of(l))
            .map(|(&l, &v)| (l, v))
            .collect()
    }
}

/// Dimension of ∩_ℓ ker(T_ℓ − a_ℓ)^d on the cuspidal subspace.
pub fn eigensystem_multiplicity(space: &ManinSymbolSpace, eig: &Eigensystem) -> Result<usize> {
    let sturm = sturm_bound(space.level());
    if eig.bound < sturm {
        return Err(Error::BoundTooSmall { bound: eig.bound, sturm });
    }
    let mut vals = Vec::new();
    for ell in arith::primes_up_to(eig.bound) {
        if space.level().is_multiple_of(ell) || ell == space.prime() {
            continue;
        }
        match eig.values.get(&ell) {
            Some(&a) => vals.push((ell, a)),
            None => return Err(Error::MissingEigenvalue(ell)),
        }
    }
    space.generalized_multiplicity(&vals, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ec::{CurveRecord, WeierstrassModel};

    #[test]
    fn p1_sizes() {
        for n in 1..200u64 {
            assert_eq!(P1List::new(n).len() as u64, if n == 1 { 1 } else { gamma0_index(n) }, "N = {n}");
        }
        assert_eq!(p1_list(11).len(), 12);
        assert_eq!(p1_list(6).len(), 12);
    }

    #[test]
    fn p1_lookup_is_projective() {
        let p1 = P1List::new(36);
        for i in 0..p1.len() {
            let (c, d) = p1.rep(i);
            assert_eq!(p1.index(c as i64, d as i64), Some(i));
            for t in [5i64, 7, 11, 13, 35] {
                assert_eq!(p1.index(t * c as i64, t * d as i64), Some(i));
            }
        }
        assert_eq!(p1.index(2, 4), None);
    }

    #[test]
    fn genus_values() {
        assert_eq!(genus_x0(1), 0);
        assert_eq!(genus_x0(11), 1);
        assert_eq!(genus_x0(37), 2);
        assert_eq!(genus_x0(23), 2);
        assert_eq!(genus_x0(22), 2);
        assert_eq!(genus_x0(64), 3);
        assert_eq!(genus_x0(5077), 422);
    }

    #[test]
    fn sturm() {
        assert_eq!(sturm_bound(1), 1);
        assert_eq!(sturm_bound(11), 2);
        assert_eq!(sturm_bound(37), 7);
    }

    #[test]
    fn dimensions() {
        let s = build_space(11, 5).unwrap();
        assert_eq!(s.dimension(), 3);
        assert_eq!(s.cuspidal_dimension(), 2);
        assert_eq!(build_space(1, 5).unwrap().cuspidal_dimension(), 0);
        assert_eq!(build_space(37, 5).unwrap().cuspidal_dimension(), 4);
        assert_eq!(build_space(11, 11).err(), Some(Error::PrimeDividesLevel { p: 11, level: 11 }));
        let plus = ManinSymbolSpace::new(37, 5, Sign::Plus).unwrap();
        assert_eq!(plus.cuspidal_dimension(), 2);
    }

    #[test]
    fn heilbronn_counts_have_det_ell() {
        for ell in [2u64, 3, 5, 7, 11, 97] {
            for h in heilbronn_cremona(ell) {
                assert_eq!(h[0] * h[3] - h[1] * h[2], ell as i64);
            }
        }
    }

    #[test]
    fn hecke_eigenvalues_level_11() {
        let s = build_space(11, 5).unwrap();
        assert_eq!(s.hecke_matrix(2).unwrap(), scalar(5, 2, 3));
        assert_eq!(s.hecke_matrix(3).unwrap(), scalar(5, 2, 4));
        assert!(s.hecke_matrix(11).is_err());
        assert!(s.hecke_matrix(5).is_err());
    }

    fn scalar(p: u32, n: usize, a: u32) -> FpMatrix {
        let mut m = FpMatrix::zeros(p, n, n);
        for i in 0..n {
            m.set(i, i, a);
        }
        m
    }

    #[test]
    fn hecke_commutes_level_37() {
        let s = build_space(37, 5).unwrap();
        let t2 = s.hecke_matrix(2).unwrap();
        let t3 = s.hecke_matrix(3).unwrap();
        assert_eq!(t2.mul(&t3), t3.mul(&t2));
    }

    #[test]
    fn hecke_preserves_cuspidal_subspace() {
        let s = ManinSymbolSpace::new(30, 7, Sign::Zero).unwrap();
        let heil = heilbronn_cremona(11);
        for i in 0..s.cuspidal_dimension() {
            let img = s.apply_hecke(s.cuspidal_basis_vector(i), &heil);
            assert!(s.boundary_of(&img).iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn multiplicities() {
        let e11 = CurveRecord::from_model("11a1", WeierstrassModel::new([0, -1, 1, -10, -20])).unwrap();
        let s11 = build_space(11, 5).unwrap();
        let eig = Eigensystem::from_curve(&e11, 5, 20).unwrap();
        assert_eq!(eigensystem_multiplicity(&s11, &eig).unwrap(), 2);
        let short = Eigensystem { level: 11, p: 5, bound: 1, values: BTreeMap::new() };
        assert_eq!(
            eigensystem_multiplicity(&s11, &short),
            Err(Error::BoundTooSmall { bound: 1, sturm: 2 })
        );
        let e37 = CurveRecord::from_model("37a1", WeierstrassModel::new([0, 0, 1, -1, 0])).unwrap();
        let s37 = build_space(37, 5).unwrap();
        let eig = Eigensystem::from_curve(&e37, 5, 10).unwrap();
        assert_eq!(eigensystem_multiplicity(&s37, &eig).unwrap(), 2);
    }
}
