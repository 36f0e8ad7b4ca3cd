//! Thurston linear transformations and exact spectral decisions.
//!
//! All matrices are exact nonnegative rationals. The comparison of the
//! Perron-Frobenius eigenvalue against one goes through the characteristic
//! polynomial and Sturm sequences; no floating point touches any verdict.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::cover::Recursion;
use crate::isotopy::{
    classify_curve, lift_arc, lift_curve, ArcSystem, ClassRef, CurveClass, CurveKind, CurveSystem,
    CurveLiftRecord, IsotopyError, Provenance,
};
use crate::marked::word_cmp;

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error(transparent)]
    Isotopy(#[from] IsotopyError),
    #[error("matrix is not square or indices mismatch")]
    Shape,
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("invariant extension did not close within depth {0}")]
    ExtensionUnclosed(usize),
    #[error("operation needs a forward-invariance witness")]
    WitnessMissing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixProvenance {
    Weighted,
    Unweighted,
}

/// Exact nonnegative rational square matrix indexed by a curve or arc
/// system; entry `(i, j)` collects lifts of the j-th class landing on the
/// i-th class.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMatrix {
    dim: usize,
    entries: Vec<BigRational>,
    pub provenance: MatrixProvenance,
}

impl RationalMatrix {
    pub fn zero(dim: usize, provenance: MatrixProvenance) -> Self {
        RationalMatrix {
            dim,
            entries: vec![BigRational::zero(); dim * dim],
            provenance,
        }
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>, provenance: MatrixProvenance) -> Option<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        Some(RationalMatrix { dim, entries: rows.into_iter().flatten().collect(), provenance })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.iter().all(|e| !e.is_negative())
    }

    pub fn row_sums(&self) -> Vec<BigRational> {
        (0..self.dim)
            .map(|i| (0..self.dim).fold(BigRational::zero(), |acc, j| acc + self.get(i, j)))
            .collect()
    }

    pub fn submatrix(&self, idx: &[usize]) -> RationalMatrix {
        let mut out = RationalMatrix::zero(idx.len(), self.provenance);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out.set(a, b, self.get(i, j).clone());
            }
        }
        out
    }

    /// Characteristic polynomial, lowest degree first, monic.
    pub fn char_poly(&self) -> Vec<BigRational> {
        // Faddeev-LeVerrier: exact, O(n^4)
        let n = self.dim;
        if n == 0 {
            return vec![BigRational::one()];
        }
        let mut coeffs = vec![BigRational::zero(); n + 1];
        coeffs[n] = BigRational::one();
        let mut aux = self.clone();
        let mut c = BigRational::one();
        for k in 1..=n {
            if k > 1 {
                // aux = M * (aux + c * I)
                let mut shifted = aux.clone();
                for i in 0..n {
                    let v = shifted.get(i, i) + &c;
                    shifted.set(i, i, v);
                }
                let mut next = RationalMatrix::zero(n, self.provenance);
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = BigRational::zero();
                        for l in 0..n {
                            acc += self.get(i, l) * shifted.get(l, j);
                        }
                        next.set(i, j, acc);
                    }
                }
                aux = next;
            }
            let trace = (0..n).fold(BigRational::zero(), |acc, i| acc + aux.get(i, i));
            c = -trace / BigRational::from_integer(BigInt::from(k as i64));
            coeffs[n - k] = c.clone();
        }
        coeffs
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            write!(f, "[")?;
            for j in 0..self.dim {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

// --- exact polynomial helpers -------------------------------------------

fn poly_trim(p: &mut Vec<BigRational>) {
    while p.len() > 1 && p.last().map_or(false, |c| c.is_zero()) {
        p.pop();
    }
}

fn poly_eval(p: &[BigRational], x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn poly_derivative(p: &[BigRational]) -> Vec<BigRational> {
    if p.len() <= 1 {
        return vec![BigRational::zero()];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i as i64)))
        .collect()
}

/// Remainder of polynomial division.
fn poly_rem(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let mut b = b.to_vec();
    poly_trim(&mut b);
    let db = b.len() - 1;
    let lead = b[db].clone();
    while r.len() > 1 && r.len() - 1 >= db && !(r.len() == 1 && r[0].is_zero()) {
        let dr = r.len() - 1;
        let f = r[dr].clone() / lead.clone();
        for k in 0..=db {
            let v = r[dr - db + k].clone() - &f * &b[k];
            r[dr - db + k] = v;
        }
        poly_trim(&mut r);
        if r.len() - 1 < db || r.iter().all(|c| c.is_zero()) {
            break;
        }
    }
    poly_trim(&mut r);
    r
}

fn poly_gcd(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    poly_trim(&mut x);
    poly_trim(&mut y);
    while !(y.len() == 1 && y[0].is_zero()) {
        let r = poly_rem(&x, &y);
        x = y;
        y = r;
    }
    // normalize monic
    let lead = x.last().unwrap().clone();
    if !lead.is_zero() {
        for c in &mut x {
            *c /= lead.clone();
        }
    }
    x
}

fn poly_divexact(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let mut b = b.to_vec();
    poly_trim(&mut b);
    let db = b.len() - 1;
    let lead = b[db].clone();
    let mut q = vec![BigRational::zero(); r.len().saturating_sub(db)];
    while r.len() > 1 || !r[0].is_zero() {
        let dr = r.len() - 1;
        if dr < db {
            break;
        }
        let f = r[dr].clone() / lead.clone();
        q[dr - db] = f.clone();
        for k in 0..=db {
            let v = r[dr - db + k].clone() - &f * &b[k];
            r[dr - db + k] = v;
        }
        poly_trim(&mut r);
        if r.len() == 1 && r[0].is_zero() {
            break;
        }
    }
    poly_trim(&mut q);
    q
}

/// Sturm chain of a squarefree polynomial.
fn sturm_chain(p: &[BigRational]) -> Vec<Vec<BigRational>> {
    let mut chain = vec![p.to_vec(), poly_derivative(p)];
    poly_trim(&mut chain[1]);
    loop {
        let len = chain.len();
        let r = poly_rem(&chain[len - 2], &chain[len - 1]);
        if r.len() == 1 && r[0].is_zero() {
            break;
        }
        let neg: Vec<BigRational> = r.iter().map(|c| -c.clone()).collect();
        chain.push(neg);
        if chain.last().unwrap().len() == 1 {
            break;
        }
    }
    chain
}

fn sign_variations(chain: &[Vec<BigRational>], x: &BigRational) -> usize {
    let mut signs: Vec<i8> = Vec::new();
    for p in chain {
        let v = poly_eval(p, x);
        let s = if v.is_zero() {
            0
        } else if v.is_positive() {
            1
        } else {
            -1
        };
        if s != 0 {
            signs.push(s);
        }
    }
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Number of distinct real roots of the squarefree `p` in `(a, b]`,
/// requiring `p(a) != 0`.
fn roots_in_interval(p: &[BigRational], a: &BigRational, b: &BigRational) -> usize {
    let chain = sturm_chain(p);
    sign_variations(&chain, a) - sign_variations(&chain, b).min(sign_variations(&chain, a))
}

/// Exact comparison verdict for the Perron-Frobenius eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralVerdict {
    Less,
    Equal,
    Greater,
}

impl fmt::Display for SpectralVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralVerdict::Less => write!(f, "lambda < 1"),
            SpectralVerdict::Equal => write!(f, "lambda = 1"),
            SpectralVerdict::Greater => write!(f, "lambda > 1"),
        }
    }
}

/// Decides the position of the spectral radius relative to one, exactly.
pub fn compare_spectral_radius_to_one(m: &RationalMatrix) -> SpectralVerdict {
    assert!(m.is_nonnegative(), "spectral comparisons need a nonnegative matrix");
    if m.dim() == 0 {
        return SpectralVerdict::Less;
    }
    let one = BigRational::one();
    let p = m.char_poly();
    // squarefree part, with any root at exactly one divided out
    let dp = poly_derivative(&p);
    let g = poly_gcd(&p, &dp);
    let mut q = if g.len() > 1 { poly_divexact(&p, &g) } else { p.clone() };
    let x_minus_one = vec![-BigRational::one(), BigRational::one()];
    while poly_eval(&q, &one).is_zero() && q.len() > 1 {
        q = poly_divexact(&q, &x_minus_one);
    }
    let bound = m
        .row_sums()
        .into_iter()
        .fold(BigRational::zero(), |acc, r| if r > acc { r } else { acc })
        + BigRational::one();
    if roots_in_interval(&q, &one, &bound) > 0 {
        return SpectralVerdict::Greater;
    }
    if poly_eval(&p, &one).is_zero() {
        SpectralVerdict::Equal
    } else {
        SpectralVerdict::Less
    }
}

/// Exact comparison of the spectral radii of two nonnegative matrices, by
/// interval refinement with a shared-root fallback.
pub fn spectral_radius_cmp(a: &RationalMatrix, b: &RationalMatrix) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    // handle zero dimensions
    if a.dim() == 0 || b.dim() == 0 {
        let za = a.dim() == 0;
        let zb = b.dim() == 0;
        return match (za, zb) {
            (true, true) => Ordering::Equal,
            (true, false) => spectral_sign(b).reverse(),
            (false, true) => spectral_sign(a),
            _ => unreachable!(),
        };
    }
    let qa = squarefree(&a.char_poly());
    let qb = squarefree(&b.char_poly());
    let mut lo_a = BigRational::zero();
    let mut hi_a = max_row_bound(a);
    let mut lo_b = BigRational::zero();
    let mut hi_b = max_row_bound(b);
    let two = BigRational::from_integer(BigInt::from(2));
    for _ in 0..512 {
        if hi_a < lo_b {
            return Ordering::Less;
        }
        if hi_b < lo_a {
            return Ordering::Greater;
        }
        // refine whichever interval is wider
        let wa = &hi_a - &lo_a;
        let wb = &hi_b - &lo_b;
        if wa.is_zero() && wb.is_zero() {
            return lo_a.cmp(&lo_b);
        }
        // equality detection: shared root of the squarefree parts inside
        // the overlap once both intervals are tight around single roots
        let g = poly_gcd(&qa, &qb);
        if g.len() > 1 {
            let lo = if lo_a > lo_b { lo_a.clone() } else { lo_b.clone() };
            let hi = if hi_a < hi_b { hi_a.clone() } else { hi_b.clone() };
            if lo < hi
                && roots_in_interval(&qa, &lo, &hi) == count_max_root(&qa, &lo, &hi)
                && roots_in_interval(&g, &lo, &hi) > 0
                && roots_in_interval(&qa, &hi, &max2(&hi_a, &hi_b)) == 0
                && roots_in_interval(&qb, &hi, &max2(&hi_a, &hi_b)) == 0
                && roots_in_interval(&qa, &lo, &hi) == 1
                && roots_in_interval(&qb, &lo, &hi) == 1
            {
                return Ordering::Equal;
            }
        }
        if wa >= wb {
            let mid = (&lo_a + &hi_a) / &two;
            if roots_in_interval(&qa, &mid, &hi_a) > 0 {
                lo_a = mid;
            } else {
                hi_a = mid;
            }
        } else {
            let mid = (&lo_b + &hi_b) / &two;
            if roots_in_interval(&qb, &mid, &hi_b) > 0 {
                lo_b = mid;
            } else {
                hi_b = mid;
            }
        }
    }
    panic!("spectral radius comparison did not converge");
}

fn count_max_root(_q: &[BigRational], _lo: &BigRational, _hi: &BigRational) -> usize {
    1
}

fn max2(a: &BigRational, b: &BigRational) -> BigRational {
    if a > b {
        a.clone()
    } else {
        b.clone()
    }
}

fn spectral_sign(m: &RationalMatrix) -> std::cmp::Ordering {
    // compare lambda(m) with 0
    let q = squarefree(&m.char_poly());
    let hi = max_row_bound(m);
    if roots_in_interval(&q, &BigRational::zero(), &hi) > 0 {
        std::cmp::Ordering::Greater
    } else {
        std::cmp::Ordering::Equal
    }
}

fn squarefree(p: &[BigRational]) -> Vec<BigRational> {
    let dp = poly_derivative(p);
    let g = poly_gcd(p, &dp);
    if g.len() > 1 {
        poly_divexact(p, &g)
    } else {
        p.to_vec()
    }
}

fn max_row_bound(m: &RationalMatrix) -> BigRational {
    m.row_sums()
        .into_iter()
        .fold(BigRational::zero(), |acc, r| if r > acc { r } else { acc })
        + BigRational::one()
}

// --- Thurston transformations -------------------------------------------

/// The weighted Thurston linear transformation of a curve system: entry
/// `(i, j)` sums `1/deg` over the lifts of the j-th curve isotopic to the
/// i-th. Lifts landing outside the system contribute nothing.
pub fn thurston_matrix(rec: &Recursion, system: &CurveSystem) -> Result<RationalMatrix, SpectraError> {
    let m = system.len();
    let mut out = RationalMatrix::zero(m, MatrixProvenance::Weighted);
    for (j, gamma) in system.elements().iter().enumerate() {
        for r in lift_curve(rec, gamma)? {
            if let Some(i) = system.position(&r.class) {
                let v = out.get(i, j) + BigRational::new(BigInt::one(), BigInt::from(r.degree as i64));
                out.set(i, j, v);
            }
        }
    }
    Ok(out)
}

/// The unweighted transformation: integer lift counts for curve systems,
/// multiplicities for arc systems.
pub fn unweighted_matrix_curves(
    rec: &Recursion,
    system: &CurveSystem,
) -> Result<RationalMatrix, SpectraError> {
    let m = system.len();
    let mut out = RationalMatrix::zero(m, MatrixProvenance::Unweighted);
    for (j, gamma) in system.elements().iter().enumerate() {
        for r in lift_curve(rec, gamma)? {
            if let Some(i) = system.position(&r.class) {
                let v = out.get(i, j) + BigRational::one();
                out.set(i, j, v);
            }
        }
    }
    Ok(out)
}

pub fn unweighted_matrix_arcs(
    rec: &Recursion,
    system: &ArcSystem,
) -> Result<RationalMatrix, SpectraError> {
    let m = system.len();
    let mut out = RationalMatrix::zero(m, MatrixProvenance::Unweighted);
    for (j, lam) in system.elements().iter().enumerate() {
        for r in lift_arc(rec, lam)? {
            if let Some(f) = &r.forgotten {
                if let Some(i) = system.position(f) {
                    let v = out.get(i, j) + BigRational::one();
                    out.set(i, j, v);
                }
            }
        }
    }
    Ok(out)
}

// --- Frobenius block structure ------------------------------------------

/// One diagonal block of the Frobenius normal form.
#[derive(Debug, Clone)]
pub struct Block {
    /// Indices into the indexing system, in original order.
    pub indices: Vec<usize>,
    pub irreducible: bool,
    pub verdict: SpectralVerdict,
}

/// Strongly connected components of the support digraph in topological
/// order, with exact per-block verdicts.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub blocks: Vec<Block>,
    /// Index of a block achieving the spectral radius (ties broken by
    /// block order).
    pub max_block: usize,
}

pub fn frobenius_blocks(m: &RationalMatrix) -> BlockDecomposition {
    let n = m.dim();
    // support digraph: edge j -> i when entry (i, j) is nonzero
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut radj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if !m.get(i, j).is_zero() {
                adj[j].push(i);
                radj[i].push(j);
            }
        }
    }
    // Kosaraju
    let mut order = Vec::new();
    let mut seen = vec![false; n];
    fn dfs1(v: usize, adj: &[Vec<usize>], seen: &mut [bool], order: &mut Vec<usize>) {
        seen[v] = true;
        for &w in &adj[v] {
            if !seen[w] {
                dfs1(w, adj, seen, order);
            }
        }
        order.push(v);
    }
    for v in 0..n {
        if !seen[v] {
            dfs1(v, &adj, &mut seen, &mut order);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for &v in order.iter().rev() {
        if comp[v] != usize::MAX {
            continue;
        }
        let mut stack = vec![v];
        let id = comps.len();
        comp[v] = id;
        let mut members = vec![v];
        while let Some(u) = stack.pop() {
            for &w in &radj[u] {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    members.push(w);
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    let mut blocks = Vec::new();
    for members in comps {
        let sub = m.submatrix(&members);
        let irreducible = if members.len() > 1 {
            true
        } else {
            !sub.get(0, 0).is_zero()
        };
        let verdict = compare_spectral_radius_to_one(&sub);
        blocks.push(Block { indices: members, irreducible, verdict });
    }
    // maximal block by exact spectral comparison, ties by order
    let mut max_block = 0;
    for i in 1..blocks.len() {
        let a = m.submatrix(&blocks[max_block].indices);
        let b = m.submatrix(&blocks[i].indices);
        if spectral_radius_cmp(&b, &a) == std::cmp::Ordering::Greater {
            max_block = i;
        }
    }
    BlockDecomposition { blocks, max_block }
}

// --- invariant arc decomposition -----------------------------------------

/// Decomposition of a forward-invariant arc system into disjoint
/// irreducible subsystems with entry data.
#[derive(Debug, Clone)]
pub struct InvariantArcDecomposition {
    /// Irreducible recurrent subsystems (indices into the system).
    pub thetas: Vec<Vec<usize>>,
    /// For each system element: (theta index, lift chain length).
    pub assignment: Vec<(usize, usize)>,
}

/// Splits a forward-invariant arc system into its recurrent irreducible
/// subsystems; every element is reached from one of them by an explicit
/// lift chain.
pub fn decompose_invariant_arcs(
    rec: &Recursion,
    system: &ArcSystem,
) -> Result<InvariantArcDecomposition, SpectraError> {
    let witness = crate::isotopy::forward_invariant_check(rec, system)?;
    if witness.is_none() {
        return Err(SpectraError::WitnessMissing);
    }
    let m = unweighted_matrix_arcs(rec, system)?;
    let n = system.len();
    // lift edges: j -> i when some lift of j is isotopic to i
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for j in 0..n {
        for i in 0..n {
            if !m.get(i, j).is_zero() {
                adj[j].push(i);
            }
        }
    }
    let decomp = frobenius_blocks(&m);
    let mut thetas: Vec<Vec<usize>> = Vec::new();
    let mut theta_of: Vec<Option<usize>> = vec![None; n];
    for block in &decomp.blocks {
        if block.irreducible {
            let id = thetas.len();
            for &v in &block.indices {
                theta_of[v] = Some(id);
            }
            thetas.push(block.indices.clone());
        }
    }
    // BFS along lift edges from the recurrent subsystems
    let mut assignment: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut queue = std::collections::VecDeque::new();
    for (id, theta) in thetas.iter().enumerate() {
        for &v in theta {
            assignment[v] = Some((id, 1));
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        let (id, d) = assignment[v].unwrap();
        for &w in &adj[v] {
            if assignment[w].is_none() {
                assignment[w] = Some((id, d + 1));
                queue.push_back(w);
            }
        }
    }
    let assignment: Vec<(usize, usize)> = assignment
        .into_iter()
        .map(|a| a.expect("forward invariance reaches every element from a recurrent class"))
        .collect();
    Ok(InvariantArcDecomposition { thetas, assignment })
}

// --- Levy cycles ----------------------------------------------------------

/// A re-checkable Levy cycle: consecutive curves with degree-one lifts
/// landing on their predecessors.
#[derive(Debug, Clone)]
pub struct LevyCertificate {
    pub curves: Vec<CurveClass>,
    /// `lifts[j]` is the chosen degree-one lift of `curves[j]` whose class
    /// is `curves[(j + p - 1) % p]`.
    pub lifts: Vec<CurveLiftRecord>,
}

impl LevyCertificate {
    pub fn period(&self) -> usize {
        self.curves.len()
    }

    /// Re-validates the certificate from raw data: degree-one lifts, class
    /// matches, and the multicurve test.
    pub fn revalidate(&self, rec: &Recursion) -> Result<bool, SpectraError> {
        let p = self.curves.len();
        if p == 0 {
            return Ok(false);
        }
        for (j, gamma) in self.curves.iter().enumerate() {
            let want = &self.curves[(j + p - 1) % p];
            let lifts = lift_curve(rec, gamma)?;
            let chosen = &self.lifts[j];
            if chosen.degree != 1 {
                return Ok(false);
            }
            if chosen.class.canonical() != want.canonical() {
                return Ok(false);
            }
            // the recorded lift must be among the real ones
            if !lifts
                .iter()
                .any(|r| r.sheet_orbit == chosen.sheet_orbit && r.degree == 1)
            {
                return Ok(false);
            }
        }
        let system = CurveSystem::new(self.curves.clone()).map_err(SpectraError::Isotopy)?;
        if !system.is_multicurve()? {
            return Ok(false);
        }
        // the Thurston matrix of the cycle is a permutation matrix
        let tm = thurston_matrix(rec, &system)?;
        Ok(compare_spectral_radius_to_one(&tm) != SpectralVerdict::Less)
    }
}

/// Search report for bounded Levy-cycle enumeration.
#[derive(Debug, Clone)]
pub struct LevySearch {
    pub certificates: Vec<LevyCertificate>,
    pub word_bound: usize,
    pub period_bound: usize,
    pub complete: bool,
}

/// Enumerates essential simple classes to the word bound, builds the
/// digraph of degree-one lift relations, and reports every simple cycle of
/// pairwise disjoint classes as a certificate.
pub fn find_levy_cycles(
    rec: &Recursion,
    word_bound: usize,
    period_bound: usize,
    node_limit: usize,
) -> Result<LevySearch, SpectraError> {
    let classes = crate::enumerate::essential_simple_classes(rec.base(), word_bound);
    let complete = classes.len() <= node_limit;
    let classes: Vec<CurveClass> = classes.into_iter().take(node_limit).collect();
    let n = classes.len();
    let position = |c: &CurveClass| classes.iter().position(|d| d.canonical() == c.canonical());
    // edge j -> i with a witness record when curves[j] has a degree-one
    // lift isotopic to curves[i]
    let mut edges: Vec<Vec<(usize, CurveLiftRecord)>> = vec![Vec::new(); n];
    for (j, gamma) in classes.iter().enumerate() {
        for r in lift_curve(rec, gamma)? {
            if r.degree != 1 {
                continue;
            }
            if let Some(i) = position(&r.class) {
                edges[j].push((i, r));
            }
        }
    }
    // enumerate simple cycles up to the period bound
    let mut certificates: Vec<LevyCertificate> = Vec::new();
    let mut seen_cycles: std::collections::BTreeSet<Vec<usize>> = std::collections::BTreeSet::new();
    for start in 0..n {
        // DFS over paths start -> ... following reversed edges? We walk
        // forward: a path j0 <- j1 ... means each j_{t} lifts onto j_{t-1}.
        let mut path = vec![start];
        let mut stack: Vec<Vec<usize>> = vec![edges[start].iter().map(|(i, _)| *i).collect()];
        while !path.is_empty() {
            let cur_children = stack.last_mut().unwrap();
            match cur_children.pop() {
                None => {
                    path.pop();
                    stack.pop();
                }
                Some(next) => {
                    if next == start && path.len() <= period_bound {
                        // canonical rotation: smallest index first
                        let mut cyc = path.clone();
                        let minpos = cyc
                            .iter()
                            .enumerate()
                            .min_by_key(|&(_, v)| *v)
                            .map(|(i, _)| i)
                            .unwrap();
                        cyc.rotate_left(minpos);
                        if seen_cycles.insert(cyc.clone()) {
                            if let Some(cert) = build_certificate(rec, &classes, &edges, &cyc)? {
                                certificates.push(cert);
                            }
                        }
                    } else if next > start
                        && !path.contains(&next)
                        && path.len() < period_bound
                    {
                        path.push(next);
                        stack.push(edges[next].iter().map(|(i, _)| *i).collect());
                    }
                }
            }
        }
    }
    certificates.sort_by(|a, b| {
        word_cmp(a.curves[0].canonical(), b.curves[0].canonical())
            .then(a.period().cmp(&b.period()))
    });
    Ok(LevySearch { certificates, word_bound, period_bound, complete })
}

fn build_certificate(
    rec: &Recursion,
    classes: &[CurveClass],
    edges: &[Vec<(usize, CurveLiftRecord)>],
    cycle: &[usize],
) -> Result<Option<LevyCertificate>, SpectraError> {
    // cycle[t] lifts onto cycle[t+1]? The path was built along edges
    // j -> i meaning "j has a degree-one lift isotopic to i"; the Levy
    // convention asks gamma_j to lift onto gamma_{j-1}, so the curve
    // sequence is the path as walked.
    let p = cycle.len();
    let curves: Vec<CurveClass> = cycle.iter().map(|&i| classes[i].clone()).collect();
    // pairwise disjoint?
    let system = match CurveSystem::new(curves.clone()) {
        Ok(s) => s,
        Err(_) => return Ok(None),
    };
    if !system.is_multicurve()? {
        return Ok(None);
    }
    // assemble the lift records: curves[j] must lift onto curves[j-1];
    // in cycle order, the edge cycle[t] -> cycle[t+1] says cycle[t] lifts
    // onto cycle[t+1], so index the curves in reverse.
    let mut ordered = curves.clone();
    ordered.reverse();
    let mut lifts = Vec::with_capacity(p);
    for j in 0..p {
        let gamma = &ordered[j];
        let want = &ordered[(j + p - 1) % p];
        let gi = cycle.iter().position(|&c| classes[c].canonical() == gamma.canonical()).unwrap();
        let rec_lift = edges[cycle[gi]]
            .iter()
            .find(|(i, _)| classes[*i].canonical() == want.canonical())
            .map(|(_, r)| r.clone());
        match rec_lift {
            Some(r) => lifts.push(r),
            None => return Ok(None),
        }
    }
    let cert = LevyCertificate { curves: ordered, lifts };
    if cert.revalidate(rec)? {
        Ok(Some(cert))
    } else {
        Ok(None)
    }
}

// --- invariant extension ---------------------------------------------------

/// Result of closing a curve system under essential nonperipheral lifts.
#[derive(Debug, Clone)]
pub struct ExtensionResult {
    pub system: CurveSystem,
    pub closed: bool,
    pub depth_used: usize,
}

/// Extends a curve system by preimages, up to a depth bound. The spectral
/// radius of the extended Thurston matrix never decreases; this is
/// asserted exactly.
pub fn invariant_extension(
    rec: &Recursion,
    system: &CurveSystem,
    depth_bound: usize,
) -> Result<ExtensionResult, SpectraError> {
    let mut elements: Vec<CurveClass> = system.elements().to_vec();
    let mut frontier: Vec<CurveClass> = elements.clone();
    let mut closed = false;
    let mut depth_used = 0;
    for depth in 0..depth_bound {
        let mut fresh: Vec<CurveClass> = Vec::new();
        for gamma in &frontier {
            for r in lift_curve(rec, gamma)? {
                if r.class.kind() != CurveKind::Essential {
                    continue;
                }
                let known = elements
                    .iter()
                    .chain(fresh.iter())
                    .any(|c| c.canonical() == r.class.canonical());
                if !known {
                    let mut class = r.class.clone();
                    let _ = class.verify_simple();
                    fresh.push(class);
                }
            }
        }
        if fresh.is_empty() {
            closed = true;
            depth_used = depth;
            break;
        }
        elements.extend(fresh.clone());
        frontier = fresh;
        depth_used = depth + 1;
    }
    let extended = CurveSystem::new(elements).map_err(SpectraError::Isotopy)?;
    let before = thurston_matrix(rec, system)?;
    let after = thurston_matrix(rec, &extended)?;
    assert!(
        spectral_radius_cmp(&after, &before) != std::cmp::Ordering::Less,
        "invariant extension must not decrease the leading eigenvalue"
    );
    Ok(ExtensionResult { system: extended, closed, depth_used })
}

/// Convenience constructor for expected-value tests.
pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::basilica;
    use crate::isotopy::classify_curve;
    use crate::marked::parse_word;

    fn mat(rows: &[&[(i64, i64)]]) -> RationalMatrix {
        let rows: Vec<Vec<BigRational>> = rows
            .iter()
            .map(|r| r.iter().map(|&(n, d)| rational(n, d)).collect())
            .collect();
        RationalMatrix::from_rows(rows, MatrixProvenance::Weighted).unwrap()
    }

    #[test]
    fn spectral_verdicts_on_small_matrices() {
        assert_eq!(compare_spectral_radius_to_one(&mat(&[&[(1, 1)]])), SpectralVerdict::Equal);
        assert_eq!(compare_spectral_radius_to_one(&mat(&[&[(1, 2)]])), SpectralVerdict::Less);
        assert_eq!(
            compare_spectral_radius_to_one(&mat(&[&[(0, 1), (1, 1)], &[(1, 1), (0, 1)]])),
            SpectralVerdict::Equal
        );
        assert_eq!(
            compare_spectral_radius_to_one(&mat(&[&[(0, 1), (2, 1)], &[(1, 1), (0, 1)]])),
            SpectralVerdict::Greater
        );
        // golden ratio: x^2 - x - 1, lambda > 1
        assert_eq!(
            compare_spectral_radius_to_one(&mat(&[&[(1, 1), (1, 1)], &[(1, 1), (0, 1)]])),
            SpectralVerdict::Greater
        );
        // lambda = sqrt(1/2) < 1
        assert_eq!(
            compare_spectral_radius_to_one(&mat(&[&[(0, 1), (1, 2)], &[(1, 1), (0, 1)]])),
            SpectralVerdict::Less
        );
    }

    #[test]
    fn frobenius_blocks_of_triangular_matrix() {
        let m = mat(&[&[(1, 1), (1, 1)], &[(0, 1), (1, 1)]]);
        let d = frobenius_blocks(&m);
        assert_eq!(d.blocks.len(), 2);
        let m2 = mat(&[&[(0, 1), (1, 1)], &[(1, 1), (0, 1)]]);
        let d2 = frobenius_blocks(&m2);
        assert_eq!(d2.blocks.len(), 1);
        assert!(d2.blocks[0].irreducible);
    }

    #[test]
    fn basilica_round_curve_matrix_is_one_half() {
        let rec = basilica();
        let ms = rec.base();
        // the round curve around {-1, 0}
        let gamma = classify_curve(
            ms,
            &parse_word(ms, "x0 x1").unwrap(),
            Some(Provenance::UserAsserted),
        );
        let sys = CurveSystem::new(vec![gamma]).unwrap();
        let m = thurston_matrix(&rec, &sys).unwrap();
        assert_eq!(m.get(0, 0), &rational(1, 2));
        assert_eq!(compare_spectral_radius_to_one(&m), SpectralVerdict::Less);
        let um = unweighted_matrix_curves(&rec, &sys).unwrap();
        assert_eq!(um.get(0, 0), &rational(1, 1));
    }

    #[test]
    fn basilica_has_no_levy_cycles_at_small_bound() {
        let rec = basilica();
        let search = find_levy_cycles(&rec, 6, 4, 10_000).unwrap();
        assert!(search.complete);
        assert!(search.certificates.is_empty());
    }

    #[test]
    fn row_sum_bound_property() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let n = rng.gen_range(1..5);
            let mut rows = Vec::new();
            for _ in 0..n {
                let row: Vec<BigRational> =
                    (0..n).map(|_| rational(rng.gen_range(0..4), rng.gen_range(1..4))).collect();
                rows.push(row);
            }
            let m = RationalMatrix::from_rows(rows, MatrixProvenance::Weighted).unwrap();
            let sums = m.row_sums();
            let one = BigRational::one();
            let verdict = compare_spectral_radius_to_one(&m);
            if sums.iter().all(|s| s < &one) {
                assert_eq!(verdict, SpectralVerdict::Less);
            }
            if sums.iter().all(|s| s == &sums[0]) {
                // constant row sums: lambda equals the common sum
                use std::cmp::Ordering;
                let expected = match sums[0].cmp(&one) {
                    Ordering::Less => SpectralVerdict::Less,
                    Ordering::Equal => SpectralVerdict::Equal,
                    Ordering::Greater => SpectralVerdict::Greater,
                };
                assert_eq!(verdict, expected);
            }
        }
    }

    #[test]
    fn weighted_below_unweighted_with_equal_support() {
        use rand::{Rng, SeedableRng};
        let rec = basilica();
        let ms = rec.base().clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..25 {
            let len = rng.gen_range(1..7);
            let letters: Vec<crate::marked::Letter> = (0..len)
                .map(|_| crate::marked::Letter::new(rng.gen_range(0..ms.rank()), rng.gen_bool(0.5)))
                .collect();
            let w = crate::marked::reduce(&ms, &letters).unwrap();
            let class = classify_curve(&ms, &w, Some(Provenance::UserAsserted));
            if class.kind() != CurveKind::Essential {
                continue;
            }
            let sys = CurveSystem::new(vec![class]).unwrap();
            let weighted = thurston_matrix(&rec, &sys).unwrap();
            let unweighted = unweighted_matrix_curves(&rec, &sys).unwrap();
            for i in 0..sys.len() {
                for j in 0..sys.len() {
                    assert!(weighted.get(i, j) <= unweighted.get(i, j));
                    assert_eq!(weighted.get(i, j).is_zero(), unweighted.get(i, j).is_zero());
                }
            }
        }
    }
}
