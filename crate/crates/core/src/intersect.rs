//! Exact geometric intersection numbers for free homotopy classes on the
//! punctured sphere.
//!
//! Classes are represented by cyclically reduced words. Lifts of the
//! corresponding geodesics are axes in the universal-cover tree of the
//! fan rose; two lifts cross if and only if their ideal endpoints link in
//! the planar circular order on the ends of the tree. The intersection
//! number is the number of linked phase pairs: one phase per letter of
//! each cyclic word. Self-intersection numbers count linked pairs of
//! distinct phases of the same word, which doubles as the simplicity test.
//!
//! The circular order is induced by the fan: at every vertex the outgoing
//! directions are ordered `in_{r-1}, out_{r-1}, ..., in_0, out_0`
//! counterclockwise, where `out_g` follows the letter `x_g` and `in_g` the
//! letter `x_g^{-1}`. The slope oracle on the four-punctured sphere pins
//! this convention in the tests.

use std::cmp::Ordering;

use crate::marked::Letter;
use crate::marked::{cyclic_canonical, peripheral_word, MarkedSphere, Word};

/// An eventually periodic reduced ray in the tree: `prefix . cycle^oo`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Ray {
    prefix: Vec<Letter>,
    cycle: Vec<Letter>,
}

impl Ray {
    /// Builds `prefix . cycle^oo`, absorbing cancellations at the seam.
    /// `cycle` must be nonempty and cyclically reduced, `prefix` reduced.
    fn new(mut prefix: Vec<Letter>, mut cycle: Vec<Letter>) -> Ray {
        debug_assert!(!cycle.is_empty());
        loop {
            match prefix.last() {
                Some(&last) if last == cycle[0].inverse() => {
                    prefix.pop();
                    cycle.rotate_left(1);
                }
                _ => break,
            }
        }
        Ray { prefix, cycle }
    }

    fn letter(&self, t: usize) -> Letter {
        if t < self.prefix.len() {
            self.prefix[t]
        } else {
            self.cycle[(t - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// Depth after which two rays that still agree must be equal.
    fn agreement_bound(&self, other: &Ray) -> usize {
        let pre = self.prefix.len().max(other.prefix.len());
        let lcm = num_integer::lcm(self.cycle.len(), other.cycle.len());
        pre + 2 * lcm + 2
    }
}

/// Index of a letter's direction in the counterclockwise order at a
/// vertex: `in_{r-1}, out_{r-1}, ..., in_0, out_0`.
fn dir_index(l: Letter, rank: usize) -> usize {
    2 * (rank - 1 - l.gen) + if l.inv { 0 } else { 1 }
}

/// Total order on tree ends: the circle cut at a fixed point. Two ends are
/// compared at their divergence vertex using the direction order cut at
/// the backtrack direction.
fn cmp_ends(a: &Ray, b: &Ray, rank: usize) -> Ordering {
    let bound = a.agreement_bound(b);
    let mut prev: Option<Letter> = None;
    for t in 0..bound {
        let la = a.letter(t);
        let lb = b.letter(t);
        if la == lb {
            prev = Some(la);
            continue;
        }
        let ra = rank_from_cut(la, prev, rank);
        let rb = rank_from_cut(lb, prev, rank);
        return ra.cmp(&rb);
    }
    Ordering::Equal
}

/// Rank of a direction in the vertex circle, cut just after the backtrack
/// direction (or at the fixed global cut for the base vertex).
fn rank_from_cut(l: Letter, prev: Option<Letter>, rank: usize) -> usize {
    let idx = dir_index(l, rank);
    match prev {
        None => idx,
        Some(p) => {
            let back = dir_index(p.inverse(), rank);
            (idx + 2 * rank - back) % (2 * rank)
        }
    }
}

/// Orientation of three pairwise distinct ends in the circular order.
fn orientation(x: &Ray, y: &Ray, z: &Ray, rank: usize) -> i8 {
    let xy = cmp_ends(x, y, rank) == Ordering::Less;
    let yz = cmp_ends(y, z, rank) == Ordering::Less;
    let zx = cmp_ends(z, x, rank) == Ordering::Less;
    let asc = [xy, yz, zx].iter().filter(|&&v| v).count();
    if asc >= 2 {
        1
    } else {
        -1
    }
}

/// Do the boundary pairs `{a-, a+}` and `{b-, b+}` link (interleave)?
fn linked(am: &Ray, ap: &Ray, bm: &Ray, bp: &Ray, rank: usize) -> bool {
    // coinciding endpoints never link strictly
    for x in [am, ap] {
        for y in [bm, bp] {
            if cmp_ends(x, y, rank) == Ordering::Equal {
                return false;
            }
        }
    }
    orientation(am, bm, ap, rank) != orientation(am, bp, ap, rank)
}

/// Linked, and aligned so that the crossing is counted exactly once: the
/// first axis must enter the common segment of the two axes at the base
/// vertex, i.e. its backward ray leaves the second axis immediately.
fn crossing_at_base(am: &Ray, ap: &Ray, bm: &Ray, bp: &Ray, rank: usize) -> bool {
    if am.letter(0) == bm.letter(0) || am.letter(0) == bp.letter(0) {
        return false;
    }
    linked(am, ap, bm, bp, rank)
}

fn rotate(letters: &[Letter], i: usize) -> Vec<Letter> {
    letters[i..].iter().chain(letters[..i].iter()).copied().collect()
}

fn inverse_letters(letters: &[Letter]) -> Vec<Letter> {
    letters.iter().rev().map(|l| l.inverse()).collect()
}

/// Axis of the cyclically reduced word at phase `i`: backward ray
/// `((rot_i w)^{-1})^oo`, forward ray `(rot_i w)^oo`.
fn axis(letters: &[Letter], i: usize) -> (Ray, Ray) {
    let r = rotate(letters, i);
    let ri = inverse_letters(&r);
    (Ray::new(Vec::new(), ri), Ray::new(Vec::new(), r))
}

/// Is the cyclic word a proper power?
fn is_proper_power(letters: &[Letter]) -> bool {
    let m = letters.len();
    for p in 1..m {
        if m % p == 0 {
            let mut ok = true;
            for t in 0..m {
                if letters[t] != letters[(t + p) % m] {
                    ok = false;
                    break;
                }
            }
            if ok {
                return true;
            }
        }
    }
    false
}

/// Geometric intersection number of two free homotopy classes given by
/// arbitrary representative words. Trivial and peripheral classes meet
/// nothing; equal simple classes meet themselves zero times. Inputs whose
/// cyclic reduction is a proper power are counted through their primitive
/// core with multiplicity.
pub fn curve_intersection(ms: &MarkedSphere, a: &Word, b: &Word) -> usize {
    let rank = ms.rank();
    if rank < 2 {
        return 0;
    }
    let (wa, ma) = primitive_core(ms, a);
    let (wb, mb) = primitive_core(ms, b);
    if wa.is_empty() || wb.is_empty() {
        return 0;
    }
    if is_peripheral_cycle(ms, &wa) || is_peripheral_cycle(ms, &wb) {
        return 0;
    }
    let mut count = 0usize;
    for i in 0..wa.len() {
        let (am, ap) = axis(&wa, i);
        for j in 0..wb.len() {
            let (bm, bp) = axis(&wb, j);
            if crossing_at_base(&am, &ap, &bm, &bp, rank) {
                count += 1;
            }
        }
    }
    count * ma * mb
}

/// Self-intersection number of the class of `w` (0 means simple). `None`
/// for proper powers of nontrivial classes, which are never simple.
pub fn self_intersection(ms: &MarkedSphere, w: &Word) -> Option<usize> {
    let rank = ms.rank();
    if rank < 2 {
        return Some(0);
    }
    let core = cyclic_canonical(ms, w, false);
    let letters = core.letters().to_vec();
    if letters.is_empty() || is_peripheral_cycle(ms, &letters) {
        return Some(0);
    }
    if is_proper_power(&letters) {
        return None;
    }
    let m = letters.len();
    // every self-crossing appears once per strand over ordered phase pairs
    let mut count = 0usize;
    for i in 0..m {
        let (am, ap) = axis(&letters, i);
        for j in 0..m {
            if i == j {
                continue;
            }
            let (bm, bp) = axis(&letters, j);
            if crossing_at_base(&am, &ap, &bm, &bp, rank) {
                count += 1;
            }
        }
    }
    debug_assert!(count % 2 == 0, "self-crossings pair up over ordered phases");
    Some(count / 2)
}

/// Is the class of `w` representable by a simple closed curve?
/// (Trivial and peripheral classes count as simple here.)
pub fn is_simple(ms: &MarkedSphere, w: &Word) -> bool {
    matches!(self_intersection(ms, w), Some(0))
}

fn primitive_core(ms: &MarkedSphere, w: &Word) -> (Vec<Letter>, usize) {
    let canon = cyclic_canonical(ms, w, false);
    let letters = canon.letters().to_vec();
    let m = letters.len();
    if m == 0 {
        return (letters, 1);
    }
    for p in 1..=m {
        if m % p == 0 {
            let mut ok = true;
            for t in 0..m {
                if letters[t] != letters[(t + p) % m] {
                    ok = false;
                    break;
                }
            }
            if ok {
                return (letters[..p].to_vec(), m / p);
            }
        }
    }
    (letters, 1)
}

/// Is the cyclically reduced word conjugate to a peripheral generator or
/// its inverse?
pub(crate) fn is_peripheral_cycle(ms: &MarkedSphere, letters: &[Letter]) -> bool {
    let w = Word::from_normalized(letters.to_vec());
    let canon = cyclic_canonical(ms, &w, true);
    for k in 0..ms.n() {
        if let Ok(xk) = peripheral_word(ms, k) {
            if cyclic_canonical(ms, &xk, true) == canon {
                return true;
            }
        }
    }
    false
}

/// Applies the automorphism that conjugates the listed generators by `c`
/// (the Dehn twist about the round curve with word `c`), letterwise.
fn twist_apply(ms: &MarkedSphere, conj: &Word, gens: &[usize], inverse: bool, w: &Word) -> Word {
    use crate::marked::{mul, reduce};
    let c = if inverse { conj.inverse() } else { conj.clone() };
    let mut out = Word::identity();
    for &l in w.letters() {
        let piece = if gens.contains(&l.gen) {
            let x = Word::from_normalized(vec![Letter::new(l.gen, false)]);
            let img = mul(&mul(&c, &x), &c.inverse());
            if l.inv {
                img.inverse()
            } else {
                img
            }
        } else {
            Word::from_normalized(vec![l])
        };
        out = mul(&out, &piece);
    }
    reduce(ms, out.letters()).expect("twist image is in range")
}

/// The word of the slope `p/q` curve on a four-marked sphere, generated
/// from the seed slopes by Dehn twists about the slope 0 and slope oo
/// round curves (which act on slopes by shears of step two). Returns
/// `None` unless the sphere has four points and `(p, q)` is primitive.
///
/// Seeds: `0/1 = x0 x1`, `1/0 = x1 x2`, `1/1` and `-1/1` the two curves
/// around `{p0, p2}`.
pub fn slope_word(ms: &MarkedSphere, p: i64, q: i64) -> Option<Word> {
    use crate::marked::parse_word;
    if ms.n() != 4 {
        return None;
    }
    let g = gcd64(p.abs(), q.abs());
    if g != 1 {
        return None;
    }
    // normalize to q >= 0, and p >= 0 when q == 0
    let (mut p, mut q) = if q < 0 || (q == 0 && p < 0) { (-p, -q) } else { (p, q) };
    // peel twist moves until a seed is reached; the calibrated actions are
    // T_A^e: q -> q + 2ep and T_B^e: p -> p - 2eq
    #[derive(Clone, Copy)]
    enum Mv {
        A(bool),
        B(bool),
    }
    let mut moves: Vec<Mv> = Vec::new();
    loop {
        if p.abs() <= 1 && q.abs() <= 1 {
            break;
        }
        if p.abs() > q.abs() {
            if (p + 2 * q).abs() < p.abs() {
                p += 2 * q;
                moves.push(Mv::B(false));
            } else {
                p -= 2 * q;
                moves.push(Mv::B(true));
            }
        } else if (q - 2 * p).abs() < q.abs() {
            q -= 2 * p;
            moves.push(Mv::A(false));
        } else {
            q += 2 * p;
            moves.push(Mv::A(true));
        }
    }
    // the slope is a projective class; renormalize the reduced pair
    if q < 0 || (q == 0 && p < 0) {
        p = -p;
        q = -q;
    }
    let seed = match (p, q) {
        (0, 1) => parse_word(ms, "x0 x1").ok()?,
        (1, 0) => parse_word(ms, "x1 x2").ok()?,
        (1, 1) => parse_word(ms, "x0 x2").ok()?,
        (-1, 1) => parse_word(ms, "x0 x1 x2 x1'").ok()?,
        _ => return None,
    };
    let ca = parse_word(ms, "x0 x1").ok()?;
    let cb = parse_word(ms, "x1 x2").ok()?;
    let mut w = seed;
    for mv in moves.into_iter().rev() {
        w = match mv {
            Mv::A(inv) => twist_apply(ms, &ca, &[0, 1], inv, &w),
            Mv::B(inv) => twist_apply(ms, &cb, &[1, 2], inv, &w),
        };
    }
    Some(w)
}

fn gcd64(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd64(b, a % b)
    }
}

/// Brute-force oracle: the number of transversal crossings of the two
/// closed straight lines of primitive directions `d1`, `d2` on the unit
/// square torus, counted by exact rational segment intersection (the
/// second line is offset generically). Test scaffolding for the slope
/// formula; independent of the axis-linking engine.
pub fn torus_line_crossings(d1: (i64, i64), d2: (i64, i64)) -> usize {
    use num_rational::Rational64;
    type Pt = (Rational64, Rational64);
    fn segments(d: (i64, i64), off: Pt) -> Vec<(Pt, Pt)> {
        // breakpoints of t in [0,1] where a coordinate hits an integer
        let (a, b) = d;
        let mut ts: Vec<Rational64> = vec![Rational64::new(0, 1), Rational64::new(1, 1)];
        let push_times = |coef: i64, off: Rational64, ts: &mut Vec<Rational64>| {
            if coef == 0 {
                return;
            }
            // times where coef * t + off is an integer
            let lo = -coef.abs() - 2;
            for m in lo..=(coef.abs() + 2) {
                let t = (Rational64::from_integer(m) - off) / Rational64::from_integer(coef);
                if t > Rational64::new(0, 1) && t < Rational64::new(1, 1) {
                    ts.push(t);
                }
            }
        };
        push_times(a, off.0, &mut ts);
        push_times(b, off.1, &mut ts);
        ts.sort();
        ts.dedup();
        let frac = |x: Rational64| x - x.floor();
        let mut out = Vec::new();
        for w in ts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let mid = (t0 + t1) / Rational64::from_integer(2);
            let p0 = (
                frac(Rational64::from_integer(a) * mid + off.0)
                    - Rational64::from_integer(a) * (mid - t0),
                frac(Rational64::from_integer(b) * mid + off.1)
                    - Rational64::from_integer(b) * (mid - t0),
            );
            let p1 = (
                p0.0 + Rational64::from_integer(a) * (t1 - t0),
                p0.1 + Rational64::from_integer(b) * (t1 - t0),
            );
            out.push((p0, p1));
        }
        out
    }
    fn orient(a: Pt, b: Pt, c: Pt) -> i8 {
        let v = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
        match v.cmp(&num_rational::Rational64::new(0, 1)) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => -1,
            std::cmp::Ordering::Equal => 0,
        }
    }
    let off1 = (Rational64::new(1, 11), Rational64::new(1, 17));
    let off2 = (Rational64::new(1, 7), Rational64::new(1, 13));
    let s1 = segments(d1, off1);
    let s2 = segments(d2, off2);
    let mut count = 0usize;
    for (a0, a1) in &s1 {
        for (b0, b1) in &s2 {
            let o1 = orient(*a0, *a1, *b0);
            let o2 = orient(*a0, *a1, *b1);
            let o3 = orient(*b0, *b1, *a0);
            let o4 = orient(*b0, *b1, *a1);
            assert!(
                o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0,
                "degenerate crossing; offset not generic"
            );
            if o1 != o2 && o3 != o4 {
                count += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marked::{mul, parse_word};

    fn ms4() -> MarkedSphere {
        MarkedSphere::standard(4)
    }

    fn w(ms: &MarkedSphere, s: &str) -> Word {
        parse_word(ms, s).unwrap()
    }

    #[test]
    fn peripheral_meets_nothing() {
        let ms = ms4();
        let per = w(&ms, "x1");
        let round = w(&ms, "x0 x1");
        assert_eq!(curve_intersection(&ms, &per, &round), 0);
        assert_eq!(curve_intersection(&ms, &per, &w(&ms, "x1 x2")), 0);
        // x_3 written out through the relation is peripheral as well
        let x3 = w(&ms, "x3");
        assert_eq!(curve_intersection(&ms, &x3, &round), 0);
    }

    #[test]
    fn round_curves_cross_twice() {
        let ms = ms4();
        let a = w(&ms, "x0 x1"); // separates {p0, p1}
        let b = w(&ms, "x1 x2"); // separates {p1, p2}
        assert_eq!(curve_intersection(&ms, &a, &b), 2);
        // a curve does not cross itself
        assert_eq!(curve_intersection(&ms, &a, &a), 0);
        // conjugates represent the same class
        let conj = mul(&mul(&w(&ms, "x2"), &a), &w(&ms, "x2'"));
        assert_eq!(curve_intersection(&ms, &conj, &b), 2);
        assert_eq!(curve_intersection(&ms, &a, &conj), 0);
    }

    #[test]
    fn simplicity_detects_figure_eight() {
        let ms = ms4();
        assert!(is_simple(&ms, &w(&ms, "x0 x1")));
        assert!(is_simple(&ms, &w(&ms, "x1 x2")));
        assert!(is_simple(&ms, &w(&ms, "x0")));
        // the commutator class is not simple
        let comm = w(&ms, "x0 x1 x0' x1'");
        assert!(!is_simple(&ms, &comm));
        // proper powers are not simple
        let sq = mul(&w(&ms, "x0 x1"), &w(&ms, "x0 x1"));
        assert!(!is_simple(&ms, &sq));
    }

    #[test]
    fn three_punctures_have_no_essential_curves() {
        let ms = MarkedSphere::standard(3);
        let a = w(&ms, "x0 x1"); // peripheral around p2
        let b = w(&ms, "x0 x1 x0 x1");
        assert_eq!(curve_intersection(&ms, &a, &b), 0);
    }

    fn coprime_slopes(max: i64) -> Vec<(i64, i64)> {
        let mut out = vec![(1, 0)];
        for q in 1..=max {
            for p in -max..=max {
                if gcd64(p, q) == 1 {
                    out.push((p, q));
                }
            }
        }
        out
    }

    #[test]
    fn torus_oracle_confirms_determinant_counts() {
        for &(p, q) in &coprime_slopes(3) {
            for &(r, s) in &coprime_slopes(3) {
                let det = (p * s - q * r).unsigned_abs() as usize;
                if det == 0 {
                    continue;
                }
                // directions (q, p) and (s, r)
                assert_eq!(torus_line_crossings((q, p), (s, r)), det, "slopes {p}/{q}, {r}/{s}");
            }
        }
    }

    #[test]
    fn engine_matches_slope_formula_small_grid() {
        let ms = ms4();
        let slopes = coprime_slopes(3);
        for &(p, q) in &slopes {
            let wa = slope_word(&ms, p, q).unwrap();
            assert!(is_simple(&ms, &wa), "slope {p}/{q} word must be simple");
            for &(r, s) in &slopes {
                let wb = slope_word(&ms, r, s).unwrap();
                let expect = 2 * (p * s - q * r).unsigned_abs() as usize;
                assert_eq!(
                    curve_intersection(&ms, &wa, &wb),
                    expect,
                    "slopes {p}/{q} vs {r}/{s}"
                );
            }
        }
    }
}
