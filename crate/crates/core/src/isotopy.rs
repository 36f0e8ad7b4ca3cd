//! Isotopy classes of simple closed curves and arcs in the marked sphere,
//! their lifts through a recursion, and exact intersection data.
//!
//! A curve class is the unoriented cyclic canonical form of its word. An
//! arc from `p_i` to `p_j` is stored as its path class in the sphere with
//! the two endpoints filled in, measured against fixed reference paths;
//! equality of that data decides isotopy. Intersection numbers for arcs
//! reduce to curve intersections of the boundaries of their regular
//! neighborhoods.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::cover::Recursion;
use crate::intersect::{curve_intersection, is_simple};
use crate::marked::{
    cyclic_canonical, forget_punctures, mul, peripheral_word, reduce, Letter, MarkedSphere, Word,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IsotopyError {
    #[error("classes live on different marked spheres")]
    ContextMismatch,
    #[error("endpoint index {0} out of range")]
    EndpointOutOfRange(usize),
    #[error("operation requires simplicity provenance on both operands")]
    SimplicityRequired,
    #[error("intersection numbers for arcs with coinciding endpoints are not supported")]
    LoopArcUnsupported,
    #[error("curve class is trivial")]
    TrivialCurve,
    #[error("class {0} is not a lift of its designated image")]
    NotALift(usize),
    #[error("system elements must be pairwise non-isotopic")]
    DuplicateClass,
    #[error("word is not simple (self-intersection {0:?})")]
    NotSimple(Option<usize>),
}

/// How we know a class is simple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Provenance {
    UserAsserted,
    LiftOfSimple,
    Verified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Trivial,
    Peripheral(usize),
    Essential,
}

/// An unoriented free homotopy class of closed curves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveClass {
    context: MarkedSphere,
    canonical: Word,
    kind: CurveKind,
    simplicity: Option<Provenance>,
}

impl CurveClass {
    pub fn context(&self) -> &MarkedSphere {
        &self.context
    }

    pub fn canonical(&self) -> &Word {
        &self.canonical
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn simplicity(&self) -> Option<Provenance> {
        self.simplicity
    }

    pub fn is_essential(&self) -> bool {
        self.kind == CurveKind::Essential
    }

    /// Upgrades (or sets) the provenance by running the simplicity check.
    pub fn verify_simple(&mut self) -> Result<(), IsotopyError> {
        if is_simple(&self.context, &self.canonical) {
            self.simplicity = Some(Provenance::Verified);
            Ok(())
        } else {
            Err(IsotopyError::NotSimple(crate::intersect::self_intersection(
                &self.context,
                &self.canonical,
            )))
        }
    }
}

/// Canonicalizes a word into a curve class, detecting trivial and
/// peripheral kinds.
pub fn classify_curve(
    ms: &MarkedSphere,
    w: &Word,
    simplicity: Option<Provenance>,
) -> CurveClass {
    let canonical = cyclic_canonical(ms, w, true);
    let kind = if canonical.is_identity() {
        CurveKind::Trivial
    } else {
        let mut kind = CurveKind::Essential;
        for k in 0..ms.n() {
            if let Ok(xk) = peripheral_word(ms, k) {
                if cyclic_canonical(ms, &xk, true) == canonical {
                    kind = CurveKind::Peripheral(k);
                    break;
                }
            }
        }
        kind
    };
    let simplicity = match kind {
        CurveKind::Trivial | CurveKind::Peripheral(_) => Some(Provenance::Verified),
        CurveKind::Essential => simplicity,
    };
    CurveClass { context: ms.clone(), canonical, kind, simplicity }
}

/// An isotopy class of embedded arcs between marked points. The path word
/// lives in the quotient sphere with the endpoint punctures filled in;
/// endpoints are stored with `from <= to` and loops at one point are
/// normalized up to reversal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ArcClass {
    context: MarkedSphere,
    from: usize,
    to: usize,
    word: Word,
}

impl ArcClass {
    /// Builds the class of the arc `a_from^{-1} . W . a_to` from a path
    /// word `W` in the full group of the sphere.
    pub fn new(
        ms: &MarkedSphere,
        from: usize,
        to: usize,
        path_word: &Word,
    ) -> Result<ArcClass, IsotopyError> {
        let n = ms.n();
        if from >= n {
            return Err(IsotopyError::EndpointOutOfRange(from));
        }
        if to >= n {
            return Err(IsotopyError::EndpointOutOfRange(to));
        }
        let keep: Vec<usize> = (0..n).filter(|&i| i != from && i != to).collect();
        let (a, b, w) =
            if from <= to { (from, to, path_word.clone()) } else { (to, from, path_word.inverse()) };
        let mut word = if keep.is_empty() {
            Word::identity()
        } else {
            forget_punctures(ms, &keep, &w).expect("endpoint quotient is well-formed")
        };
        if a == b {
            // reversal is the only normalization left for a loop arc
            word = word.clone().min(word.inverse());
        }
        Ok(ArcClass { context: ms.clone(), from: a, to: b, word })
    }

    pub fn context(&self) -> &MarkedSphere {
        &self.context
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.from, self.to)
    }

    pub fn has_distinct_endpoints(&self) -> bool {
        self.from != self.to
    }

    /// The stored path word, in the quotient sphere with the endpoint
    /// punctures filled in.
    pub fn quotient_word(&self) -> &Word {
        &self.word
    }

    /// A representative path word back in the full group (the letterwise
    /// section of the quotient word).
    pub fn section(&self) -> Word {
        section_word(&self.context, self.from, self.to, &self.word)
    }

    /// The boundary class of a regular neighborhood of the arc (together
    /// with its endpoints); a curve class for arcs with distinct
    /// endpoints.
    pub fn neighborhood_boundary(&self) -> Result<CurveClass, IsotopyError> {
        if !self.has_distinct_endpoints() {
            return Err(IsotopyError::LoopArcUnsupported);
        }
        let w = self.section();
        let xi = peripheral_word(&self.context, self.from).expect("endpoint in range");
        let xj = peripheral_word(&self.context, self.to).expect("endpoint in range");
        let boundary = mul(&xi, &mul(&mul(&w, &xj), &w.inverse()));
        Ok(classify_curve(&self.context, &boundary, Some(Provenance::LiftOfSimple)))
    }
}

/// Letterwise section of a quotient-sphere word back to the full group.
fn section_word(ms: &MarkedSphere, from: usize, to: usize, q: &Word) -> Word {
    let keep: Vec<usize> = (0..ms.n()).filter(|&i| i != from && i != to).collect();
    let raw: Vec<Letter> = q.letters().iter().map(|l| Letter::new(keep[l.gen], l.inv)).collect();
    reduce(ms, &raw).expect("section letters are in range")
}

/// One lift of a curve class: a cycle of sheets, its degree, and the
/// downstairs class of the lifted curve.
#[derive(Debug, Clone)]
pub struct CurveLiftRecord {
    pub sheet_orbit: Vec<usize>,
    pub degree: usize,
    pub word: Word,
    pub class: CurveClass,
}

/// One lift of an arc class: the sheet carrying its basepoint passage,
/// the endpoint preimage labels, and, when both endpoints are marked, the
/// forgotten downstairs class.
#[derive(Debug, Clone)]
pub struct ArcLiftRecord {
    pub sheet: usize,
    pub from_label: (usize, usize),
    pub to_label: (usize, usize),
    pub from_marked: Option<usize>,
    pub to_marked: Option<usize>,
    pub entry: Word,
    pub forgotten: Option<ArcClass>,
}

/// Lifts a curve class through the recursion: one record per cycle of the
/// image permutation, with degree the cycle length and lift word the
/// entry product along the cycle.
pub fn lift_curve(
    rec: &Recursion,
    class: &CurveClass,
) -> Result<Vec<CurveLiftRecord>, IsotopyError> {
    if class.context() != rec.base() {
        return Err(IsotopyError::ContextMismatch);
    }
    if class.kind() == CurveKind::Trivial {
        return Err(IsotopyError::TrivialCurve);
    }
    let lifted = rec.wreath_image(class.canonical());
    let provenance = class.simplicity().map(|_| Provenance::LiftOfSimple);
    let mut out = Vec::new();
    for cycle in lifted.perm.cycles() {
        let mut word = Word::identity();
        let mut s = cycle[0];
        for _ in 0..cycle.len() {
            word = mul(&word, &lifted.entries[s]);
            s = lifted.perm.apply(s);
        }
        let class = classify_curve(rec.base(), &word, provenance);
        out.push(CurveLiftRecord { degree: cycle.len(), sheet_orbit: cycle, word, class });
    }
    Ok(out)
}

/// Lifts an arc class: exactly `deg` records, one per sheet.
pub fn lift_arc(rec: &Recursion, arc: &ArcClass) -> Result<Vec<ArcLiftRecord>, IsotopyError> {
    if arc.context() != rec.base() {
        return Err(IsotopyError::ContextMismatch);
    }
    let w = arc.section();
    let lifted = rec.wreath_image(&w);
    let (i, j) = (arc.from, arc.to);
    let mut out = Vec::new();
    for s in 0..rec.degree() {
        let t = lifted.perm.apply(s);
        let from_label = (i, rec.perm(i).cycle_of(s)[0]);
        let to_label = (j, rec.perm(j).cycle_of(t)[0]);
        let from_marked = rec.marked_point_over(i, s);
        let to_marked = rec.marked_point_over(j, t);
        let entry = lifted.entries[s].clone();
        let forgotten = match (from_marked, to_marked) {
            (Some(k), Some(k2)) => {
                let a = rec.marked_anchor(k, s).expect("anchor exists on valid recursion");
                let b = rec.marked_anchor(k2, t).expect("anchor exists on valid recursion");
                let word = mul(&a, &mul(&entry, &b.inverse()));
                Some(ArcClass::new(rec.base(), k, k2, &word)?)
            }
            _ => None,
        };
        out.push(ArcLiftRecord {
            sheet: s,
            from_label,
            to_label,
            from_marked,
            to_marked,
            entry,
            forgotten,
        });
    }
    Ok(out)
}

/// `mult(f: a -> b)`: the number of lifts of `b` isotopic to `a`.
pub fn multiplicity(rec: &Recursion, a: &ArcClass, b: &ArcClass) -> Result<usize, IsotopyError> {
    let lifts = lift_arc(rec, b)?;
    Ok(lifts.iter().filter(|r| r.forgotten.as_ref() == Some(a)).count())
}

/// Either kind of class, for mixed systems.
#[derive(Debug, Clone, Copy)]
pub enum ClassRef<'a> {
    Curve(&'a CurveClass),
    Arc(&'a ArcClass),
}

impl<'a> ClassRef<'a> {
    fn context(&self) -> &MarkedSphere {
        match self {
            ClassRef::Curve(c) => c.context(),
            ClassRef::Arc(a) => a.context(),
        }
    }
}

/// Exact geometric intersection number. Requires simplicity provenance on
/// curve operands; arcs must have distinct endpoints.
pub fn intersection_number(a: ClassRef, b: ClassRef) -> Result<usize, IsotopyError> {
    if a.context() != b.context() {
        return Err(IsotopyError::ContextMismatch);
    }
    let ms = a.context();
    match (a, b) {
        (ClassRef::Curve(c1), ClassRef::Curve(c2)) => {
            if c1.simplicity().is_none() || c2.simplicity().is_none() {
                return Err(IsotopyError::SimplicityRequired);
            }
            Ok(curve_intersection(ms, c1.canonical(), c2.canonical()))
        }
        (ClassRef::Curve(c), ClassRef::Arc(arc)) | (ClassRef::Arc(arc), ClassRef::Curve(c)) => {
            if c.simplicity().is_none() {
                return Err(IsotopyError::SimplicityRequired);
            }
            let boundary = arc.neighborhood_boundary()?;
            let doubled = curve_intersection(ms, boundary.canonical(), c.canonical());
            debug_assert!(doubled % 2 == 0, "arc doubling yields even counts");
            Ok(doubled / 2)
        }
        (ClassRef::Arc(a1), ClassRef::Arc(a2)) => {
            if a1 == a2 {
                return Ok(0);
            }
            if !a1.has_distinct_endpoints() || !a2.has_distinct_endpoints() {
                return Err(IsotopyError::LoopArcUnsupported);
            }
            arc_arc_intersection(ms, a1, a2)
        }
    }
}

/// Arc-arc intersection. With disjoint endpoint sets this is a quarter of
/// the boundary-curve intersection. A shared endpoint is split into two
/// adjacent punctures, minimizing over the relative germ positions there
/// (rotating a germ fully around its marked point is isotopically free).
fn arc_arc_intersection(
    ms: &MarkedSphere,
    a1: &ArcClass,
    a2: &ArcClass,
) -> Result<usize, IsotopyError> {
    let (i1, j1) = a1.endpoints();
    let (i2, j2) = a2.endpoints();
    let shared: Vec<usize> = [i2, j2]
        .iter()
        .copied()
        .filter(|&e| e == i1 || e == j1)
        .collect();
    if shared.is_empty() {
        let b1 = a1.neighborhood_boundary()?;
        let b2 = a2.neighborhood_boundary()?;
        let quadrupled = curve_intersection(ms, b1.canonical(), b2.canonical());
        debug_assert!(quadrupled % 4 == 0, "arc-arc doubling yields multiples of four");
        return Ok(quadrupled / 4);
    }

    // split sphere: a twin puncture right after every shared endpoint
    let mut labels: Vec<String> = Vec::new();
    let mut twin: Vec<Option<usize>> = vec![None; ms.n()]; // old -> twin new index
    let mut shift: Vec<usize> = vec![0; ms.n()]; // old -> new index
    for (old, lab) in ms.labels().iter().enumerate() {
        shift[old] = labels.len();
        labels.push(lab.clone());
        if shared.contains(&old) {
            twin[old] = Some(labels.len());
            labels.push(format!("{lab}*"));
        }
    }
    let big = MarkedSphere::new(labels).expect("twin labels are fresh");
    let lift_word = |w: &Word| -> Word {
        let raw: Vec<Letter> =
            w.letters().iter().map(|l| Letter::new(shift[l.gen], l.inv)).collect();
        reduce(&big, &raw).expect("shifted letters in range")
    };

    // the first arc keeps its endpoints; the second lands on the twins
    let a1_big = ArcClass::new(&big, shift[i1], shift[j1], &lift_word(&a1.section()))?;
    let e2_from = twin[i2].unwrap_or(shift[i2]);
    let e2_to = twin[j2].unwrap_or(shift[j2]);
    let base2 = lift_word(&a2.section());

    // minimize over germ rotations at the split endpoints
    let window: i32 = 3;
    let mut best: Option<usize> = None;
    let mut best_at_edge = false;
    for mf in -window..=window {
        for mt in -window..=window {
            if twin[i2].is_none() && mf != 0 {
                continue;
            }
            if twin[j2].is_none() && mt != 0 {
                continue;
            }
            let mut wrd = base2.clone();
            if let Some(_) = twin[i2] {
                let rot = power_word(&big, shift[i2], -mf);
                wrd = mul(&rot, &wrd);
            }
            if let Some(_) = twin[j2] {
                let rot = power_word(&big, shift[j2], mt);
                wrd = mul(&wrd, &rot);
            }
            let a2_big = ArcClass::new(&big, e2_from, e2_to, &wrd)?;
            let b1 = a1_big.neighborhood_boundary()?;
            let b2 = a2_big.neighborhood_boundary()?;
            let quadrupled = curve_intersection(&big, b1.canonical(), b2.canonical());
            debug_assert!(quadrupled % 4 == 0);
            let val = quadrupled / 4;
            if best.map_or(true, |b| val < b) {
                best = Some(val);
                best_at_edge = mf.abs() == window || mt.abs() == window;
            }
        }
    }
    debug_assert!(!best_at_edge, "germ rotation window too small");
    Ok(best.unwrap())
}

fn power_word(ms: &MarkedSphere, gen: usize, e: i32) -> Word {
    let x = peripheral_word(ms, gen).expect("generator in range");
    let mut out = Word::identity();
    for _ in 0..e.unsigned_abs() {
        out = mul(&out, &x);
    }
    if e < 0 {
        out.inverse()
    } else {
        out
    }
}

/// True iff all pairwise intersection numbers vanish, which suffices for
/// simultaneous disjoint realization of simple systems on the sphere.
pub fn disjoint_realizable(system: &[ClassRef]) -> Result<bool, IsotopyError> {
    for (i, a) in system.iter().enumerate() {
        for b in system.iter().skip(i + 1) {
            if intersection_number(*a, *b)? != 0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// An ordered system of pairwise distinct arc classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcSystem {
    elements: Vec<ArcClass>,
}

impl ArcSystem {
    pub fn new(elements: Vec<ArcClass>) -> Result<ArcSystem, IsotopyError> {
        for (i, a) in elements.iter().enumerate() {
            for b in &elements[i + 1..] {
                if a == b {
                    return Err(IsotopyError::DuplicateClass);
                }
                if a.context() != b.context() {
                    return Err(IsotopyError::ContextMismatch);
                }
            }
        }
        Ok(ArcSystem { elements })
    }

    pub fn elements(&self) -> &[ArcClass] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn position(&self, arc: &ArcClass) -> Option<usize> {
        self.elements.iter().position(|a| a == arc)
    }
}

/// An ordered system of pairwise distinct curve classes.
#[derive(Debug, Clone)]
pub struct CurveSystem {
    elements: Vec<CurveClass>,
}

impl CurveSystem {
    pub fn new(elements: Vec<CurveClass>) -> Result<CurveSystem, IsotopyError> {
        for (i, a) in elements.iter().enumerate() {
            for b in &elements[i + 1..] {
                if a.canonical() == b.canonical() {
                    return Err(IsotopyError::DuplicateClass);
                }
                if a.context() != b.context() {
                    return Err(IsotopyError::ContextMismatch);
                }
            }
        }
        Ok(CurveSystem { elements })
    }

    pub fn elements(&self) -> &[CurveClass] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn position(&self, class: &CurveClass) -> Option<usize> {
        self.elements.iter().position(|c| c.canonical() == class.canonical())
    }

    /// Nonperipheral, pairwise disjoint, all essential and simple.
    pub fn is_multicurve(&self) -> Result<bool, IsotopyError> {
        for c in &self.elements {
            if !c.is_essential() {
                return Ok(false);
            }
            if c.simplicity().is_none() {
                return Err(IsotopyError::SimplicityRequired);
            }
        }
        let refs: Vec<ClassRef> = self.elements.iter().map(ClassRef::Curve).collect();
        disjoint_realizable(&refs)
    }
}

/// A witness that an arc system is forward invariant up to isotopy: for
/// each element of the system, a chosen lift (source index and sheet)
/// whose forgotten class is that element.
#[derive(Debug, Clone)]
pub struct InvarianceWitness {
    /// `assignment[target] = (source, sheet)`.
    pub assignment: Vec<(usize, usize)>,
    /// The sub-system actually lifted (indices into the system).
    pub sources: BTreeSet<usize>,
}

/// Searches the lifts of the system for a sub-system and one lift per
/// element whose forgotten classes biject onto the whole system.
pub fn forward_invariant_check(
    rec: &Recursion,
    system: &ArcSystem,
) -> Result<Option<InvarianceWitness>, IsotopyError> {
    let m = system.len();
    // candidates[target] = all (source, sheet) whose forgotten class is it
    let mut candidates: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
    for (src, arc) in system.elements().iter().enumerate() {
        for r in lift_arc(rec, arc)? {
            if let Some(f) = &r.forgotten {
                if let Some(t) = system.position(f) {
                    candidates[t].push((src, r.sheet));
                }
            }
        }
    }
    fn assign(
        t: usize,
        m: usize,
        candidates: &[Vec<(usize, usize)>],
        matched: &mut Vec<Option<usize>>,
        used: &mut BTreeSet<(usize, usize)>,
    ) -> bool {
        if t == m {
            return true;
        }
        for (ci, rec_id) in candidates[t].iter().enumerate() {
            if used.contains(rec_id) {
                continue;
            }
            used.insert(*rec_id);
            matched[t] = Some(ci);
            if assign(t + 1, m, candidates, matched, used) {
                return true;
            }
            used.remove(rec_id);
            matched[t] = None;
        }
        false
    }
    let mut matched: Vec<Option<usize>> = vec![None; m];
    let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
    if !assign(0, m, &candidates, &mut matched, &mut used) {
        return Ok(None);
    }
    let mut assignment = Vec::with_capacity(m);
    let mut sources = BTreeSet::new();
    for (t, choice) in matched.iter().enumerate() {
        let (src, sheet) = candidates[t][choice.unwrap()];
        assignment.push((src, sheet));
        sources.insert(src);
    }
    Ok(Some(InvarianceWitness { assignment, sources }))
}

/// From a collection of arcs with designated forward images inside the
/// collection (each arc a lift of its image), extracts an arc system that
/// is forward invariant up to isotopy and contains every input class up
/// to isotopy. Implements the two-stage selection of the invariance
/// proposition.
pub fn find_invariant_subsystem(
    rec: &Recursion,
    arcs: &[ArcClass],
    images: &[usize],
) -> Result<ArcSystem, IsotopyError> {
    assert_eq!(arcs.len(), images.len());
    for (idx, arc) in arcs.iter().enumerate() {
        let img = &arcs[images[idx]];
        let lifts = lift_arc(rec, img)?;
        if !lifts.iter().any(|r| r.forgotten.as_ref() == Some(arc)) {
            return Err(IsotopyError::NotALift(idx));
        }
    }
    // stage one: dedup the image classes; stage two: adjoin the leftovers
    let mut lambda: Vec<ArcClass> = Vec::new();
    for &i in images {
        if !lambda.contains(&arcs[i]) {
            lambda.push(arcs[i].clone());
        }
    }
    for arc in arcs {
        if !lambda.contains(arc) {
            lambda.push(arc.clone());
        }
    }
    ArcSystem::new(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{basilica, basilica_marked, z_squared};
    use crate::marked::parse_word;

    fn curve(ms: &MarkedSphere, s: &str) -> CurveClass {
        classify_curve(ms, &parse_word(ms, s).unwrap(), Some(Provenance::UserAsserted))
    }

    #[test]
    fn classify_kinds() {
        let ms = MarkedSphere::standard(4);
        assert_eq!(curve(&ms, "x1").kind(), CurveKind::Peripheral(1));
        assert_eq!(curve(&ms, "").kind(), CurveKind::Trivial);
        assert_eq!(curve(&ms, "x0 x1").kind(), CurveKind::Essential);
        // x2 x3 is the same unoriented class as x0 x1 on four punctures
        assert_eq!(curve(&ms, "x2 x3").canonical(), curve(&ms, "x0 x1").canonical());
    }

    #[test]
    fn z_squared_full_cycle_lift() {
        let rec = z_squared();
        let ms = rec.base();
        let gamma = classify_curve(ms, &parse_word(ms, "x0").unwrap(), None);
        let lifts = lift_curve(&rec, &gamma).unwrap();
        assert_eq!(lifts.len(), 1);
        assert_eq!(lifts[0].degree, 2);
    }

    #[test]
    fn basilica_arc_lifts_match_hand_diagram() {
        let rec = basilica();
        let ms = rec.base();
        // the arc [-1, 0]: straight between adjacent row points
        let lam = ArcClass::new(ms, 0, 1, &Word::identity()).unwrap();
        let lifts = lift_arc(&rec, &lam).unwrap();
        assert_eq!(lifts.len(), 2);
        let marked_both: Vec<_> = lifts.iter().filter(|r| r.forgotten.is_some()).collect();
        assert_eq!(marked_both.len(), 1);
        // the marked lift is the arc itself: f([-1,0]) = [-1,0] setwise
        assert_eq!(marked_both[0].forgotten.as_ref(), Some(&lam));
        assert_eq!(multiplicity(&rec, &lam, &lam).unwrap(), 1);
    }

    #[test]
    fn marked_basilica_chain_lift_structure() {
        let rec = basilica_marked();
        let ms = rec.base();
        // f([0,1]) = [-1,0]; its lifts are [0,+1] (sheet 0) and [-1,0]
        let image = ArcClass::new(ms, 0, 1, &Word::identity()).unwrap();
        let chain = ArcClass::new(ms, 1, 2, &Word::identity()).unwrap();
        let lifts = lift_arc(&rec, &image).unwrap();
        assert_eq!(lifts.len(), 2);
        assert_eq!(lifts[0].forgotten.as_ref(), Some(&chain));
        let back = ArcClass::new(ms, 0, 1, &Word::identity()).unwrap();
        assert_eq!(lifts[1].forgotten.as_ref(), Some(&back));
    }

    #[test]
    fn arc_count_equals_degree() {
        let rec = basilica_marked();
        let ms = rec.base();
        for (i, j, w) in [(0usize, 1usize, ""), (1, 2, ""), (0, 3, "x1"), (2, 3, "x0")] {
            let arc = ArcClass::new(ms, i, j, &parse_word(ms, w).unwrap()).unwrap();
            assert_eq!(lift_arc(&rec, &arc).unwrap().len(), rec.degree());
        }
    }

    #[test]
    fn intersections_of_round_curves_and_arcs() {
        let ms = MarkedSphere::standard(4);
        let c01 = curve(&ms, "x0 x1");
        let c12 = curve(&ms, "x1 x2");
        assert_eq!(intersection_number(ClassRef::Curve(&c01), ClassRef::Curve(&c12)).unwrap(), 2);
        // the straight arc [p0, p1] meets the curve around {p1, p2} once
        let a01 = ArcClass::new(&ms, 0, 1, &Word::identity()).unwrap();
        assert_eq!(intersection_number(ClassRef::Arc(&a01), ClassRef::Curve(&c12)).unwrap(), 1);
        // and is disjoint from the curve around {p0, p1}
        assert_eq!(intersection_number(ClassRef::Arc(&a01), ClassRef::Curve(&c01)).unwrap(), 0);
        // two straight arcs sharing the endpoint p1 are disjoint
        let a12 = ArcClass::new(&ms, 1, 2, &Word::identity()).unwrap();
        assert_eq!(intersection_number(ClassRef::Arc(&a01), ClassRef::Arc(&a12)).unwrap(), 0);
        // peripheral curves meet nothing
        let p = curve(&ms, "x2");
        assert_eq!(intersection_number(ClassRef::Curve(&p), ClassRef::Curve(&c01)).unwrap(), 0);
        assert_eq!(intersection_number(ClassRef::Curve(&p), ClassRef::Arc(&a01)).unwrap(), 0);
    }

    #[test]
    fn crossing_arcs_have_positive_intersection() {
        let ms = MarkedSphere::standard(4);
        // the straight arc [p1, p2] and an arc from p0 to p3 that passes
        // between p1 and p2 must cross
        let a12 = ArcClass::new(&ms, 1, 2, &Word::identity()).unwrap();
        let a03 = ArcClass::new(&ms, 0, 3, &parse_word(&ms, "x1").unwrap()).unwrap();
        let i = intersection_number(ClassRef::Arc(&a12), ClassRef::Arc(&a03)).unwrap();
        assert!(i > 0, "separating arc must cross, got {i}");
    }

    #[test]
    fn forward_invariance_of_the_basilica_arc() {
        let rec = basilica();
        let ms = rec.base();
        let lam = ArcClass::new(ms, 0, 1, &Word::identity()).unwrap();
        let system = ArcSystem::new(vec![lam.clone()]).unwrap();
        let witness = forward_invariant_check(&rec, &system).unwrap();
        assert!(witness.is_some());

        // a system whose element has no marked-endpoint lift fails
        let rec2 = basilica_marked();
        let arc = ArcClass::new(rec2.base(), 1, 2, &Word::identity()).unwrap();
        let sys2 = ArcSystem::new(vec![arc]).unwrap();
        assert!(forward_invariant_check(&rec2, &sys2).unwrap().is_none());
    }

    #[test]
    fn invariant_subsystem_from_designations() {
        let rec = basilica();
        let ms = rec.base();
        let lam = ArcClass::new(ms, 0, 1, &Word::identity()).unwrap();
        let sys = find_invariant_subsystem(&rec, &[lam.clone()], &[0]).unwrap();
        assert_eq!(sys.len(), 1);
        // duplicate inputs collapse
        let sys2 = find_invariant_subsystem(&rec, &[lam.clone(), lam.clone()], &[0, 1]).unwrap();
        assert_eq!(sys2.len(), 1);
    }

    #[test]
    fn lift_degree_sums_over_random_pool() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for rec in [z_squared(), basilica(), basilica_marked()] {
            let ms = rec.base().clone();
            for _ in 0..40 {
                let len = rng.gen_range(1..10);
                let letters: Vec<Letter> = (0..len)
                    .map(|_| Letter::new(rng.gen_range(0..ms.rank()), rng.gen_bool(0.5)))
                    .collect();
                let w = reduce(&ms, &letters).unwrap();
                let class = classify_curve(&ms, &w, None);
                if class.kind() == CurveKind::Trivial {
                    continue;
                }
                let lifts = lift_curve(&rec, &class).unwrap();
                let total: usize = lifts.iter().map(|r| r.degree).sum();
                assert_eq!(total, rec.degree());
            }
        }
    }
}
