//! Word calculus for the fundamental group of the n-marked sphere.
//!
//! The group has one peripheral generator per marked point and the single
//! relation `x_0 x_1 ... x_{n-1} = 1`. Internally the last generator is
//! eliminated, so stored words are freely reduced words over
//! `x_0 .. x_{n-2}` and equality of normalized words decides equality in
//! the group. Conjugacy (free homotopy of loops) is decided on cyclic
//! canonical forms.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MarkedError {
    #[error("generator index {index} out of range for sphere with {n} marked points")]
    GeneratorOutOfRange { index: usize, n: usize },
    #[error("keep set must contain at least one label")]
    EmptyKeepSet,
    #[error("label {0:?} is not a marked point of this sphere")]
    UnknownLabel(String),
    #[error("marked point labels must be pairwise distinct")]
    DuplicateLabel,
}

/// The sphere with `n` labeled marked points in a fixed planar cyclic order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarkedSphere {
    labels: Vec<String>,
}

impl MarkedSphere {
    pub fn new<S: Into<String>>(labels: Vec<S>) -> Result<Self, MarkedError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        assert!(!labels.is_empty(), "a marked sphere needs at least one point");
        for (i, a) in labels.iter().enumerate() {
            if labels[i + 1..].contains(a) {
                return Err(MarkedError::DuplicateLabel);
            }
        }
        Ok(MarkedSphere { labels })
    }

    /// Convenience constructor with labels `p0, p1, ...`.
    pub fn standard(n: usize) -> Self {
        MarkedSphere::new((0..n).map(|i| format!("p{i}")).collect::<Vec<_>>()).unwrap()
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Rank of the free group the words live in (the last generator is
    /// eliminated). A once-marked sphere has trivial group.
    pub fn rank(&self) -> usize {
        self.n().saturating_sub(1)
    }

    /// The sphere obtained by forgetting all marked points outside `keep`
    /// (given as indices into this sphere's labels). Order is preserved.
    pub fn forget(&self, keep: &[usize]) -> Result<MarkedSphere, MarkedError> {
        if keep.is_empty() {
            return Err(MarkedError::EmptyKeepSet);
        }
        let mut sorted: Vec<usize> = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for &i in &sorted {
            if i >= self.n() {
                return Err(MarkedError::GeneratorOutOfRange { index: i, n: self.n() });
            }
        }
        MarkedSphere::new(sorted.iter().map(|&i| self.labels[i].clone()).collect::<Vec<_>>())
    }
}

/// One signed generator occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub gen: usize,
    pub inv: bool,
}

impl Letter {
    pub fn new(gen: usize, inv: bool) -> Self {
        Letter { gen, inv }
    }

    pub fn inverse(self) -> Self {
        Letter { gen: self.gen, inv: !self.inv }
    }
}

/// A normalized word: freely reduced, never mentioning the eliminated last
/// generator. The empty word is the identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Self {
        Word { letters: Vec::new() }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub(crate) fn from_normalized(letters: Vec<Letter>) -> Self {
        debug_assert!(letters.windows(2).all(|w| w[0] != w[1].inverse()));
        Word { letters }
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "x{}{}", l.gen, if l.inv { "'" } else { "" })?;
        }
        Ok(())
    }
}

fn push_reduced(out: &mut Vec<Letter>, l: Letter) {
    if out.last() == Some(&l.inverse()) {
        out.pop();
    } else {
        out.push(l);
    }
}

/// Normalizes a raw letter sequence: rewrites the eliminated generator
/// `x_{n-1}` as `(x_0 .. x_{n-2})^{-1}` and freely reduces. Idempotent.
pub fn reduce(ms: &MarkedSphere, raw: &[Letter]) -> Result<Word, MarkedError> {
    let n = ms.n();
    let mut out: Vec<Letter> = Vec::with_capacity(raw.len());
    for &l in raw {
        if l.gen >= n {
            return Err(MarkedError::GeneratorOutOfRange { index: l.gen, n });
        }
        if l.gen + 1 == n {
            // x_{n-1} = (x_0 .. x_{n-2})^{-1}; its inverse is the plain product.
            if l.inv {
                for g in 0..n - 1 {
                    push_reduced(&mut out, Letter::new(g, false));
                }
            } else {
                for g in (0..n - 1).rev() {
                    push_reduced(&mut out, Letter::new(g, true));
                }
            }
        } else {
            push_reduced(&mut out, l);
        }
    }
    Ok(Word { letters: out })
}

/// Product of two normalized words (free reduction at the seam).
pub fn mul(a: &Word, b: &Word) -> Word {
    let mut out = a.letters.clone();
    for &l in &b.letters {
        push_reduced(&mut out, l);
    }
    Word { letters: out }
}

pub fn mul_all<'a, I: IntoIterator<Item = &'a Word>>(items: I) -> Word {
    let mut acc = Word::identity();
    for w in items {
        acc = mul(&acc, w);
    }
    acc
}

/// `u w u^{-1}`.
pub fn conjugate(u: &Word, w: &Word) -> Word {
    mul(&mul(u, w), &u.inverse())
}

pub fn pow(w: &Word, k: usize) -> Word {
    let mut acc = Word::identity();
    for _ in 0..k {
        acc = mul(&acc, w);
    }
    acc
}

/// The normalized form of the peripheral generator `x_i`.
pub fn peripheral_word(ms: &MarkedSphere, i: usize) -> Result<Word, MarkedError> {
    reduce(ms, &[Letter::new(i, false)])
}

fn cyclic_reduce(mut letters: Vec<Letter>) -> (Word, Vec<Letter>) {
    // Returns (conjugator prefix, core). w = prefix * core * prefix^{-1}.
    let mut prefix = Vec::new();
    while letters.len() >= 2 && letters.first().copied() == letters.last().map(|l| l.inverse()) {
        let first = letters.remove(0);
        letters.pop();
        prefix.push(first);
    }
    (Word { letters: prefix }, letters)
}

fn min_rotation(letters: &[Letter]) -> Vec<Letter> {
    if letters.is_empty() {
        return Vec::new();
    }
    let m = letters.len();
    let mut best: Option<Vec<Letter>> = None;
    for r in 0..m {
        let rot: Vec<Letter> = letters[r..].iter().chain(letters[..r].iter()).copied().collect();
        if best.as_ref().map_or(true, |b| rot < *b) {
            best = Some(rot);
        }
    }
    best.unwrap()
}

/// Canonical form for conjugacy: cyclically reduce, then take the
/// lexicographically least rotation; with `unoriented` set, also minimize
/// over the inverse word. Two words get equal outputs iff they are
/// conjugate (up to inversion when the flag is set).
pub fn cyclic_canonical(ms: &MarkedSphere, w: &Word, unoriented: bool) -> Word {
    let _ = ms;
    let (_, core) = cyclic_reduce(w.letters.clone());
    let mut best = min_rotation(&core);
    if unoriented {
        let inv_core: Vec<Letter> = core.iter().rev().map(|l| l.inverse()).collect();
        let alt = min_rotation(&inv_core);
        if alt < best {
            best = alt;
        }
    }
    Word { letters: best }
}

/// The conjugator `u` with `w = u * core * u^{-1}` where `core` is the
/// cyclically reduced part of `w`.
pub fn peel_conjugator(w: &Word) -> (Word, Word) {
    let (prefix, core) = cyclic_reduce(w.letters.clone());
    (prefix, Word { letters: core })
}

/// Applies the quotient that forgets every marked point outside `keep`
/// (killing their generators), re-expressed in the smaller sphere.
/// `keep` is a set of indices into `ms`; the result is a word of
/// `ms.forget(keep)`.
pub fn forget_punctures(ms: &MarkedSphere, keep: &[usize], w: &Word) -> Result<Word, MarkedError> {
    let small = ms.forget(keep)?;
    let mut sorted: Vec<usize> = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    // old generator index -> new index (None = killed)
    let mut map: Vec<Option<usize>> = vec![None; ms.n()];
    for (new, &old) in sorted.iter().enumerate() {
        map[old] = Some(new);
    }
    let mut raw = Vec::with_capacity(w.len());
    for &l in w.letters() {
        if let Some(new_gen) = map[l.gen] {
            raw.push(Letter::new(new_gen, l.inv));
        }
    }
    reduce(&small, &raw)
}

/// Total order used for deterministic enumeration: length, then lex.
pub fn word_cmp(a: &Word, b: &Word) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.letters.cmp(&b.letters))
}

/// Parses a whitespace-separated word over the sphere's labels, a trailing
/// `'` marking an inverse letter: `"a b' a"`. The token `xK` (K a number)
/// is also accepted for standard spheres. `"1"` or the empty string is the
/// identity.
pub fn parse_word(ms: &MarkedSphere, text: &str) -> Result<Word, MarkedError> {
    let mut raw = Vec::new();
    for tok in text.split_whitespace() {
        if tok == "1" {
            continue;
        }
        let (name, inv) = match tok.strip_suffix('\'') {
            Some(base) => (base, true),
            None => (tok, false),
        };
        let gen = match ms.index_of(name) {
            Some(g) => g,
            None => {
                // fall back to xK syntax
                let stripped = name.strip_prefix('x');
                match stripped.and_then(|s| s.parse::<usize>().ok()) {
                    Some(g) if g < ms.n() => g,
                    _ => return Err(MarkedError::UnknownLabel(name.to_string())),
                }
            }
        };
        raw.push(Letter::new(gen, inv));
    }
    reduce(ms, &raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(ms: &MarkedSphere, spec: &[(usize, bool)]) -> Word {
        let raw: Vec<Letter> = spec.iter().map(|&(g, i)| Letter::new(g, i)).collect();
        reduce(ms, &raw).unwrap()
    }

    #[test]
    fn reduce_identity_cases() {
        let ms = MarkedSphere::standard(3);
        assert!(w(&ms, &[(0, false), (0, true)]).is_identity());
        // On n=3 the relation forces x_2 = x_1^{-1} x_0^{-1}.
        let x2 = w(&ms, &[(2, false)]);
        assert_eq!(
            x2.letters(),
            &[Letter::new(1, true), Letter::new(0, true)]
        );
        // Free reduction in the middle.
        let v = w(&ms, &[(0, false), (1, false), (1, true), (0, false)]);
        assert_eq!(v.letters(), &[Letter::new(0, false), Letter::new(0, false)]);
    }

    #[test]
    fn reduce_rejects_out_of_range() {
        let ms = MarkedSphere::standard(3);
        assert_eq!(
            reduce(&ms, &[Letter::new(3, false)]),
            Err(MarkedError::GeneratorOutOfRange { index: 3, n: 3 })
        );
    }

    #[test]
    fn one_puncture_sphere_is_simply_connected() {
        let ms = MarkedSphere::standard(1);
        assert!(w(&ms, &[(0, false)]).is_identity());
    }

    #[test]
    fn peripheral_words() {
        let ms4 = MarkedSphere::standard(4);
        assert_eq!(peripheral_word(&ms4, 1).unwrap().letters(), &[Letter::new(1, false)]);
        let ms3 = MarkedSphere::standard(3);
        assert_eq!(
            peripheral_word(&ms3, 2).unwrap().letters(),
            &[Letter::new(1, true), Letter::new(0, true)]
        );
        let ms1 = MarkedSphere::standard(1);
        assert!(peripheral_word(&ms1, 0).unwrap().is_identity());
    }

    #[test]
    fn cyclic_canonical_conjugacy() {
        let ms = MarkedSphere::standard(4);
        let a = w(&ms, &[(0, false), (1, false)]);
        let b = w(&ms, &[(1, false), (0, false)]);
        assert_eq!(cyclic_canonical(&ms, &a, true), cyclic_canonical(&ms, &b, true));

        let x0 = w(&ms, &[(0, false)]);
        let x0i = w(&ms, &[(0, true)]);
        assert_eq!(cyclic_canonical(&ms, &x0, true), cyclic_canonical(&ms, &x0i, true));
        assert_ne!(cyclic_canonical(&ms, &x0, false), cyclic_canonical(&ms, &x0i, false));
    }

    #[test]
    fn cyclic_canonical_distinguishes_nonconjugates() {
        // x_0 x_1 vs x_0 x_1^{-1}: brute-force check that no conjugator of
        // length <= 6 relates them, then check the canonical forms differ.
        let ms = MarkedSphere::standard(4);
        let a = w(&ms, &[(0, false), (1, false)]);
        let b = w(&ms, &[(0, false), (1, true)]);
        // abelianization already distinguishes them: exponent sums on x_1.
        let sum = |v: &Word, g: usize| -> i64 {
            v.letters()
                .iter()
                .filter(|l| l.gen == g)
                .map(|l| if l.inv { -1 } else { 1 })
                .sum()
        };
        assert_ne!(sum(&a, 1), sum(&b, 1));
        // exhaustive short conjugators, as an independent confirmation
        let letters: Vec<Letter> = (0..3)
            .flat_map(|g| [Letter::new(g, false), Letter::new(g, true)])
            .collect();
        let mut frontier = vec![Word::identity()];
        for _ in 0..6 {
            let mut next = Vec::new();
            for u in &frontier {
                assert_ne!(conjugate(u, &a), b);
                for &l in &letters {
                    next.push(mul(u, &Word::from_normalized(vec![l])));
                }
            }
            next.sort();
            next.dedup();
            frontier = next;
        }
        assert_ne!(cyclic_canonical(&ms, &a, true), cyclic_canonical(&ms, &b, true));
    }

    #[test]
    fn forget_examples() {
        // forget {p_2} from n=3: x_2 -> identity
        let ms3 = MarkedSphere::standard(3);
        let x2 = w(&ms3, &[(2, false)]);
        let f = forget_punctures(&ms3, &[0, 1], &x2).unwrap();
        assert!(f.is_identity());

        // forget nothing: w -> w
        let all: Vec<usize> = (0..3).collect();
        let v = w(&ms3, &[(0, false), (1, false)]);
        assert_eq!(forget_punctures(&ms3, &all, &v).unwrap(), v);

        // forget {p_1} from n=4: x_0 x_1 x_0 -> x_0 x_0
        let ms4 = MarkedSphere::standard(4);
        let u = w(&ms4, &[(0, false), (1, false), (0, false)]);
        let g = forget_punctures(&ms4, &[0, 2, 3], &u).unwrap();
        assert_eq!(g.letters(), &[Letter::new(0, false), Letter::new(0, false)]);

        assert_eq!(forget_punctures(&ms4, &[], &u), Err(MarkedError::EmptyKeepSet));
    }

    proptest! {
        #[test]
        fn reduce_is_idempotent(raw in proptest::collection::vec((0usize..5, any::<bool>()), 0..20)) {
            let ms = MarkedSphere::standard(5);
            let letters: Vec<Letter> = raw.iter().map(|&(g, i)| Letter::new(g, i)).collect();
            let once = reduce(&ms, &letters).unwrap();
            let twice = reduce(&ms, once.letters()).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn canonical_is_conjugation_invariant(
            a in proptest::collection::vec((0usize..4, any::<bool>()), 0..12),
            u in proptest::collection::vec((0usize..4, any::<bool>()), 0..8),
        ) {
            let ms = MarkedSphere::standard(5);
            let wa = reduce(&ms, &a.iter().map(|&(g, i)| Letter::new(g, i)).collect::<Vec<_>>()).unwrap();
            let wu = reduce(&ms, &u.iter().map(|&(g, i)| Letter::new(g, i)).collect::<Vec<_>>()).unwrap();
            let conj = conjugate(&wu, &wa);
            prop_assert_eq!(
                cyclic_canonical(&ms, &wa, false),
                cyclic_canonical(&ms, &conj, false)
            );
            prop_assert_eq!(
                cyclic_canonical(&ms, &wa, true),
                cyclic_canonical(&ms, &conj, true)
            );
        }

        #[test]
        fn forget_composes(raw in proptest::collection::vec((0usize..5, any::<bool>()), 0..14)) {
            let ms6 = MarkedSphere::standard(6);
            let word = reduce(&ms6, &raw.iter().map(|&(g, i)| Letter::new(g, i)).collect::<Vec<_>>()).unwrap();
            // forget {5} then {3} == forget {3,5}
            let keep_a: Vec<usize> = (0..5).collect();
            let step1 = forget_punctures(&ms6, &keep_a, &word).unwrap();
            let ms5 = ms6.forget(&keep_a).unwrap();
            let keep_b: Vec<usize> = vec![0, 1, 2, 4];
            let step2 = forget_punctures(&ms5, &keep_b, &step1).unwrap();
            let direct = forget_punctures(&ms6, &[0, 1, 2, 4], &word).unwrap();
            prop_assert_eq!(step2, direct);
        }
    }
}
