//! Marked branched coverings encoded as wreath recursions.
//!
//! A covering `(f, X)` of degree `d` is stored as, per peripheral generator
//! of the base sphere, a sheet permutation plus one connecting word per
//! sheet, together with the marked-point dynamics (which preimage of its
//! image each marked point is). Lifting loops becomes algebra in the
//! wreath product.
//!
//! Orientation convention: the positive lasso around the k-th row point
//! crosses up through the gate left of the point and down through the gate
//! right of it. With this convention the entry product around a designated
//! cycle equals a conjugate of the peripheral generator of the marked point
//! sitting there, and the product around an unmarked preimage point is the
//! identity. The z^2 model in the tests pins the convention.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::marked::{
    forget_punctures, mul, mul_all, peripheral_word, reduce, Letter, MarkedError, MarkedSphere,
    Word,
};
use crate::perm::Perm;

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("recursion shape invalid: {0}")]
    Shape(String),
    #[error(transparent)]
    Marked(#[from] MarkedError),
    #[error("recursion is invalid: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("sheet limit {limit} exceeded (needed {needed})")]
    SheetLimit { limit: usize, needed: usize },
    #[error("marking extension unsolvable: {0}")]
    ExtensionUnsolvable(String),
    #[error("invalid operation: {0}")]
    InvalidOperation(String),
}

/// A violated structural invariant, as reportable data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// The sheet permutations do not act transitively (disconnected cover).
    NotTransitive,
    /// The image of `x_0 .. x_{n-1}` in the wreath product is not the exact
    /// identity.
    RelationNotIdentity { detail: String },
    /// Branch count does not match `2d - 2`.
    RiemannHurwitz { got: usize, expected: usize },
    /// Two marked points designate the same preimage.
    TableNotInjective { first: usize, second: usize },
    /// A designated image or sheet is out of range.
    TableOutOfRange { marked: usize },
    /// Entry product around the designated cycle of a marked point is not
    /// conjugate to its peripheral generator.
    PeripheralProductMismatch { marked: usize },
    /// Entry product around an unmarked preimage point is not the identity.
    UnmarkedProductNontrivial { gen: usize, cycle_rep: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotTransitive => write!(f, "sheet action is not transitive"),
            Violation::RelationNotIdentity { detail } => {
                write!(f, "sphere relation does not map to the identity: {detail}")
            }
            Violation::RiemannHurwitz { got, expected } => {
                write!(f, "Riemann-Hurwitz branch count {got}, expected {expected}")
            }
            Violation::TableNotInjective { first, second } => {
                write!(f, "marked points {first} and {second} designate the same preimage")
            }
            Violation::TableOutOfRange { marked } => {
                write!(f, "marked point {marked} designates an out-of-range preimage")
            }
            Violation::PeripheralProductMismatch { marked } => {
                write!(f, "cycle product at marked point {marked} is not its peripheral class")
            }
            Violation::UnmarkedProductNontrivial { gen, cycle_rep } => write!(
                f,
                "cycle product at unmarked preimage (gen {gen}, sheet {cycle_rep}) is nontrivial"
            ),
        }
    }
}

/// Dynamics of one marked point: `f(p_k) = p_image`, with `p_k` being the
/// preimage of `p_image` whose local sheets form the cycle of `perm(image)`
/// containing `cycle_rep`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarkedTarget {
    pub image: usize,
    pub cycle_rep: usize,
}

/// Image of a word in the wreath product: a sheet permutation and one
/// connecting word per starting sheet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WreathElement {
    pub perm: Perm,
    pub entries: Vec<Word>,
}

impl WreathElement {
    pub fn identity(d: usize) -> Self {
        WreathElement { perm: Perm::identity(d), entries: vec![Word::identity(); d] }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.is_identity() && self.entries.iter().all(|w| w.is_identity())
    }

    /// `self * other` (reading order: self first).
    pub fn then(&self, other: &WreathElement) -> WreathElement {
        let d = self.entries.len();
        let perm = self.perm.then(&other.perm);
        let entries = (0..d)
            .map(|s| mul(&self.entries[s], &other.entries[self.perm.apply(s)]))
            .collect();
        WreathElement { perm, entries }
    }

    pub fn inverse(&self) -> WreathElement {
        let d = self.entries.len();
        let perm = self.perm.inverse();
        let entries = (0..d).map(|s| self.entries[perm.apply(s)].inverse()).collect();
        WreathElement { perm, entries }
    }
}

/// A marked branched covering `(f, X)` as monodromy-plus-connecting-path
/// data over its base sphere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recursion {
    base: MarkedSphere,
    degree: usize,
    perms: Vec<Perm>,
    entries: Vec<Vec<Word>>,
    table: Vec<MarkedTarget>,
}

impl Recursion {
    pub fn new(
        base: MarkedSphere,
        degree: usize,
        perms: Vec<Perm>,
        entries: Vec<Vec<Word>>,
        table: Vec<MarkedTarget>,
    ) -> Result<Self, CoverError> {
        let n = base.n();
        if degree == 0 {
            return Err(CoverError::Shape("degree must be at least 1".into()));
        }
        if perms.len() != n || entries.len() != n || table.len() != n {
            return Err(CoverError::Shape(format!(
                "expected {n} generator rows and table entries"
            )));
        }
        for (i, p) in perms.iter().enumerate() {
            if p.degree() != degree {
                return Err(CoverError::Shape(format!(
                    "permutation for generator {i} has wrong degree"
                )));
            }
            if entries[i].len() != degree {
                return Err(CoverError::Shape(format!(
                    "entry row for generator {i} has wrong length"
                )));
            }
        }
        let mut norm_entries = Vec::with_capacity(n);
        for row in &entries {
            let mut nrow = Vec::with_capacity(degree);
            for w in row {
                nrow.push(reduce(&base, w.letters())?);
            }
            norm_entries.push(nrow);
        }
        Ok(Recursion { base, degree, perms, entries: norm_entries, table })
    }

    pub fn base(&self) -> &MarkedSphere {
        &self.base
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn perm(&self, gen: usize) -> &Perm {
        &self.perms[gen]
    }

    pub fn entry(&self, gen: usize, sheet: usize) -> &Word {
        &self.entries[gen][sheet]
    }

    pub fn table(&self) -> &[MarkedTarget] {
        &self.table
    }

    pub fn target(&self, marked: usize) -> MarkedTarget {
        self.table[marked]
    }

    /// Local degree of the covering at the marked point `k`.
    pub fn local_degree(&self, k: usize) -> usize {
        let t = self.table[k];
        self.perms[t.image].cycle_of(t.cycle_rep).len()
    }

    /// The designated cycle (starting at its minimum) of marked point `k`.
    pub fn marked_cycle(&self, k: usize) -> Vec<usize> {
        let t = self.table[k];
        self.perms[t.image].cycle_of(t.cycle_rep)
    }

    /// Wreath image of a normalized word.
    pub fn wreath_image(&self, w: &Word) -> WreathElement {
        let d = self.degree;
        let mut entries: Vec<Word> = vec![Word::identity(); d];
        let mut states: Vec<usize> = (0..d).collect();
        for &l in w.letters() {
            let sigma = &self.perms[l.gen];
            let sigma_inv = sigma.inverse();
            for e in entries.iter_mut().zip(states.iter_mut()) {
                let (entry, state) = e;
                if l.inv {
                    let pre = sigma_inv.apply(*state);
                    *entry = mul(entry, &self.entries[l.gen][pre].inverse());
                    *state = pre;
                } else {
                    *entry = mul(entry, &self.entries[l.gen][*state]);
                    *state = sigma.apply(*state);
                }
            }
        }
        let perm = Perm::from_images(states).expect("word walk is a bijection");
        WreathElement { perm, entries }
    }

    /// Sheet permutation of a word (monodromy, right action).
    pub fn monodromy(&self, w: &Word) -> Perm {
        self.wreath_image(w).perm
    }

    /// Product of connecting entries along the cycle of `perm(gen)`
    /// containing `rep`, starting at the cycle minimum.
    pub fn cycle_product(&self, gen: usize, rep: usize) -> Word {
        let cycle = self.perms[gen].cycle_of(rep);
        mul_all(cycle.iter().map(|&s| &self.entries[gen][s]))
    }

    /// The conjugator relating a marked point's designated cycle product to
    /// its peripheral generator: `product = A^{-1} x_k A` at the cycle
    /// minimum. `None` if the product is not conjugate to `x_k`.
    pub fn marked_anchor_at_min(&self, k: usize) -> Option<Word> {
        let t = self.table[k];
        let product = self.cycle_product(t.image, t.cycle_rep);
        let xk = peripheral_word(&self.base, k).ok()?;
        solve_conjugacy(&product, &xk)
    }

    /// Anchor of marked point `k` at an arbitrary sheet of its designated
    /// cycle: walking one step along the cycle multiplies the anchor by the
    /// entry at the current sheet.
    pub fn marked_anchor(&self, k: usize, sheet: usize) -> Option<Word> {
        let t = self.table[k];
        let cycle = self.perms[t.image].cycle_of(t.cycle_rep);
        if !cycle.contains(&sheet) {
            return None;
        }
        let mut anchor = self.marked_anchor_at_min(k)?;
        let mut s = cycle[0];
        while s != sheet {
            anchor = mul(&anchor, &self.entries[t.image][s]);
            s = self.perms[t.image].apply(s);
        }
        Some(anchor)
    }

    /// Which marked point (if any) designates the preimage point
    /// `(gen, cycle containing rep)`.
    pub fn marked_point_over(&self, gen: usize, rep: usize) -> Option<usize> {
        let min = self.perms[gen].cycle_of(rep)[0];
        self.table
            .iter()
            .position(|t| t.image == gen && self.perms[gen].cycle_of(t.cycle_rep)[0] == min)
    }

    /// All violated invariants; an empty list means the recursion is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.base.n();
        let d = self.degree;

        // transitivity
        let mut seen = vec![false; d];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for p in &self.perms {
                for t in [p.apply(s), p.inverse().apply(s)] {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
        }
        if !seen.iter().all(|&b| b) {
            out.push(Violation::NotTransitive);
        }

        // the relation maps to the exact identity of the wreath product
        let mut rel = WreathElement::identity(d);
        for g in 0..n {
            rel = rel.then(&WreathElement { perm: self.perms[g].clone(), entries: self.entries[g].clone() });
        }
        if !rel.perm.is_identity() {
            out.push(Violation::RelationNotIdentity {
                detail: format!("relation permutation is {}", rel.perm),
            });
        } else if let Some(s) = rel.entries.iter().position(|w| !w.is_identity()) {
            out.push(Violation::RelationNotIdentity {
                detail: format!("relation entry at sheet {} is {}", s + 1, rel.entries[s]),
            });
        }

        // Riemann-Hurwitz branch count
        let branch: usize = self
            .perms
            .iter()
            .map(|p| p.cycles().iter().map(|c| c.len() - 1).sum::<usize>())
            .sum();
        if branch != 2 * d - 2 {
            out.push(Violation::RiemannHurwitz { got: branch, expected: 2 * d - 2 });
        }

        // marked-preimage table: ranges and injectivity
        let mut designated: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (k, t) in self.table.iter().enumerate() {
            if t.image >= n || t.cycle_rep >= d {
                out.push(Violation::TableOutOfRange { marked: k });
                continue;
            }
            let min = self.perms[t.image].cycle_of(t.cycle_rep)[0];
            if let Some(&first) = designated.get(&(t.image, min)) {
                out.push(Violation::TableNotInjective { first, second: k });
            } else {
                designated.insert((t.image, min), k);
            }
        }

        // peripheral structure of entry products (geometric realizability)
        for g in 0..n {
            for cycle in self.perms[g].cycles() {
                let rep = cycle[0];
                let product = self.cycle_product(g, rep);
                match designated.get(&(g, rep)) {
                    Some(&k) => {
                        if let Ok(xk) = peripheral_word(&self.base, k) {
                            if solve_conjugacy(&product, &xk).is_none() {
                                out.push(Violation::PeripheralProductMismatch { marked: k });
                            }
                        }
                    }
                    None => {
                        if !product.is_identity() {
                            out.push(Violation::UnmarkedProductNontrivial {
                                gen: g,
                                cycle_rep: rep,
                            });
                        }
                    }
                }
            }
        }

        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Marked indices in the postcritical set: the forward closure of the
    /// critical-value indices under the marked dynamics.
    pub fn postcritical(&self) -> BTreeSet<usize> {
        let mut critical_values = BTreeSet::new();
        for (g, p) in self.perms.iter().enumerate() {
            if p.cycles().iter().any(|c| c.len() >= 2) {
                critical_values.insert(g);
            }
        }
        let mut out = BTreeSet::new();
        let mut frontier: Vec<usize> = critical_values.into_iter().collect();
        while let Some(k) = frontier.pop() {
            if out.insert(k) {
                frontier.push(self.table[k].image);
            }
        }
        out
    }

    /// Preimage labels `(gen, cycle minimum)` of all marked points, sorted.
    pub fn preimage_labels(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for g in 0..self.base.n() {
            for cycle in self.perms[g].cycles() {
                out.push((g, cycle[0]));
            }
        }
        out
    }

    /// Orbifold data of `(f, X)`.
    pub fn orbifold(&self) -> OrbifoldData {
        let n = self.base.n();
        // infinite weight exactly on marked cycles through a critical point
        let mut on_super_cycle = vec![false; n];
        for start in 0..n {
            let mut seen = vec![false; n];
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = self.table[k].image;
            }
            let mut cycle = vec![k];
            let mut j = self.table[k].image;
            while j != k {
                cycle.push(j);
                j = self.table[j].image;
            }
            if cycle.contains(&start) && cycle.iter().any(|&m| self.local_degree(m) >= 2) {
                on_super_cycle[start] = true;
            }
        }

        // minimal finite weights by fixpoint iteration: nu(x) must be
        // divisible by deg_y(f) * nu(y) for every preimage y of x
        let mut preimages: Vec<Vec<(usize, Option<usize>)>> = vec![Vec::new(); n];
        for g in 0..n {
            for cycle in self.perms[g].cycles() {
                preimages[g].push((cycle.len(), self.marked_point_over(g, cycle[0])));
            }
        }
        let mut nu: Vec<u64> = vec![1; n];
        for _ in 0..4 * n * n + 8 {
            let mut changed = false;
            for x in 0..n {
                if on_super_cycle[x] {
                    continue;
                }
                let mut v: u64 = 1;
                for &(deg, marked) in &preimages[x] {
                    let base = match marked {
                        Some(y) if on_super_cycle[y] => continue,
                        Some(y) => nu[y],
                        None => 1,
                    };
                    v = num_integer::lcm(v, base * deg as u64);
                }
                if v != nu[x] {
                    nu[x] = v;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let weights: Vec<Weight> = (0..n)
            .map(|x| if on_super_cycle[x] { Weight::Infinite } else { Weight::Finite(nu[x]) })
            .collect();

        let mut chi = BigRational::from_integer(BigInt::from(2));
        for w in &weights {
            match w {
                Weight::Infinite => chi -= BigRational::from_integer(BigInt::from(1)),
                Weight::Finite(v) => {
                    chi -= BigRational::from_integer(BigInt::from(1))
                        - BigRational::new(BigInt::from(1), BigInt::from(*v));
                }
            }
        }

        let mut signature: Vec<Weight> =
            weights.iter().copied().filter(|w| *w != Weight::Finite(1)).collect();
        signature.sort();
        let is_2222 = signature.len() == 4 && signature.iter().all(|w| *w == Weight::Finite(2));
        let is_hyperbolic = chi < BigRational::from_integer(BigInt::from(0));

        OrbifoldData { nu: weights, chi, signature, is_2222, is_hyperbolic }
    }

    /// The recursion of `f^k` on the same marked sphere.
    pub fn iterate(&self, k: usize, max_sheets: usize) -> Result<Recursion, CoverError> {
        if k == 0 {
            return Err(CoverError::InvalidOperation("iterate needs k >= 1".into()));
        }
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.compose_after(self, max_sheets)?;
        }
        Ok(acc)
    }

    /// Recursion of `self ∘ inner` (apply `inner` first). Both recursions
    /// must share the base sphere.
    pub fn compose_after(
        &self,
        inner: &Recursion,
        max_sheets: usize,
    ) -> Result<Recursion, CoverError> {
        if self.base != inner.base {
            return Err(CoverError::InvalidOperation(
                "can only compose recursions over the same marked sphere".into(),
            ));
        }
        let n = self.base.n();
        let d_outer = self.degree;
        let d_inner = inner.degree;
        let d = d_outer
            .checked_mul(d_inner)
            .filter(|&d| d <= max_sheets)
            .ok_or(CoverError::SheetLimit { limit: max_sheets, needed: d_outer.saturating_mul(d_inner) })?;

        let mut perms = Vec::with_capacity(n);
        let mut entries = Vec::with_capacity(n);
        for g in 0..n {
            let mut images = vec![0usize; d];
            let mut row = vec![Word::identity(); d];
            for s in 0..d_outer {
                let s2 = self.perms[g].apply(s);
                let lifted = inner.wreath_image(&self.entries[g][s]);
                for t in 0..d_inner {
                    images[s * d_inner + t] = s2 * d_inner + lifted.perm.apply(t);
                    row[s * d_inner + t] = lifted.entries[t].clone();
                }
            }
            perms.push(
                Perm::from_images(images)
                    .ok_or_else(|| CoverError::Shape("composition broke a permutation".into()))?,
            );
            entries.push(row);
        }

        let draft = Recursion {
            base: self.base.clone(),
            degree: d,
            perms,
            entries,
            table: vec![MarkedTarget { image: 0, cycle_rep: 0 }; n],
        };
        // designated cycles are recovered from the peripheral products: the
        // unique cycle over the composed image conjugate to x_k
        let mut table = Vec::with_capacity(n);
        for k in 0..n {
            let image = self.table[inner.table[k].image].image;
            let xk = peripheral_word(&self.base, k)?;
            let mut found = None;
            for cycle in draft.perms[image].cycles() {
                if solve_conjugacy(&draft.cycle_product(image, cycle[0]), &xk).is_some() {
                    if found.is_some() {
                        return Err(CoverError::InvalidOperation(format!(
                            "ambiguous designated cycle for marked point {k} in composition"
                        )));
                    }
                    found = Some(cycle[0]);
                }
            }
            let cycle_rep = found.ok_or_else(|| {
                CoverError::InvalidOperation(format!(
                    "no designated cycle for marked point {k} in composition"
                ))
            })?;
            table.push(MarkedTarget { image, cycle_rep });
        }
        Recursion::new(self.base.clone(), d, draft.perms, draft.entries, table)
    }

    /// Presentation data for the sphere marked by the full preimage of `X`.
    pub fn upstairs(&self) -> UpstairsPresentation {
        let d = self.degree;
        let n = self.base.n();
        // BFS transversal: shortest, then lexicographically least path
        let mut transversal: Vec<Option<Word>> = vec![None; d];
        transversal[0] = Some(Word::identity());
        let mut queue = VecDeque::from([0usize]);
        while let Some(s) = queue.pop_front() {
            let base_word = transversal[s].clone().unwrap();
            let mut moves: Vec<(Letter, usize)> = Vec::new();
            for g in 0..n {
                moves.push((Letter::new(g, false), self.perms[g].apply(s)));
                moves.push((Letter::new(g, true), self.perms[g].inverse().apply(s)));
            }
            for (l, t) in moves {
                if transversal[t].is_none() {
                    let w = reduce(&self.base, &[base_word.letters(), &[l][..]].concat()).unwrap();
                    transversal[t] = Some(w);
                    queue.push_back(t);
                }
            }
        }
        let transversal: Vec<Word> = transversal
            .into_iter()
            .map(|w| w.expect("transitive action reaches every sheet"))
            .collect();

        let mut labels = Vec::new();
        let mut peripheral = Vec::new();
        let mut marked_as = Vec::new();
        for g in 0..n {
            for cycle in self.perms[g].cycles() {
                let rep = cycle[0];
                labels.push((g, rep));
                let t = &transversal[rep];
                peripheral.push(mul(&mul(t, &self.cycle_product(g, rep)), &t.inverse()));
                marked_as.push(self.marked_point_over(g, rep));
            }
        }
        UpstairsPresentation { labels, peripheral, marked_as, transversal }
    }

    /// Restricts the marking to `keep` (indices into the base labels),
    /// quotienting all entries by the forgotten generators.
    pub fn forget_marks(&self, keep: &[usize]) -> Result<Recursion, CoverError> {
        let small = self.base.forget(keep)?;
        let mut sorted: Vec<usize> = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for &old in &sorted {
            let img = self.table[old].image;
            if !sorted.contains(&img) {
                return Err(CoverError::InvalidOperation(format!(
                    "kept point {} maps to forgotten point {}",
                    self.base.label(old),
                    self.base.label(img)
                )));
            }
        }
        let mut perms = Vec::with_capacity(sorted.len());
        let mut entries = Vec::with_capacity(sorted.len());
        let mut table = Vec::with_capacity(sorted.len());
        for &old in &sorted {
            perms.push(self.perms[old].clone());
            let row: Result<Vec<Word>, MarkedError> = self.entries[old]
                .iter()
                .map(|w| forget_punctures(&self.base, &sorted, w))
                .collect();
            entries.push(row?);
            let old_t = self.table[old];
            let image = sorted.iter().position(|&i| i == old_t.image).unwrap();
            table.push(MarkedTarget { image, cycle_rep: old_t.cycle_rep });
        }
        Recursion::new(small, self.degree, perms, entries, table)
    }
}

/// Solves `product = A^{-1} target A` where `target` is cyclically reduced;
/// returns a representative `A` (unique up to powers of `target`).
pub fn solve_conjugacy(product: &Word, target: &Word) -> Option<Word> {
    let (prefix, core) = crate::marked::peel_conjugator(product);
    let m = core.len();
    if m != target.len() {
        return None;
    }
    if m == 0 {
        return Some(Word::identity());
    }
    let core_letters = core.letters();
    let target_letters = target.letters();
    for r in 0..m {
        let rotated: Vec<Letter> =
            core_letters[r..].iter().chain(core_letters[..r].iter()).copied().collect();
        if rotated == target_letters {
            // product = prefix * core * prefix^{-1} and
            // core = rot * target * rot^{-1} with rot the first r letters.
            let rot = Word::from_normalized(core_letters[..r].to_vec());
            return Some(mul(&prefix, &rot).inverse());
        }
    }
    None
}

/// Orbifold weight of one marked point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Weight {
    Finite(u64),
    Infinite,
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Finite(v) => write!(f, "{v}"),
            Weight::Infinite => write!(f, "oo"),
        }
    }
}

/// The orbifold associated to `(f, X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbifoldData {
    pub nu: Vec<Weight>,
    pub chi: BigRational,
    pub signature: Vec<Weight>,
    pub is_2222: bool,
    pub is_hyperbolic: bool,
}

/// The sphere marked by `f^{-1}(X)`, presented through the base group.
#[derive(Debug, Clone)]
pub struct UpstairsPresentation {
    /// Preimage labels `(gen, cycle minimum)`, in scan order.
    pub labels: Vec<(usize, usize)>,
    /// Peripheral loop of each preimage point pushed forward to the base
    /// group (a transversal-conjugated entry cycle product).
    pub peripheral: Vec<Word>,
    /// Which marked point each preimage label is, if any.
    pub marked_as: Vec<Option<usize>>,
    /// Schreier transversal: a base word moving sheet 0 to each sheet.
    pub transversal: Vec<Word>,
}

impl UpstairsPresentation {
    pub fn count(&self) -> usize {
        self.labels.len()
    }
}

/// How a new marked point is designated in `mark_extension`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtraImage {
    /// A preimage of the existing marked point with this index.
    Marked(usize),
    /// A fixed point of `f` (designated by a single sheet).
    SelfFixed,
}

/// One new marked point for `mark_extension`.
#[derive(Debug, Clone)]
pub struct ExtraPoint {
    pub label: String,
    /// Row position in the extended sphere's label order.
    pub insert_at: usize,
    pub image: ExtraImage,
    /// Sheet designating which preimage the new point is.
    pub cycle_rep: usize,
}

impl Recursion {
    /// Extends the marking by new preimage points, one at a time, producing
    /// a valid recursion on the larger sphere whose forgetful image agrees
    /// with this one on all lift computations.
    pub fn mark_extension(&self, extras: &[ExtraPoint]) -> Result<Recursion, CoverError> {
        let mut acc = self.clone();
        for e in extras {
            acc = acc.extend_one(e)?;
        }
        Ok(acc)
    }

    fn extend_one(&self, extra: &ExtraPoint) -> Result<Recursion, CoverError> {
        let n = self.base.n();
        let d = self.degree;
        if extra.insert_at > n {
            return Err(CoverError::InvalidOperation("insertion position out of range".into()));
        }
        if extra.cycle_rep >= d {
            return Err(CoverError::InvalidOperation("designated sheet out of range".into()));
        }
        if let ExtraImage::Marked(i0) = extra.image {
            if i0 >= n {
                return Err(CoverError::InvalidOperation("image index out of range".into()));
            }
            if self.marked_point_over(i0, extra.cycle_rep).is_some() {
                return Err(CoverError::InvalidOperation(
                    "designated preimage is already a marked point".into(),
                ));
            }
        }

        let mut labels: Vec<String> = self.base.labels().to_vec();
        labels.insert(extra.insert_at, extra.label.clone());
        let big = MarkedSphere::new(labels)?;
        let z = extra.insert_at;
        let shift = |g: usize| if g >= z { g + 1 } else { g };
        let inj = |w: &Word| -> Word {
            let raw: Vec<Letter> =
                w.letters().iter().map(|l| Letter::new(shift(l.gen), l.inv)).collect();
            reduce(&big, &raw).expect("injected letters are in range")
        };

        // naive letterwise extension, with the identity row for x_z
        let mut perms: Vec<Perm> = Vec::with_capacity(n + 1);
        let mut entries: Vec<Vec<Word>> = Vec::with_capacity(n + 1);
        for g in 0..=n {
            if g == z {
                perms.push(Perm::identity(d));
                entries.push(vec![Word::identity(); d]);
            } else {
                let old = if g < z { g } else { g - 1 };
                perms.push(self.perms[old].clone());
                entries.push(self.entries[old].iter().map(&inj).collect());
            }
        }

        // repair targets: every designated cycle product must be conjugate
        // to its peripheral generator, matching the downstairs anchors
        let xz = peripheral_word(&big, z)?;
        let mut repairs: Vec<(usize, Vec<usize>, Word)> = Vec::new();
        if let ExtraImage::Marked(i0) = extra.image {
            let g = shift(i0);
            let cycle = perms[g].cycle_of(extra.cycle_rep);
            repairs.push((g, cycle, xz.clone()));
        }
        for k in 0..n {
            let t = self.table[k];
            let old_product = self.cycle_product(t.image, t.cycle_rep);
            let xk_old = peripheral_word(&self.base, k)?;
            let anchor = solve_conjugacy(&old_product, &xk_old).ok_or_else(|| {
                CoverError::InvalidOperation(format!(
                    "input recursion has no peripheral anchor at marked point {k}"
                ))
            })?;
            let b = inj(&anchor.inverse());
            let target = mul(&mul(&b, &peripheral_word(&big, shift(k))?), &b.inverse());
            let g = shift(t.image);
            let cycle = perms[g].cycle_of(t.cycle_rep);
            repairs.push((g, cycle, target));
        }

        // canonical placement first, then a bounded search over positions
        let sizes: Vec<usize> = repairs.iter().map(|(_, c, _)| c.len()).collect();
        let mut idx: Vec<usize> = vec![0; repairs.len()];
        loop {
            if let Some(rec) =
                self.apply_repairs_and_force(&big, z, d, &perms, &entries, &repairs, &idx, extra)
            {
                return Ok(rec);
            }
            // odometer
            let mut pos = 0;
            loop {
                if pos >= idx.len() {
                    return Err(CoverError::ExtensionUnsolvable(format!(
                        "no consistent marking extension found for {}",
                        extra.label
                    )));
                }
                idx[pos] += 1;
                if idx[pos] < sizes[pos] {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn apply_repairs_and_force(
        &self,
        big: &MarkedSphere,
        z: usize,
        d: usize,
        perms: &[Perm],
        entries: &[Vec<Word>],
        repairs: &[(usize, Vec<usize>, Word)],
        placements: &[usize],
        extra: &ExtraPoint,
    ) -> Option<Recursion> {
        let n_new = big.n();
        let mut entries = entries.to_vec();
        for ((g, cycle, target), &at) in repairs.iter().zip(placements) {
            let k = cycle.len();
            let before = mul_all((0..at).map(|j| &entries[*g][cycle[j]]));
            let after = mul_all((at + 1..k).map(|j| &entries[*g][cycle[j]]));
            // before * e * after = target
            entries[*g][cycle[at]] = mul(&mul(&before.inverse(), target), &after.inverse());
        }

        // force the x_z row from the relation A x_z B = 1
        let wreath_of = |gen: usize, entries: &[Vec<Word>]| WreathElement {
            perm: perms[gen].clone(),
            entries: entries[gen].to_vec(),
        };
        let mut a = WreathElement::identity(d);
        for g in 0..z {
            a = a.then(&wreath_of(g, &entries));
        }
        let mut b = WreathElement::identity(d);
        for g in z + 1..n_new {
            b = b.then(&wreath_of(g, &entries));
        }
        let forced = a.inverse().then(&b.inverse());
        if !forced.perm.is_identity() {
            return None;
        }
        entries[z] = forced.entries;

        let shift = |g: usize| if g >= z { g + 1 } else { g };
        let mut table: Vec<MarkedTarget> = Vec::with_capacity(n_new);
        let mut old_iter = 0usize;
        for g in 0..n_new {
            if g == z {
                let (image, cycle_rep) = match extra.image {
                    ExtraImage::Marked(i0) => (shift(i0), extra.cycle_rep),
                    ExtraImage::SelfFixed => (z, extra.cycle_rep),
                };
                table.push(MarkedTarget { image, cycle_rep });
            } else {
                let t = self.table[old_iter];
                table.push(MarkedTarget { image: shift(t.image), cycle_rep: t.cycle_rep });
                old_iter += 1;
            }
        }

        let rec = Recursion::new(big.clone(), d, perms.to_vec(), entries, table).ok()?;
        if rec.validate().is_empty() {
            Some(rec)
        } else {
            None
        }
    }
}

impl fmt::Display for Recursion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "degree {} over {:?}", self.degree, self.base.labels())?;
        for g in 0..self.base.n() {
            write!(f, "  x{} ({}): {} |", g, self.base.label(g), self.perms[g])?;
            for w in &self.entries[g] {
                write!(f, " {w}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
