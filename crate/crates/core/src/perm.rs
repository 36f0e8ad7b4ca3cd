//! Small permutation utilities (0-based sheets, right action).

use std::fmt;

/// A permutation of `{0, .., d-1}`. Words act on sheets on the right:
/// walking a word applies each letter's permutation in reading order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Perm {
    images: Vec<usize>,
}

impl Perm {
    pub fn identity(d: usize) -> Self {
        Perm { images: (0..d).collect() }
    }

    pub fn from_images(images: Vec<usize>) -> Option<Self> {
        let d = images.len();
        let mut seen = vec![false; d];
        for &i in &images {
            if i >= d || seen[i] {
                return None;
            }
            seen[i] = true;
        }
        Some(Perm { images })
    }

    /// Builds a permutation from disjoint cycles given in 0-based sheets.
    pub fn from_cycles(d: usize, cycles: &[Vec<usize>]) -> Option<Self> {
        let mut images: Vec<usize> = (0..d).collect();
        let mut seen = vec![false; d];
        for cycle in cycles {
            for &s in cycle {
                if s >= d || seen[s] {
                    return None;
                }
                seen[s] = true;
            }
            for i in 0..cycle.len() {
                images[cycle[i]] = cycle[(i + 1) % cycle.len()];
            }
        }
        Some(Perm { images })
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn apply(&self, s: usize) -> usize {
        self.images[s]
    }

    pub fn inverse(&self) -> Perm {
        let mut images = vec![0; self.images.len()];
        for (s, &t) in self.images.iter().enumerate() {
            images[t] = s;
        }
        Perm { images }
    }

    /// `self` then `other` (reading order).
    pub fn then(&self, other: &Perm) -> Perm {
        Perm {
            images: self.images.iter().map(|&s| other.apply(s)).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(s, &t)| s == t)
    }

    /// Disjoint cycles, each rotated to start at its minimal sheet, sorted
    /// by that minimum. Includes fixed points as 1-cycles.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let d = self.images.len();
        let mut seen = vec![false; d];
        let mut out = Vec::new();
        for start in 0..d {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut s = self.apply(start);
            while s != start {
                seen[s] = true;
                cycle.push(s);
                s = self.apply(s);
            }
            out.push(cycle);
        }
        out
    }

    /// The cycle containing sheet `s`, rotated to start at its minimum.
    pub fn cycle_of(&self, s: usize) -> Vec<usize> {
        let mut cycle = vec![s];
        let mut t = self.apply(s);
        while t != s {
            cycle.push(t);
            t = self.apply(t);
        }
        let min_pos = cycle
            .iter()
            .enumerate()
            .min_by_key(|&(_, v)| *v)
            .map(|(i, _)| i)
            .unwrap();
        cycle.rotate_left(min_pos);
        cycle
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        let nontrivial: Vec<_> = cycles.iter().filter(|c| c.len() > 1).collect();
        if nontrivial.is_empty() {
            return write!(f, "id");
        }
        for c in nontrivial {
            write!(f, "(")?;
            for (i, s) in c.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", s + 1)?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycles_and_compose() {
        let p = Perm::from_cycles(4, &[vec![0, 2], vec![1, 3]]).unwrap();
        assert_eq!(p.apply(0), 2);
        assert_eq!(p.cycles(), vec![vec![0, 2], vec![1, 3]]);
        let q = Perm::from_cycles(4, &[vec![0, 1]]).unwrap();
        let pq = p.then(&q);
        assert_eq!(pq.apply(0), 2);
        assert_eq!(pq.apply(2), 1);
        assert!(p.then(&p.inverse()).is_identity());
    }
}
