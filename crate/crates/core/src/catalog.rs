//! Catalog of worked examples: recursions derived by explicit path lifting
//! in planar models, frozen after passing the full validation suite.
//!
//! Each quadratic entry was derived with the marked points on a line,
//! sheets labeled by the two preimages of a basepoint below it, and lassos
//! lifted by tracking square roots through the sector decomposition. The
//! degree-one entries (rotations, the identity) come from the action of
//! the map on the fan of lassos.

use crate::cover::{MarkedTarget, Recursion};
use crate::marked::{parse_word, MarkedSphere, Word};
use crate::perm::Perm;

fn words(ms: &MarkedSphere, specs: &[&str]) -> Vec<Word> {
    specs.iter().map(|s| parse_word(ms, s).expect("catalog word parses")).collect()
}

fn perm(d: usize, cycles: &[&[usize]]) -> Perm {
    let c: Vec<Vec<usize>> = cycles.iter().map(|c| c.to_vec()).collect();
    Perm::from_cycles(d, &c).expect("catalog cycles are disjoint")
}

/// Builds a recursion and asserts it is valid.
fn build(
    labels: &[&str],
    degree: usize,
    rows: &[(&[&[usize]], &[&str])],
    table: &[(&str, usize)],
) -> Recursion {
    let ms = MarkedSphere::new(labels.to_vec()).expect("catalog labels distinct");
    let perms: Vec<Perm> = rows.iter().map(|(c, _)| perm(degree, c)).collect();
    let entries: Vec<Vec<Word>> = rows.iter().map(|(_, w)| words(&ms, w)).collect();
    let tbl: Vec<MarkedTarget> = table
        .iter()
        .map(|(image, cycle_rep)| MarkedTarget {
            image: ms.index_of(image).expect("table label exists"),
            cycle_rep: *cycle_rep,
        })
        .collect();
    let rec = Recursion::new(ms, degree, perms, entries, tbl).expect("catalog shape is sound");
    let violations = rec.validate();
    assert!(violations.is_empty(), "catalog recursion invalid: {violations:?}");
    rec
}

/// The map `z -> z^2` marked by `{0, oo}`.
pub fn z_squared() -> Recursion {
    build(
        &["0", "oo"],
        2,
        &[
            (&[&[0, 1]], &["1", "0"]),
            (&[&[0, 1]], &["0'", "1"]),
        ],
        &[("0", 0), ("oo", 0)],
    )
}

/// The basilica `z^2 - 1` marked by `{-1, 0, oo}` (row order `-1, 0, oo`).
pub fn basilica() -> Recursion {
    build(
        &["-1", "0", "oo"],
        2,
        &[
            (&[&[0, 1]], &["-1'", "-1 0"]),
            (&[], &["1", "-1"]),
            (&[&[0, 1]], &["0' -1'", "1"]),
        ],
        // f(-1) = 0 via the fixed sheet 1 of the 0-row permutation;
        // f(0) = -1 via the 2-cycle; f(oo) = oo via the 2-cycle.
        &[("0", 1), ("-1", 0), ("oo", 0)],
    )
}

/// The basilica additionally marked at `1` (the other preimage of `0`),
/// row order `-1, 0, 1, oo`.
pub fn basilica_marked() -> Recursion {
    build(
        &["-1", "0", "+1", "oo"],
        2,
        &[
            (&[&[0, 1]], &["-1'", "-1 0"]),
            (&[], &["+1", "-1"]),
            (&[], &["1", "1"]),
            (&[&[0, 1]], &["+1' 0' -1'", "1"]),
        ],
        &[("0", 1), ("-1", 0), ("0", 0), ("oo", 0)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::Weight;
    use crate::marked::{forget_punctures, peripheral_word};

    #[test]
    fn z_squared_is_valid_and_branches_correctly() {
        let rec = z_squared();
        assert!(rec.is_valid());
        assert_eq!(rec.degree(), 2);
        let branch: usize = (0..2)
            .map(|g| rec.perm(g).cycles().iter().map(|c| c.len() - 1).sum::<usize>())
            .sum();
        assert_eq!(branch, 2);
        assert_eq!(rec.postcritical().into_iter().collect::<Vec<_>>(), vec![0, 1]);
        let orb = rec.orbifold();
        assert_eq!(orb.nu, vec![Weight::Infinite, Weight::Infinite]);
        // the (oo, oo)-orbifold is the cylinder: chi = 0, not hyperbolic
        assert_eq!(orb.chi, num_rational::BigRational::from_integer(0.into()));
        assert!(!orb.is_hyperbolic);
        assert!(!orb.is_2222);
    }

    #[test]
    fn z_squared_invalid_when_sabotaged() {
        // same data but with the oo-permutation replaced by the identity
        let ms = MarkedSphere::new(vec!["0", "oo"]).unwrap();
        let rec = Recursion::new(
            ms.clone(),
            2,
            vec![perm(2, &[&[0, 1]]), perm(2, &[])],
            vec![words(&ms, &["1", "0"]), words(&ms, &["0'", "1"])],
            vec![MarkedTarget { image: 0, cycle_rep: 0 }, MarkedTarget { image: 1, cycle_rep: 0 }],
        )
        .unwrap();
        let violations = rec.validate();
        assert!(violations
            .iter()
            .any(|v| matches!(v, crate::cover::Violation::RelationNotIdentity { .. })));
        assert!(violations
            .iter()
            .any(|v| matches!(v, crate::cover::Violation::RiemannHurwitz { got: 1, expected: 2 })));
    }

    #[test]
    fn basilica_is_valid_with_expected_structure() {
        let rec = basilica();
        assert!(rec.is_valid(), "{:?}", rec.validate());
        // postcritical set is everything
        assert_eq!(rec.postcritical().into_iter().collect::<Vec<_>>(), vec![0, 1, 2]);
        // local degrees: 0 is critical (the cycle of the -1-row), oo critical
        assert_eq!(rec.local_degree(1), 2); // 0
        assert_eq!(rec.local_degree(0), 1); // -1
        assert_eq!(rec.local_degree(2), 2); // oo
        let orb = rec.orbifold();
        assert_eq!(orb.nu, vec![Weight::Infinite, Weight::Infinite, Weight::Infinite]);
        assert!(!orb.is_2222);
    }

    #[test]
    fn basilica_marked_extension_is_consistent() {
        let rec = basilica_marked();
        assert!(rec.is_valid(), "{:?}", rec.validate());
        assert_eq!(rec.postcritical().into_iter().collect::<Vec<_>>(), vec![0, 1, 3]);
        // 1 is marked but not postcritical; its image is 0 with local degree 1
        assert_eq!(rec.local_degree(2), 1);

        // forgetting the extra point recovers the plain basilica up to the
        // connecting-path gauge: compare cycle products class-wise
        let small = rec.forget_marks(&[0, 1, 3]).unwrap();
        assert!(small.is_valid(), "{:?}", small.validate());
        let plain = basilica();
        for g in 0..3 {
            assert_eq!(small.perm(g), plain.perm(g));
        }
        for k in 0..3 {
            let a = small.marked_anchor_at_min(k);
            let b = plain.marked_anchor_at_min(k);
            assert!(a.is_some() && b.is_some());
        }
    }

    #[test]
    fn iterate_squares_the_basilica() {
        let rec = basilica();
        let r1 = rec.iterate(1, 1 << 20).unwrap();
        assert_eq!(r1, rec);
        let r2 = rec.iterate(2, 1 << 20).unwrap();
        assert!(r2.is_valid(), "{:?}", r2.validate());
        assert_eq!(r2.degree(), 4);
        // period-2 critical cycle becomes two fixed points of f^2
        assert_eq!(r2.target(0).image, 0);
        assert_eq!(r2.target(1).image, 1);
        // RH for degree 4
        let branch: usize = (0..3)
            .map(|g| r2.perm(g).cycles().iter().map(|c| c.len() - 1).sum::<usize>())
            .sum();
        assert_eq!(branch, 6);
    }

    #[test]
    fn z_squared_iterate_matches_z_fourth() {
        let rec = z_squared();
        let r2 = rec.iterate(2, 1 << 20).unwrap();
        assert!(r2.is_valid());
        assert_eq!(r2.degree(), 4);
        let branch: usize = (0..2)
            .map(|g| r2.perm(g).cycles().iter().map(|c| c.len() - 1).sum::<usize>())
            .sum();
        assert_eq!(branch, 6);
    }

    #[test]
    fn upstairs_counts_preimages() {
        let rec = z_squared();
        let up = rec.upstairs();
        assert_eq!(up.count(), 2);

        let rec = basilica();
        let up = rec.upstairs();
        // |f^{-1}(X)| = 4: preimages {0, -1, 1, oo} of X = {0, -1, oo}
        assert_eq!(up.count(), 4);
        // each peripheral word is conjugate to the corresponding marked
        // generator or trivial
        for (i, (g, rep)) in up.labels.iter().enumerate() {
            match up.marked_as[i] {
                Some(k) => {
                    let xk = peripheral_word(rec.base(), k).unwrap();
                    assert!(crate::cover::solve_conjugacy(&up.peripheral[i], &xk).is_some());
                }
                None => {
                    let _ = (g, rep);
                    assert!(up.peripheral[i].is_identity());
                }
            }
        }
    }

    #[test]
    fn mark_extension_reproduces_the_marked_basilica() {
        use crate::cover::{ExtraImage, ExtraPoint};
        let rec = basilica();
        // mark the fixed sheet 0 preimage of 0 (the point 1), row position 2
        let ext = rec
            .mark_extension(&[ExtraPoint {
                label: "+1".into(),
                insert_at: 2,
                image: ExtraImage::Marked(1),
                cycle_rep: 0,
            }])
            .unwrap();
        assert!(ext.is_valid(), "{:?}", ext.validate());
        let golden = basilica_marked();
        // same base, same permutations, same table
        assert_eq!(ext.base(), golden.base());
        for g in 0..4 {
            assert_eq!(ext.perm(g), golden.perm(g), "perm mismatch at generator {g}");
        }
        assert_eq!(ext.table(), golden.table());
        // lift data agrees after forgetting: compare entry cycle products
        // through the forgetful map for every preimage point
        for g in 0..4 {
            for cycle in ext.perm(g).cycles() {
                let a = ext.cycle_product(g, cycle[0]);
                let b = golden.cycle_product(g, cycle[0]);
                let fa = forget_punctures(ext.base(), &[0, 1, 3], &a).unwrap();
                let fb = forget_punctures(golden.base(), &[0, 1, 3], &b).unwrap();
                assert_eq!(
                    crate::marked::cyclic_canonical(ext.base(), &fa, false),
                    crate::marked::cyclic_canonical(golden.base(), &fb, false)
                );
            }
        }
    }
}
