mod common;

use common::*;
use msheaf::coxeter::CoxeterSystem;
use msheaf::graph::{ivec, MomentGraph};
use msheaf::kl::{compare_bmp_kl, kl_polynomials, KlPoly};
use msheaf::module::{AmbientModule, GradedSubmodule};
use msheaf::poly::Polynomial;
use msheaf::sheaf::GSheaf;
use msheaf::zmod::ZModule;

#[test]
fn a2_structure_algebra_matches_brute_force() {
    let g = CoxeterSystem::from_type("A2")
        .unwrap()
        .bruhat_moment_graph(&[])
        .unwrap();
    let z = ZModule::structure_algebra(&g, 14).unwrap();
    let all = g.all_vertices();
    for d in (0..=14).step_by(2) {
        assert_eq!(
            z.module().dim_at(d),
            brute_structure_sections(&g, &all, d),
            "degree {d}"
        );
    }
    assert_eq!(z.module().generator_degrees(), vec![0, 2, 2, 4, 4, 6]);
}

#[test]
fn a2_hilbert_function_is_length_generating_function() {
    let g = CoxeterSystem::from_type("A2")
        .unwrap()
        .bruhat_moment_graph(&[])
        .unwrap();
    let z = ZModule::structure_algebra(&g, 14).unwrap();
    let lengths = [0, 1, 1, 2, 2, 3];
    for d in (0..=14).step_by(2) {
        let expected: usize = lengths.iter().map(|l| free_dim(2 * l, d)).sum();
        assert_eq!(z.module().dim_at(d), expected, "degree {d}");
    }
}

#[test]
fn random_structure_sheaf_sections_match_brute_force() {
    let mut r = rng(11);
    for _ in 0..25 {
        let g = random_gkm_graph(&mut r, 6);
        let a = GSheaf::structure_sheaf(&g).unwrap();
        for set in g.open_sets().into_iter().filter(|s| !s.is_empty()) {
            let s = a.sections(&set, 8).unwrap();
            for d in (0..=8).step_by(2) {
                assert_eq!(
                    s.module().dim_at(d),
                    brute_structure_sections(&g, &set, d),
                    "{set:?} degree {d}"
                );
            }
        }
    }
}

#[test]
fn diamond_sections_match_brute_force() {
    let g = MomentGraph::diamond(ivec(&[1, 0]), ivec(&[0, 1]));
    let a = GSheaf::structure_sheaf(&g).unwrap();
    let s = a.global_sections(10).unwrap();
    for d in (0..=10).step_by(2) {
        assert_eq!(s.module().dim_at(d), brute_structure_sections(&g, &g.all_vertices(), d));
    }
}

#[test]
fn maximal_ideal_is_not_free() {
    let amb = AmbientModule::free(2, &[0]);
    let x = Polynomial::var(2, 0);
    let y = Polynomial::var(2, 1);
    let m = GradedSubmodule::span(amb, &[(vec![x], 2), (vec![y], 2)], 8).unwrap();
    let v = m.is_graded_free();
    assert!(!v.free);
    assert_eq!(v.generator_degrees, vec![2, 2]);
    // a free module on two degree-2 generators has dimension 4 in degree 4;
    // the ideal has x^2, xy, y^2
    assert_eq!(m.dim_at(4), 3);
    assert_eq!(v.first_failing_degree, Some(4));
}

#[test]
fn a3_bruhat_graph_counts() {
    let g = CoxeterSystem::from_type("A3")
        .unwrap()
        .bruhat_moment_graph(&[])
        .unwrap();
    assert_eq!(g.vertex_count(), 24);
    // one edge per pair {w, tw}: 6 reflections times 24 elements over 2
    assert_eq!(g.edges().len(), 72);
    assert!(g.is_gkm().is_ok());
}

#[test]
fn kl_4231_singular_locus() {
    let c = CoxeterSystem::from_type("A3").unwrap();
    let w = c.parse_word("s1 s2 s3 s2 s1").unwrap();
    let t = kl_polynomials(&c, &w).unwrap();
    assert_eq!(t.entries.len(), 20);
    for (x, p) in &t.entries {
        let singular = ["e", "s1", "s3", "s1s3"].contains(&x.as_str());
        let expected = if singular { KlPoly(vec![1, 1]) } else { KlPoly::one() };
        assert_eq!(*p, expected, "{x}");
    }
}

#[test]
fn kl_3412_singular_locus() {
    let c = CoxeterSystem::from_type("A3").unwrap();
    let w = c.parse_word("s2 s1 s3 s2").unwrap();
    let t = kl_polynomials(&c, &w).unwrap();
    for (x, p) in &t.entries {
        let expected = if x == "e" || x == "s2" {
            KlPoly(vec![1, 1])
        } else {
            KlPoly::one()
        };
        assert_eq!(*p, expected, "{x}");
    }
}

#[test]
fn bmp_matches_kl_on_4231() {
    let c = CoxeterSystem::from_type("A3").unwrap();
    let w = c.parse_word("s1 s2 s3 s2 s1").unwrap();
    let cmp = compare_bmp_kl(&c, &w, 12).unwrap();
    assert!(cmp.all_match, "{:?}", cmp.rows);
    assert!(cmp.ranks_match);
}

#[test]
fn bmp_matches_kl_on_b2() {
    let c = CoxeterSystem::from_type("B2").unwrap();
    let words = [vec![], vec![0], vec![1, 0], vec![0, 1, 0], vec![1, 0, 1, 0]];
    for w in words {
        let cmp = compare_bmp_kl(&c, &w, 10).unwrap();
        assert!(cmp.all_match, "{w:?}");
        assert!(cmp.rows.iter().all(|r| r.stalk == "1"));
    }
}
