use gyron::algebra::{build_matrices, ResonanceParams};
use gyron::averaging::{
    express_in_generators, fock_operator, normal_order, project_resonant, realize_in_fock, realize_in_rep,
    BosonicPolynomial, Expression, LadderOp,
};
use gyron::fock::{FockOperator, FockSpace};
use gyron::geometry::restriction::Generator;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn pair() -> impl Strategy<Value = (i64, i64)> {
    prop::sample::select(vec![(1i64, 1i64), (1, 2), (2, 1), (2, 3), (1, 3)])
}

fn polynomial(max_deg: u32, max_terms: usize) -> impl Strategy<Value = BosonicPolynomial> {
    prop::collection::vec(
        ([0..=max_deg, 0..=max_deg, 0..=max_deg, 0..=max_deg], -1.0f64..1.0, -1.0f64..1.0),
        1..=max_terms,
    )
    .prop_map(|terms| {
        let mut p = BosonicPolynomial::zero();
        for (k, re, im) in terms {
            p.add_term(k, Complex64::new(re, im));
        }
        p
    })
}

fn hermitian(p: &BosonicPolynomial) -> BosonicPolynomial {
    p.add(&p.adjoint())
}

/// `E = ħ(l n₁ + m n₂)` on the truncated Fock basis.
fn energy_operator(space: &FockSpace) -> FockOperator {
    let p = &space.params;
    let mut e = FockOperator::zeros(space.basis.len());
    for (i, &(n1, n2)) in space.basis.states.iter().enumerate() {
        e.rows[i].push((i, p.hbar * (p.l as f64 * n1 as f64 + p.m as f64 * n2 as f64)));
    }
    e
}

fn max_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn projection_is_idempotent_and_linear(
        (l, m) in pair(),
        a in polynomial(3, 8),
        b in polynomial(3, 8),
        s in -2.0f64..2.0,
    ) {
        let params = ResonanceParams::new(l, m, 1.0).unwrap();
        let pa = project_resonant(&a, &params).f1;
        prop_assert!(pa.is_resonant(&params));
        prop_assert_eq!(&project_resonant(&pa, &params).f1, &pa);
        let lhs = project_resonant(&a.add(&b.scale(c(s))), &params).f1;
        let rhs = pa.add(&project_resonant(&b, &params).f1.scale(c(s)));
        let diff = lhs.add(&rhs.scale(c(-1.0)));
        prop_assert!(diff.terms.values().all(|v| v.norm() < 1e-14));
        prop_assert_eq!(project_resonant(&a.adjoint(), &params).f1, pa.adjoint());
    }

    #[test]
    fn realized_average_commutes_with_energy(
        (l, m) in pair(),
        a in polynomial(3, 6),
        hbar in 0.1f64..1.0,
    ) {
        let params = ResonanceParams::new(l, m, hbar).unwrap();
        let f1 = project_resonant(&hermitian(&a), &params).f1;
        let space = FockSpace::new(&params, 12).unwrap();
        let (re, im) = fock_operator(&f1, &space);
        let e = energy_operator(&space);
        prop_assert_eq!(re.commutator(&e).max_abs(), 0.0);
        prop_assert_eq!(im.commutator(&e).max_abs(), 0.0);
    }

    #[test]
    fn rep_and_fock_realizations_agree(
        (l, m) in pair(),
        a in polynomial(3, 6),
        r in 0u32..5,
        hbar in 0.1f64..1.0,
    ) {
        let params = ResonanceParams::new(l, m, hbar).unwrap();
        let label = params.label(r, 0, 0).unwrap();
        let f1 = project_resonant(&hermitian(&a), &params).f1;
        let direct = realize_in_rep(&f1, &params, &label);
        prop_assert!(max_norm(&(&direct - direct.adjoint())) < 1e-13 * (1.0 + max_norm(&direct)));
        let space = FockSpace::for_labels(&params, [&label]).unwrap();
        // the Fock cutoff must leave room for the creation part of each word
        let space = FockSpace::new(&params, space.basis.cutoff + 6).unwrap();
        let via_fock = realize_in_fock(&f1, &space, &label).unwrap();
        prop_assert!(max_norm(&(&direct - &via_fock)) < 1e-12 * (1.0 + max_norm(&direct)));
    }

    #[test]
    fn generator_form_matches_direct_realization(
        (l, m) in pair(),
        a in polynomial(3, 6),
        r in 0u32..6,
        hbar in 0.1f64..1.0,
    ) {
        let params = ResonanceParams::new(l, m, hbar).unwrap();
        let label = params.label(r, params.l - 1, params.m - 1).unwrap();
        let f1 = project_resonant(&a, &params).f1;
        let Expression::Expressed(e) = express_in_generators(&f1, &params) else {
            return Err(TestCaseError::fail("resonant polynomial not expressed"));
        };
        let g = build_matrices(&params, &label).unwrap();
        let direct = realize_in_rep(&f1, &params, &label);
        prop_assert!(max_norm(&(e.matrix(&g) - &direct)) <= 1e-10 * (1.0 + max_norm(&direct)));
    }

    #[test]
    fn json_round_trip(a in polynomial(4, 10)) {
        prop_assert_eq!(BosonicPolynomial::from_json(&a.to_json()).unwrap(), a);
    }
}

#[test]
fn worked_projection_examples() {
    let one = ResonanceParams::new(1, 1, 1.0).unwrap();
    let b = BosonicPolynomial::monomial([1, 0], [0, 1], c(1.0)).add(&BosonicPolynomial::monomial([0, 1], [1, 0], c(1.0)));
    assert_eq!(project_resonant(&b, &one).f1, b);

    let number = BosonicPolynomial::monomial([1, 0], [1, 0], c(1.0));
    for (l, m) in [(1, 1), (2, 3), (5, 7)] {
        let p = ResonanceParams::new(l, m, 1.0).unwrap();
        assert_eq!(project_resonant(&number, &p).f1, number);
    }

    let p23 = ResonanceParams::new(2, 3, 1.0).unwrap();
    let odd = BosonicPolynomial::monomial([0, 0], [1, 0], c(1.0)).add(&BosonicPolynomial::monomial([1, 0], [0, 0], c(1.0)));
    assert!(project_resonant(&odd, &p23).f1.terms.is_empty());
}

#[test]
fn worked_realization_examples() {
    let p = ResonanceParams::new(1, 1, 1.0).unwrap();
    let label = p.label(2, 0, 0).unwrap();
    let b = BosonicPolynomial::monomial([1, 0], [0, 1], c(1.0)).add(&BosonicPolynomial::monomial([0, 1], [1, 0], c(1.0)));
    let f = realize_in_rep(&b, &p, &label);
    let s2 = 2f64.sqrt();
    let expected = DMatrix::from_row_slice(3, 3, &[0.0, s2, 0.0, s2, 0.0, s2, 0.0, s2, 0.0]).map(c);
    assert!(max_norm(&(&f - &expected)) < 1e-14);

    let p = ResonanceParams::new(2, 3, 0.4).unwrap();
    let label = p.label(3, 1, 2).unwrap();
    let g = build_matrices(&p, &label).unwrap();
    let n1 = realize_in_rep(&BosonicPolynomial::monomial([1, 0], [1, 0], c(1.0)), &p, &label);
    assert!(max_norm(&(n1 - g.a1.map(c))) < 1e-14);
}

#[test]
fn worked_generator_examples() {
    let p = ResonanceParams::new(1, 2, 1.0).unwrap();
    let single = |f: BosonicPolynomial, p: &ResonanceParams| match express_in_generators(&f, p) {
        Expression::Expressed(e) => {
            assert_eq!(e.terms.len(), 1);
            assert_eq!(e.terms[0].0, c(1.0));
            e.terms[0].1.clone()
        }
        Expression::NotExpressed(t) => panic!("{t:?}"),
    };
    assert_eq!(single(BosonicPolynomial::monomial([1, 0], [1, 0], c(1.0)), &p), vec![Generator::A1]);
    assert_eq!(single(BosonicPolynomial::monomial([0, 1], [2, 0], c(1.0)), &p), vec![Generator::APlus]);
    let one = ResonanceParams::new(1, 1, 1.0).unwrap();
    assert_eq!(single(BosonicPolynomial::monomial([0, 1], [1, 0], c(1.0)), &one), vec![Generator::APlus]);
    assert_eq!(single(BosonicPolynomial::monomial([1, 0], [0, 1], c(1.0)), &one), vec![Generator::AMinus]);
}

#[test]
fn normal_ordering_matches_fock_products() {
    // b₁ b₁* b₂ b₂* b₁ as a product of truncated matrices, away from the cutoff
    let params = ResonanceParams::new(1, 2, 0.7).unwrap();
    let space = FockSpace::new(&params, 10).unwrap();
    let word = [LadderOp::B1, LadderOp::B1Dag, LadderOp::B2, LadderOp::B2Dag, LadderOp::B1];
    let lad = &space.ladder;
    let mut op = FockOperator::identity(space.basis.len());
    for w in word.iter().rev() {
        let f = match w {
            LadderOp::B1 => &lad.b1,
            LadderOp::B2 => &lad.b2,
            LadderOp::B1Dag => &lad.b1_dag,
            LadderOp::B2Dag => &lad.b2_dag,
        };
        op = f.compose(&op);
    }
    let ordered = normal_order(&word, 0.7).unwrap();
    let (re, im) = fock_operator(&ordered, &space);
    assert_eq!(im.max_abs(), 0.0);
    for (i, &(n1, n2)) in space.basis.states.iter().enumerate() {
        if n1 + n2 + 2 > space.basis.cutoff {
            continue;
        }
        for j in 0..space.basis.len() {
            assert!((op.get(i, j) - re.get(i, j)).abs() < 1e-12);
        }
    }
}
