use integrable::lie::{
    lie_poisson_bracket, AlgebraPoint, Flavor, LieAlgebraElement, LinearForm,
};
use integrable::homog::{
    hamiltonian_field, psi_g, psi_g_plus, sphere_constraints, trivialized_bracket,
    SphereCotangentPoint, TrivializedCotangentPoint, SPHERE_PHASE_DIM,
};
use integrable::poisson::{dirac_bracket, ScalarField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// jacobi identity of the left-trivialized bracket, nested numerically
#[test]
fn trivialized_bracket_satisfies_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for _ in 0..3 {
        let p = TrivializedCotangentPoint::random(&mut rng);
        let a = LieAlgebraElement::random(Flavor::Su, 3, &mut rng);
        let b = LieAlgebraElement::random(Flavor::Su, 3, &mut rng);
        let c = LieAlgebraElement::random(Flavor::Su, 3, &mut rng);
        // Three fields mixing base and fiber dependence.
        let (a1, b1, c1) = (a.clone(), b.clone(), c.clone());
        let f = move |q: &TrivializedCotangentPoint| a1.pair(&psi_g_plus(q));
        let g = move |q: &TrivializedCotangentPoint| b1.pair(&q.x) * (1.0 + c1.pair(&q.x));
        let (a2, b2) = (a.clone(), b.clone());
        let h = move |q: &TrivializedCotangentPoint| {
            a2.pair(&q.x) + 0.5 * b2.pair(&psi_g_plus(q)).powi(2)
        };
        let fg = {
            let (f, g) = (f.clone(), g.clone());
            move |q: &TrivializedCotangentPoint| trivialized_bracket(&f, &g, q).unwrap()
        };
        let gh = {
            let (g, h) = (g.clone(), h.clone());
            move |q: &TrivializedCotangentPoint| trivialized_bracket(&g, &h, q).unwrap()
        };
        let hf = {
            let (h, f) = (h.clone(), f.clone());
            move |q: &TrivializedCotangentPoint| trivialized_bracket(&h, &f, q).unwrap()
        };
        let t1 = trivialized_bracket(&fg, &h, &p).unwrap();
        let t2 = trivialized_bracket(&gh, &f, &p).unwrap();
        let t3 = trivialized_bracket(&hf, &g, &p).unwrap();
        let cyc = t1 + t2 + t3;
        // Nested finite differences accumulate second-order noise; the
        // cyclic sum must cancel far below the individual term scale.
        let scale = t1.abs().max(t2.abs()).max(t3.abs()).max(1.0);
        assert!(cyc.abs() < 1e-3 * scale, "Jacobi defect {cyc} at scale {scale}");
    }
}

// the sphere momentum map intertwines the Dirac bracket with the product
// Lie-Poisson bracket: the pushforward sign is +1 under these conventions
#[test]
fn sphere_momentum_map_is_poisson() {
    let mut rng = ChaCha8Rng::seed_from_u64(72);
    let constraints = sphere_constraints();
    let mut signs = Vec::new();
    for _ in 0..6 {
        let pt = SphereCotangentPoint::random_on_shell(&mut rng);
        let flat = pt.to_flat();
        // Two non-commuting linear forms on u(3), pulled back through the
        // first momentum block.
        let alpha = LieAlgebraElement::random(Flavor::U, 3, &mut rng);
        let beta = LieAlgebraElement::random(Flavor::U, 3, &mut rng);
        let (a1, b1) = (alpha.clone(), beta.clone());
        let fa = ScalarField::new(SPHERE_PHASE_DIM, move |p| {
            let q = SphereCotangentPoint::from_flat(p).unwrap();
            a1.pair(&psi_g(&q).unwrap().xi)
        });
        let fb = ScalarField::new(SPHERE_PHASE_DIM, move |p| {
            let q = SphereCotangentPoint::from_flat(p).unwrap();
            b1.pair(&psi_g(&q).unwrap().xi)
        });
        let dirac = dirac_bracket(&fa, &fb, &flat, &constraints).unwrap();
        let la = LinearForm { a: alpha.clone() };
        let lb = LinearForm { a: beta.clone() };
        let lp = lie_poisson_bracket(&la, &lb, &psi_g(&pt).unwrap().xi).unwrap();
        if lp.abs() > 1e-6 {
            signs.push(dirac / lp);
        }
    }
    assert!(!signs.is_empty());
    for s in &signs {
        assert!((s - 1.0).abs() < 1e-4, "pushforward ratio {s} (expected +1)");
    }
}

// canonical bracket route agrees with the dirac route for invariant scalars
#[test]
fn invariant_scalars_commute_under_plain_canonical_bracket_too() {
    // The commuting family is built from a momentum map of a group acting on
    // the base, so the brackets vanish already in the ambient space.
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    let p = SphereCotangentPoint::random_on_shell(&mut rng).to_flat();
    for a in 1..=8u8 {
        for b in (a + 1)..=8 {
            let fa = hamiltonian_field(a);
            let fb = hamiltonian_field(b);
            let v = integrable::poisson::canonical_bracket(&fa, &fb, &p).unwrap();
            assert!(v.abs() < 1e-6, "ambient bracket H_{a}, H_{b}: {v}");
        }
    }
}
