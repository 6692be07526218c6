//! The simplex solver checked against solvers that share none of its code:
//! brute-force vertex enumeration, rejection sampling, and Lagrangian bounds.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tiltshape::lp::{minimize_linf, minimize_range, solve, LpProblem, LpStatus};

/// Minimum of `cᵀy` over `{E y = f, G y ≤ h}` by enumerating every basic
/// solution. Assumes the feasible set is a nonempty bounded polytope.
fn enumerate_vertices(c: &[f64], e: &DMatrix<f64>, f: &[f64], g: &DMatrix<f64>, h: &[f64]) -> Option<f64> {
    let k = c.len();
    let p = e.nrows();
    let q = g.nrows();
    let need = k - p;
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..need).collect();
    loop {
        let mut m = DMatrix::zeros(k, k);
        let mut rhs = DVector::zeros(k);
        for i in 0..p {
            m.set_row(i, &e.row(i));
            rhs[i] = f[i];
        }
        for (r, &s) in idx.iter().enumerate() {
            m.set_row(p + r, &g.row(s));
            rhs[p + r] = h[s];
        }
        if m.determinant().abs() > 1e-10 {
            if let Some(y) = m.lu().solve(&rhs) {
                let gy = g * &y;
                if (0..q).all(|i| gy[i] <= h[i] + 1e-9) {
                    let obj: f64 = c.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
                    best = Some(best.map_or(obj, |b: f64| b.min(obj)));
                }
            }
        }
        // next combination in lexicographic order
        let mut i = need;
        while i > 0 && idx[i - 1] == i - 1 + q - need {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        idx[i - 1] += 1;
        for j in i..need {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Epigraph form of `min ‖x‖∞` over `A x = b`, `lo ≤ x ≤ hi`, as `(c, E, f, G, h)`
/// in the variables `(x, t)`.
fn linf_as_polytope(
    a: &DMatrix<f64>,
    b: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> (Vec<f64>, DMatrix<f64>, Vec<f64>, DMatrix<f64>, Vec<f64>) {
    let (m, n) = a.shape();
    let k = n + 1;
    let mut c = vec![0.0; k];
    c[n] = 1.0;
    let mut e = DMatrix::zeros(m, k);
    e.view_mut((0, 0), (m, n)).copy_from(a);
    let mut g = DMatrix::zeros(4 * n, k);
    let mut h = vec![0.0; 4 * n];
    for j in 0..n {
        g[(j, j)] = 1.0;
        g[(j, n)] = -1.0;
        g[(n + j, j)] = -1.0;
        g[(n + j, n)] = -1.0;
        g[(2 * n + j, j)] = 1.0;
        h[2 * n + j] = hi[j];
        g[(3 * n + j, j)] = -1.0;
        h[3 * n + j] = -lo[j];
    }
    (c, e, b.to_vec(), g, h)
}

fn random_linf_instance(rng: &mut ChaCha8Rng, m: usize, n: usize) -> (DMatrix<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
    let lo: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..-0.5)).collect();
    let hi: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let x0 = DVector::from_fn(n, |j, _| rng.random_range(lo[j]..hi[j]));
    let b = (&a * x0).as_slice().to_vec();
    (a, b, lo, hi)
}

#[test]
fn linf_three_variables_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..50 {
        let m = 1 + trial % 2;
        let (a, b, lo, hi) = random_linf_instance(&mut rng, m, 3);
        let (c, e, f, g, h) = linf_as_polytope(&a, &b, &lo, &hi);
        let oracle = enumerate_vertices(&c, &e, &f, &g, &h).expect("feasible by construction");
        let got = minimize_linf(&a, &b, &lo, &hi).unwrap();
        assert_eq!(got.status, LpStatus::Optimal);
        assert!(
            (got.value - oracle).abs() < 1e-6,
            "trial {trial}: {} vs {oracle}",
            got.value
        );
    }
}

#[test]
fn linf_underdetermined_four_by_eight() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let (a, b, lo, hi) = random_linf_instance(&mut rng, 4, 8);
        let (c, e, f, g, h) = linf_as_polytope(&a, &b, &lo, &hi);
        let oracle = enumerate_vertices(&c, &e, &f, &g, &h).unwrap();
        let got = minimize_linf(&a, &b, &lo, &hi).unwrap();
        assert!((got.value - oracle).abs() < 1e-6, "{} vs {oracle}", got.value);
        let r = &a * DVector::from_column_slice(&got.x) - DVector::from_column_slice(&b);
        assert!(r.amax() < 1e-7);
    }
}

#[test]
fn generic_lp_matches_vertex_enumeration() {
    // min cᵀx over A x = b, 0 ≤ x ≤ 1, x ∈ R⁵, two equalities.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let n = 5;
        let a = DMatrix::from_fn(2, n, |_, _| rng.random_range(-1.0..1.0));
        let x0 = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
        let b = (&a * &x0).as_slice().to_vec();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut g = DMatrix::zeros(2 * n, n);
        let mut h = vec![0.0; 2 * n];
        for j in 0..n {
            g[(j, j)] = 1.0;
            h[j] = 1.0;
            g[(n + j, j)] = -1.0;
        }
        let oracle = enumerate_vertices(&c, &a, &b, &g, &h).unwrap();
        let sol = solve(&LpProblem {
            cost: c,
            a_eq: a,
            b_eq: b,
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        })
        .unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - oracle).abs() < 1e-8);
    }
}

/// Orthonormal basis of the null space of `a`.
fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    let mut padded = DMatrix::zeros(n, n);
    padded.view_mut((0, 0), (m, n)).copy_from(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.unwrap();
    let cols: Vec<_> = (0..n)
        .filter(|&i| svd.singular_values[i] < 1e-10)
        .map(|i| vt.row(i).transpose())
        .collect();
    DMatrix::from_columns(&cols)
}

#[test]
fn range_beats_every_sampled_feasible_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (m, n, umax) = (10, 16, 4.0);
    let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
    let x0 = DVector::from_fn(n, |_, _| rng.random_range(0.5..3.5));
    let b = (&a * &x0).as_slice().to_vec();
    let sol = minimize_range(&a, &b, &vec![umax; n]).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);

    let ns = null_space(&a);
    assert_eq!(ns.ncols(), n - m);
    let range = |x: &DVector<f64>| x.max() - x.min();
    let mut accepted = 0;
    let mut best = range(&x0);
    while accepted < 10_000 {
        let z = DVector::from_fn(ns.ncols(), |_, _| rng.random_range(-1.5..1.5));
        let x = &x0 + &ns * z;
        if x.iter().all(|v| (0.0..=umax).contains(v)) {
            accepted += 1;
            best = best.min(range(&x));
        }
    }
    assert!(sol.range <= best + 1e-9, "{} > {best}", sol.range);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Returned points are feasible and no Lagrangian lower bound exceeds
    /// the reported optimum.
    #[test]
    fn feasibility_and_weak_duality(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (rng.random_range(1..5usize), rng.random_range(5..10usize));
        let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let lo: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..0.0)).collect();
        let hi: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let x0 = DVector::from_fn(n, |j, _| rng.random_range(lo[j]..hi[j]));
        let b: Vec<f64> = (&a * x0).iter().cloned().collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = LpProblem { cost: c.clone(), a_eq: a.clone(), b_eq: b.clone(), lower: lo.clone(), upper: hi.clone() };
        let sol = solve(&p).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);

        let x = DVector::from_column_slice(&sol.x);
        let resid = (&a * &x - DVector::from_column_slice(&b)).amax();
        prop_assert!(resid <= 1e-7);
        for j in 0..n {
            prop_assert!(sol.x[j] >= lo[j] - 1e-9 && sol.x[j] <= hi[j] + 1e-9);
        }

        for _ in 0..20 {
            let y = DVector::from_fn(m, |_, _| rng.random_range(-2.0..2.0));
            let r = DVector::from_column_slice(&c) - a.transpose() * &y;
            let bound: f64 = DVector::from_column_slice(&b).dot(&y)
                + (0..n).map(|j| (r[j] * lo[j]).min(r[j] * hi[j])).sum::<f64>();
            prop_assert!(sol.objective >= bound - 1e-9);
        }
    }
}
