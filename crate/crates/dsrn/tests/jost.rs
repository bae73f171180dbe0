use dsrn::asymptotics::exponents;
use dsrn::dirac::{block, max_abs4, M4};
use dsrn::jost::{
    coupling_coeffs, cutoffs, dirac_rhs, faddeev_right_volterra, faddeev_volterra, jost_ode, liouville_potential_q, volterra_grid,
    JostOptions, Side,
};
use dsrn::{BlackHoleParams, PotentialProfile};
use num_complex::Complex64 as C;

fn reference() -> PotentialProfile {
    PotentialProfile::new(&BlackHoleParams::new(1.0, 0.5, 0.05, 0.1, 0.2)).unwrap()
}

fn tight() -> JostOptions {
    JostOptions { tol: 1e-13, ..Default::default() }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

#[test]
fn left_solution_is_the_identity_at_its_cutoff() {
    let prof = reference();
    for (lambda, n) in [(1.0, 2.0), (-0.5, 7.0)] {
        let z = C::new(n, 0.0);
        let (_, x_max) = cutoffs(&prof, z, &JostOptions::default());
        let f = jost_ode(Side::Left, lambda, z, &prof, &[x_max], &JostOptions::default()).unwrap();
        assert!(max_abs4(&(f.faddeev(0) - M4::identity())) < 1e-14);
    }
}

// five-point derivative of sampled matrices
fn derivative(v: &[M4], h: f64) -> M4 {
    (v[0] - v[1] * C::new(8.0, 0.0) + v[3] * C::new(8.0, 0.0) - v[4]) / C::new(12.0 * h, 0.0)
}

#[test]
fn both_jost_solutions_solve_the_first_order_system() {
    let prof = reference();
    let opts = JostOptions::default();
    let h = 1e-3;
    for (lambda, n) in [(1.0, 2.0), (0.0, 5.0), (-1.0, 12.0)] {
        let z = C::new(n, 0.0);
        let (x_min, x_max) = cutoffs(&prof, z, &opts);
        for side in [Side::Right, Side::Left] {
            let mut worst = 0.0f64;
            for x in linspace(x_min + 1.0, x_max - 1.0, 9) {
                let pts: Vec<f64> = (-2..=2).map(|k| x + k as f64 * h).collect();
                let f = jost_ode(side, lambda, z, &prof, &pts, &opts).unwrap();
                let d = derivative(&f.values, h);
                let rhs = dirac_rhs(&prof, lambda, z, x, &f.values[2]);
                // integrator tolerance is relative to the solution size
                worst = worst.max(max_abs4(&(d - rhs)) / max_abs4(&f.values[2]).max(1.0));
            }
            assert!(worst < 10.0 * opts.tol, "{side:?} lambda {lambda} n {n}: {worst:e}");
        }
    }
}

#[test]
fn volterra_and_ode_agree_entrywise() {
    let prof = reference();
    for (lambda, n, limit) in [(1.0, 2.0, 1e-8), (1.0, 0.0, 1e-9), (-0.5, 0.0, 1e-9)] {
        let z = C::new(n, 0.0);
        let grid = volterra_grid(&prof, lambda, z, &JostOptions::default());
        let v = faddeev_right_volterra(lambda, z, &grid, &prof).unwrap();
        let inner: Vec<f64> = grid[1..grid.len() - 1].to_vec();
        let o = jost_ode(Side::Right, lambda, z, &prof, &inner, &tight()).unwrap();
        let mut worst = 0.0f64;
        for (k, x) in inner.iter().enumerate() {
            assert_eq!(v.xs[k + 1], *x);
            worst = worst.max(max_abs4(&(v.values[k + 1] - o.values[k])));
        }
        assert!(worst < limit, "lambda {lambda} z {n}: {worst:e}");
    }
}

#[test]
fn faddeev_matrix_obeys_the_growth_bound() {
    let prof = reference();
    let opts = JostOptions::default();
    for (lambda, n) in [(1.0, 2.0), (0.0, 8.0), (-1.0, 20.0)] {
        let z = C::new(n, 0.0);
        let (x_min, x_max) = cutoffs(&prof, z, &opts);
        // C = exp(int b) by the trapezoid rule on a fine grid
        let xs = linspace(x_min, x_max, 200_001);
        let dx = xs[1] - xs[0];
        let int_b: f64 = xs.windows(2).map(|w| 0.5 * (prof.sample(w[0]).b + prof.sample(w[1]).b) * dx).sum();
        let pts = linspace(x_min + 0.5, x_max - 0.5, 40);
        let f = jost_ode(Side::Right, lambda, z, &prof, &pts, &opts).unwrap();
        for (i, x) in pts.iter().enumerate() {
            let m = f.faddeev(i);
            let norm = m.singular_values().max();
            let bound = (int_b + n * prof.liouville_x(*x)).exp();
            assert!(norm <= bound * (1.0 + 1e-9), "x {x}: {norm} > {bound}");
        }
    }
}

#[test]
fn coupling_coefficients_decay_with_angular_momentum() {
    let prof = reference();
    let zs: Vec<f64> = (1..=5).map(|k| 2f64.powi(k)).chain([64.0]).collect();
    for x in [-5.0, 0.0, 4.0] {
        let vals: Vec<[C; 4]> = zs.iter().map(|&z| coupling_coeffs(x, 0.7, C::new(z, 0.0), &prof).unwrap()).collect();
        for i in 0..4 {
            let pts: Vec<(f64, f64)> = zs.iter().zip(&vals).map(|(z, v)| (z.ln(), v[i].norm().ln())).collect();
            let (_, p) = dsrn::asymptotics::linear_fit(&pts);
            // c2, c4 fall like 1/z; c1, c3 faster (1/z^2)
            if i == 1 || i == 3 {
                assert!((p + 1.0).abs() < 0.1, "c{} at x {x}: power {p}", i + 1);
            } else {
                assert!(p < -0.9, "c{} at x {x}: power {p}", i + 1);
            }
        }
    }
}

#[test]
fn faddeev_entries_are_analytic_in_z() {
    let prof = reference();
    let lambda = 0.5;
    let x = 1.5;
    let h = 2e-4;
    let m_at = |z: C| -> M4 {
        let mut grid = volterra_grid(&prof, lambda, C::new(z.norm() + 1.0, 0.0), &JostOptions::default());
        grid.retain(|&g| g < x);
        grid.push(x);
        let f = faddeev_volterra(Side::Right, lambda, z, &grid, &prof, &JostOptions::default()).unwrap();
        f.faddeev(f.len() - 1)
    };
    for z in [C::new(2.0, 0.5), C::new(1.0, -1.0), C::new(4.0, 2.0)] {
        let dx = (m_at(z + h) - m_at(z - h)) / C::new(2.0 * h, 0.0);
        let dy = (m_at(z + C::new(0.0, h)) - m_at(z - C::new(0.0, h))) / C::new(2.0 * h, 0.0);
        let dzbar = (dx + dy * C::new(0.0, 1.0)) * C::new(0.5, 0.0);
        let rel = max_abs4(&dzbar) / max_abs4(&dx).max(1.0);
        assert!(rel < 1e-6, "z {z}: {rel:e}");
    }
}

// unhatted F at x(X) for a uniform X stencil
fn stencil(prof: &PotentialProfile, lambda: f64, z: C, big_x: f64, hx: f64) -> Vec<M4> {
    let xs: Vec<f64> = (-2..=2).map(|k| prof.liouville_inverse(big_x + k as f64 * hx).unwrap()).collect();
    let f = jost_ode(Side::Right, lambda, z, prof, &xs, &tight()).unwrap();
    (0..5).map(|i| f.unhatted(i, prof)).collect()
}

#[test]
fn jost_components_satisfy_the_liouville_form() {
    // rows 1 and 2 of a column of F_R couple through c1..c4:
    // u'' + q u = z^2 u + (c1 a u' + c2 a v' + c3 u + c4 v) / a^2 in X, v the other row
    let prof = reference();
    let a_width = prof.width_a();
    let hx = 5e-4 * a_width;
    for (lambda, n) in [(1.0, 2.0), (-0.5, 4.0)] {
        let z = C::new(n, 0.0);
        let mut worst = 0.0f64;
        for t in [0.3, 0.45, 0.6, 0.75] {
            let big_x = t * a_width;
            let f = stencil(&prof, lambda, z, big_x, hx);
            let x = prof.liouville_inverse(big_x).unwrap();
            let s = prof.sample(x);
            let c = coupling_coeffs(x, lambda, z, &prof).unwrap();
            let q = liouville_potential_q(big_x, lambda, &prof).unwrap();
            for col in 0..4 {
                for (r, o) in [(0usize, 1usize), (1, 0)] {
                    let u: Vec<C> = f.iter().map(|m| m[(r, col)]).collect();
                    let v: Vec<C> = f.iter().map(|m| m[(o, col)]).collect();
                    let d1 = |w: &[C]| (w[0] - w[1] * 8.0 + w[3] * 8.0 - w[4]) / (12.0 * hx);
                    let d2 = (-u[0] + u[1] * 16.0 - u[2] * 30.0 + u[3] * 16.0 - u[4]) / (12.0 * hx * hx);
                    let rhs_f = (c[0] * s.a * d1(&u) + c[1] * s.a * d1(&v) + c[2] * u[2] + c[3] * v[2]) / (s.a * s.a);
                    let res = d2 + q * u[2] - z * z * u[2] - rhs_f;
                    let scale = d2.norm().max((z * z * u[2]).norm()).max((q * u[2]).norm()).max(1e-300);
                    worst = worst.max(res.norm() / scale);
                }
            }
        }
        assert!(worst < 1e-6, "lambda {lambda} n {n}: {worst:e}");
    }
}

#[test]
fn liouville_potential_has_the_stated_double_pole() {
    let prof = reference();
    for lambda in [1.0, 0.0, -0.6] {
        let e = exponents(lambda, &prof);
        let mut prev = f64::INFINITY;
        for big_x in [1e-2, 1e-3, 1e-4] {
            let d = (liouville_potential_q(big_x, lambda, &prof).unwrap() * big_x * big_x - e.omega_minus).norm();
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 1e-6, "lambda {lambda}: {prev:e}");
        let a = prof.width_a();
        let d = (liouville_potential_q(a - 1e-4, lambda, &prof).unwrap() * 1e-8 - e.omega_plus).norm();
        assert!(d < 1e-6, "lambda {lambda} at X = A: {d:e}");
    }
}

#[test]
fn right_jost_block_has_the_stated_boundary_behavior() {
    let prof = reference();
    let h = prof.horizons();
    let (km, am, cm) = (h.kappa_minus(), prof.asymptotic_coeffs().a_minus, prof.asymptotic_coeffs().c_minus);
    for (lambda, n) in [(1.0, 2.0), (-0.5, 3.0)] {
        let s = (lambda - cm) / km;
        let pref = C::new(0.0, s * (km / am).ln()).exp();
        let mut errs = vec![];
        for big_x in [1e-2, 1e-3] {
            let x = prof.liouville_inverse(big_x).unwrap();
            let f = jost_ode(Side::Right, lambda, C::new(n, 0.0), &prof, &[x], &tight()).unwrap();
            let b1 = block(&f.unhatted(0, &prof), 1);
            let lead = pref * C::new(0.0, s * big_x.ln()).exp();
            let e = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| (b1[(i, j)] - if i == j { lead } else { C::new(0.0, 0.0) }).norm())
                .fold(0.0, f64::max);
            errs.push(e / (big_x * big_x));
            assert!((b1[(0, 0)].norm() - 1.0).abs() < 10.0 * big_x * big_x);
        }
        // O(X^2): the scaled error stays bounded
        assert!(errs[1] < 2.0 * errs[0].max(1.0), "lambda {lambda}: {errs:?}");
        // unwrapped phase of F_R11 against ln X
        let logs: Vec<f64> = linspace(-4.0 * std::f64::consts::LN_10, -3.0 * std::f64::consts::LN_10, 60);
        let xs: Vec<f64> = logs.iter().map(|l| prof.liouville_inverse(l.exp()).unwrap()).collect();
        let f = jost_ode(Side::Right, lambda, C::new(n, 0.0), &prof, &xs, &tight()).unwrap();
        let mut phase = vec![f.unhatted(0, &prof)[(0, 0)].arg()];
        for i in 1..xs.len() {
            let step = (f.unhatted(i, &prof)[(0, 0)] / f.unhatted(i - 1, &prof)[(0, 0)]).arg();
            phase.push(phase[i - 1] + step);
        }
        let pts: Vec<(f64, f64)> = logs.iter().copied().zip(phase).collect();
        let (_, slope) = dsrn::asymptotics::linear_fit(&pts);
        assert!((slope - s).abs() < 1e-4 * s.abs().max(1.0), "lambda {lambda}: slope {slope} vs {s}");
    }
}
