//! Decoupled two-component solver for the massless, uncharged field.

use dsrn::jost::{cutoffs, JostOptions};
use dsrn::PotentialProfile;
use num_complex::Complex64 as C;

type M2c = [[C; 2]; 2];

fn mul(a: &M2c, b: &M2c) -> M2c {
    let mut o = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            o[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    o
}

// classical RK4 for u' = i [[l, -s za], [s za, -l]] u, s = +-1, from x0 to x1
fn decoupled_pair(prof: &PotentialProfile, lambda: f64, n: f64, sign: f64, x0: f64, x1: f64, u0: M2c) -> M2c {
    let h_data = prof.horizons();
    let a_of = |x: f64| {
        let pt = h_data.point_from_x(x);
        h_data.f_at(&pt).max(0.0).sqrt() / pt.r
    };
    let gen = |x: f64| -> M2c {
        let za = n * a_of(x);
        let i = C::new(0.0, 1.0);
        [[i * lambda, -i * sign * za], [i * sign * za, -i * lambda]]
    };
    let steps = ((x1 - x0).abs() / 0.002).ceil() as usize;
    let h = (x1 - x0) / steps as f64;
    let add = |u: &M2c, k: &M2c, s: f64| -> M2c {
        let mut o = *u;
        for i in 0..2 {
            for j in 0..2 {
                o[i][j] += k[i][j] * s;
            }
        }
        o
    };
    let mut u = u0;
    for s in 0..steps {
        let x = x0 + s as f64 * h;
        let k1 = mul(&gen(x), &u);
        let k2 = mul(&gen(x + h / 2.0), &add(&u, &k1, h / 2.0));
        let k3 = mul(&gen(x + h / 2.0), &add(&u, &k2, h / 2.0));
        let k4 = mul(&gen(x + h), &add(&u, &k3, h));
        for i in 0..2 {
            for j in 0..2 {
                u[i][j] += (k1[i][j] + k2[i][j] * 2.0 + k3[i][j] * 2.0 + k4[i][j]) * (h / 6.0);
            }
        }
    }
    u
}

// L = A3 A1^{-1} for the massless problem, assembled from the (0,3) and (1,2) pairs
pub fn massless_reflection(prof: &PotentialProfile, lambda: f64, n: u32) -> [[C; 2]; 2] {
    let (x_min, x_max) = cutoffs(prof, C::new(n as f64, 0.0), &JostOptions::default());
    let e = |x: f64| C::new(0.0, lambda * x).exp();
    let init = [[e(x_max), C::new(0.0, 0.0)], [C::new(0.0, 0.0), e(x_max).conj()]];
    let pa = decoupled_pair(prof, lambda, n as f64, 1.0, x_max, x_min, init);
    let pb = decoupled_pair(prof, lambda, n as f64, -1.0, x_max, x_min, init);
    // interaction picture at x_min: row k scaled by e^{-i gamma_k lambda x_min}
    let g = [1.0, 1.0, -1.0, -1.0];
    let mut al = [[C::new(0.0, 0.0); 4]; 4];
    let place = |al: &mut [[C; 4]; 4], p: &M2c, idx: [usize; 2]| {
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                al[i][j] = p[a][b] * C::new(0.0, -g[i] * lambda * x_min).exp();
            }
        }
    };
    place(&mut al, &pa, [0, 3]);
    place(&mut al, &pb, [1, 2]);
    let a1 = [[al[0][0], al[0][1]], [al[1][0], al[1][1]]];
    let a3 = [[al[2][0], al[2][1]], [al[3][0], al[3][1]]];
    let det = a1[0][0] * a1[1][1] - a1[0][1] * a1[1][0];
    let inv = [[a1[1][1] / det, -a1[0][1] / det], [-a1[1][0] / det, a1[0][0] / det]];
    mul(&a3, &inv)
}

