//! Gauss-Legendre rules, adaptive Gauss-Kronrod, and Chebyshev cumulative
//! integration on panels.

use std::f64::consts::PI;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A Gauss-Legendre rule that can be applied on arbitrary intervals.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = 0.0;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(mid + half * t);
        }
        s * half
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Adaptive Gauss-Kronrod (7-15) by global bisection of the worst interval.
/// Returns the integral and the accumulated error estimate.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> (f64, f64) {
    let mut parts = vec![(a, b, gk15(&mut f, a, b))];
    for _ in 0..5000 {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return (total, err);
        }
        let (k, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.partial_cmp(&y.1 .2 .1).unwrap())
            .unwrap();
        let (lo, hi, _) = parts.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        parts.push((lo, mid, gk15(&mut f, lo, mid)));
        parts.push((mid, hi, gk15(&mut f, mid, hi)));
    }
    let total: f64 = parts.iter().map(|p| p.2 .0).sum();
    let err: f64 = parts.iter().map(|p| p.2 .1).sum();
    (total, err)
}

/// Chebyshev-Lobatto nodes on [-1, 1] in increasing order with the matrix of
/// cumulative integrals S[i][j] = int_{-1}^{t_i} l_j(t) dt of the Lagrange basis.
#[derive(Debug, Clone)]
pub struct ChebyshevPanel {
    pub nodes: Vec<f64>,
    pub cumulative: Vec<Vec<f64>>,
}

impl ChebyshevPanel {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let nodes: Vec<f64> = (0..n).map(|j| -(PI * j as f64 / (n - 1) as f64).cos()).collect();
        // barycentric weights for Lobatto points
        let bw: Vec<f64> = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n - 1 {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let lagrange = |j: usize, t: f64| -> f64 {
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 0..n {
                let d = t - nodes[k];
                if d == 0.0 {
                    return if k == j { 1.0 } else { 0.0 };
                }
                let c = bw[k] / d;
                den += c;
                if k == j {
                    num = c;
                }
            }
            num / den
        };
        let gl = GaussLegendre::new(n);
        let mut cumulative = vec![vec![0.0; n]; n];
        for i in 1..n {
            for j in 0..n {
                cumulative[i][j] = gl.integrate(|t| lagrange(j, t), -1.0, nodes[i]);
            }
        }
        Self { nodes, cumulative }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
