//! Independent ground truth: closed-form densities and solutions plus
//! high-accuracy quadrature. Nothing here touches the tower engine or the
//! fast circuit simulator; validation stays on a separate code path.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("density undefined for t = {t} <= t0 = {t0}")]
    BeforeInitialTime { t: f64, t0: f64 },
}

// ---------------------------------------------------------------------------
// Quadrature

/// Gauss–Legendre nodes/weights on [-1, 1], computed by Newton iteration on
/// the Legendre recurrence.
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// (P_n(x), P_n'(x)).
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive Simpson with an absolute error target.
pub fn adaptive_simpson(a: f64, b: f64, tol: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, f: &dyn Fn(f64) -> f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
        f: &dyn Fn(f64) -> f64,
    ) -> f64 {
        let (left, lm, flm) = simpson(a, fa, m, fm, f);
        let (right, rm, frm) = simpson(m, fm, b, fb, f);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1, f)
                + recurse(m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1, f)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(a, fa, b, fb, f);
    recurse(a, fa, b, fb, whole, m, fm, tol, 48, f)
}

#[derive(Debug, Clone, Copy)]
pub enum QuadratureRule {
    GaussLegendre { points: usize },
    AdaptiveSimpson { tol: f64 },
}

impl QuadratureRule {
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        match *self {
            QuadratureRule::GaussLegendre { points } => GaussLegendre::new(points).integrate(a, b, f),
            QuadratureRule::AdaptiveSimpson { tol } => adaptive_simpson(a, b, tol, &f),
        }
    }
}

/// ∫ k·f ds over [a, b].
pub fn quadrature_transform(
    f: impl Fn(f64) -> f64,
    kernel: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rule: QuadratureRule,
) -> f64 {
    rule.integrate(a, b, |s| kernel(s) * f(s))
}

// ---------------------------------------------------------------------------
// Ornstein–Uhlenbeck closed forms (Dirac initial peak at x0, time t0)

pub fn ou_normalizer(t: f64, sigma: f64, nu: f64, t0: f64) -> f64 {
    sigma * sigma / nu * (1.0 - (-2.0 * nu * (t - t0)).exp())
}

pub fn ou_mean(t: f64, nu: f64, x0: f64, t0: f64) -> f64 {
    x0 * (-nu * (t - t0)).exp()
}

pub fn ou_variance(t: f64, sigma: f64, nu: f64, t0: f64) -> f64 {
    0.5 * ou_normalizer(t, sigma, nu, t0)
}

/// Transition density of the mean-zero OU process.
pub fn ou_pdf(
    x: f64,
    t: f64,
    sigma: f64,
    nu: f64,
    x0: f64,
    t0: f64,
) -> Result<f64, OracleError> {
    if t <= t0 {
        return Err(OracleError::BeforeInitialTime { t, t0 });
    }
    let norm = ou_normalizer(t, sigma, nu, t0);
    let mean = ou_mean(t, nu, x0, t0);
    Ok((1.0 / (std::f64::consts::PI * norm)).sqrt() * (-(x - mean).powi(2) / norm).exp())
}

/// Product density of two independent OU processes.
#[allow(clippy::too_many_arguments)]
pub fn ou_pdf_2d(
    x1: f64,
    x2: f64,
    t: f64,
    p1: (f64, f64, f64, f64),
    p2: (f64, f64, f64, f64),
) -> Result<f64, OracleError> {
    let (s1, n1, x01, t01) = p1;
    let (s2, n2, x02, t02) = p2;
    Ok(ou_pdf(x1, t, s1, n1, x01, t01)? * ou_pdf(x2, t, s2, n2, x02, t02)?)
}

// ---------------------------------------------------------------------------
// Case-study closed forms

/// Exact solution of the population integro-differential equation.
pub fn population_exact(t: f64) -> f64 {
    ((t / 2.0).exp() - t.sin() + t.cos()) / 2.0
}

/// Moment of inertia of the spinning vessel: solving the Bernoulli balance
/// with volume conservation gives h(r) = h0 + ω²/(2g)(r² − R²/3), and
/// integrating r²h against ρw yields the closed form below.
pub fn moi_exact(omega: f64, rho: f64, width: f64, h0: f64, radius: f64, g: f64) -> f64 {
    rho * width
        * (h0 * radius.powi(3) / 3.0 + 2.0 * omega * omega * radius.powi(5) / (45.0 * g))
}

/// Equilibrium liquid height used by the quadrature cross-check of
/// `moi_exact`.
pub fn vessel_height(r: f64, omega: f64, h0: f64, radius: f64, g: f64) -> f64 {
    h0 + omega * omega / (2.0 * g) * (r * r - radius * radius / 3.0)
}

/// Solution of the advection–diffusion equation for a Gaussian drop of mass
/// `m` centered at `x_c` with width `s0` at t = 0.
pub fn advected_gaussian(x: f64, t: f64, v: f64, d: f64, m: f64, x_c: f64, s0: f64) -> f64 {
    let var = s0 * s0 + 2.0 * d * t;
    m / (2.0 * std::f64::consts::PI * var).sqrt()
        * (-(x - x_c - v * t).powi(2) / (2.0 * var)).exp()
}

/// Electric potential of the advected charge at observation point
/// (x0, y0, z0), by adaptive quadrature of the Coulomb transform.
#[allow(clippy::too_many_arguments)]
pub fn potential_oracle(
    t: f64,
    v: f64,
    d: f64,
    lambda: f64,
    obs: [f64; 3],
    m: f64,
    x_c: f64,
    s0: f64,
    limits: [f64; 2],
) -> f64 {
    let dist = |x: f64| {
        ((x - obs[0]).powi(2) + obs[1] * obs[1] + obs[2] * obs[2]).sqrt()
    };
    lambda
        * adaptive_simpson(limits[0], limits[1], 1e-10, &|x| {
            advected_gaussian(x, t, v, d, m, x_c, s0) / dist(x)
        })
}

// ---------------------------------------------------------------------------
// Dense statevector oracle for the DQC

mod dense {
    //! Brute-force circuit simulation by explicit 2^n × 2^n unitaries built
    //! with Kronecker products; deliberately unrelated to the tower-based
    //! simulator it validates.

    type C = (f64, f64);

    fn cmul(a: C, b: C) -> C {
        (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
    }

    fn cadd(a: C, b: C) -> C {
        (a.0 + b.0, a.1 + b.1)
    }

    pub type Matrix = Vec<Vec<C>>;

    pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
        let (ra, ca) = (a.len(), a[0].len());
        let (rb, cb) = (b.len(), b[0].len());
        let mut out = vec![vec![(0.0, 0.0); ca * cb]; ra * rb];
        for i in 0..ra {
            for j in 0..ca {
                for k in 0..rb {
                    for l in 0..cb {
                        out[i * rb + k][j * cb + l] = cmul(a[i][j], b[k][l]);
                    }
                }
            }
        }
        out
    }

    pub fn identity(dim: usize) -> Matrix {
        let mut m = vec![vec![(0.0, 0.0); dim]; dim];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = (1.0, 0.0);
        }
        m
    }

    pub fn matvec(m: &Matrix, v: &[C]) -> Vec<C> {
        m.iter()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .fold((0.0, 0.0), |acc, (&a, &x)| cadd(acc, cmul(a, x)))
            })
            .collect()
    }

    pub fn rx(theta: f64) -> Matrix {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        vec![vec![(c, 0.0), (0.0, -s)], vec![(0.0, -s), (c, 0.0)]]
    }

    pub fn ry(theta: f64) -> Matrix {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        vec![vec![(c, 0.0), (-s, 0.0)], vec![(s, 0.0), (c, 0.0)]]
    }

    pub fn rz(theta: f64) -> Matrix {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        vec![vec![(c, -s), (0.0, 0.0)], vec![(0.0, 0.0), (c, s)]]
    }

    /// Embeds a single-qubit gate on `qubit` (bit index, qubit 0 = least
    /// significant) into the full register.
    pub fn embed(gate: &Matrix, qubit: usize, n_qubits: usize) -> Matrix {
        // Column index bit k corresponds to qubit k, so qubit n-1 is the
        // leftmost Kronecker factor.
        let mut m = identity(1);
        for q in (0..n_qubits).rev() {
            let factor = if q == qubit { gate.clone() } else { identity(2) };
            m = kron(&m, &factor);
        }
        m
    }

    pub fn cnot(control: usize, target: usize, n_qubits: usize) -> Matrix {
        let dim = 1 << n_qubits;
        let mut m = vec![vec![(0.0, 0.0); dim]; dim];
        for col in 0..dim {
            let row = if col & (1 << control) != 0 {
                col ^ (1 << target)
            } else {
                col
            };
            m[row][col] = (1.0, 0.0);
        }
        m
    }
}

use crate::ufa::DqcConfig;

/// Expectation of total magnetization from the dense matrix oracle.
pub fn dqc_dense_expectation(config: &DqcConfig, params: &[f64], x: f64) -> f64 {
    let n = config.n_qubits;
    let dim = 1 << n;
    let (slope, offset) = config.rescale_coeffs();
    let rescaled = slope * x + offset;
    assert!(rescaled.abs() < 1.0, "input outside rescaled domain");

    let mut state: Vec<(f64, f64)> = vec![(0.0, 0.0); dim];
    state[0] = (1.0, 0.0);
    let theta = rescaled.acos();
    for q in 0..n {
        let gate = dense::embed(&dense::ry(2.0 * (q + 1) as f64 * theta), q, n);
        state = dense::matvec(&gate, &state);
    }
    let mut p = 0;
    for _ in 0..config.ansatz_depth {
        for q in 0..n {
            for axis in 0..3 {
                let g = if axis == 1 {
                    dense::rz(params[p])
                } else {
                    dense::rx(params[p])
                };
                p += 1;
                state = dense::matvec(&dense::embed(&g, q, n), &state);
            }
        }
        for q in 0..n.saturating_sub(1) {
            state = dense::matvec(&dense::cnot(q, q + 1, n), &state);
        }
    }

    state
        .iter()
        .enumerate()
        .map(|(i, &(re, im))| {
            let weight: f64 = (0..n)
                .map(|q| if i & (1 << q) == 0 { 1.0 } else { -1.0 })
                .sum();
            weight * (re * re + im * im)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        let gl = GaussLegendre::new(2);
        let val = gl.integrate(0.0, 1.0, |x| x * x);
        assert!((val - 1.0 / 3.0).abs() < 1e-14);
        let gl5 = GaussLegendre::new(5);
        let val9 = gl5.integrate(-1.0, 2.0, |x| x.powi(9) - 3.0 * x.powi(4));
        let exact = (2.0f64.powi(10) - 1.0) / 10.0 - 3.0 * (2.0f64.powi(5) + 1.0) / 5.0;
        assert!((val9 - exact).abs() < 1e-12);
    }

    #[test]
    fn adaptive_simpson_meets_tolerance() {
        let val = adaptive_simpson(0.0, std::f64::consts::PI, 1e-12, &|x| x.sin());
        assert!((val - 2.0).abs() < 1e-10);
    }

    #[test]
    fn ou_pdf_normalizes() {
        let rule = QuadratureRule::GaussLegendre { points: 128 };
        let mass = rule.integrate(-5.0, 5.0, |x| ou_pdf(x, 0.1, 1.0, 5.0, 2.0, 0.0).unwrap());
        assert!((mass - 1.0).abs() < 1e-10, "mass = {mass}");
    }

    #[test]
    fn ou_moments() {
        // mean at t = 0.1: 2 e^{-0.5}
        assert!((ou_mean(0.1, 5.0, 2.0, 0.0) - 2.0 * (-0.5f64).exp()).abs() < 1e-15);
        // long-time variance -> sigma^2 / (2 nu)
        assert!((ou_variance(1e3, 1.0, 5.0, 0.0) - 0.1).abs() < 1e-12);
        // first moment by quadrature at T = 0.5
        let m1 = quadrature_transform(
            |x| ou_pdf(x, 0.5, 1.0, 5.0, 2.0, 0.0).unwrap(),
            |x| x,
            -5.0,
            5.0,
            QuadratureRule::GaussLegendre { points: 64 },
        );
        assert!((m1 - 2.0 * (-2.5f64).exp()).abs() < 1e-10);
        assert!((m1 - 0.16417).abs() < 5e-6);
    }

    #[test]
    fn population_exact_initial_value() {
        assert_eq!(population_exact(0.0), 1.0);
        assert!((population_exact(1.0) - 0.67378).abs() < 5e-6);
    }

    #[test]
    fn population_exact_satisfies_the_ide() {
        // b'(t) = u(t) + ∫_0^t (t - t') b(t') dt'
        let u = |t: f64| (6.0 * (1.0 + t) - 7.0 * (t / 2.0).exp() - 4.0 * t.sin()) / 4.0;
        let bprime =
            |t: f64| (0.5 * (t / 2.0).exp() - t.cos() - t.sin()) / 2.0;
        for i in 0..20 {
            let t = 0.05 + 0.93 * (i as f64) / 19.0;
            let integral = adaptive_simpson(0.0, t, 1e-12, &|tp| (t - tp) * population_exact(tp));
            assert!(
                (bprime(t) - u(t) - integral).abs() < 1e-8,
                "IDE residual at t = {t}"
            );
        }
    }

    #[test]
    fn moi_exact_matches_quadrature_of_height_profile() {
        let (rho, w, h0, r_cap, g) = (1.0, 0.1, 1.0, 1.0, 9.81);
        for i in 0..9 {
            let omega = i as f64;
            let quad = rho
                * w
                * adaptive_simpson(0.0, r_cap, 1e-12, &|r| {
                    r * r * vessel_height(r, omega, h0, r_cap, g)
                });
            let exact = moi_exact(omega, rho, w, h0, r_cap, g);
            assert!((quad - exact).abs() < 1e-8, "omega = {omega}");
        }
    }

    #[test]
    fn moi_volume_is_conserved() {
        let (h0, r_cap, g) = (1.0, 1.0, 9.81);
        for omega in [0.0, 3.0, 8.0] {
            let vol = adaptive_simpson(0.0, r_cap, 1e-12, &|r| {
                vessel_height(r, omega, h0, r_cap, g)
            });
            assert!((vol - h0 * r_cap).abs() < 1e-10);
        }
    }

    #[test]
    fn advected_gaussian_solves_the_pde() {
        let (v, d, m, x_c, s0) = (1.0, 0.1, 1.0, -2.0, 0.2);
        let c = |x: f64, t: f64| advected_gaussian(x, t, v, d, m, x_c, s0);
        let (x, t) = (-1.2, 0.4);
        let (hx, ht) = (1e-5, 1e-5);
        let ct = (c(x, t + ht) - c(x, t - ht)) / (2.0 * ht);
        let cx = (c(x + hx, t) - c(x - hx, t)) / (2.0 * hx);
        let cxx = (c(x + hx, t) - 2.0 * c(x, t) + c(x - hx, t)) / (hx * hx);
        assert!((ct + v * cx - d * cxx).abs() < 1e-6);
    }
}
