//! Truncated multivariate Taylor arithmetic ("towers").
//!
//! A tower stores the Taylor coefficients c_α = ∂^α f / α! of a scalar
//! function of up to three seeded directions, truncated at a total order.
//! Multi-indices are kept in graded lexicographic order, so the index set of
//! a lower order is a prefix of every higher order with the same arity; this
//! makes truncation a slice and keeps product tables dense.
//!
//! Coefficients are generic over [`Scalar`], which is what gives
//! forward-over-reverse differentiation: running a tower computation with
//! tape variables as coefficients yields parameter gradients of any
//! input-derivative.

use super::scalar::Scalar;
use smallvec::SmallVec;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

pub const MAX_ARITY: usize = 3;

/// Index layout and product table for one (arity, order) combination.
pub struct Shape {
    pub arity: usize,
    pub order: usize,
    pub indices: Vec<[u8; 3]>,
    /// (i, j, k): result[k] += a[i] * b[j].
    prod: Vec<(u16, u16, u16)>,
    /// Per direction: target position -> (source position, factor) for the
    /// shift that implements ∂/∂x_dir into the order-1 shape.
    dshift: Vec<Vec<(usize, f64)>>,
}

fn gen_indices(arity: usize, order: usize) -> Vec<[u8; 3]> {
    let mut out = Vec::new();
    let cap = order as u8;
    for total in 0..=cap {
        let mut idx = [0u8; 3];
        gen_rec(&mut out, &mut idx, 0, arity, total);
    }
    out
}

fn gen_rec(out: &mut Vec<[u8; 3]>, idx: &mut [u8; 3], pos: usize, arity: usize, rem: u8) {
    if pos == arity {
        if rem == 0 {
            out.push(*idx);
        }
        return;
    }
    if pos == arity - 1 {
        idx[pos] = rem;
        out.push(*idx);
        idx[pos] = 0;
        return;
    }
    for v in (0..=rem).rev() {
        idx[pos] = v;
        gen_rec(out, idx, pos + 1, arity, rem - v);
        idx[pos] = 0;
    }
}

fn position(indices: &[[u8; 3]], target: [u8; 3]) -> Option<usize> {
    indices.iter().position(|&i| i == target)
}

fn build_shape(arity: usize, order: usize, lower: Option<&Shape>) -> Shape {
    let indices = gen_indices(arity, order);
    let n = indices.len();
    let mut prod = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let sum = [
                indices[i][0] + indices[j][0],
                indices[i][1] + indices[j][1],
                indices[i][2] + indices[j][2],
            ];
            if (sum[0] + sum[1] + sum[2]) as usize <= order {
                let k = position(&indices, sum).expect("closed under truncated sum");
                prod.push((i as u16, j as u16, k as u16));
            }
        }
    }
    let mut dshift = Vec::new();
    if let Some(low) = lower {
        for dir in 0..arity {
            let mut map = Vec::with_capacity(low.indices.len());
            for &beta in &low.indices {
                let mut gamma = beta;
                gamma[dir] += 1;
                let src = position(&indices, gamma).expect("gamma within order");
                map.push((src, (beta[dir] + 1) as f64));
            }
            dshift.push(map);
        }
    }
    Shape {
        arity,
        order,
        indices,
        prod,
        dshift,
    }
}

static REGISTRY: OnceLock<Mutex<HashMap<(usize, usize), &'static Shape>>> = OnceLock::new();

impl Shape {
    /// Shared shape handle for (arity, order). Shapes are built once and leaked.
    pub fn get(arity: usize, order: usize) -> &'static Shape {
        assert!((1..=MAX_ARITY).contains(&arity), "tower arity 1..=3");
        let reg = REGISTRY.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = reg.lock().unwrap();
        for ord in 0..=order {
            if !map.contains_key(&(arity, ord)) {
                let lower = if ord > 0 {
                    Some(map[&(arity, ord - 1)])
                } else {
                    None
                };
                let shape: &'static Shape = Box::leak(Box::new(build_shape(arity, ord, lower)));
                map.insert((arity, ord), shape);
            }
        }
        map[&(arity, order)]
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn position_of(&self, orders: &[usize]) -> Option<usize> {
        let mut target = [0u8; 3];
        for (i, &o) in orders.iter().enumerate() {
            target[i] = o as u8;
        }
        position(&self.indices, target)
    }
}

#[derive(Clone)]
pub struct Tower<S: Scalar> {
    pub shape: &'static Shape,
    pub c: SmallVec<[S; 10]>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl<S: Scalar> Tower<S> {
    pub fn constant(shape: &'static Shape, v: S) -> Self {
        let mut c = SmallVec::with_capacity(shape.len());
        c.push(v);
        for _ in 1..shape.len() {
            c.push(S::zero());
        }
        Tower { shape, c }
    }

    /// Variable seeded along direction `dir`.
    pub fn seed(shape: &'static Shape, dir: usize, v: S) -> Self {
        assert!(dir < shape.arity);
        let mut t = Self::constant(shape, v);
        if shape.order >= 1 {
            let mut e = [0u8; 3];
            e[dir] = 1;
            let pos = position(&shape.indices, e).unwrap();
            t.c[pos] = S::one();
        }
        t
    }

    pub fn value(&self) -> S {
        self.c[0]
    }

    /// Mixed partial ∂^orders f, recovered from the Taylor coefficient.
    pub fn extract(&self, orders: &[usize]) -> S {
        let pos = self
            .shape
            .position_of(orders)
            .expect("requested orders exceed tower order");
        let fact: f64 = orders.iter().map(|&o| factorial(o)).product();
        self.c[pos].scale(fact)
    }

    fn truncated(&self, shape: &'static Shape) -> Tower<S> {
        debug_assert!(shape.order <= self.shape.order && shape.arity == self.shape.arity);
        Tower {
            shape,
            c: SmallVec::from_slice(&self.c[..shape.len()]),
        }
    }

    fn aligned(&self, other: &Tower<S>) -> (Tower<S>, Tower<S>, &'static Shape) {
        assert_eq!(self.shape.arity, other.shape.arity, "tower arity mismatch");
        if self.shape.order == other.shape.order {
            (self.clone(), other.clone(), self.shape)
        } else if self.shape.order < other.shape.order {
            (self.clone(), other.truncated(self.shape), self.shape)
        } else {
            (self.truncated(other.shape), other.clone(), other.shape)
        }
    }

    pub fn add(&self, other: &Tower<S>) -> Tower<S> {
        let (a, b, shape) = self.aligned(other);
        let c = a.c.iter().zip(&b.c).map(|(&x, &y)| x + y).collect();
        Tower { shape, c }
    }

    pub fn sub(&self, other: &Tower<S>) -> Tower<S> {
        let (a, b, shape) = self.aligned(other);
        let c = a.c.iter().zip(&b.c).map(|(&x, &y)| x - y).collect();
        Tower { shape, c }
    }

    pub fn mul(&self, other: &Tower<S>) -> Tower<S> {
        let (a, b, shape) = self.aligned(other);
        let mut c: SmallVec<[S; 10]> = SmallVec::with_capacity(shape.len());
        for _ in 0..shape.len() {
            c.push(S::zero());
        }
        for &(i, j, k) in &shape.prod {
            c[k as usize] = c[k as usize] + a.c[i as usize] * b.c[j as usize];
        }
        Tower { shape, c }
    }

    pub fn neg(&self) -> Tower<S> {
        Tower {
            shape: self.shape,
            c: self.c.iter().map(|&x| -x).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Tower<S> {
        Tower {
            shape: self.shape,
            c: self.c.iter().map(|&x| x.scale(k)).collect(),
        }
    }

    pub fn scale_s(&self, k: S) -> Tower<S> {
        Tower {
            shape: self.shape,
            c: self.c.iter().map(|&x| x * k).collect(),
        }
    }

    pub fn add_s(&self, k: S) -> Tower<S> {
        let mut t = self.clone();
        t.c[0] = t.c[0] + k;
        t
    }

    /// ∂/∂x_dir as a tower one order lower.
    pub fn deriv(&self, dir: usize) -> Tower<S> {
        assert!(
            self.shape.order >= 1,
            "cannot differentiate an order-0 tower"
        );
        let target = Shape::get(self.shape.arity, self.shape.order - 1);
        let map = &self.shape.dshift[dir];
        let c = map
            .iter()
            .map(|&(src, factor)| self.c[src].scale(factor))
            .collect();
        Tower { shape: target, c }
    }

    /// Composition with a univariate function given its derivatives
    /// `derivs[k] = g^{(k)}(value)` for k = 0..=order.
    pub fn compose(&self, derivs: &[S]) -> Tower<S> {
        let order = self.shape.order;
        debug_assert!(derivs.len() > order);
        let mut delta = self.clone();
        delta.c[0] = S::zero();
        let coeff = |k: usize| derivs[k].scale(1.0 / factorial(k));
        let mut acc = Tower::constant(self.shape, coeff(order));
        for k in (0..order).rev() {
            acc = acc.mul(&delta);
            acc.c[0] = acc.c[0] + coeff(k);
        }
        acc
    }

    fn unary_derivs(&self) -> usize {
        assert!(
            self.shape.order <= 3,
            "elementary functions support tower order <= 3"
        );
        self.shape.order
    }

    pub fn tanh(&self) -> Tower<S> {
        let ord = self.unary_derivs();
        let u = self.value().tanh();
        let one = S::one();
        let sech2 = one - u * u;
        let mut d = [u, sech2, S::zero(), S::zero()];
        if ord >= 2 {
            d[2] = sech2.scale(-2.0) * u;
        }
        if ord >= 3 {
            d[3] = sech2 * (u * u.scale(6.0) - S::constant(2.0));
        }
        self.compose(&d[..=ord])
    }

    pub fn exp(&self) -> Tower<S> {
        let ord = self.unary_derivs();
        let e = self.value().exp();
        self.compose(&[e; 4][..=ord])
    }

    pub fn sin(&self) -> Tower<S> {
        let ord = self.unary_derivs();
        let s = self.value().sin();
        let c = self.value().cos();
        self.compose(&[s, c, -s, -c][..=ord])
    }

    pub fn cos(&self) -> Tower<S> {
        let ord = self.unary_derivs();
        let s = self.value().sin();
        let c = self.value().cos();
        self.compose(&[c, -s, -c, s][..=ord])
    }

    pub fn sqrt(&self) -> Tower<S> {
        let ord = self.unary_derivs();
        let x = self.value();
        let s = x.sqrt();
        let inv = s.recip();
        let invx = x.recip();
        let d = [
            s,
            inv.scale(0.5),
            inv.scale(-0.25) * invx,
            inv.scale(0.375) * invx * invx,
        ];
        self.compose(&d[..=ord])
    }

    pub fn recip(&self) -> Tower<S> {
        let ord = self.unary_derivs();
        let i = self.value().recip();
        let i2 = i * i;
        let d = [i, -i2, i2 * i.scale(2.0), -(i2 * i2).scale(6.0)];
        self.compose(&d[..=ord])
    }

    pub fn acos(&self) -> Tower<S> {
        let ord = self.unary_derivs();
        let x = self.value();
        let r = (S::one() - x * x).sqrt().recip();
        let r2 = r * r;
        let d = [
            x.acos(),
            -r,
            -(x * r2 * r),
            -((S::one() + (x * x).scale(2.0)) * r2 * r2 * r),
        ];
        self.compose(&d[..=ord])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed1(x: f64, order: usize) -> Tower<f64> {
        Tower::seed(Shape::get(1, order), 0, x)
    }

    #[test]
    fn graded_lex_prefix_property() {
        for arity in 1..=3 {
            let hi = Shape::get(arity, 3);
            for ord in 0..3 {
                let lo = Shape::get(arity, ord);
                assert_eq!(&hi.indices[..lo.len()], &lo.indices[..]);
            }
        }
    }

    #[test]
    fn polynomial_derivatives_exact() {
        // f(x) = x^3: f'(2)=12, f''(2)=12, f'''(2)=6.
        let x = seed1(2.0, 3);
        let f = x.mul(&x).mul(&x);
        assert_eq!(f.extract(&[0]), 8.0);
        assert_eq!(f.extract(&[1]), 12.0);
        assert_eq!(f.extract(&[2]), 12.0);
        assert_eq!(f.extract(&[3]), 6.0);
    }

    #[test]
    fn constant_towers_have_zero_higher_coefficients() {
        let c: Tower<f64> = Tower::constant(Shape::get(2, 3), 4.2);
        let f = c.tanh().mul(&c.exp());
        for &coef in &f.c[1..] {
            assert_eq!(coef, 0.0);
        }
    }

    #[test]
    fn tanh_third_derivative_at_zero() {
        // d^3/dx^3 tanh(x) |_0 = -2.
        let f = seed1(0.0, 3).tanh();
        assert!((f.extract(&[3]) + 2.0).abs() < 1e-14);
    }

    #[test]
    fn mixed_partial_of_product() {
        // f(x,y) = sin(x) * exp(2y); ∂³/∂x²∂y = -sin(x)·2·exp(2y).
        let shape = Shape::get(2, 3);
        let x0 = 0.7;
        let y0 = 0.2;
        let x = Tower::seed(shape, 0, x0);
        let y = Tower::seed(shape, 1, y0);
        let f = x.sin().mul(&y.scale(2.0).exp());
        let expect = -x0.sin() * 2.0 * (2.0 * y0).exp();
        assert!((f.extract(&[2, 1]) - expect).abs() < 1e-12 * expect.abs());
    }

    #[test]
    fn deriv_shift_matches_extract() {
        let shape = Shape::get(2, 3);
        let x = Tower::seed(shape, 0, 0.4);
        let y = Tower::seed(shape, 1, -0.3);
        let f = x.mul(&y).tanh();
        let fx = f.deriv(0);
        assert!((fx.extract(&[1, 1]) - f.extract(&[2, 1])).abs() < 1e-14);
        assert!((fx.value() - f.extract(&[1, 0])).abs() < 1e-14);
    }

    #[test]
    fn acos_derivatives_match_finite_differences() {
        let x0 = 0.3;
        let f = seed1(x0, 3).acos();
        let h = 1e-4;
        let g = |x: f64| x.acos();
        let d1 = (g(x0 + h) - g(x0 - h)) / (2.0 * h);
        let d2 = (g(x0 + h) - 2.0 * g(x0) + g(x0 - h)) / (h * h);
        let d3 = (g(x0 + 2.0 * h) - 2.0 * g(x0 + h) + 2.0 * g(x0 - h) - g(x0 - 2.0 * h))
            / (2.0 * h * h * h);
        assert!((f.extract(&[1]) - d1).abs() < 1e-8);
        assert!((f.extract(&[2]) - d2).abs() < 1e-6);
        assert!((f.extract(&[3]) - d3).abs() < 1e-3);
    }
}
