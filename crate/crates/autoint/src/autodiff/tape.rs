//! Reverse-mode tape for first-order parameter gradients.
//!
//! The tape records a Wengert list of scalar operations. Variables are
//! lightweight `Var` handles (node index + cached value); constants carry no
//! node at all, so mixing constants with tape variables is free.

use std::cell::RefCell;

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Node {
    parents: [u32; 2],
    weights: [f64; 2],
}

/// Gradient tape. Reusable across evaluations via [`Tape::clear`].
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Tape {
            nodes: RefCell::new(Vec::with_capacity(n)),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops all recorded nodes. Any outstanding `Var` from before the clear
    /// must not be used afterwards.
    pub fn clear(&self) {
        self.nodes.borrow_mut().clear();
    }

    fn push(&self, parents: [u32; 2], weights: [f64; 2]) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(Node { parents, weights });
        idx
    }

    /// Introduces a new independent variable.
    pub fn var(&self, val: f64) -> Var<'_> {
        let idx = self.push([NONE, NONE], [0.0, 0.0]);
        Var {
            tape: Some(self),
            idx,
            val,
        }
    }

    /// Reverse sweep from `output`; returns the adjoint of every node.
    pub fn adjoints(&self, output: Var<'_>) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0; nodes.len()];
        if let Some(idx) = output.node_index() {
            adj[idx as usize] = 1.0;
            for i in (0..nodes.len()).rev() {
                let a = adj[i];
                if a == 0.0 {
                    continue;
                }
                let node = nodes[i];
                for k in 0..2 {
                    if node.parents[k] != NONE {
                        adj[node.parents[k] as usize] += a * node.weights[k];
                    }
                }
            }
        }
        adj
    }

    /// Gradient of `output` with respect to the given variables.
    pub fn gradient(&self, output: Var<'_>, wrt: &[Var<'_>]) -> Vec<f64> {
        let adj = self.adjoints(output);
        wrt.iter()
            .map(|v| match v.node_index() {
                Some(i) => adj[i as usize],
                None => 0.0,
            })
            .collect()
    }
}

/// A scalar on the tape (or a free constant when `tape` is `None`).
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: Option<&'t Tape>,
    idx: u32,
    val: f64,
}

impl<'t> Var<'t> {
    pub fn constant(val: f64) -> Self {
        Var {
            tape: None,
            idx: NONE,
            val,
        }
    }

    pub fn value(self) -> f64 {
        self.val
    }

    fn node_index(self) -> Option<u32> {
        self.tape.map(|_| self.idx)
    }

    fn parent(self) -> u32 {
        match self.tape {
            Some(_) => self.idx,
            None => NONE,
        }
    }

    fn binary(self, other: Var<'t>, val: f64, da: f64, db: f64) -> Var<'t> {
        match self.tape.or(other.tape) {
            Some(tape) => {
                let idx = tape.push([self.parent(), other.parent()], [da, db]);
                Var {
                    tape: Some(tape),
                    idx,
                    val,
                }
            }
            None => Var::constant(val),
        }
    }

    pub(crate) fn unary(self, val: f64, dv: f64) -> Var<'t> {
        match self.tape {
            Some(tape) => {
                let idx = tape.push([self.idx, NONE], [dv, 0.0]);
                Var {
                    tape: Some(tape),
                    idx,
                    val,
                }
            }
            None => Var::constant(val),
        }
    }
}

impl<'t> std::ops::Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, self.val + rhs.val, 1.0, 1.0)
    }
}

impl<'t> std::ops::Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, self.val - rhs.val, 1.0, -1.0)
    }
}

impl<'t> std::ops::Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        self.binary(rhs, self.val * rhs.val, rhs.val, self.val)
    }
}

impl<'t> std::ops::Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        let inv = 1.0 / rhs.val;
        self.binary(rhs, self.val * inv, inv, -self.val * inv * inv)
    }
}

impl<'t> std::ops::Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.unary(-self.val, -1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let tape = Tape::new();
        let x = tape.var(3.0);
        let y = tape.var(4.0);
        let z = x * y + x;
        let g = tape.gradient(z, &[x, y]);
        assert_eq!(g, vec![5.0, 3.0]);
    }

    #[test]
    fn constants_do_not_touch_the_tape() {
        let tape = Tape::new();
        let x = tape.var(2.0);
        let before = tape.len();
        let c = Var::constant(3.0) * Var::constant(4.0);
        assert_eq!(c.value(), 12.0);
        assert_eq!(tape.len(), before);
        let y = x * c;
        let g = tape.gradient(y, &[x]);
        assert_eq!(g, vec![12.0]);
    }

    #[test]
    fn division_gradient() {
        let tape = Tape::new();
        let x = tape.var(2.0);
        let y = tape.var(5.0);
        let z = x / y;
        let g = tape.gradient(z, &[x, y]);
        assert!((g[0] - 0.2).abs() < 1e-15);
        assert!((g[1] + 2.0 / 25.0).abs() < 1e-15);
    }
}
