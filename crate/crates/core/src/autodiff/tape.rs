use std::cell::{Cell, RefCell};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

const NO_PARENT: usize = usize::MAX;

/// One recorded elementary operation with its local partial derivatives.
#[derive(Clone, Copy)]
struct Node {
    parents: [usize; 2],
    partials: [f64; 2],
}

/// Growing record of elementary operations for a reverse sweep.
///
/// A tape is single-writer. [`Tape::clear`] invalidates every handle created
/// before the call; using such a handle in [`Tape::gradient`] is an error.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    generation: Cell<u64>,
}

/// Scalar recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    index: usize,
    generation: u64,
    value: f64,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drop every recorded node. Handles from before the call become stale.
    pub fn clear(&self) {
        self.nodes.borrow_mut().clear();
        self.generation.set(self.generation.get() + 1);
    }

    fn push(&self, value: f64, parents: [usize; 2], partials: [f64; 2]) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { parents, partials });
        Var {
            tape: self,
            index: nodes.len() - 1,
            generation: self.generation.get(),
            value,
        }
    }

    /// Independent input leaf.
    pub fn var(&self, value: f64) -> Var<'_> {
        self.push(value, [NO_PARENT; 2], [0.0; 2])
    }

    pub fn vars(&self, values: &[f64]) -> Vec<Var<'_>> {
        values.iter().map(|&v| self.var(v)).collect()
    }

    pub fn constant(&self, value: f64) -> Var<'_> {
        self.push(value, [NO_PARENT; 2], [0.0; 2])
    }

    fn check(&self, v: &Var<'_>) -> Result<()> {
        if !std::ptr::eq(v.tape, self) {
            return Err(Error::Mismatch("variable recorded on another tape".into()));
        }
        if v.generation != self.generation.get() || v.index >= self.len() {
            return Err(Error::StaleNode);
        }
        Ok(())
    }

    /// Adjoints of `output` with respect to every node on the tape.
    pub fn adjoints(&self, output: Var<'_>) -> Result<Vec<f64>> {
        self.check(&output)?;
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0; nodes.len()];
        adj[output.index] = 1.0;
        for i in (0..=output.index).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let node = nodes[i];
            for k in 0..2 {
                if node.parents[k] != NO_PARENT {
                    adj[node.parents[k]] += a * node.partials[k];
                }
            }
        }
        Ok(adj)
    }

    /// Gradient of `output` with respect to each of `leaves`; unreachable
    /// leaves get zero.
    pub fn gradient(&self, output: Var<'_>, leaves: &[Var<'_>]) -> Result<Vec<f64>> {
        for leaf in leaves {
            self.check(leaf)?;
        }
        let adj = self.adjoints(output)?;
        Ok(leaves.iter().map(|l| adj[l.index]).collect())
    }
}

/// Reverse-mode gradient of `output` with respect to `leaves`.
pub fn grad_params(output: Var<'_>, leaves: &[Var<'_>]) -> Result<Vec<f64>> {
    output.tape.gradient(output, leaves)
}

impl<'t> Var<'t> {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    fn unary(self, value: f64, partial: f64) -> Self {
        self.tape.push(value, [self.index, NO_PARENT], [partial, 0.0])
    }

    fn binary(self, other: Self, value: f64, pa: f64, pb: f64) -> Self {
        debug_assert!(std::ptr::eq(self.tape, other.tape));
        self.tape.push(value, [self.index, other.index], [pa, pb])
    }

    pub fn tanh(self) -> Self {
        let t = self.value.tanh();
        self.unary(t, 1.0 - t * t)
    }

    pub fn scale(self, c: f64) -> Self {
        self.unary(self.value * c, c)
    }

    pub fn offset(self, c: f64) -> Self {
        self.unary(self.value + c, 1.0)
    }
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var({} @ {})", self.value, self.index)
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, self.value + rhs.value, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, self.value - rhs.value, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, self.value * rhs.value, rhs.value, self.value)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Self {
        self.unary(-self.value, -1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_gradient() {
        let tape = Tape::new();
        let a = tape.var(3.0);
        let b = tape.var(4.0);
        let y = a * b;
        assert_eq!(grad_params(y, &[a, b]).unwrap(), vec![4.0, 3.0]);
    }

    #[test]
    fn tanh_at_zero() {
        let tape = Tape::new();
        let a = tape.var(0.0);
        assert_eq!(grad_params(a.tanh(), &[a]).unwrap(), vec![1.0]);
    }

    #[test]
    fn unreachable_leaf_gets_zero() {
        let tape = Tape::new();
        let a = tape.var(1.5);
        let b = tape.var(2.0);
        let y = a * a;
        assert_eq!(grad_params(y, &[a, b]).unwrap(), vec![3.0, 0.0]);
    }

    #[test]
    fn constant_output_has_zero_gradient() {
        let tape = Tape::new();
        let a = tape.var(1.0);
        let c = tape.constant(5.0);
        assert_eq!(grad_params(c, &[a]).unwrap(), vec![0.0]);
    }

    #[test]
    fn cleared_tape_reports_stale_nodes() {
        let tape = Tape::new();
        let a = tape.var(1.0);
        let y = a * a;
        tape.clear();
        assert!(matches!(grad_params(y, &[a]), Err(Error::StaleNode)));
    }

    #[test]
    fn gradient_is_linear_in_the_output() {
        let tape = Tape::new();
        let x = tape.vars(&[0.3, -1.2, 0.7]);
        let f = (x[0] * x[1]).tanh() + x[2] * x[0];
        let g = x[1] * x[1] - x[2].tanh();
        let gf = grad_params(f, &x).unwrap();
        let gg = grad_params(g, &x).unwrap();
        let gs = grad_params(f + g, &x).unwrap();
        for i in 0..3 {
            assert!((gs[i] - gf[i] - gg[i]).abs() < 1e-14);
        }
    }
}
