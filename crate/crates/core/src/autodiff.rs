//! Differentiation machinery.
//!
//! Two pieces live here:
//!
//! * [`DualPoint`], the (value, spatial gradient) pair that a network
//!   evaluation produces. The ResNet propagates spatial tangents forward
//!   through every layer and then reverse-accumulates parameter adjoints
//!   over that augmented pass (see [`crate::network::ResNet::backward`]).
//! * A small scalar [`Tape`] for reverse-mode differentiation of arbitrary
//!   scalar programs, used by [`loss_gradient`] and as an independent route
//!   in tests.
//!
//! [`finite_difference_gradient`] is the central-difference oracle.

use std::cell::RefCell;
use std::ops::{Add, Deref, DerefMut, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::network::{NetworkArch, ResNet};

/// Value of a scalar field together with its spatial gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub value: f64,
    pub tangent: Vec<f64>,
}

impl DualPoint {
    pub fn constant(value: f64, dim: usize) -> Self {
        Self {
            value,
            tangent: vec![0.0; dim],
        }
    }

    /// The coordinate map `x -> x_j`.
    pub fn coordinate(x: &[f64], j: usize) -> Self {
        let mut tangent = vec![0.0; x.len()];
        tangent[j] = 1.0;
        Self {
            value: x[j],
            tangent,
        }
    }

    pub fn dim(&self) -> usize {
        self.tangent.len()
    }

    /// Directional derivative along `n`.
    pub fn directional(&self, n: &[f64]) -> f64 {
        self.tangent.iter().zip(n).map(|(g, n)| g * n).sum()
    }

    pub fn grad_norm_sq(&self) -> f64 {
        self.tangent.iter().map(|g| g * g).sum()
    }
}

/// Gradient of a scalar with respect to a parameter vector, same layout.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GradientVector(pub Vec<f64>);

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|g| g.is_finite())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GradientVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for GradientVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Network value and exact spatial gradient at `x`.
pub fn value_and_spatial_gradient(
    arch: &NetworkArch,
    params: &[f64],
    x: &[f64],
) -> Result<DualPoint> {
    ResNet::new(*arch)?.eval_dual(params, x)
}

/// Central differences `(f(θ + h e_i) - f(θ - h e_i)) / 2h` per coordinate.
pub fn finite_difference_gradient<F>(f: F, params: &[f64], step: f64) -> Result<GradientVector>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let mut probe = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let plus = f(&probe)?;
        probe[i] = orig - step;
        let minus = f(&probe)?;
        probe[i] = orig;
        grad.push((plus - minus) / (2.0 * step));
    }
    Ok(GradientVector(grad))
}

/// Value and reverse-mode gradient of a scalar program recorded on a tape.
///
/// `loss` receives one tape variable per entry of `params` and returns the
/// scalar output.
pub fn loss_gradient<F>(loss: F, params: &[f64]) -> Result<(f64, GradientVector)>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Var<'t>,
{
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = params.iter().map(|&p| tape.var(p)).collect();
    let out = loss(&tape, &vars);
    if !out.value().is_finite() {
        return Err(Error::NonFinite("tape output".into()));
    }
    let adjoints = tape.backward(out);
    let grad = GradientVector(vars.iter().map(|v| adjoints[v.index]).collect());
    if !grad.is_finite() {
        return Err(Error::NonFinite("tape gradient".into()));
    }
    Ok((out.value(), grad))
}

#[derive(Debug, Clone, Copy)]
struct Node {
    parents: [usize; 2],
    partials: [f64; 2],
}

/// Wengert list for scalar reverse mode. Single use; not shared across threads.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
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

    /// A new independent variable (leaf).
    pub fn var(&self, value: f64) -> Var<'_> {
        let index = self.push(Node {
            parents: [usize::MAX; 2],
            partials: [0.0; 2],
        });
        Var {
            tape: self,
            index,
            value,
        }
    }

    pub fn constant(&self, value: f64) -> Var<'_> {
        self.var(value)
    }

    fn push(&self, node: Node) -> usize {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(node);
        nodes.len() - 1
    }

    fn unary(&self, a: usize, da: f64, value: f64) -> Var<'_> {
        let index = self.push(Node {
            parents: [a, usize::MAX],
            partials: [da, 0.0],
        });
        Var {
            tape: self,
            index,
            value,
        }
    }

    fn binary(&self, a: usize, da: f64, b: usize, db: f64, value: f64) -> Var<'_> {
        let index = self.push(Node {
            parents: [a, b],
            partials: [da, db],
        });
        Var {
            tape: self,
            index,
            value,
        }
    }

    /// Adjoints of `output` with respect to every recorded node, indexed by node.
    pub fn backward(&self, output: Var<'_>) -> Vec<f64> {
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
                let p = node.parents[k];
                if p != usize::MAX {
                    adj[p] += a * node.partials[k];
                }
            }
        }
        adj
    }

    /// Gradient of `output` with respect to the given variables.
    pub fn gradient(&self, output: Var<'_>, wrt: &[Var<'_>]) -> Vec<f64> {
        let adj = self.backward(output);
        wrt.iter().map(|v| adj[v.index]).collect()
    }

    /// Sum of variables in index order.
    pub fn sum<'t>(&'t self, terms: impl IntoIterator<Item = Var<'t>>) -> Var<'t> {
        let mut acc = self.constant(0.0);
        for t in terms {
            acc = acc + t;
        }
        acc
    }
}

/// A scalar recorded on a [`Tape`].
#[derive(Debug, Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    index: usize,
    value: f64,
}

impl<'t> Var<'t> {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn tanh(self) -> Self {
        let t = self.value.tanh();
        self.tape.unary(self.index, 1.0 - t * t, t)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.tape.unary(self.index, e, e)
    }

    pub fn ln(self) -> Self {
        self.tape.unary(self.index, 1.0 / self.value, self.value.ln())
    }

    pub fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.tape.unary(self.index, 0.5 / s, s)
    }

    pub fn sin(self) -> Self {
        self.tape
            .unary(self.index, self.value.cos(), self.value.sin())
    }

    pub fn cos(self) -> Self {
        self.tape
            .unary(self.index, -self.value.sin(), self.value.cos())
    }

    pub fn square(self) -> Self {
        self.tape
            .unary(self.index, 2.0 * self.value, self.value * self.value)
    }

    pub fn powi(self, n: i32) -> Self {
        let d = if n == 0 {
            0.0
        } else {
            f64::from(n) * self.value.powi(n - 1)
        };
        self.tape.unary(self.index, d, self.value.powi(n))
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Self) -> Self {
        self.tape
            .binary(self.index, 1.0, rhs.index, 1.0, self.value + rhs.value)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Self) -> Self {
        self.tape
            .binary(self.index, 1.0, rhs.index, -1.0, self.value - rhs.value)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Self) -> Self {
        self.tape.binary(
            self.index,
            rhs.value,
            rhs.index,
            self.value,
            self.value * rhs.value,
        )
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        self.tape
            .binary(self.index, 1.0 / rhs.value, rhs.index, -q / rhs.value, q)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Self {
        self.tape.unary(self.index, -1.0, -self.value)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: f64) -> Self {
        self.tape.unary(self.index, 1.0, self.value + rhs)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: f64) -> Self {
        self.tape.unary(self.index, 1.0, self.value - rhs)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Self {
        self.tape.unary(self.index, rhs, self.value * rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: f64) -> Self {
        self.tape.unary(self.index, 1.0 / rhs, self.value / rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn central<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn quadratic_loss_gradient_is_twice_params() {
        let params = [0.5, -1.25, 3.0, 0.0];
        let (value, grad) = loss_gradient(
            |tape, p| tape.sum(p.iter().map(|v| v.square())),
            &params,
        )
        .unwrap();
        assert_eq!(value, 0.25 + 1.5625 + 9.0);
        for (g, p) in grad.iter().zip(&params) {
            assert_eq!(*g, 2.0 * p);
        }
    }

    #[test]
    fn fd_of_square() {
        let g = finite_difference_gradient(|t| Ok(t[0] * t[0]), &[3.0], 1e-4).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-7);
    }

    #[test]
    fn fd_of_constant_is_zero() {
        let g = finite_difference_gradient(|_| Ok(2.5), &[1.0, -2.0, 7.0], 1e-3).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fd_rejects_nonpositive_step() {
        assert!(finite_difference_gradient(|_| Ok(0.0), &[1.0], 0.0).is_err());
        assert!(finite_difference_gradient(|_| Ok(0.0), &[1.0], f64::NAN).is_err());
    }

    #[test]
    fn coordinate_dual_is_unit_vector() {
        let d = DualPoint::coordinate(&[0.3, -0.7, 2.0], 1);
        assert_eq!(d.value, -0.7);
        assert_eq!(d.tangent, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn shared_subexpression_accumulates() {
        // f = x * x + x, df/dx = 2x + 1
        let tape = Tape::new();
        let x = tape.var(1.5);
        let y = x * x + x;
        assert_eq!(tape.gradient(y, &[x]), vec![4.0]);
    }

    proptest! {
        #[test]
        fn unary_primitives_match_central_differences(x in -1.0f64..1.0) {
            let h = 1e-5;
            let tape = Tape::new();
            let v = tape.var(x);
            type Prim = (fn(Var<'_>) -> Var<'_>, fn(f64) -> f64);
            let prims: [Prim; 6] = [
                (|v| v.tanh(), f64::tanh),
                (|v| v.exp(), f64::exp),
                (|v| v.sin(), f64::sin),
                (|v| v.cos(), f64::cos),
                (|v| v.square(), |x| x * x),
                (|v| v.powi(3), |x| x.powi(3)),
            ];
            for (rec, plain) in prims {
                let out = rec(v);
                let g = tape.gradient(out, &[v])[0];
                prop_assert!(rel_err(g, central(plain, x, h)) <= 1e-6);
            }
            // ln and sqrt on a shifted positive argument
            let s = v + 2.0;
            let g_ln = tape.gradient(s.ln(), &[v])[0];
            prop_assert!(rel_err(g_ln, central(|x| (x + 2.0).ln(), x, h)) <= 1e-6);
            let g_sqrt = tape.gradient(s.sqrt(), &[v])[0];
            prop_assert!(rel_err(g_sqrt, central(|x| (x + 2.0).sqrt(), x, h)) <= 1e-6);
        }

        #[test]
        fn binary_primitives_match_central_differences(x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let h = 1e-5;
            let tape = Tape::new();
            let a = tape.var(x);
            let b = tape.var(y);
            let prod = a * b;
            prop_assert_eq!(tape.gradient(prod, &[a, b]), vec![y, x]);
            let diff = a - b * 3.0;
            prop_assert_eq!(tape.gradient(diff, &[a, b]), vec![1.0, -3.0]);
            let quot = a / (b + 3.0);
            let g = tape.gradient(quot, &[a, b]);
            prop_assert!(rel_err(g[0], central(|t| t / (y + 3.0), x, h)) <= 1e-6);
            prop_assert!(rel_err(g[1], central(|t| x / (t + 3.0), y, h)) <= 1e-6);
        }
    }
}
