//! ResNet ansatz functions.
//!
//! A network maps `x ∈ R^d` through an input layer `h₀ = W₀x + b₀`, then `n`
//! residual blocks `f(s) = σ(W₂σ(W₁s + b₁) + b₂) + s` of width `m`, and a
//! scalar output layer `u = w·h + b`.
//!
//! Parameters are a flat vector laid out as
//! `W₀, b₀, (W₁, b₁, W₂, b₂) per block, w_out, b_out`, matrices row-major
//! with rows indexing outputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::DualPoint;
use crate::error::{Error, Result};
use crate::geometry::Region;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
        }
    }

    /// σ'(z) expressed through the output `a = σ(z)`.
    #[inline]
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
        }
    }

    /// σ''(z) expressed through the output `a = σ(z)`.
    #[inline]
    fn second_derivative(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => -2.0 * a * (1.0 - a * a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkArch {
    #[serde(rename = "d")]
    pub input_dim: usize,
    #[serde(rename = "m")]
    pub width: usize,
    #[serde(rename = "n")]
    pub blocks: usize,
    #[serde(default)]
    pub activation: Activation,
}

impl NetworkArch {
    pub fn new(input_dim: usize, width: usize, blocks: usize) -> Result<Self> {
        let arch = Self {
            input_dim,
            width,
            blocks,
            activation: Activation::Tanh,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.width == 0 {
            return Err(Error::InvalidArch(format!(
                "need d >= 1 and m >= 1, got d={} m={}",
                self.input_dim, self.width
            )));
        }
        Ok(())
    }

    /// `m(d+1) + 2·n·m(m+1) + (m+1)`.
    pub fn param_count(&self) -> usize {
        let (d, m, n) = (self.input_dim, self.width, self.blocks);
        m * (d + 1) + 2 * n * m * (m + 1) + (m + 1)
    }

    fn block_offset(&self, i: usize) -> usize {
        let (d, m) = (self.input_dim, self.width);
        m * (d + 1) + 2 * i * m * (m + 1)
    }

    fn output_offset(&self) -> usize {
        self.block_offset(self.blocks)
    }
}

pub fn param_count(arch: &NetworkArch) -> usize {
    arch.param_count()
}

/// Flat parameter storage in the layout described at module level.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn zeros(arch: &NetworkArch) -> Self {
        Self(vec![0.0; arch.param_count()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Xavier-uniform weights, zero biases, deterministic in `seed`.
pub fn xavier_init(arch: &NetworkArch, seed: u64) -> ParameterVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d, m) = (arch.input_dim, arch.width);
    let mut out = Vec::with_capacity(arch.param_count());
    let mut fill = |out: &mut Vec<f64>, rows: usize, cols: usize| {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        for _ in 0..rows * cols {
            out.push(rng.random_range(-bound..bound));
        }
        out.extend(std::iter::repeat_n(0.0, rows));
    };
    fill(&mut out, m, d);
    for _ in 0..arch.blocks {
        fill(&mut out, m, m);
        fill(&mut out, m, m);
    }
    fill(&mut out, 1, m);
    debug_assert_eq!(out.len(), arch.param_count());
    ParameterVector(out)
}

/// Intermediate values of one forward pass, reused across evaluations.
///
/// A pass always records the hidden values. It can also carry `r` tangent
/// rows: the derivatives of every hidden state along the seed directions
/// `s_1..s_r ∈ R^d`. The full Jacobian uses the `d` unit vectors as seeds.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    x: Vec<f64>,
    /// Block inputs `h_0..h_n`, each of width `m`.
    h: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    value: f64,
    /// Number of tangent rows carried by the last pass.
    rows: usize,
    identity_seed: bool,
    /// Seed directions, `rows × d`.
    seed: Vec<f64>,
    /// Tangents of the block inputs, `rows × m` per block.
    t: Vec<f64>,
    tz1: Vec<f64>,
    ta1: Vec<f64>,
    tz2: Vec<f64>,
    /// Derivative of the output along each seed.
    tangent_out: Vec<f64>,
    // backward scratch
    hbar: Vec<f64>,
    tbar: Vec<f64>,
    zbar: Vec<f64>,
    abar: Vec<f64>,
    tzbar: Vec<f64>,
    tabar: Vec<f64>,
}

impl ForwardTrace {
    pub fn new(arch: &NetworkArch) -> Self {
        let (d, m, n) = (arch.input_dim, arch.width, arch.blocks);
        Self {
            x: vec![0.0; d],
            h: vec![0.0; (n + 1) * m],
            a1: vec![0.0; n * m],
            a2: vec![0.0; n * m],
            value: 0.0,
            rows: 0,
            identity_seed: false,
            seed: vec![0.0; d * d],
            t: vec![0.0; (n + 1) * m * d],
            tz1: vec![0.0; n * m * d],
            ta1: vec![0.0; n * m * d],
            tz2: vec![0.0; n * m * d],
            tangent_out: vec![0.0; d],
            hbar: vec![0.0; m],
            tbar: vec![0.0; m * d],
            zbar: vec![0.0; m],
            abar: vec![0.0; m],
            tzbar: vec![0.0; m * d],
            tabar: vec![0.0; m * d],
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Spatial gradient after [`ResNet::forward_dual`]; after
    /// [`ResNet::forward_directional`] the single directional derivative.
    pub fn gradient(&self) -> &[f64] {
        &self.tangent_out[..self.rows]
    }
}

/// Stateless evaluator for one architecture; parameters are passed per call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResNet {
    arch: NetworkArch,
}

/// Dot product with four interleaved partial sums so the reduction can use
/// vector lanes; the summation order is fixed, so results are reproducible.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Offsets of the four parameter groups of block `i`.
#[derive(Clone, Copy)]
struct BlockLayout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

impl ResNet {
    pub fn new(arch: NetworkArch) -> Result<Self> {
        arch.validate()?;
        Ok(Self { arch })
    }

    pub fn arch(&self) -> &NetworkArch {
        &self.arch
    }

    fn check(&self, params: &[f64], x: &[f64]) -> Result<()> {
        if x.len() != self.arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.arch.input_dim,
                actual: x.len(),
            });
        }
        if params.len() != self.arch.param_count() {
            return Err(Error::ParameterLength {
                expected: self.arch.param_count(),
                actual: params.len(),
            });
        }
        Ok(())
    }

    fn block(&self, i: usize) -> BlockLayout {
        let m = self.arch.width;
        let off = self.arch.block_offset(i);
        BlockLayout {
            w1: off,
            b1: off + m * m,
            w2: off + m * m + m,
            b2: off + 2 * m * m + m,
        }
    }

    /// Plain forward pass.
    pub fn forward(&self, params: &[f64], x: &[f64]) -> Result<f64> {
        self.check(params, x)?;
        let mut trace = ForwardTrace::new(&self.arch);
        self.forward_value(params, x, &mut trace);
        Ok(trace.value)
    }

    /// Forward pass carrying the exact spatial gradient.
    pub fn eval_dual(&self, params: &[f64], x: &[f64]) -> Result<DualPoint> {
        self.check(params, x)?;
        let mut trace = ForwardTrace::new(&self.arch);
        self.forward_dual(params, x, &mut trace);
        Ok(DualPoint {
            value: trace.value,
            tangent: trace.gradient().to_vec(),
        })
    }

    /// Value-only pass recording what [`Self::backward`] needs. Unchecked:
    /// `params` and `x` must match the architecture.
    pub fn forward_value(&self, params: &[f64], x: &[f64], tr: &mut ForwardTrace) {
        let NetworkArch {
            input_dim: d,
            width: m,
            blocks: n,
            activation: act,
        } = self.arch;
        debug_assert_eq!(params.len(), self.arch.param_count());
        debug_assert_eq!(x.len(), d);
        tr.rows = 0;
        tr.x.copy_from_slice(x);

        let w0 = &params[..m * d];
        let b0 = &params[m * d..m * (d + 1)];
        for k in 0..m {
            tr.h[k] = dot(&w0[k * d..(k + 1) * d], x) + b0[k];
        }
        for i in 0..n {
            let b = self.block(i);
            let w1 = &params[b.w1..b.b1];
            let b1 = &params[b.b1..b.w2];
            let w2 = &params[b.w2..b.b2];
            let b2 = &params[b.b2..b.b2 + m];
            let (h_prev, h_rest) = tr.h.split_at_mut((i + 1) * m);
            let h_in = &h_prev[i * m..];
            let h_out = &mut h_rest[..m];
            let a1 = &mut tr.a1[i * m..(i + 1) * m];
            let a2 = &mut tr.a2[i * m..(i + 1) * m];
            for l in 0..m {
                a1[l] = act.apply(dot(&w1[l * m..(l + 1) * m], h_in) + b1[l]);
            }
            for k in 0..m {
                a2[k] = act.apply(dot(&w2[k * m..(k + 1) * m], a1) + b2[k]);
                h_out[k] = a2[k] + h_in[k];
            }
        }
        let off = self.arch.output_offset();
        tr.value = dot(&params[off..off + m], &tr.h[n * m..]) + params[off + m];
    }

    /// Gradient-augmented pass: every hidden state carries its `d × m`
    /// Jacobian with respect to `x`. Unchecked like [`Self::forward_value`].
    pub fn forward_dual(&self, params: &[f64], x: &[f64], tr: &mut ForwardTrace) {
        let d = self.arch.input_dim;
        self.forward_value(params, x, tr);
        tr.seed.fill(0.0);
        for j in 0..d {
            tr.seed[j * d + j] = 1.0;
        }
        self.tangent_pass(params, tr, d, true);
    }

    /// Value and the single directional derivative `∇u·direction`, which
    /// [`ForwardTrace::gradient`] then holds. Unchecked.
    pub fn forward_directional(&self, params: &[f64], x: &[f64], direction: &[f64], tr: &mut ForwardTrace) {
        self.forward_value(params, x, tr);
        self.add_direction(params, direction, tr);
    }

    /// Add one tangent row along `direction` to a trace from
    /// [`Self::forward_value`], replacing any previous tangents.
    pub fn add_direction(&self, params: &[f64], direction: &[f64], tr: &mut ForwardTrace) {
        let d = self.arch.input_dim;
        debug_assert_eq!(direction.len(), d);
        tr.seed[..d].copy_from_slice(direction);
        self.tangent_pass(params, tr, 1, false);
    }

    /// `∇ₓu` by a reverse sweep over a value pass, written into `out`.
    /// Leaves the backward scratch of the trace modified.
    pub fn input_gradient(&self, params: &[f64], tr: &mut ForwardTrace, out: &mut [f64]) {
        let NetworkArch {
            input_dim: d,
            width: m,
            blocks: n,
            activation: act,
        } = self.arch;
        let off = self.arch.output_offset();
        let ForwardTrace {
            a1: a1_all,
            a2: a2_all,
            hbar,
            zbar,
            abar,
            ..
        } = tr;
        hbar.copy_from_slice(&params[off..off + m]);
        for i in (0..n).rev() {
            let b = self.block(i);
            let a1 = &a1_all[i * m..(i + 1) * m];
            let a2 = &a2_all[i * m..(i + 1) * m];
            abar.fill(0.0);
            for k in 0..m {
                let zb = hbar[k] * act.derivative(a2[k]);
                axpy(zb, &params[b.w2 + k * m..b.w2 + (k + 1) * m], abar);
            }
            for l in 0..m {
                zbar[l] = abar[l] * act.derivative(a1[l]);
            }
            for l in 0..m {
                axpy(zbar[l], &params[b.w1 + l * m..b.w1 + (l + 1) * m], hbar);
            }
        }
        out.fill(0.0);
        for k in 0..m {
            axpy(hbar[k], &params[k * d..(k + 1) * d], out);
        }
    }

    /// Propagate `rows` tangent rows seeded by `tr.seed` through the hidden
    /// values already in the trace.
    fn tangent_pass(&self, params: &[f64], tr: &mut ForwardTrace, rows: usize, identity: bool) {
        let NetworkArch {
            input_dim: d,
            width: m,
            blocks: n,
            activation: act,
        } = self.arch;
        tr.rows = rows;
        tr.identity_seed = identity;
        let rm = rows * m;
        let w0 = &params[..m * d];
        for s in 0..rows {
            let dir = &tr.seed[s * d..(s + 1) * d];
            for k in 0..m {
                tr.t[s * m + k] = if identity {
                    w0[k * d + s]
                } else {
                    dot(&w0[k * d..(k + 1) * d], dir)
                };
            }
        }
        for i in 0..n {
            let b = self.block(i);
            let w1 = &params[b.w1..b.b1];
            let w2 = &params[b.w2..b.b2];
            let a1 = &tr.a1[i * m..(i + 1) * m];
            let a2 = &tr.a2[i * m..(i + 1) * m];
            let (t_prev, t_rest) = tr.t.split_at_mut((i + 1) * rm);
            let t_in = &t_prev[i * rm..];
            let t_out = &mut t_rest[..rm];
            let tz1 = &mut tr.tz1[i * rm..(i + 1) * rm];
            let ta1 = &mut tr.ta1[i * rm..(i + 1) * rm];
            let tz2 = &mut tr.tz2[i * rm..(i + 1) * rm];
            for s in 0..rows {
                let ts = &t_in[s * m..(s + 1) * m];
                for l in 0..m {
                    let z = dot(&w1[l * m..(l + 1) * m], ts);
                    tz1[s * m + l] = z;
                    ta1[s * m + l] = act.derivative(a1[l]) * z;
                }
            }
            for s in 0..rows {
                let as_ = &ta1[s * m..(s + 1) * m];
                for k in 0..m {
                    let z = dot(&w2[k * m..(k + 1) * m], as_);
                    tz2[s * m + k] = z;
                    t_out[s * m + k] = act.derivative(a2[k]) * z + t_in[s * m + k];
                }
            }
        }
        let off = self.arch.output_offset();
        let w_out = &params[off..off + m];
        let t_last = &tr.t[n * rm..(n + 1) * rm];
        for s in 0..rows {
            tr.tangent_out[s] = dot(w_out, &t_last[s * m..(s + 1) * m]);
        }
    }

    /// Reverse sweep over a recorded forward pass.
    ///
    /// Accumulates `ū·∂u/∂θ + Σ_s ḡ_s·∂(D_s u)/∂θ` into `grad`, where `D_s u`
    /// is the derivative along the `s`-th seed of the trace (the `s`-th
    /// partial derivative after [`Self::forward_dual`]). `g_bar` must have
    /// one entry per tangent row of the trace.
    pub fn backward(
        &self,
        params: &[f64],
        tr: &mut ForwardTrace,
        u_bar: f64,
        g_bar: Option<&[f64]>,
        grad: &mut [f64],
    ) {
        let NetworkArch {
            input_dim: d,
            width: m,
            blocks: n,
            activation: act,
        } = self.arch;
        let rows = if g_bar.is_some() { tr.rows } else { 0 };
        debug_assert!(g_bar.is_none_or(|g| g.len() == tr.rows && tr.rows > 0));
        debug_assert_eq!(grad.len(), params.len());
        let rm = rows * m;

        let ForwardTrace {
            x,
            h,
            t,
            a1: a1_all,
            a2: a2_all,
            tz1: tz1_all,
            ta1: ta1_all,
            tz2: tz2_all,
            seed,
            identity_seed,
            hbar,
            tbar,
            zbar,
            abar,
            tzbar,
            tabar,
            ..
        } = tr;

        // output layer
        let off = self.arch.output_offset();
        let w_out = &params[off..off + m];
        let h_last = &h[n * m..(n + 1) * m];
        for k in 0..m {
            grad[off + k] += u_bar * h_last[k];
            hbar[k] = u_bar * w_out[k];
        }
        grad[off + m] += u_bar;
        if let Some(gb) = g_bar {
            let t_last = &t[n * rm..(n + 1) * rm];
            for s in 0..rows {
                axpy(gb[s], &t_last[s * m..(s + 1) * m], &mut grad[off..off + m]);
                for k in 0..m {
                    tbar[s * m + k] = gb[s] * w_out[k];
                }
            }
        }

        for i in (0..n).rev() {
            let b = self.block(i);
            let h_in = &h[i * m..(i + 1) * m];
            let a1 = &a1_all[i * m..(i + 1) * m];
            let a2 = &a2_all[i * m..(i + 1) * m];

            // second layer: a2 = σ(z2), h_out = a2 + h_in
            for k in 0..m {
                zbar[k] = hbar[k] * act.derivative(a2[k]);
            }
            let tz2 = &tz2_all[i * rm..(i + 1) * rm];
            for s in 0..rows {
                for k in 0..m {
                    let tb = tbar[s * m + k];
                    zbar[k] += tb * tz2[s * m + k] * act.second_derivative(a2[k]);
                    tzbar[s * m + k] = act.derivative(a2[k]) * tb;
                }
            }
            abar.fill(0.0);
            tabar[..rm].fill(0.0);
            let ta1 = &ta1_all[i * rm..(i + 1) * rm];
            for k in 0..m {
                let zb = zbar[k];
                grad[b.b2 + k] += zb;
                let w2_row = &params[b.w2 + k * m..b.w2 + (k + 1) * m];
                let g_row = &mut grad[b.w2 + k * m..b.w2 + (k + 1) * m];
                axpy(zb, a1, g_row);
                axpy(zb, w2_row, abar);
                for s in 0..rows {
                    let tzb = tzbar[s * m + k];
                    axpy(tzb, &ta1[s * m..(s + 1) * m], g_row);
                    axpy(tzb, w2_row, &mut tabar[s * m..(s + 1) * m]);
                }
            }

            // first layer: a1 = σ(z1), z1 = W1 h_in + b1
            for l in 0..m {
                zbar[l] = abar[l] * act.derivative(a1[l]);
            }
            let tz1 = &tz1_all[i * rm..(i + 1) * rm];
            for s in 0..rows {
                for l in 0..m {
                    let tb = tabar[s * m + l];
                    zbar[l] += tb * tz1[s * m + l] * act.second_derivative(a1[l]);
                    tzbar[s * m + l] = act.derivative(a1[l]) * tb;
                }
            }
            // skip connection: hbar, tbar already hold the identity path
            let t_in = &t[i * rm..(i + 1) * rm];
            for l in 0..m {
                let zb = zbar[l];
                grad[b.b1 + l] += zb;
                let w1_row = &params[b.w1 + l * m..b.w1 + (l + 1) * m];
                let g_row = &mut grad[b.w1 + l * m..b.w1 + (l + 1) * m];
                axpy(zb, h_in, g_row);
                axpy(zb, w1_row, hbar);
                for s in 0..rows {
                    let tzb = tzbar[s * m + l];
                    axpy(tzb, &t_in[s * m..(s + 1) * m], g_row);
                    axpy(tzb, w1_row, &mut tbar[s * m..(s + 1) * m]);
                }
            }
        }

        // input layer: h0 = W0 x + b0, T0 = W0 S
        for k in 0..m {
            let hb = hbar[k];
            let g_row = &mut grad[k * d..(k + 1) * d];
            axpy(hb, x, g_row);
            if *identity_seed {
                for s in 0..rows {
                    g_row[s] += tbar[s * m + k];
                }
            } else {
                for s in 0..rows {
                    axpy(tbar[s * m + k], &seed[s * d..(s + 1) * d], g_row);
                }
            }
            grad[m * d + k] += hb;
        }
    }
}

/// One ansatz function: architecture plus its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub arch: NetworkArch,
    pub params: ParameterVector,
}

impl Network {
    pub fn new(arch: NetworkArch, params: ParameterVector) -> Result<Self> {
        arch.validate()?;
        if params.len() != arch.param_count() {
            return Err(Error::ParameterLength {
                expected: arch.param_count(),
                actual: params.len(),
            });
        }
        Ok(Self { arch, params })
    }

    pub fn xavier(arch: NetworkArch, seed: u64) -> Result<Self> {
        arch.validate()?;
        Ok(Self {
            arch,
            params: xavier_init(&arch, seed),
        })
    }

    pub fn resnet(&self) -> ResNet {
        ResNet { arch: self.arch }
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.resnet().forward(self.params.as_slice(), x)
    }

    pub fn eval_dual(&self, x: &[f64]) -> Result<DualPoint> {
        self.resnet().eval_dual(self.params.as_slice(), x)
    }
}

/// The two ansatz functions: `inner` on Ω₁ and `outer` on Ω₂.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkPair {
    pub inner: Network,
    pub outer: Network,
}

impl NetworkPair {
    pub fn new(inner: Network, outer: Network) -> Result<Self> {
        if inner.arch.input_dim != outer.arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: inner.arch.input_dim,
                actual: outer.arch.input_dim,
            });
        }
        Ok(Self { inner, outer })
    }

    /// Both networks Xavier-initialized from distinct streams of `seed`.
    pub fn xavier(arch: NetworkArch, seed: u64) -> Result<Self> {
        Self::new(
            Network::xavier(arch, seed)?,
            Network::xavier(arch, seed ^ 0x9e37_79b9_7f4a_7c15)?,
        )
    }

    pub fn dim(&self) -> usize {
        self.inner.arch.input_dim
    }

    pub fn network(&self, region: Region) -> &Network {
        match region {
            Region::Inside => &self.inner,
            Region::Outside => &self.outer,
        }
    }

    pub fn inner_len(&self) -> usize {
        self.inner.params.len()
    }

    pub fn param_count(&self) -> usize {
        self.inner.params.len() + self.outer.params.len()
    }

    /// Θ = (θ₁, θ₂) concatenated.
    pub fn joint_params(&self) -> Vec<f64> {
        let mut joint = Vec::with_capacity(self.param_count());
        joint.extend_from_slice(self.inner.params.as_slice());
        joint.extend_from_slice(self.outer.params.as_slice());
        joint
    }

    pub fn set_joint_params(&mut self, joint: &[f64]) -> Result<()> {
        if joint.len() != self.param_count() {
            return Err(Error::ParameterLength {
                expected: self.param_count(),
                actual: joint.len(),
            });
        }
        let (a, b) = joint.split_at(self.inner_len());
        self.inner.params.0.copy_from_slice(a);
        self.outer.params.0.copy_from_slice(b);
        Ok(())
    }

    pub fn to_checkpoints(&self, seed: u64, epoch: u64) -> (Checkpoint, Checkpoint) {
        let doc = |net: &Network, region| Checkpoint {
            arch: net.arch,
            region,
            seed,
            epoch,
            params: net.params.0.clone(),
        };
        (
            doc(&self.inner, Region::Inside),
            doc(&self.outer, Region::Outside),
        )
    }

    /// Rebuild a pair, checking region tags, lengths and the problem dimension.
    pub fn from_checkpoints(inner: &Checkpoint, outer: &Checkpoint, dim: usize) -> Result<Self> {
        let inner = inner.to_network(Region::Inside, dim)?;
        let outer = outer.to_network(Region::Outside, dim)?;
        Self::new(inner, outer)
    }
}

/// Serialized form of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub arch: NetworkArch,
    pub region: Region,
    pub seed: u64,
    pub epoch: u64,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("malformed document: {e}")))
    }

    pub fn to_network(&self, region: Region, dim: usize) -> Result<Network> {
        if self.region != region {
            return Err(Error::Checkpoint(format!(
                "expected a {region} checkpoint, found {}",
                self.region
            )));
        }
        if self.arch.input_dim != dim {
            return Err(Error::Checkpoint(format!(
                "checkpoint has input dimension {} but the problem is {dim}-dimensional",
                self.arch.input_dim
            )));
        }
        self.arch.validate()?;
        if self.params.len() != self.arch.param_count() {
            return Err(Error::Checkpoint(format!(
                "parameter array has {} entries, architecture needs {}",
                self.params.len(),
                self.arch.param_count()
            )));
        }
        Network::new(self.arch, ParameterVector(self.params.clone()))
    }
}
