use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::scalar::{matmul, Scalar};
use crate::featurize::FEATURE_DIM;

pub const LEAKY_SLOPE: f64 = 0.2;

/// Shape hyper-parameters of a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GatDims {
    pub input: usize,
    pub hidden: usize,
    pub heads: usize,
    pub layers: usize,
}

impl GatDims {
    pub const STANDARD: GatDims = GatDims { input: FEATURE_DIM, hidden: 256, heads: 4, layers: 3 };

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads
    }

    /// `(name, shape)` of every tensor, in storage order.
    pub fn tensor_specs(&self) -> Vec<(String, Vec<usize>)> {
        let mut specs = vec![
            ("input.weight".into(), vec![self.input, self.hidden]),
            ("input.bias".into(), vec![self.hidden]),
        ];
        for l in 0..self.layers {
            specs.push((format!("layer{l}.weight"), vec![self.hidden, self.hidden]));
            specs.push((format!("layer{l}.attention"), vec![self.heads, 2 * self.head_dim()]));
        }
        specs.push(("output.weight".into(), vec![self.hidden]));
        specs.push(("output.bias".into(), vec![1]));
        specs
    }

    pub fn param_count(&self) -> usize {
        self.tensor_specs().iter().map(|(_, s)| s.iter().product::<usize>()).sum()
    }
}

impl Default for GatDims {
    fn default() -> Self {
        GatDims::STANDARD
    }
}

/// Neighbourhoods in compressed-row form. The attention of node `i` ranges
/// over `neighbors[offsets[i]..offsets[i + 1]]`.
#[derive(Clone, Copy, Debug)]
pub struct Adjacency<'a> {
    pub offsets: &'a [usize],
    pub neighbors: &'a [u32],
}

impl Adjacency<'_> {
    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.len()
    }
}

/// Graph attention network parameters, stored as a flat list of named
/// row-major tensors in the order of [`GatDims::tensor_specs`].
#[derive(Clone, Debug, PartialEq)]
pub struct GatModel<T> {
    pub dims: GatDims,
    pub tensors: Vec<Vec<T>>,
}

const W_IN: usize = 0;
const B_IN: usize = 1;

fn w_layer(l: usize) -> usize {
    2 + 2 * l
}

fn a_layer(l: usize) -> usize {
    3 + 2 * l
}

fn leaky<T: Scalar>(x: T) -> T {
    if x > T::ZERO {
        x
    } else {
        x * T::from_f64(LEAKY_SLOPE)
    }
}

fn elu<T: Scalar>(x: T) -> T {
    if x > T::ZERO {
        x
    } else {
        x.exp_m1()
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::ZERO; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += *x * *y;
    }
    s
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// Intermediate values of one attention layer.
#[derive(Clone, Debug)]
pub struct LayerCache<T> {
    pub z: Vec<T>,
    /// Attention logits before the leaky rectifier, `edges x heads`.
    pub pre: Vec<T>,
    /// Normalized attention weights, `edges x heads`.
    pub alpha: Vec<T>,
    /// Concatenated head outputs before the ELU.
    pub u: Vec<T>,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    /// `states[0]` is the input projection; `states[l + 1]` the output of layer `l`.
    pub states: Vec<Vec<T>>,
    pub layers: Vec<LayerCache<T>>,
    /// Output logit of every node.
    pub logits: Vec<T>,
}

impl<T: Scalar> GatModel<T> {
    pub fn zeros(dims: GatDims) -> Self {
        let tensors = dims
            .tensor_specs()
            .iter()
            .map(|(_, s)| vec![T::ZERO; s.iter().product()])
            .collect();
        GatModel { dims, tensors }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(dims: GatDims, rng: &mut R) -> Self {
        assert!(dims.hidden.is_multiple_of(dims.heads), "hidden width must split evenly across heads");
        let mut m = Self::zeros(dims);
        let mut glorot = |t: &mut Vec<T>, fan_in: usize, fan_out: usize| {
            let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            for x in t.iter_mut() {
                *x = T::from_f64(rng.random_range(-limit..limit));
            }
        };
        glorot(&mut m.tensors[W_IN], dims.input, dims.hidden);
        for l in 0..dims.layers {
            glorot(&mut m.tensors[w_layer(l)], dims.hidden, dims.hidden);
            glorot(&mut m.tensors[a_layer(l)], 2 * dims.head_dim(), 1);
        }
        let out = m.tensors.len() - 2;
        glorot(&mut m.tensors[out], dims.hidden, 1);
        m
    }

    pub fn names(&self) -> Vec<String> {
        self.dims.tensor_specs().into_iter().map(|(n, _)| n).collect()
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(Vec::len).sum()
    }

    pub fn cast<U: Scalar>(&self) -> GatModel<U> {
        GatModel {
            dims: self.dims,
            tensors: self
                .tensors
                .iter()
                .map(|t| t.iter().map(|x| U::from_f64(x.to_f64())).collect())
                .collect(),
        }
    }

    fn output_weight(&self) -> &[T] {
        &self.tensors[self.tensors.len() - 2]
    }

    fn output_bias(&self) -> T {
        self.tensors[self.tensors.len() - 1][0]
    }

    /// Runs the network on row-major `n x input` features.
    pub fn forward(&self, x: &[T], adj: Adjacency<'_>) -> ForwardCache<T> {
        let d = self.dims;
        let n = adj.n_nodes();
        assert_eq!(x.len(), n * d.input);
        let mut h0 = vec![T::ZERO; n * d.hidden];
        for row in h0.chunks_exact_mut(d.hidden) {
            row.copy_from_slice(&self.tensors[B_IN]);
        }
        matmul(x, false, &self.tensors[W_IN], false, &mut h0, n, d.input, d.hidden, true);
        let mut states = vec![h0];
        let mut layers = Vec::with_capacity(d.layers);
        for l in 0..d.layers {
            let (cache, h) = self.layer_forward(l, &states[l], adj);
            layers.push(cache);
            states.push(h);
        }
        let h = &states[d.layers];
        let (w, b) = (self.output_weight(), self.output_bias());
        let logits = h.chunks_exact(d.hidden).map(|r| dot(r, w) + b).collect();
        ForwardCache { states, layers, logits }
    }

    /// Output logits only.
    pub fn logits(&self, x: &[T], adj: Adjacency<'_>) -> Vec<T> {
        self.forward(x, adj).logits
    }

    fn layer_forward(&self, l: usize, h: &[T], adj: Adjacency<'_>) -> (LayerCache<T>, Vec<T>) {
        let d = self.dims;
        let (n, e, heads, f) = (adj.n_nodes(), adj.n_edges(), d.heads, d.head_dim());
        let w = &self.tensors[w_layer(l)];
        let a = &self.tensors[a_layer(l)];
        let mut z = vec![T::ZERO; n * d.hidden];
        matmul(h, false, w, false, &mut z, n, d.hidden, d.hidden, false);

        let mut s_dst = vec![T::ZERO; n * heads];
        let mut s_src = vec![T::ZERO; n * heads];
        for i in 0..n {
            for k in 0..heads {
                let zi = &z[i * d.hidden + k * f..i * d.hidden + (k + 1) * f];
                s_dst[i * heads + k] = dot(&a[k * 2 * f..k * 2 * f + f], zi);
                s_src[i * heads + k] = dot(&a[k * 2 * f + f..(k + 1) * 2 * f], zi);
            }
        }

        let mut pre = vec![T::ZERO; e * heads];
        let mut alpha = vec![T::ZERO; e * heads];
        let mut u = vec![T::ZERO; n * d.hidden];
        for i in 0..n {
            let edges = adj.offsets[i]..adj.offsets[i + 1];
            for k in 0..heads {
                let mut mx = T::ZERO;
                let mut first = true;
                for ei in edges.clone() {
                    let j = adj.neighbors[ei] as usize;
                    let p = s_dst[i * heads + k] + s_src[j * heads + k];
                    pre[ei * heads + k] = p;
                    let lr = leaky(p);
                    if first || lr > mx {
                        mx = lr;
                        first = false;
                    }
                }
                let mut sum = T::ZERO;
                for ei in edges.clone() {
                    let v = (leaky(pre[ei * heads + k]) - mx).exp();
                    alpha[ei * heads + k] = v;
                    sum += v;
                }
                let out = &mut u[i * d.hidden + k * f..i * d.hidden + (k + 1) * f];
                for ei in edges.clone() {
                    let j = adj.neighbors[ei] as usize;
                    let al = alpha[ei * heads + k] / sum;
                    alpha[ei * heads + k] = al;
                    axpy(al, &z[j * d.hidden + k * f..j * d.hidden + (k + 1) * f], out);
                }
            }
        }
        let h_out = u.iter().map(|&v| elu(v)).collect();
        (LayerCache { z, pre, alpha, u }, h_out)
    }

    /// Accumulates into `grads` the gradient of `sum_i dlogits[i] * logit_i`.
    pub fn backward(&self, x: &[T], adj: Adjacency<'_>, cache: &ForwardCache<T>, dlogits: &[T], grads: &mut GatModel<T>) {
        let d = self.dims;
        let n = adj.n_nodes();
        assert_eq!(dlogits.len(), n);
        let n_t = self.tensors.len();
        let w_out = self.output_weight();
        let h_last = &cache.states[d.layers];
        let mut dh = vec![T::ZERO; n * d.hidden];
        for (i, &g) in dlogits.iter().enumerate() {
            if g == T::ZERO {
                continue;
            }
            axpy(g, w_out, &mut dh[i * d.hidden..(i + 1) * d.hidden]);
            axpy(g, &h_last[i * d.hidden..(i + 1) * d.hidden], &mut grads.tensors[n_t - 2]);
            grads.tensors[n_t - 1][0] += g;
        }
        for l in (0..d.layers).rev() {
            dh = self.layer_backward(l, &cache.states[l], &cache.states[l + 1], &cache.layers[l], adj, &dh, grads);
        }
        matmul(x, true, &dh, false, &mut grads.tensors[W_IN], d.input, n, d.hidden, true);
        let db = &mut grads.tensors[B_IN];
        for row in dh.chunks_exact(d.hidden) {
            for (g, v) in db.iter_mut().zip(row) {
                *g += *v;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn layer_backward(
        &self,
        l: usize,
        h_in: &[T],
        h_out: &[T],
        c: &LayerCache<T>,
        adj: Adjacency<'_>,
        dh_out: &[T],
        grads: &mut GatModel<T>,
    ) -> Vec<T> {
        let d = self.dims;
        let (n, e, heads, f) = (adj.n_nodes(), adj.n_edges(), d.heads, d.head_dim());
        let a = &self.tensors[a_layer(l)];
        let slope = T::from_f64(LEAKY_SLOPE);

        // below zero the ELU derivative is exp(u) = elu(u) + 1
        let du: Vec<T> = c
            .u
            .iter()
            .zip(h_out)
            .zip(dh_out)
            .map(|((&u, &h), &g)| if u > T::ZERO { g } else { g * (h + T::ONE) })
            .collect();

        let mut dz = vec![T::ZERO; n * d.hidden];
        let mut dalpha = vec![T::ZERO; e * heads];
        let mut ds_dst = vec![T::ZERO; n * heads];
        let mut ds_src = vec![T::ZERO; n * heads];
        for i in 0..n {
            let edges = adj.offsets[i]..adj.offsets[i + 1];
            for k in 0..heads {
                let dui = &du[i * d.hidden + k * f..i * d.hidden + (k + 1) * f];
                let mut weighted = T::ZERO;
                for ei in edges.clone() {
                    let j = adj.neighbors[ei] as usize;
                    let span = j * d.hidden + k * f..j * d.hidden + (k + 1) * f;
                    let al = c.alpha[ei * heads + k];
                    let g = dot(dui, &c.z[span.clone()]);
                    dalpha[ei * heads + k] = g;
                    weighted += al * g;
                    axpy(al, dui, &mut dz[span]);
                }
                for ei in edges.clone() {
                    let j = adj.neighbors[ei] as usize;
                    let al = c.alpha[ei * heads + k];
                    let de = al * (dalpha[ei * heads + k] - weighted);
                    let dp = if c.pre[ei * heads + k] > T::ZERO { de } else { de * slope };
                    ds_dst[i * heads + k] += dp;
                    ds_src[j * heads + k] += dp;
                }
            }
        }

        let da = &mut grads.tensors[a_layer(l)];
        for i in 0..n {
            for k in 0..heads {
                let span = i * d.hidden + k * f..i * d.hidden + (k + 1) * f;
                let (gd, gs) = (ds_dst[i * heads + k], ds_src[i * heads + k]);
                axpy(gd, &c.z[span.clone()], &mut da[k * 2 * f..k * 2 * f + f]);
                axpy(gs, &c.z[span.clone()], &mut da[k * 2 * f + f..(k + 1) * 2 * f]);
                let dzi = &mut dz[span];
                axpy(gd, &a[k * 2 * f..k * 2 * f + f], dzi);
                axpy(gs, &a[k * 2 * f + f..(k + 1) * 2 * f], dzi);
            }
        }

        matmul(h_in, true, &dz, false, &mut grads.tensors[w_layer(l)], d.hidden, n, d.hidden, true);
        let mut dh_in = vec![T::ZERO; n * d.hidden];
        matmul(&dz, false, &self.tensors[w_layer(l)], true, &mut dh_in, n, d.hidden, d.hidden, false);
        dh_in
    }

    /// Attention weights of layer `l` from a cached forward pass, `edges x heads`.
    pub fn attention<'c>(&self, cache: &'c ForwardCache<T>, l: usize) -> &'c [T] {
        &cache.layers[l].alpha
    }
}

/// Numerically stable binary cross-entropy of a logit against a 0/1 target.
pub fn bce_with_logit(z: f64, target: f64) -> f64 {
    let relu = if z > 0.0 { z } else { 0.0 };
    relu - z * target + libm::log1p(libm::exp(-libm::fabs(z)))
}

/// Logistic function, clamped into the open unit interval.
pub fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}
