//! Minimal trainable layers: conv, batch norm, linear, pooling, Adam.
//!
//! Parallel work is always fanned out over disjoint output planes and
//! cross-item reductions run in index order, so results are identical
//! whatever the thread count (and identical to the sequential build).

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::par;

/// A dense `[batch, channels, height, width]` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch4 {
    pub data: Vec<f32>,
    pub b: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Batch4 {
    pub fn zeros(b: usize, c: usize, h: usize, w: usize) -> Self {
        Self {
            data: vec![0.0; b * c * h * w],
            b,
            c,
            h,
            w,
        }
    }

    pub fn plane(&self, b: usize, c: usize) -> &[f32] {
        let hw = self.h * self.w;
        let off = (b * self.c + c) * hw;
        &self.data[off..off + hw]
    }

    pub fn plane_len(&self) -> usize {
        self.h * self.w
    }
}

/// Mutable (weights, grads) pair handed to parameter visitors.
pub struct ParamRef<'a> {
    pub w: &'a mut [f32],
    pub g: &'a mut [f32],
}

/// Anything with trainable parameters, visited in a fixed order.
///
/// Buffers are non-gradient state that still belongs to the model
/// snapshot (batch-norm running statistics); they are excluded from
/// optimization but included in exports and hashes.
pub trait Trainable {
    fn visit_params(&mut self, f: &mut dyn FnMut(ParamRef<'_>));
    fn visit_values(&self, f: &mut dyn FnMut(&[f32]));
    fn visit_buffers(&self, _f: &mut dyn FnMut(&[f32])) {}
    fn visit_buffers_mut(&mut self, _f: &mut dyn FnMut(&mut [f32])) {}

    fn zero_grad(&mut self) {
        self.visit_params(&mut |p| p.g.fill(0.0));
    }

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit_values(&mut |w| n += w.len());
        n
    }

    /// FNV-1a over all parameter and buffer bytes in visit order.
    fn param_hash(&self) -> u64 {
        let mut hash = 0xcbf2_9ce4_8422_2325u64;
        let mut eat = |w: &[f32]| {
            for v in w {
                for byte in v.to_le_bytes() {
                    hash ^= byte as u64;
                    hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        };
        self.visit_values(&mut eat);
        self.visit_buffers(&mut eat);
        hash
    }

    /// Flatten all parameters, then all buffers, in visit order.
    fn export_params(&self) -> Vec<f32> {
        let mut out = Vec::new();
        self.visit_values(&mut |w| out.extend_from_slice(w));
        self.visit_buffers(&mut |w| out.extend_from_slice(w));
        out
    }

    /// Load parameters and buffers from a flat buffer (visit order).
    /// Errors on a length mismatch.
    fn import_params(&mut self, flat: &[f32]) -> crate::Result<()> {
        let mut offset = 0;
        let mut bad = false;
        self.visit_params(&mut |p| {
            if offset + p.w.len() > flat.len() {
                bad = true;
                return;
            }
            p.w.copy_from_slice(&flat[offset..offset + p.w.len()]);
            offset += p.w.len();
        });
        if !bad {
            self.visit_buffers_mut(&mut |b| {
                if offset + b.len() > flat.len() {
                    bad = true;
                    return;
                }
                b.copy_from_slice(&flat[offset..offset + b.len()]);
                offset += b.len();
            });
        }
        if bad || offset != flat.len() {
            return Err(crate::Error::Shape(format!(
                "parameter blob has {} values, model expects {offset}",
                flat.len()
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Conv2d

#[derive(Debug, Clone)]
pub struct Conv2d {
    pub in_c: usize,
    pub out_c: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
    pub gw: Vec<f32>,
    pub gb: Vec<f32>,
}

impl Conv2d {
    pub fn new<R: Rng>(in_c: usize, out_c: usize, k: usize, stride: usize, pad: usize, rng: &mut R) -> Self {
        let fan_in = (in_c * k * k) as f64;
        let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("he init");
        let weight = (0..out_c * in_c * k * k)
            .map(|_| normal.sample(rng) as f32)
            .collect();
        Self {
            in_c,
            out_c,
            k,
            stride,
            pad,
            weight,
            bias: vec![0.0; out_c],
            gw: vec![0.0; out_c * in_c * k * k],
            gb: vec![0.0; out_c],
        }
    }

    pub fn out_hw(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.pad - self.k) / self.stride + 1,
            (w + 2 * self.pad - self.k) / self.stride + 1,
        )
    }

    /// Output rows/cols for which the kernel tap (kh or kw) stays in
    /// bounds: the inclusive valid range along one spatial axis.
    #[inline]
    fn valid_range(&self, tap: usize, in_dim: usize, out_dim: usize) -> (usize, usize) {
        let s = self.stride as isize;
        let off = tap as isize - self.pad as isize;
        let lo = if off < 0 { ((-off) + s - 1) / s } else { 0 } as usize;
        let max_in = in_dim as isize - 1 - off;
        if max_in < 0 {
            return (1, 0);
        }
        let hi = (max_in / s) as usize;
        (lo, hi.min(out_dim - 1))
    }

    fn col_rows(&self) -> usize {
        self.in_c * self.k * self.k
    }

    /// Unfold one item into columns: `col[r, p]` with `r` over
    /// (ic, kh, kw) and `p` over output positions. Padding positions
    /// stay zero, so the two gemm passes run over contiguous rows.
    fn im2col(&self, x: &Batch4, bi: usize, oh: usize, ow: usize, col: &mut [f32]) {
        let p_len = oh * ow;
        let s = self.stride;
        let (in_h, in_w) = (x.h, x.w);
        col.fill(0.0);
        for ic in 0..self.in_c {
            let src = x.plane(bi, ic);
            for kh in 0..self.k {
                let (oh_lo, oh_hi) = self.valid_range(kh, in_h, oh);
                if oh_lo > oh_hi {
                    continue;
                }
                for kw in 0..self.k {
                    let (ow_lo, ow_hi) = self.valid_range(kw, in_w, ow);
                    if ow_lo > ow_hi {
                        continue;
                    }
                    let r = (ic * self.k + kh) * self.k + kw;
                    let row = &mut col[r * p_len..(r + 1) * p_len];
                    for oy in oh_lo..=oh_hi {
                        let iy = oy * s + kh - self.pad;
                        let src_base = iy * in_w + (ow_lo * s + kw - self.pad);
                        let dst_base = oy * ow;
                        if s == 1 {
                            let n = ow_hi - ow_lo + 1;
                            row[dst_base + ow_lo..dst_base + ow_lo + n]
                                .copy_from_slice(&src[src_base..src_base + n]);
                        } else {
                            for (j, ox) in (ow_lo..=ow_hi).enumerate() {
                                row[dst_base + ox] = src[src_base + j * s];
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn forward(&self, x: &Batch4) -> Batch4 {
        assert_eq!(x.c, self.in_c, "conv input channels");
        let (oh, ow) = self.out_hw(x.h, x.w);
        let mut out = Batch4::zeros(x.b, self.out_c, oh, ow);
        let p_len = oh * ow;
        let r_len = self.col_rows();
        let item_len = self.out_c * p_len;
        par::for_each_chunk_mut(&mut out.data, item_len, |bi, dst| {
            let mut col = vec![0.0f32; r_len * p_len];
            self.im2col(x, bi, oh, ow, &mut col);
            for oc in 0..self.out_c {
                let row = &mut dst[oc * p_len..(oc + 1) * p_len];
                row.fill(self.bias[oc]);
                let w_row = &self.weight[oc * r_len..(oc + 1) * r_len];
                for (r, &wgt) in w_row.iter().enumerate() {
                    if wgt != 0.0 {
                        axpy(row, wgt, &col[r * p_len..(r + 1) * p_len]);
                    }
                }
            }
        });
        out
    }

    /// Accumulate weight/bias grads and return the input gradient.
    pub fn backward(&mut self, x: &Batch4, gout: &Batch4) -> Batch4 {
        let (oh, ow) = (gout.h, gout.w);
        let p_len = oh * ow;
        let r_len = self.col_rows();
        let s = self.stride;
        let (in_h, in_w) = (x.h, x.w);
        let mut gin = Batch4::zeros(x.b, self.in_c, x.h, x.w);
        let mut col = vec![0.0f32; r_len * p_len];
        let mut dcol = vec![0.0f32; r_len * p_len];

        // Items in order, so grad accumulation is deterministic; the
        // per-item gemms fan out over rows.
        for bi in 0..x.b {
            self.im2col(x, bi, oh, ow, &mut col);
            let g_item = &gout.data[bi * self.out_c * p_len..(bi + 1) * self.out_c * p_len];

            // dW[oc, r] += gout[oc, :] . col[r, :]
            let dw_rows: Vec<(Vec<f32>, f32)> = par::map_index(self.out_c, |oc| {
                let g = &g_item[oc * p_len..(oc + 1) * p_len];
                let mut row = vec![0.0f32; r_len];
                for (r, out) in row.iter_mut().enumerate() {
                    *out = dot(g, &col[r * p_len..(r + 1) * p_len]);
                }
                let mut db = 0.0f32;
                for &v in g {
                    db += v;
                }
                (row, db)
            });
            for (oc, (row, db)) in dw_rows.into_iter().enumerate() {
                let base = oc * r_len;
                for (j, v) in row.into_iter().enumerate() {
                    self.gw[base + j] += v;
                }
                self.gb[oc] += db;
            }

            // dcol[r, :] = sum_oc W[oc, r] * gout[oc, :]
            let weight = &self.weight;
            par::for_each_chunk_mut(&mut dcol, p_len, |r, row| {
                row.fill(0.0);
                for oc in 0..self.out_c {
                    let wgt = weight[oc * r_len + r];
                    if wgt != 0.0 {
                        axpy(row, wgt, &g_item[oc * p_len..(oc + 1) * p_len]);
                    }
                }
            });

            // col2im: scatter-add dcol back onto the input grid.
            let dst_item =
                &mut gin.data[bi * self.in_c * in_h * in_w..(bi + 1) * self.in_c * in_h * in_w];
            for ic in 0..self.in_c {
                let dst_plane = &mut dst_item[ic * in_h * in_w..(ic + 1) * in_h * in_w];
                for kh in 0..self.k {
                    let (oh_lo, oh_hi) = self.valid_range(kh, in_h, oh);
                    if oh_lo > oh_hi {
                        continue;
                    }
                    for kw in 0..self.k {
                        let (ow_lo, ow_hi) = self.valid_range(kw, in_w, ow);
                        if ow_lo > ow_hi {
                            continue;
                        }
                        let r = (ic * self.k + kh) * self.k + kw;
                        let row = &dcol[r * p_len..(r + 1) * p_len];
                        for oy in oh_lo..=oh_hi {
                            let iy = oy * s + kh - self.pad;
                            let dst_base = iy * in_w + (ow_lo * s + kw - self.pad);
                            let src_base = oy * ow;
                            if s == 1 {
                                let n = ow_hi - ow_lo + 1;
                                let d = &mut dst_plane[dst_base..dst_base + n];
                                let sr = &row[src_base + ow_lo..src_base + ow_lo + n];
                                for (dv, &sv) in d.iter_mut().zip(sr) {
                                    *dv += sv;
                                }
                            } else {
                                for (j, ox) in (ow_lo..=ow_hi).enumerate() {
                                    dst_plane[dst_base + j * s] += row[src_base + ox];
                                }
                            }
                        }
                    }
                }
            }
        }
        gin
    }
}

/// `acc += a * b`, elementwise over equal-length slices.
#[inline]
fn axpy(acc: &mut [f32], a: f32, b: &[f32]) {
    for (o, &v) in acc.iter_mut().zip(b) {
        *o += a * v;
    }
}

/// Dot product with eight fixed-order accumulators so the loop
/// vectorizes while staying deterministic.
#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let av = &a[i * 8..i * 8 + 8];
        let bv = &b[i * 8..i * 8 + 8];
        for j in 0..8 {
            acc[j] += av[j] * bv[j];
        }
    }
    let mut sum = ((acc[0] + acc[4]) + (acc[2] + acc[6])) + ((acc[1] + acc[5]) + (acc[3] + acc[7]));
    for i in chunks * 8..a.len() {
        sum += a[i] * b[i];
    }
    sum
}

impl Trainable for Conv2d {
    fn visit_params(&mut self, f: &mut dyn FnMut(ParamRef<'_>)) {
        f(ParamRef {
            w: &mut self.weight,
            g: &mut self.gw,
        });
        f(ParamRef {
            w: &mut self.bias,
            g: &mut self.gb,
        });
    }

    fn visit_values(&self, f: &mut dyn FnMut(&[f32])) {
        f(&self.weight);
        f(&self.bias);
    }
}

// ---------------------------------------------------------------------------
// BatchNorm2d

#[derive(Debug, Clone)]
pub struct BatchNorm2d {
    pub c: usize,
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
    pub g_gamma: Vec<f32>,
    pub g_beta: Vec<f32>,
    pub running_mean: Vec<f32>,
    pub running_var: Vec<f32>,
    pub eps: f32,
    pub momentum: f32,
}

/// Saved activations needed by the batch-norm backward pass.
pub struct BnCache {
    xhat: Batch4,
    inv_std: Vec<f32>,
}

impl BatchNorm2d {
    pub fn new(c: usize) -> Self {
        Self {
            c,
            gamma: vec![1.0; c],
            beta: vec![0.0; c],
            g_gamma: vec![0.0; c],
            g_beta: vec![0.0; c],
            running_mean: vec![0.0; c],
            running_var: vec![1.0; c],
            eps: 1e-5,
            momentum: 0.1,
        }
    }

    /// Per-channel (sum, sum of squares) over the batch, reduced in item
    /// order.
    fn batch_moments(&self, x: &Batch4) -> (Vec<f64>, Vec<f64>) {
        let partials: Vec<(f64, f64)> = par::map_index(x.b * x.c, |idx| {
            let p = &x.data[idx * x.plane_len()..(idx + 1) * x.plane_len()];
            let mut s = 0.0f64;
            let mut s2 = 0.0f64;
            for &v in p {
                s += v as f64;
                s2 += (v as f64) * (v as f64);
            }
            (s, s2)
        });
        let mut sum = vec![0.0f64; x.c];
        let mut sum2 = vec![0.0f64; x.c];
        for bi in 0..x.b {
            for c in 0..x.c {
                let (s, s2) = partials[bi * x.c + c];
                sum[c] += s;
                sum2[c] += s2;
            }
        }
        (sum, sum2)
    }

    pub fn forward_train(&mut self, x: &Batch4) -> (Batch4, BnCache) {
        assert_eq!(x.c, self.c);
        let n = (x.b * x.plane_len()) as f64;
        let (sum, sum2) = self.batch_moments(x);
        let mut mean = vec![0.0f32; self.c];
        let mut inv_std = vec![0.0f32; self.c];
        for c in 0..self.c {
            let m = sum[c] / n;
            let var = (sum2[c] / n - m * m).max(0.0);
            mean[c] = m as f32;
            inv_std[c] = (1.0 / (var + self.eps as f64).sqrt()) as f32;
            self.running_mean[c] =
                (1.0 - self.momentum) * self.running_mean[c] + self.momentum * m as f32;
            self.running_var[c] =
                (1.0 - self.momentum) * self.running_var[c] + self.momentum * var as f32;
        }
        let mut out = Batch4::zeros(x.b, x.c, x.h, x.w);
        let mut xhat = Batch4::zeros(x.b, x.c, x.h, x.w);
        let plane = x.plane_len();
        // Write xhat and out plane by plane; both buffers are disjoint
        // per (item, channel).
        par::for_each_chunk_mut(&mut xhat.data, plane, |idx, dst| {
            let c = idx % x.c;
            let src = &x.data[idx * plane..(idx + 1) * plane];
            for (d, &v) in dst.iter_mut().zip(src) {
                *d = (v - mean[c]) * inv_std[c];
            }
        });
        par::for_each_chunk_mut(&mut out.data, plane, |idx, dst| {
            let c = idx % x.c;
            let src = &xhat.data[idx * plane..(idx + 1) * plane];
            for (d, &v) in dst.iter_mut().zip(src) {
                *d = self.gamma[c] * v + self.beta[c];
            }
        });
        (out, BnCache { xhat, inv_std })
    }

    pub fn forward_eval(&self, x: &Batch4) -> Batch4 {
        assert_eq!(x.c, self.c);
        let mut out = Batch4::zeros(x.b, x.c, x.h, x.w);
        let plane = x.plane_len();
        let scale: Vec<f32> = (0..self.c)
            .map(|c| self.gamma[c] / (self.running_var[c] + self.eps).sqrt())
            .collect();
        par::for_each_chunk_mut(&mut out.data, plane, |idx, dst| {
            let c = idx % x.c;
            let src = &x.data[idx * plane..(idx + 1) * plane];
            for (d, &v) in dst.iter_mut().zip(src) {
                *d = scale[c] * (v - self.running_mean[c]) + self.beta[c];
            }
        });
        out
    }

    pub fn backward(&mut self, cache: &BnCache, gout: &Batch4) -> Batch4 {
        let x = &cache.xhat;
        let n = (x.b * x.plane_len()) as f64;
        // Per-channel sums of gout and gout*xhat, reduced in item order.
        let partials: Vec<(f64, f64)> = par::map_index(x.b * x.c, |idx| {
            let g = &gout.data[idx * x.plane_len()..(idx + 1) * x.plane_len()];
            let xh = &x.data[idx * x.plane_len()..(idx + 1) * x.plane_len()];
            let mut sg = 0.0f64;
            let mut sgx = 0.0f64;
            for (a, b) in g.iter().zip(xh) {
                sg += *a as f64;
                sgx += (*a as f64) * (*b as f64);
            }
            (sg, sgx)
        });
        let mut sum_g = vec![0.0f64; x.c];
        let mut sum_gx = vec![0.0f64; x.c];
        for bi in 0..x.b {
            for c in 0..x.c {
                let (sg, sgx) = partials[bi * x.c + c];
                sum_g[c] += sg;
                sum_gx[c] += sgx;
            }
        }
        for c in 0..x.c {
            self.g_beta[c] += sum_g[c] as f32;
            self.g_gamma[c] += sum_gx[c] as f32;
        }
        let mut gin = Batch4::zeros(x.b, x.c, x.h, x.w);
        let plane = x.plane_len();
        par::for_each_chunk_mut(&mut gin.data, plane, |idx, dst| {
            let c = idx % x.c;
            let g = &gout.data[idx * plane..(idx + 1) * plane];
            let xh = &x.data[idx * plane..(idx + 1) * plane];
            let k = self.gamma[c] * cache.inv_std[c];
            let mean_g = (sum_g[c] / n) as f32;
            let mean_gx = (sum_gx[c] / n) as f32;
            for ((d, &gv), &xv) in dst.iter_mut().zip(g).zip(xh) {
                *d = k * (gv - mean_g - xv * mean_gx);
            }
        });
        gin
    }
}

impl Trainable for BatchNorm2d {
    fn visit_params(&mut self, f: &mut dyn FnMut(ParamRef<'_>)) {
        f(ParamRef {
            w: &mut self.gamma,
            g: &mut self.g_gamma,
        });
        f(ParamRef {
            w: &mut self.beta,
            g: &mut self.g_beta,
        });
    }

    fn visit_values(&self, f: &mut dyn FnMut(&[f32])) {
        f(&self.gamma);
        f(&self.beta);
    }

    fn visit_buffers(&self, f: &mut dyn FnMut(&[f32])) {
        f(&self.running_mean);
        f(&self.running_var);
    }

    fn visit_buffers_mut(&mut self, f: &mut dyn FnMut(&mut [f32])) {
        f(&mut self.running_mean);
        f(&mut self.running_var);
    }
}

// ---------------------------------------------------------------------------
// Activation / pooling / linear

pub fn relu_forward(x: &mut Batch4) {
    for v in &mut x.data {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Gradient of relu given its *output* (zero where the output is zero).
pub fn relu_backward(out: &Batch4, gout: &mut Batch4) {
    for (g, &o) in gout.data.iter_mut().zip(&out.data) {
        if o <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Mean over height and width: `[b, c, h, w] -> [b, c]`.
pub fn global_avg_pool(x: &Batch4) -> Vec<f32> {
    let plane = x.plane_len();
    let inv = 1.0f64 / plane as f64;
    par::map_index(x.b * x.c, |idx| {
        let p = &x.data[idx * plane..(idx + 1) * plane];
        (p.iter().map(|&v| v as f64).sum::<f64>() * inv) as f32
    })
}

pub fn global_avg_pool_backward(demb: &[f32], b: usize, c: usize, h: usize, w: usize) -> Batch4 {
    let mut gin = Batch4::zeros(b, c, h, w);
    let plane = h * w;
    let inv = 1.0 / plane as f32;
    par::for_each_chunk_mut(&mut gin.data, plane, |idx, dst| {
        let g = demb[idx] * inv;
        dst.fill(g);
    });
    gin
}

#[derive(Debug, Clone)]
pub struct Linear {
    pub in_f: usize,
    pub out_f: usize,
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
    pub gw: Vec<f32>,
    pub gb: Vec<f32>,
}

impl Linear {
    pub fn new<R: Rng>(in_f: usize, out_f: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (in_f as f64).sqrt();
        let weight = (0..out_f * in_f)
            .map(|_| (rng.gen_range(-bound..bound)) as f32)
            .collect();
        Self {
            in_f,
            out_f,
            weight,
            bias: vec![0.0; out_f],
            gw: vec![0.0; out_f * in_f],
            gb: vec![0.0; out_f],
        }
    }

    /// `[b, in_f] -> [b, out_f]`
    pub fn forward(&self, x: &[f32], b: usize) -> Vec<f32> {
        assert_eq!(x.len(), b * self.in_f);
        let mut out = vec![0.0f32; b * self.out_f];
        par::for_each_chunk_mut(&mut out, self.out_f, |bi, dst| {
            let xi = &x[bi * self.in_f..(bi + 1) * self.in_f];
            for (o, d) in dst.iter_mut().enumerate() {
                let row = &self.weight[o * self.in_f..(o + 1) * self.in_f];
                let mut acc = self.bias[o];
                for (w, v) in row.iter().zip(xi) {
                    acc += w * v;
                }
                *d = acc;
            }
        });
        out
    }

    pub fn backward(&mut self, x: &[f32], b: usize, gout: &[f32]) -> Vec<f32> {
        // dW, db: per output unit, items in order.
        let grads: Vec<(Vec<f32>, f32)> = par::map_index(self.out_f, |o| {
            let mut dw = vec![0.0f32; self.in_f];
            let mut db = 0.0f32;
            for bi in 0..b {
                let g = gout[bi * self.out_f + o];
                db += g;
                let xi = &x[bi * self.in_f..(bi + 1) * self.in_f];
                for (d, v) in dw.iter_mut().zip(xi) {
                    *d += g * v;
                }
            }
            (dw, db)
        });
        for (o, (dw, db)) in grads.into_iter().enumerate() {
            for (j, v) in dw.into_iter().enumerate() {
                self.gw[o * self.in_f + j] += v;
            }
            self.gb[o] += db;
        }
        let mut gin = vec![0.0f32; b * self.in_f];
        par::for_each_chunk_mut(&mut gin, self.in_f, |bi, dst| {
            for o in 0..self.out_f {
                let g = gout[bi * self.out_f + o];
                let row = &self.weight[o * self.in_f..(o + 1) * self.in_f];
                for (d, w) in dst.iter_mut().zip(row) {
                    *d += g * w;
                }
            }
        });
        gin
    }
}

impl Trainable for Linear {
    fn visit_params(&mut self, f: &mut dyn FnMut(ParamRef<'_>)) {
        f(ParamRef {
            w: &mut self.weight,
            g: &mut self.gw,
        });
        f(ParamRef {
            w: &mut self.bias,
            g: &mut self.gb,
        });
    }

    fn visit_values(&self, f: &mut dyn FnMut(&[f32])) {
        f(&self.weight);
        f(&self.bias);
    }
}

// ---------------------------------------------------------------------------
// Adam / AdamW

#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
    t: u64,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    pub weight_decay: f32,
    /// Decoupled decay (AdamW) instead of L2-through-the-gradient.
    pub decoupled: bool,
}

impl Adam {
    pub fn new(model: &mut dyn Trainable, weight_decay: f32, decoupled: bool) -> Self {
        let mut sizes = Vec::new();
        model.visit_params(&mut |p| sizes.push(p.w.len()));
        Self {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            decoupled,
        }
    }

    pub fn step(&mut self, model: &mut dyn Trainable, lr: f32) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut slot = 0;
        let (m, v) = (&mut self.m, &mut self.v);
        let (b1, b2, eps, wd, decoupled) =
            (self.beta1, self.beta2, self.eps, self.weight_decay, self.decoupled);
        model.visit_params(&mut |p| {
            let ms = &mut m[slot];
            let vs = &mut v[slot];
            debug_assert_eq!(ms.len(), p.w.len(), "optimizer slot size");
            for j in 0..p.w.len() {
                let mut g = p.g[j];
                if !decoupled && wd > 0.0 {
                    g += wd * p.w[j];
                }
                ms[j] = b1 * ms[j] + (1.0 - b1) * g;
                vs[j] = b2 * vs[j] + (1.0 - b2) * g * g;
                let mhat = ms[j] / bc1;
                let vhat = vs[j] / bc2;
                if decoupled && wd > 0.0 {
                    p.w[j] -= lr * wd * p.w[j];
                }
                p.w[j] -= lr * mhat / (vhat.sqrt() + eps);
            }
            slot += 1;
        });
    }
}
