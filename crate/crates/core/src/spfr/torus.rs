//! Locality sensitive hash for grids embedded in the discrete torus.
//!
//! The grid `[0..s]^n` sits inside the torus `[0..2s]^n` with period
//! `m = 2s + 1`. Observations are `Z = round(X + U)` reduced mod `m`, with `U`
//! uniform on the `l_p` ball of radius `w`, so every kernel is a translation
//! of one weight vector over offsets. The predictive law at a level is the
//! circular convolution of that vector with the posterior.
//!
//! Kernel weights are the fractions of the ball falling into each unit cell
//! `round^{-1}(z)`. The last axis is integrated exactly and the other axes
//! by a midpoint rule with `resolution` samples per unit length. Any
//! consistent stochastic kernel yields a coupling with exact marginals, so
//! quadrature error only affects the distance guarantee.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::dist::DiscreteDistribution;
use crate::error::{invalid, Error, Result};
use crate::seed::{RaceSource, SeedContext};
use crate::space::{CostSpace, SpaceKind};

use super::schedule::{schedule_theta, ScaleSchedule};

/// Default quadrature samples per unit length on each sampled axis.
pub const DEFAULT_RESOLUTION: usize = 8;
/// Cap on the quadrature samples per kernel.
pub const MAX_KERNEL_SAMPLES: usize = 4096;
/// Tori with more cells than this use FFT convolution.
pub const FFT_THRESHOLD: usize = 4096;
/// Relative level below which FFT predictive weights are treated as zero.
const FFT_ZERO: f64 = 1e-13;

/// Translation-invariant torus kernel: `weights[o]` is the probability that
/// the observation equals the source shifted by offset `o` (row-major
/// residues mod `m`).
#[derive(Debug, Clone, PartialEq)]
pub struct TorusKernel {
    n: usize,
    m: usize,
    weights: Vec<f64>,
    nonzero: Vec<usize>,
    nonzero_coords: Vec<usize>,
    max_weight: f64,
}

impl TorusKernel {
    fn from_weights(n: usize, m: usize, weights: Vec<f64>) -> Self {
        let nonzero: Vec<usize> = (0..weights.len()).filter(|&o| weights[o] > 0.0).collect();
        let mut nonzero_coords = vec![0; nonzero.len() * n];
        for (k, &o) in nonzero.iter().enumerate() {
            decode_into(o, m, &mut nonzero_coords[k * n..(k + 1) * n]);
        }
        let max_weight = weights.iter().fold(0.0f64, |a, &b| a.max(b));
        Self {
            n,
            m,
            weights,
            nonzero,
            nonzero_coords,
            max_weight,
        }
    }

    fn delta(n: usize, m: usize) -> Self {
        let mut w = vec![0.0; m.pow(n as u32)];
        w[0] = 1.0;
        Self::from_weights(n, m, w)
    }

    /// Weights over offsets.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of a signed offset vector.
    pub fn offset_weight(&self, offset: &[i64]) -> f64 {
        let m = self.m as i64;
        let idx = offset
            .iter()
            .fold(0usize, |acc, &o| acc * self.m + o.rem_euclid(m) as usize);
        self.weights[idx]
    }

    /// Whether the kernel is the identity.
    pub fn is_identity(&self) -> bool {
        self.nonzero == [0]
    }

    /// Dense kernel `K(x, y) = weights[y - x]` over all torus cells.
    pub fn to_dense(&self) -> super::BallKernel {
        let len = self.weights.len();
        let mut dense = vec![0.0; len * len];
        let (mut cx, mut cy) = (vec![0; self.n], vec![0; self.n]);
        for x in 0..len {
            decode_into(x, self.m, &mut cx);
            for y in 0..len {
                decode_into(y, self.m, &mut cy);
                dense[x * len + y] = self.weights[diff_index(&cy, &cx, self.m)];
            }
        }
        super::BallKernel::from_rows(len, dense).expect("kernel rows are stochastic")
    }
}

fn decode_into(mut i: usize, m: usize, out: &mut [usize]) {
    for c in out.iter_mut().rev() {
        *c = i % m;
        i /= m;
    }
}

/// Index of `a - b` mod `m`.
#[inline]
fn diff_index(a: &[usize], b: &[usize], m: usize) -> usize {
    a.iter()
        .zip(b)
        .fold(0, |acc, (&x, &y)| acc * m + if x >= y { x - y } else { x + m - y })
}

/// Kernel of `space` at radius `w` with `resolution` samples per unit length.
pub fn torus_kernel(space: &CostSpace, w: f64, resolution: usize) -> Result<TorusKernel> {
    let g = torus_params(space)?;
    if !(w > 0.0) || !w.is_finite() {
        return Err(invalid("w", format!("radius must be positive and finite, got {w}")));
    }
    if resolution == 0 {
        return Err(invalid("resolution", "must be at least 1"));
    }
    Ok(kernel(g.n, 2 * g.s + 1, g.p, w, resolution))
}

fn torus_params(space: &CostSpace) -> Result<crate::space::GridParams> {
    match (space.kind(), space.grid_params()) {
        (SpaceKind::LpTorus, Some(g)) => Ok(g),
        _ => Err(Error::UnsupportedSpace {
            op: "torus hash",
            kind: space.kind().name(),
        }),
    }
}

/// `x.floor()` for values well inside the `i64` range. Baseline x86-64 has
/// no rounding instruction, and the library call dominates kernel
/// construction.
#[inline]
fn floor(x: f64) -> f64 {
    let t = x as i64 as f64;
    if t > x {
        t - 1.0
    } else {
        t
    }
}

/// Per-row accumulator for the exactly integrated last axis.
struct LastAxis {
    m: usize,
    direct: Vec<f64>,
    diff: Vec<f64>,
    base: Vec<f64>,
}

impl LastAxis {
    fn new(rows: usize, m: usize) -> Self {
        Self {
            m,
            direct: vec![0.0; rows * m],
            diff: vec![0.0; rows * (m + 1)],
            base: vec![0.0; rows],
        }
    }

    /// Adds `weight` times the cell overlaps of `[-h, h]` to `row`.
    ///
    /// Cells are unit intervals centred on the integers, so `[-h, h]` covers
    /// the `2K + 1` cells `-K..=K` with `K = floor(h - 1/2)` and a fraction
    /// `h - K - 1/2` of the cells `-(K + 1)` and `K + 1`.
    fn add_interval(&mut self, row: usize, h: f64, weight: f64) {
        let m = self.m;
        let direct = &mut self.direct[row * m..(row + 1) * m];
        if h < 0.5 {
            direct[0] += weight * 2.0 * h;
            return;
        }
        // `h - 0.5 >= 0`, so truncation is the floor.
        let k = (h - 0.5) as usize;
        let frac = h - 0.5 - k as f64;
        if frac > 0.0 {
            let edge = (k + 1) % m;
            direct[edge] += weight * frac;
            direct[(m - edge) % m] += weight * frac;
        }
        let full = 2 * k + 1;
        let periods = full / m;
        let rem = full - periods * m;
        self.base[row] += weight * periods as f64;
        if rem == 0 {
            return;
        }
        // The leftover run starts at residue `-K mod m`.
        let diff = &mut self.diff[row * (m + 1)..(row + 1) * (m + 1)];
        let lo = (m - k % m) % m;
        let hi = lo + rem;
        diff[lo] += weight;
        if hi <= m {
            diff[hi] -= weight;
        } else {
            diff[m] -= weight;
            diff[0] += weight;
            diff[hi - m] -= weight;
        }
    }

    fn finish(self) -> Vec<f64> {
        let m = self.m;
        let mut out = self.direct;
        for (row, chunk) in out.chunks_mut(m).enumerate() {
            let diff = &self.diff[row * (m + 1)..(row + 1) * (m + 1)];
            let mut run = 0.0;
            for (v, d) in chunk.iter_mut().zip(diff) {
                run += d;
                *v += run + self.base[row];
            }
        }
        out
    }
}

/// `a^p` for finite `p`, `a` for `p = infinity`.
#[inline]
fn pow_p(a: f64, p: f64) -> f64 {
    match p {
        1.0 => a,
        2.0 => a * a,
        _ if p.is_infinite() => a,
        _ => a.powf(p),
    }
}

/// `x^{1/p}` for finite `p`.
#[inline]
fn root_p(x: f64, p: f64) -> f64 {
    match p {
        1.0 => x,
        2.0 => x.sqrt(),
        _ => x.powf(1.0 / p),
    }
}

fn kernel(n: usize, m: usize, p: f64, w: f64, resolution: usize) -> TorusKernel {
    // A ball of radius below 1/2 lies inside the central cell for every p.
    if w < 0.5 {
        return TorusKernel::delta(n, m);
    }
    let r = if n > 4 { resolution.min(4) } else { resolution };
    let dims = n - 1;
    let half = w.ceil() + 0.5;
    let per_axis = if dims == 0 {
        1
    } else {
        let cap = (MAX_KERNEL_SAMPLES as f64).powf(1.0 / dims as f64).floor();
        (r as f64 * 2.0 * half).min(cap).max(1.0) as usize
    };
    let delta = 2.0 * half / per_axis as f64;
    // Per sample: (|u| / w)^p (or |u| / w for p = infinity) and residue of
    // the cell containing u.
    let samples: Vec<(f64, usize)> = (0..per_axis)
        .map(|j| {
            let u = -half + (j as f64 + 0.5) * delta;
            let c = floor(u + 0.5);
            let cell = (c - m as f64 * floor(c / m as f64)) as usize;
            (pow_p(u.abs() / w, p), cell.min(m - 1))
        })
        .collect();
    let rows = m.pow(dims as u32);
    let mut acc = LastAxis::new(rows, m);
    let weight = delta.powi(dims as i32);
    let mut idx = vec![0usize; dims];
    loop {
        let mut row = 0;
        let mut used = 0.0f64;
        for &j in &idx {
            let (a, c) = samples[j];
            row = row * m + c;
            used = if p.is_infinite() { used.max(a) } else { used + a };
        }
        if used <= 1.0 {
            let h = if p.is_infinite() || dims == 0 {
                w
            } else {
                w * root_p(1.0 - used, p)
            };
            acc.add_interval(row, h, weight);
        }
        let mut k = dims;
        loop {
            if k == 0 {
                let mut weights = acc.finish();
                let total: f64 = weights.iter().sum();
                weights.iter_mut().for_each(|v| *v /= total);
                return TorusKernel::from_weights(n, m, weights);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Multi-dimensional FFT over the torus by one-dimensional passes per axis.
#[derive(Clone)]
struct TorusFft {
    n: usize,
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for TorusFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusFft").field("n", &self.n).field("m", &self.m).finish()
    }
}

impl TorusFft {
    fn new(n: usize, m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let fft = if inverse { &self.inverse } else { &self.forward };
        let m = self.m;
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for axis in 0..self.n {
            let stride = m.pow((self.n - 1 - axis) as u32);
            let outer = m.pow(axis as u32);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * m * stride + inner;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = data[base + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride] = *v;
                    }
                }
            }
        }
    }

    fn spectrum(&self, real: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = real.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    /// Circular convolution of `signal` with a kernel given by its spectrum.
    fn convolve(&self, kernel_hat: &[Complex64], signal: &[f64]) -> Vec<f64> {
        let mut data = self.spectrum(signal);
        for (d, k) in data.iter_mut().zip(kernel_hat) {
            *d *= k;
        }
        self.transform(&mut data, true);
        let scale = 1.0 / data.len() as f64;
        data.iter().map(|c| c.re * scale).collect()
    }
}

/// Predictive law `sum_y post[y] k[x - y]` by direct summation.
pub fn predictive_direct(kernel: &TorusKernel, post: &[f64]) -> Vec<f64> {
    let (n, m) = (kernel.n, kernel.m);
    let mut out = vec![0.0; post.len()];
    let mut cy = vec![0; n];
    let mut cx = vec![0; n];
    for (y, &py) in post.iter().enumerate() {
        if py <= 0.0 {
            continue;
        }
        decode_into(y, m, &mut cy);
        for (k, &o) in kernel.nonzero.iter().enumerate() {
            let co = &kernel.nonzero_coords[k * n..(k + 1) * n];
            for d in 0..n {
                cx[d] = (cy[d] + co[d]) % m;
            }
            let x = cx.iter().fold(0, |acc, &c| acc * m + c);
            out[x] += py * kernel.weights[o];
        }
    }
    out
}

/// Predictive law by FFT convolution.
pub fn predictive_fft(kernel: &TorusKernel, post: &[f64]) -> Vec<f64> {
    let fft = TorusFft::new(kernel.n, kernel.m);
    let hat = fft.spectrum(&kernel.weights);
    fft.convolve(&hat, post)
}

/// Posterior of one distribution during a hash.
struct Filter {
    post: Vec<f64>,
    support: Vec<usize>,
    coords: Vec<usize>,
    result: Option<usize>,
}

impl Filter {
    fn new(p: &[f64], n: usize, m: usize) -> Self {
        let support: Vec<usize> = (0..p.len()).filter(|&x| p[x] > 0.0).collect();
        let mut f = Self {
            post: p.to_vec(),
            support,
            coords: Vec::new(),
            result: None,
        };
        f.refresh(n, m);
        f
    }

    fn refresh(&mut self, n: usize, m: usize) {
        self.coords.resize(self.support.len() * n, 0);
        for (k, &y) in self.support.iter().enumerate() {
            decode_into(y, m, &mut self.coords[k * n..(k + 1) * n]);
        }
        if self.support.len() == 1 {
            self.result = Some(self.support[0]);
        }
    }

    /// Exact predictive weight of cell `x` (coordinates `cx`).
    fn predictive_at(&self, kernel: &TorusKernel, cx: &[usize], scratch: &mut [usize]) -> f64 {
        let (n, m) = (kernel.n, kernel.m);
        if kernel.nonzero.len() <= self.support.len() {
            let mut acc = 0.0;
            for (k, &o) in kernel.nonzero.iter().enumerate() {
                let co = &kernel.nonzero_coords[k * n..(k + 1) * n];
                for d in 0..n {
                    scratch[d] = (cx[d] + m - co[d]) % m;
                }
                let y = scratch.iter().fold(0, |acc, &c| acc * m + c);
                acc += kernel.weights[o] * self.post[y];
            }
            acc
        } else {
            self.support
                .iter()
                .enumerate()
                .map(|(k, &y)| {
                    self.post[y] * kernel.weights[diff_index(cx, &self.coords[k * n..(k + 1) * n], m)]
                })
                .sum()
        }
    }

    /// Multiplies the posterior by `k(z - x)` and renormalizes.
    fn update(&mut self, kernel: &TorusKernel, cz: &[usize]) {
        let (n, m) = (kernel.n, kernel.m);
        let mut total = 0.0;
        let mut keep = Vec::with_capacity(self.support.len());
        for (k, &y) in self.support.iter().enumerate() {
            let v = self.post[y] * kernel.weights[diff_index(cz, &self.coords[k * n..(k + 1) * n], m)];
            self.post[y] = v;
            if v > 0.0 {
                total += v;
                keep.push(y);
            }
        }
        for &y in &keep {
            self.post[y] /= total;
        }
        self.support = keep;
        self.refresh(n, m);
    }
}

/// Hash of one torus, reusable across distributions and seeds.
#[derive(Debug, Clone)]
pub struct TorusLsh {
    n: usize,
    s: usize,
    m: usize,
    p: f64,
    len: usize,
    fingerprint: u64,
    eta: f64,
    i0: i64,
    i1: i64,
    resolution: usize,
    fft: Option<TorusFft>,
}

impl TorusLsh {
    /// Hash with the default rate `5 / (3 (1 - 1/ln s))` and resolution.
    pub fn new(space: &CostSpace) -> Result<Self> {
        let g = torus_params(space)?;
        let ln_s = (g.s as f64).ln();
        let eta = 5.0 / (3.0 * (1.0 - 1.0 / ln_s));
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(
                "s",
                format!("the default rate needs s >= 3, got s = {}; pass an explicit eta", g.s),
            ));
        }
        Self::with_eta(space, eta)
    }

    /// Hash with an explicit rate.
    pub fn with_eta(space: &CostSpace, eta: f64) -> Result<Self> {
        let g = torus_params(space)?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid("eta", format!("must be positive and finite, got {eta}")));
        }
        let m = 2 * g.s + 1;
        let len = space.len();
        let scale = if g.p.is_infinite() { 1.0 } else { (g.n as f64).powf(1.0 / g.p) } * g.s as f64;
        let i0 = (-scale.ln() / eta).floor() as i64 - 1;
        Ok(Self {
            n: g.n,
            s: g.s,
            m,
            p: g.p,
            len,
            fingerprint: space.fingerprint(),
            eta,
            i0,
            i1: 1,
            resolution: DEFAULT_RESOLUTION,
            fft: (len > FFT_THRESHOLD).then(|| TorusFft::new(g.n, m)),
        })
    }

    /// Overrides the quadrature resolution.
    pub fn with_resolution(mut self, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(invalid("resolution", "must be at least 1"));
        }
        self.resolution = resolution;
        Ok(self)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn side(&self) -> usize {
        self.s
    }

    /// `(i0, i1)`.
    pub fn level_range(&self) -> (i64, i64) {
        (self.i0, self.i1)
    }

    /// Schedule `[i0..i1]` for `seed`.
    pub fn schedule(&self, seed: &SeedContext) -> ScaleSchedule {
        ScaleSchedule {
            eta: self.eta,
            theta: schedule_theta(seed),
            levels: (self.i0..=self.i1).collect(),
        }
    }

    /// Kernel at radius `w`.
    pub fn kernel(&self, w: f64) -> TorusKernel {
        kernel(self.n, self.m, self.p, w, self.resolution)
    }

    /// Checks that `p` lives on this torus and on its embedded grid.
    pub fn check(&self, p: &DiscreteDistribution) -> Result<()> {
        if p.space_fingerprint() != self.fingerprint {
            return Err(Error::SpaceMismatch {
                left: p.len(),
                right: self.len,
            });
        }
        let mut c = vec![0; self.n];
        for x in p.support() {
            decode_into(x, self.m, &mut c);
            if c.iter().any(|&v| v > self.s) {
                return Err(Error::OutsideEmbeddedGrid(x));
            }
        }
        Ok(())
    }

    /// Hash of `p` under `seed`.
    pub fn hash(&self, p: &DiscreteDistribution, seed: &SeedContext) -> Result<usize> {
        Ok(self.hash_many(&[p], seed)?[0])
    }

    /// Hashes of several distributions under one seed; kernels and race
    /// variables are computed once per level.
    pub fn hash_many(&self, ps: &[&DiscreteDistribution], seed: &SeedContext) -> Result<Vec<usize>> {
        for p in ps {
            self.check(p)?;
        }
        let masses: Vec<&[f64]> = ps.iter().map(|p| p.mass()).collect();
        Ok(self.hash_masses_with(&masses, schedule_theta(seed), seed))
    }

    /// Hashes of probability vectors for an explicit phase and race source.
    pub fn hash_masses_with<R: RaceSource + ?Sized>(
        &self,
        ps: &[&[f64]],
        theta: f64,
        race: &R,
    ) -> Vec<usize> {
        let (n, m) = (self.n, self.m);
        let mut filters: Vec<Filter> = ps.iter().map(|p| Filter::new(p, n, m)).collect();
        let mut v = vec![0.0; self.len];
        let mut order: Vec<usize> = (0..self.len).collect();
        let mut cx = vec![0; n];
        let mut scratch = vec![0; n];
        let mut i = self.i0;
        while filters.iter().any(|f| f.result.is_none()) {
            let w = (-self.eta * (i as f64 + theta)).exp();
            let k = self.kernel(w);
            for (x, vx) in v.iter_mut().enumerate() {
                *vx = race.race(i, x);
            }
            match &self.fft {
                None => {
                    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
                    for f in filters.iter_mut().filter(|f| f.result.is_none()) {
                        // Predictive weights never exceed the largest kernel
                        // weight, so candidates can be visited by increasing
                        // race time and the scan stops once no later
                        // candidate can win.
                        let mut best = f64::INFINITY;
                        let mut z = usize::MAX;
                        for &x in &order {
                            if v[x] > best * k.max_weight {
                                break;
                            }
                            decode_into(x, m, &mut cx);
                            let px = f.predictive_at(&k, &cx, &mut scratch);
                            if px > 0.0 {
                                let score = v[x] / px;
                                if score < best || (score == best && x < z) {
                                    best = score;
                                    z = x;
                                }
                            }
                        }
                        decode_into(z, m, &mut cx);
                        f.update(&k, &cx);
                    }
                }
                Some(fft) => {
                    let hat = fft.spectrum(&k.weights);
                    for f in filters.iter_mut().filter(|f| f.result.is_none()) {
                        let mut pred = fft.convolve(&hat, &f.post);
                        let top = pred.iter().fold(0.0f64, |a, &b| a.max(b));
                        pred.iter_mut().for_each(|p| {
                            if *p < FFT_ZERO * top {
                                *p = 0.0
                            }
                        });
                        let z = loop {
                            let z = crate::poisson::race_argmin(&pred, |x| v[x])
                                .expect("the predictive law has positive mass")
                                .winner;
                            decode_into(z, m, &mut cx);
                            if f.predictive_at(&k, &cx, &mut scratch) > 0.0 {
                                break z;
                            }
                            pred[z] = 0.0;
                        };
                        decode_into(z, m, &mut cx);
                        f.update(&k, &cx);
                    }
                }
            }
            i += 1;
        }
        filters.into_iter().map(|f| f.result.expect("finished")).collect()
    }
}

/// Hash of `p` on the torus `space` with the default rate.
pub fn lsh_torus(
    space: &CostSpace,
    p: &DiscreteDistribution,
    seed: &SeedContext,
    resolution: usize,
) -> Result<usize> {
    TorusLsh::new(space)?.with_resolution(resolution)?.hash(p, seed)
}
