//! Single-layer GRU language model over a flat parameter vector.
//!
//! Gates use the order z (update), r (reset), n (candidate):
//!
//! ```text
//! z = σ(W_z e + U_z h + b_z)
//! r = σ(W_r e + U_r h + b_r)
//! n = tanh(W_n e + U_n (r ⊙ h) + b_n)
//! h' = (1 - z) ⊙ n + z ⊙ h
//! p = softmax(W_out h' + b_out)
//! ```

use crate::prefloss::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Layout {
    pub v: usize,
    pub d: usize,
    pub h: usize,
    pub embed: usize,
    pub w: [usize; 3],
    pub u: [usize; 3],
    pub b: [usize; 3],
    pub w_out: usize,
    pub b_out: usize,
    pub total: usize,
}

pub(crate) const GATES: [&str; 3] = ["z", "r", "n"];

impl Layout {
    pub fn new(v: usize, d: usize, h: usize) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let o = at;
            at += n;
            o
        };
        let embed = take(v * d);
        let w = [take(h * d), take(h * d), take(h * d)];
        let u = [take(h * h), take(h * h), take(h * h)];
        let b = [take(h), take(h), take(h)];
        let w_out = take(v * h);
        let b_out = take(v);
        Self { v, d, h, embed, w, u, b, w_out, b_out, total: at }
    }

    /// Named tensors as `(name, offset, shape)`.
    pub fn tensors(&self) -> Vec<(String, usize, Vec<usize>)> {
        let (v, d, h) = (self.v, self.d, self.h);
        let mut out = vec![("embed".to_string(), self.embed, vec![v, d])];
        for (g, name) in GATES.iter().enumerate() {
            out.push((format!("w_{name}"), self.w[g], vec![h, d]));
        }
        for (g, name) in GATES.iter().enumerate() {
            out.push((format!("u_{name}"), self.u[g], vec![h, h]));
        }
        for (g, name) in GATES.iter().enumerate() {
            out.push((format!("b_{name}"), self.b[g], vec![h]));
        }
        out.push(("w_out".to_string(), self.w_out, vec![v, h]));
        out.push(("b_out".to_string(), self.b_out, vec![v]));
        out
    }

    /// Mask of parameters that receive weight decay (everything but biases).
    pub fn decay_mask(&self) -> Vec<bool> {
        let mut mask = vec![true; self.total];
        for &o in &self.b {
            mask[o..o + self.h].fill(false);
        }
        mask[self.b_out..self.b_out + self.v].fill(false);
        mask
    }
}

/// `out = M x` for row-major `M` (rows × x.len()), added to `out`.
fn matvec_add(m: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (row, o) in m.chunks_exact(cols).zip(out.iter_mut()) {
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += Mᵀ y`.
fn matvec_t_add(m: &[f64], y: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (row, &yi) in m.chunks_exact(cols).zip(y) {
        if yi != 0.0 {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
    }
}

/// `G += y xᵀ`.
fn outer_add(g: &mut [f64], y: &[f64], x: &[f64]) {
    let cols = x.len();
    for (row, &yi) in g.chunks_exact_mut(cols).zip(y) {
        if yi != 0.0 {
            for (gi, xi) in row.iter_mut().zip(x) {
                *gi += yi * xi;
            }
        }
    }
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Step {
    x: usize,
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
    pub h: Vec<f64>,
    /// Next-token distribution, only for scored positions.
    pub probs: Option<Vec<f64>>,
}

/// Cached forward pass over `tokens`, scoring predictions of
/// `tokens[first_scored..]`.
#[derive(Debug, Clone)]
pub(crate) struct Trace {
    pub steps: Vec<Step>,
    pub first_scored: usize,
    pub targets: Vec<u32>,
}

impl Trace {
    /// Log-probability of each scored token.
    pub fn logprobs(&self) -> Vec<f64> {
        self.steps[self.first_scored - 1..]
            .iter()
            .zip(&self.targets)
            .map(|(s, &y)| s.probs.as_ref().expect("scored step")[y as usize].ln())
            .collect()
    }
}

pub(crate) fn step(p: &[f64], l: &Layout, x: usize, h_prev: &[f64], with_probs: bool) -> Step {
    let (d, h) = (l.d, l.h);
    let e = &p[l.embed + x * d..l.embed + (x + 1) * d];
    let gate = |g: usize, input: &[f64]| -> Vec<f64> {
        let mut a = p[l.b[g]..l.b[g] + h].to_vec();
        matvec_add(&p[l.w[g]..l.w[g] + h * d], e, &mut a);
        matvec_add(&p[l.u[g]..l.u[g] + h * h], input, &mut a);
        a
    };
    let z: Vec<f64> = gate(0, h_prev).into_iter().map(sigmoid).collect();
    let r: Vec<f64> = gate(1, h_prev).into_iter().map(sigmoid).collect();
    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
    let n: Vec<f64> = gate(2, &rh).into_iter().map(f64::tanh).collect();
    let hn: Vec<f64> = (0..h).map(|i| (1.0 - z[i]) * n[i] + z[i] * h_prev[i]).collect();
    let probs = with_probs.then(|| {
        let mut logits = p[l.b_out..l.b_out + l.v].to_vec();
        matvec_add(&p[l.w_out..l.w_out + l.v * h], &hn, &mut logits);
        softmax_in_place(&mut logits);
        logits
    });
    Step { x, h_prev: h_prev.to_vec(), z, r, n, h: hn, probs }
}

pub(crate) fn forward(p: &[f64], l: &Layout, tokens: &[u32], first_scored: usize) -> Trace {
    assert!(first_scored >= 1 && first_scored < tokens.len(), "nothing to score");
    let mut h = vec![0.0; l.h];
    let mut steps = Vec::with_capacity(tokens.len() - 1);
    for (t, &x) in tokens[..tokens.len() - 1].iter().enumerate() {
        let s = step(p, l, x as usize, &h, t + 1 >= first_scored);
        h.clone_from(&s.h);
        steps.push(s);
    }
    Trace { steps, first_scored, targets: tokens[first_scored..].to_vec() }
}

/// Adds `weight * ∇ Σ log p(scored tokens)` to `grad`.
pub(crate) fn backward(p: &[f64], l: &Layout, trace: &Trace, weight: f64, grad: &mut [f64]) {
    let (d, h, v) = (l.d, l.h, l.v);
    let mut dh_next = vec![0.0; h];
    let mut dlogits = vec![0.0; v];
    for (t, s) in trace.steps.iter().enumerate().rev() {
        let mut dh = std::mem::take(&mut dh_next);
        if let Some(probs) = &s.probs {
            let y = trace.targets[t + 1 - trace.first_scored] as usize;
            for (k, (dl, &pk)) in dlogits.iter_mut().zip(probs).enumerate() {
                *dl = weight * (f64::from(u8::from(k == y)) - pk);
            }
            outer_add(&mut grad[l.w_out..l.w_out + v * h], &dlogits, &s.h);
            for (g, dl) in grad[l.b_out..l.b_out + v].iter_mut().zip(&dlogits) {
                *g += dl;
            }
            matvec_t_add(&p[l.w_out..l.w_out + v * h], &dlogits, &mut dh);
        }
        let mut dh_prev: Vec<f64> = (0..h).map(|i| dh[i] * s.z[i]).collect();
        let da_z: Vec<f64> = (0..h).map(|i| dh[i] * (s.h_prev[i] - s.n[i]) * s.z[i] * (1.0 - s.z[i])).collect();
        let da_n: Vec<f64> = (0..h).map(|i| dh[i] * (1.0 - s.z[i]) * (1.0 - s.n[i] * s.n[i])).collect();
        let rh: Vec<f64> = (0..h).map(|i| s.r[i] * s.h_prev[i]).collect();
        let mut drh = vec![0.0; h];
        matvec_t_add(&p[l.u[2]..l.u[2] + h * h], &da_n, &mut drh);
        let da_r: Vec<f64> = (0..h).map(|i| drh[i] * s.h_prev[i] * s.r[i] * (1.0 - s.r[i])).collect();
        for i in 0..h {
            dh_prev[i] += drh[i] * s.r[i];
        }
        let e = &p[l.embed + s.x * d..l.embed + (s.x + 1) * d];
        let mut de = vec![0.0; d];
        for (g, da) in [(0, &da_z), (1, &da_r), (2, &da_n)] {
            outer_add(&mut grad[l.w[g]..l.w[g] + h * d], da, e);
            let input = if g == 2 { &rh } else { &s.h_prev };
            outer_add(&mut grad[l.u[g]..l.u[g] + h * h], da, input);
            for (gb, a) in grad[l.b[g]..l.b[g] + h].iter_mut().zip(da.iter()) {
                *gb += a;
            }
            matvec_t_add(&p[l.w[g]..l.w[g] + h * d], da, &mut de);
            if g != 2 {
                matvec_t_add(&p[l.u[g]..l.u[g] + h * h], da, &mut dh_prev);
            }
        }
        for (ge, x) in grad[l.embed + s.x * d..l.embed + (s.x + 1) * d].iter_mut().zip(&de) {
            *ge += x;
        }
        dh_next = dh_prev;
    }
}
