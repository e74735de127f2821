use super::params::{LstmParams, LstmState};
use super::SdLstmError;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Activations of one step, kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GateCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub input: Vec<f64>,
    pub forget: Vec<f64>,
    pub output: Vec<f64>,
    pub candidate: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

/// One step of the cell.
///
/// The cell state is updated before the output gate is evaluated because
/// the output gate's peephole reads the current cell.
pub fn forward_step(
    params: &LstmParams,
    x: &[f64],
    prev: &LstmState,
) -> Result<(LstmState, GateCache), SdLstmError> {
    let n = params.hidden_size;
    if x.len() != params.input_size {
        return Err(SdLstmError::ShapeMismatch(format!(
            "input has {} entries, expected {}",
            x.len(),
            params.input_size
        )));
    }
    if prev.h.len() != n || prev.c.len() != n {
        return Err(SdLstmError::ShapeMismatch(format!(
            "state has lengths ({}, {}), expected {n}",
            prev.h.len(),
            prev.c.len()
        )));
    }
    Ok(step_unchecked(params, x, prev))
}

pub(crate) fn step_unchecked(
    params: &LstmParams,
    x: &[f64],
    prev: &LstmState,
) -> (LstmState, GateCache) {
    let n = params.hidden_size;
    let mut zi = vec![0.0; n];
    let mut zf = vec![0.0; n];
    let mut zo = vec![0.0; n];
    let mut zg = vec![0.0; n];
    params.input_gate_h.mul_vec_add(&prev.h, &mut zi);
    params.input_gate_x.mul_vec_add(x, &mut zi);
    params.forget_gate_h.mul_vec_add(&prev.h, &mut zf);
    params.forget_gate_x.mul_vec_add(x, &mut zf);
    params.candidate_h.mul_vec_add(&prev.h, &mut zg);
    params.candidate_x.mul_vec_add(x, &mut zg);
    params.output_gate_h.mul_vec_add(&prev.h, &mut zo);
    params.output_gate_x.mul_vec_add(x, &mut zo);

    let input: Vec<f64> = zi.into_iter().map(sigmoid).collect();
    let forget: Vec<f64> = zf.into_iter().map(sigmoid).collect();
    let candidate: Vec<f64> = zg.into_iter().map(f64::tanh).collect();
    let c: Vec<f64> = (0..n)
        .map(|k| forget[k] * prev.c[k] + input[k] * candidate[k])
        .collect();
    let output: Vec<f64> = (0..n)
        .map(|k| sigmoid(zo[k] + params.output_peephole[k] * c[k]))
        .collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = output.iter().zip(&tanh_c).map(|(o, t)| o * t).collect();

    let cache = GateCache {
        x: x.to_vec(),
        h_prev: prev.h.clone(),
        c_prev: prev.c.clone(),
        input,
        forget,
        output,
        candidate,
        c: c.clone(),
        tanh_c,
    };
    (LstmState { h, c }, cache)
}

/// Runs the cell over `inputs` (length `T * input_size`) from a zero state.
pub(crate) fn run_sequence(params: &LstmParams, inputs: &[f64]) -> (LstmState, Vec<GateCache>) {
    let mut state = LstmState::zeros(params.hidden_size);
    let mut caches = Vec::with_capacity(inputs.len() / params.input_size);
    for x in inputs.chunks_exact(params.input_size) {
        let (next, cache) = step_unchecked(params, x, &state);
        caches.push(cache);
        state = next;
    }
    (state, caches)
}

/// Final hidden state only, without keeping caches.
pub(crate) fn final_hidden(params: &LstmParams, inputs: &[f64]) -> Vec<f64> {
    let mut state = LstmState::zeros(params.hidden_size);
    for x in inputs.chunks_exact(params.input_size) {
        state = step_unchecked(params, x, &state).0;
    }
    state.h
}

/// Backpropagates `dh_last` (gradient w.r.t. the final hidden state)
/// through the cached steps, accumulating into `grads`.
pub(crate) fn backward_sequence(
    params: &LstmParams,
    caches: &[GateCache],
    dh_last: &[f64],
    grads: &mut LstmParams,
) {
    let n = params.hidden_size;
    let mut dh = dh_last.to_vec();
    let mut dc_next = vec![0.0; n];
    let mut dzi = vec![0.0; n];
    let mut dzf = vec![0.0; n];
    let mut dzo = vec![0.0; n];
    let mut dzg = vec![0.0; n];

    for cache in caches.iter().rev() {
        for k in 0..n {
            let o = cache.output[k];
            let tc = cache.tanh_c[k];
            dzo[k] = dh[k] * tc * o * (1.0 - o);
            let dc = dc_next[k] + dh[k] * o * (1.0 - tc * tc) + dzo[k] * params.output_peephole[k];
            let i = cache.input[k];
            let f = cache.forget[k];
            let g = cache.candidate[k];
            dzi[k] = dc * g * i * (1.0 - i);
            dzf[k] = dc * cache.c_prev[k] * f * (1.0 - f);
            dzg[k] = dc * i * (1.0 - g * g);
            dc_next[k] = dc * f;
            grads.output_peephole[k] += dzo[k] * cache.c[k];
        }

        grads.input_gate_x.add_outer(&dzi, &cache.x);
        grads.forget_gate_x.add_outer(&dzf, &cache.x);
        grads.output_gate_x.add_outer(&dzo, &cache.x);
        grads.candidate_x.add_outer(&dzg, &cache.x);
        grads.input_gate_h.add_outer(&dzi, &cache.h_prev);
        grads.forget_gate_h.add_outer(&dzf, &cache.h_prev);
        grads.output_gate_h.add_outer(&dzo, &cache.h_prev);
        grads.candidate_h.add_outer(&dzg, &cache.h_prev);

        dh.iter_mut().for_each(|v| *v = 0.0);
        params.input_gate_h.mul_t_vec_add(&dzi, &mut dh);
        params.forget_gate_h.mul_t_vec_add(&dzf, &mut dh);
        params.output_gate_h.mul_t_vec_add(&dzo, &mut dh);
        params.candidate_h.mul_t_vec_add(&dzg, &mut dh);
    }
}
