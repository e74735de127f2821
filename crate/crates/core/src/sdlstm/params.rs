use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SdLstmError;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// `out += self * v`
    #[inline]
    pub fn mul_vec_add(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (row, o) in self.data.chunks_exact(self.cols).zip(out.iter_mut()) {
            *o += row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// `out += self^T * v`
    #[inline]
    pub fn mul_t_vec_add(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (row, &s) in self.data.chunks_exact(self.cols).zip(v) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * s;
            }
        }
    }

    /// `self += a * b^T`
    #[inline]
    pub fn add_outer(&mut self, a: &[f64], b: &[f64]) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for (row, &s) in self.data.chunks_exact_mut(self.cols).zip(a) {
            for (x, y) in row.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }
}

/// Weights of the gated cell plus the affine readout.
///
/// The cell has no bias terms: every gate is a sigmoid (or tanh for the
/// candidate) of a recurrent term plus an input term. The output gate also
/// sees the current cell state through a per-unit peephole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub hidden_size: usize,
    pub input_size: usize,
    pub input_gate_x: Matrix,
    pub input_gate_h: Matrix,
    pub forget_gate_x: Matrix,
    pub forget_gate_h: Matrix,
    pub output_gate_x: Matrix,
    pub output_gate_h: Matrix,
    pub candidate_x: Matrix,
    pub candidate_h: Matrix,
    pub output_peephole: Vec<f64>,
    pub readout: Vec<f64>,
    pub readout_bias: f64,
}

pub const TENSOR_NAMES: [&str; 11] = [
    "input_gate_x",
    "input_gate_h",
    "forget_gate_x",
    "forget_gate_h",
    "output_gate_x",
    "output_gate_h",
    "candidate_x",
    "candidate_h",
    "output_peephole",
    "readout",
    "readout_bias",
];

impl LstmParams {
    pub fn zeros(hidden_size: usize, input_size: usize) -> Self {
        let x = || Matrix::zeros(hidden_size, input_size);
        let h = || Matrix::zeros(hidden_size, hidden_size);
        Self {
            hidden_size,
            input_size,
            input_gate_x: x(),
            input_gate_h: h(),
            forget_gate_x: x(),
            forget_gate_h: h(),
            output_gate_x: x(),
            output_gate_h: h(),
            candidate_x: x(),
            candidate_h: h(),
            output_peephole: vec![0.0; hidden_size],
            readout: vec![0.0; hidden_size],
            readout_bias: 0.0,
        }
    }

    /// Every weight drawn uniformly from `[-1/sqrt(hidden), 1/sqrt(hidden)]`,
    /// readout bias zero.
    pub fn init_uniform<R: Rng + ?Sized>(
        hidden_size: usize,
        input_size: usize,
        rng: &mut R,
    ) -> Self {
        let r = 1.0 / (hidden_size as f64).sqrt();
        let mut p = Self::zeros(hidden_size, input_size);
        for (name, t) in p.tensors_mut() {
            if name == "readout_bias" {
                continue;
            }
            for w in t.iter_mut() {
                *w = rng.random_range(-r..=r);
            }
        }
        p
    }

    pub fn tensors(&self) -> [(&'static str, &[f64]); 11] {
        [
            (TENSOR_NAMES[0], &self.input_gate_x.data),
            (TENSOR_NAMES[1], &self.input_gate_h.data),
            (TENSOR_NAMES[2], &self.forget_gate_x.data),
            (TENSOR_NAMES[3], &self.forget_gate_h.data),
            (TENSOR_NAMES[4], &self.output_gate_x.data),
            (TENSOR_NAMES[5], &self.output_gate_h.data),
            (TENSOR_NAMES[6], &self.candidate_x.data),
            (TENSOR_NAMES[7], &self.candidate_h.data),
            (TENSOR_NAMES[8], &self.output_peephole),
            (TENSOR_NAMES[9], &self.readout),
            (TENSOR_NAMES[10], std::slice::from_ref(&self.readout_bias)),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut [f64]); 11] {
        [
            (TENSOR_NAMES[0], &mut self.input_gate_x.data),
            (TENSOR_NAMES[1], &mut self.input_gate_h.data),
            (TENSOR_NAMES[2], &mut self.forget_gate_x.data),
            (TENSOR_NAMES[3], &mut self.forget_gate_h.data),
            (TENSOR_NAMES[4], &mut self.output_gate_x.data),
            (TENSOR_NAMES[5], &mut self.output_gate_h.data),
            (TENSOR_NAMES[6], &mut self.candidate_x.data),
            (TENSOR_NAMES[7], &mut self.candidate_h.data),
            (TENSOR_NAMES[8], &mut self.output_peephole),
            (TENSOR_NAMES[9], &mut self.readout),
            (
                TENSOR_NAMES[10],
                std::slice::from_mut(&mut self.readout_bias),
            ),
        ]
    }

    pub fn num_weights(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn validate(&self) -> Result<(), SdLstmError> {
        let (h, i) = (self.hidden_size, self.input_size);
        if h == 0 || i == 0 {
            return Err(SdLstmError::ShapeMismatch(
                "hidden and input size must be positive".into(),
            ));
        }
        let expect = |m: &Matrix, rows: usize, cols: usize, name: &str| {
            if m.rows != rows || m.cols != cols || m.data.len() != rows * cols {
                Err(SdLstmError::ShapeMismatch(format!(
                    "{name} is {}x{} ({} entries), expected {rows}x{cols}",
                    m.rows,
                    m.cols,
                    m.data.len()
                )))
            } else {
                Ok(())
            }
        };
        expect(&self.input_gate_x, h, i, "input_gate_x")?;
        expect(&self.forget_gate_x, h, i, "forget_gate_x")?;
        expect(&self.output_gate_x, h, i, "output_gate_x")?;
        expect(&self.candidate_x, h, i, "candidate_x")?;
        expect(&self.input_gate_h, h, h, "input_gate_h")?;
        expect(&self.forget_gate_h, h, h, "forget_gate_h")?;
        expect(&self.output_gate_h, h, h, "output_gate_h")?;
        expect(&self.candidate_h, h, h, "candidate_h")?;
        if self.output_peephole.len() != h || self.readout.len() != h {
            return Err(SdLstmError::ShapeMismatch(
                "peephole and readout must have hidden_size entries".into(),
            ));
        }
        if let Some((name, _)) = self
            .tensors()
            .iter()
            .find(|(_, t)| t.iter().any(|w| !w.is_finite()))
        {
            return Err(SdLstmError::NonFinite(format!(
                "{name} holds a non-finite weight"
            )));
        }
        Ok(())
    }
}

/// Hidden and cell vectors carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_size: usize) -> Self {
        Self {
            h: vec![0.0; hidden_size],
            c: vec![0.0; hidden_size],
        }
    }
}
