use rand::Rng;

/// Multiplicative inverted-dropout mask: each entry is either 0 (dropped)
/// or `1 / (1 - p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    pub scales: Vec<f64>,
}

impl DropoutMask {
    pub fn identity(len: usize) -> Self {
        Self {
            scales: vec![1.0; len],
        }
    }

    pub fn sample<R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Self {
        assert!(
            (0.0..1.0).contains(&p),
            "drop probability {p} outside [0, 1)"
        );
        let keep_scale = 1.0 / (1.0 - p);
        let scales = (0..len)
            .map(|_| {
                if rng.random::<f64>() < p {
                    0.0
                } else {
                    keep_scale
                }
            })
            .collect();
        Self { scales }
    }

    pub fn dropped(&self) -> Vec<bool> {
        self.scales.iter().map(|&s| s == 0.0).collect()
    }

    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        h.iter().zip(&self.scales).map(|(v, s)| v * s).collect()
    }
}

/// Inverted dropout on a hidden vector. Identity outside training; the
/// generator is not touched in that case.
pub fn sd_dropout<R: Rng + ?Sized>(h: &[f64], p: f64, training: bool, rng: &mut R) -> Vec<f64> {
    if !training {
        return h.to_vec();
    }
    DropoutMask::sample(h.len(), p, rng).apply(h)
}
