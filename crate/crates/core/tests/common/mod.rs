#![allow(clippy::needless_range_loop)]
#![allow(dead_code)]

/// Straight-line transcription of the six update rules, written without any
/// library code so it can serve as an independent reference.
pub mod oracle {
    pub struct Params {
        pub mu: f64,
        pub mu_max: f64,
        pub rho_za: f64,
        pub rho_rza: f64,
        pub eps_rza: f64,
        pub beta: f64,
        pub c: f64,
        pub rza_unnormalized: bool,
    }

    fn sgn(v: f64) -> f64 {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    /// Returns the weight vector after every iteration plus the step used.
    pub fn run(name: &str, p: &Params, xs: &[Vec<f64>], ys: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = xs[0].len();
        let mut h = vec![0.0; n];
        let mut proj = vec![0.0; n];
        let mut history = Vec::new();
        let mut steps = Vec::new();
        for t in 0..xs.len() {
            let x = &xs[t];
            let mut yhat = 0.0;
            for i in 0..n {
                yhat += h[i] * x[i];
            }
            let e = ys[t] - yhat;
            let mut xx = 0.0;
            for i in 0..n {
                xx += x[i] * x[i];
            }
            let vss = name.starts_with("vss");
            let step = if vss {
                for i in 0..n {
                    proj[i] = p.beta * proj[i] + (1.0 - p.beta) * x[i] * e / xx;
                }
                let mut pp = 0.0;
                for i in 0..n {
                    pp += proj[i] * proj[i];
                }
                p.mu_max * pp / (pp + p.c)
            } else {
                p.mu
            };
            let mut next = vec![0.0; n];
            for i in 0..n {
                let grad = if name == "iss-rza-nlms" && p.rza_unnormalized {
                    step * e * x[i]
                } else {
                    step * e * x[i] / xx
                };
                let pen = if name.ends_with("-rza-nlms") {
                    p.rho_rza * sgn(h[i]) / (1.0 + p.eps_rza * h[i].abs())
                } else if name.ends_with("-za-nlms") {
                    p.rho_za * sgn(h[i])
                } else {
                    0.0
                };
                next[i] = h[i] + grad - pen;
            }
            h = next;
            history.push(h.clone());
            steps.push(step);
        }
        (history, steps)
    }
}

/// Tiny deterministic generator for test inputs (xorshift64*).
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1)
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        let v = self.0.wrapping_mul(0x2545_f491_4f6c_dd1d);
        (v >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }
}

/// Rows of the Sylvester-Hadamard matrix of order `n` (a power of two).
pub fn hadamard_rows(n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![1.0]];
    while m.len() < n {
        let k = m.len();
        let mut next = vec![vec![0.0; 2 * k]; 2 * k];
        for i in 0..k {
            for j in 0..k {
                next[i][j] = m[i][j];
                next[i][j + k] = m[i][j];
                next[i + k][j] = m[i][j];
                next[i + k][j + k] = -m[i][j];
            }
        }
        m = next;
    }
    m
}
