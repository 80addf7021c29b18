//! Damped Newton solver for small weighted logistic problems.
//!
//! Platt scaling (features `s, 1`) and beta calibration (features
//! `ln p, -ln(1-p), 1`) both reduce to maximizing a Bernoulli likelihood
//! over at most three coefficients with soft targets.

/// Numerically stable `ln(1 + e^x)`.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub cap: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            grad_tol: 1e-8,
            cap: 1e3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOutcome<const K: usize> {
    pub coef: [f64; K],
    pub iterations: usize,
    pub converged: bool,
    pub capped: bool,
}

/// Weighted Bernoulli log-loss with linear predictor `coef · x`.
pub(crate) struct LogisticProblem<'a, const K: usize> {
    pub x: &'a [[f64; K]],
    pub targets: &'a [f64],
    pub weights: &'a [f64],
}

impl<const K: usize> LogisticProblem<'_, K> {
    fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn eta(coef: &[f64; K], x: &[f64; K]) -> f64 {
        coef.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Mean negative log-likelihood.
    pub fn loss(&self, coef: &[f64; K]) -> f64 {
        let mut acc = 0.0;
        for ((x, &t), &w) in self.x.iter().zip(self.targets).zip(self.weights) {
            let eta = Self::eta(coef, x);
            acc += w * (softplus(eta) - t * eta);
        }
        acc / self.total_weight()
    }

    fn derivatives(&self, coef: &[f64; K]) -> ([f64; K], [[f64; K]; K]) {
        let mut g = [0.0; K];
        let mut h = [[0.0; K]; K];
        for ((x, &t), &w) in self.x.iter().zip(self.targets).zip(self.weights) {
            let p = sigmoid(Self::eta(coef, x));
            let r = w * (p - t);
            let c = w * p * (1.0 - p);
            for j in 0..K {
                g[j] += r * x[j];
                for k in 0..=j {
                    h[j][k] += c * x[j] * x[k];
                }
            }
        }
        let tw = self.total_weight();
        for j in 0..K {
            g[j] /= tw;
            for k in 0..=j {
                h[j][k] /= tw;
                h[k][j] = h[j][k];
            }
        }
        (g, h)
    }

    /// Minimizes the loss over the coordinates flagged `active`; the others stay at `start`.
    pub fn minimize(
        &self,
        start: [f64; K],
        active: [bool; K],
        opts: NewtonOptions,
    ) -> NewtonOutcome<K> {
        let mut coef = start;
        let mut loss = self.loss(&coef);
        let mut capped = false;
        let mut converged = false;
        let mut iterations = 0;
        let idx: Vec<usize> = (0..K).filter(|&j| active[j]).collect();

        while iterations < opts.max_iter {
            let (g, h) = self.derivatives(&coef);
            let gmax = idx.iter().map(|&j| g[j].abs()).fold(0.0, f64::max);
            if gmax < opts.grad_tol || idx.is_empty() {
                converged = true;
                break;
            }
            iterations += 1;

            let m = idx.len();
            let mut a = vec![vec![0.0; m + 1]; m];
            for (r, &j) in idx.iter().enumerate() {
                for (c, &k) in idx.iter().enumerate() {
                    a[r][c] = h[j][k];
                }
                a[r][r] += 1e-12;
                a[r][m] = -g[j];
            }
            let Some(dir) = solve(a) else { break };

            let slope: f64 = idx.iter().zip(&dir).map(|(&j, d)| g[j] * d).sum();
            let mut step = 1.0;
            let mut accepted = None;
            while step >= 1e-10 {
                let mut trial = coef;
                let mut hit_cap = false;
                for (&j, d) in idx.iter().zip(&dir) {
                    let v = coef[j] + step * d;
                    trial[j] = v.clamp(-opts.cap, opts.cap);
                    hit_cap |= v.abs() > opts.cap;
                }
                let l = self.loss(&trial);
                // The second clause accepts steps lost in rounding near the optimum.
                let noise = 1e-14 * loss.abs().max(1.0);
                if l.is_finite() && (l <= loss + 1e-4 * step * slope || (step == 1.0 && l <= loss + noise)) {
                    accepted = Some((trial, l, hit_cap));
                    break;
                }
                step *= 0.5;
            }
            match accepted {
                Some((trial, l, hit_cap)) => {
                    let moved = trial != coef;
                    coef = trial;
                    loss = l;
                    if hit_cap {
                        capped = true;
                    }
                    if !moved {
                        break;
                    }
                }
                None => break,
            }
        }

        NewtonOutcome {
            coef,
            iterations,
            converged,
            capped,
        }
    }
}

/// Gaussian elimination with partial pivoting on an augmented `m × (m+1)` matrix.
fn solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let pivot = (col..m).max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            for c in col..=m {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let mut s = a[r][m];
        for c in r + 1..m {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
