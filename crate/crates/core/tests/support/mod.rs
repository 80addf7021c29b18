//! Independent reference implementations used as test oracles. None of these
//! call into the library's fitting code.
#![allow(dead_code)]

/// Downhill simplex minimization.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: f64, tol: f64, max_iter: usize) -> Vec<f64> {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if (values[n] - values[0]).abs() <= tol * (1.0 + values[0].abs()) {
            let spread = simplex
                .iter()
                .flat_map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if spread < 1e-9 {
                break;
            }
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|x| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let xc = if fr < values[n] { along(-0.5) } else { along(0.5) };
            let fc = f(&xc);
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    let shrunk: Vec<f64> = simplex[i]
                        .iter()
                        .zip(&simplex[0])
                        .map(|(x, b)| b + 0.5 * (x - b))
                        .collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    simplex[best].clone()
}

/// Grid search on `[lo, hi]` followed by repeated local grid refinement.
pub fn grid_minimize_1d<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize, rounds: usize) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    let mut best = lo;
    for _ in 0..rounds {
        let h = (hi - lo) / (points - 1) as f64;
        let mut best_v = f64::INFINITY;
        for i in 0..points {
            let x = lo + h * i as f64;
            let v = f(x);
            if v < best_v {
                best_v = v;
                best = x;
            }
        }
        lo = (best - h).max(lo);
        hi = (best + h).min(hi);
    }
    best
}

/// Plain-formula Bernoulli negative log-likelihood of probabilities `p`.
pub fn bernoulli_nll(p: &[f64], y: &[bool]) -> f64 {
    let mut acc = 0.0;
    for (&p, &y) in p.iter().zip(y) {
        let q = if y { p } else { 1.0 - p };
        acc -= q.max(1e-300).ln();
    }
    acc / p.len() as f64
}

pub struct IsoSolution {
    /// Fitted value per input row.
    pub fitted: Vec<f64>,
    pub objective: f64,
}

/// Distinct scores ascending with the total weight and weighted label sum of each.
fn tie_groups(s: &[f64], y: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut idx: Vec<usize> = (0..s.len()).filter(|&i| w[i] > 0.0).collect();
    idx.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let (mut keys, mut ws, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for i in idx {
        if keys.last() == Some(&s[i]) {
            *ws.last_mut().unwrap() += w[i];
            *ys.last_mut().unwrap() += w[i] * y[i];
        } else {
            keys.push(s[i]);
            ws.push(w[i]);
            ys.push(w[i] * y[i]);
        }
    }
    (keys, ws, ys)
}

fn objective(s: &[f64], y: &[f64], w: &[f64], value_of: impl Fn(f64) -> f64) -> f64 {
    (0..s.len())
        .map(|i| w[i] * (y[i] - value_of(s[i])).powi(2))
        .sum()
}

/// Exhaustive search over every split of the sorted tie-groups into contiguous
/// blocks, keeping only non-decreasing block means.
pub fn isotonic_bruteforce(s: &[f64], y: &[f64], w: &[f64]) -> IsoSolution {
    let (keys, ws, ys) = tie_groups(s, y, w);
    let g = keys.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (g.saturating_sub(1))) {
        let mut vals = vec![0.0; g];
        let mut start = 0;
        let mut prev = f64::NEG_INFINITY;
        let mut ok = true;
        for end in 0..g {
            let cut = end == g - 1 || mask & (1 << end) != 0;
            if cut {
                let tw: f64 = ws[start..=end].iter().sum();
                let mean = ys[start..=end].iter().sum::<f64>() / tw;
                if mean < prev - 1e-15 {
                    ok = false;
                    break;
                }
                prev = mean;
                vals[start..=end].iter_mut().for_each(|v| *v = mean);
                start = end + 1;
            }
        }
        if !ok {
            continue;
        }
        let obj = objective(s, y, w, |x| vals[keys.iter().position(|k| *k == x).unwrap_or(0)]);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, vals));
        }
    }
    let (obj, vals) = best.expect("at least one partition");
    let fitted = s
        .iter()
        .map(|x| keys.iter().position(|k| k == x).map_or(f64::NAN, |j| vals[j]))
        .collect();
    IsoSolution {
        fitted,
        objective: obj,
    }
}

/// Dynamic program minimizing the objective over non-decreasing sequences
/// drawn from a candidate grid: every contiguous-range weighted mean plus a
/// uniform grid on [0, 1].
pub fn isotonic_grid_dp(s: &[f64], y: &[f64], w: &[f64], extra_grid: usize) -> IsoSolution {
    let (keys, ws, ys) = tie_groups(s, y, w);
    let g = keys.len();
    let mut grid: Vec<f64> = (0..=extra_grid).map(|i| i as f64 / extra_grid as f64).collect();
    for a in 0..g {
        for b in a..g {
            let tw: f64 = ws[a..=b].iter().sum();
            grid.push(ys[a..=b].iter().sum::<f64>() / tw);
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let m = grid.len();

    // Cost of group j at value v: sum over its rows of w (y - v)^2.
    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); g];
    for i in 0..s.len() {
        if w[i] > 0.0 {
            let j = keys.iter().position(|k| *k == s[i]).unwrap();
            rows_of[j].push(i);
        }
    }
    let cost = |j: usize, v: f64| rows_of[j].iter().map(|&i| w[i] * (y[i] - v).powi(2)).sum::<f64>();

    let mut dp = vec![vec![f64::INFINITY; m]; g];
    let mut arg = vec![vec![0usize; m]; g];
    for j in 0..g {
        let mut run = f64::INFINITY;
        let mut run_k = 0;
        for k in 0..m {
            let prev = if j == 0 { 0.0 } else { dp[j - 1][k] };
            if prev < run {
                run = prev;
                run_k = k;
            }
            dp[j][k] = run + cost(j, grid[k]);
            arg[j][k] = run_k;
        }
    }
    let mut k = (0..m).min_by(|&a, &b| dp[g - 1][a].total_cmp(&dp[g - 1][b])).unwrap();
    let obj_total = dp[g - 1][k];
    let mut vals = vec![0.0; g];
    for j in (0..g).rev() {
        vals[j] = grid[k];
        k = arg[j][k];
    }
    let fitted = s
        .iter()
        .map(|x| keys.iter().position(|kk| kk == x).map_or(f64::NAN, |j| vals[j]))
        .collect();
    IsoSolution {
        fitted,
        objective: obj_total,
    }
}

/// Two-sided signed-rank p-value by listing all `2^n` sign assignments.
pub fn wilcoxon_enumerate(d: &[f64]) -> (f64, f64, usize) {
    let nz: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
    let n = nz.len();
    if n == 0 {
        return (0.0, 1.0, 0);
    }
    let abs: Vec<f64> = nz.iter().map(|v| v.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|a| {
            let less = abs.iter().filter(|b| *b < a).count() as f64;
            let equal = abs.iter().filter(|b| *b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = nz
        .iter()
        .zip(&ranks)
        .filter(|(v, _)| **v > 0.0)
        .map(|(_, r)| r)
        .sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    let p = (2.0 * (le.min(ge) as f64) / total).min(1.0);
    (observed, p, n)
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
