//! Starting points for the multi-exponential fit.

use super::expsum::{solve_amplitudes, Design, ExpSum};

/// Rate search interval implied by the sampling: from a tenth of the inverse
/// record length to ten times the inverse first positive sample time.
pub(crate) fn rate_bounds(t: &[f64]) -> (f64, f64) {
    let span = t[t.len() - 1] - t[0];
    let first = t.iter().copied().find(|&d| d > 0.0).unwrap_or(span);
    (0.1 / span, 10.0 / first)
}

fn log_grid(lo: f64, hi: f64, per_decade: f64, cap: usize) -> Vec<f64> {
    let decades = (hi / lo).log10().max(0.5);
    let n = ((decades * per_decade).ceil() as usize).clamp(4, cap);
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Grid search over ordered tuples of log-spaced rates, amplitudes solved
/// linearly at each tuple.
pub(crate) fn log_spaced(t: &[f64], y: &[f64], w: &[f64], k: usize) -> Option<ExpSum> {
    let (lo, hi) = rate_bounds(t);
    let cap = match k {
        1 | 2 => 60,
        _ => 32,
    };
    let grid = log_grid(lo, hi, 8.0, cap);
    let design = Design {
        y,
        w,
        columns: grid
            .iter()
            .map(|g| t.iter().map(|&t| (-g * t).exp()).collect())
            .collect(),
    };
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut pick = Vec::with_capacity(k);
    search(&design, grid.len(), k, 0, &mut pick, &mut best);
    let (_, pick) = best?;
    let rates: Vec<f64> = pick.iter().map(|&i| grid[i]).collect();
    solve_amplitudes(t, y, w, &rates, true)
}

fn search(
    design: &Design<'_>,
    n: usize,
    k: usize,
    from: usize,
    pick: &mut Vec<usize>,
    best: &mut Option<(f64, Vec<usize>)>,
) {
    if pick.len() == k {
        if let Some(sse) = design.sse(pick) {
            if best.as_ref().is_none_or(|(b, _)| sse < *b) {
                *best = Some((sse, pick.clone()));
            }
        }
        return;
    }
    for i in from..n {
        pick.push(i);
        search(design, n, k, i + 1, pick, best);
        pick.pop();
    }
}

/// Single exponential (plus offset when asked) on one window: coarse scan
/// of the rate followed by a golden-section refinement in `ln Γ`.
fn single(t: &[f64], y: &[f64], w: &[f64], lo: f64, hi: f64, offset: bool) -> Option<ExpSum> {
    let cost = |ln_g: f64| {
        solve_amplitudes(t, y, w, &[ln_g.exp()], offset)
            .map(|m| m.sse(t, y, w))
            .unwrap_or(f64::INFINITY)
    };
    let grid: Vec<f64> = log_grid(lo, hi, 10.0, 80).iter().map(|g| g.ln()).collect();
    let costs: Vec<f64> = grid.iter().map(|&g| cost(g)).collect();
    let ibest = (0..grid.len()).min_by(|&a, &b| costs[a].total_cmp(&costs[b]))?;
    let mut a = grid[ibest.saturating_sub(1)];
    let mut b = grid[(ibest + 1).min(grid.len() - 1)];
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (cost(c), cost(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = cost(d);
        }
    }
    solve_amplitudes(t, y, w, &[(0.5 * (a + b)).exp()], offset)
}

/// Peel-off: the slowest component and the offset from the last third of
/// the samples, then each faster component from an earlier window of the
/// remainder after subtraction. Amplitudes are re-solved jointly at the end.
pub(crate) fn peel_off(t: &[f64], y: &[f64], w: &[f64], k: usize) -> Option<ExpSum> {
    let n = t.len();
    let (lo, hi) = rate_bounds(t);
    let tail_start = n - (n / 3).max(3);
    // Windows from slowest to fastest: last third, then the head split evenly.
    let mut windows = vec![(tail_start, n)];
    let rest = k.saturating_sub(1);
    for j in 0..rest {
        let end = tail_start * (rest - j) / rest;
        let start = tail_start * (rest - j - 1) / rest;
        windows.push((start, end.max(start + 3).min(n)));
    }
    let mut residual = y.to_vec();
    let mut rates = Vec::with_capacity(k);
    for (j, &(s, e)) in windows.iter().enumerate() {
        let m = single(&t[s..e], &residual[s..e], &w[s..e], lo, hi, j == 0)?;
        for (r, &ti) in residual.iter_mut().zip(t) {
            *r -= m.eval(ti);
        }
        let mut g = m.rates[0];
        // Keep rates distinct so the joint amplitude solve stays regular.
        while rates.iter().any(|&r: &f64| (r / g - 1.0).abs() < 0.05) {
            g *= 1.5;
        }
        rates.push(g);
    }
    solve_amplitudes(t, y, w, &rates, true)
}
