//! Brute-force reference implementations used only by tests.
//!
//! Nothing here shares a code path with the production solvers: inner
//! worst cases are checked by exhaustive simplex-grid enumeration, band
//! worst cases by staircase-CDF enumeration, chi-square quantiles by
//! adaptive quadrature, and outer optima by grid certification. Oracles
//! trade time for independence and are deliberately slow.

use lro_core::{CdfBand, ObservationSet, RowSense, SupportBounds};

/// Result of a grid search: the best value and where it occurred.
#[derive(Debug, Clone)]
pub struct GridMin {
    pub value: f64,
    pub argmin: Vec<f64>,
    pub feasible_points: u64,
}

/// Constraint filter rows for the constrained grid oracle (`coeffs . p`
/// compared to `rhs`).
#[derive(Debug, Clone)]
pub struct GridConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub sense: RowSense,
    pub tol: f64,
}

struct GridCtx<'a> {
    n: usize,
    units: usize,
    counts: &'a [f64],
    h: &'a [f64],
    gamma: f64,
    log_table: &'a [f64],
    ln_tab: &'a [f64],
    suffix_count: &'a [f64],
    suffix_const: &'a [f64],
    suffix_min_h: &'a [f64],
    use_objective_prune: bool,
    constraints: &'a [GridConstraint],
}

fn grid_recurse(
    ctx: &GridCtx<'_>,
    depth: usize,
    remaining: usize,
    partial_lik: f64,
    partial_val: f64,
    assignment: &mut [usize],
    best: &mut GridMin,
) {
    if depth == ctx.n - 1 {
        let k = remaining;
        if ctx.counts[depth] > 0.0 && k == 0 {
            return;
        }
        assignment[depth] = k;
        let mut lik = partial_lik;
        if ctx.counts[depth] > 0.0 {
            lik += ctx.counts[depth] * ctx.log_table[k];
        }
        if lik < ctx.gamma {
            return;
        }
        let value = partial_val + ctx.h[depth] * (k as f64 / ctx.units as f64);
        let p: Vec<f64> =
            assignment.iter().map(|&kk| kk as f64 / ctx.units as f64).collect();
        for c in ctx.constraints {
            let lhs: f64 = c.coeffs.iter().zip(&p).map(|(a, x)| a * x).sum();
            let ok = match c.sense {
                RowSense::Ge => lhs >= c.rhs - c.tol,
                RowSense::Eq => (lhs - c.rhs).abs() <= c.tol,
            };
            if !ok {
                return;
            }
        }
        best.feasible_points += 1;
        if value < best.value {
            best.value = value;
            best.argmin.copy_from_slice(&p);
        }
        return;
    }
    // Likelihood bound: distributing the remaining mass M proportionally to
    // the remaining counts maximizes the remaining likelihood at
    // C ln(M) + suffix_const.
    if ctx.suffix_count[depth] > 0.0 {
        let m_frac_log = if remaining == 0 {
            f64::NEG_INFINITY
        } else {
            ctx.ln_tab[remaining] - ctx.ln_tab[ctx.units]
        };
        let lik_bound =
            partial_lik + ctx.suffix_count[depth] * m_frac_log + ctx.suffix_const[depth];
        if lik_bound < ctx.gamma {
            return;
        }
    }
    if ctx.use_objective_prune {
        let val_bound =
            partial_val + ctx.suffix_min_h[depth] * (remaining as f64 / ctx.units as f64);
        if val_bound >= best.value {
            return;
        }
    }
    for k in 0..=remaining {
        if ctx.counts[depth] > 0.0 && k == 0 {
            continue; // observed coordinate with zero mass: likelihood -inf
        }
        assignment[depth] = k;
        let mut lik = partial_lik;
        if ctx.counts[depth] > 0.0 {
            lik += ctx.counts[depth] * ctx.log_table[k];
        }
        grid_recurse(
            ctx,
            depth + 1,
            remaining - k,
            lik,
            partial_val + ctx.h[depth] * (k as f64 / ctx.units as f64),
            assignment,
            best,
        );
    }
}

/// Exhaustive minimum of `sum p_i h_i` over the probability grid of step
/// `1/units` restricted to `sum N_i ln p_i >= gamma` (and optional linear
/// filters).
pub fn simplex_grid_min(
    obs: &ObservationSet,
    gamma: f64,
    h: &[f64],
    step: f64,
    constraints: &[GridConstraint],
) -> Result<GridMin, String> {
    let n = obs.len();
    if n > 4 {
        return Err("grid oracle supports n <= 4".into());
    }
    if h.len() != n {
        return Err("payoff length mismatch".into());
    }
    if !(step > 0.0) {
        return Err("step must be positive".into());
    }
    let units = (1.0 / step).round() as usize;
    let counts: Vec<f64> = obs.counts().iter().map(|&c| c as f64).collect();

    let log_table: Vec<f64> = (0..=units)
        .map(|k| if k == 0 { f64::NEG_INFINITY } else { (k as f64 / units as f64).ln() })
        .collect();
    let ln_tab: Vec<f64> = (0..=units).map(|k| (k as f64).ln()).collect();

    let mut suffix_count = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix_count[i] = suffix_count[i + 1] + counts[i];
    }
    let mut suffix_const = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix_const[i] = suffix_const[i + 1]
            + if counts[i] > 0.0 {
                counts[i] * (counts[i] / suffix_count[i]).ln()
            } else {
                0.0
            };
    }
    let mut suffix_min_h = vec![f64::INFINITY; n + 1];
    for i in (0..n).rev() {
        suffix_min_h[i] = suffix_min_h[i + 1].min(h[i]);
    }
    // An empty suffix contributes no mass value; make the bound benign.
    suffix_min_h[n] = 0.0;

    let ctx = GridCtx {
        n,
        units,
        counts: &counts,
        h,
        gamma,
        log_table: &log_table,
        ln_tab: &ln_tab,
        suffix_count: &suffix_count,
        suffix_const: &suffix_const,
        suffix_min_h: &suffix_min_h,
        use_objective_prune: constraints.is_empty(),
        constraints,
    };
    let mut best = GridMin { value: f64::INFINITY, argmin: vec![0.0; n], feasible_points: 0 };
    let mut assignment = vec![0usize; n];
    grid_recurse(&ctx, 0, units, 0.0, 0.0, &mut assignment, &mut best);

    if best.feasible_points == 0 {
        return Err("NoFeasibleGridPoint: feasible region thinner than the grid".into());
    }
    Ok(best)
}

/// Enumerate monotone staircase CDFs on the probability grid `prob_step`
/// respecting the band, placing each interval's mass at the `h`-minimizing
/// point of a scenario grid (plus the interval endpoints); returns the
/// minimal expectation.
pub fn staircase_cdf_min<H>(
    band: &CdfBand,
    h: H,
    prob_step: f64,
    xi_grid_points: usize,
    bounds: SupportBounds,
) -> Result<f64, String>
where
    H: Fn(f64) -> f64,
{
    let n = band.len();
    if n > 4 {
        return Err("staircase oracle supports n <= 4".into());
    }
    let units = (1.0 / prob_step).round() as usize;
    let levels: Vec<(usize, usize)> = (0..n)
        .map(|i| {
            let lo = (band.lower()[i] * units as f64 - 1e-9).ceil().max(0.0) as usize;
            let hi = ((band.upper()[i] * units as f64 + 1e-9).floor() as usize).min(units);
            (lo, hi)
        })
        .collect();
    for &(lo, hi) in &levels {
        if lo > hi {
            return Err("NoFeasibleGridPoint: band thinner than the probability grid".into());
        }
    }

    let mut knots = Vec::with_capacity(n + 2);
    knots.push(bounds.lo);
    knots.extend_from_slice(band.points());
    knots.push(bounds.hi);

    let span = bounds.hi - bounds.lo;
    let mut interval_min = vec![f64::INFINITY; n + 1];
    for k in 0..=n {
        let (a, b) = (knots[k], knots[k + 1]);
        let mut best = h(a).min(h(b));
        if xi_grid_points > 0 && span > 0.0 {
            let step = span / xi_grid_points as f64;
            let mut x = ((a - bounds.lo) / step).ceil() * step + bounds.lo;
            while x <= b {
                if x >= a {
                    best = best.min(h(x));
                }
                x += step;
            }
        }
        interval_min[k] = best;
    }

    fn enumerate(
        depth: usize,
        prev: usize,
        n: usize,
        units: usize,
        levels: &[(usize, usize)],
        interval_min: &[f64],
        stack: &mut [usize],
        best: &mut f64,
    ) {
        if depth == n {
            let mut value = 0.0;
            let mut prev_level = 0usize;
            for (k, &lvl) in stack.iter().enumerate() {
                value += (lvl - prev_level) as f64 / units as f64 * interval_min[k];
                prev_level = lvl;
            }
            value += (units - prev_level) as f64 / units as f64 * interval_min[n];
            if value < *best {
                *best = value;
            }
            return;
        }
        let (lo, hi) = levels[depth];
        if lo.max(prev) > hi {
            return;
        }
        for lvl in lo.max(prev)..=hi {
            stack[depth] = lvl;
            enumerate(depth + 1, lvl, n, units, levels, interval_min, stack, best);
        }
    }
    let mut best = f64::INFINITY;
    let mut stack = vec![0usize; n];
    enumerate(0, 0, n, units, &levels, &interval_min, &mut stack, &mut best);
    if !best.is_finite() {
        return Err("NoFeasibleGridPoint: no monotone staircase admitted".into());
    }
    Ok(best)
}

/// Chi-square CDF by adaptive Simpson quadrature (independent of the
/// incomplete-gamma implementation). The `dof = 1` integrable singularity
/// is removed by the substitution `x = u^2`.
pub fn chi2_cdf_quadrature(dof: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = dof as f64;
    if dof == 1 {
        let g = |u: f64| (2.0 / core::f64::consts::PI).sqrt() * (-u * u / 2.0).exp();
        adaptive_simpson(&g, 0.0, x.sqrt(), 1e-12, 40)
    } else {
        let log_norm = -(k / 2.0) * (2.0f64).ln() - ln_gamma(k / 2.0);
        let f = |t: f64| {
            if t == 0.0 {
                if k < 2.0 {
                    f64::INFINITY
                } else if k == 2.0 {
                    (log_norm).exp()
                } else {
                    0.0
                }
            } else {
                (log_norm + (k / 2.0 - 1.0) * t.ln() - t / 2.0).exp()
            }
        };
        adaptive_simpson(&f, 0.0, x, 1e-12, 40)
    }
}

/// Chi-square quantile by bisection on the quadrature CDF.
pub fn chi2_quantile_quadrature(dof: u32, q: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = dof as f64 + 10.0 * (2.0 * dof as f64).sqrt() + 10.0;
    while chi2_cdf_quadrature(dof, hi) < q {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf_quadrature(dof, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
        let m = 0.5 * (a + b);
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, left, tol / 2.0, depth - 1) + rec(f, m, b, right, tol / 2.0, depth - 1)
        }
    }
    let whole = simpson(f, a, b);
    rec(f, a, b, whole, tol, depth)
}

/// Lanczos log-gamma, local to the oracle.
fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (core::f64::consts::PI / (core::f64::consts::PI * x).sin()).ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, &g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * core::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Exhaustive scalar-grid maximizer: returns the best `(x, g(x))`.
pub fn x_grid_max<G: FnMut(f64) -> f64>(mut g: G, lo: f64, hi: f64, steps: usize) -> (f64, f64) {
    let mut best = (lo, f64::NEG_INFINITY);
    for k in 0..=steps {
        let x = lo + (hi - lo) * k as f64 / steps as f64;
        let v = g(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

fn simplex_points_rec(
    depth: usize,
    remaining: usize,
    dim: usize,
    units: usize,
    cur: &mut [usize],
    out: &mut Vec<Vec<f64>>,
) {
    if depth == dim - 1 {
        cur[depth] = remaining;
        out.push(cur.iter().map(|&k| k as f64 / units as f64).collect());
        return;
    }
    for k in 0..=remaining {
        cur[depth] = k;
        simplex_points_rec(depth + 1, remaining - k, dim, units, cur, out);
    }
}

/// All simplex grid points of the given step, for certification sweeps.
pub fn simplex_grid_points(dim: usize, step: f64) -> Vec<Vec<f64>> {
    let units = (1.0 / step).round() as usize;
    let mut out = Vec::new();
    let mut current = vec![0usize; dim];
    simplex_points_rec(0, units, dim, units, &mut current, &mut out);
    out
}

/// Empirical KS statistic of sorted samples against U(0,1).
pub fn ks_statistic_uniform(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        sup = sup.max((x - i as f64 / n).abs()).max(((i as f64 + 1.0) / n - x).abs());
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_min_trivial_constant_payoff() {
        let obs = ObservationSet::from_scalar(&[0.0, 1.0], &[1, 1]).unwrap();
        let res = simplex_grid_min(&obs, -1e6, &[3.0, 3.0], 1e-3, &[]).unwrap();
        assert!((res.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn grid_min_vertex_adjacent_for_loose_gamma() {
        // The exact vertex is excluded by the log constraint; the nearest
        // grid point (1 - step, step) has value = step.
        let obs = ObservationSet::from_scalar(&[0.0, 1.0], &[1, 1]).unwrap();
        let res = simplex_grid_min(&obs, -1e6, &[0.0, 1.0], 1e-3, &[]).unwrap();
        assert!((res.value - 1e-3).abs() < 1e-12, "{}", res.value);
        assert!((res.argmin[0] - 0.999).abs() < 1e-12);
    }

    #[test]
    fn chi2_quadrature_matches_closed_form_dof2() {
        // dof 2: CDF = 1 - exp(-x/2).
        for x in [0.5, 2.0, 5.991464547107979] {
            let got = chi2_cdf_quadrature(2, x);
            let want = 1.0 - (-x / 2.0f64).exp();
            assert!((got - want).abs() < 1e-10, "x={x} got={got} want={want}");
        }
    }

    #[test]
    fn staircase_oracle_handles_width_zero_band() {
        let band = CdfBand::new(
            vec![1.0, 2.0, 3.0],
            vec![0.25, 0.5, 1.0],
            vec![0.25, 0.5, 1.0],
        )
        .unwrap();
        let bounds = SupportBounds::new(1.0, 3.0).unwrap();
        let v = staircase_cdf_min(&band, |x| x, 0.05, 10_000, bounds).unwrap();
        assert!((v - 1.5).abs() < 1e-9, "{v}");
    }
}
