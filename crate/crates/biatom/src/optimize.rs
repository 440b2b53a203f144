//! Operating-point search: coarse grid scan followed by Nelder–Mead
//! refinement. Objectives are plain closures so the CLI can maximize channel
//! probabilities or minimize nonlinear norms over any parameter subset.

/// One evaluation of the optimizer trace.
#[derive(Debug, Clone)]
pub struct TracePoint {
    pub x: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

/// Axis of the search box.
#[derive(Debug, Clone)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub scan_points: usize,
}

fn clamp_to(axes: &[Axis], x: &mut [f64]) {
    for (v, a) in x.iter_mut().zip(axes) {
        *v = v.clamp(a.lo, a.hi);
    }
}

/// Maximize `f` over the box: full-factorial scan then Nelder–Mead from the
/// best scan point. `tol` is the simplex-size stopping threshold in units of
/// each axis span.
pub fn maximize(
    axes: &[Axis],
    f: &dyn Fn(&[f64]) -> f64,
    tol: f64,
    max_evals: usize,
) -> OptimizeResult {
    let dim = axes.len();
    assert!(dim >= 1, "need at least one axis");
    let mut trace = Vec::new();
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64], trace: &mut Vec<TracePoint>| {
        evals.set(evals.get() + 1);
        let v = f(x);
        trace.push(TracePoint { x: x.to_vec(), value: v });
        v
    };

    // coarse scan
    let mut best_x: Vec<f64> = axes.iter().map(|a| 0.5 * (a.lo + a.hi)).collect();
    let mut best_v = f64::NEG_INFINITY;
    let mut idx = vec![0usize; dim];
    loop {
        let x: Vec<f64> = idx
            .iter()
            .zip(axes)
            .map(|(&i, a)| {
                if a.scan_points <= 1 {
                    0.5 * (a.lo + a.hi)
                } else {
                    a.lo + (a.hi - a.lo) * i as f64 / (a.scan_points - 1) as f64
                }
            })
            .collect();
        let v = eval(&x, &mut trace);
        if v > best_v {
            best_v = v;
            best_x = x;
        }
        // advance the mixed-radix counter
        let mut d = 0;
        loop {
            if d == dim {
                break;
            }
            idx[d] += 1;
            if idx[d] < axes[d].scan_points.max(1) {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == dim {
            break;
        }
    }

    // Nelder-Mead refinement
    let spans: Vec<f64> = axes.iter().map(|a| a.hi - a.lo).collect();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((best_x.clone(), best_v));
    for d in 0..dim {
        let mut x = best_x.clone();
        let step = 0.1 * spans[d];
        x[d] = if x[d] + step <= axes[d].hi { x[d] + step } else { x[d] - step };
        clamp_to(axes, &mut x);
        let v = eval(&x, &mut trace);
        simplex.push((x, v));
    }
    let (alpha, gamma, rho_c, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    while evals.get() < max_evals {
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let size: f64 = (1..=dim)
            .map(|i| {
                simplex[i]
                    .0
                    .iter()
                    .zip(&simplex[0].0)
                    .zip(&spans)
                    .map(|((a, b), s)| ((a - b) / s).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if size < tol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|d| simplex[..dim].iter().map(|(x, _)| x[d]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let mut xr: Vec<f64> =
            centroid.iter().zip(&worst.0).map(|(c, w)| c + alpha * (c - w)).collect();
        clamp_to(axes, &mut xr);
        let vr = eval(&xr, &mut trace);
        if vr > simplex[0].1 {
            let mut xe: Vec<f64> =
                centroid.iter().zip(&worst.0).map(|(c, w)| c + gamma * (c - w)).collect();
            clamp_to(axes, &mut xe);
            let ve = eval(&xe, &mut trace);
            simplex[dim] = if ve > vr { (xe, ve) } else { (xr, vr) };
        } else if vr > simplex[dim - 1].1 {
            simplex[dim] = (xr, vr);
        } else {
            let mut xc: Vec<f64> =
                centroid.iter().zip(&worst.0).map(|(c, w)| c + rho_c * (w - c)).collect();
            clamp_to(axes, &mut xc);
            let vc = eval(&xc, &mut trace);
            if vc > worst.1 {
                simplex[dim] = (xc, vc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let mut x: Vec<f64> =
                        best.iter().zip(&item.0).map(|(b, x)| b + sigma * (x - b)).collect();
                    clamp_to(axes, &mut x);
                    let v = eval(&x, &mut trace);
                    *item = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    OptimizeResult {
        x: simplex[0].0.clone(),
        value: simplex[0].1,
        evaluations: evals.get(),
        converged,
        trace,
    }
}
