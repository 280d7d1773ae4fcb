//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use smtplace_core::domain::{
    ComponentDirectory, ComponentType, Package, PasteState, FEATURE_DIM, PLACEMENT_OFFSET,
};
use smtplace_core::nlp::{Bounds, NlpProblem, Thresholds};
use smtplace_core::SvrModel;

/// Mean paste state of the reference line.
pub fn mean_paste() -> PasteState {
    PasteState {
        volume_avg_pct: 95.25,
        volume_diff_pct: 2.21,
        paste_offset_x1: 403.96,
        paste_offset_y1: 129.22,
        paste_offset_x2: -216.29,
        paste_offset_y2: 130.00,
    }
}

pub fn resistor_1005() -> ComponentDirectory {
    ComponentDirectory::preset(ComponentType::Resistor, Package::P1005)
}

/// Linear stub `bias + sum_k coeffs[k] * chi_k` over the placement slots.
pub fn placement_stub(coeffs: [f64; 3], bias: f64) -> SvrModel {
    let mut w = vec![0.0; FEATURE_DIM];
    w[PLACEMENT_OFFSET..PLACEMENT_OFFSET + 3].copy_from_slice(&coeffs);
    SvrModel::from_weights(w, bias)
}

/// F_x = chi_1, F_y = chi_2, F_theta = chi_3.
pub fn identity_stubs() -> [SvrModel; 3] {
    [
        placement_stub([1.0, 0.0, 0.0], 0.0),
        placement_stub([0.0, 1.0, 0.0], 0.0),
        placement_stub([0.0, 0.0, 1.0], 0.0),
    ]
}

/// The identity-stub problem on the box (0, 94) x (0, 130) x (0, 2).
pub fn identity_problem(stubs: &[SvrModel; 3]) -> NlpProblem<'_> {
    NlpProblem::new(
        resistor_1005(),
        mean_paste(),
        [&stubs[0], &stubs[1], &stubs[2]],
    )
    .unwrap()
    .with_bounds(Bounds::from_pairs([(0.0, 94.0), (0.0, 130.0), (0.0, 2.0)]))
    .unwrap()
}

/// `1/2 |w|^2 + C sum max(0, |y - <w, x> - b| - eps)`, written out directly.
pub fn svr_primal(w: &[f64], b: f64, xs: &[Vec<f64>], ys: &[f64], c: f64, eps: f64) -> f64 {
    let mut loss = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let f: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b;
        loss += ((y - f).abs() - eps).max(0.0);
    }
    0.5 * w.iter().map(|v| v * v).sum::<f64>() + c * loss
}

/// Dense-grid primal optimum for one or two features.
///
/// `w` runs over a grid of the given step on `[-radius, radius]^d`. For a
/// fixed `w` the primal is convex and piecewise linear in `b` with kinks at
/// `r_i - eps` and `r_i + eps`, so its minimum over `b` is attained at one of
/// those kinks and is found exactly by trying them all.
pub fn svr_grid_optimum(
    xs: &[Vec<f64>],
    ys: &[f64],
    c: f64,
    eps: f64,
    step: f64,
    radius: f64,
) -> f64 {
    let d = xs[0].len();
    assert!(d == 1 || d == 2);
    let k = (radius / step).round() as i64;
    let mut best = f64::INFINITY;
    let mut w = vec![0.0; d];
    let mut kinks = Vec::with_capacity(2 * ys.len());
    let k2 = if d == 2 { k } else { 0 };
    for a in -k..=k {
        for bb in -k2..=k2 {
            w[0] = a as f64 * step;
            if d == 2 {
                w[1] = bb as f64 * step;
            }
            kinks.clear();
            for (x, y) in xs.iter().zip(ys) {
                let r = y - w.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
                kinks.push(r - eps);
                kinks.push(r + eps);
            }
            for &b in &kinks {
                best = best.min(svr_primal(&w, b, xs, ys, c, eps));
            }
        }
    }
    best
}

/// Exhaustive best split of 1-D data: every midpoint between consecutive
/// distinct values, child SSE computed from scratch with two-pass means.
/// Returns (threshold, child SSE), first minimum in ascending threshold order.
pub fn exhaustive_split_1d(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let mut values: Vec<f64> = xs.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let sse = |part: &[f64]| {
        let m = part.iter().sum::<f64>() / part.len() as f64;
        part.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
    };
    let mut best: Option<(f64, f64)> = None;
    for pair in values.windows(2) {
        let t = 0.5 * (pair[0] + pair[1]);
        let left: Vec<f64> = xs
            .iter()
            .zip(ys)
            .filter(|(x, _)| **x <= t)
            .map(|(_, y)| *y)
            .collect();
        let right: Vec<f64> = xs
            .iter()
            .zip(ys)
            .filter(|(x, _)| **x > t)
            .map(|(_, y)| *y)
            .collect();
        let total = sse(&left) + sse(&right);
        if best.is_none_or(|(_, s)| total < s) {
            best = Some((t, total));
        }
    }
    best
}

/// Grid optimum of a problem over its (x, y) box at 1% of each width, with
/// theta pinned at its lower bound. Also returns the feasible fraction.
pub fn grid_optimum_2d(problem: &NlpProblem<'_>) -> (f64, f64) {
    let b = &problem.bounds;
    let mut best = f64::INFINITY;
    let mut feasible = 0usize;
    let steps = 100;
    for i in 0..=steps {
        for j in 0..=steps {
            let chi = smtplace_core::PlacementSetting::new(
                b.lower[0] + b.width(0) * i as f64 / steps as f64,
                b.lower[1] + b.width(1) * j as f64 / steps as f64,
                b.lower[2],
            );
            let e = problem.evaluate(&chi).unwrap();
            if e.feasibility.feasible {
                feasible += 1;
                best = best.min(e.objective.unwrap());
            }
        }
    }
    (best, feasible as f64 / ((steps + 1) * (steps + 1)) as f64)
}

/// Draws linear stub coefficients and thresholds for the grid comparison;
/// redraws until at least a fifth of the grid is feasible.
pub fn random_stub_problem(seed: u64) -> ([SvrModel; 3], Thresholds, Bounds) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let width = 100.0;
    loop {
        let fx = placement_stub(
            [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                0.0,
            ],
            rng.random_range(-60.0..60.0),
        );
        let fy = placement_stub(
            [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                0.0,
            ],
            rng.random_range(-60.0..60.0),
        );
        let ft = placement_stub([0.0, 0.0, 0.0], 0.0);
        let thresholds = Thresholds {
            tau_theta: 2.0,
            tau_x: rng.random_range(30.0..120.0),
            tau_y: rng.random_range(30.0..120.0),
        };
        let lo = [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)];
        let bounds =
            Bounds::from_pairs([(lo[0], lo[0] + width), (lo[1], lo[1] + width), (0.0, 0.0)]);
        let stubs = [fx, fy, ft];
        let problem = NlpProblem::new(
            resistor_1005(),
            mean_paste(),
            [&stubs[0], &stubs[1], &stubs[2]],
        )
        .unwrap()
        .with_thresholds(thresholds)
        .unwrap()
        .with_bounds(bounds)
        .unwrap();
        if grid_optimum_2d(&problem).1 >= 0.2 {
            return (stubs, thresholds, bounds);
        }
    }
}
