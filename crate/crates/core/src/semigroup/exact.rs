use alloc::collections::VecDeque;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by std inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Three-point Lagrange interpolation around the nearest node, with the
/// argument clamped into the box.
pub fn quadratic_interpolate(f: &GridFunction, x: f64) -> f64 {
    let (n, h) = (f.n(), f.h());
    let x = x.clamp(f.lo(), f.hi());
    let s = (x - f.lo()) / h;
    let c = (s.round() as usize).clamp(1, n - 2);
    let u = s - c as f64;
    let v = f.values();
    let (a, b, d) = (v[c - 1], v[c], v[c + 1]);
    b + 0.5 * u * (d - a) + 0.5 * u * u * (d - 2.0 * b + a)
}

/// `x ↦ sup_{|s| ≤ t} f(x + s)` in one dimension.
///
/// Sliding-window maximum over the `⌊t/h⌋` neighbouring nodes, the window
/// endpoints `x ± t` evaluated by quadratic interpolation, and a parabolic
/// vertex refinement around the discrete maximiser.
pub fn drift_uncertainty_exact(f: &GridFunction, t: f64) -> Result<GridFunction> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: f.dim() });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!("t = {t} must be nonnegative")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let (n, h) = (f.n(), f.h());
    let v = f.values();
    let k = ((t / h) * (1.0 + 1e-12)).floor() as usize;
    let window_max = sliding_max(v, k);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = f.coordinate(i);
        let j = window_max[i];
        let mut best = v[j];
        best = best.max(quadratic_interpolate(f, x - t)).max(quadratic_interpolate(f, x + t));
        if j > 0 && j + 1 < n {
            let (a, b, c) = (v[j - 1], v[j], v[j + 1]);
            let curv = a - 2.0 * b + c;
            // Only strict discrete maxima; flat tops would overshoot.
            if b > a && b > c {
                let delta = 0.5 * (a - c) / curv;
                let xv = f.coordinate(j) + delta * h;
                // Vertex must lie in the window and between the fitted nodes.
                if delta.abs() <= 1.0 && (xv - x).abs() <= t {
                    best = best.max(b - 0.125 * (c - a) * (c - a) / curv);
                }
            }
        }
        out.push(best);
    }
    f.with_values(out)
}

/// Index of the first maximum of `v[i-k ..= i+k]` (clipped) for every `i`.
fn sliding_max(v: &[f64], k: usize) -> Vec<usize> {
    let n = v.len();
    let mut out = Vec::with_capacity(n);
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        let hi = (i + k).min(n - 1);
        while next <= hi {
            while let Some(&back) = deque.back() {
                if v[back] < v[next] {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(k);
        while let Some(&front) = deque.front() {
            if front < lo {
                deque.pop_front();
            } else {
                break;
            }
        }
        out.push(*deque.front().expect("window is nonempty"));
    }
    out
}
