//! Derivative-free minimization (Nelder–Mead with adaptive coefficients).

/// Result of a simplex minimization.
#[derive(Debug, Clone)]
pub(crate) struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    #[allow(dead_code)]
    pub evals: usize,
    pub converged: bool,
}

/// Minimize `f` from `x0` with per-coordinate initial steps `steps`.
///
/// Uses the adaptive-coefficient variant (reflection 1, expansion
/// 1 + 2/d, contraction 0.75 - 1/(2d), shrink 1 - 1/d), which behaves
/// better than the classic constants in dimensions above two. The
/// objective may return non-finite values; those vertices are treated
/// as worst. Converges when the spread of vertex values falls below
/// `ftol` relative to the best value.
pub(crate) fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    ftol: f64,
    max_evals: usize,
) -> OptimResult {
    let d = x0.len();
    assert!(d >= 1 && steps.len() == d);
    let dd = d as f64;
    let alpha = 1.0;
    let gamma = 1.0 + 2.0 / dd;
    let beta = 0.75 - 1.0 / (2.0 * dd);
    let delta = 1.0 - 1.0 / dd;

    let clean = |v: f64| if v.is_finite() { v } else { f64::INFINITY };

    let mut evals = 0usize;
    let eval = |f: &mut F, x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        clean(f(x))
    };

    // Initial simplex: x0 plus one perturbed vertex per coordinate.
    let mut verts: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    verts.push(x0.to_vec());
    for i in 0..d {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        verts.push(v);
    }
    let mut vals: Vec<f64> = verts
        .iter()
        .map(|v| eval(&mut f, v, &mut evals))
        .collect();

    let mut converged = false;
    while evals < max_evals {
        // Order vertices by value.
        let mut idx: Vec<usize> = (0..=d).collect();
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
        let best = idx[0];
        let worst = idx[d];
        let second_worst = idx[d - 1];

        let spread = vals[worst] - vals[best];
        let scale = vals[best].abs().max(1.0);
        if spread.is_finite() && spread <= ftol * scale {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; d];
        for &i in idx.iter().take(d) {
            for (c, &x) in centroid.iter_mut().zip(&verts[i]) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= dd;
        }

        let lerp = |from: &[f64], coeff: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(&c, &x)| c + coeff * (c - x))
                .collect()
        };

        let reflected = lerp(&verts[worst], alpha);
        let f_r = eval(&mut f, &reflected, &mut evals);

        if f_r < vals[best] {
            let expanded = lerp(&verts[worst], gamma);
            let f_e = eval(&mut f, &expanded, &mut evals);
            if f_e < f_r {
                verts[worst] = expanded;
                vals[worst] = f_e;
            } else {
                verts[worst] = reflected;
                vals[worst] = f_r;
            }
        } else if f_r < vals[second_worst] {
            verts[worst] = reflected;
            vals[worst] = f_r;
        } else {
            // Contract toward the better of worst/reflected.
            let (anchor, f_anchor) = if f_r < vals[worst] {
                (reflected.clone(), f_r)
            } else {
                (verts[worst].clone(), vals[worst])
            };
            let contracted = lerp(&anchor, -beta);
            let f_c = eval(&mut f, &contracted, &mut evals);
            if f_c < f_anchor {
                verts[worst] = contracted;
                vals[worst] = f_c;
            } else {
                // Shrink everything toward the best vertex.
                let anchor_v = verts[best].clone();
                for &i in idx.iter().skip(1) {
                    let v: Vec<f64> = anchor_v
                        .iter()
                        .zip(&verts[i])
                        .map(|(&b, &x)| b + delta * (x - b))
                        .collect();
                    vals[i] = eval(&mut f, &v, &mut evals);
                    verts[i] = v;
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=d {
        if vals[i] < vals[best] {
            best = i;
        }
    }
    OptimResult {
        x: verts.swap_remove(best),
        f: vals[best],
        evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = nelder_mead(
            |x| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2),
            &[0.0, 0.0],
            &[0.5, 0.5],
            1e-12,
            2000,
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.5).abs() < 1e-5);
        assert!((r.x[1] + 0.5).abs() < 1e-5);
    }

    #[test]
    fn rosenbrock_two_dim() {
        let r = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &[0.1, 0.1],
            1e-14,
            5000,
        );
        assert!((r.x[0] - 1.0).abs() < 1e-4, "{:?}", r.x);
        assert!((r.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn five_dim_sphere() {
        let r = nelder_mead(
            |x| x.iter().map(|v| v * v).sum::<f64>() + 2.0,
            &[1.0, -1.0, 0.5, 2.0, -0.3],
            &[0.4; 5],
            1e-13,
            10_000,
        );
        assert!(r.converged);
        for v in &r.x {
            assert!(v.abs() < 1e-4);
        }
        assert!((r.f - 2.0).abs() < 1e-7);
    }

    #[test]
    fn tolerates_infinite_regions() {
        // Objective is infinite for x < 0; minimum at the boundary edge.
        let r = nelder_mead(
            |x| {
                if x[0] < 0.0 {
                    f64::INFINITY
                } else {
                    (x[0] - 0.3).powi(2)
                }
            },
            &[2.0],
            &[0.5],
            1e-12,
            2000,
        );
        assert!((r.x[0] - 0.3).abs() < 1e-5);
    }
}
