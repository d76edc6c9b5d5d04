//! Highest-density contour polylines for mixture components, exported
//! in degrees for plotting.

use std::collections::HashMap;

use bvm::{log_norm_constant, sample, BvmSineParams, MixtureModel, SeriesConfig};

/// Fraction of a component's probability mass the contour encloses.
const TARGET_MASS: f64 = 0.80;
/// Samples drawn per component to locate the density level.
const THRESHOLD_SAMPLES: usize = 100_000;
/// Contour grid resolution: one cell per degree on each axis.
const GRID_CELLS: usize = 360;

/// One traced polyline of a component's density level set.
#[derive(Debug, Clone)]
pub struct ContourRing {
    pub component_id: usize,
    /// Vertices in degrees; for a closed ring the last vertex repeats
    /// the first.
    pub vertices: Vec<(f64, f64)>,
    pub closed: bool,
}

fn log_density_at(p: &BvmSineParams, log_c: f64, theta1: f64, theta2: f64) -> f64 {
    let d1 = theta1 - p.mu1();
    let d2 = theta2 - p.mu2();
    p.kappa1() * d1.cos() + p.kappa2() * d2.cos() + p.lambda() * d1.sin() * d2.sin() - log_c
}

/// Log-density level enclosing [`TARGET_MASS`] of the component: the
/// complementary quantile of the densities of its own samples.
pub fn log_density_threshold(p: &BvmSineParams, seed: u64) -> anyhow::Result<f64> {
    let log_c = log_norm_constant(p, &SeriesConfig::tight())?;
    let points = sample(p, THRESHOLD_SAMPLES, seed)?;
    let mut densities: Vec<f64> = points
        .iter()
        .map(|pt| log_density_at(p, log_c, pt.theta1(), pt.theta2()))
        .collect();
    densities.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cut = ((1.0 - TARGET_MASS) * THRESHOLD_SAMPLES as f64) as usize;
    Ok(densities[cut])
}

fn mix_seed(seed: u64, component: u64) -> u64 {
    let mut z = seed ^ (component + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

type Key = (i64, i64);

fn key_of(p: (f64, f64)) -> Key {
    ((p.0 * 1e6).round() as i64, (p.1 * 1e6).round() as i64)
}

/// Trace the zero level of `field` (node-sampled on a uniform degree
/// grid over [−180, 180]²) with marching squares, then chain the
/// segments into polylines.
fn trace_zero_level(field: &[Vec<f64>], component_id: usize) -> Vec<ContourRing> {
    let step = 360.0 / GRID_CELLS as f64;
    let at = |i: usize, j: usize| (-180.0 + i as f64 * step, -180.0 + j as f64 * step);
    let mut segments: Vec<((f64, f64), (f64, f64))> = Vec::new();

    for i in 0..GRID_CELLS {
        for j in 0..GRID_CELLS {
            let g0 = field[i][j];
            let g1 = field[i + 1][j];
            let g2 = field[i + 1][j + 1];
            let g3 = field[i][j + 1];
            let code = usize::from(g0 >= 0.0)
                | usize::from(g1 >= 0.0) << 1
                | usize::from(g2 >= 0.0) << 2
                | usize::from(g3 >= 0.0) << 3;
            if code == 0 || code == 15 {
                continue;
            }
            let (x0, y0) = at(i, j);
            let lerp = |ga: f64, gb: f64| ga / (ga - gb);
            // Crossing points on the bottom, right, top, and left edges.
            let e0 = (x0 + step * lerp(g0, g1), y0);
            let e1 = (x0 + step, y0 + step * lerp(g1, g2));
            let e2 = (x0 + step * lerp(g3, g2), y0 + step);
            let e3 = (x0, y0 + step * lerp(g0, g3));
            let center_inside = g0 + g1 + g2 + g3 >= 0.0;
            let mut push = |a: (f64, f64), b: (f64, f64)| segments.push((a, b));
            match code {
                1 => push(e3, e0),
                2 => push(e0, e1),
                3 => push(e3, e1),
                4 => push(e1, e2),
                5 => {
                    if center_inside {
                        push(e3, e2);
                        push(e0, e1);
                    } else {
                        push(e3, e0);
                        push(e1, e2);
                    }
                }
                6 => push(e0, e2),
                7 => push(e3, e2),
                8 => push(e2, e3),
                9 => push(e0, e2),
                10 => {
                    if center_inside {
                        push(e0, e1);
                        push(e2, e3);
                    } else {
                        push(e0, e3);
                        push(e1, e2);
                    }
                }
                11 => push(e1, e2),
                12 => push(e1, e3),
                13 => push(e0, e1),
                14 => push(e3, e0),
                _ => unreachable!(),
            }
        }
    }

    chain_segments(&segments, component_id)
}

fn chain_segments(
    segments: &[((f64, f64), (f64, f64))],
    component_id: usize,
) -> Vec<ContourRing> {
    // A level passing exactly through a grid node yields zero-length
    // segments; drop them so junction degrees stay at two.
    let segments: Vec<((f64, f64), (f64, f64))> = segments
        .iter()
        .copied()
        .filter(|(a, b)| key_of(*a) != key_of(*b))
        .collect();
    let mut by_endpoint: HashMap<Key, Vec<usize>> = HashMap::new();
    for (idx, seg) in segments.iter().enumerate() {
        by_endpoint.entry(key_of(seg.0)).or_default().push(idx);
        by_endpoint.entry(key_of(seg.1)).or_default().push(idx);
    }

    let mut used = vec![false; segments.len()];
    let mut rings = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut path = vec![segments[start].0, segments[start].1];
        // Extend forward from the tail, then backward from the head.
        for forward in [true, false] {
            loop {
                let tip = if forward { *path.last().unwrap() } else { path[0] };
                let Some(cands) = by_endpoint.get(&key_of(tip)) else {
                    break;
                };
                let next = cands.iter().copied().find(|&s| !used[s]);
                let Some(s) = next else { break };
                used[s] = true;
                let (a, b) = segments[s];
                let other = if key_of(a) == key_of(tip) { b } else { a };
                if forward {
                    path.push(other);
                } else {
                    path.insert(0, other);
                }
            }
        }
        let closed = path.len() > 2 && key_of(path[0]) == key_of(*path.last().unwrap());
        if closed {
            let head = path[0];
            *path.last_mut().unwrap() = head;
        }
        rings.push(ContourRing {
            component_id,
            vertices: path,
            closed,
        });
    }
    rings
}

/// Contour of one parameter set at its [`TARGET_MASS`] density level.
pub fn contour_for_params(
    p: &BvmSineParams,
    component_id: usize,
    seed: u64,
) -> anyhow::Result<Vec<ContourRing>> {
    let threshold = log_density_threshold(p, seed)?;
    let log_c = log_norm_constant(p, &SeriesConfig::tight())?;
    let step = 360.0 / GRID_CELLS as f64;
    let mut field = vec![vec![0.0; GRID_CELLS + 1]; GRID_CELLS + 1];
    for (i, row) in field.iter_mut().enumerate() {
        let theta1 = (-180.0 + i as f64 * step).to_radians();
        for (j, cell) in row.iter_mut().enumerate() {
            let theta2 = (-180.0 + j as f64 * step).to_radians();
            *cell = log_density_at(p, log_c, theta1, theta2) - threshold;
        }
    }
    Ok(trace_zero_level(&field, component_id))
}

/// Contours for every component of a fitted mixture; per-component
/// sampling seeds are derived from `seed`.
pub fn component_contours(model: &MixtureModel, seed: u64) -> anyhow::Result<Vec<ContourRing>> {
    let mut rings = Vec::new();
    for (j, comp) in model.components().iter().enumerate() {
        rings.extend(contour_for_params(
            comp.params(),
            j,
            mix_seed(seed, j as u64),
        )?);
    }
    Ok(rings)
}

/// Render rings as `component_id,vertex_index,phi_deg,psi_deg` CSV;
/// the vertex index restarts at zero on each new ring.
pub fn contour_csv(rings: &[ContourRing]) -> String {
    let mut csv = String::from("component_id,vertex_index,phi_deg,psi_deg\n");
    for ring in rings {
        for (idx, (phi, psi)) in ring.vertices.iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{:.4},{:.4}\n",
                ring.component_id, idx, phi, psi
            ));
        }
    }
    csv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn isotropic() -> BvmSineParams {
        BvmSineParams::new(0.5, -0.3, 20.0, 20.0, 0.0).unwrap()
    }

    #[test]
    fn threshold_encloses_eighty_percent_of_fresh_samples() {
        let p = isotropic();
        let threshold = log_density_threshold(&p, 1).unwrap();
        let log_c = log_norm_constant(&p, &SeriesConfig::tight()).unwrap();
        let fresh = sample(&p, 100_000, 999).unwrap();
        let inside = fresh
            .iter()
            .filter(|pt| log_density_at(&p, log_c, pt.theta1(), pt.theta2()) >= threshold)
            .count();
        let frac = inside as f64 / fresh.len() as f64;
        assert!((frac - 0.80).abs() < 0.02, "inside fraction {frac}");
    }

    #[test]
    fn isotropic_component_gives_one_circular_ring() {
        let p = isotropic();
        let rings = contour_for_params(&p, 0, 7).unwrap();
        assert_eq!(rings.len(), 1);
        let ring = &rings[0];
        assert!(ring.closed);
        assert!(ring.vertices.len() > 20);
        let (c1, c2) = (0.5f64.to_degrees(), (-0.3f64).to_degrees());
        let radii: Vec<f64> = ring
            .vertices
            .iter()
            .map(|(x, y)| ((x - c1).powi(2) + (y - c2).powi(2)).sqrt())
            .collect();
        let mean = radii.iter().sum::<f64>() / radii.len() as f64;
        for r in &radii {
            assert!(
                (r - mean).abs() < 0.15 * mean,
                "radius {r} strays from mean {mean}"
            );
        }
    }

    #[test]
    fn csv_restarts_vertex_index_per_ring() {
        let rings = vec![
            ContourRing {
                component_id: 0,
                vertices: vec![(0.0, 0.0), (1.0, 0.0)],
                closed: false,
            },
            ContourRing {
                component_id: 1,
                vertices: vec![(2.0, 2.0), (3.0, 2.0)],
                closed: false,
            },
        ];
        let csv = contour_csv(&rings);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "component_id,vertex_index,phi_deg,psi_deg");
        assert_eq!(lines[1], "0,0,0.0000,0.0000");
        assert_eq!(lines[3], "1,0,2.0000,2.0000");
    }

    #[test]
    fn marching_squares_traces_a_known_disc() {
        // Zero level of r² − 50.5² around the grid center: a circle
        // of radius 50.5 degrees (kept off the integer lattice so no
        // node sits exactly on the level).
        let step = 360.0 / GRID_CELLS as f64;
        let mut field = vec![vec![0.0; GRID_CELLS + 1]; GRID_CELLS + 1];
        for (i, row) in field.iter_mut().enumerate() {
            let x = -180.0 + i as f64 * step;
            for (j, cell) in row.iter_mut().enumerate() {
                let y = -180.0 + j as f64 * step;
                *cell = 50.5f64.powi(2) - x * x - y * y;
            }
        }
        let rings = trace_zero_level(&field, 3);
        assert_eq!(rings.len(), 1);
        assert!(rings[0].closed);
        assert_eq!(rings[0].component_id, 3);
        for (x, y) in &rings[0].vertices {
            let r = (x * x + y * y).sqrt();
            assert!((r - 50.5).abs() < 0.5, "vertex radius {r}");
        }
    }
}
