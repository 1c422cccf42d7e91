//! Level-set extraction on a rectilinear grid by marching squares.

use std::collections::HashMap;

pub type Polyline = Vec<[f64; 2]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    /// Between (row, col) and (row, col + 1).
    H(usize, usize),
    /// Between (row, col) and (row + 1, col).
    V(usize, usize),
}

/// Polylines of `{value = level}` for `values` stored row-major with rows
/// along `ys` and columns along `xs`. Vertices are linear interpolations on
/// grid edges; open curves end on the grid border, closed ones repeat their
/// first vertex. Cells touching a NaN are skipped.
pub fn marching_squares(xs: &[f64], ys: &[f64], values: &[f64], level: f64) -> Vec<Polyline> {
    let (nx, ny) = (xs.len(), ys.len());
    assert_eq!(values.len(), nx * ny, "values must be ny × nx");
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let at = |j: usize, i: usize| values[j * nx + i];
    let above = |v: f64| v >= level;

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (bl, br, tr, tl) = (at(j, i), at(j, i + 1), at(j + 1, i + 1), at(j + 1, i));
            if [bl, br, tr, tl].iter().any(|v| v.is_nan()) {
                continue;
            }
            let (a_bl, a_br, a_tr, a_tl) = (above(bl), above(br), above(tr), above(tl));
            let bottom = Edge::H(j, i);
            let top = Edge::H(j + 1, i);
            let left = Edge::V(j, i);
            let right = Edge::V(j, i + 1);
            let mut crossed = Vec::with_capacity(4);
            if a_bl != a_br {
                crossed.push(bottom);
            }
            if a_br != a_tr {
                crossed.push(right);
            }
            if a_tr != a_tl {
                crossed.push(top);
            }
            if a_tl != a_bl {
                crossed.push(left);
            }
            match crossed.len() {
                2 => segments.push((crossed[0], crossed[1])),
                4 => {
                    let centre = above(0.25 * (bl + br + tr + tl));
                    if a_bl != centre {
                        segments.push((left, bottom));
                        segments.push((top, right));
                    } else {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    }
                }
                _ => {}
            }
        }
    }

    let point = |e: Edge| -> [f64; 2] {
        let frac = |v0: f64, v1: f64| ((level - v0) / (v1 - v0)).clamp(0.0, 1.0);
        match e {
            Edge::H(j, i) => {
                let t = frac(at(j, i), at(j, i + 1));
                [xs[i] + t * (xs[i + 1] - xs[i]), ys[j]]
            }
            Edge::V(j, i) => {
                let t = frac(at(j, i), at(j + 1, i));
                [xs[i], ys[j] + t * (ys[j + 1] - ys[j])]
            }
        }
    };

    let mut by_edge: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        by_edge.entry(*a).or_default().push(k);
        by_edge.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let walk = |start: usize, from: Edge, used: &mut Vec<bool>| -> Polyline {
        let mut edges = vec![from];
        let mut seg = start;
        let mut cur = from;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == cur { b } else { a };
            edges.push(next);
            cur = next;
            match by_edge[&cur].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        edges.into_iter().map(point).collect()
    };

    let mut out = Vec::new();
    // Open curves first, started from an end that touches only one segment.
    for k in 0..segments.len() {
        if used[k] {
            continue;
        }
        let (a, b) = segments[k];
        if by_edge[&a].len() == 1 {
            out.push(walk(k, a, &mut used));
        } else if by_edge[&b].len() == 1 {
            out.push(walk(k, b, &mut used));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            out.push(walk(k, segments[k].0, &mut used));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertical_line() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.0, 1.0, 2.0];
        let v: Vec<f64> = (0..9).map(|k| (k % 3) as f64).collect();
        let lines = marching_squares(&xs, &ys, &v, 0.5);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), 3);
        for pt in &lines[0] {
            assert!((pt[0] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_ring() {
        let xs: Vec<f64> = (0..5).map(f64::from).collect();
        let ys = xs.clone();
        let mut v = vec![0.0; 25];
        v[2 * 5 + 2] = 1.0;
        let lines = marching_squares(&xs, &ys, &v, 0.5);
        assert_eq!(lines.len(), 1);
        let ring = &lines[0];
        assert_eq!(ring.first(), ring.last());
        assert_eq!(ring.len(), 5);
    }

    #[test]
    fn flat_field_has_no_contour() {
        let xs = [0.0, 1.0];
        assert!(marching_squares(&xs, &xs, &[1.0; 4], 0.5).is_empty());
        assert!(marching_squares(&[0.0], &xs, &[1.0, 0.0], 0.5).is_empty());
    }

    #[test]
    fn saddle_yields_two_segments() {
        let xs = [0.0, 1.0];
        let lines = marching_squares(&xs, &xs, &[1.0, 0.0, 0.0, 1.0], 0.5);
        assert_eq!(lines.len(), 2);
    }
}
