//! Planar geometry on PQ-plane points: convex rings, hulls, distances,
//! projections, Minkowski sums, and point-in-polygon tests.
//!
//! A "ring" is an open vertex list traversed cyclically. Convex rings are
//! counterclockwise. Degenerate rings (one or two vertices) are legal and
//! stand for a point or a segment.

use crate::num::Scalar;

pub type Pt<T> = [T; 2];

#[inline]
pub fn sub<T: Scalar>(a: Pt<T>, b: Pt<T>) -> Pt<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add<T: Scalar>(a: Pt<T>, b: Pt<T>) -> Pt<T> {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn cross<T: Scalar>(a: Pt<T>, b: Pt<T>) -> T {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn dot<T: Scalar>(a: Pt<T>, b: Pt<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn dist2<T: Scalar>(a: Pt<T>, b: Pt<T>) -> T {
    let d = sub(a, b);
    dot(d, d)
}

/// Signed area of a cyclic ring; positive when counterclockwise.
pub fn signed_area<T: Scalar>(ring: &[Pt<T>]) -> T {
    if ring.len() < 3 {
        return T::zero();
    }
    let mut acc = T::zero();
    for i in 0..ring.len() {
        let a = ring[i];
        let b = ring[(i + 1) % ring.len()];
        acc += cross(a, b);
    }
    acc / T::of(2.0)
}

/// Nearest point of segment [a, b] to p, with squared distance.
pub fn project_segment<T: Scalar>(p: Pt<T>, a: Pt<T>, b: Pt<T>) -> (T, Pt<T>) {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == T::zero() {
        return (dist2(p, a), a);
    }
    let t = (dot(sub(p, a), ab) / len2).max(T::zero()).min(T::one());
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    (dist2(p, q), q)
}

/// True when p lies inside or on a convex CCW ring with at least 3 vertices.
fn inside_convex<T: Scalar>(ring: &[Pt<T>], p: Pt<T>) -> bool {
    for i in 0..ring.len() {
        let a = ring[i];
        let b = ring[(i + 1) % ring.len()];
        if cross(sub(b, a), sub(p, a)) < T::zero() {
            return false;
        }
    }
    true
}

/// Nearest point of a convex ring (interior included) and its squared distance.
/// Handles degenerate one- and two-vertex rings.
pub fn project_convex<T: Scalar>(ring: &[Pt<T>], p: Pt<T>) -> (T, Pt<T>) {
    match ring.len() {
        0 => panic!("empty ring"),
        1 => (dist2(p, ring[0]), ring[0]),
        2 => project_segment(p, ring[0], ring[1]),
        _ => {
            if inside_convex(ring, p) {
                return (T::zero(), p);
            }
            let mut best = (T::infinity(), p);
            for i in 0..ring.len() {
                let cand = project_segment(p, ring[i], ring[(i + 1) % ring.len()]);
                if cand.0 < best.0 {
                    best = cand;
                }
            }
            best
        }
    }
}

/// Strict convex hull (collinear points dropped), CCW, via monotone chain.
/// Fewer than three distinct points come back as the degenerate ring.
pub fn convex_hull<T: Scalar>(points: &[Pt<T>]) -> Vec<Pt<T>> {
    let mut pts: Vec<Pt<T>> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Pt<T>> = Vec::with_capacity(pts.len() + 1);
    for pass in 0..2 {
        let start = hull.len();
        let it: Box<dyn Iterator<Item = &Pt<T>>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in it {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if cross(sub(b, a), sub(p, b)) <= T::zero() {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop(); // endpoint repeats as the next pass's start
    }
    if hull.is_empty() {
        // fully collinear input: keep the two extremes
        return vec![pts[0], pts[pts.len() - 1]];
    }
    hull
}

/// Drops duplicate and collinear-interior vertices from a convex ring.
pub fn simplify_ring<T: Scalar>(ring: &[Pt<T>], eps: T) -> Vec<Pt<T>> {
    let mut out: Vec<Pt<T>> = Vec::with_capacity(ring.len());
    for &p in ring {
        if out.last().map_or(false, |&q| dist2(p, q) <= eps * eps) {
            continue;
        }
        out.push(p);
    }
    while out.len() > 1 && dist2(out[0], *out.last().unwrap()) <= eps * eps {
        out.pop();
    }
    if out.len() < 3 {
        return out;
    }
    let mut kept: Vec<Pt<T>> = Vec::with_capacity(out.len());
    let n = out.len();
    for i in 0..n {
        let prev = out[(i + n - 1) % n];
        let cur = out[i];
        let next = out[(i + 1) % n];
        let c = cross(sub(cur, prev), sub(next, cur));
        let scale = dist2(prev, next).sqrt().max(T::one());
        if c.abs() > eps * scale {
            kept.push(cur);
        }
    }
    if kept.len() < 3 {
        // collinear ring collapses to its extremes
        let h = convex_hull(&out);
        return h;
    }
    kept
}

/// Minkowski sum of two convex CCW rings via the sorted edge merge.
pub fn minkowski_convex<T: Scalar>(a: &[Pt<T>], b: &[Pt<T>]) -> Vec<Pt<T>> {
    assert!(!a.is_empty() && !b.is_empty());
    if a.len() == 1 {
        return b.iter().map(|&p| add(p, a[0])).collect();
    }
    if b.len() == 1 {
        return a.iter().map(|&p| add(p, b[0])).collect();
    }
    let ea = monotone_edges(a);
    let eb = monotone_edges(b);
    let start = add(bottom_vertex(a), bottom_vertex(b));
    let mut edges: Vec<Pt<T>> = Vec::with_capacity(ea.len() + eb.len());
    let (mut i, mut j) = (0usize, 0usize);
    while i < ea.len() || j < eb.len() {
        if j >= eb.len() || (i < ea.len() && ea[i].1 <= eb[j].1) {
            edges.push(ea[i].0);
            i += 1;
        } else {
            edges.push(eb[j].0);
            j += 1;
        }
    }
    let mut ring = Vec::with_capacity(edges.len());
    let mut p = start;
    for e in &edges[..edges.len().saturating_sub(1)] {
        ring.push(p);
        p = add(p, *e);
    }
    ring.push(p);
    let scale = ring
        .iter()
        .map(|p| p[0].abs().max(p[1].abs()))
        .fold(T::one(), T::max);
    simplify_ring(&ring, T::of(1e-12) * scale)
}

fn bottom_vertex<T: Scalar>(ring: &[Pt<T>]) -> Pt<T> {
    *ring
        .iter()
        .min_by(|a, b| (a[1], a[0]).partial_cmp(&(b[1], b[0])).unwrap())
        .unwrap()
}

/// Ring edges starting at the bottom vertex, tagged with monotonically
/// unwrapped direction angles so two convex rings merge like sorted lists.
fn monotone_edges<T: Scalar>(ring: &[Pt<T>]) -> Vec<(Pt<T>, f64)> {
    let n = ring.len();
    let start = (0..n)
        .min_by(|&i, &j| {
            (ring[i][1], ring[i][0])
                .partial_cmp(&(ring[j][1], ring[j][0]))
                .unwrap()
        })
        .unwrap();
    let mut out = Vec::with_capacity(n);
    let mut prev_ang = f64::NEG_INFINITY;
    for k in 0..n {
        let a = ring[(start + k) % n];
        let b = ring[(start + k + 1) % n];
        let e = sub(b, a);
        let mut ang = e[1].to_f64_lossy().atan2(e[0].to_f64_lossy());
        if prev_ang.is_finite() {
            while ang < prev_ang - 1e-12 {
                ang += std::f64::consts::TAU;
            }
        }
        prev_ang = ang;
        out.push((e, ang));
    }
    out
}

/// Even-odd point-in-polygon for an arbitrary closed polyline; points within
/// `edge_tol` of an edge count as inside.
pub fn inside_polyline<T: Scalar>(poly: &[Pt<T>], p: Pt<T>, edge_tol: T) -> bool {
    if poly.len() < 3 {
        return poly
            .iter()
            .any(|&q| dist2(p, q).sqrt() <= edge_tol)
            || (poly.len() == 2 && project_segment(p, poly[0], poly[1]).0.sqrt() <= edge_tol);
    }
    let mut inside = false;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        if project_segment(p, a, b).0.sqrt() <= edge_tol {
            return true;
        }
        let (ay, by) = (a[1], b[1]);
        if (ay > p[1]) != (by > p[1]) {
            let t = (p[1] - ay) / (by - ay);
            let x = a[0] + t * (b[0] - a[0]);
            if x > p[0] {
                inside = !inside;
            }
        }
    }
    inside
}

/// Feasible [min, max] of the second coordinate on the vertical line x = p,
/// over one convex ring; None when the line misses the ring.
pub fn y_range_at_x<T: Scalar>(ring: &[Pt<T>], x: T) -> Option<(T, T)> {
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    let mut hit = false;
    let n = ring.len();
    if n == 1 {
        return (ring[0][0] == x).then(|| (ring[0][1], ring[0][1]));
    }
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if (a[0] - x) * (b[0] - x) > T::zero() {
            continue;
        }
        if a[0] == b[0] {
            if a[0] == x {
                lo = lo.min(a[1].min(b[1]));
                hi = hi.max(a[1].max(b[1]));
                hit = true;
            }
            continue;
        }
        let t = (x - a[0]) / (b[0] - a[0]);
        if (T::zero()..=T::one()).contains(&t) {
            let y = a[1] + t * (b[1] - a[1]);
            lo = lo.min(y);
            hi = hi.max(y);
            hit = true;
        }
    }
    hit.then_some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> Vec<Pt<f64>> {
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    }

    #[test]
    fn shoelace_of_unit_box_is_one() {
        assert_eq!(signed_area(&unit_box()), 1.0);
        let mut cw = unit_box();
        cw.reverse();
        assert_eq!(signed_area(&cw), -1.0);
    }

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let pts = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.5, 0.5],
            [0.5, 0.0],
        ];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!(signed_area(&h) > 0.0);
    }

    #[test]
    fn hull_of_collinear_points_is_a_segment() {
        let h = convex_hull(&[[0.0, 0.0], [2.0, 2.0], [1.0, 1.0]]);
        assert_eq!(h, vec![[0.0, 0.0], [2.0, 2.0]]);
    }

    #[test]
    fn projection_clamps_to_box_edge() {
        let (_, q) = project_convex(&unit_box(), [2.0, 0.5]);
        assert_eq!(q, [1.0, 0.5]);
        let (d2, q) = project_convex(&unit_box(), [0.25, 0.75]);
        assert_eq!(d2, 0.0);
        assert_eq!(q, [0.25, 0.75]);
    }

    #[test]
    fn minkowski_of_two_unit_boxes_is_the_double_box() {
        let s = minkowski_convex(&unit_box(), &unit_box());
        let hull = convex_hull(&s);
        assert_eq!(hull.len(), 4);
        assert!((signed_area(&hull) - 4.0).abs() < 1e-12);
        for c in [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]] {
            assert!(hull.iter().any(|&v| dist2(v, c) < 1e-20), "missing {c:?}");
        }
    }

    #[test]
    fn minkowski_with_segments_matches_vertex_sum_hull() {
        // horizontal segment + vertical segment = unit box
        let a = vec![[0.0, 0.0], [1.0, 0.0]];
        let b = vec![[0.0, 0.0], [0.0, 1.0]];
        let s = minkowski_convex(&a, &b);
        let mut brute = Vec::new();
        for &p in &a {
            for &q in &b {
                brute.push(add(p, q));
            }
        }
        let expect = convex_hull(&brute);
        let got = convex_hull(&s);
        assert_eq!(got.len(), expect.len());
        for v in expect {
            assert!(got.iter().any(|&w| dist2(v, w) < 1e-20));
        }
    }

    #[test]
    fn polyline_membership_handles_nonconvex_dent() {
        let poly: Vec<Pt<f64>> = vec![
            [0.0, 0.0],
            [4.0, 0.0],
            [4.0, 4.0],
            [2.0, 1.0], // dent
            [0.0, 4.0],
        ];
        assert!(inside_polyline(&poly, [1.0, 0.5], 1e-9));
        assert!(!inside_polyline(&poly, [2.0, 3.0], 1e-9)); // inside hull, inside dent
        assert!(inside_polyline(&poly, [2.0, 1.0], 1e-9)); // on boundary
    }

    #[test]
    fn y_range_on_box_and_degenerate_cases() {
        assert_eq!(y_range_at_x(&unit_box(), 0.5), Some((0.0, 1.0)));
        assert_eq!(y_range_at_x(&unit_box(), 2.0), None);
        assert_eq!(y_range_at_x(&[[1.0, 3.0]], 1.0), Some((3.0, 3.0)));
        let seg = vec![[0.0, -1.0], [0.0, 1.0]];
        assert_eq!(y_range_at_x(&seg, 0.0), Some((-1.0, 1.0)));
    }
}
