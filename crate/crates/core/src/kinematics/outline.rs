//! Boundary construction: offset the midline by the width profile and
//! resample the closed curve to a fixed point count.
//!
//! The raw boundary offsets subdivided midline samples along miter (angle
//! bisector) normals, which keeps the polygon smooth enough that the
//! resampler's equal-chord iteration converges in a few passes. The final
//! points are equally spaced by perimeter arc length, then nudged until
//! consecutive chords are equal, and recentered on the polygon's
//! area-weighted centroid.

use super::{BodyGeometry, Outline};
use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Subdivisions per midline segment when sampling the boundary.
const SUBDIVISIONS: usize = 4;
/// Convergence tolerance for the equal-chord iteration, relative to the
/// perimeter.
const CHORD_TOL: f64 = 1e-12;
const MAX_CHORD_ITERS: usize = 200;

/// Offset the midline into a closed boundary and resample it to
/// `geometry.n_outline_points()` points. Point 0 is pinned at the head tip.
pub fn build_outline(midline: &[Vec2], geometry: &BodyGeometry) -> Result<Outline> {
    let n = geometry.n_segments();
    assert_eq!(midline.len(), n + 1);

    // Per-node tangent directions: segment direction at the ends, the
    // normalized bisector at interior joints.
    let seg_dirs: Vec<Vec2> = (0..n)
        .map(|k| {
            (midline[k + 1] - midline[k])
                .normalized(1e-12)
                .expect("midline segments have positive length")
        })
        .collect();
    let mut node_dirs = Vec::with_capacity(n + 1);
    node_dirs.push(seg_dirs[0]);
    for i in 1..n {
        let sum = seg_dirs[i - 1] + seg_dirs[i];
        let dir = sum.normalized(1e-9).ok_or(Error::OutlineSelfIntersects {
            s: i as f64 / n as f64,
        })?;
        node_dirs.push(dir);
    }
    node_dirs.push(seg_dirs[n - 1]);

    // Refined boundary samples: tangents blended within each segment.
    let m = n * SUBDIVISIONS + 1;
    let mut left = Vec::with_capacity(m);
    let mut right = Vec::with_capacity(m);
    let mut tangents = Vec::with_capacity(m);
    for k in 0..n {
        for j in 0..SUBDIVISIONS {
            let t = j as f64 / SUBDIVISIONS as f64;
            let s = (k as f64 + t) / n as f64;
            let pos = midline[k] + t * (midline[k + 1] - midline[k]);
            let dir = ((1.0 - t) * node_dirs[k] + t * node_dirs[k + 1])
                .normalized(1e-9)
                .ok_or(Error::OutlineSelfIntersects { s })?;
            let w = geometry.width().half_width(s);
            left.push(pos + w * dir.perp());
            right.push(pos - w * dir.perp());
            tangents.push(dir);
        }
    }
    let w_tail = geometry.width().half_width(1.0);
    left.push(midline[n] + w_tail * node_dirs[n].perp());
    right.push(midline[n] - w_tail * node_dirs[n].perp());
    tangents.push(node_dirs[n]);

    // Fold check: an offset curve that locally reverses against the midline
    // tangent means the joint angle exceeded what the width allows.
    for side in [&left, &right] {
        for i in 0..m - 1 {
            let edge = side[i + 1] - side[i];
            if edge.dot(tangents[i]) <= 0.0 {
                return Err(Error::OutlineSelfIntersects {
                    s: i as f64 / (m - 1) as f64,
                });
            }
        }
    }

    // Closed polygon: head -> left side -> tail -> right side -> head.
    let mut poly: Vec<Vec2> = Vec::with_capacity(2 * m);
    poly.extend_from_slice(&left);
    poly.extend(right.iter().rev());
    dedup_closed(&mut poly);

    let resampled = resample_equal_chord(&poly, geometry.n_outline_points());
    let centroid = area_centroid(&resampled);
    let centered: Vec<Vec2> = resampled.into_iter().map(|p| p - centroid).collect();
    debug_assert!(area_centroid(&centered).norm() <= 1e-9);
    Ok(Outline::from_centered(centered))
}

/// Drop consecutive duplicate vertices (the tapered tips produce them) and
/// the wrap-around duplicate.
fn dedup_closed(poly: &mut Vec<Vec2>) {
    poly.dedup_by(|a, b| (*a - *b).norm() < 1e-14);
    while poly.len() > 1 && (poly[0] - *poly.last().unwrap()).norm() < 1e-14 {
        poly.pop();
    }
}

struct ArcTable {
    cum: Vec<f64>,
    total: f64,
}

impl ArcTable {
    fn new(poly: &[Vec2]) -> Self {
        let n = poly.len();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for i in 0..n {
            acc += (poly[(i + 1) % n] - poly[i]).norm();
            cum.push(acc);
        }
        ArcTable { cum, total: acc }
    }
}

/// Evaluate points at sorted arc positions in [0, total).
fn points_at(poly: &[Vec2], table: &ArcTable, arcs: &[f64], out: &mut Vec<Vec2>) {
    out.clear();
    let n = poly.len();
    let mut k = 0usize;
    for &s in arcs {
        debug_assert!((0.0..=table.total).contains(&s));
        while k + 1 < n && table.cum[k + 1] < s {
            k += 1;
        }
        let seg = table.cum[k + 1] - table.cum[k];
        let t = if seg > 0.0 { (s - table.cum[k]) / seg } else { 0.0 };
        let a = poly[k];
        let b = poly[(k + 1) % n];
        out.push(a + t * (b - a));
    }
}

/// Place `count` points on the closed polygon, equally spaced by arc
/// length, then iterate a cyclic remap until consecutive chord lengths are
/// equal. Point 0 stays pinned at vertex 0.
fn resample_equal_chord(poly: &[Vec2], count: usize) -> Vec<Vec2> {
    let table = ArcTable::new(poly);
    let total = table.total;
    let mut arcs: Vec<f64> = (0..count).map(|k| k as f64 * total / count as f64).collect();
    let mut pts: Vec<Vec2> = Vec::with_capacity(count);
    let mut cum_chord = vec![0.0; count + 1];
    let mut new_arcs = vec![0.0; count];

    for _ in 0..MAX_CHORD_ITERS {
        points_at(poly, &table, &arcs, &mut pts);
        let mut acc = 0.0;
        for i in 0..count {
            cum_chord[i] = acc;
            acc += (pts[(i + 1) % count] - pts[i]).norm();
        }
        cum_chord[count] = acc;

        // Remap arc positions so cumulative chord length is equidistributed.
        // Interpolation nodes are (cum_chord_i, arc_i) with the cyclic wrap
        // node (total chord, total arc).
        let target_step = acc / count as f64;
        let mut j = 0usize;
        for (i, na) in new_arcs.iter_mut().enumerate() {
            let target = i as f64 * target_step;
            while j + 1 < count && cum_chord[j + 1] < target {
                j += 1;
            }
            let c0 = cum_chord[j];
            let c1 = cum_chord[j + 1];
            let a0 = arcs[j];
            let a1 = if j + 1 < count { arcs[j + 1] } else { total };
            let t = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
            *na = a0 + t * (a1 - a0);
        }
        new_arcs[0] = 0.0;

        let delta = arcs
            .iter()
            .zip(&new_arcs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        arcs.copy_from_slice(&new_arcs);
        if delta < CHORD_TOL * total {
            break;
        }
    }
    points_at(poly, &table, &arcs, &mut pts);
    pts
}

/// Area-weighted centroid of a closed polygon (shoelace formula).
pub(crate) fn area_centroid(pts: &[Vec2]) -> Vec2 {
    let n = pts.len();
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let cr = a.cross(b);
        area2 += cr;
        cx += (a.x + b.x) * cr;
        cy += (a.y + b.y) * cr;
    }
    Vec2::new(cx / (3.0 * area2), cy / (3.0 * area2))
}
