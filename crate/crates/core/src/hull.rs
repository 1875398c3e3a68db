//! Exact 3D convex hulls of integer lattice points.
//!
//! Colours are snapped to an integer lattice before hulling so every
//! orientation test is exact (`i128` determinants). This makes the many
//! coplanar configurations produced by 8-bit colours harmless.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type IPoint = [i64; 3];

/// Lattice resolution used for colours in `[0, 1]`. A multiple of 255 so that
/// 8-bit colours land exactly on lattice points.
pub const COLOR_SCALE: f64 = 255.0 * 65536.0;

pub fn to_lattice(c: [f64; 3]) -> IPoint {
    c.map(|v| (v.clamp(0.0, 1.0) * COLOR_SCALE).round() as i64)
}

pub fn from_lattice(p: IPoint) -> [f64; 3] {
    p.map(|v| v as f64 / COLOR_SCALE)
}

#[inline]
fn sub(a: IPoint, b: IPoint) -> [i128; 3] {
    [
        (a[0] - b[0]) as i128,
        (a[1] - b[1]) as i128,
        (a[2] - b[2]) as i128,
    ]
}

#[inline]
fn cross(u: [i128; 3], v: [i128; 3]) -> [i128; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

#[inline]
fn dot(u: [i128; 3], v: [i128; 3]) -> i128 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

/// `det[b − a, c − a, d − a]`: positive when `d` lies on the side of plane
/// `abc` that the counter-clockwise normal points to.
#[inline]
pub fn orient(a: IPoint, b: IPoint, c: IPoint, d: IPoint) -> i128 {
    dot(cross(sub(b, a), sub(c, a)), sub(d, a))
}

fn normal(pts: &[IPoint], f: [usize; 3]) -> [i128; 3] {
    cross(sub(pts[f[1]], pts[f[0]]), sub(pts[f[2]], pts[f[0]]))
}

/// A closed triangulated hull. Indices refer to the input point slice; faces
/// are oriented with outward normals.
#[derive(Debug, Clone)]
pub struct Hull {
    /// Indices of the extreme points, ascending.
    pub vertices: Vec<usize>,
    pub faces: Vec<[usize; 3]>,
}

/// The input had fewer than four affinely independent points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Degenerate;

impl Hull {
    /// Six times the enclosed volume.
    pub fn volume6(&self, pts: &[IPoint]) -> i128 {
        let r = pts[self.faces[0][0]];
        -self
            .faces
            .iter()
            .map(|f| orient(pts[f[0]], pts[f[1]], pts[f[2]], r))
            .sum::<i128>()
    }

    /// Whether `p` lies inside or on the hull.
    pub fn contains(&self, pts: &[IPoint], p: IPoint) -> bool {
        self.faces
            .iter()
            .all(|f| orient(pts[f[0]], pts[f[1]], pts[f[2]], p) <= 0)
    }

    /// Hull vertices adjacent to `v` along hull edges.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .faces
            .iter()
            .filter(|f| f.contains(&v))
            .flat_map(|f| f.iter().copied().filter(|&u| u != v))
            .filter(|u| self.vertices.binary_search(u).is_ok())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Convex hull of `pts` (which may contain duplicates).
pub fn convex_hull(pts: &[IPoint]) -> Result<Hull, Degenerate> {
    let seed = initial_simplex(pts).ok_or(Degenerate)?;

    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut alive: Vec<bool> = Vec::new();
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();

    let add_face = |f: [usize; 3],
                    faces: &mut Vec<[usize; 3]>,
                    alive: &mut Vec<bool>,
                    edges: &mut HashMap<(usize, usize), usize>| {
        let id = faces.len();
        faces.push(f);
        alive.push(true);
        for k in 0..3 {
            edges.insert((f[k], f[(k + 1) % 3]), id);
        }
    };

    for skip in 0..4 {
        let mut tri: Vec<usize> = (0..4).filter(|&k| k != skip).map(|k| seed[k]).collect();
        if orient(pts[tri[0]], pts[tri[1]], pts[tri[2]], pts[seed[skip]]) > 0 {
            tri.swap(1, 2);
        }
        add_face([tri[0], tri[1], tri[2]], &mut faces, &mut alive, &mut edges);
    }

    let mut order: Vec<usize> = (0..pts.len()).filter(|i| !seed.contains(i)).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));

    let mut visible: Vec<usize> = Vec::new();
    let mut live_count = 4usize;
    for &p in &order {
        visible.clear();
        for (id, f) in faces.iter().enumerate() {
            if alive[id] && orient(pts[f[0]], pts[f[1]], pts[f[2]], pts[p]) > 0 {
                visible.push(id);
            }
        }
        if visible.is_empty() {
            continue;
        }
        let mut horizon = Vec::new();
        for &id in &visible {
            let f = faces[id];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let twin = edges[&(b, a)];
                if visible.binary_search(&twin).is_err() {
                    horizon.push((a, b));
                }
            }
        }
        for &id in &visible {
            alive[id] = false;
            let f = faces[id];
            for k in 0..3 {
                edges.remove(&(f[k], f[(k + 1) % 3]));
            }
        }
        live_count -= visible.len();
        for (a, b) in horizon {
            add_face([a, b, p], &mut faces, &mut alive, &mut edges);
            live_count += 1;
        }
        if faces.len() > 2 * live_count + 64 {
            let kept: Vec<[usize; 3]> = faces
                .iter()
                .zip(&alive)
                .filter(|(_, &a)| a)
                .map(|(f, _)| *f)
                .collect();
            faces.clear();
            alive.clear();
            edges.clear();
            for f in kept {
                add_face(f, &mut faces, &mut alive, &mut edges);
            }
        }
    }

    let faces: Vec<[usize; 3]> = faces
        .into_iter()
        .zip(alive)
        .filter(|(_, a)| *a)
        .map(|(f, _)| f)
        .collect();

    let mut incident: HashMap<usize, Vec<[i128; 3]>> = HashMap::new();
    for f in &faces {
        let n = normal(pts, *f);
        for &v in f {
            incident.entry(v).or_default().push(n);
        }
    }
    let mut vertices: Vec<usize> = incident
        .into_iter()
        .filter(|(_, normals)| normals_span_space(normals))
        .map(|(v, _)| v)
        .collect();
    vertices.sort_unstable();
    Ok(Hull { vertices, faces })
}

/// A hull point is a true vertex iff the normals of its incident faces span
/// 3D; points interior to a hull face or edge have rank ≤ 2.
fn normals_span_space(normals: &[[i128; 3]]) -> bool {
    let n1 = normals[0];
    let Some(n2) = normals.iter().find(|n| cross(n1, **n) != [0, 0, 0]) else {
        return false;
    };
    let c = cross(n1, *n2);
    normals.iter().any(|n| sign_dot_wide(c, *n) != 0)
}

/// Exact sign of `c · n` where `|c| < 2^100` and `|n| < 2^62`, whose product
/// can exceed `i128`. Each `cᵢ` is split into `hᵢ·2⁶⁴ + lᵢ`.
fn sign_dot_wide(c: [i128; 3], n: [i128; 3]) -> i32 {
    let mut hi: i128 = 0;
    let mut lo: i128 = 0;
    for k in 0..3 {
        let h = c[k] >> 64;
        let l = (c[k] & 0xFFFF_FFFF_FFFF_FFFF) as i128;
        hi += h * n[k];
        lo += l * n[k];
    }
    // value = hi·2⁶⁴ + lo; carry lo's high part into hi.
    hi += lo >> 64;
    let rest = lo & 0xFFFF_FFFF_FFFF_FFFF;
    match hi.signum() {
        0 => (rest != 0) as i32,
        s => s as i32,
    }
}

fn initial_simplex(pts: &[IPoint]) -> Option<[usize; 4]> {
    let p0 = 0;
    let p1 = (0..pts.len()).find(|&i| pts[i] != pts[p0])?;
    let d = sub(pts[p1], pts[p0]);
    let p2 = (0..pts.len()).find(|&i| cross(d, sub(pts[i], pts[p0])) != [0, 0, 0])?;
    let p3 = (0..pts.len()).find(|&i| orient(pts[p0], pts[p1], pts[p2], pts[i]) != 0)?;
    Some([p0, p1, p2, p3])
}

/// Twice the squared area of triangle `abc` (as `|n|²`).
pub fn area2_sq(a: IPoint, b: IPoint, c: IPoint) -> i128 {
    let n = cross(sub(b, a), sub(c, a));
    dot(n, n)
}

pub fn dist_sq(a: IPoint, b: IPoint) -> i128 {
    let d = sub(a, b);
    dot(d, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cube() -> Vec<IPoint> {
        let mut v = Vec::new();
        for x in [0, 10] {
            for y in [0, 10] {
                for z in [0, 10] {
                    v.push([x, y, z]);
                }
            }
        }
        v
    }

    #[test]
    fn cube_with_interior_and_face_points() {
        let mut pts = cube();
        pts.push([5, 5, 5]);
        pts.push([5, 5, 0]); // face centre
        pts.push([5, 0, 0]); // edge midpoint
        pts.push([3, 4, 6]);
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.vertices, (0..8).collect::<Vec<_>>());
        assert_eq!(h.volume6(&pts), 6 * 1000);
    }

    #[test]
    fn wide_dot_sign_is_exact() {
        let c = [3i128 << 98, -(5i128 << 97), 7];
        let n = [1i128 << 60, 1 << 61, -1];
        // 3·2^158 − 5·2^158 − 7 < 0
        assert_eq!(sign_dot_wide(c, n), -1);
        assert_eq!(sign_dot_wide([1 << 70, 0, -(1 << 10)], [1, 0, 1 << 60]), 0);
        assert_eq!(sign_dot_wide([1 << 70, 0, -(1 << 10)], [1, 0, (1 << 60) - 1]), 1);
        assert_eq!(sign_dot_wide([0, 0, 0], [5, 5, 5]), 0);
    }

    #[test]
    fn coplanar_points_are_degenerate() {
        let pts = vec![[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0], [5, 5, 0]];
        assert_eq!(convex_hull(&pts).unwrap_err(), Degenerate);
        assert!(convex_hull(&[[1, 2, 3]]).is_err());
    }

    /// Independent oracle: a point is extreme iff it is not inside any
    /// tetrahedron, triangle or segment spanned by the other points.
    fn brute_force_extreme(pts: &[IPoint]) -> Vec<usize> {
        let n = pts.len();
        let in_segment = |p: IPoint, a: IPoint, b: IPoint| {
            let ab = sub(b, a);
            let ap = sub(p, a);
            cross(ab, ap) == [0, 0, 0] && dot(ab, ap) >= 0 && dot(ab, ap) <= dot(ab, ab)
        };
        let in_triangle = |p: IPoint, a: IPoint, b: IPoint, c: IPoint| {
            if orient(a, b, c, p) != 0 {
                return false;
            }
            let n = cross(sub(b, a), sub(c, a));
            if n == [0, 0, 0] {
                return false;
            }
            let s1 = dot(cross(sub(b, a), sub(p, a)), n);
            let s2 = dot(cross(sub(c, b), sub(p, b)), n);
            let s3 = dot(cross(sub(a, c), sub(p, c)), n);
            s1 >= 0 && s2 >= 0 && s3 >= 0
        };
        let in_tet = |p: IPoint, a: IPoint, b: IPoint, c: IPoint, d: IPoint| {
            let o = orient(a, b, c, d);
            if o == 0 {
                return false;
            }
            let s = [
                orient(a, b, c, p) * o.signum(),
                orient(a, b, p, d) * o.signum(),
                orient(a, p, c, d) * o.signum(),
                orient(p, b, c, d) * o.signum(),
            ];
            s.iter().all(|&v| v >= 0)
        };
        let mut out = Vec::new();
        'outer: for i in 0..n {
            let others: Vec<IPoint> = (0..n).filter(|&j| j != i).map(|j| pts[j]).collect();
            let m = others.len();
            for a in 0..m {
                for b in a + 1..m {
                    if in_segment(pts[i], others[a], others[b]) {
                        continue 'outer;
                    }
                    for c in b + 1..m {
                        if in_triangle(pts[i], others[a], others[b], others[c]) {
                            continue 'outer;
                        }
                        for d in c + 1..m {
                            if in_tet(pts[i], others[a], others[b], others[c], others[d]) {
                                continue 'outer;
                            }
                        }
                    }
                }
            }
            out.push(i);
        }
        out
    }

    #[test]
    fn matches_brute_force_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..6 {
            let n = 12 + 6 * trial;
            // Small coordinates force many coplanar and collinear cases.
            let pts: Vec<IPoint> = (0..n)
                .map(|_| [rng.gen_range(0..6), rng.gen_range(0..6), rng.gen_range(0..6)])
                .collect();
            let mut uniq = pts.clone();
            uniq.sort();
            uniq.dedup();
            let h = convex_hull(&uniq).unwrap();
            assert_eq!(h.vertices, brute_force_extreme(&uniq), "trial {trial}");
        }
    }
}
