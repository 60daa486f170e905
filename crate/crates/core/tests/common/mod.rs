//! Reference implementations used as test oracles. Each one is written
//! independently of the library code it checks and favors obviousness over
//! speed.
#![allow(dead_code)]

use std::collections::BTreeMap;

use lidar_mot::clustering::{ClusterLabels, Label};
use lidar_mot::dataset_io::{GroundTruth, GroundTruthBox};
use lidar_mot::evaluation::Hypothesis;
use lidar_mot::Vec3;
use rand::Rng;

// ---- clustering ----

fn within(a: Vec3, b: Vec3, eps: f64) -> bool {
    let (dx, dy, dz) = (a.x - b.x, a.y - b.y, a.z - b.z);
    dx * dx + dy * dy + dz * dz <= eps * eps
}

/// O(N²) DBSCAN: clusters are connected components of core points, numbered
/// by their lowest core index; a border point joins the lowest-numbered
/// adjacent cluster. Neighbor counts include the point itself.
pub fn reference_dbscan(points: &[Vec3], eps: f64, min_points: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| within(points[i], points[j], eps))
                .collect()
        })
        .collect();
    let core: Vec<bool> = adj.iter().map(|a| a.len() >= min_points).collect();

    // union-find over core-core edges
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in (0..n).filter(|&i| core[i]) {
        for &j in adj[i].iter().filter(|&&j| core[j]) {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut component_rank: BTreeMap<usize, usize> = BTreeMap::new();
    let mut labels = vec![None; n];
    for i in (0..n).filter(|&i| core[i]) {
        let root = find(&mut parent, i);
        let next = component_rank.len();
        labels[i] = Some(*component_rank.entry(root).or_insert(next));
    }
    for i in (0..n).filter(|&i| !core[i]) {
        labels[i] = adj[i]
            .iter()
            .filter(|&&j| core[j])
            .filter_map(|&j| labels[j])
            .min();
    }
    labels
}

pub fn labels_of(c: &ClusterLabels) -> Vec<Option<usize>> {
    c.labels
        .iter()
        .map(|l| match l {
            Label::Noise => None,
            Label::Cluster(k) => Some(*k),
        })
        .collect()
}

/// Renumbers clusters by first appearance so labelings compare up to renaming.
pub fn canonical(labels: &[Option<usize>]) -> Vec<Option<usize>> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|l| {
            l.map(|k| {
                let next = map.len();
                *map.entry(k).or_insert(next)
            })
        })
        .collect()
}

/// Gaussian-ish blobs plus uniform background, all inside a 20 m cube.
pub fn blob_cloud<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec3> {
    let blobs: Vec<(Vec3, f64)> = (0..rng.random_range(1..=6))
        .map(|_| {
            let c = Vec3::new(
                rng.random_range(-8.0..8.0),
                rng.random_range(-8.0..8.0),
                rng.random_range(-2.0..2.0),
            );
            (c, rng.random_range(0.2..2.0))
        })
        .collect();
    (0..n)
        .map(|_| {
            if rng.random_bool(0.25) {
                Vec3::new(
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                )
            } else {
                let (c, s) = blobs[rng.random_range(0..blobs.len())];
                c + Vec3::new(
                    rng.random_range(-s..s),
                    rng.random_range(-s..s),
                    rng.random_range(-s..s),
                )
            }
        })
        .collect()
}

/// Indices within `r` of `center`, ascending.
pub fn linear_radius(points: &[Vec3], center: Vec3, r: f64) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| within(points[i], center, r))
        .collect()
}

// ---- assignment ----

/// Sum of `cost[r][c]` over `pairs` taken in row order.
pub fn assignment_cost(cost: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    let mut sorted = pairs.to_vec();
    sorted.sort_unstable();
    sorted.iter().map(|&(r, c)| cost[r][c]).sum()
}

fn permutations_into(
    k: usize,
    pool: &mut Vec<usize>,
    chosen: &mut Vec<usize>,
    out: &mut dyn FnMut(&[usize]),
) {
    if chosen.len() == k {
        out(chosen);
        return;
    }
    for i in 0..pool.len() {
        let c = pool.remove(i);
        chosen.push(c);
        permutations_into(k, pool, chosen, out);
        chosen.pop();
        pool.insert(i, c);
    }
}

/// Minimum total cost over all maximum-cardinality assignments, by
/// enumerating every injective map from the shorter side into the longer.
pub fn brute_force_min_cost(cost: &[Vec<f64>]) -> f64 {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    if rows <= cols {
        permutations_into(
            rows,
            &mut (0..cols).collect(),
            &mut Vec::new(),
            &mut |perm| {
                let pairs: Vec<(usize, usize)> =
                    perm.iter().enumerate().map(|(r, &c)| (r, c)).collect();
                best = best.min(assignment_cost(cost, &pairs));
            },
        );
    } else {
        permutations_into(
            cols,
            &mut (0..rows).collect(),
            &mut Vec::new(),
            &mut |perm| {
                let pairs: Vec<(usize, usize)> =
                    perm.iter().enumerate().map(|(c, &r)| (r, c)).collect();
                best = best.min(assignment_cost(cost, &pairs));
            },
        );
    }
    best
}

/// Random matrix up to 7×7; half integer-valued (many ties), half real.
pub fn random_cost_matrix<R: Rng>(rng: &mut R) -> Vec<Vec<f64>> {
    let rows = rng.random_range(1..=7);
    let cols = rng.random_range(1..=7);
    let integer = rng.random_bool(0.5);
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    if integer {
                        rng.random_range(0..10) as f64
                    } else {
                        rng.random_range(0.0..100.0)
                    }
                })
                .collect()
        })
        .collect()
}

// ---- Kalman ----

pub type M4 = [[f64; 4]; 4];

fn mat_mul(a: &M4, b: &M4) -> M4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn transpose(a: &M4) -> M4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i];
        }
    }
    out
}

/// Constant-velocity prediction over `[x, y, vx, vy]` with white-acceleration
/// noise of standard deviation `sigma_a`, written out element by element.
pub fn cv_predict_oracle(x: [f64; 4], p: &M4, dt: f64, sigma_a: f64) -> ([f64; 4], M4) {
    let f: M4 = [
        [1.0, 0.0, dt, 0.0],
        [0.0, 1.0, 0.0, dt],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    let s2 = sigma_a * sigma_a;
    let a = s2 * dt.powi(4) / 4.0;
    let b = s2 * dt.powi(3) / 2.0;
    let c = s2 * dt.powi(2);
    let q: M4 = [
        [a, 0.0, b, 0.0],
        [0.0, a, 0.0, b],
        [b, 0.0, c, 0.0],
        [0.0, b, 0.0, c],
    ];
    let x2 = [x[0] + dt * x[2], x[1] + dt * x[3], x[2], x[3]];
    let fp = mat_mul(&mat_mul(&f, p), &transpose(&f));
    let mut p2 = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            p2[i][j] = fp[i][j] + q[i][j];
        }
    }
    (x2, p2)
}

// ---- MOTA ----

pub fn gt_box(id: &str, x: f64, y: f64) -> GroundTruthBox {
    GroundTruthBox {
        track_id: id.into(),
        center: Vec3::new(x, y, 0.0),
        length: 4.5,
        width: 1.8,
        height: 1.5,
    }
}

pub fn hyp(id: u64, x: f64, y: f64) -> Hypothesis {
    Hypothesis { id, x, y }
}

/// Three frames, two objects: frame 1 misses B and adds a stray hypothesis,
/// frame 2 picks B up under a new id. One FN, one FP, one IDSW over six GT
/// instances.
pub fn mota_fixture() -> (GroundTruth, BTreeMap<usize, Vec<Hypothesis>>) {
    let mut gt = GroundTruth::new();
    let mut hy = BTreeMap::new();
    for f in 0..3 {
        gt.insert(f, vec![gt_box("A", 0.0, 0.0), gt_box("B", 10.0, 0.0)]);
    }
    hy.insert(0, vec![hyp(1, 0.1, 0.0), hyp(2, 10.0, 0.1)]);
    hy.insert(1, vec![hyp(1, 0.2, 0.0), hyp(3, 50.0, 0.0)]);
    hy.insert(2, vec![hyp(1, 0.3, 0.0), hyp(4, 10.1, 0.0)]);
    (gt, hy)
}

/// A noisy multi-object run with dropouts, stray hypotheses and id changes.
pub fn random_mota_scenario<R: Rng>(
    rng: &mut R,
) -> (GroundTruth, BTreeMap<usize, Vec<Hypothesis>>) {
    let n_obj = rng.random_range(1..=6);
    let frames = rng.random_range(3..=20);
    let starts: Vec<(f64, f64)> = (0..n_obj)
        .map(|k| (k as f64 * 6.0, rng.random_range(-3.0..3.0)))
        .collect();
    let mut ids: Vec<u64> = (0..n_obj as u64).collect();
    let mut next_id = n_obj as u64;
    let mut gt = GroundTruth::new();
    let mut hy: BTreeMap<usize, Vec<Hypothesis>> = BTreeMap::new();
    for f in 0..frames {
        let mut g = Vec::new();
        let mut h = Vec::new();
        for (k, &(x0, y0)) in starts.iter().enumerate() {
            let (x, y) = (x0 + 0.5 * f as f64, y0);
            g.push(gt_box(&format!("obj{k}"), x, y));
            if rng.random_bool(0.1) {
                ids[k] = next_id;
                next_id += 1;
            }
            if !rng.random_bool(0.15) {
                h.push(hyp(
                    ids[k],
                    x + rng.random_range(-1.5..1.5),
                    y + rng.random_range(-1.5..1.5),
                ));
            }
        }
        if rng.random_bool(0.3) {
            h.push(hyp(
                next_id,
                rng.random_range(-5.0..40.0),
                rng.random_range(-5.0..5.0),
            ));
            next_id += 1;
        }
        gt.insert(f, g);
        hy.insert(f, h);
    }
    (gt, hy)
}

// ---- ground plane ----

/// `n` points over a 40 m square: `1 - outlier_fraction` of them on a plane
/// tilted up to 5° near z = -1.7 with N(0, sigma) vertical noise, the rest
/// uniform in a 5 m slab around it. Returns the points and the true plane
/// as `(unit normal with z > 0, offset)`. Inliers come first.
pub fn noisy_plane_cloud<R: Rng>(
    rng: &mut R,
    n: usize,
    outlier_fraction: f64,
    sigma: f64,
) -> NoisyPlane {
    use rand_distr::{Distribution, Normal};
    let tilt = rng.random_range(0.0..5f64.to_radians());
    let azimuth = rng.random_range(0.0..std::f64::consts::TAU);
    let normal = Vec3::new(
        tilt.sin() * azimuth.cos(),
        tilt.sin() * azimuth.sin(),
        tilt.cos(),
    );
    let base = Vec3::new(0.0, 0.0, -1.7 + rng.random_range(-0.1..0.1));
    let offset = -normal.dot(base);
    let noise = Normal::new(0.0, sigma).unwrap();
    let n_out = (n as f64 * outlier_fraction).round() as usize;
    let mut points: Vec<Vec3> = (0..n - n_out)
        .map(|_| {
            let (x, y) = (rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
            // solve normal · p + offset = 0 for z
            let z = -(offset + normal.x * x + normal.y * y) / normal.z;
            Vec3::new(x, y, z + noise.sample(rng))
        })
        .collect();
    points.extend((0..n_out).map(|_| {
        Vec3::new(
            rng.random_range(-20.0..20.0),
            rng.random_range(-20.0..20.0),
            rng.random_range(-4.0..1.0),
        )
    }));
    NoisyPlane {
        points,
        inliers: n - n_out,
        normal,
        offset,
    }
}

pub struct NoisyPlane {
    pub points: Vec<Vec3>,
    /// `points[..inliers]` were sampled on the plane.
    pub inliers: usize,
    pub normal: Vec3,
    pub offset: f64,
}

/// Orthogonal least-squares plane: through the centroid, normal along the
/// smallest principal axis, oriented to z >= 0.
pub fn least_squares_plane(points: &[Vec3]) -> (Vec3, f64) {
    let n = points.len() as f64;
    let c = points.iter().fold(Vec3::ZERO, |a, &p| a + p) * (1.0 / n);
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    for p in points {
        let d = nalgebra::Vector3::new(p.x - c.x, p.y - c.y, p.z - c.z);
        m += d * d.transpose();
    }
    let eig = m.symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let v = eig.eigenvectors.column(k);
    let mut normal = Vec3::new(v[0], v[1], v[2]) * (1.0 / v.norm());
    if normal.z < 0.0 {
        normal = -normal;
    }
    (normal, -normal.dot(c))
}

/// Angle between the normals in degrees and the offset difference, meters.
pub fn plane_error(normal: Vec3, offset: f64, true_normal: Vec3, true_offset: f64) -> (f64, f64) {
    let cos = normal.dot(true_normal).clamp(-1.0, 1.0);
    (cos.acos().to_degrees(), (offset - true_offset).abs())
}
