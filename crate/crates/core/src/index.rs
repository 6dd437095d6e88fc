//! Ball tree over radian coordinates with exact haversine radius queries.
//!
//! Nodes are pivot-and-radius balls measured in radians of arc, so the
//! pruning test never touches the Earth radius. Children are produced by the
//! metric-only "two far pivots" split: from an arbitrary point walk to its
//! farthest point `p1`, then to `p1`'s farthest point `p2`, and hand each
//! point to the nearer of the two. Leaf points are always checked with
//! [`arc_distance`], the same comparison a linear scan makes, so results are
//! exact rather than approximate.

use crate::geo::{arc_distance, RadianPoint};

pub const DEFAULT_LEAF_CAPACITY: usize = 32;

/// Below this many points the index is a single leaf, i.e. a linear scan.
const LINEAR_SCAN_THRESHOLD: usize = 64;

/// Rounding allowance on the triangle-inequality prune, radians.
const PRUNE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IndexError {
    #[error("empty point set")]
    EmptyPointSet,
}

#[derive(Debug, Clone)]
struct Node {
    pivot: RadianPoint,
    /// Covering radius around `pivot`, radians of arc.
    radius: f64,
    start: usize,
    end: usize,
    children: Option<[usize; 2]>,
}

/// Immutable ball tree. Row indices refer to the order of the slice the
/// index was built from.
#[derive(Debug, Clone)]
pub struct MetricIndex {
    points: Vec<RadianPoint>,
    /// Tree-order slot -> original row.
    rows: Vec<usize>,
    /// Points laid out in tree order.
    slots: Vec<RadianPoint>,
    nodes: Vec<Node>,
    leaf_capacity: usize,
}

impl MetricIndex {
    pub fn build(points: &[RadianPoint]) -> Result<Self, IndexError> {
        Self::with_leaf_capacity(points, DEFAULT_LEAF_CAPACITY)
    }

    pub fn with_leaf_capacity(points: &[RadianPoint], leaf_capacity: usize) -> Result<Self, IndexError> {
        if points.is_empty() {
            return Err(IndexError::EmptyPointSet);
        }
        let leaf_capacity = leaf_capacity.max(1);
        let mut rows: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();

        let root = new_node(points, &rows, 0, points.len());
        nodes.push(root);
        if points.len() >= LINEAR_SCAN_THRESHOLD {
            // Explicit stack: heavily skewed splits must not exhaust the call stack.
            let mut pending = vec![0usize];
            while let Some(id) = pending.pop() {
                let (start, end) = (nodes[id].start, nodes[id].end);
                if end - start <= leaf_capacity {
                    continue;
                }
                let Some(mid) = split(points, &mut rows[start..end]) else {
                    continue;
                };
                let left = nodes.len();
                nodes.push(new_node(points, &rows, start, start + mid));
                nodes.push(new_node(points, &rows, start + mid, end));
                nodes[id].children = Some([left, left + 1]);
                pending.push(left);
                pending.push(left + 1);
            }
        }

        let slots = rows.iter().map(|&r| points[r]).collect();
        Ok(MetricIndex { points: points.to_vec(), rows, slots, nodes, leaf_capacity })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    /// The indexed points in their original order.
    pub fn points(&self) -> &[RadianPoint] {
        &self.points
    }

    /// Rows whose arc distance to `center` is `<= radius_rad`, ascending.
    pub fn radius_query(&self, center: RadianPoint, radius_rad: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.radius_query_into(center, radius_rad, &mut out);
        out
    }

    /// Like [`radius_query`](Self::radius_query) but reuses `out`, which is
    /// cleared first.
    pub fn radius_query_into(&self, center: RadianPoint, radius_rad: f64, out: &mut Vec<usize>) {
        out.clear();
        self.visit(center, radius_rad, |row| out.push(row));
        out.sort_unstable();
    }

    /// Size of the radius-query result without materialising it.
    pub fn count_within(&self, center: RadianPoint, radius_rad: f64) -> usize {
        let mut n = 0;
        self.visit(center, radius_rad, |_| n += 1);
        n
    }

    fn visit(&self, center: RadianPoint, radius_rad: f64, mut emit: impl FnMut(usize)) {
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if arc_distance(center, node.pivot) > radius_rad + node.radius + PRUNE_SLACK {
                continue;
            }
            match node.children {
                Some([l, r]) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => {
                    for slot in node.start..node.end {
                        if arc_distance(self.slots[slot], center) <= radius_rad {
                            emit(self.rows[slot]);
                        }
                    }
                }
            }
        }
    }
}

/// Brute-force radius query with the same contract as
/// [`MetricIndex::radius_query`].
pub fn linear_scan(points: &[RadianPoint], center: RadianPoint, radius_rad: f64) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, &p)| arc_distance(p, center) <= radius_rad)
        .map(|(i, _)| i)
        .collect()
}

fn new_node(points: &[RadianPoint], rows: &[usize], start: usize, end: usize) -> Node {
    let members = &rows[start..end];
    let pivot = spherical_mean(points, members).unwrap_or(points[members[0]]);
    let radius = members
        .iter()
        .map(|&r| arc_distance(pivot, points[r]))
        .fold(0.0, f64::max);
    Node { pivot, radius, start, end, children: None }
}

/// Normalised mean of the members' unit vectors; `None` when they cancel out.
fn spherical_mean(points: &[RadianPoint], members: &[usize]) -> Option<RadianPoint> {
    let (mut x, mut y, mut z) = (0.0, 0.0, 0.0);
    for &r in members {
        let p = points[r];
        let (slat, clat) = p.lat_rad.sin_cos();
        let (slon, clon) = p.lon_rad.sin_cos();
        x += clat * clon;
        y += clat * slon;
        z += slat;
    }
    let norm = (x * x + y * y + z * z).sqrt();
    if norm < 1e-9 * members.len() as f64 {
        return None;
    }
    Some(RadianPoint {
        lat_rad: (z / norm).clamp(-1.0, 1.0).asin(),
        lon_rad: y.atan2(x),
    })
}

/// Reorders `rows` so the first `mid` are nearer pivot `p1` and returns
/// `mid`, or `None` if the points cannot be separated.
fn split(points: &[RadianPoint], rows: &mut [usize]) -> Option<usize> {
    let farthest_from = |from: RadianPoint| {
        rows.iter()
            .copied()
            .map(|r| (r, arc_distance(from, points[r])))
            .fold((rows[0], -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
    };
    let p1 = points[farthest_from(points[rows[0]]).0];
    let (p2_row, spread) = farthest_from(p1);
    if spread <= 0.0 {
        return None;
    }
    let p2 = points[p2_row];

    let mut mid = 0;
    for i in 0..rows.len() {
        let p = points[rows[i]];
        if arc_distance(p, p1) <= arc_distance(p, p2) {
            rows.swap(i, mid);
            mid += 1;
        }
    }
    (mid > 0 && mid < rows.len()).then_some(mid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{km_to_arc, GeoPoint};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_points(rng: &mut impl Rng, n: usize) -> Vec<RadianPoint> {
        (0..n)
            .map(|_| {
                GeoPoint { lat_deg: rng.gen_range(-90.0..=90.0), lon_deg: rng.gen_range(-180.0..=180.0) }
                    .to_radians()
            })
            .collect()
    }

    fn audit(idx: &MetricIndex) {
        let mut seen: Vec<usize> = Vec::new();
        for node in &idx.nodes {
            for slot in node.start..node.end {
                let d = arc_distance(node.pivot, idx.slots[slot]);
                assert!(d <= node.radius + 1e-12, "covering radius violated: {d} > {}", node.radius);
            }
            match node.children {
                Some([l, r]) => {
                    assert_eq!(idx.nodes[l].start, node.start);
                    assert_eq!(idx.nodes[l].end, idx.nodes[r].start);
                    assert_eq!(idx.nodes[r].end, node.end);
                }
                None => seen.extend(node.start..node.end),
            }
        }
        seen.sort_unstable();
        assert_eq!(seen, (0..idx.len()).collect::<Vec<_>>(), "every slot in exactly one leaf");
        let mut rows = idx.rows.clone();
        rows.sort_unstable();
        assert_eq!(rows, (0..idx.len()).collect::<Vec<_>>());
    }

    #[test]
    fn empty_input_is_rejected() {
        assert_eq!(MetricIndex::build(&[]).unwrap_err(), IndexError::EmptyPointSet);
        assert_eq!(IndexError::EmptyPointSet.to_string(), "empty point set");
    }

    #[test]
    fn single_point() {
        let p = GeoPoint { lat_deg: 41.37, lon_deg: 2.15 }.to_radians();
        let idx = MetricIndex::build(&[p]).unwrap();
        assert_eq!(idx.nodes.len(), 1);
        assert_eq!(idx.radius_query(p, 0.0), vec![0]);
    }

    #[test]
    fn duplicates_at_radius_zero() {
        let p = GeoPoint { lat_deg: 41.37, lon_deg: 2.15 }.to_radians();
        let q = GeoPoint { lat_deg: 41.38, lon_deg: 2.15 }.to_radians();
        let mut pts = vec![p; 150];
        pts.extend(std::iter::repeat_n(q, 50));
        let idx = MetricIndex::with_leaf_capacity(&pts, 4).unwrap();
        audit(&idx);
        assert_eq!(idx.radius_query(p, 0.0), (0..150).collect::<Vec<_>>());
        assert_eq!(idx.radius_query(q, 0.0), (150..200).collect::<Vec<_>>());
    }

    #[test]
    fn structural_audit_500_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(500);
        for cap in [1, 8, 32] {
            let idx = MetricIndex::with_leaf_capacity(&random_points(&mut rng, 500), cap).unwrap();
            assert!(idx.nodes.len() > 1);
            audit(&idx);
        }
    }

    #[test]
    fn half_circle_radius_returns_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = random_points(&mut rng, 300);
        let idx = MetricIndex::build(&pts).unwrap();
        for _ in 0..10 {
            let c = random_points(&mut rng, 1)[0];
            assert_eq!(idx.radius_query(c, PI), (0..300).collect::<Vec<_>>());
        }
    }

    #[test]
    fn matches_brute_force_200_points_50_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        let pts = random_points(&mut rng, 200);
        let idx = MetricIndex::with_leaf_capacity(&pts, 4).unwrap();
        for q in 0..50 {
            let center = if q % 2 == 0 { pts[rng.gen_range(0..200)] } else { random_points(&mut rng, 1)[0] };
            let r = rng.gen_range(0.0..1.0);
            let expected: Vec<usize> =
                (0..pts.len()).filter(|&i| arc_distance(pts[i], center) <= r).collect();
            assert_eq!(idx.radius_query(center, r), expected);
            assert_eq!(idx.count_within(center, r), expected.len());
        }
    }

    #[test]
    fn boundary_is_inclusive() {
        let a = GeoPoint { lat_deg: 10.0, lon_deg: 10.0 }.to_radians();
        let b = GeoPoint { lat_deg: 10.01, lon_deg: 10.0 }.to_radians();
        let idx = MetricIndex::build(&[a, b]).unwrap();
        assert_eq!(idx.radius_query(a, arc_distance(a, b)), vec![0, 1]);
        assert_eq!(idx.radius_query(a, arc_distance(a, b).next_down()), vec![0]);
    }

    fn clustered_points() -> impl Strategy<Value = Vec<RadianPoint>> {
        prop::collection::vec((41.0..41.5f64, 2.0..2.5f64), 1..300).prop_map(|v| {
            v.into_iter()
                .map(|(lat_deg, lon_deg)| GeoPoint { lat_deg, lon_deg }.to_radians())
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tree_equals_linear_scan(pts in clustered_points(), pick in any::<prop::sample::Index>(), km in 0.0..20.0f64) {
            let idx = MetricIndex::with_leaf_capacity(&pts, 8).unwrap();
            let center = pts[pick.index(pts.len())];
            prop_assert_eq!(idx.radius_query(center, km_to_arc(km)), linear_scan(&pts, center, km_to_arc(km)));
        }

        #[test]
        fn monotone_in_radius(pts in clustered_points(), pick in any::<prop::sample::Index>(), r1 in 0.0..10.0f64, r2 in 0.0..10.0f64) {
            let idx = MetricIndex::with_leaf_capacity(&pts, 8).unwrap();
            let center = pts[pick.index(pts.len())];
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let small = idx.radius_query(center, km_to_arc(lo));
            let large = idx.radius_query(center, km_to_arc(hi));
            prop_assert!(small.iter().all(|i| large.binary_search(i).is_ok()));
        }

        #[test]
        fn permutation_robust(pts in clustered_points(), seed in any::<u64>(), km in 0.0..10.0f64) {
            let mut perm: Vec<usize> = (0..pts.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..perm.len()).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let shuffled: Vec<RadianPoint> = perm.iter().map(|&i| pts[i]).collect();
            let a = MetricIndex::with_leaf_capacity(&pts, 4).unwrap();
            let b = MetricIndex::with_leaf_capacity(&shuffled, 4).unwrap();
            let center = pts[0];
            let mut mapped: Vec<usize> = b.radius_query(center, km_to_arc(km)).into_iter().map(|i| perm[i]).collect();
            mapped.sort_unstable();
            prop_assert_eq!(a.radius_query(center, km_to_arc(km)), mapped);
        }
    }
}
