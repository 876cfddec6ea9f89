//! Uniform-bucket spatial index over planar points.

use crate::geometry::Point;

/// Points bucketed on a regular lattice of square buckets.
///
/// When built over cell centroids with `bucket_size` equal to the cell size,
/// every bucket holds at most one centroid and a disc query touches only the
/// buckets overlapping the disc.
#[derive(Debug, Clone)]
pub struct BucketIndex {
    min: Point,
    bucket_size: f64,
    cols: usize,
    rows: usize,
    /// CSR layout: items of bucket `b` are `items[starts[b]..starts[b + 1]]`.
    starts: Vec<u32>,
    items: Vec<u32>,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl BucketIndex {
    /// Builds the index. Bucket edges are offset half a bucket below the
    /// smallest coordinates, so lattice points of spacing `bucket_size`
    /// sit at bucket centers.
    pub fn new(points: &[Point], bucket_size: f64) -> Self {
        assert!(bucket_size > 0.0, "bucket size must be positive");
        let (mut min, mut max) = (
            Point::new(f64::INFINITY, f64::INFINITY),
            Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        if points.is_empty() {
            min = Point::default();
            max = Point::default();
        }
        let min = Point::new(min.x - bucket_size / 2.0, min.y - bucket_size / 2.0);
        let cols = (((max.x - min.x) / bucket_size).floor() as usize) + 1;
        let rows = (((max.y - min.y) / bucket_size).floor() as usize) + 1;

        let mut counts = vec![0u32; cols * rows + 1];
        let bucket_of = |p: &Point| -> usize {
            let c = (((p.x - min.x) / bucket_size).floor() as usize).min(cols - 1);
            let r = (((p.y - min.y) / bucket_size).floor() as usize).min(rows - 1);
            r * cols + c
        };
        for p in points {
            counts[bucket_of(p) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut items = vec![0u32; points.len()];
        for (i, p) in points.iter().enumerate() {
            let b = bucket_of(p);
            items[fill[b] as usize] = i as u32;
            fill[b] += 1;
        }
        Self {
            min,
            bucket_size,
            cols,
            rows,
            starts,
            items,
            xs: points.iter().map(|p| p.x).collect(),
            ys: points.iter().map(|p| p.y).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn bucket_size(&self) -> f64 {
        self.bucket_size
    }

    pub fn point(&self, i: usize) -> Point {
        Point::new(self.xs[i], self.ys[i])
    }

    fn bucket_items(&self, b: usize) -> &[u32] {
        &self.items[self.starts[b] as usize..self.starts[b + 1] as usize]
    }

    /// Calls `visit(index, distance)` for every point strictly within
    /// `radius` of `center`, in bucket order. Returns how many points were
    /// examined.
    pub fn for_each_within(&self, center: Point, radius: f64, mut visit: impl FnMut(usize, f64)) -> usize {
        if !(radius > 0.0) || self.is_empty() {
            return 0;
        }
        let s = self.bucket_size;
        let r2 = radius * radius;
        let row_lo = ((center.y - radius - self.min.y) / s).floor();
        let row_hi = ((center.y + radius - self.min.y) / s).floor();
        if row_hi < 0.0 || row_lo >= self.rows as f64 {
            return 0;
        }
        let row_lo = row_lo.max(0.0) as usize;
        let row_hi = (row_hi as usize).min(self.rows - 1);
        let mut visited = 0;
        for row in row_lo..=row_hi {
            let y0 = self.min.y + row as f64 * s;
            let y1 = y0 + s;
            let dy = if center.y < y0 {
                y0 - center.y
            } else if center.y > y1 {
                center.y - y1
            } else {
                0.0
            };
            let rem = r2 - dy * dy;
            if rem <= 0.0 {
                continue;
            }
            let half = rem.sqrt();
            let col_lo = ((center.x - half - self.min.x) / s).floor();
            let col_hi = ((center.x + half - self.min.x) / s).floor();
            if col_hi < 0.0 || col_lo >= self.cols as f64 {
                continue;
            }
            let col_lo = col_lo.max(0.0) as usize;
            let col_hi = (col_hi as usize).min(self.cols - 1);
            let base = row * self.cols;
            for b in base + col_lo..=base + col_hi {
                for &i in self.bucket_items(b) {
                    let i = i as usize;
                    visited += 1;
                    let dx = self.xs[i] - center.x;
                    let dy = self.ys[i] - center.y;
                    let d2 = dx * dx + dy * dy;
                    if d2 < r2 {
                        visit(i, d2.sqrt());
                    }
                }
            }
        }
        visited
    }

    /// Nearest point to `p` (ties broken by lower index).
    pub fn nearest(&self, p: Point) -> Option<(usize, f64)> {
        if self.is_empty() {
            return None;
        }
        let s = self.bucket_size;
        let pc = ((p.x - self.min.x) / s).floor() as i64;
        let pr = ((p.y - self.min.y) / s).floor() as i64;
        let mut best: Option<(usize, f64)> = None;
        let max_ring = (self.cols.max(self.rows) as i64) + pc.abs().max(pr.abs()) + 1;
        for ring in 0..=max_ring {
            // any point in ring k is at least (k - 1) * s away
            if let Some((_, d)) = best {
                if ((ring - 1) as f64) * s > d {
                    break;
                }
            }
            for r in (pr - ring)..=(pr + ring) {
                if r < 0 || r >= self.rows as i64 {
                    continue;
                }
                let on_edge_row = r == pr - ring || r == pr + ring;
                let cols: Box<dyn Iterator<Item = i64>> = if on_edge_row {
                    Box::new((pc - ring)..=(pc + ring))
                } else {
                    Box::new([pc - ring, pc + ring].into_iter())
                };
                for c in cols {
                    if c < 0 || c >= self.cols as i64 {
                        continue;
                    }
                    for &i in self.bucket_items(r as usize * self.cols + c as usize) {
                        let d = self.point(i as usize).distance(&p);
                        let better = match best {
                            None => true,
                            Some((bi, bd)) => d < bd || (d == bd && (i as usize) < bi),
                        };
                        if better {
                            best = Some((i as usize, d));
                        }
                    }
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lattice(n: usize, s: f64) -> Vec<Point> {
        (0..n * n)
            .map(|i| Point::new((i % n) as f64 * s + s / 2.0, (i / n) as f64 * s + s / 2.0))
            .collect()
    }

    #[test]
    fn query_outside_extent_is_empty() {
        let idx = BucketIndex::new(&lattice(5, 1000.0), 1000.0);
        let mut hits = 0;
        idx.for_each_within(Point::new(-1e6, -1e6), 5000.0, |_, _| hits += 1);
        assert_eq!(hits, 0);
    }

    #[test]
    fn strict_radius_excludes_ties() {
        let idx = BucketIndex::new(&lattice(5, 1000.0), 1000.0);
        let mut hits = Vec::new();
        idx.for_each_within(Point::new(2500.0, 2500.0), 1000.0, |i, d| hits.push((i, d)));
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].1, 0.0);
    }

    #[test]
    fn nearest_empty() {
        assert!(BucketIndex::new(&[], 10.0).nearest(Point::new(0.0, 0.0)).is_none());
    }

    proptest! {
        #[test]
        fn range_query_matches_brute_force(
            pts in prop::collection::vec((-5e3f64..5e3, -5e3f64..5e3), 0..200),
            cx in -8e3f64..8e3, cy in -8e3f64..8e3, r in 0.0f64..6e3, bucket in 50.0f64..3e3,
        ) {
            let points: Vec<Point> = pts.iter().map(|(x, y)| Point::new(*x, *y)).collect();
            let idx = BucketIndex::new(&points, bucket);
            let c = Point::new(cx, cy);
            let mut got = Vec::new();
            idx.for_each_within(c, r, |i, _| got.push(i));
            got.sort();
            let want: Vec<usize> = points.iter().enumerate()
                .filter(|(_, p)| p.distance_squared(&c) < r * r)
                .map(|(i, _)| i).collect();
            prop_assert_eq!(got, want);
        }

        #[test]
        fn nearest_matches_brute_force(
            pts in prop::collection::vec((-5e3f64..5e3, -5e3f64..5e3), 1..100),
            qx in -2e4f64..2e4, qy in -2e4f64..2e4, bucket in 50.0f64..3e3,
        ) {
            let points: Vec<Point> = pts.iter().map(|(x, y)| Point::new(*x, *y)).collect();
            let idx = BucketIndex::new(&points, bucket);
            let q = Point::new(qx, qy);
            let (_, d) = idx.nearest(q).unwrap();
            let want = points.iter().map(|p| p.distance(&q)).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(d, want);
        }
    }
}
