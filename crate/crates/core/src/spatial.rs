//! Bucketed planar index supporting insertion, removal, nearest-neighbor and
//! radius queries. Results are deterministic: ties resolve to the lowest key.

use std::collections::BTreeMap;

use crate::geometry::Point2;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct GridIndex<K, T> {
    bucket: T,
    buckets: BTreeMap<(i64, i64), Vec<(K, Point2<T>)>>,
    len: usize,
}

impl<K: Copy + Ord, T: Scalar> GridIndex<K, T> {
    pub fn new(bucket: T) -> Self {
        assert!(bucket > T::zero(), "bucket size must be positive");
        Self {
            bucket,
            buckets: BTreeMap::new(),
            len: 0,
        }
    }

    fn key(&self, p: Point2<T>) -> (i64, i64) {
        (
            (p.x / self.bucket).floor().to_i64().unwrap_or(0),
            (p.y / self.bucket).floor().to_i64().unwrap_or(0),
        )
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn clear(&mut self) {
        self.buckets.clear();
        self.len = 0;
    }

    pub fn insert(&mut self, key: K, p: Point2<T>) {
        let b = self.key(p);
        self.buckets.entry(b).or_default().push((key, p));
        self.len += 1;
    }

    /// Removes `key` previously inserted at `p`. Returns whether it was present.
    pub fn remove(&mut self, key: K, p: Point2<T>) -> bool {
        let b = self.key(p);
        let Some(items) = self.buckets.get_mut(&b) else {
            return false;
        };
        let Some(pos) = items.iter().position(|(k, _)| *k == key) else {
            return false;
        };
        items.swap_remove(pos);
        if items.is_empty() {
            self.buckets.remove(&b);
        }
        self.len -= 1;
        true
    }

    fn occupied_extent(&self) -> Option<(i64, i64, i64, i64)> {
        let mut it = self.buckets.keys();
        let &(x0, y0) = it.next()?;
        Some(self.buckets.keys().fold((x0, x0, y0, y0), |(a, b, c, d), &(x, y)| {
            (a.min(x), b.max(x), c.min(y), d.max(y))
        }))
    }

    /// Nearest entry to `p` (lowest key on ties), with its distance.
    pub fn nearest(&self, p: Point2<T>) -> Option<(K, T)> {
        self.nearest_where(p, |_| true)
    }

    /// Nearest entry accepted by `keep`.
    pub fn nearest_where(&self, p: Point2<T>, keep: impl Fn(K) -> bool) -> Option<(K, T)> {
        let (xmin, xmax, ymin, ymax) = self.occupied_extent()?;
        let (cx, cy) = self.key(p);
        let max_ring = [cx - xmin, xmax - cx, cy - ymin, ymax - cy]
            .into_iter()
            .map(i64::abs)
            .max()
            .unwrap_or(0);
        let mut best: Option<(K, T)> = None;
        for ring in 0..=max_ring {
            if let Some((_, d)) = best {
                // every point in ring r is at least (r − 1)·bucket away
                let lower = T::from_i64(ring - 1).unwrap() * self.bucket;
                if lower > d {
                    break;
                }
            }
            for (bx, by) in ring_cells(cx, cy, ring) {
                let Some(items) = self.buckets.get(&(bx, by)) else {
                    continue;
                };
                for &(k, q) in items {
                    if !keep(k) {
                        continue;
                    }
                    let d = p.distance(q);
                    let better = match best {
                        None => true,
                        Some((bk, bd)) => d < bd || (d == bd && k < bk),
                    };
                    if better {
                        best = Some((k, d));
                    }
                }
            }
        }
        best
    }

    /// All entries within `radius` of `p` (inclusive), sorted by key.
    pub fn within(&self, p: Point2<T>, radius: T) -> Vec<(K, Point2<T>)> {
        let lo = self.key(Point2::new(p.x - radius, p.y - radius));
        let hi = self.key(Point2::new(p.x + radius, p.y + radius));
        let mut out = Vec::new();
        for bx in lo.0..=hi.0 {
            for (&(_, _), items) in self.buckets.range((bx, lo.1)..=(bx, hi.1)) {
                out.extend(items.iter().copied().filter(|(_, q)| p.distance(*q) <= radius));
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// The `k` nearest entries (distance, then key) excluding `skip`.
    pub fn k_nearest(&self, p: Point2<T>, k: usize, skip: impl Fn(K) -> bool) -> Vec<(K, T)> {
        // grow the search disc until it holds k candidates or covers everything
        let mut radius = self.bucket;
        loop {
            let inside = self.within(p, radius);
            let covers_all = inside.len() == self.len;
            let mut found: Vec<(K, T)> = inside
                .into_iter()
                .filter(|(key, _)| !skip(*key))
                .map(|(key, q)| (key, p.distance(q)))
                .collect();
            if found.len() >= k || covers_all {
                found.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
                found.truncate(k);
                return found;
            }
            radius = radius + radius;
        }
    }
}

fn ring_cells(cx: i64, cy: i64, r: i64) -> Vec<(i64, i64)> {
    if r == 0 {
        return vec![(cx, cy)];
    }
    let mut cells = Vec::with_capacity((8 * r) as usize);
    for x in cx - r..=cx + r {
        cells.push((x, cy - r));
        cells.push((x, cy + r));
    }
    for y in cy - r + 1..cy + r {
        cells.push((cx - r, y));
        cells.push((cx + r, y));
    }
    cells
}
