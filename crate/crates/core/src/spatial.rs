use crate::mesh::Point;

/// Uniform bucket grid over an axis-aligned box. Items are registered by
/// bounding box; queries return candidate ids in insertion order per bucket.
#[derive(Debug, Clone)]
pub(crate) struct BucketGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

const MAX_CELLS_PER_AXIS: usize = 2048;

impl BucketGrid {
    pub(crate) fn new(lo: Point, hi: Point, cell: f64) -> Self {
        let span_x = (hi.x - lo.x).max(0.0);
        let span_y = (hi.y - lo.y).max(0.0);
        let span = span_x.max(span_y).max(f64::MIN_POSITIVE);
        let cell = if cell.is_finite() && cell > 0.0 { cell.max(span / MAX_CELLS_PER_AXIS as f64) } else { span };
        let nx = ((span_x / cell).floor() as usize + 1).min(MAX_CELLS_PER_AXIS);
        let ny = ((span_y / cell).floor() as usize + 1).min(MAX_CELLS_PER_AXIS);
        Self { origin: lo, cell, nx, ny, buckets: vec![Vec::new(); nx * ny] }
    }

    fn clamp_index(&self, v: f64, n: usize) -> usize {
        if !(v > 0.0) {
            0
        } else {
            ((v / self.cell).floor() as usize).min(n - 1)
        }
    }

    fn range(&self, lo: Point, hi: Point) -> (usize, usize, usize, usize) {
        let i0 = self.clamp_index(lo.x - self.origin.x, self.nx);
        let i1 = self.clamp_index(hi.x - self.origin.x, self.nx);
        let j0 = self.clamp_index(lo.y - self.origin.y, self.ny);
        let j1 = self.clamp_index(hi.y - self.origin.y, self.ny);
        (i0, i1, j0, j1)
    }

    pub(crate) fn insert(&mut self, id: u32, lo: Point, hi: Point) {
        let (i0, i1, j0, j1) = self.range(lo, hi);
        for j in j0..=j1 {
            for i in i0..=i1 {
                self.buckets[j * self.nx + i].push(id);
            }
        }
    }

    /// Appends every id whose registered box may intersect `[lo, hi]`.
    /// The output can contain duplicates.
    pub(crate) fn query(&self, lo: Point, hi: Point, out: &mut Vec<u32>) {
        let (i0, i1, j0, j1) = self.range(lo, hi);
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.extend_from_slice(&self.buckets[j * self.nx + i]);
            }
        }
    }

    pub(crate) fn bucket_at(&self, p: Point) -> &[u32] {
        let i = self.clamp_index(p.x - self.origin.x, self.nx);
        let j = self.clamp_index(p.y - self.origin.y, self.ny);
        &self.buckets[j * self.nx + i]
    }
}
