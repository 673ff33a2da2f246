use std::ops::Range;

use serde::Serialize;

use crate::freeconv::FreeConvolution;

/// Indices `i` with `gamma_i` in `(E0 - qG, E0 + qG)`; contiguous because the
/// classical locations are sorted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BulkIndexSet {
    pub q: f64,
    pub start: usize,
    pub end: usize,
}

impl BulkIndexSet {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        self.range().contains(&i)
    }

    pub fn is_subset_of(&self, other: &BulkIndexSet) -> bool {
        self.is_empty() || (other.start <= self.start && self.end <= other.end)
    }
}

pub fn bulk_index_set(fc: &FreeConvolution, q: f64) -> BulkIndexSet {
    let sc = fc.profile().scales();
    let (lo, hi) = (sc.center - q * sc.window, sc.center + q * sc.window);
    let g = fc.classical_locations();
    let start = g.partition_point(|&x| x <= lo);
    let end = g.partition_point(|&x| x < hi).max(start);
    BulkIndexSet {
        q,
        start,
        end,
    }
}
