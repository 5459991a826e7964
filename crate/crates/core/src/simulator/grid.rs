//! Uniform cell grid for the binding search.
//!
//! Candidate A molecules are registered in every cell their capture cube
//! `[x - r, x + r]³` overlaps. With a cell edge of at least `2r` that is at
//! most eight cells, and any enzyme within `r` of a molecule is then found by
//! scanning the single cell that contains the enzyme.

const EMPTY: u32 = u32::MAX;

/// Cap on cells per axis; beyond it the cell edge grows instead.
const MAX_CELLS_PER_AXIS: usize = 160;

#[derive(Debug, Clone)]
pub(crate) struct BindingGrid {
    lo: f64,
    inv_cell: f64,
    dims: usize,
    heads: Vec<u32>,
    /// (A slot, next entry) linked lists.
    entries: Vec<(u32, u32)>,
    touched: Vec<u32>,
}

impl BindingGrid {
    /// Grid covering `[-half - reach, half + reach]³`.
    pub(crate) fn new(half: f64, reach: f64) -> Self {
        let span = 2.0 * (half + reach);
        let cell = (2.0 * reach).max(span / MAX_CELLS_PER_AXIS as f64);
        let dims = ((span / cell).ceil() as usize).max(1);
        Self {
            lo: -(half + reach),
            inv_cell: 1.0 / cell,
            dims,
            heads: vec![EMPTY; dims * dims * dims],
            entries: Vec::new(),
            touched: Vec::new(),
        }
    }

    pub(crate) fn clear(&mut self) {
        for &c in &self.touched {
            self.heads[c as usize] = EMPTY;
        }
        self.touched.clear();
        self.entries.clear();
    }

    #[inline]
    fn axis_cell(&self, x: f64) -> Option<usize> {
        let f = (x - self.lo) * self.inv_cell;
        if f < 0.0 {
            return None;
        }
        let i = f as usize;
        (i < self.dims).then_some(i)
    }

    #[inline]
    fn axis_range(&self, x: f64, r: f64) -> Option<(usize, usize)> {
        let top = (self.dims - 1) as f64;
        let a = ((x - r - self.lo) * self.inv_cell).floor().max(0.0);
        let b = ((x + r - self.lo) * self.inv_cell).floor().min(top);
        (a <= b).then_some((a as usize, b as usize))
    }

    /// Registers `slot` in every cell overlapping the cube of half-width `r`
    /// around `p`.
    pub(crate) fn insert(&mut self, slot: u32, p: [f64; 3], r: f64) {
        let (Some(x), Some(y), Some(z)) = (
            self.axis_range(p[0], r),
            self.axis_range(p[1], r),
            self.axis_range(p[2], r),
        ) else {
            return;
        };
        let d = self.dims;
        for i in x.0..=x.1 {
            for j in y.0..=y.1 {
                for k in z.0..=z.1 {
                    let c = (i * d + j) * d + k;
                    let head = self.heads[c];
                    if head == EMPTY {
                        self.touched.push(c as u32);
                    }
                    self.heads[c] = self.entries.len() as u32;
                    self.entries.push((slot, head));
                }
            }
        }
    }

    /// Slots registered in the cell containing `p`.
    pub(crate) fn candidates(&self, p: [f64; 3]) -> Candidates<'_> {
        let head = match (self.axis_cell(p[0]), self.axis_cell(p[1]), self.axis_cell(p[2])) {
            (Some(i), Some(j), Some(k)) => self.heads[(i * self.dims + j) * self.dims + k],
            _ => EMPTY,
        };
        Candidates { grid: self, cur: head }
    }

    #[cfg(test)]
    pub(crate) fn cell_size(&self) -> f64 {
        1.0 / self.inv_cell
    }
}

pub(crate) struct Candidates<'a> {
    grid: &'a BindingGrid,
    cur: u32,
}

impl Iterator for Candidates<'_> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        if self.cur == EMPTY {
            return None;
        }
        let (slot, next) = self.grid.entries[self.cur as usize];
        self.cur = next;
        Some(slot)
    }
}
