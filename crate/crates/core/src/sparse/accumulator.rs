/// Dense scatter buffer for building one sparse column at a time.
///
/// Rows are accumulated in arbitrary order and drained sorted; the buffer is
/// left zeroed for reuse.
pub(crate) struct Accumulator {
    values: Vec<f64>,
    occupied: Vec<bool>,
    touched: Vec<usize>,
}

impl Accumulator {
    pub(crate) fn new(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
            occupied: vec![false; len],
            touched: Vec::new(),
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, row: usize, value: f64) {
        if !self.occupied[row] {
            self.occupied[row] = true;
            self.touched.push(row);
        }
        self.values[row] += value;
    }

    /// Drains accumulated rows in increasing order, dropping those whose
    /// magnitude is below `threshold`.
    pub(crate) fn drain_sorted(&mut self, threshold: f64) -> Vec<(usize, f64)> {
        self.touched.sort_unstable();
        let mut out = Vec::with_capacity(self.touched.len());
        for &r in &self.touched {
            let v = self.values[r];
            if v != 0.0 && v.abs() >= threshold {
                out.push((r, v));
            }
            self.values[r] = 0.0;
            self.occupied[r] = false;
        }
        self.touched.clear();
        out
    }
}
