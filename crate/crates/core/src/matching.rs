//! Maximum-weight bipartite assignment (Kuhn-Munkres) with incremental
//! updates.
//!
//! [`solve`] is the labelled Hungarian method run stage by stage: each stage
//! grows an alternating tree from one free row, adjusting the vertex labels
//! (α per row, θ per column, with `α_i + θ_j ≥ w_ij`) until an augmenting
//! path to a free column appears. Because one stage restores optimality
//! after a single free row appears, the same machinery serves
//! [`add_vertex`] (one new row and column) and [`update_weights`] (one row or
//! column changed) at O(n²) each.
//!
//! [`kma_routine`] is the textbook cover-the-zeros procedure on the
//! negated-and-shifted matrix. It shares no code with the stage solver and
//! is kept as an independent route.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mac::UNSERVABLE;

/// Zero detection tolerance of the cover-based routine.
pub const ZERO_TOL: f64 = 1e-9;

const NONE: usize = usize::MAX;

/// Dense row-major weight matrix. Row labels name STAs (or `None` for a
/// dummy row), column labels name APs (replicated columns share a label).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    row_labels: Vec<Option<usize>>,
    col_labels: Vec<Option<usize>>,
}

impl WeightMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::dims(format!("{rows}x{cols} = {} values", rows * cols), values.len()));
        }
        Ok(Self {
            rows,
            cols,
            values,
            row_labels: (0..rows).map(Some).collect(),
            col_labels: (0..cols).map(Some).collect(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::dims(format!("rows of length {cols}"), format!("a row of length {}", bad.len())));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self::new(rows, cols, vec![value; rows * cols]).expect("sizes agree")
    }

    pub fn with_labels(mut self, row_labels: Vec<Option<usize>>, col_labels: Vec<Option<usize>>) -> Result<Self> {
        if row_labels.len() != self.rows || col_labels.len() != self.cols {
            return Err(Error::dims(
                format!("{} row and {} column labels", self.rows, self.cols),
                format!("{} and {}", row_labels.len(), col_labels.len()),
            ));
        }
        self.row_labels = row_labels;
        self.col_labels = col_labels;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_labels(&self) -> &[Option<usize>] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[Option<usize>] {
        &self.col_labels
    }

    pub fn set_row_label(&mut self, r: usize, label: Option<usize>) {
        self.row_labels[r] = label;
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NonFiniteWeight {
                row: i / self.cols,
                col: i % self.cols,
            }),
            None => Ok(()),
        }
    }

    /// Zero-pads to a square matrix; padded lines get `None` labels.
    fn squared(&self) -> WeightMatrix {
        let n = self.rows.max(self.cols);
        if self.is_square() {
            return self.clone();
        }
        let mut values = vec![0.0; n * n];
        for r in 0..self.rows {
            values[r * n..r * n + self.cols].copy_from_slice(self.row(r));
        }
        let mut row_labels = self.row_labels.clone();
        row_labels.resize(n, None);
        let mut col_labels = self.col_labels.clone();
        col_labels.resize(n, None);
        WeightMatrix {
            rows: n,
            cols: n,
            values,
            row_labels,
            col_labels,
        }
    }
}

/// Replicates every column `capacity` times (AP-major: column `a·c + s` is
/// slot `s` of AP `a`) and squares the result with unservable dummy rows or
/// columns. Labels carry the original row and column identities.
pub fn pad_and_replicate(w: &WeightMatrix, capacity: usize) -> Result<WeightMatrix> {
    let (n, m) = (w.rows, w.cols);
    if m == 0 {
        return Err(Error::invalid("capacity", "need at least one column to replicate"));
    }
    let needed = n.div_ceil(m);
    if capacity < needed.max(1) {
        return Err(Error::invalid(
            "capacity",
            format!("{capacity} slots per column cannot hold {n} rows over {m} columns"),
        ));
    }
    pad_and_replicate_per_column(w, &vec![capacity; m])
}

/// Like [`pad_and_replicate`] with a separate slot count per column. Slots
/// of column `a` are contiguous and columns keep their order.
pub fn pad_and_replicate_per_column(w: &WeightMatrix, capacities: &[usize]) -> Result<WeightMatrix> {
    let (n, m) = (w.rows, w.cols);
    if capacities.len() != m {
        return Err(Error::dims(format!("{m} capacities"), capacities.len()));
    }
    let col_src: Vec<usize> = capacities
        .iter()
        .enumerate()
        .flat_map(|(a, &c)| std::iter::repeat_n(a, c))
        .collect();
    let real_cols = col_src.len();
    let dim = n.max(real_cols);
    let mut values = vec![UNSERVABLE; dim * dim];
    for r in 0..n {
        let src = w.row(r);
        for (c, &a) in col_src.iter().enumerate() {
            values[r * dim + c] = src[a];
        }
    }
    let mut row_labels = w.row_labels.clone();
    row_labels.resize(dim, None);
    let mut col_labels: Vec<Option<usize>> = col_src.iter().map(|&a| w.col_labels[a]).collect();
    col_labels.resize(dim, None);
    WeightMatrix::new(dim, dim, values)?.with_labels(row_labels, col_labels)
}

/// A one-to-one assignment on a square working matrix together with the
/// dual labels that certify its optimality.
#[derive(Clone, Debug)]
pub struct Matching {
    /// Square working matrix (original values).
    weights: WeightMatrix,
    /// `weights` with each row shifted by `offset[r]` (its maximum when the
    /// row was last set). Labels are kept relative to this matrix.
    reduced: Vec<f64>,
    offset: Vec<f64>,
    row_to_col: Vec<Option<usize>>,
    col_to_row: Vec<Option<usize>>,
    alpha: Vec<f64>,
    theta: Vec<f64>,
    orig_rows: usize,
    orig_cols: usize,
    stages: usize,
}

impl Matching {
    fn dim(&self) -> usize {
        self.weights.rows
    }

    fn from_square(weights: WeightMatrix, orig_rows: usize, orig_cols: usize) -> Self {
        let n = weights.rows;
        let mut offset = vec![0.0; n];
        let mut reduced = weights.values.clone();
        for r in 0..n {
            let row = &mut reduced[r * n..(r + 1) * n];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            offset[r] = if max.is_finite() { max } else { 0.0 };
            row.iter_mut().for_each(|v| *v -= offset[r]);
        }
        // Row reduction leaves every row maximum at zero; column reduction
        // then sets each θ to its column maximum.
        let alpha = vec![0.0; n];
        let theta = (0..n)
            .map(|c| (0..n).map(|r| reduced[r * n + c]).fold(f64::NEG_INFINITY, f64::max))
            .map(|t| if t.is_finite() { t } else { 0.0 })
            .collect();
        Self {
            weights,
            reduced,
            offset,
            row_to_col: vec![None; n],
            col_to_row: vec![None; n],
            alpha,
            theta,
            orig_rows,
            orig_cols,
            stages: 0,
        }
    }

    /// Assigned column for each row of the input matrix; `None` when the row
    /// landed on internal padding.
    pub fn assignment(&self) -> Vec<Option<usize>> {
        self.row_to_col[..self.orig_rows]
            .iter()
            .map(|c| c.filter(|&c| c < self.orig_cols))
            .collect()
    }

    /// Full assignment on the square working matrix.
    pub fn working_assignment(&self) -> &[Option<usize>] {
        &self.row_to_col
    }

    pub fn row_of_column(&self, c: usize) -> Option<usize> {
        self.col_to_row[c]
    }

    /// Sum of the chosen working-matrix weights.
    pub fn objective(&self) -> f64 {
        self.row_to_col
            .iter()
            .enumerate()
            .filter_map(|(r, c)| c.map(|c| self.weights.get(r, c)))
            .sum()
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    /// Row labels α in the units of the original weights.
    pub fn alpha(&self) -> Vec<f64> {
        self.alpha.iter().zip(&self.offset).map(|(a, o)| a + o).collect()
    }

    /// Column labels θ.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Number of augmenting stages run since the matching was created.
    pub fn stages(&self) -> usize {
        self.stages
    }

    /// Largest violation of dual feasibility (`α_i + θ_j ≥ w_ij`) and of
    /// complementary slackness on matched edges. Both should be ~0.
    pub fn dual_residuals(&self) -> (f64, f64) {
        let n = self.dim();
        let mut infeasible = 0f64;
        let mut slack = 0f64;
        for r in 0..n {
            for c in 0..n {
                let s = self.alpha[r] + self.theta[c] - self.reduced[r * n + c];
                infeasible = infeasible.max(-s);
                if self.row_to_col[r] == Some(c) {
                    slack = slack.max(s.abs());
                }
            }
        }
        (infeasible, slack)
    }

    fn reduced_row(&self, r: usize) -> &[f64] {
        let n = self.dim();
        &self.reduced[r * n..(r + 1) * n]
    }

    fn set_row(&mut self, r: usize, values: &[f64]) {
        let n = self.dim();
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.offset[r] = max;
        for (c, &v) in values.iter().enumerate() {
            self.weights.set(r, c, v);
            self.reduced[r * n + c] = v - max;
        }
    }

    fn unmatch_row(&mut self, r: usize) {
        if let Some(c) = self.row_to_col[r].take() {
            self.col_to_row[c] = None;
        }
    }

    /// One Hungarian stage: augment from the free row `root`.
    fn stage(&mut self, root: usize) {
        let n = self.dim();
        let mut minv = vec![f64::INFINITY; n];
        let mut way = vec![NONE; n];
        let mut used = vec![false; n];
        let mut tree_rows = vec![root];
        let mut cur_row = root;
        let mut cur_col = NONE;
        let end_col = loop {
            let a = self.alpha[cur_row];
            let mut delta = f64::INFINITY;
            let mut next = NONE;
            let row = &self.reduced[cur_row * n..(cur_row + 1) * n];
            for j in 0..n {
                if used[j] {
                    continue;
                }
                let s = a + self.theta[j] - row[j];
                if s < minv[j] {
                    minv[j] = s;
                    way[j] = cur_col;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    next = j;
                }
            }
            debug_assert!(next != NONE, "square matrix always has a free column");
            for &r in &tree_rows {
                self.alpha[r] -= delta;
            }
            for j in 0..n {
                if used[j] {
                    self.theta[j] += delta;
                } else {
                    minv[j] -= delta;
                }
            }
            used[next] = true;
            match self.col_to_row[next] {
                None => break next,
                Some(r) => {
                    tree_rows.push(r);
                    cur_row = r;
                    cur_col = next;
                }
            }
        };
        let mut j = end_col;
        loop {
            let prev = way[j];
            let r = if prev == NONE {
                root
            } else {
                self.col_to_row[prev].expect("tree column is matched")
            };
            self.col_to_row[j] = Some(r);
            self.row_to_col[r] = Some(j);
            if prev == NONE {
                break;
            }
            j = prev;
        }
        self.stages += 1;
    }

    fn require_square_origin(&self) -> Result<()> {
        if self.orig_rows != self.dim() || self.orig_cols != self.dim() {
            return Err(Error::Unsupported(
                "incremental updates need a matching solved on a square matrix".into(),
            ));
        }
        Ok(())
    }
}

fn max_minus(values: &[f64], labels: &[f64]) -> f64 {
    values
        .iter()
        .zip(labels)
        .map(|(w, l)| w - l)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Maximum-weight assignment. Rectangular inputs are zero-padded to square;
/// every row of the smaller side is matched.
pub fn solve(w: &WeightMatrix) -> Result<Matching> {
    w.check_finite()?;
    let mut m = Matching::from_square(w.squared(), w.rows, w.cols);
    for r in 0..m.dim() {
        m.stage(r);
    }
    Ok(m)
}

/// Extends an optimal matching by one row and one column and restores
/// optimality with a single stage. The top-left block of `w_extended` must
/// equal the current working matrix.
pub fn add_vertex(mut m: Matching, w_extended: &WeightMatrix) -> Result<Matching> {
    m.require_square_origin()?;
    let n = m.dim();
    if w_extended.rows != n + 1 || w_extended.cols != n + 1 {
        return Err(Error::dims(
            format!("{}x{}", n + 1, n + 1),
            format!("{}x{}", w_extended.rows, w_extended.cols),
        ));
    }
    w_extended.check_finite()?;
    for r in 0..n {
        if w_extended.row(r)[..n] != *m.weights.row(r) {
            return Err(Error::Unsupported(format!(
                "extension changes existing row {r}; use update_weights for that"
            )));
        }
    }
    let n1 = n + 1;
    let mut reduced = vec![0.0; n1 * n1];
    for r in 0..n {
        reduced[r * n1..r * n1 + n].copy_from_slice(m.reduced_row(r));
        reduced[r * n1 + n] = w_extended.get(r, n) - m.offset[r];
    }
    let new_row = w_extended.row(n);
    let new_offset = new_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for c in 0..n1 {
        reduced[n * n1 + c] = new_row[c] - new_offset;
    }

    // Labels for the new vertices, in original-weight units.
    let alpha_orig = m.alpha();
    let from_old_rows = (0..n)
        .map(|r| w_extended.get(r, n) - alpha_orig[r])
        .fold(f64::NEG_INFINITY, f64::max);
    let theta_new = from_old_rows.max(w_extended.get(n, n));
    let mut theta = m.theta.clone();
    theta.push(theta_new);
    let alpha_new = max_minus(new_row, &theta);

    m.weights = w_extended.clone();
    m.reduced = reduced;
    m.offset.push(new_offset);
    m.alpha.push(alpha_new - new_offset);
    m.theta = theta;
    m.row_to_col.push(None);
    m.col_to_row.push(None);
    m.orig_rows = n1;
    m.orig_cols = n1;
    m.stage(n);
    Ok(m)
}

/// Which line of the working matrix changed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Line {
    Row(usize),
    Col(usize),
}

/// Replaces one row or column, drops the affected matched edge, re-seeds the
/// corresponding label and runs one stage. Returns `m` untouched if the new
/// values equal the old ones.
pub fn update_weights(mut m: Matching, changed: Line, new_values: &[f64]) -> Result<Matching> {
    m.require_square_origin()?;
    let n = m.dim();
    if new_values.len() != n {
        return Err(Error::dims(format!("{n} values"), new_values.len()));
    }
    if let Some(c) = new_values.iter().position(|v| !v.is_finite()) {
        let (row, col) = match changed {
            Line::Row(r) => (r, c),
            Line::Col(j) => (c, j),
        };
        return Err(Error::NonFiniteWeight { row, col });
    }
    match changed {
        Line::Row(r) => {
            if r >= n {
                return Err(Error::OutOfRange {
                    what: "working rows",
                    index: r,
                    len: n,
                });
            }
            if m.weights.row(r) == new_values {
                return Ok(m);
            }
            m.set_row(r, new_values);
            m.unmatch_row(r);
            m.alpha[r] = max_minus(m.reduced_row(r), &m.theta);
            m.stage(r);
        }
        Line::Col(c) => {
            if c >= n {
                return Err(Error::OutOfRange {
                    what: "working columns",
                    index: c,
                    len: n,
                });
            }
            if m.weights.column(c) == new_values {
                return Ok(m);
            }
            for (r, &v) in new_values.iter().enumerate() {
                m.weights.set(r, c, v);
                m.reduced[r * n + c] = v - m.offset[r];
            }
            let freed = m.col_to_row[c].expect("square matching covers every column");
            m.unmatch_row(freed);
            m.theta[c] = (0..n)
                .map(|r| m.reduced[r * n + c] - m.alpha[r])
                .fold(f64::NEG_INFINITY, f64::max);
            m.stage(freed);
        }
    }
    Ok(m)
}

/// State of the cover-based routine: the transformed matrix, cover markers
/// and the number of covered lines.
#[derive(Clone, Debug)]
pub struct KmaWorkspace {
    n: usize,
    cost: Vec<f64>,
    pub row_covered: Vec<bool>,
    pub col_covered: Vec<bool>,
    starred: Vec<Option<usize>>,
    primed: Vec<Option<usize>>,
    pub covered_lines: usize,
}

impl KmaWorkspace {
    /// Negates and shifts a maximization matrix into non-negative costs,
    /// then subtracts row minima and column minima.
    fn new(w: &WeightMatrix) -> Self {
        let sq = w.squared();
        let n = sq.rows;
        let max = sq.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut cost: Vec<f64> = sq.values.iter().map(|v| max - v).collect();
        for r in 0..n {
            let row = &mut cost[r * n..(r + 1) * n];
            let min = row.iter().copied().fold(f64::INFINITY, f64::min);
            row.iter_mut().for_each(|v| *v -= min);
        }
        for c in 0..n {
            let min = (0..n).map(|r| cost[r * n + c]).fold(f64::INFINITY, f64::min);
            (0..n).for_each(|r| cost[r * n + c] -= min);
        }
        Self {
            n,
            cost,
            row_covered: vec![false; n],
            col_covered: vec![false; n],
            starred: vec![None; n],
            primed: vec![None; n],
            covered_lines: 0,
        }
    }

    fn is_zero(&self, r: usize, c: usize) -> bool {
        self.cost[r * self.n + c].abs() <= ZERO_TOL
    }

    /// Transformed cost matrix 𝒲*.
    pub fn transformed(&self) -> &[f64] {
        &self.cost
    }

    fn star_initial_zeros(&mut self) {
        let mut col_has_star = vec![false; self.n];
        for r in 0..self.n {
            for c in 0..self.n {
                if !col_has_star[c] && self.is_zero(r, c) {
                    self.starred[r] = Some(c);
                    col_has_star[c] = true;
                    break;
                }
            }
        }
    }

    fn cover_starred_columns(&mut self) -> usize {
        self.col_covered.iter_mut().for_each(|c| *c = false);
        self.row_covered.iter_mut().for_each(|c| *c = false);
        for c in self.starred.iter().flatten() {
            self.col_covered[*c] = true;
        }
        self.covered_lines = self.col_covered.iter().filter(|&&c| c).count();
        self.covered_lines
    }

    fn find_uncovered_zero(&self) -> Option<(usize, usize)> {
        (0..self.n)
            .filter(|&r| !self.row_covered[r])
            .flat_map(|r| (0..self.n).map(move |c| (r, c)))
            .find(|&(r, c)| !self.col_covered[c] && self.is_zero(r, c))
    }

    fn star_column_row(&self, c: usize) -> Option<usize> {
        self.starred.iter().position(|&s| s == Some(c))
    }

    /// Subtract the smallest uncovered entry from uncovered columns and add
    /// it to covered rows.
    fn adjust(&mut self) {
        let n = self.n;
        let mut min = f64::INFINITY;
        for r in (0..n).filter(|&r| !self.row_covered[r]) {
            for c in (0..n).filter(|&c| !self.col_covered[c]) {
                min = min.min(self.cost[r * n + c]);
            }
        }
        for r in 0..n {
            for c in 0..n {
                if self.row_covered[r] {
                    self.cost[r * n + c] += min;
                }
                if !self.col_covered[c] {
                    self.cost[r * n + c] -= min;
                }
            }
        }
    }

    fn augment(&mut self, start: (usize, usize)) {
        let mut path = vec![start];
        loop {
            let (_, c) = *path.last().unwrap();
            match self.star_column_row(c) {
                None => break,
                Some(r) => {
                    path.push((r, c));
                    let pc = self.primed[r].expect("covered row holds a primed zero");
                    path.push((r, pc));
                }
            }
        }
        // Each starred zero on the path shares its row with the next primed
        // zero, so starring the primes also unstars them.
        for &(r, c) in path.iter().step_by(2) {
            self.starred[r] = Some(c);
        }
        self.primed.iter_mut().for_each(|p| *p = None);
    }

    fn run(&mut self) {
        self.star_initial_zeros();
        while self.cover_starred_columns() < self.n {
            loop {
                match self.find_uncovered_zero() {
                    None => self.adjust(),
                    Some((r, c)) => {
                        self.primed[r] = Some(c);
                        match self.starred[r] {
                            Some(sc) => {
                                self.row_covered[r] = true;
                                self.col_covered[sc] = false;
                            }
                            None => {
                                self.augment((r, c));
                                break;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Result of the cover-based routine.
#[derive(Clone, Debug)]
pub struct KmaOutcome {
    pub assignment: Vec<Option<usize>>,
    pub objective: f64,
    pub workspace: KmaWorkspace,
}

/// Textbook Kuhn-Munkres on the negated and shifted matrix: reduce rows and
/// columns, cover zeros, shift by the smallest uncovered entry until `n`
/// lines are needed, then read one independent zero per row.
pub fn kma_routine(w: &WeightMatrix) -> Result<KmaOutcome> {
    w.check_finite()?;
    let mut ws = KmaWorkspace::new(w);
    ws.run();
    let sq = w.squared();
    let assignment: Vec<Option<usize>> = ws.starred[..w.rows]
        .iter()
        .map(|c| c.filter(|&c| c < w.cols))
        .collect();
    let objective = ws
        .starred
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| sq.get(r, c)))
        .sum();
    Ok(KmaOutcome {
        assignment,
        objective,
        workspace: ws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive maximum over all permutations (square only).
    fn brute_force(w: &WeightMatrix) -> f64 {
        fn rec(w: &WeightMatrix, r: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if r == w.rows() {
                *best = best.max(acc);
                return;
            }
            for c in 0..w.cols() {
                if !used[c] {
                    used[c] = true;
                    rec(w, r + 1, used, acc + w.get(r, c), best);
                    used[c] = false;
                }
            }
        }
        let mut best = f64::NEG_INFINITY;
        rec(w, 0, &mut vec![false; w.cols()], 0.0, &mut best);
        best
    }

    fn random_int(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> WeightMatrix {
        let v = (0..rows * cols).map(|_| rng.random_range(-20..=50) as f64).collect();
        WeightMatrix::new(rows, cols, v).unwrap()
    }

    fn assert_certified(m: &Matching) {
        let (infeasible, slack) = m.dual_residuals();
        assert!(infeasible < 1e-9 && slack < 1e-9, "residuals {infeasible} {slack}");
    }

    #[test]
    fn all_zero_matrix() {
        let m = solve(&WeightMatrix::filled(3, 3, 0.0)).unwrap();
        assert_eq!(m.objective(), 0.0);
        let mut cols: Vec<_> = m.assignment().into_iter().map(Option::unwrap).collect();
        cols.sort();
        assert_eq!(cols, vec![0, 1, 2]);
    }

    #[test]
    fn two_by_two_example() {
        let w = WeightMatrix::from_rows(&[vec![4.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let m = solve(&w).unwrap();
        assert_eq!(m.assignment(), vec![Some(0), Some(1)]);
        assert_eq!(m.objective(), 7.0);
        assert_certified(&m);
        let k = kma_routine(&w).unwrap();
        assert_eq!(k.assignment, vec![Some(0), Some(1)]);
        assert_eq!(k.objective, 7.0);
        assert!(k.workspace.covered_lines <= 2);
    }

    #[test]
    fn non_finite_is_rejected() {
        let w = WeightMatrix::from_rows(&[vec![1.0, f64::NAN]]).unwrap();
        assert_eq!(solve(&w).unwrap_err(), Error::NonFiniteWeight { row: 0, col: 1 });
        assert!(kma_routine(&w).is_err());
    }

    #[test]
    fn ties_take_lowest_column() {
        let m = solve(&WeightMatrix::filled(1, 3, 5.0)).unwrap();
        assert_eq!(m.assignment(), vec![Some(0)]);
    }

    #[test]
    fn random_square_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.random_range(1..=6);
            let w = random_int(&mut rng, n, n);
            let m = solve(&w).unwrap();
            assert_eq!(m.objective(), brute_force(&w));
            assert_certified(&m);
            assert_eq!(kma_routine(&w).unwrap().objective, m.objective());
        }
    }

    #[test]
    fn rectangular_inputs() {
        let wide = WeightMatrix::from_rows(&[vec![1.0, 9.0, 3.0], vec![8.0, 9.0, 1.0]]).unwrap();
        let m = solve(&wide).unwrap();
        assert_eq!(m.assignment(), vec![Some(1), Some(0)]);
        assert_eq!(m.objective(), 17.0);

        let tall = WeightMatrix::from_rows(&[vec![1.0], vec![5.0], vec![3.0]]).unwrap();
        let m = solve(&tall).unwrap();
        assert_eq!(m.assignment(), vec![None, Some(0), None]);
        assert_eq!(m.objective(), 5.0);
    }

    #[test]
    fn pad_identity_when_square_and_single_slot() {
        let w = WeightMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let p = pad_and_replicate(&w, 1).unwrap();
        assert_eq!(p.values(), w.values());
        assert_eq!(p.col_labels(), &[Some(0), Some(1)]);
    }

    #[test]
    fn pad_dimensions_five_by_two_cap_three() {
        let w = WeightMatrix::filled(5, 2, 1.0);
        let p = pad_and_replicate(&w, 3).unwrap();
        assert_eq!((p.rows(), p.cols()), (6, 6));
        assert_eq!(p.col_labels(), &[Some(0), Some(0), Some(0), Some(1), Some(1), Some(1)]);
        assert_eq!(p.row_labels()[5], None);
        assert!(p.row(5).iter().all(|&v| v == UNSERVABLE));
        assert!(pad_and_replicate(&w, 2).is_err());
    }

    #[test]
    fn pad_adds_dummy_columns_when_rows_exceed_slots() {
        // capacity above the minimum still squares on the larger side
        let w = WeightMatrix::filled(7, 3, 2.0);
        let p = pad_and_replicate(&w, 3).unwrap();
        assert_eq!((p.rows(), p.cols()), (9, 9));
        let w = WeightMatrix::filled(4, 1, 2.0);
        let p = pad_and_replicate(&w, 4).unwrap();
        assert_eq!((p.rows(), p.cols()), (4, 4));
    }

    #[test]
    fn per_column_capacities() {
        let w = WeightMatrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        let p = pad_and_replicate_per_column(&w, &[2, 0, 1]).unwrap();
        assert_eq!((p.rows(), p.cols()), (3, 3));
        assert_eq!(p.row(0), &[1.0, 1.0, 3.0]);
        assert_eq!(p.col_labels(), &[Some(0), Some(0), Some(2)]);
        assert!(pad_and_replicate_per_column(&w, &[1]).is_err());
    }

    #[test]
    fn add_vertex_example() {
        let w = WeightMatrix::from_rows(&[vec![4.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let m = solve(&w).unwrap();
        let ext = WeightMatrix::from_rows(&[vec![4.0, 1.0, 0.0], vec![2.0, 3.0, 0.0], vec![9.0, 0.0, 0.0]]).unwrap();
        let m = add_vertex(m, &ext).unwrap();
        assert_eq!(m.objective(), brute_force(&ext));
        assert_eq!(m.objective(), solve(&ext).unwrap().objective());
        assert_certified(&m);
    }

    #[test]
    fn add_unservable_vertex_keeps_old_rows() {
        let w = WeightMatrix::from_rows(&[vec![4.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let m = solve(&w).unwrap();
        let before = m.assignment();
        let ext = WeightMatrix::from_rows(&[
            vec![4.0, 1.0, UNSERVABLE],
            vec![2.0, 3.0, UNSERVABLE],
            vec![UNSERVABLE, UNSERVABLE, UNSERVABLE],
        ])
        .unwrap();
        let m = add_vertex(m, &ext).unwrap();
        assert_eq!(&m.assignment()[..2], &before[..]);
        assert_eq!(m.assignment()[2], Some(2));
    }

    #[test]
    fn add_vertex_rejects_bad_shapes() {
        let w = WeightMatrix::from_rows(&[vec![4.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let m = solve(&w).unwrap();
        let e = add_vertex(m.clone(), &WeightMatrix::filled(4, 4, 0.0)).unwrap_err();
        assert!(matches!(e, Error::DimensionMismatch { .. }));
        let tampered = WeightMatrix::from_rows(&[vec![5.0, 1.0, 0.0], vec![2.0, 3.0, 0.0], vec![0.0; 3]]).unwrap();
        assert!(add_vertex(m, &tampered).is_err());
    }

    #[test]
    fn update_row_example() {
        let w = WeightMatrix::from_rows(&[vec![4.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let m = solve(&w).unwrap();
        let m = update_weights(m, Line::Row(0), &[0.0, 9.0]).unwrap();
        assert_eq!(m.objective(), 11.0);
        assert_eq!(m.assignment(), vec![Some(1), Some(0)]);
        assert_certified(&m);
    }

    #[test]
    fn unchanged_update_is_a_no_op() {
        let w = WeightMatrix::from_rows(&[vec![4.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let m = solve(&w).unwrap();
        let stages = m.stages();
        let m = update_weights(m, Line::Row(1), &[2.0, 3.0]).unwrap();
        assert_eq!(m.stages(), stages);
        let m = update_weights(m, Line::Col(0), &[4.0, 2.0]).unwrap();
        assert_eq!(m.stages(), stages);
        assert_eq!(m.assignment(), vec![Some(0), Some(1)]);
    }

    #[test]
    fn update_errors() {
        let w = WeightMatrix::from_rows(&[vec![4.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let m = solve(&w).unwrap();
        assert!(matches!(
            update_weights(m.clone(), Line::Row(0), &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            update_weights(m.clone(), Line::Col(5), &[1.0, 2.0]),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            update_weights(m, Line::Row(0), &[1.0, f64::INFINITY]),
            Err(Error::NonFiniteWeight { row: 0, col: 1 })
        ));
        let rect = solve(&WeightMatrix::filled(1, 2, 1.0)).unwrap();
        assert!(matches!(
            update_weights(rect, Line::Row(0), &[1.0, 2.0]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn random_row_and_column_updates_match_resolve() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 6;
        let mut w = random_int(&mut rng, n, n);
        let mut m = solve(&w).unwrap();
        for step in 0..60 {
            let line = if step % 2 == 0 {
                Line::Row(rng.random_range(0..n))
            } else {
                Line::Col(rng.random_range(0..n))
            };
            let vals: Vec<f64> = (0..n).map(|_| rng.random_range(-20..=50) as f64).collect();
            for (i, &v) in vals.iter().enumerate() {
                match line {
                    Line::Row(r) => w.set(r, i, v),
                    Line::Col(c) => w.set(i, c, v),
                }
            }
            m = update_weights(m, line, &vals).unwrap();
            assert_eq!(m.objective(), solve(&w).unwrap().objective());
            assert_certified(&m);
        }
    }

    #[test]
    fn unservable_entries_keep_real_rows_exact() {
        // 3 rows, capacity 2 over 2 columns -> one dummy row full of sentinels
        let w = WeightMatrix::from_rows(&[vec![0.25, 0.5], vec![0.125, 0.75], vec![UNSERVABLE, 0.3]]).unwrap();
        let p = pad_and_replicate(&w, 2).unwrap();
        let m = solve(&p).unwrap();
        let real: f64 = (0..3)
            .map(|r| p.get(r, m.working_assignment()[r].unwrap()))
            .sum();
        assert_eq!(real, 0.25 + 0.75 + 0.3);
    }
}
