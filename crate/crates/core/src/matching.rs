//! Maximum-weight bipartite matching.
//!
//! Rectangular Hungarian algorithm with row/column potentials, `O(n^2 m)` for
//! an `n x m` problem with `n <= m`. Negative weights are treated as "leave
//! unmatched": the solver works on `max(w, 0)` and drops negative edges from
//! the result, so with nonnegative weights a maximum-cardinality optimum is
//! returned.

/// Dense row-major weight matrix; rows are the left vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged weight matrix");
        Self { rows: rows.len(), cols, data: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    fn gain(&self, row: usize, col: usize) -> f64 {
        self.get(row, col).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `(left, right)` pairs sorted by left index.
    pub edges: Vec<(usize, usize)>,
    pub value: f64,
}

/// Optimal matching; among equal-value optima the lexicographically smallest
/// edge list is returned.
pub fn max_weight_matching(weights: &WeightMatrix) -> Matching {
    let (l, r) = (weights.rows, weights.cols);
    if l == 0 || r == 0 {
        return Matching { edges: Vec::new(), value: 0.0 };
    }
    let all_rows = vec![true; l];
    let all_cols = vec![true; r];
    let optimum = restricted_value(weights, &all_rows, &all_cols);
    let tol = 1e-10 * optimum.abs().max(1.0);
    let target = l.min(r);

    let mut row_open = all_rows;
    let mut col_open = all_cols;
    let mut open_cols = r;
    let mut fixed: Vec<(usize, usize)> = Vec::with_capacity(target);
    let mut fixed_sum = 0.0;
    for i in 0..l {
        if fixed.len() == target {
            break;
        }
        row_open[i] = false;
        let open_rows = l - i - 1;
        for j in 0..r {
            if !col_open[j] {
                continue;
            }
            col_open[j] = false;
            let card = fixed.len() + 1 + open_rows.min(open_cols - 1);
            let feasible = card == target
                && fixed_sum + weights.gain(i, j) + restricted_value(weights, &row_open, &col_open) >= optimum - tol;
            if feasible {
                fixed.push((i, j));
                fixed_sum += weights.gain(i, j);
                open_cols -= 1;
                break;
            }
            col_open[j] = true;
        }
    }
    fixed.retain(|&(i, j)| weights.get(i, j) >= 0.0);
    let value = fixed.iter().map(|&(i, j)| weights.get(i, j)).sum();
    Matching { edges: fixed, value }
}

/// Optimal matching value without the tie-break pass.
pub fn max_weight_value(weights: &WeightMatrix) -> f64 {
    if weights.rows == 0 || weights.cols == 0 {
        return 0.0;
    }
    assignment(weights.rows, weights.cols, |i, j| weights.gain(i, j))
        .into_iter()
        .map(|(i, j)| weights.gain(i, j))
        .sum()
}

fn restricted_value(weights: &WeightMatrix, rows: &[bool], cols: &[bool]) -> f64 {
    let ri: Vec<usize> = (0..weights.rows).filter(|&i| rows[i]).collect();
    let ci: Vec<usize> = (0..weights.cols).filter(|&j| cols[j]).collect();
    if ri.is_empty() || ci.is_empty() {
        return 0.0;
    }
    let gain = |a: usize, b: usize| weights.gain(ri[a], ci[b]);
    assignment(ri.len(), ci.len(), gain).into_iter().map(|(a, b)| gain(a, b)).sum()
}

/// Full-cardinality maximum assignment for an `n x m` gain function,
/// transposing when `n > m`. Returns `(row, col)` pairs.
fn assignment(n: usize, m: usize, gain: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    if n <= m {
        hungarian(n, m, |i, j| -gain(i, j)).into_iter().enumerate().collect()
    } else {
        hungarian(m, n, |j, i| -gain(i, j)).into_iter().enumerate().map(|(j, i)| (i, j)).collect()
    }
}

/// Minimum-cost assignment of every row (`n <= m`). Returns the column of each row.
fn hungarian(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    debug_assert!(n <= m);
    // One-based potentials; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![0.0; m + 1];
    let mut used = vec![false; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0usize; n];
    for j in 1..=m {
        if owner[j] != 0 {
            col_of[owner[j] - 1] = j - 1;
        }
    }
    col_of
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell() {
        let m = max_weight_matching(&WeightMatrix::from_rows(&[vec![0.7]]));
        assert_eq!(m.edges, vec![(0, 0)]);
        assert_eq!(m.value, 0.7);
    }

    #[test]
    fn two_by_two_tie_takes_smallest_edges() {
        // Both perfect matchings are worth 5.
        let m = max_weight_matching(&WeightMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]));
        assert_eq!(m.value, 5.0);
        assert_eq!(m.edges, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn rectangular_example() {
        let w = WeightMatrix::from_rows(&[vec![0.9, 0.1, 0.5], vec![0.8, 0.7, 0.2]]);
        let m = max_weight_matching(&w);
        assert!((m.value - 1.6).abs() < 1e-12);
        assert_eq!(m.edges, vec![(0, 0), (1, 1)]);
        assert!((max_weight_value(&w) - 1.6).abs() < 1e-12);
    }

    #[test]
    fn tall_matrix_prefers_early_rows() {
        let w = WeightMatrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]);
        let m = max_weight_matching(&w);
        assert_eq!(m.edges, vec![(0, 0)]);
    }

    #[test]
    fn negative_edges_left_unmatched() {
        let w = WeightMatrix::from_rows(&[vec![-1.0, 0.5], vec![-2.0, -3.0]]);
        let m = max_weight_matching(&w);
        assert_eq!(m.edges, vec![(0, 1)]);
        assert_eq!(m.value, 0.5);
    }

    #[test]
    fn zero_weights_still_saturate() {
        let w = WeightMatrix::zeros(2, 3);
        let m = max_weight_matching(&w);
        assert_eq!(m.edges, vec![(0, 0), (1, 1)]);
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn empty_sides() {
        assert_eq!(max_weight_matching(&WeightMatrix::zeros(0, 3)).edges, vec![]);
        assert_eq!(max_weight_value(&WeightMatrix::zeros(2, 0)), 0.0);
    }
}
