//! Minimum-cost rectangular assignment via shortest augmenting paths
//! (Jonker-Volgenant style), O(rows² · cols) for rows <= cols. Wider or
//! taller matrices are handled by transposing, so exactly
//! `min(rows, cols)` pairs are assigned.

/// Row-major cost matrix.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    pub rows: usize,
    pub cols: usize,
    costs: Vec<u32>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, costs: Vec<u32>) -> Self {
        assert_eq!(costs.len(), rows * cols, "cost matrix shape mismatch");
        CostMatrix { rows, cols, costs }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> u32) -> Self {
        let mut costs = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                costs.push(f(i, j));
            }
        }
        CostMatrix { rows, cols, costs }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.costs[row * self.cols + col]
    }

    fn transposed(&self) -> CostMatrix {
        CostMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }
}

/// Assign rows to columns minimizing total cost. Returns, per row, the
/// assigned column or `None` when `rows > cols` leaves the row out.
/// Deterministic: scans rows in order and columns in index order, so equal
/// costs favor lower indices.
pub fn min_cost_assignment(matrix: &CostMatrix) -> Vec<Option<usize>> {
    if matrix.rows == 0 || matrix.cols == 0 {
        return vec![None; matrix.rows];
    }
    if matrix.rows <= matrix.cols {
        solve_wide(matrix)
    } else {
        // transpose, solve, and invert the column->row map
        let col_assignment = solve_wide(&matrix.transposed());
        let mut row_assignment = vec![None; matrix.rows];
        for (col, row) in col_assignment.into_iter().enumerate() {
            if let Some(row) = row {
                row_assignment[row] = Some(col);
            }
        }
        row_assignment
    }
}

/// Core solver for rows <= cols, using 1-based dual potentials. `matched[j]`
/// holds the row matched to column j, with index 0 as the virtual root.
fn solve_wide(matrix: &CostMatrix) -> Vec<Option<usize>> {
    let n = matrix.rows;
    let m = matrix.cols;
    let inf = i64::MAX / 2;

    let mut row_potential = vec![0i64; n + 1];
    let mut col_potential = vec![0i64; m + 1];
    let mut matched = vec![0usize; m + 1];
    let mut path = vec![0usize; m + 1];

    for row in 1..=n {
        matched[0] = row;
        let mut j0 = 0usize;
        let mut min_reduced = vec![inf; m + 1];
        let mut visited = vec![false; m + 1];

        // grow the alternating tree until a free column is reached
        loop {
            visited[j0] = true;
            let i0 = matched[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
                if visited[j] {
                    continue;
                }
                let reduced = matrix.get(i0 - 1, j - 1) as i64
                    - row_potential[i0]
                    - col_potential[j];
                if reduced < min_reduced[j] {
                    min_reduced[j] = reduced;
                    path[j] = j0;
                }
                if min_reduced[j] < delta {
                    delta = min_reduced[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if visited[j] {
                    row_potential[matched[j]] += delta;
                    col_potential[j] -= delta;
                } else {
                    min_reduced[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }

        // augment along the found path
        while j0 != 0 {
            let j1 = path[j0];
            matched[j0] = matched[j1];
            j0 = j1;
        }
    }

    let mut assignment = vec![None; n];
    for j in 1..=m {
        if matched[j] != 0 {
            assignment[matched[j] - 1] = Some(j - 1);
        }
    }
    assignment
}

/// Total cost of an assignment produced by [`min_cost_assignment`].
pub fn assignment_cost(matrix: &CostMatrix, assignment: &[Option<usize>]) -> u64 {
    assignment
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| matrix.get(i, j) as u64))
        .sum()
}
