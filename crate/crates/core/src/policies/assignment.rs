//! Rectangular maximum-weight assignment (Hungarian method with potentials).

/// Cost standing in for a forbidden pair. Large relative to any weight in
/// `[0, 1]` but small enough that potentials stay exact.
const FORBIDDEN: f64 = 1.0e6;

/// Minimum-cost assignment of every row to a distinct column; requires
/// `rows <= cols`. Returns the column for each row.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "more rows ({n}) than columns ({m})");
    assert!(cost.iter().all(|r| r.len() == m), "ragged cost matrix");

    // 1-based potentials; p[j] is the row matched to column j.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Maximum-weight matching where each row may also stay unmatched.
/// `None` entries are forbidden pairs. Rows matched with zero weight are
/// reported unmatched.
pub fn max_weight_assignment(weights: &[Vec<Option<f64>>]) -> Vec<Option<usize>> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    let m = weights[0].len();
    // One zero-cost "unmatched" column per row.
    let cost: Vec<Vec<f64>> = weights
        .iter()
        .map(|row| {
            assert_eq!(row.len(), m, "ragged weight matrix");
            row.iter().map(|w| w.map_or(FORBIDDEN, |w| -w)).chain(std::iter::repeat_n(0.0, n)).collect()
        })
        .collect();
    min_cost_assignment(&cost)
        .into_iter()
        .enumerate()
        .map(|(i, j)| match weights[i].get(j).copied().flatten() {
            Some(w) if w > 0.0 => Some(j),
            _ => None,
        })
        .collect()
}

/// Sum of matched weights.
pub fn matched_weight(weights: &[Vec<Option<f64>>], matching: &[Option<usize>]) -> f64 {
    matching
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.and_then(|j| weights[i][j]))
        .sum()
}
