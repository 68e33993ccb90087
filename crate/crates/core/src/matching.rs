//! Small assignment problems: matching estimates to columns or to ground truth.

/// Largest size solved by exhaustive search; bigger problems fall back to greedy.
pub const EXHAUSTIVE_LIMIT: usize = 8;

/// All permutations of `0..k` (Heap's algorithm, deterministic order).
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut out = vec![perm.clone()];
    let mut c = vec![0usize; k];
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            out.push(perm.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Assignment minimizing `Σ_r cost[r][perm[r]]` over a square cost matrix.
///
/// Returns `perm` with `perm[row] = column`. Exact up to
/// [`EXHAUSTIVE_LIMIT`], greedy (smallest cost first) beyond it.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let k = cost.len();
    if k == 0 {
        return Vec::new();
    }
    if k <= EXHAUSTIVE_LIMIT {
        let mut best = (f64::INFINITY, Vec::new());
        for p in permutations(k) {
            let total: f64 = p.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
            if total < best.0 || best.1.is_empty() {
                best = (total, p);
            }
        }
        return best.1;
    }
    let mut entries: Vec<(f64, usize, usize)> = (0..k)
        .flat_map(|r| (0..k).map(move |c| (r, c)))
        .map(|(r, c)| (cost[r][c], r, c))
        .collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut perm = vec![usize::MAX; k];
    let mut used = vec![false; k];
    for (_, r, c) in entries {
        if perm[r] == usize::MAX && !used[c] {
            perm[r] = c;
            used[c] = true;
        }
    }
    perm
}
