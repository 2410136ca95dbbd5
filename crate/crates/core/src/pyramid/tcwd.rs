//! Time-slot coverage weights: slots where few virtual nodes exceed the
//! region-wide average utility get larger weights.

/// `ut[i][t]` is the averaged utility of virtual node `i` in slot `t`;
/// `counts[i] > 0` marks populated virtual nodes. Falls back to uniform
/// weights when nothing is populated.
pub fn tcwd(ut: &[Vec<f64>], counts: &[u32]) -> Vec<f64> {
    assert_eq!(ut.len(), counts.len(), "utility rows and counts disagree");
    let slots = ut.first().map_or(0, Vec::len);
    assert!(
        ut.iter().all(|row| row.len() == slots),
        "ragged utility table"
    );
    if slots == 0 {
        return Vec::new();
    }
    let populated: Vec<&Vec<f64>> = ut
        .iter()
        .zip(counts)
        .filter(|(_, &c)| c > 0)
        .map(|(row, _)| row)
        .collect();
    let uniform = vec![1.0 / slots as f64; slots];
    if populated.is_empty() {
        return uniform;
    }

    let cells = (populated.len() * slots) as f64;
    let avg = populated.iter().flat_map(|row| row.iter()).sum::<f64>() / cells;
    let poorly: Vec<usize> = (0..slots)
        .map(|t| populated.iter().filter(|row| row[t] <= avg).count())
        .collect();
    let total: usize = poorly.iter().sum();
    if total == 0 {
        return uniform;
    }
    poorly.iter().map(|&c| c as f64 / total as f64).collect()
}
