//! System-wide split of the replication degree across regions.
//!
//! Degrees are proportional to the eligible population of each region,
//! rounded by largest remainder and capped at the number of populated virtual
//! nodes in the region. Capped overflow moves to the regions next in
//! remainder order.

use crate::error::PlanError;

pub fn swd(populations: &[usize], caps: &[usize], r: usize) -> Result<Vec<usize>, PlanError> {
    assert_eq!(populations.len(), caps.len());
    assert!(r >= 1, "replication degree must be at least 1");
    let available: usize = caps.iter().sum();
    if r > available {
        return Err(PlanError::DegreeInfeasible {
            requested: r,
            available,
        });
    }
    let total: usize = populations.iter().sum();
    let regions = populations.len();

    // Quota r * pop / total = floor + rem / total, kept in integers.
    let mut degrees: Vec<usize> = populations
        .iter()
        .zip(caps)
        .map(|(&p, &cap)| (r * p).checked_div(total).unwrap_or(0).min(cap))
        .collect();
    let remainder = |l: usize| {
        if total == 0 {
            0
        } else {
            r * populations[l] % total
        }
    };
    let mut order: Vec<usize> = (0..regions).collect();
    order.sort_by(|&a, &b| remainder(b).cmp(&remainder(a)).then(a.cmp(&b)));

    let mut left = r - degrees.iter().sum::<usize>();
    while left > 0 {
        let mut progressed = false;
        for &l in &order {
            if left == 0 {
                break;
            }
            if degrees[l] < caps[l] {
                degrees[l] += 1;
                left -= 1;
                progressed = true;
            }
        }
        debug_assert!(progressed, "capacity check guarantees progress");
    }
    Ok(degrees)
}
