//! Generator for the restricted feasible set: partitions of subchains into
//! groups, each group of two or more mapped to one distinct core, singleton
//! groups mapped to one or more distinct cores, all cores used.

use super::AllocMatrix;
use crate::error::{Error, Result};

const HARD_DIM_LIMIT: usize = 16;

/// Number of feasible assignment matrices, saturating at u64::MAX.
pub fn count_a1_configurations(n: usize, k: usize) -> u64 {
    if n == 0 || k == 0 || n > HARD_DIM_LIMIT || k > HARD_DIM_LIMIT {
        return if n == 0 || k == 0 { 0 } else { u64::MAX };
    }
    let mut total: u64 = 0;
    for_each_partition(n, &mut |groups: &[Vec<usize>]| {
        let sharing = groups.iter().filter(|g| g.len() >= 2).count();
        let singles = groups.len() - sharing;
        total = total.saturating_add(core_assignments(k, sharing, singles));
        true
    });
    total
}

/// Ways to hand k labeled cores to `sharing` groups (exactly one each) and
/// `singles` groups (at least one each), using every core.
fn core_assignments(k: usize, sharing: usize, singles: usize) -> u64 {
    if sharing + singles > k {
        return 0;
    }
    // choose ordered cores for the sharing groups, then surject the rest
    falling(k, sharing).saturating_mul(surjections(k - sharing, singles))
}

fn falling(k: usize, t: usize) -> u64 {
    let mut acc: u64 = 1;
    for i in 0..t {
        acc = acc.saturating_mul((k - i) as u64);
    }
    acc
}

/// Surjections from m labeled items onto u labeled bins.
fn surjections(m: usize, u: usize) -> u64 {
    if u == 0 {
        return (m == 0) as u64;
    }
    let mut total: i128 = 0;
    let mut binom: i128 = 1;
    for i in 0..=u {
        let term = binom * ((u - i) as i128).pow(m as u32);
        total += if i % 2 == 0 { term } else { -term };
        binom = binom * (u as i128 - i as i128) / (i as i128 + 1);
    }
    total.max(0).min(u64::MAX as i128) as u64
}

/// Visits every set partition of {0..n-1} as group lists; groups and members
/// are in first-seen order. The visitor returns false to stop early.
fn for_each_partition(n: usize, visit: &mut impl FnMut(&[Vec<usize>]) -> bool) -> bool {
    fn rec(i: usize, n: usize, groups: &mut Vec<Vec<usize>>, visit: &mut impl FnMut(&[Vec<usize>]) -> bool) -> bool {
        if i == n {
            return visit(groups);
        }
        for g in 0..groups.len() {
            groups[g].push(i);
            if !rec(i + 1, n, groups, visit) {
                groups[g].pop();
                return false;
            }
            groups[g].pop();
        }
        groups.push(vec![i]);
        let cont = rec(i + 1, n, groups, visit);
        groups.pop();
        cont
    }
    rec(0, n, &mut Vec::new(), visit)
}

/// Streams every feasible matrix to the visitor in a deterministic order.
pub fn for_each_a1_configuration(
    n: usize,
    k: usize,
    mut visit: impl FnMut(&AllocMatrix),
) -> Result<()> {
    if n == 0 || k == 0 {
        return Err(Error::InstanceTooLarge("need at least 1 subchain and 1 core".into()));
    }
    let count = count_a1_configurations(n, k);
    if count > super::problem::DEFAULT_CONFIG_GUARD {
        return Err(Error::InstanceTooLarge(format!(
            "{count} feasible configurations exceed the search guard"
        )));
    }

    for_each_partition(n, &mut |groups: &[Vec<usize>]| {
        let g = groups.len();
        if g > k {
            return true;
        }
        // map each core to a group; sharing groups take exactly one core
        let sharing: Vec<bool> = groups.iter().map(|grp| grp.len() >= 2).collect();
        let mut core_group = vec![0usize; k];
        assign_cores(0, k, g, &sharing, &mut core_group, &mut |cg: &[usize]| {
            let mut m = AllocMatrix::new(n, k);
            for (core, &grp) in cg.iter().enumerate() {
                for &sub in &groups[grp] {
                    m.set(sub, core, true);
                }
            }
            visit(&m);
        });
        true
    });
    Ok(())
}

fn assign_cores(
    core: usize,
    k: usize,
    g: usize,
    sharing: &[bool],
    core_group: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    if core == k {
        // every group must be covered; sharing groups exactly once
        let mut counts = vec![0usize; g];
        for &cg in core_group.iter() {
            counts[cg] += 1;
        }
        let ok = counts
            .iter()
            .enumerate()
            .all(|(grp, &c)| c >= 1 && (!sharing[grp] || c == 1));
        if ok {
            emit(core_group);
        }
        return;
    }
    for grp in 0..g {
        core_group[core] = grp;
        assign_cores(core + 1, k, g, sharing, core_group, emit);
    }
}

/// Materialized convenience wrapper around the visitor.
pub fn enumerate_a1_configurations(n: usize, k: usize) -> Result<Vec<AllocMatrix>> {
    let mut out = Vec::new();
    for_each_a1_configuration(n, k, |m| out.push(m.clone()))?;
    Ok(out)
}
