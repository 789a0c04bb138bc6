/// All set partitions of `{0, …, n−1}`, each as a list of blocks.
///
/// Enumerated through restricted growth strings, so the order is
/// deterministic. The number of partitions is the Bell number `B_n`.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        let blocks = rgs.iter().copied().max().unwrap_or(0) + 1;
        let mut partition = vec![Vec::new(); blocks];
        for (item, &b) in rgs.iter().enumerate() {
            partition[b].push(item);
        }
        out.push(partition);
        if !next_rgs(&mut rgs) {
            break;
        }
    }
    out
}

/// Advance a restricted growth string; `false` once exhausted.
fn next_rgs(rgs: &mut [usize]) -> bool {
    for i in (1..rgs.len()).rev() {
        let max_prefix = rgs[..i].iter().copied().max().unwrap_or(0);
        if rgs[i] <= max_prefix {
            rgs[i] += 1;
            for r in rgs[i + 1..].iter_mut() {
                *r = 0;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_known_bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203];
        for (n, &b) in bell.iter().enumerate() {
            assert_eq!(set_partitions(n).len(), b, "n = {n}");
        }
    }

    #[test]
    fn every_partition_covers_each_item_once() {
        for p in set_partitions(5) {
            let mut items: Vec<usize> = p.iter().flatten().copied().collect();
            items.sort();
            assert_eq!(items, vec![0, 1, 2, 3, 4]);
            assert!(p.iter().all(|b| !b.is_empty()));
        }
    }
}
