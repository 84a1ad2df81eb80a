//! Small combinatorial helpers: binomial coefficients and lexicographic
//! ranking of fixed-size subsets (used to index the y_T points).

/// C(n, k) in u64; callers stay well inside u64 range at desk scale.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i as u64 + 1);
    }
    acc
}

/// Lexicographic rank of a sorted `d`-subset of `{0, .., n-1}`.
pub fn subset_rank(subset: &[usize], n: usize) -> u64 {
    let d = subset.len();
    let mut rank = 0u64;
    let mut prev: isize = -1;
    for (i, &s) in subset.iter().enumerate() {
        for c in (prev + 1) as usize..s {
            rank += binomial(n - 1 - c, d - 1 - i);
        }
        prev = s as isize;
    }
    rank
}

/// Inverse of [`subset_rank`]: the `rank`-th `d`-subset of `{0, .., n-1}`
/// in lexicographic order.
pub fn subset_unrank(mut rank: u64, n: usize, d: usize) -> Vec<usize> {
    assert!(rank < binomial(n, d), "rank out of range");
    let mut subset = Vec::with_capacity(d);
    let mut c = 0usize;
    for i in 0..d {
        loop {
            let below = binomial(n - 1 - c, d - 1 - i);
            if rank < below {
                break;
            }
            rank -= below;
            c += 1;
        }
        subset.push(c);
        c += 1;
    }
    subset
}
