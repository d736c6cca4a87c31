//! Ratcliff/Obershelp gestalt similarity over characters.
//!
//! Longest-block ties go to the earliest start in `a`, then in `b`. No junk
//! heuristics, so the ratio depends on the two strings alone.

/// Longest common block in `a[alo..ahi]`, `b[blo..bhi]` as (i, j, size).
fn longest_match(a: &[char], b: &[char], alo: usize, ahi: usize, blo: usize, bhi: usize) -> (usize, usize, usize) {
    let (mut bi, mut bj, mut best) = (alo, blo, 0);
    // run[j + 1] = length of the common suffix ending at a[i - 1], b[j].
    let mut prev = vec![0usize; bhi - blo + 1];
    let mut cur = vec![0usize; bhi - blo + 1];
    for i in alo..ahi {
        for j in blo..bhi {
            let k = j - blo + 1;
            if a[i] == b[j] {
                cur[k] = prev[k - 1] + 1;
                if cur[k] > best {
                    best = cur[k];
                    bi = i + 1 - best;
                    bj = j + 1 - best;
                }
            } else {
                cur[k] = 0;
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (bi, bj, best)
}

/// Total matched characters, found by taking the longest block and recursing on both flanks.
pub fn matched_chars(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut total = 0;
    let mut todo = vec![(0, a.len(), 0, b.len())];
    while let Some((alo, ahi, blo, bhi)) = todo.pop() {
        if alo >= ahi || blo >= bhi {
            continue;
        }
        let (i, j, k) = longest_match(&a, &b, alo, ahi, blo, bhi);
        if k == 0 {
            continue;
        }
        total += k;
        todo.push((alo, i, blo, j));
        todo.push((i + k, ahi, j + k, bhi));
    }
    total
}

/// `2M / (|a| + |b|)`; two empty strings are identical (1.0).
pub fn similarity(a: &str, b: &str) -> f64 {
    let len = a.chars().count() + b.chars().count();
    if len == 0 {
        return 1.0;
    }
    2.0 * matched_chars(a, b) as f64 / len as f64
}
