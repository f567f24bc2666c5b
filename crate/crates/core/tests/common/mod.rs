#![allow(dead_code)]

use depsemble::oracle::random_projective_parse;
use depsemble::{HeadVector, ParserOutput};
use rand::Rng;

pub fn hv(h: &[usize]) -> HeadVector {
    HeadVector::new(h.to_vec())
}

/// Every head assignment of `n` words, each word pointing at 0..=n.
pub fn all_assignments(n: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = (n + 1).pow(n as u32);
    (0..total).map(move |mut code| {
        let mut heads = Vec::with_capacity(n);
        for _ in 0..n {
            heads.push(code % (n + 1));
            code /= n + 1;
        }
        heads
    })
}

/// Single-root, acyclic, and no two arcs cross. Written from scratch so it
/// shares nothing with the library's own checks.
pub fn is_projective_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    if heads.iter().enumerate().any(|(i, &h)| h == i + 1 || h > n) {
        return false;
    }
    if heads.iter().filter(|&&h| h == 0).count() != 1 {
        return false;
    }
    for start in 1..=n {
        let mut w = start;
        for _ in 0..=n {
            if w == 0 {
                break;
            }
            w = heads[w - 1];
        }
        if w != 0 {
            return false;
        }
    }
    let arcs: Vec<(usize, usize)> = heads
        .iter()
        .enumerate()
        .map(|(i, &h)| (h.min(i + 1), h.max(i + 1)))
        .collect();
    for &(a, b) in &arcs {
        for &(c, d) in &arcs {
            if a < c && c < b && b < d {
                return false;
            }
        }
    }
    true
}

/// Whether `w` lies in the subtree under `top`.
fn descends(heads: &[usize], mut w: usize, top: usize) -> bool {
    while w != 0 {
        if w == top {
            return true;
        }
        w = heads[w - 1];
    }
    false
}

/// Copy of `gold` where each non-root word is re-attached to a wrong head
/// with probability `p_err`. Keeps a single-root tree.
pub fn perturb<R: Rng>(rng: &mut R, gold: &HeadVector, p_err: f64) -> HeadVector {
    let mut h = gold.heads().to_vec();
    let n = h.len();
    for j in 1..=n {
        if h[j - 1] == 0 || !rng.gen_bool(p_err) {
            continue;
        }
        let options: Vec<usize> = (1..=n)
            .filter(|&c| c != j && c != h[j - 1] && !descends(&h, c, j))
            .collect();
        if let Some(&c) = options.get(rng.gen_range(0..options.len().max(1))) {
            h[j - 1] = c;
        }
    }
    HeadVector::new(h)
}

/// Random projective gold corpus with sentence lengths in `lens`.
pub fn gold_corpus<R: Rng>(rng: &mut R, sentences: usize, lens: std::ops::RangeInclusive<usize>) -> Vec<HeadVector> {
    (0..sentences)
        .map(|_| {
            let n = rng.gen_range(lens.clone());
            if n <= 8 {
                random_projective_parse(rng, n).unwrap()
            } else {
                random_chain_tree(rng, n)
            }
        })
        .collect()
}

/// Projective tree for longer sentences: split recursively around a random
/// head.
fn random_chain_tree<R: Rng>(rng: &mut R, n: usize) -> HeadVector {
    fn build<R: Rng>(rng: &mut R, heads: &mut [usize], b: usize, e: usize, parent: usize) {
        if b >= e {
            return;
        }
        let r = rng.gen_range(b..e);
        heads[r - 1] = parent;
        build(rng, heads, b, r, r);
        build(rng, heads, r + 1, e, r);
    }
    let mut heads = vec![0; n];
    build(rng, &mut heads, 1, n + 1, 0);
    HeadVector::new(heads)
}

pub fn output(name: &str, parses: Vec<HeadVector>) -> ParserOutput {
    ParserOutput::new(name, parses).unwrap()
}
