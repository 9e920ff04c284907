use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimpleStepFunction;
use crate::dyadic::AxisBox;
use crate::error::Result;
use crate::scalar::ExactScalar;

/// Finest endpoint precision of generated boxes.
pub const RANDOM_BOX_PRECISION: u32 = 4;

/// One to four overlapping dyadic boxes at precision at most 4 with nonzero values in
/// `{±1/4, …, ±2}`; `dim = None` draws the dimension from `{1, 2}`.
pub fn random_step_function(rng: &mut impl Rng, dim: Option<usize>) -> Result<SimpleStepFunction> {
    let n = dim.unwrap_or_else(|| rng.gen_range(1..=2));
    let pieces = rng.gen_range(1..=4);
    let mut terms = Vec::with_capacity(pieces);
    for _ in 0..pieces {
        let p = rng.gen_range(1..=RANDOM_BOX_PRECISION);
        let side = 1i64 << p;
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for _ in 0..n {
            let a = rng.gen_range(0..side);
            let b = rng.gen_range(a + 1..=side);
            lo.push(ExactScalar::dyadic(a, p));
            hi.push(ExactScalar::dyadic(b, p));
        }
        let mut v = rng.gen_range(-8..=8i64);
        if v == 0 {
            v = 1;
        }
        terms.push((AxisBox::open(lo, hi)?, ExactScalar::dyadic(v, 2)));
    }
    SimpleStepFunction::from_terms(n, terms)
}

/// `count` functions from a ChaCha stream seeded with `seed`.
pub fn random_corpus(
    seed: u64,
    count: usize,
    dim: Option<usize>,
) -> Result<Vec<SimpleStepFunction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_step_function(&mut rng, dim))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_reproducible() {
        let a = random_corpus(4, 12, None).unwrap();
        assert_eq!(a, random_corpus(4, 12, None).unwrap());
        assert_ne!(a, random_corpus(5, 12, None).unwrap());
        assert!(a.iter().all(|f| f.precision() <= RANDOM_BOX_PRECISION));
        assert!(random_corpus(1, 5, Some(2))
            .unwrap()
            .iter()
            .all(|f| f.dim() == 2));
    }
}
