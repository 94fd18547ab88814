use crate::error::{Error, Result};

pub const SUBMODULAR_UNIVERSE_LIMIT: usize = 12;

/// A witness `A ⊆ B`, `v ∉ B` with `f(A ∪ {v}) - f(A) < f(B ∪ {v}) - f(B)`.
/// Sets are bitmasks over the universe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub a: u32,
    pub b: u32,
    pub v: usize,
    pub gain_a: f64,
    pub gain_b: f64,
}

/// Exhaustively checks diminishing returns of `f` over all subsets of a
/// universe of `size` elements. `f` receives the subset as a bitmask.
/// Returns the first violation found, or `None` when `f` is submodular.
pub fn submodularity_check(size: usize, f: impl Fn(u32) -> f64) -> Result<Option<Violation>> {
    if size > SUBMODULAR_UNIVERSE_LIMIT {
        return Err(Error::InstanceTooLarge {
            slots: size,
            limit: SUBMODULAR_UNIVERSE_LIMIT,
        });
    }
    let full: u32 = if size == 0 { 0 } else { (1u32 << size) - 1 };
    let values: Vec<f64> = (0..=full).map(&f).collect();
    for b in 0..=full {
        let outside = full & !b;
        // every submask a of b, including b itself and the empty set
        let mut a = b;
        loop {
            for v in 0..size {
                if outside & (1 << v) == 0 {
                    continue;
                }
                let gain_a = values[(a | 1 << v) as usize] - values[a as usize];
                let gain_b = values[(b | 1 << v) as usize] - values[b as usize];
                if gain_a < gain_b - 1e-12 {
                    return Ok(Some(Violation {
                        a,
                        b,
                        v,
                        gain_a,
                        gain_b,
                    }));
                }
            }
            if a == 0 {
                break;
            }
            a = (a - 1) & b;
        }
    }
    Ok(None)
}
