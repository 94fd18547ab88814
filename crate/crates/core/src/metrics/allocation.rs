use crate::error::{Error, Result};

/// Jain's fairness index `(Σx)² / (n Σx²)`.
pub fn jain_index(allocations: &[f64]) -> Result<f64> {
    let sum: f64 = allocations.iter().sum();
    let squares: f64 = allocations.iter().map(|x| x * x).sum();
    if allocations.is_empty() || squares == 0.0 {
        return Err(Error::ZeroAllocation);
    }
    Ok(sum * sum / (allocations.len() as f64 * squares))
}

/// `|P(ŷ=1 | class 0) - P(ŷ=1 | class 1)|` over paired predictions and
/// protected-class flags (`true` is class 1).
pub fn demographic_parity(predictions: &[bool], protected: &[bool]) -> Result<f64> {
    let mut positives = [0usize; 2];
    let mut totals = [0usize; 2];
    for (&y, &a) in predictions.iter().zip(protected) {
        totals[a as usize] += 1;
        positives[a as usize] += y as usize;
    }
    if let Some(class) = totals.iter().position(|&t| t == 0) {
        return Err(Error::EmptyProtectedClass(class as u8));
    }
    let rate = |c: usize| positives[c] as f64 / totals[c] as f64;
    Ok((rate(0) - rate(1)).abs())
}
