use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Cohen's kappa between two annotators. Full agreement on a single category
/// gives 1.
pub fn cohens_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("label sequences differ in length ({} vs {})", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::invalid("kappa needs at least one label pair"));
    }
    let n = a.len() as f64;
    let mut marg: BTreeMap<&T, (usize, usize)> = BTreeMap::new();
    let mut agree = 0usize;
    for (x, y) in a.iter().zip(b) {
        agree += (x == y) as usize;
        marg.entry(x).or_default().0 += 1;
        marg.entry(y).or_default().1 += 1;
    }
    let po = agree as f64 / n;
    let pe: f64 = marg.values().map(|&(ca, cb)| (ca as f64 / n) * (cb as f64 / n)).sum();
    if pe >= 1.0 {
        return Ok(if agree == a.len() { 1.0 } else { 0.0 });
    }
    Ok((po - pe) / (1.0 - pe))
}
