use crate::corruption::CorruptionTag;

/// Direct-form FIR with zero history before the first sample.
pub fn fir_filter(input: &[i64], coeffs: &[i64]) -> Vec<i64> {
    assert!(!coeffs.is_empty(), "FIR needs at least one coefficient");
    (0..input.len())
        .map(|n| {
            coeffs
                .iter()
                .enumerate()
                .take(n + 1)
                .fold(0i64, |acc, (k, &c)| acc.wrapping_add(c.wrapping_mul(input[n - k])))
        })
        .collect()
}

/// FIR as computed by a possibly faulty accelerator instance.
/// `fault` is the instance's corruption tag when any essential bit is flipped.
pub fn fir_on_instance(input: &[i64], coeffs: &[i64], fault: Option<CorruptionTag>) -> Vec<i64> {
    let mut out = fir_filter(input, coeffs);
    if let Some(tag) = fault {
        tag.apply_i64(&mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_filter() {
        let x = vec![4, -2, 9, 0, 7];
        assert_eq!(fir_filter(&x, &[1]), x);
    }

    #[test]
    fn two_tap_sum() {
        assert_eq!(fir_filter(&[1, 2, 3], &[1, 1]), vec![1, 3, 5]);
    }

    #[test]
    fn faulty_instance_differs() {
        let x: Vec<i64> = (0..32).collect();
        let good = fir_on_instance(&x, &[1, 2, 1], None);
        let bad = fir_on_instance(&x, &[1, 2, 1], Some(CorruptionTag(0xABCD)));
        assert_eq!(good, fir_filter(&x, &[1, 2, 1]));
        assert!(good.iter().zip(&bad).any(|(a, b)| a != b));
        // same fault, same corruption
        assert_eq!(bad, fir_on_instance(&x, &[1, 2, 1], Some(CorruptionTag(0xABCD))));
    }
}
