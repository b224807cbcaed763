//! Single-error-correct, double-error-detect code over 32-bit frame words.
//!
//! Hsiao construction: seven check bits, every data bit mapped to a distinct
//! weight-3 column. A single flip yields an odd-weight syndrome equal to its
//! column; any double flip yields a non-zero even-weight syndrome.

const fn build_columns() -> [u8; 32] {
    let mut cols = [0u8; 32];
    let mut v: u8 = 1;
    let mut n = 0;
    while n < 32 {
        if v.count_ones() == 3 {
            cols[n] = v;
            n += 1;
        }
        v += 1;
    }
    cols
}

const COLUMNS: [u8; 32] = build_columns();

const fn build_masks() -> [u32; 7] {
    let mut masks = [0u32; 7];
    let mut bit = 0;
    while bit < 32 {
        let mut j = 0;
        while j < 7 {
            if COLUMNS[bit] & (1 << j) != 0 {
                masks[j] |= 1 << bit;
            }
            j += 1;
        }
        bit += 1;
    }
    masks
}

const MASKS: [u32; 7] = build_masks();

/// 7-bit check code.
pub fn encode(word: u32) -> u8 {
    let mut check = 0u8;
    for (j, m) in MASKS.iter().enumerate() {
        check |= (((word & m).count_ones() & 1) as u8) << j;
    }
    check
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Syndrome {
    Clean,
    /// Single data-bit error at this bit index.
    Single(u32),
    /// Two or more bit errors; not correctable.
    Uncorrectable,
}

pub fn check(word: u32, stored: u8) -> Syndrome {
    let syndrome = encode(word) ^ stored;
    if syndrome == 0 {
        return Syndrome::Clean;
    }
    match COLUMNS.iter().position(|&c| c == syndrome) {
        Some(bit) => Syndrome::Single(bit as u32),
        None => Syndrome::Uncorrectable,
    }
}
