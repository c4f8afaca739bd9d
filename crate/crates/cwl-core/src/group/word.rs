//! Freely reduced words over the alphabet {±1, .., ±r}.
//!
//! A letter is a nonzero `i8`: `+k` is the k-th generator (1-indexed), `-k`
//! its inverse. A word is reduced when no letter is followed by its negation.
//! Generators print as `a, b, c, ..`, inverses as `a^-1`; runs may be written
//! `a^3` or `b^-2` in the input syntax.

use super::GroupError;

pub const MAX_RANK: usize = 26;

/// Multiplies two reduced words, cancelling across the seam only.
pub fn mul_reduced(lhs: &[i8], rhs: &[i8]) -> Vec<i8> {
    let mut cut = 0;
    while cut < lhs.len() && cut < rhs.len() {
        if lhs[lhs.len() - 1 - cut] != -rhs[cut] {
            break;
        }
        cut += 1;
    }
    let mut out = Vec::with_capacity(lhs.len() + rhs.len() - 2 * cut);
    out.extend_from_slice(&lhs[..lhs.len() - cut]);
    out.extend_from_slice(&rhs[cut..]);
    out
}

pub fn inv(word: &[i8]) -> Vec<i8> {
    word.iter().rev().map(|&x| -x).collect()
}

/// Reduces an arbitrary letter sequence to its free normal form.
pub fn reduce(letters: &[i8]) -> Vec<i8> {
    let mut out: Vec<i8> = Vec::with_capacity(letters.len());
    for &x in letters {
        if x == 0 {
            continue;
        }
        if out.last() == Some(&-x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}

pub fn is_reduced(word: &[i8]) -> bool {
    word.iter().all(|&x| x != 0) && word.windows(2).all(|w| w[0] != -w[1])
}

pub fn letter_name(letter: i8) -> String {
    debug_assert!(letter != 0);
    let base = (b'a' + (letter.unsigned_abs() - 1)) as char;
    if letter > 0 {
        base.to_string()
    } else {
        format!("{base}^-1")
    }
}

pub fn format_word(word: &[i8]) -> String {
    if word.is_empty() {
        return "e".to_string();
    }
    let mut out = String::new();
    let mut i = 0;
    while i < word.len() {
        let mut run = 1;
        while i + run < word.len() && word[i + run] == word[i] {
            run += 1;
        }
        let base = (b'a' + (word[i].unsigned_abs() - 1)) as char;
        let exp = if word[i] > 0 {
            run as i64
        } else {
            -(run as i64)
        };
        if exp == 1 {
            out.push(base);
        } else {
            out.push_str(&format!("{base}^{exp}"));
        }
        i += run;
    }
    out
}

/// Parses words like `"ab^-1a"`, `"a^3b^-2"`, or `"e"` for the identity.
pub fn parse_word(rank: usize, input: &str) -> Result<Vec<i8>, GroupError> {
    let bad = |msg: &str| GroupError::BadWord {
        input: input.to_string(),
        reason: msg.to_string(),
    };
    if rank == 0 || rank > MAX_RANK {
        return Err(bad("rank must be between 1 and 26"));
    }
    let s = input.trim();
    if s.is_empty() || s == "e" || s == "1" {
        return Ok(Vec::new());
    }
    let chars: Vec<char> = s.chars().collect();
    let mut letters: Vec<i8> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if !c.is_ascii_lowercase() {
            return Err(bad("expected a generator letter"));
        }
        let idx = (c as u8 - b'a') as usize + 1;
        if idx > rank {
            return Err(bad("letter outside the generator alphabet"));
        }
        i += 1;
        let mut exp: i64 = 1;
        if i < chars.len() && chars[i] == '^' {
            i += 1;
            let start = i;
            if i < chars.len() && chars[i] == '-' {
                i += 1;
            }
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            exp = s[char_byte_offset(s, start)..char_byte_offset(s, i)]
                .parse()
                .map_err(|_| bad("malformed exponent"))?;
        }
        let letter = if exp >= 0 { idx as i8 } else { -(idx as i8) };
        for _ in 0..exp.unsigned_abs() {
            letters.push(letter);
        }
    }
    Ok(reduce(&letters))
}

fn char_byte_offset(s: &str, char_idx: usize) -> usize {
    s.char_indices()
        .nth(char_idx)
        .map(|(b, _)| b)
        .unwrap_or(s.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seam_cancellation() {
        // ab * b^-1 = a
        assert_eq!(mul_reduced(&[1, 2], &[-2]), vec![1]);
        // full cancellation to the identity
        assert_eq!(mul_reduced(&[1, 2], &[-2, -1]), Vec::<i8>::new());
        assert_eq!(mul_reduced(&[], &[2]), vec![2]);
    }

    #[test]
    fn inverse_round_trip() {
        let w = vec![1, 2, -1, 2, 2];
        assert_eq!(mul_reduced(&w, &inv(&w)), Vec::<i8>::new());
        assert_eq!(inv(&inv(&w)), w);
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_word(2, "ab^-1a").unwrap(), vec![1, -2, 1]);
        assert_eq!(parse_word(2, "a^3b^-2").unwrap(), vec![1, 1, 1, -2, -2]);
        assert_eq!(parse_word(2, "e").unwrap(), Vec::<i8>::new());
        assert_eq!(parse_word(2, "aa^-1").unwrap(), Vec::<i8>::new());
        assert!(parse_word(2, "c").is_err());
        assert!(parse_word(2, "a^").is_err());
        assert_eq!(format_word(&[1, -2, -2]), "ab^-2");
        assert_eq!(format_word(&[]), "e");
        let w = parse_word(3, "abc^-2a").unwrap();
        assert_eq!(parse_word(3, &format_word(&w)).unwrap(), w);
    }

    #[test]
    fn reduce_arbitrary() {
        assert_eq!(reduce(&[1, 2, -2, -1, 3]), vec![3]);
        assert!(is_reduced(&[1, 2, 1]));
        assert!(!is_reduced(&[1, -1]));
    }
}
