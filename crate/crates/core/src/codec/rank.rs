//! Lexicographic ranking of multiset permutations.
//!
//! A codeword is read as a string of level indices (level 1 is the smallest
//! symbol), so `x̂_init` itself has rank 0. Variant II appends the sign bits of
//! the nonzero-level positions, in position order, as the low bits:
//! `rank = permutation_rank · 2^h + signs`.

use num_bigint::BigUint;
use num_traits::Zero;

use super::{InitialCodeword, Variant};
use crate::error::{Error, Result};

fn symbol_of(value: f64, cw: &InitialCodeword, position: usize) -> Result<(usize, bool)> {
    let (magnitude, negative) = match cw.variant() {
        Variant::I => (value, false),
        Variant::II => (value.abs(), value.is_sign_negative()),
    };
    let symbol = cw
        .levels()
        .iter()
        .position(|&mu| mu == magnitude)
        .ok_or_else(|| Error::NotInCodebook(format!("component {} = {value} matches no level", position + 1)))?;
    if negative && cw.levels()[symbol] == 0.0 {
        return Err(Error::NotInCodebook(format!("component {} carries a sign on the zero level", position + 1)));
    }
    Ok((symbol, negative))
}

pub fn rank_codeword(codeword: &[f64], cw: &InitialCodeword) -> Result<BigUint> {
    if codeword.len() != cw.n() {
        return Err(Error::DimensionMismatch { expected: cw.n(), got: codeword.len() });
    }
    let mut counts = cw.composition().parts().to_vec();
    let mut remaining = cw.n();
    let mut perms = cw.permutation_count();
    let mut rank = BigUint::zero();
    let mut signs = BigUint::zero();
    let mut sign_bits = 0;

    for (p, &value) in codeword.iter().enumerate() {
        let (s, negative) = symbol_of(value, cw, p)?;
        if counts[s] == 0 {
            return Err(Error::NotInCodebook(format!(
                "level {} occurs more than {} times",
                s + 1,
                cw.composition().parts()[s]
            )));
        }
        for t in 0..s {
            if counts[t] > 0 {
                rank += &perms * counts[t] / remaining;
            }
        }
        perms = perms * counts[s] / remaining;
        counts[s] -= 1;
        remaining -= 1;

        if cw.variant() == Variant::II && cw.levels()[s] != 0.0 {
            signs <<= 1;
            if negative {
                signs += 1u32;
            }
            sign_bits += 1;
        }
    }
    debug_assert_eq!(sign_bits, cw.sign_bits());
    Ok((rank << sign_bits) | signs)
}

pub fn unrank_codeword(rank: &BigUint, cw: &InitialCodeword) -> Result<Vec<f64>> {
    let size = cw.size();
    if rank >= size.value() {
        return Err(Error::RankOutOfRange { rank: rank.to_string(), size: size.to_string() });
    }
    let h = cw.sign_bits();
    let mut perm_rank = rank >> h;
    let mut counts = cw.composition().parts().to_vec();
    let mut remaining = cw.n();
    let mut perms = cw.permutation_count();
    let mut out = Vec::with_capacity(cw.n());

    for _ in 0..cw.n() {
        let mut chosen = None;
        for t in 0..counts.len() {
            if counts[t] == 0 {
                continue;
            }
            let block = &perms * counts[t] / remaining;
            if perm_rank < block {
                perms = block;
                chosen = Some(t);
                break;
            }
            perm_rank -= block;
        }
        let t = chosen.expect("rank below the permutation count always selects a level");
        counts[t] -= 1;
        remaining -= 1;
        out.push(cw.levels()[t]);
    }

    if h > 0 {
        let mut bit = h;
        for v in out.iter_mut().filter(|v| **v != 0.0) {
            bit -= 1;
            if rank.bit(bit as u64) {
                *v = -*v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::Composition;

    fn cw(parts: &[usize], levels: &[f64], variant: Variant) -> InitialCodeword {
        InitialCodeword::new(Composition::new(parts.to_vec()).unwrap(), levels.to_vec(), variant).unwrap()
    }

    #[test]
    fn initial_codeword_has_rank_zero() {
        for c in [
            cw(&[3, 2, 2], &[1.0, 0.0, -1.0], Variant::I),
            cw(&[2, 1], &[1.0, 0.0], Variant::II),
            cw(&[1, 1, 2], &[3.0, 2.0, 1.0], Variant::II),
        ] {
            assert!(rank_codeword(&c.expanded(), &c).unwrap().is_zero());
        }
    }

    #[test]
    fn small_explicit_order() {
        // Level strings of (2,1) in lexicographic order: 001, 010, 100.
        let c = cw(&[2, 1], &[1.0, -1.0], Variant::I);
        let words = [[1.0, 1.0, -1.0], [1.0, -1.0, 1.0], [-1.0, 1.0, 1.0]];
        for (r, w) in words.iter().enumerate() {
            assert_eq!(rank_codeword(w, &c).unwrap(), BigUint::from(r));
            assert_eq!(unrank_codeword(&BigUint::from(r), &c).unwrap(), w.to_vec());
        }
        assert!(unrank_codeword(&BigUint::from(3u32), &c).is_err());
    }

    #[test]
    fn sign_bits_are_low_bits() {
        let c = cw(&[1, 1], &[2.0, 1.0], Variant::II);
        // Permutation rank 1 (1.0, 2.0), signs (-, +) -> 1 * 4 + 0b10.
        assert_eq!(rank_codeword(&[-1.0, 2.0], &c).unwrap(), BigUint::from(6u32));
        assert_eq!(unrank_codeword(&BigUint::from(6u32), &c).unwrap(), vec![-1.0, 2.0]);
    }

    #[test]
    fn rejects_non_codewords() {
        let c = cw(&[1, 1], &[1.0, 0.0], Variant::II);
        assert!(rank_codeword(&[1.0, 0.5], &c).is_err());
        assert!(rank_codeword(&[1.0, -0.0], &c).is_err());
        assert!(rank_codeword(&[1.0, 1.0], &c).is_err());
        let v1 = cw(&[1, 1], &[1.0, 0.0], Variant::I);
        assert!(rank_codeword(&[-1.0, 0.0], &v1).is_err());
    }
}
