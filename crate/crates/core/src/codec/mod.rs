//! Permutation codebooks, nearest-codeword encoding and index assignment.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{multinomial_size, variant2_size, CodebookSize, Composition};
use crate::error::{Error, Result};

mod rank;
pub mod stream;

pub use rank::{rank_codeword, unrank_codeword};

/// Which permutation-code family a codebook belongs to.
///
/// Variant I permutes the initial codeword's values. Variant II permutes
/// nonnegative magnitudes and lets every nonzero component carry a sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Variant {
    I,
    II,
}

impl TryFrom<u8> for Variant {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Variant::I),
            2 => Ok(Variant::II),
            other => Err(Error::InvalidArgument(format!("variant must be 1 or 2, got {other}"))),
        }
    }
}

impl From<Variant> for u8 {
    fn from(v: Variant) -> u8 {
        match v {
            Variant::I => 1,
            Variant::II => 2,
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "I" | "i" => Ok(Variant::I),
            "2" | "II" | "ii" => Ok(Variant::II),
            other => Err(Error::InvalidArgument(format!("unknown variant {other:?}"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::I => "I",
            Variant::II => "II",
        })
    }
}

/// Composition plus strictly decreasing levels `μ_1 > ... > μ_K`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialCodeword {
    composition: Composition,
    levels: Vec<f64>,
    variant: Variant,
}

impl InitialCodeword {
    pub fn new(composition: Composition, levels: Vec<f64>, variant: Variant) -> Result<Self> {
        if levels.len() != composition.k() {
            return Err(Error::InvalidArgument(format!(
                "{} levels for composition {} with {} parts",
                levels.len(),
                composition,
                composition.k()
            )));
        }
        if let Some(bad) = levels.iter().find(|l| !l.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite level {bad}")));
        }
        if let Some(i) = levels.windows(2).position(|w| w[0] <= w[1]) {
            return Err(Error::LevelOrder(format!(
                "μ_{} = {} is not greater than μ_{} = {}",
                i + 1,
                levels[i],
                i + 2,
                levels[i + 1]
            )));
        }
        if variant == Variant::II && levels[levels.len() - 1] < 0.0 {
            return Err(Error::LevelOrder("Variant II levels must be nonnegative".into()));
        }
        // Canonical +0.0 so a zero level never carries a sign.
        let levels = levels.into_iter().map(|l| if l == 0.0 { 0.0 } else { l }).collect();
        Ok(Self { composition, levels, variant })
    }

    pub fn composition(&self) -> &Composition {
        &self.composition
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn n(&self) -> usize {
        self.composition.n()
    }

    /// `x̂_init`: each `μ_i` repeated `n_i` times.
    pub fn expanded(&self) -> Vec<f64> {
        self.composition
            .parts()
            .iter()
            .zip(&self.levels)
            .flat_map(|(&p, &mu)| std::iter::repeat_n(mu, p))
            .collect()
    }

    /// Number of components that carry a sign bit (`0` for Variant I).
    pub fn sign_bits(&self) -> usize {
        match self.variant {
            Variant::I => 0,
            Variant::II => {
                let last = *self.composition.parts().last().expect("nonempty");
                if self.levels[self.levels.len() - 1] == 0.0 {
                    self.n() - last
                } else {
                    self.n()
                }
            }
        }
    }

    /// Number of distinct permutations of `x̂_init`, ignoring signs.
    pub fn permutation_count(&self) -> BigUint {
        multinomial_size(&self.composition).into_inner()
    }

    /// Total codebook size `M` (including the `2^h` sign factor for Variant II).
    pub fn size(&self) -> CodebookSize {
        match self.variant {
            Variant::I => multinomial_size(&self.composition),
            Variant::II => variant2_size(&self.composition, self.sign_bits())
                .expect("sign count is consistent by construction"),
        }
    }
}

/// Union of `J` permutation codes sharing a dimension and variant.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcentricCode {
    n: usize,
    variant: Variant,
    subcodes: Vec<InitialCodeword>,
}

impl ConcentricCode {
    pub fn new(subcodes: Vec<InitialCodeword>) -> Result<Self> {
        let first = subcodes
            .first()
            .ok_or_else(|| Error::InvalidArgument("a code needs at least one subcode".into()))?;
        let (n, variant) = (first.n(), first.variant());
        for (j, s) in subcodes.iter().enumerate() {
            if s.n() != n {
                return Err(Error::DimensionMismatch { expected: n, got: s.n() });
            }
            if s.variant() != variant {
                return Err(Error::InvalidArgument(format!("subcode {} has variant {}", j + 1, s.variant())));
            }
        }
        Ok(Self { n, variant, subcodes })
    }

    pub fn single(cw: InitialCodeword) -> Self {
        Self { n: cw.n(), variant: cw.variant(), subcodes: vec![cw] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn subcodes(&self) -> &[InitialCodeword] {
        &self.subcodes
    }

    /// Number of spheres `J`.
    pub fn j(&self) -> usize {
        self.subcodes.len()
    }

    pub fn sizes(&self) -> Vec<CodebookSize> {
        self.subcodes.iter().map(InitialCodeword::size).collect()
    }

    pub fn to_document(&self) -> CodebookDocument {
        CodebookDocument {
            variant: self.variant,
            n: self.n,
            subcodes: self
                .subcodes
                .iter()
                .map(|s| SubcodeDocument { parts: s.composition().parts().to_vec(), levels: s.levels().to_vec() })
                .collect(),
            design: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<CodebookDocument>(text)?.to_code()
    }
}

/// Serialized form of a codebook: `{variant, n, subcodes: [{parts, levels}], design?}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodebookDocument {
    pub variant: Variant,
    pub n: usize,
    pub subcodes: Vec<SubcodeDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubcodeDocument {
    pub parts: Vec<usize>,
    pub levels: Vec<f64>,
}

impl CodebookDocument {
    pub fn to_code(&self) -> Result<ConcentricCode> {
        let subcodes = self
            .subcodes
            .iter()
            .map(|s| InitialCodeword::new(Composition::new(s.parts.clone())?, s.levels.clone(), self.variant))
            .collect::<Result<Vec<_>>>()?;
        let code = ConcentricCode::new(subcodes)?;
        if code.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: code.n() });
        }
        Ok(code)
    }
}

/// Sphere (zero-based subcode index) and rank within that subcode.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EncodedIndex {
    pub sphere: usize,
    pub rank: BigUint,
}

thread_local! {
    static SORTS: Cell<u64> = const { Cell::new(0) };
}

/// Number of input sorts performed by encoders on this thread.
///
/// Only counted in builds with debug assertions; always zero otherwise.
pub fn sort_count() -> u64 {
    SORTS.with(Cell::get)
}

/// Positions of `x` ordered by decreasing value (Variant I) or magnitude
/// (Variant II); equal keys keep ascending position order.
pub fn sort_order(x: &[f64], variant: Variant) -> Vec<usize> {
    #[cfg(debug_assertions)]
    SORTS.with(|c| c.set(c.get() + 1));
    let mut order: Vec<usize> = (0..x.len()).collect();
    match variant {
        Variant::I => order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b))),
        Variant::II => order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b))),
    }
    order
}

/// Codeword of `cw` whose components follow the ordering `order` of `x`.
fn place(order: &[usize], cw: &InitialCodeword, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; order.len()];
    let mut pos = 0;
    for (&part, &mu) in cw.composition().parts().iter().zip(cw.levels()) {
        for &idx in &order[pos..pos + part] {
            out[idx] = match cw.variant() {
                Variant::II if mu != 0.0 && x[idx] < 0.0 => -mu,
                _ => mu,
            };
        }
        pos += part;
    }
    out
}

/// `‖x − c‖²`, summed in position order.
pub fn squared_distance(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn check_dim(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    Ok(())
}

/// Nearest codeword of a single permutation code.
pub fn encode_pc(x: &[f64], cw: &InitialCodeword) -> Result<Vec<f64>> {
    check_dim(x, cw.n())?;
    let order = sort_order(x, cw.variant());
    Ok(place(&order, cw, x))
}

/// Nearest codeword of the concentric code together with its index.
///
/// One sort of `x` serves all subcodes; each candidate costs `O(n)` to place
/// and measure. The first subcode attaining the minimum distance wins.
pub fn encode_cpc(x: &[f64], code: &ConcentricCode) -> Result<(EncodedIndex, Vec<f64>)> {
    let (sphere, codeword, _) = nearest(x, code)?;
    let rank = rank_codeword(&codeword, &code.subcodes()[sphere])?;
    Ok((EncodedIndex { sphere, rank }, codeword))
}

/// `(sphere, codeword, squared distance)` of the nearest codeword.
pub fn nearest(x: &[f64], code: &ConcentricCode) -> Result<(usize, Vec<f64>, f64)> {
    check_dim(x, code.n())?;
    let order = sort_order(x, code.variant());
    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    for (j, cw) in code.subcodes().iter().enumerate() {
        let candidate = place(&order, cw, x);
        let d = squared_distance(x, &candidate);
        if best.as_ref().is_none_or(|b| d < b.2) {
            best = Some((j, candidate, d));
        }
    }
    Ok(best.expect("code has at least one subcode"))
}

/// Reconstruction for an encoded index.
pub fn decode(idx: &EncodedIndex, code: &ConcentricCode) -> Result<Vec<f64>> {
    let cw = code.subcodes().get(idx.sphere).ok_or_else(|| Error::RankOutOfRange {
        rank: format!("sphere {}", idx.sphere),
        size: format!("{} spheres", code.j()),
    })?;
    unrank_codeword(&idx.rank, cw)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cw(parts: &[usize], levels: &[f64], variant: Variant) -> InitialCodeword {
        InitialCodeword::new(Composition::new(parts.to_vec()).unwrap(), levels.to_vec(), variant).unwrap()
    }

    #[test]
    fn encode_pc_example() {
        let c = cw(&[1, 2], &[1.0, -0.5], Variant::I);
        assert_eq!(encode_pc(&[0.3, -1.2, 0.9], &c).unwrap(), vec![-0.5, -0.5, 1.0]);
    }

    #[test]
    fn single_level_gives_constant() {
        let c = cw(&[4], &[0.7], Variant::I);
        assert_eq!(encode_pc(&[3.0, -1.0, 2.0, 0.0], &c).unwrap(), vec![0.7; 4]);
    }

    #[test]
    fn variant2_copies_signs() {
        let c = cw(&[1, 1, 1], &[2.0, 1.0, 0.0], Variant::II);
        assert_eq!(encode_pc(&[-0.1, -3.0, 0.5], &c).unwrap(), vec![0.0, -2.0, 1.0]);
    }

    #[test]
    fn ties_break_by_position() {
        let c = cw(&[1, 1], &[1.0, -1.0], Variant::I);
        assert_eq!(encode_pc(&[0.2, 0.2], &c).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn invalid_codewords_rejected() {
        let comp = Composition::new(vec![1, 1]).unwrap();
        assert!(InitialCodeword::new(comp.clone(), vec![1.0, 1.0], Variant::I).is_err());
        assert!(InitialCodeword::new(comp.clone(), vec![1.0], Variant::I).is_err());
        assert!(InitialCodeword::new(comp.clone(), vec![1.0, -0.5], Variant::II).is_err());
        assert!(InitialCodeword::new(comp, vec![f64::NAN, 0.0], Variant::I).is_err());
    }

    #[test]
    fn sizes() {
        assert_eq!(cw(&[3, 2, 2], &[1.0, 0.0, -1.0], Variant::I).size(), CodebookSize::from(210));
        assert_eq!(cw(&[1, 1], &[1.0, 0.0], Variant::II).size(), CodebookSize::from(4));
        assert_eq!(cw(&[1, 1], &[1.0, 0.5], Variant::II).size(), CodebookSize::from(8));
    }

    #[test]
    fn cpc_with_one_subcode_is_pc() {
        let c = cw(&[2, 1], &[0.8, -1.1], Variant::I);
        let code = ConcentricCode::single(c.clone());
        let x = [0.4, -2.0, 1.5];
        let (idx, word) = encode_cpc(&x, &code).unwrap();
        assert_eq!(idx.sphere, 0);
        assert_eq!(word, encode_pc(&x, &c).unwrap());
        assert_eq!(decode(&idx, &code).unwrap(), word);
    }

    #[test]
    fn one_sort_per_encode() {
        let code = ConcentricCode::new(vec![
            cw(&[1, 2], &[1.0, -0.5], Variant::I),
            cw(&[2, 1], &[0.5, -1.0], Variant::I),
            cw(&[3], &[0.0], Variant::I),
        ])
        .unwrap();
        let before = sort_count();
        encode_cpc(&[0.1, 0.2, 0.3], &code).unwrap();
        if cfg!(debug_assertions) {
            assert_eq!(sort_count() - before, 1);
        }
    }

    #[test]
    fn dimension_checked() {
        let code = ConcentricCode::single(cw(&[1, 1], &[1.0, -1.0], Variant::I));
        assert!(matches!(encode_cpc(&[1.0], &code), Err(Error::DimensionMismatch { .. })));
        let mixed = ConcentricCode::new(vec![
            cw(&[1, 1], &[1.0, -1.0], Variant::I),
            cw(&[1, 2], &[1.0, -1.0], Variant::I),
        ]);
        assert!(mixed.is_err());
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let code = ConcentricCode::new(vec![
            cw(&[1, 2], &[1.0 / 3.0, -0.1], Variant::I),
            cw(&[3], &[std::f64::consts::PI], Variant::I),
        ])
        .unwrap();
        let text = code.to_json().unwrap();
        assert!(text.contains("\"variant\": 1"));
        assert_eq!(ConcentricCode::from_json(&text).unwrap(), code);
    }

    #[test]
    fn json_rejects_bad_documents() {
        assert!(ConcentricCode::from_json(r#"{"variant":3,"n":2,"subcodes":[{"parts":[2],"levels":[0.0]}]}"#).is_err());
        assert!(ConcentricCode::from_json(r#"{"variant":1,"n":3,"subcodes":[{"parts":[2],"levels":[0.0]}]}"#).is_err());
        assert!(ConcentricCode::from_json(r#"{"variant":2,"n":2,"subcodes":[{"parts":[1,1],"levels":[0.0,-1.0]}]}"#).is_err());
    }
}
