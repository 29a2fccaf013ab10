//! Blockade-constrained Hilbert space: enumeration, indexing, reflection.
//!
//! States of an L-site chain are bit-packed integers with site 1 at the
//! least significant bit. The Rydberg blockade forbids adjacent 1s, so the
//! space has Fibonacci dimension d(1)=2, d(2)=3, d(L)=d(L−1)+d(L−2). States
//! are enumerated in ascending numeric order, which makes indices
//! reproducible across runs.

use crate::error::{Error, Result};
use crate::operator::SparseOperator;

/// Hard cap on the chain length. 31 sites fit in a `u32` and give a
/// ~3.5M-dimensional space, the practical limit for full dynamics on a
/// desktop; eigensolve-only workloads stay well below it in this crate.
pub const MAX_SITES: usize = 31;

/// One blockade-allowed occupation pattern, site 1 = LSB.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState(pub u32);

impl BasisState {
    /// Occupation (0 or 1) of site `i`, 1-based.
    #[inline]
    pub fn occupation(self, site: usize) -> u32 {
        (self.0 >> (site - 1)) & 1
    }

    /// Total Rydberg occupation Σᵢ n̂ᵢ.
    #[inline]
    pub fn total_occupation(self) -> u32 {
        self.0.count_ones()
    }

    /// Blockade check: no two adjacent sites both occupied.
    #[inline]
    pub fn is_blockade_allowed(self) -> bool {
        self.0 & (self.0 >> 1) == 0
    }

    /// Site-reversal i ↦ L+1−i of the pattern.
    #[inline]
    pub fn reversed(self, length: usize) -> BasisState {
        BasisState(self.0.reverse_bits() >> (32 - length))
    }

    /// Render as a 0/1 string, site 1 first.
    pub fn to_bit_string(self, length: usize) -> String {
        (1..=length)
            .map(|i| if self.occupation(i) == 1 { '1' } else { '0' })
            .collect()
    }
}

/// The enumerated constrained space for a fixed chain length.
///
/// Immutable after construction and safe to share across threads.
#[derive(Clone, Debug)]
pub struct ConstrainedBasis {
    length: usize,
    states: Vec<u32>,
}

/// Expected dimension d(L) from the Fibonacci recursion.
pub fn constrained_dimension(length: usize) -> usize {
    match length {
        0 => 1,
        1 => 2,
        _ => {
            let (mut a, mut b) = (1usize, 2usize);
            for _ in 2..=length {
                let c = a + b;
                a = b;
                b = c;
            }
            b
        }
    }
}

impl ConstrainedBasis {
    /// Enumerate all blockade-allowed states of a length-`length` chain in
    /// ascending numeric order.
    pub fn new(length: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::validation("chain length must be at least 1"));
        }
        if length > MAX_SITES {
            return Err(Error::validation(format!(
                "chain length {length} exceeds the supported cap of {MAX_SITES} sites"
            )));
        }
        // Grow the sorted list one site at a time: states with the new top
        // bit clear are exactly the previous list, and states with it set
        // come from the list two sites back (top-1 bit forced to 0). Both
        // blocks are already sorted and the second block is strictly larger.
        let mut prev: Vec<u32> = vec![0, 1]; // L = 1
        let mut prev2: Vec<u32> = vec![0]; // L = 0
        for l in 2..=length {
            let mut cur = Vec::with_capacity(prev.len() + prev2.len());
            cur.extend_from_slice(&prev);
            let top = 1u32 << (l - 1);
            cur.extend(prev2.iter().map(|&s| s | top));
            prev2 = std::mem::replace(&mut prev, cur);
        }
        Ok(ConstrainedBasis {
            length,
            states: prev,
        })
    }

    #[inline]
    pub fn length(&self) -> usize {
        self.length
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    #[inline]
    pub fn state(&self, index: usize) -> BasisState {
        BasisState(self.states[index])
    }

    #[inline]
    pub fn states(&self) -> impl Iterator<Item = BasisState> + '_ {
        self.states.iter().map(|&s| BasisState(s))
    }

    /// Ordinal of a state, or `None` if it is not blockade-allowed.
    #[inline]
    pub fn index_of(&self, state: BasisState) -> Option<usize> {
        self.states.binary_search(&state.0).ok()
    }

    /// Diagonal of Σᵢ n̂ᵢ over the basis.
    pub fn occupation_diagonal(&self) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| s.count_ones() as f64)
            .collect()
    }

    /// Diagonal of Σᵢ wᵢ n̂ᵢ for per-site weights `w` (1-based site i maps
    /// to `w[i-1]`).
    pub fn weighted_occupation_diagonal(&self, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.length {
            return Err(Error::validation(format!(
                "weight vector has {} entries, chain has {} sites",
                weights.len(),
                self.length
            )));
        }
        Ok(self
            .states
            .iter()
            .map(|&s| {
                let mut acc = 0.0;
                let mut bits = s;
                while bits != 0 {
                    let i = bits.trailing_zeros() as usize;
                    acc += weights[i];
                    bits &= bits - 1;
                }
                acc
            })
            .collect())
    }
}

/// Basis-level site reversal i ↦ L+1−i as a permutation of ordinals.
#[derive(Clone, Debug)]
pub struct ReflectionPermutation {
    map: Vec<u32>,
}

impl ReflectionPermutation {
    pub fn new(basis: &ConstrainedBasis) -> Self {
        let map = basis
            .states()
            .map(|s| {
                basis
                    .index_of(s.reversed(basis.length()))
                    .expect("reversal preserves the blockade constraint") as u32
            })
            .collect();
        ReflectionPermutation { map }
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.map.len()
    }

    #[inline]
    pub fn image(&self, index: usize) -> usize {
        self.map[index] as usize
    }

    /// y = R_x · x.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, &j) in self.map.iter().enumerate() {
            y[j as usize] = x[i];
        }
    }

    /// ⟨x|R_x|x⟩ for a normalized real vector.
    pub fn expectation(&self, x: &[f64]) -> f64 {
        self.map
            .iter()
            .enumerate()
            .map(|(i, &j)| x[i] * x[j as usize])
            .sum()
    }

    /// ⟨a|R_x|b⟩.
    pub fn matrix_element(&self, a: &[f64], b: &[f64]) -> f64 {
        self.map
            .iter()
            .enumerate()
            .map(|(i, &j)| a[j as usize] * b[i])
            .sum()
    }
}

/// Diagonal operator n̂ᵢ for a single site (1-based).
pub fn local_number_operator(basis: &ConstrainedBasis, site: usize) -> Result<SparseOperator> {
    if site == 0 || site > basis.length() {
        return Err(Error::validation(format!(
            "site {site} out of range 1..={}",
            basis.length()
        )));
    }
    let diag = basis
        .states()
        .map(|s| s.occupation(site) as f64)
        .collect::<Vec<_>>();
    Ok(SparseOperator::from_diagonal(diag))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_cases() {
        let b1 = ConstrainedBasis::new(1).unwrap();
        assert_eq!(b1.dimension(), 2);
        assert_eq!(b1.states().map(|s| s.0).collect::<Vec<_>>(), vec![0, 1]);

        let b2 = ConstrainedBasis::new(2).unwrap();
        assert_eq!(b2.dimension(), 3);
        assert_eq!(b2.states().map(|s| s.0).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn dimension_follows_recursion() {
        for l in 3..=24 {
            assert_eq!(
                ConstrainedBasis::new(l).unwrap().dimension(),
                constrained_dimension(l),
                "L = {l}"
            );
        }
        assert_eq!(constrained_dimension(19), 10946);
        assert_eq!(constrained_dimension(25), 196418);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(ConstrainedBasis::new(0).is_err());
        assert!(ConstrainedBasis::new(MAX_SITES + 1).is_err());
        assert!(ConstrainedBasis::new(MAX_SITES).is_ok());
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for l in 1..=16 {
            let basis = ConstrainedBasis::new(l).unwrap();
            let brute: Vec<u32> = (0u32..1 << l).filter(|s| s & (s >> 1) == 0).collect();
            assert_eq!(
                basis.states().map(|s| s.0).collect::<Vec<_>>(),
                brute,
                "L = {l}"
            );
        }
    }

    #[test]
    fn index_is_bijective() {
        let basis = ConstrainedBasis::new(12).unwrap();
        for (i, s) in basis.states().enumerate() {
            assert!(s.is_blockade_allowed());
            assert_eq!(basis.index_of(s), Some(i));
        }
        assert_eq!(basis.index_of(BasisState(0b11)), None);
    }

    #[test]
    fn reflection_examples() {
        let b2 = ConstrainedBasis::new(2).unwrap();
        let r2 = ReflectionPermutation::new(&b2);
        let i01 = b2.index_of(BasisState(0b01)).unwrap();
        let i10 = b2.index_of(BasisState(0b10)).unwrap();
        assert_eq!(r2.image(i01), i10);

        let b3 = ConstrainedBasis::new(3).unwrap();
        let r3 = ReflectionPermutation::new(&b3);
        let i101 = b3.index_of(BasisState(0b101)).unwrap();
        assert_eq!(r3.image(i101), i101, "palindrome is a fixed point");

        // site-1-first string 0100 means site 2 occupied: s = 0b0010
        let b4 = ConstrainedBasis::new(4).unwrap();
        let r4 = ReflectionPermutation::new(&b4);
        let from = b4.index_of(BasisState(0b0010)).unwrap();
        let to = b4.index_of(BasisState(0b0100)).unwrap();
        assert_eq!(r4.image(from), to);
    }

    #[test]
    fn reflection_is_involution() {
        for l in 1..=12 {
            let basis = ConstrainedBasis::new(l).unwrap();
            let r = ReflectionPermutation::new(&basis);
            for i in 0..basis.dimension() {
                assert_eq!(r.image(r.image(i)), i);
            }
        }
    }

    #[test]
    fn local_number_operator_examples() {
        let b2 = ConstrainedBasis::new(2).unwrap();
        let n1 = local_number_operator(&b2, 1).unwrap();
        assert_eq!(n1.diagonal(), &[0.0, 1.0, 0.0]);

        // Σᵢ n̂ᵢ eigenvalue on 0101 (sites 2 and 4) is the popcount.
        let b4 = ConstrainedBasis::new(4).unwrap();
        let s = BasisState(0b1010);
        assert_eq!(s.total_occupation(), 2);
        assert!(b4.index_of(s).is_some());

        // blockade: n̂₁·n̂₂ annihilates every constrained state
        for s in b2.states() {
            assert_eq!(s.occupation(1) & s.occupation(2), 0);
        }
        assert!(local_number_operator(&b2, 3).is_err());
    }
}
