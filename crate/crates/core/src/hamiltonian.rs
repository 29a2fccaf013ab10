//! Constrained-space chain Hamiltonians.
//!
//! The assembled operator is
//!
//!   H = Σᵢ [ (Ω/2) P̂ᵢ₋₁X̂ᵢP̂ᵢ₊₁ − (Δ+δΔᵢ) n̂ᵢ ]
//!       + Σ_{j−i≥2} (64·V₂/|i−j|⁶) n̂ᵢn̂ⱼ  +  Ĥ₂,
//!
//! projected into the blockade-constrained space; chain ends use identity
//! projectors (P̂₀ = P̂_{L+1} = 1). Ĥ₂ is the second-order correction from
//! finite nearest-neighbor interaction V₁,
//!
//!   Ĥ₂ = −(Ω²/4V₁) Σᵢ [ 2n̂ᵢ − (3/2) n̂ᵢ₋₁n̂ᵢ₊₁
//!        + (P̂ᵢ₋₁ b̂ᵢ†b̂ᵢ₊₁ P̂ᵢ₊₂ + h.c.) ].
//!
//! Energies are stored in units of 2π·MHz (a stored 6.0 is 2π × 6.0 MHz),
//! so stored gaps are directly E/h in MHz. The attractive next-nearest-
//! neighbor sector is represented by negative `v2` (and consistently
//! negative `v1`), matching the sign-reversed Hamiltonian that the
//! backward-sweep preparation realizes.

use crate::error::{Error, Result};
use crate::hilbert::ConstrainedBasis;
use crate::operator::{OperatorBuilder, SparseOperator};
use serde::{Deserialize, Serialize};

/// Interaction tail truncation.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailRange {
    /// All pairs |i−j| ≥ 2 (the default).
    All,
    /// Pairs with |i−j| up to this distance. `UpTo(2)` keeps only the
    /// next-nearest-neighbor V₂ term, the Fendley-Sengupta-Sachdev limit
    /// used for scaling-collapse runs.
    UpTo(usize),
}

impl TailRange {
    #[inline]
    fn includes(self, distance: usize) -> bool {
        match self {
            TailRange::All => true,
            TailRange::UpTo(max) => distance <= max,
        }
    }
}

/// Every knob of the chain Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Site count L.
    pub length: usize,
    /// Rabi frequency Ω, 2π·MHz units.
    pub omega: f64,
    /// Global detuning Δ.
    pub delta: f64,
    /// Nearest-neighbor interaction V₁ (enters only through Ĥ₂; the
    /// blockade itself is exact in this representation).
    pub v1: f64,
    /// Next-nearest-neighbor interaction V₂; tails are 64·V₂/|i−j|⁶.
    pub v2: f64,
    /// Per-site detunings δΔᵢ, length L.
    pub local_detunings: Vec<f64>,
    /// Boundary-detuning scale η ∈ [0,1] (provenance for Ĥ_η studies).
    pub eta: f64,
    /// Include the second-order Ĥ₂ correction.
    pub include_h2: bool,
    /// Interaction tail truncation.
    pub tail_range: TailRange,
}

impl ChainParams {
    /// A bare chain with zero detuning profile and full tails.
    pub fn new(length: usize, omega: f64, delta: f64, v1: f64, v2: f64) -> Self {
        ChainParams {
            length,
            omega,
            delta,
            v1,
            v2,
            local_detunings: vec![0.0; length],
            eta: 0.0,
            include_h2: true,
            tail_range: TailRange::All,
        }
    }

    /// Ising transition, repulsive side: Ω = 2π×6.0 MHz, V₂/Ω = +0.51,
    /// measured V₁ = 2π×164.6 MHz, critical detuning Δ_c = 2π×10.2 MHz.
    pub fn ising_repulsive() -> Self {
        ChainParams::new(19, 6.0, 10.2, 164.6, 3.06)
    }

    /// Ising transition, attractive side (V₂/Ω = −0.51): the sign-reversed
    /// Hamiltonian the backward sweep prepares, Δ_c = 2π×(−0.9) MHz.
    pub fn ising_attractive() -> Self {
        ChainParams::new(19, 6.0, -0.9, -164.6, -3.06)
    }

    /// Tricritical Ising point: Ω = 2π×5.5 MHz, V₂/Ω = −1.63,
    /// Δ_c = 2π×(−8.3) MHz. V₁ defaults to the van der Waals value 64·V₂.
    pub fn tci() -> Self {
        let omega = 5.5;
        let v2 = -1.63 * omega;
        ChainParams::new(19, omega, -1.51 * omega, 64.0 * v2, v2)
    }

    pub fn with_length(mut self, length: usize) -> Self {
        self.length = length;
        self.local_detunings = vec![0.0; length];
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_fss_truncation(mut self) -> Self {
        self.tail_range = TailRange::UpTo(2);
        self.include_h2 = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 || self.length > crate::hilbert::MAX_SITES {
            return Err(Error::validation(format!(
                "length {} outside 1..={}",
                self.length,
                crate::hilbert::MAX_SITES
            )));
        }
        if self.local_detunings.len() != self.length {
            return Err(Error::validation(format!(
                "local_detunings has {} entries for a {}-site chain",
                self.local_detunings.len(),
                self.length
            )));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::validation(format!("eta {} outside [0,1]", self.eta)));
        }
        if self.include_h2 && self.v1 == 0.0 {
            return Err(Error::validation("v1 = 0 with include_h2 requested"));
        }
        if let TailRange::UpTo(m) = self.tail_range {
            if m < 2 {
                return Err(Error::validation("tail_range must reach at least 2"));
            }
        }
        Ok(())
    }

    /// Interaction energy of a basis state from the 64·V₂/r⁶ tails.
    ///
    /// Accumulated per distance with integer pair counts so that mirrored
    /// states get bit-identical diagonals (reflection commutation is exact,
    /// not merely up to rounding).
    fn tail_energy(&self, state: u32) -> f64 {
        let mut acc = 0.0;
        for r in 2..self.length {
            if !self.tail_range.includes(r) {
                break;
            }
            let pairs = (state & (state >> r)).count_ones();
            if pairs > 0 {
                acc += pairs as f64 * (64.0 * self.v2 / (r as f64).powi(6));
            }
        }
        acc
    }

    /// Static diagonal energy of a basis state: interaction tails plus
    /// local detunings, with the global Δ excluded.
    pub(crate) fn diagonal_static_energy(&self, state: u32) -> f64 {
        self.tail_energy(state) + self.local_detuning_energy(state)
    }

    /// −Σᵢ δΔᵢ n̂ᵢ of a basis state, accumulated over mirror pairs so a
    /// reflection-symmetric profile yields bit-identical values on mirrored
    /// states.
    fn local_detuning_energy(&self, state: u32) -> f64 {
        let l = self.length;
        let mut acc = 0.0;
        let occ = |i: usize| (state >> (i - 1)) & 1; // 1-based
        for i in 1..=l / 2 {
            let m = l + 1 - i;
            acc -= self.local_detunings[i - 1] * occ(i) as f64
                + self.local_detunings[m - 1] * occ(m) as f64;
        }
        if l % 2 == 1 {
            let mid = (l + 1) / 2;
            acc -= self.local_detunings[mid - 1] * occ(mid) as f64;
        }
        acc
    }
}

fn check_basis(basis: &ConstrainedBasis, p: &ChainParams) -> Result<()> {
    p.validate()?;
    if basis.length() != p.length {
        return Err(Error::validation(format!(
            "basis is for L = {}, params for L = {}",
            basis.length(),
            p.length
        )));
    }
    Ok(())
}

/// Assemble the full Hamiltonian for `p` in the constrained basis.
pub fn build_hamiltonian(basis: &ConstrainedBasis, p: &ChainParams) -> Result<SparseOperator> {
    check_basis(basis, p)?;
    let l = p.length;
    let dim = basis.dimension();
    let mut b = OperatorBuilder::new(dim);
    let h2_prefactor = if p.include_h2 {
        -p.omega * p.omega / (4.0 * p.v1)
    } else {
        0.0
    };

    for (a, s) in basis.states().enumerate() {
        let bits = s.0;
        let mut diag = -p.delta * bits.count_ones() as f64;
        diag += p.local_detuning_energy(bits);
        diag += p.tail_energy(bits);
        if p.include_h2 {
            let nnn = (bits & (bits >> 2)).count_ones() as f64;
            diag += h2_prefactor * (2.0 * bits.count_ones() as f64 - 1.5 * nnn);
        }
        b.add_diagonal(a, diag);

        // PXP spin flips: site i flippable when both neighbors are 0.
        // Each pair is met from both ends, so keep only idx > a.
        for i in 0..l {
            let left_blocked = i > 0 && (bits >> (i - 1)) & 1 == 1;
            let right_blocked = i + 1 < l && (bits >> (i + 1)) & 1 == 1;
            if !left_blocked && !right_blocked {
                let t = crate::hilbert::BasisState(bits ^ (1 << i));
                let idx = basis.index_of(t).expect("flip stays constrained");
                if idx > a {
                    b.add_symmetric(a, idx, p.omega / 2.0);
                }
            }
        }

        if p.include_h2 {
            add_h2_hops(&mut b, basis, a, bits, l, h2_prefactor);
        }
    }
    Ok(b.build())
}

/// Hop terms P̂ᵢ₋₁ b̂ᵢ†b̂ᵢ₊₁ P̂ᵢ₊₂ + h.c. of Ĥ₂. A hop is discovered only
/// from the state whose occupation sits on the source site, so every pair
/// is added exactly once (no idx ordering filter here).
fn add_h2_hops(
    b: &mut OperatorBuilder,
    basis: &ConstrainedBasis,
    a: usize,
    bits: u32,
    l: usize,
    prefactor: f64,
) {
    for k in 0..l - 1 {
        // 0-based: occupation moves from site k+1 to site k
        let src_occupied = (bits >> (k + 1)) & 1 == 1;
        let dst_empty = (bits >> k) & 1 == 0;
        if !(src_occupied && dst_empty) {
            continue;
        }
        let left_ok = k == 0 || (bits >> (k - 1)) & 1 == 0;
        let right_ok = k + 2 >= l || (bits >> (k + 2)) & 1 == 0;
        if left_ok && right_ok {
            let t = crate::hilbert::BasisState(bits ^ (1 << k) ^ (1 << (k + 1)));
            let idx = basis.index_of(t).expect("hop stays constrained");
            b.add_symmetric(a, idx, prefactor);
        }
    }
}

/// The Ĥ₂ correction alone (same conventions as in [`build_hamiltonian`]).
pub fn build_h2_correction(basis: &ConstrainedBasis, p: &ChainParams) -> Result<SparseOperator> {
    if p.v1 == 0.0 {
        return Err(Error::validation("v1 = 0: second-order correction diverges"));
    }
    if basis.length() != p.length {
        return Err(Error::validation("basis/params length mismatch"));
    }
    let l = p.length;
    let prefactor = -p.omega * p.omega / (4.0 * p.v1);
    let mut b = OperatorBuilder::new(basis.dimension());
    for (a, s) in basis.states().enumerate() {
        let bits = s.0;
        let nnn = (bits & (bits >> 2)).count_ones() as f64;
        b.add_diagonal(a, prefactor * (2.0 * bits.count_ones() as f64 - 1.5 * nnn));
        add_h2_hops(&mut b, basis, a, bits, l, prefactor);
    }
    Ok(b.build())
}

/// Per-site boundary detuning profile δΔᵢ = −64·V₂·[(i+1)⁻⁶ + (L+2−i)⁻⁶],
/// i = 1..L. Emulates a frozen CDW-seeding ancilla pair on each end.
pub fn boundary_detuning_profile(length: usize, v2: f64) -> Vec<f64> {
    (1..=length)
        .map(|i| {
            let left = ((i + 1) as f64).powi(-6);
            let right = ((length + 2 - i) as f64).powi(-6);
            -64.0 * v2 * (left + right)
        })
        .collect()
}

/// Ĥ_η = Ĥ_TCI − η Σᵢ δΔᵢ n̂ᵢ with the profile from
/// [`boundary_detuning_profile`]. `p_tci` supplies the base Hamiltonian;
/// its own `local_detunings` are kept and the boundary term is added on
/// top.
pub fn build_h_eta(
    basis: &ConstrainedBasis,
    p_tci: &ChainParams,
    eta: f64,
) -> Result<SparseOperator> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::validation(format!("eta {eta} outside [0,1]")));
    }
    Ok(build_hamiltonian(basis, &eta_params(p_tci, eta)?)?)
}

/// ChainParams with the η-scaled boundary profile folded into the local
/// detunings: the −(Δ+δΔᵢ)n̂ᵢ term then realizes −η δΔᵢ n̂ᵢ exactly.
pub fn eta_params(p_tci: &ChainParams, eta: f64) -> Result<ChainParams> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::validation(format!("eta {eta} outside [0,1]")));
    }
    let profile = boundary_detuning_profile(p_tci.length, p_tci.v2);
    let mut p = p_tci.clone();
    p.eta = eta;
    for (loc, dd) in p.local_detunings.iter_mut().zip(&profile) {
        *loc += eta * dd;
    }
    Ok(p)
}

/// CDW order parameter on bond i+1/2: σ̂ = (−1)^{i+1}(n̂ᵢ − n̂ᵢ₊₁),
/// 1 ≤ i ≤ L−1. Diagonal.
pub fn cdw_operator(basis: &ConstrainedBasis, bond: usize) -> Result<SparseOperator> {
    let l = basis.length();
    if bond == 0 || bond >= l {
        return Err(Error::validation(format!(
            "bond {bond} out of range 1..={}",
            l - 1
        )));
    }
    let sign = if (bond + 1) % 2 == 0 { 1.0 } else { -1.0 };
    let diag = basis
        .states()
        .map(|s| sign * (s.occupation(bond) as f64 - s.occupation(bond + 1) as f64))
        .collect();
    Ok(SparseOperator::from_diagonal(diag))
}

/// Staggered sum Σᵢ σ̂_{i+1/2} over all bonds, the quench observable.
pub fn cdw_sum_operator(basis: &ConstrainedBasis) -> SparseOperator {
    let l = basis.length();
    let diag = basis
        .states()
        .map(|s| {
            (1..l)
                .map(|i| {
                    let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * (s.occupation(i) as f64 - s.occupation(i + 1) as f64)
                })
                .sum()
        })
        .collect();
    SparseOperator::from_diagonal(diag)
}

/// Edge CDW order σ_edge = (|⟨σ̂_{3/2}⟩| + |⟨σ̂_{L−1/2}⟩|)/2 of a state.
pub fn edge_cdw(basis: &ConstrainedBasis, state: &[f64]) -> Result<f64> {
    let l = basis.length();
    if l < 3 {
        return Err(Error::validation("edge CDW needs at least 3 sites"));
    }
    let left = cdw_operator(basis, 1)?.expectation(state);
    let right = cdw_operator(basis, l - 1)?.expectation(state);
    Ok((left.abs() + right.abs()) / 2.0)
}

/// Σᵢ n̂ᵢ, the global modulation operator K̂.
pub fn total_number_operator(basis: &ConstrainedBasis) -> SparseOperator {
    SparseOperator::from_diagonal(basis.occupation_diagonal())
}

/// Σᵢ wᵢ n̂ᵢ for arbitrary per-site weights.
pub fn weighted_number_operator(
    basis: &ConstrainedBasis,
    weights: &[f64],
) -> Result<SparseOperator> {
    Ok(SparseOperator::from_diagonal(
        basis.weighted_occupation_diagonal(weights)?,
    ))
}

/// Reflection-odd drive weights cᵢ = cos(π(i−1)/(L−1)), i = 1..L.
pub fn cosine_profile_weights(length: usize) -> Vec<f64> {
    (0..length)
        .map(|i| (std::f64::consts::PI * i as f64 / (length - 1) as f64).cos())
        .collect()
}

/// Wavevector drive weights cos(k·j + α) with sites centered at j = 0
/// (j = i − (L+1)/2, integers for odd L, half-integers for even L).
pub fn wavevector_weights(length: usize, k: f64, alpha: f64) -> Vec<f64> {
    let center = (length as f64 + 1.0) / 2.0;
    (1..=length)
        .map(|i| (k * (i as f64 - center) + alpha).cos())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::BasisState;

    #[test]
    fn two_site_blockade_matrix() {
        let basis = ConstrainedBasis::new(2).unwrap();
        let mut p = ChainParams::new(2, 1.0, 0.0, 1.0, 0.0);
        p.include_h2 = false;
        let h = build_hamiltonian(&basis, &p).unwrap().to_dense();
        // basis order {00, 01, 10}: Ω/2 couplings 00↔01, 00↔10; zero diag
        for r in 0..3 {
            assert_eq!(h[(r, r)], 0.0);
        }
        assert_eq!(h[(0, 1)], 0.5);
        assert_eq!(h[(0, 2)], 0.5);
        assert_eq!(h[(1, 2)], 0.0);
    }

    #[test]
    fn tail_energy_at_distance_three() {
        let basis = ConstrainedBasis::new(4).unwrap();
        let mut p = ChainParams::new(4, 0.0, 0.0, 1.0, 1.0);
        p.include_h2 = false;
        let h = build_hamiltonian(&basis, &p).unwrap();
        let idx = basis.index_of(BasisState(0b1001)).unwrap();
        let want = 64.0 / 729.0; // 64·V₂/3⁶
        assert!((h.diagonal()[idx] - want).abs() < 1e-15);
    }

    #[test]
    fn h2_pieces() {
        // Ω = 0 kills the whole correction
        let basis = ConstrainedBasis::new(3).unwrap();
        let p = ChainParams::new(3, 0.0, 0.0, 10.0, 0.0);
        let h2 = build_h2_correction(&basis, &p).unwrap();
        assert_eq!(h2.norm_bound(), 0.0);

        // 101 diagonal: prefactor·(2·2 − 3/2·1)
        let p = ChainParams::new(3, 2.0, 0.0, 10.0, 0.0);
        let h2 = build_h2_correction(&basis, &p).unwrap();
        let pref = -p.omega * p.omega / (4.0 * p.v1);
        let idx = basis.index_of(BasisState(0b101)).unwrap();
        assert!((h2.diagonal()[idx] - pref * (4.0 - 1.5)).abs() < 1e-15);

        // hop 0100 ↔ 0010 with amplitude = prefactor (site-1-first strings)
        let basis4 = ConstrainedBasis::new(4).unwrap();
        let p4 = ChainParams::new(4, 2.0, 0.0, 10.0, 0.0);
        let h2 = build_h2_correction(&basis4, &p4).unwrap().to_dense();
        let a = basis4.index_of(BasisState(0b0010)).unwrap();
        let b = basis4.index_of(BasisState(0b0100)).unwrap();
        assert!((h2[(a, b)] - pref).abs() < 1e-15);

        let bad = ChainParams::new(3, 1.0, 0.0, 0.0, 0.0);
        assert!(build_h2_correction(&basis, &bad).is_err());
    }

    #[test]
    fn boundary_profile_properties() {
        let l = 25;
        let prof = boundary_detuning_profile(l, 1.0);
        // near-edge value ≈ −64/2⁶ = −1 up to the ~2e-7 far-edge tail
        assert!((prof[0] + 1.0).abs() < 1e-6);
        for i in 0..l {
            assert!((prof[i] - prof[l - 1 - i]).abs() < 1e-15, "reflection symmetric");
        }
        assert!(boundary_detuning_profile(l, 0.0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn h_eta_limits() {
        let basis = ConstrainedBasis::new(7).unwrap();
        let p = ChainParams::tci().with_length(7);
        let h0 = build_h_eta(&basis, &p, 0.0).unwrap();
        let href = build_hamiltonian(&basis, &p).unwrap();
        assert_eq!(h0.to_dense(), href.to_dense());
        assert!(build_h_eta(&basis, &p, 1.3).is_err());

        // η = 1 shifts diagonals by −Σ δΔᵢ nᵢ exactly
        let h1 = build_h_eta(&basis, &p, 1.0).unwrap();
        let prof = boundary_detuning_profile(7, p.v2);
        for (a, s) in basis.states().enumerate() {
            let shift: f64 = (1..=7)
                .filter(|&i| s.occupation(i) == 1)
                .map(|i| -prof[i - 1])
                .sum();
            assert!((h1.diagonal()[a] - href.diagonal()[a] - shift).abs() < 1e-12);
        }
    }

    #[test]
    fn cdw_operator_values() {
        let basis = ConstrainedBasis::new(6).unwrap();
        let sigma = cdw_operator(&basis, 1).unwrap();
        // perfect CDW 1010…: site 1 occupied, site 2 empty → +1
        let up = basis.index_of(BasisState(0b010101)).unwrap();
        assert_eq!(sigma.diagonal()[up], 1.0);
        // shifted CDW 0101…: (1)(0−1) = −1
        let dn = basis.index_of(BasisState(0b101010)).unwrap();
        assert_eq!(sigma.diagonal()[dn], -1.0);
        // empty chain: 0
        let zero = basis.index_of(BasisState(0)).unwrap();
        assert_eq!(sigma.diagonal()[zero], 0.0);
        assert!(cdw_operator(&basis, 6).is_err());
    }

    #[test]
    fn hermiticity_and_reflection_commutation() {
        let basis = ConstrainedBasis::new(8).unwrap();
        let mut p = ChainParams::ising_repulsive().with_length(8);
        // symmetric local detuning profile keeps [H, R_x] = 0
        p.local_detunings = boundary_detuning_profile(8, p.v2);
        let h = build_hamiltonian(&basis, &p).unwrap();
        assert_eq!(h.symmetry_defect(), 0.0);

        let r = crate::hilbert::ReflectionPermutation::new(&basis);
        let d = h.to_dense();
        let dim = basis.dimension();
        let mut worst = 0.0f64;
        for a in 0..dim {
            for b in 0..dim {
                let lhs = d[(r.image(a), r.image(b))];
                worst = worst.max((lhs - d[(a, b)]).abs());
            }
        }
        assert_eq!(worst, 0.0, "H commutes with reflection exactly");
    }

    #[test]
    fn drive_weight_profiles() {
        let c = cosine_profile_weights(19);
        assert!((c[0] - 1.0).abs() < 1e-15);
        assert!((c[18] + 1.0).abs() < 1e-15);
        assert!(c[9].abs() < 1e-15, "midpoint of odd chain vanishes");

        let w = wavevector_weights(19, 0.0, 0.0);
        assert!(w.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        // α = π/2 makes the pattern odd under reflection
        let w = wavevector_weights(19, std::f64::consts::PI / 18.0, std::f64::consts::PI / 2.0);
        for i in 0..19 {
            assert!((w[i] + w[18 - i]).abs() < 1e-12);
        }
    }
}
