//! Eigensolving and spectral post-processing.
//!
//! Lowest eigenpairs come from a thick-restart Lanczos with full
//! reorthogonalization; small problems fall back to dense symmetric
//! diagonalization. Eigenstates are labeled by reflection parity, with
//! numerically degenerate clusters rotated into R_x eigenstates first, and
//! transition strengths |⟨g|K̂|e⟩|² feed the spectroscopy predictors.

use crate::error::{Error, Result};
use crate::hamiltonian::ChainParams;
use crate::hilbert::ReflectionPermutation;
use crate::operator::SparseOperator;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Two states within this distance (2π·MHz units) are treated as one
/// degenerate cluster when assigning parities.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// |⟨R_x⟩| must exceed this for a state to get a parity label.
pub const PARITY_MIN_OVERLAP: f64 = 0.99;

/// Problems at or below this dimension are diagonalized densely.
pub const DENSE_LIMIT: usize = 4000;

#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Ascending eigenvalues (2π·MHz units; equal to E/h in MHz).
    pub energies: Vec<f64>,
    /// Eigenvectors, one per energy, in the constrained basis. Present
    /// unless explicitly dropped.
    pub vectors: Option<Vec<Vec<f64>>>,
    /// Reflection parity per state: `Some(±1)` or `None` when ambiguous.
    pub parities: Vec<Option<i8>>,
    /// Provenance.
    pub params: Option<ChainParams>,
}

impl Spectrum {
    /// Gaps Eₙ − E₀.
    pub fn gaps(&self) -> Vec<f64> {
        let e0 = self.energies[0];
        self.energies.iter().map(|e| e - e0).collect()
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn ground_state(&self) -> Result<&[f64]> {
        self.vectors
            .as_ref()
            .map(|v| v[0].as_slice())
            .ok_or_else(|| Error::validation("spectrum stores no eigenvectors"))
    }

    pub fn vectors(&self) -> Result<&[Vec<f64>]> {
        self.vectors
            .as_deref()
            .ok_or_else(|| Error::validation("spectrum stores no eigenvectors"))
    }

    /// Gaps of the even-parity excited states, ascending.
    pub fn even_parity_gaps(&self) -> Vec<f64> {
        let e0 = self.energies[0];
        self.energies
            .iter()
            .zip(&self.parities)
            .skip(1)
            .filter(|(_, p)| **p == Some(1))
            .map(|(e, _)| e - e0)
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TransitionEntry {
    /// Index of the excited state within the spectrum.
    pub state: usize,
    /// Gap ΔE_eg = E_e − E_g (equal to the transition frequency in MHz).
    pub gap: f64,
    /// |⟨g|K̂|e⟩|².
    pub strength: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransitionTable {
    pub entries: Vec<TransitionEntry>,
    /// ⟨g|K̂|g⟩.
    pub diagonal: f64,
    /// ⟨g|K̂²|g⟩, for the completeness sum rule.
    pub second_moment: f64,
}

impl TransitionTable {
    /// The `n` strongest transitions, returned sorted by gap.
    pub fn strongest(&self, n: usize) -> Vec<&TransitionEntry> {
        let mut by_strength: Vec<&TransitionEntry> = self.entries.iter().collect();
        by_strength.sort_by(|a, b| b.strength.total_cmp(&a.strength));
        let mut top: Vec<&TransitionEntry> = by_strength.into_iter().take(n).collect();
        top.sort_by(|a, b| a.gap.total_cmp(&b.gap));
        top
    }
}

/// Options for the iterative eigensolver.
#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Residual tolerance relative to the spectral scale.
    pub tol: f64,
    /// Lanczos basis size per restart cycle (0 = auto).
    pub subspace: usize,
    pub max_restarts: usize,
    /// Warm-start vector.
    pub initial: Option<Vec<f64>>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-10,
            subspace: 0,
            max_restarts: 400,
            initial: None,
        }
    }
}

impl EigenOptions {
    pub fn warm(initial: Option<Vec<f64>>) -> Self {
        EigenOptions {
            initial,
            ..Default::default()
        }
    }
}

/// Lowest `n_states` eigenpairs of a real-symmetric operator.
pub fn eigensolve_lowest(
    h: &SparseOperator,
    n_states: usize,
    opts: &EigenOptions,
) -> Result<Spectrum> {
    let dim = h.dimension();
    if n_states == 0 || n_states > dim {
        return Err(Error::validation(format!(
            "requested {n_states} states of a dimension-{dim} operator"
        )));
    }
    let (energies, vectors) = if dim <= DENSE_LIMIT && (dim <= 600 || n_states * 3 > dim) {
        dense_lowest(h, n_states)
    } else {
        lanczos_lowest(h, n_states, opts)?
    };
    let vectors = vectors.into_iter().map(fix_phase).collect();
    Ok(Spectrum {
        energies,
        vectors: Some(vectors),
        parities: vec![None; n_states],
        params: None,
    })
}

/// Full dense spectrum (small problems and oracles).
pub fn dense_spectrum(h: &SparseOperator) -> Result<Spectrum> {
    let dim = h.dimension();
    if dim > DENSE_LIMIT {
        return Err(Error::validation(format!(
            "dense diagonalization capped at {DENSE_LIMIT}, got {dim}"
        )));
    }
    let (energies, vectors) = dense_lowest(h, dim);
    let vectors = vectors.into_iter().map(fix_phase).collect();
    Ok(Spectrum {
        energies,
        vectors: Some(vectors),
        parities: vec![None; dim],
        params: None,
    })
}

/// Sign convention: largest-magnitude amplitude is real positive.
fn fix_phase(mut v: Vec<f64>) -> Vec<f64> {
    let mut best = 0usize;
    let mut best_abs = 0.0;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    v
}

fn dense_lowest(h: &SparseOperator, n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = h.to_dense();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..h.dimension()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies: Vec<f64> = order.iter().take(n).map(|&i| eig.eigenvalues[i]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .take(n)
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (energies, vectors)
}

/// Thick-restart Lanczos with full reorthogonalization.
///
/// The projected matrix B = VᵀHV is kept dense (`ncv` is small). Every new
/// column is recorded from the first orthogonalization pass, which makes
/// the restart bookkeeping automatic: the couplings of locked Ritz vectors
/// to the continuation vector appear as ordinary projections.
fn lanczos_lowest(
    h: &SparseOperator,
    n_states: usize,
    opts: &EigenOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let dim = h.dimension();
    let ncv = if opts.subspace > 0 {
        opts.subspace.min(dim)
    } else {
        (2 * n_states + 24).min(dim)
    };
    if ncv < (n_states + 2).min(dim) {
        return Err(Error::validation(
            "subspace must exceed n_states by at least 2",
        ));
    }
    let scale = h.norm_bound().max(1.0);
    let tol = opts.tol * scale;

    let mut v0 = match &opts.initial {
        Some(v) if v.len() == dim => v.clone(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x52_59_44_43);
            (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
        }
    };
    let n0 = norm(&v0);
    if n0 == 0.0 {
        return Err(Error::validation("zero start vector"));
    }
    scal(&mut v0, 1.0 / n0);

    let mut basis: Vec<Vec<f64>> = vec![v0];
    let mut small = DMatrix::<f64>::zeros(ncv, ncv);
    let mut work = vec![0.0; dim];
    let mut coeffs = vec![0.0; ncv];

    // Process column j: record B entries, return the cleaned remainder norm
    // and the normalized remainder in `work`.
    let process_column = |basis: &Vec<Vec<f64>>,
                              small: &mut DMatrix<f64>,
                              work: &mut Vec<f64>,
                              coeffs: &mut Vec<f64>,
                              j: usize|
     -> f64 {
        h.matvec(&basis[j], work);
        for (i, v) in basis.iter().enumerate() {
            coeffs[i] = dot(v, work);
        }
        for (i, v) in basis.iter().enumerate() {
            small[(i, j)] = coeffs[i];
            small[(j, i)] = coeffs[i];
            axpy(work, v, -coeffs[i]);
        }
        // second pass cleans orthogonality without touching B
        for v in basis.iter() {
            let c = dot(v, work);
            axpy(work, v, -c);
        }
        norm(work)
    };

    for _restart in 0..opts.max_restarts {
        // grow to ncv vectors, recording every processed column
        while basis.len() < ncv {
            let j = basis.len() - 1;
            let beta = process_column(&basis, &mut small, &mut work, &mut coeffs, j);
            if beta <= f64::EPSILON * scale * 16.0 {
                // invariant subspace: continue with deterministic noise
                let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f_6973 + basis.len() as u64);
                work.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
                for _ in 0..2 {
                    for v in &basis {
                        let c = dot(v, &work);
                        axpy(&mut work, v, -c);
                    }
                }
                let nb = norm(&work);
                if nb <= 1e-12 {
                    break; // whole space spanned
                }
                scal(&mut work, 1.0 / nb);
            } else {
                scal(&mut work, 1.0 / beta);
            }
            basis.push(work.clone());
        }

        // record the final column and keep its remainder for the restart
        let m = basis.len();
        let beta_m = process_column(&basis, &mut small, &mut work, &mut coeffs, m - 1);
        let residual_dir = if beta_m > 0.0 {
            let mut r = work.clone();
            scal(&mut r, 1.0 / beta_m);
            Some(r)
        } else {
            None
        };

        let b_view = small.view((0, 0), (m, m)).into_owned();
        let eig = b_view.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let converged = m == dim
            || (m >= n_states
                && order
                    .iter()
                    .take(n_states)
                    .all(|&i| (beta_m * eig.eigenvectors[(m - 1, i)]).abs() <= tol));

        let keep = if converged {
            n_states.min(m)
        } else {
            (n_states + (ncv - n_states) / 2).min(m.saturating_sub(1)).max(n_states.min(m))
        };

        let mut ritz: Vec<Vec<f64>> = Vec::with_capacity(keep + 1);
        for &i in order.iter().take(keep) {
            let mut u = vec![0.0; dim];
            for (jv, v) in basis.iter().enumerate() {
                axpy(&mut u, v, eig.eigenvectors[(jv, i)]);
            }
            ritz.push(u);
        }

        if converged {
            let energies: Vec<f64> = order
                .iter()
                .take(n_states.min(m))
                .map(|&i| eig.eigenvalues[i])
                .collect();
            return Ok((energies, ritz));
        }

        small.fill(0.0);
        for (i, &oi) in order.iter().take(keep).enumerate() {
            small[(i, i)] = eig.eigenvalues[oi];
        }
        if let Some(r) = residual_dir {
            ritz.push(r);
        }
        basis = ritz;
        // defensive re-orthonormalization of the restart block
        for j in 0..basis.len() {
            let (head, tail) = basis.split_at_mut(j);
            let w = &mut tail[0];
            for v in head.iter() {
                let c = dot(v, w);
                axpy(w, v, -c);
            }
            let nw = norm(w);
            if nw > 0.0 {
                scal(w, 1.0 / nw);
            }
        }
    }
    Err(Error::numerical(format!(
        "Lanczos did not converge {n_states} states in {} restarts",
        opts.max_restarts
    )))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn axpy(y: &mut [f64], x: &[f64], a: f64) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn scal(y: &mut [f64], a: f64) {
    for yi in y.iter_mut() {
        *yi *= a;
    }
}

/// Label states by reflection parity. Numerically degenerate clusters are
/// rotated into R_x eigenstates before labeling; a state whose |⟨R_x⟩|
/// stays below [`PARITY_MIN_OVERLAP`] keeps `None`.
pub fn parity_label(spec: &mut Spectrum, rx: &ReflectionPermutation) -> Result<()> {
    let vectors = spec
        .vectors
        .as_mut()
        .ok_or_else(|| Error::validation("parity labeling needs eigenvectors"))?;
    let n = spec.energies.len();
    let mut parities = vec![None; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (spec.energies[end] - spec.energies[end - 1]).abs() < DEGENERACY_TOL {
            end += 1;
        }
        let c = end - start;
        if c > 1 {
            let mut p = DMatrix::<f64>::zeros(c, c);
            for i in 0..c {
                for j in i..c {
                    let val = rx.matrix_element(&vectors[start + i], &vectors[start + j]);
                    p[(i, j)] = val;
                    p[(j, i)] = val;
                }
            }
            let eig = p.symmetric_eigen();
            let dim = vectors[0].len();
            let mut rotated: Vec<Vec<f64>> = vec![vec![0.0; dim]; c];
            for (k, out) in rotated.iter_mut().enumerate() {
                for i in 0..c {
                    axpy(out, &vectors[start + i], eig.eigenvectors[(i, k)]);
                }
            }
            for (k, v) in rotated.into_iter().enumerate() {
                vectors[start + k] = fix_phase(v);
            }
        }
        for k in start..end {
            let overlap = rx.expectation(&vectors[k]);
            parities[k] = if overlap.abs() >= PARITY_MIN_OVERLAP {
                Some(if overlap >= 0.0 { 1 } else { -1 })
            } else {
                None
            };
        }
        start = end;
    }
    spec.parities = parities;
    Ok(())
}

/// Transition strengths |⟨g|K̂|e⟩|² to every computed excited state.
pub fn transition_strengths(spec: &Spectrum, k: &SparseOperator) -> Result<TransitionTable> {
    let vectors = spec.vectors()?;
    let g = &vectors[0];
    let kg = k.apply(g);
    let diagonal = dot(g, &kg);
    let second_moment = dot(&kg, &kg);
    let entries = vectors
        .iter()
        .enumerate()
        .skip(1)
        .map(|(e, v)| {
            let amp = dot(v, &kg);
            TransitionEntry {
                state: e,
                gap: spec.energies[e] - spec.energies[0],
                strength: amp * amp,
            }
        })
        .collect();
    Ok(TransitionTable {
        entries,
        diagonal,
        second_moment,
    })
}

/// Eigensolve plus parity labels in one call.
pub fn solve_labeled(
    h: &SparseOperator,
    rx: &ReflectionPermutation,
    n_states: usize,
    opts: &EigenOptions,
) -> Result<Spectrum> {
    let mut spec = eigensolve_lowest(h, n_states, opts)?;
    parity_label(&mut spec, rx)?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_hamiltonian, total_number_operator, ChainParams};
    use crate::hilbert::ConstrainedBasis;

    #[test]
    fn two_site_ground_energy() {
        let basis = ConstrainedBasis::new(2).unwrap();
        let mut p = ChainParams::new(2, 1.0, 0.0, 1.0, 0.0);
        p.include_h2 = false;
        let h = build_hamiltonian(&basis, &p).unwrap();
        let spec = eigensolve_lowest(&h, 3, &EigenOptions::default()).unwrap();
        assert!((spec.ground_energy() + 1.0 / 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn classical_limit_large_detuning() {
        // Δ ≫ Ω: ground state → perfect CDW, E₀ → −⌈L/2⌉Δ + tails
        let l = 7;
        let basis = ConstrainedBasis::new(l).unwrap();
        let mut p = ChainParams::new(l, 1.0, 500.0, 1.0, 0.3);
        p.include_h2 = false;
        let h = build_hamiltonian(&basis, &p).unwrap();
        let spec = eigensolve_lowest(&h, 1, &EigenOptions::default()).unwrap();
        // CDW occupies odd sites 1,3,5,7
        let occupied: Vec<usize> = (1..=l).step_by(2).collect();
        let mut tails = 0.0;
        for (ai, &i) in occupied.iter().enumerate() {
            for &j in &occupied[ai + 1..] {
                tails += 64.0 * p.v2 / ((j - i) as f64).powi(6);
            }
        }
        let classical = -(occupied.len() as f64) * p.delta + tails;
        assert!(
            (spec.ground_energy() - classical).abs() / classical.abs() < 1e-3,
            "got {} want ≈ {}",
            spec.ground_energy(),
            classical
        );
    }

    #[test]
    fn lanczos_matches_dense() {
        let l = 12;
        let basis = ConstrainedBasis::new(l).unwrap();
        let p = ChainParams::ising_repulsive().with_length(l);
        let h = build_hamiltonian(&basis, &p).unwrap();
        let dense = dense_spectrum(&h).unwrap();
        let (energies, vectors) = lanczos_lowest(&h, 12, &EigenOptions::default()).unwrap();
        let scale = h.norm_bound();
        for (a, b) in energies.iter().zip(&dense.energies) {
            assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
        }
        for (e, v) in energies.iter().zip(&vectors) {
            let hv = h.apply(v);
            let res: f64 = hv
                .iter()
                .zip(v)
                .map(|(hv, vi)| (hv - e * vi).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-9 * scale, "residual {res}");
        }
    }

    #[test]
    fn parity_selection_rule() {
        let l = 11;
        let basis = ConstrainedBasis::new(l).unwrap();
        let p = ChainParams::ising_repulsive()
            .with_length(l)
            .with_delta(1.70 * 6.0);
        let h = build_hamiltonian(&basis, &p).unwrap();
        let rx = crate::hilbert::ReflectionPermutation::new(&basis);
        let spec = solve_labeled(&h, &rx, 20, &EigenOptions::default()).unwrap();
        assert_eq!(spec.parities[0], Some(1), "critical ground state is even");

        let k = total_number_operator(&basis);
        let table = transition_strengths(&spec, &k).unwrap();
        let max_all = table.entries.iter().map(|t| t.strength).fold(0.0, f64::max);
        let max_odd = table
            .entries
            .iter()
            .filter(|t| spec.parities[t.state] == Some(-1))
            .map(|t| t.strength)
            .fold(0.0, f64::max);
        assert!(
            max_odd < 1e-10 * max_all,
            "even drive cannot reach odd states: {max_odd} vs {max_all}"
        );

        // identity drive couples to nothing
        let id = SparseOperator::from_diagonal(vec![1.0; basis.dimension()]);
        let t_id = transition_strengths(&spec, &id).unwrap();
        assert!(t_id.entries.iter().all(|t| t.strength < 1e-18));
    }

    #[test]
    fn completeness_sum_rule() {
        let l = 10;
        let basis = ConstrainedBasis::new(l).unwrap();
        let p = ChainParams::ising_repulsive().with_length(l);
        let h = build_hamiltonian(&basis, &p).unwrap();
        let spec = dense_spectrum(&h).unwrap();
        let k = total_number_operator(&basis);
        let table = transition_strengths(&spec, &k).unwrap();
        let lhs: f64 =
            table.entries.iter().map(|t| t.strength).sum::<f64>() + table.diagonal.powi(2);
        assert!(
            (lhs - table.second_moment).abs() <= 1e-8 * table.second_moment,
            "sum rule: {lhs} vs {}",
            table.second_moment
        );
    }
}
