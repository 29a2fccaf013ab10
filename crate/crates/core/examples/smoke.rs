use rydspec_core::hamiltonian::*;
use rydspec_core::hilbert::*;
use rydspec_core::spectral::*;
use std::time::Instant;

fn main() {
    // criterion 2: L=7 gap
    let basis = ConstrainedBasis::new(7).unwrap();
    let p = ChainParams::ising_repulsive().with_length(7).with_delta(8.8);
    let h = build_hamiltonian(&basis, &p).unwrap();
    let spec = eigensolve_lowest(&h, 2, &EigenOptions::default()).unwrap();
    println!("L=7 gap: {:.6} MHz (target 2.83 +- 3%)", spec.energies[1] - spec.energies[0]);

    // criterion 3: L=19 ratios
    let t0 = Instant::now();
    let basis = ConstrainedBasis::new(19).unwrap();
    let p = ChainParams::ising_repulsive().with_delta(1.70 * 6.0);
    let h = build_hamiltonian(&basis, &p).unwrap();
    let rx = ReflectionPermutation::new(&basis);
    let spec = solve_labeled(&h, &rx, 40, &EigenOptions::default()).unwrap();
    println!("L=19 solve 40 states: {:.2?}", t0.elapsed());
    let k = total_number_operator(&basis);
    let t = transition_strengths(&spec, &k).unwrap();
    let top = t.strongest(4);
    println!("even gaps: {:?}", top.iter().map(|e| e.gap).collect::<Vec<_>>());
    let ko = weighted_number_operator(&basis, &cosine_profile_weights(19)).unwrap();
    let to = transition_strengths(&spec, &ko).unwrap();
    let topo = to.strongest(3);
    println!("odd gaps: {:?}", topo.iter().map(|e| e.gap).collect::<Vec<_>>());

    // ground state Lanczos timing at L=25
    let t0 = Instant::now();
    let basis = ConstrainedBasis::new(25).unwrap();
    let p = ChainParams::ising_repulsive().with_length(25).with_delta(1.70*6.0);
    let h = build_hamiltonian(&basis, &p).unwrap();
    println!("L=25 build: {:.2?}, nnz {}", t0.elapsed(), h.off_diagonal_nnz());
    let t0 = Instant::now();
    let spec = eigensolve_lowest(&h, 1, &EigenOptions::default()).unwrap();
    println!("L=25 ground: {:.2?}  E0={:.6}", t0.elapsed(), spec.ground_energy());
    // warm restart at slightly different delta
    let t0 = Instant::now();
    let p2 = p.clone().with_delta(1.71*6.0);
    let h2 = build_hamiltonian(&basis, &p2).unwrap();
    let spec2 = eigensolve_lowest(&h2, 1, &EigenOptions::warm(Some(spec.vectors().unwrap()[0].clone()))).unwrap();
    println!("L=25 warm ground: {:.2?}  E0={:.6}", t0.elapsed(), spec2.ground_energy());
}
