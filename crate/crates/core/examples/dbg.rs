use rydspec_core::dynamics::*;
use rydspec_core::hamiltonian::ChainParams;
use rydspec_core::hilbert::ConstrainedBasis;

fn main() {
    let l = 7;
    let basis = ConstrainedBasis::new(l).unwrap();
    let params = ChainParams::ising_repulsive().with_length(l).with_delta(8.8);
    for dur in [0.5, 1.5, 3.0, 6.0, 10.0] {
        let prep = adiabatic_prepare(
            &basis, &params,
            &SweepConfig { duration: dur, ..SweepConfig::for_params(&params) },
            &PropagatorOptions::default(),
        ).unwrap();
        println!("T_sweep = {dur}: fidelity = {:.6}", prep.ground_fidelity);
    }
}
