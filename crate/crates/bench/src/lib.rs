//! Shared fixtures for the benchmarks.

use lclab_core::dynamics::{realize, DenseOperator};
use lclab_core::hamiltonian::build_power_law_ising;
use lclab_core::{HamiltonianSpec, Lattice, Pauli};

/// Power-law Ising chain with `alpha = 4` and a transverse field.
pub fn chain_model(n: usize) -> HamiltonianSpec {
    build_power_law_ising(&Lattice::chain(n).unwrap(), 4.0, 1.0, 0.8).unwrap()
}

pub fn dense_chain(n: usize) -> DenseOperator {
    let h = chain_model(n);
    realize(&h, &h.lattice.full(), n).unwrap().operator
}

pub fn pauli(site: usize, p: Pauli) -> DenseOperator {
    DenseOperator::pauli_string(&[(site, p)], 1.0).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(dense_chain(4).dim(), 16);
        assert_eq!(pauli(2, Pauli::X).support().members(), &[2]);
    }
}
