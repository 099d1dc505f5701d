//! Seeded workloads shared by the engine benchmarks.

use std::sync::Arc;

use tcohom::primitives::SolverKind;
use tcohom::specform::random::{random_form, seeded_rng, RandomFormConfig};
use tcohom::specform::{Grading, SpectralForm};
use tcohom::suites::solver_input;
use tcohom::Lattice;

pub fn reference() -> Arc<Lattice> {
    Arc::new(Lattice::reference())
}

/// `count` random `(1,1)`-forms with coefficients up to shell 2.
pub fn operator_forms(lattice: &Arc<Lattice>, count: usize, seed: u64) -> Vec<SpectralForm> {
    let cfg = RandomFormConfig { mode_radius: 2, entries: 8, terms: 2, k_max: 1, m_max: 1 };
    let mut rng = seeded_rng(seed);
    (0..count).map(|_| random_form(&mut rng, lattice, Grading::Bidegree(1, 1), &cfg)).collect()
}

/// One valid input per solver.
pub fn solver_inputs(lattice: &Arc<Lattice>, seed: u64) -> Vec<(SolverKind, SpectralForm)> {
    let mut rng = seeded_rng(seed);
    SolverKind::ALL.into_iter().map(|k| (k, solver_input(k, lattice, &mut rng))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workloads_are_seeded() {
        let l = reference();
        let a: Vec<String> = operator_forms(&l, 3, 1).iter().map(tcohom::specform::serialize_form).collect();
        let b: Vec<String> = operator_forms(&l, 3, 1).iter().map(tcohom::specform::serialize_form).collect();
        assert_eq!(a, b);
        assert_eq!(solver_inputs(&l, 1).len(), SolverKind::ALL.len());
    }
}
