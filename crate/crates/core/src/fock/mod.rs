//! Truncated bosonic Fock space over lattice modes.

mod basis;
mod coherent;
pub mod io;
mod ops;
mod state;

pub use basis::{binomial, sector_dim, FockBasis, SectorIndex};
pub use coherent::{
    coherent_minus_product_norm, coherent_minus_product_norm_direct, d_n, projected_coherent, CoherentProductReport,
};
pub use ops::{
    apply_annihilate, apply_create, coherent_state, field_phi, product_state, project_sector, second_quantize,
    second_quantize_any, weyl_apply, weyl_headroom, SecondQuantized,
};
pub use state::{FockState, ModeFunction};

/// Random fixtures shared by tests and the lemma battery.
pub mod testing {
    use std::sync::Arc;

    use rand::Rng;

    use super::{FockBasis, FockState, ModeFunction};
    use crate::linalg::{C64, ZERO};

    pub fn random_mode(modes: usize, rng: &mut impl Rng) -> ModeFunction {
        ModeFunction::new((0..modes).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
    }

    /// Normalized random state supported on sectors `0..=top`.
    pub fn random_state_below(basis: &Arc<FockBasis>, top: usize, rng: &mut impl Rng) -> FockState {
        let amps = (0..basis.dim())
            .map(|k| {
                if basis.sector_of(k) <= top {
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    ZERO
                }
            })
            .collect();
        FockState::from_amplitudes(basis, amps).expect("dimension matches").normalized()
    }
}
