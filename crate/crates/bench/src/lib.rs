//! Shared fixtures for the kernel benchmarks in `benches/`.

use tuckeriga::assembly::{assemble_system, assembly_tolerance, AssembledSystem};
use tuckeriga::precond::LowRankFd;
use tuckeriga::problems::preset_load;
use tuckeriga::study::poisson_spaces;
use tuckeriga::{GeometryPreset, Result};

/// An assembled Poisson system with its low-rank preconditioner.
pub struct PoissonFixture {
    pub system: AssembledSystem,
    pub precond: LowRankFd,
}

impl PoissonFixture {
    pub fn new(preset: GeometryPreset, p: usize, n_el: usize) -> Result<Self> {
        let spaces = poisson_spaces(p, n_el)?;
        let geo = preset.build();
        let system = assemble_system(&spaces, geo.as_ref(), &preset_load(preset), assembly_tolerance(1e-6))?;
        let precond = LowRankFd::from_spaces(&spaces, [1.0; 3], 0.1)?;
        Ok(Self { system, precond })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.system.rhs.dims()
    }
}
