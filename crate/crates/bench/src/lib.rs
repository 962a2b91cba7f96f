//! Shared inputs for the ribtrace benchmarks in `benches/`.

use ribtrace::phantom::{generate, Degradation, PhantomSpec};
use ribtrace::{CenterlineSet, ProbabilityMap};

/// Phantom with mild noise and one drop-out, representative of a
/// well-behaved network output.
pub fn bench_spec() -> PhantomSpec {
    PhantomSpec {
        seed: 3,
        degradations: vec![
            Degradation::Dropout { rib: "05l".parse().expect("valid label"), arc_start_mm: 100.0, arc_len_mm: 10.0 },
            Degradation::NoiseSigma(0.05),
        ],
        ..Default::default()
    }
}

pub fn bench_case(spacing: f64) -> (ProbabilityMap, CenterlineSet) {
    generate(&bench_spec(), spacing).expect("valid bench spec")
}
