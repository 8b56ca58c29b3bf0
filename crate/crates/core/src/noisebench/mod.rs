//! Benchmark drivers: the flipped-label detection study over threshold grids
//! and the label-noise pipeline sweep.

mod sweep;
mod threshold;

pub use sweep::{
    real_reference, run_noise_sweep, NoiseSweepConfig, NoiseSweepOutput, RealReference, Strategy,
};
pub use threshold::{
    aggregate_threshold_cells, run_threshold_benchmark, run_threshold_unit, threshold_units,
    write_threshold_table, ThresholdBenchConfig, ThresholdCell, ThresholdRow, ThresholdUnit,
    SMALL_SHAPES,
};

pub const DEFAULT_NOISE_LEVELS: [f64; 6] = [0.0, 0.02, 0.04, 0.06, 0.08, 0.10];
