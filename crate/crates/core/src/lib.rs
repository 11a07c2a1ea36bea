pub mod cohort;
pub mod csv_io;
pub mod error;
pub mod fpca;
pub mod grid;
pub mod indices;
mod linalg;
pub mod mfpca;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod synth;
pub mod variable;
