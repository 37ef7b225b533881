pub mod acoustics;
pub mod cluster;
pub mod confound;
pub mod embedding;
pub mod matrix;
pub mod pipeline;
pub mod report;
pub mod synth;
