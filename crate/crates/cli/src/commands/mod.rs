pub mod analogy;
pub mod boundary;
pub mod maskfill;
pub mod synth;
pub mod validate;
pub mod vectors;
