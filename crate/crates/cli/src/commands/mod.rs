pub mod evaluate;
pub mod render;
pub mod sweep;
pub mod synth;
pub mod track;
