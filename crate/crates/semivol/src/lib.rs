//! Volume and moment approximation for compact basic semi-algebraic sets.

pub mod cli;
pub mod conditioning;
pub mod conic;
pub mod moments;
pub mod oracles;
pub mod poly;
pub mod quad;
pub mod lp;
pub mod sdp;
pub mod structures;
