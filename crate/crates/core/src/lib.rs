pub mod cli;
pub mod codec;
pub mod combinatorics;
pub mod design;
pub mod error;
pub mod eval;
pub mod order_stats;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod wsc;
