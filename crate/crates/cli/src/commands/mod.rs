pub mod data;
pub mod eval;
pub mod ptd;
pub mod report;
pub mod train;
