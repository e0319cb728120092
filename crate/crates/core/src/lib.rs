pub mod autodiff;
pub mod csi;
pub mod fsio;
pub mod metrics;
pub mod models;
pub mod solver;
