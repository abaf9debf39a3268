pub mod agents;
pub mod analysis;
pub mod crit;
pub mod metrics;
pub mod protocol;
pub mod store;
