//! Client fleet simulator: seeded sensors producing RR-interval streams,
//! gateways depositing them as files on the shared directory and fetching
//! result files back.

pub mod error;
pub mod fleet;
pub mod gateway;
pub mod sensor;
pub mod service;

pub use error::ClientError;
pub use fleet::{run_fleet, ClientSpec, FleetConfig, FleetReport, FleetTiming};
pub use gateway::{fetch_results, gateway_flush, FetchedResult, GatewayConfig, DEPOSIT_ATTEMPTS};
pub use sensor::{generate_rr, SensorConfig, SensorMode, DEFAULT_JITTER_PCT, DEFAULT_START_MS};
pub use service::{ClientReport, ClientService, Deposit, ReceivedResult};
