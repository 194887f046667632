pub mod domains;
pub mod error;
pub mod export;
pub mod fiber_maps;
pub mod itinerary;
pub mod skew3d;
pub mod spectrum;
pub mod symbolic;
pub mod thermo;
