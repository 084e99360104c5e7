pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod fields;
pub mod initial;
pub mod profiles;
pub mod real;
pub mod scenario;
pub mod snapshot;
pub mod spectral;
pub mod velocity;
pub mod verify;

pub use error::{EnsError, Result};
pub use real::Real;

pub type Grid = spectral::GridSpec<f64>;
pub type Field = spectral::ScalarField<f64>;
pub type Field32 = spectral::ScalarField<f32>;
pub type State = fields::SimState<f64>;
pub type SelfSimilar = fields::SelfSimilarState<f64>;
pub type Velocity = velocity::VelocityField<f64>;
pub type Profile = profiles::RadialProfile<f64>;
pub type Controls = evolution::StepControls<f64>;
pub type Run = evolution::Trajectory<f64>;
