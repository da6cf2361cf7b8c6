//! Reaction terms, time weights and their envelope analysis.

pub mod expr;
pub mod function;
pub mod profile;
pub mod properties;

pub use expr::{parse, Expr, LogNum, ParseError, ParseErrorKind};
pub use function::{Kind, ScalarFunction, ShapeFlags};
pub use profile::{EnvelopePoint, NonlinearityProfile, Potential, ProfileConfig, ProfileSummary, QuasiMult};
pub use properties::{verify_properties, CheckStatus, PropertyCheck, PropertyConfig, PropertyReport};
