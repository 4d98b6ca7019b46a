//! Reno-friendly AIMD: exact formulas, a round-based fluid simulator, and
//! Markov-chain / Monte-Carlo analysis of who gets hit at a congestion
//! event.
//!
//! ```
//! use aimd_friendly::friendliness::reno_friendly_ai;
//! use aimd_friendly::ratio::Ratio;
//!
//! let a = reno_friendly_ai(&"0.7".parse::<Ratio>().unwrap()).unwrap();
//! assert_eq!(a, Ratio::new(9, 17));
//! ```

pub mod bottleneck;
pub mod chain;
pub mod error;
pub mod friendliness;
pub mod harness;
pub mod model;
pub mod ratio;
pub mod report;
pub mod sim;

pub use error::{Error, Result};
