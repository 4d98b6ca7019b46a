//! Reno-friendly additive increase for a range of decrease factors.
//!
//! ```text
//! cargo run --example ai_factor
//! ```

use aimd_friendly::friendliness::{peak_window_ratio, reno_friendly_ai};
use aimd_friendly::ratio::Ratio;
use aimd_friendly::Result;

fn main() -> Result<()> {
    let half = Ratio::new(1, 2);
    println!("{:<6} {:<12} {:<8} {}", "b", "a", "a", "W_c/W_r");
    for tenths in 5..10 {
        let b = Ratio::new(tenths, 10);
        let a = reno_friendly_ai(&b)?;
        let peaks = peak_window_ratio(&half, &b)?;
        println!("{:<6} {:<12} {:<8.4} {}", b.to_f64(), a.to_string(), a.to_f64(), peaks);
    }
    Ok(())
}
