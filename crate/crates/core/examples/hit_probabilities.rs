//! Who reduces at a congestion event when the drops land on packets in
//! proportion to each flow's sending rate.
//!
//! ```text
//! cargo run --example hit_probabilities -- 17 15
//! ```

use aimd_friendly::ratio::Ratio;
use aimd_friendly::report::{hit_table, hit_table_text};
use aimd_friendly::Result;

fn main() -> Result<()> {
    let mut rates: Vec<Ratio> = std::env::args()
        .skip(1)
        .map(|s| s.parse().expect("rates must be numbers"))
        .collect();
    if rates.is_empty() {
        rates = vec![Ratio::from_integer(17), Ratio::from_integer(15)];
    }
    for losses in 1..=3 {
        println!("{losses} loss(es):");
        print!("{}", hit_table_text(&hit_table(&rates, losses)?));
    }
    Ok(())
}
