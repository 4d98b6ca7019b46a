//! Text and JSON renderings shared by the command-line tool and examples.

use serde::Serialize;

use crate::error::Result;
use crate::friendliness::{hit_set_probs, reno_friendly_ai, single_loss_hit_probs, HitDistribution};
use crate::ratio::Ratio;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AiFactor {
    pub b: Ratio,
    pub a: Ratio,
    pub approx: f64,
}

impl AiFactor {
    pub fn text(&self) -> String {
        format!("{} (≈ {:.4})", self.a, self.approx)
    }
}

/// Reno-friendly additive increase for decrease factor `b`.
pub fn ai_factor(b: &Ratio) -> Result<AiFactor> {
    let a = reno_friendly_ai(b)?;
    Ok(AiFactor {
        b: b.clone(),
        approx: a.to_f64(),
        a,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeLine {
    /// Flows hit at least once.
    pub hit: Vec<usize>,
    /// Probability over the common denominator, e.g. `510/1024`.
    pub prob: String,
    pub approx: f64,
}

/// Hit-set probabilities for `losses` drops among flows sending at
/// `rates`, every probability written over one common denominator.
pub fn hit_table(rates: &[Ratio], losses: u32) -> Result<Vec<OutcomeLine>> {
    let single = single_loss_hit_probs(rates)?;
    let dist = if losses == 1 {
        single
    } else {
        hit_set_probs(&single, losses)?
    };
    Ok(lines(&dist))
}

fn lines(dist: &HitDistribution) -> Vec<OutcomeLine> {
    let denom = Ratio::common_denom(dist.iter().map(|(_, p)| p));
    dist.iter()
        .map(|(hit, p)| OutcomeLine {
            hit: hit.to_vec(),
            prob: format!("{}/{}", p.numer_over(&denom).expect("common denominator"), denom),
            approx: p.to_f64(),
        })
        .collect()
}

pub fn hit_table_text(table: &[OutcomeLine]) -> String {
    let mut out = String::new();
    for l in table {
        let set: Vec<String> = l.hit.iter().map(|i| i.to_string()).collect();
        out.push_str(&format!("{{{}}}: {} (≈ {:.4})\n", set.join(","), l.prob, l.approx));
    }
    out
}
