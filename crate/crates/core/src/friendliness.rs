//! The analytic chain: steady state, flow-rate equality, the
//! Reno-friendly additive increase, and which flows a congestion event
//! hits.
//!
//! Everything is evaluated in exact rational arithmetic. The `_f64`
//! entry points convert their arguments to the exact binary value they
//! hold, evaluate exactly, and round the result once to the nearest `f64`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::AimdParams;
use crate::ratio::Ratio;

fn check_decrease(b: &Ratio) -> Result<()> {
    if b.is_positive() && *b < Ratio::one() {
        Ok(())
    } else {
        Err(Error::DecreaseOutOfRange(b.to_string()))
    }
}

fn check_increase(a: &Ratio) -> Result<()> {
    if a.is_positive() {
        Ok(())
    } else {
        Err(Error::IncreaseNotPositive(a.to_string()))
    }
}

fn exact(x: f64) -> Result<Ratio> {
    Ratio::from_f64(x).ok_or_else(|| Error::Config(format!("non-finite value {x}")))
}

/// Peak window of a converged sawtooth with `rounds` additive-increase
/// rounds per cycle: `a J / (1 - b)`.
pub fn steady_state_peak(a: &Ratio, b: &Ratio, rounds: u64) -> Result<Ratio> {
    check_increase(a)?;
    check_decrease(b)?;
    if rounds == 0 {
        return Err(Error::EmptyCycle);
    }
    let j = Ratio::from_integer(rounds as i64);
    Ok(&(a * &j) / &(Ratio::one() - b.clone()))
}

/// Ratio of peak windows `W_c / W_r` that equalizes packets per cycle:
/// `(1 + b_r) / (1 + b_c)`.
pub fn peak_window_ratio(b_r: &Ratio, b_c: &Ratio) -> Result<Ratio> {
    check_decrease(b_r)?;
    check_decrease(b_c)?;
    Ok(&(Ratio::one() + b_r.clone()) / &(Ratio::one() + b_c.clone()))
}

/// Additive increase for a flow with decrease `b_c` that matches the rate
/// of a flow using `(a_r, b_r)` under synchronized losses:
/// `a_r * (1 - b_c)/(1 + b_c) * (1 + b_r)/(1 - b_r)`.
pub fn ai_factor(a_r: &Ratio, b_r: &Ratio, b_c: &Ratio) -> Result<Ratio> {
    check_increase(a_r)?;
    check_decrease(b_r)?;
    check_decrease(b_c)?;
    let one = Ratio::one();
    let c = &(&one - b_c) / &(&one + b_c);
    let r = &(&one + b_r) / &(&one - b_r);
    Ok(&(a_r * &c) * &r)
}

/// Reno-friendly additive increase `3 (1 - b_c) / (1 + b_c)`.
pub fn reno_friendly_ai(b_c: &Ratio) -> Result<Ratio> {
    check_decrease(b_c)?;
    let one = Ratio::one();
    Ok(&(Ratio::from_integer(3) * (&one - b_c)) / &(&one + b_c))
}

/// Ratio of packet rates `r_r / r_c` when both flows sit at their peaks
/// with equal average windows: `(1 + b_c) / (1 + b_r)`.
pub fn peak_rate_ratio(b_r: &Ratio, b_c: &Ratio) -> Result<Ratio> {
    check_decrease(b_r)?;
    check_decrease(b_c)?;
    Ok(&(Ratio::one() + b_c.clone()) / &(Ratio::one() + b_r.clone()))
}

/// Rate at which the shared queue grows between reductions, `sum(a_i)`.
pub fn aggregate_queue_growth(increases: &[Ratio]) -> Ratio {
    increases.iter().sum()
}

pub fn aggregate_queue_growth_f64(params: &[AimdParams]) -> f64 {
    params.iter().map(|p| p.a()).sum()
}

pub fn reno_friendly_ai_f64(b_c: f64) -> Result<f64> {
    reno_friendly_ai(&exact(b_c)?).map(|r| r.to_f64())
}

pub fn ai_factor_f64(a_r: f64, b_r: f64, b_c: f64) -> Result<f64> {
    ai_factor(&exact(a_r)?, &exact(b_r)?, &exact(b_c)?).map(|r| r.to_f64())
}

/// What the keys of a [`HitDistribution`] mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutcomeKind {
    /// Ordered loss sequence: `[0, 1]` means flow 0 lost the first packet
    /// and flow 1 the second.
    Sequence,
    /// Set of flows hit at least once (sorted, no repeats).
    HitSet,
}

/// Probability mass over congestion-event outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct HitDistribution {
    kind: OutcomeKind,
    n_flows: usize,
    mass: BTreeMap<Vec<usize>, Ratio>,
}

impl HitDistribution {
    pub fn kind(&self) -> OutcomeKind {
        self.kind
    }

    pub fn n_flows(&self) -> usize {
        self.n_flows
    }

    /// Probability of `outcome`; zero if it never occurs.
    pub fn prob(&self, outcome: &[usize]) -> Ratio {
        self.mass.get(outcome).cloned().unwrap_or_else(Ratio::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], &Ratio)> {
        self.mass.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total(&self) -> Ratio {
        self.mass.values().sum()
    }

    /// Per-flow probability of catching a single loss. Only meaningful for
    /// distributions over one-loss outcomes.
    pub fn single_probs(&self) -> Vec<Ratio> {
        (0..self.n_flows).map(|i| self.prob(&[i])).collect()
    }
}

/// Which flow catches a single loss: `p_i = r_i / sum(r)`.
pub fn single_loss_hit_probs(rates: &[Ratio]) -> Result<HitDistribution> {
    if rates.is_empty() {
        return Err(Error::NoFlows);
    }
    if let Some((flow, r)) = rates.iter().enumerate().find(|(_, r)| !r.is_positive()) {
        return Err(Error::BadRate {
            flow,
            rate: r.to_string(),
        });
    }
    let total: Ratio = rates.iter().sum();
    let mass = rates
        .iter()
        .enumerate()
        .map(|(i, r)| (vec![i], r / &total))
        .collect();
    Ok(HitDistribution {
        kind: OutcomeKind::Sequence,
        n_flows: rates.len(),
        mass,
    })
}

pub fn single_loss_hit_probs_f64(rates: &[f64]) -> Result<HitDistribution> {
    let exact_rates = rates.iter().map(|&r| exact(r)).collect::<Result<Vec<_>>>()?;
    single_loss_hit_probs(&exact_rates)
}

/// Outcomes of `losses` independent draws at a congestion event.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiLossOutcome {
    /// Every ordered loss sequence.
    pub sequences: HitDistribution,
    /// Marginal over which flows reduce (a flow reduces once however many
    /// of its packets are lost).
    pub hit_sets: HitDistribution,
}

/// Upper bound on the number of loss sequences [`multi_loss_outcome_probs`]
/// will enumerate.
pub const MAX_SEQUENCES: u128 = 1 << 20;

/// Enumerates all `n^L` loss sequences, each the product of independent
/// single-loss draws with rates held fixed, and aggregates them by hit
/// set.
pub fn multi_loss_outcome_probs(single: &HitDistribution, losses: u32) -> Result<MultiLossOutcome> {
    if losses == 0 {
        return Err(Error::ZeroLosses);
    }
    let n = single.n_flows();
    let count = (n as u128).checked_pow(losses).unwrap_or(u128::MAX);
    if count > MAX_SEQUENCES {
        return Err(Error::TooManySequences(count));
    }
    let p = single.single_probs();

    let mut sequences = BTreeMap::new();
    let mut hit_sets: BTreeMap<Vec<usize>, Ratio> = BTreeMap::new();
    let mut seq = vec![0usize; losses as usize];
    loop {
        let prob = seq.iter().fold(Ratio::one(), |acc, &i| &acc * &p[i]);
        if !prob.is_zero() {
            let mut set = seq.clone();
            set.sort_unstable();
            set.dedup();
            let slot = hit_sets.entry(set).or_insert_with(Ratio::zero);
            *slot = &*slot + &prob;
            sequences.insert(seq.clone(), prob);
        }
        // odometer increment
        let mut k = seq.len();
        loop {
            if k == 0 {
                return Ok(MultiLossOutcome {
                    sequences: HitDistribution {
                        kind: OutcomeKind::Sequence,
                        n_flows: n,
                        mass: sequences,
                    },
                    hit_sets: HitDistribution {
                        kind: OutcomeKind::HitSet,
                        n_flows: n,
                        mass: hit_sets,
                    },
                });
            }
            k -= 1;
            seq[k] += 1;
            if seq[k] < n {
                break;
            }
            seq[k] = 0;
        }
    }
}

/// Largest flow count [`hit_set_probs`] accepts (it costs `3^n`).
pub const MAX_HIT_SET_FLOWS: usize = 12;

fn subsets(mask: u32) -> impl Iterator<Item = u32> {
    // all submasks of `mask`, including 0
    let mut sub = mask;
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let cur = sub;
        if sub == 0 {
            done = true;
        } else {
            sub = (sub - 1) & mask;
        }
        Some(cur)
    })
}

/// Probability that exactly the flows in `set` are hit by `losses` draws,
/// by inclusion-exclusion over subsets, without enumerating sequences:
/// `sum over T in set of (-1)^(|set|-|T|) * p(T)^L`.
pub fn hit_set_probs(single: &HitDistribution, losses: u32) -> Result<HitDistribution> {
    if losses == 0 {
        return Err(Error::ZeroLosses);
    }
    let n = single.n_flows();
    if n > MAX_HIT_SET_FLOWS {
        return Err(Error::TooManyFlows {
            got: n,
            max: MAX_HIT_SET_FLOWS,
        });
    }
    let p = single.single_probs();
    let mass_of = |mask: u32| -> Ratio {
        (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| &p[i])
            .sum()
    };
    let mut out = BTreeMap::new();
    for set in 1u32..(1 << n) {
        let size = set.count_ones();
        let mut total = Ratio::zero();
        for sub in subsets(set) {
            let term = mass_of(sub).pow(losses as i32);
            if (size - sub.count_ones()) % 2 == 0 {
                total = &total + &term;
            } else {
                total = &total - &term;
            }
        }
        if !total.is_zero() {
            let key = (0..n).filter(|i| set & (1 << i) != 0).collect();
            out.insert(key, total);
        }
    }
    Ok(HitDistribution {
        kind: OutcomeKind::HitSet,
        n_flows: n,
        mass: out,
    })
}

/// Floating-point version of [`hit_set_probs`] keyed by bit mask
/// (bit `i` set = flow `i` hit). `probs` must sum to one.
pub fn hit_set_probs_f64(probs: &[f64], losses: u32) -> Result<Vec<(u32, f64)>> {
    if losses == 0 {
        return Err(Error::ZeroLosses);
    }
    let n = probs.len();
    if n > MAX_HIT_SET_FLOWS {
        return Err(Error::TooManyFlows {
            got: n,
            max: MAX_HIT_SET_FLOWS,
        });
    }
    let mass_of = |mask: u32| -> f64 {
        (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| probs[i])
            .sum()
    };
    let mut out = Vec::new();
    for set in 1u32..(1 << n) {
        let size = set.count_ones();
        let total: f64 = subsets(set)
            .map(|sub| {
                let term = mass_of(sub).powi(losses as i32);
                if (size - sub.count_ones()) % 2 == 0 {
                    term
                } else {
                    -term
                }
            })
            .sum();
        if total > 0.0 {
            out.push((set, total));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Ratio {
        Ratio::new(n, d)
    }

    fn dec(s: &str) -> Ratio {
        s.parse().unwrap()
    }

    #[test]
    fn steady_state_examples() {
        assert_eq!(steady_state_peak(&r(1, 1), &r(1, 2), 10).unwrap(), r(20, 1));
        // (9/17 * 17) / (3/10) = 30
        assert_eq!(steady_state_peak(&r(9, 17), &dec("0.7"), 17).unwrap(), r(30, 1));
        let e = steady_state_peak(&r(1, 1), &r(1, 2), 0).unwrap_err();
        assert_eq!(e.to_string(), "cycle must have >=1 round");
    }

    #[test]
    fn peak_window_ratio_examples() {
        assert_eq!(peak_window_ratio(&dec("0.5"), &dec("0.7")).unwrap(), r(15, 17));
        assert_eq!(peak_window_ratio(&dec("0.3"), &dec("0.3")).unwrap(), r(1, 1));
        assert_eq!(peak_window_ratio(&dec("0.5"), &dec("0.9")).unwrap(), r(15, 19));
    }

    #[test]
    fn ai_factor_examples() {
        assert_eq!(ai_factor(&r(1, 1), &dec("0.5"), &dec("0.7")).unwrap(), r(9, 17));
        assert_eq!(ai_factor(&r(2, 1), &dec("0.5"), &dec("0.7")).unwrap(), r(18, 17));
        for b in ["0.1", "0.5", "0.83"] {
            assert_eq!(ai_factor(&r(1, 1), &dec(b), &dec(b)).unwrap(), r(1, 1));
        }
        assert!(matches!(
            ai_factor(&r(0, 1), &dec("0.5"), &dec("0.7")),
            Err(Error::IncreaseNotPositive(_))
        ));
        assert!(matches!(
            ai_factor(&r(1, 1), &dec("1"), &dec("0.7")),
            Err(Error::DecreaseOutOfRange(_))
        ));
    }

    #[test]
    fn reno_friendly_examples() {
        assert_eq!(reno_friendly_ai(&dec("0.7")).unwrap(), r(9, 17));
        assert_eq!(reno_friendly_ai(&dec("0.5")).unwrap(), r(1, 1));
        assert_eq!(reno_friendly_ai(&dec("0.9")).unwrap(), r(3, 19));
        assert!((reno_friendly_ai_f64(0.7).unwrap() - 9.0 / 17.0).abs() < 1e-15);
        assert!(reno_friendly_ai(&dec("1.0")).is_err());
    }

    #[test]
    fn peak_rate_ratio_examples() {
        assert_eq!(peak_rate_ratio(&dec("0.5"), &dec("0.7")).unwrap(), r(17, 15));
        assert_eq!(peak_rate_ratio(&dec("0.6"), &dec("0.6")).unwrap(), r(1, 1));
        assert_eq!(peak_rate_ratio(&dec("0.5"), &dec("0.9")).unwrap(), r(19, 15));
    }

    #[test]
    fn single_loss_examples() {
        let d = single_loss_hit_probs(&[r(17, 1), r(15, 1)]).unwrap();
        assert_eq!(d.single_probs(), vec![r(17, 32), r(15, 32)]);
        let d = single_loss_hit_probs(&[r(51, 1), r(49, 1)]).unwrap();
        assert_eq!(d.single_probs(), vec![r(51, 100), r(49, 100)]);
        let d = single_loss_hit_probs(&vec![r(3, 1); 5]).unwrap();
        assert!(d.single_probs().iter().all(|p| *p == r(1, 5)));
        assert_eq!(d.total(), Ratio::one());
        assert!(matches!(
            single_loss_hit_probs(&[r(1, 1), r(0, 1)]),
            Err(Error::BadRate { flow: 1, .. })
        ));
        assert!(single_loss_hit_probs(&[r(-1, 1)]).is_err());
    }

    #[test]
    fn two_losses_17_15() {
        let single = single_loss_hit_probs(&[r(17, 1), r(15, 1)]).unwrap();
        let out = multi_loss_outcome_probs(&single, 2).unwrap();
        assert_eq!(out.sequences.prob(&[0, 0]), r(289, 1024));
        assert_eq!(out.sequences.prob(&[0, 1]), r(255, 1024));
        assert_eq!(out.sequences.prob(&[1, 0]), r(255, 1024));
        assert_eq!(out.sequences.prob(&[1, 1]), r(225, 1024));
        assert_eq!(out.hit_sets.prob(&[0]), r(289, 1024));
        assert_eq!(out.hit_sets.prob(&[0, 1]), r(510, 1024));
        assert_eq!(out.hit_sets.prob(&[1]), r(225, 1024));
        assert_eq!(out.hit_sets.total(), Ratio::one());
    }

    #[test]
    fn one_loss_is_identity() {
        let single = single_loss_hit_probs(&[r(2, 1), r(3, 1), r(7, 1)]).unwrap();
        let out = multi_loss_outcome_probs(&single, 1).unwrap();
        assert_eq!(out.sequences, single);
        assert!(matches!(multi_loss_outcome_probs(&single, 0), Err(Error::ZeroLosses)));
    }

    #[test]
    fn three_equal_flows_two_losses() {
        // brute-force oracle: enumerate the 9 ordered pairs by hand
        let single = single_loss_hit_probs(&vec![r(1, 1); 3]).unwrap();
        let out = multi_loss_outcome_probs(&single, 2).unwrap();
        let mut by_set: BTreeMap<Vec<usize>, i64> = BTreeMap::new();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(out.sequences.prob(&[i, j]), r(1, 9));
                let mut k = vec![i, j];
                k.sort();
                k.dedup();
                *by_set.entry(k).or_default() += 1;
            }
        }
        for (set, ninths) in by_set {
            assert_eq!(out.hit_sets.prob(&set), r(ninths, 9));
        }
        assert_eq!(out.hit_sets.prob(&[1]), r(1, 9));
        assert_eq!(out.hit_sets.prob(&[0, 2]), r(2, 9));
    }

    #[test]
    fn inclusion_exclusion_matches_enumeration() {
        let single = single_loss_hit_probs(&[r(5, 1), r(2, 1), r(9, 1), r(1, 1)]).unwrap();
        for losses in 1..=5 {
            let enumerated = multi_loss_outcome_probs(&single, losses).unwrap().hit_sets;
            let closed = hit_set_probs(&single, losses).unwrap();
            assert_eq!(enumerated, closed, "losses = {losses}");
        }
    }

    #[test]
    fn many_losses_hit_everyone() {
        let single = single_loss_hit_probs(&[r(1, 1), r(1, 1)]).unwrap();
        let d = hit_set_probs(&single, 64).unwrap();
        let both = d.prob(&[0, 1]).to_f64();
        assert!((1.0 - both) < 1e-6);
        assert_eq!(d.total(), Ratio::one());
        assert!(matches!(
            multi_loss_outcome_probs(&single, 64),
            Err(Error::TooManySequences(_))
        ));
    }

    #[test]
    fn float_hit_sets_agree_with_exact() {
        let rates = [17.0, 15.0, 4.5];
        let exact_d = hit_set_probs(&single_loss_hit_probs_f64(&rates).unwrap(), 3).unwrap();
        let total: f64 = rates.iter().sum();
        let probs: Vec<f64> = rates.iter().map(|x| x / total).collect();
        let float_d = hit_set_probs_f64(&probs, 3).unwrap();
        let sum: f64 = float_d.iter().map(|(_, p)| p).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for (mask, p) in float_d {
            let key: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
            assert!((exact_d.prob(&key).to_f64() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn queue_growth() {
        let a_c = reno_friendly_ai(&dec("0.7")).unwrap();
        assert_eq!(aggregate_queue_growth(&[r(1, 1), a_c.clone()]), r(26, 17));
        assert_eq!(aggregate_queue_growth(&[r(1, 1)]), r(1, 1));
        assert_eq!(
            aggregate_queue_growth(&[r(1, 1), r(1, 1), a_c.clone(), a_c]),
            r(52, 17)
        );
        let p = [AimdParams::RENO, AimdParams::reno_friendly(0.7).unwrap()];
        assert!((aggregate_queue_growth_f64(&p) - 26.0 / 17.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn unit_open() -> impl Strategy<Value = Ratio> {
            (2i64..10_000).prop_flat_map(|d| (1..d).prop_map(move |n| Ratio::new(n, d)))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn reno_friendly_is_ai_factor_for_reno(b in unit_open()) {
                prop_assert_eq!(
                    reno_friendly_ai(&b).unwrap(),
                    ai_factor(&Ratio::one(), &Ratio::new(1, 2), &b).unwrap()
                );
            }

            #[test]
            fn rate_and_window_ratios_are_reciprocal(x in unit_open(), y in unit_open()) {
                let prod = &peak_rate_ratio(&x, &y).unwrap() * &peak_window_ratio(&x, &y).unwrap();
                prop_assert_eq!(prod, Ratio::one());
            }

            #[test]
            fn reno_friendly_strictly_decreasing(x in unit_open(), y in unit_open()) {
                let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
                if lo != hi {
                    prop_assert!(reno_friendly_ai(&lo).unwrap() > reno_friendly_ai(&hi).unwrap());
                }
            }

            #[test]
            fn hit_distributions_sum_to_one(
                rates in proptest::collection::vec(1i64..1000, 1..5),
                losses in 1u32..5,
            ) {
                let rates: Vec<Ratio> = rates.into_iter().map(Ratio::from_integer).collect();
                let single = single_loss_hit_probs(&rates).unwrap();
                prop_assert_eq!(single.total(), Ratio::one());
                let out = multi_loss_outcome_probs(&single, losses).unwrap();
                prop_assert_eq!(out.sequences.total(), Ratio::one());
                prop_assert_eq!(out.hit_sets.total(), Ratio::one());
                for (_, p) in out.hit_sets.iter() {
                    prop_assert!(p.is_positive() && *p <= Ratio::one());
                }
            }
        }

        #[test]
        fn reno_friendly_limits() {
            let near0 = reno_friendly_ai(&Ratio::new(1, 1_000_000)).unwrap().to_f64();
            let near1 = reno_friendly_ai(&Ratio::new(999_999, 1_000_000)).unwrap().to_f64();
            assert!((near0 - 3.0).abs() < 1e-5);
            assert!(near1 < 1e-5 && near1 > 0.0);
        }
    }
}
