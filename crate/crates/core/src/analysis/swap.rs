//! Swap and external regret of a learner's trajectory.

use crate::error::{Error, Result};

/// Accumulates `M[k][j] = Σ_t π_k^{(t)} r_j^{(t)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapAccumulator {
    m: Vec<Vec<f64>>,
    rounds: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapRegretReport {
    pub rounds: u64,
    pub swap_regret: f64,
    /// Maximizing modification: action `k` is replaced by `mapping[k]`.
    pub mapping: Vec<usize>,
    pub external_regret: f64,
    pub best_fixed_action: usize,
}

impl SwapAccumulator {
    pub fn new(actions: usize) -> Self {
        Self { m: vec![vec![0.0; actions]; actions], rounds: 0 }
    }

    pub fn actions(&self) -> usize {
        self.m.len()
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn add(&mut self, pi: &[f64], reward: &[f64]) -> Result<()> {
        let a = self.actions();
        if pi.len() != a || reward.len() != a {
            return Err(Error::DimensionMismatch { expected: a, actual: pi.len().max(reward.len()) });
        }
        for (row, &p) in self.m.iter_mut().zip(pi) {
            if p != 0.0 {
                row.iter_mut().zip(reward).for_each(|(c, r)| *c += p * r);
            }
        }
        self.rounds += 1;
        Ok(())
    }

    /// Gain of a fixed modification rule `φ`.
    pub fn value_of(&self, mapping: &[usize]) -> f64 {
        mapping.iter().enumerate().map(|(k, &j)| self.m[k][j] - self.m[k][k]).sum()
    }

    pub fn report(&self) -> SwapRegretReport {
        let a = self.actions();
        let mut mapping = Vec::with_capacity(a);
        let mut swap = 0.0;
        for k in 0..a {
            let (mut best, mut arg) = (self.m[k][k], k);
            for j in 0..a {
                if self.m[k][j] > best {
                    best = self.m[k][j];
                    arg = j;
                }
            }
            swap += best - self.m[k][k];
            mapping.push(arg);
        }
        let earned: f64 = (0..a).map(|k| self.m[k][k]).sum();
        let (best_fixed_action, best_fixed) = (0..a)
            .map(|j| (j, (0..a).map(|k| self.m[k][j]).sum::<f64>()))
            .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        SwapRegretReport {
            rounds: self.rounds,
            swap_regret: swap,
            mapping,
            external_regret: best_fixed - earned,
            best_fixed_action,
        }
    }
}

pub fn swap_regret<'a>(trajectory: impl IntoIterator<Item = (&'a [f64], &'a [f64])>, actions: usize) -> Result<SwapRegretReport> {
    let mut acc = SwapAccumulator::new(actions);
    for (pi, r) in trajectory {
        acc.add(pi, r)?;
    }
    Ok(acc.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;

    fn report(rounds: &[(Vec<f64>, Vec<f64>)]) -> SwapRegretReport {
        swap_regret(rounds.iter().map(|(p, r)| (p.as_slice(), r.as_slice())), rounds[0].0.len()).unwrap()
    }

    #[test]
    fn examples() {
        let r = report(&[(vec![0.5, 0.5], vec![1.0, 0.0]), (vec![0.5, 0.5], vec![0.0, 1.0])]);
        assert_eq!(r.swap_regret, 0.0);
        let r = report(&[(vec![1.0, 0.0], vec![0.0, 1.0]), (vec![0.0, 1.0], vec![1.0, 0.0])]);
        assert_eq!(r.swap_regret, 2.0);
        assert_eq!(r.mapping, vec![1, 0]);
        let r = report(&vec![(vec![0.0, 1.0, 0.0], vec![0.1, 0.9, 0.3]); 5]);
        assert_eq!((r.swap_regret, r.external_regret), (0.0, 0.0));
    }

    fn all_mappings(a: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..a {
            out = out.into_iter().flat_map(|m| (0..a).map(move |j| [m.clone(), vec![j]].concat())).collect();
        }
        out
    }

    #[test]
    fn decomposition_matches_brute_force() {
        let mut rng = SimRng::seed_from(61);
        for _ in 0..300 {
            let a = 2 + rng.below(2);
            let mut acc = SwapAccumulator::new(a);
            for _ in 0..(1 + rng.below(20)) {
                let w: Vec<f64> = (0..a).map(|_| rng.exponential()).collect();
                let s: f64 = w.iter().sum();
                let pi: Vec<f64> = w.iter().map(|x| x / s).collect();
                let r: Vec<f64> = (0..a).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
                acc.add(&pi, &r).unwrap();
            }
            let rep = acc.report();
            let brute = all_mappings(a).iter().map(|m| acc.value_of(m)).fold(f64::NEG_INFINITY, f64::max);
            assert!((rep.swap_regret - brute).abs() < 1e-12);
            assert!((acc.value_of(&rep.mapping) - rep.swap_regret).abs() < 1e-12);
            let constant = (0..a).map(|j| acc.value_of(&vec![j; a])).fold(f64::NEG_INFINITY, f64::max);
            assert!((rep.external_regret - constant).abs() < 1e-12);
            assert!(rep.swap_regret >= rep.external_regret - 1e-12);
            assert!(rep.swap_regret >= 0.0);
        }
    }
}
