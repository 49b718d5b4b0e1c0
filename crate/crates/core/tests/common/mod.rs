#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use som_cwm::{SemanticModel, SpecificityRelation};

/// A randomly generated rd-table model, kept in plain form for oracles.
pub struct RandomModel {
    pub ids: Vec<String>,
    /// (name, rd per element, rd_max)
    pub tables: Vec<(String, Vec<f64>, f64)>,
    /// Raw `more specific > less specific` pairs, not closed.
    pub spec_pairs: Vec<(String, String)>,
}

impl RandomModel {
    pub fn model(&self) -> SemanticModel<f64> {
        SemanticModel::from_rd_tables(self.ids.clone(), self.tables.clone()).unwrap()
    }

    pub fn specificity(&self) -> SpecificityRelation {
        SpecificityRelation::from_pairs(
            self.spec_pairs
                .iter()
                .map(|(a, b)| (a.as_str(), b.as_str())),
        )
        .unwrap()
    }
}

/// Few distinct rd levels so that ties are common.
const LEVELS: [f64; 6] = [0.0, 0.25, 0.5, 1.0, 2.0, f64::INFINITY];

pub fn random_model(rng: &mut ChaCha8Rng) -> RandomModel {
    let n = rng.random_range(1..=40);
    let k = rng.random_range(1..=5);
    let ids = (0..n).map(|i| format!("e{i}")).collect();
    let names: Vec<String> = (0..k).map(|i| format!("C{i}")).collect();
    let tables = names
        .iter()
        .map(|name| {
            let rd = (0..n)
                .map(|_| LEVELS[rng.random_range(0..LEVELS.len())])
                .collect();
            let rd_max = LEVELS[rng.random_range(0..LEVELS.len() - 1)];
            (name.clone(), rd, rd_max)
        })
        .collect();
    // edges only go forward in a random permutation, so the relation is acyclic
    let mut order = names.clone();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut spec_pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if rng.random_bool(0.35) {
                spec_pairs.push((order[i].clone(), order[j].clone()));
            }
        }
    }
    RandomModel {
        ids,
        tables,
        spec_pairs,
    }
}

pub fn random_models(seed: u64, count: usize) -> Vec<RandomModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_model(&mut rng)).collect()
}

/// Transitive closure by fixpoint iteration.
pub fn closure(pairs: &[(String, String)]) -> BTreeSet<(String, String)> {
    let mut set: BTreeSet<(String, String)> = pairs.iter().cloned().collect();
    loop {
        let mut grown = set.clone();
        for (a, b) in &set {
            for (c, d) in &set {
                if b == c {
                    grown.insert((a.clone(), d.clone()));
                }
            }
        }
        if grown.len() == set.len() {
            return set;
        }
        set = grown;
    }
}

/// Direct reading of the combination rule: `x < y` iff some category
/// strictly prefers `x`, and every category that strictly prefers `y` is
/// overridden by a more specific one strictly preferring `x`.
pub fn brute_force_prefer(
    m: &RandomModel,
    spec: &BTreeSet<(String, String)>,
    x: usize,
    y: usize,
) -> bool {
    let strictly = |name: &str| {
        let (_, rd, _) = m.tables.iter().find(|(n, _, _)| n == name).unwrap();
        rd[x] < rd[y]
    };
    let exists = m.tables.iter().any(|(n, _, _)| strictly(n));
    let all = m.tables.iter().all(|(j, rd, _)| {
        let weakly = rd[x] <= rd[y];
        let overridden = m
            .tables
            .iter()
            .any(|(h, _, _)| spec.contains(&(h.clone(), j.clone())) && strictly(h));
        weakly || overridden
    });
    exists && all
}

/// The whole relation as a matrix, `less[x][y]` meaning `x < y`.
pub fn brute_force_relation(m: &RandomModel) -> Vec<Vec<bool>> {
    let spec = closure(&m.spec_pairs);
    let n = m.ids.len();
    (0..n)
        .map(|x| (0..n).map(|y| brute_force_prefer(m, &spec, x, y)).collect())
        .collect()
}
