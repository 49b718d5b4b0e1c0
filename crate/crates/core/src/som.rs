//! Rectangular Kohonen map: initialisation, best-matching-unit search and
//! sequential training.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{euclidean, squared_distance, Scalar};

/// A labelled input exemplar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Stimulus<T: Scalar> {
    pub id: String,
    pub features: Vec<T>,
    pub label: String,
}

impl<T: Scalar> Stimulus<T> {
    pub fn new(id: impl Into<String>, features: Vec<T>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            features,
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Unit<T: Scalar> {
    pub index: usize,
    pub row: usize,
    pub col: usize,
    pub weights: Vec<T>,
}

/// Where the schedule stood after the last presentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(bound = "")]
pub struct TrainingState<T: Scalar> {
    pub epoch: usize,
    pub presentations: u64,
    pub learning_rate: T,
    pub radius: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SomMap<T: Scalar> {
    pub rows: usize,
    pub cols: usize,
    pub input_dim: usize,
    pub seed: u64,
    pub units: Vec<Unit<T>>,
    #[serde(default)]
    pub training_state: TrainingState<T>,
}

/// Observed min/max of one feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureRange<T> {
    pub min: T,
    pub max: T,
}

/// Per-feature ranges of a dataset.
pub fn feature_ranges<T: Scalar>(data: &[Stimulus<T>]) -> Result<Vec<FeatureRange<T>>> {
    let first = data
        .first()
        .ok_or_else(|| Error::Input("empty dataset".into()))?;
    let d = first.features.len();
    let mut ranges: Vec<FeatureRange<T>> = first
        .features
        .iter()
        .map(|&v| FeatureRange { min: v, max: v })
        .collect();
    for s in data {
        check_vector(&s.features, d)?;
        for (r, &v) in ranges.iter_mut().zip(&s.features) {
            r.min = r.min.min(v);
            r.max = r.max.max(v);
        }
    }
    Ok(ranges)
}

pub(crate) fn check_vector<T: Scalar>(x: &[T], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len(),
        });
    }
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Input(format!(
            "non-finite feature at position {pos}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrainConfig<T: Scalar> {
    pub epochs: usize,
    pub lr_start: T,
    pub lr_end: T,
    pub radius_start: T,
    pub radius_end: T,
    pub seed: u64,
    pub shuffle: bool,
}

impl<T: Scalar> TrainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let one = T::one();
        let zero = T::zero();
        let finite = [
            self.lr_start,
            self.lr_end,
            self.radius_start,
            self.radius_end,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("schedule values must be finite".into()));
        }
        if !(self.lr_end > zero && self.lr_start >= self.lr_end && self.lr_start <= one) {
            return Err(Error::Config(format!(
                "learning rate must satisfy 1 >= lr_start >= lr_end > 0 (got {} .. {})",
                self.lr_start, self.lr_end
            )));
        }
        if !(self.radius_end > zero && self.radius_start >= self.radius_end) {
            return Err(Error::Config(format!(
                "radius must satisfy radius_start >= radius_end > 0 (got {} .. {})",
                self.radius_start, self.radius_end
            )));
        }
        Ok(())
    }
}

/// Parameters of a single weight update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Presentation<T> {
    pub learning_rate: T,
    pub radius: T,
}

/// One scheduled step: which stimulus to present and with what parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledStep<T> {
    pub epoch: usize,
    pub t: u64,
    pub stimulus: usize,
    pub params: Presentation<T>,
}

/// Presentation order and linearly decayed parameters for a training run.
///
/// Both [`SomMap::train`] and the revision trace walk this sequence, so the
/// two paths present identical stimuli with identical parameters.
pub struct Schedule<T: Scalar> {
    cfg: TrainConfig<T>,
    n: usize,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    epoch: usize,
    pos: usize,
}

impl<T: Scalar> Schedule<T> {
    pub fn new(cfg: &TrainConfig<T>, n: usize) -> Self {
        Self {
            cfg: cfg.clone(),
            n,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            order: Vec::new(),
            epoch: 0,
            pos: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.cfg.epochs as u64 * self.n as u64
    }

    fn params_at(&self, t: u64) -> Presentation<T> {
        let total = self.total();
        let frac = if total > 1 {
            T::from_u64(t).unwrap() / T::from_u64(total - 1).unwrap()
        } else {
            T::zero()
        };
        let lerp = |a: T, b: T| a * (T::one() - frac) + b * frac;
        Presentation {
            learning_rate: lerp(self.cfg.lr_start, self.cfg.lr_end),
            radius: lerp(self.cfg.radius_start, self.cfg.radius_end),
        }
    }
}

impl<T: Scalar> Iterator for Schedule<T> {
    type Item = ScheduledStep<T>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.n == 0 || self.epoch >= self.cfg.epochs {
            return None;
        }
        if self.pos == 0 {
            self.order = (0..self.n).collect();
            if self.cfg.shuffle {
                self.order.shuffle(&mut self.rng);
            }
        }
        let t = self.epoch as u64 * self.n as u64 + self.pos as u64;
        let step = ScheduledStep {
            epoch: self.epoch,
            t,
            stimulus: self.order[self.pos],
            params: self.params_at(t),
        };
        self.pos += 1;
        if self.pos == self.n {
            self.pos = 0;
            self.epoch += 1;
        }
        Some(step)
    }
}

impl<T: Scalar> SomMap<T> {
    /// Builds a `rows × cols` map whose weights lie strictly above the
    /// observed feature ranges: each component is drawn uniformly from
    /// `[max + 0.1·span, max + 0.6·span]`. A constant feature uses span 1.
    pub fn init(
        rows: usize,
        cols: usize,
        input_dim: usize,
        seed: u64,
        ranges: &[FeatureRange<T>],
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || input_dim == 0 {
            return Err(Error::Config(format!(
                "map dimensions must be positive (rows={rows}, cols={cols}, input_dim={input_dim})"
            )));
        }
        if ranges.len() != input_dim {
            return Err(Error::DimensionMismatch {
                expected: input_dim,
                found: ranges.len(),
            });
        }
        if ranges
            .iter()
            .any(|r| !(r.min.is_finite() && r.max.is_finite() && r.min <= r.max))
        {
            return Err(Error::Config(
                "feature ranges must be finite with min <= max".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bounds: Vec<(T, T)> = ranges
            .iter()
            .map(|r| {
                let span = r.max - r.min;
                let span = if span > T::zero() { span } else { T::one() };
                (r.max + T::lit(0.1) * span, r.max + T::lit(0.6) * span)
            })
            .collect();
        let units = (0..rows * cols)
            .map(|index| Unit {
                index,
                row: index / cols,
                col: index % cols,
                weights: bounds
                    .iter()
                    .map(|&(lo, hi)| {
                        let u = T::from_f64_lossy(rng.random::<f64>());
                        lo + (hi - lo) * u
                    })
                    .collect(),
            })
            .collect();
        Ok(Self {
            rows,
            cols,
            input_dim,
            seed,
            units,
            training_state: TrainingState::default(),
        })
    }

    /// Checks the structural invariants, for maps read from disk.
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.input_dim == 0 {
            return Err(Error::Config("map dimensions must be positive".into()));
        }
        if self.units.len() != self.rows * self.cols {
            return Err(Error::Input(format!(
                "expected {} units, found {}",
                self.rows * self.cols,
                self.units.len()
            )));
        }
        for (i, u) in self.units.iter().enumerate() {
            if u.index != i || u.row != i / self.cols || u.col != i % self.cols {
                return Err(Error::Input(format!(
                    "unit {i} has inconsistent index/coordinates ({}, {}, {})",
                    u.index, u.row, u.col
                )));
            }
            check_vector(&u.weights, self.input_dim)?;
        }
        Ok(())
    }

    pub fn unit(&self, index: usize) -> &Unit<T> {
        &self.units[index]
    }

    /// Index of the unit nearest to `x`; the lowest index wins ties.
    pub fn find_bmu(&self, x: &[T]) -> Result<usize> {
        check_vector(x, self.input_dim)?;
        Ok(self.nearest_unit(x))
    }

    fn nearest_unit(&self, x: &[T]) -> usize {
        let mut best = 0;
        let mut best_d = T::infinity();
        for u in &self.units {
            let d = squared_distance(x, &u.weights);
            if d < best_d {
                best_d = d;
                best = u.index;
            }
        }
        best
    }

    /// Moves the BMU of `x` and its grid neighbours toward `x` with Gaussian
    /// neighbourhood weighting. Returns the BMU index.
    pub fn present(&mut self, x: &[T], params: Presentation<T>) -> Result<usize> {
        check_vector(x, self.input_dim)?;
        let bmu = self.nearest_unit(x);
        let (br, bc) = (self.units[bmu].row, self.units[bmu].col);
        let two_r2 = T::lit(2.0) * params.radius * params.radius;
        for u in &mut self.units {
            let dr = T::from_usize(u.row.abs_diff(br)).unwrap();
            let dc = T::from_usize(u.col.abs_diff(bc)).unwrap();
            let h = (-(dr * dr + dc * dc) / two_r2).exp();
            let a = params.learning_rate * h;
            let keep = T::one() - a;
            // Convex combination: a = 1 lands exactly on x, a = 0 leaves w untouched.
            for (w, &xi) in u.weights.iter_mut().zip(x) {
                *w = keep * *w + a * xi;
            }
        }
        self.training_state.presentations += 1;
        self.training_state.learning_rate = params.learning_rate;
        self.training_state.radius = params.radius;
        Ok(bmu)
    }

    /// Sequential online training. Returns the quantisation error measured
    /// after each epoch.
    pub fn train(&mut self, data: &[Stimulus<T>], cfg: &TrainConfig<T>) -> Result<Vec<T>> {
        cfg.validate()?;
        if data.is_empty() {
            return Err(Error::Input("cannot train on an empty dataset".into()));
        }
        for s in data {
            check_vector(&s.features, self.input_dim)?;
        }
        let mut log = Vec::with_capacity(cfg.epochs);
        let mut schedule = Schedule::new(cfg, data.len()).peekable();
        while let Some(step) = schedule.next() {
            self.present(&data[step.stimulus].features, step.params)?;
            let epoch_done = schedule.peek().is_none_or(|next| next.epoch != step.epoch);
            if epoch_done {
                self.training_state.epoch += 1;
                log.push(self.quantization_error(data)?);
            }
        }
        Ok(log)
    }

    /// Mean distance from each stimulus to its BMU.
    pub fn quantization_error(&self, data: &[Stimulus<T>]) -> Result<T> {
        if data.is_empty() {
            return Err(Error::Input(
                "quantization error of an empty dataset".into(),
            ));
        }
        let mut sum = T::zero();
        for s in data {
            let bmu = self.find_bmu(&s.features)?;
            sum = sum + euclidean(&s.features, &self.units[bmu].weights);
        }
        Ok(sum / T::from_usize(data.len()).unwrap())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serialisation cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let map: Self =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("map snapshot: {e}")))?;
        map.validate()?;
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_range(d: usize) -> Vec<FeatureRange<f64>> {
        vec![FeatureRange { min: 0.0, max: 1.0 }; d]
    }

    fn two_unit_map(a: Vec<f64>, b: Vec<f64>) -> SomMap<f64> {
        let mut m = SomMap::init(1, 2, 2, 0, &unit_range(2)).unwrap();
        m.units[0].weights = a;
        m.units[1].weights = b;
        m
    }

    #[test]
    fn init_weights_lie_outside_the_range() {
        let m = SomMap::<f64>::init(1, 1, 3, 7, &unit_range(3)).unwrap();
        assert_eq!(m.units.len(), 1);
        assert_eq!(m.units[0].weights.len(), 3);
        for &w in &m.units[0].weights {
            assert!(!(0.0..=1.0).contains(&w), "{w}");
            assert!((1.1..=1.6).contains(&w));
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a = SomMap::<f64>::init(4, 5, 3, 11, &unit_range(3)).unwrap();
        let b = SomMap::<f64>::init(4, 5, 3, 11, &unit_range(3)).unwrap();
        assert_eq!(a, b);
        let c = SomMap::<f64>::init(4, 5, 3, 12, &unit_range(3)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_rejects_empty_grid() {
        assert!(matches!(
            SomMap::<f64>::init(0, 3, 2, 0, &unit_range(2)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            SomMap::<f64>::init(3, 3, 0, 0, &[]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn init_constant_feature_still_outside() {
        let r = [FeatureRange { min: 2.0, max: 2.0 }];
        let m = SomMap::<f64>::init(2, 2, 1, 3, &r).unwrap();
        assert!(m.units.iter().all(|u| u.weights[0] > 2.0));
    }

    #[test]
    fn grid_coordinates_follow_index() {
        let m = SomMap::<f32>::init(3, 4, 2, 0, &[FeatureRange { min: 0.0, max: 1.0 }; 2]).unwrap();
        m.validate().unwrap();
        assert_eq!((m.units[7].row, m.units[7].col), (1, 3));
    }

    #[test]
    fn bmu_single_unit() {
        let m = SomMap::<f64>::init(1, 1, 2, 0, &unit_range(2)).unwrap();
        assert_eq!(m.find_bmu(&[-40.0, 3.0]).unwrap(), 0);
    }

    #[test]
    fn bmu_nearest_and_ties() {
        let m = two_unit_map(vec![0.0, 0.0], vec![10.0, 10.0]);
        assert_eq!(m.find_bmu(&[1.0, 1.0]).unwrap(), 0);
        let m = two_unit_map(vec![10.0, 10.0], vec![0.0, 0.0]);
        assert_eq!(m.find_bmu(&[1.0, 1.0]).unwrap(), 1);
        let m = two_unit_map(vec![0.0, 0.0], vec![0.0, 0.0]);
        assert_eq!(m.find_bmu(&[1.0, 1.0]).unwrap(), 0);
    }

    #[test]
    fn bmu_rejects_bad_input() {
        let m = two_unit_map(vec![0.0, 0.0], vec![1.0, 1.0]);
        assert!(matches!(
            m.find_bmu(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
        assert!(m.find_bmu(&[f64::NAN, 0.0]).is_err());
    }

    fn cfg(epochs: usize, lr: f64) -> TrainConfig<f64> {
        TrainConfig {
            epochs,
            lr_start: lr,
            lr_end: lr,
            radius_start: 1.0,
            radius_end: 1.0,
            seed: 5,
            shuffle: true,
        }
    }

    #[test]
    fn zero_epochs_is_identity() {
        let mut m = SomMap::<f64>::init(2, 2, 2, 1, &unit_range(2)).unwrap();
        let before = m.clone();
        let data = vec![Stimulus::new("a", vec![0.2, 0.3], "A")];
        let log = m.train(&data, &cfg(0, 0.5)).unwrap();
        assert!(log.is_empty());
        assert_eq!(m, before);
    }

    #[test]
    fn unit_learning_rate_lands_on_stimulus() {
        let mut m = SomMap::<f64>::init(1, 1, 3, 9, &unit_range(3)).unwrap();
        let data = vec![Stimulus::new("a", vec![0.1, 0.7, 0.3], "A")];
        let log = m.train(&data, &cfg(1, 1.0)).unwrap();
        assert_eq!(m.units[0].weights, data[0].features);
        assert_eq!(log, vec![0.0]);
    }

    #[test]
    fn single_unit_tracks_last_presented() {
        let mut m = SomMap::<f64>::init(1, 1, 2, 9, &unit_range(2)).unwrap();
        let p = Presentation {
            learning_rate: 1.0,
            radius: 1.0,
        };
        m.present(&[0.3, 0.9], p).unwrap();
        m.present(&[0.7, 0.2], p).unwrap();
        assert_eq!(m.units[0].weights, vec![0.7, 0.2]);
    }

    #[test]
    fn zero_rate_presentation_changes_nothing() {
        let mut m = SomMap::<f64>::init(3, 3, 2, 9, &unit_range(2)).unwrap();
        let before = m.units.clone();
        m.present(
            &[0.3, 0.9],
            Presentation {
                learning_rate: 0.0,
                radius: 2.0,
            },
        )
        .unwrap();
        assert_eq!(m.units, before);
    }

    #[test]
    fn empty_data_is_rejected() {
        let mut m = SomMap::<f64>::init(1, 1, 2, 0, &unit_range(2)).unwrap();
        assert!(matches!(m.train(&[], &cfg(1, 0.5)), Err(Error::Input(_))));
        assert!(matches!(m.quantization_error(&[]), Err(Error::Input(_))));
    }

    #[test]
    fn bad_schedules_are_rejected() {
        let mut c = cfg(1, 0.5);
        c.lr_end = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg(1, 0.5);
        c.lr_start = 1.5;
        assert!(c.validate().is_err());
        let mut c = cfg(1, 0.5);
        c.radius_start = 0.5;
        c.radius_end = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn quantization_error_examples() {
        let mut m = SomMap::<f64>::init(1, 1, 2, 0, &unit_range(2)).unwrap();
        m.units[0].weights = vec![0.0, 0.0];
        let data = vec![Stimulus::new("a", vec![3.0, 4.0], "A")];
        assert_eq!(m.quantization_error(&data).unwrap(), 5.0);
        let on_unit = vec![Stimulus::new("b", vec![0.0, 0.0], "A")];
        assert_eq!(m.quantization_error(&on_unit).unwrap(), 0.0);
    }

    #[test]
    fn schedule_is_linear_and_covers_every_stimulus_each_epoch() {
        let c = TrainConfig {
            epochs: 3,
            lr_start: 0.9,
            lr_end: 0.1,
            radius_start: 4.0,
            radius_end: 1.0,
            seed: 1,
            shuffle: true,
        };
        let steps: Vec<_> = Schedule::new(&c, 4).collect();
        assert_eq!(steps.len(), 12);
        for e in 0..3 {
            let mut seen: Vec<usize> = steps[e * 4..e * 4 + 4].iter().map(|s| s.stimulus).collect();
            seen.sort();
            assert_eq!(seen, vec![0, 1, 2, 3]);
            assert!(steps[e * 4..e * 4 + 4].iter().all(|s| s.epoch == e));
        }
        assert_eq!(steps[0].params.learning_rate, 0.9);
        assert_eq!(steps[11].params.learning_rate, 0.1);
        assert_eq!(steps[11].params.radius, 1.0);
        assert!(steps
            .windows(2)
            .all(|w| w[1].params.learning_rate <= w[0].params.learning_rate));
        assert_eq!(
            Schedule::new(
                &TrainConfig {
                    epochs: 0,
                    ..c.clone()
                },
                4
            )
            .count(),
            0
        );
        assert_eq!(Schedule::new(&c, 0).count(), 0);
    }

    #[test]
    fn unshuffled_schedule_keeps_order() {
        let c = TrainConfig {
            shuffle: false,
            ..cfg(2, 0.5)
        };
        let order: Vec<usize> = Schedule::new(&c, 3).map(|s| s.stimulus).collect();
        assert_eq!(order, vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let mut m = SomMap::<f64>::init(2, 3, 2, 4, &unit_range(2)).unwrap();
        m.units[1].weights[0] = 0.1 + 0.2;
        let back = SomMap::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn from_json_rejects_bad_coordinates() {
        let mut m =
            SomMap::<f64>::init(2, 2, 1, 4, &[FeatureRange { min: 0.0, max: 1.0 }]).unwrap();
        m.units[3].col = 0;
        assert!(SomMap::<f64>::from_json(&m.to_json()).is_err());
    }
}
