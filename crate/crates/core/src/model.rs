//! Matrix-factorization recommender with implicit-feedback BCE loss.
//!
//! Each client holds a private user vector and a shared m x d item
//! matrix. Local training runs mini-batch gradient descent over the
//! user's positives plus freshly sampled negatives; only the item-side
//! delta ever leaves the client. Evaluation ranks the held-out item
//! against sampled negatives and reports HR@K / NDCG@K per group.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid train config: {0}")]
    BadConfig(String),
    #[error("cannot train a user with no positives")]
    NoPositives,
    #[error("group {0} has no members")]
    EmptyGroup(usize),
    #[error("user {0} has no group label")]
    MissingLabel(usize),
}

/// Shared item-embedding matrix, row-major m x d.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemMatrix<R> {
    m: usize,
    d: usize,
    data: Vec<R>,
}

impl<R: Real> ItemMatrix<R> {
    /// Entries i.i.d. normal(0, 0.01), deterministic in the seed. The
    /// draw happens in f64 so f32 and f64 federations share a stream.
    pub fn init(m: usize, d: usize, seed: u64) -> Self {
        let mut rng = crate::seeding::derive_rng(seed, crate::seeding::purpose::MODEL_INIT, 0, 0);
        let data = (0..m * d)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                R::from_f64_lossy(0.01 * z)
            })
            .collect();
        Self { m, d, data }
    }

    pub fn zeros(m: usize, d: usize) -> Self {
        Self {
            m,
            d,
            data: vec![R::zero(); m * d],
        }
    }

    pub fn item_count(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, item: usize) -> &[R] {
        &self.data[item * self.d..(item + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[R] {
        &self.data
    }

    /// Add a dense row-major m x d delta in place.
    pub fn add_dense(&mut self, delta: &[R]) {
        debug_assert_eq!(delta.len(), self.data.len());
        for (entry, &step) in self.data.iter_mut().zip(delta) {
            *entry += step;
        }
    }
}

/// One client's view: private user vector plus the shared item matrix.
#[derive(Debug, Clone)]
pub struct MfModel<R> {
    pub user_vec: Vec<R>,
    pub items: ItemMatrix<R>,
}

/// Entries i.i.d. normal(0, 0.01) for both sides, deterministic in the seed.
pub fn init_model<R: Real>(m: usize, d: usize, seed: u64) -> MfModel<R> {
    MfModel {
        user_vec: init_user_vec(d, seed, 0),
        items: ItemMatrix::init(m, d, seed),
    }
}

/// Per-user private vector init, keyed off the same master seed.
pub fn init_user_vec<R: Real>(d: usize, seed: u64, user: usize) -> Vec<R> {
    let mut rng =
        crate::seeding::derive_rng(seed, crate::seeding::purpose::MODEL_INIT, 1, user as u64);
    (0..d)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            R::from_f64_lossy(0.01 * z)
        })
        .collect()
}

/// Training hyper-parameters shared by the whole federation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig<R> {
    /// Embedding dimension.
    pub d: usize,
    /// Learning rate.
    pub lr: R,
    pub batch_size: usize,
    pub local_epochs: usize,
    /// Negatives sampled per positive, per epoch.
    pub train_negatives: usize,
    /// Negatives each held-out item is ranked against.
    pub eval_negatives: usize,
    pub top_k: usize,
}

impl<R: Real> TrainConfig<R> {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.d == 0 {
            return Err(ModelError::BadConfig("d must be at least 1".into()));
        }
        if !(self.lr > R::zero() && self.lr.is_finite()) {
            return Err(ModelError::BadConfig("lr must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(ModelError::BadConfig("batch_size must be at least 1".into()));
        }
        if self.local_epochs == 0 {
            return Err(ModelError::BadConfig("local_epochs must be at least 1".into()));
        }
        if self.train_negatives == 0 {
            return Err(ModelError::BadConfig(
                "train_negatives must be at least 1".into(),
            ));
        }
        if self.top_k == 0 || self.top_k > self.eval_negatives + 1 {
            return Err(ModelError::BadConfig(
                "top_k must be in [1, eval_negatives + 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Clamp range for predictions so the BCE log terms stay finite.
const PRED_EPS: f64 = 1e-7;

fn sigmoid<R: Real>(x: R) -> R {
    R::one() / (R::one() + (-x).exp())
}

/// Predicted interaction probability, sigmoid of the dot product,
/// restricted to [1e-7, 1 - 1e-7].
pub fn predict<R: Real>(user_vec: &[R], item_vec: &[R]) -> R {
    debug_assert_eq!(user_vec.len(), item_vec.len());
    let dot = dot(user_vec, item_vec);
    let eps = R::from_f64_lossy(PRED_EPS);
    sigmoid(dot).max(eps).min(R::one() - eps)
}

fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Binary cross entropy summed over (label, prediction) pairs.
pub fn bce_loss<R: Real>(pairs: &[(R, R)]) -> R {
    -pairs
        .iter()
        .map(|&(r, pred)| r * pred.ln() + (R::one() - r) * (R::one() - pred).ln())
        .sum::<R>()
}

/// Sparse item-side delta produced by one client's local training.
#[derive(Debug, Clone)]
pub struct ItemDelta<R> {
    d: usize,
    rows: HashMap<usize, Vec<R>>,
}

impl<R: Real> ItemDelta<R> {
    fn new(d: usize) -> Self {
        Self {
            d,
            rows: HashMap::new(),
        }
    }

    fn row_mut(&mut self, item: usize) -> &mut [R] {
        self.rows
            .entry(item)
            .or_insert_with(|| vec![R::zero(); self.d])
    }

    pub fn row(&self, item: usize) -> Option<&[R]> {
        self.rows.get(&item).map(Vec::as_slice)
    }

    /// Touched item ids, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut items: Vec<usize> = self.rows.keys().copied().collect();
        items.sort_unstable();
        items
    }

    /// Dense row-major m x d payload; untouched rows are exactly zero.
    pub fn to_dense(&self, m: usize) -> Vec<R> {
        let mut out = vec![R::zero(); m * self.d];
        for (&item, row) in &self.rows {
            out[item * self.d..(item + 1) * self.d].copy_from_slice(row);
        }
        out
    }
}

/// What local training hands back to the orchestrator.
#[derive(Debug)]
pub struct LocalTrainOutput<R> {
    pub delta: ItemDelta<R>,
    /// Mean per-example BCE over the final local epoch.
    pub last_epoch_loss: R,
}

/// Run `local_epochs` epochs of mini-batch gradient descent on the BCE
/// loss, negatives resampled per positive per epoch, every gradient
/// scaled by `scale_d` before the step. The user vector updates in place
/// and never leaves the client; the returned delta covers exactly the
/// item rows this client touched.
pub fn local_train<R: Real, G: Rng>(
    user_vec: &mut [R],
    base_items: &ItemMatrix<R>,
    positives: &[usize],
    cfg: &TrainConfig<R>,
    scale_d: R,
    rng: &mut G,
) -> Result<LocalTrainOutput<R>, ModelError> {
    if positives.is_empty() {
        return Err(ModelError::NoPositives);
    }
    let d = base_items.dim();
    let m = base_items.item_count();
    debug_assert_eq!(user_vec.len(), d);
    let positive_set: HashSet<usize> = positives.iter().copied().collect();
    let step_scale = cfg.lr * scale_d;

    let mut delta = ItemDelta::new(d);
    let mut last_epoch_loss = R::zero();
    let mut examples: Vec<(usize, bool)> =
        Vec::with_capacity(positives.len() * (1 + cfg.train_negatives));

    for epoch in 0..cfg.local_epochs {
        examples.clear();
        for &pos in positives {
            examples.push((pos, true));
            for _ in 0..cfg.train_negatives {
                let negative = loop {
                    let candidate = rng.gen_range(0..m);
                    if !positive_set.contains(&candidate) {
                        break candidate;
                    }
                };
                examples.push((negative, false));
            }
        }
        examples.shuffle(rng);

        let mut epoch_loss = R::zero();
        let mut user_grad = vec![R::zero(); d];
        for batch in examples.chunks(cfg.batch_size) {
            user_grad.iter_mut().for_each(|g| *g = R::zero());
            // Collect item-row gradients at the batch-start parameters,
            // then step both sides together.
            let mut item_grads: HashMap<usize, Vec<R>> = HashMap::new();
            for &(item, is_positive) in batch {
                let base_row = base_items.row(item);
                let local_row: Vec<R> = match delta.row(item) {
                    Some(dr) => base_row.iter().zip(dr).map(|(&b, &x)| b + x).collect(),
                    None => base_row.to_vec(),
                };
                let score = sigmoid(dot(user_vec, &local_row));
                let label = if is_positive { R::one() } else { R::zero() };
                let residual = score - label;
                for (g, &iv) in user_grad.iter_mut().zip(&local_row) {
                    *g += residual * iv;
                }
                let ig = item_grads
                    .entry(item)
                    .or_insert_with(|| vec![R::zero(); d]);
                for (g, &uv) in ig.iter_mut().zip(user_vec.iter()) {
                    *g += residual * uv;
                }
                let eps = R::from_f64_lossy(PRED_EPS);
                let clamped = score.max(eps).min(R::one() - eps);
                epoch_loss += bce_loss(&[(label, clamped)]);
            }
            for (uv, &g) in user_vec.iter_mut().zip(&user_grad) {
                *uv -= step_scale * g;
            }
            for (item, grad) in item_grads {
                let row = delta.row_mut(item);
                for (entry, g) in row.iter_mut().zip(grad) {
                    *entry -= step_scale * g;
                }
            }
        }
        if epoch + 1 == cfg.local_epochs {
            last_epoch_loss = epoch_loss / R::from_usize(examples.len()).unwrap();
        }
    }

    Ok(LocalTrainOutput {
        delta,
        last_epoch_loss,
    })
}

/// Rank the held-out item among itself plus the negatives; ties broken by
/// ascending item id. hr is 1 iff the 1-based rank is within K; ndcg is
/// 1/log2(rank + 1) inside the cut-off and 0 outside.
pub fn evaluate_user<R: Real>(
    user_vec: &[R],
    items: &ItemMatrix<R>,
    test_item: usize,
    negatives: &[usize],
    k: usize,
) -> (bool, f64) {
    debug_assert!(!negatives.contains(&test_item));
    let test_score = predict(user_vec, items.row(test_item));
    let mut rank = 1usize;
    for &candidate in negatives {
        let score = predict(user_vec, items.row(candidate));
        if score > test_score || (score == test_score && candidate < test_item) {
            rank += 1;
        }
    }
    if rank <= k {
        (true, 1.0 / ((rank + 1) as f64).log2())
    } else {
        (false, 0.0)
    }
}

/// Per-group and overall ranking metrics for one evaluation pass.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EvalResult {
    pub per_user_hr: Vec<bool>,
    pub per_user_ndcg: Vec<f64>,
    pub group_hr: Vec<f64>,
    pub group_ndcg: Vec<f64>,
    /// Unweighted mean of the group means, not of the users.
    pub overall_hr: f64,
    pub overall_ndcg: f64,
    pub gap_hr: f64,
    pub gap_ndcg: f64,
}

/// Aggregate per-user (hr, ndcg) results into group means, the overall
/// mean-of-group-means, and the absolute two-group gaps.
pub fn group_report(
    per_user: &[(bool, f64)],
    group_label: &[usize],
    group_count: usize,
) -> Result<EvalResult, ModelError> {
    assert_eq!(per_user.len(), group_label.len());
    let mut sums_hr = vec![0.0f64; group_count];
    let mut sums_ndcg = vec![0.0f64; group_count];
    let mut counts = vec![0usize; group_count];
    for (user, &(hr, ndcg)) in per_user.iter().enumerate() {
        let g = group_label[user];
        if g >= group_count {
            return Err(ModelError::MissingLabel(user));
        }
        sums_hr[g] += if hr { 1.0 } else { 0.0 };
        sums_ndcg[g] += ndcg;
        counts[g] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(ModelError::EmptyGroup(empty));
    }
    let group_hr: Vec<f64> = sums_hr
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let group_ndcg: Vec<f64> = sums_ndcg
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let overall_hr = group_hr.iter().sum::<f64>() / group_count as f64;
    let overall_ndcg = group_ndcg.iter().sum::<f64>() / group_count as f64;
    // Two groups is the primary case; with more, report the widest spread.
    let spread = |g: &[f64]| {
        if g.len() == 2 {
            (g[0] - g[1]).abs()
        } else {
            let max = g.iter().cloned().fold(f64::MIN, f64::max);
            let min = g.iter().cloned().fold(f64::MAX, f64::min);
            max - min
        }
    };
    Ok(EvalResult {
        per_user_hr: per_user.iter().map(|&(h, _)| h).collect(),
        per_user_ndcg: per_user.iter().map(|&(_, n)| n).collect(),
        gap_hr: spread(&group_hr),
        gap_ndcg: spread(&group_ndcg),
        group_hr,
        group_ndcg,
        overall_hr,
        overall_ndcg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn cfg(lr: f64) -> TrainConfig<f64> {
        TrainConfig {
            d: 4,
            lr,
            batch_size: 256,
            local_epochs: 1,
            train_negatives: 1,
            eval_negatives: 99,
            top_k: 10,
        }
    }

    #[test]
    fn init_is_deterministic_and_finite() {
        let a = init_model::<f64>(3, 2, 7);
        let b = init_model::<f64>(3, 2, 7);
        assert_eq!(a.items.as_slice(), b.items.as_slice());
        assert_eq!(a.user_vec, b.user_vec);
        assert!(a.items.as_slice().iter().all(|e| e.is_finite() && e.abs() < 1.0));
        let c = init_model::<f64>(3, 2, 8);
        assert_ne!(a.items.as_slice(), c.items.as_slice());
    }

    #[test]
    fn init_mean_is_near_zero() {
        let model = init_model::<f64>(31_250, 32, 123);
        let mean: f64 =
            model.items.as_slice().iter().sum::<f64>() / model.items.as_slice().len() as f64;
        assert!(mean.abs() < 3e-4, "mean {mean}");
    }

    #[test]
    fn predict_known_values() {
        assert_eq!(predict(&[0.0, 0.0], &[1.0, -1.0]), 0.5);
        let r = predict(&[1.0, 0.0], &[3.0f64.ln(), 5.0]);
        assert_abs_diff_eq!(r, 0.75, epsilon = 1e-12);
        // Saturation clamps instead of reaching 0 or 1.
        let lo = predict(&[1000.0], &[-1000.0]);
        assert_eq!(lo, PRED_EPS);
        let hi = predict(&[1000.0], &[1000.0]);
        assert_eq!(hi, 1.0 - PRED_EPS);
    }

    #[test]
    fn bce_known_values() {
        assert_abs_diff_eq!(bce_loss(&[(1.0, 0.5)]), 2.0f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(bce_loss(&[(0.0, 0.5)]), 2.0f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            bce_loss(&[(1.0, 0.9), (0.0, 0.2)]),
            0.328_504_066_972_036,
            epsilon = 1e-12
        );
    }

    #[test]
    fn zero_learning_rate_leaves_items_unchanged() {
        // lr must be positive through the config, so call the trainer with
        // a zero step via scale_d = 0 to get the same null-update check.
        let items = ItemMatrix::<f64>::init(6, 4, 1);
        let mut user = init_user_vec(4, 1, 0);
        let out = local_train(
            &mut user,
            &items,
            &[0, 2],
            &cfg(0.1),
            0.0,
            &mut ChaCha20Rng::seed_from_u64(3),
        )
        .unwrap();
        assert!(out.delta.to_dense(6).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn empty_positives_is_an_error() {
        let items = ItemMatrix::<f64>::init(4, 4, 1);
        let mut user = init_user_vec(4, 1, 0);
        let err = local_train(
            &mut user,
            &items,
            &[],
            &cfg(0.1),
            1.0,
            &mut ChaCha20Rng::seed_from_u64(3),
        )
        .unwrap_err();
        assert_eq!(err, ModelError::NoPositives);
    }

    #[test]
    fn doubling_scale_doubles_a_single_step_exactly() {
        let items = ItemMatrix::<f64>::init(8, 4, 9);
        let train = |scale: f64| {
            let mut user = init_user_vec(4, 9, 0);
            let out = local_train(
                &mut user,
                &items,
                &[1, 5],
                &cfg(0.05),
                scale,
                &mut ChaCha20Rng::seed_from_u64(17),
            )
            .unwrap();
            out.delta.to_dense(8)
        };
        let once = train(1.0);
        let twice = train(2.0);
        for (a, b) in once.iter().zip(&twice) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn single_step_positive_row_matches_closed_form() {
        // One positive, one negative, one batch: the positive row moves by
        // lr * (1 - sigmoid(u . i)) * u exactly.
        let items = ItemMatrix::<f64>::init(3, 4, 21);
        let user0 = init_user_vec::<f64>(4, 21, 0);
        let mut user = user0.clone();
        let config = cfg(0.5);
        let out = local_train(
            &mut user,
            &items,
            &[1],
            &config,
            1.0,
            &mut ChaCha20Rng::seed_from_u64(4),
        )
        .unwrap();
        let s = sigmoid(dot(&user0, items.row(1)));
        let row = out.delta.row(1).unwrap();
        for (got, &u) in row.iter().zip(&user0) {
            assert_abs_diff_eq!(*got, 0.5 * (1.0 - s) * u, epsilon = 1e-15);
        }
    }

    #[test]
    fn delta_support_is_sampled_items_only() {
        let items = ItemMatrix::<f64>::init(50, 4, 2);
        let mut user = init_user_vec(4, 2, 0);
        let positives = vec![3, 7];
        let out = local_train(
            &mut user,
            &items,
            &positives,
            &cfg(0.1),
            1.0,
            &mut ChaCha20Rng::seed_from_u64(5),
        )
        .unwrap();
        let support = out.delta.support();
        for &p in &positives {
            assert!(support.contains(&p));
        }
        // Untouched rows are exactly zero in the dense payload.
        let dense = out.delta.to_dense(50);
        for item in 0..50 {
            if !support.contains(&item) {
                assert!(dense[item * 4..(item + 1) * 4].iter().all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        // Independent oracle: central finite differences of the summed BCE
        // loss, random small instances.
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        for _ in 0..5 {
            let d = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=3);
            let user: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let items: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect())
                .collect();
            let examples: Vec<(usize, f64)> = (0..m)
                .flat_map(|j| [(j, 1.0), (j, 0.0)])
                .collect();

            let loss = |user: &[f64], items: &[Vec<f64>]| -> f64 {
                examples
                    .iter()
                    .map(|&(j, r)| {
                        let s = sigmoid(dot(user, &items[j]));
                        bce_loss(&[(r, s.clamp(PRED_EPS, 1.0 - PRED_EPS))])
                    })
                    .sum()
            };

            // Analytic: dL/du = sum (s - r) i_j ; dL/di_j = sum (s - r) u.
            let mut grad_user = vec![0.0; d];
            let mut grad_items = vec![vec![0.0; d]; m];
            for &(j, r) in &examples {
                let s = sigmoid(dot(&user, &items[j]));
                for k in 0..d {
                    grad_user[k] += (s - r) * items[j][k];
                    grad_items[j][k] += (s - r) * user[k];
                }
            }

            let h = 1e-6;
            for k in 0..d {
                let mut up = user.clone();
                let mut down = user.clone();
                up[k] += h;
                down[k] -= h;
                let fd = (loss(&up, &items) - loss(&down, &items)) / (2.0 * h);
                let rel = (grad_user[k] - fd).abs() / fd.abs().max(1e-8);
                assert!(rel < 1e-5, "user grad {k}: {} vs {fd}", grad_user[k]);
            }
            for j in 0..m {
                for k in 0..d {
                    let mut up = items.clone();
                    let mut down = items.clone();
                    up[j][k] += h;
                    down[j][k] -= h;
                    let fd = (loss(&user, &up) - loss(&user, &down)) / (2.0 * h);
                    let rel = (grad_items[j][k] - fd).abs() / fd.abs().max(1e-8);
                    assert!(rel < 1e-5, "item grad {j},{k}");
                }
            }
        }
    }

    #[test]
    fn evaluate_ranks_and_scores() {
        // Two-dimensional toy: user (1, 0) scores items by first coordinate.
        let mut items = ItemMatrix::<f64>::zeros(5, 2);
        let scores = [0.9, 0.5, 0.3, 0.2, 0.1];
        for (j, &s) in scores.iter().enumerate() {
            let dense: Vec<f64> = (0..10)
                .map(|idx| if idx == 2 * j { s } else { 0.0 })
                .collect();
            items.add_dense(&dense);
        }
        let user = vec![1.0, 0.0];
        // Test item 0 outranks everyone.
        let (hr, ndcg) = evaluate_user(&user, &items, 0, &[1, 2, 3, 4], 10);
        assert!(hr);
        assert_eq!(ndcg, 1.0);
        // Test item 2 ranks third: ndcg = 1/log2(4) = 0.5.
        let (hr, ndcg) = evaluate_user(&user, &items, 2, &[0, 1, 3, 4], 10);
        assert!(hr);
        assert_abs_diff_eq!(ndcg, 0.5, epsilon = 1e-12);
        // Rank below the cut-off scores zero.
        let (hr, ndcg) = evaluate_user(&user, &items, 4, &[0, 1, 2, 3], 2);
        assert!(!hr);
        assert_eq!(ndcg, 0.0);
    }

    #[test]
    fn evaluate_is_permutation_invariant_and_tie_stable() {
        let items = ItemMatrix::<f64>::init(30, 4, 31);
        let user = init_user_vec::<f64>(4, 31, 3);
        let negatives: Vec<usize> = (1..20).collect();
        let (hr0, ndcg0) = evaluate_user(&user, &items, 0, &negatives, 10);
        let mut shuffled = negatives.clone();
        shuffled.reverse();
        shuffled.swap(0, 7);
        assert_eq!(evaluate_user(&user, &items, 0, &shuffled, 10), (hr0, ndcg0));
        // Exact score ties resolve by ascending id: a zero matrix ties all.
        let flat = ItemMatrix::<f64>::zeros(4, 2);
        let user = vec![1.0, 1.0];
        let (_, ndcg_first) = evaluate_user(&user, &flat, 0, &[1, 2, 3], 10);
        assert_eq!(ndcg_first, 1.0);
        let (_, ndcg_last) = evaluate_user(&user, &flat, 3, &[0, 1, 2], 10);
        assert_abs_diff_eq!(ndcg_last, 1.0 / 5.0f64.log2(), epsilon = 1e-12);
    }

    #[test]
    fn ndcg_never_exceeds_hr() {
        let items = ItemMatrix::<f64>::init(40, 8, 77);
        for user_seed in 0..20 {
            let user = init_user_vec::<f64>(8, 77, user_seed);
            let negatives: Vec<usize> = (10..30).collect();
            for k in [1, 5, 10] {
                let (hr, ndcg) = evaluate_user(&user, &items, user_seed % 10, &negatives, k);
                let hr_value = if hr { 1.0 } else { 0.0 };
                assert!(ndcg <= hr_value + 1e-12);
                assert!((0.0..=1.0).contains(&ndcg));
                assert_eq!(ndcg > 0.0, hr);
            }
        }
    }

    #[test]
    fn group_report_hand_values() {
        // Group 0 mean ndcg 0.70, group 1 mean 0.66.
        let per_user = vec![(true, 0.7), (true, 0.7), (true, 0.66)];
        let labels = vec![0, 0, 1];
        let report = group_report(&per_user, &labels, 2).unwrap();
        assert_abs_diff_eq!(report.overall_ndcg, 0.68, epsilon = 1e-12);
        assert_abs_diff_eq!(report.gap_ndcg, 0.04, epsilon = 1e-12);
        assert_eq!(report.gap_hr, 0.0);
        // Overall equals the mean of group means under both reductions.
        let by_hand = (report.group_ndcg[0] + report.group_ndcg[1]) / 2.0;
        assert_eq!(report.overall_ndcg, by_hand);
    }

    #[test]
    fn group_report_constant_metric_has_zero_gap() {
        let per_user = vec![(true, 0.4); 6];
        let labels = vec![0, 1, 0, 1, 0, 1];
        let report = group_report(&per_user, &labels, 2).unwrap();
        assert_abs_diff_eq!(report.overall_ndcg, 0.4, epsilon = 1e-15);
        assert_eq!(report.gap_ndcg, 0.0);
    }

    #[test]
    fn group_report_rejects_empty_group() {
        let per_user = vec![(true, 0.5)];
        let labels = vec![0];
        assert_eq!(
            group_report(&per_user, &labels, 2).unwrap_err(),
            ModelError::EmptyGroup(1)
        );
    }

    #[test]
    fn config_validation_messages() {
        let mut c = cfg(0.1);
        c.lr = -1.0;
        let err = c.validate().unwrap_err();
        assert!(matches!(err, ModelError::BadConfig(ref m) if m.contains("lr")));
        let mut c = cfg(0.1);
        c.top_k = 101;
        assert!(c.validate().is_err());
        assert!(cfg(0.001).validate().is_ok());
    }
}
