//! Deterministic synthetic ratings in the MovieLens CSV layout.
//!
//! The generator aims at the gross statistical shape of a small public
//! movie-ratings dump rather than at any dataset in particular: item
//! popularity follows a shoulder-flattened power law (several comparably
//! popular head items instead of one runaway winner, and a long tail where
//! much of the catalog carries only a rating or two), per-user activity is
//! heavily skewed, and ratings combine per-user generosity, item quality,
//! and a planted low-rank taste interaction before half-star rounding into
//! [0.5, 5.0]. Item quality is heavy-tailed and tracks popularity: a few
//! standout head items sit well clear of the field with real gaps between
//! them, then a broad mid-and-tail crowd, the way a movie catalog has a
//! handful of consensus classics. The taste interaction is damped on weak
//! items — raters broadly agree that weak items are weak and differ more
//! about the good ones — but stays smaller than the head quality gaps.
//! Item popularity is decorrelated from the raw id order so nothing
//! downstream can cheat by reading indices.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Dimensionality of the planted user/item taste interaction.
const TASTE_DIM: usize = 5;
/// Spread of the taste interaction on items everyone likes; kept below the
/// quality gaps between head items so personal taste perturbs the consensus
/// ordering instead of erasing it.
const TASTE_SCALE: f64 = 0.35;
/// Popularity shoulder: flattens the head of the power law so the most
/// popular items draw comparable attention instead of one item being rated
/// by everybody.
const POP_SHOULDER: f64 = 25.0;
/// Popularity tail exponent.
const POP_EXPONENT: f64 = 1.05;
/// Per-user activity skew exponent.
const ACTIVITY_EXPONENT: f64 = 0.6;
/// Residual rating noise after the user, item, and taste terms; sized so the
/// overall rating spread lands near the ~1.0 standard deviation typical of
/// public movie-ratings dumps.
const NOISE_SD: f64 = 0.70;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub users: usize,
    pub items: usize,
    pub target_ratings: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { users: 610, items: 9742, target_ratings: 100_000, seed: 42 }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.users == 0 || self.items == 0 {
            return Err(Error::InvalidConfig(
                "synthetic corpus needs at least one user and one item".to_string(),
            ));
        }
        if self.target_ratings < self.items {
            return Err(Error::InvalidConfig(format!(
                "target_ratings ({}) must cover every item at least once ({})",
                self.target_ratings, self.items
            )));
        }
        if self.target_ratings > self.users * self.items {
            return Err(Error::InvalidConfig(format!(
                "target_ratings ({}) exceeds the {}x{} rating-matrix capacity",
                self.target_ratings, self.users, self.items
            )));
        }
        Ok(())
    }
}

fn round_to_half_star(x: f64) -> f64 {
    ((x * 2.0).round() / 2.0).clamp(0.5, 5.0)
}

/// Generates `(user_id, movie_id, rating)` rows, 1-based ids, sorted by
/// (user, movie), no duplicate pairs. Identical configs give identical rows.
pub fn generate(config: &SynthConfig) -> Result<Vec<(u64, u64, f64)>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let users = config.users;
    let items = config.items;

    // popularity and activity orders, decorrelated from raw indices
    let mut by_pop: Vec<usize> = (0..items).collect();
    by_pop.shuffle(&mut rng);
    let mut pop_pos = vec![0usize; items];
    for (pos, &item) in by_pop.iter().enumerate() {
        pop_pos[item] = pos;
    }
    let mut user_order: Vec<usize> = (0..users).collect();
    user_order.shuffle(&mut rng);
    let mut activity_pos = vec![0usize; users];
    for (pos, &user) in user_order.iter().enumerate() {
        activity_pos[user] = pos;
    }

    // latent generosity per user and a heavy-tailed quality curve over the
    // popularity order: standout head items with real gaps, then a crowd.
    // Voluntary rating platforms skew positive — people mostly rate what
    // they chose to consume — so the generosity level sits around 4.
    let generosity = Normal::<f64>::new(4.05, 0.45).expect("valid normal");
    let quality_noise = Normal::<f64>::new(0.0, 0.25).expect("valid normal");
    let unit = Normal::<f64>::new(0.0, 1.0).expect("valid normal");
    let user_mean: Vec<f64> =
        (0..users).map(|_| generosity.sample(&mut rng).clamp(2.5, 4.8)).collect();
    let item_quality: Vec<f64> = (0..items)
        .map(|item| {
            let standout = 0.9 * ((pop_pos[item] + 1) as f64).powf(-0.28) - 0.35;
            (standout + quality_noise.sample(&mut rng)).clamp(-0.9, 1.0)
        })
        .collect();

    // planted taste space: user preference and item style vectors whose dot
    // product is roughly unit-variance
    let user_taste: Vec<[f64; TASTE_DIM]> = (0..users)
        .map(|_| std::array::from_fn(|_| unit.sample(&mut rng)))
        .collect();
    let style_scale = (TASTE_DIM as f64).sqrt().recip();
    let item_style: Vec<[f64; TASTE_DIM]> = (0..items)
        .map(|_| std::array::from_fn(|_| unit.sample(&mut rng) * style_scale))
        .collect();

    let weights: Vec<f64> = (0..users)
        .map(|u| ((activity_pos[u] + 1) as f64).powf(-ACTIVITY_EXPONENT))
        .collect();
    let weight_sum: f64 = weights.iter().sum();
    let mut user_cum = Vec::with_capacity(users);
    let mut acc = 0.0f64;
    for &w in &weights {
        acc += w;
        user_cum.push(acc);
    }

    // pass 1: every item gets at least one rating, assigned with
    // activity-weighted user draws — it is the heavy raters who work through
    // the obscure end of a catalog, while casual raters stick to the hits
    let mut seen: Vec<std::collections::HashSet<usize>> =
        vec![std::collections::HashSet::new(); users];
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(config.target_ratings);
    for item in 0..items {
        let x = rng.random::<f64>() * weight_sum;
        let user = user_cum.partition_point(|&c| c < x).min(users - 1);
        seen[user].insert(item);
        pairs.push((user, item));
    }

    // pass 2: spread the remaining mass with skewed user activity and
    // shoulder-flattened power-law item popularity, sampled by inverse CDF
    // over cumulative position weights
    let mut pop_cum = Vec::with_capacity(items);
    let mut pop_total = 0.0f64;
    for pos in 0..items {
        pop_total += (pos as f64 + 1.0 + POP_SHOULDER).powf(-POP_EXPONENT);
        pop_cum.push(pop_total);
    }
    let remaining = config.target_ratings - items;
    for user in 0..users {
        let mut quota =
            ((remaining as f64) * weights[user] / weight_sum).round() as usize;
        quota = quota.min(items - seen[user].len());
        let mut drawn = 0usize;
        let mut attempts = 0usize;
        let attempt_cap = 30 * quota + 100;
        while drawn < quota && attempts < attempt_cap {
            attempts += 1;
            let x = rng.random::<f64>() * pop_total;
            let pos = pop_cum.partition_point(|&c| c < x).min(items - 1);
            let item = by_pop[pos];
            if seen[user].insert(item) {
                pairs.push((user, item));
                drawn += 1;
            }
        }
    }

    // deterministic rating draw order: sort pairs first
    pairs.sort_unstable();
    let noise = Normal::<f64>::new(0.0, NOISE_SD).expect("valid normal");
    let rows = pairs
        .into_iter()
        .map(|(user, item)| {
            let quality = item_quality[item];
            // consensus on weak items, divergent favorites among strong ones
            let lift = (0.6 + 0.5 * quality).clamp(0.35, 1.0);
            let affinity: f64 = user_taste[user]
                .iter()
                .zip(item_style[item].iter())
                .map(|(a, b)| a * b)
                .sum();
            let r = round_to_half_star(
                user_mean[user]
                    + quality
                    + TASTE_SCALE * lift * affinity
                    + noise.sample(&mut rng),
            );
            ((user + 1) as u64, (item + 1) as u64, r)
        })
        .collect();
    Ok(rows)
}

/// Writes a generated corpus as `userId,movieId,rating,timestamp` CSV.
pub fn write_movielens_csv(config: &SynthConfig, path: &Path) -> Result<()> {
    let rows = generate(config)?;
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    let mut body = String::from("userId,movieId,rating,timestamp\n");
    for (i, (user, movie, rating)) in rows.iter().enumerate() {
        let stamp = 964_982_703u64 + (i as u64) * 7;
        body.push_str(&format!("{user},{movie},{rating:.1},{stamp}\n"));
    }
    out.write_all(body.as_bytes())
        .and_then(|()| out.flush())
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
