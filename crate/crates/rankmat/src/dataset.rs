//! Sparse rating datasets loaded from MovieLens-format CSV files.
//!
//! The expected input is a `ratings.csv` with one header line followed by
//! `userId,movieId,rating,timestamp` rows. External ids are reindexed to
//! dense 0-based indices in first-appearance order; the timestamp column is
//! ignored. Rating bounds are taken from the observed data rather than
//! hard-coded, so the loader works on any rating scale.

use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seeding::derive_seed;

/// One observed rating, with dense 0-based user and item indices.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Triplet {
    pub user: usize,
    pub item: usize,
    pub rating: f64,
}

/// Supported on-disk rating formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingsFormat {
    /// `userId,movieId,rating,timestamp` with a single header row.
    MovielensCsv,
}

/// An in-memory sparse rating matrix.
///
/// Invariants: every triplet index is in range, no (user, item) pair appears
/// twice, all ratings lie in `[rating_min, rating_max]`, and the id maps are
/// bijections onto the dense index ranges.
#[derive(Debug, Clone)]
pub struct RatingDataset {
    user_count: usize,
    item_count: usize,
    triplets: Vec<Triplet>,
    rating_min: f64,
    rating_max: f64,
    user_id_map: HashMap<u64, usize>,
    item_id_map: HashMap<u64, usize>,
}

/// A disjoint train/test partition of a dataset.
///
/// Both halves share the source's id maps, entity counts, and rating bounds,
/// so models and clamp ranges derived from either half line up with the
/// source matrix.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: RatingDataset,
    pub test: RatingDataset,
    pub seed: u64,
    pub ratio: f64,
}

impl RatingDataset {
    /// Builds a dataset from pre-indexed triplets, using identity id maps.
    ///
    /// Validates the type invariants: index ranges, duplicate pairs, finite
    /// ratings, non-emptiness. Rating bounds are taken from the data.
    pub fn from_triplets(
        user_count: usize,
        item_count: usize,
        triplets: Vec<Triplet>,
    ) -> Result<Self> {
        if triplets.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut seen = std::collections::HashSet::with_capacity(triplets.len());
        let mut rating_min = f64::INFINITY;
        let mut rating_max = f64::NEG_INFINITY;
        for t in &triplets {
            if t.user >= user_count || t.item >= item_count {
                return Err(Error::DimensionMismatch(format!(
                    "triplet ({}, {}) outside {}x{} matrix",
                    t.user, t.item, user_count, item_count
                )));
            }
            if !t.rating.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "non-finite rating for user {} item {}",
                    t.user, t.item
                )));
            }
            if !seen.insert((t.user, t.item)) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate rating for user {} item {}",
                    t.user, t.item
                )));
            }
            rating_min = rating_min.min(t.rating);
            rating_max = rating_max.max(t.rating);
        }
        let user_id_map = (0..user_count).map(|i| (i as u64, i)).collect();
        let item_id_map = (0..item_count).map(|i| (i as u64, i)).collect();
        Ok(Self {
            user_count,
            item_count,
            triplets,
            rating_min,
            rating_max,
            user_id_map,
            item_id_map,
        })
    }

    pub fn user_count(&self) -> usize {
        self.user_count
    }

    pub fn item_count(&self) -> usize {
        self.item_count
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    /// Smallest rating observed in the source data.
    pub fn rating_min(&self) -> f64 {
        self.rating_min
    }

    /// Largest rating observed in the source data.
    pub fn rating_max(&self) -> f64 {
        self.rating_max
    }

    pub fn user_id_map(&self) -> &HashMap<u64, usize> {
        &self.user_id_map
    }

    pub fn item_id_map(&self) -> &HashMap<u64, usize> {
        &self.item_id_map
    }

    /// Splits into train/test per user: each user's ratings are shuffled with
    /// a generator derived from `(seed, user_index)` and the first
    /// `ceil(ratio * count)` go to train. A user with a single rating lands
    /// entirely in train, so every user seen at all is trainable.
    ///
    /// Identical `(dataset, ratio, seed)` inputs produce identical splits.
    pub fn split(&self, ratio: f64, seed: u64) -> Result<SplitPair> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidRatio(ratio));
        }
        if self.triplets.is_empty() {
            return Err(Error::EmptyDataset);
        }

        let mut per_user: Vec<Vec<usize>> = vec![Vec::new(); self.user_count];
        for (idx, t) in self.triplets.iter().enumerate() {
            per_user[t.user].push(idx);
        }

        let mut train = Vec::with_capacity(self.triplets.len());
        let mut test = Vec::new();
        for (user, indices) in per_user.iter_mut().enumerate() {
            if indices.is_empty() {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, user as u64));
            indices.shuffle(&mut rng);
            let n_train = ((ratio * indices.len() as f64).ceil() as usize).min(indices.len());
            for (pos, &idx) in indices.iter().enumerate() {
                if pos < n_train {
                    train.push(self.triplets[idx]);
                } else {
                    test.push(self.triplets[idx]);
                }
            }
        }

        Ok(SplitPair {
            train: self.with_triplets(train),
            test: self.with_triplets(test),
            seed,
            ratio,
        })
    }

    /// Clones the dataset envelope (counts, bounds, id maps) around a new
    /// triplet list. Used by `split` so both halves keep the source bounds.
    fn with_triplets(&self, triplets: Vec<Triplet>) -> RatingDataset {
        RatingDataset {
            user_count: self.user_count,
            item_count: self.item_count,
            triplets,
            rating_min: self.rating_min,
            rating_max: self.rating_max,
            user_id_map: self.user_id_map.clone(),
            item_id_map: self.item_id_map.clone(),
        }
    }
}

/// Loads a rating CSV into a dense-indexed dataset.
///
/// Rows must carry exactly four comma-separated fields; the rating must be a
/// finite number and each (userId, movieId) pair may appear once. Malformed
/// rows are reported with their 1-based line number.
pub fn load_ratings(path: &Path, format: RatingsFormat) -> Result<RatingDataset> {
    match format {
        RatingsFormat::MovielensCsv => load_movielens_csv(path),
    }
}

fn load_movielens_csv(path: &Path) -> Result<RatingDataset> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let malformed = |line: u64, message: String| Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut user_id_map: HashMap<u64, usize> = HashMap::new();
    let mut item_id_map: HashMap<u64, usize> = HashMap::new();
    let mut seen_pairs = std::collections::HashSet::new();
    let mut triplets = Vec::new();
    let mut rating_min = f64::INFINITY;
    let mut rating_max = f64::NEG_INFINITY;

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, csv::Position::line);
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, csv::Position::line);
        if record.len() != 4 {
            return Err(malformed(
                line,
                format!("expected 4 columns, found {}", record.len()),
            ));
        }
        let user_id: u64 = record[0]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("invalid userId {:?}", &record[0])))?;
        let item_id: u64 = record[1]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("invalid movieId {:?}", &record[1])))?;
        let rating: f64 = record[2]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("invalid rating {:?}", &record[2])))?;
        if !rating.is_finite() {
            return Err(malformed(line, format!("non-finite rating {rating}")));
        }
        // Column 3 (timestamp) is intentionally ignored.

        let next_user = user_id_map.len();
        let user = *user_id_map.entry(user_id).or_insert(next_user);
        let next_item = item_id_map.len();
        let item = *item_id_map.entry(item_id).or_insert(next_item);
        if !seen_pairs.insert((user, item)) {
            return Err(malformed(
                line,
                format!("duplicate rating for userId {user_id} movieId {item_id}"),
            ));
        }

        rating_min = rating_min.min(rating);
        rating_max = rating_max.max(rating);
        triplets.push(Triplet { user, item, rating });
    }

    if triplets.is_empty() {
        return Err(Error::EmptyDataset);
    }

    Ok(RatingDataset {
        user_count: user_id_map.len(),
        item_count: item_id_map.len(),
        triplets,
        rating_min,
        rating_max,
        user_id_map,
        item_id_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    fn load(content: &str) -> Result<RatingDataset> {
        let f = write_temp(content);
        load_ratings(f.path(), RatingsFormat::MovielensCsv)
    }

    #[test]
    fn single_row_file() {
        let d = load("userId,movieId,rating,timestamp\n1,10,4.0,999\n").unwrap();
        assert_eq!(d.user_count(), 1);
        assert_eq!(d.item_count(), 1);
        assert_eq!(d.len(), 1);
        assert_eq!(d.triplets()[0].rating, 4.0);
        assert_eq!(d.rating_min(), 4.0);
        assert_eq!(d.rating_max(), 4.0);
    }

    #[test]
    fn reindexes_in_first_appearance_order() {
        let d = load(
            "userId,movieId,rating,timestamp\n\
             5,30,4.0,0\n\
             3,30,3.0,0\n\
             5,10,2.5,0\n",
        )
        .unwrap();
        assert_eq!(d.user_id_map()[&5], 0);
        assert_eq!(d.user_id_map()[&3], 1);
        assert_eq!(d.item_id_map()[&30], 0);
        assert_eq!(d.item_id_map()[&10], 1);
        assert_eq!(d.rating_min(), 2.5);
        assert_eq!(d.rating_max(), 4.0);
    }

    #[test]
    fn wrong_column_count_names_line() {
        let err = load("userId,movieId,rating,timestamp\n1,10,4.0,0\n2,11,3.5\n").unwrap_err();
        match err {
            Error::MalformedRow { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_numeric_rating_names_line() {
        let err = load("userId,movieId,rating,timestamp\n1,10,bad,0\n").unwrap_err();
        match err {
            Error::MalformedRow { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("rating"), "message: {message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_pair_rejected() {
        let err = load("userId,movieId,rating,timestamp\n1,10,4.0,0\n1,10,2.0,0\n").unwrap_err();
        match err {
            Error::MalformedRow { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("duplicate"), "message: {message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn header_only_is_empty() {
        assert!(matches!(
            load("userId,movieId,rating,timestamp\n"),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn missing_file_errors() {
        let err =
            load_ratings(Path::new("/nonexistent/ratings.csv"), RatingsFormat::MovielensCsv)
                .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn crlf_and_trailing_newline_insensitive() {
        let lf = load("userId,movieId,rating,timestamp\n1,10,4.0,0\n2,11,3.5,0\n").unwrap();
        let crlf =
            load("userId,movieId,rating,timestamp\r\n1,10,4.0,0\r\n2,11,3.5,0\r\n").unwrap();
        let no_trailing = load("userId,movieId,rating,timestamp\n1,10,4.0,0\n2,11,3.5,0").unwrap();
        assert_eq!(lf.triplets(), crlf.triplets());
        assert_eq!(lf.triplets(), no_trailing.triplets());
        assert_eq!(lf.user_count(), crlf.user_count());
    }

    #[test]
    fn reindexing_preserves_rating_multiset() {
        let content = "userId,movieId,rating,timestamp\n\
                       9,100,5.0,0\n\
                       2,100,1.5,0\n\
                       9,7,3.0,0\n\
                       4,7,3.0,0\n";
        let d = load(content).unwrap();
        let mut got: Vec<f64> = d.triplets().iter().map(|t| t.rating).collect();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, vec![1.5, 3.0, 3.0, 5.0]);
    }

    fn toy_dataset(ratings_per_user: &[usize]) -> RatingDataset {
        let mut triplets = Vec::new();
        let mut item = 0;
        for (user, &count) in ratings_per_user.iter().enumerate() {
            for _ in 0..count {
                triplets.push(Triplet {
                    user,
                    item,
                    rating: 1.0 + (item % 9) as f64 * 0.5,
                });
                item += 1;
            }
        }
        RatingDataset::from_triplets(ratings_per_user.len(), item, triplets).unwrap()
    }

    #[test]
    fn split_respects_ceil_rule() {
        let d = toy_dataset(&[10]);
        let pair = d.split(0.8, 42).unwrap();
        assert_eq!(pair.train.len(), 8);
        assert_eq!(pair.test.len(), 2);
    }

    #[test]
    fn single_rating_user_goes_to_train() {
        let d = toy_dataset(&[1]);
        let pair = d.split(0.8, 42).unwrap();
        assert_eq!(pair.train.len(), 1);
        assert_eq!(pair.test.len(), 0);
    }

    #[test]
    fn split_is_deterministic() {
        let d = toy_dataset(&[10, 3, 7, 1]);
        let a = d.split(0.8, 7).unwrap();
        let b = d.split(0.8, 7).unwrap();
        assert_eq!(a.train.triplets(), b.train.triplets());
        assert_eq!(a.test.triplets(), b.test.triplets());
    }

    #[test]
    fn split_rejects_bad_ratio() {
        let d = toy_dataset(&[4]);
        for ratio in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(matches!(d.split(ratio, 1), Err(Error::InvalidRatio(_))));
        }
    }

    #[test]
    fn split_shares_bounds_and_maps() {
        let d = toy_dataset(&[6, 6]);
        let pair = d.split(0.5, 3).unwrap();
        assert_eq!(pair.train.user_count(), d.user_count());
        assert_eq!(pair.test.item_count(), d.item_count());
        assert_eq!(pair.train.rating_min(), d.rating_min());
        assert_eq!(pair.train.rating_max(), d.rating_max());
        assert_eq!(pair.test.rating_max(), d.rating_max());
        assert_eq!(pair.train.user_id_map(), d.user_id_map());
    }

    #[test]
    fn from_triplets_rejects_duplicates_and_bad_indices() {
        let dup = vec![
            Triplet { user: 0, item: 0, rating: 1.0 },
            Triplet { user: 0, item: 0, rating: 2.0 },
        ];
        assert!(RatingDataset::from_triplets(1, 1, dup).is_err());
        let oob = vec![Triplet { user: 2, item: 0, rating: 1.0 }];
        assert!(RatingDataset::from_triplets(2, 1, oob).is_err());
        assert!(matches!(
            RatingDataset::from_triplets(1, 1, vec![]),
            Err(Error::EmptyDataset)
        ));
    }
}
