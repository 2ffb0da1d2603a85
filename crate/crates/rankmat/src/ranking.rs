//! Popularity ranks for users and items.
//!
//! Ranks are 1-based and unique: entities are sorted by descending popularity
//! mass (summed rating or rating count), ties broken by ascending dense
//! index, and entities absent from the training data end up with the worst
//! ranks. Ranks feed the rank-normalized regression target and its inverse
//! prediction transform.

use std::io::Write;
use std::str::FromStr;

use crate::dataset::RatingDataset;
use crate::error::{Error, Result};

/// What counts as popularity mass when ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankBasis {
    /// Sum of rating values, treating ratings as implicit-feedback counts.
    RatingSum,
    /// Number of ratings, ignoring their values.
    RatingCount,
}

impl Default for RankBasis {
    fn default() -> Self {
        RankBasis::RatingSum
    }
}

impl FromStr for RankBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sum" | "rating_sum" => Ok(RankBasis::RatingSum),
            "count" | "rating_count" => Ok(RankBasis::RatingCount),
            other => Err(Error::InvalidConfig(format!(
                "unknown rank basis {other:?}, expected \"sum\" or \"count\""
            ))),
        }
    }
}

impl std::fmt::Display for RankBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RankBasis::RatingSum => write!(f, "sum"),
            RankBasis::RatingCount => write!(f, "count"),
        }
    }
}

/// 1-based popularity ranks for every user and item in a dataset.
#[derive(Debug, Clone)]
pub struct RankTable {
    user_rank: Vec<usize>,
    item_rank: Vec<usize>,
    user_score: Vec<f64>,
    item_score: Vec<f64>,
    basis: RankBasis,
}

impl RankTable {
    /// Rank of a user, in `[1, user_count]`; 1 is the most popular.
    pub fn user_rank(&self, user: usize) -> usize {
        self.user_rank[user]
    }

    /// Rank of an item, in `[1, item_count]`; 1 is the most popular.
    pub fn item_rank(&self, item: usize) -> usize {
        self.item_rank[item]
    }

    pub fn user_ranks(&self) -> &[usize] {
        &self.user_rank
    }

    pub fn item_ranks(&self) -> &[usize] {
        &self.item_rank
    }

    pub fn basis(&self) -> RankBasis {
        self.basis
    }

    /// Popularity mass that produced each user's rank.
    pub fn user_scores(&self) -> &[f64] {
        &self.user_score
    }

    pub fn item_scores(&self) -> &[f64] {
        &self.item_score
    }

    /// Dumps `entity_type,dense_index,score,rank` rows for inspection.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "entity_type,dense_index,score,rank")?;
        for (idx, (&score, &rank)) in self.user_score.iter().zip(&self.user_rank).enumerate() {
            writeln!(out, "user,{idx},{score},{rank}")?;
        }
        for (idx, (&score, &rank)) in self.item_score.iter().zip(&self.item_rank).enumerate() {
            writeln!(out, "item,{idx},{score},{rank}")?;
        }
        Ok(())
    }
}

/// Computes user and item popularity ranks over a training split.
///
/// Scores are accumulated per entity, sorted descending, ties broken by
/// ascending dense index. Entities with no training ratings score 0 and land
/// at the bottom of the order.
pub fn compute_ranks(train: &RatingDataset, basis: RankBasis) -> Result<RankTable> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut user_score = vec![0.0f64; train.user_count()];
    let mut item_score = vec![0.0f64; train.item_count()];
    for t in train.triplets() {
        let mass = match basis {
            RankBasis::RatingSum => t.rating,
            RankBasis::RatingCount => 1.0,
        };
        user_score[t.user] += mass;
        item_score[t.item] += mass;
    }

    Ok(RankTable {
        user_rank: ranks_from_scores(&user_score),
        item_rank: ranks_from_scores(&item_score),
        user_score,
        item_score,
        basis,
    })
}

fn ranks_from_scores(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut ranks = vec![0usize; scores.len()];
    for (pos, &idx) in order.iter().enumerate() {
        ranks[idx] = pos + 1;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Triplet;

    fn dataset(triplets: Vec<Triplet>, users: usize, items: usize) -> RatingDataset {
        RatingDataset::from_triplets(users, items, triplets).unwrap()
    }

    #[test]
    fn descending_sum_order() {
        // item sums: [10, 30, 20]
        let d = dataset(
            vec![
                Triplet { user: 0, item: 0, rating: 10.0 },
                Triplet { user: 0, item: 1, rating: 30.0 },
                Triplet { user: 0, item: 2, rating: 20.0 },
            ],
            1,
            3,
        );
        let ranks = compute_ranks(&d, RankBasis::RatingSum).unwrap();
        assert_eq!(ranks.item_ranks(), &[3, 1, 2]);
    }

    #[test]
    fn ties_break_by_ascending_index() {
        // users 4 and 7 both sum to 5.0, everyone else lower.
        let mut triplets = Vec::new();
        for user in 0..8 {
            let rating = if user == 4 || user == 7 { 5.0 } else { 1.0 + user as f64 * 0.1 };
            triplets.push(Triplet { user, item: user, rating });
        }
        let d = dataset(triplets, 8, 8);
        let ranks = compute_ranks(&d, RankBasis::RatingSum).unwrap();
        assert!(ranks.user_rank(4) < ranks.user_rank(7));
        assert_eq!(ranks.user_rank(4), 1);
        assert_eq!(ranks.user_rank(7), 2);
    }

    #[test]
    fn absent_entities_get_worst_ranks() {
        // item 2 exists in the matrix but has no training ratings.
        let d = dataset(
            vec![
                Triplet { user: 0, item: 0, rating: 3.0 },
                Triplet { user: 1, item: 1, rating: 4.0 },
            ],
            2,
            3,
        );
        let ranks = compute_ranks(&d, RankBasis::RatingSum).unwrap();
        assert_eq!(ranks.item_rank(2), 3);
    }

    #[test]
    fn ranks_are_a_bijection() {
        let d = dataset(
            vec![
                Triplet { user: 0, item: 0, rating: 2.0 },
                Triplet { user: 1, item: 1, rating: 2.0 },
                Triplet { user: 2, item: 0, rating: 1.0 },
                Triplet { user: 3, item: 2, rating: 5.0 },
            ],
            5,
            4,
        );
        for basis in [RankBasis::RatingSum, RankBasis::RatingCount] {
            let ranks = compute_ranks(&d, basis).unwrap();
            let mut users: Vec<usize> = ranks.user_ranks().to_vec();
            users.sort_unstable();
            assert_eq!(users, (1..=5).collect::<Vec<_>>());
            let mut items: Vec<usize> = ranks.item_ranks().to_vec();
            items.sort_unstable();
            assert_eq!(items, (1..=4).collect::<Vec<_>>());
        }
    }

    #[test]
    fn strictly_greater_score_means_smaller_rank() {
        let d = dataset(
            vec![
                Triplet { user: 0, item: 0, rating: 4.0 },
                Triplet { user: 0, item: 1, rating: 2.0 },
                Triplet { user: 1, item: 0, rating: 5.0 },
                Triplet { user: 1, item: 2, rating: 0.5 },
            ],
            2,
            3,
        );
        let ranks = compute_ranks(&d, RankBasis::RatingSum).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                if ranks.item_scores()[a] > ranks.item_scores()[b] {
                    assert!(ranks.item_rank(a) < ranks.item_rank(b));
                }
            }
        }
    }

    #[test]
    fn count_basis_ignores_values() {
        let d = dataset(
            vec![
                Triplet { user: 0, item: 0, rating: 0.5 },
                Triplet { user: 1, item: 0, rating: 0.5 },
                Triplet { user: 0, item: 1, rating: 5.0 },
            ],
            2,
            2,
        );
        let ranks = compute_ranks(&d, RankBasis::RatingCount).unwrap();
        // item 0 has 2 ratings, item 1 has 1 rating with higher value.
        assert_eq!(ranks.item_rank(0), 1);
        assert_eq!(ranks.item_rank(1), 2);
    }

    #[test]
    fn deterministic_for_identical_input() {
        let d = dataset(
            vec![
                Triplet { user: 0, item: 0, rating: 2.0 },
                Triplet { user: 1, item: 1, rating: 3.0 },
            ],
            2,
            2,
        );
        let a = compute_ranks(&d, RankBasis::RatingSum).unwrap();
        let b = compute_ranks(&d, RankBasis::RatingSum).unwrap();
        assert_eq!(a.user_ranks(), b.user_ranks());
        assert_eq!(a.item_ranks(), b.item_ranks());
    }

    #[test]
    fn empty_train_rejected() {
        let d = dataset(vec![Triplet { user: 0, item: 0, rating: 1.0 }], 1, 1);
        let pair = d.split(0.5, 1).unwrap();
        // the single rating goes to train; test side is empty
        assert!(compute_ranks(&pair.test, RankBasis::RatingSum).is_err());
    }

    #[test]
    fn csv_dump_shape() {
        let d = dataset(
            vec![
                Triplet { user: 0, item: 0, rating: 2.0 },
                Triplet { user: 1, item: 1, rating: 3.0 },
            ],
            2,
            2,
        );
        let ranks = compute_ranks(&d, RankBasis::RatingSum).unwrap();
        let mut buf = Vec::new();
        ranks.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 2 + 2);
        assert_eq!(lines[0], "entity_type,dense_index,score,rank");
        assert!(lines[1].starts_with("user,0,"));
        assert!(lines[3].starts_with("item,0,"));
    }
}
