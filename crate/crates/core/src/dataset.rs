//! Rating-file ingestion and leave-one-out splitting.
//!
//! Parses MovieLens-style rating and user files, binarizes to implicit
//! feedback, filters sparse users, reindexes ids densely and holds out
//! each user's latest interaction for evaluation.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("line {line}: expected at least {expected} fields, found {found}")]
    MalformedLine {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {what}")]
    BadField { line: usize, what: String },
    #[error("line {line}: unknown gender token {token:?}")]
    UnknownGender { line: usize, token: String },
    #[error("line {line}: duplicate user id {id:?}")]
    DuplicateUser { line: usize, id: String },
    #[error("min_interactions must be at least 2, got {0}")]
    BadMinInteractions(usize),
    #[error("no users left after filtering")]
    Empty,
    #[error("users without group labels: {0:?}")]
    MissingLabels(Vec<String>),
    #[error("negative sample count {requested} exceeds available items {available}")]
    InfeasibleNegatives { requested: usize, available: usize },
    #[error("unknown user index {0}")]
    UnknownUser(usize),
}

/// One parsed interaction record.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingRecord {
    pub user_raw_id: String,
    pub item_raw_id: String,
    pub rating: f64,
    pub timestamp: i64,
}

/// Rating file layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingFormat {
    /// ML-100K style: `user \t item \t rating \t timestamp`.
    TabSeparated,
    /// ML-1M style: `user::item::rating::timestamp`.
    DoubleColon,
    /// Header line followed by comma-separated rows; column positions
    /// configurable for datasets with other layouts.
    Csv(CsvColumns),
}

/// Column positions for the csv layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvColumns {
    pub user: usize,
    pub item: usize,
    pub rating: usize,
    /// None means the file carries no timestamp; records get timestamp 0.
    pub timestamp: Option<usize>,
}

impl Default for CsvColumns {
    fn default() -> Self {
        Self {
            user: 0,
            item: 1,
            rating: 2,
            timestamp: Some(3),
        }
    }
}

/// User-attribute file layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelFormat {
    /// ML-100K u.user: `id|age|gender|occupation|zip`.
    Ml100kUser,
    /// ML-1M users.dat: `id::gender::age::occupation::zip`.
    Ml1mUsers,
    /// Header line, then `user,group` with group a gender token or a
    /// numeric group index.
    Csv,
}

/// The split held-out for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    /// Hold out each user's latest interaction.
    LeaveOneOut,
    /// Chronological 80/10/10 per user; the middle slice is unused here.
    Temporal801010,
}

/// Fully prepared implicit-feedback dataset with dense ids.
#[derive(Debug, Clone)]
pub struct InteractionDataset {
    n: usize,
    m: usize,
    train_positives: Vec<Vec<usize>>,
    test_item: Vec<usize>,
    group_label: Vec<usize>,
    user_raw_ids: Vec<String>,
    item_raw_ids: Vec<String>,
    user_dense: HashMap<String, usize>,
    item_dense: HashMap<String, usize>,
}

impl InteractionDataset {
    pub fn user_count(&self) -> usize {
        self.n
    }

    pub fn item_count(&self) -> usize {
        self.m
    }

    /// Training positives of one user, in chronological order.
    pub fn train_positives(&self, user: usize) -> &[usize] {
        &self.train_positives[user]
    }

    pub fn test_item(&self, user: usize) -> usize {
        self.test_item[user]
    }

    pub fn group_label(&self, user: usize) -> usize {
        self.group_label[user]
    }

    /// Number of groups (1 + max label).
    pub fn group_count(&self) -> usize {
        self.group_label.iter().copied().max().map_or(0, |g| g + 1)
    }

    /// Users per group.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.group_count()];
        for &g in &self.group_label {
            sizes[g] += 1;
        }
        sizes
    }

    pub fn user_raw_id(&self, user: usize) -> &str {
        &self.user_raw_ids[user]
    }

    pub fn item_raw_id(&self, item: usize) -> &str {
        &self.item_raw_ids[item]
    }

    pub fn dense_user(&self, raw: &str) -> Option<usize> {
        self.user_dense.get(raw).copied()
    }

    pub fn dense_item(&self, raw: &str) -> Option<usize> {
        self.item_dense.get(raw).copied()
    }

    /// Uniform negatives for one user: distinct, excluding the user's
    /// training positives and test item. Deterministic given the caller's
    /// rng state.
    pub fn sample_negatives<G: Rng>(
        &self,
        user: usize,
        count: usize,
        rng: &mut G,
    ) -> Result<Vec<usize>, DatasetError> {
        if user >= self.n {
            return Err(DatasetError::UnknownUser(user));
        }
        let mut excluded: HashSet<usize> =
            self.train_positives[user].iter().copied().collect();
        excluded.insert(self.test_item[user]);
        let available = self.m - excluded.len();
        if count > available {
            return Err(DatasetError::InfeasibleNegatives {
                requested: count,
                available,
            });
        }
        if count == available {
            return Ok((0..self.m).filter(|i| !excluded.contains(i)).collect());
        }
        let mut out = Vec::with_capacity(count);
        let mut drawn: HashSet<usize> = HashSet::with_capacity(count);
        while out.len() < count {
            let candidate = rng.gen_range(0..self.m);
            if !excluded.contains(&candidate) && drawn.insert(candidate) {
                out.push(candidate);
            }
        }
        Ok(out)
    }
}

fn split_line<'a>(line: &'a str, format: &RatingFormat) -> Vec<&'a str> {
    match format {
        RatingFormat::TabSeparated => line.split('\t').collect(),
        RatingFormat::DoubleColon => line.split("::").collect(),
        RatingFormat::Csv(_) => line.split(',').map(str::trim).collect(),
    }
}

/// Parse a rating file. Lines with three fields get timestamp 0; the csv
/// layout skips its header line.
pub fn parse_ratings(raw_text: &str, format: RatingFormat) -> Result<Vec<RatingRecord>, DatasetError> {
    let mut records = Vec::new();
    let header_lines = match format {
        RatingFormat::Csv(_) => 1,
        _ => 0,
    };
    for (idx, line) in raw_text.lines().enumerate() {
        if idx < header_lines || line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let fields = split_line(line, &format);
        let (user_idx, item_idx, rating_idx, ts_idx) = match format {
            RatingFormat::Csv(cols) => (cols.user, cols.item, cols.rating, cols.timestamp),
            _ => (0, 1, 2, Some(3)),
        };
        let needed = [Some(user_idx), Some(item_idx), Some(rating_idx)]
            .into_iter()
            .flatten()
            .max()
            .unwrap()
            + 1;
        if fields.len() < needed {
            return Err(DatasetError::MalformedLine {
                line: line_no,
                expected: needed,
                found: fields.len(),
            });
        }
        let rating: f64 = fields[rating_idx].parse().map_err(|_| DatasetError::BadField {
            line: line_no,
            what: format!("unparseable rating {:?}", fields[rating_idx]),
        })?;
        if !rating.is_finite() || rating < 0.0 {
            return Err(DatasetError::BadField {
                line: line_no,
                what: format!("rating {rating} out of range"),
            });
        }
        let timestamp = match ts_idx {
            Some(t) if fields.len() > t => {
                fields[t].trim().parse().map_err(|_| DatasetError::BadField {
                    line: line_no,
                    what: format!("unparseable timestamp {:?}", fields[t]),
                })?
            }
            _ => 0,
        };
        if timestamp < 0 {
            return Err(DatasetError::BadField {
                line: line_no,
                what: format!("negative timestamp {timestamp}"),
            });
        }
        records.push(RatingRecord {
            user_raw_id: fields[user_idx].to_string(),
            item_raw_id: fields[item_idx].to_string(),
            rating,
            timestamp,
        });
    }
    Ok(records)
}

fn gender_to_group(token: &str, line: usize) -> Result<usize, DatasetError> {
    match token {
        "M" => Ok(0),
        "F" => Ok(1),
        other => {
            // Generic csv files may carry a plain group index instead.
            other.parse().map_err(|_| DatasetError::UnknownGender {
                line,
                token: other.to_string(),
            })
        }
    }
}

/// Parse a user-attribute file into raw-user-id -> group-index. "M" maps
/// to group 0 and "F" to group 1.
pub fn load_group_labels(
    raw_text: &str,
    format: LabelFormat,
) -> Result<HashMap<String, usize>, DatasetError> {
    let mut labels = HashMap::new();
    let header_lines = match format {
        LabelFormat::Csv => 1,
        _ => 0,
    };
    for (idx, line) in raw_text.lines().enumerate() {
        if idx < header_lines || line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let (id, token) = match format {
            LabelFormat::Ml100kUser => {
                let fields: Vec<&str> = line.split('|').collect();
                if fields.len() < 3 {
                    return Err(DatasetError::MalformedLine {
                        line: line_no,
                        expected: 3,
                        found: fields.len(),
                    });
                }
                (fields[0], fields[2])
            }
            LabelFormat::Ml1mUsers => {
                let fields: Vec<&str> = line.split("::").collect();
                if fields.len() < 2 {
                    return Err(DatasetError::MalformedLine {
                        line: line_no,
                        expected: 2,
                        found: fields.len(),
                    });
                }
                (fields[0], fields[1])
            }
            LabelFormat::Csv => {
                let fields: Vec<&str> = line.split(',').map(str::trim).collect();
                if fields.len() < 2 {
                    return Err(DatasetError::MalformedLine {
                        line: line_no,
                        expected: 2,
                        found: fields.len(),
                    });
                }
                (fields[0], fields[1])
            }
        };
        let group = gender_to_group(token, line_no)?;
        if labels.insert(id.to_string(), group).is_some() {
            return Err(DatasetError::DuplicateUser {
                line: line_no,
                id: id.to_string(),
            });
        }
    }
    Ok(labels)
}

/// Raw ingestion counts, reported before any filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestionSummary {
    pub ratings: usize,
    pub users: usize,
    pub items: usize,
    /// 1 - ratings / (users * items).
    pub sparsity: f64,
}

/// Table-style summary of a parsed rating file.
pub fn summarize_records(records: &[RatingRecord]) -> IngestionSummary {
    let users: HashSet<&str> = records.iter().map(|r| r.user_raw_id.as_str()).collect();
    let items: HashSet<&str> = records.iter().map(|r| r.item_raw_id.as_str()).collect();
    let denom = (users.len() * items.len()) as f64;
    IngestionSummary {
        ratings: records.len(),
        users: users.len(),
        items: items.len(),
        sparsity: if denom > 0.0 {
            1.0 - records.len() as f64 / denom
        } else {
            0.0
        },
    }
}

// Per-user distinct positive item keyed by raw item id, carrying the
// latest (timestamp, record index) at which it was seen.
struct UserHistory {
    order: Vec<String>,
    latest: HashMap<String, (i64, usize)>,
}

/// Binarize, filter, reindex and split.
///
/// Ratings above zero count as interactions; duplicate (user, item) pairs
/// collapse to one positive carrying the latest timestamp. Users with
/// fewer than `min_interactions` distinct positives are removed, then
/// orphaned items are dropped and both id spaces are compacted in first-
/// appearance order. Leave-one-out holds out the latest positive (ties:
/// last record in file order wins).
pub fn build_dataset(
    records: &[RatingRecord],
    labels: &HashMap<String, usize>,
    min_interactions: usize,
    split: SplitKind,
) -> Result<InteractionDataset, DatasetError> {
    if min_interactions < 2 {
        return Err(DatasetError::BadMinInteractions(min_interactions));
    }

    let mut user_order: Vec<String> = Vec::new();
    let mut histories: HashMap<String, UserHistory> = HashMap::new();
    for (idx, record) in records.iter().enumerate() {
        if record.rating <= 0.0 {
            continue;
        }
        let history = histories
            .entry(record.user_raw_id.clone())
            .or_insert_with(|| {
                user_order.push(record.user_raw_id.clone());
                UserHistory {
                    order: Vec::new(),
                    latest: HashMap::new(),
                }
            });
        match history.latest.get_mut(&record.item_raw_id) {
            Some(seen) => {
                // Last occurrence wins on timestamp ties.
                if (record.timestamp, idx) >= *seen {
                    *seen = (record.timestamp, idx);
                }
            }
            None => {
                history.order.push(record.item_raw_id.clone());
                history
                    .latest
                    .insert(record.item_raw_id.clone(), (record.timestamp, idx));
            }
        }
    }

    let retained: Vec<&String> = user_order
        .iter()
        .filter(|u| histories[*u].latest.len() >= min_interactions)
        .collect();
    if retained.is_empty() {
        return Err(DatasetError::Empty);
    }
    let unlabeled: Vec<String> = retained
        .iter()
        .filter(|u| !labels.contains_key(**u))
        .map(|u| (*u).clone())
        .collect();
    if !unlabeled.is_empty() {
        return Err(DatasetError::MissingLabels(unlabeled));
    }

    // Chronological item lists per retained user.
    struct SplitUser<'a> {
        raw_id: &'a str,
        train: Vec<&'a str>,
        test: &'a str,
    }
    let mut split_users: Vec<SplitUser> = Vec::with_capacity(retained.len());
    for user in &retained {
        let history = &histories[*user];
        let mut items: Vec<&str> = history.order.iter().map(String::as_str).collect();
        items.sort_by_key(|item| history.latest[*item]);
        let split_user = match split {
            SplitKind::LeaveOneOut => {
                let test = items.pop().expect("min_interactions >= 2");
                SplitUser {
                    raw_id: user,
                    train: items,
                    test,
                }
            }
            SplitKind::Temporal801010 => {
                let k = items.len();
                let n_train = std::cmp::max(1, (4 * k) / 5);
                // floor(0.8k) + floor(0.1k) < k for k >= 2, so the test
                // segment is never empty; its latest item is held out and
                // the middle slice goes unused.
                debug_assert!(n_train + k / 10 < k);
                let test = *items.last().expect("nonempty");
                SplitUser {
                    raw_id: user,
                    train: items[..n_train].to_vec(),
                    test,
                }
            }
        };
        split_users.push(split_user);
    }

    // Dense ids in first-appearance order over the kept structure.
    let mut user_dense: HashMap<String, usize> = HashMap::new();
    let mut user_raw_ids: Vec<String> = Vec::new();
    let mut item_dense: HashMap<String, usize> = HashMap::new();
    let mut item_raw_ids: Vec<String> = Vec::new();
    let intern_item = |raw: &str, dense: &mut HashMap<String, usize>, ids: &mut Vec<String>| {
        *dense.entry(raw.to_string()).or_insert_with(|| {
            ids.push(raw.to_string());
            ids.len() - 1
        })
    };

    let mut train_positives = Vec::with_capacity(split_users.len());
    let mut test_item = Vec::with_capacity(split_users.len());
    let mut group_label = Vec::with_capacity(split_users.len());
    for user in &split_users {
        let uid = user_raw_ids.len();
        user_dense.insert(user.raw_id.to_string(), uid);
        user_raw_ids.push(user.raw_id.to_string());
        let train: Vec<usize> = user
            .train
            .iter()
            .map(|raw| intern_item(raw, &mut item_dense, &mut item_raw_ids))
            .collect();
        let test = intern_item(user.test, &mut item_dense, &mut item_raw_ids);
        debug_assert!(!train.contains(&test));
        train_positives.push(train);
        test_item.push(test);
        group_label.push(labels[user.raw_id]);
    }

    Ok(InteractionDataset {
        n: user_raw_ids.len(),
        m: item_raw_ids.len(),
        train_positives,
        test_item,
        group_label,
        user_raw_ids,
        item_raw_ids,
        user_dense,
        item_dense,
    })
}
