//! Retrieval and recognition metrics over a labeled descriptor collection.
//!
//! Retrieval treats every record as a query against the whole store, itself
//! included. Rankings sort by ascending distance with ties broken by ingestion
//! order. Per-query work runs on the current rayon pool; every reduction is a
//! sequential fold in a fixed order, so results do not depend on thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::similarity::{distance, DistanceError, DistanceKind};

/// ROC threshold increment.
pub const ROC_STEP: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("descriptor dimension {found} does not match store dimension {expected}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

/// One labeled descriptor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub label: u32,
    pub id: String,
    pub vector: Vec<f64>,
}

/// Ordered collection of labeled descriptors sharing one dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledStore {
    records: Vec<Record>,
}

impl LabeledStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<Record>) -> Result<Self, EvalError> {
        let mut store = Self::new();
        for r in records {
            store.push_record(r)?;
        }
        Ok(store)
    }

    pub fn push(
        &mut self,
        label: u32,
        id: impl Into<String>,
        vector: Vec<f64>,
    ) -> Result<(), EvalError> {
        self.push_record(Record {
            label,
            id: id.into(),
            vector,
        })
    }

    pub fn push_record(&mut self, record: Record) -> Result<(), EvalError> {
        if let Some(first) = self.records.first() {
            if first.vector.len() != record.vector.len() {
                return Err(EvalError::Dimension {
                    expected: first.vector.len(),
                    found: record.vector.len(),
                });
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Shared descriptor length, 0 for an empty store.
    pub fn dimension(&self) -> usize {
        self.records.first().map_or(0, |r| r.vector.len())
    }

    /// Number of records per label, in label order.
    pub fn category_sizes(&self) -> BTreeMap<u32, usize> {
        let mut sizes = BTreeMap::new();
        for r in &self.records {
            *sizes.entry(r.label).or_insert(0) += 1;
        }
        sizes
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.records.iter().position(|r| r.id == id)
    }

    /// Copies the records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> LabeledStore {
        LabeledStore {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }
}

/// A gallery record paired with its distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedMatch<'a> {
    pub index: usize,
    pub record: &'a Record,
    pub distance: f64,
}

fn check_query(query: &[f64], store: &LabeledStore) -> Result<(), EvalError> {
    if query.len() != store.dimension() {
        return Err(EvalError::Dimension {
            expected: store.dimension(),
            found: query.len(),
        });
    }
    Ok(())
}

/// `(index, distance)` sorted by distance, ties in ingestion order.
fn ranking(
    query: &[f64],
    store: &LabeledStore,
    kind: DistanceKind,
    exclude: Option<usize>,
) -> Result<Vec<(usize, f64)>, EvalError> {
    let mut ranked = Vec::with_capacity(store.len());
    for (i, r) in store.records.iter().enumerate() {
        if Some(i) == exclude {
            continue;
        }
        // Adding 0.0 folds -0.0 into +0.0 for total_cmp.
        ranked.push((i, distance(query, &r.vector, kind)? + 0.0));
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

/// Ranks every store record against `query`.
pub fn rank_gallery<'a>(
    query: &[f64],
    store: &'a LabeledStore,
    kind: DistanceKind,
) -> Result<Vec<RankedMatch<'a>>, EvalError> {
    if store.is_empty() {
        return Err(EvalError::Argument("gallery is empty".into()));
    }
    check_query(query, store)?;
    Ok(ranking(query, store, kind, None)?
        .into_iter()
        .map(|(index, distance)| RankedMatch {
            index,
            record: &store.records[index],
            distance,
        })
        .collect())
}

/// 1-based ranks of the records sharing the query's label, query included.
fn relevant_ranks(
    store: &LabeledStore,
    query: usize,
    kind: DistanceKind,
) -> Result<Vec<usize>, EvalError> {
    let label = store.records[query].label;
    Ok(ranking(&store.records[query].vector, store, kind, None)?
        .iter()
        .enumerate()
        .filter(|(_, (i, _))| store.records[*i].label == label)
        .map(|(pos, _)| pos + 1)
        .collect())
}

fn all_relevant_ranks(
    store: &LabeledStore,
    kind: DistanceKind,
) -> Result<Vec<Vec<usize>>, EvalError> {
    (0..store.len())
        .into_par_iter()
        .map(|q| relevant_ranks(store, q, kind))
        .collect()
}

/// Normalized modified retrieval rank of one query.
///
/// `relevant_ranks` holds the 1-based rank of each of the query's `NG` relevant
/// items and `window` is the cut-off `K`. Ranks beyond `K` are charged `1.25 K`.
/// When `1.25 K - 0.5 - NG/2 <= 0` the result is 0 for a nonpositive modified
/// rank and 1 otherwise.
pub fn nmrr(relevant_ranks: &[usize], window: usize) -> f64 {
    let ng = relevant_ranks.len() as f64;
    let penalty = 1.25 * window as f64;
    let avr = relevant_ranks
        .iter()
        .map(|&r| if r <= window { r as f64 } else { penalty })
        .sum::<f64>()
        / ng;
    let mrr = avr - 0.5 - ng / 2.0;
    let denominator = penalty - 0.5 - ng / 2.0;
    if denominator <= 0.0 {
        if mrr <= 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        (mrr / denominator).clamp(0.0, 1.0)
    }
}

/// Retrieval metrics at one cut-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricRow {
    pub n: usize,
    pub arp: f64,
    pub arr: f64,
    pub f_score: f64,
    pub anmrr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricCurves {
    pub rows: Vec<MetricRow>,
}

impl MetricCurves {
    pub fn row(&self, n: usize) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

pub fn f_score(arp: f64, arr: f64) -> f64 {
    if arp + arr == 0.0 {
        0.0
    } else {
        2.0 * arp * arr / (arp + arr)
    }
}

fn check_cutoffs(n_values: &[usize]) -> Result<(), EvalError> {
    if n_values.contains(&0) {
        return Err(EvalError::Argument(
            "number of retrieved images must be at least 1".into(),
        ));
    }
    Ok(())
}

/// ARP, ARR, F-score and ANMRR for each cut-off in `n_values`.
///
/// Precision and recall are averaged within each category first, then across
/// categories. ANMRR averages over all queries with window `K = n`.
pub fn retrieval_curves(
    store: &LabeledStore,
    kind: DistanceKind,
    n_values: &[usize],
) -> Result<MetricCurves, EvalError> {
    if store.is_empty() {
        return Err(EvalError::Argument("cannot evaluate an empty store".into()));
    }
    check_cutoffs(n_values)?;
    let ranks = all_relevant_ranks(store, kind)?;

    let mut by_label: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (q, r) in store.records.iter().enumerate() {
        by_label.entry(r.label).or_default().push(q);
    }

    let rows = n_values
        .iter()
        .map(|&n| {
            let mut precision_sum = 0.0;
            let mut recall_sum = 0.0;
            for queries in by_label.values() {
                let mut mp = 0.0;
                let mut mr = 0.0;
                for &q in queries {
                    let hits = ranks[q].partition_point(|&r| r <= n) as f64;
                    mp += hits / n as f64;
                    mr += hits / ranks[q].len() as f64;
                }
                precision_sum += mp / queries.len() as f64;
                recall_sum += mr / queries.len() as f64;
            }
            let categories = by_label.len() as f64;
            let arp = precision_sum / categories;
            let arr = recall_sum / categories;
            let anmrr = ranks.iter().map(|r| nmrr(r, n)).sum::<f64>() / ranks.len() as f64;
            MetricRow {
                n,
                arp,
                arr,
                f_score: f_score(arp, arr),
                anmrr,
            }
        })
        .collect();
    Ok(MetricCurves { rows })
}

/// Average normalized modified retrieval rank at window `n`.
pub fn anmrr(store: &LabeledStore, kind: DistanceKind, n: usize) -> Result<f64, EvalError> {
    if store.is_empty() {
        return Err(EvalError::Argument("cannot evaluate an empty store".into()));
    }
    check_cutoffs(&[n])?;
    let ranks = all_relevant_ranks(store, kind)?;
    Ok(ranks.iter().map(|r| nmrr(r, n)).sum::<f64>() / ranks.len() as f64)
}

/// Cumulative match characteristic; `rates[r - 1]` is the identification rate at rank `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CmcCurve {
    pub rates: Vec<f64>,
}

impl CmcCurve {
    pub fn rate_at(&self, rank: usize) -> f64 {
        self.rates[rank - 1]
    }
}

/// Leave-one-out CMC: each record probes a gallery of all other records.
pub fn cmc(
    store: &LabeledStore,
    kind: DistanceKind,
    max_rank: usize,
) -> Result<CmcCurve, EvalError> {
    if max_rank == 0 {
        return Err(EvalError::Argument(
            "maximum rank must be at least 1".into(),
        ));
    }
    if store.is_empty() {
        return Err(EvalError::Argument("cannot evaluate an empty store".into()));
    }
    if let Some((label, _)) = store
        .category_sizes()
        .into_iter()
        .find(|&(_, size)| size < 2)
    {
        return Err(EvalError::Config(format!(
            "category {label} has a single image; leave-one-out identification needs at least 2"
        )));
    }
    let probe_ranks: Vec<usize> = (0..store.len())
        .into_par_iter()
        .map(|p| -> Result<usize, EvalError> {
            let probe = &store.records[p];
            let ranked = ranking(&probe.vector, store, kind, Some(p))?;
            Ok(ranked
                .iter()
                .position(|(i, _)| store.records[*i].label == probe.label)
                .expect("category has another member")
                + 1)
        })
        .collect::<Result<_, _>>()?;
    let total = probe_ranks.len() as f64;
    let rates = (1..=max_rank)
        .map(|r| probe_ranks.iter().filter(|&&rank| rank <= r).count() as f64 / total)
        .collect();
    Ok(CmcCurve { rates })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
}

/// Thresholds from the lowest to the highest score in steps of [`ROC_STEP`],
/// closed by the highest score itself.
fn roc_thresholds(low: f64, high: f64) -> Vec<f64> {
    let steps = ((high - low) / ROC_STEP).floor() as usize;
    let mut thresholds: Vec<f64> = (0..=steps)
        .map(|k| low + k as f64 * ROC_STEP)
        .take_while(|&t| t <= high)
        .collect();
    if thresholds.last() != Some(&high) {
        thresholds.push(high);
    }
    thresholds
}

/// Verification ROC over all unordered record pairs.
///
/// A pair is accepted at threshold `s` when its distance is at most `s`;
/// same-label pairs are genuine, the rest impostors.
pub fn roc(store: &LabeledStore, kind: DistanceKind) -> Result<RocCurve, EvalError> {
    if store.category_sizes().len() < 2 {
        return Err(EvalError::Config(
            "ROC needs at least two categories".into(),
        ));
    }
    let rows: Vec<Vec<(bool, f64)>> = (0..store.len())
        .into_par_iter()
        .map(|i| {
            let a = &store.records[i];
            store.records[i + 1..]
                .iter()
                .map(|b| {
                    Ok((
                        a.label == b.label,
                        distance(&a.vector, &b.vector, kind)? + 0.0,
                    ))
                })
                .collect::<Result<Vec<_>, DistanceError>>()
        })
        .collect::<Result<_, _>>()?;
    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    for (same, d) in rows.into_iter().flatten() {
        if same {
            genuine.push(d);
        } else {
            impostor.push(d);
        }
    }
    if genuine.is_empty() {
        return Err(EvalError::Config(
            "ROC needs at least one category with two or more images".into(),
        ));
    }
    genuine.sort_by(f64::total_cmp);
    impostor.sort_by(f64::total_cmp);
    let low = genuine[0].min(impostor[0]);
    let high = genuine[genuine.len() - 1].max(impostor[impostor.len() - 1]);
    let thresholds = roc_thresholds(low, high);
    let rate =
        |scores: &[f64], t: f64| scores.partition_point(|&s| s <= t) as f64 / scores.len() as f64;
    let tpr = thresholds.iter().map(|&t| rate(&genuine, t)).collect();
    let fpr = thresholds.iter().map(|&t| rate(&impostor, t)).collect();
    Ok(RocCurve {
        thresholds,
        tpr,
        fpr,
    })
}

/// Fraction of probes whose nearest gallery record carries the probe's label.
pub fn rank1_accuracy(
    gallery: &LabeledStore,
    probe: &LabeledStore,
    kind: DistanceKind,
) -> Result<f64, EvalError> {
    if gallery.is_empty() || probe.is_empty() {
        return Err(EvalError::Argument(
            "gallery and probe sets must be nonempty".into(),
        ));
    }
    if gallery.dimension() != probe.dimension() {
        return Err(EvalError::Dimension {
            expected: gallery.dimension(),
            found: probe.dimension(),
        });
    }
    let hits: Vec<bool> = probe
        .records
        .par_iter()
        .map(|p| -> Result<bool, EvalError> {
            let ranked = ranking(&p.vector, gallery, kind, None)?;
            Ok(gallery.records[ranked[0].0].label == p.label)
        })
        .collect::<Result<_, _>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
}
