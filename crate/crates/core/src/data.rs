//! Fused RCT + RWD censored samples: validation, delimited-text I/O and
//! stratified fold assignment.
//!
//! Covariate vectors never carry the intercept; model code prepends the
//! constant column itself.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowIssue};
use crate::rng::stream_rng;

/// One subject's follow-up record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Observed time `min(failure, censoring)`.
    pub time: f64,
    /// `true` when the failure was observed (δ = 1).
    pub status: bool,
    /// Treatment arm (A).
    pub treatment: bool,
    /// Data source (S): `true` for the randomized trial, `false` for RWD.
    pub source: bool,
    pub covariates: Vec<f64>,
}

impl Observation {
    #[inline]
    pub fn a(&self) -> f64 {
        f64::from(u8::from(self.treatment))
    }

    #[inline]
    pub fn s(&self) -> f64 {
        f64::from(u8::from(self.source))
    }

    /// Index of the (S, A) cell in `0..4`.
    #[inline]
    pub fn stratum(&self) -> u8 {
        2 * u8::from(self.source) + u8::from(self.treatment)
    }

    fn check(&self, p: usize) -> std::result::Result<(), String> {
        if !(self.time.is_finite() && self.time > 0.0) {
            return Err(format!("time must be positive and finite, got {}", self.time));
        }
        if self.covariates.len() != p {
            return Err(format!(
                "expected {p} covariates, found {}",
                self.covariates.len()
            ));
        }
        if let Some(j) = self.covariates.iter().position(|x| !x.is_finite()) {
            return Err(format!("covariate {} is not finite", j + 1));
        }
        Ok(())
    }
}

/// Validated, immutable collection of observations sharing one covariate
/// dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    observations: Vec<Observation>,
    p: usize,
    n1: usize,
    n0: usize,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::EmptyInput);
        }
        let p = observations[0].covariates.len();
        let issues: Vec<RowIssue> = observations
            .iter()
            .enumerate()
            .filter_map(|(i, o)| {
                o.check(p).err().map(|message| RowIssue {
                    row: i + 1,
                    message,
                })
            })
            .collect();
        if !issues.is_empty() {
            return Err(Error::InvalidRows(issues));
        }
        let n1 = observations.iter().filter(|o| o.source).count();
        if n1 == 0 {
            return Err(Error::NoTrialRows);
        }
        let n0 = observations.len() - n1;
        Ok(Self {
            observations,
            p,
            n1,
            n0,
        })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn get(&self, i: usize) -> &Observation {
        &self.observations[i]
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Covariate count, intercept excluded.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of trial rows.
    pub fn n1(&self) -> usize {
        self.n1
    }

    /// Number of real-world rows.
    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn times(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.time).collect()
    }

    pub fn statuses(&self) -> Vec<bool> {
        self.observations.iter().map(|o| o.status).collect()
    }

    /// Row indices in `0..n` satisfying `pred`.
    pub fn indices_where(&self, pred: impl Fn(&Observation) -> bool) -> Vec<usize> {
        self.observations
            .iter()
            .enumerate()
            .filter(|(_, o)| pred(o))
            .map(|(i, _)| i)
            .collect()
    }

    /// New dataset made of the given rows, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        Self::new(idx.iter().map(|&i| self.observations[i].clone()).collect())
    }

    pub fn censoring_rate(&self) -> f64 {
        let censored = self.observations.iter().filter(|o| !o.status).count();
        censored as f64 / self.len() as f64
    }
}

/// Column names used to read a delimited file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub time: String,
    pub status: String,
    pub treatment: String,
    pub source: String,
    /// Explicit covariate columns; `None` picks up `x1, x2, ...` in numeric
    /// order.
    pub covariates: Option<Vec<String>>,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            time: "time".into(),
            status: "status".into(),
            treatment: "treat".into(),
            source: "source".into(),
            covariates: None,
        }
    }
}

fn parse_binary(field: &str, name: &str) -> std::result::Result<bool, String> {
    match field.trim() {
        "0" | "0.0" => Ok(false),
        "1" | "1.0" => Ok(true),
        other => Err(format!("{name} must be 0 or 1, got `{other}`")),
    }
}

fn parse_real(field: &str, name: &str) -> std::result::Result<f64, String> {
    let value: f64 = field
        .trim()
        .parse()
        .map_err(|_| format!("{name} is not a number: `{field}`"))?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{name} is not finite"))
    }
}

/// Reads a header-first, comma-delimited file into a validated [`Dataset`].
///
/// All row-level problems are collected and reported together.
pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let position: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let column = |name: &str| {
        position
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let time_col = column(&schema.time)?;
    let status_col = column(&schema.status)?;
    let treat_col = column(&schema.treatment)?;
    let source_col = column(&schema.source)?;
    let covariate_cols: Vec<usize> = match &schema.covariates {
        Some(names) => names.iter().map(|n| column(n)).collect::<Result<_>>()?,
        None => {
            let mut numbered: Vec<(usize, usize)> = headers
                .iter()
                .enumerate()
                .filter_map(|(i, h)| {
                    h.strip_prefix('x')
                        .and_then(|k| k.parse::<usize>().ok())
                        .map(|k| (k, i))
                })
                .collect();
            numbered.sort_unstable();
            for (expected, (k, _)) in (1..).zip(&numbered) {
                if *k != expected {
                    return Err(Error::MissingColumn(format!("x{expected}")));
                }
            }
            numbered.into_iter().map(|(_, i)| i).collect()
        }
    };

    let mut observations = Vec::new();
    let mut issues = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let row = row + 1;
        let record = record?;
        if record.len() != headers.len() {
            issues.push(RowIssue {
                row,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
            continue;
        }
        let parsed = (|| -> std::result::Result<Observation, String> {
            let time = parse_real(&record[time_col], "time")?;
            if time <= 0.0 {
                return Err(format!("time must be positive, got {time}"));
            }
            Ok(Observation {
                time,
                status: parse_binary(&record[status_col], "status")?,
                treatment: parse_binary(&record[treat_col], "treat")?,
                source: parse_binary(&record[source_col], "source")?,
                covariates: covariate_cols
                    .iter()
                    .map(|&c| parse_real(&record[c], &headers[c]))
                    .collect::<std::result::Result<_, _>>()?,
            })
        })();
        match parsed {
            Ok(o) => observations.push(o),
            Err(message) => issues.push(RowIssue { row, message }),
        }
    }
    if !issues.is_empty() {
        return Err(Error::InvalidRows(issues));
    }
    Dataset::new(observations)
}

/// Writes `d` with the default schema (`time,status,treat,source,x1..xp`).
///
/// Reals use the shortest representation that parses back to the same bits.
pub fn write_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec![
        "time".to_string(),
        "status".into(),
        "treat".into(),
        "source".into(),
    ];
    header.extend((1..=d.p()).map(|j| format!("x{j}")));
    writer.write_record(&header)?;
    for o in d.observations() {
        let mut fields = vec![
            o.time.to_string(),
            u8::from(o.status).to_string(),
            u8::from(o.treatment).to_string(),
            u8::from(o.source).to_string(),
        ];
        fields.extend(o.covariates.iter().map(|x| x.to_string()));
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    Ok(())
}

/// Fold label per observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

impl FoldAssignment {
    /// Indices (ascending) belonging to fold `f`.
    pub fn fold(&self, f: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == f).collect()
    }

    /// Indices (ascending) outside fold `f`.
    pub fn complement(&self, f: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != f).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Assigns folds within each stratum label, dealing shuffled members round
/// robin. The dealing position carries over between strata, so global fold
/// sizes also differ by at most one.
pub(crate) fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, 0x466f6c6473);
    let mut fold_of = vec![0; labels.len()];
    let mut distinct: Vec<u8> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mut next = 0usize;
    for label in distinct {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    fold_of
}

/// Stratified (by source and treatment) assignment of `d` to `k` folds.
pub fn split_folds(d: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    let labels: Vec<u8> = d.observations().iter().map(Observation::stratum).collect();
    check_fold_count(&labels, k)?;
    Ok(FoldAssignment {
        fold_of: stratified_folds(&labels, k, seed),
        k,
        seed,
    })
}

pub(crate) fn check_fold_count(labels: &[u8], k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    let mut counts = [0usize; 4];
    for &l in labels {
        counts[usize::from(l)] += 1;
    }
    for (cell, &count) in counts.iter().enumerate() {
        if count > 0 && count < k {
            return Err(Error::TooManyFolds {
                k,
                source_flag: (cell / 2) as u8,
                treat: (cell % 2) as u8,
                count,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn obs(time: f64, status: bool, treatment: bool, source: bool) -> Observation {
        Observation {
            time,
            status,
            treatment,
            source,
            covariates: vec![time, 1.0],
        }
    }

    fn balanced(n: usize) -> Dataset {
        Dataset::new(
            (0..n)
                .map(|i| obs(1.0 + i as f64, true, i % 2 == 0, (i / 2) % 2 == 0))
                .collect(),
        )
        .unwrap()
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_four_row_file() {
        let f = write_tmp(
            "time,status,treat,source,x1,x2\n\
             1.5,1,0,1,0.1,0.2\n\
             2.0,0,1,1,-0.3,1e-2\n\
             0.7,1,1,0,2,3\n\
             4,1,0,0,0,0\n",
        );
        let d = load_dataset(f.path(), &Schema::default()).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.p(), 2);
        assert_eq!(d.n1(), 2);
        assert_eq!(d.n0(), 2);
        assert_eq!(d.get(1).covariates, vec![-0.3, 0.01]);
        assert!(!d.get(1).status && d.get(1).treatment);
    }

    #[test]
    fn zero_time_names_row() {
        let f = write_tmp(
            "time,status,treat,source,x1\n1,1,0,1,0\n2,1,1,1,0\n0,1,0,0,0\n3,0,1,0,1\n",
        );
        match load_dataset(f.path(), &Schema::default()) {
            Err(Error::InvalidRows(rows)) => {
                assert_eq!(rows.len(), 1);
                assert_eq!(rows[0].row, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_every_bad_row() {
        let f = write_tmp(
            "time,status,treat,source,x1\n1,2,0,1,0\n2,1,1,1\n-1,1,0,0,0\n3,0,1,7,1\n",
        );
        match load_dataset(f.path(), &Schema::default()) {
            Err(Error::InvalidRows(rows)) => {
                let numbers: Vec<usize> = rows.iter().map(|r| r.row).collect();
                assert_eq!(numbers, vec![1, 2, 3, 4]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_reported() {
        let f = write_tmp("time,status,source,x1\n1,1,1,0\n");
        assert!(matches!(
            load_dataset(f.path(), &Schema::default()),
            Err(Error::MissingColumn(c)) if c == "treat"
        ));
    }

    #[test]
    fn mapped_covariate_names() {
        let f = write_tmp("T,d,arm,trial,age,size\n1,1,0,1,60,2\n2,0,1,1,70,1\n");
        let schema = Schema {
            time: "T".into(),
            status: "d".into(),
            treatment: "arm".into(),
            source: "trial".into(),
            covariates: Some(vec!["size".into(), "age".into()]),
        };
        let d = load_dataset(f.path(), &schema).unwrap();
        assert_eq!(d.get(0).covariates, vec![2.0, 60.0]);
    }

    #[test]
    fn write_then_load_is_exact() {
        let d = Dataset::new(vec![
            obs(0.1 + 0.2, true, false, true),
            obs(std::f64::consts::PI * 1e-7, false, true, false),
            obs(123456.789, true, true, true),
        ])
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_dataset(&d, f.path()).unwrap();
        assert_eq!(load_dataset(f.path(), &Schema::default()).unwrap(), d);
    }

    #[test]
    fn requires_trial_rows() {
        assert!(matches!(
            Dataset::new(vec![obs(1.0, true, true, false)]),
            Err(Error::NoTrialRows)
        ));
    }

    #[test]
    fn balanced_folds_are_equal() {
        let folds = split_folds(&balanced(100), 5, 3).unwrap();
        assert_eq!(folds.fold_sizes(), vec![20; 5]);
    }

    #[test]
    fn fold_assignment_is_deterministic() {
        let d = balanced(100);
        assert_eq!(split_folds(&d, 5, 11).unwrap(), split_folds(&d, 5, 11).unwrap());
        assert_ne!(split_folds(&d, 5, 11).unwrap(), split_folds(&d, 5, 12).unwrap());
    }

    #[test]
    fn uneven_folds_preserve_strata() {
        let d = balanced(103);
        let folds = split_folds(&d, 5, 9).unwrap();
        for size in folds.fold_sizes() {
            assert!(size == 20 || size == 21, "fold size {size}");
        }
        // Enumerate each (S, A) cell: per-fold counts differ by at most one.
        for cell in 0..4u8 {
            let mut per_fold = vec![0usize; 5];
            for (i, o) in d.observations().iter().enumerate() {
                if o.stratum() == cell {
                    per_fold[folds.fold_of[i]] += 1;
                }
            }
            let (lo, hi) = (per_fold.iter().min().unwrap(), per_fold.iter().max().unwrap());
            assert!(hi - lo <= 1, "cell {cell}: {per_fold:?}");
        }
    }

    #[test]
    fn too_many_folds_for_stratum() {
        let d = balanced(12);
        assert!(matches!(split_folds(&d, 4, 0), Err(Error::TooManyFolds { .. })));
        assert!(split_folds(&d, 3, 0).is_ok());
        assert!(split_folds(&d, 1, 0).is_err());
    }
}
