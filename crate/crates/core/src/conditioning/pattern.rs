//! Missingness patterns and the rectangular dataset container.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

/// Observed/missing index sets of one row. Indices are sorted, disjoint, and
/// jointly cover 0..dim; the observed set is never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingPattern {
    dim: usize,
    observed: Vec<usize>,
    missing: Vec<usize>,
}

impl MissingPattern {
    /// `mask[j] == true` means coordinate j is observed.
    pub fn from_observed_mask(mask: &[bool]) -> Result<Self> {
        let dim = mask.len();
        if dim == 0 {
            return Err(Error::InvalidParameter("empty pattern".into()));
        }
        if dim > 64 {
            return Err(Error::InvalidParameter(
                "patterns support at most 64 coordinates".into(),
            ));
        }
        let observed: Vec<usize> = (0..dim).filter(|&j| mask[j]).collect();
        let missing: Vec<usize> = (0..dim).filter(|&j| !mask[j]).collect();
        if observed.is_empty() {
            return Err(Error::EmptyObservedSet);
        }
        Ok(MissingPattern {
            dim,
            observed,
            missing,
        })
    }

    pub fn complete(dim: usize) -> Self {
        MissingPattern {
            dim,
            observed: (0..dim).collect(),
            missing: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn missing(&self) -> &[usize] {
        &self.missing
    }

    pub fn n_observed(&self) -> usize {
        self.observed.len()
    }

    pub fn n_missing(&self) -> usize {
        self.missing.len()
    }

    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    /// Bitmask key (bit j set = observed) for pattern deduplication.
    pub fn key(&self) -> u64 {
        let mut k = 0u64;
        for &j in &self.observed {
            k |= 1 << j;
        }
        k
    }

    /// Gathers the observed coordinates of a full-length row.
    pub fn gather_observed(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.observed.len(), self.observed.iter().map(|&j| x[j]))
    }
}

/// A rectangular dataset with missing cells: rows keep their full length with
/// NaN in missing slots, and every row points at one of the deduplicated
/// missingness patterns.
#[derive(Debug, Clone)]
pub struct ObservationSet {
    p: usize,
    rows: Vec<DVector<f64>>,
    patterns: Vec<MissingPattern>,
    row_pattern: Vec<usize>,
}

impl ObservationSet {
    /// Builds from rows of optional cells. Rows with no observed value are
    /// rejected: they contribute no likelihood term.
    pub fn from_optional_rows(rows: &[Vec<Option<f64>>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter("empty dataset".into()));
        }
        let p = rows[0].len();
        let mut set = ObservationSet {
            p,
            rows: Vec::with_capacity(rows.len()),
            patterns: Vec::new(),
            row_pattern: Vec::with_capacity(rows.len()),
        };
        let mut index: HashMap<u64, usize> = HashMap::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    context: "ObservationSet row",
                    expected: p,
                    got: row.len(),
                });
            }
            let mask: Vec<bool> = row.iter().map(|c| c.is_some()).collect();
            let pattern = MissingPattern::from_observed_mask(&mask).map_err(|e| match e {
                Error::EmptyObservedSet => Error::InvalidParameter(format!(
                    "row {i} has no observed coordinates"
                )),
                other => other,
            })?;
            for cell in row.iter().flatten() {
                if !cell.is_finite() {
                    return Err(Error::NonFinite {
                        context: "ObservationSet cell",
                    });
                }
            }
            let values = DVector::from_iterator(
                p,
                row.iter().map(|c| c.unwrap_or(f64::NAN)),
            );
            let key = pattern.key();
            let pid = *index.entry(key).or_insert_with(|| {
                set.patterns.push(pattern);
                set.patterns.len() - 1
            });
            set.rows.push(values);
            set.row_pattern.push(pid);
        }
        Ok(set)
    }

    /// Builds from a matrix where NaN marks missing cells.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let rows: Vec<Vec<Option<f64>>> = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .map(|j| {
                        let v = m[(i, j)];
                        if v.is_nan() {
                            None
                        } else {
                            Some(v)
                        }
                    })
                    .collect()
            })
            .collect();
        Self::from_optional_rows(&rows)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &DVector<f64> {
        &self.rows[i]
    }

    pub fn pattern_id(&self, i: usize) -> usize {
        self.row_pattern[i]
    }

    pub fn pattern_of(&self, i: usize) -> &MissingPattern {
        &self.patterns[self.row_pattern[i]]
    }

    pub fn patterns(&self) -> &[MissingPattern] {
        &self.patterns
    }

    pub fn n_incomplete(&self) -> usize {
        (0..self.n())
            .filter(|&i| !self.pattern_of(i).is_complete())
            .count()
    }

    /// Column means over observed cells; used by initialization.
    pub fn column_means(&self) -> DVector<f64> {
        let mut sums = DVector::zeros(self.p);
        let mut counts = vec![0usize; self.p];
        for (i, row) in self.rows.iter().enumerate() {
            for &j in self.pattern_of(i).observed() {
                sums[j] += row[j];
                counts[j] += 1;
            }
        }
        for j in 0..self.p {
            sums[j] /= counts[j].max(1) as f64;
        }
        sums
    }

    /// A complete copy with missing cells replaced by column means.
    pub fn column_mean_imputed(&self) -> DMatrix<f64> {
        let means = self.column_means();
        let mut m = DMatrix::zeros(self.n(), self.p);
        for i in 0..self.n() {
            for j in 0..self.p {
                let v = self.rows[i][j];
                m[(i, j)] = if v.is_nan() { means[j] } else { v };
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_bookkeeping() {
        let p = MissingPattern::from_observed_mask(&[true, false, true, false]).unwrap();
        assert_eq!(p.observed(), &[0, 2]);
        assert_eq!(p.missing(), &[1, 3]);
        assert_eq!(p.key(), 0b0101);
        assert!(!p.is_complete());
        assert!(MissingPattern::from_observed_mask(&[false, false]).is_err());
    }

    #[test]
    fn dataset_rejects_all_missing_rows() {
        let rows = vec![vec![Some(1.0), None], vec![None, None]];
        assert!(ObservationSet::from_optional_rows(&rows).is_err());
    }

    #[test]
    fn dataset_deduplicates_patterns() {
        let rows = vec![
            vec![Some(1.0), None],
            vec![Some(2.0), Some(3.0)],
            vec![Some(4.0), None],
        ];
        let d = ObservationSet::from_optional_rows(&rows).unwrap();
        assert_eq!(d.patterns().len(), 2);
        assert_eq!(d.pattern_id(0), d.pattern_id(2));
        assert_eq!(d.n_incomplete(), 2);
    }

    #[test]
    fn column_means_skip_missing() {
        let rows = vec![
            vec![Some(1.0), Some(10.0)],
            vec![Some(3.0), None],
        ];
        let d = ObservationSet::from_optional_rows(&rows).unwrap();
        let m = d.column_means();
        assert_eq!(m[0], 2.0);
        assert_eq!(m[1], 10.0);
        let filled = d.column_mean_imputed();
        assert_eq!(filled[(1, 1)], 10.0);
    }
}
