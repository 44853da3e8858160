//! Record/query collections with validated shape.

use crate::error::Error;
use crate::Result;

/// A retrieval workload: the records to index and the queries to look up.
///
/// Construction checks that every vector shares one dimension and contains
/// only finite values, so downstream code can lean on the shape instead of
/// re-validating it.
#[derive(Debug, Clone)]
pub struct Dataset {
    name: String,
    dim: usize,
    records: Vec<Vec<f64>>,
    queries: Vec<Vec<f64>>,
}

/// Checks a slice of vectors for uniform dimension and finite entries,
/// returning that dimension. `expected` pins the dimension when the caller
/// already knows it.
pub(crate) fn validate_vectors(
    what: &str,
    vectors: &[Vec<f64>],
    expected: Option<usize>,
) -> Result<Option<usize>> {
    let mut dim = expected;
    for (i, v) in vectors.iter().enumerate() {
        match dim {
            None => {
                if v.is_empty() {
                    return Err(Error::InvalidParameter(format!(
                        "{what} vector {i} has dimension 0"
                    )));
                }
                dim = Some(v.len());
            }
            Some(d) => {
                if v.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: v.len(),
                    });
                }
            }
        }
        if let Some(j) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                index: i * v.len() + j,
                value: v[j],
            });
        }
    }
    Ok(dim)
}

impl Dataset {
    /// Assembles a dataset from its halves. At least one vector must be
    /// present to fix the dimension.
    pub fn new(name: impl Into<String>, records: Vec<Vec<f64>>, queries: Vec<Vec<f64>>) -> Result<Dataset> {
        let dim = validate_vectors("record", &records, None)?;
        let dim = validate_vectors("query", &queries, dim)?;
        let dim = dim.ok_or_else(|| {
            Error::InvalidParameter("dataset needs at least one vector to fix its dimension".into())
        })?;
        Ok(Dataset {
            name: name.into(),
            dim,
            records,
            queries,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Dimension shared by every record and query.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn records(&self) -> &[Vec<f64>] {
        &self.records
    }

    pub fn queries(&self) -> &[Vec<f64>] {
        &self.queries
    }

    /// A desk-scale prefix of the workload: the first `n_records` records and
    /// first `n_queries` queries (clamped to what exists).
    pub fn head(&self, n_records: usize, n_queries: usize) -> Dataset {
        Dataset {
            name: format!("{}[{}r/{}q]", self.name, n_records.min(self.records.len()), n_queries.min(self.queries.len())),
            dim: self.dim,
            records: self.records[..n_records.min(self.records.len())].to_vec(),
            queries: self.queries[..n_queries.min(self.queries.len())].to_vec(),
        }
    }

    /// Consumes the dataset, handing back its halves.
    pub fn into_parts(self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (self.records, self.queries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_matching_dims() {
        let ds = Dataset::new("t", vec![vec![1.0, 2.0]], vec![vec![3.0, 4.0]]).unwrap();
        assert_eq!(ds.dim(), 2);
    }

    #[test]
    fn rejects_mixed_dims() {
        let err = Dataset::new("t", vec![vec![1.0, 2.0], vec![1.0]], vec![]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn rejects_query_dim_disagreeing_with_records() {
        assert!(Dataset::new("t", vec![vec![1.0, 2.0]], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn rejects_non_finite_entries() {
        assert!(Dataset::new("t", vec![vec![f64::INFINITY]], vec![]).is_err());
    }

    #[test]
    fn rejects_fully_empty() {
        assert!(Dataset::new("t", vec![], vec![]).is_err());
    }

    #[test]
    fn head_truncates_and_clamps() {
        let ds = Dataset::new(
            "t",
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![vec![9.0]],
        )
        .unwrap();
        let h = ds.head(2, 5);
        assert_eq!(h.records().len(), 2);
        assert_eq!(h.queries().len(), 1);
    }
}
