//! Ingest of S-N observations: CSV parsing, max-scaling of both columns,
//! and the data anchors every reparameterization is built on.

use serde::{Deserialize, Serialize};
use std::io::Read;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("missing column '{0}'")]
    MissingColumn(&'static str),
    #[error("non-positive {column} at row {row}")]
    NonPositive { column: &'static str, row: usize },
    #[error("unparseable {column} at row {row}: {token:?}")]
    BadNumber {
        column: &'static str,
        row: usize,
        token: String,
    },
    #[error("unknown status token {token:?} at row {row}")]
    BadStatus { token: String, row: usize },
    #[error("csv error: {0}")]
    Csv(String),
    #[error("empty observation list")]
    Empty,
    #[error("no failures: anchors undefined")]
    NoFailures,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Failure,
    Runout,
}

impl Status {
    pub fn is_failure(self) -> bool {
        matches!(self, Status::Failure)
    }
}

/// One stress/cycles record. `cycles` is cycles-to-failure for failures and
/// the censoring time for runouts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub stress: f64,
    pub cycles: f64,
    pub status: Status,
}

impl Observation {
    pub fn new(stress: f64, cycles: f64, status: Status) -> Observation {
        Observation {
            stress,
            cycles,
            status,
        }
    }
}

/// Column maxima used to scale the raw data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingMeta {
    pub s_max: f64,
    pub n_max: f64,
}

impl ScalingMeta {
    pub fn identity() -> ScalingMeta {
        ScalingMeta {
            s_max: 1.0,
            n_max: 1.0,
        }
    }
}

/// Anchor quantities on the scaled data. `n_high` and the stress anchors are
/// taken over failures only; `n_low` over every observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataAnchors {
    /// smallest cycles value in the data (failures and runouts)
    pub n_low: f64,
    /// largest cycles value among failures
    pub n_high: f64,
    /// log-scale midpoint of n_low and n_high
    pub n_mid: f64,
    /// smallest stress among failures
    pub s_low_fail: f64,
    /// largest stress among failures
    pub s_high_fail: f64,
    /// largest stress over all observations (1 after scaling)
    pub s_high_all: f64,
    /// mean of log stress over all observations
    pub mean_log_stress: f64,
}

/// Scaled observations plus the metadata needed to undo the scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SNDataset {
    pub observations: Vec<Observation>,
    pub scaling: ScalingMeta,
    pub anchors: DataAnchors,
}

impl SNDataset {
    pub fn n_failures(&self) -> usize {
        self.observations
            .iter()
            .filter(|o| o.status.is_failure())
            .count()
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// Parse raw (unscaled) observations from CSV. The header must name
/// `stress`, `cycles`, and `status` columns (any order, case-insensitive);
/// an optional `count` column expands row multiplicity.
pub fn load_csv<R: Read>(source: R) -> Result<Vec<Observation>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| DatasetError::Csv(e.to_string()))?
        .clone();
    let find = |name: &'static str| -> Option<usize> {
        headers.iter().position(|h| h.eq_ignore_ascii_case(name))
    };
    let stress_col = find("stress").ok_or(DatasetError::MissingColumn("stress"))?;
    let cycles_col = find("cycles").ok_or(DatasetError::MissingColumn("cycles"))?;
    let status_col = find("status").ok_or(DatasetError::MissingColumn("status"))?;
    let count_col = find("count");

    let parse_positive = |record: &csv::StringRecord,
                          col: usize,
                          name: &'static str,
                          row: usize|
     -> Result<f64, DatasetError> {
        let token = record.get(col).unwrap_or("");
        let value: f64 = token.parse().map_err(|_| DatasetError::BadNumber {
            column: name,
            row,
            token: token.to_string(),
        })?;
        if !(value > 0.0) || !value.is_finite() {
            return Err(DatasetError::NonPositive { column: name, row });
        }
        Ok(value)
    };

    let mut out = Vec::new();
    // header is row 1; first data record is row 2
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| DatasetError::Csv(e.to_string()))?;
        let stress = parse_positive(&record, stress_col, "stress", row)?;
        let cycles = parse_positive(&record, cycles_col, "cycles", row)?;
        let status_token = record.get(status_col).unwrap_or("");
        let status = match status_token.to_ascii_lowercase().as_str() {
            "failure" => Status::Failure,
            "runout" => Status::Runout,
            _ => {
                return Err(DatasetError::BadStatus {
                    token: status_token.to_string(),
                    row,
                })
            }
        };
        let count = match count_col {
            None => 1usize,
            Some(col) => {
                let token = record.get(col).unwrap_or("1");
                let token = if token.is_empty() { "1" } else { token };
                let n: usize = token.parse().map_err(|_| DatasetError::BadNumber {
                    column: "count",
                    row,
                    token: token.to_string(),
                })?;
                if n == 0 {
                    return Err(DatasetError::NonPositive {
                        column: "count",
                        row,
                    });
                }
                n
            }
        };
        for _ in 0..count {
            out.push(Observation::new(stress, cycles, status));
        }
    }
    Ok(out)
}

/// Divide both columns by their maxima and compute the anchors.
pub fn scale(raw: &[Observation]) -> Result<SNDataset, DatasetError> {
    if raw.is_empty() {
        return Err(DatasetError::Empty);
    }
    if !raw.iter().any(|o| o.status.is_failure()) {
        return Err(DatasetError::NoFailures);
    }
    let s_max = raw.iter().map(|o| o.stress).fold(f64::MIN, f64::max);
    let n_max = raw.iter().map(|o| o.cycles).fold(f64::MIN, f64::max);
    let observations: Vec<Observation> = raw
        .iter()
        .map(|o| Observation::new(o.stress / s_max, o.cycles / n_max, o.status))
        .collect();
    let anchors = compute_anchors(&observations)?;
    Ok(SNDataset {
        observations,
        scaling: ScalingMeta { s_max, n_max },
        anchors,
    })
}

/// Anchor quantities from (already scaled) observations.
pub fn compute_anchors(observations: &[Observation]) -> Result<DataAnchors, DatasetError> {
    if observations.is_empty() {
        return Err(DatasetError::Empty);
    }
    let failures: Vec<&Observation> = observations
        .iter()
        .filter(|o| o.status.is_failure())
        .collect();
    if failures.is_empty() {
        return Err(DatasetError::NoFailures);
    }
    let n_low = observations
        .iter()
        .map(|o| o.cycles)
        .fold(f64::INFINITY, f64::min);
    let n_high = failures.iter().map(|o| o.cycles).fold(f64::MIN, f64::max);
    // clamp so the ordering n_low <= n_mid <= n_high survives rounding
    let n_mid = ((n_low.ln() + n_high.ln()) / 2.0).exp().clamp(n_low, n_high);
    let s_low_fail = failures
        .iter()
        .map(|o| o.stress)
        .fold(f64::INFINITY, f64::min);
    let s_high_fail = failures.iter().map(|o| o.stress).fold(f64::MIN, f64::max);
    let s_high_all = observations
        .iter()
        .map(|o| o.stress)
        .fold(f64::MIN, f64::max);
    let mean_log_stress = observations.iter().map(|o| o.stress.ln()).sum::<f64>()
        / observations.len() as f64;
    Ok(DataAnchors {
        n_low,
        n_high,
        n_mid,
        s_low_fail,
        s_high_fail,
        s_high_all,
        mean_log_stress,
    })
}

/// Dataset echo document: scaled observations plus the scaling metadata.
pub fn echo_json(data: &SNDataset) -> serde_json::Value {
    serde_json::json!({
        "observations": data.observations,
        "scaling": data.scaling,
    })
}

/// Load, scale, and anchor in one step.
pub fn load_and_scale<R: Read>(source: R) -> Result<SNDataset, DatasetError> {
    let raw = load_csv(source)?;
    scale(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn obs(stress: f64, cycles: f64, status: Status) -> Observation {
        Observation::new(stress, cycles, status)
    }

    #[test]
    fn load_simple_row() {
        let rows = load_csv("stress,cycles,status\n100,2000,failure".as_bytes()).unwrap();
        assert_eq!(rows, vec![obs(100.0, 2000.0, Status::Failure)]);
    }

    #[test]
    fn load_rejects_non_positive_cycles_naming_row() {
        let err = load_csv("stress,cycles,status\n100,0,failure".as_bytes()).unwrap_err();
        assert_eq!(
            err.to_string(),
            "non-positive cycles at row 2"
        );
    }

    #[test]
    fn load_status_case_insensitive() {
        let rows = load_csv("stress,cycles,status\n10,20,RUNOUT".as_bytes()).unwrap();
        assert_eq!(rows[0].status, Status::Runout);
    }

    #[test]
    fn load_rejects_missing_column_and_bad_status() {
        let err = load_csv("stress,cycles\n10,20".as_bytes()).unwrap_err();
        assert_eq!(err, DatasetError::MissingColumn("status"));
        let err = load_csv("stress,cycles,status\n10,20,flew".as_bytes()).unwrap_err();
        assert!(matches!(err, DatasetError::BadStatus { row: 2, .. }));
    }

    #[test]
    fn count_column_expands() {
        let rows =
            load_csv("stress,cycles,status,count\n10,20,failure,3\n5,9,runout,1".as_bytes())
                .unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[2], obs(10.0, 20.0, Status::Failure));
    }

    #[test]
    fn scale_divides_by_maxima() {
        let data = scale(&[
            obs(50.0, 1e3, Status::Failure),
            obs(100.0, 1e6, Status::Failure),
        ])
        .unwrap();
        assert_eq!(data.scaling.s_max, 100.0);
        assert_eq!(data.scaling.n_max, 1e6);
        assert_eq!(data.observations[0].stress, 0.5);
        assert_eq!(data.observations[0].cycles, 1e-3);
        assert_eq!(data.observations[1].stress, 1.0);
        assert_eq!(data.observations[1].cycles, 1.0);
    }

    #[test]
    fn scale_single_failure_is_identity_after_scaling() {
        let data = scale(&[obs(7.0, 3.0, Status::Failure)]).unwrap();
        assert_eq!(data.observations[0], obs(1.0, 1.0, Status::Failure));
        assert_eq!(data.scaling.s_max, 7.0);
        assert_eq!(data.scaling.n_max, 3.0);
        // degenerate anchors collapse to a point
        assert_eq!(data.anchors.n_low, data.anchors.n_high);
        assert_eq!(data.anchors.n_low, data.anchors.n_mid);
    }

    #[test]
    fn scale_all_runouts_errors() {
        let err = scale(&[obs(1.0, 1.0, Status::Runout)]).unwrap_err();
        assert_eq!(err.to_string(), "no failures: anchors undefined");
    }

    #[test]
    fn anchors_split_failures_and_runouts() {
        let data = scale(&[
            obs(3.0, 10.0, Status::Failure),
            obs(2.0, 1000.0, Status::Failure),
            obs(1.0, 5000.0, Status::Runout),
        ])
        .unwrap();
        let a = data.anchors;
        let n_max = data.scaling.n_max;
        assert_relative_eq!(a.n_low * n_max, 10.0, max_relative = 1e-12);
        assert_relative_eq!(a.n_high * n_max, 1000.0, max_relative = 1e-12);
        assert_relative_eq!(a.n_mid * n_max, 100.0, max_relative = 1e-12);
        assert_relative_eq!(a.s_low_fail * data.scaling.s_max, 2.0, max_relative = 1e-12);
        assert_relative_eq!(a.s_high_fail * data.scaling.s_max, 3.0, max_relative = 1e-12);
        assert_eq!(a.s_high_all, 1.0);
    }

    #[test]
    fn anchors_runout_counts_for_n_low() {
        let data = scale(&[
            obs(1.0, 1.0, Status::Runout),
            obs(2.0, 100.0, Status::Failure),
        ])
        .unwrap();
        assert_relative_eq!(
            data.anchors.n_low * data.scaling.n_max,
            1.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            data.anchors.n_high * data.scaling.n_max,
            100.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn anchors_order_invariants() {
        let data = scale(&[
            obs(3.0, 17.0, Status::Failure),
            obs(2.5, 420.0, Status::Failure),
            obs(2.0, 9000.0, Status::Runout),
        ])
        .unwrap();
        let a = data.anchors;
        assert!(a.n_low <= a.n_mid && a.n_mid <= a.n_high);
        assert_relative_eq!(
            a.n_mid.ln(),
            0.5 * (a.n_low.ln() + a.n_high.ln()),
            max_relative = 1e-14
        );
        assert!(a.s_low_fail <= a.s_high_fail);
    }

    #[test]
    fn anchors_permutation_invariant() {
        let rows = vec![
            obs(3.0, 17.0, Status::Failure),
            obs(2.5, 420.0, Status::Failure),
            obs(2.0, 9000.0, Status::Runout),
            obs(1.5, 33333.0, Status::Failure),
        ];
        let a = scale(&rows).unwrap().anchors;
        let mut rev = rows.clone();
        rev.reverse();
        let b = scale(&rev).unwrap().anchors;
        assert_eq!(a.n_low, b.n_low);
        assert_eq!(a.n_high, b.n_high);
        assert_eq!(a.s_low_fail, b.s_low_fail);
        assert_eq!(a.s_high_fail, b.s_high_fail);
        assert_relative_eq!(a.mean_log_stress, b.mean_log_stress, max_relative = 1e-12);
    }

    #[test]
    fn prescaling_by_constant_is_absorbed() {
        let rows = vec![
            obs(3.0, 17.0, Status::Failure),
            obs(2.5, 420.0, Status::Failure),
            obs(2.0, 9000.0, Status::Runout),
        ];
        let base = scale(&rows).unwrap();
        let boosted: Vec<Observation> = rows
            .iter()
            .map(|o| obs(o.stress * 17.3, o.cycles * 1e4, o.status))
            .collect();
        let re = scale(&boosted).unwrap();
        for (a, b) in base.observations.iter().zip(re.observations.iter()) {
            assert_relative_eq!(a.stress, b.stress, max_relative = 1e-15);
            assert_relative_eq!(a.cycles, b.cycles, max_relative = 1e-15);
        }
        assert_relative_eq!(re.scaling.s_max, 3.0 * 17.3, max_relative = 1e-15);
    }
}
