use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::DataError;
use crate::matrix::Matrix;

/// Physical range of the temperature sensors, in Celsius.
pub const DEFAULT_VALID_RANGE: (f64, f64) = (-20.0, 60.0);

/// Timestamped readings for a set of sensor locations.
///
/// Rows are samples, columns are sensors. Construction validates shape,
/// strictly increasing timestamps and that every reading lies in `valid_range`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    sensor_ids: Vec<String>,
    timestamps: Vec<i64>,
    readings: Matrix,
    valid_range: (f64, f64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// Drop any row containing a blank or unparsable cell.
    #[default]
    DropRow,
    /// Fail on the first blank or unparsable cell.
    Reject,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadOptions {
    pub valid_range: (f64, f64),
    pub missing: MissingPolicy,
    pub min_samples: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            valid_range: DEFAULT_VALID_RANGE,
            missing: MissingPolicy::DropRow,
            min_samples: 10,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// File line numbers (1-based, header is line 1) of dropped rows.
    pub dropped_lines: Vec<u64>,
}

impl LoadReport {
    pub fn dropped_rows(&self) -> usize {
        self.dropped_lines.len()
    }
}

impl Dataset {
    pub fn new(
        sensor_ids: Vec<String>,
        timestamps: Vec<i64>,
        readings: Matrix,
        valid_range: (f64, f64),
    ) -> Result<Self, DataError> {
        let (lo, hi) = valid_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(DataError::Invalid(format!(
                "valid range [{lo}, {hi}] must be finite with min < max"
            )));
        }
        if readings.rows() != timestamps.len() {
            return Err(DataError::Invalid(format!(
                "{} reading rows but {} timestamps",
                readings.rows(),
                timestamps.len()
            )));
        }
        if readings.cols() != sensor_ids.len() {
            return Err(DataError::Invalid(format!(
                "{} reading columns but {} sensor ids",
                readings.cols(),
                sensor_ids.len()
            )));
        }
        check_unique(&sensor_ids)?;
        for (i, w) in timestamps.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(DataError::NonMonotoneTimestamps {
                    line: i as u64 + 3,
                });
            }
        }
        for (i, row) in readings.iter_rows().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !(v >= lo && v <= hi) {
                    return Err(DataError::OutOfRange {
                        line: i as u64 + 2,
                        sensor: sensor_ids[j].clone(),
                        value: v,
                        min: lo,
                        max: hi,
                    });
                }
            }
        }
        Ok(Self {
            sensor_ids,
            timestamps,
            readings,
            valid_range,
        })
    }

    pub fn sensor_ids(&self) -> &[String] {
        &self.sensor_ids
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn readings(&self) -> &Matrix {
        &self.readings
    }

    pub fn valid_range(&self) -> (f64, f64) {
        self.valid_range
    }

    pub fn n_samples(&self) -> usize {
        self.timestamps.len()
    }

    pub fn n_sensors(&self) -> usize {
        self.sensor_ids.len()
    }

    pub fn sensor_index(&self, id: &str) -> Option<usize> {
        self.sensor_ids.iter().position(|s| s == id)
    }

    /// Column indices of `ids`, in the given order.
    pub fn sensor_indices(&self, ids: &[String]) -> Result<Vec<usize>, DataError> {
        ids.iter()
            .map(|id| {
                self.sensor_index(id)
                    .ok_or_else(|| DataError::UnknownSensor(id.clone()))
            })
            .collect()
    }

    /// Sub-dataset restricted to the given sample rows (kept in the given order).
    pub fn select_samples(&self, rows: &[usize]) -> Dataset {
        Dataset {
            sensor_ids: self.sensor_ids.clone(),
            timestamps: rows.iter().map(|&r| self.timestamps[r]).collect(),
            readings: self.readings.select_rows(rows),
            valid_range: self.valid_range,
        }
    }

    /// Sub-dataset restricted to the named sensors, in the given order.
    pub fn select_sensors(&self, ids: &[String]) -> Result<Dataset, DataError> {
        let idx = self.sensor_indices(ids)?;
        Ok(Dataset {
            sensor_ids: ids.to_vec(),
            timestamps: self.timestamps.clone(),
            readings: self.readings.select_columns(&idx),
            valid_range: self.valid_range,
        })
    }

    pub fn load_csv(path: &Path, opts: &LoadOptions) -> Result<(Dataset, LoadReport), DataError> {
        let file = std::fs::File::open(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                DataError::NotFound(path.to_path_buf())
            } else {
                DataError::Io {
                    path: path.to_path_buf(),
                    source: e,
                }
            }
        })?;
        Self::read_csv(std::io::BufReader::new(file), opts)
    }

    pub fn read_csv<R: Read>(reader: R, opts: &LoadOptions) -> Result<(Dataset, LoadReport), DataError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        match header.get(0) {
            Some("timestamp") => {}
            Some(other) => {
                return Err(DataError::MalformedHeader(format!(
                    "first column must be `timestamp`, found {other:?}"
                )))
            }
            None => return Err(DataError::MalformedHeader("empty header".into())),
        }
        let sensor_ids: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        if let Some(blank) = sensor_ids.iter().position(String::is_empty) {
            return Err(DataError::MalformedHeader(format!(
                "sensor column {} has an empty name",
                blank + 1
            )));
        }
        check_unique(&sensor_ids).map_err(|e| DataError::MalformedHeader(e.to_string()))?;
        if sensor_ids.len() < 2 {
            return Err(DataError::TooFewSensors(sensor_ids.len()));
        }

        let n = sensor_ids.len();
        let (lo, hi) = opts.valid_range;
        let mut timestamps = Vec::new();
        let mut data = Vec::new();
        let mut report = LoadReport::default();
        let mut row_buf = Vec::with_capacity(n);
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() > n + 1 {
                return Err(DataError::MalformedHeader(format!(
                    "line {line} has {} cells, header has {}",
                    rec.len(),
                    n + 1
                )));
            }
            let ts_cell = rec.get(0).unwrap_or("");
            let ts = parse_timestamp(ts_cell);
            if ts.is_none() {
                match opts.missing {
                    MissingPolicy::DropRow => {
                        report.dropped_lines.push(line);
                        continue;
                    }
                    MissingPolicy::Reject => {
                        return Err(DataError::BadTimestamp {
                            line,
                            value: ts_cell.to_owned(),
                        })
                    }
                }
            }
            row_buf.clear();
            let mut missing = None;
            for (j, id) in sensor_ids.iter().enumerate() {
                let cell = rec.get(j + 1).unwrap_or("");
                match cell.parse::<f64>().ok().filter(|v| v.is_finite()) {
                    Some(v) => {
                        if !(v >= lo && v <= hi) {
                            return Err(DataError::OutOfRange {
                                line,
                                sensor: id.clone(),
                                value: v,
                                min: lo,
                                max: hi,
                            });
                        }
                        row_buf.push(v);
                    }
                    None => {
                        if missing.is_none() {
                            missing = Some((id.clone(), cell.to_owned()));
                        }
                    }
                }
            }
            if let Some((sensor, value)) = missing {
                match opts.missing {
                    MissingPolicy::DropRow => {
                        report.dropped_lines.push(line);
                        continue;
                    }
                    MissingPolicy::Reject => {
                        return Err(DataError::MissingValue {
                            line,
                            sensor,
                            value,
                        })
                    }
                }
            }
            let ts = ts.expect("checked above");
            if let Some(&prev) = timestamps.last() {
                if ts <= prev {
                    return Err(DataError::NonMonotoneTimestamps { line });
                }
            }
            timestamps.push(ts);
            data.extend_from_slice(&row_buf);
        }
        if timestamps.len() < opts.min_samples.max(1) {
            return Err(DataError::TooFewSamples {
                found: timestamps.len(),
                min: opts.min_samples.max(1),
            });
        }
        let rows = timestamps.len();
        let readings = Matrix::from_vec(rows, n, data).expect("row width checked");
        let ds = Dataset::new(sensor_ids, timestamps, readings, opts.valid_range)?;
        Ok((ds, report))
    }

    /// Writes `timestamp,<sensor ids...>` with integer epoch-second timestamps.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(std::iter::once("timestamp").chain(self.sensor_ids.iter().map(String::as_str)))?;
        let mut cells = Vec::with_capacity(self.n_sensors() + 1);
        for (ts, row) in self.timestamps.iter().zip(self.readings.iter_rows()) {
            cells.clear();
            cells.push(ts.to_string());
            cells.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&cells)?;
        }
        w.flush().map_err(|e| DataError::Csv(e.into()))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), DataError> {
        let file = std::fs::File::create(path).map_err(|e| DataError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn check_unique(ids: &[String]) -> Result<(), DataError> {
    let mut seen = std::collections::HashSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(DataError::DuplicateSensor(id.clone()));
        }
    }
    Ok(())
}

/// Integer epoch seconds, RFC 3339, or a naive ISO-8601 date-time taken as UTC.
pub(crate) fn parse_timestamp(s: &str) -> Option<i64> {
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|dt| dt.and_utc().timestamp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_with(rows: &[String], n_sensors: usize) -> String {
        let mut s = String::from("timestamp");
        for j in 0..n_sensors {
            s.push_str(&format!(",s{j:02}"));
        }
        s.push('\n');
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    fn row(ts: i64, vals: &[&str]) -> String {
        std::iter::once(ts.to_string())
            .chain(vals.iter().map(|v| v.to_string()))
            .collect::<Vec<_>>()
            .join(",")
    }

    fn loose() -> LoadOptions {
        LoadOptions {
            min_samples: 1,
            ..LoadOptions::default()
        }
    }

    #[test]
    fn loads_23_sensor_file() {
        let vals: Vec<String> = (0..23).map(|j| format!("{}.5", j)).collect();
        let vals: Vec<&str> = vals.iter().map(String::as_str).collect();
        let rows: Vec<String> = (0..3).map(|i| row(1000 + i, &vals)).collect();
        let (ds, rep) = Dataset::read_csv(csv_with(&rows, 23).as_bytes(), &loose()).unwrap();
        assert_eq!(ds.n_samples(), 3);
        assert_eq!(ds.n_sensors(), 23);
        assert_eq!(ds.readings()[(2, 22)], 22.5);
        assert_eq!(rep.dropped_rows(), 0);
    }

    #[test]
    fn out_of_range_names_cell() {
        let rows = vec![row(1, &["10", "20"]), row(2, &["75.0", "20"])];
        let err = Dataset::read_csv(csv_with(&rows, 2).as_bytes(), &loose()).unwrap_err();
        match err {
            DataError::OutOfRange {
                line, sensor, value, ..
            } => {
                assert_eq!(line, 3);
                assert_eq!(sensor, "s00");
                assert_eq!(value, 75.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blank_cell_drops_row() {
        let mut rows: Vec<String> = (0..12).map(|i| row(i, &["1", "2", "3"])).collect();
        rows[4] = row(4, &["1", "", "3"]);
        let text = csv_with(&rows, 3);
        let (ds, rep) = Dataset::read_csv(text.as_bytes(), &LoadOptions::default()).unwrap();
        assert_eq!(ds.n_samples(), 11);
        assert_eq!(rep.dropped_rows(), 1);
        assert_eq!(rep.dropped_lines, vec![6]);

        let strict = LoadOptions {
            missing: MissingPolicy::Reject,
            ..LoadOptions::default()
        };
        assert!(matches!(
            Dataset::read_csv(text.as_bytes(), &strict),
            Err(DataError::MissingValue { line: 6, .. })
        ));
    }

    #[test]
    fn short_files_and_headers_rejected() {
        let rows: Vec<String> = (0..3).map(|i| row(i, &["1", "2"])).collect();
        assert!(matches!(
            Dataset::read_csv(csv_with(&rows, 2).as_bytes(), &LoadOptions::default()),
            Err(DataError::TooFewSamples { found: 3, min: 10 })
        ));
        let one: Vec<String> = (0..12).map(|i| row(i, &["1"])).collect();
        assert!(matches!(
            Dataset::read_csv(csv_with(&one, 1).as_bytes(), &LoadOptions::default()),
            Err(DataError::TooFewSensors(1))
        ));
        let bad = "time,a,b\n1,2,3\n";
        assert!(matches!(
            Dataset::read_csv(bad.as_bytes(), &loose()),
            Err(DataError::MalformedHeader(_))
        ));
        assert!(matches!(
            Dataset::load_csv(Path::new("/nonexistent/x.csv"), &loose()),
            Err(DataError::NotFound(_))
        ));
    }

    #[test]
    fn timestamps_must_increase() {
        let rows = vec![row(5, &["1", "2"]), row(5, &["1", "2"])];
        assert!(matches!(
            Dataset::read_csv(csv_with(&rows, 2).as_bytes(), &loose()),
            Err(DataError::NonMonotoneTimestamps { line: 3 })
        ));
    }

    #[test]
    fn iso_timestamps() {
        assert_eq!(parse_timestamp("1970-01-01T00:01:00Z"), Some(60));
        assert_eq!(parse_timestamp("1970-01-02 00:00:00"), Some(86_400));
        assert_eq!(parse_timestamp("1700000000"), Some(1_700_000_000));
        assert_eq!(parse_timestamp("yesterday"), None);
    }

    #[test]
    fn write_then_read() {
        let m = Matrix::from_rows(&[[1.25, -3.0], [0.1, 59.9]]).unwrap();
        let ds = Dataset::new(vec!["a".into(), "b".into()], vec![10, 20], m, DEFAULT_VALID_RANGE).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let (back, _) = Dataset::read_csv(buf.as_slice(), &loose()).unwrap();
        assert_eq!(back, ds);
    }
}
