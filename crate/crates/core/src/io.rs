//! CSV ingestion and output.
//!
//! Coordinates are parsed as decimal degrees and validated on the way in;
//! every other column is carried as an opaque string. Output is RFC 4180 with
//! LF line endings, and coordinates are written with the shortest decimal
//! form that parses back to the same `f64`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::geo::{CoordinateError, GeoPoint, RadianPoint};
use crate::reduce::ReducedDataset;

pub const DEFAULT_LAT_COL: &str = "lat";
pub const DEFAULT_LON_COL: &str = "lon";

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("cannot open {}: {source}", path.display())]
    Open { path: PathBuf, source: std::io::Error },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column \"{0}\"")]
    MissingColumn(String),
    #[error("row {row}: cannot parse {column} value \"{value}\" as a finite number")]
    InvalidCoordinate { row: usize, column: String, value: String },
    #[error("row {row}: {column} value {value} is out of range")]
    OutOfRange { row: usize, column: String, value: f64 },
    #[error("no data rows")]
    Empty,
}

#[derive(Debug, thiserror::Error)]
#[error("cannot write {}: {source}", path.display())]
pub struct WriteError {
    pub path: PathBuf,
    pub source: csv::Error,
}

/// Column layout of a dataset: every header name in file order plus the
/// positions of the two coordinate columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    columns: Vec<String>,
    lat: usize,
    lon: usize,
}

impl Schema {
    pub fn new(columns: Vec<String>, lat_col: &str, lon_col: &str) -> Result<Self, ReadError> {
        let find = |name: &str| {
            columns
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| ReadError::MissingColumn(name.to_string()))
        };
        let lat = find(lat_col)?;
        let lon = find(lon_col)?;
        Ok(Schema { columns, lat, lon })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn lat_col(&self) -> &str {
        &self.columns[self.lat]
    }

    pub fn lon_col(&self) -> &str {
        &self.columns[self.lon]
    }

    /// Non-coordinate column names in file order; [`Record::attributes`]
    /// follows this order.
    pub fn attribute_columns(&self) -> impl Iterator<Item = &str> {
        self.columns
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.lat && i != self.lon)
            .map(|(_, c)| c.as_str())
    }

    fn is_coordinate(&self, column: usize) -> bool {
        column == self.lat || column == self.lon
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub row_index: usize,
    pub point: GeoPoint,
    /// Values of [`Schema::attribute_columns`], in that order.
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    records: Vec<Record>,
}

impl Dataset {
    /// Builds a dataset from already validated records, renumbering
    /// `row_index` to `0..n`.
    pub fn new(schema: Schema, mut records: Vec<Record>) -> Self {
        for (i, r) in records.iter_mut().enumerate() {
            r.row_index = i;
        }
        Dataset { schema, records }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
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

    pub fn point(&self, row: usize) -> GeoPoint {
        self.records[row].point
    }

    pub fn radian_points(&self) -> Vec<RadianPoint> {
        self.records.iter().map(|r| r.point.to_radians()).collect()
    }

    pub fn attribute(&self, row: usize, column: &str) -> Option<&str> {
        let pos = self.schema.attribute_columns().position(|c| c == column)?;
        Some(self.records[row].attributes[pos].as_str())
    }
}

pub fn read_csv(path: impl AsRef<Path>, lat_col: &str, lon_col: &str) -> Result<Dataset, ReadError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| ReadError::Open { path: path.to_path_buf(), source })?;
    read_csv_from(file, lat_col, lon_col)
}

pub fn read_csv_from(reader: impl Read, lat_col: &str, lon_col: &str) -> Result<Dataset, ReadError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let columns: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    let schema = Schema::new(columns, lat_col, lon_col)?;

    let mut records = Vec::new();
    for (row_index, result) in csv.records().enumerate() {
        let row = row_index + 1;
        let fields = result?;
        let coord = |col: usize| -> Result<f64, ReadError> {
            let raw = &fields[col];
            raw.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ReadError::InvalidCoordinate {
                    row,
                    column: schema.columns[col].clone(),
                    value: raw.to_string(),
                })
        };
        let (lat, lon) = (coord(schema.lat)?, coord(schema.lon)?);
        let point = GeoPoint::new(lat, lon).map_err(|e| match e {
            CoordinateError::OutOfRange { axis, value } | CoordinateError::NotFinite { axis, value } => {
                let col = match axis {
                    crate::geo::Axis::Latitude => schema.lat,
                    crate::geo::Axis::Longitude => schema.lon,
                };
                ReadError::OutOfRange { row, column: schema.columns[col].clone(), value }
            }
        })?;
        let attributes = fields
            .iter()
            .enumerate()
            .filter(|&(i, _)| !schema.is_coordinate(i))
            .map(|(_, v)| v.to_string())
            .collect();
        records.push(Record { row_index, point, attributes });
    }
    if records.is_empty() {
        return Err(ReadError::Empty);
    }
    Ok(Dataset { schema, records })
}

/// Writes a dataset back out with its original column order.
pub fn write_dataset_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), WriteError> {
    let path = path.as_ref();
    write_to_path(path, |w| {
        w.write_record(dataset.schema.columns())?;
        for r in &dataset.records {
            w.write_record(row_fields(&dataset.schema, r.point, &r.attributes))?;
        }
        Ok(())
    })
}

/// Writes one row per reduced record: the original columns in original
/// order followed by `cluster_label` and `cluster_size`.
pub fn write_csv(reduced: &ReducedDataset, schema: &Schema, path: impl AsRef<Path>) -> Result<(), WriteError> {
    let path = path.as_ref();
    write_to_path(path, |w| write_reduced(reduced, schema, w))
}

pub fn write_csv_to<W: Write>(reduced: &ReducedDataset, schema: &Schema, out: W) -> Result<(), csv::Error> {
    let mut w = writer(out);
    write_reduced(reduced, schema, &mut w)?;
    w.flush()?;
    Ok(())
}

fn write_reduced<W: Write>(reduced: &ReducedDataset, schema: &Schema, w: &mut csv::Writer<W>) -> Result<(), csv::Error> {
    let header = schema
        .columns()
        .iter()
        .map(String::as_str)
        .chain(["cluster_label", "cluster_size"]);
    w.write_record(header)?;
    for r in &reduced.records {
        let mut fields = row_fields(schema, r.point, &r.attributes);
        fields.push(r.cluster_label.to_string());
        fields.push(r.cluster_size.to_string());
        w.write_record(&fields)?;
    }
    Ok(())
}

fn row_fields(schema: &Schema, point: GeoPoint, attributes: &[String]) -> Vec<String> {
    let mut attrs = attributes.iter();
    (0..schema.columns.len())
        .map(|i| {
            if i == schema.lat {
                format_coordinate(point.lat_deg)
            } else if i == schema.lon {
                format_coordinate(point.lon_deg)
            } else {
                attrs.next().cloned().unwrap_or_default()
            }
        })
        .collect()
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_coordinate(v: f64) -> String {
    format!("{v}")
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn write_to_path(
    path: &Path,
    body: impl FnOnce(&mut csv::Writer<File>) -> Result<(), csv::Error>,
) -> Result<(), WriteError> {
    let wrap = |source: csv::Error| WriteError { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(|e| wrap(e.into()))?;
    let mut w = writer(file);
    body(&mut w).map_err(wrap)?;
    w.flush().map_err(|e| wrap(e.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn read(text: &str) -> Result<Dataset, ReadError> {
        read_csv_from(text.as_bytes(), DEFAULT_LAT_COL, DEFAULT_LON_COL)
    }

    #[test]
    fn reads_attributes() {
        let d = read("lat,lon,city\n41.37,2.15,Barcelona\n").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.point(0), GeoPoint { lat_deg: 41.37, lon_deg: 2.15 });
        assert_eq!(d.attribute(0, "city"), Some("Barcelona"));
        assert_eq!(d.attribute(0, "lat"), None);
        assert_eq!(d.records()[0].row_index, 0);
    }

    #[test]
    fn column_order_is_free() {
        let d = read("date,lon,city,lat\n2014-05-14,2.15,Barcelona, 41.37 \n").unwrap();
        assert_eq!(d.point(0), GeoPoint { lat_deg: 41.37, lon_deg: 2.15 });
        assert_eq!(d.schema().attribute_columns().collect::<Vec<_>>(), ["date", "city"]);
        assert_eq!(d.records()[0].attributes, ["2014-05-14", "Barcelona"]);
    }

    #[test]
    fn custom_coordinate_columns() {
        let d = read_csv_from("y,x\n1,2\n".as_bytes(), "y", "x").unwrap();
        assert_eq!(d.point(0), GeoPoint { lat_deg: 1.0, lon_deg: 2.0 });
    }

    #[test]
    fn out_of_range_names_row() {
        let err = read("lat,lon\n91.0,0.0\n").unwrap_err();
        assert!(matches!(&err, ReadError::OutOfRange { row: 1, value, .. } if *value == 91.0));
        assert!(err.to_string().contains("row 1"), "{err}");
        let err = read("lat,lon\n0,0\n10,-180.5\n").unwrap_err();
        assert!(matches!(&err, ReadError::OutOfRange { row: 2, column, .. } if column == "lon"));
    }

    #[test]
    fn unparsable_names_row() {
        for bad in ["abc", "", "NaN", "inf"] {
            let err = read(&format!("lat,lon\n1,2\n3,4\n{bad},5\n")).unwrap_err();
            assert!(matches!(err, ReadError::InvalidCoordinate { row: 3, .. }), "{bad}: {err}");
        }
    }

    #[test]
    fn missing_column_is_named() {
        let err = read("latitude,lon\n1,2\n").unwrap_err();
        assert!(matches!(&err, ReadError::MissingColumn(c) if c == "lat"));
        assert!(err.to_string().contains("\"lat\""));
    }

    #[test]
    fn empty_and_ragged_input() {
        assert!(matches!(read("lat,lon\n"), Err(ReadError::Empty)));
        assert!(matches!(read(""), Err(ReadError::MissingColumn(_))));
        assert!(matches!(read("lat,lon,city\n1,2\n"), Err(ReadError::Csv(_))));
    }

    #[test]
    fn missing_file() {
        let err = read_csv("/nonexistent/points.csv", "lat", "lon").unwrap_err();
        assert!(matches!(err, ReadError::Open { .. }));
        assert!(err.to_string().contains("/nonexistent/points.csv"));
    }

    #[test]
    fn empty_reduction_writes_header_only() {
        let d = read("lat,lon,city\n1,2,x\n").unwrap();
        let mut out = Vec::new();
        write_csv_to(&ReducedDataset::default(), d.schema(), &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "lat,lon,city,cluster_label,cluster_size\n");
    }

    #[test]
    fn quoting_and_line_endings() {
        let text = "lat,lon,note\n1.5,-0.25,\"a, \"\"quoted\"\"\nline\"\n";
        let d = read(text).unwrap();
        assert_eq!(d.records()[0].attributes, ["a, \"quoted\"\nline"]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_dataset_csv(&d, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
    }

    #[test]
    fn unwritable_path_reports_path() {
        let d = read("lat,lon\n1,2\n").unwrap();
        let err = write_dataset_csv(&d, "/nonexistent/dir/out.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/out.csv"));
    }

    type Row = (f64, f64, Vec<String>);

    fn table() -> impl Strategy<Value = (Vec<String>, Vec<Row>)> {
        (0usize..4).prop_flat_map(|n_attr| {
            let header = (0..n_attr).map(|i| format!("col{i}")).collect::<Vec<_>>();
            let row = (
                -90.0..=90.0f64,
                -180.0..=180.0f64,
                prop::collection::vec("[a-z ,\"\n\u{e9}\u{4e16}]{0,8}", n_attr),
            );
            (Just(header), prop::collection::vec(row, 1..20))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn write_read_round_trip((attr_cols, rows) in table()) {
            let mut columns = vec!["lat".to_string()];
            columns.extend(attr_cols.iter().cloned());
            columns.insert(columns.len().min(2), "lon".to_string());
            let schema = Schema::new(columns, "lat", "lon").unwrap();
            let records = rows
                .into_iter()
                .map(|(lat_deg, lon_deg, attributes)| Record { row_index: 0, point: GeoPoint { lat_deg, lon_deg }, attributes })
                .collect();
            let original = Dataset::new(schema, records);

            let dir = tempfile::tempdir().unwrap();
            let first = dir.path().join("a.csv");
            let second = dir.path().join("b.csv");
            write_dataset_csv(&original, &first).unwrap();
            let back = read_csv(&first, "lat", "lon").unwrap();
            prop_assert_eq!(&back, &original);
            write_dataset_csv(&back, &second).unwrap();
            prop_assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
        }
    }
}
