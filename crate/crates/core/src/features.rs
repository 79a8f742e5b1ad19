//! Named feature vectors and the CSV table format shared by texture
//! features, externally extracted features, and score files.
//!
//! Table layout: a header row, then one row per record. The optional
//! leading `id` column and the optional trailing `group` and `label`
//! columns are reserved; every other column is a feature.

use std::collections::HashSet;
use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::arg(format!("{} names but {} values", names.len(), values.len())));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::arg(format!("duplicate feature name {n:?}")));
            }
        }
        if let Some((n, v)) = names.iter().zip(&values).find(|(_, v)| !v.is_finite()) {
            return Err(Error::arg(format!("feature {n:?} is not finite ({v})")));
        }
        Ok(Self { names, values })
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let (names, values) = pairs.into_iter().map(|(n, v)| (n.into(), v)).unzip();
        Self::new(names, values)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Serializes as a name → value map in feature order.
impl serde::Serialize for FeatureVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.len()))?;
        for (n, v) in self.names.iter().zip(&self.values) {
            m.serialize_entry(n, v)?;
        }
        m.end()
    }
}

/// Reports which names are missing from / extra in `actual` relative to `expected`.
pub(crate) fn check_schema(expected: &[String], actual: &[String]) -> Result<()> {
    if expected == actual {
        return Ok(());
    }
    let exp: HashSet<&String> = expected.iter().collect();
    let act: HashSet<&String> = actual.iter().collect();
    let missing = expected.iter().filter(|n| !act.contains(n)).cloned().collect();
    let extra = actual.iter().filter(|n| !exp.contains(n)).cloned().collect();
    Err(Error::Schema { missing, extra })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub groups: Option<Vec<String>>,
    pub labels: Option<Vec<u8>>,
}

const RESERVED: [&str; 3] = ["id", "group", "label"];

impl FeatureTable {
    pub fn new(names: Vec<String>) -> Self {
        Self { names, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, id: impl Into<String>, v: &FeatureVector) -> Result<()> {
        check_schema(&self.names, v.names())?;
        self.ids.push(id.into());
        self.rows.push(v.values().to_vec());
        Ok(())
    }

    pub fn vector(&self, i: usize) -> FeatureVector {
        FeatureVector { names: self.names.clone(), values: self.rows[i].clone() }
    }

    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let col = |name: &str| header.iter().position(|h| h == name);
        let (id_col, group_col, label_col) = (col("id"), col("group"), col("label"));
        let feature_cols: Vec<usize> = (0..header.len()).filter(|&i| !RESERVED.contains(&header[i].as_str())).collect();
        let mut table = FeatureTable {
            names: feature_cols.iter().map(|&i| header[i].clone()).collect(),
            groups: group_col.map(|_| Vec::new()),
            labels: label_col.map(|_| Vec::new()),
            ..Default::default()
        };
        let mut seen = HashSet::new();
        if let Some(dup) = table.names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::data(format!("duplicate column {dup:?}")));
        }
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row_no = line + 2;
            let id = match id_col {
                Some(c) => rec[c].to_owned(),
                None => format!("row{}", line),
            };
            let mut values = Vec::with_capacity(feature_cols.len());
            for &c in &feature_cols {
                let v: f64 = rec[c].trim().parse().map_err(|_| {
                    Error::data(format!("row {row_no}, column {:?}: not a number: {:?}", header[c], &rec[c]))
                })?;
                if !v.is_finite() {
                    return Err(Error::data(format!("row {row_no}, column {:?}: non-finite value", header[c])));
                }
                values.push(v);
            }
            if let (Some(c), Some(groups)) = (group_col, table.groups.as_mut()) {
                groups.push(rec[c].to_owned());
            }
            if let (Some(c), Some(labels)) = (label_col, table.labels.as_mut()) {
                let label = match rec[c].trim() {
                    "0" => 0,
                    "1" => 1,
                    other => return Err(Error::data(format!("row {row_no}: label must be 0 or 1, got {other:?}"))),
                };
                labels.push(label);
            }
            table.ids.push(id);
            table.rows.push(values);
        }
        Ok(table)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_owned()];
        header.extend(self.names.iter().cloned());
        if self.groups.is_some() {
            header.push("group".into());
        }
        if self.labels.is_some() {
            header.push("label".into());
        }
        w.write_record(&header)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec = vec![self.ids[i].clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            if let Some(g) = &self.groups {
                rec.push(g[i].clone());
            }
            if let Some(l) = &self.labels {
                rec.push(l[i].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_vectors() {
        assert!(FeatureVector::new(vec!["a".into()], vec![]).is_err());
        assert!(FeatureVector::new(vec!["a".into(), "a".into()], vec![1.0, 2.0]).is_err());
        assert!(FeatureVector::new(vec!["a".into()], vec![f64::NAN]).is_err());
    }

    #[test]
    fn schema_error_lists_differences() {
        let e = check_schema(&["a".into(), "b".into()], &["b".into(), "c".into()]).unwrap_err();
        match e {
            Error::Schema { missing, extra } => {
                assert_eq!(missing, vec!["a".to_owned()]);
                assert_eq!(extra, vec!["c".to_owned()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reads_without_reserved_columns() {
        let t = FeatureTable::read_csv("x,y\n1,2\n3,4.5\n".as_bytes()).unwrap();
        assert_eq!(t.names, vec!["x", "y"]);
        assert_eq!(t.rows, vec![vec![1.0, 2.0], vec![3.0, 4.5]]);
        assert!(t.labels.is_none());
    }

    #[test]
    fn bad_label_is_data_error() {
        let err = FeatureTable::read_csv("x,label\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 0..10)) {
            let mut t = FeatureTable::new(vec!["a".into(), "b".into(), "c".into()]);
            t.labels = Some(Vec::new());
            for (i, r) in rows.iter().enumerate() {
                t.ids.push(format!("r{i}"));
                t.rows.push(r.clone());
                t.labels.as_mut().unwrap().push((i % 2) as u8);
            }
            let mut buf = Vec::new();
            t.write_csv(&mut buf).unwrap();
            prop_assert_eq!(FeatureTable::read_csv(&buf[..]).unwrap(), t);
        }
    }
}
