//! Matrix CSV files: `id,dim0,...,dim{k-1}[,label][,group]`, one row per
//! sample.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{ensure, Error, Result};
use crate::pool::{Matrix, SamplePool};

/// Contents of a matrix CSV file.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixCsv {
    pub ids: Vec<u64>,
    pub matrix: Matrix,
    pub labels: Option<Vec<u32>>,
    pub groups: Option<Vec<u32>>,
}

impl MatrixCsv {
    pub fn from_pool(pool: &SamplePool) -> Self {
        Self {
            ids: pool.sample_ids().to_vec(),
            matrix: pool.embeddings().clone(),
            labels: pool.labels().map(<[u32]>::to_vec),
            groups: pool.groups().map(<[u32]>::to_vec),
        }
    }

    pub fn into_pool(self) -> Result<SamplePool> {
        SamplePool::with_ids(self.matrix, self.labels, self.groups, self.ids)
    }
}

struct Layout {
    dims: usize,
    label: Option<usize>,
    group: Option<usize>,
}

fn parse_header(header: &csv::StringRecord) -> Result<Layout> {
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    ensure!(
        names.first() == Some(&"id"),
        Format,
        "first column must be `id`, header is {names:?}"
    );
    let mut dims = 0;
    while names.get(1 + dims) == Some(&format!("dim{dims}").as_str()) {
        dims += 1;
    }
    ensure!(dims >= 1, Format, "header declares no `dim0` column");
    let mut cursor = 1 + dims;
    let mut take = |name: &str| {
        if names.get(cursor) == Some(&name) {
            cursor += 1;
            Some(cursor - 1)
        } else {
            None
        }
    };
    let label = take("label");
    let group = take("group");
    ensure!(
        cursor == names.len(),
        Format,
        "unexpected column `{}` at position {cursor}",
        names[cursor]
    );
    Ok(Layout { dims, label, group })
}

fn cell<T: std::str::FromStr>(record: &csv::StringRecord, col: usize, line: u64) -> Result<T> {
    let raw = record
        .get(col)
        .ok_or_else(|| Error::Format(format!("line {line}: missing column {col}")))?
        .trim();
    raw.parse()
        .map_err(|_| Error::Format(format!("line {line}: cannot parse `{raw}` in column {col}")))
}

pub fn read_matrix_csv_from<R: Read>(reader: R) -> Result<MatrixCsv> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let layout = parse_header(rdr.headers()?)?;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut labels = layout.label.map(|_| Vec::new());
    let mut groups = layout.group.map(|_| Vec::new());
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        ids.push(cell::<u64>(&record, 0, line)?);
        for d in 0..layout.dims {
            let v: f64 = cell(&record, 1 + d, line)?;
            ensure!(v.is_finite(), Data, "line {line}: non-finite value in dim{d}");
            values.push(v);
        }
        if let (Some(col), Some(l)) = (layout.label, labels.as_mut()) {
            l.push(cell(&record, col, line)?);
        }
        if let (Some(col), Some(g)) = (layout.group, groups.as_mut()) {
            g.push(cell(&record, col, line)?);
        }
    }
    Ok(MatrixCsv {
        matrix: Matrix::from_vec(ids.len(), layout.dims, values)?,
        ids,
        labels,
        groups,
    })
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<MatrixCsv> {
    read_matrix_csv_from(File::open(path)?)
}

pub fn write_matrix_csv_to<W: Write>(writer: W, table: &MatrixCsv) -> Result<()> {
    let n = table.matrix.rows();
    ensure!(table.ids.len() == n, Shape, "{} ids for {n} rows", table.ids.len());
    if let Some(l) = &table.labels {
        ensure!(l.len() == n, Shape, "{} labels for {n} rows", l.len());
    }
    if let Some(g) = &table.groups {
        ensure!(g.len() == n, Shape, "{} groups for {n} rows", g.len());
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend((0..table.matrix.cols()).map(|d| format!("dim{d}")));
    if table.labels.is_some() {
        header.push("label".into());
    }
    if table.groups.is_some() {
        header.push("group".into());
    }
    wtr.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..n {
        row.clear();
        row.push(table.ids[i].to_string());
        // `{}` on f64 prints the shortest representation that round-trips.
        row.extend(table.matrix.row(i).iter().map(|v| format!("{v}")));
        if let Some(l) = &table.labels {
            row.push(l[i].to_string());
        }
        if let Some(g) = &table.groups {
            row.push(g[i].to_string());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_matrix_csv(path: impl AsRef<Path>, table: &MatrixCsv) -> Result<()> {
    write_matrix_csv_to(File::create(path)?, table)
}
