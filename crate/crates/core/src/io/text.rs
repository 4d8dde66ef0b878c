use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// One line per row, comma-separated, in the shortest form that parses back to the same value.
pub fn encode_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Headerless numeric CSV. Surrounding whitespace in a field is ignored.
pub fn decode_csv(bytes: &[u8]) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let expected = *cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                row,
                expected,
                found: record.len(),
            });
        }
        for (col, field) in record.iter().enumerate() {
            let v = field.parse::<f64>().map_err(|_| Error::BadNumber {
                row,
                col,
                text: field.to_string(),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    match cols {
        Some(cols) => Matrix::new(rows, cols, data),
        None => Err(Error::MalformedHeader("CSV input has no rows".into())),
    }
}
