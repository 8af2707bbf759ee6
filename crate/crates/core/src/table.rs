//! Numeric tables and their CSV form.
//!
//! Layout: optional `# ...` comment lines, one header line, then data rows.
//! Fields are comma-separated, lines end in LF and floats carry 17 significant
//! digits, so every value reads back bit-exactly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::spectral_field::{Field, PeriodicGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Result<Self> {
        let columns: Vec<String> = columns.into_iter().map(Into::into).collect();
        if columns.is_empty() {
            return Err(Error::usage("table needs at least one column"));
        }
        for c in &columns {
            if c.is_empty() || c.contains([',', '\n', '\r']) || c.starts_with('#') {
                return Err(Error::usage(format!("invalid column name {c:?}")));
            }
        }
        Ok(Table { comments: Vec::new(), columns, rows: Vec::new() })
    }

    pub fn with_comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into().replace(['\n', '\r'], " "));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::usage(format!(
                "row has {} values, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format_float(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut comments = Vec::new();
        let header = loop {
            match lines.next() {
                Some(l) if l.starts_with('#') => {
                    comments.push(l.trim_start_matches('#').trim_start().to_string());
                }
                Some(l) => break l,
                None => return Err(Error::usage("csv has no header line")),
            }
        };
        let mut table = Table::new(header.split(','))?;
        table.comments = comments;
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|f| f.trim().parse::<f64>().map_err(|_| Error::usage(format!("line {}: bad number {f:?}", i + 2))))
                .collect::<Result<Vec<f64>>>()?;
            table.push(row)?;
        }
        Ok(table)
    }
}

/// 17 significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Columns `x, value` in 1D and `x, y, value` in 2D, rows in storage order.
pub fn field_to_table(field: &Field) -> Table {
    let g = field.grid;
    let nodes = g.nodes();
    let n = g.n();
    let columns: &[&str] = if g.dim() == 1 { &["x", "value"] } else { &["x", "y", "value"] };
    let mut t = Table::new(columns.iter().copied()).expect("static column names").with_comment(format!(
        "grid: dim={} length={} n={}",
        g.dim(),
        format_float(g.length()),
        n
    ));
    for (i, &v) in field.values.iter().enumerate() {
        let row = if g.dim() == 1 { vec![nodes[i], v] } else { vec![nodes[i / n], nodes[i % n], v] };
        t.rows.push(row);
    }
    t
}

/// Rebuilds a field from [`field_to_table`] output, recovering the grid from
/// the `grid:` comment.
pub fn field_from_table(table: &Table) -> Result<Field> {
    let spec = table
        .comments
        .iter()
        .find_map(|c| c.strip_prefix("grid:"))
        .ok_or_else(|| Error::usage("field csv lacks a '# grid:' line"))?;
    let (mut dim, mut length, mut n) = (None, None, None);
    for kv in spec.split_whitespace() {
        match kv.split_once('=') {
            Some(("dim", v)) => dim = v.parse::<usize>().ok(),
            Some(("length", v)) => length = v.parse::<f64>().ok(),
            Some(("n", v)) => n = v.parse::<usize>().ok(),
            _ => {}
        }
    }
    let (Some(dim), Some(length), Some(n)) = (dim, length, n) else {
        return Err(Error::usage(format!("malformed grid line {spec:?}")));
    };
    let grid = PeriodicGrid::new(dim, length, n)?;
    let j = table.column_index("value").ok_or_else(|| Error::usage("field csv lacks a value column"))?;
    Field::new(grid, table.rows.iter().map(|r| r[j]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_rows_three_lines() {
        let mut t = Table::new(["a", "b"]).unwrap();
        t.push(vec![1.0, 2.0]).unwrap();
        t.push(vec![0.1, -3.5e-300]).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
        assert_eq!(csv.lines().next(), Some("a,b"));
        assert!(t.push(vec![1.0]).is_err());
    }

    #[test]
    fn comments_precede_header() {
        let t = Table::new(["r"]).unwrap().with_comment("argv: wwdtn symbol --s 0.5");
        let csv = t.to_csv();
        assert!(csv.starts_with("# argv: wwdtn symbol --s 0.5\nr\n"));
        let back = Table::from_csv(&csv).unwrap();
        assert_eq!(back.comments, vec!["argv: wwdtn symbol --s 0.5"]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Table::new(["a,b"]).is_err());
        assert!(Table::new(Vec::<String>::new()).is_err());
        assert!(Table::from_csv("a,b\n1,x\n").is_err());
        assert!(Table::from_csv("# only\n").is_err());
    }

    #[test]
    fn field_round_trip() {
        for dim in [1, 2] {
            let g = PeriodicGrid::new(dim, 3.3, 16).unwrap();
            let f = Field::from_fn(g, |x| x.iter().map(|v| (1.7 * v).sin()).sum::<f64>() / 3.0).unwrap();
            let back = field_from_table(&Table::from_csv(&field_to_table(&f).to_csv()).unwrap()).unwrap();
            assert_eq!(back, f);
        }
    }

    proptest! {
        #[test]
        fn floats_round_trip_bit_exactly(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let mut t = Table::new(["v"]).unwrap();
            t.push(vec![v]).unwrap();
            let back = Table::from_csv(&t.to_csv()).unwrap();
            prop_assert_eq!(back.rows[0][0].to_bits(), v.to_bits());
        }
    }
}
