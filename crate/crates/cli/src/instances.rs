//! Instance CSV: header `f1,…,fn`, one instance per row.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

pub fn read_instances(path: &Path, n: usize) -> Result<Vec<Vec<f64>>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_instances(file, n).with_context(|| format!("reading instances from {}", path.display()))
}

pub fn parse_instances(reader: impl std::io::Read, n: usize) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() != n {
        bail!("line 1: header has {} columns, the model has {n} features", header.len());
    }
    for (j, name) in header.iter().enumerate() {
        if name != format!("f{}", j + 1) {
            bail!("line 1: column {} is named {name:?}, expected \"f{}\"", j + 1, j + 1);
        }
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != n {
            bail!("line {line}: {} fields, expected {n}", record.len());
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| anyhow!("line {line}, column f{}: {field:?} is not a finite number", j + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(row);
    }
    Ok(out)
}

pub fn instances_csv(rows: &[Vec<f64>]) -> String {
    let n = rows.first().map_or(0, Vec::len);
    let mut s = (1..=n).map(|j| format!("f{j}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let rows = vec![vec![0.5, -1.0], vec![1e-3, 2.0]];
        let text = instances_csv(&rows);
        assert_eq!(parse_instances(text.as_bytes(), 2).unwrap(), rows);
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse_instances("f1,f2\n1,2\n3,x\n".as_bytes(), 2).unwrap_err();
        assert!(format!("{err:#}").contains("line 3"), "{err:#}");
        let err = parse_instances("f1,f2\n1,2\n".as_bytes(), 3).unwrap_err();
        assert!(format!("{err:#}").contains("line 1"));
        let err = parse_instances("f1,f2\n1\n".as_bytes(), 2).unwrap_err();
        assert!(format!("{err:#}").contains("line 2"), "{err:#}");
    }
}
