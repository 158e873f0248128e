//! Plain-text potential tables: `#` comments, two columns (r in a₀, V in hartree).

use std::fs;
use std::io::Write;
use std::path::Path;

use super::curve::ShortRangeTable;
use crate::error::{Error, Result};

pub fn parse_curve_table(text: &str, path: &Path) -> Result<ShortRangeTable> {
    let mut r = Vec::new();
    let mut v = Vec::new();
    let mut last_line = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = line.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { path: path.to_path_buf(), line: line_no, message };
        let cols: Vec<&str> = content.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(err(format!("expected two columns, found {}", cols.len())));
        }
        let x: f64 = cols[0].parse().map_err(|e| err(format!("bad radius '{}': {e}", cols[0])))?;
        let y: f64 = cols[1].parse().map_err(|e| err(format!("bad energy '{}': {e}", cols[1])))?;
        if let Some(&prev) = r.last() {
            if x <= prev {
                return Err(err(format!("radius {x} does not increase (previous {prev})")));
            }
        }
        r.push(x);
        v.push(y);
        last_line = line_no;
    }
    ShortRangeTable::new(r, v).map_err(|e| Error::Parse { path: path.to_path_buf(), line: last_line, message: e.to_string() })
}

pub fn read_curve_table(path: &Path) -> Result<ShortRangeTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_curve_table(&text, path)
}

pub fn write_curve_table(path: &Path, table: &ShortRangeTable) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    let mut body = String::from("# r [a0]  V [hartree]\n");
    for (x, y) in table.r.iter().zip(&table.v) {
        body.push_str(&format!("{x:.17e} {y:.17e}\n"));
    }
    f.write_all(body.as_bytes()).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments() {
        let t = parse_curve_table("# header\n1.0 2.0\n\n2.0 1.0 # trailing\n3.0 0.5\n4.0 0.1\n", Path::new("x")).unwrap();
        assert_eq!(t.r, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn reports_line_of_bad_row() {
        match parse_curve_table("1.0 2.0\n0.5 1.0\n", Path::new("f.dat")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_curve_table("1.0 2.0 3.0\n", Path::new("f.dat")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }
}
