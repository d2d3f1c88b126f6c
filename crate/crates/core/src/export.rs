//! Plain-text table output shared by the CSV writers.

use std::io::Write;

use crate::error::Result;

/// Fixed 17-significant-digit scientific formatting, so identical inputs
/// give byte-identical files.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a header line followed by numeric rows.
pub fn write_table<W: Write>(mut w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt17).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(0.1).parse::<f64>().unwrap(), 0.1);
        let mut buf = Vec::new();
        write_table(&mut buf, &["x", "y"], vec![vec![1.0, -2.5]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,y\n1.0000000000000000e0,-2.5000000000000000e0\n");
    }
}
