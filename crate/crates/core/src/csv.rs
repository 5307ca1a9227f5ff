//! Minimal CSV writer with round-trippable float formatting.

use std::fmt::Write as _;

/// 17 significant digits, '.' decimal point.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvBuf {
    out: String,
}

impl CsvBuf {
    pub fn new(header: &[&str]) -> Self {
        let mut out = header.join(",");
        out.push('\n');
        Self { out }
    }

    pub fn with_header(header: Vec<String>) -> Self {
        let mut out = header.join(",");
        out.push('\n');
        Self { out }
    }

    /// Appends a row of preformatted cells.
    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for (i, cell) in cells.into_iter().enumerate() {
            if i > 0 {
                self.out.push(',');
            }
            self.out.push_str(cell.as_ref());
        }
        self.out.push('\n');
    }

    /// Appends a row of floats, optionally led by a preformatted cell.
    pub fn float_row(&mut self, lead: Option<&str>, values: &[f64]) {
        let mut first = true;
        if let Some(l) = lead {
            self.out.push_str(l);
            first = false;
        }
        for v in values {
            if !first {
                self.out.push(',');
            }
            first = false;
            let _ = write!(self.out, "{v:.16e}");
        }
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for &x in &[0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn rows_are_comma_separated() {
        let mut c = CsvBuf::new(&["k", "x"]);
        c.float_row(Some("1"), &[0.5]);
        c.row(["2", "nan"]);
        assert_eq!(c.finish(), "k,x\n1,5.0000000000000000e-1\n2,nan\n");
    }
}
