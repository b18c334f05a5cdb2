//! Tab-separated output with a fixed number rendering.

use std::fmt::Write as _;

/// Rounds to 10 significant digits and prints the shortest decimal that
/// reads back to the rounded value. Magnitudes outside `[1e-6, 1e15)` use
/// exponent notation.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let rounded: f64 = format!("{x:.9e}").parse().expect("rust float formatting reparses");
    if rounded == 0.0 {
        return "0".into();
    }
    let mag = rounded.abs();
    if (1e-6..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Collects rows and renders them once, so a failing command prints nothing.
pub struct Table {
    out: String,
    width: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut out = header.join("\t");
        out.push('\n');
        Table {
            out,
            width: header.len(),
        }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        debug_assert_eq!(cells.len(), self.width);
        let line: Vec<&str> = cells.iter().map(AsRef::as_ref).collect();
        self.out.push_str(&line.join("\t"));
        self.out.push('\n');
    }

    pub fn trailer(&mut self, line: &str) {
        let _ = writeln!(self.out, "{line}");
    }

    pub fn into_string(self) -> String {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn rendering() {
        assert_eq!(num(100.0), "100");
        assert_eq!(num(182.5), "182.5");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(1e-20), "1e-20");
        assert_eq!(num(-3.0000000000000004), "-3");
        assert_eq!(num(53.59375), "53.59375");
        assert_eq!(num(2.0 / 3.0), "0.6666666667");
        assert_eq!(num(123456789012.3456), "123456789000");
        assert_eq!(num(2.5e15), "2.5e15");
        assert_eq!(num(0.000001), "0.000001");
        assert_eq!(num(f64::NAN), "NaN");
    }
}
