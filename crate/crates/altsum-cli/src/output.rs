//! Report rendering shared by every subcommand: a header plus typed cells,
//! printed either as CSV or as a JSON array of objects. Real-valued cells
//! carry pre-rendered decimal text, so the two formats cannot drift apart.

use std::fmt::Write as _;

use rug::Float;

/// One table cell.
pub enum Cell {
    Count(u64),
    /// Decimal text of a real value, rendered once by [`format_real`] or
    /// [`format_bound`] (or by f64's shortest round-trip `Display`).
    Real(String),
    Flag(bool),
    Text(String),
    /// An absent optional column: empty in CSV, `null` in JSON.
    Missing,
}

impl Cell {
    fn csv_text(&self) -> String {
        match self {
            Cell::Count(v) => v.to_string(),
            Cell::Real(s) | Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json_value(&self) -> serde_json::Value {
        match self {
            Cell::Count(v) => serde_json::Value::from(*v),
            Cell::Real(s) | Cell::Text(s) => serde_json::Value::String(s.clone()),
            Cell::Flag(b) => serde_json::Value::Bool(*b),
            Cell::Missing => serde_json::Value::Null,
        }
    }
}

pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "ragged report row");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv_text).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut object = serde_json::Map::new();
                for (name, cell) in self.columns.iter().zip(row) {
                    object.insert((*name).to_owned(), cell.json_value());
                }
                serde_json::Value::Object(object)
            })
            .collect();
        let mut out = serde_json::to_string_pretty(&serde_json::Value::Array(rows))
            .expect("report serialization cannot fail");
        out.push('\n');
        out
    }
}

/// Renders a high-precision value with `digits` significant digits: plain
/// positional decimal while the leading digit sits within 10^-8..10^20,
/// `d.dd…e±x` scientific notation outside that window, and a bare `0` for
/// exact zeros. Locale-free and deterministic.
pub fn format_real(x: &Float, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x.is_sign_negative() { "-inf" } else { "inf" }.into();
    }
    if x.is_zero() {
        return "0".into();
    }
    let (neg, mantissa, exp) = x.to_sign_string_exp(10, Some(digits.max(2)));
    let exp = exp.expect("finite nonzero value has a decimal exponent");
    let sign = if neg { "-" } else { "" };
    let len = mantissa.len() as i32;
    if (-8..=20).contains(&(exp - 1)) {
        if exp >= len {
            format!("{sign}{mantissa}{}", "0".repeat((exp - len) as usize))
        } else if exp > 0 {
            let (int, frac) = mantissa.split_at(exp as usize);
            format!("{sign}{int}.{frac}")
        } else {
            format!("{sign}0.{}{mantissa}", "0".repeat(exp.unsigned_abs() as usize))
        }
    } else {
        let (head, tail) = mantissa.split_at(1);
        format!("{sign}{head}.{tail}e{}", exp - 1)
    }
}

/// Error bounds always print scientific with three significant digits ("0"
/// for exact values) — they are magnitudes, not measurements.
pub fn format_bound(x: &Float) -> String {
    if x.is_zero() {
        return "0".into();
    }
    let (neg, mantissa, exp) = x.to_sign_string_exp(10, Some(3));
    let exp = exp.expect("finite nonzero value has a decimal exponent");
    let (head, tail) = mantissa.split_at(1);
    format!("{}{head}.{tail}e{}", if neg { "-" } else { "" }, exp - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(v: f64) -> Float {
        Float::with_val(128, v)
    }

    #[test]
    fn plain_and_scientific_switch_where_documented() {
        assert_eq!(format_real(&f(0.0), 10), "0");
        assert_eq!(format_real(&f(0.5), 3), "0.500");
        assert_eq!(format_real(&f(-0.5), 3), "-0.500");
        assert_eq!(format_real(&f(1234.0), 4), "1234");
        assert_eq!(format_real(&f(1234.0), 2), "1200");
        assert_eq!(format_real(&f(1e20), 3), "100000000000000000000");
        assert_eq!(format_real(&f(1e21), 3), "1.00e21");
        assert_eq!(format_real(&f(1e-8), 2), "0.000000010");
        assert_eq!(format_real(&f(1e-9), 3), "1.00e-9");
    }

    #[test]
    fn bounds_are_three_digit_scientific() {
        assert_eq!(format_bound(&f(0.0)), "0");
        assert_eq!(format_bound(&Float::with_val(64, 1.25e-40)), "1.25e-40");
    }

    #[test]
    fn csv_and_json_share_cell_text() {
        let mut t = Table::new(vec!["n", "value", "ok", "maybe"]);
        t.push(vec![
            Cell::Count(3),
            Cell::Real("1.25".into()),
            Cell::Flag(true),
            Cell::Missing,
        ]);
        let csv = t.to_csv();
        assert_eq!(csv, "n,value,ok,maybe\n3,1.25,true,\n");
        let json: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(json[0]["n"], 3);
        assert_eq!(json[0]["value"], "1.25");
        assert_eq!(json[0]["ok"], true);
        assert!(json[0]["maybe"].is_null());
    }

    proptest! {
        // Printing at d digits, reparsing, and reprinting must reproduce the
        // text exactly: the emitted reports are fixed points of their own
        // round trip.
        #[test]
        fn formatting_round_trips(v in prop::num::f64::NORMAL, digits in 2usize..25) {
            let x = Float::with_val(80, v);
            let printed = format_real(&x, digits);
            let reparsed = Float::with_val(200, Float::parse(&printed).unwrap());
            prop_assert_eq!(format_real(&reparsed, digits), printed);
        }
    }
}
