//! Canonical JSON (JCS-style) and the human-facing pretty layout.
//!
//! Canonical form: object keys sorted by UTF-16 code units, no insignificant
//! whitespace, UTF-8 output, numbers in the shortest round-trip form used by
//! ECMAScript `Number.prototype.toString`.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::error::{CoreError, Result};

/// Largest integer magnitude that survives a trip through an IEEE double.
const MAX_SAFE_INTEGER: u64 = (1 << 53) - 1;

/// Serialize any value to canonical bytes.
///
/// Floats must already be finite: `serde_json` maps NaN and infinities to
/// `null`, so callers holding floats validate them first.
pub fn to_canonical_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let value = serde_json::to_value(value)?;
    Ok(canonical_value(&value))
}

pub fn canonical_value(value: &Value) -> Vec<u8> {
    let mut out = String::new();
    write_value(&mut out, value);
    out.into_bytes()
}

fn write_value(out: &mut String, value: &Value) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                if i.unsigned_abs() <= MAX_SAFE_INTEGER {
                    out.push_str(&i.to_string());
                } else {
                    out.push_str(&format_f64(i as f64));
                }
            } else if let Some(u) = n.as_u64() {
                if u <= MAX_SAFE_INTEGER {
                    out.push_str(&u.to_string());
                } else {
                    out.push_str(&format_f64(u as f64));
                }
            } else {
                // Value numbers are always finite.
                out.push_str(&format_f64(n.as_f64().unwrap_or_default()));
            }
        }
        Value::String(s) => write_string(out, s),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut entries: Vec<(&String, &Value)> = map.iter().collect();
            entries.sort_by(|a, b| a.0.encode_utf16().cmp(b.0.encode_utf16()));
            out.push('{');
            for (i, (key, item)) in entries.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(out, key);
                out.push(':');
                write_value(out, item);
            }
            out.push('}');
        }
    }
}

fn write_string(out: &mut String, s: &str) {
    // serde_json escapes exactly the JCS set: quote, backslash and C0 controls.
    out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"));
}

/// Format a double the way ECMAScript does. Rejects NaN and infinities.
pub fn format_number(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(CoreError::Canonicalization(format!(
            "non-finite number {x} has no JSON representation"
        )));
    }
    Ok(format_f64(x))
}

fn format_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    // `{:e}` yields the shortest round-trip digits, e.g. "1.2345e-7".
    let sci = format!("{:e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let k = digits.len() as i32;
    let n = exp + 1;

    let mut out = String::new();
    if x < 0.0 {
        out.push('-');
    }
    if k <= n && n <= 21 {
        out.push_str(&digits);
        out.extend(std::iter::repeat('0').take((n - k) as usize));
    } else if 0 < n && n <= 21 {
        out.push_str(&digits[..n as usize]);
        out.push('.');
        out.push_str(&digits[n as usize..]);
    } else if -6 < n && n <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat('0').take((-n) as usize));
        out.push_str(&digits);
    } else {
        let e = n - 1;
        out.push_str(&digits[..1]);
        if k > 1 {
            out.push('.');
            out.push_str(&digits[1..]);
        }
        out.push('e');
        out.push(if e < 0 { '-' } else { '+' });
        out.push_str(&e.abs().to_string());
    }
    out
}

/// Pretty layout for files meant to be read by people: four-space indent,
/// `"key" : value` separators, ECMAScript number formatting.
pub fn to_pretty_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, DocumentFormatter::new());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| CoreError::Encoding(e.to_string()))
}

struct DocumentFormatter {
    inner: PrettyFormatter<'static>,
}

impl DocumentFormatter {
    fn new() -> Self {
        Self { inner: PrettyFormatter::with_indent(b"    ") }
    }
}

impl Formatter for DocumentFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        let text = format_number(value).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        writer.write_all(text.as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        writer.write_all(b" : ")
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn proof_type_only() {
        let bytes = canonical_value(&json!({"proof_type": "PoE"}));
        assert_eq!(bytes, br#"{"proof_type":"PoE"}"#);
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let a: Value = serde_json::from_str(r#"{"z":1,"a":{"y":true,"b":null},"m":[3,2]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"m":[3,2],"a":{"b":null,"y":true},"z":1}"#).unwrap();
        assert_eq!(canonical_value(&a), canonical_value(&b));
        assert_eq!(canonical_value(&a), br#"{"a":{"b":null,"y":true},"m":[3,2],"z":1}"#);
    }

    #[test]
    fn keys_sort_by_utf16_code_units() {
        // U+1F600 is a surrogate pair (0xD83D..) and sorts before U+FF61 in
        // UTF-16, although its UTF-8 encoding sorts after.
        let v = json!({"\u{1F600}": 1, "\u{FF61}": 2});
        let text = String::from_utf8(canonical_value(&v)).unwrap();
        assert_eq!(text, "{\"\u{1F600}\":1,\"\u{FF61}\":2}");
    }

    #[test]
    fn string_escapes() {
        let v = json!({"s": "a\"b\\c\n\u{1}é"});
        let text = String::from_utf8(canonical_value(&v)).unwrap();
        assert_eq!(text, "{\"s\":\"a\\\"b\\\\c\\n\\u0001é\"}");
    }

    #[test]
    fn numbers_match_ecmascript() {
        // Expected strings produced by node's JSON.stringify.
        let cases: &[(f64, &str)] = &[
            (0.0, "0"),
            (-0.0, "0"),
            (1.0, "1"),
            (-34.0, "-34"),
            (151.0, "151"),
            (1200.0, "1200"),
            (0.1, "0.1"),
            (43.9097, "43.9097"),
            (12.4958, "12.4958"),
            (1e21, "1e+21"),
            (1.5e21, "1.5e+21"),
            (1e20, "100000000000000000000"),
            (123456789012345680000.0, "123456789012345680000"),
            (1e-7, "1e-7"),
            (1.2e-6, "0.0000012"),
            (0.000001, "0.000001"),
            (5e-324, "5e-324"),
            (1.7976931348623157e308, "1.7976931348623157e+308"),
            (-2.5e-10, "-2.5e-10"),
            (1.0 / 3.0, "0.3333333333333333"),
            (9007199254740993.0, "9007199254740992"),
        ];
        for (x, want) in cases {
            assert_eq!(format_number(*x).unwrap(), *want, "formatting {x:e}");
        }
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(format_number(f64::NAN), Err(CoreError::Canonicalization(_))));
        assert!(format_number(f64::INFINITY).is_err());
    }

    #[test]
    fn large_integers_go_through_double_formatting() {
        let v = json!({"n": 9007199254740993u64});
        assert_eq!(canonical_value(&v), br#"{"n":9007199254740992}"#);
    }

    #[test]
    fn pretty_layout() {
        let text = to_pretty_string(&json!({"a": {"b": -34.0}})).unwrap();
        assert_eq!(text, "{\n    \"a\" : {\n        \"b\" : -34\n    }\n}\n");
    }
}
