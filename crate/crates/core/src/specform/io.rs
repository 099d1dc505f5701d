use std::sync::Arc;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use super::{CoeffBounds, FormError, Frame, Grading, SpectralForm};
use crate::lattice::{Lattice, ModeIndex};

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> FormError {
    FormError::Parse { location: location.into(), message: message.into() }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, FormError> {
    obj.get(key).ok_or_else(|| parse_err(path, format!("missing field \"{key}\"")))
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, FormError> {
    v.as_object().ok_or_else(|| parse_err(path, "expected an object"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, FormError> {
    v.as_array().ok_or_else(|| parse_err(path, "expected an array"))
}

fn as_int(v: &Value, path: &str) -> Result<i64, FormError> {
    match v {
        Value::Number(n) => n.as_i64().ok_or_else(|| parse_err(path, "expected an integer")),
        Value::String(s) => s.trim().parse().map_err(|_| parse_err(path, format!("\"{s}\" is not an integer"))),
        _ => Err(parse_err(path, "expected an integer")),
    }
}

fn as_real(v: &Value, path: &str) -> Result<f64, FormError> {
    let x = match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| parse_err(path, "expected a number"))?,
        Value::String(s) => {
            s.trim().parse().map_err(|_| parse_err(path, format!("\"{s}\" is not a decimal number")))?
        }
        _ => return Err(parse_err(path, "expected a decimal string")),
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(parse_err(path, "non-finite value"))
    }
}

fn small_int<T: TryFrom<i64>>(v: &Value, path: &str, range: &str) -> Result<T, FormError> {
    let n = as_int(v, path)?;
    T::try_from(n).map_err(|_| parse_err(path, format!("{n} is out of range ({range})")))
}

fn index_set(v: &Value, path: &str) -> Result<Vec<u8>, FormError> {
    as_array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let p = format!("{path}[{i}]");
            match as_int(x, &p)? {
                n @ 1..=2 => Ok(n as u8),
                n => Err(parse_err(p, format!("index {n} is not 1 or 2"))),
            }
        })
        .collect()
}

fn grading_of(obj: &Map<String, Value>) -> Result<Grading, FormError> {
    if let Some(b) = obj.get("bidegree") {
        let arr = as_array(b, "bidegree")?;
        if arr.len() != 2 {
            return Err(parse_err("bidegree", "expected [p, q]"));
        }
        let p: u8 = small_int(&arr[0], "bidegree[0]", "0..=2")?;
        let q: u8 = small_int(&arr[1], "bidegree[1]", "0..=2")?;
        if p > 2 || q > 2 {
            return Err(parse_err("bidegree", format!("({p},{q}) is outside 0..=2")));
        }
        Ok(Grading::Bidegree(p, q))
    } else if let Some(d) = obj.get("degree") {
        let k: u8 = small_int(d, "degree", "0..=4")?;
        if k > 4 {
            return Err(parse_err("degree", format!("{k} is outside 0..=4")));
        }
        Ok(Grading::Degree(k))
    } else {
        Err(parse_err("<root>", "missing field \"bidegree\""))
    }
}

/// Parses a form file. Zero terms are dropped and repeated entries are summed.
pub fn parse_form(text: &str, lattice: Arc<Lattice>) -> Result<SpectralForm, FormError> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| parse_err(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
    let obj = as_object(&root, "<root>")?;
    let grading = grading_of(obj)?;
    let entries = as_array(field(obj, "entries", "<root>")?, "entries")?;

    let mut raw = Vec::new();
    let mut bounds = CoeffBounds::default();
    for (ei, entry) in entries.iter().enumerate() {
        let ep = format!("entries[{ei}]");
        let e = as_object(entry, &ep)?;
        let sp = format!("{ep}.sigma");
        let sigma = as_array(field(e, "sigma", &ep)?, &sp)?;
        if sigma.len() != 3 {
            return Err(parse_err(sp, "expected [s1, s2, s3]"));
        }
        let mut s = [0i32; 3];
        for (i, x) in sigma.iter().enumerate() {
            s[i] = small_int(x, &format!("{sp}[{i}]"), "i32")?;
        }
        let holo = index_set(field(e, "I", &ep)?, &format!("{ep}.I"))?;
        let anti = index_set(field(e, "J", &ep)?, &format!("{ep}.J"))?;
        let frame = Frame::from_indices(&holo, &anti).ok_or_else(|| parse_err(&ep, "repeated index in I or J"))?;
        if !grading.admits(frame) {
            return Err(parse_err(&ep, format!("frame {frame} does not have grading {grading}")));
        }
        let tp = format!("{ep}.terms");
        for (ti, term) in as_array(field(e, "terms", &ep)?, &tp)?.iter().enumerate() {
            let p = format!("{tp}[{ti}]");
            let t = as_object(term, &p)?;
            let re = as_real(field(t, "re", &p)?, &format!("{p}.re"))?;
            let im = as_real(field(t, "im", &p)?, &format!("{p}.im"))?;
            let k: u32 = small_int(field(t, "k", &p)?, &format!("{p}.k"), "k >= 0")?;
            let m: i32 = small_int(field(t, "m", &p)?, &format!("{p}.m"), "i32")?;
            bounds = bounds.union(CoeffBounds { k_max: k, m_max: m.unsigned_abs() });
            raw.push((ModeIndex(s), frame, Complex64::new(re, im), k, m));
        }
    }

    let mut form = SpectralForm::zero(lattice, grading).with_bounds(bounds);
    for (s, f, c, k, m) in raw {
        form.add_term(s, f, c, k, m)?;
    }
    Ok(form)
}

/// Shortest round-trip decimal, with `-0` written as `0`.
fn decimal(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

/// Form file as a JSON value in canonical order.
pub fn form_to_json(f: &SpectralForm) -> Value {
    let entries: Vec<Value> = f
        .entries()
        .map(|(s, frame, coeff)| {
            let terms: Vec<Value> = coeff
                .terms()
                .map(|(k, m, c)| json!({"re": decimal(c.re), "im": decimal(c.im), "k": k, "m": m}))
                .collect();
            json!({"sigma": s.0, "I": frame.holo(), "J": frame.anti(), "terms": terms})
        })
        .collect();
    match f.grading() {
        Grading::Bidegree(p, q) => json!({"bidegree": [p, q], "entries": entries}),
        Grading::Degree(k) => json!({"degree": k, "entries": entries}),
    }
}

/// Canonical pretty-printed form file.
pub fn serialize_form(f: &SpectralForm) -> String {
    let mut s = serde_json::to_string_pretty(&form_to_json(f)).expect("json values always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specform::CoeffFunction;

    fn lat() -> Arc<Lattice> {
        Arc::new(Lattice::reference())
    }

    const CANONICAL: &str = r#"{
  "bidegree": [
    1,
    1
  ],
  "entries": [
    {
      "sigma": [
        0,
        0,
        0
      ],
      "I": [
        1
      ],
      "J": [
        1
      ],
      "terms": [
        {
          "re": "0",
          "im": "1.5",
          "k": 1,
          "m": 0
        }
      ]
    },
    {
      "sigma": [
        1,
        -1,
        0
      ],
      "I": [
        2
      ],
      "J": [
        1
      ],
      "terms": [
        {
          "re": "-0.25",
          "im": "0",
          "k": 0,
          "m": 1
        }
      ]
    }
  ]
}
"#;

    #[test]
    fn canonical_file_round_trips() {
        let f = parse_form(CANONICAL, lat()).unwrap();
        assert_eq!(serialize_form(&f), CANONICAL);
    }

    #[test]
    fn zero_terms_dropped_and_duplicates_summed() {
        let text = r#"{"bidegree": [1, 0], "entries": [
            {"sigma": [0, 0, 0], "I": [1], "J": [], "terms": [{"re": "0", "im": "-0", "k": 0, "m": 0}]},
            {"sigma": [0, 1, 0], "I": [2], "J": [], "terms": [{"re": "1", "im": "0", "k": 0, "m": 0},
                                                            {"re": "2", "im": "0", "k": 0, "m": 0}]}]}"#;
        let f = parse_form(text, lat()).unwrap();
        assert_eq!(f.len(), 1);
        let dz2 = Frame::from_indices(&[2], &[]).unwrap();
        assert_eq!(
            f.coefficient(ModeIndex::new(0, 1, 0), dz2),
            Some(&CoeffFunction::constant(Complex64::new(3.0, 0.0)))
        );
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad_k = r#"{"bidegree": [0, 0], "entries": [{"sigma": [0,0,0], "I": [], "J": [], "terms": [{"re": "1", "im": "0", "k": -1, "m": 0}]}]}"#;
        match parse_form(bad_k, lat()) {
            Err(FormError::Parse { location, .. }) => assert_eq!(location, "entries[0].terms[0].k"),
            other => panic!("unexpected {other:?}"),
        }
        let bad_frame = r#"{"bidegree": [1, 0], "entries": [{"sigma": [0,0,0], "I": [], "J": [1], "terms": []}]}"#;
        assert!(
            matches!(parse_form(bad_frame, lat()), Err(FormError::Parse { location, .. }) if location == "entries[0]")
        );
        match parse_form("{\"bidegree\": [0, 0],\n  \"entries\": [", lat()) {
            Err(FormError::Parse { location, .. }) => assert!(location.starts_with("line 2")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mixed_degree_files() {
        let text = r#"{"degree": 1, "entries": [
            {"sigma": [0,0,0], "I": [1], "J": [], "terms": [{"re": "1", "im": "0", "k": 0, "m": 0}]},
            {"sigma": [0,0,0], "I": [], "J": [2], "terms": [{"re": "1", "im": "0", "k": 0, "m": 0}]}]}"#;
        let f = parse_form(text, lat()).unwrap();
        assert_eq!(f.grading(), Grading::Degree(1));
        assert_eq!(parse_form(&serialize_form(&f), lat()).unwrap(), f);
    }
}
