//! Serde helpers that carry reals as decimal strings.
//!
//! Config files spell numbers as strings (`"0.25"`) so no locale or float
//! parsing ambiguity can creep in. Plain JSON numbers are accepted on input.

use serde::{de, Deserialize, Deserializer, Serializer};

fn parse(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a decimal number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Raw {
    Str(String),
    Num(f64),
}

impl Raw {
    fn value(self) -> Result<f64, String> {
        match self {
            Raw::Str(s) => parse(&s),
            Raw::Num(v) if v.is_finite() => Ok(v),
            Raw::Num(v) => Err(format!("{v} is not finite")),
        }
    }
}

/// Format with the shortest representation that round-trips.
pub fn format(v: f64) -> String {
    format!("{v:?}")
}

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format(*v))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Raw::deserialize(d)?.value().map_err(de::Error::custom)
}

pub mod vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&super::format(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Raw>::deserialize(d)?
            .into_iter()
            .map(|r| r.value().map_err(de::Error::custom))
            .collect()
    }
}

pub mod matrix {
    use super::*;

    #[derive(serde::Serialize)]
    struct Row<'a>(#[serde(with = "super::vec")] &'a [f64]);

    pub fn serialize<S: Serializer>(m: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter().map(|r| Row(r)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        Vec::<Vec<Raw>>::deserialize(d)?
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|r| r.value().map_err(de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&super::format(*x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<Raw>::deserialize(d)?
            .map(|r| r.value().map_err(de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Holder {
        #[serde(with = "super")]
        x: f64,
        #[serde(with = "super::vec")]
        v: Vec<f64>,
    }

    #[test]
    fn strings_and_numbers_both_parse() {
        let h: Holder = serde_json::from_str(r#"{"x":"0.1","v":["1e-3",2]}"#).unwrap();
        assert_eq!(h, Holder { x: 0.1, v: vec![1e-3, 2.0] });
        let back = serde_json::to_string(&h).unwrap();
        assert_eq!(back, r#"{"x":"0.1","v":["0.001","2.0"]}"#);
        assert_eq!(serde_json::from_str::<Holder>(&back).unwrap(), h);
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(serde_json::from_str::<Holder>(r#"{"x":"abc","v":[]}"#).is_err());
        assert!(serde_json::from_str::<Holder>(r#"{"x":"inf","v":[]}"#).is_err());
    }
}
