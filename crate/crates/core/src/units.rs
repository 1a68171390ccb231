//! Serde helpers for floats that may be infinite. JSON has no infinity, so
//! `+inf` / `-inf` are written as the strings `"inf"` / `"-inf"`.

pub mod ext_float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                other => Err(de::Error::custom(format!(
                    "expected a number or \"inf\"/\"-inf\", got {other:?}"
                ))),
            },
        }
    }
}

/// Same as [`ext_float`] for `Option<f64>`.
pub mod ext_float_opt {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::ext_float")] f64);

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct T {
        #[serde(with = "super::ext_float")]
        x: f64,
        #[serde(with = "super::ext_float_opt", default)]
        y: Option<f64>,
    }

    #[test]
    fn infinities_round_trip_through_json_and_toml() {
        for x in [f64::INFINITY, f64::NEG_INFINITY, -22.2] {
            let t = T {
                x,
                y: Some(f64::INFINITY),
            };
            let j = serde_json::to_string(&t).unwrap();
            assert_eq!(serde_json::from_str::<T>(&j).unwrap(), t);
            let s = toml::to_string(&t).unwrap();
            assert_eq!(toml::from_str::<T>(&s).unwrap(), t);
        }
        assert_eq!(
            serde_json::to_string(&T {
                x: f64::NEG_INFINITY,
                y: None
            })
            .unwrap(),
            r#"{"x":"-inf","y":null}"#
        );
        assert!(serde_json::from_str::<T>(r#"{"x":"lots"}"#).is_err());
    }
}
