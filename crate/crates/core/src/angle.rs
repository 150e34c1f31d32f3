//! Angles written as plain radians or as multiples of pi ("pi/3", "7pi/9",
//! "0.6pi", "-pi/2", "29*pi/36"). Used by config files and the CLI.

use serde::{Deserialize, Deserializer};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("cannot parse angle `{0}`: expected radians or a multiple of pi such as `7pi/9`")]
pub struct AngleParseError(pub String);

pub fn parse_angle(text: &str) -> Result<f64, AngleParseError> {
    let err = || AngleParseError(text.to_string());
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(err());
    }
    if let Ok(v) = compact.parse::<f64>() {
        return Ok(v);
    }
    let lower = compact.to_ascii_lowercase();
    let Some(idx) = lower.find("pi") else {
        return Err(err());
    };
    let (head, tail) = (&lower[..idx], &lower[idx + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let factor = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| err())?,
    };
    let divisor = match tail {
        "" => 1.0,
        t => t
            .strip_prefix('/')
            .ok_or_else(err)?
            .parse::<f64>()
            .map_err(|_| err())?,
    };
    if divisor == 0.0 {
        return Err(err());
    }
    Ok(factor * PI / divisor)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawAngle {
    Number(f64),
    Text(String),
}

/// serde helper: accepts a float or a pi-expression string.
pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    match RawAngle::deserialize(d)? {
        RawAngle::Number(v) => Ok(v),
        RawAngle::Text(s) => parse_angle(&s).map_err(serde::de::Error::custom),
    }
}

pub fn deserialize_opt<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    match Option::<RawAngle>::deserialize(d)? {
        None => Ok(None),
        Some(RawAngle::Number(v)) => Ok(Some(v)),
        Some(RawAngle::Text(s)) => parse_angle(&s).map(Some).map_err(serde::de::Error::custom),
    }
}
