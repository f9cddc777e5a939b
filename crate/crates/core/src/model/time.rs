//! UTC timestamps at second precision.

use chrono::{DateTime, SecondsFormat, Timelike, Utc};

pub type Timestamp = DateTime<Utc>;

/// Parses an RFC 3339 / ISO-8601 timestamp, converts it to UTC and drops
/// any sub-second part.
pub fn parse_timestamp(text: &str) -> Result<Timestamp, chrono::ParseError> {
    let parsed = DateTime::parse_from_rfc3339(text.trim())?;
    Ok(truncate(parsed.with_timezone(&Utc)))
}

pub fn format_timestamp(ts: &Timestamp) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn truncate(ts: Timestamp) -> Timestamp {
    ts.with_nanosecond(0).unwrap_or(ts)
}

pub(crate) mod serde_ts {
    use super::{format_timestamp, parse_timestamp, Timestamp};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &Timestamp, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_timestamp(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Timestamp, D::Error> {
        let raw = String::deserialize(d)?;
        parse_timestamp(&raw).map_err(|e| D::Error::custom(format!("bad timestamp {raw:?}: {e}")))
    }
}
