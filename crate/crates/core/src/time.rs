use chrono::{DateTime, NaiveDate, NaiveDateTime, SubsecRound, TimeZone, Utc};

/// How much of a timestamp the source actually specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Precision {
    Second,
    Day,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ParsedTime {
    pub instant: DateTime<Utc>,
    pub precision: Precision,
    /// The source carried no offset and was read as UTC.
    pub assumed_utc: bool,
}

/// Parses the timestamp shapes found in manifests and sidecars: RFC 3339,
/// EXIF `YYYY:MM:DD HH:MM:SS`, naive ISO date-times and bare dates.
/// Results are truncated to whole seconds.
pub(crate) fn parse_timestamp(raw: &str) -> Option<ParsedTime> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(ParsedTime {
            instant: dt.with_timezone(&Utc).trunc_subsecs(0),
            precision: Precision::Second,
            assumed_utc: false,
        });
    }
    for fmt in ["%Y:%m:%d %H:%M:%S%:z", "%Y-%m-%dT%H:%M:%S%:z", "%Y-%m-%d %H:%M:%S%:z"] {
        if let Ok(dt) = DateTime::parse_from_str(raw, fmt) {
            return Some(ParsedTime {
                instant: dt.with_timezone(&Utc).trunc_subsecs(0),
                precision: Precision::Second,
                assumed_utc: false,
            });
        }
    }
    for fmt in [
        "%Y:%m:%d %H:%M:%S",
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y:%m:%d %H:%M:%S%.f",
    ] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(ParsedTime {
                instant: Utc.from_utc_datetime(&naive).trunc_subsecs(0),
                precision: Precision::Second,
                assumed_utc: true,
            });
        }
    }
    for fmt in ["%Y-%m-%d", "%Y:%m:%d"] {
        if let Ok(date) = NaiveDate::parse_from_str(raw, fmt) {
            let naive = date.and_hms_opt(0, 0, 0)?;
            return Some(ParsedTime {
                instant: Utc.from_utc_datetime(&naive),
                precision: Precision::Day,
                assumed_utc: true,
            });
        }
    }
    None
}

/// `2016-04-17T14:03:00Z`
pub(crate) fn format_utc(instant: &DateTime<Utc>) -> String {
    instant.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

pub(crate) fn now_millis() -> DateTime<Utc> {
    Utc::now().trunc_subsecs(3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_shapes() {
        let expected = Utc.with_ymd_and_hms(2016, 4, 17, 14, 3, 0).unwrap();
        for raw in [
            "2016-04-17T14:03:00Z",
            "2016-04-17T16:03:00+02:00",
            "2016:04:17 14:03:00",
            "2016-04-17T14:03:00.750Z",
        ] {
            assert_eq!(parse_timestamp(raw).unwrap().instant, expected, "{raw}");
        }
        let day = parse_timestamp("2016-04-17").unwrap();
        assert_eq!(day.precision, Precision::Day);
        assert_eq!(format_utc(&day.instant), "2016-04-17T00:00:00Z");
        assert!(parse_timestamp("yesterday").is_none());
    }
}
