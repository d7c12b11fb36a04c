//! Parser and serializer for the scenario text format.
//!
//! The format is line-oriented: `[section]` headers followed by
//! `key = value` pairs. `#` starts a comment running to end of line; blank
//! lines are ignored. Angles are radians unless suffixed with `deg`; points
//! are written `(x,y)` and path values are space-separated point lists.
//!
//! ```text
//! [photon1]
//! distance = 1
//! polarizer = 0deg
//! [photon2]
//! path = (2,0) (2,5) (3,5) (3,0) (4,0)
//! deviation = mirrors
//! ```

use super::{
    structural_diagnostics, CollapseOrder, DeviationMode, FeedForward, Point, RunConfig, Scenario,
    Severity,
};
use crate::polarization::Angle;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}, column {column}: syntax error: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: duplicate section [{name}]")]
    DuplicateSection { name: String, line: usize },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { name: String, line: usize },
    #[error("line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey {
        section: String,
        key: String,
        line: usize,
    },
    #[error("line {line}: duplicate key `{key}` in section [{section}]")]
    DuplicateKey {
        section: String,
        key: String,
        line: usize,
    },
    #[error("{field}: {message}")]
    Semantic { field: String, message: String },
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn semantic(field: &str, message: impl Into<String>) -> ParseError {
    ParseError::Semantic {
        field: field.to_string(),
        message: message.into(),
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("source", &[]),
    ("photon1", &["distance", "polarizer"]),
    ("photon2", &["distance", "path", "deviation", "polarizer"]),
    ("feedforward", &["enabled", "target", "message_speed"]),
    ("run", &["trials", "seed", "collapse_order"]),
];

#[derive(Debug, Clone)]
struct RawValue {
    text: String,
    line: usize,
    /// 1-based byte column where the value starts on its line.
    column: usize,
}

/// Parses raw bytes, reporting invalid UTF-8 as a syntax error at the
/// offending position.
pub fn parse_scenario_bytes(text: &[u8]) -> Result<Scenario, ParseError> {
    match std::str::from_utf8(text) {
        Ok(s) => parse_scenario(s),
        Err(e) => {
            let prefix = &text[..e.valid_up_to()];
            let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
            let column = prefix.len() - prefix.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1) + 1;
            Err(syntax(line, column, "invalid UTF-8"))
        }
    }
}

/// Parses and validates a scenario. Unknown sections or keys, duplicates,
/// malformed values, and invariant violations are all errors; missing
/// optional keys take their documented defaults.
pub fn parse_scenario(text: &str) -> Result<Scenario, ParseError> {
    let pairs = collect_pairs(text)?;
    let get = |section: &str, key: &str| pairs.get(&(section.to_string(), key.to_string()));

    // [photon1]
    let photon1_distance = match get("photon1", "distance") {
        Some(raw) => parse_number(raw)?,
        None => return Err(semantic("photon1.distance", "required key is missing")),
    };
    let orientation_a = match get("photon1", "polarizer") {
        Some(raw) => parse_angle(raw)?,
        None => Angle::ZERO,
    };

    // [photon2]
    let distance_raw = get("photon2", "distance");
    let path_raw = get("photon2", "path");
    if distance_raw.is_some() && path_raw.is_some() {
        return Err(semantic(
            "photon2.distance",
            "mutually exclusive with photon2.path (the path already fixes the polarizer position)",
        ));
    }
    let photon2_path = match path_raw {
        Some(raw) => parse_points(raw)?,
        None => Vec::new(),
    };
    let photon2_direct_distance = match (distance_raw, photon2_path.last()) {
        (Some(raw), _) => parse_number(raw)?,
        (None, Some(last)) => last.x,
        (None, None) => {
            return Err(semantic(
                "photon2.distance",
                "required when no path is given",
            ))
        }
    };
    let orientation_b = match get("photon2", "polarizer") {
        Some(raw) => parse_angle(raw)?,
        None => Angle::ZERO,
    };
    let deviation_mode = match get("photon2", "deviation") {
        Some(raw) => match raw.text.as_str() {
            "none" => DeviationMode::None,
            "mirrors" => DeviationMode::Mirrors,
            "beamsplitter" => DeviationMode::Beamsplitter,
            other => {
                return Err(semantic(
                    "photon2.deviation",
                    format!("expected `none`, `mirrors` or `beamsplitter`, got `{other}`"),
                ))
            }
        },
        None if photon2_path.is_empty() => DeviationMode::None,
        None => DeviationMode::Mirrors,
    };

    // [feedforward]
    let enabled = match get("feedforward", "enabled") {
        Some(raw) => parse_bool(raw, "feedforward.enabled")?,
        None => false,
    };
    let target = match get("feedforward", "target") {
        Some(raw) => parse_angle(raw)?,
        None => orientation_b,
    };
    let message_speed = match get("feedforward", "message_speed") {
        Some(raw) => parse_number(raw)?,
        None => 1.0,
    };

    // [run]
    let trials = match get("run", "trials") {
        Some(raw) => parse_u64(raw, "run.trials")?,
        None => 10_000,
    };
    let seed = match get("run", "seed") {
        Some(raw) => parse_u64(raw, "run.seed")?,
        None => 0,
    };
    let collapse_order = match get("run", "collapse_order") {
        Some(raw) => match raw.text.as_str() {
            "photon1_first" => CollapseOrder::Photon1First,
            "photon2_first" => CollapseOrder::Photon2First,
            other => {
                return Err(semantic(
                    "run.collapse_order",
                    format!("expected `photon1_first` or `photon2_first`, got `{other}`"),
                ))
            }
        },
        None => CollapseOrder::Photon1First,
    };

    let scenario = Scenario {
        photon1_distance,
        orientation_a,
        photon2_path,
        photon2_direct_distance,
        orientation_b,
        deviation_mode,
        feedforward: FeedForward {
            enabled,
            target,
            message_speed,
        },
        run: RunConfig {
            trials,
            seed,
            collapse_order,
        },
    };

    if let Some(first) = structural_diagnostics(&scenario)
        .iter()
        .find(|d| d.severity == Severity::Error)
    {
        return Err(semantic(&first.field, first.message.clone()));
    }
    Ok(scenario)
}

fn collect_pairs(text: &str) -> Result<BTreeMap<(String, String), RawValue>, ParseError> {
    let mut pairs = BTreeMap::new();
    let mut seen_sections: Vec<String> = Vec::new();
    let mut current: Option<(String, &[&str])> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let stripped = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let trimmed = stripped.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = stripped.len() - stripped.trim_start().len();

        if trimmed.starts_with('[') {
            if !trimmed.ends_with(']') {
                return Err(syntax(line_no, indent + 1, "malformed section header, expected `[name]`"));
            }
            let name = trimmed[1..trimmed.len() - 1].trim().to_string();
            let known = SECTIONS.iter().find(|(n, _)| *n == name);
            let Some((name_ref, keys)) = known else {
                return Err(ParseError::UnknownSection { name, line: line_no });
            };
            if seen_sections.contains(&name) {
                return Err(ParseError::DuplicateSection { name, line: line_no });
            }
            seen_sections.push(name.clone());
            current = Some((name_ref.to_string(), keys));
            continue;
        }

        let Some((section, allowed)) = current.as_ref() else {
            return Err(syntax(line_no, indent + 1, "key outside of any section"));
        };
        let Some(eq) = stripped.find('=') else {
            return Err(syntax(line_no, indent + 1, "expected `key = value`"));
        };
        let key = stripped[..eq].trim().to_string();
        if key.is_empty() {
            return Err(syntax(line_no, indent + 1, "empty key before `=`"));
        }
        if !allowed.contains(&key.as_str()) {
            return Err(ParseError::UnknownKey {
                section: section.clone(),
                key,
                line: line_no,
            });
        }
        let value_text = stripped[eq + 1..].trim();
        let value_offset = eq + 1 + (stripped[eq + 1..].len() - stripped[eq + 1..].trim_start().len());
        if value_text.is_empty() {
            return Err(syntax(line_no, value_offset + 1, "missing value after `=`"));
        }
        let entry = RawValue {
            text: value_text.to_string(),
            line: line_no,
            column: value_offset + 1,
        };
        if pairs.insert((section.clone(), key.clone()), entry).is_some() {
            return Err(ParseError::DuplicateKey {
                section: section.clone(),
                key,
                line: line_no,
            });
        }
    }
    Ok(pairs)
}

fn parse_number(raw: &RawValue) -> Result<f64, ParseError> {
    raw.text
        .parse::<f64>()
        .map_err(|_| syntax(raw.line, raw.column, format!("expected a number, got `{}`", raw.text)))
}

fn parse_u64(raw: &RawValue, field: &str) -> Result<u64, ParseError> {
    raw.text.parse::<u64>().map_err(|_| {
        semantic(
            field,
            format!("expected a non-negative integer, got `{}`", raw.text),
        )
    })
}

fn parse_bool(raw: &RawValue, field: &str) -> Result<bool, ParseError> {
    match raw.text.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(semantic(
            field,
            format!("expected `true` or `false`, got `{other}`"),
        )),
    }
}

fn parse_angle(raw: &RawValue) -> Result<Angle, ParseError> {
    parse_angle_str(&raw.text)
        .ok_or_else(|| {
            syntax(
                raw.line,
                raw.column,
                format!("expected an angle (number, optionally suffixed `deg`), got `{}`", raw.text),
            )
        })
}

fn parse_angle_str(text: &str) -> Option<Angle> {
    let text = text.trim();
    if let Some(num) = text.strip_suffix("deg") {
        num.trim_end().parse::<f64>().ok().map(Angle::degrees)
    } else {
        text.parse::<f64>().ok().map(Angle::radians)
    }
}

/// Parses a standalone angle literal in the scenario syntax (`0.78` or
/// `45deg`), for command-line use.
pub fn parse_angle_literal(text: &str) -> Result<Angle, String> {
    parse_angle_str(text)
        .ok_or_else(|| format!("expected an angle (number, optionally suffixed `deg`), got `{text}`"))
}

fn parse_points(raw: &RawValue) -> Result<Vec<Point>, ParseError> {
    let mut points = Vec::new();
    let mut rest = raw.text.as_str();
    let mut offset = 0usize;
    loop {
        let skipped = rest.len() - rest.trim_start().len();
        offset += skipped;
        rest = rest.trim_start();
        if rest.is_empty() {
            break;
        }
        if !rest.starts_with('(') {
            return Err(syntax(
                raw.line,
                raw.column + offset,
                "expected `(` starting a point",
            ));
        }
        let Some(close) = rest.find(')') else {
            return Err(syntax(raw.line, raw.column + offset, "unclosed point, missing `)`"));
        };
        let inner = &rest[1..close];
        let Some(comma) = inner.find(',') else {
            return Err(syntax(
                raw.line,
                raw.column + offset + 1,
                "expected `,` between point coordinates",
            ));
        };
        let x_text = inner[..comma].trim();
        let y_text = inner[comma + 1..].trim();
        let x = x_text.parse::<f64>().map_err(|_| {
            syntax(
                raw.line,
                raw.column + offset + 1,
                format!("expected a number, got `{x_text}`"),
            )
        })?;
        let y = y_text.parse::<f64>().map_err(|_| {
            syntax(
                raw.line,
                raw.column + offset + 2 + comma,
                format!("expected a number, got `{y_text}`"),
            )
        })?;
        points.push(Point::new(x, y));
        offset += close + 1;
        rest = &rest[close + 1..];
    }
    if points.is_empty() {
        return Err(semantic("photon2.path", "must list at least two points"));
    }
    Ok(points)
}

/// Writes a scenario back out in the text format with every key explicit.
/// Reparsing the output yields a field-identical scenario.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    writeln!(out, "[photon1]").unwrap();
    writeln!(out, "distance = {}", s.photon1_distance).unwrap();
    writeln!(out, "polarizer = {}", s.orientation_a.rad()).unwrap();
    writeln!(out, "[photon2]").unwrap();
    if s.photon2_path.is_empty() {
        writeln!(out, "distance = {}", s.photon2_direct_distance).unwrap();
    } else {
        let points: Vec<String> = s.photon2_path.iter().map(|p| p.to_string()).collect();
        writeln!(out, "path = {}", points.join(" ")).unwrap();
    }
    writeln!(out, "polarizer = {}", s.orientation_b.rad()).unwrap();
    writeln!(out, "deviation = {}", s.deviation_mode).unwrap();
    writeln!(out, "[feedforward]").unwrap();
    writeln!(out, "enabled = {}", s.feedforward.enabled).unwrap();
    writeln!(out, "target = {}", s.feedforward.target.rad()).unwrap();
    writeln!(out, "message_speed = {}", s.feedforward.message_speed).unwrap();
    writeln!(out, "[run]").unwrap();
    writeln!(out, "trials = {}", s.run.trials).unwrap();
    writeln!(out, "seed = {}", s.run.seed).unwrap();
    writeln!(out, "collapse_order = {}", s.run.collapse_order).unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    const FIG2: &str = "\
[photon1]
distance = 1
polarizer = 0deg
[photon2]
path = (2,0) (2,5) (3,5) (3,0) (4,0)
polarizer = 45deg
deviation = mirrors
[feedforward]
enabled = true
target = 45deg
[run]
trials = 100000
seed = 42
";

    #[test]
    fn minimal_file_takes_defaults() {
        let s = parse_scenario("[photon1]\ndistance = 1\n[photon2]\ndistance = 1\n").unwrap();
        assert_eq!(s.photon1_distance, 1.0);
        assert_eq!(s.photon2_direct_distance, 1.0);
        assert_eq!(s.orientation_a, Angle::ZERO);
        assert_eq!(s.orientation_b, Angle::ZERO);
        assert_eq!(s.deviation_mode, DeviationMode::None);
        assert!(!s.feedforward.enabled);
        assert_eq!(s.feedforward.message_speed, 1.0);
        assert_eq!(s.run.trials, 10_000);
        assert_eq!(s.run.seed, 0);
        assert_eq!(s.run.collapse_order, CollapseOrder::Photon1First);
    }

    #[test]
    fn default_fig2_file_field_by_field() {
        let s = parse_scenario(FIG2).unwrap();
        assert_eq!(s.photon1_distance, 1.0);
        assert_eq!(s.orientation_a, Angle::degrees(0.0));
        assert_eq!(
            s.photon2_path,
            vec![
                Point::new(2.0, 0.0),
                Point::new(2.0, 5.0),
                Point::new(3.0, 5.0),
                Point::new(3.0, 0.0),
                Point::new(4.0, 0.0),
            ]
        );
        assert_eq!(s.photon2_direct_distance, 4.0);
        assert!((s.orientation_b.rad() - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(s.deviation_mode, DeviationMode::Mirrors);
        assert!(s.feedforward.enabled);
        assert!((s.feedforward.target.rad() - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(s.run.trials, 100_000);
        assert_eq!(s.run.seed, 42);
    }

    #[test]
    fn negative_distance_names_the_key() {
        let err = parse_scenario("[photon1]\ndistance = -1\n[photon2]\ndistance = 1\n")
            .unwrap_err();
        match err {
            ParseError::Semantic { field, .. } => assert_eq!(field, "photon1.distance"),
            other => panic!("expected semantic error, got {other:?}"),
        }
    }

    #[test]
    fn message_speed_out_of_range() {
        let text = "[photon1]\ndistance = 1\n[photon2]\ndistance = 1\n[feedforward]\nmessage_speed = 1.5\n";
        let err = parse_scenario(text).unwrap_err();
        assert!(matches!(err, ParseError::Semantic { field, .. } if field == "feedforward.message_speed"));
    }

    #[test]
    fn malformed_section_header_reports_line() {
        let err = parse_scenario("[photon1]\ndistance = 1\n[photon2\ndistance = 1\n").unwrap_err();
        match err {
            ParseError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_and_duplicate_structures() {
        assert!(matches!(
            parse_scenario("[photon3]\n").unwrap_err(),
            ParseError::UnknownSection { .. }
        ));
        assert!(matches!(
            parse_scenario("[photon1]\ndistance = 1\nweight = 2\n").unwrap_err(),
            ParseError::UnknownKey { .. }
        ));
        assert!(matches!(
            parse_scenario("[photon1]\ndistance = 1\n[photon1]\n").unwrap_err(),
            ParseError::DuplicateSection { .. }
        ));
        assert!(matches!(
            parse_scenario("[photon1]\ndistance = 1\ndistance = 2\n").unwrap_err(),
            ParseError::DuplicateKey { .. }
        ));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# experiment\n\n[photon1]\ndistance = 1 # one light-unit\n\n[photon2]\ndistance = 1\n";
        assert!(parse_scenario(text).is_ok());
    }

    #[test]
    fn path_and_distance_conflict() {
        let text = "[photon1]\ndistance = 1\n[photon2]\ndistance = 4\npath = (2,0) (4,0)\n";
        let err = parse_scenario(text).unwrap_err();
        assert!(matches!(err, ParseError::Semantic { field, .. } if field == "photon2.distance"));
    }

    #[test]
    fn point_syntax_errors_carry_position() {
        let text = "[photon1]\ndistance = 1\n[photon2]\npath = (2,0) 2,5)\n";
        match parse_scenario(text).unwrap_err() {
            ParseError::Syntax { line, column, .. } => {
                assert_eq!(line, 4);
                assert!(column > 7);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn angles_accept_deg_suffix_and_radians() {
        let s = parse_scenario(
            "[photon1]\ndistance = 1\npolarizer = 90deg\n[photon2]\ndistance = 1\npolarizer = 1.5\n",
        )
        .unwrap();
        assert!((s.orientation_a.rad() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(s.orientation_b.rad(), 1.5);
    }

    #[test]
    fn serialize_roundtrip_fig2() {
        let s = parse_scenario(FIG2).unwrap();
        let text = serialize_scenario(&s);
        let reparsed = parse_scenario(&text).unwrap();
        assert_eq!(s, reparsed);
    }

    #[test]
    fn invalid_utf8_is_a_syntax_error() {
        let err = parse_scenario_bytes(b"[photon1]\ndistance = \xff1\n").unwrap_err();
        match err {
            ParseError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }
}
