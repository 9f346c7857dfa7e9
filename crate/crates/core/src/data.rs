//! Reference datasets and the plain-text sample format.
//!
//! Input files hold positive decimals separated by whitespace, newlines or
//! commas. Blank lines are skipped and `#` starts a comment.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::statistic::Sample;

/// Inter-occurrence times in days, in order of occurrence (Pyke, 1965).
pub const PYKE_1965: [f64; 31] = [
    20.0, 106.0, 14.0, 78.0, 94.0, 20.0, 21.0, 136.0, 56.0, 232.0, 89.0, 33.0, 181.0, 424.0, 14.0,
    430.0, 155.0, 205.0, 117.0, 253.0, 86.0, 260.0, 213.0, 58.0, 276.0, 263.0, 246.0, 341.0,
    1105.0, 50.0, 136.0,
];

/// Failure times of right rear brakes on D9G-66A Caterpillar tractors
/// (Barlow and Campo, 1975).
pub const BARLOW_1975: [f64; 107] = [
    56.0, 83.0, 104.0, 116.0, 244.0, 305.0, 429.0, 452.0, 453.0, 503.0, 552.0, 614.0, 661.0, 673.0,
    683.0, 685.0, 753.0, 763.0, 806.0, 834.0, 838.0, 862.0, 897.0, 904.0, 981.0, 1007.0, 1008.0,
    1049.0, 1060.0, 1107.0, 1125.0, 1141.0, 1153.0, 1154.0, 1193.0, 1201.0, 1253.0, 1313.0, 1329.0,
    1347.0, 1454.0, 1464.0, 1490.0, 1491.0, 1532.0, 1549.0, 1568.0, 1574.0, 1586.0, 1599.0, 1608.0,
    1723.0, 1769.0, 1795.0, 1927.0, 1957.0, 2005.0, 2010.0, 2016.0, 2022.0, 2037.0, 2065.0, 2096.0,
    2139.0, 2150.0, 2156.0, 2160.0, 2190.0, 2210.0, 2220.0, 2248.0, 2285.0, 2325.0, 2337.0, 2351.0,
    2437.0, 2454.0, 2546.0, 2565.0, 2584.0, 2624.0, 2675.0, 2701.0, 2755.0, 2877.0, 2879.0, 2922.0,
    2986.0, 3092.0, 3160.0, 3185.0, 3191.0, 3439.0, 3617.0, 3685.0, 3756.0, 3826.0, 3995.0, 4007.0,
    4159.0, 4300.0, 4487.0, 5074.0, 5579.0, 5623.0, 6869.0, 7739.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dataset {
    Pyke1965,
    Barlow1975,
}

impl Dataset {
    pub const ALL: [Dataset; 2] = [Dataset::Pyke1965, Dataset::Barlow1975];

    pub fn id(&self) -> &'static str {
        match self {
            Dataset::Pyke1965 => "pyke1965",
            Dataset::Barlow1975 => "barlow1975",
        }
    }

    pub fn values(&self) -> &'static [f64] {
        match self {
            Dataset::Pyke1965 => &PYKE_1965,
            Dataset::Barlow1975 => &BARLOW_1975,
        }
    }

    pub fn sample(&self) -> Sample {
        Sample::new(self.values().to_vec()).expect("embedded data are positive")
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dataset::ALL
            .into_iter()
            .find(|d| d.id().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown dataset {s:?}")))
    }
}

/// Parses the sample text format. `origin` labels error messages.
pub fn parse_sample(text: &str, origin: &Path) -> Result<Sample> {
    let mut values = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        let mut rest = content;
        let mut offset = 0;
        while let Some(start) = rest.find(|c: char| !(c.is_whitespace() || c == ',')) {
            let tail = &rest[start..];
            let len = tail
                .find(|c: char| c.is_whitespace() || c == ',')
                .unwrap_or(tail.len());
            let token = &tail[..len];
            let column = offset + start + 1;
            let fail = |message: String| Error::Parse {
                path: origin.display().to_string(),
                line: line_no + 1,
                column,
                message,
            };
            let value: f64 = token
                .parse()
                .map_err(|_| fail(format!("token {} ({token:?}) is not a number", values.len() + 1)))?;
            if !value.is_finite() || value <= 0.0 {
                return Err(fail(format!(
                    "token {} ({token:?}) is not a positive finite value",
                    values.len() + 1
                )));
            }
            values.push(value);
            offset += start + len;
            rest = &tail[len..];
        }
    }
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    Sample::new(values)
}

pub fn parse_data_file(path: &Path) -> Result<Sample> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_sample(&text, path)
}

/// One value per line using the shortest round-tripping decimal form.
pub fn format_sample(x: &Sample) -> String {
    let mut out = String::new();
    for v in x.values() {
        out.push_str(&format!("{v:?}\n"));
    }
    out
}

/// An embedded dataset id or a path to a data file.
pub fn load_sample(source: &str) -> Result<Sample> {
    match source.parse::<Dataset>() {
        Ok(d) => Ok(d.sample()),
        Err(_) => parse_data_file(Path::new(source)),
    }
}
