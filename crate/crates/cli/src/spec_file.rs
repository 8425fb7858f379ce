//! Flat key-value search specs:
//!
//! ```text
//! # lines are `key = value` or `key: value`
//! d_min = 8
//! d_max = 9
//! k1_lo = 1.0
//! k1_hi = 1.1
//! k1_n = 100
//! ...
//! exhaustive = false
//! ```

use std::collections::BTreeMap;

use bcclace::bootstrap::{AxisSpec, SearchSpec};

use crate::error::CliError;

const KEYS: [&str; 12] =
    ["d_min", "d_max", "k1_lo", "k1_hi", "k1_n", "k2_lo", "k2_hi", "k2_n", "k3_lo", "k3_hi", "k3_n", "exhaustive"];

pub fn parse(text: &str) -> Result<SearchSpec, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| CliError::usage(format!("spec line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(CliError::usage(format!("spec line {}: unknown key `{key}`", lineno + 1)));
        }
        if map.insert(key, value.trim()).is_some() {
            return Err(CliError::usage(format!("spec line {}: duplicate key `{key}`", lineno + 1)));
        }
    }
    let get = |key: &str| map.get(key).copied().ok_or_else(|| CliError::usage(format!("spec: missing key `{key}`")));
    let num = |key: &str| -> Result<f64, CliError> {
        get(key)?.parse().map_err(|_| CliError::usage(format!("spec: `{key}` is not a number")))
    };
    let int = |key: &str| -> Result<u32, CliError> {
        get(key)?.parse().map_err(|_| CliError::usage(format!("spec: `{key}` is not a nonnegative integer")))
    };
    let axis = |k: &str| -> Result<AxisSpec, CliError> {
        Ok(AxisSpec::new(num(&format!("{k}_lo"))?, num(&format!("{k}_hi"))?, int(&format!("{k}_n"))?)?)
    };
    let mut spec = SearchSpec::new(int("d_min")?, int("d_max")?, axis("k1")?, axis("k2")?, axis("k3")?)?;
    if let Some(v) = map.get("exhaustive") {
        spec.exhaustive = v.parse().map_err(|_| CliError::usage("spec: `exhaustive` must be true or false"))?;
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = "
        # the reference grid
        d_min = 8
        d_max: 9
        k1_lo = 1.0
        k1_hi = 1.1
        k1_n = 100
        k2_lo = 1.0
        k2_hi = 1.1
        k2_n = 100
        k3_lo = 1.0
        k3_hi = 1.3   # upper end
        k3_n = 100
    ";

    #[test]
    fn reference_spec_parses() {
        assert_eq!(parse(REFERENCE).unwrap(), SearchSpec::reference_grid(8, 9).unwrap());
        let mut ex = parse(&format!("{REFERENCE}\nexhaustive = true")).unwrap();
        assert!(ex.exhaustive);
        ex.exhaustive = false;
        assert_eq!(ex, SearchSpec::reference_grid(8, 9).unwrap());
    }

    #[test]
    fn bad_specs_are_usage_errors() {
        for bad in [
            REFERENCE.replace("k3_n = 100", ""),
            format!("{REFERENCE}\nk4_n = 3"),
            format!("{REFERENCE}\nd_min = 3"),
            REFERENCE.replace("k1_n = 100", "k1_n = many"),
            REFERENCE.replace("k1_n = 100", "k1_n = 0"),
            REFERENCE.replace("k2_hi = 1.1", "k2_hi = 0.9"),
            REFERENCE.replace("d_min = 8", "d_min 8"),
        ] {
            assert!(matches!(parse(&bad), Err(e) if e.exit_code() == crate::error::EXIT_USAGE), "{bad}");
        }
    }
}
