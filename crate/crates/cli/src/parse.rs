//! Parsing of `--params` lists and complex vectors.

use std::collections::BTreeMap;

use hesslab::{catalog, Error, Result, C64};

/// Parses `a=2,b=-1` or `2,-1` into positional parameters for `family`.
///
/// Named parameters missing from `raw` are taken from `context` (e.g. the
/// `m` of `fundamental` from `--m`).
pub fn params(
    family: &str,
    raw: Option<&str>,
    context: &[(&str, Option<usize>)],
) -> Result<Vec<f64>> {
    let names =
        catalog::family_params(family).ok_or_else(|| Error::UnknownFunction(family.to_string()))?;
    let tokens: Vec<&str> = raw
        .unwrap_or("")
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .collect();
    let named = tokens.iter().filter(|t| t.contains('=')).count();
    if named != 0 && named != tokens.len() {
        return Err(Error::Parameter(
            "--params mixes named and positional values".into(),
        ));
    }
    if named == 0 && !tokens.is_empty() {
        return tokens.iter().map(|t| number(t)).collect();
    }
    let mut given = BTreeMap::new();
    for t in &tokens {
        let (k, v) = t.split_once('=').expect("counted above");
        let k = k.trim();
        if !names.contains(&k) {
            return Err(Error::Parameter(format!(
                "{family} has no parameter '{k}' (expected {})",
                names.join(", ")
            )));
        }
        if given.insert(k, number(v)?).is_some() {
            return Err(Error::Parameter(format!("parameter '{k}' given twice")));
        }
    }
    let mut out = Vec::new();
    for name in names {
        if let Some(v) = given.get(name) {
            out.push(*v);
        } else if let Some((_, Some(v))) = context.iter().find(|(k, _)| k == name) {
            out.push(*v as f64);
        } else if matches!(family, "log_abs_zprime" | "log_abs_z2") {
            // p is optional for these
            break;
        } else {
            return Err(Error::Parameter(format!(
                "{family} needs parameter '{name}'"
            )));
        }
    }
    Ok(out)
}

fn number(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parameter(format!("'{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Parameter(format!("'{s}' is not finite")));
    }
    Ok(v)
}

/// `0` for the zero vector, else a comma list of `re` or `re:im` entries.
pub fn complex_vector(s: &str, dim: usize, what: &str) -> Result<Vec<C64>> {
    let s = s.trim();
    if s == "0" {
        return Ok(vec![C64::new(0.0, 0.0); dim]);
    }
    let v = s
        .split(',')
        .map(|t| match t.split_once(':') {
            Some((re, im)) => Ok(C64::new(number(re)?, number(im)?)),
            None => Ok(C64::new(number(t)?, 0.0)),
        })
        .collect::<Result<Vec<_>>>()?;
    if v.len() != dim {
        return Err(Error::Parameter(format!(
            "{what} needs {dim} entries, got {}",
            v.len()
        )));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_and_positional() {
        assert_eq!(
            params("quadratic_ab", Some("a=2, b=-1"), &[]).unwrap(),
            vec![2.0, -1.0]
        );
        assert_eq!(
            params("quadratic_ab", Some("b=-1,a=2"), &[]).unwrap(),
            vec![2.0, -1.0]
        );
        assert_eq!(
            params("quadratic_ab", Some("2,-1"), &[]).unwrap(),
            vec![2.0, -1.0]
        );
        assert!(params("quadratic_ab", Some("a=2,-1"), &[]).is_err());
        assert!(params("quadratic_ab", Some("a=2,c=1"), &[]).is_err());
        assert!(params("quadratic_ab", Some("a=2"), &[]).is_err());
        assert!(params("nope", None, &[]).is_err());
    }

    #[test]
    fn context_fills_gaps() {
        assert_eq!(
            params("fundamental", None, &[("m", Some(2))]).unwrap(),
            vec![2.0]
        );
        assert_eq!(
            params("fundamental", Some("m=3"), &[("m", Some(2))]).unwrap(),
            vec![3.0]
        );
        assert!(params("fundamental", None, &[("m", None)]).is_err());
        assert_eq!(
            params("log_abs_z2", None, &[("p", Some(2))]).unwrap(),
            vec![2.0]
        );
        assert!(params("log_abs_z2", None, &[]).unwrap().is_empty());
    }

    #[test]
    fn vectors() {
        assert_eq!(complex_vector("0", 3, "x").unwrap().len(), 3);
        let v = complex_vector("1, 0.5:-2", 2, "x").unwrap();
        assert_eq!(v, vec![C64::new(1.0, 0.0), C64::new(0.5, -2.0)]);
        assert!(complex_vector("1,2", 3, "x").is_err());
        assert!(complex_vector("1:x", 1, "x").is_err());
    }
}
