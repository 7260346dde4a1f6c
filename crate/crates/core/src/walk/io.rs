//! Text format for custom step distributions.
//!
//! ```text
//! # comment
//! laziness = 0.25
//! 1 0 0.25
//! -1 0 0.25
//! 0 1 0.25
//! 0 -1 0.25
//! ```
//!
//! Each data line is `v1 ... vd probability`; the dimension is the number
//! of columns minus one and must agree across lines. The optional
//! `laziness` header applies [`make_lazy`](super::make_lazy) to the listed
//! atoms after they are validated. Lines listing the zero vector add mass
//! to the zero step directly.

use super::{make_lazy, StepDistribution};
use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::num::Real;
use std::path::Path;

pub fn parse_distribution<T: Real>(text: &str) -> Result<StepDistribution<T>> {
    let mut eta: Option<T> = None;
    let mut dim: Option<usize> = None;
    let mut atoms = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            line: lineno + 1,
            msg,
        };
        if let Some((key, value)) = line.split_once('=') {
            let value = value.trim();
            match key.trim() {
                "laziness" => {
                    let v: f64 = value
                        .parse()
                        .map_err(|e| err(format!("bad laziness `{value}`: {e}")))?;
                    eta = Some(T::lit(v));
                }
                "dim" => {
                    dim = Some(
                        value
                            .parse()
                            .map_err(|e| err(format!("bad dim `{value}`: {e}")))?,
                    );
                }
                other => return Err(err(format!("unknown header key `{other}`"))),
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 {
            return Err(err("expected `v1 ... vd probability`".into()));
        }
        let d = fields.len() - 1;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(err(format!("{d} coordinates, expected {expected}")))
            }
            _ => {}
        }
        let coords = fields[..d]
            .iter()
            .map(|f| f.parse::<i64>().map_err(|e| err(format!("bad coordinate `{f}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let q: f64 = fields[d]
            .parse()
            .map_err(|e| err(format!("bad probability `{}`: {e}", fields[d])))?;
        let site = Site::new(&coords).map_err(|e| err(e.to_string()))?;
        atoms.push((site, T::lit(q)));
    }
    let dim = dim.ok_or_else(|| Error::Parse {
        line: 0,
        msg: "no atoms listed".into(),
    })?;
    let base = StepDistribution::new(dim, atoms, T::zero())?;
    match eta {
        Some(e) => make_lazy(&base, e),
        None => Ok(base),
    }
}

pub fn read_distribution<T: Real>(path: impl AsRef<Path>) -> Result<StepDistribution<T>> {
    parse_distribution(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::make_simple_walk;

    #[test]
    fn parses_lazy_simple() {
        let text = "# simple walk\nlaziness = 0.5\n1 0 0.25\n-1 0 0.25\n0 1 0.25\n0 -1 0.25\n";
        let d: StepDistribution<f64> = parse_distribution(text).unwrap();
        let expect = make_lazy(&make_simple_walk(2).unwrap(), 0.5).unwrap();
        assert_eq!(d, expect);
    }

    #[test]
    fn rejects_mixed_dimensions_and_bad_keys() {
        assert!(parse_distribution::<f64>("1 0 0.5\n-1 0.5\n").is_err());
        assert!(parse_distribution::<f64>("color = red\n1 0.5\n-1 0.5\n").is_err());
        assert!(parse_distribution::<f64>("").is_err());
        assert!(parse_distribution::<f64>("1 0.6\n-1 0.4\n").is_err());
    }

    #[test]
    fn zero_lines_become_laziness() {
        let d: StepDistribution<f64> = parse_distribution("0 0.5\n1 0.25\n-1 0.25\n").unwrap();
        assert_eq!(d.laziness(), 0.5);
        assert_eq!(d.atoms().len(), 2);
    }
}
