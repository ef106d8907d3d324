//! Problem files: TOML key/value text describing one ODE system.
//!
//! ```text
//! name = "intro"
//! dim = 2
//! f1 = "-y2"
//! f2 = "y1"
//! start_lo = 1
//! start_hi = 2
//! t0 = 0
//! t1 = 2
//! gen1 = "y1"          # optional known generator, all of gen1..gend
//! gen2 = "y2"
//! r = "t"              # optional canonical transform, r, v, s1..s{d-1}
//! v = "log(y1) + y2/y1"
//! s1 = "y2/y1"
//! ```

use std::path::Path;

use thiserror::Error;

use crate::expr::{parse, Expr, ExprError};
use crate::odeint::{OdeError, OdeSystem};
use crate::symmetry::CanonicalTransform;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("key `{key}` must be {expected}")]
    Type { key: String, expected: &'static str },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("`dim` must be at least 1")]
    Dimension,
    #[error("incomplete {what}: expected keys {expected}")]
    Incomplete { what: &'static str, expected: String },
    #[error("`{key}`: {source}")]
    Expr { key: String, source: ExprError },
    #[error(transparent)]
    System(#[from] OdeError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemFile {
    pub name: String,
    pub dim: usize,
    pub f: Vec<String>,
    pub start_range: (f64, f64),
    pub time_interval: (f64, f64),
    pub known_generator: Option<Vec<String>>,
    /// `(r, v, [s1, …])`.
    pub canonical: Option<(String, String, Vec<String>)>,
}

fn get_str(t: &toml::Table, key: &str) -> Result<Option<String>, ProblemError> {
    match t.get(key) {
        None => Ok(None),
        Some(toml::Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(ProblemError::Type {
            key: key.into(),
            expected: "a string",
        }),
    }
}

fn req_str(t: &toml::Table, key: &str) -> Result<String, ProblemError> {
    get_str(t, key)?.ok_or_else(|| ProblemError::Missing(key.into()))
}

fn req_f64(t: &toml::Table, key: &str) -> Result<f64, ProblemError> {
    match t.get(key) {
        None => Err(ProblemError::Missing(key.into())),
        Some(toml::Value::Float(x)) => Ok(*x),
        Some(toml::Value::Integer(i)) => Ok(*i as f64),
        Some(_) => Err(ProblemError::Type {
            key: key.into(),
            expected: "a number",
        }),
    }
}

/// All of `prefix1..prefix{n}` or none of them.
fn numbered(t: &toml::Table, prefix: &str, n: usize, what: &'static str) -> Result<Option<Vec<String>>, ProblemError> {
    let vals = (1..=n)
        .map(|i| get_str(t, &format!("{prefix}{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    if vals.iter().all(Option::is_none) {
        return Ok(None);
    }
    if vals.iter().any(Option::is_none) {
        return Err(ProblemError::Incomplete {
            what,
            expected: format!("{prefix}1..{prefix}{n}"),
        });
    }
    Ok(Some(vals.into_iter().flatten().collect()))
}

/// `i` if `key` is exactly `{prefix}{i}`.
fn index_of(key: &str, prefix: &str) -> Option<usize> {
    let i: usize = key.strip_prefix(prefix)?.parse().ok()?;
    (format!("{prefix}{i}") == key).then_some(i)
}

fn parse_component(key: &str, s: &str, dim: usize) -> Result<Expr, ProblemError> {
    let e = parse(s, dim).map_err(|source| ProblemError::Expr {
        key: key.into(),
        source,
    })?;
    if e.root_count() != 1 {
        return Err(ProblemError::Expr {
            key: key.into(),
            source: ExprError::ComponentCount {
                expected: 1,
                found: e.root_count(),
            },
        });
    }
    Ok(e)
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, ProblemError> {
        let t: toml::Table = text.parse()?;
        let dim = match t.get("dim") {
            Some(toml::Value::Integer(i)) if *i >= 1 => *i as usize,
            Some(toml::Value::Integer(_)) => return Err(ProblemError::Dimension),
            Some(_) => {
                return Err(ProblemError::Type {
                    key: "dim".into(),
                    expected: "an integer",
                })
            }
            None => return Err(ProblemError::Missing("dim".into())),
        };
        let s_max = dim.saturating_sub(1);
        for key in t.keys() {
            let known = matches!(
                key.as_str(),
                "name" | "dim" | "start_lo" | "start_hi" | "t0" | "t1" | "r" | "v"
            ) || [("f", dim), ("gen", dim), ("s", s_max)]
                .iter()
                .any(|&(p, n)| index_of(key, p).is_some_and(|i| (1..=n).contains(&i)));
            if !known {
                return Err(ProblemError::UnknownKey(key.clone()));
            }
        }
        let f = numbered(&t, "f", dim, "right-hand side")?.ok_or_else(|| ProblemError::Missing("f1".into()))?;
        let known_generator = numbered(&t, "gen", dim, "generator")?;
        let r = get_str(&t, "r")?;
        let v = get_str(&t, "v")?;
        let s = if s_max == 0 { Some(Vec::new()) } else { numbered(&t, "s", s_max, "canonical transform")? };
        let canonical = match (r, v, s) {
            (None, None, None) => None,
            (None, None, Some(s)) if s.is_empty() => None,
            (Some(r), Some(v), Some(s)) => Some((r, v, s)),
            _ => {
                return Err(ProblemError::Incomplete {
                    what: "canonical transform",
                    expected: if s_max == 0 {
                        "r, v".into()
                    } else {
                        format!("r, v, s1..s{s_max}")
                    },
                })
            }
        };
        let pf = ProblemFile {
            name: req_str(&t, "name")?,
            dim,
            f,
            start_range: (req_f64(&t, "start_lo")?, req_f64(&t, "start_hi")?),
            time_interval: (req_f64(&t, "t0")?, req_f64(&t, "t1")?),
            known_generator,
            canonical,
        };
        pf.system()?;
        pf.generator().transpose()?;
        pf.canonical_transform().transpose()?;
        Ok(pf)
    }

    /// Problem-file text; keys in canonical order.
    pub fn to_toml(&self) -> String {
        let q = |s: &str| toml::Value::String(s.to_string()).to_string();
        let mut out = format!("name = {}\ndim = {}\n", q(&self.name), self.dim);
        for (i, f) in self.f.iter().enumerate() {
            out += &format!("f{} = {}\n", i + 1, q(f));
        }
        out += &format!(
            "start_lo = {:?}\nstart_hi = {:?}\nt0 = {:?}\nt1 = {:?}\n",
            self.start_range.0, self.start_range.1, self.time_interval.0, self.time_interval.1
        );
        for (i, g) in self.known_generator.iter().flatten().enumerate() {
            out += &format!("gen{} = {}\n", i + 1, q(g));
        }
        if let Some((r, v, s)) = &self.canonical {
            out += &format!("r = {}\nv = {}\n", q(r), q(v));
            for (i, x) in s.iter().enumerate() {
                out += &format!("s{} = {}\n", i + 1, q(x));
            }
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self, ProblemError> {
        let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn system(&self) -> Result<OdeSystem, ProblemError> {
        let parts = self
            .f
            .iter()
            .enumerate()
            .map(|(i, s)| parse_component(&format!("f{}", i + 1), s, self.dim))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(OdeSystem::new(
            self.name.clone(),
            Expr::stack(&parts),
            self.start_range,
            self.time_interval,
        )?)
    }

    pub fn generator(&self) -> Option<Result<Expr, ProblemError>> {
        let g = self.known_generator.as_ref()?;
        Some(
            g.iter()
                .enumerate()
                .map(|(i, s)| parse_component(&format!("gen{}", i + 1), s, self.dim))
                .collect::<Result<Vec<_>, _>>()
                .map(|parts| Expr::stack(&parts)),
        )
    }

    pub fn canonical_transform(&self) -> Option<Result<CanonicalTransform, ProblemError>> {
        let (r, v, s) = self.canonical.as_ref()?;
        Some(canonical_from_strings(self.dim, r, v, s))
    }
}

pub(crate) fn canonical_from_strings(
    dim: usize,
    r: &str,
    v: &str,
    s: &[String],
) -> Result<CanonicalTransform, ProblemError> {
    Ok(CanonicalTransform {
        r: parse_component("r", r, dim)?,
        v: parse_component("v", v, dim)?,
        s: s.iter()
            .enumerate()
            .map(|(i, x)| parse_component(&format!("s{}", i + 1), x, dim))
            .collect::<Result<_, _>>()?,
    })
}
