use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::export::Format;
use super::IoError;
use crate::mesh::{IntrinsicMesh, SurfacePoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceLocation {
    Vertex(usize),
    Face { face: usize, bary: [f64; 3] },
}

impl SourceLocation {
    pub fn to_point(self, mesh: &IntrinsicMesh) -> crate::Result<SurfacePoint> {
        let p = match self {
            SourceLocation::Vertex(v) => SurfacePoint::vertex(v),
            SourceLocation::Face { face, bary } => SurfacePoint::face(face, bary)?,
        };
        p.validate(mesh)?;
        Ok(p)
    }
}

/// One `--source` argument: `v:<vertex>` or `f:<face>,b:<b0>;<b1>;<b2>`,
/// plus optional `angle:<rad>`, `mag:<m>`, `value:<x>` and `weight:<w>`.
/// Angles are in the vertex polar frame, or the face layout frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub location: SourceLocation,
    pub angle: f64,
    pub magnitude: f64,
    pub value: f64,
    pub weight: f64,
}

impl SourceSpec {
    pub fn vector(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.angle)
    }
}

fn invalid(message: impl Into<String>) -> IoError {
    IoError::Invalid {
        what: "source",
        message: message.into(),
    }
}

pub fn parse_source(text: &str) -> Result<SourceSpec, IoError> {
    let mut vertex = None;
    let mut face = None;
    let mut bary = None;
    let (mut angle, mut magnitude, mut value, mut weight) = (0.0, 1.0, 1.0, 1.0);
    let num = |key: &str, v: &str| -> Result<f64, IoError> {
        let x: f64 = v
            .trim()
            .parse()
            .map_err(|_| invalid(format!("'{key}' needs a number, got '{v}'")))?;
        if !x.is_finite() {
            return Err(invalid(format!("'{key}' must be finite")));
        }
        Ok(x)
    };
    let index = |key: &str, v: &str| -> Result<usize, IoError> {
        v.trim()
            .parse()
            .map_err(|_| invalid(format!("'{key}' needs an index, got '{v}'")))
    };
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, v) = part
            .split_once(':')
            .ok_or_else(|| invalid(format!("expected key:value, got '{part}'")))?;
        match key.trim() {
            "v" => vertex = Some(index("v", v)?),
            "f" => face = Some(index("f", v)?),
            "b" => {
                let b: Vec<f64> = v
                    .split(';')
                    .map(|x| num("b", x))
                    .collect::<Result<_, _>>()?;
                let b: [f64; 3] = b
                    .try_into()
                    .map_err(|_| invalid("'b' needs three values separated by ';'"))?;
                bary = Some(b);
            }
            "angle" => angle = num("angle", v)?,
            "mag" => magnitude = num("mag", v)?,
            "value" => value = num("value", v)?,
            "weight" => weight = num("weight", v)?,
            other => return Err(invalid(format!("unknown key '{other}'"))),
        }
    }
    let location = match (vertex, face, bary) {
        (Some(v), None, None) => SourceLocation::Vertex(v),
        (None, Some(face), Some(bary)) => SourceLocation::Face { face, bary },
        (None, Some(face), None) => SourceLocation::Face {
            face,
            bary: [1.0 / 3.0; 3],
        },
        _ => {
            return Err(invalid(
                "give either v:<vertex> or f:<face>[,b:<b0>;<b1>;<b2>]",
            ))
        }
    };
    if magnitude < 0.0 || weight < 0.0 {
        return Err(invalid("magnitude and weight must be nonnegative"));
    }
    Ok(SourceSpec {
        location,
        angle,
        magnitude,
        value,
        weight,
    })
}

impl FromStr for SourceSpec {
    type Err = IoError;
    fn from_str(s: &str) -> Result<Self, IoError> {
        parse_source(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Transport,
    Interpolate,
    Logmap,
    Mean,
    Median,
    Gcvt,
    Landmarks,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    FlatExactness,
    SphereConvergence,
    TSweep,
    Roundtrip,
    TraceOracle,
    All,
}

impl FromStr for Suite {
    type Err = IoError;
    fn from_str(s: &str) -> Result<Self, IoError> {
        Ok(match s {
            "flat-exactness" | "flat" => Suite::FlatExactness,
            "sphere-convergence" => Suite::SphereConvergence,
            "t-sweep" => Suite::TSweep,
            "roundtrip" | "round-trip" => Suite::Roundtrip,
            "trace-oracle" => Suite::TraceOracle,
            "all" => Suite::All,
            _ => {
                return Err(IoError::Invalid {
                    what: "suite",
                    message: format!("unknown suite '{s}'"),
                })
            }
        })
    }
}

/// Everything needed to re-run one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub t_multiplier: f64,
    pub use_intrinsic_delaunay: bool,
    pub degree: u32,
    pub sources: Vec<SourceSpec>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub suite: Option<Suite>,
    pub levels: u32,
    /// Site or landmark count for `gcvt` and `landmarks`.
    pub count: usize,
    pub iterations: usize,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            input: None,
            t_multiplier: 1.0,
            use_intrinsic_delaunay: true,
            degree: 1,
            sources: Vec::new(),
            output: None,
            format: Format::Csv,
            seed: 0,
            suite: None,
            levels: 3,
            count: 8,
            iterations: 20,
        }
    }

    pub fn validate(&self) -> Result<(), IoError> {
        let bad = |message: String| {
            Err(IoError::Invalid {
                what: "configuration",
                message,
            })
        };
        if !(self.t_multiplier > 0.0 && self.t_multiplier.is_finite()) {
            return bad(format!(
                "--t-mult must be positive, got {}",
                self.t_multiplier
            ));
        }
        if self.degree < 1 {
            return bad("--degree must be at least 1".into());
        }
        if self
            .input
            .as_ref()
            .is_some_and(|p| p.as_os_str().is_empty())
        {
            return bad("input path is empty".into());
        }
        if self
            .output
            .as_ref()
            .is_some_and(|p| p.as_os_str().is_empty())
        {
            return bad("output path is empty".into());
        }
        if self.command != Command::Validate && self.input.is_none() {
            return bad("an input mesh is required".into());
        }
        let needs_sources = matches!(
            self.command,
            Command::Transport
                | Command::Interpolate
                | Command::Logmap
                | Command::Mean
                | Command::Median
        );
        if needs_sources && self.sources.is_empty() {
            return bad("at least one --source is required".into());
        }
        if self.command == Command::Validate && self.levels < 2 {
            return bad("--levels must be at least 2".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_grammar() {
        let s = parse_source("v:0,angle:0,mag:1").unwrap();
        assert_eq!(s.location, SourceLocation::Vertex(0));
        assert_eq!((s.angle, s.magnitude, s.weight), (0.0, 1.0, 1.0));
        let f: SourceSpec = "f:12, b:0.2;0.3;0.5, angle:1.5, mag:2, value:7"
            .parse()
            .unwrap();
        assert_eq!(
            f.location,
            SourceLocation::Face {
                face: 12,
                bary: [0.2, 0.3, 0.5]
            }
        );
        assert_eq!((f.angle, f.magnitude, f.value), (1.5, 2.0, 7.0));
        for bad in [
            "",
            "v:0,f:1",
            "v:x",
            "v:1,angle:nan",
            "v:1,b:1;2",
            "v:1,foo:2",
            "v",
            "v:1,mag:-1",
        ] {
            assert!(parse_source(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::new(Command::Transport);
        assert!(c.validate().is_err());
        c.input = Some("m.obj".into());
        assert!(c.validate().is_err());
        c.sources.push(parse_source("v:0").unwrap());
        c.validate().unwrap();
        c.t_multiplier = 0.0;
        assert!(c.validate().is_err());
        c.t_multiplier = 1.0;
        c.degree = 0;
        assert!(c.validate().is_err());
        let v = RunConfig::new(Command::Validate);
        v.validate().unwrap();
        assert_eq!("t-sweep".parse::<Suite>().unwrap(), Suite::TSweep);
        assert!("x".parse::<Suite>().is_err());
    }
}
