//! Boundary-value problem descriptions and the TOML problem-file format.
//!
//! ```toml
//! domain = "ball:3:1"
//! class = "elliptic"          # elliptic | parabolic | hyperbolic
//! bc = "dirichlet"            # optional, default dirichlet
//!
//! [source]
//! expr = "1"
//! support = { center = [0, 0, 0], radius = 0.5 }   # or { lo = [...], hi = [...] }
//!
//! [boundary]
//! expr = "x1"
//! ```
//!
//! Parabolic problems need an `[initial]` table; hyperbolic problems need
//! `[initial]` and `[initial_rate]` and accept `branch = "advanced"`.

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use crate::covering::Representation;
use crate::error::{GreenError, Result};
use crate::field::{ScalarField, Support};
use crate::geometry::DomainSpec;
use crate::kernels::KernelCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdeClass {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

impl fmt::Display for PdeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Elliptic => "elliptic",
            Self::Parabolic => "parabolic",
            Self::Hyperbolic => "hyperbolic",
        })
    }
}

/// Which light cone the wave source term is integrated over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveBranch {
    #[default]
    Retarded,
    Advanced,
}

impl FromStr for WaveBranch {
    type Err = GreenError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "retarded" => Ok(Self::Retarded),
            "advanced" => Ok(Self::Advanced),
            _ => Err(GreenError::Parse {
                input: s.into(),
                reason: "expected retarded or advanced".into(),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryValueProblem {
    pub domain: DomainSpec,
    pub class: PdeClass,
    pub bc: Representation,
    pub case: KernelCase,
    pub branch: WaveBranch,
    /// `f` in `L Ψ = −f`.
    pub source: ScalarField,
    /// Dirichlet values, or the outward normal derivative for Neumann.
    pub boundary: ScalarField,
    /// `ψ` at `t = 0`.
    pub initial: Option<ScalarField>,
    /// `∂ψ/∂t` at `t = 0`.
    pub initial_rate: Option<ScalarField>,
}

impl BoundaryValueProblem {
    pub fn elliptic(domain: DomainSpec, bc: Representation) -> Self {
        Self {
            domain,
            class: PdeClass::Elliptic,
            bc,
            case: KernelCase::Real,
            branch: WaveBranch::Retarded,
            source: ScalarField::zero(),
            boundary: ScalarField::zero(),
            initial: None,
            initial_rate: None,
        }
    }

    pub fn parabolic(domain: DomainSpec, bc: Representation, initial: ScalarField) -> Self {
        Self {
            class: PdeClass::Parabolic,
            initial: Some(initial),
            ..Self::elliptic(domain, bc)
        }
    }

    /// Wave problem in free 3-space with Cauchy data.
    pub fn hyperbolic(initial: ScalarField, initial_rate: ScalarField) -> Self {
        Self {
            class: PdeClass::Hyperbolic,
            case: KernelCase::Imaginary,
            initial: Some(initial),
            initial_rate: Some(initial_rate),
            ..Self::elliptic(DomainSpec::FreeSpace { dim: 3 }, Representation::Dirichlet)
        }
    }

    pub fn with_source(mut self, f: ScalarField) -> Self {
        self.source = f;
        self
    }

    pub fn with_boundary(mut self, phi: ScalarField) -> Self {
        self.boundary = phi;
        self
    }

    pub fn with_branch(mut self, branch: WaveBranch) -> Self {
        self.branch = branch;
        self
    }

    pub fn with_case(mut self, case: KernelCase) -> Self {
        self.case = case;
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        for f in [
            Some(&self.source),
            Some(&self.boundary),
            self.initial.as_ref(),
            self.initial_rate.as_ref(),
        ]
        .into_iter()
        .flatten()
        {
            f.support().validate(dim)?;
        }
        match self.class {
            PdeClass::Elliptic => {
                if self.initial.is_some() || self.initial_rate.is_some() {
                    return Err(GreenError::InvalidParameter(
                        "elliptic problems take no Cauchy data".into(),
                    ));
                }
            }
            PdeClass::Parabolic => {
                if self.initial.is_none() {
                    return Err(GreenError::InvalidParameter(
                        "parabolic problems need initial data".into(),
                    ));
                }
                if self.initial_rate.is_some() {
                    return Err(GreenError::InvalidParameter(
                        "parabolic problems take no initial rate".into(),
                    ));
                }
            }
            PdeClass::Hyperbolic => {
                if self.initial.is_none() || self.initial_rate.is_none() {
                    return Err(GreenError::InvalidParameter(
                        "hyperbolic problems need initial data and initial rate".into(),
                    ));
                }
                if self.case != KernelCase::Imaginary {
                    return Err(GreenError::InvalidParameter(
                        "hyperbolic kernels admit s = i only".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldSpec {
    expr: String,
    support: Option<Support>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    domain: String,
    class: PdeClass,
    bc: Option<String>,
    case: Option<String>,
    branch: Option<WaveBranch>,
    source: Option<FieldSpec>,
    boundary: Option<FieldSpec>,
    initial: Option<FieldSpec>,
    initial_rate: Option<FieldSpec>,
}

fn build_field(spec: Option<FieldSpec>, dim: usize, name: &str) -> Result<Option<ScalarField>> {
    let Some(spec) = spec else { return Ok(None) };
    let support = spec.support.unwrap_or(Support::Everywhere);
    support.validate(dim)?;
    let field = ScalarField::parse(&spec.expr, support)?;
    let expr: crate::expr::Expr = spec.expr.parse()?;
    if expr.arity() > dim {
        return Err(GreenError::Parse {
            input: spec.expr,
            reason: format!(
                "[{name}] uses x{} in a {dim}-dimensional domain",
                expr.arity()
            ),
        });
    }
    Ok(Some(field))
}

impl FromStr for BoundaryValueProblem {
    type Err = GreenError;

    /// Parses a problem file in TOML form.
    fn from_str(s: &str) -> Result<Self> {
        let file: ProblemFile = toml::from_str(s).map_err(|e| GreenError::Parse {
            input: "problem file".into(),
            reason: e.to_string(),
        })?;
        let domain: DomainSpec = file.domain.parse()?;
        let dim = domain.dim();
        let bc = file
            .bc
            .as_deref()
            .map(str::parse)
            .transpose()?
            .unwrap_or(Representation::Dirichlet);
        let default_case = if file.class == PdeClass::Hyperbolic {
            KernelCase::Imaginary
        } else {
            KernelCase::Real
        };
        let case = file
            .case
            .as_deref()
            .map(str::parse)
            .transpose()?
            .unwrap_or(default_case);
        let problem = Self {
            domain,
            class: file.class,
            bc,
            case,
            branch: file.branch.unwrap_or_default(),
            source: build_field(file.source, dim, "source")?.unwrap_or_else(ScalarField::zero),
            boundary: build_field(file.boundary, dim, "boundary")?
                .unwrap_or_else(ScalarField::zero),
            initial: build_field(file.initial, dim, "initial")?,
            initial_rate: build_field(file.initial_rate, dim, "initial_rate")?,
        };
        problem.validate()?;
        Ok(problem)
    }
}
