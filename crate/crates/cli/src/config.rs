//! JSON run configuration: ambient block, family block, grid, tolerances and
//! output options.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use rwsurf_core::ambient::{WarpKind, WarpingFunction};
use rwsurf_core::families::{CurveSpec, FamilyKind, FamilySpec};
use rwsurf_core::ode::CoefficientFunction;
use rwsurf_core::space_forms::SpaceForm;
use rwsurf_core::verify::Tolerances;
use rwsurf_core::Vec4;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ambient: AmbientBlock,
    #[serde(default)]
    pub family: Option<FamilyBlock>,
    pub grid: GridBlock,
    #[serde(default)]
    pub tolerances: Option<ToleranceBlock>,
    #[serde(default)]
    pub output: Option<OutputBlock>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientBlock {
    pub warping: WarpKind,
    pub interval: (f64, f64),
    pub c: i8,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyBlock {
    pub kind: FamilyKind,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub theta0: Option<f64>,
    #[serde(default)]
    pub a1: Option<CoefficientFunction>,
    #[serde(default)]
    pub a2: Option<CoefficientFunction>,
    #[serde(default)]
    pub a3: Option<CoefficientFunction>,
    #[serde(default)]
    pub phi1: Option<CoefficientFunction>,
    #[serde(default)]
    pub phi2_init: f64,
    #[serde(default)]
    pub phi3_init: f64,
    #[serde(default)]
    pub curve: Option<CurveSpec>,
    /// Initial frame vectors; 3 or 4 coordinates each (padded with zeros).
    #[serde(default)]
    pub init: Vec<Vec<f64>>,
    #[serde(default)]
    pub u0: f64,
    #[serde(default)]
    pub v0: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
    #[serde(default = "default_grid_count")]
    pub nu: usize,
    #[serde(default = "default_grid_count")]
    pub nv: usize,
}

fn default_grid_count() -> usize {
    33
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceBlock {
    pub prn: Option<f64>,
    pub frame: Option<f64>,
    pub theta: Option<f64>,
    pub codazzi: Option<f64>,
    pub ricci: Option<f64>,
    pub closed_form: Option<f64>,
    pub curvature: Option<f64>,
    pub ambient: Option<f64>,
}

impl ToleranceBlock {
    /// Resolved tolerances: config values override the defaults; the
    /// `--tol` flag overrides whatever the config left unset.
    pub fn resolve(&self, flat_override: Option<f64>) -> Tolerances {
        let mut t = Tolerances::default();
        if let Some(x) = flat_override {
            t = Tolerances {
                prn: x,
                frame: x,
                theta: x,
                codazzi: x,
                ricci: x,
                closed_form: x,
                curvature: x,
                ambient: x,
            };
        }
        if let Some(x) = self.prn {
            t.prn = x;
        }
        if let Some(x) = self.frame {
            t.frame = x;
        }
        if let Some(x) = self.theta {
            t.theta = x;
        }
        if let Some(x) = self.codazzi {
            t.codazzi = x;
        }
        if let Some(x) = self.ricci {
            t.ricci = x;
        }
        if let Some(x) = self.closed_form {
            t.closed_form = x;
        }
        if let Some(x) = self.curvature {
            t.curvature = x;
        }
        if let Some(x) = self.ambient {
            t.ambient = x;
        }
        t
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub formats: Vec<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        if config.grid.nu < 4 || config.grid.nv < 4 {
            bail!("grid must be at least 4x4");
        }
        Ok(config)
    }

    pub fn space_form(&self) -> Result<SpaceForm> {
        Ok(SpaceForm::from_c(self.ambient.c)?)
    }

    pub fn warping(&self) -> Result<WarpingFunction> {
        Ok(WarpingFunction::new(
            self.ambient.warping.clone(),
            self.ambient.interval,
        )?)
    }

    /// Assembles the family spec, cross-checking the ambient block against
    /// the family kind.
    pub fn family_spec(&self) -> Result<FamilySpec> {
        let block = self
            .family
            .as_ref()
            .context("config has no family block")?;
        let form = self.space_form()?;
        let expected = match block.kind {
            FamilyKind::SpacelikeRw0 | FamilyKind::TimelikeRw0 => Some(SpaceForm::Euclidean),
            FamilyKind::SpacelikeS3 | FamilyKind::TimelikeS3 => Some(SpaceForm::Sphere),
            FamilyKind::SpacelikeH3 | FamilyKind::TimelikeH3 => Some(SpaceForm::Hyperbolic),
            FamilyKind::ProductCurve => block.curve.as_ref().map(|c| c.form()),
        };
        if let Some(expected) = expected {
            if expected != form {
                bail!(
                    "family kind {:?} needs fiber curvature c = {}, but the ambient block has c = {}",
                    block.kind,
                    expected.c(),
                    form.c()
                );
            }
        }
        let mut init = Vec::with_capacity(block.init.len());
        for (i, raw) in block.init.iter().enumerate() {
            if raw.len() != 3 && raw.len() != 4 {
                bail!("init vector {} must have 3 or 4 coordinates", i + 1);
            }
            let mut v = Vec4::ZERO;
            for (k, x) in raw.iter().enumerate() {
                v[k] = *x;
            }
            init.push(v);
        }
        Ok(FamilySpec {
            kind: block.kind,
            warping: Some(self.warping()?),
            a: block.a,
            theta0: block.theta0,
            a1: block.a1.clone(),
            a2: block.a2.clone(),
            a3: block.a3.clone(),
            phi1: block.phi1.clone(),
            phi2_init: block.phi2_init,
            phi3_init: block.phi3_init,
            curve: block.curve.clone(),
            init,
            u0: block.u0,
            v0: block.v0,
            u_range: self.grid.u_range,
            v_range: self.grid.v_range,
        })
    }
}

/// Parses the `--grid NxM` override.
pub fn parse_grid_override(text: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = text.split(['x', 'X']).collect();
    if parts.len() != 2 {
        bail!("grid override must look like 33x33");
    }
    let nu: usize = parts[0].trim().parse().context("bad grid u-count")?;
    let nv: usize = parts[1].trim().parse().context("bad grid v-count")?;
    if nu < 4 || nv < 4 {
        bail!("grid must be at least 4x4");
    }
    Ok((nu, nv))
}
