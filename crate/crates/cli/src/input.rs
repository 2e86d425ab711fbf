//! Loading a walk from graph, diagram or VPD files.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use vpdheat::diagram::{h0_persistence, union_space, PointDiagram, VpdElement, WeightedGraph};
use vpdheat::levy::{build_nu, JumpMeasure, Profile};
use vpdheat::metric::{birth_death_space, BirthDeathSpace};
use vpdheat::pipeline::{read_json, VpdFile};

use crate::CliError;

/// Where the ground space and the element come from.
#[derive(Args, Debug, Clone)]
pub struct WalkArgs {
    /// Graph whose H0 diagram is the positive part.
    #[arg(long, requires = "graph_b", conflicts_with = "vpd")]
    pub graph_a: Option<PathBuf>,
    /// Graph whose H0 diagram is subtracted.
    #[arg(long, requires = "graph_a")]
    pub graph_b: Option<PathBuf>,
    /// Signed diagram `{"points": [[b, d, m], ...]}`, or a `vpd.json` written
    /// by `vpd` or `pipeline`.
    #[arg(long)]
    pub vpd: Option<PathBuf>,
    /// Jump profile as JSON text or a path to a JSON file, e.g.
    /// `{"kind": "exp", "alpha": 1.0}`.
    #[arg(long)]
    pub profile: Option<String>,
}

/// The walk on the ground space spanned by the inputs.
pub struct Walk {
    pub space: BirthDeathSpace,
    pub nu: JumpMeasure,
}

pub fn parse_profile(text: Option<&str>) -> Result<Profile, CliError> {
    let Some(text) = text else {
        return Ok(Profile::default());
    };
    let trimmed = text.trim_start();
    let json = if trimmed.starts_with('{') {
        text.to_string()
    } else {
        fs::read_to_string(text).map_err(|e| CliError::Invalid(format!("profile {text}: {e}")))?
    };
    Ok(Profile::from_json(&json)?)
}

/// Reads either form of a VPD file.
pub fn read_vpd(path: &Path) -> Result<(BirthDeathSpace, VpdElement), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(vpdheat::Error::from)?;
    if value.get("generators").is_some() {
        let file: VpdFile = serde_json::from_value(value).map_err(vpdheat::Error::from)?;
        let space = birth_death_space(&file.generators)?;
        let g = file.diagram.to_vpd(&space)?;
        return Ok((space, g));
    }
    let d: PointDiagram = serde_json::from_value(value).map_err(vpdheat::Error::from)?;
    let space = union_space([&d])?;
    let g = d.to_vpd(&space)?;
    Ok((space, g))
}

/// `A - B` on the union of the supports of two diagram files.
pub fn diagram_pair(a: &Path, b: &Path) -> Result<(BirthDeathSpace, VpdElement, VpdElement), CliError> {
    let da: PointDiagram = read_json(a)?;
    let db: PointDiagram = read_json(b)?;
    let space = union_space([&da, &db])?;
    let ga = da.to_vpd(&space)?;
    let gb = db.to_vpd(&space)?;
    Ok((space, ga, gb))
}

impl WalkArgs {
    pub fn load(&self) -> Result<Walk, CliError> {
        let space = match (&self.graph_a, &self.graph_b, &self.vpd) {
            (Some(a), Some(b), None) => {
                let ga: WeightedGraph = read_json(a)?;
                let gb: WeightedGraph = read_json(b)?;
                union_space([&h0_persistence(&ga), &h0_persistence(&gb)])?
            }
            (None, None, Some(v)) => read_vpd(v)?.0,
            _ => {
                return Err(CliError::Invalid(
                    "give either --graph-a and --graph-b, or --vpd".into(),
                ))
            }
        };
        let nu = build_nu(space.ground(), &parse_profile(self.profile.as_deref())?)?;
        Ok(Walk { space, nu })
    }
}
