use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::config::Engine;
use super::run::{EnergyCurve, PortraitSpec};
use crate::epsmap::PortraitPoint;
use crate::error::{Error, Result};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Comment lines naming the tool and echoing the resolved configuration.
pub fn csv_preamble(config: &impl Serialize) -> Result<String> {
    Ok(format!(
        "# {TOOL_NAME} {TOOL_VERSION}\n# config {}\n",
        serde_json::to_string(config)?
    ))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl EnergyCurve {
    pub fn to_csv(&self) -> Result<String> {
        let mut out = csv_preamble(&self.spec)?;
        if self.spec.engine == Engine::Theory {
            out.push_str("abscissa,hbar,level,d_classical,d_quantum\n");
            for p in &self.points {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    p.abscissa,
                    p.hbar,
                    p.level,
                    p.classical.unwrap_or(f64::NAN),
                    p.energy
                );
            }
        } else {
            out.push_str("abscissa,hbar,level,energy,sem,seed\n");
            for p in &self.points {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    p.abscissa, p.hbar, p.level, p.energy, p.sem, p.seed
                );
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = json!({
            "tool": TOOL_NAME,
            "version": TOOL_VERSION,
            "config": self.spec,
            "points": self.points,
        });
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// Write `path` as CSV and a JSON sidecar next to it (same stem, `.json`).
pub fn write_curve(curve: &EnergyCurve, path: &Path) -> Result<()> {
    write_file(path, &curve.to_csv()?)?;
    write_file(&path.with_extension("json"), &curve.to_json()?)
}

/// Portrait CSV (`phi,rho,trajectory`) plus JSON sidecar.
pub fn write_portrait(path: &Path, spec: &PortraitSpec, points: &[PortraitPoint]) -> Result<()> {
    let mut out = csv_preamble(spec)?;
    out.push_str(&crate::epsmap::portrait_csv(points));
    write_file(path, &out)?;
    let doc = json!({
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "config": spec,
        "points": points.len(),
    });
    write_file(
        &path.with_extension("json"),
        &serde_json::to_string_pretty(&doc)?,
    )
}
