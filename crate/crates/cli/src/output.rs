use std::path::Path;

use anyhow::{Context, Result};
use pbedg::analytic::AnalyticSolution;
use pbedg::diagnostics::{EocTable, MomentReport, NORM_ORDER};
use pbedg::{DgState, Mesh, QuadratureRule};

/// Writes `x, n_h, reference, cell_index` at `NORM_ORDER` Gauss points per cell.
pub fn emit_profile(path: &Path, state: &DgState, mesh: &Mesh, reference: Option<(&AnalyticSolution, f64)>) -> Result<()> {
    let rule = QuadratureRule::gauss(NORM_ORDER)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["x", "n_h", "reference", "cell_index"])?;
    for j in 0..mesh.num_cells() {
        let half = 0.5 * mesh.width(j);
        for &s in rule.nodes() {
            let x = mesh.left(j) + half * (s + 1.0);
            let value = state.eval_reference(j, s);
            let exact = match reference {
                Some((sol, t)) => format!("{:.16e}", sol.mass_density(t, x)?),
                None => String::new(),
            };
            w.write_record([format!("{x:.16e}"), format!("{value:.16e}"), exact, j.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_eoc(dir: &Path, stem: &str, table: &EocTable) -> Result<()> {
    write(&dir.join(format!("{stem}.md")), &table.to_markdown())?;
    write(&dir.join(format!("{stem}.csv")), &table.to_csv())
}

pub fn write_moments(path: &Path, moments: &MomentReport) -> Result<()> {
    write(path, &serde_json::to_string_pretty(moments)?)
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// File-name-safe rendering of a time.
pub fn time_tag(t: f64) -> String {
    format!("{t}").replace('.', "p")
}
