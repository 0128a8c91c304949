//! Gnuplot scripts for the curve CSVs.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::permstat::csv_err;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// `m1-curve` output.
    M1,
    /// `mu2-curve` output.
    Mu2,
    /// `ceco-curve` output.
    CeCo,
}

impl Figure {
    pub fn required_columns(self) -> &'static [&'static str] {
        match self {
            Figure::M1 => &["q", "mc_mean", "mc_se", "exact_m1"],
            Figure::Mu2 => &["q", "mc_mean", "mc_se", "exact_mu2"],
            Figure::CeCo => &[
                "q",
                "mc_even_n",
                "se_even",
                "mc_odd_n",
                "se_odd",
                "exact_ce",
                "exact_co",
            ],
        }
    }
}

/// Script text for `csv_path`, after checking its header.
pub fn plot_script(csv_path: &Path, figure: Figure) -> Result<String> {
    let mut rd = csv::Reader::from_path(csv_path).map_err(csv_err)?;
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.is_empty() || rd.records().next().is_none() {
        return Err(Error::Empty);
    }
    let missing: Vec<String> = figure
        .required_columns()
        .iter()
        .filter(|c| !header.iter().any(|h| h == **c))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema {
            path: csv_path.to_path_buf(),
            missing,
        });
    }

    let data = csv_path.display().to_string().replace('\'', "\\'");
    let image = csv_path.with_extension("png").display().to_string().replace('\'', "\\'");
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key top left\n");
    s.push_str("set terminal pngcairo size 800,600\n");
    s.push_str(&format!("set output '{image}'\n"));
    s.push_str("set xlabel 'q'\n");
    let body = match figure {
        Figure::M1 => format!(
            "set xrange [0:1]\nset yrange [0:1]\nset ylabel 'm_1'\n\
             plot '{data}' using (column(\"q\")):(column(\"exact_m1\")) with lines title 'exact', \\\n\
             \x20    '{data}' using (column(\"q\")):(column(\"mc_mean\")) with points pt 2 title 'simulation'\n"
        ),
        Figure::Mu2 => format!(
            "set xrange [0:25]\nset yrange [0:0.5]\nset ylabel 'mu_2'\n\
             plot '{data}' using (column(\"q\")):(column(\"exact_mu2\")) with lines title 'exact', \\\n\
             \x20    '{data}' using (column(\"q\")):(column(\"mc_mean\")) with points pt 2 title 'simulation'\n"
        ),
        Figure::CeCo => format!(
            "set xrange [0:25]\nset yrange [0:1]\nset ylabel 'fixed points'\n\
             plot '{data}' using (column(\"q\")):(column(\"exact_ce\")) with lines title 'c_e', \\\n\
             \x20    '{data}' using (column(\"q\")):(column(\"exact_co\")) with lines title 'c_o', \\\n\
             \x20    '{data}' using (column(\"q\")):(column(\"mc_even_n\")) with points pt 2 title 'even n', \\\n\
             \x20    '{data}' using (column(\"q\")):(column(\"mc_odd_n\")) with points pt 1 title 'odd n'\n"
        ),
    };
    s.push_str(&body);
    Ok(s)
}

/// Writes the script next to the CSV with extension `.gp` and returns its
/// path. Nothing is written if the CSV is empty or lacks a column.
pub fn emit_plot_script(csv_path: &Path, figure: Figure) -> Result<PathBuf> {
    let script = plot_script(csv_path, figure)?;
    let out = csv_path.with_extension("gp");
    std::fs::write(&out, script)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_and_axes() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("m1.csv");
        std::fs::write(&csv, "q,n,mc_mean,mc_se,exact_m1\n0.5,10,0.2,0.01,0.22\n").unwrap();
        let gp = emit_plot_script(&csv, Figure::M1).unwrap();
        let text = std::fs::read_to_string(gp).unwrap();
        assert!(text.contains("set xrange [0:1]\nset yrange [0:1]"));

        match emit_plot_script(&csv, Figure::Mu2) {
            Err(Error::Schema { missing, .. }) => assert_eq!(missing, vec!["exact_mu2"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_csv_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("empty.csv");
        std::fs::write(&csv, "").unwrap();
        assert!(matches!(emit_plot_script(&csv, Figure::M1), Err(Error::Empty)));
        assert!(!csv.with_extension("gp").exists());
    }
}
