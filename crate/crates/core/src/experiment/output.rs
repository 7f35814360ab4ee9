use std::fs;
use std::path::{Path, PathBuf};

use super::{ExperimentError, ScenarioRun};

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "GROWTHLAB_OUT_DIR";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<(), ExperimentError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| ExperimentError::Output(e.to_string()))?;
    writer.write_record(header).map_err(|e| ExperimentError::Output(e.to_string()))?;
    for row in rows {
        writer.write_record(&row).map_err(|e| ExperimentError::Output(e.to_string()))?;
    }
    writer.flush().map_err(|e| ExperimentError::Output(e.to_string()))
}

fn order_tag(s: f64) -> String {
    format!("norm_s{s}")
}

/// Writes `<prefix>_classical.csv`, `<prefix>_quantum.csv`,
/// `<prefix>_correspondence.csv` and `<prefix>_verdicts.json` into `dir`.
pub fn write_artifacts(run: &ScenarioRun, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::Output(format!("{}: {e}", dir.display())))?;
    let prefix = run.report.scenario.output_prefix();
    let path = |suffix: &str| dir.join(format!("{prefix}_{suffix}"));

    let classical = path("classical.csv");
    let flow = &run.flow;
    write_csv(
        &classical,
        &["t", "w_norm", "zstar_norm", "symplectic_defect", "wtex_residual"].map(String::from),
        (0..flow.len()).map(|i| {
            vec![
                format_real(flow.times[i]),
                format_real(flow.w_norm(i)),
                format_real(flow.zstar_norm(i)),
                format_real(flow.symplectic_defect(i)),
                format_real(flow.wtex_residual(i)),
            ]
        }),
    )?;

    let quantum = path("quantum.csv");
    let traj = &run.trajectory;
    let mut header: Vec<String> = ["t", "l2_norm", "tail_mass", "truncation"].map(String::from).to_vec();
    header.extend(traj.sobolev_orders.iter().map(|&s| order_tag(s)));
    write_csv(
        &quantum,
        &header,
        traj.samples.iter().map(|q| {
            let mut row = vec![format_real(q.t), format_real(q.l2_norm), format_real(q.tail_mass), q.truncation.to_string()];
            row.extend(q.sobolev.iter().map(|&v| format_real(v)));
            row
        }),
    )?;

    let correspondence = path("correspondence.csv");
    write_csv(
        &correspondence,
        &["s", "t", "measured", "predicted", "ratio"].map(String::from),
        run.series.iter().flat_map(|series| {
            (0..series.times.len()).map(move |i| {
                vec![
                    format_real(series.s),
                    format_real(series.times[i]),
                    format_real(series.measured[i]),
                    format_real(series.predicted[i]),
                    format_real(series.measured[i] / series.predicted[i]),
                ]
            })
        }),
    )?;

    let verdicts = path("verdicts.json");
    let json = serde_json::to_string_pretty(&run.report).map_err(|e| ExperimentError::Output(e.to_string()))?;
    fs::write(&verdicts, json + "\n").map_err(|e| ExperimentError::Output(format!("{}: {e}", verdicts.display())))?;

    Ok(vec![classical, quantum, correspondence, verdicts])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [std::f64::consts::PI, 1e-300, -2.5e17, 0.1 + 0.2] {
            let text = format_real(x);
            assert_eq!(text.parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_real(1.0), "1.0000000000000000e0");
    }
}
