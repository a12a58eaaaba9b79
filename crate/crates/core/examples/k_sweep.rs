//! Sensitivity of the three-variable estimates to the number of extremes k.

use ndarray::array;
use tailrisk::cli::{k_sensitivity_sweep, Challenge, PipelineConfig};
use tailrisk::maxlinear::{sample_max_linear, MaxLinearModel};

fn main() -> tailrisk::Result<()> {
    let model = MaxLinearModel::new(
        array![[0.3, 0.4, 0.3, 0.0, 0.0], [0.3, 0.3, 0.0, 0.4, 0.0], [0.3, 0.0, 0.0, 0.0, 0.7]],
        1.0,
    )?;
    let y = sample_max_linear(&model, 21_000, 9).mapv(f64::ln);
    let ks: Vec<usize> = (50..=1000).step_by(50).collect();
    let table = k_sensitivity_sweep(Challenge::Three, y.view(), &PipelineConfig::default(), &ks)?;
    table.write_csv(std::io::stdout())?;
    let flagged: Vec<usize> = table.rows.iter().filter(|r| r.flagged).map(|r| r.k).collect();
    eprintln!("flagged k: {flagged:?}");
    Ok(())
}
