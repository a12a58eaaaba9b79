//! Completely-positive factors of a TPDM along random pivot paths.

use tailrisk::tpdm::{cp_decompose, random_cp_ensemble, Tpdm};

fn main() -> tailrisk::Result<()> {
    let tpdm = Tpdm::from_rows(&[
        vec![1.0, 0.6, 0.5, 0.4],
        vec![0.6, 1.0, 0.5, 0.5],
        vec![0.5, 0.5, 1.0, 0.6],
        vec![0.4, 0.5, 0.6, 1.0],
    ])?;
    let f = cp_decompose(&tpdm, &[0, 1, 2, 3])?;
    println!("leading column {:?}, error {:.1e}", f.leading_column(), f.reconstruction_error(&tpdm));

    let ens = random_cp_ensemble(&tpdm, 50, 11)?;
    println!("{} factors from {} attempts", ens.factors.len(), ens.attempts);
    for (pivot, count) in ens.leading_pivot_counts() {
        println!("  leading pivot {pivot}: {count}");
    }
    println!("{}", serde_json::to_string(&tpdm)?);
    Ok(())
}
