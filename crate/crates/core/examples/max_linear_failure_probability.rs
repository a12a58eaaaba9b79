//! Joint-exceedance probability of a max-linear model: large-threshold
//! formula, its upper bound, and a Monte Carlo check.

use ndarray::array;
use tailrisk::maxlinear::{angular_measure_of, cap_factor, failure_prob_approx, failure_prob_upper_bound, FailureRegion, MaxLinearModel};
use tailrisk::oracle::mc_failure_prob;

fn main() -> tailrisk::Result<()> {
    let model = MaxLinearModel::new(
        array![[0.3, 0.4, 0.3, 0.0, 0.0], [0.3, 0.3, 0.0, 0.4, 0.0], [0.3, 0.0, 0.0, 0.0, 0.7]],
        1.0,
    )?;
    for atom in &angular_measure_of(&model).atoms {
        println!("atom weight {:.2} at {:?}", atom.weight, atom.angle);
    }

    let all = FailureRegion::uniform(3, vec![0, 1, 2], 100.0, None)?;
    let p = failure_prob_approx(&model, &all, 0.0)?;
    let bound = failure_prob_upper_bound(&model, &all)?;
    let mc = mc_failure_prob(&model, &all, 2_000_000, 1)?;
    println!("all three above 100: formula {:.3e}, bound {bound:.3e}, MC {:.3e} +- {:.1e}", p.value, mc.p_hat, mc.std_err);

    let edge = FailureRegion::uniform(3, vec![0, 1], 100.0, Some(vec![1.0]))?;
    let p = failure_prob_approx(&model, &edge, 0.0)?.value * cap_factor(&model, &edge)?;
    let mc = mc_failure_prob(&model, &edge, 2_000_000, 2)?;
    println!("first two above 100, third below 1: {p:.3e}, MC {:.3e} +- {:.1e}", mc.p_hat, mc.std_err);
    Ok(())
}
