//! Sparse estimate of a max-linear model from data: simplex projections of
//! the largest observations put mass exactly on faces of the simplex.

use ndarray::array;
use tailrisk::maxlinear::{failure_prob_approx, sample_max_linear, FailureRegion, MaxLinearModel};
use tailrisk::tpdm::{compress_columns, empirical_a, polar_decompose, simplex_project, sparse_empirical_a, support_counts};

fn main() -> tailrisk::Result<()> {
    println!("projection of (0.7, 0.5, -0.1): {:?}", simplex_project(&[0.7, 0.5, -0.1]));

    let truth = MaxLinearModel::new(array![[0.5, 0.5, 0.0, 0.0], [0.5, 0.0, 0.5, 0.0], [0.0, 0.0, 0.0, 1.0]], 1.0)?;
    let x = sample_max_linear(&truth, 20_000, 3);
    let sample = polar_decompose(x.view(), 1.0)?;
    let k = 400;
    let sparse = sparse_empirical_a(&sample, k)?;
    let plain = empirical_a(&sample, k)?;
    let counts = support_counts(&sparse);
    println!("supports: {} vertex, {} on {{0,1}}, {} interior", counts.vertex(), counts.on(&[0, 1]), counts.interior());
    println!("{} columns after merging equal angles", compress_columns(&sparse).n_factors());

    let edge = FailureRegion::uniform(3, vec![0, 1], 200.0, Some(vec![2.0]))?;
    println!(
        "P(first two above 200, third below 2): true {:.3e}, sparse {:.3e}, plain {:.3e}",
        failure_prob_approx(&truth, &edge, 0.0)?.value,
        failure_prob_approx(&sparse, &edge, 0.0)?.value,
        failure_prob_approx(&plain, &edge, 0.0)?.value
    );
    Ok(())
}
