mod common;

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde_json::Value;
use tailrisk::cli::{run_cli, weighted_lower_quantile, write_matrix_csv};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli(std::iter::once("tailrisk").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn ok(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

fn write_csv(path: &Path, data: &Array2<f64>) {
    let header: Vec<String> = (0..data.ncols()).map(|i| format!("v{i}")).collect();
    write_matrix_csv(std::fs::File::create(path).unwrap(), &header, data).unwrap();
}

fn three_var_frechet(seed: u64) -> Array2<f64> {
    let a = ndarray::array![[0.3, 0.4, 0.3, 0.0, 0.0], [0.3, 0.3, 0.0, 0.4, 0.0], [0.3, 0.0, 0.0, 0.0, 0.7]];
    common::simulate(&a, 1.0, 5000, seed)
}

#[test]
fn documented_examples() {
    let v = ok(&["loss", "--true", "196.6", "--estimate", "199.4"]);
    assert!((v["result"]["loss"].as_f64().unwrap() - 0.0834).abs() < 1e-12);
    let v = ok(&["project", "--vector", "2,0"]);
    assert_eq!(v["result"]["projection"], serde_json::json!([1.0, 0.0]));
}

#[test]
fn gumbel_and_pretransformed_inputs_agree_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let y = three_var_frechet(1).mapv(f64::ln);
    let x = y.mapv(f64::exp);
    let (gp, fp) = (dir.path().join("g.csv"), dir.path().join("f.csv"));
    write_csv(&gp, &y);
    write_csv(&fp, &x);
    let g = ok(&["challenge3", "--data", gp.to_str().unwrap(), "--k", "200"]);
    let f = ok(&["challenge3", "--data", fp.to_str().unwrap(), "--k", "200", "--no-transform"]);
    assert_eq!(g["result"]["point_estimates"], f["result"]["point_estimates"]);
    assert_eq!(g["result"]["diagnostics"], f["result"]["diagnostics"]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.csv");
    write_csv(&p, &three_var_frechet(2).mapv(f64::ln));
    let args = ["challenge3", "--data", p.to_str().unwrap(), "--k", "150", "--seed", "4"];
    assert_eq!(run(&args).1, run(&args).1);
    let bias = ["bias-study", "--n-sim", "3", "--n-points", "50", "--iters", "400", "--burn-in", "100", "--seed", "7"];
    assert_eq!(run(&bias).1, run(&bias).1);
}

#[test]
fn sweep_rows_match_single_runs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.csv");
    let csv_out = dir.path().join("sweep.csv");
    write_csv(&p, &three_var_frechet(3).mapv(f64::ln));
    let data = p.to_str().unwrap();
    let sweep = ok(&["sweep-k", "--data", data, "--k-list", "100:300:100", "--csv", csv_out.to_str().unwrap()]);
    let rows = sweep["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let k = row["k"].as_u64().unwrap().to_string();
        let single = ok(&["challenge3", "--data", data, "--k", &k]);
        assert_eq!(row["p1"], single["result"]["point_estimates"]["p1"]);
        assert_eq!(row["p2"], single["result"]["point_estimates"]["p2"]);
    }
    let text = std::fs::read_to_string(csv_out).unwrap();
    assert!(text.starts_with("k,p1,p2\n100,"));
    let one = ok(&["sweep-k", "--data", data, "--k-list", "200"]);
    assert_eq!(one["result"]["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn cp_point_estimate_is_median_of_emitted_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = common::block_model(&[3, 4, 3], &[0.6, 0.65, 0.7]);
    let x = common::simulate(&a, 1.0, 4000, 5);
    let p = dir.path().join("b.csv");
    write_csv(&p, &x.mapv(f64::ln));
    let out = dir.path().join("res.json");
    let (code, _, err) = run(&[
        "challenge4", "--data", p.to_str().unwrap(), "--K", "3", "--k", "200", "--estimator", "cp", "--n-cp", "30",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    for name in ["p1", "p2"] {
        let d = &v["result"]["estimate_distribution"][name];
        let values: Vec<f64> = d["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        let weights: Vec<u64> = d["weights"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
        let median = weighted_lower_quantile(&values, &weights, 0.5);
        assert_eq!(v["result"]["point_estimates"][name].as_f64().unwrap(), median);
        assert_eq!(weights.iter().sum::<u64>(), 30u64.pow(3));
    }
}

#[test]
fn oracle_agrees_with_formula() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let r = dir.path().join("r.json");
    std::fs::write(&m, r#"{"alpha": 1, "A": [[0.3, 0.4, 0.3, 0, 0], [0.3, 0.3, 0, 0.4, 0], [0.3, 0, 0, 0, 0.7]]}"#).unwrap();
    std::fs::write(&r, r#"{"beta": [0, 1], "u": [200, 200], "l": [1.4427]}"#).unwrap();
    let v = ok(&["oracle", "--model-json", m.to_str().unwrap(), "--region-json", r.to_str().unwrap(), "--n-sim", "2000000"]);
    let z = v["result"]["z_score"].as_f64().unwrap();
    let mc = &v["result"]["monte_carlo"];
    let f = v["result"]["formula_with_cap"].as_f64().unwrap();
    assert!(z < 3.0 + 0.02 * f / mc["std_err"].as_f64().unwrap(), "{v}");
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let out = dir.path().join("x.csv");
    std::fs::write(&m, r#"{"alpha": 2, "A": [[1, 0], [0.6, 0.8]]}"#).unwrap();
    ok(&["simulate", "--model-json", m.to_str().unwrap(), "--n", "100", "--seed", "3", "--csv", out.to_str().unwrap()]);
    let t = tailrisk::cli::ingest_csv(&out, &tailrisk::cli::Schema::Count(2), Default::default()).unwrap();
    assert_eq!(t.data.nrows(), 100);
}

#[test]
fn cluster_exports_partition() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = common::block_model(&[2, 3], &[0.6, 0.6]);
    let p = dir.path().join("x.csv");
    let c = dir.path().join("part.csv");
    write_csv(&p, &common::simulate(&a, 1.0, 2000, 1));
    let v = ok(&["cluster", "--data", p.to_str().unwrap(), "--K", "2", "--csv", c.to_str().unwrap()]);
    assert_eq!(v["result"]["sizes"], serde_json::json!([2, 3]));
    let text = std::fs::read_to_string(c).unwrap();
    assert!(text.starts_with("variable,cluster\n"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn missing_cells_and_covariates_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.csv");
    let y = three_var_frechet(6).mapv(f64::ln);
    let mut f = std::fs::File::create(&p).unwrap();
    writeln!(f, "a,b,c,season").unwrap();
    writeln!(f, "1.0,,2.0,1").unwrap();
    for row in y.outer_iter() {
        writeln!(f, "{},{},{},0", row[0], row[1], row[2]).unwrap();
    }
    drop(f);
    let v = ok(&["challenge3", "--data", p.to_str().unwrap(), "--k", "100"]);
    let notices = v["result"]["diagnostics"]["notices"].to_string();
    assert!(notices.contains("dropped 1 rows"), "{notices}");
    assert!(notices.contains("season"), "{notices}");
    let (code, _, err) = run(&["challenge3", "--data", p.to_str().unwrap(), "--missing", "error"]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["challenge3"]).0, 1);
    assert_eq!(run(&["fit-gpd", "--data", "x.csv", "--threshold", "1", "--unknown"]).0, 1);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("two.csv");
    std::fs::write(&p, "a,b\n1,2\n3,4\n").unwrap();
    assert_eq!(run(&["challenge3", "--data", p.to_str().unwrap()]).0, 2);
    assert_eq!(run(&["challenge3", "--data", p.to_str().unwrap(), "--estimator", "cp"]).0, 2);
    // burn-in longer than the chain
    assert_eq!(run(&["bias-study", "--n-sim", "1", "--iters", "10", "--burn-in", "20"]).0, 2);
}
