//! Small sweeps with a known direction of improvement.
//! Each cell trains a real network, so these take several minutes.

use pinn_cli::{sweep, SweepConfig};

fn errors(text: &str) -> Vec<f64> {
    let config = SweepConfig::from_toml(text).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let outcome = sweep(&config, tmp.path()).unwrap();
    let errors: Vec<f64> = outcome.rows.iter().map(|r| r.summary.rel_l2).collect();
    for row in &outcome.rows {
        assert!(row.summary.error.is_none(), "{:?}", row.summary.error);
    }
    println!("{}", outcome.markdown);
    errors
}

#[test]
fn deeper_networks_do_better_at_width_40() {
    let e = errors(
        r#"
[base]
problem = "burgers-ct"
n_u = 100
n_f = 10000
neurons = 40
[base.optimizer]
max_iterations = 3000

[axes]
layers = [2, 3, 4]
"#,
    );
    assert!(e[0] > e[1] && e[1] > e[2], "errors by depth {e:?}");
}

#[test]
fn more_stages_do_better_at_a_long_step() {
    let e = errors(
        r#"
[base]
problem = "burgers-dt"
layers = 4
neurons = 50
dt = 0.8
t_start = 0.1

[axes]
q = [8, 32]
"#,
    );
    assert!(e[0] > e[1], "errors for q = 8, 32: {e:?}");
}
