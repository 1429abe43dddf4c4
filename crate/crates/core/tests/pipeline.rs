mod common;

use pinchmap::channel::avg_snr;
use pinchmap::coverage::{coverage_count, exact_enumerate, residual_snr, DEFAULT_BUDGET};
use pinchmap::export::{read_csv_map, to_db, write_csv_map};
use pinchmap::milp::{activation_var, build_milp, coverage_var, emit_milp, LpModel};
use pinchmap::minmax::worst_grid_snr;
use pinchmap::sweep::Prepared;
use pinchmap::units::{db_to_linear, linear_to_db};
use pinchmap::{Activation, GridSpec, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quarter() -> Prepared {
    Prepared::new(Scenario::table1().with_grid_scale(0.25).unwrap()).unwrap()
}

#[test]
fn average_snr_is_the_sum_of_single_waveguide_fields() {
    let p = quarter();
    let a = Activation::from_one_based(&[2, 6, 9, 4]).unwrap();
    let total = avg_snr(&a, &p.gain_map, p.rho()).unwrap();
    let mut summed = vec![0.0; total.len()];
    for n in 0..4 {
        let single = p.gain_map.waveguide(n);
        let field = avg_snr(&Activation::new(vec![a.get(n)]), &single, 1.0).unwrap();
        for (s, f) in summed.iter_mut().zip(field) {
            *s += f;
        }
    }
    for (t, s) in total.iter().zip(&summed) {
        assert!((t - p.rho() * s).abs() <= 1e-12 * t);
        assert!(*t > 0.0);
    }
}

#[test]
fn effective_index_does_not_change_averages() {
    let s = Scenario::table1().with_grid_scale(0.1).unwrap();
    let mut config = s.config().clone();
    config.channel.n_eff = 2.5;
    let other = Scenario::from_config(config).unwrap();
    let a = Prepared::new(s).unwrap();
    let b = Prepared::new(other).unwrap();
    assert_eq!(a.gain_map.gains(1, 3), b.gain_map.gains(1, 3));
}

#[test]
fn residual_plus_contribution_restores_the_field() {
    let p = quarter();
    let a = Activation::from_one_based(&[3, 3, 7, 1]).unwrap();
    let full = avg_snr(&a, &p.gain_map, p.rho()).unwrap();
    for n in 0..4 {
        let res = residual_snr(&a, n, &p.gain_map, p.rho()).unwrap();
        for m in 0..10 {
            let switched = avg_snr(&a.with(n, m), &p.gain_map, p.rho()).unwrap();
            for ((r, g), s) in res.iter().zip(p.gain_map.gains(n, m)).zip(&switched) {
                assert!((r + p.rho() * g - s).abs() <= 1e-9 * s);
            }
        }
        for ((r, g), f) in res.iter().zip(p.gain_map.gains(n, a.get(n))).zip(&full) {
            assert!((r + p.rho() * g - f).abs() <= 1e-9 * f);
            assert!(*r >= -1e-9 * f);
        }
    }
}

#[test]
fn table1_enumeration_and_threshold_limits() {
    let p = quarter();
    let exact = exact_enumerate(&p.gain_map, p.rho(), db_to_linear(24.0), DEFAULT_BUDGET).unwrap();
    let heuristic = p.solve_coverage(db_to_linear(24.0), false).unwrap();
    assert!(heuristic.covered_count <= exact.covered_count);
    let a = Activation::centered(4, 10);
    assert_eq!(coverage_count(&a, &p.gain_map, p.rho(), 1e-12).unwrap(), p.gain_map.n_valid());
    let top = avg_snr(&a, &p.gain_map, p.rho()).unwrap().into_iter().fold(0.0, f64::max);
    assert_eq!(coverage_count(&a, &p.gain_map, p.rho(), top * 1.01).unwrap(), 0);
    let mut last = usize::MAX;
    for gamma_db in [10.0, 15.0, 20.0, 25.0, 30.0] {
        let c = coverage_count(&a, &p.gain_map, p.rho(), db_to_linear(gamma_db)).unwrap();
        assert!(c <= last);
        last = c;
    }
}

#[test]
fn milp_file_recovers_gain_coefficients() {
    let p = Prepared::new(Scenario::table1().with_grid(GridSpec { nh: 16, nv: 6 }).unwrap()).unwrap();
    let gamma = db_to_linear(18.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.lp");
    let written = emit_milp(&p.gain_map, p.rho(), gamma, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    let model = LpModel::read(&path).unwrap();
    assert_eq!(model, written);
    assert_eq!(model, build_milp(&p.gain_map, p.rho(), gamma));
    let grid = p.gain_map.grid();
    for u in 0..grid.nh {
        for v in 0..grid.nv {
            let idx = grid.index(u, v);
            let row = model.constraint(&format!("cover_{}_{}", u + 1, v + 1));
            if !p.gain_map.valid()[idx] {
                assert!(row.is_none());
                continue;
            }
            let row = row.unwrap();
            assert_eq!(row.coefficient(&coverage_var(u, v)), -gamma);
            for n in 0..4 {
                for m in 0..10 {
                    assert_eq!(row.coefficient(&activation_var(n, m)), p.rho() * p.gain_map.gains(n, m)[idx]);
                }
            }
        }
    }
}

#[test]
fn exported_db_values() {
    let p = quarter();
    let a = Activation::from_one_based(&[2, 6, 9, 4]).unwrap();
    let field = avg_snr(&a, &p.gain_map, p.rho()).unwrap();
    for (db, x) in to_db(&field).iter().zip(&field) {
        assert!((db - 10.0 * x.log10()).abs() <= 1e-9);
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("map.csv");
    let g = p.scenario.geometry();
    write_csv_map(&field, p.gain_map.valid(), g.grid, &g.region, &path).unwrap();
    let rows = read_csv_map(&path).unwrap();
    assert_eq!(rows.len(), g.grid.len());
    for (row, x) in rows.iter().zip(&field) {
        assert!((row.snr_db - linear_to_db(*x)).abs() <= 1e-6);
    }
}

#[test]
fn distributed_activation_lifts_the_worst_cell() {
    let p = quarter();
    let distributed = Activation::from_one_based(&[2, 6, 9, 4]).unwrap();
    let aligned = Activation::from_one_based(&[5, 5, 5, 5]).unwrap();
    let d = worst_grid_snr(&distributed, &p.gain_map, p.rho()).unwrap();
    let a = worst_grid_snr(&aligned, &p.gain_map, p.rho()).unwrap();
    assert!(d > a, "distributed {} dB vs aligned {} dB", linear_to_db(d), linear_to_db(a));
}

#[test]
fn scenario_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..10 {
        let k = rng.random_range(0..4);
        let s = common::random_scenario(&mut rng, 3, 4, GridSpec { nh: 6, nv: 4 }, k, -62.5);
        let path = dir.path().join("s.json");
        s.save(&path).unwrap();
        let back = Scenario::load(&path).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.digest(), s.digest());
    }
}

#[test]
fn digest_ignores_key_order() {
    let s = Scenario::table1();
    let value = serde_json::to_value(s.config()).unwrap();
    let object = value.as_object().unwrap();
    let mut reversed = String::from("{");
    for (i, (k, v)) in object.iter().rev().enumerate() {
        if i > 0 {
            reversed.push(',');
        }
        reversed.push_str(&format!("{}:{}", serde_json::to_string(k).unwrap(), v));
    }
    reversed.push('}');
    let again = Scenario::from_json_str(&reversed, "reversed").unwrap();
    assert_eq!(again.digest(), s.digest());
}
