use super::*;
use crate::grid::{enumerate_cubes, make_grid, CubePolicy};

fn all(w: &WeightGrid) -> CubeFamily {
    enumerate_cubes(w, &CubePolicy::AllDyadic).unwrap()
}

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol * b.abs().max(1.0), "{a} vs {b}");
}

#[test]
fn constant_weights_are_trivial() {
    for d in [1u8, 2] {
        let w = make_grid(d, 3, "const:3").unwrap();
        let f = all(&w);
        for p in [1.5, 2.0, 4.0] {
            close(rh_p_constant(&w, p, &f).unwrap().value, 1.0, 1e-15);
            close(a_p_constant(&w, p, &f).unwrap().value, 1.0, 1e-15);
        }
        close(a_p_constant(&w, 1.0, &f).unwrap().value, 1.0, 1e-15);
        close(fujii_constant(&w, &f).unwrap().value, 1.0, 1e-15);
        close(rh_llogl_constant(&w, &f).unwrap().value, 1.2568, 1e-4);
        close(rh_p_weighted_constant(&w, &make_grid(d, 3, "rand:4:lognormal:1").unwrap(), 2.0, &f).unwrap().value, 1.0, 1e-15);
    }
}

#[test]
fn step_examples() {
    let w = make_grid(1, 1, "step:2,1").unwrap();
    let f = all(&w);
    let rh = rh_p_constant(&w, 2.0, &f).unwrap();
    close(rh.value, 2.5f64.sqrt() / 1.5, 1e-15);
    assert_eq!(rh.witness, DyadicCube::base(1));
    close(a_p_constant(&w, 2.0, &f).unwrap().value, 9.0 / 8.0, 1e-15);
    close(a_p_constant(&w, 1.0, &f).unwrap().value, 1.5, 1e-15);
    close(fujii_constant(&w, &f).unwrap().value, 7.0 / 6.0, 1e-15);
    let g = w;
    let wt = make_grid(1, 1, "step:1,2").unwrap();
    close(rh_p_weighted_constant(&g, &wt, 2.0, &f).unwrap().value, 3.0 * 2f64.sqrt() / 4.0, 1e-15);
}

#[test]
fn lorentz_constant_of_one() {
    let w = make_grid(1, 4, "const:1").unwrap();
    let base = CubeFamily { cubes: vec![DyadicCube::base(1)], policy: CubePolicy::AllDyadic };
    close(rh_lorentz_constant(&w, 2.0, 2.0, &base).unwrap().value, 2f64.sqrt(), 1e-12);
}

#[test]
fn weighted_reduces_to_unweighted() {
    let g = make_grid(1, 6, "rand:5:lognormal:0.8").unwrap();
    let one = make_grid(1, 6, "const:1").unwrap();
    let f = all(&g);
    for p in [1.5, 2.0, 3.0] {
        close(rh_p_weighted_constant(&g, &one, p, &f).unwrap().value, rh_p_constant(&g, p, &f).unwrap().value, 1e-13);
    }
}

/// Brute-force ratio over dyadic cubes, summed cell by cell.
fn rh_brute(w: &WeightGrid, p: f64) -> f64 {
    let mut best: f64 = 0.0;
    for q in all(w).iter() {
        let v = w.cube_values(q);
        let n = v.len() as f64;
        let a = v.iter().sum::<f64>() / n;
        let b = v.iter().map(|x| x.powf(p)).sum::<f64>() / n;
        best = best.max(b.powf(1.0 / p) / a);
    }
    best
}

#[test]
fn power_weight_rh() {
    let mut seq = Vec::new();
    for l in [10, 12, 14] {
        let w = make_grid(1, l, "pow:-0.5").unwrap();
        let c = rh_p_constant(&w, 1.5, &all(&w)).unwrap().value;
        close(c, rh_brute(&w, 1.5), 1e-10);
        seq.push(c);
    }
    // slow convergence to ½·4^{2/3}; Aitken's Δ² recovers the limit
    let (a, b, c) = (seq[0], seq[1], seq[2]);
    let limit = c - (c - b).powi(2) / ((c - b) - (b - a));
    assert!((limit - 0.5 * 4f64.powf(2.0 / 3.0)).abs() < 0.01, "{seq:?} → {limit}");
}

#[test]
fn invariances() {
    let w = make_grid(2, 4, "rand:9:lognormal:1").unwrap();
    let cw = w.scale(7.3).unwrap();
    let f = all(&w);
    let pairs = [
        (rh_p_constant(&w, 2.0, &f).unwrap().value, rh_p_constant(&cw, 2.0, &f).unwrap().value),
        (a_p_constant(&w, 3.0, &f).unwrap().value, a_p_constant(&cw, 3.0, &f).unwrap().value),
        (a_p_constant(&w, 1.0, &f).unwrap().value, a_p_constant(&cw, 1.0, &f).unwrap().value),
        (rh_llogl_constant(&w, &f).unwrap().value, rh_llogl_constant(&cw, &f).unwrap().value),
        (rh_lorentz_constant(&w, 2.0, 3.0, &f).unwrap().value, rh_lorentz_constant(&cw, 2.0, 3.0, &f).unwrap().value),
        (fujii_constant(&w, &f).unwrap().value, fujii_constant(&cw, &f).unwrap().value),
    ];
    for (a, b) in pairs {
        close(a, b, 1e-12);
    }
    let mut prev = 1.0;
    for p in [1.1, 1.5, 2.0, 3.0, 6.0] {
        let c = rh_p_constant(&w, p, &f).unwrap().value;
        assert!(c >= prev);
        prev = c;
    }
    assert!(a_p_constant(&w, 2.0, &f).unwrap().value >= 1.0);
    assert!(fujii_constant(&w, &f).unwrap().value >= 1.0);
}

#[test]
fn bad_exponents() {
    let w = make_grid(1, 2, "const:1").unwrap();
    let f = all(&w);
    assert!(rh_p_constant(&w, 1.0, &f).is_err());
    assert!(a_p_constant(&w, 0.5, &f).is_err());
}

#[test]
fn gehring_examples() {
    let cfg = IndexConfig::default();
    let w = make_grid(1, 12, "pow:-0.5").unwrap();
    let g = gehring_improve(&w, 1.5, &cfg).unwrap();
    assert!((g.p_max - 2.0).abs() < 0.2 && (g.p0 - 1.75).abs() < 0.1, "{g:?}");
    assert!(g.certified);
    let c = make_grid(1, 8, "const:1").unwrap();
    let g = gehring_improve(&c, 2.0, &cfg).unwrap();
    assert_eq!(g.p_max, GEHRING_P_MAX);
    assert!(g.p0 > 2.0 && g.certified);
    assert!(matches!(gehring_improve(&w, 3.0, &cfg), Err(Error::Precondition(_))));
}

#[test]
fn theorem_checks_on_small_cases() {
    let cfg = IndexConfig::default();
    for spec in ["const:2", "step:2,1", "pow:-0.5", "rand:3:lognormal:0.7"] {
        let w = make_grid(1, 8, spec).unwrap();
        let f = all(&w);
        assert!(verify_rhp_equivalence(&w, 2.0, &f, 8.0).unwrap().pass, "{spec}");
        assert!(verify_llogl_equivalence(&w, &f, 8.0).unwrap().pass, "{spec}");
        assert!(verify_fujii(&w, &f, 1.0).unwrap().pass, "{spec}");
        assert!(verify_extrapolation_bound(&w, &DyadicCube::base(1), 4.0).unwrap().pass, "{spec}");
        assert!(verify_acks(&w, &cfg).unwrap().pass, "{spec}");
    }
    let c = make_grid(1, 6, "const:5").unwrap();
    let r = verify_extrapolation_bound(&c, &DyadicCube::base(1), 4.0).unwrap();
    close(r.cases[0].values["lhs"], 5.0, 1e-12);
}

#[test]
fn stromberg_examples() {
    let cfg = IndexConfig::default();
    let r = verify_stromberg_wheeden(&make_grid(1, 12, "pow:-0.25").unwrap(), 2.0, &cfg).unwrap();
    assert!(r.pass && r.cases[0].values["in_rh_p"] == 1.0, "{r:?}");
    let r = verify_stromberg_wheeden(&make_grid(1, 12, "pow:-0.6").unwrap(), 2.0, &cfg).unwrap();
    assert!(r.pass && r.cases[0].values["in_rh_p"] == 0.0, "{r:?}");
    assert!(r.cases[0].note.as_deref().unwrap().starts_with("out-of-domain"));
    let r = verify_stromberg_wheeden(&make_grid(1, 8, "const:1").unwrap(), 2.0, &cfg).unwrap();
    assert!(r.pass && r.cases[0].values["wp_in_a_inf"] == 1.0);
}

#[test]
fn weighted_rh_inequality() {
    let g = make_grid(1, 4, "rand:1:lognormal:0.9").unwrap();
    let w = make_grid(1, 4, "rand:2:lognormal:0.6").unwrap();
    let f = enumerate_cubes(&g, &CubePolicy::SingleLevel(1)).unwrap();
    let r = verify_weighted_rh(&g, &w, 2.0, &f).unwrap();
    assert!(r.pass, "{r:?}");
    let one = make_grid(1, 4, "const:1").unwrap();
    assert!(verify_weighted_rh(&g, &one, 3.0, &f).unwrap().pass);
}

#[test]
fn classifiers() {
    assert!(stable_drift(&[1.0, 1.02, 1.04], 0.05));
    assert!(!stable_drift(&[1.0, 1.2], 0.05));
    assert!(aitken_bounded([3.235, 3.602, 3.927]));
    assert!(!aitken_bounded([1.0, 2.0, 3.5]));
    assert!(aitken_bounded([2.0, 2.0, 2.0]));
}
