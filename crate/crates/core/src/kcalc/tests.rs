use super::*;
use crate::grid::{integrate, make_grid};

fn base() -> DyadicCube {
    DyadicCube::base(1)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

#[test]
fn k_examples() {
    let k = k_l1_linf(&make_grid(1, 3, "const:2").unwrap(), &base()).unwrap();
    assert_eq!(k.eval(0.25), 0.5);
    assert_eq!(k.eval(7.0), 2.0);
    let k = k_l1_linf(&make_grid(1, 1, "step:2,1").unwrap(), &base()).unwrap();
    assert_eq!(k.breakpoints().collect::<Vec<_>>(), vec![(0.0, 0.0), (0.5, 1.0), (1.0, 1.5)]);
    assert_eq!(k.eval(0.75), 1.25);
    assert_eq!(k.eval(3.0), 1.5);
    k.check().unwrap();
}

#[test]
fn lp_examples() {
    let w = make_grid(1, 1, "step:2,1").unwrap();
    let g = k_lp_linf(&w, &base(), 2.0).unwrap();
    assert!(close(g.eval(1.0), 2.5f64.sqrt(), 1e-15));
    let g1 = k_lp_linf(&w, &base(), 1.0).unwrap();
    assert_eq!(g1.power, k_l1_linf(&w, &base()).unwrap());
    let c = make_grid(1, 4, "const:3").unwrap();
    let g = k_lp_linf(&c, &base(), 3.0).unwrap();
    assert!(close(g.eval(0.3), 3.0 * 0.3f64.powf(1.0 / 3.0), 1e-14));
    assert!(k_lp_linf(&c, &base(), 0.5).is_err());
}

#[test]
fn holmstedt_examples() {
    let c = 1.7;
    let k = k_l1_linf(&make_grid(1, 5, &format!("const:{c}")).unwrap(), &base()).unwrap();
    let h = holmstedt_curve(&k, 0.5, 2.0).unwrap();
    for t in [0.1, 0.5, 1.0] {
        assert!(close(h.eval(t), c * t, 1e-12), "{}", h.eval(t));
    }
    let th = 0.3;
    let h = holmstedt_curve(&k, th, 1.0).unwrap();
    for t in [0.2, 0.9] {
        assert!(close(h.eval(t), c * t / (1.0 - th), 1e-12));
    }
    assert!(holmstedt_curve(&k, 1.0, 2.0).is_err());
    assert!(holmstedt_curve(&k, 0.5, 0.5).is_err());
}

#[test]
fn holmstedt_matches_independent_quadrature() {
    // same integral, integrated over log s across the whole range at once
    let w = make_grid(1, 6, "rand:5:lognormal:0.8").unwrap();
    let k = k_l1_linf(&w, &base()).unwrap();
    let p = 2.5;
    let th = 1.0 - 1.0 / p;
    let h = holmstedt_curve(&k, th, p).unwrap();
    for (t, _) in k.breakpoints().skip(1).step_by(7) {
        let lo = (t * 1e-14).ln();
        let direct = crate::quad::integrate(
            |u| {
                let s = u.exp();
                (s.powf(-th) * k.eval(s)).powf(p)
            },
            lo,
            t.ln(),
            1e-13,
        );
        // head below e^lo: K(s) = v0 s there
        let v0 = k.slopes()[0];
        let head = v0.powf(p) * (t * 1e-14).powf(p * (1.0 - th)) / (p * (1.0 - th));
        assert!(close(h.integral_to(t), direct + head, 1e-8), "{t}");
    }
}

#[test]
fn lorentz_examples() {
    let w = make_grid(1, 3, "const:1").unwrap();
    assert!(close(lorentz_norm(&w, &base(), 2.0, 2.0).unwrap(), 2f64.sqrt(), 1e-12));
    let w2 = make_grid(1, 3, "rand:2:lognormal:0.7").unwrap();
    let a = lorentz_norm(&w2, &base(), 1.5, 3.0).unwrap();
    let b = lorentz_norm(&w2.scale(3.0).unwrap(), &base(), 1.5, 3.0).unwrap();
    assert!(close(b, 3.0 * a, 1e-10));
    assert!(lorentz_norm(&w, &base(), 1.0, 2.0).is_err());
}

#[test]
fn lorentz_q_one_closed_form_matches_quadrature() {
    let w = make_grid(1, 5, "rand:9:lognormal:1").unwrap();
    let r = rearrangement(&w, &base()).unwrap();
    let exact = lorentz_of_step(&r, 3.0, 1.0);
    let p: f64 = 3.0;
    // t = u^p turns the weight t^{1/p-1} dt into p du
    let mut acc = 0.0;
    for j in 0..r.plateaus().len() {
        let (u0, u1) = (r.start(j).powf(1.0 / p), r.ends()[j].powf(1.0 / p));
        acc += crate::quad::integrate(|u| p * r.integral_to(u.powf(p)) / u.powf(p), u0.max(1e-300), u1, 1e-13);
    }
    acc += r.mass() * (p / (p - 1.0));
    assert!(close(exact, acc, 1e-9));
}

#[test]
fn k_lorentz_examples() {
    let w = make_grid(1, 2, "const:1").unwrap();
    assert!(close(k_lorentz_linf(&w, &base(), 2.0, 2.0, 1.0).unwrap(), 1.0, 1e-14));
    assert!(close(k_lorentz_linf(&w, &base(), 2.0, 1.0, 1.0).unwrap(), 2.0, 1e-14));
    let w = make_grid(1, 4, "rand:3:lognormal:1").unwrap();
    let mut prev = 0.0;
    for i in 1..40 {
        let v = k_lorentz_linf(&w, &base(), 2.0, 3.0, i as f64 / 30.0).unwrap();
        assert!(v >= prev);
        prev = v;
    }
}

#[test]
fn llogl_examples() {
    let w = make_grid(1, 3, "const:1").unwrap();
    let n = llogl_norm(&w, &base()).unwrap();
    // oracle: u log(e+u) = 1 solved by Newton, r = 1/u
    let mut u: f64 = 0.8;
    for _ in 0..50 {
        let f = u * (E + u).ln() - 1.0;
        let df = (E + u).ln() + u / (E + u);
        u -= f / df;
    }
    assert!(close(n.value, 1.0 / u, 1e-11), "{} {}", n.value, 1.0 / u);
    assert!((1.0 / u - 1.2568).abs() < 1e-4);
    assert!(n.residual.abs() <= 1e-9);
    let w = make_grid(1, 6, "rand:4:lognormal:1.2").unwrap();
    let a = llogl_norm(&w, &base()).unwrap().value;
    let b = llogl_norm(&w.scale(7.5).unwrap(), &base()).unwrap().value;
    assert!(close(b, 7.5 * a, 1e-10));
}

#[test]
fn llogl_forms_const() {
    let w = make_grid(1, 3, "const:1").unwrap();
    let (a, b) = llogl_integral_forms(&w, &base()).unwrap();
    assert!(close(a, (E + 1.0).ln(), 1e-14));
    let oracle = crate::quad::integrate(|u: f64| (E + u.exp()).ln() * (-u).exp(), 0.0, 60.0, 1e-14);
    assert!(close(b, oracle, 1e-12), "{b} {oracle}");
    assert!((b - 1.7964).abs() < 1e-4);
}

#[test]
fn extrapolation_examples() {
    let w = make_grid(1, 4, "const:2.5").unwrap();
    let e = extrapolation_norm(&w, &base()).unwrap();
    assert!(close(e.value(), 2.5, 1e-14) && close(e.k_integral, 2.5, 1e-14));
    let w = make_grid(1, 1, "step:2,1").unwrap();
    let e = extrapolation_norm(&w, &base()).unwrap();
    let oracle = 2.0 * crate::quad::integrate(|u: f64| u * (-u).exp(), 2f64.ln(), 80.0, 1e-14)
        + crate::quad::integrate(|s: f64| -s.ln(), 0.5, 1.0, 1e-14);
    assert!(close(e.value(), oracle, 1e-12) && e.relative_gap() < 1e-12);
    assert!((e.value() - 1.8466).abs() < 1e-4);
}

#[test]
fn k_mass_is_exact() {
    for s in 0..20 {
        let w = make_grid(1, 8, &format!("rand:{s}:lognormal:1")).unwrap();
        let k = k_l1_linf(&w, &base()).unwrap();
        assert_eq!(k.total(), integrate(&w, &base()).unwrap());
    }
}

mod packings {
    use super::*;

    #[test]
    fn averages() {
        let f = make_grid(1, 2, "const:3").unwrap();
        let w = make_grid(1, 2, "rand:1:lognormal:1").unwrap();
        let fam = PackingFamily::all_levels(&w, &base()).unwrap();
        for pi in &fam.packings {
            let s = packing_average(&f, &w, pi).unwrap();
            assert!(s.values.iter().all(|v| close(*v, 3.0, 1e-15)));
        }
        let f = make_grid(1, 1, "step:2,1").unwrap();
        let one = make_grid(1, 1, "const:1").unwrap();
        let halves = Packing::new(&one, vec![DyadicCube::new(1, 1, [0, 0]), DyadicCube::new(1, 1, [1, 0])]).unwrap();
        assert_eq!(packing_average(&f, &one, &halves).unwrap().values, vec![2.0, 1.0]);
        let whole = Packing::new(&one, vec![base()]).unwrap();
        assert_eq!(packing_average(&f, &one, &whole).unwrap().values, vec![1.5]);
    }

    #[test]
    fn overlap_rejected() {
        let g = make_grid(2, 3, "const:1").unwrap();
        let err = Packing::new(&g, vec![DyadicCube::new(2, 1, [1, 0]), DyadicCube::new(2, 3, [5, 1])]);
        assert!(matches!(err, Err(Error::OverlappingCubes(..))));
        Packing::new(&g, vec![DyadicCube::new(2, 1, [1, 0]), DyadicCube::new(2, 3, [1, 5])]).unwrap();
    }

    #[test]
    fn unweighted_reproduces_k() {
        let f = make_grid(1, 5, "rand:8:lognormal:1").unwrap();
        let one = make_grid(1, 5, "const:1").unwrap();
        let fam = PackingFamily::all_levels(&one, &base()).unwrap();
        let k = k_l1_linf(&f, &base()).unwrap();
        for i in 1..=32 {
            let t = i as f64 / 32.0;
            let kw = k_weighted(&f, &one, 1.0, t, &fam).unwrap();
            assert!(close(kw.value, k.eval(t), 1e-12));
            let pm = packing_maximal(&f, &one, 1.0, t - 1.0 / 64.0, &fam).unwrap();
            // the finest packing gives f*, and coarser ones can beat it pointwise
            assert!(pm.value >= rearrangement(&f, &base()).unwrap().value_at(t - 1.0 / 64.0));
        }
        let c = make_grid(1, 5, "const:2").unwrap();
        let kw = k_weighted(&c, &one, 3.0, 0.5, &fam).unwrap();
        assert!(close(kw.value, 2.0 * 0.5f64.powf(1.0 / 3.0), 1e-14));
    }

    #[test]
    fn pointwise_identity_fails_for_coarse_packings() {
        let f = WeightGrid::new(1, 2, vec![4.0, 1.0, 1.0, 1.0], "x").unwrap();
        let one = make_grid(1, 2, "const:1").unwrap();
        let fam = PackingFamily::all_levels(&one, &base()).unwrap();
        let pm = packing_maximal(&f, &one, 1.0, 0.6, &fam).unwrap().value;
        let r = rearrangement(&f, &base()).unwrap();
        // the pointwise sup sits strictly between f* and f**
        assert!(pm > r.value_at(0.6) && pm < double_star(&r, 0.6).unwrap());
    }

    #[test]
    fn cz_packings_are_valid_and_monotone() {
        let f = make_grid(1, 5, "rand:3:lognormal:1").unwrap();
        let w = make_grid(1, 5, "rand:4:lognormal:0.5").unwrap();
        let cz = PackingFamily::cz_stopping(&f, &w, 2.0, &base()).unwrap();
        let lv = PackingFamily::all_levels(&w, &base()).unwrap();
        let both = lv.union(&cz);
        let total = integrate(&w, &base()).unwrap();
        for i in 1..=10 {
            let t = total * i as f64 / 10.0;
            let a = k_weighted(&f, &w, 2.0, t, &lv).unwrap().value;
            let b = k_weighted(&f, &w, 2.0, t, &both).unwrap().value;
            assert!(b >= a);
        }
        assert!(k_weighted(&f, &w, 2.0, 2.0 * total, &lv).is_err());
    }
}

use crate::rearrange::double_star;
