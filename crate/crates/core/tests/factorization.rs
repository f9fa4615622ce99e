use dicke_fcs::eom::factorization_error;
use dicke_fcs::{CountingField, ModelParams};

fn err(n: usize, ns: f64, alpha: u32) -> (f64, f64) {
    let q = ModelParams::new(n, 1.0, 1.0, ns, 0.0).unwrap();
    let e = factorization_error(&q, CountingField(1.5), 10.0, alpha).unwrap();
    assert!(!e.absolute);
    let jz = dicke_fcs::liouvillian::exact_moment(&q, alpha).unwrap().abs();
    (e.value, e.value * jz / (n as f64).powi(alpha as i32))
}

#[test]
fn good_near_the_ground_state() {
    for n in [5usize, 10, 20] {
        for alpha in [1, 2] {
            assert!(err(n, 1e-3, alpha).0 < 1e-2);
        }
    }
}

#[test]
fn good_again_at_large_occupation() {
    for n in [5usize, 10] {
        assert!(err(n, 1e3, 2).0 < 1e-2);
        // ⟨J_z⟩ itself vanishes here, so the odd moment is judged on its absolute deviation
        assert!(err(n, 1e3, 1).1 < 1e-2);
    }
}

#[test]
fn poor_in_between() {
    let (e1, _) = err(20, 40.0, 1);
    let (e2, _) = err(20, 40.0, 2);
    assert!(e1.max(e2) > 0.1, "{e1} {e2}");
    assert!(err(5, 10.0, 1).0 > 0.1);
}
