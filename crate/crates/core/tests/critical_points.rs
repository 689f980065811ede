use segbubble::greens::Domain;
use segbubble::reduced::{find_critical_points, DescentOptions, WosRobin};

#[test]
fn dumbbell_has_a_minimum_in_each_lobe() {
    let n = 4;
    let d = Domain::dumbbell(n, 0.2);
    for seed in [1, 2, 3] {
        let src = WosRobin::new(&d, 1500, seed).unwrap();
        let pts = find_critical_points(&src, 12, seed, &DescentOptions::default()).unwrap();
        let minima: Vec<_> = pts.iter().filter(|c| c.converged && c.signature.negative == 0).collect();
        let near = |x0: f64| minima.iter().any(|c| (c.x[0] - x0).abs() < 0.4 && c.x[1..].iter().all(|v| v.abs() < 0.3));
        assert!(near(-1.5) && near(1.5), "seed {seed}");
    }
}

#[test]
fn shell_critical_sphere_is_degenerate() {
    let n = 4;
    let d = Domain::shell(n);
    let src = WosRobin::new(&d, 1500, 9).unwrap();
    let pts = find_critical_points(&src, 2, 9, &DescentOptions::default()).unwrap();
    let conv: Vec<_> = pts.iter().filter(|c| c.converged).collect();
    assert!(!conv.is_empty());
    for c in conv {
        assert!(!c.nondegenerate);
        assert!(c.signature.zero >= 1);
    }
}
