//! Tour of the geometric core: divergences, projections, mirror steps, and
//! the three-point identity that the per-step regret analysis relies on.
//!
//! ```bash
//! cargo run --example bregman_geometry
//! ```

use optoco::geometry::{
    bregman_div, mirror_step, project, three_point_slack, BregmanGeometry, Domain,
};

fn main() {
    let euclid = BregmanGeometry::euclidean();
    let entropic = BregmanGeometry::entropic();
    let box2 = Domain::Box { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] };
    let ball = Domain::L2Ball { center: vec![0.0, 0.0], radius: 1.0 };
    let simplex = Domain::Simplex { dim: 2 };

    println!("divergences (note the half convention in the Euclidean case):");
    println!(
        "  euclid   B((1,0); (0,0))      = {:.6}",
        bregman_div(&euclid, &[1.0, 0.0], &[0.0, 0.0])
    );
    println!(
        "  entropic B((1,0); (1/2,1/2)) = {:.6}  (= ln 2)",
        bregman_div(&entropic, &[1.0, 0.0], &[0.5, 0.5])
    );
    println!(
        "  entropic B((1/2,1/2); (1,0)) = {}  (support mismatch)",
        bregman_div(&entropic, &[0.5, 0.5], &[1.0, 0.0])
    );

    println!("\nprojections:");
    println!("  ball    (3,4)       -> {:?}", project(&euclid, &ball, &[3.0, 4.0]).unwrap());
    println!("  simplex (1.5,0.5)   -> {:?}", project(&euclid, &simplex, &[1.5, 0.5]).unwrap());
    println!("  box     (1.2,-0.3)  -> {:?}", project(&euclid, &box2, &[1.2, -0.3]).unwrap());

    println!("\nmirror steps (anchor z, dual vector l, step eta):");
    let x = mirror_step(&euclid, &box2, &[0.5, 0.5], &[1.0, 0.0], 0.1).unwrap();
    println!("  euclid   z=(.5,.5)  l=(1,0)    eta=.1 -> {x:?}");
    let x = mirror_step(&euclid, &box2, &[0.05, 0.5], &[1.0, 0.0], 0.1).unwrap();
    println!("  euclid   z=(.05,.5) l=(1,0)    eta=.1 -> {x:?}  (clipped)");
    let x = mirror_step(&entropic, &simplex, &[0.5, 0.5], &[2f64.ln(), 0.0], 1.0).unwrap();
    println!("  entropic z=(.5,.5)  l=(ln2,0)  eta=1  -> [{:.4}, {:.4}]", x[0], x[1]);

    println!("\nthree-point identity (exact for interior solutions):");
    for (z, ell, eta, u) in [
        ([0.5, 0.5], [1.0, 0.0], 0.1, [0.0, 0.0]),
        ([0.5, 0.5], [1.0, 0.0], 0.1, [1.0, 1.0]),
        ([0.05, 0.5], [1.0, 0.0], 0.1, [1.0, 1.0]),
    ] {
        let r = three_point_slack(&euclid, &box2, &z, &ell, eta, &u).unwrap();
        println!(
            "  z={z:?} u={u:?}: {} {:.2e}",
            if r.interior { "residual" } else { "boundary slack" },
            r.value
        );
    }
}
