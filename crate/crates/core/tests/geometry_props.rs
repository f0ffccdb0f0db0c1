mod common;

use common::*;
use placer_core::geometry::{
    boundary_penetration, penetration, Footprint, Part, Pose, Surface, Vec2, CONTACT_TOL,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pair(seed: u64) -> (Footprint, Pose, Footprint, Pose) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = polygon_footprint(random_convex(&mut rng, 8));
    let b = polygon_footprint(random_convex(&mut rng, 8));
    (a, random_pose(&mut rng, 1.0), b, random_pose(&mut rng, 1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn circles_match_closed_form(
        r1 in 0.01f64..3.0, r2 in 0.01f64..3.0,
        x in -5.0f64..5.0, y in -5.0f64..5.0,
    ) {
        let a = Footprint::circle(r1);
        let b = Footprint::circle(r2);
        let p = penetration(&a, &Pose::new(x, y, 0.3), &b, &Pose::new(0.0, 0.0, -1.0));
        let d = (x * x + y * y).sqrt();
        prop_assert!((p.depth - circle_depth(r1, r2, d)).abs() <= 1e-9);
    }

    #[test]
    fn depth_is_symmetric(seed in any::<u64>()) {
        let (a, pa, b, pb) = pair(seed);
        let ab = penetration(&a, &pa, &b, &pb);
        let ba = penetration(&b, &pb, &a, &pa);
        prop_assert!((ab.depth - ba.depth).abs() <= 1e-9);
    }

    #[test]
    fn depth_is_rigidly_invariant(seed in any::<u64>(), x in -3.0f64..3.0, y in -3.0f64..3.0, t in -3.0f64..3.0) {
        let (a, pa, b, pb) = pair(seed);
        let g = Pose::new(x, y, t);
        let before = penetration(&a, &pa, &b, &pb).depth;
        let after = penetration(&a, &g.compose(&pa), &b, &g.compose(&pb)).depth;
        prop_assert!((before - after).abs() <= 1e-9);
    }

    #[test]
    fn translating_by_the_result_separates(seed in any::<u64>()) {
        let (a, pa, b, pb) = pair(seed);
        let p = penetration(&a, &pa, &b, &pb);
        let moved = pa.with_position(pa.position() + p.direction * p.depth);
        prop_assert!(penetration(&a, &moved, &b, &pb).depth <= CONTACT_TOL);
    }

    #[test]
    fn circle_polygon_translation_separates(seed in any::<u64>(), r in 0.05f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poly = polygon_footprint(random_convex(&mut rng, 8));
        let pp = random_pose(&mut rng, 1.0);
        let pc = random_pose(&mut rng, 1.0);
        let c = Footprint::circle(r);
        let p = penetration(&c, &pc, &poly, &pp);
        let moved = pc.with_position(pc.position() + p.direction * p.depth);
        prop_assert!(penetration(&c, &moved, &poly, &pp).depth <= CONTACT_TOL);
    }

    #[test]
    fn boundary_depth_is_zero_inside(x in 2.0f64..8.0, y in 2.0f64..8.0, t in -3.0f64..3.0) {
        let surface = Surface::rectangle(Vec2::ZERO, Vec2::new(10.0, 10.0));
        let sq = Footprint::square(2.0);
        prop_assert_eq!(boundary_penetration(&sq, &Pose::new(x, y, t), &surface).depth, 0.0);
    }
}

#[test]
fn polygons_match_sampling_oracle() {
    for seed in 0..60 {
        let (a, pa, b, pb) = pair(seed);
        let va = world_vertices(&a.place(&pa));
        let vb = world_vertices(&b.place(&pb));
        let got = penetration(&a, &pa, &b, &pb).depth;
        let want = sampled_depth(&va, &vb);
        assert!((got - want).abs() <= 1e-4, "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn l_shape_distal_radius_matches_boundary_sampling() {
    let sq = |x: f64| {
        Part::polygon(vec![
            Vec2::new(x, 0.0),
            Vec2::new(x + 1.0, 0.0),
            Vec2::new(x + 1.0, 1.0),
            Vec2::new(x, 1.0),
        ])
        .unwrap()
    };
    let top = Part::polygon(vec![
        Vec2::new(0.0, 1.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(1.0, 2.0),
        Vec2::new(0.0, 2.0),
    ])
    .unwrap();
    let l = Footprint::new(vec![sq(0.0), sq(1.0), top]).unwrap();
    // Sample every edge of every part densely, vertices included.
    let mut far: f64 = 0.0;
    for part in l.parts() {
        let Part::Polygon(p) = part else { unreachable!() };
        let vs = p.vertices();
        for i in 0..vs.len() {
            let (s, e) = (vs[i], vs[(i + 1) % vs.len()]);
            for k in 0..=1000 {
                far = far.max((s + (e - s) * (k as f64 / 1000.0)).norm());
            }
        }
    }
    assert!((l.distal_radius() - far).abs() <= 1e-9);
}
