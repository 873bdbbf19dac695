use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tetherplan_core::workspace::{Cell, VoxelGrid, WorldPoint};

fn random_grid(rng: &mut ChaCha8Rng, dims: [usize; 3], fill: f64, res: f64) -> VoxelGrid {
    let origin = WorldPoint::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
    let occ = (0..dims[0] * dims[1] * dims[2]).map(|_| rng.gen_bool(fill)).collect();
    VoxelGrid::from_occupancy(dims, res, origin, occ).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, g: &VoxelGrid) -> WorldPoint {
    let o = g.origin();
    let d = g.dims();
    let r = g.resolution();
    WorldPoint::new(
        o.x + rng.gen_range(0.0..d[0] as f64 * r),
        o.y + rng.gen_range(0.0..d[1] as f64 * r),
        o.z + rng.gen_range(0.0..d[2] as f64 * r),
    )
}

/// Length of the part of segment `a -> b` inside the open box of cell `c`.
fn clip_length(g: &VoxelGrid, c: &Cell, a: &WorldPoint, b: &WorldPoint) -> f64 {
    let r = g.resolution();
    let lo = g.origin() + nalgebra::Vector3::new(c.x as f64, c.y as f64, c.z as f64) * r;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..3 {
        let d = b[k] - a[k];
        let (min, max) = (lo[k], lo[k] + r);
        if d == 0.0 {
            if a[k] <= min || a[k] >= max {
                return 0.0;
            }
        } else {
            let (mut u, mut v) = ((min - a[k]) / d, (max - a[k]) / d);
            if u > v {
                std::mem::swap(&mut u, &mut v);
            }
            t0 = t0.max(u);
            t1 = t1.min(v);
        }
    }
    ((t1 - t0).max(0.0)) * (b - a).norm()
}

fn sampled_hit(g: &VoxelGrid, a: &WorldPoint, b: &WorldPoint) -> bool {
    let n = ((b - a).norm() / (g.resolution() / 20.0)).ceil().max(1.0) as usize;
    (0..=n).any(|i| {
        let p = a + (b - a) * (i as f64 / n as f64);
        match g.cell_of(&p) {
            Some(c) if g.is_occupied(&c) => {
                // strictly inside, not on a face
                let rel = (p - g.origin()) / g.resolution();
                [rel.x, rel.y, rel.z].iter().all(|v| (v - v.round()).abs() > 1e-9)
            }
            _ => false,
        }
    })
}

#[test]
fn line_of_sight_matches_slab_and_sampling_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut blocked = 0;
    for _ in 0..60 {
        let dims = [rng.gen_range(3..10), rng.gen_range(3..10), rng.gen_range(3..10)];
        let res = rng.gen_range(0.1..1.0);
        let g = random_grid(&mut rng, dims, 0.15, res);
        for _ in 0..80 {
            let (a, b) = (random_point(&mut rng, &g), random_point(&mut rng, &g));
            let los = g.line_of_sight(&a, &b).unwrap();
            assert_eq!(los, g.line_of_sight(&b, &a).unwrap(), "symmetry");
            let longest = g.occupied_cells().map(|c| clip_length(&g, &c, &a, &b)).fold(0.0, f64::max);
            if longest > 1e-9 {
                assert!(!los, "segment crosses an occupied cell for {longest}");
                blocked += 1;
            } else {
                assert!(los, "segment misses every occupied cell");
            }
            if sampled_hit(&g, &a, &b) {
                assert!(!los);
            } else if !los {
                assert!(longest < g.resolution() / 20.0 + 1e-12, "sampling missed a clip of {longest}");
            }
        }
    }
    assert!(blocked > 500, "oracle exercised both outcomes ({blocked} blocked)");
}

#[test]
fn distance_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.gen_range(4..=20);
        let dims = [n, rng.gen_range(2..=20), rng.gen_range(2..=20)];
        let fill = rng.gen_range(0.005..0.05);
        let g = random_grid(&mut rng, dims, fill, 0.5);
        for _ in 0..40 {
            let p = random_point(&mut rng, &g);
            if g.is_occupied(&g.cell_of(&p).unwrap()) {
                continue;
            }
            let range = rng.gen_range(0.5..15.0);
            let got = g.distance_to_obstacle(&p, range).unwrap();
            let brute = g.occupied_cells().map(|c| (g.cell_center(&c) - p).norm()).fold(f64::INFINITY, f64::min);
            assert!((got - brute.min(range)).abs() <= 1e-12, "{got} vs {brute}");
        }
    }
}

#[test]
fn isovist_translation_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let g = random_grid(&mut rng, [8, 6, 8], 0.1, 0.5);
        let shift = nalgebra::Vector3::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0), 3.25);
        let moved = VoxelGrid::from_occupancy(g.dims(), 0.5, g.origin() + shift, g.occupancy().to_vec()).unwrap();

        // the same scene padded by free cells and shifted by whole cells
        let pad = [3usize, 1, 2];
        let d = g.dims();
        let mut padded = VoxelGrid::new(
            [d[0] + 5, d[1] + 3, d[2] + 4],
            0.5,
            g.origin() - nalgebra::Vector3::new(pad[0] as f64, pad[1] as f64, pad[2] as f64) * 0.5,
        )
        .unwrap();
        for c in g.occupied_cells() {
            padded.set_occupied(&Cell::new(c.x + pad[0], c.y + pad[1], c.z + pad[2]), true);
        }

        for c in g.free_cells().step_by(7) {
            let p = g.cell_center(&c);
            let v = g.isovist_visibility(&p, 64, 6.0).unwrap();
            let vm = moved.isovist_visibility(&(p + shift), 64, 6.0).unwrap();
            let vp = padded.isovist_visibility(&p, 64, 6.0).unwrap();
            assert!((v - vm).abs() < 1e-9, "{v} vs {vm}");
            assert!((v - vp).abs() < 1e-9, "{v} vs {vp}");
            assert!((0.0..=6.0).contains(&v));
        }
    }
}

#[test]
fn isovist_in_closed_room() {
    let mut g = VoxelGrid::new([9, 9, 9], 1.0, WorldPoint::origin()).unwrap();
    for c in g.cells().collect::<Vec<_>>() {
        if [c.x, c.y, c.z].iter().any(|&v| v == 0 || v == 8) {
            g.set_occupied(&c, true);
        }
    }
    let v = g.isovist_visibility(&WorldPoint::new(4.5, 4.5, 4.5), 200, 50.0).unwrap();
    // walls start 3.5 away along the axes and at most 3.5*sqrt(3) along diagonals
    assert!(v >= 3.5 && v <= 3.5 * 3f64.sqrt(), "{v}");
    let empty = VoxelGrid::new([9, 9, 9], 1.0, WorldPoint::origin()).unwrap();
    assert_eq!(empty.isovist_visibility(&WorldPoint::new(4.5, 4.5, 4.5), 64, 50.0).unwrap(), 50.0);
}

#[test]
fn inflation_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let g = random_grid(&mut rng, [10, 6, 10], 0.05, 0.25);
        let mut prev = g.clone();
        for r in [0.1, 0.25, 0.3, 0.5, 0.8] {
            let next = g.inflate(r).unwrap();
            for c in prev.occupied_cells() {
                assert!(next.is_occupied(&c));
            }
            prev = next;
        }
    }
}
