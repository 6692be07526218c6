//! Tilt optimization and table building against independent checks.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use tiltshape::forceset::{HfsQuery, RfsSpec};
use tiltshape::geom::Vec3;
use tiltshape::platform::{PlatformParams, TiltVector};
use tiltshape::tiltopt::{build_table, optimize, GridSpec, OptimConfig, PsoConfig, TiltTable};

fn hover_cuboid(p: &PlatformParams) -> RfsSpec {
    RfsSpec::cuboid(Vec3::new(0.0, 0.0, p.weight()), 1.0)
}

#[test]
fn hover_cuboid_is_certified_below_the_uniform_baseline() {
    let p = PlatformParams::default();
    let t = Instant::now();
    let r = optimize(&p, &hover_cuboid(&p), &OptimConfig::default()).unwrap();
    eprintln!("optimize: {:?}, γ* = {:?}", t.elapsed(), r.gamma);
    assert!(r.certified);
    assert_eq!(r.objective.included, 8);
    assert!(r.gamma.max_abs() < PI / 6.0);
    let q = HfsQuery::at(&p, &r.gamma).unwrap();
    assert_eq!(q.count_included(&hover_cuboid(&p)).unwrap(), 8);
}

#[test]
fn tiny_tilt_range_cannot_be_certified() {
    let p = PlatformParams::default();
    let cfg = OptimConfig {
        gamma_max: PI / 48.0,
        pso: PsoConfig {
            particles: 16,
            iterations: 20,
            ..Default::default()
        },
        ..Default::default()
    };
    let rfs = hover_cuboid(&p);
    let r = optimize(&p, &rfs, &cfg).unwrap();
    assert!(!r.certified);
    assert!(r.objective.included < 8);

    // Exhaustive oracle: no point of a 7⁴ grid over the box includes all vertices.
    let k = 7;
    let ticks: Vec<f64> = (0..k)
        .map(|i| -cfg.gamma_max + 2.0 * cfg.gamma_max * i as f64 / (k - 1) as f64)
        .collect();
    for a in &ticks {
        for b in &ticks {
            for c in &ticks {
                for d in &ticks {
                    let g = TiltVector::new(vec![*a, *b, *c, *d]).unwrap();
                    assert!(HfsQuery::at(&p, &g).unwrap().count_included(&rfs).unwrap() < 8);
                }
            }
        }
    }
}

#[test]
fn seeded_optimization_is_reproducible() {
    let p = PlatformParams::default();
    let cfg = OptimConfig {
        pso: PsoConfig {
            particles: 12,
            iterations: 15,
            seed: 9,
            ..Default::default()
        },
        ..Default::default()
    };
    let rfs = RfsSpec::cuboid(Vec3::new(0.5, -0.5, p.weight()), 1.0);
    assert_eq!(optimize(&p, &rfs, &cfg).unwrap(), optimize(&p, &rfs, &cfg).unwrap());
}

fn coarse_table() -> &'static TiltTable {
    static TABLE: OnceLock<TiltTable> = OnceLock::new();
    TABLE.get_or_init(|| build_table(&PlatformParams::default(), &GridSpec::coarse(), &OptimConfig::default()).unwrap())
}

#[test]
fn coarse_table_is_completed_and_recertified() {
    let p = PlatformParams::default();
    let t0 = Instant::now();
    let table = coarse_table();
    eprintln!("coarse table: {:?}", t0.elapsed());
    assert_eq!(table.axis_x, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    assert_eq!(table.axis_y, table.axis_x);
    assert_eq!(table.n_cells(), 25);
    assert!(table.all_certified());
    for ix in 0..5 {
        for iy in 0..5 {
            let e = table.entry(ix, iy);
            let q = HfsQuery::at(&p, &e.gamma).unwrap();
            for v in table.cell_rfs(ix, iy).vertices() {
                assert!(q.membership(v).unwrap().included, "cell ({ix},{iy}) vertex {v:?}");
            }
        }
    }
    // mirrored neighbours of a quadrant-I cell are permutations of it
    let src = table.entry(3, 4).gamma.as_slice().to_vec();
    let mut a = table.entry(1, 4).gamma.as_slice().to_vec();
    let mut b = src.clone();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    assert_eq!(a, b);
}

#[test]
fn table_round_trips_bit_exactly() {
    let table = coarse_table();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    table.save(&path).unwrap();
    let back = TiltTable::load(&path).unwrap();
    assert_eq!(&back, table);
    for (a, b) in back.entries.iter().zip(&table.entries) {
        for (x, y) in a.gamma.as_slice().iter().zip(b.gamma.as_slice()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }
    assert_eq!(std::fs::read_to_string(&path).unwrap(), back.to_json());
}

#[test]
fn tampered_tables_are_rejected() {
    let table = coarse_table();
    let mut flipped = table.clone();
    flipped.entries[0].certified = false;
    assert!(TiltTable::from_json(&flipped.to_json()).is_err());
    let mut bent = table.clone();
    bent.axis_x[1] += 0.1;
    assert!(TiltTable::from_json(&bent.to_json()).is_err());
    let newer = table.to_json().replace("\"version\": 1", "\"version\": 99");
    assert!(TiltTable::from_json(&newer).is_err());
}

#[test]
fn grid_spec_parsing() {
    let g: GridSpec = "0:1:0.5,0:0.2:0.1".parse().unwrap();
    assert_eq!(g.x.values(), vec![0.0, 0.5, 1.0]);
    assert_eq!(g.y.values().len(), 3);
    assert_eq!(GridSpec::quadrant_default().x.values().len(), 11);
    for bad in ["", "0:1", "0:1:0,0:1:1", "1:0:0.5,0:1:0.5", "a:b:c,0:1:1"] {
        assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
    }
}
