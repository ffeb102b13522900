use std::collections::{BTreeMap, BTreeSet};

use qplace_core::fpga::{
    build_distance_matrix, build_flow_matrix, generate_instance, generate_instance_with, Block, CellType,
    FpgaArchitecture, GeneratorConfig, Netlist, Pin, TypeLegality,
};
use qplace_core::qap::LegalityOracle;
use qplace_core::error::NetlistError;
use qplace_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lut(id: &str) -> Block {
    Block { id: id.into(), ty: CellType::LUT }
}

fn net(ids: &[&str]) -> Vec<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

#[test]
fn three_by_three_distances() {
    let arch = FpgaArchitecture::uniform(3, 3, CellType::LUT).unwrap();
    let d = build_distance_matrix(&arch);
    let expected = [
        [0, 1, 2, 1, 2, 3, 2, 3, 4],
        [1, 0, 1, 2, 1, 2, 3, 2, 3],
        [2, 1, 0, 3, 2, 1, 4, 3, 2],
        [1, 2, 3, 0, 1, 2, 1, 2, 3],
        [2, 1, 2, 1, 0, 1, 2, 1, 2],
        [3, 2, 1, 2, 1, 0, 3, 2, 1],
        [2, 3, 4, 1, 2, 3, 0, 1, 2],
        [3, 2, 3, 2, 1, 2, 1, 0, 1],
        [4, 3, 2, 3, 2, 1, 2, 1, 0],
    ];
    for a in 0..9 {
        for b in 0..9 {
            assert_eq!(d.get(a, b), expected[a][b] as f64);
        }
    }
}

#[test]
fn distances_are_a_metric() {
    for w in 1..=6 {
        for h in 1..=6 {
            let arch = FpgaArchitecture::uniform(w, h, CellType::LUT).unwrap();
            let d = build_distance_matrix(&arch);
            let n = arch.n();
            for a in 0..n {
                assert_eq!(d.get(a, a), 0.0);
                for b in 0..n {
                    assert_eq!(d.get(a, b), d.get(b, a));
                    if a != b {
                        assert!(d.get(a, b) >= 1.0);
                    }
                    for c in 0..n {
                        assert!(d.get(a, c) <= d.get(a, b) + d.get(b, c));
                    }
                }
            }
        }
    }
}

#[test]
fn reference_grid_layout() {
    let arch = FpgaArchitecture::fictional();
    assert_eq!((arch.width(), arch.height(), arch.n()), (21, 21, 441));
    assert_eq!(arch.count(CellType::IO), 80);
    assert_eq!(arch.count(CellType::BRAM), 16);
    assert_eq!(arch.count(CellType::LUT), 345);
    assert_eq!(arch.cell(arch.location(4, 8).unwrap()), CellType::BRAM);
    assert_eq!(arch.cell(arch.location(0, 7).unwrap()), CellType::IO);
    assert_eq!(arch.location(21, 0), None);
    let back = FpgaArchitecture::from_json_str(&arch.to_json_string()).unwrap();
    assert_eq!(back, arch);
}

#[test]
fn flow_from_nets() {
    let blocks = vec![lut("a"), lut("b"), lut("c"), lut("d")];
    let two_pin = Netlist::new(blocks.clone(), vec![net(&["a", "b"])], BTreeMap::new()).unwrap();
    let f = build_flow_matrix(&two_pin);
    assert_eq!(f.get(0, 1), 1.0);
    assert_eq!(f.total(), 2.0);
    assert!(f.row(3).iter().all(|&v| v == 0.0));

    // a 3-pin net becomes a triangle; a repeated pair stays at weight 1
    let tri = Netlist::new(blocks, vec![net(&["a", "b", "c"]), net(&["b", "a"])], BTreeMap::new()).unwrap();
    let f = build_flow_matrix(&tri);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        assert_eq!(f.get(i, j), 1.0);
        assert_eq!(f.get(j, i), 1.0);
    }
    assert_eq!(f.total(), 6.0);
    assert!(f.row(3).iter().all(|&v| v == 0.0));
}

#[test]
fn netlist_json_round_trip() {
    let text = r#"{
        "blocks": [{"id": "in", "type": "IO"}, {"id": "m", "type": "BRAM"}, {"id": "l", "type": "LUT"}],
        "nets": [["in", "l"], ["l", "m", "in"]],
        "pins": {"in": {"row": 0, "col": 3}}
    }"#;
    let nl = Netlist::from_json_str(text).unwrap();
    assert_eq!(nl.len(), 3);
    assert_eq!(nl.block_index("m"), Some(1));
    assert_eq!(nl.count(CellType::IO), 1);
    assert_eq!(Netlist::from_json_str(&nl.to_json_string()).unwrap(), nl);

    let empty = Netlist::from_json_str(r#"{"blocks": [{"id": "x", "type": "LUT"}], "nets": []}"#).unwrap();
    assert_eq!(build_flow_matrix(&empty).total(), 0.0);
    assert!(!empty.to_json_string().contains("pins"));
}

#[test]
fn malformed_netlists_are_rejected() {
    let err = |s: &str| Netlist::from_json_str(s).unwrap_err();
    assert!(matches!(
        err(r#"{"blocks": [{"id": "a", "type": "LUT"}, {"id": "a", "type": "IO"}]}"#),
        Error::Netlist(NetlistError::DuplicateBlock(id)) if id == "a"
    ));
    assert!(matches!(
        err(r#"{"blocks": [{"id": "r", "type": "FF"}]}"#),
        Error::Netlist(NetlistError::RegisterBlock(_))
    ));
    assert!(matches!(
        err(r#"{"blocks": [{"id": "r", "type": "DSP"}]}"#),
        Error::Netlist(NetlistError::UnknownType { .. })
    ));
    assert!(matches!(
        err(r#"{"blocks": [{"id": "a", "type": "LUT"}], "nets": [["a", "zz"]]}"#),
        Error::Netlist(NetlistError::UnknownBlock { net: 0, .. })
    ));
    assert!(matches!(
        err(r#"{"blocks": [{"id": "a", "type": "LUT"}], "nets": [["a", "a"]]}"#),
        Error::Netlist(NetlistError::ShortNet { net: 0 })
    ));
    assert!(matches!(
        err(r#"{"blocks": [{"id": "a", "type": "LUT"}], "pins": {"q": {"row": 0, "col": 0}}}"#),
        Error::Netlist(NetlistError::UnknownPinBlock(_))
    ));
    assert!(Netlist::from_json_str(r#"{"blocks": [], "extra": 1}"#).is_err());
}

#[test]
fn pins_restrict_legality() {
    let arch = FpgaArchitecture::fictional_sized(9);
    let blocks = vec![
        Block { id: "p".into(), ty: CellType::IO },
        Block { id: "q".into(), ty: CellType::IO },
        lut("l"),
    ];
    let pinned = |pins: &[(&str, usize, usize)]| {
        let pins = pins.iter().map(|&(id, row, col)| (id.to_string(), Pin { row, col })).collect();
        Netlist::new(blocks.clone(), vec![], pins).unwrap()
    };
    let nl = pinned(&[("p", 0, 2)]);
    let legal = TypeLegality::new(&nl, &arch).unwrap();
    let at = arch.location(0, 2).unwrap();
    assert_eq!(legal.pinned(), vec![0]);
    assert_eq!(legal.pin(0), Some(at));
    assert!(legal.is_legal(0, at));
    assert!(!legal.is_legal(0, arch.location(0, 3).unwrap()));
    assert!(legal.is_legal(1, arch.location(0, 3).unwrap()));
    assert!(!legal.is_legal(2, arch.location(0, 3).unwrap()));
    assert!(legal.is_legal(2, arch.location(1, 1).unwrap()));

    let err = |nl: Netlist| TypeLegality::new(&nl, &arch).unwrap_err();
    assert!(matches!(err(pinned(&[("p", 9, 0)])), Error::Netlist(NetlistError::PinOutOfRange { .. })));
    assert!(matches!(err(pinned(&[("l", 0, 0)])), Error::Netlist(NetlistError::PinIncompatible { .. })));
    assert!(matches!(
        err(pinned(&[("p", 0, 1), ("q", 0, 1)])),
        Error::Netlist(NetlistError::PinCollision { .. })
    ));
}

#[test]
fn capacity_is_checked() {
    let arch = FpgaArchitecture::uniform(2, 1, CellType::LUT).unwrap();
    let nl = Netlist::new(vec![lut("a"), lut("b"), lut("c")], vec![], BTreeMap::new()).unwrap();
    assert!(matches!(TypeLegality::ignoring_pins(&nl, &arch).check_capacity(), Err(Error::Capacity(_))));
}

#[test]
fn smallest_generated_instance() {
    let arch = FpgaArchitecture::fictional();
    let nl = generate_instance(&arch, 3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let types = nl.block_types();
    assert_eq!(&types[..2], &[CellType::IO, CellType::IO]);
    assert_ne!(types[2], CellType::IO);
    // a 3-vertex tree plus one extra edge is the whole triangle
    assert_eq!(build_flow_matrix(&nl).total(), 6.0);
    assert!(generate_instance(&arch, 2, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    assert!(generate_instance(&arch, 442, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
}

#[test]
fn generated_types_follow_cell_proportions() {
    let arch = FpgaArchitecture::fictional();
    let draws = 1000;
    let m = 100;
    let mut total = 0usize;
    for seed in 0..draws {
        let nl = generate_instance(&arch, m, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert_eq!(nl.count(CellType::IO), 2);
        total += nl.count(CellType::BRAM);
    }
    let p = 16.0 / 361.0;
    let expected = (m - 2) as f64 * p;
    let sigma = ((m - 2) as f64 * p * (1.0 - p) / draws as f64).sqrt();
    let mean = total as f64 / draws as f64;
    assert!((expected - 4.34).abs() < 0.01);
    assert!((mean - expected).abs() <= 3.0 * sigma, "mean {mean}, expected {expected}");
}

#[test]
fn generated_instances_are_connected_and_reproducible() {
    let arch = FpgaArchitecture::fictional();
    for seed in 0..20 {
        let m = 10 + seed as usize * 7;
        let cfg = GeneratorConfig { mean_degree: 3.0, pin_io: true };
        let a = generate_instance_with(&arch, m, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = generate_instance_with(&arch, m, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.pins().len(), 2);
        TypeLegality::new(&a, &arch).unwrap().check_capacity().unwrap();

        let adj = build_flow_matrix(&a).neighbors();
        let mut seen = BTreeSet::from([0]);
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        assert_eq!(seen.len(), m, "seed {seed}");
        let degree: usize = adj.iter().map(Vec::len).sum();
        assert_eq!(degree, (3.0 * m as f64 / 2.0).round() as usize * 2);
    }
}
