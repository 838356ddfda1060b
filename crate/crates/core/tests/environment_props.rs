use std::collections::BTreeMap;

use edgeflow_core::environment::{busy_cost, exec_time, table1_environment, transfer_time, SizeClass};
use edgeflow_core::{Environment, TaskSpec, Tier};
use proptest::prelude::*;

fn medium() -> Environment {
    table1_environment(&BTreeMap::new(), &BTreeMap::new()).unwrap()
}

fn first(env: &Environment, tier: Tier) -> &edgeflow_core::NodeSpec {
    env.nodes_in(tier).next().unwrap()
}

proptest! {
    #[test]
    fn exec_time_monotone(len in 1.0f64..1e6, mips in 1.0f64..1e5, f in 1.001f64..10.0) {
        let env = medium();
        let mut node = first(&env, Tier::Edge).clone();
        node.mips = mips;
        let t = exec_time(&TaskSpec::new("t", len), &node);
        prop_assert!(exec_time(&TaskSpec::new("t", len * f), &node) > t);
        node.mips = mips * f;
        prop_assert!(exec_time(&TaskSpec::new("t", len), &node) < t);
    }

    #[test]
    fn transfer_symmetric_and_latency_floor(bytes in 0u64..1_000_000_000, lat in 0.0f64..1.0, a in 0usize..6, b in 0usize..6) {
        let mut env = medium();
        for l in &mut env.network.links {
            l.latency_s = lat;
        }
        let (x, y) = (&env.nodes[a], &env.nodes[b]);
        let ab = transfer_time(bytes, x, y, &env.network).unwrap();
        prop_assert_eq!(ab, transfer_time(bytes, y, x, &env.network).unwrap());
        if a != b {
            prop_assert_eq!(transfer_time(0, x, y, &env.network).unwrap(), lat);
            prop_assert!(ab >= lat);
        } else {
            prop_assert_eq!(ab, 0.0);
        }
    }

    #[test]
    fn busy_cost_linear(s1 in 0.0f64..1e6, s2 in 0.0f64..1e6) {
        let env = medium();
        for n in &env.nodes {
            let whole = busy_cost(n, s1 + s2);
            let parts = busy_cost(n, s1) + busy_cost(n, s2);
            prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(1e-300));
        }
    }
}

#[test]
fn table1_values_exact() {
    let env = medium();
    assert_eq!(env.nodes.len(), 6);
    for n in &env.nodes {
        let (mips, cost) = match n.tier {
            Tier::Device => (1000.0, 0.0),
            Tier::Edge => (1300.0, 0.48),
            Tier::Cloud => (1600.0, 0.96),
        };
        assert_eq!((n.mips, n.cost_rate), (mips, cost), "{}", n.id);
        if n.tier == Tier::Device {
            assert_eq!((n.p_run, n.p_idle, n.p_tx, n.p_rx), (700.0, 30.0, 100.0, 25.0));
        } else {
            assert_eq!((n.p_run, n.p_idle, n.p_tx, n.p_rx), (0.0, 0.0, 0.0, 0.0));
        }
    }
    assert_eq!(env.origin_device, "device-1");
}

#[test]
fn size_classes_and_examples() {
    let env = table1_environment(&BTreeMap::from([(Tier::Cloud, SizeClass::Large)]), &BTreeMap::new()).unwrap();
    let cloud = first(&env, Tier::Cloud);
    assert_eq!(cloud.mips, 2400.0);
    assert!((cloud.cost_rate - 1.44).abs() < 1e-12);
    let one = table1_environment(&BTreeMap::new(), &Tier::ALL.iter().map(|&t| (t, 1)).collect()).unwrap();
    assert_eq!(one.nodes.len(), 3);

    let env = medium();
    let (d, e, c) = (first(&env, Tier::Device), first(&env, Tier::Edge), first(&env, Tier::Cloud));
    assert_eq!(exec_time(&TaskSpec::new("t", 2000.0), d), 2.0);
    assert!((exec_time(&TaskSpec::new("t", 1000.0), e) - 0.76923).abs() < 1e-5);
    assert_eq!(transfer_time(1_250_000, d, e, &env.network).unwrap(), 1.0);
    assert_eq!(transfer_time(1_250_000, d, c, &env.network).unwrap(), 2.0);
    assert!((busy_cost(e, 3600.0) - 0.48).abs() < 1e-12);
    assert_eq!(busy_cost(d, 1234.0), 0.0);
    assert!((busy_cost(c, 1800.0) - 0.48).abs() < 1e-12);
}
