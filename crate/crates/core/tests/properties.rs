use proptest::prelude::*;

use dgs_core::analytics;
use dgs_core::csr::Csr;
use dgs_core::harness::{latency_percentile, oracle_check, ReferenceModel};
use dgs_core::types::{CcMode, ContainerKind, EdgeOp};
use dgs_core::view::GraphView;
use dgs_core::workload::{degrees, gen_scan_stream, gen_search_stream, split_insert_stream, ScanSelection};
use dgs_core::{Graph, GraphConfig};

fn combos() -> Vec<GraphConfig> {
    let mut v: Vec<GraphConfig> = [CcMode::Fine, CcMode::Off]
        .into_iter()
        .flat_map(|cc| ContainerKind::ALL.into_iter().map(move |c| GraphConfig::new(c, cc)))
        .collect();
    v.push(GraphConfig::new(ContainerKind::Cow, CcMode::Coarse));
    // Small blocks so short op sequences still split and merge.
    for c in &mut v {
        c.block_size = 4;
        c.adaptive_threshold = 8;
    }
    v
}

fn op() -> impl Strategy<Value = EdgeOp> {
    (any::<bool>(), 0u64..24, 0u64..24).prop_map(|(ins, u, v)| if ins { EdgeOp::Insert(u, v) } else { EdgeOp::Delete(u, v) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_store_matches_the_model(txns in prop::collection::vec(prop::collection::vec(op(), 1..4), 1..60)) {
        for cfg in combos() {
            let g = Graph::new(cfg.clone()).unwrap();
            let mut model = ReferenceModel::new();
            let mut readers = Vec::new();
            for (i, ops) in txns.iter().enumerate() {
                let ts = g.apply_batch(ops).unwrap();
                model.apply(ts, ops).unwrap();
                if i % 7 == 0 {
                    readers.push(g.begin_read());
                }
            }
            // Older readers still see their own snapshot (off mode has none).
            if cfg.cc != CcMode::Off {
                for r in &readers {
                    prop_assert!(oracle_check(r, &model, r.start_ts()).is_ok(), "{:?}/{:?}", cfg.container, cfg.cc);
                }
            }
            drop(readers);
            let r = g.begin_read();
            prop_assert!(oracle_check(&r, &model, r.start_ts()).is_ok());
            drop(r);
            prop_assert!(g.check().is_ok());
            g.compact();
            let r = g.begin_read();
            prop_assert!(oracle_check(&r, &model, r.start_ts()).is_ok());
        }
    }

    #[test]
    fn aborted_writes_leave_no_trace(ops in prop::collection::vec(op(), 1..20)) {
        for cfg in combos() {
            let g = Graph::new(cfg).unwrap();
            g.load_edges(&[(0, 1), (2, 3)]).unwrap();
            let ids: Vec<u64> = (0..24).collect();
            let mut t = g.begin_write(ids).unwrap();
            for o in &ops {
                match *o {
                    EdgeOp::Insert(u, v) => t.insert_edge(u, v).unwrap(),
                    EdgeOp::Delete(u, v) => t.delete_edge(u, v).unwrap(),
                }
            }
            t.abort();
            let r = g.begin_read();
            let model = ReferenceModel::with_initial(&[(0, 1), (2, 3)]);
            prop_assert!(oracle_check(&r, &model, r.start_ts()).is_ok());
            prop_assert_eq!(r.start_ts().0, 0);
        }
    }

    #[test]
    fn csr_and_sorted_views_agree(edges in prop::collection::vec((0u64..40, 0u64..40), 0..200)) {
        let csr = Csr::from_edges(&edges);
        prop_assert!(csr.check().is_ok());
        let g = Graph::new(GraphConfig::new(ContainerKind::Segsl, CcMode::Fine)).unwrap();
        g.load_edges(&edges).unwrap();
        let r = g.begin_read();
        for u in 0..csr.num_vertices() {
            prop_assert_eq!(csr.neighbors(u), r.neighbors(u));
        }
        prop_assert_eq!(analytics::wcc(&csr), analytics::wcc(&r));
        if csr.num_vertices() > 0 {
            prop_assert_eq!(analytics::bfs(&csr, 0).unwrap(), analytics::bfs(&r, 0).unwrap());
        }
    }

    #[test]
    fn split_partitions_the_input(edges in prop::collection::vec((0u64..50, 0u64..50), 0..300), seed in any::<u64>()) {
        let (initial, inserts) = split_insert_stream(&edges, seed, false);
        prop_assert_eq!(initial.len(), edges.len() * 4 / 5);
        let mut all: Vec<_> = initial.clone();
        all.extend(inserts.iter().map(|r| (r.u, r.v.unwrap())));
        let mut want = edges.clone();
        all.sort_unstable();
        want.sort_unstable();
        prop_assert_eq!(all, want);
        let s = gen_search_stream(&initial, seed);
        prop_assert_eq!(s.len(), initial.len() / 5);
        for how in [ScanSelection::TopDegree, ScanSelection::DegreeWeighted] {
            let d = degrees(50, &initial);
            let scans = gen_scan_stream(&d, seed, how);
            prop_assert_eq!(scans.len(), 10);
            let mut ids: Vec<_> = scans.iter().map(|r| r.u).collect();
            ids.sort_unstable();
            ids.dedup();
            prop_assert_eq!(ids.len(), 10);
        }
    }

    #[test]
    fn percentiles_are_monotone(samples in prop::collection::vec(1u64..1_000_000, 1..200), a in 0.0f64..100.0, b in 0.0f64..100.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let x = latency_percentile(&samples, lo).unwrap();
        let y = latency_percentile(&samples, hi).unwrap();
        prop_assert!(x <= y);
        prop_assert!(samples.contains(&x) && samples.contains(&y));
        prop_assert_eq!(latency_percentile(&samples, 100.0).unwrap(), *samples.iter().max().unwrap());
    }
}
