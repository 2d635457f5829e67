use proptest::prelude::*;

use orientcirc::circuit::{demorgan_normalize, parse_circuit, restrict, serialize_circuit, Circuit};
use orientcirc::corpus::random_circuit;
use orientcirc::funcs::is_monotone;
use orientcirc::kw::{GamePair, KwEngine, Mode, Polarity};
use orientcirc::orientation::{is_orientation, minimal_orientation, OrientationVector};
use orientcirc::table::{Assignment, TruthTable};

fn circuit() -> impl Strategy<Value = Circuit> {
    (1u32..=5, 1u32..=6, 0usize..=3, any::<u64>())
        .prop_filter_map("infeasible shape", |(n, d, neg, seed)| {
            random_circuit(n, d, neg.min(d as usize), seed).ok()
        })
}

fn table() -> impl Strategy<Value = TruthTable> {
    (1u32..=5).prop_flat_map(|n| {
        prop::collection::vec(any::<bool>(), 1 << n)
            .prop_map(move |bits| TruthTable::from_fn(n, |r| bits[r]).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn netlist_round_trip(c in circuit()) {
        let text = serialize_circuit(&c);
        let back = parse_circuit(&text).unwrap();
        prop_assert_eq!(serialize_circuit(&back), text);
        prop_assert_eq!(back.truth_table().unwrap(), c.truth_table().unwrap());
    }

    #[test]
    fn table_text_round_trip(f in table()) {
        let back: TruthTable = f.to_string().parse().unwrap();
        prop_assert_eq!(&back, &f);
        prop_assert_eq!(TruthTable::from_hex(f.nvars(), &f.to_hex()).unwrap(), f);
    }

    #[test]
    fn normalization_preserves_function(c in circuit()) {
        let d = demorgan_normalize(&c);
        prop_assert!(d.is_demorgan());
        prop_assert_eq!(d.truth_table().unwrap(), c.truth_table().unwrap());
    }

    #[test]
    fn negated_leaves_orient_every_gate(c in circuit()) {
        let d = demorgan_normalize(&c);
        let beta = OrientationVector::new(d.nvars(), d.negated_leaf_mask());
        for t in d.gate_tables().unwrap() {
            prop_assert!(is_orientation(&t, &beta).unwrap());
        }
    }

    #[test]
    fn restriction_agrees_with_original(c in circuit(), keys in prop::collection::vec((1u32..=5, any::<bool>()), 0..4)) {
        let n = c.nvars();
        let mut partial: Vec<(u32, bool)> = Vec::new();
        for (i, v) in keys {
            if i <= n && partial.iter().all(|&(j, _)| j != i) {
                partial.push((i, v));
            }
        }
        let r = restrict(&c, &partial).unwrap();
        prop_assert_eq!(r.nvars(), n);
        prop_assert!(r.depth() <= c.depth());
        prop_assert!(r.stats().size <= c.stats().size);
        for row in 0..1usize << n {
            let mut a = Assignment::from_row(n, row);
            for &(i, v) in &partial {
                a.set(i, v);
            }
            prop_assert_eq!(r.eval(&Assignment::from_row(n, row)).unwrap(), c.eval(&a).unwrap());
        }
    }

    #[test]
    fn orientations_are_upward_closed(f in table(), extra in any::<u64>()) {
        let n = f.nvars();
        let min = minimal_orientation(&f);
        prop_assert!(is_orientation(&f, &min).unwrap());
        let above = OrientationVector::new(n, min.bits() | (extra & ((1 << n) - 1)));
        prop_assert!(is_orientation(&f, &above).unwrap());
        // Dropping any coordinate of the minimum breaks it.
        for i in min.support() {
            let below = OrientationVector::new(n, min.bits() & !OrientationVector::from_vars(n, [i]).bits());
            prop_assert!(!is_orientation(&f, &below).unwrap());
        }
    }

    #[test]
    fn zero_orientation_iff_monotone(f in table()) {
        prop_assert_eq!(minimal_orientation(&f).is_zero(), is_monotone(&f));
    }

    #[test]
    fn general_game_answers_differ(c in circuit(), pick in any::<prop::sample::Index>()) {
        let f = c.truth_table().unwrap();
        let pairs = GamePair::all(&f);
        prop_assume!(!pairs.is_empty());
        let p = pairs[pick.index(pairs.len())];
        let t = KwEngine::new(&c, Mode::General).unwrap().run(&p).unwrap();
        let i = t.answer.index;
        prop_assert_ne!(p.x.get(i), p.y.get(i));
        prop_assert_eq!(t.answer.polarity == Polarity::Positive, p.x.get(i));
        prop_assert!(t.total_bits <= demorgan_normalize(&c).depth() as usize);
    }
}
