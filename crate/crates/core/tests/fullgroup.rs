use stability_lab::fullgroup::{adapted_partition, ball_elements, local_embedding, sample_word, three_cycle, TableElement};
use stability_lab::subshift::{ClopenSet, Subshift, Substitution};

/// First two valid three-cycle gadgets whose supports overlap, so they need not commute.
fn overlapping_gadgets(x: &Subshift, len: usize) -> Vec<TableElement> {
    let mut out = Vec::new();
    for w in x.language(len).unwrap().iter() {
        let u = ClopenSet::cylinder(x, w, 0).unwrap();
        if let Ok(g) = three_cycle(x, &u) {
            out.push(g);
        }
        if out.len() == 2 {
            break;
        }
    }
    out
}

#[test]
fn non_commuting_gadgets_embed() {
    for sub in [Substitution::fibonacci(), Substitution::thue_morse(), Substitution::chacon()] {
        let x = Subshift::new(sub.clone()).unwrap();
        let gens = overlapping_gadgets(&x, 4);
        assert_eq!(gens.len(), 2, "{sub}");
        for n in [1, 2] {
            let seed = vec![x.substitution().alphabet()[0]];
            let xi = adapted_partition(&x, &gens, n, &seed).unwrap();
            assert!(x.check_kr(&xi).unwrap().passed());
            let rep = local_embedding(&x, &gens, n, &xi).unwrap();
            assert!(rep.passed, "{sub} n={n}: {}", rep.to_json());
        }
    }
}

#[test]
fn cocycle_relation_on_orbit_windows() {
    let x = Subshift::new(Substitution::thue_morse()).unwrap();
    let gens = overlapping_gadgets(&x, 4);
    let elems: Vec<TableElement> = ball_elements(&x, &gens, 2).unwrap().into_iter().map(|(_, g)| g).collect();
    let word = sample_word(&x, 2000);
    for g in &elems {
        for h in &elems {
            let gh = g.compose(&x, h).unwrap();
            for pos in (200..1800).step_by(37) {
                let fh = h.exponent_at(&word, pos).unwrap();
                let fg = g.exponent_at(&word, (pos as i64 + fh) as usize).unwrap();
                assert_eq!(gh.exponent_at(&word, pos), Some(fg + fh));
            }
        }
    }
}

fn product(x: &Subshift, gens: &[TableElement], letters: &[(usize, bool)]) -> TableElement {
    letters.iter().fold(TableElement::identity(x), |acc, &(i, inv)| {
        let g = if inv { gens[i].inverse(x).unwrap() } else { gens[i].clone() };
        acc.compose(x, &g).unwrap()
    })
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
    #[test]
    fn table_group_laws(
        a in proptest::collection::vec((0usize..3, proptest::bool::ANY), 0..4),
        b in proptest::collection::vec((0usize..3, proptest::bool::ANY), 0..4),
        c in proptest::collection::vec((0usize..3, proptest::bool::ANY), 0..4),
    ) {
        let x = Subshift::new(Substitution::fibonacci()).unwrap();
        let mut gens = overlapping_gadgets(&x, 4);
        gens.push(TableElement::shift_power(&x, 1));
        let (f, g, h) = (product(&x, &gens, &a), product(&x, &gens, &b), product(&x, &gens, &c));
        let left = f.compose(&x, &g).unwrap().compose(&x, &h).unwrap();
        let right = f.compose(&x, &g.compose(&x, &h).unwrap()).unwrap();
        proptest::prop_assert_eq!(left, right);
        proptest::prop_assert!(f.compose(&x, &f.inverse(&x).unwrap()).unwrap().is_identity());
        proptest::prop_assert_eq!(f.inverse(&x).unwrap().inverse(&x).unwrap(), f);
    }
}
