use proptest::prelude::*;

use moranrec::backward::BackwardModel;
use moranrec::measure::{decode, encode, tensor_site_ordered, Measure, PopulationState, SiteSpace};
use moranrec::partition::{
    coarsenings, enumerate_partitions, is_ordered_le2, ordered_partitions_le2, refinements,
    Partition, SiteSet,
};
use moranrec::recombination::{
    lde_from_sampling, lde_operator, recombinator, recombinator_bar, sampling, sampling_bar,
    sampling_oracle, DiffusionRates, RecombinationDistribution,
};

fn partition_of(n: usize) -> impl Strategy<Value = Partition> {
    prop::collection::vec(0..n, n)
        .prop_map(move |labels| Partition::from_labels(SiteSet::full(n).unwrap(), &labels).unwrap())
}

fn three_partitions(max_n: usize) -> impl Strategy<Value = (Partition, Partition, Partition)> {
    (1..=max_n).prop_flat_map(|n| (partition_of(n), partition_of(n), partition_of(n)))
}

fn space_of(max_n: usize, max_card: usize) -> impl Strategy<Value = SiteSpace> {
    prop::collection::vec(2..=max_card, 1..=max_n).prop_map(|c| SiteSpace::new(c).unwrap())
}

fn measure_on(space: SiteSpace) -> impl Strategy<Value = Measure> {
    prop::collection::vec(0.01f64..1.0, space.num_types())
        .prop_map(move |w| Measure::on_space(&space, space.sites(), w).unwrap())
}

fn counting_on(space: SiteSpace, max_n: u32) -> impl Strategy<Value = PopulationState> {
    let k = space.num_types();
    prop::collection::vec(0..k, 1..=max_n as usize).prop_map(move |types| {
        let mut counts = vec![0u32; k];
        for x in types {
            counts[x] += 1;
        }
        PopulationState::new(space.clone(), counts).unwrap()
    })
}

fn subset_of(s: SiteSet) -> impl Strategy<Value = SiteSet> {
    let sites: Vec<usize> = s.iter().collect();
    prop::collection::vec(any::<bool>(), sites.len()).prop_map(move |keep| {
        SiteSet::from_sites(sites.iter().zip(&keep).filter(|(_, &k)| k).map(|(&x, _)| x)).unwrap()
    })
}

fn cuts(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n - 1)
        .prop_map(move |v| v.iter().map(|x| x / (n as f64 - 1.0).max(1.0)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lattice_laws_on_larger_sets((a, b, c) in three_partitions(8)) {
        let m = a.meet(&b).unwrap();
        let j = a.join(&b).unwrap();
        prop_assert_eq!(a.meet(&j).unwrap(), a.clone());
        prop_assert_eq!(a.join(&m).unwrap(), a.clone());
        prop_assert_eq!(a.meet(&b.meet(&c).unwrap()).unwrap(), m.meet(&c).unwrap());
        prop_assert_eq!(a.join(&b.join(&c).unwrap()).unwrap(), j.join(&c).unwrap());
        prop_assert!(m.refines(&a).unwrap() && a.refines(&j).unwrap());
        prop_assert_eq!(a.refines(&b).unwrap(), m == a);
    }

    #[test]
    fn restriction_is_canonical_and_monotone((a, b, _) in three_partitions(8), bits in any::<u64>()) {
        let s = a.ground();
        let u = SiteSet::from_bits(s.bits() & bits);
        prop_assume!(!u.is_empty());
        let ra = a.restrict(u).unwrap();
        prop_assert_eq!(ra.to_string().parse::<Partition>().unwrap(), ra.clone());
        prop_assert!(ra.blocks().windows(2).all(|w| w[0].min_site() < w[1].min_site()));
        if a.refines(&b).unwrap() {
            prop_assert!(ra.refines(&b.restrict(u).unwrap()).unwrap());
        }
        prop_assert_eq!(a.meet(&b).unwrap().restrict(u).unwrap(), ra.meet(&b.restrict(u).unwrap()).unwrap());
    }

    #[test]
    fn coarsenings_and_refinements_are_the_intervals(a in (1..=5usize).prop_flat_map(partition_of)) {
        let all = enumerate_partitions(a.ground()).unwrap();
        let up = coarsenings(&a).unwrap();
        let down = refinements(&a).unwrap();
        prop_assert_eq!(up.len(), all.iter().filter(|b| a.refines(b).unwrap()).count());
        prop_assert_eq!(down.len(), all.iter().filter(|b| b.refines(&a).unwrap()).count());
    }

    #[test]
    fn projection_composition(
        (m, v, w) in space_of(4, 3)
            .prop_flat_map(|s| (measure_on(s.clone()), subset_of(s.sites())))
            .prop_flat_map(|(m, v)| (Just(m), Just(v), subset_of(v)))
    ) {
        prop_assume!(!w.is_empty());
        let lhs = m.marginalize(v).unwrap().marginalize(w).unwrap();
        let rhs = m.marginalize(w).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn tensor_marginals_are_scaled_factors(
        (m, u) in space_of(4, 3).prop_flat_map(|s| (measure_on(s.clone()), subset_of(s.sites())))
    ) {
        let s = m.sites();
        let v = s.difference(u);
        prop_assume!(!u.is_empty() && !v.is_empty());
        let fu = m.marginalize(u).unwrap();
        let fv = m.marginalize(v).unwrap().scaled(0.5);
        let t = tensor_site_ordered(&[&fv, &fu]).unwrap();
        prop_assert_eq!(t.sites(), s);
        let back = t.marginalize(u).unwrap();
        prop_assert!(back.max_abs_diff(&fu.scaled(fv.norm())).unwrap() < 1e-12);
    }

    #[test]
    fn encode_decode_are_inverse(radices in prop::collection::vec(1usize..5, 1..6), seed in any::<u64>()) {
        let len: usize = radices.iter().product();
        let x = (seed as usize) % len;
        let letters = decode(&radices, x);
        prop_assert!(letters.iter().zip(&radices).all(|(l, r)| l < r));
        prop_assert_eq!(encode(&radices, &letters), x);
    }

    #[test]
    fn recombinators_compose_by_meet(
        (m, a, b) in space_of(4, 3).prop_flat_map(|s| {
            let n = s.n_sites();
            (measure_on(s), partition_of(n), partition_of(n))
        })
    ) {
        let lhs = recombinator(&a, &recombinator(&b, &m).unwrap()).unwrap();
        let rhs = recombinator(&a.meet(&b).unwrap(), &m).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn marginal_recombination_closed_form_matches_restriction_sum(
        (c, u) in (1..=6usize).prop_flat_map(|n| (cuts(n), subset_of(SiteSet::full(n).unwrap())))
    ) {
        prop_assume!(!u.is_empty());
        let r = RecombinationDistribution::new(c).unwrap();
        for b in ordered_partitions_le2(u) {
            let oracle: f64 = r
                .table()
                .iter()
                .filter(|(a, _)| a.restrict(u).unwrap() == b)
                .map(|(_, p)| p)
                .sum();
            prop_assert!((r.marginal(u, &b).unwrap() - oracle).abs() < 1e-14);
        }
        let total: f64 = r.marginal_table(u).unwrap().iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn recombinator_is_sum_of_sampling_functions(
        (z, a) in space_of(4, 2).prop_flat_map(|s| {
            let n = s.n_sites();
            (counting_on(s, 8), partition_of(n))
        })
    ) {
        let zm = z.measure();
        let mut sum = zm.zeros_like();
        for b in coarsenings(&a).unwrap() {
            sum.add_scaled(&sampling_bar(&b, &zm).unwrap(), 1.0).unwrap();
        }
        let want = recombinator_bar(&a, &zm).unwrap();
        prop_assert_eq!(sum.weights(), want.weights());
    }

    #[test]
    fn sampling_matches_enumeration(
        (z, a) in space_of(3, 2).prop_flat_map(|s| {
            let n = s.n_sites();
            (counting_on(s, 8), partition_of(n))
        })
    ) {
        let zm = z.measure();
        let fast = sampling_bar(&a, &zm).unwrap();
        let slow = sampling_oracle(&a, &zm).unwrap();
        prop_assert_eq!(fast.weights(), slow.weights());
        if a.len() as u32 <= z.size() {
            let h = sampling(&a, &zm).unwrap();
            prop_assert!(h.weights().iter().all(|&w| w >= -1e-12));
            prop_assert!((h.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lde_factorises_over_blocks(
        (m, a) in space_of(4, 3).prop_flat_map(|s| {
            let n = s.n_sites();
            (measure_on(s), partition_of(n))
        })
    ) {
        let m = m.normalized().unwrap();
        let lhs = lde_operator(&a, &m).unwrap();
        let factors: Vec<Measure> = a
            .blocks()
            .iter()
            .map(|&b| lde_operator(&Partition::coarsest(b).unwrap(), &m.marginalize(b).unwrap()).unwrap())
            .collect();
        let refs: Vec<&Measure> = factors.iter().collect();
        let rhs = tensor_site_ordered(&refs).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn lde_sums_to_recombinator(
        (m, a) in space_of(4, 3).prop_flat_map(|s| {
            let n = s.n_sites();
            (measure_on(s), partition_of(n))
        })
    ) {
        let mut sum = m.zeros_like();
        for b in refinements(&a).unwrap() {
            sum.add_scaled(&lde_operator(&b, &m).unwrap(), 1.0).unwrap();
        }
        prop_assert!(sum.max_abs_diff(&recombinator(&a, &m).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn lde_through_sampling_agrees_with_definition(z in space_of(3, 2).prop_flat_map(|s| counting_on(s, 8))) {
        prop_assume!(z.size() as usize >= z.space().n_sites());
        let zm = z.measure();
        let one = Partition::coarsest(zm.sites()).unwrap();
        let direct = lde_operator(&one, &zm).unwrap();
        let via_h = lde_from_sampling(&zm).unwrap();
        prop_assert!(direct.max_abs_diff(&via_h).unwrap() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generator_rows_sum_to_zero(n in 1..=5usize, n_pop in prop::sample::select(vec![3u32, 5, 10]), c in prop::collection::vec(0.0f64..1.0, 4)) {
        let c: Vec<f64> = c[..n - 1].iter().map(|x| x / 4.0).collect();
        let r = RecombinationDistribution::new(c.clone()).unwrap();
        let rho = DiffusionRates::new(c.iter().map(|x| 10.0 * x).collect()).unwrap();
        for model in [
            BackwardModel::finite(r.clone(), n_pop).unwrap(),
            BackwardModel::deterministic(r.clone()).unwrap(),
            BackwardModel::diffusion(rho.clone()).unwrap(),
        ] {
            let g = model.generator().unwrap();
            prop_assert!(g.max_row_sum() < 1e-12);
            if let Some(np) = model.population_size() {
                for (i, a) in g.states().iter().enumerate() {
                    for &(j, rate) in g.row(i) {
                        prop_assert!(a.len() <= np as usize || rate == 0.0);
                        prop_assert!(g.states()[j].len() <= np as usize);
                    }
                }
            }
        }
    }

    #[test]
    fn theta_formula_sums_to_generator(n in 1..=4usize, n_pop in 2u32..=6, c in prop::collection::vec(0.0f64..1.0, 3)) {
        let c: Vec<f64> = c[..n - 1].iter().map(|x| x / 3.0).collect();
        let r = RecombinationDistribution::new(c).unwrap();
        let model = BackwardModel::finite(r.clone(), n_pop).unwrap();
        let g = model.generator().unwrap();
        let states = g.states().to_vec();
        for a in &states {
            if a.len() > n_pop as usize {
                continue;
            }
            for bb in &states {
                if bb == a {
                    continue;
                }
                let mut total = 0.0;
                for j in 0..a.len() {
                    let block = a.block(j);
                    for jj in ordered_partitions_le2(block) {
                        total += model.theta_rate(j, &jj, a, bb).unwrap();
                    }
                }
                prop_assert!((total - g.rate(a, bb)).abs() < 1e-12, "{} -> {}: {} vs {}", a, bb, total, g.rate(a, bb));
            }
        }
    }

    #[test]
    fn deterministic_paths_stay_ordered(n in 2..=5usize, c in prop::collection::vec(0.0f64..1.0, 4), seed in any::<u64>()) {
        let c: Vec<f64> = c[..n - 1].iter().map(|x| x / 4.0).collect();
        let model = BackwardModel::deterministic(RecombinationDistribution::new(c).unwrap()).unwrap();
        let one = Partition::coarsest(SiteSet::full(n).unwrap()).unwrap();
        let path = model.simulate(&one, 50.0, seed, 0, false).unwrap();
        let mut prev = one;
        for e in &path.events {
            prop_assert!(e.partition.is_ordered());
            prop_assert!(e.partition.refines(&prev).unwrap());
            prev = e.partition.clone();
        }
        prop_assert!(is_ordered_le2(&Partition::coarsest(SiteSet::full(n).unwrap()).unwrap()));
    }
}
