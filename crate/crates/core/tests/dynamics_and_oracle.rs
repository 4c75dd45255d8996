use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use contact_lattice::dynamics::{stationary_density, step, StationaryOptions, StepOutcome};
use contact_lattice::oracle::{build_generator, stationary, transient, tv, tv_restricted, Distribution};
use contact_lattice::{Configuration, Geometry, RateSet, SiteState};

fn torus(n: usize) -> Geometry {
    Geometry::torus(n, n).unwrap()
}

fn single_site_b(r: &RateSet) -> [f64; 3] {
    let degraded = r.kappa_tilde / (r.kappa_tilde + r.h_tilde);
    let occupied = r.h / (r.kappa + r.kappa_tilde + r.h) * r.h_tilde / (r.kappa_tilde + r.h_tilde);
    [degraded, 1.0 - degraded - occupied, occupied]
}

#[test]
fn gillespie_picks_transitions_by_propensity() {
    let g = torus(2);
    let rates = RateSet::model_b(1.0, 0.5, 0.3, 0.2, 0.4).unwrap();
    let start = Configuration::from_values(g, &[1, 0, -1, 0]).unwrap();
    // Site 1 sees the occupied site 0 through both horizontal slots.
    let expected: [((usize, i8), f64); 7] = [
        ((0, 0), 1.0),
        ((0, -1), 0.5),
        ((1, 1), 0.2 + 2.0 * 0.3),
        ((1, -1), 0.5),
        ((2, 0), 0.4),
        ((3, 1), 0.2),
        ((3, -1), 0.5),
    ];
    let total: f64 = expected.iter().map(|e| e.1).sum();

    let gen = build_generator(&rates, &g).unwrap();
    for ((site, to), rate) in expected {
        let mut c = start.clone();
        c.set(site, SiteState::from_digit((to + 1) as usize).unwrap());
        assert!((gen.entry(start.encode(), c.encode()) - rate).abs() < 1e-12);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let draws = 40_000;
    let mut counts = [0usize; 7];
    let mut dt_sum = 0.0;
    for _ in 0..draws {
        let mut c = start.clone();
        let StepOutcome::Event(e) = step(&mut c, &rates, &mut rng).unwrap() else {
            panic!("absorbed");
        };
        dt_sum += e.dt;
        let k = expected.iter().position(|x| x.0 == (e.site, e.to.value())).unwrap();
        counts[k] += 1;
    }
    let stat: f64 = counts
        .iter()
        .zip(&expected)
        .map(|(&c, e)| {
            let m = draws as f64 * e.1 / total;
            (c as f64 - m).powi(2) / m
        })
        .sum();
    let p = 1.0 - ChiSquared::new(6.0).unwrap().cdf(stat);
    assert!(p > 0.001, "chi-square {stat}, p = {p}");
    let mean_dt = dt_sum / draws as f64;
    let sd = 1.0 / total / (draws as f64).sqrt();
    assert!((mean_dt - 1.0 / total).abs() < 4.0 * sd, "mean dwell {mean_dt}");
}

#[test]
fn all_degraded_model_a_without_contact_is_not_absorbing() {
    let g = torus(3);
    let rates = RateSet::model_a(1.0, 1.0, 0.0, 0.0, 1.0, 1.0).unwrap();
    let mut c = Configuration::uniform(g, SiteState::Degraded);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let StepOutcome::Event(e) = step(&mut c, &rates, &mut rng).unwrap() else {
        panic!("absorbed");
    };
    assert_eq!((e.from, e.to), (SiteState::Degraded, SiteState::Vacant));
}

#[test]
fn uniform_rates_without_contact_give_one_third() {
    let rates = RateSet::model_a(1.0, 1.0, 0.0, 0.0, 1.0, 1.0).unwrap();
    let g = torus(8);
    let est = stationary_density(&rates, &g, &StationaryOptions::new(50.0, 2000.0), &mut ChaCha8Rng::seed_from_u64(3))
        .unwrap();
    assert!((est.rho - 1.0 / 3.0).abs() < 3.0 * est.std_err, "{} ± {}", est.rho, est.std_err);

    let pi = stationary(&build_generator(&rates, &torus(2)).unwrap()).unwrap();
    for site in 0..4 {
        for p in pi.marginal(&[site]) {
            assert!((p - 1.0 / 3.0).abs() < 1e-10);
        }
    }
}

#[test]
fn no_contact_stationary_law_is_a_product() {
    let rates = RateSet::model_a(0.7, 0.4, 0.0, 0.0, 0.6, 0.3).unwrap();
    let pi = stationary(&build_generator(&rates, &torus(2)).unwrap()).unwrap();
    // Single-site chain -1 <-> 0 <-> 1 is a birth-death chain.
    let (k, kt, h, ht) = (0.7, 0.4, 0.6, 0.3);
    let w = [kt / ht, 1.0, h / k];
    let z: f64 = w.iter().sum();
    let site: Vec<f64> = w.iter().map(|x| x / z).collect();
    for (idx, p) in pi.probs.iter().enumerate() {
        let c = Configuration::decode(torus(2), idx);
        let prod: f64 = c.states().iter().map(|s| site[s.digit()]).product();
        assert!((p - prod).abs() < 1e-10, "state {idx}");
    }
}

#[test]
fn model_b_without_contact_matches_closed_form() {
    let rates = RateSet::model_b(0.8, 0.3, 0.0, 0.5, 0.6).unwrap();
    let law = single_site_b(&rates);
    let pi = stationary(&build_generator(&rates, &torus(3)).unwrap()).unwrap();
    for site in [0, 4, 8] {
        for (a, b) in pi.marginal(&[site]).iter().zip(law) {
            assert!((a - b).abs() < 1e-8, "{:?} vs {law:?}", pi.marginal(&[site]));
        }
    }
    let est = stationary_density(&rates, &torus(10), &StationaryOptions::new(50.0, 2000.0), &mut ChaCha8Rng::seed_from_u64(9))
        .unwrap();
    assert!((est.rho - law[2]).abs() < 3.0 * est.std_err, "{} vs {}", est.rho, law[2]);
}

#[test]
fn simulated_density_agrees_with_oracle() {
    let g = torus(2);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for rates in [
        RateSet::model_a(0.6, 0.3, 0.5, 0.4, 0.2, 0.5).unwrap(),
        RateSet::model_b(1.0, 0.5, 0.3, 0.2, 0.4).unwrap(),
    ] {
        let pi = stationary(&build_generator(&rates, &g).unwrap()).unwrap();
        let mut opts = StationaryOptions::new(100.0, 20_000.0);
        opts.record_occupation = true;
        let est = stationary_density(&rates, &g, &opts, &mut rng).unwrap();
        let exact = pi.occupied_probability(0);
        let (lo, hi) = est.ci(2.576);
        assert!(lo <= exact && exact <= hi, "{exact} not in ({lo}, {hi})");
        let occ = Distribution {
            n_sites: 4,
            probs: est.occupation.unwrap(),
        };
        let total = occ.total_mass();
        let occ = Distribution {
            n_sites: 4,
            probs: occ.probs.iter().map(|p| p / total).collect(),
        };
        assert!(tv(&occ, &pi) < 0.03, "tv {}", tv(&occ, &pi));
    }
}

#[test]
fn short_time_law_follows_the_generator() {
    let rates = RateSet::model_a(0.7, 0.4, 0.6, 0.3, 0.5, 0.8).unwrap();
    let g = torus(2);
    let gen = build_generator(&rates, &g).unwrap();
    let start = Configuration::from_values(g, &[1, 0, -1, 0]).unwrap();
    let i = start.encode();
    let mu0 = Distribution::point_mass(&start);
    for t in [1e-3, 1e-4] {
        let mu = transient(&gen, &mu0, t).unwrap();
        let scale = gen.max_exit_rate().powi(2) * t * t;
        for j in 0..gen.dimension() {
            let first = if i == j { 1.0 } else { 0.0 } + t * gen.entry(i, j);
            assert!((mu.probs[j] - first).abs() <= scale, "t {t}, state {j}");
        }
    }
}

#[test]
fn repair_rate_bounds_single_site_distance() {
    let rates = RateSet::model_b(1.0, 0.5, 0.3, 0.2, 0.4).unwrap();
    let g = torus(2);
    let gen = build_generator(&rates, &g).unwrap();
    let pi = stationary(&gen).unwrap();
    for init in [SiteState::Degraded, SiteState::Vacant, SiteState::Occupied] {
        let start = Distribution::point_mass(&Configuration::uniform(g, init));
        for t in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let mu = transient(&gen, &start, t).unwrap();
            for site in 0..4 {
                assert!(tv_restricted(&mu, &pi, &[site]).unwrap() <= (-rates.h * t).exp() + 1e-10);
            }
            assert!(tv_restricted(&mu, &pi, &[0, 3]).unwrap() <= 2.0 * (-rates.h * t).exp() + 1e-10);
        }
    }
}

#[test]
fn long_time_law_is_stationary() {
    let rates = RateSet::model_a(0.7, 0.4, 0.6, 0.3, 0.5, 0.8).unwrap();
    let g = torus(2);
    let gen = build_generator(&rates, &g).unwrap();
    let pi = stationary(&gen).unwrap();
    let mu = transient(&gen, &Distribution::point_mass(&Configuration::uniform(g, SiteState::Degraded)), 200.0).unwrap();
    assert!(tv(&mu, &pi) < 1e-9);
}

fn model_b_rates() -> impl Strategy<Value = RateSet> {
    (0.1f64..2.0, 0.05f64..1.0, 0.0f64..1.0, 0.05f64..1.0, 0.05f64..1.0)
        .prop_map(|(k, ks, l, h, ht)| RateSet::model_b(k, ks, l, h, ht).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn distance_to_equilibrium_never_grows(rates in model_b_rates(), init in 0usize..3, s in 0.0f64..4.0, t in 0.0f64..4.0) {
        let g = torus(2);
        let gen = build_generator(&rates, &g).unwrap();
        let pi = stationary(&gen).unwrap();
        let start = Distribution::point_mass(&Configuration::uniform(g, SiteState::from_digit(init).unwrap()));
        let early = transient(&gen, &start, s.min(t)).unwrap();
        let late = transient(&gen, &start, s.max(t)).unwrap();
        prop_assert!(tv(&late, &pi) <= tv(&early, &pi) + 1e-10);
    }

    #[test]
    fn transient_is_a_semigroup(rates in model_b_rates(), s in 0.0f64..3.0, t in 0.0f64..3.0, seed in any::<u64>()) {
        let g = torus(2);
        let gen = build_generator(&rates, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<i8> = (0..4).map(|_| rng.random_range(-1..=1)).collect();
        let mu0 = Distribution::point_mass(&Configuration::from_values(g, &vals).unwrap());
        let whole = transient(&gen, &mu0, s + t).unwrap();
        let split = transient(&gen, &transient(&gen, &mu0, s).unwrap(), t).unwrap();
        prop_assert!(tv(&whole, &split) < 1e-9);
        prop_assert!((whole.total_mass() - 1.0).abs() < 1e-10);
        let pi = stationary(&gen).unwrap();
        prop_assert!(tv(&transient(&gen, &pi, t).unwrap(), &pi) < 1e-9);
    }
}
