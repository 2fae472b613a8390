use proptest::prelude::*;
use rainspray::geom::Vec3;
use rainspray::intensity::{
    alpha_from_rain_rate, physical_intensity, solid_angle, EchoParams, ReflectanceTable,
};
use rainspray::lidar::Hit;
use rainspray::scene::{build_scenario, ScenarioConfig, TireSpec, WeatherConfig};
use rainspray::spray::{emission_count, volume_rate_side_wave, volume_rate_tread_pickup, SprayParams, SpraySystem};
use rainspray::SemanticClass;
use serde_json::json;

fn hit(class: SemanticClass, albedo: [f32; 3], range: f64) -> Hit {
    Hit {
        range_m: range,
        point: Vec3::zeros(),
        class,
        target_albedo: albedo,
        target_id: None,
        dropped: false,
        intensity: -1.0,
    }
}

fn weather(alpha: f64) -> WeatherConfig {
    WeatherConfig {
        attenuation_alpha_per_m: alpha,
        ..WeatherConfig::clear()
    }
}

fn intensity(class: SemanticClass, albedo: [f32; 3], range: f64, alpha: f64) -> f64 {
    physical_intensity(&hit(class, albedo, range), &EchoParams::default(), &ReflectanceTable::default(), &weather(alpha))
        .unwrap()
}

fn class() -> impl Strategy<Value = SemanticClass> {
    prop_oneof![Just(SemanticClass::Ground), Just(SemanticClass::Vehicle)]
}

fn albedo() -> impl Strategy<Value = [f32; 3]> {
    [0.05f32..1.0, 0.05f32..1.0, 0.05f32..1.0]
}

proptest! {
    #[test]
    fn intensity_is_bounded(c in class(), a in albedo(), r in 0.01f64..200.0, alpha in 0.0f64..0.2) {
        let v = intensity(c, a, r, alpha);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn intensity_falls_with_range(c in class(), a in albedo(), r in 5.0f64..74.0, dr in 0.01f64..1.0, alpha in 0.0f64..0.05) {
        prop_assert!(intensity(c, a, r + dr, alpha) < intensity(c, a, r, alpha));
    }

    #[test]
    fn attenuation_never_brightens(c in class(), a in albedo(), r in 0.5f64..75.0, alpha in 0.0f64..0.05, da in 0.0f64..0.05) {
        prop_assert!(intensity(c, a, r, alpha + da) <= intensity(c, a, r, alpha));
    }

    #[test]
    fn alpha_grows_with_rain(i in 0.0f64..200.0, di in 0.001f64..50.0) {
        prop_assert!(alpha_from_rain_rate(i + di) > alpha_from_rain_rate(i));
        prop_assert!(alpha_from_rain_rate(i) >= 0.0);
    }

    #[test]
    fn solid_angle_is_inverse_square(d in 0.001f64..0.5, r in 0.1f64..500.0, k in 1.0f64..10.0) {
        let ratio = solid_angle(d, r).unwrap() / solid_angle(d, k * r).unwrap();
        prop_assert!((ratio / (k * k) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn volume_rates_are_non_negative(
        k in 0.0f64..1.0, b in 0.01f64..0.5, hg in 0.0f64..0.02, hf in 0.0f64..0.005,
        v in 0.0f64..60.0, wd in 0.0f64..0.2,
    ) {
        let tire = TireSpec { groove_width_fraction: k, contact_width: b, groove_depth: hg, film_depth: hf, ..TireSpec::default() };
        prop_assert!(volume_rate_tread_pickup(&tire, v) >= 0.0);
        prop_assert!(volume_rate_side_wave(&tire, v, wd) >= 0.0);
    }

    #[test]
    fn emission_carry_stays_in_unit_interval(
        rates in proptest::collection::vec((0.0f64..0.05, 0.5f64..1.5, 0.5f64..1.5), 1..40),
    ) {
        let params = SprayParams::default();
        let mut carry = 0.0;
        let mut total = 0u64;
        let mut exact = 0.0;
        for (vr, w, m) in rates {
            total += emission_count(vr, 0.1, w, m, &params, &mut carry);
            exact += w * m * vr * 0.1 * params.emission_scale / params.cluster_volume();
            prop_assert!((0.0..1.0).contains(&carry), "carry {}", carry);
        }
        // Carrying the fraction keeps the running count within one cluster.
        prop_assert!((exact - total as f64).abs() < 1.0 + 1e-6 * exact);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn spray_invariants_hold_for_any_seed(seed in any::<u64>(), rain in 5.0f64..100.0) {
        let cfg = ScenarioConfig::from_value(json!({
            "rng_seed": seed,
            "weather": { "rain_rate_mm_per_h": rain },
        })).unwrap();
        let mut scene = build_scenario(&cfg).unwrap();
        let p = cfg.spray.clone();
        let mut spray = SpraySystem::new(p.clone(), seed);
        for _ in 0..30 {
            let start = scene.clone();
            spray.simulate_interval(&start, 0.1);
            scene.advance(0.1);
            let origin = cfg.lidar.origin(&scene.ego.pose);
            spray.annihilate(&scene, origin);
            prop_assert!(spray.is_conserved());
            for c in spray.clusters() {
                prop_assert!(c.age <= p.max_age_s);
                prop_assert!(c.position.z > 0.0);
                prop_assert!((c.position - origin).norm() <= p.max_range_m);
                prop_assert!(scene.vehicles().all(|v| !v.bounding_box().contains(c.position, 0.0)));
            }
        }
    }
}
