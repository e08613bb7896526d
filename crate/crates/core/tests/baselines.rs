use almm_core::baselines::{
    unmix_clsu, unmix_fclsu, unmix_sclsu, unmix_ssunsal, unmix_sunsal, DEFAULT_SPARSITY,
};
use almm_core::metrics::{argmax_labels, armse};
use almm_core::model::{HyperspectralImage, SolverConfig};
use almm_core::synthetic::{generate_scene, SceneSpec, SyntheticScene};
use almm_core::PixelStatus;
use proptest::prelude::*;

fn fixture(seed: u64) -> SyntheticScene {
    let spec = SceneSpec { rows: 60, cols: 60, num_bands: 100, rng_seed: seed, ..SceneSpec::default() };
    generate_scene(&spec).unwrap()
}

#[test]
fn sclsu_is_exact_on_noise_free_shared_scale_scene() {
    let spec = SceneSpec {
        rows: 12,
        cols: 12,
        num_bands: 60,
        snr_db: None,
        shared_scale: true,
        rng_seed: 4,
        ..SceneSpec::default()
    };
    let scene = generate_scene(&spec).unwrap();
    let out = unmix_sclsu(&scene.image, &scene.endmembers).unwrap();
    let err = armse(scene.abundances.data(), out.abundances.data()).unwrap();
    assert!(err <= 1e-6, "aRMSE {err}");
}

#[test]
fn ten_seed_ordering_of_baselines() {
    let (mut f, mut c, mut s, mut su) = (0.0, 0.0, 0.0, 0.0);
    let cfg = SolverConfig::default();
    for seed in 0..10 {
        let sc = fixture(seed);
        let (y, a, x) = (&sc.image, &sc.endmembers, sc.abundances.data());
        f += armse(x, unmix_fclsu(y, a).unwrap().abundances.data()).unwrap();
        c += armse(x, unmix_clsu(y, a).unwrap().abundances.data()).unwrap();
        s += armse(x, unmix_sclsu(y, a).unwrap().abundances.data()).unwrap();
        su += armse(x, unmix_sunsal(y, a, DEFAULT_SPARSITY, &cfg).unwrap().abundances.data()).unwrap();
    }
    assert!(f > c && c > s, "FCLSU {f} CLSU {c} SCLSU {s}");
    assert!(su < c, "SUnSAL {su} CLSU {c}");
}

#[test]
fn ssunsal_beats_sclsu_on_default_fixture() {
    let sc = fixture(0);
    let (y, a, x) = (&sc.image, &sc.endmembers, sc.abundances.data());
    let ss = unmix_ssunsal(y, a, DEFAULT_SPARSITY, &SolverConfig::default()).unwrap();
    let s = unmix_sclsu(y, a).unwrap();
    let (e_ss, e_s) = (armse(x, ss.abundances.data()).unwrap(), armse(x, s.abundances.data()).unwrap());
    assert!(e_ss <= e_s, "SSUnSAL {e_ss} SCLSU {e_s}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn baselines_respect_constraints(seed in any::<u64>(), lambda in 0.0f64..0.05) {
        let spec = SceneSpec { rows: 2, cols: 3, num_bands: 12, num_endmembers: 3, smoothness: 1.0, rng_seed: seed, ..SceneSpec::default() };
        let sc = generate_scene(&spec).unwrap();
        let (y, a) = (&sc.image, &sc.endmembers);
        let cfg = SolverConfig::default();
        let runs = [
            (unmix_fclsu(y, a).unwrap(), true),
            (unmix_clsu(y, a).unwrap(), false),
            (unmix_sclsu(y, a).unwrap(), true),
            (unmix_sunsal(y, a, lambda, &cfg).unwrap(), false),
            (unmix_ssunsal(y, a, lambda, &cfg).unwrap(), true),
        ];
        for (out, asc) in &runs {
            let x = out.abundances.data();
            prop_assert!(x.iter().all(|&v| v >= 0.0));
            prop_assert_eq!(out.abundances.asc_normalized(), *asc);
            if *asc {
                for (k, col) in x.column_iter().enumerate() {
                    if out.status[k] != PixelStatus::Degenerate {
                        prop_assert!((col.sum() - 1.0).abs() <= 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn sclsu_argmax_is_scale_invariant(seed in any::<u64>(), c in 0.01f64..100.0) {
        let spec = SceneSpec { rows: 3, cols: 3, num_bands: 16, num_endmembers: 4, smoothness: 1.0, rng_seed: seed, ..SceneSpec::default() };
        let sc = generate_scene(&spec).unwrap();
        let scaled = HyperspectralImage::new(sc.image.data() * c).unwrap();
        let base = unmix_sclsu(&sc.image, &sc.endmembers).unwrap();
        let other = unmix_sclsu(&scaled, &sc.endmembers).unwrap();
        prop_assert_eq!(argmax_labels(base.abundances.data()), argmax_labels(other.abundances.data()));
    }
}
