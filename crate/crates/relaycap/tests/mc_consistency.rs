//! Monte Carlo plug-in estimates agree with analytic information values
//! within their own error budget, and validation reports are deterministic.

use ndarray::{Array2, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relaycap::channel::{assemble_joint, VAR_S, VAR_U, VAR_V, VAR_X, VAR_XR, VAR_Y};
use relaycap::mc::{empirical_cmi_detailed, sample_joint, validate_spec};
use relaycap::modulo::{self, BinaryModuloParams};
use relaycap::{DmChannelSpec, InnerDistribution};

fn pmf_row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

fn random_pair(rng: &mut ChaCha8Rng) -> (DmChannelSpec, InnerDistribution) {
    let dim = |rng: &mut ChaCha8Rng| if rng.gen::<bool>() { 2 } else { 3 };
    let (cs, cx, cxr, cy) = (dim(rng), dim(rng), dim(rng), dim(rng));
    let (cu, cv) = (rng.gen_range(1..=2usize), rng.gen_range(1..=2usize));

    let mut kernel = Array4::zeros((cs, cx, cxr, cy));
    for s in 0..cs {
        for x in 0..cx {
            for xr in 0..cxr {
                for (y, p) in pmf_row(rng, cy).into_iter().enumerate() {
                    kernel[[s, x, xr, y]] = p;
                }
            }
        }
    }
    let spec = DmChannelSpec::new(pmf_row(rng, cs), kernel, 0.0, 0.0).unwrap();

    let p_u = pmf_row(rng, cu);
    let mut px = Array2::zeros((cu, cx));
    let mut pxr = Array2::zeros((cu, cxr));
    for u in 0..cu {
        for (x, p) in pmf_row(rng, cx).into_iter().enumerate() {
            px[[u, x]] = p;
        }
        for (xr, p) in pmf_row(rng, cxr).into_iter().enumerate() {
            pxr[[u, xr]] = p;
        }
    }
    let mut pv = Array4::zeros((cs, cxr, cu, cv));
    for s in 0..cs {
        for xr in 0..cxr {
            for u in 0..cu {
                for (v, p) in pmf_row(rng, cv).into_iter().enumerate() {
                    pv[[s, xr, u, v]] = p;
                }
            }
        }
    }
    let inner = InnerDistribution::new(p_u, px, pxr, pv).unwrap();
    (spec, inner)
}

const TERMS: [(&str, &[&str], &[&str], &[&str]); 4] = [
    ("I(X;Y|XR,V,U)", &[VAR_X], &[VAR_Y], &[VAR_XR, VAR_V, VAR_U]),
    ("I(X,XR,V;Y)", &[VAR_X, VAR_XR, VAR_V], &[VAR_Y], &[]),
    ("I(V;S|XR,U)", &[VAR_V], &[VAR_S], &[VAR_XR, VAR_U]),
    ("I(X,XR,V;Y|U)", &[VAR_X, VAR_XR, VAR_V], &[VAR_Y], &[VAR_U]),
];

#[test]
fn plug_in_estimates_sit_inside_their_error_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for instance in 0..10 {
        let (spec, inner) = random_pair(&mut rng);
        let joint = assemble_joint(&spec, &inner).unwrap();
        let batch = sample_joint(&joint, 1_000_000, 1000 + instance).unwrap();
        for (label, a, b, c) in TERMS {
            let analytic = joint.conditional_mutual_information(a, b, c).unwrap();
            let est = empirical_cmi_detailed(&batch, a, b, c).unwrap();
            let budget = est.bias_bound + 4.0 * est.std_proxy + 1e-9;
            assert!(
                (est.value - analytic).abs() <= budget,
                "instance {instance}, {label}: |{} - {analytic}| > {budget}",
                est.value
            );
        }
    }
}

#[test]
fn validation_reports_are_byte_identical_across_thread_counts() {
    let spec = modulo::build_channel(&BinaryModuloParams::new(0.15, 0.15, 0.1).unwrap()).unwrap();
    let inner = InnerDistribution::from_product_inputs(&[0.85, 0.15], &[0.85, 0.15], 2).unwrap();
    let render = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let report = validate_spec(&spec, &inner, 400_000, 9, 0.01).unwrap();
            (format!("{report}"), report)
        })
    };
    let (text_a, report_a) = render(1);
    let (text_b, report_b) = render(8);
    assert_eq!(text_a, text_b);
    assert_eq!(report_a, report_b);
    assert!(report_a.passed, "report:\n{text_a}");

    // Same inputs, same bytes, even in the same pool.
    let (text_c, _) = render(8);
    assert_eq!(text_b, text_c);
}

#[test]
fn reference_channel_joint_information_matches_plug_in() {
    // The state-describing distribution that attains the no-cooperation
    // capacity of the binary modulo-additive channel.
    let spec = modulo::build_channel(&BinaryModuloParams::new(0.15, 0.15, 0.1).unwrap()).unwrap();
    let inner = InnerDistribution::from_product_inputs(&[0.85, 0.15], &[0.85, 0.15], 2).unwrap();
    let joint = assemble_joint(&spec, &inner).unwrap();
    let analytic = joint
        .conditional_mutual_information(&[VAR_X, VAR_XR], &[VAR_Y], &[])
        .unwrap();
    assert!((analytic - 0.417130053875240934).abs() < 1e-12);

    let batch = sample_joint(&joint, 1_000_000, 5).unwrap();
    let est = empirical_cmi_detailed(&batch, &[VAR_X, VAR_XR], &[VAR_Y], &[]).unwrap();
    assert!(
        (est.value - analytic).abs() <= 0.01,
        "plug-in {} vs analytic {analytic}",
        est.value
    );
}
