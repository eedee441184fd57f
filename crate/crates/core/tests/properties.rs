use std::f64::consts::PI;

use proptest::prelude::*;

use laminate_bloch::assembly::Medium;
use laminate_bloch::cli::output::{parse_spectrum_csv, spectrum_csv, SpectrumRow};
use laminate_bloch::materials::{derive_coefficients, CouplingFactor, PhaseInput, SOFC_THICKNESS};
use laminate_bloch::numerics::{PrecisionMode, C64};
use laminate_bloch::spectrum::{
    fold_zone, solve_floquet, Classification, PointFlags, SolveOptions, SpectrumPoint, WideComplex, WideReal,
};
use laminate_bloch::transfer::{CellSpec, LayerSpec};

fn sofc() -> CellSpec {
    let layer =
        |p: PhaseInput| LayerSpec { medium: Medium::Isotropic(derive_coefficients(&p).unwrap()), thickness: SOFC_THICKNESS };
    CellSpec::new(vec![layer(PhaseInput::sofc_phase1()), layer(PhaseInput::sofc_phase2())]).unwrap()
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), -1e3..1e3f64]
}

fn classification() -> impl Strategy<Value = Classification> {
    prop_oneof![
        Just(Classification::ShearPropagating),
        Just(Classification::ShearEvanescent),
        Just(Classification::CompressionalPropagating),
        Just(Classification::CompressionalEvanescent),
        Just(Classification::ThermalDamping),
        Just(Classification::DiffusiveDamping),
        Just(Classification::Mixed),
    ]
}

proptest! {
    #[test]
    fn wide_real_text_round_trips(x in finite(), shift in -5000i64..5000) {
        let w = WideReal::from_f64(x);
        prop_assert_eq!(w.to_string().parse::<WideReal>().unwrap(), w);
        if x != 0.0 {
            // exponents far outside the f64 range survive the text form too
            let big: WideReal = format!("{}e{shift}", 1.0 + x.abs().fract()).parse().unwrap();
            prop_assert_eq!(big.to_string().parse::<WideReal>().unwrap(), big);
        }
    }

    #[test]
    fn fold_zone_lands_in_first_zone(x in -1e6..1e6f64) {
        let y = fold_zone(x);
        prop_assert!(y > -PI && y <= PI);
        let turns = (x - y) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-6);
    }

    #[test]
    fn point_flags_round_trip(bits in 0u8..16) {
        let mut f = PointFlags::empty();
        for (i, fl) in [PointFlags::INHOMOGENEOUS, PointFlags::ESCALATED, PointFlags::SHIFTED, PointFlags::RECIPROCITY].into_iter().enumerate() {
            if bits & (1 << i) != 0 {
                f.insert(fl);
            }
        }
        prop_assert_eq!(f.to_string().parse::<PointFlags>().unwrap(), f);
    }

    #[test]
    fn spectrum_csv_round_trips(
        pts in prop::collection::vec((0.0..1e7f64, 0.0..1f64, finite(), finite(), finite(), finite(), classification(), 1u8..=8), 0..20)
    ) {
        let points: Vec<SpectrumPoint> = pts
            .into_iter()
            .map(|(w, d, lr, li, kr, ki, c, b)| SpectrumPoint {
                omega_star: w,
                delta: d,
                k1_star: 0.0,
                branch: b,
                lambda: WideComplex::from_c64(C64::new(lr, li)),
                k2r_star: kr,
                k2i_star: ki,
                classification: c,
                flags: PointFlags::ESCALATED,
                vector: std::array::from_fn(|_| C64::new(0.0, 0.0)),
            })
            .collect();
        let parsed = parse_spectrum_csv(&spectrum_csv(&points)).unwrap();
        let want: Vec<SpectrumRow> = points.iter().map(SpectrumRow::from).collect();
        prop_assert_eq!(parsed, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn multipliers_pair_reciprocally(omega in 1.0..2e5f64, delta in 0.0..1.0f64, k1 in 0.0..PI) {
        let cell = sofc().with_coupling(CouplingFactor::new(delta).unwrap());
        let opts = SolveOptions { qr_cross_check: false, ..Default::default() };
        let sol = solve_floquet(&cell, k1 / cell.period(), omega, PrecisionMode::Auto, &opts).unwrap();
        prop_assert_eq!(sol.multipliers.len(), 8);
        prop_assert!(sol.log2_det_residual <= 1e-18f64.log2());
        for (i, m) in sol.multipliers.iter().enumerate() {
            let p = &sol.multipliers[m.partner];
            prop_assert_eq!(p.partner, i);
            prop_assert!((m.k2i + p.k2i).abs() <= 1e-9 * (1.0 + m.k2i.abs()));
            let ln = m.lambda.ln();
            let lp = p.lambda.ln();
            prop_assert!((ln.re + lp.re).abs() <= 1e-9 * (1.0 + ln.re.abs()));
        }
    }
}
