//! Named families and initial data.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use sublev_core::functions::{DriftExampleDatum, DynFunction, Gaussian, PlateauBump, WindowedHarmonic};
use sublev_core::triplets::{CharacteristicFamily, Label, LevyTriplet};

pub const FAMILIES: &[(&str, &str)] = &[
    ("drift-uncertainty", "pure drift b in [-1, 1] on 21 equispaced values"),
    ("g-heat", "diffusion Q in {0.25, 1}"),
    ("remark-lk85", "jumps (delta_k + delta_-k)/2 for k = 1..size (size defaults to 10)"),
    ("poisson-uncertain", "unit jumps with intensity in {0.5, 1, 2}"),
    ("brownian", "single member with Q = 1"),
];

pub const DATA: &[(&str, &str)] = &[
    ("gaussian", "exp(-x^2/2)"),
    ("bump", "plateau of height 1 on |x| <= 1, zero for |x| >= 2"),
    ("paper-example-dynkin2", "piecewise datum with sup_{|s|<=t} f(s) = 1 on [1/2, 1] and t on [1, 2]"),
    ("sin-window", "sin(x) exp(-x^2/8)"),
];

const DEFAULT_REMARK_SIZE: usize = 10;

fn one_d(b: f64, q: f64, atoms: &[(f64, f64)]) -> LevyTriplet {
    LevyTriplet::one_d(0.0, b, q, atoms).expect("builtin triplets are valid")
}

fn family(name: &str, labels: Vec<String>, trips: Vec<LevyTriplet>) -> CharacteristicFamily {
    CharacteristicFamily::invariant(labels.into_iter().map(Label).collect(), trips)
        .expect("builtin families are valid")
        .with_name(name)
}

/// `None` for unknown names.
pub fn builtin_family(name: &str, size: Option<usize>) -> Option<CharacteristicFamily> {
    let fam = match name {
        "drift-uncertainty" => {
            let bs: Vec<f64> = (0..21).map(|k| -1.0 + 0.1 * k as f64).collect();
            family(name, bs.iter().map(|b| format!("b={b:.1}")).collect(), bs.iter().map(|&b| one_d(b, 0.0, &[])).collect())
        }
        "g-heat" => family(
            name,
            vec!["Q=0.25".into(), "Q=1".into()],
            vec![one_d(0.0, 0.25, &[]), one_d(0.0, 1.0, &[])],
        ),
        "remark-lk85" => {
            let n = size.unwrap_or(DEFAULT_REMARK_SIZE);
            if n == 0 {
                return None;
            }
            family(
                name,
                (1..=n).map(|k| format!("theta={k}")).collect(),
                (1..=n).map(|k| one_d(0.0, 0.0, &[(k as f64, 0.5), (-(k as f64), 0.5)])).collect(),
            )
        }
        "poisson-uncertain" => {
            let ls = [0.5, 1.0, 2.0];
            family(name, ls.iter().map(|l| format!("lambda={l}")).collect(), ls.iter().map(|&l| one_d(0.0, 0.0, &[(1.0, l)])).collect())
        }
        "brownian" => family(name, vec!["Q=1".into()], vec![one_d(0.0, 1.0, &[])]),
        _ => return None,
    };
    Some(fam)
}

pub fn builtin_datum(name: &str) -> Option<DynFunction> {
    Some(match name {
        "gaussian" => Arc::new(Gaussian::one_d(0.0, 1.0, 1.0)),
        "bump" => Arc::new(PlateauBump::new(1, &[0.0], 1.0, 1.0)),
        "paper-example-dynkin2" => Arc::new(DriftExampleDatum),
        "sin-window" => Arc::new(WindowedHarmonic { dim: 1, xi: [1.0, 0.0], phase: -FRAC_PI_2, width: 2.0 }),
        _ => return None,
    })
}

/// Rows `(kind, name, description)` whose name contains `filter`.
pub fn table(filter: &str) -> Vec<(&'static str, &'static str, &'static str)> {
    FAMILIES
        .iter()
        .map(|(n, d)| ("family", *n, *d))
        .chain(DATA.iter().map(|(n, d)| ("datum", *n, *d)))
        .filter(|(_, n, _)| n.contains(filter))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use sublev_core::generator::{apply_generator, TestFunction};

    #[test]
    fn every_listed_name_resolves() {
        for (name, _) in FAMILIES {
            let f = builtin_family(name, None).unwrap();
            assert_eq!(f.name(), *name);
            assert!(f.is_conservative() && f.is_translation_invariant());
        }
        for (name, _) in DATA {
            assert!(builtin_datum(name).is_some());
        }
        assert!(builtin_family("nope", None).is_none());
        assert!(builtin_datum("nope").is_none());
        assert_eq!(table("").len(), FAMILIES.len() + DATA.len());
        assert_eq!(table("heat").len(), 1);
    }

    #[test]
    fn builtin_triplets_match_their_descriptions() {
        let d = builtin_family("drift-uncertainty", None).unwrap();
        let drifts: Vec<f64> = d.invariant_triplets().unwrap().iter().map(|t| t.drift()[0]).collect();
        assert_eq!(drifts.len(), 21);
        assert!((drifts[0] + 1.0).abs() < 1e-15 && (drifts[20] - 1.0).abs() < 1e-15 && drifts[10].abs() < 1e-15);

        let g = builtin_family("g-heat", None).unwrap();
        let qs: Vec<f64> = g.invariant_triplets().unwrap().iter().map(|t| t.diffusion()[0]).collect();
        assert_eq!(qs, vec![0.25, 1.0]);

        let r = builtin_family("remark-lk85", Some(3)).unwrap();
        let t = &r.invariant_triplets().unwrap()[2];
        assert!((t.symbol(&[1.0]).re - (1.0 - 3f64.cos())).abs() < 1e-14);

        let p = builtin_family("poisson-uncertain", None).unwrap();
        let f = builtin_datum("gaussian").unwrap();
        let v = apply_generator(&p.invariant_triplets().unwrap()[2], TestFunction::ClosedForm(f.as_ref()), &[0.3]).unwrap();
        let expect = 2.0 * (f.value(&[1.3]) - f.value(&[0.3]));
        assert!((v - expect).abs() < 1e-15);
    }

    #[test]
    fn dynkin2_datum_has_documented_window_maxima() {
        let f = builtin_datum("paper-example-dynkin2").unwrap();
        let sup = |t: f64| (0..=4000).map(|k| f.value(&[-t + 2.0 * t * k as f64 / 4000.0])).fold(f64::MIN, f64::max);
        for (t, want) in [(0.5, 1.0), (1.0, 1.0), (1.5, 1.5), (2.0, 2.0)] {
            assert!((sup(t) - want).abs() < 1e-9, "{t}");
        }
    }
}
