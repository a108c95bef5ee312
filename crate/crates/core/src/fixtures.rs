//! Small built-in urns used by the tests, the CLI and the acceptance suite.

use crate::models::freezing::{freezing_urn_spec, FreezingParams};
use crate::urn::{Outcome, UrnSpec};

/// Classical two-colour Pólya urn: draw a ball, return it with one more of
/// the same colour. `A = I`, so the dominant eigenvalue is not simple.
pub fn polya() -> UrnSpec {
    UrnSpec {
        name: "polya".into(),
        q: 2,
        activities: vec![1.0, 1.0],
        initial: vec![1.0, 1.0],
        replacements: vec![
            vec![Outcome::new(1.0, vec![1.0, 0.0])],
            vec![Outcome::new(1.0, vec![0.0, 1.0])],
        ],
    }
}

/// Balanced three-colour urn with a strictly small complex spectrum.
///
/// Drawing type `i` adds one ball of type `i+1` (prob 1/2), `i+2` (prob 1/4)
/// or `i` (prob 1/4), indices mod 3. `A` is circulant with eigenvalues
/// `1` and `-1/8 ± i sqrt(3)/8`.
pub fn cyclic3() -> UrnSpec {
    let unit = |j: usize| {
        let mut d = vec![0.0; 3];
        d[j % 3] = 1.0;
        d
    };
    UrnSpec {
        name: "cyclic3".into(),
        q: 3,
        activities: vec![1.0; 3],
        initial: vec![1.0, 0.0, 0.0],
        replacements: (0..3)
            .map(|i| {
                vec![
                    Outcome::new(0.5, unit(i + 1)),
                    Outcome::new(0.25, unit(i + 2)),
                    Outcome::new(0.25, unit(i)),
                ]
            })
            .collect(),
    }
}

/// Balanced two-colour urn with eigenvalues `{1, 1/2}`: the critical case
/// `lambda_1 = 2 Re lambda_2`.
pub fn critical2() -> UrnSpec {
    UrnSpec {
        name: "critical2".into(),
        q: 2,
        activities: vec![1.0, 1.0],
        initial: vec![1.0, 1.0],
        replacements: vec![
            vec![
                Outcome::new(0.75, vec![1.0, 0.0]),
                Outcome::new(0.25, vec![0.0, 1.0]),
            ],
            vec![
                Outcome::new(0.75, vec![0.0, 1.0]),
                Outcome::new(0.25, vec![1.0, 0.0]),
            ],
        ],
    }
}

/// Freezing-model grid used for spectral checks.
pub const FREEZING_GRID_K: [usize; 3] = [1, 2, 3];
pub const FREEZING_GRID_P: [f64; 3] = [0.6, 0.75, 0.9];

pub fn freezing(k: usize, p: f64) -> UrnSpec {
    freezing_urn_spec(&FreezingParams::new(k, p).expect("valid freezing parameters"))
        .expect("freezing spec builds")
}

/// Every built-in spec: the three fixtures plus the freezing grid.
pub fn builtin_specs() -> Vec<UrnSpec> {
    let mut specs = vec![polya(), cyclic3(), critical2()];
    for k in FREEZING_GRID_K {
        for p in FREEZING_GRID_P {
            specs.push(freezing(k, p));
        }
    }
    specs
}

/// Look up a built-in spec by the name it carries.
pub fn builtin_by_name(name: &str) -> Option<UrnSpec> {
    builtin_specs().into_iter().find(|s| s.name == name)
}
