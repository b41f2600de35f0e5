//! Named problem descriptions. Config keys override preset values.

use crate::config::ProblemConfig;
use crate::spec::{MaskSpec, NonlinearityConfig, StateSpec};

pub const NAMES: &[&str] = &[
    "eigen-doubling",
    "semilinear",
    "null-control",
    "sign-flipped",
    "example-2d",
    "eigen-hold",
    "hat-hold",
];

fn sine() -> StateSpec {
    StateSpec::Eigenfunction { k: 1 }
}

fn scaled(factor: f64, inner: StateSpec) -> StateSpec {
    StateSpec::Scaled {
        factor,
        inner: Box::new(inner),
    }
}

fn one_d(y0: StateSpec, yd: StateSpec, f: NonlinearityConfig, epsilon: f64) -> ProblemConfig {
    ProblemConfig {
        d: Some(1),
        n: Some(199),
        y0: Some(y0),
        yd: Some(yd),
        mask: Some(MaskSpec::Full),
        nonlinearity: Some(f),
        epsilon: Some(epsilon),
        ..Default::default()
    }
}

pub fn lookup(name: &str) -> Option<ProblemConfig> {
    Some(match name {
        // y0 = sin πx, y^d = 2 sin πx, f = 0
        "eigen-doubling" => one_d(sine(), scaled(2.0, sine()), NonlinearityConfig::Zero, 0.05),
        "semilinear" => one_d(
            sine(),
            scaled(2.0, sine()),
            NonlinearityConfig::Sine { amplitude: 0.5 },
            0.05,
        ),
        "null-control" => one_d(sine(), sine(), NonlinearityConfig::Zero, 0.05),
        "sign-flipped" => one_d(sine(), scaled(-1.0, sine()), NonlinearityConfig::Zero, 0.05),
        // y0 = (x1 − x2) 1_O, y^d = 1.5 y0, O = (0.25, 0.75)², f = 0.5 sin y
        "example-2d" => {
            let region = MaskSpec::Box {
                lower: vec![0.25, 0.25],
                upper: vec![0.75, 0.75],
            };
            let y0 = StateSpec::Masked {
                inner: Box::new(StateSpec::LinearDifference),
                mask: region.clone(),
            };
            ProblemConfig {
                d: Some(2),
                n: Some(49),
                yd: Some(scaled(1.5, y0.clone())),
                y0: Some(y0),
                mask: Some(region),
                nonlinearity: Some(NonlinearityConfig::Sine { amplitude: 0.5 }),
                epsilon: Some(0.05),
                shrink: Some(0.25),
                ..Default::default()
            }
        }
        // y0 = 0.5 sin πx held at y^d = sin πx under f = 0.3 y
        "eigen-hold" => one_d(
            scaled(0.5, sine()),
            sine(),
            NonlinearityConfig::Linear { c: 0.3 },
            0.05,
        ),
        // smoothed hold of a tent target
        "hat-hold" => ProblemConfig {
            n: Some(99),
            ..one_d(
                scaled(0.5, sine()),
                StateSpec::Hat {
                    center: 0.5,
                    half_width: 0.25,
                    height: 1.0,
                },
                NonlinearityConfig::Linear { c: 0.3 },
                0.1,
            )
        },
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for name in NAMES {
            assert!(lookup(name).is_some(), "{name}");
        }
        assert!(lookup("nope").is_none());
    }
}
