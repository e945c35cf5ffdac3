use std::fmt;
use std::str::FromStr;

use super::{Axis, Column, Param, SweepSpec};
use crate::{Error, Result};

/// Ready-made grids for the three standard studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `eta` over `(alpha, SNR, b)` at M = 100, K/M = 0.1, K/T = 0.01, minimal training.
    Fig4,
    /// `eta` over `(K/M, M, b)` at SNR 0 dB, alpha = 1e4, K/T = 0.01, minimal training.
    Fig5,
    /// Training length `tau/T` over `(K/T, SNR, b)` at M = 100, K/M = 0.1, alpha = 1e4.
    Fig6,
}

/// Training fractions swept by [`Preset::Fig6`]; 0 stands for minimal training `tau = K`.
pub const FIG6_TAU_OVER_T: [f64; 10] = [0.0, 0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.15, 0.2, 0.3];

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
        }
    }

    /// Replaces the grid of `spec`, keeping receivers, trials, seed, mode and models.
    pub fn apply(self, mut spec: SweepSpec) -> SweepSpec {
        let b_axis = Axis::range(Param::B, 1, 12);
        let (axes, fixed) = match self {
            Preset::Fig4 => (
                vec![
                    Axis::new(Param::Alpha, [1e2, 1e3, 1e4, 1e5]),
                    Axis::new(Param::SnrDb, [-10.0, 0.0, 10.0]),
                    b_axis,
                ],
                vec![
                    (Param::M, 100.0),
                    (Param::KOverM, 0.1),
                    (Param::KOverT, 0.01),
                    (Param::TauOverT, 0.0),
                ],
            ),
            Preset::Fig5 => (
                vec![
                    Axis::new(Param::KOverM, [0.025, 0.05, 0.1, 0.2]),
                    Axis::new(Param::M, [50.0, 100.0, 200.0, 400.0]),
                    b_axis,
                ],
                vec![
                    (Param::SnrDb, 0.0),
                    (Param::Alpha, 1e4),
                    (Param::KOverT, 0.01),
                    (Param::TauOverT, 0.0),
                ],
            ),
            Preset::Fig6 => (
                vec![
                    Axis::new(Param::KOverT, [0.005, 0.01, 0.02]),
                    Axis::new(Param::SnrDb, [-10.0, 0.0, 10.0]),
                    b_axis,
                    Axis::new(Param::TauOverT, FIG6_TAU_OVER_T),
                ],
                vec![(Param::M, 100.0), (Param::KOverM, 0.1), (Param::Alpha, 1e4)],
            ),
        };
        spec.axes = axes;
        spec.fixed = fixed;
        spec
    }

    /// Grouping used for the companion optimum table.
    pub fn group_keys(self) -> Vec<Column> {
        match self {
            Preset::Fig4 => vec![Column::Receiver, Column::Alpha, Column::SnrDb],
            Preset::Fig5 => vec![Column::Receiver, Column::KOverM, Column::M],
            Preset::Fig6 => vec![Column::Receiver, Column::KOverT, Column::SnrDb, Column::B],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    /// Accepts `fig4`/`4` style names.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().trim_start_matches("fig") {
            "4" => Ok(Preset::Fig4),
            "5" => Ok(Preset::Fig5),
            "6" => Ok(Preset::Fig6),
            _ => Err(Error::invalid(format!(
                "unknown preset `{s}` (expected fig4, fig5 or fig6)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::resolve_point;
    use crate::uplink::Backoff;

    #[test]
    fn fig4_grid_resolves_to_the_reference_system() {
        let spec = Preset::Fig4.apply(SweepSpec::new(Backoff::Fixed(8.0)));
        spec.validate().unwrap();
        assert_eq!(spec.grid_len(), 4 * 3 * 12);
        for v in spec.grid() {
            let p = resolve_point(&v).unwrap();
            assert_eq!((p.m, p.k, p.t, p.tau), (100, 10, 1000, 10));
        }
    }

    #[test]
    fn fig5_and_fig6_resolve() {
        for preset in [Preset::Fig5, Preset::Fig6] {
            let spec = preset.apply(SweepSpec::new(Backoff::Fixed(8.0)));
            spec.validate().unwrap();
            assert!(spec.grid().iter().all(|v| resolve_point(v).is_ok()));
        }
    }

    #[test]
    fn names_parse() {
        assert_eq!("fig5".parse::<Preset>().unwrap(), Preset::Fig5);
        assert_eq!("6".parse::<Preset>().unwrap(), Preset::Fig6);
        assert!("fig7".parse::<Preset>().is_err());
    }
}
