//! BPSK and Gray-mapped QPSK with unit average symbol energy.

use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum ModulationScheme {
    #[default]
    Bpsk,
    Qpsk,
}

impl ModulationScheme {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            ModulationScheme::Bpsk => 1,
            ModulationScheme::Qpsk => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModulationScheme::Bpsk => "bpsk",
            ModulationScheme::Qpsk => "qpsk",
        }
    }

    /// Minimum Euclidean distance between constellation points.
    pub fn min_distance(self) -> f64 {
        match self {
            ModulationScheme::Bpsk => 2.0,
            ModulationScheme::Qpsk => std::f64::consts::SQRT_2,
        }
    }

    /// All points, indexed by their label read MSB-first.
    pub fn constellation(self) -> Vec<C64> {
        match self {
            ModulationScheme::Bpsk => vec![self.map(&[0]), self.map(&[1])],
            ModulationScheme::Qpsk => (0..4u8).map(|s| self.map(&[(s >> 1) & 1, s & 1])).collect(),
        }
    }

    // 00 -> (1+j), 01 -> (-1+j), 11 -> (-1-j), 10 -> (1-j), all over sqrt(2)
    fn map(self, bits: &[u8]) -> C64 {
        let sign = |b: u8| if b == 0 { 1.0 } else { -1.0 };
        match self {
            ModulationScheme::Bpsk => C64::new(sign(bits[0]), 0.0),
            ModulationScheme::Qpsk => {
                C64::new(sign(bits[1]) * FRAC_1_SQRT_2, sign(bits[0]) * FRAC_1_SQRT_2)
            }
        }
    }

    /// Minimum-distance decision, appending the decided bits to `out`.
    pub fn slice_into(self, z: C64, out: &mut Vec<u8>) {
        match self {
            ModulationScheme::Bpsk => out.push((z.re < 0.0) as u8),
            ModulationScheme::Qpsk => {
                out.push((z.im < 0.0) as u8);
                out.push((z.re < 0.0) as u8);
            }
        }
    }
}

impl std::str::FromStr for ModulationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(ModulationScheme::Bpsk),
            "qpsk" => Ok(ModulationScheme::Qpsk),
            other => Err(Error::InvalidParameter(format!(
                "unknown modulation '{other}'"
            ))),
        }
    }
}

pub fn modulate(bits: &[u8], scheme: ModulationScheme) -> Result<Vec<C64>> {
    let k = scheme.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(Error::DimensionMismatch(format!(
            "{} bits do not fill whole {} symbols",
            bits.len(),
            scheme.name()
        )));
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(Error::InvalidParameter("bits must be 0 or 1".into()));
    }
    Ok(bits.chunks_exact(k).map(|c| scheme.map(c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bpsk_convention() {
        let s = modulate(&[0, 1], ModulationScheme::Bpsk).unwrap();
        assert_eq!(s, vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
    }

    #[test]
    fn qpsk_gray_map() {
        let q = ModulationScheme::Qpsk;
        let s = modulate(&[0, 0, 0, 1, 1, 1, 1, 0], q).unwrap();
        let r = FRAC_1_SQRT_2;
        assert_eq!(
            s,
            vec![
                C64::new(r, r),
                C64::new(-r, r),
                C64::new(-r, -r),
                C64::new(r, -r)
            ]
        );
        // neighbours differ in exactly one bit
        let pts = q.constellation();
        for (i, a) in pts.iter().enumerate() {
            for (j, b) in pts.iter().enumerate() {
                if (a - b).norm() < 1.5 && i != j {
                    assert_eq!((i ^ j).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn unit_energy_and_distance() {
        for scheme in [ModulationScheme::Bpsk, ModulationScheme::Qpsk] {
            let pts = scheme.constellation();
            let energy = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((energy - 1.0).abs() < 1e-15);
            let mut dmin = f64::INFINITY;
            for (i, a) in pts.iter().enumerate() {
                for b in &pts[i + 1..] {
                    dmin = dmin.min((a - b).norm());
                }
            }
            assert!((dmin - scheme.min_distance()).abs() < 1e-15);
        }
    }

    #[test]
    fn slicing_rules() {
        let mut out = Vec::new();
        ModulationScheme::Bpsk.slice_into(C64::new(-0.3, 0.0), &mut out);
        assert_eq!(out, vec![1]);
        out.clear();
        for p in ModulationScheme::Qpsk.constellation() {
            ModulationScheme::Qpsk.slice_into(p, &mut out);
        }
        assert_eq!(out, vec![0, 0, 0, 1, 1, 0, 1, 1]);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            modulate(&[0, 1, 1], ModulationScheme::Qpsk),
            Err(Error::DimensionMismatch(_))
        ));
    }

    proptest! {
        #[test]
        fn noiseless_slicing_recovers_bits(bits in prop::collection::vec(0u8..2, 0..64), qpsk in any::<bool>()) {
            let scheme = if qpsk { ModulationScheme::Qpsk } else { ModulationScheme::Bpsk };
            let bits = &bits[..bits.len() - bits.len() % scheme.bits_per_symbol()];
            let mut out = Vec::new();
            for s in modulate(bits, scheme).unwrap() {
                scheme.slice_into(s, &mut out);
            }
            prop_assert_eq!(out, bits.to_vec());
        }
    }
}
