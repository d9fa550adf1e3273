use serde::Serialize;

use crate::error::{Error, Result};

/// One fiber leg attacked by an entangling cloner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    /// Transmittance in (0, 1].
    pub t: f64,
    /// Excess noise referred to the channel input, in shot-noise units.
    pub eps: f64,
}

impl ChannelParams {
    pub fn new(t: f64, eps: f64) -> Result<Self> {
        let c = Self { t, eps };
        c.validate()?;
        Ok(c)
    }

    /// The identity channel.
    pub fn ideal() -> Self {
        Self { t: 1.0, eps: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t <= 1.0) {
            return Err(Error::domain(format!("transmittance T must lie in (0, 1], got {}", self.t)));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::domain(format!("excess noise eps must be finite and >= 0, got {}", self.eps)));
        }
        Ok(())
    }

    /// Total input-referred noise `chi = eps + (1 - T) / T`.
    pub fn chi(&self) -> f64 {
        self.eps + (1.0 - self.t) / self.t
    }

    /// Variance `W` of the cloner's EPR pair, chosen so that a mode of
    /// variance `V` leaves the channel with `T (V + chi)`. A lossless channel
    /// has no cloner and reports `W = 1`.
    pub fn cloner_variance(&self) -> f64 {
        if self.t >= 1.0 {
            1.0
        } else {
            1.0 + self.t * self.eps / (1.0 - self.t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cloner_variance_examples() {
        assert_eq!(ChannelParams::new(0.3, 0.0).unwrap().cloner_variance(), 1.0);
        assert_relative_eq!(ChannelParams::new(0.5, 0.2).unwrap().cloner_variance(), 1.2, max_relative = 1e-15);
        assert_eq!(ChannelParams::new(1.0, 0.4).unwrap().cloner_variance(), 1.0);
        assert!(ChannelParams::new(1.0 - 1e-9, 0.1).unwrap().cloner_variance() > 1e7);
    }

    #[test]
    fn output_variance_identity() {
        let ch = ChannelParams::new(0.37, 0.15).unwrap();
        for v in [1.0, 4.0, 100.0] {
            let lhs = ch.t * (v + ch.chi());
            let rhs = ch.t * v + (1.0 - ch.t) * ch.cloner_variance();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-14);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ChannelParams::new(0.0, 0.1).is_err());
        assert!(ChannelParams::new(1.1, 0.1).is_err());
        assert!(ChannelParams::new(0.5, -0.1).is_err());
        assert!(ChannelParams::new(f64::NAN, 0.1).is_err());
    }
}
