//! Per-iteration parameters `(eta_k, b_k, lambda_k)` and, for the
//! federation, `s_k`.
//!
//! Presets use `b = ceil(sqrt(n))` for non-square `n`. With `lambda = b/(2n)`
//! the stepsize constant is `M = 8n/b^2 <= 8`, so the preset stepsize
//! `1/((1+sqrt 8) L)` never exceeds the admissible cap.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// `1 + sqrt(8)`: the stepsize denominator shared by every preset.
pub const ONE_PLUS_SQRT8: f64 = 1.0 + 2.828_427_124_746_190_1;

/// Smallest integer `r` with `r*r >= n`.
pub fn ceil_sqrt(n: usize) -> usize {
    let mut r = libm::sqrt(n as f64) as usize;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}

/// Smallest integer `>= x`, for positive finite `x`.
fn ceil_pos(x: f64) -> usize {
    libm::ceil(x) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `b_0 = n`, then `b_k = ceil(sqrt n)`.
    Cor1,
    /// `b_k = ceil(sqrt n)` for every `k`; never a full batch.
    Cor2,
    /// `b_0 = min(sqrt(n G_0 / eps^2), n)`, then `b_k = ceil(sqrt n)`.
    Cor3,
    Custom,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Cor1 => "cor1",
            Preset::Cor2 => "cor2",
            Preset::Cor3 => "cor3",
            Preset::Custom => "custom",
        }
    }
}

impl core::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cor1" | "cor1d" => Ok(Preset::Cor1),
            "cor2" | "cor2d" => Ok(Preset::Cor2),
            "cor3" | "cor3d" => Ok(Preset::Cor3),
            "custom" => Ok(Preset::Custom),
            other => Err(Error::invalid(format!("unknown preset `{other}`"))),
        }
    }
}

/// Optional inputs to a preset.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PresetExtras {
    /// Target accuracy, required by `cor3`.
    pub epsilon: Option<f64>,
    /// `G_0` (or an upper bound such as `2 L Delta^_0`), required by `cor3`.
    pub g0: Option<f64>,
    /// Replaces the stepsize outright. Marks the schedule non-theoretical.
    pub stepsize_override: Option<f64>,
    /// Multiplies the theoretical stepsize. Marks the schedule non-theoretical
    /// unless it is exactly 1.
    pub scale: Option<f64>,
}

fn preset_stepsize(l: f64, extras: &PresetExtras) -> Result<(f64, bool)> {
    let base = 1.0 / (ONE_PLUS_SQRT8 * l);
    match (extras.stepsize_override, extras.scale) {
        (Some(_), Some(_)) => Err(Error::invalid("stepsize override and scale are exclusive")),
        (Some(eta), None) => {
            if eta >= 0.0 && eta.is_finite() {
                Ok((eta, false))
            } else {
                Err(Error::invalid("stepsize override must be finite and >= 0"))
            }
        }
        (None, Some(scale)) => {
            if scale > 0.0 && scale.is_finite() {
                Ok((scale * base, scale == 1.0))
            } else {
                Err(Error::invalid("stepsize scale must be finite and > 0"))
            }
        }
        (None, None) => Ok((base, true)),
    }
}

fn cor3_extras(extras: &PresetExtras) -> Result<(f64, f64)> {
    match (extras.epsilon, extras.g0) {
        (Some(eps), Some(g0)) if eps > 0.0 && g0 >= 0.0 => Ok((eps, g0)),
        (Some(_), Some(_)) => Err(Error::invalid("cor3 needs epsilon > 0 and G0 >= 0")),
        _ => Err(Error::invalid("cor3 requires epsilon and G0")),
    }
}

/// Schedule of the sequential ZeroSARAH estimator.
///
/// Iteration 0 uses `(eta0, batch0, lambda = 1)`; every later iteration uses
/// `(eta, batch, lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSchedule {
    pub preset: Preset,
    pub n: usize,
    pub eta0: f64,
    pub eta: f64,
    pub batch0: usize,
    pub batch: usize,
    pub lambda: f64,
    /// True when the stepsize is the preset value and the cap is enforced.
    pub theoretical: bool,
    /// Smoothness constant the stepsize was derived from, if any.
    pub smoothness: Option<f64>,
    pub notes: Vec<String>,
}

impl ParamSchedule {
    pub fn preset(preset: Preset, n: usize, l: f64, extras: PresetExtras) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n must be >= 1"));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::invalid("smoothness constant must be finite and > 0"));
        }
        let (eta, theoretical) = preset_stepsize(l, &extras)?;
        let batch = ceil_sqrt(n);
        let mut notes = Vec::new();
        let batch0 = match preset {
            Preset::Cor1 => n,
            Preset::Cor2 => batch,
            Preset::Cor3 => {
                let (eps, g0) = cor3_extras(&extras)?;
                let raw = libm::sqrt(n as f64 * g0 / (eps * eps));
                if raw >= n as f64 || !raw.is_finite() {
                    if raw > n as f64 {
                        notes.push(format!("b0 = {raw:.3} clamped to n = {n}"));
                    }
                    n
                } else {
                    ceil_pos(raw).clamp(1, n)
                }
            }
            Preset::Custom => return Err(Error::invalid("use ParamSchedule::custom for custom schedules")),
        };
        let schedule = ParamSchedule {
            preset,
            n,
            eta0: eta,
            eta,
            batch0,
            batch,
            lambda: batch as f64 / (2.0 * n as f64),
            theoretical,
            smoothness: Some(l),
            notes,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    /// User schedule: constant `eta`, `b_0`, then constant `(b, lambda)`.
    pub fn custom(n: usize, eta: f64, batch0: usize, batch: usize, lambda: f64) -> Result<Self> {
        let schedule = ParamSchedule {
            preset: Preset::Custom,
            n,
            eta0: eta,
            eta,
            batch0,
            batch,
            lambda,
            theoretical: false,
            smoothness: None,
            notes: Vec::new(),
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        for b in [self.batch0, self.batch] {
            if b == 0 || b > self.n {
                return Err(Error::invalid(format!("batch size {b} outside [1, {}]", self.n)));
            }
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::invalid("lambda must lie in (0, 1]"));
        }
        for eta in [self.eta0, self.eta] {
            if !(eta >= 0.0 && eta.is_finite()) {
                return Err(Error::invalid("stepsize must be finite and >= 0"));
            }
        }
        if self.theoretical {
            let l = self.smoothness.ok_or_else(|| Error::invalid("theoretical schedule without L"))?;
            let cap = self.stepsize_cap(l);
            if self.eta0.max(self.eta) > cap * (1.0 + 1e-12) {
                return Err(Error::invalid(format!("stepsize {} exceeds the admissible cap {cap}", self.eta)));
            }
        }
        Ok(())
    }

    pub fn eta(&self, k: u64) -> f64 {
        if k == 0 {
            self.eta0
        } else {
            self.eta
        }
    }

    pub fn batch(&self, k: u64) -> usize {
        if k == 0 {
            self.batch0
        } else {
            self.batch
        }
    }

    pub fn lambda(&self, k: u64) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.lambda
        }
    }

    /// `M_k = 2/(lambda_k b_k) + 8 lambda_k n^2 / b_k^3` for `k >= 1`.
    pub fn m_constant(&self) -> f64 {
        let b = self.batch as f64;
        let n = self.n as f64;
        2.0 / (self.lambda * b) + 8.0 * self.lambda * n * n / (b * b * b)
    }

    /// `1 / (L (1 + sqrt(M_{k+1})))`; the same for every `k` here.
    pub fn stepsize_cap(&self, l: f64) -> f64 {
        1.0 / (l * (1.0 + libm::sqrt(self.m_constant())))
    }
}

/// SARAH epoch parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SarahParams {
    /// Inner steps per epoch.
    pub epoch_len: usize,
    pub batch: usize,
    pub eta: f64,
}

impl SarahParams {
    /// `l = b = ceil(sqrt n)`.
    pub fn standard(n: usize, eta: f64) -> Self {
        SarahParams { epoch_len: ceil_sqrt(n), batch: ceil_sqrt(n).max(1), eta }
    }
}

/// Schedule of D-ZeroSARAH: `(eta_k, s_k, b_k, lambda_k)`, with iteration 0
/// using `(eta0, s0, b0, lambda = 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistSchedule {
    pub preset: Preset,
    pub n_clients: usize,
    pub m: usize,
    pub eta0: f64,
    pub eta: f64,
    pub clients0: usize,
    pub batch0: usize,
    pub clients: usize,
    pub batch: usize,
    pub lambda: f64,
    pub theoretical: bool,
    pub smoothness: Option<f64>,
    pub notes: Vec<String>,
}

impl DistSchedule {
    pub fn preset(preset: Preset, n_clients: usize, m: usize, l: f64, extras: PresetExtras) -> Result<Self> {
        if n_clients == 0 || m == 0 {
            return Err(Error::invalid("n and m must be >= 1"));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::invalid("smoothness constant must be finite and > 0"));
        }
        let (eta, theoretical) = preset_stepsize(l, &extras)?;
        let clients = ceil_sqrt(n_clients);
        let batch = ceil_sqrt(m);
        let mut notes = Vec::new();
        let (clients0, batch0) = match preset {
            Preset::Cor1 => (n_clients, m),
            Preset::Cor2 => (clients, batch),
            Preset::Cor3 => {
                let (eps, g0) = cor3_extras(&extras)?;
                // b0 = m, s0 = min(sqrt(n G0' / (m eps^2)), n)
                let raw = libm::sqrt(n_clients as f64 * g0 / (m as f64 * eps * eps));
                let s0 = if raw >= n_clients as f64 || !raw.is_finite() {
                    if raw > n_clients as f64 {
                        notes.push(format!("s0 = {raw:.3} clamped to n = {n_clients}"));
                    }
                    n_clients
                } else {
                    ceil_pos(raw).clamp(1, n_clients)
                };
                (s0, m)
            }
            Preset::Custom => return Err(Error::invalid("use DistSchedule::custom for custom schedules")),
        };
        let schedule = DistSchedule {
            preset,
            n_clients,
            m,
            eta0: eta,
            eta,
            clients0,
            batch0,
            clients,
            batch,
            lambda: (clients * batch) as f64 / (2.0 * (n_clients * m) as f64),
            theoretical,
            smoothness: Some(l),
            notes,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        n_clients: usize,
        m: usize,
        eta: f64,
        clients0: usize,
        batch0: usize,
        clients: usize,
        batch: usize,
        lambda: f64,
    ) -> Result<Self> {
        let schedule = DistSchedule {
            preset: Preset::Custom,
            n_clients,
            m,
            eta0: eta,
            eta,
            clients0,
            batch0,
            clients,
            batch,
            lambda,
            theoretical: false,
            smoothness: None,
            notes: Vec::new(),
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        for s in [self.clients0, self.clients] {
            if s == 0 || s > self.n_clients {
                return Err(Error::invalid(format!("client sample {s} outside [1, {}]", self.n_clients)));
            }
        }
        for b in [self.batch0, self.batch] {
            if b == 0 || b > self.m {
                return Err(Error::invalid(format!("batch size {b} outside [1, {}]", self.m)));
            }
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::invalid("lambda must lie in (0, 1]"));
        }
        for eta in [self.eta0, self.eta] {
            if !(eta >= 0.0 && eta.is_finite()) {
                return Err(Error::invalid("stepsize must be finite and >= 0"));
            }
        }
        if self.theoretical {
            let l = self.smoothness.ok_or_else(|| Error::invalid("theoretical schedule without L"))?;
            if self.eta0.max(self.eta) > self.stepsize_cap(l) * (1.0 + 1e-12) {
                return Err(Error::invalid("stepsize exceeds the admissible cap"));
            }
        }
        Ok(())
    }

    pub fn eta(&self, k: u64) -> f64 {
        if k == 0 {
            self.eta0
        } else {
            self.eta
        }
    }

    pub fn clients(&self, k: u64) -> usize {
        if k == 0 {
            self.clients0
        } else {
            self.clients
        }
    }

    pub fn batch(&self, k: u64) -> usize {
        if k == 0 {
            self.batch0
        } else {
            self.batch
        }
    }

    pub fn lambda(&self, k: u64) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.lambda
        }
    }

    /// `W_k = 2/(lambda s b) + 8 lambda n^2 m^2 / (s^3 b^3)` for `k >= 1`.
    pub fn w_constant(&self) -> f64 {
        let sb = (self.clients * self.batch) as f64;
        let nm = (self.n_clients * self.m) as f64;
        2.0 / (self.lambda * sb) + 8.0 * self.lambda * nm * nm / (sb * sb * sb)
    }

    pub fn stepsize_cap(&self, l: f64) -> f64 {
        1.0 / (l * (1.0 + libm::sqrt(self.w_constant())))
    }
}

/// Distributed SARAH parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsarahParams {
    /// A full-participation round happens when `k mod epoch_len == 0`.
    pub epoch_len: usize,
    pub clients: usize,
    pub batch: usize,
    pub eta: f64,
}

impl DsarahParams {
    /// `l = ceil(sqrt(n m))`, `s = ceil(sqrt n)`, `b = ceil(sqrt m)`.
    pub fn standard(n_clients: usize, m: usize, eta: f64) -> Self {
        DsarahParams {
            epoch_len: ceil_sqrt(n_clients * m).max(1),
            clients: ceil_sqrt(n_clients),
            batch: ceil_sqrt(m),
            eta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_sqrt_exact() {
        let cases = [(1, 1), (2, 2), (4, 2), (5, 3), (99, 10), (100, 10), (101, 11), (1385, 38), (400, 20)];
        for (n, want) in cases {
            assert_eq!(ceil_sqrt(n), want, "n = {n}");
        }
    }

    #[test]
    fn cor1_n100() {
        let s = ParamSchedule::preset(Preset::Cor1, 100, 2.0, PresetExtras::default()).unwrap();
        assert_eq!((s.batch0, s.batch), (100, 10));
        assert_eq!(s.lambda, 0.05);
        assert!((s.m_constant() - 8.0).abs() < 1e-12);
        assert_eq!(s.eta, 1.0 / (ONE_PLUS_SQRT8 * 2.0));
        assert_eq!(s.lambda(0), 1.0);
    }

    #[test]
    fn cor2_n100_stepsize() {
        let s = ParamSchedule::preset(Preset::Cor2, 100, 1.0, PresetExtras::default()).unwrap();
        assert_eq!(s.batch0, 10);
        assert!((s.eta - 0.2612).abs() < 5e-5);
        assert!(s.theoretical);
    }

    #[test]
    fn cor3_formula() {
        let extras = PresetExtras { epsilon: Some(0.5), g0: Some(25.0), ..Default::default() };
        let s = ParamSchedule::preset(Preset::Cor3, 100, 1.0, extras).unwrap();
        assert_eq!(s.batch0, 100);
        let small = PresetExtras { epsilon: Some(10.0), g0: Some(1.0), ..Default::default() };
        // sqrt(100 * 1 / 100) = 1
        assert_eq!(ParamSchedule::preset(Preset::Cor3, 100, 1.0, small).unwrap().batch0, 1);
        assert!(ParamSchedule::preset(Preset::Cor3, 100, 1.0, PresetExtras::default()).is_err());
    }

    #[test]
    fn cor3_clamps_with_note() {
        let extras = PresetExtras { epsilon: Some(0.1), g0: Some(100.0), ..Default::default() };
        let s = ParamSchedule::preset(Preset::Cor3, 100, 1.0, extras).unwrap();
        assert_eq!(s.batch0, 100);
        assert_eq!(s.notes.len(), 1);
    }

    #[test]
    fn non_square_n_respects_cap() {
        for n in [2, 3, 7, 50, 1385, 4177] {
            let s = ParamSchedule::preset(Preset::Cor2, n, 3.0, PresetExtras::default()).unwrap();
            assert!(s.m_constant() <= 8.0 + 1e-12);
            assert!(s.eta <= s.stepsize_cap(3.0) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn overrides_are_flagged() {
        let over = PresetExtras { stepsize_override: Some(0.1), ..Default::default() };
        let s = ParamSchedule::preset(Preset::Cor2, 100, 1.0, over).unwrap();
        assert!(!s.theoretical);
        assert_eq!(s.eta, 0.1);
        let scaled = PresetExtras { scale: Some(3.0), ..Default::default() };
        let s = ParamSchedule::preset(Preset::Cor2, 100, 1.0, scaled).unwrap();
        assert!(!s.theoretical);
        assert!((s.eta - 3.0 / ONE_PLUS_SQRT8).abs() < 1e-15);
    }

    #[test]
    fn bad_smoothness_rejected() {
        assert!(ParamSchedule::preset(Preset::Cor1, 10, 0.0, PresetExtras::default()).is_err());
        assert!(ParamSchedule::preset(Preset::Cor1, 10, -1.0, PresetExtras::default()).is_err());
    }

    #[test]
    fn custom_validation() {
        assert!(ParamSchedule::custom(4, 0.1, 2, 2, 0.0).is_err());
        assert!(ParamSchedule::custom(4, 0.1, 5, 2, 0.5).is_err());
        assert!(ParamSchedule::custom(4, 0.1, 4, 2, 1.0).is_ok());
    }

    #[test]
    fn cor1d_n16_m64() {
        let s = DistSchedule::preset(Preset::Cor1, 16, 64, 1.0, PresetExtras::default()).unwrap();
        assert_eq!((s.clients0, s.batch0, s.clients, s.batch), (16, 64, 4, 8));
        assert_eq!(s.lambda, 1.0 / 64.0);
        assert!((s.w_constant() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn cor2d_n4_m9() {
        let s = DistSchedule::preset(Preset::Cor2, 4, 9, 1.0, PresetExtras::default()).unwrap();
        assert_eq!((s.clients0, s.batch0), (2, 3));
    }

    #[test]
    fn cor3d_formula() {
        let extras = PresetExtras { epsilon: Some(1.0), g0: Some(100.0), ..Default::default() };
        let s = DistSchedule::preset(Preset::Cor3, 4, 25, 1.0, extras).unwrap();
        assert_eq!(s.clients0 * s.batch0, 100);
    }

    #[test]
    fn preset_names_parse() {
        for p in [Preset::Cor1, Preset::Cor2, Preset::Cor3, Preset::Custom] {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("cor9".parse::<Preset>().is_err());
    }
}
