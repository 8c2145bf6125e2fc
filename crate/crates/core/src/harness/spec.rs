//! Estimator specifications: `<estimator>/<bandwidth>/<critical value>`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LrvError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorName {
    DkHac,
    HacQs,
    Nw,
    Ewc,
}

impl EstimatorName {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorName::DkHac => "dk-hac",
            EstimatorName::HacQs => "hac-qs",
            EstimatorName::Nw => "nw",
            EstimatorName::Ewc => "ewc",
        }
    }
}

impl FromStr for EstimatorName {
    type Err = LrvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dk-hac" => Ok(EstimatorName::DkHac),
            "hac-qs" => Ok(EstimatorName::HacQs),
            "nw" => Ok(EstimatorName::Nw),
            "ewc" => Ok(EstimatorName::Ewc),
            _ => Err(LrvError::Config(format!("unknown estimator '{s}' (dk-hac, hac-qs, nw, ewc)"))),
        }
    }
}

/// Bandwidth selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BandwidthRule {
    JointPlugin,
    Andrews,
    Nw94,
    /// Fixed `(b1, b2)`; `b2` is ignored by single-bandwidth estimators.
    Fixed(f64, f64),
    /// Lag truncation `M = bT`.
    FixedB(f64),
    /// Default rule for EWC: `B = floor(0.4 T^{2/3})`.
    Auto,
    /// EWC with a given number of cosine terms.
    Terms(usize),
}

impl fmt::Display for BandwidthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthRule::JointPlugin => f.write_str("joint-plugin"),
            BandwidthRule::Andrews => f.write_str("andrews"),
            BandwidthRule::Nw94 => f.write_str("nw94"),
            BandwidthRule::Fixed(a, b) => write!(f, "fixed:{a},{b}"),
            BandwidthRule::FixedB(b) => write!(f, "fixed-b:{b}"),
            BandwidthRule::Auto => f.write_str("auto"),
            BandwidthRule::Terms(n) => write!(f, "terms:{n}"),
        }
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite() && *v > 0.0 && *v <= 1.0)
        .ok_or_else(|| LrvError::Config(format!("{what}: '{s}' is not a number in (0, 1]")))
}

impl FromStr for BandwidthRule {
    type Err = LrvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint-plugin" => return Ok(BandwidthRule::JointPlugin),
            "andrews" => return Ok(BandwidthRule::Andrews),
            "nw94" => return Ok(BandwidthRule::Nw94),
            "auto" => return Ok(BandwidthRule::Auto),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("fixed-b:") {
            return Ok(BandwidthRule::FixedB(parse_f64(rest, "fixed-b")?));
        }
        if let Some(rest) = s.strip_prefix("fixed:") {
            let mut parts = rest.split(',');
            let b1 = parse_f64(parts.next().unwrap_or(""), "fixed b1")?;
            let b2 = match parts.next() {
                Some(v) => parse_f64(v, "fixed b2")?,
                None => 1.0,
            };
            if parts.next().is_some() {
                return Err(LrvError::Config(format!("bandwidth '{s}' has too many fields")));
            }
            return Ok(BandwidthRule::Fixed(b1, b2));
        }
        if let Some(rest) = s.strip_prefix("terms:") {
            return rest
                .parse::<usize>()
                .ok()
                .filter(|n| *n > 0)
                .map(BandwidthRule::Terms)
                .ok_or_else(|| LrvError::Config(format!("bad term count in '{s}'")));
        }
        Err(LrvError::Config(format!(
            "unknown bandwidth '{s}' (joint-plugin, andrews, nw94, fixed:<b1>,<b2>, fixed-b:<b>, auto, terms:<B>)"
        )))
    }
}

/// Reference distribution for the test decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CvRule {
    Normal,
    Student,
    FixedB,
}

impl CvRule {
    pub fn name(self) -> &'static str {
        match self {
            CvRule::Normal => "normal",
            CvRule::Student => "student",
            CvRule::FixedB => "fixedb",
        }
    }
}

impl FromStr for CvRule {
    type Err = LrvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(CvRule::Normal),
            "student" => Ok(CvRule::Student),
            "fixedb" | "fixed-b" => Ok(CvRule::FixedB),
            _ => Err(LrvError::Config(format!("unknown critical value rule '{s}' (normal, student, fixedb)"))),
        }
    }
}

/// A complete test recipe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSpec {
    pub estimator: EstimatorName,
    pub bandwidth: BandwidthRule,
    pub cv: CvRule,
}

impl EstimatorSpec {
    pub fn new(estimator: EstimatorName, bandwidth: BandwidthRule, cv: CvRule) -> Result<Self> {
        let spec = Self { estimator, bandwidth, cv };
        spec.validate()?;
        Ok(spec)
    }

    fn default_bandwidth(e: EstimatorName) -> BandwidthRule {
        match e {
            EstimatorName::DkHac => BandwidthRule::JointPlugin,
            EstimatorName::HacQs => BandwidthRule::Andrews,
            EstimatorName::Nw => BandwidthRule::Nw94,
            EstimatorName::Ewc => BandwidthRule::Auto,
        }
    }

    fn default_cv(e: EstimatorName, bw: BandwidthRule) -> CvRule {
        match (e, bw) {
            (EstimatorName::Ewc, _) => CvRule::Student,
            (_, BandwidthRule::FixedB(_)) => CvRule::FixedB,
            _ => CvRule::Normal,
        }
    }

    fn validate(&self) -> Result<()> {
        use BandwidthRule as B;
        use EstimatorName as E;
        let ok_bw = matches!(
            (self.estimator, self.bandwidth),
            (E::DkHac, B::JointPlugin | B::Fixed(..))
                | (E::HacQs, B::Andrews | B::Fixed(..) | B::FixedB(_))
                | (E::Nw, B::Nw94 | B::Fixed(..) | B::FixedB(_))
                | (E::Ewc, B::Auto | B::Terms(_))
        );
        if !ok_bw {
            return Err(LrvError::Config(format!(
                "bandwidth '{}' does not apply to estimator '{}'",
                self.bandwidth,
                self.estimator.name()
            )));
        }
        let ok_cv = match self.cv {
            CvRule::Normal => true,
            CvRule::Student => self.estimator == E::Ewc,
            CvRule::FixedB => matches!(self.bandwidth, B::FixedB(_)),
        };
        if !ok_cv {
            return Err(LrvError::Config(format!(
                "critical value '{}' does not apply to '{}/{}'",
                self.cv.name(),
                self.estimator.name(),
                self.bandwidth
            )));
        }
        Ok(())
    }

    /// Canonical `<estimator>/<bandwidth>/<cv>` label.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.estimator.name(), self.bandwidth, self.cv.name())
    }
}

impl FromStr for EstimatorSpec {
    type Err = LrvError;

    /// Missing parts take per-estimator defaults, so `"nw"` means
    /// `"nw/nw94/normal"` and `"nw/fixed-b:1"` means `"nw/fixed-b:1/fixedb"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split('/').collect();
        if parts.is_empty() || parts.len() > 3 {
            return Err(LrvError::Config(format!("bad estimator spec '{s}'")));
        }
        let estimator: EstimatorName = parts[0].parse()?;
        let bandwidth = match parts.get(1) {
            Some(b) => b.parse()?,
            None => Self::default_bandwidth(estimator),
        };
        let cv = match parts.get(2) {
            Some(c) => c.parse()?,
            None => Self::default_cv(estimator, bandwidth),
        };
        Self::new(estimator, bandwidth, cv)
    }
}

impl Serialize for EstimatorSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for EstimatorSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let cases = [
            ("dk-hac", "dk-hac/joint-plugin/normal"),
            ("nw", "nw/nw94/normal"),
            ("nw/fixed-b:1", "nw/fixed-b:1/fixedb"),
            ("ewc", "ewc/auto/student"),
            ("hac-qs", "hac-qs/andrews/normal"),
            ("dk-hac/fixed:0.1,0.3", "dk-hac/fixed:0.1,0.3/normal"),
        ];
        for (input, label) in cases {
            let spec: EstimatorSpec = input.parse().unwrap();
            assert_eq!(spec.label(), label);
            assert_eq!(label.parse::<EstimatorSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn rejects_mismatches() {
        for bad in ["dk-hac/nw94", "ewc/joint-plugin", "nw/nw94/fixedb", "nw/fixed-b:0", "foo", "dk-hac/fixed:2,0.1"] {
            assert!(bad.parse::<EstimatorSpec>().is_err(), "{bad}");
        }
    }
}
