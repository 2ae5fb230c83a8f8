//! Unit-suffixed config values.
//!
//! Every physical field is a string such as `"6.28 GHz"` or `"34 us"`.
//! Frequencies are ordinary ("/2π") values; the accessors return angular
//! quantities. A bare number is rejected, never read as Hz.

use std::fmt;
use std::marker::PhantomData;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use tlsbath::units::TWO_PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Hz,
    KHz,
    MHz,
    GHz,
    S,
    Ms,
    Us,
    Ns,
    PerHz,
    PerKHz,
    PerMHz,
    PerGHz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Frequency,
    Time,
    PerFrequency,
}

const ALL: [Unit; 12] = [
    Unit::Hz,
    Unit::KHz,
    Unit::MHz,
    Unit::GHz,
    Unit::S,
    Unit::Ms,
    Unit::Us,
    Unit::Ns,
    Unit::PerHz,
    Unit::PerKHz,
    Unit::PerMHz,
    Unit::PerGHz,
];

impl Unit {
    pub fn label(self) -> &'static str {
        match self {
            Unit::Hz => "Hz",
            Unit::KHz => "kHz",
            Unit::MHz => "MHz",
            Unit::GHz => "GHz",
            Unit::S => "s",
            Unit::Ms => "ms",
            Unit::Us => "us",
            Unit::Ns => "ns",
            Unit::PerHz => "/Hz",
            Unit::PerKHz => "/kHz",
            Unit::PerMHz => "/MHz",
            Unit::PerGHz => "/GHz",
        }
    }

    fn dim(self) -> Dim {
        match self {
            Unit::Hz | Unit::KHz | Unit::MHz | Unit::GHz => Dim::Frequency,
            Unit::S | Unit::Ms | Unit::Us | Unit::Ns => Dim::Time,
            _ => Dim::PerFrequency,
        }
    }

    /// Size of the unit in Hz, s or 1/Hz respectively.
    fn scale(self) -> f64 {
        match self {
            Unit::Hz | Unit::S | Unit::PerHz => 1.0,
            Unit::KHz => 1e3,
            Unit::MHz => 1e6,
            Unit::GHz => 1e9,
            Unit::Ms | Unit::PerKHz => 1e-3,
            Unit::Us | Unit::PerMHz => 1e-6,
            Unit::Ns | Unit::PerGHz => 1e-9,
        }
    }

    fn parse(s: &str) -> Option<Unit> {
        let s = s.replace(['µ', 'μ'], "u").to_ascii_lowercase();
        ALL.into_iter().find(|u| u.label().to_ascii_lowercase() == s)
    }
}

/// Which unit families a field accepts.
pub trait Kind {
    const WHAT: &'static str;
    fn accepts(unit: Unit) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrequencyKind;
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeKind;
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateKind;
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensityKind;

impl Kind for FrequencyKind {
    const WHAT: &'static str = "a frequency (Hz, kHz, MHz, GHz)";
    fn accepts(unit: Unit) -> bool {
        unit.dim() == Dim::Frequency
    }
}

impl Kind for TimeKind {
    const WHAT: &'static str = "a duration (s, ms, us, ns)";
    fn accepts(unit: Unit) -> bool {
        unit.dim() == Dim::Time
    }
}

impl Kind for RateKind {
    const WHAT: &'static str = "a rate as a frequency (Hz .. GHz) or a lifetime (s .. ns)";
    fn accepts(unit: Unit) -> bool {
        unit.dim() != Dim::PerFrequency
    }
}

impl Kind for DensityKind {
    const WHAT: &'static str = "a per-frequency value (/Hz, /kHz, /MHz, /GHz)";
    fn accepts(unit: Unit) -> bool {
        unit.dim() == Dim::PerFrequency
    }
}

/// A number with the unit it was written in.
pub struct Quantity<K> {
    pub value: f64,
    pub unit: Unit,
    kind: PhantomData<K>,
}

pub type Frequency = Quantity<FrequencyKind>;
pub type Duration = Quantity<TimeKind>;
pub type Rate = Quantity<RateKind>;
pub type Density = Quantity<DensityKind>;

impl<K> Clone for Quantity<K> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<K> Copy for Quantity<K> {}

impl<K> PartialEq for Quantity<K> {
    fn eq(&self, other: &Self) -> bool {
        self.value.to_bits() == other.value.to_bits() && self.unit == other.unit
    }
}

impl<K> fmt::Debug for Quantity<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<K> fmt::Display for Quantity<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.value.abs();
        if v != 0.0 && !(1e-4..1e9).contains(&v) {
            write!(f, "{:e} {}", self.value, self.unit.label())
        } else {
            write!(f, "{} {}", self.value, self.unit.label())
        }
    }
}

impl<K: Kind> Quantity<K> {
    pub fn new(value: f64, unit: Unit) -> Self {
        assert!(K::accepts(unit), "{} is not {}", unit.label(), K::WHAT);
        Self { value, unit, kind: PhantomData }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let text = text.trim();
        let split = number_end(text);
        if text[split..].trim().is_empty() {
            return Err(format!("missing unit suffix in {text:?}; expected {}", K::WHAT));
        }
        let (num, unit) = text.split_at(split);
        let value: f64 = num
            .trim()
            .parse()
            .map_err(|_| format!("{:?} is not a number", num.trim()))?;
        if !value.is_finite() {
            return Err(format!("{text:?} is not finite"));
        }
        let unit = Unit::parse(unit.trim())
            .ok_or_else(|| format!("unknown unit {:?}; expected {}", unit.trim(), K::WHAT))?;
        if !K::accepts(unit) {
            return Err(format!("unit {:?} is not {}", unit.label(), K::WHAT));
        }
        Ok(Self::new(value, unit))
    }
}

/// Byte length of the leading decimal literal in `s`.
fn number_end(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && matches!(b[i], b'+' | b'-') {
        i += 1;
    }
    while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
        i += 1;
    }
    if i < b.len() && matches!(b[i], b'e' | b'E') {
        let mut j = i + 1;
        if j < b.len() && matches!(b[j], b'+' | b'-') {
            j += 1;
        }
        if j < b.len() && b[j].is_ascii_digit() {
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

impl Frequency {
    /// Angular frequency (rad/s).
    pub fn angular(&self) -> f64 {
        TWO_PI * self.value * self.unit.scale()
    }

    #[cfg(test)]
    pub fn hz(&self) -> f64 {
        self.value * self.unit.scale()
    }
}

impl Duration {
    pub fn seconds(&self) -> f64 {
        self.value * self.unit.scale()
    }
}

impl Rate {
    /// `2π f` for a frequency, `1/τ` for a lifetime.
    pub fn rate(&self) -> f64 {
        match self.unit.dim() {
            Dim::Frequency => TWO_PI * self.value * self.unit.scale(),
            _ => 1.0 / (self.value * self.unit.scale()),
        }
    }
}

impl Density {
    /// Count per Hz of ordinary frequency.
    pub fn per_hz(&self) -> f64 {
        self.value * self.unit.scale()
    }
}

impl<K> Serialize for Quantity<K> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

struct QuantityVisitor<K>(PhantomData<K>);

impl<K: Kind> Visitor<'_> for QuantityVisitor<K> {
    type Value = Quantity<K>;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a string holding {} with its unit", K::WHAT)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
        Quantity::parse(v).map_err(E::custom)
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
        Err(E::custom(format!("missing unit suffix on {v}; expected {}", K::WHAT)))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
        Err(E::custom(format!("missing unit suffix on {v}; expected {}", K::WHAT)))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
        Err(E::custom(format!("missing unit suffix on {v}; expected {}", K::WHAT)))
    }
}

impl<'de, K: Kind> Deserialize<'de> for Quantity<K> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(QuantityVisitor(PhantomData))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_suffixes() {
        let close = |a: f64, b: f64| (a / b - 1.0).abs() < 1e-15;
        let f = Frequency::parse("6.28 GHz").unwrap();
        assert!(close(f.hz(), 6.28e9));
        assert_eq!(Frequency::parse("6.28ghz").unwrap(), f);
        assert!(close(Duration::parse("34 µs").unwrap().seconds(), 34e-6));
        assert_eq!(Duration::parse("1.5e-3 s").unwrap().seconds(), 1.5e-3);
        assert!(close(Duration::parse("-2E+1ns").unwrap().seconds(), -20e-9));
        assert!(close(Density::parse("20 /MHz").unwrap().per_hz(), 20e-6));
        assert!(close(Rate::parse("34 us").unwrap().rate(), 1.0 / 34e-6));
        assert!(close(Rate::parse("1 kHz").unwrap().rate(), TWO_PI * 1e3));
    }

    #[test]
    fn rejects_bad_units() {
        assert!(Frequency::parse("6.28e9").unwrap_err().contains("missing unit"));
        assert!(Frequency::parse("6.28").is_err());
        assert!(Frequency::parse("3 us").unwrap_err().contains("not a frequency"));
        assert!(Duration::parse("3 furlongs").unwrap_err().contains("unknown unit"));
        assert!(Rate::parse("2 /MHz").is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["6.28 GHz", "0.1 us", "1e-20 Hz", "123456789.125 kHz", "6.283185307179586 ns"] {
            let q = Rate::parse(s).unwrap();
            assert_eq!(Rate::parse(&q.to_string()).unwrap(), q);
        }
        let d = Density::parse("20 /mhz").unwrap();
        assert_eq!(d.to_string(), "20 /MHz");
        assert_eq!(Density::parse("5e-11 /MHz").unwrap().to_string(), "5e-11 /MHz");
    }
}
