//! Propeller blade geometry: radius, blade count, spin direction, and
//! tabulated pitch/chord distributions over span fraction.

use serde::{Deserialize, Serialize};

use super::AirfoilParams;

/// Spin direction about the rotor +z axis: +1 counter-clockwise, -1 clockwise.
pub type SpinDirection = i8;

/// Blade geometry plus the airfoil parameter set.
///
/// Pitch and chord are tabulated against span fraction and interpolated
/// linearly. Tables must be strictly increasing in span fraction and cover
/// `[root_cutoff, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropellerModel {
    /// Rotor radius (m).
    pub radius: f64,
    /// Number of blades.
    pub blade_count: u32,
    /// Span fractions of the geometry table, strictly increasing.
    pub stations: Vec<f64>,
    /// Blade pitch angle at each station (rad).
    pub pitch: Vec<f64>,
    /// Blade chord at each station (m).
    pub chord: Vec<f64>,
    /// Blade elements below this span fraction are skipped (hub region).
    pub root_cutoff: f64,
    /// +1 CCW, -1 CW about the rotor +z axis.
    pub spin_direction: SpinDirection,
    pub airfoil: AirfoilParams,
}

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("geometry table needs at least 2 stations")]
    TooFewStations,
    #[error("span fractions must be strictly increasing")]
    NotMonotone,
    #[error("geometry table must cover [{0}, 1], got [{1}, {2}]")]
    Coverage(f64, f64, f64),
    #[error("negative chord at station {0}")]
    NegativeChord(usize),
    #[error("csv parse error: {0}")]
    Csv(String),
}

impl PropellerModel {
    /// Built-in APC 8x6 fixture: radius 0.1016 m, 2 blades, geometric pitch
    /// law and a tabulated chord distribution.
    pub fn apc_8x6(spin_direction: SpinDirection, airfoil: AirfoilParams) -> Self {
        static APC_CSV: &str = include_str!("../../data/apc_8x6.csv");
        Self::from_csv_str(APC_CSV, 0.1016, 2, spin_direction, airfoil)
            .expect("built-in geometry table is valid")
    }

    /// Parse a geometry table with columns `span_fraction,chord_m,pitch_rad`.
    pub fn from_csv_str(
        text: &str,
        radius: f64,
        blade_count: u32,
        spin_direction: SpinDirection,
        airfoil: AirfoilParams,
    ) -> Result<Self, GeometryError> {
        let mut stations = Vec::new();
        let mut chord = Vec::new();
        let mut pitch = Vec::new();
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        for rec in rdr.records() {
            let rec = rec.map_err(|e| GeometryError::Csv(e.to_string()))?;
            let parse = |i: usize| -> Result<f64, GeometryError> {
                rec.get(i)
                    .ok_or_else(|| GeometryError::Csv(format!("missing column {i}")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| GeometryError::Csv(e.to_string()))
            };
            stations.push(parse(0)?);
            chord.push(parse(1)?);
            pitch.push(parse(2)?);
        }
        let model = Self {
            radius,
            blade_count,
            stations,
            pitch,
            chord,
            root_cutoff: 0.1,
            spin_direction,
            airfoil,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.stations.len() < 2 {
            return Err(GeometryError::TooFewStations);
        }
        if !self.stations.windows(2).all(|w| w[1] > w[0]) {
            return Err(GeometryError::NotMonotone);
        }
        let (lo, hi) = (self.stations[0], *self.stations.last().unwrap());
        if lo > self.root_cutoff + 1e-9 || hi < 1.0 - 1e-9 {
            return Err(GeometryError::Coverage(self.root_cutoff, lo, hi));
        }
        if let Some(i) = self.chord.iter().position(|&c| c < 0.0) {
            return Err(GeometryError::NegativeChord(i));
        }
        assert!(self.radius > 0.0 && self.blade_count >= 2, "invalid rotor");
        Ok(())
    }

    /// Linear interpolation of (pitch, chord) at span fraction `f`.
    pub fn section(&self, f: f64) -> (f64, f64) {
        let s = &self.stations;
        let f = f.clamp(s[0], *s.last().unwrap());
        // tables are short (tens of entries); linear scan is fine
        let mut i = 0;
        while i + 2 < s.len() && f > s[i + 1] {
            i += 1;
        }
        let t = (f - s[i]) / (s[i + 1] - s[i]);
        (
            self.pitch[i] + t * (self.pitch[i + 1] - self.pitch[i]),
            self.chord[i] + t * (self.chord[i + 1] - self.chord[i]),
        )
    }

    /// Disk area (m^2).
    pub fn disk_area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    /// Same geometry with the opposite spin direction.
    pub fn mirrored(&self) -> Self {
        let mut p = self.clone();
        p.spin_direction = -p.spin_direction;
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_table_loads() {
        let p = PropellerModel::apc_8x6(1, AirfoilParams::ground_truth());
        assert_eq!(p.blade_count, 2);
        let (pitch_75, chord_75) = p.section(0.75);
        // geometric pitch law at 75% span
        let expect = (0.1524f64 / (2.0 * std::f64::consts::PI * 0.75 * 0.1016)).atan();
        assert!((pitch_75 - expect).abs() < 1e-4);
        assert!(chord_75 > 0.01 && chord_75 < 0.02);
    }

    #[test]
    fn section_clamps_outside_table() {
        let p = PropellerModel::apc_8x6(1, AirfoilParams::ground_truth());
        assert_eq!(p.section(0.0), p.section(0.10));
        assert_eq!(p.section(1.5), p.section(1.0));
    }

    #[test]
    fn rejects_non_monotone_table() {
        let text = "span_fraction,chord_m,pitch_rad\n0.1,0.01,0.5\n0.05,0.01,0.4\n1.0,0.01,0.2\n";
        let err = PropellerModel::from_csv_str(text, 0.1, 2, 1, AirfoilParams::ground_truth());
        assert!(matches!(err, Err(GeometryError::NotMonotone)));
    }

    #[test]
    fn rejects_partial_coverage() {
        let text = "span_fraction,chord_m,pitch_rad\n0.1,0.01,0.5\n0.6,0.01,0.2\n";
        let err = PropellerModel::from_csv_str(text, 0.1, 2, 1, AirfoilParams::ground_truth());
        assert!(matches!(err, Err(GeometryError::Coverage(..))));
    }
}
