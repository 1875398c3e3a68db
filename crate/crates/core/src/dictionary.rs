//! Pigment dictionaries: named KM pigments on the 33-sample grid.
//!
//! On disk a dictionary is a JSON manifest:
//!
//! ```json
//! { "version": 1,
//!   "wavelengths_nm": [380, 390, ..., 700],
//!   "pigments": [ { "name": "titanium_white", "a": [...33], "s": [...33] } ] }
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{downsample_pigment, render_pigment, PigmentKm, RenderContext, Rgb, WavelengthGrid};

const BUNDLED: &str = include_str!("../data/dictionary.json");
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryEntry {
    pub name: String,
    /// Coefficients on the 33-sample grid.
    pub pigment: PigmentKm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PigmentDictionary {
    entries: Vec<DictionaryEntry>,
}

#[derive(Serialize, Deserialize)]
struct DictionaryFile {
    version: u32,
    wavelengths_nm: Vec<f64>,
    pigments: Vec<PigmentRecord>,
}

#[derive(Serialize, Deserialize)]
struct PigmentRecord {
    name: String,
    a: Vec<f64>,
    s: Vec<f64>,
}

impl PigmentDictionary {
    pub fn new(entries: Vec<DictionaryEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Dictionary("dictionary has no pigments".into()));
        }
        for e in &entries {
            if e.pigment.len() != WavelengthGrid::Full.len() {
                return Err(Error::Dictionary(format!(
                    "pigment {} has {} wavelengths, expected 33",
                    e.name,
                    e.pigment.len()
                )));
            }
            e.pigment
                .validate()
                .map_err(|err| Error::Dictionary(format!("pigment {}: {err}", e.name)))?;
        }
        Ok(Self { entries })
    }

    /// The 26 synthetic pigments shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED).expect("bundled dictionary is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DictionaryFile =
            serde_json::from_str(text).map_err(|e| Error::Dictionary(e.to_string()))?;
        if file.version != FORMAT_VERSION {
            return Err(Error::Dictionary(format!("unsupported version {}", file.version)));
        }
        let expected = WavelengthGrid::Full.centers();
        if file.wavelengths_nm != expected {
            return Err(Error::Dictionary(
                "wavelengths_nm must list 380..700 nm in 10 nm steps".into(),
            ));
        }
        let entries = file
            .pigments
            .into_iter()
            .map(|r| DictionaryEntry {
                name: r.name,
                pigment: PigmentKm { a: r.a, s: r.s },
            })
            .collect();
        Self::new(entries)
    }

    pub fn to_json(&self) -> String {
        let file = DictionaryFile {
            version: FORMAT_VERSION,
            wavelengths_nm: WavelengthGrid::Full.centers(),
            pigments: self
                .entries
                .iter()
                .map(|e| PigmentRecord {
                    name: e.name.clone(),
                    a: e.pigment.a.clone(),
                    s: e.pigment.s.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("dictionary serialises")
    }

    pub fn entries(&self) -> &[DictionaryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&DictionaryEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Drop the named pigments (hold-out experiments).
    pub fn without(&self, names: &[&str]) -> Result<Self> {
        Self::new(
            self.entries
                .iter()
                .filter(|e| !names.contains(&e.name.as_str()))
                .cloned()
                .collect(),
        )
    }

    /// The dictionary plus every 50/50 mixture of two distinct entries:
    /// `n + n(n−1)/2` entries.
    pub fn augmented(&self) -> Self {
        let mut entries = self.entries.clone();
        for i in 0..self.entries.len() {
            for j in i + 1..self.entries.len() {
                let (p, q) = (&self.entries[i], &self.entries[j]);
                let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| 0.5 * (u + v)).collect();
                entries.push(DictionaryEntry {
                    name: format!("{}+{}", p.name, q.name),
                    pigment: PigmentKm {
                        a: mix(&p.pigment.a, &q.pigment.a),
                        s: mix(&p.pigment.s, &q.pigment.s),
                    },
                });
            }
        }
        Self { entries }
    }

    /// Entry `i` resampled onto `grid`.
    pub fn pigment_on(&self, i: usize, grid: WavelengthGrid) -> Result<PigmentKm> {
        downsample_pigment(&self.entries[i].pigment, WavelengthGrid::Full, grid)
    }

    /// Swatch colour of every entry rendered in `ctx` (after resampling to its grid).
    pub fn rendered(&self, ctx: &RenderContext) -> Result<Vec<Rgb>> {
        (0..self.len())
            .map(|i| render_pigment(&self.pigment_on(i, ctx.grid())?, ctx))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_has_26_and_351_augmented() {
        let d = PigmentDictionary::bundled();
        assert_eq!(d.len(), 26);
        assert_eq!(d.augmented().len(), 351);
        let held = d
            .without(&["process_cyan", "process_magenta", "process_yellow", "ivory_black", "titanium_white"])
            .unwrap();
        assert_eq!(held.len(), 21);
        assert_eq!(held.augmented().len(), 231);
    }

    #[test]
    fn json_round_trip() {
        let d = PigmentDictionary::bundled();
        let back = PigmentDictionary::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn loader_rejects_bad_pigments() {
        let grid: Vec<f64> = WavelengthGrid::Full.centers();
        let good = |a: f64| serde_json::json!({"name": "x", "a": vec![a; 33], "s": vec![0.5; 33]});
        let doc = |p: serde_json::Value| {
            serde_json::json!({"version": 1, "wavelengths_nm": grid, "pigments": [p]}).to_string()
        };
        assert!(PigmentDictionary::from_json(&doc(good(1.0))).is_ok());
        assert!(PigmentDictionary::from_json(&doc(good(0.0))).is_err());
        assert!(PigmentDictionary::from_json(&doc(good(-1.0))).is_err());
        let short = serde_json::json!({"name": "x", "a": vec![1.0; 32], "s": vec![0.5; 32]});
        assert!(PigmentDictionary::from_json(&doc(short)).is_err());
        let empty = serde_json::json!({"version": 1, "wavelengths_nm": grid, "pigments": []});
        assert!(PigmentDictionary::from_json(&empty.to_string()).is_err());
    }
}
