//! Regenerates `data/dictionary.json`, the bundled set of 26 synthetic
//! acrylic-like pigments.
//!
//! Each pigment's absorption follows a smooth profile in `[0, 1]` (sigmoid
//! edges or Gaussian bands) scaled between a low and a high value; scattering
//! is a gentle linear tilt around a base level.
//!
//! ```sh
//! cargo run -p pigment-core --example gen_dictionary > crates/core/data/dictionary.json
//! ```

use pigment_core::dictionary::{DictionaryEntry, PigmentDictionary};
use pigment_core::PigmentKm;

fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn gauss(w: f64, c: f64, width: f64) -> f64 {
    (-0.5 * ((w - c) / width).powi(2)).exp()
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

type Profile = fn(f64) -> f64;

#[rustfmt::skip]
const PIGMENTS: [(&str, Profile, f64, f64, f64, f64); 26] = [
    ("titanium_white",       |w| 0.5 * sig((400.0 - w) / 10.0),                               0.03, 0.6, 1.00, -0.2),
    ("ivory_black",          |_| 1.0,                                                         0.0,  7.0, 0.25,  0.0),
    ("payne_gray",           |w| 0.75 + 0.25 * sig((w - 520.0) / 30.0),                       0.2,  3.0, 0.45,  0.0),
    ("lemon_yellow",         |w| sig((480.0 - w) / 12.0),                                     0.05, 6.0, 0.80,  0.1),
    ("cadmium_yellow",       |w| sig((505.0 - w) / 12.0),                                     0.05, 7.0, 0.75,  0.1),
    ("yellow_ochre",         |w| sig((530.0 - w) / 25.0),                                     0.4,  4.0, 0.55,  0.2),
    ("cadmium_orange",       |w| sig((570.0 - w) / 12.0),                                     0.05, 8.0, 0.70,  0.1),
    ("cadmium_red",          |w| sig((605.0 - w) / 10.0),                                     0.08, 8.0, 0.65,  0.1),
    ("naphthol_crimson",     |w| 0.9 * sig((615.0 - w) / 12.0) + 0.1 * gauss(w, 420.0, 20.0), 0.1,  6.0, 0.35,  0.1),
    ("quinacridone_magenta", |w| gauss(w, 545.0, 45.0),                                       0.15, 6.5, 0.30,  0.0),
    ("dioxazine_purple",     |w| gauss(w, 560.0, 55.0) + 0.3 * sig((w - 650.0) / 10.0),       0.2,  8.0, 0.20, -0.1),
    ("ultramarine_blue",     |w| sig((w - 485.0) / 15.0) * (1.0 - 0.35 * sig((w - 660.0) / 15.0)), 0.1, 6.0, 0.30, -0.2),
    ("cobalt_blue",          |w| sig((w - 495.0) / 18.0),                                     0.1,  3.5, 0.45, -0.2),
    ("phthalo_blue",         |w| sig((w - 530.0) / 15.0) * (1.0 - 0.2 * gauss(w, 680.0, 20.0)) + 0.15 * gauss(w, 390.0, 15.0), 0.08, 7.5, 0.25, -0.1),
    ("cerulean_blue",        |w| sig((w - 540.0) / 20.0),                                     0.15, 3.0, 0.55,  0.0),
    ("phthalo_green",        |w| 1.0 - gauss(w, 510.0, 32.0),                                 0.1,  8.0, 0.25,  0.0),
    ("viridian",             |w| 1.0 - gauss(w, 505.0, 40.0),                                 0.2,  4.5, 0.35,  0.0),
    ("sap_green",            |w| 1.0 - 0.9 * gauss(w, 550.0, 40.0),                           0.3,  6.0, 0.30,  0.1),
    ("chromium_oxide_green", |w| 1.0 - 0.8 * gauss(w, 545.0, 45.0),                           0.5,  3.0, 0.70,  0.0),
    ("burnt_sienna",         |w| sig((610.0 - w) / 40.0),                                     0.4,  5.0, 0.40,  0.3),
    ("raw_umber",            |w| sig((600.0 - w) / 60.0),                                     1.2,  5.0, 0.45,  0.2),
    ("burnt_umber",          |w| sig((620.0 - w) / 50.0),                                     1.5,  6.0, 0.35,  0.2),
    ("turquoise",            |w| sig((w - 580.0) / 15.0) + 0.4 * sig((430.0 - w) / 12.0),     0.1,  5.0, 0.45,  0.0),
    ("process_cyan",         |w| sig((w - 575.0) / 12.0),                                     0.05, 7.0, 0.50,  0.0),
    ("process_magenta",      |w| gauss(w, 540.0, 38.0),                                       0.05, 7.0, 0.50,  0.0),
    ("process_yellow",       |w| sig((495.0 - w) / 10.0),                                     0.05, 7.0, 0.50,  0.0),
];

fn main() {
    let entries = PIGMENTS
        .iter()
        .map(|&(name, profile, a_lo, a_hi, s_base, tilt)| {
            let (a, s) = (0..33)
                .map(|i| {
                    let w = 380.0 + 10.0 * i as f64;
                    let a = a_lo + (a_hi - a_lo) * profile(w).clamp(0.0, 1.0);
                    let s = s_base * (1.0 + tilt * (w - 540.0) / 160.0);
                    (round6(a).max(1e-6), round6(s))
                })
                .unzip();
            DictionaryEntry {
                name: name.to_string(),
                pigment: PigmentKm { a, s },
            }
        })
        .collect();
    let dict = PigmentDictionary::new(entries).expect("generated pigments are valid");
    println!("{}", dict.to_json());
}
