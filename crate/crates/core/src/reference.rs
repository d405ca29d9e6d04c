//! Published HeH⁺/cc-pVDZ dissociation data used as the regression target.
//!
//! Columns: bond length (Å), CI occupation entropy, cumulant energy, HF,
//! CI and entropic-SCF (κ = 0.015, b = 0.03244) total energies, all in
//! hartree. Six decimals as published.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceRow {
    pub r_angstrom: f64,
    pub entropy: f64,
    pub e_cum: f64,
    pub e_hf: f64,
    pub e_ci: f64,
    pub e_idmft: f64,
}

const fn row(
    r_angstrom: f64,
    entropy: f64,
    e_cum: f64,
    e_hf: f64,
    e_ci: f64,
    e_idmft: f64,
) -> ReferenceRow {
    ReferenceRow {
        r_angstrom,
        entropy,
        e_cum,
        e_hf,
        e_ci,
        e_idmft,
    }
}

pub const HEH_PLUS_KAPPA: f64 = 0.015;
pub const HEH_PLUS_B: f64 = 0.03244;

pub const HEH_PLUS: [ReferenceRow; 14] = [
    row(0.40, 0.150975, -0.066769, -2.613107, -2.643258, -2.645547),
    row(0.50, 0.178110, -0.073258, -2.809079, -2.841901, -2.841519),
    row(0.60, 0.204076, -0.078466, -2.889631, -2.924526, -2.922072),
    row(0.70, 0.227434, -0.082393, -2.918503, -2.954909, -2.950943),
    row(0.80, 0.246080, -0.084944, -2.923532, -2.960888, -2.955972),
    row(0.90, 0.258079, -0.086032, -2.918065, -2.955797, -2.950506),
    row(1.00, 0.262753, -0.085802, -2.908716, -2.946316, -2.941156),
    row(1.25, 0.249292, -0.081863, -2.885203, -2.921216, -2.917643),
    row(1.50, 0.223434, -0.077492, -2.869870, -2.904148, -2.902311),
    row(1.75, 0.205242, -0.074961, -2.862084, -2.895344, -2.894524),
    row(2.00, 0.196277, -0.073826, -2.858529, -2.891332, -2.890969),
    row(2.50, 0.190328, -0.073105, -2.856088, -2.888605, -2.888528),
    row(3.00, 0.188979, -0.072941, -2.855461, -2.887913, -2.887896),
    row(4.00, 0.188581, -0.072894, -2.855214, -2.887648, -2.887648),
];

/// Bond lengths of [`HEH_PLUS`] in Å.
pub fn heh_plus_distances() -> Vec<f64> {
    HEH_PLUS.iter().map(|r| r.r_angstrom).collect()
}
