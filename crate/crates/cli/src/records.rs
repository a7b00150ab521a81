//! Machine-readable output records. User indices and subsets are 1-based in
//! every record; symbol payloads are hex strings (four digits per symbol);
//! exact rationals are rendered as `num/den` strings.

use serde::Serialize;

#[derive(Serialize)]
pub struct ParamsRecord {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub q: u32,
    pub b: usize,
    pub variant: String,
}

#[derive(Serialize)]
pub struct PayloadRecord {
    /// The (t+1)-subset the signal serves, 1-based user indices.
    pub subset: Vec<usize>,
    /// Hex-encoded symbols, four digits per symbol.
    pub symbols: String,
}

/// One simulation round: everything needed to replay or verify it.
#[derive(Serialize)]
pub struct RunRecord {
    pub params: ParamsRecord,
    pub seed: u64,
    pub demands: Vec<Vec<u32>>,
    pub leaders: Vec<usize>,
    pub queries: Vec<Vec<u32>>,
    pub payload: Vec<PayloadRecord>,
    pub decoded_ok: bool,
    /// Exact load as `num/den`.
    pub measured_load: String,
}

#[derive(Serialize)]
pub struct AuditConfigRecord {
    pub scheme: String,
    pub n: usize,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    pub b: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<String>,
    /// `"all"` or an explicit list of 1-based colluder sets.
    pub colluders: String,
    pub budget: u64,
    pub file_realizations: usize,
}

#[derive(Serialize)]
pub struct SetRecord {
    /// Colluder set, 1-based.
    pub s: Vec<usize>,
    /// Largest total-variation distance across file realizations, `num/den`.
    pub tv_max: String,
    pub tv_max_float: f64,
    /// Mutual information in bits (largest across realizations).
    pub mi: f64,
}

#[derive(Serialize)]
pub struct WitnessRecord {
    /// Index of the file realization that produced the witness.
    pub realization: usize,
    pub s: Vec<usize>,
    pub free_users: Vec<usize>,
    /// Demand per free user (residue vectors for the privacy-key scheme,
    /// 1-based file indices for the baseline).
    pub demands_a: Vec<String>,
    pub demands_b: Vec<String>,
    pub tv: String,
}

#[derive(Serialize)]
pub struct AuditRecord {
    pub config: AuditConfigRecord,
    pub verdict: String,
    pub per_s: Vec<SetRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessRecord>,
}

#[derive(Serialize)]
pub struct GapRegimeRecord {
    pub regime: String,
    pub m_lo: f64,
    pub m_hi: f64,
    pub bound: f64,
    pub max_ratio: f64,
    pub argmax_m: f64,
    pub points: usize,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct GapRecord {
    pub n: usize,
    pub k: usize,
    pub variant: String,
    pub grid_step: f64,
    pub regimes: Vec<GapRegimeRecord>,
    pub overall_max: f64,
    pub pass: bool,
}
