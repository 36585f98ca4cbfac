use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Bytes per transmitted parameter.
pub const BYTES_PER_PARAM: u64 = 8;

/// Size of one selected encoder for cost purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderCost {
    /// Leaves across all trees.
    pub params: u64,
    /// Covered classes `h_i`.
    pub classes: u64,
}

/// Inputs to the cost model, from a finished or hypothetical run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerInput {
    /// Clients chosen by data selection, `k`.
    pub selected_clients: u64,
    /// Sizes of every encoder uploaded in step one.
    pub uploaded_encoder_params: Vec<u64>,
    /// Encoders chosen for distribution, in order.
    pub selected_encoders: Vec<EncoderCost>,
    /// Encoding rows sent to the server.
    pub rows_uploaded: u64,
    /// Training budget `B_t`, reported only.
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCost {
    pub params: u64,
    pub bytes: u64,
}

impl PhaseCost {
    fn of(params: u64) -> Self {
        Self { params, bytes: params * BYTES_PER_PARAM }
    }
}

/// Exact parameter and byte counts for one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    pub upload_params: u64,
    pub download_params: u64,
    pub upload_bytes: u64,
    pub download_bytes: u64,
    pub encoder_upload: PhaseCost,
    pub encoding_upload: PhaseCost,
    pub encoder_download: PhaseCost,
    pub selected_clients: u64,
    pub selected_encoders: u64,
    /// Mean covered classes over selected encoders, `c_M`.
    pub mean_encoder_classes: f64,
    /// Encoding width `sum (h_i - 1)`.
    pub encoding_width: u64,
    pub rows_uploaded: u64,
    pub budget: Option<u64>,
    /// Communication rounds; the pipeline is single-shot.
    pub rounds: u64,
}

/// Upload = all uploaded encoders plus `rows * (width + 1)` (encodings and
/// a label per row). Download = every selected client receives every
/// selected encoder.
pub fn communication_ledger(input: &LedgerInput) -> CostLedger {
    let encoder_upload: u64 = input.uploaded_encoder_params.iter().sum();
    let width: u64 = input.selected_encoders.iter().map(|e| e.classes.saturating_sub(1)).sum();
    let encoding_upload = input.rows_uploaded * (width + 1);
    let selected_size: u64 = input.selected_encoders.iter().map(|e| e.params).sum();
    let download = input.selected_clients * selected_size;
    let m = input.selected_encoders.len() as u64;
    let mean_classes = if m == 0 {
        0.0
    } else {
        input.selected_encoders.iter().map(|e| e.classes).sum::<u64>() as f64 / m as f64
    };
    let upload = encoder_upload + encoding_upload;
    CostLedger {
        upload_params: upload,
        download_params: download,
        upload_bytes: upload * BYTES_PER_PARAM,
        download_bytes: download * BYTES_PER_PARAM,
        encoder_upload: PhaseCost::of(encoder_upload),
        encoding_upload: PhaseCost::of(encoding_upload),
        encoder_download: PhaseCost::of(download),
        selected_clients: input.selected_clients,
        selected_encoders: m,
        mean_encoder_classes: mean_classes,
        encoding_width: width,
        rows_uploaded: input.rows_uploaded,
        budget: input.budget,
        rounds: 1,
    }
}

impl CostLedger {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<18} {:>14} {:>16}", "phase", "params", "bytes");
        for (name, p) in [
            ("encoder upload", self.encoder_upload),
            ("encoding upload", self.encoding_upload),
            ("encoder download", self.encoder_download),
        ] {
            let _ = writeln!(s, "{:<18} {:>14} {:>16}", name, p.params, p.bytes);
        }
        let _ = writeln!(s, "{:<18} {:>14} {:>16}", "total upload", self.upload_params, self.upload_bytes);
        let _ = writeln!(s, "{:<18} {:>14} {:>16}", "total download", self.download_params, self.download_bytes);
        let _ = writeln!(
            s,
            "k={} M={} c_M={:.3} width={} rows={} budget={}",
            self.selected_clients,
            self.selected_encoders,
            self.mean_encoder_classes,
            self.encoding_width,
            self.rows_uploaded,
            self.budget.map_or("-".to_string(), |b| b.to_string())
        );
        s
    }
}
